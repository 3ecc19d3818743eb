use crate::error::{Error, Result};

/// Baseline luminance table (JPEG Annex K), natural row-major order.
pub const BASE_LUMA: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Baseline chrominance table (JPEG Annex K).
pub const BASE_CHROMA: [u16; 64] = [
    17, 18, 24, 47, 99, 99, 99, 99, //
    18, 21, 26, 66, 99, 99, 99, 99, //
    24, 26, 56, 99, 99, 99, 99, 99, //
    47, 66, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99, //
    99, 99, 99, 99, 99, 99, 99, 99,
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantTables {
    pub luma: [u16; 64],
    pub chroma: [u16; 64],
}

impl QuantTables {
    pub fn new(luma: [u16; 64], chroma: [u16; 64]) -> Result<Self> {
        if luma.iter().chain(&chroma).any(|&q| q == 0) {
            return Err(Error::InvalidArgument("quantization table entries must be >= 1".into()));
        }
        Ok(Self { luma, chroma })
    }
}

fn scale_table(base: &[u16; 64], scale: u32) -> [u16; 64] {
    base.map(|b| ((b as u32 * scale + 50) / 100).clamp(1, 255) as u16)
}

/// IJG quality scaling of the Annex K tables.
pub fn quality_to_tables(quality: u8) -> Result<QuantTables> {
    if !(1..=99).contains(&quality) {
        return Err(Error::InvalidArgument(format!("quality {quality} outside 1..=99")));
    }
    let q = quality as u32;
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    QuantTables::new(scale_table(&BASE_LUMA, scale), scale_table(&BASE_CHROMA, scale))
}
