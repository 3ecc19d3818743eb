//! Binary PPM (P6, maxval 255).

use std::fs;
use std::path::Path;

use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn malformed(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format { kind: "PPM", path: path.to_path_buf(), detail: detail.into() }
}

/// Reads the next header token, skipping whitespace and `#` comments.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

/// Decodes P6 bytes into a `[1, 3, h, w]` tensor in `[0, 1]`.
pub fn decode_ppm<F: Scalar>(bytes: &[u8], path: &Path) -> Result<Tensor<F>> {
    let mut pos = 0;
    if token(bytes, &mut pos) != Some(b"P6") {
        return Err(malformed(path, "missing P6 magic"));
    }
    let mut num = |what: &str| -> Result<usize> {
        let t = token(bytes, &mut pos).ok_or_else(|| malformed(path, format!("missing {what}")))?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(path, format!("bad {what}")))
    };
    let w = num("width")?;
    let h = num("height")?;
    let maxval = num("maxval")?;
    if maxval != 255 {
        return Err(malformed(path, format!("unsupported maxval {maxval}")));
    }
    if w == 0 || h == 0 {
        return Err(malformed(path, "empty image"));
    }
    // exactly one whitespace byte separates the header from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed(path, "truncated header"));
    }
    let payload = &bytes[pos + 1..];
    let need = w * h * 3;
    if payload.len() < need {
        return Err(malformed(path, format!("payload has {} of {need} bytes", payload.len())));
    }
    if payload.len() > need {
        return Err(malformed(path, format!("{} trailing bytes", payload.len() - need)));
    }
    let plane = w * h;
    Ok(Tensor::from_fn(&[1, 3, h, w], |i| {
        let (c, p) = (i / plane, i % plane);
        F::lit(payload[p * 3 + c] as f64 / 255.0)
    }))
}

/// Encodes a `[1, 3, h, w]` tensor, rounding `255 * v` to the nearest byte.
pub fn encode_ppm<F: Scalar>(img: &Tensor<F>) -> Result<Vec<u8>> {
    let (n, c, h, w) = img.dims4()?;
    if n != 1 || c != 3 {
        return shape_err("encode_ppm", format!("expected [1, 3, h, w], got {:?}", img.shape()));
    }
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    let plane = w * h;
    for p in 0..plane {
        for ch in 0..3 {
            let v = img.data()[ch * plane + p].as_f64();
            out.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

pub fn load_image<F: Scalar>(path: &Path) -> Result<Tensor<F>> {
    decode_ppm(&fs::read(path)?, path)
}

pub fn save_image<F: Scalar>(img: &Tensor<F>, path: &Path) -> Result<()> {
    fs::write(path, encode_ppm(img)?)?;
    Ok(())
}
