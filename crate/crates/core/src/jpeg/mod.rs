//! JPEG pixel pipeline with pluggable rounding.
//!
//! With [`RoundMode::TrueRound`] the pipeline is the reference codec used for
//! evaluation (entropy coding is lossless and omitted). Any other mode turns it
//! into a differentiable surrogate that can sit inside a training graph.

mod color;
mod dct;
mod pipeline;
mod quantize;
mod tables;

pub use color::{rgb_to_ycbcr, ycbcr_to_rgb, RGB_TO_YCBCR, YCBCR_OFFSET};
pub use dct::{dct8x8, dct_matrix, idct8x8};
pub use pipeline::{
    chroma_subsample, chroma_upsample, jpeg_pipeline, roundtrip, roundtrip_unit, JpegConfig,
    Subsampling,
};
pub use quantize::{dequantize, quantize, RoundMode};
pub use tables::{quality_to_tables, QuantTables, BASE_CHROMA, BASE_LUMA};

/// Block split/merge re-exported from the tensor layer.
pub use crate::autodiff::spatial::{block_merge, block_split};
