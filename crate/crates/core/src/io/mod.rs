//! Image files, the synthetic corpus and run configuration files.

mod config;
mod ppm;
mod synth;

pub use config::{parse_key_values, ConfigFile};
pub use ppm::{decode_ppm, encode_ppm, load_image, save_image};
pub use synth::{synth_corpus, synth_image, write_corpus};
