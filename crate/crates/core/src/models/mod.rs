//! Manipulation models, the perturbation generator and their parameters.

mod checkpoint;
mod params;
mod spec;
mod toy;
mod unet;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use params::{Arch, Conditioning, ModelParams};
pub use spec::{companion_image, toy_blend_model, toy_recon_model, identity_model, Arity, ManipulationSpec, BLUE, WHITE};
pub use toy::TOY_HIDDEN;
pub use unet::{apply_protection, depth_for, protect_graph, unet_generator};
