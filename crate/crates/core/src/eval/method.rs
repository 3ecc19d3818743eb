use rayon::prelude::*;

use crate::attacks::{ifgsm, ipgd, AttackConfig, GlobalPerturbation};
use crate::error::Result;
use crate::models::{apply_protection, ManipulationSpec, ModelParams};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// A way of producing a protected image.
#[derive(Clone, Debug)]
pub enum Method<'a, F> {
    /// No protection.
    Clean,
    Ifgsm(AttackConfig),
    Ipgd(AttackConfig),
    Global(&'a GlobalPerturbation<F>),
    Generator { params: &'a ModelParams<F>, global: Option<&'a GlobalPerturbation<F>>, epsilon: f64 },
}

impl<F: Scalar> Method<'_, F> {
    pub fn id(&self) -> &'static str {
        match self {
            Method::Clean => "clean",
            Method::Ifgsm(_) => "ifgsm",
            Method::Ipgd(_) => "ipgd",
            Method::Global(_) => "global",
            Method::Generator { global: Some(_), .. } => "generator",
            Method::Generator { global: None, .. } => "generator-image-only",
        }
    }

    pub fn protect(&self, spec: &ManipulationSpec<F>, img: &Tensor<F>) -> Result<Tensor<F>> {
        match self {
            Method::Clean => Ok(img.clone()),
            Method::Ifgsm(cfg) => Ok(ifgsm(spec, img, cfg)?.protected),
            Method::Ipgd(cfg) => Ok(ipgd(spec, img, cfg)?.protected),
            Method::Global(gp) => gp.apply(img),
            Method::Generator { params, global, epsilon } => {
                Ok(apply_protection(params, img, global.map(|g| &g.delta), *epsilon)?.1)
            }
        }
    }
}

/// Protects every image; images are processed in parallel, results keep corpus order.
pub fn protect_corpus<F: Scalar>(
    method: &Method<'_, F>,
    spec: &ManipulationSpec<F>,
    corpus: &[Tensor<F>],
) -> Result<Vec<Tensor<F>>> {
    corpus.par_iter().map(|img| method.protect(spec, img)).collect()
}
