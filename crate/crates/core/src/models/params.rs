use std::collections::BTreeMap;

use sha2::{Digest, Sha256};

use super::{toy, unet};
use crate::autodiff::{Graph, Var};
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// What the generator sees besides the image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Conditioning {
    /// Image and global perturbation, concatenated to six channels.
    ImageAndGlobal,
    /// Image alone, three channels.
    ImageOnly,
}

impl Conditioning {
    pub fn in_channels(self) -> usize {
        match self {
            Self::ImageAndGlobal => 6,
            Self::ImageOnly => 3,
        }
    }

    fn key(self) -> &'static str {
        match self {
            Self::ImageAndGlobal => "image+global",
            Self::ImageOnly => "image",
        }
    }
}

/// Architecture descriptor; determines parameter names and shapes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arch {
    /// `f(x) = x`, no parameters.
    Identity,
    /// Small strided encoder-decoder used as a stand-in manipulation model.
    Toy { in_channels: usize, hidden: usize },
    /// U-Net perturbation generator.
    UNet { base_width: usize, depth: usize, conditioning: Conditioning },
    /// A single stored image-shaped tensor (the global perturbation).
    Perturbation { shape: [usize; 4] },
}

impl Arch {
    /// Parameter names and shapes in storage order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        match *self {
            Arch::Identity => Vec::new(),
            Arch::Toy { in_channels, hidden } => toy::param_shapes(in_channels, hidden),
            Arch::UNet { base_width, depth, conditioning } => {
                unet::param_shapes(base_width, depth, conditioning.in_channels())
            }
            Arch::Perturbation { shape } => vec![("delta".into(), shape.to_vec())],
        }
    }

    /// Flat key/value description, as written into checkpoint manifests.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let kv = |k: &str, v: String| (k.to_string(), v);
        match *self {
            Arch::Identity => vec![kv("arch", "identity".into())],
            Arch::Toy { in_channels, hidden } => vec![
                kv("arch", "toy".into()),
                kv("in_channels", in_channels.to_string()),
                kv("hidden", hidden.to_string()),
            ],
            Arch::UNet { base_width, depth, conditioning } => vec![
                kv("arch", "unet".into()),
                kv("base_width", base_width.to_string()),
                kv("depth", depth.to_string()),
                kv("conditioning", conditioning.key().into()),
            ],
            Arch::Perturbation { shape } => vec![
                kv("arch", "perturbation".into()),
                kv("shape", shape.map(|s| s.to_string()).join("x")),
            ],
        }
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| {
            pairs.get(k).ok_or_else(|| Error::Config(format!("architecture key `{k}` missing")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| Error::Config(format!("`{k}` is not an integer")))
        };
        match get("arch")?.as_str() {
            "identity" => Ok(Arch::Identity),
            "toy" => Ok(Arch::Toy { in_channels: num("in_channels")?, hidden: num("hidden")? }),
            "unet" => {
                let conditioning = match get("conditioning")?.as_str() {
                    "image+global" => Conditioning::ImageAndGlobal,
                    "image" => Conditioning::ImageOnly,
                    other => return Err(Error::Config(format!("unknown conditioning `{other}`"))),
                };
                Ok(Arch::UNet { base_width: num("base_width")?, depth: num("depth")?, conditioning })
            }
            "perturbation" => {
                let dims = parse_shape(get("shape")?)?;
                let shape: [usize; 4] = dims
                    .try_into()
                    .map_err(|_| Error::Config("perturbation shape must have 4 extents".into()))?;
                Ok(Arch::Perturbation { shape })
            }
            other => Err(Error::Config(format!("unknown architecture `{other}`"))),
        }
    }
}

pub(crate) fn parse_shape(s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split('x')
        .map(|d| d.trim().parse().map_err(|_| Error::Config(format!("bad shape `{s}`"))))
        .collect()
}

/// Named parameter tensors plus the architecture that interprets them.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<F> {
    pub arch: Arch,
    pub seed: u64,
    names: Vec<String>,
    tensors: Vec<Tensor<F>>,
}

impl<F: Scalar> ModelParams<F> {
    /// Wraps tensors after checking them against `arch`.
    pub fn new(arch: Arch, seed: u64, tensors: Vec<Tensor<F>>) -> Result<Self> {
        let expected = arch.param_shapes();
        if expected.len() != tensors.len() {
            return shape_err(
                "ModelParams",
                format!("{} tensors for {} parameters", tensors.len(), expected.len()),
            );
        }
        for ((name, shape), t) in expected.iter().zip(&tensors) {
            if t.shape() != shape.as_slice() {
                return shape_err("ModelParams", format!("{name}: {:?} vs {:?}", t.shape(), shape));
            }
        }
        let names = expected.into_iter().map(|(n, _)| n).collect();
        Ok(Self { arch, seed, names, tensors })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<F>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<F>] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<F>> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Adds every tensor to `g`; `trainable` decides whether gradients flow.
    pub fn bind(&self, g: &mut Graph<F>, trainable: bool) -> Vec<Var> {
        self.tensors.iter().map(|t| g.leaf(t.clone(), trainable)).collect()
    }

    pub fn forward(&self, g: &mut Graph<F>, vars: &[Var], x: Var) -> Result<Var> {
        match self.arch {
            Arch::Identity => Ok(x),
            Arch::Toy { .. } => toy::forward(g, vars, x),
            Arch::UNet { depth, .. } => unet::forward(g, vars, x, depth),
            Arch::Perturbation { .. } => Err(Error::InvalidArgument(
                "a stored perturbation is not a network".into(),
            )),
        }
    }

    /// Graph-free evaluation with frozen parameters.
    pub fn eval(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let mut g = Graph::new();
        let vars = self.bind(&mut g, false);
        let xv = g.constant(x.clone());
        let y = self.forward(&mut g, &vars, xv)?;
        Ok(g.value(y).clone())
    }

    /// SHA-256 over architecture, names, shapes and little-endian values.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.arch.to_pairs() {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        let mut buf = Vec::new();
        for (name, t) in self.names.iter().zip(&self.tensors) {
            h.update(format!("{name}:{:?}\n", t.shape()).as_bytes());
            buf.clear();
            for &v in t.data() {
                v.write_le(&mut buf);
            }
            h.update(&buf);
        }
        hex(&h.finalize())
    }

    pub fn cast<G: Scalar>(&self) -> ModelParams<G> {
        ModelParams {
            arch: self.arch,
            seed: self.seed,
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
        }
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
