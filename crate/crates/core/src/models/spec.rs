use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{Arch, ModelParams};
use super::toy::{self, TOY_HIDDEN};
use crate::autodiff::{Graph, Var};
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const WHITE: [f64; 3] = [1.0, 1.0, 1.0];
pub const BLUE: [f64; 3] = [0.0, 0.0, 1.0];

/// How many images a manipulation consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    /// `f(x)`: reconstruction-style models.
    Single,
    /// `f(companion, x)`: blending models. The companion (source) image is
    /// produced from `companion_seed` and never receives gradients; only the
    /// protected image does.
    Blend { companion_seed: u64 },
}

/// A frozen manipulation model paired with its solid-colour target.
#[derive(Clone, Debug)]
pub struct ManipulationSpec<F> {
    pub name: String,
    pub model: ModelParams<F>,
    pub target_color: [f64; 3],
    pub arity: Arity,
}

impl<F: Scalar> ManipulationSpec<F> {
    pub fn with_target(mut self, color: [f64; 3]) -> Self {
        self.target_color = color;
        self
    }

    /// Target image of the given `[n, 3, h, w]` shape.
    pub fn target(&self, shape: &[usize]) -> Result<Tensor<F>> {
        let &[_, c, h, w] = shape else {
            return shape_err("target", format!("expected an image shape, got {shape:?}"));
        };
        if c != 3 {
            return shape_err("target", format!("expected 3 channels, got {c}"));
        }
        let plane = h * w;
        Ok(Tensor::from_fn(shape, |i| F::lit(self.target_color[(i / plane) % 3])))
    }

    /// Frozen model parameters as graph constants.
    pub fn bind(&self, g: &mut Graph<F>) -> Vec<Var> {
        self.model.bind(g, false)
    }

    /// Applies the manipulation to `image`; the only differentiable input.
    pub fn forward(&self, g: &mut Graph<F>, vars: &[Var], image: Var) -> Result<Var> {
        let input = match self.arity {
            Arity::Single => image,
            Arity::Blend { companion_seed } => {
                let shape = g.value(image).shape().to_vec();
                let source = g.constant(companion_image(&shape, companion_seed)?);
                debug_assert!(!g.requires_grad(source));
                g.concat_channels(source, image)?
            }
        };
        self.model.forward(g, vars, input)
    }

    pub fn eval(&self, image: &Tensor<F>) -> Result<Tensor<F>> {
        let mut g = Graph::new();
        let vars = self.bind(&mut g);
        let x = g.constant(image.clone());
        let y = self.forward(&mut g, &vars, x)?;
        Ok(g.value(y).clone())
    }

    /// Mean squared distance between the manipulated image and the target.
    pub fn output_target_mse(&self, image: &Tensor<F>) -> Result<f64> {
        let out = self.eval(image)?;
        out.mse(&self.target(out.shape())?)
    }

    pub fn cast<G: Scalar>(&self) -> ManipulationSpec<G> {
        ManipulationSpec {
            name: self.name.clone(),
            model: self.model.cast(),
            target_color: self.target_color,
            arity: self.arity,
        }
    }
}

/// Self-reconstruction stand-in; default target white.
pub fn toy_recon_model<F: Scalar>(seed: u64) -> ManipulationSpec<F> {
    let model = ModelParams::new(
        Arch::Toy { in_channels: 3, hidden: TOY_HIDDEN },
        seed,
        toy::init(3, TOY_HIDDEN, seed),
    )
    .expect("toy shapes are consistent");
    ManipulationSpec { name: "recon".into(), model, target_color: WHITE, arity: Arity::Single }
}

/// Two-input blending stand-in over `[source, protected]`; default target blue.
pub fn toy_blend_model<F: Scalar>(seed: u64) -> ManipulationSpec<F> {
    let model = ModelParams::new(
        Arch::Toy { in_channels: 6, hidden: TOY_HIDDEN },
        seed,
        toy::init(6, TOY_HIDDEN, seed),
    )
    .expect("toy shapes are consistent");
    ManipulationSpec {
        name: "blend".into(),
        model,
        target_color: BLUE,
        arity: Arity::Blend { companion_seed: seed ^ 0x5eed },
    }
}

/// `f(x) = x`, for closed-form checks of the attack loops.
pub fn identity_model<F: Scalar>(target: [f64; 3]) -> ManipulationSpec<F> {
    let model = ModelParams::new(Arch::Identity, 0, Vec::new()).expect("no parameters");
    ManipulationSpec { name: "identity".into(), model, target_color: target, arity: Arity::Single }
}

/// Deterministic smooth source image in `[0.1, 0.9]` used as the blending companion.
pub fn companion_image<F: Scalar>(shape: &[usize], seed: u64) -> Result<Tensor<F>> {
    let &[_, c, h, w] = shape else {
        return shape_err("companion_image", format!("expected an image shape, got {shape:?}"));
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<[f64; 3]> =
        (0..c).map(|_| [rng.random::<f64>() * 6.3, rng.random::<f64>() * 6.3, rng.random()]).collect();
    let plane = h * w;
    Ok(Tensor::from_fn(shape, |i| {
        let ch = (i / plane) % c;
        let (y, x) = ((i % plane) / w, i % w);
        let [px, py, base] = phases[ch];
        let u = x as f64 / w as f64 * 2.0 * std::f64::consts::PI;
        let v = y as f64 / h as f64 * 2.0 * std::f64::consts::PI;
        F::lit(0.5 + 0.25 * (u + px).sin() * (v + py).cos() + 0.15 * (base - 0.5))
    }))
}
