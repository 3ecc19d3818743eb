use std::str::FromStr;

use crate::autodiff::{sin_round, sin_round_derivative, Graph, Var};
use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// How the quantizer rounds `c / Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoundMode {
    /// Round half away from zero; zero gradient. Reference codec.
    TrueRound,
    /// `r(x) = x`.
    Identity,
    /// `r(x) = round(x) + (x - round(x))^3`.
    Cubic,
    /// Forward is true rounding, backward uses the sine surrogate's slope.
    Soft,
    /// `r(x) = x - sin(2 pi x) / (2 pi)`.
    Sin,
}

impl RoundMode {
    pub fn apply<F: Scalar>(self, x: F) -> F {
        match self {
            Self::TrueRound | Self::Soft => x.round(),
            Self::Identity => x,
            Self::Cubic => {
                let r = x.round();
                let d = x - r;
                r + d * d * d
            }
            Self::Sin => sin_round(x),
        }
    }

    /// Slope used by backpropagation.
    pub fn derivative<F: Scalar>(self, x: F) -> F {
        match self {
            Self::TrueRound => F::zero(),
            Self::Identity => F::one(),
            Self::Cubic => {
                let d = x - x.round();
                F::lit(3.0) * d * d
            }
            Self::Soft | Self::Sin => sin_round_derivative(x),
        }
    }

    pub fn is_differentiable(self) -> bool {
        !matches!(self, Self::TrueRound)
    }

    pub const ALL: [RoundMode; 5] =
        [Self::TrueRound, Self::Identity, Self::Cubic, Self::Soft, Self::Sin];
}

impl FromStr for RoundMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "true" | "true_round" | "round" => Ok(Self::TrueRound),
            "identity" => Ok(Self::Identity),
            "cubic" => Ok(Self::Cubic),
            "soft" => Ok(Self::Soft),
            "sin" => Ok(Self::Sin),
            other => Err(Error::Config(format!(
                "unknown round mode `{other}` (true, identity, cubic, soft, sin)"
            ))),
        }
    }
}

impl std::fmt::Display for RoundMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::TrueRound => "true",
            Self::Identity => "identity",
            Self::Cubic => "cubic",
            Self::Soft => "soft",
            Self::Sin => "sin",
        })
    }
}

fn table_tensor<F: Scalar>(blocks: usize, table: &[u16; 64], invert: bool) -> Result<Tensor<F>> {
    if table.contains(&0) {
        return Err(Error::InvalidArgument("quantization table entry must be positive".into()));
    }
    Ok(Tensor::from_fn(&[blocks, 8, 8], |i| {
        let q = F::lit(table[i % 64] as f64);
        if invert {
            F::one() / q
        } else {
            q
        }
    }))
}

fn block_count<F: Scalar>(g: &Graph<F>, coeffs: Var) -> Result<usize> {
    match g.value(coeffs).shape() {
        &[b, 8, 8] => Ok(b),
        other => shape_err("quantize", format!("expected [b, 8, 8] coefficients, got {other:?}")),
    }
}

/// `r(c / Q)` for every coefficient block.
pub fn quantize<F: Scalar>(
    g: &mut Graph<F>,
    coeffs: Var,
    table: &[u16; 64],
    mode: RoundMode,
) -> Result<Var> {
    let inv = g.constant(table_tensor(block_count(g, coeffs)?, table, true)?);
    let scaled = g.mul(coeffs, inv)?;
    g.round(scaled, mode)
}

/// Multiplies quantized blocks back by `Q`.
pub fn dequantize<F: Scalar>(g: &mut Graph<F>, levels: Var, table: &[u16; 64]) -> Result<Var> {
    let q = g.constant(table_tensor(block_count(g, levels)?, table, false)?);
    g.mul(levels, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_surrogates() {
        assert_eq!(RoundMode::Sin.apply(3.0f64), 3.0 - (6.0 * std::f64::consts::PI).sin() / (2.0 * std::f64::consts::PI));
        assert!((RoundMode::Sin.apply(3.0f64) - 3.0).abs() < 1e-12);
        let expected = 0.25 - 1.0 / (2.0 * std::f64::consts::PI);
        assert!((RoundMode::Sin.apply(0.25f64) - expected).abs() < 1e-15);
        assert!((RoundMode::Sin.apply(0.25f64) - 0.09085).abs() < 1e-5);
        assert!((RoundMode::Cubic.apply(0.4f64) - 0.064).abs() < 1e-15);
        assert_eq!(RoundMode::Identity.apply(0.4f64), 0.4);
        assert_eq!(RoundMode::TrueRound.apply(2.5f64), 3.0);
        assert_eq!(RoundMode::Soft.apply(-1.4f64), -1.0);
    }

    #[test]
    fn soft_uses_sine_slope() {
        for &x in &[0.1f64, 0.5, 1.3, -2.7] {
            assert_eq!(RoundMode::Soft.derivative(x), RoundMode::Sin.derivative(x));
        }
        assert_eq!(RoundMode::TrueRound.derivative(0.3f64), 0.0);
    }

    #[test]
    fn parses_modes() {
        for m in RoundMode::ALL {
            assert_eq!(m.to_string().parse::<RoundMode>().unwrap(), m);
        }
        assert!("banker".parse::<RoundMode>().is_err());
    }

    #[test]
    fn zero_table_entry_is_rejected() {
        let mut g = Graph::<f64>::new();
        let c = g.constant(Tensor::zeros(&[1, 8, 8]));
        let mut table = [1u16; 64];
        table[5] = 0;
        assert!(quantize(&mut g, c, &table, RoundMode::TrueRound).is_err());
    }

    #[test]
    fn quantize_dequantize_true_round() {
        let mut g = Graph::<f64>::new();
        let c = g.constant(Tensor::full(&[2, 8, 8], 37.0));
        let table = [10u16; 64];
        let q = quantize(&mut g, c, &table, RoundMode::TrueRound).unwrap();
        assert!(g.value(q).data().iter().all(|&v| v == 4.0));
        let d = dequantize(&mut g, q, &table).unwrap();
        assert!(g.value(d).data().iter().all(|&v| v == 40.0));
    }
}
