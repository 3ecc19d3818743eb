use crate::error::{shape_err, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Bias-corrected Adam moments for a list of parameters.
#[derive(Clone, Debug)]
pub struct AdamState<F> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    first: Vec<Tensor<F>>,
    second: Vec<Tensor<F>>,
}

impl<F: Scalar> AdamState<F> {
    pub fn new(params: &[Tensor<F>]) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, first: zeros(), second: zeros() }
    }

    pub fn first_moments(&self) -> &[Tensor<F>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Tensor<F>] {
        &self.second
    }

    /// One update `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [Tensor<F>], grads: &[Tensor<F>], lr: f64) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return shape_err(
                "adam_step",
                format!("{} params, {} grads, {} moments", params.len(), grads.len(), self.first.len()),
            );
        }
        for (p, (g, m)) in params.iter().zip(grads.iter().zip(&self.first)) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return shape_err("adam_step", format!("{:?} vs {:?}", p.shape(), g.shape()));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (F::lit(self.beta1), F::lit(self.beta2));
        let c1 = F::lit(1.0 - self.beta1.powi(t));
        let c2 = F::lit(1.0 - self.beta2.powi(t));
        let (lr, eps) = (F::lit(lr), F::lit(self.eps));
        let one = F::one();
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            let (m, v, p) = (m.data_mut(), v.data_mut(), p.data_mut());
            for j in 0..p.len() {
                let gj = g.data()[j];
                m[j] = b1 * m[j] + (one - b1) * gj;
                v[j] = b2 * v[j] + (one - b2) * gj * gj;
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![Tensor::<f64>::full(&[3], 0.5)];
        let mut s = AdamState::new(&p);
        s.step(&mut p, &[Tensor::ones(&[3])], 1e-3).unwrap();
        for &v in p[0].data() {
            assert!((v - (0.5 - 1e-3)).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut p = vec![Tensor::<f64>::full(&[2], 1.0)];
        let mut s = AdamState::new(&p);
        s.step(&mut p, &[Tensor::full(&[2], 2.0)], 0.1).unwrap();
        let before = p[0].clone();
        let m0 = s.first_moments()[0].data()[0];
        let v0 = s.second_moments()[0].data()[0];
        // with a zero gradient the bias-corrected ratio still moves p, so
        // check the raw zero-gradient case on a fresh state instead
        let mut q = vec![Tensor::<f64>::full(&[2], 1.0)];
        let mut fresh = AdamState::new(&q);
        fresh.step(&mut q, &[Tensor::zeros(&[2])], 0.1).unwrap();
        assert_eq!(q[0].data(), &[1.0, 1.0]);
        s.step(&mut p, &[Tensor::zeros(&[2])], 0.0).unwrap();
        assert_eq!(p[0], before);
        assert!((s.first_moments()[0].data()[0] - 0.9 * m0).abs() < 1e-15);
        assert!((s.second_moments()[0].data()[0] - 0.999 * v0).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = vec![Tensor::<f32>::zeros(&[2])];
        let mut s = AdamState::new(&p);
        assert!(s.step(&mut p, &[Tensor::zeros(&[3])], 0.1).is_err());
        assert!(s.step(&mut p, &[], 0.1).is_err());
    }
}
