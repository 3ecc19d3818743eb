//! Dense row-major tensors.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardUniform};

use crate::error::{shape_err, Error, Result};
use crate::scalar::Scalar;

/// Dense N-dimensional array. Images are `batch x channels x height x width`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn new(shape: Vec<usize>, data: Vec<F>) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return shape_err(
                "Tensor::new",
                format!("shape {:?} holds {} elements, data has {}", shape, numel, data.len()),
            );
        }
        Ok(Self { shape, data })
    }

    pub fn full(shape: &[usize], value: F) -> Self {
        let numel = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![value; numel] }
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::full(shape, F::zero())
    }

    pub fn ones(shape: &[usize]) -> Self {
        Self::full(shape, F::one())
    }

    /// Rank-0 tensor.
    pub fn scalar(value: F) -> Self {
        Self { shape: Vec::new(), data: vec![value] }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(usize) -> F) -> Self {
        let numel: usize = shape.iter().product();
        Self { shape: shape.to_vec(), data: (0..numel).map(&mut f).collect() }
    }

    /// Uniform samples in `[lo, hi)`.
    pub fn uniform<R: Rng + ?Sized>(shape: &[usize], lo: f64, hi: f64, rng: &mut R) -> Self {
        Self::from_fn(shape, |_| {
            let u: f64 = StandardUniform.sample(rng);
            F::lit(lo + (hi - lo) * u)
        })
    }

    /// Zero-mean normal samples.
    pub fn normal<R: Rng + ?Sized>(shape: &[usize], std: f64, rng: &mut R) -> Self {
        let dist = Normal::new(0.0, std).expect("finite standard deviation");
        Self::from_fn(shape, |_| F::lit(dist.sample(rng)))
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// First element; meaningful for single-element tensors.
    pub fn item(&self) -> F {
        self.data[0]
    }

    /// Interprets the tensor as `N x C x H x W`.
    pub fn dims4(&self) -> Result<(usize, usize, usize, usize)> {
        match self.shape.as_slice() {
            &[n, c, h, w] => Ok((n, c, h, w)),
            other => shape_err("dims4", format!("expected a 4-d tensor, got {other:?}")),
        }
    }

    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let numel: usize = shape.iter().product();
        if numel != self.data.len() {
            return shape_err(
                "reshape",
                format!("cannot view {:?} as {:?}", self.shape, shape),
            );
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(F, F) -> F) -> Result<Self> {
        self.expect_same_shape(other, "zip_map")?;
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: F) -> Self {
        self.map(|x| x * c)
    }

    pub fn sum(&self) -> F {
        self.data.iter().copied().sum()
    }

    pub fn mean(&self) -> F {
        self.sum() / F::lit(self.data.len().max(1) as f64)
    }

    pub fn max_abs(&self) -> F {
        self.data.iter().fold(F::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn dot(&self, other: &Self) -> Result<F> {
        self.expect_same_shape(other, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum())
    }

    /// Mean squared difference, accumulated in f64.
    pub fn mse(&self, other: &Self) -> Result<f64> {
        self.expect_same_shape(other, "mse")?;
        let n = self.data.len().max(1) as f64;
        let total: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| {
                let d = a.as_f64() - b.as_f64();
                d * d
            })
            .sum();
        Ok(total / n)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.all_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    pub fn cast<G: Scalar>(&self) -> Tensor<G> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|x| G::lit(x.as_f64())).collect() }
    }

    /// Selects one image from a batch, keeping a leading batch axis of 1.
    pub fn batch_item(&self, index: usize) -> Result<Self> {
        let (n, c, h, w) = self.dims4()?;
        if index >= n {
            return Err(Error::InvalidArgument(format!("batch index {index} out of {n}")));
        }
        let stride = c * h * w;
        Ok(Self {
            shape: vec![1, c, h, w],
            data: self.data[index * stride..(index + 1) * stride].to_vec(),
        })
    }

    pub(crate) fn expect_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape != other.shape {
            return shape_err(op, format!("{:?} vs {:?}", self.shape, other.shape));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn new_checks_element_count() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let a = Tensor::<f32>::normal(&[3, 4], 0.02, &mut ChaCha8Rng::seed_from_u64(9));
        let b = Tensor::<f32>::normal(&[3, 4], 0.02, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let u = Tensor::<f64>::uniform(&[100], -0.5, 0.5, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(u.data().iter().all(|&x| (-0.5..0.5).contains(&x)));
    }

    #[test]
    fn mse_and_batch_item() {
        let t = Tensor::<f64>::new(vec![2, 1, 1, 2], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let z = Tensor::zeros(&[2, 1, 1, 2]);
        assert_eq!(t.mse(&z).unwrap(), 0.5);
        assert_eq!(t.batch_item(1).unwrap().data(), &[1.0, 1.0]);
        assert!(t.batch_item(2).is_err());
    }
}
