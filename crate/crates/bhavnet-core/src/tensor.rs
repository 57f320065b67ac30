//! Dense row-major tensors and the arithmetic primitives everything else is
//! built from.
//!
//! Values are always 64-bit floats in memory; 32-bit precision appears only
//! inside checkpoint files. Tensors are immutable once returned from an
//! operation and safe to share across threads read-only.

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Dense real tensor: a shape and a row-major data buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Build a tensor, validating that the data length matches the shape and
    /// that every entry is finite.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::InvalidInput(format!(
                "tensor extents must be positive, got {shape:?}"
            )));
        }
        if expect != data.len() {
            return Err(Error::InvalidInput(format!(
                "shape {shape:?} needs {expect} entries, got {}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("tensor entry {bad}")));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    /// Rank-1 tensor from raw values.
    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    /// Shape-`[1]` tensor holding a single value.
    pub fn scalar(v: f64) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    /// Rank-2 tensor from rows.
    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_vector(&self) -> bool {
        self.shape.len() == 1
    }

    pub fn is_matrix(&self) -> bool {
        self.shape.len() == 2
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// Row count of a rank-2 tensor.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Column count of a rank-2 tensor.
    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    /// The single value of a scalar tensor.
    pub fn item(&self) -> f64 {
        debug_assert!(self.is_scalar());
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Elementwise map, preserving shape.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// In-place `self += other`; shapes must match.
    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape != b.shape {
        return Err(Error::ShapeMismatch {
            op,
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    Ok(())
}

/// Matrix product of `a: [m, k]` and `b: [k, n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if !a.is_matrix() || !b.is_matrix() || a.cols() != b.rows() {
        return Err(Error::ShapeMismatch {
            op: "matmul",
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a.data[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Ok(Tensor {
        shape: vec![m, n],
        data: out,
    })
}

/// Matrix-vector product of `w: [m, k]` and `x: [k]`.
pub fn matvec(w: &Tensor, x: &Tensor) -> Result<Tensor> {
    if !w.is_matrix() || !x.is_vector() || w.cols() != x.len() {
        return Err(Error::ShapeMismatch {
            op: "matvec",
            left: w.shape.clone(),
            right: x.shape.clone(),
        });
    }
    let (m, k) = (w.rows(), w.cols());
    let mut out = vec![0.0; m];
    for i in 0..m {
        let row = &w.data[i * k..(i + 1) * k];
        out[i] = row.iter().zip(&x.data).map(|(a, b)| a * b).sum();
    }
    Ok(Tensor::vector(out))
}

/// Elementwise sum; shapes must match.
pub fn add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape("add", a, b)?;
    Ok(Tensor {
        shape: a.shape.clone(),
        data: a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(),
    })
}

/// Elementwise product; shapes must match.
pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    same_shape("mul", a, b)?;
    Ok(Tensor {
        shape: a.shape.clone(),
        data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
    })
}

/// Elementwise `max(0, x)`.
pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Elementwise hyperbolic tangent.
pub fn tanh(x: &Tensor) -> Tensor {
    x.map(f64::tanh)
}

/// Elementwise logistic sigmoid, computed branch-wise so neither tail
/// overflows.
pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(sigmoid_scalar)
}

pub(crate) fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        let e = (-v).exp();
        1.0 / (1.0 + e)
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Softmax of a vector, with the max logit subtracted first.
pub fn softmax(x: &Tensor) -> Result<Tensor> {
    if !x.is_vector() || x.is_empty() {
        return Err(Error::InvalidInput(
            "softmax requires a non-empty vector".into(),
        ));
    }
    Ok(Tensor::vector(softmax_slice(&x.data)))
}

pub(crate) fn softmax_slice(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Concatenate rank-1 tensors in order.
pub fn concat(parts: &[&Tensor]) -> Result<Tensor> {
    if parts.is_empty() {
        return Err(Error::InvalidInput("concat of zero tensors".into()));
    }
    if let Some(p) = parts.iter().find(|p| !p.is_vector()) {
        return Err(Error::InvalidInput(format!(
            "concat expects vectors, got shape {:?}",
            p.shape()
        )));
    }
    let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        data.extend_from_slice(p.data());
    }
    Ok(Tensor::vector(data))
}

/// Mean of the rows of a rank-2 tensor; returns a `[cols]` vector.
pub fn mean_rows(x: &Tensor) -> Result<Tensor> {
    if !x.is_matrix() || x.rows() == 0 {
        return Err(Error::InvalidInput(
            "mean_rows requires a non-empty matrix".into(),
        ));
    }
    let (m, n) = (x.rows(), x.cols());
    let mut out = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            out[j] += x.data[i * n + j];
        }
    }
    for v in &mut out {
        *v /= m as f64;
    }
    Ok(Tensor::vector(out))
}

/// Dot product of two equal-length vectors.
pub fn dot(u: &Tensor, v: &Tensor) -> Result<f64> {
    if !u.is_vector() || !v.is_vector() || u.len() != v.len() {
        return Err(Error::ShapeMismatch {
            op: "dot",
            left: u.shape.clone(),
            right: v.shape.clone(),
        });
    }
    Ok(u.data.iter().zip(&v.data).map(|(a, b)| a * b).sum())
}

/// Norm below which cosine similarity is defined as zero.
pub const COSINE_NORM_EPS: f64 = 1e-12;

/// Cosine similarity with a zero-norm guard: either norm below
/// [`COSINE_NORM_EPS`] yields 0 (and a zero gradient through the guard).
pub fn cosine(u: &Tensor, v: &Tensor) -> Result<f64> {
    if !u.is_vector() || !v.is_vector() || u.len() != v.len() {
        return Err(Error::ShapeMismatch {
            op: "cosine",
            left: u.shape.clone(),
            right: v.shape.clone(),
        });
    }
    Ok(cosine_slices(u.data(), v.data()))
}

pub(crate) fn cosine_slices(u: &[f64], v: &[f64]) -> f64 {
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu < COSINE_NORM_EPS || nv < COSINE_NORM_EPS {
        return 0.0;
    }
    u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / (nu * nv)
}

/// Inverted dropout. In training mode each entry is zeroed independently with
/// probability `rate` and survivors are scaled by `1/(1-rate)`; in eval mode
/// the input passes through unchanged.
pub fn dropout(x: &Tensor, rate: f64, training: bool, rng: &mut Rng) -> Result<Tensor> {
    let factors = dropout_factors(x.len(), rate, training, rng)?;
    match factors {
        None => Ok(x.clone()),
        Some(f) => Ok(Tensor {
            shape: x.shape.clone(),
            data: x.data.iter().zip(&f).map(|(v, s)| v * s).collect(),
        }),
    }
}

/// Per-entry dropout scale factors (0 or `1/(1-rate)`), or `None` when the
/// operation is the identity. Sampled factors are reusable for the backward
/// pass.
pub(crate) fn dropout_factors(
    len: usize,
    rate: f64,
    training: bool,
    rng: &mut Rng,
) -> Result<Option<Vec<f64>>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok(None);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok(Some(
        (0..len)
            .map(|_| if rng.unit() < rate { 0.0 } else { keep })
            .collect(),
    ))
}

/// Xavier/Glorot uniform initialization on `±sqrt(6/(rows+cols))`.
pub fn xavier_init(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.uniform(-bound, bound))
        .collect();
    Tensor {
        shape: vec![rows, cols],
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Rng, Stream};
    use proptest::prelude::*;

    fn rng() -> Rng {
        Rng::seeded(42, Stream::Init)
    }

    fn random_matrix(r: usize, c: usize, rng: &mut Rng) -> Tensor {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let eye = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(matmul(&eye, &m).unwrap(), m);
    }

    #[test]
    fn matmul_zero_row_selection() {
        let a = Tensor::matrix(1, 2, vec![1.0, 0.0]).unwrap();
        let b = Tensor::matrix(2, 1, vec![0.0, 5.0]).unwrap();
        assert_eq!(matmul(&a, &b).unwrap().data(), &[0.0]);
    }

    #[test]
    fn matmul_matches_triple_loop_oracle() {
        let mut r = rng();
        let a = random_matrix(3, 4, &mut r);
        let b = random_matrix(4, 2, &mut r);
        let c = matmul(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let mut s = 0.0;
                for p in 0..4 {
                    s += a.data()[i * 4 + p] * b.data()[p * 2 + j];
                }
                assert!((c.data()[i * 2 + j] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_mismatch_names_both_shapes() {
        let a = Tensor::matrix(2, 3, vec![0.0; 6]).unwrap();
        let b = Tensor::matrix(2, 2, vec![0.0; 4]).unwrap();
        let err = matmul(&a, &b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[2, 2]"), "{err}");
    }

    #[test]
    fn relu_sign_split() {
        let x = Tensor::vector(vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn relu_all_negative() {
        let x = Tensor::vector(vec![-3.0, -0.5, -1e9]);
        assert!(relu(&x).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dropout_rate_zero_is_identity() {
        let x = Tensor::vector(vec![1.0, -2.0, 3.0]);
        let mut r = rng();
        assert_eq!(dropout(&x, 0.0, true, &mut r).unwrap(), x);
        assert_eq!(dropout(&x, 0.0, false, &mut r).unwrap(), x);
    }

    #[test]
    fn dropout_eval_is_identity() {
        let x = Tensor::vector(vec![1.0, -2.0, 3.0]);
        let mut r = rng();
        assert_eq!(dropout(&x, 0.5, false, &mut r).unwrap(), x);
    }

    #[test]
    fn dropout_rate_one_rejected() {
        let x = Tensor::vector(vec![1.0]);
        let mut r = rng();
        assert!(dropout(&x, 1.0, true, &mut r).is_err());
    }

    #[test]
    fn dropout_survivor_fraction_and_mean() {
        let n = 100_000;
        let x = Tensor::vector(vec![1.0; n]);
        let mut r = Rng::seeded(1, Stream::Dropout);
        let y = dropout(&x, 0.5, true, &mut r).unwrap();
        let survivors = y.data().iter().filter(|&&v| v != 0.0).count();
        let frac = survivors as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "survivor fraction {frac}");
        let mean = y.data().iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn dropout_masks_reproducible() {
        let x = Tensor::vector(vec![1.0; 64]);
        let a = dropout(&x, 0.3, true, &mut Rng::seeded(9, Stream::Dropout)).unwrap();
        let b = dropout(&x, 0.3, true, &mut Rng::seeded(9, Stream::Dropout)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sigmoid_at_zero() {
        assert_eq!(sigmoid(&Tensor::scalar(0.0)).item(), 0.5);
    }

    #[test]
    fn sigmoid_stable_in_tails() {
        let y = sigmoid(&Tensor::vector(vec![-750.0, 750.0]));
        assert!(y.data()[0] >= 0.0 && y.data()[0] < 1e-300);
        assert!((y.data()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_symmetry() {
        let y = softmax(&Tensor::vector(vec![3.3, 3.3, 3.3])).unwrap();
        for &v in y.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_empty_rejected() {
        let empty = Tensor {
            shape: vec![0],
            data: vec![],
        };
        assert!(softmax(&empty).is_err());
    }

    #[test]
    fn tanh_known_value() {
        let y = tanh(&Tensor::scalar(0.9)).item();
        assert!((y - 0.71630).abs() < 5e-6, "tanh(0.9) = {y}");
    }

    #[test]
    fn xavier_bounds_respected() {
        let mut r = rng();
        let t = xavier_init(64, 64, &mut r);
        let bound = (6.0 / 128.0f64).sqrt();
        assert_eq!(t.len(), 4096);
        // plus a second batch to cover 10^4 samples
        let t2 = xavier_init(64, 96, &mut r);
        for &v in t.data().iter().chain(t2.data()) {
            assert!(v.abs() <= bound.max((6.0 / 160.0f64).sqrt()));
        }
        for &v in t.data() {
            assert!(v.abs() <= bound);
        }
    }

    #[test]
    fn xavier_deterministic() {
        let a = xavier_init(16, 16, &mut Rng::seeded(5, Stream::Init));
        let b = xavier_init(16, 16, &mut Rng::seeded(5, Stream::Init));
        assert_eq!(a, b);
    }

    #[test]
    fn xavier_variance_near_expected() {
        let mut r = rng();
        let t = xavier_init(100, 100, &mut r);
        let n = t.len() as f64;
        let mean = t.data().iter().sum::<f64>() / n;
        let var = t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let expect = 2.0 / 200.0;
        assert!(
            (var - expect).abs() < 0.1 * expect,
            "variance {var} vs {expect}"
        );
    }

    #[test]
    fn cosine_guard_returns_zero() {
        let z = Tensor::vector(vec![0.0, 0.0]);
        let u = Tensor::vector(vec![1.0, 2.0]);
        assert_eq!(cosine(&z, &u).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn matmul_associative(seed in 0u64..1000) {
            let mut r = Rng::seeded(seed, Stream::Init);
            let a = random_matrix(3, 4, &mut r);
            let b = random_matrix(4, 5, &mut r);
            let c = random_matrix(5, 2, &mut r);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            for (x, y) in left.data().iter().zip(right.data()) {
                let scale = x.abs().max(y.abs()).max(1.0);
                prop_assert!((x - y).abs() / scale < 1e-9);
            }
        }

        #[test]
        fn softmax_sums_to_one_and_shift_invariant(
            logits in proptest::collection::vec(-20.0f64..20.0, 1..12),
            shift in -50.0f64..50.0,
        ) {
            let y = softmax(&Tensor::vector(logits.clone())).unwrap();
            let sum: f64 = y.data().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = logits.iter().map(|v| v + shift).collect();
            let y2 = softmax(&Tensor::vector(shifted)).unwrap();
            for (a, b) in y.data().iter().zip(y2.data()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn cosine_scale_invariant(
            u in proptest::collection::vec(-5.0f64..5.0, 4),
            v in proptest::collection::vec(-5.0f64..5.0, 4),
            c in 0.001f64..100.0,
        ) {
            let tu = Tensor::vector(u.clone());
            let tv = Tensor::vector(v);
            let scaled = Tensor::vector(u.iter().map(|x| x * c).collect());
            let base = cosine(&tu, &tv).unwrap();
            let scl = cosine(&scaled, &tv).unwrap();
            prop_assert!((base - scl).abs() < 1e-9);
        }
    }
}
