//! Dense row-major tensors of rank 1 to 3.
//!
//! Every activation, kernel and gradient in the crate is a [`Tensor`]. The
//! element type is `f64`; gradient checks are unreliable at lower precision.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}", self.shape)?;
        if self.data.len() <= 16 {
            write!(f, " {:?}", self.data)?;
        }
        Ok(())
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() || shape.len() > 3 {
        return Err(Error::Shape(format!("rank must be 1..=3, got {}", shape.len())));
    }
    if shape.contains(&0) {
        return Err(Error::Shape(format!("zero extent in {shape:?}")));
    }
    Ok(())
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Result<Self> {
        validate_shape(shape)?;
        Ok(Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        })
    }

    pub fn filled(shape: &[usize], value: f64) -> Result<Self> {
        let mut t = Self::zeros(shape)?;
        t.data.fill(value);
        Ok(t)
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        validate_shape(shape)?;
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::from_vec(&[n], data)
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_vec(&[n, m], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Leading extent.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Length of one row-major slab below the leading axis.
    pub fn row_len(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.row_len();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.row_len();
        &mut self.data[i * w..(i + 1) * w]
    }

    pub fn get2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[i * self.shape[1] + j]
    }

    pub fn set2(&mut self, i: usize, j: usize, v: f64) {
        debug_assert_eq!(self.rank(), 2);
        let c = self.shape[1];
        self.data[i * c + j] = v;
    }

    pub fn get3(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert_eq!(self.rank(), 3);
        self.data[(i * self.shape[1] + j) * self.shape[2] + k]
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "add {:?} += {:?}",
                self.shape, other.shape
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Sum of elementwise products of two equally shaped rank-2 windows.
pub fn dot_window(kernel: &Tensor, window: &Tensor) -> Result<f64> {
    if !kernel.same_shape(window) {
        return Err(Error::Shape(format!(
            "dot_window kernel {:?} vs window {:?}",
            kernel.shape, window.shape
        )));
    }
    Ok(dot(&kernel.data, &window.data))
}

/// Elementwise product of two vectors.
pub fn hadamard(u: &Tensor, v: &Tensor) -> Result<Tensor> {
    if u.rank() != 1 || !u.same_shape(v) {
        return Err(Error::Shape(format!(
            "hadamard {:?} vs {:?}",
            u.shape, v.shape
        )));
    }
    Ok(Tensor {
        shape: u.shape.clone(),
        data: u.data.iter().zip(&v.data).map(|(a, b)| a * b).collect(),
    })
}

/// Copies rows `i..=j` of a matrix.
pub fn slice_rows(x: &Tensor, i: usize, j: usize) -> Result<Tensor> {
    if x.rank() != 2 {
        return Err(Error::Shape(format!("slice_rows needs rank 2, got {:?}", x.shape)));
    }
    if i > j || j >= x.rows() {
        return Err(Error::Index(format!(
            "rows {i}..={j} of {} row matrix",
            x.rows()
        )));
    }
    let m = x.shape[1];
    Tensor::from_vec(&[j - i + 1, m], x.data[i * m..(j + 1) * m].to_vec())
}

/// Stacks matrices with equal column counts on top of each other.
pub fn concat_rows(parts: &[Tensor]) -> Result<Tensor> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Shape("concat of nothing".into()))?;
    let m = first.shape.get(1).copied().unwrap_or(0);
    let mut rows = 0;
    let mut data = Vec::new();
    for p in parts {
        if p.rank() != 2 || p.shape[1] != m {
            return Err(Error::Shape(format!("concat_rows {:?} with width {m}", p.shape)));
        }
        rows += p.rows();
        data.extend_from_slice(&p.data);
    }
    Tensor::from_vec(&[rows, m], data)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorise without reassociating.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = c * 4;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in chunks * 4..a.len() {
        s += a[k] * b[k];
    }
    s
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn naive_dot(k: &Tensor, w: &Tensor) -> f64 {
        let (r, c) = (k.shape()[0], k.shape()[1]);
        let mut s = 0.0;
        for i in 0..r {
            for j in 0..c {
                s += k.get2(i, j) * w.get2(i, j);
            }
        }
        s
    }

    #[test]
    fn dot_window_identity_pattern() {
        let k = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let w = Tensor::from_rows(&[vec![5.0, 7.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(dot_window(&k, &w).unwrap(), 8.0);
        let z = Tensor::zeros(&[2, 2]).unwrap();
        assert_eq!(dot_window(&z, &w).unwrap(), 0.0);
    }

    #[test]
    fn dot_window_rejects_mismatch() {
        let a = Tensor::zeros(&[2, 3]).unwrap();
        let b = Tensor::zeros(&[3, 2]).unwrap();
        assert!(matches!(dot_window(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn dot_window_matches_double_loop() {
        let mut rng = Rng::new(11);
        for &(r, c) in &[(4, 3), (1, 1), (7, 5), (32, 512)] {
            let k = rng.uniform_tensor(&[r, c], 1.0);
            let w = rng.uniform_tensor(&[r, c], 1.0);
            let fast = dot_window(&k, &w).unwrap();
            let slow = naive_dot(&k, &w);
            let rel = (fast - slow).abs() / slow.abs().max(1e-300);
            assert!(rel < 1e-12, "{r}x{c}: {fast} vs {slow}");
        }
    }

    #[test]
    fn hadamard_cases() {
        let u = Tensor::vector(vec![1.0, 2.0]).unwrap();
        let v = Tensor::vector(vec![3.0, 4.0]).unwrap();
        assert_eq!(hadamard(&u, &v).unwrap().data(), &[3.0, 8.0]);
        let s = Tensor::vector(vec![2.0, -1.0]).unwrap();
        assert_eq!(hadamard(&s, &s).unwrap().data(), &[4.0, 1.0]);
        let short = Tensor::vector(vec![1.0]).unwrap();
        assert!(hadamard(&u, &short).is_err());
    }

    #[test]
    fn hadamard_commutes() {
        let mut rng = Rng::new(3);
        for _ in 0..100 {
            let n = 1 + rng.below(9);
            let u = rng.uniform_tensor(&[n], 2.0);
            let v = rng.uniform_tensor(&[n], 2.0);
            assert_eq!(hadamard(&u, &v).unwrap(), hadamard(&v, &u).unwrap());
        }
    }

    #[test]
    fn slice_rows_cases() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        let s = slice_rows(&x, 1, 2).unwrap();
        assert_eq!(s.shape(), &[2, 2]);
        assert_eq!(s.data(), &[3.0, 4.0, 5.0, 6.0]);
        let one = slice_rows(&x, 0, 0).unwrap();
        assert_eq!(one.shape(), &[1, 2]);
        assert!(matches!(slice_rows(&x, 2, 3), Err(Error::Index(_))));
        assert!(matches!(slice_rows(&x, 2, 1), Err(Error::Index(_))));
    }

    #[test]
    fn unit_slices_reassemble() {
        let mut rng = Rng::new(5);
        let x = rng.uniform_tensor(&[6, 3], 1.0);
        let parts: Vec<_> = (0..6).map(|i| slice_rows(&x, i, i).unwrap()).collect();
        assert_eq!(concat_rows(&parts).unwrap(), x);
    }

    #[test]
    fn slices_are_copies() {
        let x = Tensor::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        let mut s = slice_rows(&x, 0, 1).unwrap();
        s.data_mut()[0] = 99.0;
        assert_eq!(x.data()[0], 1.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Tensor::zeros(&[]).is_err());
        assert!(Tensor::zeros(&[1, 2, 3, 4]).is_err());
        assert!(Tensor::zeros(&[2, 0]).is_err());
        assert!(Tensor::from_vec(&[2, 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn finiteness_check() {
        let t = Tensor::vector(vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(t.check_finite("t"), Err(Error::NonFinite(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn slice_shape_is_function_of_input_shape(n in 1usize..12, m in 1usize..6, a in 0usize..12, b in 0usize..12) {
                let x = Tensor::zeros(&[n, m]).unwrap();
                let (i, j) = (a.min(b), a.max(b));
                match slice_rows(&x, i, j) {
                    Ok(s) => prop_assert_eq!(s.shape(), &[j - i + 1, m]),
                    Err(_) => prop_assert!(j >= n),
                }
            }

            #[test]
            fn hadamard_shape_preserved(v in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
                let u = Tensor::vector(v.clone()).unwrap();
                let h = hadamard(&u, &u).unwrap();
                prop_assert_eq!(h.shape(), u.shape());
                prop_assert!(h.data().iter().all(|&x| x >= 0.0));
            }
        }
    }
}
