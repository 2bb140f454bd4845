//! Dense multilinear arrays over a `2n`-dimensional frame.
//!
//! Storage is row-major by slot order: the entry `T[i0, i1, ..., ik]` lives at
//! offset `((i0 * dim + i1) * dim + ...) + ik`. Indices are zero-based here;
//! anything user-facing prints them one-based.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{NordenError, Result};

/// Kind of a tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Covariant,
    Contravariant,
}

pub use Slot::{Contravariant as Up, Covariant as Down};

/// Mixed absolute/relative comparison rule:
/// `|a - b| <= absolute + relative * max(|a|, |b|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub absolute: f64,
    pub relative: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { absolute: 1e-9, relative: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(absolute: f64, relative: f64) -> Self {
        assert!(absolute >= 0.0 && relative >= 0.0, "tolerances must be nonnegative");
        Self { absolute, relative }
    }

    pub fn absolute(absolute: f64) -> Self {
        Self::new(absolute, 0.0)
    }

    pub fn close(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.absolute + self.relative * a.abs().max(b.abs())
    }

    /// Threshold for a residual measured against a quantity of size `scale`.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.absolute + self.relative * scale.abs()
    }
}

/// Outcome of an entrywise comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub equal: bool,
    /// Largest `|a - b|` over all entries.
    pub max_residual: f64,
    /// Zero-based multi-index of the worst entry (empty for rank 0).
    pub worst_index: Vec<usize>,
}

impl Comparison {
    /// Worst index rendered one-based, e.g. `(1,3,2)`.
    pub fn worst_index_display(&self) -> String {
        format_index(&self.worst_index)
    }
}

pub fn format_index(ix: &[usize]) -> String {
    let parts: Vec<String> = ix.iter().map(|i| (i + 1).to_string()).collect();
    format!("({})", parts.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    dim: usize,
    variance: Vec<Slot>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(dim: usize, variance: Vec<Slot>, data: Vec<f64>) -> Result<Self> {
        if dim < 2 || dim % 2 != 0 {
            return Err(NordenError::DimensionMismatch(format!(
                "frame dimension must be even and at least 2, got {dim}"
            )));
        }
        let expected = dim.pow(variance.len() as u32);
        if data.len() != expected {
            return Err(NordenError::DimensionMismatch(format!(
                "expected {expected} entries for rank {} in dim {dim}, got {}",
                variance.len(),
                data.len()
            )));
        }
        Ok(Self { dim, variance, data })
    }

    pub fn zeros(dim: usize, variance: &[Slot]) -> Self {
        assert!(dim >= 2 && dim % 2 == 0, "frame dimension must be even and >= 2");
        Self {
            dim,
            variance: variance.to_vec(),
            data: vec![0.0; dim.pow(variance.len() as u32)],
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(dim: usize, variance: &[Slot], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(dim, variance);
        let rank = variance.len();
        let mut ix = vec![0usize; rank];
        for off in 0..t.data.len() {
            decode(off, dim, &mut ix);
            t.data[off] = f(&ix);
        }
        t
    }

    pub fn covector(data: Vec<f64>) -> Result<Self> {
        let d = data.len();
        Self::new(d, vec![Down], data)
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let d = data.len();
        Self::new(d, vec![Up], data)
    }

    /// Row-major matrix with the given slot kinds.
    pub fn from_rows(rows: &[Vec<f64>], variance: [Slot; 2]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(NordenError::DimensionMismatch("matrix must be square".into()));
        }
        Self::new(d, variance.to_vec(), rows.iter().flatten().copied().collect())
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, &[Up, Down], |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Slot] {
        &self.variance
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn offset(&self, ix: &[usize]) -> usize {
        debug_assert_eq!(ix.len(), self.rank());
        ix.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, ix: &[usize]) -> f64 {
        self.data[self.offset(ix)]
    }

    pub fn set(&mut self, ix: &[usize], v: f64) {
        let o = self.offset(ix);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_fully_covariant(&self) -> bool {
        self.variance.iter().all(|s| *s == Down)
    }

    /// Same data with the slot kinds replaced; used where a frame identification
    /// is implied (e.g. reading a (1,2) coefficient array as components).
    pub fn with_variance(mut self, variance: &[Slot]) -> Self {
        assert_eq!(variance.len(), self.rank());
        self.variance = variance.to_vec();
        self
    }

    /// Iterates `(multi_index, value)` pairs in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let dim = self.dim;
        let rank = self.rank();
        self.data.iter().enumerate().map(move |(off, &v)| {
            let mut ix = vec![0; rank];
            decode(off, dim, &mut ix);
            (ix, v)
        })
    }

    /// Reorders slots: `out[ix] = self[ix'] ` where `ix'[perm[k]] = ix[k]`.
    /// In words, slot `k` of the result is slot `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.rank());
        let variance: Vec<Slot> = perm.iter().map(|&p| self.variance[p]).collect();
        let mut src = vec![0usize; self.rank()];
        Tensor::from_fn(self.dim, &variance, |ix| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = ix[k];
            }
            self.get(&src)
        })
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        assert_eq!(self.variance, other.variance, "variance mismatch");
        Tensor {
            dim: self.dim,
            variance: self.variance.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot >= self.rank() {
            return Err(NordenError::InvalidSlot { slot, rank: self.rank() });
        }
        Ok(())
    }

    /// Contracts slots `a` and `b`. Without a metric the slots must be one
    /// upper and one lower (a plain trace); with `metric_inverse` both must be
    /// covariant and the contraction is `g^{ij} T_{..i..j..}`.
    pub fn contract(&self, a: usize, b: usize, metric_inverse: Option<&Tensor>) -> Result<Tensor> {
        if self.rank() < 2 {
            return Err(NordenError::InvalidRank(format!(
                "contraction needs rank >= 2, got {}",
                self.rank()
            )));
        }
        self.check_slot(a)?;
        self.check_slot(b)?;
        if a == b {
            return Err(NordenError::InvalidSlot { slot: b, rank: self.rank() });
        }
        let d = self.dim;
        let weight: Box<dyn Fn(usize, usize) -> f64> = match metric_inverse {
            Some(gi) => {
                if gi.dim != d {
                    return Err(NordenError::DimensionMismatch(format!(
                        "metric inverse has dim {}, tensor has dim {d}",
                        gi.dim
                    )));
                }
                if gi.variance != [Up, Up] {
                    return Err(NordenError::UnsupportedVariance(
                        "metric inverse must be a (2,0) tensor".into(),
                    ));
                }
                if self.variance[a] != Down || self.variance[b] != Down {
                    return Err(NordenError::UnsupportedVariance(
                        "metric contraction needs two covariant slots".into(),
                    ));
                }
                Box::new(move |i, j| gi.get(&[i, j]))
            }
            None => {
                if self.variance[a] == self.variance[b] {
                    return Err(NordenError::UnsupportedVariance(
                        "a plain trace needs one upper and one lower slot".into(),
                    ));
                }
                Box::new(|i, j| if i == j { 1.0 } else { 0.0 })
            }
        };
        let kept: Vec<usize> = (0..self.rank()).filter(|&s| s != a && s != b).collect();
        let variance: Vec<Slot> = kept.iter().map(|&s| self.variance[s]).collect();
        let mut full = vec![0usize; self.rank()];
        let out = Tensor::from_fn(d, &variance, |ix| {
            for (k, &s) in kept.iter().enumerate() {
                full[s] = ix[k];
            }
            let mut sum = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let w = weight(i, j);
                    if w != 0.0 {
                        full[a] = i;
                        full[b] = j;
                        sum += w * self.get(&full);
                    }
                }
            }
            sum
        });
        Ok(out)
    }

    /// Lowers a contravariant slot with the metric `g` (a (0,2) tensor).
    pub fn lower(&self, slot: usize, g: &Tensor) -> Result<Tensor> {
        self.move_index(slot, g, Up, Down)
    }

    /// Raises a covariant slot with the inverse metric (a (2,0) tensor).
    pub fn raise(&self, slot: usize, g_inv: &Tensor) -> Result<Tensor> {
        self.move_index(slot, g_inv, Down, Up)
    }

    fn move_index(&self, slot: usize, m: &Tensor, from: Slot, to: Slot) -> Result<Tensor> {
        self.check_slot(slot)?;
        if self.variance[slot] != from {
            return Err(NordenError::UnsupportedVariance(format!(
                "slot {} is {:?}, expected {:?}",
                slot + 1,
                self.variance[slot],
                from
            )));
        }
        if m.dim != self.dim || m.rank() != 2 || m.variance != [to, to] {
            return Err(NordenError::DimensionMismatch(
                "index moving needs a matching symmetric rank-2 tensor".into(),
            ));
        }
        let mut variance = self.variance.clone();
        variance[slot] = to;
        let d = self.dim;
        let mut src = vec![0usize; self.rank()];
        Ok(Tensor::from_fn(d, &variance, |ix| {
            src.copy_from_slice(ix);
            (0..d)
                .map(|k| {
                    src[slot] = k;
                    m.get(&[ix[slot], k]) * self.get(&src)
                })
                .sum()
        }))
    }

    /// Entrywise comparison under `tol`; reports the worst residual.
    pub fn approx_equal(&self, other: &Tensor, tol: Tolerance) -> Result<Comparison> {
        if self.dim != other.dim || self.variance != other.variance {
            return Err(NordenError::DimensionMismatch(format!(
                "cannot compare dim {} {:?} with dim {} {:?}",
                self.dim, self.variance, other.dim, other.variance
            )));
        }
        let mut equal = true;
        let mut worst = 0.0;
        let mut worst_off = 0;
        for (off, (a, b)) in self.data.iter().zip(&other.data).enumerate() {
            if !tol.close(*a, *b) {
                equal = false;
            }
            let r = (a - b).abs();
            if r > worst || r.is_nan() {
                worst = r;
                worst_off = off;
            }
        }
        let mut worst_index = vec![0; self.rank()];
        decode(worst_off, self.dim, &mut worst_index);
        Ok(Comparison { equal, max_residual: worst, worst_index })
    }

    /// `max |self - other|`; panics on shape mismatch.
    pub fn max_diff(&self, other: &Tensor) -> f64 {
        (self - other).max_abs()
    }
}

fn decode(mut off: usize, dim: usize, ix: &mut [usize]) {
    for slot in ix.iter_mut().rev() {
        *slot = off % dim;
        off /= dim;
    }
}

impl<const N: usize> Index<[usize; N]> for Tensor {
    type Output = f64;

    fn index(&self, ix: [usize; N]) -> &f64 {
        assert_eq!(N, self.rank(), "index arity does not match rank");
        &self.data[self.offset(&ix)]
    }
}

impl<const N: usize> IndexMut<[usize; N]> for Tensor {
    fn index_mut(&mut self, ix: [usize; N]) -> &mut f64 {
        assert_eq!(N, self.rank(), "index arity does not match rank");
        let o = self.offset(&ix);
        &mut self.data[o]
    }
}

impl Add for &Tensor {
    type Output = Tensor;
    fn add(self, rhs: &Tensor) -> Tensor {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Tensor {
    type Output = Tensor;
    fn sub(self, rhs: &Tensor) -> Tensor {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Add for Tensor {
    type Output = Tensor;
    fn add(self, rhs: Tensor) -> Tensor {
        &self + &rhs
    }
}

impl Sub for Tensor {
    type Output = Tensor;
    fn sub(self, rhs: Tensor) -> Tensor {
        &self - &rhs
    }
}

impl Mul<f64> for &Tensor {
    type Output = Tensor;
    fn mul(self, s: f64) -> Tensor {
        self.scale(s)
    }
}

impl Mul<f64> for Tensor {
    type Output = Tensor;
    fn mul(self, s: f64) -> Tensor {
        self.scale(s)
    }
}

impl Neg for &Tensor {
    type Output = Tensor;
    fn neg(self) -> Tensor {
        self.scale(-1.0)
    }
}

impl fmt::Display for Tensor {
    /// Lists the entries above 1e-12 with one-based indices.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for (ix, v) in self.entries() {
            if v.abs() > 1e-12 {
                writeln!(f, "{} = {}", format_index(&ix), v)?;
                any = true;
            }
        }
        if !any {
            writeln!(f, "(all components zero)")?;
        }
        Ok(())
    }
}
