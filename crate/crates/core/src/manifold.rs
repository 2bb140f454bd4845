//! Homogeneous geometric data of an almost complex manifold with Norden metric.
//!
//! Every tensor field is taken to be left-invariant on a Lie group: its
//! components in a fixed left-invariant frame `e_1, ..., e_2n` are constants.
//! Directional derivatives of component functions therefore vanish, and every
//! differential operator reduces to an algebraic expression in the structure
//! constants and connection coefficients. In particular
//!
//! * `dω(e_i, e_j) = -ω([e_i, e_j])` for a 1-form `ω`,
//! * `(∇_x ω)(y) = -ω(∇_x y)` for a covariant tensor, slot by slot,
//! * curvature has no partial-derivative terms.
//!
//! Conventions: `g[[i,j]] = g(e_i, e_j)`, `j[[k,i]]` is the `e_k` coefficient
//! of `J e_i`, and `c[[i,j,k]]` is the `e_k` coefficient of `[e_i, e_j]`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{NordenError, Result};
use crate::report::{CheckRecord, VerificationReport};
use crate::tensor::{Down, Tensor, Tolerance, Up};

/// Largest supported frame dimension.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameManifold {
    n: usize,
    g: Tensor,
    g_inv: Option<Tensor>,
    j: Tensor,
    c: Tensor,
}

/// The associated metric `g̃(x, y) = g(x, Jy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociatedMetric {
    pub g_tilde: Tensor,
}

impl FrameManifold {
    /// Assembles a manifold from raw frame components. Only shapes are checked
    /// here; geometric invariants are checked by [`FrameManifold::validate`].
    pub fn new(n: usize, g: Tensor, j: Tensor, c: Tensor) -> Result<Self> {
        let d = 2 * n;
        if n == 0 || d > MAX_DIM {
            return Err(NordenError::DimensionMismatch(format!(
                "half-dimension must be in 1..={}, got {n}",
                MAX_DIM / 2
            )));
        }
        for (name, t, var) in [
            ("g", &g, &[Down, Down][..]),
            ("J", &j, &[Up, Down][..]),
            ("C", &c, &[Down, Down, Up][..]),
        ] {
            if t.dim() != d || t.variance() != var {
                return Err(NordenError::DimensionMismatch(format!(
                    "{name} must have dim {d} and variance {var:?}, got dim {} {:?}",
                    t.dim(),
                    t.variance()
                )));
            }
        }
        let g_inv = invert(&g);
        Ok(Self { n, g, g_inv, j, c })
    }

    /// Builds a manifold from row-major matrices: `g_rows[i][j] = g(e_i,e_j)`,
    /// `j_rows[k][i]` = `e_k` coefficient of `J e_i`.
    pub fn from_matrices(g_rows: &[Vec<f64>], j_rows: &[Vec<f64>], c: Tensor) -> Result<Self> {
        let g = Tensor::from_rows(g_rows, [Down, Down])?;
        let j = Tensor::from_rows(j_rows, [Up, Down])?;
        if g.dim() % 2 != 0 {
            return Err(NordenError::DimensionMismatch("dimension must be even".into()));
        }
        Self::new(g.dim() / 2, g, j, c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn metric(&self) -> &Tensor {
        &self.g
    }

    pub fn metric_inverse(&self) -> Result<&Tensor> {
        self.g_inv.as_ref().ok_or(NordenError::NoInverse)
    }

    pub fn complex_structure(&self) -> &Tensor {
        &self.j
    }

    pub fn structure_constants(&self) -> &Tensor {
        &self.c
    }

    /// `g(x, y)` for frame components.
    pub fn g(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for k in 0..d {
                s += x[i] * self.g[[i, k]] * y[k];
            }
        }
        s
    }

    /// `J x`.
    pub fn apply_j(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|k| (0..d).map(|i| self.j[[k, i]] * x[i]).sum()).collect()
    }

    /// `ω ∘ J` for a covector given by components.
    pub fn covector_j(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|k| w[k] * self.j[[k, i]]).sum()).collect()
    }

    /// Components of `g(x, J e_j)`-style products: `gj[[i, l]] = g(e_i, J e_l)`.
    pub fn g_j(&self) -> Tensor {
        self.associated_metric().g_tilde
    }

    pub fn associated_metric(&self) -> AssociatedMetric {
        let d = self.dim();
        let g_tilde = Tensor::from_fn(d, &[Down, Down], |ix| {
            (0..d).map(|k| self.g[[ix[0], k]] * self.j[[k, ix[1]]]).sum()
        });
        AssociatedMetric { g_tilde }
    }

    /// `[x, y]^k = C_{ij}^k x^i y^j`.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if y[j] == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += self.c[[i, j, k]] * x[i] * y[j];
                }
            }
        }
        out
    }

    pub fn basis(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dim()];
        e[i] = 1.0;
        e
    }

    /// Metric dual vector `g^{-1} ω`.
    pub fn raise_covector(&self, w: &[f64]) -> Result<Vec<f64>> {
        let gi = self.metric_inverse()?;
        let d = self.dim();
        Ok((0..d).map(|k| (0..d).map(|i| gi[[k, i]] * w[i]).sum()).collect())
    }

    /// Left-invariant exterior derivative `dω(e_i, e_j) = -ω([e_i, e_j])`.
    pub fn exterior_derivative(&self, w: &[f64]) -> Tensor {
        let d = self.dim();
        Tensor::from_fn(d, &[Down, Down], |ix| {
            -(0..d).map(|k| self.c[[ix[0], ix[1], k]] * w[k]).sum::<f64>()
        })
    }

    /// Largest `|dω(e_i, e_j)|`.
    pub fn closedness_residual(&self, w: &[f64]) -> f64 {
        self.exterior_derivative(w).max_abs()
    }

    /// The same frame data with `g` replaced by `c·g` (conformal factor frozen
    /// at a point).
    pub fn scaled(&self, factor: f64) -> Self {
        let g = self.g.scale(factor);
        let g_inv = self.g_inv.as_ref().map(|gi| gi.scale(1.0 / factor));
        Self { n: self.n, g, g_inv, j: self.j.clone(), c: self.c.clone() }
    }

    /// Re-expresses everything in the frame `e'_a = Σ_i basis[i][a] e_i`.
    pub fn change_frame(&self, basis: &[Vec<f64>]) -> Result<Self> {
        let d = self.dim();
        if basis.len() != d || basis.iter().any(|r| r.len() != d) {
            return Err(NordenError::DimensionMismatch("frame change must be 2n x 2n".into()));
        }
        let a = DMatrix::from_fn(d, d, |i, k| basis[i][k]);
        let a_inv = a.clone().try_inverse().ok_or_else(|| {
            NordenError::PreconditionViolation("frame change matrix is singular".into())
        })?;
        let g = Tensor::from_fn(d, &[Down, Down], |ix| {
            let mut s = 0.0;
            for i in 0..d {
                for k in 0..d {
                    s += a[(i, ix[0])] * self.g[[i, k]] * a[(k, ix[1])];
                }
            }
            s
        });
        let j = Tensor::from_fn(d, &[Up, Down], |ix| {
            let mut s = 0.0;
            for k in 0..d {
                for i in 0..d {
                    s += a_inv[(ix[0], k)] * self.j[[k, i]] * a[(i, ix[1])];
                }
            }
            s
        });
        let c = Tensor::from_fn(d, &[Down, Down, Up], |ix| {
            let mut s = 0.0;
            for i in 0..d {
                let ai = a[(i, ix[0])];
                if ai == 0.0 {
                    continue;
                }
                for j in 0..d {
                    let aj = a[(j, ix[1])];
                    if aj == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        s += ai * aj * self.c[[i, j, k]] * a_inv[(ix[2], k)];
                    }
                }
            }
            s
        });
        Self::new(self.n, g, j, c)
    }

    /// Numbers of positive and negative eigenvalues of `g` (threshold 1e-9).
    pub fn signature(&self) -> (usize, usize) {
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |i, k| 0.5 * (self.g[[i, k]] + self.g[[k, i]]));
        let eig = SymmetricEigen::new(m);
        let pos = eig.eigenvalues.iter().filter(|v| **v > 1e-9).count();
        let neg = eig.eigenvalues.iter().filter(|v| **v < -1e-9).count();
        (pos, neg)
    }

    pub fn determinant(&self) -> f64 {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, k| self.g[[i, k]]).determinant()
    }

    /// Residual of `J² = -Id`.
    pub fn j_squared_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for k in 0..d {
            for i in 0..d {
                let s: f64 = (0..d).map(|m| self.j[[k, m]] * self.j[[m, i]]).sum();
                let target = if k == i { -1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// Residual of `g(Je_i, Je_j) + g(e_i, e_j) = 0`.
    pub fn norden_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            let ji = self.apply_j(&self.basis(i));
            for j in 0..d {
                let jj = self.apply_j(&self.basis(j));
                worst = worst.max((self.g(&ji, &jj) + self.g[[i, j]]).abs());
            }
        }
        worst
    }

    pub fn symmetry_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.g[[i, j]] - self.g[[j, i]]).abs());
            }
        }
        worst
    }

    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    worst = worst.max((self.c[[i, j, k]] + self.c[[j, i, k]]).abs());
                }
            }
        }
        worst
    }

    /// Residual of `Σ_cyc [[e_i, e_j], e_k] = 0`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim();
        let c = &self.c;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut s = 0.0;
                        for m in 0..d {
                            s += c[[i, j, m]] * c[[m, k, l]]
                                + c[[j, k, m]] * c[[m, i, l]]
                                + c[[k, i, m]] * c[[m, j, l]];
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// One record per structural invariant. A singular metric is a failed
    /// record, not an error.
    pub fn validate(&self, tol: Tolerance) -> VerificationReport {
        let mut report = VerificationReport::new("manifold validation", tol);
        let gscale = self.g.max_abs();
        let cscale = self.c.max_abs();
        report.push(CheckRecord::check(
            "J squared",
            "J^2 = -Id",
            self.j_squared_residual(),
            tol.threshold(1.0),
        ));
        report.push(CheckRecord::check(
            "Norden condition",
            "g(Jx,Jy) = -g(x,y)",
            self.norden_residual(),
            tol.threshold(gscale),
        ));
        report.push(CheckRecord::check(
            "g symmetry",
            "g(x,y) = g(y,x)",
            self.symmetry_residual(),
            tol.threshold(gscale),
        ));
        let det = self.determinant();
        let mut nondeg = CheckRecord::check("g nondegenerate", "|det g| > 1e-12", 0.0, 1e-12);
        nondeg.residual = det.abs();
        nondeg.verdict = if det.abs() > 1e-12 && self.g_inv.is_some() {
            crate::report::Verdict::Pass
        } else {
            crate::report::Verdict::Fail
        };
        report.push(nondeg);
        let (pos, neg) = self.signature();
        let sig_off = (pos as f64 - self.n as f64).abs() + (neg as f64 - self.n as f64).abs();
        report.push(
            CheckRecord::check("g signature", "g is neutral of signature (n,n)", sig_off, 0.0)
                .with_param("positive", pos as f64)
                .with_param("negative", neg as f64),
        );
        report.push(CheckRecord::check(
            "C antisymmetry",
            "[x,y] = -[y,x]",
            self.antisymmetry_residual(),
            tol.threshold(cscale),
        ));
        report.push(CheckRecord::check(
            "Jacobi identity",
            "cyclic sum of [[x,y],z] vanishes",
            self.jacobi_residual(),
            tol.threshold(cscale * cscale),
        ));
        report
    }
}

fn invert(g: &Tensor) -> Option<Tensor> {
    let d = g.dim();
    let m = DMatrix::from_fn(d, d, |i, k| g[[i, k]]);
    if m.determinant().abs() <= 1e-12 {
        return None;
    }
    let inv = m.try_inverse()?;
    Some(Tensor::from_fn(d, &[Up, Up], |ix| inv[(ix[0], ix[1])]))
}

/// Structure constants from `(i, j, k, value)` entries meaning
/// `[e_i, e_j] ∋ value·e_k` (zero-based); fills in antisymmetric partners.
pub fn structure_constants(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Tensor {
    let mut c = Tensor::zeros(dim, &[Down, Down, Up]);
    for &(i, j, k, v) in entries {
        c[[i, j, k]] += v;
        c[[j, i, k]] -= v;
    }
    c
}

/// Flat Kähler model: abelian algebra, `g = diag(1..1, -1..-1)`,
/// `J e_a = e_{a+n}`.
pub fn flat_kahler(n: usize) -> FrameManifold {
    let d = 2 * n;
    let g = Tensor::from_fn(d, &[Down, Down], |ix| match (ix[0] == ix[1], ix[0] < n) {
        (false, _) => 0.0,
        (true, true) => 1.0,
        (true, false) => -1.0,
    });
    FrameManifold::new(n, g, standard_j(n), Tensor::zeros(d, &[Down, Down, Up]))
        .expect("flat model shapes are consistent")
}

/// `J e_a = e_{a+n}`, `J e_{a+n} = -e_a`.
pub fn standard_j(n: usize) -> Tensor {
    let d = 2 * n;
    Tensor::from_fn(d, &[Up, Down], |ix| {
        let (k, i) = (ix[0], ix[1]);
        if i < n && k == i + n {
            1.0
        } else if i >= n && k + n == i {
            -1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::{build_example, ExampleParams};
    use crate::report::Verdict;

    #[test]
    fn example_validates() {
        let m = build_example(&ExampleParams::new(1.0, 2.0));
        let r = m.validate(Tolerance::default());
        assert!(r.passed(), "{}", r.to_text());
        assert_eq!(m.signature(), (2, 2));
    }

    #[test]
    fn identity_j_fails_j_squared() {
        let m = build_example(&ExampleParams::new(1.0, 2.0));
        let bad = FrameManifold::new(
            2,
            m.metric().clone(),
            Tensor::identity(4),
            m.structure_constants().clone(),
        )
        .unwrap();
        let r = bad.validate(Tolerance::default());
        assert_eq!(r.record("J squared").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn perturbed_structure_constant_breaks_jacobi() {
        let m = build_example(&ExampleParams::new(1.0, 2.0));
        let mut c = m.structure_constants().clone();
        // [e1,e4] gains 0.1 e2
        c[[0, 3, 1]] += 0.1;
        c[[3, 0, 1]] -= 0.1;
        let bad = FrameManifold::new(2, m.metric().clone(), m.complex_structure().clone(), c).unwrap();
        let r = bad.validate(Tolerance::default());
        let jac = r.record("Jacobi identity").unwrap();
        assert_eq!(jac.verdict, Verdict::Fail);
        assert!(jac.residual > 1e-3);
    }

    #[test]
    fn singular_metric_is_reported_not_raised() {
        let m = flat_kahler(2);
        let mut g = m.metric().clone();
        g[[0, 0]] = 0.0;
        let bad = FrameManifold::new(2, g, standard_j(2), Tensor::zeros(4, &[Down, Down, Up])).unwrap();
        assert!(matches!(bad.metric_inverse(), Err(NordenError::NoInverse)));
        let r = bad.validate(Tolerance::default());
        assert_eq!(r.record("g nondegenerate").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn associated_metric_of_example() {
        let m = build_example(&ExampleParams::new(1.0, 2.0));
        let gt = m.associated_metric().g_tilde;
        // g̃(e1,e3) = g(e1, J e3) = g(e1, -e1) = -1, g̃(e2,e4) = -1
        assert_eq!(gt[[0, 2]], -1.0);
        assert_eq!(gt[[2, 0]], -1.0);
        assert_eq!(gt[[1, 3]], -1.0);
        for i in 0..4 {
            assert_eq!(gt[[i, i]], 0.0);
        }
        // direct definition g(x, Jy)
        for i in 0..4 {
            for j in 0..4 {
                let direct = m.g(&m.basis(i), &m.apply_j(&m.basis(j)));
                assert_eq!(direct, gt[[i, j]]);
                assert_eq!(gt[[i, j]], gt[[j, i]]);
            }
        }
    }

    #[test]
    fn flat_model_associated_metric_is_block_antidiagonal() {
        let m = flat_kahler(2);
        let gt = m.associated_metric().g_tilde;
        for i in 0..4 {
            for j in 0..4 {
                let expected = if (i + 2 == j) || (j + 2 == i) { -1.0 } else { 0.0 };
                assert_eq!(gt[[i, j]], expected, "({i},{j})");
            }
        }
    }

    #[test]
    fn example_brackets() {
        let (l, mu) = (1.5, -0.5);
        let m = build_example(&ExampleParams::new(l, mu));
        let b14 = m.bracket(&m.basis(0), &m.basis(3));
        assert_eq!(b14, vec![l, mu, -mu, l]);
        assert_eq!(m.bracket(&m.basis(0), &m.basis(1)), vec![0.0; 4]);
        let x = vec![0.3, -1.2, 0.7, 2.0];
        assert!(m.bracket(&x, &x).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn frame_change_preserves_invariants() {
        let m = build_example(&ExampleParams::new(0.7, -1.1));
        let basis = vec![
            vec![1.0, 0.2, 0.0, -0.3],
            vec![0.1, 1.3, 0.4, 0.0],
            vec![0.0, -0.5, 0.9, 0.2],
            vec![0.6, 0.0, 0.1, 1.1],
        ];
        let m2 = m.change_frame(&basis).unwrap();
        let r = m2.validate(Tolerance::default());
        assert!(r.passed(), "{}", r.to_text());
    }
}
