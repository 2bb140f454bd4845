//! Linear connections in a left-invariant frame.
//!
//! `gamma[[i,j,k]]` is the `e_k` coefficient of `∇_{e_i} e_j`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{NordenError, Result};
use crate::manifold::FrameManifold;
use crate::norden::{w1_residual, NordenData};
use crate::tensor::{Down, Slot, Tensor, Tolerance, Up};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LeviCivita,
    Prime,
    Symmetric,
    Natural,
    Zero,
    Canonical,
    Yano,
    /// `∇ + σ(x)y + σ(y)x - g(x,y)Θ`.
    Conformal,
    /// Raw coefficients supplied by the caller.
    Custom,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::LeviCivita => "levi-civita",
            Family::Prime => "prime",
            Family::Symmetric => "symmetric",
            Family::Natural => "natural",
            Family::Zero => "zero",
            Family::Canonical => "canonical",
            Family::Yano => "yano",
            Family::Conformal => "conformal",
            Family::Custom => "custom",
        }
    }

    /// Number of free parameters a family takes on the command line.
    pub fn arity(self) -> usize {
        match self {
            Family::Prime => 8,
            Family::Symmetric => 4,
            Family::Natural => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The eight deformation parameters. The symmetric and natural families are
/// embedded as special parameter vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionParams {
    pub lambda: [f64; 8],
}

impl ConnectionParams {
    pub fn new(lambda: [f64; 8]) -> Self {
        Self { lambda }
    }

    pub fn zero() -> Self {
        Self { lambda: [0.0; 8] }
    }

    /// `λ1 = -λ4 = λ5 = μ1`, `λ2 = λ6 = λ3 - 1/2 = μ2`, `λ7 = μ3`, `λ8 = μ4`.
    pub fn from_mu(mu: [f64; 4]) -> Self {
        let [m1, m2, m3, m4] = mu;
        Self { lambda: [m1, m2, m2 + 0.5, -m1, m1, m2, m3, m4] }
    }

    /// `λ1..λ4 = 0`, `λ5 = -t`, `λ6 = -s`, `λ7 = t`, `λ8 = s`.
    pub fn from_natural(s: f64, t: f64) -> Self {
        Self { lambda: [0.0, 0.0, 0.0, 0.0, -t, -s, t, s] }
    }

    pub fn canonical() -> Self {
        Self::from_natural(0.25, 0.0)
    }

    pub fn yano() -> Self {
        Self::from_mu([0.0, -0.25, 0.0, 0.25])
    }

    /// Largest violation of the symmetry constraints.
    pub fn symmetry_defect(&self) -> f64 {
        let l = &self.lambda;
        [l[0] + l[3], l[0] - l[4], l[1] - l[5], l[2] - 0.5 - l[1]]
            .iter()
            .fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    /// Largest violation of the naturality constraints.
    pub fn naturality_defect(&self) -> f64 {
        let l = &self.lambda;
        [l[0], l[1], l[2], l[3], l[6] + l[4], l[7] + l[5]]
            .iter()
            .fold(0.0, |a: f64, v| a.max(v.abs()))
    }

    /// Largest violation of `λ7 = -λ5`, `λ8 = -λ6`.
    pub fn kahler_defect(&self) -> f64 {
        let l = &self.lambda;
        (l[6] + l[4]).abs().max((l[7] + l[5]).abs())
    }

    /// `(μ1, μ2, μ3, μ4)` when the vector lies in the symmetric family.
    pub fn mu(&self, tol: f64) -> Option<[f64; 4]> {
        (self.symmetry_defect() <= tol)
            .then(|| [self.lambda[0], self.lambda[1], self.lambda[6], self.lambda[7]])
    }

    /// `(s, t)` when the vector lies in the natural family.
    pub fn natural(&self, tol: f64) -> Option<(f64, f64)> {
        (self.naturality_defect() <= tol).then(|| (self.lambda[7], self.lambda[6]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoeffs {
    pub gamma: Tensor,
    pub family: Family,
    pub params: Option<ConnectionParams>,
    /// Hypotheses of the defining construction that did not hold.
    pub warnings: Vec<String>,
}

impl ConnectionCoeffs {
    pub fn custom(gamma: Tensor) -> Result<Self> {
        if gamma.variance() != [Down, Down, Up] {
            return Err(NordenError::UnsupportedVariance(
                "connection coefficients must have variance (down, down, up)".into(),
            ));
        }
        Ok(Self { gamma, family: Family::Custom, params: None, warnings: Vec::new() })
    }

    /// `∇_x y` for frame components.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.gamma.dim();
        let mut out = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.gamma[[i, j, k]];
                }
            }
        }
        out
    }
}

/// Levi-Civita connection via the Koszul formula
/// `2g(∇_i e_j, e_k) = g([e_i,e_j],e_k) + g([e_k,e_i],e_j) + g([e_k,e_j],e_i)`.
pub fn levi_civita(m: &FrameManifold) -> Result<ConnectionCoeffs> {
    let gi = m.metric_inverse()?;
    let d = m.dim();
    let g = m.metric();
    let c = m.structure_constants();
    // cl[[i,j,k]] = g([e_i,e_j], e_k)
    let cl = Tensor::from_fn(d, &[Down, Down, Down], |ix| {
        (0..d).map(|a| c[[ix[0], ix[1], a]] * g[[a, ix[2]]]).sum()
    });
    let koszul = Tensor::from_fn(d, &[Down, Down, Down], |ix| {
        let (i, j, k) = (ix[0], ix[1], ix[2]);
        0.5 * (cl[[i, j, k]] + cl[[k, i, j]] + cl[[k, j, i]])
    });
    let gamma = Tensor::from_fn(d, &[Down, Down, Up], |ix| {
        (0..d).map(|a| koszul[[ix[0], ix[1], a]] * gi[[a, ix[2]]]).sum()
    });
    Ok(ConnectionCoeffs { gamma, family: Family::LeviCivita, params: None, warnings: Vec::new() })
}

/// Frame data shared by the deformation formulas.
struct Forms {
    d: usize,
    n: f64,
    theta: Vec<f64>,
    theta_star: Vec<f64>,
    omega: Vec<f64>,
    j_omega: Vec<f64>,
    g: Tensor,
    gj: Tensor,
    j: Tensor,
}

impl Forms {
    fn new(m: &FrameManifold, nd: &NordenData) -> Self {
        Self {
            d: m.dim(),
            n: m.n() as f64,
            theta: nd.theta().to_vec(),
            theta_star: nd.theta_star().to_vec(),
            omega: nd.omega().to_vec(),
            j_omega: nd.j_omega(m),
            g: m.metric().clone(),
            gj: m.g_j(),
            j: m.complex_structure().clone(),
        }
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// The deformation tensor `Q(x,y)` with `∇' = ∇ + Q`; `q[[x,y,k]]` is the
/// `e_k` coefficient of `Q(e_x, e_y)`.
pub fn deformation_q(m: &FrameManifold, nd: &NordenData, p: &ConnectionParams) -> Tensor {
    let f = Forms::new(m, nd);
    let [l1, l2, l3, l4, l5, l6, l7, l8] = p.lambda;
    let (th, ts, om, jo) = (&f.theta, &f.theta_star, &f.omega, &f.j_omega);
    let (g, gj, j) = (&f.g, &f.gj, &f.j);
    Tensor::from_fn(f.d, &[Down, Down, Up], |ix| {
        let (x, y, k) = (ix[0], ix[1], ix[2]);
        let lead = ts[y] * delta(x, k) - g[[x, y]] * jo[k];
        let rest = l1 * th[x] * delta(y, k)
            + l2 * th[x] * j[[k, y]]
            + l3 * ts[x] * delta(y, k)
            + l4 * ts[x] * j[[k, y]]
            + l5 * (th[y] * delta(x, k) - ts[y] * j[[k, x]])
            + l6 * (th[y] * j[[k, x]] + ts[y] * delta(x, k))
            + l7 * (g[[x, y]] * om[k] - gj[[x, y]] * jo[k])
            + l8 * (gj[[x, y]] * om[k] + g[[x, y]] * jo[k]);
        lead / (2.0 * f.n) + rest / f.n
    })
}

fn hypothesis_warnings(m: &FrameManifold, nd: &NordenData) -> Vec<String> {
    let r = w1_residual(m, nd);
    let thr = Tolerance::default().threshold(nd.f.max_abs());
    if r > thr {
        vec![format!("manifold is not in W1 (residual {r:.3e}); family properties may fail")]
    } else {
        Vec::new()
    }
}

fn shifted(lc: &ConnectionCoeffs, q: &Tensor, family: Family, p: ConnectionParams) -> ConnectionCoeffs {
    ConnectionCoeffs { gamma: &lc.gamma + q, family, params: Some(p), warnings: Vec::new() }
}

fn assert_property(c: &mut ConnectionCoeffs, name: &str, check: PropertyCheck) {
    if !check.holds {
        c.warnings.push(format!("{} connection is not {name}: residual {:.3e}", c.family, check.residual));
    }
}

/// `∇' = ∇ + Q` for an arbitrary parameter vector.
pub fn build_prime(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    nd: &NordenData,
    p: &ConnectionParams,
) -> ConnectionCoeffs {
    let q = deformation_q(m, nd, p);
    let mut c = shifted(lc, &q, Family::Prime, *p);
    c.warnings = hypothesis_warnings(m, nd);
    let check = is_complex(m, &c, Tolerance::default());
    assert_property(&mut c, "complex", check);
    c
}

/// The four-parameter family of complex symmetric connections, from its own
/// formula (not through the eight-parameter embedding).
pub fn build_symmetric(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    nd: &NordenData,
    mu: [f64; 4],
) -> ConnectionCoeffs {
    let f = Forms::new(m, nd);
    let [m1, m2, m3, m4] = mu;
    let (th, ts, om, jo) = (&f.theta, &f.theta_star, &f.omega, &f.j_omega);
    let (g, gj, j) = (&f.g, &f.gj, &f.j);
    let q = Tensor::from_fn(f.d, &[Down, Down, Up], |ix| {
        let (x, y, k) = (ix[0], ix[1], ix[2]);
        let lead = ts[x] * delta(y, k) + ts[y] * delta(x, k) - g[[x, y]] * jo[k];
        let rest = m1
            * (th[x] * delta(y, k) + th[y] * delta(x, k) - ts[x] * j[[k, y]] - ts[y] * j[[k, x]])
            + m2 * (ts[x] * delta(y, k) + ts[y] * delta(x, k) + th[x] * j[[k, y]] + th[y] * j[[k, x]])
            + m3 * (g[[x, y]] * om[k] - gj[[x, y]] * jo[k])
            + m4 * (gj[[x, y]] * om[k] + g[[x, y]] * jo[k]);
        lead / (2.0 * f.n) + rest / f.n
    });
    let mut c = shifted(lc, &q, Family::Symmetric, ConnectionParams::from_mu(mu));
    c.warnings = hypothesis_warnings(m, nd);
    let tol = Tolerance::default();
    let complex = is_complex(m, &c, tol);
    assert_property(&mut c, "complex", complex);
    let sym = is_symmetric(m, &c, tol);
    assert_property(&mut c, "symmetric", sym);
    c
}

/// The two-parameter family of natural connections, from its own formula.
pub fn build_natural(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    nd: &NordenData,
    s: f64,
    t: f64,
) -> ConnectionCoeffs {
    let f = Forms::new(m, nd);
    let (th, ts, om, jo) = (&f.theta, &f.theta_star, &f.omega, &f.j_omega);
    let (g, gj, j) = (&f.g, &f.gj, &f.j);
    let q = Tensor::from_fn(f.d, &[Down, Down, Up], |ix| {
        let (x, y, k) = (ix[0], ix[1], ix[2]);
        let lead = (1.0 - 2.0 * s) / (2.0 * f.n) * (ts[y] * delta(x, k) - g[[x, y]] * jo[k]);
        let rest = s * (gj[[x, y]] * om[k] - th[y] * j[[k, x]])
            + t * (g[[x, y]] * om[k] - gj[[x, y]] * jo[k] - th[y] * delta(x, k)
                + ts[y] * j[[k, x]]);
        lead + rest / f.n
    });
    let mut c = shifted(lc, &q, Family::Natural, ConnectionParams::from_natural(s, t));
    c.warnings = hypothesis_warnings(m, nd);
    let check = is_natural(m, &c, Tolerance::default());
    assert_property(&mut c, "natural", check);
    c
}

/// The semi-symmetric metric connection: every `λ_i = 0`.
pub fn build_zero(m: &FrameManifold, lc: &ConnectionCoeffs, nd: &NordenData) -> ConnectionCoeffs {
    let mut c = build_natural(m, lc, nd, 0.0, 0.0);
    c.family = Family::Zero;
    c
}

pub fn build_canonical(m: &FrameManifold, lc: &ConnectionCoeffs, nd: &NordenData) -> ConnectionCoeffs {
    let mut c = build_natural(m, lc, nd, 0.25, 0.0);
    c.family = Family::Canonical;
    c
}

pub fn build_yano(m: &FrameManifold, lc: &ConnectionCoeffs, nd: &NordenData) -> ConnectionCoeffs {
    let mut c = build_symmetric(m, lc, nd, [0.0, -0.25, 0.0, 0.25]);
    c.family = Family::Yano;
    c
}

/// Builds a member of `family` from a flat parameter list of the family's arity.
pub fn build_family(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    nd: &NordenData,
    family: Family,
    params: &[f64],
) -> Result<ConnectionCoeffs> {
    if params.len() != family.arity() {
        return Err(NordenError::PreconditionViolation(format!(
            "family {family} takes {} parameters, got {}",
            family.arity(),
            params.len()
        )));
    }
    Ok(match family {
        Family::LeviCivita => lc.clone(),
        Family::Prime => {
            let mut l = [0.0; 8];
            l.copy_from_slice(params);
            build_prime(m, lc, nd, &ConnectionParams::new(l))
        }
        Family::Symmetric => build_symmetric(m, lc, nd, [params[0], params[1], params[2], params[3]]),
        Family::Natural => build_natural(m, lc, nd, params[0], params[1]),
        Family::Zero => build_zero(m, lc, nd),
        Family::Canonical => build_canonical(m, lc, nd),
        Family::Yano => build_yano(m, lc, nd),
        Family::Conformal | Family::Custom => {
            return Err(NordenError::PreconditionViolation(format!(
                "family {family} has no parameter constructor"
            )))
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorsionTensor {
    /// `t[[x,y,k]]`: `e_k` coefficient of `T(e_x, e_y)`.
    pub t: Tensor,
    /// `T(x,y,z) = g(T(x,y), z)`.
    pub t_low: Tensor,
}

/// `T(x,y) = ∇_x y - ∇_y x - [x,y]`.
pub fn torsion(m: &FrameManifold, c: &ConnectionCoeffs) -> TorsionTensor {
    let d = m.dim();
    let gm = &c.gamma;
    let cs = m.structure_constants();
    let t = Tensor::from_fn(d, &[Down, Down, Up], |ix| {
        gm[[ix[0], ix[1], ix[2]]] - gm[[ix[1], ix[0], ix[2]]] - cs[[ix[0], ix[1], ix[2]]]
    });
    let t_low = t.lower(2, m.metric()).expect("torsion slot 3 is contravariant");
    TorsionTensor { t, t_low }
}

/// Closed form of the torsion of `∇'`:
/// `(1/n){(λ1-λ5)[θ(x)y-θ(y)x] + (λ2-λ6)[θ(x)Jy-θ(y)Jx]
///  + (λ3-λ6-1/2)[θ(Jx)y-θ(Jy)x] + (λ4+λ5)[θ(Jx)Jy-θ(Jy)Jx]}`.
pub fn prime_torsion_closed_form(m: &FrameManifold, nd: &NordenData, p: &ConnectionParams) -> Tensor {
    let d = m.dim();
    let n = m.n() as f64;
    let j = m.complex_structure();
    let th = nd.theta();
    let ts = nd.theta_star();
    let l = &p.lambda;
    let id = |y: usize, k: usize| delta(y, k);
    let jt = |y: usize, k: usize| j[[k, y]];
    Tensor::from_fn(d, &[Down, Down, Up], |ix| {
        let (x, y, k) = (ix[0], ix[1], ix[2]);
        let anti = |a: &[f64], b: &dyn Fn(usize, usize) -> f64| a[x] * b(y, k) - a[y] * b(x, k);
        ((l[0] - l[4]) * anti(th, &id)
            + (l[1] - l[5]) * anti(th, &jt)
            + (l[2] - l[5] - 0.5) * anti(ts, &id)
            + (l[3] + l[4]) * anti(ts, &jt))
            / n
    })
}

/// Covariant derivative of a fully covariant left-invariant tensor:
/// `(∇_i T)_{a..} = -Σ_slots Γ^m_{i a_s} T_{..m..}`. Slot 0 of the result is
/// the direction.
pub fn covariant_derivative(m: &FrameManifold, c: &ConnectionCoeffs, t: &Tensor) -> Result<Tensor> {
    if !t.is_fully_covariant() {
        return Err(NordenError::UnsupportedVariance(
            "covariant derivative is implemented for covariant tensors only".into(),
        ));
    }
    let d = m.dim();
    if t.dim() != d || c.gamma.dim() != d {
        return Err(NordenError::DimensionMismatch(format!(
            "tensor dim {}, connection dim {}, manifold dim {d}",
            t.dim(),
            c.gamma.dim()
        )));
    }
    let r = t.rank();
    let variance: Vec<Slot> = vec![Down; r + 1];
    let mut src = vec![0usize; r];
    Ok(Tensor::from_fn(d, &variance, |ix| {
        let i = ix[0];
        let mut sum = 0.0;
        for s in 0..r {
            src.copy_from_slice(&ix[1..]);
            let a = ix[s + 1];
            for mm in 0..d {
                let gam = c.gamma[[i, a, mm]];
                if gam != 0.0 {
                    src[s] = mm;
                    sum -= gam * t.get(&src);
                }
            }
        }
        sum
    }))
}

/// `(∇_i J) e_j = ∇_i(J e_j) - J(∇_i e_j)`; entry `[[i,j,l]]` is the `e_l`
/// coefficient.
pub fn nabla_j(m: &FrameManifold, c: &ConnectionCoeffs) -> Tensor {
    let d = m.dim();
    let j = m.complex_structure();
    let gm = &c.gamma;
    Tensor::from_fn(d, &[Down, Down, Up], |ix| {
        let (i, jj, l) = (ix[0], ix[1], ix[2]);
        let mut s = 0.0;
        for k in 0..d {
            s += j[[k, jj]] * gm[[i, k, l]] - gm[[i, jj, k]] * j[[l, k]];
        }
        s
    })
}

/// Expanded closed form of `(∇'_x g)(y,z) = -Q(x,y,z) - Q(x,z,y)` in terms of
/// `θ`, `g` and the parameters; entry `[[x,y,z]]`.
pub fn prime_metric_derivative_closed_form(
    m: &FrameManifold,
    nd: &NordenData,
    p: &ConnectionParams,
) -> Tensor {
    let d = m.dim();
    let n = m.n() as f64;
    let g = m.metric();
    let gj = m.g_j();
    let th = nd.theta();
    let ts = nd.theta_star();
    let [l1, l2, l3, l4, l5, l6, l7, l8] = p.lambda;
    Tensor::from_fn(d, &[Down, Down, Down], |ix| {
        let (x, y, z) = (ix[0], ix[1], ix[2]);
        let a = 2.0
            * (l1 * th[x] * g[[y, z]]
                + l2 * th[x] * gj[[y, z]]
                + l3 * ts[x] * g[[y, z]]
                + l4 * ts[x] * gj[[y, z]]);
        let b = (l5 + l7)
            * (th[y] * g[[x, z]] + th[z] * g[[x, y]] - ts[y] * gj[[x, z]] - ts[z] * gj[[x, y]]);
        let c = (l6 + l8)
            * (th[y] * gj[[x, z]] + th[z] * gj[[x, y]] + ts[y] * g[[x, z]] + ts[z] * g[[x, y]]);
        -(a + b + c) / n
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyCheck {
    pub holds: bool,
    pub residual: f64,
}

fn property(residual: f64, scale: f64, tol: Tolerance) -> PropertyCheck {
    PropertyCheck { holds: residual <= tol.threshold(scale), residual }
}

/// `max |∇J|`.
pub fn is_complex(m: &FrameManifold, c: &ConnectionCoeffs, tol: Tolerance) -> PropertyCheck {
    property(nabla_j(m, c).max_abs(), c.gamma.max_abs(), tol)
}

/// `max |T|`.
pub fn is_symmetric(m: &FrameManifold, c: &ConnectionCoeffs, tol: Tolerance) -> PropertyCheck {
    let scale = c.gamma.max_abs().max(m.structure_constants().max_abs());
    property(torsion(m, c).t.max_abs(), scale, tol)
}

/// `max(|∇J|, |∇g|)`.
pub fn is_natural(m: &FrameManifold, c: &ConnectionCoeffs, tol: Tolerance) -> PropertyCheck {
    let nj = nabla_j(m, c).max_abs();
    let ng = covariant_derivative(m, c, m.metric())
        .expect("metric is covariant")
        .max_abs();
    property(nj.max(ng), c.gamma.max_abs() * m.metric().max_abs().max(1.0), tol)
}
