//! Curvature of frame connections, the ψ/π operators, Weyl and Bochner
//! tensors, and the curvature relations between members of the complex
//! connection family.
//!
//! `(0,4)` tensors follow `L(x,y,z,u) = g(L(x,y)z, u)`.

use crate::connection::{
    build_prime, covariant_derivative, deformation_q, ConnectionCoeffs, ConnectionParams,
    PropertyCheck,
};
use crate::error::{NordenError, Result};
use crate::manifold::FrameManifold;
use crate::norden::{nabla_theta, NordenData};
use crate::report::{CheckRecord, VerificationReport};
use crate::tensor::{Down, Tensor, Tolerance, Up};

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    /// `r13[[i,j,k,l]]`: `e_l` coefficient of `R(e_i,e_j)e_k`.
    pub r13: Tensor,
    pub r04: Tensor,
    pub rho: Tensor,
    pub tau: f64,
    pub tau_star: f64,
}

/// `R(x,y)z = ∇_x∇_y z - ∇_y∇_x z - ∇_{[x,y]} z` with constant coefficients:
/// `R^l_{ijk} = Γ^m_{jk}Γ^l_{im} - Γ^m_{ik}Γ^l_{jm} - C^m_{ij}Γ^l_{mk}`.
pub fn curvature(m: &FrameManifold, c: &ConnectionCoeffs) -> Result<CurvatureData> {
    let d = m.dim();
    let gm = &c.gamma;
    let cs = m.structure_constants();
    let r13 = Tensor::from_fn(d, &[Down, Down, Down, Up], |ix| {
        let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
        let mut s = 0.0;
        for a in 0..d {
            s += gm[[j, k, a]] * gm[[i, a, l]] - gm[[i, k, a]] * gm[[j, a, l]]
                - cs[[i, j, a]] * gm[[a, k, l]];
        }
        s
    });
    let r04 = r13.lower(3, m.metric())?;
    let (rho, tau, tau_star) = ricci(m, &r04)?;
    Ok(CurvatureData { r13, r04, rho, tau, tau_star })
}

/// `(0,4)` curvature of a connection.
pub fn curvature_04(m: &FrameManifold, c: &ConnectionCoeffs) -> Result<Tensor> {
    Ok(curvature(m, c)?.r04)
}

/// `ρ(y,z) = g^{ij} L(e_i,y,z,e_j)`, `τ = g^{ij}ρ_ij`, `τ* = g^{ij}ρ(e_i,Je_j)`.
pub fn ricci(m: &FrameManifold, l: &Tensor) -> Result<(Tensor, f64, f64)> {
    let gi = m.metric_inverse()?;
    let rho = l.contract(0, 3, Some(gi))?;
    let tau = rho.contract(0, 1, Some(gi))?.data()[0];
    let rho_j = compose_j(m, &rho);
    let tau_star = rho_j.contract(0, 1, Some(gi))?.data()[0];
    Ok((rho, tau, tau_star))
}

/// `S(x, Jy)` for a `(0,2)` tensor.
pub fn compose_j(m: &FrameManifold, s: &Tensor) -> Tensor {
    let d = m.dim();
    let j = m.complex_structure();
    Tensor::from_fn(d, &[Down, Down], |ix| (0..d).map(|k| s[[ix[0], k]] * j[[k, ix[1]]]).sum())
}

/// `S(Jx, Jy)`.
fn conjugate_j(m: &FrameManifold, s: &Tensor) -> Tensor {
    let d = m.dim();
    let j = m.complex_structure();
    Tensor::from_fn(d, &[Down, Down], |ix| {
        let mut v = 0.0;
        for a in 0..d {
            for b in 0..d {
                v += j[[a, ix[0]]] * j[[b, ix[1]]] * s[[a, b]];
            }
        }
        v
    })
}

/// Symmetric hybrid part `½(S(x,y) - S(Jx,Jy))` of the symmetrisation of `a`.
pub fn hybrid_projection(m: &FrameManifold, a: &Tensor) -> Tensor {
    let s = a + &a.permute(&[1, 0]);
    (&s - &conjugate_j(m, &s)).scale(0.5)
}

/// The common pattern `h(y,z)S(x,u) - h(x,z)S(y,u) + h(x,u)S(y,z) - h(y,u)S(x,z)`.
fn psi_pattern(h: &Tensor, s: &Tensor) -> Tensor {
    Tensor::from_fn(h.dim(), &[Down, Down, Down, Down], |ix| {
        let (x, y, z, u) = (ix[0], ix[1], ix[2], ix[3]);
        h[[y, z]] * s[[x, u]] - h[[x, z]] * s[[y, u]] + h[[x, u]] * s[[y, z]] - h[[y, u]] * s[[x, z]]
    })
}

pub fn psi1(m: &FrameManifold, s: &Tensor) -> Tensor {
    psi_pattern(m.metric(), s)
}

/// `g(y,Jz)S(x,Ju) - g(x,Jz)S(y,Ju) + g(x,Ju)S(y,Jz) - g(y,Ju)S(x,Jz)`.
pub fn psi2(m: &FrameManifold, s: &Tensor) -> Tensor {
    psi_pattern(&m.g_j(), &compose_j(m, s))
}

/// `{ψ1 - ψ2}(S)`.
pub fn psi_diff(m: &FrameManifold, s: &Tensor) -> Tensor {
    psi1(m, s) - psi2(m, s)
}

pub fn pi1(m: &FrameManifold) -> Tensor {
    psi1(m, m.metric()).scale(0.5)
}

pub fn pi2(m: &FrameManifold) -> Tensor {
    psi2(m, m.metric()).scale(0.5)
}

/// `π3 = -ψ1(g̃)`.
pub fn pi3(m: &FrameManifold) -> Tensor {
    -&psi1(m, &m.g_j())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureLikeCheck {
    pub holds: bool,
    /// `max |L(x,y,z,u) + L(y,x,z,u)|`.
    pub antisymmetry_12: f64,
    /// `max |L(x,y,z,u) + L(x,y,u,z)|`.
    pub antisymmetry_34: f64,
    /// `max |L(x,y,z,u) + L(y,z,x,u) + L(z,x,y,u)|`.
    pub bianchi: f64,
}

impl CurvatureLikeCheck {
    pub fn residual(&self) -> f64 {
        self.antisymmetry_12.max(self.antisymmetry_34).max(self.bianchi)
    }
}

pub fn curvature_like_check(l: &Tensor, tol: Tolerance) -> CurvatureLikeCheck {
    let d = l.dim();
    let (mut a12, mut a34, mut b): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                for u in 0..d {
                    let v = l[[x, y, z, u]];
                    a12 = a12.max((v + l[[y, x, z, u]]).abs());
                    a34 = a34.max((v + l[[x, y, u, z]]).abs());
                    b = b.max((v + l[[y, z, x, u]] + l[[z, x, y, u]]).abs());
                }
            }
        }
    }
    let thr = tol.threshold(l.max_abs());
    CurvatureLikeCheck {
        holds: a12 <= thr && a34 <= thr && b <= thr,
        antisymmetry_12: a12,
        antisymmetry_34: a34,
        bianchi: b,
    }
}

/// `max |L(x,y,Jz,Ju) + L(x,y,z,u)|`.
pub fn kahler_check(m: &FrameManifold, l: &Tensor, tol: Tolerance) -> PropertyCheck {
    let d = m.dim();
    let j = m.complex_structure();
    // L(x,y,Jz,Ju) by two single-slot contractions
    let lz = Tensor::from_fn(d, &[Down; 4], |ix| {
        (0..d).map(|a| j[[a, ix[2]]] * l[[ix[0], ix[1], a, ix[3]]]).sum()
    });
    let lzu = Tensor::from_fn(d, &[Down; 4], |ix| {
        (0..d).map(|a| j[[a, ix[3]]] * lz[[ix[0], ix[1], ix[2], a]]).sum()
    });
    let residual = (&lzu + l).max_abs();
    PropertyCheck { holds: residual <= tol.threshold(l.max_abs()), residual }
}

/// `W = L - (1/(2(n-1))){ψ1(ρ) - τ/(2n-1) π1}`.
pub fn weyl(m: &FrameManifold, l: &Tensor) -> Result<Tensor> {
    let n = m.n();
    if n < 2 {
        return Err(NordenError::DimensionTooSmall { required: 4, found: m.dim() });
    }
    let nf = n as f64;
    let (rho, tau, _) = ricci(m, l)?;
    let inner = psi1(m, &rho) - pi1(m).scale(tau / (2.0 * nf - 1.0));
    Ok(l - &inner.scale(1.0 / (2.0 * (nf - 1.0))))
}

/// `B = L - (1/(2(n-2))){ψ1-ψ2}(ρ) + (1/(4(n-1)(n-2))){τ(π1-π2) + τ*π3}` for a
/// Kähler curvature-like `L`.
pub fn bochner(m: &FrameManifold, l: &Tensor, tol: Tolerance) -> Result<Tensor> {
    let n = m.n();
    if n < 3 {
        return Err(NordenError::DimensionTooSmall { required: 6, found: m.dim() });
    }
    let k = kahler_check(m, l, tol);
    if !k.holds {
        return Err(NordenError::PreconditionViolation(format!(
            "Bochner tensor needs a Kaehler curvature-like input; Kaehler residual {:.3e}",
            k.residual
        )));
    }
    let nf = n as f64;
    let (rho, tau, tau_star) = ricci(m, l)?;
    let scalar = (pi1(m) - pi2(m)).scale(tau) + pi3(m).scale(tau_star);
    Ok(l - &psi_diff(m, &rho).scale(1.0 / (2.0 * (nf - 2.0)))
        + scalar.scale(1.0 / (4.0 * (nf - 1.0) * (nf - 2.0))))
}

pub(crate) fn outer(a: &[f64], b: &[f64]) -> Tensor {
    Tensor::from_fn(a.len(), &[Down, Down], |ix| a[ix[0]] * b[ix[1]])
}

fn theta_square_difference(nd: &NordenData) -> Tensor {
    outer(nd.theta(), nd.theta()) - outer(nd.theta_star(), nd.theta_star())
}

/// `θ(x)θ(Jy) + θ(Jx)θ(y)`.
pub fn s3_tensor(nd: &NordenData) -> Tensor {
    outer(nd.theta(), nd.theta_star()) + outer(nd.theta_star(), nd.theta())
}

/// Warning text when `θ*` is not closed.
pub fn theta_star_closed_warning(m: &FrameManifold, nd: &NordenData) -> Option<String> {
    let r = m.closedness_residual(nd.theta_star());
    let thr = Tolerance::default().threshold(m.structure_constants().max_abs() * nd.theta.max_abs());
    (r > thr).then(|| format!("theta* is not closed (max |d theta*| = {r:.3e})"))
}

/// `P(x,y) = (∇_xθ)Jy + (1/2n)θ(x)θ(y) + θ(Ω)/(4n) g(x,y) + θ(JΩ)/(2n) g(x,Jy)`.
pub fn p_tensor(m: &FrameManifold, nd: &NordenData, lc: &ConnectionCoeffs) -> Tensor {
    let n = m.n() as f64;
    let nt = nabla_theta(m, lc, nd.theta());
    compose_j(m, &nt)
        + outer(nd.theta(), nd.theta()).scale(1.0 / (2.0 * n))
        + m.metric().scale(nd.theta_omega() / (4.0 * n))
        + m.g_j().scale(nd.theta_j_omega(m) / (2.0 * n))
}

/// The `(0,2)` tensors entering the curvature relations of the complex family.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedCurvatureInputs {
    pub p: Tensor,
    pub a1: Tensor,
    pub a2: Tensor,
    pub s1: Tensor,
    pub s2: Tensor,
    pub s3: Tensor,
    pub warnings: Vec<String>,
}

pub fn derived_inputs(
    m: &FrameManifold,
    nd: &NordenData,
    lc: &ConnectionCoeffs,
    params: &ConnectionParams,
) -> DerivedCurvatureInputs {
    let n = m.n() as f64;
    let [_, _, _, _, l5, l6, l7, l8] = params.lambda;
    let nt = nabla_theta(m, lc, nd.theta());
    let ntj = compose_j(m, &nt);
    let tt = theta_square_difference(nd);
    let s3 = s3_tensor(nd);
    let to = nd.theta_omega();
    let tjo = nd.theta_j_omega(m);
    let g = m.metric();
    let gj = m.g_j();

    let a1 = (&nt + &tt.scale(l7 / n)).scale(l7 / n)
        + (&ntj + &tt.scale((1.0 - 2.0 * l8) / (2.0 * n))).scale(l8 / n)
        + s3.scale(l7 * (4.0 * l8 - 1.0) / (2.0 * n * n));
    let a2 = (&nt - &tt.scale(l5 / n)).scale(-l5 / n)
        - (&ntj + &tt.scale((1.0 + 2.0 * l6) / (2.0 * n))).scale(l6 / n)
        + s3.scale(l5 * (4.0 * l6 + 1.0) / (2.0 * n * n));
    let s1 = &nt + &tt.scale(l7 / n) - g.scale(l7 * to / (2.0 * n)) + gj.scale(l7 * tjo / (2.0 * n));
    let s2 = &ntj + &tt.scale((1.0 - 2.0 * l8) / (2.0 * n))
        + g.scale(l8 * to / (2.0 * n))
        + gj.scale((1.0 - l8) * tjo / (2.0 * n));
    let warnings = theta_star_closed_warning(m, nd).into_iter().collect();
    DerivedCurvatureInputs { p: p_tensor(m, nd, lc), a1, a2, s1, s2, s3, warnings }
}

/// `g(y,z)A1(x,u) - g(x,z)A1(y,u) + g(x,u)A2(y,z) - g(y,u)A2(x,z)
///  - g(y,Jz)A1(x,Ju) + g(x,Jz)A1(y,Ju) - g(x,Ju)A2(y,Jz) + g(y,Ju)A2(x,Jz)`.
fn mixed_psi(m: &FrameManifold, a1: &Tensor, a2: &Tensor) -> Tensor {
    let g = m.metric();
    let gj = m.g_j();
    let a1j = compose_j(m, a1);
    let a2j = compose_j(m, a2);
    Tensor::from_fn(m.dim(), &[Down; 4], |ix| {
        let (x, y, z, u) = (ix[0], ix[1], ix[2], ix[3]);
        g[[y, z]] * a1[[x, u]] - g[[x, z]] * a1[[y, u]] + g[[x, u]] * a2[[y, z]]
            - g[[y, u]] * a2[[x, z]]
            - gj[[y, z]] * a1j[[x, u]]
            + gj[[x, z]] * a1j[[y, u]]
            - gj[[x, u]] * a2j[[y, z]]
            + gj[[y, u]] * a2j[[x, z]]
    })
}

/// `R' = R + (∇_xQ)(y,z,u) - (∇_yQ)(x,z,u) + Q(x,Q(y,z),u) - Q(y,Q(x,z),u)`
/// with `Q` lowered by `g`.
pub fn prime_curvature_from_deformation(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    r: &Tensor,
    q: &Tensor,
) -> Result<Tensor> {
    let d = m.dim();
    let ql = q.lower(2, m.metric())?;
    let dq = covariant_derivative(m, lc, &ql)?;
    let qq = Tensor::from_fn(d, &[Down; 4], |ix| {
        let (x, y, z, u) = (ix[0], ix[1], ix[2], ix[3]);
        (0..d).map(|a| q[[y, z, a]] * ql[[x, a, u]]).sum()
    });
    let swap = [1, 0, 2, 3];
    Ok(r + &(&dq - &dq.permute(&swap)) + (&qq - &qq.permute(&swap)))
}

/// `R' = R⁰ + mixed ψ(A1, A2) + scalar terms in θ(Ω), θ(JΩ)`.
pub fn prime_curvature_from_zero(
    m: &FrameManifold,
    nd: &NordenData,
    r0: &Tensor,
    inputs: &DerivedCurvatureInputs,
    params: &ConnectionParams,
) -> Tensor {
    let n = m.n() as f64;
    let n2 = n * n;
    let [_, _, _, _, l5, l6, l7, l8] = params.lambda;
    let to = nd.theta_omega();
    let tjo = nd.theta_j_omega(m);
    let c12 = (l5 * l7 - l6 * l8) / n2 * to + (l7 - l5 + 2.0 * (l5 * l8 + l6 * l7)) / (2.0 * n2) * tjo;
    let c3 = (l5 * l8 + l6 * l7) / n2 * to - (l6 - l8 + 2.0 * (l5 * l7 - l6 * l8)) / (2.0 * n2) * tjo;
    r0 + &mixed_psi(m, &inputs.a1, &inputs.a2) + (pi1(m) - pi2(m)).scale(c12) - pi3(m).scale(c3)
}

/// Closed form of `R'` in the six-parameter family (`λ7 = -λ5`, `λ8 = -λ6`).
pub fn kahler_family_closed_form(
    m: &FrameManifold,
    nd: &NordenData,
    r0: &Tensor,
    inputs: &DerivedCurvatureInputs,
    params: &ConnectionParams,
) -> Tensor {
    let n = m.n() as f64;
    let n2 = n * n;
    let l7 = params.lambda[6];
    let l8 = params.lambda[7];
    let to = nd.theta_omega();
    let tjo = nd.theta_j_omega(m);
    r0 + &psi_diff(m, &inputs.s1).scale(l7 / n)
        + psi_diff(m, &inputs.s2).scale(l8 / n)
        + psi_diff(m, &inputs.s3).scale(l7 * (4.0 * l8 - 1.0) / (2.0 * n2))
        + (pi1(m) - pi2(m)).scale(l7 * (1.0 - 2.0 * l8) * tjo / n2)
        + pi3(m).scale(2.0 * l7 * l8 * to / n2)
}

fn scale_of(ts: &[&Tensor]) -> f64 {
    ts.iter().fold(0.0, |a: f64, t| a.max(t.max_abs()))
}

/// Three independent computations of `R'`: directly from the coefficients of
/// `∇'`, from `R` and the deformation tensor, and from `R⁰` with `A1`, `A2`.
pub fn prime_vs_zero_relation(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    nd: &NordenData,
    params: &ConnectionParams,
    tol: Tolerance,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("curvature of the complex family", tol);
    let r = curvature_04(m, lc)?;
    let zero = build_prime(m, lc, nd, &ConnectionParams::zero());
    let r0 = curvature_04(m, &zero)?;
    let prime = build_prime(m, lc, nd, params);
    let direct = curvature_04(m, &prime)?;
    let q = deformation_q(m, nd, params);
    let via_q = prime_curvature_from_deformation(m, lc, &r, &q)?;
    let inputs = derived_inputs(m, nd, lc, params);
    let via_zero = prime_curvature_from_zero(m, nd, &r0, &inputs, params);
    let n = m.n() as f64;
    let r0_from_p = &r - &psi1(m, &inputs.p).scale(1.0 / (2.0 * n));

    let thr = tol.threshold(scale_of(&[&direct, &r, &r0]));
    let with_params = |rec: CheckRecord| {
        params
            .lambda
            .iter()
            .enumerate()
            .fold(rec, |rec, (i, v)| rec.with_param(&format!("lambda{}", i + 1), *v))
    };
    report.push(with_params(CheckRecord::check(
        "R-prime direct vs deformation",
        "curvature of the shifted connection equals R + dQ terms + Q.Q terms",
        direct.max_diff(&via_q),
        thr,
    )));
    report.push(with_params(CheckRecord::check(
        "R-prime direct vs R0 relation",
        "R' = R0 + mixed psi(A1, A2) + scalar multiples of pi1 - pi2 and pi3",
        direct.max_diff(&via_zero),
        thr,
    )));
    report.push(with_params(CheckRecord::check(
        "R-prime deformation vs R0 relation",
        "the two reconstructions of R' agree",
        via_q.max_diff(&via_zero),
        thr,
    )));
    report.push(CheckRecord::check(
        "R0 from P",
        "R0 = R - psi1(P)/2n",
        r0.max_diff(&r0_from_p),
        thr,
    ));
    for w in inputs.warnings {
        report.warn(w);
    }
    report.warnings.extend(prime.warnings);
    Ok(report)
}

/// Checks on the six-parameter family `λ7 = -λ5`, `λ8 = -λ6`.
pub fn kahler_family_curvature(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    nd: &NordenData,
    params: &ConnectionParams,
    tol: Tolerance,
) -> Result<VerificationReport> {
    let defect = params.kahler_defect();
    if defect > tol.absolute {
        return Err(NordenError::PreconditionViolation(format!(
            "six-parameter family needs lambda7 = -lambda5 and lambda8 = -lambda6 (defect {defect:.3e})"
        )));
    }
    let mut report = VerificationReport::new("Kaehler curvature of the six-parameter family", tol);
    let prime = build_prime(m, lc, nd, params);
    let rp = curvature_04(m, &prime)?;
    let r0 = curvature_04(m, &build_prime(m, lc, nd, &ConnectionParams::zero()))?;
    let inputs = derived_inputs(m, nd, lc, params);
    let closed = kahler_family_closed_form(m, nd, &r0, &inputs, params);
    let thr = tol.threshold(scale_of(&[&rp, &r0]));

    let cl = curvature_like_check(&rp, tol);
    report.push(CheckRecord::check("R-prime curvature-like", "R' has the symmetries of a curvature tensor", cl.residual(), thr));
    let k = kahler_check(m, &rp, tol);
    report.push(CheckRecord::check("R-prime Kaehler", "R'(x,y,Jz,Ju) = -R'(x,y,z,u)", k.residual, thr));
    report.push(CheckRecord::check(
        "R-prime closed form",
        "R' = R0 + combination of {psi1 - psi2}(S_i) and pi tensors",
        rp.max_diff(&closed),
        thr,
    ));
    let a_scale = tol.threshold(scale_of(&[&inputs.a1, &inputs.a2]));
    report.push(CheckRecord::check("A1 = A2", "A1 = A2 on the six-parameter family", inputs.a1.max_diff(&inputs.a2), a_scale));
    for w in inputs.warnings {
        report.warn(w);
    }
    report.warnings.extend(prime.warnings);
    Ok(report)
}

/// `B(R') = B(R⁰)` on the six-parameter family, dimension at least 6.
pub fn bochner_invariance(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    nd: &NordenData,
    params: &ConnectionParams,
    tol: Tolerance,
) -> Result<VerificationReport> {
    if m.dim() < 6 {
        return Err(NordenError::DimensionTooSmall { required: 6, found: m.dim() });
    }
    let defect = params.kahler_defect();
    if defect > tol.absolute {
        return Err(NordenError::PreconditionViolation(format!(
            "Bochner invariance needs lambda7 = -lambda5 and lambda8 = -lambda6 (defect {defect:.3e})"
        )));
    }
    let rp = curvature_04(m, &build_prime(m, lc, nd, params))?;
    let r0 = curvature_04(m, &build_prime(m, lc, nd, &ConnectionParams::zero()))?;
    let bp = bochner(m, &rp, tol)?;
    let b0 = bochner(m, &r0, tol)?;
    let mut report = VerificationReport::new("Bochner invariance", tol);
    report.push(CheckRecord::check(
        "Bochner invariance",
        "B(R') = B(R0)",
        bp.max_diff(&b0),
        tol.threshold(scale_of(&[&rp, &r0])),
    ));
    Ok(report)
}
