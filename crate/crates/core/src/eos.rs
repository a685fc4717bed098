//! Pressure law, Helmholtz potential and certification of the structural
//! convexity assumptions.
//!
//! The pressure is the two-power law `P(R, Z) = a1 R^γ + a2 Z^β`. The
//! Helmholtz potential is the ray integral
//!
//! ```text
//! H(R, Z) = R ∫_{s0}^{R} P(s, s Z/R) / s² ds,   H(0, Z) = 0,
//! ```
//!
//! where the lower limit `s0` is selected by [`HelmholtzAnchor`]. Both
//! anchors satisfy `R ∂_R H + Z ∂_Z H − H = P`; they differ by a term
//! `R g(Z/R)` that is homogeneous of degree one. Only the origin anchor gives
//! a potential that is convex on the whole domination cone for the power law.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower limit of the Helmholtz ray integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HelmholtzAnchor {
    /// `∫_0^R`. For the power law this is `a1 R^γ/(γ−1) + a2 Z^β/(β−1)`.
    #[default]
    Origin,
    /// `∫_1^R` as an oriented integral; normalizes `H(1, Z) = 0`.
    Unit,
}

impl HelmholtzAnchor {
    pub fn as_str(self) -> &'static str {
        match self {
            HelmholtzAnchor::Origin => "origin",
            HelmholtzAnchor::Unit => "unit",
        }
    }
}

impl std::str::FromStr for HelmholtzAnchor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "origin" => Ok(HelmholtzAnchor::Origin),
            "unit" => Ok(HelmholtzAnchor::Unit),
            other => Err(format!("unknown Helmholtz anchor '{other}' (expected origin|unit)")),
        }
    }
}

/// Coefficients of the isentropic bi-fluid pressure law and the domination
/// cone `b_low R ≤ Z ≤ b_high R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EosParams {
    pub a1: f64,
    pub a2: f64,
    pub gamma: f64,
    pub beta: f64,
    pub b_low: f64,
    pub b_high: f64,
    #[serde(default)]
    pub anchor: HelmholtzAnchor,
}

impl EosParams {
    pub fn new(a1: f64, a2: f64, gamma: f64, beta: f64, b_low: f64, b_high: f64) -> Result<Self> {
        let e = EosParams {
            a1,
            a2,
            gamma,
            beta,
            b_low,
            b_high,
            anchor: HelmholtzAnchor::Origin,
        };
        let problems = e.violations();
        if problems.is_empty() {
            Ok(e)
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn with_anchor(mut self, anchor: HelmholtzAnchor) -> Self {
        self.anchor = anchor;
        self
    }

    /// Every violated parameter invariant, as human-readable messages.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = [self.a1, self.a2, self.gamma, self.beta, self.b_low, self.b_high]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            out.push("eos parameters must be finite".to_string());
            return out;
        }
        if self.a1 <= 0.0 {
            out.push(format!("eos.a1 = {} must be > 0", self.a1));
        }
        if self.a2 <= 0.0 {
            out.push(format!("eos.a2 = {} must be > 0", self.a2));
        }
        if self.gamma <= 1.0 {
            out.push(format!("eos.gamma = {} must satisfy γ > 1", self.gamma));
        }
        if self.beta <= 1.0 {
            out.push(format!("eos.beta = {} must satisfy β > 1", self.beta));
        }
        if self.b_low <= 0.0 {
            out.push(format!("eos.b_low = {} must be > 0", self.b_low));
        }
        if self.b_high <= self.b_low {
            out.push(format!(
                "eos.b_high = {} must exceed eos.b_low = {}",
                self.b_high, self.b_low
            ));
        }
        out
    }

    pub fn cone(&self) -> Cone {
        Cone {
            b_low: self.b_low,
            b_high: self.b_high,
        }
    }
}

/// The closed domination cone `b_low R ≤ Z ≤ b_high R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    pub b_low: f64,
    pub b_high: f64,
}

impl Cone {
    pub fn contains(&self, p: StatePoint) -> bool {
        p.r >= 0.0 && p.z >= 0.0 && self.b_low * p.r <= p.z && p.z <= self.b_high * p.r
    }

    /// `(Z − b_low R, b_high R − Z)`; both nonnegative inside the cone.
    pub fn margins(&self, p: StatePoint) -> (f64, f64) {
        (p.z - self.b_low * p.r, self.b_high * p.r - p.z)
    }
}

/// A pair of species densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub r: f64,
    pub z: f64,
}

impl StatePoint {
    pub const fn new(r: f64, z: f64) -> Self {
        StatePoint { r, z }
    }

    pub fn in_cone(&self, e: &EosParams) -> bool {
        e.cone().contains(*self)
    }

    fn check_nonnegative(&self) -> Result<()> {
        if !(self.r >= 0.0 && self.z >= 0.0) {
            return Err(Error::Domain(format!(
                "densities must be nonnegative, got (R, Z) = ({}, {})",
                self.r, self.z
            )));
        }
        Ok(())
    }

    fn check_positive(&self) -> Result<()> {
        if !(self.r > 0.0 && self.z > 0.0) {
            return Err(Error::Domain(format!(
                "densities must be strictly positive, got (R, Z) = ({}, {})",
                self.r, self.z
            )));
        }
        Ok(())
    }
}

/// Anything that can serve as a pressure law `P(R, Z)`.
pub trait PressureLaw: Sync {
    fn pressure_at(&self, r: f64, z: f64) -> f64;
}

impl PressureLaw for EosParams {
    #[inline]
    fn pressure_at(&self, r: f64, z: f64) -> f64 {
        self.a1 * r.powf(self.gamma) + self.a2 * z.powf(self.beta)
    }
}

impl<F> PressureLaw for F
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    fn pressure_at(&self, r: f64, z: f64) -> f64 {
        self(r, z)
    }
}

pub fn pressure(p: StatePoint, e: &EosParams) -> Result<f64> {
    p.check_nonnegative()?;
    Ok(e.pressure_at(p.r, p.z))
}

pub fn pressure_grad(p: StatePoint, e: &EosParams) -> Result<(f64, f64)> {
    p.check_positive()?;
    Ok((
        e.a1 * e.gamma * p.r.powf(e.gamma - 1.0),
        e.a2 * e.beta * p.z.powf(e.beta - 1.0),
    ))
}

/// Hessian of the pressure (diagonal for the power law).
pub fn pressure_hessian(p: StatePoint, e: &EosParams) -> Result<Sym2> {
    p.check_positive()?;
    Ok(Sym2 {
        xx: e.a1 * e.gamma * (e.gamma - 1.0) * p.r.powf(e.gamma - 2.0),
        xy: 0.0,
        yy: e.a2 * e.beta * (e.beta - 1.0) * p.z.powf(e.beta - 2.0),
    })
}

/// Symmetric 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn min_eig(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        mean - half_diff.hypot(self.xy)
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }

    /// `aᵀ M b` for the quadratic form.
    pub fn form(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        self.xx * a.0 * b.0 + self.xy * (a.0 * b.1 + a.1 * b.0) + self.yy * a.1 * b.1
    }

    pub fn scaled_sub(&self, alpha: f64, other: &Sym2) -> Sym2 {
        Sym2 {
            xx: self.xx - alpha * other.xx,
            xy: self.xy - alpha * other.xy,
            yy: self.yy - alpha * other.yy,
        }
    }
}

// Geometric panels for the origin-anchored ray integral: [R q^{j+1}, R q^j].
const ORIGIN_PANEL_RATIO: f64 = 0.25;
const ORIGIN_PANELS: i32 = 40;

fn gauss_rule(points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::Domain(format!("quad_points = {points} must be ≥ 2")));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(points).expect("points ≥ 2"));
    Ok(rule.iter().map(|(x, w)| (*x, *w)).collect())
}

fn panel<F: Fn(f64) -> f64>(rule: &[(f64, f64)], a: f64, b: f64, f: &F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Helmholtz ray integral for an arbitrary pressure law, by composite
/// Gauss–Legendre quadrature with `quad_points` nodes per panel.
///
/// Unit anchor: panels are log-spaced between 1 and R with ratio at most 2,
/// and the integral is oriented (negative for R < 1). Origin anchor: panels
/// are geometrically graded toward s = 0, which resolves the `s^{γ−2}`
/// endpoint behaviour of the integrand.
pub fn helmholtz_quad_with<L: PressureLaw + ?Sized>(
    law: &L,
    anchor: HelmholtzAnchor,
    p: StatePoint,
    quad_points: usize,
) -> Result<f64> {
    p.check_nonnegative()?;
    let rule = gauss_rule(quad_points)?;
    if p.r == 0.0 {
        return Ok(0.0);
    }
    let slope = p.z / p.r;
    let integrand = |s: f64| law.pressure_at(s, s * slope) / (s * s);
    let integral = match anchor {
        HelmholtzAnchor::Unit => {
            let (lo, hi) = if p.r < 1.0 { (p.r, 1.0) } else { (1.0, p.r) };
            if lo == hi {
                return Ok(0.0);
            }
            let panels = ((hi / lo).ln() / std::f64::consts::LN_2).ceil().max(1.0) as i32;
            let ratio = (hi / lo).powf(1.0 / panels as f64);
            let mut sum = 0.0;
            let mut a = lo;
            for j in 1..=panels {
                let b = if j == panels { hi } else { lo * ratio.powi(j) };
                sum += panel(&rule, a, b, &integrand);
                a = b;
            }
            if p.r < 1.0 {
                -sum
            } else {
                sum
            }
        }
        HelmholtzAnchor::Origin => {
            let mut sum = 0.0;
            let mut b = p.r;
            for _ in 0..ORIGIN_PANELS {
                let a = b * ORIGIN_PANEL_RATIO;
                sum += panel(&rule, a, b, &integrand);
                b = a;
            }
            sum + panel(&rule, 0.0, b, &integrand)
        }
    };
    Ok(p.r * integral)
}

pub fn helmholtz_quad(p: StatePoint, e: &EosParams, quad_points: usize) -> Result<f64> {
    helmholtz_quad_with(e, e.anchor, p, quad_points)
}

/// Closed-form Helmholtz potential of the power law.
pub fn helmholtz_closed(p: StatePoint, e: &EosParams) -> Result<f64> {
    p.check_nonnegative()?;
    if p.r == 0.0 {
        return Ok(0.0);
    }
    let g1 = e.gamma - 1.0;
    let b1 = e.beta - 1.0;
    let zb = p.z.powf(e.beta);
    Ok(match e.anchor {
        HelmholtzAnchor::Origin => e.a1 * p.r.powf(e.gamma) / g1 + e.a2 * zb / b1,
        HelmholtzAnchor::Unit => {
            e.a1 * (p.r.powf(e.gamma) - p.r) / g1 + e.a2 * (zb - zb * p.r.powf(-b1)) / b1
        }
    })
}

pub fn helmholtz_grad(p: StatePoint, e: &EosParams) -> Result<(f64, f64)> {
    if !(p.r > 0.0 && p.z >= 0.0) {
        return Err(Error::Domain(format!(
            "Helmholtz gradient needs R > 0, Z ≥ 0, got ({}, {})",
            p.r, p.z
        )));
    }
    let g1 = e.gamma - 1.0;
    let b1 = e.beta - 1.0;
    let d_r = e.a1 * e.gamma * p.r.powf(g1) / g1;
    let d_z = e.a2 * e.beta * p.z.powf(b1) / b1;
    Ok(match e.anchor {
        HelmholtzAnchor::Origin => (d_r, d_z),
        HelmholtzAnchor::Unit => {
            let ratio_b = (p.z / p.r).powf(e.beta);
            (
                d_r - e.a1 / g1 + e.a2 * ratio_b,
                d_z * (1.0 - p.r.powf(-b1)),
            )
        }
    })
}

pub fn helmholtz_hessian(p: StatePoint, e: &EosParams) -> Result<Sym2> {
    p.check_positive()?;
    let h_rr = e.a1 * e.gamma * p.r.powf(e.gamma - 2.0);
    let h_zz = e.a2 * e.beta * p.z.powf(e.beta - 2.0);
    Ok(match e.anchor {
        HelmholtzAnchor::Origin => Sym2 {
            xx: h_rr,
            xy: 0.0,
            yy: h_zz,
        },
        HelmholtzAnchor::Unit => {
            // Subtracted 1-homogeneous part a2 R (Z/R)^β/(β−1).
            let s = p.z / p.r;
            let c = e.a2 * e.beta * s.powf(e.beta - 2.0) / p.r;
            Sym2 {
                xx: h_rr - c * s * s,
                xy: c * s,
                yy: h_zz - c,
            }
        }
    })
}

fn fd_step(x: f64) -> f64 {
    (1e-5 * x.max(1.0)).min(0.5 * x)
}

/// `|R ∂_R H + Z ∂_Z H − H − P|` along the fully numerical path: quadrature
/// values of H with central-difference gradients.
pub fn euler_identity_residual(p: StatePoint, e: &EosParams) -> Result<f64> {
    euler_identity_residual_with(e, e.anchor, p, 64)
}

pub fn euler_identity_residual_with<L: PressureLaw + ?Sized>(
    law: &L,
    anchor: HelmholtzAnchor,
    p: StatePoint,
    quad_points: usize,
) -> Result<f64> {
    p.check_positive()?;
    let h = |r: f64, z: f64| helmholtz_quad_with(law, anchor, StatePoint::new(r, z), quad_points);
    let dr = fd_step(p.r);
    let dz = fd_step(p.z);
    let h_r = (h(p.r + dr, p.z)? - h(p.r - dr, p.z)?) / (2.0 * dr);
    let h_z = (h(p.r, p.z + dz)? - h(p.r, p.z - dz)?) / (2.0 * dz);
    let value = h(p.r, p.z)?;
    Ok((p.r * h_r + p.z * h_z - value - law.pressure_at(p.r, p.z)).abs())
}

/// Outcome of the convexity certification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub a_low: f64,
    pub a_high: f64,
    pub gamma_coercive: f64,
    pub hessian_min_eig: f64,
    pub samples: usize,
    pub pass: bool,
    /// Minimum sampled eigenvalue of the Hessian of `H − a_low P`.
    #[serde(skip)]
    pub lower_sandwich_min_eig: f64,
    /// Minimum sampled eigenvalue of the Hessian of `a_high P − H`.
    #[serde(skip)]
    pub upper_sandwich_min_eig: f64,
}

/// Eigenvalue tolerance for the sandwich convexity checks.
pub const SANDWICH_EIG_TOL: f64 = 1e-10;

const CONE_SAMPLE_SEED: u64 = 0x5eed_c0de;

/// Points sampled uniformly in `log R ∈ [−2, 2]`, `Z/R ∈ [b_low, b_high]`.
pub fn cone_samples(cone: Cone, n: usize, seed: u64) -> Vec<StatePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = rng.gen_range(-2.0..=2.0f64).exp();
            let s = rng.gen_range(cone.b_low..=cone.b_high);
            StatePoint::new(r, s * r)
        })
        .collect()
}

fn finish_report(
    mut report: ConvexityReport,
    strict_tol: f64,
    sandwich_tol: impl Fn(f64) -> f64,
    worst_scale: f64,
) -> Result<ConvexityReport> {
    let mut reasons = Vec::new();
    if report.hessian_min_eig <= strict_tol {
        reasons.push(format!(
            "H is not strictly convex on the sampled cone (min eigenvalue {:e})",
            report.hessian_min_eig
        ));
    }
    let tol = sandwich_tol(worst_scale);
    if report.lower_sandwich_min_eig < -tol {
        reasons.push(format!(
            "H − a_low·P is not convex (min eigenvalue {:e})",
            report.lower_sandwich_min_eig
        ));
    }
    if report.upper_sandwich_min_eig < -tol {
        reasons.push(format!(
            "a_high·P − H is not convex (min eigenvalue {:e})",
            report.upper_sandwich_min_eig
        ));
    }
    report.pass = reasons.is_empty();
    if report.pass {
        Ok(report)
    } else {
        Err(Error::Certification {
            reason: reasons.join("; "),
            report: Box::new(report),
        })
    }
}

/// Certifies strict convexity of H and convexity of `H − a_low P`,
/// `a_high P − H` on the cone, with the constants known in closed form for
/// the power law.
pub fn convexity_constants(e: &EosParams, sample_n: usize) -> Result<ConvexityReport> {
    if sample_n < 100 {
        return Err(Error::Domain(format!("sample_n = {sample_n} must be ≥ 100")));
    }
    let a_low = 1.0 / (e.gamma.max(e.beta) - 1.0);
    let a_high = 1.0 / (e.gamma.min(e.beta) - 1.0);
    let mut report = ConvexityReport {
        a_low,
        a_high,
        gamma_coercive: 1.0 + 1.0 / a_high,
        hessian_min_eig: f64::INFINITY,
        samples: sample_n,
        pass: false,
        lower_sandwich_min_eig: f64::INFINITY,
        upper_sandwich_min_eig: f64::INFINITY,
    };
    for p in cone_samples(e.cone(), sample_n, CONE_SAMPLE_SEED) {
        let hh = helmholtz_hessian(p, e)?;
        let hp = pressure_hessian(p, e)?;
        report.hessian_min_eig = report.hessian_min_eig.min(hh.min_eig());
        report.lower_sandwich_min_eig = report
            .lower_sandwich_min_eig
            .min(hh.scaled_sub(a_low, &hp).min_eig());
        let upper = Sym2 {
            xx: a_high * hp.xx - hh.xx,
            xy: a_high * hp.xy - hh.xy,
            yy: a_high * hp.yy - hh.yy,
        };
        report.upper_sandwich_min_eig = report.upper_sandwich_min_eig.min(upper.min_eig());
    }
    finish_report(report, 0.0, |_| SANDWICH_EIG_TOL, 1.0)
}

fn fd_hessian(f: impl Fn(f64, f64) -> Result<f64>, p: StatePoint) -> Result<Sym2> {
    let dr = 1e-3 * p.r;
    let dz = 1e-3 * p.z;
    let f0 = f(p.r, p.z)?;
    let xx = (f(p.r + dr, p.z)? - 2.0 * f0 + f(p.r - dr, p.z)?) / (dr * dr);
    let yy = (f(p.r, p.z + dz)? - 2.0 * f0 + f(p.r, p.z - dz)?) / (dz * dz);
    let xy = (f(p.r + dr, p.z + dz)? - f(p.r + dr, p.z - dz)? - f(p.r - dr, p.z + dz)?
        + f(p.r - dr, p.z - dz)?)
        / (4.0 * dr * dz);
    Ok(Sym2 { xx, xy, yy })
}

/// Relative tolerance of the finite-difference Hessians used for callable
/// pressure laws.
pub const CALLABLE_EIG_RTOL: f64 = 1e-6;

/// Certification for a user-supplied pressure law. Hessians of P and of the
/// quadrature potential are taken by finite differences, so the sandwich
/// eigenvalue tolerance is relative ([`CALLABLE_EIG_RTOL`] times the largest
/// Hessian entry seen).
pub fn certify_callable<L: PressureLaw + ?Sized>(
    law: &L,
    cone: Cone,
    anchor: HelmholtzAnchor,
    a_low: f64,
    a_high: f64,
    sample_n: usize,
) -> Result<ConvexityReport> {
    if sample_n < 100 {
        return Err(Error::Domain(format!("sample_n = {sample_n} must be ≥ 100")));
    }
    if !(a_low > 0.0 && a_low <= a_high) {
        return Err(Error::Domain(format!(
            "need 0 < a_low ≤ a_high, got a_low = {a_low}, a_high = {a_high}"
        )));
    }
    let mut report = ConvexityReport {
        a_low,
        a_high,
        gamma_coercive: 1.0 + 1.0 / a_high,
        hessian_min_eig: f64::INFINITY,
        samples: sample_n,
        pass: false,
        lower_sandwich_min_eig: f64::INFINITY,
        upper_sandwich_min_eig: f64::INFINITY,
    };
    let mut scale: f64 = 0.0;
    let mut strict_scale: f64 = 0.0;
    for p in cone_samples(cone, sample_n, CONE_SAMPLE_SEED) {
        let hh = fd_hessian(
            |r, z| helmholtz_quad_with(law, anchor, StatePoint::new(r, z), 32),
            p,
        )?;
        let hp = fd_hessian(|r, z| Ok(law.pressure_at(r, z)), p)?;
        scale = scale.max(hh.max_abs()).max(hp.max_abs() * a_high);
        strict_scale = strict_scale.max(hh.max_abs());
        report.hessian_min_eig = report.hessian_min_eig.min(hh.min_eig());
        report.lower_sandwich_min_eig = report
            .lower_sandwich_min_eig
            .min(hh.scaled_sub(a_low, &hp).min_eig());
        let upper = Sym2 {
            xx: a_high * hp.xx - hh.xx,
            xy: a_high * hp.xy - hh.xy,
            yy: a_high * hp.yy - hh.yy,
        };
        report.upper_sandwich_min_eig = report.upper_sandwich_min_eig.min(upper.min_eig());
    }
    finish_report(
        report,
        CALLABLE_EIG_RTOL * strict_scale,
        |s| CALLABLE_EIG_RTOL * s,
        scale,
    )
}

/// Bregman divergence of H between `p` and the reference point.
pub fn bregman_h(p: StatePoint, reference: StatePoint, e: &EosParams) -> Result<f64> {
    p.check_nonnegative()?;
    if !(reference.r > 0.0 && reference.z > 0.0) {
        return Err(Error::Domain(format!(
            "Bregman reference must be strictly positive, got ({}, {})",
            reference.r, reference.z
        )));
    }
    let (g_r, g_z) = helmholtz_grad(reference, e)?;
    Ok(helmholtz_closed(p, e)?
        - g_r * (p.r - reference.r)
        - g_z * (p.z - reference.z)
        - helmholtz_closed(reference, e)?)
}

/// Fitted coercivity constants `(a_P, a_H)`: the largest `a` with
/// `P ≥ a R^{γc}` (resp. `H ≥ a R^{γc}`) over sampled cone points with
/// `1 ≤ R ≤ e²`.
pub fn coercivity_constants(e: &EosParams, gamma_coercive: f64, sample_n: usize) -> Result<(f64, f64)> {
    let mut a_p = f64::INFINITY;
    let mut a_h = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(CONE_SAMPLE_SEED ^ 1);
    for _ in 0..sample_n {
        let r = rng.gen_range(0.0..=2.0f64).exp();
        let s = rng.gen_range(e.b_low..=e.b_high);
        let p = StatePoint::new(r, s * r);
        let scale = r.powf(gamma_coercive);
        a_p = a_p.min(pressure(p, e)? / scale);
        a_h = a_h.min(helmholtz_closed(p, e)? / scale);
    }
    Ok((a_p, a_h))
}
