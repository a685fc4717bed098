//! Implicit finite-volume solver for the regularized continuity equation
//!
//! ```text
//! ∂_t r + ∂_x(r u) = ε ∂_xx r,      ε ∂_x r · n + (r_B − r)[u_B · n]^− = 0,
//! ```
//!
//! with mass-budget and extremum-principle monitors.
//!
//! Face fluxes are `F = ū r̄ − ε Δr / h` (central advection). At an inflow
//! endpoint the Robin condition turns the total outward flux into
//! `r_B u_B·n`; at an outflow endpoint the diffusive flux vanishes and the
//! outward flux is `r u_B·n` with the trace taken from the adjacent cell.
//! Interior fluxes telescope, so the discrete mass balance is exact.

use crate::discretization::Grid1D;
use crate::eos::Cone;
use crate::error::{Error, Result};
use crate::profile::Profile;

/// `[a]^− = min(a, 0)`.
#[inline]
pub fn neg_part(a: f64) -> f64 {
    a.min(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    R,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
}

impl Endpoint {
    pub const BOTH: [Endpoint; 2] = [Endpoint::Left, Endpoint::Right];

    pub fn x(self) -> f64 {
        match self {
            Endpoint::Left => 0.0,
            Endpoint::Right => 1.0,
        }
    }

    /// Outer normal.
    pub fn normal(self) -> f64 {
        match self {
            Endpoint::Left => -1.0,
            Endpoint::Right => 1.0,
        }
    }
}

/// Boundary velocity extension `u_B` and inflow densities `R_B`, `Z_B`.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub u_b: Profile,
    pub r_b: Profile,
    pub z_b: Profile,
}

impl BoundaryData {
    pub fn new(u_b: Profile, r_b: Profile, z_b: Profile) -> Self {
        BoundaryData { u_b, r_b, z_b }
    }

    pub fn constant(u: f64, r: f64, z: f64) -> Self {
        BoundaryData::new(Profile::constant(u), Profile::constant(r), Profile::constant(z))
    }

    /// `u_B · n` at an endpoint.
    pub fn normal_velocity(&self, end: Endpoint) -> f64 {
        self.u_b.eval(end.x()) * end.normal()
    }

    /// Γ^in membership: `u_B · n < 0`.
    pub fn is_inflow(&self, end: Endpoint) -> bool {
        self.normal_velocity(end) < 0.0
    }

    pub fn density(&self, which: Species, end: Endpoint) -> f64 {
        match which {
            Species::R => self.r_b.eval(end.x()),
            Species::Z => self.z_b.eval(end.x()),
        }
    }

    /// Every violated boundary-data invariant (nonnegativity, cone membership
    /// of `(R_B, Z_B)` at both endpoints, finiteness of `u_B`).
    pub fn violations(&self, cone: Cone) -> Vec<String> {
        let mut out = Vec::new();
        for end in Endpoint::BOTH {
            let x = end.x();
            let (r, z, u) = (self.r_b.eval(x), self.z_b.eval(x), self.u_b.eval(x));
            if !(u.is_finite() && r.is_finite() && z.is_finite()) {
                out.push(format!("boundary data not finite at x = {x}"));
                continue;
            }
            if r < 0.0 || z < 0.0 {
                out.push(format!("boundary densities must be ≥ 0 at x = {x}: ({r}, {z})"));
            }
            if !(cone.b_low * r <= z && z <= cone.b_high * r) {
                out.push(format!(
                    "boundary data (R_B, Z_B) = ({r}, {z}) at x = {x} violates b_low·R_B ≤ Z_B ≤ b_high·R_B"
                ));
            }
        }
        out
    }

    /// `u_B` at faces.
    pub fn velocity_at_faces(&self, grid: &Grid1D) -> Vec<f64> {
        grid.faces().iter().map(|&x| self.u_b.eval(x)).collect()
    }

    /// `u_B` at cell centres.
    pub fn velocity_at_nodes(&self, grid: &Grid1D) -> Vec<f64> {
        grid.tabulate(|x| self.u_b.eval(x))
    }

    /// `∂_x u_B` at cell centres.
    pub fn velocity_gradient_at_nodes(&self, grid: &Grid1D) -> Vec<f64> {
        grid.tabulate(|x| self.u_b.derivative(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub theta: f64,
}

impl TransportConfig {
    pub fn new(epsilon: f64, dt: f64, theta: f64) -> Result<Self> {
        let cfg = TransportConfig { epsilon, dt, theta };
        let v = cfg.violations();
        if v.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            out.push(format!("transport.epsilon = {} must be > 0", self.epsilon));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            out.push(format!("time.dt = {} must be > 0", self.dt));
        }
        if !(0.5..=1.0).contains(&self.theta) {
            out.push(format!("transport.theta = {} must lie in [1/2, 1]", self.theta));
        }
        out
    }
}

/// Tridiagonal matrix in band storage; `lower[0]` and `upper[n−1]` unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Z-matrix with positive diagonal that is strictly diagonally dominant
    /// by columns; sufficient for a nonnegative inverse.
    pub fn is_m_matrix(&self) -> bool {
        let n = self.len();
        (0..n).all(|j| {
            let off_ok = (j == 0 || self.lower[j] <= 0.0) && (j + 1 == n || self.upper[j] <= 0.0);
            let mut col_off = 0.0;
            if j > 0 {
                col_off += self.upper[j - 1].abs();
            }
            if j + 1 < n {
                col_off += self.lower[j + 1].abs();
            }
            off_ok && self.diag[j] > col_off
        })
    }

    /// Thomas algorithm.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rhs.len(),
            });
        }
        let scale = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut min_pivot = f64::INFINITY;
        let mut pivot = self.diag[0];
        for i in 0..n {
            if i > 0 {
                pivot = self.diag[i] - self.lower[i] * c[i - 1];
            }
            min_pivot = min_pivot.min(pivot.abs());
            if !(pivot.abs() > 1e-14 * scale) {
                return Err(Error::Solver(format!(
                    "singular tridiagonal system: pivot {pivot:e} at row {i}, max |diag| {scale:e}, min |pivot|/max |diag| = {:e}",
                    min_pivot / scale
                )));
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            let prev = if i > 0 { self.lower[i] * d[i - 1] } else { 0.0 };
            d[i] = (rhs[i] - prev) / pivot;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Flux-divergence operator `A(u) r + c` such that `h dr/dt = −(A r + c)`.
/// `c` carries the inflow fluxes `r_B u_B·n`.
pub fn flux_operator(
    u_faces: &[f64],
    grid: &Grid1D,
    epsilon: f64,
    bc: &BoundaryData,
    which: Species,
) -> Result<(Tridiagonal, Vec<f64>)> {
    let n = grid.n_cells();
    if u_faces.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: u_faces.len(),
        });
    }
    let h = grid.h();
    let diff = epsilon / h;
    let mut a = Tridiagonal::zeros(n);
    for f in 1..n {
        let half_u = 0.5 * u_faces[f];
        a.diag[f - 1] += half_u + diff;
        a.upper[f - 1] += half_u - diff;
        a.lower[f] += -half_u - diff;
        a.diag[f] += -half_u + diff;
    }
    let mut c = vec![0.0; n];
    for end in Endpoint::BOTH {
        let cell = match end {
            Endpoint::Left => 0,
            Endpoint::Right => n - 1,
        };
        let un = bc.normal_velocity(end);
        if un < 0.0 {
            c[cell] += bc.density(which, end) * un;
        } else {
            a.diag[cell] += un;
        }
    }
    Ok((a, c))
}

/// Total outward boundary flux in the weak form with test function 1:
/// `Σ_ends [ r u_B·n − (r − r_B)[u_B·n]^− ]`, trace from the adjacent cell.
pub fn boundary_outflux(r: &[f64], bc: &BoundaryData, which: Species) -> f64 {
    Endpoint::BOTH
        .iter()
        .map(|&end| {
            let trace = match end {
                Endpoint::Left => r[0],
                Endpoint::Right => r[r.len() - 1],
            };
            let un = bc.normal_velocity(end);
            trace * un - (trace - bc.density(which, end)) * neg_part(un)
        })
        .sum()
}

/// Assembled θ-scheme system `(h/dt + θ A_new) r_new = rhs`.
pub fn transport_system(
    r_old: &[f64],
    u_old_faces: &[f64],
    u_new_faces: &[f64],
    grid: &Grid1D,
    cfg: &TransportConfig,
    bc: &BoundaryData,
    which: Species,
) -> Result<(Tridiagonal, Vec<f64>)> {
    let n = grid.n_cells();
    if r_old.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: r_old.len(),
        });
    }
    let mass = grid.h() / cfg.dt;
    let (mut a_new, c_new) = flux_operator(u_new_faces, grid, cfg.epsilon, bc, which)?;
    let mut rhs: Vec<f64> = r_old.iter().map(|r| mass * r).collect();
    for (v, c) in rhs.iter_mut().zip(&c_new) {
        *v -= cfg.theta * c;
    }
    if cfg.theta < 1.0 {
        let (a_old, c_old) = flux_operator(u_old_faces, grid, cfg.epsilon, bc, which)?;
        let ar = a_old.apply(r_old);
        for ((v, a), c) in rhs.iter_mut().zip(ar).zip(c_old) {
            *v -= (1.0 - cfg.theta) * (a + c);
        }
    }
    for i in 0..n {
        a_new.lower[i] *= cfg.theta;
        a_new.upper[i] *= cfg.theta;
        a_new.diag[i] = mass + cfg.theta * a_new.diag[i];
    }
    Ok((a_new, rhs))
}

/// One θ-step of the regularized continuity equation for one species.
///
/// `u_old_faces` / `u_new_faces` are the full velocities `reconstruct(v) +
/// u_B` at faces at the two time levels; the old one only enters for θ < 1.
pub fn step_transport(
    r_old: &[f64],
    u_old_faces: &[f64],
    u_new_faces: &[f64],
    grid: &Grid1D,
    cfg: &TransportConfig,
    bc: &BoundaryData,
    which: Species,
) -> Result<Vec<f64>> {
    if cfg.theta < 1.0 {
        let umax = u_new_faces.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let courant = cfg.dt * umax / grid.h();
        if courant > 1.0 {
            log::warn!("transport: θ = {} with Courant number {courant:.3} > 1", cfg.theta);
        }
    }
    let (matrix, rhs) = transport_system(r_old, u_old_faces, u_new_faces, grid, cfg, bc, which)?;
    if !matrix.is_m_matrix() {
        log::warn!(
            "transport: assembled {which:?} matrix is not an M-matrix (cell Péclet number too large?)"
        );
    }
    matrix.solve(&rhs)
}

/// Residual of the discrete mass identity (weak form with test function 1)
/// over one step:
/// `|∫(r_new − r_old) + dt (θ B(r_new) + (1−θ) B(r_old))|`.
pub fn mass_budget(
    r_old: &[f64],
    r_new: &[f64],
    grid: &Grid1D,
    cfg: &TransportConfig,
    bc: &BoundaryData,
    which: Species,
) -> f64 {
    let change = grid.integrate(r_new) - grid.integrate(r_old);
    let flux = cfg.theta * boundary_outflux(r_new, bc, which)
        + (1.0 - cfg.theta) * boundary_outflux(r_old, bc, which);
    (change + cfg.dt * flux).abs()
}

/// Outcome of the extremum-principle monitor for one species.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremumReport {
    pub lower: f64,
    pub upper: f64,
    /// Upper bound with `M` built from initial and inflow data only.
    pub upper_without_ub: f64,
    pub tol: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// True when the upper bound only holds thanks to the `sup|u_B|` term.
    pub needs_ub_term: bool,
    /// First offending sample `(t, x, value)`.
    pub first_violation: Option<(f64, f64, f64)>,
    pub observed_min: f64,
    pub observed_max: f64,
}

impl ExtremumReport {
    pub fn ok(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Checks sampled densities against
/// `m exp(−T sup|∂_x u|) ≤ r ≤ M exp(T sup|∂_x u|)` with
/// `M = max{max r0, max_{Γin} r_B, sup|u_B|}`, `m = min{min r0, min_{Γin} r_B}`
/// and relative tolerance `1e−6 + 10 h²`; `div_sup` is `sup|∂_x u|` over the
/// whole run.
#[allow(clippy::too_many_arguments)]
pub fn extremum_bounds(
    times: &[f64],
    r_trajectory: &[Vec<f64>],
    div_sup: f64,
    bc: &BoundaryData,
    r0: &[f64],
    horizon: f64,
    grid: &Grid1D,
    which: Species,
) -> ExtremumReport {
    let fold_max = |v: &[f64]| v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));
    let fold_min = |v: &[f64]| v.iter().fold(f64::INFINITY, |m, x| m.min(*x));

    let mut m_hi = fold_max(r0);
    let mut m_lo = fold_min(r0);
    for end in Endpoint::BOTH {
        if bc.is_inflow(end) {
            m_hi = m_hi.max(bc.density(which, end));
            m_lo = m_lo.min(bc.density(which, end));
        }
    }
    let ub_sup = bc
        .velocity_at_faces(grid)
        .iter()
        .fold(0.0f64, |m, u| m.max(u.abs()));
    let growth = (horizon * div_sup).exp();
    let upper = m_hi.max(ub_sup) * growth;
    let upper_without_ub = m_hi * growth;
    let lower = m_lo / growth;
    let tol = 1e-6 + 10.0 * grid.h() * grid.h();

    let mut report = ExtremumReport {
        lower,
        upper,
        upper_without_ub,
        tol,
        lower_ok: true,
        upper_ok: true,
        needs_ub_term: false,
        first_violation: None,
        observed_min: f64::INFINITY,
        observed_max: f64::NEG_INFINITY,
    };
    for (t, r) in times.iter().zip(r_trajectory) {
        for (x, &v) in grid.nodes().iter().zip(r) {
            report.observed_min = report.observed_min.min(v);
            report.observed_max = report.observed_max.max(v);
            let lo_bad = v < lower * (1.0 - tol);
            let hi_bad = v > upper * (1.0 + tol);
            if v > upper_without_ub * (1.0 + tol) && !hi_bad {
                report.needs_ub_term = true;
            }
            if lo_bad || hi_bad {
                report.lower_ok &= !lo_bad;
                report.upper_ok &= !hi_bad;
                report.first_violation.get_or_insert((*t, *x, v));
            }
        }
    }
    if report.needs_ub_term {
        log::info!("{which:?}: maximum bound holds only with the sup|u_B| term in M");
    }
    report
}
