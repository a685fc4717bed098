//! Energy budget, relative energy, Gronwall fit, kinetic envelope and
//! coarse-graining defect proxies.

use serde::Serialize;

use crate::coupler::{SimState, Solver, Trajectory};
use crate::discretization::Grid1D;
use crate::eos::{
    bregman_h, convexity_constants, helmholtz_closed, helmholtz_hessian, EosParams, PressureLaw, StatePoint,
};
use crate::error::{Error, Result};
use crate::reference::restrict;
use crate::transport::Endpoint;

/// Absolute floor of the Gronwall fit.
pub const GRONWALL_ATOL: f64 = 1e-12;
/// Tolerance of the Jensen-gap sign checks.
pub const JENSEN_TOL: f64 = 1e-12;
/// Tolerance of the blockwise sandwich checks.
pub const SANDWICH_TOL: f64 = 1e-8;

/// Every term of the energy inequality over one step, time-integrated with
/// the trapezoidal rule. `kinetic` and `helmholtz` are the end-of-step
/// values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBudget {
    pub kinetic: f64,
    pub helmholtz: f64,
    pub dissipation: f64,
    pub outflow_flux: f64,
    pub inflow_flux: f64,
    pub eps_dissipation: f64,
    /// `−∫Γin E_H(R_B, Z_B | R, Z) u_B·n`, the extra (nonnegative) inflow
    /// term of the relative-entropy grouping.
    pub inflow_bregman: f64,
    /// Convection/pressure work on `u_B'`, lift transport, viscous work on
    /// `u_B'`, and `−∫Γin H(R_B, Z_B) u_B·n`.
    pub rhs_terms: [f64; 4],
    /// LHS − RHS with plain `H(R_B, Z_B)` on the inflow boundary.
    pub residual: f64,
    /// Same with the `E_H` inflow term added to the left-hand side.
    pub residual_aux: f64,
}

/// `(½∫(R+Z)|u − u_B|², ∫H(R, Z))` by midpoint quadrature.
pub fn total_energy(state: &SimState, solver: &Solver, eos: &EosParams) -> Result<(f64, f64)> {
    let grid = &solver.grid;
    let fluct = solver.basis.reconstruct(&state.v)?;
    let mut kin = 0.0;
    let mut helm = 0.0;
    for k in 0..grid.n_cells() {
        kin += 0.5 * (state.r[k] + state.z[k]) * fluct[k] * fluct[k];
        helm += helmholtz_closed(StatePoint::new(state.r[k], state.z[k]), eos)?;
    }
    Ok((kin * grid.h(), helm * grid.h()))
}

struct Rates {
    dissipation: f64,
    outflow: f64,
    inflow: f64,
    inflow_bregman: f64,
    eps: f64,
    rhs: [f64; 3],
}

fn rates(state: &SimState, solver: &Solver) -> Result<Rates> {
    let cfg = &solver.cfg;
    let eos = &cfg.eos;
    let grid = &solver.grid;
    let h = grid.h();
    let n = grid.n_cells();
    let visc = cfg.stress().coefficient();
    let du = solver.velocity_gradient(state)?;
    let lift = &solver.lift;

    let mut dissipation = 0.0;
    let mut rhs = [0.0; 3];
    for k in 0..n {
        let rho = state.r[k] + state.z[k];
        let u = state.u[k];
        let p = eos.pressure_at(state.r[k], state.z[k]);
        dissipation += visc * du[k] * du[k];
        rhs[0] -= (rho * u * u + p) * lift.derivs[k];
        rhs[1] += rho * u * lift.derivs[k] * lift.nodes[k];
        rhs[2] += visc * du[k] * lift.derivs[k];
    }
    dissipation *= h;
    for v in rhs.iter_mut() {
        *v *= h;
    }

    let mut outflow = 0.0;
    let mut inflow = 0.0;
    let mut inflow_bregman = 0.0;
    for end in Endpoint::BOTH {
        let cell = match end {
            Endpoint::Left => 0,
            Endpoint::Right => n - 1,
        };
        let un = cfg.bc.normal_velocity(end);
        let trace = StatePoint::new(state.r[cell], state.z[cell]);
        if un < 0.0 {
            let b = StatePoint::new(
                cfg.bc.density(crate::transport::Species::R, end),
                cfg.bc.density(crate::transport::Species::Z, end),
            );
            inflow += helmholtz_closed(b, eos)? * un;
            inflow_bregman -= bregman_h(b, trace, eos)? * un;
        } else {
            outflow += helmholtz_closed(trace, eos)? * un;
        }
    }

    let mut eps = 0.0;
    for f in 1..n {
        let mid = StatePoint::new(
            0.5 * (state.r[f - 1] + state.r[f]),
            0.5 * (state.z[f - 1] + state.z[f]),
        );
        let g = ((state.r[f] - state.r[f - 1]) / h, (state.z[f] - state.z[f - 1]) / h);
        eps += helmholtz_hessian(mid, eos)?.form(g, g);
    }
    eps *= cfg.epsilon * h;

    Ok(Rates {
        dissipation,
        outflow,
        inflow,
        inflow_bregman,
        eps,
        rhs,
    })
}

/// Energy inequality over the step `old → new`:
///
/// ```text
/// Δ∫[½ρ|u−u_B|² + H] + ∫∫(2μ+λ)|u'|² + ∫∫Γout H u_B·n + ∫∫Γin H(R_B,Z_B) u_B·n
///     + ε∫∫∇²H[∇R, ∇Z]
///   ≤ −∫∫(ρu² + P)u_B' + ∫∫ρ u u_B' u_B + ∫∫(2μ+λ) u' u_B'
/// ```
pub fn energy_inequality_residual(old: &SimState, new: &SimState, solver: &Solver) -> Result<EnergyBudget> {
    let eos = &solver.cfg.eos;
    let dt = new.t - old.t;
    let (k0, h0) = total_energy(old, solver, eos)?;
    let (k1, h1) = total_energy(new, solver, eos)?;
    let a = rates(old, solver)?;
    let b = rates(new, solver)?;
    let trap = |x: f64, y: f64| 0.5 * dt * (x + y);

    let dissipation = trap(a.dissipation, b.dissipation);
    let outflow_flux = trap(a.outflow, b.outflow);
    let inflow_flux = trap(a.inflow, b.inflow);
    let eps_dissipation = trap(a.eps, b.eps);
    let inflow_bregman = trap(a.inflow_bregman, b.inflow_bregman);
    let rhs_terms = [
        trap(a.rhs[0], b.rhs[0]),
        trap(a.rhs[1], b.rhs[1]),
        trap(a.rhs[2], b.rhs[2]),
        -inflow_flux,
    ];
    let lhs = (k1 - k0) + (h1 - h0) + dissipation + outflow_flux + eps_dissipation;
    let residual = lhs - rhs_terms.iter().sum::<f64>();
    Ok(EnergyBudget {
        kinetic: k1,
        helmholtz: h1,
        dissipation,
        outflow_flux,
        inflow_flux,
        eps_dissipation,
        inflow_bregman,
        rhs_terms,
        residual,
        residual_aux: residual + inflow_bregman,
    })
}

/// Reference triple `(𝔯, 𝔷, 𝔲)` on the cell centres of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceState {
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
}

/// `∫[½(R+Z)|u − 𝔲|² + E_H(R, Z | 𝔯, 𝔷)]`.
pub fn relative_energy(
    r: &[f64],
    z: &[f64],
    u: &[f64],
    reference: &ReferenceState,
    grid: &Grid1D,
    eos: &EosParams,
) -> Result<f64> {
    let n = grid.n_cells();
    for len in [r.len(), z.len(), u.len(), reference.r.len(), reference.z.len(), reference.u.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    let cone = eos.cone();
    let mut total = 0.0;
    for k in 0..n {
        let rp = StatePoint::new(reference.r[k], reference.z[k]);
        let (lo, hi) = cone.margins(rp);
        if !(rp.r > 0.0 && rp.z > 0.0) || lo < -crate::coupler::CONE_TOL || hi < -crate::coupler::CONE_TOL {
            return Err(Error::Domain(format!(
                "degenerate reference ({}, {}) at cell {k}",
                rp.r, rp.z
            )));
        }
        let du = u[k] - reference.u[k];
        total += 0.5 * (r[k] + z[k]) * du * du + bregman_h(StatePoint::new(r[k], z[k]), rp, eos)?;
    }
    Ok(total * grid.h())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelEnergyRecord {
    pub t: f64,
    pub value: f64,
    pub gronwall_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallFit {
    pub c_fit: f64,
    pub c_max: f64,
    pub value0: f64,
    pub max_value: f64,
    pub pass: bool,
}

/// Smallest `C ≥ 0` with `value(t) ≤ (value(0) + atol) e^{Ct}`; fills in
/// `gronwall_bound`. When `value(0) ≤ atol` the series must also stay below
/// `100·atol`.
pub fn gronwall_check(series: &mut [RelEnergyRecord], c_max: f64) -> GronwallFit {
    let Some(first) = series.first().copied() else {
        return GronwallFit {
            c_fit: 0.0,
            c_max,
            value0: 0.0,
            max_value: 0.0,
            pass: true,
        };
    };
    let base = first.value + GRONWALL_ATOL;
    let mut c_fit: f64 = 0.0;
    let mut max_value = first.value;
    for rec in series.iter() {
        max_value = max_value.max(rec.value);
        let dt = rec.t - first.t;
        if dt > 0.0 {
            c_fit = c_fit.max(((rec.value + GRONWALL_ATOL) / base).ln() / dt);
        }
    }
    for rec in series.iter_mut() {
        rec.gronwall_bound = base * (c_fit * (rec.t - first.t)).exp();
    }
    let uniqueness_ok = first.value > GRONWALL_ATOL || max_value <= 100.0 * GRONWALL_ATOL;
    GronwallFit {
        c_fit,
        c_max,
        value0: first.value,
        max_value,
        pass: c_fit <= c_max && uniqueness_ok,
    }
}

/// Convex lower-semicontinuous envelope of `m²/r`.
pub fn kinetic_envelope(r: f64, m: f64) -> f64 {
    if r > 0.0 {
        m * m / r
    } else if m == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Jensen gaps on one coarse block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockDefect {
    pub delta_p: f64,
    pub delta_h: f64,
    pub delta_kinetic: f64,
}

impl BlockDefect {
    /// `𝔈 = δh + ½δk`.
    pub fn energy_defect(&self) -> f64 {
        self.delta_h + 0.5 * self.delta_kinetic
    }

    /// `Tr ℜ = δp + δk`.
    pub fn trace_defect(&self) -> f64 {
        self.delta_p + self.delta_kinetic
    }
}

/// Defect proxies of one snapshot at one coarsening factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectProxy {
    pub t: f64,
    pub k: usize,
    /// Domain integrals of the blockwise gaps.
    pub delta_p: f64,
    pub delta_h: f64,
    pub delta_kinetic: f64,
    /// Extremes of `Tr ℜ / 𝔈` over blocks with `𝔈 > 1e−12`.
    pub trace_ratio_low: f64,
    pub trace_ratio_high: f64,
    /// Smallest gap over all blocks and all three proxies.
    pub min_gap: f64,
    /// Largest excess in `a_low δp ≤ δh ≤ a_high δp` over blocks with
    /// `δp > 1e−12`.
    pub sandwich_excess: f64,
    /// Largest excess in `c_lo 𝔈 ≤ Tr ℜ ≤ c_hi 𝔈` with
    /// `c_lo = min{1, 1/a_high}`, `c_hi = max{1, 1/a_low}`.
    pub trace_excess: f64,
    /// Same with `c_lo = min{2, 1/a_high}`, `c_hi = max{2, 1/a_low}`, the
    /// constants that hold for these one-dimensional proxies.
    pub trace_excess_1d: f64,
    pub blocks: Vec<BlockDefect>,
}

impl DefectProxy {
    pub fn jensen_ok(&self) -> bool {
        self.min_gap >= -JENSEN_TOL
    }

    pub fn sandwich_ok(&self) -> bool {
        self.sandwich_excess <= SANDWICH_TOL
    }

    pub fn trace_ok(&self) -> bool {
        self.trace_excess <= SANDWICH_TOL
    }

    pub fn trace_1d_ok(&self) -> bool {
        self.trace_excess_1d <= SANDWICH_TOL
    }
}

fn trace_excess(b: &BlockDefect, c_lo: f64, c_hi: f64) -> f64 {
    let e = b.energy_defect();
    let tr = b.trace_defect();
    (c_lo * e - tr).max(tr - c_hi * e)
}

/// Jensen gaps of `(R, Z, m = (R+Z)u)` over blocks of `k` cells.
pub fn block_defects(r: &[f64], z: &[f64], u: &[f64], k: usize, eos: &EosParams) -> Result<Vec<BlockDefect>> {
    let n = r.len();
    if k == 0 || n % k != 0 {
        return Err(Error::Resolution(format!("coarsening factor {k} does not divide {n} cells")));
    }
    let rho: Vec<f64> = r.iter().zip(z).map(|(a, b)| a + b).collect();
    let m: Vec<f64> = rho.iter().zip(u).map(|(a, b)| a * b).collect();
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut out = Vec::with_capacity(n / k);
    for b in 0..n / k {
        let s = b * k..(b + 1) * k;
        let (rb, zb, mb, pb) = (avg(&r[s.clone()]), avg(&z[s.clone()]), avg(&m[s.clone()]), avg(&rho[s.clone()]));
        let mut p_avg = 0.0;
        let mut h_avg = 0.0;
        let mut e_avg = 0.0;
        for i in s {
            p_avg += eos.pressure_at(r[i], z[i]);
            h_avg += helmholtz_closed(StatePoint::new(r[i], z[i]), eos)?;
            e_avg += kinetic_envelope(rho[i], m[i]);
        }
        let kf = k as f64;
        out.push(BlockDefect {
            delta_p: p_avg / kf - eos.pressure_at(rb, zb),
            delta_h: h_avg / kf - helmholtz_closed(StatePoint::new(rb, zb), eos)?,
            delta_kinetic: e_avg / kf - kinetic_envelope(pb, mb),
        });
    }
    Ok(out)
}

/// Defect proxies of a single snapshot.
pub fn defect_proxy_state(state: &SimState, k: usize, eos: &EosParams) -> Result<DefectProxy> {
    let report = convexity_constants(eos, 1000)?;
    defect_proxy_with(state, k, eos, report.a_low, report.a_high)
}

fn defect_proxy_with(state: &SimState, k: usize, eos: &EosParams, a_low: f64, a_high: f64) -> Result<DefectProxy> {
    let blocks = block_defects(&state.r, &state.z, &state.u, k, eos)?;
    let coarse_h = k as f64 / state.r.len() as f64;
    let general = (1f64.min(1.0 / a_high), 1f64.max(1.0 / a_low));
    let one_d = (2f64.min(1.0 / a_high), 2f64.max(1.0 / a_low));
    let mut proxy = DefectProxy {
        t: state.t,
        k,
        delta_p: 0.0,
        delta_h: 0.0,
        delta_kinetic: 0.0,
        trace_ratio_low: f64::INFINITY,
        trace_ratio_high: f64::NEG_INFINITY,
        min_gap: f64::INFINITY,
        sandwich_excess: f64::NEG_INFINITY,
        trace_excess: f64::NEG_INFINITY,
        trace_excess_1d: f64::NEG_INFINITY,
        blocks: Vec::new(),
    };
    for b in &blocks {
        proxy.delta_p += coarse_h * b.delta_p;
        proxy.delta_h += coarse_h * b.delta_h;
        proxy.delta_kinetic += coarse_h * b.delta_kinetic;
        proxy.min_gap = proxy.min_gap.min(b.delta_p).min(b.delta_h).min(b.delta_kinetic);
        if b.delta_p > JENSEN_TOL {
            let excess = (a_low * b.delta_p - b.delta_h).max(b.delta_h - a_high * b.delta_p);
            proxy.sandwich_excess = proxy.sandwich_excess.max(excess);
        }
        proxy.trace_excess = proxy.trace_excess.max(trace_excess(b, general.0, general.1));
        proxy.trace_excess_1d = proxy.trace_excess_1d.max(trace_excess(b, one_d.0, one_d.1));
        let e = b.energy_defect();
        if e > JENSEN_TOL {
            let ratio = b.trace_defect() / e;
            proxy.trace_ratio_low = proxy.trace_ratio_low.min(ratio);
            proxy.trace_ratio_high = proxy.trace_ratio_high.max(ratio);
        }
    }
    proxy.sandwich_excess = proxy.sandwich_excess.max(0.0);
    proxy.blocks = blocks;
    Ok(proxy)
}

/// Defect proxies of every snapshot of a trajectory.
pub fn defect_proxy(traj: &Trajectory, k: usize, eos: &EosParams) -> Result<Vec<DefectProxy>> {
    let report = convexity_constants(eos, 1000)?;
    traj.snapshots
        .iter()
        .map(|s| defect_proxy_with(s, k, eos, report.a_low, report.a_high))
        .collect()
}

/// Relative-energy series of `coarse` against `fine` restricted to the
/// coarse grid, at the coarse snapshot times that the fine run also stored.
pub fn rel_energy_series(coarse: &Trajectory, fine: &Trajectory, eos: &EosParams) -> Result<Vec<RelEnergyRecord>> {
    if fine.n_cells % coarse.n_cells != 0 {
        return Err(Error::Resolution(format!(
            "fine grid ({}) is not a refinement of the coarse grid ({})",
            fine.n_cells, coarse.n_cells
        )));
    }
    let k = fine.n_cells / coarse.n_cells;
    let grid = Grid1D::new(coarse.n_cells)?;
    let tol = 1e-9 * coarse.dt.min(fine.dt);
    let mut out = Vec::new();
    let mut j = 0;
    for s in &coarse.snapshots {
        while j < fine.snapshots.len() && fine.snapshots[j].t < s.t - tol {
            j += 1;
        }
        let Some(f) = fine.snapshots.get(j) else { break };
        if (f.t - s.t).abs() > tol {
            continue;
        }
        let reference = ReferenceState {
            r: restrict(&f.r, k)?,
            z: restrict(&f.z, k)?,
            u: restrict(&f.u, k)?,
        };
        out.push(RelEnergyRecord {
            t: s.t,
            value: relative_energy(&s.r, &s.z, &s.u, &reference, &grid, eos)?,
            gronwall_bound: f64::NAN,
        });
    }
    if out.is_empty() {
        return Err(Error::Resolution("no common snapshot times between the two runs".into()));
    }
    Ok(out)
}
