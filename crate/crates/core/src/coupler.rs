//! Per-step Picard iteration of the transport/momentum fixed point and the
//! time-marching loop.

use std::path::PathBuf;

use nalgebra::DMatrix;

use crate::diagnostics::{energy_inequality_residual, total_energy, EnergyBudget};
use crate::discretization::{build_basis, project, GalerkinBasis, Grid1D};
use crate::eos::{EosParams, StatePoint};
use crate::error::{Error, Result};
use crate::momentum::{
    lift_momentum, mass_matrix, stiffness_matrix, velocity_at_faces, velocity_at_nodes, BoundaryLift,
    MomentumContext, StressParams,
};
use crate::profile::Profile;
use crate::transport::{mass_budget, step_transport, BoundaryData, Species, TransportConfig};

/// Tolerance of the cone membership invariant along trajectories.
pub const CONE_TOL: f64 = 1e-8;
pub const DEFAULT_OUTPUT_DIR: &str = "bifluid-out";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_cells: usize,
    pub n_modes: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub dt: f64,
    pub horizon: f64,
    pub mu: f64,
    pub lambda: f64,
    pub eos: EosParams,
    pub bc: BoundaryData,
    pub r0: Profile,
    pub z0: Profile,
    pub u0: Profile,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub relaxation: f64,
    pub every_n_steps: usize,
    pub output_dir: PathBuf,
    /// Attach a fine-grid reference with this refinement factor.
    pub reference_refine: Option<usize>,
    pub gronwall_c_max: f64,
    /// Coarsening factors for the defect proxies.
    pub coarsen: Vec<usize>,
}

impl RunConfig {
    /// A config with the documented defaults for every optional key.
    pub fn new(n_cells: usize, n_modes: usize, epsilon: f64, dt: f64, horizon: f64, eos: EosParams) -> Self {
        RunConfig {
            n_cells,
            n_modes,
            epsilon,
            theta: 1.0,
            dt,
            horizon,
            mu: 1.0,
            lambda: 0.0,
            eos,
            bc: BoundaryData::constant(0.0, 1.0, 1.0),
            r0: Profile::constant(1.0),
            z0: Profile::constant(1.0),
            u0: Profile::constant(0.0),
            picard_tol: 1e-10,
            picard_max: 20,
            relaxation: 1.0,
            every_n_steps: 1,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            reference_refine: None,
            gronwall_c_max: 50.0,
            coarsen: vec![2, 4, 8],
        }
    }

    pub fn stress(&self) -> StressParams {
        StressParams {
            mu: self.mu,
            lambda: self.lambda,
        }
    }

    pub fn transport(&self) -> TransportConfig {
        TransportConfig {
            epsilon: self.epsilon,
            dt: self.dt,
            theta: self.theta,
        }
    }

    /// Number of time steps; `horizon` must be a whole multiple of `dt`.
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Every violated invariant, including those of the initial and
    /// boundary data.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_cells == 0 {
            out.push("grid.n_cells must be ≥ 1".into());
        }
        if self.n_modes == 0 {
            out.push("galerkin.n_modes must be ≥ 1".into());
        }
        if self.n_cells < 8 * self.n_modes {
            out.push(format!(
                "grid.n_cells = {} must be ≥ 8·galerkin.n_modes = {}",
                self.n_cells,
                8 * self.n_modes
            ));
        }
        out.extend(self.transport().violations());
        out.extend(self.stress().violations());
        out.extend(self.eos.violations());
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(format!("time.horizon = {} must be > 0", self.horizon));
        } else if self.dt > 0.0 {
            let n = self.n_steps();
            if n == 0 || (n as f64 * self.dt - self.horizon).abs() > 1e-9 * self.horizon {
                out.push(format!(
                    "time.horizon = {} must be a positive multiple of time.dt = {}",
                    self.horizon, self.dt
                ));
            }
        }
        if !(self.picard_tol > 0.0) {
            out.push(format!("picard.tol = {} must be > 0", self.picard_tol));
        }
        if self.picard_max == 0 {
            out.push("picard.max must be ≥ 1".into());
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            out.push(format!("picard.relaxation = {} must lie in (0, 1]", self.relaxation));
        }
        if self.every_n_steps == 0 {
            out.push("output.every_n_steps must be ≥ 1".into());
        }
        if let Some(k) = self.reference_refine {
            if k == 0 {
                out.push("reference.refine must be ≥ 1".into());
            }
        }
        if !(self.gronwall_c_max >= 0.0) {
            out.push(format!("gronwall.c_max = {} must be ≥ 0", self.gronwall_c_max));
        }
        if self.coarsen.iter().any(|&k| k == 0) {
            out.push("diagnostics.coarsen factors must be ≥ 1".into());
        }
        if self.eos.violations().is_empty() {
            out.extend(self.bc.violations(self.eos.cone()));
            if self.n_cells > 0 {
                out.extend(self.initial_data_violations());
            }
        }
        out
    }

    fn initial_data_violations(&self) -> Vec<String> {
        let grid = match Grid1D::new(self.n_cells) {
            Ok(g) => g,
            Err(_) => return Vec::new(),
        };
        let cone = self.eos.cone();
        let mut out = Vec::new();
        for &x in grid.nodes() {
            let (r, z) = (self.r0.eval(x), self.z0.eval(x));
            let u = self.u0.eval(x);
            if !(r.is_finite() && z.is_finite() && u.is_finite()) {
                out.push(format!("initial data not finite at x = {x}"));
                break;
            }
            if !(r > 0.0 && z > 0.0) {
                out.push(format!("initial densities must be > 0, got ({r}, {z}) at x = {x}"));
                break;
            }
            let slack = 1e-12 * r.max(z);
            if cone.b_low * r > z + slack || z > cone.b_high * r + slack {
                out.push(format!(
                    "initial data (R0, Z0) = ({r}, {z}) at x = {x} violates b_low·R0 ≤ Z0 ≤ b_high·R0"
                ));
                break;
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

/// Densities at cell centres and velocity coefficients at time `t`; `u` is
/// the full velocity `Σ v_i w_i + u_B` at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub mass_r: f64,
    pub mass_z: f64,
    pub kinetic: f64,
    pub helmholtz: f64,
    pub dissipation_cum: f64,
    pub residual_e7: f64,
    pub residual_e7_aux: f64,
    pub min_r: f64,
    pub max_r: f64,
    pub min_z: f64,
    pub max_z: f64,
    pub cone_margin_low: f64,
    pub cone_margin_high: f64,
    pub picard_iters: usize,
    pub picard_residuals: Vec<f64>,
    pub mass_res_r: f64,
    pub mass_res_z: f64,
    pub max_du_dx: f64,
    pub rel_energy: Option<f64>,
    pub budget: Option<EnergyBudget>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub n_cells: usize,
    pub snapshots: Vec<SimState>,
    /// One record per step, preceded by the record of the initial state.
    pub records: Vec<StepRecord>,
}

/// Result of one converged Picard step.
#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub state: SimState,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Grid, basis and the time-independent matrices of a run.
#[derive(Debug, Clone)]
pub struct Solver {
    pub cfg: RunConfig,
    pub grid: Grid1D,
    pub basis: GalerkinBasis,
    pub lift: BoundaryLift,
    stiffness: DMatrix<f64>,
}

impl Solver {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = Grid1D::new(cfg.n_cells)?;
        let basis = build_basis(cfg.n_modes, &grid)?;
        let lift = BoundaryLift::new(&cfg.bc, &grid);
        let stiffness = stiffness_matrix(&basis, &grid, cfg.stress());
        Ok(Solver {
            cfg: cfg.clone(),
            grid,
            basis,
            lift,
            stiffness,
        })
    }

    pub fn momentum_context(&self) -> MomentumContext<'_> {
        MomentumContext {
            grid: &self.grid,
            basis: &self.basis,
            lift: &self.lift,
            eos: &self.cfg.eos,
            stress: self.cfg.stress(),
            epsilon: self.cfg.epsilon,
        }
    }

    pub fn state(&self, t: f64, r: Vec<f64>, z: Vec<f64>, v: Vec<f64>) -> Result<SimState> {
        let (u, _) = velocity_at_nodes(&v, &self.basis, &self.lift)?;
        Ok(SimState { t, r, z, v, u })
    }

    /// `∂_x u` at cell centres.
    pub fn velocity_gradient(&self, state: &SimState) -> Result<Vec<f64>> {
        Ok(velocity_at_nodes(&state.v, &self.basis, &self.lift)?.1)
    }

    /// Tabulated initial densities and `v = Π_n(u_0 − u_B)`.
    pub fn init_state(&self) -> Result<SimState> {
        let cfg = &self.cfg;
        let r = self.grid.tabulate(|x| cfg.r0.eval(x));
        let z = self.grid.tabulate(|x| cfg.z0.eval(x));
        let du: Vec<f64> = self
            .grid
            .nodes()
            .iter()
            .zip(&self.lift.nodes)
            .map(|(&x, ub)| cfg.u0.eval(x) - ub)
            .collect();
        let v = project(&du, &self.basis, &self.grid)?;
        let state = self.state(0.0, r, z, v)?;
        check_invariants(&state, &cfg.eos)?;
        Ok(state)
    }

    /// One time step: transport with the velocity iterate, then momentum
    /// with the new densities, until the coefficient update is below
    /// `picard_tol`.
    pub fn picard_step(&self, state: &SimState) -> Result<PicardOutcome> {
        let cfg = &self.cfg;
        let tcfg = cfg.transport();
        let ctx = self.momentum_context();
        let dt = cfg.dt;

        let rho_old: Vec<f64> = state.r.iter().zip(&state.z).map(|(a, b)| a + b).collect();
        let v_old = nalgebra::DVector::from_column_slice(&state.v);
        let old_momentum =
            mass_matrix(&rho_old, &self.basis, &self.grid) * &v_old + lift_momentum(&rho_old, &self.basis, &self.grid, &self.lift);
        let u_old_faces = velocity_at_faces(&state.v, &self.basis, &self.lift)?;

        let mut v_iter = state.v.clone();
        let mut residuals = Vec::new();
        for _ in 0..cfg.picard_max {
            let u_faces = velocity_at_faces(&v_iter, &self.basis, &self.lift)?;
            let r = step_transport(&state.r, &u_old_faces, &u_faces, &self.grid, &tcfg, &cfg.bc, Species::R)?;
            let z = step_transport(&state.z, &u_old_faces, &u_faces, &self.grid, &tcfg, &cfg.bc, Species::Z)?;

            let sys = crate::momentum::assemble_galerkin_system(&r, &z, &v_iter, &ctx)?;
            let rho_new: Vec<f64> = r.iter().zip(&z).map(|(a, b)| a + b).collect();
            let b_new = lift_momentum(&rho_new, &self.basis, &self.grid, &self.lift);
            let rhs = &old_momentum - b_new + dt * &sys.force_explicit;
            let lhs = sys.mass + dt * &self.stiffness;
            let chol = lhs
                .cholesky()
                .ok_or_else(|| Error::Solver("momentum system is not symmetric positive definite".into()))?;
            let v_hat = chol.solve(&rhs);

            let next: Vec<f64> = v_iter
                .iter()
                .zip(v_hat.iter())
                .map(|(a, b)| a + cfg.relaxation * (b - a))
                .collect();
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm <= crate::momentum::DIVERGENCE_LIMIT) {
                return Err(Error::Divergence(norm));
            }
            let res = next
                .iter()
                .zip(&v_iter)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            residuals.push(res);
            v_iter = next;
            if res < cfg.picard_tol {
                let iterations = residuals.len();
                let state = self.state(state.t + dt, r, z, v_iter)?;
                return Ok(PicardOutcome {
                    state,
                    iterations,
                    residuals,
                });
            }
        }
        Err(Error::NonConvergence { residuals })
    }

    fn record(&self, state: &SimState, prev: Option<(&SimState, &StepRecord, &PicardOutcome)>) -> Result<StepRecord> {
        let cfg = &self.cfg;
        let (kinetic, helmholtz) = total_energy(state, self, &cfg.eos)?;
        let fold = |v: &[f64], f: fn(f64, f64) -> f64, init: f64| v.iter().fold(init, |m, x| f(m, *x));
        let cone = cfg.eos.cone();
        let mut low = f64::INFINITY;
        let mut high = f64::INFINITY;
        for (&r, &z) in state.r.iter().zip(&state.z) {
            let (a, b) = cone.margins(StatePoint::new(r, z));
            low = low.min(a);
            high = high.min(b);
        }
        let du = self.velocity_gradient(state)?;
        let mut rec = StepRecord {
            t: state.t,
            mass_r: self.grid.integrate(&state.r),
            mass_z: self.grid.integrate(&state.z),
            kinetic,
            helmholtz,
            dissipation_cum: 0.0,
            residual_e7: 0.0,
            residual_e7_aux: 0.0,
            min_r: fold(&state.r, f64::min, f64::INFINITY),
            max_r: fold(&state.r, f64::max, f64::NEG_INFINITY),
            min_z: fold(&state.z, f64::min, f64::INFINITY),
            max_z: fold(&state.z, f64::max, f64::NEG_INFINITY),
            cone_margin_low: low,
            cone_margin_high: high,
            picard_iters: 0,
            picard_residuals: Vec::new(),
            mass_res_r: 0.0,
            mass_res_z: 0.0,
            max_du_dx: du.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            rel_energy: None,
            budget: None,
        };
        if let Some((old, old_rec, outcome)) = prev {
            let tcfg = cfg.transport();
            let budget = energy_inequality_residual(old, state, self)?;
            rec.dissipation_cum = old_rec.dissipation_cum + budget.dissipation;
            rec.residual_e7 = budget.residual;
            rec.residual_e7_aux = budget.residual_aux;
            rec.picard_iters = outcome.iterations;
            rec.picard_residuals = outcome.residuals.clone();
            rec.mass_res_r = mass_budget(&old.r, &state.r, &self.grid, &tcfg, &cfg.bc, Species::R);
            rec.mass_res_z = mass_budget(&old.z, &state.z, &self.grid, &tcfg, &cfg.bc, Species::Z);
            rec.budget = Some(budget);
        }
        Ok(rec)
    }

    /// Marches from `t = 0` to the horizon. Snapshots are kept every
    /// `every_n_steps` steps and at the final step.
    pub fn run(&self) -> Result<Trajectory> {
        let cfg = &self.cfg;
        let mut state = self.init_state()?;
        let first = self.record(&state, None)?;
        let mut records = vec![first];
        let mut snapshots = vec![state.clone()];
        let n_steps = cfg.n_steps();
        for step in 1..=n_steps {
            let t = step as f64 * cfg.dt;
            let at = |e: Error| Error::AtTime {
                t,
                source: Box::new(e),
            };
            let mut outcome = self.picard_step(&state).map_err(at)?;
            outcome.state.t = t;
            let rec = self
                .record(&outcome.state, Some((&state, records.last().expect("initial record"), &outcome)))
                .map_err(at)?;
            check_record(&rec).map_err(at)?;
            check_invariants(&outcome.state, &cfg.eos).map_err(at)?;
            records.push(rec);
            state = outcome.state;
            if step % cfg.every_n_steps == 0 || step == n_steps {
                snapshots.push(state.clone());
            }
        }
        Ok(Trajectory {
            dt: cfg.dt,
            n_cells: cfg.n_cells,
            snapshots,
            records,
        })
    }
}

fn check_record(rec: &StepRecord) -> Result<()> {
    let values = [
        rec.mass_r,
        rec.mass_z,
        rec.kinetic,
        rec.helmholtz,
        rec.dissipation_cum,
        rec.residual_e7,
        rec.residual_e7_aux,
    ];
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvariantViolation(format!("non-finite diagnostics at t = {}", rec.t)))
    }
}

/// Positivity, finiteness and cone membership (within [`CONE_TOL`]).
pub fn check_invariants(state: &SimState, eos: &EosParams) -> Result<()> {
    let cone = eos.cone();
    let dx = 1.0 / state.r.len() as f64;
    let mut problems = Vec::new();
    for (i, (&r, &z)) in state.r.iter().zip(&state.z).enumerate() {
        let x = (i as f64 + 0.5) * dx;
        if !(r > 0.0 && z > 0.0 && r.is_finite() && z.is_finite()) {
            problems.push(format!("nonpositive density (R, Z) = ({r}, {z}) at x = {x}"));
        } else {
            let (lo, hi) = cone.margins(StatePoint::new(r, z));
            if lo < -CONE_TOL || hi < -CONE_TOL {
                problems.push(format!(
                    "cone violated at x = {x}: margins ({lo:e}, {hi:e})"
                ));
            }
        }
        if problems.len() >= 5 {
            break;
        }
    }
    if state.v.iter().any(|v| !v.is_finite()) {
        problems.push("non-finite velocity coefficients".into());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::InvariantViolation(problems.join("; ")))
    }
}

pub fn init_state(cfg: &RunConfig) -> Result<SimState> {
    Solver::new(cfg)?.init_state()
}

/// One Picard step; returns the new state and the iterations used.
pub fn picard_step(state: &SimState, cfg: &RunConfig) -> Result<(SimState, usize)> {
    let out = Solver::new(cfg)?.picard_step(state)?;
    Ok((out.state, out.iterations))
}

pub fn run(cfg: &RunConfig) -> Result<Trajectory> {
    Solver::new(cfg)?.run()
}
