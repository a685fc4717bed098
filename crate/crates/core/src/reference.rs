//! Reference solutions: the exact uniform state and fine-grid runs.

use crate::coupler::{run, RunConfig, SimState, Trajectory};
use crate::eos::StatePoint;
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::transport::BoundaryData;

/// `cfg` with constant initial and boundary data `(Rc, Zc, Uc)`.
pub fn steady_config(rc: f64, zc: f64, uc: f64, cfg: &RunConfig) -> Result<RunConfig> {
    if !(rc > 0.0 && zc > 0.0) || !cfg.eos.cone().contains(StatePoint::new(rc, zc)) {
        return Err(Error::Validation(vec![format!(
            "uniform state ({rc}, {zc}) must be positive and satisfy b_low·Rc ≤ Zc ≤ b_high·Rc"
        )]));
    }
    let mut out = cfg.clone();
    out.bc = BoundaryData::constant(uc, rc, zc);
    out.r0 = Profile::constant(rc);
    out.z0 = Profile::constant(zc);
    out.u0 = Profile::constant(uc);
    Ok(out)
}

/// The time-constant exact solution `R ≡ Rc, Z ≡ Zc, u ≡ u_B ≡ Uc`, sampled
/// at the snapshot times of `cfg`.
pub fn uniform_steady(rc: f64, zc: f64, uc: f64, cfg: &RunConfig) -> Result<Trajectory> {
    let cfg = steady_config(rc, zc, uc, cfg)?;
    let n = cfg.n_cells;
    let n_steps = cfg.n_steps();
    let state = |t: f64| SimState {
        t,
        r: vec![rc; n],
        z: vec![zc; n],
        v: vec![0.0; cfg.n_modes],
        u: vec![uc; n],
    };
    let snapshots = (0..=n_steps)
        .filter(|s| s % cfg.every_n_steps == 0 || *s == n_steps)
        .map(|s| state(s as f64 * cfg.dt))
        .collect();
    Ok(Trajectory {
        dt: cfg.dt,
        n_cells: n,
        snapshots,
        records: Vec::new(),
    })
}

/// `cfg` at `n_cells·refine` cells, `n_modes·min(refine, 4)` modes and time
/// step `dt/refine²`; snapshots land on the same times.
pub fn refined_config(cfg: &RunConfig, refine: usize) -> Result<RunConfig> {
    if refine == 0 {
        return Err(Error::Resolution("refinement factor must be ≥ 1".into()));
    }
    let mut out = cfg.clone();
    let r2 = refine * refine;
    out.n_cells = cfg.n_cells * refine;
    out.n_modes = cfg.n_modes * refine.min(4);
    out.dt = cfg.dt / r2 as f64;
    out.every_n_steps = cfg.every_n_steps * r2;
    out.reference_refine = None;
    Ok(out)
}

pub fn fine_reference(cfg: &RunConfig, refine: usize) -> Result<Trajectory> {
    run(&refined_config(cfg, refine)?)
}

/// Block average over `k` consecutive cells.
pub fn restrict(fine: &[f64], k: usize) -> Result<Vec<f64>> {
    if k == 0 || fine.len() % k != 0 {
        return Err(Error::Resolution(format!(
            "restriction factor {k} does not divide {} cells",
            fine.len()
        )));
    }
    Ok(fine
        .chunks(k)
        .map(|c| c.iter().sum::<f64>() / k as f64)
        .collect())
}
