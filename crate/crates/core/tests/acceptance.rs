//! Acceptance criteria 1–10. Each test prints one `criterion N: PASS|FAIL`
//! line; run with `--nocapture` to see them.
//!
//! Golden fixtures for criterion 10 are regenerated with `BIFLUID_BLESS=1`.

use std::fs;
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bifluid::coupler::{run, RunConfig, Solver, Trajectory, CONE_TOL};
use bifluid::diagnostics::{defect_proxy, gronwall_check, rel_energy_series, total_energy};
use bifluid::eos::{
    cone_samples, convexity_constants, euler_identity_residual, helmholtz_closed, helmholtz_quad, EosParams,
};
use bifluid::output::{run_to_dir, SUMMARY_FILE, TRACE_FILE};
use bifluid::profile::Profile;
use bifluid::reference::{fine_reference, steady_config};
use bifluid::transport::{extremum_bounds, BoundaryData, Species};

fn verdict(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

fn unit_eos() -> EosParams {
    EosParams::new(1.0, 1.0, 2.0, 2.0, 0.5, 2.0).unwrap()
}

fn expr(s: &str) -> Profile {
    Profile::parse(s).unwrap()
}

fn smoke_config() -> RunConfig {
    let mut cfg = RunConfig::new(64, 8, 1e-2, 1e-3, 1.0, unit_eos());
    cfg.mu = 0.5;
    cfg.bc = BoundaryData::constant(0.1, 1.1, 1.1);
    cfg.r0 = expr("1 + 0.1*math::cos(pi*x)");
    cfg.z0 = cfg.r0.clone();
    cfg.u0 = expr("0.1 + 0.1*math::sin(pi*x)");
    cfg.every_n_steps = 50;
    cfg
}

fn closed_box_config(n_cells: usize, dt: f64) -> RunConfig {
    let mut cfg = RunConfig::new(n_cells, 4, 1e-2, dt, 0.5, unit_eos());
    cfg.mu = 0.5;
    cfg.bc = BoundaryData::constant(0.0, 1.0, 1.0);
    cfg.r0 = expr("1 + 0.1*math::cos(pi*x)");
    cfg.z0 = cfg.r0.clone();
    cfg.u0 = expr("math::sin(pi*x)");
    cfg
}

fn steady() -> RunConfig {
    let base = RunConfig::new(128, 8, 1e-2, 1e-3, 1.0, unit_eos());
    let mut cfg = steady_config(1.0, 1.0, 0.5, &base).unwrap();
    cfg.every_n_steps = 100;
    cfg
}

/// Random smooth cone-respecting data; boundary densities follow the
/// initial profiles.
fn random_config(rng: &mut ChaCha8Rng) -> RunConfig {
    let gamma = rng.gen_range(1.4..3.0);
    let beta = rng.gen_range(1.4..3.0);
    let b_low = rng.gen_range(0.3..0.8);
    let b_high = rng.gen_range(1.3..3.0);
    let eos = EosParams::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), gamma, beta, b_low, b_high).unwrap();

    let amp = rng.gen_range(0.5..2.0);
    let alpha = rng.gen_range(0.0..0.3);
    let k = rng.gen_range(1..=3);
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = b_low + (b_high - b_low) * rng.gen_range(0.3..0.7);
    let delta = 0.2 * (s - b_low).min(b_high - s);
    let j = rng.gen_range(1..=3);
    let ub = rng.gen_range(-0.3..0.3);
    let bump = rng.gen_range(-0.3..0.3);

    let r0 = format!("{amp} * (1 + {alpha} * math::cos({k}*pi*x + {phi}))");
    let z0 = format!("({r0}) * ({s} + {delta} * math::sin({j}*pi*x))");
    let mut cfg = RunConfig::new(64, 8, 1e-2, 1e-3, 0.2, eos);
    cfg.mu = rng.gen_range(0.2..1.0);
    cfg.lambda = rng.gen_range(0.0..0.5);
    cfg.r0 = expr(&r0);
    cfg.z0 = expr(&z0);
    cfg.u0 = expr(&format!("{ub} + {bump} * math::sin(pi*x)"));
    cfg.bc = BoundaryData::new(Profile::constant(ub), cfg.r0.clone(), cfg.z0.clone());
    cfg
}

struct SuiteRun {
    cfg: RunConfig,
    traj: Trajectory,
}

fn random_suite() -> &'static [SuiteRun] {
    static SUITE: OnceLock<Vec<SuiteRun>> = OnceLock::new();
    SUITE.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
        (0..20)
            .map(|_| {
                let cfg = random_config(&mut rng);
                let traj = run(&cfg).unwrap();
                SuiteRun { cfg, traj }
            })
            .collect()
    })
}

fn smoke_run() -> &'static Trajectory {
    static RUN: OnceLock<Trajectory> = OnceLock::new();
    RUN.get_or_init(|| run(&smoke_config()).unwrap())
}

/// Random suite, smoke config and a closed box, all at dt = 1e-3.
fn smoke_suite() -> Vec<(RunConfig, &'static Trajectory)> {
    static BOX: OnceLock<Trajectory> = OnceLock::new();
    let mut cfg = closed_box_config(64, 1e-3);
    cfg.every_n_steps = 50;
    let boxed = BOX.get_or_init(|| run(&cfg).unwrap());
    let mut out: Vec<_> = random_suite().iter().map(|s| (s.cfg.clone(), &s.traj)).collect();
    out.push((smoke_config(), smoke_run()));
    out.push((cfg, boxed));
    out
}

#[test]
fn criterion_01_eos_certification() {
    let start = Instant::now();
    let e = unit_eos();
    let pts = cone_samples(e.cone(), 1000, 7);
    let mut euler = 0.0f64;
    let mut quad = 0.0f64;
    for p in &pts {
        euler = euler.max(euler_identity_residual(*p, &e).unwrap());
        let closed = helmholtz_closed(*p, &e).unwrap();
        let q = helmholtz_quad(*p, &e, 64).unwrap();
        quad = quad.max((q - closed).abs() / closed.abs().max(f64::MIN_POSITIVE));
    }
    let rep = convexity_constants(&e, 1000).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = euler < 1e-6
        && quad < 1e-8
        && rep.a_low == 1.0
        && rep.a_high == 1.0
        && rep.gamma_coercive == 2.0
        && rep.hessian_min_eig > 0.0
        && rep.pass
        && elapsed < 5.0;
    verdict(
        1,
        ok,
        format!(
            "euler={euler:.2e} quad_rel={quad:.2e} a_low={} a_high={} gamma_coercive={} min_eig={:.3e} ({elapsed:.2}s)",
            rep.a_low, rep.a_high, rep.gamma_coercive, rep.hessian_min_eig
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_02_steady_exactness() {
    let start = Instant::now();
    let cfg = steady();
    let traj = run(&cfg).unwrap();
    let first = &traj.snapshots[0];
    let last = traj.snapshots.last().unwrap();
    let dev = first
        .r
        .iter()
        .zip(&last.r)
        .chain(first.z.iter().zip(&last.z))
        .chain(first.u.iter().zip(&last.u))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let res = traj.records.iter().map(|r| r.residual_e7).fold(f64::NEG_INFINITY, f64::max);
    let mut proxy = 0.0f64;
    for k in [2, 4, 8] {
        for p in defect_proxy(&traj, k, &cfg.eos).unwrap() {
            for b in &p.blocks {
                proxy = proxy.max(b.delta_p.abs()).max(b.delta_h.abs()).max(b.delta_kinetic.abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = dev < 1e-10 && res <= 1e-10 && proxy < 1e-12 && elapsed < 30.0;
    verdict(
        2,
        ok,
        format!("max_dev={dev:.2e} max_residual_E7={res:.2e} max_proxy={proxy:.2e} ({elapsed:.2}s)"),
    );
    assert!(ok);
}

#[test]
fn criterion_03_extremum_principles() {
    let mut ok = true;
    let mut worst_rel = f64::NEG_INFINITY;
    let mut min_density = f64::INFINITY;
    for (i, s) in random_suite().iter().enumerate() {
        let times: Vec<f64> = s.traj.snapshots.iter().map(|x| x.t).collect();
        let div_sup = s.traj.records.iter().map(|r| r.max_du_dx).fold(0.0f64, f64::max);
        for which in [Species::R, Species::Z] {
            let traj: Vec<Vec<f64>> = s
                .traj
                .snapshots
                .iter()
                .map(|x| match which {
                    Species::R => x.r.clone(),
                    Species::Z => x.z.clone(),
                })
                .collect();
            let grid = bifluid::discretization::Grid1D::new(s.cfg.n_cells).unwrap();
            let rep = extremum_bounds(&times, &traj, div_sup, &s.cfg.bc, &traj[0], s.cfg.horizon, &grid, which);
            min_density = min_density.min(rep.observed_min);
            worst_rel = worst_rel
                .max(rep.observed_max / rep.upper - 1.0)
                .max(1.0 - rep.observed_min / rep.lower);
            if !rep.ok() || rep.observed_min <= 0.0 {
                ok = false;
                println!("  run {i} {which:?}: {rep:?}");
            }
        }
    }
    verdict(
        3,
        ok,
        format!("20 runs, worst relative bound excess={worst_rel:.2e}, min density={min_density:.4}"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_domination_preservation() {
    let mut worst = f64::INFINITY;
    for s in random_suite() {
        for r in &s.traj.records {
            worst = worst.min(r.cone_margin_low).min(r.cone_margin_high);
        }
    }
    let ok = worst >= -CONE_TOL;
    verdict(4, ok, format!("20 runs, min cone margin={worst:.4e}"));
    assert!(ok);
}

#[test]
fn criterion_05_mass_budgets() {
    let mut worst = 0.0f64;
    let mut steps = 0;
    for (_, traj) in smoke_suite() {
        for r in &traj.records {
            worst = worst.max(r.mass_res_r).max(r.mass_res_z);
            steps += 1;
        }
    }
    let ok = worst <= 1e-10;
    verdict(5, ok, format!("{steps} steps, max mass residual={worst:.2e}"));
    assert!(ok);
}

/// Frozen from the calibration sweep (h, dt) = (1/32, 4e-3), (1/64, 1e-3),
/// (1/128, 2.5e-4): max positive residual / (dt + h²) ≈ 4.4e-3, doubled.
const ENERGY_C: f64 = 1e-2;

#[test]
fn criterion_06_energy_inequality() {
    let start = Instant::now();
    let levels = [(32usize, 4e-3), (64, 1e-3), (128, 2.5e-4)];
    let mut worst_pos = Vec::new();
    let mut scale = Vec::new();
    let mut bound_ok = true;
    for (n, dt) in levels {
        let traj = run(&closed_box_config(n, dt)).unwrap();
        let h = 1.0 / n as f64;
        let allowed = ENERGY_C * (dt + h * h);
        let pos = traj.records.iter().map(|r| r.residual_e7.max(0.0)).fold(0.0f64, f64::max);
        bound_ok &= traj.records.iter().all(|r| r.residual_e7 <= allowed);
        let b = traj.records.last().unwrap().budget.as_ref().unwrap();
        assert_eq!(b.outflow_flux, 0.0);
        assert_eq!(b.inflow_flux, 0.0);
        assert!(b.rhs_terms.iter().all(|x| *x == 0.0));
        worst_pos.push(pos);
        scale.push(dt + h * h);
    }
    let orders: Vec<f64> = (1..levels.len())
        .map(|i| (worst_pos[i - 1] / worst_pos[i]).ln() / (scale[i - 1] / scale[i]).ln())
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let ok = bound_ok && orders.iter().all(|p| *p >= 1.0) && elapsed < 120.0;
    verdict(
        6,
        ok,
        format!(
            "C={ENERGY_C:e} worst positive residual={:.2e}/{:.2e}/{:.2e}, order in (dt+h²)={:.2}/{:.2} ({elapsed:.1}s)",
            worst_pos[0], worst_pos[1], worst_pos[2], orders[0], orders[1]
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_07_weak_strong_gronwall() {
    let start = Instant::now();
    let cfg = smoke_config();
    let coarse = smoke_run();
    let fine = fine_reference(&cfg, 4).unwrap();
    let mut series = rel_energy_series(coarse, &fine, &cfg.eos).unwrap();
    let fit = gronwall_check(&mut series, 50.0);
    let solver = Solver::new(&cfg).unwrap();
    let (k0, h0) = total_energy(&coarse.snapshots[0], &solver, &cfg.eos).unwrap();
    let scale = k0 + h0;
    let mut own = rel_energy_series(coarse, coarse, &cfg.eos).unwrap();
    let self_fit = gronwall_check(&mut own, 50.0);
    let self_zero = own.iter().all(|r| r.value == 0.0) && self_fit.pass;
    let elapsed = start.elapsed().as_secs_f64();
    let ok = fit.value0 < 1e-6 * scale && fit.pass && fit.c_fit <= 50.0 && self_zero && elapsed < 300.0;
    verdict(
        7,
        ok,
        format!(
            "rel_energy(0)={:.2e} (scale {scale:.3}) C_fit={:.1} max={:.2e} self≡0={self_zero} ({elapsed:.1}s)",
            fit.value0, fit.c_fit, fit.max_value
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_defect_sandwich() {
    let mut jensen = f64::INFINITY;
    let mut sandwich = f64::NEG_INFINITY;
    let mut trace = f64::NEG_INFINITY;
    let mut trace_1d = f64::NEG_INFINITY;
    let mut ratio_hi = f64::NEG_INFINITY;
    let mut runs: Vec<(RunConfig, &Trajectory)> = smoke_suite();
    let steady_cfg = steady();
    let steady_traj = Box::leak(Box::new(run(&steady_cfg).unwrap()));
    runs.push((steady_cfg, steady_traj));
    for (cfg, traj) in &runs {
        for k in [2, 4, 8] {
            for p in defect_proxy(traj, k, &cfg.eos).unwrap() {
                jensen = jensen.min(p.min_gap);
                sandwich = sandwich.max(p.sandwich_excess);
                trace = trace.max(p.trace_excess);
                trace_1d = trace_1d.max(p.trace_excess_1d);
                if p.trace_ratio_high.is_finite() {
                    ratio_hi = ratio_hi.max(p.trace_ratio_high);
                }
            }
        }
    }
    let jensen_ok = jensen >= -1e-12;
    let sandwich_ok = sandwich <= 1e-8;
    let trace_ok = trace <= 1e-8;
    let trace_1d_ok = trace_1d <= 1e-8;
    println!(
        "criterion 8 (trace with constants min{{2,1/a_high}}, max{{2,1/a_low}}): {} max excess={trace_1d:.2e}",
        if trace_1d_ok { "PASS" } else { "FAIL" }
    );
    verdict(
        8,
        jensen_ok && sandwich_ok && trace_ok,
        format!(
            "{} runs, k∈{{2,4,8}}: min gap={jensen:.2e} ({}), sandwich excess={sandwich:.2e} ({}), \
             trace excess with min{{1,1/a_high}}, max{{1,1/a_low}}={trace:.2e} ({}), max Tr ℜ/𝔈={ratio_hi:.4}",
            runs.len(),
            if jensen_ok { "ok" } else { "violated" },
            if sandwich_ok { "ok" } else { "violated" },
            if trace_ok { "ok" } else { "violated" },
        ),
    );
    assert!(jensen_ok && sandwich_ok && trace_1d_ok);
    assert!(trace_ok, "trace sandwich with constants min{{1,1/a_high}}, max{{1,1/a_low}} violated by {trace:.3e}");
}

#[test]
fn criterion_09_picard_contraction() {
    let mut max_iters = 0;
    let mut monotone = true;
    for (_, traj) in smoke_suite() {
        for r in traj.records.iter().skip(1) {
            max_iters = max_iters.max(r.picard_iters);
            monotone &= r.picard_residuals.windows(2).all(|w| w[1] < w[0]);
        }
    }
    let mut halving_ok = true;
    let mut checked = 0;
    for (cfg, traj) in smoke_suite() {
        let full = Solver::new(&cfg).unwrap();
        let mut half_cfg = cfg.clone();
        half_cfg.dt = cfg.dt / 2.0;
        let half = Solver::new(&half_cfg).unwrap();
        for s in &traj.snapshots {
            let a = full.picard_step(s).unwrap().iterations;
            let b = half.picard_step(s).unwrap().iterations;
            checked += 1;
            if b > a {
                halving_ok = false;
                println!("  t={}: {a} iterations at dt, {b} at dt/2", s.t);
            }
        }
    }
    let ok = max_iters <= 10 && monotone && halving_ok;
    verdict(
        9,
        ok,
        format!("max iterations={max_iters}, monotone={monotone}, halving dt never increases ({checked} states)={halving_ok}"),
    );
    assert!(ok);
}

fn golden_config(dir: PathBuf) -> RunConfig {
    let mut cfg = closed_box_config(32, 1e-3);
    cfg.horizon = 0.05;
    cfg.every_n_steps = 10;
    cfg.reference_refine = Some(2);
    cfg.output_dir = dir;
    cfg
}

#[test]
fn criterion_10_determinism_and_golden_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = golden_config(tmp.path().join("a"));
    let b = golden_config(tmp.path().join("b"));
    run_to_dir(&a).unwrap();
    run_to_dir(&b).unwrap();
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    if std::env::var_os("BIFLUID_BLESS").is_some() {
        fs::create_dir_all(&fixtures).unwrap();
        for f in [TRACE_FILE, SUMMARY_FILE] {
            fs::copy(a.output_dir.join(f), fixtures.join(f)).unwrap();
        }
    }
    let mut identical = true;
    let mut golden = true;
    for f in [TRACE_FILE, SUMMARY_FILE] {
        let x = fs::read(a.output_dir.join(f)).unwrap();
        identical &= x == fs::read(b.output_dir.join(f)).unwrap();
        golden &= fs::read(fixtures.join(f)).map(|g| g == x).unwrap_or(false);
    }
    let ok = identical && golden;
    verdict(10, ok, format!("repeat byte-identical={identical}, golden match={golden}"));
    assert!(ok);
}
