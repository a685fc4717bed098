//! Galerkin momentum balance for the velocity fluctuation `v = u − u_B`.
//!
//! Tested against every mode `w_i`:
//!
//! ```text
//! d/dt ∫ρ u w_i = ∫ρ u² w_i' + ∫P w_i' − ∫(2μ+λ) u' w_i' − ε∫ρ' u' w_i,   ρ = R + Z.
//! ```
//!
//! The time-discrete form advances `M v + b` (Gram matrix and boundary-lift
//! momentum) with the viscous term implicit and everything else explicit in
//! the Picard iterate.

use nalgebra::{DMatrix, DVector};

use crate::discretization::{GalerkinBasis, Grid1D};
use crate::eos::{EosParams, PressureLaw};
use crate::error::{Error, Result};
use crate::transport::BoundaryData;

/// `|v|` above which a step is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressParams {
    pub mu: f64,
    pub lambda: f64,
}

impl StressParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self> {
        let s = StressParams { mu, lambda };
        let v = s.violations();
        if v.is_empty() {
            Ok(s)
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            out.push(format!("fluid.mu = {} must be > 0", self.mu));
        }
        if !(self.lambda + 2.0 * self.mu > 0.0 && self.lambda.is_finite()) {
            out.push(format!(
                "fluid.lambda = {} must satisfy λ + 2μ > 0 (μ = {})",
                self.lambda, self.mu
            ));
        }
        out
    }

    /// `2μ + λ`.
    pub fn coefficient(&self) -> f64 {
        2.0 * self.mu + self.lambda
    }
}

/// `(2μ + λ) ∂_x u`.
pub fn stress_1d(du_dx: &[f64], s: StressParams) -> Vec<f64> {
    let c = s.coefficient();
    du_dx.iter().map(|d| c * d).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState {
    pub v: Vec<f64>,
}

impl MomentumState {
    pub fn zeros(n_modes: usize) -> Self {
        MomentumState {
            v: vec![0.0; n_modes],
        }
    }

    pub fn norm(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `u_B` and `∂_x u_B` tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLift {
    pub nodes: Vec<f64>,
    pub derivs: Vec<f64>,
    pub faces: Vec<f64>,
}

impl BoundaryLift {
    pub fn new(bc: &BoundaryData, grid: &Grid1D) -> Self {
        BoundaryLift {
            nodes: bc.velocity_at_nodes(grid),
            derivs: bc.velocity_gradient_at_nodes(grid),
            faces: bc.velocity_at_faces(grid),
        }
    }
}

/// Full velocity `u = Σ v_i w_i + u_B` and its derivative at cell centres.
pub fn velocity_at_nodes(v: &[f64], basis: &GalerkinBasis, lift: &BoundaryLift) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut u = basis.reconstruct(v)?;
    let mut du = basis.reconstruct_derivative(v)?;
    for i in 0..u.len() {
        u[i] += lift.nodes[i];
        du[i] += lift.derivs[i];
    }
    Ok((u, du))
}

/// Full velocity at faces; equals `u_B` at both endpoints.
pub fn velocity_at_faces(v: &[f64], basis: &GalerkinBasis, lift: &BoundaryLift) -> Result<Vec<f64>> {
    let mut u = basis.reconstruct_faces(v)?;
    for (a, b) in u.iter_mut().zip(&lift.faces) {
        *a += b;
    }
    Ok(u)
}

/// Everything the momentum step needs besides the fields.
#[derive(Debug, Clone, Copy)]
pub struct MomentumContext<'a> {
    pub grid: &'a Grid1D,
    pub basis: &'a GalerkinBasis,
    pub lift: &'a BoundaryLift,
    pub eos: &'a EosParams,
    pub stress: StressParams,
    pub epsilon: f64,
}

/// Mass matrix and force vector of the Galerkin system.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinSystem {
    pub mass: DMatrix<f64>,
    /// Explicit force: convection, pressure, ε-correction, and the viscous
    /// action of `u_B`.
    pub force_explicit: DVector<f64>,
    /// `K_ij = (2μ+λ) ∫ w_i' w_j'`.
    pub stiffness: DMatrix<f64>,
}

impl GalerkinSystem {
    /// Total force with the viscous term evaluated at `v`.
    pub fn force(&self, v: &[f64]) -> DVector<f64> {
        &self.force_explicit - &self.stiffness * DVector::from_column_slice(v)
    }
}

fn total_density(r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    if r.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: r.len(),
            got: z.len(),
        });
    }
    let rho: Vec<f64> = r.iter().zip(z).map(|(a, b)| a + b).collect();
    if let Some((i, bad)) = rho.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
        return Err(Error::Assembly(format!("R + Z = {bad} ≤ 0 at cell {i}")));
    }
    Ok(rho)
}

/// `M_ij = ∫ρ w_i w_j`.
pub fn mass_matrix(rho: &[f64], basis: &GalerkinBasis, grid: &Grid1D) -> DMatrix<f64> {
    let n = basis.n_modes();
    let h = grid.h();
    let w = basis.values();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let wr: Vec<f64> = w[i].iter().zip(rho).map(|(a, b)| a * b).collect();
        for j in i..n {
            let v = h * wr.iter().zip(&w[j]).map(|(a, b)| a * b).sum::<f64>();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Boundary-lift momentum `b_i = ∫ρ u_B w_i`.
pub fn lift_momentum(rho: &[f64], basis: &GalerkinBasis, grid: &Grid1D, lift: &BoundaryLift) -> DVector<f64> {
    let h = grid.h();
    let ru: Vec<f64> = rho.iter().zip(&lift.nodes).map(|(a, b)| a * b).collect();
    DVector::from_iterator(
        basis.n_modes(),
        basis
            .values()
            .iter()
            .map(|w| h * w.iter().zip(&ru).map(|(a, b)| a * b).sum::<f64>()),
    )
}

pub fn stiffness_matrix(basis: &GalerkinBasis, grid: &Grid1D, s: StressParams) -> DMatrix<f64> {
    let n = basis.n_modes();
    let c = s.coefficient() * grid.h();
    let d = basis.derivs();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = c * d[i].iter().zip(&d[j]).map(|(a, b)| a * b).sum::<f64>();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Assembles the Galerkin system at densities `(R, Z)` with convection and
/// the ε-correction taken from the velocity iterate `v_prev`.
pub fn assemble_galerkin_system(
    r: &[f64],
    z: &[f64],
    v_prev: &[f64],
    ctx: &MomentumContext<'_>,
) -> Result<GalerkinSystem> {
    let rho = total_density(r, z)?;
    let grid = ctx.grid;
    let n_cells = grid.n_cells();
    if rho.len() != n_cells {
        return Err(Error::DimensionMismatch {
            expected: n_cells,
            got: rho.len(),
        });
    }
    let (u, du) = velocity_at_nodes(v_prev, ctx.basis, ctx.lift)?;
    let drho = grid.gradient(&rho);
    let visc = ctx.stress.coefficient();

    // Integrand multiplying w_i' and the one multiplying w_i.
    let mut against_deriv = vec![0.0; n_cells];
    let mut against_value = vec![0.0; n_cells];
    for k in 0..n_cells {
        let p = ctx.eos.pressure_at(r[k], z[k]);
        against_deriv[k] = rho[k] * u[k] * u[k] + p - visc * ctx.lift.derivs[k];
        against_value[k] = -ctx.epsilon * drho[k] * du[k];
    }
    let h = grid.h();
    let force = DVector::from_iterator(
        ctx.basis.n_modes(),
        ctx.basis
            .derivs()
            .iter()
            .zip(ctx.basis.values())
            .map(|(dw, w)| {
                h * (dw.iter().zip(&against_deriv).map(|(a, b)| a * b).sum::<f64>()
                    + w.iter().zip(&against_value).map(|(a, b)| a * b).sum::<f64>())
            }),
    );
    Ok(GalerkinSystem {
        mass: mass_matrix(&rho, ctx.basis, grid),
        force_explicit: force,
        stiffness: stiffness_matrix(ctx.basis, grid, ctx.stress),
    })
}

/// One backward-difference momentum step:
/// `(M_new + dt K) v_new = M_old v_old + b_old − b_new + dt F_explicit`.
///
/// `v_iter` is the Picard iterate supplying convection and the ε-term;
/// densities in the force are the updated ones.
#[allow(clippy::too_many_arguments)]
pub fn step_momentum(
    state: &MomentumState,
    v_iter: &[f64],
    r_new: &[f64],
    z_new: &[f64],
    r_old: &[f64],
    z_old: &[f64],
    dt: f64,
    ctx: &MomentumContext<'_>,
) -> Result<MomentumState> {
    let rho_old = total_density(r_old, z_old)?;
    let sys = assemble_galerkin_system(r_new, z_new, v_iter, ctx)?;
    let m_old = mass_matrix(&rho_old, ctx.basis, ctx.grid);
    let b_old = lift_momentum(&rho_old, ctx.basis, ctx.grid, ctx.lift);
    let rho_new: Vec<f64> = r_new.iter().zip(z_new).map(|(a, b)| a + b).collect();
    let b_new = lift_momentum(&rho_new, ctx.basis, ctx.grid, ctx.lift);

    let v_old = DVector::from_column_slice(&state.v);
    let rhs = &m_old * &v_old + b_old - b_new + dt * &sys.force_explicit;
    let lhs = &sys.mass + dt * &sys.stiffness;
    let chol = lhs.cholesky().ok_or_else(|| {
        Error::Solver("momentum system is not symmetric positive definite".into())
    })?;
    let v_new = chol.solve(&rhs);
    let out = MomentumState {
        v: v_new.iter().copied().collect(),
    };
    let norm = out.norm();
    if !(norm <= DIVERGENCE_LIMIT) {
        return Err(Error::Divergence(norm));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_basis;
    use crate::eos::HelmholtzAnchor;

    fn eos() -> EosParams {
        EosParams::new(1.0, 1.0, 2.0, 2.0, 0.5, 2.0)
            .unwrap()
            .with_anchor(HelmholtzAnchor::Origin)
    }

    #[test]
    fn stress_examples() {
        assert_eq!(stress_1d(&[0.0], StressParams::new(1.0, 0.0).unwrap()), vec![0.0]);
        assert_eq!(stress_1d(&[1.0], StressParams::new(1.0, 0.0).unwrap()), vec![2.0]);
        assert_eq!(stress_1d(&[2.0], StressParams::new(1.0, -0.5).unwrap()), vec![3.0]);
        assert!(StressParams::new(0.0, 1.0).is_err());
        assert!(StressParams::new(1.0, -2.0).is_err());
    }

    struct Setup {
        grid: Grid1D,
        basis: GalerkinBasis,
        lift: BoundaryLift,
        eos: EosParams,
    }

    fn setup(n: usize, modes: usize, bc: &BoundaryData) -> Setup {
        let grid = Grid1D::new(n).unwrap();
        let basis = build_basis(modes, &grid).unwrap();
        let lift = BoundaryLift::new(bc, &grid);
        Setup {
            grid,
            basis,
            lift,
            eos: eos(),
        }
    }

    impl Setup {
        fn ctx(&self, s: StressParams, eps: f64) -> MomentumContext<'_> {
            MomentumContext {
                grid: &self.grid,
                basis: &self.basis,
                lift: &self.lift,
                eos: &self.eos,
                stress: s,
                epsilon: eps,
            }
        }
    }

    #[test]
    fn unit_density_gives_identity_mass() {
        let st = setup(128, 8, &BoundaryData::constant(0.0, 1.0, 1.0));
        let ctx = st.ctx(StressParams::new(1.0, 0.0).unwrap(), 1e-2);
        let sys = assemble_galerkin_system(&[0.5; 128], &[0.5; 128], &[0.0; 8], &ctx).unwrap();
        let err = (&sys.mass - DMatrix::<f64>::identity(8, 8)).amax();
        assert!(err < 1e-6);
    }

    #[test]
    fn uniform_state_is_force_free() {
        let st = setup(128, 8, &BoundaryData::constant(0.5, 1.0, 1.0));
        let ctx = st.ctx(StressParams::new(1.0, 0.0).unwrap(), 1e-2);
        let sys = assemble_galerkin_system(&[1.0; 128], &[1.0; 128], &[0.0; 8], &ctx).unwrap();
        assert!(sys.force(&[0.0; 8]).amax() < 1e-12);
        let next = step_momentum(
            &MomentumState::zeros(8),
            &[0.0; 8],
            &[1.0; 128],
            &[1.0; 128],
            &[1.0; 128],
            &[1.0; 128],
            1e-3,
            &ctx,
        )
        .unwrap();
        assert!(next.v.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn single_mode_viscous_force() {
        let st = setup(128, 8, &BoundaryData::constant(0.0, 1.0, 1.0));
        let s = StressParams::new(1.0, 0.5).unwrap();
        let ctx = st.ctx(s, 1e-2);
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let sys = assemble_galerkin_system(&[0.5; 128], &[0.5; 128], &v, &ctx).unwrap();
        let f = sys.force(&v);
        let expected = -s.coefficient() * std::f64::consts::PI.powi(2);
        assert!((f[0] - expected).abs() < 1e-4, "{} vs {expected}", f[0]);
    }

    #[test]
    fn zero_density_node_is_an_assembly_error() {
        let st = setup(16, 2, &BoundaryData::constant(0.0, 1.0, 1.0));
        let ctx = st.ctx(StressParams::new(1.0, 0.0).unwrap(), 1e-2);
        let mut r = vec![1.0; 16];
        let mut z = vec![1.0; 16];
        r[3] = 0.0;
        z[3] = 0.0;
        assert!(matches!(
            assemble_galerkin_system(&r, &z, &[0.0; 2], &ctx),
            Err(Error::Assembly(_))
        ));
    }

    #[test]
    fn weighted_gram_lower_bound() {
        let st = setup(128, 8, &BoundaryData::constant(0.0, 1.0, 1.0));
        let rho = st.grid.tabulate(|x| 0.3 + x * x + 0.2 * (7.0 * x).sin().abs());
        let m = mass_matrix(&rho, &st.basis, &st.grid);
        let min_rho = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        let eig = m.symmetric_eigenvalues().min();
        assert!(eig >= min_rho * (1.0 - 1e-6));
    }

    #[test]
    fn heat_mode_decay() {
        let st = setup(128, 8, &BoundaryData::constant(0.0, 1.0, 1.0));
        let s = StressParams::new(0.05, 0.0).unwrap();
        let ctx = st.ctx(s, 1e-2);
        let half = vec![0.5; 128];
        let dt = 1e-4;
        let mut state = MomentumState::zeros(8);
        state.v[0] = 1.0;
        let v0 = state.norm();
        for k in 1..=1000 {
            let t = k as f64 * dt;
            // Picard on the convection term only; densities are frozen.
            let mut it = state.v.clone();
            let mut next = state.clone();
            for _ in 0..5 {
                next = step_momentum(&state, &it, &half, &half, &half, &half, dt, &ctx).unwrap();
                it = next.v.clone();
            }
            state = next;
            let bound = v0 * (-s.coefficient() * std::f64::consts::PI.powi(2) * t).exp() * (1.0 + 1e-2);
            assert!(state.norm() <= bound, "t = {t}: {} > {bound}", state.norm());
        }
    }

    #[test]
    fn semi_discrete_energy_consistency() {
        // u_B = 0, constant densities, pressure constant: the kinetic energy
        // drop per step matches the viscous dissipation to O(dt).
        let st = setup(128, 4, &BoundaryData::constant(0.0, 1.0, 1.0));
        let s = StressParams::new(0.1, 0.0).unwrap();
        let ctx = st.ctx(s, 1e-2);
        let half = vec![0.5; 128];
        let dt = 1e-4;
        let mut state = MomentumState {
            v: vec![0.3, 0.0, 0.1, 0.0],
        };
        let kinetic = |v: &[f64]| 0.5 * v.iter().map(|x| x * x).sum::<f64>();
        let dissip = |v: &[f64]| {
            let du = st.basis.reconstruct_derivative(v).unwrap();
            s.coefficient() * st.grid.integrate(&du.iter().map(|d| d * d).collect::<Vec<_>>())
        };
        for _ in 0..50 {
            let next = step_momentum(&state, &state.v, &half, &half, &half, &half, dt, &ctx).unwrap();
            let lhs = (kinetic(&next.v) - kinetic(&state.v)) / dt;
            let rhs = -dissip(&next.v);
            assert!((lhs - rhs).abs() <= 0.05 * rhs.abs() + 1e-6, "{lhs} vs {rhs}");
            state = next;
        }
    }

    #[test]
    fn dirichlet_trace_is_exact() {
        let bc = BoundaryData::new(
            crate::profile::Profile::parse("0.5 + 0.25*x").unwrap(),
            crate::profile::Profile::constant(1.0),
            crate::profile::Profile::constant(1.0),
        );
        let st = setup(64, 8, &bc);
        let v: Vec<f64> = (0..8).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let u = velocity_at_faces(&v, &st.basis, &st.lift).unwrap();
        assert_eq!(u[0], 0.5);
        assert_eq!(u[64], 0.75);
    }
}
