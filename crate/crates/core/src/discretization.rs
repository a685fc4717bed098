//! Cell-centred grid on Ω = (0, 1) and the sine Galerkin basis for the
//! velocity.
//!
//! All inner products use the midpoint rule on cell centres. For the sine
//! modes this rule is discretely orthogonal (`Σ_k sin(iπx_k) sin(jπx_k) = n/2
//! δ_ij` for `i, j < n`), so the Gram matrix is the identity up to rounding.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    h: f64,
    nodes: Vec<f64>,
    faces: Vec<f64>,
}

impl Grid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::Resolution("grid needs at least one cell".into()));
        }
        let h = 1.0 / n_cells as f64;
        let nodes = (0..n_cells).map(|i| (i as f64 + 0.5) * h).collect();
        let faces = (0..=n_cells).map(|i| i as f64 * h).collect();
        Ok(Grid1D {
            n_cells,
            h,
            nodes,
            faces,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cell-centre coordinates.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Face coordinates, including both endpoints.
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// Midpoint quadrature of a grid function.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.h * f.iter().sum::<f64>()
    }

    /// Tabulates `f` at cell centres.
    pub fn tabulate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Second-order central differences at centres, one-sided (second order)
    /// in the first and last cell.
    pub fn gradient(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        debug_assert_eq!(n, self.n_cells);
        if n == 1 {
            return vec![0.0];
        }
        if n == 2 {
            let d = (f[1] - f[0]) / self.h;
            return vec![d, d];
        }
        let mut out = vec![0.0; n];
        let inv2h = 0.5 / self.h;
        for i in 1..n - 1 {
            out[i] = (f[i + 1] - f[i - 1]) * inv2h;
        }
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2h;
        out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2h;
        out
    }
}

/// Orthonormal sine modes `w_i(x) = √2 sin(iπx)`, tabulated at cell centres
/// and faces together with their analytic derivatives.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    n_modes: usize,
    n_cells: usize,
    /// `values[i][k] = w_{i+1}(x_k)` at centres.
    values: Vec<Vec<f64>>,
    /// `derivs[i][k] = w'_{i+1}(x_k)` at centres.
    derivs: Vec<Vec<f64>>,
    /// `face_values[i][f] = w_{i+1}` at face `f` (zero at both endpoints).
    face_values: Vec<Vec<f64>>,
}

pub fn mode_value(i: usize, x: f64) -> f64 {
    SQRT_2 * (i as f64 * PI * x).sin()
}

pub fn mode_derivative(i: usize, x: f64) -> f64 {
    let k = i as f64 * PI;
    SQRT_2 * k * (k * x).cos()
}

pub fn build_basis(n_modes: usize, grid: &Grid1D) -> Result<GalerkinBasis> {
    if n_modes == 0 {
        return Err(Error::Resolution("need at least one Galerkin mode".into()));
    }
    if grid.n_cells() < 8 * n_modes {
        return Err(Error::Resolution(format!(
            "n_cells = {} cannot resolve {} modes (need n_cells ≥ 8·n_modes = {})",
            grid.n_cells(),
            n_modes,
            8 * n_modes
        )));
    }
    let tab = |pts: &[f64], f: fn(usize, f64) -> f64| -> Vec<Vec<f64>> {
        (1..=n_modes)
            .map(|i| pts.iter().map(|&x| f(i, x)).collect())
            .collect()
    };
    let mut face_values = tab(grid.faces(), mode_value);
    for row in &mut face_values {
        // Exact zeros at the boundary rather than sin(iπ) ≈ 1e-16.
        row[0] = 0.0;
        *row.last_mut().expect("non-empty") = 0.0;
    }
    Ok(GalerkinBasis {
        n_modes,
        n_cells: grid.n_cells(),
        values: tab(grid.nodes(), mode_value),
        derivs: tab(grid.nodes(), mode_derivative),
        face_values,
    })
}

impl GalerkinBasis {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn derivs(&self) -> &[Vec<f64>] {
        &self.derivs
    }

    pub fn face_values(&self) -> &[Vec<f64>] {
        &self.face_values
    }

    fn check_len(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes,
                got: c.len(),
            });
        }
        Ok(())
    }

    fn combine(&self, c: &[f64], table: &[Vec<f64>]) -> Vec<f64> {
        let len = table.first().map_or(0, Vec::len);
        let mut out = vec![0.0; len];
        for (ci, row) in c.iter().zip(table) {
            if *ci == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(row) {
                *o += ci * w;
            }
        }
        out
    }

    /// `Σ c_i w_i` at cell centres.
    pub fn reconstruct(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c)?;
        Ok(self.combine(c, &self.values))
    }

    /// `Σ c_i w_i'` at cell centres.
    pub fn reconstruct_derivative(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c)?;
        Ok(self.combine(c, &self.derivs))
    }

    /// `Σ c_i w_i` at faces; both endpoint values are exactly zero.
    pub fn reconstruct_faces(&self, c: &[f64]) -> Result<Vec<f64>> {
        self.check_len(c)?;
        Ok(self.combine(c, &self.face_values))
    }
}

/// Midpoint-quadrature L² projection onto the span of the modes.
pub fn project(field: &[f64], basis: &GalerkinBasis, grid: &Grid1D) -> Result<Vec<f64>> {
    if field.len() != grid.n_cells() {
        return Err(Error::DimensionMismatch {
            expected: grid.n_cells(),
            got: field.len(),
        });
    }
    Ok(basis
        .values
        .iter()
        .map(|w| grid.h() * w.iter().zip(field).map(|(a, b)| a * b).sum::<f64>())
        .collect())
}

pub fn reconstruct(c: &[f64], basis: &GalerkinBasis) -> Result<Vec<f64>> {
    basis.reconstruct(c)
}

/// Quadrature L² norm of a grid function.
pub fn l2_norm(field: &[f64], grid: &Grid1D) -> f64 {
    (grid.h() * field.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_layout() {
        let g = Grid1D::new(4).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.nodes(), &[0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.faces(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(Grid1D::new(0).is_err());
    }

    #[test]
    fn first_mode_peak() {
        assert_eq!(mode_value(1, 0.5), SQRT_2);
    }

    #[test]
    fn resolution_guard() {
        let g = Grid1D::new(31).unwrap();
        assert!(matches!(build_basis(4, &g), Err(Error::Resolution(_))));
        assert!(build_basis(4, &Grid1D::new(32).unwrap()).is_ok());
    }

    #[test]
    fn gram_matrix_is_identity() {
        let g = Grid1D::new(64).unwrap();
        let b = build_basis(4, &g).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let gram: f64 = g.h()
                    * b.values()[i]
                        .iter()
                        .zip(&b.values()[j])
                        .map(|(a, c)| a * c)
                        .sum::<f64>();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram - expect).abs() < 1e-10, "({i},{j}) {gram}");
            }
        }
    }

    #[test]
    fn modes_vanish_at_endpoints() {
        let g = Grid1D::new(64).unwrap();
        let b = build_basis(8, &g).unwrap();
        for row in b.face_values() {
            assert_eq!(row[0], 0.0);
            assert_eq!(row[64], 0.0);
        }
        let u = b.reconstruct_faces(&[1.0, -2.0, 0.5, 3.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((u[0], u[64]), (0.0, 0.0));
    }

    #[test]
    fn derivative_tables_are_analytic() {
        let g = Grid1D::new(40).unwrap();
        let b = build_basis(5, &g).unwrap();
        for (i, row) in b.derivs().iter().enumerate() {
            let k = (i + 1) as f64 * PI;
            for (x, d) in g.nodes().iter().zip(row) {
                assert_eq!(*d, SQRT_2 * k * (k * x).cos());
            }
        }
    }

    #[test]
    fn projection_examples() {
        let g = Grid1D::new(64).unwrap();
        let b = build_basis(4, &g).unwrap();
        let w2 = g.tabulate(|x| mode_value(2, x));
        let c = project(&w2, &b, &g).unwrap();
        for (i, ci) in c.iter().enumerate() {
            let expect = if i == 1 { 1.0 } else { 0.0 };
            assert!((ci - expect).abs() < 1e-6);
        }
        assert_eq!(project(&vec![0.0; 64], &b, &g).unwrap(), vec![0.0; 4]);
        let f = g.tabulate(|x| mode_value(1, x) + 3.0 * mode_value(3, x));
        let c = project(&f, &b, &g).unwrap();
        for (ci, e) in c.iter().zip([1.0, 0.0, 3.0, 0.0]) {
            assert!((ci - e).abs() < 1e-6);
        }
        assert!(project(&[1.0; 3], &b, &g).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        let g = Grid1D::new(32).unwrap();
        let b = build_basis(4, &g).unwrap();
        let u = b.reconstruct(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for (x, v) in g.nodes().iter().zip(&u) {
            assert_eq!(*v, SQRT_2 * (PI * x).sin());
        }
        assert!(b.reconstruct(&[0.0; 4]).unwrap().iter().all(|v| *v == 0.0));
        assert!(matches!(
            b.reconstruct(&[1.0; 3]),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn central_gradient_is_exact_for_quadratics() {
        let g = Grid1D::new(16).unwrap();
        let f = g.tabulate(|x| 3.0 * x * x - x + 2.0);
        let d = g.gradient(&f);
        for (x, v) in g.nodes().iter().zip(&d) {
            assert!((v - (6.0 * x - 1.0)).abs() < 1e-11);
        }
    }

    proptest! {
        #[test]
        fn parseval_and_idempotence(c in prop::collection::vec(-5.0f64..5.0, 6)) {
            let g = Grid1D::new(48).unwrap();
            let b = build_basis(6, &g).unwrap();
            let u = b.reconstruct(&c).unwrap();
            let norm_c = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((l2_norm(&u, &g) - norm_c).abs() < 1e-6);
            let back = project(&u, &b, &g).unwrap();
            for (x, y) in back.iter().zip(&c) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }
}
