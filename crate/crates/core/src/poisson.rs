//! Per-mode Dirichlet Poisson solve: `psi'' - (n alpha)^2 psi = -omega`, `psi(a) = psi(b) = 0`.

use ndarray::Axis;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ChannelGrid, ScalarField};
use crate::spectral::{to_physical, to_spectral, SpectralField};

/// Thomas-algorithm factorization of the second-order tridiagonal operator for
/// every stored x-mode. The matrix only depends on the grid, so it is built once
/// and reused across time steps.
#[derive(Debug, Clone)]
pub struct PoissonSolver {
    grid: ChannelGrid,
    /// Per mode: modified super-diagonal `c'_j` and reciprocal pivots.
    upper: Vec<Vec<f64>>,
    inv_pivot: Vec<Vec<f64>>,
}

impl PoissonSolver {
    pub fn new(grid: ChannelGrid) -> Result<Self> {
        let m = grid.ny - 2;
        let h2 = grid.hy() * grid.hy();
        let alpha = grid.alpha();
        let mut upper = Vec::with_capacity(grid.n_modes());
        let mut inv_pivot = Vec::with_capacity(grid.n_modes());
        for n in 0..grid.n_modes() {
            let k = n as f64 * alpha;
            let diag = -(2.0 + k * k * h2);
            let mut c = vec![0.0; m];
            let mut ip = vec![0.0; m];
            let mut prev_c = 0.0;
            for j in 0..m {
                let pivot = diag - prev_c;
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(Error::SingularSystem(n));
                }
                ip[j] = 1.0 / pivot;
                c[j] = ip[j];
                prev_c = c[j];
            }
            upper.push(c);
            inv_pivot.push(ip);
        }
        Ok(Self { grid, upper, inv_pivot })
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    /// Solves every mode of `omega_hat`; wall rows of the result are exactly zero.
    pub fn solve_spectral(&self, omega_hat: &SpectralField) -> Result<SpectralField> {
        self.grid.ensure_same(omega_hat.grid())?;
        let ny = self.grid.ny;
        let h2 = self.grid.hy() * self.grid.hy();
        let mut psi = SpectralField::zeros(self.grid);
        let mut work = vec![Complex64::ZERO; ny - 2];
        for (n, (rhs, mut out)) in omega_hat
            .modes()
            .axis_iter(Axis(0))
            .zip(psi.modes_mut().axis_iter_mut(Axis(0)))
            .enumerate()
        {
            let c = &self.upper[n];
            let ip = &self.inv_pivot[n];
            // forward sweep; sub- and super-diagonals are 1
            let mut prev = Complex64::ZERO;
            for j in 0..ny - 2 {
                let d = -rhs[j + 1] * h2;
                prev = (d - prev) * ip[j];
                work[j] = prev;
            }
            for j in (0..ny - 3).rev() {
                work[j] = work[j] - c[j] * work[j + 1];
            }
            out[0] = Complex64::ZERO;
            out[ny - 1] = Complex64::ZERO;
            for j in 0..ny - 2 {
                out[j + 1] = work[j];
            }
        }
        Ok(psi)
    }
}

/// Streamfunction with `Laplacian(psi) = -omega` and `psi = 0` on both walls.
pub fn poisson_solve(omega: &ScalarField) -> Result<ScalarField> {
    let solver = PoissonSolver::new(*omega.grid())?;
    let psi_hat = solver.solve_spectral(&to_spectral(omega)?)?;
    let mut psi = to_physical(&psi_hat);
    zero_walls(&mut psi);
    Ok(psi)
}

/// Writes exact zeros into both wall rows.
pub(crate) fn zero_walls(f: &mut ScalarField) {
    let ny = f.grid().ny;
    let mut values = std::mem::replace(f, ScalarField::zeros(*f.grid())).into_values();
    values.column_mut(0).fill(0.0);
    values.column_mut(ny - 1).fill(0.0);
    *f = ScalarField::from_parts(*f.grid(), values);
}
