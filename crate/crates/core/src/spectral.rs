//! Fourier representation along the periodic direction.
//!
//! Normalization: for each wall-normal row `j`,
//!
//! ```text
//! f_n(y_j) = (1/N_x) sum_i f(x_i, y_j) exp(-i n alpha x_i),   n = 0..=N_x/2
//! f(x, y_j) = sum_{|n| <= N_x/2} f_n(y_j) exp(i n alpha x)
//! ```
//!
//! so `cos(alpha x)` has `f_1 = 1/2` and a constant `c` has `f_0 = c`. Only
//! non-negative `n` are stored; negative modes follow from Hermitian symmetry.
//! The discrete Parseval relation per row reads
//!
//! ```text
//! (1/N_x) sum_i f(x_i)^2 = sum_n w_n |f_n|^2,   w_0 = w_{N_x/2} = 1, otherwise w_n = 2.
//! ```

use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis};
use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::error::{Error, Result};
use crate::grid::{ChannelGrid, ScalarField};

struct Plans {
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

thread_local! {
    static PLANNER: RefCell<(RealFftPlanner<f64>, HashMap<usize, Arc<Plans>>)> =
        RefCell::new((RealFftPlanner::new(), HashMap::new()));
}

fn plans(n: usize) -> Arc<Plans> {
    PLANNER.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        if let Some(p) = cache.get(&n) {
            return p.clone();
        }
        let p = Arc::new(Plans { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) });
        cache.insert(n, p.clone());
        p
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: ChannelGrid,
    /// Shape `(N_x/2 + 1, N_y)`: mode index first, wall-normal index second.
    modes: Array2<Complex64>,
}

impl SpectralField {
    pub fn new(grid: ChannelGrid, modes: Array2<Complex64>) -> Result<Self> {
        let expected = (grid.n_modes(), grid.ny);
        if modes.dim() != expected {
            return Err(Error::ShapeMismatch { expected, got: modes.dim() });
        }
        Ok(Self { grid, modes })
    }

    pub fn zeros(grid: ChannelGrid) -> Self {
        Self { grid, modes: Array2::zeros((grid.n_modes(), grid.ny)) }
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    pub fn modes(&self) -> &Array2<Complex64> {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.modes
    }

    /// Parseval weight of stored mode `n`.
    pub fn mode_weight(&self, n: usize) -> f64 {
        if n == 0 || n == self.grid.nyquist() {
            1.0
        } else {
            2.0
        }
    }

    /// Keeps modes `n <= cutoff`.
    pub fn truncate_above(&self, cutoff: usize) -> Result<Self> {
        self.check_cutoff(cutoff)?;
        let mut out = self.clone();
        out.modes.axis_iter_mut(Axis(0)).skip(cutoff + 1).for_each(|mut row| row.fill(Complex64::ZERO));
        Ok(out)
    }

    /// Keeps modes `n > cutoff`.
    pub fn tail_above(&self, cutoff: usize) -> Result<Self> {
        self.check_cutoff(cutoff)?;
        let mut out = self.clone();
        out.modes.axis_iter_mut(Axis(0)).take(cutoff + 1).for_each(|mut row| row.fill(Complex64::ZERO));
        Ok(out)
    }

    fn check_cutoff(&self, cutoff: usize) -> Result<()> {
        let limit = self.grid.nyquist();
        if cutoff == 0 || cutoff >= limit {
            return Err(Error::ModeOutOfRange { cutoff, limit });
        }
        Ok(())
    }

    /// Zeroes every mode above `keep` in place (no range check).
    pub(crate) fn zero_above(&mut self, keep: usize) {
        self.modes.axis_iter_mut(Axis(0)).skip(keep + 1).for_each(|mut row| row.fill(Complex64::ZERO));
    }

    /// Spectral x-derivative: mode `n` times `i n alpha`, Nyquist set to zero.
    pub fn ddx(&self) -> Self {
        self.ddx_scaled(1.0)
    }

    /// `factor * d/dx` in one pass.
    pub(crate) fn ddx_scaled(&self, factor: f64) -> Self {
        let alpha = self.grid.alpha();
        let nyq = self.grid.nyquist();
        let mut out = self.clone();
        for (n, mut row) in out.modes.axis_iter_mut(Axis(0)).enumerate() {
            if n == nyq {
                row.fill(Complex64::ZERO);
            } else {
                let k = Complex64::new(0.0, factor * n as f64 * alpha);
                row.mapv_inplace(|c| c * k);
            }
        }
        out
    }

    /// Finite-difference y-derivative applied mode by mode.
    pub fn ddy(&self) -> Self {
        let h = self.grid.hy();
        let mut out = Self::zeros(self.grid);
        for (src, dst) in self.modes.axis_iter(Axis(0)).zip(out.modes.axis_iter_mut(Axis(0))) {
            diff_y(src, dst, h);
        }
        out
    }

    /// `d/dy` with the summation-by-parts stencil of [`diff_y_sbp`].
    pub(crate) fn ddy_sbp(&self) -> Self {
        let h = self.grid.hy();
        let mut out = Self::zeros(self.grid);
        for (src, dst) in self.modes.axis_iter(Axis(0)).zip(out.modes.axis_iter_mut(Axis(0))) {
            diff_y_sbp(src, dst, h);
        }
        out
    }
}

/// Summation-by-parts first derivative: centered in the interior, two-point at
/// both ends. With trapezoid weights `H` it satisfies `H D + (H D)^T = diag(-1, 0, ..., 0, 1)`.
pub(crate) fn diff_y_sbp<T>(src: ArrayView1<T>, mut dst: ArrayViewMut1<T>, h: f64)
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = src.len();
    debug_assert!(n >= 2 && dst.len() == n);
    let inv2h = 0.5 / h;
    dst[0] = (src[1] - src[0]) * (1.0 / h);
    for j in 1..n - 1 {
        dst[j] = (src[j + 1] - src[j - 1]) * inv2h;
    }
    dst[n - 1] = (src[n - 1] - src[n - 2]) * (1.0 / h);
}

/// Second-order first derivative on a uniform wall-inclusive grid: centered in
/// the interior, one-sided three-point at both ends.
pub(crate) fn diff_y<T>(src: ArrayView1<T>, mut dst: ArrayViewMut1<T>, h: f64)
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = src.len();
    debug_assert!(n >= 3 && dst.len() == n);
    let inv2h = 0.5 / h;
    dst[0] = (src[1] * 4.0 - src[0] * 3.0 - src[2]) * inv2h;
    for j in 1..n - 1 {
        dst[j] = (src[j + 1] - src[j - 1]) * inv2h;
    }
    dst[n - 1] = (src[n - 1] * 3.0 - src[n - 2] * 4.0 + src[n - 3]) * inv2h;
}

pub fn to_spectral(f: &ScalarField) -> Result<SpectralField> {
    f.check_finite()?;
    Ok(to_spectral_unchecked(f))
}

pub(crate) fn to_spectral_unchecked(f: &ScalarField) -> SpectralField {
    let grid = *f.grid();
    let p = plans(grid.nx);
    let mut input = p.forward.make_input_vec();
    let mut output = p.forward.make_output_vec();
    let mut scratch = p.forward.make_scratch_vec();
    let mut modes = Array2::zeros((grid.n_modes(), grid.ny));
    let norm = 1.0 / grid.nx as f64;
    for (col, mut out_col) in f.values().axis_iter(Axis(1)).zip(modes.axis_iter_mut(Axis(1))) {
        for (dst, &src) in input.iter_mut().zip(col.iter()) {
            *dst = src;
        }
        p.forward
            .process_with_scratch(&mut input, &mut output, &mut scratch)
            .expect("buffer sizes come from the plan");
        for (dst, src) in out_col.iter_mut().zip(output.iter()) {
            *dst = *src * norm;
        }
    }
    SpectralField { grid, modes }
}

/// Inverse of [`to_spectral`]. The imaginary parts of the mean and Nyquist
/// modes carry no information for a real field and are ignored.
pub fn to_physical(spec: &SpectralField) -> ScalarField {
    let grid = spec.grid;
    let p = plans(grid.nx);
    let mut input = p.inverse.make_input_vec();
    let mut output = p.inverse.make_output_vec();
    let mut scratch = p.inverse.make_scratch_vec();
    let mut values = Array2::zeros(grid.shape());
    let last = grid.nyquist();
    for (col, mut out_col) in spec.modes.axis_iter(Axis(1)).zip(values.axis_iter_mut(Axis(1))) {
        for (dst, &src) in input.iter_mut().zip(col.iter()) {
            *dst = src;
        }
        input[0].im = 0.0;
        input[last].im = 0.0;
        p.inverse
            .process_with_scratch(&mut input, &mut output, &mut scratch)
            .expect("Hermitian end modes were made real");
        for (dst, &src) in out_col.iter_mut().zip(output.iter()) {
            *dst = src;
        }
    }
    ScalarField::from_parts(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use proptest::prelude::*;

    fn grid() -> ChannelGrid {
        ChannelGrid::reference(16, 9).unwrap()
    }

    #[test]
    fn single_cosine_has_half_amplitude() {
        let g = grid();
        let alpha = g.alpha();
        let f = ScalarField::from_fn(g, |x, _| (alpha * x).cos()).unwrap();
        let s = to_spectral(&f).unwrap();
        for ((n, _), c) in s.modes().indexed_iter() {
            let expected = if n == 1 { 0.5 } else { 0.0 };
            assert!((c.re - expected).abs() < 1e-15 && c.im.abs() < 1e-15, "mode {n}: {c}");
        }
    }

    #[test]
    fn constant_lives_in_mean_mode() {
        let g = grid();
        let s = to_spectral(&ScalarField::constant(g, 3.0)).unwrap();
        for ((n, _), c) in s.modes().indexed_iter() {
            let expected = if n == 0 { 3.0 } else { 0.0 };
            assert!((c - Complex64::new(expected, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn non_finite_input_rejected() {
        let g = grid();
        let mut vals = Array2::zeros(g.shape());
        vals[[0, 0]] = f64::NAN;
        let f = ScalarField::from_parts(g, vals);
        assert!(matches!(to_spectral(&f), Err(Error::NonFinite(0, 0))));
    }

    #[test]
    fn cutoff_range_checked() {
        let s = SpectralField::zeros(grid());
        assert!(s.truncate_above(0).is_err());
        assert!(s.truncate_above(8).is_err());
        assert!(s.tail_above(7).is_ok());
    }

    #[test]
    fn single_mode_split() {
        let g = grid();
        let alpha = g.alpha();
        let f = ScalarField::from_fn(g, |x, y| (5.0 * alpha * x).sin() * y.sin()).unwrap();
        let s = to_spectral(&f).unwrap();
        let lo = to_physical(&s.truncate_above(4).unwrap());
        let hi = to_physical(&s.tail_above(4).unwrap());
        assert!(lo.max_abs() < 1e-14, "{}", lo.max_abs());
        assert!(hi.sub(&f).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn band_limited_field_has_no_tail() {
        let g = grid();
        let alpha = g.alpha();
        let f = ScalarField::from_fn(g, |x, y| (3.0 * alpha * x).cos() * y + (alpha * x).sin()).unwrap();
        let s = to_spectral(&f).unwrap();
        let tail = s.tail_above(g.nyquist() - 1).unwrap();
        assert!(to_physical(&tail).max_abs() < 1e-14);
    }

    #[test]
    fn diff_y_exact_on_quadratics() {
        let h = 0.1;
        let src = Array1::from_shape_fn(6, |j| {
            let y = j as f64 * h;
            2.0 * y * y - y + 1.0
        });
        let mut dst = Array1::zeros(6);
        diff_y(src.view(), dst.view_mut(), h);
        for j in 0..6 {
            let y = j as f64 * h;
            assert!((dst[j] - (4.0 * y - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sbp_stencil_is_exact_on_linears() {
        let src = Array1::from_shape_fn(5, |j| 3.0 - 0.5 * j as f64);
        let mut dst = Array1::zeros(5);
        diff_y_sbp(src.view(), dst.view_mut(), 0.25);
        assert!(dst.iter().all(|&d| (d + 2.0).abs() < 1e-14));
    }

    proptest! {
        #[test]
        fn sbp_summation_by_parts(f in prop::collection::vec(-1.0f64..1.0, 3..20), seed in any::<u64>(), h in 0.01f64..1.0) {
            let n = f.len();
            let g: Vec<f64> = (0..n).map(|j| ((seed.wrapping_mul(j as u64 + 7) % 1000) as f64 / 500.0) - 1.0).collect();
            let (f, g) = (Array1::from(f), Array1::from(g));
            let (mut df, mut dg) = (Array1::zeros(n), Array1::zeros(n));
            diff_y_sbp(f.view(), df.view_mut(), h);
            diff_y_sbp(g.view(), dg.view_mut(), h);
            let w = |j: usize| if j == 0 || j == n - 1 { 0.5 * h } else { h };
            let lhs: f64 = (0..n).map(|j| w(j) * (f[j] * dg[j] + g[j] * df[j])).sum();
            let rhs = f[n - 1] * g[n - 1] - f[0] * g[0];
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn round_trip_reproduces_field(seed in any::<u64>(), nx in 1usize..12, ny in 3usize..12) {
            let g = ChannelGrid::new(1.7, -0.3, 0.9, 2 * nx, ny).unwrap();
            let mut state = seed | 1;
            let f = ScalarField::from_fn(g, |_, _| {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                (state as f64 / u64::MAX as f64) * 2.0 - 1.0
            }).unwrap();
            let back = to_physical(&to_spectral(&f).unwrap());
            let scale = f.max_abs().max(f64::MIN_POSITIVE);
            prop_assert!(back.sub(&f).unwrap().max_abs() <= 1e-12 * scale);
        }

        #[test]
        fn parseval_per_row(seed in any::<u64>()) {
            let g = grid();
            let mut state = seed | 1;
            let f = ScalarField::from_fn(g, |_, _| {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                (state as f64 / u64::MAX as f64) - 0.5
            }).unwrap();
            let s = to_spectral(&f).unwrap();
            for j in 0..g.ny {
                let physical: f64 = f.values().column(j).iter().map(|v| v * v).sum::<f64>() / g.nx as f64;
                let modal: f64 = s.modes().column(j).iter().enumerate()
                    .map(|(n, c)| s.mode_weight(n) * c.norm_sqr()).sum();
                prop_assert!((physical - modal).abs() <= 1e-13 * physical.max(1e-300));
            }
        }
    }
}
