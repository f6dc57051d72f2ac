//! Differentiation, quadrature and L2 functionals on the channel grid.

use ndarray::{Array2, Axis, Zip};

use crate::error::Result;
use crate::grid::{ChannelGrid, ScalarField, VectorField};
use crate::spectral::{diff_y, to_physical, to_spectral};

/// Spectral derivative along the periodic direction. The Nyquist mode is dropped.
pub fn ddx(f: &ScalarField) -> Result<ScalarField> {
    Ok(to_physical(&to_spectral(f)?.ddx()))
}

/// Second-order finite-difference derivative across the channel.
pub fn ddy(f: &ScalarField) -> Result<ScalarField> {
    f.check_finite()?;
    let grid = *f.grid();
    let mut out = Array2::zeros(grid.shape());
    let h = grid.hy();
    for (src, dst) in f.values().axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        diff_y(src, dst, h);
    }
    ScalarField::new(grid, out)
}

/// Trapezoid weights across the channel (wall rows get half weight).
pub fn trapezoid_weights(grid: &ChannelGrid) -> Vec<f64> {
    let h = grid.hy();
    let mut w = vec![h; grid.ny];
    w[0] = 0.5 * h;
    w[grid.ny - 1] = 0.5 * h;
    w
}

/// Rectangle rule in x, composite trapezoid in y.
pub fn integrate(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let w = trapezoid_weights(grid);
    let row_sums = f.values().sum_axis(Axis(0));
    grid.hx() * row_sums.iter().zip(&w).map(|(s, w)| s * w).sum::<f64>()
}

/// Spatial average `(1 / |D|) * integral of f`.
pub fn mean(f: &ScalarField) -> f64 {
    integrate(f) / f.grid().area()
}

/// Quadrature of the pointwise product `f * g` without materialising it.
pub fn integrate_product(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.grid().ensure_same(g.grid())?;
    let grid = f.grid();
    let w = trapezoid_weights(grid);
    let mut total = 0.0;
    for (j, wj) in w.iter().enumerate() {
        let s: f64 = Zip::from(f.values().column(j)).and(g.values().column(j)).fold(0.0, |acc, &a, &b| acc + a * b);
        total += wj * s;
    }
    Ok(grid.hx() * total)
}

pub fn l2_inner(f: &VectorField, g: &VectorField) -> Result<f64> {
    f.grid().ensure_same(g.grid())?;
    Ok(integrate_product(&f.u, &g.u)? + integrate_product(&f.v, &g.v)?)
}

pub fn l2_norm(f: &VectorField) -> f64 {
    l2_inner(f, f).expect("same field").max(0.0).sqrt()
}

/// `||f - g||` in L2 of velocity.
pub fn l2_distance(f: &VectorField, g: &VectorField) -> Result<f64> {
    f.grid().ensure_same(g.grid())?;
    let grid = f.grid();
    let w = trapezoid_weights(grid);
    let mut total = 0.0;
    for (j, wj) in w.iter().enumerate() {
        let du = Zip::from(f.u.values().column(j))
            .and(g.u.values().column(j))
            .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b));
        let dv = Zip::from(f.v.values().column(j))
            .and(g.v.values().column(j))
            .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b));
        total += wj * (du + dv);
    }
    Ok((grid.hx() * total).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
        (e_coarse / e_fine).log2()
    }

    #[test]
    fn ddx_single_mode() {
        let g = ChannelGrid::reference(32, 9).unwrap();
        let alpha = g.alpha();
        let f = ScalarField::from_fn(g, |x, _| (alpha * x).sin()).unwrap();
        let d = ddx(&f).unwrap();
        let exact = ScalarField::from_fn(g, |x, _| alpha * (alpha * x).cos()).unwrap();
        assert!(d.sub(&exact).unwrap().max_abs() < 1e-12);
        assert!(ddx(&ScalarField::constant(g, 4.2)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn ddx_mode_three_with_profile() {
        let g = ChannelGrid::new(3.0, -1.0, 2.0, 24, 11).unwrap();
        let alpha = g.alpha();
        let f = ScalarField::from_fn(g, |x, y| (3.0 * alpha * x).sin() * (y * y + 1.0)).unwrap();
        let exact = ScalarField::from_fn(g, |x, y| 3.0 * alpha * (3.0 * alpha * x).cos() * (y * y + 1.0)).unwrap();
        assert!(ddx(&f).unwrap().sub(&exact).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn ddy_exact_on_linear_and_constant() {
        let g = ChannelGrid::new(1.0, 0.5, 2.5, 4, 7).unwrap();
        let f = ScalarField::from_fn(g, |_, y| y).unwrap();
        let d = ddy(&f).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(ddy(&ScalarField::constant(g, -3.0)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn ddy_second_order() {
        let errs: Vec<f64> = [33, 65, 129]
            .iter()
            .map(|&ny| {
                let g = ChannelGrid::new(1.0, 0.3, 1.8, 4, ny).unwrap();
                let k = PI / g.height();
                let f = ScalarField::from_fn(g, |_, y| (k * (y - g.a)).sin()).unwrap();
                let exact = ScalarField::from_fn(g, |_, y| k * (k * (y - g.a)).cos()).unwrap();
                ddy(&f).unwrap().sub(&exact).unwrap().max_abs()
            })
            .collect();
        for w in errs.windows(2) {
            let p = observed_order(w[0], w[1]);
            assert!((1.9..=2.1).contains(&p), "order {p}");
        }
    }

    #[test]
    fn integrate_constant_and_mode() {
        let g = ChannelGrid::reference(16, 17).unwrap();
        assert!((integrate(&ScalarField::constant(g, 1.0)) - 2.0 * PI * PI).abs() < 1e-12);
        let alpha = g.alpha();
        let f = ScalarField::from_fn(g, |x, _| (alpha * x).sin()).unwrap();
        assert!(integrate(&f).abs() < 1e-12);
    }

    #[test]
    fn integrate_cos_squared_second_order() {
        let target = PI * PI;
        let errs: Vec<f64> = [33, 65, 129]
            .iter()
            .map(|&ny| {
                let g = ChannelGrid::reference(8, ny).unwrap();
                let f = ScalarField::from_fn(g, |_, y| y.cos().powi(2)).unwrap();
                (integrate(&f) - target).abs()
            })
            .collect();
        // the trapezoid rule is exact for cos^2 over a full period; use an
        // integrand with non-matching end slopes to expose the order
        assert!(errs.iter().all(|e| *e < 1e-12));
        let errs: Vec<f64> = [33, 65, 129]
            .iter()
            .map(|&ny| {
                let g = ChannelGrid::new(2.0 * PI, 0.0, 1.0, 8, ny).unwrap();
                let f = ScalarField::from_fn(g, |_, y| y.exp()).unwrap();
                (integrate(&f) - 2.0 * PI * (1f64.exp() - 1.0)).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let p = observed_order(w[0], w[1]);
            assert!((1.9..=2.1).contains(&p), "order {p}");
        }
    }

    #[test]
    fn inner_product_of_cos_profile() {
        let g = ChannelGrid::reference(8, 65).unwrap();
        let f = VectorField::from_fn(g, |_, y| (y.cos(), 0.0)).unwrap();
        assert!((l2_inner(&f, &f).unwrap() - PI * PI).abs() < 1e-10);
        assert_eq!(l2_norm(&VectorField::zeros(g)), 0.0);
    }

    #[test]
    fn distance_matches_norm_of_difference() {
        let g = ChannelGrid::reference(8, 9).unwrap();
        let f = VectorField::from_fn(g, |x, y| (x.sin() * y, y.cos())).unwrap();
        let h = VectorField::from_fn(g, |x, y| (x.cos(), x * y)).unwrap();
        let d = l2_distance(&f, &h).unwrap();
        assert!((d - l2_norm(&f.sub(&h).unwrap())).abs() < 1e-12);
    }
}
