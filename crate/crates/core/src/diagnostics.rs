//! Conserved quantities and identity checks: kinetic energy, enstrophy, the
//! gradient/enstrophy identity for divergence-free wall-bounded fields, and the
//! stream-wise tail estimate behind the compactness argument.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::ops::{ddx, ddy, integrate_product, l2_norm, mean};
use crate::spectral::to_spectral;

/// Floor used when dividing by the enstrophy.
pub const ENSTROPHY_FLOOR: f64 = 1e-300;

/// Relative divergence or wall-normal wall velocity above which a field is
/// flagged as violating the hypotheses of the identity check.
pub const HYPOTHESIS_TOLERANCE: f64 = 1e-2;

/// Relative slack allowed for rounding in [`tail_bound_check`].
pub const TAIL_SLACK: f64 = 1e-12;

pub fn kinetic_energy(vel: &VectorField) -> f64 {
    integrate_product(&vel.u, &vel.u).unwrap() + integrate_product(&vel.v, &vel.v).unwrap()
}

/// `omega = dv/dx - du/dy`
pub fn vorticity(vel: &VectorField) -> Result<ScalarField> {
    ddx(&vel.v)?.sub(&ddy(&vel.u)?)
}

pub fn enstrophy(vel: &VectorField) -> Result<f64> {
    Ok(enstrophy_from_omega(&vorticity(vel)?))
}

pub fn enstrophy_from_omega(omega: &ScalarField) -> f64 {
    integrate_product(omega, omega).unwrap()
}

/// Quadrature of `(du/dx)^2 + (du/dy)^2 + (dv/dx)^2 + (dv/dy)^2`.
pub fn h1_seminorm_sq(vel: &VectorField) -> Result<f64> {
    let mut total = 0.0;
    for f in [&vel.u, &vel.v] {
        let dx = ddx(f)?;
        let dy = ddy(f)?;
        total += integrate_product(&dx, &dx)? + integrate_product(&dy, &dy)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Check {
    pub h1_seminorm_sq: f64,
    pub enstrophy: f64,
    /// `|h1 - G| / max(G, floor)`
    pub residual: f64,
    /// `||div v|| / ||grad v||`
    pub relative_divergence: f64,
    /// `max |v|` on the wall rows relative to `max |v|` overall.
    pub relative_wall_velocity: f64,
    /// Set when the field measurably violates incompressibility or non-penetration.
    pub warning: Option<String>,
}

impl Lemma1Check {
    pub fn hypotheses_hold(&self) -> bool {
        self.warning.is_none()
    }
}

pub fn relative_residual(h1: f64, g: f64) -> f64 {
    (h1 - g).abs() / g.max(ENSTROPHY_FLOOR)
}

/// Compares the H1 seminorm with the enstrophy. The identity only holds for
/// divergence-free fields with `v = 0` on the walls; violations are reported in
/// [`Lemma1Check::warning`] rather than as errors.
pub fn lemma1_check(vel: &VectorField) -> Result<Lemma1Check> {
    let grid = *vel.grid();
    let ux = ddx(&vel.u)?;
    let uy = ddy(&vel.u)?;
    let vx = ddx(&vel.v)?;
    let vy = ddy(&vel.v)?;
    let h1 = integrate_product(&ux, &ux)?
        + integrate_product(&uy, &uy)?
        + integrate_product(&vx, &vx)?
        + integrate_product(&vy, &vy)?;
    let omega = vx.sub(&uy)?;
    let g = enstrophy_from_omega(&omega);
    let div = ux.add(&vy)?;
    let relative_divergence = integrate_product(&div, &div)?.sqrt() / h1.sqrt().max(ENSTROPHY_FLOOR);

    let vmax = vel.v.max_abs();
    let wall = vel
        .v
        .values()
        .column(0)
        .iter()
        .chain(vel.v.values().column(grid.ny - 1).iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let relative_wall_velocity = if vmax > 0.0 { wall / vmax } else { 0.0 };

    let mut problems = Vec::new();
    if relative_divergence > HYPOTHESIS_TOLERANCE {
        problems.push(format!("relative divergence {relative_divergence:.3e}"));
    }
    if relative_wall_velocity > HYPOTHESIS_TOLERANCE {
        problems.push(format!("relative wall-normal wall velocity {relative_wall_velocity:.3e}"));
    }
    let warning = if problems.is_empty() {
        None
    } else {
        Some(format!("identity hypotheses violated: {}", problems.join(", ")))
    };
    Ok(Lemma1Check {
        h1_seminorm_sq: h1,
        enstrophy: g,
        residual: relative_residual(h1, g),
        relative_divergence,
        relative_wall_velocity,
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `||P_{>N} v||^2 <= (alpha N)^{-2} ||d/dx v||^2` in mode arithmetic.
///
/// Both sides are evaluated from the x-Fourier coefficients with the engine's
/// y-quadrature, so the inequality holds mode by mode. The derivative energy
/// counts the Nyquist mode at its own wavenumber `N_x/2 * alpha`.
pub fn tail_bound_check(vel: &VectorField, cutoff: usize) -> Result<TailBound> {
    let grid = *vel.grid();
    let limit = grid.nyquist();
    if cutoff == 0 || cutoff >= limit {
        return Err(Error::ModeOutOfRange { cutoff, limit });
    }
    let alpha = grid.alpha();
    let w = crate::ops::trapezoid_weights(&grid);
    let mut lhs = 0.0;
    let mut deriv = 0.0;
    for comp in [&vel.u, &vel.v] {
        let s = to_spectral(comp)?;
        for (n, row) in s.modes().outer_iter().enumerate() {
            let k = n as f64 * alpha;
            let row_energy: f64 = row.iter().zip(&w).map(|(c, wj)| wj * c.norm_sqr()).sum();
            let e = grid.lx * s.mode_weight(n) * row_energy;
            deriv += k * k * e;
            if n > cutoff {
                lhs += e;
            }
        }
    }
    let kn = alpha * cutoff as f64;
    let rhs = deriv / (kn * kn);
    let holds = lhs <= rhs * (1.0 + TAIL_SLACK);
    Ok(TailBound { lhs, rhs, holds })
}

/// One row of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub mean_u: f64,
    pub mean_v: f64,
    pub lemma1_residual: f64,
    pub h1_seminorm_sq: f64,
}

impl DiagnosticsRecord {
    /// `vel` is the reduced (zero-mean) velocity; `mean_u` the separately stored
    /// mean flow, added to the re-measured mean of `vel.u`. The enstrophy is
    /// taken from `omega` directly.
    pub fn measure(t: f64, omega: &ScalarField, vel: &VectorField, mean_u: f64) -> Result<Self> {
        let lemma = lemma1_check(vel)?;
        Ok(Self {
            t,
            energy: kinetic_energy(vel),
            enstrophy: enstrophy_from_omega(omega),
            mean_u: mean_u + mean(&vel.u),
            mean_v: mean(&vel.v),
            lemma1_residual: lemma.residual,
            h1_seminorm_sq: lemma.h1_seminorm_sq,
        })
    }

    pub fn is_valid(&self) -> bool {
        let vals = [self.t, self.energy, self.enstrophy, self.mean_u, self.mean_v, self.lemma1_residual, self.h1_seminorm_sq];
        vals.iter().all(|v| v.is_finite()) && self.energy >= 0.0 && self.enstrophy >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationSummary {
    pub energy_drift: f64,
    pub enstrophy_drift: f64,
    /// Measured against `max(|mean_u(0)|, 1)`.
    pub mean_u_drift: f64,
    pub max_abs_mean_v: f64,
}

fn rel(x: f64, x0: f64) -> f64 {
    if x0 == 0.0 {
        x.abs()
    } else {
        ((x - x0) / x0).abs()
    }
}

/// Largest drifts of every record relative to the first one.
pub fn conservation_report(records: &[DiagnosticsRecord]) -> Result<ConservationSummary> {
    let first = records.first().ok_or(Error::Empty("diagnostics records"))?;
    let mean_scale = first.mean_u.abs().max(1.0);
    let mut s = ConservationSummary { energy_drift: 0.0, enstrophy_drift: 0.0, mean_u_drift: 0.0, max_abs_mean_v: 0.0 };
    for r in records {
        s.energy_drift = s.energy_drift.max(rel(r.energy, first.energy));
        s.enstrophy_drift = s.enstrophy_drift.max(rel(r.enstrophy, first.enstrophy));
        s.mean_u_drift = s.mean_u_drift.max((r.mean_u - first.mean_u).abs() / mean_scale);
        s.max_abs_mean_v = s.max_abs_mean_v.max(r.mean_v.abs());
    }
    Ok(s)
}

/// Root-mean-square velocity `sqrt(E / |D|)`.
pub fn rms_velocity(vel: &VectorField) -> f64 {
    l2_norm(vel) / vel.grid().area().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelGrid;
    use std::f64::consts::PI;

    #[test]
    fn shear_profile_energy_and_enstrophy() {
        let g = ChannelGrid::reference(8, 129).unwrap();
        let vel = VectorField::from_fn(g, |_, y| (y.cos(), 0.0)).unwrap();
        assert!((kinetic_energy(&vel) - PI * PI).abs() < 1e-10);
        let g_val = enstrophy(&vel).unwrap();
        assert!((g_val - PI * PI).abs() / (PI * PI) < 1e-3);
        let h1 = h1_seminorm_sq(&vel).unwrap();
        assert!((h1 - g_val).abs() < 1e-12);
    }

    #[test]
    fn zero_and_uniform_fields() {
        let g = ChannelGrid::reference(8, 9).unwrap();
        let zero = VectorField::zeros(g);
        assert_eq!(kinetic_energy(&zero), 0.0);
        assert_eq!(h1_seminorm_sq(&zero).unwrap(), 0.0);
        let uniform = VectorField::from_fn(g, |_, _| (2.5, 0.0)).unwrap();
        assert!(enstrophy(&uniform).unwrap() < 1e-24);
    }

    #[test]
    fn quadratic_homogeneity() {
        let g = ChannelGrid::reference(16, 17).unwrap();
        let vel = VectorField::from_fn(g, |x, y| (x.sin() * y.cos(), -x.cos() * y.sin())).unwrap();
        let e = kinetic_energy(&vel);
        let s = 3.0;
        let scaled = vel.scale(s);
        assert!((kinetic_energy(&scaled) - 9.0 * e).abs() <= 1e-13 * e);
        let g0 = enstrophy(&vel).unwrap();
        assert!((enstrophy(&scaled).unwrap() - 9.0 * g0).abs() <= 1e-13 * g0);
    }

    #[test]
    fn hypothesis_violation_is_flagged_not_failed() {
        let g = ChannelGrid::reference(16, 33).unwrap();
        let vel = VectorField::from_fn(g, |x, y| (y.cos(), y.sin() * x.sin() + 0.3)).unwrap();
        let check = lemma1_check(&vel).unwrap();
        assert!(check.warning.is_some());
        assert!(check.residual > 0.1);
    }

    #[test]
    fn single_mode_tail() {
        let g = ChannelGrid::reference(32, 17).unwrap();
        let n = 4;
        let vel = VectorField::from_fn(g, |x, y| (((n + 1) as f64 * x).cos() * y.sin(), 0.0)).unwrap();
        let tb = tail_bound_check(&vel, n).unwrap();
        let norm2 = kinetic_energy(&vel);
        assert!((tb.lhs - norm2).abs() <= 1e-12 * norm2);
        let ratio = ((n + 1) as f64 / n as f64).powi(2);
        assert!((tb.rhs - ratio * norm2).abs() <= 1e-12 * norm2);
        assert!(tb.holds);
    }

    #[test]
    fn band_limited_has_empty_tail() {
        let g = ChannelGrid::reference(32, 17).unwrap();
        let vel = VectorField::from_fn(g, |x, y| ((3.0 * x).cos() * y.sin(), x.sin())).unwrap();
        let tb = tail_bound_check(&vel, 3).unwrap();
        assert!(tb.lhs < 1e-25);
        assert!(tb.holds);
        assert!(tail_bound_check(&vel, 16).is_err());
    }

    #[test]
    fn conservation_report_basics() {
        assert!(conservation_report(&[]).is_err());
        let r = DiagnosticsRecord {
            t: 0.0,
            energy: 2.0,
            enstrophy: 3.0,
            mean_u: 0.5,
            mean_v: 0.0,
            lemma1_residual: 0.0,
            h1_seminorm_sq: 3.0,
        };
        let s = conservation_report(&[r]).unwrap();
        assert_eq!((s.energy_drift, s.enstrophy_drift, s.mean_u_drift, s.max_abs_mean_v), (0.0, 0.0, 0.0, 0.0));
        let r2 = DiagnosticsRecord { t: 1.0, energy: 2.2, enstrophy: 2.7, mean_v: -1e-3, ..r };
        let s = conservation_report(&[r, r2]).unwrap();
        assert!((s.energy_drift - 0.1).abs() < 1e-12);
        assert!((s.enstrophy_drift - 0.1).abs() < 1e-12);
        assert_eq!(s.max_abs_mean_v, 1e-3);
    }
}
