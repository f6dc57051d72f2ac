//! The irrotational swirl `(u, v) = (-y, x) / (x^2 + y^2)` on an annulus.
//!
//! Its vorticity vanishes while its gradient does not, so on a non-simply
//! connected domain the enstrophy does not control the H1 seminorm. All
//! derivatives are closed forms; finite differences appear only in checks.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusSpec {
    pub r1: f64,
    pub r2: f64,
    /// Radial intervals of the composite Simpson rule (even).
    pub n_r: usize,
    /// Equispaced angular nodes.
    pub n_theta: usize,
}

impl AnnulusSpec {
    pub fn new(r1: f64, r2: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite() && r1 > 0.0 && r2 > r1) {
            return Err(Error::InvalidConfig(format!("radii must satisfy 0 < R1 < R2, got {r1}, {r2}")));
        }
        if n_r < 8 || n_r % 2 != 0 {
            return Err(Error::InvalidConfig(format!("N_r must be an even integer >= 8, got {n_r}")));
        }
        if n_theta < 8 {
            return Err(Error::InvalidConfig(format!("N_theta must be at least 8, got {n_theta}")));
        }
        Ok(Self { r1, r2, n_r, n_theta })
    }

    /// Quadrature nodes `(x, y, weight)`: Simpson in `r` with the `r dr` Jacobian, rectangle in `theta`.
    pub fn nodes(&self) -> Vec<(f64, f64, f64)> {
        let h = (self.r2 - self.r1) / self.n_r as f64;
        let dtheta = 2.0 * PI / self.n_theta as f64;
        let mut out = Vec::with_capacity((self.n_r + 1) * self.n_theta);
        for i in 0..=self.n_r {
            let r = if i == self.n_r { self.r2 } else { self.r1 + i as f64 * h };
            let simpson = if i == 0 || i == self.n_r {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let w = simpson * h / 3.0 * r * dtheta;
            for k in 0..self.n_theta {
                let th = k as f64 * dtheta;
                out.push((r * th.cos(), r * th.sin(), w));
            }
        }
        out
    }

    /// Quadrature of `f(x, y)` over the annulus.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> Result<f64>) -> Result<f64> {
        let mut total = 0.0;
        for (x, y, w) in self.nodes() {
            total += w * f(x, y)?;
        }
        Ok(total)
    }
}

/// Value, gradient and Hessian of a planar velocity field at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityJet {
    pub u: f64,
    pub v: f64,
    pub ux: f64,
    pub uy: f64,
    pub vx: f64,
    pub vy: f64,
    pub uxx: f64,
    pub uxy: f64,
    pub uyy: f64,
    pub vxx: f64,
    pub vxy: f64,
    pub vyy: f64,
}

impl VelocityJet {
    pub fn vorticity(&self) -> f64 {
        self.vx - self.uy
    }

    pub fn gradient_sq(&self) -> f64 {
        self.ux * self.ux + self.uy * self.uy + self.vx * self.vx + self.vy * self.vy
    }

    /// `(u . grad) (u, v)`
    pub fn convective_acceleration(&self) -> (f64, f64) {
        (self.u * self.ux + self.v * self.uy, self.u * self.vx + self.v * self.vy)
    }

    /// Curl of the convective acceleration; zero iff it is locally a gradient.
    pub fn convective_curl(&self) -> f64 {
        let d_ay_dx = self.ux * self.vx + self.u * self.vxx + self.vx * self.vy + self.v * self.vxy;
        let d_ax_dy = self.uy * self.ux + self.u * self.uxy + self.vy * self.uy + self.v * self.uyy;
        d_ay_dx - d_ax_dy
    }
}

/// A velocity field with closed-form derivatives.
pub trait AnalyticField {
    fn jet(&self, x: f64, y: f64) -> Result<VelocityJet>;
}

/// The swirl `(-y, x) / r^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Swirl;

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl AnalyticField for ZeroField {
    fn jet(&self, _x: f64, _y: f64) -> Result<VelocityJet> {
        Ok(VelocityJet::default())
    }
}

impl AnalyticField for Swirl {
    fn jet(&self, x: f64, y: f64) -> Result<VelocityJet> {
        let r2 = x * x + y * y;
        if !(r2 > 0.0 && r2.is_finite()) {
            return Err(Error::Singular(x, y));
        }
        let r4 = r2 * r2;
        let r6 = r4 * r2;
        let d = y * y - x * x;
        Ok(VelocityJet {
            u: -y / r2,
            v: x / r2,
            ux: 2.0 * x * y / r4,
            uy: d / r4,
            vx: d / r4,
            vy: -2.0 * x * y / r4,
            uxx: 2.0 * y / r4 - 8.0 * x * x * y / r6,
            uxy: 2.0 * x / r4 - 8.0 * x * y * y / r6,
            uyy: 2.0 * y / r4 - 4.0 * y * d / r6,
            vxx: -2.0 * x / r4 - 4.0 * x * d / r6,
            vxy: 2.0 * y / r4 - 4.0 * y * d / r6,
            vyy: -2.0 * x / r4 + 8.0 * x * y * y / r6,
        })
    }
}

/// Velocity of the swirl at `(x, y)`; the origin is rejected.
pub fn pr_field(x: f64, y: f64) -> Result<(f64, f64)> {
    let j = Swirl.jet(x, y)?;
    Ok((j.u, j.v))
}

fn max_over_nodes(spec: &AnnulusSpec, field: &dyn AnalyticField, f: impl Fn(&VelocityJet) -> f64) -> Result<f64> {
    let mut m = 0.0_f64;
    for (x, y, _) in spec.nodes() {
        m = m.max(f(&field.jet(x, y)?).abs());
    }
    Ok(m)
}

/// Largest `|omega|` over the quadrature nodes.
pub fn vorticity_max(spec: &AnnulusSpec, field: &dyn AnalyticField) -> Result<f64> {
    max_over_nodes(spec, field, VelocityJet::vorticity)
}

pub fn enstrophy(spec: &AnnulusSpec, field: &dyn AnalyticField) -> Result<f64> {
    spec.integrate(|x, y| Ok(field.jet(x, y)?.vorticity().powi(2)))
}

pub fn h1_seminorm_sq(spec: &AnnulusSpec, field: &dyn AnalyticField) -> Result<f64> {
    spec.integrate(|x, y| Ok(field.jet(x, y)?.gradient_sq()))
}

/// Largest `|curl((u . grad) u)|` over the quadrature nodes.
pub fn steadiness_residual(spec: &AnnulusSpec, field: &dyn AnalyticField) -> Result<f64> {
    max_over_nodes(spec, field, VelocityJet::convective_curl)
}

pub fn pr_vorticity_check(spec: &AnnulusSpec) -> Result<f64> {
    vorticity_max(spec, &Swirl)
}

pub fn pr_enstrophy(spec: &AnnulusSpec) -> Result<f64> {
    enstrophy(spec, &Swirl)
}

pub fn pr_h1_seminorm_sq(spec: &AnnulusSpec) -> Result<f64> {
    h1_seminorm_sq(spec, &Swirl)
}

pub fn pr_steadiness_residual(spec: &AnnulusSpec) -> Result<f64> {
    steadiness_residual(spec, &Swirl)
}

/// `|grad v|^2 = 2 / r^4` integrated over the annulus.
pub fn pr_h1_closed_form(r1: f64, r2: f64) -> f64 {
    2.0 * PI * (r1.powi(-2) - r2.powi(-2))
}

/// Central-difference vorticity of the swirl with step `h`.
pub fn pr_fd_vorticity(x: f64, y: f64, h: f64) -> Result<f64> {
    let (_, vp) = pr_field(x + h, y)?;
    let (_, vm) = pr_field(x - h, y)?;
    let (up, _) = pr_field(x, y + h)?;
    let (um, _) = pr_field(x, y - h)?;
    Ok((vp - vm) / (2.0 * h) - (up - um) / (2.0 * h))
}

/// One row of the contrast table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastRow {
    pub r1: f64,
    pub r2: f64,
    pub enstrophy: f64,
    pub h1_seminorm_sq: f64,
    pub analytic: f64,
    pub rel_error: f64,
}

pub fn contrast_row(spec: &AnnulusSpec) -> Result<ContrastRow> {
    let h1 = pr_h1_seminorm_sq(spec)?;
    let analytic = pr_h1_closed_form(spec.r1, spec.r2);
    Ok(ContrastRow {
        r1: spec.r1,
        r2: spec.r2,
        enstrophy: pr_enstrophy(spec)?,
        h1_seminorm_sq: h1,
        analytic,
        rel_error: (h1 - analytic).abs() / analytic,
    })
}
