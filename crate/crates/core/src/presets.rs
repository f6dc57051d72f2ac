//! Initial conditions built from finite streamfunction series.
//!
//! Every preset is a sum of terms
//! `psi = (a cos(n alpha x) + b sin(n alpha x)) sin(k beta (y - y0))` with
//! `beta = pi / (y1 - y0)`, so the velocity `(d psi/dy, -d psi/dx)` is
//! divergence-free and has `v = 0` on both walls by construction.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dynamics::InitialCondition;
use crate::error::{Error, Result};
use crate::grid::{ChannelGrid, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamTerm {
    /// Stream-wise mode number.
    pub n: u32,
    /// Wall-normal mode number, at least 1.
    pub k: u32,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

/// A finite streamfunction series on a channel `[0, lx] x [y0, y1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSeries {
    pub lx: f64,
    pub y0: f64,
    pub y1: f64,
    pub terms: Vec<StreamTerm>,
}

impl StreamSeries {
    pub fn new(grid: &ChannelGrid) -> Self {
        Self { lx: grid.lx, y0: grid.a, y1: grid.b, terms: Vec::new() }
    }

    pub fn with_term(mut self, n: u32, k: u32, cos_coeff: f64, sin_coeff: f64) -> Self {
        assert!(k >= 1, "wall-normal mode must be positive");
        self.terms.push(StreamTerm { n, k, cos_coeff, sin_coeff });
        self
    }

    pub fn alpha(&self) -> f64 {
        2.0 * PI / self.lx
    }

    pub fn beta(&self) -> f64 {
        PI / (self.y1 - self.y0)
    }

    /// `(n alpha, k beta)` for a term.
    pub fn wavenumbers(&self, t: &StreamTerm) -> (f64, f64) {
        (t.n as f64 * self.alpha(), t.k as f64 * self.beta())
    }

    pub fn max_mode(&self) -> u32 {
        self.terms.iter().map(|t| t.n).max().unwrap_or(0)
    }

    fn eval(&self, x: f64, y: f64, f: impl Fn(&StreamTerm, f64, f64, f64, f64, f64, f64) -> f64) -> f64 {
        let yy = y - self.y0;
        self.terms
            .iter()
            .map(|t| {
                let (kx, ky) = self.wavenumbers(t);
                let (sx, cx) = (kx * x).sin_cos();
                let (sy, cy) = (ky * yy).sin_cos();
                f(t, kx, ky, sx, cx, sy, cy)
            })
            .sum()
    }

    pub fn psi(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y, |t, _, _, sx, cx, sy, _| (t.cos_coeff * cx + t.sin_coeff * sx) * sy)
    }

    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let u = self.eval(x, y, |t, _, ky, sx, cx, _, cy| ky * (t.cos_coeff * cx + t.sin_coeff * sx) * cy);
        let v = self.eval(x, y, |t, kx, _, sx, cx, sy, _| -kx * (-t.cos_coeff * sx + t.sin_coeff * cx) * sy);
        (u, v)
    }

    /// `-Laplacian(psi)`
    pub fn vorticity(&self, x: f64, y: f64) -> f64 {
        self.eval(x, y, |t, kx, ky, sx, cx, sy, _| (kx * kx + ky * ky) * (t.cos_coeff * cx + t.sin_coeff * sx) * sy)
    }

    pub fn sample_velocity(&self, grid: ChannelGrid) -> Result<VectorField> {
        VectorField::from_fn(grid, |x, y| self.velocity(x, y))
    }

    pub fn sample_vorticity(&self, grid: ChannelGrid) -> Result<ScalarField> {
        ScalarField::from_fn(grid, |x, y| self.vorticity(x, y))
    }

    pub fn sample_psi(&self, grid: ChannelGrid) -> Result<ScalarField> {
        ScalarField::from_fn(grid, |x, y| self.psi(x, y))
    }

    /// Stream-wise integral of `(a cos + b sin)^2` over one period.
    fn x_weight(&self, t: &StreamTerm) -> f64 {
        if t.n == 0 {
            self.lx * t.cos_coeff * t.cos_coeff
        } else {
            0.5 * self.lx * (t.cos_coeff * t.cos_coeff + t.sin_coeff * t.sin_coeff)
        }
    }

    /// Exact kinetic energy by orthogonality. Terms must have distinct `(n, k)`.
    pub fn energy(&self) -> f64 {
        let half_height = 0.5 * (self.y1 - self.y0);
        self.terms
            .iter()
            .map(|t| {
                let (kx, ky) = self.wavenumbers(t);
                (kx * kx + ky * ky) * self.x_weight(t) * half_height
            })
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.cos_coeff *= s;
            t.sin_coeff *= s;
        }
        out
    }

    /// Seeded random series with modes `0 <= n <= max_mode`, `1 <= k <= max_mode`
    /// and coefficients decaying like the inverse squared wavenumber, scaled so
    /// that the root-mean-square velocity equals `amplitude`.
    pub fn random(grid: &ChannelGrid, seed: u64, max_mode: u32, amplitude: f64) -> Result<Self> {
        if max_mode == 0 {
            return Err(Error::InvalidConfig("max_mode must be positive".into()));
        }
        if 2 * max_mode as usize >= grid.nx {
            return Err(Error::InvalidConfig(format!(
                "max_mode {max_mode} is not resolved by N_x = {}",
                grid.nx
            )));
        }
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::InvalidConfig(format!("amplitude must be positive, got {amplitude}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut series = Self::new(grid);
        for n in 0..=max_mode {
            for k in 1..=max_mode {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let kx = n as f64 * series.alpha();
                let ky = k as f64 * series.beta();
                let decay = 1.0 / (kx * kx + ky * ky);
                let b = if n == 0 { 0.0 } else { b };
                series.terms.push(StreamTerm { n, k, cos_coeff: a * decay, sin_coeff: b * decay });
            }
        }
        let rms = (series.energy() / grid.area()).sqrt();
        Ok(series.scaled(amplitude / rms))
    }

    /// Sum of two series on the same channel; coefficients of shared `(n, k)` are added.
    pub fn concat(mut self, other: &StreamSeries) -> Self {
        for t in &other.terms {
            match self.terms.iter_mut().find(|s| s.n == t.n && s.k == t.k) {
                Some(s) => {
                    s.cos_coeff += t.cos_coeff;
                    s.sin_coeff += t.sin_coeff;
                }
                None => self.terms.push(*t),
            }
        }
        self
    }
}

/// Named initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `u = cos(beta (y - a))`, `v = 0`: a steady parallel flow.
    Shear,
    /// `psi = sin(alpha x) sin(beta (y - a))`, steady since `omega` is proportional to `psi`.
    Eigenstate,
    /// The eigenstate carried by a uniform mean flow `c`.
    TravelingWave { c: f64 },
    Random { seed: u64, max_mode: u32, amplitude: f64 },
    /// Eigenstate plus a random series whose energy is `eps^2` times the eigenstate's.
    PerturbedEigenstate { eps: f64, seed: u64, max_mode: u32 },
}

impl Preset {
    /// Streamfunction series and mean flow of the preset.
    pub fn series(&self, grid: &ChannelGrid) -> Result<(StreamSeries, f64)> {
        let base = StreamSeries::new(grid);
        match *self {
            Preset::Shear => Ok((base.clone().with_term(0, 1, 1.0 / base.beta(), 0.0), 0.0)),
            Preset::Eigenstate => Ok((base.with_term(1, 1, 0.0, 1.0), 0.0)),
            Preset::TravelingWave { c } => {
                if !(c.is_finite() && c != 0.0) {
                    return Err(Error::InvalidConfig(format!("traveling wave speed must be non-zero, got {c}")));
                }
                Ok((base.with_term(1, 1, 0.0, 1.0), c))
            }
            Preset::Random { seed, max_mode, amplitude } => Ok((StreamSeries::random(grid, seed, max_mode, amplitude)?, 0.0)),
            Preset::PerturbedEigenstate { eps, seed, max_mode } => {
                if !(eps.is_finite() && eps >= 0.0) {
                    return Err(Error::InvalidConfig(format!("perturbation size must be non-negative, got {eps}")));
                }
                let eigen = base.with_term(1, 1, 0.0, 1.0);
                let noise = StreamSeries::random(grid, seed, max_mode, 1.0)?;
                let s = eps * (eigen.energy() / noise.energy()).sqrt();
                Ok((eigen.concat(&noise.scaled(s)), 0.0))
            }
        }
    }

    pub fn initial_condition(&self, grid: &ChannelGrid) -> Result<InitialCondition> {
        let (series, mean_u) = self.series(grid)?;
        Ok(InitialCondition::Vorticity { omega: series.sample_vorticity(*grid)?, mean_u })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::kinetic_energy;

    #[test]
    fn random_series_is_deterministic_and_normalized() {
        let g = ChannelGrid::reference(64, 65).unwrap();
        let a = StreamSeries::random(&g, 7, 4, 1.5).unwrap();
        let b = StreamSeries::random(&g, 7, 4, 1.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, StreamSeries::random(&g, 8, 4, 1.5).unwrap());
        let rms = (a.energy() / g.area()).sqrt();
        assert!((rms - 1.5).abs() < 1e-12);
        let sampled = kinetic_energy(&a.sample_velocity(g).unwrap());
        assert!((sampled - a.energy()).abs() / a.energy() < 1e-10);
    }

    #[test]
    fn walls_have_no_normal_velocity() {
        let g = ChannelGrid::new(3.0, -1.0, 0.5, 16, 17).unwrap();
        let s = StreamSeries::random(&g, 3, 3, 1.0).unwrap();
        for i in 0..g.nx {
            assert!(s.velocity(g.x(i), g.a).1.abs() < 1e-14);
            assert!(s.velocity(g.x(i), g.b).1.abs() < 1e-14);
        }
    }

    #[test]
    fn unresolved_modes_rejected() {
        let g = ChannelGrid::reference(8, 9).unwrap();
        assert!(StreamSeries::random(&g, 1, 4, 1.0).is_err());
        assert!(StreamSeries::random(&g, 1, 0, 1.0).is_err());
        assert!(Preset::TravelingWave { c: 0.0 }.series(&g).is_err());
    }

    #[test]
    fn shear_preset_profile() {
        let g = ChannelGrid::reference(8, 9).unwrap();
        let (s, m) = Preset::Shear.series(&g).unwrap();
        assert_eq!(m, 0.0);
        let (u, v) = s.velocity(0.3, 0.4);
        assert!((u - 0.4f64.cos()).abs() < 1e-15 && v == 0.0);
        assert!((s.vorticity(1.0, 0.4) - 0.4f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn perturbation_energy_ratio() {
        let g = ChannelGrid::reference(32, 33).unwrap();
        let (s, _) = Preset::PerturbedEigenstate { eps: 0.01, seed: 1, max_mode: 4 }.series(&g).unwrap();
        let eigen = StreamSeries::new(&g).with_term(1, 1, 0.0, 1.0);
        let pert = s.clone().concat(&eigen.scaled(-1.0));
        assert!(((pert.energy() / eigen.energy()).sqrt() - 0.01).abs() < 1e-12);
        let sampled = kinetic_energy(&s.sample_velocity(g).unwrap());
        assert!((sampled - s.energy()).abs() / s.energy() < 1e-10);
    }
}
