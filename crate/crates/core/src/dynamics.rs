//! Vorticity-streamfunction time integration of the inviscid channel flow.
//!
//! The state is the vorticity on the collocation grid together with the
//! conserved mean stream-wise velocity, which is removed from the velocity
//! field up front and carried as a scalar. The advection of vorticity by
//! `(u + mean_u, v)` is evaluated pseudo-spectrally in x (optionally with
//! 2/3-rule dealiasing) and with second-order finite differences in y, in
//! convective or Arakawa form, and advanced with classical RK4.

use ndarray::{Array2, Axis, Zip};

use crate::diagnostics::{enstrophy_from_omega, vorticity, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{ChannelGrid, ScalarField, VectorField};
use crate::ops::{mean, trapezoid_weights};
use crate::poisson::{zero_walls, PoissonSolver};
use crate::spectral::{diff_y_sbp, to_physical, to_spectral, to_spectral_unchecked, SpectralField};

pub const DEFAULT_CFL: f64 = 0.4;

/// Runs abort when the enstrophy exceeds this multiple of its initial value.
pub const ENSTROPHY_BLOWUP_FACTOR: f64 = 4.0;

/// Discretization of the nonlinear term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Advection {
    /// `u . grad(omega)`.
    Convective,
    /// Average of the three Arakawa forms of the Jacobian `J(psi, omega)`:
    /// advective, divergence of `omega` times the velocity, and divergence of
    /// `psi` times the rotated vorticity gradient. Its y-derivatives use the
    /// summation-by-parts stencil, so summed against `psi` or `omega` with
    /// trapezoid weights it cancels exactly, and it vanishes whenever `omega`
    /// is a multiple of `psi`.
    #[default]
    Arakawa,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Safety factor for the advective step bound; ignored when `fixed_dt` is set.
    pub cfl: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub advection: Advection,
    pub fixed_dt: Option<f64>,
    /// Diagnostics are recorded every this many steps.
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: DEFAULT_CFL,
            t_end: 0.0,
            dealias: true,
            advection: Advection::default(),
            fixed_dt: None,
            record_every: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fixed_dt.is_none() && !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::InvalidConfig(format!("fixed_dt must be positive, got {dt}")));
            }
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!("t_end must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub omega: ScalarField,
    pub mean_u: f64,
}

impl State {
    pub fn new(t: f64, omega: ScalarField, mean_u: f64) -> Self {
        Self { t, omega, mean_u }
    }

    /// The time-reversed state: vorticity and mean flow change sign.
    pub fn reversed(&self) -> Self {
        Self { t: self.t, omega: self.omega.scale(-1.0), mean_u: -self.mean_u }
    }
}

/// Initial data for [`EulerSolver::run`].
#[derive(Debug, Clone)]
pub enum InitialCondition {
    /// A velocity field; its mean stream-wise velocity is split off and the curl taken.
    Velocity(VectorField),
    Vorticity { omega: ScalarField, mean_u: f64 },
}

impl InitialCondition {
    pub fn grid(&self) -> &ChannelGrid {
        match self {
            InitialCondition::Velocity(v) => v.grid(),
            InitialCondition::Vorticity { omega, .. } => omega.grid(),
        }
    }
}

/// Receives diagnostics rows and sampled states while a run progresses.
pub trait RunObserver {
    fn record(&mut self, _record: &DiagnosticsRecord) {}
    /// Called at each requested sample time with the reduced velocity.
    fn sample(&mut self, _index: usize, _state: &State, _velocity: &VectorField) {}
}

impl RunObserver for () {}

/// Collects diagnostics rows in memory.
#[derive(Debug, Default, Clone)]
pub struct RecordLog {
    pub records: Vec<DiagnosticsRecord>,
}

impl RunObserver for RecordLog {
    fn record(&mut self, record: &DiagnosticsRecord) {
        self.records.push(*record);
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("run aborted at t = {}: {error}", .last.t)]
pub struct RunAbort {
    /// Last state that passed the health checks.
    pub last: State,
    pub error: Error,
}

/// Splits off the mean stream-wise velocity: returns `(u - <u>, v)` and `<u>`.
pub fn galilean_reduce(vel: &VectorField) -> (VectorField, f64) {
    let m = mean(&vel.u);
    let u = vel.u.map(|x| x - m);
    (VectorField::new(u, vel.v.clone()).expect("same grid"), m)
}

/// Velocity of the zero-flux streamfunction: `u = d(psi)/dy - c`, `v = -d(psi)/dx`.
///
/// `c` is the trapezoid mean of `d(psi)/dy` so that the measured mean of `u` is
/// zero to rounding; it vanishes at the rate of the y-discretization.
pub fn velocity_from_vorticity(omega: &ScalarField) -> Result<VectorField> {
    let solver = PoissonSolver::new(*omega.grid())?;
    let (u_hat, v_hat) = velocity_spectral(&solver, &to_spectral(omega)?)?;
    Ok(velocity_physical(&u_hat, &v_hat))
}

fn velocity_spectral(poisson: &PoissonSolver, omega_hat: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let psi_hat = poisson.solve_spectral(omega_hat)?;
    let mut u_hat = psi_hat.ddy();
    let c = flux_shift(&u_hat);
    u_hat.modes_mut().row_mut(0).mapv_inplace(|z| z - c);
    let v_hat = psi_hat.ddx_scaled(-1.0);
    Ok((u_hat, v_hat))
}

fn velocity_physical(u_hat: &SpectralField, v_hat: &SpectralField) -> VectorField {
    let u = to_physical(u_hat);
    let mut v = to_physical(v_hat);
    zero_walls(&mut v);
    VectorField::new(u, v).expect("same grid")
}

/// Trapezoid mean of the zero x-mode of `d(psi)/dy`.
fn flux_shift(psi_y_hat: &SpectralField) -> f64 {
    let grid = *psi_y_hat.grid();
    let w = trapezoid_weights(&grid);
    let row = psi_y_hat.modes().row(0);
    row.iter().zip(&w).map(|(z, w)| z.re * w).sum::<f64>() / grid.height()
}

/// Highest x-mode retained by the 2/3 rule.
pub fn dealias_cutoff(grid: &ChannelGrid) -> usize {
    (grid.nx - 1) / 3
}

/// Vorticity tendency for `state` under the kernel options of `config`.
pub fn rhs(state: &State, config: &SolverConfig) -> Result<ScalarField> {
    let solver = PoissonSolver::new(*state.omega.grid())?;
    state.omega.check_finite()?;
    Ok(tendency(&solver, &state.omega, state.mean_u, config, false)?.0)
}

/// Returns the tendency and, if requested, `max(|u + mean_u| + |v|)` of the
/// undealiased velocity.
fn tendency(
    poisson: &PoissonSolver,
    omega: &ScalarField,
    mean_u: f64,
    config: &SolverConfig,
    want_speed: bool,
) -> Result<(ScalarField, f64)> {
    let grid = *omega.grid();
    let omega_hat = to_spectral_unchecked(omega);
    let psi_hat = poisson.solve_spectral(&omega_hat)?;
    let speed = if want_speed {
        let (u_hat, v_hat) = velocity_spectral(poisson, &omega_hat)?;
        velocity_physical(&u_hat, &v_hat).max_speed(mean_u)
    } else {
        0.0
    };
    // Arakawa pairs every y-derivative with the summation-by-parts stencil so the
    // discrete energy and enstrophy brackets cancel exactly, walls included.
    let (py_hat, wy_hat) = match config.advection {
        Advection::Convective => (psi_hat.ddy(), omega_hat.ddy()),
        Advection::Arakawa => (psi_hat.ddy_sbp(), omega_hat.ddy_sbp()),
    };
    // The advecting velocity is (d(psi)/dy + shift, -d(psi)/dx).
    let shift = mean_u - flux_shift(&py_hat);
    let keep = dealias_cutoff(&grid);
    let mut hats = [psi_hat.ddx(), py_hat, omega_hat.ddx(), wy_hat, psi_hat, omega_hat];
    if config.dealias {
        for f in hats.iter_mut() {
            f.zero_above(keep);
        }
    }
    let [px, py, wx, wy, psi, w] = hats.map(|f| to_physical(&f).into_values());
    let mut out = Array2::zeros(grid.shape());
    match config.advection {
        Advection::Convective => {
            Zip::from(&mut out)
                .and(&px)
                .and(&py)
                .and(&wx)
                .and(&wy)
                .for_each(|o, &px, &py, &wx, &wy| *o = -((py + shift) * wx - px * wy));
        }
        Advection::Arakawa => {
            // Flux of the divergence terms, combined before differencing.
            let mut fx = Array2::zeros(grid.shape());
            Zip::from(&mut fx)
                .and(&w)
                .and(&py)
                .and(&psi)
                .and(&wy)
                .for_each(|f, &w, &py, &psi, &wy| *f = w * py - psi * wy);
            let mut fy = Array2::zeros(grid.shape());
            Zip::from(&mut fy)
                .and(&psi)
                .and(&wx)
                .and(&w)
                .and(&px)
                .for_each(|f, &psi, &wx, &w, &px| *f = psi * wx - w * px);
            let dfx = to_physical(&to_spectral_unchecked(&ScalarField::from_parts(grid, fx)).ddx()).into_values();
            let h = grid.hy();
            for (src, dst) in fy.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
                diff_y_sbp(src, dst, h);
            }
            Zip::from(&mut out)
                .and(&dfx)
                .and(&px)
                .and(&py)
                .and(&wx)
                .and(&wy)
                .for_each(|o, &dfx, &px, &py, &wx, &wy| {
                    *o = -((py * wx - px * wy + dfx + *o) / 3.0 + shift * wx);
                });
        }
    }
    let mut out = ScalarField::from_parts(grid, out);
    if config.dealias {
        let mut hat = to_spectral_unchecked(&out);
        hat.zero_above(keep);
        out = to_physical(&hat);
    }
    Ok((out, speed))
}

/// Time integrator bound to one grid and configuration.
#[derive(Debug, Clone)]
pub struct EulerSolver {
    grid: ChannelGrid,
    config: SolverConfig,
    poisson: PoissonSolver,
}

impl EulerSolver {
    pub fn new(grid: ChannelGrid, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { grid, config, poisson: PoissonSolver::new(grid)? })
    }

    pub fn grid(&self) -> &ChannelGrid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn velocity(&self, omega: &ScalarField) -> Result<VectorField> {
        self.grid.ensure_same(omega.grid())?;
        let (u_hat, v_hat) = velocity_spectral(&self.poisson, &to_spectral(omega)?)?;
        Ok(velocity_physical(&u_hat, &v_hat))
    }

    pub fn rhs(&self, state: &State) -> Result<ScalarField> {
        self.grid.ensure_same(state.omega.grid())?;
        Ok(tendency(&self.poisson, &state.omega, state.mean_u, &self.config, false)?.0)
    }

    fn cfl_bound_from_speed(&self, speed: f64) -> f64 {
        let h = self.grid.hx().min(self.grid.hy());
        if speed > 0.0 {
            self.config.cfl * h / speed
        } else {
            f64::INFINITY
        }
    }

    /// Largest admissible step for `state`; `fixed_dt` when configured.
    pub fn max_dt(&self, state: &State) -> Result<f64> {
        if let Some(dt) = self.config.fixed_dt {
            return Ok(dt);
        }
        let vel = self.velocity(&state.omega)?;
        Ok(self.cfl_bound_from_speed(vel.max_speed(state.mean_u)))
    }

    /// One RK4 step of size `dt`.
    pub fn step(&self, state: &State, dt: f64) -> Result<State> {
        self.grid.ensure_same(state.omega.grid())?;
        let (k1, speed) = tendency(&self.poisson, &state.omega, state.mean_u, &self.config, true)?;
        self.check_dt(dt, speed)?;
        self.finish_step(state, dt, k1)
    }

    fn check_dt(&self, dt: f64, speed: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidTimeStep(dt));
        }
        if self.config.fixed_dt.is_none() {
            let bound = self.cfl_bound_from_speed(speed);
            if dt > bound * (1.0 + 1e-12) {
                return Err(Error::CflViolation { dt, bound });
            }
        }
        Ok(())
    }

    fn finish_step(&self, state: &State, dt: f64, k1: ScalarField) -> Result<State> {
        let cfg = &self.config;
        let m = state.mean_u;
        let w = &state.omega;
        let k2 = tendency(&self.poisson, &w.axpy(0.5 * dt, &k1)?, m, cfg, false)?.0;
        let k3 = tendency(&self.poisson, &w.axpy(0.5 * dt, &k2)?, m, cfg, false)?.0;
        let k4 = tendency(&self.poisson, &w.axpy(dt, &k3)?, m, cfg, false)?.0;
        let mut next = w.values().clone();
        Zip::from(&mut next)
            .and(k1.values())
            .and(k2.values())
            .and(k3.values())
            .and(k4.values())
            .for_each(|o, &a, &b, &c, &d| *o += dt / 6.0 * (a + 2.0 * b + 2.0 * c + d));
        let t = state.t + dt;
        let omega = ScalarField::new(self.grid, next)
            .map_err(|e| Error::BlowUp { t, reason: format!("non-finite vorticity ({e})") })?;
        Ok(State { t, omega, mean_u: m })
    }

    /// Converts initial data to a reduced state.
    pub fn initial_state(&self, initial: &InitialCondition) -> Result<State> {
        self.grid.ensure_same(initial.grid())?;
        match initial {
            InitialCondition::Velocity(vel) => {
                if !vel.is_finite() {
                    return Err(Error::InvalidConfig("initial velocity is not finite".into()));
                }
                let (reduced, m) = galilean_reduce(vel);
                Ok(State::new(0.0, vorticity(&reduced)?, m))
            }
            InitialCondition::Vorticity { omega, mean_u } => {
                omega.check_finite()?;
                Ok(State::new(0.0, omega.clone(), *mean_u))
            }
        }
    }

    /// Integrates from `initial` to `t_end`, landing exactly on every time in
    /// `sample_times` (sorted, within `[0, t_end]`).
    pub fn run(
        &self,
        initial: &InitialCondition,
        sample_times: &[f64],
        observer: &mut dyn RunObserver,
    ) -> std::result::Result<State, RunAbort> {
        let state = self.initial_state(initial).map_err(|error| RunAbort {
            last: State::new(0.0, ScalarField::zeros(self.grid), 0.0),
            error,
        })?;
        self.run_from(state, sample_times, observer)
    }

    pub fn run_from(
        &self,
        mut state: State,
        sample_times: &[f64],
        observer: &mut dyn RunObserver,
    ) -> std::result::Result<State, RunAbort> {
        let t_end = self.config.t_end;
        let t0 = state.t;
        let abort = |last: &State, error: Error| RunAbort { last: last.clone(), error };
        if sample_times.windows(2).any(|w| w[1] <= w[0])
            || sample_times.iter().any(|&s| !(s >= t0 && s <= t_end + 1e-12 * t_end.abs().max(1.0)))
        {
            return Err(abort(&state, Error::InvalidConfig("sample times must be increasing and inside the run".into())));
        }
        let g0 = enstrophy_from_omega(&state.omega);
        let mut next_sample = 0;
        let mut steps: usize = 0;
        let mut last_recorded = None;

        loop {
            while next_sample < sample_times.len() && sample_times[next_sample] <= state.t {
                let vel = self.velocity(&state.omega).map_err(|e| abort(&state, e))?;
                observer.sample(next_sample, &state, &vel);
                next_sample += 1;
            }
            if steps % self.config.record_every == 0 {
                self.emit_record(&state, observer).map_err(|e| abort(&state, e))?;
                last_recorded = Some(steps);
            }
            if state.t >= t_end {
                break;
            }
            let target = sample_times.get(next_sample).copied().unwrap_or(t_end).min(t_end);
            let (k1, speed) = tendency(&self.poisson, &state.omega, state.mean_u, &self.config, true)
                .map_err(|e| abort(&state, e))?;
            let dt_max = match self.config.fixed_dt {
                Some(dt) => dt,
                None => self.cfl_bound_from_speed(speed),
            };
            let remaining = target - state.t;
            let landing = dt_max >= remaining * (1.0 - 1e-9);
            let dt = if landing { remaining } else { dt_max };
            let mut next = self.finish_step(&state, dt, k1).map_err(|e| abort(&state, e))?;
            if landing {
                next.t = target;
            }
            let g = enstrophy_from_omega(&next.omega);
            if g > ENSTROPHY_BLOWUP_FACTOR * g0 && g0 > 0.0 {
                let reason = format!("enstrophy grew from {g0:.6e} to {g:.6e}");
                return Err(abort(&state, Error::BlowUp { t: next.t, reason }));
            }
            state = next;
            steps += 1;
        }
        if last_recorded != Some(steps) {
            self.emit_record(&state, observer).map_err(|e| abort(&state, e))?;
        }
        Ok(state)
    }

    fn emit_record(&self, state: &State, observer: &mut dyn RunObserver) -> Result<()> {
        let vel = self.velocity(&state.omega)?;
        let rec = DiagnosticsRecord::measure(state.t, &state.omega, &vel, state.mean_u)?;
        observer.record(&rec);
        Ok(())
    }
}
