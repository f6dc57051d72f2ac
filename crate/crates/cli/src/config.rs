//! Run configuration: a TOML document with the sections `grid`, `solver`,
//! `initial`, `recurrence`, `verify`, `annulus` and `output`. Unknown keys are
//! rejected, and every value is range-checked before any computation starts.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use chflow::dynamics::{Advection, SolverConfig};
use chflow::presets::Preset;
use chflow::ChannelGrid;
use serde::Deserialize;

use crate::error::CliError;
use crate::preset::parse_preset;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub initial: InitialSection,
    pub recurrence: Option<RecurrenceSection>,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub annulus: AnnulusSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_lx")]
    pub lx: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    pub nx: i64,
    pub ny: i64,
}

fn default_lx() -> f64 {
    2.0 * PI
}

fn default_b() -> f64 {
    PI
}

impl Default for GridSection {
    fn default() -> Self {
        Self { lx: default_lx(), a: 0.0, b: default_b(), nx: 64, ny: 65 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdvectionName {
    #[default]
    Arakawa,
    Convective,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub cfl: Option<f64>,
    pub fixed_dt: Option<f64>,
    #[serde(default)]
    pub t_end: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default)]
    pub advection: AdvectionName,
    #[serde(default = "default_record_every")]
    pub record_every: i64,
}

fn yes() -> bool {
    true
}

fn default_record_every() -> i64 {
    10
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            cfl: None,
            fixed_dt: None,
            t_end: 0.0,
            dealias: true,
            advection: AdvectionName::default(),
            record_every: default_record_every(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// `shear`, `eigenstate`, `traveling_wave c=...`, `random seed=... max_mode=... amplitude=...`
    /// or `perturbed_eigenstate eps=... seed=... max_mode=...`.
    #[serde(default = "default_preset")]
    pub preset: String,
}

fn default_preset() -> String {
    "eigenstate".into()
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { preset: default_preset() }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceSection {
    /// Sampling period `T`.
    pub period: Option<f64>,
    /// Alternative to `period`: the sampling horizon `(M - 1) T` in eddy
    /// turnover times `L_x / u_rms` of the initial velocity.
    pub duration_turnovers: Option<f64>,
    pub samples: i64,
    pub delta: Option<f64>,
    /// Alternative to `delta`: fraction of the L2 norm of the initial velocity.
    pub delta_rel: Option<f64>,
    /// Minimum visit count reported as a return.
    #[serde(default = "default_min_visits")]
    pub min_visits: i64,
}

fn default_min_visits() -> i64 {
    2
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Number of random streamfunction fields in the battery.
    #[serde(default = "default_fields")]
    pub fields: i64,
    #[serde(default = "default_verify_seed")]
    pub seed: u64,
    #[serde(default = "default_max_mode")]
    pub max_mode: i64,
    /// Tail-bound cutoffs. When omitted, the defaults below `N_x / 2` are used.
    pub cutoffs: Option<Vec<i64>>,
    #[serde(default = "default_lemma1_tolerance")]
    pub lemma1_tolerance: f64,
    /// Number of perturbed-eigenstate conservation runs.
    #[serde(default = "default_conservation_runs")]
    pub conservation_runs: i64,
    #[serde(default = "default_conservation_t_end")]
    pub conservation_t_end: f64,
    #[serde(default = "default_drift_tolerance")]
    pub energy_tolerance: f64,
    #[serde(default = "default_drift_tolerance")]
    pub enstrophy_tolerance: f64,
    #[serde(default = "default_mean_v_tolerance")]
    pub mean_v_tolerance: f64,
    #[serde(default = "default_mean_u_tolerance")]
    pub mean_u_tolerance: f64,
}

fn default_fields() -> i64 {
    100
}
fn default_verify_seed() -> u64 {
    20_240_601
}
fn default_max_mode() -> i64 {
    4
}
fn default_cutoffs() -> Vec<i64> {
    vec![1, 2, 4, 8, 16]
}
fn default_lemma1_tolerance() -> f64 {
    1e-2
}
fn default_conservation_runs() -> i64 {
    2
}
fn default_conservation_t_end() -> f64 {
    5.0
}
fn default_drift_tolerance() -> f64 {
    1e-4
}
fn default_mean_v_tolerance() -> f64 {
    1e-11
}
fn default_mean_u_tolerance() -> f64 {
    1e-10
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            fields: default_fields(),
            seed: default_verify_seed(),
            max_mode: default_max_mode(),
            cutoffs: None,
            lemma1_tolerance: default_lemma1_tolerance(),
            conservation_runs: default_conservation_runs(),
            conservation_t_end: default_conservation_t_end(),
            energy_tolerance: default_drift_tolerance(),
            enstrophy_tolerance: default_drift_tolerance(),
            mean_v_tolerance: default_mean_v_tolerance(),
            mean_u_tolerance: default_mean_u_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AnnulusSection {
    /// `[R1, R2]` pairs, one table row each.
    #[serde(default = "default_radii")]
    pub radii: Vec<[f64; 2]>,
    #[serde(default = "default_n_r")]
    pub n_r: i64,
    #[serde(default = "default_n_theta")]
    pub n_theta: i64,
}

fn default_radii() -> Vec<[f64; 2]> {
    vec![[1.0, 2.0], [1.0, 3.0], [2.0, 4.0], [0.5, 1.0]]
}
fn default_n_r() -> i64 {
    512
}
fn default_n_theta() -> i64 {
    64
}

impl Default for AnnulusSection {
    fn default() -> Self {
        Self { radii: default_radii(), n_r: default_n_r(), n_theta: default_n_theta() }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Write velocity snapshots every this much simulated time (simulate only).
    pub snapshot_interval: Option<f64>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), snapshot_interval: None }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub break_dealias: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodSpec {
    Absolute(f64),
    Turnovers(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSpec {
    Absolute(f64),
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrencePlan {
    pub period: PeriodSpec,
    pub samples: usize,
    pub delta: DeltaSpec,
    pub min_visits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyPlan {
    pub fields: usize,
    pub seed: u64,
    pub max_mode: u32,
    pub cutoffs: Vec<usize>,
    pub lemma1_tolerance: f64,
    pub conservation_runs: usize,
    pub conservation_t_end: f64,
    pub energy_tolerance: f64,
    pub enstrophy_tolerance: f64,
    pub mean_v_tolerance: f64,
    pub mean_u_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusPlan {
    pub radii: Vec<(f64, f64)>,
    pub n_r: usize,
    pub n_theta: usize,
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: ChannelGrid,
    pub solver: SolverConfig,
    pub preset: Preset,
    pub recurrence: Option<RecurrencePlan>,
    pub verify: VerifyPlan,
    pub annulus: AnnulusPlan,
    pub out_dir: PathBuf,
    pub snapshot_interval: Option<f64>,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn positive_count(field: &str, v: i64) -> Result<usize, CliError> {
    if v <= 0 {
        return Err(field_err(field, format!("must be a positive integer, got {v}")));
    }
    usize::try_from(v).map_err(|_| field_err(field, format!("out of range: {v}")))
}

fn non_negative_count(field: &str, v: i64) -> Result<usize, CliError> {
    if v < 0 {
        return Err(field_err(field, format!("must be non-negative, got {v}")));
    }
    usize::try_from(v).map_err(|_| field_err(field, format!("out of range: {v}")))
}

fn positive_real(field: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be a positive number, got {v}")))
    }
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self, overrides: &Overrides) -> Result<RunConfig, CliError> {
        let g = &self.grid;
        if g.nx <= 0 || g.nx % 2 != 0 {
            return Err(field_err("grid.nx", format!("N_x must be a positive even integer, got {}", g.nx)));
        }
        if g.ny < 3 {
            return Err(field_err("grid.ny", format!("N_y must be at least 3, got {}", g.ny)));
        }
        if !(g.lx.is_finite() && g.lx > 0.0) {
            return Err(field_err("grid.lx", format!("must be positive, got {}", g.lx)));
        }
        if !(g.a.is_finite() && g.b.is_finite() && g.b > g.a) {
            return Err(field_err("grid.b", format!("walls must satisfy a < b, got a = {}, b = {}", g.a, g.b)));
        }
        let grid = ChannelGrid::new(g.lx, g.a, g.b, g.nx as usize, g.ny as usize)
            .map_err(|e| field_err("grid", e))?;

        let s = &self.solver;
        if s.cfl.is_some() && s.fixed_dt.is_some() {
            return Err(field_err("solver", "set either cfl or fixed_dt, not both"));
        }
        if let Some(c) = s.cfl {
            if !(c > 0.0 && c <= 1.0) {
                return Err(field_err("solver.cfl", format!("must lie in (0, 1], got {c}")));
            }
        }
        if let Some(dt) = s.fixed_dt {
            positive_real("solver.fixed_dt", dt)?;
        }
        if !(s.t_end.is_finite() && s.t_end >= 0.0) {
            return Err(field_err("solver.t_end", format!("must be non-negative, got {}", s.t_end)));
        }
        let record_every = positive_count("solver.record_every", s.record_every)?;
        let mut solver = SolverConfig {
            cfl: s.cfl.unwrap_or(chflow::dynamics::DEFAULT_CFL),
            t_end: s.t_end,
            dealias: s.dealias,
            advection: match s.advection {
                AdvectionName::Arakawa => Advection::Arakawa,
                AdvectionName::Convective => Advection::Convective,
            },
            fixed_dt: s.fixed_dt,
            record_every,
        };
        if overrides.break_dealias {
            solver.dealias = false;
            solver.advection = Advection::Convective;
        }

        let preset_text = overrides.preset.as_deref().unwrap_or(&self.initial.preset);
        let mut preset = parse_preset(preset_text).map_err(|e| field_err("initial.preset", e))?;
        if let Some(seed) = overrides.seed {
            preset = match preset {
                Preset::Random { max_mode, amplitude, .. } => Preset::Random { seed, max_mode, amplitude },
                Preset::PerturbedEigenstate { eps, max_mode, .. } => Preset::PerturbedEigenstate { eps, seed, max_mode },
                other => other,
            };
        }
        preset.series(&grid).map_err(|e| field_err("initial.preset", e))?;

        let recurrence = match &self.recurrence {
            None => None,
            Some(r) => {
                let period = match (r.period, r.duration_turnovers) {
                    (Some(p), None) => PeriodSpec::Absolute(positive_real("recurrence.period", p)?),
                    (None, Some(n)) => PeriodSpec::Turnovers(positive_real("recurrence.duration_turnovers", n)?),
                    _ => return Err(field_err("recurrence", "set exactly one of period or duration_turnovers")),
                };
                let delta = match (r.delta, r.delta_rel) {
                    (Some(d), None) => DeltaSpec::Absolute(positive_real("recurrence.delta", d)?),
                    (None, Some(d)) => DeltaSpec::Relative(positive_real("recurrence.delta_rel", d)?),
                    _ => return Err(field_err("recurrence", "set exactly one of delta or delta_rel")),
                };
                let samples = positive_count("recurrence.samples", r.samples)?;
                if matches!(period, PeriodSpec::Turnovers(_)) && samples < 2 {
                    return Err(field_err("recurrence.samples", "duration_turnovers needs at least 2 samples"));
                }
                let min_visits = positive_count("recurrence.min_visits", r.min_visits)?;
                if min_visits < 2 {
                    return Err(field_err("recurrence.min_visits", format!("must be at least 2, got {min_visits}")));
                }
                Some(RecurrencePlan { period, samples, delta, min_visits })
            }
        };

        let v = &self.verify;
        let max_mode = positive_count("verify.max_mode", v.max_mode)?;
        if 2 * max_mode >= grid.nx {
            return Err(field_err("verify.max_mode", format!("{max_mode} is not resolved by N_x = {}", grid.nx)));
        }
        let mut cutoffs = Vec::new();
        let defaults: Vec<i64> = default_cutoffs().into_iter().filter(|&c| (c as usize) < grid.nyquist()).collect();
        for &c in v.cutoffs.as_ref().unwrap_or(&defaults) {
            let c = positive_count("verify.cutoffs", c)?;
            if c >= grid.nyquist() {
                return Err(field_err("verify.cutoffs", format!("cutoff {c} must be below N_x/2 = {}", grid.nyquist())));
            }
            cutoffs.push(c);
        }
        let verify = VerifyPlan {
            fields: non_negative_count("verify.fields", v.fields)?,
            seed: overrides.seed.unwrap_or(v.seed),
            max_mode: max_mode as u32,
            cutoffs,
            lemma1_tolerance: positive_real("verify.lemma1_tolerance", v.lemma1_tolerance)?,
            conservation_runs: non_negative_count("verify.conservation_runs", v.conservation_runs)?,
            conservation_t_end: positive_real("verify.conservation_t_end", v.conservation_t_end)?,
            energy_tolerance: positive_real("verify.energy_tolerance", v.energy_tolerance)?,
            enstrophy_tolerance: positive_real("verify.enstrophy_tolerance", v.enstrophy_tolerance)?,
            mean_v_tolerance: positive_real("verify.mean_v_tolerance", v.mean_v_tolerance)?,
            mean_u_tolerance: positive_real("verify.mean_u_tolerance", v.mean_u_tolerance)?,
        };

        let a = &self.annulus;
        let n_r = positive_count("annulus.n_r", a.n_r)?;
        if n_r < 8 || n_r % 2 != 0 {
            return Err(field_err("annulus.n_r", format!("must be an even integer >= 8, got {n_r}")));
        }
        let n_theta = positive_count("annulus.n_theta", a.n_theta)?;
        if n_theta < 8 {
            return Err(field_err("annulus.n_theta", format!("must be at least 8, got {n_theta}")));
        }
        for &[r1, r2] in &a.radii {
            if !(r1.is_finite() && r2.is_finite() && r1 > 0.0 && r2 > r1) {
                return Err(field_err("annulus.radii", format!("need 0 < R1 < R2, got [{r1}, {r2}]")));
            }
        }
        let annulus = AnnulusPlan { radii: a.radii.iter().map(|&[a, b]| (a, b)).collect(), n_r, n_theta };

        if let Some(dt) = self.output.snapshot_interval {
            positive_real("output.snapshot_interval", dt)?;
        }
        Ok(RunConfig {
            grid,
            solver,
            preset,
            recurrence,
            verify,
            annulus,
            out_dir: overrides.out.clone().unwrap_or_else(|| self.output.dir.clone()),
            snapshot_interval: self.output.snapshot_interval,
        })
    }
}
