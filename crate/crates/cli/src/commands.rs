//! The four subcommands. Each takes a validated [`RunConfig`], writes its
//! outputs below `out_dir` and maps failures onto [`CliError`].

use chflow::annulus::{self, AnnulusSpec, ContrastRow, Swirl};
use chflow::diagnostics::{conservation_report, lemma1_check, rms_velocity, tail_bound_check, ConservationSummary};
use chflow::dynamics::{EulerSolver, RecordLog, SolverConfig};
use chflow::presets::{Preset, StreamSeries};
use chflow::recurrence::{
    audit_cover, build_cover, closest_return_curve, detect_returns, sample_trajectory, RecurrenceConfig,
};
use chflow::{l2_norm, ChannelGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{DeltaSpec, PeriodSpec, RunConfig, VerifyPlan};
use crate::error::CliError;
use crate::output::{self, full_velocity, DiagnosticsSink};

/// Perturbation size of the conservation runs in `verify`.
pub const CONSERVATION_EPS: f64 = 0.01;
/// Annulus tolerances: pointwise vorticity and enstrophy (absolute), H1 seminorm (relative).
pub const ANNULUS_VORTICITY_TOL: f64 = 1e-12;
pub const ANNULUS_ENSTROPHY_TOL: f64 = 1e-12;
pub const ANNULUS_H1_TOL: f64 = 1e-6;

fn numeric(e: chflow::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

/// Summary of a finished `simulate` run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub t_final: f64,
    pub snapshots: usize,
}

fn snapshot_times(interval: f64, t_end: f64) -> Vec<f64> {
    let slack = 1e-12 * t_end.max(1.0);
    (0..).map(|k| k as f64 * interval).take_while(|&t| t <= t_end + slack).map(|t| t.min(t_end)).collect()
}

pub fn simulate(cfg: &RunConfig) -> Result<SimulateSummary, CliError> {
    let initial = cfg.preset.initial_condition(&cfg.grid).map_err(numeric)?;
    let solver = EulerSolver::new(cfg.grid, cfg.solver).map_err(|e| CliError::Config(e.to_string()))?;
    output::ensure_dir(&cfg.out_dir)?;
    let times = cfg.snapshot_interval.map(|dt| snapshot_times(dt, cfg.solver.t_end)).unwrap_or_default();
    let snap_dir = cfg.snapshot_interval.map(|_| cfg.out_dir.clone());
    let mut sink = DiagnosticsSink::create(&cfg.out_dir.join(output::DIAGNOSTICS_FILE), snap_dir)?;
    let outcome = solver.run(&initial, &times, &mut sink);
    let snapshots = sink.snapshots_written();
    sink.finish()?;
    match outcome {
        Ok(state) => Ok(SimulateSummary { t_final: state.t, snapshots }),
        Err(abort) => Err(CliError::Numeric(abort.to_string())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CenterReport {
    pub center_index: usize,
    pub t: f64,
    pub visits: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub max_member_distance: f64,
    /// `null` when there is a single center.
    pub min_center_separation: Option<f64>,
    pub every_sample_assigned: bool,
    pub passes: bool,
}

/// Contents of `cover.json`.
#[derive(Debug, Clone, Serialize)]
pub struct CoverReport {
    pub samples_requested: usize,
    pub samples: usize,
    pub period: f64,
    pub delta: f64,
    pub initial_norm: f64,
    pub n_centers: usize,
    pub max_visits: usize,
    pub pigeonhole_bound: usize,
    pub pigeonhole_holds: bool,
    pub audit: AuditReport,
    pub min_visits: usize,
    pub centers: Vec<CenterReport>,
    pub returns: Vec<CenterReport>,
    pub aborted: Option<String>,
}

impl CoverReport {
    pub fn pigeonhole_line(&self) -> String {
        format!(
            "pigeonhole: max_visits = {} >= ceil({}/{}) = {}: {}",
            self.max_visits, self.samples, self.n_centers, self.pigeonhole_bound, self.pigeonhole_holds
        )
    }
}

pub fn recurrence(cfg: &RunConfig) -> Result<CoverReport, CliError> {
    let plan = cfg
        .recurrence
        .ok_or_else(|| CliError::Config("recurrence: section required by the recurrence command".into()))?;
    let initial = cfg.preset.initial_condition(&cfg.grid).map_err(numeric)?;
    let probe = EulerSolver::new(cfg.grid, cfg.solver).map_err(|e| CliError::Config(e.to_string()))?;
    let s0 = probe.initial_state(&initial).map_err(numeric)?;
    let v0 = full_velocity(&probe.velocity(&s0.omega).map_err(numeric)?, s0.mean_u);
    let initial_norm = l2_norm(&v0);

    let period = match plan.period {
        PeriodSpec::Absolute(t) => t,
        PeriodSpec::Turnovers(n) => {
            let u_rms = rms_velocity(&v0);
            if !(u_rms > 0.0) {
                return Err(CliError::Config("recurrence.duration_turnovers: initial velocity is zero".into()));
            }
            n * cfg.grid.lx / u_rms / (plan.samples - 1) as f64
        }
    };
    let delta = match plan.delta {
        DeltaSpec::Absolute(d) => d,
        DeltaSpec::Relative(r) => {
            if !(initial_norm > 0.0) {
                return Err(CliError::Config("recurrence.delta_rel: initial velocity is zero".into()));
            }
            r * initial_norm
        }
    };
    let rc = RecurrenceConfig { period, samples: plan.samples, delta };
    rc.validate().map_err(|e| CliError::Config(format!("recurrence: {e}")))?;

    output::ensure_dir(&cfg.out_dir)?;
    let mut sink = DiagnosticsSink::create(&cfg.out_dir.join(output::DIAGNOSTICS_FILE), None)?;
    let traj = sample_trajectory(cfg.grid, &initial, &rc, &cfg.solver, &mut sink).map_err(numeric)?;
    sink.finish()?;
    let store = &traj.store;
    if store.is_empty() {
        let why = traj.abort.map(|a| a.to_string()).unwrap_or_else(|| "no samples".into());
        return Err(CliError::Numeric(why));
    }

    let net = build_cover(store, delta).map_err(numeric)?;
    let audit = audit_cover(store, &net).map_err(numeric)?;
    let returns = detect_returns(&net, plan.min_visits).map_err(numeric)?;
    let curve = closest_return_curve(store, 0).map_err(numeric)?;
    output::write_closest_return(&cfg.out_dir.join(output::CLOSEST_RETURN_FILE), &curve)?;

    let center = |c: &chflow::recurrence::CoverCenter| CenterReport {
        center_index: c.center_index,
        t: store.samples()[c.center_index].t,
        visits: c.visits.clone(),
    };
    let report = CoverReport {
        samples_requested: plan.samples,
        samples: store.len(),
        period,
        delta,
        initial_norm,
        n_centers: net.centers.len(),
        max_visits: net.max_visits(),
        pigeonhole_bound: net.pigeonhole_bound(),
        pigeonhole_holds: net.pigeonhole_holds(),
        audit: AuditReport {
            max_member_distance: audit.max_member_distance,
            min_center_separation: audit.min_center_separation.is_finite().then_some(audit.min_center_separation),
            every_sample_assigned: audit.every_sample_assigned,
            passes: audit.passes(delta),
        },
        min_visits: plan.min_visits,
        centers: net.centers.iter().map(center).collect(),
        returns: returns.iter().map(center).collect(),
        aborted: traj.abort.as_ref().map(|a| a.to_string()),
    };
    output::write_json(&cfg.out_dir.join(output::COVER_FILE), &report)?;
    Ok(report)
}

/// Exit status of a recurrence report: numeric abort first, then failed checks.
pub fn recurrence_verdict(report: &CoverReport) -> Result<(), CliError> {
    if let Some(a) = &report.aborted {
        return Err(CliError::Numeric(a.clone()));
    }
    let mut failed = Vec::new();
    if !report.pigeonhole_holds {
        failed.push("pigeonhole");
    }
    if !report.audit.passes {
        failed.push("cover_audit");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("failed checks: {}", failed.join(", "))))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Verdict {
    pub name: &'static str,
    pub passed: bool,
    pub tolerance: f64,
    pub fields: usize,
    pub failures: usize,
    pub worst_residual: f64,
    pub hypothesis_warnings: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailVerdict {
    pub name: &'static str,
    pub passed: bool,
    pub cutoffs: Vec<usize>,
    pub evaluations: usize,
    pub failures: usize,
    /// Largest `lhs / rhs` over the battery.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationRun {
    pub seed: u64,
    pub t_end: f64,
    pub energy_drift: Option<f64>,
    pub enstrophy_drift: Option<f64>,
    pub mean_u_drift: Option<f64>,
    pub max_abs_mean_v: Option<f64>,
    pub aborted: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConservationVerdict {
    pub name: &'static str,
    pub passed: bool,
    pub dealias: bool,
    pub advection: String,
    pub energy_tolerance: f64,
    pub enstrophy_tolerance: f64,
    pub mean_u_tolerance: f64,
    pub mean_v_tolerance: f64,
    pub runs: Vec<ConservationRun>,
}

/// Contents of `verify.json`; a check is `null` when not requested.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub failed: Vec<&'static str>,
    pub grid: GridReport,
    pub lemma1: Option<Lemma1Verdict>,
    pub tail_bound: Option<TailVerdict>,
    pub conservation: Option<ConservationVerdict>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub lx: f64,
    pub a: f64,
    pub b: f64,
    pub nx: usize,
    pub ny: usize,
}

impl From<&ChannelGrid> for GridReport {
    fn from(g: &ChannelGrid) -> Self {
        Self { lx: g.lx, a: g.a, b: g.b, nx: g.nx, ny: g.ny }
    }
}

struct BatteryField {
    residual: f64,
    warning: bool,
    tail: Vec<(f64, f64, bool)>,
}

fn battery(grid: &ChannelGrid, plan: &VerifyPlan) -> Result<Vec<BatteryField>, CliError> {
    (0..plan.fields)
        .into_par_iter()
        .map(|i| {
            let seed = plan.seed.wrapping_add(i as u64);
            let vel = StreamSeries::random(grid, seed, plan.max_mode, 1.0)
                .and_then(|s| s.sample_velocity(*grid))
                .map_err(numeric)?;
            let l = lemma1_check(&vel).map_err(numeric)?;
            let tail = plan
                .cutoffs
                .iter()
                .map(|&n| tail_bound_check(&vel, n).map(|t| (t.lhs, t.rhs, t.holds)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(numeric)?;
            Ok(BatteryField { residual: l.residual, warning: l.warning.is_some(), tail })
        })
        .collect()
}

fn conservation_run(cfg: &RunConfig, seed: u64) -> ConservationRun {
    let plan = &cfg.verify;
    let preset = Preset::PerturbedEigenstate { eps: CONSERVATION_EPS, seed, max_mode: plan.max_mode };
    let mut run = ConservationRun {
        seed,
        t_end: plan.conservation_t_end,
        energy_drift: None,
        enstrophy_drift: None,
        mean_u_drift: None,
        max_abs_mean_v: None,
        aborted: None,
        passed: false,
    };
    let mut log = RecordLog::default();
    let outcome = preset.initial_condition(&cfg.grid).and_then(|ic| {
        let solver = EulerSolver::new(cfg.grid, SolverConfig { t_end: plan.conservation_t_end, ..cfg.solver })?;
        solver.run(&ic, &[], &mut log).map_err(|a| chflow::Error::BlowUp { t: a.last.t, reason: a.to_string() })
    });
    if let Err(e) = outcome {
        run.aborted = Some(e.to_string());
    }
    if let Ok(ConservationSummary { energy_drift, enstrophy_drift, mean_u_drift, max_abs_mean_v }) =
        conservation_report(&log.records)
    {
        run.energy_drift = Some(energy_drift);
        run.enstrophy_drift = Some(enstrophy_drift);
        run.mean_u_drift = Some(mean_u_drift);
        run.max_abs_mean_v = Some(max_abs_mean_v);
        run.passed = run.aborted.is_none()
            && energy_drift <= plan.energy_tolerance
            && enstrophy_drift <= plan.enstrophy_tolerance
            && mean_u_drift <= plan.mean_u_tolerance
            && max_abs_mean_v <= plan.mean_v_tolerance;
    }
    run
}

pub fn verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let plan = &cfg.verify;
    let tail_requested = plan.fields > 0 && !plan.cutoffs.is_empty();
    if plan.fields == 0 && plan.conservation_runs == 0 {
        return Err(CliError::Config("no checks requested".into()));
    }
    let fields = battery(&cfg.grid, plan)?;

    let lemma1 = (plan.fields > 0).then(|| {
        let fails = fields.iter().filter(|f| !(f.residual <= plan.lemma1_tolerance) || f.warning).count();
        Lemma1Verdict {
            name: "lemma1",
            passed: fails == 0,
            tolerance: plan.lemma1_tolerance,
            fields: fields.len(),
            failures: fails,
            worst_residual: fields.iter().map(|f| f.residual).fold(0.0, f64::max),
            hypothesis_warnings: fields.iter().filter(|f| f.warning).count(),
        }
    });
    let tail_bound = tail_requested.then(|| {
        let all = fields.iter().flat_map(|f| f.tail.iter());
        let failures = all.clone().filter(|t| !t.2).count();
        TailVerdict {
            name: "tail_bound",
            passed: failures == 0,
            cutoffs: plan.cutoffs.clone(),
            evaluations: all.clone().count(),
            failures,
            worst_ratio: all.map(|t| if t.1 > 0.0 { t.0 / t.1 } else { 0.0 }).fold(0.0, f64::max),
        }
    });
    let conservation = (plan.conservation_runs > 0).then(|| {
        let runs: Vec<ConservationRun> = (0..plan.conservation_runs)
            .into_par_iter()
            .map(|r| conservation_run(cfg, plan.seed.wrapping_add(r as u64)))
            .collect();
        ConservationVerdict {
            name: "conservation",
            passed: runs.iter().all(|r| r.passed),
            dealias: cfg.solver.dealias,
            advection: format!("{:?}", cfg.solver.advection).to_lowercase(),
            energy_tolerance: plan.energy_tolerance,
            enstrophy_tolerance: plan.enstrophy_tolerance,
            mean_u_tolerance: plan.mean_u_tolerance,
            mean_v_tolerance: plan.mean_v_tolerance,
            runs,
        }
    });

    let mut failed = Vec::new();
    if lemma1.as_ref().is_some_and(|v| !v.passed) {
        failed.push("lemma1");
    }
    if tail_bound.as_ref().is_some_and(|v| !v.passed) {
        failed.push("tail_bound");
    }
    if conservation.as_ref().is_some_and(|v| !v.passed) {
        failed.push("conservation");
    }
    let report = VerifyReport {
        passed: failed.is_empty(),
        failed,
        grid: GridReport::from(&cfg.grid),
        lemma1,
        tail_bound,
        conservation,
    };
    output::ensure_dir(&cfg.out_dir)?;
    output::write_json(&cfg.out_dir.join(output::VERIFY_FILE), &report)?;
    Ok(report)
}

pub fn verify_verdict(report: &VerifyReport) -> Result<(), CliError> {
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Check(format!("failed checks: {}", report.failed.join(", "))))
    }
}

/// One table row with the pointwise checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusRow {
    pub row: ContrastRow,
    pub vorticity_max: f64,
    pub steadiness_residual: f64,
    pub passed: bool,
}

pub fn annulus(cfg: &RunConfig) -> Result<Vec<AnnulusRow>, CliError> {
    let plan = &cfg.annulus;
    if plan.radii.is_empty() {
        return Err(CliError::Config("annulus.radii: no checks requested".into()));
    }
    plan.radii
        .iter()
        .map(|&(r1, r2)| {
            let spec = AnnulusSpec::new(r1, r2, plan.n_r, plan.n_theta).map_err(|e| CliError::Config(e.to_string()))?;
            let row = annulus::contrast_row(&spec).map_err(numeric)?;
            let vorticity_max = annulus::vorticity_max(&spec, &Swirl).map_err(numeric)?;
            let steadiness_residual = annulus::steadiness_residual(&spec, &Swirl).map_err(numeric)?;
            let passed = vorticity_max <= ANNULUS_VORTICITY_TOL
                && row.enstrophy.abs() <= ANNULUS_ENSTROPHY_TOL
                && row.rel_error <= ANNULUS_H1_TOL;
            Ok(AnnulusRow { row, vorticity_max, steadiness_residual, passed })
        })
        .collect()
}

pub fn annulus_table(rows: &[AnnulusRow]) -> String {
    let mut s = format!(
        "{:>8} {:>8} {:>12} {:>16} {:>16} {:>12}\n",
        "R1", "R2", "enstrophy", "h1_seminorm_sq", "analytic", "rel_error"
    );
    for r in rows {
        let c = &r.row;
        s.push_str(&format!(
            "{:>8} {:>8} {:>12.3e} {:>16.12} {:>16.12} {:>12.3e}\n",
            c.r1, c.r2, c.enstrophy, c.h1_seminorm_sq, c.analytic, c.rel_error
        ));
    }
    s
}

pub fn annulus_verdict(rows: &[AnnulusRow]) -> Result<(), CliError> {
    let bad: Vec<String> = rows.iter().filter(|r| !r.passed).map(|r| format!("[{}, {}]", r.row.r1, r.row.r2)).collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(format!("annulus contrast failed for radii {}", bad.join(", "))))
    }
}
