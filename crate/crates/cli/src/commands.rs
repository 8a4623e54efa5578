//! The `run`, `check` and `sweep` subcommands.
//!
//! [`execute`] does all computation without touching the filesystem; the
//! `cmd_*` functions wrap it with file output and exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use memincl::diagnostics::{
    energy_ledger, gronwall_constants, manufactured_profile, truncation_radius, verify_apriori, AprioriConstants,
    AprioriReport, EnergyLedger, OperatorConstants,
};
use memincl::operators::{check_coercive_a, check_growth_a, check_hemicontinuity, check_monotone, check_b, AssumptionReport};
use memincl::setvalued::check_growth_f;
use memincl::solver::{
    fixed_point_iterate, marching_solve, max_deviation, residual_certificate, solve_without_memory,
    CertificateReport, CertificateTolerances,
};
use memincl::spaces::{b_norm, h_norm};
use memincl::{StateVector, Trajectory};
use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::Serialize;

use crate::bundled;
use crate::output::{write_json, write_series, write_table};
use crate::scenario::{parse_scenario, Instance, LoadedScenario, ReferenceKind, RuleSpec, ScenarioError, Strategy};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    Ok = 0,
    Parse = 2,
    Solve = 3,
    Certificate = 4,
    Check = 5,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Number of seeds used by the assumption checkers.
const CHECK_SEEDS: usize = 8;

/// Settings shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub tol_newton: Option<f64>,
    pub tol_fp: Option<f64>,
}

impl Settings {
    fn all_overrides(&self) -> Vec<String> {
        let mut out = self.overrides.clone();
        if let Some(t) = self.tol_newton {
            out.push(format!("solver.tol_newton={t:e}"));
        }
        if let Some(t) = self.tol_fp {
            out.push(format!("solver.tol_fp={t:e}"));
        }
        if let Some(s) = self.seed {
            out.push(format!("seed={s}"));
        }
        out
    }
}

/// Reads a scenario from a file path, or from the bundled set by name.
pub fn read_source(source: &str) -> Result<String, ScenarioError> {
    let path = Path::new(source);
    if path.is_file() {
        return fs::read_to_string(path).map_err(|e| ScenarioError(format!("cannot read {source}: {e}")));
    }
    bundled::get(source).map(str::to_string).ok_or_else(|| {
        ScenarioError(format!(
            "`{source}` is neither a file nor a bundled scenario (try `memincl list`)"
        ))
    })
}

pub fn load(source: &str, settings: &Settings) -> Result<LoadedScenario, ScenarioError> {
    parse_scenario(&read_source(source)?, &settings.all_overrides())
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointSummary {
    pub iterations: usize,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerSummary {
    pub final_identity_slack: f64,
    pub max_abs_identity_slack: f64,
    pub min_inequality_slack: f64,
    pub final_kinetic: f64,
    pub final_memory: f64,
    pub final_coercivity: f64,
    pub final_memory_dissipation: f64,
    pub final_forcing: f64,
    pub final_coupling: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSummary {
    pub kind: ReferenceKind,
    pub max_error: f64,
    pub tau: f64,
    pub error_over_tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub final_h_norm: f64,
    /// `max_n ‖w_n‖_B`; small when the memory decouples.
    pub decoupling_metric: f64,
    /// `max_n ‖v_n - ṽ_n‖_H` against the memoryless equation, when requested.
    pub no_memory_deviation: Option<f64>,
    pub newton_max_iterations: usize,
    pub newton_max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub property: String,
    pub passed: bool,
    pub detail: String,
}

/// Diagnostics report written to `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub strategy: Strategy,
    pub rule: RuleSpec,
    pub status: Exit,
    pub error: Option<String>,
    pub assumptions: Vec<CheckLine>,
    pub envelope_valid: bool,
    pub operator_constants: Option<OperatorConstants>,
    pub constants: Option<AprioriConstants>,
    pub constants_error: Option<String>,
    pub truncation_radius: Option<f64>,
    pub certificate: Option<CertificateReport>,
    pub fixed_point: Option<FixedPointSummary>,
    pub apriori: Option<AprioriReport>,
    pub ledger: Option<LedgerSummary>,
    pub reference: Option<ReferenceSummary>,
    pub metrics: Option<Metrics>,
}

/// In-memory result of one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub trajectory: Option<Trajectory>,
    pub ledger: Option<EnergyLedger>,
    pub instance: Instance,
}

impl RunOutcome {
    pub fn exit(&self) -> Exit {
        self.report.status
    }
}

/// Solves a loaded scenario and evaluates every diagnostic.
/// `no_memory` also runs the memoryless comparison.
pub fn execute(loaded: &LoadedScenario, no_memory: bool) -> Result<RunOutcome, ScenarioError> {
    let sc = &loaded.scenario;
    let inst = sc.build()?;
    let data = &inst.data;
    let seed = sc.seed;

    let (ops, op_reports) = OperatorConstants::fit(data, CHECK_SEEDS, seed);
    let envelope_report = check_growth_f(&data.field, &inst.envelope, &data.mesh, &data.grid, 4, seed)
        .map_err(|e| ScenarioError(format!("field evaluation failed: {e}")))?;
    let mut assumptions: Vec<CheckLine> = op_reports.iter().map(check_line).collect();
    assumptions.push(check_line(&envelope_report));
    let (constants, constants_error) = match gronwall_constants(data, &inst.envelope, &ops) {
        Ok(k) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut report = Report {
        scenario: sc.name.clone(),
        scenario_hash: loaded.hash.clone(),
        seed,
        strategy: sc.solver.strategy,
        rule: sc.solver.rule,
        status: Exit::Ok,
        error: None,
        assumptions,
        envelope_valid: envelope_report.passed(),
        operator_constants: Some(ops),
        constants,
        constants_error,
        truncation_radius: None,
        certificate: None,
        fixed_point: None,
        apriori: None,
        ledger: None,
        reference: None,
        metrics: None,
    };

    let solved = match sc.solver.strategy {
        Strategy::Marching => marching_solve(data, &inst.rule, &inst.options),
        Strategy::FixedPoint => {
            report.truncation_radius = constants.as_ref().and_then(truncation_radius);
            let f0 = vec![data.grid.zeros(); data.mesh.steps()];
            fixed_point_iterate(&f0, data, report.truncation_radius, sc.solver.k_max, sc.solver.tol_fp, &inst.options)
                .map(|res| {
                    report.fixed_point = Some(FixedPointSummary {
                        iterations: res.iterations,
                        converged: res.converged,
                        contraction_ratios: res.contraction_ratios(),
                        residual_history: res.residual_history,
                    });
                    res.v_star
                })
        }
    };
    let traj = match solved {
        Ok(t) => t,
        Err(e) => {
            report.status = Exit::Solve;
            report.error = Some(e.to_string());
            return Ok(RunOutcome {
                report,
                trajectory: None,
                ledger: None,
                instance: inst,
            });
        }
    };

    let tols = CertificateTolerances {
        set: sc.certificate.tol_set,
        equation: sc.certificate.tol_eq,
    };
    let cert = residual_certificate(&traj, data, &tols).map_err(|e| ScenarioError(e.to_string()))?;
    let fp_ok = report.fixed_point.as_ref().is_none_or(|fp| fp.converged);
    if !(cert.passed() && fp_ok) {
        report.status = Exit::Certificate;
    }
    report.certificate = Some(cert);

    let mut ledger = None;
    if let Some(k) = &constants {
        report.apriori = verify_apriori(&traj, k, data).ok();
        if let Ok(l) = energy_ledger(&traj, data, k) {
            report.ledger = Some(summarize_ledger(&l));
            ledger = Some(l);
        }
    }
    report.reference = reference_error(sc.reference.kind, &inst, &traj);

    let grid = &data.grid;
    let decoupling = traj
        .w
        .iter()
        .map(|w| b_norm(w, &data.b).unwrap_or(f64::NAN))
        .fold(0.0, f64::max);
    let no_memory_deviation = if no_memory {
        solve_without_memory(&traj.f, data, &inst.options)
            .ok()
            .map(|v| max_deviation(&traj.v, &v, grid))
    } else {
        None
    };
    report.metrics = Some(Metrics {
        final_h_norm: h_norm(traj.v.last().expect("nonempty trajectory"), grid),
        decoupling_metric: decoupling,
        no_memory_deviation,
        newton_max_iterations: traj.newton.iter().map(|s| s.iterations).max().unwrap_or(0),
        newton_max_residual: traj.newton.iter().map(|s| s.residual).fold(0.0, f64::max),
    });
    Ok(RunOutcome {
        report,
        trajectory: Some(traj),
        ledger,
        instance: inst,
    })
}

fn check_line(r: &AssumptionReport) -> CheckLine {
    CheckLine {
        property: r.property.clone(),
        passed: r.passed(),
        detail: r.detail.clone(),
    }
}

fn summarize_ledger(l: &EnergyLedger) -> LedgerSummary {
    let last = |v: &Vec<f64>| *v.last().unwrap_or(&0.0);
    LedgerSummary {
        final_identity_slack: last(&l.identity_slack),
        max_abs_identity_slack: l.max_abs_identity_slack(),
        min_inequality_slack: l.min_inequality_slack(),
        final_kinetic: last(&l.kinetic),
        final_memory: last(&l.memory),
        final_coercivity: last(&l.coercivity),
        final_memory_dissipation: last(&l.memory_dissipation),
        final_forcing: last(&l.forcing),
        final_coupling: last(&l.coupling),
    }
}

/// Closed-form nodal values for the supported reference kinds.
pub fn reference_solution(kind: ReferenceKind, inst: &Instance) -> Option<Vec<StateVector>> {
    let data = &inst.data;
    match kind {
        ReferenceKind::None => None,
        ReferenceKind::LinearMemory => {
            let alpha = inst.data.a.apply(&StateVector::from_element(data.grid.n(), 1.0))[0];
            let beta = data.b.matrix()[(0, 0)];
            let m = Matrix2::new(-alpha, -beta, data.lambda, -data.lambda);
            Some(
                data.mesh
                    .nodes()
                    .map(|t| {
                        let e = (m * t).exp();
                        data.v0.map(|v| e[(0, 0)] * v)
                    })
                    .collect(),
            )
        }
        ReferenceKind::Manufactured => {
            let phi = manufactured_profile(data);
            Some(data.mesh.nodes().map(|t| &phi * (-t).exp()).collect())
        }
    }
}

fn reference_error(kind: ReferenceKind, inst: &Instance, traj: &Trajectory) -> Option<ReferenceSummary> {
    let exact = reference_solution(kind, inst)?;
    let tau = inst.data.mesh.tau();
    let max_error = max_deviation(&traj.v, &exact, &inst.data.grid);
    Some(ReferenceSummary {
        kind,
        max_error,
        tau,
        error_over_tau: max_error / tau,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub overrides: Vec<String>,
    pub exit_code: i32,
    pub constants: Option<AprioriConstants>,
    pub certificate: Option<CertificateReport>,
    pub files: Vec<String>,
}

/// Writes the outputs of `outcome` into `dir`; returns the file names.
pub fn write_outputs(outcome: &RunOutcome, loaded: &LoadedScenario, settings: &Settings, dir: &Path) -> std::io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let outputs = &loaded.scenario.outputs;
    let mut files = Vec::new();
    let mesh = &outcome.instance.data.mesh;
    let times: Vec<f64> = mesh.nodes().collect();
    if let (Some(traj), true) = (&outcome.trajectory, outputs.trajectory) {
        write_series(&dir.join("v.csv"), &times, &traj.v)?;
        write_series(&dir.join("w.csv"), &times, &traj.w)?;
        write_series(&dir.join("f.csv"), &times[..traj.f.len()], &traj.f)?;
        files.extend(["v.csv", "w.csv", "f.csv"].map(String::from));
    }
    if let (Some(l), true) = (&outcome.ledger, outputs.ledger) {
        let rows: Vec<Vec<f64>> = (0..l.kinetic.len())
            .map(|n| {
                vec![
                    times[n],
                    l.kinetic[n],
                    l.memory[n],
                    l.coercivity[n],
                    l.memory_dissipation[n],
                    l.forcing[n],
                    l.coupling[n],
                    l.identity_slack[n],
                    l.inequality_slack[n],
                ]
            })
            .collect();
        write_table(
            &dir.join("ledger.csv"),
            &[
                "time",
                "kinetic",
                "memory",
                "coercivity",
                "memory_dissipation",
                "forcing",
                "coupling",
                "identity_slack",
                "inequality_slack",
            ],
            &rows,
        )?;
        files.push("ledger.csv".into());
    }
    if outputs.report {
        write_json(&dir.join("report.json"), &outcome.report)?;
        files.push("report.json".into());
    }
    files.push("run_record.json".into());
    let record = RunRecord {
        scenario: loaded.scenario.name.clone(),
        scenario_hash: loaded.hash.clone(),
        seed: loaded.scenario.seed,
        overrides: settings.all_overrides(),
        exit_code: outcome.exit().code(),
        constants: outcome.report.constants,
        certificate: outcome.report.certificate.clone(),
        files: files.clone(),
    };
    write_json(&dir.join("run_record.json"), &record)?;
    Ok(files)
}

fn print_run_summary(r: &Report) {
    println!("scenario        {} ({})", r.scenario, &r.scenario_hash[..12]);
    if let Some(e) = &r.error {
        println!("error           {e}");
    }
    if let Some(c) = &r.certificate {
        println!(
            "certificate     inclusion {:.3e} (tol {:.1e}), equation {:.3e} (tol {:.1e}), initial {}",
            c.inclusion_max, c.tolerances.set, c.equation_max, c.tolerances.equation, c.initial_ok
        );
    }
    if let Some(fp) = &r.fixed_point {
        println!(
            "fixed point     {} after {} iterations, last residual {:.3e}",
            if fp.converged { "converged" } else { "NOT converged" },
            fp.iterations,
            fp.residual_history.last().copied().unwrap_or(f64::NAN)
        );
    }
    if let Some(a) = &r.apriori {
        for c in &a.checks {
            println!("a priori        {:<34} {:.6e} <= {:.6e}  {}", c.name, c.observed, c.bound, if c.holds { "ok" } else { "VIOLATED" });
        }
    } else if let Some(e) = &r.constants_error {
        println!("a priori        skipped: {e}");
    }
    if let Some(rf) = &r.reference {
        println!("reference       max error {:.6e} = {:.4} tau", rf.max_error, rf.error_over_tau);
    }
    println!("status          {:?}", r.status);
}

pub fn cmd_run(source: &str, out_dir: &Path, settings: &Settings) -> Exit {
    let loaded = match load(source, settings) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Parse;
        }
    };
    let outcome = match execute(&loaded, false) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Parse;
        }
    };
    let dir = out_dir.join(&loaded.scenario.name);
    if let Err(e) = write_outputs(&outcome, &loaded, settings, &dir) {
        eprintln!("error: cannot write outputs to {}: {e}", dir.display());
        return Exit::Solve;
    }
    print_run_summary(&outcome.report);
    outcome.exit()
}

/// All checker reports for a scenario, in table order.
pub fn check_reports(inst: &Instance, seed: u64) -> Result<Vec<AssumptionReport>, ScenarioError> {
    let d = &inst.data;
    let p = d.exps.p;
    let field = check_growth_f(&d.field, &inst.envelope, &d.mesh, &d.grid, 4, seed)
        .map_err(|e| ScenarioError(format!("field evaluation failed: {e}")))?;
    Ok(vec![
        check_monotone(&d.a, CHECK_SEEDS, seed),
        check_hemicontinuity(&d.a, CHECK_SEEDS, seed),
        check_growth_a(&d.a, p, CHECK_SEEDS, seed),
        check_coercive_a(&d.a, p, CHECK_SEEDS, seed),
        check_b(&d.b),
        field,
    ])
}

pub fn cmd_check(source: &str, settings: &Settings) -> Exit {
    let loaded = match load(source, settings) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Parse;
        }
    };
    let inst = match loaded.scenario.build() {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Parse;
        }
    };
    let reports = match check_reports(&inst, loaded.scenario.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Parse;
        }
    };
    println!("{:<22} {:<6} detail", "property", "result");
    let mut fitted = memincl::operators::FittedConstants::default();
    for r in &reports {
        println!("{:<22} {:<6} {}", r.property, if r.passed() { "pass" } else { "FAIL" }, r.detail);
        if let Some(w) = &r.witness {
            println!("{:<22} witness {}", "", serde_json::to_string(w).unwrap_or_default());
        }
        let f = r.fitted;
        fitted.mu_a = fitted.mu_a.or(f.mu_a);
        fitted.c_a = fitted.c_a.or(f.c_a);
        fitted.beta_a = fitted.beta_a.or(f.beta_a);
        fitted.beta_b = fitted.beta_b.or(f.beta_b);
        fitted.mu_b = fitted.mu_b.or(f.mu_b);
    }
    let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
    println!(
        "fitted: mu_A = {}, c_A = {}, beta_A = {}, beta_B = {}, mu_B = {}, envelope {}",
        show(fitted.mu_a),
        show(fitted.c_a),
        show(fitted.beta_a),
        show(fitted.beta_b),
        show(fitted.mu_b),
        if reports.last().is_some_and(|r| r.passed()) { "valid" } else { "INVALID" }
    );
    if reports.iter().all(|r| r.passed()) {
        Exit::Ok
    } else {
        Exit::Check
    }
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Lambda,
    Tau,
    P,
    S,
}

impl SweepParam {
    fn override_for(self, value: f64, final_time: f64) -> Result<String, ScenarioError> {
        Ok(match self {
            SweepParam::Lambda => format!("memory.lambda_per_time={value:e}"),
            SweepParam::P => format!("operator_a.p={value:e}"),
            SweepParam::S => format!("operator_b.s={value:e}"),
            SweepParam::Tau => {
                let steps = (final_time / value).round();
                if !(steps >= 1.0) {
                    return Err(ScenarioError(format!("tau = {value} gives no time steps")));
                }
                format!("time.steps={steps}")
            }
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub exit: Exit,
    pub final_h_norm: f64,
    pub min_apriori_margin: f64,
    pub certified: bool,
    pub decoupling_metric: f64,
    pub no_memory_deviation: f64,
    pub reference_error: f64,
}

/// A sweep row with the run behind it, absent when the run could not start.
pub type SweepRun = (SweepRow, Option<(LoadedScenario, RunOutcome)>);

/// Runs one scenario per value in parallel; rows come back in input order.
pub fn sweep_rows(
    source_text: &str,
    settings: &Settings,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepRun>, ScenarioError> {
    let base = parse_scenario(source_text, &settings.all_overrides())?;
    let final_time = base.scenario.time.final_time;
    let run_one = |value: f64| {
        let nan = f64::NAN;
        let failed = |exit| SweepRow {
            value,
            exit,
            final_h_norm: nan,
            min_apriori_margin: nan,
            certified: false,
            decoupling_metric: nan,
            no_memory_deviation: nan,
            reference_error: nan,
        };
        let mut ovs = settings.all_overrides();
        let ov = match param.override_for(value, final_time) {
            Ok(o) => o,
            Err(_) => return (failed(Exit::Parse), None),
        };
        ovs.push(ov);
        let loaded = match parse_scenario(source_text, &ovs) {
            Ok(l) => l,
            Err(_) => return (failed(Exit::Parse), None),
        };
        let outcome = match execute(&loaded, param == SweepParam::Lambda) {
            Ok(o) => o,
            Err(_) => return (failed(Exit::Parse), None),
        };
        let r = &outcome.report;
        let metrics = r.metrics.as_ref();
        let row = SweepRow {
            value,
            exit: r.status,
            final_h_norm: metrics.map_or(nan, |m| m.final_h_norm),
            min_apriori_margin: r.apriori.as_ref().map_or(nan, |a| a.min_margin()),
            certified: r.status == Exit::Ok,
            decoupling_metric: metrics.map_or(nan, |m| m.decoupling_metric),
            no_memory_deviation: metrics.and_then(|m| m.no_memory_deviation).unwrap_or(nan),
            reference_error: r.reference.as_ref().map_or(nan, |x| x.max_error),
        };
        (row, Some((loaded, outcome)))
    };
    Ok(values.par_iter().map(|&v| run_one(v)).collect())
}

pub fn cmd_sweep(source: &str, param: SweepParam, values: &[f64], out_dir: &Path, settings: &Settings) -> Exit {
    if values.is_empty() {
        eprintln!("error: a sweep needs at least one value");
        return Exit::Parse;
    }
    let text = match read_source(source) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Parse;
        }
    };
    let rows = match sweep_rows(&text, settings, param, values) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Parse;
        }
    };
    let name = rows
        .iter()
        .find_map(|(_, o)| o.as_ref().map(|(l, _)| l.scenario.name.clone()))
        .unwrap_or_else(|| "sweep".into());
    let dir = out_dir.join(format!("{name}-sweep-{}", param_name(param)));
    let result = (|| -> std::io::Result<()> {
        fs::create_dir_all(&dir)?;
        for (i, (_, run)) in rows.iter().enumerate() {
            if let Some((loaded, outcome)) = run {
                write_outputs(outcome, loaded, settings, &run_dir(&dir, i))?;
            }
        }
        let table: Vec<Vec<f64>> = rows
            .iter()
            .map(|(r, _)| {
                vec![
                    r.value,
                    r.final_h_norm,
                    r.min_apriori_margin,
                    if r.certified { 1.0 } else { 0.0 },
                    r.decoupling_metric,
                    r.no_memory_deviation,
                    r.reference_error,
                ]
            })
            .collect();
        write_table(
            &dir.join("summary.csv"),
            &[
                "value",
                "final_h_norm",
                "min_apriori_margin",
                "certified",
                "decoupling_metric",
                "no_memory_deviation",
                "reference_error",
            ],
            &table,
        )
    })();
    if let Err(e) = result {
        eprintln!("error: cannot write sweep outputs to {}: {e}", dir.display());
        return Exit::Solve;
    }
    println!("{:>14} {:>10} {:>14} {:>14} {:>14}", param_name(param), "status", "final |v|_H", "decoupling", "ref. error");
    for (r, _) in &rows {
        println!(
            "{:>14.6e} {:>10} {:>14.6e} {:>14.6e} {:>14.6e}",
            r.value,
            format!("{:?}", r.exit),
            r.final_h_norm,
            r.decoupling_metric,
            r.reference_error
        );
    }
    if rows.iter().all(|(r, _)| r.certified) {
        Exit::Ok
    } else {
        Exit::Certificate
    }
}

fn param_name(p: SweepParam) -> &'static str {
    match p {
        SweepParam::Lambda => "lambda",
        SweepParam::Tau => "tau",
        SweepParam::P => "p",
        SweepParam::S => "s",
    }
}

fn run_dir(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("run-{index:03}"))
}
