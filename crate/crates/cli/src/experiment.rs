use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cmop_core::cmat::frob_norm;
use cmop_core::diagnostics::{
    kkt_check_default, monitor_lemma2, monitor_lemma4, monitor_lipschitz, monitor_thm2, monitor_thm3,
};
use cmop_core::projection::project_rows;
use cmop_core::sample::{random_feasible, random_matrix, Prng};
use cmop_core::solvers::{
    active_set_oracle, gd_solve, pgd_solve, real_augmented_pgd, resolve_alpha, Mode, ORACLE_MAX_N,
};
use cmop_core::{
    ComplexMatrix, IterationRecord, KktReport, MonitorReport, Precomputed, ProblemInstance, RowBall, SolveResult,
    SolverConfig, StepSize, StopReason,
};

use crate::error::{CliError, CliResult};
use crate::instance::{load_instance, SolutionFile};
use crate::trace::{read_trace, trace_to_csv, write_trace};

/// Accuracy and iteration budget of the oracle's multiplier solve.
pub const ORACLE_INNER_TOL: f64 = 1e-12;
pub const ORACLE_INNER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Gd,
    Pgd,
    Closed,
    Oracle,
    RealAugmented,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Pgd => "pgd",
            Method::Closed => "closed",
            Method::Oracle => "oracle",
            Method::RealAugmented => "real-augmented",
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            Method::Gd | Method::Closed => Mode::Gd,
            _ => Mode::Pgd,
        }
    }

    fn is_iterative(self) -> bool {
        matches!(self, Method::Gd | Method::Pgd | Method::RealAugmented)
    }
}

/// A step size as typed on the command line: a literal number, or
/// `f<frac>` for that fraction of the method's guaranteed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    Fixed(f64),
    Fraction(f64),
}

impl AlphaSpec {
    pub fn step(self, mode: Mode) -> StepSize {
        match self {
            AlphaSpec::Fixed(a) => StepSize::Fixed(a),
            AlphaSpec::Fraction(f) => StepSize::fraction_of_interval(mode, f),
        }
    }
}

impl FromStr for AlphaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (frac, body) = match s.strip_prefix('f') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let v: f64 = body
            .parse()
            .map_err(|_| format!("alpha: expected a number or f<fraction>, got `{s}`"))?;
        if frac {
            if !(v > 0.0 && v < 1.0) {
                return Err(format!("alpha: fraction must lie in (0, 1), got {v}"));
            }
            Ok(AlphaSpec::Fraction(v))
        } else {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("alpha: step must be positive, got {v}"));
            }
            Ok(AlphaSpec::Fixed(v))
        }
    }
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Fixed(a) => write!(f, "{a}"),
            AlphaSpec::Fraction(x) => write!(f, "f{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub method: Method,
    pub alpha: AlphaSpec,
    pub tau: f64,
    pub max_iter: usize,
    pub timing: bool,
}

impl RunOptions {
    pub fn new(method: Method, alpha: AlphaSpec) -> Self {
        Self {
            method,
            alpha,
            tau: 1e-14,
            max_iter: 1_000_000,
            timing: false,
        }
    }

    fn config(&self, iterates: bool) -> SolverConfig {
        SolverConfig::new(self.alpha.step(self.method.mode()))
            .tau(self.tau)
            .max_iter(self.max_iter)
            .record_iterates(iterates)
            .record_timing(self.timing)
    }
}

/// An instance with its cached normal-equation data and feasible set.
pub struct Setup {
    pub instance: ProblemInstance,
    pub pre: Precomputed,
    pub ball: RowBall,
}

impl Setup {
    /// With `radius_is_eta` the row radius is `eta` itself rather than
    /// `sqrt(eta)`, i.e. the power budget becomes `eta^2`.
    pub fn new(instance: ProblemInstance, radius_is_eta: bool) -> CliResult<Self> {
        let instance = if radius_is_eta {
            let eta = instance.eta();
            instance.with_eta(eta * eta)?
        } else {
            instance
        };
        let pre = Precomputed::new(&instance)?;
        let ball = RowBall::from_eta(instance.eta())?;
        Ok(Self { instance, pre, ball })
    }

    pub fn load(path: &Path, radius_is_eta: bool) -> CliResult<Self> {
        Self::new(load_instance(path)?, radius_is_eta)
    }

    pub fn zero(&self) -> ComplexMatrix {
        ComplexMatrix::zeros(self.instance.n(), self.instance.k())
    }

    pub fn oracle(&self) -> CliResult<SolveResult> {
        Ok(active_set_oracle(&self.pre, &self.instance, ORACLE_INNER_TOL, ORACLE_INNER_MAX_ITER)?.result)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub method: Method,
    pub result: SolveResult,
    pub lipschitz: f64,
}

impl RunOutcome {
    pub fn diverged(&self) -> bool {
        self.result.stop_reason == StopReason::Diverged
    }

    /// Fixed steps outside the guaranteed interval still run; this is the
    /// message to show for them.
    pub fn warning(&self) -> Option<String> {
        if self.method.is_iterative() && !self.result.alpha_in_interval {
            let end = match self.method.mode() {
                Mode::Gd => "2/L",
                Mode::Pgd => "1/L",
            };
            Some(format!(
                "warning: alpha = {} is outside the guaranteed interval (0, {end}) with {end} = {}",
                self.result.alpha,
                self.method.mode().interval_end(self.lipschitz)
            ))
        } else {
            None
        }
    }

    pub fn summary_line(&self) -> String {
        let r = &self.result;
        let (alpha, inside) = if self.method.is_iterative() {
            (r.alpha.to_string(), r.alpha_in_interval.to_string())
        } else {
            ("-".to_string(), "-".to_string())
        };
        format!(
            "method={} objective={} iterations={} stop_reason={} alpha={} lipschitz={} in_interval={}",
            self.method.as_str(),
            r.objective,
            r.iterations,
            r.stop_reason,
            alpha,
            self.lipschitz,
            inside
        )
    }
}

pub fn run_method(setup: &Setup, opts: &RunOptions, record_iterates: bool) -> CliResult<RunOutcome> {
    let (pre, inst) = (&setup.pre, &setup.instance);
    let w0 = setup.zero();
    let cfg = opts.config(record_iterates);
    let result = match opts.method {
        Method::Gd => gd_solve(pre, inst, &w0, &cfg)?,
        Method::Pgd => pgd_solve(pre, inst, &w0, &setup.ball, &cfg)?,
        Method::RealAugmented => real_augmented_pgd(inst, &w0, &setup.ball, &cfg, pre.lipschitz())?,
        Method::Oracle => setup.oracle()?,
        Method::Closed => {
            let w = pre.closed_form_unconstrained()?;
            let objective = inst.objective(&w)?;
            SolveResult {
                iterates: if record_iterates { vec![w.clone()] } else { Vec::new() },
                w_final: w,
                objective,
                iterations: 0,
                converged: true,
                stop_reason: StopReason::Exact,
                alpha: 0.0,
                alpha_in_interval: true,
                trace: Vec::new(),
            }
        }
    };
    Ok(RunOutcome {
        method: opts.method,
        result,
        lipschitz: pre.lipschitz(),
    })
}

/// `solve`: runs one method, optionally writing the trace CSV and the
/// solution document.
pub fn run_experiment(
    instance_path: &Path,
    opts: &RunOptions,
    radius_is_eta: bool,
    trace_path: Option<&Path>,
    solution_path: Option<&Path>,
) -> CliResult<RunOutcome> {
    let setup = Setup::load(instance_path, radius_is_eta)?;
    let outcome = run_method(&setup, opts, false)?;
    if let Some(path) = trace_path {
        write_trace(path, &outcome.result.trace)?;
    }
    if let Some(path) = solution_path {
        let r = &outcome.result;
        let alpha = opts.method.is_iterative().then_some(r.alpha);
        SolutionFile::new(
            opts.method.as_str(),
            &r.w_final,
            r.objective,
            r.iterations,
            r.stop_reason.as_str(),
            alpha,
            outcome.lipschitz,
        )
        .write(path)?;
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Source {
    Gd,
    Pgd,
    Oracle,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MonitorTag {
    Thm2,
    Thm3,
    Lemma2,
    /// The Lipschitz bound.
    Lemma3,
    Lemma4,
    Kkt,
}

#[derive(Debug, Clone)]
pub struct CheckOptions {
    pub source: Source,
    pub monitors: Vec<MonitorTag>,
    pub alpha: AlphaSpec,
    pub tau: f64,
    pub max_iter: usize,
    /// Solution document for `Source::File`.
    pub w_path: Option<PathBuf>,
    /// Trace CSV accompanying `Source::File`, needed for `thm2`.
    pub trace_path: Option<PathBuf>,
    /// Optimum for `thm3`; computed by the oracle when absent.
    pub w_opt_path: Option<PathBuf>,
    /// Seed of the sampled monitors (`lemma2`, `lemma3`, `lemma4`).
    pub seed: u64,
    pub radius_is_eta: bool,
}

impl CheckOptions {
    pub fn new(source: Source, monitors: Vec<MonitorTag>) -> Self {
        Self {
            source,
            monitors,
            alpha: AlphaSpec::Fraction(0.5),
            tau: 1e-14,
            max_iter: 1_000_000,
            w_path: None,
            trace_path: None,
            w_opt_path: None,
            seed: 0,
            radius_is_eta: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub reports: Vec<MonitorReport>,
    pub kkt: Option<KktReport>,
    pub lines: Vec<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed) && self.kkt.as_ref().is_none_or(|k| k.passed)
    }

    pub fn report_text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

pub const LEMMA2_PAIRS: usize = 100;
pub const LEMMA3_SAMPLES: usize = 1000;
pub const LEMMA4_PAIRS: usize = 500;

struct Subject {
    w: ComplexMatrix,
    trace: Vec<IterationRecord>,
    iterates: Vec<ComplexMatrix>,
    alpha: Option<f64>,
}

fn subject(setup: &Setup, opts: &CheckOptions) -> CliResult<Subject> {
    let needs_iterates = opts.monitors.contains(&MonitorTag::Thm3);
    let run = |method| -> CliResult<Subject> {
        let ro = RunOptions {
            tau: opts.tau,
            max_iter: opts.max_iter,
            ..RunOptions::new(method, opts.alpha)
        };
        let r = run_method(setup, &ro, needs_iterates && method == Method::Pgd)?.result;
        Ok(Subject {
            w: r.w_final,
            trace: r.trace,
            iterates: r.iterates,
            alpha: Some(r.alpha),
        })
    };
    match opts.source {
        Source::Gd => run(Method::Gd),
        Source::Pgd => run(Method::Pgd),
        Source::Oracle => Ok(Subject {
            w: setup.oracle()?.w_final,
            trace: Vec::new(),
            iterates: Vec::new(),
            alpha: None,
        }),
        Source::File => {
            let path = opts
                .w_path
                .as_ref()
                .ok_or_else(|| CliError::Input("--w is required with --source file".into()))?;
            let w = SolutionFile::read_matrix(path)?;
            setup.instance.check_variable(&w, "check")?;
            let trace = match &opts.trace_path {
                Some(p) => read_trace(p)?,
                None => Vec::new(),
            };
            let alpha = resolve_alpha(
                &SolverConfig::new(opts.alpha.step(Mode::Gd)),
                setup.pre.lipschitz(),
                Mode::Gd,
            )?
            .alpha;
            Ok(Subject {
                w,
                trace,
                iterates: Vec::new(),
                alpha: Some(alpha),
            })
        }
    }
}

fn w_opt(setup: &Setup, opts: &CheckOptions) -> CliResult<ComplexMatrix> {
    if let Some(path) = &opts.w_opt_path {
        let w = SolutionFile::read_matrix(path)?;
        setup.instance.check_variable(&w, "check")?;
        return Ok(w);
    }
    if setup.instance.n() > ORACLE_MAX_N {
        return Err(CliError::Input(format!(
            "thm3 needs the constrained optimum W_opt, and the active-set oracle only runs for N <= {ORACLE_MAX_N}; \
             pass --w-opt with a solution file, e.g. one written by `cmop solve --method pgd --tau 1e-16 -o wopt.json`"
        )));
    }
    setup.oracle().map(|r| r.w_final).map_err(|e| {
        CliError::Input(format!(
            "thm3 needs the constrained optimum W_opt and the active-set oracle failed ({e}); \
             pass --w-opt with a solution file produced by `cmop solve -o`"
        ))
    })
}

fn monitor_lines(report: &MonitorReport) -> Vec<String> {
    let mut lines = vec![format!(
        "# monitor {} passed={} checks={} violations={} worst_slack={:e}",
        report.name.as_str(),
        report.passed,
        report.checks,
        report.violations.len(),
        report.worst_slack
    )];
    lines.extend(report.violation_lines());
    lines
}

fn kkt_lines(k: &KktReport) -> Vec<String> {
    let lambda: Vec<String> = k.lambda_hat.iter().map(|l| l.to_string()).collect();
    vec![
        format!(
            "# monitor kkt passed={} stationarity={:e} primal={:e} dual={:e} complementarity={:e}",
            k.passed, k.stationarity_residual, k.primal_violation, k.dual_violation, k.complementarity
        ),
        format!("# lambda_hat {}", lambda.join(",")),
    ]
}

/// `check`: evaluates the requested monitors on a solution and its trace.
pub fn check_setup(setup: &Setup, opts: &CheckOptions) -> CliResult<CheckOutcome> {
    if opts.monitors.is_empty() {
        return Err(CliError::Input("monitors: at least one monitor is required".into()));
    }
    let iterative_source = matches!(opts.source, Source::Gd | Source::File);
    if opts.monitors.contains(&MonitorTag::Thm2) && !iterative_source {
        return Err(CliError::Input(
            "monitors: thm2 checks a gradient-descent trace; use --source gd or --source file --trace".into(),
        ));
    }
    if opts.monitors.contains(&MonitorTag::Thm3) && opts.source != Source::Pgd {
        return Err(CliError::Input(
            "monitors: thm3 checks projected-descent iterates; use --source pgd".into(),
        ));
    }
    let subj = subject(setup, opts)?;
    let (pre, inst, ball) = (&setup.pre, &setup.instance, &setup.ball);
    let lipschitz = pre.lipschitz();
    let (n, k) = (inst.n(), inst.k());
    let mut reports = Vec::new();
    let mut kkt = None;
    let mut lines = Vec::new();

    for tag in &opts.monitors {
        match tag {
            MonitorTag::Thm2 => {
                let alpha = subj.alpha.expect("iterative source");
                let r = monitor_thm2(&subj.trace, alpha, lipschitz)?;
                lines.extend(monitor_lines(&r));
                reports.push(r);
            }
            MonitorTag::Thm3 => {
                let alpha = subj.alpha.expect("iterative source");
                let opt = w_opt(setup, opts)?;
                let (dec, fej) = monitor_thm3(&subj.trace, &subj.iterates, &opt, alpha, lipschitz)?;
                lines.extend(monitor_lines(&dec));
                lines.extend(monitor_lines(&fej));
                reports.push(dec);
                reports.push(fej);
            }
            MonitorTag::Lemma2 => {
                let mut rng = Prng::new(opts.seed);
                let scale = ball.radius();
                let pairs: Vec<_> = (0..LEMMA2_PAIRS)
                    .map(|_| (random_matrix(&mut rng, n, k, scale), random_matrix(&mut rng, n, k, scale)))
                    .collect();
                let r = monitor_lemma2(pre, inst, &pairs)?;
                lines.extend(monitor_lines(&r));
                reports.push(r);
            }
            MonitorTag::Lemma3 => {
                let r = monitor_lipschitz(inst.h(), lipschitz, LEMMA3_SAMPLES, opts.seed, k)?.report;
                lines.extend(monitor_lines(&r));
                reports.push(r);
            }
            MonitorTag::Lemma4 => {
                let mut rng = Prng::new(opts.seed);
                // Rows of V straddle the boundary: mean squared norm 1.5 r^2.
                let spread = 1.5 * ball.radius() / (k as f64).sqrt();
                let mut pairs: Vec<_> = (0..LEMMA4_PAIRS)
                    .map(|_| (random_matrix(&mut rng, n, k, spread), random_feasible(&mut rng, n, k, ball.radius())))
                    .collect();
                pairs.push((subj.w.clone(), project_rows(&subj.w, ball)));
                let r = monitor_lemma4(ball, &pairs)?;
                lines.extend(monitor_lines(&r));
                reports.push(r);
            }
            MonitorTag::Kkt => {
                let report = kkt_check_default(pre, inst, &subj.w)?;
                lines.extend(kkt_lines(&report));
                kkt = Some(report);
            }
        }
    }
    Ok(CheckOutcome { reports, kkt, lines })
}

pub fn run_check(instance_path: &Path, opts: &CheckOptions, report_path: Option<&Path>) -> CliResult<CheckOutcome> {
    let setup = Setup::load(instance_path, opts.radius_is_eta)?;
    let outcome = check_setup(&setup, opts)?;
    if let Some(path) = report_path {
        fs::write(path, outcome.report_text()).map_err(|e| CliError::io(path, e))?;
    }
    Ok(outcome)
}

/// Objective the iterative methods converge to: the unconstrained optimum
/// for `gd`, the active-set optimum for the projected methods.
pub fn limiting_objective(setup: &Setup, method: Method) -> CliResult<f64> {
    match method.mode() {
        Mode::Gd => Ok(setup.instance.objective(&setup.pre.closed_form_unconstrained()?)?),
        Mode::Pgd => Ok(setup.oracle()?.objective),
    }
}

/// First `t` with `F(W^t)` within `rel` (relative) of `limit`, counting the
/// final iterate `W^T` as `t = T`.
pub fn iterations_to_reach(result: &SolveResult, limit: f64, rel: f64) -> Option<usize> {
    let scale = if limit != 0.0 { limit.abs() } else { 1.0 };
    let close = |f: f64| (f - limit) / scale <= rel;
    result
        .trace
        .iter()
        .position(|r| close(r.objective))
        .or_else(|| close(result.objective).then_some(result.iterations))
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub method: Method,
    pub alphas: Vec<AlphaSpec>,
    pub tau: f64,
    pub max_iter: usize,
    /// Relative distance to the limiting objective that counts as reached.
    pub threshold: f64,
}

impl SweepOptions {
    pub fn new(method: Method, alphas: Vec<AlphaSpec>) -> Self {
        Self {
            method,
            alphas,
            tau: 1e-14,
            max_iter: 1_000_000,
            threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub spec: AlphaSpec,
    pub outcome: Result<RunOutcome, String>,
    pub iterations_to_threshold: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub limit_objective: f64,
    pub entries: Vec<SweepEntry>,
}

pub const SUMMARY_HEADER: &str =
    "alpha_spec,alpha,in_interval,iterations,iterations_to_threshold,final_objective,limit_objective,stop_reason,trace_file,error";

impl Sweep {
    pub fn trace_file(i: usize) -> String {
        format!("trace_{i:02}.csv")
    }

    pub fn summary_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(SUMMARY_HEADER.split(',')).expect("in-memory write");
        let limit = self.limit_objective.to_string();
        for (i, e) in self.entries.iter().enumerate() {
            let to_thr = e.iterations_to_threshold.map_or(String::new(), |t| t.to_string());
            let record = match &e.outcome {
                Ok(o) => vec![
                    e.spec.to_string(),
                    o.result.alpha.to_string(),
                    o.result.alpha_in_interval.to_string(),
                    o.result.iterations.to_string(),
                    to_thr,
                    o.result.objective.to_string(),
                    limit.clone(),
                    o.result.stop_reason.to_string(),
                    Self::trace_file(i),
                    String::new(),
                ],
                Err(msg) => vec![
                    e.spec.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    to_thr,
                    String::new(),
                    limit.clone(),
                    String::new(),
                    String::new(),
                    msg.clone(),
                ],
            };
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

pub fn sweep_setup(setup: &Setup, opts: &SweepOptions) -> CliResult<Sweep> {
    if !opts.method.is_iterative() {
        return Err(CliError::Input(format!(
            "method: sweep needs an iterative method (gd, pgd, real-augmented), got {}",
            opts.method.as_str()
        )));
    }
    if opts.alphas.is_empty() {
        return Err(CliError::Input("alphas: at least one step size is required".into()));
    }
    let limit = limiting_objective(setup, opts.method)?;
    let entries = opts
        .alphas
        .iter()
        .map(|&spec| {
            let ro = RunOptions {
                tau: opts.tau,
                max_iter: opts.max_iter,
                ..RunOptions::new(opts.method, spec)
            };
            match run_method(setup, &ro, false) {
                Ok(o) => SweepEntry {
                    spec,
                    iterations_to_threshold: iterations_to_reach(&o.result, limit, opts.threshold),
                    outcome: Ok(o),
                },
                Err(e) => SweepEntry {
                    spec,
                    outcome: Err(e.to_string()),
                    iterations_to_threshold: None,
                },
            }
        })
        .collect();
    Ok(Sweep {
        limit_objective: limit,
        entries,
    })
}

/// `sweep`: one trace per step size plus `summary.csv` in `out_dir`.
pub fn run_sweep(instance_path: &Path, opts: &SweepOptions, radius_is_eta: bool, out_dir: &Path) -> CliResult<Sweep> {
    let setup = Setup::load(instance_path, radius_is_eta)?;
    let sweep = sweep_setup(&setup, opts)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    for (i, e) in sweep.entries.iter().enumerate() {
        if let Ok(o) = &e.outcome {
            let path = out_dir.join(Sweep::trace_file(i));
            fs::write(&path, trace_to_csv(&o.result.trace)).map_err(|err| CliError::io(&path, err))?;
        }
    }
    let summary = out_dir.join("summary.csv");
    fs::write(&summary, sweep.summary_csv()).map_err(|e| CliError::io(&summary, e))?;
    Ok(sweep)
}

/// Relative Frobenius distance `||x - y|| / ||y||`.
pub fn relative_distance(x: &ComplexMatrix, y: &ComplexMatrix) -> CliResult<f64> {
    let d = frob_norm(&x.sub(y)?);
    let s = frob_norm(y);
    Ok(if s > 0.0 { d / s } else { d })
}
