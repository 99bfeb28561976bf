//! Config-driven experiments: a TOML [`ExperimentSpec`] describes a problem,
//! a stepsize rule, a start point and a list of declarative checks;
//! [`run_experiment`] solves it, evaluates every check and writes
//! `<name>.trace.csv`, `<name>.bounds.csv` and `<name>.summary.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    check_beta_bound, curvature_bound_modulus, curvature_refinement, default_gamma_grid, estimate_curvature,
    fit_rate, open_loop_delta, rate_bound_harmonic, rate_bound_line_search, rate_bound_open_loop, CurvatureEstimate,
    RateBound, DEFAULT_SAFETY_FACTOR,
};
use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::objectives::{modulus_of_continuity, CompositePart, ObjectiveKind};
use crate::solver::{
    composite_lmo, fingerprint, format_float, solve, solve_gpa, Problem, ProblemSpec, SolveTrace, StopRule,
    TerminationReason, TraceSummary,
};
use crate::stepsize::{validate_open_loop, StepsizeRule};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FWKIT_OUT_DIR";

/// Header of `<name>.bounds.csv`.
pub const BOUNDS_CSV_HEADER: &str = "k,bound";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    FrankWolfe,
    ProjectedGradient { step: f64 },
}

/// `x0` as an explicit vector, `"vertex(i)"`, `"sample(n)"`, or
/// `"sample(seed)"` for the experiment seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StartPoint {
    Vector(Vec<f64>),
    Named(String),
}

impl StartPoint {
    pub fn resolve(&self, set: &FeasibleSet<f64>, seed: u64) -> Result<Vec<f64>> {
        let bad = |reason: &str| Error::InvalidDescriptor { field: "x0".into(), reason: reason.into() };
        match self {
            StartPoint::Vector(v) => Ok(v.clone()),
            StartPoint::Named(s) => {
                let s = s.trim();
                let arg = |prefix: &str| s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')).map(str::trim);
                if let Some(i) = arg("vertex(") {
                    let i = i.parse().map_err(|_| bad("vertex index must be a nonnegative integer"))?;
                    set.vertex(i)
                } else if let Some(n) = arg("sample(") {
                    let n = if n == "seed" { seed } else { n.parse().map_err(|_| bad("sample seed must be an integer"))? };
                    Ok(set.sample(n))
                } else {
                    Err(bad("expected a vector, \"vertex(i)\" or \"sample(seed)\""))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureSettings {
    pub sigma: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub gamma_grid: Option<Vec<f64>>,
    #[serde(default = "default_safety")]
    pub safety_factor: f64,
    /// Known constant; bounds use it instead of the inflated sample.
    #[serde(default)]
    pub value: Option<f64>,
}

fn default_samples() -> usize {
    2000
}
fn default_safety() -> f64 {
    DEFAULT_SAFETY_FACTOR
}
fn one() -> usize {
    1
}
fn half() -> f64 {
    0.5
}
fn rel_tol() -> f64 {
    1e-6
}
fn threshold() -> f64 {
    1e3
}
fn decades() -> u32 {
    12
}
fn hundred() -> usize {
    100
}
fn grid_points() -> usize {
    2001
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    LineSearch,
    OpenLoop,
    /// `(k + 1)` denominator, for the composite method.
    OpenLoopShifted,
    HarmonicClassic,
}

/// Declarative assertions evaluated against a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// `obj_k − opt ≤ bound(k)(1 + rel_tol) + abs_tol` for `from_k ≤ k ≤ to_k`.
    BoundDomination {
        bound: BoundForm,
        #[serde(default)]
        sigma: Option<f64>,
        #[serde(default)]
        c_sigma: Option<f64>,
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default = "one")]
        from_k: usize,
        #[serde(default)]
        to_k: Option<usize>,
        #[serde(default = "rel_tol")]
        rel_tol: f64,
        #[serde(default)]
        abs_tol: f64,
    },
    /// `obj_k − opt ≥ scale/(k + offset) − tol`.
    LowerBound {
        scale: f64,
        #[serde(default = "one_f")]
        offset: f64,
        #[serde(default = "one")]
        from_k: usize,
        #[serde(default)]
        to_k: Option<usize>,
        #[serde(default)]
        tol: f64,
    },
    /// `obj_{k+1} ≤ obj_k + tol`.
    Monotonicity {
        #[serde(default)]
        tol: f64,
    },
    FiniteTermination {
        #[serde(default)]
        expected_k: Option<usize>,
        #[serde(default)]
        expected_x: Option<Vec<f64>>,
        #[serde(default = "tiny")]
        tol: f64,
    },
    /// `min_{from_k ≤ k ≤ to_k} obj_k − opt ≥ margin`.
    NonConvergenceMargin {
        margin: f64,
        #[serde(default)]
        from_k: usize,
        #[serde(default)]
        to_k: Option<usize>,
    },
    RateSlope {
        max_slope: f64,
        #[serde(default = "half")]
        tail_fraction: f64,
    },
    FinalSuboptimality {
        tol: f64,
    },
    /// Sampled curvature (the `curvature` settings) within `tol` of `expected`.
    CurvatureValue {
        expected: f64,
        tol: f64,
    },
    /// Refinement probe of the order-`sigma` curvature exceeds `threshold`.
    CurvatureDivergence {
        sigma: f64,
        #[serde(default = "threshold")]
        threshold: f64,
        #[serde(default = "decades")]
        max_decades: u32,
        #[serde(default = "hundred")]
        n_samples: usize,
    },
    /// DH schedule envelope of the experiment's rule up to `horizon`.
    ScheduleBounds {
        horizon: usize,
    },
    /// `β_k ≤ σ^σ/k^(σ−1)` for the rule's β-recursion up to `horizon`.
    BetaBound {
        sigma: f64,
        horizon: usize,
    },
    /// Composite oracle on box + ℓ1 against a per-coordinate grid search on
    /// random cost vectors.
    CompositeOracleGrid {
        #[serde(default = "hundred")]
        n_costs: usize,
        #[serde(default = "grid_points")]
        grid_points: usize,
        #[serde(default = "tiny_grid")]
        tol: f64,
    },
}

fn one_f() -> f64 {
    1.0
}
fn tiny() -> f64 {
    1e-12
}
fn tiny_grid() -> f64 {
    1e-6
}

impl Check {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Check::BoundDomination { .. } => "bound_domination",
            Check::LowerBound { .. } => "lower_bound",
            Check::Monotonicity { .. } => "monotonicity",
            Check::FiniteTermination { .. } => "finite_termination",
            Check::NonConvergenceMargin { .. } => "non_convergence_margin",
            Check::RateSlope { .. } => "rate_slope",
            Check::FinalSuboptimality { .. } => "final_suboptimality",
            Check::CurvatureValue { .. } => "curvature_value",
            Check::CurvatureDivergence { .. } => "curvature_divergence",
            Check::ScheduleBounds { .. } => "schedule_bounds",
            Check::BetaBound { .. } => "beta_bound",
            Check::CompositeOracleGrid { .. } => "composite_oracle_grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub problem: ProblemSpec<f64>,
    #[serde(default)]
    pub rule: Option<StepsizeRule<f64>>,
    #[serde(default)]
    pub algorithm: Algorithm,
    pub x0: StartPoint,
    pub stop: StopRule<f64>,
    #[serde(default)]
    pub checks: Vec<Check>,
    /// Sharp-minimum constant `α` with `f(x) ≥ f* + α‖x − x*‖`.
    #[serde(default)]
    pub sharp_alpha: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub curvature: Option<CurvatureSettings>,
    /// Optimal value, when the problem has no closed-form optimum.
    #[serde(default)]
    pub optimum: Option<f64>,
}

/// A file holding several experiments as `[[experiment]]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBatch {
    pub experiment: Vec<ExperimentSpec>,
}

/// Command-line overrides applied on top of a spec.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
}

fn descriptor(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidDescriptor { field: field.into(), reason: reason.into() }
}

fn check_sigma_field(field: String, sigma: f64) -> Result<()> {
    if sigma > 1.0 && sigma <= 2.0 {
        Ok(())
    } else {
        Err(descriptor(field, "need 1 < sigma <= 2"))
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(m) = o.max_iter {
            self.stop.max_iter = m;
        }
        self
    }

    /// Checks every field, naming the offending one.
    pub fn validate(&self) -> Result<Problem<f64>> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(descriptor("name", "need a nonempty name of [A-Za-z0-9_.-]"));
        }
        let problem = Problem::from_spec(&self.problem).map_err(|e| descriptor("problem", e.to_string()))?;
        match (&self.algorithm, &self.rule) {
            (Algorithm::FrankWolfe, None) => return Err(descriptor("rule", "frank_wolfe needs a stepsize rule")),
            (Algorithm::FrankWolfe, Some(r)) => r.validate().map_err(|e| descriptor("rule", e.to_string()))?,
            (Algorithm::ProjectedGradient { step }, _) => {
                if !(*step > 0.0) {
                    return Err(descriptor("algorithm.step", "need step > 0"));
                }
            }
        }
        if self.stop.max_iter == 0 {
            return Err(descriptor("stop.max_iter", "need max_iter >= 1"));
        }
        if !(self.stop.gap_tol >= 0.0) {
            return Err(descriptor("stop.gap_tol", "need gap_tol >= 0"));
        }
        if let Some(a) = self.sharp_alpha {
            if !(a > 0.0) {
                return Err(descriptor("sharp_alpha", "need alpha > 0"));
            }
        }
        if let Some(c) = &self.curvature {
            check_sigma_field("curvature.sigma".into(), c.sigma)?;
            if c.n_samples == 0 {
                return Err(descriptor("curvature.n_samples", "need at least one sample"));
            }
            if !(c.safety_factor >= 1.0) {
                return Err(descriptor("curvature.safety_factor", "need safety_factor >= 1"));
            }
            if matches!(c.value, Some(v) if !(v > 0.0)) {
                return Err(descriptor("curvature.value", "need a positive constant"));
            }
        }
        for (i, check) in self.checks.iter().enumerate() {
            let field = |f: &str| format!("checks[{i}].{f}");
            match check {
                Check::BoundDomination { sigma, c_sigma, delta, rel_tol, abs_tol, .. } => {
                    if let Some(s) = sigma {
                        check_sigma_field(field("sigma"), *s)?;
                    }
                    if matches!(delta, Some(d) if !(*d > 0.0)) {
                        return Err(descriptor(field("delta"), "need Delta > 0"));
                    }
                    if matches!(c_sigma, Some(c) if !(*c > 0.0)) {
                        return Err(descriptor(field("c_sigma"), "need C_sigma > 0"));
                    }
                    if !(*rel_tol >= 0.0 && *abs_tol >= 0.0) {
                        return Err(descriptor(field("rel_tol"), "tolerances must be nonnegative"));
                    }
                }
                Check::RateSlope { tail_fraction, .. } => {
                    if !(*tail_fraction > 0.0 && *tail_fraction <= 1.0) {
                        return Err(descriptor(field("tail_fraction"), "need 0 < tail_fraction <= 1"));
                    }
                }
                Check::CurvatureValue { tol, .. } => {
                    if self.curvature.is_none() {
                        return Err(descriptor("curvature", "curvature_value needs curvature settings"));
                    }
                    if !(*tol >= 0.0) {
                        return Err(descriptor(field("tol"), "need tol >= 0"));
                    }
                }
                Check::CurvatureDivergence { sigma, .. } | Check::BetaBound { sigma, .. } => {
                    check_sigma_field(field("sigma"), *sigma)?
                }
                Check::LowerBound { offset, .. } if !(*offset > 0.0) => {
                    return Err(descriptor(field("offset"), "need offset > 0"));
                }
                _ => {}
            }
        }
        Ok(problem)
    }
}

/// Parses a file holding either one experiment or an `[[experiment]]` batch.
pub fn load_specs(path: &Path) -> Result<Vec<ExperimentSpec>> {
    let text = fs::read_to_string(path)?;
    parse_specs(&text)
}

pub fn parse_specs(text: &str) -> Result<Vec<ExperimentSpec>> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    if value.contains_key("experiment") {
        let batch: ExperimentBatch = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(batch.experiment)
    } else {
        Ok(vec![ExperimentSpec::from_toml(text)?])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub kind: String,
    pub passed: bool,
    pub measured: f64,
    pub required: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(kind: &str, passed: bool, measured: f64, required: f64, detail: impl Into<String>) -> Self {
        CheckResult { kind: kind.into(), passed, measured, required, detail: detail.into() }
    }

    fn failed(kind: &str, detail: impl Into<String>) -> Self {
        Self::new(kind, false, f64::NAN, f64::NAN, detail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub trace: TraceSummary,
    pub optimum: Option<f64>,
    pub curvature: Option<CurvatureEstimate<f64>>,
    pub bounds: Vec<RateBound<f64>>,
    pub seed: u64,
    pub spec_fingerprint: String,
    pub spec: ExperimentSpec,
    /// Full paths in memory; the summary records bare file names so that it
    /// does not depend on where it was written.
    #[serde(serialize_with = "file_names", skip_deserializing)]
    pub outputs: Vec<PathBuf>,
}

fn file_names<S: serde::Serializer>(paths: &[PathBuf], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(paths.iter().map(|p| p.file_name().map_or_else(|| p.to_string_lossy(), |n| n.to_string_lossy())))
}

/// What [`run_experiment`] computes before anything is written.
pub struct Evaluation {
    pub report: ExperimentReport,
    pub trace: SolveTrace<f64>,
    pub bound_curves: Vec<Vec<f64>>,
}

/// Solves `spec` and evaluates its checks without touching the filesystem.
pub fn evaluate(spec: &ExperimentSpec) -> Result<Evaluation> {
    let problem = spec.validate()?;
    let x0 = spec.x0.resolve(&problem.set, spec.seed)?;
    let trace = match (&spec.algorithm, &spec.rule) {
        (Algorithm::FrankWolfe, Some(rule)) => solve(&problem, rule, &x0, &spec.stop)?,
        (Algorithm::ProjectedGradient { step }, _) => solve_gpa(&problem, *step, &x0, spec.stop.max_iter)?,
        (Algorithm::FrankWolfe, None) => unreachable!("validated"),
    };
    let opt = spec.optimum.or_else(|| problem.known_optimum().map(|o| o.f_star));

    let curvature = match &spec.curvature {
        Some(c) => Some(curvature_for(&problem, c, spec.seed)?),
        None => None,
    };
    let mut ctx = Ctx { spec, problem: &problem, trace: &trace, opt, curvature: curvature.clone(), bounds: Vec::new() };
    let checks: Vec<CheckResult> = spec.checks.iter().map(|c| ctx.run(c)).collect();

    let last_k = trace.iterations.last().map_or(0, |r| r.k);
    let bound_curves = ctx.bounds.iter().map(|b| (0..=last_k).map(|k| b.bound(k)).collect()).collect();
    let report = ExperimentReport {
        name: spec.name.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        trace: trace.summary(),
        optimum: opt,
        curvature: ctx.curvature,
        bounds: ctx.bounds,
        seed: spec.seed,
        spec_fingerprint: fingerprint(spec),
        spec: spec.clone(),
        outputs: Vec::new(),
    };
    Ok(Evaluation { report, trace, bound_curves })
}

/// Runs `spec` and writes its trace, bound curves and JSON summary to
/// `out_dir`. A failing check does not stop the remaining ones.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ExperimentReport> {
    let Evaluation { mut report, trace, bound_curves } = evaluate(spec)?;
    fs::create_dir_all(out_dir)?;
    let trace_path = out_dir.join(format!("{}.trace.csv", spec.name));
    trace.write_csv(&trace_path)?;
    report.outputs.push(trace_path);
    if !bound_curves.is_empty() {
        let path = out_dir.join(format!("{}.bounds.csv", spec.name));
        fs::write(&path, bounds_csv(&bound_curves))?;
        report.outputs.push(path);
    }
    let summary_path = out_dir.join(format!("{}.summary.json", spec.name));
    report.outputs.push(summary_path.clone());
    fs::write(&summary_path, serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}

/// `k,bound` with one extra `bound_<i>` column per further bound check.
pub fn bounds_csv(curves: &[Vec<f64>]) -> String {
    let mut out = String::from(BOUNDS_CSV_HEADER);
    for i in 2..=curves.len() {
        out.push_str(&format!(",bound_{i}"));
    }
    out.push('\n');
    let rows = curves.iter().map(Vec::len).max().unwrap_or(0);
    for k in 0..rows {
        out.push_str(&k.to_string());
        for c in curves {
            out.push(',');
            out.push_str(&format_float(c[k]));
        }
        out.push('\n');
    }
    out
}

/// Sampled curvature plus the Hölder and numerical modulus upper bounds.
pub fn curvature_for(problem: &Problem<f64>, c: &CurvatureSettings, seed: u64) -> Result<CurvatureEstimate<f64>> {
    let grid = c.gamma_grid.clone().unwrap_or_else(default_gamma_grid);
    let mut est = estimate_curvature(&problem.objective, &problem.set, c.sigma, c.n_samples, &grid, seed)?;
    let delta = problem.set.diameter();
    let taus: Vec<f64> = (1..=200).map(|i| delta * i as f64 / 200.0).collect();
    let table = modulus_of_continuity(&problem.objective, &problem.set, &taus, c.n_samples.min(500), seed)?;
    est.modulus_upper_bound = curvature_bound_modulus(&table, c.sigma, delta, &grid).ok();
    Ok(est)
}

struct Ctx<'a> {
    spec: &'a ExperimentSpec,
    problem: &'a Problem<f64>,
    trace: &'a SolveTrace<f64>,
    opt: Option<f64>,
    curvature: Option<CurvatureEstimate<f64>>,
    bounds: Vec<RateBound<f64>>,
}

impl Ctx<'_> {
    fn residuals(&self, from: usize, to: Option<usize>) -> Option<Vec<(usize, f64)>> {
        let opt = self.opt?;
        Some(
            self.trace
                .iterations
                .iter()
                .filter(|r| r.k >= from && to.is_none_or(|t| r.k <= t))
                .map(|r| (r.k, r.obj - opt))
                .collect(),
        )
    }

    fn run(&mut self, check: &Check) -> CheckResult {
        let kind = check.kind_name();
        match self.try_run(check) {
            Ok(r) => r,
            Err(e) => CheckResult::failed(kind, e.to_string()),
        }
    }

    /// Inflated sampled constant for `sigma`, or the declared value.
    fn constant(&mut self, sigma: f64) -> Result<f64> {
        let settings = self.spec.curvature.clone().unwrap_or(CurvatureSettings {
            sigma,
            n_samples: default_samples(),
            gamma_grid: None,
            safety_factor: DEFAULT_SAFETY_FACTOR,
            value: None,
        });
        if let Some(v) = settings.value.filter(|_| settings.sigma == sigma) {
            return Ok(v);
        }
        let est = match &self.curvature {
            Some(e) if e.sigma == sigma => e.clone(),
            _ => {
                let e = curvature_for(self.problem, &CurvatureSettings { sigma, ..settings.clone() }, self.spec.seed)?;
                self.curvature.get_or_insert(e.clone());
                e
            }
        };
        Ok(est.sampled_value * settings.safety_factor)
    }

    fn try_run(&mut self, check: &Check) -> Result<CheckResult> {
        let kind = check.kind_name();
        let no_opt = || Error::Config("no optimal value known for this problem; set `optimum`".into());
        let iters = &self.trace.iterations;
        Ok(match check {
            Check::BoundDomination { bound, sigma, c_sigma, delta, from_k, to_k, rel_tol, abs_tol } => {
                let sigma = sigma.or(self.spec.curvature.as_ref().map(|c| c.sigma)).unwrap_or(2.0);
                let res = self.residuals(*from_k, *to_k).ok_or_else(no_opt)?;
                let theta0 = iters[0].obj - self.opt.ok_or_else(no_opt)?;
                let c = match c_sigma {
                    Some(c) => *c,
                    None => self.constant(sigma)?,
                };
                let b = match bound {
                    BoundForm::HarmonicClassic => rate_bound_harmonic(c)?,
                    BoundForm::LineSearch => rate_bound_line_search(theta0, sigma, c)?,
                    BoundForm::OpenLoop | BoundForm::OpenLoopShifted => {
                        let d = delta.unwrap_or_else(|| open_loop_delta(theta0, c, sigma));
                        rate_bound_open_loop(d, sigma, *bound == BoundForm::OpenLoopShifted)?
                    }
                };
                self.bounds.push(b);
                let mut worst = f64::NEG_INFINITY;
                let mut worst_k = 0;
                let mut failures = 0;
                for &(k, r) in &res {
                    let limit = b.bound(k) * (1.0 + rel_tol) + abs_tol;
                    let excess = r - limit;
                    if excess > 0.0 {
                        failures += 1;
                    }
                    if excess > worst {
                        worst = excess;
                        worst_k = k;
                    }
                }
                CheckResult::new(
                    kind,
                    failures == 0 && !res.is_empty(),
                    worst,
                    0.0,
                    format!("max of residual - bound over {} iterates at k = {worst_k}; {failures} violations", res.len()),
                )
            }
            Check::LowerBound { scale, offset, from_k, to_k, tol } => {
                let res = self.residuals(*from_k, *to_k).ok_or_else(no_opt)?;
                let (mut worst, mut worst_k) = (f64::INFINITY, 0);
                for &(k, r) in &res {
                    let slack = r - (scale / (k as f64 + offset) - tol);
                    if slack < worst {
                        worst = slack;
                        worst_k = k;
                    }
                }
                CheckResult::new(kind, worst >= 0.0 && !res.is_empty(), worst, 0.0, format!("min slack at k = {worst_k}"))
            }
            Check::Monotonicity { tol } => {
                let worst = iters.windows(2).map(|w| w[1].obj - w[0].obj).fold(f64::NEG_INFINITY, f64::max);
                let worst = if iters.len() < 2 { 0.0 } else { worst };
                CheckResult::new(kind, worst <= *tol, worst, *tol, "max of obj_{k+1} - obj_k")
            }
            Check::FiniteTermination { expected_k, expected_x, tol } => {
                let t = &self.trace.termination;
                let mut passed = t.reason == TerminationReason::FiniteTermination;
                let mut detail = format!("terminated with {:?} at k = {}", t.reason, t.k);
                if let Some(k) = expected_k {
                    passed &= t.k == *k;
                }
                let mut dist = 0.0;
                if let Some(x) = expected_x {
                    dist = x.iter().zip(&t.final_x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    passed &= x.len() == t.final_x.len() && dist <= *tol;
                }
                if let (Some(alpha), Some(opt)) = (self.spec.sharp_alpha, self.problem.known_optimum()) {
                    // every iterate must respect the sharpness inequality
                    let sharp_ok = iters.iter().all(|r| {
                        let d = r.x.iter().zip(&opt.x_star).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                        r.obj - opt.f_star >= alpha * d - tol
                    });
                    passed &= sharp_ok;
                    detail.push_str(&format!("; sharpness with alpha = {alpha} holds: {sharp_ok}"));
                }
                CheckResult::new(kind, passed, t.k as f64, expected_k.map_or(f64::NAN, |k| k as f64), detail)
                    .with_extra(dist)
            }
            Check::NonConvergenceMargin { margin, from_k, to_k } => {
                let res = self.residuals(*from_k, *to_k).ok_or_else(no_opt)?;
                let min = res.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                CheckResult::new(kind, !res.is_empty() && min >= *margin, min, *margin, "min of obj_k - opt")
            }
            Check::RateSlope { max_slope, tail_fraction } => {
                let fit = fit_rate(self.trace, self.opt.ok_or_else(no_opt)?, *tail_fraction)?;
                CheckResult::new(
                    kind,
                    fit.slope <= *max_slope,
                    fit.slope,
                    *max_slope,
                    format!("r2 = {:.6}, {} points", fit.r2, fit.points_used),
                )
            }
            Check::FinalSuboptimality { tol } => {
                let r = self.trace.termination.final_obj - self.opt.ok_or_else(no_opt)?;
                CheckResult::new(kind, r.abs() <= *tol, r, *tol, "final obj - opt")
            }
            Check::CurvatureValue { expected, tol } => {
                let est = self.curvature.as_ref().ok_or_else(|| Error::Config("no curvature estimate".into()))?;
                let err = (est.sampled_value - expected).abs();
                CheckResult::new(kind, err <= *tol, est.sampled_value, *expected, format!("|error| = {err:e}"))
            }
            Check::CurvatureDivergence { sigma, threshold, max_decades, n_samples } => {
                let r = curvature_refinement(
                    &self.problem.objective,
                    &self.problem.set,
                    *sigma,
                    *n_samples,
                    *max_decades,
                    *threshold,
                    self.spec.seed,
                )?;
                let last = r.levels.last().map_or(0.0, |l| l.1);
                let detail = match r.exceeded_at {
                    Some(i) => format!("exceeded at gamma_min = {:e}", r.levels[i].0),
                    None => format!("not exceeded down to gamma_min = {:e}", r.levels.last().map_or(1.0, |l| l.0)),
                };
                CheckResult::new(kind, r.exceeded_at.is_some(), last, *threshold, detail)
            }
            Check::ScheduleBounds { horizon } => {
                let rule = self.rule()?;
                let rep = validate_open_loop(rule, *horizon)?;
                let ok = rep.dh_bounds_ok.unwrap_or(false) && rep.c1_ok;
                CheckResult::new(
                    kind,
                    ok,
                    rep.gamma_horizon,
                    f64::NAN,
                    format!("dh bounds: {:?}, partial sum {:e}", rep.dh_bounds_ok, rep.partial_sum),
                )
            }
            Check::BetaBound { sigma, horizon } => {
                let betas = crate::analysis::beta_recursion(self.rule()?, *sigma, *horizon)?;
                let rep = check_beta_bound(&betas, *sigma);
                CheckResult::new(
                    kind,
                    rep.holds,
                    rep.worst_ratio,
                    1.0,
                    format!("{} violations, first at {:?}, worst at k = {}", rep.violations, rep.first_violation, rep.worst_k),
                )
            }
            Check::CompositeOracleGrid { n_costs, grid_points, tol } => {
                let worst = composite_grid_check(self.problem, *n_costs, *grid_points, self.spec.seed)?;
                CheckResult::new(kind, worst <= *tol, worst, *tol, "max objective excess of oracle over grid")
            }
        })
    }

    fn rule(&self) -> Result<&StepsizeRule<f64>> {
        self.spec.rule.as_ref().ok_or_else(|| Error::Config("check needs a stepsize rule".into()))
    }
}

impl CheckResult {
    fn with_extra(mut self, dist: f64) -> Self {
        if dist > 0.0 {
            self.detail.push_str(&format!("; distance to expected x = {dist:e}"));
        }
        self
    }
}

/// Largest `h(x̄) − min_grid h` over random costs, where `h = <c,·> + g` and
/// `x̄` is the composite oracle's answer. Only box sets qualify. Costs are
/// drawn from `N(0, 1)` per coordinate.
pub fn composite_grid_check(problem: &Problem<f64>, n_costs: usize, grid_points: usize, seed: u64) -> Result<f64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let FeasibleSet::Box { lower, upper } = &problem.set else {
        return Err(Error::Config("composite_oracle_grid needs a box set".into()));
    };
    if grid_points < 2 {
        return Err(descriptor("grid_points", "need at least 2 grid points"));
    }
    let g = problem.composite.unwrap_or(CompositePart::Zero);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_costs {
        let c: Vec<f64> = (0..lower.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let xb = composite_lmo(&problem.set, &c, &g)?;
        let h = |x: &[f64]| c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + g.eval(x);
        // the objective separates, so a per-coordinate grid is a full grid search
        let lam = match g {
            CompositePart::L1 { lambda } => lambda,
            CompositePart::Zero => 0.0,
        };
        let mut best = 0.0;
        for i in 0..c.len() {
            let mut m = f64::INFINITY;
            for j in 0..grid_points {
                let t = lower[i] + (upper[i] - lower[i]) * j as f64 / (grid_points - 1) as f64;
                m = m.min(c[i] * t + lam * t.abs());
            }
            best += m;
        }
        worst = worst.max(h(&xb) - best);
    }
    Ok(worst)
}

/// Canned reproductions of the worked examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    PolyakLowerBound,
    NesterovFailure,
    TAlphaCurvature,
    HarmonicUpperBound,
    HolderRateSweep,
    CompositeLassoBox,
    SharpFiniteTermination,
    DhScheduleBounds,
    GpaParity,
}

impl Case {
    pub const ALL: [Case; 9] = [
        Case::PolyakLowerBound,
        Case::NesterovFailure,
        Case::TAlphaCurvature,
        Case::HarmonicUpperBound,
        Case::HolderRateSweep,
        Case::CompositeLassoBox,
        Case::SharpFiniteTermination,
        Case::DhScheduleBounds,
        Case::GpaParity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Case::PolyakLowerBound => "polyak_lower_bound",
            Case::NesterovFailure => "nesterov_failure",
            Case::TAlphaCurvature => "t_alpha_curvature",
            Case::HarmonicUpperBound => "harmonic_upper_bound",
            Case::HolderRateSweep => "holder_rate_sweep",
            Case::CompositeLassoBox => "composite_lasso_box",
            Case::SharpFiniteTermination => "sharp_finite_termination",
            Case::DhScheduleBounds => "dh_schedule_bounds",
            Case::GpaParity => "gpa_parity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Case::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::UnknownCase(s.to_string()))
    }

    /// The canned experiments for this case.
    pub fn specs(self) -> Vec<ExperimentSpec> {
        canned(self)
    }
}

fn base(name: &str, problem: ProblemSpec<f64>, rule: StepsizeRule<f64>, x0: StartPoint, max_iter: usize) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        problem,
        rule: Some(rule),
        algorithm: Algorithm::FrankWolfe,
        x0,
        stop: StopRule::iterations(max_iter),
        checks: Vec::new(),
        sharp_alpha: None,
        seed: 0,
        curvature: None,
        optimum: None,
    }
}

fn plain(set: FeasibleSet<f64>, objective: ObjectiveKind<f64>) -> ProblemSpec<f64> {
    ProblemSpec { set, objective, composite: None }
}

fn vertex(i: usize) -> StartPoint {
    StartPoint::Named(format!("vertex({i})"))
}

/// Interior target used by the Hölder-rate experiments.
pub const HOLDER_TARGET: [f64; 5] = [0.3, -0.2, 0.1, 0.25, -0.15];

/// Target of the lasso-on-a-box experiments.
pub const LASSO_TARGET: [f64; 5] = [0.8, -0.3, 1.7, 0.2, -1.4];

fn canned(case: Case) -> Vec<ExperimentSpec> {
    let simplex_quad = |n: usize| plain(FeasibleSet::Simplex { dim: n }, ObjectiveKind::Quadratic { b: vec![0.0; n] });
    match case {
        Case::PolyakLowerBound => {
            let mut s = base("polyak_lower_bound", simplex_quad(100), StepsizeRule::harmonic(2.0), vertex(0), 49);
            s.checks.push(Check::LowerBound { scale: 0.25, offset: 1.0, from_k: 1, to_k: Some(49), tol: 1e-12 });
            vec![s]
        }
        Case::HarmonicUpperBound => {
            let mut s = base("harmonic_upper_bound", simplex_quad(100), StepsizeRule::harmonic(2.0), vertex(0), 10_000);
            s.checks.push(Check::BoundDomination {
                bound: BoundForm::HarmonicClassic,
                sigma: Some(2.0),
                c_sigma: Some(2.0),
                delta: None,
                from_k: 0,
                to_k: None,
                rel_tol: 0.0,
                abs_tol: 1e-12,
            });
            s.checks.push(Check::RateSlope { max_slope: -0.9, tail_fraction: 0.5 });
            vec![s]
        }
        Case::NesterovFailure => {
            let mut s = base(
                "nesterov_failure",
                plain(FeasibleSet::L2Ball { dim: 2, radius: 1.0 }, ObjectiveKind::NesterovMax),
                StepsizeRule::harmonic(2.0),
                StartPoint::Vector(vec![1.0, 0.0]),
                1000,
            );
            s.checks.push(Check::NonConvergenceMargin { margin: 0.2, from_k: 100, to_k: Some(1000) });
            vec![s]
        }
        Case::TAlphaCurvature => {
            let mut s = base(
                "t_alpha_curvature",
                plain(FeasibleSet::Box { lower: vec![0.0], upper: vec![1.0] }, ObjectiveKind::TAlpha { alpha: 1.5 }),
                StepsizeRule::harmonic(2.0),
                StartPoint::Vector(vec![1.0]),
                100,
            );
            s.curvature = Some(CurvatureSettings {
                sigma: 1.5,
                n_samples: 1000,
                gamma_grid: None,
                safety_factor: DEFAULT_SAFETY_FACTOR,
                value: None,
            });
            s.checks.push(Check::CurvatureValue { expected: 1.5, tol: 1e-9 });
            s.checks.push(Check::CurvatureDivergence { sigma: 2.0, threshold: 1e3, max_decades: 12, n_samples: 100 });
            vec![s]
        }
        Case::HolderRateSweep => {
            let mut out = Vec::new();
            for (tag, sigma) in [("1_25", 1.25), ("1_5", 1.5)] {
                let problem = plain(
                    FeasibleSet::L2Ball { dim: 5, radius: 1.0 },
                    ObjectiveKind::PowerNorm { sigma, b: HOLDER_TARGET.to_vec() },
                );
                let curvature = CurvatureSettings {
                    sigma,
                    n_samples: 2000,
                    gamma_grid: None,
                    safety_factor: DEFAULT_SAFETY_FACTOR,
                    value: None,
                };
                let mut open =
                    base(&format!("holder_open_loop_sigma_{tag}"), problem.clone(), StepsizeRule::harmonic(2.0), vertex(0), 10_000);
                open.curvature = Some(curvature.clone());
                open.checks.push(Check::BoundDomination {
                    bound: BoundForm::OpenLoop,
                    sigma: Some(sigma),
                    c_sigma: None,
                    delta: None,
                    from_k: 1,
                    to_k: None,
                    rel_tol: 1e-6,
                    abs_tol: 0.0,
                });
                let mut ls = base(&format!("holder_line_search_sigma_{tag}"), problem, StepsizeRule::line_search(), vertex(0), 10_000);
                ls.curvature = Some(curvature);
                ls.checks.push(Check::Monotonicity { tol: 0.0 });
                // convergence here is linear and reaches roundoff within a few dozen
                // steps, so the fit uses the whole trace rather than its tail
                ls.checks.push(Check::RateSlope { max_slope: -(sigma - 1.0) + 0.1, tail_fraction: 1.0 });
                out.push(open);
                out.push(ls);
            }
            out
        }
        Case::CompositeLassoBox => {
            let problem = ProblemSpec {
                set: FeasibleSet::Box { lower: vec![-1.0; 5], upper: vec![1.0; 5] },
                objective: ObjectiveKind::Quadratic { b: LASSO_TARGET.to_vec() },
                composite: Some(CompositePart::L1 { lambda: 0.5 }),
            };
            let mut ls = base("composite_line_search", problem.clone(), StepsizeRule::line_search(), vertex(0), 1000);
            ls.checks.push(Check::Monotonicity { tol: 0.0 });
            ls.checks.push(Check::CompositeOracleGrid { n_costs: 100, grid_points: 2001, tol: 1e-6 });
            let mut open = base("composite_open_loop", problem, StepsizeRule::harmonic(2.0), vertex(0), 10_000);
            // quadratic with L = 1 on a box of diameter sqrt(20): C_f = δ² = 20
            open.checks.push(Check::BoundDomination {
                bound: BoundForm::OpenLoopShifted,
                sigma: Some(2.0),
                c_sigma: Some(20.0),
                delta: None,
                from_k: 0,
                to_k: None,
                rel_tol: 1e-6,
                abs_tol: 0.0,
            });
            vec![ls, open]
        }
        Case::SharpFiniteTermination => {
            let mut s = base(
                "sharp_finite_termination",
                plain(FeasibleSet::Simplex { dim: 3 }, ObjectiveKind::Linear { c: vec![1.0, 2.0, 3.0] }),
                StepsizeRule::line_search(),
                StartPoint::Vector(vec![0.0, 0.0, 1.0]),
                100,
            );
            s.sharp_alpha = Some(std::f64::consts::FRAC_1_SQRT_2);
            s.checks.push(Check::FiniteTermination { expected_k: Some(1), expected_x: Some(vec![1.0, 0.0, 0.0]), tol: 1e-12 });
            vec![s]
        }
        Case::DhScheduleBounds => [("0_1", 0.1), ("0_5", 0.5), ("1_0", 1.0)]
            .into_iter()
            .map(|(tag, g0)| {
                let mut s = base(
                    &format!("dh_schedule_gamma0_{tag}"),
                    simplex_quad(3),
                    StepsizeRule::DhRecursion { gamma0: g0 },
                    vertex(0),
                    100,
                );
                s.checks.push(Check::ScheduleBounds { horizon: 100_000 });
                s
            })
            .collect(),
        Case::GpaParity => {
            let opt_tol = 1e-6;
            let mut fw = base("gpa_parity_fw", simplex_quad(10), StepsizeRule::harmonic(2.0), vertex(0), 10_000);
            fw.checks.push(Check::FinalSuboptimality { tol: opt_tol });
            let mut gpa = base("gpa_parity_gpa", simplex_quad(10), StepsizeRule::harmonic(2.0), vertex(0), 100);
            gpa.rule = None;
            gpa.algorithm = Algorithm::ProjectedGradient { step: 1.0 };
            gpa.checks.push(Check::FinalSuboptimality { tol: opt_tol });
            vec![fw, gpa]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: Case,
    pub passed: bool,
    pub experiments: Vec<ExperimentReport>,
}

/// Runs the canned experiments of `case` into `out_dir`.
pub fn reproduce(case: Case, out_dir: &Path, overrides: &Overrides) -> Result<CaseReport> {
    let specs: Vec<ExperimentSpec> = case.specs().into_iter().map(|s| s.with_overrides(overrides)).collect();
    let experiments = if case == Case::GpaParity {
        compare(&specs, out_dir, case.name())?.experiments
    } else {
        specs.iter().map(|s| run_experiment(s, out_dir)).collect::<Result<Vec<_>>>()?
    };
    Ok(CaseReport { case, passed: experiments.iter().all(|e| e.passed), experiments })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub csv: PathBuf,
    pub experiments: Vec<ExperimentReport>,
}

/// Runs every spec and writes `<label>.compare.csv` with columns
/// `k, obj_<name>, gap_<name>, ...`. All specs must describe the same
/// problem; that is checked before anything is solved.
pub fn compare(specs: &[ExperimentSpec], out_dir: &Path, label: &str) -> Result<CompareReport> {
    let first = specs.first().ok_or_else(|| Error::Config("compare needs at least one spec".into()))?;
    for s in &specs[1..] {
        if s.problem != first.problem {
            return Err(Error::MismatchedProblems(format!("`{}` differs from `{}`", s.name, first.name)));
        }
    }
    let mut names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(descriptor("name", "experiment names must be unique within a run"));
    }

    let mut experiments = Vec::with_capacity(specs.len());
    let mut traces = Vec::with_capacity(specs.len());
    for s in specs {
        let report = run_experiment(s, out_dir)?;
        traces.push(crate::solver::parse_trace_csv(&fs::read_to_string(&report.outputs[0])?)?);
        experiments.push(report);
    }

    let mut out = String::from("k");
    for s in specs {
        out.push_str(&format!(",obj_{0},gap_{0}", s.name));
    }
    out.push('\n');
    let rows = traces.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..rows {
        out.push_str(&i.to_string());
        for t in &traces {
            match t.get(i) {
                Some((_, v)) => out.push_str(&format!(",{},{}", format_float(v[0]), format_float(v[1]))),
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }
    let csv = out_dir.join(format!("{label}.compare.csv"));
    fs::write(&csv, out)?;
    Ok(CompareReport { csv, experiments })
}

/// `$FWKIT_OUT_DIR`, or `out` in the working directory.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}
