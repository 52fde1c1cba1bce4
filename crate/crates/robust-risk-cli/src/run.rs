use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use robust_risk::dual::{solve, SolverOptions};
use robust_risk::elicitation::{ce_recover, elicit_composite, ElicitationResult};
use robust_risk::experiments::{
    divergence_comparison, hedging_study, newsvendor_robust_curve, toy_pareto_cvar, CompareConfig, HedgingConfig,
    NewsvendorConfig, ToyConfig,
};
use robust_risk::finiteness::{classify_triple, numeric_probe, verdict_table, ProbeGrid, RiskFamily, Status};
use robust_risk::nominal::{importance_sample, sample};
use robust_risk::risk::{exact_oce, nominal_oce, nominal_shortfall, RiskKind};
use robust_risk::table::{Cell, Table};
use robust_risk::{Divergence, Error, Form, NominalModel, RiskSpec, RobustProblem, SampleSet};
use serde::Serialize;

use crate::params::Params;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Evaluate,
    Solve,
    Classify,
    Elicit,
    Experiment,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Evaluate => "evaluate",
            Command::Solve => "solve",
            Command::Classify => "classify",
            Command::Elicit => "elicit",
            Command::Experiment => "experiment",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Sub-identifier: the experiment name, or `table` / `triple` for classify.
    pub target: Option<String>,
    /// Dotted keys from the config file and `--set` overrides.
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, message: message.into() }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}", self.message)
    }
}

/// Failure of [`run`], carrying the process exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct RunError {
    pub code: i32,
    pub diagnostics: Vec<Diagnostic>,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.diagnostics.iter().map(ToString::to_string).collect();
        f.write_str(&lines.join("\n"))
    }
}

impl std::error::Error for RunError {}

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NON_FINITE: i32 = 2;

#[derive(Clone, Debug)]
enum Source {
    Model { model: NominalModel, n: usize, seed: u64, proposal: Option<NominalModel> },
    File(PathBuf),
}

impl Source {
    fn label(&self) -> String {
        match self {
            Source::Model { model, proposal: Some(p), .. } => format!("{} via {}", model.id(), p.id()),
            Source::Model { model, .. } => model.id(),
            Source::File(p) => p.display().to_string(),
        }
    }

    fn model(&self) -> Option<&NominalModel> {
        match self {
            Source::Model { model, .. } => Some(model),
            Source::File(_) => None,
        }
    }

    fn load(&self) -> robust_risk::Result<SampleSet> {
        match self {
            Source::Model { model, n, seed, proposal: None } => sample(model, *n, *seed),
            Source::Model { model, n, seed, proposal: Some(p) } => importance_sample(model, p, *n, *seed),
            Source::File(path) => read_samples(path),
        }
    }
}

#[derive(Clone, Debug)]
enum Elicit {
    Composite(RobustProblem),
    Utility(RiskSpec),
}

#[derive(Clone, Debug)]
enum Plan {
    Evaluate { risk: RiskSpec, source: Source },
    Solve { form: Form, risk: RiskSpec, phi2: Divergence, phi3: Option<Divergence>, radii: Vec<f64>, source: Source, opts: SolverOptions },
    ClassifyTable,
    ClassifyTriple { risk: RiskSpec, phi2: Divergence, model: NominalModel, probe: bool },
    Elicit { mode: Elicit, xs: Vec<f64>, p_seq: Vec<f64> },
    Toy(ToyConfig),
    Compare(CompareConfig),
    Hedging(HedgingConfig),
    Newsvendor(NewsvendorConfig),
}

struct Resolved {
    plan: Option<Plan>,
    params: BTreeMap<String, String>,
    diagnostics: Vec<Diagnostic>,
}

const EXPERIMENTS: [&str; 4] = ["toy", "compare", "hedging", "newsvendor"];

fn resolve(cfg: &RunConfig) -> Resolved {
    let target = cfg.target.as_deref();
    let mut prefixes = vec![cfg.command.name()];
    if let Some(t) = target {
        prefixes.push(t);
    }
    let p = Params::new(&cfg.params, &prefixes);
    let mut diags = Vec::new();
    let seed = cfg.seed.or_else(|| p.seed());
    let plan = build_plan(cfg.command, target, &p, seed, &mut diags);
    diags.extend(p.errors().into_iter().map(Diagnostic::error));
    let mut params = p.resolved();
    if let Some(s) = seed {
        params.insert("seed".into(), s.to_string());
    }
    if let Some(plan) = &plan {
        diags.extend(warnings(plan));
    }
    let failed = diags.iter().any(|d| d.severity == Severity::Error);
    Resolved { plan: if failed { None } else { plan }, params, diagnostics: diags }
}

fn need_seed(seed: Option<u64>, diags: &mut Vec<Diagnostic>) -> u64 {
    seed.unwrap_or_else(|| {
        diags.push(Diagnostic::error("this command draws random samples: pass --seed or set 'seed'"));
        0
    })
}

fn source(p: &Params, seed: Option<u64>, diags: &mut Vec<Diagnostic>) -> Option<Source> {
    if let Some(path) = p.raw("data") {
        return Some(Source::File(PathBuf::from(path)));
    }
    let model = p.model("model", None)?;
    let n = p.usize_or("n", 1000);
    if n == 0 {
        diags.push(Diagnostic::error("'n' must be at least 1"));
    }
    let proposal = if p.has("proposal") { Some(p.model("proposal", None)?) } else { None };
    Some(Source::Model { model, n, seed: need_seed(seed, diags), proposal })
}

fn build_plan(cmd: Command, target: Option<&str>, p: &Params, seed: Option<u64>, diags: &mut Vec<Diagnostic>) -> Option<Plan> {
    match cmd {
        Command::Evaluate => {
            let risk = p.risk("risk", Some("cvar(0.975)"));
            let source = source(p, seed, diags);
            Some(Plan::Evaluate { risk: risk?, source: source? })
        }
        Command::Solve => {
            let form = p.form("form", Some("ball"));
            let risk = p.risk("risk", Some("cvar(0.975)"));
            let phi2 = p.divergence("phi2", Some("polynomial(3)"));
            let phi3 = if p.has("phi3") { p.divergence("phi3", None) } else { None };
            let radii = p.f64_list_or("radius", &[0.0]);
            let opts = SolverOptions {
                tol: p.f64_or("tol", SolverOptions::default().tol),
                max_iter: p.usize_or("max_iter", SolverOptions::default().max_iter),
                ..SolverOptions::default()
            };
            let source = source(p, seed, diags);
            let (form, risk, phi2, source) = (form?, risk?, phi2?, source?);
            if radii.is_empty() {
                diags.push(Diagnostic::error("'radius' needs at least one value"));
            }
            for &r in &radii {
                let prob = problem(form, &risk, &phi2, phi3.as_ref(), r);
                if let Err(e) = prob.validate() {
                    diags.push(Diagnostic::error(e.to_string()));
                }
            }
            Some(Plan::Solve { form, risk, phi2, phi3, radii, source, opts })
        }
        Command::Classify => match target.unwrap_or("table") {
            "table" => Some(Plan::ClassifyTable),
            "triple" => {
                let risk = p.risk("risk", None);
                let phi2 = p.divergence("phi2", None);
                let model = p.model("model", None);
                let probe = p.bool_or("probe", false);
                Some(Plan::ClassifyTriple { risk: risk?, phi2: phi2?, model: model?, probe })
            }
            other => {
                diags.push(Diagnostic::error(format!("unknown classify target '{other}' (expected table or triple)")));
                None
            }
        },
        Command::Elicit => {
            let xs = p.f64_list_or("x", &[-2.0, -1.0, 1.0]);
            let (k_min, k_max) = (p.usize_or("k_min", 4), p.usize_or("k_max", 16));
            if !(k_min < k_max && k_max <= 60) {
                diags.push(Diagnostic::error(format!("need k_min < k_max ≤ 60, got {k_min}, {k_max}")));
            }
            let p_seq = (k_min..=k_max).map(|k| 2f64.powi(-(k as i32))).collect();
            let mode = match p.raw("mode").unwrap_or_else(|| "composite".into()).as_str() {
                "composite" => {
                    let form = p.form("form", Some("penalty"))?;
                    let phi1 = p.divergence("phi1", Some("kl"));
                    let phi2 = p.divergence("phi2", Some("kl"));
                    let (phi1, phi2) = (phi1?, phi2?);
                    match form {
                        Form::Penalty => Elicit::Composite(RobustProblem::penalty(phi1, phi2)),
                        Form::ShortfallPenalty => Elicit::Composite(RobustProblem::shortfall_penalty(phi1, phi2)),
                        f => {
                            diags.push(Diagnostic::error(format!("elicitation needs a penalty form, got {}", f.name())));
                            return None;
                        }
                    }
                }
                "utility" => Elicit::Utility(p.risk("risk", None)?),
                other => {
                    diags.push(Diagnostic::error(format!("unknown elicitation mode '{other}' (expected composite or utility)")));
                    return None;
                }
            };
            Some(Plan::Elicit { mode, xs, p_seq })
        }
        Command::Experiment => {
            let Some(name) = target else {
                diags.push(Diagnostic::error(format!("experiment needs a target: {}", EXPERIMENTS.join(", "))));
                return None;
            };
            let plan = match name {
                "toy" => {
                    let d = ToyConfig::default();
                    Plan::Toy(ToyConfig {
                        alpha: p.f64_or("alpha", d.alpha),
                        n: p.usize_or("n", d.n),
                        radii: p.f64_list_or("radii", &d.radii),
                        phi2: p.divergence("phi2", Some("polynomial(3)"))?,
                        seed: need_seed(seed, diags),
                    })
                }
                "compare" => {
                    let d = CompareConfig::default();
                    Plan::Compare(CompareConfig {
                        alpha: p.f64_or("alpha", d.alpha),
                        radius: p.f64_or("radius", d.radius),
                        sizes: p.usize_list_or("sizes", &d.sizes),
                        use_importance: p.bool_or("importance", d.use_importance),
                        seed: need_seed(seed, diags),
                    })
                }
                "hedging" => {
                    let d = HedgingConfig::default();
                    Plan::Hedging(HedgingConfig {
                        mu_s: p.f64_or("mu_s", d.mu_s),
                        sigma_s: p.f64_or("sigma_s", d.sigma_s),
                        r_f: p.f64_or("r_f", d.r_f),
                        maturity: p.f64_or("maturity", d.maturity),
                        s0: p.f64_or("s0", d.s0),
                        strike: p.f64_or("strike", d.strike),
                        k0: p.f64_or("k0", d.k0),
                        k_prop: p.f64_or("k_prop", d.k_prop),
                        n_grid: p.usize_list_or("n_grid", &d.n_grid),
                        paths: p.usize_or("paths", d.paths),
                        alpha: p.f64_or("alpha", d.alpha),
                        radius: p.f64_or("radius", d.radius),
                        seed: need_seed(seed, diags),
                    })
                }
                "newsvendor" => {
                    let d = NewsvendorConfig::default();
                    Plan::Newsvendor(NewsvendorConfig {
                        v: p.f64_or("v", d.v),
                        c: p.f64_or("c", d.c),
                        s: p.f64_or("s", d.s),
                        l: p.f64_or("l", d.l),
                        demand: p.model("demand", Some("lognormal(0,1)"))?,
                        alpha: p.f64_or("alpha", d.alpha),
                        sigma_div: p.f64_or("sigma_div", d.sigma_div),
                        radius_grid: p.f64_list_or("radii", &d.radius_grid),
                        y_max: p.opt_f64("y_max"),
                        n_samples: p.usize_or("n_samples", d.n_samples),
                        stratified: p.bool_or("stratified", d.stratified),
                        seed: need_seed(seed, diags),
                    })
                }
                other => {
                    diags.push(Diagnostic::error(format!(
                        "unknown experiment '{other}' (expected one of {})",
                        EXPERIMENTS.join(", ")
                    )));
                    return None;
                }
            };
            let check = match &plan {
                Plan::Toy(c) => c.validate(),
                Plan::Compare(c) => c.validate(),
                Plan::Hedging(c) => c.validate(),
                Plan::Newsvendor(c) => c.validate(),
                _ => Ok(()),
            };
            if let Err(e) = check {
                diags.push(Diagnostic::error(e.to_string()));
            }
            Some(plan)
        }
    }
}

fn problem(form: Form, risk: &RiskSpec, phi2: &Divergence, phi3: Option<&Divergence>, r: f64) -> RobustProblem {
    let phi1 = risk.phi1().clone();
    let phi2 = phi2.clone();
    RobustProblem { form, phi1, phi2, phi3: phi3.cloned(), radius: if form.needs_radius() { r } else { 0.0 } }
}

fn risk_family(risk: &RiskSpec) -> Option<RiskFamily> {
    match risk.kind() {
        RiskKind::Cvar { .. } => Some(RiskFamily::Cvar),
        RiskKind::Entropic { .. } => Some(RiskFamily::Entropic),
        RiskKind::Oce => None,
    }
}

/// Rule-table verdict for a solve request, when one applies.
fn finiteness_note(risk: &RiskSpec, phi2: &Divergence, model: &NominalModel) -> Option<(Status, String)> {
    let fam = risk_family(risk)?;
    let v = classify_triple(risk, phi2, model);
    Some((v.status, format!("predicted {} by the {} finiteness table: {}", v.status.label(), fam.name(), v.rationale)))
}

fn warnings(plan: &Plan) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if let Plan::Solve { form, risk, phi2, source, .. } = plan {
        if let (Some(model), Form::Penalty | Form::Ball | Form::Globalized) = (source.model(), form) {
            if let Some((Status::Infinite, note)) = finiteness_note(risk, phi2, model) {
                out.push(Diagnostic::warning(note));
            }
        }
    }
    out
}

/// Dry run: resolve every identifier and report problems without computing.
pub fn validate(cfg: &RunConfig) -> Vec<Diagnostic> {
    resolve(cfg).diagnostics
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub command: Command,
    pub target: Option<String>,
    pub seed: Option<u64>,
    pub library_version: String,
    /// Every parameter actually used, defaults included.
    pub params: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

fn default_stem(cfg: &RunConfig) -> PathBuf {
    match &cfg.target {
        Some(t) => PathBuf::from(format!("{}_{t}", cfg.command.name())),
        None => PathBuf::from(cfg.command.name()),
    }
}

fn stem_of(path: &Path) -> PathBuf {
    if path.extension().is_some_and(|e| e == "csv") {
        path.with_extension("")
    } else {
        path.to_path_buf()
    }
}

fn with_suffix(stem: &Path, suffix: &str, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_os_string();
    s.push(suffix);
    s.push(ext);
    PathBuf::from(s)
}

fn lib_error(e: Error, note: Option<String>) -> RunError {
    let code = if matches!(e, Error::NonFinite(_)) { EXIT_NON_FINITE } else { EXIT_VALIDATION };
    let mut diagnostics = vec![Diagnostic::error(e.to_string())];
    if let (EXIT_NON_FINITE, Some(n)) = (code, note) {
        diagnostics.push(Diagnostic::error(n));
    }
    RunError { code, diagnostics }
}

/// Execute the configured pipeline, writing CSV output and a JSON manifest.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, RunError> {
    let resolved = resolve(cfg);
    let Some(plan) = resolved.plan else {
        return Err(RunError { code: EXIT_VALIDATION, diagnostics: resolved.diagnostics });
    };
    let tables = execute(&plan)?;
    let stem = stem_of(cfg.output_path.as_deref().unwrap_or(&default_stem(cfg)));
    let io = |e: std::io::Error, p: &Path| RunError {
        code: EXIT_VALIDATION,
        diagnostics: vec![Diagnostic::error(format!("cannot write {}: {e}", p.display()))],
    };
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    }
    let mut files = Vec::new();
    for (suffix, table) in &tables {
        let path = with_suffix(&stem, suffix, ".csv");
        std::fs::write(&path, table.to_csv_string()).map_err(|e| io(e, &path))?;
        files.push(path);
    }
    let manifest = Manifest {
        command: cfg.command,
        target: cfg.target.clone(),
        seed: resolved.params.get("seed").and_then(|s| s.parse().ok()),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        params: resolved.params,
        outputs: files.iter().map(|p| p.display().to_string()).collect(),
        diagnostics: resolved.diagnostics,
    };
    let mpath = with_suffix(&stem, "", ".manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&mpath, json + "\n").map_err(|e| io(e, &mpath))?;
    files.push(mpath);
    Ok(RunOutput { files, manifest })
}

fn execute(plan: &Plan) -> Result<Vec<(&'static str, Table)>, RunError> {
    let one = |t: robust_risk::Result<Table>| t.map(|t| vec![("", t)]).map_err(|e| lib_error(e, None));
    match plan {
        Plan::Evaluate { risk, source } => one(evaluate(risk, source)),
        Plan::Solve { form, risk, phi2, phi3, radii, source, opts } => {
            let note = source.model().and_then(|m| finiteness_note(risk, phi2, m)).map(|(_, n)| n);
            let data = source.load().map_err(|e| lib_error(e, None))?;
            let mut t = Table::new([
                "form",
                "risk",
                "phi2",
                "phi3",
                "radius",
                "n",
                "value",
                "theta",
                "lambda",
                "branch",
                "certified_gap",
                "iterations",
            ]);
            for &r in radii {
                let prob = problem(*form, risk, phi2, phi3.as_ref(), r);
                let sol = solve(&prob, &data, opts).map_err(|e| lib_error(e, note.clone()))?;
                let theta: Vec<String> = sol.theta.iter().map(|v| robust_risk::table::format_g17(*v)).collect();
                t.push(vec![
                    form.name().into(),
                    risk.id().into(),
                    phi2.id().into(),
                    phi3.as_ref().map(Divergence::id).unwrap_or_default().into(),
                    prob.radius.into(),
                    data.len().into(),
                    sol.value.into(),
                    theta.join(";").into(),
                    sol.lambda.map_or(Cell::Text(String::new()), Cell::Num),
                    serde_json::to_value(sol.branch).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default().into(),
                    sol.certified_gap.into(),
                    sol.iterations.into(),
                ]);
            }
            Ok(vec![("", t)])
        }
        Plan::ClassifyTable => {
            Ok(vec![("_cvar", verdict_table(RiskFamily::Cvar)), ("_entropic", verdict_table(RiskFamily::Entropic))])
        }
        Plan::ClassifyTriple { risk, phi2, model, probe } => {
            let v = classify_triple(risk, phi2, model);
            let mut t = Table::new(["risk", "phi2", "model", "status", "rationale", "probe_status", "probe_witness"]);
            let (ps, pw) = if *probe {
                let pv = numeric_probe(risk.phi1(), phi2, model, &ProbeGrid::default_for(model));
                let w = pv.witness.map(|w| w.map(robust_risk::table::format_g17).join(";")).unwrap_or_default();
                (pv.status.to_string(), w)
            } else {
                (String::new(), String::new())
            };
            t.push(vec![
                risk.id().into(),
                phi2.id().into(),
                model.id().into(),
                v.status.to_string().into(),
                v.rationale.into(),
                ps.into(),
                pw.into(),
            ]);
            Ok(vec![("", t)])
        }
        Plan::Elicit { mode, xs, p_seq } => {
            let mut t = Table::new([
                "x",
                "reference",
                "extrapolated",
                "last_p",
                "last_ratio",
                "abs_error",
                "image_lo",
                "image_hi",
            ]);
            for &x in xs {
                let r: ElicitationResult = match mode {
                    Elicit::Composite(prob) => elicit_composite(prob, x, p_seq),
                    Elicit::Utility(spec) => ce_recover(spec, x, p_seq),
                }
                .map_err(|e| lib_error(e, None))?;
                let (lp, lr) = *r.estimates.last().expect("non-empty p sequence");
                t.push(vec![
                    x.into(),
                    r.reference.into(),
                    r.extrapolated.into(),
                    lp.into(),
                    lr.into(),
                    (lr - r.reference).abs().into(),
                    r.image.0.into(),
                    r.image.1.into(),
                ]);
            }
            Ok(vec![("", t)])
        }
        Plan::Toy(c) => one(toy_pareto_cvar(c)),
        Plan::Compare(c) => one(divergence_comparison(c)),
        Plan::Hedging(c) => one(hedging_study(c)),
        Plan::Newsvendor(c) => one(newsvendor_robust_curve(c)),
    }
}

fn evaluate(risk: &RiskSpec, source: &Source) -> robust_risk::Result<Table> {
    let data = source.load()?;
    let exact = match source.model() {
        Some(m) if m.is_continuous() => match exact_oce(risk, m) {
            Ok(v) => v,
            Err(Error::NonFinite(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        },
        _ => f64::NAN,
    };
    let mut t = Table::new(["risk", "source", "n", "nominal_oce", "shortfall", "exact_oce"]);
    t.push(vec![
        risk.id().into(),
        source.label().into(),
        data.len().into(),
        nominal_oce(risk, &data)?.into(),
        nominal_shortfall(risk, &data)?.into(),
        exact.into(),
    ]);
    Ok(t)
}

/// One value per row from the first CSV column, optional weights in the
/// second. A non-numeric first row is taken as a header.
fn read_samples(path: &Path) -> robust_risk::Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (mut values, mut weights) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let Some(first) = rec.get(0) else { continue };
        let Ok(v) = first.trim().parse::<f64>() else {
            if i == 0 {
                continue;
            }
            return Err(Error::Parse { input: first.into(), reason: format!("row {} of {} is not a number", i + 1, path.display()) });
        };
        values.push(v);
        if let Some(w) = rec.get(1) {
            let w = w.trim().parse::<f64>().map_err(|_| Error::Parse { input: w.into(), reason: "weight is not a number".into() })?;
            weights.push(w);
        }
    }
    if values.is_empty() {
        return Err(Error::Param(format!("{} holds no samples", path.display())));
    }
    if weights.is_empty() {
        SampleSet::uniform(values)
    } else if weights.len() == values.len() {
        SampleSet::weighted(values, weights)
    } else {
        Err(Error::Param("weights must be given for every row or none".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_errors_exit_two_with_the_finiteness_note() {
        let e = lib_error(Error::NonFinite("integral diverges".into()), Some("predicted infinite".into()));
        assert_eq!(e.code, EXIT_NON_FINITE);
        assert_eq!(e.diagnostics.len(), 2);
        assert!(e.to_string().contains("predicted infinite"));
        let v = lib_error(Error::Param("bad".into()), Some("ignored".into()));
        assert_eq!((v.code, v.diagnostics.len()), (EXIT_VALIDATION, 1));
    }

    #[test]
    fn output_paths() {
        assert_eq!(stem_of(Path::new("out/a.csv")), PathBuf::from("out/a"));
        assert_eq!(with_suffix(Path::new("out/a"), "_cvar", ".csv"), PathBuf::from("out/a_cvar.csv"));
    }
}
