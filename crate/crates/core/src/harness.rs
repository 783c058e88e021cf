//! Batch experiment driver: decides every case of a corpus with the selected
//! methods, cross-tabulates the result states and writes reports.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::airsim::{generate_corpus, Case, GenerationParams, SimError};
use crate::decision::{
    crd_trace, informative_sensors, mean_speeds, mvd, rank_by_mean, DecisionError, DecisionOutcome,
    ResultState,
};
use crate::registry::MethodRegistry;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("unknown decision method `{0}`")]
    UnknownMethod(String),
    #[error("cross-tabulation needs both `mvd` and `crd` results")]
    MissingMethod,
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }

    fn json(path: &Path, source: serde_json::Error) -> Self {
        Self::Json {
            path: path.to_owned(),
            source,
        }
    }

    /// 1 for bad input, 2 for a broken internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invariant(_) => 2,
            _ => 1,
        }
    }
}

/// Per-case decisions; a method that was not run is absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseResult {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mvd: Option<DecisionOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crd: Option<DecisionOutcome>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedCase {
    pub file: String,
    pub reason: String,
}

/// Contents of `results.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub methods: Vec<String>,
    pub results: Vec<CaseResult>,
    #[serde(default)]
    pub skipped: Vec<SkippedCase>,
}

/// MVD state by CRD state counts, indexed in [`ResultState::ALL`] order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTab {
    pub counts: [[u64; 4]; 4],
    pub total: u64,
}

impl CrossTab {
    pub fn from_results(results: &[CaseResult]) -> Result<Self, HarnessError> {
        let mut tab = CrossTab::default();
        for r in results {
            let (Some(m), Some(c)) = (&r.mvd, &r.crd) else {
                return Err(HarnessError::MissingMethod);
            };
            tab.counts[m.state.index()][c.state.index()] += 1;
            tab.total += 1;
        }
        Ok(tab)
    }

    pub fn get(&self, mvd: ResultState, crd: ResultState) -> u64 {
        self.counts[mvd.index()][crd.index()]
    }

    pub fn mvd_marginal(&self, state: ResultState) -> u64 {
        self.counts[state.index()].iter().sum()
    }

    pub fn crd_marginal(&self, state: ResultState) -> u64 {
        self.counts.iter().map(|row| row[state.index()]).sum()
    }

    /// CSV with a header row of CRD states and one row per MVD state.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mvd\\crd");
        for s in ResultState::ALL {
            out.push(',');
            out.push_str(s.as_str());
        }
        out.push('\n');
        for m in ResultState::ALL {
            out.push_str(m.as_str());
            for c in ResultState::ALL {
                out.push_str(&format!(",{}", self.get(m, c)));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub total: u64,
    pub skipped: u64,
    /// MVD False or Conflict.
    pub mvd_error_or_conflict_rate: f64,
    /// MVD False or Conflict, CRD False or Conflict.
    pub both_wrong_rate: f64,
    /// MVD False or Conflict, CRD Invalid.
    pub mvd_wrong_crd_invalid_rate: f64,
    /// MVD False or Conflict, CRD True.
    pub crd_improvement_rate: f64,
    /// MVD True, CRD False or Invalid.
    pub crd_regression_rate: f64,
    pub mvd_states: BTreeMap<String, u64>,
    pub crd_states: BTreeMap<String, u64>,
}

const WRONG: [ResultState; 2] = [ResultState::False, ResultState::Conflict];

impl SummaryStats {
    pub fn from_crosstab(tab: &CrossTab, skipped: u64) -> Self {
        let rate = |n: u64| {
            if tab.total == 0 {
                0.0
            } else {
                n as f64 / tab.total as f64
            }
        };
        let sum = |rows: &[ResultState], cols: &[ResultState]| -> u64 {
            rows.iter()
                .flat_map(|&m| cols.iter().map(move |&c| tab.get(m, c)))
                .sum()
        };
        let marginals = |f: &dyn Fn(ResultState) -> u64| {
            ResultState::ALL
                .iter()
                .map(|&s| (s.as_str().to_owned(), f(s)))
                .collect()
        };
        Self {
            total: tab.total,
            skipped,
            mvd_error_or_conflict_rate: rate(WRONG.iter().map(|&s| tab.mvd_marginal(s)).sum()),
            both_wrong_rate: rate(sum(&WRONG, &WRONG)),
            mvd_wrong_crd_invalid_rate: rate(sum(&WRONG, &[ResultState::Invalid])),
            crd_improvement_rate: rate(sum(&WRONG, &[ResultState::True])),
            crd_regression_rate: rate(sum(
                &[ResultState::True],
                &[ResultState::False, ResultState::Invalid],
            )),
            mvd_states: marginals(&|s| tab.mvd_marginal(s)),
            crd_states: marginals(&|s| tab.crd_marginal(s)),
        }
    }

    /// Rates lie in [0, 1] and the MVD error rate splits exactly into the
    /// CRD outcomes of those cases.
    pub fn check(&self) -> Result<(), HarnessError> {
        let rates = [
            self.mvd_error_or_conflict_rate,
            self.both_wrong_rate,
            self.mvd_wrong_crd_invalid_rate,
            self.crd_improvement_rate,
            self.crd_regression_rate,
        ];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(HarnessError::Invariant("rate outside [0, 1]".into()));
        }
        let parts =
            self.crd_improvement_rate + self.both_wrong_rate + self.mvd_wrong_crd_invalid_rate;
        if (parts - self.mvd_error_or_conflict_rate).abs() > 1e-12 {
            return Err(HarnessError::Invariant(
                "improvement and residual rates do not partition the MVD error rate".into(),
            ));
        }
        let mvd_total: u64 = self.mvd_states.values().sum();
        let crd_total: u64 = self.crd_states.values().sum();
        if mvd_total != self.total || crd_total != self.total {
            return Err(HarnessError::Invariant(
                "marginals do not sum to total".into(),
            ));
        }
        Ok(())
    }
}

/// Per-case results plus, when both methods ran, the cross-tab and stats.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub results: ResultsFile,
    pub crosstab: Option<CrossTab>,
    pub stats: Option<SummaryStats>,
}

fn resolve_methods(
    registry: &MethodRegistry,
    methods: &[&str],
) -> Result<Vec<&'static str>, HarnessError> {
    let mut names = Vec::new();
    for m in methods {
        let method = registry
            .get(m)
            .ok_or_else(|| HarnessError::UnknownMethod((*m).to_owned()))?;
        if !names.contains(&method.name()) {
            names.push(method.name());
        }
    }
    Ok(names)
}

/// Runs a method, mapping "nothing observed" to an Invalid outcome.
fn run_method(
    registry: &MethodRegistry,
    name: &str,
    case: &Case,
) -> Result<Option<DecisionOutcome>, DecisionError> {
    let Some(method) = registry.get(name) else {
        return Ok(None);
    };
    match method.run(case) {
        Ok(outcome) => Ok(Some(outcome)),
        Err(DecisionError::InvalidCase(_)) => Ok(Some(DecisionOutcome::invalid())),
        Err(e) => Err(e),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}

/// Decides every case on a pool of `workers` threads (0 = one per core).
/// Results come back ordered by case id.
pub fn decide_cases(
    cases: &[Case],
    methods: &[&str],
    workers: usize,
) -> Result<(Vec<CaseResult>, Vec<SkippedCase>), HarnessError> {
    let registry = MethodRegistry::default();
    let names = resolve_methods(&registry, methods)?;
    let run = || {
        cases
            .par_iter()
            .map(|case| {
                let mut result = CaseResult {
                    id: case.id,
                    mvd: None,
                    crd: None,
                };
                for name in &names {
                    let outcome = run_method(&registry, name, case);
                    match (*name, outcome) {
                        ("mvd", Ok(o)) => result.mvd = o,
                        ("crd", Ok(o)) => result.crd = o,
                        (_, Ok(_)) => {}
                        (_, Err(e)) => {
                            return Err(SkippedCase {
                                file: format!("case {}", case.id),
                                reason: e.to_string(),
                            })
                        }
                    }
                }
                Ok(result)
            })
            .collect::<Vec<_>>()
    };
    let outcomes = pool(workers)?.install(run);
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(s) => skipped.push(s),
        }
    }
    results.sort_by_key(|r| r.id);
    Ok((results, skipped))
}

/// Reads every `*.json` case file of `dir` in file-name order. Files that
/// cannot be read or parsed are reported, not dropped.
pub fn load_corpus(dir: &Path) -> Result<(Vec<Case>, Vec<SkippedCase>), HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut cases = Vec::new();
    let mut skipped = Vec::new();
    for path in paths {
        match read_case(&path) {
            Ok(case) => cases.push(case),
            Err(e) => skipped.push(SkippedCase {
                file: path.display().to_string(),
                reason: e.to_string(),
            }),
        }
    }
    cases.sort_by_key(|c| c.id);
    Ok((cases, skipped))
}

pub fn read_case(path: &Path) -> Result<Case, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::json(path, e))
}

pub fn read_results(path: &Path) -> Result<ResultsFile, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::json(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn case_file_name(id: u64) -> String {
    format!("case_{id:06}.json")
}

/// Writes one JSON document per case into `dir`.
pub fn write_corpus(dir: &Path, cases: &[Case]) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    cases
        .par_iter()
        .try_for_each(|case| write(&dir.join(case_file_name(case.id)), &pretty(case)))
}

/// Cross-tab and summary for a results file, with invariant checks.
pub fn summarize(results: &ResultsFile) -> Result<(CrossTab, SummaryStats), HarnessError> {
    let tab = CrossTab::from_results(&results.results)?;
    let matrix_sum: u64 = tab.counts.iter().flatten().sum();
    if matrix_sum != tab.total || tab.total != results.results.len() as u64 {
        return Err(HarnessError::Invariant(
            "cross-tab does not account for every case".into(),
        ));
    }
    let stats = SummaryStats::from_crosstab(&tab, results.skipped.len() as u64);
    stats.check()?;
    Ok((tab, stats))
}

/// Loads and decides a corpus directory.
pub fn run_experiment(
    corpus: &Path,
    methods: &[&str],
    workers: usize,
) -> Result<Experiment, HarnessError> {
    let (cases, mut skipped) = load_corpus(corpus)?;
    let (results, failed) = decide_cases(&cases, methods, workers)?;
    skipped.extend(failed);
    let registry = MethodRegistry::default();
    let results = ResultsFile {
        methods: resolve_methods(&registry, methods)?
            .into_iter()
            .map(str::to_owned)
            .collect(),
        results,
        skipped,
    };
    let both =
        results.methods.iter().any(|m| m == "mvd") && results.methods.iter().any(|m| m == "crd");
    let (crosstab, stats) = if both {
        let (t, s) = summarize(&results)?;
        (Some(t), Some(s))
    } else {
        (None, None)
    };
    Ok(Experiment {
        results,
        crosstab,
        stats,
    })
}

pub fn write_results(path: &Path, results: &ResultsFile) -> Result<(), HarnessError> {
    write(path, &pretty(results))
}

/// Writes `summary.json` and `crosstab.csv` into `dir`.
pub fn write_report(dir: &Path, results: &ResultsFile) -> Result<SummaryStats, HarnessError> {
    let (tab, stats) = summarize(results)?;
    let summary = json!({
        "states": ResultState::ALL.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        "crosstab": tab,
        "stats": stats,
    });
    write(&dir.join("summary.json"), &pretty(&summary))?;
    write(&dir.join("crosstab.csv"), &tab.to_csv())?;
    Ok(stats)
}

/// Simulate, decide and report in one go. Layout under `out`:
/// `cases/`, `results.json`, `report/`.
pub fn run_all(
    params: &GenerationParams,
    seed: u64,
    count: u64,
    out: &Path,
    workers: usize,
) -> Result<SummaryStats, HarnessError> {
    let cases = pool(workers)?.install(|| generate_corpus(params, seed, count, false))?;
    let cases_dir = out.join("cases");
    write_corpus(&cases_dir, &cases)?;
    let experiment = run_experiment(&cases_dir, &["mvd", "crd"], workers)?;
    write_results(&out.join("results.json"), &experiment.results)?;
    write_report(&out.join("report"), &experiment.results)
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<u64> {
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let idx = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    counts
}

const HISTOGRAM_BINS: usize = 10;

/// Walkthrough of one case as JSON records, one per output line: case
/// header, per-sensor means and rankings, per-sensor graph sources, the fused
/// source, both decisions, then plot-ready trajectories, sensor discs and
/// speed histograms.
pub fn trace_case(case: &Case) -> Result<Vec<Value>, HarnessError> {
    let mut lines = vec![json!({
        "kind": "case",
        "id": case.id,
        "seed": case.seed,
        "truth": case.truth,
        "base_speeds": case.aircraft.iter().map(|a| a.base_speed).collect::<Vec<_>>(),
    })];

    let sensors = informative_sensors(case);
    let mut rankings = Vec::new();
    for (s, speeds) in &sensors {
        let means = mean_speeds(speeds);
        let ranking = rank_by_mean(&means);
        lines.push(json!({
            "kind": "sensor",
            "sensor": s,
            "readings": speeds.iter().map(|(a, v)| (a.to_string(), v.len())).collect::<BTreeMap<_, _>>(),
            "means": means.iter().map(|(a, m)| (a.to_string(), *m)).collect::<BTreeMap<_, _>>(),
            "ranking": ranking,
        }));
        rankings.push(ranking);
    }
    let mut disagreements = 0u64;
    for (i, a) in rankings.iter().enumerate() {
        for b in &rankings[i + 1..] {
            if rankings_disagree(a, b) {
                disagreements += 1;
            }
        }
    }
    lines.push(json!({
        "kind": "sensor_agreement",
        "informative_sensors": rankings.len(),
        "disagreeing_pairs": disagreements,
        "conflict": disagreements > 0,
    }));

    let mvd_outcome = match mvd(case) {
        Ok(o) => o,
        Err(DecisionError::InvalidCase(_)) => DecisionOutcome::invalid(),
        Err(e) => return Err(e.into()),
    };
    let crd = match crd_trace(case) {
        Ok(t) => Some(t),
        Err(DecisionError::InvalidCase(_)) => None,
        Err(e) => return Err(e.into()),
    };
    if let Some(t) = &crd {
        for (s, source) in &t.sources {
            lines.push(json!({ "kind": "sensor_source", "sensor": s, "source": source }));
        }
        lines.push(json!({
            "kind": "fused_source",
            "total_conflict": t.fused.is_none(),
            "source": t.fused,
        }));
    }
    let crd_outcome = crd
        .map(|t| t.outcome)
        .unwrap_or_else(DecisionOutcome::invalid);
    lines.push(json!({ "kind": "decision", "method": "mvd", "chains": mvd_outcome.chains, "state": mvd_outcome.state }));
    lines.push(json!({ "kind": "decision", "method": "crd", "chains": crd_outcome.chains, "state": crd_outcome.state }));

    let trajectories = match &case.trajectories {
        Some(t) => t.clone(),
        None => case.regenerate_trajectories()?,
    };
    for (a, traj) in trajectories.iter().enumerate() {
        lines.push(json!({
            "kind": "plot.trajectory",
            "aircraft": a + 1,
            "points": traj.samples.iter().map(|s| [s[1], s[2]]).collect::<Vec<_>>(),
        }));
    }
    for (i, sensor) in case.sensors.iter().enumerate() {
        lines.push(json!({
            "kind": "plot.sensor_circle",
            "sensor": i + 1,
            "center": sensor.center,
            "radius": sensor.radius,
        }));
    }
    for (s, speeds) in &sensors {
        let all = speeds.values().flatten().copied();
        let lo = all.clone().fold(f64::INFINITY, f64::min);
        let hi = all.fold(f64::NEG_INFINITY, f64::max);
        let edges: Vec<f64> = (0..=HISTOGRAM_BINS)
            .map(|i| lo + (hi - lo) * i as f64 / HISTOGRAM_BINS as f64)
            .collect();
        for (a, v) in speeds {
            lines.push(json!({
                "kind": "plot.speed_histogram",
                "sensor": s,
                "aircraft": a,
                "bin_edges": edges,
                "counts": histogram(v, lo, hi, HISTOGRAM_BINS),
            }));
        }
    }
    Ok(lines)
}

/// Two rankings disagree when some pair of aircraft appears in both in
/// opposite order.
pub fn rankings_disagree(a: &[usize], b: &[usize]) -> bool {
    let pos = |r: &[usize], x: usize| r.iter().position(|&y| y == x);
    for (i, &x) in a.iter().enumerate() {
        for &y in &a[i + 1..] {
            if let (Some(px), Some(py)) = (pos(b, x), pos(b, y)) {
                if px > py {
                    return true;
                }
            }
        }
    }
    false
}

/// Writes the trace as JSON lines.
pub fn write_trace(path: &Path, case: &Case) -> Result<(), HarnessError> {
    let mut out = String::new();
    for line in trace_case(case)? {
        out.push_str(&serde_json::to_string(&line).expect("trace values serialize"));
        out.push('\n');
    }
    write(path, &out)
}
