//! Benchmark harness: runs the selected methods over a generated suite,
//! records per-instance and per-trial results and folds them into tables
//! keyed like the published result tables.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::em::{run_trials, EmConfig, EmVariant};
use crate::error::{Error, Result};
use crate::exact::{solve_exact, SolveConfig};
use crate::generator::{resolve_path, ManifestRow};
use crate::instance::{format_sig, read_instance, Assignment, Instance, SolveStatus};
use crate::io::write_atomic;
use crate::rng::{derive_seed, STREAM_BENCH};

use super::metrics::{agreement, best_known, gap_pct};

pub const EXACT_RESULTS: &str = "exact.csv";
pub const TRIAL_RESULTS: &str = "trials.csv";
pub const BKS_RESULTS: &str = "bks.csv";
pub const EXACT_TABLE: &str = "table_exact.csv";
pub const HEURISTIC_TABLE: &str = "table_heuristics.csv";
pub const AGREEMENT_TABLE: &str = "table_agreement.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Em(EmVariant),
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Exact,
        Method::Em(EmVariant::Ls1),
        Method::Em(EmVariant::Ls2),
        Method::Em(EmVariant::Exact),
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Em(v) => v.as_str(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub methods: Vec<Method>,
    pub time_limit: Option<Duration>,
    pub trials: usize,
    pub seed: u64,
    pub threads: usize,
    pub use_sbc: bool,
    /// Record every wall time as zero so outputs are byte-reproducible.
    pub omit_timings: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            methods: Method::ALL.to_vec(),
            time_limit: Some(Duration::from_secs(60)),
            trials: 50,
            seed: 0,
            threads: 1,
            use_sbc: true,
            omit_timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRecord {
    pub instance_id: String,
    pub objective: f64,
    pub bound: f64,
    pub gap_pct: f64,
    pub status: String,
    pub nodes: u64,
    pub time_ms: f64,
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub instance_id: String,
    pub variant: String,
    pub trial: usize,
    pub objective: f64,
    pub gap: f64,
    pub iterations: usize,
    pub time_ms: f64,
    pub converged: bool,
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BksRecord {
    pub instance_id: String,
    pub bks: f64,
    /// Method (and trial, for heuristics) that attained the BKS first.
    pub source: String,
    pub agreement: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchResults {
    pub exact: Vec<ExactRecord>,
    pub trials: Vec<TrialRecord>,
    pub bks: Vec<BksRecord>,
}

fn millis(d: Duration, omit: bool) -> f64 {
    if omit {
        0.0
    } else {
        d.as_secs_f64() * 1e3
    }
}

struct InstanceResults {
    exact: Option<ExactRecord>,
    trials: Vec<TrialRecord>,
    bks: BksRecord,
}

/// Runs every configured method on one instance. `index` selects the
/// instance's seed stream, so any instance can be rerun on its own.
pub fn bench_instance(id: &str, inst: &Instance, index: usize, cfg: &BenchConfig) -> Result<BenchResults> {
    let r = run_instance(id, inst, index, cfg)?;
    Ok(BenchResults {
        exact: r.exact.into_iter().collect(),
        trials: r.trials,
        bks: vec![r.bks],
    })
}

fn run_instance(id: &str, inst: &Instance, index: usize, cfg: &BenchConfig) -> Result<InstanceResults> {
    let seed = derive_seed(cfg.seed, STREAM_BENCH, index as u64);
    let truth = inst.ground_truth.as_ref();
    let agree = |a: &Assignment| truth.map(|t| agreement(a, t)).transpose();

    // (objective, source, labels) in method order; the first minimum wins.
    let mut candidates: Vec<(f64, String, Assignment)> = Vec::new();
    let mut exact = None;
    let mut runs = Vec::new();
    for &method in &cfg.methods {
        match method {
            Method::Exact => {
                let rep = solve_exact::<f64>(
                    inst,
                    &SolveConfig {
                        time_limit: cfg.time_limit,
                        use_sbc: cfg.use_sbc,
                        seed,
                        threads: 1,
                        ..SolveConfig::default()
                    },
                )?;
                exact = Some(ExactRecord {
                    instance_id: id.to_string(),
                    objective: rep.objective,
                    bound: rep.bound,
                    gap_pct: 100.0 * rep.gap,
                    status: rep.status.as_str().to_string(),
                    nodes: rep.nodes,
                    time_ms: millis(rep.wall_time, cfg.omit_timings),
                    agreement: agree(&rep.assignment)?,
                });
                candidates.push((rep.objective, "exact".into(), rep.assignment));
            }
            Method::Em(variant) => {
                let em = EmConfig {
                    variant,
                    trials: cfg.trials,
                    seed,
                    threads: 1,
                    estep_time_limit: cfg.time_limit,
                    ..EmConfig::default()
                };
                let res = run_trials::<f64>(inst, &em)?;
                for (t, r) in res.iter().enumerate() {
                    candidates.push((r.objective, format!("{}#{t}", variant.as_str()), r.assignment.clone()));
                }
                runs.push((variant, res));
            }
        }
    }
    let bks = best_known(candidates.iter().map(|c| c.0))
        .ok_or_else(|| Error::Config("no methods selected".into()))?;
    let (_, source, labels) = candidates
        .iter()
        .find(|c| c.0 == bks)
        .expect("bks is one of the candidates");

    let mut trials = Vec::new();
    for (variant, res) in runs {
        for (t, r) in res.into_iter().enumerate() {
            trials.push(TrialRecord {
                instance_id: id.to_string(),
                variant: variant.as_str().to_string(),
                trial: t,
                objective: r.objective,
                gap: gap_pct(r.objective, bks)?,
                iterations: r.iterations,
                time_ms: millis(r.wall_time, cfg.omit_timings),
                converged: r.converged,
                agreement: agree(&r.assignment)?,
            });
        }
    }
    Ok(InstanceResults {
        exact,
        trials,
        bks: BksRecord {
            instance_id: id.to_string(),
            bks,
            source: source.clone(),
            agreement: agree(labels)?,
        },
    })
}

/// Benchmarks already loaded instances; results keep the input order for
/// any thread count.
pub fn bench_instances(instances: &[(String, Instance)], cfg: &BenchConfig) -> Result<BenchResults> {
    if cfg.methods.is_empty() {
        return Err(Error::Config("no methods selected".into()));
    }
    let run = |i: usize| run_instance(&instances[i].0, &instances[i].1, i, cfg);
    let per: Vec<InstanceResults> = if cfg.threads <= 1 {
        (0..instances.len()).map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| {
            use rayon::prelude::*;
            (0..instances.len()).into_par_iter().map(run).collect::<Result<_>>()
        })?
    };
    let mut out = BenchResults::default();
    for r in per {
        out.exact.extend(r.exact);
        out.trials.extend(r.trials);
        out.bks.push(r.bks);
    }
    Ok(out)
}

/// Loads every manifest row (paths relative to `manifest_dir`) and
/// benchmarks it.
pub fn run_benchmark(manifest_dir: &Path, rows: &[ManifestRow], cfg: &BenchConfig) -> Result<BenchResults> {
    let instances = rows
        .iter()
        .map(|r| Ok((r.id.clone(), read_instance(resolve_path(manifest_dir, r))?)))
        .collect::<Result<Vec<_>>>()?;
    bench_instances(&instances, cfg)
}

/// A rendered result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tables {
    /// Opt / Gap / Time / Nodes of the exact solver.
    pub exact: Option<Table>,
    /// Mean gap and time per heuristic.
    pub heuristics: Option<Table>,
    /// Mean ground-truth agreement per method.
    pub agreement: Table,
}

#[derive(Clone, Copy, PartialEq)]
enum Layout {
    /// n, omega_in, omega_out
    Pair,
    /// K, n, strength
    Strength,
    /// K, n
    Plain,
}

fn layout(rows: &[ManifestRow]) -> Layout {
    if rows.iter().all(|r| r.omega_in.is_some() && r.omega_out.is_some()) {
        Layout::Pair
    } else if rows.iter().all(|r| r.strength.is_some()) {
        Layout::Strength
    } else {
        Layout::Plain
    }
}

fn key_header(l: Layout) -> Vec<String> {
    let cols: &[&str] = match l {
        Layout::Pair => &["n", "omega_in", "omega_out"],
        Layout::Strength => &["K", "n", "strength"],
        Layout::Plain => &["K", "n"],
    };
    cols.iter().map(|s| s.to_string()).collect()
}

fn key_of(l: Layout, r: &ManifestRow) -> Vec<String> {
    match l {
        Layout::Pair => vec![
            r.n.to_string(),
            format_sig(r.omega_in.unwrap_or(f64::NAN), 6),
            format_sig(r.omega_out.unwrap_or(f64::NAN), 6),
        ],
        Layout::Strength => vec![
            r.k.to_string(),
            r.n.to_string(),
            r.strength.map(|s| s.as_str().to_string()).unwrap_or_default(),
        ],
        Layout::Plain => vec![r.k.to_string(), r.n.to_string()],
    }
}

/// Cells in order of first appearance, each with its instance ids.
fn cells(rows: &[ManifestRow]) -> (Layout, Vec<(Vec<String>, Vec<&str>)>) {
    let l = layout(rows);
    let mut out: Vec<(Vec<String>, Vec<&str>)> = Vec::new();
    let mut index = HashMap::new();
    for r in rows {
        let key = key_of(l, r);
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            out.push((key, Vec::new()));
            out.len() - 1
        });
        out[slot].1.push(r.id.as_str());
    }
    (l, out)
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, c) = xs.into_iter().fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s / c as f64)
}

fn fixed(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format!("{v:.digits$}")).unwrap_or_default()
}

fn summary_key(l: Layout) -> Vec<String> {
    let mut k = vec!["all".to_string()];
    k.resize(key_header(l).len(), String::new());
    k
}

/// Folds raw results into tables. Pure: equal inputs give equal tables.
pub fn aggregate(rows: &[ManifestRow], results: &BenchResults) -> Result<Tables> {
    let (l, cells) = cells(rows);
    let exact_by: HashMap<&str, &ExactRecord> =
        results.exact.iter().map(|e| (e.instance_id.as_str(), e)).collect();
    let bks_by: HashMap<&str, &BksRecord> =
        results.bks.iter().map(|b| (b.instance_id.as_str(), b)).collect();
    let mut trials_by: HashMap<(&str, &str), Vec<&TrialRecord>> = HashMap::new();
    for t in &results.trials {
        trials_by.entry((t.instance_id.as_str(), t.variant.as_str())).or_default().push(t);
    }
    let variants: Vec<&str> = [EmVariant::Ls1, EmVariant::Ls2, EmVariant::Exact]
        .iter()
        .map(|v| v.as_str())
        .filter(|v| results.trials.iter().any(|t| t.variant == *v))
        .collect();
    let has_exact = !results.exact.is_empty();

    for r in rows {
        let id = r.id.as_str();
        let missing = !bks_by.contains_key(id)
            || (has_exact && !exact_by.contains_key(id))
            || variants.iter().any(|v| !trials_by.contains_key(&(id, *v)));
        if missing {
            return Err(Error::MissingResult(r.id.clone()));
        }
    }

    let all_ids: Vec<&str> = rows.iter().map(|r| r.id.as_str()).collect();
    let mut groups: Vec<(Vec<String>, Vec<&str>)> = cells;
    groups.push((summary_key(l), all_ids));

    let exact = has_exact.then(|| {
        let mut header = key_header(l);
        header.extend(["instances", "opt", "gap_pct", "time_s", "nodes"].map(String::from));
        let rows = groups
            .iter()
            .map(|(key, ids)| {
                let recs: Vec<&ExactRecord> = ids.iter().map(|id| exact_by[id]).collect();
                let opt = recs.iter().filter(|e| e.status == SolveStatus::Optimal.as_str()).count();
                let mut row = key.clone();
                row.push(recs.len().to_string());
                row.push(opt.to_string());
                row.push(fixed(mean(recs.iter().map(|e| e.gap_pct)), 4));
                row.push(fixed(mean(recs.iter().map(|e| e.time_ms / 1e3)), 6));
                row.push(fixed(mean(recs.iter().map(|e| e.nodes as f64)), 1));
                row
            })
            .collect();
        Table { header, rows }
    });

    let heuristics = (!variants.is_empty()).then(|| {
        let mut header = key_header(l);
        for v in &variants {
            header.push(format!("{v}_gap_pct"));
            header.push(format!("{v}_time_s"));
        }
        header.push("note".into());
        let rows = groups
            .iter()
            .map(|(key, ids)| {
                let mut row = key.clone();
                for v in &variants {
                    let ts: Vec<&TrialRecord> =
                        ids.iter().flat_map(|id| trials_by[&(*id, *v)].iter().copied()).collect();
                    row.push(fixed(mean(ts.iter().map(|t| t.gap)), 4));
                    row.push(fixed(mean(ts.iter().map(|t| t.time_ms / 1e3)), 6));
                }
                let negative = ids.iter().any(|id| bks_by[id].bks < 0.0);
                row.push(if negative { "bks<0".into() } else { String::new() });
                row
            })
            .collect();
        Table { header, rows }
    });

    let mut header = key_header(l);
    header.extend(variants.iter().map(|v| v.to_string()));
    header.push("bks".into());
    let agreement_rows = groups
        .iter()
        .map(|(key, ids)| {
            let mut row = key.clone();
            for v in &variants {
                row.push(fixed(
                    mean(ids.iter().flat_map(|id| trials_by[&(*id, *v)].iter().filter_map(|t| t.agreement))),
                    4,
                ));
            }
            row.push(fixed(mean(ids.iter().filter_map(|id| bks_by[id].agreement)), 4));
            row
        })
        .collect();

    Ok(Tables {
        exact,
        heuristics,
        agreement: Table { header, rows: agreement_rows },
    })
}

fn to_csv<T: Serialize>(records: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn from_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

pub fn trials_to_csv(records: &[TrialRecord]) -> Result<String> {
    to_csv(records)
}

pub fn exact_to_csv(records: &[ExactRecord]) -> Result<String> {
    to_csv(records)
}

/// Writes raw results and tables into `dir`. Files for absent methods are
/// not written.
pub fn write_results(dir: &Path, results: &BenchResults, tables: &Tables) -> Result<()> {
    if !results.exact.is_empty() {
        write_atomic(&dir.join(EXACT_RESULTS), to_csv(&results.exact)?.as_bytes())?;
    }
    if !results.trials.is_empty() {
        write_atomic(&dir.join(TRIAL_RESULTS), to_csv(&results.trials)?.as_bytes())?;
    }
    write_atomic(&dir.join(BKS_RESULTS), to_csv(&results.bks)?.as_bytes())?;
    if let Some(t) = &tables.exact {
        write_atomic(&dir.join(EXACT_TABLE), t.to_csv()?.as_bytes())?;
    }
    if let Some(t) = &tables.heuristics {
        write_atomic(&dir.join(HEURISTIC_TABLE), t.to_csv()?.as_bytes())?;
    }
    write_atomic(&dir.join(AGREEMENT_TABLE), tables.agreement.to_csv()?.as_bytes())
}

/// Reads raw results written by [`write_results`].
pub fn read_results(dir: &Path) -> Result<BenchResults> {
    let opt = |name: &str| dir.join(name).exists().then(|| dir.join(name));
    Ok(BenchResults {
        exact: opt(EXACT_RESULTS).map(|p| from_csv(&p)).transpose()?.unwrap_or_default(),
        trials: opt(TRIAL_RESULTS).map(|p| from_csv(&p)).transpose()?.unwrap_or_default(),
        bks: from_csv(&dir.join(BKS_RESULTS))?,
    })
}
