//! Synthetic DCSBM instances: planted labels, sampled affinities and
//! Poisson edge counts, plus the S1/S2 benchmark suites.

use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{write_instance, AffinityMatrix, Assignment, Graph, Instance};
use crate::rng::{derive_seed, rng_from_seed, Rng, STREAM_INSTANCE};

/// Redraw budget for [`generate`].
pub const MAX_REDRAWS: usize = 10_000;

/// Planted community strength levels for assortative suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Low,
    Medium,
    High,
}

/// Closed ranges from which diagonal and off-diagonal affinities are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthRanges {
    pub diag: (f64, f64),
    pub offdiag: (f64, f64),
}

impl Strength {
    pub const ALL: [Strength; 3] = [Strength::Low, Strength::Medium, Strength::High];

    pub fn ranges(self) -> StrengthRanges {
        match self {
            Strength::Low => StrengthRanges {
                diag: (0.4, 1.0),
                offdiag: (0.2, 0.4),
            },
            Strength::Medium => StrengthRanges {
                diag: (0.6, 1.0),
                offdiag: (0.1, 0.3),
            },
            Strength::High => StrengthRanges {
                diag: (0.8, 1.0),
                offdiag: (0.0, 0.2),
            },
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Low => "low",
            Strength::Medium => "medium",
            Strength::High => "high",
        }
    }

    /// Ordinal used for rank correlations (low < medium < high).
    pub fn rank(self) -> u8 {
        self as u8
    }
}

impl std::str::FromStr for Strength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(Strength::Low),
            "medium" => Ok(Strength::Medium),
            "high" => Ok(Strength::High),
            _ => Err(Error::Config(format!("unknown strength '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OmegaSpec {
    /// Two communities, diagonal around `omega_in`, off-diagonal around
    /// `omega_out`, each drawn uniformly within +-0.1.
    S1Pair { omega_in: f64, omega_out: f64 },
    S2Strength(Strength),
    Explicit(AffinityMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub k: usize,
    pub omega_spec: OmegaSpec,
    /// Degree propensities; `None` means all ones.
    pub theta: Option<Vec<f64>>,
    pub seed: u64,
    pub reject_isolated: bool,
    pub reject_empty_truth: bool,
}

impl GeneratorConfig {
    pub fn new(n: usize, k: usize, omega_spec: OmegaSpec, seed: u64) -> Self {
        GeneratorConfig {
            n,
            k,
            omega_spec,
            theta: None,
            seed,
            reject_isolated: true,
            reject_empty_truth: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k {
            return Err(Error::Config(format!("need n >= K >= 1 (n = {}, K = {})", self.n, self.k)));
        }
        if let Some(theta) = &self.theta {
            if theta.len() != self.n {
                return Err(Error::Config(format!("theta has {} entries for n = {}", theta.len(), self.n)));
            }
            if theta.iter().any(|&t| t.is_nan() || t <= 0.0 || !t.is_finite()) {
                return Err(Error::Config("theta entries must be positive".into()));
            }
        }
        match &self.omega_spec {
            OmegaSpec::S1Pair { .. } if self.k != 2 => {
                Err(Error::Config(format!("S1 pair requires K = 2, got {}", self.k)))
            }
            OmegaSpec::Explicit(w) if w.k() != self.k => {
                Err(Error::Config(format!("explicit omega is {0}x{0}, K = {1}", w.k(), self.k)))
            }
            _ => Ok(()),
        }
    }

    fn theta(&self, i: usize) -> f64 {
        self.theta.as_ref().map_or(1.0, |t| t[i])
    }
}

/// Uniform draw on the half-open interval `[lo, hi)`; a degenerate interval
/// returns `lo` without consuming randomness.
fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn sample_omega(cfg: &GeneratorConfig, rng: &mut Rng) -> Result<AffinityMatrix<f64>> {
    cfg.validate()?;
    let k = cfg.k;
    let (diag, off) = match &cfg.omega_spec {
        OmegaSpec::Explicit(w) => return Ok(w.clone()),
        OmegaSpec::S1Pair { omega_in, omega_out } => (
            (omega_in - 0.1, omega_in + 0.1),
            (omega_out - 0.1, omega_out + 0.1),
        ),
        OmegaSpec::S2Strength(s) => {
            let r = s.ranges();
            (r.diag, r.offdiag)
        }
    };
    let mut w = AffinityMatrix::zeros(k);
    for r in 0..k {
        w.set(r, r, uniform(rng, diag.0, diag.1).max(0.0));
    }
    for r in 0..k {
        for s in (r + 1)..k {
            w.set(r, s, uniform(rng, off.0, off.1).max(0.0));
        }
    }
    Ok(w)
}

fn poisson(rng: &mut Rng, mean: f64) -> u64 {
    if mean > 0.0 {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
    } else {
        0
    }
}

/// Draws edge counts for every unordered pair (self-pairs included) given
/// the planted labels and affinities.
pub fn sample_graph(
    cfg: &GeneratorConfig,
    omega: &AffinityMatrix<f64>,
    truth: &Assignment,
    rng: &mut Rng,
) -> Result<Graph> {
    let n = cfg.n;
    if truth.n() != n || omega.k() < truth.k() {
        return Err(Error::Dimension("truth/omega do not match the configuration".into()));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i..n {
            let w = omega.get(truth.label(i), truth.label(j));
            let mean = if i == j {
                0.5 * cfg.theta(i) * cfg.theta(i) * w
            } else {
                cfg.theta(i) * cfg.theta(j) * w
            };
            let c = poisson(rng, mean);
            if c > 0 {
                edges.push((i, j, c));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// Draws labels, affinities and a graph, redrawing until the rejection
/// rules are satisfied.
pub fn generate(cfg: &GeneratorConfig, rng: &mut Rng) -> Result<Instance> {
    cfg.validate()?;
    for _ in 0..MAX_REDRAWS {
        let labels: Vec<usize> = (0..cfg.n).map(|_| rng.random_range(0..cfg.k)).collect();
        let truth = Assignment::new(labels, cfg.k)?;
        if cfg.reject_empty_truth && truth.groups_used() < cfg.k {
            continue;
        }
        let omega = sample_omega(cfg, rng)?;
        let graph = sample_graph(cfg, &omega, &truth, rng)?;
        if graph.m() == 0 {
            continue;
        }
        if cfg.reject_isolated && (0..graph.n()).any(|i| graph.is_isolated(i)) {
            continue;
        }
        return Ok(Instance {
            graph,
            k: cfg.k,
            ground_truth: Some(truth),
            gen_omega: Some(omega),
            seed: Some(cfg.seed),
        });
    }
    Err(Error::RejectionBudget(MAX_REDRAWS))
}

/// [`generate`] with a fresh generator seeded from `cfg.seed`.
pub fn generate_seeded(cfg: &GeneratorConfig) -> Result<Instance> {
    generate(cfg, &mut rng_from_seed(cfg.seed))
}

/// Named benchmark suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    /// K = 2, n in {8..16}, 12 ordered (in, out) pairs, 10 replicates.
    S1,
    /// K in {2, 3}, n in {8..16}, three strengths, 10 replicates.
    S2,
    /// S1 restricted to n <= 12.
    S1Desk,
    /// S2 restricted to n <= 12.
    S2Desk,
}

impl SuiteKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SuiteKind::S1 => "s1",
            SuiteKind::S2 => "s2",
            SuiteKind::S1Desk => "s1-desk",
            SuiteKind::S2Desk => "s2-desk",
        }
    }

    pub fn is_s1(self) -> bool {
        matches!(self, SuiteKind::S1 | SuiteKind::S1Desk)
    }

    fn sizes(self) -> &'static [usize] {
        match self {
            SuiteKind::S1 | SuiteKind::S2 => &[8, 10, 12, 14, 16],
            SuiteKind::S1Desk | SuiteKind::S2Desk => &[8, 10, 12],
        }
    }
}

impl std::str::FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s1" => Ok(SuiteKind::S1),
            "s2" => Ok(SuiteKind::S2),
            "s1-desk" => Ok(SuiteKind::S1Desk),
            "s2-desk" => Ok(SuiteKind::S2Desk),
            _ => Err(Error::Config(format!("unknown suite '{s}'"))),
        }
    }
}

/// Affinity levels combined into the 12 ordered S1 pairs.
pub const S1_LEVELS: [f64; 4] = [0.1, 0.4, 0.6, 0.9];
pub const REPLICATES: usize = 10;

pub fn s1_pairs() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(12);
    for &wi in &S1_LEVELS {
        for &wo in &S1_LEVELS {
            if wi != wo {
                out.push((wi, wo));
            }
        }
    }
    out
}

/// One generated (or to-be-generated) instance of a suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub id: String,
    pub suite: String,
    pub config: GeneratorConfig,
}

/// Enumerates the configurations of a suite; per-instance seeds are
/// `derive_seed(seed, STREAM_INSTANCE, index)` in enumeration order.
pub fn suite_entries(kind: SuiteKind, seed: u64, replicates: usize) -> Vec<SuiteEntry> {
    let mut specs: Vec<(String, usize, usize, OmegaSpec)> = Vec::new();
    if kind.is_s1() {
        for &n in kind.sizes() {
            for (wi, wo) in s1_pairs() {
                for r in 0..replicates {
                    specs.push((
                        format!("{}-n{n:02}-in{wi}-out{wo}-r{r:02}", kind.as_str()),
                        n,
                        2,
                        OmegaSpec::S1Pair {
                            omega_in: wi,
                            omega_out: wo,
                        },
                    ));
                }
            }
        }
    } else {
        for k in [2usize, 3] {
            for &n in kind.sizes() {
                for s in Strength::ALL {
                    for r in 0..replicates {
                        specs.push((
                            format!("{}-k{k}-n{n:02}-{}-r{r:02}", kind.as_str(), s.as_str()),
                            n,
                            k,
                            OmegaSpec::S2Strength(s),
                        ));
                    }
                }
            }
        }
    }
    specs
        .into_iter()
        .enumerate()
        .map(|(idx, (id, n, k, spec))| SuiteEntry {
            id,
            suite: kind.as_str().to_string(),
            config: GeneratorConfig::new(n, k, spec, derive_seed(seed, STREAM_INSTANCE, idx as u64)),
        })
        .collect()
}

/// One manifest row; empty cells for fields that do not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: String,
    pub path: String,
    pub suite: String,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub omega_in: Option<f64>,
    pub omega_out: Option<f64>,
    pub strength: Option<Strength>,
    pub seed: u64,
    pub reject_isolated: bool,
    pub reject_empty_truth: bool,
}

impl ManifestRow {
    pub fn from_entry(entry: &SuiteEntry, path: String) -> Self {
        let (omega_in, omega_out, strength) = match &entry.config.omega_spec {
            OmegaSpec::S1Pair { omega_in, omega_out } => (Some(*omega_in), Some(*omega_out), None),
            OmegaSpec::S2Strength(s) => (None, None, Some(*s)),
            OmegaSpec::Explicit(_) => (None, None, None),
        };
        ManifestRow {
            id: entry.id.clone(),
            path,
            suite: entry.suite.clone(),
            n: entry.config.n,
            k: entry.config.k,
            omega_in,
            omega_out,
            strength,
            seed: entry.config.seed,
            reject_isolated: entry.config.reject_isolated,
            reject_empty_truth: entry.config.reject_empty_truth,
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.csv";

pub fn manifest_to_string(rows: &[ManifestRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Generates every entry into `dir` as `<id>.inst` and writes the manifest.
/// Paths in the manifest are relative to `dir`.
pub fn write_suite(entries: &[SuiteEntry], dir: &Path) -> Result<Vec<ManifestRow>> {
    let mut rows = Vec::with_capacity(entries.len());
    for e in entries {
        let inst = generate_seeded(&e.config)?;
        let file = format!("{}.inst", e.id);
        write_instance(&inst, dir.join(&file))?;
        rows.push(ManifestRow::from_entry(e, file));
    }
    crate::io::write_atomic(&dir.join(MANIFEST_FILE), manifest_to_string(&rows)?.as_bytes())?;
    Ok(rows)
}

/// Resolves a manifest row's instance path against the manifest directory.
pub fn resolve_path(manifest_dir: &Path, row: &ManifestRow) -> PathBuf {
    let p = Path::new(&row.path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_dir.join(p)
    }
}
