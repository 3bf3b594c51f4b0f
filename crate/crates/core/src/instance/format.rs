//! Text formats for instances and solutions.
//!
//! Vertices and groups are 1-indexed on disk and 0-indexed in memory; the
//! conversion happens only here.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{AffinityMatrix, Assignment, Graph, Instance};
use crate::error::{Error, Result};
use crate::io::{read_to_string, write_atomic};

const INSTANCE_MAGIC: &str = "dcsbm-instance v1";
const SOLUTION_MAGIC: &str = "dcsbm-solution v1";

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance> {
    parse_instance(&read_to_string(path.as_ref())?)
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_instance(inst).as_bytes())
}

pub fn format_instance(inst: &Instance) -> String {
    let g = &inst.graph;
    let mut out = String::new();
    writeln!(out, "{INSTANCE_MAGIC}").unwrap();
    let seed = inst.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(out, "n {} m {} K {} seed {}", g.n(), g.m(), inst.k, seed).unwrap();
    match &inst.ground_truth {
        Some(t) => writeln!(out, "ground-truth {}", labels_line(t)).unwrap(),
        None => writeln!(out, "ground-truth none").unwrap(),
    }
    match &inst.gen_omega {
        Some(w) => {
            writeln!(out, "gen-omega").unwrap();
            write_matrix(&mut out, w);
        }
        None => writeln!(out, "gen-omega none").unwrap(),
    }
    writeln!(out, "edges").unwrap();
    for (i, j, c) in g.edge_list() {
        writeln!(out, "{} {} {}", i + 1, j + 1, c).unwrap();
    }
    writeln!(out, "end").unwrap();
    out
}

fn labels_line(a: &Assignment) -> String {
    let parts: Vec<String> = a.labels().iter().map(|g| (g + 1).to_string()).collect();
    parts.join(" ")
}

fn write_matrix(out: &mut String, w: &AffinityMatrix<f64>) {
    for r in 0..w.k() {
        let row: Vec<String> = (0..w.k()).map(|s| format!("{}", w.get(r, s))).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
}

/// Line cursor that skips blank lines and remembers 1-based line numbers.
struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        for (idx, line) in self.inner.by_ref() {
            self.last = idx + 1;
            let t = line.trim();
            if !t.is_empty() {
                return Ok((idx + 1, t));
            }
        }
        Err(Error::parse(self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn rest_is_blank(&mut self) -> Option<usize> {
        self.inner
            .by_ref()
            .find(|(_, l)| !l.trim().is_empty())
            .map(|(i, _)| i + 1)
    }
}

fn parse_num<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} '{tok}'")))
}

fn expect_key<'a>(line: usize, toks: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str> {
    match toks.next() {
        Some(k) if k == key => toks
            .next()
            .ok_or_else(|| Error::parse(line, format!("missing value for '{key}'"))),
        other => Err(Error::parse(
            line,
            format!("expected '{key}', found '{}'", other.unwrap_or("")),
        )),
    }
}

fn parse_labels<'a>(
    line: usize,
    toks: impl Iterator<Item = &'a str>,
    n: usize,
    k: usize,
) -> Result<Assignment> {
    let labels = toks
        .map(|t| {
            let g: usize = parse_num(line, t, "label")?;
            if g == 0 || g > k {
                return Err(Error::parse(line, format!("label {g} outside 1..={k}")));
            }
            Ok(g - 1)
        })
        .collect::<Result<Vec<_>>>()?;
    if labels.len() != n {
        return Err(Error::parse(
            line,
            format!("expected {n} labels, found {}", labels.len()),
        ));
    }
    Assignment::new(labels, k)
}

fn parse_matrix(lines: &mut Lines<'_>, k: usize) -> Result<AffinityMatrix<f64>> {
    let mut data = Vec::with_capacity(k * k);
    let mut first = 0;
    for r in 0..k {
        let (ln, text) = lines.next_line("omega row")?;
        if r == 0 {
            first = ln;
        }
        let row = text
            .split_whitespace()
            .map(|t| parse_num::<f64>(ln, t, "omega entry"))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != k {
            return Err(Error::parse(ln, format!("omega row has {} entries, expected {k}", row.len())));
        }
        data.extend(row);
    }
    AffinityMatrix::new(k, data).map_err(|e| Error::parse(first, e.to_string()))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = Lines::new(text);
    let (ln, magic) = lines.next_line("header")?;
    if magic != INSTANCE_MAGIC {
        return Err(Error::parse(ln, format!("expected '{INSTANCE_MAGIC}'")));
    }

    let (ln, header) = lines.next_line("size line")?;
    let mut toks = header.split_whitespace();
    let n: usize = parse_num(ln, expect_key(ln, &mut toks, "n")?, "n")?;
    let m: u64 = parse_num(ln, expect_key(ln, &mut toks, "m")?, "m")?;
    let k: usize = parse_num(ln, expect_key(ln, &mut toks, "K")?, "K")?;
    let seed = match expect_key(ln, &mut toks, "seed")? {
        "none" => None,
        s => Some(parse_num::<u64>(ln, s, "seed")?),
    };
    if toks.next().is_some() {
        return Err(Error::parse(ln, "trailing tokens on size line"));
    }
    if k == 0 {
        return Err(Error::parse(ln, "K must be at least 1"));
    }

    let (ln, truth_line) = lines.next_line("ground-truth line")?;
    let mut toks = truth_line.split_whitespace();
    if toks.next() != Some("ground-truth") {
        return Err(Error::parse(ln, "expected 'ground-truth'"));
    }
    let rest: Vec<&str> = toks.collect();
    let ground_truth = if rest == ["none"] {
        None
    } else {
        Some(parse_labels(ln, rest.into_iter(), n, k)?)
    };

    let (ln, omega_line) = lines.next_line("gen-omega line")?;
    let gen_omega = match omega_line {
        "gen-omega none" => None,
        "gen-omega" => Some(parse_matrix(&mut lines, k)?),
        _ => return Err(Error::parse(ln, "expected 'gen-omega' or 'gen-omega none'")),
    };

    let (ln, edges_kw) = lines.next_line("'edges'")?;
    if edges_kw != "edges" {
        return Err(Error::parse(ln, "expected 'edges'"));
    }
    let mut adj = vec![0u64; n * n];
    let mut edge_total = 0u64;
    loop {
        let (ln, text) = lines.next_line("edge or 'end'")?;
        if text == "end" {
            if let Some(extra) = lines.rest_is_blank() {
                return Err(Error::parse(extra, "content after 'end'"));
            }
            if edge_total != m {
                return Err(Error::parse(
                    ln,
                    format!("header says m = {m} but edges sum to {edge_total}"),
                ));
            }
            break;
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(ln, "edge line must be '<i> <j> <count>'"));
        }
        let i: usize = parse_num(ln, toks[0], "vertex")?;
        let j: usize = parse_num(ln, toks[1], "vertex")?;
        let c: u64 = parse_num(ln, toks[2], "count")?;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::parse(ln, format!("vertex outside 1..={n}")));
        }
        if i > j {
            return Err(Error::parse(ln, "edge must be written with i <= j"));
        }
        if c == 0 {
            return Err(Error::parse(ln, "zero edge count"));
        }
        let (i, j) = (i - 1, j - 1);
        if adj[i * n + j] != 0 {
            return Err(Error::parse(ln, "duplicate pair"));
        }
        if i == j {
            adj[i * n + i] = 2 * c;
        } else {
            adj[i * n + j] = c;
            adj[j * n + i] = c;
        }
        edge_total += c;
    }

    let graph = Graph::from_adjacency(n, adj)?;
    let inst = Instance {
        graph,
        k,
        ground_truth,
        gen_omega,
        seed,
    };
    inst.validate()?;
    Ok(inst)
}

/// Outcome classification written to solution files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    TimeLimit,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::TimeLimit => "time-limit",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "optimal" => Ok(SolveStatus::Optimal),
            "feasible" => Ok(SolveStatus::Feasible),
            "time-limit" => Ok(SolveStatus::TimeLimit),
            other => Err(format!("unknown status '{other}'")),
        }
    }
}

/// A fitted labelling with its objective (negative log-likelihood,
/// constant included).
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub objective: f64,
    pub status: SolveStatus,
    pub labels: Assignment,
    pub omega: AffinityMatrix<f64>,
}

pub fn format_solution(sol: &Solution) -> String {
    let mut out = String::new();
    writeln!(out, "{SOLUTION_MAGIC}").unwrap();
    writeln!(out, "objective {}", format_sig(sol.objective, 12)).unwrap();
    writeln!(out, "status {}", sol.status).unwrap();
    writeln!(out, "labels {}", labels_line(&sol.labels)).unwrap();
    writeln!(out, "omega {}", sol.omega.k()).unwrap();
    write_matrix(&mut out, &sol.omega);
    out
}

pub fn write_solution(sol: &Solution, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), format_solution(sol).as_bytes())
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<Solution> {
    parse_solution(&read_to_string(path.as_ref())?)
}

pub fn parse_solution(text: &str) -> Result<Solution> {
    let mut lines = Lines::new(text);
    let (ln, magic) = lines.next_line("header")?;
    if magic != SOLUTION_MAGIC {
        return Err(Error::parse(ln, format!("expected '{SOLUTION_MAGIC}'")));
    }
    let (ln, text) = lines.next_line("objective")?;
    let mut toks = text.split_whitespace();
    let objective: f64 = parse_num(ln, expect_key(ln, &mut toks, "objective")?, "objective")?;
    let (ln, text) = lines.next_line("status")?;
    let mut toks = text.split_whitespace();
    let status: SolveStatus = expect_key(ln, &mut toks, "status")?
        .parse()
        .map_err(|e: String| Error::parse(ln, e))?;
    let (labels_ln, labels_text) = lines.next_line("labels")?;
    let (ln, text) = lines.next_line("omega")?;
    let mut toks = text.split_whitespace();
    let k: usize = parse_num(ln, expect_key(ln, &mut toks, "omega")?, "K")?;
    let mut toks = labels_text.split_whitespace();
    if toks.next() != Some("labels") {
        return Err(Error::parse(labels_ln, "expected 'labels'"));
    }
    let raw: Vec<&str> = toks.collect();
    let labels = parse_labels(labels_ln, raw.iter().copied(), raw.len(), k)?;
    let omega = parse_matrix(&mut lines, k)?;
    if let Some(extra) = lines.rest_is_blank() {
        return Err(Error::parse(extra, "content after omega matrix"));
    }
    Ok(Solution {
        objective,
        status,
        labels,
        omega,
    })
}

/// Formats `x` with `sig` significant digits, choosing fixed or scientific
/// notation like C's `%g` and trimming trailing zeros.
pub fn format_sig(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= sig as i32 {
        let mant = trim_zeros(mant);
        format!("{mant}e{exp}")
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_VERTEX: &str = "dcsbm-instance v1\nn 2 m 1 K 2 seed none\nground-truth none\ngen-omega none\nedges\n1 2 1\nend\n";

    #[test]
    fn parse_single_edge() {
        let inst = parse_instance(TWO_VERTEX).unwrap();
        assert_eq!(inst.graph.degrees(), &[1, 1]);
        assert_eq!(inst.graph.m(), 1);
        assert_eq!(inst.k, 2);
        assert_eq!(format_instance(&inst), TWO_VERTEX);
    }

    #[test]
    fn header_mismatch_is_reported() {
        let text = "dcsbm-instance v1\nn 3 m 5 K 2 seed 1\nground-truth none\ngen-omega none\nedges\n1 2 3\n2 3 1\nend\n";
        match parse_instance(text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 8);
                assert!(msg.contains("m = 5"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = TWO_VERTEX.replace("1 2 1", "2 1 1");
        assert!(matches!(parse_instance(&bad), Err(Error::Parse { line: 6, .. })));
        let bad = TWO_VERTEX.replace("1 2 1", "1 3 1");
        assert!(matches!(parse_instance(&bad), Err(Error::Parse { line: 6, .. })));
        let bad = TWO_VERTEX.replace("ground-truth none", "ground-truth 1 3");
        assert!(matches!(parse_instance(&bad), Err(Error::Parse { line: 3, .. })));
        let bad = TWO_VERTEX.replace("end\n", "");
        assert!(matches!(parse_instance(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn empty_edge_section() {
        let inst = Instance::new(Graph::from_edges(3, &[]).unwrap(), 1).unwrap();
        let text = format_instance(&inst);
        assert!(text.ends_with("edges\nend\n"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn self_loops_and_metadata_round_trip() {
        let g = Graph::from_edges(3, &[(0, 0, 2), (0, 2, 1), (1, 2, 3)]).unwrap();
        let inst = Instance {
            graph: g,
            k: 2,
            ground_truth: Some(Assignment::new(vec![0, 1, 1], 2).unwrap()),
            gen_omega: Some(AffinityMatrix::new(2, vec![0.91, 0.1234567890123, 0.1234567890123, 0.0]).unwrap()),
            seed: Some(u64::MAX),
        };
        let text = format_instance(&inst);
        assert!(text.contains("\n1 1 2\n"));
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.graph.adj(0, 0), 4);
        assert_eq!(format_instance(&back), text);
    }

    #[test]
    fn solution_round_trip() {
        let sol = Solution {
            objective: 12.345678901234567,
            status: SolveStatus::TimeLimit,
            labels: Assignment::new(vec![0, 1, 0], 2).unwrap(),
            omega: AffinityMatrix::new(2, vec![1.5, 0.25, 0.25, 0.0]).unwrap(),
        };
        let text = format_solution(&sol);
        assert!(text.contains("objective 12.3456789012\n"), "{text}");
        let back = parse_solution(&text).unwrap();
        assert_eq!(back.labels, sol.labels);
        assert_eq!(back.omega, sol.omega);
        assert_eq!(back.status, sol.status);
        assert!((back.objective - sol.objective).abs() < 1e-9);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.0, 12), "0");
        assert_eq!(format_sig(1.0, 12), "1");
        assert_eq!(format_sig(-std::f64::consts::LN_2, 12), "-0.69314718056");
        assert_eq!(format_sig(123456.0, 3), "1.23e5");
        assert_eq!(format_sig(1.5e-7, 12), "1.5e-7");
        assert_eq!(format_sig(1234.5678, 12), "1234.5678");
    }
}
