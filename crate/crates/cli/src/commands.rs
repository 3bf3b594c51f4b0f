use std::path::{Path, PathBuf};
use std::time::Duration;

use dcsbm_core::em::{run_trials, summarize, EmConfig, EmVariant};
use dcsbm_core::evaluation::bench::{exact_to_csv, trials_to_csv, AGREEMENT_TABLE, EXACT_TABLE, HEURISTIC_TABLE};
use dcsbm_core::evaluation::{
    aggregate, agreement, compute_gaps, plot, read_results, run_benchmark, write_results, BenchConfig,
    ExactRecord, Method, Tables, TrialRecord,
};
use dcsbm_core::exact::{solve_exact, SolveConfig, VertexOrder};
use dcsbm_core::generator::{
    read_manifest, suite_entries, write_suite, GeneratorConfig, ManifestRow, OmegaSpec,
    Strength, SuiteEntry, SuiteKind, MANIFEST_FILE,
};
use dcsbm_core::instance::{read_instance, read_solution, write_solution, format_solution, Instance, Solution, SolveStatus};
use dcsbm_core::io::write_atomic;
use dcsbm_core::relaxation::{build_bounds, default_breakpoints, export_milp, MilpOptions};
use dcsbm_core::evaluation::metrics::gap_pct;

use crate::args::*;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> Result<()> {
    let threads = cli.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    match &cli.command {
        Command::Generate(a) => generate(cli, a),
        Command::Solve(a) => solve(cli, a, threads),
        Command::ExportMilp(a) => export(a),
        Command::Eval(e) => eval(cli, e),
        Command::Bench(a) => bench(cli, a, threads),
    }
}

fn required_seed(cli: &Cli, what: &str) -> Result<u64> {
    cli.seed
        .ok_or_else(|| CliError::Usage(format!("{what} requires --seed for reproducibility")))
}

fn time_limit(secs: f64) -> Result<Option<Duration>> {
    if secs.is_infinite() && secs > 0.0 {
        return Ok(None);
    }
    Duration::try_from_secs_f64(secs)
        .map(Some)
        .map_err(|_| CliError::Usage(format!("invalid time limit {secs}")))
}

fn strength(s: StrengthArg) -> Strength {
    match s {
        StrengthArg::Low => Strength::Low,
        StrengthArg::Medium => Strength::Medium,
        StrengthArg::High => Strength::High,
    }
}

fn suite_kind(s: SuiteArg) -> Option<SuiteKind> {
    match s {
        SuiteArg::S1 => Some(SuiteKind::S1),
        SuiteArg::S2 => Some(SuiteKind::S2),
        SuiteArg::S1Desk => Some(SuiteKind::S1Desk),
        SuiteArg::S2Desk => Some(SuiteKind::S2Desk),
        SuiteArg::Custom => None,
    }
}

fn custom_entries(a: &GenerateArgs, seed: u64) -> Result<Vec<SuiteEntry>> {
    let (n, k) = match (a.n, a.k) {
        (Some(n), Some(k)) => (n, k),
        _ => return Err(CliError::Usage("custom suite needs --n and --k".into())),
    };
    let spec = match (a.omega_in, a.omega_out, a.strength) {
        (Some(omega_in), Some(omega_out), None) => OmegaSpec::S1Pair { omega_in, omega_out },
        (None, None, Some(s)) => OmegaSpec::S2Strength(strength(s)),
        _ => {
            return Err(CliError::Usage(
                "custom suite needs --omega-in/--omega-out or --strength".into(),
            ))
        }
    };
    let tag = match &spec {
        OmegaSpec::S1Pair { omega_in, omega_out } => format!("in{omega_in}-out{omega_out}"),
        OmegaSpec::S2Strength(s) => s.as_str().to_string(),
        OmegaSpec::Explicit(_) => unreachable!(),
    };
    Ok((0..a.count)
        .map(|r| {
            let mut config = GeneratorConfig::new(
                n,
                k,
                spec.clone(),
                dcsbm_core::rng::derive_seed(seed, dcsbm_core::rng::STREAM_INSTANCE, r as u64),
            );
            config.reject_isolated = !a.keep_isolated;
            config.reject_empty_truth = !a.allow_empty_groups;
            SuiteEntry {
                id: format!("custom-k{k}-n{n:02}-{tag}-r{r:02}"),
                suite: "custom".into(),
                config,
            }
        })
        .collect())
}

fn generate(cli: &Cli, a: &GenerateArgs) -> Result<()> {
    let seed = required_seed(cli, "generate")?;
    let mut entries = match suite_kind(a.suite) {
        Some(kind) => suite_entries(kind, seed, a.replicates),
        None => custom_entries(a, seed)?,
    };
    for e in &mut entries {
        e.config.reject_isolated = !a.keep_isolated;
        e.config.reject_empty_truth = !a.allow_empty_groups;
        e.config.validate()?;
    }
    let rows = write_suite(&entries, &cli.out_dir)?;
    log::info!("wrote {} instances and {}", rows.len(), cli.out_dir.join(MANIFEST_FILE).display());
    Ok(())
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

fn emit_solution(sol: &Solution, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => Ok(write_solution(sol, p)?),
        None => {
            print!("{}", format_solution(sol));
            Ok(())
        }
    }
}

fn millis(d: Duration, omit: bool) -> f64 {
    if omit {
        0.0
    } else {
        d.as_secs_f64() * 1e3
    }
}

fn truth_agreement(inst: &Instance, labels: &dcsbm_core::Assignment) -> Result<Option<f64>> {
    Ok(inst.ground_truth.as_ref().map(|t| agreement(labels, t)).transpose()?)
}

fn solve(cli: &Cli, a: &SolveArgs, threads: usize) -> Result<()> {
    let inst = read_instance(&a.input)?;
    let id = instance_id(&a.input);
    let seed = cli.seed.unwrap_or(0);
    let limit = time_limit(a.time_limit)?;
    match a.method {
        MethodArg::Exact => {
            let cfg = SolveConfig {
                time_limit: limit,
                vertex_order: match a.vertex_order {
                    OrderArg::Degree => VertexOrder::DegreeDescending,
                    OrderArg::Input => VertexOrder::Input,
                },
                use_sbc: a.sbc.on(),
                warm_start: !a.no_warm_start,
                seed,
                threads,
                trace: a.trace.is_some(),
            };
            let rep = solve_exact::<f64>(&inst, &cfg)?;
            log::info!(
                "{id}: {} objective {} bound {} nodes {}",
                rep.status,
                rep.objective,
                rep.bound,
                rep.nodes
            );
            if let Some(p) = &a.trace {
                let mut text = String::new();
                for ev in &rep.trace {
                    let mut ev = ev.clone();
                    if a.omit_timings {
                        ev.elapsed_s = 0.0;
                    }
                    text.push_str(&serde_json::to_string(&ev).expect("trace events serialize"));
                    text.push('\n');
                }
                write_atomic(p, text.as_bytes())?;
            }
            if let Some(p) = &a.csv {
                let rec = ExactRecord {
                    instance_id: id.clone(),
                    objective: rep.objective,
                    bound: rep.bound,
                    gap_pct: 100.0 * rep.gap,
                    status: rep.status.as_str().into(),
                    nodes: rep.nodes,
                    time_ms: millis(rep.wall_time, a.omit_timings),
                    agreement: truth_agreement(&inst, &rep.assignment)?,
                };
                write_atomic(p, exact_to_csv(&[rec])?.as_bytes())?;
            }
            emit_solution(
                &Solution {
                    objective: rep.objective,
                    status: rep.status,
                    labels: rep.assignment,
                    omega: rep.omega,
                },
                a.output.as_ref(),
            )
        }
        m => {
            let variant = match m {
                MethodArg::EmLs1 => EmVariant::Ls1,
                MethodArg::EmLs2 => EmVariant::Ls2,
                _ => EmVariant::Exact,
            };
            let cfg = EmConfig {
                variant,
                trials: a.trials,
                seed,
                max_relocations: a.max_relocations,
                estep_time_limit: limit,
                threads,
            };
            let results = run_trials::<f64>(&inst, &cfg)?;
            let best_trial = summarize(&results, None).best_trial;
            let bks = a.bks.map_or(results[best_trial].objective, |b| b.min(results[best_trial].objective));
            let summary = summarize(&results, Some(bks));
            log::info!(
                "{id}: {} trials, best {} mean {}",
                summary.trials,
                summary.min_objective,
                summary.mean_objective
            );
            if let Some(p) = &a.trace {
                let mut text = String::new();
                for (t, r) in results.iter().enumerate() {
                    for (step, obj) in r.trace.iter().enumerate() {
                        let line = serde_json::json!({ "trial": t, "step": step, "objective": obj });
                        text.push_str(&line.to_string());
                        text.push('\n');
                    }
                }
                write_atomic(p, text.as_bytes())?;
            }
            if let Some(p) = &a.csv {
                let rows = results
                    .iter()
                    .enumerate()
                    .map(|(t, r)| {
                        Ok(TrialRecord {
                            instance_id: id.clone(),
                            variant: variant.as_str().into(),
                            trial: t,
                            objective: r.objective,
                            gap: gap_pct(r.objective, bks)?,
                            iterations: r.iterations,
                            time_ms: millis(r.wall_time, a.omit_timings),
                            converged: r.converged,
                            agreement: truth_agreement(&inst, &r.assignment)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                write_atomic(p, trials_to_csv(&rows)?.as_bytes())?;
            }
            let best = &results[best_trial];
            emit_solution(
                &Solution {
                    objective: best.objective,
                    status: SolveStatus::Feasible,
                    labels: best.assignment.clone(),
                    omega: best.omega.clone(),
                },
                a.output.as_ref(),
            )
        }
    }
}

fn export(a: &ExportArgs) -> Result<()> {
    let inst = read_instance(&a.input)?;
    let bounds = build_bounds::<f64>(&inst.graph)?;
    let opts = MilpOptions {
        breakpoints: default_breakpoints(&bounds, a.breakpoints),
        epsilon: a.epsilon,
        symmetry_breaking: a.sbc.on(),
    };
    export_milp(&inst, &bounds, &opts, &a.output)?;
    log::info!("wrote {}", a.output.display());
    Ok(())
}

fn manifest_path(r: &ResultsArgs) -> PathBuf {
    r.manifest
        .clone()
        .unwrap_or_else(|| r.results.join("instances").join(MANIFEST_FILE))
}

fn eval(cli: &Cli, e: &EvalCommand) -> Result<()> {
    match e {
        EvalCommand::Agreement(a) => {
            let inst = read_instance(&a.instance)?;
            let truth = inst
                .ground_truth
                .as_ref()
                .ok_or_else(|| CliError::Runtime("invalid", format!("{} has no ground truth", a.instance.display())))?;
            println!("solution,agreement");
            for p in &a.solutions {
                let sol = read_solution(p)?;
                println!("{},{}", p.display(), agreement(&sol.labels, truth)?);
            }
            Ok(())
        }
        EvalCommand::Gap(a) => {
            let sols = a
                .solutions
                .iter()
                .map(|p| Ok((p.display().to_string(), read_solution(p)?.objective)))
                .collect::<Result<Vec<_>>>()?;
            let mut methods = sols.clone();
            if let Some(b) = a.bks {
                methods.push(("reference".into(), b));
            }
            let recs = compute_gaps(&a.instance_id, None, &methods)?;
            let mut w = csv_writer();
            for r in recs.iter().filter(|r| a.bks.is_none() || r.method != "reference") {
                w.serialize(r).map_err(core_csv)?;
            }
            print!("{}", finish_csv(w)?);
            Ok(())
        }
        EvalCommand::Plot(r) => {
            let rows = read_manifest(manifest_path(r))?;
            let res = read_results(&r.results)?;
            write_atomic(&cli.out_dir.join("agreement.svg"), plot::agreement_chart(&rows, &res).as_bytes())?;
            write_atomic(&cli.out_dir.join("speedup.svg"), plot::speedup_chart(&rows, &res).as_bytes())?;
            Ok(())
        }
        EvalCommand::Tables(r) => {
            let rows = read_manifest(manifest_path(r))?;
            let res = read_results(&r.results)?;
            write_tables(&cli.out_dir, &aggregate(&rows, &res)?)
        }
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn core_csv(e: csv::Error) -> CliError {
    CliError::Runtime("csv", e.to_string())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Runtime("io", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn write_tables(dir: &Path, t: &Tables) -> Result<()> {
    if let Some(x) = &t.exact {
        write_atomic(&dir.join(EXACT_TABLE), x.to_csv()?.as_bytes())?;
    }
    if let Some(x) = &t.heuristics {
        write_atomic(&dir.join(HEURISTIC_TABLE), x.to_csv()?.as_bytes())?;
    }
    write_atomic(&dir.join(AGREEMENT_TABLE), t.agreement.to_csv()?.as_bytes())?;
    Ok(())
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Exact => Method::Exact,
        MethodArg::EmLs1 => Method::Em(EmVariant::Ls1),
        MethodArg::EmLs2 => Method::Em(EmVariant::Ls2),
        MethodArg::EmExact => Method::Em(EmVariant::Exact),
    }
}

/// Resolves `--suite` to (manifest directory, rows), generating named
/// suites under `<out-dir>/instances`.
fn load_suite(cli: &Cli, a: &BenchArgs, seed: u64) -> Result<(PathBuf, Vec<ManifestRow>)> {
    if let Ok(kind) = a.suite.parse::<SuiteKind>() {
        let dir = cli.out_dir.join("instances");
        let rows = write_suite(&suite_entries(kind, seed, a.replicates), &dir)?;
        log::info!("generated {} instances of {} in {}", rows.len(), kind.as_str(), dir.display());
        return Ok((dir, rows));
    }
    let p = PathBuf::from(&a.suite);
    let manifest = if p.is_dir() { p.join(MANIFEST_FILE) } else { p };
    if !manifest.exists() {
        return Err(CliError::Usage(format!(
            "--suite '{}' is neither a suite name nor an existing manifest",
            a.suite
        )));
    }
    let dir = manifest.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    Ok((dir, read_manifest(&manifest)?))
}

fn bench(cli: &Cli, a: &BenchArgs, threads: usize) -> Result<()> {
    let seed = required_seed(cli, "bench")?;
    let (dir, rows) = load_suite(cli, a, seed)?;
    let mut methods: Vec<Method> = Vec::new();
    for m in a.methods.iter().map(|&m| method(m)) {
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let cfg = BenchConfig {
        methods,
        time_limit: time_limit(a.time_limit)?,
        trials: a.trials,
        seed,
        threads,
        use_sbc: a.sbc.on(),
        omit_timings: a.omit_timings,
    };
    log::info!("benchmarking {} instances with {threads} threads", rows.len());
    let results = run_benchmark(&dir, &rows, &cfg)?;
    let tables = aggregate(&rows, &results)?;
    write_results(&cli.out_dir, &results, &tables)?;
    write_atomic(&cli.out_dir.join("agreement.svg"), plot::agreement_chart(&rows, &results).as_bytes())?;
    write_atomic(&cli.out_dir.join("speedup.svg"), plot::speedup_chart(&rows, &results).as_bytes())?;
    log::info!("results in {}", cli.out_dir.display());
    Ok(())
}
