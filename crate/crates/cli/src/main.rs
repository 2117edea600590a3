mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hhasa_core::harness::{
    benchmark_consumption, best_known, energy_diff_report, read_stats_csv, reference_rows, run_batch,
    short_name, summarize_batch, write_energy_csv, write_ranks_csv, write_stats_csv,
};
use hhasa_core::{
    evaluate, friedman_ranks, holm_posthoc, parse_solution_text, validate, Instance, MeanMatrix,
    MissingPolicy, RunRecord, SelectorKind, SolverConfig, StatsRow, Tour,
};

/// Maximum gap between a stated and a recomputed fitness.
const FITNESS_TOLERANCE: f64 = 1e-2;

const DEFAULT_RANK_ALGORITHMS: [&str; 4] = ["HHASA_TS", "HHASA_UCB1", "HHASA_EG", "HHASA"];

#[derive(Parser)]
#[command(name = "hhasa", version, about = "Bandit hyper-heuristic annealing for the electric vehicle routing problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write solution.txt and run.json.
    Solve(SolveArgs),
    /// Run seeded batches and write stats.csv plus every run record.
    Bench(BenchArgs),
    /// Check a solution file against an instance.
    Validate(ValidateArgs),
    /// Friedman ranks with Holm correction; writes ranks.csv and energy.csv.
    Rank(RankArgs),
    /// Draw a route map or a bandit trace as SVG.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Heuristic selector: random, eg, ts or ucb1.
    #[arg(long)]
    selector: Option<SelectorKind>,
    /// Random seed.
    #[arg(long, env = "CEVRP_SEED")]
    seed: Option<u64>,
    /// File of `key = value` solver parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Factor applied to the evaluation budget.
    #[arg(long)]
    budget_scale: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files or directories of `.evrp` files.
    #[arg(long, required = true, num_args = 1..)]
    instance: Vec<PathBuf>,
    /// Selectors to run; all four when omitted.
    #[arg(long, num_args = 1..)]
    selector: Vec<SelectorKind>,
    /// First seed; run i uses seed + i.
    #[arg(long, env = "CEVRP_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    budget_scale: Option<f64>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Missing {
    Reject,
    Last,
}

#[derive(Args)]
struct RankArgs {
    /// stats.csv files from `bench`; the bundled published means are used
    /// when none are given.
    #[arg(long, num_args = 1..)]
    stats: Vec<PathBuf>,
    /// Also draw on the bundled published means for algorithms missing
    /// from the stats files.
    #[arg(long)]
    reference: bool,
    /// Comma-separated algorithms to compare.
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<String>,
    /// Keep only instances from this one on, e.g. `>=E101`.
    #[arg(long)]
    subset: Option<String>,
    /// How to treat a missing mean.
    #[arg(long, value_enum, default_value = "reject")]
    missing: Missing,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    Route,
    Trace,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Solution text file (route maps only).
    #[arg(long)]
    solution: Option<PathBuf>,
    /// run.json written by `solve` or `bench`.
    #[arg(long)]
    record: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum Failure {
    /// Bad input or usage.
    Input(String),
    /// The solver could not produce a result.
    Solver(String),
    /// The solution is infeasible or its fitness is wrong.
    Invalid,
}

type Outcome = Result<(), Failure>;

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(input(&path.display().to_string()))
}

fn write(path: &Path, contents: &str) -> Outcome {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(input(&dir.display().to_string()))?;
    }
    fs::write(path, contents).map_err(input(&path.display().to_string()))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::from_file(path).map_err(|e| Failure::Input(e.to_string()))
}

fn base_config(config: Option<&Path>) -> Result<SolverConfig, Failure> {
    let mut cfg = SolverConfig::default();
    if let Some(p) = config {
        let text = read(p)?;
        cfg.apply_text(&text).map_err(input(&p.display().to_string()))?;
    }
    Ok(cfg)
}

fn apply_scale(cfg: &mut SolverConfig, scale: Option<f64>) -> Outcome {
    if let Some(s) = scale {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Failure::Input(format!("--budget-scale must be positive, got {s}")));
        }
        cfg.budget_scale = s;
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Outcome {
    let inst = load_instance(&args.instance)?;
    let mut cfg = base_config(args.solver.config.as_deref())?;
    if let Some(s) = args.solver.selector {
        cfg.selector = s;
    }
    if let Some(seed) = args.solver.seed {
        cfg.seed = seed;
    }
    apply_scale(&mut cfg, args.solver.budget_scale)?;
    let rec = hhasa_core::run(&inst, &cfg).map_err(|e| Failure::Solver(e.to_string()))?;
    write(&args.out.join("solution.txt"), &rec.best_tour)?;
    write(&args.out.join("run.json"), &rec.to_json())?;
    println!("FITNESS: {:.2}", rec.best_fitness);
    println!("EVALUATIONS: {}", rec.evaluations);
    Ok(())
}

fn collect_instances(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(input(&p.display().to_string()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "evrp"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Failure::Input("no instance files found".into()));
    }
    Ok(out)
}

fn cmd_bench(args: BenchArgs) -> Outcome {
    if args.runs == 0 {
        return Err(Failure::Input("--runs must be at least 1".into()));
    }
    if args.jobs == Some(0) {
        return Err(Failure::Input("--jobs must be at least 1".into()));
    }
    let mut cfg = base_config(args.config.as_deref())?;
    apply_scale(&mut cfg, args.budget_scale)?;
    let selectors = if args.selector.is_empty() {
        SelectorKind::ALL.to_vec()
    } else {
        args.selector.clone()
    };
    let files = collect_instances(&args.instance)?;
    let mut rows: Vec<StatsRow> = Vec::new();
    let mut failures = 0;
    let mut attempted = 0;
    for file in &files {
        let inst = match Instance::from_file(file) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("skipping {}: {e}", file.display());
                failures += selectors.len();
                attempted += selectors.len();
                continue;
            }
        };
        for &sel in &selectors {
            attempted += 1;
            let cfg = SolverConfig { selector: sel, ..cfg.clone() };
            let entries = run_batch(&inst, &cfg, args.runs, args.seed, args.jobs);
            for e in &entries {
                match &e.result {
                    Ok(rec) => {
                        let path = args
                            .out
                            .join("runs")
                            .join(inst.name())
                            .join(format!("{}-{}.json", sel.label(), e.seed));
                        write(&path, &rec.to_json())?;
                    }
                    Err(msg) => eprintln!("{} {} seed {}: {msg}", inst.name(), sel.label(), e.seed),
                }
            }
            match summarize_batch(&entries) {
                Ok(row) => {
                    println!(
                        "{} {} min {:.2} mean {:.2} std {:.2} runs {}",
                        row.instance, row.selector, row.min, row.mean, row.std, row.runs
                    );
                    rows.push(row);
                }
                Err(_) => failures += 1,
            }
        }
    }
    let mut buf = Vec::new();
    write_stats_csv(&rows, &mut buf).map_err(input("stats.csv"))?;
    write(&args.out.join("stats.csv"), &String::from_utf8(buf).expect("csv is utf-8"))?;
    if failures == attempted {
        return Err(Failure::Solver("every batch failed".into()));
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Outcome {
    let inst = load_instance(&args.instance)?;
    let text = read(&args.solution)?;
    let (mut tour, stated) = parse_solution_text(&text, &inst).map_err(input(&args.solution.display().to_string()))?;
    let violations = validate(&tour, &inst);
    let mut ok = violations.is_empty();
    for v in &violations {
        println!("VIOLATION: {v}");
    }
    match evaluate(&mut tour, &inst) {
        Ok(f) => {
            println!("FITNESS: {f:.2}");
            if let Some(s) = stated {
                if (s - f).abs() > FITNESS_TOLERANCE {
                    println!("MISMATCH: stated {s:.6}, recomputed {f:.6}");
                    ok = false;
                }
            }
        }
        Err(e) => {
            println!("UNEVALUATED: {e}");
            ok = false;
        }
    }
    if ok {
        println!("VALID");
        Ok(())
    } else {
        Err(Failure::Invalid)
    }
}

fn cmd_rank(args: RankArgs) -> Outcome {
    let mut entries: Vec<(String, String, Option<f64>)> = Vec::new();
    let mut own: Vec<StatsRow> = Vec::new();
    for p in &args.stats {
        let file = fs::File::open(p).map_err(input(&p.display().to_string()))?;
        own.extend(read_stats_csv(file).map_err(input(&p.display().to_string()))?);
    }
    let own_algorithms: Vec<String> = own.iter().map(|r| r.selector.clone()).collect();
    if args.stats.is_empty() || args.reference {
        entries.extend(
            reference_rows()
                .into_iter()
                .filter(|r| !own_algorithms.contains(&r.algorithm))
                .map(|r| (r.instance, r.algorithm, r.mean)),
        );
    }
    entries.extend(own.iter().map(|r| (short_name(&r.instance), r.selector.clone(), Some(r.mean))));

    let wanted: Vec<String> = if !args.algorithms.is_empty() {
        args.algorithms.clone()
    } else if args.stats.is_empty() {
        DEFAULT_RANK_ALGORITHMS.iter().map(|s| s.to_string()).collect()
    } else {
        let mut seen = Vec::new();
        for (_, a, _) in &entries {
            if !seen.contains(a) {
                seen.push(a.clone());
            }
        }
        seen
    };
    if wanted.len() < 2 {
        return Err(Failure::Input(format!("need at least 2 algorithms, got {}", wanted.len())));
    }
    let names: Vec<&str> = wanted.iter().map(String::as_str).collect();
    let mut m = MeanMatrix::from_entries(entries.clone(), Some(&names)).map_err(input("rank"))?;
    if let Some(spec) = &args.subset {
        m = m.subset_from(spec).map_err(input("--subset"))?;
    }
    let policy = match args.missing {
        Missing::Reject => MissingPolicy::Reject,
        Missing::Last => MissingPolicy::RankLast,
    };
    let report = friedman_ranks(&m, policy).map_err(input("rank"))?;
    let holm = holm_posthoc(&report);
    println!(
        "instances {} chi2 {:.4} p {:.6}",
        report.instances.len(),
        report.chi_square,
        report.p_value
    );
    for h in &holm {
        let p = h.p_holm.map(|p| format!("{p:.6}")).unwrap_or_else(|| "control".into());
        println!("{:<12} {:.4} {p}{}", h.algorithm, h.avg_rank, if h.significant { " *" } else { "" });
    }
    let mut buf = Vec::new();
    write_ranks_csv(&holm, &mut buf).map_err(input("ranks.csv"))?;
    write(&args.out.join("ranks.csv"), &String::from_utf8(buf).expect("csv is utf-8"))?;

    // Energy report over the same cells, when every instance has a
    // best-known value and a consumption rate.
    let known = best_known();
    let rates = benchmark_consumption();
    let stats: Vec<StatsRow> = m
        .instances
        .iter()
        .enumerate()
        .flat_map(|(i, inst)| {
            m.algorithms.iter().enumerate().filter_map({
                let m = &m;
                move |(j, alg)| {
                    m.cells[i][j].map(|mean| StatsRow {
                        instance: inst.clone(),
                        selector: alg.clone(),
                        min: mean,
                        mean,
                        std: 0.0,
                        runs: 0,
                    })
                }
            })
        })
        .collect();
    let by_instance: BTreeMap<&str, ()> = m.instances.iter().map(|i| (i.as_str(), ())).collect();
    if by_instance.keys().all(|i| known.contains_key(*i) && rates.contains_key(*i)) {
        let energy = energy_diff_report(&stats, &known, &rates).map_err(input("energy"))?;
        let mut buf = Vec::new();
        write_energy_csv(&energy, &mut buf).map_err(input("energy.csv"))?;
        write(&args.out.join("energy.csv"), &String::from_utf8(buf).expect("csv is utf-8"))?;
    } else {
        eprintln!("energy.csv skipped: some instances have no best-known value");
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Outcome {
    let record: Option<RunRecord> = match &args.record {
        Some(p) => Some(serde_json::from_str(&read(p)?).map_err(input(&p.display().to_string()))?),
        None => None,
    };
    match args.kind {
        PlotKind::Route => {
            let path = args
                .instance
                .as_ref()
                .ok_or_else(|| Failure::Input("--kind route needs --instance".into()))?;
            let inst = load_instance(path)?;
            let mut tour = match (&args.solution, &record) {
                (Some(p), _) => parse_solution_text(&read(p)?, &inst).map_err(input(&p.display().to_string()))?.0,
                (None, Some(r)) => Tour::new(r.best_seq.clone()),
                (None, None) => return Err(Failure::Input("--kind route needs --solution or --record".into())),
            };
            if tour.seq().len() < 2 || tour.routes().all(|r| r.is_empty()) {
                return Err(Failure::Input("solution has no routes".into()));
            }
            let fitness = evaluate(&mut tour, &inst).map_err(input("solution"))?;
            write(&args.out.join("route.svg"), &svg::route_map(&inst, &tour, fitness))?;
        }
        PlotKind::Trace => {
            let rec = record.ok_or_else(|| Failure::Input("--kind trace needs --record with trace data".into()))?;
            if rec.bandit_trace.is_empty() {
                return Err(Failure::Input("record holds no bandit trace".into()));
            }
            write(&args.out.join("trace.svg"), &svg::trace_plot(&rec))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Invalid) => ExitCode::from(3),
    }
}
