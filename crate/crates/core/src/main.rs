use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use subiso::bench::{run_sweep, treewidth_curve, write_curve_csv, write_sweep_csv, SweepConfig};
use subiso::graph::{parse_graph, Graph, GraphFormat, MappingMask};
use subiso::treedecomp::NiceTreeDecomposition;
use subiso::{solve, Mode, SolveOptions};

#[derive(Parser)]
#[command(name = "subiso", version, about = "Color-coding subgraph isomorphism enumeration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every occurrence found, then the count.
    Enumerate(SolveArgs),
    /// Print only the count.
    Count(SolveArgs),
    /// Exact treewidth and nice tree decomposition of a graph.
    Treewidth {
        #[arg(long)]
        graph: PathBuf,
    },
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    pattern: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = (-1.0f64).exp())]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_results: usize,
    /// Overrides the count derived from --epsilon.
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    distinct_vertex_sets: bool,
    #[arg(long, default_value_t = 600)]
    timeout_secs: u64,
    /// Read the target in the extended format with mapping masks.
    #[arg(long)]
    masks: bool,
    #[arg(long)]
    memory_budget_mib: Option<u64>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Timing sweep over Erdős–Rényi pattern and target densities.
    ErSweep {
        #[arg(long, default_value_t = 60)]
        target_n: usize,
        #[arg(long, default_value_t = 8)]
        pattern_n: usize,
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        #[arg(long, default_value_t = 1.0)]
        stop: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 10)]
        iterations: u64,
        #[arg(long, default_value_t = 10)]
        timeout_secs: u64,
        #[arg(long, default_value_t = 768)]
        memory_budget_mib: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Mean exact treewidth of random patterns per edge probability.
    TwCurve {
        #[arg(long, default_value_t = 10)]
        pattern_n: usize,
        #[arg(long, default_value_t = 0.03)]
        step: f64,
        #[arg(long, default_value_t = 30)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Abort,
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read_graph(path: &Path, format: GraphFormat) -> Result<(Graph, Option<MappingMask>), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_graph(&text, format).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run_solve(args: SolveArgs, count_only: bool) -> Result<(), Failure> {
    let (pattern, _) = read_graph(&args.pattern, GraphFormat::Plain)?;
    let format = if args.masks { GraphFormat::Extended } else { GraphFormat::Plain };
    let (target, mask) = read_graph(&args.target, format)?;
    let mut opts = SolveOptions {
        epsilon: args.epsilon,
        max_results: args.max_results,
        mode: if args.distinct_vertex_sets { Mode::DistinctVertexSets } else { Mode::AllMappings },
        seed: args.seed,
        iterations: args.iterations,
        timeout: Some(Duration::from_secs(args.timeout_secs)),
        count_only,
        ..Default::default()
    };
    if let Some(mib) = args.memory_budget_mib {
        opts.memory_budget = mib << 20;
    }
    let sol = solve(&target, &pattern, mask.as_ref(), &opts).map_err(|e| Failure::Usage(e.to_string()))?;

    let mut out = BufWriter::new(io::stdout().lock());
    for phi in sol.occurrences.iter() {
        let line: Vec<String> = phi.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    writeln!(out, "count {}", sol.report.occurrences)?;
    out.flush()?;
    eprintln!("{}", sol.report);
    if sol.report.stop.is_abort() {
        return Err(Failure::Abort);
    }
    Ok(())
}

fn run_treewidth(path: &Path) -> Result<(), Failure> {
    let (g, _) = read_graph(path, GraphFormat::Plain)?;
    let (ntd, width) = NiceTreeDecomposition::for_pattern(&g).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "width {width}")?;
    for id in 0..ntd.len() {
        let node = ntd.node(id);
        let bag: Vec<String> = node.bag.iter().map(|v| v.to_string()).collect();
        let children: Vec<String> = node.children.iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "bag {id} {}: {} children: {}",
            node.kind,
            bag.join(" "),
            children.join(" ")
        )?;
    }
    writeln!(out, "root {}", ntd.root)?;
    out.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run_bench(cmd: BenchCommand) -> Result<(), Failure> {
    match cmd {
        BenchCommand::ErSweep {
            target_n,
            pattern_n,
            start,
            stop,
            step,
            iterations,
            timeout_secs,
            memory_budget_mib,
            seed,
            output,
        } => {
            let cfg = SweepConfig {
                target_n,
                pattern_n,
                start,
                stop,
                step,
                iterations,
                timeout: Duration::from_secs(timeout_secs),
                memory_budget: memory_budget_mib << 20,
                seed,
            };
            let file = create(&output)?;
            let cells = run_sweep(&cfg, |c| {
                eprintln!(
                    "q={:.2} p={:.2} seconds={:.3} outcome={:?} treewidth={} occurrences={}",
                    c.pattern_p, c.target_p, c.seconds, c.outcome, c.treewidth, c.occurrences
                )
            })
            .map_err(Failure::Usage)?;
            write_sweep_csv(&cells, file).map_err(|e| Failure::Usage(e.to_string()))
        }
        BenchCommand::TwCurve {
            pattern_n,
            step,
            samples,
            seed,
            output,
        } => {
            let file = create(&output)?;
            let curve = treewidth_curve(pattern_n, step, samples, seed).map_err(Failure::Usage)?;
            for (q, t) in &curve {
                eprintln!("q={q:.2} mean_treewidth={t:.4}");
            }
            write_curve_csv(&curve, file).map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Enumerate(args) => run_solve(args, false),
        Command::Count(args) => run_solve(args, true),
        Command::Treewidth { graph } => run_treewidth(&graph),
        Command::Bench(cmd) => run_bench(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Abort) => ExitCode::from(2),
    }
}
