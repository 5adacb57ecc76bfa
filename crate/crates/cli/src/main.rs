use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use holovote::io::{read_sweep, write_edges, write_members, write_sweep};
use holovote::simharness::{band_agreement, compare_topologies, sweep};
use holovote::{
    build_network, generate_population, set_activity, DecisionMode, Depth, Error, Selection,
    SweepConfig, TopologyConfig,
};

mod demo;
mod plot;

#[derive(Debug, Parser)]
#[command(
    name = "holovote",
    version,
    about = "Delegative decision-making simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a population and its delegation network, written as two CSV files.
    Generate(GenerateArgs),
    /// Sweep decision error over participation levels and topologies.
    Sweep(SweepArgs),
    /// Rank the topologies of a sweep CSV.
    Compare {
        /// Sweep results CSV.
        input: PathBuf,
    },
    /// Run the problem/solution workspace loop on a small scenario.
    WorkspaceDemo {
        /// JSON scenario file; the bundled scenario is used when absent.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Weight ballots by delegated power.
        #[arg(long)]
        weighted: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    K0,
    Model1,
    Model2,
    Full,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SelectionArg {
    Nearest,
    Random,
}

#[derive(Debug, clap::Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, env = "HOLOVOTE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "model2")]
    model: ModelArg,
    /// Representatives per member (model2 only).
    #[arg(long)]
    k: Option<usize>,
    /// Flow depth label for model2 and full: a positive integer or `inf`.
    #[arg(long, default_value = "inf")]
    depth: String,
    #[arg(long, value_enum, default_value = "nearest")]
    selection: SelectionArg,
    /// Fraction of members marked active.
    #[arg(long, default_value_t = 1.0)]
    participation: f64,
    /// Output directory for members.csv and edges.csv.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct SweepArgs {
    #[arg(long, default_value_t = holovote::simharness::DEFAULT_POPULATION)]
    n: usize,
    /// Comma-separated topology labels.
    #[arg(long, default_value = "k0,k1d1,k3dinf,full")]
    topologies: String,
    /// Participation grid as start:stop:step.
    #[arg(long, default_value = "0.05:1.0:0.05")]
    participation: String,
    #[arg(long, default_value_t = holovote::simharness::DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, env = "HOLOVOTE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "literal")]
    mode: String,
    /// Keep one population for every trial.
    #[arg(long)]
    fixed_population: bool,
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
    /// Also write an SVG chart next to the CSV.
    #[arg(long)]
    plot: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn runtime(e: impl fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn io_failure(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Compare { input } => compare(&input),
        Command::WorkspaceDemo { scenario, weighted } => demo::run(scenario.as_deref(), weighted),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("holovote: {failure}");
            if let Failure::Usage(_) = failure {
                eprintln!("Run `holovote --help` for usage.");
            }
            ExitCode::from(failure.code())
        }
    }
}

fn parse_depth(s: &str) -> Result<Depth, Failure> {
    match s {
        "inf" => Ok(Depth::Unbounded),
        _ => match s.parse::<u32>() {
            Ok(d) if d > 0 => Ok(Depth::Limited(d)),
            _ => Err(usage(format!(
                "invalid depth '{s}', expected a positive integer or 'inf'"
            ))),
        },
    }
}

fn topology(args: &GenerateArgs) -> Result<TopologyConfig, Failure> {
    let depth = parse_depth(&args.depth)?;
    if args.k.is_some() && !matches!(args.model, ModelArg::Model2) {
        return Err(usage("--k applies to model2 only"));
    }
    let config = match args.model {
        ModelArg::K0 => TopologyConfig::k0(),
        ModelArg::Model1 => TopologyConfig::model1(),
        ModelArg::Model2 => {
            let selection = match args.selection {
                SelectionArg::Nearest => Selection::NearestOpinion,
                SelectionArg::Random => Selection::Random,
            };
            TopologyConfig::model2(args.k.unwrap_or(3), depth).with_selection(selection)
        }
        ModelArg::Full => TopologyConfig::full(depth),
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if !(0.0..=1.0).contains(&args.participation) {
        return Err(usage("--participation must lie in [0, 1]"));
    }
    let config = topology(&args)?;
    let population = generate_population(args.n, args.seed).map_err(usage)?;
    let members = set_activity(&population, args.participation, args.seed).map_err(usage)?;
    let network = build_network(&members, &config, args.seed).map_err(|e| match e {
        Error::InvalidArgument(_) | Error::NoRepresentative => usage(e),
        _ => runtime(e),
    })?;

    let mut member_bytes = Vec::new();
    write_members(&mut member_bytes, network.members()).map_err(runtime)?;
    let mut edge_bytes = Vec::new();
    write_edges(&mut edge_bytes, network.edges()).map_err(runtime)?;

    fs::create_dir_all(&args.out).map_err(io_failure(&args.out))?;
    let members_path = args.out.join("members.csv");
    let edges_path = args.out.join("edges.csv");
    fs::write(&members_path, member_bytes).map_err(io_failure(&members_path))?;
    fs::write(&edges_path, edge_bytes).map_err(io_failure(&edges_path))?;
    println!(
        "{} members, {} edges ({}) -> {}, {}",
        network.members().len(),
        network.edge_count(),
        config,
        members_path.display(),
        edges_path.display()
    );
    Ok(())
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(usage(format!(
            "participation range '{spec}' is not start:stop:step"
        )));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("'{s}' in participation range is not a number")))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if step <= 0.0 {
        return Err(usage("participation step must be positive"));
    }
    if start > stop {
        return Err(usage(format!(
            "participation range {start}:{stop} is descending"
        )));
    }
    if start <= 0.0 || stop > 1.0 {
        return Err(usage("participation values must lie in (0, 1]"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, Failure> {
    let topologies = args
        .topologies
        .split(',')
        .map(|t| t.trim().parse::<TopologyConfig>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let config = SweepConfig {
        population: args.n,
        participation_grid: parse_grid(&args.participation)?,
        trials: args.trials,
        topologies,
        master_seed: args.seed,
        decision_mode: args.mode.parse::<DecisionMode>().map_err(usage)?,
        fixed_population: args.fixed_population,
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let config = sweep_config(&args)?;
    let records = sweep(&config).map_err(runtime)?;

    let file = File::create(&args.out).map_err(io_failure(&args.out))?;
    let mut out = BufWriter::new(file);
    write_sweep(&mut out, &records).map_err(runtime)?;
    out.flush().map_err(io_failure(&args.out))?;
    println!("{} rows -> {}", records.len(), args.out.display());

    if args.plot {
        let plot_path = args.out.with_extension("svg");
        fs::write(&plot_path, plot::render(&records)).map_err(io_failure(&plot_path))?;
        println!("plot -> {}", plot_path.display());
    }
    Ok(())
}

fn compare(input: &Path) -> Result<(), Failure> {
    let file = File::open(input).map_err(io_failure(input))?;
    let records = read_sweep(file).map_err(|e| runtime(format!("{}: {e}", input.display())))?;
    let comparison = compare_topologies(&records).map_err(runtime)?;

    println!("per-participation ranking (best first)");
    for level in &comparison.per_fraction {
        let ranked: Vec<String> = level
            .ranking
            .iter()
            .map(|(t, e)| format!("{t} {e:.3e}"))
            .collect();
        println!("  {:>5.2}  {}", level.participation, ranked.join("  "));
    }

    println!("error AUC (best first)");
    for (i, entry) in comparison.by_auc.iter().enumerate() {
        println!(
            "  {}. {:<12} {:.4e} +/- {:.4e}",
            i + 1,
            entry.topology,
            entry.auc,
            entry.auc_std
        );
    }

    let labels: Vec<&str> = comparison
        .by_auc
        .iter()
        .map(|e| e.topology.as_str())
        .collect();
    if labels.contains(&"k0") && labels.contains(&"k1d1") {
        let checks = band_agreement(&records, "k0", "k1d1").map_err(runtime)?;
        println!("k0 vs k1d1 (agree when the gap is within both 1-std bands)");
        for c in &checks {
            println!(
                "  {:>5.2}  {}  gap {:.3e}  k0 {:.3e} +/- {:.3e}  k1d1 {:.3e} +/- {:.3e}",
                c.participation,
                if c.agrees() { "agree   " } else { "DISAGREE" },
                c.gap(),
                c.mean_a,
                c.std_a,
                c.mean_b,
                c.std_b
            );
        }
        let agreeing = checks.iter().filter(|c| c.agrees()).count();
        println!("  agreement at {agreeing} of {} levels", checks.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_stop() {
        let grid = parse_grid("0.05:1.0:0.05").unwrap();
        assert_eq!(grid.len(), 20);
        assert_eq!(grid[0], 0.05);
        assert_eq!(grid[19], 1.0);
        assert_eq!(grid[2], 0.15);
        assert_eq!(parse_grid("1.0:1.0:1.0").unwrap(), vec![1.0]);
    }

    #[test]
    fn bad_grids() {
        for spec in [
            "0.9:0.1:0.05",
            "0:1:0.5",
            "0.1:1.2:0.1",
            "0.1:0.5:0",
            "0.1:0.5",
            "a:b:c",
        ] {
            assert!(matches!(parse_grid(spec), Err(Failure::Usage(_))), "{spec}");
        }
    }

    #[test]
    fn depth_labels() {
        assert_eq!(parse_depth("inf").ok(), Some(Depth::Unbounded));
        assert_eq!(parse_depth("4").ok(), Some(Depth::Limited(4)));
        assert!(parse_depth("0").is_err());
    }
}
