use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mimo_ota::bounds::{bound_table, eigen_concentration_check, empirical_tail_probability};
use mimo_ota::config::{BoundInputs, EigenCheckConfig, KvDoc, ScenarioConfig, TailCheckConfig};
use mimo_ota::design::{design_codec, DesignParams, Method};
use mimo_ota::field::{FunctionTable, ScalarFn};
use mimo_ota::sim::{preset, preset_names, run_sweep, Axis, SweepSpec};
use mimo_ota::{Error, Result};

/// Digital over-the-air vector computation: codec design, bounds and
/// Monte Carlo simulation.
#[derive(Parser, Debug)]
#[command(name = "mimo-ota", version)]
struct Cli {
    /// Overrides the seed of the config or preset.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Caps the number of worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Progress and summaries on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Directory for outputs written without an explicit `-o`.
    #[arg(long, global = true, env = "MIMO_OTA_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Designs a codec for a tabulated function and writes it as JSON.
    Design(DesignArgs),
    /// Runs one scenario and writes a single-row CSV.
    Simulate {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Runs a named preset, or a config file along an axis.
    Sweep(SweepArgs),
    /// Prints the antenna lower bounds.
    Bound {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// Monte Carlo concentration checks; the report is CSV.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        #[arg(short, long)]
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct DesignArgs {
    /// Function table file (`K`, `Q`, `L` header, then `inputs | outputs` rows).
    #[arg(short = 'f', long, required_unless_present = "function", conflicts_with = "function")]
    file: Option<PathBuf>,

    /// Built-in functions, one per output (e.g. `sum,max`), instead of a file.
    #[arg(long, requires = "q")]
    function: Option<String>,

    /// Input alphabet sizes for `--function`, one per node.
    #[arg(long, value_delimiter = ',')]
    q: Vec<u32>,

    #[arg(short, long, default_value = "sdp")]
    method: MethodArg,

    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// fig2, fig3, fig4, fig5-text, fig5-caption or fig6.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,

    /// Keeps only these curves of the preset (labels as in the CSV).
    #[arg(long, value_delimiter = ';', requires = "preset")]
    curves: Vec<String>,

    /// Scenario file swept along `--axis`.
    #[arg(short, long, requires = "axis")]
    config: Option<PathBuf>,

    /// `snr_db`, `N_r` or `K`.
    #[arg(long, requires = "values")]
    axis: Option<String>,

    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,

    /// Overrides the number of trials per point.
    #[arg(long)]
    trials: Option<usize>,

    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Sdp,
    Exact,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CheckKind {
    Eigen,
    Tail,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Writes to `-o`, else to the output directory under `default_name`, else stdout.
fn emit(cli: &Cli, output: &Option<PathBuf>, default_name: &str, text: &str) -> Result<()> {
    let target = output.clone().or_else(|| cli.out_dir.as_ref().map(|d| d.join(default_name)));
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, text)?;
            if cli.verbose > 0 {
                eprintln!("wrote {}", path.display());
            }
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn scenario(cli: &Cli, path: &Path) -> Result<ScenarioConfig> {
    let mut doc = KvDoc::parse(&read(path)?)?;
    if let Some(seed) = cli.seed {
        doc.set("seed", seed);
    }
    ScenarioConfig::from_doc(&doc)
}

fn design(cli: &Cli, args: &DesignArgs) -> Result<()> {
    let table = match (&args.file, &args.function) {
        (Some(path), _) => FunctionTable::from_text(&read(path)?)?,
        (None, Some(names)) => {
            let fns = names.split(',').map(str::parse).collect::<Result<Vec<ScalarFn>>>()?;
            FunctionTable::from_scalar_fns(&fns, &args.q)?
        }
        (None, None) => return Err(Error::Argument("give -f <table> or --function".into())),
    };
    let method = match args.method {
        MethodArg::Sdp => Method::Sdp,
        MethodArg::Exact => Method::Exact,
    };
    let params = DesignParams { method, seed: cli.seed.unwrap_or(0), ..DesignParams::default() };
    let codec = design_codec(&table, &params)?;
    let failures = codec.noiseless_failures(&table);
    if !failures.is_empty() {
        return Err(Error::Inconsistent(format!("{} input rows decode wrongly without noise", failures.len())));
    }
    if cli.verbose > 0 {
        eprintln!("designed {} streams for K = {}, Q = {:?}", table.outputs(), table.nodes(), table.q_list());
    }
    emit(cli, &args.output, "codec.json", &codec.to_json()?)
}

fn sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let (mut spec, name) = match (&args.preset, &args.config) {
        (Some(name), _) => {
            let mut spec = preset(name)?;
            if !args.curves.is_empty() {
                let labels: Vec<&str> = args.curves.iter().map(String::as_str).collect();
                spec = spec.only_curves(&labels);
                if spec.curves.is_empty() {
                    return Err(Error::config(format!("no curve of `{name}` matches {labels:?}")));
                }
            }
            (spec, name.clone())
        }
        (None, Some(path)) => {
            let axis: Axis = args.axis.as_deref().unwrap_or_default().parse()?;
            let cfg = scenario(cli, path)?;
            (SweepSpec::single("config", cfg, axis, args.values.clone()), "sweep".into())
        }
        (None, None) => {
            return Err(Error::config(format!("give --preset ({}) or -c", preset_names().join(", "))));
        }
    };
    if let Some(seed) = cli.seed {
        spec = spec.with_seed(seed);
    }
    if let Some(trials) = args.trials {
        spec = spec.with_trials(trials);
    }
    let res = run_sweep(&spec)?;
    if cli.verbose > 0 {
        for c in &res.curves {
            let v: Vec<String> = c.points.iter().map(|p| format!("{:.3e}", p.nmse)).collect();
            eprintln!("{}: {}", c.label, v.join(" "));
        }
    }
    emit(cli, &args.output, &format!("{name}.csv"), &res.to_csv())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Design(args) => design(cli, args),
        Command::Simulate { config, output } => {
            let cfg = scenario(cli, config)?;
            let spec = SweepSpec::single("simulate", cfg.clone(), Axis::SnrDb, vec![cfg.snr_db]);
            emit(cli, output, "simulate.csv", &run_sweep(&spec)?.to_csv())
        }
        Command::Sweep(args) => sweep(cli, args),
        Command::Bound { config } => {
            let b = BoundInputs::parse(&read(config)?)?;
            print!("{}", bound_table(&b));
            Ok(())
        }
        Command::Check { kind, config, output } => {
            let mut doc = KvDoc::parse(&read(config)?)?;
            if let Some(seed) = cli.seed {
                doc.set("seed", seed);
            }
            match kind {
                CheckKind::Eigen => {
                    let cfg = EigenCheckConfig::from_doc(&doc)?;
                    let report = eigen_concentration_check(&cfg)?;
                    if cli.verbose > 0 {
                        eprintln!("eigen check passed: {}", report.passed());
                    }
                    emit(cli, output, "eigen.csv", &report.to_csv(&cfg))
                }
                CheckKind::Tail => {
                    let cfg = TailCheckConfig::from_doc(&doc)?;
                    let p = empirical_tail_probability(&cfg)?;
                    emit(cli, output, "tail.csv", &p.to_csv(&cfg))
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
