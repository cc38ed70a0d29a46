#![allow(clippy::excessive_precision)]

//! `brine`: phase diagrams of a dilute solution modeled as an Ising magnet
//! with a conserved salt field, at surface-order scaling of field and
//! concentration.
//!
//! Subcommands: `curves`, `diagram`, `minimize`, `oracle`, `simulate`,
//! `selftest`. Every output file starts with a `#` comment header echoing
//! the crate version and the fully resolved parameter set (plus the seed
//! for simulations). Exit codes: 0 success, 1 domain error, 2 usage error.

mod config;
mod selftest;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use brine::minimize::Classification;
use brine::{curves, diagram, exact, minimize, sim, BoundaryCondition, ModelParams, ThermoPoint};

const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Relative output paths are joined onto this directory when it is set.
const OUT_DIR_ENV: &str = "BRINE_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unknown keys, unparsable values, missing parameters.
    Usage(String),
    /// Valid invocation, invalid physics or failed i/o.
    Domain(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => m,
        }
    }
}

impl From<brine::Error> for CliError {
    fn from(e: brine::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "brine",
    version,
    about = "Finite-size phase diagrams of an Ising model with conserved salt",
    after_help = "Parameters resolve as: command-line flag, then `key=value` line in --config, \
                  then built-in default. Relative output paths are placed under $BRINE_OUT_DIR \
                  when that variable is set."
)]
struct Cli {
    /// Plain-text key=value parameter file (flags take precedence)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the critical curves and thresholds to CSV
    Curves(CurvesArgs),
    /// Rasterize a phase diagram to CSV and/or SVG
    Diagram(DiagramArgs),
    /// Print all global minimizers of the rate function at one point
    Minimize(MinimizeArgs),
    /// Exactly enumerate the joint (M, Q) law on a tiny lattice
    Oracle(OracleArgs),
    /// Run the Monte Carlo sampler and export time series + histogram
    Simulate(SimulateArgs),
    /// Verify the build against its derived reference values
    Selftest,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Boundary condition: plus (liquid) or minus (ice)
    #[arg(long)]
    bc: Option<String>,
    /// Lattice dimension (>= 2)
    #[arg(long)]
    d: Option<u32>,
    /// Spontaneous magnetization in (0, 1)
    #[arg(long)]
    mstar: Option<f64>,
    /// Unit-droplet surface cost (> 0)
    #[arg(long)]
    w1: Option<f64>,
    /// Salt-ice repulsion (> 0)
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args)]
struct CurvesArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Number of xi samples
    #[arg(long)]
    points: Option<usize>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DiagramArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    xi_min: Option<f64>,
    #[arg(long)]
    xi_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    b_max: Option<f64>,
    /// Cells along xi
    #[arg(long)]
    nx: Option<usize>,
    /// Cells along b
    #[arg(long)]
    nb: Option<usize>,
    /// csv, svg or both
    #[arg(long)]
    format: Option<String>,
    /// Output path prefix (suffixes .csv/.svg are appended)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinimizeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Scaled field
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Scaled concentration (>= 0)
    #[arg(long)]
    xi: Option<f64>,
}

#[derive(Args)]
struct OracleArgs {
    /// Lattice side (<= 5)
    #[arg(long)]
    l: Option<u32>,
    /// Spin coupling
    #[arg(long, allow_negative_numbers = true)]
    j: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Salt concentration in [0, 1]
    #[arg(long)]
    c: Option<f64>,
    /// External field
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    #[arg(long)]
    bc: Option<String>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Lattice side (>= 4)
    #[arg(long)]
    l: Option<u32>,
    /// Spin coupling
    #[arg(long, allow_negative_numbers = true)]
    j: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Salt concentration in [0, 1]
    #[arg(long)]
    c: Option<f64>,
    /// External field
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    #[arg(long)]
    bc: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sweeps: Option<u64>,
    #[arg(long)]
    burn_in: Option<u64>,
    #[arg(long)]
    thinning: Option<u64>,
    /// heat-bath (exact sector redraw) or pair-swap (fallback)
    #[arg(long)]
    salt_move: Option<String>,
    /// Output path prefix (_timeseries.csv and _histogram.csv appended)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Svg,
    Both,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_map = match &cli.config {
        Some(path) => config::load(path)?,
        None => Default::default(),
    };
    let mut r = config::Resolver::new(file_map);
    match cli.command {
        Command::Curves(args) => cmd_curves(args, &mut r),
        Command::Diagram(args) => cmd_diagram(args, &mut r),
        Command::Minimize(args) => cmd_minimize(args, &mut r),
        Command::Oracle(args) => cmd_oracle(args, &mut r),
        Command::Simulate(args) => cmd_simulate(args, &mut r),
        Command::Selftest => {
            if selftest::run() == 0 {
                Ok(())
            } else {
                Err(CliError::domain("selftest failed"))
            }
        }
    }
}

fn parse_bc(raw: String) -> Result<BoundaryCondition, CliError> {
    raw.parse::<BoundaryCondition>()
        .map_err(|e| CliError::usage(format!("--bc: {e}")))
}

fn resolve_model(
    args: &ModelArgs,
    r: &mut config::Resolver,
) -> Result<(ModelParams, BoundaryCondition), CliError> {
    let bc = parse_bc(r.get(args.bc.clone(), "bc", Some("plus".to_string()))?)?;
    let d = r.get(args.d, "d", Some(2))?;
    let mstar = r.get(args.mstar, "mstar", None)?;
    let w1 = r.get(args.w1, "w1", Some(1.0))?;
    let kappa = r.get(args.kappa, "kappa", None)?;
    let p = ModelParams::new(d, mstar, w1, kappa)?;
    Ok((p, bc))
}

fn model_header(cmd: &str, p: &ModelParams, bc: BoundaryCondition) -> Vec<String> {
    vec![
        format!("brine {VERSION}"),
        format!("command={cmd}"),
        format!(
            "bc={bc} d={} mstar={} w1={} kappa={}",
            p.d(),
            p.m_star(),
            p.w1(),
            p.kappa()
        ),
    ]
}

fn out_path(requested: Option<PathBuf>, default_name: &str) -> PathBuf {
    let path = requested.unwrap_or_else(|| PathBuf::from(default_name));
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path,
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::domain(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::domain(format!("cannot write {}: {e}", path.display())))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::domain(format!("write {}: {e}", path.display()))
}

fn cmd_curves(args: CurvesArgs, r: &mut config::Resolver) -> Result<(), CliError> {
    let (p, bc) = resolve_model(&args.model, r)?;
    let points = r.get(args.points, "points", Some(512))?;
    let out = out_path(args.out, &format!("curves_{bc}.csv"));
    r.finish()?;

    let cc = curves::sample_curves(&p, bc, points)?;
    let mut header = model_header("curves", &p, bc);
    header.push(format!("points={points}"));
    header.push(format!("xi_t={}", cc.xi_t));
    header.push(format!("xi_u={}", cc.xi_u));
    if let Some(x1) = cc.xi_1 {
        header.push(format!("xi_1={x1}"));
    }
    if let Some(x2) = cc.xi_2 {
        header.push(format!("xi_2={x2}"));
    }
    if let Some(m0) = cc.m0 {
        header.push(format!("m0={m0}"));
    }
    let mut w = create(&out)?;
    (|| -> std::io::Result<()> {
        for line in &header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "xi,b_upper,b_lower")?;
        for s in &cc.samples {
            writeln!(w, "{:.12e},{:.12e},{:.12e}", s.xi, s.b_upper, s.b_lower)?;
        }
        w.flush()
    })()
    .map_err(|e| io_err(&out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_diagram(args: DiagramArgs, r: &mut config::Resolver) -> Result<(), CliError> {
    let (p, bc) = resolve_model(&args.model, r)?;
    let xi_min = r.get(args.xi_min, "xi_min", Some(0.05))?;
    let xi_max = r.get(args.xi_max, "xi_max", Some(6.0))?;
    let b_min = r.get(args.b_min, "b_min", Some(-4.0))?;
    let b_max = r.get(args.b_max, "b_max", Some(1.5))?;
    let nx = r.get(args.nx, "nx", Some(64))?;
    let nb = r.get(args.nb, "nb", Some(64))?;
    let format = r.get(args.format, "format", Some("csv".to_string()))?;
    let format = match format.as_str() {
        "csv" => OutputFormat::Csv,
        "svg" => OutputFormat::Svg,
        "both" => OutputFormat::Both,
        other => {
            return Err(CliError::usage(format!(
                "--format must be csv, svg or both, got `{other}`"
            )))
        }
    };
    let prefix = out_path(args.out, &format!("diagram_{bc}"));
    r.finish()?;

    let grid = diagram::GridSpec::new(xi_min, xi_max, b_min, b_max, nx, nb)?;
    let raster = diagram::raster(&p, bc, grid)?;
    let mut header = model_header("diagram", &p, bc);
    header.push(format!(
        "grid: xi [{xi_min}, {xi_max}] x b [{b_min}, {b_max}], {nx} x {nb} cells"
    ));

    if format != OutputFormat::Svg {
        let path = prefix.with_extension("csv");
        let mut w = create(&path)?;
        raster
            .write_csv(&mut w, &header)
            .and_then(|_| w.flush())
            .map_err(|e| io_err(&path, e))?;
        println!("wrote {}", path.display());
    }
    if format != OutputFormat::Csv {
        let path = prefix.with_extension("svg");
        let mut w = create(&path)?;
        raster
            .write_svg(&mut w, &header)
            .and_then(|_| w.flush())
            .map_err(|e| io_err(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn classification_token(c: Classification) -> &'static str {
    match c {
        Classification::AtPlusEndpoint => "at_plus_endpoint",
        Classification::AtMinusEndpoint => "at_minus_endpoint",
        Classification::Interior => "interior",
        Classification::Degenerate => "degenerate",
    }
}

fn cmd_minimize(args: MinimizeArgs, r: &mut config::Resolver) -> Result<(), CliError> {
    let (p, bc) = resolve_model(&args.model, r)?;
    let b = r.get(args.b, "b", None)?;
    let xi = r.get(args.xi, "xi", None)?;
    r.finish()?;

    let set = minimize::minimize_q(&p, bc, ThermoPoint::new(b, xi)?)?;
    for line in model_header("minimize", &p, bc) {
        println!("# {line}");
    }
    println!("# b={b} xi={xi}");
    let mut list = String::new();
    for (i, m) in set.minimizers().iter().enumerate() {
        if i > 0 {
            list.push(',');
        }
        write!(list, "{m:.12}").unwrap();
    }
    println!("minimizers = {list}");
    println!("value = {:.12e}", set.value());
    println!("multiplicity = {}", set.multiplicity());
    println!(
        "classification = {}",
        classification_token(set.classification())
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs, r: &mut config::Resolver) -> Result<(), CliError> {
    let l = r.get(args.l, "l", Some(4))?;
    let j = r.get(args.j, "j", None)?;
    let kappa = r.get(args.kappa, "kappa", None)?;
    let c = r.get(args.c, "c", None)?;
    let h = r.get(args.h, "h", Some(0.0))?;
    let bc = parse_bc(r.get(args.bc.clone(), "bc", Some("plus".to_string()))?)?;
    let out = out_path(args.out, &format!("oracle_{bc}_l{l}.csv"));
    r.finish()?;

    let dist = exact::exact_distribution(l, bc, j, kappa, c, h)?;
    let header = vec![
        format!("brine {VERSION}"),
        "command=oracle".to_string(),
        format!("bc={bc} l={l} j={j} kappa={kappa} c={c} h={h}"),
        format!("n_salt={} log_z={}", dist.n_salt, dist.log_z),
    ];
    let mut w = create(&out)?;
    dist.write_csv(&mut w, &header)
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_simulate(args: SimulateArgs, r: &mut config::Resolver) -> Result<(), CliError> {
    let l = r.get(args.l, "l", None)?;
    let j = r.get(args.j, "j", None)?;
    let kappa = r.get(args.kappa, "kappa", None)?;
    let c = r.get(args.c, "c", None)?;
    let h = r.get(args.h, "h", Some(0.0))?;
    let bc = parse_bc(r.get(args.bc.clone(), "bc", Some("plus".to_string()))?)?;
    let seed = r.get(args.seed, "seed", Some(1))?;
    let sweeps = r.get(args.sweeps, "sweeps", Some(10_000))?;
    let burn_in = r.get(args.burn_in, "burn_in", Some(1_000))?;
    let thinning = r.get(args.thinning, "thinning", Some(1))?;
    let salt_move = r.get(args.salt_move.clone(), "salt_move", Some("heat-bath".to_string()))?;
    let salt_move = match salt_move.as_str() {
        "heat-bath" => sim::SaltMove::HeatBath,
        "pair-swap" => sim::SaltMove::PairSwap,
        other => {
            return Err(CliError::usage(format!(
                "--salt-move must be heat-bath or pair-swap, got `{other}`"
            )))
        }
    };
    let prefix = out_path(args.out, &format!("sim_{bc}_l{l}_seed{seed}"));
    r.finish()?;

    let cfg = sim::SimConfig::new(l, j, kappa, c, h, bc, seed, sweeps, burn_in, thinning)?;
    let ts = sim::run_with(&cfg, salt_move);
    let header = vec![
        format!("brine {VERSION}"),
        "command=simulate".to_string(),
        format!("bc={bc} l={l} j={j} kappa={kappa} c={c} h={h}"),
        format!(
            "seed={seed} sweeps={sweeps} burn_in={burn_in} thinning={thinning} salt_move={}",
            match salt_move {
                sim::SaltMove::HeatBath => "heat-bath",
                sim::SaltMove::PairSwap => "pair-swap",
            }
        ),
        format!("n_salt={}", cfg.n_salt()),
    ];

    let series_path = PathBuf::from(format!("{}_timeseries.csv", prefix.display()));
    let mut w = create(&series_path)?;
    ts.write_csv(&mut w, &header)
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&series_path, e))?;
    println!("wrote {}", series_path.display());

    let hist_path = PathBuf::from(format!("{}_histogram.csv", prefix.display()));
    let mut w = create(&hist_path)?;
    ts.write_histogram_csv(&mut w, &header)
        .and_then(|_| w.flush())
        .map_err(|e| io_err(&hist_path, e))?;
    println!("wrote {}", hist_path.display());
    Ok(())
}
