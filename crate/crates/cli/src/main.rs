mod manifest;
mod verify;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use discord_core::equilibrium::{agent_payoff, solve_equilibrium};
use discord_core::io::{
    format_float, network_to_csv, network_to_json, read_network, read_profile, spectrum_to_csv, spectrum_to_json,
    to_json,
};
use discord_core::net::{from_weighted_edges, make_circle, make_homophilous_blocks, Network};
use discord_core::planner::{optimal_intervention, similarity_profile};
use discord_core::profile::{Direction, GameParams, Profile};
use discord_core::spectral::decompose;
use discord_core::stats::{checked_welfare, report, CONSISTENCY_TOL};
use serde::Serialize;
use serde_json::{json, Value};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "discord", version, about = "Coordination games on networks: equilibria, welfare and optimal interventions")]
struct Cli {
    /// Seed for randomized commands; the DISCORD_SEED environment variable takes precedence.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a network and write it as JSON.
    Generate {
        #[command(subcommand)]
        kind: Generate,
    },
    /// Solve for the equilibrium and write node, f, a_star, payoff as CSV.
    Solve(SolveArgs),
    /// Spectral scalars and disagreement statistics as JSON.
    Stats(StatsArgs),
    /// Optimal intervention on ideal points as JSON.
    Intervene(InterveneArgs),
    /// Eigendecomposition as JSON, optionally with a plot-ready CSV.
    Spectrum(SpectrumArgs),
    /// Check closed-form results against the numeric oracles.
    Verify(VerifyArgs),
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Generate {
    /// n-cycle with weight 1/2 on each neighbor.
    Circle {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        #[serde(flatten)]
        out: OutArgs,
    },
    /// Random homophilous block network.
    Blocks {
        /// Comma-separated block sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long)]
        p_in: f64,
        #[arg(long)]
        p_out: f64,
        #[command(flatten)]
        #[serde(flatten)]
        out: OutArgs,
    },
    /// Network from an `i,j,w` edge list, scaled to doubly stochastic form.
    Edges {
        #[arg(long)]
        n: usize,
        /// CSV file of undirected edges `i,j,w` (header optional).
        #[arg(long)]
        edges: PathBuf,
        #[command(flatten)]
        #[serde(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Serialize)]
struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the network as an `i,j,w` CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    network: PathBuf,
    /// Ideal points as CSV.
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct StatsArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    beta: f64,
    /// Subtract the mean from f first (covariances need mean-zero input).
    #[arg(long)]
    center: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct InterveneArgs {
    #[arg(long)]
    network: PathBuf,
    /// Status-quo ideal points as CSV.
    #[arg(long)]
    f_hat: PathBuf,
    #[arg(long)]
    beta: f64,
    /// benevolent (+1) or malevolent (-1).
    #[arg(long)]
    gamma: Direction,
    #[arg(long)]
    budget: f64,
    /// Return the exact bliss intervention when the budget allows it.
    #[arg(long)]
    allow_bliss: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SpectrumArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot-ready CSV: eigenvalue row, then one row per node with u1..un as columns.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: verify::Suite,
    /// Networks to check (repeatable); built-in fixtures when omitted.
    #[arg(long)]
    network: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.7")]
    beta: Vec<f64>,
    /// Samples per disagreement table.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Restarts per oracle search.
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] discord_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(discord_core::Error::Inconsistent(_)) => 3,
            CliError::Core(_) | CliError::Usage(_) => 2,
            CliError::Verification(_) => 4,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    match std::env::var("DISCORD_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("DISCORD_SEED must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(flag.unwrap_or(0)),
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| discord_core::Error::Io(e).into()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn inputs<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn run(cli: Cli) -> CliResult<()> {
    let seed = resolve_seed(cli.seed)?;
    match cli.command {
        Command::Generate { kind } => cmd_generate(kind, seed),
        Command::Solve(a) => cmd_solve(a, seed),
        Command::Stats(a) => cmd_stats(a, seed),
        Command::Intervene(a) => cmd_intervene(a, seed),
        Command::Spectrum(a) => cmd_spectrum(a, seed),
        Command::Verify(a) => cmd_verify(a, seed),
    }
}

fn read_edge_list(path: &Path) -> CliResult<Vec<(usize, usize, f64)>> {
    let text = std::fs::read_to_string(path).map_err(discord_core::Error::Io)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut edges = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(discord_core::Error::Csv)?;
        let parsed = (|| -> Option<(usize, usize, f64)> {
            if record.len() != 3 {
                return None;
            }
            Some((record[0].parse().ok()?, record[1].parse().ok()?, record[2].parse().ok()?))
        })();
        match parsed {
            Some(e) => edges.push(e),
            None if k == 0 => continue,
            None => return Err(CliError::Usage(format!("edge row {} is not `i,j,w`: {record:?}", k + 1))),
        }
    }
    Ok(edges)
}

fn cmd_generate(kind: Generate, seed: u64) -> CliResult<()> {
    let manifest = RunManifest::new("generate", inputs(&kind), seed).to_value();
    let (net, out): (Network, &OutArgs) = match &kind {
        Generate::Circle { n, out } => (make_circle(*n)?, out),
        Generate::Blocks { sizes, p_in, p_out, out } => (make_homophilous_blocks(sizes, *p_in, *p_out, seed)?, out),
        Generate::Edges { n, edges, out } => (from_weighted_edges(*n, &read_edge_list(edges)?)?, out),
    };
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(discord_core::Error::InvalidNetwork(violations).into());
    }
    emit(out.out.as_deref(), &network_to_json(&net, Some(&manifest))?)?;
    if let Some(path) = &out.csv {
        emit(Some(path), &network_to_csv(&net, Some(&manifest)))?;
    }
    eprintln!(
        "network: n={}, edges={}, connected={}, validation ok",
        net.n(),
        net.edges().len(),
        net.is_connected()
    );
    Ok(())
}

fn load(network: &Path, f: &Path) -> CliResult<(Network, Profile)> {
    let net = read_network(network)?;
    let f = read_profile(f)?;
    f.check_len(net.n())?;
    Ok((net, f))
}

fn cmd_solve(args: SolveArgs, seed: u64) -> CliResult<()> {
    let manifest = RunManifest::new("solve", inputs(&args), seed).to_value();
    let (net, f) = load(&args.network, &args.f)?;
    let params = GameParams::with_beta(args.beta)?;
    let spec = decompose(&net)?;
    let a = solve_equilibrium(&net, &params, &f)?;
    let w = checked_welfare(&net, &spec, &params, &f)?;

    let mut csv = format!("# manifest: {manifest}\nnode,f,a_star,payoff\n");
    for i in 0..net.n() {
        let payoff = agent_payoff(&net, &params, &a, &f, i)?;
        let _ = writeln!(csv, "{i},{},{},{}", format_float(f[i]), format_float(a[i]), format_float(payoff));
    }
    emit(args.out.as_deref(), &csv)?;
    eprintln!(
        "welfare direct {} spectral {} relative gap {:.3e} (limit {CONSISTENCY_TOL:e})",
        format_float(w.direct),
        format_float(w.spectral),
        w.relative_gap
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs, seed: u64) -> CliResult<()> {
    let manifest = RunManifest::new("stats", inputs(&args), seed).to_value();
    let (net, f) = load(&args.network, &args.f)?;
    let f = if args.center { f.centered() } else { f };
    let params = GameParams::with_beta(args.beta)?;
    let spec = decompose(&net)?;
    let r = report(&net, &spec, &params, &f)?;
    for (name, pair) in [("covariance of neighbors", &r.cov_neighbors), ("covariance of a random pair", &r.cov_random_pair)] {
        if pair.relative_gap > CONSISTENCY_TOL && (pair.direct - pair.spectral).abs() > 1e-14 {
            return Err(discord_core::Error::Inconsistent(format!(
                "{name}: direct {} vs spectral {}",
                pair.direct, pair.spectral
            ))
            .into());
        }
    }
    emit(args.out.as_deref(), &to_json(&r, Some(&manifest))?)
}

fn cmd_intervene(args: InterveneArgs, seed: u64) -> CliResult<()> {
    let manifest = RunManifest::new("intervene", inputs(&args), seed).to_value();
    let (net, f_hat) = load(&args.network, &args.f_hat)?;
    let params = GameParams::new(args.beta, args.gamma)?;
    let spec = decompose(&net)?;
    let result = match optimal_intervention(&net, &spec, &params, &f_hat, args.budget, args.allow_bliss) {
        Err(e @ discord_core::Error::BlissFeasible { .. }) => {
            return Err(CliError::Usage(format!("{e}; pass --allow-bliss to return the bliss intervention")))
        }
        other => other?,
    };
    let table = if result.delta_star.norm() > 0.0 {
        Some(similarity_profile(&result, &spec, &f_hat)?)
    } else {
        None
    };
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let body = json!({ "result": result, "similarity_profile": table });
    emit(args.out.as_deref(), &to_json(&body, Some(&manifest))?)
}

fn cmd_spectrum(args: SpectrumArgs, seed: u64) -> CliResult<()> {
    let manifest = RunManifest::new("spectrum", inputs(&args), seed).to_value();
    let net = read_network(&args.network)?;
    let spec = decompose(&net)?;
    emit(args.out.as_deref(), &spectrum_to_json(&spec, Some(&manifest))?)?;
    if let Some(path) = &args.csv {
        emit(Some(path), &spectrum_to_csv(&spec, Some(&manifest)))?;
    }
    if !spec.check_distinct(1e-8) {
        eprintln!("note: repeated eigenvalues; eigenvectors within an eigenspace are one choice of basis");
    }
    Ok(())
}

/// Built-in networks used when `verify` gets no `--network`.
fn fixtures() -> CliResult<Vec<(String, Network)>> {
    Ok(vec![
        ("circle6".into(), make_circle(6)?),
        ("blocks5x2".into(), make_homophilous_blocks(&[5, 5], 0.9, 0.1, 3)?),
        ("random8".into(), discord_core::make_random_weighted(8, 0.6, 1)?),
    ])
}

fn cmd_verify(args: VerifyArgs, seed: u64) -> CliResult<()> {
    let manifest = RunManifest::new("verify", inputs(&args), seed).to_value();
    let networks = if args.network.is_empty() {
        fixtures()?
    } else {
        args.network
            .iter()
            .map(|p| Ok((p.display().to_string(), read_network(p)?)))
            .collect::<CliResult<Vec<_>>>()?
    };
    let settings = verify::Settings {
        suite: args.suite,
        betas: args.beta.clone(),
        samples: args.samples,
        restarts: args.restarts,
        seed,
    };
    let checks = verify::run(&networks, &settings)?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{:?} on {} (beta {})", c.suite, c.network, c.beta))
        .collect();
    let body = json!({ "passed": failed.is_empty(), "checks": checks });
    emit(args.out.as_deref(), &to_json(&body, Some(&manifest))?)?;
    eprintln!("{} checks, {} failed", checks.len(), failed.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}
