//! The `contagion` command line.
//!
//! Each subcommand starts from its defaults, overlays an optional config file
//! (`--config`, TOML or an earlier run's `manifest.json`), then the command-line
//! flags. The resolved configuration is validated, the campaign runs, and a
//! `manifest.json` describing the run is written next to its outputs.
//!
//! Exit status: 0 on success, 1 on a usage or configuration error, 2 when the
//! run itself fails.

pub mod config;
pub mod manifest;
pub mod validate;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use contagion_core::experiments::{
    cross_sections, flip_curve, modularity_sweep, with_workers, write_fig2_csv, write_fig4_csv, Fig2Config,
    Fig4Config, FlipRule,
};
use contagion_core::markov::StarChain;
use contagion_core::scenario::{modularity_population, star_population, zealot_count, MODULARITY_RESIDENT, MODULARITY_ZEALOT};
use contagion_core::seeding::{derive_seed, rng_from_seed};
use contagion_core::stats::fmt_sig6;
use contagion_core::{
    run, Assignment, BeliefNetwork, Population, Scenario, SimulationConfig, SocialGraph, Trajectory, Variant,
};
use rand::seq::SliceRandom;

use config::{base_config, CommandConfig, GraphKind, MarkovConfig, SimulateConfig, ValidateConfig};
use manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl From<contagion_core::Error> for CliError {
    fn from(e: contagion_core::Error) -> Self {
        use contagion_core::Error as E;
        match e {
            E::InvalidParameter { .. }
            | E::Capacity { .. }
            | E::NotRational(_)
            | E::TooFewConcepts(_)
            | E::WeightCount { .. }
            | E::WeightOutOfRange { .. }
            | E::InvalidGraph(_)
            | E::InvalidPopulation(_)
            | E::EdgeListParse { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "contagion", version, about = "Belief-network contagion simulations and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write its adoption trajectory.
    Simulate(SimulateArgs),
    /// Hub flip probability against the number of dissimilar leaves.
    Fig2(Fig2Args),
    /// Adoption phase diagram over seed fraction and modularity.
    Fig4(Fig4Args),
    /// Enumerate the star chain, print its matrix and flip curve.
    Markov(MarkovArgs),
    /// Run the invariant suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub graph: Option<GraphKind>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Dissimilar leaves on a star.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub m_edges: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub edge_list: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    /// Add the hub's beliefs to the trajectory (star only).
    #[arg(long)]
    pub hub_beliefs: bool,
}

fn parse_flip_rule(s: &str) -> Result<FlipRule, String> {
    match s {
        "nearest-state" => Ok(FlipRule::NearestState),
        "sign-pattern" => Ok(FlipRule::SignPattern),
        _ => Err(format!("expected `nearest-state` or `sign-pattern`, got `{s}`")),
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct Fig2Args {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_flip_rule)]
    pub flip_rule: Option<FlipRule>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct Fig4Args {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m_edges: Option<usize>,
    #[arg(long)]
    pub ensembles: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Comma-separated seed fractions.
    #[arg(long, value_delimiter = ',')]
    pub rho0: Option<Vec<f64>>,
    /// Comma-separated inter-community edge fractions.
    #[arg(long, value_delimiter = ',')]
    pub omega: Option<Vec<f64>>,
    /// Comma-separated seed fractions for the cross-sections.
    #[arg(long, value_delimiter = ',')]
    pub cross_rho0: Option<Vec<f64>>,
    #[arg(long)]
    pub window_per_node: Option<u64>,
    #[arg(long)]
    pub budget_per_node: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct MarkovArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Leaves of the star.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub events: Option<u64>,
    #[arg(long)]
    pub gradient_samples: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("contagion: {e}");
            e.exit_code()
        }
    }
}

pub fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => {
            let mut c: SimulateConfig = base_config(a.common.config.as_deref())?;
            set(&mut c.graph, a.graph);
            c.n = a.n.or(c.n);
            set(&mut c.m, a.m);
            set(&mut c.scenario, a.scenario);
            set(&mut c.variant, a.variant);
            set(&mut c.m_edges, a.m_edges);
            set(&mut c.omega, a.omega);
            set(&mut c.rho0, a.rho0);
            if a.edge_list.is_some() {
                c.edge_list = a.edge_list;
            }
            c.alpha = a.alpha.or(c.alpha);
            c.beta = a.beta.or(c.beta);
            c.sigma = a.sigma.or(c.sigma);
            c.steps = a.steps.or(c.steps);
            c.snapshot_every = a.snapshot_every.or(c.snapshot_every);
            c.hub_beliefs |= a.hub_beliefs;
            set(&mut c.seed, a.common.seed);
            execute(&a.common, c.resolve(), |c| Some(c.seed), simulate)
        }
        Command::Fig2(a) => {
            let mut c: Fig2Config = base_config(a.common.config.as_deref())?;
            set(&mut c.scenario, a.scenario);
            set(&mut c.variant, a.variant);
            set(&mut c.n, a.n);
            set(&mut c.runs_per_point, a.runs);
            set(&mut c.repeats, a.repeats);
            set(&mut c.max_steps, a.steps);
            set(&mut c.alpha, a.alpha);
            set(&mut c.beta, a.beta);
            set(&mut c.sigma, a.sigma);
            set(&mut c.flip_rule, a.flip_rule);
            set(&mut c.seed, a.common.seed);
            execute(&a.common, c, |c| Some(c.seed), fig2)
        }
        Command::Fig4(a) => {
            let mut c: Fig4Config = base_config(a.common.config.as_deref())?;
            set(&mut c.n, a.n);
            set(&mut c.m_edges, a.m_edges);
            set(&mut c.ensembles, a.ensembles);
            set(&mut c.alpha, a.alpha);
            set(&mut c.beta, a.beta);
            set(&mut c.sigma, a.sigma);
            set(&mut c.rho0_grid, a.rho0);
            set(&mut c.omega_grid, a.omega);
            set(&mut c.cross_rho0, a.cross_rho0);
            set(&mut c.window_per_node, a.window_per_node);
            set(&mut c.budget_per_node, a.budget_per_node);
            set(&mut c.stationarity_tol, a.tol);
            set(&mut c.seed, a.common.seed);
            execute(&a.common, c, |c| Some(c.seed), fig4)
        }
        Command::Markov(a) => {
            let mut c: MarkovConfig = base_config(a.common.config.as_deref())?;
            set(&mut c.scenario, a.scenario);
            set(&mut c.alpha, a.alpha);
            set(&mut c.beta, a.beta);
            set(&mut c.k, a.k);
            execute(&a.common, c, |_| None, markov)
        }
        Command::Validate(a) => {
            let mut c: ValidateConfig = base_config(a.common.config.as_deref())?;
            set(&mut c.events, a.events);
            set(&mut c.gradient_samples, a.gradient_samples);
            set(&mut c.seed, a.common.seed);
            execute(&a.common, c, |c| Some(c.seed), validate_cmd)
        }
    }
}

/// Validates, runs `body` on the worker pool and writes the manifest.
fn execute<C: CommandConfig + Sync>(
    common: &Common,
    cfg: C,
    seed: impl Fn(&C) -> Option<u64>,
    body: fn(&C, &Path) -> Result<Vec<PathBuf>, CliError>,
) -> Result<(), CliError> {
    cfg.check()?;
    if common.workers == Some(0) {
        return Err(CliError::Config("invalid parameter `workers`: must be at least 1".into()));
    }
    std::fs::create_dir_all(&common.out).map_err(io_err(&common.out))?;
    let mut manifest = RunManifest::new(C::COMMAND, &cfg, seed(&cfg))?;
    let start = Instant::now();
    let outcome = with_workers(common.workers, || body(&cfg, &common.out))?;
    manifest.duration_secs = start.elapsed().as_secs_f64();
    let outputs = outcome?;
    manifest.outputs = outputs;
    let path = manifest.write(&common.out)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn simulate(c: &SimulateConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let params = c.params()?;
    let (n, steps) = (c.n.expect("resolved"), c.steps.expect("resolved"));
    let (pop, target, hub) = match c.graph {
        GraphKind::Star => {
            let pop = star_population(c.scenario, c.variant, n, c.m)?;
            (pop, c.scenario.target(), c.hub_beliefs.then_some(0))
        }
        GraphKind::TwoCommunity => {
            let mut rng = rng_from_seed(derive_seed(c.seed, 0));
            let (graph, layout) = SocialGraph::two_community(n, c.m_edges, c.omega, &mut rng)?;
            let pop = modularity_population(Arc::new(graph), &layout, c.rho0, &mut rng)?;
            (pop, modularity_target(), None)
        }
        GraphKind::EdgeList => {
            let path = c.edge_list.as_deref().expect("validated");
            let file = File::open(path).map_err(|e| CliError::Config(format!("edge_list {}: {e}", path.display())))?;
            let graph = SocialGraph::read_edge_list(BufReader::new(file))?;
            let mut rng = rng_from_seed(derive_seed(c.seed, 0));
            let mut nodes: Vec<usize> = (0..graph.node_count()).collect();
            nodes.shuffle(&mut rng);
            let zealots = zealot_count(graph.node_count(), c.rho0);
            let pop = Population::seed(
                graph,
                &[
                    Assignment::new(nodes[..zealots].iter().copied(), triad(MODULARITY_ZEALOT)?, true),
                    Assignment::new(nodes[zealots..].iter().copied(), triad(MODULARITY_RESIDENT)?, false),
                ],
            )?;
            (pop, modularity_target(), None)
        }
    };
    let trajectory = if steps == 0 {
        Trajectory::empty(pop)
    } else {
        let mut sim = SimulationConfig::fixed_length(params, steps, derive_seed(c.seed, 1), target);
        sim.snapshot_every = c.snapshot_every.expect("resolved");
        sim.record_beliefs = hub.is_some();
        run(&pop, &sim)?
    };
    let path = out.join("trajectory.csv");
    let mut w = create(&path)?;
    trajectory.write_csv(&mut w, hub).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;
    if let Some(last) = trajectory.snapshots.last() {
        println!("{} events, final adoption {}", trajectory.steps, fmt_sig6(last.adoption));
    } else {
        println!("0 events");
    }
    Ok(vec![path])
}

fn triad(w: [f64; 3]) -> Result<BeliefNetwork, CliError> {
    Ok(BeliefNetwork::triad(w[0], w[1], w[2])?)
}

fn modularity_target() -> contagion_core::SignPattern {
    BeliefNetwork::triad(MODULARITY_ZEALOT[0], MODULARITY_ZEALOT[1], MODULARITY_ZEALOT[2])
        .expect("valid weights")
        .sign_pattern()
}

fn fig2(c: &Fig2Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = flip_curve(c)?;
    let path = out.join("fig2.csv");
    let mut w = create(&path)?;
    write_fig2_csv(&mut w, &rows).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;
    println!("{} points written to {}", rows.len(), path.display());
    Ok(vec![path])
}

fn fig4(c: &Fig4Config, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let grid = modularity_sweep(c)?;
    let cross = cross_sections(c, &grid)?;
    let mut outputs = Vec::new();
    for (name, points) in [("fig4_phase.csv", &grid), ("fig4_cross.csv", &cross)] {
        let path = out.join(name);
        let mut w = create(&path)?;
        write_fig4_csv(&mut w, points).map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
        outputs.push(path);
    }
    println!("{} grid points, {} cross-section points", grid.len(), cross.len());
    Ok(outputs)
}

fn markov(c: &MarkovConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let chain = StarChain::new(c.scenario, c.alpha, c.beta)?;
    let curve = chain.curve(c.k)?;
    let mut report = Vec::new();
    let write_report = |report: &mut Vec<u8>| -> io::Result<()> {
        writeln!(report, "scenario {}: {} states", c.scenario, chain.matrix.len())?;
        for (i, s) in chain.matrix.states.iter().enumerate() {
            let flag = if chain.targets.contains(s) { "  flip" } else { "" };
            writeln!(report, "  {i:>3} {s}{flag}")?;
        }
        writeln!(report, "\ntransition matrix (row = destination, column = source)")?;
        chain.matrix.write_symbolic(&mut *report)?;
        writeln!(report, "\nm,flip_probability")?;
        for p in &curve {
            writeln!(report, "{},{}", p.m, fmt_sig6(p.flip_probability))?;
        }
        Ok(())
    };
    write_report(&mut report).map_err(|e| CliError::Runtime(e.to_string()))?;
    io::stdout()
        .write_all(&report)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = out.join("markov.txt");
    std::fs::write(&path, &report).map_err(io_err(&path))?;
    Ok(vec![path])
}

fn validate_cmd(c: &ValidateConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let outcomes = validate::run_suite(c);
    let mut report = String::new();
    let mut failed = 0;
    for o in &outcomes {
        let line = match &o.result {
            Ok(detail) => format!("PASS  {}: {detail}", o.name),
            Err(reason) => {
                failed += 1;
                format!("FAIL  {}: {reason}", o.name)
            }
        };
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
    }
    let path = out.join("validate.txt");
    std::fs::write(&path, report).map_err(io_err(&path))?;
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} invariant checks failed")));
    }
    Ok(vec![path])
}
