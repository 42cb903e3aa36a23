//! The `segchain` command-line front end.
//!
//! Exit codes: 0 success, 2 parse/validation errors, 3 budget exceeded,
//! 4 invariant violation (a witness is printed). Budgets can be overridden
//! with `SEGCHAIN_TRAJECTORY_CAP` and `SEGCHAIN_ENUM_BUDGET`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::BigRational;

use segchain::chain::{
    evolve, limit_distribution, mixing_time, pair_tv, stationary_distribution, worst_pair_tv,
    Distribution, MarkovChain,
};
use segchain::coupling::CouplingKernel;
use segchain::formulas::{
    bd_confinement_approx, bd_corner_mass_approx, bd_tv_approx, kappa_experiment, nb_tv,
    MeetingEvidence,
};
use segchain::meetflow::{
    build_flow_network, enumerate_trajectories, extract_coupling, max_flow, verify_duality,
    MeetflowBudget,
};
use segchain::prob::ratio_to_f64;
use segchain::randchain::{instance_rng, random_chain};
use segchain::separation::{
    brute_force_optimal_separation, constant_threshold_separation, separation_value,
    EnumerationBudget, SeparatingSequence, SequenceFile, SequenceFamily,
};
use segchain::zoo::{
    birth_death_chain, haggstrom_chain, near_half_chain, negative_binomial_chain, two_state_chain,
    SidecarFile, ZooChain,
};
use segchain::{Error, Prob};

use rand::Rng;

#[derive(Parser)]
#[command(name = "segchain", version, about = "Exact analysis of segregating Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate, evolve and measure chains.
    Chain {
        #[command(subcommand)]
        command: ChainCommand,
    },
    /// Inspect and transform coupling kernels.
    Coupling {
        #[command(subcommand)]
        command: CouplingCommand,
    },
    /// Separating sequences and their values.
    Sep {
        #[command(subcommand)]
        command: SepCommand,
    },
    /// Trajectory-level flow: optimal meeting probabilities and duality.
    Flow {
        #[command(subcommand)]
        command: FlowCommand,
    },
    /// Emit one of the example chains.
    Zoo {
        #[command(subcommand)]
        command: ZooCommand,
    },
    /// Reproduce the quantitative experiments.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Subcommand)]
enum ChainCommand {
    /// Check a chain file: unique labels, rows summing exactly to 1.
    Validate {
        #[arg(long)]
        chain: PathBuf,
    },
    /// Exact distribution after a number of steps.
    Evolve {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        start: String,
        #[arg(long)]
        steps: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact total variation between the laws from two starts.
    Tv {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        steps: u64,
    },
    /// Worst-case pairwise total variation at a time.
    Dbar {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        steps: u64,
    },
    /// Mixing time against a reference distribution.
    Tmix {
        #[arg(long)]
        chain: PathBuf,
        /// Reference distribution file; defaults to the stationary
        /// distribution, or uniform with --pi-uniform.
        #[arg(long)]
        pi: Option<PathBuf>,
        #[arg(long, conflicts_with = "pi")]
        pi_uniform: bool,
        #[arg(long, default_value_t = 4096)]
        cap: u64,
    },
}

#[derive(Subcommand)]
enum CouplingCommand {
    /// Faithfulness and marginal correctness of a coupling kernel.
    Check {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        coupling: PathBuf,
        #[arg(long, default_value_t = 8)]
        horizon: usize,
    },
    /// Sticky transformation (requires a faithful kernel).
    Sticky {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        coupling: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Exact meeting-time cdf of a coupling kernel.
    Meet {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        coupling: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SepCommand {
    /// Exact separation value of a sequence file.
    Value {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        seq: PathBuf,
    },
    /// Brute-force optimal separation.
    Brute {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        horizon: usize,
        /// Maximize over non-trivial sequences only.
        #[arg(long)]
        nontrivial: bool,
        #[arg(long)]
        budget: Option<u64>,
        /// Write the maximizing sequence here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Constant-threshold separation on the birth-and-death chain.
    Constant {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        horizon: u64,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Subcommand)]
enum FlowCommand {
    /// Build the trajectory network and solve for the exact max-flow.
    Solve {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long, short = 't')]
        horizon: usize,
        /// Dump the network (nodes, arcs, capacities) as JSON.
        #[arg(long)]
        dump: Option<PathBuf>,
        /// Export the extracted coupling plan as CSV.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Certify the meeting/separation duality exactly.
    Duality {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
        #[arg(long, short = 't')]
        horizon: usize,
    },
}

#[derive(Subcommand)]
enum ZooCommand {
    /// Symmetric two-state chain with flip probability alpha.
    TwoState {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// The six-state segregating example with parameter p.
    Haggstrom {
        #[arg(long)]
        p: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// The negative binomial chain; also writes the mimicking coupling.
    Nb {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        p: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Birth-and-death chain on {0..L} with boundary rate alpha.
    Bd {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// The layered near-half construction; writes the base chain, or the
    /// full layered chain with --layered.
    NearHalf {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long, short = 't')]
        horizon: u64,
        #[arg(long)]
        layered: bool,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 200)]
    instances: u64,
    #[arg(long, default_value_t = 3)]
    max_states: usize,
    #[arg(long, default_value_t = 4)]
    max_t: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    numerator_bound: u32,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Random-instance duality fuzzing: exact equality on every instance.
    DualityFuzz(FuzzArgs),
    /// The near-half schedule: retained TV against its design target.
    Kappa {
        #[arg(long)]
        l: u32,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, short = 't')]
        horizon: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact birth-and-death quantities against their leading-order terms.
    BdAsymptotics {
        #[arg(long, default_value_t = 6)]
        l: u32,
        #[arg(long, default_value = "1/1000")]
        alpha: String,
        #[arg(long, default_value_t = 5000)]
        t_max: u64,
        #[arg(long, default_value_t = 500)]
        t_step: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Negative binomial total variation sweep, cross-checked on chains.
    NbSweep {
        #[arg(long, default_value_t = 8)]
        max_m: u32,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[derive(Debug)]
enum CliError {
    Lib(Error),
    /// An exact invariant failed; carries the witness to print.
    Invariant(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Invariant(w) => write!(f, "invariant violation: {w}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Invariant(_) => 4,
        CliError::Lib(e) if e.is_budget() => 3,
        CliError::Lib(Error::NotFaithful { .. }) | CliError::Lib(Error::MarginalViolation { .. }) => 4,
        CliError::Lib(_) => 2,
    }
}

type CliResult = Result<(), CliError>;

fn trajectory_budget() -> MeetflowBudget {
    let mut budget = MeetflowBudget::default();
    if let Ok(v) = std::env::var("SEGCHAIN_TRAJECTORY_CAP") {
        if let Ok(cap) = v.parse() {
            budget.trajectory_cap = cap;
        }
    }
    budget
}

fn enumeration_budget(flag: Option<u64>) -> EnumerationBudget {
    let mut budget = EnumerationBudget::default();
    if let Ok(v) = std::env::var("SEGCHAIN_ENUM_BUDGET") {
        if let Ok(max) = v.parse() {
            budget.max_leaves = max;
        }
    }
    if let Some(max) = flag {
        budget.max_leaves = max;
    }
    budget
}

fn parse_prob(s: &str) -> Result<Prob, Error> {
    s.parse()
}

fn load_chain(path: &Path) -> Result<MarkovChain, Error> {
    MarkovChain::load(path)
}

fn sidecar_path(chain: &Path) -> PathBuf {
    chain.with_extension("designated.json")
}

/// Resolve the start pair from flags or the chain's designated-states sidecar.
fn resolve_pair(
    chain_path: &Path,
    x: Option<String>,
    y: Option<String>,
) -> Result<(String, String), Error> {
    if let (Some(x), Some(y)) = (&x, &y) {
        return Ok((x.clone(), y.clone()));
    }
    let sidecar = sidecar_path(chain_path);
    let data = std::fs::read_to_string(&sidecar).map_err(|_| Error::InvalidParameter {
        name: "x/y",
        reason: format!(
            "start states not given and no sidecar found at {}",
            sidecar.display()
        ),
    })?;
    let sidecar: SidecarFile = serde_json::from_str(&data).map_err(Error::from)?;
    let get = |role: &str, flag: Option<String>| {
        flag.or_else(|| sidecar.designated.get(role).cloned())
            .ok_or(Error::InvalidParameter {
                name: "x/y",
                reason: format!("sidecar has no designated state for role {role}"),
            })
    };
    Ok((get("x", x)?, get("y", y)?))
}

fn write_or_print(output: &Option<PathBuf>, content: &str, summary: &str) -> CliResult {
    if let Some(path) = output {
        std::fs::write(path, content).map_err(Error::from)?;
        println!("{summary} -> {}", path.display());
    } else {
        print!("{content}");
    }
    Ok(())
}

fn emit_zoo(zoo: &ZooChain, output: &Path) -> CliResult {
    zoo.chain.save(output).map_err(CliError::from)?;
    let sidecar = sidecar_path(output);
    std::fs::write(
        &sidecar,
        serde_json::to_string_pretty(&zoo.sidecar()).expect("sidecar serializes"),
    )
    .map_err(Error::from)?;
    println!(
        "wrote {} ({} states) and {}",
        output.display(),
        zoo.chain.n_states(),
        sidecar.display()
    );
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Chain { command } => run_chain(command),
        Command::Coupling { command } => run_coupling(command),
        Command::Sep { command } => run_sep(command),
        Command::Flow { command } => run_flow(command),
        Command::Zoo { command } => run_zoo(command),
        Command::Experiment { command } => run_experiment(command),
    }
}

fn run_chain(command: ChainCommand) -> CliResult {
    match command {
        ChainCommand::Validate { chain } => {
            let chain = load_chain(&chain)?;
            println!("ok: {} states, all rows sum to 1 exactly", chain.n_states());
            Ok(())
        }
        ChainCommand::Evolve { chain, start, steps, format, output } => {
            let chain = load_chain(&chain)?;
            let start_dist =
                Distribution::point(chain.n_states(), chain.state_index(&start)?);
            let result = evolve(&chain, &start_dist, steps)?;
            let mut csv = String::from("state,p,p_float\n");
            for (i, w) in result.weights().iter().enumerate() {
                csv.push_str(&format!("{},{},{}\n", chain.label(i), w, w.to_f64()));
            }
            match format {
                Format::Csv => write_or_print(&output, &csv, "wrote distribution")?,
                Format::Text => {
                    println!("distribution after {steps} steps from {start}:");
                    for (i, w) in result.weights().iter().enumerate() {
                        if !w.is_zero() {
                            println!("  {:<12} {} ({:.6})", chain.label(i), w, w.to_f64());
                        }
                    }
                    if let Some(path) = &output {
                        std::fs::write(path, csv).map_err(Error::from)?;
                    }
                }
            }
            Ok(())
        }
        ChainCommand::Tv { chain, x, y, steps } => {
            let chain = load_chain(&chain)?;
            let tv = pair_tv(&chain, &x, &y, steps)?;
            println!("TV(P^{steps}({x},.), P^{steps}({y},.)) = {tv} ({:.6})", tv.to_f64());
            Ok(())
        }
        ChainCommand::Dbar { chain, steps } => {
            let chain = load_chain(&chain)?;
            let d = worst_pair_tv(&chain, steps)?;
            println!("dbar({steps}) = {d} ({:.6})", d.to_f64());
            Ok(())
        }
        ChainCommand::Tmix { chain, pi, pi_uniform, cap } => {
            let chain = load_chain(&chain)?;
            let reference = if pi_uniform {
                Distribution::uniform(chain.n_states())
            } else if let Some(path) = pi {
                load_distribution(&chain, &path)?
            } else {
                stationary_distribution(&chain)?
            };
            let t = mixing_time(&chain, &reference, cap)?;
            println!("t_mix = {t}");
            Ok(())
        }
    }
}

/// Distribution file: the chain file's shape with `weights` records.
fn load_distribution(chain: &MarkovChain, path: &Path) -> Result<Distribution, Error> {
    #[derive(serde::Deserialize)]
    struct DistFile {
        weights: Vec<WeightRecord>,
    }
    #[derive(serde::Deserialize)]
    struct WeightRecord {
        state: String,
        p: String,
    }
    let file: DistFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let mut weights = vec![Prob::zero(); chain.n_states()];
    for record in file.weights {
        weights[chain.state_index(&record.state)?] = record.p.parse()?;
    }
    Distribution::new(weights)
}

fn run_coupling(command: CouplingCommand) -> CliResult {
    match command {
        CouplingCommand::Check { chain, coupling, horizon } => {
            let chain = load_chain(&chain)?;
            let kernel =
                CouplingKernel::from_json(&chain, &std::fs::read_to_string(coupling).map_err(Error::from)?)?;
            let report = kernel.check_faithful()?;
            match &report.witness {
                None => println!("faithful: yes"),
                Some(w) => println!("faithful: no\nwitness: {w}"),
            }
            match kernel.check_marginal_correctness(horizon) {
                Ok(()) => println!("marginal-correct over {horizon} steps: yes"),
                Err(Error::MarginalViolation { witness }) => {
                    return Err(CliError::Invariant(witness));
                }
                Err(e) => return Err(e.into()),
            }
            Ok(())
        }
        CouplingCommand::Sticky { chain, coupling, output } => {
            let chain = load_chain(&chain)?;
            let kernel =
                CouplingKernel::from_json(&chain, &std::fs::read_to_string(coupling).map_err(Error::from)?)?;
            let sticky = kernel.make_sticky()?;
            std::fs::write(&output, sticky.to_json()?).map_err(Error::from)?;
            println!("wrote sticky kernel -> {}", output.display());
            Ok(())
        }
        CouplingCommand::Meet { chain, coupling, horizon, output } => {
            let chain = load_chain(&chain)?;
            let kernel =
                CouplingKernel::from_json(&chain, &std::fs::read_to_string(coupling).map_err(Error::from)?)?;
            let mtd = kernel.meeting_time_distribution(horizon)?;
            write_or_print(&output, &mtd.to_csv(), "wrote meeting cdf")?;
            if output.is_some() {
                println!(
                    "P(tau <= {horizon}) = {} ({:.6})",
                    mtd.at(horizon),
                    mtd.at(horizon).to_f64()
                );
            }
            Ok(())
        }
    }
}

fn run_sep(command: SepCommand) -> CliResult {
    match command {
        SepCommand::Value { chain, x, y, seq } => {
            let chain = load_chain(&chain)?;
            let file: SequenceFile =
                serde_json::from_str(&std::fs::read_to_string(seq).map_err(Error::from)?)
                    .map_err(Error::from)?;
            let seq = SeparatingSequence::from_file_model(&chain, file)?;
            let report = separation_value(&chain, &x, &y, &seq)?;
            println!(
                "separation = {} ({:.6}); summands {} + {}; nontrivial: {}",
                report.value,
                ratio_to_f64(&report.value),
                report.summand_x,
                report.summand_y,
                report.nontrivial
            );
            Ok(())
        }
        SepCommand::Brute { chain, x, y, horizon, nontrivial, budget, output } => {
            let chain = load_chain(&chain)?;
            let family = if nontrivial { SequenceFamily::Nontrivial } else { SequenceFamily::All };
            let (report, seq) = brute_force_optimal_separation(
                &chain,
                &x,
                &y,
                horizon,
                family,
                enumeration_budget(budget),
            )?;
            println!(
                "S_{horizon}({x},{y}) = {} ({:.6}); nontrivial: {}",
                report.value,
                ratio_to_f64(&report.value),
                report.nontrivial
            );
            if let Some(path) = output {
                let model = seq.to_file_model(&chain);
                std::fs::write(&path, serde_json::to_string_pretty(&model).expect("serializes"))
                    .map_err(Error::from)?;
                println!("wrote maximizer -> {}", path.display());
            }
            Ok(())
        }
        SepCommand::Constant { l, alpha, horizon, k } => {
            let alpha = parse_prob(&alpha)?;
            let chain = birth_death_chain(l, &alpha)?.chain;
            let report = constant_threshold_separation(&chain, horizon, k)?;
            println!(
                "constant threshold k = {k}: separation = {:.8} (exact {}), summands {:.8} + {:.8}",
                ratio_to_f64(&report.value),
                report.value,
                report.summand_x.to_f64(),
                report.summand_y.to_f64()
            );
            Ok(())
        }
    }
}

fn run_flow(command: FlowCommand) -> CliResult {
    match command {
        FlowCommand::Solve { chain, x, y, horizon, dump, plan } => {
            let chain_model = load_chain(&chain)?;
            let (x, y) = resolve_pair(&chain, x, y)?;
            let budget = trajectory_budget();
            let xs = enumerate_trajectories(&chain_model, &x, horizon, budget)?;
            let ys = enumerate_trajectories(&chain_model, &y, horizon, budget)?;
            let net = build_flow_network(&xs, &ys)?;
            let flow = max_flow(&net);
            println!(
                "C_{horizon}({x},{y}) = {} ({:.6}); {} x {} trajectories, {} intersecting pairs",
                flow.value,
                ratio_to_f64(&flow.value),
                xs.len(),
                ys.len(),
                net.middle_arcs().len()
            );
            if let Some(path) = dump {
                let model = net.dump(&chain_model, &xs, &ys);
                std::fs::write(&path, serde_json::to_string_pretty(&model).expect("serializes"))
                    .map_err(Error::from)?;
                println!("wrote network dump -> {}", path.display());
            }
            if let Some(path) = plan {
                let plan_model = extract_coupling(&net, &flow);
                let coupling = plan_model.to_trajectory_coupling(&chain_model, &xs, &ys)?;
                std::fs::write(&path, coupling.to_csv()).map_err(Error::from)?;
                println!("wrote coupling plan -> {}", path.display());
            }
            Ok(())
        }
        FlowCommand::Duality { chain, x, y, horizon } => {
            let chain_model = load_chain(&chain)?;
            let (x, y) = resolve_pair(&chain, x, y)?;
            let report = verify_duality(
                &chain_model,
                &x,
                &y,
                horizon,
                trajectory_budget(),
                enumeration_budget(None),
            )?;
            println!(
                "C_{horizon} = {} ({:.6})\nS_{horizon} = {} ({:.6})\nextracted meeting = {}",
                report.meeting_probability,
                ratio_to_f64(&report.meeting_probability),
                report.optimal_separation,
                ratio_to_f64(&report.optimal_separation),
                report.extracted_meeting
            );
            if !report.equal {
                return Err(CliError::Invariant(format!(
                    "duality mismatch: flow {} vs 2 - separation {} vs extracted {}",
                    report.meeting_probability, report.optimal_separation, report.extracted_meeting
                )));
            }
            println!("duality: exact");
            Ok(())
        }
    }
}

fn run_zoo(command: ZooCommand) -> CliResult {
    match command {
        ZooCommand::TwoState { alpha, output } => {
            emit_zoo(&two_state_chain(&parse_prob(&alpha)?)?, &output)
        }
        ZooCommand::Haggstrom { p, output } => {
            emit_zoo(&haggstrom_chain(&parse_prob(&p)?)?, &output)
        }
        ZooCommand::Nb { m, p, output } => {
            let (zoo, coupling) = negative_binomial_chain(m, &parse_prob(&p)?)?;
            emit_zoo(&zoo, &output)?;
            let coupling_path = output.with_extension("coupling.json");
            std::fs::write(&coupling_path, coupling.to_json()?).map_err(Error::from)?;
            println!("wrote mimicking coupling -> {}", coupling_path.display());
            Ok(())
        }
        ZooCommand::Bd { l, alpha, output } => {
            emit_zoo(&birth_death_chain(l, &parse_prob(&alpha)?)?, &output)
        }
        ZooCommand::NearHalf { l, delta, horizon, layered, output } => {
            let (chain, alpha) = near_half_chain(l, delta, horizon)?;
            let emitted = if layered { chain.layered().clone() } else { chain.base().clone() };
            emitted.save(&output)?;
            let sidecar = SidecarFile {
                designated: [
                    ("x".to_string(), if layered { "0@0".to_string() } else { "0".to_string() }),
                    ("y".to_string(), if layered { format!("{l}@0") } else { l.to_string() }),
                ]
                .into(),
                params: [
                    ("L".to_string(), l.to_string()),
                    ("delta".to_string(), delta.to_string()),
                    ("T".to_string(), horizon.to_string()),
                    ("alpha".to_string(), alpha.to_string()),
                ]
                .into(),
            };
            std::fs::write(
                sidecar_path(&output),
                serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
            )
            .map_err(Error::from)?;
            println!(
                "wrote {} ({} states, alpha = {} ~ {:.3e})",
                output.display(),
                emitted.n_states(),
                alpha,
                alpha.to_f64()
            );
            Ok(())
        }
    }
}

fn run_experiment(command: ExperimentCommand) -> CliResult {
    match command {
        ExperimentCommand::DualityFuzz(args) => duality_fuzz(args),
        ExperimentCommand::Kappa { l, delta, horizon, output } => {
            let report = kappa_experiment(
                l,
                delta,
                horizon,
                trajectory_budget(),
                enumeration_budget(None),
            )?;
            println!("{}", report.summary());
            if report.meeting_certified && report.tv_kept > report.kappa {
                return Err(CliError::Invariant(format!(
                    "certified meeting with tv_kept {} above {}",
                    report.tv_kept, report.kappa
                )));
            }
            let csv = format!(
                "l,delta,horizon,alpha,tv_exact,tv_kept,schedule_target,kappa,constant_separations_below_one,meeting_certified,evidence\n{},{},{},{},{},{},{},{},{},{},{}\n",
                l,
                delta,
                report.horizon,
                report.alpha,
                report.tv_exact,
                report.tv_kept,
                report.schedule_target,
                report.kappa,
                report.constant_separations_below_one,
                report.meeting_certified,
                match report.evidence {
                    MeetingEvidence::FullDuality => "full-duality",
                    MeetingEvidence::ConstantFamilyOnly => "constant-family-only",
                }
            );
            if let Some(path) = output {
                std::fs::write(&path, csv).map_err(Error::from)?;
                println!("wrote report -> {}", path.display());
            }
            Ok(())
        }
        ExperimentCommand::BdAsymptotics { l, alpha, t_max, t_step, output } => {
            let alpha_prob = parse_prob(&alpha)?;
            let alpha_f = alpha_prob.to_f64();
            let chain = birth_death_chain(l, &alpha_prob)?.chain;
            let mut csv = String::from("t,quantity,exact,approx,residual\n");
            let mut t = 0u64;
            while t <= t_max {
                let rows = segchain::chain::kernel_power_rows(&chain, t);
                let corner = ratio_to_f64(&rows[0][0]);
                let approx = bd_corner_mass_approx(l, alpha_f, t);
                csv.push_str(&format!(
                    "{t},corner_mass,{},{approx},{}\n",
                    rows[0][0],
                    corner - approx
                ));
                let tv = pair_tv(&chain, "0", &l.to_string(), t)?;
                let approx = bd_tv_approx(l, alpha_f, t);
                csv.push_str(&format!(
                    "{t},tv,{},{approx},{}\n",
                    tv,
                    tv.to_f64() - approx
                ));
                for k in 0..l as usize {
                    let report = constant_threshold_separation(&chain, t, k)?;
                    let approx = bd_confinement_approx(k as u32, alpha_f, t);
                    csv.push_str(&format!(
                        "{t},confine_{k},{},{approx},{}\n",
                        report.summand_x,
                        report.summand_x.to_f64() - approx
                    ));
                }
                t += t_step.max(1);
            }
            write_or_print(&output, &csv, "wrote sweep")
        }
        ExperimentCommand::NbSweep { max_m, output } => {
            let mut csv = String::from("m,p,closed_form,closed_form_float,chain_tv,agrees\n");
            for m in 1..=max_m {
                let p = BigRational::new((m as i64).into(), (m as i64 + 1).into());
                let closed = nb_tv(&p)?;
                let (zoo, _) = negative_binomial_chain(m, &Prob::new(p.clone())?)?;
                let n = zoo.chain.n_states();
                let x = Distribution::point(n, zoo.chain.state_index("x")?);
                let y = Distribution::point(n, zoo.chain.state_index("y")?);
                let from_x = limit_distribution(&zoo.chain, &x)?;
                let from_y = limit_distribution(&zoo.chain, &y)?;
                let chain_tv = segchain::chain::tv_distance(&from_x, &from_y)?;
                let agrees = chain_tv.ratio() == &closed;
                csv.push_str(&format!(
                    "{m},{p},{closed},{},{},{agrees}\n",
                    ratio_to_f64(&closed),
                    chain_tv
                ));
                if !agrees {
                    return Err(CliError::Invariant(format!(
                        "closed form {closed} disagrees with chain value {chain_tv} at m = {m}"
                    )));
                }
            }
            write_or_print(&output, &csv, "wrote sweep")
        }
    }
}

fn duality_fuzz(args: FuzzArgs) -> CliResult {
    let mut csv = String::from("instance,states,horizon,x,y,meeting_probability,separation,extracted,equal\n");
    let mut failures = 0usize;
    for i in 0..args.instances {
        let mut rng = instance_rng(args.seed, i);
        let n = rng.gen_range(1..=args.max_states.max(1));
        let horizon = rng.gen_range(0..=args.max_t);
        let chain = random_chain(&mut rng, n, args.numerator_bound);
        let x = chain.label(rng.gen_range(0..n)).to_string();
        let y = chain.label(rng.gen_range(0..n)).to_string();
        let report = verify_duality(
            &chain,
            &x,
            &y,
            horizon,
            trajectory_budget(),
            enumeration_budget(None),
        )?;
        if !report.equal {
            failures += 1;
        }
        csv.push_str(&format!(
            "{i},{n},{horizon},{x},{y},{},{},{},{}\n",
            report.meeting_probability,
            report.optimal_separation,
            report.extracted_meeting,
            report.equal
        ));
    }
    if let Some(path) = &args.output {
        std::fs::write(path, &csv).map_err(Error::from)?;
    }
    println!(
        "duality fuzz: {} instances, {} failures (seed {}, |S| <= {}, T <= {})",
        args.instances, failures, args.seed, args.max_states, args.max_t
    );
    if failures > 0 {
        return Err(CliError::Invariant(format!(
            "{failures} instances violated exact duality"
        )));
    }
    Ok(())
}
