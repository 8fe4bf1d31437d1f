//! `wtrnet`: analyze QKD networks with weakly trusted repeaters.
//!
//! Exit codes: 0 success/admissible, 1 analysis-negative, 2 input error.

use clap::{Parser, Subcommand};

use wtrnet_cli::{
    cmd_budget, cmd_check, cmd_plan, cmd_rate, cmd_search, cmd_simulate, load_topology,
    parse_message, resolve_params, CliError, CmdResult, PlanFile, SimulateMode,
};
use wtrnet_core::netcode::{DEFAULT_ENUM_CAP, DEFAULT_SEARCH_CAP};
use wtrnet_core::optical::RingMode;

#[derive(Parser)]
#[command(name = "wtrnet", version, about = "QKD networks with weakly trusted repeaters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the machine-readable artifact (JSON/CSV) here.
    #[arg(long, global = true)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify a code file against a network file's users and patterns.
    Check {
        network: String,
        code: String,
        /// Cap on brute-force enumeration states (diagnostics only).
        #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
        cap_enum: u64,
    },
    /// Secret-key rate curve versus channel loss, as CSV with a cutoff row.
    Rate {
        #[arg(long)]
        preset: Option<String>,
        /// Key-value parameter file overriding --preset.
        #[arg(long)]
        params: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        min: f64,
        #[arg(long, default_value_t = 40.0)]
        max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
    },
    /// Itemized loss budget for one emitter and wavelength (or receiver).
    Budget {
        /// Topology file, or built-in p1/p2/p3.
        topology: String,
        #[arg(long)]
        tx: String,
        #[arg(long)]
        rx: Option<String>,
        #[arg(long)]
        wavelength: Option<f64>,
        #[arg(long)]
        ring_mode: Option<RingMode>,
    },
    /// Plan a key exchange: relay graph, code search, resilience report.
    Plan {
        /// Topology file, or built-in p1/p2/p3.
        topology: String,
        /// Emitter pairing, e.g. Tx1,Tx2.
        #[arg(long)]
        pair: String,
        #[arg(long, default_value_t = 20.0)]
        budget_db: f64,
        #[arg(long, default_value_t = 3)]
        field_q: u64,
        #[arg(long, default_value_t = DEFAULT_SEARCH_CAP)]
        cap_search: u64,
        #[arg(long)]
        ring_mode: Option<RingMode>,
    },
    /// Simulate one exchange over a plan file.
    Simulate {
        plan: String,
        /// Message symbols, comma separated.
        #[arg(long)]
        message: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "wtr")]
        mode: SimulateMode,
        /// Simulate even when the plan's code is not admissible.
        #[arg(long)]
        r#override: bool,
    },
    /// Exhaustively search an admissible code for a network file.
    Search {
        network: String,
        #[arg(long, default_value_t = 3)]
        field_q: u64,
        #[arg(long, default_value_t = DEFAULT_SEARCH_CAP)]
        cap_search: u64,
    },
}

fn run(cli: &Cli) -> Result<CmdResult, CliError> {
    match &cli.command {
        Command::Check { network, code, .. } => cmd_check(network, code),
        Command::Rate {
            preset,
            params,
            min,
            max,
            step,
        } => {
            let p = resolve_params(preset.as_deref(), params.as_deref())?;
            cmd_rate(&p, *min, *max, *step)
        }
        Command::Budget {
            topology,
            tx,
            rx,
            wavelength,
            ring_mode,
        } => {
            let t = load_topology(topology, *ring_mode)?;
            cmd_budget(&t, tx, rx.as_deref(), *wavelength)
        }
        Command::Plan {
            topology,
            pair,
            budget_db,
            field_q,
            cap_search,
            ring_mode,
        } => {
            let t = load_topology(topology, *ring_mode)?;
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| CliError::Usage(format!("bad pairing `{pair}`, want Tx1,Tx2")))?;
            cmd_plan(&t, a.trim(), b.trim(), *budget_db, *field_q, *cap_search)
        }
        Command::Simulate {
            plan,
            message,
            seed,
            mode,
            r#override,
        } => {
            let text = std::fs::read_to_string(plan).map_err(|source| CliError::Io {
                path: plan.clone(),
                source,
            })?;
            let plan: PlanFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
                path: "plan".into(),
                message: e.to_string(),
            })?;
            let message = parse_message(message)?;
            cmd_simulate(&plan, &message, *seed, *mode, *r#override)
        }
        Command::Search {
            network,
            field_q,
            cap_search,
        } => cmd_search(network, *field_q, *cap_search),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(result) => {
            print!("{}", result.text);
            if let Some(path) = &cli.output {
                let payload = result.artifact.as_deref().unwrap_or(&result.text);
                if let Err(e) = std::fs::write(path, payload) {
                    eprintln!("error: cannot write `{path}`: {e}");
                    std::process::exit(2);
                }
            }
            std::process::exit(if result.negative { 1 } else { 0 });
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
