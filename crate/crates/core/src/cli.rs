//! Command-line front end.
//!
//! One verb per invocation; machine-readable output on stdout, diagnostics
//! on stderr. Exit codes: 0 success or correct, 1 incorrect or failed
//! check, 2 usage or parse error. Identical inputs and flags give
//! byte-identical stdout.
//!
//! File extensions by convention: `.mall` formulas, `.bpl` programs, `.bsp`
//! proofs, `.net` structures.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::{domination_forest, is_proof_net_fast, maximal_switching};
use crate::bipolarizer::Program;
use crate::engine::{desequentialize, sequentialize, simulate, Policy, Schedule};
use crate::formulas::parse_formula;
use crate::proofnet::{
    find_singularity_free_loop, is_proof_net, net_from_text, net_to_text, validate_bps,
    ProofStructure,
};
use crate::sequent::{check_proof, proof_from_text, proof_to_text, Sequent};

#[derive(Parser)]
#[command(
    name = "mallnet",
    about = "Incremental construction and checking of MALL proof nets",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Dot,
    JsonLines,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    RoundRobin,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a formula into its universal program of bipoles.
    Bipolarize {
        /// Formula file (.mall).
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Check a sequent proof against a program.
    CheckProof {
        /// Proof file (.bsp).
        proof: PathBuf,
        /// Program file (.bpl).
        program: PathBuf,
    },
    /// Validate a structure and decide the net criterion.
    CheckNet {
        /// Structure file (.net).
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Also print per-slice maximal-switching domination forests.
        #[arg(long)]
        explain: bool,
    },
    /// De-sequentialize a checked proof into a structure.
    Deseq {
        /// Proof file (.bsp).
        proof: PathBuf,
        /// Program file (.bpl).
        program: PathBuf,
    },
    /// Sequentialize a correct structure into a checked proof.
    Seq {
        /// Structure file (.net).
        input: PathBuf,
        /// Program file (.bpl).
        program: PathBuf,
    },
    /// Run the concurrent construction of a goal sequent.
    Simulate {
        /// Program file (.bpl).
        program: PathBuf,
        /// Goal sequent: comma-separated atoms.
        goal: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        #[arg(long, value_enum, default_value = "round-robin")]
        policy: PolicyArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the final structure to this path.
        #[arg(long)]
        emit_net: Option<PathBuf>,
    },
    /// Export a structure as Graphviz DOT.
    ExportDot {
        /// Structure file (.net).
        input: PathBuf,
    },
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &PathBuf) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_program(path: &PathBuf) -> Result<Program, String> {
    Program::parse(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn load_net(path: &PathBuf) -> Result<ProofStructure, String> {
    net_from_text(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_goal(goal: &str) -> Result<Sequent, String> {
    let mut atoms = Vec::new();
    for part in goal.split(',') {
        match parse_formula(part.trim()) {
            Ok(crate::formulas::Formula::NegAtom(a)) => atoms.push(a),
            _ => return Err(format!("goal must list negative atoms, got {part:?}")),
        }
    }
    Ok(Sequent::from_atoms(atoms))
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Bipolarize { input, format } => {
            let formula = parse_formula(read(&input)?.trim())
                .map_err(|e| format!("{}: {e}", input.display()))?;
            let (program, scheme) = Program::from_formula(&formula);
            match format {
                Format::Text => {
                    for (name, source) in scheme.alias_table() {
                        println!("# alias {name} = {source}");
                    }
                    print!("{}", program.to_text());
                }
                Format::JsonLines => {
                    for b in program.bipoles() {
                        println!("{{\"head\":\"{}\",\"clause\":\"{}\"}}", b.head, b.clause);
                    }
                }
                Format::Dot => return Err("bipolarize has no dot format".into()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckProof { proof, program } => {
            let program = load_program(&program)?;
            let proof = proof_from_text(&read(&proof)?).map_err(|e| format!("proof: {e}"))?;
            let report = check_proof(&proof, &program);
            if report.is_ok() {
                println!(
                    "ok: proof of [{}] with {} inferences",
                    proof.conclusion,
                    proof.node_count()
                );
                Ok(ExitCode::SUCCESS)
            } else {
                println!("{report}");
                Ok(ExitCode::from(1))
            }
        }
        Command::CheckNet {
            input,
            format,
            explain,
        } => {
            let net = load_net(&input)?;
            let report = validate_bps(&net);
            if !report.is_ok() {
                match format {
                    Format::JsonLines => {
                        for v in &report.violations {
                            println!("{{\"violation\":\"{v}\"}}");
                        }
                    }
                    _ => println!("{report}"),
                }
                return Ok(ExitCode::from(1));
            }
            let mut offending = None;
            for slice in net.slices() {
                if let Some(trip) = find_singularity_free_loop(&net, &slice) {
                    offending = Some((slice, trip));
                    break;
                }
            }
            match offending {
                Some((slice, trip)) => {
                    let resolution: Vec<String> = slice
                        .resolution
                        .iter()
                        .map(|(h, l)| format!("{h}:{l}"))
                        .collect();
                    match format {
                        Format::JsonLines => println!(
                            "{{\"correct\":false,\"slice\":\"{}\",\"loop\":\"{trip}\"}}",
                            resolution.join(",")
                        ),
                        _ => {
                            println!(
                                "incorrect: singularity-free loop in slice [{}]",
                                resolution.join(",")
                            );
                            println!("loop: {trip}");
                        }
                    }
                    Ok(ExitCode::from(1))
                }
                None => {
                    debug_assert_eq!(is_proof_net(&net), is_proof_net_fast(&net));
                    match format {
                        Format::JsonLines => println!("{{\"correct\":true}}"),
                        _ => println!("correct"),
                    }
                    if explain {
                        for slice in net.slices() {
                            let max = maximal_switching(&net, &slice);
                            let forest = domination_forest(&net, &max);
                            let resolution: Vec<String> = slice
                                .resolution
                                .iter()
                                .map(|(h, l)| format!("{h}:{l}"))
                                .collect();
                            println!("slice [{}]", resolution.join(","));
                            for line in forest.to_string().lines() {
                                println!("  {line}");
                            }
                        }
                    }
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::Deseq { proof, program } => {
            let program = load_program(&program)?;
            let proof = proof_from_text(&read(&proof)?).map_err(|e| format!("proof: {e}"))?;
            let report = check_proof(&proof, &program);
            if !report.is_ok() {
                eprintln!("{report}");
                return Ok(ExitCode::from(1));
            }
            match desequentialize(&proof, &program) {
                Ok(net) => {
                    print!("{}", net_to_text(&net));
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Seq { input, program } => {
            let program = load_program(&program)?;
            let net = load_net(&input)?;
            match sequentialize(&net, &program) {
                Ok(proof) => {
                    print!("{}", proof_to_text(&proof));
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("{e}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Simulate {
            program,
            goal,
            seed,
            max_steps,
            policy,
            format,
            emit_net,
        } => {
            let program = load_program(&program)?;
            let goal = parse_goal(&goal)?;
            let sched = Schedule {
                seed,
                policy: match policy {
                    PolicyArg::RoundRobin => Policy::RoundRobin,
                    PolicyArg::Random => Policy::Random,
                },
            };
            let outcome = simulate(&program, &goal, &sched, max_steps);
            match format {
                Format::JsonLines => {
                    for e in &outcome.trace.events {
                        println!("{}", e.to_json());
                    }
                }
                _ => print!("{}", outcome.trace),
            }
            if let Some(path) = emit_net {
                fs::write(&path, net_to_text(&outcome.final_net))
                    .map_err(|e| format!("{}: {e}", path.display()))?;
            }
            if outcome.closed {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
        Command::ExportDot { input } => {
            let net = load_net(&input)?;
            print!("{}", crate::proofnet::dot::net_to_dot(&net));
            Ok(ExitCode::SUCCESS)
        }
    }
}
