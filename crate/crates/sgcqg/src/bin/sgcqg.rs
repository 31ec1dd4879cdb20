//! Thin command-line front end over the library.
//!
//! Exit codes: 0 on success, 1 for input/validation problems, 2 for
//! backend/runtime failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sgcqg::context::AnnotatedContext;
use sgcqg::error::Error;
use sgcqg::graph::build_graph;
use sgcqg::pipeline::{run_evaluate, run_generate, run_inspect};
use sgcqg::PipelineConfig;

#[derive(Parser)]
#[command(name = "sgcqg", about = "Two-stage conversational question generation", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an annotated context file and print a summary.
    Ingest { file: PathBuf },
    /// Build the semantic graph for a context and print its statistics.
    Graph {
        file: PathBuf,
        /// Write the full graph as JSON to this path.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Generate conversations for a context file or directory.
    Generate {
        /// Context file or directory of *.json contexts.
        contexts: PathBuf,
        /// Pipeline configuration (TOML or JSON); defaults apply if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for conversation and trace files.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for per-context parallelism (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Score conversation files against their contexts.
    Evaluate {
        /// Conversation JSONL file or directory.
        conversations: PathBuf,
        /// Context file or directory of *.json contexts.
        contexts: PathBuf,
        /// Pipeline configuration (TOML or JSON); defaults apply if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the report JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a generation trace, optionally filtered by reject reason.
    Inspect {
        trace: PathBuf,
        /// Keep only attempts matching this outcome or span reject reason.
        #[arg(long)]
        reason: Option<String>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<PipelineConfig, Error> {
    match path {
        Some(p) => PipelineConfig::from_path(p),
        None => {
            let mut c = PipelineConfig::default();
            c.apply_env();
            c.validate()?;
            Ok(c)
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ingest { file } => {
            let ctx = AnnotatedContext::from_path(&file)?;
            println!(
                "{}: {} sentence(s), {} cluster(s), {} entit(ies)",
                ctx.id,
                ctx.sentence_count(),
                ctx.clusters.len(),
                ctx.entities.len()
            );
        }
        Command::Graph { file, dump } => {
            let ctx = AnnotatedContext::from_path(&file)?;
            let graph = build_graph(&ctx);
            let coref = graph
                .edges
                .iter()
                .filter(|e| e.kind == sgcqg::EdgeKind::Coreference)
                .count();
            let same = graph
                .edges
                .iter()
                .filter(|e| e.kind == sgcqg::EdgeKind::SameSentence)
                .count();
            println!(
                "{}: {} node(s), {} edge(s) ({} coreference, {} same-sentence, {} extra)",
                ctx.id,
                graph.nodes.len(),
                graph.edges.len(),
                coref,
                same,
                graph.extra_edge_count()
            );
            if let Some(path) = dump {
                std::fs::write(&path, serde_json::to_string_pretty(&graph.dump_json())?)?;
                println!("graph written to {}", path.display());
            }
        }
        Command::Generate {
            contexts,
            config,
            out,
            jobs,
        } => {
            if let Some(n) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Error::Config(e.to_string()))?;
            }
            let config = load_config(config.as_ref())?;
            let results = run_generate(&contexts, &config, &out)?;
            let mut first_error: Option<Error> = None;
            for (id, result) in results {
                match result {
                    Ok(output) => {
                        let note = match output.error {
                            Some(e) => format!(" (stopped early: {e})"),
                            None => String::new(),
                        };
                        println!("{id}: {} turn(s){note}", output.conversation.turns.len());
                    }
                    Err(e) => {
                        eprintln!("{id}: {e}");
                        if first_error.is_none() {
                            first_error = Some(e);
                        }
                    }
                }
            }
            if let Some(e) = first_error {
                return Err(e);
            }
        }
        Command::Evaluate {
            conversations,
            contexts,
            config,
            out,
        } => {
            let config = load_config(config.as_ref())?;
            let report = run_evaluate(&conversations, &contexts, &config)?;
            let json = serde_json::to_string_pretty(&report.to_report_json())?;
            match out {
                Some(path) => {
                    std::fs::write(&path, json)?;
                    println!("report written to {}", path.display());
                }
                None => println!("{json}"),
            }
        }
        Command::Inspect { trace, reason } => {
            let report = run_inspect(&trace, reason.as_deref())?;
            println!(
                "{} attempt(s), {} accepted",
                report.attempts, report.accepted
            );
            for (outcome, count) in &report.outcomes {
                println!("  {outcome}: {count}");
            }
            if reason.is_some() {
                for r in &report.records {
                    println!("{}", serde_json::to_string(r)?);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BackendUnavailable { .. } | Error::EmbedderUnavailable(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
