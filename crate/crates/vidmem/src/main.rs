//! Command-line front end: ingest a stream into a memory root, query it,
//! benchmark selection strategies, and check real-time ingestion feasibility.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vidmem::config::{CostModel, PipelineConfig};
use vidmem::error::{Error, Result};
use vidmem::harness::{
    check_realtime_feasibility, fps_sweep, run_ingestion, run_query, simulate_strategies,
    Reasoner, ReasonerDescriptor, Scenario, Strategy, StrategyKind, StreamSourceSpec,
};
use vidmem::harness::reasoner::ReasonerBackendKind;

#[derive(Parser)]
#[command(name = "vidmem", version, about = "Streaming video memory and retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let (config, warnings) = match &self.config {
            Some(path) => PipelineConfig::from_toml_file(path)?,
            None => vidmem::validate_config(PipelineConfig::default())?,
        };
        for w in warnings {
            eprintln!("warning: {w}");
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Stream a source through segmentation, clustering, embedding, and
    /// memory construction.
    Ingest {
        /// Image directory, or `synthetic:<spec.json>` for a scripted stream.
        #[arg(long)]
        source: String,
        /// Memory root directory (must not already hold a store).
        #[arg(long)]
        memory: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Emit the ingestion report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Answer a text query from an ingested memory.
    Query {
        #[arg(long)]
        memory: PathBuf,
        /// Query text.
        #[arg(long)]
        text: String,
        /// Keyframe selection strategy.
        #[arg(long, default_value = "akr", value_parser = ["akr", "fixed", "topk"])]
        strategy: String,
        /// Sampling seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Softmax temperature override.
        #[arg(long)]
        temperature: Option<f64>,
        /// Adaptive termination threshold override.
        #[arg(long)]
        theta: Option<f64>,
        /// Adaptive lower-bound scale override.
        #[arg(long)]
        beta: Option<f64>,
        /// Draw ceiling override.
        #[arg(long)]
        n_max: Option<usize>,
        /// Fixed budget override (fixed/topk strategies).
        #[arg(long)]
        n_fixed: Option<usize>,
        /// Query arrival time in stream seconds.
        #[arg(long, default_value_t = 0.0)]
        arrival_s: f64,
        /// Reasoner endpoint; when absent the recording stub answers.
        #[arg(long)]
        reasoner_endpoint: Option<String>,
        /// Model name sent to an http reasoner.
        #[arg(long, default_value = "default")]
        reasoner_model: String,
        #[command(flatten)]
        config: ConfigArgs,
        /// Emit the query record as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Ingest a scenario and price strategies against each other.
    Bench {
        /// Scenario JSON file: {stream, queries, cost_model}.
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated strategy names
        /// (venus_akr, venus_fixed, topk, full_upload, uniform_sample).
        #[arg(long, default_value = "venus_akr,venus_fixed,topk,full_upload,uniform_sample")]
        strategies: String,
        /// Where to write the full JSON report.
        #[arg(long)]
        out: PathBuf,
        /// Working directory for the scenario's memory (temporary when absent).
        #[arg(long)]
        work_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Analytic real-time ingestion feasibility over an fps sweep.
    Feasibility {
        /// Device cost profile (JSON, schema = the simulator cost model).
        #[arg(long)]
        profile: PathBuf,
        /// Sweep range as lo:hi.
        #[arg(long)]
        fps_range: String,
        /// Number of sweep points.
        #[arg(long, default_value_t = 16)]
        steps: usize,
        /// Stream frames per index frame (1 = embed every frame).
        #[arg(long, default_value_t = 1.0)]
        sparsification: f64,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            source,
            memory,
            config,
            json,
        } => {
            let config = config.load()?;
            let spec = StreamSourceSpec::from_cli_arg(&source)?;
            let report = run_ingestion(&spec, &config, &memory)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!(
                    "ingested {} frames -> {} partitions, {} clusters, {} indexed frames \
                     (sparsification {:.1}:1) in {:.2}s",
                    report.frames_ingested,
                    report.partitions_closed,
                    report.clusters_created,
                    report.indexed_frames,
                    report.sparsification_ratio,
                    report.timings.wall_s,
                );
                println!(
                    "max queue depths: {:?}; memory sequence {}",
                    report.timings.max_queue_depth, report.memory_sequence
                );
            }
            Ok(())
        }
        Command::Query {
            memory,
            text,
            strategy,
            seed,
            temperature,
            theta,
            beta,
            n_max,
            n_fixed,
            arrival_s,
            reasoner_endpoint,
            reasoner_model,
            config,
            json,
        } => {
            let mut config = config.load()?;
            if let Some(seed) = seed {
                config.retrieval.seed = seed;
            }
            if let Some(t) = temperature {
                config.retrieval.temperature = t;
            }
            if let Some(t) = theta {
                config.retrieval.theta = t;
            }
            if let Some(b) = beta {
                config.retrieval.beta = b;
            }
            if let Some(n) = n_max {
                config.retrieval.n_max = n;
            }
            if let Some(n) = n_fixed {
                config.retrieval.n_fixed = Some(n);
            }
            let (config, warnings) = vidmem::validate_config(config)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            let strategy = StrategyKind::parse(&strategy)?;
            let descriptor = match reasoner_endpoint {
                Some(endpoint) => ReasonerDescriptor {
                    backend: ReasonerBackendKind::Http,
                    endpoint: Some(endpoint),
                    model: reasoner_model,
                    ..ReasonerDescriptor::default()
                },
                None => ReasonerDescriptor::default(),
            };
            let reasoner = Reasoner::from_descriptor(&descriptor)?;
            let cost = config.simulator.clone();
            let record = run_query(&text, &memory, &config, strategy, &reasoner, &cost, arrival_s)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&record)?);
            } else {
                println!(
                    "strategy {}: {} draws over {} indices -> {} keyframes (cumulative p {:.4})",
                    record.strategy,
                    record.result.total_draws,
                    record.result.selected_index_ids.len(),
                    record.result.keyframe_ids.len(),
                    record.result.cumulative_probability,
                );
                println!(
                    "latency: device {:.4}s + link {:.4}s + cloud {:.4}s = {:.4}s",
                    record.latency.on_device_s,
                    record.latency.transmission_s,
                    record.latency.cloud_s,
                    record.latency.total_s,
                );
                match (&record.answer, &record.reasoner_error) {
                    (Some(answer), _) => println!("answer: {answer}"),
                    (None, Some(err)) => println!("reasoner failed: {err}"),
                    (None, None) => {}
                }
            }
            Ok(())
        }
        Command::Bench {
            scenario,
            strategies,
            out,
            work_dir,
            config,
        } => {
            let config = config.load()?;
            let scenario = Scenario::from_file(&scenario)?;
            let strategies = strategies
                .split(',')
                .map(|s| Strategy::parse(s.trim()))
                .collect::<Result<Vec<_>>>()?;
            let tempdir;
            let memory_root = match &work_dir {
                Some(dir) => dir.join("memory"),
                None => {
                    tempdir = std::env::temp_dir().join(format!("vidmem-bench-{}", std::process::id()));
                    tempdir.join("memory")
                }
            };
            let report = simulate_strategies(&scenario, &config, &strategies, &memory_root)?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)
                .map_err(|e| Error::io(&out, e))?;
            println!(
                "{:<15} {:>12} {:>14} {:>12} {:>12} {:>10}",
                "strategy", "frames", "bytes", "mean lat s", "total lat s", "hit rate"
            );
            for s in &report.strategies {
                println!(
                    "{:<15} {:>12} {:>14} {:>12.4} {:>12.4} {:>10}",
                    s.strategy,
                    s.frames_sent_total,
                    s.bytes_sent_total,
                    s.mean_latency.total_s,
                    s.total_latency.total_s,
                    s.ground_truth_hit_rate
                        .map(|h| format!("{h:.2}"))
                        .unwrap_or_else(|| "-".into()),
                );
            }
            println!("report written to {}", out.display());
            Ok(())
        }
        Command::Feasibility {
            profile,
            fps_range,
            steps,
            sparsification,
            json,
        } => {
            let bytes = std::fs::read(&profile).map_err(|e| Error::io(&profile, e))?;
            let cost: CostModel = serde_json::from_slice(&bytes)?;
            let (lo, hi) = parse_range(&fps_range)?;
            let report =
                check_realtime_feasibility(&fps_sweep(lo, hi, steps), &cost, sparsification)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{:<10} {:>12} {:>16} {:>12}", "fps", "utilization", "growth idx/s", "sustainable");
                for row in &report.rows {
                    println!(
                        "{:<10.3} {:>12.4} {:>16.4} {:>12}",
                        row.fps, row.utilization, row.queue_growth_per_s, row.sustainable
                    );
                }
                match report.max_sustainable_fps {
                    Some(fps) => println!("max sustainable fps: {fps:.3}"),
                    None => println!("max sustainable fps: unbounded"),
                }
            }
            Ok(())
        }
    }
}

fn parse_range(text: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::Source(format!("fps range must be lo:hi, got {text:?}")));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Source(format!("bad fps {:?}", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Source(format!("bad fps {:?}", parts[1])))?;
    if lo.is_nan() || lo <= 0.0 || hi < lo {
        return Err(Error::Source(format!("fps range must satisfy 0 < lo <= hi, got {text:?}")));
    }
    Ok((lo, hi))
}
