use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gff_lab::dgff::dump::write_field;
use gff_lab::dgff::{greens_matrix, sample_dense, sample_spectral, Domain, SamplerKind};
use gff_lab::geometry::box_vn;
use gff_lab::harness::{plot_results, run_experiment, write_outputs, ExperimentConfig, ExperimentKind, HarnessError};
use gff_lab::schedule::{epsilon_of_lambda, schedule_table, summability_check, ScheduleConfig};

#[derive(Parser)]
#[command(name = "gff-lab", version, about = "Two-sided level sets of the planar discrete Gaussian free field")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one field on V_N and write it as a binary dump (JSON header line, little-endian f64 rows).
    Sample {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_sampler, default_value = "spectral")]
        sampler: SamplerKind,
        /// Write `x,y,value` CSV rows instead of the binary dump.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Green's function of V_N as CSV rows `ux,uy,vx,vy,g` over interior pairs.
    Greens {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constant schedule table and the headline thresholds.
    Schedule {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo experiment from a JSON config.
    Experiment {
        kind: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// SVG plot of a results.csv.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_sampler(s: &str) -> Result<SamplerKind, String> {
    match s {
        "dense" => Ok(SamplerKind::Dense),
        "spectral" => Ok(SamplerKind::Spectral),
        _ => Err(format!("unknown sampler {s:?}")),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), HarnessError> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Sample { n, seed, sampler, csv, out } => {
            let b = box_vn(n)?;
            let s = match sampler {
                SamplerKind::Dense => sample_dense(&Domain::from_box(b), seed)?,
                SamplerKind::Spectral => sample_spectral(b, seed),
            };
            let mut buf = Vec::new();
            if csv {
                buf.extend_from_slice(b"x,y,value\n");
                for v in s.bbox().vertices() {
                    buf.extend_from_slice(format!("{},{},{}\n", v.x, v.y, s.value(v)).as_bytes());
                }
            } else {
                write_field(&mut buf, &s)?;
            }
            emit(out.as_deref(), &buf)
        }
        Command::Greens { n, out } => {
            let g = greens_matrix(&Domain::from_box(box_vn(n)?))?;
            let mut s = String::from("ux,uy,vx,vy,g\n");
            for &u in g.interior() {
                for &v in g.interior() {
                    s.push_str(&format!("{},{},{},{},{}\n", u.x, u.y, v.x, v.y, g.get(u, v)));
                }
            }
            emit(out.as_deref(), s.as_bytes())
        }
        Command::Schedule { config, lambda, out } => {
            let cfg: ScheduleConfig = match config {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?;
                    serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?
                }
                None => ScheduleConfig::default(),
            };
            cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
            let table = schedule_table(&cfg, lambda)?;
            let headline = epsilon_of_lambda(&cfg, lambda)?;
            let summary = serde_json::json!({
                "config": cfg,
                "lambda": lambda,
                "c": cfg.c_value(),
                "K_inf": table.k_inf,
                "K_lambda": headline.k_lambda,
                "epsilon_lambda": headline.epsilon,
                "b": headline.b,
                "a_effective": headline.a_effective,
                "K_lambda_binding": headline.binding,
                "summability_residual": headline.summability_residual,
                "configured_K_summability": summability_check(cfg.k, cfg.delta)?,
            });
            let json = serde_json::to_string_pretty(&summary)? + "\n";
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    fs::write(dir.join("schedule.csv"), table.to_csv())?;
                    fs::write(dir.join("schedule.json"), json)?;
                    Ok(())
                }
                None => emit(None, (table.to_csv() + &json).as_bytes()),
            }
        }
        Command::Experiment { kind, config, out, workers } => {
            let kind: ExperimentKind = kind.parse()?;
            let cfg = ExperimentConfig::load(&config)?;
            if cfg.kind != kind {
                return Err(HarnessError::Config(format!("config kind {} does not match {}", cfg.kind.name(), kind.name())));
            }
            let dir = out
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| HarnessError::Config("no output directory (--out or \"out\")".into()))?;
            let started = chrono::Utc::now();
            let result = run_experiment(&cfg, workers)?;
            write_outputs(&dir, &cfg, &result, started)?;
            if !result.failures.is_empty() {
                return Err(HarnessError::Invariant(result.failures.join("; ")));
            }
            Ok(())
        }
        Command::Plot { csv, out } => {
            let text = fs::read_to_string(&csv)?;
            fs::write(out, plot_results(&text)?)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gff-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
