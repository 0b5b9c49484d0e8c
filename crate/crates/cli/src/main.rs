use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use colorbal::generators::{generate, GenKind, GenSpec};
use colorbal::harness::{self, exit_code, BalanceConfig, BenchFile};
use colorbal::maxnorm::{Fidelity, WalkConfig, DEFAULT_MAX_RESTARTS};
use colorbal::oracle::brute_force_min;
use colorbal::{Instance64, InstanceFile, NormKind, Selection};

#[derive(Parser)]
#[command(name = "colorbal", version, about = "Colorful vector balancing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select one vector per family with a small sum.
    Balance {
        #[arg(long)]
        input: PathBuf,
        /// Overrides the norm stored in the instance.
        #[arg(long)]
        norm: Option<NormKind>,
        #[arg(long, default_value = "practical")]
        mode: Fidelity,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-round walk records as JSON lines.
        #[arg(long)]
        telemetry: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MAX_RESTARTS)]
        max_restarts: usize,
    },
    /// Write a random feasible instance.
    Gen {
        #[arg(long)]
        kind: GenKind,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "l2")]
        norm: NormKind,
        #[arg(long, default_value_t = 2)]
        min_size: usize,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
    },
    /// Recompute the norm of a selection and compare with the bound.
    Verify {
        #[arg(long)]
        input: PathBuf,
        /// A JSON array of member indices, or a balance report.
        #[arg(long)]
        selection: PathBuf,
    },
    /// Exhaustive minimum over all selections.
    Oracle {
        #[arg(long)]
        input: PathBuf,
    },
    /// Balance every instance of a spec file and write a CSV table.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_instance(path: &Path) -> anyhow::Result<InstanceFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn read_selection(path: &Path) -> anyhow::Result<Selection> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let choices = match value.get("selection") {
        Some(inner) => inner.clone(),
        None => value,
    };
    let choices: Vec<usize> =
        serde_json::from_value(choices).context("selection must be a list of member indices")?;
    Ok(Selection { choices })
}

fn write_line(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    if let Some(p) = path {
        fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{text}")?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Balance {
            input,
            norm,
            mode,
            seed,
            out,
            telemetry,
            max_restarts,
        } => {
            let file = read_instance(&input)?;
            let mut inst: Instance64 = file.to_instance()?;
            if let Some(norm) = norm {
                inst = inst.with_norm(norm)?;
            }
            let witness = file.witness::<f64>();
            let cfg = BalanceConfig {
                walk: WalkConfig {
                    mode,
                    seed,
                    max_restarts,
                    ..WalkConfig::default()
                },
            };
            let report = harness::balance(&inst, witness.as_ref(), &cfg)?;
            if let Some(p) = telemetry {
                let lines: String = report
                    .telemetry
                    .iter()
                    .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
                    .collect();
                fs::write(&p, lines).with_context(|| format!("writing {}", p.display()))?;
            }
            write_line(out.as_deref(), &report.to_json())
        }
        Command::Gen {
            kind,
            d,
            n,
            seed,
            out,
            norm,
            min_size,
            max_size,
        } => {
            let spec = GenSpec {
                kind,
                d,
                n,
                min_size,
                max_size,
                norm,
                seed,
            };
            let (inst, witness) = generate::<f64>(&spec)?;
            let file = InstanceFile::from_instance(&inst, Some(&witness));
            let text = serde_json::to_string_pretty(&file)?;
            fs::write(&out, text + "\n").with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
        Command::Verify { input, selection } => {
            let inst: Instance64 = read_instance(&input)?.to_instance()?;
            let selection = read_selection(&selection)?;
            let v = harness::verify(&inst, &selection)?;
            let oracle = v.oracle.as_ref().map(|o| o.best_value);
            let summary = serde_json::json!({
                "achieved": v.report.achieved,
                "bound": v.report.bound,
                "within_bound": v.within_bound(),
                "oracle": oracle,
                "selection": v.report.selection,
            });
            write_line(None, &summary.to_string())?;
            if !v.within_bound() {
                return Err(colorbal::Error::BoundViolated {
                    achieved: v.report.achieved,
                    bound: v.report.bound,
                }
                .into());
            }
            Ok(())
        }
        Command::Oracle { input } => {
            let inst: Instance64 = read_instance(&input)?.to_instance()?;
            let r = brute_force_min(&inst, None, inst.norm())?;
            let summary = serde_json::json!({
                "best_value": r.best_value,
                "best_selection": r.best_selection.choices,
                "enumerated_count": r.enumerated_count,
            });
            write_line(None, &summary.to_string())
        }
        Command::Bench { spec, out } => {
            let text =
                fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let bench: BenchFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", spec.display()))?;
            if bench.specs.is_empty() {
                bail!("{} lists no specs", spec.display());
            }
            let walk = WalkConfig {
                mode: bench.mode,
                max_restarts: bench.max_restarts.unwrap_or(DEFAULT_MAX_RESTARTS),
                ..WalkConfig::default()
            };
            let rows = harness::bench(&bench.specs, &BalanceConfig { walk });
            let file =
                fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            harness::write_csv(&rows, file)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            eprintln!("{} rows, {failed} failed", rows.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<colorbal::Error>() {
                Some(e) => exit_code(e),
                None if err.downcast_ref::<serde_json::Error>().is_some() => 4,
                None => 1,
            };
            ExitCode::from(code as u8)
        }
    }
}
