use clap::{Parser, Subcommand};
use domsplit::certifier::certify;
use domsplit::harness::{
    emit, johnson_scan, perturbation_experiment, run_spectrum, scan_csv, site_diagnostics, to_json, Config, Format,
    GridSpec, ScanOptions,
};
use domsplit::jacobi::greens_column;
use domsplit::models::{circle_grid, dynamical_ds_check};
use domsplit::Error;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "domsplit", version, about = "Dominated splitting certificates for Jacobi cocycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for perturbation trials.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Include per-site arrays.
    #[arg(long, global = true)]
    verbose: bool,
    /// Scan the rectangle `re0,re1,im0,im1` instead of the configured real grid.
    #[arg(long, global = true, allow_hyphen_values = true, value_parser = parse_rect)]
    complex: Option<[f64; 4]>,
}

#[derive(Subcommand)]
enum Command {
    /// Truncation spectra and their interval cover.
    Spectrum,
    /// Certificate at the configured energy.
    Certify,
    /// Resolvent column at the configured energy and site.
    Green,
    /// Compare resolvent set and dominated splitting over an energy grid.
    Scan,
    /// Recertify random perturbations inside the stability radius.
    Perturb,
    /// Certify a sampled family over a grid of phases.
    Dyncheck,
}

fn parse_rect(s: &str) -> Result<[f64; 4], String> {
    let v = s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}"))).collect::<Result<Vec<_>, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 4 numbers, got {}", v.len()))
}

enum Failure {
    Input(String),
    Correspondence(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn write(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => match std::io::stdout().lock().write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Input(format!("stdout: {e}"))),
            _ => Ok(()),
        },
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Input("--config is required".into()))?;
    let cfg = Config::from_path(path)?;
    let op = cfg.operator()?;
    let jobs = cli.jobs.or(cfg.jobs).unwrap_or(1);
    let opts = ScanOptions { certifier: cfg.certifier.clone(), jobs, sizes: cfg.sizes.clone(), verbose: cli.verbose };
    match cli.command {
        Command::Spectrum => {
            let spec = run_spectrum(&op, cfg.sizes.as_deref());
            let text = match cli.format {
                Format::Json => to_json(&spec)?,
                Format::Csv => {
                    let mut s = String::from("lo,hi\n");
                    for iv in &spec.cover {
                        s += &format!("{},{}\n", iv[0], iv[1]);
                    }
                    s
                }
            };
            write(cli, &text)
        }
        Command::Certify => {
            let seq = op.cocycle_map(cfg.energy()?);
            let cert = certify(&seq, &cfg.certifier);
            let mut value = serde_json::to_value(&cert).map_err(|e| Failure::Input(e.to_string()))?;
            if cli.verbose {
                if let (Some(f), Some(n)) = (&cert.field, cert.n) {
                    let d = site_diagnostics(&seq, f, n)?;
                    value["sites"] = serde_json::to_value(d).map_err(|e| Failure::Input(e.to_string()))?;
                }
            }
            write(cli, &to_json(&value)?)
        }
        Command::Green => {
            let site = cfg.site.ok_or_else(|| Failure::Input("config needs \"site\"".into()))?;
            let g = greens_column(&op, cfg.energy()?, site, cfg.margin.unwrap_or(64))?;
            write(cli, &to_json(&g)?)
        }
        Command::Scan => {
            let mut grid = cfg.grid.clone().ok_or_else(|| Failure::Input("config needs \"grid\"".into()))?;
            if let Some(r) = &cli.complex {
                grid = GridSpec { lo: r[0], hi: r[1], step: grid.step, imag: Some([r[2], r[3]]) };
            }
            let report = johnson_scan(&op, &grid, &opts)?;
            match &cli.out {
                Some(p) => emit(&report, p, cli.format)?,
                None => write(
                    cli,
                    &match cli.format {
                        Format::Csv => scan_csv(&report)?,
                        Format::Json => to_json(&report)?,
                    },
                )?,
            }
            if report.summary.symdiff_count > 0 {
                return Err(Failure::Correspondence(format!(
                    "{} hard disagreements at {:?}",
                    report.summary.symdiff_count, report.summary.symdiff_energies
                )));
            }
            Ok(())
        }
        Command::Perturb => {
            let seed = cli.seed.unwrap_or(cfg.seed);
            let report = perturbation_experiment(
                &op,
                cfg.energy()?,
                cfg.trials.unwrap_or(100),
                cfg.scale.unwrap_or(0.9),
                seed,
                &opts,
            )?;
            write(cli, &to_json(&report)?)
        }
        Command::Dyncheck => {
            let model = match &cfg.operator {
                domsplit::harness::OperatorSpec::Model { model } => model,
                _ => return Err(Failure::Input("dyncheck needs a model operator".into())),
            };
            let grid = circle_grid(model.omega, cfg.omega_points.unwrap_or(32));
            let [lo, hi] = model.window;
            let report = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Failure::Input(e.to_string()))?
                .install(|| dynamical_ds_check(&model.dynamics, &model.pair, cfg.energy()?, &grid, lo, hi, &cfg.certifier))?;
            write(cli, &to_json(&report)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(3);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Correspondence(msg)) => {
            eprintln!("correspondence failure: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
