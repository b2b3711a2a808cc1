use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bosecf::config::{parse_config, Temperature, KEYS_HELP};
use bosecf::idealgas::{canonical_occupations, critical_temperature, default_level_count};
use bosecf::meanfield::{effective_frequency, gpe_ground_state, GpeParams};
use bosecf::scan::{run_scan, write_outputs};

#[derive(Parser)]
#[command(name = "bosecf", version, about = "Classical-field Monte Carlo for a trapped 1D Bose gas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a (g, T) scan described by a config file.
    #[command(after_help = KEYS_HELP)]
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        emit_profiles: bool,
    },
    /// Canonical ideal-gas condensate occupation and dispersion versus T (CSV on stdout).
    Idealgas {
        #[arg(long = "N")]
        n: usize,
        /// start:stop:step; a Tc suffix on any part makes all three fractions of T_C.
        #[arg(long = "T-range")]
        t_range: String,
    },
    /// GPE ground state and effective frequency (JSON on stdout).
    Gpe {
        #[arg(long, allow_negative_numbers = true)]
        g: f64,
        #[arg(long)]
        n0: f64,
        /// Also write x,psi to this CSV file.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
}

fn parse_range(s: &str, tc: f64) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected start:stop:step, got `{s}`"));
    }
    let rel = parts.iter().any(|p| p.trim().ends_with("Tc"));
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = match p.parse::<Temperature>()? {
            Temperature::Absolute(x) | Temperature::Relative(x) => x,
        };
    }
    let [a, b, step] = v;
    if !(step > 0.0) || b < a {
        return Err(format!("bad range `{s}`"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    let scale = if rel { tc } else { 1.0 };
    Ok((0..=count).map(|k| (a + k as f64 * step) * scale).collect())
}

fn idealgas(n: usize, range: &str) -> Result<(), String> {
    let tc = critical_temperature(n as f64);
    let temps = parse_range(range, tc)?;
    println!("T,T_over_Tc,n0_mean,n0_dispersion");
    for t in temps {
        let (m, d) = if t <= 0.0 {
            (n as f64, 0.0)
        } else {
            let o = canonical_occupations(n, t, default_level_count(t)).map_err(|e| e.to_string())?;
            (o.n0_mean, o.dispersion())
        };
        println!("{},{},{},{}", t, t / tc, m, d);
    }
    Ok(())
}

fn gpe(g: f64, n0: f64, profile: Option<PathBuf>) -> Result<(), String> {
    let state = gpe_ground_state(g, n0, GpeParams::default()).map_err(|e| e.to_string())?;
    let out = serde_json::json!({
        "g": g,
        "n0": n0,
        "energy_per_atom": state.energy_per_atom(),
        "second_moment": state.second_moment,
        "omega_eff": effective_frequency(&state),
        "iterations": state.iterations,
    });
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?);
    if let Some(path) = profile {
        let mut s = String::from("x,psi\n");
        for (x, p) in state.x.iter().zip(&state.psi) {
            s.push_str(&format!("{x},{p}\n"));
        }
        std::fs::write(path, s).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            chains,
            emit_profiles,
        } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            let mut cfg = match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            if let Some(s) = seed {
                cfg.sampler.seed = s;
            }
            if let Some(c) = chains {
                cfg.sampler.chains = c;
            }
            cfg.emit_profiles |= emit_profiles;
            let result = match run_scan(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            for p in result.points.iter().filter(|p| !p.is_ok()) {
                eprintln!("g={} T={}: {}", p.g, p.t, p.status);
            }
            if let Err(e) = write_outputs(&cfg, &result, &cfg.output_dir) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if result.failures() > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::Idealgas { n, t_range } => match idealgas(n, &t_range) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Gpe { g, n0, profile } => match gpe(g, n0, profile) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
