//! `rwta`: run, sweep, and inspect rebound winner-takes-all scenarios.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use rwta::scenario::{
    preset, run_scenario, sweep_point, sweep_to_csv, write_run, Scenario, PRESET_NAMES,
};

#[derive(Parser)]
#[command(
    name = "rwta",
    version,
    about = "Rebound winner-takes-all network simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario and write its run directory.
    Run {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: Output,
        /// Also record gates, synaptic filters, and external currents.
        #[arg(long)]
        record_all: bool,
    },
    /// Run a scenario once per value of one parameter and tabulate the rhythm.
    Sweep {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        output: Output,
        /// Dotted parameter path, e.g. `drive.bias`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0.., allow_hyphen_values = true)]
        values: Vec<String>,
    },
    /// Print the preset names with a one-line description.
    ListPresets,
    /// Check a scenario and its overrides without simulating.
    Validate {
        #[command(flatten)]
        target: Target,
    },
    /// Print a preset as a TOML document.
    ShowPreset {
        name: String,
        /// Spell out the network and every input explicitly.
        #[arg(long)]
        normalized: bool,
    },
}

#[derive(Args)]
struct Target {
    /// Preset name or path to a TOML scenario.
    scenario: String,
    /// Override a parameter, e.g. `--set sim.duration=500`. Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Target {
    fn load(&self) -> Result<Scenario> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("sim.seed={seed}"));
        }
        let base = Scenario::load(&self.scenario)?;
        Ok(base.with_overrides(&overrides)?)
    }
}

#[derive(Args)]
struct Output {
    /// Output root; each run writes `<out>/<name>-seed<seed>/`.
    #[arg(long, env = "RWTA_OUT", default_value = "runs")]
    out: PathBuf,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            target,
            output,
            record_all,
        } => {
            let mut scenario = target.load()?;
            scenario.sim.record_all |= record_all;
            let run =
                run_scenario(&scenario).with_context(|| format!("running {}", scenario.name))?;
            let dir = write_run(&run, &output.out)?;
            if let Some(g) = run.summary.gate_violation {
                eprintln!(
                    "warning: gate of neuron {} left [0, 1] at t={} (value {}); reduce dt",
                    g.neuron + 1,
                    g.time,
                    g.value
                );
            }
            for ch in &run.summary.channels {
                match ch.period {
                    Some(p) => println!(
                        "{}: {} events, period {:.4} ± {:.4}",
                        ch.channel, ch.events, p.mean, p.std
                    ),
                    None => println!("{}: {} events", ch.channel, ch.events),
                }
            }
            println!("{}", dir.display());
        }
        Command::Sweep {
            target,
            output,
            param,
            values,
        } => {
            let base = target.load()?;
            let values: Vec<&str> = values
                .iter()
                .map(|v| v.trim())
                .filter(|v| !v.is_empty())
                .collect();
            let rows: Vec<_> = values
                .par_iter()
                .map(|v| sweep_point(&base, &param, v))
                .collect();
            for r in rows
                .iter()
                .filter_map(|r| r.error.as_ref().map(|e| (&r.value, e)))
            {
                eprintln!("warning: {param}={}: {}", r.0, r.1);
            }
            let csv = sweep_to_csv(&rows);
            let dir = output.out.join(format!("{}-sweep", base.name));
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("sweep.csv"), &csv)?;
            print!("{csv}");
        }
        Command::ListPresets => {
            for name in PRESET_NAMES {
                let s = preset(name).expect("listed preset exists");
                println!("{name:<18} {}", s.description);
            }
        }
        Command::Validate { target } => {
            let s = target.load()?;
            let spec = s.network_spec()?;
            println!(
                "{}: ok ({} neurons, {} synapses, {} steps)",
                s.name,
                spec.neuron_count(),
                spec.synapses.len(),
                s.sim.steps()
            );
        }
        Command::ShowPreset { name, normalized } => {
            let s = preset(&name).ok_or_else(|| rwta::Error::UnknownPreset(name.clone()))?;
            let s = if normalized { s.normalized()? } else { s };
            print!("{}", s.to_toml());
        }
    }
    Ok(())
}
