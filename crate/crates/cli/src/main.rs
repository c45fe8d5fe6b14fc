use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dcchain_core::io::{fig_repro, run, Analysis, Figure, ScenarioConfig, SweepFamily};
use dcchain_core::paramstore::parse_override;
use dcchain_core::tuning::{tune, TuningSpec};
use dcchain_core::Result;

#[derive(Parser)]
#[command(name = "dcchain", version, about = "Data-center power-delivery chain: equilibrium, modes, POA, time domain")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// scenario file (TOML); defaults apply when omitted
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// parameter override `name=value`, repeatable
    #[arg(long = "override", short = 'o', value_name = "NAME=VALUE")]
    overrides: Vec<String>,
    /// output directory
    #[arg(long, env = "DCCHAIN_OUT", default_value = "dcchain_out")]
    out: PathBuf,
    /// scenario topology, overriding the file
    #[arg(long, value_parser = ["sdcib", "ninebus"])]
    topology: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the operating point
    Equilibrium {
        #[command(flatten)]
        common: Common,
        /// server load, p.u.
        #[arg(long)]
        load: Option<f64>,
    },
    /// Eigenvalues, damping and participation
    Modes {
        #[command(flatten)]
        common: Common,
    },
    /// Power oscillation amplification curve
    Poa {
        #[command(flatten)]
        common: Common,
    },
    /// Time-domain simulation
    Simulate {
        #[command(flatten)]
        common: Common,
        /// constant[:v] | step:t0:[from:]to | sine:amp:f | sine:amp:t1=f1,t2=f2 | trace[:path]
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        tend: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Simulate, then the amplitude spectrum of the trace
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        tend: Option<f64>,
        /// trace column, repeatable
        #[arg(long)]
        signal: Vec<String>,
    },
    /// Parameter sweep with mode tracking
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["vsi_bandwidth", "load", "scr"])]
        family: Option<String>,
        /// comma-separated values
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Compare the reduced chain against the full-order model
    ValidateFullorder {
        #[command(flatten)]
        common: Common,
    },
    /// PI gains from bandwidth targets
    Tune {
        #[command(flatten)]
        common: Common,
        /// voltage | current | pll; omit for the built-in controller list
        #[arg(long, value_parser = ["voltage", "current", "pll"], requires = "f_bw")]
        plant: Option<String>,
        #[arg(long)]
        f_bw: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        zeta: f64,
        /// capacitance (voltage loops)
        #[arg(long)]
        c: Option<f64>,
        /// inductance (current loops)
        #[arg(long)]
        l: Option<f64>,
        /// resistance (current loops)
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        #[arg(long, default_value_t = 2.0 * std::f64::consts::PI * 60.0)]
        omega_b: f64,
    },
    /// Data series behind a figure: fig4 fig5 fig6 fig7 fig9 fig10 fig11 (or all)
    #[command(name = "fig_repro", alias = "fig-repro")]
    FigRepro {
        #[command(flatten)]
        common: Common,
        figure: String,
    },
}

fn load(common: &Common, analyses: &[Analysis]) -> Result<(ScenarioConfig, Vec<(String, toml::Value)>)> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(t) = &common.topology {
        cfg.topology = ScenarioConfig::from_toml_str(&format!("topology = \"{t}\""))?.topology;
    }
    cfg.analyses = analyses.to_vec();
    let ov = common
        .overrides
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    Ok((cfg, ov))
}

fn execute(cfg: &ScenarioConfig, ov: &[(String, toml::Value)], common: &Common) -> Result<()> {
    let res = cfg.resolve(ov)?;
    let out = cfg_out(cfg, common);
    let rep = run(cfg, &res, &out)?;
    report(&rep);
    Ok(())
}

/// `--out` (or DCCHAIN_OUT) wins unless it is the default and the file names a directory.
fn cfg_out(cfg: &ScenarioConfig, common: &Common) -> PathBuf {
    match (&cfg.out_dir, common.out.as_os_str() == "dcchain_out") {
        (Some(d), true) => d.clone(),
        _ => common.out.clone(),
    }
}

/// Closed stdout (`| head`) is not an error.
fn report(rep: &dcchain_core::io::RunReport) {
    let mut out = std::io::stdout().lock();
    let lines = rep
        .lines
        .iter()
        .cloned()
        .chain(rep.artifacts.iter().map(|a| format!("wrote {}", a.display())));
    for l in lines {
        if writeln!(out, "{l}").is_err() {
            return;
        }
    }
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Equilibrium { common, load: p } => {
            let (cfg, mut ov) = load(&common, &[Analysis::Equilibrium])?;
            if let Some(p) = p {
                ov.push(("p_load".into(), toml::Value::Float(p)));
            }
            execute(&cfg, &ov, &common)
        }
        Cmd::Modes { common } => {
            let (cfg, ov) = load(&common, &[Analysis::Modes])?;
            execute(&cfg, &ov, &common)
        }
        Cmd::Poa { common } => {
            let (cfg, ov) = load(&common, &[Analysis::Poa])?;
            execute(&cfg, &ov, &common)
        }
        Cmd::Simulate { common, input, tend, dt } => {
            let (mut cfg, ov) = load(&common, &[Analysis::Simulate])?;
            let s = &mut cfg.options.simulate;
            if let Some(i) = input {
                s.input = i;
            }
            if let Some(t) = tend {
                s.t_end = t;
            }
            if dt.is_some() {
                s.dt = dt;
            }
            execute(&cfg, &ov, &common)
        }
        Cmd::Spectrum { common, input, tend, signal } => {
            let (mut cfg, ov) = load(&common, &[Analysis::Spectrum])?;
            if let Some(i) = input {
                cfg.options.simulate.input = i;
            }
            if let Some(t) = tend {
                cfg.options.simulate.t_end = t;
            }
            if !signal.is_empty() {
                cfg.options.spectrum.signals = signal;
            }
            execute(&cfg, &ov, &common)
        }
        Cmd::Sweep { common, family, values } => {
            let (mut cfg, ov) = load(&common, &[Analysis::Sweep])?;
            if let Some(f) = family {
                cfg.options.sweep.family = match f.as_str() {
                    "load" => SweepFamily::Load,
                    "scr" => SweepFamily::Scr,
                    _ => SweepFamily::VsiBandwidth,
                };
            }
            if values.is_some() {
                cfg.options.sweep.values = values;
            }
            execute(&cfg, &ov, &common)
        }
        Cmd::ValidateFullorder { common } => {
            let (cfg, ov) = load(&common, &[Analysis::ValidateFullorder])?;
            execute(&cfg, &ov, &common)
        }
        Cmd::Tune {
            common,
            plant,
            f_bw,
            zeta,
            c,
            l,
            r,
            omega_b,
        } => {
            let Some(plant) = plant else {
                let (cfg, ov) = load(&common, &[Analysis::Tune])?;
                return execute(&cfg, &ov, &common);
            };
            let f = f_bw.expect("required by clap");
            let need = |v: Option<f64>, n: &str| {
                v.ok_or_else(|| dcchain_core::Error::Config(format!("--{n} is required for a {plant} loop")))
            };
            let spec = match plant.as_str() {
                "voltage" => TuningSpec::voltage(f, zeta, need(c, "c")?),
                "current" => TuningSpec::current(f, zeta, need(l, "l")?, r),
                _ => TuningSpec::pll(f, zeta),
            };
            let (kp, ki) = tune(&spec, omega_b)?;
            println!("kp = {kp:.6}\nki = {ki:.6}");
            Ok(())
        }
        Cmd::FigRepro { common, figure } => {
            let (cfg, ov) = load(&common, &[])?;
            let out = cfg_out(&cfg, &common);
            let figs: Vec<Figure> = if figure == "all" {
                Figure::ALL.to_vec()
            } else {
                vec![figure.parse()?]
            };
            for f in figs {
                let rep = fig_repro(f, &cfg, &ov, &out)?;
                report(&rep);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
