use std::path::Path;
use std::str::FromStr;

use toml::Value;

use super::config::{ModelParams, ScenarioConfig, SweepFamily, Topology};
use super::runner::{
    modes_table, poa_tables, spectrum_table, sweep_family, sweep_tables, write_validation, RunReport,
};
use super::{fmt9, Table};
use crate::equilibrium::solve_default;
use crate::fullorder::validate_reduction;
use crate::smallsignal::{linearize, log_grid, modal_analysis, multiport_poa, poa_default, sweep, transfer};
use crate::timedomain::{simulate, spectrum, InputSignal, SimOptions};
use crate::workload::{ingest_csv, resample, synthetic_trace};
use crate::{Context, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig9,
    Fig10,
    Fig11,
}

impl Figure {
    pub const ALL: [Figure; 7] = [
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
        Figure::Fig7,
        Figure::Fig9,
        Figure::Fig10,
        Figure::Fig11,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig9 => "fig9",
            Figure::Fig10 => "fig10",
            Figure::Fig11 => "fig11",
        }
    }

    fn topology(self) -> Topology {
        match self {
            Figure::Fig9 | Figure::Fig10 | Figure::Fig11 => Topology::Ninebus,
            _ => Topology::Sdcib,
        }
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure `{s}` (expected one of fig4, fig5, fig6, fig7, fig9, fig10, fig11)")))
    }
}

/// Switch times of the three-frequency sine recipe: 0.5, 1 and 2 × f_peak.
pub const SINE_SWITCHES: [f64; 3] = [1.0, 6.0, 11.0];
pub const SINE_T_END: f64 = 16.0;
pub const SINE_AMPLITUDE: f64 = 0.05;

/// Load trace for the GPU-workload figures: the configured trace if any,
/// otherwise a deterministic synthetic 100 s trace at 100 ms.
fn workload_input(cfg: &ScenarioConfig, p_load: f64, dt: f64) -> Result<(InputSignal, f64)> {
    let tr = match &cfg.options.trace {
        Some(t) => ingest_csv(&t.path, &t.scaling).context("workload::ingest_csv")?,
        None => synthetic_trace(100.0, 0.1, p_load, 7)?,
    };
    let t_end = tr.duration();
    Ok((resample(&tr, dt)?, t_end))
}

/// The model is rebuilt at the first trace sample so the run starts from an
/// equilibrium (the nine-bus dispatch depends on the load).
fn workload_run(
    rep: &mut RunReport,
    cfg: &ScenarioConfig,
    extra: &[(String, Value)],
    p_load: f64,
    prefix: &str,
    signals: &[&str],
) -> Result<()> {
    let dt = 1e-3;
    let (input, t_end) = workload_input(cfg, p_load, dt)?;
    let w_start = input.value(0.0);
    let mut ov = extra.to_vec();
    ov.push(("p_load".into(), Value::Float(w_start)));
    let model = &cfg.resolve(&ov)?.build().context("assembly::build")?;
    let op = solve_default(model, w_start).context("equilibrium::solve")?;
    let mut so = SimOptions::new(t_end, dt);
    so.record_stride = 10;
    let tr = simulate(model, &op, &input, &so).context("timedomain::simulate")?;
    let mut cols: Vec<&[f64]> = vec![&tr.t, tr.column("w")?];
    for s in signals {
        cols.push(tr.column(s)?);
    }
    let mut header = vec!["t".to_string(), "p_load".to_string()];
    header.extend(signals.iter().map(|s| s.to_string()));
    rep.table(&format!("{prefix}_trace.csv"), &Table::from_columns(header.clone(), &cols))?;

    let win = (0.5 * t_end, t_end);
    let mut names = vec!["w".to_string()];
    names.extend(signals.iter().map(|s| s.to_string()));
    let specs = names
        .iter()
        .map(|n| spectrum(&tr, n, win, None))
        .collect::<Result<Vec<_>>>()
        .context("timedomain::spectrum")?;
    let lin = linearize(model, &op).context("smallsignal::linearize")?;
    let mut gains: Vec<Vec<f64>> = vec![Vec::new(); lin.c.nrows()];
    for &f in &specs[0].f_hz {
        let g = transfer(&lin, f.max(1e-6)).unwrap_or_default();
        for (k, col) in gains.iter_mut().enumerate() {
            col.push(g.get(k).map(|z| z.norm()).unwrap_or(f64::NAN));
        }
    }
    let mut t = spectrum_table(&header[1..], &specs);
    for (k, name) in lin.outputs.iter().enumerate() {
        t.header.push(format!("poa_{name}"));
        for (row, g) in t.rows.iter_mut().zip(&gains[k]) {
            row.push(fmt9(*g));
        }
    }
    rep.table(&format!("{prefix}_spectrum.csv"), &t)?;
    Ok(())
}

/// Data series behind one figure, written as CSV into `out`.
pub fn fig_repro(fig: Figure, cfg: &ScenarioConfig, extra: &[(String, Value)], out: &Path) -> Result<RunReport> {
    let mut cfg = cfg.clone();
    cfg.topology = fig.topology();
    let res = cfg.resolve(extra)?;
    let mut rep = RunReport::new(out);
    std::fs::create_dir_all(out)?;
    let model = res.build().context("assembly::build")?;
    let w0 = res.p_load();
    let grid = cfg.options.poa.grid()?;
    match (fig, &res.model) {
        (Figure::Fig4, ModelParams::Sdcib(p)) => {
            let v = validate_reduction(p, &res.full, &cfg.options.validate).context("fullorder::validate_reduction")?;
            write_validation(&mut rep, &v, "fig4")?;
        }
        (Figure::Fig5, ModelParams::Sdcib(p)) => {
            for fam in [SweepFamily::VsiBandwidth, SweepFamily::Load, SweepFamily::Scr] {
                let r = sweep(sweep_family(fam, p), &fam.default_values(), 6, 0, &grid)
                    .context(&format!("smallsignal::sweep({})", fam.name()))?;
                let (m, c) = sweep_tables(&r);
                rep.table(&format!("fig5_{}.csv", fam.name()), &m)?;
                rep.table(&format!("fig5_{}_poa.csv", fam.name()), &c)?;
                rep.tracking_warnings(&format!("fig5_{}_warnings.txt", fam.name()), &r.warnings)?;
            }
        }
        (Figure::Fig6, ModelParams::Sdcib(_)) => {
            let op = solve_default(&model, w0).context("equilibrium::solve")?;
            let lin = linearize(&model, &op).context("smallsignal::linearize")?;
            let c = poa_default(&lin).context("smallsignal::poa")?;
            let (curve, peaks) = poa_tables(&c);
            rep.table("fig6a_poa.csv", &curve)?;
            rep.table("fig6a_peaks.csv", &peaks)?;
            let fp = c.peaks[0].f_hz;
            let input = InputSignal::Sine {
                base: w0,
                amplitude: SINE_AMPLITUDE,
                segments: vec![
                    (SINE_SWITCHES[0], 0.5 * fp),
                    (SINE_SWITCHES[1], fp),
                    (SINE_SWITCHES[2], 2.0 * fp),
                ],
            };
            let tr = simulate(&model, &op, &input, &SimOptions::reduced(SINE_T_END)).context("timedomain::simulate")?;
            let p0 = op.outputs(&model)[0];
            let w = tr.column("w")?;
            let p = tr.column("p_pcc")?;
            let dw: Vec<f64> = w.iter().map(|v| v - w0).collect();
            let dp: Vec<f64> = p.iter().map(|v| v - p0).collect();
            rep.table(
                "fig6b_trace.csv",
                &Table::from_columns(
                    ["t", "p_load", "p_pcc", "dp_load", "dp_pcc"].iter().map(|s| s.to_string()).collect(),
                    &[&tr.t, w, p, &dw, &dp],
                ),
            )?;
            rep.lines.push(format!("fig6: f_peak = {fp:.4} Hz"));
        }
        (Figure::Fig7, ModelParams::Sdcib(_)) => {
            workload_run(&mut rep, &cfg, extra, w0, "fig7", &["p_pcc"])?;
        }
        (Figure::Fig9, ModelParams::NineBus(_)) => {
            let op = solve_default(&model, w0).context("equilibrium::solve")?;
            let lin = linearize(&model, &op).context("smallsignal::linearize")?;
            let r = modal_analysis(&lin).context("smallsignal::modal_analysis")?;
            let dc = lin.channel("p_dc").unwrap_or(0);
            rep.table("fig9_modes.csv", &modes_table(&r, dc))?;
            let mut t = Table::new(std::iter::once("mode".to_string()).chain(r.outputs.iter().map(|o| format!("residue_{o}"))));
            for (k, m) in r.modes.iter().enumerate() {
                let mut row = vec![m.index.to_string()];
                row.extend((0..r.outputs.len()).map(|j| fmt9(r.residues[(j, k)].norm())));
                t.push(row);
            }
            rep.table("fig9_residues.csv", &t)?;
        }
        (Figure::Fig10, ModelParams::NineBus(_)) => {
            let op = solve_default(&model, w0).context("equilibrium::solve")?;
            let lin = linearize(&model, &op).context("smallsignal::linearize")?;
            let c = multiport_poa(&lin, &log_grid(0.01, 1000.0, 400)).context("smallsignal::poa")?;
            let (curve, peaks) = poa_tables(&c);
            rep.table("fig10_poa.csv", &curve)?;
            rep.table("fig10_peaks.csv", &peaks)?;
        }
        (Figure::Fig11, ModelParams::NineBus(_)) => {
            workload_run(&mut rep, &cfg, extra, w0, "fig11", &["p_sm", "p_gfm", "p_gfl", "p_dc"])?;
        }
        _ => unreachable!("topology is set from the figure"),
    }
    Ok(rep)
}
