use std::path::{Path, PathBuf};

use toml::Value;

use super::config::{Analysis, ModelParams, Resolved, ScenarioConfig, SweepFamily, TraceOptions};
use super::{atomic_write, fmt9, Table};
use crate::assembly::{build_sdcib, SdcibParams, SystemModel};
use crate::equilibrium::{solve_equilibrium, OperatingPoint};
use crate::fullorder::{validate_reduction, ValidationReport};
use crate::smallsignal::{linearize, modal_analysis, multiport_poa, sweep, LinearModel, ModalReport, PoaCurve, SweepResult, FdStep, GY_RCOND_MIN};
use crate::timedomain::{simulate, spectrum, InputSignal, SimOptions, SimTrace, Spectrum};
use crate::tuning::{reference_loops, tune, Plant, TuningSpec};
use crate::workload::{ingest_csv, resample};
use crate::{Context, Error, Result};

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub out_dir: PathBuf,
    /// written files, in order
    pub artifacts: Vec<PathBuf>,
    /// one-line summaries and warnings
    pub lines: Vec<String>,
}

impl RunReport {
    pub(crate) fn new(out: &Path) -> Self {
        RunReport {
            out_dir: out.to_path_buf(),
            ..Default::default()
        }
    }

    pub(crate) fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let p = self.out_dir.join(name);
        t.write(&p)?;
        self.artifacts.push(p);
        Ok(())
    }

    pub(crate) fn text(&mut self, name: &str, s: &str) -> Result<()> {
        let p = self.out_dir.join(name);
        atomic_write(&p, s.as_bytes())?;
        self.artifacts.push(p);
        Ok(())
    }

    /// Sweep tracking warnings go to a file; the console gets the count.
    pub(crate) fn tracking_warnings(&mut self, name: &str, w: &[String]) -> Result<()> {
        if w.is_empty() {
            return Ok(());
        }
        self.text(name, &(w.join("\n") + "\n"))?;
        self.lines.push(format!("warning: {} ambiguous tracking steps, see {name}", w.len()));
        Ok(())
    }
}

fn num(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("input: `{s}` is not a number ({what})")))
}

/// Input spec relative to the operating-point load `p0`:
/// `constant[:v]`, `step:t0:to`, `step:t0:from:to`, `sine:amp:f`,
/// `sine:amp:t1=f1,t2=f2,...`, `trace` (uses `trace` options) or `trace:path`.
pub fn parse_input(s: &str, p0: f64, trace: Option<&TraceOptions>, dt: f64) -> Result<InputSignal> {
    let parts: Vec<&str> = s.split(':').collect();
    let sig = match parts.as_slice() {
        ["constant"] => InputSignal::Constant(p0),
        ["constant", v] => InputSignal::Constant(num(v, "level")?),
        ["step", t0, to] => InputSignal::Step {
            t0: num(t0, "step time")?,
            from: p0,
            to: num(to, "final level")?,
        },
        ["step", t0, from, to] => InputSignal::Step {
            t0: num(t0, "step time")?,
            from: num(from, "initial level")?,
            to: num(to, "final level")?,
        },
        ["sine", amp, freqs] => {
            let amplitude = num(amp, "amplitude")?;
            let segments = if freqs.contains('=') {
                freqs
                    .split(',')
                    .map(|seg| {
                        let (t, f) = seg
                            .split_once('=')
                            .ok_or_else(|| Error::Config(format!("input: segment `{seg}` is not t=f")))?;
                        Ok((num(t, "switch time")?, num(f, "frequency")?))
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                vec![(0.0, num(freqs, "frequency")?)]
            };
            InputSignal::Sine {
                base: p0,
                amplitude,
                segments,
            }
        }
        ["trace"] => {
            let t = trace.ok_or_else(|| Error::Config("input `trace` needs [options.trace] with a path".into()))?;
            let tr = ingest_csv(&t.path, &t.scaling).context("workload::ingest_csv")?;
            resample(&tr, t.dt.unwrap_or(dt))?
        }
        ["trace", rest @ ..] => {
            let path = PathBuf::from(rest.join(":"));
            let scaling = trace.map(|t| t.scaling).unwrap_or_default();
            let tr = ingest_csv(&path, &scaling).context("workload::ingest_csv")?;
            resample(&tr, trace.and_then(|t| t.dt).unwrap_or(dt))?
        }
        _ => return Err(Error::Config(format!("input: cannot parse `{s}`"))),
    };
    sig.validate()?;
    Ok(sig)
}

/// Model family for a sensitivity sweep around `base`.
pub fn sweep_family(family: SweepFamily, base: &SdcibParams) -> impl Fn(f64) -> Result<(SystemModel, f64)> + Sync + '_ {
    move |v| {
        let mut p = *base;
        match family {
            SweepFamily::VsiBandwidth => p.dcchain = p.dcchain.with_vsi_voltage_bandwidth(v, &p.base)?,
            SweepFamily::Load => p.p_load = v,
            SweepFamily::Scr => p.grid = p.grid.with_scr(v),
        }
        Ok((build_sdcib(&p)?, p.p_load))
    }
}

pub(crate) fn operating_point_text(model: &SystemModel, op: &OperatingPoint) -> String {
    let mut s = String::new();
    s.push_str(&format!("model = \"{}\"\n", model.name));
    s.push_str(&format!("p_load = {}\n", fmt9(op.w0)));
    s.push_str(&format!("iterations = {}\n", op.iterations));
    s.push_str(&format!("f_norm = {}\n", fmt9(op.f_norm)));
    s.push_str(&format!("g_norm = {}\n", fmt9(op.g_norm)));
    s.push_str(&format!("tol = {}\n", fmt9(op.tol)));
    let section = |s: &mut String, title: &str, items: Vec<(String, f64)>| {
        s.push_str(&format!("\n[{title}]\n"));
        for (k, v) in items {
            s.push_str(&format!("\"{k}\" = {}\n", fmt9(v)));
        }
    };
    section(&mut s, "states", op.x_named(model));
    section(&mut s, "algebraics", op.y_named(model));
    let outs = model
        .outputs
        .iter()
        .map(|o| o.name.clone())
        .zip(op.outputs(model))
        .collect();
    section(&mut s, "outputs", outs);
    s
}

pub(crate) fn modes_table(report: &ModalReport, channel: usize) -> Table {
    let mut t = Table::new([
        "mode", "re", "im", "f_hz", "damping", "residue", "state_1", "participation_1", "state_2",
        "participation_2", "state_3", "participation_3",
    ]);
    for (k, m) in report.modes.iter().enumerate() {
        let res = if channel < report.residues.nrows() {
            report.residues[(channel, k)].norm()
        } else {
            f64::NAN
        };
        let mut row = vec![
            m.index.to_string(),
            fmt9(m.lambda.re),
            fmt9(m.lambda.im),
            fmt9(m.freq_hz),
            fmt9(m.damping),
            fmt9(res),
        ];
        for j in 0..3 {
            match m.ranked.get(j) {
                Some((n, p)) => {
                    row.push(n.clone());
                    row.push(fmt9(*p));
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        t.push(row);
    }
    t
}

pub(crate) fn poa_tables(c: &PoaCurve) -> (Table, Table) {
    let mut header = vec!["f_hz".to_string()];
    header.extend(c.channels.iter().cloned());
    let mut cols: Vec<&[f64]> = vec![&c.f_hz];
    cols.extend(c.mag.iter().map(|m| m.as_slice()));
    let curve = Table::from_columns(header, &cols);
    let mut peaks = Table::new(["channel", "f_hz", "mag"]);
    for (ch, p) in c.channels.iter().zip(&c.peaks) {
        peaks.push(vec![ch.clone(), fmt9(p.f_hz), fmt9(p.mag)]);
    }
    (curve, peaks)
}

pub(crate) fn trace_table(tr: &SimTrace, only: Option<&[&str]>) -> Result<Table> {
    let names: Vec<String> = match only {
        Some(list) => list.iter().map(|s| s.to_string()).collect(),
        None => tr.names.clone(),
    };
    let mut cols: Vec<&[f64]> = vec![&tr.t];
    for n in &names {
        cols.push(tr.column(n)?);
    }
    let mut header = vec!["t".to_string()];
    header.extend(names);
    Ok(Table::from_columns(header, &cols))
}

pub(crate) fn spectrum_table(names: &[String], specs: &[Spectrum]) -> Table {
    let mut header = vec!["f_hz".to_string()];
    header.extend(names.iter().cloned());
    let mut cols: Vec<&[f64]> = vec![&specs[0].f_hz];
    cols.extend(specs.iter().map(|s| s.mag.as_slice()));
    Table::from_columns(header, &cols)
}

/// Long-form mode trajectories and the POA family of a sweep.
pub(crate) fn sweep_tables(res: &SweepResult) -> (Table, Table) {
    let mut modes = Table::new(["value", "mode_id", "mode", "re", "im", "f_hz", "damping"]);
    for &id in &res.top {
        for (p, &k) in res.points.iter().zip(&res.track[id]) {
            let m = &p.report.modes[k];
            modes.push(vec![
                fmt9(p.value),
                (id + 1).to_string(),
                m.index.to_string(),
                fmt9(m.lambda.re),
                fmt9(m.lambda.im),
                fmt9(m.freq_hz),
                fmt9(m.damping),
            ]);
        }
    }
    let mut header = vec!["f_hz".to_string()];
    header.extend(res.points.iter().map(|p| format!("poa@{}", p.value)));
    let f = &res.points[0].poa.f_hz;
    let mut cols: Vec<&[f64]> = vec![f];
    cols.extend(res.points.iter().map(|p| p.poa.mag[0].as_slice()));
    (modes, Table::from_columns(header, &cols))
}

pub(crate) fn write_validation(rep: &mut RunReport, v: &ValidationReport, prefix: &str) -> Result<()> {
    let tr = Table::from_columns(
        ["t", "p_pcc_full", "p_pcc_reduced", "p_vsi_full", "v_psu_a_full", "v_psu_reduced"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        &[&v.t, &v.p_pcc_full, &v.p_pcc_reduced, &v.p_vsi_full, &v.v_psu_a_full, &v.v_psu_reduced],
    );
    rep.table(&format!("{prefix}_trace.csv"), &tr)?;
    let sp = spectrum_table(
        &["v_psu_a_full".into(), "v_psu_reduced".into(), "p_vsi_full".into()],
        &[v.spec_v_psu_full.clone(), v.spec_v_psu_reduced.clone(), v.spec_p_vsi_full.clone()],
    );
    rep.table(&format!("{prefix}_spectrum.csv"), &sp)?;
    let (l120, r120) = v.line_v_psu(120.0);
    let (l360, floor) = v.line_p_vsi(360.0);
    let s = format!(
        "max_dp_pcc = {}\nv_psu_120hz_full = {}\nv_psu_120hz_reduced = {}\np_vsi_360hz_full = {}\np_vsi_median_floor = {}\nduty_clamped_fraction = {}\nfull_steps = {}\nfull_jacobian_updates = {}\nfull_halvings = {}\n",
        fmt9(v.max_dp),
        fmt9(l120),
        fmt9(r120),
        fmt9(l360),
        fmt9(floor),
        fmt9(v.duty_clamped),
        v.stats_full.steps,
        v.stats_full.jacobian_updates,
        v.stats_full.halvings,
    );
    rep.text(&format!("{prefix}_summary.txt"), &s)?;
    rep.lines.push(format!(
        "full-order check: max |dp_pcc| = {:.3e}, 120 Hz v_psu line {:.3e} (reduced {:.3e}), 360 Hz p_vsi line {:.3e}",
        v.max_dp, l120, r120, l360
    ));
    Ok(())
}

fn plant_name(p: &Plant) -> &'static str {
    match p {
        Plant::Voltage { .. } => "voltage",
        Plant::Current { .. } => "current",
        Plant::Pll => "pll",
    }
}

pub(crate) fn tune_table(res: &Resolved, extra: &[(String, TuningSpec)]) -> Result<Table> {
    let (dc, base) = match &res.model {
        ModelParams::Sdcib(p) => (p.dcchain, p.base),
        ModelParams::NineBus(p) => (p.dcchain, p.base),
    };
    let mut t = Table::new(["loop", "plant", "f_bw", "zeta", "kp", "ki", "kp_set", "ki_set"]);
    for l in reference_loops(&dc, &res.full) {
        let (kp, ki) = tune(&l.spec, base.omega_b).context(&format!("tuning::tune({})", l.name))?;
        t.push(vec![
            l.name.to_string(),
            plant_name(&l.spec.plant).into(),
            fmt9(l.spec.f_bw),
            fmt9(l.spec.zeta),
            fmt9(kp),
            fmt9(ki),
            fmt9(l.kp),
            fmt9(l.ki),
        ]);
    }
    for (name, spec) in extra {
        let (kp, ki) = tune(spec, base.omega_b).context(&format!("tuning::tune({name})"))?;
        t.push(vec![
            name.clone(),
            plant_name(&spec.plant).into(),
            fmt9(spec.f_bw),
            fmt9(spec.zeta),
            fmt9(kp),
            fmt9(ki),
            String::new(),
            String::new(),
        ]);
    }
    Ok(t)
}

fn manifest(cfg: &ScenarioConfig, res: &Resolved, todo: &[Analysis], rep: &RunReport) -> Result<String> {
    let cfg_err = |e: toml::ser::Error| Error::Config(e.to_string());
    let mut run = toml::Table::new();
    run.insert("tool".into(), Value::String("dcchain".into()));
    run.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    run.insert(
        "topology".into(),
        Value::String(match res.model {
            ModelParams::Sdcib(_) => "sdcib".into(),
            ModelParams::NineBus(_) => "ninebus".into(),
        }),
    );
    run.insert(
        "analyses".into(),
        Value::Array(todo.iter().map(|a| Value::String(a.name().into())).collect()),
    );
    let mut files: Vec<Value> = rep
        .artifacts
        .iter()
        .filter_map(|p| p.file_name().and_then(|n| n.to_str()))
        .map(|n| Value::String(n.into()))
        .collect();
    files.push(Value::String("run_manifest.toml".into()));
    run.insert("artifacts".into(), Value::Array(files));

    let fd = FdStep::default();
    let mut tol = toml::Table::new();
    for (k, v) in [
        ("equilibrium_tol", cfg.options.equilibrium.tol),
        ("fd_rel", fd.rel),
        ("fd_abs", fd.abs),
        ("gy_rcond_min", GY_RCOND_MIN),
        ("newton_step_tol", SimOptions::new(1.0, 1.0).tol),
        ("algebraic_residual_max", 1e-8),
    ] {
        tol.insert(k.into(), Value::Float(v));
    }
    tol.insert(
        "equilibrium_max_iter".into(),
        Value::Integer(cfg.options.equilibrium.max_iter as i64),
    );

    let mut root = toml::Table::new();
    root.insert("run".into(), Value::Table(run));
    root.insert("tolerances".into(), Value::Table(tol));
    root.insert(
        "overrides".into(),
        Value::Table(res.overrides.iter().cloned().collect()),
    );
    root.insert(
        "options".into(),
        Value::try_from(&cfg.options).map_err(cfg_err)?,
    );
    root.insert("parameters".into(), Value::Table(res.parameter_tree()?));
    toml::to_string(&root).map_err(cfg_err)
}

/// Execute the requested analyses in dependency order and write artifacts
/// plus `run_manifest.toml` into `out`.
pub fn run(cfg: &ScenarioConfig, res: &Resolved, out: &Path) -> Result<RunReport> {
    let mut todo = cfg.analyses.clone();
    if todo.contains(&Analysis::Spectrum) {
        todo.push(Analysis::Simulate);
    }
    if todo
        .iter()
        .any(|a| matches!(a, Analysis::Modes | Analysis::Poa | Analysis::Simulate))
    {
        todo.push(Analysis::Equilibrium);
    }
    todo.sort();
    todo.dedup();
    let mut rep = RunReport::new(out);
    std::fs::create_dir_all(out)?;

    let model = res.build().context("assembly::build")?;
    let w0 = res.p_load();
    let o = &cfg.options;
    let mut op: Option<OperatingPoint> = None;
    let mut lin: Option<LinearModel> = None;
    let mut trace: Option<SimTrace> = None;

    let linear = |op: &OperatingPoint| linearize(&model, op).context("smallsignal::linearize");

    for a in &todo {
        match a {
            Analysis::Equilibrium => {
                let p = solve_equilibrium(&model, w0, o.equilibrium.tol, o.equilibrium.max_iter)
                    .context("equilibrium::solve")?;
                rep.text("operating_point.txt", &operating_point_text(&model, &p))?;
                rep.lines.push(format!(
                    "equilibrium: {} iterations, |f| = {:.3e}, |g| = {:.3e}",
                    p.iterations, p.f_norm, p.g_norm
                ));
                op = Some(p);
            }
            Analysis::Modes => {
                let l = linear(op.as_ref().expect("ordered"))?;
                let r = modal_analysis(&l).context("smallsignal::modal_analysis")?;
                rep.table("modes.csv", &modes_table(&r, 0))?;
                rep.lines.push(format!(
                    "modes: {} (eigen residual {:.2e})",
                    r.n(),
                    r.eigen_residual(&l.a)
                ));
                rep.lines.extend(r.warnings.iter().map(|w| format!("warning: {w}")));
                lin = Some(l);
            }
            Analysis::Poa => {
                if lin.is_none() {
                    lin = Some(linear(op.as_ref().expect("ordered"))?);
                }
                let c = multiport_poa(lin.as_ref().expect("set"), &o.poa.grid()?).context("smallsignal::poa")?;
                let (curve, peaks) = poa_tables(&c);
                rep.table("poa.csv", &curve)?;
                rep.table("poa_peaks.csv", &peaks)?;
                for (ch, p) in c.channels.iter().zip(&c.peaks) {
                    rep.lines.push(format!("poa peak {ch}: {:.4} Hz, |G| = {:.4}", p.f_hz, p.mag));
                }
                if !c.flagged.is_empty() {
                    rep.lines.push(format!("warning: POA grid hit poles at {:?} Hz", c.flagged));
                }
            }
            Analysis::Simulate => {
                let s = &o.simulate;
                let dt = s.dt.unwrap_or(1e-3);
                let input = parse_input(&s.input, w0, o.trace.as_ref(), dt)?;
                let mut so = SimOptions::new(s.t_end, dt);
                so.record_stride = s.record_stride.max(1);
                let tr = simulate(&model, op.as_ref().expect("ordered"), &input, &so).context("timedomain::simulate")?;
                rep.table("trace.csv", &trace_table(&tr, None)?)?;
                rep.lines.push(format!(
                    "simulate: {} steps, {} Jacobian updates, {} halvings",
                    tr.stats.steps, tr.stats.jacobian_updates, tr.stats.halvings
                ));
                trace = Some(tr);
            }
            Analysis::Spectrum => {
                let tr = trace.as_ref().expect("ordered");
                let t_end = tr.t[tr.len() - 1];
                let win = o.spectrum.window.map(|w| (w[0], w[1])).unwrap_or((0.5 * t_end, t_end));
                let names: Vec<String> = if o.spectrum.signals.is_empty() {
                    std::iter::once("w".to_string())
                        .chain(model.outputs.iter().map(|c| c.name.clone()))
                        .collect()
                } else {
                    o.spectrum.signals.clone()
                };
                let specs = names
                    .iter()
                    .map(|n| spectrum(tr, n, win, o.spectrum.f_min))
                    .collect::<Result<Vec<_>>>()
                    .context("timedomain::spectrum")?;
                for s in &specs {
                    rep.lines.extend(s.warnings.iter().map(|w| format!("warning: {w}")));
                }
                rep.table("spectrum.csv", &spectrum_table(&names, &specs))?;
            }
            Analysis::Sweep => {
                let base = res
                    .sdcib()
                    .ok_or_else(|| Error::Config("sweep is defined for the sdcib topology".into()))?;
                let fam = o.sweep.family;
                let values = o.sweep.values.clone().unwrap_or_else(|| fam.default_values());
                let r = sweep(sweep_family(fam, base), &values, o.sweep.top_k, 0, &o.poa.grid()?)
                    .context("smallsignal::sweep")?;
                let (m, p) = sweep_tables(&r);
                rep.table(&format!("sweep_{}.csv", fam.name()), &m)?;
                rep.table(&format!("sweep_{}_poa.csv", fam.name()), &p)?;
                rep.tracking_warnings(&format!("sweep_{}_warnings.txt", fam.name()), &r.warnings)?;
                rep.lines.push(format!("sweep {}: {} points", fam.name(), r.points.len()));
            }
            Analysis::ValidateFullorder => {
                let base = res
                    .sdcib()
                    .ok_or_else(|| Error::Config("validate-fullorder is defined for the sdcib topology".into()))?;
                let v = validate_reduction(base, &res.full, &o.validate).context("fullorder::validate_reduction")?;
                write_validation(&mut rep, &v, "fullorder")?;
            }
            Analysis::Tune => {
                let extra: Vec<(String, TuningSpec)> = o.tune.iter().map(|l| (l.name.clone(), l.spec)).collect();
                rep.table("tune.csv", &tune_table(res, &extra)?)?;
            }
        }
    }
    let m = manifest(cfg, res, &todo, &rep)?;
    rep.text("run_manifest.toml", &m)?;
    Ok(rep)
}
