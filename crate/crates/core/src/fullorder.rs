//! Switched-average PSU array and DC-DC stage with explicit inner current
//! loops, per-phase diode bridges and a rotating VSI angle. Used to check the
//! reduced chain against a higher-fidelity reference in the time domain.

use serde::{Deserialize, Serialize};

use crate::assembly::{Block, BlockCtx, InitStrategy, SdcibParams, SystemModel, Var};
use crate::dcchain::{load_conductance, DcdcParams, FullOrderParams, PsuParams};
use crate::equilibrium::{solve_default, OperatingPoint};
use crate::frame::{abc_to_uv, uv_to_abc, Vec2};
use crate::paramstore::flatten;
use crate::timedomain::{simulate_from, spectrum, InputSignal, SimOptions, SimStats, SimTrace, Spectrum};
use crate::{Error, PerUnitBase, Result};

const PHASES: [&str; 3] = ["a", "b", "c"];

/// Smoothed diode-bridge sign.
pub fn bridge_sign(v: f64, eps: f64) -> f64 {
    (v / eps).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsuFullState {
    pub i_rec: [f64; 3],
    pub v: [f64; 3],
    pub xi: [f64; 3],
    pub gamma: [f64; 3],
}

impl PsuFullState {
    pub fn from_slice(x: &[f64]) -> Self {
        let t = |k: usize| [x[k], x[k + 1], x[k + 2]];
        PsuFullState {
            i_rec: t(0),
            v: t(3),
            xi: t(6),
            gamma: t(9),
        }
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&self.i_rec);
        out[3..6].copy_from_slice(&self.v);
        out[6..9].copy_from_slice(&self.xi);
        out[9..].copy_from_slice(&self.gamma);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsuFullOutput {
    pub dx: [f64; 12],
    pub duty: [f64; 3],
    /// unclipped duty command
    pub duty_cmd: [f64; 3],
    /// AC-side phase currents drawn from the VSI
    pub i_abc: [f64; 3],
    pub v_mean: f64,
}

/// Per-phase PFC boost: bridge, inductor current loop, bulk capacitor and
/// voltage loop. `i_dc` is the DC current drawn from each phase capacitor.
pub fn psu_full_residuals(
    s: &PsuFullState,
    v_abc: [f64; 3],
    i_dc: f64,
    p: &PsuParams,
    f: &FullOrderParams,
    base: &PerUnitBase,
) -> PsuFullOutput {
    let mut o = PsuFullOutput {
        dx: [0.0; 12],
        duty: [0.0; 3],
        duty_cmd: [0.0; 3],
        i_abc: [0.0; 3],
        v_mean: s.v.iter().sum::<f64>() / 3.0,
    };
    for k in 0..3 {
        let sg = bridge_sign(v_abc[k], f.sign_eps);
        let v_rec = sg * v_abc[k];
        let g = p.kp_v * (p.v_psu_ref - s.v[k]) + p.ki_v * s.xi[k];
        let i_ref = g * v_rec;
        let cmd = f.kp_c_psu * (i_ref - s.i_rec[k]) + f.ki_c_psu * s.gamma[k];
        let d = cmd.clamp(0.0, 1.0);
        o.dx[k] = base.omega_b / f.l_psu * (v_rec - (1.0 - d) * s.v[k] - p.r_psu * s.i_rec[k]);
        o.dx[3 + k] = base.omega_b / p.c_psu * ((1.0 - d) * s.i_rec[k] - i_dc);
        o.dx[6 + k] = p.v_psu_ref - s.v[k];
        o.dx[9 + k] = i_ref - s.i_rec[k];
        o.duty[k] = d;
        o.duty_cmd[k] = cmd;
        o.i_abc[k] = sg * s.i_rec[k];
    }
    o
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcdcFullOutput {
    pub dx: [f64; 4],
    pub i_psu: f64,
    pub duty: f64,
    pub duty_cmd: f64,
}

/// Buck stage with current loop. State (i_eq, v_eq, ξ_eq, γ_eq).
pub fn dcdc_full_residuals(
    x: [f64; 4],
    v_psu: f64,
    p_load: f64,
    p: &DcdcParams,
    f: &FullOrderParams,
    base: &PerUnitBase,
) -> DcdcFullOutput {
    let [i_eq, v_o, xi, gam] = x;
    let g_l = load_conductance(p_load, p.v_eq_ref);
    let i_ref = p.kp_v * (p.v_eq_ref - v_o) + p.ki_v * xi;
    let cmd = f.kp_c_eq * (i_ref - i_eq) + f.ki_c_eq * gam;
    let d = cmd.clamp(0.0, 1.0);
    DcdcFullOutput {
        dx: [
            base.omega_b / f.l_eq * (d * v_psu - v_o),
            base.omega_b / p.c_eq * (i_eq - g_l * v_o),
            p.v_eq_ref - v_o,
            i_ref - i_eq,
        ],
        i_psu: d * i_eq,
        duty: d,
        duty_cmd: cmd,
    }
}

/// Algebraics: i_u, i_v (VSI load current), v_psu (phase mean).
#[derive(Debug, Clone)]
pub struct PsuFullBlock {
    pub params: PsuParams,
    pub full: FullOrderParams,
    pub base: PerUnitBase,
}

impl Block for PsuFullBlock {
    fn name(&self) -> &str {
        "psu"
    }
    fn state_names(&self) -> Vec<String> {
        ["i_rec", "v", "xi", "gamma"]
            .iter()
            .flat_map(|s| PHASES.iter().map(move |p| format!("{s}_{p}")))
            .collect()
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["i_u".into(), "i_v".into(), "v_psu".into()]
    }
    fn input_names(&self) -> Vec<String> {
        vec!["vsi.v_u".into(), "vsi.v_v".into(), "clock.theta".into(), "dcdc.i_psu".into()]
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let s = PsuFullState::from_slice(cx.x);
        let th = cx.u[2];
        let v_abc = uv_to_abc(th, Vec2(cx.u[0], cx.u[1]));
        let o = psu_full_residuals(&s, v_abc, cx.u[3], &self.params, &self.full, &self.base);
        dx.copy_from_slice(&o.dx);
        let i_uv = abc_to_uv(th, o.i_abc);
        g[0] = cx.y[0] - i_uv.0;
        g[1] = cx.y[1] - i_uv.1;
        g[2] = cx.y[2] - o.v_mean;
        Ok(())
    }
}

/// Algebraic: i_psu. w is p_load.
#[derive(Debug, Clone)]
pub struct DcdcFullBlock {
    pub params: DcdcParams,
    pub full: FullOrderParams,
    pub base: PerUnitBase,
}

impl Block for DcdcFullBlock {
    fn name(&self) -> &str {
        "dcdc"
    }
    fn state_names(&self) -> Vec<String> {
        vec!["i_eq".into(), "v_eq".into(), "xi_eq".into(), "gamma_eq".into()]
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["i_psu".into()]
    }
    fn input_names(&self) -> Vec<String> {
        vec!["psu.v_psu".into()]
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let x = [cx.x[0], cx.x[1], cx.x[2], cx.x[3]];
        let o = dcdc_full_residuals(x, cx.u[0], cx.w, &self.params, &self.full, &self.base);
        dx.copy_from_slice(&o.dx);
        g[0] = cx.y[0] - o.i_psu;
        Ok(())
    }
}

/// VSI output angle, dθ/dt = ω_b·ω_vsi.
#[derive(Debug, Clone)]
pub struct ClockBlock {
    pub omega: f64,
    pub base: PerUnitBase,
}

impl Block for ClockBlock {
    fn name(&self) -> &str {
        "clock"
    }
    fn state_names(&self) -> Vec<String> {
        vec!["theta".into()]
    }
    fn algebraic_names(&self) -> Vec<String> {
        Vec::new()
    }
    fn input_names(&self) -> Vec<String> {
        Vec::new()
    }
    fn eval(&self, _cx: &BlockCtx, dx: &mut [f64], _g: &mut [f64]) -> Result<()> {
        dx[0] = self.base.omega_b * self.omega;
        Ok(())
    }
}

/// SDCIB with the PSU array and DC-DC stage replaced by their full-order models.
pub fn build_fullorder(p: &SdcibParams, full: &FullOrderParams) -> Result<SystemModel> {
    validate_full(full)?;
    let c = &p.dcchain;
    let mut params = flatten(p);
    params.extend(flatten(full).into_iter().map(|(k, v)| (format!("full.{k}"), v)));
    p.builder()?
        .without("psu")
        .without("dcdc")
        .block(PsuFullBlock {
            params: c.psu,
            full: *full,
            base: p.base,
        })
        .block(DcdcFullBlock {
            params: c.dcdc,
            full: *full,
            base: p.base,
        })
        .block(ClockBlock {
            omega: c.vsi.omega_vsi,
            base: p.base,
        })
        .parameters(params)
        .init(InitStrategy::Flat)
        .build()
}

fn validate_full(f: &FullOrderParams) -> Result<()> {
    for (n, v) in [
        ("full.l_psu", f.l_psu),
        ("full.l_eq", f.l_eq),
        ("full.sign_eps", f.sign_eps),
        ("full.kp_c_psu", f.kp_c_psu),
        ("full.ki_c_psu", f.ki_c_psu),
        ("full.kp_c_eq", f.kp_c_eq),
        ("full.ki_c_eq", f.ki_c_eq),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(n, "must be > 0"));
        }
    }
    Ok(())
}

/// Start the full-order model from a reduced operating point: shared blocks
/// copied by name, PSU phases at the rectified instantaneous voltage, duty
/// integrators preloaded so both inner loops start at their averaged duty.
pub fn init_from_reduced(
    full_model: &SystemModel,
    reduced: &SystemModel,
    op: &OperatingPoint,
    p: &SdcibParams,
    full: &FullOrderParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = vec![0.0; full_model.n_x()];
    let mut y = vec![0.0; full_model.n_y()];
    let mut set = |name: &str, v: f64| match full_model.index.get(name) {
        Some(Var::X(i)) => x[i] = v,
        Some(Var::Y(i)) => y[i] = v,
        None => {}
    };
    for (k, v) in op.x_named(reduced).into_iter().chain(op.y_named(reduced)) {
        if !k.starts_with("psu.") && !k.starts_with("dcdc.") {
            set(&k, v);
        }
    }
    let get = |n: &str| op.get(reduced, n).ok_or_else(|| Error::UnknownSignal(n.to_string()));
    let ps = &p.dcchain.psu;
    let dc = &p.dcchain.dcdc;
    let v_psu = get("psu.v_psu")?;
    let xi_psu = get("psu.xi_psu")?;
    let g = ps.ki_v * xi_psu;
    let v_abc = uv_to_abc(0.0, Vec2(get("vsi.v_u")?, get("vsi.v_v")?));
    for k in 0..3 {
        let v_rec = bridge_sign(v_abc[k], full.sign_eps) * v_abc[k];
        let i_rec = g * v_rec;
        let d0 = 1.0 - (v_rec - ps.r_psu * i_rec) / v_psu;
        set(&format!("psu.i_rec_{}", PHASES[k]), i_rec);
        set(&format!("psu.v_{}", PHASES[k]), v_psu);
        set(&format!("psu.xi_{}", PHASES[k]), xi_psu);
        set(&format!("psu.gamma_{}", PHASES[k]), d0 / full.ki_c_psu);
    }
    let g_l = load_conductance(op.w0, dc.v_eq_ref);
    let v_eq = get("dcdc.v_eq")?;
    set("dcdc.i_eq", g_l * v_eq);
    set("dcdc.v_eq", v_eq);
    set("dcdc.xi_eq", get("dcdc.xi_eq")?);
    set("dcdc.gamma_eq", (v_eq / v_psu) / full.ki_c_eq);
    set("dcdc.i_psu", v_eq / v_psu * g_l * v_eq);
    set("psu.v_psu", v_psu);
    set("clock.theta", 0.0);
    Ok((x, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationOptions {
    pub p_from: f64,
    pub p_to: f64,
    pub t_step: f64,
    pub t_end: f64,
    pub dt: f64,
    /// compare p_pcc only after this time
    pub t_compare: f64,
    /// spectrum window
    pub window: (f64, f64),
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            p_from: 0.5,
            p_to: 0.6,
            t_step: 0.6,
            t_end: 1.2,
            dt: 50e-6,
            t_compare: 0.3,
            window: (0.1, 0.6),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub t: Vec<f64>,
    pub p_pcc_full: Vec<f64>,
    pub p_pcc_reduced: Vec<f64>,
    pub p_vsi_full: Vec<f64>,
    pub v_psu_a_full: Vec<f64>,
    pub v_psu_reduced: Vec<f64>,
    /// max |Δp_pcc| for t ≥ t_compare
    pub max_dp: f64,
    pub spec_v_psu_full: Spectrum,
    pub spec_v_psu_reduced: Spectrum,
    pub spec_p_vsi_full: Spectrum,
    /// fraction of recorded samples with a PSU or DC-DC duty at a bound
    pub duty_clamped: f64,
    pub stats_full: SimStats,
    pub stats_reduced: SimStats,
}

impl ValidationReport {
    /// 2nd-harmonic line on the phase-a bus, full and reduced.
    pub fn line_v_psu(&self, f_hz: f64) -> (f64, f64) {
        (self.spec_v_psu_full.at(f_hz), self.spec_v_psu_reduced.at(f_hz))
    }

    /// Line at `f_hz` in the VSI power against the median of the spectrum
    /// between 20 Hz and 1 kHz.
    pub fn line_p_vsi(&self, f_hz: f64) -> (f64, f64) {
        let s = &self.spec_p_vsi_full;
        let mut floor: Vec<f64> = s
            .f_hz
            .iter()
            .zip(&s.mag)
            .filter(|(f, _)| **f >= 20.0 && **f <= 1000.0)
            .map(|(_, m)| *m)
            .collect();
        floor.sort_by(f64::total_cmp);
        let med = floor.get(floor.len() / 2).copied().unwrap_or(0.0);
        (s.at(f_hz), med)
    }
}

fn duty_clamped(model: &SystemModel, trace: &SimTrace, p: &SdcibParams, full: &FullOrderParams) -> Result<f64> {
    let col = |n: &str| trace.column(n);
    let mut cols = Vec::new();
    for n in model.index.x_names().iter().filter(|n| n.starts_with("psu.")) {
        cols.push(col(n)?);
    }
    let vu = col("vsi.v_u")?;
    let vv = col("vsi.v_v")?;
    let th = col("clock.theta")?;
    let ipsu = col("dcdc.i_psu")?;
    let v_psu = col("psu.v_psu")?;
    let w = col("w")?;
    let dcx = ["dcdc.i_eq", "dcdc.v_eq", "dcdc.xi_eq", "dcdc.gamma_eq"]
        .iter()
        .map(|n| col(n))
        .collect::<Result<Vec<_>>>()?;
    let mut hits = 0usize;
    for k in 0..trace.len() {
        let xs: Vec<f64> = cols.iter().map(|c| c[k]).collect();
        let s = PsuFullState::from_slice(&xs);
        let v_abc = uv_to_abc(th[k], Vec2(vu[k], vv[k]));
        let o = psu_full_residuals(&s, v_abc, ipsu[k], &p.dcchain.psu, full, &p.base);
        let e = dcdc_full_residuals([dcx[0][k], dcx[1][k], dcx[2][k], dcx[3][k]], v_psu[k], w[k], &p.dcchain.dcdc, full, &p.base);
        let out = |c: f64| !(0.0..=1.0).contains(&c);
        if o.duty_cmd.iter().any(|&c| out(c)) || out(e.duty_cmd) {
            hits += 1;
        }
    }
    Ok(hits as f64 / trace.len().max(1) as f64)
}

/// Simulate both models through the same load step and compare.
pub fn validate_reduction(p: &SdcibParams, full: &FullOrderParams, o: &ValidationOptions) -> Result<ValidationReport> {
    if !(o.t_compare < o.t_end) || !(o.window.1 <= o.t_end) {
        return Err(Error::param("validation", "t_compare and window must lie inside [0, t_end]"));
    }
    let reduced = p.builder()?.build()?;
    let op = solve_default(&reduced, o.p_from)?;
    let fm = build_fullorder(p, full)?;
    let (x0, y0) = init_from_reduced(&fm, &reduced, &op, p, full)?;
    let input = InputSignal::Step {
        t0: o.t_step,
        from: o.p_from,
        to: o.p_to,
    };
    let opts = SimOptions::new(o.t_end, o.dt);
    let (tf, tr) = std::thread::scope(|s| {
        let a = s.spawn(|| simulate_from(&fm, &x0, &y0, &input, &opts));
        let b = s.spawn(|| simulate_from(&reduced, &op.x0, &op.y0, &input, &opts));
        (a.join().expect("full-order worker"), b.join().expect("reduced worker"))
    });
    let (tf, tr) = (tf?, tr?);
    let pf = tf.column("p_pcc")?.to_vec();
    let pr = tr.column("p_pcc")?.to_vec();
    let max_dp = tf
        .t
        .iter()
        .zip(pf.iter().zip(&pr))
        .filter(|(t, _)| **t >= o.t_compare)
        .map(|(_, (a, b))| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ValidationReport {
        spec_v_psu_full: spectrum(&tf, "psu.v_a", o.window, Some(120.0))?,
        spec_v_psu_reduced: spectrum(&tr, "psu.v_psu", o.window, Some(120.0))?,
        spec_p_vsi_full: spectrum(&tf, "p_vsi", o.window, Some(360.0))?,
        duty_clamped: duty_clamped(&fm, &tf, p, full)?,
        p_vsi_full: tf.column("p_vsi")?.to_vec(),
        v_psu_a_full: tf.column("psu.v_a")?.to_vec(),
        v_psu_reduced: tr.column("psu.v_psu")?.to_vec(),
        t: tf.t.clone(),
        p_pcc_full: pf,
        p_pcc_reduced: pr,
        max_dp,
        stats_full: tf.stats,
        stats_reduced: tr.stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dcdc_equilibrium_duty() {
        let p = DcdcParams {
            c_eq: 1.0,
            v_eq_ref: 0.5,
            kp_v: 1.0,
            ki_v: 10.0,
        };
        let f = FullOrderParams::default();
        let g_l = load_conductance(0.5, 0.5);
        let x = [g_l * 0.5, 0.5, g_l * 0.5 / 10.0, 0.5 / f.ki_c_eq];
        let o = dcdc_full_residuals(x, 1.0, 0.5, &p, &f, &PerUnitBase::default());
        assert!((o.duty - 0.5).abs() < 1e-12);
        assert!(o.dx.iter().all(|d| d.abs() < 1e-9), "{:?}", o.dx);
    }

    #[test]
    fn bridge_sign_limits() {
        assert!((bridge_sign(0.1, 1e-3) - 1.0).abs() < 1e-12);
        assert!((bridge_sign(-0.1, 1e-3) + 1.0).abs() < 1e-12);
        assert_eq!(bridge_sign(0.0, 1e-3), 0.0);
    }
}
