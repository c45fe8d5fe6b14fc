use serde::{Deserialize, Serialize};

use crate::assembly::{Block, BlockCtx};
use crate::frame::{jmul, rotate, rotate_back, FrameAngle, Vec2};
use crate::{PerUnitBase, Result};

/// Which filter-voltage component the PLL drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GflPllAxis {
    /// Voltage locked on +q (PLL error −v_d); matches the current-reference layout.
    QAxis,
    /// Voltage locked on d (PLL error v_q), literal form; destabilizes the power loops.
    DAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GflParams {
    pub l_f: f64,
    pub r_f: f64,
    pub c_f: f64,
    pub l_g: f64,
    pub r_g: f64,
    pub kp_pll: f64,
    pub ki_pll: f64,
    pub omega_lp: f64,
    pub kp_p: f64,
    pub ki_p: f64,
    pub kp_q: f64,
    pub ki_q: f64,
    pub omega_z: f64,
    pub omega_f: f64,
    pub kp_c: f64,
    pub ki_c: f64,
    pub pll_axis: GflPllAxis,
}

impl Default for GflParams {
    fn default() -> Self {
        GflParams {
            l_f: 0.08,
            r_f: 0.003,
            c_f: 0.074,
            l_g: 0.1,
            r_g: 0.01,
            kp_pll: 0.05,
            ki_pll: 1.42,
            omega_lp: 376.99,
            kp_p: 0.01,
            ki_p: 0.12,
            kp_q: 0.01,
            ki_q: 0.12,
            omega_z: 41.47,
            omega_f: 41.47,
            kp_c: 0.15,
            ki_c: 0.267,
            pll_axis: GflPllAxis::QAxis,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GflSetpoints {
    pub p_ref: f64,
    pub q_ref: f64,
}

pub const GFL_STATES: [&str; 15] = [
    "theta_pll", "vq_pll", "epsilon", "sigma_p", "p_m", "sigma_q", "q_m", "gamma_d", "gamma_q",
    "i_cv_d", "i_cv_q", "v_f_d", "v_f_q", "i_g_d", "i_g_q",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GflOutput {
    pub dx: [f64; 15],
    pub i_ri: Vec2,
    pub omega_pll: f64,
    pub i_ref: Vec2,
    pub p: f64,
    pub q: f64,
}

/// Power-loop current reference: d from the reactive loop, q from the active loop.
pub fn current_reference(p: &GflParams, sp: &GflSetpoints, p_m: f64, q_m: f64, sigma_p: f64, sigma_q: f64) -> Vec2 {
    Vec2(
        p.kp_q * (sp.q_ref - q_m) + p.ki_q * sigma_q,
        p.kp_p * (sp.p_ref - p_m) + p.ki_p * sigma_p,
    )
}

fn pll_error(p: &GflParams, vf: Vec2) -> f64 {
    match p.pll_axis {
        GflPllAxis::QAxis => -vf.0,
        GflPllAxis::DAxis => vf.1,
    }
}

pub fn gfl_residuals(x: &[f64], v_ri_pcc: Vec2, p: &GflParams, sp: &GflSetpoints, base: &PerUnitBase) -> GflOutput {
    let th = FrameAngle(x[0]);
    let (vq_pll, eps, sigma_p, p_m, sigma_q, q_m) = (x[1], x[2], x[3], x[4], x[5], x[6]);
    let gam = Vec2(x[7], x[8]);
    let icv = Vec2(x[9], x[10]);
    let vf = Vec2(x[11], x[12]);
    let ig = Vec2(x[13], x[14]);
    let w = 1.0 + p.kp_pll * vq_pll + p.ki_pll * eps;
    let v_pcc = rotate(th, v_ri_pcc);
    let i_ref = current_reference(p, sp, p_m, q_m, sigma_p, sigma_q);
    let v_cv = p.kp_c * (i_ref - icv) + p.ki_c * gam - w * p.l_f * jmul(icv);
    let wb = base.omega_b;
    let dicv = (wb / p.l_f) * (v_cv - vf - p.r_f * icv - w * p.l_f * jmul(icv));
    let dvf = (wb / p.c_f) * (icv - ig - w * p.c_f * jmul(vf));
    let dig = (wb / p.l_g) * (vf - v_pcc - p.r_g * ig - w * p.l_g * jmul(ig));
    let pw = vf.dot(ig);
    let qw = vf.dot(jmul(ig));
    let dgam = i_ref - icv;
    GflOutput {
        dx: [
            wb * (w - base.omega_s),
            p.omega_lp * (pll_error(p, vf) - vq_pll),
            vq_pll,
            sp.p_ref - p_m,
            p.omega_z * (pw - p_m),
            sp.q_ref - q_m,
            p.omega_f * (qw - q_m),
            dgam.0,
            dgam.1,
            dicv.0,
            dicv.1,
            dvf.0,
            dvf.1,
            dig.0,
            dig.1,
        ],
        i_ri: rotate_back(th, ig),
        omega_pll: w,
        i_ref,
        p: pw,
        q: qw,
    }
}

pub fn gfl_steady_state(v: Vec2, i: Vec2, p: &GflParams, base: &PerUnitBase) -> ([f64; 15], GflSetpoints) {
    let w = base.omega_s;
    let vf_ri = v + p.r_g * i + w * p.l_g * jmul(i);
    let mut theta = vf_ri.1.atan2(vf_ri.0);
    if p.pll_axis == GflPllAxis::QAxis {
        theta -= std::f64::consts::FRAC_PI_2;
    }
    let th = FrameAngle(theta);
    let vf = rotate(th, vf_ri);
    let ig = rotate(th, i);
    let pm = vf.dot(ig);
    let qm = vf.dot(jmul(ig));
    let icv = ig + w * p.c_f * jmul(vf);
    let sigma_q = icv.0 / p.ki_q;
    let sigma_p = icv.1 / p.ki_p;
    let gam = (vf + p.r_f * icv + 2.0 * w * p.l_f * jmul(icv)) * (1.0 / p.ki_c);
    (
        [
            theta, 0.0, 0.0, sigma_p, pm, sigma_q, qm, gam.0, gam.1, icv.0, icv.1, vf.0, vf.1, ig.0,
            ig.1,
        ],
        GflSetpoints { p_ref: pm, q_ref: qm },
    )
}

#[derive(Debug, Clone)]
pub struct GflBlock {
    pub name: String,
    pub params: GflParams,
    pub setpoints: GflSetpoints,
    pub base: PerUnitBase,
    pub terminal: [String; 2],
}

impl Block for GflBlock {
    fn name(&self) -> &str {
        &self.name
    }
    fn state_names(&self) -> Vec<String> {
        GFL_STATES.iter().map(|s| s.to_string()).collect()
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["i_r".into(), "i_i".into()]
    }
    fn input_names(&self) -> Vec<String> {
        self.terminal.to_vec()
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let o = gfl_residuals(cx.x, Vec2(cx.u[0], cx.u[1]), &self.params, &self.setpoints, &self.base);
        dx.copy_from_slice(&o.dx);
        g[0] = cx.y[0] - o.i_ri.0;
        g[1] = cx.y[1] - o.i_ri.1;
        Ok(())
    }
}
