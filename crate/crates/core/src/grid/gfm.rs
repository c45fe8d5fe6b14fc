use serde::{Deserialize, Serialize};

use crate::assembly::{Block, BlockCtx};
use crate::frame::{jmul, rotate, rotate_back, FrameAngle, Vec2};
use crate::{PerUnitBase, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GfmParams {
    pub l_f: f64,
    pub r_f: f64,
    pub c_f: f64,
    pub l_g: f64,
    pub r_g: f64,
    /// active-power droop
    pub kp: f64,
    pub omega_z: f64,
    /// reactive-power droop
    pub kq: f64,
    pub omega_f: f64,
    pub r_v: f64,
    pub l_v: f64,
    pub kp_v: f64,
    pub ki_v: f64,
    pub kp_c: f64,
    pub ki_c: f64,
}

impl Default for GfmParams {
    fn default() -> Self {
        GfmParams {
            l_f: 0.08,
            r_f: 0.003,
            c_f: 0.074,
            l_g: 0.2,
            r_g: 0.01,
            kp: 0.02,
            omega_z: 20.0,
            kq: 0.05,
            omega_f: 50.0,
            r_v: 0.0,
            l_v: 0.2,
            kp_v: 0.3947,
            ki_v: 49.5953,
            kp_c: 0.3771,
            ki_c: 335.1032,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfmSetpoints {
    pub omega_ref: f64,
    pub p_ref: f64,
    pub q_ref: f64,
    pub v_ref: f64,
}

pub const GFM_STATES: [&str; 13] = [
    "theta_oc", "p_oc", "q_oc", "xi_d", "xi_q", "gamma_d", "gamma_q", "i_cv_d", "i_cv_q", "v_f_d",
    "v_f_q", "i_g_d", "i_g_q",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfmOutput {
    pub dx: [f64; 13],
    pub i_ri: Vec2,
    pub omega_oc: f64,
    pub v_oc: f64,
    pub p_f: f64,
    pub q_f: f64,
}

pub fn droop_frequency(p: &GfmParams, sp: &GfmSetpoints, p_oc: f64) -> f64 {
    sp.omega_ref + p.kp * (sp.p_ref - p_oc)
}

pub fn droop_voltage(p: &GfmParams, sp: &GfmSetpoints, q_oc: f64) -> f64 {
    sp.v_ref + p.kq * (sp.q_ref - q_oc)
}

pub fn gfm_residuals(x: &[f64], v_ri_pcc: Vec2, p: &GfmParams, sp: &GfmSetpoints, base: &PerUnitBase) -> GfmOutput {
    let th = FrameAngle(x[0]);
    let (p_oc, q_oc) = (x[1], x[2]);
    let xi = Vec2(x[3], x[4]);
    let gam = Vec2(x[5], x[6]);
    let icv = Vec2(x[7], x[8]);
    let vf = Vec2(x[9], x[10]);
    let ig = Vec2(x[11], x[12]);
    let p_f = vf.dot(ig);
    let q_f = vf.dot(jmul(ig));
    let w = droop_frequency(p, sp, p_oc);
    let v_oc = droop_voltage(p, sp, q_oc);
    let v_vi = Vec2(0.0, v_oc) - p.r_v * ig - w * p.l_v * jmul(ig);
    let i_ref = p.kp_v * (v_vi - vf) + p.ki_v * xi + w * p.c_f * jmul(vf);
    let v_cv = p.kp_c * (i_ref - icv) + p.ki_c * gam - w * p.l_f * jmul(icv);
    let v_pcc = rotate(th, v_ri_pcc);
    let wb = base.omega_b;
    let dicv = (wb / p.l_f) * (v_cv - vf - p.r_f * icv - w * p.l_f * jmul(icv));
    let dvf = (wb / p.c_f) * (icv - ig - w * p.c_f * jmul(vf));
    let dig = (wb / p.l_g) * (vf - v_pcc - p.r_g * ig - w * p.l_g * jmul(ig));
    let dxi = v_vi - vf;
    let dgam = i_ref - icv;
    GfmOutput {
        dx: [
            wb * (w - base.omega_s),
            p.omega_z * (p_f - p_oc),
            p.omega_f * (q_f - q_oc),
            dxi.0,
            dxi.1,
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
        omega_oc: w,
        v_oc,
        p_f,
        q_f,
    }
}

/// Steady state delivering current `i` into terminal phasor `v`.
pub fn gfm_steady_state(v: Vec2, i: Vec2, p: &GfmParams, base: &PerUnitBase) -> ([f64; 13], GfmSetpoints) {
    let w = base.omega_s;
    // complex products with (r + jωl)
    let zmul = |r: f64, l: f64, a: Vec2| r * a + w * l * jmul(a);
    let vf_ri = v + zmul(p.r_g, p.l_g, i);
    let ev = vf_ri + zmul(p.r_v, p.l_v, i);
    let theta = ev.1.atan2(ev.0) - std::f64::consts::FRAC_PI_2;
    let th = FrameAngle(theta);
    let vf = rotate(th, vf_ri);
    let ig = rotate(th, i);
    let p_f = vf.dot(ig);
    let q_f = vf.dot(jmul(ig));
    let icv = ig + w * p.c_f * jmul(vf);
    let xi = ig * (1.0 / p.ki_v);
    let gam = (vf + p.r_f * icv + 2.0 * w * p.l_f * jmul(icv)) * (1.0 / p.ki_c);
    let sp = GfmSetpoints {
        omega_ref: w,
        p_ref: p_f,
        q_ref: q_f,
        v_ref: ev.norm(),
    };
    (
        [theta, p_f, q_f, xi.0, xi.1, gam.0, gam.1, icv.0, icv.1, vf.0, vf.1, ig.0, ig.1],
        sp,
    )
}

#[derive(Debug, Clone)]
pub struct GfmBlock {
    pub name: String,
    pub params: GfmParams,
    pub setpoints: GfmSetpoints,
    pub base: PerUnitBase,
    pub terminal: [String; 2],
}

impl Block for GfmBlock {
    fn name(&self) -> &str {
        &self.name
    }
    fn state_names(&self) -> Vec<String> {
        GFM_STATES.iter().map(|s| s.to_string()).collect()
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["i_r".into(), "i_i".into()]
    }
    fn input_names(&self) -> Vec<String> {
        self.terminal.to_vec()
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let o = gfm_residuals(cx.x, Vec2(cx.u[0], cx.u[1]), &self.params, &self.setpoints, &self.base);
        dx.copy_from_slice(&o.dx);
        g[0] = cx.y[0] - o.i_ri.0;
        g[1] = cx.y[1] - o.i_ri.1;
        Ok(())
    }
}
