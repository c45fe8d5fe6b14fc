use serde::{Deserialize, Serialize};

use crate::assembly::{Block, BlockCtx};
use crate::frame::{rotate, rotate_back, FrameAngle, Vec2};
use crate::{PerUnitBase, Result};

/// Two-axis machine with DC1A-type exciter and TGOV1-type governor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmParams {
    pub h: f64,
    pub d: f64,
    pub x_d: f64,
    pub x_q: f64,
    pub x_d_p: f64,
    pub x_q_p: f64,
    pub t_d0_p: f64,
    pub t_q0_p: f64,
    pub k_a: f64,
    pub t_a: f64,
    pub k_e: f64,
    pub t_e: f64,
    pub k_f: f64,
    pub t_f: f64,
    pub a_e: f64,
    pub b_e: f64,
    pub r: f64,
    pub t_sv: f64,
    pub t_ch: f64,
}

impl Default for SmParams {
    fn default() -> Self {
        SmParams {
            h: 3.0,
            d: 0.0,
            x_d: 0.146,
            x_q: 0.0969,
            x_d_p: 0.0608,
            x_q_p: 0.0969,
            t_d0_p: 8.96,
            t_q0_p: 0.31,
            k_a: 5.0,
            t_a: 0.2,
            k_e: 1.0,
            t_e: 0.314,
            k_f: 0.063,
            t_f: 0.35,
            a_e: 0.0039,
            b_e: 1.555,
            r: 0.15,
            t_sv: 0.1,
            t_ch: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SmSetpoints {
    pub v_ref: f64,
    pub p_ref: f64,
}

pub const SM_STATES: [&str; 9] = ["delta", "omega", "e_q_p", "e_d_p", "e_fd", "v_f", "v_r", "p_sv", "tau_m"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmOutput {
    pub dx: [f64; 9],
    pub i_ri: Vec2,
    pub i_dq: Vec2,
    pub v_dq: Vec2,
    pub tau_e: f64,
    pub v_t: f64,
    pub s_e: f64,
}

pub fn saturation(p: &SmParams, e_fd: f64) -> f64 {
    p.a_e * (p.b_e * e_fd).exp()
}

/// The dq transform of the machine is R(δ).
pub fn sm_residuals(x: &[f64], v_ri: Vec2, p: &SmParams, sp: &SmSetpoints, base: &PerUnitBase) -> SmOutput {
    let [delta, omega, eqp, edp, efd, vf, vr, psv, tm] = [x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8]];
    let th = FrameAngle(delta);
    let v = rotate(th, v_ri);
    let i_d = (eqp - v.1) / p.x_d_p;
    let i_q = (v.0 - edp) / p.x_q_p;
    let tau_e = v.0 * i_d + v.1 * i_q;
    let v_t = v.norm();
    let se = saturation(p, efd);
    let dw = omega - base.omega_s;
    let dx = [
        base.omega_b * dw,
        (tm - tau_e - p.d * dw) / (2.0 * p.h),
        (-eqp - (p.x_d - p.x_d_p) * i_d + efd) / p.t_d0_p,
        (-edp + (p.x_q - p.x_q_p) * i_q) / p.t_q0_p,
        (-(p.k_e + se) * efd + vr) / p.t_e,
        (-vf + p.k_f / p.t_e * vr - p.k_f / p.t_e * (p.k_e + se) * efd) / p.t_f,
        (-vr + p.k_a * (sp.v_ref - vf - v_t)) / p.t_a,
        (-psv + sp.p_ref - dw / p.r) / p.t_sv,
        (-tm + psv) / p.t_ch,
    ];
    let i_dq = Vec2(i_d, i_q);
    SmOutput {
        dx,
        i_ri: rotate_back(th, i_dq),
        i_dq,
        v_dq: v,
        tau_e,
        v_t,
        s_e: se,
    }
}

/// Steady state at terminal phasor `v` injecting current `i` (generator convention).
pub fn sm_steady_state(v: Vec2, i: Vec2, p: &SmParams, base: &PerUnitBase) -> ([f64; 9], SmSetpoints) {
    // internal EMF behind x_q lies on the q axis
    let e = Vec2(v.0 - p.x_q * i.1, v.1 + p.x_q * i.0);
    let delta = e.1.atan2(e.0) - std::f64::consts::FRAC_PI_2;
    let th = FrameAngle(delta);
    let vdq = rotate(th, v);
    let idq = rotate(th, i);
    let edp = (p.x_q - p.x_q_p) * idq.1;
    let eqp = vdq.1 + p.x_d_p * idq.0;
    let efd = eqp + (p.x_d - p.x_d_p) * idq.0;
    let se = saturation(p, efd);
    let vr = (p.k_e + se) * efd;
    let pe = vdq.dot(idq);
    let sp = SmSetpoints {
        v_ref: vr / p.k_a + vdq.norm(),
        p_ref: pe,
    };
    ([delta, base.omega_s, eqp, edp, efd, 0.0, vr, pe, pe], sp)
}

/// Algebraics: i_r, i_i (injected current, ri frame).
#[derive(Debug, Clone)]
pub struct SmBlock {
    pub name: String,
    pub params: SmParams,
    pub setpoints: SmSetpoints,
    pub base: PerUnitBase,
    pub terminal: [String; 2],
}

impl Block for SmBlock {
    fn name(&self) -> &str {
        &self.name
    }
    fn state_names(&self) -> Vec<String> {
        SM_STATES.iter().map(|s| s.to_string()).collect()
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["i_r".into(), "i_i".into()]
    }
    fn input_names(&self) -> Vec<String> {
        self.terminal.to_vec()
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let o = sm_residuals(cx.x, Vec2(cx.u[0], cx.u[1]), &self.params, &self.setpoints, &self.base);
        dx.copy_from_slice(&o.dx);
        g[0] = cx.y[0] - o.i_ri.0;
        g[1] = cx.y[1] - o.i_ri.1;
        Ok(())
    }
}
