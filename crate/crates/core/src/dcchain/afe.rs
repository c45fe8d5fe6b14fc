use super::params::AfeParams;
use crate::assembly::{positive, Block, BlockCtx};
use crate::frame::{jmul, rotate, rotate_back, FrameAngle, Vec2};
use crate::{PerUnitBase, Result};

/// Local state layout: θ_pll, ε, v_q^pll, i_d, i_q, ξ_dc, γ_d, γ_q.
pub const AFE_STATES: [&str; 8] = [
    "theta_pll", "epsilon", "vq_pll", "i_d", "i_q", "xi_dc", "gamma_d", "gamma_q",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AfeState {
    pub theta_pll: f64,
    pub epsilon: f64,
    pub vq_pll: f64,
    pub i_dq: Vec2,
    pub xi_dc: f64,
    pub gamma_dq: Vec2,
}

impl AfeState {
    pub fn from_slice(x: &[f64]) -> Self {
        AfeState {
            theta_pll: x[0],
            epsilon: x[1],
            vq_pll: x[2],
            i_dq: Vec2(x[3], x[4]),
            xi_dc: x[5],
            gamma_dq: Vec2(x[6], x[7]),
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.theta_pll,
            self.epsilon,
            self.vq_pll,
            self.i_dq.0,
            self.i_dq.1,
            self.xi_dc,
            self.gamma_dq.0,
            self.gamma_dq.1,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AfeOutput {
    pub dx: [f64; 8],
    pub m_dq: Vec2,
    pub i_ri: Vec2,
    pub v_dq_pcc: Vec2,
    pub omega_pll: f64,
    pub i_dq_ref: Vec2,
}

pub fn afe_residuals(
    s: &AfeState,
    v_pcc_ri: Vec2,
    v_dc: f64,
    p: &AfeParams,
    base: &PerUnitBase,
) -> Result<AfeOutput> {
    let v_dc = positive("afe", "v_dc", v_dc, "singular modulation")?;
    let th = FrameAngle(s.theta_pll);
    let i = s.i_dq;
    let omega_pll = base.omega_s + p.kp_pll * s.vq_pll + p.ki_pll * s.epsilon;
    let v_dq = rotate(th, v_pcc_ri);
    let i_ref = Vec2(p.kp_dc * (p.vdc_ref - v_dc) + p.ki_dc * s.xi_dc, 0.0);
    let v_rf = p.kp_c * (i - i_ref) + p.ki_c * s.gamma_dq + omega_pll * p.l_afe * jmul(i);
    let m = v_rf * (1.0 / v_dc);
    let di = (base.omega_b / p.l_afe) * (v_dq - v_dc * m - p.r_afe * i + omega_pll * p.l_afe * jmul(i));
    let dg = i - i_ref;
    Ok(AfeOutput {
        dx: [
            base.omega_b * (omega_pll - base.omega_s),
            s.vq_pll,
            p.omega_lp * (v_dq.1 - s.vq_pll),
            di.0,
            di.1,
            p.vdc_ref - v_dc,
            dg.0,
            dg.1,
        ],
        m_dq: m,
        i_ri: rotate_back(th, i),
        v_dq_pcc: v_dq,
        omega_pll,
        i_dq_ref: i_ref,
    })
}

/// AFE block. Algebraics: m_d, m_q, i_r, i_i. Reads the PCC voltage and v_dc.
#[derive(Debug, Clone)]
pub struct AfeBlock {
    pub params: AfeParams,
    pub base: PerUnitBase,
    pub pcc: [String; 2],
    pub dc: String,
}

impl AfeBlock {
    pub fn new(params: AfeParams, base: PerUnitBase, pcc: [&str; 2]) -> Self {
        AfeBlock {
            params,
            base,
            pcc: [pcc[0].to_string(), pcc[1].to_string()],
            dc: "dclink.v_dc".into(),
        }
    }
}

impl Block for AfeBlock {
    fn name(&self) -> &str {
        "afe"
    }
    fn state_names(&self) -> Vec<String> {
        AFE_STATES.iter().map(|s| s.to_string()).collect()
    }
    fn algebraic_names(&self) -> Vec<String> {
        ["m_d", "m_q", "i_r", "i_i"].iter().map(|s| s.to_string()).collect()
    }
    fn input_names(&self) -> Vec<String> {
        vec![self.pcc[0].clone(), self.pcc[1].clone(), self.dc.clone()]
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let s = AfeState::from_slice(cx.x);
        let o = afe_residuals(&s, Vec2(cx.u[0], cx.u[1]), cx.u[2], &self.params, &self.base)?;
        dx.copy_from_slice(&o.dx);
        g[0] = cx.y[0] - o.m_dq.0;
        g[1] = cx.y[1] - o.m_dq.1;
        g[2] = cx.y[2] - o.i_ri.0;
        g[3] = cx.y[3] - o.i_ri.1;
        Ok(())
    }
}
