use super::params::VsiParams;
use crate::assembly::{positive, Block, BlockCtx};
use crate::frame::{jmul, Vec2};
use crate::{PerUnitBase, Result};

pub const VSI_STATES: [&str; 8] = [
    "i_cu", "i_cv", "v_u", "v_v", "xi_u", "xi_v", "gamma_u", "gamma_v",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VsiState {
    pub i_uv_cv: Vec2,
    pub v_uv: Vec2,
    pub xi_uv: Vec2,
    pub gamma_uv: Vec2,
}

impl VsiState {
    pub fn from_slice(x: &[f64]) -> Self {
        VsiState {
            i_uv_cv: Vec2(x[0], x[1]),
            v_uv: Vec2(x[2], x[3]),
            xi_uv: Vec2(x[4], x[5]),
            gamma_uv: Vec2(x[6], x[7]),
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.i_uv_cv.0,
            self.i_uv_cv.1,
            self.v_uv.0,
            self.v_uv.1,
            self.xi_uv.0,
            self.xi_uv.1,
            self.gamma_uv.0,
            self.gamma_uv.1,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VsiOutput {
    pub dx: [f64; 8],
    pub m_uv: Vec2,
    pub i_ref: Vec2,
    pub v_cv: Vec2,
}

pub fn vsi_residuals(
    s: &VsiState,
    i_uv_vsi: Vec2,
    v_dc: f64,
    p: &VsiParams,
    base: &PerUnitBase,
) -> Result<VsiOutput> {
    let v_dc = positive("vsi", "v_dc", v_dc, "singular modulation")?;
    let w = p.omega_vsi;
    let (ic, v) = (s.i_uv_cv, s.v_uv);
    let v_ref = Vec2(p.vu_ref, 0.0);
    let i_ref = p.kp_v * (v_ref - v) + p.ki_v * s.xi_uv - w * p.c_vsi * jmul(v);
    let v_cv = p.kp_c * (i_ref - ic) + p.ki_c * s.gamma_uv - w * p.l_vsi * jmul(ic);
    let m = v_cv * (1.0 / v_dc);
    let dic = (base.omega_b / p.l_vsi) * (v_dc * m - v - p.r_vsi * ic + w * p.l_vsi * jmul(ic));
    let dv = (base.omega_b / p.c_vsi) * (ic - i_uv_vsi + w * p.c_vsi * jmul(v));
    let dxi = v_ref - v;
    let dgam = i_ref - ic;
    Ok(VsiOutput {
        dx: [dic.0, dic.1, dv.0, dv.1, dxi.0, dxi.1, dgam.0, dgam.1],
        m_uv: m,
        i_ref,
        v_cv,
    })
}

/// VSI block. Algebraics: m_u, m_v. Reads v_dc and the PSU-array current.
#[derive(Debug, Clone)]
pub struct VsiBlock {
    pub params: VsiParams,
    pub base: PerUnitBase,
}

impl Block for VsiBlock {
    fn name(&self) -> &str {
        "vsi"
    }
    fn state_names(&self) -> Vec<String> {
        VSI_STATES.iter().map(|s| s.to_string()).collect()
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["m_u".into(), "m_v".into()]
    }
    fn input_names(&self) -> Vec<String> {
        vec!["dclink.v_dc".into(), "psu.i_u".into(), "psu.i_v".into()]
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let s = VsiState::from_slice(cx.x);
        let o = vsi_residuals(&s, Vec2(cx.u[1], cx.u[2]), cx.u[0], &self.params, &self.base)?;
        dx.copy_from_slice(&o.dx);
        g[0] = cx.y[0] - o.m_uv.0;
        g[1] = cx.y[1] - o.m_uv.1;
        Ok(())
    }
}
