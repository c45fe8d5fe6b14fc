use super::params::{DcLinkParams, DcdcParams, InfiniteBusParams, PsuParams};
use crate::assembly::{positive, Block, BlockCtx};
use crate::frame::Vec2;
use crate::{PerUnitBase, Result};

pub fn dclink_residual(
    m_dq: Vec2,
    i_dq_afe: Vec2,
    m_uv: Vec2,
    i_uv_cv: Vec2,
    c_dc: f64,
    base: &PerUnitBase,
) -> f64 {
    base.omega_b / c_dc * (m_dq.dot(i_dq_afe) - m_uv.dot(i_uv_cv))
}

#[derive(Debug, Clone)]
pub struct DcLinkBlock {
    pub params: DcLinkParams,
    pub base: PerUnitBase,
}

impl Block for DcLinkBlock {
    fn name(&self) -> &str {
        "dclink"
    }
    fn state_names(&self) -> Vec<String> {
        vec!["v_dc".into()]
    }
    fn algebraic_names(&self) -> Vec<String> {
        Vec::new()
    }
    fn input_names(&self) -> Vec<String> {
        [
            "afe.m_d", "afe.m_q", "afe.i_d", "afe.i_q", "vsi.m_u", "vsi.m_v", "vsi.i_cu", "vsi.i_cv",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], _g: &mut [f64]) -> Result<()> {
        let u = cx.u;
        dx[0] = dclink_residual(
            Vec2(u[0], u[1]),
            Vec2(u[2], u[3]),
            Vec2(u[4], u[5]),
            Vec2(u[6], u[7]),
            self.params.c_dc,
            &self.base,
        );
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsuOutput {
    pub dx: [f64; 2],
    pub g_eq: f64,
    pub i_uv_vsi: Vec2,
}

/// Reduced PSU array. State (v_psu, ξ_psu).
pub fn psu_reduced_residuals(
    v_psu: f64,
    xi_psu: f64,
    v_uv_vsi: Vec2,
    i_psu: f64,
    p: &PsuParams,
    base: &PerUnitBase,
) -> Result<PsuOutput> {
    let v_psu = positive("psu", "v_psu", v_psu, "divides the DC-port power")?;
    let g_eq = p.kp_v * (p.v_psu_ref - v_psu) + p.ki_v * xi_psu;
    let p_dc = (g_eq - p.r_psu * g_eq * g_eq) * v_uv_vsi.norm_sq() / (3.0 * v_psu);
    Ok(PsuOutput {
        dx: [base.omega_b / p.c_psu * (p_dc - i_psu), p.v_psu_ref - v_psu],
        g_eq,
        i_uv_vsi: g_eq * v_uv_vsi,
    })
}

/// Algebraics: g_eq, i_u, i_v.
#[derive(Debug, Clone)]
pub struct PsuBlock {
    pub params: PsuParams,
    pub base: PerUnitBase,
}

impl Block for PsuBlock {
    fn name(&self) -> &str {
        "psu"
    }
    fn state_names(&self) -> Vec<String> {
        vec!["v_psu".into(), "xi_psu".into()]
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["g_eq".into(), "i_u".into(), "i_v".into()]
    }
    fn input_names(&self) -> Vec<String> {
        vec!["vsi.v_u".into(), "vsi.v_v".into(), "dcdc.i_psu".into()]
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let o = psu_reduced_residuals(
            cx.x[0],
            cx.x[1],
            Vec2(cx.u[0], cx.u[1]),
            cx.u[2],
            &self.params,
            &self.base,
        )?;
        dx.copy_from_slice(&o.dx);
        g[0] = cx.y[0] - o.g_eq;
        g[1] = cx.y[1] - o.i_uv_vsi.0;
        g[2] = cx.y[2] - o.i_uv_vsi.1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcdcOutput {
    pub dx: [f64; 2],
    pub i_psu: f64,
    pub i_eq: f64,
    pub g_load: f64,
}

/// Conductance that draws `p_load` (three-phase total) at the reference voltage.
pub fn load_conductance(p_load: f64, v_eq_ref: f64) -> f64 {
    p_load / (3.0 * v_eq_ref * v_eq_ref)
}

/// Reduced DC-DC converter and load. State (v_eq, ξ_eq).
pub fn dcdc_reduced_residuals(
    v_eq: f64,
    xi_eq: f64,
    p_load: f64,
    v_psu: f64,
    p: &DcdcParams,
    base: &PerUnitBase,
) -> Result<DcdcOutput> {
    let v_psu = positive("dcdc", "v_psu", v_psu, "divides the input current")?;
    let g_load = load_conductance(p_load, p.v_eq_ref);
    let i_eq = p.kp_v * (p.v_eq_ref - v_eq) + p.ki_v * xi_eq;
    Ok(DcdcOutput {
        dx: [base.omega_b / p.c_eq * (i_eq - g_load * v_eq), p.v_eq_ref - v_eq],
        i_psu: v_eq / v_psu * i_eq,
        i_eq,
        g_load,
    })
}

/// Algebraic: i_psu. The exogenous input w is p_load.
#[derive(Debug, Clone)]
pub struct DcdcBlock {
    pub params: DcdcParams,
    pub base: PerUnitBase,
}

impl Block for DcdcBlock {
    fn name(&self) -> &str {
        "dcdc"
    }
    fn state_names(&self) -> Vec<String> {
        vec!["v_eq".into(), "xi_eq".into()]
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["i_psu".into()]
    }
    fn input_names(&self) -> Vec<String> {
        vec!["psu.v_psu".into()]
    }
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let o = dcdc_reduced_residuals(cx.x[0], cx.x[1], cx.w, cx.u[0], &self.params, &self.base)?;
        dx.copy_from_slice(&o.dx);
        g[0] = cx.y[0] - o.i_psu;
        Ok(())
    }
}

/// v_pcc = [V, 0] − [[R, −X], [X, R]]·i
pub fn infinite_bus_closure(i_ri_afe: Vec2, p: &InfiniteBusParams) -> Vec2 {
    Vec2(
        p.v_inf - (p.r_inf * i_ri_afe.0 - p.x_inf * i_ri_afe.1),
        -(p.x_inf * i_ri_afe.0 + p.r_inf * i_ri_afe.1),
    )
}

/// Algebraics: v_r, v_i (PCC voltage).
#[derive(Debug, Clone)]
pub struct InfiniteBusBlock {
    pub params: InfiniteBusParams,
}

impl Block for InfiniteBusBlock {
    fn name(&self) -> &str {
        "grid"
    }
    fn state_names(&self) -> Vec<String> {
        Vec::new()
    }
    fn algebraic_names(&self) -> Vec<String> {
        vec!["v_r".into(), "v_i".into()]
    }
    fn input_names(&self) -> Vec<String> {
        vec!["afe.i_r".into(), "afe.i_i".into()]
    }
    fn eval(&self, cx: &BlockCtx, _dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let v = infinite_bus_closure(Vec2(cx.u[0], cx.u[1]), &self.params);
        g[0] = cx.y[0] - v.0;
        g[1] = cx.y[1] - v.1;
        Ok(())
    }
}
