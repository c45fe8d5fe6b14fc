//! Reduced data-center power-delivery chain: AFE, UPS DC link, VSI,
//! aggregated PSU array, DC-DC stage with server load, and the infinite-bus closure.

mod afe;
mod dc;
mod params;
mod vsi;

pub use afe::{afe_residuals, AfeBlock, AfeOutput, AfeState, AFE_STATES};
pub use dc::{
    dcdc_reduced_residuals, dclink_residual, infinite_bus_closure, load_conductance,
    psu_reduced_residuals, DcLinkBlock, DcdcBlock, DcdcOutput, InfiniteBusBlock, PsuBlock,
    PsuOutput,
};
pub use params::{
    AfeParams, DcChainParams, DcLinkParams, DcdcParams, FullOrderParams, InfiniteBusParams,
    PsuParams, VsiParams,
};
pub use vsi::{vsi_residuals, VsiBlock, VsiOutput, VsiState, VSI_STATES};

use crate::frame::{jmul, Vec2};
use crate::{Error, PerUnitBase, Result};

/// Where the AFE terminal voltage comes from when computing a steady state.
#[derive(Debug, Clone, Copy)]
pub enum PccSource {
    InfiniteBus(InfiniteBusParams),
    /// Known PCC phasor in the ri frame.
    Phasor(Vec2),
}

/// Closed-form operating point of the chain.
#[derive(Debug, Clone)]
pub struct ChainSteadyState {
    pub values: Vec<(String, f64)>,
    pub p_pcc: f64,
    pub v_pcc_ri: Vec2,
    pub i_ri: Vec2,
}

/// Back-substitute the chain from the load upward: regulated voltages at
/// their references, integrators from the PI identities, AFE current from
/// the power balance at the PCC.
pub fn steady_state(
    p: &DcChainParams,
    base: &PerUnitBase,
    p_load: f64,
    pcc: PccSource,
) -> Result<ChainSteadyState> {
    let mut vals: Vec<(String, f64)> = Vec::with_capacity(32);
    let mut put = |k: &str, v: f64| vals.push((k.to_string(), v));

    let d = &p.dcdc;
    let g_load = load_conductance(p_load, d.v_eq_ref);
    let i_eq = g_load * d.v_eq_ref;
    let v_psu = p.psu.v_psu_ref;
    let i_psu = d.v_eq_ref * i_eq / v_psu;
    put("dcdc.v_eq", d.v_eq_ref);
    put("dcdc.xi_eq", i_eq / d.ki_v);
    put("dcdc.i_psu", i_psu);

    let ps = &p.psu;
    let v = Vec2(p.vsi.vu_ref, 0.0);
    let p_ac = 3.0 * v_psu * i_psu;
    let v2 = v.norm_sq();
    let g_eq = if ps.r_psu > 0.0 {
        let disc = 1.0 - 4.0 * ps.r_psu * p_ac / v2;
        if disc < 0.0 {
            return Err(Error::param("p_load", "exceeds the PSU array transfer limit"));
        }
        (1.0 - disc.sqrt()) / (2.0 * ps.r_psu)
    } else {
        p_ac / v2
    };
    put("psu.v_psu", v_psu);
    put("psu.xi_psu", g_eq / ps.ki_v);
    put("psu.g_eq", g_eq);
    let i_vsi = g_eq * v;
    put("psu.i_u", i_vsi.0);
    put("psu.i_v", i_vsi.1);

    let vp = &p.vsi;
    let w = vp.omega_vsi;
    let ic = i_vsi - w * vp.c_vsi * jmul(v);
    let xi = i_vsi * (1.0 / vp.ki_v);
    let gam = (v + vp.r_vsi * ic) * (1.0 / vp.ki_c);
    let v_cv = v + vp.r_vsi * ic - w * vp.l_vsi * jmul(ic);
    let vdc = p.afe.vdc_ref;
    let m_uv = v_cv * (1.0 / vdc);
    for (k, x) in [
        ("vsi.i_cu", ic.0),
        ("vsi.i_cv", ic.1),
        ("vsi.v_u", v.0),
        ("vsi.v_v", v.1),
        ("vsi.xi_u", xi.0),
        ("vsi.xi_v", xi.1),
        ("vsi.gamma_u", gam.0),
        ("vsi.gamma_v", gam.1),
        ("vsi.m_u", m_uv.0),
        ("vsi.m_v", m_uv.1),
    ] {
        put(k, x);
    }
    put("dclink.v_dc", vdc);

    let p_dc = v_cv.dot(ic);
    let a = &p.afe;
    let (i_d, v_d, theta) = match pcc {
        PccSource::Phasor(vp) => {
            let vm = vp.norm();
            let i = quadratic_current(a.r_afe, vm, p_dc)?;
            (i, vm, vp.1.atan2(vp.0))
        }
        PccSource::InfiniteBus(g) => {
            let vd = |i: f64| (g.v_inf * g.v_inf - g.x_inf * g.x_inf * i * i).sqrt() - g.r_inf * i;
            let mut i = p_dc / g.v_inf;
            for _ in 0..50 {
                let f = vd(i) * i - a.r_afe * i * i - p_dc;
                let h = 1e-7 * (1.0 + i.abs());
                let df = ((vd(i + h) * (i + h) - a.r_afe * (i + h) * (i + h))
                    - (vd(i - h) * (i - h) - a.r_afe * (i - h) * (i - h)))
                    / (2.0 * h);
                let step = f / df;
                i -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            let v_d = vd(i);
            if !v_d.is_finite() {
                return Err(Error::param("p_load", "no steady state behind the grid impedance"));
            }
            let theta = -(g.x_inf * i).atan2(v_d + g.r_inf * i);
            (i, v_d, theta)
        }
    };
    let (s, c) = theta.sin_cos();
    let i_ri = Vec2(c * i_d, s * i_d);
    let v_pcc = Vec2(c * v_d, s * v_d);
    let ws = base.omega_s;
    let m_dq = Vec2(v_d - a.r_afe * i_d, ws * a.l_afe * i_d) * (1.0 / vdc);
    for (k, x) in [
        ("afe.theta_pll", theta),
        ("afe.epsilon", 0.0),
        ("afe.vq_pll", 0.0),
        ("afe.i_d", i_d),
        ("afe.i_q", 0.0),
        ("afe.xi_dc", i_d / a.ki_dc),
        ("afe.gamma_d", (v_d - a.r_afe * i_d) / a.ki_c),
        ("afe.gamma_q", 0.0),
        ("afe.m_d", m_dq.0),
        ("afe.m_q", m_dq.1),
        ("afe.i_r", i_ri.0),
        ("afe.i_i", i_ri.1),
    ] {
        put(k, x);
    }
    Ok(ChainSteadyState {
        values: vals,
        p_pcc: v_d * i_d,
        v_pcc_ri: v_pcc,
        i_ri,
    })
}

/// Smaller root of r i² − v i + p = 0.
fn quadratic_current(r: f64, v: f64, p: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(p / v);
    }
    let disc = v * v - 4.0 * r * p;
    if disc < 0.0 {
        return Err(Error::param("p_load", "exceeds the AFE transfer limit"));
    }
    Ok((v - disc.sqrt()) / (2.0 * r))
}
