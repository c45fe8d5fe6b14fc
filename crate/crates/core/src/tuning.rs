//! Bandwidth-based PI tuning.

use serde::{Deserialize, Serialize};

use crate::dcchain::{DcChainParams, FullOrderParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Plant {
    Voltage { c: f64 },
    Current { l: f64, r: f64 },
    Pll,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuningSpec {
    pub f_bw: f64,
    pub zeta: f64,
    pub plant: Plant,
}

impl TuningSpec {
    pub fn voltage(f_bw: f64, zeta: f64, c: f64) -> Self {
        TuningSpec { f_bw, zeta, plant: Plant::Voltage { c } }
    }

    pub fn current(f_bw: f64, zeta: f64, l: f64, r: f64) -> Self {
        TuningSpec { f_bw, zeta, plant: Plant::Current { l, r } }
    }

    pub fn pll(f_bw: f64, zeta: f64) -> Self {
        TuningSpec { f_bw, zeta, plant: Plant::Pll }
    }
}

/// Returns (kp, ki) for the given loop.
pub fn tune(spec: &TuningSpec, omega_b: f64) -> Result<(f64, f64)> {
    if !(spec.f_bw > 0.0) {
        return Err(Error::Tuning(format!("f_bw must be > 0, got {}", spec.f_bw)));
    }
    if !(spec.zeta > 0.0) {
        return Err(Error::Tuning(format!("zeta must be > 0, got {}", spec.zeta)));
    }
    if !(omega_b > 0.0) {
        return Err(Error::Tuning("omega_b must be > 0".into()));
    }
    let wn = 2.0 * std::f64::consts::PI * spec.f_bw;
    let z = spec.zeta;
    match spec.plant {
        Plant::Voltage { c } => {
            if !(c > 0.0) {
                return Err(Error::Tuning(format!("capacitance must be > 0, got {c}")));
            }
            Ok((2.0 * z * wn * c / omega_b, wn * wn * c / omega_b))
        }
        Plant::Current { l, r } => {
            if !(l > 0.0) {
                return Err(Error::Tuning(format!("inductance must be > 0, got {l}")));
            }
            let kp = 2.0 * z * wn * l / omega_b - r;
            if kp <= 0.0 {
                return Err(Error::Tuning(format!(
                    "current-loop kp = {kp:.4} <= 0: resistance {r} too large for {} Hz",
                    spec.f_bw
                )));
            }
            Ok((kp, wn * wn * l / omega_b))
        }
        Plant::Pll => Ok((2.0 * z * wn / omega_b, wn * wn / omega_b)),
    }
}

/// A controller in the default parameter set together with the loop target
/// its gains come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopTarget {
    pub name: &'static str,
    pub spec: TuningSpec,
    /// gains currently stored in the parameter set
    pub kp: f64,
    pub ki: f64,
}

/// Every PI loop of the chain (reduced and full-order) with its target.
pub fn reference_loops(p: &DcChainParams, f: &FullOrderParams) -> Vec<LoopTarget> {
    let a = &p.afe;
    let v = &p.vsi;
    let lt = |name, spec, kp, ki| LoopTarget { name, spec, kp, ki };
    vec![
        lt("afe.pll", TuningSpec::pll(20.0, 0.707), a.kp_pll, a.ki_pll),
        lt("afe.dc", TuningSpec::voltage(5.0, 1.0, p.dclink.c_dc), a.kp_dc, a.ki_dc),
        lt("afe.current", TuningSpec::current(200.0, 0.707, a.l_afe, a.r_afe), a.kp_c, a.ki_c),
        lt("vsi.voltage", TuningSpec::voltage(100.0, 1.0, v.c_vsi), v.kp_v, v.ki_v),
        lt("vsi.current", TuningSpec::current(400.0, 1.0, v.l_vsi, v.r_vsi), v.kp_c, v.ki_c),
        lt("psu.voltage", TuningSpec::voltage(10.0, 1.0, p.psu.c_psu), p.psu.kp_v, p.psu.ki_v),
        lt("dcdc.voltage", TuningSpec::voltage(100.0, 1.0, p.dcdc.c_eq), p.dcdc.kp_v, p.dcdc.ki_v),
        lt("full.psu.current", TuningSpec::current(1000.0, 1.0, f.l_psu, p.psu.r_psu), f.kp_c_psu, f.ki_c_psu),
        lt("full.dcdc.current", TuningSpec::current(1000.0, 1.0, f.l_eq, p.psu.r_psu), f.kp_c_eq, f.ki_c_eq),
    ]
}
