use serde::{Deserialize, Serialize};

use crate::tuning::{tune, TuningSpec};
use crate::{Error, PerUnitBase, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfeParams {
    pub l_afe: f64,
    pub r_afe: f64,
    pub kp_pll: f64,
    pub ki_pll: f64,
    /// rad/s
    pub omega_lp: f64,
    pub vdc_ref: f64,
    pub kp_dc: f64,
    pub ki_dc: f64,
    pub kp_c: f64,
    pub ki_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcLinkParams {
    pub c_dc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VsiParams {
    pub l_vsi: f64,
    pub r_vsi: f64,
    pub c_vsi: f64,
    pub vu_ref: f64,
    pub omega_vsi: f64,
    pub kp_v: f64,
    pub ki_v: f64,
    pub kp_c: f64,
    pub ki_c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsuParams {
    pub c_psu: f64,
    pub r_psu: f64,
    pub v_psu_ref: f64,
    pub kp_v: f64,
    pub ki_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcdcParams {
    pub c_eq: f64,
    pub v_eq_ref: f64,
    pub kp_v: f64,
    pub ki_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfiniteBusParams {
    pub v_inf: f64,
    pub r_inf: f64,
    pub x_inf: f64,
}

impl InfiniteBusParams {
    pub fn scr(&self) -> f64 {
        1.0 / self.r_inf.hypot(self.x_inf)
    }

    /// Same R/X ratio, impedance magnitude set by the short-circuit ratio.
    pub fn with_scr(&self, scr: f64) -> Self {
        let k = self.scr() / scr;
        InfiniteBusParams {
            v_inf: self.v_inf,
            r_inf: self.r_inf * k,
            x_inf: self.x_inf * k,
        }
    }
}

/// Parameters of the whole power-delivery chain (AFE through DC-DC).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcChainParams {
    pub afe: AfeParams,
    pub dclink: DcLinkParams,
    pub vsi: VsiParams,
    pub psu: PsuParams,
    pub dcdc: DcdcParams,
}

/// Extra parameters of the full-order PSU and DC-DC models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullOrderParams {
    pub l_psu: f64,
    pub kp_c_psu: f64,
    pub ki_c_psu: f64,
    pub l_eq: f64,
    pub kp_c_eq: f64,
    pub ki_c_eq: f64,
    /// tanh smoothing width of the diode-bridge sign function (p.u.)
    pub sign_eps: f64,
}

impl Default for FullOrderParams {
    fn default() -> Self {
        FullOrderParams {
            l_psu: 0.05,
            kp_c_psu: 1.6617,
            ki_c_psu: 5236.0,
            l_eq: 0.05,
            kp_c_eq: 1.6617,
            ki_c_eq: 5236.0,
            sign_eps: 1e-3,
        }
    }
}

impl Default for InfiniteBusParams {
    fn default() -> Self {
        InfiniteBusParams {
            v_inf: 1.0,
            r_inf: 0.02,
            x_inf: 0.19,
        }
    }
}

impl DcChainParams {
    /// Bandwidth-rule gains with the VSI voltage loop at 100 Hz.
    pub fn baseline() -> Self {
        DcChainParams {
            afe: AfeParams {
                l_afe: 0.05,
                r_afe: 0.003,
                kp_pll: 0.471,
                ki_pll: 41.89,
                omega_lp: 2.0 * std::f64::consts::PI * 100.0,
                vdc_ref: 1.0,
                kp_dc: 0.333,
                ki_dc: 5.236,
                kp_c: 0.233,
                ki_c: 209.4,
            },
            dclink: DcLinkParams { c_dc: 2.0 },
            vsi: VsiParams {
                l_vsi: 0.05,
                r_vsi: 0.003,
                c_vsi: 0.2,
                vu_ref: 1.0,
                omega_vsi: 1.0,
                kp_v: 0.667,
                ki_v: 209.4,
                kp_c: 0.664,
                ki_c: 837.8,
            },
            psu: PsuParams {
                c_psu: 2.0,
                r_psu: 0.005,
                v_psu_ref: 1.0,
                kp_v: 0.667,
                ki_v: 20.94,
            },
            dcdc: DcdcParams {
                c_eq: 0.2,
                v_eq_ref: 0.5,
                kp_v: 0.667,
                ki_v: 209.4,
            },
        }
    }

    /// Retune the VSI voltage loop to a bandwidth (ζ = 1) on its filter capacitor.
    pub fn with_vsi_voltage_bandwidth(mut self, f_bw: f64, base: &PerUnitBase) -> Result<Self> {
        let (kp, ki) = tune(&TuningSpec::voltage(f_bw, 1.0, self.vsi.c_vsi), base.omega_b)?;
        self.vsi.kp_v = kp;
        self.vsi.ki_v = ki;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |n: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(n, format!("must be > 0, got {v}")))
            }
        };
        let nonneg = |n: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(n, format!("must be >= 0, got {v}")))
            }
        };
        let a = &self.afe;
        pos("dcchain.afe.l_afe", a.l_afe)?;
        nonneg("dcchain.afe.r_afe", a.r_afe)?;
        pos("dcchain.afe.omega_lp", a.omega_lp)?;
        pos("dcchain.afe.vdc_ref", a.vdc_ref)?;
        for (n, v) in [
            ("kp_pll", a.kp_pll),
            ("ki_pll", a.ki_pll),
            ("kp_dc", a.kp_dc),
            ("ki_dc", a.ki_dc),
            ("kp_c", a.kp_c),
            ("ki_c", a.ki_c),
        ] {
            nonneg(&format!("dcchain.afe.{n}"), v)?;
        }
        pos("dcchain.dclink.c_dc", self.dclink.c_dc)?;
        let v = &self.vsi;
        pos("dcchain.vsi.l_vsi", v.l_vsi)?;
        pos("dcchain.vsi.c_vsi", v.c_vsi)?;
        nonneg("dcchain.vsi.r_vsi", v.r_vsi)?;
        pos("dcchain.vsi.omega_vsi", v.omega_vsi)?;
        for (n, k) in [("kp_v", v.kp_v), ("ki_v", v.ki_v), ("kp_c", v.kp_c), ("ki_c", v.ki_c)] {
            nonneg(&format!("dcchain.vsi.{n}"), k)?;
        }
        let p = &self.psu;
        pos("dcchain.psu.c_psu", p.c_psu)?;
        nonneg("dcchain.psu.r_psu", p.r_psu)?;
        pos("dcchain.psu.v_psu_ref", p.v_psu_ref)?;
        nonneg("dcchain.psu.kp_v", p.kp_v)?;
        pos("dcchain.psu.ki_v", p.ki_v)?;
        let d = &self.dcdc;
        pos("dcchain.dcdc.c_eq", d.c_eq)?;
        pos("dcchain.dcdc.v_eq_ref", d.v_eq_ref)?;
        nonneg("dcchain.dcdc.kp_v", d.kp_v)?;
        pos("dcchain.dcdc.ki_v", d.ki_v)?;
        // integrator gains divide the steady-state identities
        pos("dcchain.afe.ki_dc", a.ki_dc)?;
        pos("dcchain.afe.ki_c", a.ki_c)?;
        pos("dcchain.vsi.ki_v", v.ki_v)?;
        pos("dcchain.vsi.ki_c", v.ki_c)?;
        Ok(())
    }
}

impl Default for DcChainParams {
    /// Baseline with the VSI voltage loop retuned to 80 Hz (ζ = 1).
    fn default() -> Self {
        let base = PerUnitBase::default();
        let mut p = DcChainParams::baseline();
        let (kp, ki) = tune(&TuningSpec::voltage(80.0, 1.0, p.vsi.c_vsi), base.omega_b)
            .expect("valid default tuning");
        p.vsi.kp_v = kp;
        p.vsi.ki_v = ki;
        p
    }
}
