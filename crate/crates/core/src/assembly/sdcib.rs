use serde::{Deserialize, Serialize};

use super::{InitStrategy, ModelBuilder, SystemModel};
use crate::dcchain::{
    AfeBlock, DcChainParams, DcLinkBlock, DcdcBlock, InfiniteBusBlock, InfiniteBusParams, PsuBlock,
    VsiBlock,
};
use crate::paramstore::flatten;
use crate::{Error, PerUnitBase, Result};

/// Single data center on an infinite bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdcibParams {
    pub base: PerUnitBase,
    pub dcchain: DcChainParams,
    pub grid: InfiniteBusParams,
    pub p_load: f64,
}

impl Default for SdcibParams {
    fn default() -> Self {
        SdcibParams {
            base: PerUnitBase::default(),
            dcchain: DcChainParams::default(),
            grid: InfiniteBusParams::default(),
            p_load: 0.5,
        }
    }
}

impl SdcibParams {
    /// VSI voltage loop at 100 Hz.
    pub fn baseline() -> Self {
        SdcibParams {
            dcchain: DcChainParams::baseline(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.dcchain.validate()?;
        if !(self.grid.v_inf > 0.0) {
            return Err(Error::param("grid.v_inf", "must be > 0"));
        }
        if !(self.grid.r_inf >= 0.0 && self.grid.x_inf >= 0.0) || !(self.grid.scr() > 0.0) || !self.grid.scr().is_finite() {
            return Err(Error::param("grid", "impedance must be nonnegative and nonzero"));
        }
        if !(self.p_load >= 0.0) {
            return Err(Error::param("p_load", "must be >= 0"));
        }
        Ok(())
    }

    /// Model builder before `build()`, so variants can drop or swap blocks.
    pub fn builder(&self) -> Result<ModelBuilder> {
        self.validate()?;
        let c = &self.dcchain;
        let b = self.base;
        Ok(ModelBuilder::new("sdcib")
            .block(DcdcBlock { params: c.dcdc, base: b })
            .block(PsuBlock { params: c.psu, base: b })
            .block(VsiBlock { params: c.vsi, base: b })
            .block(DcLinkBlock { params: c.dclink, base: b })
            .block(AfeBlock::new(c.afe, b, ["grid.v_r", "grid.v_i"]))
            .block(InfiniteBusBlock { params: self.grid })
            .output("p_pcc", ["grid.v_r", "grid.v_i"], ["afe.i_r", "afe.i_i"], 1.0)
            .probe("p_vsi", ["vsi.v_u", "vsi.v_v"], ["psu.i_u", "psu.i_v"], 1.0)
            .parameters(flatten(self))
            .init(InitStrategy::Sdcib(Box::new(*self))))
    }
}

pub fn build_sdcib(p: &SdcibParams) -> Result<SystemModel> {
    p.builder()?.build()
}
