//! Grid-side devices and the 9-bus phasor network.

mod gfl;
mod gfm;
mod network;
mod sm;

pub use gfl::{
    current_reference, gfl_residuals, gfl_steady_state, GflBlock, GflOutput, GflParams, GflPllAxis,
    GflSetpoints, GFL_STATES,
};
pub use gfm::{
    droop_frequency, droop_voltage, gfm_residuals, gfm_steady_state, GfmBlock, GfmOutput, GfmParams,
    GfmSetpoints, GFM_STATES,
};
pub use network::{
    injections, BranchData, BusData, BusKind, NetPort, NetworkBlock, NetworkData, PowerFlow,
};
pub use sm::{saturation, sm_residuals, sm_steady_state, SmBlock, SmOutput, SmParams, SmSetpoints, SM_STATES};
