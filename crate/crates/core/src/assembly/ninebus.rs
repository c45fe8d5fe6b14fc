use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{InitStrategy, ModelBuilder, SystemModel};
use crate::dcchain::{
    steady_state, AfeBlock, DcChainParams, DcLinkBlock, DcdcBlock, PccSource, PsuBlock, VsiBlock,
};
use crate::frame::Vec2;
use crate::grid::{
    gfl_steady_state, gfm_steady_state, sm_steady_state, BusKind, GflBlock, GflParams, GfmBlock,
    GfmParams, NetPort, NetworkBlock, NetworkData, PowerFlow, SmBlock, SmParams, GFL_STATES,
    GFM_STATES, SM_STATES,
};
use crate::paramstore::flatten;
use crate::{Error, PerUnitBase, Result};

/// Modified 3-machine 9-bus case: SM on the slack bus, GFM and GFL on the
/// two PV buses, the data center as an extra load at `dc_bus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NineBusParams {
    pub base: PerUnitBase,
    pub dcchain: DcChainParams,
    pub sm: SmParams,
    pub gfm: GfmParams,
    pub gfl: GflParams,
    pub network: NetworkData,
    pub p_load: f64,
    pub sm_bus: usize,
    pub gfm_bus: usize,
    pub gfl_bus: usize,
    pub dc_bus: usize,
}

impl Default for NineBusParams {
    fn default() -> Self {
        NineBusParams {
            base: PerUnitBase::default(),
            dcchain: DcChainParams::default(),
            sm: SmParams::default(),
            gfm: GfmParams::default(),
            gfl: GflParams::default(),
            network: NetworkData::wscc9(),
            p_load: 0.5,
            sm_bus: 1,
            gfm_bus: 2,
            gfl_bus: 3,
            dc_bus: 8,
        }
    }
}

/// Which devices are present. An omitted inverter leaves its bus as a plain PQ bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NineBusOptions {
    pub gfm: bool,
    pub gfl: bool,
    pub data_center: bool,
}

impl Default for NineBusOptions {
    fn default() -> Self {
        NineBusOptions {
            gfm: true,
            gfl: true,
            data_center: true,
        }
    }
}

/// Consistent starting point computed at build time from the power flow.
#[derive(Debug, Clone)]
pub struct NineBusInit {
    pub w0: f64,
    pub values: Vec<(String, f64)>,
    pub power_flow: PowerFlow,
}

impl NineBusParams {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.dcchain.validate()?;
        self.network.validate()?;
        let n = self.network.n_bus();
        for (name, b) in [
            ("sm_bus", self.sm_bus),
            ("gfm_bus", self.gfm_bus),
            ("gfl_bus", self.gfl_bus),
            ("dc_bus", self.dc_bus),
        ] {
            if b == 0 || b > n {
                return Err(Error::param(name, "bus index out of range"));
            }
        }
        if self.network.buses[self.sm_bus - 1].kind != BusKind::Slack {
            return Err(Error::param("sm_bus", "the machine must sit on the slack bus"));
        }
        if !(self.p_load >= 0.0) {
            return Err(Error::param("p_load", "must be >= 0"));
        }
        Ok(())
    }

    /// Power flow with the data center drawing its steady-state PCC power,
    /// iterated until the chain losses and the bus voltage agree.
    fn solve_flow(&self, net: &NetworkData, opts: &NineBusOptions) -> Result<(PowerFlow, Option<crate::dcchain::ChainSteadyState>)> {
        let k = self.dc_bus - 1;
        let s_base = self.base.s_base;
        if !opts.data_center {
            return Ok((net.power_flow(&[])?, None));
        }
        let mut p_dc = s_base * self.p_load;
        for _ in 0..50 {
            let pf = net.power_flow(&[(k, p_dc)])?;
            let v = pf.v[k];
            let ss = steady_state(&self.dcchain, &self.base, self.p_load, PccSource::Phasor(Vec2(v.re, v.im)))?;
            let next = s_base * ss.p_pcc;
            if (next - p_dc).abs() < 1e-14 {
                let pf = net.power_flow(&[(k, next)])?;
                return Ok((pf, Some(ss)));
            }
            p_dc = next;
        }
        Err(Error::PowerFlow {
            iterations: 50,
            mismatch: f64::NAN,
        })
    }

    pub fn builder(&self, opts: &NineBusOptions) -> Result<ModelBuilder> {
        self.validate()?;
        let b = self.base;
        let mut net = self.network.clone();
        for (on, bus) in [(opts.gfm, self.gfm_bus), (opts.gfl, self.gfl_bus)] {
            if !on {
                let d = &mut net.buses[bus - 1];
                d.kind = BusKind::Pq;
                d.p_gen = 0.0;
            }
        }
        let (pf, chain) = self.solve_flow(&net, opts)?;
        let extra: Vec<(usize, f64)> = match &chain {
            Some(ss) => vec![(self.dc_bus - 1, b.s_base * ss.p_pcc)],
            None => Vec::new(),
        };
        let y = net.admittance_with_loads(&pf.v);
        let term = |bus: usize| [format!("net.v_r{bus}"), format!("net.v_i{bus}")];
        let vbus = |bus: usize| Vec2(pf.v[bus - 1].re, pf.v[bus - 1].im);
        let igen = |bus: usize| {
            let s = pf.generation(&net, bus - 1, &extra);
            let i: Complex64 = (s / pf.v[bus - 1]).conj();
            Vec2(i.re, i.im)
        };

        let mut values: Vec<(String, f64)> = Vec::new();
        let mut ports = Vec::new();
        let mut mb = ModelBuilder::new("ninebus");

        if let Some(ss) = &chain {
            let c = &self.dcchain;
            let pcc = term(self.dc_bus);
            mb = mb
                .block(DcdcBlock { params: c.dcdc, base: b })
                .block(PsuBlock { params: c.psu, base: b })
                .block(VsiBlock { params: c.vsi, base: b })
                .block(DcLinkBlock { params: c.dclink, base: b })
                .block(AfeBlock::new(c.afe, b, [pcc[0].as_str(), pcc[1].as_str()]));
            values.extend(ss.values.iter().cloned());
            ports.push(NetPort {
                bus: self.dc_bus - 1,
                current: ["afe.i_r".into(), "afe.i_i".into()],
                scale: -b.s_base,
            });
        }

        let (xs, sp) = sm_steady_state(vbus(self.sm_bus), igen(self.sm_bus), &self.sm, &b);
        push_states(&mut values, "sm", &SM_STATES, &xs);
        push_current(&mut values, "sm", igen(self.sm_bus));
        mb = mb.block(SmBlock {
            name: "sm".into(),
            params: self.sm,
            setpoints: sp,
            base: b,
            terminal: term(self.sm_bus),
        });
        ports.push(NetPort {
            bus: self.sm_bus - 1,
            current: ["sm.i_r".into(), "sm.i_i".into()],
            scale: 1.0,
        });

        if opts.gfm {
            let (xs, sp) = gfm_steady_state(vbus(self.gfm_bus), igen(self.gfm_bus), &self.gfm, &b);
            push_states(&mut values, "gfm", &GFM_STATES, &xs);
            push_current(&mut values, "gfm", igen(self.gfm_bus));
            mb = mb.block(GfmBlock {
                name: "gfm".into(),
                params: self.gfm,
                setpoints: sp,
                base: b,
                terminal: term(self.gfm_bus),
            });
            ports.push(NetPort {
                bus: self.gfm_bus - 1,
                current: ["gfm.i_r".into(), "gfm.i_i".into()],
                scale: 1.0,
            });
        }
        if opts.gfl {
            let (xs, sp) = gfl_steady_state(vbus(self.gfl_bus), igen(self.gfl_bus), &self.gfl, &b);
            push_states(&mut values, "gfl", &GFL_STATES, &xs);
            push_current(&mut values, "gfl", igen(self.gfl_bus));
            mb = mb.block(GflBlock {
                name: "gfl".into(),
                params: self.gfl,
                setpoints: sp,
                base: b,
                terminal: term(self.gfl_bus),
            });
            ports.push(NetPort {
                bus: self.gfl_bus - 1,
                current: ["gfl.i_r".into(), "gfl.i_i".into()],
                scale: 1.0,
            });
        }

        for (k, v) in pf.v.iter().enumerate() {
            values.push((format!("net.v_r{}", k + 1), v.re));
            values.push((format!("net.v_i{}", k + 1), v.im));
        }
        mb = mb.block(NetworkBlock {
            name: "net".into(),
            y,
            ports,
        });

        let t = |bus: usize| term(bus);
        let sm_t = t(self.sm_bus);
        mb = mb.output("p_sm", [&sm_t[0], &sm_t[1]], ["sm.i_r", "sm.i_i"], 1.0);
        if opts.gfm {
            let g = t(self.gfm_bus);
            mb = mb.output("p_gfm", [&g[0], &g[1]], ["gfm.i_r", "gfm.i_i"], 1.0);
        }
        if opts.gfl {
            let g = t(self.gfl_bus);
            mb = mb.output("p_gfl", [&g[0], &g[1]], ["gfl.i_r", "gfl.i_i"], 1.0);
        }
        if chain.is_some() {
            let g = t(self.dc_bus);
            mb = mb
                .output("p_dc", [&g[0], &g[1]], ["afe.i_r", "afe.i_i"], b.s_base)
                .probe("p_vsi", ["vsi.v_u", "vsi.v_v"], ["psu.i_u", "psu.i_v"], b.s_base);
        }
        Ok(mb
            .parameters(flatten(self))
            .pin("sm.delta")
            .init(InitStrategy::NineBus(Box::new(NineBusInit {
                w0: self.p_load,
                values,
                power_flow: pf,
            }))))
    }
}

fn push_states(values: &mut Vec<(String, f64)>, block: &str, names: &[&str], xs: &[f64]) {
    for (n, v) in names.iter().zip(xs) {
        values.push((format!("{block}.{n}"), *v));
    }
}

fn push_current(values: &mut Vec<(String, f64)>, block: &str, i: Vec2) {
    values.push((format!("{block}.i_r"), i.0));
    values.push((format!("{block}.i_i"), i.1));
}

pub fn build_ninebus(p: &NineBusParams) -> Result<SystemModel> {
    build_ninebus_with(p, &NineBusOptions::default())
}

pub fn build_ninebus_with(p: &NineBusParams, opts: &NineBusOptions) -> Result<SystemModel> {
    p.builder(opts)?.build()
}
