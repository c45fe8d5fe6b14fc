//! Composite DAE assembly: dx/dt = f(x, y, w), 0 = g(x, y, w).

use std::collections::HashMap;
use std::fmt;

use crate::{Error, Result};

mod ninebus;
mod sdcib;

pub use ninebus::{build_ninebus, build_ninebus_with, NineBusInit, NineBusOptions, NineBusParams};
pub use sdcib::{build_sdcib, SdcibParams};

/// Reference to a global variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    Y(usize),
}

/// Local view handed to a block during evaluation.
pub struct BlockCtx<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    /// Resolved inputs in the order of [`Block::input_names`].
    pub u: &'a [f64],
    pub w: f64,
}

/// One device model. Differential residuals are explicit dx/dt; algebraic
/// residuals are written as g = y − expr so that g = 0 at consistency.
pub trait Block: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn state_names(&self) -> Vec<String>;
    fn algebraic_names(&self) -> Vec<String>;
    /// Qualified `block.var` names this block reads.
    fn input_names(&self) -> Vec<String>;
    fn eval(&self, cx: &BlockCtx, dx: &mut [f64], g: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSlot {
    pub name: String,
    pub x_off: usize,
    pub nx: usize,
    pub y_off: usize,
    pub ny: usize,
    pub inputs: Vec<Var>,
}

/// Offsets of every block into x and y plus a name lookup.
#[derive(Debug, Clone, Default)]
pub struct IndexMap {
    pub slots: Vec<BlockSlot>,
    x_names: Vec<String>,
    y_names: Vec<String>,
    lookup: HashMap<String, Var>,
}

impl IndexMap {
    pub fn n_x(&self) -> usize {
        self.x_names.len()
    }

    pub fn n_y(&self) -> usize {
        self.y_names.len()
    }

    pub fn get(&self, qualified: &str) -> Option<Var> {
        self.lookup.get(qualified).copied()
    }

    pub fn x_index(&self, qualified: &str) -> Option<usize> {
        match self.get(qualified) {
            Some(Var::X(i)) => Some(i),
            _ => None,
        }
    }

    pub fn y_index(&self, qualified: &str) -> Option<usize> {
        match self.get(qualified) {
            Some(Var::Y(i)) => Some(i),
            _ => None,
        }
    }

    pub fn x_names(&self) -> &[String] {
        &self.x_names
    }

    pub fn y_names(&self) -> &[String] {
        &self.y_names
    }

    pub fn name_of(&self, v: Var) -> &str {
        match v {
            Var::X(i) => &self.x_names[i],
            Var::Y(i) => &self.y_names[i],
        }
    }

    pub fn slot(&self, block: &str) -> Option<&BlockSlot> {
        self.slots.iter().find(|s| s.name == block)
    }

    /// Serialize a state vector as (name, value) pairs.
    pub fn to_named(&self, x: &[f64]) -> Vec<(String, f64)> {
        self.x_names.iter().cloned().zip(x.iter().copied()).collect()
    }

    /// Rebuild a state vector from (name, value) pairs; every state must be present.
    pub fn from_named(&self, pairs: &[(String, f64)]) -> Result<Vec<f64>> {
        let mut x = vec![f64::NAN; self.n_x()];
        for (k, v) in pairs {
            match self.get(k) {
                Some(Var::X(i)) => x[i] = *v,
                _ => return Err(Error::UnknownSignal(k.clone())),
            }
        }
        if let Some(i) = x.iter().position(|v| v.is_nan()) {
            return Err(Error::UnknownSignal(format!("missing value for {}", self.x_names[i])));
        }
        Ok(x)
    }
}

/// Active power p = s·(v · i) from two 2-vectors of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputChannel {
    pub name: String,
    pub v: [Var; 2],
    pub i: [Var; 2],
    pub scale: f64,
}

impl OutputChannel {
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let get = |v: Var| match v {
            Var::X(k) => x[k],
            Var::Y(k) => y[k],
        };
        self.scale * (get(self.v[0]) * get(self.i[0]) + get(self.v[1]) * get(self.i[1]))
    }
}

/// How [`crate::equilibrium::initial_guess`] seeds Newton.
#[derive(Debug, Clone)]
pub enum InitStrategy {
    Sdcib(Box<SdcibParams>),
    NineBus(Box<NineBusInit>),
    Flat,
}

/// Assembled composite model. Immutable after build.
#[derive(Debug)]
pub struct SystemModel {
    pub name: String,
    blocks: Vec<Box<dyn Block>>,
    pub index: IndexMap,
    pub outputs: Vec<OutputChannel>,
    /// Extra power signals recorded in traces but not linearized.
    pub probes: Vec<OutputChannel>,
    /// Effective parameters, flattened to dotted names.
    pub parameters: Vec<(String, f64)>,
    pub init: InitStrategy,
    /// States pinned during equilibrium solves (rotational symmetry).
    pub pinned: Vec<usize>,
    max_inputs: usize,
}

pub struct ModelBuilder {
    name: String,
    blocks: Vec<Box<dyn Block>>,
    outputs: Vec<(String, [String; 2], [String; 2], f64)>,
    probes: Vec<(String, [String; 2], [String; 2], f64)>,
    parameters: Vec<(String, f64)>,
    init: InitStrategy,
    pinned: Vec<String>,
}

impl ModelBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        ModelBuilder {
            name: name.into(),
            blocks: Vec::new(),
            outputs: Vec::new(),
            probes: Vec::new(),
            parameters: Vec::new(),
            init: InitStrategy::Flat,
            pinned: Vec::new(),
        }
    }

    pub fn block(mut self, b: impl Block + 'static) -> Self {
        self.blocks.push(Box::new(b));
        self
    }

    pub fn boxed(mut self, b: Box<dyn Block>) -> Self {
        self.blocks.push(b);
        self
    }

    /// Drop a block by name (for variant studies).
    pub fn without(mut self, name: &str) -> Self {
        self.blocks.retain(|b| b.name() != name);
        self
    }

    pub fn output(mut self, name: &str, v: [&str; 2], i: [&str; 2], scale: f64) -> Self {
        self.outputs.push((
            name.to_string(),
            [v[0].to_string(), v[1].to_string()],
            [i[0].to_string(), i[1].to_string()],
            scale,
        ));
        self
    }

    pub fn probe(mut self, name: &str, v: [&str; 2], i: [&str; 2], scale: f64) -> Self {
        self.probes.push((
            name.to_string(),
            [v[0].to_string(), v[1].to_string()],
            [i[0].to_string(), i[1].to_string()],
            scale,
        ));
        self
    }

    pub fn parameters(mut self, p: Vec<(String, f64)>) -> Self {
        self.parameters = p;
        self
    }

    pub fn init(mut self, s: InitStrategy) -> Self {
        self.init = s;
        self
    }

    pub fn pin(mut self, state: &str) -> Self {
        self.pinned.push(state.to_string());
        self
    }

    pub fn block_names(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.name().to_string()).collect()
    }

    pub fn build(self) -> Result<SystemModel> {
        let mut index = IndexMap::default();
        for b in &self.blocks {
            if index.slots.iter().any(|s| s.name == b.name()) {
                return Err(Error::DuplicateBlock(b.name().to_string()));
            }
            let xs = b.state_names();
            let ys = b.algebraic_names();
            let slot = BlockSlot {
                name: b.name().to_string(),
                x_off: index.x_names.len(),
                nx: xs.len(),
                y_off: index.y_names.len(),
                ny: ys.len(),
                inputs: Vec::new(),
            };
            for (k, n) in xs.iter().enumerate() {
                let q = format!("{}.{}", b.name(), n);
                index.lookup.insert(q.clone(), Var::X(slot.x_off + k));
                index.x_names.push(q);
            }
            for (k, n) in ys.iter().enumerate() {
                let q = format!("{}.{}", b.name(), n);
                index.lookup.insert(q.clone(), Var::Y(slot.y_off + k));
                index.y_names.push(q);
            }
            index.slots.push(slot);
        }
        let mut max_inputs = 0;
        for (b, k) in self.blocks.iter().zip(0..) {
            let names = b.input_names();
            let mut resolved = Vec::with_capacity(names.len());
            for n in names {
                match index.get(&n) {
                    Some(v) => resolved.push(v),
                    None => {
                        return Err(Error::MissingCoupling {
                            block: b.name().to_string(),
                            input: n,
                        })
                    }
                }
            }
            max_inputs = max_inputs.max(resolved.len());
            index.slots[k].inputs = resolved;
        }
        let resolve = |n: &str| {
            index.get(n).ok_or_else(|| Error::MissingCoupling {
                block: "outputs".into(),
                input: n.to_string(),
            })
        };
        let channels = |list: &[(String, [String; 2], [String; 2], f64)]| -> Result<Vec<OutputChannel>> {
            let mut out = Vec::new();
            for (name, v, i, scale) in list {
                out.push(OutputChannel {
                    name: name.clone(),
                    v: [resolve(&v[0])?, resolve(&v[1])?],
                    i: [resolve(&i[0])?, resolve(&i[1])?],
                    scale: *scale,
                });
            }
            Ok(out)
        };
        let outputs = channels(&self.outputs)?;
        let probes = channels(&self.probes)?;
        let mut pinned = Vec::new();
        for p in &self.pinned {
            match index.get(p) {
                Some(Var::X(k)) => pinned.push(k),
                _ => return Err(Error::UnknownSignal(p.clone())),
            }
        }
        Ok(SystemModel {
            name: self.name,
            blocks: self.blocks,
            index,
            outputs,
            probes,
            parameters: self.parameters,
            init: self.init,
            pinned,
            max_inputs,
        })
    }
}

impl SystemModel {
    pub fn n_x(&self) -> usize {
        self.index.n_x()
    }

    pub fn n_y(&self) -> usize {
        self.index.n_y()
    }

    pub fn block_names(&self) -> Vec<&str> {
        self.blocks.iter().map(|b| b.name()).collect()
    }

    /// Evaluate f and g. Deterministic and side-effect free.
    pub fn eval(&self, x: &[f64], y: &[f64], w: f64, f: &mut [f64], g: &mut [f64]) -> Result<()> {
        self.check_dims(x, y)?;
        if f.len() != self.n_x() || g.len() != self.n_y() {
            return Err(Error::Dimension {
                what: "residual buffers".into(),
                expected: self.n_x() + self.n_y(),
                got: f.len() + g.len(),
            });
        }
        let mut u = vec![0.0; self.max_inputs];
        for (b, s) in self.blocks.iter().zip(&self.index.slots) {
            for (dst, v) in u.iter_mut().zip(&s.inputs) {
                *dst = match *v {
                    Var::X(k) => x[k],
                    Var::Y(k) => y[k],
                };
            }
            let cx = BlockCtx {
                x: &x[s.x_off..s.x_off + s.nx],
                y: &y[s.y_off..s.y_off + s.ny],
                u: &u[..s.inputs.len()],
                w,
            };
            b.eval(
                &cx,
                &mut f[s.x_off..s.x_off + s.nx],
                &mut g[s.y_off..s.y_off + s.ny],
            )?;
        }
        Ok(())
    }

    /// Convenience allocation wrapper around [`SystemModel::eval`].
    pub fn residuals(&self, x: &[f64], y: &[f64], w: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut f = vec![0.0; self.n_x()];
        let mut g = vec![0.0; self.n_y()];
        self.eval(x, y, w, &mut f, &mut g)?;
        Ok((f, g))
    }

    pub fn output_values(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.outputs.iter().map(|o| o.eval(x, y)).collect()
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o.name == name)
    }

    /// Blocks whose residuals can depend on `v`: the owner plus every reader.
    pub fn dependents(&self, v: Var) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, s) in self.index.slots.iter().enumerate() {
            let owns = match v {
                Var::X(i) => i >= s.x_off && i < s.x_off + s.nx,
                Var::Y(i) => i >= s.y_off && i < s.y_off + s.ny,
            };
            if owns || s.inputs.contains(&v) {
                out.push(k);
            }
        }
        out
    }

    fn check_dims(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.n_x() {
            return Err(Error::Dimension {
                what: "state vector".into(),
                expected: self.n_x(),
                got: x.len(),
            });
        }
        if y.len() != self.n_y() {
            return Err(Error::Dimension {
                what: "algebraic vector".into(),
                expected: self.n_y(),
                got: y.len(),
            });
        }
        Ok(())
    }
}

/// Reject non-positive divisors with a named error.
pub(crate) fn positive(block: &str, variable: &str, value: f64, reason: &'static str) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            block: block.to_string(),
            variable: variable.to_string(),
            value,
            reason,
        })
    }
}
