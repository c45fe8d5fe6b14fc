use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::assembly::{Block, BlockCtx};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

/// Bus numbers in the data are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusData {
    pub kind: BusKind,
    pub v_set: f64,
    pub p_gen: f64,
    pub p_load: f64,
    pub q_load: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchData {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// total line charging
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkData {
    pub buses: Vec<BusData>,
    pub branches: Vec<BranchData>,
}

impl Default for NetworkData {
    fn default() -> Self {
        Self::wscc9()
    }
}

#[derive(Debug, Clone)]
pub struct PowerFlow {
    pub v: Vec<Complex64>,
    /// Net injection S = V·conj(Y V) per bus.
    pub s: Vec<Complex64>,
    pub iterations: usize,
    pub mismatch: f64,
}

impl PowerFlow {
    /// Generation at bus k (0-based) given the bus load and any extra load there.
    pub fn generation(&self, net: &NetworkData, k: usize, extra: &[(usize, f64)]) -> Complex64 {
        let b = &net.buses[k];
        let dp: f64 = extra.iter().filter(|e| e.0 == k).map(|e| e.1).sum();
        self.s[k] + Complex64::new(b.p_load + dp, b.q_load)
    }
}

impl NetworkData {
    pub fn wscc9() -> Self {
        let bus = |kind, v_set, p_gen, p_load, q_load| BusData {
            kind,
            v_set,
            p_gen,
            p_load,
            q_load,
        };
        let br = |from, to, r, x, b| BranchData { from, to, r, x, b };
        NetworkData {
            buses: vec![
                bus(BusKind::Slack, 1.04, 0.0, 0.0, 0.0),
                bus(BusKind::Pv, 1.025, 1.63, 0.0, 0.0),
                bus(BusKind::Pv, 1.025, 0.85, 0.0, 0.0),
                bus(BusKind::Pq, 1.0, 0.0, 0.0, 0.0),
                bus(BusKind::Pq, 1.0, 0.0, 1.25, 0.5),
                bus(BusKind::Pq, 1.0, 0.0, 0.9, 0.3),
                bus(BusKind::Pq, 1.0, 0.0, 0.0, 0.0),
                bus(BusKind::Pq, 1.0, 0.0, 1.0, 0.35),
                bus(BusKind::Pq, 1.0, 0.0, 0.0, 0.0),
            ],
            branches: vec![
                br(1, 4, 0.0, 0.0576, 0.0),
                br(4, 5, 0.01, 0.085, 0.176),
                br(5, 7, 0.032, 0.161, 0.306),
                br(4, 6, 0.017, 0.092, 0.158),
                br(6, 9, 0.039, 0.17, 0.358),
                br(7, 8, 0.0085, 0.072, 0.149),
                br(8, 9, 0.0119, 0.1008, 0.209),
                br(2, 7, 0.0, 0.0625, 0.0),
                br(3, 9, 0.0, 0.0586, 0.0),
            ],
        }
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_bus();
        if self.buses.iter().filter(|b| b.kind == BusKind::Slack).count() != 1 {
            return Err(Error::param("network.buses", "exactly one slack bus required"));
        }
        for (k, br) in self.branches.iter().enumerate() {
            if br.from == 0 || br.to == 0 || br.from > n || br.to > n || br.from == br.to {
                return Err(Error::param(format!("network.branches.{k}"), "bus index out of range"));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::param(format!("network.branches.{k}"), "zero impedance"));
            }
        }
        Ok(())
    }

    /// Bus admittance of the passive network (lines and charging only).
    pub fn admittance(&self) -> DMatrix<Complex64> {
        let n = self.n_bus();
        let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for br in &self.branches {
            let (a, b) = (br.from - 1, br.to - 1);
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
            let sh = Complex64::new(0.0, br.b / 2.0);
            y[(a, a)] += ys + sh;
            y[(b, b)] += ys + sh;
            y[(a, b)] -= ys;
            y[(b, a)] -= ys;
        }
        y
    }

    /// Admittance with the static loads folded in as constant impedances at `v`.
    pub fn admittance_with_loads(&self, v: &[Complex64]) -> DMatrix<Complex64> {
        let mut y = self.admittance();
        for (k, b) in self.buses.iter().enumerate() {
            y[(k, k)] += Complex64::new(b.p_load, -b.q_load) / v[k].norm_sqr();
        }
        y
    }

    /// Newton power flow. `extra` adds constant-power load (0-based bus, P) at unity power factor.
    pub fn power_flow(&self, extra: &[(usize, f64)]) -> Result<PowerFlow> {
        self.validate()?;
        let n = self.n_bus();
        let y = self.admittance();
        let mut p_spec = vec![0.0; n];
        let mut q_spec = vec![0.0; n];
        for (k, b) in self.buses.iter().enumerate() {
            p_spec[k] = b.p_gen - b.p_load;
            q_spec[k] = -b.q_load;
        }
        for &(k, p) in extra {
            if k >= n {
                return Err(Error::param("network", "extra load bus out of range"));
            }
            p_spec[k] -= p;
        }
        let ang: Vec<usize> = (0..n).filter(|&k| self.buses[k].kind != BusKind::Slack).collect();
        let mag: Vec<usize> = (0..n).filter(|&k| self.buses[k].kind == BusKind::Pq).collect();
        let mut vm: Vec<f64> = self
            .buses
            .iter()
            .map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v_set })
            .collect();
        let mut va = vec![0.0; n];
        let nz = ang.len() + mag.len();
        let mismatch = |vm: &[f64], va: &[f64]| -> DVector<f64> {
            let v: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(vm[k], va[k])).collect();
            let s = injections(&y, &v);
            let mut m = DVector::zeros(nz);
            for (r, &k) in ang.iter().enumerate() {
                m[r] = p_spec[k] - s[k].re;
            }
            for (r, &k) in mag.iter().enumerate() {
                m[ang.len() + r] = q_spec[k] - s[k].im;
            }
            m
        };
        let mut it = 0;
        let mut m = mismatch(&vm, &va);
        while m.amax() > 1e-12 {
            if it >= 30 {
                return Err(Error::PowerFlow {
                    iterations: it,
                    mismatch: m.amax(),
                });
            }
            let mut jac = DMatrix::zeros(nz, nz);
            for c in 0..nz {
                let h = 1e-7;
                let (mut a1, mut m1, mut a2, mut m2) = (va.clone(), vm.clone(), va.clone(), vm.clone());
                if c < ang.len() {
                    a1[ang[c]] += h;
                    a2[ang[c]] -= h;
                } else {
                    m1[mag[c - ang.len()]] += h;
                    m2[mag[c - ang.len()]] -= h;
                }
                let col = (mismatch(&m1, &a1) - mismatch(&m2, &a2)) / (2.0 * h);
                jac.set_column(c, &col);
            }
            let dz = jac.lu().solve(&m).ok_or(Error::PowerFlow {
                iterations: it,
                mismatch: m.amax(),
            })?;
            for (r, &k) in ang.iter().enumerate() {
                va[k] -= dz[r];
            }
            for (r, &k) in mag.iter().enumerate() {
                vm[k] -= dz[ang.len() + r];
            }
            m = mismatch(&vm, &va);
            it += 1;
            if !m.amax().is_finite() {
                return Err(Error::PowerFlow {
                    iterations: it,
                    mismatch: f64::INFINITY,
                });
            }
        }
        let v: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(vm[k], va[k])).collect();
        let s = injections(&y, &v);
        Ok(PowerFlow {
            v,
            s,
            iterations: it,
            mismatch: m.amax(),
        })
    }

    /// Linear network solve with the slack bus held at `v_slack`:
    /// Y_rr V_r = I_r − Y_rs V_s. `y` is the admittance to use (loads folded in or not).
    pub fn solve_voltages(
        &self,
        y: &DMatrix<Complex64>,
        v_slack: Complex64,
        injections: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let n = self.n_bus();
        if injections.len() != n {
            return Err(Error::Dimension {
                what: "bus injections".into(),
                expected: n,
                got: injections.len(),
            });
        }
        let s = self
            .buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .ok_or_else(|| Error::param("network.buses", "no slack bus"))?;
        let rest: Vec<usize> = (0..n).filter(|&k| k != s).collect();
        let m = rest.len();
        let yrr = DMatrix::from_fn(m, m, |a, b| y[(rest[a], rest[b])]);
        let rhs = DVector::from_fn(m, |a, _| injections[rest[a]] - y[(rest[a], s)] * v_slack);
        let lu = yrr.clone().lu();
        let sol = lu.solve(&rhs).ok_or_else(|| singular_bus(&yrr, &rest))?;
        let mut v = vec![v_slack; n];
        for (a, &k) in rest.iter().enumerate() {
            v[k] = sol[a];
        }
        Ok(v)
    }
}

fn singular_bus(y: &DMatrix<Complex64>, rest: &[usize]) -> Error {
    let k = (0..y.nrows())
        .min_by(|&a, &b| y.row(a).norm().total_cmp(&y.row(b).norm()))
        .unwrap_or(0);
    Error::Singular {
        context: "network admittance".into(),
        variable: format!("bus {}", rest[k] + 1),
    }
}

pub fn injections(y: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let i: Complex64 = (0..n).map(|j| y[(k, j)] * v[j]).sum();
            v[k] * i.conj()
        })
        .collect()
}

/// Current injected at a bus by a device, times `scale`.
#[derive(Debug, Clone)]
pub struct NetPort {
    /// 0-based bus
    pub bus: usize,
    pub current: [String; 2],
    pub scale: f64,
}

/// Kirchhoff residual Y V − Σ I = 0; algebraics v_r1, v_i1, …, v_rN, v_iN.
#[derive(Debug, Clone)]
pub struct NetworkBlock {
    pub name: String,
    pub y: DMatrix<Complex64>,
    pub ports: Vec<NetPort>,
}

impl Block for NetworkBlock {
    fn name(&self) -> &str {
        &self.name
    }
    fn state_names(&self) -> Vec<String> {
        Vec::new()
    }
    fn algebraic_names(&self) -> Vec<String> {
        (1..=self.y.nrows())
            .flat_map(|k| [format!("v_r{k}"), format!("v_i{k}")])
            .collect()
    }
    fn input_names(&self) -> Vec<String> {
        self.ports.iter().flat_map(|p| p.current.clone()).collect()
    }
    fn eval(&self, cx: &BlockCtx, _dx: &mut [f64], g: &mut [f64]) -> Result<()> {
        let n = self.y.nrows();
        for k in 0..n {
            let mut i = Complex64::new(0.0, 0.0);
            for j in 0..n {
                i += self.y[(k, j)] * Complex64::new(cx.y[2 * j], cx.y[2 * j + 1]);
            }
            g[2 * k] = i.re;
            g[2 * k + 1] = i.im;
        }
        for (p, u) in self.ports.iter().zip(cx.u.chunks(2)) {
            g[2 * p.bus] -= p.scale * u[0];
            g[2 * p.bus + 1] -= p.scale * u[1];
        }
        Ok(())
    }
}
