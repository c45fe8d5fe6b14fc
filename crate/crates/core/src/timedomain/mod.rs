//! Fixed-step trapezoidal integration of the composite DAE and FFT post-processing.

mod input;
mod spectrum;

pub use input::InputSignal;
pub(crate) use input::interpolate;
pub use spectrum::{amplitude_spectrum, fit_sinusoid, spectrum, SinusoidFit, Spectrum};

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::assembly::SystemModel;
use crate::equilibrium::OperatingPoint;
use crate::smallsignal::{stacked_jacobian, FdStep};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
    /// keep every n-th step in the trace
    pub record_stride: usize,
    /// Newton tolerance on the scaled step residual
    pub tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
}

impl SimOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        SimOptions {
            t_end,
            dt,
            record_stride: 1,
            tol: 1e-10,
            max_newton: 8,
            max_halvings: 12,
        }
    }

    pub fn reduced(t_end: f64) -> Self {
        Self::new(t_end, 1e-3)
    }

    pub fn full_order(t_end: f64) -> Self {
        Self::new(t_end, 50e-6)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub jacobian_updates: usize,
    pub halvings: usize,
    /// largest |g| at an accepted step
    pub max_algebraic_residual: f64,
}

/// Column-major trace: `t` plus one column per named signal.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub names: Vec<String>,
    pub data: Vec<Vec<f64>>,
    pub stats: SimStats,
}

impl SimTrace {
    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.data[k].as_slice())
            .ok_or_else(|| Error::UnknownSignal(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Final state vector, in model order.
    pub fn last_state(&self, model: &SystemModel) -> Result<Vec<f64>> {
        model
            .index
            .x_names()
            .iter()
            .map(|n| self.column(n).map(|c| *c.last().unwrap_or(&f64::NAN)))
            .collect()
    }
}

fn signal_names(model: &SystemModel) -> Vec<String> {
    let mut names = vec!["w".to_string()];
    names.extend(model.index.x_names().iter().cloned());
    names.extend(model.index.y_names().iter().cloned());
    names.extend(model.outputs.iter().map(|o| o.name.clone()));
    names.extend(model.probes.iter().map(|o| o.name.clone()));
    names
}

fn record(model: &SystemModel, data: &mut [Vec<f64>], x: &[f64], y: &[f64], w: f64) {
    let mut k = 0;
    let mut push = |v: f64| {
        data[k].push(v);
        k += 1;
    };
    push(w);
    x.iter().for_each(|&v| push(v));
    y.iter().for_each(|&v| push(v));
    model.outputs.iter().for_each(|o| push(o.eval(x, y)));
    model.probes.iter().for_each(|o| push(o.eval(x, y)));
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, b| if b.is_finite() { a.max(b.abs()) } else { f64::INFINITY })
}

struct Stepper<'a> {
    model: &'a SystemModel,
    nx: usize,
    ny: usize,
    lu: Option<(LU<f64, Dyn, Dyn>, f64)>,
    stats: SimStats,
    opts: SimOptions,
}

impl<'a> Stepper<'a> {
    /// Factor [[I − h/2 f_x, −h/2 f_y], [g_x, g_y]] at (x, y, w).
    fn refresh(&mut self, x: &[f64], y: &[f64], w: f64, h: f64) -> Result<()> {
        let j = stacked_jacobian(self.model, x, y, w, FdStep::default())?;
        let n = self.nx + self.ny;
        let m = DMatrix::from_fn(n, n, |r, c| {
            if r < self.nx {
                let id = if r == c { 1.0 } else { 0.0 };
                id - 0.5 * h * j[(r, c)]
            } else {
                j[(r, c)]
            }
        });
        self.lu = Some((m.lu(), h));
        self.stats.jacobian_updates += 1;
        Ok(())
    }

    /// One trapezoidal step of size h from (x, y) with f(x, y, w0) = f0.
    /// Returns None if Newton failed even after a fresh Jacobian.
    fn step(&mut self, x: &[f64], y: &[f64], f0: &[f64], w1: f64, h: f64) -> Result<Option<(Vec<f64>, Vec<f64>, Vec<f64>)>> {
        let (nx, ny) = (self.nx, self.ny);
        for attempt in 0..2 {
            let stale = match &self.lu {
                Some((_, hh)) => (*hh - h).abs() > 1e-9 * h,
                None => true,
            };
            if stale || attempt == 1 {
                self.refresh(x, y, w1, h)?;
            }
            // explicit predictor
            let mut xn: Vec<f64> = x.iter().zip(f0).map(|(a, b)| a + h * b).collect();
            let mut yn = y.to_vec();
            if attempt == 1 {
                xn.copy_from_slice(x);
            }
            let mut f1 = vec![0.0; nx];
            let mut g1 = vec![0.0; ny];
            let mut prev = f64::INFINITY;
            for _ in 0..self.opts.max_newton {
                self.stats.newton_iterations += 1;
                if self.model.eval(&xn, &yn, w1, &mut f1, &mut g1).is_err() {
                    break;
                }
                let r = DVector::from_iterator(
                    nx + ny,
                    (0..nx)
                        .map(|i| xn[i] - x[i] - 0.5 * h * (f1[i] + f0[i]))
                        .chain(g1.iter().copied()),
                );
                let rn = inf_norm(r.as_slice());
                if !rn.is_finite() || rn > 1e3 * prev.max(1e-6) {
                    break;
                }
                let dz = match self.lu.as_ref().and_then(|(lu, _)| lu.solve(&r)) {
                    Some(d) => d,
                    None => break,
                };
                for i in 0..nx {
                    xn[i] -= dz[i];
                }
                for i in 0..ny {
                    yn[i] -= dz[nx + i];
                }
                let dn = inf_norm(dz.as_slice());
                let scale = 1.0 + inf_norm(&xn).max(inf_norm(&yn));
                if dn <= self.opts.tol * scale {
                    if self.model.eval(&xn, &yn, w1, &mut f1, &mut g1).is_err() {
                        break;
                    }
                    let gn = inf_norm(&g1);
                    if gn <= 1e-8 {
                        self.stats.max_algebraic_residual = self.stats.max_algebraic_residual.max(gn);
                        return Ok(Some((xn, yn, f1)));
                    }
                }
                prev = rn;
            }
        }
        Ok(None)
    }
}

/// Make the algebraics consistent with x at input w.
fn consistent_algebraics(model: &SystemModel, x: &[f64], y: &mut [f64], w: f64) -> Result<()> {
    let (nx, ny) = (model.n_x(), model.n_y());
    if ny == 0 {
        return Ok(());
    }
    for _ in 0..30 {
        let (_, g) = model.residuals(x, y, w)?;
        if inf_norm(&g) <= 1e-12 {
            return Ok(());
        }
        let j = stacked_jacobian(model, x, y, w, FdStep::default())?;
        let gy = j.view((nx, nx), (ny, ny)).into_owned();
        let d = gy.lu().solve(&DVector::from_column_slice(&g)).ok_or_else(|| Error::Singular {
            context: "g_y at t = 0".into(),
            variable: String::new(),
        })?;
        for i in 0..ny {
            y[i] -= d[i];
        }
    }
    let (_, g) = model.residuals(x, y, w)?;
    if inf_norm(&g) <= 1e-8 {
        Ok(())
    } else {
        Err(Error::Integration {
            t: 0.0,
            reason: format!("inconsistent algebraics at start (|g| = {:.3e})", inf_norm(&g)),
        })
    }
}

pub fn simulate(model: &SystemModel, op: &OperatingPoint, input: &InputSignal, opts: &SimOptions) -> Result<SimTrace> {
    simulate_from(model, &op.x0, &op.y0, input, opts)
}

/// Trapezoidal integration starting at (x0, y0); the algebraics are first
/// made consistent with the input at t = 0.
pub fn simulate_from(model: &SystemModel, x0: &[f64], y0: &[f64], input: &InputSignal, opts: &SimOptions) -> Result<SimTrace> {
    input.validate()?;
    if !(opts.dt > 0.0) || !(opts.t_end > 0.0) || opts.record_stride == 0 {
        return Err(Error::param("simulate", "dt, t_end must be > 0 and stride >= 1"));
    }
    let (nx, ny) = (model.n_x(), model.n_y());
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut w = input.value(0.0);
    consistent_algebraics(model, &x, &mut y, w)?;
    let names = signal_names(model);
    let mut data = vec![Vec::new(); names.len()];
    let mut t_rec = Vec::new();
    record(model, &mut data, &x, &y, w);
    t_rec.push(0.0);

    let mut st = Stepper {
        model,
        nx,
        ny,
        lu: None,
        stats: SimStats::default(),
        opts: *opts,
    };
    let n_steps = (opts.t_end / opts.dt).round() as usize;
    let (mut f, _) = model.residuals(&x, &y, w)?;
    for k in 0..n_steps {
        let t0 = k as f64 * opts.dt;
        let t1 = (k + 1) as f64 * opts.dt;
        // substeps on failure
        let mut t = t0;
        let mut h = opts.dt;
        let mut halvings = 0;
        while t < t1 - 1e-12 * opts.dt {
            let h_eff = if t + h >= t1 - 1e-9 * opts.dt { t1 - t } else { h };
            let w1 = input.value(t + h_eff);
            match st.step(&x, &y, &f, w1, h_eff)? {
                Some((xn, yn, fn_)) => {
                    x = xn;
                    y = yn;
                    f = fn_;
                    w = w1;
                    t += h_eff;
                    st.stats.steps += 1;
                }
                None => {
                    halvings += 1;
                    st.stats.halvings += 1;
                    if halvings > opts.max_halvings {
                        return Err(Error::Integration {
                            t,
                            reason: format!("Newton failed after {} step halvings (last accepted t = {t:.6})", opts.max_halvings),
                        });
                    }
                    h *= 0.5;
                }
            }
        }
        if (k + 1) % opts.record_stride == 0 {
            if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
                return Err(Error::Integration {
                    t: t1,
                    reason: "non-finite state".into(),
                });
            }
            record(model, &mut data, &x, &y, w);
            t_rec.push(t1);
        }
    }
    Ok(SimTrace {
        t: t_rec,
        names,
        data,
        stats: st.stats,
    })
}
