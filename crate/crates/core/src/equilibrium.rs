//! Operating point: damped Newton on [f; g] = 0.

use nalgebra::{DMatrix, DVector};

use crate::assembly::{InitStrategy, SystemModel, Var};
use crate::dcchain::{steady_state, PccSource};
use crate::linalg::null_direction;
use crate::smallsignal::{stacked_jacobian, FdStep};
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub w0: f64,
    pub f_norm: f64,
    pub g_norm: f64,
    pub iterations: usize,
    pub tol: f64,
    /// ∞-norm of [f; g] after each iteration, starting with the guess
    pub history: Vec<f64>,
}

impl OperatingPoint {
    pub fn x_named(&self, model: &SystemModel) -> Vec<(String, f64)> {
        model.index.to_named(&self.x0)
    }

    pub fn y_named(&self, model: &SystemModel) -> Vec<(String, f64)> {
        model.index.y_names().iter().cloned().zip(self.y0.iter().copied()).collect()
    }

    pub fn get(&self, model: &SystemModel, name: &str) -> Option<f64> {
        match model.index.get(name)? {
            Var::X(i) => Some(self.x0[i]),
            Var::Y(i) => Some(self.y0[i]),
        }
    }

    pub fn outputs(&self, model: &SystemModel) -> Vec<f64> {
        model.output_values(&self.x0, &self.y0)
    }
}

/// Closed-form starting point. Names the model does not own are ignored;
/// anything not covered starts at zero.
pub fn initial_guess(model: &SystemModel, w0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = vec![0.0; model.n_x()];
    let mut y = vec![0.0; model.n_y()];
    let values: Vec<(String, f64)> = match &model.init {
        InitStrategy::Sdcib(p) => {
            let ss = steady_state(&p.dcchain, &p.base, w0, PccSource::InfiniteBus(p.grid))?;
            let mut v = ss.values;
            v.push(("grid.v_r".into(), ss.v_pcc_ri.0));
            v.push(("grid.v_i".into(), ss.v_pcc_ri.1));
            v
        }
        InitStrategy::NineBus(init) => init.values.clone(),
        InitStrategy::Flat => Vec::new(),
    };
    for (k, v) in values {
        match model.index.get(&k) {
            Some(Var::X(i)) => x[i] = v,
            Some(Var::Y(i)) => y[i] = v,
            None => {}
        }
    }
    Ok((x, y))
}

/// Newton from the closed-form guess. Nine-bus setpoints come from a power
/// flow at the build load; other loads have no fixed-frame equilibrium.
pub fn solve_equilibrium(model: &SystemModel, w0: f64, tol: f64, max_iter: usize) -> Result<OperatingPoint> {
    if let InitStrategy::NineBus(init) = &model.init {
        if (init.w0 - w0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "nine-bus setpoints are dispatched for p_load = {}; rebuild with p_load = {w0}",
                init.w0
            )));
        }
    }
    let (x, y) = initial_guess(model, w0)?;
    solve_equilibrium_from(model, w0, x, y, tol, max_iter)
}

pub fn solve_default(model: &SystemModel, w0: f64) -> Result<OperatingPoint> {
    solve_equilibrium(model, w0, DEFAULT_TOL, DEFAULT_MAX_ITER)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b.abs()) })
}

/// Newton from a given guess. States listed in `model.pinned` stay fixed and
/// the step is taken in the least-squares sense.
pub fn solve_equilibrium_from(
    model: &SystemModel,
    w0: f64,
    mut x: Vec<f64>,
    mut y: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<OperatingPoint> {
    let (nx, ny) = (model.n_x(), model.n_y());
    let free: Vec<usize> = (0..nx + ny).filter(|c| !model.pinned.contains(c)).collect();
    let names: Vec<&str> = model
        .index
        .x_names()
        .iter()
        .chain(model.index.y_names())
        .map(|s| s.as_str())
        .collect();

    let (mut f, mut g) = model.residuals(&x, &y, w0)?;
    let mut history = vec![inf_norm(&f).max(inf_norm(&g))];
    let mut it = 0;
    loop {
        let (fn_, gn) = (inf_norm(&f), inf_norm(&g));
        if fn_ <= tol && gn <= tol {
            return Ok(OperatingPoint {
                x0: x,
                y0: y,
                w0,
                f_norm: fn_,
                g_norm: gn,
                iterations: it,
                tol,
                history,
            });
        }
        if it >= max_iter || !fn_.is_finite() || !gn.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                f_norm: fn_,
                g_norm: gn,
            });
        }
        let full = stacked_jacobian(model, &x, &y, w0, FdStep::default())?;
        let jac = DMatrix::from_fn(nx + ny, free.len(), |r, c| full[(r, free[c])]);
        let rhs = DVector::from_iterator(nx + ny, f.iter().chain(g.iter()).map(|v| -v));
        let dz = if free.len() == nx + ny {
            match jac.clone().lu().solve(&rhs) {
                Some(d) if d.iter().all(|v| v.is_finite()) => d,
                _ => {
                    let (k, _) = null_direction(&jac);
                    return Err(Error::Singular {
                        context: "equilibrium Jacobian".into(),
                        variable: names[free[k]].to_string(),
                    });
                }
            }
        } else {
            let svd = jac.clone().svd(true, true);
            let smax = svd.singular_values.max();
            svd.solve(&rhs, 1e-13 * smax).map_err(|e| Error::Eigen(e.to_string()))?
        };

        let merit = |f: &[f64], g: &[f64]| f.iter().chain(g).map(|v| v * v).sum::<f64>();
        let m0 = merit(&f, &g);
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let (mut xt, mut yt) = (x.clone(), y.clone());
            for (c, &col) in free.iter().enumerate() {
                if col < nx {
                    xt[col] += lam * dz[c];
                } else {
                    yt[col - nx] += lam * dz[c];
                }
            }
            if let Ok((ft, gt)) = model.residuals(&xt, &yt, w0) {
                let m1 = merit(&ft, &gt);
                if m1.is_finite() && (m1 <= (1.0 - 1e-4 * lam) * m0 || m1 < (tol * tol)) {
                    x = xt;
                    y = yt;
                    f = ft;
                    g = gt;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        it += 1;
        if !accepted {
            return Err(Error::NonConvergence {
                iterations: it,
                f_norm: inf_norm(&f),
                g_norm: inf_norm(&g),
            });
        }
        history.push(inf_norm(&f).max(inf_norm(&g)));
    }
}
