//! Linearization, reduction to state space, modal analysis, POA, sweeps.

mod modal;
mod poa;
mod sweep;

pub use modal::{modal_analysis, ModalReport, Mode};
pub use poa::{
    log_grid, modal_poa_decomposition, multiport_poa, poa, poa_default, transfer, ModalPoa, Peak,
    PoaCurve,
};
pub use sweep::{mac, sweep, SweepPoint, SweepResult};

use nalgebra::{DMatrix, DVector};

use crate::assembly::SystemModel;
use crate::equilibrium::OperatingPoint;
use crate::linalg::null_direction;
use crate::{Error, Result};

/// Central-difference step h_i = max(abs, rel·|z_i|).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdStep {
    pub rel: f64,
    pub abs: f64,
}

impl Default for FdStep {
    fn default() -> Self {
        FdStep { rel: 1e-6, abs: 1e-6 }
    }
}

impl FdStep {
    pub fn h(&self, z: f64) -> f64 {
        self.abs.max(self.rel * z.abs())
    }

    pub fn scaled(&self, k: f64) -> Self {
        FdStep {
            rel: self.rel * k,
            abs: self.abs * k,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Jacobians {
    pub fx: DMatrix<f64>,
    pub fy: DMatrix<f64>,
    pub fw: DVector<f64>,
    pub gx: DMatrix<f64>,
    pub gy: DMatrix<f64>,
    pub gw: DVector<f64>,
    pub hx: DMatrix<f64>,
    pub hy: DMatrix<f64>,
    pub hw: DVector<f64>,
}

/// ∂[f; g]/∂[x; y] by central differences, one column per variable.
pub fn stacked_jacobian(model: &SystemModel, x: &[f64], y: &[f64], w: f64, step: FdStep) -> Result<DMatrix<f64>> {
    let (nx, ny) = (model.n_x(), model.n_y());
    let n = nx + ny;
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    let mut yp = y.to_vec();
    let (mut f1, mut g1) = (vec![0.0; nx], vec![0.0; ny]);
    let (mut f2, mut g2) = (vec![0.0; nx], vec![0.0; ny]);
    for c in 0..n {
        let z = if c < nx { x[c] } else { y[c - nx] };
        let h = step.h(z);
        let set = |xp: &mut Vec<f64>, yp: &mut Vec<f64>, v: f64| {
            if c < nx {
                xp[c] = v
            } else {
                yp[c - nx] = v
            }
        };
        set(&mut xp, &mut yp, z + h);
        model.eval(&xp, &yp, w, &mut f1, &mut g1)?;
        set(&mut xp, &mut yp, z - h);
        model.eval(&xp, &yp, w, &mut f2, &mut g2)?;
        set(&mut xp, &mut yp, z);
        let inv = 1.0 / (2.0 * h);
        for r in 0..nx {
            jac[(r, c)] = (f1[r] - f2[r]) * inv;
        }
        for r in 0..ny {
            jac[(nx + r, c)] = (g1[r] - g2[r]) * inv;
        }
    }
    Ok(jac)
}

pub fn jacobians(model: &SystemModel, op: &OperatingPoint) -> Result<Jacobians> {
    jacobians_with(model, &op.x0, &op.y0, op.w0, FdStep::default())
}

pub fn jacobians_with(model: &SystemModel, x: &[f64], y: &[f64], w: f64, step: FdStep) -> Result<Jacobians> {
    let (nx, ny) = (model.n_x(), model.n_y());
    let m = model.outputs.len();
    let j = stacked_jacobian(model, x, y, w, step)?;
    let h = step.h(w);
    let (fp, gp) = model.residuals(x, y, w + h)?;
    let (fm, gm) = model.residuals(x, y, w - h)?;
    let fw = DVector::from_fn(nx, |r, _| (fp[r] - fm[r]) / (2.0 * h));
    let gw = DVector::from_fn(ny, |r, _| (gp[r] - gm[r]) / (2.0 * h));

    let mut hx = DMatrix::zeros(m, nx);
    let mut hy = DMatrix::zeros(m, ny);
    let mut xp = x.to_vec();
    let mut yp = y.to_vec();
    for c in 0..nx + ny {
        let z = if c < nx { x[c] } else { y[c - nx] };
        let hh = step.h(z);
        let mut at = |v: f64| {
            if c < nx {
                xp[c] = v;
            } else {
                yp[c - nx] = v;
            }
            model.output_values(&xp, &yp)
        };
        let op = at(z + hh);
        let om = at(z - hh);
        at(z);
        for r in 0..m {
            let d = (op[r] - om[r]) / (2.0 * hh);
            if c < nx {
                hx[(r, c)] = d;
            } else {
                hy[(r, c - nx)] = d;
            }
        }
    }
    Ok(Jacobians {
        fx: j.view((0, 0), (nx, nx)).into_owned(),
        fy: j.view((0, nx), (nx, ny)).into_owned(),
        fw,
        gx: j.view((nx, 0), (ny, nx)).into_owned(),
        gy: j.view((nx, nx), (ny, ny)).into_owned(),
        gw,
        hx,
        hy,
        hw: DVector::zeros(m),
    })
}

/// Reduced state-space model Δẋ = A Δx + b Δw, Δp = c Δx + d Δw.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    /// one row per output channel
    pub c: DMatrix<f64>,
    pub d: DVector<f64>,
    pub states: Vec<String>,
    pub outputs: Vec<String>,
    pub x0: Vec<f64>,
    pub w0: f64,
}

impl LinearModel {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn channel(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o == name)
    }

    /// Restrict to a single output channel.
    pub fn select(&self, k: usize) -> LinearModel {
        LinearModel {
            c: self.c.rows(k, 1).into_owned(),
            d: DVector::from_element(1, self.d[k]),
            outputs: vec![self.outputs[k].clone()],
            ..self.clone()
        }
    }
}

/// Largest σ_min/σ_max of g_y treated as singular.
pub const GY_RCOND_MIN: f64 = 1e-13;

pub fn reduce(j: &Jacobians, states: Vec<String>, algebraics: &[String], outputs: Vec<String>, x0: Vec<f64>, w0: f64) -> Result<LinearModel> {
    let ny = j.gy.nrows();
    let (a, b, c, d) = if ny == 0 {
        (j.fx.clone(), j.fw.clone(), j.hx.clone(), j.hw.clone())
    } else {
        let (idx, rcond) = null_direction(&j.gy);
        if rcond < GY_RCOND_MIN {
            return Err(Error::Singular {
                context: "g_y".into(),
                variable: algebraics.get(idx).cloned().unwrap_or_default(),
            });
        }
        let lu = j.gy.clone().lu();
        let singular = || Error::Singular {
            context: "g_y".into(),
            variable: algebraics.get(idx).cloned().unwrap_or_default(),
        };
        let gy_gx = lu.solve(&j.gx).ok_or_else(singular)?;
        let gy_gw = lu.solve(&j.gw).ok_or_else(singular)?;
        (
            &j.fx - &j.fy * &gy_gx,
            &j.fw - &j.fy * &gy_gw,
            &j.hx - &j.hy * &gy_gx,
            &j.hw - &j.hy * &gy_gw,
        )
    };
    Ok(LinearModel {
        a,
        b,
        c,
        d,
        states,
        outputs,
        x0,
        w0,
    })
}

/// Jacobians and reduction in one call.
pub fn linearize(model: &SystemModel, op: &OperatingPoint) -> Result<LinearModel> {
    let j = jacobians(model, op)?;
    reduce(
        &j,
        model.index.x_names().to_vec(),
        model.index.y_names(),
        model.outputs.iter().map(|o| o.name.clone()).collect(),
        op.x0.clone(),
        op.w0,
    )
}
