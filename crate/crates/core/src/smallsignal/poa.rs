use num_complex::Complex64;

use super::{LinearModel, ModalReport};
use crate::linalg::shifted_solve;
use crate::{Error, Result};

/// `n` logarithmically spaced points on [f_min, f_max] Hz.
pub fn log_grid(f_min: f64, f_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![f_min];
    }
    let (a, b) = (f_min.log10(), f_max.log10());
    (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub f_hz: f64,
    pub mag: f64,
}

#[derive(Debug, Clone)]
pub struct PoaCurve {
    pub f_hz: Vec<f64>,
    pub channels: Vec<String>,
    /// mag[channel][k]
    pub mag: Vec<Vec<f64>>,
    pub peaks: Vec<Peak>,
    /// grid frequencies where jω hit an eigenvalue
    pub flagged: Vec<f64>,
}

impl PoaCurve {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        let k = self.channels.iter().position(|c| c == name)?;
        Some(&self.mag[k])
    }
}

/// G(j2πf) = c (jωI − A)⁻¹ b + d for every channel; None at a pole.
pub fn transfer(lin: &LinearModel, f_hz: f64) -> Option<Vec<Complex64>> {
    let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f_hz);
    let x = shifted_solve(&lin.a, s, &lin.b)?;
    let out: Vec<Complex64> = (0..lin.c.nrows())
        .map(|j| {
            let mut acc = Complex64::new(lin.d[j], 0.0);
            for i in 0..lin.n() {
                acc += lin.c[(j, i)] * x[i];
            }
            acc
        })
        .collect();
    if out.iter().all(|z| z.norm().is_finite()) && out.iter().all(|z| z.norm() < 1e15) {
        Some(out)
    } else {
        None
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    // search in log-frequency
    let (mut la, mut lb) = (a.ln(), b.ln());
    let mut c = lb - r * (lb - la);
    let mut d = la + r * (lb - la);
    let (mut fc, mut fd) = (f(c.exp()), f(d.exp()));
    for _ in 0..80 {
        if fc > fd {
            lb = d;
            d = c;
            fd = fc;
            c = lb - r * (lb - la);
            fc = f(c.exp());
        } else {
            la = c;
            c = d;
            fc = fd;
            d = la + r * (lb - la);
            fd = f(d.exp());
        }
        if (lb - la).abs() < 1e-12 {
            break;
        }
    }
    a = la.exp();
    b = lb.exp();
    let x = 0.5 * (a + b);
    (x, f(x))
}

pub fn poa(lin: &LinearModel, grid: &[f64]) -> Result<PoaCurve> {
    if grid.is_empty() {
        return Err(Error::param("grid", "frequency grid is empty"));
    }
    if grid.iter().any(|f| !(*f > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("grid", "frequencies must be positive and strictly increasing"));
    }
    let m = lin.c.nrows();
    let mut mag = vec![Vec::with_capacity(grid.len()); m];
    let mut flagged = Vec::new();
    for &f in grid {
        match transfer(lin, f) {
            Some(g) => {
                for j in 0..m {
                    mag[j].push(g[j].norm());
                }
            }
            None => {
                flagged.push(f);
                for row in mag.iter_mut() {
                    row.push(f64::INFINITY);
                }
            }
        }
    }
    let mut peaks = Vec::with_capacity(m);
    for j in 0..m {
        let row = &mag[j];
        let k = (0..row.len()).fold(0, |b, i| if row[i] > row[b] { i } else { b });
        let peak = if row[k].is_finite() && k > 0 && k + 1 < row.len() {
            let eval = |f: f64| transfer(lin, f).map(|g| g[j].norm()).unwrap_or(f64::INFINITY);
            let (fp, mp) = golden_max(eval, grid[k - 1], grid[k + 1]);
            if mp >= row[k] {
                Peak { f_hz: fp, mag: mp }
            } else {
                Peak { f_hz: grid[k], mag: row[k] }
            }
        } else {
            Peak { f_hz: grid[k], mag: row[k] }
        };
        peaks.push(peak);
    }
    Ok(PoaCurve {
        f_hz: grid.to_vec(),
        channels: lin.outputs.clone(),
        mag,
        peaks,
        flagged,
    })
}

/// 400 log points on [0.01, 1000] Hz.
pub fn poa_default(lin: &LinearModel) -> Result<PoaCurve> {
    poa(lin, &log_grid(0.01, 1000.0, 400))
}

/// Multi-port POA: one curve per output channel on a shared grid.
pub fn multiport_poa(lin: &LinearModel, grid: &[f64]) -> Result<PoaCurve> {
    poa(lin, grid)
}

/// Per-mode terms R_k/(jω − λ_k) for one channel and their sum plus d.
#[derive(Debug, Clone)]
pub struct ModalPoa {
    pub f_hz: Vec<f64>,
    pub channel: String,
    /// |R_k/(jω − λ_k)|, [mode][k]
    pub modes: Vec<Vec<f64>>,
    /// |Σ_k R_k/(jω − λ_k) + d|
    pub total: Vec<f64>,
}

pub fn modal_poa_decomposition(report: &ModalReport, channel: usize, grid: &[f64]) -> Result<ModalPoa> {
    if channel >= report.residues.nrows() {
        return Err(Error::UnknownSignal(format!("output channel {channel}")));
    }
    let n = report.n();
    let mut modes = vec![Vec::with_capacity(grid.len()); n];
    let mut total = Vec::with_capacity(grid.len());
    for &f in grid {
        let s = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f);
        let mut acc = Complex64::new(report.d[channel], 0.0);
        for k in 0..n {
            let t = report.residues[(channel, k)] / (s - report.modes[k].lambda);
            modes[k].push(t.norm());
            acc += t;
        }
        total.push(acc.norm());
    }
    Ok(ModalPoa {
        f_hz: grid.to_vec(),
        channel: report.outputs[channel].clone(),
        modes,
        total,
    })
}
