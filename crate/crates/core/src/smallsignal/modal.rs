use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LinearModel;
use crate::linalg::{eigen_real, CMatrix};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// 1-based, in report order
    pub index: usize,
    pub lambda: Complex64,
    pub freq_hz: f64,
    pub damping: f64,
    /// (state, normalized participation), strongest first
    pub ranked: Vec<(String, f64)>,
}

impl Mode {
    pub fn top(&self, k: usize) -> &[(String, f64)] {
        &self.ranked[..k.min(self.ranked.len())]
    }
}

#[derive(Debug, Clone)]
pub struct ModalReport {
    pub modes: Vec<Mode>,
    pub states: Vec<String>,
    pub outputs: Vec<String>,
    /// columns r_k
    pub right: CMatrix,
    /// rows l_kᵀ with l_kᵀ r_k = 1
    pub left: CMatrix,
    /// ρ_ik = Re{l_ki r_ik}; rows states, columns modes
    pub participation: DMatrix<f64>,
    /// |l_ki r_ik| / Σ_i |l_ki r_ik|
    pub participation_norm: DMatrix<f64>,
    /// R_k per channel: rows channels, columns modes
    pub residues: CMatrix,
    pub d: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ModalReport {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }

    /// Largest ‖A r_k − λ_k r_k‖ over all modes.
    pub fn eigen_residual(&self, a: &DMatrix<f64>) -> f64 {
        let ac = crate::linalg::complexify(a);
        (0..self.n())
            .map(|k| {
                let r = self.right.column(k);
                (&ac * r - r * self.modes[k].lambda).norm()
            })
            .fold(0.0, f64::max)
    }
}

pub fn damping_ratio(l: Complex64) -> f64 {
    let m = l.norm();
    if m == 0.0 {
        0.0
    } else {
        -l.re / m
    }
}

/// Order: descending real part; within a conjugate pair the +Im member first.
fn order(values: &[Complex64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        let (la, lb) = (values[a], values[b]);
        lb.re
            .total_cmp(&la.re)
            .then(lb.im.abs().total_cmp(&la.im.abs()))
            .then(lb.im.total_cmp(&la.im))
    });
    idx
}

pub fn modal_analysis(lin: &LinearModel) -> Result<ModalReport> {
    let eig = eigen_real(&lin.a)?;
    let n = eig.values.len();
    let ord = order(&eig.values);
    let right = CMatrix::from_fn(n, n, |i, k| eig.right[(i, ord[k])]);
    let left = CMatrix::from_fn(n, n, |k, i| eig.left[(ord[k], i)]);
    let values: Vec<Complex64> = ord.iter().map(|&k| eig.values[k]).collect();

    let mut rho = DMatrix::zeros(n, n);
    let mut rho_n = DMatrix::zeros(n, n);
    let mut warnings = Vec::new();
    for k in 0..n {
        let mut tot = 0.0;
        for i in 0..n {
            let p = left[(k, i)] * right[(i, k)];
            rho[(i, k)] = p.re;
            rho_n[(i, k)] = p.norm();
            tot += p.norm();
        }
        for i in 0..n {
            rho_n[(i, k)] /= tot;
        }
        let cond = left.row(k).norm() * right.column(k).norm();
        if cond > 1e8 {
            warnings.push(format!("mode {} is nearly defective (eigenvector condition {cond:.2e})", k + 1));
        }
    }

    let m = lin.c.nrows();
    let bc = lin.b.map(|v| Complex64::new(v, 0.0));
    let cc = lin.c.map(|v| Complex64::new(v, 0.0));
    let lb = &left * bc;
    let cr = cc * &right;
    let residues = CMatrix::from_fn(m, n, |j, k| cr[(j, k)] * lb[k]);

    let modes = (0..n)
        .map(|k| {
            let mut ranked: Vec<(String, f64)> = (0..n).map(|i| (lin.states[i].clone(), rho_n[(i, k)])).collect();
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
            let l = values[k];
            Mode {
                index: k + 1,
                lambda: l,
                freq_hz: l.im.abs() / (2.0 * std::f64::consts::PI),
                damping: damping_ratio(l),
                ranked,
            }
        })
        .collect();
    Ok(ModalReport {
        modes,
        states: lin.states.clone(),
        outputs: lin.outputs.clone(),
        right,
        left,
        participation: rho,
        participation_norm: rho_n,
        residues,
        d: lin.d.iter().copied().collect(),
        warnings,
    })
}
