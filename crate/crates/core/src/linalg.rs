//! Dense eigen-decomposition and solves used by the modal analysis.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Right/left eigenvectors with l_kᵀ r_k = 1 (rows of `left` are l_kᵀ).
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<Complex64>,
    /// columns are r_k
    pub right: CMatrix,
    /// rows are l_kᵀ, `left = right⁻¹`
    pub left: CMatrix,
}

pub fn complexify(a: &DMatrix<f64>) -> CMatrix {
    a.map(|v| Complex64::new(v, 0.0))
}

/// Eigenvectors of an upper-triangular T by back-substitution.
fn triangular_eigenvectors(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let small = f64::EPSILON * scale;
    let mut v = CMatrix::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        v[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * v[(j, k)];
            }
            let mut den = t[(i, i)] - lam;
            if den.norm() < small {
                den = Complex64::new(small, 0.0);
            }
            v[(i, k)] = -s / den;
        }
    }
    v
}

/// Eigen-decomposition of a real matrix with exact conjugate symmetry:
/// complex eigenvalues come in pairs (λ, λ̄) with conjugate vectors, real
/// eigenvalues carry real vectors.
pub fn eigen_real(a: &DMatrix<f64>) -> Result<Eigen> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Eigen {
            values: Vec::new(),
            right: CMatrix::zeros(0, 0),
            left: CMatrix::zeros(0, 0),
        });
    }
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::Eigen("matrix has non-finite entries".into()));
    }
    let schur = Schur::try_new(complexify(a), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let vt = triangular_eigenvectors(&t);
    let raw = &q * vt;
    let norm_a = a.norm().max(1.0);
    let tol = 1e-9 * norm_a;

    let mut upper = Vec::new();
    let mut lower = 0usize;
    let mut real = Vec::new();
    for k in 0..n {
        let lam = t[(k, k)];
        let mut r: CVector = raw.column(k).into_owned();
        let nr = r.norm();
        r /= Complex64::new(nr, 0.0);
        if lam.im > tol {
            upper.push((lam, r));
        } else if lam.im < -tol {
            lower += 1;
        } else {
            // rotate so the largest component is real, then drop the imaginary residue
            let ph = argmax(r.iter().map(|z| z.norm()));
            let rot = r[ph].conj() / r[ph].norm();
            let rr = r.map(|z| Complex64::new((z * rot).re, 0.0));
            let nn = rr.norm();
            real.push((Complex64::new(lam.re, 0.0), rr / Complex64::new(nn, 0.0)));
        }
    }
    if upper.len() != lower {
        return Err(Error::Eigen(format!(
            "unpaired complex eigenvalues ({} above, {} below the real axis)",
            upper.len(),
            lower
        )));
    }
    let mut values = Vec::with_capacity(n);
    let mut cols = Vec::with_capacity(n);
    for (lam, r) in upper {
        values.push(lam);
        cols.push(r.clone());
        values.push(lam.conj());
        cols.push(r.map(|z| z.conj()));
    }
    for (lam, r) in real {
        values.push(lam);
        cols.push(r);
    }
    let right = CMatrix::from_columns(&cols);
    let left = right
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Eigen("eigenvector matrix is singular (defective matrix)".into()))?;
    Ok(Eigen { values, right, left })
}

/// Solve (s I − A) x = b for complex s.
pub fn shifted_solve(a: &DMatrix<f64>, s: Complex64, b: &DVector<f64>) -> Option<CVector> {
    let n = a.nrows();
    let mut m = complexify(a) * Complex64::new(-1.0, 0.0);
    for i in 0..n {
        m[(i, i)] += s;
    }
    let rhs = b.map(|v| Complex64::new(v, 0.0));
    let x = m.lu().solve(&rhs)?;
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Index of the largest-magnitude component of the right singular vector
/// belonging to the smallest singular value, with the ratio σ_min/σ_max.
pub fn null_direction(m: &DMatrix<f64>) -> (usize, f64) {
    let svd = m.clone().svd(false, true);
    let s = &svd.singular_values;
    if s.is_empty() {
        return (0, 0.0);
    }
    let (kmin, smin) = s.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
    let smax = s.max();
    let vt = svd.v_t.expect("requested");
    let row = vt.row(kmin);
    let idx = argmax(row.iter().map(|v| v.abs()));
    (idx, if smax > 0.0 { smin / smax } else { 0.0 })
}

fn argmax(it: impl Iterator<Item = f64>) -> usize {
    it.enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a })
        .0
}
