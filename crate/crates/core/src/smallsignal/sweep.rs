use num_complex::Complex64;

use super::{linearize, modal_analysis, poa, LinearModel, ModalReport, PoaCurve};
use crate::assembly::SystemModel;
use crate::equilibrium::{solve_default, OperatingPoint};
use crate::linalg::CMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub op: OperatingPoint,
    pub lin: LinearModel,
    pub report: ModalReport,
    pub poa: PoaCurve,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    /// track[id][p]: index of mode `id` (numbered at the first point) in point p's report
    pub track: Vec<Vec<usize>>,
    /// ids of the modes with the largest |R_k| at the first point
    pub top: Vec<usize>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn trajectory(&self, id: usize) -> Vec<Complex64> {
        self.points
            .iter()
            .zip(&self.track[id])
            .map(|(p, &k)| p.report.modes[k].lambda)
            .collect()
    }

    pub fn damping(&self, id: usize) -> Vec<f64> {
        self.points
            .iter()
            .zip(&self.track[id])
            .map(|(p, &k)| p.report.modes[k].damping)
            .collect()
    }
}

/// Modal assurance between two complex vectors.
pub fn mac(a: &CMatrix, ka: usize, b: &CMatrix, kb: usize) -> f64 {
    let (ra, rb) = (a.column(ka), b.column(kb));
    let dot: Complex64 = ra.iter().zip(rb.iter()).map(|(x, y)| x.conj() * y).sum();
    dot.norm() / (ra.norm() * rb.norm())
}

fn side(l: Complex64) -> i32 {
    if l.im > 1e-9 {
        1
    } else if l.im < -1e-9 {
        -1
    } else {
        0
    }
}

/// Evaluate `family(value)` → (model, w0) at every value, then track modes
/// by eigenvector alignment. `channel` selects the output used for residues.
pub fn sweep<F>(family: F, values: &[f64], top_k: usize, channel: usize, grid: &[f64]) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<(SystemModel, f64)> + Sync,
{
    if values.is_empty() {
        return Err(Error::param("values", "sweep needs at least one value"));
    }
    let eval = |v: f64| -> Result<SweepPoint> {
        let (model, w0) = family(v)?;
        let op = solve_default(&model, w0)?;
        let lin = linearize(&model, &op)?;
        let report = modal_analysis(&lin)?;
        let curve = poa(&lin.select(channel), grid)?;
        Ok(SweepPoint {
            value: v,
            op,
            lin,
            report,
            poa: curve,
        })
    };
    let results: Vec<Result<SweepPoint>> = std::thread::scope(|s| {
        let handles: Vec<_> = values.iter().map(|&v| s.spawn(move || eval(v))).collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let points: Vec<SweepPoint> = results.into_iter().collect::<Result<_>>()?;

    let n = points[0].report.n();
    let mut track: Vec<Vec<usize>> = (0..n).map(|k| vec![k]).collect();
    let mut warnings = Vec::new();
    for p in 1..points.len() {
        let prev = &points[p - 1].report;
        let cur = &points[p].report;
        if cur.n() != n {
            return Err(Error::Dimension {
                what: "sweep mode count".into(),
                expected: n,
                got: cur.n(),
            });
        }
        let mut scores = Vec::with_capacity(n * n);
        for id in 0..n {
            let kp = track[id][p - 1];
            let sp = side(prev.modes[kp].lambda);
            let mut row: Vec<(f64, usize)> = (0..n)
                .map(|kn| {
                    let mut s = mac(&prev.right, kp, &cur.right, kn);
                    let sn = side(cur.modes[kn].lambda);
                    if sp != 0 && sn != 0 && sp != sn {
                        s -= 1.0;
                    }
                    (s, kn)
                })
                .collect();
            row.sort_by(|a, b| b.0.total_cmp(&a.0));
            if row.len() > 1 && row[0].0 > 0.0 && row[0].0 - row[1].0 < 0.02 * row[0].0 {
                warnings.push(format!(
                    "ambiguous tracking of mode {} at value {}: candidates {} and {}",
                    id + 1,
                    points[p].value,
                    row[0].1 + 1,
                    row[1].1 + 1
                ));
            }
            scores.extend(row.into_iter().map(|(s, kn)| (s, id, kn)));
        }
        scores.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut id_done = vec![false; n];
        let mut new_used = vec![false; n];
        let mut assign = vec![0; n];
        for (_, id, kn) in scores {
            if !id_done[id] && !new_used[kn] {
                id_done[id] = true;
                new_used[kn] = true;
                assign[id] = kn;
            }
        }
        for id in 0..n {
            track[id].push(assign[id]);
        }
    }

    let r0 = &points[0].report;
    let mut by_res: Vec<usize> = (0..n).collect();
    by_res.sort_by(|&a, &b| r0.residues[(channel, b)].norm().total_cmp(&r0.residues[(channel, a)].norm()));
    let top = by_res.into_iter().take(top_k).collect();
    Ok(SweepResult {
        points,
        track,
        top,
        warnings,
    })
}
