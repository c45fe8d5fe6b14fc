//! Server-load traces: CSV ingest, per-unit scaling, uniform resampling.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::timedomain::{interpolate, InputSignal};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LoadTrace {
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub source: String,
}

/// Raw power → p.u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Scaling {
    /// p = offset + gain·raw
    Affine { offset: f64, gain: f64 },
    /// Mean (and optionally peak) of the scaled trace.
    Target {
        target_mean: f64,
        #[serde(default)]
        target_peak: Option<f64>,
    },
}

impl Default for Scaling {
    fn default() -> Self {
        Scaling::Affine { offset: 0.0, gain: 1.0 }
    }
}

impl LoadTrace {
    pub fn new(t: Vec<f64>, p: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        let tr = LoadTrace {
            t,
            p,
            source: source.into(),
        };
        tr.validate()?;
        Ok(tr)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.is_empty() {
            return Err(Error::Trace(format!("{}: no samples", self.source)));
        }
        if self.t.len() != self.p.len() {
            return Err(Error::Trace(format!("{}: column lengths differ", self.source)));
        }
        if let Some(k) = self.t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Trace(format!(
                "{}: time not strictly increasing at sample {} (t = {})",
                self.source,
                k + 2,
                self.t[k + 1]
            )));
        }
        if let Some(k) = self.p.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Trace(format!(
                "{}: negative or non-finite power {} at t = {}",
                self.source, self.p[k], self.t[k]
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.t[self.t.len() - 1] - self.t[0]
    }

    pub fn mean(&self) -> f64 {
        self.p.iter().sum::<f64>() / self.p.len() as f64
    }

    pub fn peak(&self) -> f64 {
        self.p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, s: &Scaling) -> Result<LoadTrace> {
        let (offset, gain) = match *s {
            Scaling::Affine { offset, gain } => (offset, gain),
            Scaling::Target { target_mean, target_peak } => {
                let m = self.mean();
                match target_peak {
                    Some(pk) => {
                        let span = self.peak() - m;
                        if !(span > 0.0) {
                            return Err(Error::Trace(format!("{}: flat trace cannot be scaled to a peak", self.source)));
                        }
                        let g = (pk - target_mean) / span;
                        (target_mean - g * m, g)
                    }
                    None => {
                        if !(m > 0.0) {
                            return Err(Error::Trace(format!("{}: zero-mean trace cannot be scaled to a mean", self.source)));
                        }
                        (0.0, target_mean / m)
                    }
                }
            }
        };
        LoadTrace::new(
            self.t.clone(),
            self.p.iter().map(|v| offset + gain * v).collect(),
            self.source.clone(),
        )
    }
}

/// Read `t_seconds,<power>` with a header row; `#` starts a comment line.
pub fn read_csv(path: &Path) -> Result<LoadTrace> {
    let source = path.display().to_string();
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Trace(format!("{source}: {e}")))?;
    let hdr = rd.headers()?.clone();
    if hdr.len() != 2 || &hdr[0] != "t_seconds" {
        return Err(Error::Trace(format!(
            "{source}: expected header `t_seconds,p_load_pu`, got `{}`",
            hdr.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut t, mut p) = (Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec?;
        let line = rec.position().map(|q| q.line()).unwrap_or(0);
        if rec.len() != 2 {
            return Err(Error::Trace(format!("{source}:{line}: expected 2 columns, got {}", rec.len())));
        }
        let num = |k: usize| {
            rec[k]
                .parse::<f64>()
                .map_err(|_| Error::Trace(format!("{source}:{line}: `{}` is not a number", &rec[k])))
        };
        t.push(num(0)?);
        p.push(num(1)?);
    }
    if t.is_empty() {
        return Err(Error::Trace(format!("{source}: empty file")));
    }
    let tr = LoadTrace { t, p, source };
    if let Some(k) = tr.t.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Trace(format!(
            "{}: time not strictly increasing at data row {} (t = {})",
            tr.source,
            k + 2,
            tr.t[k + 1]
        )));
    }
    Ok(tr)
}

/// Read and scale to p.u.; rejects negative power after scaling.
pub fn ingest_csv(path: &Path, scaling: &Scaling) -> Result<LoadTrace> {
    read_csv(path)?.scaled(scaling)
}

/// Shortest round-trip decimal representation, so export → ingest is exact.
pub fn write_csv(trace: &LoadTrace, path: &Path) -> Result<()> {
    let mut s = String::from("t_seconds,p_load_pu\n");
    for (t, p) in trace.t.iter().zip(&trace.p) {
        s.push_str(&format!("{t:?},{p:?}\n"));
    }
    crate::io::atomic_write(path, s.as_bytes())
}

/// Linear interpolation onto t0, t0+dt, … ≤ t_end; endpoints held beyond.
pub fn resample(trace: &LoadTrace, dt: f64) -> Result<InputSignal> {
    if !(dt > 0.0) {
        return Err(Error::param("dt", "must be > 0"));
    }
    let t0 = trace.t[0];
    let n = (trace.duration() / dt + 1e-9).floor() as usize + 1;
    let t: Vec<f64> = (0..n).map(|k| t0 + k as f64 * dt).collect();
    let p = t.iter().map(|&x| interpolate(&trace.t, &trace.p, x)).collect();
    Ok(InputSignal::Trace { t, p })
}

/// Deterministic bursty trace for demos and tests: a slow random walk with
/// job-like square bursts, clipped at zero and rescaled to `mean`.
pub fn synthetic_trace(duration: f64, dt: f64, mean: f64, seed: u64) -> Result<LoadTrace> {
    if !(duration > 0.0 && dt > 0.0 && mean > 0.0) {
        return Err(Error::param("synthetic_trace", "duration, dt and mean must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (duration / dt).round() as usize + 1;
    let mut base = 1.0;
    let mut burst = 0usize;
    let mut t = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    for k in 0..n {
        base = (base + 0.05 * (rng.random::<f64>() - 0.5)).clamp(0.6, 1.4);
        if burst == 0 && rng.random::<f64>() < 0.05 {
            burst = rng.random_range(3..30);
        }
        let b = if burst > 0 {
            burst -= 1;
            0.6
        } else {
            0.0
        };
        t.push(k as f64 * dt);
        p.push((base + b + 0.05 * (rng.random::<f64>() - 0.5)).max(0.0));
    }
    LoadTrace::new(t, p, format!("synthetic(seed={seed})"))?.scaled(&Scaling::Target {
        target_mean: mean,
        target_peak: None,
    })
}
