use std::f64::consts::TAU;

use crate::{Error, Result};

/// Exogenous input w(t), p.u. against seconds.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSignal {
    Constant(f64),
    Step {
        t0: f64,
        from: f64,
        to: f64,
    },
    /// `base` until the first switch time, then base + amplitude·sin with
    /// piecewise-constant frequency; phase is continuous across switches.
    Sine {
        base: f64,
        amplitude: f64,
        /// (switch time s, frequency Hz), strictly increasing in time
        segments: Vec<(f64, f64)>,
    },
    /// Linear interpolation, endpoints held.
    Trace {
        t: Vec<f64>,
        p: Vec<f64>,
    },
}

impl InputSignal {
    pub fn sine(base: f64, amplitude: f64, f_hz: f64) -> Self {
        InputSignal::Sine {
            base,
            amplitude,
            segments: vec![(0.0, f_hz)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InputSignal::Constant(v) if !v.is_finite() => Err(Error::param("input", "non-finite value")),
            InputSignal::Sine { segments, .. } => {
                if segments.is_empty() {
                    return Err(Error::param("input.segments", "at least one segment"));
                }
                if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(Error::param("input.segments", "switch times must be strictly increasing"));
                }
                Ok(())
            }
            InputSignal::Trace { t, p } => {
                if t.is_empty() || t.len() != p.len() {
                    return Err(Error::param("input.trace", "empty or mismatched columns"));
                }
                if t.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::param("input.trace", "timestamps must be strictly increasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            InputSignal::Constant(v) => *v,
            InputSignal::Step { t0, from, to } => {
                if t < *t0 {
                    *from
                } else {
                    *to
                }
            }
            InputSignal::Sine {
                base,
                amplitude,
                segments,
            } => {
                if t < segments[0].0 {
                    return *base;
                }
                let mut phase = 0.0;
                for (k, &(ts, f)) in segments.iter().enumerate() {
                    let end = segments.get(k + 1).map(|s| s.0).unwrap_or(f64::INFINITY);
                    if t < end {
                        phase += TAU * f * (t - ts);
                        break;
                    }
                    phase += TAU * f * (end - ts);
                }
                base + amplitude * phase.sin()
            }
            InputSignal::Trace { t: ts, p } => interpolate(ts, p, t),
        }
    }
}

pub(crate) fn interpolate(ts: &[f64], p: &[f64], t: f64) -> f64 {
    if t <= ts[0] {
        return p[0];
    }
    let n = ts.len();
    if t >= ts[n - 1] {
        return p[n - 1];
    }
    let k = ts.partition_point(|&s| s <= t) - 1;
    let a = (t - ts[k]) / (ts[k + 1] - ts[k]);
    p[k] + a * (p[k + 1] - p[k])
}
