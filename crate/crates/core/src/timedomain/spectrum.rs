use nalgebra::{Matrix3, Vector3};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::input::interpolate;
use super::SimTrace;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub f_hz: Vec<f64>,
    pub mag: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Spectrum {
    /// Magnitude at the bin nearest to `f`.
    pub fn at(&self, f: f64) -> f64 {
        let k = self
            .f_hz
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.mag[k]
    }

    pub fn bin_width(&self) -> f64 {
        if self.f_hz.len() > 1 {
            self.f_hz[1] - self.f_hz[0]
        } else {
            0.0
        }
    }
}

/// Hann-windowed single-sided amplitude spectrum of uniformly sampled data.
pub fn amplitude_spectrum(samples: &[f64], dt: f64) -> Spectrum {
    let n = samples.len();
    let w: Vec<f64> = (0..n)
        .map(|k| 0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / n as f64).cos())
        .collect();
    let sw: f64 = w.iter().sum();
    let mut buf: Vec<Complex<f64>> = samples.iter().zip(&w).map(|(s, w)| Complex::new(s * w, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let m = n / 2 + 1;
    let df = 1.0 / (n as f64 * dt);
    let f_hz = (0..m).map(|k| k as f64 * df).collect();
    let mag = (0..m)
        .map(|k| {
            let a = buf[k].norm() / sw;
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                a
            } else {
                2.0 * a
            }
        })
        .collect();
    Spectrum {
        f_hz,
        mag,
        warnings: Vec::new(),
    }
}

/// Spectrum of `signal` over [t_a, t_b]; resampled to the median step if the
/// trace is not uniform. `f_min` triggers a warning when the window holds
/// fewer than four of its periods.
pub fn spectrum(trace: &SimTrace, signal: &str, window: (f64, f64), f_min: Option<f64>) -> Result<Spectrum> {
    let y = trace.column(signal)?;
    let (ta, tb) = window;
    if !(tb > ta) || ta < trace.t[0] - 1e-12 || tb > trace.t[trace.len() - 1] + 1e-9 {
        return Err(Error::param("window", "must lie inside the trace and have t_b > t_a"));
    }
    let idx: Vec<usize> = (0..trace.len()).filter(|&k| trace.t[k] >= ta - 1e-12 && trace.t[k] <= tb + 1e-12).collect();
    if idx.len() < 4 {
        return Err(Error::param("window", "fewer than four samples"));
    }
    let ts: Vec<f64> = idx.iter().map(|&k| trace.t[k]).collect();
    let ys: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
    let mut steps: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    let dt = steps[steps.len() / 2];
    let uniform = steps.iter().all(|s| (s - dt).abs() <= 1e-6 * dt);
    let samples = if uniform {
        ys
    } else {
        let n = ((ts[ts.len() - 1] - ts[0]) / dt).floor() as usize + 1;
        (0..n).map(|k| interpolate(&ts, &ys, ts[0] + k as f64 * dt)).collect()
    };
    let mut s = amplitude_spectrum(&samples, dt);
    if let Some(f) = f_min {
        if (tb - ta) * f < 4.0 {
            s.warnings.push(format!(
                "window of {:.3} s holds fewer than 4 periods of {f} Hz",
                tb - ta
            ));
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
}

/// Least-squares fit y ≈ offset + a·sin(2πft) + b·cos(2πft).
pub fn fit_sinusoid(t: &[f64], y: &[f64], f_hz: f64) -> SinusoidFit {
    let mut m = Matrix3::zeros();
    let mut r = Vector3::zeros();
    for (&ti, &yi) in t.iter().zip(y) {
        let (s, c) = (std::f64::consts::TAU * f_hz * ti).sin_cos();
        let v = Vector3::new(1.0, s, c);
        m += v * v.transpose();
        r += v * yi;
    }
    let p = m.lu().solve(&r).unwrap_or_else(Vector3::zeros);
    SinusoidFit {
        amplitude: (p[1] * p[1] + p[2] * p[2]).sqrt(),
        phase: p[2].atan2(p[1]),
        offset: p[0],
    }
}
