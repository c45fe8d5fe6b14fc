use dcchain_core::assembly::{build_sdcib, SdcibParams, SystemModel};
use dcchain_core::equilibrium::{solve_default, OperatingPoint};
use dcchain_core::smallsignal::{linearize, transfer};
use dcchain_core::timedomain::{
    amplitude_spectrum, fit_sinusoid, simulate, simulate_from, spectrum, InputSignal, SimOptions, SimTrace,
};
use dcchain_core::Error;

fn sdcib() -> (SystemModel, OperatingPoint, SdcibParams) {
    let p = SdcibParams::default();
    let m = build_sdcib(&p).unwrap();
    let op = solve_default(&m, 0.5).unwrap();
    (m, op, p)
}

fn window(tr: &SimTrace, col: &str, ta: f64) -> (Vec<f64>, Vec<f64>) {
    let y = tr.column(col).unwrap();
    tr.t.iter().zip(y).filter(|(t, _)| **t >= ta).map(|(t, y)| (*t, *y)).unzip()
}

#[test]
fn equilibrium_is_stationary() {
    let (m, op, _) = sdcib();
    let tr = simulate(&m, &op, &InputSignal::Constant(0.5), &SimOptions::reduced(5.0)).unwrap();
    let last = tr.last_state(&m).unwrap();
    let drift = last.iter().zip(&op.x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift <= 1e-7, "{drift:e}");
    assert_eq!(tr.len(), 5001);
    assert!(tr.stats.max_algebraic_residual <= 1e-8);
}

#[test]
fn step_settles_at_the_new_equilibrium() {
    let (m, op, _) = sdcib();
    let step = InputSignal::Step { t0: 0.2, from: 0.5, to: 0.6 };
    let tr = simulate(&m, &op, &step, &SimOptions::reduced(6.0)).unwrap();
    let target = solve_default(&m, 0.6).unwrap();
    let last = tr.last_state(&m).unwrap();
    for (k, (a, b)) in last.iter().zip(&target.x0).enumerate() {
        assert!((a - b).abs() <= 1e-4 * (1.0 + b.abs()), "{} {a} vs {b}", m.index.x_names()[k]);
    }
    // ring-down of v_psu: zero crossings of the deviation give the frequency
    let v_end = target.get(&m, "psu.v_psu").unwrap();
    let (t, v) = window(&tr, "psu.v_psu", 0.25);
    let crossings: Vec<f64> = t
        .windows(2)
        .zip(v.windows(2))
        .filter(|(_, v)| (v[0] - v_end).signum() != (v[1] - v_end).signum())
        .map(|(t, v)| t[0] + (t[1] - t[0]) * (v_end - v[0]) / (v[1] - v[0]))
        .take(5)
        .collect();
    assert!(crossings.len() >= 3, "{crossings:?}");
    let half = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    let f = 0.5 / half;
    assert!((f - 6.15).abs() <= 0.5, "ring-down {f:.2} Hz");
}

#[test]
fn sine_response_peaks_at_the_drive_frequency() {
    let (m, op, _) = sdcib();
    let tr = simulate(&m, &op, &InputSignal::sine(0.5, 0.02, 5.0), &SimOptions::reduced(8.0)).unwrap();
    let s = spectrum(&tr, "p_pcc", (3.0, 8.0), Some(5.0)).unwrap();
    let k0 = s.f_hz.iter().position(|&f| f > 1.0).unwrap();
    let k = (k0..s.mag.len()).max_by(|&a, &b| s.mag[a].total_cmp(&s.mag[b])).unwrap();
    assert!((s.f_hz[k] - 5.0).abs() <= s.bin_width(), "peak at {}", s.f_hz[k]);
    assert!(s.warnings.is_empty());
}

#[test]
fn small_signal_agrees_with_linearization() {
    let (m, op, _) = sdcib();
    let lin = linearize(&m, &op).unwrap();
    for f in [1.0, 5.5, 20.0] {
        let amp = 1e-3;
        let tr = simulate(&m, &op, &InputSignal::sine(0.5, amp, f), &SimOptions::reduced(6.0)).unwrap();
        let (t, p) = window(&tr, "p_pcc", 3.0);
        let fit = fit_sinusoid(&t, &p, f);
        let g = transfer(&lin, f).unwrap()[0].norm();
        let rel = (fit.amplitude / amp - g).abs() / g;
        assert!(rel < 0.02, "{f} Hz: sim {} vs lin {g}", fit.amplitude / amp);
    }
}

fn energy(tr: &SimTrace, k: usize, p: &SdcibParams) -> f64 {
    let c = &p.dcchain;
    let g = |n: &str| tr.column(n).unwrap()[k];
    let sq = |a: f64, b: f64| a * a + b * b;
    (c.afe.l_afe * sq(g("afe.i_d"), g("afe.i_q"))
        + c.dclink.c_dc * g("dclink.v_dc").powi(2)
        + c.vsi.l_vsi * sq(g("vsi.i_cu"), g("vsi.i_cv"))
        + c.vsi.c_vsi * sq(g("vsi.v_u"), g("vsi.v_v"))
        + 3.0 * c.psu.c_psu * g("psu.v_psu").powi(2)
        + 3.0 * c.dcdc.c_eq * g("dcdc.v_eq").powi(2))
        / (2.0 * p.base.omega_b)
}

fn net_power(tr: &SimTrace, k: usize, p: &SdcibParams) -> (f64, f64) {
    let c = &p.dcchain;
    let g = |n: &str| tr.column(n).unwrap()[k];
    let sq = |a: f64, b: f64| a * a + b * b;
    let losses = c.afe.r_afe * sq(g("afe.i_d"), g("afe.i_q"))
        + c.vsi.r_vsi * sq(g("vsi.i_cu"), g("vsi.i_cv"))
        + c.psu.r_psu * g("psu.g_eq").powi(2) * sq(g("vsi.v_u"), g("vsi.v_v"));
    let g_load = g("w") / (3.0 * c.dcdc.v_eq_ref.powi(2));
    let load = 3.0 * g_load * g("dcdc.v_eq").powi(2);
    (g("p_pcc") - losses - load, load)
}

#[test]
fn stored_energy_balances_the_power_flow() {
    let (m, op, p) = sdcib();
    let input = InputSignal::Sine { base: 0.5, amplitude: 0.1, segments: vec![(0.1, 5.0), (1.1, 20.0)] };
    let tr = simulate(&m, &op, &input, &SimOptions::new(2.0, 2e-4)).unwrap();
    let n = tr.len();
    let (mut net, mut load) = (0.0, 0.0);
    for k in 1..n {
        let h = tr.t[k] - tr.t[k - 1];
        let (a, la) = net_power(&tr, k - 1, &p);
        let (b, lb) = net_power(&tr, k, &p);
        net += 0.5 * h * (a + b);
        load += 0.5 * h * (la + lb);
    }
    let de = energy(&tr, n - 1, &p) - energy(&tr, 0, &p);
    assert!((de - net).abs() <= 0.01 * load, "dE {de:e} vs {net:e} (load {load})");
    // and at every sample the instantaneous balance holds to the same order
    let (a, _) = net_power(&tr, 0, &p);
    assert!(a.abs() < 1e-8);
}

#[test]
fn trace_layout() {
    let (m, op, _) = sdcib();
    let mut o = SimOptions::reduced(0.1);
    o.record_stride = 10;
    let tr = simulate(&m, &op, &InputSignal::Constant(0.5), &o).unwrap();
    assert_eq!(tr.names[0], "w");
    assert_eq!(&tr.names[1..22], m.index.x_names());
    assert!(tr.names.iter().any(|n| n == "p_pcc") && tr.names.iter().any(|n| n == "p_vsi"));
    assert_eq!(tr.len(), 11);
    assert!(matches!(tr.column("nope"), Err(Error::UnknownSignal(_))));
}

#[test]
fn rejects_bad_inputs() {
    let (m, op, _) = sdcib();
    let o = SimOptions::reduced(0.1);
    let bad_trace = InputSignal::Trace { t: vec![0.0, 1.0, 0.5], p: vec![0.5; 3] };
    assert!(simulate(&m, &op, &bad_trace, &o).is_err());
    let bad_sine = InputSignal::Sine { base: 0.5, amplitude: 0.1, segments: vec![(1.0, 2.0), (1.0, 3.0)] };
    assert!(simulate(&m, &op, &bad_sine, &o).is_err());
    assert!(simulate(&m, &op, &InputSignal::Constant(f64::NAN), &o).is_err());
    assert!(simulate(&m, &op, &InputSignal::Constant(0.5), &SimOptions::reduced(-1.0)).is_err());
    let mut y = op.y0.clone();
    y.truncate(2);
    assert!(simulate_from(&m, &op.x0, &y, &InputSignal::Constant(0.5), &o).is_err());
}

#[test]
fn input_signals() {
    let s = InputSignal::Sine { base: 1.0, amplitude: 2.0, segments: vec![(1.0, 1.0), (2.0, 0.5)] };
    assert_eq!(s.value(0.5), 1.0);
    assert!((s.value(1.25) - 3.0).abs() < 1e-12);
    // phase continuous across the switch
    assert!((s.value(2.0 - 1e-9) - s.value(2.0 + 1e-9)).abs() < 1e-6);
    let st = InputSignal::Step { t0: 1.0, from: 0.2, to: 0.4 };
    assert_eq!((st.value(0.999), st.value(1.0)), (0.2, 0.4));
    let tr = InputSignal::Trace { t: vec![0.0, 2.0], p: vec![0.0, 1.0] };
    assert_eq!((tr.value(-1.0), tr.value(1.0), tr.value(9.0)), (0.0, 0.5, 1.0));
}

#[test]
fn spectrum_of_a_pure_tone() {
    let dt = 1e-3;
    let x: Vec<f64> = (0..4000).map(|k| 0.3 + 0.7 * (std::f64::consts::TAU * 12.5 * k as f64 * dt).sin()).collect();
    let s = amplitude_spectrum(&x, dt);
    assert!((s.bin_width() - 0.25).abs() < 1e-12);
    assert!((s.at(12.5) - 0.7).abs() < 1e-9);
    assert!((s.mag[0] - 0.3).abs() < 1e-9);
    let t: Vec<f64> = (0..4000).map(|k| k as f64 * dt).collect();
    let fit = fit_sinusoid(&t, &x, 12.5);
    assert!((fit.amplitude - 0.7).abs() < 1e-9 && (fit.offset - 0.3).abs() < 1e-9);
}
