use dcchain_core::assembly::{build_ninebus, build_sdcib, NineBusParams, SdcibParams};
use dcchain_core::equilibrium::{initial_guess, solve_default, solve_equilibrium, solve_equilibrium_from};
use dcchain_core::Error;

fn sdcib() -> (dcchain_core::assembly::SystemModel, SdcibParams) {
    let p = SdcibParams::default();
    (build_sdcib(&p).unwrap(), p)
}

#[test]
fn regulated_quantities_at_references() {
    let (m, _) = sdcib();
    let op = solve_default(&m, 0.5).unwrap();
    assert!(op.iterations <= 10, "{} iterations", op.iterations);
    assert!(op.f_norm <= 1e-10 && op.g_norm <= 1e-10);
    for (n, v) in [("dclink.v_dc", 1.0), ("psu.v_psu", 1.0), ("dcdc.v_eq", 0.5), ("afe.i_q", 0.0), ("vsi.v_u", 1.0), ("vsi.v_v", 0.0)] {
        assert!((op.get(&m, n).unwrap() - v).abs() <= 1e-10, "{n}");
    }
}

#[test]
fn losses_account_for_the_pcc_surplus() {
    let (m, p) = sdcib();
    let op = solve_default(&m, 0.5).unwrap();
    let g = |n: &str| op.get(&m, n).unwrap();
    let c = &p.dcchain;
    let afe = c.afe.r_afe * (g("afe.i_d").powi(2) + g("afe.i_q").powi(2));
    let vsi = c.vsi.r_vsi * (g("vsi.i_cu").powi(2) + g("vsi.i_cv").powi(2));
    let psu = c.psu.r_psu * g("psu.g_eq").powi(2) * (g("vsi.v_u").powi(2) + g("vsi.v_v").powi(2));
    let p_pcc = op.outputs(&m)[0];
    let losses = afe + vsi + psu;
    assert!(losses > 0.0);
    assert!((p_pcc - 0.5 - losses).abs() < 1e-8, "{} vs {losses}", p_pcc - 0.5);
}

#[test]
fn zero_load_guess_is_exact() {
    let (m, _) = sdcib();
    let (x, y) = initial_guess(&m, 0.0).unwrap();
    let (f, g) = m.residuals(&x, &y, 0.0).unwrap();
    assert!(f.iter().chain(&g).all(|v| v.abs() < 1e-10));
    let op = solve_default(&m, 0.0).unwrap();
    assert!(op.iterations <= 1);
    for n in ["dcdc.xi_eq", "dcdc.i_psu", "psu.g_eq", "psu.i_u", "psu.i_v"] {
        assert_eq!(op.get(&m, n).unwrap(), 0.0, "{n}");
    }
}

#[test]
fn currents_grow_with_load() {
    let (m, _) = sdcib();
    let mut prev = (0.0, 0.0);
    for k in 0..=8 {
        let w = 0.2 + 0.1 * k as f64;
        let op = solve_default(&m, w).unwrap();
        let i_afe = op.get(&m, "afe.i_d").unwrap().hypot(op.get(&m, "afe.i_q").unwrap());
        let i_psu = op.get(&m, "dcdc.i_psu").unwrap();
        assert!(i_afe > prev.0 && i_psu > prev.1, "p_load = {w}");
        prev = (i_afe, i_psu);
    }
}

#[test]
fn continuation_has_no_jumps() {
    let (m, _) = sdcib();
    let ops: Vec<_> = (0..=16).map(|k| solve_default(&m, 0.2 + 0.05 * k as f64).unwrap()).collect();
    let d: Vec<f64> = ops
        .windows(2)
        .map(|w| w[0].x0.iter().zip(&w[1].x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .collect();
    let med = {
        let mut s = d.clone();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    };
    assert!(d.iter().all(|&v| v <= 10.0 * med));
}

#[test]
fn overload_converges_or_reports() {
    let (m, _) = sdcib();
    match solve_default(&m, 1.2) {
        Ok(op) => assert!(op.f_norm <= 1e-10 && op.g_norm <= 1e-10),
        Err(e) => assert!(!e.to_string().is_empty()),
    }
    let e = solve_default(&m, 20.0).unwrap_err();
    assert!(!e.to_string().is_empty());
}

#[test]
fn independent_of_the_starting_guess() {
    let (m, _) = sdcib();
    let a = solve_default(&m, 0.5).unwrap();
    let (mut x, mut y) = initial_guess(&m, 0.5).unwrap();
    for v in x.iter_mut().chain(y.iter_mut()) {
        *v *= 1.01;
    }
    let b = solve_equilibrium_from(&m, 0.5, x, y, 1e-12, 50).unwrap();
    for (p, q) in a.x0.iter().zip(&b.x0).chain(a.y0.iter().zip(&b.y0)) {
        assert!((p - q).abs() < 1e-8);
    }
}

#[test]
fn newton_tail_is_quadratic() {
    let (m, _) = sdcib();
    let (mut x, y) = initial_guess(&m, 0.5).unwrap();
    let k = m.index.x_index("psu.v_psu").unwrap();
    x[k] += 0.02;
    let op = solve_equilibrium_from(&m, 0.5, x, y, 1e-11, 50).unwrap();
    let h = &op.history;
    assert!(h.len() >= 3, "{h:?}");
    // last contraction much stronger than linear
    let n = h.len();
    let (e0, e1, e2) = (h[n - 3], h[n - 2], h[n - 1]);
    assert!(e2 <= 1e-11);
    assert!(e1 / e0 < 0.1 || e1 < 1e-9, "{h:?}");
}

#[test]
fn iteration_cap_is_reported() {
    let (m, _) = sdcib();
    assert_eq!(solve_equilibrium(&m, 0.9, 1e-10, 0).unwrap().iterations, 0);
    let (mut x, y) = initial_guess(&m, 0.9).unwrap();
    x[0] += 0.05;
    let e = solve_equilibrium_from(&m, 0.9, x, y, 1e-10, 1).unwrap_err();
    assert!(matches!(e, Error::NonConvergence { .. }), "{e}");
}

#[test]
fn ninebus_equilibrium_and_load_guard() {
    let p = NineBusParams::default();
    let m = build_ninebus(&p).unwrap();
    let op = solve_default(&m, p.p_load).unwrap();
    assert!(op.f_norm <= 1e-10 && op.g_norm <= 1e-10);
    let w = op.get(&m, "sm.omega").unwrap();
    assert!((w - 1.0).abs() < 1e-10);
    assert!((op.outputs(&m)[3] - p.p_load).abs() < 0.05);
    let e = solve_default(&m, 0.6).unwrap_err().to_string();
    assert!(e.contains("rebuild"), "{e}");
    let q = NineBusParams { p_load: 0.6, ..p };
    let m6 = build_ninebus(&q).unwrap();
    assert!(solve_default(&m6, 0.6).is_ok());
}
