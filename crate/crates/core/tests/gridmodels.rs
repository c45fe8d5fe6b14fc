use dcchain_core::grid::{
    current_reference, droop_frequency, droop_voltage, gfl_residuals, gfl_steady_state, gfm_residuals,
    gfm_steady_state, saturation, sm_residuals, sm_steady_state, BranchData, GflParams, GflSetpoints, GfmParams,
    GfmSetpoints, NetworkData, SmParams, SmSetpoints,
};
use dcchain_core::frame::rotate_back;
use dcchain_core::{FrameAngle, PerUnitBase, Vec2};
use num_complex::Complex64;

fn base() -> PerUnitBase {
    PerUnitBase::default()
}

#[test]
fn sm_electrical_torque() {
    let p = SmParams::default();
    // δ = 0: v_dq = [1, 0]; e'_q, e'_d set so that i_dq = [0.5, 0]
    let mut x = [0.0; 9];
    x[1] = 1.0;
    x[2] = 0.5 * p.x_d_p;
    x[3] = 1.0;
    let o = sm_residuals(&x, Vec2(1.0, 0.0), &p, &SmSetpoints::default(), &base());
    assert!((o.i_dq - Vec2(0.5, 0.0)).norm() < 1e-14);
    assert!((o.tau_e - 0.5).abs() < 1e-14);
    assert!((o.v_t - 1.0).abs() < 1e-14);
}

#[test]
fn exciter_saturation_at_zero_field() {
    let p = SmParams::default();
    assert_eq!(saturation(&p, 0.0), 0.0039);
    assert!(saturation(&p, 1.0) > saturation(&p, 0.5));
}

#[test]
fn sm_steady_state_is_an_equilibrium() {
    let p = SmParams::default();
    let v = Vec2(1.02, 0.08);
    let i = Vec2(0.7, -0.1);
    let (x, sp) = sm_steady_state(v, i, &p, &base());
    let o = sm_residuals(&x, v, &p, &sp, &base());
    assert!(o.dx.iter().all(|d| d.abs() < 1e-12), "{:?}", o.dx);
    assert!((o.i_ri - i).norm() < 1e-12);
    assert_eq!(x[1], base().omega_s);
    assert!((x[8] - o.tau_e).abs() < 1e-12);
    assert!(o.tau_e > 0.0);
}

#[test]
fn gfm_droop() {
    let p = GfmParams::default();
    let sp = GfmSetpoints {
        omega_ref: 1.0,
        p_ref: 0.6,
        q_ref: 0.1,
        v_ref: 1.02,
    };
    assert_eq!(droop_frequency(&p, &sp, sp.p_ref), sp.omega_ref);
    assert_eq!(droop_voltage(&p, &sp, sp.q_ref), sp.v_ref);
    assert_eq!(p.kp, 0.02);
    let dw = droop_frequency(&p, &sp, sp.p_ref - 0.1) - sp.omega_ref;
    assert!((dw - 0.002).abs() < 1e-15);
}

#[test]
fn gfm_steady_state_is_an_equilibrium() {
    let p = GfmParams::default();
    let v = Vec2(0.99, 0.12);
    let i = Vec2(0.8, 0.05);
    let (x, sp) = gfm_steady_state(v, i, &p, &base());
    let o = gfm_residuals(&x, v, &p, &sp, &base());
    assert!(o.dx.iter().all(|d| d.abs() < 1e-10), "{:?}", o.dx);
    assert!((o.i_ri - i).norm() < 1e-12);
    assert!((o.omega_oc - 1.0).abs() < 1e-12);
}

#[test]
fn gfl_power_measurement_convention() {
    let p = GflParams::default();
    let mut x = [0.0; 15];
    x[11] = 1.0;
    x[13] = 0.3;
    x[14] = 0.1;
    let sp = GflSetpoints { p_ref: 0.0, q_ref: 0.0 };
    let o = gfl_residuals(&x, Vec2(1.0, 0.0), &p, &sp, &base());
    assert!((o.p - 0.3).abs() < 1e-15);
    assert!((o.q + 0.1).abs() < 1e-15);
}

#[test]
fn gfl_reference_at_setpoint_is_integrator_only() {
    let p = GflParams::default();
    let sp = GflSetpoints { p_ref: 0.7, q_ref: -0.05 };
    let r = current_reference(&p, &sp, sp.p_ref, sp.q_ref, 0.4, -0.3);
    assert_eq!(r, Vec2(p.ki_q * -0.3, p.ki_p * 0.4));
}

#[test]
fn gfl_steady_state_locks_pll() {
    let p = GflParams::default();
    let v = Vec2(1.01, 0.15);
    let i = Vec2(0.85, -0.02);
    let (x, sp) = gfl_steady_state(v, i, &p, &base());
    let o = gfl_residuals(&x, v, &p, &sp, &base());
    assert!(o.dx.iter().all(|d| d.abs() < 1e-10), "{:?}", o.dx);
    assert_eq!(x[1], 0.0);
    assert!((o.omega_pll - 1.0).abs() < 1e-12);
    assert!((rotate_back(FrameAngle(x[0]), Vec2(x[13], x[14])) - i).norm() < 1e-12);
}

#[test]
fn unloaded_network_without_charging_is_flat() {
    let mut net = NetworkData::wscc9();
    for b in &mut net.buses {
        b.p_load = 0.0;
        b.q_load = 0.0;
    }
    for br in &mut net.branches {
        *br = BranchData { b: 0.0, ..*br };
    }
    let vs = Complex64::from_polar(1.04, 0.1);
    let v = net
        .solve_voltages(&net.admittance(), vs, &[Complex64::new(0.0, 0.0); 9])
        .unwrap();
    assert!(v.iter().all(|x| (x - vs).norm() < 1e-12));
}

#[test]
fn power_flow_voltages_in_band() {
    let net = NetworkData::wscc9();
    for extra in [vec![], vec![(7, 0.5)]] {
        let pf = net.power_flow(&extra).unwrap();
        assert!(pf.mismatch < 1e-10);
        for v in &pf.v {
            assert!((0.9..=1.1).contains(&v.norm()), "{v}");
        }
        assert!((pf.v[1].norm() - 1.025).abs() < 1e-10);
        // PV buses hold their scheduled active power
        assert!((pf.generation(&net, 1, &extra).re - 1.63).abs() < 1e-8);
    }
}

#[test]
fn zero_data_center_load_reproduces_plain_power_flow() {
    let net = NetworkData::wscc9();
    let a = net.power_flow(&[]).unwrap();
    let b = net.power_flow(&[(7, 0.0)]).unwrap();
    for (x, y) in a.v.iter().zip(&b.v) {
        assert!((x - y).norm() < 1e-12);
    }
}

#[test]
fn network_validation() {
    let mut net = NetworkData::wscc9();
    net.branches[0].to = 12;
    assert!(net.validate().is_err());
    let mut net = NetworkData::wscc9();
    net.buses[1].kind = dcchain_core::grid::BusKind::Slack;
    assert!(net.validate().is_err());
}
