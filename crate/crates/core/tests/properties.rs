use dcchain_core::frame::{abc_to_uv, uv_to_abc};
use dcchain_core::smallsignal::{modal_analysis, LinearModel};
use dcchain_core::timedomain::InputSignal;
use dcchain_core::tuning::{tune, TuningSpec};
use dcchain_core::workload::{resample, LoadTrace};
use dcchain_core::{jmul, rotate, FrameAngle, Vec2};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn linear(a: DMatrix<f64>) -> LinearModel {
    let n = a.nrows();
    LinearModel {
        a,
        b: DVector::from_element(n, 1.0),
        c: DMatrix::from_element(1, n, 1.0),
        d: DVector::zeros(1),
        states: (0..n).map(|k| format!("s{k}")).collect(),
        outputs: vec!["p".into()],
        x0: vec![0.0; n],
        w0: 0.0,
    }
}

fn matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0f64..10.0, n * n).prop_map(move |v| DMatrix::from_vec(n, n, v))
}

proptest! {
    #[test]
    fn park_round_trip(theta in -10.0f64..10.0, u in -2.0f64..2.0, v in -2.0f64..2.0) {
        let abc = uv_to_abc(theta, Vec2(u, v));
        prop_assert!(abc.iter().sum::<f64>().abs() < 1e-12);
        let back = abc_to_uv(theta, abc);
        prop_assert!((back.0 - u).abs() < 1e-12 && (back.1 - v).abs() < 1e-12);
    }

    #[test]
    fn rotation_preserves_norm_and_j_is_skew(theta in -10.0f64..10.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let x = Vec2(a, b);
        let r = rotate(FrameAngle(theta), x);
        prop_assert!((r.norm_sq() - x.norm_sq()).abs() < 1e-12);
        prop_assert!(x.dot(jmul(x)).abs() < 1e-12);
        let y = rotate(FrameAngle(-theta), r);
        prop_assert!((y.0 - a).abs() < 1e-12 && (y.1 - b).abs() < 1e-12);
    }

    #[test]
    fn integral_gain_grows_with_bandwidth(f in 1.0f64..200.0, df in 0.1f64..50.0, zeta in 0.3f64..2.0, c in 0.01f64..0.5) {
        let wb = 2.0 * std::f64::consts::PI * 60.0;
        let (_, k1) = tune(&TuningSpec::voltage(f, zeta, c), wb).unwrap();
        let (_, k2) = tune(&TuningSpec::voltage(f + df, zeta, c), wb).unwrap();
        prop_assert!(k2 > k1);
        let (_, p1) = tune(&TuningSpec::pll(f, zeta), wb).unwrap();
        let (_, p2) = tune(&TuningSpec::pll(f + df, zeta), wb).unwrap();
        prop_assert!(p2 > p1);
    }

    #[test]
    fn modal_invariants(a in matrix(6)) {
        let r = modal_analysis(&linear(a.clone())).unwrap();
        prop_assert_eq!(r.n(), 6);
        let scale = a.norm().max(1.0);
        prop_assert!(r.eigen_residual(&a) <= 1e-8 * scale);
        for k in 0..6 {
            let s: f64 = r.participation.column(k).sum();
            prop_assert!((s - 1.0).abs() < 1e-6, "participation sum {}", s);
        }
        // conjugate pairs share participation
        let ev = r.eigenvalues();
        for k in 0..6 {
            if ev[k].im > 1e-6 {
                let j = (0..6).find(|&j| (ev[j] - ev[k].conj()).norm() < 1e-8 * scale).unwrap();
                let d = (r.participation_norm.column(k) - r.participation_norm.column(j)).amax();
                prop_assert!(d < 1e-8);
            }
        }
        // ordering: real parts descending
        prop_assert!(ev.windows(2).all(|w| w[0].re >= w[1].re - 1e-12));
        let tr: f64 = ev.iter().map(|l| l.re).sum();
        prop_assert!((tr - a.trace()).abs() < 1e-8 * scale);
    }

    #[test]
    fn resample_within_bounds(
        p in prop::collection::vec(0.0f64..5.0, 2..40),
        dt in 0.01f64..0.7,
    ) {
        let t: Vec<f64> = (0..p.len()).map(|k| k as f64 * 0.25).collect();
        let tr = LoadTrace::new(t, p.clone(), "prop").unwrap();
        let (lo, hi) = (tr.min(), tr.peak());
        match resample(&tr, dt).unwrap() {
            InputSignal::Trace { t, p: q } => {
                prop_assert!(q.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
                prop_assert!(t.last().copied().unwrap() <= tr.t[tr.len() - 1] + 1e-9);
                prop_assert_eq!(q[0], p[0]);
            }
            _ => prop_assert!(false),
        }
    }
}
