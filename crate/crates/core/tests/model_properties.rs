use cavsps_core::observables::{transmission_spectrum, weak_drive_spectrum};
use cavsps_core::qed::{
    steady_state_for, Detection, HilbertSpace, PolarizationProjector, SystemParams,
};

fn detected(params: &SystemParams, space: &HilbertSpace, det: &Detection) -> f64 {
    let rho = steady_state_for(params, space).unwrap();
    rho.expectation(&det.number_operator(space)).re
}

#[test]
fn truncation_converges_at_weak_drive() {
    let p = SystemParams::reference_device().with_drive(0.01);
    let (s3, s4) = (HilbertSpace::new(3).unwrap(), HilbertSpace::new(4).unwrap());
    for f in [-3.6, 0.3, 2.0] {
        for det in [Detection::Unpolarized, Detection::v(), Detection::h()] {
            let q = p.with_laser(f);
            let (a, b) = (detected(&q, &s3, &det), detected(&q, &s4, &det));
            assert!((a - b).abs() < 1e-6 * b, "f={f} {det:?}: {a} vs {b}");
        }
    }
}

#[test]
fn detected_flux_scales_as_drive_squared() {
    let space = HilbertSpace::default();
    let base = SystemParams::reference_device().with_laser(0.3);
    for det in [Detection::Unpolarized, Detection::v()] {
        let e = [1e-3, 1e-2, 1e-1];
        let n: Vec<f64> = e
            .iter()
            .map(|x| detected(&base.with_drive(*x), &space, &det))
            .collect();
        let slope = (n[2] / n[0]).ln() / (e[2] / e[0]).ln();
        assert!((slope - 2.0).abs() <= 0.01, "{det:?}: slope {slope}");
    }
}

#[test]
fn weak_drive_limit_matches_master_equation_spectrum() {
    let p = SystemParams {
        drive_angle: 20.0,
        ..SystemParams::reference_device().with_drive(1e-3)
    };
    let f: Vec<f64> = (0..25).map(|k| -8.0 + 0.5 * k as f64).collect();
    let det = Detection::Projected(PolarizationProjector::new(1.1, 0.3));
    let full = transmission_spectrum(&p, &HilbertSpace::default(), &det, &f).unwrap();
    let weak = weak_drive_spectrum(&p, &det, &f).unwrap();
    for (a, b) in full.values.iter().zip(&weak.values) {
        assert!((a - b).abs() < 1e-5 * b.max(1e-3), "{a} vs {b}");
    }
}

#[test]
fn steady_states_are_physical_for_random_parameters() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let space = HilbertSpace::new(2).unwrap();
    for _ in 0..50 {
        let p = SystemParams {
            g: rng.random_range(0.0..30.0),
            kappa: rng.random_range(1.0..100.0),
            gamma_par: rng.random_range(0.1..5.0),
            gamma_star: rng.random_range(0.0..2.0),
            f_laser: rng.random_range(-10.0..10.0),
            drive_amplitude: rng.random_range(0.0..5.0),
            phi: rng.random_range(-90.0..90.0),
            ..SystemParams::reference_device()
        };
        steady_state_for(&p, &space).unwrap().check(1e-9).unwrap();
    }
}
