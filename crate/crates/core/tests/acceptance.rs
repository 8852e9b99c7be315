//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p cavsps-core --test acceptance`. Criteria listed in
//! `KNOWN_DEVIATIONS` are reported as FAIL but do not fail the process; every
//! other failure does.

use std::time::Instant;

use cavsps_core::device::{coupling_efficiency, GaussianMode};
use cavsps_core::fitting::{
    fit_cavity_stage, fit_detector_response, fit_qd_stage, synthetic_detector_curve,
    synthetic_spectrum, QdStageOptions, SpectrumData,
};
use cavsps_core::hom::{
    delay_table, extract_indistinguishability, extract_with_uncertainty,
    fit_double_exponential_peaks, monte_carlo_hom, predict_peak_areas, pulsed_g2_from_histogram,
    two_photon_probability, ArmPath, CorrelationHistogram, HomSimulation, InputUncertainties,
    PulseTrain, SplitterParams,
};
use cavsps_core::observables::{
    detector_convolve, empty_cavity_spectrum, g2_cw, transmission_spectrum, DetectorResponse,
    SpectrumModel,
};
use cavsps_core::qed::{
    dressed_resonances, steady_state_for, Detection, HilbertSpace, SystemParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Reference delay-table entries that contradict the table's own rule
/// (first-short = pair delay + interferometer delay).
const KNOWN_DEVIATIONS: &[u32] = &[3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn indistinguishability() -> Outcome {
    let split = SplitterParams::reference();
    let m = extract_indistinguishability(0.12, 0.037, &split).unwrap();
    // Independent evaluation of the closed form.
    let (r, t, v, g) = (0.469f64, 0.531f64, 0.96f64, 0.037f64);
    let oracle =
        (r * r + t * t) / (2.0 * r * t) / (v * v) * ((1.0 + 2.0 * g) - 0.12 * (2.0 + 2.0 * g));
    let sigma = extract_with_uncertainty(
        0.12,
        0.037,
        &split,
        &InputUncertainties {
            ratio: 0.004,
            g2_zero: 0.012,
            visibility: 0.1,
        },
    )
    .unwrap()
    .sigma;
    outcome(
        (m - 0.902).abs() <= 0.003 && (m - oracle).abs() < 1e-12,
        format!("M = {m:.4} (closed form {oracle:.4}); first-order sigma with visibility ±0.1: {sigma:.3}"),
    )
}

fn coupling() -> Outcome {
    let eta = coupling_efficiency(
        GaussianMode::new(2.95).unwrap(),
        GaussianMode::new(2.14).unwrap(),
        0.0,
    );
    let (a, b) = (2.95f64, 2.14f64);
    let oracle = (2.0 * a * b / (a * a + b * b)).powi(2);
    outcome(
        (eta - 0.904).abs() <= 0.001 && (eta - oracle).abs() < 1e-15,
        format!("eta = {eta:.5}"),
    )
}

fn delay_table_entries() -> Outcome {
    // Reference table: columns AA', BB', BA', AB; rows pair delay, then the
    // four arm paths.
    let reference: [(&str, [f64; 5]); 4] = [
        ("AA'", [12.5, 7.3, 12.5, 12.5, 17.2]),
        ("BB'", [12.5, 7.3, 12.5, 12.5, 17.2]),
        ("BA'", [7.3, 2.1, 7.3, 7.3, 12.5]),
        ("AB", [5.2, 0.0, 5.2, 5.2, 10.4]),
    ];
    let table = delay_table(&PulseTrain::reference(), 5.2).unwrap();
    let mut mismatches = Vec::new();
    let mut total = 0;
    for (label, row) in reference {
        let pair = table.pair(label).unwrap();
        let computed = [
            pair.delay,
            pair.arrival(ArmPath::FirstLong),
            pair.arrival(ArmPath::BothShort),
            pair.arrival(ArmPath::BothLong),
            pair.arrival(ArmPath::FirstShort),
        ];
        for (k, (c, p)) in computed.iter().zip(row).enumerate() {
            total += 1;
            if *c != p {
                mismatches.push(format!("{label} row {k}: computed {c} vs reference {p}"));
            }
        }
    }
    if mismatches.is_empty() {
        outcome(true, format!("{total}/{total} entries identical"))
    } else {
        outcome(
            false,
            format!(
                "{}/{total} entries identical; {}",
                total - mismatches.len(),
                mismatches.join("; ")
            ),
        )
    }
}

fn peak_ratio() -> Outcome {
    let table = delay_table(&PulseTrain::reference(), 5.2).unwrap();
    let a = predict_peak_areas(&table, &SplitterParams::balanced(), 0.0, 0.0).unwrap();
    let (a52, a21) = (a.area_at(5.2), a.area_at(2.1));
    let (m52, m21) = (a.area_at(-5.2), a.area_at(-2.1));
    outcome(
        a52 == 2.0 * a21 && m52 == 2.0 * m21,
        format!(
            "A(5.2)/A(2.1) = {}, A(-5.2)/A(-2.1) = {}",
            a52 / a21,
            m52 / m21
        ),
    )
}

fn perfect_hom() -> Outcome {
    let table = delay_table(&PulseTrain::reference(), 5.2).unwrap();
    let c = predict_peak_areas(&table, &SplitterParams::balanced(), 1.0, 0.0)
        .unwrap()
        .center();
    outcome(c.abs() <= 1e-12, format!("A_CP = {c:e}"))
}

fn coherent_g2() -> Outcome {
    let space = HilbertSpace::default();
    let tau = grid(0.0, 10.0, 101);
    let mut worst: f64 = 0.0;
    for e in [0.001, 0.005, 0.02] {
        let p = SystemParams::reference_device()
            .with_coupling(0.0)
            .with_laser(2.0)
            .with_drive(e);
        let c = g2_cw(&p, &space, &Detection::h(), &tau).unwrap();
        worst = c.values.iter().fold(worst, |w, v| w.max((v - 1.0).abs()));
    }
    outcome(
        worst < 1e-6,
        format!("max |g2 - 1| = {worst:.2e} over E in {{0.001, 0.005, 0.02}}"),
    )
}

fn empty_cavity_oracle() -> Outcome {
    // A tilted drive populates both modes.
    let p = SystemParams {
        drive_angle: 30.0,
        ..SystemParams::reference_device().with_coupling(0.0)
    };
    let f = grid(-30.0, 50.0, 200);
    let det = Detection::Unpolarized;
    let me = transmission_spectrum(&p, &HilbertSpace::default(), &det, &f).unwrap();
    let oracle = empty_cavity_spectrum(&p, &det, &f);
    let worst = me
        .values
        .iter()
        .zip(&oracle.values)
        .fold(0.0f64, |w, (a, b)| w.max((a - b).abs() / b));
    outcome(
        worst < 1e-6,
        format!("max relative deviation {worst:.2e} on 200 points"),
    )
}

fn spectrum_structure() -> Outcome {
    let p = SystemParams::reference_device();
    let space = HilbertSpace::default();
    let f = grid(-8.0, 6.0, 141);
    let unpol = transmission_spectrum(&p, &space, &Detection::Unpolarized, &f).unwrap();
    let crossed = transmission_spectrum(&p, &space, &Detection::v(), &f).unwrap();
    let dips = unpol.local_minima();
    let near = |target: f64, list: &[(f64, f64)]| {
        list.iter()
            .map(|m| m.0)
            .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
    };
    // Refine each coarse feature on a 5 MHz grid around it.
    let refine = |det: &Detection, coarse: Option<f64>, minimum: bool| {
        coarse.map(|c| {
            let s = transmission_spectrum(&p, &space, det, &grid(c - 0.15, c + 0.15, 61)).unwrap();
            let ext = if minimum {
                s.min_in(c - 0.15, c + 0.15)
            } else {
                s.max_in(c - 0.15, c + 0.15)
            };
            ext.unwrap().0
        })
    };
    let dip_x = refine(&Detection::Unpolarized, near(p.f_qd_x, &dips), true);
    let dip_y = refine(&Detection::Unpolarized, near(p.f_qd_y, &dips), true);
    // The Y line is pulled by its coupling to the V mode; locate it from the
    // single-excitation eigenmodes.
    let lines = dressed_resonances(&p).unwrap();
    let mut narrow = lines.clone();
    narrow.sort_by(|a, b| a.1.total_cmp(&b.1));
    let y_line = narrow[..2]
        .iter()
        .map(|l| l.0)
        .min_by(|a, b| (a - p.f_qd_y).abs().total_cmp(&(b - p.f_qd_y).abs()))
        .unwrap();
    let peak = refine(
        &Detection::v(),
        near(y_line, &crossed.local_maxima()),
        false,
    );
    let ok_x = dip_x.is_some_and(|d| (d - p.f_qd_x).abs() <= 0.2);
    let ok_y = dip_y.is_some_and(|d| (d - p.f_qd_y).abs() <= 0.2);
    let ok_peak = peak.is_some_and(|f| (f - y_line).abs() <= 0.2);
    outcome(
        ok_x && ok_y && ok_peak,
        format!(
            "dips at {dip_x:?} and {dip_y:?} GHz; crossed-polarizer maximum at {peak:?} GHz, dressed Y line {y_line:.3} GHz (bare {} GHz)",
            p.f_qd_y
        ),
    )
}

fn fit_round_trips() -> Outcome {
    let truth = SystemParams::reference_device();
    let start = SystemParams {
        g: 10.0,
        kappa: 60.0,
        gamma_par: 1.5,
        gamma_star: 0.6,
        f_cav_h: 0.0,
        f_cav_v: 15.0,
        f_qd_x: -3.2,
        f_qd_y: 0.5,
        phi: 10.0,
        ..truth
    };
    let cavity_grid = grid(-30.0, 50.0, 200);
    let qd_grid = grid(-10.0, 8.0, 200);
    // Cavity stage data: QD tuned far from both modes, diagonal drive.
    let detuned = SystemParams {
        f_qd_x: -400.0,
        f_qd_y: -396.1,
        drive_angle: 45.0,
        ..truth
    };
    let (mut kappa_ok, mut g_ok, mut phi_ok) = (0, 0, 0);
    let trials = 50;
    for seed in 0..trials {
        let cav_data = vec![synthetic_spectrum(
            &detuned,
            SpectrumModel::WeakDrive,
            &Detection::Unpolarized,
            &cavity_grid,
            0.01,
            1000 + seed,
        )
        .unwrap()];
        let cav = fit_cavity_stage(&cav_data, &start).unwrap();
        kappa_ok += usize::from((cav.kappa / truth.kappa - 1.0).abs() <= 0.02);
        let qd_data: Vec<SpectrumData> = [Detection::Unpolarized, Detection::v()]
            .iter()
            .enumerate()
            .map(|(k, d)| {
                synthetic_spectrum(
                    &truth,
                    SpectrumModel::WeakDrive,
                    d,
                    &qd_grid,
                    0.01,
                    2000 + 2 * seed + k as u64,
                )
                .unwrap()
            })
            .collect();
        let qd = fit_qd_stage(&qd_data, &cav.apply(&start), &QdStageOptions::default()).unwrap();
        g_ok += usize::from((qd.params.g / truth.g - 1.0).abs() <= 0.05);
        phi_ok += usize::from((qd.params.phi - truth.phi).abs() <= 2.0);
    }
    let need = (0.95 * trials as f64).ceil() as usize;
    outcome(
        kappa_ok >= need && g_ok >= need && phi_ok >= need,
        format!("of {trials} trials: kappa {kappa_ok}, g {g_ok}, phi {phi_ok} within tolerance"),
    )
}

/// Laplace CDF for a peak of scale `s` centred at `c`.
fn laplace_cdf(x: f64, c: f64, s: f64) -> f64 {
    if x < c {
        0.5 * ((x - c) / s).exp()
    } else {
        1.0 - 0.5 * (-(x - c) / s).exp()
    }
}

fn monte_carlo_agreement() -> Outcome {
    let split = SplitterParams::reference();
    let train = PulseTrain::reference();
    let (m, g2, n_periods) = (0.9, 0.037, 1_000_000usize);
    let sim = HomSimulation::new(train.clone(), 5.2, split, m, g2);
    let hist = monte_carlo_hom(&sim, n_periods, 20240601).unwrap();

    let table = delay_table(&train, 5.2).unwrap();
    let areas = predict_peak_areas(&table, &split, m, g2).unwrap();
    let p2 = two_photon_probability(g2).unwrap();
    let per_unit = n_periods as f64 * (1.0 + p2).powi(2);
    let half_bw = 0.5 * hist.bin_width();
    let windows = [-7.3, -5.2, -2.1, 0.0, 2.1, 5.2, 7.3];
    let mut chi2 = 0.0;
    for &w in &windows {
        let bins = hist.bins_within(w, 1.0);
        let observed: f64 = hist.counts()[bins.clone()].iter().sum();
        let (lo, hi) = (
            hist.center(bins.start) - half_bw,
            hist.center(bins.end - 1) + half_bw,
        );
        let expected: f64 = areas
            .peaks
            .iter()
            .map(|(c, a)| {
                a * per_unit
                    * (laplace_cdf(hi, *c, sim.lifetime) - laplace_cdf(lo, *c, sim.lifetime))
            })
            .sum();
        chi2 += (observed - expected).powi(2) / expected;
    }
    let dof = windows.len() as f64;
    let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(chi2);

    let centers = [-10.4, -7.3, -5.2, -2.1, 0.0, 2.1, 5.2, 7.3, 10.4];
    let fit = fit_double_exponential_peaks(&hist.crop(-9.5, 9.5), &centers, true).unwrap();
    let ratio =
        fit.area_near(0.0).unwrap() / (fit.area_near(-5.2).unwrap() + fit.area_near(5.2).unwrap());
    let m_back = extract_indistinguishability(ratio, g2, &split).unwrap();
    outcome(
        p_value > 0.01 && (m_back - 0.9).abs() <= 0.03,
        format!("chi2 = {chi2:.2} ({dof} dof, p = {p_value:.3}); fitted ratio {ratio:.4}, tau_r {:.3} ns -> M = {m_back:.4}", fit.tau()),
    )
}

fn pulsed_g2() -> Outcome {
    let period: f64 = 12.5;
    let bw: f64 = 0.05;
    let n = (3.0 * period / bw).round() as i64;
    let (side_area, center_area) = (20_000.0, 0.037 * 20_000.0);
    let tau = 0.5;
    let expected: Vec<f64> = (-n..=n)
        .map(|k| {
            let t = k as f64 * bw;
            (-3..=3)
                .map(|p| {
                    let a = if p == 0 { center_area } else { side_area };
                    a * bw / (2.0 * tau) * (-(t - p as f64 * period).abs() / tau).exp()
                })
                .sum()
        })
        .collect();
    let clean = CorrelationHistogram::uniform(-(n as f64) * bw, bw, expected.clone()).unwrap();
    let g_clean = pulsed_g2_from_histogram(&clean, period, period / 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sampled: Vec<f64> = expected
        .iter()
        .map(|&l| {
            if l > 0.0 {
                Poisson::new(l).unwrap().sample(&mut rng)
            } else {
                0.0
            }
        })
        .collect();
    let noisy = CorrelationHistogram::uniform(-(n as f64) * bw, bw, sampled).unwrap();
    let g_noisy = pulsed_g2_from_histogram(&noisy, period, period / 4.0).unwrap();
    outcome(
        (g_clean.value - 0.037).abs() <= g_clean.sigma
            && (g_noisy.value - 0.037).abs() <= 3.0 * g_noisy.sigma,
        format!(
            "expected-count histogram: {:.5} ± {:.5}; Poisson sample: {:.5} ± {:.5}",
            g_clean.value, g_clean.sigma, g_noisy.value, g_noisy.sigma
        ),
    )
}

fn detector_jitter() -> Outcome {
    let p = SystemParams::reference_device().with_drive(0.01);
    let tau = grid(0.0, 15.0, 1501);
    let raw = g2_cw(&p, &HilbertSpace::default(), &Detection::v(), &tau).unwrap();
    let truths = [
        DetectorResponse::new(0.7, 0.3, 1.0).unwrap(),
        DetectorResponse::single_exponential(0.35).unwrap(),
        DetectorResponse::new(0.5, 0.05, 0.4).unwrap(),
    ];
    let cal_grid = grid(-8.0, 8.0, 801);
    let mut ok = true;
    let mut notes = Vec::new();
    for (k, truth) in truths.iter().enumerate() {
        let data = synthetic_detector_curve(truth, 1e5, &cal_grid, 0.01, 40 + k as u64).unwrap();
        let fitted = fit_detector_response(&data).unwrap().response;
        let conv = detector_convolve(&raw, &fitted).unwrap();
        let tail = conv.values[conv.len() - 1];
        ok &= conv.at_zero() > raw.at_zero()
            && (tail - 1.0).abs() < 1e-3
            && (tail - raw.values[raw.len() - 1]).abs() < 1e-3;
        notes.push(format!(
            "g2(0) {:.4} -> {:.4}, tail {:.6}",
            raw.at_zero(),
            conv.at_zero(),
            tail
        ));
    }
    outcome(ok, notes.join("; "))
}

fn state_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2718);
    let space = HilbertSpace::default();
    let (mut failures, draws) = (0, 1000);
    let mut worst_min_eig: f64 = 0.0;
    for _ in 0..draws {
        let p = SystemParams {
            g: rng.random_range(0.0..40.0),
            kappa: rng.random_range(5.0..150.0),
            gamma_par: rng.random_range(0.05..5.0),
            gamma_star: rng.random_range(0.0..2.0),
            f_cav_h: rng.random_range(-30.0..30.0),
            f_cav_v: rng.random_range(-30.0..30.0),
            f_qd_x: rng.random_range(-30.0..30.0),
            f_qd_y: rng.random_range(-30.0..30.0),
            phi: rng.random_range(-90.0..90.0),
            drive_amplitude: rng.random_range(0.0..5.0),
            f_laser: rng.random_range(-30.0..30.0),
            drive_angle: rng.random_range(0.0..90.0),
        };
        match steady_state_for(&p, &space) {
            Ok(rho) => {
                worst_min_eig = worst_min_eig.min(rho.min_eigenvalue());
                if rho.check(1e-9).is_err() {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0,
        format!("{failures}/{draws} draws failed; most negative eigenvalue {worst_min_eig:.2e}"),
    )
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "indistinguishability extraction", indistinguishability),
        (2, "fiber coupling efficiency", coupling),
        (3, "delay table", delay_table_entries),
        (4, "peak-ratio law", peak_ratio),
        (5, "perfect interference null", perfect_hom),
        (6, "coherent-light g2", coherent_g2),
        (7, "empty-cavity oracle", empty_cavity_oracle),
        (8, "spectrum structure", spectrum_structure),
        (9, "fit round trips", fit_round_trips),
        (
            10,
            "Monte Carlo vs analytic peak areas",
            monte_carlo_agreement,
        ),
        (11, "pulsed g2 round trip", pulsed_g2),
        (12, "detector-jitter property", detector_jitter),
        (13, "steady-state sanity", state_sanity),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut unexpected = 0;
    let mut passed = 0;
    let mut run = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        run += 1;
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        let known = !result.pass && KNOWN_DEVIATIONS.contains(&id);
        println!(
            "{tag} [{id:02}] {name} ({secs:.1} s): {}{}",
            result.detail,
            if known { " [known deviation]" } else { "" }
        );
        if result.pass {
            passed += 1;
        } else if !known {
            unexpected += 1;
        }
    }
    println!("{passed}/{run} criteria passed, {unexpected} unexpected failures");
    if unexpected > 0 {
        std::process::exit(1);
    }
}
