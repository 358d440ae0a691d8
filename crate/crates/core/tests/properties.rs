use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use ebcm::analysis::{
    chi2_reduced, fit_fringe, fit_points, phase_shift_between, subtract_darks, wrap_phase,
    FitResult, FringePoint, ModelTag,
};
use ebcm::model::{
    effective_arm_phases, DlmRules, DlmState, Interferometer, Messenger, Port, RegisterMode,
};
use ebcm::protocols::{DetectorModel, PhaseProtocol, XValue};
use ebcm::qm::{QmFringeModel, QmReference};
use ebcm::seeding::CellKey;
use num_complex::Complex64;

fn port(b: bool) -> Port {
    if b {
        Port::One
    } else {
        Port::Zero
    }
}

fn fit(offset: f64, sigma: f64) -> FitResult {
    FitResult {
        amplitude: 1.0,
        visibility: 0.5,
        phase_offset: offset,
        uncertainties: [0.1, 0.1, sigma],
        residual_sum: 0.0,
        n_points: 16,
        iterations: 1,
        converged: true,
        phase_identifiable: true,
        visibility_excess: false,
    }
}

proptest! {
    #[test]
    fn phase_shift_keeps_unit_norm(psi in -10.0..10.0f64, shifts in prop::collection::vec(-10.0..10.0f64, 1..50)) {
        let mut m = Messenger::from_angle(psi, Port::Zero);
        let mut total = psi;
        for s in &shifts {
            m = m.phase_shift(*s);
            total += s;
        }
        prop_assert!((m.phase_vector().norm() - 1.0).abs() < 1e-9);
        prop_assert!(wrap_phase(m.angle() - total).abs() < 1e-9);
    }

    #[test]
    fn dlm_state_stays_normalized(
        alpha in 0.0..=1.0f64,
        arrivals in prop::collection::vec((any::<bool>(), -PI..PI), 1..200),
        averaged in any::<bool>(),
    ) {
        let mode = if averaged { RegisterMode::Averaged } else { RegisterMode::Overwrite };
        let mut dlm = DlmState::new(alpha).unwrap();
        for (p, psi) in arrivals {
            dlm.update(&Messenger::from_angle(psi, port(p)), mode);
            let x = dlm.intensity();
            prop_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
            prop_assert!(dlm.registers().iter().all(|r| (r.norm() - 1.0).abs() < 1e-9));
            let (w0, w1) = dlm.amplitudes();
            prop_assert!((w0.norm_sqr() + w1.norm_sqr() - 1.0).abs() < 1e-9);
            let p0 = dlm.prob_port0();
            prop_assert!((0.0..=1.0).contains(&p0));
        }
    }

    #[test]
    fn routing_closed_form(x0 in 0.0..=1.0f64, psi0 in -PI..PI, psi1 in -PI..PI) {
        let regs = [Complex64::from_polar(1.0, psi0), Complex64::from_polar(1.0, psi1)];
        let dlm = DlmState::from_parts(0.9, [x0, 1.0 - x0], regs).unwrap();
        let expect = 0.5 + (x0 * (1.0 - x0)).sqrt() * (psi0 - psi1).sin();
        prop_assert!((dlm.prob_port0() - expect).abs() < 1e-12);
    }

    #[test]
    fn crosstalk_scales_the_net_difference(phi0 in -TAU..TAU, phi1 in -TAU..TAU, beta in 0.0..=0.2f64) {
        let (a, b) = effective_arm_phases(phi0, phi1, beta).unwrap();
        prop_assert!((a - b - (1.0 + beta) * (phi0 - phi1)).abs() < 1e-12);
    }

    #[test]
    fn traversal_probabilities_are_valid(alpha in 0.0..1.0f64, beta in 0.0..=0.2f64, seed in any::<u64>()) {
        let mut ifo = Interferometer::new(alpha, beta, DlmRules::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..200 {
            ifo.set_modulators(rng.random::<f64>() * TAU, if i % 2 == 0 { 0.0 } else { PI / 2.0 });
            let t = ifo.traverse(Port::Zero, &mut rng);
            prop_assert!((0.0..=1.0).contains(&t.prob_port0));
        }
        prop_assert_eq!(ifo.traversals(), 200);
    }

    #[test]
    fn mixture_closure(beta in 0.0..=0.2f64, eff in 0.01..=1.0f64, dark in 0.0..=0.1f64, phi in -TAU..TAU) {
        let det = DetectorModel::with(eff, dark);
        let mix = QmFringeModel::new(PhaseProtocol::RandomPerN(7), beta, &det).eval(phi);
        let m = QmFringeModel::new(PhaseProtocol::FixedX(XValue::Minus), beta, &det).eval(phi);
        let p = QmFringeModel::new(PhaseProtocol::FixedX(XValue::Plus), beta, &det).eval(phi);
        prop_assert!((mix - 0.5 * (m + p)).abs() < 1e-12);
    }

    #[test]
    fn chi2_is_additive(pairs in prop::collection::vec((0.0..1e4f64, 0.0..1e4f64), 2..40), split in 1usize..39) {
        let split = split.min(pairs.len() - 1);
        let (o, e): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let whole = chi2_reduced(&o, &e, 0, ModelTag::Qm).unwrap().chi2;
        let left = chi2_reduced(&o[..split], &e[..split], 0, ModelTag::Qm).unwrap().chi2;
        let right = chi2_reduced(&o[split..], &e[split..], 0, ModelTag::Qm).unwrap().chi2;
        prop_assert!((whole - left - right).abs() <= 1e-9 * whole.max(1.0));
    }

    #[test]
    fn shift_is_antisymmetric(a in -10.0..10.0f64, b in -10.0..10.0f64) {
        let (ab, s1) = phase_shift_between(&fit(a, 0.1), &fit(b, 0.2)).unwrap();
        let (ba, s2) = phase_shift_between(&fit(b, 0.2), &fit(a, 0.1)).unwrap();
        prop_assert!(ab > -PI && ab <= PI);
        prop_assert!(wrap_phase(ab + ba).abs() < 1e-12);
        prop_assert_eq!(s1, s2);
    }

    #[test]
    fn sub_seeds_separate_cells(phi in -TAU..TAU, slot in 0u32..5000, index in 0u32..1000, master in any::<u64>()) {
        let base = CellKey::new(phi, slot, index).sub_seed(master);
        prop_assert_ne!(base, CellKey::new(phi, slot, index + 1).sub_seed(master));
        prop_assert_ne!(base, CellKey::new(phi, slot + 1, index).sub_seed(master));
        prop_assert_ne!(base, CellKey::new(phi + 0.1, slot, index).sub_seed(master));
        prop_assert_ne!(base, CellKey::new(phi, slot, index).sub_seed(master ^ 1));
    }

    #[test]
    fn protocol_text_round_trips(n in 1u32..10_000) {
        let p = PhaseProtocol::RandomPerN(n).canonical();
        prop_assert_eq!(p.to_string().parse::<PhaseProtocol>().unwrap(), p);
    }
}

#[test]
fn normalization_over_ten_million_updates() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut dlm = DlmState::new(0.999).unwrap();
    let mut msg = Messenger::from_angle(0.3, Port::Zero);
    for _ in 0..10_000_000u64 {
        msg = msg
            .phase_shift(rng.random::<f64>() * TAU)
            .on_port(port(rng.random()));
        dlm.update(&msg, RegisterMode::Overwrite);
    }
    let x = dlm.intensity();
    assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
    assert!((msg.phase_vector().norm() - 1.0).abs() < 1e-9);
    let (w0, w1) = dlm.amplitudes();
    assert!((w0.norm_sqr() + w1.norm_sqr() - 1.0).abs() < 1e-9);
}

#[test]
fn fit_round_trip_coverage() {
    let (a, v, theta) = (2_000.0, 0.6, -2.1);
    let mut covered = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points: Vec<FringePoint> = (0..16)
            .map(|i| {
                let phi0 = TAU * f64::from(i) / 16.0;
                FringePoint {
                    phi0,
                    counts: Poisson::new(a * (1.0 + v * (phi0 + theta).cos()))
                        .unwrap()
                        .sample(&mut rng),
                }
            })
            .collect();
        let f = fit_points(&points).unwrap();
        assert!(f.converged);
        covered += usize::from(
            (f.amplitude - a).abs() <= 3.0 * f.sigma_amplitude()
                && (f.visibility - v).abs() <= 3.0 * f.sigma_visibility()
                && wrap_phase(f.phase_offset - theta).abs() <= 3.0 * f.sigma_phase(),
        );
    }
    assert!(covered >= 190, "{covered}/200");
}

fn reference(det: DetectorModel, seed: u64) -> Vec<ebcm::FringeRecord> {
    QmReference {
        phi0_grid: (0..16).map(|i| TAU * f64::from(i) / 16.0).collect(),
        protocols: vec![PhaseProtocol::FixedX(XValue::Plus)],
        photons_per_point: 5_000,
        beta: 0.0,
        detector: det,
        master_seed: seed,
    }
    .simulate(0)
}

#[test]
fn qm_data_fits_to_full_visibility() {
    for (seed, eff) in [(1, 1.0), (2, 0.3), (3, 0.05)] {
        let f = fit_fringe(&reference(DetectorModel::with(eff, 0.0), seed)).unwrap();
        assert!(
            (f.visibility - 1.0).abs() < 3.0 * f.sigma_visibility(),
            "eff {eff}: {f:?}"
        );
        assert!(!f.visibility_excess);
    }
}

#[test]
fn dark_subtraction_keeps_the_phase() {
    for (seed, dark) in [(4, 0.01), (5, 0.03), (6, 0.05)] {
        let det = DetectorModel::with(0.5, dark);
        let raw = reference(det, seed);
        let clean: Vec<_> = raw.iter().map(|r| subtract_darks(r, &det)).collect();
        let (a, b) = (fit_fringe(&raw).unwrap(), fit_fringe(&clean).unwrap());
        let z = wrap_phase(a.phase_offset - b.phase_offset).abs()
            / a.sigma_phase().hypot(b.sigma_phase());
        assert!(z < 2.0, "dark {dark}: {z}");
        assert!(b.visibility > a.visibility);
    }
}

#[test]
fn qm_reduced_chi2_with_fitted_parameters_is_near_one() {
    // 16 points, 3 fitted parameters, 100 seeds
    let mut values: Vec<f64> = (0..100u64)
        .map(|seed| {
            let recs = reference(DetectorModel::default(), 100 + seed);
            let f = fit_fringe(&recs).unwrap();
            let observed: Vec<f64> = recs.iter().map(|r| r.counts_port0 as f64).collect();
            let expected: Vec<f64> = recs.iter().map(|r| f.eval(r.phi0)).collect();
            chi2_reduced(&observed, &expected, 3, ModelTag::Qm)
                .unwrap()
                .reduced_chi2
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let median = 0.5 * (values[49] + values[50]);
    assert!((0.7..=1.3).contains(&median), "{median}");
}
