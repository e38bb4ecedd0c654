use smdiff::analysis::{
    error_metrics, error_norms, frozen_closed_loop, k_max_over_range, log_grid, neighborhood_check,
    observed_w1, range_of, remainder_bound, spectral_radius,
};
use smdiff::harness::{
    csv_header, csv_row, preset, run, run_many, InitialCondition, PresetOverrides, RunConfig,
    SignalModel, Sinusoid, SIM1_L_VALID_UNTIL,
};
use smdiff::synthesis::SynthesisCache;
use smdiff::{RootSpec, Variant};

fn sim1(roots: RootSpec) -> RunConfig {
    preset(
        "sim1",
        &PresetOverrides {
            roots: Some(roots),
            ..Default::default()
        },
    )
    .unwrap()
}

#[test]
fn cubic_deadbeat_from_offset() {
    let mut config = sim1(RootSpec::Repeated(-2.5));
    config.t_end = 3.0;
    config.signal = SignalModel::Polynomial {
        coeffs: vec![0.0, 0.0, 0.0, 1.0],
    };
    config.initial = InitialCondition::ErrorOffset {
        w: vec![1.0, 1.0],
        sigma: vec![1.0, 1.0, 0.0, 0.0],
    };
    let records = run(&config).unwrap();
    assert_eq!(records.len(), 301);
    let norms = error_norms(&records).unwrap();
    let hit = norms
        .iter()
        .position(|v| *v < 1e-9)
        .expect("never converged");
    assert!(hit <= 300);
    // afterwards only rounding of f ~ t^3 remains, amplified by tau^-3
    let floor = 8.0 * f64::EPSILON * 27.0 / config.params.tau.powi(3);
    assert!(norms[hit..].iter().all(|v| *v < floor), "floor {floor:e}");
}

#[test]
fn sim1_stays_in_theorem_neighborhood() {
    let grid = log_grid(1e-4, 1e2, 13).unwrap();
    for roots in [
        RootSpec::FromCharPoly,
        RootSpec::Repeated(-1.5),
        RootSpec::Repeated(-2.5),
        RootSpec::Repeated(-5.0),
    ] {
        let config = sim1(roots);
        let records = run(&config).unwrap();
        let metrics = error_metrics(&records, 0.5).unwrap();
        let settle = records
            .iter()
            .position(|r| r.k >= metrics.settling_step)
            .unwrap();

        let b = config.params.resolve_roots().unwrap();
        let cache = SynthesisCache::new(3, 2, config.params.tau).unwrap();
        let range = range_of(&observed_w1(&records)[settle..]);
        let (k_max, _) = k_max_over_range(&cache, &b, &grid, range).unwrap();
        let h = remainder_bound(2.0, config.params.tau, 3).norm();
        let worst = error_norms(&records[settle..])
            .unwrap()
            .into_iter()
            .fold(0.0, f64::max);
        assert!(
            worst <= k_max * h,
            "{:?}: {worst} > {k_max} * {h}",
            config.params.roots
        );

        let check = neighborhood_check(&config.params, &records, &grid).unwrap();
        assert!(check.holds);
    }
}

#[test]
fn frozen_loops_are_contractive_with_matched_radius() {
    let config = sim1(RootSpec::FromCharPoly);
    let b = config.params.resolve_roots().unwrap();
    let cache = SynthesisCache::new(3, 2, 0.01).unwrap();
    let max_re = b.iter().map(|r| r.re).fold(f64::NEG_INFINITY, f64::max);
    for w1 in log_grid(1e-4, 1e2, 13).unwrap() {
        let e = frozen_closed_loop(&cache, &b, w1).unwrap();
        let rho = spectral_radius(&e).unwrap();
        let expected = (0.01 * w1.powf(-1.0 / 6.0) * max_re).exp();
        assert!(rho < 1.0);
        assert!(
            (rho - expected).abs() < 1e-8,
            "w1 {w1}: {rho} vs {expected}"
        );
    }
}

#[test]
fn halving_tau_tightens_tail_errors() {
    let coarse = error_metrics(&run(&sim1(RootSpec::FromCharPoly)).unwrap(), 0.5).unwrap();
    let fine_config = preset(
        "sim1",
        &PresetOverrides {
            tau: Some(0.005),
            ..Default::default()
        },
    )
    .unwrap();
    let fine = error_metrics(&run(&fine_config).unwrap(), 0.5).unwrap();
    for (c, f) in coarse.tail_sup.iter().zip(&fine.tail_sup) {
        assert!(f <= c);
    }
    assert!(coarse.tail_sup[3] / fine.tail_sup[3] >= 1.5);
}

#[test]
fn sim1_horizon_inside_validity_window() {
    let config = sim1(RootSpec::FromCharPoly);
    assert!(config.t_end < SIM1_L_VALID_UNTIL);
    // |f''''| = |t cos(t/2)/16 - sin(t/2)/4| stays below L = 2 on the horizon
    let signal = SignalModel::TCosHalf;
    let worst = (0..=30_000)
        .map(|i| signal.derivative(4, i as f64 * 1e-3).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 2.0, "{worst}");
}

#[test]
fn truth_agrees_with_finite_differences() {
    let signals = [
        SignalModel::Polynomial {
            coeffs: vec![1.0, -2.0, 0.5, 0.25, -0.125],
        },
        SignalModel::TCosHalf,
        SignalModel::HarmonicMix,
        SignalModel::Custom {
            sinusoids: vec![Sinusoid {
                amplitude: 1.5,
                frequency: 2.0,
                phase: 0.3,
            }],
            polynomial: vec![0.0, 1.0],
        },
    ];
    let h = 1e-6;
    for signal in &signals {
        for i in 0..=100 {
            let t = i as f64 * 0.1;
            for j in 1..=4 {
                let fd =
                    (signal.derivative(j - 1, t + h) - signal.derivative(j - 1, t - h)) / (2.0 * h);
                let exact = signal.derivative(j, t);
                let scale = exact.abs().max(signal.derivative(j - 1, t).abs()).max(1.0);
                assert!(
                    (fd - exact).abs() <= 1e-4 * scale,
                    "{signal:?} j={j} t={t}: {fd} vs {exact}"
                );
            }
        }
    }
}

#[test]
fn sim2_is_reproducible_and_seed_sensitive() {
    let short = |seed| {
        preset(
            "sim2",
            &PresetOverrides {
                t_end: Some(0.5),
                seed: Some(seed),
                ..Default::default()
            },
        )
        .unwrap()
    };
    let results = run_many(&[short(1), short(1), short(2)]);
    let csv = |r: &Vec<_>| r.iter().map(csv_row).collect::<Vec<_>>().join("\n");
    let traces: Vec<String> = results.iter().map(|r| csv(r.as_ref().unwrap())).collect();
    assert_eq!(traces[0], traces[1]);
    assert_ne!(traces[0], traces[2]);
}

#[test]
fn sim2_variants_complete_and_attenuate_noise() {
    for roots in [RootSpec::FromCharPoly, RootSpec::Repeated(-2.5)] {
        let config = preset(
            "sim2",
            &PresetOverrides {
                roots: Some(roots),
                ..Default::default()
            },
        )
        .unwrap();
        let records = run(&config).unwrap();
        assert_eq!(records.last().unwrap().k, 100_000);
        let metrics = error_metrics(&records, 0.5).unwrap();
        let start = records.len() - metrics.tail_len;
        let noise = records[start..]
            .iter()
            .map(|r| (r.f - r.x.as_ref().unwrap()[0]).abs())
            .fold(0.0, f64::max);
        assert!(
            metrics.tail_sup[0] < noise,
            "{} vs {noise}",
            metrics.tail_sup[0]
        );
    }
}

#[test]
fn euler_baselines_run_the_presets() {
    for variant in [Variant::StandardEuler, Variant::FilteringEuler] {
        let config = preset(
            "sim1",
            &PresetOverrides {
                variant: Some(variant),
                t_end: Some(5.0),
                ..Default::default()
            },
        )
        .unwrap();
        let records = run(&config).unwrap();
        assert_eq!(records.len(), 501);
        let header = csv_header(config.params.n, config.params.n_f);
        assert_eq!(
            header.split(',').count(),
            csv_row(&records[0]).split(',').count()
        );
    }
}
