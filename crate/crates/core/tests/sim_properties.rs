mod common;

use common::{preset, PRESETS};
use levyflow::density::LinearOracle;
use levyflow::sim::{empirical_cf, estimate_semigroup, simulate, Scheme, SimConfig};

fn smooth(y: &[f64]) -> f64 {
    y.iter().map(|v| v.sin()).sum::<f64>() / y.len() as f64
}

#[test]
fn ensembles_do_not_depend_on_the_worker_count() {
    let (cfg, m) = preset("rotation");
    let config = SimConfig::new(1e-2, 0.5, 3_000, 99, Scheme::Reduced).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&m, &config, &cfg.start_point()).unwrap())
    };
    let one = run(1);
    let three = run(3);
    assert_eq!(one.ids, three.ids);
    assert!(one
        .values
        .iter()
        .zip(&three.values)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn halving_the_step_stays_within_the_noise() {
    for name in PRESETS {
        let (cfg, m) = preset(name);
        let x = cfg.start_point();
        for scheme in [Scheme::Direct, Scheme::Reduced] {
            let coarse = SimConfig::new(2e-2, 0.5, 20_000, 21, scheme).unwrap();
            let fine = SimConfig::new(1e-2, 0.5, 20_000, 22, scheme).unwrap();
            let a = estimate_semigroup(&m, smooth, 0.5, &x, &coarse).unwrap();
            let b = estimate_semigroup(&m, smooth, 0.5, &x, &fine).unwrap();
            let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
            assert!(
                (a.mean - b.mean).abs() < 3.0 * se,
                "{name} {scheme:?}: {} vs {} (se {se})",
                a.mean,
                b.mean
            );
        }
    }
}

#[test]
fn catalog_models_rarely_overflow() {
    for name in PRESETS {
        let (cfg, m) = preset(name);
        let config = SimConfig::new(1e-2, 1.0, 20_000, 5, Scheme::Direct).unwrap();
        let e = simulate(&m, &config, &cfg.start_point()).unwrap();
        assert!(
            e.excluded_fraction() < 1e-4,
            "{name}: {}",
            e.excluded_fraction()
        );
    }
}

#[test]
fn empirical_characteristic_function_matches_the_oracle() {
    for name in [
        "linear_1d",
        "linear_2d_constant",
        "rotation",
        "zero_constant_2d",
    ] {
        let (cfg, m) = preset(name);
        let x = cfg.start_point();
        let t = 0.5;
        let config = SimConfig::new(1e-3, t, 20_000, 8, Scheme::Direct).unwrap();
        let e = simulate(&m, &config, &x).unwrap();
        let oracle = LinearOracle::new(&m, t, &x).unwrap();
        for xi in [[0.5, 0.0], [0.0, 1.0], [0.7, -0.4], [1.5, 1.0]] {
            let z = &xi[..m.dim()];
            let (re, im) = oracle.char_function(z).unwrap();
            let cf = empirical_cf(&e, z);
            assert!(
                (cf.re - re).abs() < 3.0 * cf.re_se.max(1e-3),
                "{name} {z:?} re {} vs {re}",
                cf.re
            );
            assert!(
                (cf.im - im).abs() < 3.0 * cf.im_se.max(1e-3),
                "{name} {z:?} im {} vs {im}",
                cf.im
            );
        }
    }
}
