use levyflow::levy::{
    density_1d, epsilon0, epsilon0_terms, Component, EpsilonInputs, NoiseSpec, Regime,
    StableComponent,
};
use levyflow::numerics::stream_rng;
use proptest::prelude::*;

fn component(alpha: f64, scale: f64, mix: Option<f64>) -> Component {
    let s = StableComponent::new(alpha, scale).unwrap();
    match mix {
        Some(a2) => Component::Mixture {
            parts: vec![s, StableComponent::new(a2, 0.5).unwrap()],
        },
        None => Component::Stable(s),
    }
}

proptest! {
    #[test]
    fn symbol_is_even_zero_at_origin_and_monotone(
        alpha in 0.1f64..1.95,
        scale in 0.1f64..5.0,
        mix in proptest::option::of(0.1f64..1.95),
        xi in -1e3f64..1e3,
    ) {
        let c = component(alpha, scale, mix);
        prop_assert_eq!(c.psi(0.0).unwrap(), 0.0);
        prop_assert_eq!(c.psi(xi).unwrap(), c.psi(-xi).unwrap());
        let grid: Vec<f64> = (0..=60).map(|k| 10f64.powf(k as f64 / 20.0)).collect();
        let values: Vec<f64> = grid.iter().map(|x| c.psi(*x).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn epsilon0_is_positive_when_inputs_are_admissible(
        regime_b in any::<bool>(),
        alpha in 0.05f64..1.99,
        spread in 0.0f64..1.0,
        eta1 in 0.01f64..1.0,
        eta2 in 0.01f64..1.0,
        d in 1usize..6,
    ) {
        let beta = alpha + spread * (2.0 - alpha) * 0.999;
        let p = EpsilonInputs {
            regime: if regime_b { Regime::B } else { Regime::A },
            alpha,
            beta,
            eta1,
            eta2,
            d,
        };
        if epsilon0_terms(&p).is_ok() {
            let e = epsilon0(&p).unwrap();
            prop_assert!(e > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tabulated_marginals_are_normalised(alpha in 0.5f64..1.95, t in 0.05f64..1.0) {
        let spec = NoiseSpec::unit_stable(&[alpha]).unwrap();
        let c = spec.component(0).unwrap();
        let q = c.tail_quantile(t, 1e-3).unwrap();
        let sigma = c.tail_quantile(t, 0.5).unwrap();
        let v_max = (q / sigma).asinh();
        let grid: Vec<f64> = (0..=4000)
            .map(|k| sigma * (-v_max + 2.0 * v_max * k as f64 / 4000.0).sinh())
            .collect();
        let d = density_1d(&spec, 0, t, &grid).unwrap();
        prop_assert!(d.density.iter().all(|v| *v >= 0.0));
        prop_assert!(d.grid_mass >= 0.995 && d.grid_mass <= 1.0, "mass {}", d.grid_mass);
    }
}

#[test]
fn sampler_histogram_matches_density() {
    let n = 100_000;
    for (k, alpha) in [0.6, 1.0, 1.5].into_iter().enumerate() {
        let spec = NoiseSpec::unit_stable(&[alpha]).unwrap();
        let c = spec.component(0).unwrap();
        let t = 0.3;
        let q = c.tail_quantile(t, 0.02).unwrap();
        let sigma = c.tail_quantile(t, 0.5).unwrap();
        let v_max = (q / sigma).asinh();
        let bins = 200;
        let sub = 20;
        let nodes: Vec<f64> = (0..=bins * sub)
            .map(|k| sigma * (-v_max + 2.0 * v_max * k as f64 / (bins * sub) as f64).sinh())
            .collect();
        let d = density_1d(&spec, 0, t, &nodes).unwrap();
        let expected: Vec<f64> = (0..bins)
            .map(|b| {
                (b * sub..(b + 1) * sub)
                    .map(|j| 0.5 * (nodes[j + 1] - nodes[j]) * (d.density[j] + d.density[j + 1]))
                    .sum()
            })
            .collect();
        let mut counts = vec![0usize; bins];
        let mut rng = stream_rng(5, k as u64);
        for _ in 0..n {
            let x = c.sample_increment(t, &mut rng).unwrap();
            if x.abs() < q {
                let v = (x / sigma).asinh();
                let b = ((v + v_max) / (2.0 * v_max) * bins as f64) as usize;
                counts[b.min(bins - 1)] += 1;
            }
        }
        let l1: f64 = counts
            .iter()
            .zip(&expected)
            .map(|(cnt, e)| (*cnt as f64 / n as f64 - e).abs())
            .sum();
        let outside = 1.0 - counts.iter().sum::<usize>() as f64 / n as f64;
        let l1 = l1 + (outside - 0.02).abs();
        assert!(l1 <= 0.05, "alpha {alpha}: L1 {l1}");
    }
}
