mod common;

use proptest::prelude::*;

use common::{preset, PRESETS};
use levyflow::density::residual::ZERO_RESIDUAL_SLACK;
use levyflow::density::{
    exact_density_linear, principal_density, principal_density_grid, principal_gap_l1,
    principal_mass, residual_l1, ResidualMethod,
};
use levyflow::numerics::linear_fit;

#[test]
fn principal_density_has_unit_mass_on_every_preset() {
    for name in PRESETS {
        let (cfg, m) = preset(name);
        for t in [0.05, 0.1, 0.5] {
            let r = principal_mass(&m, t, &cfg.start_point(), 1e-5).unwrap();
            assert!((r.mass - 1.0).abs() <= 1e-3, "{name} t {t}: {}", r.mass);
        }
    }
}

#[test]
fn driftless_oracle_is_the_principal_density() {
    for name in ["cauchy_1d", "zero_constant_2d"] {
        let (cfg, m) = preset(name);
        let x = cfg.start_point();
        let t = 0.3;
        let axis: Vec<f64> = (0..=24).map(|k| -3.0 + 0.25 * k as f64).collect();
        let axes = vec![axis; m.dim()];
        let exact = exact_density_linear(&m, t, &x, axes.clone()).unwrap();
        let principal = principal_density_grid(&m, t, &x, axes).unwrap();
        let sup = exact
            .values
            .iter()
            .zip(&principal.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup <= 1e-6, "{name}: sup {sup}");
    }
}

#[test]
fn oracle_residual_shrinks_with_time_on_linear_presets() {
    let times = [0.2, 0.1, 0.05, 0.025];
    for (name, driftless) in [
        ("cauchy_1d", true),
        ("linear_1d", false),
        ("linear_2d_constant", false),
        ("zero_constant_2d", true),
    ] {
        let (cfg, m) = preset(name);
        let x = cfg.start_point();
        let r: Vec<_> = times
            .iter()
            .map(|t| residual_l1(&m, *t, &x, &ResidualMethod::Oracle).unwrap())
            .collect();
        let vanishing = r.iter().all(|b| b.lower <= ZERO_RESIDUAL_SLACK);
        assert_eq!(vanishing, driftless, "{name}: {r:?}");
        if !driftless {
            assert!(
                r.windows(2).all(|w| w[1].value < w[0].value),
                "{name}: {r:?}"
            );
        }
    }
}

#[test]
fn simplified_principal_part_converges_for_bounded_drift() {
    let (cfg, m) = preset("tanh_holder");
    let x = cfg.start_point();
    let times = [0.025, 0.05, 0.1, 0.2];
    let gaps: Vec<f64> = times
        .iter()
        .map(|t| principal_gap_l1(&m, *t, &x).unwrap().value)
        .collect();
    let fit = linear_fit(
        &times.iter().map(|t| t.ln()).collect::<Vec<_>>(),
        &gaps.iter().map(|g| g.ln()).collect::<Vec<_>>(),
    );
    assert!(fit.slope > 0.0, "gaps {gaps:?}, slope {}", fit.slope);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_matrix_gives_a_symmetric_principal_density(
        w0 in -3.0f64..3.0,
        w1 in -3.0f64..3.0,
        t in 0.05f64..1.0,
    ) {
        let (cfg, m) = preset("rotation");
        let x = cfg.start_point();
        let c = m.flow.chi(t, &x).unwrap();
        let plus = [c[0] + w0, c[1] + w1];
        let minus = [c[0] - w0, c[1] - w1];
        let a = principal_density(&m, t, &x, &plus).unwrap();
        let b = principal_density(&m, t, &x, &minus).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(b));
    }
}
