use nalgebra::DMatrix;
use proptest::prelude::*;

use levyflow::flow::{DriftField, FlowEngine, FlowMethod};

fn engines() -> Vec<FlowEngine> {
    let b = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, -1.0, 0.2]);
    [
        DriftField::zero(2),
        DriftField::linear(b).unwrap(),
        DriftField::rotation(1.0),
        DriftField::tanh_bounded(0.8, 2),
    ]
    .into_iter()
    .map(|d| FlowEngine::new(d).with_method(FlowMethod::Integrate))
    .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flows_compose(x0 in -2.0f64..2.0, x1 in -2.0f64..2.0, t in -0.5f64..0.5, s in -0.5f64..0.5) {
        for e in engines() {
            let direct = e.chi(t + s, &[x0, x1]).unwrap();
            let inner = e.chi(s, &[x0, x1]).unwrap();
            let composed = e.chi(t, inner.as_slice()).unwrap();
            prop_assert!((direct - composed).amax() <= 1e-8, "{}", e.drift.name());
        }
    }

    #[test]
    fn jacobians_obey_the_chain_rule(x0 in -2.0f64..2.0, x1 in -2.0f64..2.0, t in -1.0f64..1.0) {
        for e in engines() {
            let fwd = e.forward(t, &[x0, x1]).unwrap();
            let back = e.jacobian(t, fwd.point.as_slice()).unwrap();
            let id = back * &fwd.jacobian - DMatrix::identity(2, 2);
            prop_assert!(id.amax() <= 1e-6, "{}", e.drift.name());
        }
    }

    #[test]
    fn liouville_matches_the_determinant(x0 in -2.0f64..2.0, x1 in -2.0f64..2.0, t in -1.0f64..1.0) {
        for e in engines() {
            let direct = e.jacobian(t, &[x0, x1]).unwrap().determinant();
            let liouville = e.jac_det(t, &[x0, x1]).unwrap();
            prop_assert!((direct - liouville).abs() <= 1e-8 * liouville.abs(), "{}", e.drift.name());
        }
    }
}
