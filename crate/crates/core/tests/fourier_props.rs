use fdeorbit::continuation::shift_coeffs;
use fdeorbit::fourier::{analyze, antiderivative, differentiate, grid, project, shift};
use fdeorbit::{CoeffVec, PeriodicFn, Projection};
use proptest::prelude::*;

fn periodic(dim: usize, modes: usize) -> impl Strategy<Value = PeriodicFn> {
    prop::collection::vec(-1.0f64..1.0, dim * (2 * modes + 1))
        .prop_map(move |c| PeriodicFn::new(dim, modes, c).unwrap())
}

fn max_diff(a: &PeriodicFn, b: &PeriodicFn) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #[test]
    fn grid_round_trip(x in periodic(2, 5)) {
        let t = grid(5);
        let mut samples = Vec::new();
        for i in 0..2 {
            samples.extend(t.iter().map(|&s| x.eval(s)[i]));
        }
        prop_assert!(max_diff(&analyze(2, &samples).unwrap(), &x) < 1e-13);
    }

    #[test]
    fn shifts_compose_and_return(x in periodic(1, 6), s in -4.0f64..4.0, u in -4.0f64..4.0) {
        prop_assert!(max_diff(&shift(&shift(&x, s), u), &shift(&x, s + u)) < 1e-12);
        prop_assert!(max_diff(&shift(&x, 2.0 * std::f64::consts::PI), &x) < 1e-12);
        prop_assert!((shift(&x, s).eval(0.3)[0] - x.eval(0.3 + s)[0]).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_inverts_derivative(x in periodic(1, 7)) {
        let mut centred = x.clone();
        centred.set_coeff(0, 0, 0.0);
        prop_assert!(max_diff(&differentiate(&antiderivative(&x)), &centred) < 1e-13);
        prop_assert!(antiderivative(&x).eval(0.0)[0].abs() < 1e-13);
    }

    #[test]
    fn projections_split_the_function(x in periodic(1, 8), n in 0usize..8) {
        let p = project(&x, n, Projection::P);
        let q = project(&x, n, Projection::Q);
        prop_assert!(max_diff(&(&p + &q), &x) == 0.0);
        prop_assert!(max_diff(&project(&p, n, Projection::P), &p) == 0.0);
        prop_assert!(project(&q, n, Projection::P).coeff_norm() == 0.0);
    }

    #[test]
    fn coefficient_shift_is_a_rotation(c in prop::collection::vec(-1.0f64..1.0, 9), t in -7.0f64..7.0) {
        let p = CoeffVec::new(1, 4, c).unwrap();
        let r = shift_coeffs(&p, t);
        prop_assert!((r.norm() - p.norm()).abs() < 1e-12);
        prop_assert!(max_diff(&r.embed(), &shift(&p.embed(), t)) < 1e-13);
    }
}
