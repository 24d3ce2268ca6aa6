use proptest::prelude::*;
use rand::Rng;

use rwd_core::correspondence::{embed, model_output, project};
use rwd_core::dsl::{self, ModelFile, RewritingFile};
use rwd_core::dynamics::from_recurrence;
use rwd_core::eval::{catamorphism, extend_with_identity, CarrierKind, Expr, Value};
use rwd_core::gen::{self, ModelParams};
use rwd_core::recurrence::{vandermonde_check, vandermonde_determinant, RecurrenceRelation};
use rwd_core::rewrite::{assemble, closed_form_iterate, flatten, is_flat, is_uniformly_deep, iterate, lift};

fn rng(seed: u64) -> gen::CaseRng {
    gen::case_rng(seed, 7, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printed_terms_parse_back(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = gen::random_signature(&mut r, 4).with_identity();
        let vars = gen::variables(r.random_range(0..=3));
        let t = gen::random_term_with_iota(&mut r, &sig, &vars, 5);
        let back = dsl::parse_term(&dsl::print_term(&t), &sig, &vars.iter().cloned().collect()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn flatten_is_flat_idempotent_and_sound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = gen::random_signature(&mut r, 3);
        let alg = extend_with_identity(&gen::random_rational_algebra(&mut r, &sig, 0.3));
        let t = gen::random_ground_term(&mut r, &sig, 5);
        let f = flatten(&t);
        prop_assert!(is_flat(&f));
        prop_assert_eq!(f.depth(), t.depth());
        prop_assert_eq!(flatten(&f), f.clone());
        prop_assert_eq!(catamorphism(&alg, &f).unwrap(), catamorphism(&alg, &t).unwrap());
    }

    #[test]
    fn lift_then_assemble_is_identity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let sig = gen::random_signature(&mut r, 3);
        let vars = gen::variables(2);
        let t = flatten(&gen::random_term(&mut r, &sig, &vars, 4, 0.5));
        prop_assume!(is_uniformly_deep(&t));
        let lt = lift(&t).unwrap();
        prop_assert_eq!(lt.len() as u64, t.leaf_number());
        prop_assert_eq!(assemble(&lt).unwrap(), t);
    }

    #[test]
    fn closed_form_matches_iteration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = gen::random_bounded_model(&mut r, &ModelParams::default(), 8, 256);
        let iterates = iterate(m.rule(), m.initial(), 8).unwrap();
        for (n, t) in iterates.iter().enumerate() {
            prop_assert_eq!(&closed_form_iterate(m.rule(), m.tau(), m.initial(), n).unwrap(), t);
        }
    }

    #[test]
    fn projection_reproduces_model_outputs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = gen::random_bounded_model(&mut r, &ModelParams::default(), 10, 256);
        let got = project(&m).unwrap().outputs(10).unwrap();
        for (n, v) in got.iter().enumerate() {
            prop_assert_eq!(v, &model_output(&m, n).unwrap());
        }
    }

    #[test]
    fn embedding_reproduces_system_outputs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (sys, x0) = gen::random_linear_system(&mut r, 4);
        let want = sys.trajectory(&x0, 12).unwrap().outputs;
        let m = embed(&sys, &x0).unwrap();
        prop_assert_eq!(m.outputs(12).unwrap(), want.clone());
        prop_assert_eq!(project(&m).unwrap().outputs(12).unwrap(), want);
    }

    #[test]
    fn model_files_print_and_parse_back(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = gen::random_model(&mut r, &ModelParams::default());
        let file = ModelFile::Rewriting(RewritingFile::from_model(&m));
        let back = dsl::parse_model(&dsl::print(&file)).unwrap();
        prop_assert_eq!(back, file);
    }

    #[test]
    fn shift_system_emits_the_recurrence(
        coeffs in prop::collection::vec(-3i64..=3, 1..4),
        inits in prop::collection::vec(-5i64..=5, 4),
    ) {
        let d = coeffs.len();
        let step = Expr::linear(coeffs.iter().map(|&c| c.into()).collect(), 0.into());
        let inits: Vec<Value> = inits[..d].iter().map(|&v| Value::rational(v)).collect();
        let rec = RecurrenceRelation::new(CarrierKind::Rational, step.clone(), inits.clone()).unwrap();
        let seq = rec.unroll(15).unwrap();
        let (sys, y0) = from_recurrence(CarrierKind::Rational, step, inits).unwrap();
        let out = sys.trajectory(&y0, 15 - (d - 1)).unwrap().outputs;
        prop_assert_eq!(&out[..], &seq[d - 1..]);
    }

    #[test]
    fn vandermonde_product_matches_determinant(
        pairs in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6),
    ) {
        let (b, l): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let direct = vandermonde_determinant(&b, &l).unwrap();
        let product = vandermonde_check(&b, &l);
        prop_assert!((direct - product).abs() <= 1e-9 * direct.abs().max(1e-300));
    }
}
