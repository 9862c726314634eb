use std::sync::Arc;

use normal_tori::oracle::{canonical_form, perturb_with, random_normal_torus, PerturbOptions};
use normal_tori::{label_generators, normalize, random_cubic, NormalTorus, SphereGraph, TorusPosition};
use proptest::prelude::*;

fn torus(rank: u32, seed: u64) -> TorusPosition {
    let g = Arc::new(random_cubic(rank, seed).unwrap());
    random_normal_torus(&g, seed, 8).unwrap()
}

fn opts(cap_probability: f64) -> PerturbOptions {
    PerturbOptions { cap_probability }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_graphs_are_cubic_with_the_right_rank(rank in 2u32..=6, seed in any::<u64>()) {
        let g = random_cubic(rank, seed).unwrap();
        prop_assert!(g.validate().is_empty());
        prop_assert_eq!(g.betti(), rank as i64);
        prop_assert_eq!(3 * g.p_vertices().len(), 2 * g.edges().len());
        let back: SphereGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn positions_survive_serde(rank in 2u32..=4, seed in any::<u64>(), k in 0usize..=4) {
        let t = perturb_with(&torus(rank, seed), seed, k, opts(0.3)).unwrap();
        let back: TorusPosition = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn round_trip_recovers_the_torus(rank in 2u32..=4, seed in any::<u64>(), k in 0usize..=8, caps in 0.1f64..=1.0) {
        let nt = torus(rank, seed);
        let p = perturb_with(&nt, seed ^ 1, k, opts(caps)).unwrap();
        prop_assert_eq!(p.total_intersection(), nt.total_intersection() + k);
        let n = normalize(&p).unwrap();
        prop_assert_eq!(n.trace.len(), k);
        prop_assert_eq!(canonical_form(&n.position).unwrap(), canonical_form(&nt).unwrap());
        prop_assert_eq!(n.position.intersection_vector(), nt.intersection_vector());
    }

    #[test]
    fn traces_are_monotone(rank in 2u32..=4, seed in any::<u64>(), k in 1usize..=8) {
        let p = perturb_with(&torus(rank, seed), seed, k, opts(0.3)).unwrap();
        let n = normalize(&p).unwrap();
        for step in &n.trace {
            let before: usize = step.before.values().sum();
            let after: usize = step.after.values().sum();
            prop_assert_eq!(after + 1, before);
            prop_assert!(step.after.iter().all(|(s, c)| *c <= step.before[s]));
        }
    }

    #[test]
    fn normal_tori_are_fixpoints(rank in 2u32..=4, seed in any::<u64>()) {
        let nt = torus(rank, seed);
        prop_assert!(nt.is_normal().normal);
        let n = normalize(&nt).unwrap();
        prop_assert!(n.trace.is_empty());
        prop_assert_eq!(n.position, nt);
    }

    #[test]
    fn solid_torus_status_is_stable(rank in 2u32..=4, seed in any::<u64>(), k in 0usize..=6) {
        let nt = torus(rank, seed);
        let base = *nt.pieces.keys().next().unwrap();
        let before = NormalTorus::from_position(&nt).unwrap()
            .decorate(base, normal_tori::Side::A).unwrap().bounds_solid_torus();
        let n = normalize(&perturb_with(&nt, seed, k, opts(0.3)).unwrap()).unwrap();
        let base = *n.normal_torus.nodes.keys().next().unwrap();
        let after = n.normal_torus.decorate(base, normal_tori::Side::A).unwrap().bounds_solid_torus();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn type_one_and_type_three_balance(rank in 2u32..=4, seed in any::<u64>()) {
        let counts = NormalTorus::from_position(&torus(rank, seed)).unwrap().count_by_type();
        prop_assert_eq!(counts[0], counts[2]);
    }

    #[test]
    fn axis_words_are_cyclically_reduced(rank in 2u32..=4, seed in any::<u64>()) {
        let nt = torus(rank, seed);
        let w = NormalTorus::from_position(&nt).unwrap().axis_word(&label_generators(&nt.graph)).unwrap();
        let l = &w.letters;
        prop_assert!(!l.is_empty());
        prop_assert!(l.windows(2).all(|p| p[0] != -p[1]));
        prop_assert!(l.len() == 1 || l[0] != -l[l.len() - 1]);
    }

    #[test]
    fn every_move_keeps_the_position_valid(rank in 2u32..=4, seed in any::<u64>(), k in 1usize..=6) {
        let mut t = perturb_with(&torus(rank, seed), seed, k, opts(0.3)).unwrap();
        while let Some(&m) = normal_tori::find_moves(&t).first() {
            t = normal_tori::apply_move(&t, m).unwrap();
            prop_assert!(t.validate().is_empty(), "{:?}", t.validate());
            prop_assert_eq!(t.euler_characteristic(), 0);
        }
    }
}
