mod common;

use common::*;
use polygen_core::dataset::{
    convert_rep, half_split, parse_dataset, parse_samples, perturb, serialize_dataset, ParsedSample, Sample, SplitManifest,
    SplitSpec,
};
use polygen_core::equivalence::{equivalent, row_permutation_match, DatasetIndex, LatticePolytope};
use polygen_core::eval::{evaluate, EvalReport, RunConfig};
use polygen_core::linalg::Matrix;
use polygen_core::ngram::NGramModel;
use polygen_core::properties::Representation;
use polygen_core::tokens::{detokenize, token_count, tokenize, Scheme, Vocab};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix_strategy() -> impl Strategy<Value = Matrix<i64>> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        prop::collection::vec(-40i64..=40, r * c).prop_map(move |data| Matrix::new(r, c, data).unwrap())
    })
}

fn smooth_sample(seed: u64) -> Sample {
    let polys = smooth_polygons_h();
    let i = (seed % 5) as usize;
    let j = ((seed / 5) % 5) as usize;
    Sample {
        id: 0,
        rep: Representation::Hyperplane,
        matrix: matrix(&product_h(&polys[i], &polys[j])),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_is_identity(mats in prop::collection::vec(matrix_strategy(), 1..6)) {
        let text = serialize_dataset(&mats);
        let parsed = parse_samples(&text, Representation::Hyperplane).unwrap();
        prop_assert_eq!(parsed.len(), mats.len());
        for (i, (s, m)) in parsed.iter().zip(&mats).enumerate() {
            prop_assert_eq!(s.id, i);
            prop_assert_eq!(&s.matrix, m);
        }
    }

    #[test]
    fn tokenize_then_detokenize_is_identity(m in matrix_strategy(), numbered in any::<bool>()) {
        let scheme = if numbered { Scheme::LineNumbered } else { Scheme::Standard };
        let seq = tokenize(&m, scheme);
        prop_assert_eq!(seq.len(), token_count(m.nrows(), m.ncols()));
        prop_assert_eq!(&detokenize(&seq, seq.len()).unwrap(), &m);
        prop_assert!(detokenize(&seq, seq.len() - 1).is_err());
        let sample = Sample { id: 0, rep: Representation::Hyperplane, matrix: m };
        let vocab = Vocab::build(std::slice::from_ref(&sample), scheme);
        let ids = vocab.encode(&seq).unwrap();
        prop_assert_eq!(vocab.decode(&ids).unwrap(), seq);
    }

    #[test]
    fn split_is_a_seeded_partition(n in 0usize..200, seed in any::<u64>()) {
        let ids: Vec<usize> = (0..n).map(|i| 3 * i + 1).collect();
        let m = half_split(&ids, SplitSpec::halves(seed));
        prop_assert_eq!(m.half_a.len(), n.div_ceil(2));
        let mut all: Vec<usize> = m.half_a.iter().chain(&m.half_b).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(&all, &ids);
        prop_assert_eq!(&half_split(&ids, SplitSpec::halves(seed)), &m);
        prop_assert_eq!(&SplitManifest::from_json(&m.to_json()).unwrap(), &m);
        prop_assert_eq!(m.half_of(0), None);
    }

    #[test]
    fn convert_is_an_involution_up_to_row_order(seed in 0u64..25) {
        let h = smooth_sample(seed);
        let v = convert_rep(&h).unwrap();
        prop_assert_eq!(v.rep, Representation::ConvexHull);
        let back = convert_rep(&v).unwrap();
        prop_assert_eq!(back.rep, Representation::Hyperplane);
        prop_assert!(row_permutation_match(&back.matrix, &h.matrix));
        prop_assert_eq!(convert_rep(&back).unwrap().matrix, v.matrix);
    }

    #[test]
    fn equivalence_survives_unimodular_maps(seed in 0u64..25, map_seed in any::<u64>()) {
        let v = convert_rep(&smooth_sample(seed)).unwrap();
        let points = v.matrix.to_rows();
        let mut rng = ChaCha8Rng::seed_from_u64(map_seed);
        let u = random_unimodular(&mut rng, 4, 4);
        let t = vec![2, 0, -1, 5];
        let moved: Vec<Vec<i64>> = points.iter().map(|x| apply_affine(&u, &t, x)).collect();
        let p = LatticePolytope::from_points(&points).unwrap();
        let q = LatticePolytope::from_points(&moved).unwrap();
        prop_assert_eq!(p.invariant_key(), q.invariant_key());
        let w = equivalent(&p, &q).expect("equivalent");
        prop_assert!(w.verify(&p, &q));
        let back = equivalent(&q, &p).expect("symmetric");
        prop_assert!(back.verify(&q, &p));
        prop_assert!(w.inverse().unwrap().verify(&q, &p));
    }

    #[test]
    fn perturbation_changes_exactly_one_entry(seed in 0u64..25, rng_seed in any::<u64>()) {
        let s = smooth_sample(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let p = perturb(&s, &mut rng).unwrap();
        let changed: Vec<(i64, i64)> = s
            .matrix
            .data()
            .iter()
            .zip(p.matrix.data())
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (*a, *b))
            .collect();
        prop_assert_eq!(changed.len(), 1);
        let (a, b) = changed[0];
        prop_assert!((a == 0 && b.abs() == 1) || (a.abs() == 1 && b == 0));
    }
}

#[test]
fn distinct_smooth_products_are_inequivalent() {
    let training = synthetic_training_set();
    let polys: Vec<LatticePolytope> = training.iter().map(|s| LatticePolytope::from_sample(s).unwrap()).collect();
    for i in 0..polys.len() {
        for j in 0..polys.len() {
            let found = equivalent(&polys[i], &polys[j]);
            assert_eq!(found.is_some(), i == j, "{i} vs {j}");
        }
    }
}

#[test]
fn index_round_trips_through_text() {
    let training = synthetic_training_set();
    let index = DatasetIndex::build(&training).unwrap();
    let again = DatasetIndex::from_text(&index.to_text()).unwrap();
    assert_eq!(again.n_keys(), index.n_keys());
    assert_eq!(again.n_samples(), training.len());
    for s in &training {
        let key = LatticePolytope::from_sample(s).unwrap().invariant_key();
        assert_eq!(again.candidates(&key), index.candidates(&key));
        assert!(index.candidates(&key).contains(&s.id));
    }
}

#[test]
fn ngram_model_round_trips_and_samples_deterministically() {
    let training = synthetic_training_set();
    let model = NGramModel::fit(&training, 4).unwrap();
    let again = NGramModel::from_text(&model.to_text()).unwrap();
    assert_eq!(again, model);
    let max_len = model.default_max_len();
    let a = model.sample_many(20, 3, max_len);
    assert_eq!(a, again.sample_many(20, 3, max_len));
    assert!(a.iter().all(|s| s.len() <= max_len));
}

#[test]
fn report_counts_ill_formed_blocks_and_satisfies_invariants() {
    let mut text = serialize_dataset(synthetic_training_set().iter().map(|s| &s.matrix));
    text.push_str("\n1 2\n3\n");
    let parsed = parse_dataset(&text, Representation::Hyperplane);
    assert!(matches!(parsed.last(), Some(ParsedSample::IllFormed(_))));
    let report = evaluate(&parsed, None, &RunConfig::default()).unwrap();
    report.check_invariants().unwrap();
    assert_eq!(report.ill_formed, 1);
    assert_eq!(report.totals.samples as usize, parsed.len());
    assert_eq!(report.all_correct, report.totals.well_formed);
    assert_eq!(EvalReport::from_json(&report.to_json()).unwrap(), report);
}
