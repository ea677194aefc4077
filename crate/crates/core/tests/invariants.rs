use kmeans_landscape::geometry::{assign, build_voronoi, Solution};
use kmeans_landscape::lloyd::{kmeanspp_init, lloyd_step_empirical, run_lloyd, EmptyCellPolicy, Init, LloydConfig, LloydTarget};
use kmeans_landscape::model::{MixtureModel, SampleSet};
use kmeans_landscape::objective::empirical_objective;
use kmeans_landscape::population::{Estimator, Population};
use kmeans_landscape::verify::equivalence_optima;
use proptest::prelude::*;

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn points(d: usize, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n)
}

/// Well-separated 1D ball model: gaps of at least 2.5 radii between balls.
fn ball_model_1d() -> impl Strategy<Value = MixtureModel> {
    (0.05f64..0.5, prop::collection::vec(1.0f64..3.0, 1..4), -5.0f64..5.0).prop_map(|(r, gaps, start)| {
        let mut c = vec![start];
        for g in gaps {
            c.push(c.last().unwrap() + 2.5 * r + g);
        }
        MixtureModel::ball_1d(&c, r).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assign_picks_a_closest_center(centers in points(2, 1..6), x in prop::collection::vec(-12.0f64..12.0, 2)) {
        let s = Solution::new(centers.clone()).unwrap();
        let i = assign(&s, &x).unwrap();
        let best = centers.iter().map(|c| dist2(c, &x)).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(dist2(&centers[i], &x), best);
        prop_assert!(centers[..i].iter().all(|c| dist2(c, &x) > best));
    }

    #[test]
    fn empirical_lloyd_never_increases_objective(data in points(2, 8..40), m in 1usize..4, seed in any::<u64>()) {
        let data = SampleSet::from_points(data);
        let target = LloydTarget::Empirical(&data);
        let mut cfg = LloydConfig::new(Init::KMeansPP { m, seed }, &target);
        cfg.max_iters = 50;
        let log = run_lloyd(&cfg, &target).unwrap();
        for w in log.objective.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn lloyd_step_is_permutation_equivariant(data in points(2, 10..30), centers in points(2, 3..4), seed in any::<u64>()) {
        let data = SampleSet::from_points(data);
        let s = Solution::new(centers).unwrap();
        prop_assume!(s.duplicate_pair().is_none());
        let mut perm: Vec<usize> = (0..s.m()).collect();
        let shift = (seed % s.m() as u64) as usize;
        perm.rotate_left(shift);
        let a = lloyd_step_empirical(&s, &data, EmptyCellPolicy::Keep).unwrap();
        let b = lloyd_step_empirical(&s.permuted(&perm), &data, EmptyCellPolicy::Keep).unwrap();
        prop_assert_eq!(a.permuted(&perm), b);
    }

    #[test]
    fn kmeanspp_picks_distinct_data_points(data in points(1, 3..30), seed in any::<u64>()) {
        let set = SampleSet::from_points(data.clone());
        let m = 3.min(data.len());
        let s = kmeanspp_init(&set, m, seed).unwrap();
        prop_assert_eq!(&s, &kmeanspp_init(&set, m, seed).unwrap());
        for c in s.centers() {
            prop_assert!(data.contains(c));
        }
    }

    #[test]
    fn partition_and_center_optima_agree(data in points(1, 1..8), k in 1usize..4) {
        let r = equivalence_optima(&SampleSet::from_points(data), k).unwrap();
        prop_assert!((r.center_optimum - r.partition_optimum).abs() <= 1e-12 * (1.0 + r.partition_optimum));
    }

    #[test]
    fn one_dimensional_voronoi_adjacency_is_consecutive(mut xs in prop::collection::vec(-50.0f64..50.0, 2..7)) {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        prop_assume!(xs.len() >= 2);
        let vor = build_voronoi(&Solution::from_scalars(&xs).unwrap()).unwrap();
        let want: Vec<(usize, usize)> = (0..xs.len() - 1).map(|i| (i, i + 1)).collect();
        prop_assert_eq!(vor.adjacency, want);
    }

    #[test]
    fn analytic_cell_masses_sum_to_one(model in ball_model_1d(), centers in prop::collection::vec(-10.0f64..20.0, 1..5)) {
        let s = Solution::from_scalars(&centers).unwrap();
        prop_assume!(s.duplicate_pair().is_none());
        let pop = Population::new(model.clone(), Estimator::Analytic1D).unwrap();
        let stats = pop.cell_stats(&s).unwrap();
        for comp in 0..model.k() {
            let total: f64 = (0..s.m()).map(|i| stats.mass[i][comp]).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        let total: f64 = stats.total_mass.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn population_objective_is_translation_invariant(model in ball_model_1d(), centers in prop::collection::vec(-10.0f64..20.0, 1..5), u in -4.0f64..4.0) {
        let s = Solution::from_scalars(&centers).unwrap();
        let moved = Solution::from_scalars(&centers.iter().map(|c| c + u).collect::<Vec<_>>()).unwrap();
        let a = Population::new(model.clone(), Estimator::Analytic1D).unwrap().objective(&s).unwrap().value;
        let b = Population::new(model.translated(&[u]).unwrap(), Estimator::Analytic1D).unwrap().objective(&moved).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn truth_is_no_worse_than_any_solution_when_well_separated(model in ball_model_1d(), centers in prop::collection::vec(-10.0f64..20.0, 1..5)) {
        prop_assume!(centers.len() == model.k());
        let pop = Population::new(model.clone(), Estimator::Analytic1D).unwrap();
        let truth = Solution::new(model.centers().to_vec()).unwrap();
        let g_truth = pop.objective(&truth).unwrap().value;
        let g = pop.objective(&Solution::from_scalars(&centers).unwrap()).unwrap().value;
        prop_assert!(g_truth <= g + 1e-12);
    }

    #[test]
    fn solution_json_round_trip(centers in points(3, 1..5)) {
        let s = Solution::new(centers).unwrap();
        let back: Solution = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        prop_assert_eq!(s, back);
    }

    #[test]
    fn empirical_objective_matches_direct_sum(data in points(2, 1..20), centers in points(2, 1..4)) {
        let s = Solution::new(centers.clone()).unwrap();
        let set = SampleSet::from_points(data.clone());
        let want: f64 = data
            .iter()
            .map(|x| centers.iter().map(|c| dist2(c, x)).fold(f64::INFINITY, f64::min))
            .sum::<f64>();
        let got = empirical_objective(&s, &set).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want));
    }
}
