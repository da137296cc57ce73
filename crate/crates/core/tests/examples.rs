mod common;

use std::f64::consts::PI;

use multioracle::catalog::{
    example_game, random_polynomial_game, random_zero_sum_polymatrix, PairwiseKind, PolymatrixSpec,
    PolynomialGameSpec,
};
use multioracle::equilibrium::{exploitability, solve_general, solve_zero_sum_bimatrix, MasterConfig};
use multioracle::gamefile::{parse_game, to_toml};
use multioracle::metrics::{ground_distance, metric_report, profile_distance, total_variation, wasserstein};
use multioracle::oracle::{
    best_response, best_response_multistart, best_response_univariate_poly, induce_objective, InducedObjective,
    OracleConfig,
};
use multioracle::poly::{Polynomial, UnivariatePoly};
use multioracle::space::{GroundMetric, DEDUP_RADIUS};
use multioracle::subgame::{restrict, FiniteSubgame};
use multioracle::{
    certify_epsilon, solve, ContinuousGame, Execution, MixedStrategy, Profile, PureStrategy, SolveConfig,
    StrategySpace, Terminated, UtilityFunction,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn pt(v: &[f64]) -> PureStrategy {
    PureStrategy(v.to_vec())
}

fn mixed(space: &StrategySpace, atoms: &[f64], weights: &[f64]) -> MixedStrategy {
    MixedStrategy::canonicalize(atoms.iter().map(|a| pt(&[*a])).collect(), weights.to_vec(), space, DEDUP_RADIUS)
        .unwrap()
}

fn unit() -> StrategySpace {
    StrategySpace::interval(-1.0, 1.0).unwrap()
}

fn dirac(v: f64) -> MixedStrategy {
    MixedStrategy::dirac(pt(&[v]))
}

#[test]
fn membership() {
    assert!(unit().contains(&[0.5], 0.0).unwrap());
    assert!(StrategySpace::simplex(5).unwrap().contains(&[0.0, 1.0, 0.0, 0.0, 0.0], 0.0).unwrap());
    assert!(!unit().contains(&[1.2], 0.1).unwrap());
    assert!(unit().contains(&[0.5, 0.5], 0.0).is_err());
}

#[test]
fn canonical_forms() {
    let m = mixed(&unit(), &[0.4, 0.4], &[0.5, 0.5]);
    assert_eq!(m.atoms(), &[pt(&[0.4])]);
    assert_eq!(m.weights(), &[1.0]);
    let m = mixed(&unit(), &[0.1, 0.9], &[0.3, 0.3]);
    assert_eq!(m.weights(), &[0.5, 0.5]);
    assert!(MixedStrategy::canonicalize(vec![pt(&[0.1])], vec![0.0], &unit(), DEDUP_RADIUS).is_err());
}

#[test]
fn ground_distances() {
    assert!((ground_distance(&unit(), &[0.2], &[-0.3]).unwrap() - 0.5).abs() < 1e-15);
    let arc = ground_distance(&StrategySpace::circle(), &[-3.0], &[3.0]).unwrap();
    assert!((arc - (2.0 * PI - 6.0)).abs() < 1e-12);
    let chord = StrategySpace::Circle { metric: GroundMetric::Euclidean };
    assert_eq!(ground_distance(&chord, &[1.0], &[1.0]).unwrap(), 0.0);
}

#[test]
fn wasserstein_examples() {
    let s = unit();
    assert!((wasserstein(&dirac(0.2), &dirac(-0.3), &s).unwrap().0 - 0.5).abs() < 1e-12);
    let half = mixed(&s, &[0.0, 1.0], &[0.5, 0.5]);
    assert!((wasserstein(&half, &dirac(0.0), &s).unwrap().0 - 0.5).abs() < 1e-12);
    let p = mixed(&s, &[0.0, 1.0], &[0.6, 0.4]);
    let q = mixed(&s, &[0.0, 1.0], &[0.4, 0.6]);
    let (d, plan) = wasserstein(&p, &q, &s).unwrap();
    assert!((d - 0.2).abs() < 1e-9);
    assert!((brute_force_transport(&s, &p, &q) - 0.2).abs() < 1e-12);
    assert!((plan.cost(&s, &p, &q) - d).abs() < 1e-12);
}

#[test]
fn total_variation_examples() {
    let s = unit();
    let p = mixed(&s, &[0.0, 1.0], &[0.6, 0.4]);
    let q = mixed(&s, &[0.0, 1.0], &[0.4, 0.6]);
    assert_eq!(total_variation(&p, &p, &s), 0.0);
    assert_eq!(total_variation(&dirac(0.2), &dirac(-0.3), &s), 1.0);
    assert!((total_variation(&p, &q, &s) - 0.2).abs() < 1e-15);
}

#[test]
fn bound_examples() {
    let s = unit();
    let r = metric_report(&dirac(0.2), &dirac(-0.3), &s).unwrap();
    assert!((r.lower_bound - 0.5).abs() < 1e-15 && (r.upper_bound - 0.5).abs() < 1e-15);
    let p = mixed(&s, &[0.0, 1.0], &[0.6, 0.4]);
    let q = mixed(&s, &[0.0, 1.0], &[0.4, 0.6]);
    let r = metric_report(&p, &q, &s).unwrap();
    assert!((r.lower_bound - 0.2).abs() < 1e-12 && (r.upper_bound - 0.2).abs() < 1e-12);
    let r = metric_report(&p, &p, &s).unwrap();
    assert_eq!((r.lower_bound, r.upper_bound), (0.0, 0.0));
    let r = metric_report(&dirac(0.3), &dirac(0.3), &s).unwrap();
    assert!(!r.d_min_defined);
}

#[test]
fn profile_distance_takes_the_largest_player() {
    let spaces = vec![unit(), unit()];
    let a = Profile::new(vec![dirac(0.0), dirac(0.0)]);
    let b = Profile::new(vec![dirac(0.2), dirac(0.5)]);
    assert!((profile_distance(&a, &b, &spaces).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(profile_distance(&a, &a, &spaces).unwrap(), 0.0);
    let single = Profile::new(vec![dirac(0.1)]);
    let other = Profile::new(vec![dirac(-0.2)]);
    assert!((profile_distance(&single, &other, &[unit()]).unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn utility_examples() {
    let g1 = example_game(1).unwrap();
    let u = g1.utility(0, &[&[0.4], &[0.63]]).unwrap();
    assert!((u - -0.47248).abs() < 1e-12);
    let zero = ContinuousGame::new(
        vec![unit()],
        vec![UtilityFunction::Polynomial(Polynomial::zero(vec![1]))],
        false,
    )
    .unwrap();
    assert_eq!(zero.utility(0, &[&[0.3]]).unwrap(), 0.0);
    let g3 = example_game(3).unwrap();
    assert!(g3.utility(0, &[&[0.0], &[0.0]]).unwrap().abs() < 1e-15);
    assert!(g1.utility(0, &[&[1.5], &[0.0]]).is_err());
}

#[test]
fn expected_utility_examples() {
    let g = example_game(1).unwrap();
    let pure = Profile::new(vec![dirac(0.4), dirac(0.63)]);
    assert!((g.expected_utility(0, &pure) - -0.47248).abs() < 1e-12);
    assert!((g.expected_utility(1, &pure) - 0.47248).abs() < 1e-12);
    let split = Profile::new(vec![mixed(&unit(), &[-1.0, 1.0], &[0.5, 0.5]), dirac(0.0)]);
    assert!((g.expected_utility(0, &split) - -1.0).abs() < 1e-15);
    assert!((g.expected_utility_vs_pure(1, &[0.0], &split) - 1.0).abs() < 1e-15);
    assert!((g.expected_utility_vs_pure(0, &[0.4], &pure) - -0.47248).abs() < 1e-12);
}

#[test]
fn restriction_examples() {
    let g = example_game(1).unwrap();
    let sub = restrict(&g, &[vec![pt(&[0.4])], vec![pt(&[0.63])]], Execution::Sequential).unwrap();
    assert!((sub.payoff(0, &[0, 0]) - -0.47248).abs() < 1e-12);
    assert!((sub.payoff(1, &[0, 0]) - 0.47248).abs() < 1e-12);
    let xs = [-1.0, 1.0];
    let ys = [0.0, 1.0];
    let lists = vec![xs.iter().map(|x| pt(&[*x])).collect(), ys.iter().map(|y| pt(&[*y])).collect()];
    let sub = restrict(&g, &lists, Execution::Parallel).unwrap();
    assert!(sub.is_zero_sum());
    for (a, x) in xs.iter().enumerate() {
        for (b, y) in ys.iter().enumerate() {
            let u = 2.0 * x * y * y - x * x - y;
            assert_eq!(sub.payoff(0, &[a, b]), u);
            assert_eq!(sub.payoff(1, &[a, b]), -u);
        }
    }
    assert!(restrict(&g, &[vec![], vec![pt(&[0.0])]], Execution::Sequential).is_err());
}

#[test]
fn closed_form_two_by_two_value() {
    let a = vec![vec![3.0, 1.0], vec![0.0, 2.0]];
    let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let sub = FiniteSubgame::bimatrix(&a, &b).unwrap();
    let eq = solve_zero_sum_bimatrix(&sub, 1e-9).unwrap();
    assert!((eq.weights[0][0] - 0.5).abs() < 1e-9);
    assert!((eq.weights[1][0] - 0.25).abs() < 1e-9);
    assert!((sub.expected(0, &eq.weights) - 1.5).abs() < 1e-9);
}

#[test]
fn exploitability_examples() {
    let a = vec![vec![1.0, -1.0], vec![-1.0, 1.0]];
    let b: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let pennies = FiniteSubgame::bimatrix(&a, &b).unwrap();
    let e = exploitability(&pennies, &[vec![1.0, 0.0], vec![1.0, 0.0]]);
    assert!(e.iter().any(|v| (v - 2.0).abs() < 1e-15));
    let constant = FiniteSubgame::bimatrix(&vec![vec![1.0; 3]; 3], &vec![vec![-1.0; 3]; 3]).unwrap();
    assert!(exploitability(&constant, &[vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]]).iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn battle_of_the_sexes() {
    let a = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
    let b = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
    let sub = FiniteSubgame::bimatrix(&a, &b).unwrap();
    let eq = solve_general(&sub, &MasterConfig { tol: 1e-6, ..MasterConfig::default() });
    let gap = exploitability(&sub, &eq.weights).into_iter().fold(0.0, f64::max);
    assert!(eq.certified && gap <= 1e-6);
}

#[test]
fn induced_objective_example_one() {
    let g = example_game(1).unwrap();
    let others = Profile::new(vec![dirac(0.0), dirac(0.63)]);
    let InducedObjective::UnivariatePolynomial(p) = induce_objective(&g, 0, &others) else {
        panic!("expected a univariate polynomial");
    };
    let expect = [-0.63, 0.7938, -1.0];
    assert_eq!(p.coeffs().len(), 3);
    for (c, e) in p.coeffs().iter().zip(expect) {
        assert!((c - e).abs() < 1e-12);
    }
    let br = best_response_univariate_poly(&p, -1.0, 1.0).unwrap();
    assert!((br.strategy[0] - 0.3969).abs() < 1e-10);
    assert!((br.value - -0.47247039).abs() < 1e-10);
    assert!(br.certified_global);
}

#[test]
fn induced_objective_example_two() {
    let g = example_game(2).unwrap();
    let p1 = mixed(&unit(), &[0.11, -1.0], &[0.4419, 0.5581]);
    let others = Profile::new(vec![p1, dirac(0.0)]);
    let InducedObjective::UnivariatePolynomial(p) = induce_objective(&g, 1, &others) else {
        panic!("expected a univariate polynomial");
    };
    // E[x^2] = 0.4419 * 0.0121 + 0.5581 = 0.56344699
    let expect = [-0.56344699, 4.56344699, 1.12689398, -4.0];
    for (c, e) in p.coeffs().iter().zip(expect) {
        assert!((c - e).abs() < 1e-12, "{:?}", p.coeffs());
    }
    for k in 0..10 {
        let y = -1.0 + 0.2 * k as f64;
        assert!((p.eval(y) - g.expected_utility_vs_pure(1, &[y], &others)).abs() < 1e-12);
    }
}

#[test]
fn univariate_oracle_edge_cases() {
    let c = best_response_univariate_poly(&UnivariatePoly::new(vec![5.0]), -1.0, 1.0).unwrap();
    assert_eq!((c.strategy[0], c.value), (-1.0, 5.0));
    let x = best_response_univariate_poly(&UnivariatePoly::new(vec![0.0, 1.0]), -1.0, 1.0).unwrap();
    assert_eq!((x.strategy[0], x.value), (1.0, 1.0));
}

#[test]
fn multistart_examples() {
    let cfg = OracleConfig::default();
    let space = StrategySpace::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let quad = Polynomial::new(
        vec![2],
        vec![(-1.0, vec![vec![2, 0]]), (0.6, vec![vec![1, 0]]), (-1.0, vec![vec![0, 2]]), (-0.4, vec![vec![0, 1]])],
    )
    .unwrap();
    let br = best_response_multistart(&InducedObjective::MultivariatePolynomial(quad), &space, &cfg, &[], 3).unwrap();
    assert!((br.strategy[0] - 0.3).abs() < 1e-6 && (br.strategy[1] + 0.2).abs() < 1e-6);

    let simplex = StrategySpace::simplex(5).unwrap();
    let linear = InducedObjective::Callable(Box::new(|x: &[f64]| {
        [0.1, 0.7, 0.3, -0.2, 0.5].iter().zip(x).map(|(c, v)| c * v).sum()
    }));
    let br = best_response_multistart(&linear, &simplex, &cfg, &[], 4).unwrap();
    assert!((br.strategy[1] - 1.0).abs() < 1e-6);
    assert!(!br.certified_global);

    let torus = example_game(3).unwrap();
    let others = Profile::new(vec![dirac(0.0), dirac(PI - 1e-12)]);
    let br = best_response(&torus, 0, &others, &cfg, &[], 5).unwrap();
    assert!(br.strategy[0].abs() < 1e-5);
    assert!((br.value - 2.0).abs() < 1e-9);
}

#[test]
fn blotto_best_response_against_the_centre() {
    let g = example_game(4).unwrap();
    let centre = MixedStrategy::dirac(pt(&[0.2; 5]));
    let others = Profile::new(vec![centre.clone(), centre]);
    let br = best_response(&g, 0, &others, &OracleConfig::default(), &[], 0).unwrap();
    // a vertex against the centre: 0.8^2 - 4 * 0.2^2
    assert!((br.value - 0.48).abs() < 1e-9);
    assert!(br.strategy.iter().filter(|v| (*v - 1.0).abs() < 1e-6).count() == 1);
    assert!(!br.certified_global);
}

#[test]
fn singleton_space_best_response() {
    let point = StrategySpace::new_box(vec![0.3], vec![0.3]).unwrap();
    let g = ContinuousGame::new(
        vec![point.clone(), unit()],
        vec![
            UtilityFunction::Polynomial(Polynomial::new(vec![1, 1], vec![(1.0, vec![vec![1], vec![1]])]).unwrap()),
            UtilityFunction::Polynomial(Polynomial::new(vec![1, 1], vec![(-1.0, vec![vec![1], vec![1]])]).unwrap()),
        ],
        true,
    )
    .unwrap();
    let others = Profile::new(vec![dirac(0.3), dirac(0.5)]);
    let br = best_response(&g, 0, &others, &OracleConfig::default(), &[], 0).unwrap();
    assert_eq!(br.strategy, pt(&[0.3]));
}

#[test]
fn example_one_solve() {
    let g = example_game(1).unwrap();
    let res = solve(&g, &SolveConfig { seed: 7, ..SolveConfig::default() }).unwrap();
    assert_eq!(res.terminated, Terminated::Converged);
    assert!(res.iterations <= 10);
    assert!((res.payoffs[0] - -0.47).abs() < 0.02 && (res.payoffs[1] - 0.47).abs() < 0.02);
    assert!(distance_to_point(&unit(), res.profile.get(0), &[0.4]) < 0.05);
    assert!(distance_to_point(&unit(), res.profile.get(1), &[0.63]) < 0.05);
}

#[test]
fn truncated_run_is_exploitable() {
    let g = example_game(1).unwrap();
    let res = solve(&g, &SolveConfig { max_iterations: 1, ..SolveConfig::default() }).unwrap();
    assert_eq!(res.terminated, Terminated::MaxIterations);
    let check = certify_epsilon(&g, &res.profile, &OracleConfig::default(), 0).unwrap();
    assert!(check > 1e-3);
    assert!((check - res.epsilon_certified).abs() < 1e-9);
}

#[test]
fn blotto_solve() {
    let g = example_game(4).unwrap();
    let res = solve(&g, &SolveConfig::default()).unwrap();
    assert_eq!(res.terminated, Terminated::Converged);
    assert!(res.payoffs.iter().all(|v| v.abs() < 1e-2));
}

#[test]
fn constant_game_is_stable_everywhere() {
    let c = |v: f64| UtilityFunction::Polynomial(Polynomial::new(vec![1, 1], vec![(v, vec![vec![0], vec![0]])]).unwrap());
    let g = ContinuousGame::new(vec![unit(), unit()], vec![c(1.0), c(-1.0)], true).unwrap();
    let res = solve(&g, &SolveConfig::default()).unwrap();
    assert_eq!(res.iterations, 1);
    assert!(res.trace[0].instability.iter().all(|v| v.abs() < 1e-15));
    assert_eq!(certify_epsilon(&g, &res.profile, &OracleConfig::default(), 0).unwrap(), 0.0);
}

#[test]
fn blotto_diagonal_is_neutral() {
    let g = example_game(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x = g.space(0).sample(&mut rng);
        assert_eq!(g.utility(0, &[&x, &x]).unwrap(), 0.0);
    }
}

#[test]
fn example_five_is_zero_sum() {
    let g = example_game(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let x: Vec<PureStrategy> = g.spaces().iter().map(|s| s.sample(&mut rng)).collect();
        let point: Vec<&[f64]> = x.iter().map(|p| p.coords()).collect();
        let total: f64 = (0..3).map(|i| g.utility(i, &point).unwrap()).sum();
        assert!(total.abs() < 1e-9);
    }
}

#[test]
fn generators() {
    let spec = PolynomialGameSpec { players: 5, degree: 4, dimension: 2, monomials: 10 };
    let a = random_polynomial_game(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let b = random_polynomial_game(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(a, b);
    let cube = StrategySpace::new_box(vec![0.0; 2], vec![1.0; 2]).unwrap();
    assert!(a.spaces().iter().all(|s| *s == cube));
    for u in a.utilities() {
        let UtilityFunction::Polynomial(p) = u else { panic!("polynomial utility expected") };
        assert!(p.total_degree() <= 4);
    }
    let spec = PolymatrixSpec { players: 2, kind: PairwiseKind::Finite { actions: 20 }, edges: None };
    let x = random_zero_sum_polymatrix(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let y = random_zero_sum_polymatrix(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(x, y);
    assert!(x.is_zero_sum());
}

#[test]
fn catalog_round_trips_through_game_files() {
    for id in 1..=5 {
        let g = example_game(id).unwrap();
        let text = to_toml(&g).unwrap();
        assert_eq!(parse_game(&text).unwrap(), g, "example {id}");
    }
}
