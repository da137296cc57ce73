use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use multioracle::catalog::{example_game, random_finite_game, random_polynomial_game, PolynomialGameSpec};
use multioracle::equilibrium::{solve_general, MasterConfig};
use multioracle::oracle::{best_response_multistart, induce_objective, OracleConfig};
use multioracle::space::DEDUP_RADIUS;
use multioracle::subgame::{restrict, FiniteSubgame};
use multioracle::{solve, Execution, MixedStrategy, Profile, PureStrategy, SolveConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn multistart(c: &mut Criterion) {
    let game = example_game(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let space = game.space(1);
    let atoms: Vec<PureStrategy> = (0..6).map(|_| space.sample(&mut rng)).collect();
    let opponent = MixedStrategy::canonicalize(atoms, vec![1.0; 6], space, DEDUP_RADIUS).unwrap();
    let profile = Profile::new(vec![opponent.clone(), opponent]);
    let objective = induce_objective(&game, 0, &profile);
    let mut group = c.benchmark_group("multistart_blotto_64_starts");
    for (name, exec) in MODES {
        let cfg = OracleConfig { starts: 64, exec, ..OracleConfig::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| best_response_multistart(&objective, space, &cfg, &[], black_box(7)).unwrap())
        });
    }
    group.finish();
}

fn tensor_fill(c: &mut Criterion) {
    let spec = PolynomialGameSpec { players: 3, degree: 4, dimension: 2, monomials: 10 };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let game = random_polynomial_game(&spec, &mut rng).unwrap();
    let lists: Vec<Vec<PureStrategy>> =
        game.spaces().iter().map(|s| (0..16).map(|_| s.sample(&mut rng)).collect()).collect();
    let mut group = c.benchmark_group("restrict_three_players_16_atoms");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| restrict(&game, black_box(&lists), exec).unwrap())
        });
    }
    group.finish();
}

fn has_pure_equilibrium(sub: &FiniteSubgame) -> bool {
    let sizes = sub.sizes();
    let total: usize = sizes.iter().product();
    (0..total).any(|mut flat| {
        let weights: Vec<Vec<f64>> = sizes
            .iter()
            .map(|&m| {
                let mut w = vec![0.0; m];
                w[flat % m] = 1.0;
                flat /= m;
                w
            })
            .collect();
        sub.exploitability(&weights).iter().all(|&g| g <= 0.0)
    })
}

fn regret_restarts(c: &mut Criterion) {
    // the pure scan would otherwise return before any restart runs
    let sub = (0u64..)
        .map(|seed| {
            let game = random_finite_game(&[8, 8, 8], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let lists: Vec<Vec<PureStrategy>> = game.spaces().iter().map(|s| s.enumerate().unwrap()).collect();
            restrict(&game, &lists, Execution::Sequential).unwrap()
        })
        .find(|sub| !has_pure_equilibrium(sub))
        .unwrap();
    let mut group = c.benchmark_group("regret_matching_restarts_8x8x8");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = MasterConfig { tol: 1e-9, iterations: 2000, restarts: 8, exec, ..MasterConfig::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| solve_general(black_box(&sub), &cfg)));
    }
    group.finish();
}

fn full_solve(c: &mut Criterion) {
    let game = example_game(4).unwrap();
    let mut group = c.benchmark_group("solve_blotto");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SolveConfig { exec, oracle: OracleConfig { exec, ..OracleConfig::default() }, ..SolveConfig::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| solve(black_box(&game), &cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, multistart, tensor_fill, regret_restarts, full_solve);
criterion_main!(benches);
