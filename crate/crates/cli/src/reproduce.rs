use std::process::ExitCode;
use std::time::Instant;

use multioracle::catalog::{
    example_game, random_polynomial_game, random_zero_sum_polymatrix, PairwiseKind, PolymatrixSpec,
    PolynomialGameSpec, EXAMPLES,
};
use multioracle::exec::map_range;
use multioracle::oracle::OracleConfig;
use multioracle::{certify_epsilon, solve, ContinuousGame, Error, Execution, Result, SolveConfig, Terminated};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{ReproduceArgs, Suite};

/// Published equilibrium payoffs of the example games.
const REFERENCE_PAYOFFS: [&[f64]; EXAMPLES] =
    [&[-0.47, 0.47], &[1.13, 1.81], &[0.32, 1.29], &[0.0, 0.0], &[-1.23, 0.26, 0.97]];

#[derive(Serialize)]
struct Run {
    label: String,
    seed: u64,
    terminated: Terminated,
    iterations: usize,
    epsilon: f64,
    epsilon_certified: f64,
    /// Independent recomputation with the stricter oracle budget.
    certified_check: f64,
    runtime_ms: f64,
    payoffs: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_payoffs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_deviation: Option<f64>,
}

#[derive(Serialize)]
struct Aggregate {
    runs: usize,
    converged: usize,
    mean_iterations: f64,
    mean_runtime_ms: f64,
    max_epsilon_certified: f64,
}

#[derive(Serialize)]
struct Report {
    suite: &'static str,
    seed: u64,
    runs: Vec<Run>,
    aggregate: Aggregate,
}

fn run_one(
    label: String,
    game: &ContinuousGame,
    epsilon: f64,
    seed: u64,
    exec: Execution,
    reference: Option<&[f64]>,
) -> Result<Run> {
    let cfg = SolveConfig {
        epsilon,
        seed,
        exec,
        oracle: OracleConfig { exec, ..OracleConfig::default() },
        ..SolveConfig::default()
    };
    let start = Instant::now();
    let res = solve(game, &cfg)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let certified_check = certify_epsilon(game, &res.profile, &cfg.oracle, seed)?;
    let reference_deviation = reference.map(|r| {
        r.iter().zip(&res.payoffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    });
    Ok(Run {
        label,
        seed,
        terminated: res.terminated,
        iterations: res.iterations,
        epsilon,
        epsilon_certified: res.epsilon_certified,
        certified_check,
        runtime_ms,
        payoffs: res.payoffs,
        reference_payoffs: reference.map(<[f64]>::to_vec),
        reference_deviation,
    })
}

pub fn run(args: ReproduceArgs) -> Result<ExitCode> {
    // samples run concurrently, each solve on one thread
    let (outer, inner) = if args.sequential {
        (Execution::Sequential, Execution::Sequential)
    } else {
        (Execution::Parallel, Execution::Sequential)
    };
    let (suite, runs): (&'static str, Vec<Result<Run>>) = match args.suite {
        Suite::Examples => (
            "examples",
            map_range(outer, EXAMPLES, |k| {
                let id = k + 1;
                let game = example_game(id)?;
                run_one(format!("example {id}"), &game, 1e-3, args.seed, inner, Some(REFERENCE_PAYOFFS[k]))
            }),
        ),
        Suite::Polymatrix => (
            "polymatrix",
            map_range(outer, args.samples, |k| {
                let seed = args.seed + k as u64;
                let spec =
                    PolymatrixSpec { players: args.players, kind: PairwiseKind::Finite { actions: 20 }, edges: None };
                let game = random_zero_sum_polymatrix(&spec, &mut ChaCha8Rng::seed_from_u64(seed))?;
                run_one(format!("polymatrix {k}"), &game, 0.01, seed, inner, None)
            }),
        ),
        Suite::Polynomial => (
            "polynomial",
            map_range(outer, args.samples, |k| {
                let seed = args.seed + k as u64;
                let spec = PolynomialGameSpec { players: args.players, degree: 4, dimension: 1, monomials: 10 };
                let game = random_polynomial_game(&spec, &mut ChaCha8Rng::seed_from_u64(seed))?;
                run_one(format!("polynomial {k}"), &game, 1e-3, seed, inner, None)
            }),
        ),
    };
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let n = runs.len().max(1) as f64;
    let aggregate = Aggregate {
        runs: runs.len(),
        converged: runs.iter().filter(|r| r.terminated == Terminated::Converged).count(),
        mean_iterations: runs.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
        mean_runtime_ms: runs.iter().map(|r| r.runtime_ms).sum::<f64>() / n,
        max_epsilon_certified: runs.iter().map(|r| r.epsilon_certified).fold(0.0, f64::max),
    };
    let report = Report { suite, seed: args.seed, runs, aggregate };
    let doc = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Some(path) = &args.out {
        std::fs::write(path, &doc).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    if args.json {
        println!("{doc}");
    } else {
        print_table(&report);
    }
    Ok(ExitCode::SUCCESS)
}

fn print_table(report: &Report) {
    println!(
        "{:<14} {:>13} {:>6} {:>12} {:>12} {:>10}  payoffs",
        "run", "status", "iters", "eps_cert", "eps_check", "ms"
    );
    for r in &report.runs {
        let pay: Vec<String> = r.payoffs.iter().map(|v| format!("{v:.4}")).collect();
        let mut line = format!(
            "{:<14} {:>13} {:>6} {:>12.3e} {:>12.3e} {:>10.1}  ({})",
            r.label,
            format!("{:?}", r.terminated),
            r.iterations,
            r.epsilon_certified,
            r.certified_check,
            r.runtime_ms,
            pay.join(", ")
        );
        if let (Some(reference), Some(dev)) = (&r.reference_payoffs, r.reference_deviation) {
            let rp: Vec<String> = reference.iter().map(|v| format!("{v:.2}")).collect();
            line.push_str(&format!("  reference ({})  max dev {dev:.3}", rp.join(", ")));
        }
        println!("{line}");
    }
    let a = &report.aggregate;
    println!(
        "{} runs, {} converged, mean iterations {:.2}, mean runtime {:.1} ms, max eps_cert {:.3e}",
        a.runs, a.converged, a.mean_iterations, a.mean_runtime_ms, a.max_epsilon_certified
    );
}
