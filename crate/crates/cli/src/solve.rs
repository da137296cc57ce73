use std::fs::File;
use std::io::BufWriter;
use std::process::ExitCode;
use std::time::Instant;

use multioracle::catalog::example_game;
use multioracle::gamefile::load_game;
use multioracle::oracle::OracleConfig;
use multioracle::report::{write_trace, Summary};
use multioracle::{solve, Result, SolveConfig, Terminated};

use crate::{execution, SolveArgs};

pub fn run(args: SolveArgs) -> Result<ExitCode> {
    let (game, label) = match (&args.source.game, args.source.example) {
        (Some(path), _) => (load_game(path)?, path.display().to_string()),
        (None, Some(id)) => (example_game(id)?, format!("example {id}")),
        (None, None) => unreachable!("clap requires a game source"),
    };
    let exec = execution(args.sequential);
    let cfg = SolveConfig {
        epsilon: args.epsilon,
        max_iterations: args.max_iter,
        seed: args.seed,
        record_wasserstein: args.wasserstein,
        master: args.master.into(),
        oracle: OracleConfig { mode: args.oracle.into(), exec, ..OracleConfig::default() },
        exec,
        ..SolveConfig::default()
    };
    let start = Instant::now();
    let result = solve(&game, &cfg)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    if let Some(path) = &args.trace {
        let file = File::create(path).map_err(|e| multioracle::Error::Io(format!("{}: {e}", path.display())))?;
        write_trace(BufWriter::new(file), &result)?;
    }

    let summary = Summary::new(label, &result, args.epsilon, args.seed, runtime_ms);
    if args.json {
        println!("{}", summary.to_json());
    } else {
        print_summary(&summary);
    }
    Ok(match result.terminated {
        Terminated::Converged => ExitCode::SUCCESS,
        Terminated::MaxIterations => ExitCode::from(2),
    })
}

fn print_summary(s: &Summary) {
    println!("game               {}", s.game);
    println!("terminated         {:?} after {} iterations", s.terminated, s.iterations);
    println!("epsilon            {:e}", s.epsilon);
    println!("epsilon_certified  {:.6e}", s.epsilon_certified);
    println!("runtime            {:.1} ms", s.runtime_ms);
    for p in &s.players {
        println!("player {}: payoff {:.6}  instability {:.3e}", p.player, p.payoff, p.instability);
        for a in &p.support {
            let coords: Vec<String> = a.atom.iter().map(|v| format!("{v:.6}")).collect();
            println!("    [{}]  weight {:.6}", coords.join(", "), a.weight);
        }
    }
}
