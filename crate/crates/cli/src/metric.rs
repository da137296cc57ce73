use std::process::ExitCode;

use multioracle::metrics::metric_report;
use multioracle::space::{GroundMetric, DEDUP_RADIUS};
use multioracle::{Error, MixedStrategy, PureStrategy, Result, StrategySpace};
use serde_json::json;

use crate::MetricArgs;

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("`{t}` is not a number"))))
        .collect()
}

/// `box:LO:HI`, `simplex:D`, `circle[:arc|:euclidean]`, `finite:N`.
pub fn parse_space(spec: &str) -> Result<StrategySpace> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        ["box", lo, hi] => StrategySpace::new_box(numbers(lo)?, numbers(hi)?),
        ["simplex", d] => StrategySpace::simplex(d.parse().map_err(|_| bad(format!("bad dimension `{d}`")))?),
        ["circle"] | ["circle", "arc"] => Ok(StrategySpace::Circle { metric: GroundMetric::Arc }),
        ["circle", "euclidean"] => Ok(StrategySpace::Circle { metric: GroundMetric::Euclidean }),
        ["finite", n] => StrategySpace::finite(n.parse().map_err(|_| bad(format!("bad action count `{n}`")))?),
        _ => Err(bad(format!("unrecognised space `{spec}`"))),
    }
}

/// Entries `coords:weight` separated by `;` or newlines; `@FILE` reads them from a file.
pub fn parse_measure(spec: &str, space: &StrategySpace) -> Result<MixedStrategy> {
    let text = match spec.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?,
        None => spec.to_string(),
    };
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for entry in text.split([';', '\n']).map(str::trim).filter(|e| !e.is_empty() && !e.starts_with('#')) {
        let (coords, w) = entry
            .rsplit_once(':')
            .ok_or_else(|| bad(format!("entry `{entry}` is not of the form coords:weight")))?;
        let w: f64 = w.trim().parse().map_err(|_| bad(format!("bad weight in `{entry}`")))?;
        atoms.push(PureStrategy(numbers(coords)?));
        weights.push(w);
    }
    if atoms.is_empty() {
        return Err(bad(format!("measure `{spec}` has no atoms")));
    }
    for a in &atoms {
        if !space.contains(a, 1e-9)? {
            return Err(bad(format!("atom {:?} is outside the space", a.0)));
        }
    }
    MixedStrategy::canonicalize(atoms, weights, space, DEDUP_RADIUS)
}

pub fn run(args: MetricArgs) -> Result<ExitCode> {
    let space = parse_space(&args.space)?;
    let p = parse_measure(&args.p, &space)?;
    let q = parse_measure(&args.q, &space)?;
    let r = metric_report(&p, &q, &space)?;
    if args.json {
        let mut doc = json!({
            "wasserstein": r.wasserstein,
            "total_variation": r.total_variation,
            "lower_bound": r.lower_bound,
            "upper_bound": r.upper_bound,
            "d_min_defined": r.d_min_defined,
        });
        if args.plan {
            doc["plan"] = json!(r
                .plan
                .entries
                .iter()
                .map(|&(i, j, m)| json!({"from": p.atoms()[i].0, "to": q.atoms()[j].0, "mass": m}))
                .collect::<Vec<_>>());
        }
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("wasserstein      {}", r.wasserstein);
        println!("total_variation  {}", r.total_variation);
        println!("lower_bound      {}", r.lower_bound);
        println!("upper_bound      {}", r.upper_bound);
        if args.plan {
            println!("plan");
            for &(i, j, m) in &r.plan.entries {
                println!("  {:?} -> {:?}  {}", p.atoms()[i].0, q.atoms()[j].0, m);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
