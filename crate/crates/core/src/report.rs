//! Trace CSV and JSON summaries of a solve.

use std::io::Write;

use serde::Serialize;

use crate::driver::{SolveResult, Terminated};
use crate::error::{Error, Result};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header of the trace CSV for an `n`-player game.
pub fn trace_header(n: usize) -> Vec<String> {
    let mut h = vec!["record".to_string(), "iteration".to_string()];
    h.extend((1..=n).map(|i| format!("instability_{i}")));
    h.push("max_instability".into());
    h.extend((1..=n).map(|i| format!("payoff_{i}")));
    h.push("wasserstein_step".into());
    h.extend((1..=n).map(|i| format!("subgame_size_{i}")));
    h.extend(
        ["master_certified_gap", "master_certified", "master_method", "restrict_ms", "master_ms", "oracle_ms", "wasserstein_ms", "support"]
            .map(String::from),
    );
    h
}

fn method_name<T: Serialize>(m: &T) -> String {
    serde_json::to_value(m).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

/// `atom@weight` pairs per player, players separated by `;`, atom
/// coordinates by spaces.
fn support_listing(result: &SolveResult) -> String {
    result
        .profile
        .strategies
        .iter()
        .map(|m| {
            m.iter()
                .map(|(a, w)| {
                    let coords: Vec<String> = a.iter().map(|v| num(*v)).collect();
                    format!("{}@{}", coords.join(" "), num(w))
                })
                .collect::<Vec<_>>()
                .join(" | ")
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Writes one `iteration` record per iteration followed by one `summary`
/// record describing the returned profile.
pub fn write_trace<W: Write>(out: W, result: &SolveResult) -> Result<()> {
    let n = result.payoffs.len();
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(trace_header(n)).map_err(io)?;
    for t in &result.trace {
        let mut row = vec!["iteration".to_string(), t.iteration.to_string()];
        row.extend(t.instability.iter().map(|v| num(*v)));
        row.push(num(t.max_instability()));
        row.extend(t.payoffs.iter().map(|v| num(*v)));
        row.push(t.wasserstein_step.map(num).unwrap_or_default());
        row.extend(t.subgame_sizes.iter().map(usize::to_string));
        row.push(num(t.master_certified_gap));
        row.push(t.master_certified.to_string());
        row.push(method_name(&t.master_method));
        for ms in [t.timings.restrict_ms, t.timings.master_ms, t.timings.oracle_ms, t.timings.wasserstein_ms] {
            row.push(format!("{ms:.3}"));
        }
        row.push(String::new());
        w.write_record(&row).map_err(io)?;
    }
    let mut row = vec!["summary".to_string(), result.iterations.to_string()];
    row.extend(result.instability.iter().map(|v| num(*v)));
    row.push(num(result.epsilon_certified));
    row.extend(result.payoffs.iter().map(|v| num(*v)));
    row.push(String::new());
    row.extend(result.profile.strategies.iter().map(|m| m.len().to_string()));
    row.extend(std::iter::repeat_n(String::new(), 7));
    row.push(support_listing(result));
    w.write_record(&row).map_err(io)?;
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomSummary {
    pub atom: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlayerSummary {
    pub player: usize,
    pub payoff: f64,
    pub instability: f64,
    pub support: Vec<AtomSummary>,
}

/// Machine-readable outcome of one solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub game: String,
    pub terminated: Terminated,
    pub converged: bool,
    pub iterations: usize,
    pub epsilon: f64,
    pub epsilon_certified: f64,
    pub master_tol: f64,
    pub seed: u64,
    pub payoffs: Vec<f64>,
    pub players: Vec<PlayerSummary>,
    pub max_instability_per_iteration: Vec<f64>,
    pub wasserstein_steps: Vec<Option<f64>>,
    pub runtime_ms: f64,
}

impl Summary {
    pub fn new(game: impl Into<String>, result: &SolveResult, epsilon: f64, seed: u64, runtime_ms: f64) -> Self {
        let players = result
            .profile
            .strategies
            .iter()
            .enumerate()
            .map(|(i, m)| PlayerSummary {
                player: i + 1,
                payoff: result.payoffs[i],
                instability: result.instability[i],
                support: m.iter().map(|(a, w)| AtomSummary { atom: a.0.clone(), weight: w }).collect(),
            })
            .collect();
        Summary {
            game: game.into(),
            terminated: result.terminated,
            converged: result.terminated == Terminated::Converged,
            iterations: result.iterations,
            epsilon,
            epsilon_certified: result.epsilon_certified,
            master_tol: result.master_tol,
            seed,
            payoffs: result.payoffs.clone(),
            players,
            max_instability_per_iteration: result.trace.iter().map(|t| t.max_instability()).collect(),
            wasserstein_steps: result.trace.iter().map(|t| t.wasserstein_step).collect(),
            runtime_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}
