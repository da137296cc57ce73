//! TOML game definitions.
//!
//! ```toml
//! players = 2
//! zero_sum = true
//!
//! [[spaces]]
//! type = "box"        # or simplex (dimension), circle (metric), finite (actions)
//! lower = [-1.0]
//! upper = [1.0]
//!
//! [[spaces]]
//! type = "box"
//! lower = [-1.0]
//! upper = [1.0]
//!
//! [[utilities]]
//! type = "polynomial"
//! terms = [
//!   { coef = 2.0, powers = [[1], [2]] },
//!   { coef = -1.0, powers = [[2], [0]] },
//! ]
//!
//! [[utilities]]
//! type = "polymatrix"  # edges = [{ with = 1, terms = [...] }] or { with = 1, matrix = [[...]] }
//! ...
//! ```
//!
//! Utilities may also be `builtin` (`name`, `params`) or `table` (`shape`,
//! row-major `values`). Players are numbered from 1. Validation errors carry
//! the line of the offending entry.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::catalog::builtin;
use crate::error::{Error, Result};
use crate::game::{ContinuousGame, PairwiseTerm, UtilityFunction};
use crate::poly::Polynomial;
use crate::space::{GroundMetric, StrategySpace};
use crate::subgame::Tensor;

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    players: Spanned<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zero_sum: Option<Spanned<bool>>,
    spaces: Vec<Spanned<RawSpace>>,
    utilities: Vec<Spanned<RawUtility>>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    upper: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    actions: Option<usize>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawUtility {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<Spanned<RawTerm>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<Spanned<RawEdge>>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    coef: f64,
    powers: Vec<Vec<u32>>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    with: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    terms: Option<Vec<Spanned<RawTerm>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<f64>>>,
}

/// Maps byte offsets to 1-based line numbers.
struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn line(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0[..end].bytes().filter(|b| *b == b'\n').count() + 1
    }

    fn err(&self, span: &Range<usize>, message: impl Into<String>) -> Error {
        Error::GameFile { line: self.line(span), message: message.into() }
    }
}

fn require<T>(v: Option<T>, lines: &Lines, span: &Range<usize>, what: &str, field: &str) -> Result<T> {
    v.ok_or_else(|| lines.err(span, format!("{what} needs `{field}`")))
}

fn parse_space(raw: &Spanned<RawSpace>, lines: &Lines) -> Result<StrategySpace> {
    let span = raw.span();
    let s = raw.get_ref();
    let what = format!("{} space", s.kind);
    let space = match s.kind.as_str() {
        "box" => StrategySpace::new_box(
            require(s.lower.clone(), lines, &span, &what, "lower")?,
            require(s.upper.clone(), lines, &span, &what, "upper")?,
        ),
        "simplex" => StrategySpace::simplex(require(s.dimension, lines, &span, &what, "dimension")?),
        "circle" => {
            let metric = match s.metric.as_deref() {
                None | Some("arc") => GroundMetric::Arc,
                Some("euclidean") => GroundMetric::Euclidean,
                Some(m) => return Err(lines.err(&span, format!("unknown circle metric `{m}`"))),
            };
            Ok(StrategySpace::Circle { metric })
        }
        "finite" => StrategySpace::finite(require(s.actions, lines, &span, &what, "actions")?),
        other => return Err(lines.err(&span, format!("unknown space type `{other}`"))),
    };
    space.map_err(|e| lines.err(&span, e.to_string()))
}

fn parse_terms(
    terms: &[Spanned<RawTerm>],
    blocks: Vec<usize>,
    lines: &Lines,
) -> Result<Polynomial> {
    let mut parsed = Vec::with_capacity(terms.len());
    for (k, t) in terms.iter().enumerate() {
        let span = t.span();
        let t = t.get_ref();
        if t.powers.len() != blocks.len() {
            return Err(lines.err(
                &span,
                format!("term {}: {} exponent vectors, expected {}", k + 1, t.powers.len(), blocks.len()),
            ));
        }
        for (b, (p, d)) in t.powers.iter().zip(&blocks).enumerate() {
            if p.len() != *d {
                return Err(lines.err(
                    &span,
                    format!("term {}: exponent vector {} has length {}, expected {}", k + 1, b + 1, p.len(), d),
                ));
            }
        }
        if !t.coef.is_finite() {
            return Err(lines.err(&span, format!("term {}: coefficient is not finite", k + 1)));
        }
        parsed.push((t.coef, t.powers.clone()));
    }
    Polynomial::new(blocks, parsed).map_err(|e| {
        let span = terms.first().map(|t| t.span()).unwrap_or(0..0);
        lines.err(&span, e.to_string())
    })
}

fn parse_utility(
    raw: &Spanned<RawUtility>,
    player: usize,
    spaces: &[StrategySpace],
    lines: &Lines,
) -> Result<UtilityFunction> {
    let span = raw.span();
    let u = raw.get_ref();
    let what = format!("{} utility", u.kind);
    let dims: Vec<usize> = spaces.iter().map(StrategySpace::dimension).collect();
    match u.kind.as_str() {
        "polynomial" => {
            let terms = require(u.terms.as_ref(), lines, &span, &what, "terms")?;
            Ok(UtilityFunction::Polynomial(parse_terms(terms, dims, lines)?))
        }
        "builtin" => {
            let name = require(u.name.as_deref(), lines, &span, &what, "name")?;
            let params = u.params.clone().unwrap_or_default();
            builtin(name, &params, player, spaces.len()).map_err(|e| lines.err(&span, e.to_string()))
        }
        "table" => {
            let shape = require(u.shape.clone(), lines, &span, &what, "shape")?;
            let values = require(u.values.clone(), lines, &span, &what, "values")?;
            Tensor::new(shape, values).map(UtilityFunction::Table).map_err(|e| lines.err(&span, e.to_string()))
        }
        "polymatrix" => {
            let edges = require(u.edges.as_ref(), lines, &span, &what, "edges")?;
            let mut out = Vec::with_capacity(edges.len());
            for e in edges {
                let espan = e.span();
                let edge = e.get_ref();
                if edge.with == 0 || edge.with > spaces.len() || edge.with == player + 1 {
                    return Err(lines.err(&espan, format!("edge refers to player {}", edge.with)));
                }
                let other = edge.with - 1;
                let term = match (&edge.terms, &edge.matrix) {
                    (Some(terms), None) => {
                        UtilityFunction::Polynomial(parse_terms(terms, vec![dims[player], dims[other]], lines)?)
                    }
                    (None, Some(rows)) => {
                        let t = Tensor::matrix(rows).map_err(|e| lines.err(&espan, e.to_string()))?;
                        UtilityFunction::Table(t)
                    }
                    _ => return Err(lines.err(&espan, "edge needs exactly one of `terms` or `matrix`")),
                };
                out.push(PairwiseTerm { other, term });
            }
            Ok(UtilityFunction::Polymatrix(out))
        }
        other => Err(lines.err(&span, format!("unknown utility type `{other}`"))),
    }
}

/// Parses and validates a game definition.
pub fn parse_game(src: &str) -> Result<ContinuousGame> {
    let lines = Lines(src);
    let raw: RawGame = toml::from_str(src).map_err(|e| {
        let span = e.span().unwrap_or(0..0);
        lines.err(&span, e.message().to_string())
    })?;
    let players = *raw.players.get_ref();
    let pspan = raw.players.span();
    if players == 0 {
        return Err(lines.err(&pspan, "players must be at least 1"));
    }
    if raw.spaces.len() != players {
        return Err(lines.err(&pspan, format!("players = {players} but {} spaces given", raw.spaces.len())));
    }
    if raw.utilities.len() != players {
        return Err(lines.err(&pspan, format!("players = {players} but {} utilities given", raw.utilities.len())));
    }
    let spaces = raw.spaces.iter().map(|s| parse_space(s, &lines)).collect::<Result<Vec<_>>>()?;
    let utilities = raw
        .utilities
        .iter()
        .enumerate()
        .map(|(i, u)| parse_utility(u, i, &spaces, &lines))
        .collect::<Result<Vec<_>>>()?;
    let (zero_sum, zspan) = match &raw.zero_sum {
        Some(z) => (*z.get_ref(), z.span()),
        None => (false, pspan.clone()),
    };
    ContinuousGame::new(spaces, utilities, zero_sum).map_err(|e| {
        let span = match &e {
            Error::InvalidGame(m) if m.contains("zero-sum") => zspan,
            _ => pspan,
        };
        lines.err(&span, e.to_string())
    })
}

/// Reads and parses a game file.
pub fn load_game(path: impl AsRef<Path>) -> Result<ContinuousGame> {
    let path = path.as_ref();
    let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_game(&src)
}

fn spanned<T>(v: T) -> Spanned<T> {
    Spanned::new(0..0, v)
}

fn raw_terms(p: &Polynomial) -> Vec<Spanned<RawTerm>> {
    p.terms()
        .iter()
        .map(|t| {
            let powers = (0..p.blocks().len()).map(|b| p.block_powers(t, b).to_vec()).collect();
            spanned(RawTerm { coef: t.coef, powers })
        })
        .collect()
}

fn raw_space(s: &StrategySpace) -> RawSpace {
    match s {
        StrategySpace::Box { lower, upper } => RawSpace {
            kind: "box".into(),
            lower: Some(lower.clone()),
            upper: Some(upper.clone()),
            ..Default::default()
        },
        StrategySpace::Simplex { dimension } => {
            RawSpace { kind: "simplex".into(), dimension: Some(*dimension), ..Default::default() }
        }
        StrategySpace::Circle { metric } => RawSpace {
            kind: "circle".into(),
            metric: Some(match metric {
                GroundMetric::Arc => "arc".into(),
                GroundMetric::Euclidean => "euclidean".into(),
            }),
            ..Default::default()
        },
        StrategySpace::Finite { actions } => {
            RawSpace { kind: "finite".into(), actions: Some(*actions), ..Default::default() }
        }
    }
}

fn raw_utility(u: &UtilityFunction) -> Result<RawUtility> {
    Ok(match u {
        UtilityFunction::Polynomial(p) => {
            RawUtility { kind: "polynomial".into(), terms: Some(raw_terms(p)), ..Default::default() }
        }
        UtilityFunction::BlackBox(b) => RawUtility {
            kind: "builtin".into(),
            name: Some(b.name.clone()),
            params: Some(b.params.clone()),
            ..Default::default()
        },
        UtilityFunction::Table(t) => RawUtility {
            kind: "table".into(),
            shape: Some(t.shape().to_vec()),
            values: Some(t.data().to_vec()),
            ..Default::default()
        },
        UtilityFunction::Polymatrix(terms) => {
            let mut edges = Vec::with_capacity(terms.len());
            for t in terms {
                let edge = match &t.term {
                    UtilityFunction::Polynomial(p) => {
                        RawEdge { with: t.other + 1, terms: Some(raw_terms(p)), matrix: None }
                    }
                    UtilityFunction::Table(m) if m.shape().len() == 2 => {
                        let cols = m.shape()[1];
                        let rows = m.data().chunks(cols).map(<[f64]>::to_vec).collect();
                        RawEdge { with: t.other + 1, terms: None, matrix: Some(rows) }
                    }
                    other => {
                        return Err(Error::InvalidGame(format!(
                            "pairwise term {other:?} has no file representation"
                        )))
                    }
                };
                edges.push(spanned(edge));
            }
            RawUtility { kind: "polymatrix".into(), edges: Some(edges), ..Default::default() }
        }
    })
}

/// Serializes a game; `parse_game` reads it back to an equal game.
pub fn to_toml(game: &ContinuousGame) -> Result<String> {
    let raw = RawGame {
        players: spanned(game.players()),
        zero_sum: Some(spanned(game.is_zero_sum())),
        spaces: game.spaces().iter().map(|s| spanned(raw_space(s))).collect(),
        utilities: game.utilities().iter().map(|u| raw_utility(u).map(spanned)).collect::<Result<_>>()?,
    };
    toml::to_string(&raw).map_err(|e| Error::InvalidGame(format!("serialization failed: {e}")))
}
