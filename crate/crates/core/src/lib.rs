//! Multiple oracle algorithm for ε-equilibria of continuous games.
//!
//! A continuous game is solved through a sequence of finite subgames: solve
//! the current subgame, compute every player's best response in the full
//! game, stop when no player gains more than ε, otherwise grow each player's
//! strategy list by its best response.
//!
//! ```
//! use multioracle::{catalog, driver};
//!
//! let game = catalog::example_game(1).unwrap();
//! let result = driver::solve(&game, &driver::SolveConfig::default()).unwrap();
//! assert_eq!(result.terminated, driver::Terminated::Converged);
//! assert!(result.epsilon_certified <= 1e-3);
//! ```

#![allow(clippy::needless_range_loop)]

pub mod catalog;
pub mod driver;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod game;
pub mod gamefile;
pub mod lp;
pub mod metrics;
pub mod oracle;
pub mod poly;
pub mod report;
pub mod space;
pub mod subgame;

pub use driver::{certify_epsilon, solve, SolveConfig, SolveResult, Terminated};
pub use error::{Error, Result};
pub use exec::Execution;
pub use game::{ContinuousGame, UtilityFunction};
pub use space::{MixedStrategy, Profile, PureStrategy, StrategySpace};
