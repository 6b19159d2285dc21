//! Equilibrium solver for prompt-lifted finite games.
//!
//! The library models two-player finite games whose players act through
//! reasoning prompts: a policy oracle maps (player, information, prompt,
//! worldview) to a mixed strategy over actions, the base game is lifted to
//! a bimatrix game over prompt pairs, and equilibria are computed at both
//! the behavioral level (over actions) and the reasoning level (over
//! prompts). Analyses cover the behavioral-vs-reasoning utility gap,
//! expressiveness orderings between mindsets, and the unsupported-behavior
//! test.
//!
//! See the `prompt-games` binary for the CLI surface; `scenario` holds the
//! file formats and the shipped rock-paper-scissors case study.

pub mod analysis;
pub mod error;
pub mod game;
pub mod lp;
pub mod oracle;
pub mod reasoning;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
