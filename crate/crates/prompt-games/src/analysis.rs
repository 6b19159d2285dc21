//! Behavioral-vs-reasoning utility gap, expressiveness orderings between
//! mindsets, and the unsupported-behavior test.
//!
//! All set comparisons use L1 distance on the simplex: an L1 tolerance of
//! eps bounds the expected-utility perturbation by (eps/2) times the
//! payoff range, which keeps the parameter interpretable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{best_response, expected_utility, l1_distance, Game, MixedStrategy, Player};
use crate::oracle::{induced_policy_set, Mindset, PolicyOracle, PolicySet};

/// Shortfall of the best prompt-constrained payoff against the
/// unconstrained best response, for a fixed opponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub player: Player,
    /// Unconstrained behavioral optimum.
    pub u_star: f64,
    /// Best payoff attainable through the mindset's prompts.
    pub u_tilde_star: f64,
    pub gap: f64,
    pub best_action: String,
    pub best_prompt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpressivenessRelation {
    MoreExpressive,
    LessExpressive,
    Equivalent,
    Incomparable,
}

/// A strategy on one side with no close counterpart on the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionWitness {
    /// Which inclusion failed: "a_not_in_b" or "b_not_in_a".
    pub direction: String,
    pub prompt_id: String,
    pub strategy: MixedStrategy,
    pub nearest_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressivenessVerdict {
    pub relation: ExpressivenessRelation,
    pub epsilon: f64,
    pub witnesses: Vec<InclusionWitness>,
}

/// Compare the best achievable payoff with and without the mindset
/// constraint, against a fixed opponent strategy.
pub fn utility_gap(
    base: &Game,
    oracle: &dyn PolicyOracle,
    mindset: &Mindset,
    player: Player,
    opponent_mu: &MixedStrategy,
) -> Result<GapReport> {
    let (u_star, br) = best_response(base, player, opponent_mu)?;
    let best_action = base.actions(player).labels()[br.argmax()].clone();

    let set = induced_policy_set(oracle, player, mindset, base.actions(player))?;
    let mut best: Option<(f64, &str)> = None;
    for (prompt_id, policy) in &set.entries {
        let value = match player {
            Player::A => expected_utility(base, policy, opponent_mu)?.0,
            Player::D => expected_utility(base, opponent_mu, policy)?.1,
        };
        if best.is_none_or(|(v, _)| value > v) {
            best = Some((value, prompt_id));
        }
    }
    let (u_tilde_star, best_prompt) = best.expect("mindset has at least one prompt");
    Ok(GapReport {
        player,
        u_star,
        u_tilde_star,
        gap: u_star - u_tilde_star,
        best_action,
        best_prompt: best_prompt.to_string(),
    })
}

fn check_same_space(set_a: &PolicySet, set_b: &PolicySet) -> Result<()> {
    let id_a = set_a.entries.first().map(|(_, s)| s.label_set_id());
    let id_b = set_b.entries.first().map(|(_, s)| s.label_set_id());
    match (id_a, id_b) {
        (Some(a), Some(b)) if a == b => Ok(()),
        _ => Err(Error::ActionSpaceMismatch),
    }
}

/// For each strategy of `from` without a counterpart within `eps` in
/// `into`, the worst witness. Empty when `from` is included in `into`.
fn inclusion_failures(from: &PolicySet, into: &PolicySet, eps: f64, direction: &str) -> Option<InclusionWitness> {
    let mut worst: Option<InclusionWitness> = None;
    for (prompt_id, strategy) in &from.entries {
        let nearest = into
            .strategies()
            .map(|other| l1_distance(strategy.weights(), other.weights()))
            .fold(f64::INFINITY, f64::min);
        if nearest > eps && worst.as_ref().is_none_or(|w| nearest > w.nearest_distance) {
            worst = Some(InclusionWitness {
                direction: direction.to_string(),
                prompt_id: prompt_id.clone(),
                strategy: strategy.clone(),
                nearest_distance: nearest,
            });
        }
    }
    worst
}

/// Order two induced strategy sets by inclusion with L1 tolerance `eps`.
///
/// `MoreExpressive` means the first set strictly contains the second (up
/// to eps); `Equivalent` that each is included in the other. Witnesses
/// are attached exactly for the failing inclusion directions.
pub fn expressiveness_order(set_a: &PolicySet, set_b: &PolicySet, eps: f64) -> Result<ExpressivenessVerdict> {
    check_same_space(set_a, set_b)?;
    let a_missing = inclusion_failures(set_a, set_b, eps, "a_not_in_b");
    let b_missing = inclusion_failures(set_b, set_a, eps, "b_not_in_a");
    let relation = match (&a_missing, &b_missing) {
        (None, None) => ExpressivenessRelation::Equivalent,
        (Some(_), None) => ExpressivenessRelation::MoreExpressive,
        (None, Some(_)) => ExpressivenessRelation::LessExpressive,
        (Some(_), Some(_)) => ExpressivenessRelation::Incomparable,
    };
    let witnesses = [a_missing, b_missing].into_iter().flatten().collect();
    Ok(ExpressivenessVerdict {
        relation,
        epsilon: eps,
        witnesses,
    })
}

/// First prompt whose induced policy is within L1 `eps` of the target, if
/// any.
pub fn is_supported(target: &MixedStrategy, set: &PolicySet, eps: f64) -> Result<(bool, Option<String>)> {
    let Some((_, first)) = set.entries.first() else {
        return Err(Error::ActionSpaceMismatch);
    };
    if first.label_set_id() != target.label_set_id() {
        return Err(Error::ActionSpaceMismatch);
    }
    for (prompt_id, strategy) in &set.entries {
        if l1_distance(target.weights(), strategy.weights()) <= eps {
            return Ok((true, Some(prompt_id.clone())));
        }
    }
    Ok((false, None))
}
