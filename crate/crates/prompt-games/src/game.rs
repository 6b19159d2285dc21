//! Base game representation, simplex arithmetic, expected utilities, and
//! equilibrium search by support enumeration.
//!
//! All tie-breaking is by lowest canonical index so that reports are
//! deterministic. Tolerances are fixed constants, not configuration.

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lp;

/// Accepted deviation of an input weight sum from 1 before rejection.
pub const PROB_INPUT_TOL: f64 = 1e-6;
/// Simplex invariant tolerance after construction.
pub const PROB_INVARIANT_TOL: f64 = 1e-9;
/// Raw entries below this are negative mass; above, they clamp to zero.
pub const NEG_MASS_TOL: f64 = -1e-12;
/// Profiles closer than this in L1 are considered the same equilibrium.
const DEDUP_L1_TOL: f64 = 1e-7;
/// Per-side action limit for support enumeration.
pub const MAX_ACTIONS: usize = 12;

/// Stable digest of an ordered label list, used to tie strategies to the
/// set they range over.
pub fn label_set_id(labels: &[String]) -> String {
    let mut hasher = Sha256::new();
    for label in labels {
        hasher.update(label.as_bytes());
        hasher.update([0x1f]);
    }
    hex::encode(&hasher.finalize()[..8])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    A,
    D,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::A => Player::D,
            Player::D => Player::A,
        }
    }
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Player::A => write!(f, "A"),
            Player::D => write!(f, "D"),
        }
    }
}

impl std::str::FromStr for Player {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Player::A),
            "D" | "d" => Ok(Player::D),
            other => Err(Error::ValidationError(format!(
                "player must be A or D, got {other:?}"
            ))),
        }
    }
}

/// Ordered, distinct action labels. The order is canonical for the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    labels: Vec<String>,
}

impl ActionSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::ValidationError("action space is empty".into()));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::ValidationError(format!(
                    "duplicate action label {a:?}"
                )));
            }
        }
        Ok(ActionSpace { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn fingerprint(&self) -> String {
        label_set_id(&self.labels)
    }
}

/// A probability vector over a finite label set (actions or prompts).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    weights: Vec<f64>,
    label_set_id: String,
}

impl MixedStrategy {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn label_set_id(&self) -> &str {
        &self.label_set_id
    }

    /// Point mass on one index of the label set.
    pub fn point_mass(index: usize, labels: &[String]) -> Result<Self> {
        let mut raw = vec![0.0; labels.len()];
        if index >= labels.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                got: index,
            });
        }
        raw[index] = 1.0;
        make_mixed(&raw, labels)
    }

    /// Index of the largest weight, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    pub fn is_point_mass(&self, tol: f64) -> Option<usize> {
        let i = self.argmax();
        if (self.weights[i] - 1.0).abs() <= tol {
            Some(i)
        } else {
            None
        }
    }
}

/// L1 distance between two weight vectors of equal length.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Validate a raw weight vector into a simplex element.
///
/// Entries in `[-1e-12, 0)` clamp to zero; anything more negative is
/// rejected. The sum must lie within `1 ± 1e-6`; accepted vectors are
/// renormalized so the stored weights sum to 1.
pub fn make_mixed(raw: &[f64], labels: &[String]) -> Result<MixedStrategy> {
    if raw.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            got: raw.len(),
        });
    }
    let mut weights = Vec::with_capacity(raw.len());
    for (index, &value) in raw.iter().enumerate() {
        if !value.is_finite() || value < NEG_MASS_TOL {
            return Err(Error::NegativeMass { index, value });
        }
        weights.push(value.max(0.0));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > PROB_INPUT_TOL {
        return Err(Error::BadSum { sum });
    }
    for w in &mut weights {
        *w /= sum;
    }
    Ok(MixedStrategy {
        weights,
        label_set_id: label_set_id(labels),
    })
}

/// Two-player game in canonical matrix form: rows index A's actions,
/// columns index D's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Game {
    actions_a: ActionSpace,
    actions_d: ActionSpace,
    payoff_a: Vec<Vec<f64>>,
    payoff_d: Vec<Vec<f64>>,
    zero_sum: bool,
}

impl Game {
    pub fn new(
        actions_a: ActionSpace,
        actions_d: ActionSpace,
        payoff_a: Vec<Vec<f64>>,
        payoff_d: Vec<Vec<f64>>,
        zero_sum: bool,
    ) -> Result<Self> {
        let (n, m) = (actions_a.len(), actions_d.len());
        for (name, matrix) in [("payoff_a", &payoff_a), ("payoff_d", &payoff_d)] {
            if matrix.len() != n {
                return Err(Error::ValidationError(format!(
                    "{name} has {} rows, expected {n}",
                    matrix.len()
                )));
            }
            for (i, row) in matrix.iter().enumerate() {
                if row.len() != m {
                    return Err(Error::ValidationError(format!(
                        "{name} row {i} has {} entries, expected {m}",
                        row.len()
                    )));
                }
                if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                    return Err(Error::ValidationError(format!(
                        "{name} row {i} contains non-finite value {v}"
                    )));
                }
            }
        }
        if zero_sum {
            for i in 0..n {
                for j in 0..m {
                    if payoff_d[i][j] != -payoff_a[i][j] {
                        return Err(Error::ValidationError(format!(
                            "zero_sum set but payoff_d[{i}][{j}] != -payoff_a[{i}][{j}]"
                        )));
                    }
                }
            }
        }
        Ok(Game {
            actions_a,
            actions_d,
            payoff_a,
            payoff_d,
            zero_sum,
        })
    }

    /// Zero-sum constructor: D's payoffs are the exact negation of A's.
    pub fn zero_sum(actions_a: ActionSpace, actions_d: ActionSpace, payoff_a: Vec<Vec<f64>>) -> Result<Self> {
        let payoff_d = payoff_a
            .iter()
            .map(|row| row.iter().map(|v| -v).collect())
            .collect();
        Game::new(actions_a, actions_d, payoff_a, payoff_d, true)
    }

    pub fn actions(&self, player: Player) -> &ActionSpace {
        match player {
            Player::A => &self.actions_a,
            Player::D => &self.actions_d,
        }
    }

    pub fn payoff(&self, player: Player) -> &[Vec<f64>] {
        match player {
            Player::A => &self.payoff_a,
            Player::D => &self.payoff_d,
        }
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    fn check_strategy(&self, player: Player, mu: &MixedStrategy) -> Result<()> {
        if mu.label_set_id() != self.actions(player).fingerprint() {
            return Err(Error::DimensionMismatch);
        }
        Ok(())
    }
}

/// A verified equilibrium of a `Game`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub strategy_a: MixedStrategy,
    pub strategy_d: MixedStrategy,
    pub value_a: f64,
    pub value_d: f64,
    /// Tolerance at which the Nash deviation conditions were verified.
    pub epsilon: f64,
}

/// Exact bilinear expected utilities `(u_A, u_D)` under a strategy pair.
pub fn expected_utility(game: &Game, mu_a: &MixedStrategy, mu_d: &MixedStrategy) -> Result<(f64, f64)> {
    game.check_strategy(Player::A, mu_a)?;
    game.check_strategy(Player::D, mu_d)?;
    let mut ua = 0.0;
    let mut ud = 0.0;
    for (i, &wa) in mu_a.weights().iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        for (j, &wd) in mu_d.weights().iter().enumerate() {
            if wd == 0.0 {
                continue;
            }
            let p = wa * wd;
            ua += p * game.payoff_a[i][j];
            ud += p * game.payoff_d[i][j];
        }
    }
    Ok((ua, ud))
}

/// Expected payoff of each of `player`'s pure actions against a fixed
/// opponent strategy.
fn pure_action_values(game: &Game, player: Player, opponent_mu: &MixedStrategy) -> Result<Vec<f64>> {
    game.check_strategy(player.other(), opponent_mu)?;
    let payoff = game.payoff(player);
    let values = match player {
        Player::A => payoff
            .iter()
            .map(|row| row.iter().zip(opponent_mu.weights()).map(|(u, w)| u * w).sum())
            .collect(),
        Player::D => (0..game.actions_d.len())
            .map(|j| {
                opponent_mu
                    .weights()
                    .iter()
                    .enumerate()
                    .map(|(i, w)| payoff[i][j] * w)
                    .sum()
            })
            .collect(),
    };
    Ok(values)
}

/// Best pure response against a fixed opponent strategy.
///
/// Returns the attained value and a point mass on the argmax action,
/// lowest index on ties.
pub fn best_response(game: &Game, player: Player, opponent_mu: &MixedStrategy) -> Result<(f64, MixedStrategy)> {
    let values = pure_action_values(game, player, opponent_mu)?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let strategy = MixedStrategy::point_mass(best, game.actions(player).labels())?;
    Ok((values[best], strategy))
}

/// True iff neither player can improve by more than `eps` with any
/// unilateral deviation.
pub fn is_epsilon_nash(game: &Game, mu_a: &MixedStrategy, mu_d: &MixedStrategy, eps: f64) -> Result<bool> {
    let (ua, ud) = expected_utility(game, mu_a, mu_d)?;
    let (best_a, _) = best_response(game, Player::A, mu_d)?;
    let (best_d, _) = best_response(game, Player::D, mu_a)?;
    Ok(best_a - ua <= eps && best_d - ud <= eps)
}

/// Solve the indifference system for one support pair.
///
/// Unknowns: the opponent weights on `opp_support` plus the indifferent
/// player's common value. Returns `None` when the system is singular.
fn indifference_solve(utilities: &[Vec<f64>], own_support: &[usize], opp_support: &[usize], transpose: bool) -> Option<Vec<f64>> {
    let k = own_support.len();
    debug_assert_eq!(k, opp_support.len());
    let dim = k + 1;
    let mut a = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let mut b = nalgebra::DVector::<f64>::zeros(dim);
    for (row, &i) in own_support.iter().enumerate() {
        for (col, &j) in opp_support.iter().enumerate() {
            a[(row, col)] = if transpose { utilities[j][i] } else { utilities[i][j] };
        }
        a[(row, k)] = -1.0; // minus the common value v
    }
    for col in 0..k {
        a[(k, col)] = 1.0; // weights sum to 1
    }
    b[k] = 1.0;
    let lu = a.lu();
    let solution = lu.solve(&b)?;
    if solution.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(solution.as_slice()[..k].to_vec())
}

fn embed_support(weights: &[f64], support: &[usize], len: usize) -> Vec<f64> {
    let mut full = vec![0.0; len];
    for (&idx, &w) in support.iter().zip(weights) {
        full[idx] = w;
    }
    full
}

/// All equilibria found by support enumeration over equal-size support
/// pairs, verified by the `eps`-Nash deviation conditions.
///
/// Singular indifference systems are skipped. For zero-sum games the
/// value of every accepted profile is cross-checked against the minimax
/// linear program. Profiles closer than 1e-7 in L1 are deduplicated.
pub fn solve_behavioral_nash(game: &Game, eps: f64) -> Result<Vec<EquilibriumProfile>> {
    let n = game.actions_a.len();
    let m = game.actions_d.len();
    if n > MAX_ACTIONS || m > MAX_ACTIONS {
        return Err(Error::TooLarge {
            rows: n,
            cols: m,
            limit: MAX_ACTIONS,
        });
    }

    let labels_a = game.actions_a.labels();
    let labels_d = game.actions_d.labels();
    let mut found: Vec<EquilibriumProfile> = Vec::new();

    for k in 1..=n.min(m) {
        for support_a in (0..n).combinations(k) {
            for support_d in (0..m).combinations(k) {
                let (raw_a, raw_d) = if k == 1 {
                    (vec![1.0], vec![1.0])
                } else {
                    // D's weights make A indifferent over support_a; A's
                    // weights make D indifferent over support_d.
                    let Some(wd) = indifference_solve(&game.payoff_a, &support_a, &support_d, false) else {
                        continue;
                    };
                    let Some(wa) = indifference_solve(&game.payoff_d, &support_d, &support_a, true) else {
                        continue;
                    };
                    (wa, wd)
                };
                if raw_a.iter().chain(&raw_d).any(|&w| w < -PROB_INVARIANT_TOL) {
                    continue;
                }
                let full_a = embed_support(&raw_a, &support_a, n);
                let full_d = embed_support(&raw_d, &support_d, m);
                let Ok(mu_a) = make_mixed(&full_a, labels_a) else {
                    continue;
                };
                let Ok(mu_d) = make_mixed(&full_d, labels_d) else {
                    continue;
                };
                if !is_epsilon_nash(game, &mu_a, &mu_d, eps)? {
                    continue;
                }
                let duplicate = found.iter().any(|p| {
                    l1_distance(p.strategy_a.weights(), mu_a.weights())
                        + l1_distance(p.strategy_d.weights(), mu_d.weights())
                        < DEDUP_L1_TOL
                });
                if duplicate {
                    continue;
                }
                let (value_a, value_d) = expected_utility(game, &mu_a, &mu_d)?;
                found.push(EquilibriumProfile {
                    strategy_a: mu_a,
                    strategy_d: mu_d,
                    value_a,
                    value_d,
                    epsilon: eps,
                });
            }
        }
    }

    if game.zero_sum {
        if let Some(value) = lp::zero_sum_value(&game.payoff_a) {
            let tol = 1e-6_f64.max(eps);
            found.retain(|p| (p.value_a - value).abs() <= tol);
        }
    }
    Ok(found)
}
