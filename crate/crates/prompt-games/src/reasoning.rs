//! Lifting a base game to prompt space and computing reasoning equilibria.
//!
//! The lifted game is the finite bimatrix over prompt pairs whose payoffs
//! are the exact expected base-game utilities of the induced policies. No
//! sampling is involved anywhere; cells are exact bilinear sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    self, expected_utility, make_mixed, ActionSpace, Game, MixedStrategy, Player,
};
use crate::oracle::{induced_policy_set, InfoVector, Mindset, PolicyOracle, PolicySet, PromptSpec};

/// Escalation ceiling when the solver finds nothing at the requested eps.
/// Existence is guaranteed for finite bimatrix games, so coming up empty
/// below this tolerance indicates numerical trouble, not absence.
const EPS_ESCALATION_CAP: f64 = 1e-6;

/// The prompt-indexed bimatrix of expected utilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftedGame {
    pub prompts_a: Vec<String>,
    pub prompts_d: Vec<String>,
    pub u_a: Vec<Vec<f64>>,
    pub u_d: Vec<Vec<f64>>,
    pub base: Game,
    pub policies_a: PolicySet,
    pub policies_d: PolicySet,
}

/// Either a fixed opponent prompt or a mixture over the opponent's prompts.
#[derive(Debug, Clone)]
pub enum OpponentPrompts {
    Pure(String),
    Mixed(MixedStrategy),
}

/// A reasoning equilibrium together with the behavioral profile it induces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReasoningEquilibrium {
    pub kind: EquilibriumKind,
    pub pure_profiles: Vec<(String, String)>,
    pub sigma_a: MixedStrategy,
    pub sigma_d: MixedStrategy,
    pub induced_mu_a: MixedStrategy,
    pub induced_mu_d: MixedStrategy,
    pub values: (f64, f64),
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquilibriumKind {
    Pure,
    Mixed,
}

impl LiftedGame {
    pub fn prompt_index(&self, player: Player, id: &str) -> Result<usize> {
        self.prompts(player)
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| Error::UnknownPrompt(id.to_string()))
    }

    pub fn prompts(&self, player: Player) -> &[String] {
        match player {
            Player::A => &self.prompts_a,
            Player::D => &self.prompts_d,
        }
    }

    pub fn utilities(&self, player: Player) -> &[Vec<f64>] {
        match player {
            Player::A => &self.u_a,
            Player::D => &self.u_d,
        }
    }

    /// View the lifted matrices as an ordinary bimatrix game over prompt
    /// ids, so the base-game solver applies unchanged.
    pub fn as_prompt_game(&self) -> Result<Game> {
        Game::new(
            ActionSpace::new(self.prompts_a.clone())?,
            ActionSpace::new(self.prompts_d.clone())?,
            self.u_a.clone(),
            self.u_d.clone(),
            false,
        )
    }

    /// Behavioral strategy induced by a mixture over one player's prompts:
    /// the sigma-weighted average of the per-prompt policies.
    pub fn induced_behavior(&self, player: Player, sigma: &MixedStrategy) -> Result<MixedStrategy> {
        let policies = match player {
            Player::A => &self.policies_a,
            Player::D => &self.policies_d,
        };
        let labels = self.base.actions(player).labels();
        let mut combined = vec![0.0; labels.len()];
        if sigma.weights().len() != policies.entries.len() {
            return Err(Error::LengthMismatch {
                expected: policies.entries.len(),
                got: sigma.weights().len(),
            });
        }
        for (weight, (_, policy)) in sigma.weights().iter().zip(&policies.entries) {
            for (c, w) in combined.iter_mut().zip(policy.weights()) {
                *c += weight * w;
            }
        }
        make_mixed(&combined, labels)
    }
}

/// Evaluate both induced policy sets and fill the lifted matrices.
pub fn lift(
    base: &Game,
    oracle: &dyn PolicyOracle,
    mindset_a: &Mindset,
    mindset_d: &Mindset,
) -> Result<LiftedGame> {
    let policies_a = induced_policy_set(oracle, Player::A, mindset_a, base.actions(Player::A))
        .map_err(|e| e.annotate("player A policy set"))?;
    let policies_d = induced_policy_set(oracle, Player::D, mindset_d, base.actions(Player::D))
        .map_err(|e| e.annotate("player D policy set"))?;

    let rows = policies_a.entries.len();
    let cols = policies_d.entries.len();
    let mut u_a = vec![vec![0.0; cols]; rows];
    let mut u_d = vec![vec![0.0; cols]; rows];
    for (i, (id_a, mu_a)) in policies_a.entries.iter().enumerate() {
        for (j, (id_d, mu_d)) in policies_d.entries.iter().enumerate() {
            let (ua, ud) = expected_utility(base, mu_a, mu_d)
                .map_err(|e| e.annotate(format!("lift cell ({id_a}, {id_d})")))?;
            u_a[i][j] = ua;
            u_d[i][j] = ud;
        }
    }
    Ok(LiftedGame {
        prompts_a: mindset_a.prompt_ids(),
        prompts_d: mindset_d.prompt_ids(),
        u_a,
        u_d,
        base: base.clone(),
        policies_a,
        policies_d,
    })
}

/// Every prompt pair from which neither player gains more than `eps` by a
/// unilateral prompt switch, in row-major order.
pub fn pure_reasoning_equilibria(lifted: &LiftedGame, eps: f64) -> Vec<(String, String)> {
    let rows = lifted.prompts_a.len();
    let cols = lifted.prompts_d.len();
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let best_a = (0..rows)
                .map(|r| lifted.u_a[r][j])
                .fold(f64::NEG_INFINITY, f64::max);
            let best_d = (0..cols)
                .map(|c| lifted.u_d[i][c])
                .fold(f64::NEG_INFINITY, f64::max);
            if lifted.u_a[i][j] >= best_a - eps && lifted.u_d[i][j] >= best_d - eps {
                out.push((lifted.prompts_a[i].clone(), lifted.prompts_d[j].clone()));
            }
        }
    }
    out
}

fn dump_lifted(lifted: &LiftedGame) -> String {
    format!(
        "prompts_a={:?}\nprompts_d={:?}\nu_a={:?}\nu_d={:?}",
        lifted.prompts_a, lifted.prompts_d, lifted.u_a, lifted.u_d
    )
}

/// All mixed reasoning equilibria of the lifted bimatrix, in the solver's
/// deterministic order.
pub fn mixed_reasoning_equilibria(lifted: &LiftedGame, eps: f64) -> Result<Vec<ReasoningEquilibrium>> {
    let prompt_game = lifted.as_prompt_game()?;
    let mut profiles = game::solve_behavioral_nash(&prompt_game, eps)?;
    let mut used_eps = eps;
    // Existence holds for every finite bimatrix; an empty result at a tight
    // eps means the indifference solve lost a few ulps, so widen gradually.
    while profiles.is_empty() && used_eps < EPS_ESCALATION_CAP {
        used_eps = (used_eps * 10.0).min(EPS_ESCALATION_CAP);
        profiles = game::solve_behavioral_nash(&prompt_game, used_eps)?;
    }
    if profiles.is_empty() {
        return Err(Error::NoEquilibriumFound {
            dump: dump_lifted(lifted),
        });
    }
    profiles
        .into_iter()
        .map(|p| {
            let induced_mu_a = lifted.induced_behavior(Player::A, &p.strategy_a)?;
            let induced_mu_d = lifted.induced_behavior(Player::D, &p.strategy_d)?;
            let point_a = p.strategy_a.is_point_mass(1e-12);
            let point_d = p.strategy_d.is_point_mass(1e-12);
            let (kind, pure_profiles) = match (point_a, point_d) {
                (Some(i), Some(j)) => (
                    EquilibriumKind::Pure,
                    vec![(lifted.prompts_a[i].clone(), lifted.prompts_d[j].clone())],
                ),
                _ => (EquilibriumKind::Mixed, Vec::new()),
            };
            Ok(ReasoningEquilibrium {
                kind,
                pure_profiles,
                sigma_a: p.strategy_a,
                sigma_d: p.strategy_d,
                induced_mu_a,
                induced_mu_d,
                values: (p.value_a, p.value_d),
                epsilon: used_eps,
            })
        })
        .collect()
}

/// The canonical representative: first equilibrium in the solver's order.
pub fn mixed_reasoning_equilibrium(lifted: &LiftedGame, eps: f64) -> Result<ReasoningEquilibrium> {
    Ok(mixed_reasoning_equilibria(lifted, eps)?.remove(0))
}

/// Argmax prompt for `player` against a fixed opponent prompt or prompt
/// mixture, ties broken by prompt-space order.
pub fn optimal_prompt(
    lifted: &LiftedGame,
    player: Player,
    opponent: &OpponentPrompts,
) -> Result<(String, f64)> {
    let utilities = lifted.utilities(player);
    let own = lifted.prompts(player);
    let value_of = |own_index: usize| -> Result<f64> {
        Ok(match (player, opponent) {
            (Player::A, OpponentPrompts::Pure(id)) => {
                utilities[own_index][lifted.prompt_index(Player::D, id)?]
            }
            (Player::D, OpponentPrompts::Pure(id)) => {
                utilities[lifted.prompt_index(Player::A, id)?][own_index]
            }
            (Player::A, OpponentPrompts::Mixed(sigma)) => utilities[own_index]
                .iter()
                .zip(sigma.weights())
                .map(|(u, w)| u * w)
                .sum(),
            (Player::D, OpponentPrompts::Mixed(sigma)) => sigma
                .weights()
                .iter()
                .enumerate()
                .map(|(r, w)| utilities[r][own_index] * w)
                .sum(),
        })
    };
    let mut best = 0;
    let mut best_value = value_of(0)?;
    for index in 1..own.len() {
        let value = value_of(index)?;
        if value > best_value {
            best = index;
            best_value = value;
        }
    }
    Ok((own[best].clone(), best_value))
}

/// Tabulate the optimal prompt per information instance against a fixed
/// opponent behavioral strategy.
#[allow(clippy::too_many_arguments)]
pub fn reasoning_policy(
    base: &Game,
    oracle: &dyn PolicyOracle,
    prompts: &[PromptSpec],
    worldview: &str,
    infos: &[InfoVector],
    opponent_fixed: &MixedStrategy,
    player: Player,
) -> Result<Vec<(InfoVector, String)>> {
    let mut out = Vec::with_capacity(infos.len());
    for (index, info) in infos.iter().enumerate() {
        let mindset = Mindset::new(info.clone(), prompts.to_vec(), worldview)
            .map_err(|e| e.annotate(format!("info {index}")))?;
        let set = induced_policy_set(oracle, player, &mindset, base.actions(player))
            .map_err(|e| e.annotate(format!("info {index}")))?;
        let mut best: Option<(f64, &str)> = None;
        for (prompt_id, policy) in &set.entries {
            let value = match player {
                Player::A => expected_utility(base, policy, opponent_fixed)?.0,
                Player::D => expected_utility(base, opponent_fixed, policy)?.1,
            };
            if best.is_none_or(|(v, _)| value > v) {
                best = Some((value, prompt_id));
            }
        }
        let (_, prompt_id) = best.expect("mindset has at least one prompt");
        out.push((info.clone(), prompt_id.to_string()));
    }
    Ok(out)
}
