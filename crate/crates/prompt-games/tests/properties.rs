//! Randomized invariant checks for the core game operations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prompt_games::game::{
    best_response, expected_utility, is_epsilon_nash, l1_distance, make_mixed,
    solve_behavioral_nash, ActionSpace, Game, MixedStrategy, Player,
};
use prompt_games::oracle::{normalize_distribution, PolicySet};
use prompt_games::analysis::is_supported;

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}

fn random_strategy(rng: &mut ChaCha8Rng, labels: &[String]) -> MixedStrategy {
    make_mixed(&random_simplex(rng, labels.len()), labels).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn random_game(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Game {
    Game::new(
        ActionSpace::new(labels("r", n)).unwrap(),
        ActionSpace::new(labels("c", m)).unwrap(),
        random_matrix(rng, n, m),
        random_matrix(rng, n, m),
        false,
    )
    .unwrap()
}

proptest! {
    /// Simplex closure: any in-band weight vector becomes an exact simplex
    /// element.
    #[test]
    fn make_mixed_closes_onto_simplex(raw in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let sum: f64 = raw.iter().sum();
        prop_assume!(sum > 1e-6);
        let normalized: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let names = labels("a", normalized.len());
        let strategy = make_mixed(&normalized, &names).unwrap();
        let total: f64 = strategy.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(strategy.weights().iter().all(|w| *w >= 0.0));
    }

    /// Normalization is idempotent once on the simplex.
    #[test]
    fn normalization_idempotent(raw in prop::collection::vec(0.001f64..1.0, 2..6)) {
        let names = labels("a", raw.len());
        let actions = ActionSpace::new(names.clone()).unwrap();
        let sum: f64 = raw.iter().sum();
        let first: std::collections::BTreeMap<String, f64> = names
            .iter()
            .zip(&raw)
            .map(|(l, w)| (l.clone(), w / sum))
            .collect();
        let once = normalize_distribution(&first, &actions).unwrap();
        let again: std::collections::BTreeMap<String, f64> = names
            .iter()
            .zip(once.weights())
            .map(|(l, w)| (l.clone(), *w))
            .collect();
        let twice = normalize_distribution(&again, &actions).unwrap();
        for (a, b) in once.weights().iter().zip(twice.weights()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }
}

#[test]
fn expected_utility_is_bilinear() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.random_range(2..=5);
        let m = rng.random_range(2..=5);
        let game = random_game(&mut rng, n, m);
        let row = game.actions(Player::A).labels().to_vec();
        let col = game.actions(Player::D).labels().to_vec();
        let mu1 = random_strategy(&mut rng, &row);
        let mu2 = random_strategy(&mut rng, &row);
        let nu = random_strategy(&mut rng, &col);
        let alpha: f64 = rng.random_range(0.0..1.0);
        let blend: Vec<f64> = mu1
            .weights()
            .iter()
            .zip(mu2.weights())
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        let mixed = make_mixed(&blend, &row).unwrap();
        let (u_blend, _) = expected_utility(&game, &mixed, &nu).unwrap();
        let (u1, _) = expected_utility(&game, &mu1, &nu).unwrap();
        let (u2, _) = expected_utility(&game, &mu2, &nu).unwrap();
        assert!(
            (u_blend - (alpha * u1 + (1.0 - alpha) * u2)).abs() <= 1e-12,
            "bilinearity violated"
        );
    }
}

#[test]
fn zero_sum_utilities_cancel() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let n = rng.random_range(2..=5);
        let m = rng.random_range(2..=5);
        let game = Game::zero_sum(
            ActionSpace::new(labels("r", n)).unwrap(),
            ActionSpace::new(labels("c", m)).unwrap(),
            random_matrix(&mut rng, n, m),
        )
        .unwrap();
        let mu = random_strategy(&mut rng, game.actions(Player::A).labels());
        let nu = random_strategy(&mut rng, game.actions(Player::D).labels());
        let (ua, ud) = expected_utility(&game, &mu, &nu).unwrap();
        assert!((ua + ud).abs() <= 1e-12, "zero-sum utilities do not cancel");
    }
}

#[test]
fn best_response_dominates_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let n = rng.random_range(2..=5);
        let m = rng.random_range(2..=5);
        let game = random_game(&mut rng, n, m);
        let mu = random_strategy(&mut rng, game.actions(Player::A).labels());
        let nu = random_strategy(&mut rng, game.actions(Player::D).labels());
        let (value, _) = best_response(&game, Player::A, &nu).unwrap();
        let (u, _) = expected_utility(&game, &mu, &nu).unwrap();
        assert!(value >= u - 1e-12, "best response dominated: {value} < {u}");
    }
}

#[test]
fn solver_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let n = rng.random_range(2..=3);
        let game = random_game(&mut rng, n, n);
        let Ok(profiles) = solve_behavioral_nash(&game, 1e-9) else {
            continue; // degenerate instances may legitimately fail
        };
        for profile in profiles {
            assert!(
                is_epsilon_nash(&game, &profile.strategy_a, &profile.strategy_d, 1e-9).unwrap(),
                "returned profile is not an eps-Nash equilibrium"
            );
            assert!(profile.epsilon <= 1e-9);
        }
    }
}

/// Lifted utilities depend on the induced policies, not the prompt names.
#[test]
fn lift_is_invariant_under_prompt_relabeling() {
    use prompt_games::oracle::{InfoVector, Mindset, PromptSpec, TableOracle};
    use prompt_games::reasoning::lift;

    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..50 {
        let game = random_game(&mut rng, 3, 3);
        let info = vec![0.1, 0.9];
        let weights_a: Vec<Vec<f64>> = (0..2).map(|_| random_simplex(&mut rng, 3)).collect();
        let weights_d: Vec<Vec<f64>> = (0..2).map(|_| random_simplex(&mut rng, 3)).collect();

        let build = |ids_a: [&str; 2], ids_d: [&str; 2]| {
            let mut rows = Vec::new();
            for (player, ids, weights, space) in [
                (Player::A, ids_a, &weights_a, game.actions(Player::A)),
                (Player::D, ids_d, &weights_d, game.actions(Player::D)),
            ] {
                for (id, w) in ids.iter().zip(weights) {
                    rows.push(serde_json::json!({
                        "player": player.to_string(),
                        "info": info,
                        "prompt_id": id,
                        "worldview": "w",
                        "actions": space.labels(),
                        "weights": w,
                    }));
                }
            }
            let oracle =
                TableOracle::from_json_str(&serde_json::json!({ "rows": rows }).to_string())
                    .unwrap();
            let mindset = |ids: [&str; 2]| {
                Mindset::new(
                    InfoVector::new(info.clone(), "").unwrap(),
                    ids.iter()
                        .map(|id| PromptSpec {
                            id: id.to_string(),
                            text: format!("body {id}"),
                        })
                        .collect(),
                    "w",
                )
                .unwrap()
            };
            lift(&game, &oracle, &mindset(ids_a), &mindset(ids_d)).unwrap()
        };

        let original = build(["p0", "p1"], ["q0", "q1"]);
        let renamed = build(["left", "right"], ["up", "down"]);
        assert_eq!(original.u_a, renamed.u_a);
        assert_eq!(original.u_d, renamed.u_d);
    }
}

#[test]
fn is_supported_at_zero_eps_means_exact_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let names = labels("a", 3);
    for _ in 0..200 {
        let member = random_strategy(&mut rng, &names);
        let other = random_strategy(&mut rng, &names);
        let set = PolicySet {
            entries: vec![("p0".into(), member.clone()), ("p1".into(), other.clone())],
        };
        let (ok, witness) = is_supported(&member, &set, 0.0).unwrap();
        assert!(ok, "exact member not supported at eps 0");
        assert_eq!(witness.as_deref(), Some("p0"));

        // A strictly different target is unsupported at eps 0.
        let mut shifted = member.weights().to_vec();
        shifted[0] = (shifted[0] + 0.25).min(1.0);
        let sum: f64 = shifted.iter().sum();
        let shifted: Vec<f64> = shifted.into_iter().map(|w| w / sum).collect();
        let target = make_mixed(&shifted, &names).unwrap();
        if l1_distance(target.weights(), member.weights()) > 0.0
            && l1_distance(target.weights(), other.weights()) > 0.0
        {
            let (ok, _) = is_supported(&target, &set, 0.0).unwrap();
            assert!(!ok, "non-member reported supported at eps 0");
        }
    }
}
