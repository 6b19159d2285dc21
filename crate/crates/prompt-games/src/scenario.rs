//! Scenario files: schema, eager validation, and the built-in case study.
//!
//! A scenario packages a base game, both mindsets, an oracle
//! configuration, and the analyses to run. The shipped rock-paper-scissors
//! case study lives next to the crate as plain data so users can edit
//! beliefs and prompts and re-run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ActionSpace, Game, Player};
use crate::oracle::{
    HttpOracle, InfoVector, Mindset, OracleQuery, PolicyOracle, PromptSpec, TableOracle,
};

/// Default equilibrium tolerance when the scenario does not override it.
pub const DEFAULT_EPS: f64 = 1e-9;

/// The built-in case study scenario, shipped as data.
pub const RPS_SCENARIO_JSON: &str = include_str!("../scenarios/rps_case_study.json");
/// Its oracle table.
pub const RPS_ORACLE_JSON: &str = include_str!("../scenarios/rps_case_study.oracle.json");

// ---------------------------------------------------------------------------
// Raw document schema (serde side)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    pub actions: ActionsDoc,
    pub payoff_a: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff_d: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub zero_sum: bool,
    pub mindsets: MindsetsDoc,
    pub oracle: OracleDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "AnalysesDoc::is_empty")]
    pub analyses: AnalysesDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionsDoc {
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "D")]
    pub d: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MindsetsDoc {
    #[serde(rename = "A")]
    pub a: MindsetDoc,
    #[serde(rename = "D")]
    pub d: MindsetDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MindsetDoc {
    pub info: Vec<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub info_schema: String,
    pub worldview: String,
    pub prompts: Vec<PromptSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum OracleDoc {
    Table { path: String },
    Http { cache: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysesDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gaps: Vec<GapRequest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supported: Vec<SupportedRequest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expressiveness: Vec<ExpressivenessRequest>,
}

impl AnalysesDoc {
    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty() && self.supported.is_empty() && self.expressiveness.is_empty()
    }
}

/// Gap of `player` against the opponent's policy induced by
/// `opponent_prompt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRequest {
    pub player: Player,
    pub opponent_prompt: String,
}

/// Is the target behavior inducible by `player`'s mindset?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportedRequest {
    pub player: Player,
    pub target: Vec<f64>,
}

/// Compare `player`'s full mindset against the sub-mindset restricted to
/// `baseline_prompts`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpressivenessRequest {
    pub player: Player,
    pub baseline_prompts: Vec<String>,
}

// ---------------------------------------------------------------------------
// Resolved scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum OracleConfig {
    Table { path: PathBuf },
    Http { cache: PathBuf },
}

/// A fully validated scenario with all cross-references checked.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub game: Game,
    pub mindset_a: Mindset,
    pub mindset_d: Mindset,
    pub oracle_config: OracleConfig,
    pub eps: f64,
    pub analyses: AnalysesDoc,
    pub notes: Vec<String>,
    doc: ScenarioDoc,
}

impl Scenario {
    pub fn mindset(&self, player: Player) -> &Mindset {
        match player {
            Player::A => &self.mindset_a,
            Player::D => &self.mindset_d,
        }
    }

    /// Re-serialize the scenario document (the `init` writer).
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.doc).expect("doc serializes");
        out.push('\n');
        out
    }

    pub fn doc(&self) -> &ScenarioDoc {
        &self.doc
    }

    /// Build the configured oracle backend. `cache_override` replaces the
    /// HTTP cache path from the file.
    pub fn build_oracle(&self, cache_override: Option<&Path>) -> Result<Box<dyn PolicyOracle>> {
        match &self.oracle_config {
            OracleConfig::Table { path } => {
                let oracle = TableOracle::load(path)?;
                self.check_table_coverage(&oracle)?;
                Ok(Box::new(oracle))
            }
            OracleConfig::Http { cache } => {
                let cache = cache_override.unwrap_or(cache);
                Ok(Box::new(HttpOracle::from_env(cache)?))
            }
        }
    }

    /// Table oracles must cover the full mindset-times-prompt product.
    fn check_table_coverage(&self, oracle: &TableOracle) -> Result<()> {
        for (player, mindset) in [(Player::A, &self.mindset_a), (Player::D, &self.mindset_d)] {
            for prompt in &mindset.prompts {
                let query = OracleQuery {
                    player,
                    info: &mindset.info,
                    prompt,
                    worldview: &mindset.worldview,
                    actions: self.game.actions(player),
                };
                if !oracle.contains(&query.key()) {
                    return Err(Error::MissingEntry {
                        player: player.to_string(),
                        prompt_id: prompt.id.clone(),
                        worldview: mindset.worldview.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn validation(e: Error) -> Error {
    match e {
        e @ (Error::SchemaError { .. } | Error::ValidationError(_)) => e,
        other => Error::ValidationError(other.to_string()),
    }
}

/// Parse and validate a scenario from JSON text. `base_dir` anchors
/// relative oracle paths.
pub fn scenario_from_str(text: &str, base_dir: &Path) -> Result<Scenario> {
    let mut deserializer = serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc =
        serde_path_to_error::deserialize(&mut deserializer).map_err(|e| Error::SchemaError {
            location: format!("/{}", e.path().to_string().replace('.', "/")),
            message: e.to_string(),
        })?;

    let actions_a = ActionSpace::new(doc.actions.a.clone()).map_err(validation)?;
    let actions_d = ActionSpace::new(doc.actions.d.clone()).map_err(validation)?;
    let game = match (&doc.payoff_d, doc.zero_sum) {
        (Some(payoff_d), zero_sum) => Game::new(
            actions_a,
            actions_d,
            doc.payoff_a.clone(),
            payoff_d.clone(),
            zero_sum,
        ),
        (None, true) => Game::zero_sum(actions_a, actions_d, doc.payoff_a.clone()),
        (None, false) => Err(Error::ValidationError(
            "either payoff_d or zero_sum must be given".into(),
        )),
    }
    .map_err(validation)?;

    let build_mindset = |m: &MindsetDoc| -> Result<Mindset> {
        Mindset::new(
            InfoVector::new(m.info.clone(), m.info_schema.clone())?,
            m.prompts.clone(),
            m.worldview.clone(),
        )
    };
    let mindset_a = build_mindset(&doc.mindsets.a).map_err(validation)?;
    let mindset_d = build_mindset(&doc.mindsets.d).map_err(validation)?;

    // Analyses cross-references, checked eagerly.
    for request in &doc.analyses.gaps {
        let opponent = request.player.other();
        let mindset = match opponent {
            Player::A => &mindset_a,
            Player::D => &mindset_d,
        };
        mindset.prompt(&request.opponent_prompt).map_err(|_| {
            Error::ValidationError(format!(
                "gap request references unknown opponent prompt {:?}",
                request.opponent_prompt
            ))
        })?;
    }
    for request in &doc.analyses.supported {
        let expected = game.actions(request.player).len();
        if request.target.len() != expected {
            return Err(Error::ValidationError(format!(
                "supported-target has {} entries, expected {expected}",
                request.target.len()
            )));
        }
    }
    for request in &doc.analyses.expressiveness {
        let mindset = match request.player {
            Player::A => &mindset_a,
            Player::D => &mindset_d,
        };
        if request.baseline_prompts.is_empty() {
            return Err(Error::ValidationError(
                "expressiveness baseline_prompts is empty".into(),
            ));
        }
        for id in &request.baseline_prompts {
            mindset.prompt(id).map_err(|_| {
                Error::ValidationError(format!(
                    "expressiveness request references unknown prompt {id:?}"
                ))
            })?;
        }
    }

    let oracle_config = match &doc.oracle {
        OracleDoc::Table { path } => OracleConfig::Table {
            path: base_dir.join(path),
        },
        OracleDoc::Http { cache } => OracleConfig::Http {
            cache: base_dir.join(cache),
        },
    };

    Ok(Scenario {
        name: doc.name.clone(),
        game,
        mindset_a,
        mindset_d,
        oracle_config,
        eps: doc.eps.unwrap_or(DEFAULT_EPS),
        analyses: doc.analyses.clone(),
        notes: doc.notes.clone(),
        doc,
    })
}

/// Load and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    scenario_from_str(&text, base_dir)
}

/// Write the built-in case study (scenario plus oracle table) into `dir`.
/// Returns the scenario path.
pub fn write_builtin_rps(dir: &Path) -> Result<PathBuf> {
    let write = |name: &str, contents: &str| -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(path)
    };
    write("rps_case_study.oracle.json", RPS_ORACLE_JSON)?;
    write("rps_case_study.json", RPS_SCENARIO_JSON)
}

/// Equality over every semantically relevant field, used by round-trip
/// checks.
pub fn scenario_eq(a: &Scenario, b: &Scenario) -> bool {
    a.name == b.name
        && a.game == b.game
        && a.mindset_a == b.mindset_a
        && a.mindset_d == b.mindset_d
        && a.eps == b.eps
        && a.analyses == b.analyses
        && a.notes == b.notes
        && a.doc == b.doc
}

/// Sorted map of the scenario's oracle keys, useful for diagnostics.
pub fn scenario_oracle_keys(scenario: &Scenario) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for (player, mindset) in [
        (Player::A, &scenario.mindset_a),
        (Player::D, &scenario.mindset_d),
    ] {
        for prompt in &mindset.prompts {
            let query = OracleQuery {
                player,
                info: &mindset.info,
                prompt,
                worldview: &mindset.worldview,
                actions: scenario.game.actions(player),
            };
            let key = query.key();
            out.insert(
                format!("{player}:{}", prompt.id),
                format!("{}|{}", key.info_hash, key.action_space_fingerprint),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_scenario_parses_and_validates() {
        let dir = std::env::temp_dir();
        let scenario = scenario_from_str(RPS_SCENARIO_JSON, &dir).unwrap();
        assert_eq!(scenario.game.actions(Player::A).len(), 3);
        assert!(scenario.game.is_zero_sum());
        assert_eq!(scenario.mindset_a.prompts.len(), 2);
        assert_eq!(scenario.mindset_d.prompts.len(), 2);
        assert_eq!(scenario.eps, 1e-9);
        assert!(!scenario.notes.is_empty());
    }

    #[test]
    fn builtin_oracle_covers_builtin_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_builtin_rps(dir.path()).unwrap();
        let scenario = load_scenario(&path).unwrap();
        let oracle = scenario.build_oracle(None).unwrap();
        let set = crate::oracle::induced_policy_set(
            oracle.as_ref(),
            Player::A,
            &scenario.mindset_a,
            scenario.game.actions(Player::A),
        )
        .unwrap();
        assert!(
            crate::game::l1_distance(set.entries[0].1.weights(), &[0.2, 0.6, 0.2]) < 1e-12
        );
    }

    #[test]
    fn ragged_payoff_row_is_schema_or_validation_error() {
        let text = RPS_SCENARIO_JSON.replace("[0, -1, 1],", "[0, -1],");
        let err = scenario_from_str(&text, Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn zero_sum_violation_rejected() {
        let dir = std::env::temp_dir();
        let doc: ScenarioDoc = serde_json::from_str(RPS_SCENARIO_JSON).unwrap();
        let mut doc = doc;
        doc.payoff_d = Some(doc.payoff_a.clone()); // not the negation
        let text = serde_json::to_string(&doc).unwrap();
        let err = scenario_from_str(&text, &dir).unwrap_err();
        assert!(matches!(err, Error::ValidationError(_)));
    }

    #[test]
    fn prompt_id_collision_rejected() {
        let text = RPS_SCENARIO_JSON.replace("\"id\": \"x2\"", "\"id\": \"x1\"");
        let err = scenario_from_str(&text, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::ValidationError(_)));
    }

    #[test]
    fn unknown_field_is_schema_error_with_location() {
        let text = RPS_SCENARIO_JSON.replace("\"name\"", "\"nam\"");
        match scenario_from_str(&text, Path::new(".")) {
            Err(Error::SchemaError { .. }) => {}
            other => panic!("expected SchemaError, got {other:?}"),
        }
    }

    #[test]
    fn gap_request_with_unknown_prompt_rejected() {
        let text = RPS_SCENARIO_JSON.replace("\"opponent_prompt\": \"y2\"", "\"opponent_prompt\": \"y9\"");
        let err = scenario_from_str(&text, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::ValidationError(_)));
    }

    #[test]
    fn missing_table_row_fails_coverage() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_builtin_rps(dir.path()).unwrap();
        let oracle_path = dir.path().join("rps_case_study.oracle.json");
        let table = std::fs::read_to_string(&oracle_path).unwrap();
        let truncated = table.replace("\"prompt_id\": \"y2\"", "\"prompt_id\": \"y9\"");
        std::fs::write(&oracle_path, truncated).unwrap();
        let scenario = load_scenario(&path).unwrap();
        let Err(err) = scenario.build_oracle(None).map(|_| ()) else {
            panic!("coverage check should fail");
        };
        assert!(matches!(err, Error::MissingEntry { .. }));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn round_trip_preserves_scenario() {
        let dir = std::env::temp_dir();
        let scenario = scenario_from_str(RPS_SCENARIO_JSON, &dir).unwrap();
        let reloaded = scenario_from_str(&scenario.to_json(), &dir).unwrap();
        assert!(scenario_eq(&scenario, &reloaded));
    }
}
