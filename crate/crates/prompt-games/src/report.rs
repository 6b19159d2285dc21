//! Pipeline orchestration and report emission.
//!
//! JSON output is canonical: keys sorted, every float printed with twelve
//! decimals, so two runs over the same inputs (or a warm cache) are
//! byte-identical. The text format rounds to four decimals for reading;
//! JSON is the contract format.

use serde::Serialize;
use serde_json::Value;

use crate::analysis::{
    expressiveness_order, is_supported, utility_gap, ExpressivenessVerdict, GapReport,
};
use crate::error::{Error, Result};
use crate::game::{make_mixed, solve_behavioral_nash, EquilibriumProfile, Player};
use crate::oracle::{PolicyOracle, PolicySet};
use crate::reasoning::{
    lift, mixed_reasoning_equilibria, pure_reasoning_equilibria, LiftedGame, ReasoningEquilibrium,
};
use crate::scenario::Scenario;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Include the full list of mixed reasoning equilibria.
    pub all_mixed: bool,
    /// Override the scenario's equilibrium tolerance.
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftedSection {
    pub prompts_a: Vec<String>,
    pub prompts_d: Vec<String>,
    pub u_a: Vec<Vec<f64>>,
    pub u_d: Vec<Vec<f64>>,
    pub policies_a: Vec<(String, Vec<f64>)>,
    pub policies_d: Vec<(String, Vec<f64>)>,
}

impl LiftedSection {
    pub fn from(lifted: &LiftedGame) -> Self {
        let flatten = |set: &PolicySet| {
            set.entries
                .iter()
                .map(|(id, s)| (id.clone(), s.weights().to_vec()))
                .collect()
        };
        LiftedSection {
            prompts_a: lifted.prompts_a.clone(),
            prompts_d: lifted.prompts_d.clone(),
            u_a: lifted.u_a.clone(),
            u_d: lifted.u_d.clone(),
            policies_a: flatten(&lifted.policies_a),
            policies_d: flatten(&lifted.policies_d),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SupportedSection {
    pub player: Player,
    pub target: Vec<f64>,
    pub supported: bool,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpressivenessSection {
    pub player: Player,
    pub baseline_prompts: Vec<String>,
    pub verdict: ExpressivenessVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub tool_version: String,
    pub eps: f64,
    pub oracle_digest: String,
    pub lifted: LiftedSection,
    pub pure_reasoning_equilibria: Vec<(String, String)>,
    pub mixed_reasoning_equilibrium: ReasoningEquilibrium,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_mixed_reasoning_equilibria: Option<Vec<ReasoningEquilibrium>>,
    pub behavioral_nash: Vec<EquilibriumProfile>,
    pub gaps: Vec<GapReport>,
    pub supported: Vec<SupportedSection>,
    pub expressiveness: Vec<ExpressivenessSection>,
    pub notes: Vec<String>,
}

/// Execute lift, equilibria, base-game Nash, and the requested analyses.
pub fn run(scenario: &Scenario, oracle: &dyn PolicyOracle, options: &RunOptions) -> Result<Report> {
    let eps = options.eps.unwrap_or(scenario.eps);
    let lifted = lift(&scenario.game, oracle, &scenario.mindset_a, &scenario.mindset_d)
        .map_err(|e| e.annotate("stage lift"))?;
    let pure = pure_reasoning_equilibria(&lifted, eps);
    let mut mixed = mixed_reasoning_equilibria(&lifted, eps)
        .map_err(|e| e.annotate("stage reasoning-equilibrium"))?;
    let canonical = mixed[0].clone();
    let all_mixed = options.all_mixed.then(|| std::mem::take(&mut mixed));

    let behavioral = solve_behavioral_nash(&scenario.game, eps)
        .map_err(|e| e.annotate("stage behavioral-nash"))?;

    let mut gaps = Vec::new();
    for request in &scenario.analyses.gaps {
        let opponent = request.player.other();
        let opponent_policies = match opponent {
            Player::A => &lifted.policies_a,
            Player::D => &lifted.policies_d,
        };
        let opponent_mu = opponent_policies.get(&request.opponent_prompt)?;
        let report = utility_gap(
            &scenario.game,
            oracle,
            scenario.mindset(request.player),
            request.player,
            opponent_mu,
        )
        .map_err(|e| e.annotate("stage gap"))?;
        gaps.push(report);
    }

    let mut supported = Vec::new();
    for request in &scenario.analyses.supported {
        let labels = scenario.game.actions(request.player).labels();
        let target = make_mixed(&request.target, labels).map_err(|e| e.annotate("stage supported"))?;
        let set = match request.player {
            Player::A => &lifted.policies_a,
            Player::D => &lifted.policies_d,
        };
        let (ok, witness) = is_supported(&target, set, eps)?;
        supported.push(SupportedSection {
            player: request.player,
            target: request.target.clone(),
            supported: ok,
            witness,
        });
    }

    let mut expressiveness = Vec::new();
    for request in &scenario.analyses.expressiveness {
        let full = match request.player {
            Player::A => &lifted.policies_a,
            Player::D => &lifted.policies_d,
        };
        let baseline = PolicySet {
            entries: full
                .entries
                .iter()
                .filter(|(id, _)| request.baseline_prompts.contains(id))
                .cloned()
                .collect(),
        };
        let verdict = expressiveness_order(full, &baseline, eps)
            .map_err(|e| e.annotate("stage expressiveness"))?;
        expressiveness.push(ExpressivenessSection {
            player: request.player,
            baseline_prompts: request.baseline_prompts.clone(),
            verdict,
        });
    }

    Ok(Report {
        scenario: scenario.name.clone(),
        tool_version: TOOL_VERSION.to_string(),
        eps,
        oracle_digest: oracle.digest(),
        lifted: LiftedSection::from(&lifted),
        pure_reasoning_equilibria: pure,
        mixed_reasoning_equilibrium: canonical,
        all_mixed_reasoning_equilibria: all_mixed,
        behavioral_nash: behavioral,
        gaps,
        supported,
        expressiveness,
        notes: scenario.notes.clone(),
    })
}

// ---------------------------------------------------------------------------
// Canonical JSON
// ---------------------------------------------------------------------------

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    // Twelve fixed decimals; values that round to zero
                    // lose their sign so byte stability survives -1e-17.
                    let mut s = format!("{f:.12}");
                    if s.starts_with('-') && s[1..].chars().all(|c| matches!(c, '0' | '.')) {
                        s.remove(0);
                    }
                    out.push_str(&s);
                } else {
                    out.push_str(&n.to_string());
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's default map is a BTreeMap, so iteration is
            // already key-sorted.
            out.push('{');
            for (i, (key, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push(':');
                write_canonical(item, out);
            }
            out.push('}');
        }
    }
}

/// Byte-stable JSON for any serializable value: sorted keys, floats at
/// twelve decimals, trailing newline.
pub fn emit_json<T: Serialize>(value: &T) -> Result<String> {
    let value = serde_json::to_value(value)
        .map_err(|e| Error::ValidationError(format!("report serialization: {e}")))?;
    let mut out = String::new();
    write_canonical(&value, &mut out);
    out.push('\n');
    Ok(out)
}

// ---------------------------------------------------------------------------
// Text tables
// ---------------------------------------------------------------------------

fn fmt4(v: f64) -> String {
    let mut s = format!("{v:.4}");
    if s.starts_with('-') && s[1..].chars().all(|c| matches!(c, '0' | '.')) {
        s.remove(0);
    }
    s
}

fn matrix_table(out: &mut String, title: &str, rows: &[String], cols: &[String], m: &[Vec<f64>]) {
    let width = rows
        .iter()
        .chain(cols)
        .map(|s| s.len())
        .max()
        .unwrap_or(4)
        .max(7);
    out.push_str(title);
    out.push('\n');
    out.push_str(&format!("{:width$}", ""));
    for c in cols {
        out.push_str(&format!(" {c:>width$}"));
    }
    out.push('\n');
    for (label, row) in rows.iter().zip(m) {
        out.push_str(&format!("{label:width$}"));
        for v in row {
            out.push_str(&format!(" {:>width$}", fmt4(*v)));
        }
        out.push('\n');
    }
}

fn weights_line(weights: &[f64]) -> String {
    let cells: Vec<String> = weights.iter().map(|w| fmt4(*w)).collect();
    format!("({})", cells.join(", "))
}

/// Aligned human-readable rendering of a report.
pub fn emit_text(report: &Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "scenario: {}  (tool {}, eps {:e})\n",
        report.scenario, report.tool_version, report.eps
    ));
    out.push_str(&format!("oracle digest: {}\n\n", report.oracle_digest));

    matrix_table(
        &mut out,
        "lifted U_A (rows: A prompts, cols: D prompts)",
        &report.lifted.prompts_a,
        &report.lifted.prompts_d,
        &report.lifted.u_a,
    );
    out.push('\n');
    matrix_table(
        &mut out,
        "lifted U_D",
        &report.lifted.prompts_a,
        &report.lifted.prompts_d,
        &report.lifted.u_d,
    );

    out.push_str("\ninduced policies\n");
    for (id, weights) in report
        .lifted
        .policies_a
        .iter()
        .chain(&report.lifted.policies_d)
    {
        out.push_str(&format!("  {id}: {}\n", weights_line(weights)));
    }

    out.push_str("\npure reasoning equilibria\n");
    if report.pure_reasoning_equilibria.is_empty() {
        out.push_str("  (none)\n");
    }
    for (x, y) in &report.pure_reasoning_equilibria {
        out.push_str(&format!("  ({x}, {y})\n"));
    }

    let eq = &report.mixed_reasoning_equilibrium;
    out.push_str(&format!(
        "\nmixed reasoning equilibrium ({:?})\n",
        eq.kind
    ));
    out.push_str(&format!("  sigma_A = {}\n", weights_line(eq.sigma_a.weights())));
    out.push_str(&format!("  sigma_D = {}\n", weights_line(eq.sigma_d.weights())));
    out.push_str(&format!(
        "  induced mu_A = {}\n",
        weights_line(eq.induced_mu_a.weights())
    ));
    out.push_str(&format!(
        "  induced mu_D = {}\n",
        weights_line(eq.induced_mu_d.weights())
    ));
    out.push_str(&format!(
        "  values = ({}, {})\n",
        fmt4(eq.values.0),
        fmt4(eq.values.1)
    ));

    out.push_str("\nbehavioral Nash equilibria of the base game\n");
    for p in &report.behavioral_nash {
        out.push_str(&format!(
            "  A {}  D {}  value ({}, {})\n",
            weights_line(p.strategy_a.weights()),
            weights_line(p.strategy_d.weights()),
            fmt4(p.value_a),
            fmt4(p.value_d)
        ));
    }

    for gap in &report.gaps {
        out.push_str(&format!(
            "\ngap({}) = {}  [u* = {} at {}, u~* = {} via {}]\n",
            gap.player,
            fmt4(gap.gap),
            fmt4(gap.u_star),
            gap.best_action,
            fmt4(gap.u_tilde_star),
            gap.best_prompt
        ));
    }

    for s in &report.supported {
        out.push_str(&format!(
            "supported({}, target {}) = {}{}\n",
            s.player,
            weights_line(&s.target),
            s.supported,
            s.witness
                .as_ref()
                .map(|w| format!(" via {w}"))
                .unwrap_or_default()
        ));
    }

    for e in &report.expressiveness {
        out.push_str(&format!(
            "expressiveness({}, full vs {:?}) = {:?}\n",
            e.player, e.baseline_prompts, e.verdict.relation
        ));
    }

    if !report.notes.is_empty() {
        out.push_str("\nnotes\n");
        for note in &report.notes {
            out.push_str(&format!("  - {note}\n"));
        }
    }
    out
}
