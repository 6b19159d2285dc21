//! Policy oracles: deterministic mappings from (player, information,
//! prompt, worldview) to mixed strategies over a player's actions.
//!
//! Two backends are provided. The table backend answers from a declarative
//! JSON document and does no I/O after load. The HTTP backend consults an
//! append-only JSON-lines cache first and only queries the endpoint on a
//! miss, so a warm run issues zero requests and replays the cold run
//! bit-for-bit.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::game::{label_set_id, make_mixed, ActionSpace, MixedStrategy, Player};

/// Environment variable naming the HTTP oracle endpoint.
pub const ENV_LLM_URL: &str = "PROMPT_GAMES_LLM_URL";
/// Environment variable naming the optional bearer token.
pub const ENV_LLM_TOKEN: &str = "PROMPT_GAMES_LLM_TOKEN";

const HTTP_ATTEMPTS: u32 = 3;
const HTTP_BACKOFF_START: Duration = Duration::from_millis(500);

/// A player's information instance, e.g. empirical opponent frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoVector {
    pub values: Vec<f64>,
    #[serde(default)]
    pub schema_tag: String,
}

impl InfoVector {
    pub fn new(values: Vec<f64>, schema_tag: impl Into<String>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::ValidationError(format!(
                "info vector contains non-finite value {v}"
            )));
        }
        Ok(InfoVector {
            values,
            schema_tag: schema_tag.into(),
        })
    }

    /// Hash over the shortest-roundtrip decimal rendering of each value,
    /// so keys survive serialization round-trips.
    pub fn canonical_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.values {
            hasher.update(format!("{v:?}").as_bytes());
            hasher.update([0x1f]);
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

/// One reasoning prompt: a short stable id and the natural-language body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub id: String,
    pub text: String,
}

/// A player's mindset: information, ordered prompt space, and an opaque
/// worldview identifier (model name plus decoding settings, typically).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mindset {
    pub info: InfoVector,
    pub prompts: Vec<PromptSpec>,
    pub worldview: String,
}

impl Mindset {
    pub fn new(info: InfoVector, prompts: Vec<PromptSpec>, worldview: impl Into<String>) -> Result<Self> {
        if prompts.is_empty() {
            return Err(Error::ValidationError("mindset has no prompts".into()));
        }
        for (i, p) in prompts.iter().enumerate() {
            if p.text.is_empty() {
                return Err(Error::ValidationError(format!(
                    "prompt {:?} has empty text",
                    p.id
                )));
            }
            if prompts[..i].iter().any(|q| q.id == p.id) {
                return Err(Error::ValidationError(format!(
                    "duplicate prompt id {:?}",
                    p.id
                )));
            }
        }
        Ok(Mindset {
            info,
            prompts,
            worldview: worldview.into(),
        })
    }

    pub fn prompt(&self, id: &str) -> Result<&PromptSpec> {
        self.prompts
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::UnknownPrompt(id.to_string()))
    }

    pub fn prompt_ids(&self) -> Vec<String> {
        self.prompts.iter().map(|p| p.id.clone()).collect()
    }
}

/// Cache identity of one oracle evaluation. Two keys are equal iff every
/// field is equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OracleKey {
    pub player: Player,
    pub info_hash: String,
    pub prompt_id: String,
    pub worldview: String,
    pub action_space_fingerprint: String,
}

/// All inputs of one oracle evaluation, with enough context for the HTTP
/// backend to build a request.
#[derive(Debug, Clone, Copy)]
pub struct OracleQuery<'a> {
    pub player: Player,
    pub info: &'a InfoVector,
    pub prompt: &'a PromptSpec,
    pub worldview: &'a str,
    pub actions: &'a ActionSpace,
}

impl OracleQuery<'_> {
    pub fn key(&self) -> OracleKey {
        OracleKey {
            player: self.player,
            info_hash: self.info.canonical_hash(),
            prompt_id: self.prompt.id.clone(),
            worldview: self.worldview.to_string(),
            action_space_fingerprint: self.actions.fingerprint(),
        }
    }
}

/// The full list of induced policies for one mindset, in prompt order.
/// Duplicates are preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub entries: Vec<(String, MixedStrategy)>,
}

impl PolicySet {
    pub fn strategies(&self) -> impl Iterator<Item = &MixedStrategy> {
        self.entries.iter().map(|(_, s)| s)
    }

    pub fn get(&self, prompt_id: &str) -> Result<&MixedStrategy> {
        self.entries
            .iter()
            .find(|(id, _)| id == prompt_id)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::UnknownPrompt(prompt_id.to_string()))
    }
}

/// A fixed mapping from oracle keys to mixed strategies. Repeated calls
/// with an equal key must return bit-identical weight vectors.
pub trait PolicyOracle {
    fn induce_policy(&self, query: &OracleQuery<'_>) -> Result<MixedStrategy>;

    /// Digest over every key/weights pair the oracle currently holds.
    /// Timestamps and transport details are excluded so cold and warm
    /// runs agree.
    fn digest(&self) -> String;
}

fn entries_digest(entries: &BTreeMap<OracleKey, Vec<f64>>) -> String {
    let mut hasher = Sha256::new();
    for (key, weights) in entries {
        hasher.update(
            format!(
                "{}|{}|{}|{}|{}|",
                key.player, key.info_hash, key.prompt_id, key.worldview, key.action_space_fingerprint
            )
            .as_bytes(),
        );
        for w in weights {
            hasher.update(format!("{w:?},").as_bytes());
        }
        hasher.update([0x0a]);
    }
    hex::encode(hasher.finalize())
}

/// Rescale a label-to-score mapping into a simplex element over `actions`.
///
/// Missing labels get weight zero; any positive total is accepted since
/// upstream scores need not be normalized.
pub fn normalize_distribution(raw: &BTreeMap<String, f64>, actions: &ActionSpace) -> Result<MixedStrategy> {
    let mut weights = vec![0.0; actions.len()];
    for (label, &value) in raw {
        let Some(index) = actions.index_of(label) else {
            return Err(Error::UnknownLabel(label.clone()));
        };
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NegativeMass { index, value });
        }
        weights[index] = value;
    }
    normalize_weights(&mut weights)?;
    make_mixed(&weights, actions.labels())
}

/// In-place positive rescaling of a weight slice to sum 1.
fn normalize_weights(weights: &mut [f64]) -> Result<()> {
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::NegativeMass { index, value });
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum == 0.0 {
        return Err(Error::AllZero);
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    Ok(())
}

/// Evaluate the oracle for every prompt of a mindset, in order.
pub fn induced_policy_set(
    oracle: &dyn PolicyOracle,
    player: Player,
    mindset: &Mindset,
    actions: &ActionSpace,
) -> Result<PolicySet> {
    let mut entries = Vec::with_capacity(mindset.prompts.len());
    for prompt in &mindset.prompts {
        let query = OracleQuery {
            player,
            info: &mindset.info,
            prompt,
            worldview: &mindset.worldview,
            actions,
        };
        let strategy = oracle
            .induce_policy(&query)
            .map_err(|e| e.annotate(format!("prompt {:?}", prompt.id)))?;
        entries.push((prompt.id.clone(), strategy));
    }
    Ok(PolicySet { entries })
}

// ---------------------------------------------------------------------------
// Table backend
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct TableRow {
    player: Player,
    info: Vec<f64>,
    prompt_id: String,
    worldview: String,
    actions: Vec<String>,
    weights: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct TableDoc {
    rows: Vec<TableRow>,
}

/// Declarative oracle: answers exactly the rows present, nothing else.
#[derive(Debug, Clone)]
pub struct TableOracle {
    entries: BTreeMap<OracleKey, Vec<f64>>,
}

impl TableOracle {
    pub fn from_json_str(document: &str) -> Result<Self> {
        let mut deserializer = serde_json::Deserializer::from_str(document);
        let doc: TableDoc = serde_path_to_error::deserialize(&mut deserializer).map_err(|e| {
            Error::SchemaError {
                location: e.path().to_string(),
                message: e.to_string(),
            }
        })?;
        let mut entries = BTreeMap::new();
        for (i, row) in doc.rows.into_iter().enumerate() {
            let info = InfoVector::new(row.info, "")
                .map_err(|e| e.annotate(format!("rows[{i}].info")))?;
            if row.weights.len() != row.actions.len() {
                return Err(Error::SchemaError {
                    location: format!("rows[{i}].weights"),
                    message: format!(
                        "{} weights for {} actions",
                        row.weights.len(),
                        row.actions.len()
                    ),
                });
            }
            let mut weights = row.weights;
            normalize_weights(&mut weights)
                .map_err(|e| e.annotate(format!("rows[{i}].weights")))?;
            let key = OracleKey {
                player: row.player,
                info_hash: info.canonical_hash(),
                prompt_id: row.prompt_id,
                worldview: row.worldview,
                action_space_fingerprint: label_set_id(&row.actions),
            };
            if entries.contains_key(&key) {
                return Err(Error::DuplicateKey {
                    player: key.player.to_string(),
                    prompt_id: key.prompt_id,
                    worldview: key.worldview,
                });
            }
            entries.insert(key, weights);
        }
        Ok(TableOracle { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &OracleKey) -> bool {
        self.entries.contains_key(key)
    }
}

impl PolicyOracle for TableOracle {
    fn induce_policy(&self, query: &OracleQuery<'_>) -> Result<MixedStrategy> {
        let key = query.key();
        let weights = self.entries.get(&key).ok_or_else(|| Error::MissingEntry {
            player: key.player.to_string(),
            prompt_id: key.prompt_id.clone(),
            worldview: key.worldview.clone(),
        })?;
        make_mixed(weights, query.actions.labels())
    }

    fn digest(&self) -> String {
        entries_digest(&self.entries)
    }
}

// ---------------------------------------------------------------------------
// HTTP backend with append-only cache
// ---------------------------------------------------------------------------

/// One line of the JSON-lines cache file.
#[derive(Debug, Serialize, Deserialize)]
pub struct CacheRecord {
    pub player: Player,
    pub info_hash: String,
    pub prompt_id: String,
    pub worldview: String,
    pub action_space_fingerprint: String,
    pub weights: Vec<f64>,
    pub created_at: String,
}

impl CacheRecord {
    fn key(&self) -> OracleKey {
        OracleKey {
            player: self.player,
            info_hash: self.info_hash.clone(),
            prompt_id: self.prompt_id.clone(),
            worldview: self.worldview.clone(),
            action_space_fingerprint: self.action_space_fingerprint.clone(),
        }
    }
}

/// Parse the cache file body. Later lines win on duplicate keys, matching
/// append-only replay semantics.
pub fn parse_cache_lines(text: &str) -> Result<BTreeMap<OracleKey, Vec<f64>>> {
    let mut entries = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CacheRecord = serde_json::from_str(line).map_err(|e| Error::SchemaError {
            location: format!("cache line {}", lineno + 1),
            message: e.to_string(),
        })?;
        entries.insert(record.key(), record.weights);
    }
    Ok(entries)
}

#[derive(Debug, Serialize)]
struct LlmRequest<'a> {
    prompt: &'a str,
    info: &'a [f64],
    actions: &'a [String],
    deterministic: bool,
}

#[derive(Debug, Deserialize)]
struct LlmResponse {
    weights: BTreeMap<String, f64>,
}

/// Parse an endpoint response body into the label-to-score mapping.
pub fn parse_llm_response(body: &str) -> Result<BTreeMap<String, f64>> {
    let response: LlmResponse = serde_json::from_str(body)
        .map_err(|e| Error::UnparseableResponse(e.to_string()))?;
    Ok(response.weights)
}

struct CacheState {
    entries: BTreeMap<OracleKey, Vec<f64>>,
    file: Option<std::fs::File>,
}

/// Live oracle backed by an HTTP endpoint and a JSON-lines cache.
///
/// Reads go through the cache; a miss issues exactly one logical request
/// (up to 3 transport attempts with exponential backoff), normalizes the
/// scores, appends a cache record, and returns. Cache writes are
/// serialized behind a mutex.
pub struct HttpOracle {
    url: String,
    token: Option<String>,
    cache_path: PathBuf,
    state: Mutex<CacheState>,
    agent: ureq::Agent,
}

impl HttpOracle {
    /// Build from the environment (`PROMPT_GAMES_LLM_URL`,
    /// `PROMPT_GAMES_LLM_TOKEN`) and a cache file path. The cache file is
    /// created on first write if absent.
    pub fn from_env(cache_path: &Path) -> Result<Self> {
        let url = std::env::var(ENV_LLM_URL).map_err(|_| {
            Error::ValidationError(format!("{ENV_LLM_URL} is not set but the oracle type is http"))
        })?;
        let token = std::env::var(ENV_LLM_TOKEN).ok();
        Self::new(url, token, cache_path)
    }

    pub fn new(url: String, token: Option<String>, cache_path: &Path) -> Result<Self> {
        let entries = match std::fs::read_to_string(cache_path) {
            Ok(text) => parse_cache_lines(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(source) => {
                return Err(Error::Io {
                    path: cache_path.display().to_string(),
                    source,
                })
            }
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(HttpOracle {
            url,
            token,
            cache_path: cache_path.to_path_buf(),
            state: Mutex::new(CacheState {
                entries,
                file: None,
            }),
            agent,
        })
    }

    fn fetch(&self, query: &OracleQuery<'_>) -> Result<String> {
        let body = serde_json::to_string(&LlmRequest {
            prompt: &query.prompt.text,
            info: &query.info.values,
            actions: query.actions.labels(),
            deterministic: true,
        })
        .expect("request serialization is infallible");

        let mut last_error = String::new();
        let mut backoff = HTTP_BACKOFF_START;
        for attempt in 0..HTTP_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
            let mut request = self
                .agent
                .post(&self.url)
                .header("content-type", "application/json");
            if let Some(token) = &self.token {
                request = request.header("authorization", &format!("Bearer {token}"));
            }
            match request.send(&body) {
                Ok(mut response) => {
                    let status = response.status();
                    let text = response
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| Error::UpstreamError(e.to_string()))?;
                    if status.is_success() {
                        return Ok(text);
                    }
                    last_error = format!("status {status}: {text}");
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(Error::UpstreamError(last_error))
    }

    fn append_record(&self, state: &mut CacheState, key: &OracleKey, weights: &[f64]) -> Result<()> {
        if state.file.is_none() {
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.cache_path)
                .map_err(|source| Error::Io {
                    path: self.cache_path.display().to_string(),
                    source,
                })?;
            state.file = Some(file);
        }
        let record = CacheRecord {
            player: key.player,
            info_hash: key.info_hash.clone(),
            prompt_id: key.prompt_id.clone(),
            worldview: key.worldview.clone(),
            action_space_fingerprint: key.action_space_fingerprint.clone(),
            weights: weights.to_vec(),
            created_at: chrono::Utc::now().to_rfc3339(),
        };
        let line = serde_json::to_string(&record).expect("record serialization is infallible");
        let file = state.file.as_mut().expect("file opened above");
        writeln!(file, "{line}").map_err(|source| Error::Io {
            path: self.cache_path.display().to_string(),
            source,
        })?;
        Ok(())
    }
}

impl PolicyOracle for HttpOracle {
    fn induce_policy(&self, query: &OracleQuery<'_>) -> Result<MixedStrategy> {
        let key = query.key();
        {
            let state = self.state.lock().expect("cache lock");
            if let Some(weights) = state.entries.get(&key) {
                return make_mixed(weights, query.actions.labels());
            }
        }
        let body = self.fetch(query)?;
        let raw = parse_llm_response(&body)?;
        let strategy = normalize_distribution(&raw, query.actions)?;
        let mut state = self.state.lock().expect("cache lock");
        // A concurrent call may have filled the entry meanwhile; the first
        // stored value wins so replays stay stable.
        if let Some(weights) = state.entries.get(&key) {
            return make_mixed(weights, query.actions.labels());
        }
        self.append_record(&mut state, &key, strategy.weights())?;
        state.entries.insert(key, strategy.weights().to_vec());
        Ok(strategy)
    }

    fn digest(&self) -> String {
        entries_digest(&self.state.lock().expect("cache lock").entries)
    }
}
