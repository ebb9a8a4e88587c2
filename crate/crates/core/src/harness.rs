//! Scenario loading, cluster setup, requirement checks, and reports.
//!
//! A scenario JSON file fully determines a run: group sizing, consensus
//! mode, ciphersuite, timing, the delay model, the fault plan, and the
//! master seed. The run emits a newline-delimited trace (one JSON object per
//! line, first line holding the run metadata) plus a metrics report; the
//! requirement checks consume nothing but the trace, so a written trace can
//! be re-checked offline.

use crate::chain::{
    self, Block, BlockChallenge, Chain, ChainParams, Digest,
};
use crate::frost::{self, ExtendedCommitment, ExtendedNonce, KeyMaterial, ParticipantId};
use crate::group::{GroupElement, GroupParams, Scalar};
use crate::pbft::{
    participant_of, quorum_sizes, Behavior, ConsensusMode, KeyBundle, NodeId, Replica,
    ReplicaConfig, TraceEvent,
};
use crate::simnet::{DelayModel, FaultPlan, SimNet, TraceRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("trace parse error: {0}")]
    Trace(String),
    #[error("event budget exhausted ({0} events)")]
    EventBudget(u64),
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

fn default_ciphersuite() -> String {
    "tiny-q1009".to_string()
}
fn default_tau() -> u64 {
    60_000
}
fn default_seed() -> u64 {
    1
}
fn default_skew() -> u64 {
    1_000
}
fn default_tau_growth() -> f64 {
    0.5
}
fn default_growth_window() -> u64 {
    10
}
fn default_checks() -> Vec<String> {
    vec!["r1".into(), "r2".into(), "r3".into(), "r4".into()]
}
fn default_max_events() -> u64 {
    5_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: ConsensusMode,
    #[serde(default = "default_ciphersuite")]
    pub ciphersuite: String,
    pub f_b: u32,
    pub f_c: u32,
    pub rounds: u64,
    #[serde(default = "default_tau")]
    pub tau_ms: u64,
    #[serde(default)]
    pub t0_ms: u64,
    /// Wake this long before each round's nominal time (default `tau/4`).
    #[serde(default)]
    pub lead_delta_ms: Option<u64>,
    /// Calmness bound (default `tau/2`).
    #[serde(default)]
    pub future_delta_ms: Option<u64>,
    /// Base view-change timeout (default `2*tau`), doubling per attempt.
    #[serde(default)]
    pub vc_timeout_ms: Option<u64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Per-node clock skew magnitude (default 1s).
    #[serde(default)]
    pub skew_ms: Option<u64>,
    #[serde(default)]
    pub delay: DelayModel,
    #[serde(default)]
    pub faults: FaultPlan,
    /// Chain-growth coefficient: every sliding window of
    /// `growth_window_rounds` rounds must contain at least
    /// `ceil(tau_growth * window)` adoptions.
    #[serde(default = "default_tau_growth")]
    pub tau_growth: f64,
    #[serde(default = "default_growth_window")]
    pub growth_window_rounds: u64,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
}

impl ScenarioConfig {
    pub fn n(&self) -> u32 {
        quorum_sizes(self.f_b, self.f_c).0
    }
    pub fn q(&self) -> u32 {
        quorum_sizes(self.f_b, self.f_c).1
    }
    pub fn lead_delta(&self) -> u64 {
        self.lead_delta_ms.unwrap_or(self.tau_ms / 4)
    }
    pub fn future_delta(&self) -> u64 {
        self.future_delta_ms.unwrap_or(self.tau_ms / 2)
    }
    pub fn vc_timeout(&self) -> u64 {
        self.vc_timeout_ms.unwrap_or(2 * self.tau_ms)
    }
    pub fn skew(&self) -> u64 {
        self.skew_ms.unwrap_or(default_skew())
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Scenario(e.to_string()))
    }

    /// Nodes that are neither byzantine nor scheduled to crash; the
    /// requirements quantify over these.
    pub fn correct_nodes(&self) -> Vec<NodeId> {
        (0..self.n() as NodeId)
            .filter(|i| {
                !self.faults.byzantine.contains_key(i) && !self.faults.crashes.contains_key(i)
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Genesis
// ---------------------------------------------------------------------------

/// Everything a verifier needs to validate the chain, plus (from `keygen`
/// only) the participants' secret shares.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenesisDoc {
    pub ciphersuite: String,
    pub challenge: BlockChallenge,
    pub chain: ChainParams,
    pub n: u32,
    pub threshold: u32,
    /// Hex authenticator public keys, node order.
    pub auth_public: Vec<String>,
    /// Hex per-node block keys (concatenated-multisig mode only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub block_public: Vec<String>,
    /// Hex verification shares, participant order 1..=n (aggregate modes).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verification_shares: Vec<String>,
    /// Hex secret shares, participant order (emitted by `keygen` only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret_shares: Option<Vec<String>>,
}

/// Standalone key ceremony: threshold keys for `n` participants, an
/// aggregate-key challenge, and the chain parameters, as one JSON document.
pub fn keygen(n: u32, k: u32, ciphersuite: &str, seed: u64) -> Result<GenesisDoc, HarnessError> {
    let params = GroupParams::from_id(ciphersuite)
        .ok_or_else(|| HarnessError::Scenario(format!("unknown ciphersuite {ciphersuite}")))?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let keys = frost::dkg_run(n, k, &params, &mut rng)
        .map_err(|e| HarnessError::Scenario(e.to_string()))?;
    let auth_public: Vec<String> = (0..n)
        .map(|_| {
            let s = params.random_nonzero_scalar(&mut rng);
            hex::encode(params.encode_element(&params.g_pow(&s)))
        })
        .collect();
    let group_pk = keys.values().next().unwrap().group_public_key.clone();
    let verification_shares = (1..=n)
        .map(|i| {
            let vs = &keys[&ParticipantId(i)].verification_shares[&ParticipantId(i)];
            hex::encode(params.encode_element(vs))
        })
        .collect();
    let secret_shares = (1..=n)
        .map(|i| hex::encode(params.encode_scalar(&keys[&ParticipantId(i)].secret_share)))
        .collect();
    Ok(GenesisDoc {
        ciphersuite: ciphersuite.to_string(),
        challenge: BlockChallenge::AggregateKey {
            key: params.encode_element(&group_pk),
        },
        chain: ChainParams {
            t0_ms: 0,
            tau_ms: default_tau(),
            grind_target: chain::default_grind_target(),
            payload_budget: 1_000_000,
            subsidy: 50,
        },
        n,
        threshold: k,
        auth_public,
        block_public: Vec::new(),
        verification_shares,
        secret_shares: Some(secret_shares),
    })
}

// ---------------------------------------------------------------------------
// Cluster setup
// ---------------------------------------------------------------------------

pub struct Cluster {
    pub replicas: Vec<Replica>,
    pub genesis: GenesisDoc,
    pub params: GroupParams,
    pub challenge: BlockChallenge,
    pub cp: ChainParams,
}

/// Builds the full replica set from a scenario: authenticator keys, block or
/// threshold keys, extended nonces, and per-replica seeded generators — all
/// derived from the master seed.
pub fn setup_cluster(cfg: &ScenarioConfig) -> Result<Cluster, HarnessError> {
    let params = GroupParams::from_id(&cfg.ciphersuite).ok_or_else(|| {
        HarnessError::Scenario(format!("unknown ciphersuite {}", cfg.ciphersuite))
    })?;
    let (n, q) = quorum_sizes(cfg.f_b, cfg.f_c);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let auth_secrets: Vec<Scalar> = (0..n)
        .map(|_| params.random_nonzero_scalar(&mut rng))
        .collect();
    let auth_public: BTreeMap<NodeId, GroupElement> = auth_secrets
        .iter()
        .enumerate()
        .map(|(i, s)| (i as NodeId, params.g_pow(s)))
        .collect();
    let mut block_secrets: Vec<Option<Scalar>> = vec![None; n as usize];
    let mut block_public: BTreeMap<NodeId, GroupElement> = BTreeMap::new();
    let mut threshold: BTreeMap<ParticipantId, KeyMaterial> = BTreeMap::new();
    let mut ext_nonces: BTreeMap<ParticipantId, ExtendedNonce> = BTreeMap::new();
    let mut ext_commitments: BTreeMap<ParticipantId, ExtendedCommitment> = BTreeMap::new();
    let mut verification_shares_hex = Vec::new();
    let challenge = match cfg.mode {
        ConsensusMode::Plain => {
            let mut keys_hex = Vec::new();
            for i in 0..n {
                let sk = params.random_nonzero_scalar(&mut rng);
                let pk = params.g_pow(&sk);
                keys_hex.push(hex::encode(params.encode_element(&pk)));
                block_public.insert(i as NodeId, pk);
                block_secrets[i as usize] = Some(sk);
            }
            BlockChallenge::ConcatenatedMultisig {
                signer_keys: keys_hex,
                required_count: q as usize,
            }
        }
        ConsensusMode::Fbft3 | ConsensusMode::Fbft5 => {
            let k = if cfg.mode == ConsensusMode::Fbft3 {
                q
            } else {
                cfg.f_b + 1
            };
            threshold = frost::dkg_run(n, k, &params, &mut rng)
                .map_err(|e| HarnessError::Scenario(e.to_string()))?;
            if cfg.mode == ConsensusMode::Fbft3 {
                for p in threshold.keys() {
                    let ext = ExtendedNonce::generate(&params, &mut rng);
                    ext_commitments.insert(*p, ext.to_public(&params));
                    ext_nonces.insert(*p, ext);
                }
            }
            for i in 1..=n {
                let vs = &threshold[&ParticipantId(i)].verification_shares[&ParticipantId(i)];
                verification_shares_hex.push(hex::encode(params.encode_element(vs)));
            }
            let pk = threshold.values().next().unwrap().group_public_key.clone();
            BlockChallenge::AggregateKey {
                key: params.encode_element(&pk),
            }
        }
    };
    let cp = ChainParams {
        t0_ms: cfg.t0_ms,
        tau_ms: cfg.tau_ms,
        grind_target: chain::default_grind_target(),
        payload_budget: 1_000_000,
        subsidy: 50,
    };
    let genesis_block = chain::make_genesis(cfg.t0_ms);
    let replicas: Vec<Replica> = (0..n)
        .map(|i| {
            let node = i as NodeId;
            let rcfg = ReplicaConfig {
                node,
                f_b: cfg.f_b,
                f_c: cfg.f_c,
                mode: cfg.mode,
                tau_ms: cfg.tau_ms,
                lead_delta_ms: cfg.lead_delta(),
                future_delta_ms: cfg.future_delta(),
                vc_timeout_ms: cfg.vc_timeout(),
            };
            let pid = participant_of(node);
            let keys = KeyBundle {
                auth_secret: auth_secrets[i as usize].clone(),
                auth_public: auth_public.clone(),
                block_secret: block_secrets[i as usize].clone(),
                block_public: block_public.clone(),
                threshold: threshold.get(&pid).cloned(),
                ext_nonce: ext_nonces.get(&pid).cloned(),
                ext_commitments: ext_commitments.clone(),
            };
            let behavior = cfg
                .faults
                .byzantine
                .get(&node)
                .copied()
                .unwrap_or(Behavior::Honest);
            Replica::new(
                rcfg,
                behavior,
                params.clone(),
                challenge.clone(),
                cp.clone(),
                genesis_block.clone(),
                keys,
                ChaCha12Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(node as u64 + 1)),
            )
        })
        .collect();
    let genesis = GenesisDoc {
        ciphersuite: cfg.ciphersuite.clone(),
        challenge: challenge.clone(),
        chain: cp.clone(),
        n,
        threshold: match cfg.mode {
            ConsensusMode::Plain | ConsensusMode::Fbft3 => q,
            ConsensusMode::Fbft5 => cfg.f_b + 1,
        },
        auth_public: (0..n)
            .map(|i| hex::encode(params.encode_element(&auth_public[&(i as NodeId)])))
            .collect(),
        block_public: match &challenge {
            BlockChallenge::ConcatenatedMultisig { signer_keys, .. } => signer_keys.clone(),
            _ => Vec::new(),
        },
        verification_shares: verification_shares_hex,
        secret_shares: None,
    };
    Ok(Cluster {
        replicas,
        genesis,
        params,
        challenge,
        cp,
    })
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceMeta {
    pub scenario: ScenarioConfig,
    pub genesis: GenesisDoc,
    pub correct_nodes: Vec<NodeId>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaLine {
    meta: TraceMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub rounds: u64,
    pub events_processed: u64,
    pub blocks_adopted: BTreeMap<NodeId, u64>,
    pub view_changes: u64,
    pub sessions_opened: u64,
    pub blocks_rejected: u64,
    pub checks: BTreeMap<String, bool>,
    pub all_checks_pass: bool,
    pub trace_hash: String,
}

pub struct RunOutput {
    pub meta: TraceMeta,
    pub records: Vec<TraceRecord>,
    pub report: MetricsReport,
    pub chains: Vec<Chain>,
    pub trace_text: String,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    let cluster = setup_cluster(cfg)?;
    let meta = TraceMeta {
        scenario: cfg.clone(),
        genesis: cluster.genesis.clone(),
        correct_nodes: cfg.correct_nodes(),
    };
    let mut net = SimNet::new(
        cluster.replicas,
        cfg.delay.clone(),
        &cfg.faults,
        cfg.skew(),
        cfg.seed,
        cfg.max_events,
    );
    net.schedule_rounds(cfg.t0_ms, cfg.tau_ms, cfg.lead_delta(), cfg.rounds);
    // run to the end of the last round plus a drain period for stragglers
    let t_end = cfg.t0_ms + (cfg.rounds + 1) * cfg.tau_ms + 4 * cfg.vc_timeout();
    if !net.run_until(t_end) {
        return Err(HarnessError::EventBudget(cfg.max_events));
    }
    let records = net.trace.clone();
    let mut trace_text = String::new();
    trace_text.push_str(&serde_json::to_string(&MetaLine { meta: meta.clone() }).unwrap());
    trace_text.push('\n');
    for rec in &records {
        trace_text.push_str(&serde_json::to_string(rec).unwrap());
        trace_text.push('\n');
    }
    let trace_hash = hex::encode(Sha256::digest(trace_text.as_bytes()));
    let mut checks = BTreeMap::new();
    for name in &cfg.checks {
        checks.insert(name.clone(), run_check(name, &meta, &records));
    }
    let all = checks.values().all(|v| *v);
    let mut blocks_adopted: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut view_changes = 0;
    let mut sessions = 0;
    let mut rejected = 0;
    for rec in &records {
        match &rec.event {
            TraceEvent::BlockAdopted { .. } => {
                *blocks_adopted.entry(rec.node).or_default() += 1
            }
            TraceEvent::NewViewInstalled { .. } => view_changes += 1,
            TraceEvent::SessionOpened { .. } => sessions += 1,
            TraceEvent::BlockRejected { .. } => rejected += 1,
            _ => {}
        }
    }
    let report = MetricsReport {
        scenario: cfg.name.clone(),
        seed: cfg.seed,
        rounds: cfg.rounds,
        events_processed: net.events_processed,
        blocks_adopted,
        view_changes,
        sessions_opened: sessions,
        blocks_rejected: rejected,
        checks,
        all_checks_pass: all,
        trace_hash,
    };
    let chains = net.replicas.iter().map(|r| r.chain.clone()).collect();
    Ok(RunOutput {
        meta,
        records,
        report,
        chains,
        trace_text,
    })
}

// ---------------------------------------------------------------------------
// Trace parsing and requirement checks
// ---------------------------------------------------------------------------

pub fn parse_trace(text: &str) -> Result<(TraceMeta, Vec<TraceRecord>), HarnessError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines
        .next()
        .ok_or_else(|| HarnessError::Trace("empty trace".into()))?;
    let meta: MetaLine = serde_json::from_str(first)
        .map_err(|e| HarnessError::Trace(format!("meta line: {e}")))?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let rec: TraceRecord = serde_json::from_str(line)
            .map_err(|e| HarnessError::Trace(format!("line {}: {e}", i + 2)))?;
        records.push(rec);
    }
    Ok((meta.meta, records))
}

/// Dispatches one named requirement check over a parsed trace.
pub fn run_check(name: &str, meta: &TraceMeta, records: &[TraceRecord]) -> bool {
    match name {
        "r1" => check_correctness(meta, records),
        "r2" => check_common_prefix(meta, records),
        "r3" => check_chain_growth(meta, records),
        "r4" => check_calmness(meta, records),
        "r5" => check_confidentiality(meta, records),
        _ => false,
    }
}

fn adopted_by_correct<'a>(
    meta: &TraceMeta,
    records: &'a [TraceRecord],
) -> Vec<(&'a TraceRecord, u64, String)> {
    let correct: BTreeSet<NodeId> = meta.correct_nodes.iter().copied().collect();
    records
        .iter()
        .filter(|r| correct.contains(&r.node))
        .filter_map(|r| match &r.event {
            TraceEvent::BlockAdopted {
                height, block_hash, ..
            } => Some((r, *height, block_hash.clone())),
            _ => None,
        })
        .collect()
}

/// R1 — correctness: every block a correct node adopted revalidates from
/// scratch against the genesis rules: linkage, Merkle root, grind target,
/// nominal timestamp, and the block-solution challenge.
pub fn check_correctness(meta: &TraceMeta, records: &[TraceRecord]) -> bool {
    let Some(params) = GroupParams::from_id(&meta.genesis.ciphersuite) else {
        return false;
    };
    let cp = &meta.genesis.chain;
    let genesis_block = chain::make_genesis(cp.t0_ms);
    let correct: BTreeSet<NodeId> = meta.correct_nodes.iter().copied().collect();
    // per-node: heights strictly ascending by one, linked hashes
    let mut per_node: BTreeMap<NodeId, (u64, Digest)> = BTreeMap::new();
    for rec in records {
        if !correct.contains(&rec.node) {
            continue;
        }
        let TraceEvent::BlockAdopted {
            height, block_hex, ..
        } = &rec.event
        else {
            continue;
        };
        let Ok(bytes) = hex::decode(block_hex) else {
            return false;
        };
        let Ok(block) = Block::from_bytes(&bytes) else {
            return false;
        };
        let (prev_height, prev_hash) = per_node
            .get(&rec.node)
            .cloned()
            .unwrap_or((0, genesis_block.block_hash()));
        if *height != prev_height + 1
            || block.height != *height
            || block.header.prev_hash != prev_hash
        {
            return false;
        }
        if block.header.merkle_root
            != chain::merkle_root_excluding_solution(&block.transactions)
            || block.block_hash() >= cp.grind_target
            || block.header.timestamp_ms != chain::nominal_timestamp(cp, *height)
        {
            return false;
        }
        let Some(solution) = block.solution() else {
            return false;
        };
        if meta
            .genesis
            .challenge
            .verify_solution(&params, &block.block_hash(), solution)
            .is_err()
        {
            return false;
        }
        per_node.insert(rec.node, (*height, block.block_hash()));
    }
    // at least one correct node adopted something, otherwise the check is
    // vacuous and a broken run would slip through
    !per_node.is_empty()
}

/// R2 — common prefix: no two correct nodes ever adopt different blocks at
/// the same height.
pub fn check_common_prefix(meta: &TraceMeta, records: &[TraceRecord]) -> bool {
    let mut by_height: BTreeMap<u64, BTreeSet<String>> = BTreeMap::new();
    for (_, height, hash) in adopted_by_correct(meta, records) {
        by_height.entry(height).or_default().insert(hash);
    }
    by_height.values().all(|s| s.len() == 1)
}

/// R3 — chain growth: for every correct node, every sliding window of
/// `growth_window_rounds` rounds contains at least `ceil(tau_growth * w)`
/// adoptions.
pub fn check_chain_growth(meta: &TraceMeta, records: &[TraceRecord]) -> bool {
    let cfg = &meta.scenario;
    let w = cfg.growth_window_rounds.min(cfg.rounds);
    if w == 0 {
        return true;
    }
    let need = (cfg.tau_growth * w as f64).ceil() as usize;
    let mut times: BTreeMap<NodeId, Vec<u64>> = BTreeMap::new();
    for (rec, _, _) in adopted_by_correct(meta, records) {
        times.entry(rec.node).or_default().push(rec.t);
    }
    if times.is_empty() {
        return false;
    }
    for node_times in times.values() {
        for start in 0..=(cfg.rounds - w) {
            // a block for round h lands near its nominal time; window s
            // covers rounds s+1..=s+w
            let lo = cfg.t0_ms + start * cfg.tau_ms;
            let hi = cfg.t0_ms + (start + w) * cfg.tau_ms + cfg.tau_ms / 2;
            let count = node_times.iter().filter(|&&t| t >= lo && t < hi).count();
            if count < need {
                return false;
            }
        }
    }
    true
}

/// R4 — calmness: no correct node ever adopted a block whose nominal
/// timestamp lay further than `future_delta` past its local clock.
pub fn check_calmness(meta: &TraceMeta, records: &[TraceRecord]) -> bool {
    let future_delta = meta.scenario.future_delta();
    let correct: BTreeSet<NodeId> = meta.correct_nodes.iter().copied().collect();
    for rec in records {
        if !correct.contains(&rec.node) {
            continue;
        }
        if let TraceEvent::BlockAdopted {
            nominal_ts,
            local_clock_ms,
            ..
        } = &rec.event
        {
            if *nominal_ts > *local_clock_ms + future_delta {
                return false;
            }
        }
    }
    true
}

/// R5 — confidentiality of the signer set: every adopted block's solution
/// is exactly one group element plus one scalar, with identical format
/// regardless of which signer subset produced it. Solutions that embed
/// per-signer entries (the concatenated multisig) fail.
pub fn check_confidentiality(meta: &TraceMeta, records: &[TraceRecord]) -> bool {
    let Some(params) = GroupParams::from_id(&meta.genesis.ciphersuite) else {
        return false;
    };
    let expected = params.element_len() + params.scalar_len();
    let correct: BTreeSet<NodeId> = meta.correct_nodes.iter().copied().collect();
    let mut solutions_by_height: BTreeMap<u64, String> = BTreeMap::new();
    for rec in records {
        if !correct.contains(&rec.node) {
            continue;
        }
        if let TraceEvent::BlockAdopted {
            height,
            solution_hex,
            ..
        } = &rec.event
        {
            if solution_hex.len() / 2 != expected {
                return false;
            }
            solutions_by_height.insert(*height, solution_hex.clone());
        }
    }
    !solutions_by_height.is_empty()
}

/// The signer subsets actually used per height, from assembly events.
pub fn signer_subsets(records: &[TraceRecord]) -> BTreeMap<u64, BTreeSet<u32>> {
    let mut out = BTreeMap::new();
    for rec in records {
        if let TraceEvent::SolutionAssembled {
            height, signers, ..
        } = &rec.event
        {
            out.entry(*height)
                .or_insert_with(|| signers.iter().copied().collect());
        }
    }
    out
}
