//! The specialized replica state machine ordering blocks among a fixed
//! federation of miners.
//!
//! Deviations from textbook PBFT, all consequences of using it as a
//! block-ordering engine:
//!
//! * **self-generated requests** — there are no clients; every replica
//!   generates the request "mine the block for nominal time `T0 + n*tau`"
//!   from its own clock;
//! * **block template in pre-prepare** — the primary's proposal carries the
//!   full template instead of a request digest;
//! * **signing material in commit** — depending on the mode, commits carry a
//!   plain signature, a share vector, or nothing (sessions run separately);
//! * **blocks as stable checkpoints** — adopting a block garbage-collects
//!   the instance; there is no separate checkpoint subprotocol;
//! * **no reorganizations** — a conflicting block at an occupied height is
//!   rejected outright.
//!
//! The replica is a pure state machine: handlers take the replica's local
//! clock and return [`Action`]s; all randomness comes from an owned seeded
//! generator, so runs are reproducible.

use crate::chain::{
    self, attach_solution, build_template, Block, BlockChallenge, Chain, ChainParams,
    ClockContext, Digest, RejectReason, Transaction,
};
use crate::fbft::{
    self, assemble_share_vector_solution, enumerate_combinations, RoastAction, RoastCoordinator,
    RoastSignerNonces,
};
use crate::frost::{
    self, CommitmentList, ExtendedCommitment, ExtendedNonce, KeyMaterial, ParticipantId,
};
use crate::group::{GroupElement, GroupParams, Scalar, SchnorrSignature};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use std::collections::{BTreeMap, BTreeSet};

pub type NodeId = u32;

/// `(N, Q) = (3*F_B + 2*F_C + 1, 2*F_B + F_C + 1)`: the smallest group and
/// quorum tolerating `F_B` byzantine and `F_C` crashed members.
pub fn quorum_sizes(f_b: u32, f_c: u32) -> (u32, u32) {
    (3 * f_b + 2 * f_c + 1, 2 * f_b + f_c + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsensusMode {
    /// Commits carry individual signatures; the solution is a concatenated
    /// multisig revealing who signed.
    Plain,
    /// Commits carry share vectors; any quorum assembles one aggregate
    /// signature with no extra rounds.
    Fbft3,
    /// Commits carry nothing; the primary coordinates signing sessions.
    Fbft5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behavior {
    Honest,
    /// Participates in ordering but withholds all signing material.
    Mute,
    /// As primary, sends different templates to different backups.
    Equivocate,
    /// Sends syntactically valid but cryptographically wrong shares.
    InvalidShare,
    /// Floods fabricated blocks for future rounds.
    PrematureFlood,
    /// Re-grinds adopted blocks under a different nonce and gossips the
    /// tweaked variant with the original solution attached.
    NonceTweak,
}

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommitPayload {
    Plain {
        /// Hex `R || z` over the block hash under the sender's block key.
        signature: String,
    },
    ShareVector {
        /// `(combination index, hex z)` for every combination containing
        /// the sender.
        shares: Vec<(u32, String)>,
    },
    /// Agreement only; signing runs in coordinator sessions.
    Session,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedProof {
    pub pre_prepare: Box<SignedMessage>,
    pub prepares: Vec<SignedMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ConsensusBody {
    PrePrepare {
        view: u64,
        height: u64,
        block: Block,
    },
    Prepare {
        view: u64,
        height: u64,
        block_hash: String,
        /// Fresh nonce commitments `(D, E)` piggybacked for the session
        /// mode.
        fresh_commitment: Option<(String, String)>,
    },
    Commit {
        view: u64,
        height: u64,
        block_hash: String,
        payload: CommitPayload,
    },
    ShareRequest {
        view: u64,
        height: u64,
        block_hash: String,
        session_id: u32,
        /// `(participant id, hex D, hex E)` ascending by participant.
        list: Vec<(u32, String, String)>,
    },
    ShareResponse {
        view: u64,
        height: u64,
        session_id: u32,
        z: String,
        fresh: (String, String),
    },
    ViewChange {
        new_view: u64,
        stable_height: u64,
        prepared: Option<PreparedProof>,
    },
    NewView {
        new_view: u64,
        proofs: Vec<SignedMessage>,
        reproposal: Option<Box<SignedMessage>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMessage {
    pub sender: NodeId,
    pub body: ConsensusBody,
    /// Hex `R || z` over the body digest under the sender's authenticator
    /// key.
    pub signature: String,
}

fn body_digest(body: &ConsensusBody, sender: NodeId) -> Digest {
    let json = serde_json::to_vec(body).expect("bodies always serialize");
    let mut h = Sha256::new();
    h.update(&json);
    h.update(sender.to_be_bytes());
    h.finalize().into()
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

/// Node-local observable events. The surrounding network attaches time and
/// node id when writing trace records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    RequestGenerated {
        height: u64,
        nominal_ts: u64,
    },
    PrePrepareAccepted {
        view: u64,
        height: u64,
        block_hash: String,
    },
    Prepared {
        view: u64,
        height: u64,
        block_hash: String,
    },
    LocallyCommitted {
        view: u64,
        height: u64,
        block_hash: String,
    },
    BlockAdopted {
        height: u64,
        block_hash: String,
        nominal_ts: u64,
        local_clock_ms: u64,
        block_hex: String,
        solution_hex: String,
    },
    BlockRejected {
        height: u64,
        block_hash: String,
        reason: String,
    },
    SolutionAssembled {
        height: u64,
        signers: Vec<u32>,
        sessions: u32,
    },
    ShareRejected {
        height: u64,
        signer: u32,
    },
    SessionOpened {
        height: u64,
        session_id: u32,
        signers: Vec<u32>,
    },
    ViewChangeStarted {
        new_view: u64,
    },
    NewViewInstalled {
        view: u64,
    },
}

#[derive(Debug, Clone)]
pub enum Action {
    Send { to: NodeId, msg: SignedMessage },
    Broadcast(SignedMessage),
    GossipBlock(Block),
    SendBlock { to: NodeId, block: Block },
    RequestChain { from_height: u64 },
    ArmViewChangeTimer { duration_ms: u64 },
    DisarmViewChangeTimer,
    Trace(TraceEvent),
}

// ---------------------------------------------------------------------------
// Configuration and key material
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ReplicaConfig {
    pub node: NodeId,
    pub f_b: u32,
    pub f_c: u32,
    pub mode: ConsensusMode,
    pub tau_ms: u64,
    pub lead_delta_ms: u64,
    pub future_delta_ms: u64,
    pub vc_timeout_ms: u64,
}

impl ReplicaConfig {
    pub fn n(&self) -> u32 {
        quorum_sizes(self.f_b, self.f_c).0
    }
    pub fn q(&self) -> u32 {
        quorum_sizes(self.f_b, self.f_c).1
    }
    /// Signing threshold per mode: the full quorum for share vectors, the
    /// smallest honest-majority-of-faulty bound for sessions.
    pub fn signing_threshold(&self) -> u32 {
        match self.mode {
            ConsensusMode::Plain | ConsensusMode::Fbft3 => self.q(),
            ConsensusMode::Fbft5 => self.f_b + 1,
        }
    }
}

pub fn participant_of(node: NodeId) -> ParticipantId {
    ParticipantId(node + 1)
}

pub fn node_of(p: ParticipantId) -> NodeId {
    p.0 - 1
}

/// All long-term secrets and public registries one replica holds.
#[derive(Debug, Clone)]
pub struct KeyBundle {
    /// Message-authenticator secret (per-node Schnorr key).
    pub auth_secret: Scalar,
    pub auth_public: BTreeMap<NodeId, GroupElement>,
    /// Per-node block-signing secret (concatenated-multisig mode only).
    pub block_secret: Option<Scalar>,
    pub block_public: BTreeMap<NodeId, GroupElement>,
    /// Threshold key material (aggregate modes).
    pub threshold: Option<KeyMaterial>,
    /// Own extended nonce (share-vector mode).
    pub ext_nonce: Option<ExtendedNonce>,
    /// Everyone's extended commitments (share-vector mode).
    pub ext_commitments: BTreeMap<ParticipantId, ExtendedCommitment>,
}

// ---------------------------------------------------------------------------
// Replica
// ---------------------------------------------------------------------------

#[derive(Debug, Default)]
struct Instance {
    view: u64,
    /// The primary's signed pre-prepare and the proposed template.
    pre_prepare: Option<(SignedMessage, Block)>,
    /// All prepares received, keyed by sender; only those matching the
    /// accepted proposal's hash count toward the quorum.
    prepare_msgs: BTreeMap<NodeId, SignedMessage>,
    sent_prepare: bool,
    prepared: bool,
    commits: BTreeMap<NodeId, CommitPayload>,
    sent_commit: bool,
    committed: bool,
    /// Fresh commitments from prepares (session mode).
    fresh_commitments: BTreeMap<ParticipantId, (GroupElement, GroupElement)>,
}

struct RoastState {
    height: u64,
    block_hash: Digest,
    coordinator: RoastCoordinator,
}

pub struct Replica {
    pub cfg: ReplicaConfig,
    pub behavior: Behavior,
    params: GroupParams,
    challenge: BlockChallenge,
    cp: ChainParams,
    pub chain: Chain,
    keys: KeyBundle,
    rng: ChaCha12Rng,
    view: u64,
    insts: BTreeMap<u64, Instance>,
    combinations: Vec<Vec<ParticipantId>>,
    consumed_contexts: BTreeSet<(u64, u32)>,
    /// Cached share vectors per height so a view-change reproposal of the
    /// same block can be re-answered without touching the nonces again.
    share_cache: BTreeMap<u64, (Digest, Vec<(u32, Scalar)>)>,
    roast: Option<RoastState>,
    signer_nonces: RoastSignerNonces,
    vc_timeout_current: u64,
    vc_armed: bool,
    vc_votes: BTreeMap<u64, BTreeMap<NodeId, SignedMessage>>,
    highest_vc_sent: Option<u64>,
    future_blocks: BTreeMap<u64, Block>,
    /// Pre-prepares that arrived a little ahead of our chain tip (the
    /// primary can propose the next round the instant it adopts, racing our
    /// own adoption); replayed once the gap closes.
    pending_preprepares: BTreeMap<u64, SignedMessage>,
    /// A solved block produced inside a deep call chain, adopted on the next
    /// handler exit where the local clock is known.
    pending_adopt: Option<Block>,
    pub mempool: Vec<Transaction>,
    actions: Vec<Action>,
    /// Solution assembly metadata of the last adopted block (if assembled
    /// locally): signer participants and session count.
    last_assembly: Option<(Vec<u32>, u32)>,
}

impl Replica {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cfg: ReplicaConfig,
        behavior: Behavior,
        params: GroupParams,
        challenge: BlockChallenge,
        cp: ChainParams,
        genesis: Block,
        keys: KeyBundle,
        rng: ChaCha12Rng,
    ) -> Self {
        let combinations = if cfg.mode == ConsensusMode::Fbft3 {
            enumerate_combinations(cfg.n(), cfg.signing_threshold())
        } else {
            Vec::new()
        };
        let vc_timeout = cfg.vc_timeout_ms;
        Replica {
            cfg,
            behavior,
            params,
            challenge,
            cp,
            chain: Chain::new(genesis),
            keys,
            rng,
            view: 0,
            insts: BTreeMap::new(),
            combinations,
            consumed_contexts: BTreeSet::new(),
            share_cache: BTreeMap::new(),
            roast: None,
            signer_nonces: RoastSignerNonces::default(),
            vc_timeout_current: vc_timeout,
            vc_armed: false,
            vc_votes: BTreeMap::new(),
            highest_vc_sent: None,
            future_blocks: BTreeMap::new(),
            pending_preprepares: BTreeMap::new(),
            pending_adopt: None,
            mempool: Vec::new(),
            actions: Vec::new(),
            last_assembly: None,
        }
    }

    pub fn view(&self) -> u64 {
        self.view
    }

    pub fn primary_of(&self, view: u64) -> NodeId {
        (view % self.cfg.n() as u64) as NodeId
    }

    fn is_primary(&self) -> bool {
        self.primary_of(self.view) == self.cfg.node
    }

    fn next_height(&self) -> u64 {
        self.chain.height() + 1
    }

    fn trace(&mut self, ev: TraceEvent) {
        self.actions.push(Action::Trace(ev));
    }

    fn sign_body(&mut self, body: ConsensusBody) -> SignedMessage {
        let digest = body_digest(&body, self.cfg.node);
        let sig = self
            .params
            .schnorr_sign(&self.keys.auth_secret, &digest, &mut self.rng);
        SignedMessage {
            sender: self.cfg.node,
            body,
            signature: hex::encode(sig.to_bytes()),
        }
    }

    fn verify_msg(&self, msg: &SignedMessage) -> bool {
        let Some(pk) = self.keys.auth_public.get(&msg.sender) else {
            return false;
        };
        let Ok(bytes) = hex::decode(&msg.signature) else {
            return false;
        };
        let elen = self.params.element_len();
        if bytes.len() != elen + self.params.scalar_len() {
            return false;
        }
        let sig = SchnorrSignature {
            r_bytes: bytes[..elen].to_vec(),
            z_bytes: bytes[elen..].to_vec(),
        };
        self.params
            .schnorr_verify(pk, &body_digest(&msg.body, msg.sender), &sig)
    }

    /// Signs, broadcasts, and self-delivers (the network never loops a
    /// broadcast back to its sender).
    fn broadcast(&mut self, body: ConsensusBody, now: u64) {
        let msg = self.sign_body(body);
        self.actions.push(Action::Broadcast(msg.clone()));
        self.dispatch(msg, now);
    }

    // -- round driving ------------------------------------------------------

    /// Fired once per round at `nominal - lead_delta` on the local clock.
    pub fn on_round_wakeup(&mut self, height: u64, now: u64) -> Vec<Action> {
        if height != self.next_height() {
            // behind (stalled or partitioned): ask peers for the backlog
            if height > self.next_height() {
                self.actions.push(Action::RequestChain {
                    from_height: self.next_height(),
                });
            }
            return self.drain();
        }
        self.round_start(height, now);
        self.drain()
    }

    /// The self-generated request for one round: trace it, arm the progress
    /// timer, and propose if we lead the current view.
    fn round_start(&mut self, height: u64, now: u64) {
        let nominal = chain::nominal_timestamp(&self.cp, height);
        self.trace(TraceEvent::RequestGenerated {
            height,
            nominal_ts: nominal,
        });
        if !self.vc_armed {
            self.vc_armed = true;
            self.actions.push(Action::ArmViewChangeTimer {
                duration_ms: self.vc_timeout_current,
            });
        }
        if self.behavior == Behavior::PrematureFlood {
            self.flood_premature(height);
        }
        if self.is_primary() {
            self.propose(height, now);
        }
    }

    fn propose(&mut self, height: u64, now: u64) {
        let already = self
            .insts
            .get(&height)
            .map(|i| i.pre_prepare.is_some() && i.view == self.view)
            .unwrap_or(false);
        if already {
            return;
        }
        let Ok(template) = build_template(&self.mempool, &self.chain, height, &self.cp) else {
            return;
        };
        let block = chain::grind(template, &self.cp.grind_target);
        if self.behavior == Behavior::Equivocate {
            // conflicting templates to the two halves of the group; keep
            // variant A for ourselves
            let mut alt_txs = block.transactions.clone();
            alt_txs.push(Transaction::regular(b"equivocation".to_vec()));
            let alt_header = chain::BlockHeader {
                merkle_root: chain::merkle_root_excluding_solution(&alt_txs),
                ..block.header.clone()
            };
            let alt = chain::grind(
                Block {
                    header: alt_header,
                    transactions: alt_txs,
                    height,
                },
                &self.cp.grind_target,
            );
            let body_a = ConsensusBody::PrePrepare {
                view: self.view,
                height,
                block: block.clone(),
            };
            let body_b = ConsensusBody::PrePrepare {
                view: self.view,
                height,
                block: alt,
            };
            let msg_a = self.sign_body(body_a);
            let msg_b = self.sign_body(body_b);
            let n = self.cfg.n();
            for peer in 0..n {
                if peer == self.cfg.node {
                    continue;
                }
                let msg = if peer < n / 2 { &msg_a } else { &msg_b };
                self.actions.push(Action::Send {
                    to: peer,
                    msg: msg.clone(),
                });
            }
            self.dispatch(msg_a, now);
            return;
        }
        self.broadcast(
            ConsensusBody::PrePrepare {
                view: self.view,
                height,
                block,
            },
            now,
        );
    }

    fn flood_premature(&mut self, height: u64) {
        // fabricate blocks for rounds that have not come yet, with garbage
        // solutions; calm replicas must refuse them on sight
        for ahead in 1..=2u64 {
            let h = height + ahead;
            let txs = vec![Transaction::coinbase(
                format!("premature-{h}").into_bytes(),
                self.cp.subsidy,
            )];
            let header = chain::BlockHeader {
                prev_hash: self.chain.tip_hash(),
                merkle_root: chain::merkle_root_excluding_solution(&txs),
                timestamp_ms: chain::nominal_timestamp(&self.cp, h),
                n_bits: 0,
                n_nonce: 0,
            };
            let mut block = chain::grind(
                Block {
                    header,
                    transactions: txs,
                    height: h,
                },
                &self.cp.grind_target,
            );
            let garbage =
                vec![0xABu8; self.params.element_len() + self.params.scalar_len()];
            block.transactions[0].solution_slot = Some(garbage);
            self.actions.push(Action::GossipBlock(block));
        }
    }

    // -- message handling ---------------------------------------------------

    pub fn on_message(&mut self, msg: SignedMessage, now: u64) -> Vec<Action> {
        if msg.sender == self.cfg.node || !self.verify_msg(&msg) {
            return self.drain();
        }
        self.dispatch(msg, now);
        self.drain()
    }

    fn dispatch(&mut self, msg: SignedMessage, now: u64) {
        match msg.body.clone() {
            ConsensusBody::PrePrepare { view, height, block } => {
                self.on_preprepare(msg, view, height, block, now)
            }
            ConsensusBody::Prepare {
                view,
                height,
                block_hash,
                fresh_commitment,
            } => self.on_prepare(msg, view, height, &block_hash, fresh_commitment, now),
            ConsensusBody::Commit {
                view,
                height,
                block_hash,
                payload,
            } => self.on_commit(msg.sender, view, height, &block_hash, payload, now),
            ConsensusBody::ShareRequest {
                view,
                height,
                block_hash,
                session_id,
                list,
            } => self.on_share_request(msg.sender, view, height, &block_hash, session_id, list),
            ConsensusBody::ShareResponse {
                view,
                height,
                session_id,
                z,
                fresh,
            } => self.on_share_response(msg.sender, view, height, session_id, &z, fresh, now),
            ConsensusBody::ViewChange { new_view, .. } => self.on_view_change(msg, new_view, now),
            ConsensusBody::NewView {
                new_view,
                proofs,
                reproposal,
            } => self.on_new_view(msg.sender, new_view, proofs, reproposal, now),
        }
    }

    fn on_preprepare(
        &mut self,
        msg: SignedMessage,
        view: u64,
        height: u64,
        block: Block,
        now: u64,
    ) {
        if view != self.view || msg.sender != self.primary_of(view) {
            return;
        }
        if height != self.next_height() {
            // slightly ahead of our tip: the proposal may simply have raced
            // our adoption of its parent, so hold it until the gap closes
            if height > self.next_height() && height <= self.next_height() + 4 {
                self.pending_preprepares.insert(height, msg);
            }
            return;
        }
        // full template validation except the solution (not attached yet);
        // this includes the calmness rule
        if block.height != height
            || block.header.prev_hash != self.chain.tip_hash()
            || block.header.merkle_root != chain::merkle_root_excluding_solution(&block.transactions)
            || block.block_hash() >= self.cp.grind_target
            || block.header.timestamp_ms != chain::nominal_timestamp(&self.cp, height)
            || block.solution().is_some()
        {
            return;
        }
        if block.header.timestamp_ms > now + self.cfg.future_delta_ms {
            return; // premature proposal
        }
        let inst = self.insts.entry(height).or_default();
        if inst.pre_prepare.is_some() && inst.view == view {
            return; // equivocation from the primary is ignored, first wins
        }
        inst.view = view;
        let hash = block.block_hash();
        inst.pre_prepare = Some((msg.clone(), block));
        self.trace(TraceEvent::PrePrepareAccepted {
            view,
            height,
            block_hash: hex::encode(hash),
        });
        // stand behind the proposal
        let inst = self.insts.get_mut(&height).unwrap();
        if !inst.sent_prepare {
            inst.sent_prepare = true;
            let fresh_commitment = if self.cfg.mode == ConsensusMode::Fbft5 {
                Some(self.fresh_commitment_hex())
            } else {
                None
            };
            if msg.sender != self.cfg.node {
                self.broadcast(
                    ConsensusBody::Prepare {
                        view,
                        height,
                        block_hash: hex::encode(hash),
                        fresh_commitment: fresh_commitment.clone(),
                    },
                    now,
                );
            }
            if let Some((d_hex, e_hex)) = fresh_commitment {
                self.record_fresh_commitment(height, self.cfg.node, &d_hex, &e_hex);
            }
        }
        self.try_advance(height, now);
    }

    fn fresh_commitment_hex(&mut self) -> (String, String) {
        let pair = frost::preprocess(1, &self.params, &mut self.rng)
            .pop()
            .unwrap();
        let d = hex::encode(self.params.encode_element(&pair.big_d));
        let e = hex::encode(self.params.encode_element(&pair.big_e));
        self.signer_nonces.stash(&self.params, pair);
        (d, e)
    }

    fn record_fresh_commitment(&mut self, height: u64, node: NodeId, d_hex: &str, e_hex: &str) {
        let Ok(d) = hex::decode(d_hex).map(|b| self.params.decode_element(&b)) else {
            return;
        };
        let Ok(e) = hex::decode(e_hex).map(|b| self.params.decode_element(&b)) else {
            return;
        };
        let (Ok(d), Ok(e)) = (d, e) else { return };
        let inst = self.insts.entry(height).or_default();
        inst.fresh_commitments
            .insert(participant_of(node), (d.clone(), e.clone()));
        // feed a live coordinator directly
        if let Some(roast) = self.roast.as_mut() {
            if roast.height == height {
                let acts = roast.coordinator.on_commitment(participant_of(node), d, e);
                self.handle_roast_actions(acts, 0);
            }
        }
    }

    fn on_prepare(
        &mut self,
        msg: SignedMessage,
        view: u64,
        height: u64,
        block_hash: &str,
        fresh_commitment: Option<(String, String)>,
        now: u64,
    ) {
        if view != self.view || height != self.next_height() {
            return;
        }
        let inst = self.insts.entry(height).or_default();
        if inst.view != view && inst.pre_prepare.is_some() {
            return;
        }
        inst.view = view;
        let _ = block_hash; // hash filtering happens at quorum counting
        inst.prepare_msgs.insert(msg.sender, msg.clone());
        if let Some((d_hex, e_hex)) = fresh_commitment {
            self.record_fresh_commitment(height, msg.sender, &d_hex, &e_hex);
        }
        self.try_advance(height, now);
    }

    fn on_commit(
        &mut self,
        sender: NodeId,
        view: u64,
        height: u64,
        block_hash: &str,
        payload: CommitPayload,
        now: u64,
    ) {
        if view != self.view || height != self.next_height() {
            return;
        }
        let inst = self.insts.entry(height).or_default();
        if let Some((_, block)) = &inst.pre_prepare {
            if hex::encode(block.block_hash()) != block_hash {
                return;
            }
        }
        inst.commits.insert(sender, payload);
        self.try_advance(height, now);
    }

    /// Idempotent phase driver: called after every state change.
    fn try_advance(&mut self, height: u64, now: u64) {
        let q = self.cfg.q() as usize;
        let me = self.cfg.node;
        let mut newly_prepared: Option<(u64, Digest)> = None;
        if let Some(inst) = self.insts.get_mut(&height) {
            if let Some((pp, block)) = &inst.pre_prepare {
                let hash = block.block_hash();
                let hash_hex = hex::encode(hash);
                let mut backers: BTreeSet<NodeId> = [pp.sender].into_iter().collect();
                if inst.sent_prepare {
                    backers.insert(me);
                }
                for (sender, pm) in &inst.prepare_msgs {
                    if let ConsensusBody::Prepare { block_hash, .. } = &pm.body {
                        if *block_hash == hash_hex {
                            backers.insert(*sender);
                        }
                    }
                }
                if !inst.prepared && inst.sent_prepare && backers.len() >= q {
                    inst.prepared = true;
                    newly_prepared = Some((inst.view, hash));
                }
            }
        }
        if let Some((view, hash)) = newly_prepared {
            self.trace(TraceEvent::Prepared {
                view,
                height,
                block_hash: hex::encode(hash),
            });
            self.send_commit(height, hash, now);
            if self.cfg.mode == ConsensusMode::Fbft5 && self.is_primary() {
                self.start_roast(height, hash);
            }
        }
        let mut newly_committed: Option<(u64, Digest)> = None;
        if let Some(inst) = self.insts.get_mut(&height) {
            if inst.prepared && inst.sent_commit && !inst.committed && inst.commits.len() >= q {
                if let Some((_, block)) = &inst.pre_prepare {
                    let hash = block.block_hash();
                    inst.committed = true;
                    newly_committed = Some((inst.view, hash));
                }
            }
        }
        if let Some((view, hash)) = newly_committed {
            self.trace(TraceEvent::LocallyCommitted {
                view,
                height,
                block_hash: hex::encode(hash),
            });
            self.assemble_and_adopt(height, now);
        }
        self.adopt_pending(now);
    }

    fn send_commit(&mut self, height: u64, hash: Digest, now: u64) {
        let inst = self.insts.get_mut(&height).unwrap();
        if inst.sent_commit {
            return;
        }
        inst.sent_commit = true;
        let view = inst.view;
        let payload = match self.cfg.mode {
            ConsensusMode::Plain => {
                let signature = if self.behavior == Behavior::Mute {
                    String::new() // withhold signing material
                } else {
                    let sk = self.keys.block_secret.clone().expect("plain mode key");
                    let mut sig = self.params.schnorr_sign(&sk, &hash, &mut self.rng);
                    if self.behavior == Behavior::InvalidShare {
                        sig.z_bytes[0] ^= 0xFF;
                    }
                    hex::encode(sig.to_bytes())
                };
                CommitPayload::Plain { signature }
            }
            ConsensusMode::Fbft3 => {
                let shares = if self.behavior == Behavior::Mute {
                    Vec::new()
                } else {
                    self.share_vector_for(height, hash)
                };
                CommitPayload::ShareVector { shares }
            }
            ConsensusMode::Fbft5 => CommitPayload::Session,
        };
        self.broadcast(
            ConsensusBody::Commit {
                view,
                height,
                block_hash: hex::encode(hash),
                payload,
            },
            now,
        );
    }

    fn share_vector_for(&mut self, height: u64, hash: Digest) -> Vec<(u32, String)> {
        // reproposal of the same block after a view change reuses the cached
        // vector; a different block at a consumed height is never signed
        if let Some((cached_hash, shares)) = self.share_cache.get(&height) {
            if *cached_hash == hash {
                return shares
                    .iter()
                    .map(|(j, z)| (*j, hex::encode(self.params.encode_scalar(z))))
                    .collect();
            }
            return Vec::new();
        }
        let key = self.keys.threshold.as_ref().expect("threshold key");
        let ext = self.keys.ext_nonce.as_ref().expect("extended nonce");
        let Ok(vec) = fbft::build_share_vector(
            &self.params,
            key,
            ext,
            &self.keys.ext_commitments,
            &self.combinations,
            height,
            &hash,
            &mut self.consumed_contexts,
        ) else {
            return Vec::new();
        };
        let mut shares: Vec<(u32, Scalar)> =
            vec.into_iter().map(|(j, s)| (j, s.z)).collect();
        if self.behavior == Behavior::InvalidShare {
            for (_, z) in &mut shares {
                *z = self.params.scalar_add(z, &self.params.scalar_from_u64(1));
            }
        }
        self.share_cache.insert(height, (hash, shares.clone()));
        shares
            .into_iter()
            .map(|(j, z)| (j, hex::encode(self.params.encode_scalar(&z))))
            .collect()
    }

    // -- solution assembly ---------------------------------------------------

    fn assemble_and_adopt(&mut self, height: u64, now: u64) {
        let inst = self.insts.get(&height).expect("instance exists");
        let Some((_, block)) = inst.pre_prepare.clone() else {
            return;
        };
        let hash = block.block_hash();
        match self.cfg.mode {
            ConsensusMode::Plain => {
                let mut entries: Vec<(u16, SchnorrSignature)> = Vec::new();
                let elen = self.params.element_len();
                for (&sender, payload) in &inst.commits {
                    let CommitPayload::Plain { signature } = payload else {
                        continue;
                    };
                    let Ok(bytes) = hex::decode(signature) else { continue };
                    if bytes.len() != elen + self.params.scalar_len() {
                        continue;
                    }
                    let sig = SchnorrSignature {
                        r_bytes: bytes[..elen].to_vec(),
                        z_bytes: bytes[elen..].to_vec(),
                    };
                    let Some(pk) = self.keys.block_public.get(&sender) else {
                        continue;
                    };
                    if self.params.schnorr_verify(pk, &hash, &sig) {
                        entries.push((sender as u16, sig));
                    }
                }
                if entries.len() < self.cfg.q() as usize {
                    // not enough valid signatures yet; later commits re-run
                    // this via try_advance
                    let inst = self.insts.get_mut(&height).unwrap();
                    inst.committed = false;
                    return;
                }
                entries.truncate(self.cfg.q() as usize);
                let signers: Vec<u32> =
                    entries.iter().map(|(i, _)| *i as u32 + 1).collect();
                let solution =
                    BlockChallenge::encode_multisig_solution(&self.params, &entries);
                self.last_assembly = Some((signers.clone(), 0));
                self.trace(TraceEvent::SolutionAssembled {
                    height,
                    signers,
                    sessions: 0,
                });
                let solved = attach_solution(block, solution);
                self.adopt(solved, now, true);
            }
            ConsensusMode::Fbft3 => {
                let mut senders = BTreeSet::new();
                let mut vectors: BTreeMap<ParticipantId, BTreeMap<u32, Scalar>> =
                    BTreeMap::new();
                for (&sender, payload) in &inst.commits {
                    let CommitPayload::ShareVector { shares } = payload else {
                        continue;
                    };
                    let mut map = BTreeMap::new();
                    for (j, z_hex) in shares {
                        let Ok(bytes) = hex::decode(z_hex) else { continue };
                        let Ok(z) = self.params.decode_scalar(&bytes) else {
                            continue;
                        };
                        map.insert(*j, z);
                    }
                    if map.is_empty() {
                        continue; // mute or garbled commit
                    }
                    senders.insert(participant_of(sender));
                    vectors.insert(participant_of(sender), map);
                }
                let key = self.keys.threshold.as_ref().expect("threshold key");
                let result = assemble_share_vector_solution(
                    &self.params,
                    &senders,
                    &vectors,
                    &self.keys.ext_commitments,
                    &self.combinations,
                    height,
                    &hash,
                    &key.verification_shares,
                    &key.group_public_key,
                );
                match result {
                    Ok((sig, j, excluded)) => {
                        for bad in &excluded {
                            self.trace(TraceEvent::ShareRejected {
                                height,
                                signer: bad.0,
                            });
                        }
                        let signers: Vec<u32> =
                            self.combinations[j as usize].iter().map(|p| p.0).collect();
                        self.last_assembly = Some((signers.clone(), 0));
                        self.trace(TraceEvent::SolutionAssembled {
                            height,
                            signers,
                            sessions: 0,
                        });
                        let solved = attach_solution(block, sig.to_bytes());
                        self.adopt(solved, now, true);
                    }
                    Err(_) => {
                        // not enough valid vectors yet; later commits re-run
                        // this via try_advance
                        let inst = self.insts.get_mut(&height).unwrap();
                        inst.committed = false;
                    }
                }
            }
            ConsensusMode::Fbft5 => {
                // ordering is settled; the block arrives once the
                // coordinator finishes a session and gossips it
            }
        }
    }

    fn start_roast(&mut self, height: u64, hash: Digest) {
        if self
            .roast
            .as_ref()
            .map(|r| r.height == height && r.block_hash == hash)
            .unwrap_or(false)
        {
            return;
        }
        let key = self.keys.threshold.as_ref().expect("threshold key");
        let mut coordinator = RoastCoordinator::new(
            self.params.clone(),
            key.verification_shares.clone(),
            key.group_public_key.clone(),
            hash.to_vec(),
            self.cfg.signing_threshold() as usize,
        );
        let banked: Vec<(ParticipantId, GroupElement, GroupElement)> = self
            .insts
            .get(&height)
            .map(|i| {
                i.fresh_commitments
                    .iter()
                    .map(|(p, (d, e))| (*p, d.clone(), e.clone()))
                    .collect()
            })
            .unwrap_or_default();
        let mut acts = Vec::new();
        for (p, d, e) in banked {
            acts.extend(coordinator.on_commitment(p, d, e));
        }
        self.roast = Some(RoastState {
            height,
            block_hash: hash,
            coordinator,
        });
        self.handle_roast_actions(acts, 0);
    }

    fn handle_roast_actions(&mut self, acts: Vec<RoastAction>, depth: u32) {
        assert!(depth < 64, "self-answer recursion is bounded");
        let Some(roast) = self.roast.as_ref() else { return };
        let (height, hash) = (roast.height, roast.block_hash);
        let view = self.view;
        for act in acts {
            match act {
                RoastAction::Finished { signature, signers } => {
                    let Some(roast) = self.roast.as_ref() else { continue };
                    let sessions = roast.coordinator.sessions_opened;
                    for bad in roast.coordinator.malicious().clone() {
                        self.trace(TraceEvent::ShareRejected {
                            height,
                            signer: bad.0,
                        });
                    }
                    let signer_ids: Vec<u32> = signers.iter().map(|p| p.0).collect();
                    self.last_assembly = Some((signer_ids.clone(), sessions));
                    self.trace(TraceEvent::SolutionAssembled {
                        height,
                        signers: signer_ids,
                        sessions,
                    });
                    let block = self
                        .insts
                        .get(&height)
                        .and_then(|i| i.pre_prepare.as_ref().map(|(_, b)| b.clone()));
                    if let Some(block) = block {
                        let solved = attach_solution(block, signature.to_bytes());
                        // now is unknown here; adoption happens via the
                        // caller-supplied clock in adopt_pending
                        self.pending_adopt = Some(solved);
                    }
                }
                RoastAction::RequestShare {
                    session_id,
                    signer,
                    list,
                } => {
                    let list_wire: Vec<(u32, String, String)> = list
                        .entries()
                        .iter()
                        .map(|(p, d, e)| {
                            (
                                p.0,
                                hex::encode(self.params.encode_element(d)),
                                hex::encode(self.params.encode_element(e)),
                            )
                        })
                        .collect();
                    self.trace(TraceEvent::SessionOpened {
                        height,
                        session_id,
                        signers: list.signer_set().iter().map(|p| p.0).collect(),
                    });
                    if signer == participant_of(self.cfg.node) {
                        // answer our own request without the network
                        if let Some((z, fresh)) =
                            self.answer_share_request(hash, &list_wire)
                        {
                            let more = {
                                let roast = self.roast.as_mut().unwrap();
                                roast.coordinator.on_share(
                                    signer,
                                    session_id,
                                    z,
                                    Some(fresh),
                                )
                            };
                            self.handle_roast_actions(more, depth + 1);
                        }
                    } else {
                        let body = ConsensusBody::ShareRequest {
                            view,
                            height,
                            block_hash: hex::encode(hash),
                            session_id,
                            list: list_wire,
                        };
                        let msg = self.sign_body(body);
                        self.actions.push(Action::Send {
                            to: node_of(signer),
                            msg,
                        });
                    }
                }
            }
        }
    }

    /// Signer-side share computation shared by the network path and the
    /// primary's self-answer. Returns `(z, fresh commitment)`.
    fn answer_share_request(
        &mut self,
        hash: Digest,
        list_wire: &[(u32, String, String)],
    ) -> Option<(Scalar, (GroupElement, GroupElement))> {
        if self.behavior == Behavior::Mute {
            return None;
        }
        // replay safety: the matching nonce is consumed on first use, so a
        // repeated request finds nothing to sign with
        let mut entries = Vec::new();
        for (p, d_hex, e_hex) in list_wire {
            let d = self.params.decode_element(&hex::decode(d_hex).ok()?).ok()?;
            let e = self.params.decode_element(&hex::decode(e_hex).ok()?).ok()?;
            entries.push((ParticipantId(*p), d, e));
        }
        let list = CommitmentList::new(entries);
        let me = participant_of(self.cfg.node);
        let (own_d, own_e) = {
            let (d, e) = list.entry(me)?;
            (d.clone(), e.clone())
        };
        let mut pair = self
            .signer_nonces
            .take_matching(&self.params, &own_d, &own_e)?;
        let key = self.keys.threshold.as_ref()?;
        let share = frost::sign_share(&self.params, key, &mut pair, &hash, &list).ok()?;
        let z = if self.behavior == Behavior::InvalidShare {
            self.params
                .scalar_add(&share.z, &self.params.scalar_from_u64(1))
        } else {
            share.z
        };
        let fresh_pair = frost::preprocess(1, &self.params, &mut self.rng)
            .pop()
            .unwrap();
        let fresh = (fresh_pair.big_d.clone(), fresh_pair.big_e.clone());
        self.signer_nonces.stash(&self.params, fresh_pair);
        Some((z, fresh))
    }

    #[allow(clippy::too_many_arguments)]
    fn on_share_request(
        &mut self,
        sender: NodeId,
        view: u64,
        height: u64,
        block_hash: &str,
        session_id: u32,
        list: Vec<(u32, String, String)>,
    ) {
        // only sign what we prepared, only for the current primary
        if sender != self.primary_of(view) || view != self.view {
            return;
        }
        let Some(inst) = self.insts.get(&height) else { return };
        let Some((_, block)) = &inst.pre_prepare else { return };
        if !inst.sent_prepare || hex::encode(block.block_hash()) != block_hash {
            return;
        }
        let hash = block.block_hash();
        if let Some((z, fresh)) = self.answer_share_request(hash, &list) {
            let body = ConsensusBody::ShareResponse {
                view,
                height,
                session_id,
                z: hex::encode(self.params.encode_scalar(&z)),
                fresh: (
                    hex::encode(self.params.encode_element(&fresh.0)),
                    hex::encode(self.params.encode_element(&fresh.1)),
                ),
            };
            let msg = self.sign_body(body);
            self.actions.push(Action::Send { to: sender, msg });
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_share_response(
        &mut self,
        sender: NodeId,
        _view: u64,
        height: u64,
        session_id: u32,
        z_hex: &str,
        fresh: (String, String),
        now: u64,
    ) {
        let Some(roast) = self.roast.as_mut() else { return };
        if roast.height != height {
            return;
        }
        let Ok(z) = hex::decode(z_hex) else { return };
        let Ok(z) = self.params.decode_scalar(&z) else { return };
        let fresh_decoded = (|| {
            let d = self
                .params
                .decode_element(&hex::decode(&fresh.0).ok()?)
                .ok()?;
            let e = self
                .params
                .decode_element(&hex::decode(&fresh.1).ok()?)
                .ok()?;
            Some((d, e))
        })();
        let acts = roast
            .coordinator
            .on_share(participant_of(sender), session_id, z, fresh_decoded);
        self.handle_roast_actions(acts, 0);
        self.adopt_pending(now);
    }

    // -- adoption and checkpointing ------------------------------------------

    /// Validates and appends; on success this is the stable checkpoint:
    /// instance state up to the height is dropped and timers reset.
    fn adopt(&mut self, block: Block, now: u64, gossip: bool) {
        let height = block.height;
        let hash = block.block_hash();
        let clock = ClockContext {
            local_clock_ms: now,
            future_delta_ms: self.cfg.future_delta_ms,
        };
        match self.chain.try_append(
            block.clone(),
            &self.challenge,
            &self.params,
            &self.cp,
            clock,
        ) {
            Ok(()) => {
                self.trace(TraceEvent::BlockAdopted {
                    height,
                    block_hash: hex::encode(hash),
                    nominal_ts: block.header.timestamp_ms,
                    local_clock_ms: now,
                    block_hex: hex::encode(block.to_bytes()),
                    solution_hex: hex::encode(block.solution().unwrap_or(&[])),
                });
                if gossip {
                    self.actions.push(Action::GossipBlock(block.clone()));
                }
                if self.behavior == Behavior::NonceTweak {
                    self.gossip_nonce_tweaked(&block);
                }
                // checkpoint
                self.insts.retain(|&h, _| h > height);
                self.share_cache.retain(|&h, _| h > height);
                if self.roast.as_ref().map(|r| r.height) == Some(height) {
                    self.roast = None;
                }
                self.vc_armed = false;
                self.actions.push(Action::DisarmViewChangeTimer);
                self.vc_timeout_current = self.cfg.vc_timeout_ms;
                self.vc_votes.clear();
                self.highest_vc_sent = None;
                self.pending_preprepares.retain(|&h, _| h > height);
                if let Some(pp) = self.pending_preprepares.remove(&(height + 1)) {
                    self.dispatch(pp, now);
                }
                if let Some(next) = self.future_blocks.remove(&(height + 1)) {
                    self.adopt(next, now, false);
                } else if now + self.cfg.lead_delta_ms
                    >= chain::nominal_timestamp(&self.cp, self.next_height())
                {
                    // the wakeup for the next round already passed while
                    // consensus was stalled; start it now so the chain
                    // catches back up to the schedule
                    let next = self.next_height();
                    self.round_start(next, now);
                }
            }
            Err(RejectReason::Stale) => {} // duplicate delivery, quiet
            Err(reason) => {
                self.trace(TraceEvent::BlockRejected {
                    height,
                    block_hash: hex::encode(hash),
                    reason: reason.to_string(),
                });
            }
        }
    }

    /// A block re-ground under a different nonce with the original solution
    /// still attached: the fork attempt every correct node must reject.
    fn gossip_nonce_tweaked(&mut self, adopted: &Block) {
        let mut tweaked = adopted.clone();
        let solution = adopted.solution().map(<[u8]>::to_vec);
        tweaked.header.n_nonce += 1;
        // re-grind starting past the honest nonce so the hash changes
        loop {
            if tweaked.block_hash() < self.cp.grind_target {
                break;
            }
            tweaked.header.n_nonce += 1;
        }
        if let Some(sol) = solution {
            tweaked.transactions[0].solution_slot = Some(sol);
        }
        self.actions.push(Action::GossipBlock(tweaked));
    }

    fn adopt_pending(&mut self, now: u64) {
        if let Some(block) = self.pending_adopt.take() {
            self.adopt(block, now, true);
        }
    }

    pub fn on_gossip_block(&mut self, block: Block, now: u64) -> Vec<Action> {
        let next = self.next_height();
        if block.height == next {
            self.adopt(block, now, false);
        } else if block.height > next {
            self.future_blocks.insert(block.height, block);
            self.actions.push(Action::RequestChain { from_height: next });
        } else if self
            .chain
            .block_at(block.height)
            .map(|b| b.block_hash() != block.block_hash())
            .unwrap_or(false)
        {
            // conflicting sibling: record the rejected fork attempt
            self.trace(TraceEvent::BlockRejected {
                height: block.height,
                block_hash: hex::encode(block.block_hash()),
                reason: RejectReason::HeightOccupied(block.height).to_string(),
            });
        }
        self.drain()
    }

    pub fn on_chain_request(&mut self, requester: NodeId, from_height: u64) -> Vec<Action> {
        for h in from_height..=self.chain.height() {
            if let Some(b) = self.chain.block_at(h) {
                self.actions.push(Action::SendBlock {
                    to: requester,
                    block: b.clone(),
                });
            }
        }
        self.drain()
    }

    // -- view change ----------------------------------------------------------

    pub fn on_view_change_timeout(&mut self, now: u64) -> Vec<Action> {
        if !self.vc_armed {
            return self.drain();
        }
        let target = self.view + 1;
        self.start_view_change(target, now);
        self.drain()
    }

    fn start_view_change(&mut self, new_view: u64, now: u64) {
        if self.highest_vc_sent.map(|v| v >= new_view).unwrap_or(false) {
            return;
        }
        self.highest_vc_sent = Some(new_view);
        self.trace(TraceEvent::ViewChangeStarted { new_view });
        let height = self.next_height();
        let prepared = self.insts.get(&height).and_then(|inst| {
            if !inst.prepared {
                return None;
            }
            let (pp, _) = inst.pre_prepare.as_ref()?;
            let prepares: Vec<SignedMessage> =
                inst.prepare_msgs.values().cloned().collect();
            Some(PreparedProof {
                pre_prepare: Box::new(pp.clone()),
                prepares,
            })
        });
        // back off before the next attempt
        self.vc_timeout_current = self.vc_timeout_current.saturating_mul(2);
        self.actions.push(Action::ArmViewChangeTimer {
            duration_ms: self.vc_timeout_current,
        });
        self.broadcast(
            ConsensusBody::ViewChange {
                new_view,
                stable_height: self.chain.height(),
                prepared,
            },
            now,
        );
    }

    fn on_view_change(&mut self, msg: SignedMessage, new_view: u64, now: u64) {
        if new_view <= self.view {
            return;
        }
        self.vc_votes
            .entry(new_view)
            .or_default()
            .insert(msg.sender, msg);
        let votes = self.vc_votes.get(&new_view).map(|v| v.len()).unwrap_or(0);
        // join a view change the honest part of the group is running
        if votes > self.cfg.f_b as usize
            && self.highest_vc_sent.map(|v| v < new_view).unwrap_or(true)
        {
            self.start_view_change(new_view, now);
        }
        let votes = self.vc_votes.get(&new_view).map(|v| v.len()).unwrap_or(0);
        if votes >= self.cfg.q() as usize && self.primary_of(new_view) == self.cfg.node {
            self.emit_new_view(new_view, now);
        }
    }

    fn emit_new_view(&mut self, new_view: u64, now: u64) {
        let proofs: Vec<SignedMessage> = self
            .vc_votes
            .get(&new_view)
            .map(|v| v.values().cloned().collect())
            .unwrap_or_default();
        // repropose the highest prepared block, if any vote carries a proof
        // for the outstanding height
        let height = self.next_height();
        let mut reproposed_block: Option<Block> = None;
        for vote in &proofs {
            let ConsensusBody::ViewChange {
                prepared: Some(proof),
                ..
            } = &vote.body
            else {
                continue;
            };
            if let Some(block) = self.validate_prepared_proof(proof, height) {
                reproposed_block = Some(block);
                break;
            }
        }
        self.install_view(new_view);
        let reproposal = {
            let block = match reproposed_block {
                Some(b) => Some(b),
                None => build_template(&self.mempool, &self.chain, height, &self.cp)
                    .ok()
                    .map(|t| chain::grind(t, &self.cp.grind_target)),
            };
            block.map(|block| {
                Box::new(self.sign_body(ConsensusBody::PrePrepare {
                    view: new_view,
                    height,
                    block,
                }))
            })
        };
        let body = ConsensusBody::NewView {
            new_view,
            proofs,
            reproposal: reproposal.clone(),
        };
        let msg = self.sign_body(body);
        self.actions.push(Action::Broadcast(msg));
        self.trace(TraceEvent::NewViewInstalled { view: new_view });
        if let Some(pp) = reproposal {
            self.dispatch(*pp, now);
        }
    }

    /// A prepared proof is a pre-prepare plus `Q - 1` matching prepares from
    /// distinct other replicas, all correctly signed.
    fn validate_prepared_proof(&self, proof: &PreparedProof, height: u64) -> Option<Block> {
        let pp = &proof.pre_prepare;
        if !self.verify_msg(pp) {
            return None;
        }
        let ConsensusBody::PrePrepare {
            view,
            height: h,
            block,
        } = &pp.body
        else {
            return None;
        };
        if *h != height || pp.sender != self.primary_of(*view) {
            return None;
        }
        let hash = hex::encode(block.block_hash());
        let mut backers: BTreeSet<NodeId> = [pp.sender].into_iter().collect();
        for prep in &proof.prepares {
            if !self.verify_msg(prep) {
                continue;
            }
            let ConsensusBody::Prepare {
                view: pv,
                height: ph,
                block_hash,
                ..
            } = &prep.body
            else {
                continue;
            };
            if pv == view && ph == h && *block_hash == hash {
                backers.insert(prep.sender);
            }
        }
        (backers.len() >= self.cfg.q() as usize).then(|| block.clone())
    }

    fn install_view(&mut self, new_view: u64) {
        self.view = new_view;
        // ordering state is view-specific; signing caches survive
        self.insts.retain(|&h, _| h <= self.chain.height());
        self.pending_preprepares.clear();
        self.roast = None;
        self.vc_votes.retain(|&v, _| v > new_view);
        self.vc_armed = true;
        self.actions.push(Action::ArmViewChangeTimer {
            duration_ms: self.vc_timeout_current,
        });
    }

    fn on_new_view(
        &mut self,
        sender: NodeId,
        new_view: u64,
        proofs: Vec<SignedMessage>,
        reproposal: Option<Box<SignedMessage>>,
        now: u64,
    ) {
        if new_view <= self.view || sender != self.primary_of(new_view) {
            return;
        }
        let mut voters = BTreeSet::new();
        for proof in &proofs {
            if !self.verify_msg(proof) {
                continue;
            }
            if let ConsensusBody::ViewChange { new_view: v, .. } = &proof.body {
                if *v == new_view {
                    voters.insert(proof.sender);
                }
            }
        }
        if voters.len() < self.cfg.q() as usize {
            return;
        }
        self.install_view(new_view);
        self.trace(TraceEvent::NewViewInstalled { view: new_view });
        if let Some(pp) = reproposal {
            if self.verify_msg(&pp) {
                self.dispatch(*pp, now);
            }
        }
    }

    fn drain(&mut self) -> Vec<Action> {
        std::mem::take(&mut self.actions)
    }
}
