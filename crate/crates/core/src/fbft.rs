//! The two certified-consensus signing layers built on top of the threshold
//! primitives:
//!
//! * **share-vector commits** (the 3-phase variant): every commit message
//!   carries one signature share per signer combination that contains the
//!   sender, with nonces derived deterministically from a long-term extended
//!   commitment, so any quorum of commits can be assembled into an aggregate
//!   signature without extra rounds;
//! * **coordinator sessions** (the 5-phase variant): the primary runs the
//!   robust-asynchronous-threshold-signature loop — open a session per
//!   responsive set of `k` signers, collect shares, mark signers malicious on
//!   the first invalid share, and reopen until one session completes.

use crate::frost::{
    self, CommitmentList, ExtendedCommitment, ExtendedNonce, FrostError, KeyMaterial,
    NonceCommitmentPair, ParticipantId, SignatureShare,
};
use crate::group::{GroupElement, GroupParams, Scalar, SchnorrSignature};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FbftError {
    #[error("no signer combination is fully contained in the valid commit set")]
    NoViableCombination,
    #[error("share vector from {0:?} is missing combination {1}")]
    MissingShare(ParticipantId, u32),
    #[error(transparent)]
    Frost(#[from] FrostError),
}

// ---------------------------------------------------------------------------
// Combination bookkeeping
// ---------------------------------------------------------------------------

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Combinatorial-explosion guard for the share-vector mode.
pub const MAX_COMBINATIONS: u64 = 512;

/// All `k`-subsets of `{1..=n}` in lexicographic order; the position in this
/// list is the combination index used everywhere else.
pub fn enumerate_combinations(n: u32, k: u32) -> Vec<Vec<ParticipantId>> {
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    assert!(
        binomial(n as u64, k as u64) <= MAX_COMBINATIONS,
        "C({n},{k}) exceeds the share-vector bound of {MAX_COMBINATIONS}"
    );
    let mut out = Vec::new();
    let mut combo: Vec<u32> = (1..=k).collect();
    loop {
        out.push(combo.iter().map(|&i| ParticipantId(i)).collect());
        // advance to the next lexicographic combination
        let mut i = k as usize;
        while i > 0 && combo[i - 1] == n - (k - i as u32) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        combo[i - 1] += 1;
        for j in i..k as usize {
            combo[j] = combo[j - 1] + 1;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Share-vector commits (3-phase variant)
// ---------------------------------------------------------------------------

/// The commitment list a combination uses at a given height: each member's
/// extended commitment, tweaked by `(height, combination index)`.
pub fn combination_commitment_list(
    params: &GroupParams,
    ext_commitments: &BTreeMap<ParticipantId, ExtendedCommitment>,
    combo: &[ParticipantId],
    height: u64,
    combination_index: u32,
) -> CommitmentList {
    let entries = combo
        .iter()
        .map(|&pid| {
            let ext = ext_commitments
                .get(&pid)
                .expect("every combination member has a registered extended commitment");
            let (d, e) = frost::derive_commitment(params, ext, height, combination_index);
            (pid, d, e)
        })
        .collect();
    CommitmentList::new(entries)
}

/// One signer's commit-time contribution: a share for every combination that
/// contains the signer. Each `(height, combination)` nonce context is
/// derived once and recorded in `consumed` so it can never be reused.
#[allow(clippy::too_many_arguments)]
pub fn build_share_vector(
    params: &GroupParams,
    key: &KeyMaterial,
    ext_nonce: &ExtendedNonce,
    ext_commitments: &BTreeMap<ParticipantId, ExtendedCommitment>,
    combinations: &[Vec<ParticipantId>],
    height: u64,
    message: &[u8],
    consumed: &mut BTreeSet<(u64, u32)>,
) -> Result<Vec<(u32, SignatureShare)>, FbftError> {
    let mut out = Vec::new();
    for (j, combo) in combinations.iter().enumerate() {
        let j = j as u32;
        if !combo.contains(&key.id) {
            continue;
        }
        if !consumed.insert((height, j)) {
            return Err(FbftError::Frost(FrostError::NonceReused));
        }
        let (d, e) = frost::derive_nonce(params, ext_nonce, height, j);
        let list = combination_commitment_list(params, ext_commitments, combo, height, j);
        let share = frost::sign_share_derived(params, key, &d, &e, message, &list)?;
        out.push((j, share));
    }
    Ok(out)
}

/// Assembles an aggregate signature from share-vector commits.
///
/// Picks the lexicographically smallest combination fully contained in the
/// commit-sender set; if a member's share turns out invalid, the member is
/// excluded and the selection retried. Returns the signature, the chosen
/// combination index, and the set of excluded signers.
#[allow(clippy::too_many_arguments)]
pub fn assemble_share_vector_solution(
    params: &GroupParams,
    commit_senders: &BTreeSet<ParticipantId>,
    share_vectors: &BTreeMap<ParticipantId, BTreeMap<u32, Scalar>>,
    ext_commitments: &BTreeMap<ParticipantId, ExtendedCommitment>,
    combinations: &[Vec<ParticipantId>],
    height: u64,
    message: &[u8],
    verification_shares: &BTreeMap<ParticipantId, GroupElement>,
    group_public_key: &GroupElement,
) -> Result<(SchnorrSignature, u32, BTreeSet<ParticipantId>), FbftError> {
    let mut viable: BTreeSet<ParticipantId> = commit_senders.clone();
    let mut excluded = BTreeSet::new();
    'retry: loop {
        let Some((j, combo)) = combinations
            .iter()
            .enumerate()
            .find(|(_, c)| c.iter().all(|m| viable.contains(m)))
            .map(|(j, c)| (j as u32, c))
        else {
            return Err(FbftError::NoViableCombination);
        };
        let list = combination_commitment_list(params, ext_commitments, combo, height, j);
        let mut shares = Vec::with_capacity(combo.len());
        for &member in combo {
            let z = share_vectors
                .get(&member)
                .and_then(|v| v.get(&j))
                .ok_or(FbftError::MissingShare(member, j))?;
            let share = SignatureShare {
                signer: member,
                z: z.clone(),
            };
            if !frost::verify_share(
                params,
                &share,
                &list,
                message,
                verification_shares,
                group_public_key,
            ) {
                viable.remove(&member);
                excluded.insert(member);
                continue 'retry;
            }
            shares.push(share);
        }
        let sig = frost::aggregate(
            params,
            &shares,
            &list,
            message,
            verification_shares,
            group_public_key,
        )?;
        return Ok((sig, j, excluded));
    }
}

// ---------------------------------------------------------------------------
// Coordinator sessions (5-phase variant)
// ---------------------------------------------------------------------------

/// A single open signing session: a fixed commitment list and the shares
/// received so far.
#[derive(Debug, Clone)]
pub struct RoastSession {
    pub id: u32,
    pub list: CommitmentList,
    pub shares: BTreeMap<ParticipantId, SignatureShare>,
}

/// What the coordinator wants the caller to do after an input.
#[derive(Debug, Clone)]
pub enum RoastAction {
    /// Ask `signer` for a share over `list` in session `session_id`.
    RequestShare {
        session_id: u32,
        signer: ParticipantId,
        list: CommitmentList,
    },
    /// A full aggregate signature is available; `signers` is the completing
    /// session's signer set.
    Finished {
        signature: SchnorrSignature,
        signers: BTreeSet<ParticipantId>,
    },
}

/// Primary-side state of the robust signing loop for one message.
///
/// Invariants maintained:
/// * every non-coordinator signer participates in at most one open session;
/// * a signer that sends an invalid share is malicious forever;
/// * a new session opens as soon as `k` responsive signers have banked fresh
///   commitments and are not pinned in an open session.
///
/// Because a stalled session pins at least one eventually-non-responding
/// signer and every responding signer immediately returns to the pool with a
/// banked fresh commitment, at most `n - k + 1` sessions ever open.
#[derive(Debug)]
pub struct RoastCoordinator {
    params: GroupParams,
    verification_shares: BTreeMap<ParticipantId, GroupElement>,
    group_public_key: GroupElement,
    message: Vec<u8>,
    k: usize,
    /// Signers with a banked fresh commitment, not in any open session.
    pending: BTreeMap<ParticipantId, (GroupElement, GroupElement)>,
    /// Signer -> open session id.
    in_session: BTreeMap<ParticipantId, u32>,
    sessions: BTreeMap<u32, RoastSession>,
    malicious: BTreeSet<ParticipantId>,
    next_session_id: u32,
    pub sessions_opened: u32,
    finished: bool,
}

impl RoastCoordinator {
    pub fn new(
        params: GroupParams,
        verification_shares: BTreeMap<ParticipantId, GroupElement>,
        group_public_key: GroupElement,
        message: Vec<u8>,
        k: usize,
    ) -> Self {
        assert!(k >= 1);
        RoastCoordinator {
            params,
            verification_shares,
            group_public_key,
            message,
            k,
            pending: BTreeMap::new(),
            in_session: BTreeMap::new(),
            sessions: BTreeMap::new(),
            malicious: BTreeSet::new(),
            next_session_id: 0,
            sessions_opened: 0,
            finished: false,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn malicious(&self) -> &BTreeSet<ParticipantId> {
        &self.malicious
    }

    /// Banks a signer's fresh commitment (first contact or post-share
    /// refresh) and opens sessions if possible.
    pub fn on_commitment(
        &mut self,
        signer: ParticipantId,
        big_d: GroupElement,
        big_e: GroupElement,
    ) -> Vec<RoastAction> {
        if self.finished || self.malicious.contains(&signer) || self.in_session.contains_key(&signer)
        {
            return Vec::new();
        }
        self.pending.insert(signer, (big_d, big_e));
        self.try_open_sessions()
    }

    /// Handles a signature share. Invalid shares mark the signer malicious
    /// permanently; valid shares re-bank the attached fresh commitment.
    pub fn on_share(
        &mut self,
        signer: ParticipantId,
        session_id: u32,
        z: Scalar,
        fresh: Option<(GroupElement, GroupElement)>,
    ) -> Vec<RoastAction> {
        if self.finished || self.malicious.contains(&signer) {
            return Vec::new();
        }
        if self.in_session.get(&signer) != Some(&session_id) {
            // stale reference (e.g. the session died because a peer sent an
            // invalid share): the share is useless, but the refresh still
            // returns the signer to the responsive pool
            if !self.in_session.contains_key(&signer) {
                if let Some((d, e)) = fresh {
                    self.pending.insert(signer, (d, e));
                    return self.try_open_sessions();
                }
            }
            return Vec::new();
        }
        let session = self.sessions.get_mut(&session_id).expect("session exists");
        let share = SignatureShare {
            signer,
            z: z.clone(),
        };
        let ok = frost::verify_share(
            &self.params,
            &share,
            &session.list,
            &self.message,
            &self.verification_shares,
            &self.group_public_key,
        );
        if !ok {
            self.malicious.insert(signer);
            self.in_session.remove(&signer);
            // the session can never complete; abandon it and release the
            // honest members back to the pool once they refresh — their
            // pinned state clears here so banked refreshes can seat them
            let dead = self.sessions.remove(&session_id).expect("session exists");
            for member in dead.list.signer_set() {
                if self.in_session.get(&member) == Some(&session_id) {
                    self.in_session.remove(&member);
                }
            }
            return self.try_open_sessions();
        }
        session.shares.insert(signer, share);
        self.in_session.remove(&signer);
        if let Some((d, e)) = fresh {
            self.pending.insert(signer, (d, e));
        }
        if session.shares.len() == self.k {
            let session = self.sessions.remove(&session_id).expect("session exists");
            let shares: Vec<SignatureShare> = session.shares.values().cloned().collect();
            let sig = frost::aggregate(
                &self.params,
                &shares,
                &session.list,
                &self.message,
                &self.verification_shares,
                &self.group_public_key,
            )
            .expect("all shares were individually verified");
            self.finished = true;
            return vec![RoastAction::Finished {
                signature: sig,
                signers: session.list.signer_set(),
            }];
        }
        self.try_open_sessions()
    }

    fn try_open_sessions(&mut self) -> Vec<RoastAction> {
        let mut actions = Vec::new();
        while self.pending.len() >= self.k && !self.finished {
            let chosen: Vec<ParticipantId> = self.pending.keys().take(self.k).copied().collect();
            let entries = chosen
                .iter()
                .map(|pid| {
                    let (d, e) = self.pending.remove(pid).expect("chosen from pending");
                    (*pid, d, e)
                })
                .collect();
            let list = CommitmentList::new(entries);
            let id = self.next_session_id;
            self.next_session_id += 1;
            self.sessions_opened += 1;
            for &pid in &chosen {
                self.in_session.insert(pid, id);
                actions.push(RoastAction::RequestShare {
                    session_id: id,
                    signer: pid,
                    list: list.clone(),
                });
            }
            self.sessions.insert(
                id,
                RoastSession {
                    id,
                    list,
                    shares: BTreeMap::new(),
                },
            );
        }
        actions
    }
}

/// Signer-side helper for the session protocol: keeps a queue of fresh
/// nonce pairs keyed by their public commitments so a share request can be
/// answered with the matching secret.
#[derive(Debug, Default)]
pub struct RoastSignerNonces {
    by_commitment: BTreeMap<(Vec<u8>, Vec<u8>), NonceCommitmentPair>,
}

impl RoastSignerNonces {
    pub fn stash(&mut self, params: &GroupParams, pair: NonceCommitmentPair) {
        let key = (
            params.encode_element(&pair.big_d),
            params.encode_element(&pair.big_e),
        );
        self.by_commitment.insert(key, pair);
    }

    /// Retrieves (and consumes) the nonce pair matching the commitments the
    /// coordinator placed in the session's list.
    pub fn take_matching(
        &mut self,
        params: &GroupParams,
        big_d: &GroupElement,
        big_e: &GroupElement,
    ) -> Option<NonceCommitmentPair> {
        let key = (params.encode_element(big_d), params.encode_element(big_e));
        self.by_commitment.remove(&key)
    }
}
