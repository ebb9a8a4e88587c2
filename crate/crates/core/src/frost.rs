//! Threshold Schnorr machinery: dealerless key generation (Pedersen-style
//! DKG with Feldman verification and a proof of knowledge of each dealer's
//! constant term), nonce/commitment management including hierarchical
//! deterministic derivation, signature share creation and verification, and
//! aggregation into a single Schnorr signature.
//!
//! Nonce-handling caveat: the hierarchical derivation path precomputes
//! deterministic nonces from a published extended commitment. This weakens
//! the usual freshness assumptions on nonces and is kept only because the
//! share-vector consensus layer depends on observers being able to
//! reconstruct every commitment list offline.

use crate::group::{GroupElement, GroupParams, Scalar, SchnorrSignature};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// One-based participant identifier; Lagrange interpolation needs distinct
/// nonzero abscissae.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct ParticipantId(pub u32);

impl ParticipantId {
    pub fn index(self) -> u32 {
        self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrostError {
    #[error("participant {0:?} is not in the signer set")]
    NotInSignerSet(ParticipantId),
    #[error("nonce pair was already used")]
    NonceReused,
    #[error("signer {0:?} has no commitment entry in the list")]
    MissingCommitment(ParticipantId),
    #[error("commitment list too small: {got} entries, threshold {needed}")]
    ListTooSmall { got: usize, needed: usize },
    #[error("invalid signature share from {0:?}")]
    InvalidShare(ParticipantId),
    #[error("dealer {0:?} distributed a share inconsistent with its commitments")]
    DealerFlagged(ParticipantId),
    #[error("dealer {0:?} published an invalid proof of knowledge")]
    BadProofOfKnowledge(ParticipantId),
    #[error("invalid threshold parameters: k={k}, n={n}")]
    BadThreshold { k: u32, n: u32 },
    #[error("share count {got} does not match commitment list length {expected}")]
    ShareCountMismatch { got: usize, expected: usize },
}

/// A participant's long-term threshold key material.
#[derive(Debug, Clone)]
pub struct KeyMaterial {
    pub id: ParticipantId,
    pub secret_share: Scalar,
    pub verification_shares: BTreeMap<ParticipantId, GroupElement>,
    pub group_public_key: GroupElement,
    pub threshold: u32,
    pub group_size: u32,
}

/// A secret nonce pair and its public commitments. A pair with `used` set is
/// refused by `sign_share`.
#[derive(Debug, Clone)]
pub struct NonceCommitmentPair {
    pub d: Scalar,
    pub e: Scalar,
    pub big_d: GroupElement,
    pub big_e: GroupElement,
    pub used: bool,
}

/// Ordered list of `(participant, D, E)` entries, strictly ascending by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitmentList {
    entries: Vec<(ParticipantId, GroupElement, GroupElement)>,
}

impl CommitmentList {
    pub fn new(mut entries: Vec<(ParticipantId, GroupElement, GroupElement)>) -> Self {
        entries.sort_by_key(|(id, _, _)| *id);
        for w in entries.windows(2) {
            assert!(w[0].0 < w[1].0, "duplicate participant id in commitment list");
        }
        CommitmentList { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn signer_set(&self) -> BTreeSet<ParticipantId> {
        self.entries.iter().map(|(id, _, _)| *id).collect()
    }

    pub fn entry(&self, id: ParticipantId) -> Option<(&GroupElement, &GroupElement)> {
        self.entries
            .iter()
            .find(|(i, _, _)| *i == id)
            .map(|(_, d, e)| (d, e))
    }

    pub fn entries(&self) -> &[(ParticipantId, GroupElement, GroupElement)] {
        &self.entries
    }

    /// Canonical byte layout hashed by H1: `(index, D, E)` triples in
    /// ascending index order.
    pub fn to_bytes(&self, params: &GroupParams) -> Vec<u8> {
        let mut out = Vec::new();
        for (id, d, e) in &self.entries {
            out.extend_from_slice(&id.0.to_be_bytes());
            out.extend_from_slice(&params.encode_element(d));
            out.extend_from_slice(&params.encode_element(e));
        }
        out
    }
}

/// A single signer's response in a signing session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureShare {
    pub signer: ParticipantId,
    pub z: Scalar,
}

/// Public side of a hierarchically derived commitment chain: the base
/// commitments plus the chain code keying the tweaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedCommitment {
    pub base_d: GroupElement,
    pub base_e: GroupElement,
    pub chain_code: Vec<u8>,
}

/// Owner-side secret counterpart of an [`ExtendedCommitment`].
#[derive(Debug, Clone)]
pub struct ExtendedNonce {
    pub base_d: Scalar,
    pub base_e: Scalar,
    pub chain_code: Vec<u8>,
}

impl ExtendedNonce {
    pub fn generate(params: &GroupParams, rng: &mut impl RngCore) -> Self {
        let base_d = params.random_nonzero_scalar(rng);
        let base_e = params.random_nonzero_scalar(rng);
        let mut chain_code = vec![0u8; 32];
        rng.fill_bytes(&mut chain_code);
        ExtendedNonce {
            base_d,
            base_e,
            chain_code,
        }
    }

    pub fn to_public(&self, params: &GroupParams) -> ExtendedCommitment {
        ExtendedCommitment {
            base_d: params.g_pow(&self.base_d),
            base_e: params.g_pow(&self.base_e),
            chain_code: self.chain_code.clone(),
        }
    }
}

fn hd_tweak(
    params: &GroupParams,
    chain_code: &[u8],
    branch: &str,
    height: u64,
    combination_index: u32,
) -> Scalar {
    let mut data = Vec::with_capacity(chain_code.len() + branch.len() + 12);
    data.extend_from_slice(chain_code);
    data.extend_from_slice(branch.as_bytes());
    data.extend_from_slice(&height.to_be_bytes());
    data.extend_from_slice(&combination_index.to_be_bytes());
    params.hash_to_scalar("FBFT/HD", &data)
}

/// Observer-side derivation: `D = base_D * g^{t_D}`, `E = base_E * g^{t_E}`
/// with tweaks keyed by `(chain code, branch tag, height, combination)`.
pub fn derive_commitment(
    params: &GroupParams,
    ext: &ExtendedCommitment,
    height: u64,
    combination_index: u32,
) -> (GroupElement, GroupElement) {
    let td = hd_tweak(params, &ext.chain_code, "D", height, combination_index);
    let te = hd_tweak(params, &ext.chain_code, "E", height, combination_index);
    (
        params.mul_elements(&ext.base_d, &params.g_pow(&td)),
        params.mul_elements(&ext.base_e, &params.g_pow(&te)),
    )
}

/// Owner-side derivation: `d = base_d + t_D`, `e = base_e + t_E`, so that
/// `g^d` equals the observer-derived `D`.
pub fn derive_nonce(
    params: &GroupParams,
    ext: &ExtendedNonce,
    height: u64,
    combination_index: u32,
) -> (Scalar, Scalar) {
    let td = hd_tweak(params, &ext.chain_code, "D", height, combination_index);
    let te = hd_tweak(params, &ext.chain_code, "E", height, combination_index);
    (
        params.scalar_add(&ext.base_d, &td),
        params.scalar_add(&ext.base_e, &te),
    )
}

// ---------------------------------------------------------------------------
// Key generation
// ---------------------------------------------------------------------------

/// A dealer's first-round broadcast: Feldman coefficient commitments plus a
/// Schnorr proof of knowledge of the constant term.
#[derive(Debug, Clone)]
pub struct DealerRound1 {
    pub dealer: ParticipantId,
    pub coefficient_commitments: Vec<GroupElement>,
    pub pok: SchnorrSignature,
}

struct Dealer {
    id: ParticipantId,
    coefficients: Vec<Scalar>,
}

impl Dealer {
    fn eval(&self, params: &GroupParams, x: u32) -> Scalar {
        // Horner evaluation of f(x) over Z_q.
        let xs = params.scalar_from_u64(x as u64);
        let mut acc = params.scalar_from_u64(0);
        for c in self.coefficients.iter().rev() {
            acc = params.scalar_add(&params.scalar_mul(&acc, &xs), c);
        }
        acc
    }
}

fn pok_context(params: &GroupParams, dealer: ParticipantId, a0_commit: &GroupElement) -> Vec<u8> {
    let mut ctx = b"keygen-pok".to_vec();
    ctx.extend_from_slice(&dealer.0.to_be_bytes());
    ctx.extend_from_slice(&params.encode_element(a0_commit));
    ctx
}

/// Verifies a received VSS share against the dealer's Feldman commitments:
/// `g^{f_i(m_l)} == prod_j C_ij^{m_l^j}`.
pub fn feldman_check(
    params: &GroupParams,
    commitments: &[GroupElement],
    recipient: ParticipantId,
    share: &Scalar,
) -> bool {
    let x = params.scalar_from_u64(recipient.0 as u64);
    let mut expected = params.identity();
    let mut xpow = params.scalar_from_u64(1);
    for c in commitments {
        expected = params.mul_elements(&expected, &params.exp(c, &xpow));
        xpow = params.scalar_mul(&xpow, &x);
    }
    params.g_pow(share) == expected
}

/// Runs the full key generation among `n` simulated participants over
/// reliable channels and returns each participant's key material.
pub fn dkg_run(
    n: u32,
    k: u32,
    params: &GroupParams,
    rng: &mut impl RngCore,
) -> Result<BTreeMap<ParticipantId, KeyMaterial>, FrostError> {
    dkg_run_with_tamper(n, k, params, rng, None)
}

/// As [`dkg_run`], but optionally corrupts the share one dealer sends to one
/// recipient, so tests can exercise the flag-and-abort path.
pub fn dkg_run_with_tamper(
    n: u32,
    k: u32,
    params: &GroupParams,
    rng: &mut impl RngCore,
    tamper: Option<(ParticipantId, ParticipantId)>,
) -> Result<BTreeMap<ParticipantId, KeyMaterial>, FrostError> {
    if k < 1 || k > n {
        return Err(FrostError::BadThreshold { k, n });
    }
    let ids: Vec<ParticipantId> = (1..=n).map(ParticipantId).collect();

    // Round 1: every dealer samples a degree k-1 polynomial, commits to its
    // coefficients, and proves knowledge of the constant term.
    let dealers: Vec<Dealer> = ids
        .iter()
        .map(|&id| Dealer {
            id,
            coefficients: (0..k).map(|_| params.random_nonzero_scalar(rng)).collect(),
        })
        .collect();
    let mut round1 = Vec::new();
    for d in &dealers {
        let commitments: Vec<GroupElement> =
            d.coefficients.iter().map(|c| params.g_pow(c)).collect();
        let ctx = pok_context(params, d.id, &commitments[0]);
        let pok = params.schnorr_sign(&d.coefficients[0], &ctx, rng);
        round1.push(DealerRound1 {
            dealer: d.id,
            coefficient_commitments: commitments,
            pok,
        });
    }
    for r1 in &round1 {
        let ctx = pok_context(params, r1.dealer, &r1.coefficient_commitments[0]);
        if !params.schnorr_verify(&r1.coefficient_commitments[0], &ctx, &r1.pok) {
            return Err(FrostError::BadProofOfKnowledge(r1.dealer));
        }
    }

    // Round 2: dealers distribute evaluations; every recipient runs the
    // Feldman check and flags the dealer on mismatch.
    let mut shares: BTreeMap<ParticipantId, Vec<Scalar>> =
        ids.iter().map(|&id| (id, Vec::new())).collect();
    for (d, r1) in dealers.iter().zip(&round1) {
        for &recipient in &ids {
            let mut share = d.eval(params, recipient.0);
            if tamper == Some((d.id, recipient)) {
                share = params.scalar_add(&share, &params.scalar_from_u64(1));
            }
            if !feldman_check(params, &r1.coefficient_commitments, recipient, &share) {
                return Err(FrostError::DealerFlagged(d.id));
            }
            shares.get_mut(&recipient).unwrap().push(share);
        }
    }

    // Everyone can compute every verification share from the public
    // commitments alone.
    let group_public_key = round1.iter().fold(params.identity(), |acc, r1| {
        params.mul_elements(&acc, &r1.coefficient_commitments[0])
    });
    let mut verification_shares = BTreeMap::new();
    for &id in &ids {
        let x = params.scalar_from_u64(id.0 as u64);
        let mut y = params.identity();
        for r1 in &round1 {
            let mut xpow = params.scalar_from_u64(1);
            for c in &r1.coefficient_commitments {
                y = params.mul_elements(&y, &params.exp(c, &xpow));
                xpow = params.scalar_mul(&xpow, &x);
            }
        }
        verification_shares.insert(id, y);
    }

    let mut out = BTreeMap::new();
    for &id in &ids {
        let secret_share = shares[&id]
            .iter()
            .fold(params.scalar_from_u64(0), |acc, s| params.scalar_add(&acc, s));
        debug_assert_eq!(params.g_pow(&secret_share), verification_shares[&id]);
        out.insert(
            id,
            KeyMaterial {
                id,
                secret_share,
                verification_shares: verification_shares.clone(),
                group_public_key: group_public_key.clone(),
                threshold: k,
                group_size: n,
            },
        );
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Signing
// ---------------------------------------------------------------------------

/// Generates `pi` fresh nonce/commitment pairs from the seeded RNG.
pub fn preprocess(
    pi: usize,
    params: &GroupParams,
    rng: &mut impl RngCore,
) -> Vec<NonceCommitmentPair> {
    assert!(pi >= 1);
    (0..pi)
        .map(|_| {
            let d = params.random_nonzero_scalar(rng);
            let e = params.random_nonzero_scalar(rng);
            NonceCommitmentPair {
                big_d: params.g_pow(&d),
                big_e: params.g_pow(&e),
                d,
                e,
                used: false,
            }
        })
        .collect()
}

/// `lambda_i = prod_{j != i} m_j / (m_j - m_i)` over `Z_q`.
pub fn lagrange_coefficient(
    params: &GroupParams,
    i: ParticipantId,
    signer_set: &BTreeSet<ParticipantId>,
) -> Result<Scalar, FrostError> {
    if !signer_set.contains(&i) {
        return Err(FrostError::NotInSignerSet(i));
    }
    let mut num = params.scalar_from_u64(1);
    let mut den = params.scalar_from_u64(1);
    let xi = params.scalar_from_u64(i.0 as u64);
    for &j in signer_set {
        if j == i {
            continue;
        }
        let xj = params.scalar_from_u64(j.0 as u64);
        num = params.scalar_mul(&num, &xj);
        den = params.scalar_mul(&den, &params.scalar_sub(&xj, &xi));
    }
    Ok(params.scalar_mul(&num, &params.scalar_inv(&den)))
}

/// Group commitment `R = prod_l D_l * E_l^{rho_l}` for the whole list.
pub fn group_commitment(
    params: &GroupParams,
    list: &CommitmentList,
    message: &[u8],
) -> GroupElement {
    let l_bytes = list.to_bytes(params);
    let mut r = params.identity();
    for (id, d, e) in list.entries() {
        let rho = params.h1(id.0, message, &l_bytes);
        r = params.mul_elements(&r, &params.mul_elements(d, &params.exp(e, &rho)));
    }
    r
}

fn sign_share_inner(
    params: &GroupParams,
    key: &KeyMaterial,
    d: &Scalar,
    e: &Scalar,
    message: &[u8],
    list: &CommitmentList,
) -> Result<SignatureShare, FrostError> {
    if list.len() < key.threshold as usize {
        return Err(FrostError::ListTooSmall {
            got: list.len(),
            needed: key.threshold as usize,
        });
    }
    if list.entry(key.id).is_none() {
        return Err(FrostError::MissingCommitment(key.id));
    }
    let l_bytes = list.to_bytes(params);
    let rho_i = params.h1(key.id.0, message, &l_bytes);
    let r = group_commitment(params, list, message);
    let c = params.h2(&r, &key.group_public_key, message);
    let lambda = lagrange_coefficient(params, key.id, &list.signer_set())?;
    // z_i = d_i + e_i * rho_i + lambda_i * s_i * c
    let z = params.scalar_add(
        &params.scalar_add(d, &params.scalar_mul(e, &rho_i)),
        &params.scalar_mul(&lambda, &params.scalar_mul(&key.secret_share, &c)),
    );
    Ok(SignatureShare { signer: key.id, z })
}

/// Produces this signer's share and consumes the nonce pair. A pair that was
/// already used is refused.
pub fn sign_share(
    params: &GroupParams,
    key: &KeyMaterial,
    nonce: &mut NonceCommitmentPair,
    message: &[u8],
    list: &CommitmentList,
) -> Result<SignatureShare, FrostError> {
    if nonce.used {
        return Err(FrostError::NonceReused);
    }
    // the signer's own entry in L must match the nonce commitments
    match list.entry(key.id) {
        Some((d, e)) if *d == nonce.big_d && *e == nonce.big_e => {}
        _ => return Err(FrostError::MissingCommitment(key.id)),
    }
    let share = sign_share_inner(params, key, &nonce.d, &nonce.e, message, list)?;
    nonce.used = true;
    Ok(share)
}

/// Signs with hierarchically derived nonces; single use per `(height, j)`
/// context is enforced by the caller's consumed-context set.
pub fn sign_share_derived(
    params: &GroupParams,
    key: &KeyMaterial,
    d: &Scalar,
    e: &Scalar,
    message: &[u8],
    list: &CommitmentList,
) -> Result<SignatureShare, FrostError> {
    sign_share_inner(params, key, d, e, message, list)
}

/// Share check: `g^{z_l} == R_l * Y_l^{c * lambda_l}` with
/// `R_l = D_l * E_l^{rho_l}`.
pub fn verify_share(
    params: &GroupParams,
    share: &SignatureShare,
    list: &CommitmentList,
    message: &[u8],
    verification_shares: &BTreeMap<ParticipantId, GroupElement>,
    group_public_key: &GroupElement,
) -> bool {
    let Some((big_d, big_e)) = list.entry(share.signer) else {
        return false;
    };
    let Some(y_l) = verification_shares.get(&share.signer) else {
        return false;
    };
    let Ok(lambda) = lagrange_coefficient(params, share.signer, &list.signer_set()) else {
        return false;
    };
    let l_bytes = list.to_bytes(params);
    let rho = params.h1(share.signer.0, message, &l_bytes);
    let r_full = group_commitment(params, list, message);
    let c = params.h2(&r_full, group_public_key, message);
    let r_l = params.mul_elements(big_d, &params.exp(big_e, &rho));
    params.g_pow(&share.z) == params.mul_elements(&r_l, &params.exp(y_l, &params.scalar_mul(&c, &lambda)))
}

/// Verifies every share and sums the responses into `(R, z)`. The first
/// invalid share aborts aggregation and names the signer.
pub fn aggregate(
    params: &GroupParams,
    shares: &[SignatureShare],
    list: &CommitmentList,
    message: &[u8],
    verification_shares: &BTreeMap<ParticipantId, GroupElement>,
    group_public_key: &GroupElement,
) -> Result<SchnorrSignature, FrostError> {
    if shares.len() != list.len() {
        return Err(FrostError::ShareCountMismatch {
            got: shares.len(),
            expected: list.len(),
        });
    }
    for share in shares {
        if !verify_share(
            params,
            share,
            list,
            message,
            verification_shares,
            group_public_key,
        ) {
            return Err(FrostError::InvalidShare(share.signer));
        }
    }
    let r = group_commitment(params, list, message);
    let z = shares.iter().fold(params.scalar_from_u64(0), |acc, s| {
        params.scalar_add(&acc, &s.z)
    });
    Ok(SchnorrSignature {
        r_bytes: params.encode_element(&r),
        z_bytes: params.encode_scalar(&z),
    })
}
