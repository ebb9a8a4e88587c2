//! A deterministic simulator and protocol library for a proof-of-authority
//! replacement of Bitcoin's proof-of-work: a federation of miners orders
//! blocks with a specialized PBFT and certifies each block with a single
//! aggregate threshold Schnorr signature, verified against amended
//! Signet-style validity rules.
//!
//! Module map:
//!
//! * [`group`] — prime-order group arithmetic, hash-to-scalar, plain Schnorr.
//! * [`frost`] — threshold key generation, nonce management, signature
//!   shares, and aggregation.
//! * [`chain`] — the simplified Bitcoin-like block and chain model with a
//!   detachable block solution.
//! * [`pbft`] — the specialized replica state machine (self-generated
//!   requests, signature-carrying commits, blockchain checkpoints, view
//!   change).
//! * [`fbft`] — the two certified-consensus layers: share-vector commits
//!   and the coordinator-driven session protocol.
//! * [`simnet`] — deterministic discrete-event network with fault injection.
//! * [`harness`] — scenario loading, requirement checks, metrics reports.

pub mod chain;
pub mod fbft;
pub mod frost;
pub mod group;
pub mod harness;
pub mod pbft;
pub mod simnet;

/// Serde adapter storing byte strings as lowercase hex in JSON.
pub mod hexbytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &Vec<u8>, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&hex::encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(de)?;
        hex::decode(&s).map_err(serde::de::Error::custom)
    }
}
