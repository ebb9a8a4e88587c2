//! Prime-order group arithmetic, hash-to-scalar functions, and plain Schnorr
//! signatures. Everything in the threshold-signing stack runs on top of this
//! module.
//!
//! Two ciphersuites are provided:
//!
//! * `tiny`: a Schnorr group, i.e. the order-`q` subgroup of `Z_p^*` for a
//!   small prime `q` (at most 1009). Small enough that test oracles can
//!   enumerate exponents, elements, or whole signature spaces exhaustively.
//! * `secp256k1`: the short Weierstrass curve used by Bitcoin, implemented
//!   over `num-bigint`. Not constant time; meant for realistic key and
//!   signature sizes, not production hardening.
//!
//! Encodings are canonical and fixed width per ciphersuite: scalars are
//! big-endian integers, elements are `ciphersuite`-defined byte strings.
//! These exact bytes feed the H1/H2 hashes and the block-solution format.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("invalid element encoding")]
    InvalidElement,
    #[error("invalid scalar encoding")]
    InvalidScalar,
    #[error("encoding has wrong length: expected {expected}, got {got}")]
    WrongLength { expected: usize, got: usize },
}

/// A scalar in `[0, q)`, always reduced modulo the group order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar(pub(crate) BigUint);

impl Scalar {
    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

/// A member of the prime-order group. The `Tiny` variant stores the residue
/// in `Z_p^*`; the `Point` variant stores an affine secp256k1 point, with
/// `None` as the identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupElement {
    Tiny(u64),
    Point(Option<(BigUint, BigUint)>),
}

/// A plain Schnorr signature: group commitment `R` and aggregate response `z`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchnorrSignature {
    #[serde(with = "crate::hexbytes")]
    pub r_bytes: Vec<u8>,
    #[serde(with = "crate::hexbytes")]
    pub z_bytes: Vec<u8>,
}

impl SchnorrSignature {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.r_bytes.clone();
        out.extend_from_slice(&self.z_bytes);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum GroupKind {
    Tiny { p: u64, q: u64, g: u64 },
    Secp256k1(Box<CurveConsts>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CurveConsts {
    p: BigUint,
    n: BigUint,
    gx: BigUint,
    gy: BigUint,
}

/// Group parameters: the prime order `q`, a generator, and the ciphersuite
/// identifier selecting the `(group, H1, H2)` triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupParams {
    kind: GroupKind,
    ciphersuite_id: String,
}

impl fmt::Display for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ciphersuite_id)
    }
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        exp >>= 1;
    }
    acc
}

impl GroupParams {
    /// The tiny Schnorr group of prime order `q` (q <= 1009). The modulus
    /// `p = kq + 1` and the generator are derived deterministically from `q`.
    pub fn tiny(q: u64) -> Self {
        assert!(q <= 1009 && is_prime_u64(q), "tiny group needs a prime q <= 1009");
        let mut k = 2u64;
        let p = loop {
            let cand = k * q + 1;
            if is_prime_u64(cand) {
                break cand;
            }
            k += 1;
        };
        let mut h = 2u64;
        let g = loop {
            let cand = powmod(h, k, p);
            if cand != 1 {
                debug_assert_eq!(powmod(cand, q, p), 1);
                break cand;
            }
            h += 1;
        };
        GroupParams {
            kind: GroupKind::Tiny { p, q, g },
            ciphersuite_id: format!("tiny-q{q}"),
        }
    }

    /// The Bitcoin curve with SHA-256 tagged hashes for H1/H2.
    pub fn secp256k1() -> Self {
        let hx = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).unwrap();
        GroupParams {
            kind: GroupKind::Secp256k1(Box::new(CurveConsts {
                p: hx("fffffffffffffffffffffffffffffffffffffffffffffffffffffffefffffc2f"),
                n: hx("fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141"),
                gx: hx("79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"),
                gy: hx("483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8"),
            })),
            ciphersuite_id: "secp256k1-sha256".to_string(),
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        if id == "secp256k1-sha256" {
            return Some(Self::secp256k1());
        }
        if let Some(q) = id.strip_prefix("tiny-q") {
            let q: u64 = q.parse().ok()?;
            return Some(Self::tiny(q));
        }
        None
    }

    pub fn ciphersuite_id(&self) -> &str {
        &self.ciphersuite_id
    }

    pub fn order(&self) -> BigUint {
        match &self.kind {
            GroupKind::Tiny { q, .. } => BigUint::from(*q),
            GroupKind::Secp256k1(c) => c.n.clone(),
        }
    }

    pub fn generator(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Tiny { g, .. } => GroupElement::Tiny(*g),
            GroupKind::Secp256k1(c) => GroupElement::Point(Some((c.gx.clone(), c.gy.clone()))),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match &self.kind {
            GroupKind::Tiny { .. } => GroupElement::Tiny(1),
            GroupKind::Secp256k1(_) => GroupElement::Point(None),
        }
    }

    // ---- scalar arithmetic (mod q) ----

    pub fn scalar_from_u64(&self, v: u64) -> Scalar {
        Scalar(BigUint::from(v) % self.order())
    }

    pub fn scalar_from_biguint(&self, v: BigUint) -> Scalar {
        Scalar(v % self.order())
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % self.order())
    }

    pub fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        let q = self.order();
        Scalar((&a.0 + &q - &b.0) % q)
    }

    pub fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % self.order())
    }

    pub fn scalar_neg(&self, a: &Scalar) -> Scalar {
        let q = self.order();
        Scalar((&q - &a.0) % q)
    }

    /// Multiplicative inverse mod q via Fermat's little theorem.
    pub fn scalar_inv(&self, a: &Scalar) -> Scalar {
        assert!(!a.is_zero(), "inverse of zero scalar");
        let q = self.order();
        let e = &q - BigUint::from(2u32);
        Scalar(a.0.modpow(&e, &q))
    }

    /// Uniform scalar in `[1, q)` drawn from the caller's seeded RNG.
    pub fn random_nonzero_scalar(&self, rng: &mut impl RngCore) -> Scalar {
        let q = self.order();
        let bytes = (q.bits() as usize).div_ceil(8) + 8;
        loop {
            let mut buf = vec![0u8; bytes];
            rng.fill_bytes(&mut buf);
            let v = BigUint::from_bytes_be(&buf) % &q;
            if !v.is_zero() {
                return Scalar(v);
            }
        }
    }

    // ---- group operations ----

    /// The group law ("multiplication" in the Schnorr-group notation).
    pub fn mul_elements(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (&self.kind, a, b) {
            (GroupKind::Tiny { p, .. }, GroupElement::Tiny(x), GroupElement::Tiny(y)) => {
                GroupElement::Tiny(mulmod(*x, *y, *p))
            }
            (GroupKind::Secp256k1(c), GroupElement::Point(x), GroupElement::Point(y)) => {
                GroupElement::Point(point_add(c, x, y))
            }
            _ => panic!("element does not belong to this group"),
        }
    }

    pub fn invert_element(&self, a: &GroupElement) -> GroupElement {
        match (&self.kind, a) {
            (GroupKind::Tiny { p, q, .. }, GroupElement::Tiny(x)) => {
                GroupElement::Tiny(powmod(*x, *q - 1, *p))
            }
            (GroupKind::Secp256k1(c), GroupElement::Point(pt)) => GroupElement::Point(
                pt.as_ref().map(|(x, y)| (x.clone(), (&c.p - y) % &c.p)),
            ),
            _ => panic!("element does not belong to this group"),
        }
    }

    /// `base^s` (scalar multiplication in curve notation).
    pub fn exp(&self, base: &GroupElement, s: &Scalar) -> GroupElement {
        match (&self.kind, base) {
            (GroupKind::Tiny { p, q, .. }, GroupElement::Tiny(x)) => {
                let e = (&s.0 % BigUint::from(*q))
                    .iter_u64_digits()
                    .next()
                    .unwrap_or(0);
                GroupElement::Tiny(powmod(*x, e, *p))
            }
            (GroupKind::Secp256k1(c), GroupElement::Point(pt)) => {
                let mut acc: Option<(BigUint, BigUint)> = None;
                let mut cur = pt.clone();
                let bits = s.0.bits();
                for i in 0..bits {
                    if s.0.bit(i) {
                        acc = point_add(c, &acc, &cur);
                    }
                    cur = point_add(c, &cur, &cur);
                }
                GroupElement::Point(acc)
            }
            _ => panic!("element does not belong to this group"),
        }
    }

    /// `g^s` for the fixed generator.
    pub fn g_pow(&self, s: &Scalar) -> GroupElement {
        self.exp(&self.generator(), s)
    }

    // ---- canonical encodings ----

    pub fn scalar_len(&self) -> usize {
        match &self.kind {
            GroupKind::Tiny { .. } => 8,
            GroupKind::Secp256k1(_) => 32,
        }
    }

    pub fn element_len(&self) -> usize {
        match &self.kind {
            GroupKind::Tiny { .. } => 8,
            GroupKind::Secp256k1(_) => 33,
        }
    }

    pub fn encode_scalar(&self, s: &Scalar) -> Vec<u8> {
        let mut out = s.0.to_bytes_be();
        let w = self.scalar_len();
        assert!(out.len() <= w);
        let mut buf = vec![0u8; w - out.len()];
        buf.append(&mut out);
        buf
    }

    pub fn decode_scalar(&self, bytes: &[u8]) -> Result<Scalar, GroupError> {
        if bytes.len() != self.scalar_len() {
            return Err(GroupError::WrongLength {
                expected: self.scalar_len(),
                got: bytes.len(),
            });
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.order() {
            return Err(GroupError::InvalidScalar);
        }
        Ok(Scalar(v))
    }

    pub fn encode_element(&self, e: &GroupElement) -> Vec<u8> {
        match (&self.kind, e) {
            (GroupKind::Tiny { .. }, GroupElement::Tiny(x)) => x.to_be_bytes().to_vec(),
            (GroupKind::Secp256k1(_), GroupElement::Point(None)) => vec![0u8; 33],
            (GroupKind::Secp256k1(_), GroupElement::Point(Some((x, y)))) => {
                let mut out = vec![if y.bit(0) { 0x03 } else { 0x02 }];
                let xb = x.to_bytes_be();
                out.extend(std::iter::repeat(0u8).take(32 - xb.len()));
                out.extend_from_slice(&xb);
                out
            }
            _ => panic!("element does not belong to this group"),
        }
    }

    pub fn decode_element(&self, bytes: &[u8]) -> Result<GroupElement, GroupError> {
        if bytes.len() != self.element_len() {
            return Err(GroupError::WrongLength {
                expected: self.element_len(),
                got: bytes.len(),
            });
        }
        match &self.kind {
            GroupKind::Tiny { p, q, .. } => {
                let x = u64::from_be_bytes(bytes.try_into().unwrap());
                if x == 0 || x >= *p || powmod(x, *q, *p) != 1 {
                    return Err(GroupError::InvalidElement);
                }
                Ok(GroupElement::Tiny(x))
            }
            GroupKind::Secp256k1(c) => {
                if bytes.iter().all(|&b| b == 0) {
                    return Ok(GroupElement::Point(None));
                }
                let tag = bytes[0];
                if tag != 0x02 && tag != 0x03 {
                    return Err(GroupError::InvalidElement);
                }
                let x = BigUint::from_bytes_be(&bytes[1..]);
                if x >= c.p {
                    return Err(GroupError::InvalidElement);
                }
                // y^2 = x^3 + 7; p = 3 mod 4, so sqrt is a modpow.
                let y2 = (x.modpow(&BigUint::from(3u32), &c.p) + BigUint::from(7u32)) % &c.p;
                let e = (&c.p + BigUint::one()) >> 2;
                let y = y2.modpow(&e, &c.p);
                if y.modpow(&BigUint::from(2u32), &c.p) != y2 {
                    return Err(GroupError::InvalidElement);
                }
                let y = if y.bit(0) == (tag == 0x03) { y } else { &c.p - &y };
                Ok(GroupElement::Point(Some((x, y))))
            }
        }
    }

    // ---- hashing ----

    /// Domain-separated tagged hash reduced into `[1, q)`.
    pub fn hash_to_scalar(&self, tag: &str, data: &[u8]) -> Scalar {
        let tag_digest = Sha256::digest(tag.as_bytes());
        let mut h = Sha256::new();
        h.update(tag_digest);
        h.update(tag_digest);
        h.update(self.ciphersuite_id.as_bytes());
        h.update(data);
        let digest = h.finalize();
        let q = self.order();
        let v = BigUint::from_bytes_be(&digest) % (&q - BigUint::one());
        Scalar(v + BigUint::one())
    }

    /// Binding-value hash over `(signer index, message, commitment list)`.
    pub fn h1(&self, signer_index: u32, message: &[u8], commitment_list: &[u8]) -> Scalar {
        let mut data = Vec::with_capacity(8 + message.len() + commitment_list.len());
        data.extend_from_slice(&signer_index.to_be_bytes());
        data.extend_from_slice(&(message.len() as u32).to_be_bytes());
        data.extend_from_slice(message);
        data.extend_from_slice(commitment_list);
        self.hash_to_scalar("FBFT/H1", &data)
    }

    /// Challenge hash over `(R, Y, message)`.
    pub fn h2(&self, r: &GroupElement, y: &GroupElement, message: &[u8]) -> Scalar {
        let mut data = Vec::new();
        data.extend_from_slice(&self.encode_element(r));
        data.extend_from_slice(&self.encode_element(y));
        data.extend_from_slice(&(message.len() as u32).to_be_bytes());
        data.extend_from_slice(message);
        self.hash_to_scalar("FBFT/H2", &data)
    }

    // ---- plain Schnorr ----

    pub fn schnorr_sign(
        &self,
        secret: &Scalar,
        message: &[u8],
        rng: &mut impl RngCore,
    ) -> SchnorrSignature {
        let public = self.g_pow(secret);
        let k = self.random_nonzero_scalar(rng);
        let r = self.g_pow(&k);
        let c = self.h2(&r, &public, message);
        let z = self.scalar_add(&k, &self.scalar_mul(&c, secret));
        SchnorrSignature {
            r_bytes: self.encode_element(&r),
            z_bytes: self.encode_scalar(&z),
        }
    }

    /// True iff `g^z == R * Y^c` with `c = H2(R, Y, message)`. Malformed
    /// encodings verify as false rather than erroring.
    pub fn schnorr_verify(
        &self,
        public_key: &GroupElement,
        message: &[u8],
        sig: &SchnorrSignature,
    ) -> bool {
        let (Ok(r), Ok(z)) = (
            self.decode_element(&sig.r_bytes),
            self.decode_scalar(&sig.z_bytes),
        ) else {
            return false;
        };
        let c = self.h2(&r, public_key, message);
        self.g_pow(&z) == self.mul_elements(&r, &self.exp(public_key, &c))
    }

    /// All elements of the tiny group, for exhaustive oracles.
    pub fn enumerate_tiny(&self) -> Vec<GroupElement> {
        match &self.kind {
            GroupKind::Tiny { q, .. } => {
                let g = self.generator();
                (0..*q)
                    .map(|e| self.exp(&g, &self.scalar_from_u64(e)))
                    .collect()
            }
            _ => panic!("enumerate_tiny is only defined on the tiny group"),
        }
    }
}

/// Affine point addition with full doubling/identity handling.
fn point_add(
    c: &CurveConsts,
    a: &Option<(BigUint, BigUint)>,
    b: &Option<(BigUint, BigUint)>,
) -> Option<(BigUint, BigUint)> {
    let p = &c.p;
    let (ax, ay) = match a {
        None => return b.clone(),
        Some(v) => v,
    };
    let (bx, by) = match b {
        None => return a.clone(),
        Some(v) => v,
    };
    let lambda = if ax == bx {
        if (ay + by) % p == BigUint::zero() {
            return None;
        }
        // doubling: (3x^2) / (2y)
        let num = (BigUint::from(3u32) * ax * ax) % p;
        let den = (BigUint::from(2u32) * ay) % p;
        (num * modinv(&den, p)) % p
    } else {
        let num = (by + p - ay) % p;
        let den = (bx + p - ax) % p;
        (num * modinv(&den, p)) % p
    };
    let x3 = (&lambda * &lambda + p + p - ax - bx) % p;
    let y3 = (&lambda * ((ax + p - &x3) % p) + p - ay) % p;
    Some((x3, y3))
}

fn modinv(a: &BigUint, p: &BigUint) -> BigUint {
    a.modpow(&(p - BigUint::from(2u32)), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn rng() -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(7)
    }

    #[test]
    fn tiny_group_construction() {
        for q in [11u64, 101, 251, 1009] {
            let g = GroupParams::tiny(q);
            let gen = g.generator();
            assert_eq!(g.exp(&gen, &g.scalar_from_u64(q)), g.identity());
            assert_ne!(gen, g.identity());
        }
    }

    #[test]
    fn exponent_arithmetic_exhaustive_q1009() {
        // g^a * g^b == g^{a+b} for all exponent pairs below q.
        let g = GroupParams::tiny(1009);
        let gen = g.generator();
        let pow: Vec<GroupElement> = g.enumerate_tiny();
        for a in 0..1009u64 {
            for b in 0..1009u64 {
                let lhs = g.mul_elements(&pow[a as usize], &pow[b as usize]);
                assert_eq!(lhs, pow[((a + b) % 1009) as usize]);
            }
        }
        assert_eq!(pow[0], g.identity());
        assert_eq!(pow[1], gen);
    }

    #[test]
    fn group_law_exhaustive_small() {
        // Associativity, identity, and inverses over every element triple of
        // a q=11 group (11^3 = 1331 triples).
        let g = GroupParams::tiny(11);
        let elems = g.enumerate_tiny();
        let id = g.identity();
        for a in &elems {
            assert_eq!(g.mul_elements(a, &id), *a);
            assert_eq!(g.mul_elements(a, &g.invert_element(a)), id);
            for b in &elems {
                for c in &elems {
                    let ab_c = g.mul_elements(&g.mul_elements(a, b), c);
                    let a_bc = g.mul_elements(a, &g.mul_elements(b, c));
                    assert_eq!(ab_c, a_bc);
                }
            }
        }
    }

    #[test]
    fn encodings_roundtrip_all_tiny_elements() {
        let g = GroupParams::tiny(251);
        for e in g.enumerate_tiny() {
            let bytes = g.encode_element(&e);
            assert_eq!(g.decode_element(&bytes).unwrap(), e);
        }
    }

    #[test]
    fn secp256k1_basics() {
        let g = GroupParams::secp256k1();
        let gen = g.generator();
        // nG = identity
        let n = g.order();
        assert_eq!(g.exp(&gen, &Scalar(n.clone())), g.identity());
        // 2G + G == 3G
        let two = g.scalar_from_u64(2);
        let three = g.scalar_from_u64(3);
        assert_eq!(
            g.mul_elements(&g.exp(&gen, &two), &gen),
            g.exp(&gen, &three)
        );
        // compressed encoding round trip
        let mut r = rng();
        for _ in 0..4 {
            let s = g.random_nonzero_scalar(&mut r);
            let e = g.g_pow(&s);
            assert_eq!(g.decode_element(&g.encode_element(&e)).unwrap(), e);
        }
    }

    #[test]
    fn h1_determinism_and_index_separation() {
        let g = GroupParams::tiny(1009);
        let l = b"commitment-list-bytes";
        let a = g.h1(1, b"msg", l);
        let b = g.h1(1, b"msg", l);
        assert_eq!(a, b);
        assert_ne!(g.h1(1, b"msg", l), g.h1(2, b"msg", l));
    }

    #[test]
    fn h2_message_sensitivity() {
        let g = GroupParams::tiny(1009);
        let r = g.g_pow(&g.scalar_from_u64(5));
        let y = g.g_pow(&g.scalar_from_u64(9));
        assert_eq!(g.h2(&r, &y, b"abc"), g.h2(&r, &y, b"abc"));
        assert_ne!(g.h2(&r, &y, b"abc"), g.h2(&r, &y, b"abd"));
    }

    #[test]
    fn h1_golden_vector_tiny() {
        // Frozen output of the reference hash layout:
        //   tagged = sha256("FBFT/H1"); sha256(tagged || tagged || id || data)
        // with data = be32(l) || be32(|m|) || m || L, reduced into [1, q).
        // Computed once with an independent sha256 implementation.
        let g = GroupParams::tiny(1009);
        let s = g.h1(3, b"golden", b"L-bytes");
        assert_eq!(s, g.scalar_from_u64(461));
    }

    #[test]
    fn schnorr_sign_verify() {
        for g in [GroupParams::tiny(1009), GroupParams::secp256k1()] {
            let mut r = rng();
            let sk = g.random_nonzero_scalar(&mut r);
            let pk = g.g_pow(&sk);
            let sig = g.schnorr_sign(&sk, b"block", &mut r);
            assert!(g.schnorr_verify(&pk, b"block", &sig));
            // z+1 breaks the equation
            let z = g.decode_scalar(&sig.z_bytes).unwrap();
            let bad = SchnorrSignature {
                r_bytes: sig.r_bytes.clone(),
                z_bytes: g.encode_scalar(&g.scalar_add(&z, &g.scalar_from_u64(1))),
            };
            assert!(!g.schnorr_verify(&pk, b"block", &bad));
            // malformed encodings fail closed
            let garbage = SchnorrSignature {
                r_bytes: vec![0xff; g.element_len()],
                z_bytes: sig.z_bytes.clone(),
            };
            assert!(!g.schnorr_verify(&pk, b"block", &garbage));
        }
    }

    #[test]
    fn schnorr_acceptance_set_brute_force() {
        // On the tiny group, for fixed (Y, m), exactly one z verifies per R.
        let g = GroupParams::tiny(101);
        let sk = g.scalar_from_u64(42);
        let pk = g.g_pow(&sk);
        let msg = b"acceptance-set";
        let elems = g.enumerate_tiny();
        for r_elem in &elems {
            let c = g.h2(r_elem, &pk, msg);
            let mut accepted = Vec::new();
            for z in 0..101u64 {
                let zs = g.scalar_from_u64(z);
                let sig = SchnorrSignature {
                    r_bytes: g.encode_element(r_elem),
                    z_bytes: g.encode_scalar(&zs),
                };
                if g.schnorr_verify(&pk, msg, &sig) {
                    accepted.push(zs.clone());
                }
            }
            // the unique solution is z = log_g(R) + c*sk; we check cardinality
            // and the verification equation directly
            assert_eq!(accepted.len(), 1);
            let z = &accepted[0];
            assert_eq!(g.g_pow(z), g.mul_elements(r_elem, &g.exp(&pk, &c)));
        }
    }
}
