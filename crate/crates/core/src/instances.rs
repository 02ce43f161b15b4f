//! Orthogonal-vectors and Hamming-close-pair instances: representation,
//! seeded generation, B-normalization and the JSON file format.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::oracles;

const WORD_BITS: usize = 64;

/// Rejection-sampling budget for planted-NO instances.
pub const MAX_RETRIES: usize = 1000;

/// A vector in `{0,1}^d`, packed 64 coordinates per word.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    d: usize,
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({})", self.to_bitstring())
    }
}

impl BitVector {
    pub fn zeros(d: usize) -> Self {
        BitVector { words: vec![0; d.div_ceil(WORD_BITS)], d }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    /// Builds from 0/1 integers; panics on other values.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            assert!(b <= 1, "bit values must be 0 or 1");
            v.set(i, b == 1);
        }
        v
    }

    /// Parses a string of '0'/'1' characters; index 0 is coordinate 1.
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let mut v = Self::zeros(s.chars().count());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set(i, true),
                other => return Err(format!("invalid bit character {other:?} at position {i}")),
            }
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.d);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.d);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.d).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.d).map(|i| self.get(i)).collect()
    }

    /// Number of differing coordinates. Dimensions must agree.
    pub(crate) fn xor_count(&self, other: &BitVector) -> usize {
        debug_assert_eq!(self.d, other.d);
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }

    /// Inner product over the integers. Dimensions must agree.
    pub(crate) fn and_count(&self, other: &BitVector) -> usize {
        debug_assert_eq!(self.d, other.d);
        self.words.iter().zip(&other.words).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    /// Inner product, checked.
    pub fn dot(&self, other: &BitVector) -> Result<usize> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: other.d });
        }
        Ok(self.and_count(other))
    }

    /// Bitwise complement.
    pub fn complement(&self) -> BitVector {
        let mut v = self.clone();
        for i in 0..self.d {
            v.flip(i);
        }
        v
    }

    /// `self` followed by `extra`.
    pub fn concat(&self, extra: &BitVector) -> BitVector {
        let mut v = BitVector::zeros(self.d + extra.d);
        for i in 0..self.d {
            v.set(i, self.get(i));
        }
        for i in 0..extra.d {
            v.set(self.d + i, extra.get(i));
        }
        v
    }

    fn random<R: Rng>(rng: &mut R, d: usize, density: f64) -> Self {
        let mut v = Self::zeros(d);
        for i in 0..d {
            v.set(i, rng.gen_bool(density));
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ProblemKind {
    #[serde(rename = "OVP")]
    Ovp,
    #[serde(rename = "BHCP")]
    Bhcp,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Ovp => "OVP",
            ProblemKind::Bhcp => "BHCP",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OVP" => Ok(ProblemKind::Ovp),
            "BHCP" => Ok(ProblemKind::Bhcp),
            _ => Err(Error::Parse { field: "kind".into(), message: format!("unknown problem kind {s:?}") }),
        }
    }
}

/// Which label the generator must realize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planted {
    Yes,
    No,
    Random,
}

/// An OVP or BHCP input: the sets `A`, `B` in `{0,1}^d` and, for BHCP, the
/// Hamming threshold `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorPairInstance {
    pub kind: ProblemKind,
    pub a: Vec<BitVector>,
    pub b: Vec<BitVector>,
    pub d: usize,
    pub t: Option<usize>,
    pub normalized: bool,
    pub seed: Option<u64>,
}

impl VectorPairInstance {
    /// Checks every structural invariant.
    pub fn new(
        kind: ProblemKind,
        a: Vec<BitVector>,
        b: Vec<BitVector>,
        d: usize,
        t: Option<usize>,
        normalized: bool,
        seed: Option<u64>,
    ) -> Result<Self> {
        let inst = VectorPairInstance { kind, a, b, d, t, normalized, seed };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Validation("dimension d must be positive".into()));
        }
        for (name, set) in [("A", &self.a), ("B", &self.b)] {
            for (i, v) in set.iter().enumerate() {
                if v.dim() != self.d {
                    return Err(Error::Validation(format!(
                        "{name}[{i}] has dimension {} but d = {}",
                        v.dim(),
                        self.d
                    )));
                }
            }
        }
        match (self.kind, self.t) {
            (ProblemKind::Bhcp, None) => return Err(Error::Validation("BHCP instance requires threshold t".into())),
            (ProblemKind::Bhcp, Some(t)) if t < 2 || t > self.d => {
                return Err(Error::Validation(format!("threshold t = {t} outside {{2, ..., {}}}", self.d)))
            }
            _ => {}
        }
        if self.normalized {
            if let Some(first) = self.b.first() {
                let ones = first.count_ones();
                if let Some(j) = self.b.iter().position(|v| v.count_ones() != ones) {
                    return Err(Error::Validation(format!("normalized instance: B[{j}] has a different number of ones")));
                }
            }
            if let Some((i, j)) = first_duplicate(&self.b) {
                return Err(Error::Validation(format!("normalized instance: B[{i}] and B[{j}] coincide")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn threshold(&self) -> Result<usize> {
        self.t.ok_or_else(|| Error::Validation("instance has no threshold t".into()))
    }

    /// Errors unless every vector of `A ∪ B` is distinct.
    pub fn require_distinct_points(&self) -> Result<()> {
        let all: Vec<BitVector> = self.a.iter().chain(&self.b).cloned().collect();
        if let Some((i, j)) = first_duplicate(&all) {
            return Err(Error::Validation(format!(
                "points {} and {} of A ∪ B coincide; the kernel matrix would be singular",
                label(i, self.n()),
                label(j, self.n())
            )));
        }
        Ok(())
    }

    /// Canonical JSON text (field order fixed, trailing newline).
    pub fn to_json_string(&self) -> String {
        let value = json!({
            "kind": self.kind.as_str(),
            "n": self.n(),
            "m": self.m(),
            "d": self.d,
            "t": self.t,
            "normalized": self.normalized,
            "seed": self.seed,
            "A": self.a.iter().map(BitVector::to_bitstring).collect::<Vec<_>>(),
            "B": self.b.iter().map(BitVector::to_bitstring).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&value).expect("instance JSON serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Parse { field: "<document>".into(), message: e.to_string() })?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse { field: "<document>".into(), message: "expected a JSON object".into() })?;

        let kind: ProblemKind = get_str(obj, "kind")?.parse()?;
        let n = get_usize(obj, "n")?;
        let m = get_usize(obj, "m")?;
        let d = get_usize(obj, "d")?;
        let t = match obj.get("t") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| parse_err("t", "expected a non-negative integer or null"))? as usize),
        };
        let normalized = obj
            .get("normalized")
            .ok_or_else(|| parse_err("normalized", "missing field"))?
            .as_bool()
            .ok_or_else(|| parse_err("normalized", "expected a boolean"))?;
        let seed = match obj.get("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| parse_err("seed", "expected a non-negative integer or null"))?),
        };
        let a = get_vectors(obj, "A", d)?;
        let b = get_vectors(obj, "B", d)?;
        if a.len() != n {
            return Err(Error::Validation(format!("header n = {n} but A has {} vectors", a.len())));
        }
        if b.len() != m {
            return Err(Error::Validation(format!("header m = {m} but B has {} vectors", b.len())));
        }
        Self::new(kind, a, b, d, t, normalized, seed)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }
}

fn label(i: usize, n: usize) -> String {
    if i < n {
        format!("A[{i}]")
    } else {
        format!("B[{}]", i - n)
    }
}

fn parse_err(field: &str, message: &str) -> Error {
    Error::Parse { field: field.into(), message: message.into() }
}

fn get_str<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a str> {
    obj.get(field)
        .ok_or_else(|| parse_err(field, "missing field"))?
        .as_str()
        .ok_or_else(|| parse_err(field, "expected a string"))
}

fn get_usize(obj: &Map<String, Value>, field: &str) -> Result<usize> {
    obj.get(field)
        .ok_or_else(|| parse_err(field, "missing field"))?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| parse_err(field, "expected a non-negative integer"))
}

fn get_vectors(obj: &Map<String, Value>, field: &str, d: usize) -> Result<Vec<BitVector>> {
    let arr = obj
        .get(field)
        .ok_or_else(|| parse_err(field, "missing field"))?
        .as_array()
        .ok_or_else(|| parse_err(field, "expected an array of bitstrings"))?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| {
            let name = format!("{field}[{i}]");
            let s = v.as_str().ok_or_else(|| parse_err(&name, "expected a bitstring"))?;
            let bv = BitVector::parse(s).map_err(|m| parse_err(&name, &m))?;
            if bv.dim() != d {
                return Err(Error::Validation(format!("{name} has length {} but header d = {d}", bv.dim())));
            }
            Ok(bv)
        })
        .collect()
}

fn first_duplicate(vs: &[BitVector]) -> Option<(usize, usize)> {
    let mut seen = std::collections::HashMap::with_capacity(vs.len());
    for (j, v) in vs.iter().enumerate() {
        if let Some(&i) = seen.get(v) {
            return Some((i, j));
        }
        seen.insert(v, j);
    }
    None
}

/// Default dimension for an experiment of size `n`: `max(4, ceil(log2(n)^2))`.
pub fn default_dimension(n: usize) -> usize {
    let l = (n.max(2) as f64).log2();
    ((l * l - 1e-9).ceil() as usize).max(4)
}

/// Default Hamming threshold for dimension `d`: `max(2, ceil(d / 5))`.
pub fn default_threshold(d: usize) -> usize {
    d.div_ceil(5).clamp(2, d.max(2))
}

/// Parameters of [`generate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerateParams {
    pub kind: ProblemKind,
    pub n: usize,
    pub d: usize,
    /// Required for BHCP, ignored for OVP.
    pub t: Option<usize>,
    pub planted: Planted,
    pub seed: u64,
}

/// A generated instance together with the pair the generator planted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub instance: VectorPairInstance,
    pub planted_witness: Option<(usize, usize)>,
}

/// Seeded instance generator.
///
/// `Planted::Yes` embeds a witness (an orthogonal pair, or a pair at
/// Hamming distance exactly `t - 1`); `Planted::No` rejection-samples until
/// the brute-force oracle confirms there is none. BHCP instances always
/// have pairwise distinct points in `A ∪ B`; OVP instances have distinct
/// `B` vectors so they can be normalized.
pub fn generate(params: &GenerateParams) -> Result<Generated> {
    let GenerateParams { kind, n, d, t, planted, seed } = *params;
    if d < 2 {
        return Err(Error::Parameter(format!("dimension d = {d} must be at least 2")));
    }
    if n == 0 {
        return Err(Error::Parameter("instance size n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        ProblemKind::Ovp => generate_ovp(&mut rng, n, d, planted, seed),
        ProblemKind::Bhcp => {
            let t = t.ok_or_else(|| Error::Parameter("BHCP generation requires t".into()))?;
            if t < 2 || t > d {
                return Err(Error::Parameter(format!("threshold t = {t} outside {{2, ..., {d}}}")));
            }
            generate_bhcp(&mut rng, n, d, t, planted, seed)
        }
    }
}

/// Bit density for OVP sampling: at least 1/2, raised so that a random
/// instance has about one orthogonal pair in expectation.
fn ovp_density(n: usize, d: usize) -> f64 {
    let target = (n as f64).powf(-2.0 / d as f64);
    (1.0 - target).sqrt().max(0.5)
}

fn generate_ovp(rng: &mut ChaCha8Rng, n: usize, d: usize, planted: Planted, seed: u64) -> Result<Generated> {
    let p = ovp_density(n, d);
    for _ in 0..MAX_RETRIES {
        let a: Vec<BitVector> = (0..n).map(|_| BitVector::random(rng, d, p)).collect();
        let mut b: Vec<BitVector> = (0..n).map(|_| BitVector::random(rng, d, p)).collect();
        let mut witness = None;
        if planted == Planted::Yes {
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            for k in 0..d {
                if a[i].get(k) && b[j].get(k) {
                    b[j].set(k, false);
                }
            }
            witness = Some((i, j));
        }
        if first_duplicate(&b).is_some() {
            continue;
        }
        let inst = VectorPairInstance::new(ProblemKind::Ovp, a, b, d, None, false, Some(seed))?;
        let verdict = oracles::solve_ovp(&inst)?;
        match planted {
            Planted::No if verdict.has_pair => continue,
            Planted::Yes => debug_assert!(verdict.has_pair),
            _ => {}
        }
        return Ok(Generated { instance: inst, planted_witness: witness });
    }
    Err(Error::Generation(format!(
        "no OVP instance with n = {n}, d = {d}, planted = {planted:?} after {MAX_RETRIES} attempts"
    )))
}

fn distinct_set(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Option<Vec<BitVector>> {
    let mut out: Vec<BitVector> = Vec::with_capacity(n);
    'outer: for _ in 0..n {
        for _ in 0..100 {
            let v = BitVector::random(rng, d, 0.5);
            if !out.contains(&v) {
                out.push(v);
                continue 'outer;
            }
        }
        return None;
    }
    Some(out)
}

fn generate_bhcp(rng: &mut ChaCha8Rng, n: usize, d: usize, t: usize, planted: Planted, seed: u64) -> Result<Generated> {
    for _ in 0..MAX_RETRIES {
        let Some(a) = distinct_set(rng, n, d) else { continue };
        let mut witness = None;
        let b = match planted {
            Planted::No => {
                let mut b: Vec<BitVector> = Vec::with_capacity(n);
                for _ in 0..n {
                    let found = (0..100).map(|_| BitVector::random(rng, d, 0.5)).find(|v| {
                        !b.contains(v) && a.iter().all(|x| x.xor_count(v) >= t)
                    });
                    match found {
                        Some(v) => b.push(v),
                        None => break,
                    }
                }
                if b.len() < n {
                    continue;
                }
                b
            }
            Planted::Yes | Planted::Random => {
                let Some(mut b) = distinct_set(rng, n, d) else { continue };
                if planted == Planted::Yes {
                    let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
                    let mut v = a[i].clone();
                    for k in sample(rng, d, t - 1).into_iter() {
                        v.flip(k);
                    }
                    b[j] = v;
                    witness = Some((i, j));
                }
                b
            }
        };
        let inst = VectorPairInstance::new(ProblemKind::Bhcp, a, b, d, Some(t), false, Some(seed))?;
        if inst.require_distinct_points().is_err() {
            continue;
        }
        let verdict = oracles::solve_bhcp(&inst)?;
        if planted == Planted::No && verdict.has_pair {
            continue;
        }
        return Ok(Generated { instance: inst, planted_witness: witness });
    }
    Err(Error::Generation(format!(
        "no BHCP instance with n = {n}, d = {d}, t = {t}, planted = {planted:?} after {MAX_RETRIES} attempts"
    )))
}

/// Pads every `B` vector with `d` coordinates, the lowest-index ones set so
/// that each padded vector has exactly `d` ones, and pads `A` with `d`
/// zeros. Inner products `a^T b` are unchanged.
///
/// Only OVP instances can be normalized; padding would shift the Hamming
/// distances of a BHCP instance unevenly.
pub fn normalize(inst: &VectorPairInstance) -> Result<VectorPairInstance> {
    if inst.kind != ProblemKind::Ovp {
        return Err(Error::Validation("normalization is defined for OVP instances only".into()));
    }
    if let Some((i, j)) = first_duplicate(&inst.b) {
        return Err(Error::Validation(format!("B[{i}] and B[{j}] coincide; normalization needs distinct B vectors")));
    }
    let d = inst.d;
    let a = inst.a.iter().map(|v| v.concat(&BitVector::zeros(d))).collect();
    let b: Vec<BitVector> = inst
        .b
        .iter()
        .map(|v| {
            let fill = d - v.count_ones();
            let mut pad = BitVector::zeros(d);
            for k in 0..fill {
                pad.set(k, true);
            }
            v.concat(&pad)
        })
        .collect();
    if let Some((i, j)) = first_duplicate(&b) {
        return Err(Error::Validation(format!("padded B[{i}] and B[{j}] coincide")));
    }
    VectorPairInstance::new(ProblemKind::Ovp, a, b, 2 * d, inst.t, true, inst.seed)
}
