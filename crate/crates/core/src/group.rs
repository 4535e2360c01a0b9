//! Element arithmetic for the three group models used throughout the crate:
//! free groups of finite rank (reduced words), integer lattices, and the
//! affine maps `x -> 2^m x + b` with dyadic `b`.
//!
//! Words are reduced eagerly and are immutable afterwards; every operation
//! returns fresh values. The canonical order on words is (length, then
//! letter-lexicographic with `a1 < a1' < a2 < a2' < ...`); all deterministic
//! searches in the crate scan in this order.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One symmetric generator: `Letter(i)` is the generator `a_i` when `i > 0`
/// and its inverse when `i < 0`. Zero is not a letter.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter(i8);

impl Letter {
    pub fn new(value: i8) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidArgument("letter index 0".into()));
        }
        Ok(Letter(value))
    }

    /// Generator index, 1-based.
    pub fn index(self) -> u8 {
        self.0.unsigned_abs()
    }

    pub fn is_inverse(self) -> bool {
        self.0 < 0
    }

    pub fn inverse(self) -> Letter {
        Letter(-self.0)
    }

    pub fn raw(self) -> i8 {
        self.0
    }

    /// Key realizing the canonical order `a1 < a1' < a2 < a2' < ...`.
    fn key(self) -> (u8, bool) {
        (self.index(), self.is_inverse())
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}{}", self.index(), if self.is_inverse() { "'" } else { "" })
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Letter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad letter {s:?}, expected e.g. \"a2\" or \"a2'\""));
        let body = s.strip_prefix('a').ok_or_else(bad)?;
        let (digits, inv) = match body.strip_suffix('\'') {
            Some(d) => (d, true),
            None => (body, false),
        };
        let idx: i8 = digits.parse().map_err(|_| bad())?;
        if idx <= 0 {
            return Err(bad());
        }
        Ok(Letter(if inv { -idx } else { idx }))
    }
}

/// The symmetric alphabet `S = {a1, a1', ..., ar, ar'}` of a rank-`r` free group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    rank: u32,
}

impl Alphabet {
    pub fn new(rank: u32) -> Result<Self> {
        if rank == 0 || rank > 64 {
            return Err(Error::InvalidArgument(format!(
                "rank must be in 1..=64, got {rank}"
            )));
        }
        Ok(Alphabet { rank })
    }

    pub fn rank(self) -> u32 {
        self.rank
    }

    pub fn size(self) -> u64 {
        2 * self.rank as u64
    }

    /// All letters in canonical order.
    pub fn letters(self) -> impl Iterator<Item = Letter> {
        (1..=self.rank as i8).flat_map(|i| [Letter(i), Letter(-i)])
    }

    pub fn contains(self, l: Letter) -> bool {
        (l.index() as u32) <= self.rank
    }

    pub fn validate_word(self, w: &ReducedWord) -> Result<()> {
        match w.letters().iter().find(|l| !self.contains(**l)) {
            None => Ok(()),
            Some(l) => Err(Error::InvalidArgument(format!(
                "letter {l} outside alphabet of rank {}",
                self.rank
            ))),
        }
    }

    /// `|S_k| = 2r(2r-1)^{k-1}` for `k >= 1`, `1` for `k = 0`.
    pub fn sphere_size(self, k: u32) -> u64 {
        if k == 0 {
            return 1;
        }
        let q = 2 * self.rank as u64 - 1;
        2 * self.rank as u64 * q.pow(k - 1)
    }

    pub fn ball_size(self, k: u32) -> u64 {
        (0..=k).map(|j| self.sphere_size(j)).sum()
    }
}

/// A reduced word in a free group. The empty word is the identity `e`.
/// No two adjacent letters are mutually inverse; this is established on
/// construction and preserved by all operations.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ReducedWord {
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord { letters: Vec::new() }
    }

    /// Builds a word from raw letters, cancelling adjacent inverse pairs.
    pub fn from_letters(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        ReducedWord { letters: out }
    }

    /// Wraps letters known to be reduced already. Checked in debug builds.
    pub(crate) fn from_reduced(letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[0] != w[1].inverse()));
        ReducedWord { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    /// Group multiplication: concatenate and cancel at the junction.
    pub fn concat(&self, rhs: &ReducedWord) -> ReducedWord {
        let mut out = self.letters.clone();
        for &l in &rhs.letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        ReducedWord { letters: out }
    }

    pub fn inverse(&self) -> ReducedWord {
        ReducedWord {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    pub fn push(&self, l: Letter) -> ReducedWord {
        let mut out = self.letters.clone();
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
        ReducedWord { letters: out }
    }

    pub fn prefix(&self, n: usize) -> ReducedWord {
        ReducedWord {
            letters: self.letters[..n.min(self.letters.len())].to_vec(),
        }
    }

    pub fn starts_with(&self, prefix: &ReducedWord) -> bool {
        self.letters.len() >= prefix.letters.len()
            && self.letters[..prefix.letters.len()] == prefix.letters[..]
    }

    pub fn power(&self, n: u32) -> ReducedWord {
        let mut out = ReducedWord::identity();
        for _ in 0..n {
            out = out.concat(self);
        }
        out
    }
}

impl Ord for ReducedWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl PartialOrd for ReducedWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "e");
        }
        let mut first = true;
        for l in &self.letters {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for ReducedWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "e" || s.is_empty() {
            return Ok(ReducedWord::identity());
        }
        let letters = s
            .split_whitespace()
            .map(Letter::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(ReducedWord::from_letters(letters))
    }
}

impl Serialize for ReducedWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ReducedWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// A point of `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LatticeElement {
    coords: Vec<i64>,
}

impl LatticeElement {
    pub fn new(coords: Vec<i64>) -> Self {
        LatticeElement { coords }
    }

    pub fn zero(dim: usize) -> Self {
        LatticeElement { coords: vec![0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn add(&self, rhs: &LatticeElement) -> LatticeElement {
        LatticeElement {
            coords: self
                .coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn neg(&self) -> LatticeElement {
        LatticeElement {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    /// Word length with respect to the standard generators, i.e. the l1 norm.
    pub fn norm(&self) -> u64 {
        self.coords.iter().map(|c| c.unsigned_abs()).sum()
    }
}

impl Ord for LatticeElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.norm()
            .cmp(&other.norm())
            .then_with(|| self.coords.cmp(&other.coords))
    }
}

impl PartialOrd for LatticeElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LatticeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl FromStr for LatticeElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let body = s
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .unwrap_or(s);
        let coords = body
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Parse(format!("bad integer coordinate in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if coords.is_empty() {
            return Err(Error::Parse(format!("empty lattice element {s:?}")));
        }
        Ok(LatticeElement { coords })
    }
}

/// An exact dyadic rational `mantissa * 2^exp`, canonicalized so the mantissa
/// is odd (or the value is zero with exp 0).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Dyadic {
    mantissa: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { mantissa: BigInt::zero(), exp: 0 }
    }

    pub fn new(mantissa: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { mantissa, exp };
        d.normalize();
        d
    }

    pub fn from_integer(n: i64) -> Self {
        Dyadic::new(BigInt::from(n), 0)
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exp = 0;
            return;
        }
        if let Some(tz) = self.mantissa.trailing_zeros() {
            if tz > 0 {
                self.mantissa >>= tz;
                self.exp += tz as i64;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn add(&self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(rhs.exp);
        let a = &self.mantissa << (self.exp - e) as u64;
        let b = &rhs.mantissa << (rhs.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic { mantissa: -self.mantissa.clone(), exp: self.exp }
    }

    /// Multiplies by `2^k`.
    pub fn shift(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mantissa: self.mantissa.clone(), exp: self.exp + k }
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mantissa << self.exp as u64)
        } else {
            BigRational::new(self.mantissa.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    pub fn to_f64(&self) -> f64 {
        let r = self.to_rational();
        num::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN)
    }

    /// Exponent of the largest power of two not exceeding |value|; a cheap
    /// magnitude proxy used by divergence guards.
    pub fn magnitude_exp(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.mantissa.abs().bits() as i64 - 1 + self.exp)
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        // Compare m1*2^e1 with m2*2^e2 by aligning to the smaller exponent.
        let e = self.exp.min(other.exp);
        let a = &self.mantissa << (self.exp - e) as u64;
        let b = &other.mantissa << (other.exp - e) as u64;
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.to_rational();
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = num
            .parse()
            .map_err(|_| Error::Parse(format!("bad dyadic numerator in {s:?}")))?;
        let d: BigInt = den
            .parse()
            .map_err(|_| Error::Parse(format!("bad dyadic denominator in {s:?}")))?;
        if d <= BigInt::zero() {
            return Err(Error::Parse(format!("dyadic denominator must be positive in {s:?}")));
        }
        let tz = d.trailing_zeros().unwrap_or(0);
        if (&d >> tz) != BigInt::one() {
            return Err(Error::Parse(format!(
                "denominator of {s:?} is not a power of two"
            )));
        }
        Ok(Dyadic::new(n, -(tz as i64)))
    }
}

/// An affine map `x -> 2^m x + b` with dyadic offset `b`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AffineElement {
    log_scale: i64,
    offset: Dyadic,
}

impl AffineElement {
    pub fn new(log_scale: i64, offset: Dyadic) -> Self {
        AffineElement { log_scale, offset }
    }

    pub fn identity() -> Self {
        AffineElement { log_scale: 0, offset: Dyadic::zero() }
    }

    pub fn log_scale(&self) -> i64 {
        self.log_scale
    }

    pub fn offset(&self) -> &Dyadic {
        &self.offset
    }

    /// Composition `(g.h)(x) = g(h(x))`.
    pub fn compose(&self, rhs: &AffineElement) -> AffineElement {
        AffineElement {
            log_scale: self.log_scale + rhs.log_scale,
            offset: rhs.offset.shift(self.log_scale).add(&self.offset),
        }
    }

    pub fn inverse(&self) -> AffineElement {
        AffineElement {
            log_scale: -self.log_scale,
            offset: self.offset.neg().shift(-self.log_scale),
        }
    }

    pub fn apply(&self, x: &Dyadic) -> Dyadic {
        x.shift(self.log_scale).add(&self.offset)
    }
}

impl Ord for AffineElement {
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_scale
            .cmp(&other.log_scale)
            .then_with(|| self.offset.cmp(&other.offset))
    }
}

impl PartialOrd for AffineElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for AffineElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{}*x+{}", self.log_scale, self.offset)
    }
}

impl FromStr for AffineElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad affine element {s:?}, expected \"2^m*x+p/q\""));
        let rest = s.trim().strip_prefix("2^").ok_or_else(bad)?;
        let (m, rest) = rest.split_once("*x+").ok_or_else(bad)?;
        let log_scale: i64 = m.parse().map_err(|_| bad())?;
        let offset: Dyadic = rest.parse()?;
        Ok(AffineElement { log_scale, offset })
    }
}

/// Which group a value lives in. Carried by measures, sets and configs so
/// that elements of different groups are never mixed silently.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Free { rank: u32 },
    Lattice { dim: u32 },
    Affine,
}

impl Model {
    pub fn identity(self) -> GroupElement {
        match self {
            Model::Free { .. } => GroupElement::Free(ReducedWord::identity()),
            Model::Lattice { dim } => GroupElement::Lattice(LatticeElement::zero(dim as usize)),
            Model::Affine => GroupElement::Affine(AffineElement::identity()),
        }
    }

    pub fn admits(self, g: &GroupElement) -> bool {
        match (self, g) {
            (Model::Free { rank }, GroupElement::Free(w)) => {
                w.letters().iter().all(|l| (l.index() as u32) <= rank)
            }
            (Model::Lattice { dim }, GroupElement::Lattice(v)) => v.dim() == dim as usize,
            (Model::Affine, GroupElement::Affine(_)) => true,
            _ => false,
        }
    }

    pub fn check(self, g: &GroupElement) -> Result<()> {
        if self.admits(g) {
            Ok(())
        } else {
            Err(Error::ModelMismatch {
                expected: format!("{self:?}"),
                found: g.describe(),
            })
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Free { rank } => write!(f, "free({rank})"),
            Model::Lattice { dim } => write!(f, "lattice({dim})"),
            Model::Affine => write!(f, "affine"),
        }
    }
}

/// The universal element role: a reduced word, a lattice vector, or an
/// affine map, depending on the active model.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum GroupElement {
    Free(ReducedWord),
    Lattice(LatticeElement),
    Affine(AffineElement),
}

impl GroupElement {
    pub fn word(w: ReducedWord) -> Self {
        GroupElement::Free(w)
    }

    pub fn describe(&self) -> String {
        match self {
            GroupElement::Free(_) => "free-group word".into(),
            GroupElement::Lattice(v) => format!("lattice({})", v.dim()),
            GroupElement::Affine(_) => "affine map".into(),
        }
    }

    pub fn as_word(&self) -> Result<&ReducedWord> {
        match self {
            GroupElement::Free(w) => Ok(w),
            other => Err(Error::ModelMismatch {
                expected: "free-group word".into(),
                found: other.describe(),
            }),
        }
    }

    pub fn as_lattice(&self) -> Result<&LatticeElement> {
        match self {
            GroupElement::Lattice(v) => Ok(v),
            other => Err(Error::ModelMismatch {
                expected: "lattice vector".into(),
                found: other.describe(),
            }),
        }
    }

    /// Word length (free), l1 norm (lattice). Affine maps carry no word norm.
    pub fn norm(&self) -> Option<u64> {
        match self {
            GroupElement::Free(w) => Some(w.len() as u64),
            GroupElement::Lattice(v) => Some(v.norm()),
            GroupElement::Affine(_) => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            GroupElement::Free(w) => w.is_empty(),
            GroupElement::Lattice(v) => v.coords().iter().all(|c| *c == 0),
            GroupElement::Affine(a) => *a == AffineElement::identity(),
        }
    }
}

impl Ord for GroupElement {
    fn cmp(&self, other: &Self) -> Ordering {
        use GroupElement::*;
        match (self, other) {
            (Free(a), Free(b)) => a.cmp(b),
            (Lattice(a), Lattice(b)) => a.cmp(b),
            (Affine(a), Affine(b)) => a.cmp(b),
            (Free(_), _) => Ordering::Less,
            (_, Free(_)) => Ordering::Greater,
            (Lattice(_), _) => Ordering::Less,
            (_, Lattice(_)) => Ordering::Greater,
        }
    }
}

impl PartialOrd for GroupElement {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupElement::Free(w) => write!(f, "{w}"),
            GroupElement::Lattice(v) => write!(f, "{v}"),
            GroupElement::Affine(a) => write!(f, "{a}"),
        }
    }
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_element(&text).map_err(serde::de::Error::custom)
    }
}

/// Parses an element in any model from its canonical text form.
pub fn parse_element(s: &str) -> Result<GroupElement> {
    let t = s.trim();
    if t.starts_with("2^") {
        return Ok(GroupElement::Affine(t.parse()?));
    }
    if t.starts_with('(') || t.parse::<i64>().is_ok() {
        return Ok(GroupElement::Lattice(t.parse()?));
    }
    Ok(GroupElement::Free(t.parse()?))
}

/// Group multiplication across models. Mixing models is an error.
pub fn multiply(a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    use GroupElement::*;
    match (a, b) {
        (Free(x), Free(y)) => Ok(Free(x.concat(y))),
        (Lattice(x), Lattice(y)) => {
            if x.dim() != y.dim() {
                return Err(Error::ModelMismatch {
                    expected: format!("lattice({})", x.dim()),
                    found: format!("lattice({})", y.dim()),
                });
            }
            Ok(Lattice(x.add(y)))
        }
        (Affine(x), Affine(y)) => Ok(Affine(x.compose(y))),
        _ => Err(Error::ModelMismatch {
            expected: a.describe(),
            found: b.describe(),
        }),
    }
}

pub fn invert(g: &GroupElement) -> GroupElement {
    match g {
        GroupElement::Free(w) => GroupElement::Free(w.inverse()),
        GroupElement::Lattice(v) => GroupElement::Lattice(v.neg()),
        GroupElement::Affine(a) => GroupElement::Affine(a.inverse()),
    }
}

/// The sphere `S_k`: all reduced words of length exactly `k`.
#[derive(Clone, Debug)]
pub struct Sphere {
    pub radius: u32,
    pub words: Vec<ReducedWord>,
}

/// Iterates over `S_k` in canonical order without materializing it.
pub struct SphereIter {
    alphabet: Alphabet,
    k: u32,
    current: Option<Vec<Letter>>,
    started: bool,
}

/// Least admissible letter after `prev` (None at the first position).
fn least_after(alphabet: Alphabet, prev: Option<Letter>) -> Letter {
    alphabet
        .letters()
        .find(|l| Some(l.inverse()) != prev)
        .expect("rank >= 1 always leaves an admissible letter")
}

/// Next letter strictly after `l` in canonical order admissible after `prev`.
fn next_after(alphabet: Alphabet, l: Letter, prev: Option<Letter>) -> Option<Letter> {
    alphabet
        .letters()
        .find(|c| *c > l && Some(c.inverse()) != prev)
}

impl Iterator for SphereIter {
    type Item = ReducedWord;

    fn next(&mut self) -> Option<ReducedWord> {
        if self.k == 0 {
            if self.started {
                return None;
            }
            self.started = true;
            return Some(ReducedWord::identity());
        }
        let a = self.alphabet;
        if !self.started {
            self.started = true;
            let mut w = Vec::with_capacity(self.k as usize);
            for i in 0..self.k as usize {
                let prev = if i == 0 { None } else { Some(w[i - 1]) };
                w.push(least_after(a, prev));
            }
            self.current = Some(w);
            return self.current.clone().map(ReducedWord::from_reduced);
        }
        let w = self.current.as_mut()?;
        let mut pos = self.k as usize;
        loop {
            if pos == 0 {
                self.current = None;
                return None;
            }
            pos -= 1;
            let prev = if pos == 0 { None } else { Some(w[pos - 1]) };
            if let Some(next) = next_after(a, w[pos], prev) {
                w[pos] = next;
                for i in pos + 1..self.k as usize {
                    let prev = w[i - 1];
                    w[i] = least_after(a, Some(prev));
                }
                return self.current.clone().map(ReducedWord::from_reduced);
            }
        }
    }
}

pub fn sphere_iter(alphabet: Alphabet, k: u32) -> SphereIter {
    SphereIter { alphabet, k, current: None, started: false }
}

pub fn sphere(alphabet: Alphabet, k: u32) -> Sphere {
    Sphere {
        radius: k,
        words: sphere_iter(alphabet, k).collect(),
    }
}

/// Iterates the ball `B_k = S_0 u ... u S_k` in canonical order.
pub fn ball_iter(alphabet: Alphabet, k: u32) -> impl Iterator<Item = ReducedWord> {
    (0..=k).flat_map(move |j| sphere_iter(alphabet, j))
}

pub fn ball(alphabet: Alphabet, k: u32) -> Vec<ReducedWord> {
    ball_iter(alphabet, k).collect()
}

/// The l1 ball of `Z^d`, in canonical order.
pub fn lattice_ball(dim: u32, radius: u32) -> Vec<LatticeElement> {
    fn rec(dim: u32, radius: i64, prefix: &mut Vec<i64>, out: &mut Vec<LatticeElement>) {
        if dim == 0 {
            out.push(LatticeElement::new(prefix.clone()));
            return;
        }
        for c in -radius..=radius {
            prefix.push(c);
            rec(dim - 1, radius - c.abs(), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, radius as i64, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Ball of the active model as generic elements, in canonical order.
pub fn model_ball(model: Model, radius: u32) -> Result<Vec<GroupElement>> {
    match model {
        Model::Free { rank } => {
            let a = Alphabet::new(rank)?;
            Ok(ball_iter(a, radius).map(GroupElement::Free).collect())
        }
        Model::Lattice { dim } => Ok(lattice_ball(dim, radius)
            .into_iter()
            .map(GroupElement::Lattice)
            .collect()),
        Model::Affine => Err(Error::Unsupported(
            "affine maps have no word-metric ball enumeration".into(),
        )),
    }
}
