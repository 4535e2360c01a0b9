//! Exact finitely-supported probability measures: convolution, sphere
//! measures, the Hecke recurrence, Cesàro averages and stationarity defects.
//!
//! Everything in this module is exact `BigRational` arithmetic; there is no
//! floating point. Measures whose support would grow past an explicit cap
//! fail loudly instead of truncating.
//!
//! For radially symmetric measures on a free group (constant on each sphere)
//! the module also provides [`RadialMeasure`], which stores one coefficient
//! per sphere. Convolution with the uniform length-one measure is then a
//! birth–death step on sphere indices, which makes deep Cesàro averages
//! computable where the element-level support (growing like `(2r-1)^n`)
//! could never be materialized.

use std::collections::BTreeMap;
use std::str::FromStr;

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{multiply, invert, Alphabet, GroupElement, Model, ReducedWord, sphere_iter};

/// Default bound on the number of support elements a convolution may build.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num)
        .map_err(|_| Error::Parse(format!("bad rational numerator in {s:?}")))?;
    let d = BigInt::from_str(den)
        .map_err(|_| Error::Parse(format!("bad rational denominator in {s:?}")))?;
    if d.is_zero() {
        return Err(Error::Parse(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    num::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// A finitely supported probability measure with exact rational weights.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FiniteMeasure {
    model: Model,
    weights: BTreeMap<GroupElement, BigRational>,
}

impl FiniteMeasure {
    /// Builds a measure from weight pairs, dropping zeros and validating
    /// that the weights are positive and sum to exactly one.
    pub fn from_weights(
        model: Model,
        pairs: impl IntoIterator<Item = (GroupElement, BigRational)>,
    ) -> Result<Self> {
        let mut weights: BTreeMap<GroupElement, BigRational> = BTreeMap::new();
        for (g, w) in pairs {
            model.check(&g)?;
            if w.is_zero() {
                continue;
            }
            if w.is_negative() {
                return Err(Error::NotAMeasure(format!("negative weight on {g}")));
            }
            *weights.entry(g).or_insert_with(BigRational::zero) += w;
        }
        let total: BigRational = weights.values().cloned().sum();
        if !total.is_one() {
            return Err(Error::NotAMeasure(format!(
                "weights sum to {}, expected 1",
                rational_string(&total)
            )));
        }
        Ok(FiniteMeasure { model, weights })
    }

    pub fn point_mass(model: Model, g: GroupElement) -> Result<Self> {
        FiniteMeasure::from_weights(model, [(g, BigRational::one())])
    }

    pub fn identity(model: Model) -> Self {
        FiniteMeasure::point_mass(model, model.identity()).expect("identity is in-model")
    }

    pub fn uniform(model: Model, support: impl IntoIterator<Item = GroupElement>) -> Result<Self> {
        let elems: Vec<GroupElement> = support.into_iter().collect();
        if elems.is_empty() {
            return Err(Error::NotAMeasure("uniform measure on empty support".into()));
        }
        let w = BigRational::new(BigInt::one(), BigInt::from(elems.len()));
        FiniteMeasure::from_weights(model, elems.into_iter().map(|g| (g, w.clone())))
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn weight(&self, g: &GroupElement) -> BigRational {
        self.weights.get(g).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.weights.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupElement, &BigRational)> {
        self.weights.iter()
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    /// Total mass of the elements satisfying the predicate.
    pub fn mass_where(&self, mut member: impl FnMut(&GroupElement) -> bool) -> BigRational {
        self.weights
            .iter()
            .filter(|(g, _)| member(g))
            .map(|(_, w)| w.clone())
            .sum()
    }

    /// `(p*q)(g) = Σ_h p(h) q(h⁻¹g)`, built as pushforward of the product.
    pub fn convolve_capped(&self, rhs: &FiniteMeasure, cap: usize) -> Result<FiniteMeasure> {
        if self.model != rhs.model {
            return Err(Error::ModelMismatch {
                expected: format!("{}", self.model),
                found: format!("{}", rhs.model),
            });
        }
        let mut weights: BTreeMap<GroupElement, BigRational> = BTreeMap::new();
        for (g, pg) in &self.weights {
            for (h, qh) in &rhs.weights {
                let gh = multiply(g, h)?;
                *weights.entry(gh).or_insert_with(BigRational::zero) += pg * qh;
                if weights.len() > cap {
                    return Err(Error::SupportCapExceeded {
                        needed: weights.len(),
                        cap,
                    });
                }
            }
        }
        Ok(FiniteMeasure { model: self.model, weights })
    }

    pub fn convolve(&self, rhs: &FiniteMeasure) -> Result<FiniteMeasure> {
        self.convolve_capped(rhs, DEFAULT_SUPPORT_CAP)
    }

    /// `n`-fold convolution power, `p^{*0} = δ_e`.
    pub fn power_capped(&self, n: u32, cap: usize) -> Result<FiniteMeasure> {
        let mut acc = FiniteMeasure::identity(self.model);
        for _ in 0..n {
            acc = acc.convolve_capped(self, cap)?;
        }
        Ok(acc)
    }

    /// Exact convex combination `Σ c_i μ_i`; coefficients must sum to one.
    pub fn mix(parts: &[(BigRational, &FiniteMeasure)]) -> Result<FiniteMeasure> {
        let model = parts
            .first()
            .ok_or_else(|| Error::NotAMeasure("empty mixture".into()))?
            .1
            .model;
        let mut weights: BTreeMap<GroupElement, BigRational> = BTreeMap::new();
        for (c, m) in parts {
            if m.model != model {
                return Err(Error::ModelMismatch {
                    expected: format!("{model}"),
                    found: format!("{}", m.model),
                });
            }
            for (g, w) in &m.weights {
                *weights.entry(g.clone()).or_insert_with(BigRational::zero) += c * w;
            }
        }
        let total: BigRational = weights.values().cloned().sum();
        if !total.is_one() {
            return Err(Error::NotAMeasure(format!(
                "mixture weights sum to {}",
                rational_string(&total)
            )));
        }
        weights.retain(|_, w| !w.is_zero());
        if weights.values().any(|w| w.is_negative()) {
            return Err(Error::NotAMeasure("negative mixture coefficient".into()));
        }
        Ok(FiniteMeasure { model, weights })
    }

    /// Pushforward under inversion: `p̂(g) = p(g⁻¹)`.
    pub fn invert_pushforward(&self) -> FiniteMeasure {
        let weights = self
            .weights
            .iter()
            .map(|(g, w)| (invert(g), w.clone()))
            .collect();
        FiniteMeasure { model: self.model, weights }
    }

    pub fn is_symmetric(&self) -> bool {
        *self == self.invert_pushforward()
    }

    /// Total-variation distance `(1/2) Σ_g |p(g) − q(g)|`.
    pub fn tv_distance(&self, rhs: &FiniteMeasure) -> Result<BigRational> {
        if self.model != rhs.model {
            return Err(Error::ModelMismatch {
                expected: format!("{}", self.model),
                found: format!("{}", rhs.model),
            });
        }
        let mut sum = BigRational::zero();
        for (g, w) in &self.weights {
            sum += (w - rhs.weight(g)).abs();
        }
        for (g, w) in &rhs.weights {
            if !self.weights.contains_key(g) {
                sum += w.abs();
            }
        }
        Ok(sum / BigRational::from_integer(2.into()))
    }

    /// Checks that the support generates the group as a semigroup, at desk
    /// scale: every element of ball(2) must be a product of at most four
    /// support elements. Returns false (a warning condition, not an error)
    /// when that fails; only word/lattice models are checked.
    pub fn is_admissible_window(&self) -> bool {
        let ball2 = match crate::group::model_ball(self.model, 2) {
            Ok(b) => b,
            Err(_) => return true,
        };
        let mut reachable: std::collections::BTreeSet<GroupElement> =
            [self.model.identity()].into();
        let mut frontier: Vec<GroupElement> = vec![self.model.identity()];
        for _ in 0..4 {
            let mut next = Vec::new();
            for g in &frontier {
                for s in self.weights.keys() {
                    if let Ok(gs) = multiply(g, s) {
                        if reachable.insert(gs.clone()) {
                            next.push(gs);
                        }
                    }
                }
            }
            frontier = next;
        }
        ball2.iter().all(|g| reachable.contains(g))
    }

    /// JSON-facing form: canonical element text plus "num/den" weight.
    pub fn to_entries(&self) -> Vec<MeasureEntry> {
        self.weights
            .iter()
            .map(|(g, w)| MeasureEntry {
                element: g.to_string(),
                weight: rational_string(w),
            })
            .collect()
    }

    pub fn from_entries(model: Model, entries: &[MeasureEntry]) -> Result<Self> {
        let pairs = entries
            .iter()
            .map(|e| Ok((crate::group::parse_element(&e.element)?, parse_rational(&e.weight)?)))
            .collect::<Result<Vec<_>>>()?;
        FiniteMeasure::from_weights(model, pairs)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MeasureEntry {
    pub element: String,
    pub weight: String,
}

impl Serialize for FiniteMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            model: Model,
            weights: Vec<MeasureEntry>,
            #[serde(skip_serializing_if = "Option::is_none")]
            _phantom: Option<&'a ()>,
        }
        Wire { model: self.model, weights: self.to_entries(), _phantom: None }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            model: Model,
            weights: Vec<MeasureEntry>,
        }
        let wire = Wire::deserialize(d)?;
        FiniteMeasure::from_entries(wire.model, &wire.weights).map_err(serde::de::Error::custom)
    }
}

/// Uniform probability measure on the radius-`k` sphere; `σ_0 = δ_e`.
pub fn sphere_measure(alphabet: Alphabet, k: u32) -> FiniteMeasure {
    let model = Model::Free { rank: alphabet.rank() };
    if k == 0 {
        return FiniteMeasure::identity(model);
    }
    let size = BigRational::new(BigInt::one(), BigInt::from(alphabet.sphere_size(k)));
    let weights = sphere_iter(alphabet, k)
        .map(|w| (GroupElement::Free(w), size.clone()))
        .collect();
    FiniteMeasure { model, weights }
}

/// `β_n = (1/n) Σ_{k=0}^{n-1} σ_k`, materialized at element level.
pub fn cesaro_spherical(alphabet: Alphabet, n: u32) -> Result<FiniteMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("Cesàro average needs n >= 1".into()));
    }
    let c = BigRational::new(BigInt::one(), BigInt::from(n));
    let parts: Vec<FiniteMeasure> = (0..n).map(|k| sphere_measure(alphabet, k)).collect();
    let refs: Vec<(BigRational, &FiniteMeasure)> =
        parts.iter().map(|m| (c.clone(), m)).collect();
    FiniteMeasure::mix(&refs)
}

/// `β_n = (1/n) Σ_{k=1}^{n} p^{*k}`, materialized at element level.
pub fn cesaro_walk(p: &FiniteMeasure, n: u32, cap: usize) -> Result<FiniteMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("Cesàro average needs n >= 1".into()));
    }
    let c = BigRational::new(BigInt::one(), BigInt::from(n));
    let mut powers: Vec<FiniteMeasure> = Vec::with_capacity(n as usize);
    let mut acc = p.clone();
    powers.push(acc.clone());
    for _ in 1..n {
        acc = acc.convolve_capped(p, cap)?;
        powers.push(acc.clone());
    }
    let refs: Vec<(BigRational, &FiniteMeasure)> =
        powers.iter().map(|m| (c.clone(), m)).collect();
    FiniteMeasure::mix(&refs)
}

/// Total-variation distance between `σ1*σ_k` and its two-sphere mixture
/// `(1/2r)σ_{k-1} + (1-1/2r)σ_{k+1}`. The recurrence asserts this is zero.
///
/// Every one of the `2r·|S_k|` products `s·g` is enumerated and tallied;
/// nothing about where products land or how often is assumed. Because both
/// factors are uniform, `(σ1*σ_k)(w)` equals the tally of `w` divided by
/// `2r·|S_k|`, and the mixture weight depends only on `|w|`, so the exact
/// distance is assembled from a (length, tally) histogram instead of a
/// rational-weighted support map.
pub fn hecke_residual(alphabet: Alphabet, k: u32) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "the length-one recurrence is stated for k >= 1 only".into(),
        ));
    }
    let products = alphabet.size() as u64 * alphabet.sphere_size(k);
    if products > 8_000_000 {
        return Err(Error::BudgetExceeded { needed: products, budget: 8_000_000 });
    }
    let mut counts: BTreeMap<ReducedWord, u64> = BTreeMap::new();
    for g in sphere_iter(alphabet, k) {
        for s in alphabet.letters() {
            let w = ReducedWord::from_letters([s]).concat(&g);
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    // Histogram the support: hist[(|w|, tally)] and per-length word counts.
    let mut hist: BTreeMap<(usize, u64), u64> = BTreeMap::new();
    let mut seen: BTreeMap<usize, u64> = BTreeMap::new();
    for (w, c) in &counts {
        *hist.entry((w.len(), *c)).or_insert(0) += 1;
        *seen.entry(w.len()).or_insert(0) += 1;
    }
    // Mixture weight of a single word of length j.
    let inv2r = BigRational::new(BigInt::one(), BigInt::from(alphabet.size()));
    let rest = BigRational::one() - inv2r.clone();
    let mix_weight = |j: usize| -> BigRational {
        let sphere = BigRational::from_integer(alphabet.sphere_size(j as u32).into());
        if j as u32 == k - 1 {
            inv2r.clone() / sphere
        } else if j as u32 == k + 1 {
            rest.clone() / sphere
        } else {
            BigRational::zero()
        }
    };
    let unit = BigRational::new(BigInt::one(), BigInt::from(products));
    let mut sum = BigRational::zero();
    for ((j, c), n) in &hist {
        let gap = (BigRational::from_integer((*c).into()) * &unit - mix_weight(*j)).abs();
        sum += gap * BigRational::from_integer((*n).into());
    }
    // Mixture mass on words the product never reached.
    for j in [k - 1, k + 1] {
        let missing = alphabet.sphere_size(j) - seen.get(&(j as usize)).copied().unwrap_or(0);
        if missing > 0 {
            sum += mix_weight(j as usize) * BigRational::from_integer(missing.into());
        }
    }
    Ok(sum / BigRational::from_integer(2.into()))
}

/// `‖p*μ − μ‖_TV`, the one-step stationarity defect of `μ` under `p`.
pub fn stationarity_defect(p: &FiniteMeasure, mu: &FiniteMeasure) -> Result<BigRational> {
    let stepped = p.convolve_capped(mu, DEFAULT_SUPPORT_CAP)?;
    stepped.tv_distance(mu)
}

/// A measure on a free group that is constant on every sphere, stored as one
/// total-mass coefficient per sphere index.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RadialMeasure {
    alphabet: Alphabet,
    /// `coeffs[k]` = total mass carried by the radius-`k` sphere.
    coeffs: Vec<BigRational>,
}

impl RadialMeasure {
    pub fn delta_e(alphabet: Alphabet) -> Self {
        RadialMeasure { alphabet, coeffs: vec![BigRational::one()] }
    }

    pub fn sigma(alphabet: Alphabet, k: u32) -> Self {
        let mut coeffs = vec![BigRational::zero(); k as usize + 1];
        coeffs[k as usize] = BigRational::one();
        RadialMeasure { alphabet, coeffs }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Total mass on the radius-`k` sphere.
    pub fn sphere_mass(&self, k: u32) -> BigRational {
        self.coeffs
            .get(k as usize)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Weight of a single word of length `k` (all such words share it).
    pub fn element_weight(&self, k: u32) -> BigRational {
        self.sphere_mass(k) / BigRational::from_integer(self.alphabet.sphere_size(k).into())
    }

    pub fn max_radius(&self) -> u32 {
        (self.coeffs.len() as u32).saturating_sub(1)
    }

    pub fn total(&self) -> BigRational {
        self.coeffs.iter().cloned().sum()
    }

    /// One convolution with the uniform length-one measure: a birth–death
    /// step on sphere indices. Mass at index `k >= 1` moves inward with
    /// probability `1/2r` and outward with probability `1 − 1/2r`; mass at
    /// the identity moves entirely to the first sphere.
    pub fn convolve_sigma1(&self) -> RadialMeasure {
        let q = BigRational::new(BigInt::one(), BigInt::from(self.alphabet.size()));
        let out = BigRational::one() - q.clone();
        let n = self.coeffs.len();
        let mut next = vec![BigRational::zero(); n + 1];
        for (k, m) in self.coeffs.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            if k == 0 {
                next[1] += m;
            } else {
                next[k - 1] += &q * m;
                next[k + 1] += &out * m;
            }
        }
        while next.len() > 1 && next.last().is_some_and(|c| c.is_zero()) {
            next.pop();
        }
        RadialMeasure { alphabet: self.alphabet, coeffs: next }
    }

    /// Exact convex combination of radial measures over one alphabet.
    pub fn mix(parts: &[(BigRational, &RadialMeasure)]) -> Result<RadialMeasure> {
        let alphabet = parts
            .first()
            .ok_or_else(|| Error::NotAMeasure("empty mixture".into()))?
            .1
            .alphabet;
        let len = parts
            .iter()
            .map(|(_, m)| m.coeffs.len())
            .max()
            .unwrap_or(1);
        let mut coeffs = vec![BigRational::zero(); len];
        for (c, m) in parts {
            if m.alphabet != alphabet {
                return Err(Error::ModelMismatch {
                    expected: format!("free({})", alphabet.rank()),
                    found: format!("free({})", m.alphabet.rank()),
                });
            }
            for (k, w) in m.coeffs.iter().enumerate() {
                coeffs[k] += c * w;
            }
        }
        Ok(RadialMeasure { alphabet, coeffs })
    }

    /// `(1/2) Σ_k |m_k − l_k|`: because both measures are constant on each
    /// sphere, the element-level l1 distance collapses to sphere totals.
    pub fn tv_distance(&self, rhs: &RadialMeasure) -> BigRational {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let mut sum = BigRational::zero();
        for k in 0..len {
            sum += (self.sphere_mass(k as u32) - rhs.sphere_mass(k as u32)).abs();
        }
        sum / BigRational::from_integer(2.into())
    }

    /// Materializes the measure at element level (test oracle bridge).
    pub fn to_finite(&self, cap: usize) -> Result<FiniteMeasure> {
        let mut parts: Vec<(BigRational, FiniteMeasure)> = Vec::new();
        let mut elems: u64 = 0;
        for (k, m) in self.coeffs.iter().enumerate() {
            if m.is_zero() {
                continue;
            }
            elems += self.alphabet.sphere_size(k as u32);
            if elems as usize > cap {
                return Err(Error::SupportCapExceeded { needed: elems as usize, cap });
            }
            parts.push((m.clone(), sphere_measure(self.alphabet, k as u32)));
        }
        let refs: Vec<(BigRational, &FiniteMeasure)> =
            parts.iter().map(|(c, m)| (c.clone(), m)).collect();
        FiniteMeasure::mix(&refs)
    }
}

/// Radial `β_n = (1/n) Σ_{k=0}^{n-1} σ_k`.
pub fn radial_cesaro_spherical(alphabet: Alphabet, n: u32) -> Result<RadialMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("Cesàro average needs n >= 1".into()));
    }
    let c = BigRational::new(BigInt::one(), BigInt::from(n));
    let parts: Vec<RadialMeasure> = (0..n).map(|k| RadialMeasure::sigma(alphabet, k)).collect();
    let refs: Vec<(BigRational, &RadialMeasure)> =
        parts.iter().map(|m| (c.clone(), m)).collect();
    RadialMeasure::mix(&refs)
}

/// The powers `σ1^{*0}, …, σ1^{*kmax}` as radial measures.
pub fn sigma1_powers(alphabet: Alphabet, kmax: u32) -> Vec<RadialMeasure> {
    let mut out = Vec::with_capacity(kmax as usize + 1);
    out.push(RadialMeasure::delta_e(alphabet));
    for _ in 0..kmax {
        let next = out.last().unwrap().convolve_sigma1();
        out.push(next);
    }
    out
}

/// Radial walk Cesàro `(1/n) Σ_{k=1}^{n} σ1^{*k}`.
pub fn radial_cesaro_walk(alphabet: Alphabet, n: u32) -> Result<RadialMeasure> {
    if n == 0 {
        return Err(Error::InvalidArgument("Cesàro average needs n >= 1".into()));
    }
    let powers = sigma1_powers(alphabet, n);
    let c = BigRational::new(BigInt::one(), BigInt::from(n));
    let refs: Vec<(BigRational, &RadialMeasure)> =
        powers[1..].iter().map(|m| (c.clone(), m)).collect();
    RadialMeasure::mix(&refs)
}

/// Exact `‖σ1*β_n − β_n‖_TV` for the spherical Cesàro family, computed
/// entirely in the radial representation.
pub fn spherical_cesaro_defect(alphabet: Alphabet, n: u32) -> Result<BigRational> {
    let beta = radial_cesaro_spherical(alphabet, n)?;
    let stepped = beta.convolve_sigma1();
    Ok(stepped.tv_distance(&beta))
}

/// Helper for free-group tests: the word model for an alphabet.
pub fn free_model(alphabet: Alphabet) -> Model {
    Model::Free { rank: alphabet.rank() }
}

/// Uniform measure on `{±1} ⊂ Z` (the lattice mirror of σ1 at rank one).
pub fn lattice_step(dim: u32) -> Result<FiniteMeasure> {
    let model = Model::Lattice { dim };
    let mut elems = Vec::new();
    for i in 0..dim as usize {
        for sign in [1i64, -1] {
            let mut coords = vec![0i64; dim as usize];
            coords[i] = sign;
            elems.push(GroupElement::Lattice(crate::group::LatticeElement::new(coords)));
        }
    }
    FiniteMeasure::uniform(model, elems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{LatticeElement, ReducedWord};
    use proptest::prelude::*;

    fn a2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn we(s: &str) -> GroupElement {
        GroupElement::Free(s.parse::<ReducedWord>().unwrap())
    }

    #[test]
    fn identity_convolution_is_neutral() {
        let q = sphere_measure(a2(), 2);
        let e = FiniteMeasure::identity(free_model(a2()));
        assert_eq!(e.convolve(&q).unwrap(), q);
        assert_eq!(q.convolve(&e).unwrap(), q);
    }

    #[test]
    fn sigma1_squared_matches_length_one_recurrence() {
        // σ1*σ1 = (1/4)δ_e + (3/4)σ2 at rank 2.
        let s1 = sphere_measure(a2(), 1);
        let lhs = s1.convolve(&s1).unwrap();
        let rhs = FiniteMeasure::mix(&[
            (rat(1, 4), &sphere_measure(a2(), 0)),
            (rat(3, 4), &sphere_measure(a2(), 2)),
        ])
        .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn lattice_step_squared() {
        // uniform{±1} convolved with itself: {−2: 1/4, 0: 1/2, 2: 1/4}.
        let p = lattice_step(1).unwrap();
        let p2 = p.convolve(&p).unwrap();
        let el = |x: i64| GroupElement::Lattice(LatticeElement::new(vec![x]));
        assert_eq!(p2.weight(&el(-2)), rat(1, 4));
        assert_eq!(p2.weight(&el(0)), rat(1, 2));
        assert_eq!(p2.weight(&el(2)), rat(1, 4));
        assert_eq!(p2.support_size(), 3);
    }

    #[test]
    fn sphere_measure_values() {
        let s1 = sphere_measure(a2(), 1);
        assert_eq!(s1.support_size(), 4);
        assert_eq!(s1.weight(&we("a1")), rat(1, 4));
        let s2 = sphere_measure(a2(), 2);
        assert_eq!(s2.support_size(), 12);
        assert_eq!(s2.weight(&we("a1 a2")), rat(1, 12));
        assert_eq!(sphere_measure(a2(), 0), FiniteMeasure::identity(free_model(a2())));
    }

    #[test]
    fn hecke_residual_vanishes() {
        for r in 1..=3u32 {
            let a = Alphabet::new(r).unwrap();
            for k in 1..=5u32 {
                assert!(hecke_residual(a, k).unwrap().is_zero(), "r={r} k={k}");
            }
        }
        assert!(hecke_residual(a2(), 0).is_err());
    }

    #[test]
    fn cesaro_spherical_small_values() {
        let b1 = cesaro_spherical(a2(), 1).unwrap();
        assert_eq!(b1, FiniteMeasure::identity(free_model(a2())));
        let b2 = cesaro_spherical(a2(), 2).unwrap();
        assert_eq!(b2.weight(&we("e")), rat(1, 2));
        assert_eq!(b2.weight(&we("a2'")), rat(1, 8));
    }

    #[test]
    fn cesaro_walk_small_values() {
        let s1 = sphere_measure(a2(), 1);
        let b1 = cesaro_walk(&s1, 1, 10_000).unwrap();
        assert_eq!(b1, s1);
        // (1/2)σ1 + (1/2)((1/4)δ_e + (3/4)σ2)
        let b2 = cesaro_walk(&s1, 2, 10_000).unwrap();
        assert_eq!(b2.weight(&we("e")), rat(1, 8));
        assert_eq!(b2.weight(&we("a1")), rat(1, 8));
        assert_eq!(b2.weight(&we("a1 a2")), rat(1, 32));
    }

    #[test]
    fn lattice_walk_cesaro_trinomial() {
        // p = uniform{±1} on Z, n = 3: (1/3)(p + p² + p³) computed by hand:
        // p²: {−2:1/4, 0:1/2, 2:1/4}; p³: {−3:1/8, −1:3/8, 1:3/8, 3:1/8}.
        let p = lattice_step(1).unwrap();
        let b3 = cesaro_walk(&p, 3, 10_000).unwrap();
        let el = |x: i64| GroupElement::Lattice(LatticeElement::new(vec![x]));
        assert_eq!(b3.weight(&el(0)), rat(1, 6));
        assert_eq!(b3.weight(&el(1)), rat(1, 3) * rat(1, 2) + rat(1, 3) * rat(3, 8));
        assert_eq!(b3.weight(&el(3)), rat(1, 24));
    }

    #[test]
    fn convolve_associates() {
        let p = sphere_measure(a2(), 1);
        let q = cesaro_spherical(a2(), 3).unwrap();
        let r = sphere_measure(a2(), 2);
        let lhs = p.convolve(&q).unwrap().convolve(&r).unwrap();
        let rhs = p.convolve(&q.convolve(&r).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn inversion_antihomomorphism() {
        let p = cesaro_walk(&sphere_measure(a2(), 1), 2, 10_000).unwrap();
        let q = cesaro_spherical(a2(), 2).unwrap();
        let lhs = p.convolve(&q).unwrap().invert_pushforward();
        let rhs = q.invert_pushforward().convolve(&p.invert_pushforward()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn support_cap_is_loud() {
        let s1 = sphere_measure(a2(), 1);
        let err = s1.convolve_capped(&sphere_measure(a2(), 3), 10);
        assert!(matches!(err, Err(Error::SupportCapExceeded { .. })));
    }

    #[test]
    fn radial_matches_direct_convolution() {
        // Oracle: the radial birth–death step must equal the element-level
        // convolution materialized through spheres.
        let mut radial = RadialMeasure::delta_e(a2());
        let s1 = sphere_measure(a2(), 1);
        let mut direct = FiniteMeasure::identity(free_model(a2()));
        for step in 0..6 {
            radial = radial.convolve_sigma1();
            direct = s1.convolve(&direct).unwrap();
            assert_eq!(radial.to_finite(1_000_000).unwrap(), direct, "step {step}");
        }
    }

    #[test]
    fn radial_cesaro_matches_direct() {
        for n in [1u32, 2, 4, 8] {
            let radial = radial_cesaro_spherical(a2(), n).unwrap();
            let direct = cesaro_spherical(a2(), n).unwrap();
            assert_eq!(radial.to_finite(1_000_000).unwrap(), direct, "n={n}");
            let rw = radial_cesaro_walk(a2(), n).unwrap();
            let dw = cesaro_walk(&sphere_measure(a2(), 1), n, 1_000_000).unwrap();
            assert_eq!(rw.to_finite(1_000_000).unwrap(), dw, "walk n={n}");
        }
    }

    #[test]
    fn spherical_cesaro_defect_matches_direct_oracle() {
        // Exact defect via radial representation vs element-level oracle.
        for n in [2u32, 3, 4, 8] {
            let fast = spherical_cesaro_defect(a2(), n).unwrap();
            let beta = cesaro_spherical(a2(), n).unwrap();
            let slow = stationarity_defect(&sphere_measure(a2(), 1), &beta).unwrap();
            assert_eq!(fast, slow, "n={n}");
        }
        // Frozen values from the direct oracle: the defect is exactly 1/n
        // for n >= 3 at rank 2, and 3/8 at n = 2.
        assert_eq!(spherical_cesaro_defect(a2(), 2).unwrap(), rat(3, 8));
        assert_eq!(spherical_cesaro_defect(a2(), 3).unwrap(), rat(1, 3));
        assert_eq!(spherical_cesaro_defect(a2(), 8).unwrap(), rat(1, 8));
    }

    #[test]
    fn walk_cesaro_defect_bound() {
        let s1 = sphere_measure(a2(), 1);
        for n in [1u32, 2, 4, 8] {
            let beta = cesaro_walk(&s1, n, 1_000_000).unwrap();
            let defect = stationarity_defect(&s1, &beta).unwrap();
            let bound = rat(2, n as i64);
            assert!(defect <= bound, "n={n}: defect {defect}");
        }
    }

    #[test]
    fn admissibility_window() {
        assert!(sphere_measure(a2(), 1).is_admissible_window());
        let one_sided = FiniteMeasure::point_mass(free_model(a2()), we("a1")).unwrap();
        assert!(!one_sided.is_admissible_window());
        assert!(lattice_step(2).unwrap().is_admissible_window());
    }

    #[test]
    fn json_roundtrip() {
        let p = cesaro_walk(&sphere_measure(a2(), 1), 2, 10_000).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("1/8"));
        let back: FiniteMeasure = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }

    proptest! {
        #[test]
        fn mixtures_stay_probability(daux in prop::collection::vec(1u64..6, 2..5)) {
            let total: u64 = daux.iter().sum();
            let parts: Vec<FiniteMeasure> =
                (0..daux.len() as u32).map(|k| sphere_measure(a2(), k)).collect();
            let refs: Vec<(BigRational, &FiniteMeasure)> = daux
                .iter()
                .zip(&parts)
                .map(|(c, m)| (BigRational::new((*c).into(), total.into()), m))
                .collect();
            let mixed = FiniteMeasure::mix(&refs).unwrap();
            let sum: BigRational = mixed.iter().map(|(_, w)| w.clone()).sum();
            prop_assert!(sum.is_one());
        }

        #[test]
        fn tv_is_a_metric_sample(n in 1u32..6, m in 1u32..6) {
            let p = cesaro_spherical(a2(), n).unwrap();
            let q = cesaro_spherical(a2(), m).unwrap();
            let d = p.tv_distance(&q).unwrap();
            prop_assert!(d >= BigRational::zero());
            prop_assert!(d <= BigRational::one());
            prop_assert_eq!(d.is_zero(), n == m);
            prop_assert_eq!(p.tv_distance(&q).unwrap(), q.tv_distance(&p).unwrap());
        }
    }
}
