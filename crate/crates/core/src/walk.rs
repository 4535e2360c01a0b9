//! Seeded random-walk sampling on all three group models, boundary-prefix
//! frequency estimation on free groups, exact and Monte Carlo ergodic
//! averages, and stationary-measure estimation for the dyadic affine group.
//!
//! Reproducibility contract: every sampler derives a per-path seed from the
//! base seed with a fixed mixing function, so identical configurations give
//! identical output bit for bit, independent of batching.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{model_ball, multiply, Alphabet, Dyadic, GroupElement, Model, ReducedWord};
use crate::measure::FiniteMeasure;
use crate::sets::{density_profile, DensityProfile, Family, GroupSet};

/// Generator recorded in run metadata; all sampling uses this algorithm.
pub const GENERATOR_NAME: &str = "chacha8";

/// Deterministic per-path seed derivation (recorded so an independent
/// implementation can reproduce any single path).
pub fn path_seed(base: u64, index: u64) -> u64 {
    base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// A walk specification: step distribution, path length, sample count, seed.
#[derive(Clone, Debug)]
pub struct WalkConfig {
    pub step: FiniteMeasure,
    pub length: u32,
    pub samples: u32,
    pub seed: u64,
}

impl WalkConfig {
    pub fn new(step: FiniteMeasure, length: u32, samples: u32, seed: u64) -> Self {
        WalkConfig { step, length, samples, seed }
    }

    pub fn model(&self) -> Model {
        self.step.model()
    }

    /// Admissibility probe: the step support should generate the group as a
    /// semigroup. We check that every element of ball(2) is a product of at
    /// most four support elements and return a warning (not an error) when
    /// the check fails or cannot be run on this model.
    pub fn admissibility_warning(&self) -> Option<String> {
        let ball2 = match model_ball(self.model(), 2) {
            Ok(b) => b,
            Err(_) => return None,
        };
        let support: Vec<GroupElement> = self.step.support().cloned().collect();
        let mut reachable: Vec<GroupElement> = support.clone();
        let mut frontier = support.clone();
        for _ in 1..4 {
            let mut next = Vec::new();
            for g in &frontier {
                for s in &support {
                    if let Ok(p) = multiply(g, s) {
                        next.push(p);
                    }
                }
            }
            next.sort();
            next.dedup();
            reachable.extend(next.iter().cloned());
            frontier = next;
        }
        reachable.sort();
        reachable.dedup();
        let missing: Vec<String> = ball2
            .iter()
            .filter(|g| reachable.binary_search(g).is_err())
            .map(|g| g.to_string())
            .collect();
        if missing.is_empty() {
            None
        } else {
            Some(format!(
                "step support may not generate the group: ball(2) elements {} \
                 not reached by products of length <= 4",
                missing.join(", ")
            ))
        }
    }
}

/// Integer-weight alias sampler over the step distribution: the exact
/// rational weights are scaled by their common denominator, so the draw is
/// an exact categorical sample, not a floating-point approximation.
struct StepSampler {
    atoms: Vec<GroupElement>,
    cumulative: Vec<u64>,
    total: u64,
}

impl StepSampler {
    fn new(p: &FiniteMeasure) -> Result<Self> {
        let mut denom = BigInt::one();
        for (_, w) in p.iter() {
            denom = denom.lcm(w.denom());
        }
        let total = denom.to_u64().ok_or_else(|| {
            Error::InvalidArgument("step weights need a denominator beyond u64".to_string())
        })?;
        let mut atoms = Vec::with_capacity(p.support_size());
        let mut cumulative = Vec::with_capacity(p.support_size());
        let mut acc: u64 = 0;
        for (g, w) in p.iter() {
            let scaled = (w * BigRational::from_integer(denom.clone()))
                .to_integer()
                .to_u64()
                .expect("scaled weight fits: it divides the total");
            acc += scaled;
            atoms.push(g.clone());
            cumulative.push(acc);
        }
        debug_assert_eq!(acc, total);
        Ok(StepSampler { atoms, cumulative, total })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> &GroupElement {
        let z = rng.gen_range(0..self.total);
        let idx = self.cumulative.partition_point(|c| *c <= z);
        &self.atoms[idx]
    }
}

/// One sampled path: positions after each step, and for free groups the
/// boundary prefix that stayed settled over the final quarter of the walk.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    pub index: u64,
    pub seed: u64,
    pub positions: Vec<GroupElement>,
    pub boundary_prefix: Option<ReducedWord>,
}

/// The prefix of the final position certain to have stabilized within the
/// observation window: positions can only change their first d letters by
/// dipping below length d, so the minimum length over the final quarter
/// bounds the settled depth.
fn settled_prefix(positions: &[GroupElement]) -> Result<ReducedWord> {
    if positions.is_empty() {
        return Ok(ReducedWord::identity());
    }
    let tail = &positions[positions.len() * 3 / 4..];
    let mut depth = usize::MAX;
    for g in tail {
        depth = depth.min(g.as_word()?.len());
    }
    let last = positions.last().expect("nonempty").as_word()?;
    Ok(last.prefix(depth))
}

fn walk_one_path(
    cfg: &WalkConfig,
    sampler: &StepSampler,
    index: u64,
    positions: &mut Vec<GroupElement>,
) -> Result<u64> {
    let seed = path_seed(cfg.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    positions.clear();
    let mut g = cfg.model().identity();
    for _ in 0..cfg.length {
        g = multiply(&g, sampler.draw(&mut rng))?;
        positions.push(g.clone());
    }
    Ok(seed)
}

/// Samples all configured paths, materializing full position lists.
pub fn sample_paths(cfg: &WalkConfig) -> Result<Vec<PathSample>> {
    let sampler = StepSampler::new(&cfg.step)?;
    let is_free = matches!(cfg.model(), Model::Free { .. });
    let mut out = Vec::with_capacity(cfg.samples as usize);
    let mut positions = Vec::with_capacity(cfg.length as usize);
    for index in 0..u64::from(cfg.samples) {
        let seed = walk_one_path(cfg, &sampler, index, &mut positions)?;
        let boundary_prefix = if is_free {
            Some(settled_prefix(&positions)?)
        } else {
            None
        };
        out.push(PathSample {
            index,
            seed,
            positions: positions.clone(),
            boundary_prefix,
        });
    }
    Ok(out)
}

/// Empirical distribution of settled depth-`depth` boundary prefixes.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFrequency {
    pub depth: u32,
    pub counts: BTreeMap<ReducedWord, u64>,
    pub discarded: u64,
    pub samples: u32,
}

impl BoundaryFrequency {
    /// Fraction of all samples (discards included in the denominator).
    pub fn frequency(&self, w: &ReducedWord) -> BigRational {
        if self.samples == 0 {
            return BigRational::zero();
        }
        BigRational::new(
            BigInt::from(self.counts.get(w).copied().unwrap_or(0)),
            BigInt::from(self.samples),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("prefix,count,frequency\n");
        for (w, c) in &self.counts {
            let f = self.frequency(w);
            out.push_str(&format!(
                "{w},{c},{:.6}\n",
                c_to_f64(&f)
            ));
        }
        out.push_str(&format!("DISCARDED,{},-\n", self.discarded));
        out
    }
}

fn c_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Streams the configured walk and tallies settled depth-`depth` prefixes;
/// paths whose prefix did not settle that deep are discarded and counted.
pub fn boundary_frequency(cfg: &WalkConfig, depth: u32) -> Result<BoundaryFrequency> {
    if !matches!(cfg.model(), Model::Free { .. }) {
        return Err(Error::Unsupported(
            "boundary prefixes exist on the free model only".to_string(),
        ));
    }
    let sampler = StepSampler::new(&cfg.step)?;
    let mut counts: BTreeMap<ReducedWord, u64> = BTreeMap::new();
    let mut discarded = 0u64;
    let mut positions = Vec::with_capacity(cfg.length as usize);
    for index in 0..u64::from(cfg.samples) {
        walk_one_path(cfg, &sampler, index, &mut positions)?;
        let settled = settled_prefix(&positions)?;
        if (settled.len() as u32) < depth {
            discarded += 1;
        } else {
            *counts.entry(settled.prefix(depth as usize)).or_insert(0) += 1;
        }
    }
    Ok(BoundaryFrequency { depth, counts, discarded, samples: cfg.samples })
}

/// How to evaluate the running averages.
#[derive(Clone, Debug, PartialEq)]
pub enum AverageMode {
    /// Exact convolution powers of the step measure.
    Exact,
    /// Sampled walks; the profile values are exact empirical fractions.
    MonteCarlo { samples: u32, seed: u64 },
}

/// Running averages (1/n)·Σ_{k=1..n} p^{*k}(B) for n = 1..n_max. Exact mode
/// delegates to the measure algebra; Monte Carlo replaces p^{*k}(B) with the
/// fraction of sampled paths sitting in B at time k.
pub fn ergodic_average(
    set: &GroupSet,
    step: &FiniteMeasure,
    n_max: u32,
    mode: &AverageMode,
) -> Result<DensityProfile> {
    match mode {
        AverageMode::Exact => density_profile(set, &Family::Walk(step.clone()), n_max),
        AverageMode::MonteCarlo { samples, seed } => {
            let cfg = WalkConfig::new(step.clone(), n_max, *samples, *seed);
            let sampler = StepSampler::new(step)?;
            let mut hits = vec![0u64; n_max as usize];
            let mut positions = Vec::with_capacity(n_max as usize);
            for index in 0..u64::from(cfg.samples) {
                walk_one_path(&cfg, &sampler, index, &mut positions)?;
                for (k, g) in positions.iter().enumerate() {
                    if set.contains(g)? {
                        hits[k] += 1;
                    }
                }
            }
            let mut values = Vec::with_capacity(n_max as usize);
            let mut acc = BigRational::zero();
            for n in 1..=n_max {
                let step_value = if *samples == 0 {
                    BigRational::zero()
                } else {
                    BigRational::new(
                        BigInt::from(hits[(n - 1) as usize]),
                        BigInt::from(*samples),
                    )
                };
                acc += step_value;
                values.push((n, acc.clone() / BigRational::from_integer(BigInt::from(n))));
            }
            Ok(DensityProfile {
                family: format!("walk-mc(samples={samples},seed={seed})"),
                values,
            })
        }
    }
}

/// Three binomial standard deviations around an exact probability — the
/// agreement tolerance used when cross-validating Monte Carlo against exact
/// values.
pub fn three_sigma(exact: &BigRational, samples: u32) -> f64 {
    if samples == 0 {
        return f64::INFINITY;
    }
    let p = c_to_f64(exact).clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / samples as f64).sqrt()
}

/// Exact distribution of the word length of the radial walk: a birth–death
/// chain stepping +1 with probability (2r−1)/2r away from 0 (always from 0)
/// and −1 with probability 1/2r. Returns E|X_n|.
pub fn radial_expected_length(alphabet: Alphabet, n: u32) -> BigRational {
    let two_r = BigInt::from(alphabet.size());
    let up = BigRational::new(&two_r - BigInt::one(), two_r.clone());
    let down = BigRational::new(BigInt::one(), two_r);
    let mut dist = vec![BigRational::zero(); (n + 2) as usize];
    dist[0] = BigRational::one();
    for _ in 0..n {
        let mut next = vec![BigRational::zero(); dist.len()];
        for (j, mass) in dist.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            if j == 0 {
                next[1] += mass.clone();
            } else {
                next[j + 1] += mass * up.clone();
                next[j - 1] += mass * down.clone();
            }
        }
        dist = next;
    }
    dist.iter()
        .enumerate()
        .map(|(j, m)| m * BigRational::from_integer(BigInt::from(j)))
        .sum()
}

/// Mean final word length across sampled paths.
pub fn sampled_mean_length(cfg: &WalkConfig) -> Result<f64> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("no samples requested".to_string()));
    }
    let sampler = StepSampler::new(&cfg.step)?;
    let mut total = 0u64;
    let mut positions = Vec::with_capacity(cfg.length as usize);
    for index in 0..u64::from(cfg.samples) {
        walk_one_path(cfg, &sampler, index, &mut positions)?;
        if let Some(last) = positions.last() {
            total += last.norm().ok_or_else(|| {
                Error::Unsupported("length statistics need a normed model".to_string())
            })?;
        }
    }
    Ok(total as f64 / cfg.samples as f64)
}

/// Empirical histogram of g_n·x₀ for the affine walk, with exact dyadic
/// iteration underneath and a divergence guard.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineHistogram {
    pub bins: Vec<u64>,
    pub lo: f64,
    pub hi: f64,
    pub samples: u32,
    pub diverged: u64,
    pub out_of_range: u64,
    pub seed: u64,
    pub symmetry_warning: bool,
}

impl AffineHistogram {
    fn compatible(&self, other: &AffineHistogram) -> Result<()> {
        if self.bins.len() != other.bins.len() || self.lo != other.lo || self.hi != other.hi {
            return Err(Error::InvalidArgument(
                "histograms use different binnings".to_string(),
            ));
        }
        Ok(())
    }

    fn weights(&self) -> Vec<f64> {
        let n = self.samples.max(1) as f64;
        self.bins.iter().map(|c| *c as f64 / n).collect()
    }

    /// Total-variation distance between the two empirical distributions;
    /// diverged and out-of-range samples count as two extra shared bins.
    pub fn tv_distance(&self, other: &AffineHistogram) -> Result<f64> {
        self.compatible(other)?;
        let mut a = self.weights();
        let mut b = other.weights();
        a.push(self.out_of_range as f64 / self.samples.max(1) as f64);
        b.push(other.out_of_range as f64 / other.samples.max(1) as f64);
        a.push(self.diverged as f64 / self.samples.max(1) as f64);
        b.push(other.diverged as f64 / other.samples.max(1) as f64);
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0)
    }

    /// Kolmogorov distance: max absolute difference of the bin CDFs.
    pub fn kolmogorov(&self, other: &AffineHistogram) -> Result<f64> {
        self.compatible(other)?;
        let a = self.weights();
        let b = other.weights();
        let mut ca = 0.0;
        let mut cb = 0.0;
        let mut best: f64 = 0.0;
        for (x, y) in a.iter().zip(&b) {
            ca += x;
            cb += y;
            best = best.max((ca - cb).abs());
        }
        Ok(best)
    }
}

/// Magnitude cap for the divergence guard: 2^40 on the dyadic scale.
const AFFINE_MAGNITUDE_CAP: i64 = 40;

/// Runs the affine walk g_n = s_1·s_2·…·s_n (composition is exact on
/// dyadics) and histograms g_n·x₀. Requires contraction on average: the
/// mean log₂-scale of the step must be negative, checked exactly.
/// Symmetric steps are flagged, not rejected.
pub fn affine_stationary_estimate(
    cfg: &WalkConfig,
    bins: u32,
    lo: f64,
    hi: f64,
    x0: &Dyadic,
) -> Result<AffineHistogram> {
    if cfg.model() != Model::Affine {
        return Err(Error::ModelMismatch {
            expected: Model::Affine.to_string(),
            found: cfg.model().to_string(),
        });
    }
    if bins == 0 || !(lo < hi) {
        return Err(Error::InvalidArgument(
            "need at least one bin and lo < hi".to_string(),
        ));
    }
    let mut mean_log_scale = BigRational::zero();
    for (g, w) in cfg.step.iter() {
        let a = match g {
            GroupElement::Affine(a) => a,
            _ => unreachable!("model checked above"),
        };
        mean_log_scale += w * BigRational::from_integer(BigInt::from(a.log_scale()));
    }
    if !mean_log_scale.is_negative() {
        return Err(Error::InvalidArgument(format!(
            "step is not contracting on average: mean log2-scale is {}",
            mean_log_scale
        )));
    }
    let symmetry_warning = cfg.step.is_symmetric();
    let sampler = StepSampler::new(&cfg.step)?;
    let mut histogram = AffineHistogram {
        bins: vec![0; bins as usize],
        lo,
        hi,
        samples: cfg.samples,
        diverged: 0,
        out_of_range: 0,
        seed: cfg.seed,
        symmetry_warning,
    };
    let width = (hi - lo) / bins as f64;
    for index in 0..u64::from(cfg.samples) {
        let mut rng = ChaCha8Rng::seed_from_u64(path_seed(cfg.seed, index));
        let mut g = cfg.model().identity();
        let mut diverged = false;
        for _ in 0..cfg.length {
            g = multiply(&g, sampler.draw(&mut rng))?;
            let a = match &g {
                GroupElement::Affine(a) => a,
                _ => unreachable!(),
            };
            let huge = a.offset().magnitude_exp().unwrap_or(0) > AFFINE_MAGNITUDE_CAP
                || a.log_scale() > AFFINE_MAGNITUDE_CAP;
            if huge {
                diverged = true;
                break;
            }
        }
        if diverged {
            histogram.diverged += 1;
            continue;
        }
        let a = match &g {
            GroupElement::Affine(a) => a,
            _ => unreachable!(),
        };
        let value = a.apply(x0).to_f64();
        if !value.is_finite() || value < lo || value >= hi {
            histogram.out_of_range += 1;
            continue;
        }
        let idx = ((value - lo) / width) as usize;
        histogram.bins[idx.min(bins as usize - 1)] += 1;
    }
    Ok(histogram)
}
