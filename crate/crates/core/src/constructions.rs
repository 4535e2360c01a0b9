//! Constructive boundary witnesses: saturation shifts that shrink a clopen
//! set, the staged shrinker that produces a window-thick set absorbing a
//! small set into small measure, fat-Cantor-style closed sets of positive
//! measure with certified interior emptiness to a given depth, detaching
//! witnesses for pairs of proper clopen sets, the translate comparison sets
//! S and U, and the composed construction of a dense-orbit set whose slice
//! is left thick while the ambient closed set's slice resists piecewise
//! syndeticity.
//!
//! Every measure reported here is an exact rational computed by the
//! cylinder calculus; searches are canonical (shortest witness first, ties
//! by word order) so replays are deterministic.

use num::rational::BigRational;
use num::{BigInt, One, Zero};

use crate::boundary::{BoundaryPoint, CylinderUnion};
use crate::error::{Error, Result};
use crate::group::{ball, sphere_iter, Alphabet, GroupElement, Letter, Model, ReducedWord};
use crate::largeness::{check_left_thick, check_pw_syndetic, check_thick, Certificate};
use crate::measure::{rational_string, sphere_measure};
use crate::sets::{density_profile, DensityProfile, Family, GroupSet, WindowSet};

/// Depth ceiling for the canonical descent searches; reaching it means the
/// requested tolerance is absurdly small, not that the search is stuck.
pub const DESCENT_DEPTH_BUDGET: u32 = 256;

/// The canonically least reduced word of length `depth` whose cylinder
/// avoids `b` entirely, obtained by descending away from fully-absorbed
/// children. Requires `depth ≥ b.depth()` so the final status is decided.
fn escape_word(b: &CylinderUnion, depth: u32) -> Result<ReducedWord> {
    if b.is_full() {
        return Err(Error::Conull);
    }
    let alphabet = b.alphabet();
    let mut letters: Vec<Letter> = alphabet.letters().collect();
    letters.sort();
    let mut w = ReducedWord::identity();
    for _ in 0..depth {
        let mut advanced = false;
        for &c in &letters {
            if w.last() == Some(c.inverse()) {
                continue;
            }
            let candidate = w.push(c);
            if b.status_at_prefix(&candidate) != Some(true) {
                w = candidate;
                advanced = true;
                break;
            }
        }
        if !advanced {
            // All admissible children absorbed would collapse the node to
            // fully-in, contradicting the canonical invariant.
            return Err(Error::Violation(format!(
                "canonical descent stuck below {w}"
            )));
        }
    }
    if b.status_at_prefix(&w) != Some(false) {
        return Err(Error::SearchBudget(format!(
            "descent to depth {depth} did not clear the set (depth {} needed)",
            b.depth()
        )));
    }
    Ok(w)
}

/// Canonically least reduced extension of `last` by `len` letters.
fn least_extension(alphabet: Alphabet, last: Option<Letter>, len: u32) -> Vec<Letter> {
    let mut letters: Vec<Letter> = alphabet.letters().collect();
    letters.sort();
    let mut out = Vec::with_capacity(len as usize);
    let mut prev = last;
    for _ in 0..len {
        let c = letters
            .iter()
            .copied()
            .find(|c| prev.map(|p| p.inverse() != *c).unwrap_or(true))
            .expect("alphabet has at least two letters");
        out.push(c);
        prev = Some(c);
    }
    out
}

/// A saturation witness: a translate pushing all of `b` below mass `epsilon`.
#[derive(Clone, Debug, PartialEq)]
pub struct SatWitness {
    pub shift: ReducedWord,
    /// Exact ν(shift⁻¹·B).
    pub mass: BigRational,
    pub epsilon: BigRational,
}

/// Finds g with ν(g⁻¹B) < ε by descending into the complement of B: the
/// returned g spans a cylinder disjoint from B, so pulling B through g⁻¹
/// pushes it below any positive tolerance once g is long enough. Fails
/// loudly when B is conull (no complement to descend into).
pub fn sat_search(b: &CylinderUnion, epsilon: &BigRational) -> Result<SatWitness> {
    if b.is_full() {
        return Err(Error::Conull);
    }
    if epsilon <= &BigRational::zero() {
        return Err(Error::InvalidArgument(
            "saturation tolerance must be positive".to_string(),
        ));
    }
    let identity_mass = b.measure();
    if epsilon >= &BigRational::one() || b.is_empty() {
        return Ok(SatWitness {
            shift: ReducedWord::identity(),
            mass: identity_mass,
            epsilon: epsilon.clone(),
        });
    }
    for depth in 1..=DESCENT_DEPTH_BUDGET {
        let w = match escape_word(b, depth) {
            Ok(w) => w,
            Err(Error::SearchBudget(_)) => continue,
            Err(e) => return Err(e),
        };
        let mass = b.translate(&w.inverse())?.measure();
        if &mass < epsilon {
            return Ok(SatWitness { shift: w, mass, epsilon: epsilon.clone() });
        }
    }
    Err(Error::SearchBudget(format!(
        "no shift within depth {DESCENT_DEPTH_BUDGET} reaches mass below {}",
        rational_string(epsilon)
    )))
}

/// One stage of the thick shrinker: with F = ball(radius), the shift s
/// satisfies ν(F·s·B) = mass < allowance, all exact.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkStep {
    pub radius: u32,
    pub shift: ReducedWord,
    pub allowance: BigRational,
    pub mass: BigRational,
}

/// The staged shrinker output: A = ⋃_n ball(n)·s_n is window-thick by
/// construction (ball(n)·s_n ⊆ A), yet ν(A·B) ≤ Σ_n mass_n < ε.
#[derive(Clone, Debug, PartialEq)]
pub struct ThickShrinker {
    pub steps: Vec<ShrinkStep>,
    pub total_mass: BigRational,
    pub epsilon: BigRational,
    pub description: String,
}

impl ThickShrinker {
    /// The finite set A = ⋃_n ball(n)·s_n, deduplicated in canonical order.
    pub fn a_elements(&self, alphabet: Alphabet) -> Vec<ReducedWord> {
        let mut out = Vec::new();
        for step in &self.steps {
            for f in ball(alphabet, step.radius) {
                out.push(f.concat(&step.shift));
            }
        }
        out.sort();
        out.dedup();
        out
    }
}

/// For each n = 1..=steps finds s_n with ν(ball(n)·s_n·B) < ε·2^{−n−1},
/// certifying the measures exactly. The shifts are inverses of canonical
/// escape words: s_n = w⁻¹ with [w] ∩ B = ∅, so every translate f·s_n·B
/// stays trapped in thin cylinders around w's mirror.
pub fn thick_shrinker(
    b: &CylinderUnion,
    epsilon: &BigRational,
    steps: u32,
) -> Result<ThickShrinker> {
    if b.is_full() {
        return Err(Error::Conull);
    }
    if epsilon <= &BigRational::zero() {
        return Err(Error::InvalidArgument(
            "shrinker tolerance must be positive".to_string(),
        ));
    }
    if steps > 60 {
        return Err(Error::InvalidArgument(
            "at most 60 shrinker stages are supported".to_string(),
        ));
    }
    let alphabet = b.alphabet();
    let mut out = Vec::with_capacity(steps as usize);
    let mut total = BigRational::zero();
    for n in 1..=steps {
        let allowance =
            epsilon.clone() / BigRational::from_integer(BigInt::from(1u128 << (n + 1)));
        if b.is_empty() {
            out.push(ShrinkStep {
                radius: n,
                shift: ReducedWord::identity(),
                allowance,
                mass: BigRational::zero(),
            });
            continue;
        }
        let mut found = None;
        for depth in b.depth().max(1)..=DESCENT_DEPTH_BUDGET {
            let w = escape_word(b, depth)?;
            let shift = w.inverse();
            let mut union = CylinderUnion::empty(alphabet);
            for f in ball(alphabet, n) {
                union = union.union(&b.translate(&f.concat(&shift))?)?;
            }
            let mass = union.measure();
            if mass < allowance {
                found = Some(ShrinkStep { radius: n, shift, allowance: allowance.clone(), mass });
                break;
            }
        }
        match found {
            Some(step) => {
                total += step.mass.clone();
                out.push(step);
            }
            None => {
                return Err(Error::SearchBudget(format!(
                    "no shift within depth {DESCENT_DEPTH_BUDGET} for stage {n}"
                )))
            }
        }
    }
    let description = format!(
        "A = union over n = 1..={steps} of ball(n)·s_n; exact mass of A·B is {} < {}",
        rational_string(&total),
        rational_string(epsilon),
    );
    Ok(ThickShrinker {
        steps: out,
        total_mass: total,
        epsilon: epsilon.clone(),
        description,
    })
}

/// Shortest s (ties by word order) with K ∩ s·L = ∅, verified by the exact
/// cylinder calculus. Both sets must be proper: the full boundary detaches
/// from nothing.
pub fn detaching_witness(
    k: &CylinderUnion,
    l: &CylinderUnion,
    witness_radius: u32,
) -> Result<ReducedWord> {
    if k.is_full() {
        return Err(Error::NotProper("first set is the full boundary".to_string()));
    }
    if l.is_full() {
        return Err(Error::NotProper("second set is the full boundary".to_string()));
    }
    let mut candidates = ball(k.alphabet(), witness_radius);
    candidates.sort();
    for s in candidates {
        if k.is_disjoint(&l.translate(&s)?)? {
            return Ok(s);
        }
    }
    Err(Error::SearchBudget(format!(
        "no detaching witness within ball({witness_radius})"
    )))
}

/// One carving stage: every still-absorbed depth-`depth` cylinder lost its
/// canonically least extension of length `carve_length`.
#[derive(Clone, Debug, PartialEq)]
pub struct FatCantorStage {
    pub depth: u32,
    pub carve_length: u32,
    pub carved: u64,
    pub removed: BigRational,
}

/// A closed set of exactly known measure whose interior emptiness is
/// certified to `interior_depth`: every cylinder that deep or shallower
/// meets the complement.
#[derive(Clone, Debug, PartialEq)]
pub struct FatCantor {
    pub set: CylinderUnion,
    pub measure: BigRational,
    pub removed: BigRational,
    pub stages: Vec<FatCantorStage>,
    pub interior_depth: u32,
    pub interior_certified: bool,
    /// True for the empty schedule: the set is the full boundary and its
    /// interior is anything but empty.
    pub degenerate: bool,
}

/// Carves, at each scheduled depth d_k, one length-m_k extension out of
/// every cylinder of depth d_k still fully inside the set. The removed
/// mass is checked exactly against the 1−α budget.
pub fn fat_cantor(
    alphabet: Alphabet,
    alpha: &BigRational,
    depths: &[u32],
    carve_lengths: &[u32],
) -> Result<FatCantor> {
    if alpha < &BigRational::zero() || alpha > &BigRational::one() {
        return Err(Error::InvalidArgument(format!(
            "target measure {} outside [0,1]",
            rational_string(alpha)
        )));
    }
    if depths.len() != carve_lengths.len() {
        return Err(Error::InvalidArgument(
            "one carve length per scheduled depth required".to_string(),
        ));
    }
    if depths.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::InvalidArgument(
            "scheduled depths must be strictly increasing".to_string(),
        ));
    }
    if depths.first().is_some_and(|d| *d == 0) || carve_lengths.iter().any(|m| *m == 0) {
        return Err(Error::InvalidArgument(
            "depths and carve lengths must be positive".to_string(),
        ));
    }
    let allowed = BigRational::one() - alpha;
    if depths.is_empty() {
        return Ok(FatCantor {
            set: CylinderUnion::full(alphabet),
            measure: BigRational::one(),
            removed: BigRational::zero(),
            stages: Vec::new(),
            interior_depth: 0,
            interior_certified: false,
            degenerate: true,
        });
    }
    let mut set = CylinderUnion::full(alphabet);
    let mut removed = BigRational::zero();
    let mut stages = Vec::with_capacity(depths.len());
    for (&depth, &carve_length) in depths.iter().zip(carve_lengths) {
        let mut carved = 0u64;
        let mut stage_removed = BigRational::zero();
        let hosts: Vec<ReducedWord> = sphere_iter(alphabet, depth).collect();
        for w in hosts {
            if set.status_at_prefix(&w) != Some(true) {
                continue;
            }
            let mut piece_word = w.clone();
            for c in least_extension(alphabet, w.last(), carve_length) {
                piece_word = piece_word.push(c);
            }
            let piece = CylinderUnion::cylinder(alphabet, &piece_word)?;
            // The piece sits fully inside the set, so the removal is exact.
            removed += piece.measure();
            stage_removed += piece.measure();
            carved += 1;
            set = set.intersect(&piece.complement())?;
            if removed > allowed {
                return Err(Error::InfeasibleSchedule {
                    removed: rational_string(&removed),
                    allowed: rational_string(&allowed),
                });
            }
        }
        stages.push(FatCantorStage { depth, carve_length, carved, removed: stage_removed });
    }
    let interior_depth = *depths.last().expect("nonempty schedule");
    let mut interior_certified = !set.is_full();
    'certify: for d in 1..=interior_depth {
        for w in sphere_iter(alphabet, d) {
            if set.status_at_prefix(&w) == Some(true) {
                interior_certified = false;
                break 'certify;
            }
        }
    }
    let measure = set.measure();
    debug_assert_eq!(measure.clone() + removed.clone(), BigRational::one());
    Ok(FatCantor {
        set,
        measure,
        removed,
        stages,
        interior_depth,
        interior_certified,
        degenerate: false,
    })
}

/// The default carving schedule: depths 1, 2, 3 with length-2 carvings.
pub fn fat_cantor_default(alphabet: Alphabet, alpha: &BigRational) -> Result<FatCantor> {
    fat_cantor(alphabet, alpha, &[1, 2, 3], &[2, 2, 2])
}

/// A window of a translate comparison set, with a thickness certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapReport {
    pub window_set: WindowSet,
    pub certificate: Certificate,
    /// The comparison threshold: ν(B) for the S-set, 1 − ν(C) slack for
    /// the positive-overlap set (always 0 there: any positive mass counts).
    pub threshold: BigRational,
}

/// S = {g : ν(g·B) ≥ ν(B)} computed exactly on a ball and submitted to the
/// window-thickness checker.
pub fn thick_set_s(
    b: &CylinderUnion,
    window: u32,
    test_radius: u32,
    witness_radius: u32,
) -> Result<OverlapReport> {
    let threshold = b.measure();
    let member = |g: &ReducedWord| -> Result<bool> {
        Ok(b.translate(g)?.measure() >= threshold)
    };
    overlap_report(
        b.alphabet(),
        member,
        "S = { g : measure(g·B) >= measure(B) }",
        window,
        test_radius,
        witness_radius,
        threshold.clone(),
    )
}

/// U = {g : ν(C ∩ g·B) > 0} for ν(B) + ν(C) > 1, computed exactly on a
/// ball and submitted to the window-thickness checker.
pub fn positive_overlap_set(
    b: &CylinderUnion,
    c: &CylinderUnion,
    window: u32,
    test_radius: u32,
    witness_radius: u32,
) -> Result<OverlapReport> {
    if b.measure() + c.measure() <= BigRational::one() {
        return Err(Error::InvalidArgument(
            "the two sets must have total measure above one".to_string(),
        ));
    }
    let member = |g: &ReducedWord| -> Result<bool> {
        Ok(!c.is_disjoint(&b.translate(g)?)?)
    };
    overlap_report(
        b.alphabet(),
        member,
        "U = { g : measure(C ∩ g·B) > 0 }",
        window,
        test_radius,
        witness_radius,
        BigRational::zero(),
    )
}

fn overlap_report(
    alphabet: Alphabet,
    mut member: impl FnMut(&ReducedWord) -> Result<bool>,
    provenance: &str,
    window: u32,
    test_radius: u32,
    witness_radius: u32,
    threshold: BigRational,
) -> Result<OverlapReport> {
    let reach = window.max(test_radius + witness_radius);
    let mut members_wide = Vec::new();
    for g in ball(alphabet, reach) {
        if member(&g)? {
            members_wide.push(GroupElement::Free(g));
        }
    }
    let window_members: Vec<GroupElement> = members_wide
        .iter()
        .filter(|g| g.norm().is_some_and(|n| n <= u64::from(window)))
        .cloned()
        .collect();
    let window_set = WindowSet::new(window, window_members, provenance, true);
    let model = Model::Free { rank: alphabet.rank() };
    let probe_set = GroupSet::explicit(model, members_wide)?;
    let certificate = check_thick(&probe_set, test_radius, witness_radius)?;
    Ok(OverlapReport { window_set, certificate, threshold })
}

/// Budgets for the composed construction.
#[derive(Clone, Debug, PartialEq)]
pub struct NotLiouvilleParams {
    pub epsilon: BigRational,
    pub steps: u32,
    pub left_thick_test_radius: u32,
    pub left_thick_witness_radius: u32,
    pub pw_cover_radius: u32,
    pub pw_test_radius: u32,
    pub pw_witness_radius: u32,
    pub profile_len: u32,
}

impl Default for NotLiouvilleParams {
    fn default() -> Self {
        NotLiouvilleParams {
            epsilon: BigRational::new(BigInt::from(2), BigInt::from(5)),
            steps: 4,
            left_thick_test_radius: 2,
            left_thick_witness_radius: 8,
            pw_cover_radius: 2,
            pw_test_radius: 1,
            pw_witness_radius: 8,
            profile_len: 10,
        }
    }
}

/// The composed report: A absorbs the complement of C into mass < ε, the
/// intersection B of the A-translates of C is big, all its A-pullbacks lie
/// in C, and slices at an eventually periodic point of B are probed for the
/// contrast between B's left thickness and C's piecewise syndeticity. Both
/// certificate fields carry whatever verdict the bounded searches reached;
/// note that a finite carving stage leaves whole cylinders inside C, so its
/// slice can genuinely pass the windowed thickness test after finitely many
/// translates even though the infinitely-carved limit object could not.
#[derive(Clone, Debug)]
pub struct NotLiouville {
    pub shrinker: ThickShrinker,
    pub a_elements: Vec<ReducedWord>,
    pub b_set: CylinderUnion,
    pub b_measure: BigRational,
    pub inclusions_verified: bool,
    pub base_point: BoundaryPoint,
    pub left_thick: Certificate,
    pub pw_syndetic: Certificate,
    pub profile: DensityProfile,
    pub degenerate: bool,
}

/// Runs the complement of `c` through [`thick_shrinker`], intersects the
/// A-translates of `c` into B, verifies every pullback inclusion exactly,
/// then anchors slices at a canonical eventually periodic point of B.
pub fn notliouville_construction(
    c: &CylinderUnion,
    params: &NotLiouvilleParams,
) -> Result<NotLiouville> {
    let alphabet = c.alphabet();
    let d = c.complement();
    let shrinker = thick_shrinker(&d, &params.epsilon, params.steps)?;
    let a_elements = shrinker.a_elements(alphabet);

    let mut b_set = CylinderUnion::full(alphabet);
    for a in &a_elements {
        b_set = b_set.intersect(&c.translate(a)?)?;
    }
    let b_measure = b_set.measure();

    let mut inclusions_verified = true;
    for a in &a_elements {
        if !b_set.translate(&a.inverse())?.is_subset(c)? {
            inclusions_verified = false;
        }
    }

    if b_set.is_empty() {
        return Err(Error::SearchBudget(
            "the translate intersection came out empty; loosen the tolerance".to_string(),
        ));
    }
    let anchors = b_set.maximal_in_cylinders();
    let anchor = anchors.first().cloned().unwrap_or_else(ReducedWord::identity);
    let mut letters: Vec<Letter> = alphabet.letters().collect();
    letters.sort();
    let period_letter = letters
        .iter()
        .copied()
        .find(|l| anchor.last().map(|p| p.inverse() != *l).unwrap_or(true))
        .expect("alphabet has at least two letters");
    let base_point =
        BoundaryPoint::new(anchor, ReducedWord::from_letters(vec![period_letter]))?;

    let b_slice = GroupSet::slice(b_set.clone(), base_point.clone())?;
    let c_slice = GroupSet::slice(c.clone(), base_point.clone())?;
    let left_thick = check_left_thick(
        &b_slice,
        params.left_thick_test_radius,
        params.left_thick_witness_radius,
    )?;
    let pw_syndetic = check_pw_syndetic(
        &c_slice,
        params.pw_cover_radius,
        params.pw_test_radius,
        params.pw_witness_radius,
    )?;
    let profile = density_profile(
        &b_slice,
        &Family::Walk(sphere_measure(alphabet, 1)),
        params.profile_len,
    )?;

    Ok(NotLiouville {
        shrinker,
        a_elements,
        b_set,
        b_measure,
        inclusions_verified,
        base_point,
        left_thick,
        pw_syndetic,
        profile,
        degenerate: c.is_full(),
    })
}
