//! Independent certificate replay.
//!
//! Every function here re-evaluates the claims stored in a [`Certificate`]
//! from raw membership rules and the group operations alone — none of the
//! search machinery is involved. The test family is regenerated from the
//! certificate's `(model, radius, seed)` triple so coverage omissions are
//! detected, every stored witness is checked against its stated budget
//! ball, and every stated inclusion is re-verified element by element. For
//! `not-found-within-budget` verdicts the verifier re-scans the full budget
//! to confirm no witness was missed.
//!
//! Violations name the inclusion that broke, e.g.
//! `("a1 a2")·("a2'") = "a1" lies outside the set for test set {…}`.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::group::{invert, multiply, GroupElement};
use crate::largeness::{test_family, witness_order, Certificate, Property, Verdict};
use crate::measure::parse_rational;
use crate::sets::GroupSet;

/// What a successful replay actually re-checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplaySummary {
    pub property: Property,
    pub verdict: Verdict,
    /// Individual membership statements re-evaluated for stored witnesses.
    pub inclusions_checked: u64,
    /// Full budget scans run to confirm recorded `not found` outcomes.
    pub exhaustive_scans: u64,
}

/// Replays a single-set certificate (thickness, syndeticity, piecewise
/// syndeticity, or non-syndetic separators) against the set it was issued
/// for. Product certificates need [`replay_product_certificate`].
pub fn replay_certificate(cert: &Certificate, set: &GroupSet) -> Result<ReplaySummary> {
    match cert.property {
        Property::Thick => replay_thick(cert, set, false),
        Property::LeftThick => replay_thick(cert, set, true),
        Property::Syndetic => replay_syndetic(cert, set, false),
        Property::LeftSyndetic => replay_syndetic(cert, set, true),
        Property::PwSyndetic => replay_pw(cert, set, false),
        Property::PwLeftSyndetic => replay_pw(cert, set, true),
        Property::NonSyndeticSeparator => replay_separator(cert, set),
        Property::ProductThick | Property::LeftProductDensity => Err(Error::InvalidArgument(
            format!("{:?} certificates replay against two sets", cert.property),
        )),
    }
}

/// Replays a two-set certificate (three-factor product thickness or the
/// left product density property) against the pair it was issued for.
pub fn replay_product_certificate(
    cert: &Certificate,
    a: &GroupSet,
    b: &GroupSet,
) -> Result<ReplaySummary> {
    if a.model() != b.model() {
        return Err(Error::ModelMismatch {
            expected: a.model().to_string(),
            found: b.model().to_string(),
        });
    }
    match cert.property {
        Property::ProductThick => replay_product_thick(cert, a, b),
        Property::LeftProductDensity => replay_left_density(cert, a, b),
        _ => Err(Error::InvalidArgument(format!(
            "{:?} certificates replay against one set",
            cert.property
        ))),
    }
}

fn violation(msg: String) -> Error {
    Error::Violation(msg)
}

fn need(field: Option<u32>, name: &str) -> Result<u32> {
    field.ok_or_else(|| violation(format!("certificate is missing its {name}")))
}

fn describe(elements: &[GroupElement]) -> String {
    let inner: Vec<String> = elements.iter().map(|g| g.to_string()).collect();
    format!("{{{}}}", inner.join(", "))
}

/// Membership in the raw set, memoized. This is the verifier's only oracle.
struct RawSet<'a> {
    set: &'a GroupSet,
    cache: HashMap<GroupElement, bool>,
}

impl<'a> RawSet<'a> {
    fn new(set: &'a GroupSet) -> Self {
        RawSet { set, cache: HashMap::new() }
    }

    fn contains(&mut self, g: &GroupElement) -> Result<bool> {
        if let Some(v) = self.cache.get(g) {
            return Ok(*v);
        }
        let v = self.set.contains(g)?;
        self.cache.insert(g.clone(), v);
        Ok(v)
    }
}

fn in_budget(budget: &HashSet<GroupElement>, g: &GroupElement, what: &str) -> Result<()> {
    if budget.contains(g) {
        Ok(())
    } else {
        Err(violation(format!("{what} \"{g}\" lies outside its stated budget ball")))
    }
}

fn check_verdict(cert: &Certificate, all_witnessed: bool) -> Result<()> {
    match cert.verdict {
        Verdict::Certified if !all_witnessed => Err(violation(
            "verdict says certified but the test family is not fully witnessed".to_string(),
        )),
        Verdict::NotFoundWithinBudget if all_witnessed => Err(violation(
            "verdict says not-found but every test set carries a witness".to_string(),
        )),
        _ => Ok(()),
    }
}

fn replay_thick(cert: &Certificate, set: &GroupSet, left: bool) -> Result<ReplaySummary> {
    let test_radius = need(cert.test_radius, "test radius")?;
    let witness_radius = need(cert.witness_radius, "witness radius")?;
    let family = test_family(set.model(), test_radius, cert.seed)?;
    let order = witness_order(set.model(), witness_radius)?;
    let budget: HashSet<GroupElement> = order.iter().cloned().collect();
    let mut raw = RawSet::new(set);
    let mut inclusions = 0u64;
    let mut scans = 0u64;
    let mut witnessed = 0usize;
    for witness in &cert.translates {
        if !family.contains(&witness.test_set) {
            return Err(violation(format!(
                "witness for {} does not match any regenerated test set",
                describe(&witness.test_set)
            )));
        }
    }
    for test_set in &family {
        match cert.translates.iter().find(|w| w.test_set == *test_set) {
            Some(witness) => {
                in_budget(&budget, &witness.translate, "translate")?;
                for l in test_set {
                    let shifted = if left {
                        multiply(&witness.translate, l)?
                    } else {
                        multiply(l, &witness.translate)?
                    };
                    inclusions += 1;
                    if !raw.contains(&shifted)? {
                        return Err(violation(format!(
                            "(\"{l}\")·(\"{}\") = \"{shifted}\" lies outside the set for test set {}",
                            witness.translate,
                            describe(test_set)
                        )));
                    }
                }
                witnessed += 1;
            }
            None => {
                scans += 1;
                for g in &order {
                    let mut works = true;
                    for l in test_set {
                        let shifted = if left { multiply(g, l)? } else { multiply(l, g)? };
                        if !raw.contains(&shifted)? {
                            works = false;
                            break;
                        }
                    }
                    if works {
                        return Err(violation(format!(
                            "no witness recorded for {} but \"{g}\" works",
                            describe(test_set)
                        )));
                    }
                }
            }
        }
    }
    check_verdict(cert, witnessed == family.len())?;
    Ok(ReplaySummary {
        property: cert.property,
        verdict: cert.verdict,
        inclusions_checked: inclusions,
        exhaustive_scans: scans,
    })
}

fn replay_syndetic(cert: &Certificate, set: &GroupSet, left: bool) -> Result<ReplaySummary> {
    let cover_radius = need(cert.cover_radius, "cover radius")?;
    let window = need(cert.window, "window")?;
    let candidates = witness_order(set.model(), cover_radius)?;
    let candidate_set: HashSet<GroupElement> = candidates.iter().cloned().collect();
    let targets = witness_order(set.model(), window)?;
    let mut raw = RawSet::new(set);
    let mut inclusions = 0u64;
    let mut scans = 0u64;
    for f in &cert.f_witness {
        in_budget(&candidate_set, f, "cover element")?;
    }
    // w is covered by f when w ∈ f·C (right variant) or w ∈ C·f (left).
    let covered = |raw: &mut RawSet<'_>, f: &GroupElement, w: &GroupElement| -> Result<bool> {
        let probe = if left { multiply(w, &invert(f))? } else { multiply(&invert(f), w)? };
        raw.contains(&probe)
    };
    match cert.verdict {
        Verdict::Certified => {
            for w in &targets {
                let mut hit = false;
                for f in &cert.f_witness {
                    inclusions += 1;
                    if covered(&mut raw, f, w)? {
                        hit = true;
                        break;
                    }
                }
                if !hit {
                    return Err(violation(format!(
                        "window element \"{w}\" is not covered by the stated F = {}",
                        describe(&cert.f_witness)
                    )));
                }
            }
        }
        Verdict::NotFoundWithinBudget => {
            // The recorded failure means some window element is covered by
            // no candidate at all; confirm one exists.
            scans += 1;
            let mut stuck = false;
            'targets: for w in &targets {
                for f in &candidates {
                    if covered(&mut raw, f, w)? {
                        continue 'targets;
                    }
                }
                stuck = true;
                break;
            }
            if !stuck {
                return Err(violation(
                    "verdict says not-found but every window element is coverable".to_string(),
                ));
            }
        }
    }
    Ok(ReplaySummary {
        property: cert.property,
        verdict: cert.verdict,
        inclusions_checked: inclusions,
        exhaustive_scans: scans,
    })
}

fn replay_pw(cert: &Certificate, set: &GroupSet, left_product: bool) -> Result<ReplaySummary> {
    let cover_radius = need(cert.cover_radius, "cover radius")?;
    let test_radius = need(cert.test_radius, "test radius")?;
    let witness_radius = need(cert.witness_radius, "witness radius")?;
    let family = test_family(set.model(), test_radius, cert.seed)?;
    let order = witness_order(set.model(), witness_radius)?;
    let budget: HashSet<GroupElement> = order.iter().cloned().collect();
    let candidates = witness_order(set.model(), cover_radius)?;
    let candidate_set: HashSet<GroupElement> = candidates.iter().cloned().collect();
    let mut raw = RawSet::new(set);
    let mut inclusions = 0u64;
    let mut scans = 0u64;
    for f in &cert.f_witness {
        in_budget(&candidate_set, f, "cover element")?;
    }
    // Membership in the product set: w ∈ F·C means some f⁻¹·w ∈ C, the left
    // product C·F needs w·f⁻¹ ∈ C.
    let mut product_cache: HashMap<GroupElement, bool> = HashMap::new();
    macro_rules! in_product {
        ($w:expr) => {{
            let w: &GroupElement = $w;
            match product_cache.get(w) {
                Some(v) => *v,
                None => {
                    let mut member = false;
                    for f in &cert.f_witness {
                        let probe = if left_product {
                            multiply(w, &invert(f))?
                        } else {
                            multiply(&invert(f), w)?
                        };
                        if raw.contains(&probe)? {
                            member = true;
                            break;
                        }
                    }
                    product_cache.insert(w.clone(), member);
                    member
                }
            }
        }};
    }
    match cert.verdict {
        Verdict::Certified => {
            for witness in &cert.translates {
                if !family.contains(&witness.test_set) {
                    return Err(violation(format!(
                        "witness for {} does not match any regenerated test set",
                        describe(&witness.test_set)
                    )));
                }
            }
            for test_set in &family {
                let witness = cert
                    .translates
                    .iter()
                    .find(|w| w.test_set == *test_set)
                    .ok_or_else(|| {
                        violation(format!(
                            "certified without a witness for test set {}",
                            describe(test_set)
                        ))
                    })?;
                in_budget(&budget, &witness.translate, "translate")?;
                for l in test_set {
                    let shifted = multiply(l, &witness.translate)?;
                    inclusions += 1;
                    if !in_product!(&shifted) {
                        return Err(violation(format!(
                            "(\"{l}\")·(\"{}\") = \"{shifted}\" lies outside the product set for test set {}",
                            witness.translate,
                            describe(test_set)
                        )));
                    }
                }
            }
        }
        Verdict::NotFoundWithinBudget => {
            // (a) The stated F genuinely fails: some test set admits no
            // translate within the budget.
            scans += 1;
            let mut failing = false;
            'family: for test_set in &family {
                'order: for g in &order {
                    for l in test_set {
                        let shifted = multiply(l, g)?;
                        if !in_product!(&shifted) {
                            continue 'order;
                        }
                    }
                    continue 'family; // this test set has a witness
                }
                failing = true;
                break;
            }
            if !failing {
                return Err(violation(
                    "verdict says not-found but the stated F makes the product set window-thick"
                        .to_string(),
                ));
            }
            // (b) Growing F further cannot help: inside the probe window
            // every element reachable from any candidate is already in the
            // product set (skipped when F already exhausts the budget).
            let f_set: HashSet<&GroupElement> = cert.f_witness.iter().collect();
            if !candidates.iter().all(|c| f_set.contains(c)) {
                scans += 1;
                let probe = witness_order(set.model(), test_radius + witness_radius)?;
                for w in &probe {
                    if in_product!(w) {
                        continue;
                    }
                    for cand in &candidates {
                        let probe_el = if left_product {
                            multiply(w, &invert(cand))?
                        } else {
                            multiply(&invert(cand), w)?
                        };
                        if raw.contains(&probe_el)? {
                            return Err(violation(format!(
                                "stated F is not saturated: candidate \"{cand}\" still absorbs \"{w}\""
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(ReplaySummary {
        property: cert.property,
        verdict: cert.verdict,
        inclusions_checked: inclusions,
        exhaustive_scans: scans,
    })
}

fn replay_separator(cert: &Certificate, set: &GroupSet) -> Result<ReplaySummary> {
    let cover_radius = need(cert.cover_radius, "cover radius")?;
    let witness_radius = need(cert.witness_radius, "witness radius")?;
    let window = need(cert.window, "window")?;
    let family = test_family(set.model(), cover_radius, cert.seed)?;
    let order = witness_order(set.model(), witness_radius)?;
    let budget: HashSet<GroupElement> = order.iter().cloned().collect();
    let targets = witness_order(set.model(), window)?;
    let mut raw = RawSet::new(set);
    let mut inclusions = 0u64;
    let mut scans = 0u64;
    let mut witnessed = 0usize;
    for witness in &cert.separators {
        if !family.contains(&witness.test_set) {
            return Err(violation(format!(
                "separator for {} does not match any regenerated test set",
                describe(&witness.test_set)
            )));
        }
    }
    // w ∈ g·A ⟺ g⁻¹·w ∈ A.
    let translated = |raw: &mut RawSet<'_>, g: &GroupElement, w: &GroupElement| -> Result<bool> {
        raw.contains(&multiply(&invert(g), w)?)
    };
    for f_set in &family {
        match cert.separators.iter().find(|s| s.test_set == *f_set) {
            Some(witness) => {
                in_budget(&budget, &witness.separator, "separator")?;
                for w in &targets {
                    let mut in_fa = false;
                    for f in f_set {
                        if translated(&mut raw, f, w)? {
                            in_fa = true;
                            break;
                        }
                    }
                    inclusions += 1;
                    if in_fa && translated(&mut raw, &witness.separator, w)? {
                        return Err(violation(format!(
                            "\"{w}\" lies in both F·A and (\"{}\")·A for F = {}",
                            witness.separator,
                            describe(f_set)
                        )));
                    }
                }
                witnessed += 1;
            }
            None => {
                // Confirm every candidate separator meets F·A in the window.
                scans += 1;
                let mut fa = Vec::new();
                for w in &targets {
                    for f in f_set {
                        if translated(&mut raw, f, w)? {
                            fa.push(w.clone());
                            break;
                        }
                    }
                }
                's_loop: for s in &order {
                    for w in &fa {
                        if translated(&mut raw, s, w)? {
                            continue 's_loop;
                        }
                    }
                    return Err(violation(format!(
                        "no separator recorded for F = {} but \"{s}\" separates",
                        describe(f_set)
                    )));
                }
            }
        }
    }
    check_verdict(cert, witnessed == family.len())?;
    Ok(ReplaySummary {
        property: cert.property,
        verdict: cert.verdict,
        inclusions_checked: inclusions,
        exhaustive_scans: scans,
    })
}

fn replay_product_thick(cert: &Certificate, a: &GroupSet, b: &GroupSet) -> Result<ReplaySummary> {
    let cover_radius = need(cert.cover_radius, "cover radius")?;
    let test_radius = need(cert.test_radius, "test radius")?;
    let witness_radius = need(cert.witness_radius, "witness radius")?;
    let density_window = need(cert.window, "density window")?;
    let family = test_family(a.model(), test_radius, cert.seed)?;
    let order = witness_order(a.model(), witness_radius)?;
    let budget: HashSet<GroupElement> = order.iter().cloned().collect();
    let candidate_set: HashSet<GroupElement> =
        witness_order(a.model(), cover_radius)?.into_iter().collect();
    for f in &cert.f_witness {
        in_budget(&candidate_set, f, "middle factor")?;
    }
    // Factor list for B, reconstructed exactly as documented: every element
    // of B within the combined radius.
    let factor_radius = witness_radius + test_radius + cover_radius;
    let mut raw_a = RawSet::new(a);
    let mut raw_b = RawSet::new(b);
    let mut b_factors = Vec::new();
    for g in witness_order(b.model(), factor_radius)? {
        if raw_b.contains(&g)? {
            b_factors.push(g);
        }
    }
    let mut product_cache: HashMap<GroupElement, bool> = HashMap::new();
    // w ∈ A·F·B ⟺ ∃φ∈F, ∃b: w·b⁻¹·φ⁻¹ ∈ A.
    macro_rules! in_product {
        ($w:expr) => {{
            let w: &GroupElement = $w;
            match product_cache.get(w) {
                Some(v) => *v,
                None => {
                    let mut member = false;
                    'outer: for phi in &cert.f_witness {
                        for bf in &b_factors {
                            let cand = multiply(&multiply(w, &invert(bf))?, &invert(phi))?;
                            if raw_a.contains(&cand)? {
                                member = true;
                                break 'outer;
                            }
                        }
                    }
                    product_cache.insert(w.clone(), member);
                    member
                }
            }
        }};
    }
    let mut inclusions = 0u64;
    let mut scans = 0u64;
    match cert.verdict {
        Verdict::Certified => {
            for witness in &cert.translates {
                if !family.contains(&witness.test_set) {
                    return Err(violation(format!(
                        "witness for {} does not match any regenerated test set",
                        describe(&witness.test_set)
                    )));
                }
            }
            for test_set in &family {
                let witness = cert
                    .translates
                    .iter()
                    .find(|w| w.test_set == *test_set)
                    .ok_or_else(|| {
                        violation(format!(
                            "certified without a witness for test set {}",
                            describe(test_set)
                        ))
                    })?;
                in_budget(&budget, &witness.translate, "translate")?;
                for l in test_set {
                    let shifted = multiply(l, &witness.translate)?;
                    inclusions += 1;
                    if !in_product!(&shifted) {
                        return Err(violation(format!(
                            "(\"{l}\")·(\"{}\") = \"{shifted}\" lies outside the product for test set {}",
                            witness.translate,
                            describe(test_set)
                        )));
                    }
                }
            }
            // Density statements: recompute both sides exactly.
            let window_elems = witness_order(a.model(), density_window)?;
            let mut b_hits = 0u64;
            for w in &window_elems {
                if raw_b.contains(w)? {
                    b_hits += 1;
                }
            }
            for witness in &cert.densities {
                if !family.contains(&witness.test_set) {
                    return Err(violation(format!(
                        "density witness for {} does not match any regenerated test set",
                        describe(&witness.test_set)
                    )));
                }
                if witness.f_set != cert.f_witness {
                    return Err(violation(
                        "density witness F differs from the certificate's F".to_string(),
                    ));
                }
                let mut hits = 0u64;
                for w in &window_elems {
                    let mut all = true;
                    for l in &witness.test_set {
                        let shifted = multiply(&invert(l), w)?;
                        if !in_product!(&shifted) {
                            all = false;
                            break;
                        }
                    }
                    if all {
                        hits += 1;
                    }
                }
                let total = window_elems.len() as u64;
                let recorded = parse_rational(&witness.density)?;
                let recomputed =
                    num::BigRational::new(hits.into(), total.into());
                inclusions += total;
                if recorded != recomputed {
                    return Err(violation(format!(
                        "density for test set {} recomputes to {recomputed} but the certificate says {}",
                        describe(&witness.test_set),
                        witness.density
                    )));
                }
                let recorded_ref = parse_rational(&witness.reference)?;
                let recomputed_ref = num::BigRational::new(b_hits.into(), total.into());
                if recorded_ref != recomputed_ref {
                    return Err(violation(format!(
                        "reference density recomputes to {recomputed_ref} but the certificate says {}",
                        witness.reference
                    )));
                }
            }
        }
        Verdict::NotFoundWithinBudget => {
            // The search exhausts the whole candidate ball before giving up,
            // so the stated F must already be that ball; verify, then confirm
            // some test set admits no translate.
            for cand in &candidate_set {
                if !cert.f_witness.contains(cand) {
                    return Err(violation(format!(
                        "not-found verdict with candidate \"{cand}\" never tried"
                    )));
                }
            }
            scans += 1;
            let mut failing = false;
            'family: for test_set in &family {
                'order: for g in &order {
                    for l in test_set {
                        let shifted = multiply(l, g)?;
                        if !in_product!(&shifted) {
                            continue 'order;
                        }
                    }
                    continue 'family;
                }
                failing = true;
                break;
            }
            if !failing {
                return Err(violation(
                    "verdict says not-found but the product set is window-thick".to_string(),
                ));
            }
        }
    }
    Ok(ReplaySummary {
        property: cert.property,
        verdict: cert.verdict,
        inclusions_checked: inclusions,
        exhaustive_scans: scans,
    })
}

fn replay_left_density(cert: &Certificate, a: &GroupSet, b: &GroupSet) -> Result<ReplaySummary> {
    let cover_radius = need(cert.cover_radius, "cover radius")?;
    let test_radius = need(cert.test_radius, "test radius")?;
    let window = need(cert.window, "window")?;
    let family = test_family(a.model(), test_radius, cert.seed)?;
    let candidates = witness_order(a.model(), cover_radius)?;
    let candidate_set: HashSet<GroupElement> = candidates.iter().cloned().collect();
    let window_elems = witness_order(a.model(), window)?;
    let total = window_elems.len() as u64;
    let factor_radius = window + test_radius + cover_radius;
    let mut raw_a = RawSet::new(a);
    let mut raw_b = RawSet::new(b);
    let mut a_factors = Vec::new();
    for g in witness_order(a.model(), factor_radius)? {
        if raw_a.contains(&g)? {
            a_factors.push(g);
        }
    }
    let mut ab_cache: HashMap<GroupElement, bool> = HashMap::new();
    let mut b_hits = 0u64;
    for w in &window_elems {
        if raw_b.contains(w)? {
            b_hits += 1;
        }
    }
    let reference = num::BigRational::new(b_hits.into(), total.into());
    let density_for = |f_set: &[GroupElement],
                           test_set: &[GroupElement],
                           raw_b: &mut RawSet<'_>,
                           ab_cache: &mut HashMap<GroupElement, bool>|
     -> Result<num::BigRational> {
        let mut hits = 0u64;
        for w in &window_elems {
            let mut all = true;
            for l in test_set {
                let shifted = multiply(&invert(l), w)?;
                // shifted ∈ F·A·B ⟺ ∃φ∈F with φ⁻¹·shifted ∈ A·B, the
                // latter tested against the explicit factor list for A.
                let mut member = false;
                for phi in f_set {
                    let v = multiply(&invert(phi), &shifted)?;
                    let m = match ab_cache.get(&v) {
                        Some(m) => *m,
                        None => {
                            let mut found = false;
                            for x in &a_factors {
                                let rest = multiply(&invert(x), &v)?;
                                if raw_b.contains(&rest)? {
                                    found = true;
                                    break;
                                }
                            }
                            ab_cache.insert(v.clone(), found);
                            found
                        }
                    };
                    if m {
                        member = true;
                        break;
                    }
                }
                if !member {
                    all = false;
                    break;
                }
            }
            if all {
                hits += 1;
            }
        }
        Ok(num::BigRational::new(hits.into(), total.into()))
    };
    let mut inclusions = 0u64;
    let mut scans = 0u64;
    let mut witnessed = 0usize;
    for witness in &cert.densities {
        if !family.contains(&witness.test_set) {
            return Err(violation(format!(
                "density witness for {} does not match any regenerated test set",
                describe(&witness.test_set)
            )));
        }
    }
    for test_set in &family {
        match cert.densities.iter().find(|d| d.test_set == *test_set) {
            Some(witness) => {
                for f in &witness.f_set {
                    in_budget(&candidate_set, f, "cover element")?;
                }
                let recomputed =
                    density_for(&witness.f_set, test_set, &mut raw_b, &mut ab_cache)?;
                inclusions += total;
                let recorded = parse_rational(&witness.density)?;
                if recorded != recomputed {
                    return Err(violation(format!(
                        "density for test set {} recomputes to {recomputed} but the certificate says {}",
                        describe(test_set),
                        witness.density
                    )));
                }
                let recorded_ref = parse_rational(&witness.reference)?;
                if recorded_ref != reference {
                    return Err(violation(format!(
                        "reference density recomputes to {reference} but the certificate says {}",
                        witness.reference
                    )));
                }
                if recomputed < reference {
                    return Err(violation(format!(
                        "density {recomputed} for test set {} falls below the reference {reference}",
                        describe(test_set)
                    )));
                }
                witnessed += 1;
            }
            None => {
                // Confirm no subset of the candidate ball reaches the
                // reference density for this test set.
                if candidates.len() > 20 {
                    return Err(Error::BudgetExceeded {
                        needed: 1u64 << candidates.len().min(63),
                        budget: 1 << 20,
                    });
                }
                scans += 1;
                for mask in 1u32..(1u32 << candidates.len()) {
                    let f_set: Vec<GroupElement> = candidates
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, g)| g.clone())
                        .collect();
                    let density = density_for(&f_set, test_set, &mut raw_b, &mut ab_cache)?;
                    if density >= reference {
                        return Err(violation(format!(
                            "no F recorded for {} but F = {} reaches density {density}",
                            describe(test_set),
                            describe(&f_set)
                        )));
                    }
                }
            }
        }
    }
    check_verdict(cert, witnessed == family.len())?;
    Ok(ReplaySummary {
        property: cert.property,
        verdict: cert.verdict,
        inclusions_checked: inclusions,
        exhaustive_scans: scans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::CylinderUnion;
    use crate::group::{Alphabet, Model, ReducedWord};
    use crate::largeness::{
        check_left_thick, check_pw_syndetic, check_syndetic, check_thick, find_between_f,
        find_left_f, non_syndetic_separator,
    };
    use crate::sets::SetRule;

    fn free2() -> Model {
        Model::Free { rank: 2 }
    }

    fn w(s: &str) -> ReducedWord {
        s.parse().unwrap()
    }

    fn deep_words() -> GroupSet {
        // Complement of ball(2): everything of length ≥ 3; thick.
        let ball2: Vec<GroupElement> = crate::group::ball(Alphabet::new(2).unwrap(), 2)
            .into_iter()
            .map(GroupElement::Free)
            .collect();
        GroupSet::explicit(free2(), ball2).unwrap().complement()
    }

    fn evens() -> GroupSet {
        GroupSet::new(
            Model::Lattice { dim: 1 },
            SetRule::Congruence { modulus: 2, residue: vec![0] },
        )
        .unwrap()
    }

    #[test]
    fn thick_certificate_replays_and_tampering_breaks_it() {
        let full = GroupSet::full(free2());
        let cert = check_thick(&full, 1, 2).unwrap();
        let summary = replay_certificate(&cert, &full).unwrap();
        assert_eq!(summary.verdict, Verdict::Certified);
        assert!(summary.inclusions_checked > 0);

        // Against a set where the witnesses fail, the violated inclusion is
        // named.
        let thin = GroupSet::new(free2(), SetRule::Prefix(w("a1"))).unwrap();
        let err = replay_certificate(&cert, &thin).unwrap_err();
        assert!(matches!(err, Error::Violation(_)), "{err}");
        assert!(err.to_string().contains("lies outside the set"), "{err}");
    }

    #[test]
    fn deep_word_certificates_replay_both_sides() {
        let c = deep_words();
        let right = check_thick(&c, 1, 4).unwrap();
        assert!(right.is_certified());
        replay_certificate(&right, &c).unwrap();
        let left = check_left_thick(&c, 1, 4).unwrap();
        assert!(left.is_certified());
        replay_certificate(&left, &c).unwrap();
    }

    #[test]
    fn tampered_translate_word_is_rejected() {
        let c = deep_words();
        let mut cert = check_thick(&c, 1, 4).unwrap();
        cert.translates[0].translate = GroupElement::Free(w("a1"));
        let err = replay_certificate(&cert, &c).unwrap_err();
        assert!(err.to_string().contains("lies outside the set"), "{err}");
    }

    #[test]
    fn tampered_test_set_is_rejected() {
        let c = deep_words();
        let mut cert = check_thick(&c, 1, 4).unwrap();
        cert.translates[0]
            .test_set
            .push(GroupElement::Free(w("a1 a1 a1 a1 a1")));
        let err = replay_certificate(&cert, &c).unwrap_err();
        assert!(
            err.to_string().contains("does not match any regenerated test set"),
            "{err}"
        );
    }

    #[test]
    fn not_found_thick_verdict_replays() {
        // The prefix set fails against the full ball test set, so the
        // verifier re-scans the budget and finds the same dead end.
        let thin = GroupSet::new(free2(), SetRule::Prefix(w("a1"))).unwrap();
        let cert = check_thick(&thin, 1, 3).unwrap();
        assert!(!cert.is_certified());
        let summary = replay_certificate(&cert, &thin).unwrap();
        assert!(summary.exhaustive_scans > 0);

        // Claiming certification without the missing witnesses fails.
        let mut forged = cert.clone();
        forged.verdict = Verdict::Certified;
        let err = replay_certificate(&forged, &thin).unwrap_err();
        assert!(err.to_string().contains("not fully witnessed"), "{err}");
    }

    #[test]
    fn syndetic_certificate_replays() {
        let e = evens();
        let cert = check_syndetic(&e, 1, 6).unwrap();
        assert!(cert.is_certified());
        let summary = replay_certificate(&cert, &e).unwrap();
        assert_eq!(summary.verdict, Verdict::Certified);

        let mut forged = cert.clone();
        forged.f_witness = vec![Model::Lattice { dim: 1 }.identity()];
        let err = replay_certificate(&forged, &e).unwrap_err();
        assert!(err.to_string().contains("not covered"), "{err}");
    }

    #[test]
    fn not_found_syndetic_replays() {
        // ball(0) = {e} cannot cover the window for the prefix set.
        let thin = GroupSet::new(free2(), SetRule::Prefix(w("a1"))).unwrap();
        let cert = check_syndetic(&thin, 0, 2).unwrap();
        assert!(!cert.is_certified());
        replay_certificate(&cert, &thin).unwrap();

        let full = GroupSet::full(free2());
        let mut forged = cert.clone();
        forged.f_witness = Vec::new();
        let err = replay_certificate(&forged, &full).unwrap_err();
        assert!(err.to_string().contains("coverable"), "{err}");
    }

    #[test]
    fn pw_syndetic_certificate_replays() {
        let alphabet = Alphabet::new(2).unwrap();
        let union = CylinderUnion::cylinder(alphabet, &w("a1")).unwrap();
        let point = crate::boundary::BoundaryPoint::new(w("a1"), w("a1")).unwrap();
        let slice = GroupSet::slice_product(union.clone(), union, point).unwrap();
        let cert = check_pw_syndetic(&slice, 1, 1, 4).unwrap();
        assert!(cert.is_certified());
        let summary = replay_certificate(&cert, &slice).unwrap();
        assert!(summary.inclusions_checked > 0);

        let mut forged = cert.clone();
        forged.translates[0].translate = GroupElement::Free(w("a2 a2 a2 a2"));
        let err = replay_certificate(&forged, &slice).unwrap_err();
        assert!(matches!(err, Error::Violation(_)), "{err}");
    }

    #[test]
    fn not_found_pw_verdict_replays_with_saturation() {
        // A singleton set: F·C stays finite, so no test set of five distinct
        // elements can translate into it.
        let single = GroupSet::explicit(free2(), [free2().identity()]).unwrap();
        let cert = check_pw_syndetic(&single, 0, 1, 2).unwrap();
        assert!(!cert.is_certified());
        let summary = replay_certificate(&cert, &single).unwrap();
        assert!(summary.exhaustive_scans >= 1);

        let mut forged = cert.clone();
        forged.verdict = Verdict::Certified;
        let err = replay_certificate(&forged, &single).unwrap_err();
        assert!(err.to_string().contains("without a witness"), "{err}");
    }

    #[test]
    fn separator_certificate_replays() {
        let alphabet = Alphabet::new(2).unwrap();
        let union = CylinderUnion::cylinder(alphabet, &w("a1 a1")).unwrap();
        let point = crate::boundary::BoundaryPoint::new(w("a1 a1"), w("a1")).unwrap();
        let slice = GroupSet::slice(union, point).unwrap();
        let cert = non_syndetic_separator(&slice, 1, 4, 6).unwrap();
        assert!(cert.is_certified());
        let summary = replay_certificate(&cert, &slice).unwrap();
        assert!(summary.inclusions_checked > 0);

        // Tampering a separator to the identity makes F·A ∩ s·A nonempty.
        let mut forged = cert.clone();
        forged.separators[0].separator = free2().identity();
        let err = replay_certificate(&forged, &slice).unwrap_err();
        assert!(err.to_string().contains("lies in both"), "{err}");
    }

    #[test]
    fn not_found_separator_replays() {
        let full = GroupSet::full(free2());
        let cert = non_syndetic_separator(&full, 1, 2, 3).unwrap();
        assert!(!cert.is_certified());
        replay_certificate(&cert, &full).unwrap();
    }

    #[test]
    fn product_thick_certificate_replays() {
        let full = GroupSet::full(free2());
        let cert = find_between_f(&full, &full, 1, 1, 1, 2).unwrap();
        assert!(cert.is_certified());
        let summary = replay_product_certificate(&cert, &full, &full).unwrap();
        assert_eq!(summary.verdict, Verdict::Certified);

        let mut forged = cert.clone();
        forged.densities[0].density = "1/3".to_string();
        let err = replay_product_certificate(&forged, &full, &full).unwrap_err();
        assert!(err.to_string().contains("recomputes to"), "{err}");
    }

    #[test]
    fn left_density_certificate_replays() {
        let e = evens();
        let cert = find_left_f(&e, &e, 1, 1, 3).unwrap();
        assert!(cert.is_certified());
        let summary = replay_product_certificate(&cert, &e, &e).unwrap();
        assert_eq!(summary.verdict, Verdict::Certified);

        let mut forged = cert.clone();
        forged.densities[0].density = "1/7".to_string();
        let err = replay_product_certificate(&forged, &e, &e).unwrap_err();
        assert!(err.to_string().contains("recomputes to"), "{err}");

        // A reference mismatch is also named.
        let mut forged = cert.clone();
        forged.densities[0].reference = "1/7".to_string();
        let err = replay_product_certificate(&forged, &e, &e).unwrap_err();
        assert!(err.to_string().contains("reference density"), "{err}");
    }

    #[test]
    fn property_and_arity_must_match() {
        let full = GroupSet::full(free2());
        let cert = check_thick(&full, 1, 1).unwrap();
        assert!(replay_product_certificate(&cert, &full, &full).is_err());
        let prod = find_between_f(&full, &full, 1, 1, 1, 2).unwrap();
        assert!(replay_certificate(&prod, &full).is_err());
    }
}
