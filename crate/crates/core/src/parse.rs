//! Text grammars shared by the CLI, config files, and report replay.
//!
//! Words use the canonical form everywhere: letters separated by spaces,
//! inverses marked with a trailing apostrophe, identity `e` (these are the
//! [`ReducedWord`] `FromStr`/`Display` forms). On top of that this module
//! provides:
//!
//! * cylinder specs — `cyl:[a1 a2']`, unions with `+`, complement `~`,
//!   parentheses for grouping, e.g. `~(cyl:[a1]+cyl:[a2])`;
//! * boundary-point specs — `point:u=(a1),v=(a2 a1)` for the eventually
//!   periodic point u·v·v·v…;
//! * set specs — `explicit:[w1,w2,…]`, `prefix:a1`,
//!   `slice:<cylspec>@<pointspec>`, `sign:tau=(w1,…,wr)>0`, `cong:2Z`,
//!   combinators `and(…)`, `or(…)`, `not(…)`, plus the extensions `full`,
//!   `sliceprod:<cyl>|<cyl>@<pointspec>`, `translate:<g>@<spec>` and
//!   `inv:<spec>` so every constructible rule round-trips through text.
//!   Combinator arguments are comma-separated; an argument that itself
//!   contains a top-level comma (any spec ending in a point) must be
//!   wrapped in parentheses, e.g. `not((slice:cyl:[a1]@point:u=(e),v=(a1)))`;
//! * measure specs — `sphere:<k>`, `uniform:[g1,…]`, `atoms:[g:1/4,…]`.
//!
//! [`format_set_spec`] is the exact inverse of [`parse_set_spec`]; reports
//! persist sets in this form so replay can rebuild them from text alone.

use std::str::FromStr;

use crate::boundary::{BoundaryPoint, CylinderUnion};
use crate::error::{Error, Result};
use crate::group::{parse_element, Alphabet, Model, ReducedWord};
use crate::measure::{parse_rational, sphere_measure, FiniteMeasure};
use crate::sets::{GroupSet, Homomorphism, SetRule, SignCondition};

fn parse_err(msg: String) -> Error {
    Error::Parse(msg)
}

/// Splits at top-level occurrences of `sep`; depth is tracked over both
/// `()` and `[]` so nested specs survive intact.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth: i32 = 0;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            _ if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// True when the outermost characters are a matching parenthesis pair.
fn is_parenthesized(s: &str) -> bool {
    if !(s.starts_with('(') && s.ends_with(')')) {
        return false;
    }
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 && i + 1 != s.len() {
                    return false;
                }
            }
            _ => {}
        }
    }
    depth == 0
}

// ---------------------------------------------------------------------------
// Cylinder specs
// ---------------------------------------------------------------------------

/// Parses a cylinder spec: `cyl:[word]` terms joined with `+`, prefixed
/// with `~` for complement, grouped with parentheses.
pub fn parse_cylinder_spec(alphabet: Alphabet, spec: &str) -> Result<CylinderUnion> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(parse_err("empty cylinder spec".to_string()));
    }
    let mut acc: Option<CylinderUnion> = None;
    for part in split_top_level(spec, '+') {
        let term = parse_cylinder_term(alphabet, part.trim())?;
        acc = Some(match acc {
            None => term,
            Some(u) => u.union(&term)?,
        });
    }
    Ok(acc.expect("split_top_level yields at least one part"))
}

fn parse_cylinder_term(alphabet: Alphabet, term: &str) -> Result<CylinderUnion> {
    if let Some(rest) = term.strip_prefix('~') {
        return Ok(parse_cylinder_term(alphabet, rest.trim())?.complement());
    }
    if is_parenthesized(term) {
        return parse_cylinder_spec(alphabet, &term[1..term.len() - 1]);
    }
    if let Some(body) = term.strip_prefix("cyl:[").and_then(|r| r.strip_suffix(']')) {
        let w: ReducedWord = body.parse()?;
        return CylinderUnion::cylinder(alphabet, &w);
    }
    Err(parse_err(format!(
        "bad cylinder term {term:?}, expected e.g. \"cyl:[a1 a2']\", \"~cyl:[a1]\" or a parenthesized union"
    )))
}

// ---------------------------------------------------------------------------
// Boundary points
// ---------------------------------------------------------------------------

/// Parses `point:u=(a1),v=(a2 a1)`; the `point:` prefix is optional so the
/// [`BoundaryPoint`] display form parses back directly.
pub fn parse_point_spec(spec: &str) -> Result<BoundaryPoint> {
    let t = spec.trim();
    let t = t.strip_prefix("point:").unwrap_or(t).trim();
    let bad = || {
        parse_err(format!(
            "bad point spec {spec:?}, expected \"point:u=(a1),v=(a2 a1)\""
        ))
    };
    let rest = t.strip_prefix("u=(").ok_or_else(bad)?;
    let (u_str, rest) = rest.split_once(')').ok_or_else(bad)?;
    let rest = rest.trim_start().strip_prefix(',').ok_or_else(bad)?;
    let rest = rest.trim_start().strip_prefix("v=(").ok_or_else(bad)?;
    let (v_str, tail) = rest.split_once(')').ok_or_else(bad)?;
    if !tail.trim().is_empty() {
        return Err(bad());
    }
    BoundaryPoint::new(u_str.parse()?, v_str.parse()?)
}

impl FromStr for BoundaryPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_point_spec(s)
    }
}

/// The canonical text form with the `point:` tag, as used in set specs.
pub fn format_point_spec(point: &BoundaryPoint) -> String {
    format!("point:{point}")
}

// ---------------------------------------------------------------------------
// Set specs
// ---------------------------------------------------------------------------

fn free_alphabet(model: Model) -> Result<Alphabet> {
    match model {
        Model::Free { rank } => Alphabet::new(rank),
        _ => Err(parse_err(format!(
            "spec needs the free model, got {model}"
        ))),
    }
}

/// Strips `name(` … `)` and returns the argument list, split at top-level
/// commas.
fn combinator_args<'a>(t: &'a str, name: &str) -> Option<Vec<&'a str>> {
    let rest = t.strip_prefix(name)?.trim_start();
    if !is_parenthesized(rest) {
        return None;
    }
    Some(split_top_level(&rest[1..rest.len() - 1], ','))
}

/// Parses a set spec against the given model.
pub fn parse_set_spec(model: Model, spec: &str) -> Result<GroupSet> {
    let t = spec.trim();
    if t.is_empty() {
        return Err(parse_err("empty set spec".to_string()));
    }
    // Grouping parentheses: needed around combinator arguments whose spec
    // contains a top-level comma (boundary-point specs do).
    if is_parenthesized(t) {
        return parse_set_spec(model, &t[1..t.len() - 1]);
    }
    if t == "full" {
        return Ok(GroupSet::full(model));
    }
    if let Some(args) = combinator_args(t, "and") {
        let mut sets = args
            .iter()
            .map(|a| parse_set_spec(model, a))
            .collect::<Result<Vec<_>>>()?;
        let first = sets
            .drain(..1)
            .next()
            .ok_or_else(|| parse_err("and() needs at least one argument".to_string()))?;
        return sets.iter().try_fold(first, |acc, s| acc.intersect(s));
    }
    if let Some(args) = combinator_args(t, "or") {
        let mut sets = args
            .iter()
            .map(|a| parse_set_spec(model, a))
            .collect::<Result<Vec<_>>>()?;
        let first = sets
            .drain(..1)
            .next()
            .ok_or_else(|| parse_err("or() needs at least one argument".to_string()))?;
        return sets.iter().try_fold(first, |acc, s| acc.union(s));
    }
    if let Some(args) = combinator_args(t, "not") {
        if args.len() != 1 {
            return Err(parse_err("not() takes exactly one argument".to_string()));
        }
        return Ok(parse_set_spec(model, args[0])?.complement());
    }
    if let Some(body) = t.strip_prefix("explicit:[").and_then(|r| r.strip_suffix(']')) {
        let mut members = Vec::new();
        for part in split_top_level(body, ',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            members.push(parse_element(part)?);
        }
        return GroupSet::explicit(model, members);
    }
    if let Some(body) = t.strip_prefix("prefix:") {
        let w: ReducedWord = body.parse()?;
        return GroupSet::new(model, SetRule::Prefix(w));
    }
    if let Some(body) = t.strip_prefix("slice:") {
        let (cyl, point) = body
            .split_once('@')
            .ok_or_else(|| parse_err(format!("slice spec {t:?} is missing its @point part")))?;
        let alphabet = free_alphabet(model)?;
        return GroupSet::slice(
            parse_cylinder_spec(alphabet, cyl)?,
            parse_point_spec(point)?,
        );
    }
    if let Some(body) = t.strip_prefix("sliceprod:") {
        let (cyls, point) = body
            .split_once('@')
            .ok_or_else(|| parse_err(format!("sliceprod spec {t:?} is missing its @point part")))?;
        let parts = split_top_level(cyls, '|');
        if parts.len() != 2 {
            return Err(parse_err(format!(
                "sliceprod spec {t:?} needs exactly two |-separated cylinder specs"
            )));
        }
        let alphabet = free_alphabet(model)?;
        return GroupSet::slice_product(
            parse_cylinder_spec(alphabet, parts[0])?,
            parse_cylinder_spec(alphabet, parts[1])?,
            parse_point_spec(point)?,
        );
    }
    if let Some(body) = t.strip_prefix("sign:tau=(") {
        let (weights, cond) = body
            .split_once(')')
            .ok_or_else(|| parse_err(format!("bad sign spec {t:?}")))?;
        let weights = weights
            .split(',')
            .map(|w| {
                w.trim()
                    .parse::<i64>()
                    .map_err(|_| parse_err(format!("bad homomorphism weight {w:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let cond = match cond.trim() {
            ">0" => SignCondition::Positive,
            "<0" => SignCondition::Negative,
            "=0" => SignCondition::Zero,
            other => {
                return Err(parse_err(format!(
                    "bad sign condition {other:?}, expected >0, <0 or =0"
                )))
            }
        };
        return GroupSet::new(model, SetRule::Sign { tau: Homomorphism::new(weights), cond });
    }
    if let Some(body) = t.strip_prefix("cong:") {
        let (m_str, tail) = body
            .split_once('Z')
            .ok_or_else(|| parse_err(format!("bad congruence spec {t:?}, expected e.g. cong:2Z")))?;
        let modulus: i64 = m_str
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad modulus {m_str:?}")))?;
        let dim = match model {
            Model::Lattice { dim } => dim as usize,
            _ => {
                return Err(parse_err(format!(
                    "congruence specs need a lattice model, got {model}"
                )))
            }
        };
        let residue = match tail.trim() {
            "" => vec![0; dim],
            plus => {
                let r = plus.strip_prefix('+').ok_or_else(|| {
                    parse_err(format!("bad congruence residue {plus:?}, expected e.g. +1"))
                })?;
                let r = r.trim();
                if let Some(body) = r.strip_prefix('(').and_then(|x| x.strip_suffix(')')) {
                    body.split(',')
                        .map(|c| {
                            c.trim().parse::<i64>().map_err(|_| {
                                parse_err(format!("bad residue coordinate {c:?}"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?
                } else {
                    let v: i64 = r
                        .parse()
                        .map_err(|_| parse_err(format!("bad residue {r:?}")))?;
                    vec![v; dim]
                }
            }
        };
        return GroupSet::new(model, SetRule::Congruence { modulus, residue });
    }
    if let Some(body) = t.strip_prefix("translate:") {
        let (g, inner) = body
            .split_once('@')
            .ok_or_else(|| parse_err(format!("translate spec {t:?} is missing its @inner part")))?;
        let by = parse_element(g)?;
        return parse_set_spec(model, inner)?.translate(by);
    }
    if let Some(body) = t.strip_prefix("inv:") {
        return Ok(parse_set_spec(model, body)?.inverse_set());
    }
    Err(parse_err(format!(
        "unrecognized set spec {t:?}; see the grammar in this module's docs"
    )))
}

/// Serializes a set back into the spec grammar; exact inverse of
/// [`parse_set_spec`] up to rule equality.
pub fn format_set_spec(set: &GroupSet) -> String {
    format_rule(set.rule())
}

fn format_rule(rule: &SetRule) -> String {
    match rule {
        SetRule::Full => "full".to_string(),
        SetRule::Explicit(members) => {
            let inner: Vec<String> = members.iter().map(|g| g.to_string()).collect();
            format!("explicit:[{}]", inner.join(","))
        }
        SetRule::Prefix(w) => format!("prefix:{w}"),
        SetRule::Slice { union, point } => format!("slice:{union}@point:{point}"),
        SetRule::SliceProduct { left, right, point } => {
            format!("sliceprod:{left}|{right}@point:{point}")
        }
        SetRule::Sign { tau, cond } => {
            let weights: Vec<String> = tau.weights.iter().map(|w| w.to_string()).collect();
            let op = match cond {
                SignCondition::Positive => ">0",
                SignCondition::Negative => "<0",
                SignCondition::Zero => "=0",
            };
            format!("sign:tau=({}){op}", weights.join(","))
        }
        SetRule::Congruence { modulus, residue } => {
            if residue.iter().all(|r| *r == 0) {
                format!("cong:{modulus}Z")
            } else {
                let coords: Vec<String> = residue.iter().map(|r| r.to_string()).collect();
                format!("cong:{modulus}Z+({})", coords.join(","))
            }
        }
        SetRule::Translate { by, inner } => format!("translate:{by}@{}", format_rule(inner)),
        SetRule::Inverse(inner) => format!("inv:{}", format_rule(inner)),
        // Arguments are parenthesized unconditionally so specs with
        // top-level commas (slice points) survive the argument split.
        SetRule::And(rules) => {
            let inner: Vec<String> =
                rules.iter().map(|r| format!("({})", format_rule(r))).collect();
            format!("and({})", inner.join(","))
        }
        SetRule::Or(rules) => {
            let inner: Vec<String> =
                rules.iter().map(|r| format!("({})", format_rule(r))).collect();
            format!("or({})", inner.join(","))
        }
        SetRule::Not(inner) => format!("not(({}))", format_rule(inner)),
    }
}

// ---------------------------------------------------------------------------
// Measure specs
// ---------------------------------------------------------------------------

/// Parses a step-distribution spec: `sphere:<k>` (uniform on the word
/// sphere, free model), `uniform:[g1,g2,…]`, or `atoms:[g1:1/4,g2:3/4,…]`.
pub fn parse_measure_spec(model: Model, spec: &str) -> Result<FiniteMeasure> {
    let t = spec.trim();
    if let Some(k_str) = t.strip_prefix("sphere:") {
        let k: u32 = k_str
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad sphere radius {k_str:?}")))?;
        let alphabet = free_alphabet(model)?;
        return Ok(sphere_measure(alphabet, k));
    }
    if let Some(body) = t.strip_prefix("uniform:[").and_then(|r| r.strip_suffix(']')) {
        let mut members = Vec::new();
        for part in split_top_level(body, ',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            members.push(parse_element(part)?);
        }
        return FiniteMeasure::uniform(model, members);
    }
    if let Some(body) = t.strip_prefix("atoms:[").and_then(|r| r.strip_suffix(']')) {
        let mut weights = Vec::new();
        for part in split_top_level(body, ',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (g, w) = part.rsplit_once(':').ok_or_else(|| {
                parse_err(format!("bad atom {part:?}, expected <element>:<num/den>"))
            })?;
            weights.push((parse_element(g)?, parse_rational(w.trim())?));
        }
        return FiniteMeasure::from_weights(model, weights);
    }
    Err(parse_err(format!(
        "unrecognized measure spec {t:?}; expected sphere:<k>, uniform:[…] or atoms:[…]"
    )))
}
