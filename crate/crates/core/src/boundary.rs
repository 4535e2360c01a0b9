//! Exact calculus on the space of infinite reduced words of a free group:
//! clopen sets as canonical prefix trees, the translation action, the hitting
//! measure of the uniform nearest-neighbour walk, Radon–Nikodym ratios, the
//! Poisson transform, and eventually periodic boundary points.
//!
//! A clopen set is stored as a tree whose nodes are fully-in, fully-out, or a
//! branch over all letters admissible at that prefix. The canonical form
//! collapses a branch whose children agree, so two trees are equal as Rust
//! values exactly when they denote the same set of rays.
//!
//! The measure assigned to cylinders is *derived*, not assumed: the
//! constructor solves the depth-two stationarity system for the
//! nearest-neighbour step distribution (see [`solve_harmonic_weights`]) and
//! the deeper values follow from the sphere-splitting relation produced by
//! the same solve. The test suite re-derives the system independently.

use std::collections::BTreeMap;
use std::fmt;

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::group::{ball_iter, sphere_iter, Alphabet, Letter, ReducedWord};

/// One node of the canonical prefix tree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Node {
    /// Every ray through this prefix is in the set.
    In,
    /// No ray through this prefix is in the set.
    Out,
    /// Mixed: one child per admissible next letter.
    Branch(BTreeMap<Letter, Node>),
}

impl Node {
    /// Smart constructor enforcing the collapse rule.
    fn branch(children: BTreeMap<Letter, Node>) -> Node {
        debug_assert!(!children.is_empty());
        if children.values().all(|c| *c == Node::In) {
            return Node::In;
        }
        if children.values().all(|c| *c == Node::Out) {
            return Node::Out;
        }
        Node::Branch(children)
    }

    /// The child continuing with letter `l` (constant nodes are their own
    /// children everywhere).
    fn child(&self, l: Letter) -> Node {
        match self {
            Node::In => Node::In,
            Node::Out => Node::Out,
            Node::Branch(m) => m
                .get(&l)
                .cloned()
                .expect("letter admissible at this prefix"),
        }
    }

    fn complement(&self) -> Node {
        match self {
            Node::In => Node::Out,
            Node::Out => Node::In,
            Node::Branch(m) => {
                Node::Branch(m.iter().map(|(l, c)| (*l, c.complement())).collect())
            }
        }
    }

    fn union(&self, other: &Node) -> Node {
        match (self, other) {
            (Node::In, _) | (_, Node::In) => Node::In,
            (Node::Out, x) | (x, Node::Out) => x.clone(),
            (Node::Branch(ma), Node::Branch(mb)) => {
                debug_assert_eq!(
                    ma.keys().collect::<Vec<_>>(),
                    mb.keys().collect::<Vec<_>>()
                );
                Node::branch(
                    ma.iter()
                        .map(|(l, ca)| (*l, ca.union(&mb[l])))
                        .collect(),
                )
            }
        }
    }

    fn intersect(&self, other: &Node) -> Node {
        match (self, other) {
            (Node::Out, _) | (_, Node::Out) => Node::Out,
            (Node::In, x) | (x, Node::In) => x.clone(),
            (Node::Branch(ma), Node::Branch(mb)) => Node::branch(
                ma.iter()
                    .map(|(l, ca)| (*l, ca.intersect(&mb[l])))
                    .collect(),
            ),
        }
    }

    /// Set inclusion; sound because both trees are canonical.
    fn subset(&self, other: &Node) -> bool {
        match (self, other) {
            (Node::Out, _) | (_, Node::In) => true,
            // A canonical branch is neither empty nor full.
            (Node::In, _) | (_, Node::Out) => false,
            (Node::Branch(ma), Node::Branch(mb)) => {
                ma.iter().all(|(l, ca)| ca.subset(&mb[l]))
            }
        }
    }

    fn depth(&self) -> u32 {
        match self {
            Node::In | Node::Out => 0,
            Node::Branch(m) => 1 + m.values().map(Node::depth).max().unwrap_or(0),
        }
    }

    fn node_count(&self) -> usize {
        match self {
            Node::In | Node::Out => 1,
            Node::Branch(m) => 1 + m.values().map(Node::node_count).sum::<usize>(),
        }
    }
}

/// Exact sphere-splitting weights of the stationary measure: a depth-one
/// cylinder carries `depth1`, and each admissible extension multiplies the
/// mass by `ratio`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HarmonicWeights {
    pub depth1: BigRational,
    pub ratio: BigRational,
}

/// Solves the depth-two stationarity system of the uniform length-one step
/// distribution under the symmetry ansatz (all cylinders of one depth carry
/// equal mass). With x = mass of a depth-1 cylinder and y = mass of a
/// depth-2 cylinder, the constraints are:
///
///   additivity over the depth-1 partition:   2r·x           = 1
///   stationarity at a depth-1 cylinder:      (2r+1)x −(2r−1)y = 1
///   splitting of a cylinder into children:   x − (2r−1)y      = 0
///
/// (The middle row rearranges `2r·x = (1−x) + (2r−1)·y`: the step into the
/// cylinder's own first letter pulls back to the complement of one cylinder,
/// every other step pulls back to a depth-2 cylinder.) The function performs
/// the elimination generically and verifies consistency of all three rows.
pub fn solve_harmonic_weights(alphabet: Alphabet) -> Result<HarmonicWeights> {
    let two_r = BigRational::from_integer(BigInt::from(alphabet.size()));
    let one = BigRational::one();
    // Rows as (a, b, c) meaning a·x + b·y = c.
    let rows = [
        (two_r.clone(), BigRational::zero(), one.clone()),
        (&two_r + &one, -(&two_r - &one), one.clone()),
        (one.clone(), -(&two_r - &one), BigRational::zero()),
    ];
    // Eliminate y between rows 1 and 2 (their y-coefficients are equal).
    let ax = &rows[1].0 - &rows[2].0;
    let ac = &rows[1].2 - &rows[2].2;
    if ax.is_zero() {
        return Err(Error::Violation("degenerate stationarity system".into()));
    }
    let x = ac / ax;
    let y = (&rows[2].2 - &rows[2].0 * &x) / rows[2].1.clone();
    // Consistency of the remaining (additivity) row.
    if &rows[0].0 * &x + &rows[0].1 * &y != rows[0].2 {
        return Err(Error::Violation(
            "stationarity system inconsistent with additivity".into(),
        ));
    }
    let ratio = &y / &x;
    Ok(HarmonicWeights { depth1: x, ratio })
}

/// A clopen subset of the boundary, in canonical prefix-tree form.
#[derive(Clone, PartialEq, Eq)]
pub struct CylinderUnion {
    alphabet: Alphabet,
    root: Node,
}

impl CylinderUnion {
    pub fn empty(alphabet: Alphabet) -> Self {
        CylinderUnion { alphabet, root: Node::Out }
    }

    pub fn full(alphabet: Alphabet) -> Self {
        CylinderUnion { alphabet, root: Node::In }
    }

    /// The cylinder of all rays extending `w`; the empty word gives the full
    /// boundary.
    pub fn cylinder(alphabet: Alphabet, w: &ReducedWord) -> Result<Self> {
        alphabet.validate_word(w)?;
        fn build(alphabet: Alphabet, letters: &[Letter], prev: Option<Letter>) -> Node {
            match letters.split_first() {
                None => Node::In,
                Some((head, rest)) => {
                    let children = alphabet
                        .letters()
                        .filter(|l| Some(l.inverse()) != prev)
                        .map(|l| {
                            let node = if l == *head {
                                build(alphabet, rest, Some(l))
                            } else {
                                Node::Out
                            };
                            (l, node)
                        })
                        .collect();
                    // A cylinder never collapses: exactly one child is live.
                    Node::Branch(children)
                }
            }
        }
        Ok(CylinderUnion { alphabet, root: build(alphabet, w.letters(), None) })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn is_empty(&self) -> bool {
        self.root == Node::Out
    }

    pub fn is_full(&self) -> bool {
        self.root == Node::In
    }

    pub fn depth(&self) -> u32 {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    fn check_same_alphabet(&self, other: &CylinderUnion) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::ModelMismatch {
                expected: format!("free({})", self.alphabet.rank()),
                found: format!("free({})", other.alphabet.rank()),
            });
        }
        Ok(())
    }

    pub fn union(&self, other: &CylinderUnion) -> Result<CylinderUnion> {
        self.check_same_alphabet(other)?;
        Ok(CylinderUnion { alphabet: self.alphabet, root: self.root.union(&other.root) })
    }

    pub fn intersect(&self, other: &CylinderUnion) -> Result<CylinderUnion> {
        self.check_same_alphabet(other)?;
        Ok(CylinderUnion {
            alphabet: self.alphabet,
            root: self.root.intersect(&other.root),
        })
    }

    pub fn complement(&self) -> CylinderUnion {
        CylinderUnion { alphabet: self.alphabet, root: self.root.complement() }
    }

    pub fn is_subset(&self, other: &CylinderUnion) -> Result<bool> {
        self.check_same_alphabet(other)?;
        Ok(self.root.subset(&other.root))
    }

    pub fn is_disjoint(&self, other: &CylinderUnion) -> Result<bool> {
        Ok(self.intersect(other)?.is_empty())
    }

    /// The maximal cylinders fully inside the set, in canonical word order.
    pub fn maximal_in_cylinders(&self) -> Vec<ReducedWord> {
        fn walk(node: &Node, prefix: &mut Vec<Letter>, out: &mut Vec<ReducedWord>) {
            match node {
                Node::Out => {}
                Node::In => out.push(ReducedWord::from_letters(prefix.iter().copied())),
                Node::Branch(m) => {
                    for (l, child) in m {
                        prefix.push(*l);
                        walk(child, prefix, out);
                        prefix.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out.sort();
        out
    }

    /// Decides whether every ray extending `prefix` is in (Some(true)),
    /// out (Some(false)), or whether the answer still depends on deeper
    /// letters (None).
    pub fn status_at_prefix(&self, prefix: &ReducedWord) -> Option<bool> {
        let mut node = self.root.clone();
        for &l in prefix.letters() {
            match node {
                Node::In => return Some(true),
                Node::Out => return Some(false),
                Node::Branch(_) => node = node.child(l),
            }
        }
        match node {
            Node::In => Some(true),
            Node::Out => Some(false),
            Node::Branch(_) => None,
        }
    }

    /// Membership of an infinite ray, reading letters until determined.
    /// Terminates because the tree has finite depth.
    pub fn contains_ray(&self, x: &BoundaryPoint) -> bool {
        let mut node = self.root.clone();
        let mut i = 0usize;
        loop {
            match node {
                Node::In => return true,
                Node::Out => return false,
                Node::Branch(_) => {
                    let l = x.ray_letter(i);
                    node = node.child(l);
                    i += 1;
                }
            }
        }
    }

    /// Exact translate `g·U = {g·x : x ∈ U}`, built one letter at a time.
    /// For a single letter `c`, the image decomposes by the first letter of
    /// the result: rays of `U` not starting with `c⁻¹` gain the prefix `c`,
    /// and rays starting with `c⁻¹` drop it.
    pub fn translate(&self, g: &ReducedWord) -> Result<CylinderUnion> {
        self.alphabet.validate_word(g)?;
        let mut current = self.clone();
        for &l in g.letters().iter().rev() {
            current = current.translate_letter(l);
        }
        Ok(current)
    }

    fn translate_letter(&self, c: Letter) -> CylinderUnion {
        let a = self.alphabet;
        let root = &self.root;
        let dropped = root.child(c.inverse());
        let children: BTreeMap<Letter, Node> = a
            .letters()
            .map(|d| {
                let node = if d == c {
                    // Rays that keep their letters and gain the prefix c:
                    // everything in U except the part starting with c⁻¹.
                    let sub: BTreeMap<Letter, Node> = a
                        .letters()
                        .filter(|y| *y != c.inverse())
                        .map(|y| (y, root.child(y)))
                        .collect();
                    Node::branch(sub)
                } else {
                    // Rays that started with c⁻¹ and lost it now start with
                    // their second letter d (automatically ≠ c).
                    dropped.child(d)
                };
                (d, node)
            })
            .collect();
        CylinderUnion { alphabet: a, root: Node::branch(children) }
    }

    /// Mass of the set under the stationary measure, via the tree recursion.
    pub fn measure(&self) -> BigRational {
        let hw = solve_harmonic_weights(self.alphabet).expect("solvable for rank >= 1");
        fn mass_of_prefix(hw: &HarmonicWeights, depth: u32) -> BigRational {
            if depth == 0 {
                return BigRational::one();
            }
            let mut m = hw.depth1.clone();
            for _ in 1..depth {
                m *= &hw.ratio;
            }
            m
        }
        fn walk(hw: &HarmonicWeights, node: &Node, depth: u32) -> BigRational {
            match node {
                Node::Out => BigRational::zero(),
                Node::In => mass_of_prefix(hw, depth),
                Node::Branch(m) => m
                    .values()
                    .map(|child| walk(hw, child, depth + 1))
                    .sum(),
            }
        }
        walk(&hw, &self.root, 0)
    }
}

impl fmt::Debug for CylinderUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CylinderUnion({self})")
    }
}

/// Canonical text: disjoint maximal cylinders joined with `+`; the empty set
/// prints as the complement of the full boundary.
impl fmt::Display for CylinderUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "~cyl:[e]");
        }
        let cyls = self.maximal_in_cylinders();
        let mut first = true;
        for w in cyls {
            if !first {
                write!(f, "+")?;
            }
            write!(f, "cyl:[{w}]")?;
            first = false;
        }
        Ok(())
    }
}

/// `‖Σ_s σ1(s)·ν(s⁻¹U) − ν(U)‖`: the one-step stationarity defect of the
/// derived measure on a clopen set. The contract is that it vanishes.
pub fn stationarity_check(u: &CylinderUnion) -> Result<BigRational> {
    let a = u.alphabet();
    let inv2r = BigRational::new(BigInt::one(), BigInt::from(a.size()));
    let mut acc = BigRational::zero();
    for s in a.letters() {
        let pulled = u.translate(&ReducedWord::from_letters([s.inverse()]))?;
        acc += &inv2r * pulled.measure();
    }
    Ok((acc - u.measure()).abs())
}

/// Exact Radon–Nikodym ratios `ν(s·[w])/ν([w])` over all depth-`depth`
/// cylinders.
pub fn rn_ratios(
    alphabet: Alphabet,
    s: &ReducedWord,
    depth: u32,
) -> Result<Vec<(ReducedWord, BigRational)>> {
    if depth < s.len() as u32 + 1 {
        return Err(Error::InvalidArgument(format!(
            "depth {depth} too shallow for |s| = {}; need depth >= |s|+1",
            s.len()
        )));
    }
    let mut out = Vec::new();
    for w in sphere_iter(alphabet, depth) {
        let cyl = CylinderUnion::cylinder(alphabet, &w)?;
        let translated = cyl.translate(s)?;
        let ratio = translated.measure() / cyl.measure();
        out.push((w, ratio));
    }
    Ok(out)
}

/// The Poisson transform of the indicator of `U` at `g`: the stationary mass
/// of `{z : g·z ∈ U} = g⁻¹U`.
pub fn poisson_transform(u: &CylinderUnion, g: &ReducedWord) -> Result<BigRational> {
    Ok(u.translate(&g.inverse())?.measure())
}

/// Max over the radius-`radius` ball of `|Pχ_U(g) − Σ_s σ1(s)·Pχ_U(gs)|`.
/// The transform is harmonic for the uniform length-one step distribution,
/// so the contract is exact vanishing.
pub fn harmonicity_defect(u: &CylinderUnion, radius: u32) -> Result<BigRational> {
    let a = u.alphabet();
    let inv2r = BigRational::new(BigInt::one(), BigInt::from(a.size()));
    let mut worst = BigRational::zero();
    for g in ball_iter(a, radius) {
        let here = poisson_transform(u, &g)?;
        let mut avg = BigRational::zero();
        for s in a.letters() {
            let gs = g.push(s);
            avg += &inv2r * poisson_transform(u, &gs)?;
        }
        let defect = (here - avg).abs();
        if defect > worst {
            worst = defect;
        }
    }
    Ok(worst)
}

/// An eventually periodic infinite reduced word `u·v·v·v…`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoundaryPoint {
    preperiod: ReducedWord,
    period: ReducedWord,
}

impl BoundaryPoint {
    pub fn new(preperiod: ReducedWord, period: ReducedWord) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::MalformedBoundaryPoint(
                "period must be nonempty".into(),
            ));
        }
        let pf = period.first().expect("nonempty");
        let pl = period.last().expect("nonempty");
        if pl == pf.inverse() {
            return Err(Error::MalformedBoundaryPoint(format!(
                "period {period} is not cyclically reduced"
            )));
        }
        if let Some(ul) = preperiod.last() {
            if ul == pf.inverse() {
                return Err(Error::MalformedBoundaryPoint(format!(
                    "cancellation at the junction of {preperiod} and {period}"
                )));
            }
        }
        Ok(BoundaryPoint { preperiod, period })
    }

    /// The purely periodic ray `v·v·v…`.
    pub fn periodic(period: ReducedWord) -> Result<Self> {
        BoundaryPoint::new(ReducedWord::identity(), period)
    }

    pub fn preperiod(&self) -> &ReducedWord {
        &self.preperiod
    }

    pub fn period(&self) -> &ReducedWord {
        &self.period
    }

    /// The `i`-th letter of the ray, 0-based.
    pub fn ray_letter(&self, i: usize) -> Letter {
        let u = self.preperiod.letters();
        if i < u.len() {
            u[i]
        } else {
            let v = self.period.letters();
            v[(i - u.len()) % v.len()]
        }
    }

    pub fn ray_prefix(&self, n: usize) -> ReducedWord {
        let letters: Vec<Letter> = (0..n).map(|i| self.ray_letter(i)).collect();
        // Reduced by construction: preperiod and period are reduced and the
        // junctions were validated.
        ReducedWord::from_letters(letters)
    }

    /// The ray `g·x`, again eventually periodic with the same period.
    pub fn act(&self, g: &ReducedWord) -> BoundaryPoint {
        // Take enough of the ray that the at most |g| cancelled letters
        // cannot reach the final period block.
        let v = self.period.len();
        let need = g.len() + self.preperiod.len() + v + 1;
        let blocks = need.div_ceil(v);
        let head_len = self.preperiod.len() + blocks * v;
        let head = self.ray_prefix(head_len);
        let new_pre = g.concat(&head);
        BoundaryPoint::new(new_pre, self.period.clone())
            .expect("action preserves the block junction")
    }

    /// First `n` letters of `g·x`.
    pub fn acted_prefix(&self, g: &ReducedWord, n: usize) -> ReducedWord {
        self.act(g).ray_prefix(n)
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u=({}),v=({})", self.preperiod, self.period)
    }
}
