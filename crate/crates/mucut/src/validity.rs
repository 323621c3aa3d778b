//! Thread validity for regular pre-proofs.
//!
//! A pre-proof is valid when every infinite branch carries a thread whose
//! minimal recurring formula is a `nu` appearing infinitely often on the
//! succedent or a `mu` appearing infinitely often on the antecedent, and
//! which is principal infinitely often.
//!
//! The decision procedure summarizes finite path segments by *profiles*:
//! for every pair of positions (entry, exit) the set of thread summaries a
//! segment admits, where a summary records the set of (formula, side) pairs
//! visited and whether some step was principal. Profiles compose, there are
//! finitely many, and by a Ramsey-style argument every infinite branch
//! factorizes into blocks sharing one idempotent profile. The proof is valid
//! iff every reachable idempotent cycle profile contains a good diagonal
//! summary: one whose minimal visited formula has the right binder and side
//! and whose segment passes a principal step.

use crate::calculus::{PosId, Side};
use crate::formula::Formula;
use crate::proof::{principal_positions, steps, NodeId, ProofGraph, Step};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// An ultimately periodic thread inside a lasso branch: `steps[..loop_start]`
/// is the stem, the rest is the loop, and the step after the last entry
/// returns to `steps[loop_start]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    /// Pairs (node, position in that node's conclusion), related stepwise by
    /// the ancestor relation.
    pub steps: Vec<(NodeId, PosId)>,
    /// Index where the loop begins.
    pub loop_start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidityError {
    #[error("not an ultimately periodic thread: {0}")]
    NotPeriodic(String),
}

/// A branch class with no valid thread: the branch follows `stem` from the
/// root and then repeats `cycle` forever.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWitness {
    pub stem: Vec<NodeId>,
    pub cycle: Vec<NodeId>,
}

/// A per-branch-class accepting thread description: branches that settle
/// into `cycle` carry a thread through `position` at `node` whose minimal
/// recurring formula is `minimal` on `side`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreadCertificate {
    pub node: NodeId,
    pub position: PosId,
    pub side: Side,
    pub minimal: Formula,
    pub cycle: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidityVerdict {
    Valid(Vec<ThreadCertificate>),
    Invalid(LassoWitness),
}

impl ValidityVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidityVerdict::Valid(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuickVerdict {
    Valid,
    Unknown,
}

// ---- the subformula ordering ----

/// Interned formula universe (closed under the closure operation) carrying
/// the strict validity ordering: immediate subformulas lie below their
/// parent, and a fixed point lies strictly below its unfolding.
pub(crate) struct Universe {
    pub formulas: Vec<Formula>,
    below: Vec<BTreeSet<usize>>,
}

impl Universe {
    pub fn new<'a>(roots: impl Iterator<Item = &'a Formula>) -> Universe {
        let mut formulas: Vec<Formula> = Vec::new();
        for f in roots {
            for g in f.closure() {
                if !formulas.iter().any(|h| *h == g) {
                    formulas.push(g);
                }
            }
        }
        let idx = |formulas: &Vec<Formula>, f: &Formula| -> Option<usize> {
            formulas.iter().position(|g| g == f)
        };
        // Down edges: from a formula to the things strictly below it.
        let n = formulas.len();
        let mut down: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, f) in formulas.iter().enumerate() {
            use Formula as F;
            let subs: Vec<&Formula> = match f {
                F::Neg(b) | F::Bang(b) | F::Quest(b) | F::Box(b) | F::Diamond(b) => {
                    vec![b]
                }
                F::Impl(a, b)
                | F::LinImpl(a, b)
                | F::And(a, b)
                | F::Or(a, b)
                | F::Tensor(a, b)
                | F::Par(a, b)
                | F::With(a, b)
                | F::Plus(a, b) => vec![a, b],
                _ => vec![],
            };
            for s in subs {
                if let Some(j) = idx(&formulas, s) {
                    if j != i {
                        down[i].insert(j);
                    }
                }
            }
        }
        for (j, f) in formulas.iter().enumerate() {
            if f.is_fixpoint() {
                let u = f.unfold_fixpoint().expect("fixpoint");
                if u != *f {
                    if let Some(i) = idx(&formulas, &u) {
                        down[i].insert(j);
                    }
                }
            }
        }
        // Strictly-below sets by reachability (excluding the start).
        let mut below = vec![BTreeSet::new(); n];
        for (i, out) in below.iter_mut().enumerate() {
            let mut stack: Vec<usize> = down[i].iter().copied().collect();
            while let Some(j) = stack.pop() {
                if j != i && out.insert(j) {
                    stack.extend(down[j].iter().copied());
                }
            }
        }
        Universe { formulas, below }
    }

    pub fn index(&self, f: &Formula) -> Option<usize> {
        self.formulas.iter().position(|g| g == f)
    }

    pub fn strictly_below(&self, a: usize, b: usize) -> bool {
        self.below[b].contains(&a)
    }

    /// The minimum of a nonempty index set, if one exists.
    pub fn minimum(&self, set: &BTreeSet<usize>) -> Option<usize> {
        set.iter()
            .copied()
            .find(|&m| set.iter().all(|&r| r == m || self.strictly_below(m, r)))
    }
}

// ---- summaries and profiles ----

/// Fixed-width bit set over (formula, side) pairs of a universe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(words: usize) -> Bits {
        Bits(vec![0; words])
    }
    fn set(&mut self, b: usize) {
        self.0[b / 64] |= 1 << (b % 64);
    }
    fn get(&self, b: usize) -> bool {
        self.0[b / 64] & (1 << (b % 64)) != 0
    }
    fn union(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a | b).collect())
    }
    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter_map(move |b| {
                if word & (1 << b) != 0 {
                    Some(w * 64 + b)
                } else {
                    None
                }
            })
        })
    }
}

fn pair_bit(fi: usize, side: Side) -> usize {
    fi * 2 + if side == Side::Succ { 1 } else { 0 }
}

/// What one ancestry segment does: the (formula, side) pairs it visits and
/// whether it passes a principal step.
type Summary = (Bits, bool);

/// All summaries a path segment admits, per (entry, exit) position pair.
type Profile = BTreeMap<(PosId, PosId), BTreeSet<Summary>>;

fn compose(a: &Profile, b: &Profile) -> Profile {
    let mut by_entry: BTreeMap<PosId, Vec<(&PosId, &BTreeSet<Summary>)>> = BTreeMap::new();
    for ((q, r), set) in b {
        by_entry.entry(*q).or_default().push((r, set));
    }
    let mut out: Profile = BTreeMap::new();
    for ((p, q), set1) in a {
        if let Some(conts) = by_entry.get(q) {
            for (r, set2) in conts {
                let slot = out.entry((*p, **r)).or_default();
                for (s1, h1) in set1 {
                    for (s2, h2) in set2.iter() {
                        slot.insert((s1.union(s2), *h1 || *h2));
                    }
                }
            }
        }
    }
    out
}

// ---- the analysis ----

struct Analysis<'g> {
    g: &'g ProofGraph,
    uni: Universe,
    words: usize,
    /// Reachable resolved nodes in discovery order.
    nodes: Vec<NodeId>,
    steps: BTreeMap<NodeId, Vec<Step>>,
    good_memo: std::cell::RefCell<BTreeMap<Summary, Option<(usize, Side)>>>,
}

impl<'g> Analysis<'g> {
    fn new(g: &'g ProofGraph) -> Analysis<'g> {
        let root = g.resolve(g.root);
        let mut nodes = Vec::new();
        let mut steps_map = BTreeMap::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            if !seen.insert(x) {
                continue;
            }
            nodes.push(x);
            let ss = steps(g, x);
            for s in &ss {
                stack.push(s.child);
            }
            steps_map.insert(x, ss);
        }
        let uni = Universe::new(
            nodes
                .iter()
                .flat_map(|&x| g.node(x).conclusion().positions().map(|(_, _, f)| f)),
        );
        let words = (uni.formulas.len() * 2).div_ceil(64).max(1);
        Analysis {
            g,
            uni,
            words,
            nodes,
            steps: steps_map,
            good_memo: Default::default(),
        }
    }

    /// The single-edge profile for one step out of `x`.
    fn edge_profile(&self, x: NodeId, step: &Step) -> Profile {
        let concl = self.g.node(x).conclusion();
        let child_concl = self.g.node(step.child).conclusion();
        let principal: BTreeSet<PosId> = principal_positions(self.g, x)
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        let mut prof: Profile = BTreeMap::new();
        for (p, side, f) in concl.positions() {
            let Some(targets) = step.map.get(&p) else {
                continue;
            };
            let fi = self.uni.index(f).expect("conclusion formula in universe");
            for &a in targets {
                let (aside, ai) = child_concl
                    .find(a)
                    .expect("ancestor position in child conclusion");
                let af = &child_concl.side(aside)[ai].formula;
                let afi = self.uni.index(af).expect("ancestor formula in universe");
                let mut bits = Bits::empty(self.words);
                bits.set(pair_bit(fi, side));
                bits.set(pair_bit(afi, aside));
                prof.entry((p, a))
                    .or_default()
                    .insert((bits, principal.contains(&p)));
            }
        }
        prof
    }

    /// Is this diagonal summary good: minimal visited formula exists, is a
    /// nu seen on the succedent or a mu seen on the antecedent, and the
    /// segment passes a principal step. Returns the minimal formula index
    /// and its witnessing side.
    fn good(&self, sigma: &Summary) -> Option<(usize, Side)> {
        if let Some(hit) = self.good_memo.borrow().get(sigma) {
            return hit.clone();
        }
        let (bits, principal) = sigma;
        let result = (|| {
            if !*principal {
                return None;
            }
            let fset: BTreeSet<usize> = bits.ones().map(|b| b / 2).collect();
            let m = self.uni.minimum(&fset)?;
            match &self.uni.formulas[m] {
                Formula::Nu(..) if bits.get(pair_bit(m, Side::Succ)) => Some((m, Side::Succ)),
                Formula::Mu(..) if bits.get(pair_bit(m, Side::Ante)) => Some((m, Side::Ante)),
                _ => None,
            }
        })();
        self.good_memo.borrow_mut().insert(sigma.clone(), result.clone());
        result
    }

    fn good_diagonal(&self, x: NodeId, prof: &Profile) -> Option<(PosId, usize, Side)> {
        for q in self.g.node(x).conclusion().ids() {
            if let Some(set) = prof.get(&(q, q)) {
                for sigma in set {
                    if let Some((m, side)) = self.good(sigma) {
                        return Some((q, m, side));
                    }
                }
            }
        }
        None
    }

    /// Strongly connected components of the resolved graph (Kosaraju).
    fn sccs(&self) -> Vec<Vec<NodeId>> {
        let succ = |x: NodeId| -> Vec<NodeId> {
            self.steps[&x].iter().map(|s| s.child).collect()
        };
        let mut order = Vec::new();
        let mut seen = BTreeSet::new();
        for &start in &self.nodes {
            if seen.contains(&start) {
                continue;
            }
            // Iterative post-order.
            let mut stack = vec![(start, false)];
            while let Some((x, processed)) = stack.pop() {
                if processed {
                    order.push(x);
                    continue;
                }
                if !seen.insert(x) {
                    continue;
                }
                stack.push((x, true));
                for y in succ(x) {
                    if !seen.contains(&y) {
                        stack.push((y, false));
                    }
                }
            }
        }
        let mut pred: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &x in &self.nodes {
            for y in succ(x) {
                pred.entry(y).or_default().push(x);
            }
        }
        let mut comp: BTreeMap<NodeId, usize> = BTreeMap::new();
        let mut comps: Vec<Vec<NodeId>> = Vec::new();
        for &x in order.iter().rev() {
            if comp.contains_key(&x) {
                continue;
            }
            let cid = comps.len();
            let mut members = Vec::new();
            let mut stack = vec![x];
            while let Some(y) = stack.pop() {
                if comp.contains_key(&y) {
                    continue;
                }
                comp.insert(y, cid);
                members.push(y);
                for &z in pred.get(&y).map(|v| v.as_slice()).unwrap_or(&[]) {
                    if !comp.contains_key(&z) {
                        stack.push(z);
                    }
                }
            }
            comps.push(members);
        }
        comps
    }

    /// Shortest node path from the resolved root to `target` (exclusive).
    fn stem_to(&self, target: NodeId) -> Vec<NodeId> {
        let root = self.g.resolve(self.g.root);
        if root == target {
            return vec![];
        }
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for s in &self.steps[&x] {
                if s.child != root && !parent.contains_key(&s.child) {
                    parent.insert(s.child, x);
                    if s.child == target {
                        let mut path = vec![];
                        let mut cur = target;
                        while cur != root {
                            cur = parent[&cur];
                            path.push(cur);
                        }
                        path.reverse();
                        return path;
                    }
                    queue.push_back(s.child);
                }
            }
        }
        vec![]
    }
}

/// Decide validity: every infinite branch must carry a valid thread.
pub fn validity_check(g: &ProofGraph) -> ValidityVerdict {
    let a = Analysis::new(g);
    let mut certificates = Vec::new();
    for scc in a.sccs() {
        let members: BTreeSet<NodeId> = scc.iter().copied().collect();
        // Internal edges with their profiles.
        let mut edges: Vec<(NodeId, NodeId, Profile)> = Vec::new();
        for &x in &scc {
            for s in &a.steps[&x] {
                if members.contains(&s.child) {
                    edges.push((x, s.child, a.edge_profile(x, s)));
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        // Saturate: profiles of all nonempty internal paths, one
        // representative path each.
        type Reps = BTreeMap<(NodeId, NodeId), BTreeMap<Profile, Vec<NodeId>>>;
        let mut reps: Reps = BTreeMap::new();
        let mut queue: VecDeque<(NodeId, NodeId, Profile)> = VecDeque::new();
        for (x, y, prof) in &edges {
            let entry = reps.entry((*x, *y)).or_default();
            if !entry.contains_key(prof) {
                entry.insert(prof.clone(), vec![*x]);
                queue.push_back((*x, *y, prof.clone()));
            }
        }
        while let Some((x, y, prof)) = queue.pop_front() {
            let rep = reps[&(x, y)][&prof].clone();
            for (ex, ez, eprof) in &edges {
                if *ex != y {
                    continue;
                }
                let new_prof = compose(&prof, eprof);
                let entry = reps.entry((x, *ez)).or_default();
                if !entry.contains_key(&new_prof) {
                    let mut new_rep = rep.clone();
                    new_rep.push(y);
                    entry.insert(new_prof.clone(), new_rep);
                    queue.push_back((x, *ez, new_prof));
                }
            }
        }
        // Every idempotent cycle profile needs a good diagonal summary.
        for &x in &scc {
            let Some(cycles) = reps.get(&(x, x)) else {
                continue;
            };
            for (prof, rep) in cycles {
                if &compose(prof, prof) != prof {
                    continue;
                }
                match a.good_diagonal(x, prof) {
                    Some((q, m, side)) => certificates.push(ThreadCertificate {
                        node: x,
                        position: q,
                        side,
                        minimal: a.uni.formulas[m].clone(),
                        cycle: rep.clone(),
                    }),
                    None => {
                        return ValidityVerdict::Invalid(LassoWitness {
                            stem: a.stem_to(x),
                            cycle: rep.clone(),
                        })
                    }
                }
            }
        }
    }
    ValidityVerdict::Valid(certificates)
}

/// Compose the profile once around `cycle` (must be a closed node path);
/// None if consecutive nodes are not connected. Edges between the same pair
/// of nodes are merged, so the result covers every branch following the
/// node sequence.
fn cycle_profile(a: &Analysis, cycle: &[NodeId]) -> Option<Profile> {
    if cycle.is_empty() {
        return None;
    }
    let mut acc: Option<Profile> = None;
    for i in 0..cycle.len() {
        let x = cycle[i];
        let y = cycle[(i + 1) % cycle.len()];
        let mut edge: Option<Profile> = None;
        for s in a.steps.get(&x)? {
            if s.child == y {
                let p = a.edge_profile(x, s);
                edge = Some(match edge {
                    None => p,
                    Some(mut e) => {
                        for (k, v) in p {
                            e.entry(k).or_default().extend(v);
                        }
                        e
                    }
                });
            }
        }
        let edge = edge?;
        acc = Some(match acc {
            None => edge,
            Some(prev) => compose(&prev, &edge),
        });
    }
    acc
}

/// Does some branch that loops around `cycle` forever carry a valid thread?
fn cycle_has_valid_thread(a: &Analysis, cycle: &[NodeId]) -> Option<bool> {
    let f = cycle_profile(a, cycle)?;
    let x = cycle[0];
    let mut seen: BTreeSet<Profile> = BTreeSet::new();
    let mut cur = f.clone();
    loop {
        if a.good_diagonal(x, &cur).is_some() {
            return Some(true);
        }
        if !seen.insert(cur.clone()) {
            return Some(false);
        }
        cur = compose(&cur, &f);
    }
}

/// Confirm an invalidity witness: true iff the lasso branch classes through
/// the witness cycle carry no valid thread.
pub fn witness_replays(g: &ProofGraph, w: &LassoWitness) -> bool {
    let a = Analysis::new(g);
    matches!(cycle_has_valid_thread(&a, &w.cycle), Some(false))
}

/// Fast sound pre-pass: Valid when every strongly connected component is a
/// single elementary cycle carrying a valid thread; Unknown otherwise.
/// Never wrongly Valid.
pub fn quick_cycle_check(g: &ProofGraph) -> QuickVerdict {
    let a = Analysis::new(g);
    for scc in a.sccs() {
        let members: BTreeSet<NodeId> = scc.iter().copied().collect();
        let internal: Vec<(NodeId, NodeId)> = scc
            .iter()
            .flat_map(|&x| {
                a.steps[&x]
                    .iter()
                    .filter(|s| members.contains(&s.child))
                    .map(move |s| (x, s.child))
            })
            .collect();
        if internal.is_empty() {
            continue;
        }
        // Single elementary cycle: exactly one internal edge out of each
        // member, and they form one loop.
        let mut out: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (x, y) in &internal {
            out.entry(*x).or_default().push(*y);
        }
        if out.len() != scc.len() || out.values().any(|v| v.len() != 1) {
            return QuickVerdict::Unknown;
        }
        let start = scc[0];
        let mut cycle = vec![start];
        let mut cur = out[&start][0];
        while cur != start {
            cycle.push(cur);
            cur = out[&cur][0];
        }
        if cycle.len() != scc.len() {
            return QuickVerdict::Unknown;
        }
        if cycle_has_valid_thread(&a, &cycle) != Some(true) {
            return QuickVerdict::Unknown;
        }
    }
    QuickVerdict::Valid
}

/// Check one explicit lasso thread: true iff the minimal formula recurring
/// on its loop exists, is a nu on the succedent or a mu on the antecedent
/// matching `side`, and the loop passes a principal step.
pub fn thread_ok(g: &ProofGraph, t: &Thread, side: Side) -> Result<bool, ValidityError> {
    if t.steps.is_empty() || t.loop_start >= t.steps.len() {
        return Err(ValidityError::NotPeriodic(
            "empty thread or loop start out of range".into(),
        ));
    }
    // Resolve nodes and locate positions.
    let resolved: Vec<(NodeId, PosId)> = t
        .steps
        .iter()
        .map(|&(n, p)| (g.resolve(n), p))
        .collect();
    let link = |(x, p): (NodeId, PosId), (y, q): (NodeId, PosId)| -> bool {
        steps(g, x)
            .iter()
            .any(|s| s.child == y && s.map.get(&p).is_some_and(|v| v.contains(&q)))
    };
    for w in resolved.windows(2) {
        if !link(w[0], w[1]) {
            return Err(ValidityError::NotPeriodic(format!(
                "step {} -> {} does not follow the ancestor relation",
                w[0].0, w[1].0
            )));
        }
    }
    if !link(resolved[t.steps.len() - 1], resolved[t.loop_start]) {
        return Err(ValidityError::NotPeriodic(
            "loop endpoints do not reconnect".into(),
        ));
    }
    // Collect loop pairs.
    let uni = Universe::new(
        resolved
            .iter()
            .flat_map(|&(n, _)| g.node(n).conclusion().positions().map(|(_, _, f)| f)),
    );
    let mut pairs: BTreeSet<(usize, Side)> = BTreeSet::new();
    let mut principal_hit = false;
    for &(n, p) in &resolved[t.loop_start..] {
        let concl = g.node(n).conclusion();
        let (pside, i) = concl.find(p).ok_or_else(|| {
            ValidityError::NotPeriodic(format!("position {} not in conclusion of {}", p, n))
        })?;
        let f = &concl.side(pside)[i].formula;
        pairs.insert((uni.index(f).expect("in universe"), pside));
        if principal_positions(g, n).iter().any(|&(q, _)| q == p) {
            principal_hit = true;
        }
    }
    let fset: BTreeSet<usize> = pairs.iter().map(|&(f, _)| f).collect();
    let Some(m) = uni.minimum(&fset) else {
        return Ok(false);
    };
    let delta_matches = match &uni.formulas[m] {
        Formula::Nu(..) => side == Side::Succ,
        Formula::Mu(..) => side == Side::Ante,
        _ => false,
    };
    Ok(delta_matches && pairs.contains(&(m, side)) && principal_hit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::formula::{self as fml, SystemId};
    use crate::proof::check_proofgraph;

    #[test]
    fn corpus_verdicts() {
        assert!(validity_check(&corpus::diamond_stream()).is_valid());
        assert!(!validity_check(&corpus::trivial_loop()).is_valid());
        assert!(!validity_check(&corpus::numeral_infinite()).is_valid());
        assert!(validity_check(&corpus::conumeral_infinite()).is_valid());
        assert!(validity_check(&corpus::double_fn()).is_valid());
        for n in 0..4 {
            assert!(validity_check(&corpus::numeral(n)).is_valid());
        }
    }

    #[test]
    fn invalid_witnesses_replay() {
        for p in [corpus::trivial_loop(), corpus::numeral_infinite()] {
            match validity_check(&p) {
                ValidityVerdict::Invalid(w) => {
                    assert!(!w.cycle.is_empty());
                    assert!(witness_replays(&p, &w), "{}: witness must replay", p.name);
                }
                ValidityVerdict::Valid(_) => panic!("{} should be invalid", p.name),
            }
        }
    }

    #[test]
    fn trivial_loop_witness_is_the_right_premise() {
        // The left premise loop is fine (nu on the succedent); only the
        // right premise loop lacks a valid thread.
        let p = corpus::trivial_loop();
        match validity_check(&p) {
            ValidityVerdict::Invalid(w) => {
                assert_eq!(w.cycle.len(), 1);
                let target = w.cycle[0];
                use crate::proof::Node;
                match p.node(target) {
                    Node::Rule { app, .. } => {
                        assert_eq!(app.schema, crate::calculus::RuleId::NuL)
                    }
                    _ => panic!("witness should sit at the nu_l loop"),
                }
            }
            _ => panic!("trivial_loop should be invalid"),
        }
    }

    #[test]
    fn quick_check_sound_and_agrees() {
        assert_eq!(quick_cycle_check(&corpus::double_fn()), QuickVerdict::Valid);
        assert_eq!(
            quick_cycle_check(&corpus::diamond_stream()),
            QuickVerdict::Valid
        );
        assert_eq!(
            quick_cycle_check(&corpus::conumeral_infinite()),
            QuickVerdict::Valid
        );
        assert_eq!(
            quick_cycle_check(&corpus::numeral_infinite()),
            QuickVerdict::Unknown
        );
        assert_eq!(
            quick_cycle_check(&corpus::trivial_loop()),
            QuickVerdict::Unknown
        );
        assert_eq!(quick_cycle_check(&corpus::numeral(2)), QuickVerdict::Valid);
        // Agreement: quick Valid implies full Valid.
        for p in corpus::all_corpus() {
            if quick_cycle_check(&p) == QuickVerdict::Valid {
                assert!(validity_check(&p).is_valid(), "{}", p.name);
            }
        }
    }

    #[test]
    fn identity_proofs_are_valid() {
        for (sys, f) in [
            (SystemId::MuLk, corpus::nat()),
            (SystemId::MuLk, fml::impl_(fml::atom("a"), fml::atom("b"))),
            (SystemId::MuLl, fml::bang(fml::with(fml::atom("a"), fml::atom("b")))),
            (SystemId::MuLlBox, fml::boxm(fml::nu("X", fml::dia(fml::var("X"))))),
            (SystemId::MuLl, fml::mu("X", fml::plus(Formula::One, fml::var("X")))),
        ] {
            let p = corpus::identity_proof(sys, &f);
            assert!(check_proofgraph(&p).is_empty());
            assert!(validity_check(&p).is_valid(), "id({})", f);
        }
    }

    #[test]
    fn random_proofs_agree_and_replay() {
        for seed in 0..25 {
            let p = corpus::random_classical_proof(seed, 5);
            let full = validity_check(&p);
            if quick_cycle_check(&p) == QuickVerdict::Valid {
                assert!(full.is_valid(), "seed {}", seed);
            }
            if let ValidityVerdict::Invalid(w) = &full {
                assert!(witness_replays(&p, w), "seed {}", seed);
            }
        }
        for seed in 0..15 {
            let p = corpus::random_linear_proof(SystemId::MuLlBox, seed);
            assert!(
                validity_check(&p).is_valid(),
                "identity expansions are valid (seed {})",
                seed
            );
        }
    }

    #[test]
    fn explicit_threads() {
        // The antecedent thread around the double loop.
        let p = corpus::double_fn();
        let ante_pos = |n: NodeId| p.node(n).conclusion().ante[0].id;
        let cycle: Vec<NodeId> = {
            // Follow the loop: root, or_l node, then the successor chain.
            let mut c = vec![p.root];
            let mut cur = p.root;
            loop {
                let ss = steps(&p, cur);
                // Stay on the branch that loops (the last child).
                let next = ss.last().unwrap().child;
                if next == p.root {
                    break;
                }
                c.push(next);
                cur = next;
            }
            c
        };
        assert_eq!(cycle.len(), 6);
        let t = Thread {
            steps: cycle.iter().map(|&n| (n, ante_pos(n))).collect(),
            loop_start: 0,
        };
        assert_eq!(thread_ok(&p, &t, Side::Ante), Ok(true));
        // The same loop on the succedent side carries a mu: not valid.
        let succ_pos = |n: NodeId| p.node(n).conclusion().succ[0].id;
        let t2 = Thread {
            steps: cycle.iter().map(|&n| (n, succ_pos(n))).collect(),
            loop_start: 0,
        };
        assert_eq!(thread_ok(&p, &t2, Side::Succ), Ok(false));

        // pi_inf: succedent loop carries mu on the succedent: not valid.
        let pi = corpus::numeral_infinite();
        let spos = |n: NodeId| pi.node(n).conclusion().succ[0].id;
        let loop_nodes: Vec<NodeId> = {
            let s = steps(&pi, pi.root);
            vec![pi.root, s[0].child]
        };
        let t3 = Thread {
            steps: loop_nodes.iter().map(|&n| (n, spos(n))).collect(),
            loop_start: 0,
        };
        assert_eq!(thread_ok(&pi, &t3, Side::Succ), Ok(false));

        // The conat variant is valid.
        let co = corpus::conumeral_infinite();
        let spos = |n: NodeId| co.node(n).conclusion().succ[0].id;
        let loop_nodes: Vec<NodeId> = {
            let s = steps(&co, co.root);
            vec![co.root, s[0].child]
        };
        let t4 = Thread {
            steps: loop_nodes.iter().map(|&n| (n, spos(n))).collect(),
            loop_start: 0,
        };
        assert_eq!(thread_ok(&co, &t4, Side::Succ), Ok(true));

        // A chain that does not loop is rejected.
        let fin = corpus::numeral(1);
        let spos0 = fin.node(fin.root).conclusion().succ[0].id;
        let t5 = Thread {
            steps: vec![(fin.root, spos0)],
            loop_start: 0,
        };
        assert!(matches!(
            thread_ok(&fin, &t5, Side::Succ),
            Err(ValidityError::NotPeriodic(_))
        ));
    }

    #[test]
    fn ordering_examples() {
        // Nat sits below its unfolding; T sits below the unfolding too.
        let uni = Universe::new([corpus::nat()].iter());
        let nat = uni.index(&corpus::nat()).unwrap();
        let unf = uni
            .index(&corpus::nat().unfold_fixpoint().unwrap())
            .unwrap();
        let t = uni.index(&Formula::ClTrue).unwrap();
        assert!(uni.strictly_below(nat, unf));
        assert!(uni.strictly_below(t, unf));
        assert!(!uni.strictly_below(unf, nat));
        assert_eq!(uni.minimum(&BTreeSet::from([nat, unf])), Some(nat));
        // Incomparable atoms have no minimum.
        let uni2 = Universe::new([fml::atom("a"), fml::atom("b")].iter());
        let a = uni2.index(&fml::atom("a")).unwrap();
        let b = uni2.index(&fml::atom("b")).unwrap();
        assert_eq!(uni2.minimum(&BTreeSet::from([a, b])), None);
        // Nested fixed points: the outer one is the minimum of its cluster.
        let phi = fml::mu("X", fml::nu("Y", fml::and(fml::var("X"), fml::var("Y"))));
        let psi = phi.unfold_fixpoint().unwrap();
        let chi = psi.unfold_fixpoint().unwrap();
        let uni3 = Universe::new([phi.clone()].iter());
        let pi_ = uni3.index(&phi).unwrap();
        let ps_ = uni3.index(&psi).unwrap();
        let ch_ = uni3.index(&chi).unwrap();
        assert!(uni3.strictly_below(pi_, ps_));
        assert!(uni3.strictly_below(ps_, ch_));
        assert_eq!(
            uni3.minimum(&BTreeSet::from([pi_, ps_, ch_])),
            Some(pi_)
        );
    }
}
