//! The multicut rule object: an n-ary cut with an explicit wiring.
//!
//! An [`Mcut`] relates a conclusion sequent to a list of premise sequents.
//! Every conclusion occurrence is mapped by `iota` to the premise occurrence
//! it descends from (side-preserving, injective), and the remaining premise
//! occurrences — the cut formulas — are paired up by the symmetric `ppr`
//! relation: each pair carries the same formula on opposite sides of two
//! premises. Projecting `ppr` to premise indices must give a tree (acyclic
//! and connected), which is what makes the multicut behave like a nested
//! stack of ordinary binary cuts.

use crate::calculus::{rank_align, PosId, RuleId, Sequent, Side};
use crate::proof::{PrefixNode, TreePrefix};
use std::collections::{BTreeMap, BTreeSet};

/// A premise occurrence: premise index plus position inside that premise.
pub type PremPos = (usize, PosId);

/// The multicut rule instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mcut {
    pub premises: Vec<Sequent>,
    pub conclusion: Sequent,
    /// Conclusion occurrence -> the premise occurrence it descends from.
    pub iota: BTreeMap<PosId, PremPos>,
    /// Cut-formula pairing; each unordered pair stored once, smaller first.
    pub ppr: BTreeSet<(PremPos, PremPos)>,
}

impl Mcut {
    pub fn arity(&self) -> usize {
        self.premises.len()
    }

    /// Record a cut-formula link between two premise occurrences.
    pub fn link(&mut self, a: PremPos, b: PremPos) {
        if a <= b {
            self.ppr.insert((a, b));
        } else {
            self.ppr.insert((b, a));
        }
    }

    /// The occurrence paired with `pos`, if any.
    pub fn ppr_partner(&self, pos: PremPos) -> Option<PremPos> {
        for (a, b) in &self.ppr {
            if *a == pos {
                return Some(*b);
            }
            if *b == pos {
                return Some(*a);
            }
        }
        None
    }

    /// Inverse of `iota`: premise occurrence -> conclusion occurrence.
    pub fn iota_inv(&self) -> BTreeMap<PremPos, PosId> {
        self.iota.iter().map(|(c, pp)| (*pp, *c)).collect()
    }

    /// All cut-formula occurrences of premise `i` with their partners.
    pub fn links_of(&self, i: usize) -> Vec<(PosId, PremPos)> {
        let mut out = Vec::new();
        for (a, b) in &self.ppr {
            if a.0 == i {
                out.push((a.1, *b));
            }
            if b.0 == i {
                out.push((b.1, *a));
            }
        }
        out
    }
}

/// Violations of the multicut invariants.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum McutDefect {
    #[error("conclusion position {0} has no iota image")]
    IotaMissing(PosId),
    #[error("iota source {0} is not a conclusion position")]
    IotaUnknownSource(PosId),
    #[error("iota target ({0}, {1}) is not a premise position")]
    IotaUnknownTarget(usize, PosId),
    #[error("iota maps two conclusion positions to ({0}, {1})")]
    IotaNotInjective(usize, PosId),
    #[error("iota moves {0} across sides")]
    IotaSide(PosId),
    #[error("iota changes the formula at {0}")]
    IotaFormula(PosId),
    #[error("cut link mentions unknown premise position ({0}, {1})")]
    PprUnknown(usize, PosId),
    #[error("premise position ({0}, {1}) is both iota-mapped and cut-linked, or linked twice")]
    PprOverlap(usize, PosId),
    #[error("cut link ({0}, {1}) -- ({2}, {3}) joins occurrences on the same side")]
    PprSameSide(usize, PosId, usize, PosId),
    #[error("cut link ({0}, {1}) -- ({2}, {3}) joins different formulas")]
    PprFormula(usize, PosId, usize, PosId),
    #[error("premise position ({0}, {1}) is neither iota-mapped nor cut-linked")]
    Uncovered(usize, PosId),
    #[error("the premise graph of the cut links has a cycle")]
    PprCyclic,
    #[error("the premise graph of the cut links is disconnected")]
    PprDisconnected,
}

/// Errors of the multicut operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum McutError {
    #[error("not a cut tree: {0}")]
    NotACutTree(String),
    #[error("positions are not all in the designated premise: {0}")]
    PositionsNotInOnePremise(String),
}

/// Check every multicut invariant; empty means well-formed.
pub fn mcut_wellformed(m: &Mcut) -> Vec<McutDefect> {
    let mut out = Vec::new();

    // iota: total, injective, side- and formula-preserving, targets exist.
    let mut image: BTreeSet<PremPos> = BTreeSet::new();
    for (c, (i, p)) in &m.iota {
        let Some((cside, ci)) = m.conclusion.find(*c) else {
            out.push(McutDefect::IotaUnknownSource(*c));
            continue;
        };
        let Some(prem) = m.premises.get(*i) else {
            out.push(McutDefect::IotaUnknownTarget(*i, *p));
            continue;
        };
        let Some((pside, pi)) = prem.find(*p) else {
            out.push(McutDefect::IotaUnknownTarget(*i, *p));
            continue;
        };
        if !image.insert((*i, *p)) {
            out.push(McutDefect::IotaNotInjective(*i, *p));
        }
        if cside != pside {
            out.push(McutDefect::IotaSide(*c));
        } else if m.conclusion.side(cside)[ci].formula != prem.side(pside)[pi].formula {
            out.push(McutDefect::IotaFormula(*c));
        }
    }
    for c in m.conclusion.ids() {
        if !m.iota.contains_key(&c) {
            out.push(McutDefect::IotaMissing(c));
        }
    }

    // ppr: known positions, disjoint from iota's image, at most one link per
    // position, opposite sides, equal formulas.
    let mut linked: BTreeSet<PremPos> = BTreeSet::new();
    for (a, b) in &m.ppr {
        let mut side_of = |pp: &PremPos| -> Option<(Side, &Sequent)> {
            match m.premises.get(pp.0) {
                Some(prem) => match prem.find(pp.1) {
                    Some((s, _)) => Some((s, prem)),
                    None => {
                        out.push(McutDefect::PprUnknown(pp.0, pp.1));
                        None
                    }
                },
                None => {
                    out.push(McutDefect::PprUnknown(pp.0, pp.1));
                    None
                }
            }
        };
        let sa = side_of(a);
        let sb = side_of(b);
        for pp in [a, b] {
            if image.contains(pp) || !linked.insert(*pp) {
                out.push(McutDefect::PprOverlap(pp.0, pp.1));
            }
        }
        if let (Some((side_a, prem_a)), Some((side_b, prem_b))) = (sa, sb) {
            if side_a == side_b {
                out.push(McutDefect::PprSameSide(a.0, a.1, b.0, b.1));
            }
            let fa = prem_a.formula(a.1).unwrap();
            let fb = prem_b.formula(b.1).unwrap();
            if fa != fb {
                out.push(McutDefect::PprFormula(a.0, a.1, b.0, b.1));
            }
        }
    }

    // Coverage: every premise position is iota-image xor linked.
    for (i, prem) in m.premises.iter().enumerate() {
        for p in prem.ids() {
            if !image.contains(&(i, p)) && !linked.contains(&(i, p)) {
                out.push(McutDefect::Uncovered(i, p));
            }
        }
    }

    // Premise-index projection must be a tree: union-find cycle test plus a
    // final connectivity check.
    let n = m.premises.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut cyclic = false;
    for (a, b) in &m.ppr {
        if a.0 >= n || b.0 >= n {
            continue;
        }
        let ra = find(&mut parent, a.0);
        let rb = find(&mut parent, b.0);
        if ra == rb {
            cyclic = true;
        } else {
            parent[ra] = rb;
        }
    }
    if cyclic {
        out.push(McutDefect::PprCyclic);
    }
    if n > 0 {
        let r0 = find(&mut parent, 0);
        if (1..n).any(|i| find(&mut parent, i) != r0) {
            out.push(McutDefect::PprDisconnected);
        }
    }

    out
}

/// The set of premises connected to `occs` (positions inside premise `i`)
/// by following cut links: first the links of the designated occurrences,
/// then every link of each newly included premise. With `exclude_self` the
/// designated premise itself is dropped from the result.
pub fn restrict(
    m: &Mcut,
    premise: usize,
    occs: &BTreeSet<PosId>,
    exclude_self: bool,
) -> Result<BTreeSet<usize>, McutError> {
    let prem = m.premises.get(premise).ok_or_else(|| {
        McutError::PositionsNotInOnePremise(format!("premise index {} out of range", premise))
    })?;
    for p in occs {
        if prem.find(*p).is_none() {
            return Err(McutError::PositionsNotInOnePremise(format!(
                "position {} is not in premise {}",
                p, premise
            )));
        }
    }
    let mut included: BTreeSet<usize> = BTreeSet::new();
    included.insert(premise);
    let mut work: Vec<usize> = Vec::new();
    for p in occs {
        if let Some((j, _)) = m.ppr_partner((premise, *p)) {
            work.push(j);
        }
    }
    while let Some(j) = work.pop() {
        if included.insert(j) {
            for (_, (k, _)) in m.links_of(j) {
                work.push(k);
            }
        }
    }
    if exclude_self {
        included.remove(&premise);
    }
    Ok(included)
}

struct Flat {
    leaves: Vec<Sequent>,
    links: Vec<(PremPos, PremPos)>,
    /// This subtree's conclusion position -> leaf occurrence.
    map: BTreeMap<PosId, PremPos>,
}

fn flatten(node: &PrefixNode) -> Result<Flat, McutError> {
    match node {
        PrefixNode::Rule { app, children } if app.schema == RuleId::Cut => {
            if children.len() != 2 {
                return Err(McutError::NotACutTree(
                    "cut node without two children".into(),
                ));
            }
            let f1 = flatten(&children[0])?;
            let mut f2 = flatten(&children[1])?;
            let off = f1.leaves.len();
            let bump = |pp: PremPos| (pp.0 + off, pp.1);
            // Premise-to-child alignment (rank-wise, formula-preserving).
            let mut aligns = Vec::new();
            for (k, child) in children.iter().enumerate() {
                let al = rank_align(&app.premises[k], child.conclusion()).ok_or_else(|| {
                    McutError::NotACutTree(format!(
                        "cut premise `{}` does not match the subtree conclusion `{}`",
                        app.premises[k],
                        child.conclusion()
                    ))
                })?;
                aligns.push(al);
            }
            let child_map = |k: usize, pp: PosId, f1: &Flat, f2: &Flat| -> PremPos {
                let q = aligns[k][&pp];
                if k == 0 {
                    f1.map[&q]
                } else {
                    bump(f2.map[&q])
                }
            };
            let mut map = BTreeMap::new();
            for (c, descs) in &app.ancestors {
                // Context positions of a cut go to exactly one premise.
                let (k, pp) = descs[0];
                map.insert(*c, child_map(k, pp, &f1, &f2));
            }
            let cut_l = app.introduced(0)[0];
            let cut_r = app.introduced(1)[0];
            let new_link = (
                child_map(0, cut_l, &f1, &f2),
                child_map(1, cut_r, &f1, &f2),
            );
            let mut links = f1.links;
            links.extend(f2.links.drain(..).map(|(a, b)| (bump(a), bump(b))));
            links.push(new_link);
            let mut leaves = f1.leaves;
            leaves.extend(f2.leaves);
            Ok(Flat { leaves, links, map })
        }
        _ => {
            let conclusion = node.conclusion().clone();
            let map = conclusion.ids().map(|p| (p, (0usize, p))).collect();
            Ok(Flat {
                leaves: vec![conclusion],
                links: Vec::new(),
                map,
            })
        }
    }
}

/// Flatten a finite tree of binary cuts into one multicut: the premises are
/// the leaf sequents left to right, every cut contributes one link, and the
/// conclusion wiring is the composite ancestor relation.
pub fn from_cut_tree(t: &TreePrefix) -> Result<Mcut, McutError> {
    let flat = flatten(&t.root)?;
    let mut mc = Mcut {
        premises: flat.leaves,
        conclusion: t.root.conclusion().clone(),
        iota: flat.map,
        ppr: BTreeSet::new(),
    };
    for (a, b) in flat.links {
        mc.link(a, b);
    }
    debug_assert!(mcut_wellformed(&mc).is_empty());
    Ok(mc)
}

/// View one binary cut rule as an arity-2 multicut with a single link.
pub fn cut_to_mcut(app: &crate::calculus::RuleApp) -> Mcut {
    debug_assert_eq!(app.schema, RuleId::Cut);
    let iota = app
        .ancestors
        .iter()
        .map(|(c, ups)| {
            debug_assert_eq!(ups.len(), 1);
            (*c, ups[0])
        })
        .collect();
    let mut mc = Mcut {
        premises: app.premises.clone(),
        conclusion: app.conclusion.clone(),
        iota,
        ppr: BTreeSet::new(),
    };
    mc.link((0, app.introduced(0)[0]), (1, app.introduced(1)[0]));
    debug_assert!(mcut_wellformed(&mc).is_empty());
    mc
}

/// Prepare a proof graph for multicut reduction: on every branch the
/// bottommost binary cut is replaced by an arity-2 multicut node carrying the
/// same premises and children.  Cuts above those nodes are left as rules (the
/// reduction engine absorbs them into the multicut when it reaches them), and
/// back-edges keep pointing at the rule form, so a multicut never sits above
/// another multicut along a branch.  Graphs without cuts below the existing
/// multicut frontier are returned unchanged in shape; the operation is
/// idempotent.
pub fn init_reduction(p: &crate::proof::ProofGraph) -> crate::proof::ProofGraph {
    use crate::proof::Node;
    let mut g = p.clone();
    // Walk down from the root, stopping at cuts and existing multicuts: the
    // cuts found this way are the bottommost ones per branch.
    let mut below: Vec<crate::proof::NodeId> = Vec::new();
    let mut frontier: BTreeSet<crate::proof::NodeId> = BTreeSet::new();
    let mut seen: BTreeSet<crate::proof::NodeId> = BTreeSet::new();
    let mut stack = vec![g.root];
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        match g.node(id) {
            Node::Rule { app, .. } if app.schema == RuleId::Cut => {
                frontier.insert(id);
            }
            Node::Mcut { .. } => {}
            _ => {
                below.push(id);
                for s in g.successors(id) {
                    stack.push(s);
                }
            }
        }
    }
    if frontier.is_empty() {
        return g;
    }
    // Twin multicut node for every frontier cut.  The original cut node stays
    // in the graph for as long as something above (a premise subtree or a
    // back-edge) still refers to it.
    let mut twin: BTreeMap<crate::proof::NodeId, crate::proof::NodeId> = BTreeMap::new();
    for &c in &frontier {
        let (app, children) = match g.node(c) {
            Node::Rule { app, children } => (app.clone(), children.clone()),
            _ => unreachable!(),
        };
        let t = g.add(Node::Mcut {
            mc: cut_to_mcut(&app),
            children,
        });
        twin.insert(c, t);
    }
    // Only edges in the region below the frontier are rewired; back-edges and
    // premise-internal edges keep the rule form.
    for id in below {
        if let Node::Rule { children, .. } | Node::Mcut { children, .. } =
            g.nodes.get_mut(&id).expect("node")
        {
            for ch in children.iter_mut() {
                if let Some(t) = twin.get(ch) {
                    *ch = *t;
                }
            }
        }
    }
    if let Some(t) = twin.get(&g.root) {
        g.root = *t;
    }
    g.gc();
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{instantiate, RuleParams};
    use crate::formula::atom;

    /// |- A,B ; B |- C ; C |- D concluding |- A,D with B--B and C--C links.
    fn chain3() -> Mcut {
        let s1 = Sequent::new(vec![], vec![atom("A"), atom("B")]);
        let s2 = Sequent::new(vec![atom("B")], vec![atom("C")]);
        let s3 = Sequent::new(vec![atom("C")], vec![atom("D")]);
        let conclusion = Sequent::new(vec![], vec![atom("A"), atom("D")]);
        let mut iota = BTreeMap::new();
        iota.insert(conclusion.succ[0].id, (0usize, s1.succ[0].id));
        iota.insert(conclusion.succ[1].id, (2usize, s3.succ[0].id));
        let mut mc = Mcut {
            premises: vec![s1, s2, s3],
            conclusion,
            iota,
            ppr: BTreeSet::new(),
        };
        let b1 = (0, mc.premises[0].succ[1].id);
        let b2 = (1, mc.premises[1].ante[0].id);
        let c2 = (1, mc.premises[1].succ[0].id);
        let c3 = (2, mc.premises[2].ante[0].id);
        mc.link(b1, b2);
        mc.link(c2, c3);
        mc
    }

    #[test]
    fn chain_is_wellformed() {
        assert!(mcut_wellformed(&chain3()).is_empty());
    }

    #[test]
    fn identity_arity_one() {
        let s = Sequent::new(vec![atom("a")], vec![atom("b")]);
        let iota = s.ids().map(|p| (p, (0usize, p))).collect();
        let mc = Mcut {
            premises: vec![s.clone()],
            conclusion: s,
            iota,
            ppr: BTreeSet::new(),
        };
        assert!(mcut_wellformed(&mc).is_empty());
    }

    #[test]
    fn link_cycle_detected() {
        // A |- B ; B |- C ; C |- A with three links: a triangle.
        let s1 = Sequent::new(vec![atom("A")], vec![atom("B")]);
        let s2 = Sequent::new(vec![atom("B")], vec![atom("C")]);
        let s3 = Sequent::new(vec![atom("C")], vec![atom("A")]);
        let conclusion = Sequent::new(vec![], vec![]);
        let mut mc = Mcut {
            premises: vec![s1, s2, s3],
            conclusion,
            iota: BTreeMap::new(),
            ppr: BTreeSet::new(),
        };
        mc.link((0, mc.premises[0].succ[0].id), (1, mc.premises[1].ante[0].id));
        mc.link((1, mc.premises[1].succ[0].id), (2, mc.premises[2].ante[0].id));
        mc.link((2, mc.premises[2].succ[0].id), (0, mc.premises[0].ante[0].id));
        let defects = mcut_wellformed(&mc);
        assert!(defects.contains(&McutDefect::PprCyclic), "{:?}", defects);
    }

    #[test]
    fn restrict_closure() {
        let mc = chain3();
        // Designated occurrence B in premise 0: pulls in premises 1 and 2.
        let b = mc.premises[0].succ[1].id;
        let got = restrict(&mc, 0, &BTreeSet::from([b]), true).unwrap();
        assert_eq!(got, BTreeSet::from([1, 2]));
        // A is iota-mapped: nothing to follow.
        let a = mc.premises[0].succ[0].id;
        let got = restrict(&mc, 0, &BTreeSet::from([a]), true).unwrap();
        assert!(got.is_empty());
        // Empty occurrence set: empty with exclude_self, self otherwise.
        let got = restrict(&mc, 0, &BTreeSet::new(), true).unwrap();
        assert!(got.is_empty());
        let got = restrict(&mc, 0, &BTreeSet::new(), false).unwrap();
        assert_eq!(got, BTreeSet::from([0]));
        // Positions outside the designated premise error out.
        let c = mc.premises[1].succ[0].id;
        assert!(matches!(
            restrict(&mc, 0, &BTreeSet::from([PosId(c.0 + 90)]), true),
            Err(McutError::PositionsNotInOnePremise(_))
        ));
    }

    fn leaf(s: &Sequent) -> PrefixNode {
        PrefixNode::Suspension {
            node: crate::proof::NodeId(0),
            conclusion: s.clone(),
        }
    }

    #[test]
    fn single_cut_flattens() {
        // |- A,C by cut on B: premises |- B,A and B |- C.
        let conclusion = Sequent::new(vec![], vec![atom("A"), atom("C")]);
        let a = conclusion.succ[0].id;
        let app = instantiate(
            RuleId::Cut,
            conclusion,
            RuleParams::CutOn {
                formula: atom("B"),
                left: BTreeSet::from([a]),
            },
        )
        .unwrap();
        let kids = vec![leaf(&app.premises[0]), leaf(&app.premises[1])];
        let t = TreePrefix {
            root: PrefixNode::Rule {
                app,
                children: kids,
            },
        };
        let mc = from_cut_tree(&t).unwrap();
        assert_eq!(mc.arity(), 2);
        assert!(mcut_wellformed(&mc).is_empty());
        assert_eq!(mc.ppr.len(), 1);
        assert_eq!(mc.conclusion.to_string(), " |- A, C");
    }

    // Canonical view for comparing multicuts built from different trees:
    // everything re-expressed through (premise index, side, rank).
    fn canon(mc: &Mcut) -> (Vec<String>, Vec<(usize, Side, usize)>, BTreeSet<Vec<(usize, Side, usize)>>) {
        let rank = |i: usize, p: PosId| {
            let (s, k) = mc.premises[i].find(p).unwrap();
            (i, s, k)
        };
        let prems = mc.premises.iter().map(|s| s.to_string()).collect();
        let iota = mc
            .conclusion
            .ids()
            .map(|c| {
                let (i, p) = mc.iota[&c];
                rank(i, p)
            })
            .collect();
        let links = mc
            .ppr
            .iter()
            .map(|(a, b)| {
                let mut v = vec![rank(a.0, a.1), rank(b.0, b.1)];
                v.sort();
                v
            })
            .collect();
        (prems, iota, links)
    }

    #[test]
    fn reassociation_invariance() {
        // cut_B(s1, cut_C(s2, s3)) and cut_C(cut_B(s1, s2), s3) flatten to
        // the same multicut.
        let conclusion = Sequent::new(vec![], vec![atom("A"), atom("D")]);
        let a = conclusion.succ[0].id;

        // Tree 1: outer cut on B.
        let outer1 = instantiate(
            RuleId::Cut,
            conclusion.clone(),
            RuleParams::CutOn {
                formula: atom("B"),
                left: BTreeSet::from([a]),
            },
        )
        .unwrap();
        // Right premise of the outer cut: B |- D, cut on C inside.
        let inner1_concl = outer1.premises[1].clone();
        let inner1 = instantiate(
            RuleId::Cut,
            inner1_concl,
            RuleParams::CutOn {
                formula: atom("C"),
                left: BTreeSet::from([outer1.premises[1].ante[0].id]),
            },
        )
        .unwrap();
        let t1 = TreePrefix {
            root: PrefixNode::Rule {
                children: vec![
                    leaf(&outer1.premises[0]),
                    PrefixNode::Rule {
                        children: vec![leaf(&inner1.premises[0]), leaf(&inner1.premises[1])],
                        app: inner1,
                    },
                ],
                app: outer1,
            },
        };

        // Tree 2: outer cut on C.
        let outer2 = instantiate(
            RuleId::Cut,
            conclusion,
            RuleParams::CutOn {
                formula: atom("C"),
                left: BTreeSet::from([a]),
            },
        )
        .unwrap();
        // Left premise of the outer cut: |- C, A, cut on B inside.
        let inner2_concl = outer2.premises[0].clone();
        let keep_a = inner2_concl.succ[1].id;
        let inner2 = instantiate(
            RuleId::Cut,
            inner2_concl,
            RuleParams::CutOn {
                formula: atom("B"),
                left: BTreeSet::from([keep_a]),
            },
        )
        .unwrap();
        let t2 = TreePrefix {
            root: PrefixNode::Rule {
                children: vec![
                    PrefixNode::Rule {
                        children: vec![leaf(&inner2.premises[0]), leaf(&inner2.premises[1])],
                        app: inner2,
                    },
                    leaf(&outer2.premises[1]),
                ],
                app: outer2,
            },
        };

        let m1 = from_cut_tree(&t1).unwrap();
        let m2 = from_cut_tree(&t2).unwrap();
        assert!(mcut_wellformed(&m1).is_empty());
        assert!(mcut_wellformed(&m2).is_empty());
        assert_eq!(m1.arity(), 3);
        assert_eq!(canon(&m1), canon(&m2));
    }

    #[test]
    fn leaf_only_tree() {
        let s = Sequent::new(vec![atom("a")], vec![atom("b")]);
        let t = TreePrefix { root: leaf(&s) };
        let mc = from_cut_tree(&t).unwrap();
        assert_eq!(mc.arity(), 1);
        assert!(mc.ppr.is_empty());
        assert!(mcut_wellformed(&mc).is_empty());
    }
}
