//! Finite-graph representation of circular pre-proofs.
//!
//! A [`ProofGraph`] is a finite map from node ids to nodes; a node is an
//! ordinary rule instance with one child per premise, a multicut with one
//! child per premise, or a back-edge pointing at an earlier node whose
//! conclusion carries the same formula list. Back-edges make the graph denote
//! a (possibly infinite) regular proof tree; [`unfold`] materializes a finite
//! prefix of that tree on demand.
//!
//! Along every edge the parent premise and the child conclusion must agree
//! formula-for-formula in order; positions correspond rank-wise
//! ([`rank_align`]). Reorderings are written as explicit exchange rules.

use crate::calculus::{instantiate, rank_align, PosId, RuleApp, RuleParams, Sequent, Side};
use crate::formula::SystemId;
use crate::multicut::{mcut_wellformed, Mcut, McutDefect};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Identifier of a proof-graph node, printed `n0`, `n1`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// An ordinary rule instance; `children[k]` proves premise `k`.
    Rule { app: RuleApp, children: Vec<NodeId> },
    /// A multicut; `children[k]` proves premise `k`.
    Mcut { mc: Mcut, children: Vec<NodeId> },
    /// A back-edge: this subproof is the one rooted at `target`, whose
    /// conclusion must carry the same formula list as `conclusion`.
    Back { conclusion: Sequent, target: NodeId },
}

impl Node {
    pub fn conclusion(&self) -> &Sequent {
        match self {
            Node::Rule { app, .. } => &app.conclusion,
            Node::Mcut { mc, .. } => &mc.conclusion,
            Node::Back { conclusion, .. } => conclusion,
        }
    }

    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Rule { children, .. } | Node::Mcut { children, .. } => children,
            Node::Back { .. } => &[],
        }
    }

    pub fn premises(&self) -> Vec<&Sequent> {
        match self {
            Node::Rule { app, .. } => app.premises.iter().collect(),
            Node::Mcut { mc, .. } => mc.premises.iter().collect(),
            Node::Back { .. } => Vec::new(),
        }
    }
}

/// A regular pre-proof as a finite graph.
#[derive(Debug, Clone)]
pub struct ProofGraph {
    pub system: SystemId,
    pub name: String,
    pub root: NodeId,
    pub nodes: BTreeMap<NodeId, Node>,
}

impl ProofGraph {
    pub fn new(system: SystemId, name: impl Into<String>) -> ProofGraph {
        ProofGraph {
            system,
            name: name.into(),
            root: NodeId(0),
            nodes: BTreeMap::new(),
        }
    }

    /// Insert a node under a fresh id.
    pub fn add(&mut self, node: Node) -> NodeId {
        let id = self.fresh_id();
        self.nodes.insert(id, node);
        id
    }

    pub fn fresh_id(&self) -> NodeId {
        NodeId(self.nodes.keys().last().map_or(0, |n| n.0 + 1))
    }

    pub fn get(&self, id: NodeId) -> Option<&Node> {
        self.nodes.get(&id)
    }

    /// The node under `id`; panics on dangling ids (a well-formedness defect
    /// reported by [`check_proofgraph`]).
    pub fn node(&self, id: NodeId) -> &Node {
        self.nodes
            .get(&id)
            .unwrap_or_else(|| panic!("dangling node id {}", id))
    }

    pub fn end_sequent(&self) -> &Sequent {
        self.node(self.root).conclusion()
    }

    /// Graph successors: children, or the back-edge target.
    pub fn successors(&self, id: NodeId) -> Vec<NodeId> {
        match self.node(id) {
            Node::Back { target, .. } => vec![*target],
            n => n.children().to_vec(),
        }
    }

    /// Follow back-edges to a rule or multicut node.
    pub fn resolve(&self, id: NodeId) -> NodeId {
        let (r, _) = self.resolve_align(id);
        r
    }

    /// Follow back-edges, composing the conclusion alignments. Returns the
    /// final node and the map from `id`'s conclusion positions to its.
    pub fn resolve_align(&self, id: NodeId) -> (NodeId, BTreeMap<PosId, PosId>) {
        let mut cur = id;
        let mut acc: Option<BTreeMap<PosId, PosId>> = None;
        for _ in 0..=self.nodes.len() {
            match self.node(cur) {
                Node::Back { conclusion, target } => {
                    let step = rank_align(conclusion, self.node(*target).conclusion())
                        .unwrap_or_else(|| {
                            panic!("misaligned back-edge at {} (checked elsewhere)", cur)
                        });
                    acc = Some(match acc {
                        None => step,
                        Some(prev) => prev
                            .into_iter()
                            .map(|(k, v)| (k, step[&v]))
                            .collect(),
                    });
                    cur = *target;
                }
                _ => {
                    let map = acc.unwrap_or_else(|| {
                        self.node(cur)
                            .conclusion()
                            .ids()
                            .map(|p| (p, p))
                            .collect()
                    });
                    return (cur, map);
                }
            }
        }
        panic!("back-edge cycle at {}", id);
    }

    pub fn reachable(&self) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        if !self.nodes.contains_key(&self.root) {
            return seen;
        }
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            for s in self.successors(id) {
                if self.nodes.contains_key(&s) {
                    stack.push(s);
                }
            }
        }
        seen
    }

    /// Drop nodes unreachable from the root.
    pub fn gc(&mut self) {
        let keep = self.reachable();
        self.nodes.retain(|id, _| keep.contains(id));
    }
}

/// A well-formedness violation; an empty defect list means the graph is a
/// pre-proof of its system.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Defect {
    #[error("root {root} does not exist")]
    MissingRoot { root: NodeId },
    #[error("node {at}: child {missing} does not exist")]
    MissingNode { at: NodeId, missing: NodeId },
    #[error("node {at}: rule has {expected} premises but {found} children")]
    ArityError {
        at: NodeId,
        expected: usize,
        found: usize,
    },
    #[error("node {at}: premise {premise} `{expected}` does not match child conclusion `{found}`")]
    EdgeMismatch {
        at: NodeId,
        premise: usize,
        expected: String,
        found: String,
    },
    #[error("node {at}: back-edge mismatch: {reason}")]
    BackEdgeMismatch { at: NodeId, reason: String },
    #[error("node {at}: rule {rule} is not part of system {system}")]
    RuleNotInSystem {
        at: NodeId,
        rule: &'static str,
        system: &'static str,
    },
    #[error("node {at}: formula `{formula}` is not a {system} formula")]
    FormulaNotInSystem {
        at: NodeId,
        formula: String,
        system: &'static str,
    },
    #[error("node {at}: malformed rule instance: {reason}")]
    RuleShape { at: NodeId, reason: String },
    #[error("node {at}: multicut defect: {defect}")]
    McutIssue { at: NodeId, defect: McutDefect },
    #[error("node {id} is unreachable from the root")]
    Unreachable { id: NodeId },
}

/// Check all local invariants: rule shapes (by re-instantiation), arities,
/// edge alignment, back-edge alignment, multicut wiring, system membership.
pub fn check_proofgraph(p: &ProofGraph) -> Vec<Defect> {
    let mut out = Vec::new();
    if !p.nodes.contains_key(&p.root) {
        out.push(Defect::MissingRoot { root: p.root });
        return out;
    }
    let reachable = p.reachable();
    for id in p.nodes.keys() {
        if !reachable.contains(id) {
            out.push(Defect::Unreachable { id: *id });
        }
    }

    let sysname = p.system.name();
    for (&at, node) in &p.nodes {
        if !reachable.contains(&at) {
            continue;
        }
        for f in node
            .conclusion()
            .positions()
            .map(|(_, _, f)| f)
            .chain(node.premises().iter().flat_map(|s| s.positions().map(|(_, _, f)| f)))
        {
            if !f.is_formula(p.system) {
                out.push(Defect::FormulaNotInSystem {
                    at,
                    formula: f.to_string(),
                    system: sysname,
                });
            }
        }
        match node {
            Node::Rule { app, children } => {
                if !app.schema.admitted(p.system) {
                    out.push(Defect::RuleNotInSystem {
                        at,
                        rule: app.schema.name(),
                        system: sysname,
                    });
                }
                match instantiate(app.schema, app.conclusion.clone(), app.params.clone()) {
                    Ok(re) => {
                        if re != *app {
                            out.push(Defect::RuleShape {
                                at,
                                reason: "instance differs from the canonical instance of its schema and parameters".into(),
                            });
                        }
                    }
                    Err(e) => out.push(Defect::RuleShape {
                        at,
                        reason: e.to_string(),
                    }),
                }
                check_children(p, at, &app.premises, children, &mut out);
            }
            Node::Mcut { mc, children } => {
                for d in mcut_wellformed(mc) {
                    out.push(Defect::McutIssue { at, defect: d });
                }
                check_children(p, at, &mc.premises, children, &mut out);
            }
            Node::Back { conclusion, target } => {
                match p.get(*target) {
                    None => out.push(Defect::MissingNode {
                        at,
                        missing: *target,
                    }),
                    Some(Node::Back { .. }) => out.push(Defect::BackEdgeMismatch {
                        at,
                        reason: format!("target {} is itself a back-edge", target),
                    }),
                    Some(t) => {
                        if rank_align(conclusion, t.conclusion()).is_none() {
                            out.push(Defect::BackEdgeMismatch {
                                at,
                                reason: format!(
                                    "conclusion `{}` does not match target conclusion `{}`",
                                    conclusion,
                                    t.conclusion()
                                ),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn check_children(
    p: &ProofGraph,
    at: NodeId,
    premises: &[Sequent],
    children: &[NodeId],
    out: &mut Vec<Defect>,
) {
    if premises.len() != children.len() {
        out.push(Defect::ArityError {
            at,
            expected: premises.len(),
            found: children.len(),
        });
        return;
    }
    for (k, (prem, child)) in premises.iter().zip(children).enumerate() {
        match p.get(*child) {
            None => out.push(Defect::MissingNode {
                at,
                missing: *child,
            }),
            Some(c) => {
                if rank_align(prem, c.conclusion()).is_none() {
                    out.push(Defect::EdgeMismatch {
                        at,
                        premise: k,
                        expected: prem.to_string(),
                        found: c.conclusion().to_string(),
                    });
                }
            }
        }
    }
}

// ---- unfolding ----

/// A finite prefix of the denoted proof tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrefixNode {
    Rule {
        app: RuleApp,
        children: Vec<PrefixNode>,
    },
    /// An unexpanded subproof rooted at `node` in the source graph.
    Suspension { node: NodeId, conclusion: Sequent },
}

impl PrefixNode {
    pub fn conclusion(&self) -> &Sequent {
        match self {
            PrefixNode::Rule { app, .. } => &app.conclusion,
            PrefixNode::Suspension { conclusion, .. } => conclusion,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            PrefixNode::Rule { children, .. } => {
                1 + children.iter().map(|c| c.size()).sum::<usize>()
            }
            PrefixNode::Suspension { .. } => 0,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            PrefixNode::Rule { children, .. } => {
                1 + children.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
            PrefixNode::Suspension { .. } => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreePrefix {
    pub root: PrefixNode,
}

/// The depth-`d` unfolding of the graph: back-edges are followed silently,
/// rule nodes are expanded while budget remains (closed rules always fully),
/// and multicuts always suspend.
pub fn unfold(p: &ProofGraph, depth: usize) -> TreePrefix {
    TreePrefix {
        root: unfold_at(p, p.root, depth),
    }
}

fn unfold_at(p: &ProofGraph, id: NodeId, budget: usize) -> PrefixNode {
    let rid = p.resolve(id);
    match p.node(rid) {
        Node::Mcut { mc, .. } => PrefixNode::Suspension {
            node: rid,
            conclusion: mc.conclusion.clone(),
        },
        Node::Rule { app, children } => {
            if children.is_empty() {
                return PrefixNode::Rule {
                    app: app.clone(),
                    children: Vec::new(),
                };
            }
            if budget == 0 {
                return PrefixNode::Suspension {
                    node: rid,
                    conclusion: app.conclusion.clone(),
                };
            }
            PrefixNode::Rule {
                app: app.clone(),
                children: children
                    .iter()
                    .map(|c| unfold_at(p, *c, budget - 1))
                    .collect(),
            }
        }
        Node::Back { .. } => unreachable!("resolve returns non-back nodes"),
    }
}

/// Whether `a` is a prefix of `b`: suspensions of `a` may stand for anything
/// with the same conclusion formulas.
pub fn is_prefix_of(a: &PrefixNode, b: &PrefixNode) -> bool {
    match (a, b) {
        (PrefixNode::Suspension { conclusion, .. }, _) => {
            conclusion.same_formulas(b.conclusion())
        }
        (
            PrefixNode::Rule { app: x, children: cx },
            PrefixNode::Rule { app: y, children: cy },
        ) => {
            x.schema == y.schema
                && x.conclusion.same_formulas(&y.conclusion)
                && cx.len() == cy.len()
                && cx.iter().zip(cy).all(|(u, v)| is_prefix_of(u, v))
        }
        _ => false,
    }
}

// ---- cycles ----

/// All elementary cycles of the graph (node lists, rotated so the smallest
/// id comes first), in lexicographic order.
pub fn enumerate_simple_cycles(p: &ProofGraph) -> Vec<Vec<NodeId>> {
    let nodes: Vec<NodeId> = p.reachable().into_iter().collect();
    let succ: BTreeMap<NodeId, Vec<NodeId>> = nodes
        .iter()
        .map(|&n| {
            (
                n,
                p.successors(n)
                    .into_iter()
                    .filter(|s| p.nodes.contains_key(s))
                    .collect(),
            )
        })
        .collect();
    let mut cycles = Vec::new();
    // For each start node s, enumerate simple cycles whose minimum is s by
    // depth-first search over nodes >= s.
    for &s in &nodes {
        let mut path = vec![s];
        let mut on_path: BTreeSet<NodeId> = BTreeSet::from([s]);
        dfs_cycles(&succ, s, s, &mut path, &mut on_path, &mut cycles);
    }
    cycles.sort();
    cycles
}

fn dfs_cycles(
    succ: &BTreeMap<NodeId, Vec<NodeId>>,
    start: NodeId,
    at: NodeId,
    path: &mut Vec<NodeId>,
    on_path: &mut BTreeSet<NodeId>,
    cycles: &mut Vec<Vec<NodeId>>,
) {
    for &next in &succ[&at] {
        if next == start {
            cycles.push(path.clone());
        } else if next > start && !on_path.contains(&next) {
            path.push(next);
            on_path.insert(next);
            dfs_cycles(succ, start, next, path, on_path, cycles);
            path.pop();
            on_path.remove(&next);
        }
    }
}

// ---- branch steps with position maps (threads) ----

/// One branch step out of a (resolved) node: premise index, resolved child,
/// and the map from the node's conclusion positions to the child's
/// conclusion positions along the ancestor relation.
pub struct Step {
    pub premise: usize,
    pub child: NodeId,
    pub map: BTreeMap<PosId, Vec<PosId>>,
}

/// Branch steps out of `id` (which must resolve to a rule or multicut).
/// Back-edges on both ends are composed away.
pub fn steps(p: &ProofGraph, id: NodeId) -> Vec<Step> {
    let rid = p.resolve(id);
    let node = p.node(rid);
    let (premises, wiring): (Vec<&Sequent>, Vec<BTreeMap<PosId, Vec<PosId>>>) = match node {
        Node::Rule { app, .. } => {
            let wiring = (0..app.premises.len())
                .map(|k| {
                    let mut m: BTreeMap<PosId, Vec<PosId>> = BTreeMap::new();
                    for (c, descs) in &app.ancestors {
                        let v: Vec<PosId> = descs
                            .iter()
                            .filter(|(i, _)| *i == k)
                            .map(|(_, q)| *q)
                            .collect();
                        if !v.is_empty() {
                            m.insert(*c, v);
                        }
                    }
                    m
                })
                .collect();
            (app.premises.iter().collect(), wiring)
        }
        Node::Mcut { mc, .. } => {
            let wiring = (0..mc.premises.len())
                .map(|k| {
                    let mut m: BTreeMap<PosId, Vec<PosId>> = BTreeMap::new();
                    for (c, (i, q)) in &mc.iota {
                        if *i == k {
                            m.insert(*c, vec![*q]);
                        }
                    }
                    m
                })
                .collect();
            (mc.premises.iter().collect(), wiring)
        }
        Node::Back { .. } => unreachable!("resolved"),
    };
    let children = node.children();
    let mut out = Vec::new();
    for (k, prem) in premises.iter().enumerate() {
        let (child, back_align) = p.resolve_align(children[k]);
        let edge = rank_align(prem, p.node(children[k]).conclusion())
            .expect("edge alignment (checked elsewhere)");
        let map = wiring[k]
            .iter()
            .map(|(c, qs)| {
                (
                    *c,
                    qs.iter().map(|q| back_align[&edge[q]]).collect::<Vec<_>>(),
                )
            })
            .collect();
        out.push(Step {
            premise: k,
            child,
            map,
        });
    }
    out
}

/// Conclusion positions that are principal at this node, with their side.
pub fn principal_positions(p: &ProofGraph, id: NodeId) -> Vec<(PosId, Side)> {
    match p.node(id) {
        Node::Rule { app, .. } => app
            .principal
            .iter()
            .map(|q| (*q, app.conclusion.find(*q).unwrap().0))
            .collect(),
        _ => Vec::new(),
    }
}

// ---- structural equality of denoted trees ----

/// Whether the two graphs denote the same proof tree: same rules with the
/// same conclusions (formula lists compared in order, parameters compared
/// through side/rank), recursively on children, coinductively across
/// back-edges.
pub fn proof_eq(a: &ProofGraph, b: &ProofGraph) -> bool {
    let mut assumed = BTreeSet::new();
    eq_nodes(a, a.root, b, b.root, &mut assumed)
}

fn eq_nodes(
    a: &ProofGraph,
    ida: NodeId,
    b: &ProofGraph,
    idb: NodeId,
    assumed: &mut BTreeSet<(NodeId, NodeId)>,
) -> bool {
    let ra = a.resolve(ida);
    let rb = b.resolve(idb);
    if !assumed.insert((ra, rb)) {
        return true;
    }
    match (a.node(ra), b.node(rb)) {
        (Node::Rule { app: x, children: cx }, Node::Rule { app: y, children: cy }) => {
            x.schema == y.schema
                && x.conclusion.same_formulas(&y.conclusion)
                && params_eq(&x.conclusion, &x.params, &y.conclusion, &y.params)
                && cx.len() == cy.len()
                && cx
                    .iter()
                    .zip(cy)
                    .all(|(u, v)| eq_nodes(a, *u, b, *v, assumed))
        }
        (Node::Mcut { mc: x, children: cx }, Node::Mcut { mc: y, children: cy }) => {
            mcut_shape_eq(x, y)
                && cx.len() == cy.len()
                && cx
                    .iter()
                    .zip(cy)
                    .all(|(u, v)| eq_nodes(a, *u, b, *v, assumed))
        }
        _ => false,
    }
}

fn rank_of(s: &Sequent, p: PosId) -> (Side, usize) {
    s.find(p).expect("position in its own sequent")
}

fn params_eq(sx: &Sequent, x: &RuleParams, sy: &Sequent, y: &RuleParams) -> bool {
    use RuleParams::*;
    match (x, y) {
        (None, None) => true,
        (Principal(p), Principal(q)) => rank_of(sx, *p) == rank_of(sy, *q),
        (Split { pos: p, left: l }, Split { pos: q, left: m }) => {
            rank_of(sx, *p) == rank_of(sy, *q) && rank_set(sx, l) == rank_set(sy, m)
        }
        (CutOn { formula: f, left: l }, CutOn { formula: g, left: m }) => {
            f == g && rank_set(sx, l) == rank_set(sy, m)
        }
        (Swap { side: s1, index: i1 }, Swap { side: s2, index: i2 }) => s1 == s2 && i1 == i2,
        (Perm { ante: a1, succ: s1 }, Perm { ante: a2, succ: s2 }) => a1 == a2 && s1 == s2,
        _ => false,
    }
}

fn rank_set(s: &Sequent, set: &BTreeSet<PosId>) -> BTreeSet<(Side, usize)> {
    set.iter().map(|p| rank_of(s, *p)).collect()
}

fn mcut_shape_eq(x: &Mcut, y: &Mcut) -> bool {
    if x.premises.len() != y.premises.len()
        || !x.conclusion.same_formulas(&y.conclusion)
        || x.premises
            .iter()
            .zip(&y.premises)
            .any(|(u, v)| !u.same_formulas(v))
    {
        return false;
    }
    let iota_ranks = |m: &Mcut| -> Vec<(usize, Side, usize)> {
        m.conclusion
            .ids()
            .map(|c| {
                let (i, p) = m.iota[&c];
                let (s, r) = rank_of(&m.premises[i], p);
                (i, s, r)
            })
            .collect()
    };
    let ppr_ranks = |m: &Mcut| -> BTreeSet<((usize, Side, usize), (usize, Side, usize))> {
        m.ppr
            .iter()
            .map(|(a, b)| {
                let (sa, ra) = rank_of(&m.premises[a.0], a.1);
                let (sb, rb) = rank_of(&m.premises[b.0], b.1);
                let u = (a.0, sa, ra);
                let v = (b.0, sb, rb);
                if u <= v {
                    (u, v)
                } else {
                    (v, u)
                }
            })
            .collect()
    };
    iota_ranks(x) == iota_ranks(y) && ppr_ranks(x) == ppr_ranks(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::RuleId;
    use crate::formula::*;

    /// |- F with F := mu X. T + X, unfolded once and looped: mu_r, or_r2, back.
    fn loop_graph(delta_mu: bool) -> ProofGraph {
        let f = if delta_mu {
            mu("X", or(Formula::ClTrue, var("X")))
        } else {
            nu("X", or(Formula::ClTrue, var("X")))
        };
        let mut g = ProofGraph::new(SystemId::MuLk, "loop");
        let s0 = Sequent::new(vec![], vec![f.clone()]);
        let p0 = s0.succ[0].id;
        let schema = if delta_mu { RuleId::MuR } else { RuleId::NuR };
        let app0 = instantiate(schema, s0, RuleParams::Principal(p0)).unwrap();
        let s1 = app0.premises[0].clone();
        let p1 = s1.succ[0].id;
        let app1 = instantiate(RuleId::OrR2, s1, RuleParams::Principal(p1)).unwrap();
        let s2 = app1.premises[0].clone();
        let n0 = NodeId(0);
        let n1 = NodeId(1);
        let n2 = NodeId(2);
        g.nodes.insert(
            n0,
            Node::Rule {
                app: app0,
                children: vec![n1],
            },
        );
        g.nodes.insert(
            n1,
            Node::Rule {
                app: app1,
                children: vec![n2],
            },
        );
        g.nodes.insert(
            n2,
            Node::Back {
                conclusion: s2,
                target: n0,
            },
        );
        g.root = n0;
        g
    }

    #[test]
    fn loop_graph_checks() {
        let g = loop_graph(true);
        assert!(check_proofgraph(&g).is_empty());
        assert_eq!(enumerate_simple_cycles(&g).len(), 1);
    }

    #[test]
    fn unfold_shapes() {
        let g = loop_graph(true);
        // Budget 2: two rules then a suspension pointing back at the root.
        let t = unfold(&g, 2);
        match &t.root {
            PrefixNode::Rule { app, children } => {
                assert_eq!(app.schema, RuleId::MuR);
                match &children[0] {
                    PrefixNode::Rule { app, children } => {
                        assert_eq!(app.schema, RuleId::OrR2);
                        assert!(matches!(
                            &children[0],
                            PrefixNode::Suspension { node, .. } if *node == NodeId(0)
                        ));
                    }
                    _ => panic!("expected a rule"),
                }
            }
            _ => panic!("expected a rule"),
        }
        // Endsequent invariance and prefix monotonicity.
        for d in 0..6 {
            let td = unfold(&g, d);
            assert!(td.root.conclusion().same_formulas(g.end_sequent()));
            let tn = unfold(&g, d + 1);
            assert!(is_prefix_of(&td.root, &tn.root));
        }
    }

    #[test]
    fn axiom_unfolds_to_itself() {
        let mut g = ProofGraph::new(SystemId::Lk, "ax");
        let s = Sequent::new(vec![atom("a")], vec![atom("a")]);
        let app = instantiate(RuleId::Ax, s, RuleParams::None).unwrap();
        let n = g.add(Node::Rule {
            app,
            children: vec![],
        });
        g.root = n;
        assert!(check_proofgraph(&g).is_empty());
        let t = unfold(&g, 5);
        assert!(matches!(&t.root, PrefixNode::Rule { app, .. } if app.schema == RuleId::Ax));
        assert_eq!(enumerate_simple_cycles(&g).len(), 0);
        // Closed rules expand even at budget 0.
        let t0 = unfold(&g, 0);
        assert!(matches!(&t0.root, PrefixNode::Rule { .. }));
    }

    #[test]
    fn defects_detected() {
        // Back-edge to a mismatched sequent.
        let mut g = loop_graph(true);
        let wrong = Sequent::new(vec![], vec![atom("zzz")]);
        g.nodes.insert(
            NodeId(2),
            Node::Back {
                conclusion: wrong,
                target: NodeId(0),
            },
        );
        let defects = check_proofgraph(&g);
        assert!(defects
            .iter()
            .any(|d| matches!(d, Defect::EdgeMismatch { .. })));
        assert!(defects
            .iter()
            .any(|d| matches!(d, Defect::BackEdgeMismatch { .. })));

        // A closed rule given a child.
        let mut g2 = ProofGraph::new(SystemId::MuLl, "bad");
        let s = Sequent::new(vec![], vec![Formula::Top, atom("a")]);
        let p = s.succ[0].id;
        let app = instantiate(RuleId::TopR, s, RuleParams::Principal(p)).unwrap();
        let n0 = g2.add(Node::Rule {
            app: app.clone(),
            children: vec![NodeId(0)],
        });
        g2.root = n0;
        let defects = check_proofgraph(&g2);
        assert!(defects
            .iter()
            .any(|d| matches!(d, Defect::ArityError { expected: 0, found: 1, .. })));

        // A rule outside its system.
        let mut g3 = ProofGraph::new(SystemId::MuLl, "bad-sys");
        let s = Sequent::new(vec![atom("a")], vec![atom("a"), atom("b")]);
        let p = s.succ[1].id;
        let app = instantiate(RuleId::WR, s, RuleParams::Principal(p)).unwrap();
        let child_s = app.premises[0].clone();
        let ax = instantiate(RuleId::Ax, child_s, RuleParams::None).unwrap();
        let n1 = g3.add(Node::Rule {
            app: ax,
            children: vec![],
        });
        let n0 = g3.add(Node::Rule {
            app,
            children: vec![n1],
        });
        g3.root = n0;
        assert!(check_proofgraph(&g3)
            .iter()
            .any(|d| matches!(d, Defect::RuleNotInSystem { .. })));
    }

    #[test]
    fn tree_equality_ignores_loop_placement() {
        // One-step loop vs the same proof unrolled once.
        let g1 = loop_graph(true);
        let mut g2 = loop_graph(true);
        // Unroll: n2 back-edge now goes to a copy of the two rules.
        let (app0, app1) = match (g2.node(NodeId(0)).clone(), g2.node(NodeId(1)).clone()) {
            (Node::Rule { app: a, .. }, Node::Rule { app: b, .. }) => (a, b),
            _ => unreachable!(),
        };
        let n3 = NodeId(3);
        let n4 = NodeId(4);
        let n5 = NodeId(5);
        g2.nodes.insert(
            NodeId(2),
            Node::Back {
                conclusion: app0.conclusion.clone(),
                target: n3,
            },
        );
        g2.nodes.insert(
            n3,
            Node::Rule {
                app: app0.clone(),
                children: vec![n4],
            },
        );
        g2.nodes.insert(
            n4,
            Node::Rule {
                app: app1.clone(),
                children: vec![n5],
            },
        );
        g2.nodes.insert(
            n5,
            Node::Back {
                conclusion: app0.conclusion.clone(),
                target: NodeId(0),
            },
        );
        assert!(check_proofgraph(&g2).is_empty());
        assert!(proof_eq(&g1, &g2));
        // Different fixed point: not equal.
        let g3 = loop_graph(false);
        assert!(!proof_eq(&g1, &g3));
    }
}
