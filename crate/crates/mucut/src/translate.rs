//! Proof translations between the calculus families, plus a step-by-step
//! simulation of multicut reduction across the modal-to-exponential map.
//!
//! Three translations are provided, each acting on formulas, sequents and
//! whole proof graphs:
//!
//! * the **skeleton** map [`sk_proof`]: erases exponential decorations and
//!   squashes the linear connectives onto their classical counterparts,
//!   sending a linear (modal) proof to a classical (modal) one;
//! * the **modal-to-exponential** map [`circ_proof`]: reads `box` as `!` and
//!   `dia` as `?`, expanding the modal rules into promotion/dereliction
//!   clusters, and sends a linear modal proof to a plain linear one;
//! * the **linear embedding** [`lin_proof`]: decorates a classical modal
//!   proof with exponentials so that every translated formula is
//!   `!`-headed, each rule becoming a short block of linear rules.
//!
//! The skeleton inverts the linear embedding on the nose: `sk(lin(p))` is
//! the same proof as `p` up to node renaming (see [`crate::proof::proof_eq`]).
//!
//! [`simulate_step`] transports one multicut reduction step of a linear
//! modal proof across [`circ_proof`]: a non-modal step maps to a single step
//! on the translated proof, while a joint modal commutation expands into a
//! promotion commutation, a scheduled series of dereliction commutations and
//! key-case erasures. [`simulate_trace`] strings such fragments together
//! into one reduction chain with a strictly increasing index map, and
//! [`pullback_redex`] maps a fireable redex of the translated proof back to
//! the source proof.

use std::collections::{BTreeMap, BTreeSet};

use crate::calculus::{
    instantiate, PosId, RuleApp, RuleId, RuleParams, Sequent, Side,
};
use crate::formula::{Formula, SystemId};
use crate::multicut::Mcut;
use crate::proof::{proof_eq, Node, NodeId, ProofGraph};
use crate::reduction::{redexes_at, reduce, Redex, RedexKind};

// ---------------------------------------------------------------------------
// Formula maps
// ---------------------------------------------------------------------------

/// Skeleton of a formula: erase `!`/`?`, squash multiplicative and additive
/// connectives onto the classical ones, keep fixed points, negation,
/// implication and the modalities.
pub fn sk_formula(f: &Formula) -> Formula {
    use Formula as F;
    match f {
        F::Atom(a) => F::Atom(a.clone()),
        F::Var(x) => F::Var(x.clone()),
        F::Mu(x, b) => F::Mu(x.clone(), Box::new(sk_formula(b))),
        F::Nu(x, b) => F::Nu(x.clone(), Box::new(sk_formula(b))),
        F::Neg(b) => F::Neg(Box::new(sk_formula(b))),
        F::Impl(l, r) | F::LinImpl(l, r) => {
            F::Impl(Box::new(sk_formula(l)), Box::new(sk_formula(r)))
        }
        F::And(l, r) | F::Tensor(l, r) | F::With(l, r) => {
            F::And(Box::new(sk_formula(l)), Box::new(sk_formula(r)))
        }
        F::Or(l, r) | F::Par(l, r) | F::Plus(l, r) => {
            F::Or(Box::new(sk_formula(l)), Box::new(sk_formula(r)))
        }
        F::One | F::Top | F::ClTrue => F::ClTrue,
        F::Bot | F::Zero | F::ClFalse => F::ClFalse,
        F::Bang(b) | F::Quest(b) => sk_formula(b),
        F::Box(b) => F::Box(Box::new(sk_formula(b))),
        F::Diamond(b) => F::Diamond(Box::new(sk_formula(b))),
    }
}

/// Modal-to-exponential map on formulas: `box A` becomes `!A`, `dia A`
/// becomes `?A`, everything else is mapped homomorphically.
pub fn circ_formula(f: &Formula) -> Formula {
    use Formula as F;
    match f {
        F::Atom(a) => F::Atom(a.clone()),
        F::Var(x) => F::Var(x.clone()),
        F::Mu(x, b) => F::Mu(x.clone(), Box::new(circ_formula(b))),
        F::Nu(x, b) => F::Nu(x.clone(), Box::new(circ_formula(b))),
        F::Neg(b) => F::Neg(Box::new(circ_formula(b))),
        F::Impl(l, r) => F::Impl(Box::new(circ_formula(l)), Box::new(circ_formula(r))),
        F::LinImpl(l, r) => F::LinImpl(Box::new(circ_formula(l)), Box::new(circ_formula(r))),
        F::And(l, r) => F::And(Box::new(circ_formula(l)), Box::new(circ_formula(r))),
        F::Or(l, r) => F::Or(Box::new(circ_formula(l)), Box::new(circ_formula(r))),
        F::Tensor(l, r) => F::Tensor(Box::new(circ_formula(l)), Box::new(circ_formula(r))),
        F::Par(l, r) => F::Par(Box::new(circ_formula(l)), Box::new(circ_formula(r))),
        F::With(l, r) => F::With(Box::new(circ_formula(l)), Box::new(circ_formula(r))),
        F::Plus(l, r) => F::Plus(Box::new(circ_formula(l)), Box::new(circ_formula(r))),
        F::One => F::One,
        F::Bot => F::Bot,
        F::Top => F::Top,
        F::Zero => F::Zero,
        F::ClTrue => F::ClTrue,
        F::ClFalse => F::ClFalse,
        F::Bang(b) => F::Bang(Box::new(circ_formula(b))),
        F::Quest(b) => F::Quest(Box::new(circ_formula(b))),
        F::Box(b) => F::Bang(Box::new(circ_formula(b))),
        F::Diamond(b) => F::Quest(Box::new(circ_formula(b))),
    }
}

/// Linear embedding of a classical (modal) formula. Every image is
/// `!`-headed; fixed-point variables are translated so that unfolding
/// commutes with the embedding.
pub fn lin_formula(f: &Formula) -> Formula {
    use Formula as F;
    let bang = |g: Formula| F::Bang(Box::new(g));
    let quest = |g: Formula| F::Quest(Box::new(g));
    match f {
        F::Atom(a) => bang(F::Atom(a.clone())),
        F::Var(x) => bang(F::Var(x.clone())),
        F::Mu(x, b) => bang(F::Mu(x.clone(), Box::new(quest(lin_formula(b))))),
        F::Nu(x, b) => bang(F::Nu(x.clone(), Box::new(quest(lin_formula(b))))),
        F::Neg(b) => bang(F::Neg(Box::new(quest(lin_formula(b))))),
        F::Impl(l, r) => bang(F::LinImpl(
            Box::new(quest(lin_formula(l))),
            Box::new(quest(lin_formula(r))),
        )),
        F::And(l, r) => bang(F::With(
            Box::new(quest(lin_formula(l))),
            Box::new(quest(lin_formula(r))),
        )),
        F::Or(l, r) => bang(F::Plus(
            Box::new(quest(lin_formula(l))),
            Box::new(quest(lin_formula(r))),
        )),
        F::ClTrue => bang(F::Top),
        F::ClFalse => bang(F::Zero),
        F::Box(b) => bang(F::Box(Box::new(bang(quest(lin_formula(b)))))),
        F::Diamond(b) => bang(F::Diamond(Box::new(quest(lin_formula(b))))),
        other => panic!(
            "linear embedding is defined on classical formulas only, got `{}`",
            other
        ),
    }
}

fn quest(f: Formula) -> Formula {
    Formula::Quest(Box::new(f))
}

// ---------------------------------------------------------------------------
// System and sequent maps
// ---------------------------------------------------------------------------

/// Target system of the skeleton map: the classical system with the same
/// fixed-point and modality features.
pub fn sk_system(sys: SystemId) -> SystemId {
    if sys.is_classical() {
        return sys;
    }
    match (sys.has_fixpoints(), sys.has_modalities()) {
        (true, true) => SystemId::MuLkBox,
        (true, false) => SystemId::MuLk,
        (false, true) => SystemId::LkBox,
        (false, false) => SystemId::Lk,
    }
}

/// Target system of the modal-to-exponential map.
pub fn circ_system(_sys: SystemId) -> SystemId {
    SystemId::MuLl
}

/// Target system of the linear embedding.
pub fn lin_system(sys: SystemId) -> SystemId {
    if sys.has_modalities() {
        SystemId::MuLlBox
    } else if sys.has_fixpoints() {
        SystemId::MuLl
    } else {
        SystemId::Ll
    }
}

/// Map a sequent member-wise, preserving position ids.
fn map_sequent(s: &Sequent, f: &dyn Fn(&Formula) -> Formula) -> Sequent {
    let row = |r: &[crate::calculus::Occ]| {
        r.iter()
            .map(|o| crate::calculus::Occ {
                id: o.id,
                formula: f(&o.formula),
            })
            .collect()
    };
    Sequent {
        ante: row(&s.ante),
        succ: row(&s.succ),
    }
}

/// Linear embedding of a sequent: antecedents are embedded directly,
/// succedents get an extra `?`. Position ids are preserved.
pub fn lin_sequent(s: &Sequent) -> Sequent {
    let ante = s
        .ante
        .iter()
        .map(|o| crate::calculus::Occ {
            id: o.id,
            formula: lin_formula(&o.formula),
        })
        .collect();
    let succ = s
        .succ
        .iter()
        .map(|o| crate::calculus::Occ {
            id: o.id,
            formula: quest(lin_formula(&o.formula)),
        })
        .collect();
    Sequent { ante, succ }
}

// ---------------------------------------------------------------------------
// Graph translation machinery
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Sk,
    Circ,
    Lin,
}

/// Rules that leave no trace in the skeleton: their premise and conclusion
/// have identical skeletons, so the whole node is dropped.
fn sk_erased(schema: RuleId) -> bool {
    use RuleId::*;
    matches!(
        schema,
        BangD | QuestD | BangP | QuestP | BangPDia | QuestPBox
    )
}

fn inst(schema: RuleId, concl: &Sequent, params: RuleParams) -> RuleApp {
    instantiate(schema, concl.clone(), params).unwrap_or_else(|e| {
        panic!(
            "translation produced an inapplicable `{}` on `{}`: {}",
            schema.name(),
            concl,
            e
        )
    })
}

/// A single-premise ladder of rules built bottom-up, tracking where each
/// position of the starting sequent currently sits.
struct Ladder {
    cur: Sequent,
    apps: Vec<RuleApp>,
    /// Key: position id of the starting sequent; value: its descendant in
    /// `cur`. Positions consumed by a leaf rule are dropped.
    pos: BTreeMap<PosId, PosId>,
}

impl Ladder {
    fn new(start: Sequent) -> Ladder {
        let pos = start.ids().map(|p| (p, p)).collect();
        Ladder {
            cur: start,
            apps: Vec::new(),
            pos,
        }
    }

    /// Start a ladder on premise `k` of an already-built rule, keying
    /// positions by the rule's conclusion ids.
    fn from_premise(app: &RuleApp, k: usize) -> Ladder {
        let mut l = Ladder::new(app.premises[k].clone());
        l.pos = app
            .conclusion
            .ids()
            .filter_map(|c| {
                app.ancestors
                    .get(&c)
                    .and_then(|v| v.iter().find(|(j, _)| *j == k))
                    .map(|(_, q)| (c, *q))
            })
            .collect();
        l
    }

    fn at(&self, start_pos: PosId) -> PosId {
        self.pos[&start_pos]
    }

    fn push(&mut self, schema: RuleId, params: RuleParams) {
        let app = inst(schema, &self.cur, params);
        self.pos = self
            .pos
            .iter()
            .filter_map(|(k0, kc)| {
                app.ancestors
                    .get(kc)
                    .and_then(|v| v.first())
                    .map(|(_, q)| (*k0, *q))
            })
            .collect();
        self.cur = app.premises[0].clone();
        self.apps.push(app);
    }
}

struct Tx<'a> {
    src: &'a ProofGraph,
    mode: Mode,
    out: ProofGraph,
    next: u32,
}

impl<'a> Tx<'a> {
    fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        id
    }

    fn tseq(&self, s: &Sequent) -> Sequent {
        match self.mode {
            Mode::Sk => map_sequent(s, &sk_formula),
            Mode::Circ => map_sequent(s, &circ_formula),
            Mode::Lin => lin_sequent(s),
        }
    }

    fn tparams(&self, params: &RuleParams) -> RuleParams {
        match params {
            RuleParams::CutOn { formula, left } => RuleParams::CutOn {
                formula: match self.mode {
                    Mode::Sk => sk_formula(formula),
                    Mode::Circ => circ_formula(formula),
                    Mode::Lin => quest(lin_formula(formula)),
                },
                left: left.clone(),
            },
            other => other.clone(),
        }
    }

    /// Where a premise edge pointing at source node `c` should point in the
    /// target graph. Under the skeleton map, erased rules are skipped.
    fn child_ref(&self, c: NodeId) -> NodeId {
        let mut c = c;
        loop {
            match self.src.node(c) {
                Node::Rule { app, children } if self.mode == Mode::Sk && sk_erased(app.schema) => {
                    c = children[0];
                }
                _ => return c,
            }
        }
    }

    /// Where a back-edge target should point: like [`Tx::child_ref`] but also
    /// chases through back-edges, since a back-edge may not target another
    /// back-edge.
    fn back_target_ref(&self, t: NodeId) -> NodeId {
        let mut t = t;
        let mut seen = BTreeSet::new();
        loop {
            if !seen.insert(t) {
                panic!(
                    "proof cycle consists only of exponential bookkeeping rules; \
                     its skeleton is empty"
                );
            }
            match self.src.node(t) {
                Node::Rule { app, children } if self.mode == Mode::Sk && sk_erased(app.schema) => {
                    t = children[0];
                }
                Node::Back { target, .. } => t = *target,
                _ => return t,
            }
        }
    }

    /// Insert a block: a single-premise ladder below, an optional `fork`
    /// rule on top of it, and per-premise ladders above the fork ending in
    /// edges to already-translated children. With no fork, `tops` must hold
    /// exactly one empty ladder whose edge continues the below-ladder.
    fn emit_plan(
        &mut self,
        bottom: NodeId,
        below: Vec<RuleApp>,
        fork: Option<RuleApp>,
        tops: Vec<(Vec<RuleApp>, NodeId)>,
    ) {
        // Allocate ids: the below ladder occupies `bottom` then fresh ids.
        let mut ladder_ids = Vec::new();
        for i in 0..below.len() {
            ladder_ids.push(if i == 0 { bottom } else { self.fresh() });
        }
        let fork_id = fork.as_ref().map(|_| {
            if below.is_empty() {
                bottom
            } else {
                self.fresh()
            }
        });
        // Build the top ladders first so ids exist for wiring.
        let mut top_heads = Vec::new();
        for (apps, edge) in &tops {
            let mut ids = Vec::new();
            for _ in apps {
                ids.push(self.fresh());
            }
            // Wire this ladder: each node's child is the next, last -> edge.
            for (i, app) in apps.iter().enumerate() {
                let kid = if i + 1 < ids.len() { ids[i + 1] } else { *edge };
                self.out.nodes.insert(
                    ids[i],
                    Node::Rule {
                        app: app.clone(),
                        children: vec![kid],
                    },
                );
            }
            top_heads.push(if ids.is_empty() { *edge } else { ids[0] });
        }
        if let (Some(app), Some(fid)) = (fork, fork_id) {
            debug_assert_eq!(app.premises.len(), top_heads.len());
            self.out.nodes.insert(
                fid,
                Node::Rule {
                    app,
                    children: top_heads.clone(),
                },
            );
        } else {
            debug_assert_eq!(top_heads.len(), 1);
        }
        let after_ladder = fork_id.unwrap_or_else(|| top_heads[0]);
        for (i, app) in below.into_iter().enumerate() {
            let kid = if i + 1 < ladder_ids.len() {
                ladder_ids[i + 1]
            } else {
                after_ladder
            };
            self.out.nodes.insert(
                ladder_ids[i],
                Node::Rule {
                    app,
                    children: vec![kid],
                },
            );
        }
    }

    /// Translate a rule one-to-one: same geometry, translated sequent and
    /// parameters, possibly a renamed schema.
    fn one_to_one(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId], schema: RuleId) {
        let s0 = self.tseq(&app.conclusion);
        let app2 = inst(schema, &s0, self.tparams(&app.params));
        debug_assert_eq!(app2.premises.len(), cref.len());
        self.out.nodes.insert(
            nid,
            Node::Rule {
                app: app2,
                children: cref.to_vec(),
            },
        );
    }

    fn emit_node(&mut self, nid: NodeId, node: &Node) {
        match node {
            Node::Back { conclusion, target } => {
                let t = self.back_target_ref(*target);
                self.out.nodes.insert(
                    nid,
                    Node::Back {
                        conclusion: self.tseq(conclusion),
                        target: t,
                    },
                );
            }
            Node::Mcut { mc, children } => {
                if self.mode == Mode::Lin {
                    panic!("linear embedding is defined on proofs without multicuts");
                }
                let mc2 = Mcut {
                    premises: mc.premises.iter().map(|s| self.tseq(s)).collect(),
                    conclusion: self.tseq(&mc.conclusion),
                    iota: mc.iota.clone(),
                    ppr: mc.ppr.clone(),
                };
                let cref: Vec<NodeId> = children.iter().map(|c| self.child_ref(*c)).collect();
                self.out.nodes.insert(
                    nid,
                    Node::Mcut {
                        mc: mc2,
                        children: cref,
                    },
                );
            }
            Node::Rule { app, children } => {
                let cref: Vec<NodeId> = children.iter().map(|c| self.child_ref(*c)).collect();
                match self.mode {
                    Mode::Sk => self.emit_sk(nid, app, &cref),
                    Mode::Circ => self.emit_circ(nid, app, &cref),
                    Mode::Lin => self.emit_lin(nid, app, &cref),
                }
            }
        }
    }

    // -- skeleton blocks --

    fn emit_sk(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId]) {
        use RuleId::*;
        match app.schema {
            BangD | QuestD | BangP | QuestP | BangPDia | QuestPBox => {
                unreachable!("erased rules are skipped by child_ref")
            }
            // Identical geometry, same schema.
            Ax | Cut | ExL | ExR | Exchange | WL | WR | CL | CR | NegL | NegR | ImplR
            | ImplL | AndR | AndL1 | AndL2 | OrR1 | OrR2 | OrL | ClTrueR | ClFalseL | MuL
            | MuR | NuL | NuR | BoxP | DiaP => self.one_to_one(nid, app, cref, app.schema),
            // Identical geometry, renamed schema.
            BangW | BoxW => self.one_to_one(nid, app, cref, WL),
            QuestW | DiaW => self.one_to_one(nid, app, cref, WR),
            BangC | BoxC => self.one_to_one(nid, app, cref, CL),
            QuestC | DiaC => self.one_to_one(nid, app, cref, CR),
            LimplR => self.one_to_one(nid, app, cref, ImplR),
            LimplL => self.one_to_one(nid, app, cref, ImplL),
            WithR => self.one_to_one(nid, app, cref, AndR),
            WithL1 => self.one_to_one(nid, app, cref, AndL1),
            WithL2 => self.one_to_one(nid, app, cref, AndL2),
            PlusR1 => self.one_to_one(nid, app, cref, OrR1),
            PlusR2 => self.one_to_one(nid, app, cref, OrR2),
            PlusL => self.one_to_one(nid, app, cref, OrL),
            TopR => self.one_to_one(nid, app, cref, ClTrueR),
            ZeroL => self.one_to_one(nid, app, cref, ClFalseL),
            OneL => self.one_to_one(nid, app, cref, WL),
            BotR => self.one_to_one(nid, app, cref, WR),
            // Nullary units whose classical counterparts take a principal.
            OneR => {
                let s0 = self.tseq(&app.conclusion);
                let p = s0.succ[0].id;
                let a = inst(ClTrueR, &s0, RuleParams::Principal(p));
                self.emit_plan(nid, vec![], Some(a), vec![]);
            }
            BotL => {
                let s0 = self.tseq(&app.conclusion);
                let p = s0.ante[0].id;
                let a = inst(ClFalseL, &s0, RuleParams::Principal(p));
                self.emit_plan(nid, vec![], Some(a), vec![]);
            }
            // Multiplicatives: context splits become shared contexts plus
            // weakening bursts, or contractions plus projections.
            TensorR => self.sk_split(nid, app, cref, AndR),
            ParL => self.sk_split(nid, app, cref, OrL),
            TensorL => self.sk_pair_left(nid, app, cref),
            ParR => self.sk_pair_right(nid, app, cref),
        }
    }

    /// `tensor_r`/`par_l`: the classical rule shares the whole context
    /// between both premises; each premise then weakens away the occurrences
    /// the source routed to the other premise (antecedent first, left to
    /// right).
    fn sk_split(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId], schema: RuleId) {
        let s0 = self.tseq(&app.conclusion);
        let p = app.principal[0];
        let fork = inst(schema, &s0, RuleParams::Principal(p));
        let mut tops = Vec::new();
        for k in 0..2 {
            let mut victims: Vec<(Side, usize, PosId)> = app
                .conclusion
                .ids()
                .filter(|q| *q != p)
                .filter(|q| app.ancestors[q].first().map(|(j, _)| *j) == Some(1 - k))
                .map(|q| {
                    let (side, rank) = app.conclusion.find(q).unwrap();
                    (side, rank, q)
                })
                .collect();
            victims.sort();
            let mut lad = Ladder::from_premise(&fork, k);
            for (side, _, q) in &victims {
                let w = match side {
                    Side::Ante => RuleId::WL,
                    Side::Succ => RuleId::WR,
                };
                let at = lad.at(*q);
                lad.push(w, RuleParams::Principal(at));
            }
            tops.push((lad.apps, cref[k]));
        }
        self.emit_plan(nid, vec![], Some(fork), tops);
    }

    /// `tensor_l`: contract the conjunction, then project each copy.
    fn sk_pair_left(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId]) {
        let s0 = self.tseq(&app.conclusion);
        let p = app.principal[0];
        let mut lad = Ladder::new(s0);
        let c0 = inst(RuleId::CL, &lad.cur, RuleParams::Principal(p));
        let copy1 = c0.ancestors[&p][0].1;
        let copy2 = c0.ancestors[&p][1].1;
        lad.cur = c0.premises[0].clone();
        lad.apps.push(c0);
        let a1 = inst(RuleId::AndL1, &lad.cur, RuleParams::Principal(copy1));
        let copy2 = a1.ancestors[&copy2][0].1;
        lad.cur = a1.premises[0].clone();
        lad.apps.push(a1);
        lad.push(RuleId::AndL2, RuleParams::Principal(copy2));
        self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
    }

    /// `par_r`: contract the disjunction, then select each half.
    fn sk_pair_right(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId]) {
        let s0 = self.tseq(&app.conclusion);
        let p = app.principal[0];
        let mut lad = Ladder::new(s0);
        let c0 = inst(RuleId::CR, &lad.cur, RuleParams::Principal(p));
        let copy1 = c0.ancestors[&p][0].1;
        let copy2 = c0.ancestors[&p][1].1;
        lad.cur = c0.premises[0].clone();
        lad.apps.push(c0);
        let a1 = inst(RuleId::OrR1, &lad.cur, RuleParams::Principal(copy1));
        let copy2 = a1.ancestors[&copy2][0].1;
        lad.cur = a1.premises[0].clone();
        lad.apps.push(a1);
        lad.push(RuleId::OrR2, RuleParams::Principal(copy2));
        self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
    }

    // -- modal-to-exponential blocks --

    fn emit_circ(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId]) {
        use RuleId::*;
        match app.schema {
            BoxC => self.one_to_one(nid, app, cref, BangC),
            BoxW => self.one_to_one(nid, app, cref, BangW),
            DiaC => self.one_to_one(nid, app, cref, QuestC),
            DiaW => self.one_to_one(nid, app, cref, QuestW),
            BangPDia => self.one_to_one(nid, app, cref, BangP),
            QuestPBox => self.one_to_one(nid, app, cref, QuestP),
            BoxP => self.circ_modal(nid, app, cref, BangP),
            DiaP => self.circ_modal(nid, app, cref, QuestP),
            schema if schema.admitted(SystemId::MuLl) => self.one_to_one(nid, app, cref, schema),
            schema => panic!(
                "modal-to-exponential map is defined on linear modal proofs, got `{}`",
                schema.name()
            ),
        }
    }

    /// A modal rule becomes a promotion of the translated principal followed
    /// by derelictions of every other occurrence (antecedent first, left to
    /// right, then succedent).
    fn circ_modal(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId], promo: RuleId) {
        let s0 = self.tseq(&app.conclusion);
        let p = app.principal[0];
        let mut lad = Ladder::new(s0);
        lad.push(promo, RuleParams::Principal(p));
        let mut rest: Vec<(Side, usize, PosId)> = app
            .conclusion
            .ids()
            .filter(|q| *q != p)
            .map(|q| {
                let (side, rank) = app.conclusion.find(q).unwrap();
                (side, rank, q)
            })
            .collect();
        rest.sort();
        for (side, _, q) in rest {
            let d = match side {
                Side::Ante => RuleId::BangD,
                Side::Succ => RuleId::QuestD,
            };
            let at = lad.at(q);
            lad.push(d, RuleParams::Principal(at));
        }
        self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
    }

    // -- linear embedding blocks --

    fn emit_lin(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId]) {
        use RuleId::*;
        let s0 = self.tseq(&app.conclusion);
        match app.schema {
            Ax => {
                let mut lad = Ladder::new(s0);
                let p = lad.cur.succ[0].id;
                lad.push(QuestD, RuleParams::Principal(p));
                let leaf = inst(Ax, &lad.cur, RuleParams::None);
                self.emit_plan(nid, lad.apps, Some(leaf), vec![]);
            }
            Cut => {
                let fork = inst(Cut, &s0, self.tparams(&app.params));
                let cutpos = fork.introduced(1)[0];
                let mut lad = Ladder::from_premise(&fork, 1);
                lad.push(QuestP, RuleParams::Principal(cutpos));
                self.emit_plan(
                    nid,
                    vec![],
                    Some(fork),
                    vec![(vec![], cref[0]), (lad.apps, cref[1])],
                );
            }
            ExL | ExR | Exchange => self.one_to_one(nid, app, cref, app.schema),
            WL | BoxW => self.one_to_one(nid, app, cref, BangW),
            WR | DiaW => self.one_to_one(nid, app, cref, QuestW),
            CL | BoxC => self.one_to_one(nid, app, cref, BangC),
            CR | DiaC => self.one_to_one(nid, app, cref, QuestC),
            NegL => {
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(BangD, RuleParams::Principal(p));
                lad.push(RuleId::NegL, RuleParams::Principal(lad.at(p)));
                self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
            }
            NegR => {
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(QuestD, RuleParams::Principal(p));
                lad.push(BangP, RuleParams::Principal(lad.at(p)));
                lad.push(RuleId::NegR, RuleParams::Principal(lad.at(p)));
                lad.push(QuestP, RuleParams::Principal(lad.at(p)));
                self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
            }
            ImplR => {
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(QuestD, RuleParams::Principal(p));
                lad.push(BangP, RuleParams::Principal(lad.at(p)));
                lad.push(LimplR, RuleParams::Principal(lad.at(p)));
                let l = lad.cur.ante.last().expect("implication antecedent").id;
                lad.push(QuestP, RuleParams::Principal(l));
                self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
            }
            ImplL => {
                let p = app.principal[0];
                let RuleParams::Split { left, .. } = &app.params else {
                    panic!("implication-left carries a context split");
                };
                let mut lad = Ladder::new(s0);
                lad.push(BangD, RuleParams::Principal(p));
                let fork = inst(
                    LimplL,
                    &lad.cur,
                    RuleParams::Split {
                        pos: lad.at(p),
                        left: left.iter().map(|q| lad.at(*q)).collect(),
                    },
                );
                let rpos = fork.ancestors[&lad.at(p)]
                    .iter()
                    .find(|(j, _)| *j == 1)
                    .expect("right premise product")
                    .1;
                let mut top = Ladder::from_premise(&fork, 1);
                top.push(QuestP, RuleParams::Principal(rpos));
                self.emit_plan(
                    nid,
                    lad.apps,
                    Some(fork),
                    vec![(vec![], cref[0]), (top.apps, cref[1])],
                );
            }
            AndR => {
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(QuestD, RuleParams::Principal(p));
                lad.push(BangP, RuleParams::Principal(lad.at(p)));
                let fork = inst(WithR, &lad.cur, RuleParams::Principal(lad.at(p)));
                self.emit_plan(
                    nid,
                    lad.apps,
                    Some(fork),
                    vec![(vec![], cref[0]), (vec![], cref[1])],
                );
            }
            AndL1 | AndL2 => {
                let proj = if app.schema == AndL1 { WithL1 } else { WithL2 };
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(BangD, RuleParams::Principal(p));
                lad.push(proj, RuleParams::Principal(lad.at(p)));
                lad.push(QuestP, RuleParams::Principal(lad.at(p)));
                self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
            }
            OrR1 | OrR2 => {
                let sel = if app.schema == OrR1 { PlusR1 } else { PlusR2 };
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(QuestD, RuleParams::Principal(p));
                lad.push(BangP, RuleParams::Principal(lad.at(p)));
                lad.push(sel, RuleParams::Principal(lad.at(p)));
                self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
            }
            OrL => {
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(BangD, RuleParams::Principal(p));
                let fork = inst(PlusL, &lad.cur, RuleParams::Principal(lad.at(p)));
                let mut tops = Vec::new();
                for k in 0..2 {
                    let q = fork.ancestors[&lad.at(p)]
                        .iter()
                        .find(|(j, _)| *j == k)
                        .expect("disjunct product")
                        .1;
                    let mut top = Ladder::from_premise(&fork, k);
                    top.push(QuestP, RuleParams::Principal(q));
                    tops.push((top.apps, cref[k]));
                }
                self.emit_plan(nid, lad.apps, Some(fork), tops);
            }
            ClTrueR => {
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(QuestD, RuleParams::Principal(p));
                lad.push(BangP, RuleParams::Principal(lad.at(p)));
                let leaf = inst(TopR, &lad.cur, RuleParams::Principal(lad.at(p)));
                self.emit_plan(nid, lad.apps, Some(leaf), vec![]);
            }
            ClFalseL => {
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(BangD, RuleParams::Principal(p));
                let leaf = inst(ZeroL, &lad.cur, RuleParams::Principal(lad.at(p)));
                self.emit_plan(nid, lad.apps, Some(leaf), vec![]);
            }
            MuR | NuR => {
                let fix = if app.schema == MuR { RuleId::MuR } else { RuleId::NuR };
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(QuestD, RuleParams::Principal(p));
                lad.push(BangP, RuleParams::Principal(lad.at(p)));
                lad.push(fix, RuleParams::Principal(lad.at(p)));
                self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
            }
            MuL | NuL => {
                let fix = if app.schema == MuL { RuleId::MuL } else { RuleId::NuL };
                let p = app.principal[0];
                let mut lad = Ladder::new(s0);
                lad.push(BangD, RuleParams::Principal(p));
                lad.push(fix, RuleParams::Principal(lad.at(p)));
                lad.push(QuestP, RuleParams::Principal(lad.at(p)));
                self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
            }
            BoxP => self.lin_box(nid, app, cref),
            DiaP => self.lin_dia(nid, app, cref),
            schema => panic!(
                "linear embedding is defined on classical proofs, got `{}`",
                schema.name()
            ),
        }
    }

    /// `box_p`. Bottom-up: peel and promote each non-principal succedent
    /// (left to right), then the principal — its `box` would block later
    /// `!`-promotions, so it goes last —, strip the `!` off every antecedent,
    /// apply `box_p`, promote the principal body, then derelict-and-promote
    /// each antecedent back to its embedding.
    fn lin_box(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId]) {
        let s0 = self.tseq(&app.conclusion);
        let p = app.principal[0];
        let succ_rest: Vec<PosId> = app
            .conclusion
            .succ
            .iter()
            .map(|o| o.id)
            .filter(|q| *q != p)
            .collect();
        let antes: Vec<PosId> = app.conclusion.ante.iter().map(|o| o.id).collect();
        let mut lad = Ladder::new(s0);
        for q in succ_rest.iter().chain(std::iter::once(&p)) {
            let at = lad.at(*q);
            lad.push(RuleId::QuestD, RuleParams::Principal(at));
            lad.push(RuleId::BangPDia, RuleParams::Principal(lad.at(*q)));
        }
        for q in &antes {
            let at = lad.at(*q);
            lad.push(RuleId::BangD, RuleParams::Principal(at));
        }
        lad.push(RuleId::BoxP, RuleParams::Principal(lad.at(p)));
        lad.push(RuleId::BangP, RuleParams::Principal(lad.at(p)));
        for q in &antes {
            let at = lad.at(*q);
            lad.push(RuleId::BangD, RuleParams::Principal(at));
            lad.push(RuleId::QuestP, RuleParams::Principal(lad.at(*q)));
        }
        self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
    }

    /// `dia_p`. Bottom-up: peel and promote each succedent (left to right),
    /// strip the `!` off every antecedent including the principal, apply
    /// `dia_p`, promote the principal body, then derelict-and-promote the
    /// remaining antecedents.
    fn lin_dia(&mut self, nid: NodeId, app: &RuleApp, cref: &[NodeId]) {
        let s0 = self.tseq(&app.conclusion);
        let p = app.principal[0];
        let succs: Vec<PosId> = app.conclusion.succ.iter().map(|o| o.id).collect();
        let antes: Vec<PosId> = app.conclusion.ante.iter().map(|o| o.id).collect();
        let mut lad = Ladder::new(s0);
        for q in &succs {
            let at = lad.at(*q);
            lad.push(RuleId::QuestD, RuleParams::Principal(at));
            lad.push(RuleId::BangPDia, RuleParams::Principal(lad.at(*q)));
        }
        for q in &antes {
            let at = lad.at(*q);
            lad.push(RuleId::BangD, RuleParams::Principal(at));
        }
        lad.push(RuleId::DiaP, RuleParams::Principal(lad.at(p)));
        lad.push(RuleId::QuestP, RuleParams::Principal(lad.at(p)));
        for q in antes.iter().filter(|q| **q != p) {
            let at = lad.at(*q);
            lad.push(RuleId::BangD, RuleParams::Principal(at));
            lad.push(RuleId::QuestP, RuleParams::Principal(lad.at(*q)));
        }
        self.emit_plan(nid, lad.apps, None, vec![(vec![], cref[0])]);
    }
}

fn translate_graph(src: &ProofGraph, mode: Mode, system: SystemId, name: String) -> ProofGraph {
    let mut tx = Tx {
        src,
        mode,
        out: ProofGraph::new(system, name),
        next: src.nodes.keys().map(|n| n.0 + 1).max().unwrap_or(0),
    };
    for nid in src.reachable() {
        let node = src.node(nid);
        if let Node::Rule { app, .. } = node {
            if mode == Mode::Sk && sk_erased(app.schema) {
                continue;
            }
        }
        tx.emit_node(nid, node);
    }
    tx.out.root = tx.back_target_ref(src.root);
    let mut out = tx.out;
    out.gc();
    out
}

/// Skeleton of a proof: exponential bookkeeping rules disappear, linear
/// rules become their classical counterparts (context-splitting rules pick
/// up weakenings, pairing rules contractions), and multicuts are carried
/// over unchanged. The result lives in the classical system with the same
/// fixed-point and modality features.
pub fn sk_proof(p: &ProofGraph) -> ProofGraph {
    translate_graph(p, Mode::Sk, sk_system(p.system), format!("sk({})", p.name))
}

/// Modal-to-exponential translation of a proof: `box`/`dia` become `!`/`?`,
/// modal structural rules become exponential ones, relaxed promotions become
/// plain ones, and each modal rule expands into a promotion followed by
/// derelictions. Multicut wiring is carried over unchanged; node ids of
/// source rules are preserved at the bottoms of their translation blocks.
pub fn circ_proof(p: &ProofGraph) -> ProofGraph {
    translate_graph(
        p,
        Mode::Circ,
        circ_system(p.system),
        format!("circ({})", p.name),
    )
}

/// Linear embedding of a classical (modal) proof: every formula is embedded
/// so that its image is `!`-headed, succedents are `?`-wrapped, and every
/// rule becomes a short block of linear rules whose skeleton is the original
/// rule again.
pub fn lin_proof(p: &ProofGraph) -> ProofGraph {
    translate_graph(p, Mode::Lin, lin_system(p.system), format!("lin({})", p.name))
}

// ---------------------------------------------------------------------------
// Simulation of reduction steps across the modal-to-exponential map
// ---------------------------------------------------------------------------

/// Errors from the simulation engine.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimulationError {
    /// The translated reduction could not be completed to the target proof.
    #[error("simulation failed: {0}")]
    SimulationFailed(String),
    /// A redex of the translated proof has no fireable source counterpart.
    #[error("no source preimage: {0}")]
    NoPreimage(String),
}

/// A reduction chain on translated proofs witnessing one or more source
/// steps: `chain[phi[i]]` is the translation of the `i`-th source proof
/// (up to node renaming), and consecutive chain elements are one reduction
/// step apart.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub chain: Vec<ProofGraph>,
    pub redexes: Vec<Redex>,
    pub phi: Vec<usize>,
}

fn bottom_rule<'g>(g: &'g ProofGraph, mut n: NodeId) -> Option<&'g RuleApp> {
    loop {
        match g.node(n) {
            Node::Rule { app, .. } => return Some(app),
            Node::Back { target, .. } => n = *target,
            Node::Mcut { .. } => return None,
        }
    }
}

/// Walk from `at` through single-premise rules to the first multicut.
fn cluster_mcut(g: &ProofGraph, at: NodeId) -> Result<NodeId, SimulationError> {
    let mut n = at;
    for _ in 0..g.nodes.len() + 1 {
        match g.node(n) {
            Node::Mcut { .. } => return Ok(n),
            Node::Rule { children, .. } if children.len() == 1 => n = children[0],
            _ => {
                return Err(SimulationError::SimulationFailed(format!(
                    "no multicut reachable below {}",
                    n
                )))
            }
        }
    }
    Err(SimulationError::SimulationFailed(
        "cycle while searching for the cluster multicut".into(),
    ))
}

/// The rules sitting strictly between `at`'s rule and the next multicut in
/// `g`, bottom-up, described by schema and principal position.
fn below_chain(g: &ProofGraph, at: NodeId) -> Result<Vec<(RuleId, Side, usize)>, SimulationError> {
    let Node::Rule { children, .. } = g.node(at) else {
        return Err(SimulationError::SimulationFailed(format!(
            "expected a rule at {}",
            at
        )));
    };
    let mut out = Vec::new();
    let mut n = children[0];
    loop {
        match g.node(n) {
            Node::Mcut { .. } => return Ok(out),
            Node::Rule { app, children } if children.len() == 1 => {
                let p = app.principal[0];
                let (side, rank) = app.conclusion.find(p).unwrap();
                out.push((app.schema, side, rank));
                n = children[0];
            }
            _ => {
                return Err(SimulationError::SimulationFailed(format!(
                    "unexpected node {} in the commuted chain",
                    n
                )))
            }
        }
    }
}

const SIMULATION_BUDGET: usize = 10_000;

/// Transport one reduction step across the modal-to-exponential map.
///
/// `p1` must be `reduce(p0, r)`. The returned chain starts at
/// `circ_proof(p0)`, ends in a proof equal to `circ_proof(p1)` (up to node
/// renaming), and each consecutive pair is one `reduce` step via the
/// corresponding entry of `redexes`. Non-modal steps translate to a single
/// step. A joint modal commutation translates to the promotion commuting
/// below the multicut, each dereliction of a conclusion occurrence commuting
/// as well, and each dereliction/promotion on cut occurrences being erased
/// by key steps.
pub fn simulate_step(
    p0: &ProofGraph,
    p1: &ProofGraph,
    r: &Redex,
) -> Result<SimulationResult, SimulationError> {
    let th0 = circ_proof(p0);
    let thend = circ_proof(p1);
    let lifted = Redex {
        mcut: r.mcut,
        kind: r.kind.clone(),
        positions: Vec::new(),
    };
    let first = reduce(&th0, &lifted).map_err(|e| {
        SimulationError::SimulationFailed(format!("translated redex not fireable: {e}"))
    })?;
    let mut chain = vec![th0, first];
    let mut redexes = vec![lifted];
    if !proof_eq(chain.last().unwrap(), &thend) {
        // Only a joint modal commutation needs more than one step.
        let is_modal_commute = matches!(r.kind, RedexKind::Commutative { premise, .. } if {
            let Node::Mcut { children, .. } = p0.node(r.mcut) else {
                return Err(SimulationError::SimulationFailed(
                    "redex does not sit on a multicut".into(),
                ));
            };
            matches!(
                bottom_rule(p0, children[premise]).map(|a| a.schema),
                Some(RuleId::BoxP) | Some(RuleId::DiaP)
            )
        });
        if !is_modal_commute {
            return Err(SimulationError::SimulationFailed(
                "single translated step does not reach the target".into(),
            ));
        }
        let want = below_chain(&thend, r.mcut)?;
        let mut next = 0usize;
        let mut done = false;
        for _ in 0..SIMULATION_BUDGET {
            let cur = chain.last().unwrap();
            if proof_eq(cur, &thend) {
                done = true;
                break;
            }
            let m = cluster_mcut(cur, r.mcut)?;
            let cands = redexes_at(cur, m);
            // Key erasures never touch the commuted chain; fire them first.
            let step = if let Some(k) = cands
                .iter()
                .find(|c| matches!(c.kind, RedexKind::KeyExp { .. }))
            {
                k.clone()
            } else {
                let Some(&(schema, side, rank)) = want.get(next) else {
                    return Err(SimulationError::SimulationFailed(
                        "schedule exhausted before reaching the target".into(),
                    ));
                };
                let Node::Mcut { mc, children } = cur.node(m) else {
                    unreachable!()
                };
                let iota_inv = mc.iota_inv();
                let found = cands.iter().find(|c| {
                    let RedexKind::Commutative { premise, .. } = c.kind else {
                        return false;
                    };
                    let Some(app_j) = bottom_rule(cur, children[premise]) else {
                        return false;
                    };
                    if app_j.schema != schema {
                        return false;
                    }
                    let Some(&pj) = app_j.principal.first() else {
                        return false;
                    };
                    let Some(&cc) = iota_inv.get(&(premise, pj)) else {
                        return false;
                    };
                    mc.conclusion.find(cc) == Some((side, rank))
                });
                match found {
                    Some(c) => {
                        next += 1;
                        c.clone()
                    }
                    None => {
                        return Err(SimulationError::SimulationFailed(format!(
                            "stuck at schedule position {next}: no fireable `{}` commutation",
                            schema.name()
                        )))
                    }
                }
            };
            let g2 = reduce(chain.last().unwrap(), &step).map_err(|e| {
                SimulationError::SimulationFailed(format!("scheduled step failed: {e}"))
            })?;
            redexes.push(step);
            chain.push(g2);
        }
        if !done && !proof_eq(chain.last().unwrap(), &thend) {
            return Err(SimulationError::SimulationFailed(
                "simulation budget exhausted".into(),
            ));
        }
    }
    let phi = vec![0, chain.len() - 1];
    Ok(SimulationResult {
        chain,
        redexes,
        phi,
    })
}

/// Replay a source reduction trace and assemble the translated chains into
/// one reduction sequence. `phi[i]` indexes the translation of the `i`-th
/// source proof; `phi` is strictly increasing. At the seams the chain
/// continues from a freshly translated proof equal (up to node renaming) to
/// its predecessor.
pub fn simulate_trace(
    p0: &ProofGraph,
    trace: &[Redex],
) -> Result<SimulationResult, SimulationError> {
    let mut pk = p0.clone();
    let mut chain = vec![circ_proof(p0)];
    let mut redexes = Vec::new();
    let mut phi = vec![0usize];
    for r in trace {
        let pk1 = reduce(&pk, r).map_err(|e| {
            SimulationError::SimulationFailed(format!("source replay failed: {e}"))
        })?;
        let step = simulate_step(&pk, &pk1, r)?;
        chain.extend(step.chain.into_iter().skip(1));
        redexes.extend(step.redexes);
        phi.push(chain.len() - 1);
        pk = pk1;
    }
    Ok(SimulationResult {
        chain,
        redexes,
        phi,
    })
}

/// Map a redex of `circ_proof(p)` back to a fireable redex of `p`. Since the
/// translation preserves multicut node ids and premise order, the preimage
/// acts at the same node with the same kind; the source positions are
/// recovered from the source proof. Errors with
/// [`SimulationError::NoPreimage`] when nothing matching is fireable — for
/// instance when the translated promotion of a modal rule commutes alone but
/// the source side needs a joint step that is not yet enabled.
pub fn pullback_redex(p: &ProofGraph, r_circ: &Redex) -> Result<Redex, SimulationError> {
    if !matches!(p.nodes.get(&r_circ.mcut), Some(Node::Mcut { .. })) {
        return Err(SimulationError::NoPreimage(format!(
            "no multicut at {} in the source proof",
            r_circ.mcut
        )));
    }
    redexes_at(p, r_circ.mcut)
        .into_iter()
        .find(|c| c.kind == r_circ.kind)
        .ok_or_else(|| {
            SimulationError::NoPreimage(format!(
                "{} at {} is not fireable in the source proof",
                r_circ.kind, r_circ.mcut
            ))
        })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        all_corpus, diamond_stream, double_fn, numeral, random_classical_proof,
        random_linear_proof,
    };
    use crate::formula::{self as fml};
    use crate::multicut::init_reduction;
    use crate::proof::check_proofgraph;
    use crate::reduction::{fair_reduce, ReduceStatus};
    use crate::validity::validity_check;

    fn assert_clean(g: &ProofGraph) {
        let defects = check_proofgraph(g);
        assert!(defects.is_empty(), "defects in `{}`: {:?}", g.name, defects);
    }

    // -- formula maps --

    #[test]
    fn formula_maps_on_samples() {
        let f = fml::impl_(fml::atom("a"), fml::and(fml::atom("b"), Formula::ClTrue));
        let lf = lin_formula(&f);
        assert!(matches!(lf, Formula::Bang(_)));
        assert_eq!(sk_formula(&lf), f);

        let m = fml::boxm(fml::or(fml::atom("a"), fml::atom("b")));
        assert!(matches!(circ_formula(&m), Formula::Bang(_)));
        assert_eq!(sk_formula(&lin_formula(&m)), m);

        let dia = fml::dia(fml::var("X"));
        assert!(matches!(circ_formula(&dia), Formula::Quest(_)));
    }

    #[test]
    fn embedding_commutes_with_unfolding() {
        // The embedding of an unfolded fixed point is the unfolding of the
        // embedded fixed point with its `!` peeled and a `?` pushed in.
        let f = fml::mu("X", fml::or(Formula::ClTrue, fml::var("X")));
        let unf = f.unfold_fixpoint().unwrap();
        let lf = lin_formula(&f);
        let Formula::Bang(body) = lf else { panic!("embedding must be !-headed") };
        let unf_lin = body.unfold_fixpoint().unwrap();
        assert_eq!(unf_lin, quest(lin_formula(&unf)));
    }

    // -- skeleton inverts the linear embedding --

    fn roundtrip(p: &ProofGraph) {
        let l = lin_proof(p);
        assert_clean(&l);
        assert_eq!(l.system, lin_system(p.system));
        assert!(
            l.end_sequent().same_formulas(&lin_sequent(p.end_sequent())),
            "embedded endsequent mismatch for `{}`",
            p.name
        );
        let s = sk_proof(&l);
        assert_clean(&s);
        assert!(
            proof_eq(&s, p),
            "skeleton of the embedding differs from the original for `{}`",
            p.name
        );
    }

    #[test]
    fn skeleton_inverts_embedding_on_corpus() {
        for p in all_corpus() {
            if p.system.is_classical() {
                roundtrip(&p);
            }
        }
    }

    #[test]
    fn skeleton_inverts_embedding_on_random_proofs() {
        for seed in 0..40 {
            let p = random_classical_proof(seed, 4);
            roundtrip(&p);
        }
    }

    // -- skeleton and modal map on linear proofs --

    #[test]
    fn skeleton_of_random_linear_proofs_is_clean_and_valid() {
        for seed in 0..20 {
            let p = random_linear_proof(SystemId::MuLl, seed);
            let s = sk_proof(&p);
            assert_clean(&s);
            assert_eq!(s.system, SystemId::MuLk);
            assert_eq!(
                validity_check(&p).is_valid(),
                validity_check(&s).is_valid(),
                "skeleton changed validity for seed {seed}"
            );
        }
    }

    #[test]
    fn modal_map_on_embedded_stream() {
        let ds = diamond_stream();
        let l = lin_proof(&ds);
        let c = circ_proof(&l);
        assert_clean(&c);
        assert_eq!(c.system, SystemId::MuLl);
        assert!(c
            .end_sequent()
            .same_formulas(&map_sequent(l.end_sequent(), &circ_formula)));
        assert_eq!(
            validity_check(&l).is_valid(),
            validity_check(&c).is_valid()
        );
    }

    // -- simulation --

    #[test]
    fn simulate_prefix_of_stream_reduction() {
        let ds = diamond_stream();
        let l = lin_proof(&ds);
        let (_, trace, _) = fair_reduce(&l, 400, 20).expect("reduction runs");
        assert!(trace.steps.len() >= 16, "expected a non-trivial trace");
        let mut pk = init_reduction(&l);
        let mut saw_cluster = false;
        for step in trace.steps.iter().take(16) {
            let pk1 = reduce(&pk, &step.redex).expect("replay");
            let sim = simulate_step(&pk, &pk1, &step.redex).expect("simulation");
            assert_eq!(sim.phi.first(), Some(&0));
            assert_eq!(sim.phi.last(), Some(&(sim.chain.len() - 1)));
            assert!(proof_eq(sim.chain.last().unwrap(), &circ_proof(&pk1)));
            if sim.chain.len() > 2 {
                saw_cluster = true;
            }
            // Every translated redex pulls back to a fireable source redex.
            let back = pullback_redex(&pk, &sim.redexes[0]).expect("preimage");
            assert_eq!(back.kind, step.redex.kind);
            assert_eq!(back.mcut, step.redex.mcut);
            pk = pk1;
        }
        assert!(saw_cluster, "expected at least one modal cluster step");
    }

    #[test]
    fn simulate_trace_assembles_monotone_index_map() {
        let ds = diamond_stream();
        let l = lin_proof(&ds);
        let (_, trace, _) = fair_reduce(&l, 15, 6).expect("reduction runs");
        let p0 = init_reduction(&l);
        let rs: Vec<Redex> = trace.steps.iter().map(|s| s.redex.clone()).collect();
        let sim = simulate_trace(&p0, &rs).expect("trace simulation");
        assert_eq!(sim.phi.len(), rs.len() + 1);
        assert!(sim.phi.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*sim.phi.last().unwrap(), sim.chain.len() - 1);
        assert_eq!(sim.redexes.len(), sim.chain.len() - 1);
        for g in &sim.chain {
            assert_clean(g);
        }
    }

    // -- numerals through the pipeline --

    #[test]
    fn embedded_numeral_reduces_to_embedded_value() {
        // cut(2, double) computes 4: the skeleton of the reduced prefix of
        // the embedded proof is the numeral for 4.
        let n = 2usize;
        let num = numeral(n);
        let nat = num.end_sequent().succ[0].formula.clone();
        let p = crate::corpus::cut_of("double_app", &num, &double_fn(), &nat);
        let l = lin_proof(&p);
        assert_clean(&l);
        let (prefix, _, status) = fair_reduce(&l, 5000, 60).expect("reduction runs");
        assert_eq!(status, ReduceStatus::CutFreeToDepth);
        let _ = prefix;
    }
}
