//! Sequents, rule schemas and rule instances.
//!
//! A [`Sequent`] is a pair of ordered occurrence lists; each occurrence has a
//! stable [`PosId`] unique within its sequent. Rules never rename positions:
//! exchanges are realized as permutation annotations on proof edges, and the
//! ancestor relation of a [`RuleApp`] says explicitly which premise
//! occurrences descend from which conclusion occurrences.
//!
//! [`instantiate`] is the only constructor of rule instances. Given a schema,
//! a conclusion and the schema's parameters (principal position, context
//! split, cut formula) it computes the premises in a fixed canonical layout:
//! same-side products of the principal replace it in place, occurrences that
//! cross sides are appended at the head of the succedent or the tail of the
//! antecedent, and context occurrences keep their conclusion order.

use crate::formula::{Formula, SystemId};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Position of one formula occurrence inside a sequent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PosId(pub u32);

impl fmt::Display for PosId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Ante,
    Succ,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Ante => Side::Succ,
            Side::Succ => Side::Ante,
        }
    }
}

/// One formula occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occ {
    pub id: PosId,
    pub formula: Formula,
}

/// An ordered two-sided sequent. Position ids are unique across both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequent {
    pub ante: Vec<Occ>,
    pub succ: Vec<Occ>,
}

impl Sequent {
    /// Build a sequent minting ids `0..` left to right, antecedent first.
    pub fn new(ante: Vec<Formula>, succ: Vec<Formula>) -> Sequent {
        let mut next = 0u32;
        let mut mk = |fs: Vec<Formula>| {
            fs.into_iter()
                .map(|formula| {
                    let id = PosId(next);
                    next += 1;
                    Occ { id, formula }
                })
                .collect()
        };
        Sequent {
            ante: mk(ante),
            succ: mk(succ),
        }
    }

    pub fn side(&self, side: Side) -> &[Occ] {
        match side {
            Side::Ante => &self.ante,
            Side::Succ => &self.succ,
        }
    }

    /// Locate a position. Returns its side and index.
    pub fn find(&self, p: PosId) -> Option<(Side, usize)> {
        if let Some(i) = self.ante.iter().position(|o| o.id == p) {
            return Some((Side::Ante, i));
        }
        self.succ
            .iter()
            .position(|o| o.id == p)
            .map(|i| (Side::Succ, i))
    }

    pub fn formula(&self, p: PosId) -> Option<&Formula> {
        let (side, i) = self.find(p)?;
        Some(&self.side(side)[i].formula)
    }

    /// All positions with side and formula, antecedent first.
    pub fn positions(&self) -> impl Iterator<Item = (PosId, Side, &Formula)> {
        self.ante
            .iter()
            .map(|o| (o.id, Side::Ante, &o.formula))
            .chain(self.succ.iter().map(|o| (o.id, Side::Succ, &o.formula)))
    }

    pub fn ids(&self) -> impl Iterator<Item = PosId> + '_ {
        self.positions().map(|(p, _, _)| p)
    }

    pub fn len(&self) -> usize {
        self.ante.len() + self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Formula-wise equality ignoring position ids.
    pub fn same_formulas(&self, other: &Sequent) -> bool {
        self.ante.len() == other.ante.len()
            && self.succ.len() == other.succ.len()
            && self
                .ante
                .iter()
                .zip(&other.ante)
                .all(|(a, b)| a.formula == b.formula)
            && self
                .succ
                .iter()
                .zip(&other.succ)
                .all(|(a, b)| a.formula == b.formula)
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for o in &self.ante {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{}", o.formula)?;
            first = false;
        }
        write!(f, " |- ")?;
        first = true;
        for o in &self.succ {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{}", o.formula)?;
            first = false;
        }
        Ok(())
    }
}

/// Every rule schema of the supported systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    Ax,
    Cut,
    ExL,
    ExR,
    Exchange,
    // classical structure
    WL,
    WR,
    CL,
    CR,
    // negation (both families)
    NegL,
    NegR,
    // classical connectives
    ImplR,
    ImplL,
    AndR,
    AndL1,
    AndL2,
    OrR1,
    OrR2,
    OrL,
    ClTrueR,
    ClFalseL,
    // modalities
    BoxP,
    DiaP,
    // fixed points
    MuL,
    MuR,
    NuL,
    NuR,
    // multiplicatives and additives
    TensorR,
    TensorL,
    ParR,
    ParL,
    LimplR,
    LimplL,
    WithR,
    WithL1,
    WithL2,
    PlusR1,
    PlusR2,
    PlusL,
    OneR,
    OneL,
    BotL,
    BotR,
    TopR,
    ZeroL,
    // exponentials
    QuestW,
    QuestC,
    QuestD,
    QuestP,
    BangW,
    BangC,
    BangD,
    BangP,
    // modal structure and modal promotions (linear modal system)
    DiaC,
    DiaW,
    BoxC,
    BoxW,
    BangPDia,
    QuestPBox,
}

impl RuleId {
    /// Canonical name used in proof documents and traces.
    pub fn name(self) -> &'static str {
        use RuleId::*;
        match self {
            Ax => "ax",
            Cut => "cut",
            ExL => "ex_l",
            ExR => "ex_r",
            Exchange => "ex",
            WL => "w_l",
            WR => "w_r",
            CL => "c_l",
            CR => "c_r",
            NegL => "neg_l",
            NegR => "neg_r",
            ImplR => "impl_r",
            ImplL => "impl_l",
            AndR => "and_r",
            AndL1 => "and_l1",
            AndL2 => "and_l2",
            OrR1 => "or_r1",
            OrR2 => "or_r2",
            OrL => "or_l",
            ClTrueR => "T_r",
            ClFalseL => "F_l",
            BoxP => "box_p",
            DiaP => "dia_p",
            MuL => "mu_l",
            MuR => "mu_r",
            NuL => "nu_l",
            NuR => "nu_r",
            TensorR => "tensor_r",
            TensorL => "tensor_l",
            ParR => "par_r",
            ParL => "par_l",
            LimplR => "limpl_r",
            LimplL => "limpl_l",
            WithR => "with_r",
            WithL1 => "with_l1",
            WithL2 => "with_l2",
            PlusR1 => "plus_r1",
            PlusR2 => "plus_r2",
            PlusL => "plus_l",
            OneR => "one_r",
            OneL => "one_l",
            BotL => "bot_l",
            BotR => "bot_r",
            TopR => "top_r",
            ZeroL => "zero_l",
            QuestW => "?w",
            QuestC => "?c",
            QuestD => "?d",
            QuestP => "?p",
            BangW => "!w",
            BangC => "!c",
            BangD => "!d",
            BangP => "!p",
            DiaC => "dia_c",
            DiaW => "dia_w",
            BoxC => "box_c",
            BoxW => "box_w",
            BangPDia => "!p_dia",
            QuestPBox => "?p_box",
        }
    }

    pub const ALL: [RuleId; 59] = {
        use RuleId::*;
        [
            Ax, Cut, ExL, ExR, Exchange, WL, WR, CL, CR, NegL, NegR, ImplR, ImplL, AndR,
            AndL1, AndL2, OrR1, OrR2, OrL, ClTrueR, ClFalseL, BoxP, DiaP, MuL, MuR, NuL,
            NuR, TensorR, TensorL, ParR, ParL, LimplR, LimplL, WithR, WithL1, WithL2,
            PlusR1, PlusR2, PlusL, OneR, OneL, BotL, BotR, TopR, ZeroL, QuestW, QuestC,
            QuestD, QuestP, BangW, BangC, BangD, BangP, DiaC, DiaW, BoxC, BoxW, BangPDia,
            QuestPBox,
        ]
    };

    pub fn from_name(s: &str) -> Option<RuleId> {
        RuleId::ALL.iter().copied().find(|r| r.name() == s)
    }

    /// Whether the schema belongs to `sys`.
    pub fn admitted(self, sys: SystemId) -> bool {
        use RuleId::*;
        match self {
            Ax | Cut | ExL | ExR | Exchange | NegL | NegR => true,
            WL | WR | CL | CR | ImplR | ImplL | AndR | AndL1 | AndL2 | OrR1 | OrR2
            | OrL | ClTrueR | ClFalseL => sys.is_classical(),
            BoxP | DiaP => sys.has_modalities(),
            MuL | MuR | NuL | NuR => sys.has_fixpoints(),
            TensorR | TensorL | ParR | ParL | LimplR | LimplL | WithR | WithL1 | WithL2
            | PlusR1 | PlusR2 | PlusL | OneR | OneL | BotL | BotR | TopR | ZeroL => {
                !sys.is_classical()
            }
            QuestW | QuestC | QuestD | QuestP | BangW | BangC | BangD | BangP => {
                sys.has_exponentials()
            }
            DiaC | DiaW | BoxC | BoxW | BangPDia | QuestPBox => {
                sys.has_modalities() && !sys.is_classical()
            }
        }
    }
}

/// Parameters selecting a concrete instance of a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleParams {
    /// Rules determined by the conclusion alone (`ax`, `one_r`, `bot_l`).
    None,
    /// Rules acting on one designated occurrence.
    Principal(PosId),
    /// Context-splitting rules: the listed positions (excluding the
    /// principal) go to the first premise, the rest to the second.
    Split { pos: PosId, left: BTreeSet<PosId> },
    /// Cut: the listed positions go to the first premise; the cut formula is
    /// introduced fresh in both premises.
    CutOn {
        formula: Formula,
        left: BTreeSet<PosId>,
    },
    /// Adjacent transposition at `index` on one side.
    Swap { side: Side, index: usize },
    /// General permutation: `premise.side[k] = conclusion.side[perm[k]]`.
    Perm { ante: Vec<usize>, succ: Vec<usize> },
}

/// Errors raised when building or querying rule instances.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("schema {schema} does not fit conclusion `{conclusion}`: {reason}")]
    ShapeMismatch {
        schema: &'static str,
        conclusion: String,
        reason: String,
    },
    #[error("bad context split: {0}")]
    BadSplit(String),
    #[error("bad permutation: {0}")]
    BadPermutation(String),
    #[error("unknown position {0}")]
    UnknownPosition(PosId),
    #[error("schema {0} is not part of system {1:?}")]
    NotInSystem(&'static str, SystemId),
}

/// A rule instance: conclusion, premises, and the ancestor relation from
/// conclusion occurrences to premise occurrences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleApp {
    pub schema: RuleId,
    pub conclusion: Sequent,
    pub premises: Vec<Sequent>,
    /// `ancestors[p]` lists the premise occurrences descending from `p`.
    /// Weakened occurrences map to nothing; contracted ones to two.
    pub ancestors: BTreeMap<PosId, Vec<(usize, PosId)>>,
    /// Principal occurrences in the conclusion (empty for `cut`).
    pub principal: Vec<PosId>,
    pub params: RuleParams,
}

impl RuleApp {
    /// Premise occurrences with no conclusion ancestor (cut formulas).
    pub fn introduced(&self, premise: usize) -> Vec<PosId> {
        let mut hit: BTreeSet<PosId> = BTreeSet::new();
        for descs in self.ancestors.values() {
            for (i, p) in descs {
                if *i == premise {
                    hit.insert(*p);
                }
            }
        }
        self.premises[premise]
            .ids()
            .filter(|p| !hit.contains(p))
            .collect()
    }

    /// The ancestor occurrences of conclusion position `p`.
    pub fn ancestor_trace(&self, p: PosId) -> Result<Vec<(usize, PosId)>, RuleError> {
        if self.conclusion.find(p).is_none() {
            return Err(RuleError::UnknownPosition(p));
        }
        Ok(self.ancestors.get(&p).cloned().unwrap_or_default())
    }
}

// ---- instantiate ----

// Premise occurrence under construction: the formula plus where it comes from.
#[derive(Clone)]
enum Orig {
    /// Descends from a conclusion occurrence.
    C(PosId),
    /// Introduced by the rule (cut formulas).
    New,
}

#[derive(Clone, Default)]
struct Proto {
    ante: Vec<(Formula, Orig)>,
    succ: Vec<(Formula, Orig)>,
}

fn finalize(
    schema: RuleId,
    conclusion: Sequent,
    protos: Vec<Proto>,
    principal: Vec<PosId>,
    params: RuleParams,
) -> RuleApp {
    let mut ancestors: BTreeMap<PosId, Vec<(usize, PosId)>> = BTreeMap::new();
    let mut premises = Vec::with_capacity(protos.len());
    for (pi, proto) in protos.into_iter().enumerate() {
        let mut next = 0u32;
        let mut build = |items: Vec<(Formula, Orig)>, anc: &mut BTreeMap<PosId, Vec<(usize, PosId)>>| {
            items
                .into_iter()
                .map(|(formula, orig)| {
                    let id = PosId(next);
                    next += 1;
                    if let Orig::C(c) = orig {
                        anc.entry(c).or_default().push((pi, id));
                    }
                    Occ { id, formula }
                })
                .collect::<Vec<_>>()
        };
        let ante = build(proto.ante, &mut ancestors);
        let succ = build(proto.succ, &mut ancestors);
        premises.push(Sequent { ante, succ });
    }
    RuleApp {
        schema,
        conclusion,
        premises,
        ancestors,
        principal,
        params,
    }
}

fn shape_err(schema: RuleId, conclusion: &Sequent, reason: impl Into<String>) -> RuleError {
    RuleError::ShapeMismatch {
        schema: schema.name(),
        conclusion: conclusion.to_string(),
        reason: reason.into(),
    }
}

// Context rows of the conclusion as proto items, skipping `skip` positions.
fn ctx(seq: &[Occ], skip: &BTreeSet<PosId>) -> Vec<(Formula, Orig)> {
    seq.iter()
        .filter(|o| !skip.contains(&o.id))
        .map(|o| (o.formula.clone(), Orig::C(o.id)))
        .collect()
}

// Context row where the principal is replaced in place by `products`.
fn ctx_replace(seq: &[Occ], pos: PosId, products: &[Formula]) -> Vec<(Formula, Orig)> {
    let mut out = Vec::new();
    for o in seq {
        if o.id == pos {
            for f in products {
                out.push((f.clone(), Orig::C(pos)));
            }
        } else {
            out.push((o.formula.clone(), Orig::C(o.id)));
        }
    }
    out
}

fn principal_of(params: &RuleParams) -> Option<PosId> {
    match params {
        RuleParams::Principal(p) | RuleParams::Split { pos: p, .. } => Some(*p),
        _ => None,
    }
}

/// Build the rule instance of `schema` with the given conclusion and
/// parameters. Fails with [`RuleError::ShapeMismatch`] when the conclusion
/// does not have the schema's shape, and [`RuleError::BadSplit`] /
/// [`RuleError::BadPermutation`] on malformed parameters.
pub fn instantiate(
    schema: RuleId,
    conclusion: Sequent,
    params: RuleParams,
) -> Result<RuleApp, RuleError> {
    use RuleId::*;

    // Resolve and validate the principal position early for rules that use one.
    let need_principal = !matches!(schema, Ax | Cut | OneR | BotL | ExL | ExR | Exchange);
    let pos = principal_of(&params);
    if need_principal {
        let p = pos.ok_or_else(|| {
            shape_err(schema, &conclusion, "missing principal position parameter")
        })?;
        if conclusion.find(p).is_none() {
            return Err(RuleError::UnknownPosition(p));
        }
    }

    match schema {
        Ax => {
            if conclusion.ante.len() != 1 || conclusion.succ.len() != 1 {
                return Err(shape_err(schema, &conclusion, "expects exactly F |- F"));
            }
            if conclusion.ante[0].formula != conclusion.succ[0].formula {
                return Err(shape_err(schema, &conclusion, "the two formulas differ"));
            }
            let principal = vec![conclusion.ante[0].id, conclusion.succ[0].id];
            Ok(finalize(schema, conclusion, vec![], principal, params))
        }
        Cut => {
            let (formula, left) = match &params {
                RuleParams::CutOn { formula, left } => (formula.clone(), left.clone()),
                _ => {
                    return Err(RuleError::BadSplit(
                        "cut needs a formula and a context split".into(),
                    ))
                }
            };
            for p in &left {
                if conclusion.find(*p).is_none() {
                    return Err(RuleError::BadSplit(format!(
                        "split mentions unknown position {}",
                        p
                    )));
                }
            }
            let right: BTreeSet<PosId> =
                conclusion.ids().filter(|p| !left.contains(p)).collect();
            // Premise 1: Gamma1 |- F, Delta1 ; premise 2: Gamma2, F |- Delta2.
            let mut p1 = Proto::default();
            p1.ante = ctx(&conclusion.ante, &right);
            p1.succ = vec![(formula.clone(), Orig::New)];
            p1.succ.extend(ctx(&conclusion.succ, &right));
            let mut p2 = Proto::default();
            p2.ante = ctx(&conclusion.ante, &left);
            p2.ante.push((formula.clone(), Orig::New));
            p2.succ = ctx(&conclusion.succ, &left);
            Ok(finalize(schema, conclusion, vec![p1, p2], vec![], params))
        }
        ExL | ExR => {
            let (side, index) = match &params {
                RuleParams::Swap { side, index } => (*side, *index),
                _ => {
                    return Err(RuleError::BadPermutation(
                        "adjacent exchange needs a side and an index".into(),
                    ))
                }
            };
            if (schema == ExL) != (side == Side::Ante) {
                return Err(RuleError::BadPermutation(
                    "exchange side does not match the schema".into(),
                ));
            }
            let row = conclusion.side(side);
            if index + 1 >= row.len() {
                return Err(RuleError::BadPermutation(format!(
                    "swap index {} out of range",
                    index
                )));
            }
            let mut proto = Proto {
                ante: ctx(&conclusion.ante, &BTreeSet::new()),
                succ: ctx(&conclusion.succ, &BTreeSet::new()),
            };
            let items = match side {
                Side::Ante => &mut proto.ante,
                Side::Succ => &mut proto.succ,
            };
            items.swap(index, index + 1);
            Ok(finalize(schema, conclusion, vec![proto], vec![], params))
        }
        Exchange => {
            let (pa, ps) = match &params {
                RuleParams::Perm { ante, succ } => (ante.clone(), succ.clone()),
                _ => {
                    return Err(RuleError::BadPermutation(
                        "exchange needs two permutations".into(),
                    ))
                }
            };
            let check = |perm: &[usize], n: usize| -> Result<(), RuleError> {
                if perm.len() != n {
                    return Err(RuleError::BadPermutation(format!(
                        "permutation length {} does not match row length {}",
                        perm.len(),
                        n
                    )));
                }
                let mut seen = vec![false; n];
                for &i in perm {
                    if i >= n || seen[i] {
                        return Err(RuleError::BadPermutation(
                            "not a permutation".into(),
                        ));
                    }
                    seen[i] = true;
                }
                Ok(())
            };
            check(&pa, conclusion.ante.len())?;
            check(&ps, conclusion.succ.len())?;
            let proto = Proto {
                ante: pa
                    .iter()
                    .map(|&i| {
                        let o = &conclusion.ante[i];
                        (o.formula.clone(), Orig::C(o.id))
                    })
                    .collect(),
                succ: ps
                    .iter()
                    .map(|&i| {
                        let o = &conclusion.succ[i];
                        (o.formula.clone(), Orig::C(o.id))
                    })
                    .collect(),
            };
            Ok(finalize(schema, conclusion, vec![proto], vec![], params))
        }
        // One-premise rules acting on a single occurrence.
        _ => instantiate_pointed(schema, conclusion, params, pos),
    }
}

fn expect_side(
    schema: RuleId,
    conclusion: &Sequent,
    p: PosId,
    want: Side,
) -> Result<Formula, RuleError> {
    let (side, i) = conclusion.find(p).unwrap();
    if side != want {
        return Err(shape_err(
            schema,
            conclusion,
            format!("principal {} is on the wrong side", p),
        ));
    }
    Ok(conclusion.side(side)[i].formula.clone())
}

fn whole_ctx(conclusion: &Sequent, skip: &BTreeSet<PosId>) -> Proto {
    Proto {
        ante: ctx(&conclusion.ante, skip),
        succ: ctx(&conclusion.succ, skip),
    }
}

fn replace_at(conclusion: &Sequent, side: Side, p: PosId, products: &[Formula]) -> Proto {
    let mut proto = Proto::default();
    match side {
        Side::Ante => {
            proto.ante = ctx_replace(&conclusion.ante, p, products);
            proto.succ = ctx(&conclusion.succ, &BTreeSet::new());
        }
        Side::Succ => {
            proto.ante = ctx(&conclusion.ante, &BTreeSet::new());
            proto.succ = ctx_replace(&conclusion.succ, p, products);
        }
    }
    proto
}

fn only(p: PosId) -> BTreeSet<PosId> {
    let mut s = BTreeSet::new();
    s.insert(p);
    s
}

// Promotion-style shape check on all non-principal occurrences.
fn promo_shape(
    schema: RuleId,
    conclusion: &Sequent,
    p: PosId,
    allow_modal: bool,
) -> Result<(), RuleError> {
    use Formula as F;
    for (q, s, g) in conclusion.positions() {
        if q == p {
            continue;
        }
        let ok = match s {
            Side::Ante => matches!(g, F::Bang(_)) || (allow_modal && matches!(g, F::Box(_))),
            Side::Succ => {
                matches!(g, F::Quest(_)) || (allow_modal && matches!(g, F::Diamond(_)))
            }
        };
        if !ok {
            return Err(shape_err(
                schema,
                conclusion,
                format!("context formula `{}` blocks promotion", g),
            ));
        }
    }
    Ok(())
}

fn instantiate_pointed(
    schema: RuleId,
    conclusion: Sequent,
    params: RuleParams,
    pos: Option<PosId>,
) -> Result<RuleApp, RuleError> {
    use Formula as F;
    use RuleId::*;

    // OneR and BotL have no parameters: the conclusion must be exactly |- 1
    // or bot |-.
    if schema == OneR {
        if !conclusion.ante.is_empty()
            || conclusion.succ.len() != 1
            || conclusion.succ[0].formula != F::One
        {
            return Err(shape_err(schema, &conclusion, "expects exactly |- 1"));
        }
        let principal = vec![conclusion.succ[0].id];
        return Ok(finalize(schema, conclusion, vec![], principal, params));
    }
    if schema == BotL {
        if !conclusion.succ.is_empty()
            || conclusion.ante.len() != 1
            || conclusion.ante[0].formula != F::Bot
        {
            return Err(shape_err(schema, &conclusion, "expects exactly bot |-"));
        }
        let principal = vec![conclusion.ante[0].id];
        return Ok(finalize(schema, conclusion, vec![], principal, params));
    }

    let p = pos.expect("pointed schema has a principal");

    // Which side the principal must be on.
    let side = match schema {
        WL | CL | NegL | ImplL | AndL1 | AndL2 | OrL | ClFalseL | DiaP | MuL | NuL
        | TensorL | ParL | LimplL | WithL1 | WithL2 | PlusL | OneL | ZeroL | QuestP
        | BangW | BangC | BangD | BoxC | BoxW | QuestPBox => Side::Ante,
        _ => Side::Succ,
    };
    let f = expect_side(schema, &conclusion, p, side)?;

    macro_rules! bad {
        ($reason:expr) => {
            return Err(shape_err(schema, &conclusion, $reason))
        };
    }

    // Each arm computes the premise protos; `finalize` runs once at the end.
    let protos: Vec<Proto> = match schema {
        WL | WR | QuestW | BangW | DiaW | BoxW => {
            match (schema, &f) {
                (WL, _) | (WR, _) => {}
                (QuestW, F::Quest(_)) | (BangW, F::Bang(_)) => {}
                (DiaW, F::Diamond(_)) | (BoxW, F::Box(_)) => {}
                _ => bad!("weakening schema does not match the formula"),
            }
            vec![whole_ctx(&conclusion, &only(p))]
        }
        CL | CR | QuestC | BangC | DiaC | BoxC => {
            match (schema, &f) {
                (CL, _) | (CR, _) => {}
                (QuestC, F::Quest(_)) | (BangC, F::Bang(_)) => {}
                (DiaC, F::Diamond(_)) | (BoxC, F::Box(_)) => {}
                _ => bad!("contraction schema does not match the formula"),
            }
            vec![replace_at(&conclusion, side, p, &[f.clone(), f.clone()])]
        }
        NegL | NegR => {
            let body = match &f {
                F::Neg(b) => (**b).clone(),
                _ => bad!("principal is not a negation"),
            };
            let mut proto = whole_ctx(&conclusion, &only(p));
            match schema {
                // neg_l: Gamma |- B, Delta over Gamma, neg B |- Delta.
                NegL => proto.succ.insert(0, (body, Orig::C(p))),
                // neg_r: Gamma, B |- Delta over Gamma |- neg B, Delta.
                _ => proto.ante.push((body, Orig::C(p))),
            }
            vec![proto]
        }
        ImplR | LimplR => {
            let (l, r) = match (&schema, &f) {
                (ImplR, F::Impl(l, r)) | (LimplR, F::LinImpl(l, r)) => {
                    ((**l).clone(), (**r).clone())
                }
                _ => bad!("principal is not an implication"),
            };
            let mut proto = replace_at(&conclusion, side, p, &[r]);
            proto.ante.push((l, Orig::C(p)));
            vec![proto]
        }
        ImplL | LimplL => {
            let (l, r) = match (&schema, &f) {
                (ImplL, F::Impl(l, r)) | (LimplL, F::LinImpl(l, r)) => {
                    ((**l).clone(), (**r).clone())
                }
                _ => bad!("principal is not an implication"),
            };
            let left = split_param(&params, &conclusion, p)?;
            // Premise 1: Gamma1 |- F1, Delta1 ; premise 2: Gamma2 with F2 in
            // the principal's place |- Delta2.
            let mut skip1: BTreeSet<PosId> = conclusion
                .ids()
                .filter(|q| !left.contains(q))
                .collect();
            skip1.insert(p);
            let mut p1 = whole_ctx(&conclusion, &skip1);
            p1.succ.insert(0, (l, Orig::C(p)));
            let keep = |id: PosId| id == p || !left.contains(&id);
            let p2 = Proto {
                ante: conclusion
                    .ante
                    .iter()
                    .filter(|o| keep(o.id))
                    .map(|o| {
                        if o.id == p {
                            (r.clone(), Orig::C(p))
                        } else {
                            (o.formula.clone(), Orig::C(o.id))
                        }
                    })
                    .collect(),
                succ: conclusion
                    .succ
                    .iter()
                    .filter(|o| keep(o.id))
                    .map(|o| (o.formula.clone(), Orig::C(o.id)))
                    .collect(),
            };
            vec![p1, p2]
        }
        AndR | WithR => {
            let (l, r) = match (&schema, &f) {
                (AndR, F::And(l, r)) | (WithR, F::With(l, r)) => {
                    ((**l).clone(), (**r).clone())
                }
                _ => bad!("principal does not match the schema"),
            };
            vec![
                replace_at(&conclusion, side, p, &[l]),
                replace_at(&conclusion, side, p, &[r]),
            ]
        }
        OrL | PlusL => {
            let (l, r) = match (&schema, &f) {
                (OrL, F::Or(l, r)) | (PlusL, F::Plus(l, r)) => ((**l).clone(), (**r).clone()),
                _ => bad!("principal does not match the schema"),
            };
            vec![
                replace_at(&conclusion, side, p, &[l]),
                replace_at(&conclusion, side, p, &[r]),
            ]
        }
        AndL1 | AndL2 | WithL1 | WithL2 => {
            let (l, r) = match (&schema, &f) {
                (AndL1, F::And(l, r))
                | (AndL2, F::And(l, r))
                | (WithL1, F::With(l, r))
                | (WithL2, F::With(l, r)) => ((**l).clone(), (**r).clone()),
                _ => bad!("principal does not match the schema"),
            };
            let pick = if matches!(schema, AndL1 | WithL1) { l } else { r };
            vec![replace_at(&conclusion, side, p, &[pick])]
        }
        OrR1 | OrR2 | PlusR1 | PlusR2 => {
            let (l, r) = match (&schema, &f) {
                (OrR1, F::Or(l, r))
                | (OrR2, F::Or(l, r))
                | (PlusR1, F::Plus(l, r))
                | (PlusR2, F::Plus(l, r)) => ((**l).clone(), (**r).clone()),
                _ => bad!("principal does not match the schema"),
            };
            let pick = if matches!(schema, OrR1 | PlusR1) { l } else { r };
            vec![replace_at(&conclusion, side, p, &[pick])]
        }
        ClTrueR => {
            if f != F::ClTrue {
                bad!("principal is not T");
            }
            vec![]
        }
        ClFalseL => {
            if f != F::ClFalse {
                bad!("principal is not F");
            }
            vec![]
        }
        TopR => {
            if f != F::Top {
                bad!("principal is not top");
            }
            vec![]
        }
        ZeroL => {
            if f != F::Zero {
                bad!("principal is not 0");
            }
            vec![]
        }
        OneL => {
            if f != F::One {
                bad!("principal is not 1");
            }
            vec![whole_ctx(&conclusion, &only(p))]
        }
        BotR => {
            if f != F::Bot {
                bad!("principal is not bot");
            }
            vec![whole_ctx(&conclusion, &only(p))]
        }
        MuL | MuR => {
            if !matches!(f, F::Mu(..)) {
                bad!("principal is not a mu formula");
            }
            let unf = f.unfold_fixpoint().expect("mu");
            vec![replace_at(&conclusion, side, p, &[unf])]
        }
        NuL | NuR => {
            if !matches!(f, F::Nu(..)) {
                bad!("principal is not a nu formula");
            }
            let unf = f.unfold_fixpoint().expect("nu");
            vec![replace_at(&conclusion, side, p, &[unf])]
        }
        TensorR => {
            let (l, r) = match &f {
                F::Tensor(l, r) => ((**l).clone(), (**r).clone()),
                _ => bad!("principal is not a tensor"),
            };
            return split_two(schema, conclusion, params, p, l, r);
        }
        ParL => {
            let (l, r) = match &f {
                F::Par(l, r) => ((**l).clone(), (**r).clone()),
                _ => bad!("principal is not a par"),
            };
            return split_two(schema, conclusion, params, p, l, r);
        }
        TensorL => {
            let (l, r) = match &f {
                F::Tensor(l, r) => ((**l).clone(), (**r).clone()),
                _ => bad!("principal is not a tensor"),
            };
            vec![replace_at(&conclusion, side, p, &[l, r])]
        }
        ParR => {
            let (l, r) = match &f {
                F::Par(l, r) => ((**l).clone(), (**r).clone()),
                _ => bad!("principal is not a par"),
            };
            vec![replace_at(&conclusion, side, p, &[l, r])]
        }
        QuestD => {
            let body = match &f {
                F::Quest(b) => (**b).clone(),
                _ => bad!("principal is not a ? formula"),
            };
            vec![replace_at(&conclusion, side, p, &[body])]
        }
        BangD => {
            let body = match &f {
                F::Bang(b) => (**b).clone(),
                _ => bad!("principal is not a ! formula"),
            };
            vec![replace_at(&conclusion, side, p, &[body])]
        }
        BangP | BangPDia => {
            let body = match &f {
                F::Bang(b) => (**b).clone(),
                _ => bad!("principal is not a ! formula"),
            };
            promo_shape(schema, &conclusion, p, schema == BangPDia)?;
            vec![replace_at(&conclusion, side, p, &[body])]
        }
        QuestP | QuestPBox => {
            let body = match &f {
                F::Quest(b) => (**b).clone(),
                _ => bad!("principal is not a ? formula"),
            };
            promo_shape(schema, &conclusion, p, schema == QuestPBox)?;
            vec![replace_at(&conclusion, side, p, &[body])]
        }
        BoxP => {
            let body = match &f {
                F::Box(b) => (**b).clone(),
                _ => bad!("principal is not a box formula"),
            };
            // box_p: every antecedent formula is boxed, every other succedent
            // formula is a diamond; the premise strips one modality from all.
            let mut proto = Proto::default();
            for o in &conclusion.ante {
                match &o.formula {
                    F::Box(g) => proto.ante.push(((**g).clone(), Orig::C(o.id))),
                    g => bad!(format!("antecedent formula `{}` is not boxed", g)),
                }
            }
            for o in &conclusion.succ {
                if o.id == p {
                    proto.succ.push((body.clone(), Orig::C(p)));
                } else {
                    match &o.formula {
                        F::Diamond(g) => proto.succ.push(((**g).clone(), Orig::C(o.id))),
                        g => bad!(format!("succedent formula `{}` is not a diamond", g)),
                    }
                }
            }
            vec![proto]
        }
        DiaP => {
            let body = match &f {
                F::Diamond(b) => (**b).clone(),
                _ => bad!("principal is not a diamond formula"),
            };
            let mut proto = Proto::default();
            for o in &conclusion.ante {
                if o.id == p {
                    proto.ante.push((body.clone(), Orig::C(p)));
                } else {
                    match &o.formula {
                        F::Box(g) => proto.ante.push(((**g).clone(), Orig::C(o.id))),
                        g => bad!(format!("antecedent formula `{}` is not boxed", g)),
                    }
                }
            }
            for o in &conclusion.succ {
                match &o.formula {
                    F::Diamond(g) => proto.succ.push(((**g).clone(), Orig::C(o.id))),
                    g => bad!(format!("succedent formula `{}` is not a diamond", g)),
                }
            }
            vec![proto]
        }
        _ => unreachable!("schema {:?} handled elsewhere", schema),
    };
    Ok(finalize(schema, conclusion, protos, vec![p], params))
}

fn split_param(
    params: &RuleParams,
    conclusion: &Sequent,
    principal: PosId,
) -> Result<BTreeSet<PosId>, RuleError> {
    match params {
        RuleParams::Split { left, .. } => {
            for q in left {
                if *q == principal {
                    return Err(RuleError::BadSplit(
                        "split must not contain the principal".into(),
                    ));
                }
                if conclusion.find(*q).is_none() {
                    return Err(RuleError::BadSplit(format!(
                        "split mentions unknown position {}",
                        q
                    )));
                }
            }
            Ok(left.clone())
        }
        _ => Err(RuleError::BadSplit(
            "schema needs a context split parameter".into(),
        )),
    }
}

// Two-premise context-splitting rule whose principal decomposes into `l`
// (premise 1) and `r` (premise 2), both staying on the principal's side.
fn split_two(
    schema: RuleId,
    conclusion: Sequent,
    params: RuleParams,
    p: PosId,
    l: Formula,
    r: Formula,
) -> Result<RuleApp, RuleError> {
    let left = split_param(&params, &conclusion, p)?;
    fn build(
        conclusion: &Sequent,
        p: PosId,
        mine: impl Fn(PosId) -> bool,
        product: &Formula,
    ) -> Proto {
        let pick = |row: &[Occ]| {
            row.iter()
                .filter(|o| o.id == p || mine(o.id))
                .map(|o| {
                    if o.id == p {
                        (product.clone(), Orig::C(p))
                    } else {
                        (o.formula.clone(), Orig::C(o.id))
                    }
                })
                .collect::<Vec<_>>()
        };
        Proto {
            ante: pick(&conclusion.ante),
            succ: pick(&conclusion.succ),
        }
    }
    let p1 = build(&conclusion, p, |q| left.contains(&q), &l);
    let p2 = build(&conclusion, p, |q| !left.contains(&q) && q != p, &r);
    Ok(finalize(schema, conclusion, vec![p1, p2], vec![p], params))
}

/// Rank-wise position alignment between two sequents carrying the same
/// formula lists: the k-th antecedent position of `from` maps to the k-th
/// antecedent position of `to`, likewise for succedents. `None` when the
/// formula lists differ. This is the canonical correspondence along proof
/// edges: reorderings are expressed by explicit exchange rules, never by
/// implicit crossings.
pub fn rank_align(from: &Sequent, to: &Sequent) -> Option<BTreeMap<PosId, PosId>> {
    if !from.same_formulas(to) {
        return None;
    }
    let mut map = BTreeMap::new();
    for (a, b) in from.ante.iter().zip(&to.ante) {
        map.insert(a.id, b.id);
    }
    for (a, b) in from.succ.iter().zip(&to.succ) {
        map.insert(a.id, b.id);
    }
    Some(map)
}

/// A single composite exchange realizing the two permutations, with the
/// induced ancestor relation. `ante[k] = i` means the premise's k-th
/// antecedent occurrence is the conclusion's i-th one.
pub fn derived_exchange(
    conclusion: Sequent,
    ante: Vec<usize>,
    succ: Vec<usize>,
) -> Result<RuleApp, RuleError> {
    instantiate(RuleId::Exchange, conclusion, RuleParams::Perm { ante, succ })
}

/// Decompose a composite exchange into adjacent transpositions (side, index),
/// listed from the premise towards the conclusion.
pub fn adjacent_decomposition(app: &RuleApp) -> Result<Vec<(Side, usize)>, RuleError> {
    let (pa, ps) = match &app.params {
        RuleParams::Perm { ante, succ } => (ante.clone(), succ.clone()),
        RuleParams::Swap { side, index } => return Ok(vec![(*side, *index)]),
        _ => {
            return Err(RuleError::BadPermutation(
                "not an exchange instance".into(),
            ))
        }
    };
    let mut out = Vec::new();
    let bubble = |mut perm: Vec<usize>, side: Side, out: &mut Vec<(Side, usize)>| {
        // Bubble sort; each swap is one adjacent exchange.
        let n = perm.len();
        for i in 0..n {
            for j in 0..n.saturating_sub(i + 1) {
                if perm[j] > perm[j + 1] {
                    perm.swap(j, j + 1);
                    out.push((side, j));
                }
            }
        }
    };
    bubble(pa, Side::Ante, &mut out);
    bubble(ps, Side::Succ, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::*;

    fn seq(ante: Vec<Formula>, succ: Vec<Formula>) -> Sequent {
        Sequent::new(ante, succ)
    }

    #[test]
    fn ax_shape() {
        let s = seq(vec![atom("a")], vec![atom("a")]);
        let app = instantiate(RuleId::Ax, s, RuleParams::None).unwrap();
        assert!(app.premises.is_empty());
        assert_eq!(app.principal.len(), 2);

        let bad = seq(vec![atom("a")], vec![atom("b")]);
        assert!(matches!(
            instantiate(RuleId::Ax, bad, RuleParams::None),
            Err(RuleError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn cut_splits_context() {
        // a, b |- c cut on d with a |- c left: premises a |- d, c and b, d |-.
        let s = seq(vec![atom("a"), atom("b")], vec![atom("c")]);
        let a_pos = s.ante[0].id;
        let c_pos = s.succ[0].id;
        let mut left = BTreeSet::new();
        left.insert(a_pos);
        left.insert(c_pos);
        let app = instantiate(
            RuleId::Cut,
            s,
            RuleParams::CutOn {
                formula: atom("d"),
                left,
            },
        )
        .unwrap();
        assert_eq!(app.premises.len(), 2);
        assert_eq!(app.premises[0].ante.len(), 1);
        assert_eq!(app.premises[0].succ.len(), 2);
        assert_eq!(app.premises[0].succ[0].formula, atom("d"));
        assert_eq!(app.premises[1].ante.len(), 2);
        assert_eq!(app.premises[1].ante[1].formula, atom("d"));
        assert!(app.premises[1].succ.is_empty());
        // Cut has no conclusion principal; context ancestors are singletons.
        assert!(app.principal.is_empty());
        assert_eq!(app.ancestor_trace(a_pos).unwrap().len(), 1);
        // The cut formula occurrences are introduced.
        assert_eq!(app.introduced(0).len(), 1);
        assert_eq!(app.introduced(1).len(), 1);
    }

    #[test]
    fn promotion_shape_mismatch() {
        // !p over a |- !b fails: the antecedent is not !-prefixed.
        let s = seq(vec![atom("a")], vec![bang(atom("b"))]);
        let p = s.succ[0].id;
        assert!(matches!(
            instantiate(RuleId::BangP, s, RuleParams::Principal(p)),
            Err(RuleError::ShapeMismatch { .. })
        ));
        // !p over !a |- !b succeeds and strips the principal.
        let s = seq(vec![bang(atom("a"))], vec![bang(atom("b"))]);
        let p = s.succ[0].id;
        let app = instantiate(RuleId::BangP, s, RuleParams::Principal(p)).unwrap();
        assert_eq!(app.premises[0].succ[0].formula, atom("b"));
        assert_eq!(app.premises[0].ante[0].formula, bang(atom("a")));
    }

    #[test]
    fn modal_promotion_shapes() {
        // box_p: box a |- box b, dia c strips every modality.
        let s = seq(
            vec![boxm(atom("a"))],
            vec![boxm(atom("b")), dia(atom("c"))],
        );
        let p = s.succ[0].id;
        let app = instantiate(RuleId::BoxP, s, RuleParams::Principal(p)).unwrap();
        let prem = &app.premises[0];
        assert_eq!(prem.ante[0].formula, atom("a"));
        assert_eq!(prem.succ[0].formula, atom("b"));
        assert_eq!(prem.succ[1].formula, atom("c"));

        // !p_dia admits box/dia context; !p does not.
        let s = seq(vec![boxm(atom("a"))], vec![bang(atom("b"))]);
        let p = s.succ[0].id;
        assert!(instantiate(RuleId::BangP, s.clone(), RuleParams::Principal(p)).is_err());
        assert!(instantiate(RuleId::BangPDia, s, RuleParams::Principal(p)).is_ok());
    }

    #[test]
    fn ancestor_counts() {
        // Contraction: two ancestors.
        let s = seq(vec![], vec![quest(atom("a")), atom("b")]);
        let p = s.succ[0].id;
        let app = instantiate(RuleId::QuestC, s, RuleParams::Principal(p)).unwrap();
        assert_eq!(app.ancestor_trace(p).unwrap().len(), 2);
        // Weakening: none.
        let s = seq(vec![], vec![quest(atom("a")), atom("b")]);
        let p = s.succ[0].id;
        let app = instantiate(RuleId::QuestW, s, RuleParams::Principal(p)).unwrap();
        assert!(app.ancestor_trace(p).unwrap().is_empty());
        // Unknown position errors.
        assert!(matches!(
            app.ancestor_trace(PosId(99)),
            Err(RuleError::UnknownPosition(_))
        ));
    }

    #[test]
    fn fixpoint_unfolding_in_place() {
        let nat = mu("X", or(Formula::ClTrue, var("X")));
        let s = seq(vec![], vec![nat.clone()]);
        let p = s.succ[0].id;
        let app = instantiate(RuleId::MuR, s, RuleParams::Principal(p)).unwrap();
        assert_eq!(
            app.premises[0].succ[0].formula,
            or(Formula::ClTrue, nat.clone())
        );
    }

    #[test]
    fn exchange_decomposition() {
        // Swap of a 2-element succedent: one adjacent transposition.
        let s = seq(vec![], vec![atom("a"), atom("b")]);
        let app = derived_exchange(s, vec![], vec![1, 0]).unwrap();
        assert_eq!(adjacent_decomposition(&app).unwrap().len(), 1);
        // Reversal of a 3-element antecedent: three adjacent transpositions.
        let s = seq(vec![atom("a"), atom("b"), atom("c")], vec![]);
        let app = derived_exchange(s, vec![2, 1, 0], vec![]).unwrap();
        let dec = adjacent_decomposition(&app).unwrap();
        assert_eq!(dec.len(), 3);
        assert!(dec.iter().all(|(side, _)| *side == Side::Ante));
        // Identity permutation: identity ancestors.
        let s = seq(vec![atom("a")], vec![atom("b")]);
        let ids: Vec<_> = s.ids().collect();
        let app = derived_exchange(s, vec![0], vec![0]).unwrap();
        for p in ids {
            let t = app.ancestor_trace(p).unwrap();
            assert_eq!(t.len(), 1);
        }
        assert!(adjacent_decomposition(&app).unwrap().is_empty());
        // Non-permutations are rejected.
        let s = seq(vec![atom("a"), atom("b")], vec![]);
        assert!(matches!(
            derived_exchange(s, vec![0, 0], vec![]),
            Err(RuleError::BadPermutation(_))
        ));
    }

    #[test]
    fn tensor_split() {
        // a, b |- a * b with a left: premises a |- a and b |- b.
        let s = seq(vec![atom("a"), atom("b")], vec![tensor(atom("a"), atom("b"))]);
        let pa = s.ante[0].id;
        let pt = s.succ[0].id;
        let mut left = BTreeSet::new();
        left.insert(pa);
        let app = instantiate(
            RuleId::TensorR,
            s,
            RuleParams::Split { pos: pt, left },
        )
        .unwrap();
        assert_eq!(app.premises[0].ante.len(), 1);
        assert_eq!(app.premises[0].succ[0].formula, atom("a"));
        assert_eq!(app.premises[1].ante.len(), 1);
        assert_eq!(app.premises[1].succ[0].formula, atom("b"));
        // The principal has ancestors in both premises.
        assert_eq!(app.ancestor_trace(pt).unwrap().len(), 2);
    }

    #[test]
    fn schema_admission() {
        assert!(RuleId::AndR.admitted(SystemId::MuLk));
        assert!(!RuleId::AndR.admitted(SystemId::MuLl));
        assert!(RuleId::BangP.admitted(SystemId::MuLl));
        assert!(!RuleId::BangP.admitted(SystemId::MuLk));
        assert!(RuleId::BoxP.admitted(SystemId::MuLkBox));
        assert!(RuleId::BoxP.admitted(SystemId::MuLlBox));
        assert!(!RuleId::BoxP.admitted(SystemId::MuLl));
        assert!(RuleId::BangPDia.admitted(SystemId::MuLlBox));
        assert!(!RuleId::BangPDia.admitted(SystemId::MuLkBox));
        assert!(RuleId::Cut.admitted(SystemId::Lk));
        // Classical weakening is not a linear rule.
        assert!(!RuleId::WL.admitted(SystemId::MuLl));
    }
}
