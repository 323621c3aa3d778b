//! Formula syntax shared by the classical and linear systems.
//!
//! A single pre-formula type covers both grammars; [`Formula::is_formula`]
//! decides membership in a concrete system (connective availability plus
//! closedness and positivity of fixed-point bindings).
//!
//! Equality and hashing are alpha-equivalence: binder names are compared
//! positionally, so `mu X. X` equals `mu Y. Y` and both hash alike.

use std::collections::HashSet;
use std::fmt;

/// Identifies one of the supported sequent systems.
///
/// Classical family: `Lk`, `LkBox`, `MuLk`, `MuLkBox`.
/// Linear family: `Mall`, `MuMall`, `Ll`, `MuLl`, `MuLlBox`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SystemId {
    MuLkBox,
    MuLk,
    LkBox,
    Lk,
    MuMall,
    Mall,
    MuLl,
    Ll,
    MuLlBox,
}

impl SystemId {
    /// Classical-family systems use `and/or/impl/T/F` and unrestricted
    /// weakening and contraction; linear ones use the multiplicative and
    /// additive connectives.
    pub fn is_classical(self) -> bool {
        matches!(
            self,
            SystemId::MuLkBox | SystemId::MuLk | SystemId::LkBox | SystemId::Lk
        )
    }

    /// Whether `mu`/`nu` binders are part of the grammar.
    pub fn has_fixpoints(self) -> bool {
        matches!(
            self,
            SystemId::MuLkBox
                | SystemId::MuLk
                | SystemId::MuMall
                | SystemId::MuLl
                | SystemId::MuLlBox
        )
    }

    /// Whether `!`/`?` are part of the grammar.
    pub fn has_exponentials(self) -> bool {
        matches!(self, SystemId::Ll | SystemId::MuLl | SystemId::MuLlBox)
    }

    /// Whether `box`/`dia` are part of the grammar.
    pub fn has_modalities(self) -> bool {
        matches!(self, SystemId::MuLkBox | SystemId::LkBox | SystemId::MuLlBox)
    }

    /// All systems, in the order used by parsers and tables.
    pub const ALL: [SystemId; 9] = [
        SystemId::MuLkBox,
        SystemId::MuLk,
        SystemId::LkBox,
        SystemId::Lk,
        SystemId::MuMall,
        SystemId::Mall,
        SystemId::MuLl,
        SystemId::Ll,
        SystemId::MuLlBox,
    ];

    /// Canonical lowercase name used in proof documents.
    pub fn name(self) -> &'static str {
        match self {
            SystemId::MuLkBox => "mulkbox",
            SystemId::MuLk => "mulk",
            SystemId::LkBox => "lkbox",
            SystemId::Lk => "lk",
            SystemId::MuMall => "mumall",
            SystemId::Mall => "mall",
            SystemId::MuLl => "mull",
            SystemId::Ll => "ll",
            SystemId::MuLlBox => "mullbox",
        }
    }

    pub fn from_name(s: &str) -> Option<SystemId> {
        SystemId::ALL.iter().copied().find(|x| x.name() == s)
    }
}

/// Errors raised by formula-level operations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("not a fixed-point formula: {0}")]
    NotAFixpoint(String),
}

/// Pre-formulas over both grammars. `Var` is a fixed-point variable;
/// free variables make the node a pre-formula only.
#[derive(Debug, Clone)]
pub enum Formula {
    /// Propositional atom (lowercase identifiers in the text syntax).
    Atom(String),
    /// Fixed-point variable (uppercase identifiers).
    Var(String),
    /// Least fixed point `mu X. body`.
    Mu(String, Box<Formula>),
    /// Greatest fixed point `nu X. body`.
    Nu(String, Box<Formula>),
    /// Negation connective, written `neg A`; used by both families.
    Neg(Box<Formula>),
    /// Classical implication `A -> B`.
    Impl(Box<Formula>, Box<Formula>),
    /// Linear implication `A -o B`.
    LinImpl(Box<Formula>, Box<Formula>),
    /// Classical conjunction `A & B`.
    And(Box<Formula>, Box<Formula>),
    /// Classical disjunction `A + B`.
    Or(Box<Formula>, Box<Formula>),
    /// Multiplicative conjunction `A * B`.
    Tensor(Box<Formula>, Box<Formula>),
    /// Multiplicative disjunction `A par B`.
    Par(Box<Formula>, Box<Formula>),
    /// Additive conjunction `A & B` (linear systems).
    With(Box<Formula>, Box<Formula>),
    /// Additive disjunction `A + B` (linear systems).
    Plus(Box<Formula>, Box<Formula>),
    /// Multiplicative unit `1`.
    One,
    /// Multiplicative unit `bot`.
    Bot,
    /// Additive unit `top`.
    Top,
    /// Additive unit `0`.
    Zero,
    /// Classical truth `T`.
    ClTrue,
    /// Classical falsity `F`.
    ClFalse,
    /// Exponential `! A`.
    Bang(Box<Formula>),
    /// Exponential `? A`.
    Quest(Box<Formula>),
    /// Modality `box A`.
    Box(Box<Formula>),
    /// Modality `dia A`.
    Diamond(Box<Formula>),
}

/// How a variable occurs in a pre-formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Occurs, and only under an even number of negative switches.
    PositiveOnly,
    /// At least one occurrence under an odd number of negative switches.
    NegativeOccurs,
    /// Does not occur free.
    Absent,
}

// (occurs positively, occurs negatively)
fn occ(f: &Formula, x: &str) -> (bool, bool) {
    use Formula::*;
    match f {
        Atom(_) | One | Bot | Top | Zero | ClTrue | ClFalse => (false, false),
        Var(y) => (y == x, false),
        Mu(y, b) | Nu(y, b) => {
            if y == x {
                (false, false)
            } else {
                occ(b, x)
            }
        }
        Neg(b) => {
            let (p, n) = occ(b, x);
            (n, p)
        }
        Impl(l, r) | LinImpl(l, r) => {
            let (lp, ln) = occ(l, x);
            let (rp, rn) = occ(r, x);
            (ln || rp, lp || rn)
        }
        And(l, r) | Or(l, r) | Tensor(l, r) | Par(l, r) | With(l, r) | Plus(l, r) => {
            let (lp, ln) = occ(l, x);
            let (rp, rn) = occ(r, x);
            (lp || rp, ln || rn)
        }
        Bang(b) | Quest(b) | Box(b) | Diamond(b) => occ(b, x),
    }
}

impl Formula {
    /// Variable occurrence report for `x` in `self`.
    pub fn polarity(&self, x: &str) -> Polarity {
        match occ(self, x) {
            (_, true) => Polarity::NegativeOccurs,
            (true, false) => Polarity::PositiveOnly,
            (false, false) => Polarity::Absent,
        }
    }

    /// Free variables of the pre-formula.
    pub fn free_vars(&self) -> HashSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut HashSet<String>) {
            use Formula::*;
            match f {
                Atom(_) | One | Bot | Top | Zero | ClTrue | ClFalse => {}
                Var(y) => {
                    if !bound.iter().any(|b| b == y) {
                        out.insert(y.clone());
                    }
                }
                Mu(y, b) | Nu(y, b) => {
                    bound.push(y.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                Neg(b) | Bang(b) | Quest(b) | Box(b) | Diamond(b) => go(b, bound, out),
                Impl(l, r) | LinImpl(l, r) | And(l, r) | Or(l, r) | Tensor(l, r) | Par(l, r)
                | With(l, r) | Plus(l, r) => {
                    go(l, bound, out);
                    go(r, bound, out);
                }
            }
        }
        let mut out = HashSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    /// True when the pre-formula is a formula of `sys`: closed, every binder
    /// binds only positive occurrences, and every connective belongs to the
    /// system's grammar.
    pub fn is_formula(&self, sys: SystemId) -> bool {
        self.free_vars().is_empty() && self.well_bound() && self.in_grammar(sys)
    }

    fn well_bound(&self) -> bool {
        use Formula::*;
        match self {
            Atom(_) | Var(_) | One | Bot | Top | Zero | ClTrue | ClFalse => true,
            Mu(x, b) | Nu(x, b) => {
                b.polarity(x) != Polarity::NegativeOccurs && b.well_bound()
            }
            Neg(b) | Bang(b) | Quest(b) | Box(b) | Diamond(b) => b.well_bound(),
            Impl(l, r) | LinImpl(l, r) | And(l, r) | Or(l, r) | Tensor(l, r) | Par(l, r)
            | With(l, r) | Plus(l, r) => l.well_bound() && r.well_bound(),
        }
    }

    fn in_grammar(&self, sys: SystemId) -> bool {
        use Formula::*;
        let ok = match self {
            Atom(_) | Var(_) | Neg(_) => true,
            Mu(..) | Nu(..) => sys.has_fixpoints(),
            Impl(..) | And(..) | Or(..) | ClTrue | ClFalse => sys.is_classical(),
            LinImpl(..) | Tensor(..) | Par(..) | With(..) | Plus(..) | One | Bot | Top
            | Zero => !sys.is_classical(),
            Bang(_) | Quest(_) => sys.has_exponentials(),
            Box(_) | Diamond(_) => sys.has_modalities(),
        };
        ok && self.children().iter().all(|c| c.in_grammar(sys))
    }

    fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            Atom(_) | Var(_) | One | Bot | Top | Zero | ClTrue | ClFalse => vec![],
            Mu(_, b) | Nu(_, b) | Neg(b) | Bang(b) | Quest(b) | Box(b) | Diamond(b) => vec![b],
            Impl(l, r) | LinImpl(l, r) | And(l, r) | Or(l, r) | Tensor(l, r) | Par(l, r)
            | With(l, r) | Plus(l, r) => vec![l, r],
        }
    }

    /// Capture-avoiding substitution of `x` by `by`.
    pub fn subst(&self, x: &str, by: &Formula) -> Formula {
        match self {
            Formula::Atom(_)
            | Formula::One
            | Formula::Bot
            | Formula::Top
            | Formula::Zero
            | Formula::ClTrue
            | Formula::ClFalse => self.clone(),
            Formula::Var(y) => {
                if y == x {
                    by.clone()
                } else {
                    self.clone()
                }
            }
            Formula::Mu(y, b) | Formula::Nu(y, b) => {
                let is_mu = matches!(self, Formula::Mu(..));
                let rebuild = |name: String, body: Formula| {
                    if is_mu {
                        mu(&name, body)
                    } else {
                        nu(&name, body)
                    }
                };
                if y == x {
                    // Shadowed: substitution stops here.
                    self.clone()
                } else if by.free_vars().contains(y) {
                    // Rename the binder away from the payload's free variables.
                    let mut avoid = by.free_vars();
                    avoid.extend(b.free_vars());
                    let fresh = fresh_name(y, &avoid);
                    let renamed = b.subst(y, &Formula::Var(fresh.clone()));
                    rebuild(fresh, renamed.subst(x, by))
                } else {
                    rebuild(y.clone(), b.subst(x, by))
                }
            }
            Formula::Neg(b) => neg(b.subst(x, by)),
            Formula::Bang(b) => bang(b.subst(x, by)),
            Formula::Quest(b) => quest(b.subst(x, by)),
            Formula::Box(b) => boxm(b.subst(x, by)),
            Formula::Diamond(b) => dia(b.subst(x, by)),
            Formula::Impl(l, r) => impl_(l.subst(x, by), r.subst(x, by)),
            Formula::LinImpl(l, r) => limpl(l.subst(x, by), r.subst(x, by)),
            Formula::And(l, r) => and(l.subst(x, by), r.subst(x, by)),
            Formula::Or(l, r) => or(l.subst(x, by), r.subst(x, by)),
            Formula::Tensor(l, r) => tensor(l.subst(x, by), r.subst(x, by)),
            Formula::Par(l, r) => par(l.subst(x, by), r.subst(x, by)),
            Formula::With(l, r) => with(l.subst(x, by), r.subst(x, by)),
            Formula::Plus(l, r) => plus(l.subst(x, by), r.subst(x, by)),
        }
    }

    /// One unfolding step of a fixed point: `dX.B` becomes `B[X := dX.B]`.
    pub fn unfold_fixpoint(&self) -> Result<Formula, FormulaError> {
        match self {
            Formula::Mu(x, b) | Formula::Nu(x, b) => Ok(b.subst(x, self)),
            other => Err(FormulaError::NotAFixpoint(other.to_string())),
        }
    }

    /// Whether the node is `mu` or `nu`.
    pub fn is_fixpoint(&self) -> bool {
        matches!(self, Formula::Mu(..) | Formula::Nu(..))
    }

    /// The closure of the formula: smallest set containing it, closed under
    /// immediate subformulas of non-binders and under fixed-point unfolding.
    /// Open bodies of binders are not members; the unfolding is. The set is
    /// finite and returned in first-generation order.
    pub fn closure(&self) -> Vec<Formula> {
        let mut seen: Vec<Formula> = Vec::new();
        let mut queue: Vec<Formula> = vec![self.clone()];
        while let Some(f) = queue.pop() {
            if seen.iter().any(|g| g == &f) {
                continue;
            }
            seen.push(f.clone());
            use Formula::*;
            match &f {
                Mu(..) | Nu(..) => queue.push(f.unfold_fixpoint().expect("fixpoint")),
                _ => {
                    for c in f.children() {
                        queue.push(c.clone());
                    }
                }
            }
        }
        seen
    }
}

fn fresh_name(base: &str, avoid: &HashSet<String>) -> String {
    let stem: String = base.chars().take_while(|c| *c != '\'').collect();
    let mut i = 1;
    loop {
        let cand = format!("{}{}", stem, "'".repeat(i));
        if !avoid.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

// ---- alpha-equivalence ----

fn alpha_eq(a: &Formula, b: &Formula, ea: &mut Vec<String>, eb: &mut Vec<String>) -> bool {
    use Formula::*;
    match (a, b) {
        (Atom(x), Atom(y)) => x == y,
        (Var(x), Var(y)) => {
            let ia = ea.iter().rposition(|v| v == x);
            let ib = eb.iter().rposition(|v| v == y);
            match (ia, ib) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (Mu(x, f), Mu(y, g)) | (Nu(x, f), Nu(y, g)) => {
            ea.push(x.clone());
            eb.push(y.clone());
            let r = alpha_eq(f, g, ea, eb);
            ea.pop();
            eb.pop();
            r
        }
        (Neg(f), Neg(g))
        | (Bang(f), Bang(g))
        | (Quest(f), Quest(g))
        | (Box(f), Box(g))
        | (Diamond(f), Diamond(g)) => alpha_eq(f, g, ea, eb),
        (Impl(l1, r1), Impl(l2, r2))
        | (LinImpl(l1, r1), LinImpl(l2, r2))
        | (And(l1, r1), And(l2, r2))
        | (Or(l1, r1), Or(l2, r2))
        | (Tensor(l1, r1), Tensor(l2, r2))
        | (Par(l1, r1), Par(l2, r2))
        | (With(l1, r1), With(l2, r2))
        | (Plus(l1, r1), Plus(l2, r2)) => {
            alpha_eq(l1, l2, ea, eb) && alpha_eq(r1, r2, ea, eb)
        }
        (One, One) | (Bot, Bot) | (Top, Top) | (Zero, Zero) | (ClTrue, ClTrue)
        | (ClFalse, ClFalse) => true,
        _ => false,
    }
}

impl PartialEq for Formula {
    fn eq(&self, other: &Self) -> bool {
        alpha_eq(self, other, &mut Vec::new(), &mut Vec::new())
    }
}
impl Eq for Formula {}

impl std::hash::Hash for Formula {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        // Hash on de-Bruijn-normalized structure so it agrees with alpha-eq.
        fn go<H: std::hash::Hasher>(f: &Formula, env: &mut Vec<String>, state: &mut H) {
            use Formula::*;
            std::mem::discriminant(f).hash(state);
            match f {
                Atom(x) => x.hash(state),
                Var(x) => match env.iter().rposition(|v| v == x) {
                    Some(i) => {
                        0u8.hash(state);
                        i.hash(state);
                    }
                    None => {
                        1u8.hash(state);
                        x.hash(state);
                    }
                },
                Mu(x, b) | Nu(x, b) => {
                    env.push(x.clone());
                    go(b, env, state);
                    env.pop();
                }
                Neg(b) | Bang(b) | Quest(b) | Box(b) | Diamond(b) => go(b, env, state),
                Impl(l, r) | LinImpl(l, r) | And(l, r) | Or(l, r) | Tensor(l, r)
                | Par(l, r) | With(l, r) | Plus(l, r) => {
                    go(l, env, state);
                    go(r, env, state);
                }
                One | Bot | Top | Zero | ClTrue | ClFalse => {}
            }
        }
        go(self, &mut Vec::new(), state);
    }
}

// ---- printing ----
//
// Binary precedence (loosest to tightest): -> and -o, then + , & , par, *.
// Prefix operators and binders bind tighter than any binary connective;
// binder bodies extend as far right as possible.

fn prec(f: &Formula) -> u8 {
    use Formula::*;
    match f {
        Mu(..) | Nu(..) => 0,
        Impl(..) | LinImpl(..) => 1,
        Or(..) | Plus(..) => 2,
        And(..) | With(..) => 3,
        Par(..) => 4,
        Tensor(..) => 5,
        _ => 6,
    }
}

fn fmt_at(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    use Formula::*;
    let p = prec(f);
    let paren = p < min;
    if paren {
        write!(out, "(")?;
    }
    match f {
        Atom(x) | Var(x) => write!(out, "{}", x)?,
        Mu(x, b) => {
            write!(out, "mu {}. ", x)?;
            fmt_at(b, 0, out)?;
        }
        Nu(x, b) => {
            write!(out, "nu {}. ", x)?;
            fmt_at(b, 0, out)?;
        }
        Neg(b) => {
            write!(out, "neg ")?;
            fmt_at(b, 6, out)?;
        }
        Bang(b) => {
            write!(out, "!")?;
            fmt_at(b, 6, out)?;
        }
        Quest(b) => {
            write!(out, "?")?;
            fmt_at(b, 6, out)?;
        }
        Box(b) => {
            write!(out, "box ")?;
            fmt_at(b, 6, out)?;
        }
        Diamond(b) => {
            write!(out, "dia ")?;
            fmt_at(b, 6, out)?;
        }
        Impl(l, r) => {
            fmt_at(l, 2, out)?;
            write!(out, " -> ")?;
            fmt_at(r, 1, out)?;
        }
        LinImpl(l, r) => {
            fmt_at(l, 2, out)?;
            write!(out, " -o ")?;
            fmt_at(r, 1, out)?;
        }
        Or(l, r) => {
            fmt_at(l, 2, out)?;
            write!(out, " + ")?;
            fmt_at(r, 3, out)?;
        }
        Plus(l, r) => {
            fmt_at(l, 2, out)?;
            write!(out, " + ")?;
            fmt_at(r, 3, out)?;
        }
        And(l, r) => {
            fmt_at(l, 3, out)?;
            write!(out, " & ")?;
            fmt_at(r, 4, out)?;
        }
        With(l, r) => {
            fmt_at(l, 3, out)?;
            write!(out, " & ")?;
            fmt_at(r, 4, out)?;
        }
        Par(l, r) => {
            fmt_at(l, 4, out)?;
            write!(out, " par ")?;
            fmt_at(r, 5, out)?;
        }
        Tensor(l, r) => {
            fmt_at(l, 5, out)?;
            write!(out, " * ")?;
            fmt_at(r, 6, out)?;
        }
        One => write!(out, "1")?,
        Bot => write!(out, "bot")?,
        Top => write!(out, "top")?,
        Zero => write!(out, "0")?,
        ClTrue => write!(out, "T")?,
        ClFalse => write!(out, "F")?,
    }
    if paren {
        write!(out, ")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_at(self, 0, f)
    }
}

// Convenience constructors keep call sites readable.
pub fn atom(s: &str) -> Formula {
    Formula::Atom(s.to_string())
}
pub fn var(s: &str) -> Formula {
    Formula::Var(s.to_string())
}
pub fn mu(x: &str, b: Formula) -> Formula {
    Formula::Mu(x.to_string(), Box::new(b))
}
pub fn nu(x: &str, b: Formula) -> Formula {
    Formula::Nu(x.to_string(), Box::new(b))
}
pub fn neg(b: Formula) -> Formula {
    Formula::Neg(Box::new(b))
}
pub fn impl_(l: Formula, r: Formula) -> Formula {
    Formula::Impl(Box::new(l), Box::new(r))
}
pub fn limpl(l: Formula, r: Formula) -> Formula {
    Formula::LinImpl(Box::new(l), Box::new(r))
}
pub fn and(l: Formula, r: Formula) -> Formula {
    Formula::And(Box::new(l), Box::new(r))
}
pub fn or(l: Formula, r: Formula) -> Formula {
    Formula::Or(Box::new(l), Box::new(r))
}
pub fn tensor(l: Formula, r: Formula) -> Formula {
    Formula::Tensor(Box::new(l), Box::new(r))
}
pub fn par(l: Formula, r: Formula) -> Formula {
    Formula::Par(Box::new(l), Box::new(r))
}
pub fn with(l: Formula, r: Formula) -> Formula {
    Formula::With(Box::new(l), Box::new(r))
}
pub fn plus(l: Formula, r: Formula) -> Formula {
    Formula::Plus(Box::new(l), Box::new(r))
}
pub fn bang(b: Formula) -> Formula {
    Formula::Bang(Box::new(b))
}
pub fn quest(b: Formula) -> Formula {
    Formula::Quest(Box::new(b))
}
pub fn boxm(b: Formula) -> Formula {
    Formula::Box(Box::new(b))
}
pub fn dia(b: Formula) -> Formula {
    Formula::Diamond(Box::new(b))
}
