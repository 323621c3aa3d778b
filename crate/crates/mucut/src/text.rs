//! Plain-text proof documents.
//!
//! A document describes one regular pre-proof:
//!
//! ```text
//! system mulk
//! name double
//! conclusion  |- mu X. T + X -> mu X. T + X
//! root 0
//!
//! 0: impl_r [s0] -> 1
//! 1: nu_r [s0] -> back 0
//! ```
//!
//! * `system` names the calculus (`mulk`, `mull`, `mullbox`, ...).
//! * `name` is a free-form label for the proof.
//! * `let <Name> = <formula>` lines define abbreviations; they expand during
//!   parsing and are never reproduced by the printer.
//! * `conclusion` gives the endsequent; every other sequent in the proof is
//!   reconstructed by instantiating the rules from the root downward.
//! * Node lines have the shape `<id>: <rule> [<principal info>] -> <children>`
//!   where each child is either another node id or `back <id>` for an edge
//!   back to an inner node.  Leaves omit the arrow.
//!
//! Principal info refers to occurrences by side and rank (`a0` is the first
//! antecedent occurrence, `s1` the second succedent occurrence):
//!
//! * `[s0]` — the rule's principal occurrence;
//! * `[s0; left a0 a1]` — context-splitting rules: principal, then the
//!   occurrences sent to the first premise;
//! * `[on <formula>; left a0]` — cut: the cut formula and the first-premise
//!   context;
//! * `[swap a 1]` — adjacent transposition on one side;
//! * `[perm a 1 0; s]` — a general exchange, one permutation per side.
//!
//! Formulas use ASCII spellings: `mu X. A`, `nu X. A`, `!A`, `?A`, `box A`,
//! `dia A`, `neg A`, `A * B`, `A par B`, `A & B`, `A + B`, `A -o B`,
//! `A -> B`, and the units `top bot 1 0 T F`.  `&` and `+` read as the
//! additive connectives in linear systems and as conjunction/disjunction in
//! classical ones.  `#` starts a comment running to the end of the line.
//!
//! Printing is canonical: nodes are renumbered in depth-first preorder from
//! the root, abbreviations are expanded, and whitespace is fixed, so a
//! canonically printed document re-parses and re-prints byte-identically.

use std::collections::{BTreeMap, BTreeSet};

use crate::calculus::{instantiate, PosId, RuleApp, RuleId, RuleParams, Sequent, Side};
use crate::formula::{Formula, SystemId};
use crate::proof::{Node, NodeId, PrefixNode, ProofGraph, TreePrefix};
use crate::reduction::{Redex, RedexKind, TraceStep};

/// A syntax error, located by 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A well-formedness error in an otherwise syntactically valid document,
/// naming the node ids involved.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct SemanticError {
    pub nodes: Vec<NodeId>,
    pub message: String,
}

/// Any error from reading a document.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TextError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("semantic error: {0}")]
    Semantic(#[from] SemanticError),
}

fn perr(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        column,
        message: message.into(),
    }
}

fn serr(nodes: Vec<NodeId>, message: impl Into<String>) -> SemanticError {
    SemanticError {
        nodes,
        message: message.into(),
    }
}

// ---- formula and sequent parsing ----

struct Cursor<'a> {
    text: &'a [u8],
    pos: usize,
    line: usize,
    col0: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line: usize, col0: usize) -> Cursor<'a> {
        Cursor {
            text: text.as_bytes(),
            pos: 0,
            line,
            col0,
        }
    }

    fn column(&self) -> usize {
        self.col0 + self.pos + 1
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        perr(self.line, self.column(), message)
    }

    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.peek().is_none()
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{}`", c as char)))
        }
    }

    /// Next identifier-shaped word, without consuming it.
    fn peek_word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        while end < self.text.len() && is_word_char(self.text[end]) {
            end += 1;
        }
        if end == start {
            None
        } else {
            Some(std::str::from_utf8(&self.text[start..end]).unwrap())
        }
    }

    fn take_word(&mut self) -> Option<&'a str> {
        let w = self.peek_word()?;
        self.pos += w.len();
        Some(w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.peek_word() == Some(w) {
            self.pos += w.len();
            true
        } else {
            false
        }
    }

    fn take_usize(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| perr(self.line, self.col0 + start + 1, "number out of range"))
    }
}

fn is_word_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

const KEYWORDS: [&str; 10] = [
    "mu", "nu", "box", "dia", "neg", "par", "top", "bot", "T", "F",
];

struct FormulaParser<'a, 'b> {
    cur: Cursor<'a>,
    sys: SystemId,
    abbrevs: &'b BTreeMap<String, Formula>,
    bound: Vec<String>,
}

impl<'a, 'b> FormulaParser<'a, 'b> {
    /// Level 0: fixed-point binders, then implications.
    fn f0(&mut self) -> Result<Formula, ParseError> {
        self.cur.skip_ws();
        for (kw, mk) in [
            ("mu", Formula::Mu as fn(String, Box<Formula>) -> Formula),
            ("nu", Formula::Nu as fn(String, Box<Formula>) -> Formula),
        ] {
            if self.cur.eat_word(kw) {
                self.cur.skip_ws();
                let col = self.cur.column();
                let x = self
                    .cur
                    .take_word()
                    .ok_or_else(|| self.cur.err("expected a variable after the binder"))?;
                if !x.chars().next().unwrap().is_ascii_uppercase() || KEYWORDS.contains(&x) {
                    return Err(perr(
                        self.cur.line,
                        col,
                        format!("`{}` cannot be a fixed-point variable", x),
                    ));
                }
                self.cur.expect(b'.')?;
                self.bound.push(x.to_string());
                let body = self.f0()?;
                self.bound.pop();
                return Ok(mk(x.to_string(), Box::new(body)));
            }
        }
        self.f1()
    }

    /// Level 1: `->` and `-o`, right-associative.
    fn f1(&mut self) -> Result<Formula, ParseError> {
        let l = self.f2()?;
        self.cur.skip_ws();
        if self.cur.peek() == Some(b'-') {
            let save = self.cur.pos;
            self.cur.pos += 1;
            match self.cur.peek() {
                Some(b'>') => {
                    self.cur.pos += 1;
                    let r = self.f1()?;
                    return Ok(Formula::Impl(Box::new(l), Box::new(r)));
                }
                Some(b'o') if !self.cur.text.get(self.cur.pos + 1).copied().map_or(false, is_word_char) => {
                    self.cur.pos += 1;
                    let r = self.f1()?;
                    return Ok(Formula::LinImpl(Box::new(l), Box::new(r)));
                }
                _ => {
                    self.cur.pos = save;
                    return Err(self.cur.err("expected `->` or `-o`"));
                }
            }
        }
        Ok(l)
    }

    /// Level 2: `+`, left-associative.
    fn f2(&mut self) -> Result<Formula, ParseError> {
        let mut l = self.f3()?;
        while self.cur.eat(b'+') {
            let r = self.f3()?;
            l = if self.sys.is_classical() {
                Formula::Or(Box::new(l), Box::new(r))
            } else {
                Formula::Plus(Box::new(l), Box::new(r))
            };
        }
        Ok(l)
    }

    /// Level 3: `&`, left-associative.
    fn f3(&mut self) -> Result<Formula, ParseError> {
        let mut l = self.f4()?;
        while self.cur.eat(b'&') {
            let r = self.f4()?;
            l = if self.sys.is_classical() {
                Formula::And(Box::new(l), Box::new(r))
            } else {
                Formula::With(Box::new(l), Box::new(r))
            };
        }
        Ok(l)
    }

    /// Level 4: `par`, left-associative.
    fn f4(&mut self) -> Result<Formula, ParseError> {
        let mut l = self.f5()?;
        while self.cur.peek_word() == Some("par") {
            self.cur.take_word();
            let r = self.f5()?;
            l = Formula::Par(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    /// Level 5: `*`, left-associative.
    fn f5(&mut self) -> Result<Formula, ParseError> {
        let mut l = self.f6()?;
        while self.cur.eat(b'*') {
            let r = self.f6()?;
            l = Formula::Tensor(Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    /// Level 6: prefix operators, units, atoms, variables, parentheses.
    fn f6(&mut self) -> Result<Formula, ParseError> {
        self.cur.skip_ws();
        if self.cur.eat(b'!') {
            return Ok(Formula::Bang(Box::new(self.f6()?)));
        }
        if self.cur.eat(b'?') {
            return Ok(Formula::Quest(Box::new(self.f6()?)));
        }
        if self.cur.eat(b'(') {
            let f = self.f0()?;
            self.cur.expect(b')')?;
            return Ok(f);
        }
        if self.cur.eat(b'1') {
            return Ok(Formula::One);
        }
        if self.cur.eat(b'0') {
            return Ok(Formula::Zero);
        }
        let col = self.cur.column();
        let w = self
            .cur
            .take_word()
            .ok_or_else(|| self.cur.err("expected a formula"))?;
        match w {
            "box" => Ok(Formula::Box(Box::new(self.f6()?))),
            "dia" => Ok(Formula::Diamond(Box::new(self.f6()?))),
            "neg" => Ok(Formula::Neg(Box::new(self.f6()?))),
            "top" => Ok(Formula::Top),
            "bot" => Ok(Formula::Bot),
            "T" => Ok(Formula::ClTrue),
            "F" => Ok(Formula::ClFalse),
            "mu" | "nu" | "par" => Err(perr(
                self.cur.line,
                col,
                format!("`{}` is not allowed here; parenthesize", w),
            )),
            _ if w.chars().next().unwrap().is_ascii_uppercase() => {
                if self.bound.iter().any(|b| b == w) {
                    Ok(Formula::Var(w.to_string()))
                } else if let Some(body) = self.abbrevs.get(w) {
                    Ok(body.clone())
                } else {
                    Ok(Formula::Var(w.to_string()))
                }
            }
            _ => Ok(Formula::Atom(w.to_string())),
        }
    }
}

fn parse_formula_at(
    text: &str,
    line: usize,
    col0: usize,
    sys: SystemId,
    abbrevs: &BTreeMap<String, Formula>,
) -> Result<(Formula, usize), ParseError> {
    let mut p = FormulaParser {
        cur: Cursor::new(text, line, col0),
        sys,
        abbrevs,
        bound: Vec::new(),
    };
    let f = p.f0()?;
    Ok((f, p.cur.pos))
}

/// Parse one formula; the whole string must be consumed.
pub fn parse_formula(text: &str, sys: SystemId) -> Result<Formula, ParseError> {
    parse_formula_with(text, sys, &BTreeMap::new())
}

/// Parse one formula against a set of named abbreviations.
pub fn parse_formula_with(
    text: &str,
    sys: SystemId,
    abbrevs: &BTreeMap<String, Formula>,
) -> Result<Formula, ParseError> {
    let (f, used) = parse_formula_at(text, 1, 0, sys, abbrevs)?;
    let mut cur = Cursor::new(text, 1, 0);
    cur.pos = used;
    if !cur.at_end() {
        return Err(cur.err("unexpected trailing input after formula"));
    }
    Ok(f)
}

fn parse_sequent_at(
    text: &str,
    line: usize,
    col0: usize,
    sys: SystemId,
    abbrevs: &BTreeMap<String, Formula>,
) -> Result<Sequent, ParseError> {
    let mut cur = Cursor::new(text, line, col0);
    let mut ante = Vec::new();
    let mut succ = Vec::new();

    // Antecedent: formulas separated by commas, up to `|-`.
    cur.skip_ws();
    let mut expect_formula = false;
    loop {
        cur.skip_ws();
        if cur.peek() == Some(b'|') {
            if expect_formula {
                return Err(cur.err("expected a formula before `|-`"));
            }
            break;
        }
        if cur.peek().is_none() {
            return Err(cur.err("expected `|-`"));
        }
        let rest = std::str::from_utf8(&cur.text[cur.pos..]).unwrap();
        let (f, used) = parse_formula_at(rest, line, col0 + cur.pos, sys, abbrevs)?;
        ante.push(f);
        cur.pos += used;
        expect_formula = cur.eat(b',');
        if !expect_formula {
            cur.skip_ws();
            if cur.peek() != Some(b'|') {
                return Err(cur.err("expected `,` or `|-`"));
            }
        }
    }
    cur.expect(b'|')?;
    if cur.bump() != Some(b'-') {
        return Err(cur.err("expected `|-`"));
    }

    // Succedent: formulas separated by commas, up to end of input.
    loop {
        cur.skip_ws();
        if cur.peek().is_none() {
            break;
        }
        let rest = std::str::from_utf8(&cur.text[cur.pos..]).unwrap();
        let (f, used) = parse_formula_at(rest, line, col0 + cur.pos, sys, abbrevs)?;
        succ.push(f);
        cur.pos += used;
        if !cur.eat(b',') {
            if !cur.at_end() {
                return Err(cur.err("expected `,` or end of sequent"));
            }
            break;
        }
    }
    Ok(Sequent::new(ante, succ))
}

/// Parse a sequent `A, B |- C` (either side may be empty).
pub fn parse_sequent(text: &str, sys: SystemId) -> Result<Sequent, ParseError> {
    parse_sequent_at(text, 1, 0, sys, &BTreeMap::new())
}

// ---- document parsing ----

/// Principal info as written in a node line, ranks not yet resolved.
#[derive(Debug, Clone, PartialEq)]
enum RawParams {
    None,
    Principal(Side, usize),
    Split {
        pos: (Side, usize),
        left: Vec<(Side, usize)>,
    },
    CutOn {
        formula: Formula,
        left: Vec<(Side, usize)>,
    },
    Swap {
        side: Side,
        index: usize,
    },
    Perm {
        ante: Vec<usize>,
        succ: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum RawChild {
    Node(u32),
    Back(u32),
}

#[derive(Debug, Clone)]
struct RawNode {
    line: usize,
    rule: RuleId,
    params: RawParams,
    children: Vec<RawChild>,
}

fn parse_pos_ref(cur: &mut Cursor) -> Result<(Side, usize), ParseError> {
    cur.skip_ws();
    let col = cur.column();
    let w = cur
        .take_word()
        .ok_or_else(|| cur.err("expected an occurrence reference like `a0` or `s1`"))?;
    let side = match w.as_bytes()[0] {
        b'a' => Side::Ante,
        b's' => Side::Succ,
        _ => {
            return Err(perr(
                cur.line,
                col,
                format!("expected `a<rank>` or `s<rank>`, got `{}`", w),
            ))
        }
    };
    let rank: usize = w[1..]
        .parse()
        .map_err(|_| perr(cur.line, col, format!("expected `a<rank>` or `s<rank>`, got `{}`", w)))?;
    Ok((side, rank))
}

fn parse_side_letter(cur: &mut Cursor, want: &str) -> Result<Side, ParseError> {
    cur.skip_ws();
    let col = cur.column();
    match cur.take_word() {
        Some("a") => Ok(Side::Ante),
        Some("s") => Ok(Side::Succ),
        other => Err(perr(
            cur.line,
            col,
            format!("expected side letter `{}`, got `{}`", want, other.unwrap_or("")),
        )),
    }
}

fn parse_params(
    text: &str,
    line: usize,
    col0: usize,
    sys: SystemId,
    abbrevs: &BTreeMap<String, Formula>,
) -> Result<RawParams, ParseError> {
    let mut cur = Cursor::new(text, line, col0);
    cur.skip_ws();
    if cur.eat_word("on") {
        let rest = std::str::from_utf8(&cur.text[cur.pos..]).unwrap();
        let semi = rest.find(';').ok_or_else(|| cur.err("expected `;` after the cut formula"))?;
        let formula =
            match parse_formula_at(&rest[..semi], line, col0 + cur.pos, sys, abbrevs) {
                Ok((f, used)) => {
                    let tail = rest[..semi][used..].trim();
                    if !tail.is_empty() {
                        return Err(perr(
                            line,
                            col0 + cur.pos + used + 1,
                            "unexpected trailing input after the cut formula",
                        ));
                    }
                    f
                }
                Err(e) => return Err(e),
            };
        cur.pos += semi + 1;
        if !cur.eat_word("left") {
            return Err(cur.err("expected `left` after `;`"));
        }
        let mut left = Vec::new();
        while !cur.at_end() {
            left.push(parse_pos_ref(&mut cur)?);
        }
        return Ok(RawParams::CutOn { formula, left });
    }
    if cur.eat_word("swap") {
        let side = parse_side_letter(&mut cur, "a|s")?;
        let index = cur.take_usize()?;
        if !cur.at_end() {
            return Err(cur.err("unexpected trailing input in `swap`"));
        }
        return Ok(RawParams::Swap { side, index });
    }
    if cur.eat_word("perm") {
        cur.skip_ws();
        let col = cur.column();
        if parse_side_letter(&mut cur, "a")? != Side::Ante {
            return Err(perr(cur.line, col, "expected the `a` permutation first"));
        }
        let mut ante = Vec::new();
        loop {
            cur.skip_ws();
            if cur.peek() == Some(b';') || cur.peek().is_none() {
                break;
            }
            ante.push(cur.take_usize()?);
        }
        cur.expect(b';')?;
        cur.skip_ws();
        let col = cur.column();
        if parse_side_letter(&mut cur, "s")? != Side::Succ {
            return Err(perr(cur.line, col, "expected the `s` permutation second"));
        }
        let mut succ = Vec::new();
        while !cur.at_end() {
            succ.push(cur.take_usize()?);
        }
        return Ok(RawParams::Perm { ante, succ });
    }
    // `[s0]` or `[s0; left ...]`.
    let pos = parse_pos_ref(&mut cur)?;
    cur.skip_ws();
    if cur.eat(b';') {
        if !cur.eat_word("left") {
            return Err(cur.err("expected `left` after `;`"));
        }
        let mut left = Vec::new();
        while !cur.at_end() {
            left.push(parse_pos_ref(&mut cur)?);
        }
        return Ok(RawParams::Split { pos, left });
    }
    if !cur.at_end() {
        return Err(cur.err("unexpected trailing input in principal info"));
    }
    Ok(RawParams::Principal(pos.0, pos.1))
}

fn resolve_ref(
    seq: &Sequent,
    (side, rank): (Side, usize),
    node: NodeId,
    what: &str,
) -> Result<PosId, SemanticError> {
    let row = match side {
        Side::Ante => &seq.ante,
        Side::Succ => &seq.succ,
    };
    row.get(rank).map(|o| o.id).ok_or_else(|| {
        serr(
            vec![node],
            format!(
                "node {}: {} refers to {}{} but the sequent `{}` has only {} occurrence(s) on that side",
                node.0,
                what,
                match side {
                    Side::Ante => "a",
                    Side::Succ => "s",
                },
                rank,
                seq,
                row.len()
            ),
        )
    })
}

fn resolve_params(
    raw: &RawParams,
    seq: &Sequent,
    node: NodeId,
) -> Result<RuleParams, SemanticError> {
    Ok(match raw {
        RawParams::None => RuleParams::None,
        RawParams::Principal(side, rank) => {
            RuleParams::Principal(resolve_ref(seq, (*side, *rank), node, "the principal")?)
        }
        RawParams::Split { pos, left } => {
            let p = resolve_ref(seq, *pos, node, "the principal")?;
            let mut set = BTreeSet::new();
            for r in left {
                set.insert(resolve_ref(seq, *r, node, "a `left` entry")?);
            }
            RuleParams::Split { pos: p, left: set }
        }
        RawParams::CutOn { formula, left } => {
            let mut set = BTreeSet::new();
            for r in left {
                set.insert(resolve_ref(seq, *r, node, "a `left` entry")?);
            }
            RuleParams::CutOn {
                formula: formula.clone(),
                left: set,
            }
        }
        RawParams::Swap { side, index } => RuleParams::Swap {
            side: *side,
            index: *index,
        },
        RawParams::Perm { ante, succ } => RuleParams::Perm {
            ante: ante.clone(),
            succ: succ.clone(),
        },
    })
}

struct DocHeader {
    system: Option<(SystemId, usize)>,
    name: Option<String>,
    conclusion: Option<Sequent>,
    root: Option<(u32, usize)>,
    abbrevs: BTreeMap<String, Formula>,
}

/// Parse a proof document into a graph.
///
/// The graph keeps the node ids written in the file; synthesized back-edge
/// nodes receive fresh ids above them.  The result is not otherwise checked:
/// run [`crate::proof::check_proofgraph`] to validate it.
pub fn parse_document(src: &str) -> Result<ProofGraph, TextError> {
    let mut header = DocHeader {
        system: None,
        name: None,
        conclusion: None,
        root: None,
        abbrevs: BTreeMap::new(),
    };
    let mut table: BTreeMap<u32, RawNode> = BTreeMap::new();

    for (i, full_line) in src.lines().enumerate() {
        let lineno = i + 1;
        let line = match full_line.find('#') {
            Some(k) => &full_line[..k],
            None => full_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, lineno, 0);
        cur.skip_ws();
        let keyword_col = cur.column();
        if let Some(w) = cur.peek_word() {
            match w {
                "system" => {
                    cur.take_word();
                    cur.skip_ws();
                    let col = cur.column();
                    let name = cur
                        .take_word()
                        .ok_or_else(|| cur.err("expected a system name"))?;
                    let sys = SystemId::from_name(name).ok_or_else(|| {
                        perr(lineno, col, format!("unknown system `{}`", name))
                    })?;
                    if header.system.is_some() {
                        return Err(perr(lineno, keyword_col, "duplicate `system` line").into());
                    }
                    header.system = Some((sys, lineno));
                    if !cur.at_end() {
                        return Err(cur.err("unexpected trailing input").into());
                    }
                    continue;
                }
                "name" => {
                    if header.name.is_some() {
                        return Err(perr(lineno, keyword_col, "duplicate `name` line").into());
                    }
                    cur.take_word();
                    header.name = Some(line[cur.pos..].trim().to_string());
                    continue;
                }
                "let" => {
                    cur.take_word();
                    let sys = require_system(&header, lineno, keyword_col)?;
                    cur.skip_ws();
                    let col = cur.column();
                    let name = cur
                        .take_word()
                        .ok_or_else(|| cur.err("expected an abbreviation name"))?;
                    if !name.chars().next().unwrap().is_ascii_uppercase()
                        || KEYWORDS.contains(&name)
                    {
                        return Err(perr(
                            lineno,
                            col,
                            format!("abbreviation `{}` must start with an uppercase letter", name),
                        )
                        .into());
                    }
                    cur.expect(b'=')?;
                    let rest = std::str::from_utf8(&cur.text[cur.pos..]).unwrap();
                    let (f, used) =
                        parse_formula_at(rest, lineno, cur.pos, sys, &header.abbrevs)?;
                    if !rest[used..].trim().is_empty() {
                        return Err(perr(
                            lineno,
                            cur.pos + used + 1,
                            "unexpected trailing input after abbreviation body",
                        )
                        .into());
                    }
                    header.abbrevs.insert(name.to_string(), f);
                    continue;
                }
                "conclusion" => {
                    if header.conclusion.is_some() {
                        return Err(perr(lineno, keyword_col, "duplicate `conclusion` line").into());
                    }
                    cur.take_word();
                    let sys = require_system(&header, lineno, keyword_col)?;
                    let rest = std::str::from_utf8(&cur.text[cur.pos..]).unwrap();
                    header.conclusion =
                        Some(parse_sequent_at(rest, lineno, cur.pos, sys, &header.abbrevs)?);
                    continue;
                }
                "root" => {
                    if header.root.is_some() {
                        return Err(perr(lineno, keyword_col, "duplicate `root` line").into());
                    }
                    cur.take_word();
                    let id = cur.take_usize()?;
                    if !cur.at_end() {
                        return Err(cur.err("unexpected trailing input").into());
                    }
                    header.root = Some((id as u32, lineno));
                    continue;
                }
                _ => {}
            }
        }

        // Node line: `<id>: <rule> [<info>] -> <children>`.
        let sys = require_system(&header, lineno, keyword_col)?;
        let id = cur.take_usize().map_err(|_| {
            perr(
                lineno,
                keyword_col,
                "expected a header keyword or a node line `<id>: ...`",
            )
        })? as u32;
        cur.expect(b':')?;
        cur.skip_ws();
        // Rule names may contain `!` and `?`, so take everything up to
        // whitespace rather than an identifier token.
        let start = cur.pos;
        let rule_col = cur.column();
        while matches!(cur.peek(), Some(c) if c != b' ' && c != b'\t') {
            cur.pos += 1;
        }
        let rule_name = std::str::from_utf8(&cur.text[start..cur.pos]).unwrap();
        if rule_name.is_empty() {
            return Err(cur.err("expected a rule name").into());
        }
        let rule = RuleId::from_name(rule_name).ok_or_else(|| {
            perr(lineno, rule_col, format!("unknown rule `{}`", rule_name))
        })?;

        cur.skip_ws();
        let params = if cur.peek() == Some(b'[') {
            cur.pos += 1;
            let rest = std::str::from_utf8(&cur.text[cur.pos..]).unwrap();
            let close = rest
                .find(']')
                .ok_or_else(|| cur.err("unterminated `[`"))?;
            let raw = parse_params(&rest[..close], lineno, cur.pos, sys, &header.abbrevs)?;
            cur.pos += close + 1;
            raw
        } else {
            RawParams::None
        };

        let mut children = Vec::new();
        cur.skip_ws();
        if cur.peek().is_some() {
            if cur.bump() != Some(b'-') || cur.bump() != Some(b'>') {
                return Err(cur.err("expected `->` before the children").into());
            }
            loop {
                cur.skip_ws();
                if cur.peek().is_none() {
                    break;
                }
                if cur.eat_word("back") {
                    children.push(RawChild::Back(cur.take_usize()? as u32));
                } else {
                    children.push(RawChild::Node(cur.take_usize()? as u32));
                }
            }
            if children.is_empty() {
                return Err(cur.err("expected at least one child after `->`").into());
            }
        }

        if table.contains_key(&id) {
            return Err(serr(
                vec![NodeId(id)],
                format!("node {} is defined more than once", id),
            )
            .into());
        }
        table.insert(
            id,
            RawNode {
                line: lineno,
                rule,
                params,
                children,
            },
        );
    }

    let (system, _) = header
        .system
        .ok_or_else(|| perr(1, 1, "missing `system` line"))?;
    let name = header.name.ok_or_else(|| perr(1, 1, "missing `name` line"))?;
    let conclusion = header
        .conclusion
        .ok_or_else(|| perr(1, 1, "missing `conclusion` line"))?;
    let (root, root_line) = header.root.ok_or_else(|| perr(1, 1, "missing `root` line"))?;
    if !table.contains_key(&root) {
        return Err(perr(
            root_line,
            1,
            format!("root refers to node {} which has no node line", root),
        )
        .into());
    }

    let mut g = ProofGraph::new(system, name);
    g.root = NodeId(root);
    let mut next = table.keys().max().copied().unwrap_or(0) + 1;
    let mut built: BTreeMap<u32, Sequent> = BTreeMap::new();
    let mut building: BTreeSet<u32> = BTreeSet::new();
    build_node(
        root, &conclusion, &table, &mut g, &mut built, &mut building, &mut next,
    )?;

    let unused: Vec<NodeId> = table
        .keys()
        .filter(|k| !built.contains_key(k))
        .map(|k| NodeId(*k))
        .collect();
    if !unused.is_empty() {
        let list = unused
            .iter()
            .map(|n| n.0.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        return Err(serr(unused, format!("unreachable node line(s): {}", list)).into());
    }
    Ok(g)
}

fn require_system(
    header: &DocHeader,
    line: usize,
    col: usize,
) -> Result<SystemId, ParseError> {
    header
        .system
        .map(|(s, _)| s)
        .ok_or_else(|| perr(line, col, "the `system` line must come first"))
}

fn build_node(
    id: u32,
    conclusion: &Sequent,
    table: &BTreeMap<u32, RawNode>,
    g: &mut ProofGraph,
    built: &mut BTreeMap<u32, Sequent>,
    building: &mut BTreeSet<u32>,
    next: &mut u32,
) -> Result<(), SemanticError> {
    if let Some(prev) = built.get(&id) {
        if prev.same_formulas(conclusion) {
            return Ok(());
        }
        return Err(serr(
            vec![NodeId(id)],
            format!(
                "node {} is reached with conflicting sequents `{}` and `{}`",
                id, prev, conclusion
            ),
        ));
    }
    if !building.insert(id) {
        return Err(serr(
            vec![NodeId(id)],
            format!("node {} lies on a cycle without a back edge", id),
        ));
    }
    let raw = table.get(&id).ok_or_else(|| {
        serr(
            vec![NodeId(id)],
            format!("node {} is referenced but has no node line", id),
        )
    })?;

    if !raw.rule.admitted(g.system) {
        building.remove(&id);
        return Err(serr(
            vec![NodeId(id)],
            format!(
                "node {}: rule {} is not part of system {}",
                id,
                raw.rule.name(),
                g.system.name()
            ),
        ));
    }

    let params = resolve_params(&raw.params, conclusion, NodeId(id))?;
    let app = instantiate(raw.rule, conclusion.clone(), params).map_err(|e| {
        serr(
            vec![NodeId(id)],
            format!("node {} (line {}): {}", id, raw.line, e),
        )
    })?;
    if app.premises.len() != raw.children.len() {
        building.remove(&id);
        return Err(serr(
            vec![NodeId(id)],
            format!(
                "node {}: rule {} has {} premise(s) but {} child(ren) are listed",
                id,
                raw.rule.name(),
                app.premises.len(),
                raw.children.len()
            ),
        ));
    }

    let premises = app.premises.clone();
    let mut child_ids = Vec::with_capacity(raw.children.len());
    for (k, c) in raw.children.iter().enumerate() {
        match c {
            RawChild::Node(cid) => {
                build_node(*cid, &premises[k], table, g, built, building, next)?;
                child_ids.push(NodeId(*cid));
            }
            RawChild::Back(target) => {
                if !table.contains_key(target) {
                    return Err(serr(
                        vec![NodeId(id), NodeId(*target)],
                        format!(
                            "node {}: back edge to node {} which has no node line",
                            id, target
                        ),
                    ));
                }
                let bid = NodeId(*next);
                *next += 1;
                g.nodes.insert(
                    bid,
                    Node::Back {
                        conclusion: premises[k].clone(),
                        target: NodeId(*target),
                    },
                );
                child_ids.push(bid);
            }
        }
    }
    g.nodes.insert(
        NodeId(id),
        Node::Rule {
            app,
            children: child_ids,
        },
    );
    building.remove(&id);
    built.insert(id, conclusion.clone());
    Ok(())
}

// ---- printing ----

fn side_rank(seq: &Sequent, p: PosId, node: NodeId) -> Result<(Side, usize), SemanticError> {
    seq.find(p).ok_or_else(|| {
        serr(
            vec![node],
            format!("node {}: a parameter occurrence is not in the conclusion", node.0),
        )
    })
}

fn write_ref(out: &mut String, (side, rank): (Side, usize)) {
    out.push(match side {
        Side::Ante => 'a',
        Side::Succ => 's',
    });
    out.push_str(&rank.to_string());
}

fn write_params(out: &mut String, app: &RuleApp, node: NodeId) -> Result<(), SemanticError> {
    match &app.params {
        RuleParams::None => {}
        RuleParams::Principal(p) => {
            out.push_str(" [");
            write_ref(out, side_rank(&app.conclusion, *p, node)?);
            out.push(']');
        }
        RuleParams::Split { pos, left } => {
            out.push_str(" [");
            write_ref(out, side_rank(&app.conclusion, *pos, node)?);
            out.push_str("; left");
            let mut refs: Vec<(Side, usize)> = Vec::new();
            for p in left {
                refs.push(side_rank(&app.conclusion, *p, node)?);
            }
            refs.sort();
            for r in refs {
                out.push(' ');
                write_ref(out, r);
            }
            out.push(']');
        }
        RuleParams::CutOn { formula, left } => {
            out.push_str(" [on ");
            out.push_str(&formula.to_string());
            out.push_str("; left");
            let mut refs: Vec<(Side, usize)> = Vec::new();
            for p in left {
                refs.push(side_rank(&app.conclusion, *p, node)?);
            }
            refs.sort();
            for r in refs {
                out.push(' ');
                write_ref(out, r);
            }
            out.push(']');
        }
        RuleParams::Swap { side, index } => {
            out.push_str(" [swap ");
            out.push(match side {
                Side::Ante => 'a',
                Side::Succ => 's',
            });
            out.push(' ');
            out.push_str(&index.to_string());
            out.push(']');
        }
        RuleParams::Perm { ante, succ } => {
            out.push_str(" [perm a");
            for k in ante {
                out.push(' ');
                out.push_str(&k.to_string());
            }
            out.push_str("; s");
            for k in succ {
                out.push(' ');
                out.push_str(&k.to_string());
            }
            out.push(']');
        }
    }
    Ok(())
}

/// Print a graph as a canonical document: preorder node numbering, expanded
/// formulas, fixed whitespace.  Fails on graphs containing multicut nodes,
/// which have no document syntax.
pub fn print_document(g: &ProofGraph) -> Result<String, SemanticError> {
    // Assign preorder numbers to every rule node reachable from the root,
    // treating back edges as references.  Back targets are normally
    // ancestors; any that are not get numbered in a follow-up sweep so that
    // printing never fails on a parseable graph.
    let mut order: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut listing: Vec<NodeId> = Vec::new();
    let mut pending: Vec<NodeId> = vec![g.root];
    while let Some(start) = pending.pop() {
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            let id = match g.node(id) {
                Node::Back { target, .. } => {
                    if !order.contains_key(target) {
                        pending.push(*target);
                    }
                    continue;
                }
                _ => id,
            };
            if order.contains_key(&id) {
                continue;
            }
            match g.node(id) {
                Node::Mcut { .. } => {
                    return Err(serr(
                        vec![id],
                        format!("node {}: multicut nodes have no document form", id.0),
                    ))
                }
                Node::Rule { children, .. } => {
                    order.insert(id, listing.len() as u32);
                    listing.push(id);
                    for c in children.iter().rev() {
                        match g.node(*c) {
                            Node::Back { target, .. } => {
                                if !order.contains_key(target) {
                                    // Targets are ancestors in well-formed
                                    // graphs; defer others.
                                    let t = *target;
                                    if !stack.contains(&t) {
                                        pending.push(t);
                                    }
                                }
                            }
                            _ => stack.push(*c),
                        }
                    }
                }
                Node::Back { .. } => unreachable!(),
            }
        }
    }

    let mut out = String::new();
    out.push_str("system ");
    out.push_str(g.system.name());
    out.push('\n');
    out.push_str("name ");
    out.push_str(&g.name);
    out.push('\n');
    out.push_str("conclusion ");
    out.push_str(&g.end_sequent().to_string());
    out.push('\n');
    out.push_str("root 0\n\n");

    for id in &listing {
        let (app, children) = match g.node(*id) {
            Node::Rule { app, children } => (app, children),
            _ => unreachable!(),
        };
        out.push_str(&order[id].to_string());
        out.push_str(": ");
        out.push_str(app.schema.name());
        write_params(&mut out, app, *id)?;
        if !children.is_empty() {
            out.push_str(" ->");
            for c in children {
                out.push(' ');
                match g.node(*c) {
                    Node::Back { target, .. } => {
                        out.push_str("back ");
                        out.push_str(&order[target].to_string());
                    }
                    _ => out.push_str(&order[c].to_string()),
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Print a finite proof-tree prefix in the document syntax.  Suspended
/// subproofs appear as `suspended` pseudo-leaves, so prefix documents are for
/// reading and diffing, not for re-parsing.
pub fn print_prefix(system: SystemId, name: &str, p: &TreePrefix) -> String {
    fn count(n: &PrefixNode) -> u32 {
        match n {
            PrefixNode::Rule { children, .. } => {
                1 + children.iter().map(count).sum::<u32>()
            }
            PrefixNode::Suspension { .. } => 1,
        }
    }
    fn emit(n: &PrefixNode, next: &mut u32, out: &mut String) {
        let id = *next;
        *next += 1;
        out.push_str(&id.to_string());
        out.push_str(": ");
        match n {
            PrefixNode::Suspension { .. } => {
                out.push_str("suspended\n");
            }
            PrefixNode::Rule { app, children } => {
                out.push_str(app.schema.name());
                // Prefix nodes come from checked graphs, so parameter
                // occurrences are present in their conclusions.
                let _ = write_params(out, app, NodeId(id));
                if !children.is_empty() {
                    out.push_str(" ->");
                    let mut k = *next;
                    for c in children {
                        out.push(' ');
                        out.push_str(&k.to_string());
                        k += count(c);
                    }
                }
                out.push('\n');
                for c in children {
                    emit(c, next, out);
                }
            }
        }
    }

    let mut out = String::new();
    out.push_str("system ");
    out.push_str(system.name());
    out.push('\n');
    out.push_str("name ");
    out.push_str(name);
    out.push('\n');
    out.push_str("conclusion ");
    out.push_str(&p.root.conclusion().to_string());
    out.push('\n');
    out.push_str("root 0\n\n");
    let mut next = 0;
    emit(&p.root, &mut next, &mut out);
    out
}

// ---- trace records ----

/// One reduction step as a single line:
///
/// ```text
/// step 3 mcut 17 kind key_exp 0 1 age 2 queue 4 rules ?d,?p end  |- ?nat
/// ```
///
/// The `end` field runs to the end of the line.  The prefix up to `age` is
/// enough to replay the step.
pub fn format_trace_step(s: &TraceStep) -> String {
    let mut out = format!("step {} mcut {} kind ", s.index, s.redex.mcut.0);
    match &s.redex.kind {
        RedexKind::Principal { a, b } => out.push_str(&format!("principal {} {}", a, b)),
        RedexKind::Commutative { premise, side } => out.push_str(&format!(
            "commutative {} {}",
            premise,
            match side {
                Side::Ante => "ante",
                Side::Succ => "succ",
            }
        )),
        RedexKind::KeyExp { promo, derelict } => {
            out.push_str(&format!("key_exp {} {}", promo, derelict))
        }
        RedexKind::Axiom { premise } => out.push_str(&format!("axiom {}", premise)),
        RedexKind::CutAbsorb { premise } => out.push_str(&format!("cut_absorb {}", premise)),
        RedexKind::StructPrincipal { structural, partner } => {
            out.push_str(&format!("struct_principal {} {}", structural, partner))
        }
    }
    out.push_str(&format!(
        " age {} queue {} rules {} end {}",
        s.age,
        s.queue_len,
        s.rules.join(","),
        s.endsequent
    ));
    out
}

/// Format a whole trace, one record per line, with a trailing newline when
/// nonempty.
pub fn format_trace(steps: &[TraceStep]) -> String {
    let mut out = String::new();
    for s in steps {
        out.push_str(&format_trace_step(s));
        out.push('\n');
    }
    out
}

/// The replayable part of a parsed trace record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub index: usize,
    pub redex: Redex,
    pub endsequent: String,
}

/// Parse one trace record line.
pub fn parse_trace_line(text: &str, lineno: usize) -> Result<TraceRecord, ParseError> {
    let mut cur = Cursor::new(text, lineno, 0);
    let expect_kw = |cur: &mut Cursor, kw: &str| -> Result<(), ParseError> {
        if cur.eat_word(kw) {
            Ok(())
        } else {
            Err(cur.err(format!("expected `{}`", kw)))
        }
    };
    expect_kw(&mut cur, "step")?;
    let index = cur.take_usize()?;
    expect_kw(&mut cur, "mcut")?;
    let mcut = NodeId(cur.take_usize()? as u32);
    expect_kw(&mut cur, "kind")?;
    cur.skip_ws();
    let col = cur.column();
    let kw = cur.take_word().ok_or_else(|| cur.err("expected a redex kind"))?;
    let kind = match kw {
        "principal" => RedexKind::Principal {
            a: cur.take_usize()?,
            b: cur.take_usize()?,
        },
        "commutative" => {
            let premise = cur.take_usize()?;
            cur.skip_ws();
            let scol = cur.column();
            let side = match cur.take_word() {
                Some("ante") => Side::Ante,
                Some("succ") => Side::Succ,
                _ => return Err(perr(lineno, scol, "expected `ante` or `succ`")),
            };
            RedexKind::Commutative { premise, side }
        }
        "key_exp" => RedexKind::KeyExp {
            promo: cur.take_usize()?,
            derelict: cur.take_usize()?,
        },
        "axiom" => RedexKind::Axiom {
            premise: cur.take_usize()?,
        },
        "cut_absorb" => RedexKind::CutAbsorb {
            premise: cur.take_usize()?,
        },
        "struct_principal" => RedexKind::StructPrincipal {
            structural: cur.take_usize()?,
            partner: cur.take_usize()?,
        },
        other => {
            return Err(perr(lineno, col, format!("unknown redex kind `{}`", other)))
        }
    };
    expect_kw(&mut cur, "age")?;
    let _age = cur.take_usize()?;
    expect_kw(&mut cur, "queue")?;
    let _queue = cur.take_usize()?;
    expect_kw(&mut cur, "rules")?;
    cur.skip_ws();
    while matches!(cur.peek(), Some(c) if c != b' ' && c != b'\t') {
        cur.pos += 1;
    }
    expect_kw(&mut cur, "end")?;
    let endsequent = std::str::from_utf8(&cur.text[cur.pos..])
        .unwrap()
        .strip_prefix(' ')
        .unwrap_or("")
        .to_string();
    Ok(TraceRecord {
        index,
        redex: Redex {
            mcut,
            kind,
            positions: Vec::new(),
        },
        endsequent,
    })
}

/// Parse a whole trace file (blank lines and `#` comments allowed).
pub fn parse_trace(src: &str) -> Result<Vec<TraceRecord>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = match line.find('#') {
            Some(k) => &line[..k],
            None => line,
        };
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_trace_line(line, i + 1)?);
    }
    Ok(out)
}
