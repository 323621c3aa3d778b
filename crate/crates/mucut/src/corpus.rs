//! Built-in example proofs and randomized proof generators.
//!
//! The fixed corpus contains the standard small circular proofs: the diamond
//! stream identity, the inconsistent trivial loop, the numeral family with
//! its infinite variants, and the `double` function on numerals. All of them
//! are built through [`instantiate`], so they satisfy every well-formedness
//! check by construction.

use crate::calculus::{instantiate, PosId, RuleId, RuleParams, Sequent};
use crate::formula::{self as fml, Formula, SystemId};
use crate::proof::{Node, NodeId, ProofGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Nat := mu X. T + X.
pub fn nat() -> Formula {
    fml::mu("X", fml::or(Formula::ClTrue, fml::var("X")))
}

/// coNat := nu X. T + X.
pub fn conat() -> Formula {
    fml::nu("X", fml::or(Formula::ClTrue, fml::var("X")))
}

fn placeholder() -> Node {
    Node::Back {
        conclusion: Sequent::new(vec![], vec![]),
        target: NodeId(u32::MAX),
    }
}

fn rule(g: &mut ProofGraph, schema: RuleId, concl: Sequent, params: RuleParams, children: Vec<NodeId>) -> NodeId {
    let app = instantiate(schema, concl, params).unwrap_or_else(|e| panic!("corpus: {}", e));
    g.add(Node::Rule { app, children })
}

/// The circular identity proof of `F |- F` for `F := nu X. dia X`, built as
/// a cut between two copies of the one-loop subproof (nu_l, nu_r, dia_p,
/// back-edge).
pub fn diamond_stream() -> ProofGraph {
    let f = fml::nu("X", fml::dia(fml::var("X")));
    let mut g = ProofGraph::new(SystemId::MuLkBox, "diamond_stream");

    let sub = |g: &mut ProofGraph, concl: Sequent| -> NodeId {
        let m0 = g.add(placeholder());
        let nul = instantiate(RuleId::NuL, concl, RuleParams::Principal(PosId(0))).unwrap();
        let s1 = nul.premises[0].clone();
        let p_succ = s1.succ[0].id;
        let nur = instantiate(RuleId::NuR, s1, RuleParams::Principal(p_succ)).unwrap();
        let s2 = nur.premises[0].clone();
        let p_ante = s2.ante[0].id;
        let diap = instantiate(RuleId::DiaP, s2, RuleParams::Principal(p_ante)).unwrap();
        let s3 = diap.premises[0].clone();
        let m3 = g.add(Node::Back {
            conclusion: s3,
            target: m0,
        });
        let m2 = g.add(Node::Rule {
            app: diap,
            children: vec![m3],
        });
        let m1 = g.add(Node::Rule {
            app: nur,
            children: vec![m2],
        });
        g.nodes.insert(
            m0,
            Node::Rule {
                app: nul,
                children: vec![m1],
            },
        );
        m0
    };

    let concl = Sequent::new(vec![f.clone()], vec![f.clone()]);
    let left_pos = concl.ante[0].id;
    let cut = instantiate(
        RuleId::Cut,
        concl,
        RuleParams::CutOn {
            formula: f,
            left: BTreeSet::from([left_pos]),
        },
    )
    .unwrap();
    let c1 = sub(&mut g, cut.premises[0].clone());
    let c2 = sub(&mut g, cut.premises[1].clone());
    let root = g.add(Node::Rule {
        app: cut,
        children: vec![c1, c2],
    });
    g.root = root;
    g
}

/// The inconsistent pre-proof of `a |- b`: a cut on `nu X. X` whose premises
/// loop on themselves with nu_r and nu_l.
pub fn trivial_loop() -> ProofGraph {
    let gformula = fml::nu("X", fml::var("X"));
    let mut g = ProofGraph::new(SystemId::MuLk, "trivial_loop");
    let concl = Sequent::new(vec![fml::atom("a")], vec![fml::atom("b")]);
    let left: BTreeSet<PosId> = concl.ids().collect();
    let cut = instantiate(
        RuleId::Cut,
        concl,
        RuleParams::CutOn {
            formula: gformula,
            left,
        },
    )
    .unwrap();

    // Left premise a |- G, b: nu_r on G, loop.
    let s1 = cut.premises[0].clone();
    let p = s1.succ[0].id;
    let n1 = g.add(placeholder());
    let nur = instantiate(RuleId::NuR, s1, RuleParams::Principal(p)).unwrap();
    let back1 = g.add(Node::Back {
        conclusion: nur.premises[0].clone(),
        target: n1,
    });
    g.nodes.insert(
        n1,
        Node::Rule {
            app: nur,
            children: vec![back1],
        },
    );

    // Right premise G |-: nu_l on G, loop.
    let s2 = cut.premises[1].clone();
    let p = s2.ante[0].id;
    let n2 = g.add(placeholder());
    let nul = instantiate(RuleId::NuL, s2, RuleParams::Principal(p)).unwrap();
    let back2 = g.add(Node::Back {
        conclusion: nul.premises[0].clone(),
        target: n2,
    });
    g.nodes.insert(
        n2,
        Node::Rule {
            app: nul,
            children: vec![back2],
        },
    );

    let root = g.add(Node::Rule {
        app: cut,
        children: vec![n1, n2],
    });
    g.root = root;
    g
}

/// The finite numeral `|- Nat` with value `n`: mu_r, or_r2 applied `n`
/// times around the zero proof (mu_r, or_r1, T).
pub fn numeral(n: usize) -> ProofGraph {
    let mut g = ProofGraph::new(SystemId::MuLk, format!("numeral_{}", n));
    let mut root = numeral_zero(&mut g);
    for _ in 0..n {
        root = numeral_step(&mut g, root);
    }
    g.root = root;
    g
}

// The zero proof of |- Nat.
fn numeral_zero(g: &mut ProofGraph) -> NodeId {
    let s0 = Sequent::new(vec![], vec![nat()]);
    let mu = instantiate(RuleId::MuR, s0, RuleParams::Principal(PosId(0))).unwrap();
    let s1 = mu.premises[0].clone();
    let or1 = instantiate(RuleId::OrR1, s1, RuleParams::Principal(PosId(0))).unwrap();
    let s2 = or1.premises[0].clone();
    let t = instantiate(RuleId::ClTrueR, s2, RuleParams::Principal(PosId(0))).unwrap();
    let leaf = g.add(Node::Rule {
        app: t,
        children: vec![],
    });
    let n_or = g.add(Node::Rule {
        app: or1,
        children: vec![leaf],
    });
    g.add(Node::Rule {
        app: mu,
        children: vec![n_or],
    })
}

// Wrap an existing proof of |- Nat with one successor (mu_r, or_r2).
fn numeral_step(g: &mut ProofGraph, below: NodeId) -> NodeId {
    let s0 = Sequent::new(vec![], vec![nat()]);
    let mu = instantiate(RuleId::MuR, s0, RuleParams::Principal(PosId(0))).unwrap();
    let s1 = mu.premises[0].clone();
    let or2 = instantiate(RuleId::OrR2, s1, RuleParams::Principal(PosId(0))).unwrap();
    let n_or = g.add(Node::Rule {
        app: or2,
        children: vec![below],
    });
    g.add(Node::Rule {
        app: mu,
        children: vec![n_or],
    })
}

/// The invalid infinite numeral: mu_r, or_r2 looping on itself.
pub fn numeral_infinite() -> ProofGraph {
    looping_numeral(SystemId::MuLk, "pi_inf", nat(), RuleId::MuR)
}

/// The valid infinite conumeral over coNat: nu_r, or_r2 looping on itself.
pub fn conumeral_infinite() -> ProofGraph {
    looping_numeral(SystemId::MuLk, "conat_inf", conat(), RuleId::NuR)
}

fn looping_numeral(sys: SystemId, name: &str, f: Formula, delta: RuleId) -> ProofGraph {
    let mut g = ProofGraph::new(sys, name);
    let s0 = Sequent::new(vec![], vec![f]);
    let n0 = g.add(placeholder());
    let d = instantiate(delta, s0, RuleParams::Principal(PosId(0))).unwrap();
    let s1 = d.premises[0].clone();
    let or2 = instantiate(RuleId::OrR2, s1, RuleParams::Principal(PosId(0))).unwrap();
    let back = g.add(Node::Back {
        conclusion: or2.premises[0].clone(),
        target: n0,
    });
    let n_or = g.add(Node::Rule {
        app: or2,
        children: vec![back],
    });
    g.nodes.insert(
        n0,
        Node::Rule {
            app: d,
            children: vec![n_or],
        },
    );
    g.root = n0;
    g
}

/// The `double` function on numerals, `Nat |- Nat`: mu_l, or_l; the zero
/// branch answers zero, the successor branch produces two successors and
/// loops back to the root.
pub fn double_fn() -> ProofGraph {
    let mut g = ProofGraph::new(SystemId::MuLk, "double");
    let s0 = Sequent::new(vec![nat()], vec![nat()]);
    let n0 = g.add(placeholder());

    let mul = instantiate(RuleId::MuL, s0, RuleParams::Principal(PosId(0))).unwrap();
    let s1 = mul.premises[0].clone(); // T + Nat |- Nat
    let orl = instantiate(RuleId::OrL, s1, RuleParams::Principal(PosId(0))).unwrap();

    // Zero branch: T |- Nat by mu_r, or_r1, ax.
    let sz = orl.premises[0].clone();
    let mur_z = instantiate(RuleId::MuR, sz, RuleParams::Principal(PosId(1))).unwrap();
    let sz1 = mur_z.premises[0].clone();
    let or1 = instantiate(RuleId::OrR1, sz1, RuleParams::Principal(PosId(1))).unwrap();
    let sz2 = or1.premises[0].clone();
    let ax = instantiate(RuleId::Ax, sz2, RuleParams::None).unwrap();
    let n_ax = g.add(Node::Rule {
        app: ax,
        children: vec![],
    });
    let n_or1 = g.add(Node::Rule {
        app: or1,
        children: vec![n_ax],
    });
    let n_mur_z = g.add(Node::Rule {
        app: mur_z,
        children: vec![n_or1],
    });

    // Successor branch: Nat |- Nat by mu_r, or_r2, mu_r, or_r2, loop.
    let mut cur = orl.premises[1].clone(); // Nat |- Nat
    let mut tops: Vec<(RuleId, crate::calculus::RuleApp)> = Vec::new();
    for schema in [RuleId::MuR, RuleId::OrR2, RuleId::MuR, RuleId::OrR2] {
        let p = cur.succ[0].id;
        let app = instantiate(schema, cur, RuleParams::Principal(p)).unwrap();
        cur = app.premises[0].clone();
        tops.push((schema, app));
    }
    let back = g.add(Node::Back {
        conclusion: cur,
        target: n0,
    });
    let mut child = back;
    for (_, app) in tops.into_iter().rev() {
        child = g.add(Node::Rule {
            app,
            children: vec![child],
        });
    }

    let n_orl = g.add(Node::Rule {
        app: orl,
        children: vec![n_mur_z, child],
    });
    g.nodes.insert(
        n0,
        Node::Rule {
            app: mul,
            children: vec![n_orl],
        },
    );
    g.root = n0;
    g
}

/// Join two proofs with a binary cut on formula `f`.
///
/// `left` must conclude `Gamma |- f, Delta` (cut formula first in the
/// succedent) and `right` must conclude `Gamma', f |- Delta'` (cut formula
/// last in the antecedent); the result concludes `Gamma, Gamma' |- Delta,
/// Delta'` by a cut rule at the root, with both graphs embedded side by
/// side.
pub fn cut_of(name: &str, left: &ProofGraph, right: &ProofGraph, f: &Formula) -> ProofGraph {
    assert_eq!(left.system, right.system, "cut_of: mixed systems");
    let le = left.end_sequent().clone();
    let re = right.end_sequent().clone();
    assert!(
        le.succ.first().map(|o| &o.formula) == Some(f),
        "cut_of: left succedent must start with the cut formula"
    );
    assert!(
        re.ante.last().map(|o| &o.formula) == Some(f),
        "cut_of: right antecedent must end with the cut formula"
    );

    let ante: Vec<Formula> = le
        .ante
        .iter()
        .chain(&re.ante[..re.ante.len() - 1])
        .map(|o| o.formula.clone())
        .collect();
    let succ: Vec<Formula> = le.succ[1..]
        .iter()
        .chain(&re.succ)
        .map(|o| o.formula.clone())
        .collect();
    let concl = Sequent::new(ante, succ);
    let left_set: BTreeSet<PosId> = concl
        .ante
        .iter()
        .take(le.ante.len())
        .chain(concl.succ.iter().take(le.succ.len() - 1))
        .map(|o| o.id)
        .collect();
    let cut = instantiate(
        RuleId::Cut,
        concl,
        RuleParams::CutOn {
            formula: f.clone(),
            left: left_set,
        },
    )
    .unwrap_or_else(|e| panic!("cut_of: {}", e));
    debug_assert!(cut.premises[0].same_formulas(&le));
    debug_assert!(cut.premises[1].same_formulas(&re));

    let mut g = ProofGraph::new(left.system, name);
    g.nodes = left.nodes.clone();
    let delta = g.nodes.keys().next_back().map_or(0, |k| k.0 + 1);
    for (id, node) in &right.nodes {
        let mut node = node.clone();
        match &mut node {
            Node::Rule { children, .. } | Node::Mcut { children, .. } => {
                for c in children.iter_mut() {
                    c.0 += delta;
                }
            }
            Node::Back { target, .. } => target.0 += delta,
        }
        g.nodes.insert(NodeId(id.0 + delta), node);
    }
    let root = g.add(Node::Rule {
        app: cut,
        children: vec![left.root, NodeId(right.root.0 + delta)],
    });
    g.root = root;
    g
}

/// The whole fixed corpus.
pub fn all_corpus() -> Vec<ProofGraph> {
    let mut out = vec![
        diamond_stream(),
        trivial_loop(),
        numeral_infinite(),
        conumeral_infinite(),
        double_fn(),
    ];
    for n in 0..=5 {
        out.push(numeral(n));
    }
    out
}

// ---- identity proofs ----

struct IdBuilder<'a> {
    g: &'a mut ProofGraph,
    memo: Vec<(Formula, NodeId)>,
    rng: Option<ChaCha8Rng>,
    detours: usize,
}

impl<'a> IdBuilder<'a> {
    fn lookup(&self, f: &Formula) -> Option<NodeId> {
        self.memo.iter().find(|(g, _)| g == f).map(|(_, n)| *n)
    }

    fn goal(f: &Formula) -> Sequent {
        Sequent::new(vec![f.clone()], vec![f.clone()])
    }

    fn expand(&mut self, f: &Formula) -> NodeId {
        if let Some(n) = self.lookup(f) {
            return self.g.add(Node::Back {
                conclusion: Self::goal(f),
                target: n,
            });
        }
        // Optional cut detour: id(F) becomes cut(id(F), id(F)).
        let detour = match &mut self.rng {
            Some(rng) if self.detours > 0 => rng.gen_bool(0.3),
            _ => false,
        };
        if detour {
            self.detours -= 1;
            let concl = Self::goal(f);
            let left = BTreeSet::from([concl.ante[0].id]);
            let cut = instantiate(
                RuleId::Cut,
                concl,
                RuleParams::CutOn {
                    formula: f.clone(),
                    left,
                },
            )
            .unwrap();
            let c1 = self.expand(f);
            let c2 = self.expand(f);
            return self.g.add(Node::Rule {
                app: cut,
                children: vec![c1, c2],
            });
        }
        let id = self.g.add(placeholder());
        self.memo.push((f.clone(), id));
        let node = self.build_gadget(f, id);
        self.g.nodes.insert(id, node);
        id
    }

    // Build the bottom rule of the gadget for goal `f |- f`, whose node id
    // is already reserved as `id`.
    fn build_gadget(&mut self, f: &Formula, _id: NodeId) -> Node {
        use Formula as F;
        let concl = Self::goal(f);
        let pa = concl.ante[0].id;
        let ps = concl.succ[0].id;
        let leaf = |schema: RuleId, concl: Sequent, params: RuleParams| {
            let app = instantiate(schema, concl, params).unwrap();
            Node::Rule {
                app,
                children: vec![],
            }
        };
        match f {
            F::Atom(_) => leaf(RuleId::Ax, concl, RuleParams::None),
            F::ClTrue => leaf(RuleId::ClTrueR, concl, RuleParams::Principal(ps)),
            F::ClFalse => leaf(RuleId::ClFalseL, concl, RuleParams::Principal(pa)),
            F::Top => leaf(RuleId::TopR, concl, RuleParams::Principal(ps)),
            F::Zero => leaf(RuleId::ZeroL, concl, RuleParams::Principal(pa)),
            F::One => {
                let onel = instantiate(RuleId::OneL, concl, RuleParams::Principal(pa)).unwrap();
                let up = onel.premises[0].clone();
                let oner = instantiate(RuleId::OneR, up, RuleParams::None).unwrap();
                let l = self.g.add(Node::Rule {
                    app: oner,
                    children: vec![],
                });
                Node::Rule {
                    app: onel,
                    children: vec![l],
                }
            }
            F::Bot => {
                let botr = instantiate(RuleId::BotR, concl, RuleParams::Principal(ps)).unwrap();
                let up = botr.premises[0].clone();
                let botl = instantiate(RuleId::BotL, up, RuleParams::None).unwrap();
                let l = self.g.add(Node::Rule {
                    app: botl,
                    children: vec![],
                });
                Node::Rule {
                    app: botr,
                    children: vec![l],
                }
            }
            F::Neg(b) => {
                let negr = instantiate(RuleId::NegR, concl, RuleParams::Principal(ps)).unwrap();
                let up = negr.premises[0].clone();
                let p = up.ante[0].id;
                let negl = instantiate(RuleId::NegL, up, RuleParams::Principal(p)).unwrap();
                let inner = self.expand(b);
                let n = self.g.add(Node::Rule {
                    app: negl,
                    children: vec![inner],
                });
                Node::Rule {
                    app: negr,
                    children: vec![n],
                }
            }
            F::Impl(a, b) | F::LinImpl(a, b) => {
                let (r_rule, l_rule) = if matches!(f, F::Impl(..)) {
                    (RuleId::ImplR, RuleId::ImplL)
                } else {
                    (RuleId::LimplR, RuleId::LimplL)
                };
                let implr = instantiate(r_rule, concl, RuleParams::Principal(ps)).unwrap();
                let up = implr.premises[0].clone(); // f, A |- B
                let principal = up.ante[0].id;
                let a_pos = up.ante[1].id;
                let impll = instantiate(
                    l_rule,
                    up,
                    RuleParams::Split {
                        pos: principal,
                        left: BTreeSet::from([a_pos]),
                    },
                )
                .unwrap();
                let ca = self.expand(a);
                let cb = self.expand(b);
                let n = self.g.add(Node::Rule {
                    app: impll,
                    children: vec![ca, cb],
                });
                Node::Rule {
                    app: implr,
                    children: vec![n],
                }
            }
            F::And(a, b) | F::With(a, b) => {
                let (r_rule, l1, l2) = if matches!(f, F::And(..)) {
                    (RuleId::AndR, RuleId::AndL1, RuleId::AndL2)
                } else {
                    (RuleId::WithR, RuleId::WithL1, RuleId::WithL2)
                };
                let andr = instantiate(r_rule, concl, RuleParams::Principal(ps)).unwrap();
                let u1 = andr.premises[0].clone();
                let u2 = andr.premises[1].clone();
                let n1 = {
                    let p = u1.ante[0].id;
                    let app = instantiate(l1, u1, RuleParams::Principal(p)).unwrap();
                    let c = self.expand(a);
                    self.g.add(Node::Rule {
                        app,
                        children: vec![c],
                    })
                };
                let n2 = {
                    let p = u2.ante[0].id;
                    let app = instantiate(l2, u2, RuleParams::Principal(p)).unwrap();
                    let c = self.expand(b);
                    self.g.add(Node::Rule {
                        app,
                        children: vec![c],
                    })
                };
                Node::Rule {
                    app: andr,
                    children: vec![n1, n2],
                }
            }
            F::Or(a, b) | F::Plus(a, b) => {
                let (l_rule, r1, r2) = if matches!(f, F::Or(..)) {
                    (RuleId::OrL, RuleId::OrR1, RuleId::OrR2)
                } else {
                    (RuleId::PlusL, RuleId::PlusR1, RuleId::PlusR2)
                };
                let orl = instantiate(l_rule, concl, RuleParams::Principal(pa)).unwrap();
                let u1 = orl.premises[0].clone();
                let u2 = orl.premises[1].clone();
                let n1 = {
                    let p = u1.succ[0].id;
                    let app = instantiate(r1, u1, RuleParams::Principal(p)).unwrap();
                    let c = self.expand(a);
                    self.g.add(Node::Rule {
                        app,
                        children: vec![c],
                    })
                };
                let n2 = {
                    let p = u2.succ[0].id;
                    let app = instantiate(r2, u2, RuleParams::Principal(p)).unwrap();
                    let c = self.expand(b);
                    self.g.add(Node::Rule {
                        app,
                        children: vec![c],
                    })
                };
                Node::Rule {
                    app: orl,
                    children: vec![n1, n2],
                }
            }
            F::Tensor(a, b) => {
                let tl = instantiate(RuleId::TensorL, concl, RuleParams::Principal(pa)).unwrap();
                let up = tl.premises[0].clone(); // A, B |- A * B
                let p = up.succ[0].id;
                let a_pos = up.ante[0].id;
                let tr = instantiate(
                    RuleId::TensorR,
                    up,
                    RuleParams::Split {
                        pos: p,
                        left: BTreeSet::from([a_pos]),
                    },
                )
                .unwrap();
                let ca = self.expand(a);
                let cb = self.expand(b);
                let n = self.g.add(Node::Rule {
                    app: tr,
                    children: vec![ca, cb],
                });
                Node::Rule {
                    app: tl,
                    children: vec![n],
                }
            }
            F::Par(a, b) => {
                let pr = instantiate(RuleId::ParR, concl, RuleParams::Principal(ps)).unwrap();
                let up = pr.premises[0].clone(); // A par B |- A, B
                let p = up.ante[0].id;
                let a_pos = up.succ[0].id;
                let pl = instantiate(
                    RuleId::ParL,
                    up,
                    RuleParams::Split {
                        pos: p,
                        left: BTreeSet::from([a_pos]),
                    },
                )
                .unwrap();
                let ca = self.expand(a);
                let cb = self.expand(b);
                let n = self.g.add(Node::Rule {
                    app: pl,
                    children: vec![ca, cb],
                });
                Node::Rule {
                    app: pr,
                    children: vec![n],
                }
            }
            F::Mu(..) | F::Nu(..) => {
                let (l_rule, r_rule) = if matches!(f, F::Mu(..)) {
                    (RuleId::MuL, RuleId::MuR)
                } else {
                    (RuleId::NuL, RuleId::NuR)
                };
                let unf = f.unfold_fixpoint().unwrap();
                let dl = instantiate(l_rule, concl, RuleParams::Principal(pa)).unwrap();
                let up = dl.premises[0].clone(); // unf |- f
                let p = up.succ[0].id;
                let dr = instantiate(r_rule, up, RuleParams::Principal(p)).unwrap();
                let inner = self.expand(&unf);
                let n = self.g.add(Node::Rule {
                    app: dr,
                    children: vec![inner],
                });
                Node::Rule {
                    app: dl,
                    children: vec![n],
                }
            }
            F::Bang(b) => {
                let bp = instantiate(RuleId::BangP, concl, RuleParams::Principal(ps)).unwrap();
                let up = bp.premises[0].clone(); // !B |- B
                let p = up.ante[0].id;
                let bd = instantiate(RuleId::BangD, up, RuleParams::Principal(p)).unwrap();
                let inner = self.expand(b);
                let n = self.g.add(Node::Rule {
                    app: bd,
                    children: vec![inner],
                });
                Node::Rule {
                    app: bp,
                    children: vec![n],
                }
            }
            F::Quest(b) => {
                let qp = instantiate(RuleId::QuestP, concl, RuleParams::Principal(pa)).unwrap();
                let up = qp.premises[0].clone(); // B |- ?B
                let p = up.succ[0].id;
                let qd = instantiate(RuleId::QuestD, up, RuleParams::Principal(p)).unwrap();
                let inner = self.expand(b);
                let n = self.g.add(Node::Rule {
                    app: qd,
                    children: vec![inner],
                });
                Node::Rule {
                    app: qp,
                    children: vec![n],
                }
            }
            F::Box(b) => {
                let app = instantiate(RuleId::BoxP, concl, RuleParams::Principal(ps)).unwrap();
                let inner = self.expand(b);
                Node::Rule {
                    app,
                    children: vec![inner],
                }
            }
            F::Diamond(b) => {
                let app = instantiate(RuleId::DiaP, concl, RuleParams::Principal(pa)).unwrap();
                let inner = self.expand(b);
                Node::Rule {
                    app,
                    children: vec![inner],
                }
            }
            F::Var(_) => unreachable!("identity proofs are over closed formulas"),
        }
    }
}

/// The circular identity proof of `f |- f` (eta-expansion with back-edges
/// at repeated subgoals). Valid in every system whose grammar contains `f`.
pub fn identity_proof(sys: SystemId, f: &Formula) -> ProofGraph {
    let mut g = ProofGraph::new(sys, format!("id({})", f));
    let root = IdBuilder {
        g: &mut g,
        memo: Vec::new(),
        rng: None,
        detours: 0,
    }
    .expand(f);
    g.root = root;
    g
}

// ---- random generation ----

/// A random closed formula of the system's grammar.
pub fn random_formula(sys: SystemId, rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    let mut fresh = 0usize;
    rf(sys, rng, depth, &mut Vec::new(), true, &mut fresh)
}

fn rf(
    sys: SystemId,
    rng: &mut ChaCha8Rng,
    depth: usize,
    vars: &mut Vec<(String, bool)>,
    parity: bool,
    fresh: &mut usize,
) -> Formula {
    use Formula as F;
    let classical = sys.is_classical();
    if depth == 0 {
        // Leaf: atom, unit, or a usable bound variable.
        let usable: Vec<String> = vars
            .iter()
            .filter(|(_, p)| *p == parity)
            .map(|(v, _)| v.clone())
            .collect();
        if !usable.is_empty() && rng.gen_bool(0.5) {
            return fml::var(&usable[rng.gen_range(0..usable.len())]);
        }
        let atoms = ["a", "b", "c"];
        if rng.gen_bool(if classical { 0.7 } else { 0.6 }) {
            return fml::atom(atoms[rng.gen_range(0..atoms.len())]);
        }
        if classical {
            return if rng.gen_bool(0.5) { F::ClTrue } else { F::ClFalse };
        }
        match rng.gen_range(0..4) {
            0 => F::One,
            1 => F::Bot,
            2 => F::Top,
            _ => F::Zero,
        }
    } else {
        let mut choices: Vec<u8> = Vec::new();
        if classical {
            choices.extend([0, 1, 2, 3]); // neg, impl, and, or
        } else {
            choices.extend([0, 4, 5, 6, 7, 8]); // neg, limpl, tensor, par, with, plus
        }
        if sys.has_fixpoints() {
            choices.extend([9, 10]);
        }
        if sys.has_exponentials() {
            choices.extend([11, 12]);
        }
        if sys.has_modalities() {
            choices.extend([13, 14]);
        }
        choices.push(15); // early leaf
        let d = depth - 1;
        match choices[rng.gen_range(0..choices.len())] {
            0 => fml::neg(rf(sys, rng, d, vars, !parity, fresh)),
            1 => {
                let l = rf(sys, rng, d, vars, !parity, fresh);
                let r = rf(sys, rng, d, vars, parity, fresh);
                fml::impl_(l, r)
            }
            2 => fml::and(
                rf(sys, rng, d, vars, parity, fresh),
                rf(sys, rng, d, vars, parity, fresh),
            ),
            3 => fml::or(
                rf(sys, rng, d, vars, parity, fresh),
                rf(sys, rng, d, vars, parity, fresh),
            ),
            4 => {
                let l = rf(sys, rng, d, vars, !parity, fresh);
                let r = rf(sys, rng, d, vars, parity, fresh);
                fml::limpl(l, r)
            }
            5 => fml::tensor(
                rf(sys, rng, d, vars, parity, fresh),
                rf(sys, rng, d, vars, parity, fresh),
            ),
            6 => fml::par(
                rf(sys, rng, d, vars, parity, fresh),
                rf(sys, rng, d, vars, parity, fresh),
            ),
            7 => fml::with(
                rf(sys, rng, d, vars, parity, fresh),
                rf(sys, rng, d, vars, parity, fresh),
            ),
            8 => fml::plus(
                rf(sys, rng, d, vars, parity, fresh),
                rf(sys, rng, d, vars, parity, fresh),
            ),
            9 | 10 => {
                let name = format!("X{}", *fresh);
                *fresh += 1;
                vars.push((name.clone(), parity));
                let body = rf(sys, rng, d, vars, parity, fresh);
                vars.pop();
                if rng.gen_bool(0.5) {
                    fml::mu(&name, body)
                } else {
                    fml::nu(&name, body)
                }
            }
            11 => fml::bang(rf(sys, rng, d, vars, parity, fresh)),
            12 => fml::quest(rf(sys, rng, d, vars, parity, fresh)),
            13 => fml::boxm(rf(sys, rng, d, vars, parity, fresh)),
            14 => fml::dia(rf(sys, rng, d, vars, parity, fresh)),
            _ => rf(sys, rng, 0, vars, parity, fresh),
        }
    }
}

/// A random well-formed classical pre-proof (not necessarily valid). The
/// endsequent always carries a matching formula pair so every open goal can
/// be closed by weakening down to an axiom.
pub fn random_classical_proof(seed: u64, max_depth: usize) -> ProofGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sys = SystemId::MuLkBox;
    let witness = random_formula(sys, &mut rng, 2);
    let mut ante = vec![];
    let mut succ = vec![];
    for _ in 0..rng.gen_range(0..2) {
        ante.push(random_formula(sys, &mut rng, 1));
    }
    ante.push(witness.clone());
    succ.push(witness.clone());
    for _ in 0..rng.gen_range(0..2) {
        succ.push(random_formula(sys, &mut rng, 1));
    }
    let goal = Sequent::new(ante, succ);
    let mut g = ProofGraph::new(sys, format!("random_{}", seed));
    let mut path = Vec::new();
    let root = gen_classical(&mut g, goal, &mut path, max_depth, &mut rng);
    g.root = root;
    g
}

// The designated witness pair: first (i, j) with ante[i] == succ[j].
fn witness_pair(s: &Sequent) -> Option<(PosId, PosId)> {
    for a in &s.ante {
        for b in &s.succ {
            if a.formula == b.formula {
                return Some((a.id, b.id));
            }
        }
    }
    None
}

// Close a classical goal: by a unit rule if possible, else weaken everything
// but the witness pair and finish with an axiom.
fn close_classical(g: &mut ProofGraph, goal: Sequent) -> NodeId {
    use Formula as F;
    if let Some(o) = goal.succ.iter().find(|o| o.formula == F::ClTrue) {
        let p = o.id;
        return rule(g, RuleId::ClTrueR, goal, RuleParams::Principal(p), vec![]);
    }
    if let Some(o) = goal.ante.iter().find(|o| o.formula == F::ClFalse) {
        let p = o.id;
        return rule(g, RuleId::ClFalseL, goal, RuleParams::Principal(p), vec![]);
    }
    let (wa, ws) = witness_pair(&goal).expect("generated goals stay closable");
    // Weakening burst in conclusion-list order.
    let extra: Vec<(PosId, RuleId)> = goal
        .ante
        .iter()
        .filter(|o| o.id != wa)
        .map(|o| (o.id, RuleId::WL))
        .chain(
            goal.succ
                .iter()
                .filter(|o| o.id != ws)
                .map(|o| (o.id, RuleId::WR)),
        )
        .collect();
    if let Some((p, schema)) = extra.first().copied() {
        let app = instantiate(schema, goal, RuleParams::Principal(p)).unwrap();
        let up = app.premises[0].clone();
        let child = close_classical(g, up);
        g.add(Node::Rule {
            app,
            children: vec![child],
        })
    } else {
        rule(g, RuleId::Ax, goal, RuleParams::None, vec![])
    }
}

fn gen_classical(
    g: &mut ProofGraph,
    goal: Sequent,
    path: &mut Vec<(NodeId, Sequent)>,
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> NodeId {
    use Formula as F;
    // Back-edge to a matching node on the path.
    if let Some((anc, _)) = path.iter().find(|(_, c)| c.same_formulas(&goal)) {
        if rng.gen_bool(0.6) {
            let target = *anc;
            return g.add(Node::Back {
                conclusion: goal,
                target,
            });
        }
    }
    if budget == 0 || rng.gen_bool(0.15) {
        return close_classical(g, goal);
    }
    let witness = witness_pair(&goal);
    // Candidate moves: (schema, params) on non-witness principals.
    let mut moves: Vec<(RuleId, RuleParams)> = Vec::new();
    let protected = |p: PosId| match witness {
        Some((a, s)) => p == a || p == s,
        None => false,
    };
    for (p, side, f) in goal.positions() {
        use crate::calculus::Side;
        let is_box_principal = matches!(f, F::Box(_)) && side == Side::Succ;
        let is_dia_principal = matches!(f, F::Diamond(_)) && side == Side::Ante;
        // Joint modal promotions may act on the witness pair (they strip
        // every formula uniformly), everything else must leave it alone.
        if protected(p) && !(is_box_principal || is_dia_principal) {
            continue;
        }
        let prm = RuleParams::Principal(p);
        match (side, f) {
            (Side::Ante, F::Neg(_)) => moves.push((RuleId::NegL, prm)),
            (Side::Succ, F::Neg(_)) => moves.push((RuleId::NegR, prm)),
            (Side::Succ, F::Impl(..)) => moves.push((RuleId::ImplR, prm)),
            (Side::Ante, F::Impl(l, _)) if **l == F::ClTrue => {
                // Left premise |- T closes immediately; witness goes right.
                moves.push((
                    RuleId::ImplL,
                    RuleParams::Split {
                        pos: p,
                        left: BTreeSet::new(),
                    },
                ));
            }
            (Side::Ante, F::And(..)) => {
                moves.push((RuleId::AndL1, prm.clone()));
                moves.push((RuleId::AndL2, prm));
            }
            (Side::Succ, F::And(..)) => moves.push((RuleId::AndR, prm)),
            (Side::Succ, F::Or(..)) => {
                moves.push((RuleId::OrR1, prm.clone()));
                moves.push((RuleId::OrR2, prm));
            }
            (Side::Ante, F::Or(..)) => moves.push((RuleId::OrL, prm)),
            (Side::Ante, F::Mu(..)) => moves.push((RuleId::MuL, prm)),
            (Side::Succ, F::Mu(..)) => moves.push((RuleId::MuR, prm)),
            (Side::Ante, F::Nu(..)) => moves.push((RuleId::NuL, prm)),
            (Side::Succ, F::Nu(..)) => moves.push((RuleId::NuR, prm)),
            (Side::Succ, F::Box(_)) => {
                if instantiate(RuleId::BoxP, goal.clone(), prm.clone()).is_ok() {
                    moves.push((RuleId::BoxP, prm));
                }
            }
            (Side::Ante, F::Diamond(_)) => {
                if instantiate(RuleId::DiaP, goal.clone(), prm.clone()).is_ok() {
                    moves.push((RuleId::DiaP, prm));
                }
            }
            _ => {}
        }
        // Occasional structural rules on non-witness occurrences.
        if !protected(p) && rng.gen_bool(0.06) {
            let schema = match side {
                Side::Ante => RuleId::CL,
                Side::Succ => RuleId::CR,
            };
            moves.push((schema, RuleParams::Principal(p)));
        }
    }
    // Occasional cut on F (the right premise closes by F_l), exchange node.
    if rng.gen_bool(0.1) {
        moves.push((
            RuleId::Cut,
            RuleParams::CutOn {
                formula: F::ClFalse,
                left: goal.ids().collect(),
            },
        ));
    }
    if rng.gen_bool(0.1) && goal.len() >= 2 {
        let mut pa: Vec<usize> = (0..goal.ante.len()).collect();
        let mut ps: Vec<usize> = (0..goal.succ.len()).collect();
        for v in [&mut pa, &mut ps] {
            for i in (1..v.len()).rev() {
                let j = rng.gen_range(0..=i);
                v.swap(i, j);
            }
        }
        moves.push((RuleId::Exchange, RuleParams::Perm { ante: pa, succ: ps }));
    }
    if moves.is_empty() {
        return close_classical(g, goal);
    }
    let (schema, params) = moves[rng.gen_range(0..moves.len())].clone();
    let app = match instantiate(schema, goal.clone(), params) {
        Ok(a) => a,
        Err(_) => return close_classical(g, goal),
    };
    let id = g.add(placeholder());
    path.push((id, app.conclusion.clone()));
    let children: Vec<NodeId> = app
        .premises
        .iter()
        .map(|prem| gen_classical(g, prem.clone(), path, budget - 1, rng))
        .collect();
    path.pop();
    g.nodes.insert(id, Node::Rule { app, children });
    id
}

/// A random valid linear proof: the identity expansion of a random formula
/// with a few cut detours thrown in.
pub fn random_linear_proof(sys: SystemId, seed: u64) -> ProofGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_formula(sys, &mut rng, 2);
    let mut g = ProofGraph::new(sys, format!("random_id_{}", seed));
    let root = IdBuilder {
        g: &mut g,
        memo: Vec::new(),
        rng: Some(rng),
        detours: 2,
    }
    .expand(&f);
    g.root = root;
    g.gc();
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proof::{check_proofgraph, enumerate_simple_cycles, unfold};

    #[test]
    fn corpus_wellformed() {
        for p in all_corpus() {
            let defects = check_proofgraph(&p);
            assert!(defects.is_empty(), "{}: {:?}", p.name, defects);
        }
    }

    #[test]
    fn corpus_cycle_counts() {
        assert_eq!(enumerate_simple_cycles(&diamond_stream()).len(), 2);
        assert_eq!(enumerate_simple_cycles(&trivial_loop()).len(), 2);
        assert_eq!(enumerate_simple_cycles(&numeral_infinite()).len(), 1);
        assert_eq!(enumerate_simple_cycles(&double_fn()).len(), 1);
        assert_eq!(enumerate_simple_cycles(&numeral(3)).len(), 0);
    }

    #[test]
    fn numeral_shape() {
        // pi_n has 2n + 3 rule nodes in a single chain.
        for n in 0..4 {
            let p = numeral(n);
            assert_eq!(p.nodes.len(), 2 * n + 3);
            let t = unfold(&p, 100);
            assert_eq!(t.root.size(), 2 * n + 3);
            assert_eq!(t.root.conclusion().to_string(), " |- mu X. T + X");
        }
    }

    #[test]
    fn identity_proofs_wellformed() {
        use crate::formula::*;
        let cases = vec![
            (SystemId::MuLk, impl_(atom("a"), atom("b"))),
            (SystemId::MuLk, nat()),
            (SystemId::MuLkBox, boxm(or(atom("a"), atom("b")))),
            (SystemId::MuLl, tensor(atom("a"), par(atom("b"), atom("c")))),
            (SystemId::MuLl, bang(with(atom("a"), atom("b")))),
            (
                SystemId::MuLlBox,
                boxm(plus(quest(atom("a")), Formula::One)),
            ),
            (SystemId::MuLl, mu("X", plus(Formula::One, var("X")))),
            (SystemId::MuLk, neg(neg(atom("a")))),
        ];
        for (sys, f) in cases {
            let p = identity_proof(sys, &f);
            let defects = check_proofgraph(&p);
            assert!(defects.is_empty(), "id({}): {:?}", f, defects);
            assert_eq!(
                p.end_sequent().to_string(),
                format!("{} |- {}", f, f)
            );
        }
    }

    #[test]
    fn random_formulas_are_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for sys in [
            SystemId::MuLk,
            SystemId::MuLkBox,
            SystemId::MuLl,
            SystemId::MuLlBox,
            SystemId::Mall,
        ] {
            for _ in 0..50 {
                let f = random_formula(sys, &mut rng, 3);
                assert!(f.is_formula(sys), "{} not in {:?}", f, sys);
            }
        }
    }

    #[test]
    fn random_classical_proofs_wellformed() {
        for seed in 0..30 {
            let p = random_classical_proof(seed, 5);
            let defects = check_proofgraph(&p);
            assert!(defects.is_empty(), "seed {}: {:?}", seed, defects);
        }
    }

    #[test]
    fn random_linear_proofs_wellformed() {
        for seed in 0..20 {
            let p = random_linear_proof(SystemId::MuLlBox, seed);
            let defects = check_proofgraph(&p);
            assert!(defects.is_empty(), "seed {}: {:?}", seed, defects);
        }
    }
}
