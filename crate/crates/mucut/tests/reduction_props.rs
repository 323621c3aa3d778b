//! Engine-level properties of multicut reduction: endsequent preservation,
//! structural soundness after every step, scheduler fairness, residual
//! counting, and order-independence of normal forms on small cut trees.

use std::collections::BTreeSet;

use mucut::calculus::{instantiate, RuleId, RuleParams, Sequent};
use mucut::corpus::{
    all_corpus, cut_of, diamond_stream, double_fn, identity_proof, numeral,
    random_classical_proof, random_linear_proof,
};
use mucut::formula::{self as fml, Formula, SystemId};
use mucut::multicut::{init_reduction, mcut_wellformed};
use mucut::proof::{check_proofgraph, Node, NodeId, ProofGraph};
use mucut::reduction::{
    enumerate_redexes, fair_reduce, reduce, residuals_after, RedexKind, ReduceError,
};

// ---- shared helpers ----

fn leaf(g: &mut ProofGraph, seq: Sequent, rule: RuleId, params: RuleParams) -> NodeId {
    let app = instantiate(rule, seq, params).unwrap();
    assert!(app.premises.is_empty());
    g.add(Node::Rule {
        app,
        children: vec![],
    })
}

/// Every multicut node in the graph is well-formed and the graph is clean.
fn assert_shape_sound(g: &ProofGraph, ctx: &str) {
    let defects = check_proofgraph(g);
    assert!(defects.is_empty(), "{}: defects {:?}", ctx, defects);
    for (id, node) in &g.nodes {
        if let Node::Mcut { mc, .. } = node {
            let bad = mcut_wellformed(mc);
            assert!(bad.is_empty(), "{}: mcut {} defects {:?}", ctx, id.0, bad);
        }
    }
}

/// Proofs to feed the randomized runs: the fixed corpus plus random linear
/// graphs, keeping only those the engine accepts (valid ones).  Random
/// classical proofs are exercised through the translations instead: the
/// reduction steps are those of the linear systems, and classical inputs are
/// reduced via their linear embeddings (or directly for the corpus
/// instances, whose rule usage stays inside the implemented commutations).
fn run_pool() -> Vec<ProofGraph> {
    let mut pool = all_corpus();
    for seed in 0..12u64 {
        pool.push(random_linear_proof(SystemId::MuLl, seed));
        pool.push(random_linear_proof(SystemId::MuLlBox, seed));
        pool.push(random_linear_proof(SystemId::Mall, seed));
    }
    for seed in 0..8u64 {
        let g = random_classical_proof(seed, 3);
        if g.system.is_classical() {
            pool.push(mucut::translate::lin_proof(&g));
        }
    }
    pool
}

// ---- endsequent invariance ----

#[test]
fn endsequent_is_constant_across_every_trace() {
    let mut runs = 0;
    for g in run_pool() {
        let end = g.end_sequent().to_string();
        let (_, trace, _) = match fair_reduce(&g, 250, 8) {
            Ok(r) => r,
            Err(ReduceError::InvalidInput) => continue,
            Err(e) => panic!("{}: {}", g.name, e),
        };
        runs += 1;
        for s in &trace.steps {
            assert_eq!(
                s.endsequent, end,
                "{}: endsequent changed at step {}",
                g.name, s.index
            );
        }
        assert_eq!(trace.endsequent, end, "{}", g.name);
    }
    assert!(runs >= 15, "only {} usable proofs in the pool", runs);
}

// ---- shape soundness after every step ----

#[test]
fn every_step_of_replayed_traces_is_shape_sound() {
    let mut steps = 0;
    for g in run_pool() {
        let (_, trace, _) = match fair_reduce(&g, 120, 8) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let mut cur = init_reduction(&g);
        assert_shape_sound(&cur, &format!("{} initial", g.name));
        for s in &trace.steps {
            cur = reduce(&cur, &s.redex)
                .unwrap_or_else(|e| panic!("{} step {}: {}", g.name, s.index, e));
            assert_shape_sound(&cur, &format!("{} step {}", g.name, s.index));
            // The recorded endsequent matches the replayed graph.
            assert_eq!(cur.end_sequent().to_string(), s.endsequent);
            steps += 1;
        }
    }
    assert!(steps >= 400, "only {} replayed steps", steps);
}

// ---- fairness ----

#[test]
fn fired_redex_age_is_bounded_by_queue_length() {
    for g in run_pool() {
        let (_, trace, _) = match fair_reduce(&g, 250, 10) {
            Ok(r) => r,
            Err(_) => continue,
        };
        for s in &trace.steps {
            assert!(
                s.age <= s.queue_len,
                "{} step {}: age {} exceeds queue length {}",
                g.name,
                s.index,
                s.age,
                s.queue_len
            );
        }
    }
}

// ---- residuals ----

#[test]
fn fired_redexes_have_no_residuals_and_disjoint_ones_exactly_one() {
    for g in [
        nested_cut_instance(),
        diamond_stream(),
        cut_of(
            "nat2_double",
            &numeral(2),
            &double_fn(),
            &numeral(2).end_sequent().succ[0].formula.clone(),
        ),
    ] {
        let p = init_reduction(&g);
        let redexes = enumerate_redexes(&p, usize::MAX);
        for fired in &redexes {
            // The fired redex leaves no residual of itself.
            let own = residuals_after(&p, fired, fired).unwrap();
            assert!(own.is_empty(), "{}: {:?} has residuals of itself", g.name, fired);
            for other in &redexes {
                if other == fired {
                    continue;
                }
                let res = residuals_after(&p, fired, other).unwrap();
                let after = reduce(&p, fired).unwrap();
                let live = enumerate_redexes(&after, usize::MAX);
                for r in &res {
                    assert!(
                        live.contains(r),
                        "{}: residual {:?} not fireable after {:?}",
                        g.name,
                        r,
                        fired
                    );
                }
                if other.mcut != fired.mcut {
                    assert_eq!(
                        res.len(),
                        1,
                        "{}: disjoint redex {:?} should have one residual after {:?}",
                        g.name,
                        other,
                        fired
                    );
                }
            }
        }
    }
}

#[test]
fn context_duplication_doubles_residuals() {
    // cut(ax: c |- c, with_r: c |- c & c): commuting the `with` below the
    // multicut duplicates it, so the axiom redex acquires two residuals.
    let c = fml::atom("c");
    let id_c = identity_proof(SystemId::Mall, &c);
    let mut w = ProofGraph::new(SystemId::Mall, "with_c");
    let concl = Sequent::new(vec![c.clone()], vec![fml::with(c.clone(), c.clone())]);
    let p0 = concl.succ[0].id;
    let app = instantiate(RuleId::WithR, concl, RuleParams::Principal(p0)).unwrap();
    let prem = app.premises.clone();
    let l = leaf(&mut w, prem[0].clone(), RuleId::Ax, RuleParams::None);
    let r = leaf(&mut w, prem[1].clone(), RuleId::Ax, RuleParams::None);
    w.root = w.add(Node::Rule {
        app,
        children: vec![l, r],
    });

    let g = cut_of("dup", &id_c, &w, &c);
    let p = init_reduction(&g);
    let redexes = enumerate_redexes(&p, usize::MAX);
    let commute = redexes
        .iter()
        .find(|r| matches!(r.kind, RedexKind::Commutative { premise: 1, .. }))
        .expect("with_r commutation");
    let axiom = redexes
        .iter()
        .find(|r| matches!(r.kind, RedexKind::Axiom { .. }))
        .expect("axiom redex");
    let res = residuals_after(&p, commute, axiom).unwrap();
    assert_eq!(res.len(), 2, "duplicated context should give 2 residuals");
}

#[test]
fn full_erasure_leaves_no_residuals() {
    // cut(ax: c |- c, top_r: c |- top): the top rule commutes by erasing the
    // whole multicut, so the axiom redex has no residual.
    let c = fml::atom("c");
    let id_c = identity_proof(SystemId::Mall, &c);
    let mut t = ProofGraph::new(SystemId::Mall, "top_c");
    let concl = Sequent::new(vec![c.clone()], vec![Formula::Top]);
    let p0 = concl.succ[0].id;
    t.root = leaf(&mut t, concl, RuleId::TopR, RuleParams::Principal(p0));

    let g = cut_of("erase", &id_c, &t, &c);
    let p = init_reduction(&g);
    let redexes = enumerate_redexes(&p, usize::MAX);
    let top = redexes
        .iter()
        .find(|r| matches!(r.kind, RedexKind::Commutative { premise: 1, .. }))
        .expect("top_r commutation");
    let axiom = redexes
        .iter()
        .find(|r| matches!(r.kind, RedexKind::Axiom { .. }))
        .expect("axiom redex");
    let res = residuals_after(&p, top, axiom).unwrap();
    assert!(res.is_empty(), "erased redex kept residuals {:?}", res);
    // And the result really is the single top rule.
    let after = reduce(&p, top).unwrap();
    let rules: Vec<_> = after
        .reachable()
        .into_iter()
        .filter_map(|id| match after.node(id) {
            Node::Rule { app, .. } => Some(app.schema),
            _ => None,
        })
        .collect();
    assert_eq!(rules, vec![RuleId::TopR]);
}

// ---- cut absorption ----

fn nested_cut_instance() -> ProofGraph {
    // cut(cut(a,b |- a*b ; a*b |- a*b) ; a*b |- a*b): after initialization the
    // inner multicut sits directly above the outer one.
    let a = fml::atom("a");
    let b = fml::atom("b");
    let ab = fml::tensor(a.clone(), b.clone());
    let mut t = ProofGraph::new(SystemId::Mall, "tensor_intro");
    let concl = Sequent::new(vec![a.clone(), b.clone()], vec![ab.clone()]);
    let pos = concl.succ[0].id;
    let left: BTreeSet<_> = [concl.ante[0].id].into();
    let app = instantiate(RuleId::TensorR, concl, RuleParams::Split { pos, left }).unwrap();
    let prem = app.premises.clone();
    let l = leaf(&mut t, prem[0].clone(), RuleId::Ax, RuleParams::None);
    let r = leaf(&mut t, prem[1].clone(), RuleId::Ax, RuleParams::None);
    t.root = t.add(Node::Rule {
        app,
        children: vec![l, r],
    });

    let id_ab = identity_proof(SystemId::Mall, &ab);
    let inner = cut_of("inner", &t, &id_ab, &ab);
    cut_of("nested", &inner, &id_ab, &ab)
}

#[test]
fn absorption_strictly_decreases_cuts_above_the_multicut() {
    fn cut_rule_count(g: &ProofGraph) -> usize {
        g.reachable()
            .into_iter()
            .filter(|id| {
                matches!(g.node(*id), Node::Rule { app, .. } if app.schema == RuleId::Cut)
            })
            .count()
    }
    fn the_mcut_arity(g: &ProofGraph) -> usize {
        g.reachable()
            .into_iter()
            .find_map(|id| match g.node(id) {
                Node::Mcut { mc, .. } => Some(mc.arity()),
                _ => None,
            })
            .expect("one multicut")
    }

    // Initialization converts only the bottommost cut per branch; the inner
    // cut stays a rule and is absorbed by a reduction step.
    let g = nested_cut_instance();
    let p = init_reduction(&g);
    assert_eq!(cut_rule_count(&p), 1);
    assert_eq!(the_mcut_arity(&p), 2);

    let absorb = enumerate_redexes(&p, usize::MAX)
        .into_iter()
        .find(|r| matches!(r.kind, RedexKind::CutAbsorb { .. }))
        .expect("a cut-absorption redex at the cut-ended premise");
    let next = reduce(&p, &absorb).unwrap();
    assert_shape_sound(&next, "after absorption");
    assert!(
        cut_rule_count(&next) < cut_rule_count(&p),
        "absorption did not decrease the cut count"
    );
    assert_eq!(cut_rule_count(&next), 0);
    assert_eq!(the_mcut_arity(&next), 3, "the absorbed premise splits in two");
    assert!(next.end_sequent().same_formulas(g.end_sequent()));
}

// ---- order-independent normal forms on small MALL cut trees ----

/// Exchange-insensitive canonical form of a cut-free finite proof: rule tree
/// with per-node sorted formula multisets, transpositions spliced out.
fn canon(g: &ProofGraph, id: NodeId) -> String {
    match g.node(id) {
        Node::Back { .. } => panic!("canon: finite proofs only"),
        Node::Mcut { .. } => panic!("canon: cut-free proofs only"),
        Node::Rule { app, children } => {
            if matches!(app.schema, RuleId::Exchange | RuleId::ExL | RuleId::ExR) {
                return canon(g, children[0]);
            }
            let mut ante: Vec<String> =
                app.conclusion.ante.iter().map(|o| o.formula.to_string()).collect();
            let mut succ: Vec<String> =
                app.conclusion.succ.iter().map(|o| o.formula.to_string()).collect();
            ante.sort();
            succ.sort();
            let kids: Vec<String> = children.iter().map(|c| canon(g, *c)).collect();
            format!(
                "({} [{}|-{}] {})",
                app.schema.name(),
                ante.join(","),
                succ.join(","),
                kids.join(" ")
            )
        }
    }
}

fn has_mcut(g: &ProofGraph) -> bool {
    g.reachable()
        .into_iter()
        .any(|id| matches!(g.node(id), Node::Mcut { .. }))
}

/// All normal forms reachable by firing redexes in every possible order.
fn normal_forms(g: &ProofGraph, budget: &mut usize) -> BTreeSet<String> {
    assert!(*budget > 0, "state budget exhausted: enumeration too large");
    *budget -= 1;
    let redexes = enumerate_redexes(g, usize::MAX);
    if redexes.is_empty() {
        assert!(!has_mcut(g), "stuck state: multicut with no redex");
        return [canon(g, g.root)].into();
    }
    let mut out = BTreeSet::new();
    for r in &redexes {
        let next = reduce(g, r).unwrap_or_else(|e| panic!("firing {:?}: {}", r, e));
        out.extend(normal_forms(&next, budget));
    }
    out
}

/// Small finite MALL cut trees used for the exhaustive order enumeration.
pub fn mall_cut_pool() -> Vec<ProofGraph> {
    let a = fml::atom("a");
    let b = fml::atom("b");
    let ab = fml::tensor(a.clone(), b.clone());
    let awb = fml::with(a.clone(), b.clone());
    let apb = fml::plus(a.clone(), b.clone());

    let mut pool = Vec::new();

    // Atomic cut: ax against ax.
    pool.push(cut_of(
        "cut_ax_ax",
        &identity_proof(SystemId::Mall, &a),
        &identity_proof(SystemId::Mall, &a),
        &a,
    ));

    // Tensor introduction against the η-expanded identity.
    let mut t = ProofGraph::new(SystemId::Mall, "tensor_intro");
    let concl = Sequent::new(vec![a.clone(), b.clone()], vec![ab.clone()]);
    let pos = concl.succ[0].id;
    let left: BTreeSet<_> = [concl.ante[0].id].into();
    let app = instantiate(RuleId::TensorR, concl, RuleParams::Split { pos, left }).unwrap();
    let prem = app.premises.clone();
    let l = leaf(&mut t, prem[0].clone(), RuleId::Ax, RuleParams::None);
    let r = leaf(&mut t, prem[1].clone(), RuleId::Ax, RuleParams::None);
    t.root = t.add(Node::Rule {
        app,
        children: vec![l, r],
    });
    pool.push(cut_of(
        "cut_tensor",
        &t,
        &identity_proof(SystemId::Mall, &ab),
        &ab,
    ));

    // Additive pairs: with / plus identities cut against themselves.
    pool.push(cut_of(
        "cut_with",
        &identity_proof(SystemId::Mall, &awb),
        &identity_proof(SystemId::Mall, &awb),
        &awb,
    ));
    pool.push(cut_of(
        "cut_plus",
        &identity_proof(SystemId::Mall, &apb),
        &identity_proof(SystemId::Mall, &apb),
        &apb,
    ));

    // Unit cut: 1 introduced, then consumed.
    let mut one = ProofGraph::new(SystemId::Mall, "one_intro");
    let concl = Sequent::new(vec![], vec![Formula::One]);
    one.root = leaf(&mut one, concl, RuleId::OneR, RuleParams::None);
    pool.push(cut_of(
        "cut_one",
        &one,
        &identity_proof(SystemId::Mall, &Formula::One),
        &Formula::One,
    ));

    // Nested cuts over the tensor instance.
    pool.push(nested_cut_instance());

    pool
}

#[test]
fn small_mall_cut_trees_have_order_independent_normal_forms() {
    for g in mall_cut_pool() {
        assert!(check_proofgraph(&g).is_empty(), "{} unclean", g.name);
        let p = init_reduction(&g);
        let initial = enumerate_redexes(&p, usize::MAX).len();
        assert!(
            initial <= 4,
            "{}: {} initial redexes; pool must stay desk-scale",
            g.name,
            initial
        );
        let mut budget = 200_000usize;
        let forms = normal_forms(&p, &mut budget);
        assert_eq!(
            forms.len(),
            1,
            "{}: distinct normal forms:\n{}",
            g.name,
            forms.iter().cloned().collect::<Vec<_>>().join("\n")
        );
        // The unique normal form proves the same endsequent.
        let (prefix, _, _) = fair_reduce(&g, 200, 64).unwrap();
        assert!(prefix.root.conclusion().same_formulas(g.end_sequent()));
    }
}
