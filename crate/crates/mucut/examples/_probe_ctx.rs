use mucut::multicut::init_reduction;
use mucut::reduction::{enumerate_redexes, reduce};

fn main() {
    for g in reduction_pool() {
        println!("=== {}", g.name);
        let p = init_reduction(&g);
        let mut states = vec![p];
        let mut n = 0;
        while let Some(cur) = states.pop() {
            n += 1;
            if n > 3000 { println!("  (budget)"); break; }
            for r in enumerate_redexes(&cur, usize::MAX) {
                let res = std::panic::catch_unwind(|| reduce(&cur, &r).unwrap());
                match res {
                    Ok(next) => states.push(next),
                    Err(_) => {
                        println!("  PANIC firing {:?}", r);
                        return;
                    }
                }
            }
        }
    }
}

fn reduction_pool() -> Vec<mucut::proof::ProofGraph> {
    use mucut::calculus::{instantiate, RuleId, RuleParams, Sequent};
    use mucut::corpus::{cut_of, identity_proof};
    use mucut::formula::{self as fml, SystemId};
    use mucut::proof::{Node, ProofGraph};
    use std::collections::BTreeSet;
    let a = fml::atom("a");
    let b = fml::atom("b");
    let ab = fml::tensor(a.clone(), b.clone());
    let awb = fml::with(a.clone(), b.clone());
    let apb = fml::plus(a.clone(), b.clone());
    let mut pool = Vec::new();
    pool.push(cut_of("cut_ax_ax", &identity_proof(SystemId::Mall, &a), &identity_proof(SystemId::Mall, &a), &a));
    let mut t = ProofGraph::new(SystemId::Mall, "tensor_intro");
    let concl = Sequent::new(vec![a.clone(), b.clone()], vec![ab.clone()]);
    let pos = concl.succ[0].id;
    let left: BTreeSet<_> = [concl.ante[0].id].into();
    let app = instantiate(RuleId::TensorR, concl, RuleParams::Split { pos, left }).unwrap();
    let prem = app.premises.clone();
    let l = { let ap = instantiate(RuleId::Ax, prem[0].clone(), RuleParams::None).unwrap(); t.add(Node::Rule{app: ap, children: vec![]}) };
    let r = { let ap = instantiate(RuleId::Ax, prem[1].clone(), RuleParams::None).unwrap(); t.add(Node::Rule{app: ap, children: vec![]}) };
    t.root = t.add(Node::Rule { app, children: vec![l, r] });
    pool.push(cut_of("cut_tensor", &t, &identity_proof(SystemId::Mall, &ab), &ab));
    pool.push(cut_of("cut_with", &identity_proof(SystemId::Mall, &awb), &identity_proof(SystemId::Mall, &awb), &awb));
    pool.push(cut_of("cut_plus", &identity_proof(SystemId::Mall, &apb), &identity_proof(SystemId::Mall, &apb), &apb));
    pool
}
