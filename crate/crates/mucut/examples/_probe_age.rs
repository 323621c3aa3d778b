use mucut::corpus::{all_corpus, random_linear_proof};
use mucut::formula::SystemId;
use mucut::reduction::fair_reduce;

fn main() {
    let mut pool = all_corpus();
    for seed in 0..12u64 {
        pool.push(random_linear_proof(SystemId::MuLl, seed));
        pool.push(random_linear_proof(SystemId::MuLlBox, seed));
        pool.push(random_linear_proof(SystemId::Mall, seed));
    }
    let mut total = 0;
    for g in &pool {
        let Ok((_, trace, _)) = fair_reduce(g, 250, 10) else { continue };
        total += trace.steps.len();
        for s in &trace.steps {
            if s.age > s.queue_len {
                let t0 = s.index - s.age;
                let wmax = trace.steps[t0..=s.index].iter().map(|x| x.queue_len).max().unwrap();
                println!("{}: step {} age {} queue {} window-max {}", g.name, s.index, s.age, s.queue_len, wmax);
            }
        }
    }
    println!("total steps at fuel 250: {}", total);
    let mut replay = 0;
    for g in &pool {
        if let Ok((_, t, _)) = fair_reduce(g, 120, 8) { replay += t.steps.len(); }
    }
    println!("total steps at fuel 120 depth 8: {}", replay);
}
