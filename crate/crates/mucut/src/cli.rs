//! Command-line front end.
//!
//! ```text
//! mucut check FILE                         structural well-formedness
//! mucut validate FILE                      thread-validity verdict
//! mucut translate FILE --to TARGET         skeleton | circ | linear
//! mucut reduce FILE --fuel N --depth D     fair multicut reduction
//! mucut simulate FILE --trace FILE         replay a trace through circ
//! mucut gen-corpus [--out DIR]             write the example documents
//! ```
//!
//! `FILE` may be `-` for standard input.  Proof documents go to standard
//! output; diagnostics go to standard error.  Exit codes: 0 on success,
//! 1 when the input has defects, is invalid, or cannot be simulated,
//! 2 on usage, I/O, or syntax errors.
//!
//! `gen-corpus` additionally honours the `MUCUT_SEED` environment variable:
//! when set to an integer it also emits one pseudo-random classical and one
//! pseudo-random linear document derived from that seed.

use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::corpus;
use crate::formula::SystemId;
use crate::multicut::init_reduction;
use crate::proof::{check_proofgraph, ProofGraph};
use crate::reduction::{fair_reduce, reduce, ReduceError, ReduceStatus};
use crate::text::{
    format_trace, parse_document, parse_trace, print_document, print_prefix, TextError,
};
use crate::translate::{circ_proof, lin_proof, simulate_step, simulate_trace, sk_proof};
use crate::validity::{validity_check, ValidityVerdict};

#[derive(Parser)]
#[command(
    name = "mucut",
    version,
    about = "Circular sequent proofs: checking, validity, translations, multicut reduction"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a proof document and report structural defects.
    Check {
        /// Proof document (`-` for stdin).
        file: String,
    },
    /// Decide the thread-validity criterion for a proof document.
    Validate {
        /// Proof document (`-` for stdin).
        file: String,
    },
    /// Translate a proof and print the result as a canonical document.
    Translate {
        /// Proof document (`-` for stdin).
        file: String,
        /// Target of the translation.
        #[arg(long, value_enum)]
        to: Target,
    },
    /// Run the fair multicut-reduction strategy and print the cut-free prefix.
    Reduce {
        /// Proof document (`-` for stdin).
        file: String,
        /// Maximum number of reduction steps.
        #[arg(long, default_value_t = 1000)]
        fuel: usize,
        /// Target cut-free depth of the prefix.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Write the step trace to this file, one record per line.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Replay a reduction trace and verify its image under the
    /// modal-to-exponential translation, step by step.
    Simulate {
        /// Proof document (`-` for stdin); must be a non-classical proof.
        file: String,
        /// Trace file produced by `reduce --trace`.
        #[arg(long)]
        trace: PathBuf,
        /// Verify only this step (default: the whole trace).
        #[arg(long)]
        step: Option<usize>,
    },
    /// Write the bundled example documents.
    GenCorpus {
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Target {
    /// Modality- and exponential-erasing skeleton.
    Skeleton,
    /// Modalities replaced by exponentials.
    Circ,
    /// Classical proofs embedded into linear ones.
    Linear,
}

/// Run the command line; returns the process exit code.
pub fn main(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // `--help`/`--version` arrive as errors but exit successfully.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

struct CliError {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

fn bad_input(message: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: message.into(),
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Check { file } => {
            let g = load(&file)?;
            let defects = check_proofgraph(&g);
            if defects.is_empty() {
                println!("ok: {}: no defects", g.name);
                Ok(0)
            } else {
                for d in &defects {
                    println!("defect: {}: {}", g.name, d);
                }
                Ok(1)
            }
        }
        Cmd::Validate { file } => {
            let g = load_clean(&file)?;
            match validity_check(&g) {
                ValidityVerdict::Valid(certs) => {
                    println!("valid: {}: {} thread class(es)", g.name, certs.len());
                    for c in &certs {
                        println!(
                            "  cycle {} carries `{}` recurring at node {}",
                            fmt_nodes(&c.cycle),
                            c.minimal,
                            c.node.0
                        );
                    }
                    Ok(0)
                }
                ValidityVerdict::Invalid(w) => {
                    println!("invalid: {}", g.name);
                    println!("  stem  {}", fmt_nodes(&w.stem));
                    println!("  cycle {} has no accepting thread", fmt_nodes(&w.cycle));
                    Ok(1)
                }
            }
        }
        Cmd::Translate { file, to } => {
            let g = load_clean(&file)?;
            let mut out = match to {
                Target::Skeleton => sk_proof(&g),
                Target::Circ => {
                    if g.system.is_classical() {
                        return Err(usage(format!(
                            "circ translates non-classical proofs; `{}` is a {} proof",
                            g.name,
                            g.system.name()
                        )));
                    }
                    circ_proof(&g)
                }
                Target::Linear => {
                    if !g.system.is_classical() {
                        return Err(usage(format!(
                            "linear translates classical proofs; `{}` is a {} proof",
                            g.name,
                            g.system.name()
                        )));
                    }
                    lin_proof(&g)
                }
            };
            // The document names the proof being translated, not the
            // translation pipeline, so round trips stay byte-identical.
            out.name = g.name.clone();
            print!("{}", print_document(&out).map_err(|e| bad_input(e.message))?);
            Ok(0)
        }
        Cmd::Reduce {
            file,
            fuel,
            depth,
            trace,
        } => {
            let g = load_clean(&file)?;
            let (prefix, tr, status) = fair_reduce(&g, fuel, depth).map_err(|e| match e {
                ReduceError::InvalidInput => bad_input(format!("{}: {}", g.name, e)),
                other => bad_input(format!("{}: {}", g.name, other)),
            })?;
            if let Some(path) = trace {
                std::fs::write(&path, format_trace(&tr.steps))
                    .map_err(|e| usage(format!("cannot write {}: {}", path.display(), e)))?;
            }
            print!("{}", print_prefix(g.system, &g.name, &prefix));
            match status {
                ReduceStatus::CutFreeToDepth => {
                    eprintln!(
                        "reduce: {}: cut-free to depth {} after {} step(s)",
                        g.name,
                        depth,
                        tr.steps.len()
                    );
                }
                ReduceStatus::FuelExhausted => {
                    eprintln!(
                        "reduce: {}: fuel exhausted after {} step(s)",
                        g.name,
                        tr.steps.len()
                    );
                }
            }
            Ok(0)
        }
        Cmd::Simulate { file, trace, step } => {
            let g = load_clean(&file)?;
            if g.system.is_classical() {
                return Err(usage(format!(
                    "simulate works on non-classical proofs; `{}` is a {} proof",
                    g.name,
                    g.system.name()
                )));
            }
            let text = std::fs::read_to_string(&trace)
                .map_err(|e| usage(format!("cannot read {}: {}", trace.display(), e)))?;
            let records = parse_trace(&text)
                .map_err(|e| usage(format!("{}: {}", trace.display(), e)))?;
            if records.is_empty() {
                return Err(usage(format!("{}: empty trace", trace.display())));
            }
            let start = init_reduction(&g);
            match step {
                Some(k) => {
                    let mut cur = start;
                    for r in records.iter().take_while(|r| r.index < k) {
                        cur = reduce(&cur, &r.redex)
                            .map_err(|e| bad_input(format!("replay of step {}: {}", r.index, e)))?;
                    }
                    let rec = records
                        .iter()
                        .find(|r| r.index == k)
                        .ok_or_else(|| usage(format!("trace has no step {}", k)))?;
                    let next = reduce(&cur, &rec.redex)
                        .map_err(|e| bad_input(format!("replay of step {}: {}", k, e)))?;
                    let sim = simulate_step(&cur, &next, &rec.redex)
                        .map_err(|e| bad_input(format!("step {}: {}", k, e)))?;
                    println!(
                        "step {}: {} at mcut {} simulated by {} step(s)",
                        k,
                        rec.redex.kind,
                        rec.redex.mcut.0,
                        sim.redexes.len()
                    );
                    for r in &sim.redexes {
                        println!("  {} at mcut {}", r.kind, r.mcut.0);
                    }
                    println!("phi {}", fmt_phi(&sim.phi));
                    Ok(0)
                }
                None => {
                    let redexes: Vec<_> = records.iter().map(|r| r.redex.clone()).collect();
                    let sim = simulate_trace(&start, &redexes)
                        .map_err(|e| bad_input(format!("{}", e)))?;
                    println!(
                        "simulated {} step(s) by a verified chain of {} step(s)",
                        records.len(),
                        sim.redexes.len()
                    );
                    println!("phi {}", fmt_phi(&sim.phi));
                    Ok(0)
                }
            }
        }
        Cmd::GenCorpus { out } => {
            std::fs::create_dir_all(&out)
                .map_err(|e| usage(format!("cannot create {}: {}", out.display(), e)))?;
            let mut files: Vec<(String, ProofGraph)> = vec![
                ("ex1.mulk".into(), corpus::diamond_stream()),
                ("trivial_loop.mulk".into(), corpus::trivial_loop()),
                ("pi_inf.mulk".into(), corpus::numeral_infinite()),
                ("conat_inf.mulk".into(), corpus::conumeral_infinite()),
                ("double.mulk".into(), corpus::double_fn()),
            ];
            for n in 0..=5 {
                files.push((format!("pi_{}.mulk", n), corpus::numeral(n)));
            }
            if let Ok(seed) = std::env::var("MUCUT_SEED") {
                let seed: u64 = seed
                    .parse()
                    .map_err(|_| usage(format!("MUCUT_SEED must be an integer, got `{}`", seed)))?;
                files.push((
                    format!("random_mulk_{}.mulk", seed),
                    corpus::random_classical_proof(seed, 4),
                ));
                files.push((
                    format!("random_mull_{}.mull", seed),
                    corpus::random_linear_proof(SystemId::MuLl, seed),
                ));
            }
            for (name, g) in files {
                let path = out.join(&name);
                let text = print_document(&g).map_err(|e| bad_input(e.message))?;
                std::fs::write(&path, text)
                    .map_err(|e| usage(format!("cannot write {}: {}", path.display(), e)))?;
                println!("wrote {}", path.display());
            }
            Ok(0)
        }
    }
}

fn read_input(file: &str) -> Result<String, CliError> {
    if file == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| usage(format!("cannot read stdin: {}", e)))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(Path::new(file))
            .map_err(|e| usage(format!("cannot read {}: {}", file, e)))
    }
}

fn load(file: &str) -> Result<ProofGraph, CliError> {
    let text = read_input(file)?;
    parse_document(&text).map_err(|e| match e {
        TextError::Parse(p) => usage(format!("{}: {}", file, p)),
        TextError::Semantic(s) => bad_input(format!("{}: {}", file, s)),
    })
}

/// Load a document and require it to be structurally clean.
fn load_clean(file: &str) -> Result<ProofGraph, CliError> {
    let g = load(file)?;
    let defects = check_proofgraph(&g);
    if let Some(d) = defects.first() {
        return Err(bad_input(format!(
            "{}: {} defect(s), first: {}",
            g.name,
            defects.len(),
            d
        )));
    }
    Ok(g)
}

fn fmt_nodes(nodes: &[crate::proof::NodeId]) -> String {
    let mut s = String::from("[");
    for (i, n) in nodes.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&n.0.to_string());
    }
    s.push(']');
    s
}

fn fmt_phi(phi: &[usize]) -> String {
    phi.iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(|w| w.to_string()).collect()
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(main(&args("mucut")), 2);
        assert_eq!(main(&args("mucut frobnicate")), 2);
        assert_eq!(main(&args("mucut translate missing.mulk --to linear")), 2);
        assert_eq!(main(&args("mucut check /nonexistent/path.mulk")), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(main(&args("mucut --help")), 0);
        assert_eq!(main(&args("mucut reduce --help")), 0);
    }

    #[test]
    fn gen_corpus_then_check_and_validate() {
        let dir = std::env::temp_dir().join(format!("mucut-cli-{}", std::process::id()));
        let out = dir.to_string_lossy().to_string();
        assert_eq!(main(&args(&format!("mucut gen-corpus --out {}", out))), 0);

        let double = dir.join("double.mulk");
        assert!(double.exists());
        assert_eq!(main(&args(&format!("mucut check {}", double.display()))), 0);
        assert_eq!(
            main(&args(&format!("mucut validate {}", double.display()))),
            0
        );
        // The infinite numeral is structurally clean but invalid.
        let pi = dir.join("pi_inf.mulk");
        assert_eq!(main(&args(&format!("mucut check {}", pi.display()))), 0);
        assert_eq!(main(&args(&format!("mucut validate {}", pi.display()))), 1);

        std::fs::remove_dir_all(&dir).ok();
    }
}
