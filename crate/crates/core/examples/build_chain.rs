//! Builds a chain for a bundled plugin and summarizes every stage.
//!
//! `cargo run --example build_chain -- generic-equivalence 12`

use pseudofin::construction::{build_chain_with, strongly_satisfies, ChainParams};
use pseudofin::formula::LevelOrdinal;
use pseudofin::theory::{plugin_by_name, Oracle};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "generic-equivalence".into());
    let stages: usize = args.next().map_or(12, |s| s.parse().expect("stage count"));
    let theory = plugin_by_name(&name).expect("bundled plugin");
    let oracle = Oracle::new(theory.as_ref());
    let chain = build_chain_with(&oracle, ChainParams::new(stages).budget(64), |n, m| {
        println!(
            "stage {n:>2}: {:>3} elements, {:>3} facts, |V_w| = {}",
            m.len(),
            m.fact_count(),
            m.v_set(LevelOrdinal::OMEGA).len()
        );
    })
    .unwrap();

    let last = chain.final_stage();
    let ok = chain
        .processed(chain.len())
        .iter()
        .all(|e| strongly_satisfies(last, e, theory.as_ref()).unwrap());
    let extensions: usize = chain.audit.iter().flat_map(|s| &s.entries).map(|e| e.extensions.len()).sum();
    println!("{} entries processed, {extensions} extensions, all strongly satisfied: {ok}", chain.processed(chain.len()).len());
}
