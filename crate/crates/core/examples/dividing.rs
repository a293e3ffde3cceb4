//! Certifies that an equivalence class divides and searches for a same-type
//! parameter whose class has smaller dimension than the universe.

use pseudofin::construction::{build_chain_with, ChainParams};
use pseudofin::dividing::{certify_dividing, find_dimension_drop, DropParams, Family};
use pseudofin::eval::DefinableSet;
use pseudofin::formula::{parse, Var};
use pseudofin::theory::{plugin_by_name, Oracle};

fn main() {
    let theory = plugin_by_name("generic-equivalence").expect("bundled plugin");
    let sig = theory.signature();
    let oracle = Oracle::new(theory.as_ref());
    let chain = build_chain_with(&oracle, ChainParams::new(30).budget(128), |_, _| {}).unwrap();
    let m = chain.final_stage();
    let b = m.elements()[0];

    let family = Family::new(parse("E(x0, y0)", sig).unwrap(), vec![Var::new("x0")], vec![Var::new("y0")]);
    match certify_dividing(&oracle, m, &family, &[], &[b], 2, 3).unwrap() {
        Some((w, _)) => println!("2-inconsistent instances: {:?}", w.instances),
        None => println!("no certificate"),
    }

    let psi = DefinableSet::new(parse("x0 = x0", sig).unwrap(), vec![Var::new("x0")]).omega();
    let phi = DefinableSet::new(family.formula.clone(), vec![Var::new("x0")]).with_param("y0", b).omega();
    let report = find_dimension_drop(&chain, &psi, &phi, &family.y, &[], DropParams::default()).unwrap();
    println!("psi counts over the window: {:?}", report.psi_counts);
    for c in &report.candidates {
        println!("b# = {:?}: counts {:?}, {}", c.b, c.counts, c.verdict.kind);
    }
}
