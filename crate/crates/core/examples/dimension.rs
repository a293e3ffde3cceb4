//! Count trends along an equivalence chain, and the comparator on them.

use pseudofin::construction::{build_chain, ChainParams};
use pseudofin::dimension::{dim_compare, mu, trend, DimTrend};
use pseudofin::eval::DefinableSet;
use pseudofin::formula::{parse, Var};
use pseudofin::theory::plugin_by_name;

fn main() {
    let theory = plugin_by_name("generic-equivalence").expect("bundled plugin");
    let sig = theory.signature();
    let chain = build_chain(theory.as_ref(), ChainParams::new(20).budget(128)).unwrap();
    let b = chain.stages[0].elements()[0];

    let all = DefinableSet::new(parse("x0 = x0", sig).unwrap(), vec![Var::new("x0")]).omega();
    let class = DefinableSet::new(parse("E(x0, y0)", sig).unwrap(), vec![Var::new("x0")])
        .with_param("y0", b)
        .omega();
    let t_all = trend(&chain, &all).unwrap();
    let t_class = trend(&chain, &class).unwrap();
    println!("all:   {:?}", t_all.counts);
    println!("class: {:?}", t_class.counts);
    println!("class vs all: {}", dim_compare(&t_class, &t_all, 10, 2.0).unwrap().kind);
    println!("mu(class | all) at the last stage: {}", mu(chain.final_stage(), &all, &class).unwrap());

    // The comparator on synthetic trends: polynomial against linear growth.
    let n: Vec<u64> = (1..=20).collect();
    let n2: Vec<u64> = n.iter().map(|k| k * k).collect();
    let v = dim_compare(&DimTrend::synthetic(0, n), &DimTrend::synthetic(0, n2), 10, 2.0).unwrap();
    println!("n vs n^2: {} (last difference {:?})", v.kind, v.diffs.last().unwrap());
}
