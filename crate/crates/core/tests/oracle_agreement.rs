mod common;

use std::time::Instant;

use common::{oracle_agreement, small_models, small_schedule_formulas};
use pseudofin::theory::{available_plugins, plugin_by_name};

#[test]
fn model_counts_up_to_isomorphism() {
    let graph = plugin_by_name("random-graph").unwrap();
    let counts: Vec<usize> = (1..=6).map(|n| small_models("random-graph", graph.signature(), n).len()).collect();
    assert_eq!(counts, [1, 2, 4, 11, 34, 156]);
    let henson = plugin_by_name("henson-triangle-free").unwrap();
    let counts: Vec<usize> = (1..=5).map(|n| small_models("henson-triangle-free", henson.signature(), n).len()).collect();
    assert_eq!(counts, [1, 2, 3, 7, 14]);
    let eq = plugin_by_name("generic-equivalence").unwrap();
    let counts: Vec<usize> = (1..=6).map(|n| small_models("generic-equivalence", eq.signature(), n).len()).collect();
    assert_eq!(counts, [1, 2, 3, 5, 7, 11]);
}

#[test]
fn oracle_matches_brute_force_on_small_structures() {
    for name in available_plugins() {
        let theory = plugin_by_name(name).unwrap();
        let formulas = small_schedule_formulas(theory.signature(), 4, 15_000);
        let start = Instant::now();
        let r = oracle_agreement(theory.as_ref(), 4, &formulas);
        eprintln!(
            "{name}: {} structures, {} formulas, {} queries ({} realizable) in {:.1?}",
            r.structures,
            formulas.len(),
            r.queries,
            r.realizable,
            start.elapsed()
        );
        assert!(r.disagreements.is_empty(), "{:#?}", &r.disagreements[..r.disagreements.len().min(5)]);
    }
}
