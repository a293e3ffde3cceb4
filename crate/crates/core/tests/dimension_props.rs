mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::naive_count;
use pseudofin::construction::{build_chain, ChainParams};
use pseudofin::dimension::{dim_compare, mu, product, quasi_axiom_report, union, DimTrend, Fibration, LogCount, VerdictKind};
use pseudofin::eval::{count, DefinableSet};
use pseudofin::formula::{parse, random_qf, LevelOrdinal, Var};
use pseudofin::theory::plugin_by_name;

fn trend_strategy(len: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..500, len)
}

proptest! {
    #[test]
    fn comparison_is_antisymmetric(a in trend_strategy(12), b in trend_strategy(12), window in 2usize..=12, bound in 0.1f64..4.0) {
        let t1 = DimTrend::synthetic(3, a);
        let t2 = DimTrend::synthetic(3, b);
        let v12 = dim_compare(&t1, &t2, window, bound).unwrap();
        let v21 = dim_compare(&t2, &t1, window, bound).unwrap();
        prop_assert_eq!(v12.kind, v21.kind.flipped());
    }

    #[test]
    fn a_trend_is_bounded_against_itself(a in trend_strategy(10)) {
        let t = DimTrend::synthetic(0, a);
        prop_assert_eq!(dim_compare(&t, &t, 10, 2.0).unwrap().kind, VerdictKind::Bounded);
    }

    #[test]
    fn csv_round_trips(a in trend_strategy(8), first in 0usize..5) {
        let t = DimTrend::synthetic(first, a);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let rows = DimTrend::read_csv(buf.as_slice()).unwrap();
        let expected: Vec<(usize, u64, LogCount)> = t.rows().collect();
        prop_assert_eq!(rows.len(), expected.len());
        for (r, e) in rows.iter().zip(&expected) {
            prop_assert_eq!(r.0, e.0);
            prop_assert_eq!(r.1, e.1);
            match (r.2, e.2) {
                (LogCount::Finite(x), LogCount::Finite(y)) => prop_assert!((x - y).abs() < 1e-6),
                (x, y) => prop_assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn products_multiply_and_unions_are_sandwiched() {
    let theory = plugin_by_name("random-graph").unwrap();
    let sig = theory.signature().clone();
    let chain = build_chain(theory.as_ref(), ChainParams::new(6).budget(64)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let xs = vec![Var::new("x0")];
        let ys = vec![Var::new("x1")];
        let sizes: [usize; 3] = std::array::from_fn(|_| rng.gen_range(1..5));
        let x = DefinableSet::new(random_qf(&mut rng, &sig, &xs, sizes[0]), xs.clone());
        let y = DefinableSet::new(random_qf(&mut rng, &sig, &ys, sizes[1]), ys);
        let z = DefinableSet::new(random_qf(&mut rng, &sig, &xs, sizes[2]), xs);
        let xy = product(&x, &y).unwrap();
        let xz = union(&x, &z).unwrap();
        for m in &chain.stages {
            let (cx, cy, cz) = (naive_count(m, &x), naive_count(m, &y), naive_count(m, &z));
            assert_eq!(count(m, &xy).unwrap(), cx * cy);
            let cu = naive_count(m, &xz);
            assert!(cx.max(cz) <= cu && cu <= cx + cz);
        }
    }
}

#[test]
fn fibration_and_measure() {
    let theory = plugin_by_name("generic-equivalence").unwrap();
    let sig = theory.signature().clone();
    let chain = build_chain(theory.as_ref(), ChainParams::new(12).budget(128)).unwrap();
    let x0 = || vec![Var::new("x0")];
    let all = DefinableSet::new(parse("x0 = x0", &sig).unwrap(), x0());
    let pairs = DefinableSet::new(parse("E(x0, x1)", &sig).unwrap(), vec![Var::new("x0"), Var::new("x1")]);
    // Projection of E-pairs onto their first coordinate.
    let fib = Fibration {
        domain: pairs.clone(),
        graph: parse("x0 = z0", &sig).unwrap(),
        base: DefinableSet::new(parse("z0 = z0", &sig).unwrap(), vec![Var::new("z0")]),
    };
    let sets = [all.clone(), all.clone().capped(LevelOrdinal::OMEGA)];
    let report = quasi_axiom_report(&chain, &sets, Some(&fib)).unwrap();
    assert_eq!(report.violations(), 0);
    assert!(report.fibers.iter().all(|r| r.total));

    let m = chain.final_stage();
    let b = m.elements()[0];
    let class = DefinableSet::new(parse("E(x0, y0)", &sig).unwrap(), x0()).with_param("y0", b);
    let ratio = mu(m, &all, &class).unwrap();
    assert_eq!(*ratio.numer() * naive_count(m, &all), *ratio.denom() * naive_count(m, &class));
}
