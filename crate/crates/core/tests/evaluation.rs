mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{holds, naive_count, Plain};
use pseudofin::eval::{count, eval, qf_type_equal, solutions, DefinableSet};
use pseudofin::formula::{random_qf, Formula, LevelOrdinal, Signature, Var};
use pseudofin::structure::{ElemId, FinStructure};

fn sig() -> Signature {
    Signature::new([("R", 2), ("P", 1)])
}

fn random_structure(rng: &mut ChaCha8Rng, n: usize) -> FinStructure {
    let levels = [
        LevelOrdinal::Fin(0),
        LevelOrdinal::Fin(1),
        LevelOrdinal::Fin(2),
        LevelOrdinal::OMEGA,
        LevelOrdinal::OmegaPlus(1),
    ];
    let mut m = FinStructure::new(sig());
    let elems: Vec<ElemId> = (0..n).map(|_| m.push_element(levels[rng.gen_range(0..levels.len())])).collect();
    for &a in &elems {
        if rng.gen_bool(0.5) {
            m.add_fact("P", &[a]).unwrap();
        }
        for &b in &elems {
            if rng.gen_bool(0.3) {
                m.add_fact("R", &[a, b]).unwrap();
            }
        }
    }
    m
}

fn vars(prefix: &str, n: usize) -> Vec<Var> {
    (0..n).map(|i| Var::indexed(prefix, i)).collect()
}

/// A random formula in `x̄`, with some `ȳ` existentially quantified under a
/// random guard.
fn random_formula(rng: &mut ChaCha8Rng, free: &[Var]) -> Formula {
    let bound = vars("z", rng.gen_range(0..=2));
    let all: Vec<Var> = free.iter().chain(&bound).cloned().collect();
    let size = rng.gen_range(1..=6);
    let body = random_qf(rng, &sig(), &all, size);
    if bound.is_empty() {
        return body;
    }
    let guard = [None, Some(LevelOrdinal::Fin(1)), Some(LevelOrdinal::OMEGA)][rng.gen_range(0..3)];
    Formula::Exists {
        vars: bound,
        guard,
        body: Box::new(body),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn counts_match_naive_enumeration(seed in any::<u64>(), n in 0usize..6, arity in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_structure(&mut rng, n);
        let xs = vars("x", arity);
        let f = random_formula(&mut rng, &xs);
        let mut set = DefinableSet::new(f, xs);
        if rng.gen_bool(0.5) {
            set = set.capped([LevelOrdinal::Fin(0), LevelOrdinal::Fin(1), LevelOrdinal::OMEGA][rng.gen_range(0..3)]);
        }
        prop_assert_eq!(count(&m, &set).unwrap(), naive_count(&m, &set));
        prop_assert_eq!(solutions(&m, &set).unwrap().len() as u64, naive_count(&m, &set));
    }

    #[test]
    fn eval_matches_reference(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_structure(&mut rng, n);
        let xs = vars("x", 2);
        let f = random_formula(&mut rng, &xs);
        let assignment: Vec<ElemId> = (0..2).map(|_| ElemId(rng.gen_range(0..n as u32))).collect();
        let env = xs.iter().cloned().zip(assignment.iter().copied()).collect();
        let plain_env = xs.iter().cloned().zip(assignment.iter().map(|e| e.0)).collect();
        prop_assert_eq!(eval(&m, &f, &env).unwrap(), holds(&Plain::of(&m), &f, &plain_env));
    }

    #[test]
    fn equal_types_agree_on_every_qf_formula(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_structure(&mut rng, n);
        let a = [ElemId(0)];
        let b = [ElemId(rng.gen_range(0..n as u32))];
        let c = [ElemId(rng.gen_range(0..n as u32))];
        let same = qf_type_equal(&m, &b, &c, &a).unwrap();
        let xs = vars("x", 2);
        let mut agree = true;
        for _ in 0..40 {
            let size = rng.gen_range(1..6);
            let f = random_qf(&mut rng, &sig(), &xs, size);
            let at = |t: ElemId| eval(&m, &f, &[(xs[0].clone(), a[0]), (xs[1].clone(), t)].into_iter().collect()).unwrap();
            agree &= at(b[0]) == at(c[0]);
        }
        if same {
            prop_assert!(agree);
        }
    }
}

#[test]
fn unguarded_quantifiers_see_every_level() {
    let s = sig();
    let mut m = FinStructure::new(s.clone());
    let a = m.push_element(LevelOrdinal::Fin(0));
    let b = m.push_element(LevelOrdinal::OmegaPlus(3));
    m.add_fact("R", &[a, b]).unwrap();
    let f = pseudofin::formula::parse("exists z0. R(x0, z0)", &s).unwrap();
    let env = [(Var::new("x0"), a)].into_iter().collect();
    assert!(eval(&m, &f, &env).unwrap());
    let guarded = Formula::Exists {
        vars: vec![Var::new("z0")],
        guard: Some(LevelOrdinal::OMEGA),
        body: Box::new(pseudofin::formula::parse("R(x0, z0)", &s).unwrap()),
    };
    assert!(!eval(&m, &guarded, &env).unwrap());
}
