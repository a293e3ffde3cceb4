use rand::Rng;

use super::{Formula, Signature, Var};

/// A random quantifier-free formula with exactly `size` nodes over `vars`.
///
/// Panics if `vars` is empty.
pub fn random_qf<R: Rng + ?Sized>(
    rng: &mut R,
    signature: &Signature,
    vars: &[Var],
    size: usize,
) -> Formula {
    assert!(!vars.is_empty(), "random_qf needs at least one variable");
    match size {
        0 | 1 => random_atom(rng, signature, vars),
        2 => Formula::not(random_atom(rng, signature, vars)),
        _ => {
            if rng.gen_ratio(1, 4) {
                Formula::not(random_qf(rng, signature, vars, size - 1))
            } else {
                let left = rng.gen_range(1..size - 1);
                let a = random_qf(rng, signature, vars, left);
                let b = random_qf(rng, signature, vars, size - 1 - left);
                if rng.gen_bool(0.5) {
                    Formula::and(a, b)
                } else {
                    Formula::or(a, b)
                }
            }
        }
    }
}

fn random_atom<R: Rng + ?Sized>(rng: &mut R, signature: &Signature, vars: &[Var]) -> Formula {
    let rels: Vec<(&str, usize)> = signature.relations().collect();
    let pick = |rng: &mut R| vars[rng.gen_range(0..vars.len())].clone();
    if rels.is_empty() || rng.gen_ratio(1, 3) {
        Formula::Eq(pick(rng), pick(rng))
    } else {
        let (sym, arity) = rels[rng.gen_range(0..rels.len())];
        Formula::rel(sym, (0..arity).map(|_| pick(rng)).collect::<Vec<_>>())
    }
}
