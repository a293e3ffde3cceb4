//! Builds a five-cycle by hand, then evaluates and counts a few formulas.

use pseudofin::eval::{count, eval, DefinableSet};
use pseudofin::formula::{parse, LevelOrdinal, Signature, Var};
use pseudofin::structure::FinStructure;

fn main() {
    let sig = Signature::new([("R", 2)]);
    let mut m = FinStructure::new(sig.clone());
    let v: Vec<_> = (0..5).map(|i| m.push_element(LevelOrdinal::Fin(i / 2))).collect();
    for i in 0..5 {
        let (a, b) = (v[i], v[(i + 1) % 5]);
        m.add_fact("R", &[a, b]).unwrap();
        m.add_fact("R", &[b, a]).unwrap();
    }

    let common = parse("exists y0. R(x0, y0) & R(x1, y0)", &sig).unwrap();
    let env = [(Var::new("x0"), v[0]), (Var::new("x1"), v[2])].into_iter().collect();
    println!("{common} at (e0, e2): {}", eval(&m, &common, &env).unwrap());

    let neighbours = DefinableSet::new(parse("R(x0, y0)", &sig).unwrap(), vec![Var::new("x0")]).with_param("y0", v[0]);
    println!("neighbours of e0: {}", count(&m, &neighbours).unwrap());
    let low = neighbours.clone().capped(LevelOrdinal::Fin(0));
    println!("neighbours of e0 at level 0: {}", count(&m, &low).unwrap());

    let edges = DefinableSet::new(parse("R(x0, x1)", &sig).unwrap(), vec![Var::new("x0"), Var::new("x1")]);
    println!("ordered edges: {}", count(&m, &edges).unwrap());
}
