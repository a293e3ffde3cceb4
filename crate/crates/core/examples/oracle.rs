//! Asks the extension oracle of the triangle-free plugin which one-point
//! extensions of a path exist.

use pseudofin::formula::{parse, LevelOrdinal, Split, Var};
use pseudofin::structure::FinStructure;
use pseudofin::theory::{plugin_by_name, Oracle};

fn main() {
    let theory = plugin_by_name("henson-triangle-free").expect("bundled plugin");
    let sig = theory.signature();
    let mut m = FinStructure::new(sig.clone());
    let a = m.push_element(LevelOrdinal::Fin(0));
    let b = m.push_element(LevelOrdinal::Fin(0));
    m.add_fact("R", &[a, b]).unwrap();
    m.add_fact("R", &[b, a]).unwrap();

    let oracle = Oracle::new(theory.as_ref());
    let split = Split::new(vec![Var::new("x0"), Var::new("x1")], vec![Var::new("y0")]);
    for text in ["R(x0, y0) & !R(x1, y0) & !(y0 = x1)", "R(x0, y0) & R(x1, y0)", "!R(x0, y0) & !R(x1, y0) & !(y0 = x0) & !(y0 = x1)"] {
        let phi = parse(text, sig).unwrap();
        match oracle.realize(&m, &phi, &split, &[a, b], LevelOrdinal::Fin(1)).unwrap() {
            Some(r) => println!("{text}: witness {:?}, adds {:?}", r.witness, r.delta.new_tuples),
            None => println!("{text}: no model extending the edge realizes it"),
        }
    }
}
