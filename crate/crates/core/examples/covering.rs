//! Checks the covering bound L = (k-1)K + 1 exhaustively on small ground sets.

use pseudofin::dividing::{covering_check, max_overlap};

fn main() {
    for (s, big_k, k) in [(4, 2, 2), (6, 3, 2), (12, 4, 3), (12, 3, 4)] {
        let r = covering_check(s, big_k, k, 0, 0);
        print!("S={s:>2} K={big_k} k={k}: L={:>2} verified={}", r.l, r.verified);
        if let Some(sharp) = &r.sharpness {
            print!(", {} sets with overlap {} show L-1 is too few", sharp.len(), max_overlap(sharp));
        }
        println!();
    }
}
