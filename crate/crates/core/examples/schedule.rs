//! Prints the first schedule entries for the random-graph signature together
//! with the coordinates each position decodes to.

use pseudofin::formula::{schedule_coordinates, Schedule};
use pseudofin::theory::plugin_by_name;

fn main() {
    let theory = plugin_by_name("random-graph").expect("bundled plugin");
    let mut schedule = Schedule::new(theory.signature());
    for entry in schedule.entries(16) {
        let c = schedule_coordinates(entry.position);
        println!("round {:>2} base {:>3}  {entry}", c.round, c.base);
    }
}
