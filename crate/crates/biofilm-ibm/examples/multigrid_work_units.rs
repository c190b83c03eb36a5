//! Work units needed by the pressure solve as multigrid levels are added.
//!
//! Run with `cargo run --release --example multigrid_work_units [h]`.

fn main() {
    let h: f64 = std::env::args()
        .nth(1)
        .map(|s| biofilm_ibm::scenario::parse_fraction(&s).unwrap())
        .unwrap_or(1.0 / 128.0);
    println!("pressure solve to relative residual 1e-9 at h = {h}");
    println!("{:>7} {:>14} {:>8}", "levels", "work units", "cycles");
    let rows = biofilm_ibm::validation::pressure_work_by_levels(h, 6).unwrap();
    for (levels, work, cycles) in &rows {
        println!("{levels:>7} {work:>14.1} {cycles:>8}");
    }
    let ratio = rows[0].1 / rows.last().unwrap().1;
    println!("one-level to six-level work ratio: {ratio:.0}x");
}
