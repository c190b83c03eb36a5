//! Flow-driven fragmentation of the synthetic mushroom colony: weak
//! springs break and a fragment advects downstream; ten-fold stronger
//! springs hold; higher colony viscosity delays the first break.

use biofilm_ibm::projection::{Init, Simulation};
use biofilm_ibm::scenario;

fn run(f_max: f64, mu_ratio: f64, steps: usize) -> (usize, Option<usize>, usize, f64) {
    let sc = scenario::mushroom_2d(1, 1.0 / 64.0, 1e-4, 1.0, f_max, 1.0, 0.0, mu_ratio);
    let mut sim = Simulation::new(sc, Init::Laminar).unwrap();
    let mut total = 0;
    let mut first = None;
    for step in 0..steps {
        let s = sim.full_step().unwrap();
        total += s.springs_broken;
        if s.springs_broken > 0 && first.is_none() {
            first = Some(step + 1);
        }
    }
    let b = sim.biofilm.as_ref().unwrap();
    let labels = b.components();
    let ncomp = labels.iter().max().unwrap() + 1;
    let max_centroid = (0..ncomp)
        .map(|id| b.component_centroid(&labels, id)[0])
        .fold(f64::NEG_INFINITY, f64::max);
    (total, first, ncomp, max_centroid)
}

fn main() {
    let (broken, first, ncomp, centroid) = run(2.5e-7, 1.0, 700);
    println!(
        "F = 2.5e-7 N: {broken} springs broke (first at step {first:?}), {ncomp} fragments, farthest centroid x = {centroid:.3}"
    );
    let (broken, _, ncomp, _) = run(2.5e-6, 1.0, 700);
    println!("F = 2.5e-6 N: {broken} springs broke, {ncomp} fragment(s)");
    let (broken, first, _, _) = run(2.5e-7, 500.0, 450);
    println!(
        "F = 2.5e-7 N with 500x colony viscosity: {broken} springs broke (first at step {first:?})"
    );
}
