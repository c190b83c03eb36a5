//! Plane-channel regression: starting from half the laminar profile, the
//! solver locks onto the exact discrete laminar flow within machine
//! precision in a few hundred steps.

use biofilm_ibm::projection::{Init, Simulation};
use biofilm_ibm::scenario;

fn main() {
    let h: f64 = std::env::args()
        .nth(1)
        .map(|s| biofilm_ibm::scenario::parse_fraction(&s).unwrap())
        .unwrap_or(1.0 / 128.0);
    let sc = scenario::laminar_2d(h, 1e-4, 0.03);
    let mut sim = Simulation::new(sc, Init::HalfLaminar).unwrap();
    println!("h = {h}, starting error {:.3e}", sim.laminar_error_inf());
    for step in 1..=300 {
        sim.full_step().unwrap();
        if step % 50 == 0 {
            println!(
                "step {step:3}: max-norm error {:.3e}, interior divergence {:.3e}",
                sim.laminar_error_inf(),
                sim.history.last().unwrap().div_inf
            );
        }
    }
}
