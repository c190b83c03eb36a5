//! Square-duct steady-state errors against the series solution over a
//! mesh ladder; the log-log slope sits at second order.

use biofilm_ibm::projection::{Init, Simulation};
use biofilm_ibm::scenario;

fn main() {
    let mut errors = Vec::new();
    let hs = [1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
    for &h in &hs {
        let sc = scenario::laminar_3d(h, 5e-4, 0.02);
        let mut sim = Simulation::new(sc, Init::HalfLaminar).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..40 {
            sim.full_step().unwrap();
            let e = sim.laminar_error_inf();
            if (prev - e).abs() < 1e-12 {
                break;
            }
            prev = e;
        }
        let err = sim.laminar_error_inf();
        println!("h = {h:>8.5}: steady error {err:.4e}");
        errors.push(err);
    }
    for (w, pair) in errors.windows(2).enumerate() {
        println!(
            "order h={:.5} -> {:.5}: {:.2}",
            hs[w],
            hs[w + 1],
            (pair[0] / pair[1]).log2()
        );
    }
}
