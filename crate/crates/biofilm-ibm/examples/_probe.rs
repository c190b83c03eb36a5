use biofilm_ibm::projection::{Init, Simulation};
use biofilm_ibm::scenario;
use biofilm_ibm::validation::*;
use biofilm_ibm::fields::Norm;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "3d" => {
            let mut errors = Vec::new();
            let hs = [0.25, 0.125, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
            for &h in &hs {
                let sc = scenario::laminar_3d(h, 5e-4, 0.05);
                let mut sim = Simulation::new(sc, Init::HalfLaminar).unwrap();
                let mut prev = f64::INFINITY;
                let mut steps = 0;
                for _ in 0..250 {
                    sim.full_step().unwrap();
                    steps += 1;
                    let e = sim.laminar_error_inf();
                    if (prev - e).abs() < 1e-7 * e.max(1e-14) {
                        break;
                    }
                    prev = e;
                }
                let err = sim.laminar_error_inf();
                println!("h={h:.5} steps={steps}: err {err:.5e}");
                errors.push(err);
            }
            // least squares slope of log2 err vs log2 h
            let n = hs.len() as f64;
            let xs: Vec<f64> = hs.iter().map(|h| h.log2()).collect();
            let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
            let xb = xs.iter().sum::<f64>() / n;
            let yb = ys.iter().sum::<f64>() / n;
            let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xb) * (y - yb)).sum::<f64>()
                / xs.iter().map(|x| (x - xb) * (x - xb)).sum::<f64>();
            println!("3D slope: {slope:.3}");
        }
        "temporal" => {
            let ladder: Vec<_> = [2e-4, 1e-4, 5e-5, 2.5e-5]
                .iter()
                .map(|&dt| scenario::mushroom_2d(1, 1.0 / 128.0, dt, 0.01, 5e-6, 1.0, 0.0, 1.0))
                .collect();
            let r = run_refinement_study(StudyKind::Temporal, &ladder).unwrap();
            println!("temporal:\n{}", r.summary());
        }
        variant => {
            let (rho_b, mu) = match variant {
                "density" => (998.0, 1.0),
                "viscosity" => (0.0, 500.0),
                _ => (0.0, 1.0),
            };
            let ladder: Vec<_> = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0]
                .iter()
                .map(|&h| scenario::mushroom_2d(1, h, 1e-4, 0.01, 5e-6, 1.0, rho_b, mu))
                .collect();
            let r = run_refinement_study(StudyKind::Spatial, &ladder).unwrap();
            println!("spatial {variant}:\n{}", r.summary());
            for q in [Quantity::Velocity, Quantity::Positions] {
                for nn in [Norm::Two, Norm::Inf] {
                    let l = r.ladder(q, nn);
                    println!("E_{}({}) = {:?}", nn.label(), q.label(), l.errors);
                }
            }
        }
    }
}
