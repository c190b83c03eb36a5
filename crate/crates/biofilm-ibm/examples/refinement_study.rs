//! Temporal and spatial refinement rates for the mushroom scenario,
//! reported for velocity and node positions in the 2- and max-norms.

use biofilm_ibm::scenario;
use biofilm_ibm::validation::{run_refinement_study, StudyKind};

fn main() {
    let temporal: Vec<_> = [4e-4, 2e-4, 1e-4, 5e-5]
        .iter()
        .map(|&dt| scenario::mushroom_2d(1, 1.0 / 64.0, dt, 4e-3, 5e-6, 1.0, 0.0, 1.0))
        .collect();
    let report = run_refinement_study(StudyKind::Temporal, &temporal).unwrap();
    println!("temporal refinement:\n{}", report.summary());

    let spatial: Vec<_> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
        .iter()
        .map(|&h| scenario::mushroom_2d(1, h, 1e-4, 4e-3, 5e-6, 1.0, 0.0, 1.0))
        .collect();
    let report = run_refinement_study(StudyKind::Spatial, &spatial).unwrap();
    println!("spatial refinement:\n{}", report.summary());
    std::fs::write("refinement_spatial.csv", report.to_csv()).unwrap();
    println!("plot data written to refinement_spatial.csv");
}
