//! Writes a seeded synthetic mushroom colony as a cell CSV and prints its
//! connectivity statistics.

use biofilm_ibm::geometry::{build_connectivity, generate_mushroom, MushroomSpec};

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1u64);
    let spec = MushroomSpec::paper_silhouette([75.0, 0.0], 0.8);
    let cloud = generate_mushroom(seed, 2, &spec, 50.0, [3.0, 1.0, 0.0]).unwrap();
    let biofilm = build_connectivity(&cloud, 1.7 / 50.0, 1.0, 0.8 / 50.0);
    println!(
        "seed {seed}: {} cells, {} springs, {} isolated",
        biofilm.eta(),
        biofilm.springs.len(),
        biofilm.isolated
    );
    biofilm_ibm::geometry::write_cells(std::path::Path::new("cells.csv"), &cloud, 50.0).unwrap();
    println!("cell table written to cells.csv (microns)");
}
