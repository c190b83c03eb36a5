//! Discrete quality of the two regularized delta kernels: unity and
//! first-moment errors against mesh width, with fitted convergence slopes.

use biofilm_ibm::kernels::{epsilon_mom, epsilon_unity, Phi};

fn main() {
    let omega = 0.01;
    let hs = [1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0, 1.0 / 1024.0];
    println!("omega = 1/100");
    println!(
        "{:>10} {:>13} {:>13} {:>13} {:>13}",
        "h", "unity(phi1)", "mom(phi1)", "unity(phi2)", "mom(phi2)"
    );
    let mut logs: Vec<[f64; 2]> = Vec::new();
    for h in hs {
        let row = [
            epsilon_unity(omega, h, Phi::Phi1),
            epsilon_mom(omega, h, Phi::Phi1),
            epsilon_unity(omega, h, Phi::Phi2),
            epsilon_mom(omega, h, Phi::Phi2),
        ];
        println!(
            "{:>10.6} {:>13.3e} {:>13.3e} {:>13.3e} {:>13.3e}",
            h, row[0], row[1], row[2], row[3]
        );
        logs.push([row[2].log2(), row[3].log2()]);
    }
    let slope = |sel: usize| {
        let n = hs.len() as f64;
        let xs: Vec<f64> = hs.iter().map(|h| h.log2()).collect();
        let xbar = xs.iter().sum::<f64>() / n;
        let ybar = logs.iter().map(|l| l[sel]).sum::<f64>() / n;
        let num: f64 = xs.iter().zip(&logs).map(|(x, l)| (x - xbar) * (l[sel] - ybar)).sum();
        let den: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
        num / den
    };
    println!("phi2 slopes: unity {:.2}, moment {:.2}", slope(0), slope(1));

    // Exact zeros when the support is an integer multiple of the mesh.
    let h = omega / 2.0;
    println!(
        "phi1 at h = omega/2: unity {:.1e}, moment {:.1e}",
        epsilon_unity(omega, h, Phi::Phi1),
        epsilon_mom(omega, h, Phi::Phi1)
    );
}
