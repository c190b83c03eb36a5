//! Regularized Dirac-delta kernels and their discrete quality metrics.
//!
//! Two four-point kernel profiles are supported: the piecewise-algebraic
//! `phi1` and the cosine `phi2`. A tensor-product delta scaled by an
//! arbitrary support length (the cell radius for spreading, the mesh width
//! for interpolation) is built from either profile.

/// Kernel profile choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phi {
    /// Piecewise-algebraic profile; satisfies the discrete unity and
    /// first-moment conditions exactly on any refinement of its own lattice.
    Phi1,
    /// Cosine profile; satisfies the unity condition on its own lattice and
    /// trades the exact moment condition for smoothness.
    Phi2,
}

impl Phi {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            Phi::Phi1 => phi1(r),
            Phi::Phi2 => phi2(r),
        }
    }
}

impl std::str::FromStr for Phi {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "phi1" => Ok(Phi::Phi1),
            "phi2" => Ok(Phi::Phi2),
            other => Err(format!("unknown kernel {other:?} (expected phi1 or phi2)")),
        }
    }
}

/// A regularized delta: profile plus support scale and dimension.
#[derive(Debug, Clone, Copy)]
pub struct DeltaKernel {
    pub phi: Phi,
    /// Support scale; the kernel vanishes outside a cube of half-width
    /// twice this value.
    pub support_scale: f64,
    pub dim: usize,
}

impl DeltaKernel {
    pub fn new(phi: Phi, support_scale: f64, dim: usize) -> Self {
        assert!(support_scale > 0.0, "support scale must be positive");
        assert!((1..=3).contains(&dim));
        DeltaKernel {
            phi,
            support_scale,
            dim,
        }
    }

    /// Tensor-product regularized delta at offset `x` (first `dim` entries used).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let w = self.support_scale;
        let mut v = w.powi(-(self.dim as i32));
        for &xi in x.iter().take(self.dim) {
            v *= self.phi.eval(xi / w);
        }
        v
    }
}

/// Piecewise-algebraic four-point kernel profile.
pub fn phi1(r: f64) -> f64 {
    let a = r.abs();
    if a <= 1.0 {
        (3.0 - 2.0 * a + (1.0 + 4.0 * a - 4.0 * a * a).sqrt()) / 8.0
    } else if a <= 2.0 {
        (5.0 - 2.0 * a - (-7.0 + 12.0 * a - 4.0 * a * a).sqrt()) / 8.0
    } else {
        0.0
    }
}

/// Cosine four-point kernel profile.
pub fn phi2(r: f64) -> f64 {
    if r.abs() <= 2.0 {
        0.25 * (1.0 + (std::f64::consts::FRAC_PI_2 * r).cos())
    } else {
        0.0
    }
}

/// Number of equispaced offsets (plus endpoints) used when maximizing the
/// metrics over one lattice period.
const METRIC_SAMPLES: usize = 1024;

fn metric_extrema(omega: f64, h: f64, phi: Phi) -> (f64, f64) {
    assert!(omega > 0.0 && h > 0.0);
    let mut eps_unity = 0.0f64;
    let mut eps_mom = 0.0f64;
    for s in 0..=METRIC_SAMPLES {
        let x_off = h * s as f64 / METRIC_SAMPLES as f64;
        // Lattice points x = j*h with |x - x_off| < 2*omega.
        let j_lo = ((x_off - 2.0 * omega) / h).floor() as i64 - 1;
        let j_hi = ((x_off + 2.0 * omega) / h).ceil() as i64 + 1;
        let mut sum = 0.0;
        let mut mom = 0.0;
        for j in j_lo..=j_hi {
            let d = j as f64 * h - x_off;
            let v = phi.eval(d / omega) / omega * h;
            sum += v;
            mom += d * v;
        }
        eps_unity = eps_unity.max((sum - 1.0).abs());
        eps_mom = eps_mom.max(mom.abs());
    }
    (eps_unity, eps_mom)
}

/// Worst-case deviation of the 1D lattice sum of the delta from one, over
/// all kernel offsets within one lattice period.
pub fn epsilon_unity(omega: f64, h: f64, phi: Phi) -> f64 {
    metric_extrema(omega, h, phi).0
}

/// Worst-case magnitude of the 1D lattice first moment of the delta, over
/// all kernel offsets within one lattice period.
pub fn epsilon_mom(omega: f64, h: f64, phi: Phi) -> f64 {
    metric_extrema(omega, h, phi).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn phi1_pointwise() {
        assert_eq!(phi1(0.0), 0.5);
        assert!((phi1(1.0) - 0.25).abs() < 1e-15);
        // Both branches agree at |r| = 1.
        let lower = (3.0 - 2.0 + (1.0f64 + 4.0 - 4.0).sqrt()) / 8.0;
        let upper = (5.0 - 2.0 - (-7.0f64 + 12.0 - 4.0).sqrt()) / 8.0;
        assert_eq!(lower, upper);
        assert_eq!(phi1(2.0), 0.0);
        assert_eq!(phi1(-2.0), 0.0);
        assert!((phi1(0.5) - 0.426_776_695_296_636_87).abs() < 1e-15);
        assert!((phi1(1.5) - 0.073_223_304_703_363_1).abs() < 1e-15);
    }

    #[test]
    fn phi2_pointwise() {
        assert_eq!(phi2(0.0), 0.5);
        assert!((phi2(1.0) - 0.25).abs() < 1e-15);
        assert!(phi2(2.0).abs() < 1e-16);
        assert!(phi2(-2.0).abs() < 1e-16);
    }

    #[test]
    fn delta_tilde_values() {
        // 1D, omega = 1/50, x = 0: 50 * 0.5 = 25.
        let k = DeltaKernel::new(Phi::Phi1, 1.0 / 50.0, 1);
        assert!((k.eval(&[0.0]) - 25.0).abs() < 1e-12);
        // 2D, omega = 1/100, x = 0: 100^2 * 0.25 = 2500.
        let k = DeltaKernel::new(Phi::Phi2, 1.0 / 100.0, 2);
        assert!((k.eval(&[0.0, 0.0]) - 2500.0).abs() < 1e-9);
        // Outside the support cube.
        assert_eq!(k.eval(&[0.021, 0.0]), 0.0);
    }

    #[test]
    fn unity_and_moment_vanish_for_phi1_on_integer_refinements() {
        let omega = 0.01;
        for z in [1usize, 2, 3, 5, 8] {
            let h = omega / z as f64;
            assert!(epsilon_unity(omega, h, Phi::Phi1) < 1e-13, "z = {z}");
            assert!(epsilon_mom(omega, h, Phi::Phi1) < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn phi2_metrics_decrease_under_refinement() {
        let omega = 0.01;
        let coarse = epsilon_unity(omega, 1.0 / 128.0, Phi::Phi2);
        let fine = epsilon_unity(omega, 1.0 / 1024.0, Phi::Phi2);
        assert!(fine < coarse);
        // Frozen from an independent lattice-sum evaluation.
        assert!((coarse - 2.507_188e-3).abs() / coarse < 1e-3);
        assert!((fine - 1.802_338e-6).abs() / fine < 1e-3);
    }

    #[test]
    fn phi2_metrics_second_order() {
        // Order >= 2 on the ladder h, h/2, h/4 measured by log2 ratios.
        let omega = 0.01;
        let hs = [1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0];
        let eu: Vec<f64> = hs
            .iter()
            .map(|&h| epsilon_unity(omega, h, Phi::Phi2))
            .collect();
        let em: Vec<f64> = hs
            .iter()
            .map(|&h| epsilon_mom(omega, h, Phi::Phi2))
            .collect();
        for pair in eu.windows(2).chain(em.windows(2)) {
            let order = (pair[0] / pair[1]).log2();
            assert!(order >= 2.0, "observed order {order}");
        }
    }

    #[test]
    fn riemann_limits() {
        // Integral of the delta tends to 1 and its first moment to 0 as the
        // sampling step shrinks; checked at a generic (non-lattice) offset.
        let omega = 0.01;
        let h = omega / 2f64.powi(14) * 100.0; // 2^-14 on the unit scale
        for phi in [Phi::Phi1, Phi::Phi2] {
            let x_off = 0.37 * h;
            let j_lo = ((x_off - 2.0 * omega) / h).floor() as i64 - 1;
            let j_hi = ((x_off + 2.0 * omega) / h).ceil() as i64 + 1;
            let mut sum = 0.0;
            let mut mom = 0.0;
            for j in j_lo..=j_hi {
                let d = j as f64 * h - x_off;
                let v = phi.eval(d / omega) / omega * h;
                sum += v;
                mom += d * v;
            }
            assert!((sum - 1.0).abs() < 1e-6, "{phi:?}: {}", (sum - 1.0).abs());
            assert!(mom.abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn compact_support_and_symmetry(x in -0.1f64..0.1, y in -0.1f64..0.1) {
            let k = DeltaKernel::new(Phi::Phi1, 0.02, 2);
            let v = k.eval(&[x, y]);
            let mirrored = k.eval(&[-x, -y]);
            prop_assert!((v - mirrored).abs() <= 1e-12 * v.abs().max(1.0));
            if x.abs() >= 0.04 || y.abs() >= 0.04 {
                prop_assert_eq!(v, 0.0);
            }
            prop_assert!(v >= 0.0);
        }
    }
}
