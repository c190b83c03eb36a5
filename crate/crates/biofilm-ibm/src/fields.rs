//! Uniform colocated grid storage, finite-difference operators, and grid
//! function norms.
//!
//! All unknowns live at grid points (no staggering); the stencils below are
//! the ones the projection scheme is built from. Operators evaluate on
//! interior points only; boundary rows are owned by the boundary-condition
//! layer.

use crate::error::{Result, SimError};

/// Role of one face of the computational box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Inflow,
    Outflow,
    WallBottom,
    WallTop,
    WallSide,
}

/// Uniform colocated grid. Axis order is (x, y, z); row-major storage with
/// the last axis contiguous.
#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    /// Points per axis; unused axes hold 1.
    pub n: [usize; 3],
    pub h: f64,
    pub extent: [f64; 3],
    /// Face roles in order x-lo, x-hi, y-lo, y-hi, z-lo, z-hi.
    pub boundary: [BoundaryKind; 6],
}

impl Grid {
    /// Tube grid with the flow axis and wall layout used throughout: in 2D
    /// flow is along x with walls at y extremes; in 3D flow is along z with
    /// the bottom wall at y = 0 and side walls at the x extremes.
    pub fn tube(dim: usize, extent: [f64; 3], h: f64) -> Result<Grid> {
        use BoundaryKind::*;
        assert!(dim == 2 || dim == 3);
        let mut n = [1usize; 3];
        for a in 0..dim {
            let cells = extent[a] / h;
            let rounded = cells.round();
            if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
                return Err(SimError::Field(format!(
                    "extent {} along axis {a} is not an integer multiple of h = {h}",
                    extent[a]
                )));
            }
            n[a] = rounded as usize + 1;
            if n[a] < 5 {
                return Err(SimError::Field(format!(
                    "axis {a} has {} points; at least 5 required",
                    n[a]
                )));
            }
        }
        let boundary = if dim == 2 {
            [Inflow, Outflow, WallBottom, WallTop, WallSide, WallSide]
        } else {
            [WallSide, WallSide, WallBottom, WallTop, Inflow, Outflow]
        };
        Ok(Grid {
            dim,
            n,
            h,
            extent,
            boundary,
        })
    }

    /// Axis along which the flow runs (x in 2D, z in 3D).
    pub fn flow_axis(&self) -> usize {
        if self.dim == 2 {
            0
        } else {
            2
        }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline(always)]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    /// Strides per axis in the flat layout.
    #[inline(always)]
    pub fn strides(&self) -> [usize; 3] {
        [self.n[1] * self.n[2], self.n[2], 1]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [i as f64 * self.h, j as f64 * self.h, k as f64 * self.h]
    }

    pub fn contains(&self, x: &[f64; 3]) -> bool {
        (0..self.dim).all(|a| x[a] >= 0.0 && x[a] <= self.extent[a])
    }

    /// Visits every interior point (all axes strictly inside).
    pub fn for_interior(&self, mut f: impl FnMut(usize, usize, usize, usize)) {
        let kr = if self.dim == 3 { 1..self.n[2] - 1 } else { 0..1 };
        for i in 1..self.n[0] - 1 {
            for j in 1..self.n[1] - 1 {
                for k in kr.clone() {
                    f(i, j, k, self.idx(i, j, k));
                }
            }
        }
    }

    /// True when the point touches any face of the box.
    pub fn on_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0
            || i == self.n[0] - 1
            || j == 0
            || j == self.n[1] - 1
            || (self.dim == 3 && (k == 0 || k == self.n[2] - 1))
    }
}

/// Scalar grid function.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            data: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, v: f64) -> ScalarField {
        ScalarField {
            grid: grid.clone(),
            data: vec![v; grid.len()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 3]) -> f64) -> ScalarField {
        let mut out = ScalarField::zeros(grid);
        for i in 0..grid.n[0] {
            for j in 0..grid.n[1] {
                for k in 0..grid.n[2] {
                    out.data[grid.idx(i, j, k)] = f(grid.point(i, j, k));
                }
            }
        }
        out
    }

    #[inline(always)]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.grid.idx(i, j, k)]
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Vector grid function stored one contiguous array per component.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> VectorField {
        VectorField {
            grid: grid.clone(),
            comps: vec![vec![0.0; grid.len()]; grid.dim],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut([f64; 3]) -> Vec<f64>) -> VectorField {
        let mut out = VectorField::zeros(grid);
        for i in 0..grid.n[0] {
            for j in 0..grid.n[1] {
                for k in 0..grid.n[2] {
                    let v = f(grid.point(i, j, k));
                    let idx = grid.idx(i, j, k);
                    for (c, comp) in out.comps.iter_mut().enumerate() {
                        comp[idx] = v[c];
                    }
                }
            }
        }
        out
    }

    pub fn magnitude_max(&self) -> f64 {
        let mut m = 0.0f64;
        for idx in 0..self.grid.len() {
            let s: f64 = self.comps.iter().map(|c| c[idx] * c[idx]).sum();
            m = m.max(s);
        }
        m.sqrt()
    }
}

/// Standard 2*dim+1 point Laplacian on interior points.
pub fn laplacian_lh(f: &ScalarField) -> ScalarField {
    let g = &f.grid;
    let st = g.strides();
    let h2 = g.h * g.h;
    let mut out = ScalarField::zeros(g);
    g.for_interior(|_, _, _, idx| {
        let mut acc = -2.0 * g.dim as f64 * f.data[idx];
        for a in 0..g.dim {
            acc += f.data[idx + st[a]] + f.data[idx - st[a]];
        }
        out.data[idx] = acc / h2;
    });
    out
}

/// Centered first difference along `axis` on interior points.
pub fn central_d0(f: &ScalarField, axis: usize) -> ScalarField {
    let g = &f.grid;
    let s = g.strides()[axis];
    let two_h = 2.0 * g.h;
    let mut out = ScalarField::zeros(g);
    g.for_interior(|_, _, _, idx| {
        out.data[idx] = (f.data[idx + s] - f.data[idx - s]) / two_h;
    });
    out
}

/// Flux-form variable-coefficient operator with face values taken as the
/// arithmetic mean of the adjacent nodal coefficients.
pub fn div_a_grad(a: &ScalarField, f: &ScalarField) -> Result<ScalarField> {
    if a.min() <= 0.0 {
        return Err(SimError::Field(
            "div_a_grad requires a strictly positive coefficient".into(),
        ));
    }
    let g = &f.grid;
    let st = g.strides();
    let h2 = g.h * g.h;
    let mut out = ScalarField::zeros(g);
    g.for_interior(|_, _, _, idx| {
        let mut acc = 0.0;
        for a_ix in 0..g.dim {
            let s = st[a_ix];
            let a_hi = 0.5 * (a.data[idx] + a.data[idx + s]);
            let a_lo = 0.5 * (a.data[idx] + a.data[idx - s]);
            acc += a_hi * (f.data[idx + s] - f.data[idx]) - a_lo * (f.data[idx] - f.data[idx - s]);
        }
        out.data[idx] = acc / h2;
    });
    Ok(out)
}

/// Mixed-derivative part of the viscous operator for velocity component `k`:
/// the k-diagonal term in compact flux form with face-averaged coefficients,
/// plus wide centered cross terms with nodal coefficients.
pub fn div_a_partial_t(a: &ScalarField, u: &VectorField, k: usize) -> Result<ScalarField> {
    if a.min() <= 0.0 {
        return Err(SimError::Field(
            "div_a_partial_t requires a strictly positive coefficient".into(),
        ));
    }
    let g = &u.grid;
    let st = g.strides();
    let h2 = g.h * g.h;
    let four_h2 = 4.0 * h2;
    let sk = st[k];
    let uk = &u.comps[k];
    let mut out = ScalarField::zeros(g);
    g.for_interior(|_, _, _, idx| {
        let a_hi = 0.5 * (a.data[idx] + a.data[idx + sk]);
        let a_lo = 0.5 * (a.data[idx] + a.data[idx - sk]);
        let mut acc = (a_hi * (uk[idx + sk] - uk[idx]) - a_lo * (uk[idx] - uk[idx - sk])) / h2;
        for i_ax in 0..g.dim {
            if i_ax == k {
                continue;
            }
            let si = st[i_ax];
            let ui = &u.comps[i_ax];
            acc += (a.data[idx + si] * (ui[idx + si + sk] - ui[idx + si - sk])
                - a.data[idx - si] * (ui[idx - si + sk] - ui[idx - si - sk]))
                / four_h2;
        }
        out.data[idx] = acc;
    });
    Ok(out)
}

/// Norm selector for grid functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    One,
    Two,
    Inf,
}

impl Norm {
    pub fn label(self) -> &'static str {
        match self {
            Norm::One => "1",
            Norm::Two => "2",
            Norm::Inf => "inf",
        }
    }
}

/// Eulerian grid function p-norm with the pointwise Euclidean magnitude
/// across components and cell weight h^D. Each point owns the cell on its
/// upper side, so the weights sum exactly to the domain measure; the
/// infinity norm instead scans every point.
pub fn grid_pnorm(comps: &[&[f64]], grid: &Grid, p: Norm) -> f64 {
    let mag2_at = |idx: usize| -> f64 { comps.iter().map(|c| c[idx] * c[idx]).sum() };
    if p == Norm::Inf {
        let mut m = 0.0f64;
        for idx in 0..grid.len() {
            m = m.max(mag2_at(idx));
        }
        return m.sqrt();
    }
    let weight = grid.h.powi(grid.dim as i32);
    let kr = if grid.dim == 3 { grid.n[2] - 1 } else { 1 };
    let mut acc = 0.0f64;
    for i in 0..grid.n[0] - 1 {
        for j in 0..grid.n[1] - 1 {
            for k in 0..kr {
                let mag2 = mag2_at(grid.idx(i, j, k));
                match p {
                    Norm::One => acc += mag2.sqrt() * weight,
                    Norm::Two => acc += mag2 * weight,
                    Norm::Inf => unreachable!(),
                }
            }
        }
    }
    match p {
        Norm::One => acc,
        Norm::Two => acc.sqrt(),
        Norm::Inf => unreachable!(),
    }
}

pub fn vector_pnorm(u: &VectorField, p: Norm) -> f64 {
    let refs: Vec<&[f64]> = u.comps.iter().map(|c| c.as_slice()).collect();
    grid_pnorm(&refs, &u.grid, p)
}

pub fn scalar_pnorm(f: &ScalarField, p: Norm) -> f64 {
    grid_pnorm(&[&f.data], &f.grid, p)
}

/// Lagrangian grid function p-norm with volume-element weight d0^D.
pub fn lagrangian_pnorm(points: &[[f64; 3]], dim: usize, d0: f64, p: Norm) -> f64 {
    let weight = d0.powi(dim as i32);
    let mut acc = 0.0f64;
    for x in points {
        let mag2: f64 = x[..dim].iter().map(|v| v * v).sum();
        match p {
            Norm::One => acc += mag2.sqrt() * weight,
            Norm::Two => acc += mag2 * weight,
            Norm::Inf => acc = acc.max(mag2),
        }
    }
    match p {
        Norm::One => acc,
        Norm::Two => acc.sqrt(),
        Norm::Inf => acc.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn unit_grid(n: usize) -> Grid {
        Grid::tube(2, [1.0, 1.0, 0.0], 1.0 / (n as f64 - 1.0)).unwrap()
    }

    #[test]
    fn laplacian_constant_and_quadratic() {
        let g = unit_grid(17);
        let c = ScalarField::constant(&g, 3.7);
        let lap = laplacian_lh(&c);
        g.for_interior(|_, _, _, idx| assert!(lap.data[idx].abs() < 1e-12));

        let q = ScalarField::from_fn(&g, |x| x[0] * x[0] + x[1] * x[1]);
        let lap = laplacian_lh(&q);
        g.for_interior(|_, _, _, idx| assert!((lap.data[idx] - 4.0).abs() < 1e-10));
    }

    #[test]
    fn laplacian_second_order_on_sine() {
        let g = Grid::tube(2, [1.0, 1.0, 0.0], 1.0 / 64.0).unwrap();
        let f = ScalarField::from_fn(&g, |x| (std::f64::consts::PI * x[0]).sin());
        let lap = laplacian_lh(&f);
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut worst = 0.0f64;
        g.for_interior(|i, j, k, idx| {
            let x = g.point(i, j, k);
            let exact = -pi2 * (std::f64::consts::PI * x[0]).sin();
            worst = worst.max((lap.data[idx] - exact).abs());
        });
        assert!(worst < 0.01 * pi2, "worst interior error {worst}");
    }

    #[test]
    fn central_difference_examples() {
        let g = unit_grid(129);
        let lin = ScalarField::from_fn(&g, |x| 3.0 * x[0]);
        let d = central_d0(&lin, 0);
        g.for_interior(|_, _, _, idx| assert!((d.data[idx] - 3.0).abs() < 1e-12));

        let cube = ScalarField::from_fn(&g, |x| x[0] * x[0] * x[0]);
        let d = central_d0(&cube, 0);
        let mid = g.idx(64, 64, 0);
        assert!((d.data[mid] - 0.75).abs() < 1e-4);
    }

    #[test]
    fn div_a_grad_reductions() {
        let g = unit_grid(33);
        let one = ScalarField::constant(&g, 1.0);
        let f = ScalarField::from_fn(&g, |x| (x[0] + 0.3 * x[1]).powi(3));
        let flux = div_a_grad(&one, &f).unwrap();
        let lap = laplacian_lh(&f);
        g.for_interior(|_, _, _, idx| {
            assert!((flux.data[idx] - lap.data[idx]).abs() < 1e-10);
        });

        let two = ScalarField::constant(&g, 2.0);
        let q = ScalarField::from_fn(&g, |x| x[0] * x[0]);
        let flux = div_a_grad(&two, &q).unwrap();
        g.for_interior(|_, _, _, idx| assert!((flux.data[idx] - 4.0).abs() < 1e-10));

        // a = 1 + x, f = x: d/dx((1+x) * 1) = 1 exactly for this stencil.
        let a = ScalarField::from_fn(&g, |x| 1.0 + x[0]);
        let lin = ScalarField::from_fn(&g, |x| x[0]);
        let flux = div_a_grad(&a, &lin).unwrap();
        g.for_interior(|_, _, _, idx| assert!((flux.data[idx] - 1.0).abs() < 1e-12));

        let bad = ScalarField::constant(&g, -1.0);
        assert!(div_a_grad(&bad, &f).is_err());
    }

    #[test]
    fn div_a_partial_t_examples() {
        let g = unit_grid(33);
        let one = ScalarField::constant(&g, 1.0);
        // Constant velocity: zero.
        let u = VectorField::from_fn(&g, |_| vec![1.3, -0.4]);
        for k in 0..2 {
            let t = div_a_partial_t(&one, &u, k).unwrap();
            g.for_interior(|_, _, _, idx| assert!(t.data[idx].abs() < 1e-12));
        }
        // Divergence-free linear field: full viscous sum matches the
        // constant-coefficient Laplacian (both vanish on linears).
        let u = VectorField::from_fn(&g, |x| vec![2.0 * x[0] + x[1], -2.0 * x[1]]);
        for k in 0..2 {
            let t = div_a_partial_t(&one, &u, k).unwrap();
            let lap = laplacian_lh(&ScalarField {
                grid: g.clone(),
                data: u.comps[k].clone(),
            });
            g.for_interior(|_, _, _, idx| {
                let full = div_a_grad(&one, &ScalarField {
                    grid: g.clone(),
                    data: u.comps[k].clone(),
                })
                .unwrap()
                .data[idx]
                    + t.data[idx];
                assert!((full - lap.data[idx]).abs() < 1e-13);
            });
        }
        // Linearity in the coefficient.
        let u = VectorField::from_fn(&g, |x| vec![(x[0] * 2.1).sin(), x[1] * x[0]]);
        let c = 3.25;
        let ac = ScalarField::constant(&g, c);
        let t1 = div_a_partial_t(&one, &u, 0).unwrap();
        let tc = div_a_partial_t(&ac, &u, 0).unwrap();
        g.for_interior(|_, _, _, idx| {
            assert!((tc.data[idx] - c * t1.data[idx]).abs() < 1e-10 * t1.data[idx].abs().max(1.0));
        });
    }

    #[test]
    fn operators_are_linear() {
        let g = unit_grid(17);
        let mut rng = StdRng::seed_from_u64(7);
        let mut rand_field = || {
            let mut f = ScalarField::zeros(&g);
            for v in f.data.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            f
        };
        let f1 = rand_field();
        let f2 = rand_field();
        let (alpha, beta) = (1.7, -0.6);
        let mut combo = ScalarField::zeros(&g);
        for idx in 0..g.len() {
            combo.data[idx] = alpha * f1.data[idx] + beta * f2.data[idx];
        }
        for op in [laplacian_lh, |f: &ScalarField| central_d0(f, 1)] {
            let lhs = op(&combo);
            let r1 = op(&f1);
            let r2 = op(&f2);
            g.for_interior(|_, _, _, idx| {
                let rhs = alpha * r1.data[idx] + beta * r2.data[idx];
                assert!((lhs.data[idx] - rhs).abs() < 1e-13 * rhs.abs().max(1.0));
            });
        }
    }

    #[test]
    fn flux_operator_is_symmetric_on_interior_supported_fields() {
        // <f, op(g)> = <op(f), g> for fields vanishing near the boundary.
        let g = unit_grid(17);
        let a = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * (x[0] + x[1]));
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..5 {
            let mut f = ScalarField::zeros(&g);
            let mut q = ScalarField::zeros(&g);
            for i in 2..g.n[0] - 2 {
                for j in 2..g.n[1] - 2 {
                    f.data[g.idx(i, j, 0)] = rng.gen_range(-1.0..1.0);
                    q.data[g.idx(i, j, 0)] = rng.gen_range(-1.0..1.0);
                }
            }
            let op_f = div_a_grad(&a, &f).unwrap();
            let op_q = div_a_grad(&a, &q).unwrap();
            let dot = |x: &ScalarField, y: &ScalarField| -> f64 {
                x.data.iter().zip(&y.data).map(|(a, b)| a * b).sum()
            };
            let lhs = dot(&f, &op_q);
            let rhs = dot(&op_f, &q);
            assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn norms() {
        let g = unit_grid(65);
        let u = VectorField::from_fn(&g, |_| vec![1.0, 0.0]);
        // Cell weights sum to the domain measure, so the 2-norm of a unit
        // constant on the unit square is exactly 1.
        let two = vector_pnorm(&u, Norm::Two);
        assert!((two - 1.0).abs() < 1e-12);
        assert!((vector_pnorm(&u, Norm::Inf) - 1.0).abs() < 1e-15);

        let pts = [[3.0, 4.0, 0.0]];
        assert!((lagrangian_pnorm(&pts, 2, 1.0, Norm::Inf) - 5.0).abs() < 1e-15);

        let mut f = ScalarField::zeros(&g);
        f.data[g.idx(5, 9, 0)] = -2.5;
        assert!((scalar_pnorm(&f, Norm::Inf) - 2.5).abs() < 1e-15);
    }
}
