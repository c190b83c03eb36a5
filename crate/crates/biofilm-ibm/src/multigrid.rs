//! Geometric multigrid: red-black Gauss-Seidel smoothing, full-weighting
//! restriction, linear prolongation, V-cycles, and work-unit accounting.
//!
//! The engine works on flux-form operators over uniform lattices. Two
//! lattice styles are supported by the same machinery: full grids whose
//! boundary points are pinned to data (or ghost-copied for outflow), used
//! by the momentum systems, and all-unknown lattices with end-face
//! closures, used by the parity sublattices of the pressure system.

use crate::error::{Result, SimError};
use crate::fields::{Grid, ScalarField};

/// Relative residual below which a stall is attributed to round-off rather
/// than a broken solver.
const ROUNDOFF_FLOOR: f64 = 1e-10;

/// Sweeps used for the direct-ish solve on the coarsest level.
pub const COARSE_SWEEPS: usize = 120;

/// Uniform lattice of points; a lattice in this module is the index space
/// of one linear system, not necessarily the full simulation grid.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub dim: usize,
    pub n: [usize; 3],
    pub spacing: f64,
}

impl Lattice {
    pub fn new(dim: usize, n: [usize; 3], spacing: f64) -> Lattice {
        Lattice { dim, n, spacing }
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

    #[inline(always)]
    pub fn strides(&self) -> [usize; 3] {
        [self.n[1] * self.n[2], self.n[2], 1]
    }

    /// Halved lattice: every other point starting at index 0.
    pub fn coarsen(&self) -> Lattice {
        let mut n = [1usize; 3];
        for a in 0..self.dim {
            n[a] = self.n[a].div_ceil(2);
        }
        Lattice {
            dim: self.dim,
            n,
            spacing: self.spacing * 2.0,
        }
    }

    /// True when another halving keeps enough points to smooth usefully.
    pub fn can_coarsen(&self) -> bool {
        (0..self.dim).all(|a| self.n[a] >= 7)
    }
}

/// Role of a lattice point in the linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    /// Unknown with a stencil equation.
    Active,
    /// Held at a fixed value (boundary datum; zero on error levels).
    Pinned,
    /// Ghost-copied from another point after every update.
    Copied,
}

/// Behavior of the outermost face of an all-unknown lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndClosure {
    /// No flux through the end face.
    Flux0,
    /// Flux to a datum half a stencil beyond the last point; the datum part
    /// of the term is assembled into the right-hand side, the diagonal part
    /// lives here.
    DirichletRhs,
}

/// Scalar flux-form operator: shift(x) u - div(c grad u) in discrete form.
#[derive(Debug, Clone)]
pub struct ScalarStencil {
    pub lat: Lattice,
    /// Flux coefficients per axis; axis `a` has extent `n[a] + 1` along `a`
    /// (entries 0 and n[a] are the end faces).
    pub face: [Vec<f64>; 3],
    pub end: [[EndClosure; 2]; 3],
    pub shift: Vec<f64>,
    pub kind: Vec<PointKind>,
    /// Copy source per point (only meaningful for `Copied` points).
    pub copy_src: Vec<u32>,
    diag: Vec<f64>,
    /// True when no hull point is active, enabling the fast interior sweeps.
    hull_inactive: bool,
}

impl ScalarStencil {
    /// All-active lattice with zero coefficients, ready for assembly.
    pub fn empty(lat: Lattice) -> ScalarStencil {
        let len = lat.len();
        let face = std::array::from_fn(|a| {
            if a < lat.dim {
                let mut m = lat.n;
                m[a] += 1;
                vec![0.0; m[0] * m[1] * m[2]]
            } else {
                Vec::new()
            }
        });
        ScalarStencil {
            lat,
            face,
            end: [[EndClosure::Flux0; 2]; 3],
            shift: vec![0.0; len],
            kind: vec![PointKind::Active; len],
            copy_src: vec![u32::MAX; len],
            diag: vec![0.0; len],
            hull_inactive: false,
        }
    }

    /// Index into the face array of `axis` for the face on the low side of
    /// point (i, j, k).
    #[inline(always)]
    pub fn face_idx(&self, axis: usize, i: usize, j: usize, k: usize) -> usize {
        let mut m = self.lat.n;
        m[axis] += 1;
        (i * m[1] + j) * m[2] + k
    }

    /// Precomputes diagonals; call after assembly and before smoothing.
    pub fn finalize(&mut self) {
        let lat = self.lat.clone();
        let inv_h2 = 1.0 / (lat.spacing * lat.spacing);
        let mut diag = vec![1.0; lat.len()];
        self.for_points(|s, i, j, k, idx| {
            if s.kind[idx] != PointKind::Active {
                return;
            }
            let mut d = s.shift[idx];
            for a in 0..lat.dim {
                let pos = [i, j, k][a];
                let f_lo = s.face_idx(a, i, j, k);
                let f_hi = f_lo + s.face_stride(a);
                if pos > 0 || s.end[a][0] == EndClosure::DirichletRhs {
                    d += s.face[a][f_lo] * inv_h2;
                }
                if pos + 1 < lat.n[a] || s.end[a][1] == EndClosure::DirichletRhs {
                    d += s.face[a][f_hi] * inv_h2;
                }
            }
            diag[idx] = d;
        });
        self.diag = diag;
        let lat = &self.lat;
        let mut hull_ok = lat.dim >= 2;
        let n = lat.n;
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let on_hull = i == 0
                        || i == n[0] - 1
                        || j == 0
                        || j == n[1] - 1
                        || (lat.dim == 3 && (k == 0 || k == n[2] - 1));
                    if on_hull && self.kind[lat.idx(i, j, k)] == PointKind::Active {
                        hull_ok = false;
                    }
                }
            }
        }
        self.hull_inactive = hull_ok;
    }

    #[inline(always)]
    fn face_stride(&self, axis: usize) -> usize {
        let mut m = self.lat.n;
        m[axis] += 1;
        [m[1] * m[2], m[2], 1][axis]
    }

    fn for_points(&mut self, mut f: impl FnMut(&ScalarStencil, usize, usize, usize, usize)) {
        let n = self.lat.n;
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = self.lat.idx(i, j, k);
                    f(self, i, j, k, idx);
                }
            }
        }
    }

    /// Off-diagonal neighbor sum scaled by 1/h^2, for the GS update and the
    /// residual; end faces contribute nothing here (their datum part lives
    /// in the right-hand side).
    #[inline(always)]
    fn neighbor_flux(&self, u: &[f64], i: usize, j: usize, k: usize, idx: usize) -> f64 {
        let st = self.lat.strides();
        let mut acc = 0.0;
        for a in 0..self.lat.dim {
            let pos = [i, j, k][a];
            let f_lo = self.face_idx(a, i, j, k);
            let f_hi = f_lo + self.face_stride(a);
            if pos > 0 {
                acc += self.face[a][f_lo] * u[idx - st[a]];
            }
            if pos + 1 < self.lat.n[a] {
                acc += self.face[a][f_hi] * u[idx + st[a]];
            }
        }
        acc / (self.lat.spacing * self.lat.spacing)
    }

    /// Off-diagonal flux sum, exposed for composite operators that add
    /// their own coupling terms around this stencil.
    #[inline(always)]
    pub fn neighbor_flux_at(&self, u: &[f64], i: usize, j: usize, k: usize, idx: usize) -> f64 {
        self.neighbor_flux(u, i, j, k, idx)
    }

    #[inline(always)]
    pub fn diag_at(&self, idx: usize) -> f64 {
        self.diag[idx]
    }

    pub fn refresh_copies(&self, u: &mut [f64]) {
        for idx in 0..u.len() {
            if self.kind[idx] == PointKind::Copied {
                u[idx] = u[self.copy_src[idx] as usize];
            }
        }
    }

    fn smooth_color(&self, u: &mut [f64], b: &[f64], color: usize) {
        if self.hull_inactive {
            match self.lat.dim {
                2 => return self.smooth_color_fast2d(u, b, color),
                3 => return self.smooth_color_fast3d(u, b, color),
                _ => {}
            }
        }
        let n = self.lat.n;
        for i in 0..n[0] {
            for j in 0..n[1] {
                let base = (i + j) % 2;
                let k0 = if self.lat.dim == 3 {
                    (color + base) % 2
                } else if base == color % 2 {
                    0
                } else {
                    continue;
                };
                let mut k = k0;
                while k < n[2] {
                    let idx = self.lat.idx(i, j, k);
                    if self.kind[idx] == PointKind::Active {
                        let rhs = b[idx] + self.neighbor_flux(u, i, j, k, idx);
                        u[idx] = rhs / self.diag[idx];
                    }
                    k += 2;
                }
            }
        }
    }

    /// Stride-2 sweep with incremental indexing; valid when every hull
    /// point is pinned or copied so active stencils never leave the array.
    fn smooth_color_fast2d(&self, u: &mut [f64], b: &[f64], color: usize) {
        let [nx, ny, _] = self.lat.n;
        let inv_h2 = 1.0 / (self.lat.spacing * self.lat.spacing);
        let (fx, fy) = (&self.face[0], &self.face[1]);
        for i in 1..nx - 1 {
            let row = i * ny;
            let fy_row = i * (ny + 1);
            let j0 = 1 + (i + 1 + color) % 2;
            let mut idx = row + j0;
            let mut fyi = fy_row + j0;
            let mut j = j0;
            while j < ny - 1 {
                if self.kind[idx] == PointKind::Active {
                    let flux = fx[idx] * u[idx - ny]
                        + fx[idx + ny] * u[idx + ny]
                        + fy[fyi] * u[idx - 1]
                        + fy[fyi + 1] * u[idx + 1];
                    u[idx] = (b[idx] + flux * inv_h2) / self.diag[idx];
                }
                idx += 2;
                fyi += 2;
                j += 2;
            }
        }
    }

    fn smooth_color_fast3d(&self, u: &mut [f64], b: &[f64], color: usize) {
        let [nx, ny, nz] = self.lat.n;
        let inv_h2 = 1.0 / (self.lat.spacing * self.lat.spacing);
        let (fx, fy, fz) = (&self.face[0], &self.face[1], &self.face[2]);
        let syz = ny * nz;
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                let row = (i * ny + j) * nz;
                // face_x lattice: [(nx+1), ny, nz]; lo face of (i,j,k) is
                // at the same linear offset as the point itself.
                let fx_row = row;
                let fy_row = (i * (ny + 1) + j) * nz;
                let fz_row = (i * ny + j) * (nz + 1);
                let k0 = 1 + (i + j + 1 + color) % 2;
                let mut k = k0;
                while k < nz - 1 {
                    let idx = row + k;
                    if self.kind[idx] == PointKind::Active {
                        let flux = fx[fx_row + k] * u[idx - syz]
                            + fx[fx_row + syz + k] * u[idx + syz]
                            + fy[fy_row + k] * u[idx - nz]
                            + fy[fy_row + nz + k] * u[idx + nz]
                            + fz[fz_row + k] * u[idx - 1]
                            + fz[fz_row + k + 1] * u[idx + 1];
                        u[idx] = (b[idx] + flux * inv_h2) / self.diag[idx];
                    }
                    k += 2;
                }
            }
        }
    }

    fn residual_fast(&self, u: &[f64], b: &[f64], r: &mut [f64]) {
        let inv_h2 = 1.0 / (self.lat.spacing * self.lat.spacing);
        r.iter_mut().for_each(|v| *v = 0.0);
        if self.lat.dim == 2 {
            let [nx, ny, _] = self.lat.n;
            let (fx, fy) = (&self.face[0], &self.face[1]);
            for i in 1..nx - 1 {
                let row = i * ny;
                let fy_row = i * (ny + 1);
                for j in 1..ny - 1 {
                    let idx = row + j;
                    if self.kind[idx] == PointKind::Active {
                        let flux = fx[idx] * u[idx - ny]
                            + fx[idx + ny] * u[idx + ny]
                            + fy[fy_row + j] * u[idx - 1]
                            + fy[fy_row + j + 1] * u[idx + 1];
                        r[idx] = b[idx] + flux * inv_h2 - self.diag[idx] * u[idx];
                    }
                }
            }
        } else {
            let [nx, ny, nz] = self.lat.n;
            let (fx, fy, fz) = (&self.face[0], &self.face[1], &self.face[2]);
            let syz = ny * nz;
            for i in 1..nx - 1 {
                for j in 1..ny - 1 {
                    let row = (i * ny + j) * nz;
                    let fy_row = (i * (ny + 1) + j) * nz;
                    let fz_row = (i * ny + j) * (nz + 1);
                    for k in 1..nz - 1 {
                        let idx = row + k;
                        if self.kind[idx] == PointKind::Active {
                            let flux = fx[row + k] * u[idx - syz]
                                + fx[row + syz + k] * u[idx + syz]
                                + fy[fy_row + k] * u[idx - nz]
                                + fy[fy_row + nz + k] * u[idx + nz]
                                + fz[fz_row + k] * u[idx - 1]
                                + fz[fz_row + k + 1] * u[idx + 1];
                            r[idx] = b[idx] + flux * inv_h2 - self.diag[idx] * u[idx];
                        }
                    }
                }
            }
        }
    }
}

/// One linear system an MG hierarchy can smooth and evaluate.
pub trait MgOperator {
    fn lattice(&self) -> &Lattice;
    fn ncomp(&self) -> usize;
    /// `sweeps` red-then-black passes.
    fn smooth(&self, u: &mut [Vec<f64>], b: &[Vec<f64>], sweeps: usize);
    fn residual(&self, u: &[Vec<f64>], b: &[Vec<f64>], r: &mut [Vec<f64>]);
    fn refresh_ghosts(&self, u: &mut [Vec<f64>]);
    fn active_points(&self) -> usize;
    /// Whether corrections may be added at this point (pinned data must
    /// never move).
    fn is_active(&self, idx: usize) -> bool;
    /// Magnitude scale of the operator rows, for round-off floor estimates.
    fn op_scale(&self) -> f64;
}

impl MgOperator for ScalarStencil {
    fn lattice(&self) -> &Lattice {
        &self.lat
    }

    fn ncomp(&self) -> usize {
        1
    }

    fn smooth(&self, u: &mut [Vec<f64>], b: &[Vec<f64>], sweeps: usize) {
        for _ in 0..sweeps {
            self.smooth_color(&mut u[0], &b[0], 0);
            self.smooth_color(&mut u[0], &b[0], 1);
            self.refresh_copies(&mut u[0]);
        }
    }

    fn residual(&self, u: &[Vec<f64>], b: &[Vec<f64>], r: &mut [Vec<f64>]) {
        if self.hull_inactive && self.lat.dim >= 2 {
            return self.residual_fast(&u[0], &b[0], &mut r[0]);
        }
        let n = self.lat.n;
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    let idx = self.lat.idx(i, j, k);
                    r[0][idx] = if self.kind[idx] == PointKind::Active {
                        b[0][idx] + self.neighbor_flux(&u[0], i, j, k, idx)
                            - self.diag[idx] * u[0][idx]
                    } else {
                        0.0
                    };
                }
            }
        }
    }

    fn refresh_ghosts(&self, u: &mut [Vec<f64>]) {
        self.refresh_copies(&mut u[0]);
    }

    fn active_points(&self) -> usize {
        self.kind.iter().filter(|k| **k == PointKind::Active).count()
    }

    fn is_active(&self, idx: usize) -> bool {
        self.kind[idx] == PointKind::Active
    }

    fn op_scale(&self) -> f64 {
        self.diag.iter().cloned().fold(0.0, f64::max)
    }
}

/// Full-weighting restriction between lattices (fine residual to coarse
/// right-hand side). Weights renormalize where the footprint is clipped.
pub fn restrict_to(fine_lat: &Lattice, coarse_lat: &Lattice, fine: &[f64], coarse: &mut [f64]) {
    let dim = fine_lat.dim;
    for ci in 0..coarse_lat.n[0] {
        for cj in 0..coarse_lat.n[1] {
            for ck in 0..coarse_lat.n[2] {
                let f = [2 * ci, 2 * cj, 2 * ck];
                let mut acc = 0.0;
                let mut wsum = 0.0;
                let ranges: Vec<std::ops::RangeInclusive<i64>> = (0..3)
                    .map(|a| if a < dim { -1..=1 } else { 0..=0 })
                    .collect();
                for di in ranges[0].clone() {
                    for dj in ranges[1].clone() {
                        for dk in ranges[2].clone() {
                            let p = [
                                f[0] as i64 + di,
                                f[1] as i64 + dj,
                                f[2] as i64 + dk,
                            ];
                            if (0..3).any(|a| p[a] < 0 || p[a] >= fine_lat.n[a] as i64) {
                                continue;
                            }
                            let w: f64 = [di, dj, dk][..dim]
                                .iter()
                                .map(|d| if *d == 0 { 0.5 } else { 0.25 })
                                .product();
                            acc += w * fine[fine_lat.idx(p[0] as usize, p[1] as usize, p[2] as usize)];
                            wsum += w;
                        }
                    }
                }
                coarse[coarse_lat.idx(ci, cj, ck)] = if wsum > 0.0 { acc / wsum } else { 0.0 };
            }
        }
    }
}

/// Linear prolongation of a coarse correction, added into the fine vector.
/// `gate` filters which fine points receive the correction.
pub fn prolong_add_gated(
    coarse_lat: &Lattice,
    fine_lat: &Lattice,
    coarse: &[f64],
    fine: &mut [f64],
    gate: impl Fn(usize) -> bool,
) {
    let dim = fine_lat.dim;
    let pieces = |a: usize, fi: usize| -> [(usize, f64); 2] {
        if a >= dim || fi % 2 == 0 {
            [(fi / 2, 1.0), (0, 0.0)]
        } else {
            let lo = fi / 2;
            let hi = ((fi + 1) / 2).min(coarse_lat.n[a] - 1);
            [(lo, 0.5), (hi, 0.5)]
        }
    };
    for i in 0..fine_lat.n[0] {
        let px = pieces(0, i);
        for j in 0..fine_lat.n[1] {
            let py = pieces(1, j);
            for k in 0..fine_lat.n[2] {
                let idx = fine_lat.idx(i, j, k);
                if !gate(idx) {
                    continue;
                }
                let pz = pieces(2, k);
                let mut v = 0.0;
                for (ci, wi) in px {
                    if wi == 0.0 {
                        continue;
                    }
                    for (cj, wj) in py {
                        if wj == 0.0 {
                            continue;
                        }
                        for (ck, wk) in pz {
                            if wk == 0.0 {
                                continue;
                            }
                            v += wi * wj * wk * coarse[coarse_lat.idx(ci, cj, ck)];
                        }
                    }
                }
                fine[idx] += v;
            }
        }
    }
}

/// Solver statistics for one linear solve.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub cycles: usize,
    /// Relaxation cost in units of one sweep over the reference point
    /// count (a finest-grid relaxation).
    pub work_units: f64,
    pub rel_residual: f64,
    pub history: Vec<f64>,
}

/// Multigrid hierarchy over one operator type.
pub struct Hierarchy<O: MgOperator> {
    pub ops: Vec<O>,
    u: Vec<Vec<Vec<f64>>>,
    b: Vec<Vec<Vec<f64>>>,
    r: Vec<Vec<Vec<f64>>>,
    pub nu1: usize,
    pub nu2: usize,
    /// Point count defining one work unit.
    pub reference_points: f64,
    pub work_units: std::cell::Cell<f64>,
}

impl<O: MgOperator> Hierarchy<O> {
    pub fn new(ops: Vec<O>, nu1: usize, nu2: usize) -> Hierarchy<O> {
        assert!(!ops.is_empty());
        let reference = ops[0].active_points() as f64;
        let mut u = Vec::new();
        let mut b = Vec::new();
        let mut r = Vec::new();
        for op in &ops {
            let len = op.lattice().len();
            u.push(vec![vec![0.0; len]; op.ncomp()]);
            b.push(vec![vec![0.0; len]; op.ncomp()]);
            r.push(vec![vec![0.0; len]; op.ncomp()]);
        }
        Hierarchy {
            ops,
            u,
            b,
            r,
            nu1,
            nu2,
            reference_points: reference,
            work_units: std::cell::Cell::new(0.0),
        }
    }

    pub fn levels(&self) -> usize {
        self.ops.len()
    }

    /// Finest-level solution (and right-hand side) access for assembly.
    pub fn solution(&self) -> &Vec<Vec<f64>> {
        &self.u[0]
    }

    pub fn solution_mut(&mut self) -> &mut Vec<Vec<f64>> {
        &mut self.u[0]
    }

    pub fn rhs_mut(&mut self) -> &mut Vec<Vec<f64>> {
        &mut self.b[0]
    }

    fn charge(&self, level: usize, sweeps: usize) {
        let pts = self.ops[level].active_points() as f64;
        self.work_units
            .set(self.work_units.get() + sweeps as f64 * pts / self.reference_points);
    }

    fn vcycle_level(&mut self, level: usize) {
        let last = self.ops.len() - 1;
        if level == last {
            let sweeps = if last == 0 {
                self.nu1 + self.nu2
            } else {
                COARSE_SWEEPS
            };
            self.ops[level].smooth(&mut self.u[level], &self.b[level], sweeps);
            self.charge(level, sweeps);
            return;
        }
        self.ops[level].smooth(&mut self.u[level], &self.b[level], self.nu1);
        self.charge(level, self.nu1);
        self.ops[level].residual(&self.u[level], &self.b[level], &mut self.r[level]);
        // Restrict the residual into the coarse right-hand side and recurse
        // from a zero initial guess.
        let (fine_lat, coarse_lat) = (
            self.ops[level].lattice().clone(),
            self.ops[level + 1].lattice().clone(),
        );
        for c in 0..self.ops[level].ncomp() {
            let (rs, bs) = (&self.r[level][c], &mut self.b[level + 1][c]);
            restrict_to(&fine_lat, &coarse_lat, rs, bs);
            self.u[level + 1][c].iter_mut().for_each(|v| *v = 0.0);
        }
        self.vcycle_level(level + 1);
        for c in 0..self.ops[level].ncomp() {
            // Split borrows: coarse solution and fine solution.
            let (head, tail) = self.u.split_at_mut(level + 1);
            let coarse = &tail[0][c];
            let fine = &mut head[level][c];
            let op = &self.ops[level];
            prolong_add_gated(&coarse_lat, &fine_lat, coarse, fine, |idx| op.is_active(idx));
        }
        self.ops[level].refresh_ghosts(&mut self.u[level]);
        self.ops[level].smooth(&mut self.u[level], &self.b[level], self.nu2);
        self.charge(level, self.nu2);
    }

    /// One V-cycle on the finest level.
    pub fn v_cycle(&mut self) {
        self.vcycle_level(0);
    }

    pub fn finest_residual_norm(&mut self) -> f64 {
        let (ops, u, b, r) = (&self.ops[0], &self.u[0], &self.b[0], &mut self.r[0]);
        ops.residual(u, b, r);
        l2(r)
    }

    /// V-cycles until the relative residual reaches `tol`. Always performs
    /// at least `min_cycles` cycles (warm starts stay exact once converged the
    /// iteration keeps contracting toward round-off).
    pub fn solve_to_tolerance(
        &mut self,
        tol: f64,
        max_cycles: usize,
        min_cycles: usize,
    ) -> std::result::Result<SolveStats, (SimError, SolveStats)> {
        assert!(tol > 0.0);
        self.work_units.set(0.0);
        let r0 = self.finest_residual_norm();
        let bnorm = l2(&self.b[0]).max(r0).max(f64::MIN_POSITIVE);
        // Residuals below the round-off floor of the operator and solution
        // magnitudes carry no information; treat them as converged.
        let floor_abs = |u: &[Vec<f64>], op: &O| -> f64 {
            5.0 * f64::EPSILON * op.op_scale() * l2(u).max(1.0)
        };
        let mut history = Vec::new();
        let mut rel = r0 / bnorm;
        history.push(rel);
        let mut cycles = 0;
        let converged = |rel: f64, fl: f64| rel <= tol || rel * bnorm <= fl;
        let mut fl = floor_abs(&self.u[0], &self.ops[0]);
        while cycles < max_cycles && (!converged(rel, fl) || cycles < min_cycles) {
            self.v_cycle();
            cycles += 1;
            rel = self.finest_residual_norm() / bnorm;
            history.push(rel);
            fl = floor_abs(&self.u[0], &self.ops[0]);
            // Stall detection: progress lost within a small factor of the
            // round-off floor means the machine-precision limit is reached.
            // Slow-but-converging iterations (single-level relaxation) are
            // left to run; max_cycles bounds them.
            if !converged(rel, fl) && history.len() >= 8 && cycles >= min_cycles {
                let prev = history[history.len() - 4];
                let at_floor = rel <= ROUNDOFF_FLOOR || rel * bnorm <= 50.0 * fl;
                if rel > 0.95 * prev && at_floor {
                    let stats = SolveStats {
                        cycles,
                        work_units: self.work_units.get(),
                        rel_residual: rel,
                        history,
                    };
                    return Err((
                        SimError::Stagnation {
                            residual: rel,
                            tol,
                            cycles,
                            at_floor: true,
                        },
                        stats,
                    ));
                }
            }
        }
        let stats = SolveStats {
            cycles,
            work_units: self.work_units.get(),
            rel_residual: rel,
            history: history.clone(),
        };
        if !converged(rel, fl) {
            return Err((
                SimError::NoConvergence {
                    residual: rel,
                    tol,
                    cycles,
                },
                stats,
            ));
        }
        if rel > tol {
            // Converged only in the round-off sense: the requested tolerance
            // sits below the machine floor. Reported distinctly.
            return Err((
                SimError::Stagnation {
                    residual: rel,
                    tol,
                    cycles,
                    at_floor: true,
                },
                stats,
            ));
        }
        Ok(stats)
    }
}

fn l2(v: &[Vec<f64>]) -> f64 {
    v.iter()
        .flat_map(|c| c.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Full-weighting restriction of a grid field onto the halved grid;
/// boundary points are injected.
pub fn restrict_full_weighting(fine: &ScalarField) -> Result<ScalarField> {
    let g = &fine.grid;
    let mut n_c = [1usize; 3];
    for a in 0..g.dim {
        if (g.n[a] - 1) % 2 != 0 {
            return Err(SimError::Field(format!(
                "axis {a} with {} points cannot be halved",
                g.n[a]
            )));
        }
        n_c[a] = (g.n[a] - 1) / 2 + 1;
    }
    let coarse_grid = Grid {
        dim: g.dim,
        n: n_c,
        h: g.h * 2.0,
        extent: g.extent,
        boundary: g.boundary,
    };
    let mut out = ScalarField::zeros(&coarse_grid);
    for ci in 0..n_c[0] {
        for cj in 0..n_c[1] {
            for ck in 0..n_c[2] {
                let (i, j, k) = (2 * ci, 2 * cj, 2 * ck);
                let cidx = coarse_grid.idx(ci, cj, ck);
                if coarse_grid.on_boundary(ci, cj, ck) {
                    out.data[cidx] = fine.at(i, j, k);
                    continue;
                }
                let mut acc = 0.0;
                let kr: &[i64] = if g.dim == 3 { &[-1, 0, 1] } else { &[0] };
                for di in [-1i64, 0, 1] {
                    for dj in [-1i64, 0, 1] {
                        for dk in kr {
                            let w: f64 = [di, dj, *dk][..g.dim]
                                .iter()
                                .map(|d| if *d == 0 { 0.5 } else { 0.25 })
                                .product();
                            acc += w
                                * fine.at(
                                    (i as i64 + di) as usize,
                                    (j as i64 + dj) as usize,
                                    (k as i64 + dk) as usize,
                                );
                        }
                    }
                }
                out.data[cidx] = acc;
            }
        }
    }
    Ok(out)
}

/// Bi/trilinear prolongation of a grid field onto the doubled grid.
pub fn interpolate_linear(coarse: &ScalarField, fine_grid: &Grid) -> ScalarField {
    let cg = &coarse.grid;
    let mut out = ScalarField::zeros(fine_grid);
    let clat = Lattice::new(cg.dim, cg.n, cg.h);
    let flat = Lattice::new(fine_grid.dim, fine_grid.n, fine_grid.h);
    prolong_add_gated(&clat, &flat, &coarse.data, &mut out.data, |_| true);
    out
}
