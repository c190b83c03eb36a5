//! Validation studies: temporal and spatial refinement errors, empirical
//! convergence rates, and the time-step stability sweep.

use crate::error::{Result, SimError};
use crate::fields::{grid_pnorm, lagrangian_pnorm, Norm, VectorField};
use crate::multigrid::restrict_full_weighting;
use crate::projection::{Init, Simulation};
use crate::scenario::Scenario;

/// Which refinement a study varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Temporal,
    Spatial,
}

/// Which quantity an error ladder measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Velocity,
    Positions,
}

impl Quantity {
    pub fn label(self) -> &'static str {
        match self {
            Quantity::Velocity => "u",
            Quantity::Positions => "X",
        }
    }
}

/// Error ladder and the rates of one measured quantity in one norm.
#[derive(Debug, Clone)]
pub struct RateLadder {
    pub quantity: Quantity,
    pub norm: Norm,
    /// Refinement parameter of each rung (dt or h).
    pub params: Vec<f64>,
    pub errors: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Full refinement report.
#[derive(Debug, Clone)]
pub struct RefinementReport {
    pub kind: StudyKind,
    pub ladders: Vec<RateLadder>,
    /// Rungs flagged unstable by the kinetic-energy monitor.
    pub unstable_rungs: Vec<usize>,
    pub fingerprint: u64,
}

impl RefinementReport {
    pub fn ladder(&self, q: Quantity, norm: Norm) -> &RateLadder {
        self.ladders
            .iter()
            .find(|l| l.quantity == q && l.norm == norm)
            .expect("ladder present")
    }

    /// Plot-ready CSV: one row per rung with log2 axes included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,norm,param,error,log2_param,log2_error,rate\n");
        for l in &self.ladders {
            for (i, (p, e)) in l.params.iter().zip(&l.errors).enumerate() {
                let rate = l
                    .rates
                    .get(i)
                    .map(|r| format!("{r:.6}"))
                    .unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{:.8e},{:.8e},{:.4},{:.4},{}\n",
                    l.quantity.label(),
                    l.norm.label(),
                    p,
                    e,
                    p.log2(),
                    e.log2(),
                    rate
                ));
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for l in &self.ladders {
            out.push_str(&format!(
                "r_{}({}) rates: {}\n",
                l.norm.label(),
                l.quantity.label(),
                l.rates
                    .iter()
                    .map(|r| format!("{r:.2}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        out
    }
}

/// Difference between two same-grid states in the Eulerian norm.
pub fn temporal_error(coarse: &VectorField, fine: &VectorField, p: Norm) -> Result<f64> {
    if coarse.grid.n != fine.grid.n || coarse.comps.len() != fine.comps.len() {
        return Err(SimError::Validation("temporal error: shape mismatch".into()));
    }
    let diff = diff_field(coarse, fine);
    let refs: Vec<&[f64]> = diff.comps.iter().map(|c| c.as_slice()).collect();
    Ok(grid_pnorm(&refs, &coarse.grid, p))
}

/// Difference between a coarse-grid state and the full-weighting restriction
/// of a doubled-resolution state.
pub fn spatial_error(coarse: &VectorField, fine: &VectorField, p: Norm) -> Result<f64> {
    for a in 0..coarse.grid.dim {
        if fine.grid.n[a] != 2 * (coarse.grid.n[a] - 1) + 1 {
            return Err(SimError::Validation(format!(
                "spatial error: fine grid {:?} is not the doubled coarse grid {:?}",
                fine.grid.n, coarse.grid.n
            )));
        }
    }
    let mut restricted = VectorField::zeros(&coarse.grid);
    for (a, comp) in fine.comps.iter().enumerate() {
        let f = crate::fields::ScalarField {
            grid: fine.grid.clone(),
            data: comp.clone(),
        };
        restricted.comps[a] = restrict_full_weighting(&f)?.data;
    }
    let diff = diff_field(coarse, &restricted);
    let refs: Vec<&[f64]> = diff.comps.iter().map(|c| c.as_slice()).collect();
    Ok(grid_pnorm(&refs, &coarse.grid, p))
}

fn diff_field(a: &VectorField, b: &VectorField) -> VectorField {
    let mut out = a.clone();
    for (c, bc) in out.comps.iter_mut().zip(&b.comps) {
        for (x, y) in c.iter_mut().zip(bc) {
            *x -= y;
        }
    }
    out
}

/// Lagrangian position error between runs sharing the node count.
pub fn position_error(a: &[[f64; 3]], b: &[[f64; 3]], dim: usize, d0: f64, p: Norm) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SimError::Validation(
            "position error: node count mismatch".into(),
        ));
    }
    let diffs: Vec<[f64; 3]> = a
        .iter()
        .zip(b)
        .map(|(x, y)| [x[0] - y[0], x[1] - y[1], x[2] - y[2]])
        .collect();
    Ok(lagrangian_pnorm(&diffs, dim, d0, p))
}

/// Empirical rate from two successive ladder errors; `None` marks an
/// indeterminate 0/0 pair.
pub fn rate(coarse_err: f64, fine_err: f64) -> Option<f64> {
    if coarse_err == 0.0 && fine_err == 0.0 {
        return None;
    }
    if fine_err == 0.0 {
        return Some(f64::INFINITY);
    }
    Some((coarse_err / fine_err).log2())
}

fn run_to_time(scenario: &Scenario) -> Result<Simulation> {
    let mut sim = Simulation::new(scenario.clone(), Init::Laminar)?;
    sim.run_to_end()?;
    Ok(sim)
}

/// Executes a refinement ladder and assembles the report. The scenarios
/// must share the final time and, for a temporal study, the grid.
pub fn run_refinement_study(kind: StudyKind, rungs: &[Scenario]) -> Result<RefinementReport> {
    if rungs.len() < 3 {
        return Err(SimError::Validation(
            "a rate needs at least three ladder rungs".into(),
        ));
    }
    let sims: Vec<Simulation> = rungs
        .iter()
        .map(run_to_time)
        .collect::<Result<Vec<_>>>()?;
    let unstable_rungs: Vec<usize> = sims
        .iter()
        .enumerate()
        .filter(|(_, s)| s.unstable)
        .map(|(i, _)| i)
        .collect();
    let d0 = sims[0]
        .biofilm
        .as_ref()
        .map(|b| b.d0)
        .unwrap_or(sims[0].scenario.h);
    let dim = sims[0].grid.dim;
    let mut ladders = Vec::new();
    for q in [Quantity::Velocity, Quantity::Positions] {
        if q == Quantity::Positions && sims[0].biofilm.is_none() {
            continue;
        }
        for norm in [Norm::Two, Norm::Inf] {
            let mut params = Vec::new();
            let mut errors = Vec::new();
            for w in sims.windows(2) {
                let (c, f) = (&w[0], &w[1]);
                let err = match q {
                    Quantity::Velocity => match kind {
                        StudyKind::Temporal => temporal_error(&c.u, &f.u, norm)?,
                        StudyKind::Spatial => spatial_error(&c.u, &f.u, norm)?,
                    },
                    Quantity::Positions => position_error(
                        &c.biofilm.as_ref().unwrap().nodes,
                        &f.biofilm.as_ref().unwrap().nodes,
                        dim,
                        d0,
                        norm,
                    )?,
                };
                params.push(match kind {
                    StudyKind::Temporal => c.scenario.dt,
                    StudyKind::Spatial => c.scenario.h,
                });
                errors.push(err);
            }
            let rates = errors
                .windows(2)
                .map(|w| rate(w[0], w[1]).unwrap_or(f64::NAN))
                .collect();
            ladders.push(RateLadder {
                quantity: q,
                norm,
                params,
                errors,
                rates,
            });
        }
    }
    Ok(RefinementReport {
        kind,
        ladders,
        unstable_rungs,
        fingerprint: rungs[0].config_hash ^ (rungs.len() as u64),
    })
}

/// Work units spent by the pressure solve at each allowed level count, on
/// a representative biofilm pressure system solved from a zero start.
pub fn pressure_work_by_levels(h: f64, max_levels: usize) -> Result<Vec<(usize, f64, usize)>> {
    use crate::coupling::{spread_density, spread_force, CouplingConfig};
    use crate::fields::ScalarField;
    use crate::kernels::Phi;
    use crate::pressure::{wide_divergence, PressureSolver};
    use crate::springs::compute_forces;

    let sc = crate::scenario::mushroom_2d(1, h, 1e-4, 1e-3, 5e-7, 1.0, 998.0, 1.0);
    let grid = crate::fields::Grid::tube(2, sc.extent, sc.h)?;
    let biofilm = sc.build_biofilm()?.expect("mushroom geometry");
    let cfg = CouplingConfig {
        omega: sc.omega,
        kernel: Phi::Phi2,
        d0: biofilm.d0,
        rho_b: sc.rho_b,
        mu_max: 1.0,
        mu_out: 1.0,
    };
    let rho = spread_density(&biofilm.nodes, &grid, &cfg);
    let c = ScalarField {
        grid: grid.clone(),
        data: rho.data.iter().map(|v| 1.0 / v).collect(),
    };
    // Representative right-hand side: divergence of the spread spring
    // forces of a stretched configuration.
    let mut stretched = biofilm.nodes.clone();
    for p in stretched.iter_mut() {
        p[0] += 0.3 * (p[1] * 40.0).sin() * p[1];
    }
    let forces = compute_forces(&biofilm, &stretched)?;
    let f = spread_force(&biofilm.nodes, &forces, &grid, &cfg);
    let div = wide_divergence(&f, &grid);
    let mut g = ScalarField::zeros(&grid);
    let scale = sc.sigma / (sc.epsilon * sc.dt);
    grid.for_interior(|_, _, _, idx| {
        g.data[idx] = scale * div.data[idx];
    });

    let mut out = Vec::new();
    for levels in 1..=max_levels {
        let mut solver = PressureSolver::assemble(&grid, &c, levels, sc.nu1, sc.nu2);
        let mut p = crate::projection::laminar_pressure(&grid);
        grid.for_interior(|_, _, _, idx| p.data[idx] = 0.0);
        let stats = solver.solve(&mut p, &g, 1e-9, 2_000_000, 1)?;
        out.push((levels, stats.work_units, stats.cycles));
    }
    Ok(out)
}

/// One cell of the stability sweep.
#[derive(Debug, Clone)]
pub struct StabilityCell {
    pub h: f64,
    pub dt: f64,
    pub f_max: f64,
    pub stable: bool,
}

/// Stability classification over a parameter grid plus fitted restriction
/// constants: dt <= c1 * h and dt <= c2 / f_max, taken from the largest
/// stable step observed along each axis.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub cells: Vec<StabilityCell>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
}

/// Classifies each (h, dt, F_max) combination by the kinetic-energy
/// criterion on a short mushroom run.
pub fn stability_sweep(
    base: impl Fn(f64, f64, f64) -> Scenario,
    hs: &[f64],
    dts: &[f64],
    f_maxes: &[f64],
    steps: usize,
) -> StabilityReport {
    let mut cells = Vec::new();
    for &h in hs {
        for &dt in dts {
            for &f_max in f_maxes {
                let scenario = base(h, dt, f_max);
                let stable = match Simulation::new(scenario, Init::Laminar) {
                    Ok(mut sim) => {
                        let mut ok = true;
                        for _ in 0..steps {
                            match sim.full_step() {
                                Ok(_) => {
                                    if sim.unstable {
                                        ok = false;
                                        break;
                                    }
                                }
                                Err(_) => {
                                    ok = false;
                                    break;
                                }
                            }
                        }
                        ok
                    }
                    Err(_) => false,
                };
                cells.push(StabilityCell {
                    h,
                    dt,
                    f_max,
                    stable,
                });
            }
        }
    }
    // Largest stable dt per h (at the smallest force) gives c1; largest
    // stable dt per F_max (at the coarsest h) gives c2.
    let f_min = f_maxes.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut c1: Option<f64> = None;
    for &h in hs {
        let best = cells
            .iter()
            .filter(|c| c.h == h && c.f_max == f_min && c.stable)
            .map(|c| c.dt)
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_finite() {
            let ratio = best / h;
            c1 = Some(c1.map_or(ratio, |v: f64| v.min(ratio)));
        }
    }
    let h_max = hs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut c2: Option<f64> = None;
    for &f in f_maxes {
        let best = cells
            .iter()
            .filter(|c| c.f_max == f && c.h == h_max && c.stable)
            .map(|c| c.dt)
            .fold(f64::NEG_INFINITY, f64::max);
        if best.is_finite() {
            let prod = best * f;
            c2 = Some(c2.map_or(prod, |v: f64| v.min(prod)));
        }
    }
    StabilityReport { cells, c1, c2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    fn field_with(grid: &Grid, v: f64) -> VectorField {
        VectorField::from_fn(grid, |_| vec![v, 0.0])
    }

    #[test]
    fn temporal_error_examples() {
        let g = Grid::tube(2, [1.0, 1.0, 0.0], 1.0 / 8.0).unwrap();
        let a = field_with(&g, 0.7);
        assert_eq!(temporal_error(&a, &a, Norm::Two).unwrap(), 0.0);
        // Constant offset c on the unit square has 2-norm c.
        let b = field_with(&g, 0.2);
        let e = temporal_error(&a, &b, Norm::Two).unwrap();
        assert!((e - 0.5).abs() < 1e-12);
        // Mismatched grids error.
        let g2 = Grid::tube(2, [1.0, 1.0, 0.0], 1.0 / 4.0).unwrap();
        assert!(temporal_error(&a, &field_with(&g2, 0.2), Norm::Two).is_err());
    }

    #[test]
    fn rate_examples() {
        assert!((rate(0.4, 0.2).unwrap() - 1.0).abs() < 1e-14);
        assert!(rate(0.0, 0.0).is_none());
        assert!((rate(0.8, 0.2).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn spatial_error_restricts_before_differencing() {
        let coarse = Grid::tube(2, [1.0, 1.0, 0.0], 1.0 / 8.0).unwrap();
        let fine = Grid::tube(2, [1.0, 1.0, 0.0], 1.0 / 16.0).unwrap();
        // Linear fields restrict exactly, so identical linear states give 0.
        let mk = |g: &Grid| VectorField::from_fn(g, |x| vec![x[0] + 2.0 * x[1], 0.0]);
        let e = spatial_error(&mk(&coarse), &mk(&fine), Norm::Inf).unwrap();
        assert!(e < 1e-13, "{e}");
        // Shape mismatch is an error.
        assert!(spatial_error(&mk(&fine), &mk(&coarse), Norm::Inf).is_err());
    }

    #[test]
    fn position_error_and_counts() {
        let a = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        let mut b = a.clone();
        b[1][0] = 1.5;
        let e = position_error(&a, &b, 2, 1.0, Norm::Inf).unwrap();
        assert!((e - 0.5).abs() < 1e-14);
        assert!(position_error(&a, &b[..1], 2, 1.0, Norm::Inf).is_err());
    }

    #[test]
    fn smooth_problem_shows_second_order_spatial_rates() {
        // Fluid-only refinement: the discretization is second order on the
        // smooth laminar transient, confirming the harness itself.
        let mk = |h: f64| crate::scenario::laminar_2d(h, 2e-4, 4e-3);
        let rungs = vec![mk(1.0 / 8.0), mk(1.0 / 16.0), mk(1.0 / 32.0), mk(1.0 / 64.0)];
        let report = run_refinement_study(StudyKind::Spatial, &rungs).unwrap();
        let ladder = report.ladder(Quantity::Velocity, Norm::Inf);
        for r in &ladder.rates {
            assert!(*r > 1.5, "spatial rate {r} below second order band");
        }
        assert!(report.unstable_rungs.is_empty());
        let csv = report.to_csv();
        assert!(csv.lines().count() > 3);
    }
}
