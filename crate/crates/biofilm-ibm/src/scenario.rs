//! Scenario loading, validation, and nondimensionalization.
//!
//! A scenario is described by a flat `key = value` config with sections
//! `[fluid] [biofilm] [grid] [schedule] [solver]` (see `docs/config.md` for
//! the full schema) or built programmatically through the preset
//! constructors. All solver-facing quantities are nondimensional.

use crate::error::{Result, SimError};
use crate::geometry::{self, Biofilm, CellCloud, MushroomSpec};
use crate::kernels::Phi;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Dimensional inputs in SI units.
#[derive(Debug, Clone)]
pub struct PhysicalParams {
    pub tube_radius_m: f64,
    pub fluid_viscosity: f64,
    pub fluid_density: f64,
    pub max_inflow_speed: f64,
    /// Additional biofilm density over the fluid.
    pub biofilm_extra_density: f64,
    pub biofilm_max_viscosity: f64,
    pub f_max: f64,
    /// Bacterial cell radius, meters.
    pub cell_radius_m: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("tube_radius", self.tube_radius_m),
            ("viscosity", self.fluid_viscosity),
            ("density", self.fluid_density),
            ("max_inflow_speed", self.max_inflow_speed),
            ("f_max", self.f_max),
            ("cell_radius", self.cell_radius_m),
        ];
        for (name, v) in positives {
            if !(v > 0.0) {
                return Err(SimError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.biofilm_extra_density < 0.0 {
            return Err(SimError::Config("rho_b must be nonnegative".into()));
        }
        if self.biofilm_max_viscosity < self.fluid_viscosity {
            return Err(SimError::Config(
                "biofilm max viscosity must be at least the fluid viscosity".into(),
            ));
        }
        Ok(())
    }
}

/// Characteristic scales.
#[derive(Debug, Clone)]
pub struct ScalingParams {
    pub length_m: f64,
    pub speed: f64,
    pub time: f64,
    pub pressure_drop: f64,
    pub density: f64,
    pub viscosity: f64,
    /// Characteristic force density; no default, set per scenario.
    pub force_density: f64,
}

impl ScalingParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("char_length", self.length_m),
            ("char_speed", self.speed),
            ("char_time", self.time),
            ("pressure_drop", self.pressure_drop),
            ("char_density", self.density),
            ("char_viscosity", self.viscosity),
            ("f0", self.force_density),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(SimError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Dimensionless groups produced by nondimensionalization.
#[derive(Debug, Clone)]
pub struct Groups {
    pub sigma: f64,
    pub epsilon: f64,
    pub reynolds: f64,
    /// Spreading support (cell radius over characteristic length).
    pub omega: f64,
    pub mu_max: f64,
    pub rho_b: f64,
    /// Momentum forcing prefactor L f0 / (rho0 u0^2).
    pub force_prefactor: f64,
    /// Breaking force F_max / (f0 L^D).
    pub f_max: f64,
}

/// Computes every dimensionless group from the dimensional inputs.
pub fn nondimensionalize(
    phys: &PhysicalParams,
    scale: &ScalingParams,
    dim: usize,
) -> Result<Groups> {
    phys.validate()?;
    scale.validate()?;
    let l = scale.length_m;
    Ok(Groups {
        sigma: l / (scale.time * scale.speed),
        epsilon: scale.pressure_drop / (scale.density * scale.speed * scale.speed),
        reynolds: scale.density * l * scale.speed / scale.viscosity,
        omega: phys.cell_radius_m / l,
        mu_max: phys.biofilm_max_viscosity / scale.viscosity,
        rho_b: phys.biofilm_extra_density / scale.density,
        force_prefactor: l * scale.force_density / (scale.density * scale.speed * scale.speed),
        f_max: phys.f_max / (scale.force_density * l.powi(dim as i32)),
    })
}

/// Recovers the dimensional inputs from the groups; inverse of
/// `nondimensionalize` for round-trip checks.
pub fn redimensionalize(groups: &Groups, scale: &ScalingParams, dim: usize) -> PhysicalParams {
    let l = scale.length_m;
    PhysicalParams {
        tube_radius_m: 0.0,
        fluid_viscosity: scale.viscosity,
        fluid_density: scale.density,
        max_inflow_speed: scale.speed,
        biofilm_extra_density: groups.rho_b * scale.density,
        biofilm_max_viscosity: groups.mu_max * scale.viscosity,
        f_max: groups.f_max * scale.force_density * l.powi(dim as i32),
        cell_radius_m: groups.omega * l,
    }
}

/// Pressure drop that drives the target center speed in a channel of the
/// given radius (2D parabola).
pub fn pressure_drop_2d(radius_m: f64, viscosity: f64, u_max: f64, tube_len_m: f64) -> f64 {
    let kappa = 2.0 * viscosity * u_max / (radius_m * radius_m);
    kappa * tube_len_m
}

/// Pressure drop that drives the target center speed in a square duct of
/// side `side_m` (series solution).
pub fn pressure_drop_3d(side_m: f64, viscosity: f64, u_max: f64, tube_len_m: f64) -> f64 {
    // u_center = 16 |kappa| a^2 / (mu pi^4) * S with S the center series sum.
    let mut s = 0.0;
    for n in (1..400).step_by(2) {
        let sn = (n as f64 * std::f64::consts::FRAC_PI_2).sin();
        for m in (1..400).step_by(2) {
            let sm = (m as f64 * std::f64::consts::FRAC_PI_2).sin();
            let (nf, mf) = (n as f64, m as f64);
            s += sn * sm / (nf * mf * (nf * nf + mf * mf));
        }
    }
    let kappa = u_max * viscosity * std::f64::consts::PI.powi(4) / (16.0 * side_m * side_m * s);
    kappa * tube_len_m
}

/// Where the initial Lagrangian nodes come from.
#[derive(Debug, Clone)]
pub enum GeometrySource {
    /// Fluid-only run.
    None,
    CellsCsv(PathBuf),
    Mushroom(MushroomSpec),
}

/// Snapshot cadence and format.
#[derive(Debug, Clone)]
pub struct Schedule {
    /// Steps between snapshots; 0 disables field output.
    pub snapshot_every: usize,
    pub binary_fields: bool,
}

/// Fully validated, nondimensional simulation description.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dim: usize,
    pub extent: [f64; 3],
    pub h: f64,
    pub dt: f64,
    pub t_end: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub reynolds: f64,
    pub omega: f64,
    pub d_c: f64,
    pub spring_break_factor: f64,
    pub kernel: Phi,
    pub rho_b: f64,
    pub mu_max: f64,
    pub force_prefactor: f64,
    pub f_max: f64,
    pub residual_tol: f64,
    pub levels: usize,
    pub nu1: usize,
    pub nu2: usize,
    /// Per-level coarse-viscosity scalings; the last entry repeats.
    pub gamma: Vec<f64>,
    pub max_cycles: usize,
    pub stability_factor: f64,
    pub geometry: GeometrySource,
    pub seed: u64,
    pub biofilm_volume: Option<f64>,
    pub schedule: Schedule,
    pub scaling: ScalingParams,
    pub warnings: Vec<String>,
    pub config_hash: u64,
}

impl Scenario {
    /// Nondimensional pressure slope along the flow axis; p* falls from 1
    /// to 0 over the tube length.
    pub fn kappa_nd(&self) -> f64 {
        let axis = if self.dim == 2 { 0 } else { 2 };
        -1.0 / self.extent[axis]
    }

    /// Stability heuristics; violations warn rather than abort because the
    /// proportionality constants are parameter-dependent.
    pub fn stability_warnings(&self, f_max_newton: f64) -> Vec<String> {
        let mut w = Vec::new();
        const C1: f64 = 1.0;
        const C2: f64 = 1e-6;
        if self.dt > C1 * self.h {
            w.push(format!(
                "dt = {} exceeds C1*h = {} (mesh restriction)",
                self.dt,
                C1 * self.h
            ));
        }
        if f_max_newton > 0.0 && self.dt > C2 / f_max_newton {
            w.push(format!(
                "dt = {} exceeds C2/F_max = {} (spring stiffness restriction)",
                self.dt,
                C2 / f_max_newton
            ));
        }
        if self.omega < self.h {
            w.push(format!(
                "omega = {} is below h = {}; spreading under-resolves the kernel",
                self.omega, self.h
            ));
        }
        w
    }

    /// Materializes the Lagrangian geometry, connectivity, and volume
    /// element for this scenario.
    pub fn build_biofilm(&self) -> Result<Option<Biofilm>> {
        let l_um = self.scaling.length_m * 1e6;
        let cloud: CellCloud = match &self.geometry {
            GeometrySource::None => return Ok(None),
            GeometrySource::CellsCsv(path) => {
                geometry::load_cells(path, self.dim, l_um, self.extent)?
            }
            GeometrySource::Mushroom(spec) => {
                geometry::generate_mushroom(self.seed, self.dim, spec, l_um, self.extent)?
            }
        };
        let volume = match self.biofilm_volume {
            Some(v) => v,
            None => geometry::estimate_volume(&cloud, self.h, self.guess_spacing()),
        };
        let d0 = geometry::compute_d0(cloud.positions.len(), volume, self.dim)?;
        let biofilm = geometry::build_connectivity(&cloud, self.d_c, self.f_max, d0);
        Ok(Some(biofilm))
    }

    fn guess_spacing(&self) -> f64 {
        match &self.geometry {
            GeometrySource::Mushroom(spec) => {
                spec.spacing_um / (self.scaling.length_m * 1e6)
            }
            _ => self.d_c / 2.0,
        }
    }

    /// Per-level gamma, repeating the last entry beyond the table.
    pub fn gamma_at(&self, level: usize) -> f64 {
        if self.gamma.is_empty() {
            1.0
        } else {
            *self
                .gamma
                .get(level)
                .unwrap_or_else(|| self.gamma.last().unwrap())
        }
    }
}

/// Parses "1/128" or plain floats.
pub fn parse_fraction(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| SimError::Config(format!("bad fraction {s:?}")))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| SimError::Config(format!("bad fraction {s:?}")))?;
        if d == 0.0 {
            return Err(SimError::Config(format!("zero denominator in {s:?}")));
        }
        Ok(n / d)
    } else {
        s.parse()
            .map_err(|_| SimError::Config(format!("bad number {s:?}")))
    }
}

/// Raw parsed config: section -> key -> value, with consumption tracking so
/// unknown keys can be rejected.
struct RawConfig {
    values: BTreeMap<String, String>,
    consumed: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::Config(format!("line {}: expected `key = value`", line_no + 1))
            })?;
            let full = format!("{}.{}", section, key.trim());
            if values.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(SimError::Config(format!("duplicate key {full}")));
            }
        }
        Ok(RawConfig {
            values,
            consumed: Default::default(),
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        let v = self.values.get(key).map(|s| s.as_str());
        if v.is_some() {
            self.consumed.borrow_mut().insert(key.to_string());
        }
        v
    }

    fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| SimError::MissingKey(key.into()))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => parse_fraction(v)
                .map_err(|_| SimError::Config(format!("key {key}: bad number {v:?}"))),
            None => Ok(default),
        }
    }

    fn require_f64(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        parse_fraction(v).map_err(|_| SimError::Config(format!("key {key}: bad number {v:?}")))
    }

    fn unknown_keys(&self) -> Vec<String> {
        let consumed = self.consumed.borrow();
        self.values
            .keys()
            .filter(|k| !consumed.contains(*k))
            .cloned()
            .collect()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for b in bytes {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Loads and validates a scenario config file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    scenario_from_str(&text)
}

/// Parses a scenario from config text; see `docs/config.md`.
pub fn scenario_from_str(text: &str) -> Result<Scenario> {
    let raw = RawConfig::parse(text)?;
    let config_hash = fnv1a(text.as_bytes());

    // [grid]
    let dim = raw.require_f64("grid.dim")? as usize;
    if dim != 2 && dim != 3 {
        return Err(SimError::Config("grid.dim must be 2 or 3".into()));
    }
    let extent_um: Vec<f64> = raw
        .require("grid.extent_um")?
        .split_whitespace()
        .map(parse_fraction)
        .collect::<Result<_>>()?;
    if extent_um.len() != dim {
        return Err(SimError::Config(format!(
            "grid.extent_um needs {dim} entries, found {}",
            extent_um.len()
        )));
    }
    let h = raw.require_f64("grid.h")?;
    if h <= 0.0 {
        return Err(SimError::Config("grid.h must be positive".into()));
    }

    // [fluid]
    let l_m = raw.f64_or("fluid.char_length_um", 50.0)? * 1e-6;
    let l_um = l_m * 1e6;
    let tube_radius_m = raw.f64_or("fluid.tube_radius_um", 25.0)? * 1e-6;
    let viscosity = raw.f64_or("fluid.viscosity", 1.0e-3)?;
    let density = raw.f64_or("fluid.density", 998.0)?;
    let u_max = raw.f64_or("fluid.max_inflow_speed", 1.0e-3)?;
    let char_speed = raw.f64_or("fluid.char_speed", u_max)?;
    let char_time = raw.f64_or("fluid.char_time", 1.0)?;
    let char_density = raw.f64_or("fluid.char_density", density)?;
    let char_viscosity = raw.f64_or("fluid.char_viscosity", viscosity)?;
    let f0 = raw.require_f64("fluid.f0")?;

    let mut extent = [0.0f64; 3];
    for (a, e) in extent_um.iter().enumerate() {
        extent[a] = e / l_um;
    }
    let flow_axis = if dim == 2 { 0 } else { 2 };
    let tube_len_m = extent[flow_axis] * l_m;
    let default_drop = if dim == 2 {
        pressure_drop_2d(tube_radius_m, viscosity, u_max, tube_len_m)
    } else {
        pressure_drop_3d(2.0 * tube_radius_m, viscosity, u_max, tube_len_m)
    };
    let pressure_drop = raw.f64_or("fluid.pressure_drop", default_drop)?;

    // [biofilm]
    let rho_b = raw.f64_or("biofilm.rho_b", 0.0)?;
    let mu_max_dim = raw.f64_or("biofilm.mu_max", viscosity)?;
    let f_max_dim = raw.f64_or("biofilm.f_max", 5.0e-7)?;
    let cell_radius_um = raw.f64_or("biofilm.cell_radius_um", 0.5)?;
    let omega_um = raw.f64_or("biofilm.omega_um", cell_radius_um)?;
    let d_c_um = raw.f64_or("biofilm.d_c_um", 2.8)?;
    let spring_break_factor = raw.f64_or("biofilm.spring_break_factor", 2.0)?;
    let seed = raw.f64_or("biofilm.seed", 1.0)? as u64;
    let source = raw.get("biofilm.source").unwrap_or("none").to_string();
    let geometry = match source.as_str() {
        "none" => GeometrySource::None,
        "csv" => GeometrySource::CellsCsv(PathBuf::from(raw.require("biofilm.cells_csv")?)),
        "generate" => {
            let spacing_um = raw.f64_or("biofilm.spacing_um", 1.59)?;
            let center_x = raw.f64_or("biofilm.center_x_um", extent_um[0] / 2.0)?;
            let center_2 = if dim == 3 {
                raw.f64_or("biofilm.center_z_um", extent_um[0] / 2.0)?
            } else {
                0.0
            };
            let center = if dim == 2 {
                [center_x, 0.0]
            } else {
                // 3D flow runs along z; the silhouette is centered in x and
                // placed along the tube at center_z.
                [center_x, center_2]
            };
            let mut spec = MushroomSpec::paper_silhouette(center, spacing_um);
            spec.height_um = raw.f64_or("biofilm.height_um", spec.height_um)?;
            spec.cap_width_um = raw.f64_or("biofilm.cap_width_um", spec.cap_width_um)?;
            spec.waist_width_um = raw.f64_or("biofilm.waist_width_um", spec.waist_width_um)?;
            GeometrySource::Mushroom(spec)
        }
        other => {
            return Err(SimError::Config(format!(
                "biofilm.source must be none|csv|generate, got {other:?}"
            )))
        }
    };
    let biofilm_volume = match raw.get("biofilm.volume_um") {
        Some(v) => {
            let vol_um = parse_fraction(v)?;
            Some(vol_um / l_um.powi(dim as i32))
        }
        None => None,
    };

    // [schedule]
    let dt = raw.require_f64("schedule.dt")?;
    let t_end = raw.require_f64("schedule.t_end")?;
    if dt <= 0.0 || t_end <= 0.0 {
        return Err(SimError::Config("schedule.dt and t_end must be positive".into()));
    }
    let snapshot_every = raw.f64_or("schedule.snapshot_every", 0.0)? as usize;
    let binary_fields = match raw.get("schedule.snapshot_format").unwrap_or("csv") {
        "csv" => false,
        "bin" => true,
        other => {
            return Err(SimError::Config(format!(
                "schedule.snapshot_format must be csv|bin, got {other:?}"
            )))
        }
    };

    // [solver]
    let residual_tol = raw.f64_or("solver.residual_tol", 1e-9)?;
    let levels = raw.f64_or("solver.levels", 6.0)? as usize;
    let nu1 = raw.f64_or("solver.nu1", 2.0)? as usize;
    let nu2 = raw.f64_or("solver.nu2", 2.0)? as usize;
    let max_cycles = raw.f64_or("solver.max_cycles", 400.0)? as usize;
    let stability_factor = raw.f64_or("solver.stability_factor", 3.0)?;
    let kernel: Phi = raw
        .get("solver.kernel")
        .unwrap_or("phi2")
        .parse()
        .map_err(SimError::Config)?;
    let mu_ratio = mu_max_dim / char_viscosity;
    let default_gamma = if mu_ratio > 50.0 { 0.85 } else { 1.0 };
    let gamma: Vec<f64> = match raw.get("solver.gamma") {
        Some(v) => v
            .split_whitespace()
            .map(parse_fraction)
            .collect::<Result<_>>()?,
        None => vec![1.0, default_gamma],
    };
    for g in &gamma {
        if !(*g > 0.0 && *g <= 1.0) {
            return Err(SimError::Config(format!("gamma entries must be in (0,1], got {g}")));
        }
    }

    let unknown = raw.unknown_keys();
    if let Some(k) = unknown.first() {
        return Err(SimError::UnknownKey(k.clone()));
    }

    let phys = PhysicalParams {
        tube_radius_m,
        fluid_viscosity: viscosity,
        fluid_density: density,
        max_inflow_speed: u_max,
        biofilm_extra_density: rho_b,
        biofilm_max_viscosity: mu_max_dim,
        f_max: f_max_dim,
        cell_radius_m: omega_um * 1e-6,
    };
    let scaling = ScalingParams {
        length_m: l_m,
        speed: char_speed,
        time: char_time,
        pressure_drop,
        density: char_density,
        viscosity: char_viscosity,
        force_density: f0,
    };
    let mut groups = nondimensionalize(&phys, &scaling, dim)?;
    // Direct overrides of the dimensionless groups.
    groups.sigma = raw.f64_or("fluid.sigma", groups.sigma)?;
    groups.epsilon = raw.f64_or("fluid.epsilon", groups.epsilon)?;
    groups.reynolds = raw.f64_or("fluid.reynolds", groups.reynolds)?;

    let mut scenario = Scenario {
        dim,
        extent,
        h,
        dt,
        t_end,
        sigma: groups.sigma,
        epsilon: groups.epsilon,
        reynolds: groups.reynolds,
        omega: groups.omega,
        d_c: d_c_um / l_um,
        spring_break_factor,
        kernel,
        rho_b: groups.rho_b,
        mu_max: groups.mu_max,
        force_prefactor: groups.force_prefactor,
        f_max: groups.f_max,
        residual_tol,
        levels,
        nu1,
        nu2,
        gamma,
        max_cycles,
        stability_factor,
        geometry,
        seed,
        biofilm_volume,
        schedule: Schedule {
            snapshot_every,
            binary_fields,
        },
        scaling,
        warnings: Vec::new(),
        config_hash,
    };
    for group in [
        ("sigma", scenario.sigma),
        ("epsilon", scenario.epsilon),
        ("reynolds", scenario.reynolds),
    ] {
        if !(group.1 > 0.0) {
            return Err(SimError::Config(format!("{} must be positive", group.0)));
        }
    }
    scenario.warnings = scenario.stability_warnings(f_max_dim);
    Ok(scenario)
}

/// Fluid-only 2D channel preset on the 150 x 50 um tube.
pub fn laminar_2d(h: f64, dt: f64, t_end: f64) -> Scenario {
    let text = format!(
        "[grid]\ndim = 2\nextent_um = 150 50\nh = {h}\n\
         [fluid]\nf0 = 1.0\n\
         [schedule]\ndt = {dt}\nt_end = {t_end}\n"
    );
    scenario_from_str(&text).expect("laminar 2D preset must parse")
}

/// Fluid-only 3D duct preset on the 50 x 50 x 150 um tube.
pub fn laminar_3d(h: f64, dt: f64, t_end: f64) -> Scenario {
    let text = format!(
        "[grid]\ndim = 3\nextent_um = 50 50 150\nh = {h}\n\
         [fluid]\nf0 = 1.0\n\
         [schedule]\ndt = {dt}\nt_end = {t_end}\n"
    );
    scenario_from_str(&text).expect("laminar 3D preset must parse")
}

/// Seeded 2D mushroom scenario used by the validation studies; force in
/// Newtons, spreading support in microns.
pub fn mushroom_2d(
    seed: u64,
    h: f64,
    dt: f64,
    t_end: f64,
    f_max_newton: f64,
    omega_um: f64,
    rho_b: f64,
    mu_max_ratio: f64,
) -> Scenario {
    // f0 anchored to F_max over the characteristic volume so the breaking
    // force is 1 in nondimensional units.
    let l = 50e-6f64;
    let f0 = f_max_newton / l.powi(2);
    let text = format!(
        "[grid]\ndim = 2\nextent_um = 150 50\nh = {h}\n\
         [fluid]\nf0 = {f0}\n\
         [biofilm]\nsource = generate\nseed = {seed}\nspacing_um = 0.8\n\
         f_max = {f_max_newton}\nomega_um = {omega_um}\nd_c_um = 1.7\n\
         rho_b = {rho_b}\nmu_max = {mu}\n\
         [schedule]\ndt = {dt}\nt_end = {t_end}\n",
        mu = mu_max_ratio * 1.0e-3,
    );
    scenario_from_str(&text).expect("mushroom preset must parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[grid]\ndim = 2\nextent_um = 150 50\nh = 1/128\n[fluid]\nf0 = 1.0\n[schedule]\ndt = 1e-4\nt_end = 0.01\n";

    #[test]
    fn groups_from_table_values() {
        let s = scenario_from_str(BASE).unwrap();
        assert!((s.sigma - 0.05).abs() < 1e-12);
        assert!((s.reynolds - 0.0499).abs() < 1e-12);
        // 2D drop derived from the channel formula: 0.48 Pa over 150 um.
        assert!((s.scaling.pressure_drop - 0.48).abs() < 1e-12);
        assert!((s.epsilon - 480.961_923_847_695_4).abs() < 1e-9);
        assert!((s.omega - 0.01).abs() < 1e-15);
        assert!((s.kappa_nd() + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn duct_pressure_drop_matches_reference() {
        // The 3D duct drop over 150 um for a 1 mm/s center speed is the
        // 0.8144 Pa reference value.
        let drop = pressure_drop_3d(50e-6, 1e-3, 1e-3, 150e-6);
        assert!((drop - 0.8144).abs() < 2e-4, "drop {drop}");
        let eps = drop / (998.0 * 1e-6);
        assert!((eps - 816.0).abs() < 0.5, "eps {eps}");
    }

    #[test]
    fn explicit_epsilon_example() {
        let text = format!("{BASE}[fluid2]\n").replace("[fluid2]\n", "");
        let mut s = scenario_from_str(&text).unwrap();
        s.epsilon = 0.8144 / (998.0 * 1e-6);
        assert!((s.epsilon - 816.032_064_128_256_6).abs() < 1e-9);
    }

    #[test]
    fn missing_and_unknown_keys() {
        let err = scenario_from_str("[grid]\ndim = 2\nextent_um = 150 50\nh = 1/128\n[schedule]\ndt = 1e-4\nt_end = 0.01\n").unwrap_err();
        assert!(err.to_string().contains("missing key fluid.f0"), "{err}");

        let err = scenario_from_str(&format!("{BASE}[solver]\nbogus = 3\n")).unwrap_err();
        assert!(err.to_string().contains("unknown key solver.bogus"), "{err}");
    }

    #[test]
    fn identity_scaling_round_trip() {
        let phys = PhysicalParams {
            tube_radius_m: 1.0,
            fluid_viscosity: 1.0,
            fluid_density: 1.0,
            max_inflow_speed: 1.0,
            biofilm_extra_density: 0.5,
            biofilm_max_viscosity: 2.0,
            f_max: 3.0,
            cell_radius_m: 0.25,
        };
        let scale = ScalingParams {
            length_m: 1.0,
            speed: 1.0,
            time: 1.0,
            pressure_drop: 1.0,
            density: 1.0,
            viscosity: 1.0,
            force_density: 1.0,
        };
        let g = nondimensionalize(&phys, &scale, 3).unwrap();
        assert_eq!(g.sigma, 1.0);
        assert_eq!(g.rho_b, 0.5);
        assert_eq!(g.mu_max, 2.0);
        assert_eq!(g.f_max, 3.0);
        assert_eq!(g.omega, 0.25);

        // Round trip through redimensionalize.
        let scale2 = ScalingParams {
            length_m: 50e-6,
            speed: 1e-3,
            time: 1.0,
            pressure_drop: 0.48,
            density: 998.0,
            viscosity: 1e-3,
            force_density: 0.2,
        };
        let phys2 = PhysicalParams {
            tube_radius_m: 25e-6,
            fluid_viscosity: 1e-3,
            fluid_density: 998.0,
            max_inflow_speed: 1e-3,
            biofilm_extra_density: 120.0,
            biofilm_max_viscosity: 0.5,
            f_max: 5e-7,
            cell_radius_m: 0.5e-6,
        };
        let g2 = nondimensionalize(&phys2, &scale2, 2).unwrap();
        let back = redimensionalize(&g2, &scale2, 2);
        assert!((back.biofilm_extra_density - 120.0).abs() / 120.0 < 1e-12);
        assert!((back.biofilm_max_viscosity - 0.5).abs() / 0.5 < 1e-12);
        assert!((back.f_max - 5e-7).abs() / 5e-7 < 1e-12);
        assert!((back.cell_radius_m - 0.5e-6).abs() / 0.5e-6 < 1e-12);
    }

    #[test]
    fn nonpositive_scale_is_rejected() {
        let err = scenario_from_str(&format!("{BASE}[fluid]\n").replace("f0 = 1.0", "f0 = -2.0"));
        assert!(err.is_err());
    }

    #[test]
    fn malformed_configs_yield_named_errors_not_panics() {
        for bad in [
            "[grid]\ndim = 7\nextent_um = 1 1\nh = 0.1\n[fluid]\nf0=1\n[schedule]\ndt=1\nt_end=1\n",
            "[grid]\ndim = 2\nextent_um = 150\nh = 1/128\n[fluid]\nf0=1\n[schedule]\ndt=1\nt_end=1\n",
            "[grid]\ndim = 2\nextent_um = 150 50\nh = oops\n[fluid]\nf0=1\n[schedule]\ndt=1\nt_end=1\n",
            "not a section\n",
            "[grid]\ndim = 2\nextent_um = 150 50\nh = 1/128\n[fluid]\nf0=1\n[schedule]\ndt=-1\nt_end=1\n",
            "[solver]\nkernel = phi9\n",
        ] {
            assert!(scenario_from_str(bad).is_err(), "accepted: {bad}");
        }
    }

    #[test]
    fn stability_warnings_do_not_abort() {
        let text = BASE.replace("dt = 1e-4", "dt = 0.5");
        let s = scenario_from_str(&text).unwrap();
        assert!(!s.warnings.is_empty());
    }

    #[test]
    fn fraction_parsing() {
        assert_eq!(parse_fraction("1/128").unwrap(), 1.0 / 128.0);
        assert_eq!(parse_fraction("0.25").unwrap(), 0.25);
        assert!(parse_fraction("a/b").is_err());
        assert!(parse_fraction("1/0").is_err());
    }
}
