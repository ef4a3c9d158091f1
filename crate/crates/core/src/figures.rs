//! Fixed configurations reproducing the reference trajectory plots, and a
//! runner that turns one into trajectories plus a summary.
//!
//! Seeds are 4 x 5 grids over the plotted region; the grids are part of each
//! configuration and are written into every summary.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{classify, cluster_cycles, default_settings_for, SystemKind, Annulus, CycleReport, SeedOutcome, DEFAULT_CLUSTER_TOL, DEFAULT_TRANSIENT};
use crate::constructions::{factored_system, naive_extension, slow_manifold, tikhonov_extension, CenterSet};
use crate::dynamics::{batch_integrate_with, IntegratorSettings, PlanarField, Trajectory, VectorField};
use crate::error::IntegrationError;
use crate::parallel::Execution;
use crate::poly::PolyOdeSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FigureId {
    #[serde(rename = "1a")]
    F1a,
    #[serde(rename = "1b")]
    F1b,
    #[serde(rename = "2a")]
    F2a,
    #[serde(rename = "2b")]
    F2b,
    #[serde(rename = "3a")]
    F3a,
    #[serde(rename = "3b")]
    F3b,
}

impl FigureId {
    pub const ALL: [FigureId; 6] = [FigureId::F1a, FigureId::F1b, FigureId::F2a, FigureId::F2b, FigureId::F3a, FigureId::F3b];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureId::F1a => "1a",
            FigureId::F1b => "1b",
            FigureId::F2a => "2a",
            FigureId::F2b => "2b",
            FigureId::F3a => "3a",
            FigureId::F3b => "3b",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown figure `{s}` (expected one of 1a, 1b, 2a, 2b, 3a, 3b)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureSystem {
    Planar,
    Naive,
    Tikhonov,
    Factored,
}

/// Initial values of the auxiliary variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum InitRule {
    /// No auxiliary variables.
    None,
    /// `c / (1 + (x0 - a_i)^6 + (y0 - b_i)^6)`.
    Scaled { c: f64 },
    /// The same value for every auxiliary variable.
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureConfig {
    pub id: FigureId,
    pub system: FigureSystem,
    pub centers: CenterSet,
    pub eps: f64,
    pub init: InitRule,
    /// Grid abscissae and ordinates; seeds are their product, x-major.
    pub grid_x: Vec<f64>,
    pub grid_y: Vec<f64>,
    /// Seed coordinates equal to 0 are replaced by this value.
    pub zero_replacement: Option<f64>,
    pub settings: IntegratorSettings,
}

pub fn fig1a_centers() -> CenterSet {
    CenterSet::from_pairs(&[(2.0, 2.0), (2.0, 6.0), (6.0, 2.0), (6.0, 6.0)]).expect("valid centers")
}

pub fn fig1b_centers() -> CenterSet {
    CenterSet::from_pairs(&[(2.0, 2.0), (2.0, 4.0), (4.0, 2.0), (4.0, 4.0)]).expect("valid centers")
}

pub fn fig3b_centers() -> CenterSet {
    CenterSet::from_pairs(&[
        (2.0, 2.0),
        (2.0, 6.0),
        (6.0, 2.0),
        (6.0, 6.0),
        (6.0, 10.0),
        (2.0, 10.0),
        (10.0, 2.0),
        (10.0, 6.0),
        (10.0, 10.0),
    ])
    .expect("valid centers")
}

/// Grid shared by the four-center figures over `[0, 8]^2`.
const GRID_X_8: [f64; 4] = [0.0, 2.5, 5.5, 8.0];
const GRID_Y_8: [f64; 5] = [0.0, 1.5, 4.0, 6.5, 8.0];

pub fn config(id: FigureId) -> FigureConfig {
    let stiff = default_settings_for(SystemKind::Factored);
    let base = FigureConfig {
        id,
        system: FigureSystem::Planar,
        centers: fig1a_centers(),
        eps: 1.0,
        init: InitRule::None,
        grid_x: GRID_X_8.to_vec(),
        grid_y: GRID_Y_8.to_vec(),
        zero_replacement: None,
        settings: IntegratorSettings::default(),
    };
    match id {
        FigureId::F1a => base,
        FigureId::F1b => FigureConfig {
            centers: fig1b_centers(),
            grid_x: vec![0.5, 2.75, 3.25, 5.5],
            grid_y: vec![0.5, 2.0, 2.9, 3.6, 5.5],
            // the single large cycle has period near 24, so the default
            // horizon leaves too few returns after the transient
            settings: IntegratorSettings::default().with_t_end(200.0),
            ..base
        },
        FigureId::F2a => FigureConfig { system: FigureSystem::Naive, init: InitRule::Scaled { c: 0.5 }, ..base },
        FigureId::F2b => FigureConfig {
            system: FigureSystem::Tikhonov,
            init: InitRule::Scaled { c: 0.5 },
            settings: stiff,
            ..base
        },
        FigureId::F3a => FigureConfig {
            system: FigureSystem::Factored,
            init: InitRule::Scaled { c: 0.5 },
            zero_replacement: Some(0.5),
            settings: stiff,
            ..base
        },
        FigureId::F3b => FigureConfig {
            system: FigureSystem::Factored,
            centers: fig3b_centers(),
            init: InitRule::Constant { value: 1.0 },
            grid_x: vec![1.5, 4.5, 8.5, 11.5],
            grid_y: vec![0.5, 2.5, 6.5, 10.5, 12.0],
            settings: stiff,
            ..base
        },
    }
}

impl FigureConfig {
    /// Seed points in the plane, after zero replacement.
    pub fn seed_points(&self) -> Vec<[f64; 2]> {
        let fix = |v: f64| match self.zero_replacement {
            Some(r) if v == 0.0 => r,
            _ => v,
        };
        self.grid_x
            .iter()
            .flat_map(|&x| self.grid_y.iter().map(move |&y| [x, y]))
            .map(|[x, y]| [fix(x), fix(y)])
            .collect()
    }

    pub fn initial_state(&self, p: [f64; 2]) -> Vec<f64> {
        let mut s = p.to_vec();
        match self.init {
            InitRule::None => {}
            InitRule::Scaled { c } => s.extend(slow_manifold(&self.centers, p[0], p[1]).iter().map(|q| c * q)),
            InitRule::Constant { value } => s.extend(std::iter::repeat_n(value, self.centers.k())),
        }
        s
    }

    pub fn build(&self) -> Result<FigureField, String> {
        let c = self.centers.clone();
        Ok(match self.system {
            FigureSystem::Planar => FigureField::Planar(PlanarField::new(c)),
            FigureSystem::Naive => FigureField::Poly(naive_extension(&c)),
            FigureSystem::Tikhonov => FigureField::Poly(tikhonov_extension(&c, self.eps).map_err(|e| e.to_string())?),
            FigureSystem::Factored => FigureField::Poly(factored_system(&c, self.eps).map_err(|e| e.to_string())?),
        })
    }
}

pub enum FigureField {
    Planar(PlanarField),
    Poly(PolyOdeSystem),
}

impl FigureField {
    pub fn field(&self) -> &dyn VectorField {
        match self {
            FigureField::Planar(p) => p,
            FigureField::Poly(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleInfo {
    pub period: f64,
    pub centroid: [f64; 2],
    pub annulus: Option<usize>,
    pub basin_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSummary {
    pub figure: FigureId,
    pub config: FigureConfig,
    pub cycle_count: usize,
    pub cycles: Vec<CycleInfo>,
    /// Distinct end points where the field vanishes.
    pub fixed_points: Vec<[f64; 2]>,
    /// Final `(x, y)` of every seed (`None` when integration failed).
    pub endpoints: Vec<Option<[f64; 2]>>,
    pub outcomes: Vec<SeedOutcome>,
    /// Seeds farther than 1 from every center.
    pub outside_seeds: Vec<usize>,
    /// Outside seeds that ended on a detected cycle.
    pub outside_seed_cycles: usize,
    /// Largest auxiliary component at the final time, per seed.
    pub max_aux_final: Vec<Option<f64>>,
}

pub struct FigureRun {
    pub summary: FigureSummary,
    pub trajectories: Vec<Result<Trajectory, IntegrationError>>,
    pub cycles: Vec<CycleReport>,
    pub names: Vec<String>,
}

/// Field magnitude below which an end point counts as an equilibrium.
const FIXED_POINT_SPEED: f64 = 1e-6;

pub fn run(cfg: &FigureConfig, exec: Execution) -> Result<FigureRun, String> {
    let built = cfg.build()?;
    let field = built.field();
    let points = cfg.seed_points();
    let states: Vec<Vec<f64>> = points.iter().map(|&p| cfg.initial_state(p)).collect();
    let trajectories = batch_integrate_with(field, &states, &cfg.settings, exec);
    let found = trajectories.iter().map(|r| classify(r, DEFAULT_TRANSIENT)).collect();
    let mut counted = cluster_cycles(found, DEFAULT_CLUSTER_TOL);
    let annuli = Annulus::for_centers(&cfg.centers);
    for c in counted.cycles.iter_mut() {
        c.containing_annulus = c.locate(&annuli);
    }

    let mut fixed_points: Vec<[f64; 2]> = Vec::new();
    let mut buf = vec![0.0; field.dim()];
    for tr in trajectories.iter().flatten() {
        let s = tr.last_state();
        field.eval(s, &mut buf);
        let speed = buf.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if speed < FIXED_POINT_SPEED {
            let p = [s[0], s[1]];
            if !fixed_points.iter().any(|q| (q[0] - p[0]).hypot(q[1] - p[1]) < 1e-3) {
                fixed_points.push(p);
            }
        }
    }
    let outside_seeds: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| cfg.centers.iter().all(|(a, b)| (p[0] - a).hypot(p[1] - b) > 1.0))
        .map(|(i, _)| i)
        .collect();
    let outside_seed_cycles = outside_seeds
        .iter()
        .filter(|&&i| matches!(counted.outcomes[i], SeedOutcome::Cycle { .. }))
        .count();
    let endpoints = trajectories.iter().map(|r| r.as_ref().ok().map(|t| [t.last_state()[0], t.last_state()[1]])).collect();
    let max_aux_final = trajectories
        .iter()
        .map(|r| {
            r.as_ref()
                .ok()
                .and_then(|t| t.last_state()[2..].iter().copied().reduce(f64::max))
        })
        .collect();
    let cycles_info = counted
        .cycles
        .iter()
        .map(|c| CycleInfo { period: c.period, centroid: c.centroid(), annulus: c.containing_annulus, basin_count: c.basin_count })
        .collect();
    let summary = FigureSummary {
        figure: cfg.id,
        config: cfg.clone(),
        cycle_count: counted.count,
        cycles: cycles_info,
        fixed_points,
        endpoints,
        outcomes: counted.outcomes.clone(),
        outside_seeds,
        outside_seed_cycles,
        max_aux_final,
    };
    Ok(FigureRun { summary, trajectories, cycles: counted.cycles, names: field.var_names() })
}
