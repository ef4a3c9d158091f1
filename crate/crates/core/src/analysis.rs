//! Trapping-annulus flux tests, equilibrium exclusion, cycle detection and
//! cycle counting.

use serde::{Deserialize, Serialize};

use crate::constructions::{
    default_centers, factored_system, rescaling_factor, second_order_system_with, slow_manifold,
    thm3_system, tikhonov_extension, CenterSet, SecondOrderLayout, StiffParams,
};
use crate::dynamics::{batch_integrate_with, IntegratorSettings, Method, PlanarField, Trajectory, VectorField};
use crate::error::AnalysisError;
use crate::parallel::Execution;
use crate::poly::PolyOdeSystem;

pub const R_INNER_SQ: f64 = 0.5;
pub const R_OUTER_SQ: f64 = 2.0;
/// Return points closer than this are the same point of a closed orbit.
pub const RETURN_TOL: f64 = 1e-4;
/// Loops smaller than this (max distance to their centroid) are fixed points.
pub const MIN_LOOP_EXTENT: f64 = 1e-3;
pub const DEFAULT_CLUSTER_TOL: f64 = 0.3;
pub const DEFAULT_TRANSIENT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub center: (f64, f64),
    pub r_inner_sq: f64,
    pub r_outer_sq: f64,
}

impl Annulus {
    pub fn new(center: (f64, f64)) -> Self {
        Self { center, r_inner_sq: R_INNER_SQ, r_outer_sq: R_OUTER_SQ }
    }

    pub fn for_centers(c: &CenterSet) -> Vec<Annulus> {
        c.iter().map(Annulus::new).collect()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let r2 = (x - self.center.0).powi(2) + (y - self.center.1).powi(2);
        r2 > self.r_inner_sq && r2 < self.r_outer_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Outer,
    Inner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub boundary: Boundary,
    pub n_samples: usize,
    pub min_signed_flux: f64,
    pub max_signed_flux: f64,
    pub pass: bool,
}

impl FluxReport {
    /// Distance of the worst sample from zero on the passing side; negative
    /// when the check fails.
    pub fn margin(&self) -> f64 {
        match self.boundary {
            Boundary::Outer => -self.max_signed_flux,
            Boundary::Inner => self.min_signed_flux,
        }
    }
}

fn circle_flux<F: Fn(f64, f64) -> (f64, f64)>(field: &F, ann: &Annulus, r2: f64, n: usize, b: Boundary) -> FluxReport {
    let r = r2.sqrt();
    let (a, bb) = ann.center;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..n {
        let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let (z1, z2) = (r * th.cos(), r * th.sin());
        let (f, g) = field(a + z1, bb + z2);
        let s = z1 * f + z2 * g;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let pass = match b {
        Boundary::Outer => hi < 0.0,
        Boundary::Inner => lo > 0.0,
    };
    FluxReport { boundary: b, n_samples: n, min_signed_flux: lo, max_signed_flux: hi, pass }
}

/// Radial component `(x-a, y-b) . F` sampled at `n_samples` equiangular
/// points on each boundary circle. Outer passes when every sample points
/// inward, inner when every sample points outward.
pub fn flux_check<F: Fn(f64, f64) -> (f64, f64)>(field: F, ann: &Annulus, n_samples: usize) -> (FluxReport, FluxReport) {
    assert!(n_samples >= 360, "flux_check needs at least 360 samples per circle");
    (
        circle_flux(&field, ann, ann.r_outer_sq, n_samples, Boundary::Outer),
        circle_flux(&field, ann, ann.r_inner_sq, n_samples, Boundary::Inner),
    )
}

/// Minimum over a polar grid (`grid_n` radii with `r^2` in `[r_inner^2,
/// r_outer^2]`, `grid_n` angles) of `max(|f|, |g|)`.
pub fn equilibrium_scan<F: Fn(f64, f64) -> (f64, f64)>(field: F, ann: &Annulus, grid_n: usize) -> f64 {
    assert!(grid_n >= 100, "equilibrium_scan needs at least 100 grid points per dimension");
    let (a, b) = ann.center;
    let mut best = f64::INFINITY;
    for i in 0..grid_n {
        let r2 = ann.r_inner_sq + (ann.r_outer_sq - ann.r_inner_sq) * i as f64 / (grid_n - 1) as f64;
        let r = r2.sqrt();
        for j in 0..grid_n {
            let th = 2.0 * std::f64::consts::PI * j as f64 / grid_n as f64;
            let (f, g) = field(a + r * th.cos(), b + r * th.sin());
            best = best.min(f.abs().max(g.abs()));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    /// Closed polyline of full states; first and last points are successive
    /// section crossings.
    pub loop_states: Vec<Vec<f64>>,
    pub period: f64,
    pub containing_annulus: Option<usize>,
    pub basin_count: usize,
}

impl CycleReport {
    pub fn xy_loop(&self) -> Vec<[f64; 2]> {
        self.loop_states.iter().map(|s| [s[0], s[1]]).collect()
    }

    pub fn centroid(&self) -> [f64; 2] {
        centroid(&self.xy_loop())
    }

    /// Mean distance of the loop from `(a, b)`.
    pub fn mean_radius(&self, a: f64, b: f64) -> f64 {
        let xy = self.xy_loop();
        xy.iter().map(|p| ((p[0] - a).powi(2) + (p[1] - b).powi(2)).sqrt()).sum::<f64>() / xy.len() as f64
    }

    /// Index of the annulus containing every loop point, if any.
    pub fn locate(&self, annuli: &[Annulus]) -> Option<usize> {
        let xy = self.xy_loop();
        annuli.iter().position(|an| xy.iter().all(|p| an.contains(p[0], p[1])))
    }
}

fn centroid(pts: &[[f64; 2]]) -> [f64; 2] {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
    [sx / n, sy / n]
}

struct Crossing {
    t: f64,
    state: Vec<f64>,
    /// Index of the first sample after the crossing.
    after: usize,
}

/// Cubic Lagrange interpolation through samples `i0..i0 + 4` at time `t`.
fn cubic_at(times: &[f64], states: &[Vec<f64>], i0: usize, t: f64) -> Vec<f64> {
    let idx: Vec<usize> = (i0..i0 + 4).collect();
    let w: Vec<f64> = idx
        .iter()
        .map(|&i| {
            idx.iter()
                .filter(|&&j| j != i)
                .map(|&j| (t - times[j]) / (times[i] - times[j]))
                .product()
        })
        .collect();
    (0..states[i0].len()).map(|c| idx.iter().zip(&w).map(|(&i, wi)| wi * states[i][c]).sum()).collect()
}

/// Locates the sign change of `side` between samples `k - 1` and `k`.
/// Linear interpolation between the two samples is refined by bisection on
/// a cubic through the surrounding four samples when they exist; the chord
/// error of the linear estimate alone is comparable to the return tolerance
/// on fast cycles.
fn refine_crossing(times: &[f64], states: &[Vec<f64>], k: usize, side: impl Fn(&[f64; 2]) -> f64) -> (f64, Vec<f64>) {
    let (a, b) = (&states[k - 1], &states[k]);
    let (s0, s1) = (side(&[a[0], a[1]]), side(&[b[0], b[1]]));
    let w = s0 / (s0 - s1);
    let linear = || {
        let st: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect();
        (times[k - 1] + w * (times[k] - times[k - 1]), st)
    };
    if times.len() < 4 {
        return linear();
    }
    let i0 = (k.saturating_sub(2)).min(times.len() - 4);
    let g = |t: f64| {
        let p = cubic_at(times, states, i0, t);
        side(&[p[0], p[1]])
    };
    let (mut lo, mut hi) = (times[k - 1], times[k]);
    if !(g(lo) < 0.0 && g(hi) >= 0.0) {
        return linear();
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, cubic_at(times, states, i0, t))
}

fn xy_dist(a: &[f64], b: &[f64]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Finds a closed orbit in the tail of `traj`.
///
/// The section is the ray from the centroid of the post-transient `(x, y)`
/// points through the first post-transient point; crossings are taken in
/// one direction and located by linear interpolation between samples.
/// `Ok(None)` means the tail settles to a point or the return points do not
/// repeat.
pub fn detect_cycle(traj: &Trajectory, transient_fraction: f64) -> Result<Option<CycleReport>, AnalysisError> {
    if traj.is_empty() {
        return Err(AnalysisError::TooShort { crossings: 0 });
    }
    let t_cut = transient_fraction.clamp(0.0, 1.0) * traj.last_time();
    let start = traj.times.partition_point(|&t| t < t_cut);
    let states = &traj.states[start..];
    let times = &traj.times[start..];
    if states.len() < 3 {
        return Err(AnalysisError::TooShort { crossings: 0 });
    }
    let xy: Vec<[f64; 2]> = states.iter().map(|s| [s[0], s[1]]).collect();
    let c = centroid(&xy);
    let extent = xy.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).fold(0.0, f64::max);
    if extent < MIN_LOOP_EXTENT {
        return Ok(None);
    }
    let d = [xy[0][0] - c[0], xy[0][1] - c[1]];
    let dn = d[0].hypot(d[1]);
    if dn < 1e-12 {
        return Ok(None);
    }
    let d = [d[0] / dn, d[1] / dn];
    let side = |p: &[f64; 2]| -d[1] * (p[0] - c[0]) + d[0] * (p[1] - c[1]);
    let along = |p: &[f64; 2]| d[0] * (p[0] - c[0]) + d[1] * (p[1] - c[1]);

    let mut crossings = Vec::new();
    for k in 1..xy.len() {
        let (s0, s1) = (side(&xy[k - 1]), side(&xy[k]));
        if s0 < 0.0 && s1 >= 0.0 {
            let (t, state) = refine_crossing(times, states, k, |p| side(p));
            if along(&[state[0], state[1]]) > 0.0 {
                crossings.push(Crossing { t, state, after: k });
            }
        }
    }
    if crossings.len() < 3 {
        return Err(AnalysisError::TooShort { crossings: crossings.len() });
    }
    // trailing run of returns that agree with their predecessor
    let mut first = crossings.len() - 1;
    while first > 0 && xy_dist(&crossings[first].state, &crossings[first - 1].state) < RETURN_TOL {
        first -= 1;
    }
    let run = crossings.len() - first;
    if run < 3 {
        return Ok(None);
    }
    let last = crossings.len() - 1;
    let period = (crossings[last].t - crossings[first].t) / (run - 1) as f64;
    let (a, b) = (&crossings[last - 1], &crossings[last]);
    let mut loop_states = vec![a.state.clone()];
    loop_states.extend(states[a.after..b.after].iter().cloned());
    loop_states.push(b.state.clone());
    let report = CycleReport { loop_states, period, containing_annulus: None, basin_count: 1 };
    let lc = report.centroid();
    let loop_extent = report
        .xy_loop()
        .iter()
        .map(|p| (p[0] - lc[0]).hypot(p[1] - lc[1]))
        .fold(0.0, f64::max);
    if loop_extent < MIN_LOOP_EXTENT || !(period > 0.0) {
        return Ok(None);
    }
    Ok(Some(report))
}

fn seg_dist(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut ab2 = 0.0;
    let mut ap_ab = 0.0;
    for i in 0..p.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        ap_ab += (p[i] - a[i]) * ab;
    }
    let s = if ab2 > 0.0 { (ap_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    (0..p.len()).map(|i| (p[i] - a[i] - s * (b[i] - a[i])).powi(2)).sum::<f64>().sqrt()
}

fn polyline_dist(p: &[f64], pts: &[Vec<f64>]) -> f64 {
    if pts.len() == 1 {
        return seg_dist(p, &pts[0], &pts[0]);
    }
    pts.windows(2).map(|w| seg_dist(p, &w[0], &w[1])).fold(f64::INFINITY, f64::min)
}

/// Euclidean distance from `z` to the loop polyline. A 2-vector is compared
/// with the `(x, y)` projection of the loop; otherwise dimensions must match.
pub fn dist_to_cycle(z: &[f64], cycle: &CycleReport) -> Result<f64, AnalysisError> {
    let dim = cycle.loop_states.first().map_or(0, Vec::len);
    if z.len() == dim {
        Ok(polyline_dist(z, &cycle.loop_states))
    } else if z.len() == 2 {
        let xy: Vec<Vec<f64>> = cycle.xy_loop().iter().map(|p| p.to_vec()).collect();
        Ok(polyline_dist(z, &xy))
    } else {
        Err(AnalysisError::DimensionMismatch { expected: dim, found: z.len() })
    }
}

/// Symmetric Hausdorff distance between two loops in the `(x, y)` plane.
pub fn hausdorff(a: &CycleReport, b: &CycleReport) -> f64 {
    let ax: Vec<Vec<f64>> = a.xy_loop().iter().map(|p| p.to_vec()).collect();
    let bx: Vec<Vec<f64>> = b.xy_loop().iter().map(|p| p.to_vec()).collect();
    let one = |p: &[Vec<f64>], q: &[Vec<f64>]| p.iter().map(|x| polyline_dist(x, q)).fold(0.0, f64::max);
    one(&ax, &bx).max(one(&bx, &ax))
}

/// What happened to one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SeedOutcome {
    Cycle { cluster: usize, period: f64 },
    /// No closed orbit; carries the final `(x, y)`.
    NoCycle { end: [f64; 2] },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCount {
    pub count: usize,
    pub cycles: Vec<CycleReport>,
    pub outcomes: Vec<SeedOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountOptions {
    pub cluster_tol: f64,
    pub transient_fraction: f64,
    pub execution: Execution,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self { cluster_tol: DEFAULT_CLUSTER_TOL, transient_fraction: DEFAULT_TRANSIENT, execution: Execution::default() }
    }
}

/// Groups detected cycles whose Hausdorff distance is below `cluster_tol`.
/// Each entry of `found` is `Some(cycle)` or `Err(outcome)` per seed.
pub fn cluster_cycles(found: Vec<Result<CycleReport, SeedOutcome>>, cluster_tol: f64) -> CycleCount {
    let mut cycles: Vec<CycleReport> = Vec::new();
    let mut outcomes = Vec::with_capacity(found.len());
    for item in found {
        match item {
            Ok(c) => {
                let period = c.period;
                let hit = cycles.iter().position(|k| hausdorff(k, &c) < cluster_tol);
                let cluster = match hit {
                    Some(i) => {
                        cycles[i].basin_count += 1;
                        i
                    }
                    None => {
                        cycles.push(CycleReport { basin_count: 1, ..c });
                        cycles.len() - 1
                    }
                };
                outcomes.push(SeedOutcome::Cycle { cluster, period });
            }
            Err(o) => outcomes.push(o),
        }
    }
    CycleCount { count: cycles.len(), cycles, outcomes }
}

/// Classifies one integration result.
pub fn classify(result: &Result<Trajectory, crate::error::IntegrationError>, transient: f64) -> Result<CycleReport, SeedOutcome> {
    match result {
        Err(e) => Err(SeedOutcome::Failed { reason: e.to_string() }),
        Ok(tr) => match detect_cycle(tr, transient) {
            Ok(Some(c)) => Ok(c),
            _ => {
                let s = tr.last_state();
                Err(SeedOutcome::NoCycle { end: [s[0], s[1]] })
            }
        },
    }
}

/// Integrates every seed, detects cycles and clusters them.
pub fn count_cycles<F: VectorField + ?Sized>(
    field: &F,
    seeds: &[Vec<f64>],
    settings: &IntegratorSettings,
    opts: &CountOptions,
) -> CycleCount {
    let runs = batch_integrate_with(field, seeds, settings, opts.execution);
    let found = runs.iter().map(|r| classify(r, opts.transient_fraction)).collect();
    cluster_cycles(found, opts.cluster_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Planar,
    XfactoredPlanar,
    Tikhonov,
    Factored,
    SecondOrder,
    Thm3,
}

impl SystemKind {
    pub const ALL: [SystemKind; 6] = [
        SystemKind::Planar,
        SystemKind::XfactoredPlanar,
        SystemKind::Tikhonov,
        SystemKind::Factored,
        SystemKind::SecondOrder,
        SystemKind::Thm3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Planar => "planar",
            SystemKind::XfactoredPlanar => "xfactored_planar",
            SystemKind::Tikhonov => "tikhonov",
            SystemKind::Factored => "factored",
            SystemKind::SecondOrder => "second_order",
            SystemKind::Thm3 => "thm3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s || k.name().replace('_', "-") == s)
    }

    /// Systems with fast variables are integrated with the stiff method.
    pub fn is_stiff(self) -> bool {
        matches!(self, SystemKind::Tikhonov | SystemKind::Factored | SystemKind::SecondOrder)
    }
}

/// The built system together with the map from a planar point to a full
/// state on the slow manifold.
pub enum BuiltSystem {
    Planar(PlanarField),
    Poly { sys: PolyOdeSystem, kind: SystemKind, centers: CenterSet },
}

impl BuiltSystem {
    pub fn build(kind: SystemKind, centers: &CenterSet, p: StiffParams) -> Result<Self, String> {
        let c = centers.clone();
        Ok(match kind {
            SystemKind::Planar => BuiltSystem::Planar(PlanarField::new(c)),
            SystemKind::XfactoredPlanar => BuiltSystem::Planar(PlanarField::xfactored(c)),
            SystemKind::Tikhonov => BuiltSystem::Poly {
                sys: tikhonov_extension(&c, p.eps).map_err(|e| e.to_string())?,
                kind,
                centers: c,
            },
            SystemKind::Factored => BuiltSystem::Poly {
                sys: factored_system(&c, p.eps).map_err(|e| e.to_string())?,
                kind,
                centers: c,
            },
            SystemKind::SecondOrder => BuiltSystem::Poly {
                sys: second_order_system_with(&c, p).map_err(|e| e.to_string())?,
                kind,
                centers: c,
            },
            SystemKind::Thm3 => BuiltSystem::Poly { sys: thm3_system(&c), kind, centers: c },
        })
    }

    pub fn field(&self) -> &dyn VectorField {
        match self {
            BuiltSystem::Planar(p) => p,
            BuiltSystem::Poly { sys, .. } => sys,
        }
    }

    /// Full state at `(x, y)` with fast variables at `scale` times their
    /// slow-manifold values.
    pub fn lift(&self, x: f64, y: f64, scale: f64) -> Vec<f64> {
        match self {
            BuiltSystem::Planar(_) => vec![x, y],
            BuiltSystem::Poly { kind: SystemKind::Thm3, .. } => vec![x, y],
            BuiltSystem::Poly { kind: SystemKind::SecondOrder, centers, .. } => {
                let v: Vec<f64> = slow_manifold(centers, x, y).iter().map(|q| scale * q).collect();
                SecondOrderLayout { k: centers.k() }.lift(x, y, &v)
            }
            BuiltSystem::Poly { centers, .. } => {
                let mut s = vec![x, y];
                s.extend(slow_manifold(centers, x, y).iter().map(|q| scale * q));
                s
            }
        }
    }

    /// `(x, y)` components of the field on the slow manifold.
    pub fn reduced(&self, x: f64, y: f64) -> (f64, f64) {
        match self {
            BuiltSystem::Planar(p) => p.at(x, y),
            BuiltSystem::Poly { sys, .. } => {
                let s = self.lift(x, y, 1.0);
                let mut out = vec![0.0; s.len()];
                sys.eval_into(&s, &mut out);
                (out[0], out[1])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyParams {
    pub eps: f64,
    pub delta: f64,
    /// Defaults to `default_centers(K)`.
    pub centers: Option<CenterSet>,
    pub flux_samples: usize,
    pub grid_n: usize,
    pub cluster_tol: f64,
    pub transient_fraction: f64,
    pub settings: Option<IntegratorSettings>,
    pub execution: Execution,
}

impl Default for CertifyParams {
    fn default() -> Self {
        Self {
            eps: 1.0,
            delta: 0.01,
            centers: None,
            flux_samples: 720,
            grid_n: 120,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            transient_fraction: DEFAULT_TRANSIENT,
            settings: None,
            execution: Execution::default(),
        }
    }
}

/// Integrator settings used by [`certify`] when none are given.
pub fn default_settings_for(kind: SystemKind) -> IntegratorSettings {
    if kind.is_stiff() {
        IntegratorSettings::default().with_method(Method::Rosenbrock).with_tol(1e-7, 1e-9)
    } else {
        IntegratorSettings::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnulusCertificate {
    pub index: usize,
    pub outer_flux: FluxReport,
    pub inner_flux: FluxReport,
    pub min_field_mag: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub period: f64,
    pub annulus: Option<usize>,
    pub basin_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub kind: SystemKind,
    #[serde(rename = "K")]
    pub k: usize,
    pub params: CertifyParams,
    pub separation_holds: bool,
    pub annuli: Vec<AnnulusCertificate>,
    pub cycles: Vec<CycleSummary>,
    pub seed_outcomes: Vec<SeedOutcome>,
    pub errors: Vec<String>,
    pub verdict: Verdict,
}

/// Seeds used by [`certify`]: one on the unit circle of each center and the
/// four corners of the square of half-width 1.25 around it.
pub fn certify_seeds(c: &CenterSet) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(5 * c.k());
    for (a, b) in c.iter() {
        out.push((a + 1.0, b));
        for (dx, dy) in [(-1.25, -1.25), (1.25, -1.25), (-1.25, 1.25), (1.25, 1.25)] {
            out.push((a + dx, b + dy));
        }
    }
    out
}

/// Flux and equilibrium checks on every annulus of the reduced planar field,
/// then cycle counting from [`certify_seeds`]. Passes when every annulus
/// passes both checks, at least K distinct cycles are found and each annulus
/// holds exactly one of them.
pub fn certify(kind: SystemKind, k: usize, params: &CertifyParams) -> CertificationReport {
    let centers = params.centers.clone().unwrap_or_else(|| default_centers(k.max(1)));
    let k = centers.k();
    let mut report = CertificationReport {
        kind,
        k,
        params: params.clone(),
        separation_holds: crate::constructions::check_separation(&centers).holds,
        annuli: Vec::new(),
        cycles: Vec::new(),
        seed_outcomes: Vec::new(),
        errors: Vec::new(),
        verdict: Verdict::Fail,
    };
    let stiff = match StiffParams::new(params.eps, params.delta) {
        Ok(p) => p,
        Err(e) => {
            report.errors.push(e.to_string());
            return report;
        }
    };
    let built = match BuiltSystem::build(kind, &centers, stiff) {
        Ok(b) => b,
        Err(e) => {
            report.errors.push(e);
            return report;
        }
    };
    let annuli = Annulus::for_centers(&centers);
    let reduced = |x: f64, y: f64| built.reduced(x, y);
    for (i, an) in annuli.iter().enumerate() {
        let (outer, inner) = flux_check(reduced, an, params.flux_samples.max(360));
        let mag = equilibrium_scan(reduced, an, params.grid_n.max(100));
        let pass = outer.pass && inner.pass && mag > 0.0;
        report.annuli.push(AnnulusCertificate { index: i, outer_flux: outer, inner_flux: inner, min_field_mag: mag, pass });
    }

    let base = params.settings.unwrap_or_else(|| default_settings_for(kind));
    let seeds = certify_seeds(&centers);
    let field = built.field();
    // x-factored and rescaled systems run faster than the planar field by
    // the factor in `seed_settings`; each horizon covers the same planar time
    let runs = crate::parallel::par_map(&seeds, params.execution, |&(x, y)| {
        let s = seed_settings(kind, &base, &centers, x, y);
        crate::dynamics::integrate(field, &built.lift(x, y, 1.0), &s)
    });
    let found: Vec<Result<CycleReport, SeedOutcome>> =
        runs.iter().map(|r| classify(r, params.transient_fraction)).collect();
    let mut counted = cluster_cycles(found, params.cluster_tol);
    for c in counted.cycles.iter_mut() {
        c.containing_annulus = c.locate(&annuli);
    }
    report.cycles = counted
        .cycles
        .iter()
        .map(|c| CycleSummary { period: c.period, annulus: c.containing_annulus, basin_count: c.basin_count })
        .collect();
    for o in &counted.outcomes {
        if let SeedOutcome::Failed { reason } = o {
            report.errors.push(reason.clone());
        }
    }
    report.seed_outcomes = counted.outcomes;
    let per_annulus_ok = (0..k).all(|i| counted.cycles.iter().filter(|c| c.containing_annulus == Some(i)).count() == 1);
    let ok = report.annuli.iter().all(|a| a.pass) && counted.count >= k && per_annulus_ok;
    report.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    report
}

/// Speed of `kind` relative to the planar field near center `(a, b)`: `a`
/// for the x-factored kinds, `a h(a, b)` for thm3 and 1 otherwise.
pub fn speedup(kind: SystemKind, c: &CenterSet, a: f64, b: f64) -> f64 {
    match kind {
        SystemKind::XfactoredPlanar | SystemKind::Factored | SystemKind::SecondOrder => a,
        SystemKind::Thm3 => a * rescaling_factor(c, a, b),
        SystemKind::Planar | SystemKind::Tikhonov => 1.0,
    }
}

/// Settings for a seed at `(x, y)`: horizon, step cap and sampling interval
/// divided by [`speedup`] at the nearest center.
pub fn seed_settings(kind: SystemKind, base: &IntegratorSettings, c: &CenterSet, x: f64, y: f64) -> IntegratorSettings {
    let (a, b) = c
        .iter()
        .min_by(|p, q| {
            let dp = (p.0 - x).powi(2) + (p.1 - y).powi(2);
            let dq = (q.0 - x).powi(2) + (q.1 - y).powi(2);
            dp.total_cmp(&dq)
        })
        .expect("at least one center");
    let speed = speedup(kind, c, a, b);
    IntegratorSettings {
        t_end: base.t_end / speed,
        max_step: base.max_step / speed,
        dense_stride: base.dense_stride / speed,
        ..*base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{FnField, Trajectory, TrajectoryMeta};

    fn circle_traj(period: f64, t_end: f64, stride: f64) -> Trajectory {
        let n = (t_end / stride).round() as usize;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * stride).collect();
        let w = 2.0 * std::f64::consts::PI / period;
        let states = times.iter().map(|t| vec![(w * t).cos(), (w * t).sin()]).collect();
        Trajectory {
            times,
            states,
            meta: TrajectoryMeta {
                dim: 2,
                seed: vec![1.0, 0.0],
                settings: IntegratorSettings::default(),
                steps_accepted: 0,
                steps_rejected: 0,
            },
        }
    }

    #[test]
    fn synthetic_circle_period() {
        let c = detect_cycle(&circle_traj(7.0, 100.0, 0.01), 0.5).unwrap().unwrap();
        assert!((c.period - 7.0).abs() < 1e-6, "{}", c.period);
        let (s, e) = (&c.loop_states[0], c.loop_states.last().unwrap());
        assert!(xy_dist(s, e) < 1e-4);
    }

    #[test]
    fn short_trajectory_is_too_short() {
        assert!(matches!(detect_cycle(&circle_traj(7.0, 10.0, 0.01), 0.5), Err(AnalysisError::TooShort { .. })));
    }

    #[test]
    fn distance_examples() {
        let c = detect_cycle(&circle_traj(7.0, 100.0, 0.001), 0.5).unwrap().unwrap();
        assert!((dist_to_cycle(&[0.0, 0.0], &c).unwrap() - 1.0).abs() < 1e-6);
        let on = c.loop_states[10].clone();
        assert!(dist_to_cycle(&on, &c).unwrap() < 1e-9);
        assert!(matches!(dist_to_cycle(&[0.0, 0.0, 0.0], &c), Err(AnalysisError::DimensionMismatch { .. })));
        assert!(hausdorff(&c, &c) < 1e-12);
    }

    #[test]
    fn constant_field_scan() {
        let m = equilibrium_scan(|_, _| (0.3, -0.7), &Annulus::new((0.0, 0.0)), 100);
        assert_eq!(m, 0.7);
    }

    #[test]
    fn planar_k1_flux_bounds() {
        let c = default_centers(1);
        let an = Annulus::new((8.0, 8.0));
        let (o, i) = flux_check(|x, y| crate::constructions::planar_field(&c, x, y), &an, 360);
        assert!(o.pass && i.pass);
        assert!(o.max_signed_flux < -2.0 / 9.0 + 1e-12);
        assert!(i.min_signed_flux > 2.0 / 9.0 - 1e-12);
    }

    #[test]
    fn fixed_point_gives_none() {
        let f = FnField::new(2, |x: &[f64], o: &mut [f64]| {
            o[0] = -x[0] - x[1];
            o[1] = x[0] - x[1];
        });
        let tr = crate::dynamics::integrate(&f, &[1.0, 0.0], &IntegratorSettings::default().with_t_end(60.0)).unwrap();
        assert_eq!(detect_cycle(&tr, 0.5), Ok(None));
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in SystemKind::ALL {
            assert_eq!(SystemKind::parse(k.name()), Some(k));
        }
        assert_eq!(SystemKind::parse("second-order"), Some(SystemKind::SecondOrder));
        assert_eq!(SystemKind::parse("bogus"), None);
    }
}
