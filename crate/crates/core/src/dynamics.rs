//! Adaptive time stepping for vector fields, with dense sampling.
//!
//! Two embedded methods share one driver: Dormand–Prince 5(4) for non-stiff
//! runs and the L-stable Rosenbrock method Rodas3 for the fast–slow
//! extensions, whose `v` relaxation rates grow like the sixth power of the
//! distance to the far centers. Output is sampled every `dense_stride` time
//! units through each method's interpolant (Shampine's quartic for
//! Dormand–Prince, cubic Hermite for Rodas3).

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constructions::{planar_field, xfactor_planar, CenterSet};
use crate::error::IntegrationError;
use crate::parallel::{par_map, Execution};
use crate::poly::PolyOdeSystem;

/// Components beyond this magnitude end the run with `Diverged`.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// An autonomous vector field `x' = F(x)`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64]);

    /// Row-major Jacobian. The default uses forward differences.
    fn jacobian(&self, x: &[f64], jac: &mut [f64]) {
        let n = self.dim();
        let mut f0 = vec![0.0; n];
        let mut f1 = vec![0.0; n];
        let mut xp = x.to_vec();
        self.eval(x, &mut f0);
        for j in 0..n {
            let h = f64::EPSILON.sqrt() * x[j].abs().max(1.0);
            xp[j] = x[j] + h;
            self.eval(&xp, &mut f1);
            xp[j] = x[j];
            for i in 0..n {
                jac[i * n + j] = (f1[i] - f0[i]) / h;
            }
        }
    }

    fn var_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("x{i}")).collect()
    }
}

impl VectorField for PolyOdeSystem {
    fn dim(&self) -> usize {
        PolyOdeSystem::dim(self)
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        self.eval_into(x, out);
    }

    fn jacobian(&self, x: &[f64], jac: &mut [f64]) {
        self.jacobian_into(x, jac);
    }

    fn var_names(&self) -> Vec<String> {
        self.names().to_vec()
    }
}

/// The closed-form planar field, optionally x-factored.
#[derive(Debug, Clone)]
pub struct PlanarField {
    pub centers: CenterSet,
    pub xfactor: bool,
}

impl PlanarField {
    pub fn new(centers: CenterSet) -> Self {
        Self { centers, xfactor: false }
    }

    pub fn xfactored(centers: CenterSet) -> Self {
        Self { centers, xfactor: true }
    }

    pub fn at(&self, x: f64, y: f64) -> (f64, f64) {
        if self.xfactor {
            xfactor_planar(&self.centers, x, y)
        } else {
            planar_field(&self.centers, x, y)
        }
    }
}

impl VectorField for PlanarField {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let (f, g) = self.at(x[0], x[1]);
        out[0] = f;
        out[1] = g;
    }

    fn var_names(&self) -> Vec<String> {
        vec!["X".into(), "Y".into()]
    }
}

/// Wraps a closure `(x, out)` of fixed dimension.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Explicit Dormand–Prince 5(4).
    #[default]
    DormandPrince,
    /// Linearly implicit Rodas3 with the field's Jacobian.
    Rosenbrock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_end: f64,
    pub dense_stride: f64,
    pub method: Method,
    /// Accepted plus rejected steps allowed before giving up.
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step: 0.1,
            t_end: 100.0,
            dense_stride: 0.01,
            method: Method::DormandPrince,
            max_steps: 5_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_tol(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_stride(mut self, dense_stride: f64) -> Self {
        self.dense_stride = dense_stride;
        self
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |what: &str| Err(IntegrationError::InvalidSettings(what.to_string()));
        if !(self.rel_tol >= 1e-14) || !self.rel_tol.is_finite() {
            return bad("rel_tol must be finite and at least 1e-14");
        }
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return bad("abs_tol must be positive");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be positive");
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return bad("t_end must be finite and non-negative");
        }
        if !(self.dense_stride > 0.0) || !self.dense_stride.is_finite() {
            return bad("dense_stride must be positive");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub dim: usize,
    pub seed: Vec<f64>,
    pub settings: IntegratorSettings,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the seed row")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the seed row")
    }

    /// `(x, y)` projection of every sample.
    pub fn xy(&self) -> Vec<[f64; 2]> {
        self.states.iter().map(|s| [s[0], s[1]]).collect()
    }
}

/// Writes `t,<names>` then one row per sample with 17 significant digits.
pub fn write_csv<W: Write>(traj: &Trajectory, names: &[String], mut w: W) -> io::Result<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(names.iter().map(|n| csv_field(n)))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        write!(w, "{t:.16e}")?;
        for v in s {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv_string(traj: &Trajectory, names: &[String]) -> String {
    let mut buf = Vec::new();
    write_csv(traj, names, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is ascii")
}

// Dormand–Prince 5(4) tableau; the nodes are not needed for autonomous fields.
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th minus 4th order weights.
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Shampine's fourth-order continuous extension.
const DP_D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

// Rodas3: stiffly accurate, L-stable Rosenbrock 3(2). Stage i solves
// (I/(h gamma) - J) K_i = F(y + sum_j A_ij K_j) + sum_j (C_ij / h) K_j.
const RS_GAMMA: f64 = 0.5;
const RS_A: [[f64; 3]; 4] = [[0.0; 3], [0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [2.0, 0.0, 1.0]];
const RS_C: [[f64; 3]; 4] = [[0.0; 3], [4.0, 0.0, 0.0], [1.0, -1.0, 0.0], [1.0, -1.0, -8.0 / 3.0]];
const RS_M: [f64; 4] = [2.0, 0.0, 1.0, 1.0];
const RS_E: [f64; 4] = [0.0, 0.0, 0.0, 1.0];
// Stage 2 evaluates F at y itself, so its value is reused.
const RS_NEW_F: [bool; 4] = [true, false, true, true];

/// Result of one attempted step.
struct Attempt {
    y1: Vec<f64>,
    f1: Vec<f64>,
    err: f64,
}

trait Stepper {
    /// Order of the embedded error estimate plus one.
    const ORDER: f64;
    fn step(&mut self, t: f64, y0: &[f64], f0: &[f64], h: f64) -> Result<Attempt, IntegrationError>;
    /// Interpolates the step just accepted at `theta` in `[0, 1]`.
    fn dense(&self, y0: &[f64], f0: &[f64], att: &Attempt, h: f64, theta: f64, out: &mut Vec<f64>);
}

fn err_norm(y0: &[f64], y1: &[f64], e: impl Iterator<Item = f64>, s: &IntegratorSettings) -> f64 {
    e.zip(y0.iter().zip(y1))
        .map(|(ei, (a, b))| ei.abs() / (s.abs_tol + s.rel_tol * a.abs().max(b.abs())))
        .fold(0.0, f64::max)
}

struct DormandPrince<'a, F: ?Sized> {
    field: &'a F,
    settings: &'a IntegratorSettings,
    k: Vec<Vec<f64>>,
    tmp: Vec<f64>,
}

impl<F: VectorField + ?Sized> Stepper for DormandPrince<'_, F> {
    const ORDER: f64 = 5.0;

    fn step(&mut self, _t: f64, y0: &[f64], f0: &[f64], h: f64) -> Result<Attempt, IntegrationError> {
        let n = y0.len();
        self.k[0].copy_from_slice(f0);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += DP_A[s][j] * self.k[j][i];
                }
                self.tmp[i] = y0[i] + h * acc;
            }
            self.field.eval(&self.tmp, &mut self.k[s]);
        }
        // stage 7 was evaluated at the 5th-order solution (FSAL)
        let y1 = self.tmp.clone();
        let f1 = self.k[6].clone();
        let err = err_norm(
            y0,
            &y1,
            (0..n).map(|i| h * (0..7).map(|j| DP_E[j] * self.k[j][i]).sum::<f64>()),
            self.settings,
        );
        Ok(Attempt { y1, f1, err })
    }

    fn dense(&self, y0: &[f64], _f0: &[f64], att: &Attempt, h: f64, theta: f64, out: &mut Vec<f64>) {
        let s1 = 1.0 - theta;
        out.clear();
        out.extend((0..y0.len()).map(|i| {
            let r2 = att.y1[i] - y0[i];
            let r3 = h * self.k[0][i] - r2;
            let r4 = r2 - h * self.k[6][i] - r3;
            let r5 = h * (0..7).map(|j| DP_D[j] * self.k[j][i]).sum::<f64>();
            y0[i] + theta * (r2 + s1 * (r3 + theta * (r4 + s1 * r5)))
        }));
    }
}

struct Rosenbrock<'a, F: ?Sized> {
    field: &'a F,
    settings: &'a IntegratorSettings,
    jac: Vec<f64>,
}

impl<F: VectorField + ?Sized> Stepper for Rosenbrock<'_, F> {
    const ORDER: f64 = 3.0;

    fn step(&mut self, t: f64, y0: &[f64], f0: &[f64], h: f64) -> Result<Attempt, IntegrationError> {
        let n = y0.len();
        self.field.jacobian(y0, &mut self.jac);
        let mut a = DMatrix::from_row_slice(n, n, &self.jac);
        a.neg_mut();
        for i in 0..n {
            a[(i, i)] += 1.0 / (RS_GAMMA * h);
        }
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(IntegrationError::SingularMatrix { t });
        }
        let y0v = DVector::from_column_slice(y0);
        let mut fi = DVector::from_column_slice(f0);
        let mut buf = vec![0.0; n];
        let mut ks: Vec<DVector<f64>> = Vec::with_capacity(4);
        for i in 0..4 {
            if i > 0 && RS_NEW_F[i] {
                let mut yi = y0v.clone();
                for (j, kj) in ks.iter().enumerate() {
                    yi.axpy(RS_A[i][j], kj, 1.0);
                }
                self.field.eval(yi.as_slice(), &mut buf);
                fi = DVector::from_column_slice(&buf);
            }
            let mut rhs = fi.clone();
            for (j, kj) in ks.iter().enumerate() {
                rhs.axpy(RS_C[i][j] / h, kj, 1.0);
            }
            let k = lu.solve(&rhs).ok_or(IntegrationError::SingularMatrix { t })?;
            ks.push(k);
        }
        let mut y1v = y0v;
        let mut ev = DVector::zeros(n);
        for (i, k) in ks.iter().enumerate() {
            y1v.axpy(RS_M[i], k, 1.0);
            ev.axpy(RS_E[i], k, 1.0);
        }
        let y1: Vec<f64> = y1v.as_slice().to_vec();
        let err = err_norm(y0, &y1, ev.iter().copied(), self.settings);
        let mut f1 = vec![0.0; n];
        if y1.iter().all(|v| v.is_finite()) {
            self.field.eval(&y1, &mut f1);
        }
        Ok(Attempt { y1, f1, err })
    }

    fn dense(&self, y0: &[f64], f0: &[f64], att: &Attempt, h: f64, theta: f64, out: &mut Vec<f64>) {
        hermite(y0, f0, &att.y1, &att.f1, h, theta, out);
    }
}

/// Cubic Hermite interpolant on `[t0, t0 + h]`.
fn hermite(y0: &[f64], f0: &[f64], y1: &[f64], f1: &[f64], h: f64, theta: f64, out: &mut Vec<f64>) {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    out.clear();
    out.extend((0..y0.len()).map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i]));
}

fn sample_times(t_end: f64, stride: f64) -> Vec<f64> {
    let n = (t_end / stride * (1.0 + 1e-12)).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * stride).collect();
    let last = *ts.last().expect("at least t=0");
    if t_end - last > 1e-9 * stride {
        ts.push(t_end);
    } else if let Some(l) = ts.last_mut() {
        *l = last.min(t_end);
    }
    ts
}

/// Integrates `field` from `x0` over `[0, settings.t_end]`.
pub fn integrate<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory, IntegrationError> {
    settings.validate()?;
    let n = field.dim();
    if x0.len() != n {
        return Err(IntegrationError::DimensionMismatch { expected: n, found: x0.len() });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(IntegrationError::NonFiniteState);
    }
    match settings.method {
        Method::DormandPrince => {
            let st = DormandPrince { field, settings, k: vec![vec![0.0; n]; 7], tmp: vec![0.0; n] };
            drive(field, x0, settings, st)
        }
        Method::Rosenbrock => {
            let st = Rosenbrock { field, settings, jac: vec![0.0; n * n] };
            drive(field, x0, settings, st)
        }
    }
}

fn initial_step<F: VectorField + ?Sized>(field: &F, y0: &[f64], f0: &[f64], s: &IntegratorSettings, order: f64) -> f64 {
    let sc: Vec<f64> = y0.iter().map(|v| s.abs_tol + s.rel_tol * v.abs()).collect();
    let norm = |v: &[f64]| {
        (v.iter().zip(&sc).map(|(a, c)| (a / c).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(s.max_step);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    field.eval(&y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / order)
    };
    (100.0 * h0).min(h1).min(s.max_step)
}

/// A component far above its initial size, growing, and within a few
/// minimal steps of a singularity by the estimate `|y| / |y'|` (exact for
/// `y ~ A / (t* - t)`). Lets finite-time blow-up end as `Diverged` even when
/// the time resolution runs out before `DIVERGENCE_LIMIT` is reached.
fn blowing_up(y: &[f64], f: &[f64], x0: &[f64], h_min: f64) -> bool {
    let scale = x0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    y.iter()
        .zip(f)
        .any(|(&yi, &fi)| yi.abs() > 1e3 * scale && yi * fi > 0.0 && yi.abs() < 100.0 * h_min * fi.abs())
}

fn drive<F: VectorField + ?Sized, S: Stepper>(
    field: &F,
    x0: &[f64],
    settings: &IntegratorSettings,
    mut stepper: S,
) -> Result<Trajectory, IntegrationError> {
    let n = x0.len();
    let samples = sample_times(settings.t_end, settings.dense_stride);
    let mut times = Vec::with_capacity(samples.len());
    let mut states = Vec::with_capacity(samples.len());
    times.push(0.0);
    states.push(x0.to_vec());
    let mut next = 1;

    let mut meta = TrajectoryMeta {
        dim: n,
        seed: x0.to_vec(),
        settings: *settings,
        steps_accepted: 0,
        steps_rejected: 0,
    };
    let t_end = settings.t_end;
    let mut t = 0.0;
    let mut y = x0.to_vec();
    let mut f = vec![0.0; n];
    field.eval(&y, &mut f);
    if next >= samples.len() {
        return Ok(Trajectory { times, states, meta });
    }
    let mut h = initial_step(field, &y, &f, settings, S::ORDER);
    let mut buf = Vec::with_capacity(n);
    let expo = -1.0 / S::ORDER;

    while next < samples.len() {
        if meta.steps_accepted + meta.steps_rejected >= settings.max_steps {
            return Err(IntegrationError::StepBudgetExhausted { t, steps: settings.max_steps });
        }
        h = h.min(settings.max_step).min(t_end - t);
        let h_min = 1e-14 * t.abs().max(1.0);
        if h < h_min {
            if blowing_up(&y, &f, x0, h_min) {
                let partial = Trajectory { times, states, meta };
                return Err(IntegrationError::Diverged { t, partial: Box::new(partial) });
            }
            return Err(IntegrationError::StepSizeUnderflow { t, h });
        }
        let att = stepper.step(t, &y, &f, h)?;
        let finite = att.y1.iter().all(|v| v.is_finite()) && att.err.is_finite();
        if !finite || att.err > 1.0 {
            meta.steps_rejected += 1;
            let fac = if finite { (0.9 * att.err.powf(expo)).clamp(0.2, 1.0) } else { 0.25 };
            h *= fac;
            continue;
        }
        meta.steps_accepted += 1;
        let t1 = if t_end - (t + h) < 1e-12 * t_end.max(1.0) { t_end } else { t + h };
        while next < samples.len() && samples[next] <= t1 {
            let theta = ((samples[next] - t) / h).clamp(0.0, 1.0);
            stepper.dense(&y, &f, &att, h, theta, &mut buf);
            times.push(samples[next]);
            states.push(buf.clone());
            next += 1;
        }
        t = t1;
        y = att.y1;
        f = att.f1;
        if y.iter().any(|v| v.abs() > DIVERGENCE_LIMIT) {
            let partial = Trajectory { times, states, meta };
            return Err(IntegrationError::Diverged { t, partial: Box::new(partial) });
        }
        let fac = if att.err == 0.0 { 5.0 } else { (0.9 * att.err.powf(expo)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(Trajectory { times, states, meta })
}

/// Integrates every seed; results keep seed order.
pub fn batch_integrate<F: VectorField + ?Sized>(
    field: &F,
    seeds: &[Vec<f64>],
    settings: &IntegratorSettings,
) -> Vec<Result<Trajectory, IntegrationError>> {
    batch_integrate_with(field, seeds, settings, Execution::default())
}

pub fn batch_integrate_with<F: VectorField + ?Sized>(
    field: &F,
    seeds: &[Vec<f64>],
    settings: &IntegratorSettings,
    exec: Execution,
) -> Vec<Result<Trajectory, IntegrationError>> {
    par_map(seeds, exec, |s| integrate(field, s, settings))
}
