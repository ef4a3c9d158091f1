//! Generators for the planar field, its polynomial extensions and the
//! reaction networks built from them.
//!
//! Variable order is fixed for every generated system:
//! `(X, Y, V1..VK, W1..W12, Z1,1..ZK,6)`; the naive extension uses `U1..UK`
//! in place of the `V`s.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::crn::{Complex, Crn, MergePolicy, Reaction};
use crate::error::ConstructionError;
use crate::poly::{Monomial, Poly, PolyOdeSystem};

/// Centers `(a_i, b_i)` of the trapping annuli.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl CenterSet {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self, ConstructionError> {
        if a.is_empty() || a.len() != b.len() {
            return Err(ConstructionError::InvalidParameter(format!(
                "need K >= 1 centers with matching coordinates, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(ConstructionError::InvalidParameter("center coordinates must be finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, ConstructionError> {
        Self::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
    }

    /// Parses a flat `a1,b1,a2,b2,...` list.
    pub fn from_flat(values: &[f64]) -> Result<Self, ConstructionError> {
        if values.len() % 2 != 0 {
            return Err(ConstructionError::InvalidParameter(
                "center list must contain an even number of values".into(),
            ));
        }
        let pairs: Vec<(f64, f64)> = values.chunks(2).map(|c| (c[0], c[1])).collect();
        Self::from_pairs(&pairs)
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn center(&self, i: usize) -> (f64, f64) {
        (self.a[i], self.b[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.a.iter().copied().zip(self.b.iter().copied())
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }
}

/// `a_i = b_i = 8 i K` for `i = 1..K`.
pub fn default_centers(k: usize) -> CenterSet {
    assert!(k >= 1, "K must be at least 1");
    let v: Vec<f64> = (1..=k).map(|i| (8 * i * k) as f64).collect();
    CenterSet { a: v.clone(), b: v }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub holds: bool,
    /// Closest pair of centers (indices), `None` when K = 1.
    pub worst_pair: Option<(usize, usize)>,
    pub min_sq_distance: f64,
    /// `15 (K^{2/3} + 2)`.
    pub threshold: f64,
    /// `min_sq_distance - threshold` (infinite when K = 1).
    pub margin: f64,
}

/// Sufficient pairwise separation for K disjoint trapping annuli.
pub fn check_separation(c: &CenterSet) -> SeparationReport {
    let k = c.k();
    let threshold = 15.0 * ((k as f64).powf(2.0 / 3.0) + 2.0);
    let mut worst: Option<((usize, usize), f64)> = None;
    for i in 0..k {
        for j in i + 1..k {
            let (ai, bi) = c.center(i);
            let (aj, bj) = c.center(j);
            let d = (ai - aj).powi(2) + (bi - bj).powi(2);
            if worst.is_none_or(|(_, w)| d < w) {
                worst = Some(((i, j), d));
            }
        }
    }
    match worst {
        None => SeparationReport {
            holds: true,
            worst_pair: None,
            min_sq_distance: f64::INFINITY,
            threshold,
            margin: f64::INFINITY,
        },
        Some((pair, d)) => SeparationReport {
            holds: d > threshold,
            worst_pair: Some(pair),
            min_sq_distance: d,
            threshold,
            margin: d - threshold,
        },
    }
}

/// Single-center rational components `(f_k, g_k)` at offset `(z1, z2)`.
#[inline]
pub fn center_term(z1: f64, z2: f64) -> (f64, f64) {
    let s = 1.0 - z1 * z1 - z2 * z2;
    let den = 1.0 + z1.powi(6) + z2.powi(6);
    ((z1 * s - z2) / den, (z2 * s + z1) / den)
}

/// The planar non-polynomial field `(f, g)`.
pub fn planar_field(c: &CenterSet, x: f64, y: f64) -> (f64, f64) {
    c.iter().fold((0.0, 0.0), |(f, g), (a, b)| {
        let (fk, gk) = center_term(x - a, y - b);
        (f + fk, g + gk)
    })
}

/// The x-factored planar field `(x f, y g)`.
pub fn xfactor_planar(c: &CenterSet, x: f64, y: f64) -> (f64, f64) {
    let (f, g) = planar_field(c, x, y);
    (x * f, y * g)
}

/// `q_i(x, y) = 1 / (1 + (x - a_i)^6 + (y - b_i)^6)`, the slow manifold of the
/// fast variables.
pub fn slow_manifold(c: &CenterSet, x: f64, y: f64) -> Vec<f64> {
    c.iter()
        .map(|(a, b)| 1.0 / (1.0 + (x - a).powi(6) + (y - b).powi(6)))
        .collect()
}

/// Time-rescaling factor `h(x, y) = prod_k (1 + (x - a_k)^6 + (y - b_k)^6)`.
pub fn rescaling_factor(c: &CenterSet, x: f64, y: f64) -> f64 {
    c.iter().map(|(a, b)| 1.0 + (x - a).powi(6) + (y - b).powi(6)).product()
}

/// Fast/slow scale parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffParams {
    pub eps: f64,
    pub delta: f64,
}

impl Default for StiffParams {
    fn default() -> Self {
        Self { eps: 1.0, delta: 0.01 }
    }
}

impl StiffParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self, ConstructionError> {
        check_positive("eps", eps)?;
        check_positive("delta", delta)?;
        Ok(Self { eps, delta })
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), ConstructionError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConstructionError::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Per-center rate constants, 21 per center, plus the `eps` they were built for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    k: Vec<[f64; 21]>,
    eps: f64,
}

impl RateTable {
    /// Constant number `index` (1..=21) of center `center` (0-based).
    pub fn get(&self, center: usize, index: usize) -> f64 {
        assert!((1..=21).contains(&index), "rate constant index is 1..=21");
        self.k[center][index - 1]
    }

    pub fn row(&self, center: usize) -> &[f64; 21] {
        &self.k[center]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn k(&self) -> usize {
        self.k.len()
    }
}

/// Rate constants of the expanded reaction rate equations.
pub fn rate_table(c: &CenterSet, eps: f64) -> Result<RateTable, ConstructionError> {
    check_positive("eps", eps)?;
    let mut rows = Vec::with_capacity(c.k());
    for (i, (a, b)) in c.iter().enumerate() {
        let row = [
            (1.0 + a.powi(6) + b.powi(6)) / eps,
            6.0 * a.powi(5) / eps,
            6.0 * b.powi(5) / eps,
            15.0 * a.powi(4) / eps,
            15.0 * b.powi(4) / eps,
            20.0 * a.powi(3) / eps,
            20.0 * b.powi(3) / eps,
            15.0 * a * a / eps,
            15.0 * b * b / eps,
            6.0 * a / eps,
            6.0 * b / eps,
            3.0 * a,
            3.0 * a * a + b * b - 1.0,
            a.powi(3) + a * b * b + b - a,
            2.0 * b,
            1.0 + 2.0 * a * b,
            3.0 * b,
            a * a + 3.0 * b * b - 1.0,
            b.powi(3) + a * a * b - a - b,
            2.0 * a,
            2.0 * a * b - 1.0,
        ];
        if let Some((j, &v)) = row.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(ConstructionError::NonpositiveRate { center: i, index: j + 1, value: v });
        }
        rows.push(row);
    }
    Ok(RateTable { k: rows, eps })
}

/// Warning raised when `1 + a^6 + b^6` is beyond the exactly representable
/// integer range of `f64`, so expanded coefficients are rounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactnessLoss {
    pub center: usize,
    pub value: f64,
}

const EXACT_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

pub fn exactness_check(c: &CenterSet) -> Option<ExactnessLoss> {
    c.iter().enumerate().find_map(|(i, (a, b))| {
        let v = 1.0 + a.powi(6) + b.powi(6);
        (v > EXACT_LIMIT).then_some(ExactnessLoss { center: i, value: v })
    })
}

fn warn_exactness(c: &CenterSet) {
    if let Some(loss) = exactness_check(c) {
        warn!(
            "ExactnessLoss: 1 + a^6 + b^6 = {:e} at center {} exceeds 2^53; coefficients are rounded",
            loss.value,
            loss.center + 1
        );
    }
}

fn xyv_names(k: usize, aux: &str) -> Vec<String> {
    let mut names = vec!["X".to_string(), "Y".to_string()];
    names.extend((1..=k).map(|i| format!("{aux}{i}")));
    names
}

/// Polynomial pieces of one center over `nv` variables with `x`, `y` at 0, 1.
struct CenterPolys {
    /// `(x-a)(1-(x-a)^2-(y-b)^2) - (y-b)`
    f: Poly,
    /// `(y-b)(1-(x-a)^2-(y-b)^2) + (x-a)`
    g: Poly,
    /// `1 + (x-a)^6 + (y-b)^6`
    den: Poly,
    dx: Poly,
    dy: Poly,
}

fn center_polys(nv: usize, a: f64, b: f64) -> CenterPolys {
    let one = Poly::constant(nv, 1.0);
    let dx = Poly::var(nv, 0) - Poly::constant(nv, a);
    let dy = Poly::var(nv, 1) - Poly::constant(nv, b);
    let s = &one - &dx.pow(2) - dy.pow(2);
    let f = &dx * &s - &dy;
    let g = &dy * &s + &dx;
    let den = &one + &dx.pow(6) + dy.pow(6);
    CenterPolys { f, g, den, dx, dy }
}

/// Planar field made polynomial with `u_i = 1/(1 + (x-a_i)^6 + (y-b_i)^6)`
/// promoted to state variables whose equations follow from the chain rule.
pub fn naive_extension(c: &CenterSet) -> PolyOdeSystem {
    let k = c.k();
    let nv = k + 2;
    let parts: Vec<CenterPolys> = c.iter().map(|(a, b)| center_polys(nv, a, b)).collect();
    let mut fx = Poly::zero(nv);
    let mut fy = Poly::zero(nv);
    for (i, p) in parts.iter().enumerate() {
        let u = Poly::var(nv, 2 + i);
        fx = fx + &u * &p.f;
        fy = fy + &u * &p.g;
    }
    let mut eqs = vec![fx.clone(), fy.clone()];
    for (i, p) in parts.iter().enumerate() {
        let u2 = Poly::var(nv, 2 + i).pow(2);
        let inner = p.dx.pow(5) * &fx + p.dy.pow(5) * &fy;
        eqs.push((u2 * inner).scale(-6.0));
    }
    PolyOdeSystem::from_polys(xyv_names(k, "U"), eqs).expect("generated system is well formed")
}

fn extension(c: &CenterSet, eps: f64, xfactor: bool) -> PolyOdeSystem {
    let k = c.k();
    let nv = k + 2;
    let parts: Vec<CenterPolys> = c.iter().map(|(a, b)| center_polys(nv, a, b)).collect();
    let mut fx = Poly::zero(nv);
    let mut fy = Poly::zero(nv);
    for (i, p) in parts.iter().enumerate() {
        let v = Poly::var(nv, 2 + i);
        fx = fx + &v * &p.f;
        fy = fy + &v * &p.g;
    }
    if xfactor {
        fx = Poly::var(nv, 0) * fx;
        fy = Poly::var(nv, 1) * fy;
    }
    let mut eqs = vec![fx, fy];
    for (i, p) in parts.iter().enumerate() {
        let v = Poly::var(nv, 2 + i);
        let rhs = Poly::constant(nv, 1.0) - v * &p.den;
        eqs.push(rhs.scale(1.0 / eps));
    }
    PolyOdeSystem::from_polys(xyv_names(k, "V"), eqs).expect("generated system is well formed")
}

/// Fast-slow extension: `eps dv_i/dt = 1 - v_i (1 + (x-a_i)^6 + (y-b_i)^6)`.
/// Not kinetic (the planar cross terms survive).
pub fn tikhonov_extension(c: &CenterSet, eps: f64) -> Result<PolyOdeSystem, ConstructionError> {
    check_positive("eps", eps)?;
    warn_exactness(c);
    Ok(extension(c, eps, false))
}

/// x-factored fast-slow extension; a kinetic system of dimension K + 2.
pub fn factored_system(c: &CenterSet, eps: f64) -> Result<PolyOdeSystem, ConstructionError> {
    rate_table(c, eps)?;
    warn_exactness(c);
    Ok(extension(c, eps, true))
}

/// Builder for stoichiometric complexes over a fixed species count.
struct Stoich {
    n: usize,
}

impl Stoich {
    fn c(&self, counts: &[(usize, u32)]) -> Complex {
        Complex::from_counts(self.n, counts)
    }

    fn r(&self, lhs: &[(usize, u32)], rhs: &[(usize, u32)], rate: f64) -> Reaction {
        Reaction::new(self.c(lhs), self.c(rhs), rate)
    }
}

/// The seventh-order network on `(X, Y, V1..VK)` with default centers.
pub fn thm1_crn(k: usize, eps: f64) -> Result<Crn, ConstructionError> {
    thm1_crn_with(&default_centers(k), eps, MergePolicy::MergeSharedReactants)
}

/// Seventh-order network for arbitrary centers. Under
/// [`MergePolicy::MergeSharedReactants`] the shared `-v_i x^2 y^2` terms are a
/// single reaction (29 per center); under [`MergePolicy::PerTerm`] they are
/// two (30 per center).
pub fn thm1_crn_with(c: &CenterSet, eps: f64, policy: MergePolicy) -> Result<Crn, ConstructionError> {
    let kt = rate_table(c, eps)?;
    warn_exactness(c);
    let k = c.k();
    let s = Stoich { n: k + 2 };
    let (x, y) = (0usize, 1usize);
    let inv_eps = 1.0 / eps;
    let mut out = Vec::with_capacity(29 * k);
    for (i, (a, b)) in c.iter().enumerate() {
        let v = 2 + i;
        let kk = |j: usize| kt.get(i, j);
        // v_i equation
        out.push(s.r(&[(v, 1)], &[], kk(1)));
        out.push(s.r(&[(v, 1), (x, 1)], &[(v, 2), (x, 1)], kk(2)));
        out.push(s.r(&[(v, 1), (y, 1)], &[(v, 2), (y, 1)], kk(3)));
        out.push(s.r(&[(v, 1), (x, 2)], &[(x, 2)], kk(4)));
        out.push(s.r(&[(v, 1), (y, 2)], &[(y, 2)], kk(5)));
        out.push(s.r(&[(v, 1), (x, 3)], &[(v, 2), (x, 3)], kk(6)));
        out.push(s.r(&[(v, 1), (y, 3)], &[(v, 2), (y, 3)], kk(7)));
        out.push(s.r(&[(v, 1), (x, 4)], &[(x, 4)], kk(8)));
        out.push(s.r(&[(v, 1), (y, 4)], &[(y, 4)], kk(9)));
        out.push(s.r(&[(v, 1), (x, 5)], &[(v, 2), (x, 5)], kk(10)));
        out.push(s.r(&[(v, 1), (y, 5)], &[(v, 2), (y, 5)], kk(11)));
        out.push(s.r(&[(v, 1), (x, 6)], &[(x, 6)], inv_eps));
        out.push(s.r(&[(v, 1), (y, 6)], &[(y, 6)], inv_eps));
        out.push(s.r(&[], &[(v, 1)], inv_eps));
        // x and y equations
        out.push(s.r(&[(v, 1), (x, 4)], &[(v, 1), (x, 3)], 1.0));
        out.push(s.r(&[(v, 1), (x, 3)], &[(v, 1), (x, 4)], kk(12)));
        out.push(s.r(&[(v, 1), (x, 2)], &[(v, 1), (x, 1)], kk(13)));
        out.push(s.r(&[(v, 1), (x, 1)], &[(v, 1), (x, 2)], kk(14)));
        out.push(s.r(&[(v, 1), (x, 1), (y, 2)], &[(v, 1), (x, 2), (y, 2)], a));
        out.push(s.r(&[(v, 1), (x, 2), (y, 1)], &[(v, 1), (x, 3), (y, 1)], kk(15)));
        out.push(s.r(&[(v, 1), (x, 1), (y, 1)], &[(v, 1), (y, 1)], kk(16)));
        match policy {
            MergePolicy::MergeSharedReactants => {
                out.push(s.r(&[(v, 1), (x, 2), (y, 2)], &[(v, 1), (x, 1), (y, 1)], 1.0));
            }
            MergePolicy::PerTerm => {
                out.push(s.r(&[(v, 1), (x, 2), (y, 2)], &[(v, 1), (x, 1), (y, 2)], 1.0));
                out.push(s.r(&[(v, 1), (x, 2), (y, 2)], &[(v, 1), (x, 2), (y, 1)], 1.0));
            }
        }
        out.push(s.r(&[(v, 1), (y, 4)], &[(v, 1), (y, 3)], 1.0));
        out.push(s.r(&[(v, 1), (y, 3)], &[(v, 1), (y, 4)], kk(17)));
        out.push(s.r(&[(v, 1), (y, 2)], &[(v, 1), (y, 1)], kk(18)));
        out.push(s.r(&[(v, 1), (y, 1)], &[(v, 1), (y, 2)], kk(19)));
        out.push(s.r(&[(v, 1), (x, 2), (y, 1)], &[(v, 1), (x, 2), (y, 2)], b));
        out.push(s.r(&[(v, 1), (x, 1), (y, 2)], &[(v, 1), (x, 1), (y, 3)], kk(20)));
        out.push(s.r(&[(v, 1), (x, 1), (y, 1)], &[(v, 1), (x, 1)], kk(21)));
    }
    Ok(Crn::new(xyv_names(k, "V"), out).expect("generated network is valid"))
}

/// Index layout of the quadratized (second-order) system.
#[derive(Debug, Clone, Copy)]
pub struct SecondOrderLayout {
    pub k: usize,
}

impl SecondOrderLayout {
    pub const X: usize = 0;
    pub const Y: usize = 1;

    pub fn dim(&self) -> usize {
        7 * self.k + 14
    }

    pub fn v(&self, i: usize) -> usize {
        2 + i
    }

    /// `w_l`, `l` in 1..=12.
    pub fn w(&self, l: usize) -> usize {
        debug_assert!((1..=12).contains(&l));
        2 + self.k + (l - 1)
    }

    /// `z_{i,j}`, `i` 0-based center, `j` in 1..=6.
    pub fn z(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..=6).contains(&j));
        14 + self.k + 6 * i + (j - 1)
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = xyv_names(self.k, "V");
        names.extend((1..=12).map(|l| format!("W{l}")));
        for i in 1..=self.k {
            names.extend((1..=6).map(|j| format!("Z{i},{j}")));
        }
        names
    }

    /// Full state on the slow manifold of the `w`, `z` variables: every
    /// intermediate equals the product it tracks.
    pub fn lift(&self, x: f64, y: f64, v: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.dim()];
        s[Self::X] = x;
        s[Self::Y] = y;
        let w = [
            x * x,
            x.powi(3),
            x.powi(4),
            x.powi(5),
            x.powi(6),
            y * y,
            y.powi(3),
            y.powi(4),
            y.powi(5),
            y.powi(6),
            x * y * y,
            x * x * y,
        ];
        for (l, wv) in w.iter().enumerate() {
            s[self.w(l + 1)] = *wv;
        }
        for (i, &vi) in v.iter().enumerate() {
            s[self.v(i)] = vi;
            let z = [vi * x, vi * y, vi * x.powi(3), vi * y.powi(3), vi * x * y * y, vi * x * x * y];
            for (j, zv) in z.iter().enumerate() {
                s[self.z(i, j + 1)] = *zv;
            }
        }
        s
    }
}

fn mono(n: usize, coeff: f64, factors: &[(usize, u32)]) -> Monomial {
    let mut exps = vec![0; n];
    for &(v, e) in factors {
        exps[v] += e;
    }
    Monomial::new(coeff, exps)
}

/// The quadratized system of dimension `7K + 14` with default centers.
pub fn second_order_system(k: usize, eps: f64, delta: f64) -> Result<PolyOdeSystem, ConstructionError> {
    second_order_system_with(&default_centers(k), StiffParams::new(eps, delta)?)
}

/// Quadratized system: every monomial has degree at most two.
pub fn second_order_system_with(c: &CenterSet, p: StiffParams) -> Result<PolyOdeSystem, ConstructionError> {
    check_positive("eps", p.eps)?;
    check_positive("delta", p.delta)?;
    let kt = rate_table(c, p.eps)?;
    warn_exactness(c);
    let k = c.k();
    let lay = SecondOrderLayout { k };
    let n = lay.dim();
    let (x, y) = (SecondOrderLayout::X, SecondOrderLayout::Y);
    let w = |l| lay.w(l);
    let m = |coeff: f64, f: &[(usize, u32)]| mono(n, coeff, f);
    let inv_eps = 1.0 / p.eps;
    let inv_delta = 1.0 / p.delta;
    let mut rhs: Vec<Vec<Monomial>> = vec![Vec::new(); n];
    for (i, (a, b)) in c.iter().enumerate() {
        let v = lay.v(i);
        let z = |j| lay.z(i, j);
        let kk = |j| kt.get(i, j);
        rhs[x].extend([
            m(-1.0, &[(x, 1), (z(3), 1)]),
            m(kk(12), &[(v, 1), (w(2), 1)]),
            m(-kk(13), &[(x, 1), (z(1), 1)]),
            m(kk(14), &[(v, 1), (x, 1)]),
            m(a, &[(v, 1), (w(11), 1)]),
            m(kk(15), &[(v, 1), (w(12), 1)]),
            m(-kk(16), &[(x, 1), (z(2), 1)]),
            m(-1.0, &[(x, 1), (z(5), 1)]),
        ]);
        rhs[y].extend([
            m(-1.0, &[(y, 1), (z(4), 1)]),
            m(kk(17), &[(v, 1), (w(7), 1)]),
            m(-kk(18), &[(y, 1), (z(2), 1)]),
            m(kk(19), &[(v, 1), (y, 1)]),
            m(b, &[(v, 1), (w(12), 1)]),
            m(kk(20), &[(v, 1), (w(11), 1)]),
            m(-kk(21), &[(y, 1), (z(1), 1)]),
            m(-1.0, &[(y, 1), (z(6), 1)]),
        ]);
        rhs[v].extend([
            m(-kk(1), &[(v, 1)]),
            m(kk(2), &[(v, 1), (x, 1)]),
            m(kk(3), &[(v, 1), (y, 1)]),
            m(-kk(4), &[(v, 1), (w(1), 1)]),
            m(-kk(5), &[(v, 1), (w(6), 1)]),
            m(kk(6), &[(v, 1), (w(2), 1)]),
            m(kk(7), &[(v, 1), (w(7), 1)]),
            m(-kk(8), &[(v, 1), (w(3), 1)]),
            m(-kk(9), &[(v, 1), (w(8), 1)]),
            m(kk(10), &[(v, 1), (w(4), 1)]),
            m(kk(11), &[(v, 1), (w(9), 1)]),
            m(-inv_eps, &[(v, 1), (w(5), 1)]),
            m(-inv_eps, &[(v, 1), (w(10), 1)]),
            m(inv_eps, &[]),
        ]);
        let sources: [&[(usize, u32)]; 6] = [
            &[(v, 1), (x, 1)],
            &[(v, 1), (y, 1)],
            &[(v, 1), (w(2), 1)],
            &[(v, 1), (w(7), 1)],
            &[(v, 1), (w(11), 1)],
            &[(v, 1), (w(12), 1)],
        ];
        for (j, src) in sources.iter().enumerate() {
            let zi = z(j + 1);
            rhs[zi].push(m(inv_delta, src));
            rhs[zi].push(m(-inv_delta, &[(zi, 1)]));
        }
    }
    let w_sources: [&[(usize, u32)]; 12] = [
        &[(x, 2)],
        &[(x, 1), (w(1), 1)],
        &[(x, 1), (w(2), 1)],
        &[(x, 1), (w(3), 1)],
        &[(x, 1), (w(4), 1)],
        &[(y, 2)],
        &[(y, 1), (w(6), 1)],
        &[(y, 1), (w(7), 1)],
        &[(y, 1), (w(8), 1)],
        &[(y, 1), (w(9), 1)],
        &[(x, 1), (w(6), 1)],
        &[(y, 1), (w(1), 1)],
    ];
    for (l, src) in w_sources.iter().enumerate() {
        let wl = w(l + 1);
        rhs[wl].push(m(inv_delta, src));
        rhs[wl].push(m(-inv_delta, &[(wl, 1)]));
    }
    Ok(PolyOdeSystem::new(lay.names(), rhs).expect("generated system is well formed"))
}

/// The bimolecular network with default centers.
pub fn thm2_crn(k: usize, eps: f64, delta: f64) -> Result<Crn, ConstructionError> {
    thm2_crn_with(&default_centers(k), StiffParams::new(eps, delta)?)
}

/// Bimolecular network: `16K + 14K + 24 + 12K = 42K + 24` reactions on
/// `7K + 14` species.
pub fn thm2_crn_with(c: &CenterSet, p: StiffParams) -> Result<Crn, ConstructionError> {
    check_positive("eps", p.eps)?;
    check_positive("delta", p.delta)?;
    let kt = rate_table(c, p.eps)?;
    warn_exactness(c);
    let k = c.k();
    let lay = SecondOrderLayout { k };
    let s = Stoich { n: lay.dim() };
    let (x, y) = (SecondOrderLayout::X, SecondOrderLayout::Y);
    let w = |l| lay.w(l);
    let inv_eps = 1.0 / p.eps;
    let rd = 1.0 / p.delta;
    let mut out = Vec::with_capacity(42 * k + 24);

    // intermediates tracking powers of x and y
    out.push(s.r(&[(x, 2)], &[(x, 2), (w(1), 1)], rd));
    out.push(s.r(&[(y, 2)], &[(y, 2), (w(6), 1)], rd));
    for j in 1..=4 {
        out.push(s.r(&[(x, 1), (w(j), 1)], &[(x, 1), (w(j), 1), (w(j + 1), 1)], rd));
    }
    for j in 6..=9 {
        out.push(s.r(&[(y, 1), (w(j), 1)], &[(y, 1), (w(j), 1), (w(j + 1), 1)], rd));
    }
    out.push(s.r(&[(x, 1), (w(6), 1)], &[(x, 1), (w(6), 1), (w(11), 1)], rd));
    out.push(s.r(&[(y, 1), (w(1), 1)], &[(y, 1), (w(1), 1), (w(12), 1)], rd));
    for l in 1..=12 {
        out.push(s.r(&[(w(l), 1)], &[], rd));
    }

    for (i, (a, b)) in c.iter().enumerate() {
        let v = lay.v(i);
        let z = |j| lay.z(i, j);
        let kk = |j: usize| kt.get(i, j);
        // v_i equation
        out.push(s.r(&[(v, 1)], &[], kk(1)));
        out.push(s.r(&[(v, 1), (x, 1)], &[(v, 2), (x, 1)], kk(2)));
        out.push(s.r(&[(v, 1), (y, 1)], &[(v, 2), (y, 1)], kk(3)));
        out.push(s.r(&[(v, 1), (w(1), 1)], &[(w(1), 1)], kk(4)));
        out.push(s.r(&[(v, 1), (w(6), 1)], &[(w(6), 1)], kk(5)));
        out.push(s.r(&[(v, 1), (w(2), 1)], &[(v, 2), (w(2), 1)], kk(6)));
        out.push(s.r(&[(v, 1), (w(7), 1)], &[(v, 2), (w(7), 1)], kk(7)));
        out.push(s.r(&[(v, 1), (w(3), 1)], &[(w(3), 1)], kk(8)));
        out.push(s.r(&[(v, 1), (w(8), 1)], &[(w(8), 1)], kk(9)));
        out.push(s.r(&[(v, 1), (w(4), 1)], &[(v, 2), (w(4), 1)], kk(10)));
        out.push(s.r(&[(v, 1), (w(9), 1)], &[(v, 2), (w(9), 1)], kk(11)));
        out.push(s.r(&[(v, 1), (w(5), 1)], &[(w(5), 1)], inv_eps));
        out.push(s.r(&[(v, 1), (w(10), 1)], &[(w(10), 1)], inv_eps));
        out.push(s.r(&[], &[(v, 1)], inv_eps));
        // x and y equations
        out.push(s.r(&[(x, 1), (z(3), 1)], &[(z(3), 1)], 1.0));
        out.push(s.r(&[(v, 1), (w(2), 1)], &[(v, 1), (w(2), 1), (x, 1)], kk(12)));
        out.push(s.r(&[(x, 1), (z(1), 1)], &[(z(1), 1)], kk(13)));
        out.push(s.r(&[(v, 1), (x, 1)], &[(v, 1), (x, 2)], kk(14)));
        out.push(s.r(&[(v, 1), (w(11), 1)], &[(v, 1), (w(11), 1), (x, 1)], a));
        out.push(s.r(&[(v, 1), (w(12), 1)], &[(v, 1), (w(12), 1), (x, 1)], kk(15)));
        out.push(s.r(&[(x, 1), (z(2), 1)], &[(z(2), 1)], kk(16)));
        out.push(s.r(&[(x, 1), (z(5), 1)], &[(z(5), 1)], 1.0));
        out.push(s.r(&[(y, 1), (z(6), 1)], &[(z(6), 1)], 1.0));
        out.push(s.r(&[(y, 1), (z(4), 1)], &[(z(4), 1)], 1.0));
        out.push(s.r(&[(v, 1), (w(7), 1)], &[(v, 1), (w(7), 1), (y, 1)], kk(17)));
        out.push(s.r(&[(y, 1), (z(2), 1)], &[(z(2), 1)], kk(18)));
        out.push(s.r(&[(v, 1), (y, 1)], &[(v, 1), (y, 2)], kk(19)));
        out.push(s.r(&[(v, 1), (w(12), 1)], &[(v, 1), (w(12), 1), (y, 1)], b));
        out.push(s.r(&[(v, 1), (w(11), 1)], &[(v, 1), (w(11), 1), (y, 1)], kk(20)));
        out.push(s.r(&[(y, 1), (z(1), 1)], &[(z(1), 1)], kk(21)));
        // intermediates tracking v_i times monomials
        let sources: [&[(usize, u32)]; 6] = [
            &[(x, 1), (v, 1)],
            &[(y, 1), (v, 1)],
            &[(v, 1), (w(2), 1)],
            &[(v, 1), (w(7), 1)],
            &[(v, 1), (w(11), 1)],
            &[(v, 1), (w(12), 1)],
        ];
        for (j, src) in sources.iter().enumerate() {
            let mut prod = src.to_vec();
            prod.push((z(j + 1), 1));
            out.push(s.r(src, &prod, rd));
        }
        for j in 1..=6 {
            out.push(s.r(&[(z(j), 1)], &[], rd));
        }
    }
    Ok(Crn::new(lay.names(), out).expect("generated network is valid"))
}

/// Two-variable kinetic system obtained by multiplying the planar field by
/// `h(x, y)` (a time rescaling) and x-factoring. Each equation has total
/// degree `6K - 2`.
pub fn thm3_system(c: &CenterSet) -> PolyOdeSystem {
    let nv = 2;
    let parts: Vec<CenterPolys> = c.iter().map(|(a, b)| center_polys(nv, a, b)).collect();
    let mut fx = Poly::zero(nv);
    let mut fy = Poly::zero(nv);
    for (k, p) in parts.iter().enumerate() {
        let others = parts
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .fold(Poly::constant(nv, 1.0), |acc, (_, q)| acc * &q.den);
        fx = fx + &p.f * &others;
        fy = fy + &p.g * &others;
    }
    let fx = Poly::var(nv, 0) * fx;
    let fy = Poly::var(nv, 1) * fy;
    PolyOdeSystem::from_polys(vec!["X".into(), "Y".into()], vec![fx, fy])
        .expect("generated system is well formed")
}
