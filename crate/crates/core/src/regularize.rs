//! Regularized weight nu(t) = t^N ∫_t^∞ nu_M(s) s^{-1-N} ds and its modulus
//! eta(t) = (sum_{j<N} C(N,j) t^j) ∫_t^∞ nu_M(s) s^{-1-N} ds.

use crate::diag::Warning;
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_with_breaks, QuadConfig};
use crate::weights::{log_grid, ls_slope, WeightSequence};
use rand::Rng;
use serde::Serialize;
use std::path::Path;

pub const CACHE_LO: f64 = 1e-3;
pub const CACHE_HI: f64 = 1e7;
pub const CACHE_NODES: usize = 2048;
const N_CAP: u32 = 12;
const EXPONENT_MARGIN: f64 = 0.1;
const TAIL_DECADES: f64 = 8.0;

/// nu_M with a fitted power-law continuation past the range where the table is exact.
#[derive(Debug, Clone)]
pub struct GrowthModel {
    seq: WeightSequence,
    limit: f64,
    ext: Option<(f64, f64)>,
}

impl GrowthModel {
    pub fn new(seq: &WeightSequence) -> Self {
        let limit = seq.nu_table_limit();
        let ext = if limit.is_finite() {
            let lo = (limit / 10.0).max(1.0 + 1e-9);
            let ts = log_grid(lo, limit, 64);
            let pts: Vec<(f64, f64)> = ts
                .iter()
                .filter_map(|&t| {
                    let v = seq.nu(t);
                    (v > 0.0).then(|| (t.ln(), v.ln()))
                })
                .collect();
            let beta = if pts.len() >= 2 {
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                ls_slope(&xs, &ys)
            } else {
                1.0
            };
            let c = seq.nu(limit) / limit.powf(beta);
            Some((c, beta))
        } else {
            None
        };
        Self { seq: seq.clone(), limit, ext }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.limit {
            self.seq.nu(t)
        } else {
            let (c, b) = self.ext.expect("finite limit has extension");
            c * t.powf(b)
        }
    }

    pub fn is_extended(&self, t: f64) -> bool {
        t > self.limit
    }

    pub fn source(&self) -> &WeightSequence {
        &self.seq
    }

    /// Local log-log slope of nu_M at t.
    pub fn local_slope(&self, t: f64) -> f64 {
        let (a, b) = (self.eval(t), self.eval(2.0 * t));
        if a > 0.0 && b > 0.0 {
            (b / a).ln() / std::f64::consts::LN_2
        } else {
            0.0
        }
    }

    /// Least-squares growth exponent over the top decade of the cache range.
    pub fn fitted_exponent(&self) -> f64 {
        let ts = log_grid(CACHE_HI / 10.0, CACHE_HI, 64);
        let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| self.eval(t).max(1e-300).ln()).collect();
        ls_slope(&xs, &ys)
    }
}

fn quad_cfg() -> QuadConfig {
    QuadConfig { abs_tol: 1e-300, rel_tol: 1e-11, max_intervals: 500 }
}

const MAX_SPLIT_KINKS: u64 = 32;

/// ∫_a^b nu_M(s) s^{-1-N} ds in u = ln s, split at the kinks s = m_p of nu_M when they are sparse.
fn piece(model: &GrowthModel, n: u32, a: f64, b: f64) -> (f64, bool) {
    if b <= 1.0 {
        return (0.0, true);
    }
    let a = a.max(1.0);
    let nf = n as f64;
    let f = |u: f64| model.eval(u.exp()) * (-nf * u).exp();
    let mut cuts = vec![a.ln()];
    if !model.is_extended(b) {
        let (pa, pb) = (model.seq.nu_full(a).argmax, model.seq.nu_full(b).argmax);
        if pb > pa && pb - pa <= MAX_SPLIT_KINKS {
            for p in pa + 1..=pb {
                if let Some(mp) = model.seq.quotient(p as usize) {
                    if mp > a && mp < b {
                        cuts.push(mp.ln());
                    }
                }
            }
        }
    }
    cuts.push(b.ln());
    let r = integrate_with_breaks(f, &cuts, quad_cfg());
    (r.value, r.converged)
}

/// ∫_t^∞ nu_M(s) s^{-1-N} ds for t >= the last cache node: quadrature up to the point where the
/// remaining tail is ~1e-8 of the total, then the power-law tail in closed form.
fn upper_tail(model: &GrowthModel, n: u32, t: f64) -> (f64, bool) {
    let t = t.max(1.0);
    let nf = n as f64;
    let beta = model.local_slope(t);
    let gap = (nf - beta).max(EXPONENT_MARGIN);
    let span = TAIL_DECADES * std::f64::consts::LN_10 / gap;
    let chunks = (span / 0.5).ceil().max(1.0) as usize;
    let mut acc = 0.0;
    let mut ok = true;
    let u0 = t.ln();
    for i in (0..chunks).rev() {
        let a = (u0 + span * i as f64 / chunks as f64).exp();
        let b = (u0 + span * (i + 1) as f64 / chunks as f64).exp();
        let (v, c) = piece(model, n, a, b);
        acc += v;
        ok &= c;
    }
    let s = (u0 + span).exp();
    let beta_s = model.local_slope(s);
    if beta_s >= nf {
        return (f64::INFINITY, false);
    }
    acc += model.eval(s) * s.powf(-nf) / (nf - beta_s);
    (acc, ok)
}

/// J(t_i) = ∫_{t_i}^∞ nu_M(s) s^{-1-N} ds on ascending nodes, accumulated from the top.
fn cumulative_tail(model: &GrowthModel, n: u32, nodes: &[f64]) -> (Vec<f64>, bool) {
    let k = nodes.len();
    let mut j = vec![0.0; k];
    let (top, mut ok) = upper_tail(model, n, nodes[k - 1]);
    j[k - 1] = top;
    for i in (0..k - 1).rev() {
        let (v, c) = piece(model, n, nodes[i], nodes[i + 1]);
        ok &= c;
        j[i] = j[i + 1] + v;
    }
    (j, ok)
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn eta_factor(n: u32, t: f64) -> f64 {
    (0..n).map(|j| binom(n, j) * t.powi(j as i32)).sum()
}

/// Exponent N with the fitted constants of ∫_1^∞ nu_M(ts) s^{-1-N} ds <= L nu_M(t) + log C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentChoice {
    pub n: u32,
    pub l: f64,
    pub c: f64,
    pub beta: f64,
}

fn fit_bound(model: &GrowthModel, grid: &[f64], vals: &[f64]) -> (f64, f64) {
    let mut l = 1.0f64;
    for (&t, &v) in grid.iter().zip(vals) {
        let m = model.eval(t);
        if m >= 1.0 {
            l = l.max(v / m);
        }
    }
    let log_c = grid
        .iter()
        .zip(vals)
        .map(|(&t, &v)| v - l * model.eval(t))
        .fold(0.0f64, f64::max);
    (l, log_c.exp())
}

/// Smallest N (up to a cap) whose regularizing integral is bounded by L nu_M + log C on the grid.
pub fn choose_exponent(m: &WeightSequence, t_grid: &[f64]) -> Result<ExponentChoice> {
    let model = GrowthModel::new(m);
    choose_exponent_model(&model, t_grid)
}

fn choose_exponent_model(model: &GrowthModel, t_grid: &[f64]) -> Result<ExponentChoice> {
    let mut grid: Vec<f64> = t_grid.iter().copied().filter(|t| *t > 0.0).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::InvalidParameter("t-grid has no positive points".into()));
    }
    let beta = model.fitted_exponent();
    for n in 1..=N_CAP {
        if (n as f64) - beta < EXPONENT_MARGIN {
            continue;
        }
        let (j, _) = cumulative_tail(model, n, &grid);
        if j.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let vals: Vec<f64> = grid.iter().zip(&j).map(|(&t, &jj)| t.powi(n as i32) * jj).collect();
        let (l, c) = fit_bound(model, &grid, &vals);
        if l.is_finite() && l < 1e3 && c.is_finite() {
            return Ok(ExponentChoice { n, l, c, beta });
        }
    }
    Err(Error::Calibration(format!(
        "no exponent N <= {N_CAP} bounds the regularizing integral (fitted growth exponent {beta:.3}); \
         check (M.2)* or refine the grid"
    )))
}

/// The regularized weight with its cache on a log grid.
#[derive(Debug, Clone)]
pub struct RegularizedWeight {
    model: GrowthModel,
    n: u32,
    choice: ExponentChoice,
    l_cmp: f64,
    nodes: Vec<f64>,
    j: Vec<f64>,
    nu: Vec<f64>,
    eta: Vec<f64>,
    slope: Vec<f64>,
    warnings: Vec<Warning>,
}

impl RegularizedWeight {
    pub fn build(m: &WeightSequence) -> Result<Self> {
        let model = GrowthModel::new(m);
        let nodes = log_grid(CACHE_LO, CACHE_HI, CACHE_NODES);
        let choice = choose_exponent_model(&model, &nodes)?;
        Self::with_exponent(model, choice, nodes)
    }

    /// Builds with a prescribed exponent (the bound constants are refitted).
    pub fn build_with_exponent(m: &WeightSequence, n: u32) -> Result<Self> {
        let model = GrowthModel::new(m);
        let nodes = log_grid(CACHE_LO, CACHE_HI, CACHE_NODES);
        let beta = model.fitted_exponent();
        if (n as f64) <= beta {
            return Err(Error::InvalidParameter(format!(
                "exponent {n} does not exceed the growth exponent {beta:.3}"
            )));
        }
        let choice = ExponentChoice { n, l: f64::NAN, c: f64::NAN, beta };
        Self::with_exponent(model, choice, nodes)
    }

    fn with_exponent(model: GrowthModel, mut choice: ExponentChoice, nodes: Vec<f64>) -> Result<Self> {
        let n = choice.n;
        let (j, ok) = cumulative_tail(&model, n, &nodes);
        let mut warnings = Vec::new();
        if !ok {
            warnings.push(Warning::Precision { detail: "cache quadrature hit its subdivision cap".into() });
        }
        if model.is_extended(CACHE_HI) {
            warnings.push(Warning::Extrapolated { t: model.limit });
        }
        let nu: Vec<f64> = nodes.iter().zip(&j).map(|(&t, &v)| t.powi(n as i32) * v).collect();
        let eta: Vec<f64> = nodes.iter().zip(&j).map(|(&t, &v)| eta_factor(n, t) * v).collect();
        let slope: Vec<f64> = nodes
            .iter()
            .zip(&nu)
            .map(|(&t, &v)| (n as f64 * v - model.eval(t)).max(0.0))
            .collect();
        if choice.l.is_nan() {
            let (l, c) = fit_bound(&model, &nodes, &nu);
            choice.l = l;
            choice.c = c;
        }
        let mut rw = Self { model, n, choice, l_cmp: 1.0, nodes, j, nu, eta, slope, warnings };
        rw.l_cmp = rw.fit_comparison();
        Ok(rw)
    }

    fn band_holds(&self, l: f64) -> bool {
        let ll = l.ln();
        self.nodes.iter().zip(&self.nu).all(|(&t, &v)| {
            let m = self.model.eval(t);
            let tol = 1e-12 * (1.0 + v.abs());
            m / l - ll <= v + tol && v <= l * m + ll + tol
        })
    }

    /// Smallest L (to 1e-6 relative) with L^{-1} nu_M - log L <= nu <= L nu_M + log L on all nodes.
    fn fit_comparison(&self) -> f64 {
        if self.band_holds(1.0) {
            return 1.0;
        }
        let mut hi = 2.0;
        while !self.band_holds(hi) {
            hi *= 2.0;
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut lo = hi / 2.0;
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            if self.band_holds(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    pub fn choice(&self) -> ExponentChoice {
        self.choice
    }

    /// Comparison constant L_cmp of the two-sided band.
    pub fn l_cmp(&self) -> f64 {
        self.l_cmp
    }

    pub fn source(&self) -> &WeightSequence {
        self.model.source()
    }

    pub fn model(&self) -> &GrowthModel {
        &self.model
    }

    pub fn nu_m(&self, t: f64) -> f64 {
        self.model.eval(t)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn nu_nodes(&self) -> &[f64] {
        &self.nu
    }

    pub fn eta_nodes(&self) -> &[f64] {
        &self.eta
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// ∫_t^∞ nu_M(s) s^{-1-N} ds by a short quadrature from the nearest node above t.
    fn tail_integral(&self, t: f64) -> f64 {
        // nu_M vanishes on [0, 1]
        let t = t.max(1.0);
        if t >= CACHE_HI {
            return upper_tail(&self.model, self.n, t).0;
        }
        let k = self.nodes.partition_point(|&x| x < t);
        piece(&self.model, self.n, t, self.nodes[k]).0 + self.j[k]
    }

    /// nu(t) to quadrature accuracy.
    pub fn nu_reg(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        t.powi(self.n as i32) * self.tail_integral(t)
    }

    /// eta(t) to quadrature accuracy.
    pub fn eta(&self, t: f64) -> f64 {
        eta_factor(self.n, t.max(0.0)) * self.tail_integral(t)
    }

    /// nu(t) from the cache: exact power law below 1, cubic Hermite in log t between nodes.
    pub fn nu(&self, t: f64) -> f64 {
        let t = t.abs();
        if t <= 1.0 {
            return t.powi(self.n as i32) * self.tail_integral(1.0);
        }
        if t >= CACHE_HI {
            return self.nu_reg(t);
        }
        let k = self.nodes.partition_point(|&x| x < t).max(1);
        let (t0, t1) = (self.nodes[k - 1], self.nodes[k]);
        let (u0, u1) = (t0.ln(), t1.ln());
        let h = u1 - u0;
        let s = (t.ln() - u0) / h;
        let (y0, y1) = (self.nu[k - 1], self.nu[k]);
        let (mut d0, mut d1) = (self.slope[k - 1] * h, self.slope[k] * h);
        // Fritsch-Carlson safeguard keeps the interpolant monotone
        let delta = y1 - y0;
        if delta <= 0.0 {
            d0 = 0.0;
            d1 = 0.0;
        } else {
            let (a, b) = (d0 / delta, d1 / delta);
            let r = a * a + b * b;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                d0 *= tau;
                d1 *= tau;
            }
        }
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1
    }

    /// nu(t) = ∫_1^∞ nu_M(ts) s^{-1-N} ds computed directly in the substituted variable.
    pub fn nu_s_form(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let nf = self.n as f64;
        let tt = t.max(1.0);
        let gap = (nf - self.model.local_slope(tt)).max(EXPONENT_MARGIN);
        let v_end = TAIL_DECADES * std::f64::consts::LN_10 / gap + (tt / t).ln();
        let chunks = (v_end / 0.25).ceil().max(1.0) as usize;
        let mut acc = 0.0;
        for i in 0..chunks {
            let a = v_end * i as f64 / chunks as f64;
            let b = v_end * (i + 1) as f64 / chunks as f64;
            acc += integrate(|v: f64| self.model.eval(t * v.exp()) * (-nf * v).exp(), a, b, quad_cfg()).value;
        }
        let s = t * v_end.exp();
        let beta = self.model.local_slope(s);
        acc + self.model.eval(s) * (-nf * v_end).exp() / (nf - beta)
    }

    /// Writes the cache as CSV with columns t, nu, eta.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "nu", "eta"])?;
        for i in 0..self.nodes.len() {
            w.write_record([
                format!("{:e}", self.nodes[i]),
                format!("{:e}", self.nu[i]),
                format!("{:e}", self.eta[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Non-decreasing on the cache.
    pub fn is_monotone(&self) -> bool {
        self.nu.windows(2).all(|w| w[1] >= w[0])
    }

    /// Whether eta/nu decreases over the nodes in [lo, hi].
    pub fn eta_ratio_decreasing(&self, lo: f64, hi: f64) -> bool {
        let r: Vec<f64> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i] >= lo && self.nodes[i] <= hi)
            .map(|i| self.eta[i] / self.nu[i])
            .collect();
        r.len() >= 2 && r.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub holds: bool,
    /// max of (|nu(t1) - nu(t2)| - eta(t2)(1+|t1-t2|)^N) / eta(t2)(1+|t1-t2|)^N over pairs.
    pub max_slack: f64,
    pub holds_t1_ge_t2: bool,
    pub holds_t1_lt_t2: bool,
    pub samples: usize,
}

/// Checks |nu(t1) - nu(t2)| <= eta(t2) (1 + |t1 - t2|)^N on the given pairs.
pub fn verify_almost_lipschitz(rw: &RegularizedWeight, pairs: &[(f64, f64)]) -> LipschitzReport {
    let mut worst = f64::MIN;
    let (mut up, mut down) = (true, true);
    for &(t1, t2) in pairs {
        let lhs = (rw.nu_reg(t1) - rw.nu_reg(t2)).abs();
        let rhs = rw.eta(t2) * (1.0 + (t1 - t2).abs()).powi(rw.exponent() as i32);
        let slack = (lhs - rhs) / rhs;
        worst = worst.max(slack);
        if slack > 1e-12 {
            if t1 >= t2 {
                up = false;
            } else {
                down = false;
            }
        }
    }
    LipschitzReport { holds: up && down, max_slack: worst, holds_t1_ge_t2: up, holds_t1_lt_t2: down, samples: pairs.len() }
}

/// Uniform random pairs in [0, hi]^2.
pub fn random_pairs(rng: &mut impl Rng, count: usize, hi: f64) -> Vec<(f64, f64)> {
    (0..count).map(|_| (rng.gen_range(0.0..hi), rng.gen_range(0.0..hi))).collect()
}

/// `random_pairs` driven by a ChaCha8 stream with the given seed.
pub fn seeded_pairs(seed: u64, count: usize, hi: f64) -> Vec<(f64, f64)> {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    random_pairs(&mut rng, count, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn gevrey1() -> &'static RegularizedWeight {
        static RW: OnceLock<RegularizedWeight> = OnceLock::new();
        RW.get_or_init(|| RegularizedWeight::build(&WeightSequence::gevrey(1.0, 200).unwrap()).unwrap())
    }

    /// Trapezoid oracle for t^N ∫_t^∞ nu_M(s) s^{-1-N} ds in u = ln s, with a power tail.
    fn trapezoid_nu(m: &WeightSequence, n: u32, t: f64, points: usize) -> f64 {
        let nf = n as f64;
        let (a, b) = (t.max(1.0).ln(), t.max(1.0).ln() + 40.0);
        let h = (b - a) / points as f64;
        let f = |u: f64| m.nu(u.exp()) * (-nf * u).exp();
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..points {
            s += f(a + h * i as f64);
        }
        let tail = m.nu(b.exp()) * (-nf * b).exp() / (nf - 1.0);
        t.powi(n as i32) * (s * h + tail)
    }

    #[test]
    fn exponent_choice_gevrey() {
        let grid = log_grid(1e-2, 1e6, 200);
        let one = choose_exponent(&WeightSequence::gevrey(1.0, 100).unwrap(), &grid).unwrap();
        assert_eq!(one.n, 2);
        let two = choose_exponent(&WeightSequence::gevrey(2.0, 100).unwrap(), &grid).unwrap();
        assert_eq!(two.n, 1);
        assert!(one.l.is_finite() && two.l.is_finite());
    }

    #[test]
    fn regularizing_integral_of_pure_powers() {
        // nu_M(t) = t gives ∫_1^∞ ts s^{-3} ds = t; nu_M(t) = sqrt(t) gives 2 sqrt(t) for N = 1
        let lin = WeightSequence::gevrey(1.0, 10).unwrap();
        let model = GrowthModel::new(&lin);
        let (j, _) = cumulative_tail(&model, 2, &[1e3, 1e4]);
        let t = 1e3;
        let approx = t * t * j[0];
        assert!((approx / t - 1.0).abs() < 0.01, "{approx}");
    }

    #[test]
    fn nu_reg_matches_trapezoid_oracle() {
        let rw = gevrey1();
        let m = WeightSequence::gevrey(1.0, 200).unwrap();
        let v = rw.nu_reg(10.0);
        let oracle = trapezoid_nu(&m, 2, 10.0, 1_000_000);
        assert!(((v - oracle) / oracle).abs() < 1e-6, "{v} vs {oracle}");
        let l = rw.l_cmp();
        let nm = m.nu(10.0);
        assert!(v >= nm / l - l.ln() && v <= l * nm + l.ln());
        assert_eq!(rw.nu_reg(0.0), 0.0);
        assert!(rw.nu_reg(20.0) >= rw.nu_reg(10.0));
    }

    #[test]
    fn cache_properties() {
        let rw = gevrey1();
        assert_eq!(rw.exponent(), 2);
        assert!(rw.is_monotone());
        assert!(rw.l_cmp() >= 1.0 && rw.l_cmp() < 3.0, "{}", rw.l_cmp());
        assert!(rw.eta_ratio_decreasing(1e6, 1e7));
        assert!(rw.eta_ratio_decreasing(10.0, 1e7));
    }

    #[test]
    fn eta_special_values() {
        let rw = gevrey1();
        // eta(0) = ∫_1^∞ nu_M(s) s^{-3} ds = nu(1)
        assert!((rw.eta(0.0) - rw.nu_reg(1.0)).abs() < 1e-12);
        let rw1 = RegularizedWeight::build(&WeightSequence::gevrey(2.0, 100).unwrap()).unwrap();
        assert_eq!(rw1.exponent(), 1);
        // N = 1: eta(t) = ∫_t^∞ nu_M(s) s^{-2} ds = nu(t) / t
        let t = 7.5;
        assert!((rw1.eta(t) - rw1.nu_reg(t) / t).abs() < 1e-12 * rw1.eta(t));
    }

    #[test]
    fn t_form_matches_s_form() {
        let rw = gevrey1();
        for i in (0..CACHE_NODES).step_by(CACHE_NODES / 100) {
            let t = rw.nodes()[i];
            let a = rw.nu_nodes()[i];
            let b = rw.nu_s_form(t);
            assert!(((a - b) / b).abs() < 1e-6, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn interpolation_close_to_quadrature() {
        let rw = gevrey1();
        for &t in &[0.5, 1.5, 3.3, 17.0, 123.4, 9876.5] {
            let a = rw.nu(t);
            let b = rw.nu_reg(t);
            assert!(((a - b) / b).abs() < 1e-4, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn almost_lipschitz() {
        let rw = gevrey1();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut pairs = random_pairs(&mut rng, 200, 100.0);
        pairs.push((3.0, 3.0));
        pairs.push((1.0, 0.0));
        let rep = verify_almost_lipschitz(rw, &pairs);
        assert!(rep.holds, "{rep:?}");
        assert!(rw.nu_reg(1.0) <= rw.eta(0.0) * 4.0);
    }

    #[test]
    fn table_only_sequence_is_extended() {
        let m = WeightSequence::from_table(WeightSequence::gevrey(1.0, 300).unwrap().log_values().to_vec()).unwrap();
        let rw = RegularizedWeight::build(&m).unwrap();
        assert!(rw.warnings().iter().any(|w| matches!(w, Warning::Extrapolated { .. })));
        assert_eq!(rw.exponent(), 2);
    }

    #[test]
    fn csv_export() {
        let rw = gevrey1();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nu.csv");
        rw.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,nu,eta"));
        assert_eq!(text.lines().count(), CACHE_NODES + 1);
    }
}
