//! Entire multiplier P(z) = exp(nu~(z / K)) built from the Gaussian smoothing
//! nu~(z) = pi^{-d/2} ∫ nu(x) e^{-(z-x)^2} dx of the regularized weight.

use crate::diag::Warning;
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_with_breaks, QuadConfig};
use crate::regularize::{RegularizedWeight, CACHE_HI};
use crate::weights::log_grid;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

/// Half-width of the Gaussian window used in the smoothing integral (e^{-R^2} ~ 5e-22).
pub const SMOOTHING_RADIUS: f64 = 7.0;

/// A radial function nu(|x|) to be smoothed.
pub trait RadialProfile: Sync {
    fn value(&self, r: f64) -> f64;
    /// Largest |x| at which `value` may be called.
    fn range(&self) -> f64 {
        f64::INFINITY
    }
}

impl RadialProfile for RegularizedWeight {
    fn value(&self, r: f64) -> f64 {
        self.nu(r)
    }
    fn range(&self) -> f64 {
        CACHE_HI
    }
}

/// nu(x) = c.
#[derive(Debug, Clone, Copy)]
pub struct ConstantProfile(pub f64);

impl RadialProfile for ConstantProfile {
    fn value(&self, _r: f64) -> f64 {
        self.0
    }
}

/// nu(x) = x^2.
#[derive(Debug, Clone, Copy)]
pub struct SquareProfile;

impl RadialProfile for SquareProfile {
    fn value(&self, r: f64) -> f64 {
        r * r
    }
}

fn smoothing_cfg() -> QuadConfig {
    QuadConfig { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 1000 }
}

/// nu~(z) for d = 1: with z = a + ib and x = a + y,
/// pi^{-1/2} e^{b^2} ∫ nu(|a + y|) e^{-y^2} e^{2iby} dy.
pub fn nu_tilde<P: RadialProfile + ?Sized>(nu: &P, z: Complex64) -> Result<Complex64> {
    let (a, b) = (z.re, z.im);
    let r = SMOOTHING_RADIUS;
    if a.abs() + r > nu.range() {
        return Err(Error::Range { arg: a, lo: -(nu.range() - r), hi: nu.range() - r });
    }
    let mut cuts = vec![-r];
    for c in [-a - 1.0, -a, -a + 1.0] {
        if c > -r && c < r {
            cuts.push(c);
        }
    }
    cuts.push(r);
    let f = |y: f64| Complex64::from_polar(nu.value((a + y).abs()) * (-y * y).exp(), 2.0 * b * y);
    let res = integrate_with_breaks(f, &cuts, smoothing_cfg());
    Ok(res.value * ((b * b).exp() / PI.sqrt()))
}

/// nu~(z1, z2) for d = 2 by tensor quadrature of the radial weight.
pub fn nu_tilde_2d<P: RadialProfile + ?Sized>(nu: &P, z: [Complex64; 2]) -> Result<Complex64> {
    let r = SMOOTHING_RADIUS;
    let (a1, b1, a2, b2) = (z[0].re, z[0].im, z[1].re, z[1].im);
    if a1.hypot(a2) + r * 2f64.sqrt() > nu.range() {
        return Err(Error::Range { arg: a1.hypot(a2), lo: 0.0, hi: nu.range() });
    }
    let cfg = QuadConfig { abs_tol: 1e-12, rel_tol: 1e-10, max_intervals: 200 };
    let outer = |y1: f64| {
        let inner = |y2: f64| {
            let rr = (a1 + y1).hypot(a2 + y2);
            Complex64::from_polar(nu.value(rr) * (-y2 * y2).exp(), 2.0 * b2 * y2)
        };
        let mut cuts = vec![-r];
        if (-a2).abs() < r {
            cuts.push(-a2);
        }
        cuts.push(r);
        integrate_with_breaks(inner, &cuts, cfg).value * Complex64::from_polar((-y1 * y1).exp(), 2.0 * b1 * y1)
    };
    let mut cuts = vec![-r];
    if (-a1).abs() < r {
        cuts.push(-a1);
    }
    cuts.push(r);
    let v = integrate_with_breaks(outer, &cuts, cfg).value;
    Ok(v * ((b1 * b1 + b2 * b2).exp() / PI))
}

/// A = pi^{-1/2} ∫ (1 + |x|)^N e^{-x^2} dx.
pub fn smoothing_constant(n: u32) -> f64 {
    let r = integrate(
        |x: f64| (1.0 + x).powi(n as i32) * (-x * x).exp(),
        0.0,
        12.0,
        QuadConfig { abs_tol: 1e-15, rel_tol: 1e-13, max_intervals: 100 },
    );
    2.0 * r.value / PI.sqrt()
}

/// Tube V_n = R + i[-n, n] sampled on a rectangular grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeGrid {
    pub half_width: f64,
    pub re_min: f64,
    pub re_max: f64,
    pub re_step: f64,
    pub im_step: f64,
}

impl TubeGrid {
    pub fn new(half_width: f64, re_max: f64, step: f64) -> Self {
        Self { half_width, re_min: -re_max, re_max, re_step: step, im_step: step }
    }

    pub fn refined(&self) -> Self {
        Self { re_step: self.re_step / 2.0, im_step: self.im_step / 2.0, ..*self }
    }

    pub fn nodes(&self) -> Vec<Complex64> {
        let nr = ((self.re_max - self.re_min) / self.re_step).round() as i64;
        let ni = (self.half_width / self.im_step).round() as i64;
        let mut out = Vec::with_capacity(((nr + 1) * (2 * ni + 1)) as usize);
        for i in -ni..=ni {
            let im = (i as f64 * self.im_step).clamp(-self.half_width, self.half_width);
            for k in 0..=nr {
                out.push(Complex64::new(self.re_min + k as f64 * self.re_step, im));
            }
        }
        out
    }
}

/// Per-node result of a tube sweep, in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeNode {
    pub z: Complex64,
    pub log_abs_p: f64,
    pub log_lower: f64,
    pub log_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeReport {
    pub tube: TubeGrid,
    pub c_n: f64,
    pub log_c_n: f64,
    pub nodes: Vec<TubeNode>,
    pub warnings: Vec<Warning>,
}

impl TubeReport {
    /// CSV with columns re_z, im_z, abs_p, lower, upper (bounds include C_n).
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["re_z", "im_z", "abs_p", "lower", "upper"])?;
        for nd in &self.nodes {
            w.write_record([
                format!("{}", nd.z.re),
                format!("{}", nd.z.im),
                format!("{:e}", nd.log_abs_p.exp()),
                format!("{:e}", (nd.log_lower - self.log_c_n).exp()),
                format!("{:e}", (nd.log_upper + self.log_c_n).exp()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub l: f64,
    pub k: f64,
}

const K_STEP: f64 = 0.5;
const K_CAP: f64 = 1000.0;

/// Comparison constant L from the regularized weight, then the smallest K on {1.5, 2, 2.5, ...}
/// with 2 L nu_M(t) <= nu_M(K t) + log K on the calibration grid.
pub fn calibrate(rw: &RegularizedWeight) -> Result<Calibration> {
    calibrate_with(rw, rw.l_cmp())
}

pub fn calibrate_with(rw: &RegularizedWeight, l: f64) -> Result<Calibration> {
    let grid = calibration_grid();
    let lhs: Vec<f64> = grid.iter().map(|&t| 2.0 * l * rw.nu_m(t)).collect();
    let mut k = 1.5;
    while k <= K_CAP {
        let lk = k.ln();
        if grid.iter().zip(&lhs).all(|(&t, &v)| v <= rw.nu_m(k * t) + lk + 1e-12 * (1.0 + v)) {
            return Ok(Calibration { l, k });
        }
        k += K_STEP;
    }
    Err(Error::Calibration(format!("no K <= {K_CAP} satisfies 2L nu_M(t) <= nu_M(Kt) + log K (L = {l})")))
}

pub fn calibration_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_grid(1e-2, 1e4, 600));
    g
}

/// P(z) = exp(nu~(s z / K)) with s = 1 for the base multiplier and the pipeline scale otherwise.
#[derive(Debug, Clone)]
pub struct EntireMultiplier {
    rw: Arc<RegularizedWeight>,
    calibration: Calibration,
    scale: f64,
    dimension: usize,
    tube_constants: Vec<(f64, f64)>,
}

impl EntireMultiplier {
    pub fn build(rw: RegularizedWeight) -> Result<Self> {
        let calibration = calibrate(&rw)?;
        Ok(Self { rw: Arc::new(rw), calibration, scale: 1.0, dimension: 1, tube_constants: Vec::new() })
    }

    pub fn with_calibration(rw: Arc<RegularizedWeight>, calibration: Calibration) -> Self {
        Self { rw, calibration, scale: 1.0, dimension: 1, tube_constants: Vec::new() }
    }

    pub fn weight(&self) -> &RegularizedWeight {
        &self.rw
    }

    pub fn calibration(&self) -> Calibration {
        self.calibration
    }

    pub fn k(&self) -> f64 {
        self.calibration.k
    }

    /// delta = 1 / K^2.
    pub fn delta(&self) -> f64 {
        1.0 / (self.calibration.k * self.calibration.k)
    }

    /// Argument prescale (1 for the unscaled multiplier).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Verified tube constants as (half-width, C_n).
    pub fn tube_constants(&self) -> &[(f64, f64)] {
        &self.tube_constants
    }

    pub fn tube_constant(&self, n: f64) -> Option<f64> {
        self.tube_constants.iter().find(|(w, _)| *w == n).map(|(_, c)| *c)
    }

    /// log P(z) = nu~(s z / K).
    pub fn log_p(&self, z: Complex64) -> Result<Complex64> {
        nu_tilde(self.rw.as_ref(), z * (self.scale / self.calibration.k))
    }

    pub fn eval_p(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.log_p(z)?.exp())
    }

    /// Lower and upper log-bounds nu_M(delta s |Re z|) and nu_M(s |Re z|) at z.
    pub fn log_bounds(&self, z: Complex64) -> (f64, f64) {
        let x = self.scale * z.re.abs();
        (self.rw.nu_m(self.delta() * x), self.rw.nu_m(x))
    }

    /// Evaluates the tube grid and returns the smallest C_n with
    /// C_n^{-1} e^{nu_M(delta s Re z)} <= |P(z)| <= C_n e^{nu_M(s Re z)} at every node.
    pub fn sweep(&self, tube: &TubeGrid) -> Result<TubeReport> {
        let mut nodes = Vec::new();
        let mut log_c = 0.0f64;
        let mut warnings = Vec::new();
        for z in tube.nodes() {
            let lp = self.log_p(z)?.re;
            let (lo, hi) = self.log_bounds(z);
            log_c = log_c.max(lo - lp).max(lp - hi);
            nodes.push(TubeNode { z, log_abs_p: lp, log_lower: lo, log_upper: hi });
        }
        if nodes.iter().any(|n| n.log_abs_p > 709.0 || n.log_upper + log_c > 709.0) {
            warnings.push(Warning::Overflow {
                detail: "|P| or its upper bound exceeds the f64 range on this tube; CSV values saturate".into(),
            });
        }
        Ok(TubeReport { tube: *tube, c_n: log_c.exp(), log_c_n: log_c, nodes, warnings })
    }

    /// Runs the sweep and stores C_n for the tube half-width.
    pub fn verify_tube_bounds(&mut self, tube: &TubeGrid) -> Result<TubeReport> {
        let rep = self.sweep(tube)?;
        self.tube_constants.retain(|(w, _)| *w != tube.half_width);
        self.tube_constants.push((tube.half_width, rep.c_n));
        self.tube_constants.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(rep)
    }

    /// Multiplier with argument rescaled by pi h / (4 sqrt(d) H^3).
    pub fn scale_for_pipeline(&self, h: f64, big_h: f64, d: usize) -> Result<Self> {
        if !(h > 0.0) || !(big_h >= 1.0) || !(d == 1 || d == 2) {
            return Err(Error::InvalidParameter(format!("need h > 0, H >= 1, d in {{1, 2}} (h={h}, H={big_h}, d={d})")));
        }
        let s = pipeline_scale(h, big_h, d);
        Ok(Self { scale: self.scale * s, dimension: d, tube_constants: Vec::new(), ..self.clone() })
    }

    /// sup over xs of |1/P(x)| e^{nu_M(delta s |x|)}, in log form.
    pub fn inverse_symbol_log_sup(&self, xs: &[f64]) -> Result<f64> {
        let mut best = f64::MIN;
        for &x in xs {
            let z = Complex64::new(x, 0.0);
            let (lo, _) = self.log_bounds(z);
            best = best.max(lo - self.log_p(z)?.re);
        }
        Ok(best)
    }

    /// Max over nodes of |nu~(z) - nu(Re z)| / (A e^{|Im z|^2} eta(|Re z|)) for the unscaled nu~.
    pub fn smoothing_bound_ratio(&self, tube: &TubeGrid) -> Result<f64> {
        let a = smoothing_constant(self.rw.exponent());
        let mut worst = 0.0f64;
        for z in tube.nodes() {
            let lhs = (nu_tilde(self.rw.as_ref(), z)? - self.rw.nu(z.re.abs())).norm();
            let rhs = a * (z.im * z.im).exp() * self.rw.eta(z.re.abs());
            worst = worst.max(lhs / rhs);
        }
        Ok(worst)
    }
}

/// pi h / (4 sqrt(d) H^3).
pub fn pipeline_scale(h: f64, big_h: f64, d: usize) -> f64 {
    PI * h / (4.0 * (d as f64).sqrt() * big_h.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightSequence;
    use std::sync::OnceLock;

    fn gevrey1() -> &'static EntireMultiplier {
        static EM: OnceLock<EntireMultiplier> = OnceLock::new();
        EM.get_or_init(|| {
            let rw = RegularizedWeight::build(&WeightSequence::gevrey(1.0, 200).unwrap()).unwrap();
            EntireMultiplier::build(rw).unwrap()
        })
    }

    #[test]
    fn constant_profile_is_fixed() {
        for z in [Complex64::new(0.0, 0.0), Complex64::new(3.0, 0.7), Complex64::new(-2.0, -1.2)] {
            let v = nu_tilde(&ConstantProfile(2.5), z).unwrap();
            assert!((v - 2.5).norm() < 1e-11, "{v}");
        }
    }

    #[test]
    fn square_profile_moment() {
        for z in [Complex64::new(0.0, 0.0), Complex64::new(1.5, 0.5), Complex64::new(-3.0, 1.0)] {
            let v = nu_tilde(&SquareProfile, z).unwrap();
            let want = z * z + 0.5;
            assert!((v - want).norm() < 1e-10 * (1.0 + want.norm()), "{v} vs {want}");
        }
    }

    #[test]
    fn tensor_smoothing_of_square() {
        // radial |x|^2 = x1^2 + x2^2 gives z1^2 + z2^2 + 1
        let z = [Complex64::new(0.5, 0.2), Complex64::new(-1.0, 0.1)];
        let v = nu_tilde_2d(&SquareProfile, z).unwrap();
        let want = z[0] * z[0] + z[1] * z[1] + 1.0;
        assert!((v - want).norm() < 1e-8, "{v} vs {want}");
    }

    #[test]
    fn smoothing_constant_closed_form() {
        use statrs::function::gamma::gamma;
        for n in 1..=4u32 {
            let closed: f64 = (0..=n)
                .map(|j| {
                    let b = (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
                    b * gamma((j as f64 + 1.0) / 2.0) / PI.sqrt()
                })
                .sum();
            assert!((smoothing_constant(n) - closed).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn calibration_gevrey_one() {
        let em = gevrey1();
        let c = em.calibration();
        assert!(c.k >= 2.0 * c.l - 1.0 && c.k <= 2.0 * c.l + 2.0, "{c:?}");
        assert_eq!(em.delta(), 1.0 / (c.k * c.k));
        let rw = em.weight();
        let c2 = calibrate_with(rw, 2.0).unwrap();
        assert!((3.5..=5.0).contains(&c2.k), "{c2:?}");
    }

    #[test]
    fn calibration_gevrey_two() {
        let rw = RegularizedWeight::build(&WeightSequence::gevrey(2.0, 200).unwrap()).unwrap();
        let c = calibrate_with(&rw, 2.0).unwrap();
        assert!((14.0..=20.0).contains(&c.k), "{c:?}");
    }

    #[test]
    fn symmetry_and_positivity() {
        let em = gevrey1();
        let p0 = em.eval_p(Complex64::new(0.0, 0.0)).unwrap();
        assert!(p0.im.abs() < 1e-14 && p0.re >= 1.0);
        let a = em.eval_p(Complex64::new(1.0, 1.0)).unwrap();
        let b = em.eval_p(Complex64::new(1.0, -1.0)).unwrap();
        assert!((a - b.conj()).norm() < 1e-9 * a.norm());
        let c = em.eval_p(Complex64::new(-1.0, 1.0)).unwrap();
        assert!((a - c.conj()).norm() < 1e-9 * a.norm());
    }

    #[test]
    fn smoothing_bound_on_small_tube() {
        let em = gevrey1();
        let ratio = em.smoothing_bound_ratio(&TubeGrid::new(1.0, 10.0, 0.5)).unwrap();
        assert!(ratio <= 1.0, "{ratio}");
        // spot value at z = 5
        let a = smoothing_constant(em.weight().exponent());
        let rw = em.weight();
        let lhs = (nu_tilde(rw, Complex64::new(5.0, 0.0)).unwrap().re - rw.nu(5.0)).abs();
        assert!(lhs <= a * rw.eta(5.0));
    }

    #[test]
    fn tube_bounds_and_storage() {
        let mut em = gevrey1().clone();
        let r0 = em.verify_tube_bounds(&TubeGrid::new(0.0, 20.0, 0.5)).unwrap();
        let r1 = em.verify_tube_bounds(&TubeGrid::new(1.0, 20.0, 0.5)).unwrap();
        assert!(r0.c_n.is_finite() && r1.c_n.is_finite());
        assert!(r0.c_n <= r1.c_n);
        assert_eq!(em.tube_constant(1.0), Some(r1.c_n));
        for nd in &r1.nodes {
            assert!(nd.log_abs_p >= nd.log_lower - r1.log_c_n - 1e-12);
            assert!(nd.log_abs_p <= nd.log_upper + r1.log_c_n + 1e-12);
        }
    }

    #[test]
    fn pipeline_scale_values() {
        assert!((pipeline_scale(1.0, 2.0, 1) - PI / 32.0).abs() < 1e-15);
        let em = gevrey1();
        let h = 4.0 * 8.0 / PI;
        let id = em.scale_for_pipeline(h, 2.0, 1).unwrap();
        assert!((id.scale() - 1.0).abs() < 1e-15);
        let s = em.scale_for_pipeline(1.0, 2.0, 1).unwrap();
        let rep = s.sweep(&TubeGrid::new(0.0, 40.0, 0.5)).unwrap();
        assert!(rep.c_n.is_finite());
        let xs: Vec<f64> = (-80..=80).map(|i| i as f64 * 0.5).collect();
        assert!(s.inverse_symbol_log_sup(&xs).unwrap().is_finite());
    }

    #[test]
    fn range_error() {
        let em = gevrey1();
        assert!(matches!(nu_tilde(em.weight(), Complex64::new(2e7, 0.0)), Err(Error::Range { .. })));
    }

    #[test]
    fn tube_csv() {
        let em = gevrey1();
        let rep = em.sweep(&TubeGrid::new(0.5, 2.0, 0.5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tube.csv");
        rep.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert!(text.starts_with("re_z,im_z,abs_p,lower,upper"));
        assert_eq!(text.lines().count(), rep.nodes.len() + 1);
    }
}
