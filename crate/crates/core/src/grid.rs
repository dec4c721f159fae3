//! Uniform periodic grids, the Fourier transform f^(xi) = ∫ f(x) e^{-2 pi i x xi} dx,
//! convolution, spectral derivatives and weighted sup-norms.

use crate::diag::Warning;
use crate::error::{Error, Result};
use crate::weights::WeightSequence;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

pub const DEFAULT_HALF_WIDTH: f64 = 16.0;
pub const DEFAULT_POINTS: usize = 4096;
/// Relative level below which a function counts as decayed at the boundary.
pub const DECAY_TOL: f64 = 1e-12;
/// Relative boundary mass above which a convolution is flagged for wrap-around.
pub const WRAP_TOL: f64 = 1e-8;
/// Fraction of the half-width treated as the boundary band.
pub const BOUNDARY_BAND: f64 = 1.0 / 16.0;

/// Nodes x_k = -L + k 2L/n, k = 0..n.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Grid {
    half_width: f64,
    n: usize,
}

// half-widths compared with a relative tolerance so that dual().dual() equals the original grid
impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same(other)
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self { half_width: DEFAULT_HALF_WIDTH, n: DEFAULT_POINTS }
    }
}

impl Grid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half-width must be positive, got {half_width}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("point count must be a power of two >= 8, got {n}")));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }

    /// Frequency grid: spacing 1/(2L), same point count.
    pub fn dual(&self) -> Grid {
        Grid { half_width: self.n as f64 / (4.0 * self.half_width), n: self.n }
    }

    /// Index of the node nearest to x, if x lies on the grid.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.dx()).round() as i64 + (self.n / 2) as i64;
        (0..self.n as i64).contains(&k).then_some(k as usize)
    }

    /// Index of x_k + x_j reduced periodically.
    pub fn shift_index(&self, k: usize, j: isize) -> usize {
        (k as isize + j).rem_euclid(self.n as isize) as usize
    }

    /// Index of -x_k (x_0 = -L maps to itself by periodicity).
    pub fn reflect_index(&self, k: usize) -> usize {
        (self.n - k) % self.n
    }

    fn in_band(&self, k: usize) -> bool {
        self.x(k).abs() >= (1.0 - BOUNDARY_BAND) * self.half_width
    }

    fn same(&self, other: &Grid) -> bool {
        self.n == other.n && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("{} samples for a {}-point grid", samples.len(), grid.len())));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, samples: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self { grid, samples: grid.xs().into_iter().map(f).collect() }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn at(&self, k: usize) -> Complex64 {
        self.samples[k]
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let samples = self.samples.iter().enumerate().map(|(k, &v)| f(self.grid.x(k), v)).collect();
        Self { grid: self.grid, samples }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|_, v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|_, v| v.conj())
    }

    /// x -> f(-x).
    pub fn reflect(&self) -> Self {
        let samples = (0..self.grid.len()).map(|k| self.samples[self.grid.reflect_index(k)]).collect();
        Self { grid: self.grid, samples }
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, samples })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a * b)
    }

    /// (f, g) = sum f conj(g) dx.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        check_same(&self.grid, &other.grid)?;
        Ok(self.samples.iter().zip(&other.samples).map(|(a, b)| a * b.conj()).sum::<Complex64>() * self.grid.dx())
    }

    pub fn norm_l2(&self) -> f64 {
        (self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// sum f dx.
    pub fn integral(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.grid.dx()
    }

    /// max |f| on the boundary band relative to max |f| (0 for the zero function).
    pub fn boundary_level(&self) -> f64 {
        let sup = self.norm_sup();
        if sup == 0.0 {
            return 0.0;
        }
        let band = (0..self.grid.len())
            .filter(|&k| self.grid.in_band(k))
            .map(|k| self.samples[k].norm())
            .fold(0.0, f64::max);
        band / sup
    }

    /// L1 mass on the boundary band relative to total L1 mass.
    pub fn boundary_mass(&self) -> f64 {
        let total: f64 = self.samples.iter().map(|v| v.norm()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let band: f64 = (0..self.grid.len()).filter(|&k| self.grid.in_band(k)).map(|k| self.samples[k].norm()).sum();
        band / total
    }

    /// Relative L2 distance ||self - other|| / ||other|| (absolute when other = 0).
    pub fn rel_l2_error(&self, reference: &Self) -> Result<f64> {
        let d = self.sub(reference)?.norm_l2();
        let r = reference.norm_l2();
        Ok(if r > 0.0 { d / r } else { d })
    }

    pub fn rel_sup_error(&self, reference: &Self) -> Result<f64> {
        let d = self.sub(reference)?.norm_sup();
        let r = reference.norm_sup();
        Ok(if r > 0.0 { d / r } else { d })
    }

    /// CSV columns x, re, im.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "re", "im"])?;
        for (k, v) in self.samples.iter().enumerate() {
            w.write_record([format!("{}", self.grid.x(k)), format!("{:e}", v.re), format!("{:e}", v.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads x, re[, im] rows; the grid is recovered from the x column.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                match rec.get(i) {
                    Some(s) => s.parse::<f64>().map_err(|e| Error::Parse(format!("'{s}': {e}"))),
                    None => Ok(0.0),
                }
            };
            if rec.len() < 2 {
                return Err(Error::Parse("expected at least columns x, re".into()));
            }
            xs.push(num(0)?);
            vs.push(Complex64::new(num(1)?, num(2)?));
        }
        if xs.len() < 8 {
            return Err(Error::Parse(format!("need at least 8 rows, got {}", xs.len())));
        }
        let grid = Grid::new(-xs[0], xs.len())?;
        for (k, &x) in xs.iter().enumerate() {
            if (x - grid.x(k)).abs() > 1e-9 * grid.half_width() {
                return Err(Error::InvalidGrid(format!(
                    "row {k}: x = {x} is not on the grid -L + k 2L/n (expected {})",
                    grid.x(k)
                )));
            }
        }
        Self::new(grid, vs)
    }
}

fn check_same(a: &Grid, b: &Grid) -> Result<()> {
    if a.same(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("grid (L={}, n={}) vs (L={}, n={})", a.half_width, a.n, b.half_width, b.n)))
    }
}

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static P: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    P.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap_or_else(|e| e.into_inner());
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

fn alternate(v: &mut [Complex64]) {
    for s in v.iter_mut().skip(1).step_by(2) {
        *s = -*s;
    }
}

/// Samples of f^ on the dual grid: dx (-1)^j FFT(f_k (-1)^k)_j.
pub fn forward_ft(f: &GridFunction) -> GridFunction {
    let mut buf = f.samples.clone();
    alternate(&mut buf);
    plan(buf.len(), false).process(&mut buf);
    alternate(&mut buf);
    let dx = f.grid.dx();
    buf.iter_mut().for_each(|v| *v *= dx);
    GridFunction { grid: f.grid.dual(), samples: buf }
}

/// Inverse with e^{+2 pi i x xi}: dxi (-1)^k IFFT(F_j (-1)^j)_k.
pub fn inverse_ft(f: &GridFunction) -> GridFunction {
    let mut buf = f.samples.clone();
    alternate(&mut buf);
    plan(buf.len(), true).process(&mut buf);
    alternate(&mut buf);
    let d = f.grid.dx();
    buf.iter_mut().for_each(|v| *v *= d);
    GridFunction { grid: f.grid.dual(), samples: buf }
}

pub fn decay_warning(f: &GridFunction) -> Option<Warning> {
    let level = f.boundary_level();
    (level > DECAY_TOL).then_some(Warning::BoundaryDecay { relative_mass: level })
}

pub fn forward_ft_checked(f: &GridFunction) -> (GridFunction, Vec<Warning>) {
    (forward_ft(f), decay_warning(f).into_iter().collect())
}

pub fn inverse_ft_checked(f: &GridFunction) -> (GridFunction, Vec<Warning>) {
    (inverse_ft(f), decay_warning(f).into_iter().collect())
}

/// (f * g)(x) = ∫ f(t) g(x - t) dt, computed periodically through the transform.
pub fn convolve(f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
    check_same(&f.grid, &g.grid)?;
    let prod = forward_ft(f).mul(&forward_ft(g))?;
    Ok(inverse_ft(&prod))
}

pub fn convolve_checked(f: &GridFunction, g: &GridFunction) -> Result<(GridFunction, Vec<Warning>)> {
    let out = convolve(f, g)?;
    let mass = out.boundary_mass();
    let w = (mass > WRAP_TOL).then_some(Warning::WrapAround { relative_mass: mass });
    Ok((out, w.into_iter().collect()))
}

/// (2 pi i xi)^order as a multiplier on the dual grid; the Nyquist mode is dropped for odd orders.
fn derivative_symbol(xi: f64, order: u32, nyquist: bool) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if nyquist && order % 2 == 1 {
        return Complex64::new(0.0, 0.0);
    }
    let mag = (2.0 * PI * xi).powi(order as i32);
    match order % 4 {
        0 => Complex64::new(mag, 0.0),
        1 => Complex64::new(0.0, mag),
        2 => Complex64::new(-mag, 0.0),
        _ => Complex64::new(0.0, -mag),
    }
}

/// Multiplies a spectrum by (2 pi i xi)^order.
pub fn apply_derivative_symbol(spec: &GridFunction, order: u32) -> GridFunction {
    let g = spec.grid;
    let samples = spec
        .samples
        .iter()
        .enumerate()
        .map(|(j, &v)| v * derivative_symbol(g.x(j), order, j == 0))
        .collect();
    GridFunction { grid: g, samples }
}

pub fn spectral_derivative(f: &GridFunction, order: u32) -> GridFunction {
    if order == 0 {
        return f.clone();
    }
    inverse_ft(&apply_derivative_symbol(&forward_ft(f), order))
}

pub fn spectral_derivative_checked(f: &GridFunction, order: u32) -> (GridFunction, Vec<Warning>) {
    let out = spectral_derivative(f, order);
    let sup = out.norm_sup();
    let mut w = Vec::new();
    if !sup.is_finite() || sup > 1e300 {
        w.push(Warning::Overflow { detail: format!("derivative of order {order} reaches {sup:e}") });
    }
    (out, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormKind {
    /// h^a |f^(a)(x)| e^{k|x|} / M_a
    K,
    /// h^a |f^(a)(x)| e^{nu_A(k x)} / M_a
    GS,
    /// h^a |f^(a)(x)| e^{-kappa |x|} / M_a
    Q,
}

#[derive(Debug, Clone)]
pub struct WeightedNormSpec {
    pub m: WeightSequence,
    pub a: Option<WeightSequence>,
    pub h: f64,
    pub k: f64,
    pub alpha_max: u32,
    pub kappa: Option<f64>,
}

impl WeightedNormSpec {
    pub fn new(m: WeightSequence, h: f64, k: f64, alpha_max: u32) -> Self {
        Self { m, a: None, h, k, alpha_max, kappa: None }
    }

    pub fn with_a(mut self, a: WeightSequence) -> Self {
        self.a = Some(a);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    fn validate(&self, kind: NormKind) -> Result<()> {
        if !(self.h > 0.0 && self.k >= 0.0) {
            return Err(Error::InvalidParameter(format!("need h > 0 and k >= 0 (h={}, k={})", self.h, self.k)));
        }
        if self.m.log_m_ext(self.alpha_max as usize).is_none() {
            return Err(Error::InvalidParameter(format!("M has no value at order {}", self.alpha_max)));
        }
        match kind {
            NormKind::GS if self.a.is_none() => Err(Error::InvalidParameter("GS norm needs the sequence A".into())),
            NormKind::Q if self.kappa.is_none() => Err(Error::InvalidParameter("Q norm needs kappa".into())),
            _ => Ok(()),
        }
    }

    fn log_x_weight(&self, kind: NormKind, x: f64) -> f64 {
        match kind {
            NormKind::K => self.k * x.abs(),
            NormKind::GS => self.a.as_ref().map(|a| a.nu(self.k * x.abs())).unwrap_or(0.0),
            NormKind::Q => -self.kappa.unwrap_or(0.0) * x.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub kind: NormKind,
    /// exp(log_value); may be +inf when the log exceeds the f64 range.
    pub value: f64,
    pub log_value: f64,
    pub alpha: u32,
    pub x: f64,
    /// log of the weighted sup at each derivative order.
    pub per_alpha: Vec<f64>,
    pub boundary_dominated: bool,
    pub warnings: Vec<Warning>,
}

impl NormReport {
    /// Finite (or zero) and attained away from the boundary band.
    pub fn is_clean(&self) -> bool {
        self.log_value == f64::NEG_INFINITY || self.log_value.is_finite() && !self.boundary_dominated
    }

    /// The sup over orders was attained at the top tested order.
    pub fn alpha_saturated(&self) -> bool {
        self.per_alpha.len() > 1 && self.alpha as usize + 1 == self.per_alpha.len()
    }
}

/// Relative spectral level below which modes of a sampled input are treated as roundoff.
pub const SPECTRAL_FLOOR: f64 = 1e-14;

/// Weighted sup over derivative orders and grid nodes for a function given by samples.
pub fn class_norm(f: &GridFunction, spec: &WeightedNormSpec, kind: NormKind) -> Result<NormReport> {
    let mut fh = forward_ft(f);
    let peak = fh.norm_sup();
    for v in fh.samples.iter_mut() {
        if v.norm() < SPECTRAL_FLOOR * peak {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    let mut rep = norm_from_spectrum(&fh, spec, kind, SPECTRAL_FLOOR * peak, 0.0)?;
    if let Some(w) = decay_warning(f) {
        rep.warnings.push(w);
    }
    Ok(rep)
}

/// Same as `class_norm` with the function given through its spectrum on the dual grid, known to
/// relative accuracy `rel_err`. Derivative values below (64 eps + rel_err) sum |(2 pi xi)^a F| dxi
/// are ignored.
pub fn class_norm_spectral(spectrum: &GridFunction, spec: &WeightedNormSpec, kind: NormKind, rel_err: f64) -> Result<NormReport> {
    norm_from_spectrum(spectrum, spec, kind, 0.0, rel_err)
}

/// `mode_noise` is the absolute uncertainty of each retained spectral sample; it adds
/// 2 mode_noise sum_{kept} |2 pi xi|^a dxi to the floor.
fn norm_from_spectrum(
    spectrum: &GridFunction,
    spec: &WeightedNormSpec,
    kind: NormKind,
    mode_noise: f64,
    rel_err: f64,
) -> Result<NormReport> {
    spec.validate(kind)?;
    let space = spectrum.grid.dual();
    let xs = space.xs();
    let log_xw: Vec<f64> = xs.iter().map(|&x| spec.log_x_weight(kind, x)).collect();
    let dxi = spectrum.grid.dx();
    let mut per_alpha = Vec::with_capacity(spec.alpha_max as usize + 1);
    let mut best = (f64::NEG_INFINITY, 0u32, 0usize);
    let mut band_best = f64::NEG_INFINITY;
    for alpha in 0..=spec.alpha_max {
        let ds = apply_derivative_symbol(spectrum, alpha);
        let mut floor = (64.0 * f64::EPSILON + rel_err) * ds.samples.iter().map(|v| v.norm()).sum::<f64>() * dxi;
        if mode_noise > 0.0 {
            let kept: f64 = spectrum
                .samples
                .iter()
                .enumerate()
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|(j, _)| (2.0 * PI * spectrum.grid.x(j)).abs().powi(alpha as i32))
                .sum();
            floor += 2.0 * mode_noise * kept * dxi;
        }
        let d = inverse_ft(&ds);
        let log_c = alpha as f64 * spec.h.ln() - spec.m.log_m_ext(alpha as usize).unwrap_or(f64::INFINITY);
        let mut row = f64::NEG_INFINITY;
        for (k, v) in d.samples.iter().enumerate() {
            let a = v.norm();
            if a <= floor || a == 0.0 {
                continue;
            }
            let lv = a.ln() + log_c + log_xw[k];
            if lv > row {
                row = lv;
            }
            if lv > best.0 {
                best = (lv, alpha, k);
            }
            if space.in_band(k) && lv > band_best {
                band_best = lv;
            }
        }
        per_alpha.push(row);
    }
    let (log_value, alpha, k) = best;
    let boundary_dominated =
        log_value.is_finite() && (space.in_band(k) || band_best >= log_value + (1e-3f64).ln());
    let mut warnings = Vec::new();
    if boundary_dominated {
        warnings.push(Warning::BoundaryDominated { alpha: alpha as usize, x: space.x(k) });
    }
    Ok(NormReport {
        kind,
        value: log_value.exp(),
        log_value,
        alpha,
        x: if log_value.is_finite() { space.x(k) } else { 0.0 },
        per_alpha,
        boundary_dominated,
        warnings,
    })
}
