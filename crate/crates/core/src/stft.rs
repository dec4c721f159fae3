//! Short-time Fourier transform V_psi f(x, xi) = ∫ f(t) conj(psi(t - x)) e^{-2 pi i xi t} dt
//! on a periodic grid, its adjoint and the symbol pairing built from it.

use crate::diag::Warning;
use crate::error::{Error, Result};
use crate::grid::{forward_ft, inverse_ft, Grid, GridFunction};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::Path;

/// Smallest |(gamma, psi)| accepted by the reconstruction check.
pub const MIN_WINDOW_OVERLAP: f64 = 1e-6;

/// Samples over (x_k, xi_j), x on the base grid and xi on its dual; row-major in k.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrequencyGrid {
    grid: Grid,
    data: Vec<Complex64>,
}

impl TimeFrequencyGrid {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at(&self, k: usize, j: usize) -> Complex64 {
        self.data[k * self.grid.len() + j]
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        let n = self.grid.len();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn norm_l2(&self) -> f64 {
        let cell = self.grid.dx() * self.grid.dual().dx();
        (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("time-frequency grids differ".into()));
        }
        Ok(Self { grid: self.grid, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() })
    }

    /// CSV columns x, xi, abs; every `stride`-th node in each direction.
    pub fn write_abs_csv(&self, path: impl AsRef<Path>, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let dual = self.grid.dual();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "xi", "abs"])?;
        for k in (0..self.grid.len()).step_by(stride) {
            for j in (0..dual.len()).step_by(stride) {
                w.write_record([
                    format!("{}", self.grid.x(k)),
                    format!("{}", dual.x(j)),
                    format!("{:e}", self.at(k, j).norm()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn same_grid(a: &GridFunction, b: &GridFunction) -> Result<()> {
    if a.grid() == b.grid() {
        Ok(())
    } else {
        Err(Error::GridMismatch("signal and window grids differ".into()))
    }
}

/// Index of t_m - x_k on a grid of n points.
fn window_index(n: usize, m: usize, k: usize) -> usize {
    (m + n + n / 2 - k) % n
}

pub fn stft(f: &GridFunction, psi: &GridFunction) -> Result<TimeFrequencyGrid> {
    same_grid(f, psi)?;
    if psi.norm_sup() == 0.0 {
        return Err(Error::ZeroWindow);
    }
    let g = *f.grid();
    let n = g.len();
    let mut data = Vec::with_capacity(n * n);
    for k in 0..n {
        let samples = (0..n).map(|m| f.at(m) * psi.at(window_index(n, m, k)).conj()).collect();
        let row = forward_ft(&GridFunction::new(g, samples)?);
        data.extend_from_slice(row.samples());
    }
    Ok(TimeFrequencyGrid { grid: g, data })
}

/// V_psi f at the single node (x_k, xi_j).
pub fn stft_at(f: &GridFunction, psi: &GridFunction, k: usize, j: usize) -> Result<Complex64> {
    same_grid(f, psi)?;
    let g = f.grid();
    let n = g.len();
    let xi = g.dual().x(j);
    let s: Complex64 = (0..n)
        .map(|m| f.at(m) * psi.at(window_index(n, m, k)).conj() * Complex64::from_polar(1.0, -2.0 * PI * xi * g.x(m)))
        .sum();
    Ok(s * g.dx())
}

/// V*_gamma F(t) = sum_k sum_j F(x_k, xi_j) e^{2 pi i xi_j t} gamma(t - x_k) dxi dx.
pub fn stft_adjoint(tf: &TimeFrequencyGrid, gamma: &GridFunction) -> Result<GridFunction> {
    if tf.grid != *gamma.grid() {
        return Err(Error::GridMismatch("window grid differs from the time-frequency grid".into()));
    }
    let g = tf.grid;
    let n = g.len();
    let dual = g.dual();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let slice = inverse_ft(&GridFunction::new(dual, tf.row(k).to_vec())?);
        for (m, o) in out.iter_mut().enumerate() {
            *o += slice.at(m) * gamma.at(window_index(n, m, k));
        }
    }
    let dx = g.dx();
    out.iter_mut().for_each(|v| *v *= dx);
    GridFunction::new(g, out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub overlap: Complex64,
    pub rel_l2_error: f64,
}

/// Relative L2 error of (gamma, psi)^{-1} V*_gamma V_psi f - f.
pub fn check_reconstruction(f: &GridFunction, psi: &GridFunction, gamma: &GridFunction) -> Result<ReconstructionReport> {
    let overlap = gamma.inner(psi)?;
    if overlap.norm() <= MIN_WINDOW_OVERLAP {
        return Err(Error::NearOrthogonal(overlap.norm()));
    }
    let rec = stft_adjoint(&stft(f, psi)?, gamma)?.scale(overlap.inv());
    Ok(ReconstructionReport { overlap, rel_l2_error: rec.rel_l2_error(f)? })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FundamentalReport {
    pub points: Vec<(f64, f64)>,
    pub max_abs_discrepancy: f64,
}

/// Compares V_psi f(x, xi) with e^{-2 pi i x xi} V_{psi^} f^(xi, -x) at grid nodes (k, j).
pub fn check_fundamental(f: &GridFunction, psi: &GridFunction, points: &[(usize, usize)]) -> Result<FundamentalReport> {
    let g = *f.grid();
    let fh = forward_ft(f);
    let ph = forward_ft(psi);
    let mut worst = 0.0f64;
    let mut pts = Vec::with_capacity(points.len());
    for &(k, j) in points {
        let (x, xi) = (g.x(k), g.dual().x(j));
        let lhs = stft_at(f, psi, k, j)?;
        // (xi, -x): position xi on the dual grid, frequency -x on its dual (the base grid)
        let rhs = Complex64::from_polar(1.0, -2.0 * PI * x * xi) * stft_at(&fh, &ph, j, g.reflect_index(k))?;
        worst = worst.max((lhs - rhs).norm());
        pts.push((x, xi));
    }
    Ok(FundamentalReport { points: pts, max_abs_discrepancy: worst })
}

/// `count` seeded node pairs from the central half of the grid and its dual.
pub fn sample_points(grid: &Grid, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.len();
    (0..count).map(|_| (rng.gen_range(n / 4..3 * n / 4), rng.gen_range(n / 4..3 * n / 4))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingResult {
    pub value: Complex64,
    pub warnings: Vec<Warning>,
}

/// (gamma, psi)^{-1} sum_{k,j} V_psi P(x_k, xi_j) V_w phi(xi_j, x_k) e^{2 pi i x_k xi_j} dx dxi with
/// w = F^{-1}(conj gamma). P lives on the base grid, phi on its dual.
pub fn quantization_pairing(
    p: &GridFunction,
    phi: &GridFunction,
    psi: &GridFunction,
    gamma: &GridFunction,
) -> Result<PairingResult> {
    same_grid(p, psi)?;
    same_grid(p, gamma)?;
    let g = *p.grid();
    if *phi.grid() != g.dual() {
        return Err(Error::GridMismatch("phi must be sampled on the dual grid".into()));
    }
    let overlap = gamma.inner(psi)?;
    if overlap.norm() <= MIN_WINDOW_OVERLAP {
        return Err(Error::NearOrthogonal(overlap.norm()));
    }
    let w = inverse_ft(&gamma.conj());
    let a = stft(p, psi)?;
    let b = stft(phi, &w)?;
    let n = g.len();
    let dual = g.dual();
    let mut total = Complex64::new(0.0, 0.0);
    let mut row_mass = vec![0.0f64; n];
    for k in 0..n {
        let x = g.x(k);
        for j in 0..n {
            let term = a.at(k, j) * b.at(j, k) * Complex64::from_polar(1.0, 2.0 * PI * x * dual.x(j));
            row_mass[k] += term.norm();
            total += term;
        }
    }
    let cell = g.dx() * dual.dx();
    let mut warnings = Vec::new();
    let peak = row_mass.iter().cloned().fold(0.0, f64::max);
    let edge = row_mass[0].max(row_mass[n - 1]).max(row_mass[1]);
    if peak > 0.0 && edge > 1e-8 * peak {
        warnings.push(Warning::WindowTruncation { relative_mass: edge / peak });
    }
    Ok(PairingResult { value: total * cell / overlap, warnings })
}

/// Normalized Gaussian window 2^{1/4} e^{-pi t^2}.
pub fn gaussian_window(grid: Grid) -> GridFunction {
    GridFunction::from_real_fn(grid, |t| 2f64.powf(0.25) * (-PI * t * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadConfig};

    fn grid() -> Grid {
        Grid::new(8.0, 256).unwrap()
    }

    #[test]
    fn origin_value_and_zero() {
        let g = grid();
        let psi = gaussian_window(g);
        let v = stft(&psi, &psi).unwrap();
        let k0 = g.len() / 2;
        assert!((v.at(k0, k0).re - psi.norm_l2().powi(2)).abs() < 1e-12);
        let z = stft(&GridFunction::zeros(g), &psi).unwrap();
        assert_eq!(z.norm_l2(), 0.0);
        assert!(matches!(stft(&psi, &GridFunction::zeros(g)), Err(Error::ZeroWindow)));
    }

    #[test]
    fn gaussian_magnitude_against_quadrature() {
        let g = grid();
        let psi = gaussian_window(g);
        let v = stft(&psi, &psi).unwrap();
        let cfg = QuadConfig { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 200 };
        let w = |t: f64| 2f64.powf(0.25) * (-PI * t * t).exp();
        for (k, j) in sample_points(&g, 10, 3) {
            let (x, xi) = (g.x(k), g.dual().x(j));
            let re = integrate(|t: f64| w(t) * w(t - x) * (2.0 * PI * xi * t).cos(), -8.0, 8.0, cfg).value;
            let im = integrate(|t: f64| -w(t) * w(t - x) * (2.0 * PI * xi * t).sin(), -8.0, 8.0, cfg).value;
            let q = Complex64::new(re, im);
            assert!((v.at(k, j) - q).norm() < 1e-10);
            assert!((q.norm() - (-PI * (x * x + xi * xi) / 2.0).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn plancherel_and_reconstruction() {
        let g = grid();
        let psi = gaussian_window(g);
        let f = GridFunction::from_real_fn(g, |t| {
            let h4 = 4.0 * (2.0 * PI) * (2.0 * PI) * t.powi(4) - 12.0 * 2.0 * PI * t * t + 3.0;
            h4 * (-PI * t * t).exp()
        });
        let v = stft(&f, &psi).unwrap();
        assert!((v.norm_l2() / (f.norm_l2() * psi.norm_l2()) - 1.0).abs() < 1e-10);
        let rep = check_reconstruction(&f, &psi, &psi).unwrap();
        assert!(rep.rel_l2_error < 1e-10);
        let gamma = GridFunction::from_real_fn(g, |t| (-2.0 * t * t).exp() * (1.0 + t / 3.0));
        let rep = check_reconstruction(&f, &psi, &gamma).unwrap();
        assert!(rep.rel_l2_error < 1e-10);
    }

    #[test]
    fn orthogonal_windows_rejected() {
        let g = grid();
        let psi = gaussian_window(g);
        let odd = GridFunction::from_real_fn(g, |t| t * (-PI * t * t).exp());
        assert!(matches!(check_reconstruction(&psi, &psi, &odd), Err(Error::NearOrthogonal(_))));
    }

    #[test]
    fn adjoint_linearity() {
        let g = Grid::new(4.0, 64).unwrap();
        let psi = gaussian_window(g);
        let f1 = GridFunction::from_real_fn(g, |t| (-t * t).exp());
        let f2 = GridFunction::from_fn(g, |t| Complex64::new(t, 1.0) * (-t * t).exp());
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let (v1, v2) = (stft(&f1, &psi).unwrap(), stft(&f2, &psi).unwrap());
        let lhs = stft_adjoint(&v1.scale(a).add(&v2.scale(b)).unwrap(), &psi).unwrap();
        let rhs = stft_adjoint(&v1, &psi).unwrap().scale(a).add(&stft_adjoint(&v2, &psi).unwrap().scale(b)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm_sup() < 1e-12);
    }

    #[test]
    fn fundamental_identity() {
        let g = grid();
        let psi = gaussian_window(g);
        let f = GridFunction::from_real_fn(g, |t| (-PI * (t - 0.5) * (t - 0.5)).exp() * (1.0 + t));
        let rep = check_fundamental(&f, &psi, &sample_points(&g, 25, 11)).unwrap();
        assert!(rep.max_abs_discrepancy < 1e-7, "{rep:?}");
        let c = g.len() / 2;
        let r0 = check_fundamental(&f, &psi, &[(c, c)]).unwrap();
        assert!(r0.max_abs_discrepancy < 1e-13);
    }

    #[test]
    fn pairing_constant_symbol() {
        let g = grid();
        let psi = gaussian_window(g);
        let one = GridFunction::from_real_fn(g, |_| 1.0);
        let phi = GridFunction::from_real_fn(g.dual(), |t| (-PI * t * t).exp() * (1.0 + 0.3 * t));
        let r = quantization_pairing(&one, &phi, &psi, &psi).unwrap();
        assert!((r.value - 1.0).norm() < 1e-9, "{:?}", r.value);
    }

    #[test]
    fn pairing_quadratic_symbol() {
        let g = grid();
        let psi = gaussian_window(g);
        let p = GridFunction::from_real_fn(g, |u| u * u);
        let phi = GridFunction::from_real_fn(g.dual(), |t| (-PI * t * t).exp());
        let r = quantization_pairing(&p, &phi, &psi, &psi).unwrap();
        // ∫ u^2 e^{-pi u^2} du = -phi''(0) / (4 pi^2) = 1 / (2 pi)
        let d2 = crate::grid::spectral_derivative(&phi, 2);
        let want = -d2.at(g.len() / 2).re / (4.0 * PI * PI);
        assert!((want - 1.0 / (2.0 * PI)).abs() < 1e-10);
        assert!((r.value - want).norm() < 1e-8, "{:?}", r.value);
    }
}
