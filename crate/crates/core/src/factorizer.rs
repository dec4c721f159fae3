//! Convolution factorization f = psi * (g * f): psi = F(1/P_h) and g acts on the Fourier side
//! as multiplication by P_h. Also weight checks and class-membership sweeps for concrete inputs.

use crate::diag::Warning;
use crate::error::{Error, Result};
use crate::grid::{
    class_norm, class_norm_spectral, convolve, decay_warning, forward_ft, inverse_ft, Grid, GridFunction, NormKind,
    NormReport, WeightedNormSpec, SPECTRAL_FLOOR,
};
use crate::multiplier::EntireMultiplier;
use crate::regularize::RegularizedWeight;
use crate::weights::{check_m2, check_m2star, ConditionReport, WeightSequence};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Largest admissible log-magnitude of a Fourier-side product (e^709 is the f64 limit).
pub const LOG_BUDGET: f64 = 700.0;
/// psi must fall below this fraction of its sup on |x| >= L/2.
pub const PSI_DECAY_TOL: f64 = 1e-10;
/// Relative accuracy assumed for the sampled symbol 1/P_h (smoothing quadrature).
pub const SYMBOL_REL_ERR: f64 = 1e-13;
/// 1/P_h at the band edge above this fraction of its peak is reported as spectral truncation.
pub const SPECTRAL_EDGE_TOL: f64 = 1e-12;
/// Automatic h ladder: 2^H_LADDER_TOP down to 2^H_LADDER_BOTTOM.
pub const H_LADDER_TOP: i32 = 20;
pub const H_LADDER_BOTTOM: i32 = -8;
/// Range of p used for the (M.2) / (M.2)* preconditions.
pub const CONDITION_RANGE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HPolicy {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KitOptions {
    pub grid: Grid,
    pub h: HPolicy,
}

impl Default for KitOptions {
    fn default() -> Self {
        Self { grid: Grid::default(), h: HPolicy::Auto }
    }
}

/// One rung of the h search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HCandidate {
    pub h: f64,
    pub log_p_edge: f64,
    pub spectral_edge: f64,
    /// max |psi| on |x| >= L/2 relative to its sup; None when the full symbol was not evaluated.
    pub psi_boundary: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KitChecks {
    /// sup |F(psi) - 1/P_h| / sup |1/P_h|.
    pub symbol_roundtrip: f64,
    /// max |F(psi) P_h - 1| over nodes with 1/P_h >= 1e-6 of its peak.
    pub product_identity: f64,
    /// max |(1/P_h) P_h - 1| on the dual grid.
    pub parametrix_exactness: f64,
    /// max |Im psi| / sup |psi|.
    pub psi_imag: f64,
    /// max |psi(x) - psi(-x)| / sup |psi|.
    pub psi_odd_part: f64,
    /// |sum psi dx - 1/P_h(0)|.
    pub psi_integral_error: f64,
    pub psi_boundary: f64,
    /// max |psi| on |x| >= L/2 relative to sup |psi|.
    pub psi_outer_half: f64,
    pub spectral_edge: f64,
    /// Gaussian roundtrip errors with psi and with its reflection.
    pub orientation_direct: f64,
    pub orientation_reflected: f64,
}

#[derive(Debug, Clone)]
pub struct FactorizationKit {
    weight: WeightSequence,
    base: EntireMultiplier,
    multiplier: EntireMultiplier,
    grid: Grid,
    h: f64,
    big_h: f64,
    log_symbol: Vec<f64>,
    fourier_symbol: GridFunction,
    psi_hat: GridFunction,
    psi: GridFunction,
    checks: KitChecks,
    h_search: Vec<HCandidate>,
    warnings: Vec<Warning>,
}

fn symbol_logs(em: &EntireMultiplier, dual: &Grid) -> Result<Vec<f64>> {
    (0..dual.len()).map(|j| Ok(em.log_p(Complex64::new(dual.x(j), 0.0))?.re)).collect()
}

/// Symbol logs at `h` if they stay within the overflow budget.
fn fitting_logs(base: &EntireMultiplier, big_h: f64, dual: &Grid, h: f64) -> Option<Vec<f64>> {
    let em = base.scale_for_pipeline(h, big_h, 1).ok()?;
    let logs = symbol_logs(&em, dual).ok()?;
    logs.iter().all(|&l| l <= LOG_BUDGET).then_some(logs)
}

fn psi_from_logs(logs: &[f64], dual: Grid) -> Result<(GridFunction, GridFunction)> {
    let psi_hat = GridFunction::new(dual, logs.iter().map(|&l| Complex64::new((-l).exp(), 0.0)).collect())?;
    let psi = forward_ft(&psi_hat);
    Ok((psi_hat, psi))
}

fn edge_level(logs_at_zero: f64, log_edge: f64) -> f64 {
    (logs_at_zero - log_edge).exp()
}

fn outer_half_level(psi: &GridFunction) -> f64 {
    let g = psi.grid();
    let sup = psi.norm_sup();
    let outer = (0..g.len())
        .filter(|&k| g.x(k).abs() >= g.half_width() / 2.0)
        .map(|k| psi.at(k).norm())
        .fold(0.0, f64::max);
    if sup > 0.0 {
        outer / sup
    } else {
        0.0
    }
}

impl FactorizationKit {
    /// Checks (M.2) and (M.2)*, builds and calibrates the multiplier, fixes h and samples P_h.
    pub fn build(m: &WeightSequence, opts: KitOptions) -> Result<Self> {
        let range = CONDITION_RANGE.min(m.p_max().max(2));
        let m2 = check_m2(m, range);
        if !m2.holds {
            return Err(Error::InvalidParameter(format!("weight sequence fails (M.2) on p + q <= {range}")));
        }
        if !check_m2star(m, range).holds {
            return Err(Error::InvalidParameter(format!("weight sequence fails (M.2)* on p <= {range}")));
        }
        let big_h = m2.constant("H").unwrap_or(1.0).max(1.0);
        let rw = RegularizedWeight::build(m)?;
        let base = EntireMultiplier::build(rw)?;
        Self::from_multiplier(m.clone(), &base, big_h, opts)
    }

    /// Kit from an already calibrated base multiplier.
    pub fn from_multiplier(weight: WeightSequence, base: &EntireMultiplier, big_h: f64, opts: KitOptions) -> Result<Self> {
        let grid = opts.grid;
        let dual = grid.dual();
        let mut warnings = Vec::new();
        let (h, h_search, logs) = match opts.h {
            HPolicy::Fixed(h) if !(h > 0.0 && h.is_finite()) => {
                return Err(Error::InvalidParameter(format!("h must be positive, got {h}")));
            }
            HPolicy::Fixed(h) => match fitting_logs(base, big_h, &dual, h) {
                Some(logs) => (h, Vec::new(), logs),
                None => {
                    let mut smaller = h;
                    let mut suggested_h = None;
                    for _ in 0..60 {
                        smaller /= 2.0;
                        if fitting_logs(base, big_h, &dual, smaller).is_some() {
                            suggested_h = Some(smaller);
                            break;
                        }
                    }
                    return Err(Error::Overflow {
                        message: format!("log P_h exceeds {LOG_BUDGET} on the dual grid at h = {h}"),
                        suggested_h,
                    });
                }
            },
            HPolicy::Auto => search_h(base, big_h, &dual, &mut warnings)?,
        };
        let multiplier = base.scale_for_pipeline(h, big_h, 1)?;
        let log_max = logs.iter().cloned().fold(f64::MIN, f64::max);
        if log_max > LOG_BUDGET {
            return Err(Error::Overflow {
                message: format!("log P_h reaches {log_max:.1} on the dual grid (budget {LOG_BUDGET})"),
                suggested_h: Some(h / 2.0),
            });
        }
        let (psi_hat, psi) = psi_from_logs(&logs, dual)?;
        let fourier_symbol = GridFunction::new(dual, logs.iter().map(|&l| Complex64::new(l.exp(), 0.0)).collect())?;

        let peak = psi_hat.norm_sup();
        let back = forward_ft(&psi);
        let symbol_roundtrip = back.sub(&psi_hat)?.norm_sup() / peak;
        let mut product_identity = 0.0f64;
        let mut parametrix_exactness = 0.0f64;
        for j in 0..dual.len() {
            let p = fourier_symbol.at(j);
            parametrix_exactness = parametrix_exactness.max((psi_hat.at(j) * p - 1.0).norm());
            if psi_hat.at(j).norm() >= 1e-6 * peak {
                product_identity = product_identity.max((back.at(j) * p - 1.0).norm());
            }
        }
        let sup = psi.norm_sup();
        let psi_imag = psi.samples().iter().map(|v| v.im.abs()).fold(0.0, f64::max) / sup;
        let psi_odd_part = psi.sub(&psi.reflect())?.norm_sup() / sup;
        let psi_integral_error = (psi.integral() - psi_hat.at(dual.len() / 2)).norm();
        if psi_imag > 1e-10 || psi_odd_part > 1e-10 {
            warnings.push(Warning::Precision {
                detail: format!("psi not real and even (imag {psi_imag:e}, odd part {psi_odd_part:e})"),
            });
        }
        let psi_boundary = psi.boundary_level();
        let psi_outer_half = outer_half_level(&psi);
        let spectral_edge = edge_level(logs[dual.len() / 2], logs[0].max(logs[dual.len() - 1]));
        if spectral_edge > SPECTRAL_EDGE_TOL {
            warnings.push(Warning::SpectralTruncation { relative_edge: spectral_edge });
        }
        if psi_outer_half > PSI_DECAY_TOL {
            warnings.push(Warning::BoundaryDecay { relative_mass: psi_outer_half });
        }

        let mut kit = Self {
            weight,
            base: base.clone(),
            multiplier,
            grid,
            h,
            big_h,
            log_symbol: logs,
            fourier_symbol,
            psi_hat,
            psi,
            checks: KitChecks {
                symbol_roundtrip,
                product_identity,
                parametrix_exactness,
                psi_imag,
                psi_odd_part,
                psi_integral_error,
                psi_boundary,
                psi_outer_half,
                spectral_edge,
                orientation_direct: 0.0,
                orientation_reflected: 0.0,
            },
            h_search,
            warnings,
        };
        let probe = GridFunction::from_real_fn(grid, |x| (-PI * x * x).exp());
        let (u, _) = kit.factorize(&probe)?;
        kit.checks.orientation_direct = convolve(&kit.psi, &u)?.rel_l2_error(&probe)?;
        kit.checks.orientation_reflected = convolve(&kit.psi.reflect(), &u)?.rel_l2_error(&probe)?;
        Ok(kit)
    }

    pub fn weight(&self) -> &WeightSequence {
        &self.weight
    }

    pub fn multiplier(&self) -> &EntireMultiplier {
        &self.multiplier
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn big_h(&self) -> f64 {
        self.big_h
    }

    /// Lower-bound rate of P_h: delta times the argument scale.
    pub fn delta_h(&self) -> f64 {
        self.multiplier.delta() * self.multiplier.scale()
    }

    pub fn log_symbol(&self) -> &[f64] {
        &self.log_symbol
    }

    pub fn fourier_symbol(&self) -> &GridFunction {
        &self.fourier_symbol
    }

    /// 1/P_h on the dual grid (the exact spectrum of psi).
    pub fn psi_hat(&self) -> &GridFunction {
        &self.psi_hat
    }

    pub fn psi(&self) -> &GridFunction {
        &self.psi
    }

    pub fn checks(&self) -> &KitChecks {
        &self.checks
    }

    pub fn h_search(&self) -> &[HCandidate] {
        &self.h_search
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// u = F^{-1}(P_h F f) and the roundtrip psi * u against f.
    pub fn factorize(&self, f: &GridFunction) -> Result<(GridFunction, FactorizationReport)> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "input grid (L={}, n={}) differs from kit grid (L={}, n={})",
                f.grid().half_width(),
                f.grid().len(),
                self.grid.half_width(),
                self.grid.len()
            )));
        }
        let mut warnings: Vec<Warning> = decay_warning(f).into_iter().collect();
        let mut fh = forward_ft(f);
        let peak = fh.norm_sup();
        let mut worst = (f64::NEG_INFINITY, 0usize);
        let mut samples = fh.samples().to_vec();
        for (j, v) in samples.iter_mut().enumerate() {
            if v.norm() < SPECTRAL_FLOOR * peak || *v == Complex64::new(0.0, 0.0) {
                *v = Complex64::new(0.0, 0.0);
                continue;
            }
            let l = v.norm().ln() + self.log_symbol[j];
            if l > worst.0 {
                worst = (l, j);
            }
        }
        fh = GridFunction::new(*fh.grid(), samples)?;
        if worst.0 > LOG_BUDGET {
            return Err(Error::Overflow {
                message: format!(
                    "log |P_h f^| reaches {:.1} at xi = {} (budget {LOG_BUDGET})",
                    worst.0,
                    fh.grid().x(worst.1)
                ),
                suggested_h: self.suggest_h(fh.at(worst.1).norm().ln(), fh.grid().x(worst.1)),
            });
        }
        let uh = fh.mul(&self.fourier_symbol)?;
        let u = inverse_ft(&uh);
        let fourier_roundtrip = uh.mul(&self.psi_hat)?.rel_sup_error(&fh)?;
        let rec = convolve(&self.psi, &u)?;
        let roundtrip_l2 = rec.rel_l2_error(f)?;
        let roundtrip_sup = rec.rel_sup_error(f)?;
        if let Some(w) = decay_warning(&u) {
            warnings.push(w);
        }
        Ok((
            u,
            FactorizationReport {
                roundtrip_l2,
                roundtrip_sup,
                fourier_roundtrip,
                max_log_product: if worst.0.is_finite() { worst.0 } else { f64::NEG_INFINITY },
                warnings,
            },
        ))
    }

    fn suggest_h(&self, log_f: f64, xi: f64) -> Option<f64> {
        let mut h = self.h;
        for _ in 0..40 {
            h /= 2.0;
            let em = self.multiplier_at(h).ok()?;
            let l = em.log_p(Complex64::new(xi, 0.0)).ok()?.re;
            if log_f + l <= LOG_BUDGET {
                return Some(h);
            }
        }
        None
    }

    fn multiplier_at(&self, h: f64) -> Result<EntireMultiplier> {
        self.base.scale_for_pipeline(h, self.big_h, 1)
    }

    /// One psi for every member of a family.
    pub fn factorize_bounded_family(
        &self,
        family: &[GridFunction],
        q: &FamilyNormOptions,
    ) -> Result<(Vec<GridFunction>, FamilyReport)> {
        let mut us = Vec::with_capacity(family.len());
        let mut members = Vec::with_capacity(family.len());
        let mut u_q = Vec::with_capacity(family.len());
        let mut f_q = Vec::with_capacity(family.len());
        let spec = WeightedNormSpec::new(self.weight.clone(), q.h, 0.0, q.alpha_max).with_kappa(q.kappa);
        for f in family {
            let (u, rep) = self.factorize(f)?;
            u_q.push(class_norm(&u, &spec, NormKind::Q)?.log_value);
            f_q.push(class_norm(f, &spec, NormKind::Q)?.log_value);
            us.push(u);
            members.push(rep);
        }
        let max_roundtrip_l2 = members.iter().map(|r| r.roundtrip_l2).fold(0.0, f64::max);
        let uniform_log_bound = u_q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok((
            us,
            FamilyReport { members, max_roundtrip_l2, u_log_q_norms: u_q, f_log_q_norms: f_q, uniform_log_bound, q: *q },
        ))
    }

    /// K-norms of psi from its exact spectrum, for each n and h'.
    pub fn verify_psi_class(&self, n_list: &[u32], h_candidates: &[f64], alpha_max: u32) -> Result<PsiClassReport> {
        let mut rows = Vec::new();
        for &hp in h_candidates {
            for &n in n_list {
                let spec = WeightedNormSpec::new(self.weight.clone(), hp, n as f64, alpha_max);
                let r = class_norm_spectral(&self.psi_hat, &spec, NormKind::K, SYMBOL_REL_ERR)?;
                rows.push(PsiClassRow::from_report(n, hp, &r));
            }
        }
        let h_witness = h_candidates
            .iter()
            .copied()
            .find(|&hp| rows.iter().filter(|r| r.h == hp).all(|r| r.clean));
        let tails = n_list.iter().map(|&n| self.tail_scan(n)).collect();
        Ok(PsiClassReport {
            rows,
            tails,
            member: h_witness.is_some(),
            h_witness,
            note: "finite weighted sups at the tested (n, h') on a truncated grid; not a proof of membership".into(),
        })
    }

    /// Scans n|x| + log|psi(x)| outward on both half-lines up to the roundoff level.
    pub fn tail_scan(&self, n: u32) -> TailScan {
        let g = self.grid;
        let noise = (64.0 * f64::EPSILON + SYMBOL_REL_ERR) * self.psi_hat.samples().iter().map(|v| v.norm()).sum::<f64>() * g.dual().dx();
        let c = g.len() / 2;
        let side = |dir: isize| -> (Option<f64>, f64) {
            let mut vals = Vec::new();
            let mut k = c as isize;
            while k >= 0 && (k as usize) < g.len() {
                let a = self.psi.at(k as usize).norm();
                if a <= 10.0 * noise {
                    break;
                }
                vals.push((g.x(k as usize).abs(), n as f64 * g.x(k as usize).abs() + a.ln()));
                k += dir;
            }
            let x_end = vals.last().map(|v| v.0).unwrap_or(0.0);
            let mut start = vals.len();
            while start > 0 && (start == vals.len() || vals[start - 1].1 >= vals[start].1) {
                start -= 1;
            }
            let x0 = (vals.len() >= 2 && start + 1 < vals.len()).then(|| vals[start].0);
            (x0, x_end)
        };
        let (r0, r_end) = side(1);
        let (l0, l_end) = side(-1);
        let x0 = match (r0, l0) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        let x_end = r_end.min(l_end);
        let span = x0.map(|x| ((x_end - x) / g.dx()).round() as usize).unwrap_or(0);
        TailScan { n, x0, x_end, decreasing_points: span, decreasing: x0.is_some() && span >= 8 }
    }
}

fn search_h(base: &EntireMultiplier, big_h: f64, dual: &Grid, warnings: &mut Vec<Warning>) -> Result<(f64, Vec<HCandidate>, Vec<f64>)> {
    let edge = Complex64::new(dual.x(0), 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut cands = Vec::new();
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for e in (H_LADDER_BOTTOM..=H_LADDER_TOP).rev() {
        let h = 2f64.powi(e);
        let em = base.scale_for_pipeline(h, big_h, 1)?;
        let log_edge = em.log_p(edge)?.re;
        let spectral_edge = edge_level(em.log_p(zero)?.re, log_edge);
        let mut cand = HCandidate { h, log_p_edge: log_edge, spectral_edge, psi_boundary: None, accepted: false };
        if log_edge > LOG_BUDGET || spectral_edge > 1e-3 {
            cands.push(cand);
            continue;
        }
        let logs = symbol_logs(&em, dual)?;
        let (_, psi) = psi_from_logs(&logs, *dual)?;
        let b = outer_half_level(&psi);
        cand.psi_boundary = Some(b);
        let score = b.max(spectral_edge);
        if b <= PSI_DECAY_TOL && spectral_edge <= SPECTRAL_EDGE_TOL {
            cand.accepted = true;
            cands.push(cand);
            return Ok((h, cands, logs));
        }
        cands.push(cand);
        if best.as_ref().map(|(_, s, _)| score < *s).unwrap_or(true) {
            best = Some((h, score, logs));
        }
    }
    match best {
        Some((h, score, logs)) => {
            warnings.push(Warning::Precision {
                detail: format!("no h on the ladder resolves psi on this grid; using h = {h} (residual level {score:e})"),
            });
            Ok((h, cands, logs))
        }
        None => Err(Error::Overflow {
            message: "every h on the ladder overflows or leaves 1/P_h unresolved on this grid".into(),
            suggested_h: None,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub roundtrip_l2: f64,
    pub roundtrip_sup: f64,
    /// sup |P_h F f (1/P_h) - F f| / sup |F f|, never leaving the Fourier side.
    pub fourier_roundtrip: f64,
    pub max_log_product: f64,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyNormOptions {
    pub h: f64,
    pub kappa: f64,
    pub alpha_max: u32,
}

impl Default for FamilyNormOptions {
    fn default() -> Self {
        Self { h: 0.5, kappa: 1.0, alpha_max: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub members: Vec<FactorizationReport>,
    pub max_roundtrip_l2: f64,
    /// log of the Q-seminorm h^a |u^(a)(x)| e^{-kappa|x|} / M_a per member.
    pub u_log_q_norms: Vec<f64>,
    pub f_log_q_norms: Vec<f64>,
    pub uniform_log_bound: f64,
    pub q: FamilyNormOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiClassRow {
    pub n: u32,
    pub h: f64,
    pub log_value: f64,
    pub alpha: u32,
    pub x: f64,
    pub clean: bool,
}

impl PsiClassRow {
    fn from_report(n: u32, h: f64, r: &NormReport) -> Self {
        Self { n, h, log_value: r.log_value, alpha: r.alpha, x: r.x, clean: r.is_clean() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailScan {
    pub n: u32,
    /// n|x| + log|psi(x)| is non-increasing on [x0, x_end] on both half-lines.
    pub x0: Option<f64>,
    /// Where |psi| reaches the roundoff level.
    pub x_end: f64,
    pub decreasing_points: usize,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiClassReport {
    pub rows: Vec<PsiClassRow>,
    pub tails: Vec<TailScan>,
    pub member: bool,
    pub h_witness: Option<f64>,
    pub note: String,
}

/// Report in the layout written by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KitReport {
    pub schema_version: u32,
    pub roundtrip_l2: f64,
    pub roundtrip_sup: f64,
    pub h: f64,
    pub delta_h: f64,
    pub big_h: f64,
    pub k: f64,
    pub grid: BTreeMap<String, f64>,
    pub psi_class: BTreeMap<String, f64>,
    pub checks: KitChecks,
    pub h_search: Vec<HCandidate>,
    pub warnings: Vec<Warning>,
    pub note: String,
}

impl FactorizationKit {
    pub fn report(&self, run: &FactorizationReport, psi_class: &PsiClassReport) -> KitReport {
        let mut grid = BTreeMap::new();
        grid.insert("L".to_string(), self.grid.half_width());
        grid.insert("n".to_string(), self.grid.len() as f64);
        let mut pc = BTreeMap::new();
        if let Some(hw) = psi_class.h_witness {
            for r in psi_class.rows.iter().filter(|r| r.h == hw) {
                pc.insert(r.n.to_string(), r.log_value.exp());
            }
        } else if let Some(h0) = psi_class.rows.first().map(|r| r.h) {
            for r in psi_class.rows.iter().filter(|r| r.h == h0) {
                pc.insert(r.n.to_string(), r.log_value.exp());
            }
        }
        let mut warnings = self.warnings.clone();
        warnings.extend(run.warnings.iter().cloned());
        KitReport {
            schema_version: 1,
            roundtrip_l2: run.roundtrip_l2,
            roundtrip_sup: run.roundtrip_sup,
            h: self.h,
            delta_h: self.delta_h(),
            big_h: self.big_h,
            k: self.multiplier.k(),
            grid,
            psi_class: pc,
            checks: self.checks,
            h_search: self.h_search.clone(),
            warnings,
            note: psi_class.note.clone(),
        }
    }
}

/// Log C(R) must not grow by more than this when the sampled range doubles.
pub const STABILITY_TOL: f64 = 0.25;

fn symmetric_samples(range: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| -range + 2.0 * range * i as f64 / (count - 1) as f64).collect()
}

/// Fits w(x + y) <= C w(x) e^{nu_A(kappa |y|)} over sampled pairs in [-R, R]^2 for each kappa;
/// a kappa holds when log C over [-R, R]^2 exceeds log C over [-R/2, R/2]^2 by at most STABILITY_TOL.
pub fn check_tib_weight(log_w: impl Fn(f64) -> f64, a: &WeightSequence, range: f64, kappa_grid: &[f64]) -> ConditionReport {
    let xs = symmetric_samples(range, 201);
    let lw: Vec<f64> = xs.iter().map(|&x| log_w(x)).collect();
    let mut best: Option<(f64, f64)> = None;
    let mut worst_pair = (0usize, 0usize);
    let mut worst_growth = f64::NEG_INFINITY;
    let mut per_kappa = Vec::new();
    for &kappa in kappa_grid {
        let nu_y: Vec<f64> = xs.iter().map(|&y| a.nu(kappa * y.abs())).collect();
        let (mut full, mut half) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut arg = (0, 0);
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in xs.iter().enumerate() {
                let v = log_w(x + y) - lw[i] - nu_y[j];
                if v > full {
                    full = v;
                    arg = (i, j);
                }
                if x.abs() <= range / 2.0 && y.abs() <= range / 2.0 && v > half {
                    half = v;
                }
            }
        }
        let growth = full - half;
        per_kappa.push((kappa, full, growth));
        if growth <= STABILITY_TOL {
            if best.is_none() {
                best = Some((kappa, full));
            }
        } else if growth > worst_growth {
            worst_growth = growth;
            worst_pair = arg;
        }
    }
    let mut rep = ConditionReport::new(best.is_some(), xs.len());
    for (kappa, full, growth) in &per_kappa {
        rep = rep.with(&format!("log_C[kappa={kappa}]"), *full).with(&format!("growth[kappa={kappa}]"), *growth);
    }
    match best {
        Some((kappa, lc)) => rep.with("kappa", kappa).with("C", lc.exp()).with("log_C", lc),
        None => {
            rep.first_violation = Some(worst_pair);
            rep.with("violation_x", xs[worst_pair.0]).with("violation_y", xs[worst_pair.1])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SystemKind {
    Increasing,
    Decreasing,
}

/// Positive weights tabulated in log form on a shared symmetric grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSystem {
    kind: SystemKind,
    xs: Vec<f64>,
    log_members: Vec<Vec<f64>>,
}

impl WeightSystem {
    pub fn new(kind: SystemKind, xs: Vec<f64>, log_members: Vec<Vec<f64>>) -> Result<Self> {
        if log_members.is_empty() || xs.len() < 2 {
            return Err(Error::InvalidParameter("weight system needs members and at least two nodes".into()));
        }
        if log_members.iter().any(|m| m.len() != xs.len() || m.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidParameter("members must be finite and tabulated on the shared grid".into()));
        }
        for (i, pair) in log_members.windows(2).enumerate() {
            let ok = pair[0].iter().zip(&pair[1]).all(|(a, b)| match kind {
                SystemKind::Increasing => *b >= *a - 1e-12 * (1.0 + a.abs()),
                SystemKind::Decreasing => *b <= *a + 1e-12 * (1.0 + a.abs()),
            });
            if !ok {
                return Err(Error::InvalidParameter(format!("members {i} and {} are not ordered pointwise", i + 1)));
            }
        }
        Ok(Self { kind, xs, log_members })
    }

    pub fn from_fns(kind: SystemKind, range: f64, count: usize, fns: &[&dyn Fn(f64) -> f64]) -> Result<Self> {
        let xs = symmetric_samples(range, count.max(2));
        let members = fns.iter().map(|f| xs.iter().map(|&x| f(x)).collect()).collect();
        Self::new(kind, xs, members)
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.log_members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_members.is_empty()
    }

    /// (sup over all nodes, sup over |x| <= R/2) of a pointwise log expression.
    fn sup_pair(&self, f: impl Fn(usize) -> f64) -> (f64, f64) {
        let r = self.xs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut full = f64::NEG_INFINITY;
        let mut half = f64::NEG_INFINITY;
        for (i, x) in self.xs.iter().enumerate() {
            let v = f(i);
            full = full.max(v);
            if x.abs() <= r / 2.0 {
                half = half.max(v);
            }
        }
        (full, half)
    }
}

pub const THETA_GRID: [f64; 19] =
    [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

/// Increasing: some n with, for every tested m >= n, a k >= m and C with w_m^2 <= C w_n w_k.
/// Decreasing: for every tested n some m >= n with, for all k >= m, a theta and C with
/// v_m <= C v_n^{1-theta} v_k^theta. Only the first half of the members is tested for m (resp. n)
/// so that k has room; C counts as found when it is stable under halving the range.
pub fn check_weight_system_regularity(ws: &WeightSystem) -> ConditionReport {
    let len = ws.len();
    let tested = len.div_ceil(2);
    let lm = &ws.log_members;
    let stable = |f: &dyn Fn(usize) -> f64| -> Option<f64> {
        let (full, half) = ws.sup_pair(f);
        (full - half <= STABILITY_TOL).then_some(full)
    };
    match ws.kind {
        SystemKind::Increasing => {
            for n in 0..tested {
                let mut rep = ConditionReport::new(true, len).with("n", n as f64);
                let mut all = true;
                for m in n..tested {
                    let found = (m..len).find_map(|k| {
                        stable(&|i| 2.0 * lm[m][i] - lm[n][i] - lm[k][i]).map(|c| (k, c))
                    });
                    match found {
                        Some((k, c)) => {
                            rep = rep.with(&format!("k[m={m}]"), k as f64).with(&format!("log_C[m={m}]"), c);
                        }
                        None => {
                            all = false;
                            break;
                        }
                    }
                }
                if all {
                    return rep;
                }
            }
            let mut rep = ConditionReport::new(false, len);
            rep.first_violation = Some((0, 0));
            rep
        }
        SystemKind::Decreasing => {
            let mut rep = ConditionReport::new(true, len);
            for n in 0..tested {
                let found = (n..len).find_map(|m| {
                    let mut worst_theta = Vec::new();
                    for k in m..len {
                        let t = THETA_GRID.iter().find_map(|&th| {
                            stable(&|i| lm[m][i] - (1.0 - th) * lm[n][i] - th * lm[k][i]).map(|c| (th, c))
                        });
                        match t {
                            Some(v) => worst_theta.push(v),
                            None => return None,
                        }
                    }
                    Some((m, worst_theta))
                });
                match found {
                    Some((m, thetas)) => {
                        rep = rep.with(&format!("m[n={n}]"), m as f64);
                        let lc = thetas.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
                        let th = thetas.iter().map(|t| t.0).fold(1.0, f64::min);
                        rep = rep.with(&format!("theta_min[n={n}]"), th).with(&format!("log_C[n={n}]"), lc);
                    }
                    None => {
                        rep.holds = false;
                        rep.first_violation = Some((n, n));
                        return rep;
                    }
                }
            }
            rep
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GsCell {
    pub h: f64,
    pub k: f64,
    pub log_value: f64,
    pub clean: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GsMembership {
    pub cells: Vec<GsCell>,
    /// Clean for some tested h = k.
    pub roumieu: bool,
    /// Clean for every tested h = k.
    pub beurling: bool,
    pub warnings: Vec<Warning>,
}

pub fn gelfand_shilov_membership(
    f: &GridFunction,
    m: &WeightSequence,
    a: &WeightSequence,
    h_grid: &[f64],
    k_grid: &[f64],
    alpha_max: u32,
) -> Result<GsMembership> {
    let mut cells = Vec::new();
    let mut warnings = Vec::new();
    for &h in h_grid {
        for &k in k_grid {
            let spec = WeightedNormSpec::new(m.clone(), h, k, alpha_max).with_a(a.clone());
            let r = class_norm(f, &spec, NormKind::GS)?;
            warnings.extend(r.warnings.iter().cloned());
            cells.push(GsCell { h, k, log_value: r.log_value, clean: r.is_clean() });
        }
    }
    let diag: Vec<&GsCell> = cells.iter().filter(|c| c.h == c.k).collect();
    let roumieu = diag.iter().any(|c| c.clean);
    let beurling = !diag.is_empty() && diag.iter().all(|c| c.clean);
    warnings.dedup();
    Ok(GsMembership { cells, roumieu, beurling, warnings })
}

/// Gaussians e^{-pi (x - a)^2}.
pub fn translated_gaussians(grid: Grid, shifts: &[f64]) -> Vec<GridFunction> {
    shifts.iter().map(|&a| GridFunction::from_real_fn(grid, move |x| (-PI * (x - a) * (x - a)).exp())).collect()
}

/// Gaussians e^{-pi s x^2}.
pub fn scaled_gaussians(grid: Grid, scales: &[f64]) -> Vec<GridFunction> {
    scales.iter().map(|&s| GridFunction::from_real_fn(grid, move |x| (-PI * s * x * x).exp())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn kit1() -> &'static FactorizationKit {
        static K: OnceLock<FactorizationKit> = OnceLock::new();
        K.get_or_init(|| FactorizationKit::build(&WeightSequence::gevrey(1.0, 400).unwrap(), KitOptions::default()).unwrap())
    }

    #[test]
    fn kit_identities() {
        let kit = kit1();
        let c = kit.checks();
        assert!(c.symbol_roundtrip < 1e-8, "{c:?}");
        assert!(c.product_identity < 1e-8, "{c:?}");
        assert!(c.parametrix_exactness < 1e-12, "{c:?}");
        assert!(c.psi_imag < 1e-10 && c.psi_odd_part < 1e-10, "{c:?}");
        assert!(c.psi_integral_error < 1e-12);
        assert!((c.orientation_direct - c.orientation_reflected).abs() < 1e-12);
        assert!(kit.fourier_symbol().samples().iter().all(|v| v.norm() > 0.0 && v.re.is_finite()));
        assert!((kit.delta_h() - kit.multiplier().scale() / kit.multiplier().k().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn auto_h_accepts_a_rung() {
        let kit = kit1();
        assert!(kit.h_search().iter().any(|c| c.accepted), "{:?}", kit.h_search());
        assert!(kit.checks().psi_outer_half <= PSI_DECAY_TOL);
    }

    #[test]
    fn gaussian_roundtrip_and_zero() {
        let kit = kit1();
        let f = GridFunction::from_real_fn(*kit.grid(), |x| (-PI * x * x).exp());
        let (_, rep) = kit.factorize(&f).unwrap();
        assert!(rep.roundtrip_l2 <= 1e-6, "{rep:?}");
        assert!(rep.fourier_roundtrip <= 1e-12);
        let z = GridFunction::zeros(*kit.grid());
        let (u, rep) = kit.factorize(&z).unwrap();
        assert_eq!(u.norm_sup(), 0.0);
        assert_eq!(rep.roundtrip_l2, 0.0);
    }

    #[test]
    fn family_shares_psi() {
        let kit = kit1();
        let fam = translated_gaussians(*kit.grid(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let (us, rep) = kit.factorize_bounded_family(&fam, &FamilyNormOptions::default()).unwrap();
        assert_eq!(us.len(), 5);
        assert!(rep.max_roundtrip_l2 <= 1e-6, "{rep:?}");
        assert!(rep.uniform_log_bound.is_finite());
        let single = kit.factorize_bounded_family(&fam[2..3], &FamilyNormOptions::default()).unwrap();
        assert_eq!(single.0[0], kit.factorize(&fam[2]).unwrap().0);
        let scaled = scaled_gaussians(*kit.grid(), &[1.0, 2.0, 4.0]);
        let (_, rep) = kit.factorize_bounded_family(&scaled, &FamilyNormOptions::default()).unwrap();
        assert!(rep.max_roundtrip_l2 <= 1e-6);
    }

    #[test]
    fn psi_class_rows() {
        let kit = kit1();
        let rep = kit.verify_psi_class(&[0, 1, 2, 3], &[1.0, 0.5, 0.25, 0.125], 8).unwrap();
        assert!(rep.member, "{rep:?}");
        assert!(rep.rows.iter().filter(|r| r.n == 0).all(|r| r.log_value.is_finite()));
        let row = rep.rows.iter().find(|r| r.n == 2 && r.h == 0.25).unwrap();
        assert!(row.log_value.is_finite());
        for t in &rep.tails[1..] {
            assert!(t.decreasing, "{t:?}");
        }
    }

    #[test]
    fn grid_mismatch() {
        let kit = kit1();
        let f = GridFunction::zeros(Grid::new(8.0, 256).unwrap());
        assert!(matches!(kit.factorize(&f), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn tib_weights() {
        let a = WeightSequence::gevrey(1.0, 400).unwrap();
        let kappas = [0.5, 1.0, 2.0, 4.0];
        let one = check_tib_weight(|_| 0.0, &a, 40.0, &kappas);
        assert!(one.holds);
        assert_eq!(one.constant("C"), Some(1.0));
        assert_eq!(one.constant("kappa"), Some(0.5));
        let ex = check_tib_weight(|x: f64| x.abs(), &a, 40.0, &kappas);
        assert!(ex.holds, "{ex:?}");
        assert_eq!(ex.constant("kappa"), Some(2.0));
        let sq = check_tib_weight(|x: f64| x * x, &a, 40.0, &kappas);
        assert!(!sq.holds);
        assert!(sq.first_violation.is_some());
    }

    #[test]
    fn weight_systems() {
        let a = WeightSequence::gevrey(1.0, 400).unwrap();
        let inc: Vec<Box<dyn Fn(f64) -> f64>> =
            (1..=8).map(|n| Box::new({ let a = a.clone(); move |x: f64| a.nu(n as f64 * x.abs()) }) as Box<dyn Fn(f64) -> f64>).collect();
        let refs: Vec<&dyn Fn(f64) -> f64> = inc.iter().map(|b| b.as_ref()).collect();
        let ws = WeightSystem::from_fns(SystemKind::Increasing, 50.0, 401, &refs).unwrap();
        let r = check_weight_system_regularity(&ws);
        assert!(r.holds, "{r:?}");

        let dec: Vec<Box<dyn Fn(f64) -> f64>> =
            (1..=8).map(|n| Box::new({ let a = a.clone(); move |x: f64| a.nu(x.abs() / n as f64) }) as Box<dyn Fn(f64) -> f64>).collect();
        let refs: Vec<&dyn Fn(f64) -> f64> = dec.iter().map(|b| b.as_ref()).collect();
        let vs = WeightSystem::from_fns(SystemKind::Decreasing, 50.0, 401, &refs).unwrap();
        let r = check_weight_system_regularity(&vs);
        assert!(r.holds, "{r:?}");
        assert!(r.constant("theta_min[n=0]").is_some());

        let single = WeightSystem::from_fns(SystemKind::Increasing, 10.0, 21, &[&|x: f64| x.abs()]).unwrap();
        assert!(check_weight_system_regularity(&single).holds);
        assert!(WeightSystem::from_fns(SystemKind::Increasing, 10.0, 21, &[&|x: f64| x.abs(), &|_| 0.0]).is_err());
    }

    #[test]
    fn gs_membership() {
        let g = Grid::default();
        let p = WeightSequence::gevrey(1.0, 60).unwrap();
        let f = GridFunction::from_real_fn(g, |x| (-PI * x * x).exp());
        let r = gelfand_shilov_membership(&f, &p, &p, &[0.25, 0.5, 1.0], &[0.25, 0.5, 1.0], 6).unwrap();
        assert!(r.roumieu && r.beurling, "{r:?}");
        let e = GridFunction::from_real_fn(g, |x| (-x.abs()).exp());
        let r = gelfand_shilov_membership(&e, &p, &p, &[1.0], &[4.0], 2).unwrap();
        assert!(!r.cells[0].clean);
        let z = GridFunction::zeros(g);
        let r = gelfand_shilov_membership(&z, &p, &p, &[1.0], &[1.0], 2).unwrap();
        assert_eq!(r.cells[0].log_value, f64::NEG_INFINITY);
    }
}
