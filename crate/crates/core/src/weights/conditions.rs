use super::sequence::WeightSequence;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Outcome of a finite-range condition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub holds: bool,
    pub constants: BTreeMap<String, f64>,
    pub checked_range: usize,
    pub first_violation: Option<(usize, usize)>,
}

impl ConditionReport {
    pub fn new(holds: bool, checked_range: usize) -> Self {
        Self { holds, constants: BTreeMap::new(), checked_range, first_violation: None }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }
}

/// Caps for the constant searches.
#[derive(Debug, Clone, Copy)]
pub struct SearchCaps {
    /// Largest integer H (or L) tried.
    pub base_cap: u32,
    /// Largest admissible multiplicative constant.
    pub constant_cap: f64,
    /// Largest N tried for (M.2)*.
    pub n_cap: usize,
}

impl Default for SearchCaps {
    fn default() -> Self {
        Self { base_cap: 64, constant_cap: 1e6, n_cap: 16 }
    }
}

const LOG_SLACK: f64 = 1e-9;

/// D(s) = max_p (log M_s - log M_p - log M_{s-p}) and the attaining p, for s = 0..=range.
fn defect_table(m: &WeightSequence, range: usize) -> Vec<(f64, usize)> {
    let lm = m.log_values();
    (0..=range)
        .map(|s| {
            let mut best = (f64::MIN, 0);
            for p in 0..=s / 2 {
                let d = lm[s] - lm[p] - lm[s - p];
                if d > best.0 {
                    best = (d, p);
                }
            }
            best
        })
        .collect()
}

/// Searches integer bases b = 1..=cap for the smallest one with
/// sup_s (d(s) - s log b) attained in the first half of the range and below the constant cap.
fn base_search(d: &[(f64, usize)], caps: SearchCaps) -> (Option<(u32, f64, usize)>, usize) {
    let range = d.len() - 1;
    let log_cap = caps.constant_cap.ln();
    let mut last_arg = range;
    for b in 1..=caps.base_cap {
        let lb = (b as f64).ln();
        let mut best = 0.0;
        let mut arg = 0;
        for (s, &(v, _)) in d.iter().enumerate() {
            let x = v - s as f64 * lb;
            if x > best + LOG_SLACK {
                best = x;
                arg = s;
            }
        }
        last_arg = arg;
        if best <= log_cap && 2 * arg <= range {
            return (Some((b, best, arg)), arg);
        }
    }
    (None, last_arg)
}

/// (M.2): smallest integer H, then smallest C0, with M_{p+q} <= C0 H^{p+q} M_p M_q for p+q <= range.
pub fn check_m2(m: &WeightSequence, range: usize) -> ConditionReport {
    check_m2_with(m, range, SearchCaps::default())
}

pub fn check_m2_with(m: &WeightSequence, range: usize, caps: SearchCaps) -> ConditionReport {
    let range = range.min(m.p_max());
    let d = defect_table(m, range);
    match base_search(&d, caps) {
        (Some((h, log_c0, _)), _) => ConditionReport::new(true, range)
            .with("H", h as f64)
            .with("C0", log_c0.exp())
            .with("log_C0", log_c0),
        (None, arg) => {
            let mut r = ConditionReport::new(false, range).with("H_cap", caps.base_cap as f64);
            let p = d[arg].1;
            r.first_violation = Some((p, arg - p));
            r
        }
    }
}

/// (M.2)*: smallest N, then smallest p0, with 2 m_p <= m_{Np} for p0 <= p <= range.
///
/// Without a generator the range for a given N is cut to p_max / N.
pub fn check_m2star(m: &WeightSequence, range: usize) -> ConditionReport {
    check_m2star_with(m, range, SearchCaps::default())
}

pub fn check_m2star_with(m: &WeightSequence, range: usize, caps: SearchCaps) -> ConditionReport {
    let ln2 = std::f64::consts::LN_2;
    let mut last = None;
    for n in 2..=caps.n_cap {
        let r = if m.generator().is_some() { range } else { range.min(m.p_max() / n) };
        if r < 2 {
            break;
        }
        let mut last_bad = 0;
        for p in 1..=r {
            let (Some(a), Some(b)) = (m.quotient(p), m.quotient(n * p)) else { break };
            if ln2 + a.ln() > b.ln() + LOG_SLACK {
                last_bad = p;
            }
        }
        let p0 = last_bad + 1;
        if 2 * p0 <= r {
            return ConditionReport::new(true, r).with("N", n as f64).with("p0", p0 as f64);
        }
        last = Some((n, r, last_bad));
    }
    let mut rep = ConditionReport::new(false, last.map_or(0, |l| l.1)).with("N_cap", caps.n_cap as f64);
    if let Some((n, _, p)) = last {
        rep.first_violation = Some((p, n * p));
    }
    rep
}

/// 2 nu_M(t) <= nu_M(H t) + log C0 on the grid.
pub fn check_nu_m2_inequality(m: &WeightSequence, h: f64, c0: f64, t_grid: &[f64]) -> ConditionReport {
    let log_c0 = c0.ln();
    let mut worst = f64::MIN;
    let mut first = None;
    for (i, &t) in t_grid.iter().enumerate() {
        let lhs = m.nu_full(t);
        let rhs = m.nu(h * t) + log_c0;
        let slack = 2.0 * lhs.value - rhs;
        worst = worst.max(slack);
        if slack > LOG_SLACK * (1.0 + rhs.abs()) && first.is_none() {
            first = Some((i, lhs.argmax as usize));
        }
    }
    let mut r = ConditionReport::new(first.is_none(), t_grid.len())
        .with("H", h)
        .with("C0", c0)
        .with("max_violation", worst.max(0.0));
    r.first_violation = first;
    r
}

/// nu_M(2t) <= L nu_M(t) + log C: L is the largest ratio over the top decade of the grid,
/// C covers the remaining slack.
pub fn check_nu_doubling(m: &WeightSequence, t_grid: &[f64]) -> ConditionReport {
    check_nu_doubling_with(m, t_grid, 64.0)
}

pub fn check_nu_doubling_with(m: &WeightSequence, t_grid: &[f64], l_cap: f64) -> ConditionReport {
    let t_top = t_grid.iter().cloned().fold(0.0, f64::max);
    let vals: Vec<(f64, f64)> = t_grid.iter().map(|&t| (m.nu(t), m.nu(2.0 * t))).collect();
    let mut l = 1.0f64;
    for (&t, &(a, b)) in t_grid.iter().zip(&vals) {
        if t >= t_top / 10.0 && a > 0.0 {
            l = l.max(b / a);
        }
    }
    let mut log_c = 0.0f64;
    let mut arg = 0;
    for (i, &(a, b)) in vals.iter().enumerate() {
        let s = b - l * a;
        if s > log_c {
            log_c = s;
            arg = i;
        }
    }
    let holds = l.is_finite() && l <= l_cap && log_c.is_finite();
    let mut r = ConditionReport::new(holds, t_grid.len()).with("L", l).with("C", log_c.exp());
    if !holds {
        r.first_violation = Some((arg, 0));
    }
    r
}

/// M ⊂ N: smallest integer L, then C, with M_p <= C L^p N_p on the range, plus the
/// associated-function form nu_N(t) <= nu_M(L t) + log C on a log grid.
pub fn check_inclusion(m: &WeightSequence, n: &WeightSequence, range: usize) -> ConditionReport {
    check_inclusion_with(m, n, range, SearchCaps::default())
}

pub fn check_inclusion_with(
    m: &WeightSequence,
    n: &WeightSequence,
    range: usize,
    caps: SearchCaps,
) -> ConditionReport {
    let range = range.min(m.p_max()).min(n.p_max());
    let d: Vec<(f64, usize)> = (0..=range).map(|p| (m.log_m(p) - n.log_m(p), p)).collect();
    let Some((l, log_c, _)) = base_search(&d, caps).0 else {
        let growth = (d[range].0 - d[range / 2].0) / (range - range / 2).max(1) as f64;
        let mut r = ConditionReport::new(false, range)
            .with("L_cap", caps.base_cap as f64)
            .with("log_ratio_slope", growth);
        r.first_violation = Some((range, range));
        return r;
    };
    let l = l as f64;
    // nu-form on t where neither table is truncated
    let t_hi = (m.quotient(range).unwrap() / l).min(n.quotient(range).unwrap());
    let mut nu_ok = true;
    let mut worst = f64::MIN;
    if t_hi > 1.0 {
        for i in 0..=200 {
            let t = 10f64.powf(-2.0 + (t_hi.log10() + 2.0) * i as f64 / 200.0);
            let s = n.nu(t) - m.nu(l * t) - log_c;
            worst = worst.max(s);
            if s > LOG_SLACK * (1.0 + n.nu(t)) {
                nu_ok = false;
            }
        }
    }
    ConditionReport::new(nu_ok, range)
        .with("L", l)
        .with("C", log_c.exp())
        .with("nu_form_holds", if nu_ok { 1.0 } else { 0.0 })
        .with("nu_form_max_slack", worst.max(0.0))
}

/// m_p / log p over the tail window [sqrt(range), range]: holds when the ratio trends upward
/// and does not decrease anywhere on the window.
pub fn check_nontriviality(m: &WeightSequence, range: usize) -> ConditionReport {
    let range = range.min(m.p_max());
    let q = m.quotients();
    let ratio = |p: usize| q[p] / (p as f64).ln();
    let lo = ((range as f64).sqrt().ceil() as usize).max(2);
    let window: Vec<usize> = (lo..=range).collect();
    if window.len() < 3 {
        return ConditionReport::new(false, range);
    }
    let (mut min, mut argmin) = (f64::INFINITY, 0);
    let mut monotone = true;
    for (i, &p) in window.iter().enumerate() {
        let v = ratio(p);
        if v < min {
            min = v;
            argmin = p;
        }
        if i > 0 && v < ratio(window[i - 1]) * (1.0 - 1e-12) {
            monotone = false;
        }
    }
    let xs: Vec<f64> = window.iter().map(|&p| (p as f64).ln()).collect();
    let ys: Vec<f64> = window.iter().map(|&p| ratio(p)).collect();
    let slope = ls_slope(&xs, &ys);
    let (mut gmin, mut gargmin) = (f64::INFINITY, 0);
    for p in 2..=range {
        if ratio(p) < gmin {
            gmin = ratio(p);
            gargmin = p;
        }
    }
    let holds = slope > 0.0 && monotone;
    let mut r = ConditionReport::new(holds, range)
        .with("min_ratio", min)
        .with("argmin_p", argmin as f64)
        .with("trend_slope", slope)
        .with("global_argmin_p", gargmin as f64);
    if !holds {
        r.first_violation = Some((argmin, argmin));
    }
    r
}

/// Least-squares slope of y against x.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Log-spaced grid of `n` points on [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
