use super::sequence::WeightSequence;
use crate::diag::Warning;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    /// Maximum of p log t - log M_p over the table.
    BruteForce,
    /// Sum of log(t / m_p) over the quotients below t, located by binary search.
    CrossingCount,
}

/// Value of nu_M(t) together with its maximizing index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuValue {
    pub value: f64,
    pub argmax: u64,
    /// The argmax sits at the end of the table and no generator was available.
    pub truncated: bool,
    /// The generator was used beyond the table.
    pub extended: bool,
}

impl NuValue {
    pub fn warning(&self, t: f64, p_max: usize) -> Option<Warning> {
        self.truncated.then_some(Warning::Truncation { t, p_max })
    }
}

/// Evaluator for nu_M(t) = sup_p (p log t - log M_p).
#[derive(Debug, Clone, Copy)]
pub struct AssociatedFunction<'a> {
    pub source: &'a WeightSequence,
    pub backend: Backend,
}

impl<'a> AssociatedFunction<'a> {
    pub fn new(source: &'a WeightSequence, backend: Backend) -> Self {
        Self { source, backend }
    }

    pub fn eval(&self, t: f64) -> NuValue {
        match self.backend {
            Backend::BruteForce => brute_force(self.source, t),
            Backend::CrossingCount => crossing_count(self.source, t),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).value
    }
}

const ZERO: NuValue = NuValue { value: 0.0, argmax: 0, truncated: false, extended: false };

fn brute_force(m: &WeightSequence, t: f64) -> NuValue {
    if t <= 0.0 {
        return ZERO;
    }
    let ln_t = t.ln();
    let mut best = 0.0f64;
    let mut arg = 0usize;
    for (p, lm) in m.log_values().iter().enumerate().skip(1) {
        let v = p as f64 * ln_t - lm;
        // ties go to the larger index, matching the crossing rule m_p <= t
        if v >= best - 1e-14 * (1.0 + best.abs()) && v > 0.0 {
            best = best.max(v);
            arg = p;
        }
    }
    NuValue {
        value: best,
        argmax: arg as u64,
        truncated: arg == m.p_max() && t > 1.0,
        extended: false,
    }
}

fn crossing_count(m: &WeightSequence, t: f64) -> NuValue {
    if t < 1.0 {
        return ZERO;
    }
    let q = m.quotients();
    let p_max = m.p_max();
    // quotients are non-decreasing, so {p >= 1 : m_p <= t} is an initial segment
    let p_star = q[1..].partition_point(|&mp| mp <= t);
    if p_star < p_max {
        return NuValue {
            value: p_star as f64 * t.ln() - m.log_m(p_star),
            argmax: p_star as u64,
            truncated: false,
            extended: false,
        };
    }
    match m.generator() {
        Some(g) => {
            let p = g.crossing(t).max(p_max as f64);
            let inside = p <= p_max as f64;
            let value = if inside {
                p * t.ln() - m.log_m(p as usize)
            } else {
                p * t.ln() - g.log_value(p)
            };
            NuValue { value: value.max(0.0), argmax: p as u64, truncated: false, extended: !inside }
        }
        None => NuValue {
            value: p_max as f64 * t.ln() - m.log_m(p_max),
            argmax: p_max as u64,
            truncated: true,
            extended: false,
        },
    }
}

impl WeightSequence {
    /// nu_M(t) via the crossing-count backend.
    pub fn nu(&self, t: f64) -> f64 {
        crossing_count(self, t).value
    }

    pub fn nu_full(&self, t: f64) -> NuValue {
        crossing_count(self, t)
    }

    /// Upper end of the range where nu_M is determined by the table alone.
    pub fn nu_table_limit(&self) -> f64 {
        match self.generator() {
            Some(_) => f64::INFINITY,
            None => self.quotients()[self.p_max()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both(m: &WeightSequence, t: f64) -> (NuValue, NuValue) {
        (
            AssociatedFunction::new(m, Backend::BruteForce).eval(t),
            AssociatedFunction::new(m, Backend::CrossingCount).eval(t),
        )
    }

    #[test]
    fn zero_below_one() {
        let m = WeightSequence::gevrey(1.0, 50).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let (a, b) = both(&m, t);
            assert_eq!(a.value, 0.0);
            assert_eq!(b.value, 0.0);
        }
    }

    #[test]
    fn factorial_at_e() {
        let m = WeightSequence::gevrey(1.0, 500).unwrap();
        let e = std::f64::consts::E;
        let (a, b) = both(&m, e);
        // oracle: max over p of p - ln p!
        let oracle = (0..=500u32)
            .map(|p| p as f64 - (1..=p).map(|k| (k as f64).ln()).sum::<f64>())
            .fold(f64::MIN, f64::max);
        assert!((a.value - oracle).abs() < 1e-12);
        assert!((a.value - 1.306_852_819_440_054_7).abs() < 1e-12);
        assert_eq!(a.argmax, 2);
        assert!((b.value - a.value).abs() < 1e-12);
    }

    #[test]
    fn gevrey_two_at_four() {
        let m = WeightSequence::gevrey(2.0, 500).unwrap();
        let (a, b) = both(&m, 4.0);
        assert!((a.value - 4f64.ln()).abs() < 1e-12);
        assert_eq!(a.argmax, 2);
        assert!((b.value - a.value).abs() < 1e-12);
    }

    #[test]
    fn truncation_flagged_without_generator() {
        let m = WeightSequence::from_table(vec![0.0, 0.0, 2f64.ln(), 6f64.ln()]).unwrap();
        let (a, b) = both(&m, 100.0);
        assert!(a.truncated && b.truncated);
        assert!(a.warning(100.0, 3).is_some());
        assert!(!both(&m, 2.5).1.truncated);
    }

    #[test]
    fn generator_extends_past_table() {
        let m = WeightSequence::gevrey(1.0, 20).unwrap();
        let big = WeightSequence::gevrey(1.0, 2000).unwrap();
        let v = m.nu_full(500.5);
        assert!(v.extended && !v.truncated);
        assert!((v.value - big.nu(500.5)).abs() < 1e-9 * v.value);
    }
}
