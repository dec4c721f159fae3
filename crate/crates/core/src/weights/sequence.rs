use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::path::Path;

/// Closed-form rule used to extend a sequence past its table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Generator {
    /// M_p = (p!)^sigma.
    Gevrey { sigma: f64 },
}

impl Generator {
    pub fn log_value(&self, p: f64) -> f64 {
        match *self {
            Generator::Gevrey { sigma } => sigma * ln_gamma(p + 1.0),
        }
    }

    pub fn quotient(&self, p: usize) -> f64 {
        match *self {
            Generator::Gevrey { sigma } => (p as f64).powf(sigma),
        }
    }

    /// Largest p with m_p <= t (t >= 1), as a float since it may exceed the integer range.
    pub fn crossing(&self, t: f64) -> f64 {
        match *self {
            Generator::Gevrey { sigma } => {
                let ln_t = t.ln();
                let mut p = (ln_t / sigma).exp().floor().max(1.0);
                if p < 2f64.powi(52) {
                    while sigma * (p + 1.0).ln() <= ln_t {
                        p += 1.0;
                    }
                    while p > 1.0 && sigma * p.ln() > ln_t {
                        p -= 1.0;
                    }
                }
                p
            }
        }
    }
}

/// A log-convex weight sequence M_0 = M_1 = 1 stored as a table of log M_p,
/// optionally backed by a generator for indices past the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSequence {
    log_values: Vec<f64>,
    quotients: Vec<f64>,
    generator: Option<Generator>,
}

fn convexity_tol(x: f64) -> f64 {
    1e-12 * x.abs().max(1.0)
}

impl WeightSequence {
    /// Gevrey sequence (p!)^sigma tabulated for p = 0..=p_max.
    pub fn gevrey(sigma: f64, p_max: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        if p_max < 2 {
            return Err(Error::InvalidParameter(format!("p_max must be at least 2, got {p_max}")));
        }
        let gen = Generator::Gevrey { sigma };
        let mut log_values = Vec::with_capacity(p_max + 1);
        let mut quotients = Vec::with_capacity(p_max + 1);
        let mut acc = 0.0;
        log_values.push(0.0);
        quotients.push(1.0);
        for p in 1..=p_max {
            acc += (p as f64).ln();
            log_values.push(sigma * acc);
            quotients.push(gen.quotient(p));
        }
        Ok(Self { log_values, quotients, generator: Some(gen) })
    }

    /// Validates a table of log M_p.
    pub fn from_table(log_values: Vec<f64>) -> Result<Self> {
        if log_values.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "table needs at least 3 entries, got {}",
                log_values.len()
            )));
        }
        if let Some(p) = log_values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite log value at p = {p}")));
        }
        for i in 0..2 {
            if log_values[i].abs() > 1e-12 {
                return Err(Error::Normalization { index: i, log_value: log_values[i] });
            }
        }
        for p in 1..log_values.len() - 1 {
            let lhs = log_values[p - 1] + log_values[p + 1];
            if lhs < 2.0 * log_values[p] - convexity_tol(log_values[p]) {
                return Err(Error::Convexity { p });
            }
        }
        let mut quotients = vec![1.0; log_values.len()];
        for p in 1..log_values.len() {
            quotients[p] = (log_values[p] - log_values[p - 1]).exp();
        }
        Ok(Self { log_values, quotients, generator: None })
    }

    /// Builds M_p = m_1 ... m_p from quotients m_1..=m_pmax (m_1 must be 1).
    pub fn from_quotients(m: &[f64]) -> Result<Self> {
        if m.len() < 2 {
            return Err(Error::InvalidParameter("need at least m_1 and m_2".into()));
        }
        if (m[0] - 1.0).abs() > 1e-12 {
            return Err(Error::Normalization { index: 1, log_value: m[0].ln() });
        }
        let mut quotients = Vec::with_capacity(m.len() + 1);
        quotients.push(1.0);
        quotients.extend_from_slice(m);
        Self::from_parts(quotients)
    }

    fn from_parts(quotients: Vec<f64>) -> Result<Self> {
        for p in 1..quotients.len() {
            if !(quotients[p] > 0.0) || !quotients[p].is_finite() {
                return Err(Error::InvalidParameter(format!("quotient m_{p} must be positive")));
            }
            if p >= 2 && quotients[p] < quotients[p - 1] * (1.0 - 1e-12) {
                return Err(Error::Convexity { p: p - 1 });
            }
        }
        let mut log_values = Vec::with_capacity(quotients.len());
        let mut acc = 0.0;
        log_values.push(0.0);
        for q in &quotients[1..] {
            acc += q.ln();
            log_values.push(acc);
        }
        Ok(Self { log_values, quotients, generator: None })
    }

    /// Reads a plain-text table, one log M_p per line. Blank lines and `#` comments are skipped.
    pub fn load_table(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text)
    }

    pub fn parse_table(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: cannot parse {line:?}", lineno + 1)))?;
            values.push(v);
        }
        Self::from_table(values)
    }

    /// Parses a named preset such as `gevrey:1.5`.
    pub fn preset(spec: &str, p_max: usize) -> Result<Self> {
        let (name, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("preset {spec:?} is not of the form name:value")))?;
        match name {
            "gevrey" => {
                let sigma: f64 = arg
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad gevrey exponent {arg:?}")))?;
                Self::gevrey(sigma, p_max)
            }
            other => Err(Error::Parse(format!("unknown preset {other:?}"))),
        }
    }

    pub fn p_max(&self) -> usize {
        self.log_values.len() - 1
    }

    pub fn generator(&self) -> Option<Generator> {
        self.generator
    }

    pub fn log_values(&self) -> &[f64] {
        &self.log_values
    }

    /// Quotients m_p for p = 0..=p_max (m_0 is stored as 1).
    pub fn quotients(&self) -> &[f64] {
        &self.quotients
    }

    pub fn log_m(&self, p: usize) -> f64 {
        self.log_values[p]
    }

    /// log M_p, using the generator past the table.
    pub fn log_m_ext(&self, p: usize) -> Option<f64> {
        if p <= self.p_max() {
            Some(self.log_values[p])
        } else {
            self.generator.map(|g| g.log_value(p as f64))
        }
    }

    /// m_p, using the generator past the table.
    pub fn quotient(&self, p: usize) -> Option<f64> {
        if p <= self.p_max() {
            Some(self.quotients[p])
        } else {
            self.generator.map(|g| g.quotient(p))
        }
    }

    /// First index beyond which (log M_p)/p increases strictly over the stored range.
    pub fn growth_index(&self) -> Option<usize> {
        let n = self.p_max();
        let ratio = |p: usize| self.log_values[p] / p as f64;
        let mut idx = n;
        while idx > 1 && ratio(idx) > ratio(idx - 1) {
            idx -= 1;
        }
        if idx == n {
            None
        } else {
            Some(idx)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gevrey_values() {
        let m = WeightSequence::gevrey(1.0, 10).unwrap();
        assert!((m.log_m(3).exp() - 6.0).abs() < 1e-12);
        let m = WeightSequence::gevrey(2.0, 10).unwrap();
        assert!((m.log_m(2).exp() - 4.0).abs() < 1e-12);
        let m = WeightSequence::gevrey(0.5, 10).unwrap();
        assert!((m.log_m(4) - 1.589_026_915_173_73).abs() < 1e-12);
    }

    #[test]
    fn gevrey_rejects_bad_sigma() {
        assert!(matches!(WeightSequence::gevrey(0.0, 10), Err(Error::InvalidParameter(_))));
        assert!(matches!(WeightSequence::gevrey(-1.0, 10), Err(Error::InvalidParameter(_))));
        assert!(WeightSequence::gevrey(1.0, 1).is_err());
    }

    #[test]
    fn table_validation() {
        let ok = WeightSequence::from_table(vec![0.0, 0.0, 2f64.ln(), 6f64.ln()]).unwrap();
        assert_eq!(ok.p_max(), 3);
        let bad = WeightSequence::from_table(vec![0.0, 0.0, 3f64.ln(), 4f64.ln()]);
        assert!(matches!(bad, Err(Error::Convexity { p: 2 })));
        let bad = WeightSequence::from_table(vec![0.0, 0.1, 1.0, 3.0]);
        assert!(matches!(bad, Err(Error::Normalization { index: 1, .. })));
    }

    #[test]
    fn quotients_exact_for_factorial() {
        let m = WeightSequence::gevrey(1.0, 100).unwrap();
        for p in 1..=100 {
            assert_eq!(m.quotients()[p], p as f64);
        }
        assert_eq!(m.quotient(1000), Some(1000.0));
    }

    #[test]
    fn generator_crossing() {
        let g = Generator::Gevrey { sigma: 2.0 };
        assert_eq!(g.crossing(4.0), 2.0);
        assert_eq!(g.crossing(8.99), 2.0);
        assert_eq!(g.crossing(9.0), 3.0);
        let g = Generator::Gevrey { sigma: 1.0 };
        assert_eq!(g.crossing(1e6 + 0.5), 1e6);
        assert!(Generator::Gevrey { sigma: 0.25 }.crossing(1e15) > 1e59);
    }

    #[test]
    fn parse_and_preset() {
        let m = WeightSequence::parse_table("# p!\n0\n0\n0.6931471805599453\n\n1.791759469228055\n").unwrap();
        assert_eq!(m.p_max(), 3);
        assert!(WeightSequence::preset("gevrey:2", 50).is_ok());
        assert!(WeightSequence::preset("nope:1", 50).is_err());
        assert!(WeightSequence::preset("gevrey", 50).is_err());
    }

    #[test]
    fn growth_index_reported() {
        let m = WeightSequence::gevrey(1.0, 50).unwrap();
        assert_eq!(m.growth_index(), Some(1));
    }
}
