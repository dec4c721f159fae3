use super::conditions::{check_m2, check_m2star, ConditionReport};
use super::sequence::WeightSequence;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 10.0;

/// Non-decreasing sequence r_0 = r_1 = 1, stored for j = 0..=j_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSequence {
    values: Vec<f64>,
    divergence_threshold: f64,
}

impl RSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Self::with_threshold(values, DEFAULT_DIVERGENCE_THRESHOLD)
    }

    pub fn with_threshold(values: Vec<f64>, divergence_threshold: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidRSequence("need at least r_0 and r_1".into()));
        }
        if values[0] != 1.0 || values[1] != 1.0 {
            return Err(Error::InvalidRSequence("r_0 and r_1 must equal 1".into()));
        }
        for j in 1..values.len() {
            if !values[j].is_finite() || values[j] < values[j - 1] {
                return Err(Error::InvalidRSequence(format!("not non-decreasing at j = {j}")));
            }
        }
        Ok(Self { values, divergence_threshold })
    }

    /// r_j = max(1, f(j)) for j >= 2.
    pub fn from_fn(j_max: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        let values = (0..=j_max).map(|j| if j < 2 { 1.0 } else { f(j).max(1.0) }).collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn j_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Whether the last stored value exceeds the divergence threshold.
    pub fn diverges(&self) -> bool {
        self.values[self.j_max()] >= self.divergence_threshold
    }

    /// Smallest c with self_j <= other_j for all c <= j <= j_max of the common range.
    pub fn crossover_below(&self, other: &RSequence) -> usize {
        let end = self.j_max().min(other.j_max());
        let mut c = end + 1;
        while c > 0 && self.values[c - 1] <= other.values[c - 1] {
            c -= 1;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeResult {
    pub r: RSequence,
    /// The recursion indices j_1 = 1 < j_2 < ...
    pub breakpoints: Vec<usize>,
    /// Per input, the index from which the merged sequence stays below it.
    pub crossovers: Vec<usize>,
}

/// Builds one r that is eventually dominated by every input.
///
/// The inputs are r^(0), r^(1), ...; past the end of the list the last input is repeated.
/// With j_1 = 1, j_{k+1} is the smallest index above j_k with
/// r^(k+1)_{j_{k+1}} >= r^(k)_{j_k} and min_{l <= k+1} r^(l)_{j_{k+1}} >= k + 1.
/// The output is 1 before j_2 and min_{l <= k} r^(l)_{j_k} on [j_k, j_{k+1}).
pub fn merge_rsequences(inputs: &[RSequence], j_max: usize) -> Result<MergeResult> {
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("no input sequences".into()));
    }
    let j_max = inputs.iter().map(|r| r.j_max()).fold(j_max, usize::min);
    let last = inputs.len() - 1;
    let get = |l: usize, j: usize| inputs[l.min(last)].values[j];
    let min_upto = |k: usize, j: usize| (0..=k).map(|l| get(l, j)).fold(f64::INFINITY, f64::min);

    let mut breakpoints = vec![1usize];
    let mut k = 1;
    loop {
        let jk = breakpoints[k - 1];
        let need = get(k, jk);
        let next = (jk + 1..=j_max)
            .find(|&j| get(k + 1, j) >= need && min_upto(k + 1, j) >= (k + 1) as f64);
        match next {
            Some(j) => {
                breakpoints.push(j);
                k += 1;
            }
            None => break,
        }
    }
    let mut values = vec![1.0; j_max + 1];
    for (idx, &jk) in breakpoints.iter().enumerate().skip(1) {
        let k = idx + 1;
        let end = breakpoints.get(idx + 1).copied().unwrap_or(j_max + 1);
        let v = min_upto(k, jk);
        for slot in &mut values[jk..end] {
            *slot = v;
        }
    }
    let r = RSequence::new(values)?;
    let crossovers = inputs.iter().map(|inp| r.crossover_below(inp)).collect();
    Ok(MergeResult { r, breakpoints, crossovers })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkReport {
    pub range: usize,
    pub input_m2: ConditionReport,
    pub input_m2star: ConditionReport,
    pub dominated: bool,
    pub log_convex: bool,
    pub output_m2: ConditionReport,
    pub output_m2star: ConditionReport,
}

impl ShrinkReport {
    pub fn all_pass(&self) -> bool {
        self.input_m2.holds
            && self.input_m2star.holds
            && self.dominated
            && self.log_convex
            && self.output_m2.holds
            && self.output_m2star.holds
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkResult {
    pub r_double: Vec<f64>,
    pub r_prime: RSequence,
    pub n: WeightSequence,
    pub report: ShrinkReport,
}

/// r''_j = min(r_j, r''_{j-1} m_j / m_{j-1}), r' = sqrt(r''), N_p = M_p / prod_{j <= p} r'_j.
pub fn shrink_r(m: &WeightSequence, r: &RSequence) -> Result<ShrinkResult> {
    let range = m.p_max().min(r.j_max());
    let q = m.quotients();
    let mut rd = vec![1.0; range + 1];
    for j in 2..=range {
        rd[j] = r.get(j).min(rd[j - 1] * q[j] / q[j - 1]);
    }
    let rp: Vec<f64> = rd.iter().map(|v| v.sqrt()).collect();
    let nq: Vec<f64> = (1..=range).map(|j| q[j] / rp[j]).collect();
    let r_prime = RSequence::new(rp)?;
    let dominated = (0..=range).all(|j| r_prime.get(j) <= r.get(j));
    let (n, log_convex) = match WeightSequence::from_quotients(&nq) {
        Ok(n) => (n, true),
        Err(Error::Convexity { .. }) => {
            let mut lv = vec![0.0];
            let mut acc = 0.0;
            for v in &nq {
                acc += v.ln();
                lv.push(acc);
            }
            (WeightSequence::from_table(lv).unwrap_or_else(|_| m.clone()), false)
        }
        Err(e) => return Err(e),
    };
    let report = ShrinkReport {
        range,
        input_m2: check_m2(m, range),
        input_m2star: check_m2star(m, range),
        dominated,
        log_convex,
        output_m2: check_m2(&n, range),
        output_m2star: check_m2star(&n, range),
    };
    Ok(ShrinkResult { r_double: rd, r_prime, n, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KDirection {
    /// sup a_p / h^p < inf for some h gives r with sup a_p / prod r_j < inf.
    Roumieu,
    /// sup h^p a_p < inf for all h gives r with sup a_p prod r_j < inf.
    Beurling,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KWitness {
    pub direction: KDirection,
    pub r: RSequence,
    /// sup a_p / h^p (Roumieu) or max over h = 1, 2, ..., 64 of sup h^p a_p (Beurling).
    pub hypothesis_sup: f64,
    /// sup a_p / prod r_j (Roumieu) or sup a_p prod r_j (Beurling) over the table.
    pub witness_sup: f64,
    /// The hypothesis sups are attained away from the end of the table.
    pub hypothesis_interior: bool,
    pub extension_rule: String,
}

/// Builds an explicit r for the two directions of the growth-condition equivalence on a
/// finite table given as `log_a[p] = log a_p`. `h` is used only in the Roumieu direction.
pub fn growth_witness(log_a: &[f64], direction: KDirection, h: f64) -> Result<KWitness> {
    if log_a.len() < 3 || log_a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("need at least 3 positive finite terms".into()));
    }
    let a = log_a;
    let n = a.len() - 1;
    let interior_end = 3 * n / 4;
    let sup_arg = |f: &dyn Fn(usize) -> f64| {
        (0..=n).map(|p| (f(p), p)).fold((f64::MIN, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
    };
    match direction {
        KDirection::Roumieu => {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("h must be positive".into()));
            }
            let hh = h.max(1.0);
            let r = RSequence::from_fn(n, |j| hh * (j as f64).log2().floor())?;
            let (hyp, harg) = sup_arg(&|p| (a[p] - p as f64 * h.ln()).exp());
            let mut log_prod = 0.0;
            let mut wit = f64::MIN;
            for p in 0..=n {
                if p >= 1 {
                    log_prod += r.get(p).ln();
                }
                wit = wit.max((a[p] - log_prod).exp());
            }
            Ok(KWitness {
                direction,
                r,
                hypothesis_sup: hyp,
                witness_sup: wit,
                hypothesis_interior: harg <= interior_end,
                extension_rule: format!("r_j = {hh} * floor(log2 j) for j >= 2"),
            })
        }
        KDirection::Beurling => {
            let mut r_vals = vec![1.0; n + 1];
            let mut tail_min = f64::INFINITY;
            for j in (1..=n).rev() {
                tail_min = tail_min.min((a[j - 1] - a[j]).exp() / 2.0);
                if j >= 2 {
                    r_vals[j] = tail_min.max(1.0);
                }
            }
            // enforce monotonicity from the left as well (max(1, .) can break it only at the start)
            for j in 2..=n {
                r_vals[j] = r_vals[j].max(r_vals[j - 1]);
            }
            let r = RSequence::new(r_vals)?;
            let mut hyp = 0.0f64;
            let mut interior = true;
            for e in 0..=6 {
                let h = 2f64.powi(e);
                let (s, arg) = sup_arg(&|p| (a[p] + p as f64 * h.ln()).exp());
                hyp = hyp.max(s);
                interior &= arg <= interior_end;
            }
            let mut log_prod = 0.0;
            let mut wit = f64::MIN;
            for p in 0..=n {
                if p >= 1 {
                    log_prod += r.get(p).ln();
                }
                wit = wit.max((a[p] + log_prod).exp());
            }
            Ok(KWitness {
                direction,
                r,
                hypothesis_sup: hyp,
                witness_sup: wit,
                hypothesis_interior: interior,
                extension_rule: format!("r_j = {} for j > {n}", r_last(n, a)),
            })
        }
    }
}

fn r_last(n: usize, log_a: &[f64]) -> f64 {
    ((log_a[n - 1] - log_a[n]).exp() / 2.0).max(1.0)
}
