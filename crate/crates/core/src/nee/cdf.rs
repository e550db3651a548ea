use crate::error::{Error, Result};

/// Probability floor mixed into learned selection distributions.
pub const SELECTION_FLOOR: f64 = 1e-3;

/// Discrete distribution stored as probabilities and their running sum.
#[derive(Clone, Debug, PartialEq)]
pub struct Cdf {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    total: f64,
}

impl Cdf {
    /// Exact distribution proportional to `weights`, no floor. An all-zero
    /// vector gives the uniform distribution.
    pub fn proportional(weights: &[f64]) -> Result<Cdf> {
        check(weights)?;
        let total: f64 = weights.iter().sum();
        let n = weights.len() as f64;
        let pmf: Vec<f64> = if total > 0.0 {
            weights.iter().map(|w| w / total).collect()
        } else {
            vec![1.0 / n; weights.len()]
        };
        Ok(Cdf::from_pmf(pmf, total))
    }

    fn from_pmf(pmf: Vec<f64>, total: f64) -> Cdf {
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        // the last positive entry closes the distribution exactly
        if let Some(last) = pmf.iter().rposition(|&p| p > 0.0) {
            for c in &mut cdf[last..] {
                *c = 1.0;
            }
        }
        Cdf { pmf, cdf, total }
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cdf
    }

    /// Sum of the weights the distribution was built from.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn probability(&self, i: usize) -> f64 {
        self.pmf[i]
    }
}

fn check(qs: &[f64]) -> Result<()> {
    if qs.is_empty() {
        return Err(Error::contract("cannot build a distribution over zero entries"));
    }
    if let Some(q) = qs.iter().find(|q| !(**q >= 0.0 && q.is_finite())) {
        return Err(Error::contract(format!("distribution weight {q} must be finite and >= 0")));
    }
    Ok(())
}

/// Distribution proportional to `qs`, mixed with the uniform distribution so
/// that every entry has probability at least [`SELECTION_FLOOR`].
pub fn build_cdf(qs: &[f64]) -> Result<Cdf> {
    build_cdf_with_floor(qs, SELECTION_FLOOR)
}

/// `p_i = (1 − nδ)·q_i/Σq + δ`; uniform when `Σq = 0` or `nδ ≥ 1`.
pub fn build_cdf_with_floor(qs: &[f64], delta: f64) -> Result<Cdf> {
    check(qs)?;
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::contract(format!("floor {delta} outside [0,1)")));
    }
    let n = qs.len() as f64;
    let total: f64 = qs.iter().sum();
    let pmf = if total <= 0.0 || n * delta >= 1.0 {
        vec![1.0 / n; qs.len()]
    } else {
        let keep = 1.0 - n * delta;
        qs.iter().map(|q| keep * q / total + delta).collect()
    };
    Ok(Cdf::from_pmf(pmf, total))
}

/// Smallest index whose cumulative value exceeds `u`, with its probability.
pub fn sample_cdf(cdf: &Cdf, u: f64) -> (usize, f64) {
    let i = cdf.cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
    (i, cdf.pmf[i])
}

/// Like [`sample_cdf`], also returning `u` rescaled to [0,1) within the
/// chosen entry so it can be reused.
pub fn sample_cdf_remap(cdf: &Cdf, u: f64) -> (usize, f64, f64) {
    let (i, p) = sample_cdf(cdf, u);
    let lo = if i == 0 { 0.0 } else { cdf.cdf[i - 1] };
    let r = if p > 0.0 { ((u - lo) / p).clamp(0.0, crate::math::ONE_MINUS_EPSILON) } else { 0.0 };
    (i, p, r)
}
