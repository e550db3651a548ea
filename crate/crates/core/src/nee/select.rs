//! Action-selection policies over per-light value estimates.

use super::cdf::{sample_cdf, Cdf};
use crate::error::{Error, Result};
use crate::nn::softmax;

fn check_values(q: &[f64]) -> Result<()> {
    if q.is_empty() {
        return Err(Error::contract("no actions to select from"));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::contract("action values must be finite"));
    }
    Ok(())
}

/// Probabilities `T^{q_i} / Σ_k T^{q_k}`, evaluated as a softmax of `q·ln T`.
pub fn softmax_temperature_probabilities(q: &[f64], temperature: f64) -> Result<Vec<f64>> {
    check_values(q)?;
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::contract(format!("temperature {temperature} must be positive")));
    }
    let ln_t = temperature.ln();
    let scores: Vec<f64> = q.iter().map(|v| v * ln_t).collect();
    Ok(softmax(&scores))
}

pub fn softmax_temperature_select(q: &[f64], temperature: f64, u: f64) -> Result<(usize, f64)> {
    let p = softmax_temperature_probabilities(q, temperature)?;
    Ok(sample_cdf(&Cdf::proportional(&p)?, u))
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate() {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Mixture masses `ε/n + (1−ε)·[i = argmax]`.
pub fn epsilon_greedy_probabilities(q: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    check_values(q)?;
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::contract(format!("epsilon {epsilon} outside [0,1]")));
    }
    let n = q.len();
    let mut p = vec![epsilon / n as f64; n];
    p[argmax(q)] += 1.0 - epsilon;
    Ok(p)
}

/// Uniform choice when `u < ε`, otherwise the argmax; the probability is
/// the chosen index's total mixture mass.
pub fn epsilon_greedy_select(q: &[f64], epsilon: f64, u: f64) -> Result<(usize, f64)> {
    let p = epsilon_greedy_probabilities(q, epsilon)?;
    let n = q.len();
    let i = if u < epsilon {
        (((u / epsilon) * n as f64) as usize).min(n - 1)
    } else {
        argmax(q)
    };
    Ok((i, p[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_temperature_is_uniform() {
        let p = softmax_temperature_probabilities(&[3.0, -1.0, 7.5], 1.0).unwrap();
        assert!(p.iter().all(|&x| x == 1.0 / 3.0));
    }

    #[test]
    fn temperature_two() {
        let p = softmax_temperature_probabilities(&[1.0, 2.0], 2.0).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn large_temperature_is_greedy() {
        let p = softmax_temperature_probabilities(&[1.0, 3.0, 2.0], 1e6).unwrap();
        assert!(p[1] > 0.999);
        assert!(softmax_temperature_select(&[1.0], 0.0, 0.1).is_err());
    }

    #[test]
    fn epsilon_greedy_cases() {
        assert_eq!(epsilon_greedy_select(&[0.1, 0.9], 0.0, 0.3).unwrap(), (1, 1.0));
        let p = epsilon_greedy_probabilities(&[0.1, 0.9], 0.5).unwrap();
        assert_eq!(p, vec![0.25, 0.75]);
        let p = epsilon_greedy_probabilities(&[0.1, 0.9, 0.3], 1.0).unwrap();
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(epsilon_greedy_select(&[0.1, 0.9], 0.5, 0.1).unwrap(), (0, 0.25));
        assert_eq!(argmax(&[1.0, 1.0, 0.5]), 0);
    }
}
