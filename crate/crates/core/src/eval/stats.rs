use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Agreement between two raters beyond chance.
pub fn cohen_kappa(rater_a: &[i64], rater_b: &[i64]) -> Result<f64, EvalError> {
    if rater_a.len() != rater_b.len() {
        return Err(EvalError::LengthMismatch(rater_a.len(), rater_b.len()));
    }
    if rater_a.is_empty() {
        return Err(EvalError::DegenerateSample("no ratings".into()));
    }
    let n = rater_a.len() as f64;
    let categories: BTreeSet<i64> = rater_a.iter().chain(rater_b).copied().collect();
    let p_o = rater_a.iter().zip(rater_b).filter(|(a, b)| a == b).count() as f64 / n;
    let p_e: f64 = categories
        .iter()
        .map(|c| {
            let fa = rater_a.iter().filter(|&x| x == c).count() as f64 / n;
            let fb = rater_b.iter().filter(|&x| x == c).count() as f64 / n;
            fa * fb
        })
        .sum();
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Paired t-test on `x - y`.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<TTest, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(EvalError::DegenerateSample("need at least two pairs".into()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var <= 0.0 || !var.is_finite() {
        return Err(EvalError::DegenerateSample("differences have zero variance".into()));
    }
    let t = mean / (var / n).sqrt();
    let df = n - 1.0;
    let p = (1.0 - student_t_central_mass(t.abs(), df)).clamp(0.0, 1.0);
    Ok(TTest { t, df, p })
}

/// P(|T| <= t) for Student's t with `df` degrees of freedom. With
/// t = sqrt(df) * tan(theta) the density becomes a power of cos(theta),
/// which is integrated numerically.
pub fn student_t_central_mass(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 1.0;
    }
    let upper = (t / df.sqrt()).atan();
    let scale = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / std::f64::consts::PI.sqrt();
    let integrand = |theta: f64| theta.cos().powf(df - 1.0);
    2.0 * scale * adaptive_simpson(&integrand, 0.0, upper, 1e-13, 50)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    refine(f, a, fa, b, fb, m, fm, whole, eps, depth)
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, eps: f64, depth: u32) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    refine(f, a, fa, m, fm, lm, flm, left, eps / 2.0, depth - 1)
        + refine(f, m, fm, b, fb, rm, frm, right, eps / 2.0, depth - 1)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0 (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
