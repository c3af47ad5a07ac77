use mpr_core::family::eval_in_time;
use mpr_core::field::rational_to_f64;
use mpr_core::{FloatPolynomial, MartingaleFamily, MomentModel, Rational, Verdict};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::paths::{PathBatch, CHUNK};
use crate::{Result, SimError};

pub const DEFAULT_ZMAX: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCTestResult {
    pub stat: String,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub verdict: Verdict,
}

impl MCTestResult {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("result serializes")
    }
}

/// Count, mean and centred sum of squares.
#[derive(Clone, Copy, Debug)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    all_zero: bool,
}

impl Moments {
    const EMPTY: Moments = Moments { n: 0.0, mean: 0.0, m2: 0.0, all_zero: true };

    fn of(values: impl Iterator<Item = f64>) -> Self {
        values.fold(Self::EMPTY, |acc, v| {
            let n = acc.n + 1.0;
            let d = v - acc.mean;
            let mean = acc.mean + d / n;
            Moments { n, mean, m2: acc.m2 + d * (v - mean), all_zero: acc.all_zero && v == 0.0 }
        })
    }

    fn merge(a: Self, b: Self) -> Self {
        if a.n == 0.0 {
            return b;
        }
        if b.n == 0.0 {
            return a;
        }
        let n = a.n + b.n;
        let d = b.mean - a.mean;
        Moments {
            n,
            mean: a.mean + d * b.n / n,
            m2: a.m2 + b.m2 + d * d * a.n * b.n / n,
            all_zero: a.all_zero && b.all_zero,
        }
    }

    /// Pairwise merge in a fixed tree order.
    fn reduce(parts: &[Self]) -> Self {
        match parts.len() {
            0 => Self::EMPTY,
            1 => parts[0],
            k => Self::merge(Self::reduce(&parts[..k / 2]), Self::reduce(&parts[k / 2..])),
        }
    }
}

/// Moments of `f(path)` over the batch, chunk by chunk.
fn sample_moments(batch: &PathBatch, f: impl Fn(&[f64]) -> f64 + Sync) -> Moments {
    let chunks: Vec<Moments> = (0..batch.n_paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| Moments::of((c * CHUNK..batch.n_paths.min((c + 1) * CHUNK)).map(|i| f(batch.path(i)))))
        .collect();
    Moments::reduce(&chunks)
}

fn z_result(stat: String, m: Moments, expected: f64, batch: &PathBatch, z_max: f64) -> Result<MCTestResult> {
    let var = if m.n > 1.0 { m.m2 / (m.n - 1.0) } else { 0.0 };
    let se = (var / m.n).sqrt();
    let z = if se > 0.0 {
        (m.mean - expected) / se
    } else if m.all_zero && expected == 0.0 {
        0.0
    } else {
        return Err(SimError::DegenerateVariance(format!("{stat}: all samples equal")));
    };
    Ok(MCTestResult {
        stat,
        estimate: m.mean,
        se,
        z,
        n_paths: batch.n_paths,
        seed: batch.seed,
        verdict: if z.abs() < z_max { Verdict::Pass } else { Verdict::Fail },
    })
}

fn float_member(fam: &MartingaleFamily, n: usize, t: &Rational) -> Result<FloatPolynomial> {
    Ok(eval_in_time(fam.member(n)?, t)?.map(rational_to_f64))
}

/// `E[(M_n(X_t, t) - M_n(X_s, s)) M_k(X_s, s)] = 0` for `k = 0..=k_max`.
pub fn mc_martingale_test(
    fam: &MartingaleFamily,
    batch: &PathBatch,
    n: usize,
    s: &Rational,
    t: &Rational,
    k_max: usize,
    z_max: f64,
) -> Result<Vec<MCTestResult>> {
    let (js, jt) = (batch.index_of(s)?, batch.index_of(t)?);
    if js >= jt {
        return Err(SimError::GridMismatch(format!("need s < t, got s = {s}, t = {t}")));
    }
    let available = fam.model().max_order();
    if 2 * (n + k_max) > available {
        return Err(SimError::InsufficientMoments { needed: 2 * (n + k_max), available });
    }
    let mn_t = float_member(fam, n, t)?;
    let mn_s = float_member(fam, n, s)?;
    (0..=k_max)
        .map(|k| {
            let mk_s = float_member(fam, k, s)?;
            let m = sample_moments(batch, |x| (mn_t.eval(&x[jt]) - mn_s.eval(&x[js])) * mk_s.eval(&x[js]));
            z_result(format!("martingale n={n} k={k} s={s} t={t}"), m, 0.0, batch, z_max)
        })
        .collect()
}

/// Sample mean of `X_t^n` against the exact `g_n(t)`.
pub fn mc_moment_check(model: &MomentModel, batch: &PathBatch, n: usize, t: &Rational, z_max: f64) -> Result<MCTestResult> {
    let j = batch.index_of(t)?;
    if n == 0 {
        return Err(SimError::DegenerateVariance("X_t^0 = 1 on every path".into()));
    }
    if 2 * n > model.max_order() {
        return Err(SimError::InsufficientMoments { needed: 2 * n, available: model.max_order() });
    }
    let expected = rational_to_f64(&model.moment_at(n, t)?);
    let m = sample_moments(batch, |x| x[j].powi(n as i32));
    z_result(format!("moment n={n} t={t} g={expected}"), m, expected, batch, z_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample_paths;
    use mpr_core::symbols::rational;
    use mpr_core::Builtin;

    #[test]
    fn pairwise_reduction_matches_direct() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let direct = Moments::of(v.iter().copied());
        let parts: Vec<Moments> = v.chunks(77).map(|c| Moments::of(c.iter().copied())).collect();
        let merged = Moments::reduce(&parts);
        assert!((direct.mean - merged.mean).abs() < 1e-12);
        assert!((direct.m2 - merged.m2).abs() < 1e-9);
    }

    #[test]
    fn zeroth_order_is_exact() {
        let fam = MartingaleFamily::build(Builtin::Wiener.model(8).unwrap(), 3).unwrap();
        let g = [rational(1), rational(2)];
        let b = sample_paths(&Builtin::Wiener, &g, 1000, 42, 0).unwrap();
        let r = mc_martingale_test(&fam, &b, 0, &g[0], &g[1], 2, DEFAULT_ZMAX).unwrap();
        assert!(r.iter().all(|x| x.estimate == 0.0 && x.se == 0.0 && x.passed()));
        assert!(matches!(
            mc_moment_check(fam.model(), &b, 0, &g[0], DEFAULT_ZMAX),
            Err(SimError::DegenerateVariance(_))
        ));
    }

    #[test]
    fn refusals() {
        let fam = MartingaleFamily::build(Builtin::Wiener.model(8).unwrap(), 4).unwrap();
        let g = [rational(1), rational(2)];
        let b = sample_paths(&Builtin::Wiener, &g, 10, 42, 0).unwrap();
        assert!(matches!(
            mc_martingale_test(&fam, &b, 4, &g[0], &g[1], 1, DEFAULT_ZMAX),
            Err(SimError::InsufficientMoments { needed: 10, available: 8 })
        ));
        assert!(matches!(
            mc_martingale_test(&fam, &b, 1, &g[0], &rational(3), 1, DEFAULT_ZMAX),
            Err(SimError::GridMismatch(_))
        ));
        assert!(matches!(
            mc_martingale_test(&fam, &b, 1, &g[1], &g[0], 1, DEFAULT_ZMAX),
            Err(SimError::GridMismatch(_))
        ));
        assert!(matches!(
            mc_moment_check(fam.model(), &b, 5, &g[0], DEFAULT_ZMAX),
            Err(SimError::InsufficientMoments { .. })
        ));
    }

    #[test]
    fn json_shape() {
        let r = MCTestResult {
            stat: "x".into(),
            estimate: 1.0,
            se: 0.5,
            z: 2.0,
            n_paths: 10,
            seed: 42,
            verdict: Verdict::Pass,
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["verdict"], "pass");
        assert_eq!(v["seed"], 42);
        assert_eq!(v.as_object().unwrap().len(), 7);
    }
}
