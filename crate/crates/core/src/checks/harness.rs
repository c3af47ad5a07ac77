use num_traits::Zero;

use std::fmt;

use super::structure::reversed_report;
use super::{affine_fit, show};
use crate::error::{MprError, Result};
use crate::family::MartingaleFamily;
use crate::field::Field;
use crate::report::{CheckReport, Verdict};
use crate::symbols::{sym_m_s, sym_m_t, sym_m_u, THREE_POINT_VARS};
use crate::{Rational, RationalFunctionOfTime};

use super::check_orthogonality;

/// `a = (m(u) - m(t)) / (m(u) - m(s))`, `b = (m(t) - m(s)) / (m(u) - m(s))`.
pub fn harness_coefficients<F: Field>(m_s: &F, m_t: &F, m_u: &F) -> Result<(F, F)> {
    let d = m_u.clone() - m_s;
    if d.is_zero() {
        return Err(MprError::DegenerateTriple("m_1(u) = m_1(s)".into()));
    }
    let a = (m_u.clone() - m_t) / &d;
    let b = (m_t.clone() - m_s) / &d;
    Ok((a, b))
}

pub fn harness_coefficients_at(
    m1: &RationalFunctionOfTime,
    s: &Rational,
    t: &Rational,
    u: &Rational,
) -> Result<(Rational, Rational)> {
    let at = |r: &Rational| m1.eval(r).ok_or_else(|| MprError::DegenerateAtPoint(r.to_string()));
    harness_coefficients(&at(s)?, &at(t)?, &at(u)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HarnessLevel {
    SufficientPass,
    NecessaryPass,
    Fail { j: usize, n: usize },
}

impl HarnessLevel {
    pub fn passed(self) -> bool {
        !matches!(self, HarnessLevel::Fail { .. })
    }

    /// Level recorded in a `check_harness` report.
    pub fn from_report(r: &CheckReport) -> Option<Self> {
        let s = r.get("level")?;
        match s {
            "SUFFICIENT_PASS" => Some(HarnessLevel::SufficientPass),
            "NECESSARY_PASS" => Some(HarnessLevel::NecessaryPass),
            _ => {
                let inner = s.strip_prefix("FAIL(")?.strip_suffix(')')?;
                let (j, n) = inner.split_once(',')?;
                Some(HarnessLevel::Fail { j: j.trim().parse().ok()?, n: n.trim().parse().ok()? })
            }
        }
    }
}

impl fmt::Display for HarnessLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessLevel::SufficientPass => f.write_str("SUFFICIENT_PASS"),
            HarnessLevel::NecessaryPass => f.write_str("NECESSARY_PASS"),
            HarnessLevel::Fail { j, n } => write!(f, "FAIL({j},{n})"),
        }
    }
}

/// Harness characterization: `M_1/m_1` reversed, and every coefficient of
/// `M_1 M_n = Σ_j δ_{j,n}(t) M_j(t)` affine in `m_1(t)`.
pub fn check_harness(fam: &MartingaleFamily) -> Result<CheckReport> {
    let n_max = fam.order();
    if n_max < 2 {
        return Err(MprError::OrderOutOfRange { requested: 2, available: n_max });
    }
    let m1 = fam.second_moment(1)?;
    let mut report = CheckReport::new("harness");
    report.note(fam.label());
    // offending (j, n), the earliest n first
    let mut fails: Vec<(usize, usize)> = Vec::new();

    let part1 = reversed_report(fam, 1, n_max)?;
    for (k, v) in &part1.constants {
        report.constant(k.clone(), v.clone());
    }
    for (key, v) in &part1.residuals {
        let m: usize = key
            .trim_start_matches("chi_{")
            .split(',')
            .next()
            .and_then(|m| m.parse().ok())
            .expect("residuals are keyed chi_{m,n}");
        report.residual(format!("E M_1M_{m} - chi_{{{m},1}} m_1"), v.clone(), v == "0");
        if v != "0" {
            fails.push((0, m));
        }
    }
    report.notes.extend(part1.notes.iter().cloned());

    for n in 1..n_max {
        let lin = fam.linearize_product(1, n)?;
        for (j, delta) in lin.delta.iter().enumerate() {
            let (alpha, beta, r) = affine_fit(delta, &m1)?;
            report.constant(format!("alpha_{{{j},{n}}}"), alpha.to_string());
            report.constant(format!("beta_{{{j},{n}}}"), beta.to_string());
            let zero = r.is_zero();
            report.residual(format!("delta_{{{j},{n}}}"), show(&r), zero);
            if !zero {
                fails.push((j, n));
            }
        }
        if let Ok(h) = fam.cross_moment(1, n) {
            let r = &lin.delta[0] - &h;
            report.residual(format!("delta_{{0,{n}}} - E M_1M_{n}"), show(&r), r.is_zero());
            if !r.is_zero() {
                fails.push((0, n));
            }
        }
    }

    let (a, b) = harness_coefficients(&sym_m_s(), &sym_m_t(), &sym_m_u())?;
    report.constant("a", a.to_expr(&THREE_POINT_VARS));
    report.constant("b", b.to_expr(&THREE_POINT_VARS));
    let sum = a + b - crate::ThreePointFunction::from_int(1);
    report.residual("a + b - 1", sum.to_expr(&THREE_POINT_VARS), sum.is_zero());

    let level = match fails.into_iter().min_by_key(|&(j, n)| (n, j)) {
        Some((j, n)) => HarnessLevel::Fail { j, n },
        None => match check_orthogonality(fam, n_max) {
            Ok(o) if o.passed() => HarnessLevel::SufficientPass,
            Ok(_) => {
                report.note("family not orthogonal: structure condition is only necessary");
                HarnessLevel::NecessaryPass
            }
            Err(e) => {
                report.note(format!("orthogonality not decidable ({e}): structure condition is only necessary"));
                HarnessLevel::NecessaryPass
            }
        },
    };
    if level == HarnessLevel::SufficientPass {
        report.note("orthogonal family: the structure condition is also sufficient, X is a harness");
    }
    report.constant("level", level.to_string());
    if !level.passed() {
        report.verdict = Verdict::Fail;
    }
    Ok(report)
}
