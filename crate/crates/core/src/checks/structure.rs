use num_traits::{One, Zero};

use super::{monic_gram_schmidt, sample_value, show};
use crate::error::{MprError, Result};
use crate::family::MartingaleFamily;
use crate::field::{binomial, Field};
use crate::matrix::Matrix;
use crate::model::increment_moments;
use crate::poly::Poly;
use crate::report::{CheckReport, Verdict};
use crate::symbols::{rational, STATE_TWO_TIME_VARS, TWO_TIME_VARS};
use crate::{Rational, RationalFunctionOfTime, SpaceTimePolynomial, TwoTimeFunction, TwoTimePolynomial};

/// `E((X_t - X_s)^n | F_s)` must be free of `x = X_s` for every `n ≤ N` and
/// agree with the increment moments of the model.
pub fn check_independent_increments(fam: &MartingaleFamily) -> Result<CheckReport> {
    if !fam.is_certified() {
        return Ok(CheckReport::not_applicable(
            "ii",
            format!("{} is not certified as a martingale family", fam.label()),
        ));
    }
    let n_max = fam.order();
    let gamma = increment_moments(fam.model(), n_max)?;
    let cond: Vec<TwoTimePolynomial> = (0..=n_max)
        .map(|k| fam.conditional_expectation(&Poly::monomial(RationalFunctionOfTime::one(), k)))
        .collect::<Result<_>>()?;

    let mut report = CheckReport::new("ii");
    report.note(fam.label());
    report.note("moment generating function assumed to exist near 0 (not verifiable from finitely many moments)");
    for n in 1..=n_max {
        let mut inc = TwoTimePolynomial::zero();
        for (k, ck) in cond.iter().enumerate().take(n + 1) {
            let sign = if (n - k) % 2 == 0 { 1 } else { -1 };
            let c: TwoTimeFunction = binomial::<TwoTimeFunction>(n, k) * TwoTimeFunction::from_int(sign);
            inc = inc + &(ck * &Poly::monomial(c, n - k));
        }
        let x_part = Poly::from_coeffs(
            std::iter::once(TwoTimeFunction::zero()).chain(inc.coeffs().iter().skip(1).cloned()).collect(),
        );
        report.residual(format!("x-part n={n}"), x_part.to_expr(&STATE_TWO_TIME_VARS), x_part.is_zero());
        let g = inc.coeff(0) - gamma.gamma(n);
        report.residual(format!("gamma n={n}"), g.to_expr(&TWO_TIME_VARS), g.is_zero());
        report.constant(format!("gamma_{n}"), inc.coeff(0).to_expr(&TWO_TIME_VARS));
    }
    Ok(report)
}

pub(crate) fn reversed_report(fam: &MartingaleFamily, n: usize, m_max: usize) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("reversed n={n}"));
    let mn = fam.second_moment(n)?;
    let cap = fam.model().max_order();
    for m in 0..=m_max.min(cap.saturating_sub(n)) {
        let h = fam.cross_moment(n, m)?;
        let ratio = h.checked_div(&mn)?;
        match ratio.as_constant() {
            Some(chi) => {
                report.constant(format!("chi_{{{m},{n}}}"), chi.to_string());
                report.residual(format!("chi_{{{m},{n}}}"), "0", true);
            }
            None => {
                let c = sample_value(&ratio).unwrap_or_else(Rational::zero);
                let r = h - mn.clone() * RationalFunctionOfTime::constant(c);
                report.residual(format!("chi_{{{m},{n}}}"), show(&r), false);
                report.note(format!("E M_{n}M_{m} / m_{n} = {} is not constant", show(&ratio)));
            }
        }
    }
    if report.passed() {
        report.note(format!("M_{n}/m_{n} is a reversed martingale, a(s) = 1/m_{n}(s) = {}", show(&mn.recip()?)));
    }
    Ok(report)
}

/// `E M_n M_m = χ_{m,n} m_n` with constant `χ_{m,n}` for every `m`; then
/// `M_n / m_n` is a reversed martingale.
pub fn check_reversed_martingale(fam: &MartingaleFamily, n: usize) -> Result<CheckReport> {
    if n > fam.order() {
        return Err(MprError::OrderOutOfRange { requested: n, available: fam.order() });
    }
    let mut r = reversed_report(fam, n, fam.order())?;
    r.check = "reversed".into();
    r.constant("n", n.to_string());
    r.note(fam.label());
    Ok(r)
}

/// Pairwise orthogonality of `M_0..M_N`, together with the equivalent
/// statement that every `M_n / m_n` is a reversed martingale.
pub fn check_orthogonality(fam: &MartingaleFamily, n_max: usize) -> Result<CheckReport> {
    if n_max > fam.order() {
        return Err(MprError::OrderOutOfRange { requested: n_max, available: fam.order() });
    }
    let mut report = CheckReport::new("ortho");
    report.note(fam.label());
    for n in 0..=n_max {
        for m in (n + 1)..=n_max {
            let h = fam.cross_moment(n, m)?;
            report.residual(format!("E M_{n}M_{m}"), show(&h), h.is_zero());
        }
    }
    let statement_1 = report.passed();

    let mut statement_2 = true;
    let mut second: Vec<RationalFunctionOfTime> = Vec::new();
    for n in 0..=n_max {
        let r = reversed_report(fam, n, n_max)?;
        if !r.passed() {
            statement_2 = false;
            report.note(format!("M_{n}/m_{n} is not a reversed martingale"));
        }
        second.push(fam.second_moment(n)?);
    }
    let mut distinct = true;
    for i in 0..=n_max {
        for j in (i + 1)..=n_max {
            if second[i] == second[j] {
                distinct = false;
                report.note(format!("hypothesis violated: m_{i} = m_{j} = {}", show(&second[i])));
            }
        }
    }
    let verdict = |b: bool| if b { "pass" } else { "fail" };
    report.constant("orthogonal", verdict(statement_1));
    report.constant("reversed_martingales", verdict(statement_2));
    report.constant("distinct_m_n", distinct.to_string());
    let equivalence = if !distinct {
        "not-asserted"
    } else if statement_1 == statement_2 {
        "confirmed"
    } else {
        "contradicted"
    };
    report.constant("equivalence", equivalence);
    if equivalence == "contradicted" {
        report.note("orthogonality and the reversed-martingale property disagree despite distinct m_n");
        report.verdict = Verdict::Fail;
    }
    Ok(report)
}

/// Orthogonalized family obtained by a constant recombination `P = L M`.
#[derive(Clone, Debug)]
pub struct GramSchmidtResult {
    pub l: Matrix<Rational>,
    pub family: MartingaleFamily,
    pub report: CheckReport,
}

fn gram_at(fam: &MartingaleFamily, n: usize, t: &Rational) -> Result<Matrix<Rational>> {
    let mut g = Matrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            let v = fam
                .cross_moment(i, j)?
                .eval(t)
                .ok_or_else(|| MprError::DegenerateAtPoint(t.to_string()))?;
            g.set(i, j, v);
        }
    }
    Ok(g)
}

/// Orthogonalize `M_0..M_N` with coefficients that must not depend on time.
///
/// Gram–Schmidt is run at `t = 1` and `t = 2`; the recombination is accepted
/// only if both agree and the symbolic recombination is constant.
pub fn constant_gram_schmidt(fam: &MartingaleFamily, n_max: usize) -> Result<GramSchmidtResult> {
    if n_max > fam.order() {
        return Err(MprError::OrderOutOfRange { requested: n_max, available: fam.order() });
    }
    if 2 * n_max > fam.model().max_order() {
        return Err(MprError::InsufficientMoments { needed: 2 * n_max, available: fam.model().max_order() });
    }
    let (l1, _) = monic_gram_schmidt(&gram_at(fam, n_max, &rational(1))?)?;
    let (l2, _) = monic_gram_schmidt(&gram_at(fam, n_max, &rational(2))?)?;

    let mut sym = Matrix::<RationalFunctionOfTime>::zeros(n_max + 1, n_max + 1);
    for i in 0..=n_max {
        for j in 0..=n_max {
            sym.set(i, j, fam.cross_moment(i, j)?);
        }
    }
    let (l_sym, _) = monic_gram_schmidt(&sym)?;
    let offending = (0..=n_max)
        .flat_map(|k| (0..k).map(move |j| (k, j)))
        .find(|&(k, j)| l1.get(k, j) != l2.get(k, j) || l_sym.get(k, j).as_constant().is_none());
    if let Some((k, j)) = offending {
        let coefficient = -l_sym.get(k, j).clone();
        return Err(MprError::NotConstant { order: k, coefficient: show(&coefficient) });
    }

    let members: Vec<SpaceTimePolynomial> = (0..=n_max)
        .map(|k| {
            (0..=k).fold(Poly::zero(), |acc, j| {
                acc + fam.members()[j].scale(&RationalFunctionOfTime::constant(l1.get(k, j).clone()))
            })
        })
        .collect();
    let family = MartingaleFamily::from_members(fam.model().clone(), members)?;

    let mut report = CheckReport::new("cgs");
    report.note(format!("recombination of the {}", fam.label()));
    for k in 0..=n_max {
        let row: Vec<String> = l1.row(k)[..=k].iter().map(ToString::to_string).collect();
        report.constant(format!("L row {k}"), format!("({})", row.join(", ")));
    }
    for i in 0..=n_max {
        for j in (i + 1)..=n_max {
            let h = family.cross_moment(i, j)?;
            report.residual(format!("E P_{i}P_{j}"), show(&h), h.is_zero());
        }
    }
    if !family.is_certified() {
        report.verdict = Verdict::Fail;
        report.note("recombined family failed martingale certification");
    }
    Ok(GramSchmidtResult { l: l1, family, report })
}
