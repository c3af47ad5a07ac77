use num_traits::Zero;

use super::structure::reversed_report;
use super::{affine_fit, show};
use crate::error::{MprError, Result};
use crate::family::MartingaleFamily;
use crate::field::Field;
use crate::matrix::{solve_linear, Matrix};
use crate::report::{CheckReport, Verdict};
use crate::symbols::{eval_three_point, lift3, sym_m_s, sym_m_t, sym_m_u, THREE_POINT_VARS};
use crate::{Rational, RationalFunctionOfTime, ThreePointFunction};

/// Structure constants of a quadratic harness candidate:
///
/// * `M_1^2 = (α21 m + β21) M_2 + (α11 m + β11) M_1 + m`
/// * `M_1 M_2 = (α32 m + β32) M_3 + (α22 m + β22) M_2 + (α12 m + β12) M_1`
/// * `E M_3 M_1 = χ31 m`
///
/// with `m = m_1(t)`, plus `â = α32 χ31 + α12`, `a = β32 χ31 + β12`,
/// `κ = 1 + α11 β11 + α21 a`, `λ = β21 â - α21 a`.
#[derive(Clone, Debug, PartialEq)]
pub struct QHStructure {
    pub alpha21: Rational,
    pub beta21: Rational,
    pub alpha11: Rational,
    pub beta11: Rational,
    pub alpha32: Rational,
    pub beta32: Rational,
    pub alpha22: Rational,
    pub beta22: Rational,
    pub alpha12: Rational,
    pub beta12: Rational,
    pub chi31: Rational,
    pub a_hat: Rational,
    pub a: Rational,
    pub kappa: Rational,
    pub lambda: Rational,
    pub m1: RationalFunctionOfTime,
    pub m2: RationalFunctionOfTime,
}

impl QHStructure {
    pub fn constants(&self) -> Vec<(&'static str, &Rational)> {
        vec![
            ("alpha_{2,1}", &self.alpha21),
            ("beta_{2,1}", &self.beta21),
            ("alpha_{1,1}", &self.alpha11),
            ("beta_{1,1}", &self.beta11),
            ("alpha_{3,2}", &self.alpha32),
            ("beta_{3,2}", &self.beta32),
            ("alpha_{2,2}", &self.alpha22),
            ("beta_{2,2}", &self.beta22),
            ("alpha_{1,2}", &self.alpha12),
            ("beta_{1,2}", &self.beta12),
            ("chi_{3,1}", &self.chi31),
            ("a_hat", &self.a_hat),
            ("a", &self.a),
            ("kappa", &self.kappa),
            ("lambda", &self.lambda),
        ]
    }

    /// `α21 m + β21`.
    pub fn q<F: Field>(&self, m: &F, lift: &impl Fn(&Rational) -> F) -> F {
        lift(&self.alpha21) * m + &lift(&self.beta21)
    }

    /// `â m + a`.
    pub fn p<F: Field>(&self, m: &F, lift: &impl Fn(&Rational) -> F) -> F {
        lift(&self.a_hat) * m + &lift(&self.a)
    }

    /// `m_2` as a function of `m_1`: `(â m + a) m / (α21 m + β21)`.
    pub fn m2_of<F: Field>(&self, m: &F, lift: &impl Fn(&Rational) -> F) -> Result<F> {
        let q = self.q(m, lift);
        if q.is_zero() {
            return Err(MprError::DegenerateTriple("alpha_{2,1} m + beta_{2,1} vanishes".into()));
        }
        Ok(self.p(m, lift) * m / &q)
    }

    fn report_into(&self, r: &mut CheckReport) {
        for (k, v) in self.constants() {
            r.constant(k, v.to_string());
        }
    }
}

/// Coefficients of
/// `E(M_2(t) | F_{s,u}) = A M_2(s) + B M_1(s) M_1(u) + C M_2(u) + D M_1(s) + E M_1(u) + F`.
#[derive(Clone, Debug, PartialEq)]
pub struct QHCoefficients<F> {
    pub a: F,
    pub b: F,
    pub c: F,
    pub d: F,
    pub e: F,
    pub f: F,
}

impl<F: Field> QHCoefficients<F> {
    fn from_abc(q: &QHStructure, a: F, b: F, c: F, ms: &F, lift: &impl Fn(&Rational) -> F) -> Self {
        let d = -(lift(&q.beta11) * &b);
        let e = -(lift(&q.alpha11) * ms * &b);
        let f = -(b.clone() * ms);
        QHCoefficients { a, b, c, d, e, f }
    }

    pub fn named(&self) -> [(&'static str, &F); 6] {
        [("A", &self.a), ("B", &self.b), ("C", &self.c), ("D", &self.d), ("E", &self.e), ("F", &self.f)]
    }
}

fn hypothesis(msg: impl Into<String>) -> MprError {
    MprError::HypothesisViolated(msg.into())
}

/// Extract the quadratic-harness structure constants and verify the
/// second-moment identities they imply.
pub fn qh_structure_constants(fam: &MartingaleFamily) -> Result<(QHStructure, CheckReport)> {
    if fam.model().max_order() < 6 {
        return Err(MprError::InsufficientMoments { needed: 6, available: fam.model().max_order() });
    }
    if fam.order() < 3 {
        return Err(MprError::OrderOutOfRange { requested: 3, available: fam.order() });
    }
    let h12 = fam.cross_moment(1, 2)?;
    if !h12.is_zero() {
        return Err(hypothesis(format!(
            "E M_1M_2 = {} is not identically zero; orthogonalize with constant_gram_schmidt first",
            show(&h12)
        )));
    }
    let m1 = fam.second_moment(1)?;
    let m2 = fam.second_moment(2)?;
    let affine = |d: &RationalFunctionOfTime, name: &str| -> Result<(Rational, Rational)> {
        let (al, be, r) = affine_fit(d, &m1)?;
        if !r.is_zero() {
            return Err(hypothesis(format!("{name} = {} is not affine in m_1", show(d))));
        }
        Ok((al, be))
    };
    let p1 = fam.linearize_product(1, 1)?.delta;
    let p2 = fam.linearize_product(1, 2)?.delta;
    let (alpha21, beta21) = affine(&p1[2], "delta_{2,1}")?;
    let (alpha11, beta11) = affine(&p1[1], "delta_{1,1}")?;
    let (alpha32, beta32) = affine(&p2[3], "delta_{3,2}")?;
    let (alpha22, beta22) = affine(&p2[2], "delta_{2,2}")?;
    let (alpha12, beta12) = affine(&p2[1], "delta_{1,2}")?;
    let chi31 = fam
        .cross_moment(3, 1)?
        .checked_div(&m1)?
        .as_constant()
        .ok_or_else(|| hypothesis("E M_3M_1 / m_1 is not constant"))?;

    let a_hat = &alpha32 * &chi31 + &alpha12;
    let a = &beta32 * &chi31 + &beta12;
    let kappa = Rational::from_int(1) + &alpha11 * &beta11 + &alpha21 * &a;
    let lambda = &beta21 * &a_hat - &alpha21 * &a;
    let q = QHStructure {
        alpha21,
        beta21,
        alpha11,
        beta11,
        alpha32,
        beta32,
        alpha22,
        beta22,
        alpha12,
        beta12,
        chi31,
        a_hat,
        a,
        kappa,
        lambda,
        m1: m1.clone(),
        m2: m2.clone(),
    };

    let mut report = CheckReport::new("qh-structure");
    report.note(fam.label());
    q.report_into(&mut report);
    let lift = |c: &Rational| RationalFunctionOfTime::constant(c.clone());
    let members = fam.members();
    let model = fam.model();

    let r0 = &p1[0] - &m1;
    report.residual("delta_{0,1} - m_1", show(&r0), r0.is_zero());
    let e11 = model.expect(&(&members[1] * &members[1]))?;
    let r = e11 - &m1;
    report.residual("E M_1^2 - m_1", show(&r), r.is_zero());
    let e111 = model.expect(&(&(&members[1] * &members[1]) * &members[1]))?;
    let r = e111 - &((lift(&q.alpha11) * &m1 + &lift(&q.beta11)) * &m1);
    report.residual("E M_1^3 - (alpha_{1,1} m_1 + beta_{1,1}) m_1", show(&r), r.is_zero());
    let e112 = model.expect(&(&(&members[1] * &members[1]) * &members[2]))?;
    let r = e112 - &(m1.clone() * &q.p(&m1, &lift));
    report.residual("E M_1^2M_2 - m_1 (a_hat m_1 + a)", show(&r), r.is_zero());
    let r = m2.clone() * &q.q(&m1, &lift) - &(q.p(&m1, &lift) * &m1);
    report.residual("m_2 (alpha_{2,1} m_1 + beta_{2,1}) - (a_hat m_1 + a) m_1", show(&r), r.is_zero());
    Ok((q, report))
}

/// The 3x3 system in `(A, B, C)` left after eliminating `D, E, F`:
///
/// ```text
/// [ 1        Q(s)                                    1      ] = 1
/// [ â m_s    κ m_u + (λ - κ + α21 a) m_s + α21 â m_s m_u   â m_u  ] = â m_t
/// [ m_2(s)   m_s P(u)                                m_2(u) ] = m_2(t)
/// ```
///
/// where `Q(r) = α21 m_r + β21`, `P(r) = â m_r + a` and `m_2 = P m / Q`.
pub fn mm_system<F: Field>(
    q: &QHStructure,
    ms: &F,
    mt: &F,
    mu: &F,
    lift: &impl Fn(&Rational) -> F,
) -> Result<(Matrix<F>, Vec<F>)> {
    let ah = lift(&q.a_hat);
    let kappa = lift(&q.kappa);
    let alpha21 = lift(&q.alpha21);
    let mid = kappa.clone() * mu
        + &((lift(&q.lambda) - &kappa + &(alpha21.clone() * &lift(&q.a))) * ms)
        + &(alpha21 * &ah * ms * mu);
    let rows = vec![
        vec![F::one(), q.q(ms, lift), F::one()],
        vec![ah.clone() * ms, mid, ah.clone() * mu],
        vec![q.m2_of(ms, lift)?, q.p(mu, lift) * ms, q.m2_of(mu, lift)?],
    ];
    let rhs = vec![F::one(), ah * mt, q.m2_of(mt, lift)?];
    Ok((Matrix::from_rows(rows)?, rhs))
}

/// Determinant of the 3x3 system as expanded in closed form:
///
/// `-α21 â κ m_s m_u^2 + α21 â (κ + α21 (a-1)) m_s^2 m_u - β21 â (λ - κ - α21 (a-1)) m_s^2
///  + β21 â κ m_u^2 + β12 â (β21 â - α21) m_s m_u - β21 a κ m_u + β21 a (κ + α21 (a-1)) m_s`.
pub fn mm_determinant_printed<F: Field>(q: &QHStructure, ms: &F, mu: &F, lift: &impl Fn(&Rational) -> F) -> F {
    let one = Rational::from_int(1);
    let (a21, b21, b12) = (lift(&q.alpha21), lift(&q.beta21), lift(&q.beta12));
    let (ah, a, k, l) = (lift(&q.a_hat), lift(&q.a), lift(&q.kappa), lift(&q.lambda));
    let am1 = lift(&(&q.a - &one));
    let ms2 = ms.clone() * ms;
    let mu2 = mu.clone() * mu;
    let t1 = -(a21.clone() * &ah * &k * ms * &mu2);
    let t2 = a21.clone() * &ah * &(k.clone() + &(a21.clone() * &am1)) * &ms2 * mu;
    let t3 = -(b21.clone() * &ah * &(l - &k - &(a21.clone() * &am1)) * &ms2);
    let t4 = b21.clone() * &ah * &k * &mu2;
    let t5 = b12 * &ah * &(b21.clone() * &ah - &a21) * ms * mu;
    let t6 = -(b21.clone() * &a * &k * mu);
    let t7 = b21 * &a * &(k + &(a21 * &am1)) * ms;
    t1 + t2 + t3 + t4 + t5 + t6 + t7
}

/// The closed-form expressions for `A, B, C`, with `D, E, F` obtained from
/// `D = -β11 B`, `E = -α11 m_s B`, `F = -B m_s`.
pub fn qh_closed_form<F: Field>(
    q: &QHStructure,
    ms: &F,
    mt: &F,
    mu: &F,
    lift: &impl Fn(&Rational) -> F,
) -> Result<QHCoefficients<F>> {
    let spread = mu.clone() - ms;
    if spread.is_zero() {
        return Err(MprError::DegenerateTriple("m_1(u) = m_1(s)".into()));
    }
    let h = (mu.clone() - mt) / &spread;
    let (b21, a12) = (lift(&q.beta21), lift(&q.alpha12));
    let (ah, a, k, l) = (lift(&q.a_hat), lift(&q.a), lift(&q.kappa), lift(&q.lambda));
    let base = b21.clone() * &a * &k;
    let lk = b21.clone() * &ah * &(l.clone() - &k);
    let bk = b21.clone() * &ah * &k;
    let ak = a12 * &ah * &k;
    let bracket = |x: &F, y: &F, z: &F| base.clone() - &(lk.clone() * x) + &(bk.clone() * y) + &(ak.clone() * y * z);
    let den = q.q(mt, lift) * &bracket(ms, mu, mt);
    if den.is_zero() {
        return Err(MprError::DegenerateTriple("closed-form denominator vanishes".into()));
    }
    let a_c = h.clone() * &q.q(ms, lift) * &bracket(mt, mu, mt) / &den;
    let b_c = (mt.clone() - ms) * &l * &b21 * &ah / &den;
    let c_c = (F::one() - &h) * &q.q(mu, lift) * &bracket(ms, mt, ms) / &den;
    Ok(QHCoefficients::from_abc(q, a_c, b_c, c_c, ms, lift))
}

fn m1_at(q: &QHStructure, r: &Rational) -> Result<Rational> {
    q.m1.eval(r).ok_or_else(|| MprError::DegenerateAtPoint(r.to_string()))
}

pub fn qh_closed_form_eval(
    q: &QHStructure,
    s: &Rational,
    t: &Rational,
    u: &Rational,
) -> Result<QHCoefficients<Rational>> {
    qh_closed_form(q, &m1_at(q, s)?, &m1_at(q, t)?, &m1_at(q, u)?, &Rational::clone)
}

/// Rows of the 3x3 system applied to a candidate solution, minus the right side.
fn identity_residuals<F: Field>(m: &Matrix<F>, rhs: &[F], x: &[F]) -> Result<Vec<F>> {
    Ok(m.mul_vec(x)?.into_iter().zip(rhs).map(|(l, r)| l - r).collect())
}

/// Project `M_2(t)` on `span{M_2(s), M_1(s)M_1(u), M_2(u), M_1(s), M_1(u), 1}` using
/// the joint moments of the family.
fn projection(fam: &MartingaleFamily, s: &Rational, t: &Rational, u: &Rational) -> Result<Vec<Rational>> {
    let basis: Vec<Vec<(Rational, usize)>> = vec![
        vec![(s.clone(), 2)],
        vec![(s.clone(), 1), (u.clone(), 1)],
        vec![(u.clone(), 2)],
        vec![(s.clone(), 1)],
        vec![(u.clone(), 1)],
        vec![],
    ];
    let tests: Vec<Vec<(Rational, usize)>> = vec![
        vec![],
        vec![(s.clone(), 1)],
        vec![(u.clone(), 1)],
        vec![(s.clone(), 1), (u.clone(), 1)],
        vec![(s.clone(), 2)],
        vec![(u.clone(), 2)],
    ];
    let joined = |a: &[(Rational, usize)], b: &[(Rational, usize)]| [a, b].concat();
    let mut g = Matrix::zeros(6, 6);
    let mut rhs = Vec::with_capacity(6);
    for (i, test) in tests.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            g.set(i, j, fam.joint_moment(&joined(test, b))?);
        }
        rhs.push(fam.joint_moment(&joined(test, &[(t.clone(), 2)]))?);
    }
    solve_linear(&g, &rhs)
}

/// Solve for the quadratic-harness coefficients at a concrete triple
/// `s ≤ t ≤ u` and cross-check them.
pub fn qh_solve(fam: &MartingaleFamily, s: &Rational, t: &Rational, u: &Rational) -> Result<CheckReport> {
    if !(s <= t && t <= u) {
        return Err(MprError::TimeOrderViolation(format!("need s <= t <= u, got ({s}, {t}, {u})")));
    }
    let (q, _) = qh_structure_constants(fam)?;
    let (ms, mt, mu) = (m1_at(&q, s)?, m1_at(&q, t)?, m1_at(&q, u)?);
    if ms == mu {
        return Err(MprError::DegenerateTriple(format!("m_1(s) = m_1(u) = {ms}")));
    }
    let lift = Rational::clone;
    let mut report = CheckReport::new("qh");
    report.note(fam.label());
    report.constant("triple", format!("{s},{t},{u}"));
    report.constant("m_1(s), m_1(t), m_1(u)", format!("{ms}, {mt}, {mu}"));
    q.report_into(&mut report);
    report.note(
        "closed-form parameters read as a21 = alpha_{2,1}, b21 = beta_{2,1}, a12 = alpha_{1,2}, \
         a11 = alpha_{1,1}, b11 = beta_{1,1}",
    );

    let (mm, rhs) = mm_system(&q, &ms, &mt, &mu, &lift)?;
    let det = mm.determinant()?;
    report.constant("det Mm", det.to_string());
    report.constant("det Mm closed form", mm_determinant_printed(&q, &ms, &mu, &lift).to_string());
    if det.is_zero() {
        report.verdict = Verdict::Degenerate;
        report.note("Mm determinant vanishes at this triple; coefficients are not determined");
        return Ok(report);
    }
    let x = solve_linear(&mm, &rhs)?;
    let coef = QHCoefficients::from_abc(&q, x[0].clone(), x[1].clone(), x[2].clone(), &ms, &lift);
    for (k, v) in coef.named() {
        report.constant(k, v.to_string());
    }
    let (h, _) = super::harness_coefficients(&ms, &mt, &mu)?;
    report.constant("h", h.to_string());

    for (i, r) in identity_residuals(&mm, &rhs, &x)?.iter().enumerate() {
        report.residual(format!("identity {}", i + 1), r.to_string(), r.is_zero());
    }
    let r = &coef.b * &ms + &coef.f;
    report.residual("B m_1(s) + F", r.to_string(), r.is_zero());

    if fam.order() >= 4 {
        match projection(fam, s, t, u) {
            Ok(p) => {
                for ((name, v), w) in coef.named().iter().zip(&p) {
                    let d = w - *v;
                    report.residual(format!("projection {name}"), d.to_string(), d.is_zero());
                }
            }
            Err(e) => report.note(format!("projection cross-check unavailable: {e}")),
        }
    } else {
        report.note("projection cross-check needs N >= 4");
    }

    match qh_closed_form(&q, &ms, &mt, &mu, &lift) {
        Ok(cf) => {
            let mut differs = Vec::new();
            for ((name, v), (_, w)) in coef.named().iter().take(3).zip(cf.named()) {
                report.constant(format!("closed-form {name}"), w.to_string());
                let d = w - *v;
                report.constant(format!("closed-form discrepancy {name}"), d.to_string());
                if !d.is_zero() {
                    differs.push(format!("{name}: closed form {w} vs solved {v}"));
                }
            }
            if !differs.is_empty() {
                report.note(format!("closed-form discrepancy: {}", differs.join("; ")));
            }
        }
        Err(e) => report.note(format!("closed form not evaluable: {e}")),
    }
    let dd = [
        ("D", coef.d.clone() + &(q.beta11.clone() * &coef.b)),
        ("E", coef.e.clone() + &(q.alpha11.clone() * &ms * &coef.b)),
        ("F", coef.f.clone() + &(coef.b.clone() * &ms)),
    ];
    for (name, d) in dd {
        report.residual(format!("closed-form {name} leg"), d.to_string(), d.is_zero());
    }
    Ok(report)
}

/// The 3x3 system solved identically in the symbols `m_s, m_t, m_u`.
pub fn qh_solve_symbolic(fam: &MartingaleFamily) -> Result<(QHCoefficients<ThreePointFunction>, CheckReport)> {
    let (q, _) = qh_structure_constants(fam)?;
    let (ms, mt, mu) = (sym_m_s(), sym_m_t(), sym_m_u());
    let (mm, rhs) = mm_system(&q, &ms, &mt, &mu, &lift3)?;
    let x = solve_linear(&mm, &rhs)?;
    let coef = QHCoefficients::from_abc(&q, x[0].clone(), x[1].clone(), x[2].clone(), &ms, &lift3);
    let v = &THREE_POINT_VARS;
    let mut report = CheckReport::new("qh-symbolic");
    report.note(fam.label());
    q.report_into(&mut report);
    report.constant("det Mm", mm.determinant()?.to_expr(v));
    for (k, c) in coef.named() {
        report.constant(k, c.to_expr(v));
    }
    for (i, r) in identity_residuals(&mm, &rhs, &x)?.iter().enumerate() {
        report.residual(format!("identity {}", i + 1), r.to_expr(v), r.is_zero());
    }
    let r = coef.b.clone() * &ms + &coef.f;
    report.residual("B m_s + F", r.to_expr(v), r.is_zero());
    if let Ok(cf) = qh_closed_form(&q, &ms, &mt, &mu, &lift3) {
        for ((name, a), (_, b)) in coef.named().iter().take(3).zip(cf.named()) {
            report.constant(format!("closed-form discrepancy {name}"), (b.clone() - *a).to_expr(v));
        }
    }
    Ok((coef, report))
}

/// `M_2 / m_2` as a reversed martingale, together with the determinant of the
/// 3x3 system against its closed-form expansion.
pub fn check_m2_reversed(fam: &MartingaleFamily) -> Result<CheckReport> {
    if fam.order() < 2 {
        return Err(MprError::OrderOutOfRange { requested: 2, available: fam.order() });
    }
    let mut report = reversed_report(fam, 2, fam.order())?;
    report.check = "m2-reversed".into();
    report.note(fam.label());
    match qh_structure_constants(fam) {
        Ok((q, _)) => {
            let v = &THREE_POINT_VARS;
            let (ms, mt, mu) = (sym_m_s(), sym_m_t(), sym_m_u());
            let (mm, _) = mm_system(&q, &ms, &mt, &mu, &lift3)?;
            let det = mm.determinant()?;
            let printed = mm_determinant_printed(&q, &ms, &mu, &lift3);
            report.constant("det Mm", det.to_expr(v));
            report.constant("det Mm closed form", printed.to_expr(v));
            let one = Rational::from_int(1);
            let four = Rational::from_int(4);
            let at = |f: &ThreePointFunction| eval_three_point(f, &one, &one, &four).map(|r| r.to_string());
            report.constant("det Mm at (m_s, m_u) = (1, 4)", at(&det).unwrap_or_else(|| "undefined".into()));
            report.constant(
                "det Mm closed form at (m_s, m_u) = (1, 4)",
                at(&printed).unwrap_or_else(|| "undefined".into()),
            );
            if det.is_zero() {
                report.note("Mm determinant vanishes identically");
            }
            if det != printed {
                let diff = det - printed;
                report.note(format!("closed-form determinant expansion differs by {}", diff.to_expr(v)));
            }
        }
        Err(e) => report.note(format!("determinant not evaluated: {e}")),
    }
    Ok(report)
}
