use mpr_core::checks::{check_harness, check_independent_increments, qh_solve_symbolic, HarnessLevel};
use mpr_core::model::{levy_check, parse_model};
use mpr_core::orthopoly::marginal_orthogonal;
use mpr_core::symbols::{lift3, rational, sym_m_s, sym_m_u};
use mpr_core::{Builtin, Field, MartingaleFamily, Poly, Verdict};
use num_traits::Zero;

const GAMMA_FILE: &str = "\
# Gamma subordinator, unit scale: rising factorials of t
model \"gamma-file\"
g[1] = t
g[2] = t^2 + t
g[3] = t^3 + 3*t^2 + 2*t
g[4] = t^4 + 6*t^3 + 11*t^2 + 6*t
g[5] = t^5 + 10*t^4 + 35*t^3 + 50*t^2 + 24*t
g[6] = t^6 + 15*t^5 + 85*t^4 + 225*t^3 + 274*t^2 + 120*t
";

#[test]
fn model_file_matches_builtin() {
    let m = parse_model(GAMMA_FILE).unwrap();
    assert_eq!(m.name(), "gamma-file");
    assert_eq!(m.moments(), Builtin::Gamma.model(6).unwrap().moments());
    let fam = MartingaleFamily::build(m, 3).unwrap();
    assert!(fam.is_certified());
    assert_eq!(check_independent_increments(&fam).unwrap().verdict, Verdict::Pass);
    assert!(levy_check(fam.model(), 6).unwrap().passed());
}

#[test]
fn gamma_marginal_is_laguerre() {
    // monic Laguerre for shape t = 2: L_2 = x^2 - 2(t + 1) x + t(t + 1)
    let sys = marginal_orthogonal(&Builtin::Gamma.model(6).unwrap(), &rational(2), 2).unwrap();
    assert_eq!(sys.polys[2], Poly::from_coeffs(vec![rational(6), rational(-6), rational(1)]));
    let (b, c) = sys.recurrence();
    // b_n = 2n + t, c_n = n (n + t - 1)
    assert_eq!(b, vec![rational(2), rational(4)]);
    assert_eq!(c, vec![rational(2), rational(6)]);
}

#[test]
fn wiener_symbolic_determinant() {
    let fam = MartingaleFamily::build(Builtin::Wiener.model(8).unwrap(), 4).unwrap();
    let (coef, report) = qh_solve_symbolic(&fam).unwrap();
    let d = sym_m_u() - sym_m_s();
    let expected = lift3(&rational(2)) * d.clone() * d.clone() * d;
    assert_eq!(report.get("det Mm"), Some(expected.to_expr(&mpr_core::symbols::THREE_POINT_VARS).as_str()));
    assert!(coef.d.is_zero() && coef.e.is_zero());
}

#[test]
fn poisson_harness_level() {
    let fam = MartingaleFamily::build(Builtin::Poisson(rational(1)).model(10).unwrap(), 4).unwrap();
    let r = check_harness(&fam).unwrap();
    let level = HarnessLevel::from_report(&r);
    assert_ne!(level, Some(HarnessLevel::SufficientPass));
}
