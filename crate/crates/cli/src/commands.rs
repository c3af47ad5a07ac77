use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use mpr_core::checks::{
    check_harness, check_independent_increments, check_m2_reversed, check_orthogonality, check_reversed_martingale,
    constant_gram_schmidt, harness_coefficients_at, qh_solve,
};
use mpr_core::field::parse_rational;
use mpr_core::model::{levy_check, parse_model};
use mpr_core::orthopoly::{compare_families, marginal_orthogonal, transitional_orthogonal, FamilyRelation};
use mpr_core::symbols::STATE_TWO_TIME_VARS;
use mpr_core::{Builtin, CheckReport, MartingaleFamily, MomentModel, MprError, Rational, Verdict};
use mpr_simkit::{mc_martingale_test, mc_moment_check, sample_paths};
use serde_json::Value;

use crate::config::{McConfig, ModelSource, OrthoConfig, RunConfig};
use crate::output::{exit_code, print_table, write_json, Bundle, SummaryEntry};
use crate::{BuildArgs, CheckArgs, InputError, ModelArgs, OrthoArgs, ReportArgs, SimArgs};

type Res<T> = std::result::Result<T, InputError>;

/// Checkers in dependency order.
pub const ORDER: [&str; 8] = ["ii", "levy", "reversed", "ortho", "cgs", "harness", "qh", "m2-reversed"];

fn upstream(check: &str) -> &'static [&'static str] {
    match check {
        "qh" => &["certify", "harness"],
        "m2-reversed" => &["certify", "qh"],
        _ => &["certify"],
    }
}

struct Loaded {
    model: MomentModel,
    source: ModelSource,
    builtin: Option<Builtin>,
}

fn load_model(args: &ModelArgs, builtin_order: usize) -> Res<Loaded> {
    if args.n < 2 {
        return Err(InputError(format!("-N must be at least 2 (got {})", args.n)));
    }
    let loaded = match (&args.model, &args.model_file) {
        (Some(name), None) => {
            let b: Builtin = name.parse()?;
            Loaded {
                model: b.model(builtin_order)?,
                source: ModelSource::Builtin { name: name.clone() },
                builtin: Some(b),
            }
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            let model = parse_model(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            Loaded { model, source: ModelSource::File { path: path.display().to_string() }, builtin: None }
        }
        _ => return Err(InputError("exactly one of --model or --model-file is required".into())),
    };
    if loaded.model.max_order() < args.n {
        return Err(InputError(format!(
            "model provides moments up to order {}, -N {} requested",
            loaded.model.max_order(),
            args.n
        )));
    }
    Ok(loaded)
}

fn base_config(command: &str, args: &ModelArgs, loaded: &Loaded) -> RunConfig {
    RunConfig {
        command: command.into(),
        model: loaded.source.clone(),
        n: Some(args.n),
        model_order: Some(loaded.model.max_order()),
        checks: Vec::new(),
        triples: Vec::new(),
        mc: None,
        ortho: None,
        out: args.out.as_ref().map(|p| p.display().to_string()),
        format: "json".into(),
    }
}

fn rational(s: &str) -> Res<Rational> {
    parse_rational(s).ok_or_else(|| InputError(format!("`{s}` is not a rational p/q")))
}

fn positive(s: &str) -> Res<Rational> {
    let r = rational(s)?;
    if r <= Rational::from_integer(0.into()) {
        return Err(InputError(format!("time `{s}` must be positive")));
    }
    Ok(r)
}

fn three(s: &str) -> Res<[String; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, c] => Ok([a.to_string(), b.to_string(), c.to_string()]),
        _ => Err(InputError(format!("`{s}`: expected three comma-separated values"))),
    }
}

fn parse_triple(s: &str) -> Res<([String; 3], [Rational; 3])> {
    let raw = three(s)?;
    let v = [positive(&raw[0])?, positive(&raw[1])?, positive(&raw[2])?];
    if !(v[0] < v[1] && v[1] < v[2]) {
        return Err(InputError(format!("triple `{s}` must satisfy s < t < u")));
    }
    Ok((raw, v))
}

fn certify_report(fam: &MartingaleFamily) -> CheckReport {
    let mut r = CheckReport::new("certify");
    r.constant("N", fam.order().to_string());
    r.constant("canonical", fam.is_canonical().to_string());
    for k in 0..=fam.order() {
        let res = fam.certification_residual(k);
        r.residual(format!("n={k}"), res.to_expr(&STATE_TWO_TIME_VARS), res.is_zero());
    }
    r
}

/// Map checker errors onto verdicts; capacity errors are input errors
/// unless the checker was pulled in by `--all`.
fn settle(name: &str, res: mpr_core::Result<CheckReport>, lenient: bool) -> Res<CheckReport> {
    let degenerate = |e: MprError| {
        let mut r = CheckReport::new(name);
        r.verdict = Verdict::Degenerate;
        r.note(e.to_string());
        r
    };
    match res {
        Ok(r) => Ok(r),
        Err(
            e @ (MprError::HypothesisViolated(_)
            | MprError::DegenerateTriple(_)
            | MprError::DegenerateAtPoint(_)
            | MprError::SingularSystem
            | MprError::DivisionByZeroFunction
            | MprError::MomentInfeasible { .. }),
        ) => Ok(degenerate(e)),
        Err(e @ MprError::NotConstant { .. }) => {
            let mut r = CheckReport::new(name);
            r.verdict = Verdict::Fail;
            r.note(e.to_string());
            Ok(r)
        }
        Err(e @ (MprError::InsufficientMoments { .. } | MprError::OrderOutOfRange { .. })) if lenient => {
            Ok(CheckReport::not_applicable(name, e.to_string()))
        }
        Err(e) => Err(InputError(format!("{name}: {e}"))),
    }
}

fn worst(a: Verdict, b: Verdict) -> Verdict {
    let rank = |v: Verdict| match v {
        Verdict::Pass => 0,
        Verdict::NotApplicable => 1,
        Verdict::Degenerate => 2,
        Verdict::Fail => 3,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

fn detail(r: &CheckReport) -> String {
    if r.check.starts_with("qh") && r.passed() {
        return ["A", "B", "C", "D", "E", "F"]
            .iter()
            .filter_map(|k| r.get(k).map(|v| format!("{k}={v}")))
            .collect::<Vec<_>>()
            .join(" ");
    }
    if let Some(level) = r.get("level") {
        return level.to_string();
    }
    if r.passed() {
        return String::new();
    }
    r.residuals
        .iter()
        .find(|(_, v)| v.as_str() != "0")
        .map(|(k, v)| format!("{k} = {v}"))
        .or_else(|| r.notes.first().cloned())
        .unwrap_or_default()
}

pub fn build(a: BuildArgs, stdout: &mut dyn Write) -> Res<i32> {
    let args = &a.model;
    let loaded = load_model(args, 2 * args.n + 2)?;
    let cfg = base_config("build", args, &loaded);
    let fam = match MartingaleFamily::build(loaded.model, args.n) {
        Ok(f) => f,
        Err(e @ MprError::CertificationFailed { .. }) => {
            let mut r = CheckReport::new("certify");
            r.verdict = Verdict::Fail;
            r.note(e.to_string());
            let mut bundle = Bundle::new(cfg)?;
            let d = detail(&r);
            bundle.add("certify", r.verdict, d, &r)?;
            return Ok(bundle.finish(stdout)?);
        }
        Err(e) => return Err(e.into()),
    };
    let mut bundle = Bundle::new(cfg)?;
    let r = certify_report(&fam);
    bundle.add("certify", r.verdict, detail(&r), &r)?;
    match &args.out {
        Some(_) => bundle.add("family", r.verdict, fam.label(), &fam.to_json_value())?,
        None => writeln!(stdout, "{}", fam.to_json())?,
    }
    Ok(bundle.finish(stdout)?)
}

fn requested(a: &CheckArgs) -> Res<Vec<&'static str>> {
    let mut want: Vec<String> = a.checks.iter().map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect();
    if a.ortho {
        want.push("ortho".into());
    }
    if a.all || want.is_empty() {
        return Ok(ORDER.to_vec());
    }
    if let Some(bad) = want.iter().find(|c| !ORDER.contains(&c.as_str())) {
        return Err(InputError(format!("unknown check `{bad}` (known: {})", ORDER.join(", "))));
    }
    Ok(ORDER.iter().copied().filter(|c| want.iter().any(|w| w == c)).collect())
}

struct Pipeline {
    fam: MartingaleFamily,
    n: usize,
    lenient: bool,
    ortho: Option<mpr_core::Result<CheckReport>>,
    working: Option<Option<(MartingaleFamily, &'static str)>>,
}

impl Pipeline {
    fn ortho(&mut self) -> mpr_core::Result<CheckReport> {
        self.ortho.get_or_insert_with(|| check_orthogonality(&self.fam, self.n)).clone()
    }

    /// The canonical family when orthogonal, else its constant
    /// Gram–Schmidt recombination when one exists.
    fn working(&mut self) -> Option<(MartingaleFamily, &'static str)> {
        if self.working.is_none() {
            let orthogonal = matches!(self.ortho(), Ok(r) if r.passed());
            let w = if orthogonal {
                Some((self.fam.clone(), "family: canonical"))
            } else {
                constant_gram_schmidt(&self.fam, self.n)
                    .ok()
                    .map(|g| (g.family, "family: constant Gram-Schmidt recombination of the canonical family"))
            };
            self.working = Some(w);
        }
        self.working.clone().flatten()
    }

    fn reversed(&self) -> Res<CheckReport> {
        let mut out = CheckReport::new("reversed");
        for n in 1..=self.n {
            let r = settle("reversed", check_reversed_martingale(&self.fam, n), self.lenient)?;
            out.verdict = worst(out.verdict, r.verdict);
            out.constants.extend(r.constants);
            out.residuals.extend(r.residuals);
            out.notes.extend(r.notes.into_iter().map(|x| format!("n={n}: {x}")));
        }
        Ok(out)
    }
}

pub fn check(a: CheckArgs, stdout: &mut dyn Write) -> Res<i32> {
    let checks = requested(&a)?;
    let mut triples = a.triples.iter().map(|t| parse_triple(t)).collect::<Res<Vec<_>>>()?;
    if triples.is_empty() && checks.iter().any(|c| *c == "qh" || *c == "harness") {
        triples.push(parse_triple("1,2,4")?);
    }
    let args = &a.model;
    let loaded = load_model(args, 2 * args.n + 2)?;
    let mut cfg = base_config("check", args, &loaded);
    cfg.checks = checks.iter().map(|c| c.to_string()).collect();
    cfg.triples = triples.iter().map(|(raw, _)| raw.clone()).collect();
    let mut bundle = Bundle::new(cfg)?;

    let fam = match MartingaleFamily::build(loaded.model, args.n) {
        Ok(f) => f,
        Err(e @ MprError::CertificationFailed { .. }) => {
            let mut r = CheckReport::new("certify");
            r.verdict = Verdict::Fail;
            r.note(e.to_string());
            bundle.add("certify", Verdict::Fail, detail(&r), &r)?;
            for c in &checks {
                let na = CheckReport::not_applicable(*c, "skipped: upstream `certify` failed");
                bundle.add(c, na.verdict, detail(&na), &na)?;
            }
            return Ok(bundle.finish(stdout)?);
        }
        Err(e) => return Err(e.into()),
    };

    let mut done: BTreeMap<&str, Verdict> = BTreeMap::new();
    let cert = certify_report(&fam);
    done.insert("certify", cert.verdict);
    bundle.add("certify", cert.verdict, detail(&cert), &cert)?;

    let mut p = Pipeline { fam, n: args.n, lenient: a.all, ortho: None, working: None };
    for &c in &checks {
        if let Some(dep) = upstream(c).iter().find(|d| done.get(*d) == Some(&Verdict::Fail)) {
            let na = CheckReport::not_applicable(c, format!("skipped: upstream `{dep}` failed"));
            done.insert(c, na.verdict);
            bundle.add(c, na.verdict, detail(&na), &na)?;
            continue;
        }
        let reports: Vec<CheckReport> = match c {
            "ii" => vec![settle(c, check_independent_increments(&p.fam), p.lenient)?],
            "levy" => vec![settle(c, levy_check(p.fam.model(), p.n), p.lenient)?],
            "reversed" => vec![p.reversed()?],
            "ortho" => vec![settle(c, p.ortho(), p.lenient)?],
            "cgs" => vec![settle(c, constant_gram_schmidt(&p.fam, p.n).map(|g| g.report), p.lenient)?],
            _ => {
                let lenient = p.lenient;
                match p.working() {
                    None => vec![CheckReport::not_applicable(c, "no orthogonal family: constant Gram-Schmidt failed")],
                    Some((w, which)) => {
                        let mut out = match c {
                            "harness" => {
                                let mut r = settle(c, check_harness(&w), lenient)?;
                                if let Ok(m1) = w.second_moment(1) {
                                    for (raw, [s, t, u]) in &triples {
                                        if let Ok((x, y)) = harness_coefficients_at(&m1, s, t, u) {
                                            let at = raw.join(",");
                                            r.constant(format!("a at ({at})"), x.to_string());
                                            r.constant(format!("b at ({at})"), y.to_string());
                                        }
                                    }
                                }
                                vec![r]
                            }
                            "qh" => triples
                                .iter()
                                .map(|(raw, [s, t, u])| {
                                    let mut r = settle(c, qh_solve(&w, s, t, u), lenient)?;
                                    r.check = format!("qh ({})", raw.join(","));
                                    Ok(r)
                                })
                                .collect::<Res<Vec<_>>>()?,
                            _ => vec![settle(c, check_m2_reversed(&w), lenient)?],
                        };
                        for r in &mut out {
                            r.note(which);
                        }
                        out
                    }
                }
            }
        };
        let mut agg = Verdict::Pass;
        for r in &reports {
            agg = worst(agg, r.verdict);
            bundle.add(&r.check.clone(), r.verdict, detail(r), r)?;
        }
        done.insert(c, agg);
    }
    Ok(bundle.finish(stdout)?)
}

fn relation_name(r: &FamilyRelation) -> &'static str {
    match r {
        FamilyRelation::Equal => "equal",
        FamilyRelation::ConstantRecombination(_) => "constant-recombination",
        FamilyRelation::Unrelated => "unrelated",
    }
}

pub fn ortho(a: OrthoArgs, stdout: &mut dyn Write) -> Res<i32> {
    let args = &a.model;
    let k_marginal = a.k.unwrap_or(args.n);
    let k_transitional = a.transitional_degree.unwrap_or(args.n / 2);
    let times = if a.times.is_empty() && a.transitional.is_empty() { vec!["1".to_string()] } else { a.times.clone() };
    let marg = times.iter().map(|t| Ok((t.clone(), positive(t)?))).collect::<Res<Vec<_>>>()?;
    let trans = a
        .transitional
        .iter()
        .map(|x| {
            let raw = three(x)?;
            let (s, y, t) = (positive(&raw[0])?, rational(&raw[1])?, positive(&raw[2])?);
            if s >= t {
                return Err(InputError(format!("transitional `{x}` must satisfy s < t")));
            }
            Ok((raw, s, y, t))
        })
        .collect::<Res<Vec<_>>>()?;
    if !trans.is_empty() && 2 * k_transitional > args.n {
        return Err(InputError(format!("transitional degree {k_transitional} needs -N at least {}", 2 * k_transitional)));
    }
    let loaded = load_model(args, (2 * args.n + 2).max(2 * k_marginal))?;
    let mut cfg = base_config("ortho", args, &loaded);
    cfg.ortho = Some(OrthoConfig {
        times: marg.iter().map(|(raw, _)| raw.clone()).collect(),
        transitional: trans.iter().map(|(raw, ..)| raw.clone()).collect(),
        k_marginal,
        k_transitional,
    });
    let mut bundle = Bundle::new(cfg)?;
    let model = loaded.model.clone();
    let fam = MartingaleFamily::build(loaded.model, args.n)?;

    let emit = |bundle: &mut Bundle, name: String, res: mpr_core::Result<(Value, String)>| -> Res<()> {
        match res {
            Ok((v, d)) => {
                bundle.add(&name, Verdict::Pass, d, &v)?;
            }
            Err(e @ (MprError::MomentInfeasible { .. } | MprError::HypothesisViolated(_) | MprError::DegenerateAtPoint(_))) => {
                let mut r = CheckReport::new(name.clone());
                r.verdict = Verdict::Degenerate;
                r.note(e.to_string());
                bundle.add(&name, r.verdict, e.to_string(), &r)?;
            }
            Err(e) => return Err(InputError(format!("{name}: {e}"))),
        }
        Ok(())
    };
    for (raw, t) in &marg {
        let res = marginal_orthogonal(&model, t, k_marginal).and_then(|sys| {
            let mut v = sys.to_json_value_checked()?;
            if k_marginal <= fam.order() {
                let members = fam.members_at(t)?;
                let rel = compare_families(&sys.polys, &members[..=k_marginal]);
                v["relation_to_family"] = Value::from(relation_name(&rel));
            }
            Ok((v, top_degree(&sys)))
        });
        emit(&mut bundle, format!("marginal t={raw}"), res)?;
    }
    for (raw, s, y, t) in &trans {
        let res = transitional_orthogonal(&fam, s, y, t, k_transitional)
            .and_then(|sys| Ok((sys.to_json_value_checked()?, top_degree(&sys))));
        emit(&mut bundle, format!("transitional s={} y={} t={}", raw[0], raw[1], raw[2]), res)?;
    }
    Ok(bundle.finish(stdout)?)
}

fn top_degree(sys: &mpr_core::orthopoly::OrthogonalSystem) -> String {
    sys.polys.last().map(|p| format!("p_{} = {}", sys.degree(), p.to_expr(&["x"]))).unwrap_or_default()
}

trait ToValue {
    fn to_json_value_checked(&self) -> mpr_core::Result<Value>;
}

impl ToValue for mpr_core::orthopoly::OrthogonalSystem {
    fn to_json_value_checked(&self) -> mpr_core::Result<Value> {
        serde_json::to_value(self.to_json_value()).map_err(|e| MprError::Malformed(e.to_string()))
    }
}

pub fn sim(a: SimArgs, stdout: &mut dyn Write) -> Res<i32> {
    let args = &a.model;
    if a.paths == 0 {
        return Err(InputError("--paths must be at least 1".into()));
    }
    if !(a.zmax > 0.0 && a.zmax.is_finite()) {
        return Err(InputError(format!("--zmax must be positive (got {})", a.zmax)));
    }
    let grid = a.grid.iter().map(|t| positive(t)).collect::<Res<Vec<_>>>()?;
    if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(InputError("--grid needs at least two strictly increasing times".into()));
    }
    let loaded = load_model(args, (2 * args.n + 2).max(2 * (args.n + a.k)))?;
    let Some(process) = loaded.builtin.clone() else {
        return Err(InputError("sim needs a builtin --model; model files carry no path law".into()));
    };
    let mut cfg = base_config("sim", args, &loaded);
    cfg.mc = Some(McConfig {
        n_paths: a.paths,
        seed: a.seed,
        z_max: a.zmax,
        grid: a.grid.clone(),
        k_max: a.k,
        workers: a.workers,
    });
    let mut bundle = Bundle::new(cfg)?;
    let model = loaded.model.clone();
    let fam = MartingaleFamily::build(loaded.model, args.n)?;
    let batch = sample_paths(&process, &grid, a.paths, a.seed, a.workers)?;
    let mut results = Vec::new();
    for w in grid.windows(2) {
        for n in 1..=args.n {
            results.extend(mc_martingale_test(&fam, &batch, n, &w[0], &w[1], a.k, a.zmax)?);
        }
    }
    let last = grid.last().expect("nonempty grid");
    for n in 1..=args.n.min(model.max_order() / 2) {
        results.push(mc_moment_check(&model, &batch, n, last, a.zmax)?);
    }
    for r in &results {
        bundle.add(&r.stat, r.verdict, format!("z={:.3}", r.z), r)?;
    }
    Ok(bundle.finish(stdout)?)
}

fn read_reports(dir: &Path) -> Res<Vec<SummaryEntry>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| InputError(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != "summary.json"))
        .collect();
    files.sort();
    files
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| InputError(format!("{}: {e}", p.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", p.display())))?;
            let check = v["check"].as_str().or_else(|| v["stat"].as_str());
            let verdict = serde_json::from_value::<Verdict>(v["verdict"].clone()).ok();
            match (check, verdict) {
                (Some(c), Some(verdict)) => Ok(SummaryEntry {
                    check: c.to_string(),
                    verdict,
                    detail: serde_json::from_value::<CheckReport>(v.clone()).map(|r| detail(&r)).unwrap_or_default(),
                    file: p.file_name().map(|n| n.to_string_lossy().into_owned()),
                }),
                _ => Err(InputError(format!("{}: not a report (needs `check` and `verdict`)", p.display()))),
            }
        })
        .collect()
}

pub fn report(a: ReportArgs, stdout: &mut dyn Write) -> Res<i32> {
    let entries = read_reports(&a.dir)?;
    if entries.is_empty() {
        return Err(InputError(format!("{}: no reports found", a.dir.display())));
    }
    let out = a.out.clone().unwrap_or_else(|| a.dir.clone());
    let config = RunConfig {
        command: "report".into(),
        model: ModelSource::Reports { dir: a.dir.display().to_string() },
        n: None,
        model_order: None,
        checks: Vec::new(),
        triples: Vec::new(),
        mc: None,
        ortho: None,
        out: Some(out.display().to_string()),
        format: "json".into(),
    };
    let code = exit_code(entries.iter().map(|e| &e.verdict));
    std::fs::create_dir_all(&out)?;
    let summary = crate::Summary { config, exit_code: code, reports: entries };
    write_json(&out.join("summary.json"), &serde_json::to_value(&summary)?)?;
    print_table(&summary.reports, stdout)?;
    writeln!(stdout, "exit {code}")?;
    Ok(code)
}
