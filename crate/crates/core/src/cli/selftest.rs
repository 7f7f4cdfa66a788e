//! Built-in suite, one entry per acceptance criterion.

use serde_json::{json, Value};

use super::report::{Check, Section};
use super::spec::{Problem, Tolerances};
use super::tasks::{self, geometry, Mutation};
use super::CliError;
use crate::chern::{max_abs_at, Geometry};
use crate::classify::{
    first_prolongation_dim, kosambi_invariants, special_coordinate_conditions, unimodular_test, Mode, Status,
};
use crate::natjets::{random_automorphism, random_triangular_automorphism};
use crate::riemann::MetricField;
use crate::sode::random::{random_affine_sode, random_points, random_sode, SampleBox};
use crate::sode::{derivative_oracle, derivative_pairs, eigenstructure, SodeSystem};
use crate::symexpr::{Expr, Rational};

fn problem(sode: SodeSystem, count: usize, seed: u64, b: &SampleBox) -> Problem {
    let points = random_points(sode.n(), count, seed, b);
    Problem {
        f_text: sode.f().iter().map(ToString::to_string).collect(),
        sode,
        metric: None,
        u: None,
        automorphism: None,
        field: None,
        points,
        tolerances: Tolerances::default(),
        seed,
        tasks: Vec::new(),
    }
}

fn metric_problem(m: MetricField, count: usize, seed: u64, b: &SampleBox) -> Result<Problem, CliError> {
    let mut pb = problem(SodeSystem::new(m.vars().clone(), vec![Expr::zero(); m.n()])?, count, seed, b);
    pb.metric = Some(m);
    Ok(pb)
}

struct Criterion {
    id: u32,
    name: &'static str,
    case: String,
    checks: Vec<Check>,
}

impl Criterion {
    fn new(id: u32, name: &'static str) -> Criterion {
        log::info!("criterion {id} ({name})");
        Criterion { id, name, case: String::new(), checks: Vec::new() }
    }

    /// Label attached to the checks pushed from now on.
    fn case(&mut self, label: impl Into<String>) {
        self.case = label.into();
    }

    fn push(&mut self, mut c: Check) {
        if !self.case.is_empty() {
            c.case = Some(self.case.clone());
        }
        self.checks.push(c);
    }

    fn add(&mut self, s: Section, keys: Option<&[&str]>) {
        for c in s.checks {
            if keys.is_none_or(|k| k.contains(&c.key)) {
                self.push(c);
            }
        }
    }

    fn into_value(self) -> Value {
        let pass = self.checks.iter().all(|c| c.pass);
        json!({"id": self.id, "name": self.name, "checks": self.checks, "pass": pass})
    }
}

fn flat(c: &mut Criterion) -> Result<(), CliError> {
    for n in 1..=3 {
        c.case(format!("n={n}"));
        let g = Geometry::new(SodeSystem::flat(n));
        let kos = kosambi_invariants(&g);
        let tail_zero = kos.charpoly[1..].iter().all(Expr::is_zero);
        c.push(Check::equal("flat_symbolic", g.is_flat() && tail_zero, true));
        let mut all: Vec<Expr> = g.split.p.iter().flatten().cloned().collect();
        all.extend(g.split.t.iter().flatten().flatten().cloned());
        all.extend(g.curvature.a.iter().flatten().flatten().cloned());
        all.extend(g.curvature.b.iter().flatten().flatten().flatten().cloned());
        all.extend(g.curvature.r.iter().flatten().flatten().flatten().cloned());
        all.extend(kos.charpoly[1..].iter().cloned());
        let pts = random_points(n, 20, 100 + n as u64, &SampleBox::default());
        c.push(Check::max("flat_numeric", max_abs_at(&g.sode, &all, &pts)?, 1e-12));
    }
    Ok(())
}

fn oscillator() -> Result<SodeSystem, CliError> {
    Ok(SodeSystem::parse(1, &["-x1-1.0*v1"])?)
}

fn oscillator_checks(c: &mut Criterion, m: Mutation) -> Result<(), CliError> {
    let s = oscillator()?;
    let g = geometry(&s, m);
    let three_quarters = Rational::new(3.into(), 4.into());
    let p_exact = g.split.p[0][0].as_const() == Some(&three_quarters);
    c.push(Check::equal("oscillator_P", p_exact, true));
    let cp = kosambi_invariants(&g).charpoly;
    let exact = cp.len() == 2 && cp[0].is_one() && cp[1].as_const() == Some(&three_quarters);
    c.push(Check::equal("oscillator_charpoly", exact, true));
    Ok(())
}

fn classifier(c: &mut Criterion) -> Result<(), CliError> {
    let pts1 = random_points(1, 10, 5, &SampleBox::default());
    for seed in 1..=3 {
        c.case(format!("affine seed={seed}"));
        let g = Geometry::new(random_affine_sode(2, seed));
        let pts = random_points(2, 10, seed, &SampleBox::default());
        let f = special_coordinate_conditions(&g, Mode::Symbolic, &pts, 1e-9)?;
        c.push(Check::equal("affine_condition_a", f.linearizable_necessary.status, Status::SymbolicZero));
    }
    c.case("F=v1^3");
    let cubic = SodeSystem::parse(1, &["v1^3"])?;
    let g = Geometry::new(cubic.clone());
    let f = special_coordinate_conditions(&g, Mode::Symbolic, &pts1, 1e-9)?;
    let w = f.linearizable_necessary.witness.as_ref();
    let witness_ok = w.is_some_and(|w| w.component == "R^1_111" && (w.value - 3.0).abs() <= 1e-12);
    c.push(Check::equal("cubic_witness", witness_ok, true));
    let all_violated = [&f.linearizable_necessary, &f.affine_necessary, &f.trivializable_necessary]
        .iter()
        .all(|x| x.status == Status::Violated);
    c.push(Check::equal("cubic_all_violated", all_violated, true));
    c.case("damped oscillator");
    c.push(Check::equal("unimodular_damped", unimodular_test(&oscillator()?, &pts1, 1e-9)?.status != Status::Violated, true));
    c.case("F=v1^3");
    c.push(Check::equal("unimodular_cubic", unimodular_test(&cubic, &pts1, 1e-9)?.status, Status::Violated));
    Ok(())
}

fn oracle(c: &mut Criterion) -> Result<(), CliError> {
    let mut count = 0;
    for seed in 1..=5 {
        c.case(format!("seed={seed}"));
        let s = random_sode(2, seed);
        let pairs = derivative_pairs(&s);
        count += pairs.len();
        let pts = random_points(2, 20, seed + 50, &SampleBox::default());
        c.push(Check::max("derivative_oracle", derivative_oracle(&s, &pairs, &pts, 1e-3)?, 1e-6));
    }
    c.case("");
    c.push(Check::min("derivative_oracle_count", count as f64, 200.0));
    Ok(())
}

fn determinism(c: &mut Criterion, m: Mutation) -> Result<(), CliError> {
    let pb = problem(oscillator()?, 5, 12, &SampleBox::default());
    let a = super::report::to_text(&tasks::analyze(&pb, m)?.into_value());
    let b = super::report::to_text(&tasks::analyze(&pb, m)?.into_value());
    c.push(Check::equal("determinism", a == b, true));
    Ok(())
}

/// The full suite; `mutation` corrupts the closed formulas to exercise the
/// oracles.
pub fn selftest(m: Mutation) -> Result<Value, CliError> {
    let default_box = SampleBox::default();
    let mut out = Vec::new();

    let mut c = Criterion::new(1, "flat");
    flat(&mut c)?;
    out.push(c);

    let mut c = Criterion::new(2, "identity_battery");
    for seed in 1..=3 {
        c.case(format!("seed={seed}"));
        c.add(tasks::verify(&problem(random_sode(2, seed), 10, seed, &default_box), m)?, None);
    }
    out.push(c);

    let mut c = Criterion::new(3, "eigenstructure");
    for n in 1..=3 {
        c.case(format!("n={n}"));
        let s = random_sode(n, 30 + n as u64);
        for p in random_points(n, 5, 3, &default_box) {
            let e = eigenstructure(&s, &p)?;
            c.push(Check::max("lxj_eigen", e.minimal_polynomial_residual.max(e.frame_residual), 1e-8));
            c.push(Check::equal("lxj_multiplicities", e.multiplicities.to_vec(), vec![1, n, n]));
        }
    }
    out.push(c);

    let mut c = Criterion::new(4, "oscillator");
    oscillator_checks(&mut c, m)?;
    out.push(c);

    let mut c = Criterion::new(5, "riemann_bridge");
    let polar = SampleBox { t: [0.0, 1.0], x: [0.3, 2.8], v: [-1.0, 1.0] };
    for (label, metric) in [("flat", MetricField::identity(2)), ("sphere", MetricField::sphere())] {
        c.case(label);
        c.add(tasks::riemann(&metric_problem(metric, 20, 5, &polar)?)?, None);
    }
    out.push(c);

    let mut c = Criterion::new(6, "functoriality");
    let s = random_sode(2, 7);
    let pb = problem(s.clone(), 5, 6, &default_box);
    let phis = [
        ("near-identity seed=1", random_automorphism(&s, 1)),
        ("near-identity seed=2", random_automorphism(&s, 2)),
        ("triangular seed=3", random_triangular_automorphism(&s, 3)),
    ];
    for (label, phi) in phis {
        c.case(label);
        c.add(tasks::push(&pb, &phi)?, None);
    }
    out.push(c);

    let mut c7 = Criterion::new(7, "jet_ranks");
    let mut c8 = Criterion::new(8, "curvature_mapping");
    for n in 1..=2 {
        c7.case(format!("n={n}"));
        c8.case(format!("n={n}"));
        let jets = tasks::jets(&problem(random_sode(n, 40 + n as u64), 5, 8, &default_box), m)?;
        for c in jets.checks {
            if c.key.starts_with("lemma_") || c.key == "theorem_kernel" {
                c7.push(c);
            } else if c.key != "prop_first_prolongation" {
                c8.push(c);
            }
        }
    }
    out.push(c7);
    out.push(c8);

    let mut c = Criterion::new(9, "first_prolongation");
    for n in 1..=3 {
        c.case(format!("n={n}"));
        c.push(Check::equal("prop_first_prolongation", first_prolongation_dim(n)?, 0));
    }
    out.push(c);

    let mut c = Criterion::new(10, "classifier");
    classifier(&mut c)?;
    out.push(c);

    let mut c = Criterion::new(11, "derivative_oracle");
    oracle(&mut c)?;
    out.push(c);

    let mut c = Criterion::new(12, "determinism");
    determinism(&mut c, m)?;
    out.push(c);

    let criteria: Vec<Value> = out.into_iter().map(Criterion::into_value).collect();
    let pass = criteria.iter().all(|c| c["pass"] == true);
    Ok(json!({"criteria": criteria, "pass": pass}))
}
