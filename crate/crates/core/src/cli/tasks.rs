//! One function per task; each returns a report section.

use serde_json::{json, Value};

use super::report::{num, vec1, vec2, vec3, vec4, Check, Section};
use super::spec::Problem;
use super::CliError;
use crate::chern::{
    max_abs_at, torsion_residual, verify_characterization_with, verify_curvature_pattern,
    verify_structure_identities, Geometry,
};
use crate::classify::{
    first_prolongation_dim, frame_tensor_parallel_residual, holonomy_span, kosambi_charpoly_at, kosambi_invariants, lifted_metric,
    max_generator_trace, orthogonal_residual, special_coordinate_conditions, unimodular_test, Mode, Status,
};
use crate::natjets::{
    curvature_kernel_dimension, curvature_mapping, distribution_rank, expected_distribution_rank,
    infinitesimal_equivariance, jet2_of, prolong1, push_sode_symbolic, push_sode_value,
    section_curvature_defect, verify_functoriality, VerticalAutomorphism,
};
use crate::riemann::{cross_check, geodesic_spray, metric_checks, spray_homogeneity};
use crate::sode::random::random_vertical_field;
use crate::sode::{derivative_oracle, derivative_pairs, eigenstructure, JetPoint1, SodeSystem, SplitCurvature};
use crate::symexpr::{eval, is_zero, Expr};

/// Deliberate corruption of the closed formulas, used to confirm that the
/// oracles notice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mutation {
    #[default]
    None,
    /// negate every P^i_j after computing it
    FlipP,
}

pub type TaskResult = Result<Section, CliError>;

pub fn geometry(s: &SodeSystem, m: Mutation) -> Geometry {
    let mut g = Geometry::new(s.clone());
    if m == Mutation::FlipP {
        for e in g.split.p.iter_mut().flatten() {
            *e = crate::symexpr::simplify(&-&*e);
        }
    }
    g
}

fn ev(s: &SodeSystem, e: &Expr, p: &JetPoint1) -> Result<f64, CliError> {
    Ok(eval(e, &s.env(p)).map_err(crate::Error::from)?)
}

fn ev1(s: &SodeSystem, v: &[Expr], p: &JetPoint1) -> Result<Vec<f64>, CliError> {
    v.iter().map(|e| ev(s, e, p)).collect()
}

fn ev2(s: &SodeSystem, v: &[Vec<Expr>], p: &JetPoint1) -> Result<Vec<Vec<f64>>, CliError> {
    v.iter().map(|r| ev1(s, r, p)).collect()
}

fn ev3(s: &SodeSystem, v: &[Vec<Vec<Expr>>], p: &JetPoint1) -> Result<Vec<Vec<Vec<f64>>>, CliError> {
    v.iter().map(|r| ev2(s, r, p)).collect()
}

fn ev4(s: &SodeSystem, v: &[Vec<Vec<Vec<Expr>>>], p: &JetPoint1) -> Result<Vec<Vec<Vec<Vec<f64>>>>, CliError> {
    v.iter().map(|r| ev3(s, r, p)).collect()
}

fn text1(v: &[Expr]) -> Value {
    json!(v.iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn text2(v: &[Vec<Expr>]) -> Value {
    Value::Array(v.iter().map(|r| text1(r)).collect())
}

fn text3(v: &[Vec<Vec<Expr>>]) -> Value {
    Value::Array(v.iter().map(|r| text2(r)).collect())
}

/// Symbolic Kosambi coefficients up to n = 2, `null` beyond (see
/// [`kosambi_invariants`]).
fn symbolic_charpoly(g: &Geometry) -> Value {
    if g.n() <= 2 {
        text1(&kosambi_invariants(g).charpoly)
    } else {
        Value::Null
    }
}

/// Components, Kosambi invariants and the eigenstructure of `L_{X^σ}J` at
/// every point, plus the bracket and finite-difference oracles.
pub fn analyze(pb: &Problem, m: Mutation) -> TaskResult {
    let g = geometry(&pb.sode, m);
    let s = &g.sode;
    let n = s.n();
    let tol = pb.tolerances;
    let mut sec = Section::default();
    sec.put(
        "symbolic",
        json!({"P": text2(&g.split.p), "T": text3(&g.split.t), "kosambi_charpoly": symbolic_charpoly(&g)}),
    );
    let mut rows = Vec::new();
    let mut eigen_residual: f64 = 0.0;
    let mut multiplicities_ok = true;
    for p in &pb.points {
        let e = eigenstructure(s, p)?;
        eigen_residual = eigen_residual.max(e.minimal_polynomial_residual).max(e.frame_residual);
        multiplicities_ok &= e.multiplicities == [1, n, n];
        rows.push(json!({
            "P": vec2(&ev2(s, &g.split.p, p)?),
            "T": vec3(&ev3(s, &g.split.t, p)?),
            "A": vec3(&ev3(s, &g.curvature.a, p)?),
            "B": vec4(&ev4(s, &g.curvature.b, p)?),
            "R": vec4(&ev4(s, &g.curvature.r, p)?),
            "kosambi_charpoly": vec1(&kosambi_charpoly_at(&g, p)?),
            "lxj_eigenvalues": vec1(&e.eigenvalues),
            "lxj_multiplicities": e.multiplicities.to_vec(),
        }));
    }
    sec.put("points", rows);
    let brackets = SplitCurvature::from_brackets(s).difference(&g.split);
    sec.check(Check::max("bracket_oracle", max_abs_at(s, &brackets, &pb.points)?, tol.identity));
    let pairs = derivative_pairs(s);
    sec.check(Check::max("derivative_oracle", derivative_oracle(s, &pairs, &pb.points, 1e-3)?, tol.oracle));
    sec.check(Check::max("lxj_eigen", eigen_residual, tol.rank));
    sec.check(Check::equal("lxj_multiplicities", multiplicities_ok, true));
    Ok(sec)
}

/// The identity battery.
pub fn verify(pb: &Problem, m: Mutation) -> TaskResult {
    let g = geometry(&pb.sode, m);
    let pts = &pb.points;
    let tol = pb.tolerances.identity;
    let mut sec = Section::default();
    let st = verify_structure_identities(&g, pts)?;
    sec.check(Check::max("eq_As", st.a_identity, tol));
    sec.check(Check::max("eq_3T", st.t_identity, tol));
    sec.check(Check::max("torsion_oracle", torsion_residual(&g, pts)?, tol));
    sec.check(Check::max("curvature_oracle", verify_curvature_pattern(&g, pts)?, tol));
    let c = verify_characterization_with(&g, &g.connection, pts)?;
    sec.check(Check::max("thm_flow_parallel", c.flow_parallel, tol));
    sec.check(Check::max("thm_lxj_parallel", c.lxj_parallel, tol));
    sec.check(Check::max("thm_e_parallel", c.e_parallel, tol));
    sec.check(Check::max("thm_torsion", c.torsion, tol));
    Ok(sec)
}

/// Special-coordinate conditions, holonomy span, unimodular test, and the
/// orthogonality residuals when `U` is given.
pub fn classify(pb: &Problem, m: Mutation) -> TaskResult {
    let g = geometry(&pb.sode, m);
    let s = &g.sode;
    let pts = &pb.points;
    let tol = pb.tolerances;
    let mut sec = Section::default();
    let mode = if s.is_polynomial() { Mode::Symbolic } else { Mode::Numeric };
    sec.put("mode", if mode == Mode::Symbolic { "symbolic" } else { "numeric" });
    let flags = special_coordinate_conditions(&g, mode, pts, tol.identity)?;
    sec.put("special_coordinates", serde_json::to_value(&flags).expect("flags serialize"));
    let mut ranks = Vec::new();
    for p in pts {
        ranks.push(holonomy_span(&g, p, tol.rank)?.rank);
    }
    sec.put("holonomy_span_max", ranks.iter().copied().max().unwrap_or(0));
    sec.put("holonomy_span", ranks);
    let uni = unimodular_test(s, pts, tol.identity)?;
    let unimodular = uni.status != Status::Violated;
    sec.put("unimodular", serde_json::to_value(&uni).expect("report serializes"));
    if unimodular {
        sec.check(Check::max("unimodular_trace", max_generator_trace(&g, pts)?, tol.identity));
    }
    sec.put("kosambi_charpoly", symbolic_charpoly(&g));
    if let Some(u) = &pb.u {
        let o = orthogonal_residual(&g, u, pts)?;
        sec.put("pde_symbolic_zero", o.pde_symbolic_zero);
        sec.check(Check::max("eq_PDE", o.pde, tol.identity));
        sec.check(Check::max("eq_PDE_secondary", o.secondary, tol.identity));
        sec.check(Check::max("eq_PDE_integrability", o.integrability, tol.identity));
        sec.check(Check::max("g1_parallel", frame_tensor_parallel_residual(&g, &lifted_metric(u), pts)?, tol.identity));
    }
    Ok(sec)
}

/// Naturality under the automorphism of the spec.
pub fn push(pb: &Problem, phi: &VerticalAutomorphism) -> TaskResult {
    let s = &pb.sode;
    let pts = &pb.points;
    let tol = pb.tolerances.identity;
    phi.validate(pts)?;
    let mut sec = Section::default();
    if phi.inverse.is_some() {
        sec.put("pushed_F", text1(push_sode_symbolic(phi, s)?.f()));
    }
    let mut rows = Vec::new();
    for p in pts {
        rows.push(json!({
            "image": vec1(&prolong1(phi, s, p)?.coords()),
            "F": vec1(&push_sode_value(phi, s, p)?),
        }));
    }
    sec.put("points", rows);
    let r = verify_functoriality(phi, s, pts)?;
    sec.check(Check::max("eq_partialF", r.first_derivative, tol));
    sec.check(Check::max("eq_Partial2F", r.second_derivative, tol));
    sec.check(Check::max("frame_flow", r.flow_pushforward, tol));
    sec.check(Check::max("frame_horizontal", r.horizontal_pushforward, tol));
    sec.check(Check::max("frame_vertical", r.vertical_pushforward, tol));
    sec.check(Check::max("torsion_equivariance", r.torsion, tol));
    sec.check(Check::max("curvature_mapping_equivariance", r.curvature_mapping, tol));
    sec.check(Check::max("kosambi_equivariance", r.kosambi_charpoly, tol));
    if let Some(x) = r.symbolic_push {
        sec.check(Check::max("symbolic_push", x, tol));
    }
    Ok(sec)
}

/// `3n(n+2)(n+1)/2`.
pub fn expected_kernel_dimension(n: usize) -> usize {
    3 * n * (n + 2) * (n + 1) / 2
}

/// Curvature mapping consistency, infinitesimal equivariance, distribution
/// ranks at the first point, and the first prolongation.
pub fn jets(pb: &Problem, m: Mutation) -> TaskResult {
    let s = &pb.sode;
    let n = s.n();
    let pts = &pb.points;
    let tol = pb.tolerances;
    let g = geometry(s, m);
    let mut sec = Section::default();
    if s.is_polynomial() {
        let exact = section_curvature_defect(s).iter().all(is_zero);
        sec.check(Check::equal("curvature_mapping_symbolic", exact, true));
    }
    let mut worst: f64 = 0.0;
    for p in pts {
        let y = curvature_mapping(&jet2_of(s, p)?);
        let yp = ev2(s, &g.split.p, p)?;
        let yt = ev3(s, &g.split.t, p)?;
        for (a, b) in y.y_p.iter().flatten().zip(yp.iter().flatten()) {
            worst = worst.max((a + b).abs());
        }
        for (a, b) in y.y_t.iter().flatten().flatten().zip(yt.iter().flatten().flatten()) {
            worst = worst.max((a + b).abs());
        }
    }
    sec.check(Check::max("curvature_mapping_oracle", worst, tol.identity));
    let u = pb.field.clone().unwrap_or_else(|| random_vertical_field(s, pb.seed));
    sec.put("field", text1(&u));
    let (mut pl, mut tl): (f64, f64) = (0.0, 0.0);
    for p in pts {
        let r = infinitesimal_equivariance(s, &u, p)?;
        pl = pl.max(r.p_law);
        tl = tl.max(r.t_law);
    }
    sec.check(Check::max("eq_infinitesimal_P", pl, tol.identity));
    sec.check(Check::max("eq_infinitesimal_T", tl, tol.identity));

    let p0 = &pts[0];
    for (order, key, expected) in
        [(0, "lemma_rank_0", 3 * n), (1, "lemma_rank_1", 2 * n * n + 4 * n), (2, "lemma_rank", expected_distribution_rank(n))]
    {
        let r = distribution_rank(s, p0, order, 3 * expected, pb.seed)?;
        sec.put(&format!("{key}_singular_values"), vec1(&r.singular_values));
        sec.check(Check::equal(key, r.rank, expected));
        if order == 2 {
            sec.check(Check::min("lemma_rank_gap", r.gap, 1e3));
        }
    }
    let k = curvature_kernel_dimension(s, p0)?;
    sec.put("curvature_fiber_dim", k.fiber_dim);
    sec.check(Check::equal("theorem_kernel", k.kernel, expected_kernel_dimension(n)));
    if n <= 4 {
        sec.check(Check::equal("prop_first_prolongation", first_prolongation_dim(n)?, 0));
    }
    Ok(sec)
}

/// Geodesic spray of the metric: cross formulas with the Riemann tensor,
/// invariant metrics, and homogeneity.
pub fn riemann(pb: &Problem) -> TaskResult {
    let metric = pb.metric.as_ref().ok_or_else(|| CliError::new("InvalidSpec", "riemann needs a metric").at_field("metric"))?;
    let pts = &pb.points;
    let tol = pb.tolerances.identity;
    let n = metric.n();
    let spray = geodesic_spray(metric)?;
    let mut sec = Section::default();
    sec.put("spray", text1(spray.f()));
    let c = cross_check(metric, pts)?;
    sec.put("cross_symbolic_zero", json!([c.symbolic_zero, c.total]));
    sec.check(Check::max("remark_T", c.t, tol));
    sec.check(Check::max("remark_P", c.p, tol));
    sec.check(Check::max("remark_A", c.a, tol));
    sec.check(Check::max("remark_B", c.b, tol));
    let mc = metric_checks(metric, pts)?;
    sec.put("pde_symbolic_zero", mc.pde_symbolic_zero);
    sec.put("h1_velocity_term_parallel", num(mc.companion_parallel));
    sec.check(Check::max("eq_PDE", mc.pde, tol));
    sec.check(Check::max("eq_PDE_secondary", mc.secondary, tol));
    sec.check(Check::max("eq_PDE_integrability", mc.integrability, tol));
    sec.check(Check::max("g1_parallel", mc.lifted_parallel, tol));
    sec.check(Check::max("h1_split_parallel", mc.split_companion_parallel, tol));
    let sig_ok = mc.companion_signature.iter().all(|s| *s == (n + 1, n));
    sec.check(Check::equal("h1_signature", sig_ok, true));
    let hom = spray_homogeneity(&Geometry::new(spray), pts)?;
    sec.check(Check::max("spray_homogeneity", hom.iter().copied().fold(0.0, f64::max), tol));
    Ok(sec)
}

/// Runs a named task.
pub fn run_task(name: &str, pb: &Problem, m: Mutation) -> TaskResult {
    match name {
        "analyze" => analyze(pb, m),
        "verify" => verify(pb, m),
        "classify" => classify(pb, m),
        "push" => {
            let phi = pb
                .automorphism
                .as_ref()
                .ok_or_else(|| CliError::new("InvalidSpec", "push needs an automorphism").at_field("automorphism"))?;
            push(pb, phi)
        }
        "jets" => jets(pb, m),
        "riemann" => riemann(pb),
        other => Err(CliError::new("InvalidSpec", format!("unknown task `{other}`")).at_field("task")),
    }
}
