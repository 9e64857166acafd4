use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lindyn_core::expansivity::{expansivity_report, write_growth_csv, EigenVerdict, ExpansivityQuery};
use lindyn_core::homoclinic::{hhat_approximate, hyperbolic_iff_trivial_h, is_homoclinic, write_decay_csv, HomoclinicEvidence};
use lindyn_core::hypercyclic::{adjoint_eigen_obstruction, criterion_witness, CriterionData};
use lindyn_core::linf::{
    bauer_fike_radius, linf_injectivity_margin, shad_estimate_linf, shadowing_robustness_scan, write_scan_csv, WindowedLinf,
};
use lindyn_core::operators::JsonScalar;
use lindyn_core::shadowing::{
    generate_pseudo_orbit, shad_bounds, shadow_contraction, shadow_splitting_series, shadow_window_solve,
    write_trajectory_csv, ShadowMethod, ShadowResult, Window,
};
use lindyn_core::splitting::{classify, Splitting, DEFAULT_CIRCLE_GAP};
use lindyn_core::stability::{
    composition_defect, conjugacy_residual, conjugacy_solve, inverse_conjugacy, test_points, write_conjugacy_csv,
};
use lindyn_core::suites::run_suites;
use lindyn_core::{DenseVector, Error, LinOp, OpKind, Result, Scalar, SparseBiSeq, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::{Report, Status, TaskError, TaskReport};
use crate::scenario::{Scenario, ShadowMethodDesc, SplitDesc, Task};

/// JSON number, with non-finite values spelled out since JSON cannot hold them.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x + 0.0)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn scalar_json(z: Scalar) -> Value {
    serde_json::to_value(JsonScalar::from(z)).expect("scalars serialize")
}

/// Dense vectors as entry lists, sequences as `{"index": value}` objects.
pub fn vector_json(v: &Vector) -> Value {
    match v {
        Vector::Dense(d) => Value::Array(d.coords().iter().map(|z| scalar_json(*z)).collect()),
        Vector::Sparse(s) => Value::Object(s.iter().map(|(k, z)| (k.to_string(), scalar_json(z))).collect()),
    }
}

struct Context<'a> {
    scenario: &'a Scenario,
    op: LinOp,
    split: Option<Result<Splitting>>,
    side_dir: &'a Path,
}

impl Context<'_> {
    fn split(&mut self) -> Result<Splitting> {
        if self.split.is_none() {
            let built = match &self.scenario.splitting {
                Some(d) => d.build(&self.op),
                None if self.op.is_dense() => SplitDesc::Spectral { circle_gap: DEFAULT_CIRCLE_GAP }.build(&self.op),
                None => Err(Error::InvalidSplitting("sequence operators need an explicit splitting".into())),
            };
            self.split = Some(built);
        }
        self.split.clone().expect("just filled")
    }

    fn side_file(&self, name: &str) -> Result<(File, PathBuf)> {
        let path = self.side_dir.join(name);
        let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok((file, path))
    }

    fn seed(&self) -> u64 {
        self.scenario.rng_seed
    }

    fn first_basis(&self) -> Vector {
        let tag = self.op.norm_tag();
        match self.op.dim() {
            Some(d) => Vector::Dense(DenseVector::basis(d, 0, tag)),
            None => Vector::Sparse(SparseBiSeq::unit(0, tag)),
        }
    }
}

/// Runs every task in declared order; a failing task is recorded and the rest still run.
pub fn run_scenario(scenario: &Scenario, side_dir: &Path) -> Report {
    let mut report = Report::new(scenario.name.clone(), scenario.rng_seed);
    let op = match scenario.operator.build() {
        Ok(op) => op,
        Err(e) => {
            for &task in &scenario.tasks {
                report.tasks.push(TaskReport { task, status: Status::Error, result: None, error: Some(e.clone().into()), wall_clock_ms: 0.0 });
            }
            return report;
        }
    };
    let mut ctx = Context { scenario, op, split: None, side_dir };
    for &task in &scenario.tasks {
        let start = Instant::now();
        let outcome = run_task(&mut ctx, task);
        let wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
        report.tasks.push(task_report(task, outcome, wall_clock_ms));
    }
    report
}

/// Suite tasks whose suites report failures are marked as errors but keep their result.
fn task_report(task: Task, outcome: Result<Value>, wall_clock_ms: f64) -> TaskReport {
    match outcome {
        Ok(result) if result.get("all_pass") == Some(&Value::Bool(false)) => TaskReport {
            task,
            status: Status::Error,
            result: Some(result),
            error: Some(TaskError { code: "SUITE_FAILED".into(), message: "at least one suite reported failures".into() }),
            wall_clock_ms,
        },
        Ok(result) => TaskReport { task, status: Status::Ok, result: Some(result), error: None, wall_clock_ms },
        Err(e) => TaskReport { task, status: Status::Error, result: None, error: Some(e.into()), wall_clock_ms },
    }
}

fn run_task(ctx: &mut Context<'_>, task: Task) -> Result<Value> {
    match task {
        Task::Classify => task_classify(ctx),
        Task::Shadow => task_shadow(ctx),
        Task::Bounds => task_bounds(ctx),
        Task::Linf => task_linf(ctx),
        Task::Expansivity => task_expansivity(ctx),
        Task::Hypercyclic => task_hypercyclic(ctx),
        Task::Conjugacy => task_conjugacy(ctx),
        Task::Homoclinic => task_homoclinic(ctx),
        Task::Suite => task_suite(ctx.seed(), ctx.scenario.parameters.suite.size),
    }
}

fn task_classify(ctx: &mut Context<'_>) -> Result<Value> {
    let split = ctx.split()?;
    let rep = classify(&ctx.op, &split, ctx.scenario.parameters.classify.horizon)?;
    Ok(json!({
        "class": format!("{:?}", rep.class),
        "r_s": num(rep.r_s),
        "r_u_inv": num(rep.r_u_inv),
        "invariance": {
            "forward_s": rep.invariance.forward_s,
            "backward_u": rep.invariance.backward_u,
            "s_in_image": rep.invariance.s_in_image,
            "forward_u": rep.invariance.forward_u,
        },
        "witness": rep.witness.as_ref().map(vector_json),
        "circle_gap": num(rep.circle_gap),
    }))
}

fn method_name(m: ShadowMethod) -> &'static str {
    match m {
        ShadowMethod::SplittingSeries => "splitting_series",
        ShadowMethod::ContractionFixpoint => "contraction",
        ShadowMethod::WindowSolve => "window_solve",
    }
}

fn task_shadow(ctx: &mut Context<'_>) -> Result<Value> {
    let p = ctx.scenario.parameters.shadow.clone();
    let seed = match &p.seed {
        Some(v) => v.build(ctx.op.norm_tag())?,
        None => ctx.first_basis(),
    };
    let po = generate_pseudo_orbit(&ctx.op, &seed, Window::new(p.start, p.end)?, p.delta, ctx.seed())?;
    let op = ctx.op.clone();
    let res: ShadowResult = match p.method {
        ShadowMethodDesc::Series => shadow_splitting_series(&op, &ctx.split()?, &po, p.tail_tol)?,
        ShadowMethodDesc::Contraction => shadow_contraction(&op, &po, p.tail_tol)?,
        ShadowMethodDesc::Window => shadow_window_solve(&op, &po)?,
        ShadowMethodDesc::Auto => match ctx.split().and_then(|s| shadow_splitting_series(&op, &s, &po, p.tail_tol)) {
            Ok(r) => r,
            Err(_) if op.operator_norm() < 1.0 => shadow_contraction(&op, &po, p.tail_tol)?,
            Err(_) => shadow_window_solve(&op, &po)?,
        },
    };
    let csv = match &p.trajectory_csv {
        Some(name) => {
            let (f, path) = ctx.side_file(name)?;
            write_trajectory_csv(f, p.start, &res.trajectory)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let bound = res.constant_used * p.delta;
    Ok(json!({
        "method": method_name(res.method),
        "window": [p.start, p.end],
        "delta": p.delta,
        "measured_delta": num(po.measured_delta(&op)?),
        "sup_error": num(res.sup_error),
        "constant_used": num(res.constant_used),
        "error_bound": num(bound),
        "within_bound": res.sup_error <= bound + 1e-12,
        "shadow_seed": vector_json(&res.shadow_seed),
        "trajectory_csv": csv,
    }))
}

fn task_bounds(ctx: &mut Context<'_>) -> Result<Value> {
    let split = ctx.split()?;
    let b = shad_bounds(&ctx.op, &split)?;
    let t = b.upper_formula_terms;
    Ok(json!({
        "upper": num(b.upper),
        "lower": num(b.lower),
        "upper_formula_terms": {
            "proj_s_norm": num(t.proj_s_norm),
            "series_a": num(t.series_a),
            "proj_u_norm": num(t.proj_u_norm),
            "series_b": num(t.series_b),
        },
    }))
}

fn task_linf(ctx: &mut Context<'_>) -> Result<Value> {
    let p = &ctx.scenario.parameters.linf;
    let mut rows = Vec::with_capacity(p.n_list.len());
    for &n in &p.n_list {
        let w = WindowedLinf::new(ctx.op.clone(), n);
        let margin = linf_injectivity_margin(&w)?;
        let est = shad_estimate_linf(&w, p.samples, ctx.seed())?;
        rows.push(json!({ "n": n, "margin": num(margin), "estimate": num(est.estimate), "floor": num(est.floor) }));
    }
    let mut out = json!({ "windows": rows });
    if !p.scan_radii.is_empty() {
        let scan = shadowing_robustness_scan(&ctx.op, &p.scan_radii, p.scan_trials, ctx.seed())?;
        let rows: Vec<Value> = scan
            .rows
            .iter()
            .map(|r| json!({ "radius": r.radius, "trial": r.trial, "pass": r.pass, "estimate": num(r.estimate) }))
            .collect();
        if let Some(name) = &p.scan_csv {
            let (f, _) = ctx.side_file(name)?;
            write_scan_csv(f, &scan)?;
        }
        out["scan"] = json!({
            "rows": rows,
            "base_upper": num(scan.base_upper),
            "certified_radius": num(scan.certified_radius),
            "all_pass_below_margin": scan.all_pass_below_margin,
        });
    } else if ctx.op.is_dense() {
        out["bauer_fike_radius"] = match bauer_fike_radius(&ctx.op) {
            Ok(r) => num(r),
            Err(e) => json!({ "error": e.code() }),
        };
    }
    Ok(out)
}

fn task_expansivity(ctx: &mut Context<'_>) -> Result<Value> {
    let p = ctx.scenario.parameters.expansivity.clone();
    let q = ExpansivityQuery { gap: p.gap, m_max: p.m_max, n_list: p.n_list, horizon: p.horizon, rng_seed: ctx.seed() };
    let split = ctx.split().ok();
    let rep = expansivity_report(&ctx.op, split.as_ref(), &q)?;
    if let Some(name) = &p.growth_csv {
        let (f, _) = ctx.side_file(name)?;
        write_growth_csv(f, &rep.window_growth)?;
    }
    let verdict = match rep.eigen_verdict {
        EigenVerdict::Expansive => "Expansive",
        EigenVerdict::NotExpansive => "NotExpansive",
        EigenVerdict::NotApplicable => "NotApplicable",
    };
    Ok(json!({
        "eigen_verdict": verdict,
        "uniform_m": rep.uniform_m,
        "window_growth": rep.window_growth.iter().map(|g| json!({ "n": g.n, "value": num(g.value) })).collect::<Vec<_>>(),
        "ecs_certificate": rep.ecs_certificate.map(|c| json!({ "c": num(c.c), "beta": num(c.beta), "horizon": c.horizon })),
    }))
}

fn random_targets(count: usize, seed: u64, tag: lindyn_core::NormTag) -> Result<Vec<Vector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let lo = rng.gen_range(0..4i64);
            let len = rng.gen_range(1..=4i64);
            let entries: Vec<(i64, Scalar)> =
                (lo..lo + len).map(|k| (k, Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).collect();
            Ok(Vector::Sparse(SparseBiSeq::from_entries(entries, tag)?))
        })
        .collect()
}

fn task_hypercyclic(ctx: &mut Context<'_>) -> Result<Value> {
    let p = &ctx.scenario.parameters.hypercyclic;
    match ctx.op.kind() {
        OpKind::BackwardScaled(f) if f.im == 0.0 => {
            let cd = CriterionData::rolewicz(f.re)?;
            let tag = cd.op().norm_tag();
            let targets = if p.targets.is_empty() {
                random_targets(p.random_targets, ctx.seed(), tag)?
            } else {
                p.targets.iter().map(|t| t.build(tag)).collect::<Result<Vec<_>>>()?
            };
            let w = criterion_witness(&cd, &targets, p.eps, p.step_budget)?;
            let seed = Vector::Sparse(w.seed.clone());
            let mut replay = Vec::with_capacity(targets.len());
            for (t, n) in targets.iter().zip(&w.visit_times) {
                replay.push(cd.op().apply_power(*n as i64, &seed)?.distance(t)?);
            }
            let mut out = w.to_json();
            out["replay_errors"] = json!(replay);
            out["all_within_eps"] = json!(replay.iter().all(|e| *e <= p.eps));
            out["targets"] = json!(targets.iter().map(vector_json).collect::<Vec<_>>());
            Ok(json!({ "mode": "criterion_witness", "witness": out }))
        }
        OpKind::Dense(_) => {
            let cert = adjoint_eigen_obstruction(&ctx.op)?;
            Ok(json!({
                "mode": "adjoint_obstruction",
                "eigenvalue": scalar_json(cert.eigenvalue),
                "functional": vector_json(&Vector::Dense(cert.functional.clone())),
                "trend": format!("{:?}", cert.trend),
                "replay_defect": num(cert.replay_defect),
            }))
        }
        _ => Err(Error::KindMismatch("hypercyclic task needs a scaled backward shift or a dense operator".into())),
    }
}

fn task_conjugacy(ctx: &mut Context<'_>) -> Result<Value> {
    let p = ctx.scenario.parameters.conjugacy.clone();
    let beta = p
        .perturbation
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("conjugacy needs parameters.conjugacy.perturbation".into()))?
        .build(ctx.op.norm_tag())?;
    let field = conjugacy_solve(&ctx.op, &beta, p.tol, p.max_depth)?;
    let pts = test_points(field.dim(), p.radius, p.points, ctx.seed());
    let sup_h = pts.iter().map(|x| field.h(x).map(|h| ctx.op.norm_tag().of(&h))).collect::<Result<Vec<_>>>()?;
    let diffs = field.picard_differences(&pts)?;
    let worst_step = diffs.windows(2).filter(|w| w[0] > 1e-12).map(|w| w[1] / w[0]).fold(0.0, f64::max);
    let mut out = json!({
        "gamma_norm": num(field.gamma_norm),
        "contraction_factor": num(field.contraction_factor),
        "picard_depth": field.picard_depth,
        "h_bound": num(field.h_bound),
        "sup_h": num(sup_h.iter().copied().fold(0.0, f64::max)),
        "worst_picard_ratio": num(worst_step),
        "residual": num(conjugacy_residual(&field, &pts)?),
        "points": p.points,
    });
    if p.inverse {
        let inv = inverse_conjugacy(&ctx.op, &beta, p.tol)?;
        out["inverse_residual"] = num(conjugacy_residual(&inv, &pts)?);
        out["composition_defect"] = num(composition_defect(&field, &inv, &pts)?);
    }
    if let Some(name) = &p.csv {
        let (f, _) = ctx.side_file(name)?;
        write_conjugacy_csv(f, &field, &pts)?;
    }
    Ok(out)
}

fn evidence_json(ev: &HomoclinicEvidence) -> Value {
    json!({
        "vector": vector_json(&ev.vector),
        "horizon": ev.horizon,
        "verdict": ev.verdict,
        "forward_decay": ev.forward_decay.iter().map(|x| num(*x)).collect::<Vec<_>>(),
        "backward_decay": ev.backward_decay.iter().map(|x| num(*x)).collect::<Vec<_>>(),
    })
}

fn task_homoclinic(ctx: &mut Context<'_>) -> Result<Value> {
    let p = ctx.scenario.parameters.homoclinic.clone();
    let split = ctx.split()?;
    let v = hyperbolic_iff_trivial_h(&ctx.op, &split, p.horizon)?;
    let mut out = json!({
        "class": format!("{:?}", v.class),
        "hyperbolic": v.hyperbolic,
        "witness": v.witness.as_ref().map(vector_json),
        "witness_evidence": v.witness_evidence.as_ref().map(evidence_json),
        "searched": v.searched,
    });
    let mut csv_source = v.witness_evidence.clone();
    if let Some(desc) = &p.vector {
        let x = desc.build(ctx.op.norm_tag())?;
        let ev = is_homoclinic(&ctx.op, &x, p.horizon, p.tol)?;
        let mut rows = Vec::new();
        if ev.verdict {
            for &n in &p.n_list {
                let a = hhat_approximate(&ctx.op, &split, &x, n)?;
                rows.push(json!({
                    "n": n,
                    "stable_error": num(a.stable_error),
                    "unstable_error": num(a.unstable_error),
                    "members": a.members.map(|(s, u)| json!([s, u])),
                }));
            }
        }
        out["vector_evidence"] = evidence_json(&ev);
        out["approximation"] = json!(rows);
        csv_source = Some(ev);
    }
    if let (Some(name), Some(ev)) = (&p.decay_csv, &csv_source) {
        let (f, _) = ctx.side_file(name)?;
        write_decay_csv(f, ev)?;
    }
    Ok(out)
}

fn task_suite(seed: u64, size: usize) -> Result<Value> {
    let rep = run_suites(seed, size)?;
    let mut out = serde_json::to_value(&rep).map_err(|e| Error::Io(e.to_string()))?;
    out["all_pass"] = json!(rep.all_pass());
    Ok(out)
}

/// Report holding one `suite` task.
pub fn run_suite(seed: u64, size: usize) -> Report {
    let mut report = Report::new(format!("suite-{seed}-{size}"), seed);
    let start = Instant::now();
    let outcome = task_suite(seed, size);
    let wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
    report.tasks.push(task_report(Task::Suite, outcome, wall_clock_ms));
    report
}
