use std::sync::Arc;
use std::time::{Duration, Instant};

use lindyn_core::homoclinic::{geometric_tail, hhat_approximate, hyperbolic_iff_trivial_h, DEFAULT_HORIZON};
use lindyn_core::hypercyclic::{adjoint_eigen_obstruction, criterion_witness, CriterionData, DEFAULT_STEP_BUDGET};
use lindyn_core::linf::{linf_injectivity_margin, shad_estimate_linf, WindowedLinf};
use lindyn_core::operators::lockdown;
use lindyn_core::shadowing::{
    generate_pseudo_orbit, shad_bounds, shadow_contraction, shadow_splitting_series, shadow_window_solve, Window,
};
use lindyn_core::splitting::{classify, Cut, HyperbolicityClass, Splitting};
use lindyn_core::stability::{
    summability_shadow_check, summability_verify, composition_defect, conjugacy_residual, conjugacy_solve, grobman_hartman_local,
    inverse_conjugacy, test_points, LipschitzPerturbation, SmoothMap,
};
use lindyn_core::suites::{equivalence_case, random_circle_control, random_hyperbolic, random_stable, EIGEN_MARGIN};
use lindyn_core::{DenseMatrix, DenseVector, LinOp, NormTag, Scalar, SparseBiSeq, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    id: u32,
    title: &'static str,
    budget: Duration,
    start: Instant,
    failures: Vec<String>,
}

impl Check {
    fn new(id: u32, title: &'static str, budget_secs: u64) -> Self {
        Self { id, title, budget: Duration::from_secs(budget_secs), start: Instant::now(), failures: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn finish(mut self) {
        let elapsed = self.start.elapsed();
        if elapsed > self.budget {
            self.failures.push(format!("runtime {elapsed:?} over budget {:?}", self.budget));
        }
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {:>2}: {} ({:.2?})", self.id, self.title, elapsed);
        for f in &self.failures {
            println!("         {f}");
        }
        assert!(self.failures.is_empty(), "criterion {} failed: {:?}", self.id, self.failures);
    }
}

fn diag(a: f64, b: f64, tag: NormTag) -> LinOp {
    LinOp::dense(DenseMatrix::diagonal_real(&[a, b]).unwrap(), tag).unwrap()
}

fn re(v: &[f64]) -> Vec<Scalar> {
    v.iter().map(|x| Scalar::new(*x, 0.0)).collect()
}

fn dense(v: &[f64], tag: NormTag) -> Vector {
    Vector::Dense(DenseVector::from_real(v, tag).unwrap())
}

fn rotation() -> LinOp {
    LinOp::from_real_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]], NormTag::L2).unwrap()
}

#[test]
fn criterion_01_diag_bounds() {
    let mut c = Check::new(1, "shadowing constant bounds for diag(1/2, 2)", 5);
    let op = diag(0.5, 2.0, NormTag::Linf);
    let b = shad_bounds(&op, &Splitting::coordinate(Cut::AtMost(0), NormTag::Linf)).unwrap();
    c.expect((b.upper - 3.0).abs() <= 1e-9, format!("upper {}", b.upper));
    c.expect((b.lower - 2.0).abs() <= 1e-9, format!("lower {}", b.lower));
    let est = shad_estimate_linf(&WindowedLinf::new(op, 32), 64, 1).unwrap();
    c.expect((1.95..=3.0).contains(&est.estimate), format!("windowed estimate {}", est.estimate));
    c.finish();
}

#[test]
fn criterion_02_shadowing_reconstruction() {
    let mut c = Check::new(2, "pseudo-orbit reconstruction on diag(1/2, 2)", 10);
    let op = diag(0.5, 2.0, NormTag::Linf);
    let split = Splitting::coordinate(Cut::AtMost(0), NormTag::Linf);
    let delta = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_ratio: f64 = 0.0;
    for trial in 0..100u64 {
        let seed = dense(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1e-3..1e-3)], NormTag::Linf);
        let po = generate_pseudo_orbit(&op, &seed, Window::new(0, 199).unwrap(), delta, trial).unwrap();
        let s = shadow_splitting_series(&op, &split, &po, 1e-12).unwrap();
        worst_ratio = worst_ratio.max(s.sup_error / delta);
        c.expect(s.sup_error <= 3.0 * delta + 1e-12, format!("trial {trial}: series error {}", s.sup_error));
        let w = shadow_window_solve(&op, &po).unwrap();
        c.expect(w.sup_error <= s.sup_error + 1e-6, format!("trial {trial}: window {} vs series {}", w.sup_error, s.sup_error));
    }
    let half = diag(0.5, 0.5, NormTag::Linf);
    for trial in 0..10u64 {
        let po = generate_pseudo_orbit(&half, &dense(&[1.0, -0.5], NormTag::Linf), Window::new(0, 199).unwrap(), delta, trial).unwrap();
        let r = shadow_contraction(&half, &po, 1e-12).unwrap();
        c.expect(r.sup_error <= delta / 0.5 + 1e-12, format!("contraction trial {trial}: {}", r.sup_error));
    }
    println!("         worst series error / delta = {worst_ratio:.4}");
    c.finish();
}

#[test]
fn criterion_03_lockdown() {
    let mut c = Check::new(3, "lockdown example is generalized hyperbolic, not hyperbolic", 1);
    let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
    let split = Splitting::coordinate(Cut::AtMost(0), NormTag::L1);
    let rep = classify(&l, &split, DEFAULT_HORIZON).unwrap();
    c.expect(rep.class == HyperbolicityClass::GeneralizedHyperbolic, format!("class {:?}", rep.class));
    match &rep.witness {
        Some(Vector::Sparse(w)) => {
            let back = l.apply_seq(&l.inverse().unwrap().apply_seq(w).unwrap()).unwrap();
            let pre = l.inverse().unwrap().apply_seq(w).unwrap();
            c.expect(!w.is_zero(), "zero witness");
            c.expect(w.iter().all(|(k, _)| k <= 0), "witness not in S");
            c.expect(pre.iter().all(|(k, _)| k > 0), "witness not in L(U)");
            c.expect(back == *w, "witness replay mismatch");
        }
        other => c.expect(false, format!("witness {other:?}")),
    }
    let v = hyperbolic_iff_trivial_h(&l, &split, DEFAULT_HORIZON).unwrap();
    c.expect(!v.hyperbolic, "reported hyperbolic");
    match &v.witness_evidence {
        Some(ev) => {
            c.expect(ev.verdict, "witness not homoclinic");
            let (f0, b0) = (ev.forward_decay[0], ev.backward_decay[0]);
            for n in 0..=40usize {
                let expect = 0.5f64.powi(n as i32);
                c.expect(ev.forward_decay[n] == expect * f0, format!("forward n={n}: {}", ev.forward_decay[n]));
                c.expect(ev.backward_decay[n] == expect * b0, format!("backward n={n}: {}", ev.backward_decay[n]));
            }
        }
        None => c.expect(false, "no homoclinic witness"),
    }
    c.finish();
}

#[test]
fn criterion_04_rotation_does_not_shadow() {
    let mut c = Check::new(4, "rotation by pi/2 has no finite shadowing constant", 10);
    let rot = rotation();
    let mut estimates = Vec::new();
    let mut margins = Vec::new();
    for n in [8usize, 16, 32, 64] {
        let w = WindowedLinf::new(rot.clone(), n);
        estimates.push(shad_estimate_linf(&w, 8, 4).unwrap().estimate);
        margins.push(linf_injectivity_margin(&w).unwrap());
    }
    println!("         estimates {estimates:.3?} margins {margins:.4?}");
    c.expect(estimates[3] >= 10.0, format!("estimate at N=64 is {}", estimates[3]));
    for w in estimates.windows(2) {
        c.expect(w[1] >= w[0] - 1e-9, format!("estimate not monotone: {w:?}"));
    }
    for w in margins.windows(2) {
        c.expect(w[1] <= 0.7 * w[0], format!("margin ratio {}", w[1] / w[0]));
    }
    c.finish();
}

#[test]
fn criterion_05_finite_dimensional_equivalence() {
    let mut c = Check::new(5, "eigenvalue / shadowing / expansivity equivalence on 4x4 matrices", 60);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut disagreements = 0;
    for trial in 0..200 {
        let op = LinOp::dense(random_hyperbolic(&mut rng, 4, EIGEN_MARGIN).unwrap(), NormTag::L2).unwrap();
        let case = equivalence_case(&op).unwrap();
        if !case.agrees() || !case.eigen_hyperbolic {
            disagreements += 1;
            c.expect(false, format!("hyperbolic trial {trial}: {case:?}"));
        }
        c.expect(case.expansive, format!("trial {trial}: not expansive"));
    }
    for trial in 0..50 {
        let op = LinOp::dense(random_circle_control(&mut rng, 4, EIGEN_MARGIN).unwrap(), NormTag::L2).unwrap();
        let case = equivalence_case(&op).unwrap();
        if !case.agrees() || case.eigen_hyperbolic {
            disagreements += 1;
            c.expect(false, format!("control trial {trial}: {case:?}"));
        }
    }
    println!("         disagreements: {disagreements} of 250 (200 hyperbolic, 50 circle controls)");
    c.finish();
}

#[test]
fn criterion_06_structural_stability() {
    let mut c = Check::new(6, "bump perturbation of diag(1/2, 2) is conjugate to it", 30);
    let op = diag(0.5, 2.0, NormTag::Linf);
    let beta = LipschitzPerturbation::bump(re(&[0.1, -0.2]), re(&[1.0, 1.0]), 0.01, 0.01, NormTag::Linf).unwrap();
    let f = conjugacy_solve(&op, &beta, 1e-8, 64).unwrap();
    c.expect(f.contraction_factor <= 0.03 + 1e-9, format!("factor {}", f.contraction_factor));
    let pts = test_points(2, 2.0, 100, 6);
    let diffs = f.picard_differences(&pts).unwrap();
    for w in diffs.windows(2) {
        if w[0] > 1e-12 {
            c.expect(w[1] <= (0.03 + 1e-9) * w[0], format!("picard step ratio {}", w[1] / w[0]));
        }
    }
    let h_max = pts.iter().map(|x| NormTag::Linf.of(&f.h(x).unwrap())).fold(0.0, f64::max);
    c.expect(h_max <= 0.03, format!("sup |h| {h_max}"));
    let res = conjugacy_residual(&f, &pts).unwrap();
    c.expect(res <= 1e-6, format!("residual {res}"));
    let inv = inverse_conjugacy(&op, &beta, 1e-8).unwrap();
    let comp = composition_defect(&f, &inv, &pts).unwrap();
    c.expect(comp <= 1e-5, format!("composition defect {comp}"));
    println!("         sup|h| {h_max:.3e}, residual {res:.3e}, composition {comp:.3e}");
    c.finish();
}

#[test]
fn criterion_07_local_linearization() {
    let mut c = Check::new(7, "local linearization of a smooth planar map", 30);
    let f = SmoothMap {
        map: Arc::new(|v: &[Scalar]| vec![v[0] * 0.5 + v[0] * v[0] * 0.005, v[1] * 2.0 - v[1] * v[1] * v[1] * 0.005]),
        derivative: Arc::new(|v: &[Scalar]| {
            DenseMatrix::diagonal(&[Scalar::new(0.5, 0.0) + v[0] * 0.01, Scalar::new(2.0, 0.0) - v[1] * v[1] * 0.015]).unwrap()
        }),
    };
    let gh = grobman_hartman_local(&f, &re(&[0.0, 0.0]), 0.5, 1e-7, NormTag::Linf).unwrap();
    c.expect(gh.radius >= 0.05, format!("radius {}", gh.radius));
    let pts = test_points(2, gh.radius, 100, 7);
    let res = conjugacy_residual(&gh.field, &pts).unwrap();
    c.expect(res <= 1e-5, format!("residual {res}"));
    println!("         radius {}, residual {res:.3e}", gh.radius);
    c.finish();
}

#[test]
fn criterion_08_rolewicz_and_obstruction() {
    let mut c = Check::new(8, "backward-shift witness and adjoint obstruction", 5);
    let cd = CriterionData::rolewicz(2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eps = 1e-6;
    let targets: Vec<Vector> = (0..3)
        .map(|_| {
            let lo = rng.gen_range(0..=4i64);
            let len = rng.gen_range(1..=4i64);
            let entries: Vec<(i64, Scalar)> =
                (lo..lo + len).map(|k| (k, Scalar::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))).collect();
            Vector::Sparse(SparseBiSeq::from_entries(entries, NormTag::L2).unwrap())
        })
        .collect();
    let w = criterion_witness(&cd, &targets, eps, DEFAULT_STEP_BUDGET).unwrap();
    let seed = Vector::Sparse(w.seed.clone());
    for (i, (t, n)) in targets.iter().zip(&w.visit_times).enumerate() {
        let err = cd.op().apply_power(*n as i64, &seed).unwrap().distance(t).unwrap();
        c.expect(err <= eps, format!("target {i}: replay error {err}"));
        c.expect(w.visit_errors[i] <= eps, format!("target {i}: reported error {}", w.visit_errors[i]));
    }
    let mut failures = 0;
    for d in 1..=4usize {
        for _ in 0..10 {
            let rows: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let op = LinOp::from_real_rows(&rows, NormTag::L2).unwrap();
            match adjoint_eigen_obstruction(&op) {
                Ok(cert) if cert.replay_defect <= 1e-6 => {}
                other => {
                    failures += 1;
                    c.expect(false, format!("d={d}: {other:?}"));
                }
            }
        }
    }
    println!("         visit times {:?}, obstruction failures {failures} of 40", w.visit_times);
    c.finish();
}

#[test]
fn criterion_09_homoclinic_density() {
    let mut c = Check::new(9, "approximation of homoclinic vectors on lockdown", 1);
    let (l, _, _) = lockdown(0.5, NormTag::L1).unwrap();
    let split = Splitting::coordinate(Cut::AtMost(0), NormTag::L1);
    let half_e1 = Vector::Sparse(SparseBiSeq::from_real([(0, 1.0), (1, 0.5)], NormTag::L1).unwrap());
    let tail = geometric_tail(20, 0.5, NormTag::L1).unwrap();
    let tail_plus = tail.add(&Vector::Sparse(SparseBiSeq::from_real([(1, 0.5)], NormTag::L1).unwrap())).unwrap();
    for (name, x) in [("e0 + e1/2", half_e1), ("geometric tail", tail), ("tail + e1/2", tail_plus)] {
        let errs: Vec<f64> = [5usize, 10, 15]
            .iter()
            .map(|n| {
                let a = hhat_approximate(&l, &split, &x, *n).unwrap();
                a.stable_error.max(a.unstable_error)
            })
            .collect();
        println!("         {name}: errors at n = 5, 10, 15: {errs:?}");
        for w in errs.windows(2) {
            c.expect(w[1] <= 0.55f64.powi(5) * w[0], format!("{name}: ratio {}", (w[1] / w[0]).powf(0.2)));
        }
    }
    c.finish();
}

#[test]
fn criterion_10_summability() {
    let mut c = Check::new(10, "summability constant for operators with spectral radius <= 0.9", 60);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut violations, mut rejected) = (0, 0);
    for i in 0..50u64 {
        let d = rng.gen_range(2..=4usize);
        let op = LinOp::dense(random_stable(&mut rng, d, 0.9).unwrap(), NormTag::L2).unwrap();
        let rep = summability_verify(&op, 20, 80, i).unwrap();
        violations += rep.violations;
        c.expect(rep.violations == 0, format!("op {i}: {} violations, max ratio {}", rep.violations, rep.max_ratio / rep.gamma));
        let (err, ok) = summability_shadow_check(&op, rep.gamma, 1e-3, 80, i).unwrap();
        if !ok {
            rejected += 1;
            c.expect(false, format!("op {i}: replay error {err} exceeds gamma·delta {}", rep.gamma * 1e-3));
        }
    }
    println!("         violations {violations}, rejected constants {rejected}");
    c.finish();
}
