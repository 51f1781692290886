//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::time::Instant;

use common::*;
use rand::Rng;
use speccalc::calculus::{
    apply_primary, apply_regularized_with, apply_with_regularizer, calculus_contour, diagonal_projection,
    restrict_to_projection, spectral_projection, CalculusOptions, CalculusResult,
};
use speccalc::ext::{ExtComplex, MERGE_TOL};
use speccalc::fredholm::{classify, profile, resolvent_transfer_check};
use speccalc::function::{default_regularizer, MeromFn};
use speccalc::geometry::{interior_samples, omega_contains, BisectorRegion, SingularPoint};
use speccalc::operator::{DiagonalModel, OperatorModel, SpectralPoint, SpectralSet};
use speccalc::oracle::oracle_profile;
use speccalc::scenario::{bundled, Scenario};
use speccalc::verify::{verify_point_spectrum, verify_smt, Verdict};
use speccalc::{Count, Error};

const QUADRATURE_TOL: f64 = 1e-8;
const AXIOM_TOL: f64 = 1e-9;
const MULTIPLICATIVITY_TOL: f64 = 1e-8;
const REGULARIZER_DENSE_TOL: f64 = 1e-8;
const DIAGONAL_EXACT_TOL: f64 = 1e-12;
const TRANSPORT_TOL: f64 = 1e-8;
const PROJECTION_DENSE_TOL: f64 = 1e-8;
const WINDING_TOL: f64 = 1e-6;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

type Check = fn(&Corpus) -> Outcome;

/// Operators and results shared between criteria.
struct Corpus {
    dense: Vec<DenseCase>,
    /// `(case index, function index, f(A))`
    primary: Vec<(usize, usize, CalculusResult)>,
    primary_errors: Vec<String>,
    scenarios: Vec<Scenario>,
}

fn build_corpus() -> Corpus {
    let mut rng = rng(0x5eed);
    let dense: Vec<DenseCase> = (0..20)
        .map(|k| {
            let n = 2 + (k % 11);
            random_dense(&mut rng, n)
        })
        .collect();
    let fns = rational_corpus();
    let mut primary = Vec::new();
    let mut primary_errors = Vec::new();
    for (ci, case) in dense.iter().enumerate() {
        for (fi, (name, f, _)) in fns.iter().enumerate() {
            match apply_primary(f, &case.op, 1e-10) {
                Ok(r) => primary.push((ci, fi, r)),
                Err(e) => primary_errors.push(format!("case {ci} f={name}: {e}")),
            }
        }
    }
    Corpus {
        dense,
        primary,
        primary_errors,
        scenarios: bundled().expect("bundled scenarios load"),
    }
}

fn quadrature_oracle(cp: &Corpus) -> Outcome {
    let fns = rational_corpus();
    let mut worst = 0.0f64;
    for (ci, fi, r) in &cp.primary {
        let case = &cp.dense[*ci];
        let oracle = case.oracle(fns[*fi].2);
        worst = worst.max(rel_err(&dense_of(&r.operator), &oracle));
    }
    let pairs = cp.primary.len();
    let ok = cp.primary_errors.is_empty() && pairs == 200 && worst <= QUADRATURE_TOL;
    let mut detail = format!("{pairs} operator/function pairs, max rel Frobenius error {worst:.2e} (tol {QUADRATURE_TOL:.0e})");
    if let Some(e) = cp.primary_errors.first() {
        detail.push_str(&format!("; first failure: {e}"));
    }
    outcome(ok, detail)
}

fn calculus_axioms(cp: &Corpus) -> Outcome {
    let opts = CalculusOptions::with_tol(1e-11);
    let mut worst_axiom = 0.0f64;
    let mut worst_mult = 0.0f64;
    let fns = rational_corpus();
    for case in &cp.dense {
        let a = case.matrix();
        let n = a.nrows();
        let id = CMatrix::identity(n, n);
        let b = c64(case.a + 2.0);
        let run = |f: &MeromFn| dense_of(&apply_regularized_with(f, &case.op, &opts).expect("calculus").operator);
        let checks = [
            (run(&MeromFn::one()), id.clone()),
            (run(&MeromFn::resolvent_fn(b)), (&id * b - a).try_inverse().unwrap()),
            (run(&MeromFn::plus_resolvent_fn(b)), (&id * b + a).try_inverse().unwrap()),
            (run(&MeromFn::zeta()), a.clone()),
        ];
        for (x, y) in &checks {
            worst_axiom = worst_axiom.max((x - y).norm() / y.norm().max(1.0));
        }
        for (f, g) in [(0, 1), (3, 5), (4, 7), (2, 8)] {
            let fa = run(&fns[f].1);
            let ga = run(&fns[g].1);
            let fga = run(&fns[f].1.mul(&fns[g].1));
            let prod = &fa * &ga;
            worst_mult = worst_mult.max((&fga - &prod).norm() / prod.norm().max(1.0));
        }
    }
    outcome(
        worst_axiom <= AXIOM_TOL && worst_mult <= MULTIPLICATIVITY_TOL,
        format!(
            "identity/resolvents/zeta max error {worst_axiom:.2e} (tol {AXIOM_TOL:.0e}), multiplicativity {worst_mult:.2e} (tol {MULTIPLICATIVITY_TOL:.0e})"
        ),
    )
}

fn c64(x: f64) -> C {
    c(x, 0.0)
}

fn sqrt_fn(a: f64) -> MeromFn {
    MeromFn::from_json(&serde_json::json!({"kind": "sqrt_branch"}), a).unwrap()
}

fn dense_for_regularization() -> OperatorModel {
    let region = BisectorRegion::new(std::f64::consts::FRAC_PI_4, 0.0).unwrap();
    let v = CMatrix::from_fn(4, 4, |i, j| if i == j { c(1.0, 0.0) } else { c(0.1 * (i as f64 - j as f64), 0.05) });
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0, 1.0), c(0.0, 2.0), c(0.0, -1.0), c(0.3, -1.5)]));
    let m = &v * d * v.clone().try_inverse().unwrap();
    speccalc::operator::DenseOperator::new(m, Some(region)).into()
}

fn diagonal_from(v: serde_json::Value) -> OperatorModel {
    OperatorModel::from_json(&v).unwrap()
}

fn diagonal_close(x: &DiagonalModel, y: &DiagonalModel, tol: f64) -> bool {
    let ex = x.raw_eigenvalues();
    let ey = y.raw_eigenvalues();
    ex.len() == ey.len()
        && ex.iter().zip(&ey).all(|(p, q)| (p - q).norm() <= tol * p.norm().max(1.0))
        && x.atoms.len() == y.atoms.len()
        && x.atoms.iter().zip(&y.atoms).all(|(p, q)| p.mult == q.mult)
        && x.tails.len() == y.tails.len()
        && x.tails.iter().zip(&y.tails).all(|(p, q)| p.limit.close_to(&q.limit, tol))
}

fn regularizer_independence(_: &Corpus) -> Outcome {
    let opts = CalculusOptions { check_independence: false, ..CalculusOptions::default() };
    let dense = dense_for_regularization();
    let pole = MeromFn::rational(speccalc::function::Rational::from_factors(c64(1.0), [(c(0.0, 0.5), -1)]));
    let unbounded = diagonal_from(serde_json::json!({
        "kind": "diagonal", "omega": std::f64::consts::FRAC_PI_4, "a": 0.0,
        "atoms": [{"value": "-i", "mult": 2}],
        "tails": [{"limit": "inf", "generator": "geometric", "base": "i", "ratio": 2}]
    }));
    let shifted = diagonal_from(serde_json::json!({
        "kind": "diagonal", "omega": std::f64::consts::FRAC_PI_4, "a": 1.0,
        "atoms": [{"value": "2i", "mult": 1}],
        "tails": [{"limit": -1, "generator": "geometric", "base": "i", "ratio": 0.5}]
    }));
    let z_over = MeromFn::rational(speccalc::function::Rational::from_factors(c64(1.0), [(c64(0.0), 1), (c64(-1.0), -1)]));
    let cases: Vec<(&str, MeromFn, &OperatorModel)> = vec![
        ("1/(z-i/2) dense", pole.clone(), &dense),
        ("sqrt(z)/(z-i/2) dense", sqrt_fn(0.0).mul(&pole), &dense),
        ("sqrt(z) unbounded", sqrt_fn(0.0), &unbounded),
        ("zeta unbounded", MeromFn::zeta(), &unbounded),
        ("z/(1+z) at -a", z_over, &shifted),
    ];
    let mut worst_dense = 0.0f64;
    let mut diag_ok = true;
    let mut failures = Vec::new();
    for (name, f, op) in &cases {
        let meta = op.meta().unwrap();
        let a = meta.region.halfwidth_a;
        let b = c64(a + 2.0);
        let run = || -> speccalc::Result<(CalculusResult, CalculusResult)> {
            let e = default_regularizer(f, &meta, b)?;
            let e2 = e.mul(&MeromFn::resolvent_fn(c64(-(a + 3.0))));
            Ok((apply_with_regularizer(f, op, &e, &opts)?, apply_with_regularizer(f, op, &e2, &opts)?))
        };
        match run() {
            Err(e) => failures.push(format!("{name}: {e}")),
            Ok((r1, r2)) => {
                if r1.regularizer_used.is_none() {
                    failures.push(format!("{name}: no regularization needed"));
                }
                match (&r1.operator, &r2.operator) {
                    (OperatorModel::Dense(x), OperatorModel::Dense(y)) => {
                        worst_dense = worst_dense.max((&x.matrix - &y.matrix).norm() / y.matrix.norm().max(1.0))
                    }
                    (OperatorModel::Diagonal(x), OperatorModel::Diagonal(y)) => {
                        if !diagonal_close(x, y, DIAGONAL_EXACT_TOL) {
                            diag_ok = false;
                            failures.push(format!("{name}: diagonal results differ"));
                        }
                    }
                    _ => failures.push(format!("{name}: backends differ")),
                }
            }
        }
    }
    outcome(
        failures.is_empty() && diag_ok && worst_dense <= REGULARIZER_DENSE_TOL,
        format!(
            "{} functions, dense max difference {worst_dense:.2e} (tol {REGULARIZER_DENSE_TOL:.0e}), diagonal componentwise at {DIAGONAL_EXACT_TOL:.0e}{}",
            cases.len(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn eigenvector_transport(cp: &Corpus) -> Outcome {
    let fns = rational_corpus();
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for (ci, fi, r) in &cp.primary {
        let case = &cp.dense[*ci];
        let fa = dense_of(&r.operator);
        for (j, &lambda) in case.lambdas.iter().enumerate() {
            let x = case.v.column(j).into_owned();
            let residual = (&fa * &x - &x * (fns[*fi].2)(lambda)).norm() / x.norm();
            worst = worst.max(residual);
            checked += 1;
        }
    }
    let mut diag_ok = true;
    for s in &cp.scenarios {
        let Some(d) = s.operator.as_diagonal() else { continue };
        let Ok(r) = apply_regularized_with(&s.function, &s.operator, &CalculusOptions::default()) else {
            diag_ok = false;
            continue;
        };
        let fd = r.operator.as_diagonal().expect("diagonal result");
        let region = d.region.as_ref();
        for (lambda, w) in d.raw_eigenvalues().iter().zip(fd.raw_eigenvalues()) {
            let want = s.function.eval(*lambda);
            checked += 1;
            let near_singular = region.is_some_and(|reg| reg.singular_at(ExtComplex::Finite(*lambda), 1e-12).is_some());
            if !near_singular && (w - want).norm() > TRANSPORT_TOL * want.norm().max(1.0) {
                diag_ok = false;
            }
        }
    }
    outcome(
        diag_ok && worst <= TRANSPORT_TOL,
        format!("{checked} eigenpairs, max dense residual {worst:.2e}·|x| (tol {TRANSPORT_TOL:.0e}), diagonal {}", if diag_ok { "exact" } else { "MISMATCH" }),
    )
}

fn fredholm_vs_truncation(cp: &Corpus) -> Outcome {
    let mut scenarios = 0;
    let mut probes = 0;
    let mut mismatches = Vec::new();
    for s in &cp.scenarios {
        let Some(d) = s.operator.as_diagonal() else { continue };
        scenarios += 1;
        for &mu in &s.probes {
            probes += 1;
            match profile(&s.operator, mu) {
                Ok(p) if p == oracle_profile(d, mu) => {}
                Ok(p) => mismatches.push(format!("{} at {mu}: {p:?} vs {:?}", s.name, oracle_profile(d, mu))),
                Err(e) => mismatches.push(format!("{} at {mu}: {e}", s.name)),
            }
        }
    }
    let gap = cp.scenarios.iter().find(|s| s.name == "diag_browder_gap").map(|s| {
        let m = classify(&profile(&s.operator, c(0.0, 2.0)).unwrap());
        m.contains(9) && !m.contains(8) && !m.contains(7)
    });
    let separated = gap == Some(true);
    outcome(
        mismatches.is_empty() && scenarios >= 6 && separated,
        format!(
            "{scenarios} diagonal scenarios, {probes} probes, {} mismatches, Phi_8/Phi_9 separation {}{}",
            mismatches.len(),
            if separated { "observed" } else { "MISSING" },
            mismatches.first().map(|m| format!("; first: {m}")).unwrap_or_default()
        ),
    )
}

fn spectral_mapping_matrix(cp: &Corpus) -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    let mut dense = 0;
    let mut m_a_accumulating = false;
    let mut m_a_isolated = false;
    for s in &cp.scenarios {
        if s.operator.is_dense() {
            dense += 1;
        }
        if let (Some(d), Ok(meta)) = (s.operator.as_diagonal(), s.operator.meta()) {
            for p in &meta.m_a {
                match meta.region.location(*p) {
                    ExtComplex::Finite(z) if d.is_accumulation(z) => m_a_accumulating = true,
                    ExtComplex::Finite(_) => m_a_isolated = true,
                    ExtComplex::Infinity => {}
                }
            }
        }
        match verify_smt(&s.operator, &s.function, &(0..=9).collect::<Vec<_>>(), &CalculusOptions::default()) {
            Err(e) => problems.push(format!("{}: {e}", s.name)),
            Ok(report) => {
                for e in &report.entries {
                    let fine = match e.index {
                        0..=5 | 8 => e.verdict == Verdict::Equal,
                        6 => matches!(e.verdict, Verdict::Equal | Verdict::LhsSubset),
                        7 => matches!(e.verdict, Verdict::Equal | Verdict::RhsSubset),
                        _ => e.verdict != Verdict::Violation,
                    };
                    if !fine {
                        problems.push(format!("{} i={}: {:?}", s.name, e.index, e.verdict));
                    }
                }
                problems.extend(s.mismatches(&report).into_iter().map(|d| format!("{}: {d}", s.name)));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let coverage = cp.scenarios.len() >= 8 && dense > 0 && m_a_accumulating && m_a_isolated;
    outcome(
        problems.is_empty() && coverage && elapsed < 60.0,
        format!(
            "{} scenarios ({dense} dense), accumulation at a singular point: {m_a_accumulating}, isolated singular eigenvalue: {m_a_isolated}, {} problems, {elapsed:.2}s{}",
            cp.scenarios.len(),
            problems.len(),
            problems.first().map(|p| format!("; first: {p}")).unwrap_or_default()
        ),
    )
}

fn resolvent_transfer(cp: &Corpus) -> Outcome {
    let mut rng = rng(0xb0b);
    let mut failures = Vec::new();
    let mut triples = 0;
    for k in 0..50 {
        let (op, mu) = if k % 5 == 4 {
            let diag: Vec<&Scenario> = cp.scenarios.iter().filter(|s| !s.operator.is_dense()).collect();
            let s = diag[rng.random_range(0..diag.len())];
            (s.operator.clone(), s.probes[rng.random_range(0..s.probes.len())])
        } else {
            let n = rng.random_range(2..7);
            let case = random_dense(&mut rng, n);
            let mut op = case.op.clone();
            if k % 5 == 3 {
                // a Jordan block at the first eigenvalue
                let mut j = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(case.lambdas.clone()));
                j[(1, 1)] = case.lambdas[0];
                j[(0, 1)] = c64(1.0);
                let m = &case.v * j * case.v.clone().try_inverse().unwrap();
                op = speccalc::operator::DenseOperator::new(m, op.region().cloned()).into();
            }
            let mu = if k % 2 == 0 { case.lambdas[0] } else { sample_in_bisector(&mut rng, case.omega, case.a) };
            (op, mu)
        };
        let a = op.region().map_or(0.0, |r| r.halfwidth_a);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let b = c(sign * (a + rng.random_range(0.5..3.0)), 0.0);
        triples += 1;
        match resolvent_transfer_check(&op, mu, b) {
            Ok(true) => {}
            Ok(false) => failures.push(format!("triple {k}: membership differs at mu={mu}, b={b}")),
            Err(e) => failures.push(format!("triple {k}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{triples} (op, mu, b) triples, {} mismatches{}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn point_spectrum_mapping(cp: &Corpus) -> Outcome {
    let mut failures = Vec::new();
    let mut equalities = 0;
    for s in &cp.scenarios {
        match verify_point_spectrum(&s.operator, &s.function, &CalculusOptions::default()) {
            Err(e) => failures.push(format!("{}: {e}", s.name)),
            Ok(r) => {
                if !r.forward {
                    failures.push(format!("{}: forward inclusion fails", s.name));
                }
                if !r.backward {
                    failures.push(format!("{}: backward bound violated", s.name));
                }
                if s.condition_p == Some(true) {
                    if !r.condition_p {
                        failures.push(format!("{}: declared condition (P) not confirmed by the probe", s.name));
                    } else if r.equality != Some(true) {
                        failures.push(format!("{}: equality fails under condition (P)", s.name));
                    } else {
                        equalities += 1;
                    }
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} scenarios, {equalities} equalities under condition (P){}",
            cp.scenarios.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn multiset_match(x: &[C], y: &[C], tol: f64) -> bool {
    if x.len() != y.len() {
        return false;
    }
    let mut used = vec![false; y.len()];
    x.iter().all(|p| match (0..y.len()).find(|&k| !used[k] && (y[k] - p).norm() <= tol) {
        Some(k) => {
            used[k] = true;
            true
        }
        None => false,
    })
}

fn projection_laws(cp: &Corpus) -> Outcome {
    let mut worst = 0.0f64;
    let mut selections = 0;
    let mut failures = Vec::new();
    for case in cp.dense.iter().filter(|d| d.lambdas.len() <= 5) {
        let a = case.matrix();
        let n = case.lambdas.len();
        for mask in 1..(1u32 << n) - 1 {
            let chosen: Vec<C> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| case.lambdas[k]).collect();
            let lambda = SpectralSet::from_points(chosen.iter().map(|&z| SpectralPoint::atom(z, Count::Finite(1))));
            selections += 1;
            let run = || -> speccalc::Result<f64> {
                let proj = spectral_projection(&case.op, &lambda)?;
                let p = dense_of(&proj.projector);
                let idem = (&p * &p - &p).norm() / p.norm().max(1.0);
                let comm = (&p * a - a * &p).norm() / (p.norm() * a.norm()).max(1.0);
                let restricted = restrict_to_projection(&case.op, &proj)?;
                let eig = speccalc::linalg::eigenvalues(&dense_of(&restricted));
                if !multiset_match(&eig, &chosen, PROJECTION_DENSE_TOL * a.norm().max(1.0)) {
                    return Err(Error::InvalidArgument(format!("restricted spectrum {eig:?} differs from {chosen:?}")));
                }
                Ok(idem.max(comm))
            };
            match run() {
                Ok(e) => worst = worst.max(e),
                Err(e) => failures.push(format!("dense mask {mask:b}: {e}")),
            }
        }
    }
    for s in &cp.scenarios {
        let Some(d) = s.operator.as_diagonal() else { continue };
        let (na, nt) = (d.atoms.len(), d.tails.len());
        for mask in 0..(1u32 << (na + nt)) {
            let atoms: Vec<bool> = (0..na).map(|k| mask & (1 << k) != 0).collect();
            let tails: Vec<bool> = (0..nt).map(|k| mask & (1 << (na + k)) != 0).collect();
            let proj = match diagonal_projection(d, atoms.clone(), tails.clone()) {
                Ok(p) => p,
                Err(Error::NotClopen(_)) => continue,
                Err(e) => {
                    failures.push(format!("{}: {e}", s.name));
                    continue;
                }
            };
            selections += 1;
            let p = proj.projector.as_diagonal().unwrap();
            let idempotent = p.raw_eigenvalues().iter().all(|v| *v == c64(0.0) || *v == c64(1.0));
            let kept_rank = d
                .atoms
                .iter()
                .zip(&atoms)
                .filter(|(_, keep)| **keep)
                .fold(Count::ZERO, |acc, (at, _)| acc + at.mult)
                + if tails.iter().any(|&t| t) { Count::Infinite } else { Count::ZERO };
            let range_rank = p.atoms.iter().filter(|at| at.value == c64(1.0)).fold(Count::ZERO, |acc, at| acc + at.mult);
            let aligned = kept_rank == range_rank;
            let restricted = restrict_to_projection(&s.operator, &proj).unwrap();
            let mut expected = SpectralSet::new();
            for (_, at) in d.atoms.iter().enumerate().filter(|(k, _)| atoms[*k]) {
                expected.insert(SpectralPoint::atom(at.value, at.mult));
            }
            for (t, _) in d.tails.iter().zip(&tails).filter(|(_, keep)| **keep) {
                for v in d.tail_elements(t) {
                    expected.insert(SpectralPoint::atom(v, Count::Finite(1)));
                }
                match t.limit {
                    ExtComplex::Finite(l) => expected.insert(SpectralPoint::accumulation(l)),
                    ExtComplex::Infinity => expected.includes_infinity = true,
                }
            }
            let got = restricted.spectrum();
            let same = got.includes_infinity == expected.includes_infinity
                && got.values().all(|z| expected.contains(z, DIAGONAL_EXACT_TOL))
                && expected.values().all(|z| got.contains(z, DIAGONAL_EXACT_TOL));
            if !(idempotent && aligned && same) {
                failures.push(format!("{} mask {mask:b}: idempotent {idempotent}, rank {aligned}, spectrum {same}", s.name));
            }
        }
    }
    outcome(
        failures.is_empty() && worst <= PROJECTION_DENSE_TOL,
        format!(
            "{selections} clopen selections, dense max defect {worst:.2e} (tol {PROJECTION_DENSE_TOL:.0e}), diagonal exact{}",
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn geometry(cp: &Corpus) -> Outcome {
    let mut contours = 0;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let fns = rational_corpus();
    let mut ops: Vec<(&OperatorModel, &MeromFn)> = cp.dense.iter().map(|d| (&d.op, &fns[1].1)).collect();
    ops.extend(cp.scenarios.iter().filter(|s| s.operator.is_dense()).map(|s| (&s.operator, &s.function)));
    for (op, f) in ops {
        let cc = match calculus_contour(f, op, 8) {
            Ok(cc) => cc,
            Err(e) => {
                failures.push(e.to_string());
                continue;
            }
        };
        contours += 1;
        let mut inside: Vec<C> = interior_samples(&cc.region, cc.phi_prime, &cc.s_prime, &cc.path, 6);
        inside.extend(op.spectrum().values().filter(|z| cc.region.singular_at(ExtComplex::Finite(*z), MERGE_TOL).is_none()));
        for z in inside {
            match cc.path.winding_number(z) {
                Ok(w) => worst = worst.max((w - 1.0).abs()),
                Err(e) => failures.push(e.to_string()),
            }
        }
        let a = cc.region.halfwidth_a;
        for d in cc.s_prime.keys() {
            if let ExtComplex::Finite(z) = d.location(a) {
                match cc.path.winding_number(z) {
                    Ok(w) => worst = worst.max(w.abs()),
                    Err(e) => failures.push(e.to_string()),
                }
            }
        }
    }
    let mut rng = rng(0x6e57);
    let mut nesting_violations = 0;
    for _ in 0..100 {
        let a = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.0..2.0) };
        let phi = rng.random_range(0.05..FRAC_PI_2 - 0.1);
        let phi_prime = rng.random_range(phi..FRAC_PI_2);
        let mut s = BTreeMap::new();
        let mut s_prime = BTreeMap::new();
        let points = if a > 0.0 {
            vec![SingularPoint::NegA, SingularPoint::PosA, SingularPoint::Infinity]
        } else {
            vec![SingularPoint::PosA, SingularPoint::Infinity]
        };
        for d in points {
            if rng.random_bool(0.7) {
                let x = rng.random_range(0.01..0.5);
                s.insert(d, x);
                s_prime.insert(d, rng.random_range(x..0.6));
            }
        }
        for _ in 0..200 {
            let z = c(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            if omega_contains(z, phi_prime, a, &s_prime) && !omega_contains(z, phi, a, &s) {
                nesting_violations += 1;
            }
        }
    }
    outcome(
        failures.is_empty() && worst <= WINDING_TOL && nesting_violations == 0,
        format!(
            "{contours} contours, max winding defect {worst:.2e} (tol {WINDING_TOL:.0e}), 100 nesting pairs with {nesting_violations} violations{}",
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let corpus = build_corpus();
    let criteria: [(&str, Check); 10] = [
        ("quadrature_oracle_equivalence", quadrature_oracle),
        ("calculus_axioms", calculus_axioms),
        ("regularizer_independence", regularizer_independence),
        ("eigenvector_transport", eigenvector_transport),
        ("fredholm_profiles_vs_truncation", fredholm_vs_truncation),
        ("spectral_mapping_matrix", spectral_mapping_matrix),
        ("resolvent_transfer", resolvent_transfer),
        ("point_spectrum_mapping", point_spectrum_mapping),
        ("projection_laws", projection_laws),
        ("contour_geometry", geometry),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check(&corpus);
        if !o.ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {} ({:.2}s)",
            if o.ok { "PASS" } else { "FAIL" },
            k + 1,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.2}s",
        criteria.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
