use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use super::{FnNode, Local, MeromFn, Rational};
use crate::error::{Error, Result};
use crate::ext::{ExtComplex, MERGE_TOL};
use crate::geometry::{omega_contains, BisectorRegion, SingularPoint};
use crate::operator::SpectralSet;
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regularity {
    Regular,
    QuasiRegular,
    Inconclusive,
}

/// What the function-space routines need to know about an operator.
#[derive(Debug, Clone)]
pub struct BackendMeta {
    pub region: BisectorRegion,
    /// Singular points in the extended spectrum.
    pub m_a: Vec<SingularPoint>,
    /// Singular points that are eigenvalues.
    pub sigma_p_singular: Vec<SingularPoint>,
    /// The point spectrum.
    pub eigenvalues: SpectralSet,
}

const SAMPLES: usize = 40;

fn probe_angles(omega: f64) -> [f64; 2] {
    [omega, 0.5 * (omega + FRAC_PI_2)]
}

/// Point at distance `t` from `d` (or modulus `t` for ∞) heading into the bisector.
fn ray_point(d: ExtComplex, psi: f64, t: f64) -> Complex64 {
    match d {
        ExtComplex::Infinity => Complex64::from_polar(t, psi),
        // rays into -a leave towards the left half-plane
        ExtComplex::Finite(c) if c.re < 0.0 => c + Complex64::from_polar(t, std::f64::consts::PI - psi),
        ExtComplex::Finite(c) => c + Complex64::from_polar(t, psi),
    }
}

fn start_scale(d: ExtComplex, a: f64) -> f64 {
    match d {
        ExtComplex::Infinity => (2.0 * a).max(1.0),
        ExtComplex::Finite(_) if a == 0.0 => 1.0,
        ExtComplex::Finite(_) => 0.5 * a.min(1.0),
    }
}

/// Integral increments of `|g(z) - c| d(log t)` over the dyadic shells.
fn shell_increments(g: &dyn Fn(Complex64) -> Complex64, c: Complex64, d: ExtComplex, a: f64, psi: f64) -> Option<Vec<f64>> {
    let rule = GaussLegendre::new(8);
    let l = start_scale(d, a);
    let step = if d.is_infinite() { 2f64.ln() } else { -(2f64.ln()) };
    let mut out = Vec::with_capacity(SAMPLES);
    for k in 0..SAMPLES {
        let u0 = l.ln() + step * k as f64;
        let u1 = u0 + step;
        let mut acc = 0.0;
        for (u, w) in rule.on_interval(u0.min(u1), u0.max(u1)) {
            let z = ray_point(d, psi, u.exp());
            let v = (g(z) - c).norm();
            if !v.is_finite() {
                return None;
            }
            acc += w * v;
        }
        out.push(acc);
    }
    Some(out)
}

fn increments_converge(inc: &[f64]) -> bool {
    let total: f64 = inc.iter().sum();
    if total == 0.0 {
        return true;
    }
    let n = inc.len();
    let tail = &inc[n - 4..];
    if tail.iter().all(|&x| x <= 1e-15 * total) {
        return true;
    }
    if tail.windows(2).all(|w| w[1] > 0.0 && w[0] / w[1] >= 1.2) {
        return true;
    }
    // power-law decay in the shell index: summable when the exponent exceeds 1
    let pts: Vec<(f64, f64)> = inc
        .iter()
        .enumerate()
        .skip(n / 2)
        .filter(|(_, &x)| x > 0.0)
        .map(|(k, &x)| (((k + 1) as f64).ln(), x.ln()))
        .collect();
    if pts.len() < 4 {
        return false;
    }
    -fit_slope(&pts) > 1.2
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn probe_limit(g: &dyn Fn(Complex64) -> Complex64, c: Complex64, d: ExtComplex, region: &BisectorRegion) -> bool {
    probe_angles(region.omega).iter().all(|&psi| {
        shell_increments(g, c, d, region.halfwidth_a, psi).is_some_and(|inc| increments_converge(&inc))
    })
}

/// Numeric test of the integral condition at `d` using the declared limit.
pub fn regularity_probe(f: &MeromFn, d: SingularPoint, region: &BisectorRegion) -> Regularity {
    let p = region.location(d);
    let Some(local) = f.local_at(p) else {
        return Regularity::Inconclusive;
    };
    match local.limit {
        ExtComplex::Finite(c) => {
            if probe_limit(&|z| f.eval(z), c, p, region) {
                Regularity::Regular
            } else {
                Regularity::Inconclusive
            }
        }
        ExtComplex::Infinity => {
            let zero = Complex64::new(0.0, 0.0);
            if probe_limit(&|z| f.eval(z).inv(), zero, p, region) {
                Regularity::QuasiRegular
            } else {
                Regularity::Inconclusive
            }
        }
    }
}

/// Regularity from declared behaviour, falling back to the probe when the
/// order is not known.
pub fn regularity(f: &MeromFn, d: SingularPoint, region: &BisectorRegion) -> Regularity {
    match f.local_at(region.location(d)) {
        Some(Local { limit: ExtComplex::Finite(_), order: Some(b) }) if b > 0.0 => Regularity::Regular,
        Some(Local { limit: ExtComplex::Infinity, order: Some(g) }) if g > 0.0 => Regularity::QuasiRegular,
        Some(_) => regularity_probe(f, d, region),
        None => Regularity::Inconclusive,
    }
}

/// Checks the polynomial lower bound `|f(z) - c_d| ≳ |z - d|^β` at every
/// singular point whose limit is finite and misses `sigma_p_image`.
pub fn condition_p_check(f: &MeromFn, region: &BisectorRegion, m_a: &[SingularPoint], sigma_p_image: &[ExtComplex]) -> bool {
    let psi = 0.5 * (region.omega + FRAC_PI_2);
    for &d in m_a {
        let p = region.location(d);
        let Some(local) = f.local_at(p) else {
            return false;
        };
        let ExtComplex::Finite(c) = local.limit else {
            continue;
        };
        if sigma_p_image.iter().any(|v| v.close_to(&local.limit, 1e-8)) {
            continue;
        }
        let Some(beta) = local.order.filter(|b| b.is_finite() && *b > 0.0) else {
            return false;
        };
        let ts: Vec<f64> = (0..=16).map(|k| 10f64.powf(-6.0 + 0.25 * k as f64)).collect();
        let mut pts = Vec::new();
        for t in ts {
            let (z, scale) = match p {
                ExtComplex::Infinity => (ray_point(p, psi, 1.0 / t), t),
                ExtComplex::Finite(_) => (ray_point(p, psi, t), t),
            };
            let v = (f.eval(z) - c).norm();
            if !(v.is_finite() && v > 0.0) {
                return false;
            }
            pts.push((scale.ln(), v.ln()));
        }
        if fit_slope(&pts) > beta + 0.1 {
            return false;
        }
    }
    true
}

/// `f = f0 + coef_plus/(b+z) + coef_minus/(b-z) + coef_minus_sq/(b-z)^2 + coef_one`.
#[derive(Debug, Clone)]
pub struct EDecomposition {
    pub f0: MeromFn,
    pub coef_plus: Complex64,
    pub coef_minus: Complex64,
    pub coef_minus_sq: Complex64,
    pub coef_one: Complex64,
    pub base_b: Complex64,
}

impl EDecomposition {
    pub fn reconstruct(&self, z: Complex64) -> Complex64 {
        let b = self.base_b;
        self.f0.eval(z)
            + self.coef_plus / (b + z)
            + self.coef_minus / (b - z)
            + self.coef_minus_sq / ((b - z) * (b - z))
            + self.coef_one
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Basis {
    One,
    Minus,
    Plus,
    MinusSq,
}

impl Basis {
    fn limit_at(self, p: ExtComplex, b: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        match (self, p) {
            (Basis::One, _) => one,
            (_, ExtComplex::Infinity) => Complex64::new(0.0, 0.0),
            (Basis::Minus, ExtComplex::Finite(d)) => (b - d).inv(),
            (Basis::Plus, ExtComplex::Finite(d)) => (b + d).inv(),
            (Basis::MinusSq, ExtComplex::Finite(d)) => ((b - d) * (b - d)).inv(),
        }
    }

    fn function(self, b: Complex64) -> MeromFn {
        match self {
            Basis::One => MeromFn::one(),
            Basis::Minus => MeromFn::resolvent_fn(b),
            Basis::Plus => MeromFn::plus_resolvent_fn(b),
            Basis::MinusSq => MeromFn::rational(Rational::from_factors(Complex64::new(1.0, 0.0), [(b, -2)])),
        }
    }
}

fn column_rank(m: &DMatrix<Complex64>) -> usize {
    crate::linalg::singular_values(m).iter().filter(|&&s| s > 1e-10).count()
}

fn choose_basis(points: &[ExtComplex], b: Complex64, priority: &[Basis]) -> Option<Vec<Basis>> {
    let mut chosen: Vec<Basis> = Vec::new();
    for &cand in priority {
        if chosen.len() == points.len() {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(cand);
        let m = DMatrix::from_fn(points.len(), trial.len(), |i, j| trial[j].limit_at(points[i], b));
        if column_rank(&m) == trial.len() {
            chosen = trial;
        }
    }
    (chosen.len() == points.len()).then_some(chosen)
}

/// Splits `f ∈ E(A)` into a part vanishing on `m_a` plus the standard basis.
pub fn decompose_e(f: &MeromFn, m_a: &[SingularPoint], a: f64, b: Complex64) -> Result<EDecomposition> {
    let mut points: Vec<ExtComplex> = Vec::new();
    let mut limits = Vec::new();
    for &d in m_a {
        let p = d.location(a);
        if points.iter().any(|q| q.close_to(&p, MERGE_TOL)) {
            continue;
        }
        let local = f.local_at(p).ok_or(Error::UndeclaredLimit(d))?;
        let c = local
            .limit
            .finite()
            .ok_or_else(|| Error::NotInPrimaryClass(format!("limit at {d} is infinite")))?;
        points.push(p);
        limits.push(c);
    }
    let basis = choose_basis(&points, b, &[Basis::One, Basis::Minus, Basis::Plus])
        .or_else(|| choose_basis(&points, b, &[Basis::Minus, Basis::MinusSq, Basis::One]))
        .ok_or(Error::SingularSystem)?;
    let n = points.len();
    let mut coef = [Complex64::new(0.0, 0.0); 4];
    if n > 0 {
        let m = DMatrix::from_fn(n, n, |i, j| basis[j].limit_at(points[i], b));
        let rhs = DVector::from_vec(limits);
        let x = m.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
        for (j, &e) in basis.iter().enumerate() {
            coef[e as usize] = x[j];
        }
    }
    let one = Complex64::new(1.0, 0.0);
    let mut terms = vec![(one, f.clone())];
    for e in [Basis::Plus, Basis::Minus, Basis::MinusSq] {
        if coef[e as usize] != Complex64::new(0.0, 0.0) {
            terms.push((-coef[e as usize], e.function(b)));
        }
    }
    let f0 = MeromFn::linear(terms, -coef[Basis::One as usize]).with_domain(f.domain.clone());
    Ok(EDecomposition {
        f0,
        coef_plus: coef[Basis::Plus as usize],
        coef_minus: coef[Basis::Minus as usize],
        coef_minus_sq: coef[Basis::MinusSq as usize],
        coef_one: coef[Basis::One as usize],
        base_b: b,
    })
}

/// `∏ ((λ_j - z)/(b - z))^{n_j}`.
pub fn rational_factor(zeros: &[(Complex64, u32)], b: Complex64) -> MeromFn {
    let factors = zeros
        .iter()
        .flat_map(|&(l, n)| [(l, n as i32), (b, -(n as i32))]);
    MeromFn::rational(Rational::from_factors(Complex64::new(1.0, 0.0), factors))
}

/// Angle of the function domain, defaulting to `ω/2`.
pub(crate) fn function_angle(f: &MeromFn, region: &BisectorRegion) -> f64 {
    f.domain.phi.filter(|p| *p < region.omega).unwrap_or(0.5 * region.omega)
}

/// Poles of `f` inside its domain `Ω(φ, (s_d))`.
pub(crate) fn poles_in_domain(f: &MeromFn, meta: &BackendMeta) -> Vec<(Complex64, u32)> {
    let region = &meta.region;
    let phi = function_angle(f, region);
    let mut balls: BTreeMap<SingularPoint, f64> = BTreeMap::new();
    for d in region.excluded.keys() {
        let s = f.domain.s.get(d).or(region.excluded.get(d)).copied().unwrap_or(0.0);
        if s > 0.0 {
            balls.insert(*d, s);
        }
    }
    f.poles()
        .into_iter()
        .filter(|(l, _)| omega_contains(*l, phi, region.halfwidth_a, &balls))
        .collect()
}

/// True when `f` is pole-free on its domain and regular on `M_A`.
pub fn in_primary_class(f: &MeromFn, meta: &BackendMeta) -> bool {
    poles_in_domain(f, meta).is_empty()
        && meta
            .m_a
            .iter()
            .all(|&d| regularity(f, d, &meta.region) == Regularity::Regular)
}

/// Exponent of the factor needed at a singular point to make `g` regular there.
fn needed_exponent(g: &MeromFn, d: SingularPoint, region: &BisectorRegion) -> Result<u32> {
    let local = g.local_at(region.location(d));
    match local {
        Some(Local { limit: ExtComplex::Finite(_), order: Some(b) }) if b > 0.0 => Ok(0),
        Some(Local { limit: ExtComplex::Finite(_), .. }) => {
            match regularity_probe(g, d, region) {
                Regularity::Regular => Ok(0),
                _ => Ok(1),
            }
        }
        Some(Local { limit: ExtComplex::Infinity, order: Some(gamma) }) => {
            if matches!(g.node, FnNode::Rational(_)) && gamma.fract() == 0.0 {
                Ok(gamma as u32)
            } else {
                Ok(gamma.floor() as u32 + 1)
            }
        }
        _ => Err(Error::NoRegularizer(format!("behaviour of f at {d} is not declared"))),
    }
}

/// The regularizer `h_{l,m,n} · ∏((λ_j - z)/(b - z))^{n_j}`.
pub fn default_regularizer(f: &MeromFn, meta: &BackendMeta, b: Complex64) -> Result<MeromFn> {
    if in_primary_class(f, meta) {
        return Ok(MeromFn::one());
    }
    let region = &meta.region;
    let a = region.halfwidth_a;
    let poles = poles_in_domain(f, meta);
    for (l, _) in &poles {
        if meta.eigenvalues.contains(*l, MERGE_TOL) {
            return Err(Error::RegularizerNotInjective(format!(
                "f has a pole at the eigenvalue {}",
                crate::ext::format_complex(*l)
            )));
        }
    }
    let r = rational_factor(&poles, b);
    let g = f.mul(&r);
    let mut exps: BTreeMap<SingularPoint, u32> = BTreeMap::new();
    for &d in &meta.m_a {
        let k = needed_exponent(&g, d, region)?;
        if k > 0 && meta.sigma_p_singular.contains(&d) {
            return Err(Error::RegularizerNotInjective(format!("{d} is an eigenvalue but f needs a zero there")));
        }
        exps.insert(d, k);
    }
    let l = exps.get(&SingularPoint::Infinity).copied().unwrap_or(0) as i32;
    let m = exps.get(&SingularPoint::PosA).copied().unwrap_or(0) as i32;
    let n = if a == 0.0 { 0 } else { exps.get(&SingularPoint::NegA).copied().unwrap_or(0) as i32 };
    let one = Complex64::new(1.0, 0.0);
    let sign = if (l + m + n) % 2 == 0 { one } else { -one };
    let h = Rational::from_factors(
        sign,
        [
            (Complex64::new(a, 0.0), m),
            (Complex64::new(-a, 0.0), n),
            (b, -(l + m + n)),
        ],
    );
    let e = MeromFn::rational(h).mul(&r);
    let ef = e.mul(f);
    for &d in &meta.m_a {
        if regularity(&ef, d, region) != Regularity::Regular {
            return Err(Error::NoRegularizer(format!("e*f is not regular at {d}")));
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn region(a: f64) -> BisectorRegion {
        BisectorRegion::new(FRAC_PI_4, a).unwrap()
    }

    #[test]
    fn sqrt_branch_is_regular_at_zero() {
        let f = MeromFn::from_json(&json!({"kind": "sqrt_branch"}), 0.0).unwrap();
        assert_eq!(regularity_probe(&f, SingularPoint::PosA, &region(0.0)), Regularity::Regular);
        assert_eq!(regularity_probe(&f, SingularPoint::Infinity, &region(0.0)), Regularity::QuasiRegular);
    }

    #[test]
    fn squared_log_reciprocal_is_regular_but_plain_log_is_not_detected() {
        let f = MeromFn::from_json(&json!({"expr": "1/log(-i*z)^2", "limits": {"0": 0}}), 0.0).unwrap();
        assert_eq!(regularity_probe(&f, SingularPoint::PosA, &region(0.0)), Regularity::Regular);
        let g = MeromFn::from_json(&json!({"expr": "1/log(-i*z)", "limits": {"0": 0}}), 0.0).unwrap();
        assert_eq!(regularity_probe(&g, SingularPoint::PosA, &region(0.0)), Regularity::Inconclusive);
    }

    #[test]
    fn constants_are_regular_everywhere() {
        let f = MeromFn::constant(c(2.0, 1.0));
        for d in SingularPoint::all(1.0) {
            assert_eq!(regularity_probe(&f, d, &region(1.0)), Regularity::Regular);
        }
    }

    #[test]
    fn condition_p_detects_flat_functions() {
        let f = MeromFn::from_json(&json!({"kind": "sqrt_branch"}), 0.0).unwrap();
        assert!(condition_p_check(&f, &region(0.0), &[SingularPoint::PosA], &[]));
        let flat = MeromFn::from_json(
            &json!({"expr": "exp(-1/(-i*z))", "limits": {"0": 0}, "decay_orders": {"0": 2}}),
            0.0,
        )
        .unwrap();
        assert!(!condition_p_check(&flat, &region(0.0), &[SingularPoint::PosA], &[]));
        let k = MeromFn::constant(c(3.0, 0.0));
        assert!(condition_p_check(&k, &region(0.0), &[SingularPoint::PosA], &[ExtComplex::Finite(c(3.0, 0.0))]));
    }

    #[test]
    fn decomposition_examples() {
        let one = decompose_e(&MeromFn::one(), &[SingularPoint::Infinity], 0.0, c(2.0, 0.0)).unwrap();
        assert_eq!(one.coef_one, c(1.0, 0.0));
        assert!(one.f0.as_rational().unwrap().is_zero());

        let all = SingularPoint::all(1.0);
        let d = decompose_e(&MeromFn::resolvent_fn(c(3.0, 0.0)), &all, 1.0, c(3.0, 0.0)).unwrap();
        assert!((d.coef_minus - c(1.0, 0.0)).norm() < 1e-14);
        assert!(d.coef_plus.norm() < 1e-14 && d.coef_one.norm() < 1e-14);

        let f = MeromFn::from_json(&json!({"expr": "(1+z)/(3-z)"}), 1.0).unwrap();
        let d = decompose_e(&f, &all, 1.0, c(3.0, 0.0)).unwrap();
        for p in [c(-1.0, 0.0), c(1.0, 0.0)] {
            assert!(d.f0.eval(p).norm() < 1e-12);
        }
        assert!(d.f0.eval(c(0.0, 1e9)).norm() < 1e-8);
        for z in [c(0.3, 1.0), c(-2.0, 5.0)] {
            assert!((d.reconstruct(z) - f.eval(z)).norm() <= 1e-10 * f.eval(z).norm());
        }
    }

    #[test]
    fn rational_factor_examples() {
        let b = c(3.0, 0.0);
        let r = rational_factor(&[(c(0.0, 1.0), 1)], b);
        assert!(r.eval(c(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(r.local_at(ExtComplex::Infinity).unwrap().limit, ExtComplex::Finite(c(1.0, 0.0)));
        let r = rational_factor(&[(c(0.0, 1.0), 2), (c(0.0, -1.0), 1)], b);
        let h = 1e-3;
        let z0 = c(0.0, 1.0);
        let second = (r.eval(z0 + h) - 2.0 * r.eval(z0) + r.eval(z0 - h)) / (h * h);
        assert!(r.eval(z0 + h).norm() < 1e-5 && second.norm() > 1e-3);
        assert_eq!(rational_factor(&[], b).eval(c(0.7, 0.2)), c(1.0, 0.0));
    }

    #[test]
    fn regularizer_for_zeta_at_infinity() {
        let meta = BackendMeta {
            region: region(0.0),
            m_a: vec![SingularPoint::Infinity],
            sigma_p_singular: vec![],
            eigenvalues: SpectralSet::new(),
        };
        let b = c(2.0, 0.0);
        let e = default_regularizer(&MeromFn::zeta(), &meta, b).unwrap();
        let ef = e.mul(&MeromFn::zeta());
        let l = ef.local_at(ExtComplex::Infinity).unwrap();
        assert!(l.limit.close_to(&ExtComplex::Finite(c(-1.0, 0.0)), 1e-14));
        let unit = default_regularizer(&MeromFn::resolvent_fn(b), &meta, b).unwrap();
        assert_eq!(unit, MeromFn::one());
    }

    #[test]
    fn regularizer_refuses_zero_at_eigenvalue() {
        let meta = BackendMeta {
            region: region(0.0),
            m_a: vec![SingularPoint::PosA],
            sigma_p_singular: vec![SingularPoint::PosA],
            eigenvalues: SpectralSet::new(),
        };
        let f = MeromFn::zeta().recip();
        assert!(matches!(
            default_regularizer(&f, &meta, c(2.0, 0.0)),
            Err(Error::RegularizerNotInjective(_))
        ));
    }
}
