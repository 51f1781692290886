#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use speccalc::function::{MeromFn, Rational};
use speccalc::geometry::{in_bisector, BisectorRegion};
use speccalc::operator::{DenseOperator, OperatorModel};

pub type C = Complex64;
pub type CMatrix = DMatrix<C>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A dense operator `V diag(λ) V⁻¹` with known eigendata.
pub struct DenseCase {
    pub op: OperatorModel,
    pub v: CMatrix,
    pub lambdas: Vec<C>,
    pub a: f64,
    pub omega: f64,
}

impl DenseCase {
    pub fn matrix(&self) -> &CMatrix {
        &self.op.as_dense().unwrap().matrix
    }

    /// `V diag(g(λ)) V⁻¹`.
    pub fn oracle(&self, g: impl Fn(C) -> C) -> CMatrix {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.lambdas.len(),
            self.lambdas.iter().map(|&l| g(l)),
        ));
        &self.v * d * self.v.clone().try_inverse().unwrap()
    }
}

/// A point of `BS_{phi,a}` away from `±a`, inside the disc of radius 3.
pub fn sample_in_bisector(rng: &mut impl Rng, phi: f64, a: f64) -> C {
    loop {
        let z = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        if in_bisector(z, phi, a) && (z - a).norm() > 0.2 && (z + a).norm() > 0.2 && z.norm() > 0.2 {
            return z;
        }
    }
}

pub fn random_dense(rng: &mut impl Rng, n: usize) -> DenseCase {
    let omega = rng.random_range(0.3..1.2);
    let a = if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.1..1.0) };
    let phi = omega + 0.5 * (std::f64::consts::FRAC_PI_2 - omega);
    let mut lambdas: Vec<C> = Vec::new();
    while lambdas.len() < n {
        let z = sample_in_bisector(rng, phi, a);
        if lambdas.iter().all(|l| (l - z).norm() > 0.1) {
            lambdas.push(z);
        }
    }
    let scale = 0.4 / (n as f64).sqrt();
    let v = CMatrix::from_fn(n, n, |i, j| {
        let noise = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
        if i == j {
            c(1.0, 0.0) + noise
        } else {
            noise
        }
    });
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambdas.clone()));
    let m = &v * d * v.clone().try_inverse().unwrap();
    let region = BisectorRegion::new(omega, a).unwrap();
    DenseCase {
        op: DenseOperator::new(m, Some(region)).into(),
        v,
        lambdas,
        a,
        omega,
    }
}

/// Rational functions holomorphic on every bisector with `a < 1`, with a
/// closed form for the oracle.
pub fn rational_corpus() -> Vec<(&'static str, MeromFn, fn(C) -> C)> {
    let one = c(1.0, 0.0);
    let r = |scale: C, factors: Vec<(C, i32)>| MeromFn::rational(Rational::from_factors(scale, factors));
    vec![
        ("1/(3-z)", r(-one, vec![(c(3.0, 0.0), -1)]), |z| 1.0 / (3.0 - z)),
        ("z/(3-z)", r(-one, vec![(c(0.0, 0.0), 1), (c(3.0, 0.0), -1)]), |z| z / (3.0 - z)),
        ("z^2/(9-z^2)", r(-one, vec![(c(0.0, 0.0), 2), (c(3.0, 0.0), -1), (c(-3.0, 0.0), -1)]), |z| z * z / (9.0 - z * z)),
        ("1/(z+4)", r(one, vec![(c(-4.0, 0.0), -1)]), |z| 1.0 / (z + 4.0)),
        ("(z-i)/(z-5)", r(one, vec![(c(0.0, 1.0), 1), (c(5.0, 0.0), -1)]), |z| (z - c(0.0, 1.0)) / (z - 5.0)),
        ("z^2", r(one, vec![(c(0.0, 0.0), 2)]), |z| z * z),
        ("z^3-2z", r(one, vec![(c(0.0, 0.0), 1), (c(2f64.sqrt(), 0.0), 1), (c(-(2f64.sqrt()), 0.0), 1)]), |z| z * z * z - 2.0 * z),
        ("1/(z-3)^2", r(one, vec![(c(3.0, 0.0), -2)]), |z| 1.0 / ((z - 3.0) * (z - 3.0))),
        ("(z^2+1)/(z^2-16)", r(one, vec![(c(0.0, 1.0), 1), (c(0.0, -1.0), 1), (c(4.0, 0.0), -1), (c(-4.0, 0.0), -1)]), |z| {
            (z * z + 1.0) / (z * z - 16.0)
        }),
        ("2", MeromFn::constant(c(2.0, 0.0)), |_| c(2.0, 0.0)),
    ]
}

pub fn rel_err(x: &CMatrix, y: &CMatrix) -> f64 {
    (x - y).norm() / y.norm().max(1e-300)
}

pub fn dense_of(op: &OperatorModel) -> CMatrix {
    op.as_dense().expect("dense operator").matrix.clone()
}
