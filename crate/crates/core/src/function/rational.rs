//! Rational functions kept in factored form `k · Π (z - r_j)^{m_j}`.
//!
//! Products and reciprocals are exact (multiplicities add and cancel);
//! sums go through polynomial coefficients and are refactored.

use num_complex::Complex64;

use crate::ext::{close, ExtComplex};
use crate::linalg::{cluster, eigenvalues, CMatrix};

use super::Local;

const ROOT_TOL: f64 = 1e-7;
const FACTOR_MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Rational {
    pub scale: Complex64,
    /// Distinct roots with nonzero integer multiplicities (negative for poles).
    pub factors: Vec<(Complex64, i32)>,
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn c1() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Ascending coefficients of `Π (z - r)^m` over the given factors (m > 0).
pub fn poly_from_roots<'a>(roots: impl IntoIterator<Item = &'a (Complex64, i32)>) -> Vec<Complex64> {
    let mut p = vec![c1()];
    for &(r, m) in roots {
        for _ in 0..m {
            let mut next = vec![c0(); p.len() + 1];
            for (k, &coef) in p.iter().enumerate() {
                next[k + 1] += coef;
                next[k] -= coef * r;
            }
            p = next;
        }
    }
    p
}

pub fn poly_eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(c0(), |acc, &c| acc * z + c)
}

pub fn poly_mul(p: &[Complex64], q: &[Complex64]) -> Vec<Complex64> {
    if p.is_empty() || q.is_empty() {
        return Vec::new();
    }
    let mut out = vec![c0(); p.len() + q.len() - 1];
    for (i, &a) in p.iter().enumerate() {
        for (j, &b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

pub fn poly_add(p: &[Complex64], q: &[Complex64]) -> Vec<Complex64> {
    let n = p.len().max(q.len());
    (0..n)
        .map(|k| p.get(k).copied().unwrap_or_default() + q.get(k).copied().unwrap_or_default())
        .collect()
}

pub fn poly_scale(p: &[Complex64], s: Complex64) -> Vec<Complex64> {
    p.iter().map(|&c| c * s).collect()
}

/// Drops trailing coefficients that are negligible relative to the largest.
fn trim(p: &[Complex64]) -> Vec<Complex64> {
    let big = p.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut v = p.to_vec();
    while let Some(last) = v.last() {
        if last.norm() <= 1e-13 * big || last.norm() == 0.0 {
            v.pop();
        } else {
            break;
        }
    }
    v
}

/// Roots with multiplicities, by companion-matrix eigenvalues and clustering.
pub fn poly_roots(p: &[Complex64]) -> Vec<(Complex64, i32)> {
    let p = trim(p);
    if p.len() <= 1 {
        return Vec::new();
    }
    let n = p.len() - 1;
    let lead = p[n];
    let mut comp = CMatrix::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = c1();
    }
    for i in 0..n {
        comp[(i, n - 1)] = -p[i] / lead;
    }
    let mut roots = eigenvalues(&comp);
    // Newton polishing of simple roots
    let dp: Vec<Complex64> = p.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect();
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = poly_eval(&dp, *r);
            if d.norm() == 0.0 {
                break;
            }
            let step = poly_eval(&p, *r) / d;
            if !(step.re.is_finite() && step.im.is_finite()) || step.norm() > 1e-6 * r.norm().max(1.0) {
                break;
            }
            *r -= step;
        }
    }
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    cluster(&roots, ROOT_TOL * scale)
        .into_iter()
        .map(|(r, m)| (snap(r), m as i32))
        .collect()
}

/// Rounds components that are tiny relative to the other to zero.
fn snap(z: Complex64) -> Complex64 {
    let n = z.norm();
    let re = if z.re.abs() <= 1e-14 * n { 0.0 } else { z.re };
    let im = if z.im.abs() <= 1e-14 * n { 0.0 } else { z.im };
    Complex64::new(re, im)
}

impl Rational {
    pub fn constant(c: Complex64) -> Self {
        Self {
            scale: c,
            factors: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.scale.norm() == 0.0
    }

    /// `k · Π (z - r)^m` with coincident roots merged.
    pub fn from_factors(scale: Complex64, factors: impl IntoIterator<Item = (Complex64, i32)>) -> Self {
        let mut out = Self::constant(scale);
        for (r, m) in factors {
            out.push_factor(r, m);
        }
        out
    }

    fn push_factor(&mut self, r: Complex64, m: i32) {
        if m == 0 || self.is_zero() {
            return;
        }
        if let Some(slot) = self.factors.iter_mut().find(|(q, _)| close(*q, r, FACTOR_MERGE_TOL)) {
            slot.1 += m;
        } else {
            self.factors.push((r, m));
        }
        self.factors.retain(|(_, m)| *m != 0);
    }

    pub fn from_polys(num: &[Complex64], den: &[Complex64]) -> Option<Self> {
        let num = trim(num);
        let den = trim(den);
        if den.is_empty() {
            return None;
        }
        if num.is_empty() {
            return Some(Self::constant(c0()));
        }
        let scale = num[num.len() - 1] / den[den.len() - 1];
        let mut out = Self::constant(scale);
        for (r, m) in poly_roots(&num) {
            out.push_factor(r, m);
        }
        let den_roots = poly_roots(&den);
        let mut merged = out.clone();
        for (r, m) in den_roots {
            // cancel against numerator roots with a looser tolerance
            if let Some(slot) = merged
                .factors
                .iter_mut()
                .find(|(q, k)| *k > 0 && close(*q, r, ROOT_TOL))
            {
                slot.1 -= m;
            } else {
                merged.factors.push((r, -m));
            }
            merged.factors.retain(|(_, k)| *k != 0);
        }
        out = merged;
        Some(out)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut v = self.scale;
        for &(r, m) in &self.factors {
            let d = z - r;
            if d.norm() == 0.0 {
                return if m > 0 {
                    c0()
                } else {
                    Complex64::new(f64::INFINITY, 0.0)
                };
            }
            v *= d.powi(m);
        }
        v
    }

    pub fn mul(&self, other: &Rational) -> Rational {
        if self.is_zero() || other.is_zero() {
            return Self::constant(c0());
        }
        let mut out = Self::constant(self.scale * other.scale);
        for &(r, m) in self.factors.iter().chain(&other.factors) {
            out.push_factor(r, m);
        }
        out
    }

    pub fn recip(&self) -> Option<Rational> {
        if self.is_zero() {
            return None;
        }
        Some(Rational {
            scale: self.scale.inv(),
            factors: self.factors.iter().map(|&(r, m)| (r, -m)).collect(),
        })
    }

    pub fn powi(&self, k: i32) -> Rational {
        if k == 0 {
            return Self::constant(c1());
        }
        Rational {
            scale: self.scale.powi(k),
            factors: self.factors.iter().map(|&(r, m)| (r, m * k)).collect(),
        }
    }

    fn numerator(&self) -> Vec<Complex64> {
        let pos: Vec<(Complex64, i32)> = self.factors.iter().filter(|f| f.1 > 0).copied().collect();
        poly_scale(&poly_from_roots(&pos), self.scale)
    }

    fn denominator(&self) -> Vec<Complex64> {
        let neg: Vec<(Complex64, i32)> = self.factors.iter().filter(|f| f.1 < 0).map(|&(r, m)| (r, -m)).collect();
        poly_from_roots(&neg)
    }

    /// Numerator and denominator coefficients (ascending).
    pub fn to_polys(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        (self.numerator(), self.denominator())
    }

    /// `α self + β other`, refactored.
    pub fn combine(&self, alpha: Complex64, other: &Rational, beta: Complex64) -> Rational {
        // common denominator: maximal pole multiplicity per root
        let mut lcm: Vec<(Complex64, i32)> = Vec::new();
        for &(r, m) in self.factors.iter().chain(&other.factors) {
            if m < 0 {
                match lcm.iter_mut().find(|(q, _)| close(*q, r, FACTOR_MERGE_TOL)) {
                    Some(slot) => slot.1 = slot.1.max(-m),
                    None => lcm.push((r, -m)),
                }
            }
        }
        let part = |f: &Rational, w: Complex64| -> Vec<Complex64> {
            // f · lcm is a polynomial
            let mut g = Rational::constant(w * f.scale);
            for &(r, m) in &f.factors {
                g.push_factor(r, m);
            }
            for &(r, m) in &lcm {
                g.push_factor(r, m);
            }
            g.numerator()
        };
        let num = poly_add(&part(self, alpha), &part(other, beta));
        let num = trim(&num);
        if num.is_empty() {
            return Self::constant(c0());
        }
        let mut out = Self::constant(num[num.len() - 1]);
        for (r, m) in poly_roots(&num) {
            out.push_factor(r, m);
        }
        for &(r, m) in &lcm {
            // cancellation against refactored roots uses the root tolerance
            if let Some(slot) = out.factors.iter_mut().find(|(q, k)| *k > 0 && close(*q, r, ROOT_TOL)) {
                slot.1 -= m;
            } else {
                out.factors.push((r, -m));
            }
            out.factors.retain(|(_, k)| *k != 0);
        }
        out
    }

    pub fn add_constant(&self, c: Complex64) -> Rational {
        self.combine(c1(), &Rational::constant(c1()), c)
    }

    pub fn poles(&self) -> Vec<(Complex64, u32)> {
        self.factors
            .iter()
            .filter(|f| f.1 < 0)
            .map(|&(r, m)| (r, (-m) as u32))
            .collect()
    }

    pub fn zeros(&self) -> Vec<(Complex64, u32)> {
        self.factors
            .iter()
            .filter(|f| f.1 > 0)
            .map(|&(r, m)| (r, m as u32))
            .collect()
    }

    /// Exact local behaviour at a finite point or at ∞.
    pub fn local(&self, p: ExtComplex) -> Local {
        if self.is_zero() {
            return Local::finite(c0(), f64::INFINITY);
        }
        match p {
            ExtComplex::Infinity => {
                let net: i32 = self.factors.iter().map(|f| f.1).sum();
                if net > 0 {
                    return Local::infinite(net as f64);
                }
                if net < 0 {
                    return Local::finite(c0(), (-net) as f64);
                }
                let (n, d) = self.to_polys();
                let diff = trim(&poly_add(&n, &poly_scale(&d, -self.scale)));
                if diff.is_empty() {
                    return Local::finite(self.scale, f64::INFINITY);
                }
                let order = (d.len() - diff.len()) as f64;
                Local::finite(self.scale, order)
            }
            ExtComplex::Finite(p) => {
                let v: i32 = self
                    .factors
                    .iter()
                    .filter(|(r, _)| close(*r, p, FACTOR_MERGE_TOL))
                    .map(|f| f.1)
                    .sum();
                if v > 0 {
                    return Local::finite(c0(), v as f64);
                }
                if v < 0 {
                    return Local::infinite((-v) as f64);
                }
                // Taylor coefficients in w = z - p
                let shifted: Vec<(Complex64, i32)> =
                    self.factors.iter().map(|&(r, m)| (r - p, m)).collect();
                let pos: Vec<(Complex64, i32)> = shifted.iter().filter(|f| f.1 > 0).copied().collect();
                let neg: Vec<(Complex64, i32)> =
                    shifted.iter().filter(|f| f.1 < 0).map(|&(r, m)| (r, -m)).collect();
                let n = poly_scale(&poly_from_roots(&pos), self.scale);
                let d = poly_from_roots(&neg);
                let c = n[0] / d[0];
                let diff = poly_add(&n, &poly_scale(&d, -c));
                let big = n.iter().chain(d.iter()).map(|x| x.norm()).fold(0.0, f64::max) * c.norm().max(1.0);
                match diff.iter().position(|x| x.norm() > 1e-12 * big) {
                    Some(k) => Local::finite(c, k as f64),
                    None => Local::finite(c, f64::INFINITY),
                }
            }
        }
    }

    /// Expression text that re-parses to the same function.
    pub fn to_expr_string(&self) -> String {
        let mut parts = vec![format!("{}", crate::expr::Expr::Num(self.scale))];
        for &(r, m) in &self.factors {
            parts.push(format!("(z-{})^({m})", crate::expr::Expr::Num(r)));
        }
        parts.join("*")
    }
}
