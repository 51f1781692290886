//! Fredholm profiles, the classes Φ₀…Φ₉ and the extended essential spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::Count;
use crate::function::Rational;
use crate::linalg::{self, CMatrix};
use crate::operator::{DenseOperator, DiagonalModel, OperatorModel, SpectralSet};

/// Default required ratio between the singular values straddling the rank threshold.
pub const DEFAULT_GAP_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FredholmProfile {
    pub nul: Count,
    pub def: Count,
    pub ascent: Count,
    pub descent: Count,
    pub range_closed: bool,
    pub range_complemented: bool,
    pub kernel_complemented: bool,
}

impl FredholmProfile {
    pub fn invertible() -> Self {
        Self {
            nul: Count::ZERO,
            def: Count::ZERO,
            ascent: Count::ZERO,
            descent: Count::ZERO,
            range_closed: true,
            range_complemented: true,
            kernel_complemented: true,
        }
    }

    /// Internal consistency of the fields, as holds for any closed operator
    /// on a Hilbert space.
    pub fn is_well_formed(&self) -> bool {
        let finite_def_ok = !self.def.is_finite() || (self.range_closed && self.range_complemented);
        let compl_ok = !self.range_complemented || self.range_closed;
        let kernel_ok = !self.nul.is_finite() || self.kernel_complemented;
        let zero_ok = (!self.nul.is_zero() || self.ascent.is_zero()) && (!self.def.is_zero() || self.descent.is_zero());
        let chains_ok = !(self.ascent.is_finite() && self.descent.is_finite()) || self.ascent == self.descent;
        let ascent_ok = self.nul.is_zero() || !self.ascent.is_zero();
        finite_def_ok && compl_ok && kernel_ok && zero_ok && chains_ok && ascent_ok
    }
}

/// Membership of an operator in Φ₀…Φ₉.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiMembership {
    pub member: [bool; 10],
}

/// Edges `(i, j)` of the inclusion diagram, meaning Φᵢ ⊆ Φⱼ.
pub const INCLUSIONS: [(usize, usize); 11] = [
    (0, 8),
    (8, 7),
    (7, 1),
    (1, 3),
    (3, 5),
    (5, 6),
    (1, 2),
    (2, 4),
    (4, 6),
    (8, 9),
    (0, 9),
];

impl PhiMembership {
    pub fn contains(&self, i: usize) -> bool {
        self.member[i]
    }

    /// Inclusion edges violated by this vector.
    pub fn violations(&self) -> Vec<(usize, usize)> {
        INCLUSIONS
            .iter()
            .copied()
            .filter(|&(i, j)| self.member[i] && !self.member[j])
            .collect()
    }
}

impl std::fmt::Display for PhiMembership {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, m) in self.member.iter().enumerate() {
            write!(f, "{}", if *m { i.to_string() } else { "-".into() })?;
        }
        Ok(())
    }
}

pub fn classify(p: &FredholmProfile) -> PhiMembership {
    let nul = p.nul.is_finite();
    let def = p.def.is_finite();
    let phi4 = nul && p.range_closed;
    let phi5 = def;
    let phi7 = nul && def && p.nul == p.def;
    let chains = p.ascent.is_finite() && p.descent.is_finite();
    PhiMembership {
        member: [
            p.nul.is_zero() && p.def.is_zero(),
            nul && def,
            nul && p.range_complemented,
            def && p.kernel_complemented,
            phi4,
            phi5,
            phi4 || phi5,
            phi7,
            phi7 && chains && p.ascent == p.descent,
            chains,
        ],
    }
}

/// Profile of `mu - A`.
pub fn profile(op: &OperatorModel, mu: Complex64) -> Result<FredholmProfile> {
    profile_with(op, mu, DEFAULT_GAP_RATIO)
}

pub fn profile_with(op: &OperatorModel, mu: Complex64, gap_ratio: f64) -> Result<FredholmProfile> {
    match op {
        OperatorModel::Dense(d) => dense_profile(d, mu, gap_ratio),
        OperatorModel::Diagonal(d) => Ok(diagonal_profile(d, mu)),
    }
}

fn dense_profile(op: &DenseOperator, mu: Complex64, gap_ratio: f64) -> Result<FredholmProfile> {
    let n = op.dim();
    let t: CMatrix = op.shifted(mu);
    let scale = (op.norm() + mu.norm()).max(1.0);
    let rank = linalg::numerical_rank_scaled(&t, Some(scale), gap_ratio)?;
    let nul = n - rank;
    // rank(T^k) decreases until it stabilizes at k = ascent
    let mut ranks = vec![n, rank];
    let mut power = t.clone();
    while ranks[ranks.len() - 1] != ranks[ranks.len() - 2] && ranks.len() <= n {
        power = &power * &t;
        let k = ranks.len() as i32;
        ranks.push(linalg::numerical_rank_scaled(&power, Some(scale.powi(k)), gap_ratio)?);
    }
    let chain = ranks.windows(2).position(|w| w[0] == w[1]).unwrap_or(n);
    let chain = Count::Finite(chain as u64);
    Ok(FredholmProfile {
        nul: Count::Finite(nul as u64),
        def: Count::Finite(nul as u64),
        ascent: chain,
        descent: chain,
        range_closed: true,
        range_complemented: true,
        kernel_complemented: true,
    })
}

fn diagonal_profile(op: &DiagonalModel, mu: Complex64) -> FredholmProfile {
    let nul = op.nullity(mu);
    let closed = !op.is_accumulation(mu);
    let ascent = if nul.is_zero() { Count::ZERO } else { Count::Finite(1) };
    FredholmProfile {
        nul,
        def: if closed { nul } else { Count::Infinite },
        ascent,
        descent: if closed { ascent } else { Count::Infinite },
        range_closed: closed,
        range_complemented: closed,
        kernel_complemented: true,
    }
}

/// The bounded operator `(z - A)^{-1}` for a regular point `z`.
fn resolvent_operator(op: &OperatorModel, z: Complex64) -> Result<OperatorModel> {
    match op {
        OperatorModel::Dense(d) => Ok(DenseOperator::new(d.resolvent_matrix(z)?, None).into()),
        OperatorModel::Diagonal(d) => Ok(d.resolvent(z)?.into()),
    }
}

/// Whether `∞ ∈ σ̃ᵢ(A)`, decided by `0 ∈ σᵢ((μ₀ - A)^{-1})`.
pub fn infinity_in_extended(op: &OperatorModel, i: usize) -> Result<bool> {
    let mu0 = op.regular_point();
    let r = resolvent_operator(op, mu0).map_err(|_| Error::EmptyResolvent)?;
    Ok(!classify(&profile(&r, Complex64::new(0.0, 0.0))?).contains(i))
}

/// `σ̃ᵢ(A)` as a symbolic set.
pub fn extended_spectrum(op: &OperatorModel, i: usize) -> Result<SpectralSet> {
    if i > 9 {
        return Err(Error::InvalidArgument(format!("index {i} is not in 0..=9")));
    }
    let mut out = SpectralSet::new();
    for p in op.spectrum().points {
        if !classify(&profile(op, p.value)?).contains(i) {
            out.insert(p);
        }
    }
    Ok(out.with_infinity(infinity_in_extended(op, i)?))
}

/// Compares the memberships of `mu - A` and `(mu - A)(b - A)^{-1}`.
pub fn resolvent_transfer_check(op: &OperatorModel, mu: Complex64, b: Complex64) -> Result<bool> {
    let left = classify(&profile(op, mu)?);
    let r = Rational::from_factors(Complex64::new(1.0, 0.0), [(mu, 1), (b, -1)]);
    let transformed = op.apply_rational(&r)?;
    let right = classify(&profile(&transformed, Complex64::new(0.0, 0.0))?);
    Ok(left == right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::ExtComplex;
    use crate::geometry::BisectorRegion;
    use crate::operator::{Atom, Tail};
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn jordan(n: usize) -> OperatorModel {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, i + 1)] = c(1.0, 0.0);
        }
        DenseOperator::new(m, Some(BisectorRegion::new(FRAC_PI_4, 1.0).unwrap())).into()
    }

    fn model() -> OperatorModel {
        DiagonalModel::new(
            vec![
                Atom { value: c(0.0, 2.0), mult: Count::Infinite },
                Atom { value: c(0.0, 1.0), mult: Count::Finite(3) },
            ],
            vec![Tail::geometric(ExtComplex::Finite(c(0.0, 0.0)), c(0.0, 1.0), c(0.5, 0.0)).unwrap()],
            Some(BisectorRegion::new(FRAC_PI_4, 0.0).unwrap()),
        )
        .into()
    }

    #[test]
    fn jordan_profile_and_classes() {
        let p = profile(&jordan(3), c(0.0, 0.0)).unwrap();
        assert_eq!((p.nul, p.def, p.ascent, p.descent), (Count::Finite(1), Count::Finite(1), Count::Finite(3), Count::Finite(3)));
        let m = classify(&p);
        assert!(m.contains(7) && m.contains(8) && m.contains(9) && !m.contains(0));
        assert!(m.violations().is_empty());
    }

    #[test]
    fn regular_point_is_invertible() {
        let p = profile(&jordan(3), c(2.0, 0.0)).unwrap();
        assert_eq!(p, FredholmProfile::invertible());
        assert!(classify(&p).member.iter().all(|&x| x));
    }

    #[test]
    fn diagonal_profiles() {
        let op = model();
        let p = profile(&op, c(0.0, 1.0)).unwrap();
        assert_eq!((p.nul, p.def, p.ascent, p.descent), (Count::Finite(3), Count::Finite(3), Count::Finite(1), Count::Finite(1)));
        assert!(p.range_closed);
        let p0 = profile(&op, c(0.0, 0.0)).unwrap();
        assert_eq!(p0.nul, Count::ZERO);
        assert!(!p0.range_closed);
        let m = classify(&profile(&op, c(0.0, 2.0)).unwrap());
        assert!(m.contains(9) && !m.contains(7) && !m.contains(8));
    }

    #[test]
    fn extended_spectra_of_the_model() {
        let op = model();
        let s1 = extended_spectrum(&op, 1).unwrap();
        let s8 = extended_spectrum(&op, 8).unwrap();
        let s9 = extended_spectrum(&op, 9).unwrap();
        let want = SpectralSet::from_points([
            crate::operator::SpectralPoint::atom(c(0.0, 2.0), Count::Infinite),
            crate::operator::SpectralPoint::accumulation(c(0.0, 0.0)),
        ]);
        assert!(s1.same_points(&want, 1e-12));
        assert!(s8.same_points(&want, 1e-12));
        assert_eq!(s9.len(), 1);
        assert!(s9.contains(c(0.0, 0.0), 1e-12));
        assert!(!s1.includes_infinity);
    }

    #[test]
    fn dense_essential_spectra_are_empty() {
        let op = jordan(3);
        assert_eq!(extended_spectrum(&op, 0).unwrap().len(), 1);
        for i in 1..=9 {
            assert!(extended_spectrum(&op, i).unwrap().is_empty(), "i={i}");
        }
    }

    #[test]
    fn unbounded_model_contains_infinity() {
        let t = Tail::geometric(ExtComplex::Infinity, c(0.0, 1.0), c(2.0, 0.0)).unwrap();
        let op: OperatorModel = DiagonalModel::new(vec![], vec![t], Some(BisectorRegion::new(FRAC_PI_4, 0.0).unwrap())).into();
        for i in 0..=9 {
            assert!(extended_spectrum(&op, i).unwrap().includes_infinity, "i={i}");
        }
    }

    #[test]
    fn transfer_examples() {
        assert!(resolvent_transfer_check(&jordan(3), c(0.0, 0.0), c(5.0, 0.0)).unwrap());
        assert!(resolvent_transfer_check(&model(), c(0.0, 2.0), c(1.0, 0.0)).unwrap());
        assert!(resolvent_transfer_check(&model(), c(0.0, 0.0), c(1.0, 0.0)).unwrap());
        assert!(resolvent_transfer_check(&model(), c(3.0, 1.0), c(1.0, 0.0)).unwrap());
    }
}
