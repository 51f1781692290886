//! Brute-force Fredholm profiles of diagonal models from finite truncations.
//!
//! The truncation of size `N` keeps every finite atom with its multiplicity
//! and splits the remaining budget between infinite atoms and tails. Kernel
//! dimensions are counted exactly on each truncation; a count that grows with
//! `N` is read as infinite. Closedness of the range is decided by
//! extrapolating the smallest nonzero gap `|d_j - μ|` across the sizes.

use num_complex::Complex64;

use crate::ext::Count;
use crate::fredholm::FredholmProfile;
use crate::operator::DiagonalModel;

pub const TRUNCATION_SIZES: [usize; 3] = [50, 100, 200];

/// Relative tolerance for "exactly equal" diagonal entries.
const EXACT_TOL: f64 = 1e-14;

/// Kernel dimension and smallest nonzero gap of one truncation.
pub fn truncation_data(model: &DiagonalModel, mu: Complex64, n: usize) -> (usize, Option<f64>) {
    let mut nul = 0;
    let mut gap: Option<f64> = None;
    for (e, scale) in model.shifted_truncation(mu, n) {
        let g = e.norm();
        if g <= EXACT_TOL * scale {
            nul += 1;
        } else {
            gap = Some(gap.map_or(g, |x: f64| x.min(g)));
        }
    }
    (nul, gap)
}

/// Aitken's Δ² limit of the last three terms.
pub fn aitken(x: &[f64]) -> Option<f64> {
    let [.., x0, x1, x2] = x else {
        return None;
    };
    let denom = (x2 - x1) - (x1 - x0);
    if denom == 0.0 {
        return Some(*x2);
    }
    Some(x2 - (x2 - x1).powi(2) / denom)
}

/// Profile of `μ - A` inferred from truncations of the given sizes.
pub fn truncation_profile(model: &DiagonalModel, mu: Complex64, sizes: &[usize]) -> FredholmProfile {
    let data: Vec<(usize, Option<f64>)> = sizes.iter().map(|&n| truncation_data(model, mu, n)).collect();
    let nuls: Vec<usize> = data.iter().map(|d| d.0).collect();
    let growing = nuls.windows(2).all(|w| w[1] > w[0]) && nuls.len() > 1;
    let nul = if growing {
        Count::Infinite
    } else {
        Count::Finite(*nuls.last().unwrap_or(&0) as u64)
    };
    let gaps: Option<Vec<f64>> = data.iter().map(|d| d.1).collect();
    let closed = match gaps {
        Some(g) if g.len() >= 3 && g.windows(2).all(|w| w[1] < w[0]) => {
            let limit = aitken(&g).unwrap_or(g[g.len() - 1]);
            let last = g[g.len() - 1];
            limit > (1e-6 * mu.norm().max(1.0)).max(0.1 * last)
        }
        _ => true,
    };
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

pub fn oracle_profile(model: &DiagonalModel, mu: Complex64) -> FredholmProfile {
    truncation_profile(model, mu, &TRUNCATION_SIZES)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ext::ExtComplex;
    use crate::operator::{Atom, Generator, Tail};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn model(generator: Generator) -> DiagonalModel {
        DiagonalModel::new(
            vec![
                Atom { value: c(0.0, 2.0), mult: Count::Infinite },
                Atom { value: c(0.0, 1.0), mult: Count::Finite(3) },
            ],
            vec![Tail::new(ExtComplex::Finite(c(0.0, 0.0)), generator).unwrap()],
            None,
        )
    }

    #[test]
    fn aitken_recovers_geometric_limit() {
        let x = [3.0 + 0.5, 3.0 + 0.25, 3.0 + 0.125];
        assert!((aitken(&x).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn finite_and_infinite_kernels() {
        let m = model(Generator::Geometric { base: c(0.0, 1.0), ratio: c(0.5, 0.0) });
        assert_eq!(oracle_profile(&m, c(0.0, 1.0)).nul, Count::Finite(3));
        assert_eq!(oracle_profile(&m, c(0.0, 2.0)).nul, Count::Infinite);
        assert!(oracle_profile(&m, c(0.0, 2.0)).range_closed);
    }

    #[test]
    fn accumulation_point_has_open_range() {
        for g in [
            Generator::Geometric { base: c(0.0, 1.0), ratio: c(0.5, 0.0) },
            Generator::Power { base: c(0.0, 1.0), exponent: -1.0 },
        ] {
            let p = oracle_profile(&model(g), c(0.0, 0.0));
            assert!(!p.range_closed, "{g:?}");
            assert_eq!(p.nul, Count::ZERO);
        }
    }

    #[test]
    fn nearby_regular_point_is_closed() {
        let m = model(Generator::Power { base: c(0.0, 1.0), exponent: -1.0 });
        assert!(oracle_profile(&m, c(0.3, 0.0)).range_closed);
    }
}
