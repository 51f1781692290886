use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::{matrix_from_json, matrix_to_json, JsonObject, SpectralPoint, SpectralSet};
use crate::error::{Diagnostic, Error, Result};
use crate::ext::{close, Count};
use crate::function::Rational;
use crate::geometry::BisectorRegion;
use crate::linalg::{self, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub matrix: CMatrix,
    pub region: Option<BisectorRegion>,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub certified: bool,
    pub constant: f64,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix, region: Option<BisectorRegion>) -> Self {
        assert!(matrix.is_square(), "operator matrix must be square");
        Self {
            matrix,
            region,
            certified: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.matrix)
    }

    /// Eigenvalues clustered at `1e-8 * max(1, ‖A‖)`, with algebraic multiplicities.
    pub fn eigen_clusters(&self) -> Vec<(Complex64, usize)> {
        let tol = 1e-8 * self.norm().max(1.0);
        linalg::cluster(&linalg::eigenvalues(&self.matrix), tol)
    }

    pub fn spectrum(&self) -> SpectralSet {
        let mut s = SpectralSet::new();
        for (z, m) in self.eigen_clusters() {
            s.insert(SpectralPoint::atom(z, Count::Finite(m as u64)));
        }
        s
    }

    fn check_regular(&self, z: Complex64) -> Result<()> {
        let tol = 1e-12 * self.norm().max(1.0);
        if self.eigen_clusters().iter().any(|(l, _)| (z - l).norm() <= tol) {
            return Err(Error::SingularResolvent(z));
        }
        Ok(())
    }

    pub fn shifted(&self, z: Complex64) -> CMatrix {
        linalg::scalar(z, self.dim()) - &self.matrix
    }

    /// Solves `(z - A) x = rhs`.
    pub fn solve_shifted(&self, z: Complex64, rhs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
        self.check_regular(z)?;
        self.shifted(z)
            .lu()
            .solve(rhs)
            .ok_or(Error::SingularResolvent(z))
    }

    /// `(z - A)^{-1}`.
    pub fn resolvent_matrix(&self, z: Complex64) -> Result<CMatrix> {
        self.check_regular(z)?;
        linalg::inverse(&self.shifted(z)).ok_or(Error::SingularResolvent(z))
    }

    /// `r(A) = k ∏ (A - r_j)^{m_j}`.
    pub fn apply_rational(&self, r: &Rational) -> Result<DenseOperator> {
        let n = self.dim();
        let mut out = linalg::scalar(r.scale, n);
        for &(root, m) in &r.factors {
            let shifted = &self.matrix - linalg::scalar(root, n);
            if m >= 0 {
                out = &out * linalg::matrix_power(&shifted, m as usize);
            } else {
                self.check_regular(root)?;
                let inv = linalg::inverse(&shifted).ok_or(Error::SingularResolvent(root))?;
                out = &out * linalg::matrix_power(&inv, (-m) as usize);
            }
        }
        Ok(DenseOperator::new(out, self.region.clone()))
    }

    pub(super) fn from_json(obj: &JsonObject, region: Option<BisectorRegion>) -> Result<Self> {
        let mut diags = Vec::new();
        let m = matrix_from_json(&obj["matrix"], "/matrix", &mut diags).ok_or(Error::Schema(diags))?;
        Ok(DenseOperator::new(m, region))
    }

    pub(super) fn to_json(&self) -> JsonObject {
        let mut obj = JsonObject::new();
        obj.insert("kind".into(), json!("dense"));
        obj.insert("matrix".into(), matrix_to_json(&self.matrix));
        obj
    }
}

pub(super) fn validate(obj: &JsonObject, region: Option<&BisectorRegion>, diags: &mut Vec<Diagnostic>) {
    let Some(m) = obj.get("matrix") else {
        diags.push(Diagnostic::new("/matrix", "missing matrix"));
        return;
    };
    let Some(m) = matrix_from_json(m, "/matrix", diags) else {
        return;
    };
    if let Some(r) = region {
        let scale = linalg::spectral_norm(&m).max(1.0);
        for (k, z) in linalg::eigenvalues(&m).into_iter().enumerate() {
            if !r.contains_closed(z, 1e-9 * scale) {
                diags.push(Diagnostic::new(
                    "/matrix",
                    format!("eigenvalue #{k} = {} lies outside the closed bisector", crate::ext::format_complex(z)),
                ));
            }
        }
    }
}

/// Sample points outside `BS(ω', a)` for the resolvent bound.
pub(super) fn bound_samples(region: &BisectorRegion, sample_count: usize) -> Vec<Complex64> {
    let a = region.halfwidth_a;
    let omega = region.omega;
    let n = sample_count.max(4);
    let mut out = Vec::new();
    for w_frac in [0.25, 0.5, 0.75, 0.95] {
        let wp = w_frac * omega;
        for j in 0..5 {
            let theta = wp * (-0.9 + 0.45 * j as f64);
            for k in 0..n {
                let t = 10f64.powf(-3.0 + 6.0 * k as f64 / (n - 1) as f64);
                out.push(Complex64::new(a, 0.0) + Complex64::from_polar(t, theta));
                out.push(Complex64::new(-a, 0.0) - Complex64::from_polar(t, theta));
            }
        }
    }
    out
}

/// Checks that the spectrum lies in the closed bisector and samples the
/// resolvent bound outside smaller bisectors.
pub fn certify_bisectorial(op: &DenseOperator, sample_count: usize) -> Result<Certificate> {
    let region = op
        .region
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("operator has no bisector region (omega, a)".into()))?;
    let scale = op.norm().max(1.0);
    for (z, _) in op.eigen_clusters() {
        if !region.contains_closed(z, 1e-9 * scale) {
            return Err(Error::NotBisectorial {
                reason: "eigenvalue outside the closed bisector".into(),
                sample: z,
                constant: f64::INFINITY,
            });
        }
    }
    let a = region.halfwidth_a;
    let mut constant = 0.0f64;
    let clusters = op.eigen_clusters();
    for z in bound_samples(region, sample_count) {
        if clusters.iter().any(|(l, _)| close(*l, z, 1e-12)) {
            continue;
        }
        let Some(inv) = linalg::inverse(&op.shifted(z)) else {
            continue;
        };
        let c = (z - a).norm().min((z + a).norm()) * linalg::spectral_norm(&inv);
        if !c.is_finite() || c > 1e12 {
            return Err(Error::NotBisectorial {
                reason: "resolvent bound fails".into(),
                sample: z,
                constant: c,
            });
        }
        constant = constant.max(c);
    }
    Ok(Certificate {
        certified: true,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn op(entries: &[Complex64], n: usize, omega: f64, a: f64) -> DenseOperator {
        DenseOperator::new(CMatrix::from_row_slice(n, n, entries), Some(BisectorRegion::new(omega, a).unwrap()))
    }

    #[test]
    fn normal_matrix_constant_matches_distance_formula() {
        let d = op(&[c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)], 2, FRAC_PI_4, 0.0);
        let cert = certify_bisectorial(&d, 12).unwrap();
        assert!(cert.certified);
        let region = d.region.clone().unwrap();
        let expected = bound_samples(&region, 12)
            .into_iter()
            .map(|z| z.norm() / (z - c(0.0, 1.0)).norm().min((z + c(0.0, 1.0)).norm()))
            .fold(0.0, f64::max);
        assert!((cert.constant - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn real_eigenvalue_is_rejected_on_the_imaginary_axis() {
        let d = op(&[c(1.0, 0.0)], 1, FRAC_PI_2, 0.0);
        assert!(matches!(certify_bisectorial(&d, 8), Err(Error::NotBisectorial { .. })));
    }

    #[test]
    fn jordan_block_is_certified() {
        let d = op(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 2, FRAC_PI_4, 1.0);
        let cert = certify_bisectorial(&d, 16).unwrap();
        assert!(cert.constant.is_finite());
        let s = d.spectrum();
        assert_eq!(s.points[0].multiplicity, Count::Finite(2));
    }

    #[test]
    fn rational_application_matches_resolvent() {
        let d = op(&[c(0.0, 1.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)], 2, FRAC_PI_4, 0.0);
        let r = Rational::from_factors(c(-1.0, 0.0), [(c(3.0, 0.0), -1)]);
        let x = d.apply_rational(&r).unwrap().matrix;
        let y = d.resolvent_matrix(c(3.0, 0.0)).unwrap();
        assert!((x - y).norm() < 1e-14);
    }
}
