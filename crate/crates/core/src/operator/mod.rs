//! Operator realizations: dense complex matrices and symbolic diagonal models.

mod dense;
mod diagonal;
mod spectral_set;

use nalgebra::DVector;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Diagnostic, Error, Result};
use crate::ext::{complex_from_json, ExtComplex, MERGE_TOL};
use crate::function::{BackendMeta, MeromFn, Rational};
use crate::geometry::{BisectorRegion, SingularPoint};

pub use dense::{certify_bisectorial, Certificate, DenseOperator};
pub use diagonal::{Atom, DiagonalModel, Generator, Tail, DEFAULT_HORIZON};
pub(crate) use diagonal::{eigen_image, value_at};
pub use spectral_set::{SpectralPoint, SpectralSet};

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorModel {
    Dense(DenseOperator),
    Diagonal(DiagonalModel),
}

/// Output of [`resolve`].
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Vector(DVector<Complex64>),
    Model(OperatorModel),
}

impl From<DenseOperator> for OperatorModel {
    fn from(d: DenseOperator) -> Self {
        OperatorModel::Dense(d)
    }
}

impl From<DiagonalModel> for OperatorModel {
    fn from(d: DiagonalModel) -> Self {
        OperatorModel::Diagonal(d)
    }
}

impl OperatorModel {
    pub fn region(&self) -> Option<&BisectorRegion> {
        match self {
            OperatorModel::Dense(d) => d.region.as_ref(),
            OperatorModel::Diagonal(d) => d.region.as_ref(),
        }
    }

    pub fn require_region(&self) -> Result<&BisectorRegion> {
        self.region()
            .ok_or_else(|| Error::InvalidArgument("operator has no bisector region (omega, a)".into()))
    }

    pub fn with_region(mut self, region: Option<BisectorRegion>) -> Self {
        match &mut self {
            OperatorModel::Dense(d) => d.region = region,
            OperatorModel::Diagonal(d) => d.region = region,
        }
        self
    }

    pub fn as_dense(&self) -> Option<&DenseOperator> {
        match self {
            OperatorModel::Dense(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_diagonal(&self) -> Option<&DiagonalModel> {
        match self {
            OperatorModel::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_dense(&self) -> bool {
        self.as_dense().is_some()
    }

    /// The spectrum, with tail elements listed up to the enumeration horizon.
    pub fn spectrum(&self) -> SpectralSet {
        match self {
            OperatorModel::Dense(d) => d.spectrum(),
            OperatorModel::Diagonal(d) => d.spectrum(),
        }
    }

    /// Eigenvalues (atoms and tail elements for diagonal models).
    pub fn point_spectrum(&self) -> SpectralSet {
        match self {
            OperatorModel::Dense(d) => d.spectrum(),
            OperatorModel::Diagonal(d) => d.point_spectrum(),
        }
    }

    /// A point of the resolvent set.
    pub fn regular_point(&self) -> Complex64 {
        let spec = self.spectrum();
        let (r, elements) = match self {
            // stay near the bounded part; divergent tails are avoided by the angle choice
            OperatorModel::Diagonal(d) => (d.bounded_radius() + 1.0, d.all_enumerated_values()),
            OperatorModel::Dense(_) => (spec.radius() + 1.0, spec.values().collect()),
        };
        let mut best = Complex64::new(r, 0.0);
        let mut best_gap = -1.0;
        for k in 0..16 {
            let cand = Complex64::from_polar(r, 0.1 + k as f64 * std::f64::consts::PI / 8.0);
            let gap = elements.iter().map(|z| (z - cand).norm()).fold(f64::INFINITY, f64::min);
            if gap > best_gap {
                best_gap = gap;
                best = cand;
            }
        }
        best
    }

    /// `M_A`, the singular points in the extended spectrum, and related data.
    pub fn meta(&self) -> Result<BackendMeta> {
        let region = self.require_region()?.clone();
        let spec = self.spectrum();
        let sp = self.point_spectrum();
        let a = region.halfwidth_a;
        let mut m_a = Vec::new();
        let mut sigma_p_singular = Vec::new();
        for d in region.singular_points() {
            match d.location(a) {
                ExtComplex::Infinity => {
                    if spec.includes_infinity {
                        m_a.push(d);
                    }
                }
                ExtComplex::Finite(c) => {
                    if spec.contains(c, MERGE_TOL) {
                        m_a.push(d);
                    }
                    if sp.contains(c, MERGE_TOL) {
                        sigma_p_singular.push(d);
                    }
                }
            }
        }
        Ok(BackendMeta {
            region,
            m_a,
            sigma_p_singular,
            eigenvalues: sp,
        })
    }

    /// `r(A)` for a rational `r`, computed exactly (no quadrature).
    pub fn apply_rational(&self, r: &Rational) -> Result<OperatorModel> {
        match self {
            OperatorModel::Dense(d) => Ok(d.apply_rational(r)?.into()),
            OperatorModel::Diagonal(d) => Ok(d.map(&MeromFn::rational(r.clone()))?.into()),
        }
    }

    pub fn certify(&self, sample_count: usize) -> Result<Certificate> {
        match self {
            OperatorModel::Dense(d) => certify_bisectorial(d, sample_count),
            OperatorModel::Diagonal(d) => d.certify(),
        }
    }

    pub fn from_json(v: &Value) -> Result<OperatorModel> {
        let diags = validate_operator(v);
        if !diags.is_empty() {
            return Err(Error::Schema(diags));
        }
        let obj = v.as_object().expect("validated object");
        let region = match (obj.get("omega"), obj.get("a")) {
            (Some(w), a) => Some(BisectorRegion::new(
                w.as_f64().unwrap_or_default(),
                a.and_then(|a| a.as_f64()).unwrap_or(0.0),
            )?),
            _ => None,
        };
        match obj.get("kind").and_then(|k| k.as_str()) {
            Some("dense") => Ok(DenseOperator::from_json(obj, region)?.into()),
            _ => Ok(DiagonalModel::from_json(obj, region)?.into()),
        }
    }

    pub fn to_json(&self) -> Value {
        let (mut obj, region) = match self {
            OperatorModel::Dense(d) => (d.to_json(), d.region.as_ref()),
            OperatorModel::Diagonal(d) => (d.to_json(), d.region.as_ref()),
        };
        if let Some(r) = region {
            obj.insert("omega".into(), json!(r.omega));
            obj.insert("a".into(), json!(r.halfwidth_a));
        }
        Value::Object(obj)
    }
}

/// Solves `(z - A) x = rhs` (dense) or returns the resolvent model (diagonal).
pub fn resolve(op: &OperatorModel, z: Complex64, rhs: Option<&DVector<Complex64>>) -> Result<Resolved> {
    match op {
        OperatorModel::Dense(d) => {
            let n = d.dim();
            let rhs = rhs
                .cloned()
                .ok_or_else(|| Error::InvalidArgument("dense resolve needs a right-hand side".into()))?;
            if rhs.len() != n {
                return Err(Error::InvalidArgument(format!("rhs has length {}, expected {n}", rhs.len())));
            }
            d.solve_shifted(z, &rhs).map(Resolved::Vector)
        }
        OperatorModel::Diagonal(d) => {
            if rhs.is_some() {
                return Err(Error::InvalidArgument("diagonal resolve takes no right-hand side".into()));
            }
            d.resolvent(z).map(|m| Resolved::Model(m.into()))
        }
    }
}

/// Spectrum of an operator model.
pub fn spectrum(op: &OperatorModel) -> SpectralSet {
    op.spectrum()
}

pub(crate) fn count_from_json(v: &Value) -> Option<crate::ext::Count> {
    serde_json::from_value(v.clone()).ok()
}

/// Structural and semantic checks for an operator spec.
pub fn validate_operator(v: &Value) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let Some(obj) = v.as_object() else {
        return vec![Diagnostic::new("", "operator spec must be an object")];
    };
    let mut region = None;
    match obj.get("omega") {
        None => {
            if obj.contains_key("a") {
                diags.push(Diagnostic::new("/omega", "missing omega (required with a)"));
            }
        }
        Some(w) => match w.as_f64() {
            None => diags.push(Diagnostic::new("/omega", "expected a number")),
            Some(w) if w > std::f64::consts::FRAC_PI_2 + 1e-15 => {
                diags.push(Diagnostic::new("/omega", format!("omega = {w} exceeds pi/2")))
            }
            Some(w) if w <= 0.0 => diags.push(Diagnostic::new("/omega", "omega must be positive")),
            Some(w) => {
                let a = obj.get("a").map(|a| a.as_f64());
                match a {
                    Some(None) => diags.push(Diagnostic::new("/a", "expected a number")),
                    Some(Some(x)) if !(x >= 0.0 && x.is_finite()) => {
                        diags.push(Diagnostic::new("/a", "half-width must be a nonnegative real"))
                    }
                    _ => region = BisectorRegion::new(w, a.flatten().unwrap_or(0.0)).ok(),
                }
            }
        },
    }
    match obj.get("kind").and_then(|k| k.as_str()) {
        Some("dense") => dense::validate(obj, region.as_ref(), &mut diags),
        Some("diagonal") => diagonal::validate(obj, region.as_ref(), &mut diags),
        Some(other) => diags.push(Diagnostic::new("/kind", format!("unknown operator kind {other:?}"))),
        None => diags.push(Diagnostic::new("/kind", "missing operator kind (dense or diagonal)")),
    }
    diags
}

pub(crate) fn matrix_from_json(v: &Value, path: &str, diags: &mut Vec<Diagnostic>) -> Option<crate::linalg::CMatrix> {
    let Some(rows) = v.as_array() else {
        diags.push(Diagnostic::new(path, "expected an array of rows"));
        return None;
    };
    let n = rows.len();
    if n == 0 {
        diags.push(Diagnostic::new(path, "matrix must be non-empty"));
        return None;
    }
    let mut m = crate::linalg::CMatrix::zeros(n, n);
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        match row.as_array() {
            Some(r) if r.len() == n => {
                for (j, x) in r.iter().enumerate() {
                    match complex_from_json(x) {
                        Some(z) => m[(i, j)] = z,
                        None => {
                            ok = false;
                            diags.push(Diagnostic::new(format!("{path}/{i}/{j}"), "expected a complex number"));
                        }
                    }
                }
            }
            _ => {
                ok = false;
                diags.push(Diagnostic::new(format!("{path}/{i}"), format!("expected a row of length {n} (matrix must be square)")));
            }
        }
    }
    ok.then_some(m)
}

pub(crate) fn matrix_to_json(m: &crate::linalg::CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| crate::ext::complex_to_json(m[(i, j)])).collect()))
            .collect(),
    )
}

pub(crate) type JsonObject = Map<String, Value>;

/// Which singular point (if any) a value sits on.
pub(crate) fn singular_location(region: Option<&BisectorRegion>, z: Complex64) -> Option<SingularPoint> {
    region.and_then(|r| r.singular_at(ExtComplex::Finite(z), MERGE_TOL))
}
