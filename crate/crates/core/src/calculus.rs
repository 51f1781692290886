//! The primary calculus on `E(A)`, the regularized calculus on `M(A)` and
//! spectral projections.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ext::{close, Count, ExtComplex};
use crate::function::{decompose_e, default_regularizer, function_angle, in_primary_class, BackendMeta, MeromFn};
use crate::geometry::{build_contour, distance_data, midpoint_parameters, BisectorRegion, ContourPath, SingularPoint};
use crate::linalg::{self, CMatrix};
use crate::operator::eigen_image;
use crate::operator::{DenseOperator, DiagonalModel, OperatorModel, SpectralPoint, SpectralSet};
use crate::quadrature::{adaptive_integrate, AdaptiveOptions, GaussLegendre, Panel, QuadratureReport};

/// Numerical settings of one calculus evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CalculusOptions {
    pub tol: f64,
    pub max_depth: usize,
    pub nodes_per_panel: usize,
    /// Resolvent base point; `a + 2` when unset.
    pub b: Option<Complex64>,
    pub check_independence: bool,
    pub rank_gap_ratio: f64,
}

impl Default for CalculusOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_depth: 12,
            nodes_per_panel: 8,
            b: None,
            check_independence: true,
            rank_gap_ratio: 10.0,
        }
    }
}

impl CalculusOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn base_point(&self, a: f64) -> Complex64 {
        self.b.unwrap_or(Complex64::new(a + 2.0, 0.0))
    }
}

#[derive(Debug, Clone)]
pub struct CalculusResult {
    pub operator: OperatorModel,
    pub bounded: bool,
    /// `None` stands for the identity regularizer.
    pub regularizer_used: Option<MeromFn>,
    pub quadrature_report: Option<QuadratureReport>,
}

fn merge_reports(a: Option<QuadratureReport>, b: Option<QuadratureReport>) -> Option<QuadratureReport> {
    match (a, b) {
        (Some(x), Some(y)) => Some(QuadratureReport {
            panels: x.panels + y.panels,
            nodes: x.nodes + y.nodes,
            tail_estimate: x.tail_estimate.max(y.tail_estimate),
            refinement_steps: x.refinement_steps + y.refinement_steps,
            error_estimate: x.error_estimate + y.error_estimate,
        }),
        (x, y) => x.or(y),
    }
}

/// `f(A)` for `f ∈ E(A)`.
pub fn apply_primary(f: &MeromFn, op: &OperatorModel, tol: f64) -> Result<CalculusResult> {
    apply_primary_with(f, op, &CalculusOptions::with_tol(tol))
}

pub fn apply_primary_with(f: &MeromFn, op: &OperatorModel, opts: &CalculusOptions) -> Result<CalculusResult> {
    let meta = op.meta()?;
    if !in_primary_class(f, &meta) {
        return Err(Error::NotInPrimaryClass(format!(
            "{} has poles in its domain or is not regular on M_A",
            f.to_expr_string()
        )));
    }
    match op {
        OperatorModel::Diagonal(d) => {
            let m = d.map(f)?;
            Ok(CalculusResult {
                bounded: !m.is_unbounded(),
                operator: m.into(),
                regularizer_used: None,
                quadrature_report: None,
            })
        }
        OperatorModel::Dense(d) => {
            let (m, report) = dense_primary(f, d, &meta, opts)?;
            Ok(CalculusResult {
                operator: DenseOperator::new(m, None).into(),
                bounded: true,
                regularizer_used: None,
                quadrature_report: Some(report),
            })
        }
    }
}

/// The integration contour used for a dense operator.
#[derive(Debug, Clone)]
pub struct CalculusContour {
    pub path: ContourPath,
    /// The region with the function-domain exclusions `s_d` and distances `r_d`.
    pub region: BisectorRegion,
    pub phi_prime: f64,
    pub s_prime: BTreeMap<SingularPoint, f64>,
}

/// Builds `Γ = ∂Ω(φ', (s'_d))` for `f` and a dense operator with a region.
pub fn calculus_contour(f: &MeromFn, op: &OperatorModel, nodes_per_panel: usize) -> Result<CalculusContour> {
    let d = op
        .as_dense()
        .ok_or_else(|| Error::InvalidArgument("contours are only built for dense operators".into()))?;
    dense_contour(f, d, op.require_region()?, nodes_per_panel)
}

fn dense_contour(f: &MeromFn, op: &DenseOperator, region: &BisectorRegion, nodes_per_panel: usize) -> Result<CalculusContour> {
    let spectrum = op.spectrum();
    let r = distance_data(&spectrum, region);
    let phi = function_angle(f, region);
    let params = midpoint_parameters(region, phi, &f.domain.s, &r)?;
    let mut contour_region = region.clone();
    contour_region.excluded = params.s.clone();
    contour_region.distances = r;
    let truncation = 1e6 * (1.0 + spectrum.radius());
    let path = build_contour(&contour_region, params.phi_prime, &params.s_prime, truncation, nodes_per_panel)?;
    Ok(CalculusContour {
        path,
        region: contour_region,
        phi_prime: params.phi_prime,
        s_prime: params.s_prime,
    })
}

fn dense_primary(f: &MeromFn, op: &DenseOperator, meta: &BackendMeta, opts: &CalculusOptions) -> Result<(CMatrix, QuadratureReport)> {
    let region = &meta.region;
    let a = region.halfwidth_a;
    let n = op.dim();
    let b = opts.base_point(a);
    let dec = decompose_e(f, &meta.m_a, a, b)?;
    let path = dense_contour(f, op, region, opts.nodes_per_panel)?.path;

    let a_mat = &op.matrix;
    let scale = Complex64::new(0.0, 1.0 / (2.0 * PI));
    let integrand = |seg: usize, t: f64| -> CMatrix {
        let z = path.point(seg, t);
        let w = dec.f0.eval(z) * path.derivative(seg, t) * (-scale);
        let shifted = linalg::scalar(z, n) - a_mat;
        match linalg::inverse(&shifted) {
            Some(inv) => inv * w,
            None => CMatrix::from_element(n, n, Complex64::new(f64::NAN, f64::NAN)),
        }
    };
    let rule = GaussLegendre::new(opts.nodes_per_panel);
    let (mut x, mut report) = adaptive_integrate(
        &path.initial_panels(),
        &rule,
        AdaptiveOptions {
            tol: opts.tol,
            max_depth: opts.max_depth,
        },
        integrand,
    )?;
    report.tail_estimate = path.vertex_gap;

    let zero = Complex64::new(0.0, 0.0);
    if dec.coef_plus != zero {
        x += op.resolvent_matrix(-b)? * (-dec.coef_plus);
    }
    if dec.coef_minus != zero || dec.coef_minus_sq != zero {
        let rb = op.resolvent_matrix(b)?;
        x += &rb * dec.coef_minus;
        x += (&rb * &rb) * dec.coef_minus_sq;
    }
    x += linalg::scalar(dec.coef_one, n);
    Ok((x, report))
}

/// `f(A) = e(A)^{-1} (ef)(A)` with the default regularizer.
pub fn apply_regularized(f: &MeromFn, op: &OperatorModel, tol: f64) -> Result<CalculusResult> {
    apply_regularized_with(f, op, &CalculusOptions::with_tol(tol))
}

pub fn apply_regularized_with(f: &MeromFn, op: &OperatorModel, opts: &CalculusOptions) -> Result<CalculusResult> {
    let meta = op.meta()?;
    let b = opts.base_point(meta.region.halfwidth_a);
    let e = default_regularizer(f, &meta, b)?;
    let identity = e == MeromFn::one();
    match op {
        OperatorModel::Diagonal(d) => {
            if !identity && opts.check_independence {
                let e2 = e.mul(&MeromFn::resolvent_fn(b));
                diagonal_independence(d, f, &e)?;
                diagonal_independence(d, f, &e2)?;
            }
            let m = d.map(f)?;
            Ok(CalculusResult {
                bounded: !m.is_unbounded(),
                operator: m.into(),
                regularizer_used: (!identity).then_some(e),
                quadrature_report: None,
            })
        }
        OperatorModel::Dense(_) if identity => apply_primary_with(f, op, opts),
        OperatorModel::Dense(_) => {
            let mut res = apply_with_regularizer(f, op, &e, opts)?;
            if opts.check_independence {
                let e2 = e.mul(&MeromFn::resolvent_fn(b));
                let other = apply_with_regularizer(f, op, &e2, opts)?;
                let (x1, x2) = (dense_matrix(&res.operator), dense_matrix(&other.operator));
                let difference = (x1 - x2).norm();
                let tolerance = 1e-8 * x1.norm().max(1.0);
                if difference > tolerance {
                    return Err(Error::RegularizerMismatch { difference, tolerance });
                }
                res.quadrature_report = merge_reports(res.quadrature_report, other.quadrature_report);
            }
            Ok(res)
        }
    }
}

fn dense_matrix(op: &OperatorModel) -> &CMatrix {
    &op.as_dense().expect("dense result").matrix
}

/// Compares `(ef)(λ)/e(λ)` with `f(λ)` on every enumerated eigenvalue.
fn diagonal_independence(d: &DiagonalModel, f: &MeromFn, e: &MeromFn) -> Result<()> {
    let ef = e.mul(f);
    let image = |g: &MeromFn, z: Complex64| -> Result<Option<Complex64>> {
        match d.region.as_ref() {
            Some(region) => eigen_image(g, z, region),
            None => Ok(Some(g.eval(z)).filter(|v| v.is_finite())),
        }
    };
    for z in d.point_spectrum().values() {
        let Some(ev) = image(e, z)?.filter(|v| v.norm() > 0.0) else {
            return Err(Error::RegularizerNotInjective(format!(
                "e vanishes at the eigenvalue {}",
                crate::ext::format_complex(z)
            )));
        };
        let (Some(efv), Some(fv)) = (image(&ef, z)?, image(f, z)?) else {
            continue;
        };
        let x = efv / ev;
        let tolerance = 1e-12 * fv.norm().max(1.0);
        if (x - fv).norm() > tolerance {
            return Err(Error::RegularizerMismatch {
                difference: (x - fv).norm(),
                tolerance,
            });
        }
    }
    Ok(())
}

/// `e(A)^{-1} (ef)(A)` for a caller-supplied regularizer `e`.
pub fn apply_with_regularizer(f: &MeromFn, op: &OperatorModel, e: &MeromFn, opts: &CalculusOptions) -> Result<CalculusResult> {
    let ef = e.mul(f);
    match op {
        OperatorModel::Diagonal(d) => {
            diagonal_independence(d, f, e)?;
            let m = d.map(f)?;
            Ok(CalculusResult {
                bounded: !m.is_unbounded(),
                operator: m.into(),
                regularizer_used: Some(e.clone()),
                quadrature_report: None,
            })
        }
        OperatorModel::Dense(d) => {
            let ea = apply_primary_with(e, op, opts)?;
            let efa = apply_primary_with(&ef, op, opts)?;
            let (em, efm) = (dense_matrix(&ea.operator), dense_matrix(&efa.operator));
            let n = d.dim();
            let rank = linalg::numerical_rank(em, opts.rank_gap_ratio)?;
            if rank < n {
                return Err(Error::RegularizerNotInjective(format!("e(A) has rank {rank} < {n}")));
            }
            let rc = linalg::rcond(em);
            if rc < 1e-10 {
                warn!("e(A) is ill-conditioned (cond = {:.3e})", 1.0 / rc);
            }
            let x = linalg::solve(em, efm).ok_or(Error::SingularSystem)?;
            Ok(CalculusResult {
                operator: DenseOperator::new(x, None).into(),
                bounded: true,
                regularizer_used: Some(e.clone()),
                quadrature_report: merge_reports(ea.quadrature_report, efa.quadrature_report),
            })
        }
    }
}

/// A spectral projection `P_Λ` and the selection it realizes.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub projector: OperatorModel,
    pub lambda_set: SpectralSet,
    pub complement_rank_finite: bool,
    pub selection: Selection,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// Selected eigenvalue clusters of a dense operator.
    Clusters(Vec<Complex64>),
    /// Selected atoms and tails of a diagonal model.
    Components { atoms: Vec<bool>, tails: Vec<bool> },
}

/// `P_Λ` for `Λ` given by its points (and `∞`).
pub fn spectral_projection(op: &OperatorModel, lambda: &SpectralSet) -> Result<ProjectionResult> {
    match op {
        OperatorModel::Dense(d) => dense_projection(d, lambda),
        OperatorModel::Diagonal(d) => {
            let (atoms, tails) = diagonal_selection(d, lambda)?;
            diagonal_projection(d, atoms, tails)
        }
    }
}

fn dense_projection(op: &DenseOperator, lambda: &SpectralSet) -> Result<ProjectionResult> {
    if lambda.includes_infinity {
        return Err(Error::InvalidArgument("infinity is not in the spectrum of a matrix".into()));
    }
    let clusters = op.eigen_clusters();
    let tol = 1e-8 * op.norm().max(1.0);
    let mut chosen = vec![false; clusters.len()];
    for z in lambda.values() {
        match clusters.iter().position(|(l, _)| (l - z).norm() <= tol.max(1e-8 * z.norm())) {
            Some(k) => chosen[k] = true,
            None => {
                return Err(Error::InvalidArgument(format!(
                    "{} is not an eigenvalue",
                    crate::ext::format_complex(z)
                )))
            }
        }
    }
    let n = op.dim();
    let mut p = CMatrix::zeros(n, n);
    let mut selected = SpectralSet::new();
    let rule = GaussLegendre::new(16);
    for (k, &(center, mult)) in clusters.iter().enumerate() {
        if !chosen[k] {
            continue;
        }
        selected.insert(SpectralPoint::atom(center, Count::Finite(mult as u64)));
        let gap = clusters
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, (l, _))| (l - center).norm())
            .fold(f64::INFINITY, f64::min);
        let radius = if gap.is_finite() { 0.5 * gap } else { center.norm().max(1.0) };
        let panels: Vec<Panel> = (0..8)
            .map(|j| Panel {
                segment: 0,
                t0: j as f64 / 8.0,
                t1: (j + 1) as f64 / 8.0,
            })
            .collect();
        // (1/2πi) ∮ (z - A)^{-1} dz with z = c + ρ e^{2πit}
        let (part, _) = adaptive_integrate(&panels, &rule, AdaptiveOptions { tol: 1e-13, max_depth: 20 }, |_, t| {
            let u = Complex64::from_polar(1.0, 2.0 * PI * t);
            let z = center + u * radius;
            let inv = linalg::inverse(&(linalg::scalar(z, n) - &op.matrix))
                .unwrap_or_else(|| CMatrix::from_element(n, n, Complex64::new(f64::NAN, 0.0)));
            inv * (u * radius)
        })?;
        p += part;
    }
    let values = selected.values().collect();
    Ok(ProjectionResult {
        projector: DenseOperator::new(p, None).into(),
        lambda_set: selected,
        complement_rank_finite: true,
        selection: Selection::Clusters(values),
    })
}

fn diagonal_selection(d: &DiagonalModel, lambda: &SpectralSet) -> Result<(Vec<bool>, Vec<bool>)> {
    let tol = crate::ext::MERGE_TOL;
    let atoms: Vec<bool> = d.atoms.iter().map(|a| lambda.contains(a.value, tol)).collect();
    let tails: Vec<bool> = d
        .tails
        .iter()
        .map(|t| match t.limit {
            ExtComplex::Finite(l) => lambda.contains(l, tol),
            ExtComplex::Infinity => lambda.includes_infinity,
        })
        .collect();
    let spectrum = d.spectrum();
    for z in lambda.values() {
        if !spectrum.contains(z, tol) {
            return Err(Error::InvalidArgument(format!("{} is not in the spectrum", crate::ext::format_complex(z))));
        }
        let is_atom = d.atoms.iter().any(|a| close(a.value, z, tol));
        let is_limit = d.is_accumulation(z);
        if !is_atom && !is_limit {
            return Err(Error::InvalidArgument(format!(
                "{} is a single tail eigenvalue; select its tail through the limit",
                crate::ext::format_complex(z)
            )));
        }
    }
    if lambda.includes_infinity && !d.is_unbounded() {
        return Err(Error::InvalidArgument("infinity is not in the extended spectrum".into()));
    }
    Ok((atoms, tails))
}

/// `P_Λ` for an explicit selection of atoms and tails.
pub fn diagonal_projection(d: &DiagonalModel, atoms: Vec<bool>, tails: Vec<bool>) -> Result<ProjectionResult> {
    if atoms.len() != d.atoms.len() || tails.len() != d.tails.len() {
        return Err(Error::InvalidArgument("selection masks do not match the model".into()));
    }
    let tol = crate::ext::MERGE_TOL;
    // a limit point must go together with everything accumulating at it
    for (i, t) in d.tails.iter().enumerate() {
        for (k, a) in d.atoms.iter().enumerate() {
            if matches!(t.limit, ExtComplex::Finite(l) if close(l, a.value, tol)) && atoms[k] != tails[i] {
                return Err(Error::NotClopen(format!(
                    "the atom {} and the tail accumulating there are split",
                    crate::ext::format_complex(a.value)
                )));
            }
        }
        for (j, s) in d.tails.iter().enumerate() {
            let same = match (t.limit, s.limit) {
                (ExtComplex::Finite(x), ExtComplex::Finite(y)) => close(x, y, tol),
                (x, y) => x.is_infinite() && y.is_infinite(),
            };
            if same && tails[i] != tails[j] {
                return Err(Error::NotClopen(format!("tails with the common limit {} are split", t.limit)));
            }
        }
    }
    let kept = d.select(&atoms, &tails);
    let dropped = d.select(&atoms.iter().map(|x| !x).collect::<Vec<_>>(), &tails.iter().map(|x| !x).collect::<Vec<_>>());
    let complement_rank_finite = dropped.tails.is_empty() && dropped.atoms.iter().all(|a| a.mult.is_finite());
    Ok(ProjectionResult {
        projector: d.indicator(&atoms, &tails).into(),
        lambda_set: kept.spectrum(),
        complement_rank_finite,
        selection: Selection::Components { atoms, tails },
    })
}

/// The part `A_Λ` of `A` in `R(P_Λ)`.
pub fn restrict_to_projection(op: &OperatorModel, proj: &ProjectionResult) -> Result<OperatorModel> {
    match (op, &proj.selection) {
        (OperatorModel::Diagonal(d), Selection::Components { atoms, tails }) => Ok(d.select(atoms, tails).into()),
        (OperatorModel::Dense(d), Selection::Clusters(_)) => {
            let p = dense_matrix(&proj.projector);
            let rank = linalg::numerical_rank(p, 10.0)?;
            let q = linalg::range_basis(p, rank);
            let compressed = q.adjoint() * &d.matrix * &q;
            Ok(DenseOperator::new(compressed, d.region.clone()).into())
        }
        _ => Err(Error::InvalidArgument("projection does not belong to this operator".into())),
    }
}
