//! Bisectors, the truncated domains around them and integration contours.
//!
//! `BS(ω, a) = (-a + S(π-ω)) ∩ (a - S(π-ω))` where `S(θ)` is the open sector
//! `|arg z| < θ`. A smaller angle gives a larger bisector. For `ω = π/2` and
//! `a = 0` the bisector degenerates to the imaginary axis.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtComplex;
use crate::operator::SpectralSet;
use crate::quadrature::{adaptive_integrate, AdaptiveOptions, GaussLegendre, Panel};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// One of the points `-a`, `a`, `∞`. For `a = 0` only `PosA` (the origin) and
/// `Infinity` are used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SingularPoint {
    NegA,
    PosA,
    Infinity,
}

impl SingularPoint {
    pub fn key(&self) -> &'static str {
        match self {
            SingularPoint::NegA => "-a",
            SingularPoint::PosA => "a",
            SingularPoint::Infinity => "inf",
        }
    }

    pub fn parse(s: &str) -> Option<SingularPoint> {
        match s.trim() {
            "-a" => Some(SingularPoint::NegA),
            "a" | "+a" | "0" => Some(SingularPoint::PosA),
            t if crate::ext::is_infinity_token(t) => Some(SingularPoint::Infinity),
            _ => None,
        }
    }

    pub fn location(&self, a: f64) -> ExtComplex {
        match self {
            SingularPoint::NegA => ExtComplex::Finite(Complex64::new(-a, 0.0)),
            SingularPoint::PosA => ExtComplex::Finite(Complex64::new(a, 0.0)),
            SingularPoint::Infinity => ExtComplex::Infinity,
        }
    }

    /// The singular points of a bisector of half-width `a`.
    pub fn all(a: f64) -> Vec<SingularPoint> {
        if a == 0.0 {
            vec![SingularPoint::PosA, SingularPoint::Infinity]
        } else {
            vec![SingularPoint::NegA, SingularPoint::PosA, SingularPoint::Infinity]
        }
    }
}

impl fmt::Display for SingularPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl Serialize for SingularPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.key())
    }
}

impl<'de> Deserialize<'de> for SingularPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SingularPoint::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown singular point {s:?}")))
    }
}

/// `|arg w| < theta` with `w ≠ 0`.
fn in_open_sector(w: Complex64, theta: f64) -> bool {
    w.norm() > 0.0 && w.arg().abs() < theta
}

/// Membership in the open bisector of angle `phi` and half-width `a`.
pub fn in_bisector(z: Complex64, phi: f64, a: f64) -> bool {
    if a == 0.0 && phi >= FRAC_PI_2 {
        return z.re == 0.0;
    }
    let a = Complex64::new(a, 0.0);
    in_open_sector(z + a, PI - phi) && in_open_sector(a - z, PI - phi)
}

/// Membership in the closed bisector, with an absolute slack `tol`.
pub fn in_closed_bisector(z: Complex64, phi: f64, a: f64, tol: f64) -> bool {
    let theta = PI - phi;
    let ac = Complex64::new(a, 0.0);
    let ok = |w: Complex64| w.norm() <= tol || w.arg().abs() <= theta || dist_to_sector(w, theta) <= tol;
    if a == 0.0 && phi >= FRAC_PI_2 {
        return z.re.abs() <= tol;
    }
    ok(z + ac) && ok(ac - z)
}

/// Euclidean distance from `w` to the closed sector `|arg| <= theta`.
fn dist_to_sector(w: Complex64, theta: f64) -> f64 {
    let phi = w.arg().abs();
    if phi <= theta {
        0.0
    } else if phi - theta >= FRAC_PI_2 {
        w.norm()
    } else {
        w.norm() * (phi - theta).sin()
    }
}

fn in_excluded_ball(z: Complex64, d: SingularPoint, s: f64, a: f64) -> bool {
    match d.location(a) {
        ExtComplex::Finite(c) => (z - c).norm() <= s,
        ExtComplex::Infinity => z.norm() * s >= 1.0,
    }
}

/// Membership in `Ω(φ, (s_d))`: the open bisector minus the closed balls.
pub fn omega_contains(z: Complex64, phi: f64, a: f64, radii: &BTreeMap<SingularPoint, f64>) -> bool {
    in_bisector(z, phi, a) && radii.iter().all(|(d, s)| !in_excluded_ball(z, *d, *s, a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectorRegion {
    pub omega: f64,
    pub halfwidth_a: f64,
    /// Ball radius `s_d` for each singular point outside the extended spectrum.
    #[serde(default)]
    pub excluded: BTreeMap<SingularPoint, f64>,
    /// The distances `r_d` of a declared spectrum, when known.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub distances: BTreeMap<SingularPoint, f64>,
}

impl BisectorRegion {
    pub fn new(omega: f64, halfwidth_a: f64) -> Result<Self> {
        if !(omega > 0.0 && omega <= FRAC_PI_2 + 1e-15) {
            return Err(Error::Geometry(format!("omega = {omega} must lie in (0, pi/2]")));
        }
        if !(halfwidth_a >= 0.0 && halfwidth_a.is_finite()) {
            return Err(Error::Geometry(format!(
                "half-width a = {halfwidth_a} must be a nonnegative real"
            )));
        }
        Ok(Self {
            omega: omega.min(FRAC_PI_2),
            halfwidth_a,
            excluded: BTreeMap::new(),
            distances: BTreeMap::new(),
        })
    }

    pub fn with_excluded(mut self, d: SingularPoint, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::Geometry(format!("excluded radius at {d} must be positive")));
        }
        if let Some(r) = self.distances.get(&d) {
            if s >= *r {
                return Err(Error::Geometry(format!("s_{d} = {s} is not below r_{d} = {r}")));
            }
        }
        self.excluded.insert(d, s);
        Ok(self)
    }

    pub fn singular_points(&self) -> Vec<SingularPoint> {
        SingularPoint::all(self.halfwidth_a)
    }

    /// True iff `z` lies in the bisector minus the closed excluded balls.
    pub fn membership(&self, z: Complex64) -> bool {
        omega_contains(z, self.omega, self.halfwidth_a, &self.excluded)
    }

    /// Closed-bisector test used to validate spectra.
    pub fn contains_closed(&self, z: Complex64, tol: f64) -> bool {
        in_closed_bisector(z, self.omega, self.halfwidth_a, tol)
    }

    pub fn contains_ext(&self, z: ExtComplex, tol: f64) -> bool {
        match z {
            ExtComplex::Infinity => true,
            ExtComplex::Finite(z) => self.contains_closed(z, tol),
        }
    }

    /// `d` as a point of ℂ ∪ {∞}.
    pub fn location(&self, d: SingularPoint) -> ExtComplex {
        d.location(self.halfwidth_a)
    }

    /// Which singular point (if any) `z` coincides with.
    pub fn singular_at(&self, z: ExtComplex, tol: f64) -> Option<SingularPoint> {
        self.singular_points()
            .into_iter()
            .find(|d| self.location(*d).close_to(&z, tol))
    }
}

/// `r_d` for every singular point outside the extended spectrum.
pub fn distance_data(spectrum: &SpectralSet, region: &BisectorRegion) -> BTreeMap<SingularPoint, f64> {
    let mut out = BTreeMap::new();
    let a = region.halfwidth_a;
    for d in region.singular_points() {
        match d.location(a) {
            ExtComplex::Infinity => {
                if spectrum.includes_infinity || spectrum.points.is_empty() {
                    continue;
                }
                let rad = spectrum.radius();
                out.insert(d, if rad > 0.0 { 1.0 / rad } else { f64::INFINITY });
            }
            ExtComplex::Finite(c) => {
                if spectrum.contains(c, crate::ext::MERGE_TOL) {
                    continue;
                }
                let r = spectrum
                    .values()
                    .map(|z| (z - c).norm())
                    .fold(f64::INFINITY, f64::min);
                out.insert(d, r);
            }
        }
    }
    out
}

/// Function-domain and contour parameters for one calculus evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MidpointParameters {
    pub phi_prime: f64,
    /// The function domain radii `s_d`.
    pub s: BTreeMap<SingularPoint, f64>,
    /// The contour radii `s'_d`.
    pub s_prime: BTreeMap<SingularPoint, f64>,
}

/// Midpoint contour parameters `φ' = (φ+ω)/2`, `s'_d = (s_d+r̂_d)/2`.
///
/// `r̂_d` caps `r_d` so the balls stay disjoint and inside the outer circle;
/// when no `s_d` is given the function domain is taken to be `s_d = r̂_d/2`.
pub fn midpoint_parameters(
    region: &BisectorRegion,
    phi: f64,
    s: &BTreeMap<SingularPoint, f64>,
    r: &BTreeMap<SingularPoint, f64>,
) -> Result<MidpointParameters> {
    if !(phi > 0.0 && phi < region.omega) {
        return Err(Error::Geometry(format!(
            "function angle phi = {phi} must lie in (0, omega = {})",
            region.omega
        )));
    }
    let a = region.halfwidth_a;
    let mut out = MidpointParameters {
        phi_prime: 0.5 * (phi + region.omega),
        s: BTreeMap::new(),
        s_prime: BTreeMap::new(),
    };
    let finite_cap = if a > 0.0 { 0.9 * a } else { f64::INFINITY };
    let mut finite_max = 0.0f64;
    for d in [SingularPoint::NegA, SingularPoint::PosA] {
        if let Some(&rd) = r.get(&d) {
            let cap = rd.min(finite_cap).min(1e6);
            let sd = s.get(&d).copied().unwrap_or(0.5 * cap);
            if sd >= cap {
                return Err(Error::Geometry(format!("s_{d} = {sd} leaves no room below {cap}")));
            }
            let sp = 0.5 * (sd + cap);
            finite_max = finite_max.max(sp);
            out.s.insert(d, sd);
            out.s_prime.insert(d, sp);
        }
    }
    if let Some(&rinf) = r.get(&SingularPoint::Infinity) {
        // outer circle radius 1/s' must exceed 1.5 (a + s'_±a)
        let needed = 1.5 * (a + finite_max).max(1e-300);
        let cap = rinf.min(1.0 / needed).min(1e6);
        let sd = s.get(&SingularPoint::Infinity).copied().unwrap_or(0.5 * cap);
        if sd >= cap {
            return Err(Error::Geometry(format!("s_inf = {sd} leaves no room below {cap}")));
        }
        out.s.insert(SingularPoint::Infinity, sd);
        out.s_prime.insert(SingularPoint::Infinity, 0.5 * (sd + cap));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Ray,
    ExcludedArc(SingularPoint),
    Truncation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Traversed from `from` to `to`, or backwards when `reversed`; the
    /// parameter always runs from `from` so points near `from` stay exact.
    Line { from: Complex64, to: Complex64, reversed: bool },
    Arc { center: Complex64, radius: f64, theta0: f64, theta1: f64 },
}

impl Shape {
    pub fn point(&self, t: f64) -> Complex64 {
        match *self {
            Shape::Line { from, to, .. } => from + (to - from) * t,
            Shape::Arc { center, radius, theta0, theta1 } => {
                center + Complex64::from_polar(radius, theta0 + t * (theta1 - theta0))
            }
        }
    }

    pub fn derivative(&self, t: f64) -> Complex64 {
        match *self {
            Shape::Line { from, to, reversed } => {
                if reversed {
                    from - to
                } else {
                    to - from
                }
            }
            Shape::Arc { radius, theta0, theta1, .. } => {
                I * Complex64::from_polar(radius, theta0 + t * (theta1 - theta0)) * (theta1 - theta0)
            }
        }
    }

    fn distance(&self, z: Complex64) -> f64 {
        match *self {
            Shape::Line { from, to, .. } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                let t = if len2 > 0.0 {
                    (((z - from) * d.conj()).re / len2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (z - self.point(t)).norm()
            }
            Shape::Arc { center, radius, theta0, theta1 } => {
                let w = z - center;
                let (lo, hi) = if theta0 <= theta1 { (theta0, theta1) } else { (theta1, theta0) };
                let mut th = w.arg();
                while th < lo {
                    th += 2.0 * PI;
                }
                while th > lo + 2.0 * PI {
                    th -= 2.0 * PI;
                }
                if th <= hi {
                    (w.norm() - radius).abs()
                } else {
                    let p0 = center + Complex64::from_polar(radius, lo);
                    let p1 = center + Complex64::from_polar(radius, hi);
                    (z - p0).norm().min((z - p1).norm())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: usize,
    pub kind: SegmentKind,
    pub shape: Shape,
    /// Integration panels in the segment parameter `t ∈ [0, 1]`.
    pub panels: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourNode {
    pub segment_id: usize,
    pub t: f64,
    pub z: [f64; 2],
    pub weight: [f64; 2],
}

/// A positively oriented, piecewise smooth closed path (possibly several loops).
#[derive(Debug, Clone, PartialEq)]
pub struct ContourPath {
    pub segments: Vec<Segment>,
    pub outer_radius: f64,
    pub truncated: bool,
    pub nodes_per_panel: usize,
    /// Bound on the neglected pieces near vertices touching the spectrum.
    pub vertex_gap: f64,
}

impl ContourPath {
    pub fn initial_panels(&self) -> Vec<Panel> {
        self.segments
            .iter()
            .flat_map(|s| {
                s.panels.iter().map(move |&(t0, t1)| Panel {
                    segment: s.id,
                    t0,
                    t1,
                })
            })
            .collect()
    }

    pub fn point(&self, segment: usize, t: f64) -> Complex64 {
        self.segments[segment].shape.point(t)
    }

    pub fn derivative(&self, segment: usize, t: f64) -> Complex64 {
        self.segments[segment].shape.derivative(t)
    }

    /// Quadrature nodes with complex weights `w · dz/dt`.
    pub fn nodes(&self) -> Vec<ContourNode> {
        let rule = GaussLegendre::new(self.nodes_per_panel);
        let mut out = Vec::new();
        for s in &self.segments {
            for &(t0, t1) in &s.panels {
                for (t, w) in rule.on_interval(t0, t1) {
                    let z = s.shape.point(t);
                    let wz = s.shape.derivative(t) * w;
                    out.push(ContourNode {
                        segment_id: s.id,
                        t,
                        z: [z.re, z.im],
                        weight: [wz.re, wz.im],
                    });
                }
            }
        }
        out
    }

    /// Index of the path about `z0`, by adaptive quadrature of `dz/(z - z0)`.
    pub fn winding_number(&self, z0: Complex64) -> Result<f64> {
        let rule = GaussLegendre::new(8);
        let panels: Vec<Panel> = self
            .segments
            .iter()
            .flat_map(|s| {
                let mut cuts = vec![0.0, 1.0];
                for &(a, b) in &s.panels {
                    cuts.push(a);
                    cuts.push(b);
                }
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                cuts.windows(2)
                    .map(|w| Panel {
                        segment: s.id,
                        t0: w[0],
                        t1: w[1],
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let (v, _): (Complex64, _) = adaptive_integrate(
            &panels,
            &rule,
            AdaptiveOptions {
                tol: 1e-11,
                max_depth: 40,
            },
            |seg, t| self.derivative(seg, t) / (self.point(seg, t) - z0),
        )?;
        Ok((v / (2.0 * PI * I)).re)
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.shape.distance(z))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["segment_id", "t", "re", "im", "weight_re", "weight_im"])?;
        for n in self.nodes() {
            wtr.write_record(&[
                n.segment_id.to_string(),
                format!("{:.17e}", n.t),
                format!("{:.17e}", n.z[0]),
                format!("{:.17e}", n.z[1]),
                format!("{:.17e}", n.weight[0]),
                format!("{:.17e}", n.weight[1]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let segments: Vec<serde_json::Value> = self
            .segments
            .iter()
            .map(|s| {
                let shape = match s.shape {
                    Shape::Line { from, to, reversed } => {
                        let (from, to) = if reversed { (to, from) } else { (from, to) };
                        serde_json::json!({
                            "type": "line",
                            "from": crate::ext::complex_to_json(from),
                            "to": crate::ext::complex_to_json(to),
                        })
                    }
                    Shape::Arc { center, radius, theta0, theta1 } => serde_json::json!({
                        "type": "arc",
                        "center": crate::ext::complex_to_json(center),
                        "radius": radius,
                        "theta0": theta0,
                        "theta1": theta1,
                    }),
                };
                serde_json::json!({
                    "id": s.id,
                    "kind": s.kind,
                    "shape": shape,
                    "panels": s.panels,
                })
            })
            .collect();
        serde_json::json!({
            "outer_radius": self.outer_radius,
            "truncated": self.truncated,
            "nodes_per_panel": self.nodes_per_panel,
            "segments": segments,
            "nodes": self.nodes(),
        })
    }
}

/// Cuts at distances `start, 2 start, 4 start, ..., r1` along a ray.
fn ray_cuts(start: f64, r1: f64) -> Vec<f64> {
    let mut cuts = vec![start];
    let mut r = start;
    while 2.0 * r < r1 {
        r *= 2.0;
        cuts.push(r);
    }
    cuts.push(r1);
    cuts
}

fn arc_panels(theta0: f64, theta1: f64) -> Vec<(f64, f64)> {
    let n = ((theta1 - theta0).abs() / (PI / 4.0)).ceil().max(1.0) as usize;
    (0..n)
        .map(|k| (k as f64 / n as f64, (k + 1) as f64 / n as f64))
        .collect()
}

/// Options controlling vertex grading.
#[derive(Debug, Clone, Copy)]
pub struct ContourOptions {
    pub nodes_per_panel: usize,
    /// Distance from a spectral vertex below which the ray is not integrated.
    pub vertex_cutoff: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            nodes_per_panel: 8,
            vertex_cutoff: 1e-24,
        }
    }
}

/// Builds `∂Ω(φ', (s'_d))` truncated at `truncation_r` where unbounded.
pub fn build_contour(
    region: &BisectorRegion,
    phi_prime: f64,
    radii: &BTreeMap<SingularPoint, f64>,
    truncation_r: f64,
    nodes_per_panel: usize,
) -> Result<ContourPath> {
    build_contour_with(
        region,
        phi_prime,
        radii,
        truncation_r,
        ContourOptions {
            nodes_per_panel,
            ..ContourOptions::default()
        },
    )
}

pub fn build_contour_with(
    region: &BisectorRegion,
    phi_prime: f64,
    radii: &BTreeMap<SingularPoint, f64>,
    truncation_r: f64,
    opts: ContourOptions,
) -> Result<ContourPath> {
    let omega = region.omega;
    let a = region.halfwidth_a;
    if !(phi_prime > 0.0 && phi_prime < omega) {
        return Err(Error::Geometry(format!(
            "contour angle {phi_prime} must lie in (0, omega = {omega})"
        )));
    }
    if opts.nodes_per_panel == 0 {
        return Err(Error::Geometry("nodes_per_panel must be positive".into()));
    }
    for (d, s) in radii {
        if !region.excluded.contains_key(d) {
            return Err(Error::Geometry(format!("{d} belongs to the spectrum; no ball allowed")));
        }
        if let Some(&sd) = region.excluded.get(d) {
            if *s <= sd {
                return Err(Error::Geometry(format!("s'_{d} = {s} must exceed s_{d} = {sd}")));
            }
        }
        if let Some(&rd) = region.distances.get(d) {
            if *s >= rd {
                return Err(Error::Geometry(format!("s'_{d} = {s} must be below r_{d} = {rd}")));
            }
        }
    }
    for d in region.excluded.keys() {
        if !radii.contains_key(d) {
            return Err(Error::Geometry(format!("missing contour radius for {d}")));
        }
    }

    let s_pos = radii.get(&SingularPoint::PosA).copied();
    let s_neg = if a == 0.0 { s_pos } else { radii.get(&SingularPoint::NegA).copied() };
    if a > 0.0 && s_pos.unwrap_or(0.0) + s_neg.unwrap_or(0.0) >= 2.0 * a {
        return Err(Error::Geometry("balls around -a and a overlap".into()));
    }
    let inner_extent = a + s_pos.unwrap_or(0.0).max(s_neg.unwrap_or(0.0));
    let (rho, truncated) = match radii.get(&SingularPoint::Infinity) {
        Some(&s) => (1.0 / s, false),
        None => (truncation_r, true),
    };
    if !(rho.is_finite() && rho > inner_extent) {
        return Err(Error::Geometry(format!(
            "outer radius {rho} does not enclose the inner balls (extent {inner_extent})"
        )));
    }
    let outer_kind = if truncated {
        SegmentKind::Truncation
    } else {
        SegmentKind::ExcludedArc(SingularPoint::Infinity)
    };

    let c = phi_prime;
    // distance along a ray from ±a at which it meets |z| = rho
    let t_max = -a * c.cos() + (a * a * c.cos().powi(2) - a * a + rho * rho).sqrt();
    let cutoff = opts.vertex_cutoff * rho.max(1.0);
    let mut vertex_gap = 0.0f64;

    let mut segs: Vec<(SegmentKind, Shape, Vec<(f64, f64)>)> = Vec::new();

    // A ray from `origin` in direction e^{i angle} covering distances r0..r1.
    // `inward` reverses the traversal.
    let mut push_ray = |origin: Complex64, angle: f64, r0: f64, r1: f64, inward: bool| {
        let dir = Complex64::from_polar(1.0, angle);
        let start = if r0 == 0.0 {
            let e = cutoff.min(r1 * 1e-3);
            vertex_gap = vertex_gap.max(e);
            e
        } else {
            r0
        };
        let cuts = ray_cuts(start, r1);
        let len = r1 - r0;
        let to_t = |r: f64| (r - r0) / len;
        let panels: Vec<(f64, f64)> = cuts.windows(2).map(|w| (to_t(w[0]), to_t(w[1]))).collect();
        let shape = Shape::Line {
            from: origin + dir * r0,
            to: origin + dir * r1,
            reversed: inward,
        };
        (SegmentKind::Ray, shape, panels)
    };

    let arc = |kind: SegmentKind, center: Complex64, radius: f64, theta0: f64, theta1: f64| {
        (
            kind,
            Shape::Arc {
                center,
                radius,
                theta0,
                theta1,
            },
            arc_panels(theta0, theta1),
        )
    };

    let pa = Complex64::new(a, 0.0);
    let na = Complex64::new(-a, 0.0);
    let zero = Complex64::new(0.0, 0.0);

    if a > 0.0 {
        let sp = s_pos.unwrap_or(0.0);
        let sn = s_neg.unwrap_or(0.0);
        segs.push(push_ray(pa, -c, sp, t_max, true));
        if sp > 0.0 {
            segs.push(arc(SegmentKind::ExcludedArc(SingularPoint::PosA), pa, sp, 2.0 * PI - c, c));
        }
        segs.push(push_ray(pa, c, sp, t_max, false));
        let e1 = pa + Complex64::from_polar(t_max, c);
        let e2 = na + Complex64::from_polar(t_max, PI - c);
        segs.push(arc(outer_kind, zero, rho, e1.arg(), e2.arg()));
        segs.push(push_ray(na, PI - c, sn, t_max, true));
        if sn > 0.0 {
            segs.push(arc(SegmentKind::ExcludedArc(SingularPoint::NegA), na, sn, PI - c, -(PI - c)));
        }
        segs.push(push_ray(na, -(PI - c), sn, t_max, false));
        let e3 = na + Complex64::from_polar(t_max, -(PI - c));
        let e4 = pa + Complex64::from_polar(t_max, -c);
        segs.push(arc(outer_kind, zero, rho, e3.arg(), e4.arg()));
    } else {
        let s0 = s_pos.unwrap_or(0.0);
        // upper cone
        segs.push(push_ray(zero, c, s0, rho, false));
        segs.push(arc(outer_kind, zero, rho, c, PI - c));
        segs.push(push_ray(zero, PI - c, s0, rho, true));
        if s0 > 0.0 {
            segs.push(arc(SegmentKind::ExcludedArc(SingularPoint::PosA), zero, s0, PI - c, c));
        }
        // lower cone
        segs.push(push_ray(zero, -(PI - c), s0, rho, false));
        segs.push(arc(outer_kind, zero, rho, -(PI - c), -c));
        segs.push(push_ray(zero, -c, s0, rho, true));
        if s0 > 0.0 {
            segs.push(arc(SegmentKind::ExcludedArc(SingularPoint::PosA), zero, s0, -c, -(PI - c)));
        }
    }

    let segments = segs
        .into_iter()
        .enumerate()
        .map(|(id, (kind, shape, panels))| Segment {
            id,
            kind,
            shape,
            panels,
        })
        .collect();
    Ok(ContourPath {
        segments,
        outer_radius: rho,
        truncated,
        nodes_per_panel: opts.nodes_per_panel,
        vertex_gap,
    })
}

/// Deterministic sample points of `Ω(φ', (s'_d))` at least `margin` away from `path`.
pub fn interior_samples(
    region: &BisectorRegion,
    phi_prime: f64,
    radii: &BTreeMap<SingularPoint, f64>,
    path: &ContourPath,
    count: usize,
) -> Vec<Complex64> {
    let rho = path.outer_radius;
    let margin = 1e-3 * rho;
    let mut out = Vec::new();
    let mut k = 1u64;
    while out.len() < count && k < 200_000 {
        let x = (2.0 * halton(k, 2) - 1.0) * rho;
        let y = (2.0 * halton(k, 3) - 1.0) * rho;
        k += 1;
        let z = Complex64::new(x, y);
        if z.norm() < rho
            && omega_contains(z, phi_prime, region.halfwidth_a, radii)
            && path.distance(z) > margin
        {
            out.push(z);
        }
    }
    out
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
