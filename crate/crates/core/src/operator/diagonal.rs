use num_complex::Complex64;
use serde_json::{json, Value};

use super::{count_from_json, singular_location, Certificate, JsonObject, SpectralPoint, SpectralSet};
use crate::error::{Diagnostic, Error, Result};
use crate::ext::{close, complex_from_json, complex_to_json, ext_from_json, ext_to_json, format_complex, Count, ExtComplex, MERGE_TOL};
use crate::function::{MeromFn, Rational};
use crate::geometry::{BisectorRegion, SingularPoint};

/// Number of tail elements enumerated explicitly.
pub const DEFAULT_HORIZON: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: Complex64,
    pub mult: Count,
}

/// Raw tail sequences, `k = 1, 2, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// `center + base * ratio^k`
    Geometric { base: Complex64, ratio: Complex64 },
    /// `center + base * k^exponent`
    Power { base: Complex64, exponent: f64 },
}

/// A sequence of simple eigenvalues converging to `limit`, possibly pushed
/// through a chain of functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Tail {
    pub center: Complex64,
    pub generator: Generator,
    pub maps: Vec<MeromFn>,
    pub limit: ExtComplex,
}

impl Tail {
    pub fn new(limit: ExtComplex, generator: Generator) -> Result<Tail> {
        let diverges = match generator {
            Generator::Geometric { base, ratio } => {
                if base.norm() == 0.0 || ratio.norm() == 1.0 || ratio.norm() == 0.0 {
                    return Err(Error::InvalidArgument("geometric tail needs base != 0 and 0 < |ratio| != 1".into()));
                }
                ratio.norm() > 1.0
            }
            Generator::Power { base, exponent } => {
                if base.norm() == 0.0 || exponent == 0.0 || !exponent.is_finite() {
                    return Err(Error::InvalidArgument("power tail needs base != 0 and a nonzero exponent".into()));
                }
                exponent > 0.0
            }
        };
        if diverges != limit.is_infinite() {
            return Err(Error::InvalidArgument(format!(
                "tail generator {} but the declared limit is {limit}",
                if diverges { "diverges" } else { "converges" }
            )));
        }
        Ok(Tail {
            center: limit.finite().unwrap_or_default(),
            generator,
            maps: Vec::new(),
            limit,
        })
    }

    pub fn geometric(limit: ExtComplex, base: Complex64, ratio: Complex64) -> Result<Tail> {
        Tail::new(limit, Generator::Geometric { base, ratio })
    }

    fn offset(&self, k: usize) -> Complex64 {
        match self.generator {
            Generator::Geometric { base, ratio } => base * ratio.powi(k as i32),
            Generator::Power { base, exponent } => base * (k as f64).powf(exponent),
        }
    }

    fn raw(&self, k: usize) -> Complex64 {
        self.center + self.offset(k)
    }

    /// `mu - element(k)` and the magnitude it was formed from. Unmapped tails
    /// subtract the offset from `mu - center` so that elements close to `mu`
    /// are not rounded onto it.
    pub fn gap_from(&self, mu: Complex64, k: usize) -> (Complex64, f64) {
        if self.maps.is_empty() {
            let (shift, offset) = (mu - self.center, self.offset(k));
            (shift - offset, shift.norm().max(offset.norm()))
        } else {
            let v = self.element(k);
            (mu - v, mu.norm().max(v.norm()))
        }
    }

    /// The `k`-th element (`k >= 1`).
    pub fn element(&self, k: usize) -> Complex64 {
        self.maps.iter().fold(self.raw(k), |w, f| f.eval(w))
    }
}

/// A normal operator given by eigenvalue atoms and convergent tails.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalModel {
    pub atoms: Vec<Atom>,
    pub tails: Vec<Tail>,
    pub region: Option<BisectorRegion>,
    pub horizon: usize,
}

fn merge_atom(atoms: &mut Vec<Atom>, atom: Atom) {
    if atom.mult.is_zero() {
        return;
    }
    match atoms.iter_mut().find(|a| close(a.value, atom.value, MERGE_TOL)) {
        Some(a) => a.mult = a.mult + atom.mult,
        None => atoms.push(atom),
    }
}

/// `f` at a point of the sphere: declared or exact local value, else evaluation.
/// `f(lambda)` for an eigenvalue: direct evaluation off the singular points,
/// so that points close to a singular point keep their exact image.
pub(crate) fn eigen_image(f: &MeromFn, lambda: Complex64, region: &BisectorRegion) -> Result<Option<Complex64>> {
    let z = ExtComplex::Finite(lambda);
    if region.singular_at(z, 0.0).is_some() {
        return Ok(value_at(f, z, Some(region))?.finite());
    }
    let v = f.eval(lambda);
    Ok(v.is_finite().then_some(v))
}

pub(crate) fn value_at(f: &MeromFn, p: ExtComplex, region: Option<&BisectorRegion>) -> Result<ExtComplex> {
    if let Some(l) = f.local_at(p) {
        return Ok(l.limit);
    }
    match p {
        ExtComplex::Infinity => Err(Error::UndeclaredLimit(SingularPoint::Infinity)),
        ExtComplex::Finite(z) => {
            let v = f.eval(z);
            if v.re.is_finite() && v.im.is_finite() {
                Ok(ExtComplex::Finite(v))
            } else {
                match singular_location(region, z) {
                    Some(d) => Err(Error::UndeclaredLimit(d)),
                    None => Err(Error::InvalidArgument(format!("f has no value at {}", format_complex(z)))),
                }
            }
        }
    }
}

impl DiagonalModel {
    pub fn new(atoms: Vec<Atom>, tails: Vec<Tail>, region: Option<BisectorRegion>) -> Self {
        let mut merged = Vec::new();
        for a in atoms {
            merge_atom(&mut merged, a);
        }
        Self {
            atoms: merged,
            tails,
            region,
            horizon: DEFAULT_HORIZON,
        }
    }

    pub fn with_horizon(mut self, k: usize) -> Self {
        self.horizon = k.max(1);
        self
    }

    /// Enumerated elements of a tail that are distinguishable from its limit.
    pub fn tail_elements(&self, t: &Tail) -> Vec<Complex64> {
        (1..=self.horizon)
            .map(|k| t.element(k))
            .filter(|v| v.re.is_finite() && v.im.is_finite())
            .filter(|v| match t.limit {
                ExtComplex::Finite(l) => !close(*v, l, MERGE_TOL),
                ExtComplex::Infinity => true,
            })
            .collect()
    }

    /// Every enumerated eigenvalue, including tail elements too close to
    /// their limit to be listed separately.
    pub fn raw_eigenvalues(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.atoms.iter().map(|a| a.value).collect();
        for t in &self.tails {
            out.extend(
                (1..=self.horizon)
                    .map(|k| t.element(k))
                    .filter(|v| v.re.is_finite() && v.im.is_finite()),
            );
        }
        out
    }

    pub fn all_enumerated_values(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.atoms.iter().map(|a| a.value).collect();
        for t in &self.tails {
            out.extend(self.tail_elements(t));
            if let ExtComplex::Finite(l) = t.limit {
                out.push(l);
            }
        }
        out
    }

    pub fn point_spectrum(&self) -> SpectralSet {
        let mut s = SpectralSet::new();
        for a in &self.atoms {
            s.insert(SpectralPoint::atom(a.value, a.mult));
        }
        for t in &self.tails {
            for v in self.tail_elements(t) {
                s.insert(SpectralPoint::atom(v, Count::Finite(1)));
            }
        }
        s
    }

    pub fn spectrum(&self) -> SpectralSet {
        let mut s = self.point_spectrum();
        for t in &self.tails {
            if let ExtComplex::Finite(l) = t.limit {
                s.insert(SpectralPoint::accumulation(l));
            }
        }
        s.with_infinity(self.is_unbounded())
    }

    /// Largest modulus over atoms, finite limits and convergent tails.
    pub fn bounded_radius(&self) -> f64 {
        let mut r = self.atoms.iter().map(|a| a.value.norm()).fold(0.0, f64::max);
        for t in &self.tails {
            if let ExtComplex::Finite(l) = t.limit {
                r = r.max(l.norm());
                r = self.tail_elements(t).iter().map(|v| v.norm()).fold(r, f64::max);
            }
        }
        r
    }

    pub fn is_unbounded(&self) -> bool {
        self.tails.iter().any(|t| t.limit.is_infinite())
    }

    /// Total multiplicity of `mu` as an eigenvalue.
    pub fn nullity(&self, mu: Complex64) -> Count {
        let mut n = Count::ZERO;
        for a in &self.atoms {
            if close(a.value, mu, MERGE_TOL) {
                n = n + a.mult;
            }
        }
        for t in &self.tails {
            let hits = self.tail_elements(t).iter().filter(|v| close(**v, mu, MERGE_TOL)).count();
            n = n + Count::Finite(hits as u64);
        }
        n
    }

    /// `mu` is the limit of some tail.
    pub fn is_accumulation(&self, mu: Complex64) -> bool {
        self.tails
            .iter()
            .any(|t| matches!(t.limit, ExtComplex::Finite(l) if close(l, mu, MERGE_TOL)))
    }

    /// `f(A)` computed componentwise. A tail on which `f` is constant becomes
    /// an atom of infinite multiplicity.
    pub fn map(&self, f: &MeromFn) -> Result<DiagonalModel> {
        let region = self.region.as_ref();
        let mut atoms = Vec::new();
        for a in &self.atoms {
            match value_at(f, ExtComplex::Finite(a.value), region)? {
                ExtComplex::Finite(v) => merge_atom(&mut atoms, Atom { value: v, mult: a.mult }),
                ExtComplex::Infinity => {
                    return Err(Error::RegularizerNotInjective(format!(
                        "f has a pole at the eigenvalue {}",
                        format_complex(a.value)
                    )))
                }
            }
        }
        let mut tails = Vec::new();
        for t in &self.tails {
            let limit = value_at(f, t.limit, region)?;
            let mut nt = t.clone();
            nt.maps.push(f.clone());
            nt.limit = limit;
            let values: Vec<Complex64> = (1..=self.horizon).map(|k| nt.element(k)).collect();
            if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::RegularizerNotInjective("f has a pole at a tail eigenvalue".into()));
            }
            match limit {
                ExtComplex::Finite(l) if values.iter().all(|v| close(*v, l, 1e-14)) => {
                    merge_atom(&mut atoms, Atom { value: l, mult: Count::Infinite });
                }
                _ => tails.push(nt),
            }
        }
        Ok(DiagonalModel {
            atoms,
            tails,
            region: None,
            horizon: self.horizon,
        })
    }

    /// `(z - A)^{-1}`.
    pub fn resolvent(&self, z: Complex64) -> Result<DiagonalModel> {
        if !self.nullity(z).is_zero() || self.is_accumulation(z) {
            return Err(Error::SingularResolvent(z));
        }
        let r = Rational::from_factors(Complex64::new(-1.0, 0.0), [(z, -1)]);
        self.map(&MeromFn::rational(r))
    }

    /// Keeps the selected atoms and tails.
    pub fn select(&self, atom_mask: &[bool], tail_mask: &[bool]) -> DiagonalModel {
        DiagonalModel {
            atoms: self.atoms.iter().zip(atom_mask).filter(|(_, &m)| m).map(|(a, _)| *a).collect(),
            tails: self.tails.iter().zip(tail_mask).filter(|(_, &m)| m).map(|(t, _)| t.clone()).collect(),
            region: self.region.clone(),
            horizon: self.horizon,
        }
    }

    /// The multiplier that is 1 on the selected components and 0 elsewhere.
    pub fn indicator(&self, atom_mask: &[bool], tail_mask: &[bool]) -> DiagonalModel {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut atoms = Vec::new();
        for (a, &m) in self.atoms.iter().zip(atom_mask) {
            merge_atom(&mut atoms, Atom { value: if m { one } else { zero }, mult: a.mult });
        }
        for &m in tail_mask {
            merge_atom(&mut atoms, Atom { value: if m { one } else { zero }, mult: Count::Infinite });
        }
        DiagonalModel::new(atoms, Vec::new(), None).with_horizon(self.horizon)
    }

    /// Diagonal entries of an `n`-dimensional truncation: finite atoms in full,
    /// the rest of the budget shared between infinite atoms and tails.
    pub fn truncation(&self, n: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(n);
        for a in &self.atoms {
            if let Count::Finite(m) = a.mult {
                out.extend(std::iter::repeat_n(a.value, m as usize));
            }
        }
        let open = self.atoms.iter().filter(|a| !a.mult.is_finite()).count() + self.tails.len();
        if open > 0 {
            let share = (n.saturating_sub(out.len()) / open).max(1);
            for a in self.atoms.iter().filter(|a| !a.mult.is_finite()) {
                out.extend(std::iter::repeat_n(a.value, share));
            }
            for t in &self.tails {
                out.extend((1..=share).map(|k| t.element(k)));
            }
        }
        out
    }

    /// Entries of `mu - A` on the `n`-dimensional truncation, each with the
    /// magnitude it was formed from, in the order of [`Self::truncation`].
    pub fn shifted_truncation(&self, mu: Complex64, n: usize) -> Vec<(Complex64, f64)> {
        let atom_gap = |v: Complex64| (mu - v, mu.norm().max(v.norm()));
        let mut out = Vec::with_capacity(n);
        for a in &self.atoms {
            if let Count::Finite(m) = a.mult {
                out.extend(std::iter::repeat_n(atom_gap(a.value), m as usize));
            }
        }
        let open = self.atoms.iter().filter(|a| !a.mult.is_finite()).count() + self.tails.len();
        if open > 0 {
            let share = (n.saturating_sub(out.len()) / open).max(1);
            for a in self.atoms.iter().filter(|a| !a.mult.is_finite()) {
                out.extend(std::iter::repeat_n(atom_gap(a.value), share));
            }
            for t in &self.tails {
                out.extend((1..=share).map(|k| t.gap_from(mu, k)));
            }
        }
        out
    }

    /// Closed-bisector check of every value, plus the resolvent bound of a
    /// normal operator, `min|λ ∓ a| / dist(λ, σ)`, on samples.
    pub fn certify(&self) -> Result<Certificate> {
        let region = self
            .region
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("operator has no bisector region (omega, a)".into()))?;
        let values = self.all_enumerated_values();
        for &z in &values {
            if !region.contains_closed(z, 1e-9 * z.norm().max(1.0)) {
                return Err(Error::NotBisectorial {
                    reason: "spectral value outside the closed bisector".into(),
                    sample: z,
                    constant: f64::INFINITY,
                });
            }
        }
        let a = region.halfwidth_a;
        let mut constant = 0.0f64;
        for z in super::dense::bound_samples(region, 16) {
            let dist = values.iter().map(|l| (z - l).norm()).fold(f64::INFINITY, f64::min);
            if dist == 0.0 {
                continue;
            }
            let c = (z - a).norm().min((z + a).norm()) / dist;
            if c.is_finite() {
                constant = constant.max(c);
            }
        }
        Ok(Certificate {
            certified: true,
            constant,
        })
    }

    pub(super) fn from_json(obj: &JsonObject, region: Option<BisectorRegion>) -> Result<Self> {
        let a = region.as_ref().map_or(0.0, |r| r.halfwidth_a);
        let mut atoms = Vec::new();
        for item in obj.get("atoms").and_then(|v| v.as_array()).into_iter().flatten() {
            let value = item.get("value").and_then(complex_from_json).ok_or_else(|| bad("atom value"))?;
            let mult = item.get("mult").map_or(Some(Count::Finite(1)), count_from_json).ok_or_else(|| bad("atom mult"))?;
            atoms.push(Atom { value, mult });
        }
        let mut tails = Vec::new();
        for item in obj.get("tails").and_then(|v| v.as_array()).into_iter().flatten() {
            tails.push(tail_from_json(item, a)?);
        }
        let mut m = DiagonalModel::new(atoms, tails, region);
        if let Some(k) = obj.get("horizon").and_then(|h| h.as_u64()) {
            m = m.with_horizon(k as usize);
        }
        Ok(m)
    }

    pub(super) fn to_json(&self) -> JsonObject {
        let a = self.region.as_ref().map_or(0.0, |r| r.halfwidth_a);
        let mut obj = JsonObject::new();
        obj.insert("kind".into(), json!("diagonal"));
        obj.insert(
            "atoms".into(),
            Value::Array(
                self.atoms
                    .iter()
                    .map(|at| json!({"value": complex_to_json(at.value), "mult": at.mult}))
                    .collect(),
            ),
        );
        let tails: Vec<Value> = self
            .tails
            .iter()
            .map(|t| {
                let mut o = JsonObject::new();
                o.insert("limit".into(), ext_to_json(t.limit));
                match t.generator {
                    Generator::Geometric { base, ratio } => {
                        o.insert("generator".into(), json!("geometric"));
                        o.insert("base".into(), complex_to_json(base));
                        o.insert("ratio".into(), complex_to_json(ratio));
                    }
                    Generator::Power { base, exponent } => {
                        o.insert("generator".into(), json!("power"));
                        o.insert("base".into(), complex_to_json(base));
                        o.insert("exponent".into(), json!(exponent));
                    }
                }
                if !t.maps.is_empty() {
                    o.insert("center".into(), complex_to_json(t.center));
                    o.insert("maps".into(), Value::Array(t.maps.iter().map(|f| f.to_json(a)).collect()));
                }
                Value::Object(o)
            })
            .collect();
        obj.insert("tails".into(), Value::Array(tails));
        if self.horizon != DEFAULT_HORIZON {
            obj.insert("horizon".into(), json!(self.horizon));
        }
        obj
    }
}

fn bad(what: &str) -> Error {
    Error::Schema(vec![Diagnostic::new("", format!("invalid {what}"))])
}

fn tail_from_json(item: &Value, a: f64) -> Result<Tail> {
    let maps: Vec<MeromFn> = match item.get("maps").and_then(|m| m.as_array()) {
        Some(list) => list.iter().map(|f| MeromFn::from_json(f, a)).collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let base = item.get("base").and_then(complex_from_json).ok_or_else(|| bad("tail base"))?;
    let generator = match item.get("generator").and_then(|g| g.as_str()).unwrap_or("geometric") {
        "power" => Generator::Power {
            base,
            exponent: item.get("exponent").and_then(|e| e.as_f64()).ok_or_else(|| bad("tail exponent"))?,
        },
        _ => Generator::Geometric {
            base,
            ratio: item.get("ratio").and_then(complex_from_json).ok_or_else(|| bad("tail ratio"))?,
        },
    };
    let center = item.get("center").and_then(complex_from_json);
    let declared = item.get("limit").and_then(ext_from_json).ok_or_else(|| bad("tail limit"))?;
    if maps.is_empty() {
        let mut t = Tail::new(declared, generator)?;
        if let Some(c) = center {
            t.center = c;
        }
        return Ok(t);
    }
    // a mapped tail: the raw sequence converges to `center` (or ∞)
    let raw_limit = match generator {
        Generator::Geometric { ratio, .. } if ratio.norm() > 1.0 => ExtComplex::Infinity,
        Generator::Power { exponent, .. } if exponent > 0.0 => ExtComplex::Infinity,
        _ => ExtComplex::Finite(center.unwrap_or_default()),
    };
    let mut t = Tail::new(raw_limit, generator)?;
    t.center = center.unwrap_or_default();
    t.maps = maps;
    t.limit = declared;
    Ok(t)
}

pub(super) fn validate(obj: &JsonObject, region: Option<&BisectorRegion>, diags: &mut Vec<Diagnostic>) {
    let a = region.map_or(0.0, |r| r.halfwidth_a);
    let in_region = |z: Complex64| region.is_none_or(|r| r.contains_closed(z, 1e-9 * z.norm().max(1.0)));
    match obj.get("atoms") {
        None => {}
        Some(Value::Array(list)) => {
            for (k, item) in list.iter().enumerate() {
                let path = format!("/atoms/{k}");
                match item.get("value").and_then(complex_from_json) {
                    None => diags.push(Diagnostic::new(format!("{path}/value"), "expected a complex number")),
                    Some(z) if !in_region(z) => diags.push(Diagnostic::new(
                        format!("{path}/value"),
                        format!("{} lies outside the closed bisector", format_complex(z)),
                    )),
                    Some(_) => {}
                }
                if let Some(m) = item.get("mult") {
                    match count_from_json(m) {
                        Some(c) if !c.is_zero() => {}
                        _ => diags.push(Diagnostic::new(format!("{path}/mult"), "expected a positive integer or \"inf\"")),
                    }
                }
            }
        }
        Some(_) => diags.push(Diagnostic::new("/atoms", "expected an array")),
    }
    match obj.get("tails") {
        None => {}
        Some(Value::Array(list)) => {
            for (k, item) in list.iter().enumerate() {
                let path = format!("/tails/{k}");
                if !item.is_object() {
                    diags.push(Diagnostic::new(path, "expected an object"));
                    continue;
                }
                match item.get("generator").and_then(|g| g.as_str()).unwrap_or("geometric") {
                    "geometric" | "power" => {}
                    other => {
                        diags.push(Diagnostic::new(format!("{path}/generator"), format!("unknown generator {other:?}")));
                        continue;
                    }
                }
                if item.get("limit").and_then(ext_from_json).is_none() {
                    diags.push(Diagnostic::new(format!("{path}/limit"), "expected a complex number or \"inf\""));
                    continue;
                }
                match tail_from_json(item, a) {
                    Err(Error::Schema(mut d)) => {
                        for x in &mut d {
                            x.path = format!("{path}{}", x.path);
                        }
                        diags.extend(d);
                    }
                    Err(e) => diags.push(Diagnostic::new(path, e.to_string())),
                    Ok(t) => {
                        if t.maps.is_empty() {
                            for j in 1..=DEFAULT_HORIZON {
                                let z = t.element(j);
                                if !in_region(z) {
                                    diags.push(Diagnostic::new(
                                        path.clone(),
                                        format!("element {j} = {} lies outside the closed bisector", format_complex(z)),
                                    ));
                                    break;
                                }
                            }
                        }
                    }
                }
            }
        }
        Some(_) => diags.push(Diagnostic::new("/tails", "expected an array")),
    }
}
