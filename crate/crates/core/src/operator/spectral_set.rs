use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ext::{close, serde_complex, Count, MERGE_TOL};

/// One point of a spectral set.
///
/// `multiplicity` counts the eigenvalue multiplicity contributed by atoms
/// (zero for a pure accumulation point); `accumulation` marks limits of tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    #[serde(with = "serde_complex")]
    pub value: Complex64,
    pub multiplicity: Count,
    #[serde(default)]
    pub accumulation: bool,
}

impl SpectralPoint {
    pub fn atom(value: Complex64, multiplicity: Count) -> Self {
        Self {
            value,
            multiplicity,
            accumulation: false,
        }
    }

    pub fn accumulation(value: Complex64) -> Self {
        Self {
            value,
            multiplicity: Count::ZERO,
            accumulation: true,
        }
    }

    pub fn tag(&self) -> &'static str {
        match (self.accumulation, self.multiplicity) {
            (true, _) => "accumulation",
            (false, Count::Infinite) => "atom_infinite",
            (false, _) => "atom_finite",
        }
    }
}

/// A finite symbolic subset of the Riemann sphere.
///
/// Points closer than [`MERGE_TOL`] (relative) are merged on insertion.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralSet {
    pub points: Vec<SpectralPoint>,
    #[serde(default)]
    pub includes_infinity: bool,
}

impl SpectralSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_infinity(mut self, yes: bool) -> Self {
        self.includes_infinity = yes;
        self
    }

    pub fn from_points(points: impl IntoIterator<Item = SpectralPoint>) -> Self {
        let mut s = Self::new();
        for p in points {
            s.insert(p);
        }
        s
    }

    pub fn insert(&mut self, p: SpectralPoint) {
        self.insert_with_tol(p, MERGE_TOL);
    }

    fn insert_with_tol(&mut self, p: SpectralPoint, tol: f64) {
        let hits: Vec<usize> = self
            .points
            .iter()
            .enumerate()
            .filter(|(_, q)| close(q.value, p.value, tol))
            .map(|(i, _)| i)
            .collect();
        match hits.first() {
            None => self.points.push(p),
            Some(&first) => {
                let mut merged = self.points[first];
                merged.multiplicity = merged.multiplicity + p.multiplicity;
                merged.accumulation |= p.accumulation;
                // single-linkage: absorb every other point the new one touches
                for &i in hits.iter().skip(1).rev() {
                    let q = self.points.remove(i);
                    merged.multiplicity = merged.multiplicity + q.multiplicity;
                    merged.accumulation |= q.accumulation;
                }
                self.points[first] = merged;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && !self.includes_infinity
    }

    /// Number of finite points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn find(&self, z: Complex64, tol: f64) -> Option<&SpectralPoint> {
        self.points.iter().find(|p| close(p.value, z, tol))
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.find(z, tol).is_some()
    }

    pub fn values(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.points.iter().map(|p| p.value)
    }

    /// Largest modulus of a finite point; zero for an empty set.
    pub fn radius(&self) -> f64 {
        self.values().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn union(&self, other: &SpectralSet) -> SpectralSet {
        let mut out = self.clone();
        for p in &other.points {
            out.insert(*p);
        }
        out.includes_infinity |= other.includes_infinity;
        out
    }

    /// Every point of `self` (and ∞ if present) lies in `other`, comparing values only.
    pub fn is_subset_of(&self, other: &SpectralSet, tol: f64) -> bool {
        (!self.includes_infinity || other.includes_infinity)
            && self.values().all(|z| other.contains(z, tol))
    }

    pub fn same_points(&self, other: &SpectralSet, tol: f64) -> bool {
        self.is_subset_of(other, tol) && other.is_subset_of(self, tol)
    }

    /// Points sorted by (re, im) for stable output.
    pub fn sorted(&self) -> SpectralSet {
        let mut points = self.points.clone();
        points.sort_by(|a, b| {
            a.value
                .re
                .total_cmp(&b.value.re)
                .then(a.value.im.total_cmp(&b.value.im))
        });
        SpectralSet {
            points,
            includes_infinity: self.includes_infinity,
        }
    }
}

impl std::fmt::Display for SpectralSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts: Vec<String> = self
            .sorted()
            .points
            .iter()
            .map(|p| {
                let v = crate::ext::format_complex(p.value);
                match p.tag() {
                    "accumulation" => format!("{v} (acc)"),
                    _ => format!("{v} (x{})", p.multiplicity),
                }
            })
            .collect();
        if self.includes_infinity {
            parts.push("inf".into());
        }
        write!(f, "{{{}}}", parts.join(", "))
    }
}
