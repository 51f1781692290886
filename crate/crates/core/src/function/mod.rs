//! Meromorphic functions with declared behaviour at singular points.
//!
//! A [`MeromFn`] is an expression tree whose leaves are exact rational
//! functions or atomic expressions carrying declared poles, zeros and local
//! behaviour. Local behaviour propagates through products, reciprocals and
//! linear combinations.

mod analysis;
pub mod rational;

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{Diagnostic, Error, Result};
use crate::expr::Expr;
use crate::ext::{close, complex_from_json, complex_to_json, ext_from_json, ext_to_json, ExtComplex};
use crate::geometry::SingularPoint;

pub(crate) use analysis::function_angle;
pub use analysis::{
    condition_p_check, decompose_e, default_regularizer, in_primary_class, rational_factor, regularity,
    regularity_probe, BackendMeta, EDecomposition, Regularity,
};
pub use rational::Rational;

/// Behaviour of `f` near a point `d`.
///
/// For a finite limit `c`, `order` is `β` with `|f - c| ≍ |z - d|^β`
/// (`|z|^{-β}` at ∞; `+∞` when `f ≡ c` nearby). For an infinite limit,
/// `order` is the growth `γ` with `|f| ≍ |z - d|^{-γ}` (`|z|^γ` at ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Local {
    pub limit: ExtComplex,
    pub order: Option<f64>,
}

const ZERO_LIMIT: f64 = 1e-13;

impl Local {
    pub fn finite(c: Complex64, order: f64) -> Self {
        Self {
            limit: ExtComplex::Finite(c),
            order: Some(order),
        }
    }

    pub fn infinite(growth: f64) -> Self {
        Self {
            limit: ExtComplex::Infinity,
            order: Some(growth),
        }
    }

    pub fn is_regular(&self) -> bool {
        matches!(self.limit, ExtComplex::Finite(_)) && self.order.is_some_and(|b| b > 0.0)
    }

    pub fn is_quasi_regular(&self) -> bool {
        self.is_regular() || (self.limit.is_infinite() && self.order.is_some_and(|g| g > 0.0))
    }

    fn zero_limit(&self) -> bool {
        matches!(self.limit, ExtComplex::Finite(c) if c.norm() <= ZERO_LIMIT)
    }

    /// Signed vanishing exponent: `β` for a zero limit, `-γ` for a pole-like
    /// limit, `0` for a finite nonzero limit.
    fn vanishing(&self) -> Option<f64> {
        match self.limit {
            ExtComplex::Infinity => self.order.map(|g| -g),
            ExtComplex::Finite(_) if self.zero_limit() => self.order,
            ExtComplex::Finite(_) => Some(0.0),
        }
    }

    fn recip(&self) -> Local {
        match self.limit {
            ExtComplex::Infinity => Local {
                limit: ExtComplex::Finite(Complex64::new(0.0, 0.0)),
                order: self.order,
            },
            ExtComplex::Finite(_) if self.zero_limit() => Local {
                limit: ExtComplex::Infinity,
                order: self.order,
            },
            ExtComplex::Finite(c) => Local {
                limit: ExtComplex::Finite(c.inv()),
                order: self.order,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atomic {
    pub expr: Expr,
    pub poles: Vec<(Complex64, u32)>,
    pub zeros: Vec<(Complex64, u32)>,
    pub locals: Vec<(ExtComplex, Local)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FnNode {
    Rational(Rational),
    Atomic(Atomic),
    Product(Vec<MeromFn>),
    Reciprocal(Box<MeromFn>),
    Linear { terms: Vec<(Complex64, MeromFn)>, constant: Complex64 },
}

/// The angle `φ` and ball radii `s_d` of the domain `Ω(φ, (s_d))`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Domain {
    pub phi: Option<f64>,
    pub s: BTreeMap<SingularPoint, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeromFn {
    pub node: FnNode,
    pub domain: Domain,
}

fn net_merge(list: &mut Vec<(Complex64, i64)>, at: Complex64, m: i64) {
    match list.iter_mut().find(|(q, _)| close(*q, at, 1e-9)) {
        Some(slot) => slot.1 += m,
        None => list.push((at, m)),
    }
}

impl MeromFn {
    pub fn from_node(node: FnNode) -> Self {
        Self {
            node,
            domain: Domain::default(),
        }
    }

    pub fn rational(r: Rational) -> Self {
        Self::from_node(FnNode::Rational(r))
    }

    pub fn constant(c: Complex64) -> Self {
        Self::rational(Rational::constant(c))
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// The identity function `ζ(z) = z`.
    pub fn zeta() -> Self {
        Self::rational(Rational::from_factors(Complex64::new(1.0, 0.0), [(Complex64::new(0.0, 0.0), 1)]))
    }

    /// `1/(b - z)`.
    pub fn resolvent_fn(b: Complex64) -> Self {
        Self::rational(Rational::from_factors(Complex64::new(-1.0, 0.0), [(b, -1)]))
    }

    /// `1/(b + z)`.
    pub fn plus_resolvent_fn(b: Complex64) -> Self {
        Self::rational(Rational::from_factors(Complex64::new(1.0, 0.0), [(-b, -1)]))
    }

    pub fn atomic(expr: Expr, poles: Vec<(Complex64, u32)>, zeros: Vec<(Complex64, u32)>, locals: Vec<(ExtComplex, Local)>) -> Self {
        Self::from_node(FnNode::Atomic(Atomic {
            expr,
            poles,
            zeros,
            locals,
        }))
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match &self.node {
            FnNode::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.as_rational().is_some()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.node {
            FnNode::Rational(r) => r.eval(z),
            FnNode::Atomic(a) => a.expr.eval(z),
            FnNode::Product(fs) => fs.iter().fold(Complex64::new(1.0, 0.0), |acc, f| acc * f.eval(z)),
            FnNode::Reciprocal(f) => f.eval(z).inv(),
            FnNode::Linear { terms, constant } => {
                terms.iter().fold(*constant, |acc, (w, f)| acc + w * f.eval(z))
            }
        }
    }

    /// Value at a point of the sphere, using the local limit at ∞.
    pub fn eval_ext(&self, z: ExtComplex) -> Option<ExtComplex> {
        match z {
            ExtComplex::Infinity => self.local_at(z).map(|l| l.limit),
            ExtComplex::Finite(w) => Some(ExtComplex::from(self.eval(w))),
        }
    }

    pub fn mul(&self, other: &MeromFn) -> MeromFn {
        let domain = self.domain.clone();
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return MeromFn::rational(a.mul(b)).with_domain(domain);
        }
        let mut parts = Vec::new();
        for f in [self, other] {
            match &f.node {
                FnNode::Product(inner) => parts.extend(inner.iter().cloned()),
                FnNode::Rational(r) if r.factors.is_empty() && r.scale == Complex64::new(1.0, 0.0) => {}
                _ => parts.push(f.clone()),
            }
        }
        // fold all rational factors into one
        let mut rat: Option<Rational> = None;
        let mut rest = Vec::new();
        for p in parts {
            match p.node {
                FnNode::Rational(r) => rat = Some(rat.map_or(r.clone(), |q| q.mul(&r))),
                _ => rest.push(p),
            }
        }
        if let Some(r) = rat {
            rest.insert(0, MeromFn::rational(r));
        }
        match rest.len() {
            0 => MeromFn::one().with_domain(domain),
            1 => rest.pop().expect("one part").with_domain(domain),
            _ => MeromFn::from_node(FnNode::Product(rest)).with_domain(domain),
        }
    }

    pub fn recip(&self) -> MeromFn {
        let domain = self.domain.clone();
        match &self.node {
            FnNode::Rational(r) => match r.recip() {
                Some(q) => MeromFn::rational(q).with_domain(domain),
                None => MeromFn::from_node(FnNode::Reciprocal(Box::new(self.clone()))).with_domain(domain),
            },
            FnNode::Reciprocal(f) => (**f).clone().with_domain(domain),
            _ => MeromFn::from_node(FnNode::Reciprocal(Box::new(self.clone()))).with_domain(domain),
        }
    }

    /// `alpha * self + beta * other + constant`.
    pub fn linear(terms: Vec<(Complex64, MeromFn)>, constant: Complex64) -> MeromFn {
        let domain = terms.first().map(|t| t.1.domain.clone()).unwrap_or_default();
        if terms.iter().all(|t| t.1.is_rational()) {
            let mut acc = Rational::constant(constant);
            for (w, f) in &terms {
                acc = acc.combine(Complex64::new(1.0, 0.0), f.as_rational().expect("rational"), *w);
            }
            return MeromFn::rational(acc).with_domain(domain);
        }
        MeromFn::from_node(FnNode::Linear { terms, constant }).with_domain(domain)
    }

    /// `mu - self`.
    pub fn mu_minus(&self, mu: Complex64) -> MeromFn {
        MeromFn::linear(vec![(Complex64::new(-1.0, 0.0), self.clone())], mu)
    }

    /// Behaviour at `p`, if it is known exactly or was declared.
    pub fn local_at(&self, p: ExtComplex) -> Option<Local> {
        match &self.node {
            FnNode::Rational(r) => Some(r.local(p)),
            FnNode::Atomic(a) => {
                if let Some((_, l)) = a.locals.iter().find(|(q, _)| q.close_to(&p, 1e-12)) {
                    return Some(*l);
                }
                if let ExtComplex::Finite(w) = p {
                    // away from declared poles and zeros the expression is analytic
                    let special = a.poles.iter().chain(&a.zeros).any(|(q, _)| close(*q, w, 1e-9));
                    if !special {
                        let v = a.expr.eval(w);
                        if v.re.is_finite() && v.im.is_finite() && v.norm() > ZERO_LIMIT {
                            return Some(Local::finite(v, 1.0));
                        }
                    }
                }
                None
            }
            FnNode::Reciprocal(f) => f.local_at(p).map(|l| l.recip()),
            FnNode::Product(fs) => {
                let locals: Option<Vec<Local>> = fs.iter().map(|f| f.local_at(p)).collect();
                let locals = locals?;
                let all_nonzero = locals
                    .iter()
                    .all(|l| matches!(l.limit, ExtComplex::Finite(_)) && !l.zero_limit());
                if all_nonzero {
                    let c = locals.iter().fold(Complex64::new(1.0, 0.0), |acc, l| {
                        acc * l.limit.finite().expect("finite")
                    });
                    let order = locals
                        .iter()
                        .map(|l| l.order)
                        .try_fold(f64::INFINITY, |acc, o| o.map(|b| acc.min(b)));
                    return Some(Local {
                        limit: ExtComplex::Finite(c),
                        order,
                    });
                }
                let v: f64 = locals.iter().map(|l| l.vanishing()).sum::<Option<f64>>()?;
                if v > 0.0 {
                    Some(Local::finite(Complex64::new(0.0, 0.0), v))
                } else if v < 0.0 {
                    Some(Local::infinite(-v))
                } else {
                    None
                }
            }
            FnNode::Linear { terms, constant } => {
                let locals: Option<Vec<(Complex64, Local)>> =
                    terms.iter().map(|(w, f)| f.local_at(p).map(|l| (*w, l))).collect();
                let locals = locals?;
                let infinite: Vec<&(Complex64, Local)> = locals
                    .iter()
                    .filter(|(w, l)| w.norm() > 0.0 && l.limit.is_infinite())
                    .collect();
                if !infinite.is_empty() {
                    let growths: Option<Vec<f64>> = infinite.iter().map(|(_, l)| l.order).collect();
                    let growths = growths?;
                    let max = growths.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    if growths.iter().filter(|&&g| g == max).count() > 1 {
                        return None;
                    }
                    return Some(Local::infinite(max));
                }
                let mut c = *constant;
                let mut order = f64::INFINITY;
                for (w, l) in &locals {
                    if w.norm() == 0.0 {
                        continue;
                    }
                    c += w * l.limit.finite().expect("finite");
                    order = order.min(l.order?);
                }
                Some(Local::finite(c, order))
            }
        }
    }

    /// Poles net of known zeros in products.
    pub fn poles(&self) -> Vec<(Complex64, u32)> {
        self.divisor()
            .into_iter()
            .filter(|(_, m)| *m < 0)
            .map(|(r, m)| (r, (-m) as u32))
            .collect()
    }

    /// Known zeros (net of poles in products).
    pub fn zeros(&self) -> Vec<(Complex64, u32)> {
        self.divisor()
            .into_iter()
            .filter(|(_, m)| *m > 0)
            .map(|(r, m)| (r, m as u32))
            .collect()
    }

    fn divisor(&self) -> Vec<(Complex64, i64)> {
        let mut out = Vec::new();
        match &self.node {
            FnNode::Rational(r) => {
                for &(q, m) in &r.factors {
                    net_merge(&mut out, q, m as i64);
                }
            }
            FnNode::Atomic(a) => {
                for &(q, m) in &a.poles {
                    net_merge(&mut out, q, -(m as i64));
                }
                for &(q, m) in &a.zeros {
                    net_merge(&mut out, q, m as i64);
                }
            }
            FnNode::Product(fs) => {
                for f in fs {
                    for (q, m) in f.divisor() {
                        net_merge(&mut out, q, m);
                    }
                }
            }
            FnNode::Reciprocal(f) => {
                for (q, m) in f.divisor() {
                    net_merge(&mut out, q, -m);
                }
            }
            FnNode::Linear { terms, .. } => {
                for (w, f) in terms {
                    if w.norm() == 0.0 {
                        continue;
                    }
                    for (q, m) in f.poles() {
                        match out.iter_mut().find(|(p, _)| close(*p, q, 1e-9)) {
                            Some(slot) => slot.1 = slot.1.min(-(m as i64)),
                            None => out.push((q, -(m as i64))),
                        }
                    }
                }
            }
        }
        out.retain(|(_, m)| *m != 0);
        out
    }

    /// Expression text for this function.
    pub fn to_expr_string(&self) -> String {
        match &self.node {
            FnNode::Rational(r) => r.to_expr_string(),
            FnNode::Atomic(a) => a.expr.to_string(),
            FnNode::Product(fs) => fs
                .iter()
                .map(|f| format!("({})", f.to_expr_string()))
                .collect::<Vec<_>>()
                .join("*"),
            FnNode::Reciprocal(f) => format!("1/({})", f.to_expr_string()),
            FnNode::Linear { terms, constant } => {
                let mut parts = vec![Expr::Num(*constant).to_string()];
                for (w, f) in terms {
                    parts.push(format!("{}*({})", Expr::Num(*w), f.to_expr_string()));
                }
                parts.join("+")
            }
        }
    }

    /// JSON function spec; singular-point keys are resolved against `a`.
    pub fn to_json(&self, a: f64) -> Value {
        let mut obj = Map::new();
        if let Some(r) = self.as_rational() {
            obj.insert("kind".into(), json!("rational"));
            obj.insert("scale".into(), complex_to_json(r.scale));
            obj.insert(
                "factors".into(),
                Value::Array(r.factors.iter().map(|&(q, m)| json!([complex_to_json(q), m])).collect()),
            );
        } else {
            obj.insert("kind".into(), json!("expr"));
            obj.insert("expr".into(), json!(self.to_expr_string()));
            let list = |v: Vec<(Complex64, u32)>| -> Value {
                Value::Array(v.into_iter().map(|(q, m)| json!({"at": complex_to_json(q), "order": m})).collect())
            };
            obj.insert("poles".into(), list(self.poles()));
            obj.insert("zeros".into(), list(self.zeros()));
            let mut limits = Map::new();
            let mut orders = Map::new();
            for d in SingularPoint::all(a) {
                if let Some(l) = self.local_at(d.location(a)) {
                    let key = point_key(d, a);
                    limits.insert(key.clone(), ext_to_json(l.limit));
                    if let Some(o) = l.order {
                        orders.insert(key, if o.is_finite() { json!(o) } else { json!("inf") });
                    }
                }
            }
            obj.insert("limits".into(), Value::Object(limits));
            obj.insert("decay_orders".into(), Value::Object(orders));
        }
        if self.domain.phi.is_some() || !self.domain.s.is_empty() {
            let mut dom = Map::new();
            if let Some(phi) = self.domain.phi {
                dom.insert("phi".into(), json!(phi));
            }
            let s: Map<String, Value> = self.domain.s.iter().map(|(d, v)| (point_key(*d, a), json!(v))).collect();
            if !s.is_empty() {
                dom.insert("s".into(), Value::Object(s));
            }
            obj.insert("domain".into(), Value::Object(dom));
        }
        Value::Object(obj)
    }

    /// Loads a JSON function spec, resolving `"a"`, `"-a"`, `"0"`, `"inf"` keys against `a`.
    pub fn from_json(v: &Value, a: f64) -> Result<MeromFn> {
        let diags = validate_function(v, a);
        if !diags.is_empty() {
            return Err(Error::Schema(diags));
        }
        build_function(v, a).map_err(|msg| Error::Schema(vec![Diagnostic::new("", msg)]))
    }
}

/// JSON key for a singular point.
pub fn point_key(d: SingularPoint, a: f64) -> String {
    match d {
        SingularPoint::PosA if a == 0.0 => "0".into(),
        _ => d.key().into(),
    }
}

/// Resolves a limit key to a point of the sphere.
pub fn resolve_point_key(key: &str, a: f64) -> Option<ExtComplex> {
    if let Some(d) = SingularPoint::parse(key) {
        return Some(d.location(a));
    }
    crate::ext::parse_complex(key).map(ExtComplex::Finite)
}

fn parse_multiplicity_list(v: &Value, path: &str, diags: &mut Vec<Diagnostic>) -> Vec<(Complex64, u32)> {
    let mut out = Vec::new();
    let Some(arr) = v.as_array() else {
        diags.push(Diagnostic::new(path, "expected an array"));
        return out;
    };
    for (k, item) in arr.iter().enumerate() {
        let p = format!("{path}/{k}");
        let (at, order) = match item {
            Value::Object(o) => (o.get("at").or_else(|| o.get("location")), o.get("order")),
            Value::Array(pair) if pair.len() == 2 && !pair[0].is_number() => (Some(&pair[0]), Some(&pair[1])),
            other => (Some(other), None),
        };
        let at = at.and_then(complex_from_json);
        let order = match order {
            None => Some(1),
            Some(o) => o.as_u64().filter(|&n| n >= 1).map(|n| n as u32),
        };
        match (at, order) {
            (Some(z), Some(n)) => out.push((z, n)),
            (None, _) => diags.push(Diagnostic::new(p, "expected a complex location")),
            (_, None) => diags.push(Diagnostic::new(format!("{p}/order"), "order must be a positive integer")),
        }
    }
    out
}

fn parse_locals(obj: &Map<String, Value>, a: f64, diags: &mut Vec<Diagnostic>) -> Vec<(ExtComplex, Local)> {
    let mut out: Vec<(ExtComplex, Local)> = Vec::new();
    if let Some(limits) = obj.get("limits") {
        match limits.as_object() {
            None => diags.push(Diagnostic::new("/limits", "expected an object")),
            Some(m) => {
                for (key, val) in m {
                    let path = format!("/limits/{key}");
                    let Some(p) = resolve_point_key(key, a) else {
                        diags.push(Diagnostic::new(path, "unknown point"));
                        continue;
                    };
                    let Some(limit) = ext_from_json(val) else {
                        diags.push(Diagnostic::new(path, "expected a complex number or \"inf\""));
                        continue;
                    };
                    out.push((p, Local { limit, order: None }));
                }
            }
        }
    }
    if let Some(orders) = obj.get("decay_orders") {
        match orders.as_object() {
            None => diags.push(Diagnostic::new("/decay_orders", "expected an object")),
            Some(m) => {
                for (key, val) in m {
                    let path = format!("/decay_orders/{key}");
                    let Some(p) = resolve_point_key(key, a) else {
                        diags.push(Diagnostic::new(path, "unknown point"));
                        continue;
                    };
                    let beta = match val {
                        Value::String(s) if crate::ext::is_infinity_token(s) => Some(f64::INFINITY),
                        other => other.as_f64(),
                    };
                    let Some(beta) = beta.filter(|b| *b > 0.0) else {
                        diags.push(Diagnostic::new(path, "decay order must be a positive number"));
                        continue;
                    };
                    match out.iter_mut().find(|(q, _)| q.close_to(&p, 1e-12)) {
                        Some(slot) => slot.1.order = Some(beta),
                        None => diags.push(Diagnostic::new(path, "decay order given without a limit")),
                    }
                }
            }
        }
    }
    out
}

fn parse_domain(obj: &Map<String, Value>, a: f64, diags: &mut Vec<Diagnostic>) -> Domain {
    let mut dom = Domain::default();
    let Some(d) = obj.get("domain") else {
        return dom;
    };
    let Some(d) = d.as_object() else {
        diags.push(Diagnostic::new("/domain", "expected an object"));
        return dom;
    };
    if let Some(phi) = d.get("phi") {
        match phi.as_f64() {
            Some(x) if x > 0.0 && x < std::f64::consts::FRAC_PI_2 + 1e-15 => dom.phi = Some(x),
            _ => diags.push(Diagnostic::new("/domain/phi", "phi must lie in (0, pi/2)")),
        }
    }
    if let Some(s) = d.get("s").and_then(|s| s.as_object()) {
        for (key, val) in s {
            let path = format!("/domain/s/{key}");
            match (SingularPoint::parse(key), val.as_f64()) {
                (Some(p), Some(x)) if x > 0.0 => {
                    let p = if a == 0.0 && p == SingularPoint::NegA { SingularPoint::PosA } else { p };
                    dom.s.insert(p, x);
                }
                (None, _) => diags.push(Diagnostic::new(path, "unknown singular point")),
                _ => diags.push(Diagnostic::new(path, "radius must be positive")),
            }
        }
    }
    dom
}

fn coeff_list(v: &Value) -> Option<Vec<Complex64>> {
    v.as_array()?.iter().map(complex_from_json).collect()
}

/// Structural validation of a function spec.
pub fn validate_function(v: &Value, a: f64) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let Some(obj) = v.as_object() else {
        return vec![Diagnostic::new("", "function spec must be an object")];
    };
    let kind = obj.get("kind").and_then(|k| k.as_str()).unwrap_or("expr");
    match kind {
        "rational" => {
            let has_polys = obj.contains_key("numerator");
            let has_factors = obj.contains_key("factors");
            let has_expr = obj.contains_key("expr");
            if !(has_polys || has_factors || has_expr) {
                diags.push(Diagnostic::new("/numerator", "rational spec needs numerator/denominator, factors or expr"));
            }
            if has_polys {
                if obj.get("numerator").and_then(coeff_list).is_none() {
                    diags.push(Diagnostic::new("/numerator", "expected a list of complex coefficients"));
                }
                if let Some(d) = obj.get("denominator") {
                    match coeff_list(d) {
                        Some(c) if c.iter().any(|x| x.norm() > 0.0) => {}
                        _ => diags.push(Diagnostic::new("/denominator", "expected a nonzero list of complex coefficients")),
                    }
                }
            }
            if has_factors {
                match obj.get("factors").and_then(|f| f.as_array()) {
                    None => diags.push(Diagnostic::new("/factors", "expected an array of [root, multiplicity]")),
                    Some(arr) => {
                        for (k, item) in arr.iter().enumerate() {
                            let ok = item.as_array().is_some_and(|p| {
                                p.len() == 2 && complex_from_json(&p[0]).is_some() && p[1].as_i64().is_some()
                            });
                            if !ok {
                                diags.push(Diagnostic::new(format!("/factors/{k}"), "expected [root, multiplicity]"));
                            }
                        }
                    }
                }
                if let Some(s) = obj.get("scale") {
                    if complex_from_json(s).is_none() {
                        diags.push(Diagnostic::new("/scale", "expected a complex number"));
                    }
                }
            }
            if has_expr {
                check_expr(obj, &mut diags);
            }
        }
        "expr" => check_expr(obj, &mut diags),
        "constant" => {
            if obj.get("value").and_then(complex_from_json).is_none() {
                diags.push(Diagnostic::new("/value", "expected a complex number"));
            }
        }
        "sqrt_branch" | "log_branch" => {
            for key in ["center", "scale", "power"] {
                if let Some(x) = obj.get(key) {
                    if complex_from_json(x).is_none() {
                        diags.push(Diagnostic::new(format!("/{key}"), "expected a complex number"));
                    }
                }
            }
        }
        other => diags.push(Diagnostic::new(
            "/kind",
            format!("unknown function kind {other:?} (expected rational, expr, constant, sqrt_branch or log_branch)"),
        )),
    }
    if let Some(p) = obj.get("poles") {
        parse_multiplicity_list(p, "/poles", &mut diags);
    }
    if let Some(p) = obj.get("zeros") {
        parse_multiplicity_list(p, "/zeros", &mut diags);
    }
    parse_locals(obj, a, &mut diags);
    parse_domain(obj, a, &mut diags);
    diags
}

fn check_expr(obj: &Map<String, Value>, diags: &mut Vec<Diagnostic>) {
    match obj.get("expr").and_then(|e| e.as_str()) {
        None => diags.push(Diagnostic::new("/expr", "missing expression string")),
        Some(text) => {
            if let Err(e) = Expr::parse(text) {
                diags.push(Diagnostic::new("/expr", e.to_string()));
            }
        }
    }
}

fn build_function(v: &Value, a: f64) -> std::result::Result<MeromFn, String> {
    let obj = v.as_object().ok_or("function spec must be an object")?;
    let mut diags = Vec::new();
    let domain = parse_domain(obj, a, &mut diags);
    let locals = parse_locals(obj, a, &mut diags);
    let poles = obj.get("poles").map(|p| parse_multiplicity_list(p, "/poles", &mut diags)).unwrap_or_default();
    let zeros = obj.get("zeros").map(|p| parse_multiplicity_list(p, "/zeros", &mut diags)).unwrap_or_default();
    let kind = obj.get("kind").and_then(|k| k.as_str()).unwrap_or("expr");
    let one = Complex64::new(1.0, 0.0);
    let f = match kind {
        "rational" if obj.contains_key("factors") => {
            let scale = obj.get("scale").and_then(complex_from_json).unwrap_or(one);
            let factors: Vec<(Complex64, i32)> = obj["factors"]
                .as_array()
                .into_iter()
                .flatten()
                .filter_map(|p| Some((complex_from_json(&p[0])?, p[1].as_i64()? as i32)))
                .collect();
            MeromFn::rational(Rational::from_factors(scale, factors))
        }
        "rational" if obj.contains_key("numerator") => {
            let num = coeff_list(&obj["numerator"]).ok_or("bad numerator")?;
            let den = obj.get("denominator").and_then(coeff_list).unwrap_or_else(|| vec![one]);
            MeromFn::rational(Rational::from_polys(&num, &den).ok_or("zero denominator")?)
        }
        "constant" => MeromFn::constant(obj.get("value").and_then(complex_from_json).ok_or("bad value")?),
        "sqrt_branch" | "log_branch" => {
            let center = obj.get("center").and_then(complex_from_json).unwrap_or_default();
            let scale = obj.get("scale").and_then(complex_from_json).unwrap_or(one);
            let shifted = Expr::Sub(Box::new(Expr::Z), Box::new(Expr::Num(center)));
            let (inner, defaults) = if kind == "sqrt_branch" {
                let p = obj.get("power").and_then(complex_from_json).unwrap_or(Complex64::new(0.5, 0.0));
                if !(p.im == 0.0 && p.re > 0.0) {
                    return Err("sqrt_branch power must be a positive real".into());
                }
                (
                    Expr::Pow(Box::new(shifted), Box::new(Expr::Num(p))),
                    vec![
                        (ExtComplex::Finite(center), Local::finite(Complex64::new(0.0, 0.0), p.re)),
                        (ExtComplex::Infinity, Local::infinite(p.re)),
                    ],
                )
            } else {
                (
                    Expr::Call(crate::expr::Func::Log, Box::new(shifted)),
                    vec![
                        (ExtComplex::Finite(center), Local { limit: ExtComplex::Infinity, order: None }),
                        (ExtComplex::Infinity, Local { limit: ExtComplex::Infinity, order: None }),
                    ],
                )
            };
            let expr = Expr::Mul(Box::new(Expr::Num(scale)), Box::new(inner));
            let mut all = locals.clone();
            for (p, l) in defaults {
                if !all.iter().any(|(q, _)| q.close_to(&p, 1e-12)) {
                    all.push((p, l));
                }
            }
            MeromFn::atomic(expr, poles.clone(), zeros.clone(), all)
        }
        _ => {
            let text = obj.get("expr").and_then(|e| e.as_str()).ok_or("missing expr")?;
            let expr = Expr::parse(text).map_err(|e| e.to_string())?;
            match rational_from_expr(&expr) {
                Some(r) => MeromFn::rational(r),
                None => MeromFn::atomic(expr, poles.clone(), zeros.clone(), locals.clone()),
            }
        }
    };
    Ok(f.with_domain(domain))
}

fn rational_from_expr(e: &Expr) -> Option<Rational> {
    fn go(e: &Expr) -> Option<(Vec<Complex64>, Vec<Complex64>)> {
        use rational::{poly_add, poly_mul, poly_scale};
        let one = vec![Complex64::new(1.0, 0.0)];
        Some(match e {
            Expr::Num(c) => (vec![*c], one),
            Expr::Z => (vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], one),
            Expr::Neg(a) => {
                let (n, d) = go(a)?;
                (poly_scale(&n, Complex64::new(-1.0, 0.0)), d)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (n1, d1) = go(a)?;
                let (n2, d2) = go(b)?;
                let sign = if matches!(e, Expr::Sub(..)) { -1.0 } else { 1.0 };
                let n = poly_add(&poly_mul(&n1, &d2), &poly_scale(&poly_mul(&n2, &d1), Complex64::new(sign, 0.0)));
                (n, poly_mul(&d1, &d2))
            }
            Expr::Mul(a, b) => {
                let (n1, d1) = go(a)?;
                let (n2, d2) = go(b)?;
                (poly_mul(&n1, &n2), poly_mul(&d1, &d2))
            }
            Expr::Div(a, b) => {
                let (n1, d1) = go(a)?;
                let (n2, d2) = go(b)?;
                (poly_mul(&n1, &d2), poly_mul(&d1, &n2))
            }
            Expr::Pow(a, b) => {
                let p = b.constant()?;
                if p.im != 0.0 || p.re.fract() != 0.0 || p.re.abs() > 32.0 {
                    return None;
                }
                let (n, d) = go(a)?;
                let k = p.re as i32;
                let (base_n, base_d) = if k >= 0 { (n, d) } else { (d, n) };
                let mut rn = one.clone();
                let mut rd = one;
                for _ in 0..k.unsigned_abs() {
                    rn = poly_mul(&rn, &base_n);
                    rd = poly_mul(&rd, &base_d);
                }
                (rn, rd)
            }
            Expr::Call(..) => {
                let c = e.constant()?;
                (vec![c], one)
            }
        })
    }
    let (n, d) = go(e)?;
    if n.len() > 64 || d.len() > 64 {
        return None;
    }
    Rational::from_polys(&n, &d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expr_specs_become_exact_rationals() {
        let f = MeromFn::from_json(&json!({"kind": "expr", "expr": "(1+z)/(3-z)"}), 1.0).unwrap();
        assert!(f.is_rational());
        let l = f.local_at(ExtComplex::Infinity).unwrap();
        assert!(l.limit.close_to(&ExtComplex::Finite(c(-1.0, 0.0)), 1e-14));
        assert_eq!(f.poles().len(), 1);
    }

    #[test]
    fn declared_locals_propagate_through_products() {
        let f = MeromFn::from_json(
            &json!({"kind": "sqrt_branch"}),
            0.0,
        )
        .unwrap();
        let e = MeromFn::resolvent_fn(c(2.0, 0.0));
        let g = f.mul(&e);
        let at0 = g.local_at(ExtComplex::Finite(c(0.0, 0.0))).unwrap();
        assert_eq!(at0.limit, ExtComplex::Finite(c(0.0, 0.0)));
        assert_eq!(at0.order, Some(0.5));
        let atinf = g.local_at(ExtComplex::Infinity).unwrap();
        assert_eq!(atinf, Local::finite(c(0.0, 0.0), 0.5));
        let r = g.recip();
        assert_eq!(r.local_at(ExtComplex::Infinity).unwrap(), Local::infinite(0.5));
    }

    #[test]
    fn poles_cancel_against_zeros() {
        let f = MeromFn::from_json(
            &json!({"kind": "expr", "expr": "exp(z)/(z-i)", "poles": [{"at": [0.0, 1.0], "order": 1}]}),
            0.0,
        )
        .unwrap();
        assert_eq!(f.poles().len(), 1);
        let r = MeromFn::rational(Rational::from_factors(c(1.0, 0.0), [(c(0.0, 1.0), 1), (c(3.0, 0.0), -1)]));
        let g = f.mul(&r);
        let poles = g.poles();
        assert_eq!(poles.len(), 1);
        assert!((poles[0].0 - c(3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn json_round_trip_preserves_values() {
        let f = MeromFn::from_json(
            &json!({"kind": "expr", "expr": "1/log(-z^2)", "limits": {"0": 0, "inf": 0}}),
            0.0,
        )
        .unwrap();
        let back = MeromFn::from_json(&f.to_json(0.0), 0.0).unwrap();
        for z in [c(0.0, 0.3), c(0.1, 2.0)] {
            assert!((f.eval(z) - back.eval(z)).norm() < 1e-14);
        }
        let r = MeromFn::resolvent_fn(c(3.0, 0.0)).mul(&MeromFn::zeta());
        let back = MeromFn::from_json(&r.to_json(0.0), 0.0).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn schema_errors_are_located() {
        let err = MeromFn::from_json(&json!({"kind": "expr", "expr": "z +"}), 0.0).unwrap_err();
        match err {
            Error::Schema(d) => assert_eq!(d[0].path, "/expr"),
            other => panic!("{other}"),
        }
        let err = MeromFn::from_json(&json!({"kind": "expr", "expr": "z", "decay_orders": {"inf": 1}}), 0.0)
            .unwrap_err();
        assert!(err.to_string().contains("/decay_orders/inf"));
    }
}
