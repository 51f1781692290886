//! Gauss–Legendre panels and a level-synchronous adaptive integrator.
//!
//! Panels are refined by bisection: a panel is accepted when its single-panel
//! estimate agrees with the sum over its two halves within the panel's share
//! of the tolerance. All panels of one refinement level are evaluated in
//! parallel; accepted contributions are summed in (segment, t) order with a
//! pairwise reduction so results do not depend on thread scheduling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to [t0, t1].
    pub fn on_interval(&self, t0: f64, t1: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (t1 - t0);
        let mid = 0.5 * (t1 + t0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Values that can be integrated: scalars and matrices.
pub trait Integrand: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn axpy(&mut self, w: Complex64, x: &Self);
    fn norm(&self) -> f64;
    fn dist(&self, other: &Self) -> f64;
}

impl Integrand for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn axpy(&mut self, w: Complex64, x: &Self) {
        *self += w * x;
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl Integrand for DMatrix<Complex64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn axpy(&mut self, w: Complex64, x: &Self) {
        *self += x * w;
    }
    fn norm(&self) -> f64 {
        DMatrix::norm(self)
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

/// One parameter interval `[t0, t1]` of a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub segment: usize,
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct QuadratureReport {
    pub panels: usize,
    pub nodes: usize,
    pub tail_estimate: f64,
    pub refinement_steps: usize,
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Relative tolerance; the absolute target is `tol * max(1, |coarse estimate|)`.
    pub tol: f64,
    pub max_depth: usize,
}

struct Job {
    panel: Panel,
    depth: usize,
    tol: f64,
}

fn panel_estimate<T, F>(rule: &GaussLegendre, panel: &Panel, f: &F) -> T
where
    T: Integrand,
    F: Fn(usize, f64) -> T,
{
    let mut iter = rule.on_interval(panel.t0, panel.t1);
    let (t, w) = iter.next().expect("non-empty rule");
    let first = f(panel.segment, t);
    let mut acc = first.zero_like();
    acc.axpy(Complex64::new(w, 0.0), &first);
    for (t, w) in iter {
        acc.axpy(Complex64::new(w, 0.0), &f(panel.segment, t));
    }
    acc
}

/// Pairwise sum in the given order.
fn pairwise_sum<T: Integrand>(items: &[T]) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (l, r) = items.split_at(n / 2);
            let mut left = pairwise_sum(l)?;
            let right = pairwise_sum(r)?;
            left.axpy(Complex64::new(1.0, 0.0), &right);
            Some(left)
        }
    }
}

/// Integrates `f(segment, t)` over the union of the initial panels.
///
/// `f` must already include the Jacobian of the segment parametrization.
pub fn adaptive_integrate<T, F>(
    initial: &[Panel],
    rule: &GaussLegendre,
    opts: AdaptiveOptions,
    f: F,
) -> Result<(T, QuadratureReport)>
where
    T: Integrand,
    F: Fn(usize, f64) -> T + Sync,
{
    if initial.is_empty() {
        return Err(Error::InvalidArgument("no panels to integrate".into()));
    }
    let mut report = QuadratureReport::default();
    let n_initial = initial.len() as f64;
    let mut level: Vec<Job> = initial
        .iter()
        .map(|p| Job {
            panel: *p,
            depth: 0,
            tol: f64::NAN,
        })
        .collect();
    let mut accepted: Vec<(Panel, T)> = Vec::new();
    let mut abs_tol: Option<f64> = None;

    while !level.is_empty() {
        let evaluated: Vec<(T, T, T)> = level
            .par_iter()
            .map(|job| {
                let p = job.panel;
                let mid = 0.5 * (p.t0 + p.t1);
                let whole = panel_estimate(rule, &p, &f);
                let left = panel_estimate(
                    rule,
                    &Panel {
                        segment: p.segment,
                        t0: p.t0,
                        t1: mid,
                    },
                    &f,
                );
                let right = panel_estimate(
                    rule,
                    &Panel {
                        segment: p.segment,
                        t0: mid,
                        t1: p.t1,
                    },
                    &f,
                );
                (whole, left, right)
            })
            .collect();
        report.nodes += 3 * rule.len() * level.len();

        if abs_tol.is_none() {
            let halves: Vec<T> = evaluated
                .iter()
                .map(|(_, l, r)| {
                    let mut s = l.clone();
                    s.axpy(Complex64::new(1.0, 0.0), r);
                    s
                })
                .collect();
            let coarse = pairwise_sum(&halves).map(|s| s.norm()).unwrap_or(0.0);
            let tol = opts.tol * coarse.max(1.0);
            abs_tol = Some(tol);
            for job in level.iter_mut() {
                job.tol = tol / n_initial;
            }
        }

        let mut next = Vec::new();
        for (job, (whole, left, right)) in level.into_iter().zip(evaluated) {
            let mut fine = left;
            fine.axpy(Complex64::new(1.0, 0.0), &right);
            let diff = whole.dist(&fine);
            if diff <= job.tol || diff <= 1e-15 * fine.norm() {
                report.error_estimate += diff;
                accepted.push((job.panel, fine));
            } else if job.depth >= opts.max_depth {
                return Err(Error::QuadratureDiverged {
                    tol: opts.tol,
                    max_depth: opts.max_depth,
                    estimate: diff,
                });
            } else {
                report.refinement_steps += 1;
                let p = job.panel;
                let mid = 0.5 * (p.t0 + p.t1);
                for (t0, t1) in [(p.t0, mid), (mid, p.t1)] {
                    next.push(Job {
                        panel: Panel {
                            segment: p.segment,
                            t0,
                            t1,
                        },
                        depth: job.depth + 1,
                        tol: 0.5 * job.tol,
                    });
                }
            }
        }
        level = next;
    }

    accepted.sort_by(|(a, _), (b, _)| {
        a.segment
            .cmp(&b.segment)
            .then(a.t0.partial_cmp(&b.t0).unwrap_or(std::cmp::Ordering::Equal))
    });
    report.panels = accepted.len();
    let values: Vec<T> = accepted.into_iter().map(|(_, v)| v).collect();
    let total = pairwise_sum(&values).expect("at least one accepted panel");
    Ok((total, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 8, 16] {
            let rule = GaussLegendre::new(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            for deg in 0..(2 * n) {
                let approx: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| w * x.powi(deg as i32))
                    .sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((approx - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        // ∫_0^1 1/(t^2 + 1e-4) dt = 100 atan(100)
        let rule = GaussLegendre::new(8);
        let panels = [Panel {
            segment: 0,
            t0: 0.0,
            t1: 1.0,
        }];
        let (v, rep): (Complex64, _) = adaptive_integrate(
            &panels,
            &rule,
            AdaptiveOptions {
                tol: 1e-12,
                max_depth: 30,
            },
            |_, t| Complex64::new(1.0 / (t * t + 1e-4), 0.0),
        )
        .unwrap();
        let exact = 100.0 * 100f64.atan();
        assert!((v.re - exact).abs() < 1e-9 * exact);
        assert!(rep.refinement_steps > 0);
    }

    #[test]
    fn reports_divergence_when_depth_is_exhausted() {
        let rule = GaussLegendre::new(2);
        let panels = [Panel {
            segment: 0,
            t0: 0.0,
            t1: 1.0,
        }];
        let res: Result<(Complex64, _)> = adaptive_integrate(
            &panels,
            &rule,
            AdaptiveOptions {
                tol: 1e-14,
                max_depth: 2,
            },
            |_, t| Complex64::new((40.0 * t).sin(), 0.0),
        );
        assert!(matches!(res, Err(Error::QuadratureDiverged { .. })));
    }
}
