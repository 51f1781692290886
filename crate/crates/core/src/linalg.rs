//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn scalar(z: Complex64, n: usize) -> CMatrix {
    CMatrix::identity(n, n) * z
}

// nalgebra's complex SVD loses accuracy on some inputs; the real embedding
// [[A, -B], [B, A]] of A + iB is decomposed instead. Each singular value of
// the complex matrix appears twice in the embedding.
fn real_embedding(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

fn complexify(v: nalgebra::DVectorView<f64>, n: usize) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_fn(n, |i, _| Complex64::new(v[i], v[i + n]))
}

/// Picks `k` orthonormal vectors from the span of `candidates` by modified
/// Gram-Schmidt with largest-residual pivoting.
fn orthonormal_subset(mut candidates: Vec<nalgebra::DVector<Complex64>>, n: usize, k: usize) -> CMatrix {
    let mut basis = CMatrix::zeros(n, k);
    for j in 0..k {
        let Some((best, _)) = candidates
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
        else {
            break;
        };
        let mut q = candidates.swap_remove(best);
        for _ in 0..2 {
            for i in 0..j {
                let e = basis.column(i).clone_owned();
                let proj = e.dotc(&q);
                q -= e * proj;
            }
        }
        let norm = q.norm();
        if norm == 0.0 {
            break;
        }
        q /= Complex64::new(norm, 0.0);
        for v in candidates.iter_mut() {
            let proj = q.dotc(v);
            *v -= &q * proj;
        }
        basis.set_column(j, &q);
    }
    basis
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = real_embedding(m).svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.into_iter().step_by(2).collect()
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Rank threshold `sqrt(eps) * sigma_max * n`.
pub fn rank_threshold(sigma_max: f64, n: usize) -> f64 {
    f64::EPSILON.sqrt() * sigma_max * n.max(1) as f64
}

/// Numerical rank with a mandatory gap between the singular values that
/// straddle the threshold.
pub fn numerical_rank(m: &CMatrix, gap_ratio: f64) -> Result<usize> {
    numerical_rank_scaled(m, None, gap_ratio)
}

/// Like [`numerical_rank`], with an explicit reference scale for the threshold.
pub fn numerical_rank_scaled(m: &CMatrix, scale: Option<f64>, gap_ratio: f64) -> Result<usize> {
    let s = singular_values(m);
    let Some(&smax) = s.first() else {
        return Ok(0);
    };
    let reference = scale.unwrap_or(smax).max(smax);
    if reference == 0.0 {
        return Ok(0);
    }
    let tau = rank_threshold(reference, m.nrows().max(m.ncols()));
    let rank = s.iter().filter(|&&x| x > tau).count();
    let above = if rank > 0 { Some(s[rank - 1]) } else { None };
    let below = s.get(rank).copied();
    if let (Some(above), Some(below)) = (above, below) {
        if below > 0.0 && above / below < gap_ratio {
            return Err(Error::RankIndeterminate {
                below,
                above,
                threshold: tau,
            });
        }
    }
    if let Some(below) = below {
        // a lone singular value just under the threshold is indeterminate too
        if below > tau / gap_ratio {
            return Err(Error::RankIndeterminate {
                below,
                above: above.unwrap_or(tau),
                threshold: tau,
            });
        }
    }
    Ok(rank)
}

/// Orthonormal basis (as columns) of the numerical null space.
pub fn null_space(m: &CMatrix, rank: usize) -> CMatrix {
    let n = m.ncols();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // pad to square so that the full right singular basis is available
    let padded = if m.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = real_embedding(&padded).svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let k = n.saturating_sub(rank);
    let candidates = order
        .iter()
        .skip(2 * rank)
        .map(|&idx| complexify(v_t.row(idx).transpose().column(0), n))
        .collect();
    orthonormal_subset(candidates, n, k)
}

/// Orthonormal basis of the column space.
pub fn range_basis(m: &CMatrix, rank: usize) -> CMatrix {
    let n = m.nrows();
    if rank == 0 || n == 0 {
        return CMatrix::zeros(n, 0);
    }
    let svd = real_embedding(m).svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let candidates = order.iter().take(2 * rank).map(|&idx| complexify(u.column(idx), n)).collect();
    orthonormal_subset(candidates, n, rank)
}

/// Solves `m x = rhs` by LU with partial pivoting.
pub fn solve(m: &CMatrix, rhs: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().solve(rhs)
}

pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().try_inverse()
}

/// Reciprocal condition estimate `sigma_min / sigma_max` (exact, via SVD).
pub fn rcond(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

/// Eigenvalues via the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let schur = nalgebra::linalg::Schur::new(m.clone());
    match schur.eigenvalues() {
        Some(v) => v.iter().copied().collect(),
        None => {
            let (_, t) = schur.unpack();
            (0..t.nrows()).map(|i| t[(i, i)]).collect()
        }
    }
}

/// Groups values whose distance is within `tol` (single linkage) and returns
/// (mean, count) pairs in order of first appearance.
pub fn cluster(values: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        let mut j = i;
        while label[j] != r {
            let next = label[j];
            label[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                if ri != rj {
                    label[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((r, values[i], 1)),
        }
    }
    groups
        .into_iter()
        .map(|(_, sum, count)| (sum / count as f64, count))
        .collect()
}

pub fn matrix_power(m: &CMatrix, k: usize) -> CMatrix {
    let mut out = identity(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn jordan(n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, i + 1)] = c(1.0, 0.0);
        }
        m
    }

    #[test]
    fn ranks_of_jordan_powers() {
        let j = jordan(3);
        let ranks: Vec<usize> = (0..5)
            .map(|k| numerical_rank(&matrix_power(&j, k), 10.0).unwrap())
            .collect();
        assert_eq!(ranks, vec![3, 2, 1, 0, 0]);
    }

    #[test]
    fn indeterminate_rank_is_reported() {
        let mut m = CMatrix::identity(3, 3);
        m[(2, 2)] = c(3e-8, 0.0);
        assert!(matches!(numerical_rank(&m, 10.0), Err(Error::RankIndeterminate { .. })));
    }

    #[test]
    fn null_space_is_annihilated() {
        let j = jordan(3);
        let ns = null_space(&j, 2);
        assert_eq!(ns.ncols(), 1);
        assert!((&j * &ns).norm() < 1e-14);
        assert!((ns.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_triangular() {
        let mut m = jordan(2).resize(3, 3, c(0.0, 0.0));
        m[(2, 2)] = c(0.0, 5.0);
        let mut ev = eigenvalues(&m);
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!(ev[0].norm() < 1e-14 && ev[1].norm() < 1e-14);
        assert!((ev[2] - c(0.0, 5.0)).norm() < 1e-14);
        let cl = cluster(&ev, 1e-8);
        assert_eq!(cl.len(), 2);
    }
}
