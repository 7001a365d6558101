//! Dense complex linear-algebra helpers shared by every module.
//!
//! Matrices are `Array2<c64>`. Flattening is row-major: `vec(X)[i * cols + j] = X[i, j]`.
//! Rank decisions are relative to the largest singular value.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eig, Inverse, JobSvd, SVDDC, QR, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

pub use ndarray_linalg::c64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<c64>;
pub type CVector = Array1<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };

pub fn eye(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, ONE)
}

pub fn zeros(r: usize, c: usize) -> CMatrix {
    Array2::zeros((r, c))
}

/// Matrix unit `E_{ij}` in `M_n` (zero-based indices).
pub fn unit(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(n, n);
    m[[i, j]] = ONE;
    m
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn dagger_view(m: ArrayView2<c64>) -> CMatrix {
    m.t().mapv(|z| z.conj())
}

pub fn flatten(m: &CMatrix) -> CVector {
    Array1::from_iter(m.iter().copied())
}

pub fn unflatten(v: &[c64], rows: usize, cols: usize) -> CMatrix {
    Array2::from_shape_vec((rows, cols), v.to_vec()).expect("length matches shape")
}

/// Columns are the flattened matrices.
pub fn stack_flat(mats: &[CMatrix]) -> CMatrix {
    let len = mats.first().map_or(0, |m| m.len());
    let mut out = zeros(len, mats.len());
    for (j, m) in mats.iter().enumerate() {
        for (i, z) in m.iter().enumerate() {
            out[[i, j]] = *z;
        }
    }
    out
}

/// Hilbert-Schmidt inner product `<x, y> = trace(y^* x)`.
pub fn inner(x: &CMatrix, y: &CMatrix) -> c64 {
    x.iter().zip(y.iter()).map(|(a, b)| b.conj() * a).sum()
}

pub fn vdot(x: &CVector, y: &CVector) -> c64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn fro_norm<'a, I: IntoIterator<Item = &'a c64>>(it: I) -> f64 {
    it.into_iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn fro(m: &CMatrix) -> f64 {
    fro_norm(m.iter())
}

pub fn vnorm(v: &CVector) -> f64 {
    fro_norm(v.iter())
}

pub fn trace(m: &CMatrix) -> c64 {
    m.diag().iter().copied().sum()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn scale(m: &CMatrix, z: c64) -> CMatrix {
    m.mapv(|w| w * z)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == ZERO {
                continue;
            }
            let mut blk = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            blk.zip_mut_with(b, |o, &w| *o = aij * w);
        }
    }
    out
}

pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let (_, s, _) = m.svd(false, false)?;
    Ok(s.to_vec())
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m)
        .ok()
        .and_then(|s| s.first().copied())
        .unwrap_or(f64::NAN)
}

pub fn condition_number(m: &CMatrix) -> Result<f64> {
    let s = singular_values(m)?;
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => Ok(hi / lo),
        (Some(_), Some(_)) => Ok(f64::INFINITY),
        _ => Ok(1.0),
    }
}

fn cutoff(s: &[f64], tol: f64) -> f64 {
    s.first().copied().unwrap_or(0.0) * tol
}

pub fn rank(m: &CMatrix, tol: f64) -> Result<usize> {
    rank_floor(m, tol, 0.0)
}

/// Rank with singular values below `max(tol * s_max, floor)` treated as zero.
pub fn rank_floor(m: &CMatrix, tol: f64, floor: f64) -> Result<usize> {
    let s = singular_values(m)?;
    let cut = cutoff(&s, tol).max(floor);
    Ok(s.iter().filter(|&&x| x > cut && x > 0.0).count())
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn range_basis(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Ok(zeros(rows, 0));
    }
    let (u, s, _) = m.svd(true, false)?;
    let u = u.expect("requested U");
    let cut = cutoff(s.as_slice().unwrap(), tol);
    let r = s.iter().filter(|&&x| x > cut && x > 0.0).count();
    Ok(u.slice(s![.., ..r]).to_owned())
}

/// Orthonormal basis (as columns) of the right nullspace of `m`.
pub fn nullspace(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    let (rows, cols) = m.dim();
    if cols == 0 {
        return Ok(zeros(0, 0));
    }
    if rows == 0 {
        return Ok(eye(cols));
    }
    let (_, s, vt) = m.svd(false, true)?;
    let vt = vt.expect("requested VT");
    let cut = cutoff(s.as_slice().unwrap(), tol);
    let r = s.iter().filter(|&&x| x > cut && x > 0.0).count();
    Ok(dagger_view(vt.slice(s![r.., ..])))
}

/// Minimum-norm least-squares solution of `a x = b`; returns `(x, ||a x - b||)`.
pub fn lstsq(a: &CMatrix, b: &CVector, tol: f64) -> Result<(CVector, f64)> {
    lstsq_floor(a, b, tol, 0.0)
}

/// [`lstsq`] with singular values below `max(tol * s_max, floor)` treated as zero.
pub fn lstsq_floor(a: &CMatrix, b: &CVector, tol: f64, floor: f64) -> Result<(CVector, f64)> {
    let (rows, cols) = a.dim();
    if cols == 0 || rows == 0 {
        return Ok((Array1::zeros(cols), vnorm(b)));
    }
    let (u, s, vt) = a.svddc(JobSvd::Some)?;
    let (u, vt) = (u.expect("U"), vt.expect("VT"));
    let cut = cutoff(s.as_slice().unwrap(), tol).max(floor);
    let mut x: CVector = Array1::zeros(cols);
    for (k, &sk) in s.iter().enumerate() {
        if sk <= cut || sk == 0.0 {
            break;
        }
        let coef = u.column(k).iter().zip(b.iter()).map(|(uu, bb)| uu.conj() * bb).sum::<c64>() / sk;
        for j in 0..cols {
            x[j] += vt[[k, j]].conj() * coef;
        }
    }
    let res = vnorm(&(a.dot(&x) - b));
    Ok((x, res))
}

/// Extends orthonormal columns `q` (m x r) to an orthonormal basis of the
/// complement, choosing standard basis vectors greedily by residual size.
pub fn complement(q: &CMatrix) -> CMatrix {
    let (m, r) = q.dim();
    let mut basis: Vec<CVector> = (0..r).map(|j| q.column(j).to_owned()).collect();
    let mut out = Vec::with_capacity(m - r);
    for _ in r..m {
        let mut best: Option<(f64, CVector)> = None;
        for i in 0..m {
            let mut v: CVector = Array1::zeros(m);
            v[i] = ONE;
            for _ in 0..2 {
                for b in &basis {
                    let a = vdot(b, &v);
                    v.scaled_add(-a, b);
                }
            }
            let nv = vnorm(&v);
            if best.as_ref().is_none_or(|(n, _)| nv > *n) {
                best = Some((nv, v));
            }
        }
        let (nv, v) = best.expect("m > 0");
        let v = v.mapv(|z| z / nv);
        basis.push(v.clone());
        out.push(v);
    }
    let mut c = zeros(m, out.len());
    for (j, v) in out.iter().enumerate() {
        c.column_mut(j).assign(v);
    }
    c
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    Ok(m.inv()?)
}

pub fn eigenvalues(m: &CMatrix) -> Result<Vec<c64>> {
    let (vals, _) = m.eig()?;
    Ok(vals.to_vec())
}

pub fn hstack(cols: &[CVector], rows: usize) -> CMatrix {
    let mut m = zeros(rows, cols.len());
    for (j, v) in cols.iter().enumerate() {
        m.column_mut(j).assign(v);
    }
    m
}

pub fn vstack(blocks: &[CMatrix]) -> CMatrix {
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    if views.is_empty() {
        return zeros(0, 0);
    }
    ndarray::concatenate(Axis(0), &views).expect("equal column counts")
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re, im) / std::f64::consts::SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    Array2::from_shape_simple_fn((rows, cols), || random_complex(rng))
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVector {
    Array1::from_shape_simple_fn(len, || random_complex(rng))
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = random_matrix(rng, n, n);
    let (q, r) = g.qr().expect("QR of a square Gaussian matrix");
    let mut q = q;
    for j in 0..n {
        let d = r[[j, j]];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        q.column_mut(j).mapv_inplace(|z| z * ph);
    }
    q
}

/// Random invertible matrix `U diag(s) V^*` with singular values log-spaced in `[1, kappa]`.
pub fn random_conditioned<R: Rng + ?Sized>(rng: &mut R, n: usize, kappa: f64) -> CMatrix {
    let u = random_unitary(rng, n);
    let v = random_unitary(rng, n);
    let mut sv: Vec<f64> = (0..n)
        .map(|i| {
            if n == 1 {
                1.0
            } else {
                kappa.powf(i as f64 / (n - 1) as f64)
            }
        })
        .collect();
    // shuffle so the extreme values are not tied to fixed columns
    for i in (1..sv.len()).rev() {
        let j = rng.random_range(0..=i);
        sv.swap(i, j);
    }
    let mut us = u;
    for (j, s) in sv.iter().enumerate() {
        us.column_mut(j).mapv_inplace(|z| z * *s);
    }
    us.dot(&dagger(&v))
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(n, n);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.slice_mut(s![off..off + k, off..off + k]).assign(b);
        off += k;
    }
    out
}

pub fn check_square(m: &CMatrix) -> Result<usize> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::NonSquareInput { rows: r, cols: c });
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kron_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 2, 3);
        let b = random_matrix(&mut rng, 3, 2);
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..3 {
                for p in 0..3 {
                    for q in 0..2 {
                        assert_eq!(k[[i * 3 + p, j * 2 + q]], a[[i, j]] * b[[p, q]]);
                    }
                }
            }
        }
    }

    #[test]
    fn nullspace_of_rank_one() {
        let v = Array2::from_shape_vec((1, 3), vec![ONE, ONE, ZERO]).unwrap();
        let n = nullspace(&v, 1e-12).unwrap();
        assert_eq!(n.ncols(), 2);
        assert!(fro(&v.dot(&n)) < 1e-14);
        let n0 = nullspace(&zeros(0, 4), 1e-12).unwrap();
        assert_eq!(n0.ncols(), 4);
    }

    #[test]
    fn lstsq_reports_residual() {
        // x = 1 and x = 3 together: best fit 2, residual sqrt(2)
        let a = Array2::from_shape_vec((2, 1), vec![ONE, ONE]).unwrap();
        let b = Array1::from(vec![ONE, c64::new(3.0, 0.0)]);
        let (x, r) = lstsq(&a, &b, 1e-12).unwrap();
        assert!((x[0] - c64::new(2.0, 0.0)).norm() < 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn complement_completes_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = range_basis(&random_matrix(&mut rng, 6, 2), 1e-12).unwrap();
        let c = complement(&q);
        assert_eq!(c.ncols(), 4);
        let full = ndarray::concatenate(Axis(1), &[q.view(), c.view()]).unwrap();
        assert!(fro(&(dagger(&full).dot(&full) - eye(6))) < 1e-12);
    }

    #[test]
    fn conditioned_matrix_has_requested_condition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = random_conditioned(&mut rng, 5, 40.0);
        assert!((condition_number(&t).unwrap() - 40.0).abs() < 1e-8);
        let u = random_unitary(&mut rng, 4);
        assert!(fro(&(dagger(&u).dot(&u) - eye(4))) < 1e-12);
    }
}
