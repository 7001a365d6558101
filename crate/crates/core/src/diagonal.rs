//! Elements of `A ⊗ A` and the diagonal problem.

use crate::algebra::MatrixAlgebra;
use crate::config::ToleranceConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, ONE};
use crate::spin;

const STREAM_DIAGONAL: u64 = 0x6469_6167;
/// Above this algebra dimension the dense refinement system is skipped.
const POLISH_MAX_DIM: usize = 20;
/// Relative fit error below which no refinement is attempted.
const POLISH_TRIGGER: f64 = 1e-12;

/// `u = Σ a_i ⊗ b_i`. An empty list is the zero tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorElement {
    n: usize,
    terms: Vec<(CMatrix, CMatrix)>,
}

impl TensorElement {
    pub fn new(n: usize, terms: Vec<(CMatrix, CMatrix)>) -> Result<Self> {
        for (a, b) in &terms {
            for m in [a, b] {
                let k = linalg::check_square(m)?;
                if k != n {
                    return Err(Error::DimensionMismatch { expected: n, found: k });
                }
                if !linalg::is_finite(m) {
                    return Err(Error::NonFinite);
                }
            }
        }
        Ok(Self { n, terms })
    }

    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// `1 ⊗ 1`.
    pub fn one(n: usize) -> Self {
        Self {
            n,
            terms: vec![(linalg::eye(n), linalg::eye(n))],
        }
    }

    /// `Σ_i E_{i1} ⊗ E_{1i}` in `M_n`.
    pub fn canonical_matrix_diagonal(n: usize) -> Self {
        let terms = (0..n).map(|i| (linalg::unit(n, i, 0), linalg::unit(n, 0, i))).collect();
        Self { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(CMatrix, CMatrix)] {
        &self.terms
    }

    pub fn left_factors(&self) -> Vec<CMatrix> {
        self.terms.iter().map(|t| t.0.clone()).collect()
    }

    pub fn right_factors(&self) -> Vec<CMatrix> {
        self.terms.iter().map(|t| t.1.clone()).collect()
    }

    pub fn scale(&self, z: c64) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(a, b)| (a.mapv(|x| x * z), b.clone())).collect(),
        }
    }

    /// Sum by concatenating the term lists.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self { n: self.n, terms })
    }

    /// Applies `x ↦ f(x)` to the left factors and `x ↦ g(x)` to the right ones.
    pub fn map_factors<F, G>(&self, n: usize, f: F, g: G) -> Self
    where
        F: Fn(&CMatrix) -> CMatrix,
        G: Fn(&CMatrix) -> CMatrix,
    {
        Self {
            n,
            terms: self.terms.iter().map(|(a, b)| (f(a), g(b))).collect(),
        }
    }

    /// `Σ a_i b_i`.
    pub fn multiply(&self) -> CMatrix {
        let mut out = linalg::zeros(self.n, self.n);
        for (a, b) in &self.terms {
            out = out + a.dot(b);
        }
        out
    }

    /// `Σ a_i ⊗ b_i` as an `n² × n²` Kronecker matrix. The map is an isometry
    /// from the Hilbert–Schmidt tensor product, so Frobenius norms of this
    /// matrix are coefficient norms.
    pub fn kron_matrix(&self) -> CMatrix {
        let n2 = self.n * self.n;
        let mut out = linalg::zeros(n2, n2);
        for (a, b) in &self.terms {
            out = out + linalg::kron(a, b);
        }
        out
    }

    /// Coefficient-space norm of `self − other`.
    pub fn distance(&self, other: &Self) -> f64 {
        linalg::fro(&(self.kron_matrix() - other.kron_matrix()))
    }

    /// Builds `Σ_{k,l} coeffs[k][l] e_k ⊗ e_l` from coordinates in A's basis.
    pub fn from_coefficients(alg: &MatrixAlgebra, coeffs: &CMatrix) -> Self {
        let basis = alg.basis();
        let mut terms = Vec::new();
        for (k, ek) in basis.iter().enumerate() {
            let mut b = linalg::zeros(alg.n(), alg.n());
            let mut any = false;
            for (l, el) in basis.iter().enumerate() {
                let c = coeffs[[k, l]];
                if c != linalg::ZERO {
                    b.scaled_add(c, el);
                    any = true;
                }
            }
            if any {
                terms.push((ek.clone(), b));
            }
        }
        Self { n: alg.n(), terms }
    }

    /// Coordinates `C` with `u = Σ C_kl e_k ⊗ e_l`, valid when all factors lie in A.
    pub fn coefficients(&self, alg: &MatrixAlgebra) -> CMatrix {
        let d = alg.dim();
        let mut c = linalg::zeros(d, d);
        for (a, b) in &self.terms {
            let x = alg.coords(a);
            let y = alg.coords(b);
            for k in 0..d {
                for l in 0..d {
                    c[[k, l]] += x[k] * y[l];
                }
            }
        }
        c
    }
}

/// `commutation_residual` is relative to `max(1, ‖u‖)`, with `‖u‖` the Frobenius norm of `Σ a_i ⊗ b_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalReport {
    pub unit_residual: f64,
    pub commutation_residual: f64,
    pub verdict: bool,
}

pub fn multiply(u: &TensorElement) -> CMatrix {
    u.multiply()
}

fn check_factors(alg: &MatrixAlgebra, u: &TensorElement, cfg: &ToleranceConfig) -> Result<()> {
    if u.n() != alg.n() {
        return Err(Error::DimensionMismatch { expected: alg.n(), found: u.n() });
    }
    for (i, (a, b)) in u.terms().iter().enumerate() {
        for m in [a, b] {
            let mem = alg.membership(m, cfg)?;
            if !mem.is_member() {
                return Err(Error::FactorNotInAlgebra { index: i, residual: mem.residual() });
            }
        }
    }
    Ok(())
}

pub fn is_diagonal(alg: &MatrixAlgebra, u: &TensorElement, cfg: &ToleranceConfig) -> Result<DiagonalReport> {
    check_factors(alg, u, cfg)?;
    let unit_residual = linalg::op_norm(&(u.multiply() - linalg::eye(alg.n())));
    // relative to the size of u, which grows with the conditioning of the algebra's basis
    let scale = linalg::fro(&u.kron_matrix()).max(1.0);
    let mut commutation_residual = 0.0f64;
    for e in alg.basis() {
        let mut diff = u.map_factors(u.n(), |a| e.dot(a), |b| b.clone()).kron_matrix();
        diff = diff - u.map_factors(u.n(), |a| a.clone(), |b| b.dot(e)).kron_matrix();
        commutation_residual = commutation_residual.max(linalg::fro(&diff) / scale);
    }
    let verdict = unit_residual <= cfg.verify_tol && commutation_residual <= cfg.verify_tol;
    Ok(DiagonalReport {
        unit_residual,
        commutation_residual,
        verdict,
    })
}

/// Finds a diagonal of `alg`, or reports the least-squares residual of the
/// unit equation over the commuting tensors.
pub fn solve_diagonal(alg: &MatrixAlgebra, cfg: &ToleranceConfig) -> Result<TensorElement> {
    let d = alg.dim();
    let gens = alg.generators();
    // u = Σ C_kl e_k ⊗ e_l commutes with g iff L_g C = C R_gᵀ
    let src: Vec<CMatrix> = gens.iter().map(|g| alg.right_mult(g).t().to_owned()).collect();
    let dst: Vec<CMatrix> = gens.iter().map(|g| alg.left_mult(g)).collect();
    let mut rng = cfg.rng(STREAM_DIAGONAL);
    let space = spin::intertwiners(&src, &dst, d, d, cfg.rank_tol, &mut rng)?;

    let target = alg.unit_coords();
    let images: Vec<_> = space
        .iter()
        .map(|c| alg.coords(&TensorElement::from_coefficients(alg, c).multiply()))
        .collect();
    let m = linalg::hstack(&images, d);
    let (y, residual) = if space.is_empty() {
        (ndarray::Array1::zeros(0), linalg::vnorm(&target))
    } else {
        // the space is orthonormal, so images below rank_tol are zero
        linalg::lstsq_floor(&m, &target, cfg.rank_tol, cfg.rank_tol)?
    };
    if residual > cfg.verify_tol {
        return Err(Error::Infeasible { residual });
    }
    let mut c = linalg::zeros(d, d);
    for (yj, cj) in y.iter().zip(space.iter()) {
        c.scaled_add(*yj, cj);
    }
    if d <= POLISH_MAX_DIM && fit_error(alg, &dst, &src, &c) > POLISH_TRIGGER * linalg::fro(&c).max(1.0) {
        polish(alg, &dst, &src, &mut c, cfg)?;
    }
    Ok(TensorElement::from_coefficients(alg, &c))
}

/// Largest residual of `L_g C = C R_gᵀ` and of the unit equation.
fn fit_error(alg: &MatrixAlgebra, left: &[CMatrix], right_t: &[CMatrix], c: &CMatrix) -> f64 {
    let unit = alg.unit_coords() - alg.coords(&TensorElement::from_coefficients(alg, c).multiply());
    left.iter()
        .zip(right_t)
        .map(|(lg, rg)| linalg::fro(&(lg.dot(c) - c.dot(rg))))
        .fold(linalg::vnorm(&unit), f64::max)
}

/// One refinement step of `C` against the full system `L_g C = C R_gᵀ`,
/// `Σ C_kl e_k e_l = 1`, which the fit over the numerically computed
/// commuting space satisfies only to about `rank_tol · ‖C‖`.
fn polish(alg: &MatrixAlgebra, left: &[CMatrix], right_t: &[CMatrix], c: &mut CMatrix, cfg: &ToleranceConfig) -> Result<()> {
    let d = alg.dim();
    let table = alg.structure_table();
    let g = left.len();
    let rows = g * d * d + d;
    let mut a = linalg::zeros(rows, d * d);
    for k in 0..d {
        for l in 0..d {
            let col = k * d + l;
            for (gi, (lg, rg)) in left.iter().zip(right_t).enumerate() {
                let off = gi * d * d;
                for m in 0..d {
                    a[[off + m * d + l, col]] += lg[[m, k]];
                    a[[off + k * d + m, col]] -= rg[[l, m]];
                }
            }
            for m in 0..d {
                a[[g * d * d + m, col]] = table[[k, l, m]];
            }
        }
    }
    let flat = ndarray::Array1::from_iter(c.iter().copied());
    let mut r = -a.dot(&flat);
    let unit = alg.unit_coords();
    for m in 0..d {
        r[g * d * d + m] += unit[m];
    }
    let (dc, _) = linalg::lstsq_floor(&a, &r, cfg.rank_tol, cfg.rank_tol)?;
    for (x, dx) in c.iter_mut().zip(dc.iter()) {
        *x += dx;
    }
    Ok(())
}

/// Rewrites `u` with linearly independent left and right factor families.
pub fn reduce_representation(u: &TensorElement, cfg: &ToleranceConfig) -> Result<TensorElement> {
    let n = u.n();
    if u.is_empty() {
        return Ok(u.clone());
    }
    let f = linalg::range_basis(&linalg::stack_flat(&u.left_factors()), cfg.rank_tol)?;
    let g = linalg::range_basis(&linalg::stack_flat(&u.right_factors()), cfg.rank_tol)?;
    if f.ncols() == 0 || g.ncols() == 0 {
        return Ok(TensorElement::zero(n));
    }
    let fh = linalg::dagger(&f);
    let gh = linalg::dagger(&g);
    let mut coef = linalg::zeros(f.ncols(), g.ncols());
    for (a, b) in u.terms() {
        let alpha = fh.dot(&linalg::flatten(a));
        let beta = gh.dot(&linalg::flatten(b));
        for s in 0..alpha.len() {
            for t in 0..beta.len() {
                coef[[s, t]] += alpha[s] * beta[t];
            }
        }
    }
    use ndarray_linalg::SVD;
    let (uu, sv, vt) = coef.svd(true, true)?;
    let (uu, vt) = (uu.expect("U"), vt.expect("VT"));
    let smax = sv.first().copied().unwrap_or(0.0);
    let mut terms = Vec::new();
    for (k, &s) in sv.iter().enumerate() {
        if s <= cfg.rank_tol * smax || s == 0.0 {
            break;
        }
        let r = s.sqrt();
        let a = f.dot(&uu.column(k)).mapv(|z| z * r);
        let b = g.dot(&vt.row(k)).mapv(|z| z * r);
        // fix the phase so the largest entry of a is real and positive
        let piv = a.iter().copied().fold(linalg::ZERO, |m, z| if z.norm() > m.norm() { z } else { m });
        let ph = if piv.norm() > 0.0 { piv / piv.norm() } else { ONE };
        let a = a.mapv(|z| z * ph.conj());
        let b = b.mapv(|z| z * ph);
        terms.push((
            linalg::unflatten(a.as_slice().expect("contiguous"), n, n),
            linalg::unflatten(b.as_slice().expect("contiguous"), n, n),
        ));
    }
    Ok(TensorElement { n, terms })
}

/// `1 ⊗ 1 − w` for `w` in the kernel of the multiplication map.
pub fn diagonal_from_witness(alg: &MatrixAlgebra, w: &TensorElement, cfg: &ToleranceConfig) -> Result<TensorElement> {
    if w.n() != alg.n() {
        return Err(Error::DimensionMismatch { expected: alg.n(), found: w.n() });
    }
    let norm = linalg::op_norm(&w.multiply());
    if norm > cfg.verify_tol {
        return Err(Error::WitnessNotInKernel { norm });
    }
    TensorElement::one(alg.n()).concat(&w.scale(c64::new(-1.0, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::generate_algebra;
    use crate::linalg::{eye, fro, unit};

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn full(n: usize) -> MatrixAlgebra {
        let gens: Vec<CMatrix> = (0..n).flat_map(|i| (0..n).map(move |j| unit(n, i, j))).collect();
        generate_algebra(&gens, true, n, &cfg()).unwrap()
    }

    fn t2() -> MatrixAlgebra {
        generate_algebra(&[unit(2, 0, 0), unit(2, 0, 1)], true, 2, &cfg()).unwrap()
    }

    #[test]
    fn multiply_examples() {
        for n in 1..5 {
            assert_eq!(TensorElement::canonical_matrix_diagonal(n).multiply(), eye(n));
        }
        assert_eq!(TensorElement::zero(3).multiply(), linalg::zeros(3, 3));
        let u = TensorElement::new(2, vec![(unit(2, 0, 0), unit(2, 1, 1))]).unwrap();
        assert_eq!(u.multiply(), linalg::zeros(2, 2));
    }

    #[test]
    fn canonical_diagonal_is_exact() {
        for n in 2..5 {
            let r = is_diagonal(&full(n), &TensorElement::canonical_matrix_diagonal(n), &cfg()).unwrap();
            assert!(r.verdict);
            assert_eq!(r.unit_residual, 0.0);
            assert!(r.commutation_residual < 1e-14);
        }
    }

    #[test]
    fn one_tensor_one() {
        let scalars = generate_algebra(&[], true, 2, &cfg()).unwrap();
        assert!(is_diagonal(&scalars, &TensorElement::one(2), &cfg()).unwrap().verdict);
        let r = is_diagonal(&full(2), &TensorElement::one(2), &cfg()).unwrap();
        assert!(!r.verdict);
        // E12⊗1 − 1⊗E12 has norm 2 in M2⊗M2, relative to ‖1⊗1‖_F = 2
        assert!(r.commutation_residual > 0.5);
    }

    #[test]
    fn factors_outside_the_algebra_are_rejected() {
        let u = TensorElement::new(2, vec![(unit(2, 1, 0), eye(2))]).unwrap();
        assert!(matches!(
            is_diagonal(&t2(), &u, &cfg()),
            Err(Error::FactorNotInAlgebra { index: 0, .. })
        ));
    }

    #[test]
    fn solver_on_small_algebras() {
        let scalars = generate_algebra(&[], true, 3, &cfg()).unwrap();
        let u = solve_diagonal(&scalars, &cfg()).unwrap();
        assert!(u.distance(&TensorElement::one(3)) < 1e-12);
        for n in 2..5 {
            let a = full(n);
            let u = solve_diagonal(&a, &cfg()).unwrap();
            assert!(is_diagonal(&a, &u, &cfg()).unwrap().verdict);
        }
        match solve_diagonal(&t2(), &cfg()) {
            Err(Error::Infeasible { residual }) => assert!(residual >= 0.1),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn reduce_examples() {
        let a = unit(2, 0, 1) + eye(2);
        let b = unit(2, 1, 0);
        let u = TensorElement::new(2, vec![(a.clone(), b.clone()), (a.clone(), b.clone())]).unwrap();
        let r = reduce_representation(&u, &cfg()).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r.distance(&u) < 1e-12);

        let d = TensorElement::canonical_matrix_diagonal(3);
        let r = reduce_representation(&d, &cfg()).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.distance(&d) < 1e-12);

        let c = unit(2, 1, 1);
        let indep = TensorElement::new(2, vec![(a.clone(), b.clone()), (a.clone(), c.clone())]).unwrap();
        // a⊗b + a⊗c = a⊗(b+c)
        assert_eq!(reduce_representation(&indep, &cfg()).unwrap().len(), 1);
        let dep = TensorElement::new(2, vec![(a.clone(), b.clone()), (eye(2), c.clone())]).unwrap();
        assert_eq!(reduce_representation(&dep, &cfg()).unwrap().len(), 2);
        let same = TensorElement::new(2, vec![(a.clone(), b.clone()), (a.clone(), b.mapv(|z| z * 3.0))]).unwrap();
        assert_eq!(reduce_representation(&same, &cfg()).unwrap().len(), 1);
    }

    #[test]
    fn witness_precondition() {
        let a = full(2);
        let w = TensorElement::new(2, vec![(eye(2), unit(2, 0, 0))]).unwrap();
        assert!(matches!(
            diagonal_from_witness(&a, &w, &cfg()),
            Err(Error::WitnessNotInKernel { .. })
        ));
        let scalars = generate_algebra(&[], true, 2, &cfg()).unwrap();
        let u = diagonal_from_witness(&scalars, &TensorElement::zero(2), &cfg()).unwrap();
        assert!(fro(&(u.kron_matrix() - TensorElement::one(2).kron_matrix())) < 1e-15);
    }
}
