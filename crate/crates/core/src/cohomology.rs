//! First Hochschild cohomology against finite-dimensional bimodules.
//!
//! Inner derivations are `δ_x(a) = a·x − x·a`.

use ndarray::Array2;

use crate::algebra::MatrixAlgebra;
use crate::config::ToleranceConfig;
use crate::diagonal::{self, TensorElement};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector, ONE};
use crate::spin::{self, Spinner};

const STREAM_PROBE: u64 = 0x7072_6f62;

/// Left and right actions of each basis element of A on `C^dim`.
#[derive(Debug, Clone)]
pub struct Bimodule {
    dim: usize,
    left: Vec<CMatrix>,
    right: Vec<CMatrix>,
}

fn combine(mats: &[CMatrix], coeffs: &CVector, dim: usize) -> CMatrix {
    let mut out = linalg::zeros(dim, dim);
    for (m, c) in mats.iter().zip(coeffs.iter()) {
        if *c != linalg::ZERO {
            out.scaled_add(*c, m);
        }
    }
    out
}

impl Bimodule {
    /// Validates the bimodule axioms on random probe vectors.
    pub fn new(alg: &MatrixAlgebra, left: Vec<CMatrix>, right: Vec<CMatrix>, cfg: &ToleranceConfig) -> Result<Self> {
        let x = Self::unchecked(alg, left, right)?;
        x.check_axioms(alg, cfg)?;
        Ok(x)
    }

    pub(crate) fn unchecked(alg: &MatrixAlgebra, left: Vec<CMatrix>, right: Vec<CMatrix>) -> Result<Self> {
        let d = alg.dim();
        for acts in [&left, &right] {
            if acts.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: acts.len() });
            }
        }
        let dim = match left.first() {
            Some(m) => linalg::check_square(m)?,
            None => 0,
        };
        for m in left.iter().chain(right.iter()) {
            let k = linalg::check_square(m)?;
            if k != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: k });
            }
            if !linalg::is_finite(m) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { dim, left, right })
    }

    /// Builds the actions of the whole basis from the actions of a generating
    /// set, checking that the defining relations of A are respected.
    pub fn from_generator_actions(
        alg: &MatrixAlgebra,
        generators: &[CMatrix],
        left: &[CMatrix],
        right: &[CMatrix],
        cfg: &ToleranceConfig,
    ) -> Result<Self> {
        let d = alg.dim();
        if left.len() != generators.len() || right.len() != generators.len() {
            return Err(Error::DimensionMismatch {
                expected: generators.len(),
                found: left.len().min(right.len()),
            });
        }
        let dim = match left.first() {
            Some(m) => linalg::check_square(m)?,
            None => 0,
        };
        for m in left.iter().chain(right.iter()) {
            let k = linalg::check_square(m)?;
            if k != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: k });
            }
        }
        if generators.is_empty() && d > 1 {
            return Err(Error::Invalid("no generator actions for a non-scalar algebra".into()));
        }
        let mut gcoords = Vec::new();
        for (i, g) in generators.iter().enumerate() {
            let m = alg.membership(g, cfg)?;
            if !m.is_member() {
                return Err(Error::FactorNotInAlgebra { index: i, residual: m.residual() });
            }
            gcoords.push(alg.right_mult(g));
        }
        // tracked map of an element q is [L(q) | R(q)]
        let mut sp = Spinner::new(d, dim, 2 * dim, cfg.rank_tol);
        let mut start = Array2::zeros((dim, 2 * dim));
        for i in 0..dim {
            start[[i, i]] = ONE;
            start[[i, dim + i]] = ONE;
        }
        sp.push(alg.unit_coords(), start);
        sp.run(|q, u| {
            let ul = u.slice(ndarray::s![.., ..dim]);
            let ur = u.slice(ndarray::s![.., dim..]);
            (0..generators.len())
                .map(|j| {
                    let mut m = Array2::zeros((dim, 2 * dim));
                    m.slice_mut(ndarray::s![.., ..dim]).assign(&ul.dot(&left[j]));
                    m.slice_mut(ndarray::s![.., dim..]).assign(&right[j].dot(&ur));
                    (gcoords[j].dot(q), m)
                })
                .collect()
        });
        if !sp.is_complete() {
            return Err(Error::Invalid("generators do not generate the algebra".into()));
        }
        let rel = sp.relation_matrix();
        let scale = sp.map_scale();
        let worst = rel
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if worst > cfg.verify_tol * scale {
            return Err(Error::BimoduleAxiomViolation {
                axiom: "generator actions respect the relations of the algebra",
                residual: worst / scale,
            });
        }
        let q = sp.basis_matrix();
        let mut lefts = Vec::with_capacity(d);
        let mut rights = Vec::with_capacity(d);
        for k in 0..d {
            let mut m = Array2::zeros((dim, 2 * dim));
            for (t, u) in sp.maps().iter().enumerate() {
                m.scaled_add(q[[k, t]].conj(), u);
            }
            lefts.push(m.slice(ndarray::s![.., ..dim]).to_owned());
            rights.push(m.slice(ndarray::s![.., dim..]).to_owned());
        }
        Self::new(alg, lefts, rights, cfg)
    }

    /// `X = M_n` with `a·x = S a S⁻¹ x` and `x·a = x T a T⁻¹`, vectorised row-major.
    pub fn twisted_matrix_bimodule(alg: &MatrixAlgebra, s: &CMatrix, t: &CMatrix) -> Result<Self> {
        let n = alg.n();
        let si = linalg::inverse(s)?;
        let ti = linalg::inverse(t)?;
        let id = linalg::eye(n);
        let left = alg.basis().iter().map(|e| linalg::kron(&s.dot(e).dot(&si), &id)).collect();
        let right = alg
            .basis()
            .iter()
            .map(|e| linalg::kron(&id, &t.dot(e).dot(&ti).t().to_owned()))
            .collect();
        Self::unchecked(alg, left, right)
    }

    /// `X = M_n` with multiplication on both sides.
    pub fn regular(alg: &MatrixAlgebra) -> Self {
        let id = linalg::eye(alg.n());
        Self::twisted_matrix_bimodule(alg, &id, &id).expect("identity twist")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn left_actions(&self) -> &[CMatrix] {
        &self.left
    }

    pub fn right_actions(&self) -> &[CMatrix] {
        &self.right
    }

    /// Left action of an arbitrary element of A.
    pub fn left_of(&self, alg: &MatrixAlgebra, a: &CMatrix) -> CMatrix {
        combine(&self.left, &alg.coords(a), self.dim)
    }

    pub fn right_of(&self, alg: &MatrixAlgebra, a: &CMatrix) -> CMatrix {
        combine(&self.right, &alg.coords(a), self.dim)
    }

    /// Worst relative residual of each axiom on two random probe vectors.
    pub fn axiom_residuals(&self, alg: &MatrixAlgebra, cfg: &ToleranceConfig) -> [(&'static str, f64); 5] {
        let d = alg.dim();
        let table = alg.structure_table();
        let unit = alg.unit_coords();
        let mut rng = cfg.rng(STREAM_PROBE);
        let mut worst = [0.0f64; 5];
        let scale = self
            .left
            .iter()
            .chain(self.right.iter())
            .map(linalg::op_norm)
            .fold(1.0, f64::max);
        for _ in 0..2 {
            if self.dim == 0 {
                break;
            }
            let v = linalg::random_vector(&mut rng, self.dim);
            let v = v.mapv(|z| z / linalg::vnorm(&v));
            let lv: Vec<CVector> = self.left.iter().map(|m| m.dot(&v)).collect();
            let rv: Vec<CVector> = self.right.iter().map(|m| m.dot(&v)).collect();
            let lu = combine_vec(&lv, &unit, self.dim);
            let ru = combine_vec(&rv, &unit, self.dim);
            worst[3] = worst[3].max(linalg::vnorm(&(&lu - &v)));
            worst[4] = worst[4].max(linalg::vnorm(&(&ru - &v)));
            for k in 0..d {
                for l in 0..d {
                    let prod = table.slice(ndarray::s![k, l, ..]).to_owned();
                    // L(e_k e_l) = L_k L_l
                    let lhs = combine_vec(&lv, &prod, self.dim);
                    let rhs = self.left[k].dot(&lv[l]);
                    worst[0] = worst[0].max(linalg::vnorm(&(lhs - rhs)));
                    // R(e_k e_l) = R_l R_k
                    let lhs = combine_vec(&rv, &prod, self.dim);
                    let rhs = self.right[l].dot(&rv[k]);
                    worst[1] = worst[1].max(linalg::vnorm(&(lhs - rhs)));
                    let a = self.left[k].dot(&rv[l]);
                    let b = self.right[l].dot(&lv[k]);
                    worst[2] = worst[2].max(linalg::vnorm(&(a - b)));
                }
            }
        }
        let s2 = scale * scale;
        [
            ("left action is a homomorphism", worst[0] / s2),
            ("right action is an anti-homomorphism", worst[1] / s2),
            ("left and right actions commute", worst[2] / s2),
            ("unit acts as identity on the left", worst[3] / scale),
            ("unit acts as identity on the right", worst[4] / scale),
        ]
    }

    fn check_axioms(&self, alg: &MatrixAlgebra, cfg: &ToleranceConfig) -> Result<()> {
        for (axiom, residual) in self.axiom_residuals(alg, cfg) {
            if !(residual <= cfg.verify_tol) {
                return Err(Error::BimoduleAxiomViolation { axiom, residual });
            }
        }
        Ok(())
    }
}

fn combine_vec(vs: &[CVector], coeffs: &CVector, dim: usize) -> CVector {
    let mut out = CVector::zeros(dim);
    for (v, c) in vs.iter().zip(coeffs.iter()) {
        out.scaled_add(*c, v);
    }
    out
}

/// A linear map `A → X` as a `dim X × dim A` matrix on basis coordinates.
#[derive(Debug, Clone)]
pub struct Derivation {
    pub matrix: CMatrix,
}

impl Derivation {
    pub fn zero(alg: &MatrixAlgebra, x: &Bimodule) -> Self {
        Self {
            matrix: linalg::zeros(x.dim(), alg.dim()),
        }
    }

    /// Inner derivation `a ↦ a·x − x·a`.
    pub fn inner(alg: &MatrixAlgebra, module: &Bimodule, x: &CVector) -> Self {
        let cols: Vec<CVector> = (0..alg.dim())
            .map(|k| module.left[k].dot(x) - module.right[k].dot(x))
            .collect();
        Self {
            matrix: linalg::hstack(&cols, module.dim()),
        }
    }

    pub fn apply(&self, alg: &MatrixAlgebra, a: &CMatrix) -> CVector {
        self.matrix.dot(&alg.coords(a))
    }

    /// `max_{k,l} ‖δ(e_k e_l) − e_k·δ(e_l) − δ(e_k)·e_l‖`.
    pub fn leibniz_residual(&self, alg: &MatrixAlgebra, module: &Bimodule) -> f64 {
        let d = alg.dim();
        let table = alg.structure_table();
        let mut worst = 0.0f64;
        for k in 0..d {
            for l in 0..d {
                let prod = table.slice(ndarray::s![k, l, ..]).to_owned();
                let lhs = self.matrix.dot(&prod);
                let rhs = module.left[k].dot(&self.matrix.column(l)) + module.right[l].dot(&self.matrix.column(k));
                worst = worst.max(linalg::vnorm(&(lhs - rhs)));
            }
        }
        worst
    }

    /// `max_k ‖δ(e_k) − (e_k·x − x·e_k)‖`.
    pub fn inner_residual(&self, module: &Bimodule, x: &CVector) -> f64 {
        (0..self.matrix.ncols())
            .map(|k| {
                let r = module.left[k].dot(x) - module.right[k].dot(x) - self.matrix.column(k);
                linalg::vnorm(&r)
            })
            .fold(0.0, f64::max)
    }
}

/// Leibniz system solved on a generating set: the unknowns are the values on
/// the generators, every other value follows from `δ(qg) = q·δ(g) + δ(q)·g`.
struct DerivationSystem {
    spinner: Spinner,
}

fn derivation_system(alg: &MatrixAlgebra, module: &Bimodule, cfg: &ToleranceConfig) -> DerivationSystem {
    let d = alg.dim();
    let dx = module.dim();
    let gens = alg.generators();
    let unknowns = gens.len() * dx;
    let rmats: Vec<CMatrix> = gens.iter().map(|g| alg.right_mult(g)).collect();
    let racts: Vec<CMatrix> = gens.iter().map(|g| module.right_of(alg, g)).collect();
    let mut sp = Spinner::new(d, dx, unknowns, cfg.rank_tol);
    sp.push(alg.unit_coords(), Array2::zeros((dx, unknowns)));
    sp.run(|q, u| {
        let lq = combine(&module.left, q, dx);
        (0..gens.len())
            .map(|j| {
                let mut m = racts[j].dot(u);
                let mut blk = m.slice_mut(ndarray::s![.., j * dx..(j + 1) * dx]);
                blk += &lq;
                (rmats[j].dot(q), m)
            })
            .collect()
    });
    DerivationSystem { spinner: sp }
}

impl DerivationSystem {
    fn derivation(&self, z: &CVector, d: usize, dx: usize) -> Derivation {
        let q = self.spinner.basis_matrix();
        let mut m = linalg::zeros(dx, d);
        for (t, u) in self.spinner.maps().iter().enumerate() {
            let v = u.dot(z);
            for k in 0..d {
                let c = q[[k, t]].conj();
                for i in 0..dx {
                    m[[i, k]] += c * v[i];
                }
            }
        }
        Derivation { matrix: m }
    }

    fn solutions(&self, tol: f64) -> Result<CMatrix> {
        let rel = self.spinner.relation_matrix();
        spin::nullspace_floor(&rel, tol, tol * self.spinner.map_scale())
    }
}

fn check_generated(alg: &MatrixAlgebra, sys: &DerivationSystem) -> Result<()> {
    if sys.spinner.basis().len() != alg.dim() {
        return Err(Error::Invalid("algebra generators do not generate the algebra".into()));
    }
    Ok(())
}

/// Basis of the space of derivations `A → X`.
pub fn derivation_space(alg: &MatrixAlgebra, module: &Bimodule, cfg: &ToleranceConfig) -> Result<Vec<Derivation>> {
    let sys = derivation_system(alg, module, cfg);
    check_generated(alg, &sys)?;
    let null = sys.solutions(cfg.rank_tol)?;
    Ok((0..null.ncols())
        .map(|j| sys.derivation(&null.column(j).to_owned(), alg.dim(), module.dim()))
        .collect())
}

fn inner_map(alg: &MatrixAlgebra, module: &Bimodule, elements: &[CMatrix]) -> CMatrix {
    let blocks: Vec<CMatrix> = elements
        .iter()
        .map(|a| module.left_of(alg, a) - module.right_of(alg, a))
        .collect();
    if blocks.is_empty() {
        return Array2::zeros((0, module.dim()));
    }
    linalg::vstack(&blocks)
}

/// Absolute size below which the inner map is zero.
fn inner_floor(alg: &MatrixAlgebra, module: &Bimodule, elements: &[CMatrix], cfg: &ToleranceConfig) -> f64 {
    let scale = elements
        .iter()
        .map(|a| linalg::fro(&module.left_of(alg, a)) + linalg::fro(&module.right_of(alg, a)))
        .fold(1.0, f64::max);
    cfg.rank_tol * scale
}

/// Orthonormal basis (under the Frobenius inner product on matrices) of the
/// inner derivations.
pub fn inner_derivations(alg: &MatrixAlgebra, module: &Bimodule, cfg: &ToleranceConfig) -> Result<Vec<Derivation>> {
    let (d, dx) = (alg.dim(), module.dim());
    // rows k*dx + i hold δ_x(e_k)_i; reorder into column-major flattening of D
    let m = inner_map(alg, module, alg.basis());
    let rank = linalg::rank_floor(&m, cfg.rank_tol, inner_floor(alg, module, alg.basis(), cfg))?;
    let q = linalg::range_basis(&m, cfg.rank_tol)?;
    let q = q.slice(ndarray::s![.., ..rank.min(q.ncols())]);
    Ok((0..q.ncols())
        .map(|j| Derivation {
            matrix: Array2::from_shape_fn((dx, d), |(i, k)| q[[k * dx + i, j]]),
        })
        .collect())
}

pub fn h1_dimension(alg: &MatrixAlgebra, module: &Bimodule, cfg: &ToleranceConfig) -> Result<usize> {
    let der = derivation_space(alg, module, cfg)?.len();
    let gens = alg.generators();
    let inner = linalg::rank_floor(&inner_map(alg, module, gens), cfg.rank_tol, inner_floor(alg, module, gens, cfg))?;
    Ok(der.saturating_sub(inner))
}

/// `ker(m) ⊆ A ⊗ A` together with its embedding into coefficient space.
#[derive(Debug, Clone)]
pub struct KernelBimodule {
    pub bimodule: Bimodule,
    /// `d² × dim X`, orthonormal columns; row `k*d + l` is the coefficient of `e_k ⊗ e_l`.
    pub embedding: CMatrix,
}

impl KernelBimodule {
    pub fn to_tensor(&self, alg: &MatrixAlgebra, x: &CVector) -> TensorElement {
        let d = alg.dim();
        let v = self.embedding.dot(x);
        TensorElement::from_coefficients(alg, &linalg::unflatten(v.as_slice().expect("contiguous"), d, d))
    }

    pub fn from_tensor(&self, alg: &MatrixAlgebra, u: &TensorElement) -> CVector {
        linalg::dagger(&self.embedding).dot(&linalg::flatten(&u.coefficients(alg)))
    }
}

pub fn kernel_bimodule(alg: &MatrixAlgebra, cfg: &ToleranceConfig) -> Result<KernelBimodule> {
    let d = alg.dim();
    let table = alg.structure_table();
    let mult = Array2::from_shape_fn((d, d * d), |(m, kl)| table[[kl / d, kl % d, m]]);
    let k = if d == 1 {
        Array2::zeros((1, 0))
    } else {
        linalg::nullspace(&mult, cfg.rank_tol)?
    };
    let dx = k.ncols();
    let kh = linalg::dagger(&k);
    let zs: Vec<CMatrix> = (0..dx).map(|j| linalg::unflatten(&k.column(j).to_vec(), d, d)).collect();
    let mut left = Vec::with_capacity(d);
    let mut right = Vec::with_capacity(d);
    for e in alg.basis() {
        let l = alg.left_mult(e);
        let r = alg.right_mult(e).t().to_owned();
        let lz: Vec<CMatrix> = zs.iter().map(|z| l.dot(z)).collect();
        let rz: Vec<CMatrix> = zs.iter().map(|z| z.dot(&r)).collect();
        if dx == 0 {
            left.push(Array2::zeros((0, 0)));
            right.push(Array2::zeros((0, 0)));
        } else {
            left.push(kh.dot(&linalg::stack_flat(&lz)));
            right.push(kh.dot(&linalg::stack_flat(&rz)));
        }
    }
    Ok(KernelBimodule {
        bimodule: Bimodule { dim: dx, left, right },
        embedding: k,
    })
}

/// `a ↦ a ⊗ 1 − 1 ⊗ a` in kernel coordinates.
pub fn canonical_derivation(alg: &MatrixAlgebra, kernel: &KernelBimodule) -> Derivation {
    let d = alg.dim();
    let iota = alg.unit_coords();
    let kh = linalg::dagger(&kernel.embedding);
    let cols: Vec<CVector> = (0..d)
        .map(|k| {
            let mut c = linalg::zeros(d, d);
            for l in 0..d {
                c[[k, l]] += iota[l];
                c[[l, k]] -= iota[l];
            }
            kh.dot(&linalg::flatten(&c))
        })
        .collect();
    Derivation {
        matrix: linalg::hstack(&cols, kernel.bimodule.dim()),
    }
}

/// Minimum-norm `x` with `δ(a) = a·x − x·a`, or `NotInner`.
pub fn solve_inner(alg: &MatrixAlgebra, module: &Bimodule, delta: &Derivation, cfg: &ToleranceConfig) -> Result<CVector> {
    let dx = module.dim();
    if dx == 0 {
        return Ok(CVector::zeros(0));
    }
    let gens = alg.generators();
    let (x, _) = if gens.is_empty() {
        (CVector::zeros(dx), 0.0)
    } else {
        let m = inner_map(alg, module, gens);
        let rhs: Vec<CVector> = gens.iter().map(|g| delta.apply(alg, g)).collect();
        let rhs = ndarray::concatenate(ndarray::Axis(0), &rhs.iter().map(|v| v.view()).collect::<Vec<_>>())
            .expect("equal lengths");
        linalg::lstsq_floor(&m, &rhs, cfg.rank_tol, inner_floor(alg, module, gens, cfg))?
    };
    let residual = delta.inner_residual(module, &x);
    let scale = linalg::fro(&delta.matrix).max(1.0);
    if residual > cfg.verify_tol * scale {
        return Err(Error::NotInner { residual });
    }
    Ok(x)
}

/// Result of the witness formula: `x` and how well it implements δ.
#[derive(Debug, Clone)]
pub struct Witness {
    pub x: CVector,
    pub residual: f64,
}

/// `x = −Σ δ(a_i)·b_i`, which satisfies `δ(a) = a·x − x·a`.
pub fn witness_from_diagonal(
    alg: &MatrixAlgebra,
    u: &TensorElement,
    module: &Bimodule,
    delta: &Derivation,
    cfg: &ToleranceConfig,
) -> Result<Witness> {
    let rep = diagonal::is_diagonal(alg, u, cfg)?;
    if !rep.verdict {
        return Err(Error::DiagonalInvalid {
            unit_residual: rep.unit_residual,
            commutation_residual: rep.commutation_residual,
        });
    }
    let mut x = CVector::zeros(module.dim());
    for (a, b) in u.terms() {
        let da = delta.apply(alg, a);
        x = x - module.right_of(alg, b).dot(&da);
    }
    let residual = delta.inner_residual(module, &x);
    Ok(Witness { x, residual })
}

/// Scalar multiple helper used by callers combining derivations.
pub fn combine_derivations(ds: &[Derivation], coeffs: &[c64]) -> Option<Derivation> {
    let first = ds.first()?;
    let mut m = linalg::zeros(first.matrix.nrows(), first.matrix.ncols());
    for (d, c) in ds.iter().zip(coeffs.iter()) {
        m.scaled_add(*c, &d.matrix);
    }
    Some(Derivation { matrix: m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::generate_algebra;
    use crate::linalg::{eye, unit};

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

    fn scalars(n: usize) -> MatrixAlgebra {
        generate_algebra(&[], true, n, &cfg()).unwrap()
    }

    #[test]
    fn scalars_have_no_derivations() {
        let a = scalars(2);
        let x = Bimodule::regular(&a);
        assert!(derivation_space(&a, &x, &cfg()).unwrap().is_empty());
        assert!(inner_derivations(&a, &x, &cfg()).unwrap().is_empty());
        assert_eq!(h1_dimension(&a, &x, &cfg()).unwrap(), 0);
        let k = kernel_bimodule(&a, &cfg()).unwrap();
        assert_eq!(k.bimodule.dim(), 0);
    }

    #[test]
    fn m2_regular_bimodule() {
        let a = full(2);
        let x = Bimodule::regular(&a);
        let der = derivation_space(&a, &x, &cfg()).unwrap();
        assert_eq!(der.len(), 3);
        for d in &der {
            assert!(d.leibniz_residual(&a, &x) < 1e-10);
        }
        let inner = inner_derivations(&a, &x, &cfg()).unwrap();
        assert_eq!(inner.len(), 3);
        // equal spans: every derivation is inner
        for d in &der {
            solve_inner(&a, &x, d, &cfg()).unwrap();
        }
        assert_eq!(h1_dimension(&a, &x, &cfg()).unwrap(), 0);
    }

    #[test]
    fn trivial_actions_have_no_inner_derivations() {
        // a character of the diagonal algebra acting on ℂ from both sides
        let diag = generate_algebra(&[unit(2, 0, 0)], true, 2, &cfg()).unwrap();
        let chi: Vec<CMatrix> = diag
            .basis()
            .iter()
            .map(|e| eye(1).mapv(|z| z * e[[0, 0]]))
            .collect();
        let x = Bimodule::new(&diag, chi.clone(), chi, &cfg()).unwrap();
        assert!(inner_derivations(&diag, &x, &cfg()).unwrap().is_empty());
    }

    #[test]
    fn kernel_dimensions() {
        assert_eq!(kernel_bimodule(&full(2), &cfg()).unwrap().bimodule.dim(), 12);
        assert_eq!(kernel_bimodule(&t2(), &cfg()).unwrap().bimodule.dim(), 6);
    }

    #[test]
    fn kernel_bimodule_satisfies_axioms() {
        for a in [full(2), t2()] {
            let k = kernel_bimodule(&a, &cfg()).unwrap();
            for (axiom, r) in k.bimodule.axiom_residuals(&a, &cfg()) {
                assert!(r < 1e-12, "{axiom}: {r}");
            }
        }
    }

    #[test]
    fn canonical_derivation_behaviour() {
        let a = full(2);
        let k = kernel_bimodule(&a, &cfg()).unwrap();
        let delta = canonical_derivation(&a, &k);
        assert!(delta.leibniz_residual(&a, &k.bimodule) < 1e-12);
        let v = delta.apply(&a, &unit(2, 0, 1));
        let expect = TensorElement::new(2, vec![(unit(2, 0, 1), eye(2)), (eye(2), unit(2, 0, 1).mapv(|z| -z))]).unwrap();
        assert!(k.to_tensor(&a, &v).distance(&expect) < 1e-12);

        let x = solve_inner(&a, &k.bimodule, &delta, &cfg()).unwrap();
        let w = k.to_tensor(&a, &x);
        let u = diagonal::diagonal_from_witness(&a, &w, &cfg()).unwrap();
        assert!(diagonal::is_diagonal(&a, &u, &cfg()).unwrap().verdict);

        let t = t2();
        let k = kernel_bimodule(&t, &cfg()).unwrap();
        let delta = canonical_derivation(&t, &k);
        assert!(delta.leibniz_residual(&t, &k.bimodule) < 1e-12);
        assert!(linalg::fro(&delta.matrix) > 0.1);
        assert!(matches!(solve_inner(&t, &k.bimodule, &delta, &cfg()), Err(Error::NotInner { .. })));
        let der = derivation_space(&t, &k.bimodule, &cfg()).unwrap().len();
        let inner = inner_derivations(&t, &k.bimodule, &cfg()).unwrap().len();
        assert!(der > inner);
        assert!(h1_dimension(&t, &k.bimodule, &cfg()).unwrap() >= 1);
    }

    #[test]
    fn witness_on_m2_kernel() {
        let a = full(2);
        let k = kernel_bimodule(&a, &cfg()).unwrap();
        let delta = canonical_derivation(&a, &k);
        let u = TensorElement::canonical_matrix_diagonal(2);
        let w = witness_from_diagonal(&a, &u, &k.bimodule, &delta, &cfg()).unwrap();
        assert!(w.residual < 1e-10);
        let zero = Derivation::zero(&a, &k.bimodule);
        let w0 = witness_from_diagonal(&a, &u, &k.bimodule, &zero, &cfg()).unwrap();
        assert_eq!(linalg::vnorm(&w0.x), 0.0);
    }

    #[test]
    fn witness_for_commutator_in_m3() {
        let a = full(3);
        let x = Bimodule::regular(&a);
        let e12 = linalg::flatten(&unit(3, 0, 1));
        let delta = Derivation::inner(&a, &x, &e12);
        let u = diagonal::solve_diagonal(&a, &cfg()).unwrap();
        let w = witness_from_diagonal(&a, &u, &x, &delta, &cfg()).unwrap();
        assert!(w.residual < 1e-10);
        // x − E12 is central, i.e. scalar
        let diff = linalg::unflatten(w.x.as_slice().unwrap(), 3, 3) - unit(3, 0, 1);
        let c = diff[[0, 0]];
        assert!(linalg::fro(&(diff - eye(3).mapv(|z| z * c))) < 1e-10);
    }

    #[test]
    fn generator_actions_extend() {
        let a = t2();
        let gens = vec![unit(2, 0, 0), unit(2, 0, 1)];
        let id = eye(2);
        let left: Vec<CMatrix> = gens.iter().map(|g| linalg::kron(g, &id)).collect();
        let right: Vec<CMatrix> = gens.iter().map(|g| linalg::kron(&id, &g.t().to_owned())).collect();
        let x = Bimodule::from_generator_actions(&a, &gens, &left, &right, &cfg()).unwrap();
        let reference = Bimodule::regular(&a);
        for k in 0..a.dim() {
            assert!(linalg::fro(&(&x.left_actions()[k] - &reference.left_actions()[k])) < 1e-10);
            assert!(linalg::fro(&(&x.right_actions()[k] - &reference.right_actions()[k])) < 1e-10);
        }
        // E11 acting as zero on the left breaks E11·E12 = E12
        let bad_left = vec![linalg::zeros(4, 4), left[1].clone()];
        assert!(matches!(
            Bimodule::from_generator_actions(&a, &gens, &bad_left, &right, &cfg()),
            Err(Error::BimoduleAxiomViolation { .. })
        ));
    }
}
