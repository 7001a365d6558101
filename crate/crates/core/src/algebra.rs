//! Unital subalgebras of `M_n` held as orthonormal bases under the trace
//! inner product `<x, y> = trace(y^* x)`.

use ndarray::{Array1, Array2, Array3};
use rand::Rng;

use crate::config::ToleranceConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector, ONE};
use crate::spin;

const STREAM_GENERATORS: u64 = 0x6765_6e73;
const STREAM_COMMUTANT: u64 = 0x636f_6d6d;

#[derive(Debug, Clone)]
pub struct MatrixAlgebra {
    n: usize,
    basis: Vec<CMatrix>,
    /// `n^2 x dim`, columns are the flattened basis elements.
    frame: CMatrix,
    /// A generating set (unit-norm elements of the algebra); the identity is implicit.
    generators: Vec<CMatrix>,
}

/// Outcome of [`MatrixAlgebra::membership`].
#[derive(Debug, Clone)]
pub enum Membership {
    Member { coords: CVector, residual: f64 },
    NotMember { residual: f64 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member { .. })
    }

    pub fn residual(&self) -> f64 {
        match self {
            Membership::Member { residual, .. } | Membership::NotMember { residual } => *residual,
        }
    }
}

/// Extends the orthonormal family `basis` by the part of `candidates` outside
/// its span. Candidates are normalized first, so `tol` is relative.
fn extend_orthonormal(basis: &mut Vec<CMatrix>, candidates: &[CMatrix], n: usize, tol: f64) -> Result<usize> {
    let mut resid: Vec<CMatrix> = Vec::with_capacity(candidates.len());
    let largest = candidates.iter().map(linalg::fro).fold(0.0, f64::max);
    for c in candidates {
        let nc = linalg::fro(c);
        // numerically zero products would turn into unit-norm noise
        if nc <= tol * largest || nc == 0.0 {
            continue;
        }
        let mut r = c.mapv(|z| z / nc);
        for _ in 0..2 {
            for b in basis.iter() {
                let a = linalg::inner(&r, b);
                r.scaled_add(-a, b);
            }
        }
        resid.push(r);
    }
    if resid.is_empty() {
        return Ok(0);
    }
    let stacked = linalg::stack_flat(&resid);
    let s = linalg::singular_values(&stacked)?;
    let keep = s.iter().filter(|&&x| x > tol).count();
    if keep == 0 {
        return Ok(0);
    }
    let q = linalg::range_basis(&stacked, (tol / s[0]).min(1.0))?;
    let q = q.slice(ndarray::s![.., ..keep]).to_owned();
    for j in 0..q.ncols() {
        let mut m = linalg::unflatten(&q.column(j).to_vec(), n, n);
        // one more pass keeps the family orthonormal to working precision
        for b in basis.iter() {
            let a = linalg::inner(&m, b);
            m.scaled_add(-a, b);
        }
        let nm = linalg::fro(&m);
        basis.push(m.mapv(|z| z / nm));
    }
    Ok(keep)
}

/// Orthonormal basis of the unital algebra generated by `start` under right
/// multiplication by `gens`.
fn close(n: usize, start: &[CMatrix], gens: &[CMatrix], tol: f64) -> Result<Vec<CMatrix>> {
    let mut basis = Vec::new();
    extend_orthonormal(&mut basis, start, n, tol)?;
    loop {
        let products: Vec<CMatrix> = basis
            .iter()
            .flat_map(|b| gens.iter().map(move |g| b.dot(g)))
            .collect();
        let added = extend_orthonormal(&mut basis, &products, n, tol)?;
        if added == 0 || basis.len() == n * n {
            return Ok(basis);
        }
    }
}

fn check_family(mats: &[CMatrix]) -> Result<Option<usize>> {
    let mut n = None;
    for m in mats {
        let k = linalg::check_square(m)?;
        match n {
            None => n = Some(k),
            Some(n0) if n0 != k => return Err(Error::DimensionMismatch { expected: n0, found: k }),
            _ => {}
        }
    }
    Ok(n)
}

/// Builds the smallest unital algebra containing `generators`.
pub fn generate_algebra(generators: &[CMatrix], include_identity: bool, n: usize, cfg: &ToleranceConfig) -> Result<MatrixAlgebra> {
    if let Some(k) = check_family(generators)? {
        if k != n {
            return Err(Error::DimensionMismatch { expected: n, found: k });
        }
    }
    if n == 0 {
        return Err(Error::Invalid("ambient dimension must be positive".into()));
    }
    let mut start = Vec::new();
    if include_identity {
        start.push(linalg::eye(n));
    }
    start.extend(generators.iter().cloned());
    let basis = close(n, &start, generators, cfg.rank_tol)?;
    let gens: Vec<CMatrix> = generators
        .iter()
        .filter_map(|g| {
            let ng = linalg::fro(g);
            (ng > 0.0).then(|| g.mapv(|z| z / ng))
        })
        .collect();
    let alg = MatrixAlgebra::from_parts(n, basis, gens);
    alg.check_unital(cfg)?;
    Ok(alg)
}

impl MatrixAlgebra {
    fn from_parts(n: usize, basis: Vec<CMatrix>, generators: Vec<CMatrix>) -> Self {
        let frame = linalg::stack_flat(&basis);
        let frame = if basis.is_empty() { Array2::zeros((n * n, 0)) } else { frame };
        Self {
            n,
            basis,
            frame,
            generators,
        }
    }

    /// Algebra spanned by `mats`, which must already be closed and unital.
    pub fn from_spanning_set(mats: &[CMatrix], cfg: &ToleranceConfig) -> Result<Self> {
        let n = check_family(mats)?.ok_or_else(|| Error::Invalid("empty spanning set".into()))?;
        let mut basis = Vec::new();
        extend_orthonormal(&mut basis, mats, n, cfg.rank_tol)?;
        let alg = Self::from_parts(n, basis, Vec::new());
        alg.check_unital(cfg)?;
        alg.check_closed(cfg)?;
        let gens = alg.pick_generators(cfg)?;
        Ok(Self { generators: gens, ..alg })
    }

    /// Same as [`from_spanning_set`](Self::from_spanning_set) but with a known generating set.
    pub fn from_spanning_set_with_generators(mats: &[CMatrix], generators: &[CMatrix], cfg: &ToleranceConfig) -> Result<Self> {
        let n = check_family(mats)?.ok_or_else(|| Error::Invalid("empty spanning set".into()))?;
        let mut basis = Vec::new();
        extend_orthonormal(&mut basis, mats, n, cfg.rank_tol)?;
        let gens = generators
            .iter()
            .filter_map(|g| {
                let ng = linalg::fro(g);
                (ng > 0.0).then(|| g.mapv(|z| z / ng))
            })
            .collect();
        let alg = Self::from_parts(n, basis, gens);
        alg.check_unital(cfg)?;
        alg.check_closed(cfg)?;
        Ok(alg)
    }

    /// Random elements until they generate the whole algebra.
    fn pick_generators(&self, cfg: &ToleranceConfig) -> Result<Vec<CMatrix>> {
        let d = self.dim();
        if d <= 1 {
            return Ok(Vec::new());
        }
        let mut rng = cfg.rng(STREAM_GENERATORS);
        let mut gens = Vec::new();
        for _ in 0..d {
            let g = self.random_element(&mut rng);
            let ng = linalg::fro(&g);
            gens.push(g.mapv(|z| z / ng));
            if gens.len() < 2 && d > 2 {
                continue;
            }
            let mut start = vec![linalg::eye(self.n)];
            start.extend(gens.iter().cloned());
            if close(self.n, &start, &gens, cfg.rank_tol)?.len() == d {
                return Ok(gens);
            }
        }
        Ok(self.basis.clone())
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMatrix {
        let c = linalg::random_vector(rng, self.dim());
        self.element(&c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn coords(&self, x: &CMatrix) -> CVector {
        let v = linalg::flatten(x);
        linalg::dagger(&self.frame).dot(&v)
    }

    pub fn element(&self, coords: &CVector) -> CMatrix {
        let v = self.frame.dot(coords);
        linalg::unflatten(v.as_slice().expect("contiguous"), self.n, self.n)
    }

    pub fn project(&self, x: &CMatrix) -> CMatrix {
        self.element(&self.coords(x))
    }

    /// Frobenius distance from `x` to the algebra.
    pub fn distance(&self, x: &CMatrix) -> f64 {
        linalg::fro(&(x - &self.project(x)))
    }

    pub fn unit_coords(&self) -> CVector {
        self.coords(&linalg::eye(self.n))
    }

    pub fn membership(&self, x: &CMatrix, cfg: &ToleranceConfig) -> Result<Membership> {
        let k = linalg::check_square(x)?;
        if k != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: k });
        }
        let coords = self.coords(x);
        let residual = linalg::fro(&(x - &self.element(&coords)));
        if residual <= cfg.verify_tol * (1.0 + linalg::fro(x)) {
            Ok(Membership::Member { coords, residual })
        } else {
            Ok(Membership::NotMember { residual })
        }
    }

    /// `dim x dim` matrix of `x -> g x` in basis coordinates.
    pub fn left_mult(&self, g: &CMatrix) -> CMatrix {
        let prods: Vec<CMatrix> = self.basis.iter().map(|e| g.dot(e)).collect();
        linalg::dagger(&self.frame).dot(&linalg::stack_flat(&prods))
    }

    /// `dim x dim` matrix of `x -> x g` in basis coordinates.
    pub fn right_mult(&self, g: &CMatrix) -> CMatrix {
        let prods: Vec<CMatrix> = self.basis.iter().map(|e| e.dot(g)).collect();
        linalg::dagger(&self.frame).dot(&linalg::stack_flat(&prods))
    }

    /// `table[[k, l, m]] = <e_k e_l, e_m>`.
    pub fn structure_table(&self) -> Array3<c64> {
        let d = self.dim();
        let mut t = Array3::zeros((d, d, d));
        for k in 0..d {
            let lk = self.left_mult(&self.basis[k]);
            for l in 0..d {
                for m in 0..d {
                    t[[k, l, m]] = lk[[m, l]];
                }
            }
        }
        t
    }

    /// Max over the invariants: Gram deviation, unit distance, closure distance.
    pub fn invariant_residuals(&self) -> (f64, f64, f64) {
        let gram = linalg::dagger(&self.frame).dot(&self.frame);
        let gram_res = linalg::fro(&(gram - linalg::eye(self.dim())));
        let unit_res = self.distance(&linalg::eye(self.n));
        let mut closure = 0.0f64;
        for a in &self.basis {
            for b in &self.basis {
                closure = closure.max(self.distance(&a.dot(b)));
            }
        }
        (gram_res, unit_res, closure)
    }

    fn check_unital(&self, cfg: &ToleranceConfig) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::NotUnital { residual: f64::INFINITY });
        }
        let r = self.distance(&linalg::eye(self.n));
        if r > cfg.verify_tol * (1.0 + (self.n as f64).sqrt()) {
            return Err(Error::NotUnital { residual: r });
        }
        Ok(())
    }

    fn check_closed(&self, cfg: &ToleranceConfig) -> Result<()> {
        let mut worst = 0.0f64;
        for a in &self.basis {
            for b in &self.basis {
                let p = a.dot(b);
                worst = worst.max(self.distance(&p) / (1.0 + linalg::fro(&p)));
            }
        }
        if worst > cfg.verify_tol {
            return Err(Error::NotClosed { residual: worst });
        }
        Ok(())
    }

    /// The commutant `{x in M_n : xa = ax for all a}`.
    pub fn commutant(&self, cfg: &ToleranceConfig) -> Result<MatrixAlgebra> {
        let n = self.n;
        // intertwiners of the defining representation with itself, acting on
        // column vectors: C g = g C
        let mut rng = cfg.rng(STREAM_COMMUTANT);
        let mats = spin::intertwiners(&self.generators, &self.generators, n, n, cfg.rank_tol, &mut rng)?;
        MatrixAlgebra::from_spanning_set(&mats, cfg)
    }

    /// Largest projection distance between the spans of two algebras in one ambient space.
    pub fn span_distance(&self, other: &MatrixAlgebra) -> f64 {
        let a = self.basis.iter().map(|b| other.distance(b)).fold(0.0, f64::max);
        let b = other.basis.iter().map(|b| self.distance(b)).fold(0.0, f64::max);
        a.max(b)
    }

    /// Image of the algebra under `x -> t x t_inv`, with the generating set carried along.
    pub fn conjugate(&self, t: &CMatrix, t_inv: &CMatrix, cfg: &ToleranceConfig) -> Result<MatrixAlgebra> {
        let mats: Vec<CMatrix> = self.basis.iter().map(|b| t.dot(b).dot(t_inv)).collect();
        let gens: Vec<CMatrix> = self.generators.iter().map(|g| t.dot(g).dot(t_inv)).collect();
        MatrixAlgebra::from_spanning_set_with_generators(&mats, &gens, cfg)
    }
}

/// Multiplication table of an abstract algebra: `e_i e_j = sum_k table[[i, j, k]] e_k`.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    pub table: Array3<c64>,
    pub unit_index: usize,
}

impl StructureConstants {
    pub fn new(table: Array3<c64>, unit_index: usize) -> Result<Self> {
        let (a, b, c) = table.dim();
        if a != b || b != c {
            return Err(Error::Invalid(format!("structure table must be d x d x d, got {a}x{b}x{c}")));
        }
        if unit_index >= a {
            return Err(Error::Invalid(format!("unit_index {unit_index} out of range for dim {a}")));
        }
        if table.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { table, unit_index })
    }

    pub fn dim(&self) -> usize {
        self.table.dim().0
    }

    /// Structure constants of a basis of matrices; `mats[unit_index]` must be the identity.
    pub fn from_matrices(mats: &[CMatrix], unit_index: usize, cfg: &ToleranceConfig) -> Result<Self> {
        let n = check_family(mats)?.ok_or_else(|| Error::Invalid("empty basis".into()))?;
        let d = mats.len();
        let frame = linalg::stack_flat(mats);
        let mut table = Array3::zeros((d, d, d));
        for i in 0..d {
            for j in 0..d {
                let p = linalg::flatten(&mats[i].dot(&mats[j]));
                let (x, res) = linalg::lstsq(&frame, &p, cfg.rank_tol)?;
                if res > cfg.verify_tol * (1.0 + linalg::vnorm(&p)) {
                    return Err(Error::NotClosed { residual: res });
                }
                for k in 0..d {
                    table[[i, j, k]] = x[k];
                }
            }
        }
        let _ = n;
        Self::new(table, unit_index)
    }

    pub fn associativity_residual(&self) -> f64 {
        let d = self.dim();
        let t = &self.table;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let mut lhs = c64::new(0.0, 0.0);
                        let mut rhs = c64::new(0.0, 0.0);
                        for m in 0..d {
                            lhs += t[[i, j, m]] * t[[m, k, l]];
                            rhs += t[[j, k, m]] * t[[i, m, l]];
                        }
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        worst
    }

    pub fn unit_residual(&self) -> f64 {
        let d = self.dim();
        let u = self.unit_index;
        let mut worst = 0.0f64;
        for j in 0..d {
            for k in 0..d {
                let delta = if j == k { ONE } else { c64::new(0.0, 0.0) };
                worst = worst.max((self.table[[u, j, k]] - delta).norm());
                worst = worst.max((self.table[[j, u, k]] - delta).norm());
            }
        }
        worst
    }

    /// Matrix of left multiplication by `e_i`: column `j` holds the coordinates of `e_i e_j`.
    pub fn left_matrix(&self, i: usize) -> CMatrix {
        let d = self.dim();
        Array2::from_shape_fn((d, d), |(k, j)| self.table[[i, j, k]])
    }
}

/// Faithful unital representation of an abstract algebra on itself by left multiplication.
pub fn left_regular_representation(sc: &StructureConstants, cfg: &ToleranceConfig) -> Result<MatrixAlgebra> {
    let scale = 1.0 + sc.table.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let residual = sc.associativity_residual().max(sc.unit_residual());
    if residual > cfg.verify_tol * scale * scale {
        return Err(Error::AssociativityViolation { residual });
    }
    let mats: Vec<CMatrix> = (0..sc.dim()).map(|i| sc.left_matrix(i)).collect();
    MatrixAlgebra::from_spanning_set_with_generators(&mats, &mats, cfg)
}

/// Coordinates of a tensor-free helper: `1` in the standard basis of `C^d`.
pub fn standard_vector(d: usize, i: usize) -> CVector {
    let mut v = Array1::zeros(d);
    v[i] = ONE;
    v
}
