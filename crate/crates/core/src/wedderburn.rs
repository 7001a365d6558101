//! Block diagonalisation of a semisimple algebra by repeated splitting along
//! invariant projections.
//!
//! A split at `p` uses the inner derivation `δ(a) = pa(1−p) = a·x − x·a` with
//! `x ∈ pM_n(1−p)`; then `y = 1 + x` conjugates A onto an algebra that
//! commutes with `p`.

use ndarray::s;
use ndarray_linalg::SVD;
use serde::Serialize;

use crate::algebra::MatrixAlgebra;
use crate::cohomology::{self, Bimodule, Derivation};
use crate::config::ToleranceConfig;
use crate::diagonal::{self, TensorElement};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector};
use crate::spin;

const STREAM_COMMUTANT: u64 = 0x7765_6464;
/// Relative singular-value level separating "zero" from "full" in the
/// kernel dichotomy.
const DICHOTOMY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum Projection {
    /// `dim A = n²`: no proper invariant subspace.
    Irreducible,
    /// Orthogonal projection `p = V V*` onto an invariant subspace.
    Invariant { p: CMatrix, range: CMatrix, residual: f64 },
}

fn cluster_gap(c: &CMatrix, cfg: &ToleranceConfig) -> f64 {
    cfg.verify_tol.max(1e-8) * linalg::op_norm(c)
}

/// Eigenvalue clusters under single linkage at distance `gap`, each sorted
/// and the list ordered by its smallest member, lexicographically by (re, im).
fn clusters(mut vals: Vec<c64>, gap: f64) -> Vec<Vec<c64>> {
    let lex = |a: &c64, b: &c64| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im));
    vals.sort_by(lex);
    let n = vals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut j = i;
        while p[j] != r {
            let next = p[j];
            p[j] = r;
            j = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (vals[i] - vals[j]).norm() <= gap {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut out: Vec<(usize, Vec<c64>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match out.iter_mut().find(|(root, _)| *root == r) {
            Some((_, v)) => v.push(vals[i]),
            None => out.push((r, vec![vals[i]])),
        }
    }
    out.into_iter().map(|(_, v)| v).collect()
}

/// Worst `‖(1−p) e p‖` over the basis of A.
fn invariance_residual(alg: &MatrixAlgebra, range: &CMatrix) -> f64 {
    let n = alg.n();
    let proj = range.dot(&linalg::dagger(range));
    let q = linalg::eye(n) - &proj;
    alg.basis()
        .iter()
        .map(|e| linalg::fro(&q.dot(e).dot(&proj)))
        .fold(0.0, f64::max)
}

/// Finds an A-invariant subspace as an eigenspace of a random element of the commutant.
pub fn invariant_projection(alg: &MatrixAlgebra, cfg: &ToleranceConfig) -> Result<Projection> {
    let n = alg.n();
    if alg.dim() == n * n {
        return Ok(Projection::Irreducible);
    }
    let mut rng = cfg.rng(STREAM_COMMUTANT);
    let gens = alg.generators();
    let comm = spin::intertwiners(gens, gens, n, n, cfg.rank_tol, &mut rng)?;
    if comm.len() <= 1 {
        return Err(Error::NoNonScalarCommutant);
    }
    let coeffs = linalg::random_vector(&mut rng, comm.len());
    let mut c = linalg::zeros(n, n);
    for (m, z) in comm.iter().zip(coeffs.iter()) {
        c.scaled_add(*z, m);
    }
    let gap = cluster_gap(&c, cfg);
    let groups = clusters(linalg::eigenvalues(&c)?, gap);
    let first = &groups[0];
    let lambda = first.iter().sum::<c64>() / first.len() as f64;
    let shifted = &c - &linalg::eye(n).mapv(|z| z * lambda);
    let (_, sv, vt) = shifted.svd(false, true)?;
    let vt = vt.expect("VT");
    // kernel of c − λ, which is invariant because c commutes with A
    let k = sv.iter().filter(|&&x| x <= gap).count();
    if k == 0 || k == n {
        return Err(Error::NoNonScalarCommutant);
    }
    let range = linalg::dagger(&vt.slice(s![n - k.., ..]).to_owned());
    let residual = invariance_residual(alg, &range);
    if residual > cfg.verify_tol {
        return Err(Error::NotInvariant { residual });
    }
    let p = range.dot(&linalg::dagger(&range));
    Ok(Projection::Invariant { p, range, residual })
}

/// Output of one splitting step.
#[derive(Debug, Clone)]
pub struct Split {
    pub x: CMatrix,
    pub y: CMatrix,
    pub y_inv: CMatrix,
    pub algebra: MatrixAlgebra,
    /// Worst `‖p b − b p‖` over an orthonormal basis of the new algebra.
    pub commutation_residual: f64,
    /// How well `x` implements `δ(a) = pa(1−p)`.
    pub witness_residual: f64,
}

/// The corner bimodule `pM_n(1−p)` with `x = V Z W*`, `Z` flattened row-major.
fn corner_bimodule(alg: &MatrixAlgebra, v: &CMatrix, w: &CMatrix) -> Result<(Bimodule, Derivation)> {
    let (r, s) = (v.ncols(), w.ncols());
    let (vh, wh) = (linalg::dagger(v), linalg::dagger(w));
    let (ir, is) = (linalg::eye(r), linalg::eye(s));
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut cols: Vec<CVector> = Vec::new();
    for e in alg.basis() {
        left.push(linalg::kron(&vh.dot(e).dot(v), &is));
        right.push(linalg::kron(&ir, &wh.dot(e).dot(w).t().to_owned()));
        cols.push(linalg::flatten(&vh.dot(e).dot(w)));
    }
    let module = Bimodule::unchecked(alg, left, right)?;
    let delta = Derivation {
        matrix: linalg::hstack(&cols, r * s),
    };
    Ok((module, delta))
}

/// One split of A along the invariant subspace with orthonormal basis `range`.
/// With a diagonal the witness comes from the diagonal formula and is
/// cross-checked against the least-squares solution; without one it is the
/// least-squares solution alone.
pub fn split_step(alg: &MatrixAlgebra, u: Option<&TensorElement>, range: &CMatrix, cfg: &ToleranceConfig) -> Result<Split> {
    let n = alg.n();
    let w = linalg::complement(range);
    let (module, delta) = corner_bimodule(alg, range, &w)?;
    let scale = linalg::fro(&delta.matrix).max(1.0);
    let inner = match cohomology::solve_inner(alg, &module, &delta, cfg) {
        Ok(x) => x,
        Err(Error::NotInner { residual }) => return Err(Error::WitnessSolveFailed { residual }),
        Err(e) => return Err(e),
    };
    let z = match u {
        Some(u) => {
            let wit = cohomology::witness_from_diagonal(alg, u, &module, &delta, cfg)?;
            if wit.residual > cfg.verify_tol * scale {
                return Err(Error::WitnessSolveFailed { residual: wit.residual });
            }
            // both implement δ, so they differ by an element commuting with A
            let diff = &wit.x - &inner;
            let drift = Derivation::inner(alg, &module, &diff);
            let r = linalg::fro(&drift.matrix);
            if r > cfg.verify_tol * scale {
                return Err(Error::WitnessSolveFailed { residual: r });
            }
            wit.x
        }
        None => inner,
    };
    let witness_residual = delta.inner_residual(&module, &z);
    let zm = linalg::unflatten(z.as_slice().expect("contiguous"), range.ncols(), w.ncols());
    let x = range.dot(&zm).dot(&linalg::dagger(&w));
    let id = linalg::eye(n);
    let y = &id + &x;
    let y_inv = &id - &x;
    let algebra = alg.conjugate(&y, &y_inv, cfg)?;
    let p = range.dot(&linalg::dagger(range));
    let commutation_residual = algebra
        .basis()
        .iter()
        .map(|b| linalg::fro(&(p.dot(b) - b.dot(&p))))
        .fold(0.0, f64::max);
    if commutation_residual > cfg.verify_tol {
        return Err(Error::CommutationCheckFailed {
            residual: commutation_residual,
        });
    }
    Ok(Split {
        x,
        y,
        y_inv,
        algebra,
        commutation_residual,
        witness_residual,
    })
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DecompositionResiduals {
    /// Per block: worst relative off-block mass of `T e T⁻¹` in that block's rows and columns.
    pub off_block: Vec<f64>,
    /// Per block: dimension of `π_i(A)`.
    pub block_dims: Vec<usize>,
    /// One per split, in recursion order.
    pub split_commutation: Vec<f64>,
    pub split_witness: Vec<f64>,
    pub conjugator_condition: f64,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub conjugator: CMatrix,
    pub conjugator_inv: CMatrix,
    pub block_sizes: Vec<usize>,
    /// `block_maps[i][k] = π_i(e_k)` for the basis of the input algebra.
    pub block_maps: Vec<Vec<CMatrix>>,
    pub signature: Vec<usize>,
    pub residuals: DecompositionResiduals,
}

struct Node {
    t: CMatrix,
    t_inv: CMatrix,
    sizes: Vec<usize>,
    commutation: Vec<f64>,
    witness: Vec<f64>,
}

fn compress(alg: &MatrixAlgebra, v: &CMatrix, cfg: &ToleranceConfig) -> Result<MatrixAlgebra> {
    let vh = linalg::dagger(v);
    let mats: Vec<CMatrix> = alg.basis().iter().map(|e| vh.dot(e).dot(v)).collect();
    let gens: Vec<CMatrix> = alg.generators().iter().map(|g| vh.dot(g).dot(v)).collect();
    MatrixAlgebra::from_spanning_set_with_generators(&mats, &gens, cfg)
}

fn recurse(alg: &MatrixAlgebra, u: Option<&TensorElement>, depth: usize, max_depth: usize, cfg: &ToleranceConfig) -> Result<Node> {
    let n = alg.n();
    if depth > max_depth {
        return Err(Error::RecursionDepthExceeded(depth));
    }
    let range = match invariant_projection(alg, cfg)? {
        Projection::Irreducible => {
            return Ok(Node {
                t: linalg::eye(n),
                t_inv: linalg::eye(n),
                sizes: vec![n],
                commutation: Vec::new(),
                witness: Vec::new(),
            })
        }
        Projection::Invariant { range, .. } => range,
    };
    let split = split_step(alg, u, &range, cfg)?;
    let w = linalg::complement(&range);
    let conj_u = u.map(|u| u.map_factors(n, |a| split.y.dot(a).dot(&split.y_inv), |b| split.y.dot(b).dot(&split.y_inv)));
    let mut children = Vec::new();
    for v in [&range, &w] {
        let vh = linalg::dagger(v);
        let sub = compress(&split.algebra, v, cfg)?;
        let sub_u = conj_u
            .as_ref()
            .map(|u| u.map_factors(v.ncols(), |a| vh.dot(a).dot(v), |b| vh.dot(b).dot(v)));
        children.push(recurse(&sub, sub_u.as_ref(), depth + 1, max_depth, cfg)?);
    }
    let (c1, c2) = (&children[0], &children[1]);
    let q = ndarray::concatenate(ndarray::Axis(1), &[range.view(), w.view()]).expect("same rows");
    let d = linalg::direct_sum(&[c1.t.clone(), c2.t.clone()]);
    let d_inv = linalg::direct_sum(&[c1.t_inv.clone(), c2.t_inv.clone()]);
    let t = d.dot(&linalg::dagger(&q)).dot(&split.y);
    let t_inv = split.y_inv.dot(&q).dot(&d_inv);
    let mut sizes = c1.sizes.clone();
    sizes.extend(&c2.sizes);
    let mut commutation = vec![split.commutation_residual];
    commutation.extend(&c1.commutation);
    commutation.extend(&c2.commutation);
    let mut witness = vec![split.witness_residual];
    witness.extend(&c1.witness);
    witness.extend(&c2.witness);
    Ok(Node {
        t,
        t_inv,
        sizes,
        commutation,
        witness,
    })
}

fn assemble(alg: &MatrixAlgebra, node: Node, cfg: &ToleranceConfig) -> Result<DecompositionResult> {
    let nb = node.sizes.len();
    let mut block_maps: Vec<Vec<CMatrix>> = vec![Vec::new(); nb];
    let mut off_block = vec![0.0f64; nb];
    for e in alg.basis() {
        let m = node.t.dot(e).dot(&node.t_inv);
        let total = linalg::fro(&m).max(f64::MIN_POSITIVE);
        let mut off = 0;
        for (i, &k) in node.sizes.iter().enumerate() {
            block_maps[i].push(m.slice(s![off..off + k, off..off + k]).to_owned());
            let rows = m.slice(s![off..off + k, ..]);
            let cols = m.slice(s![.., off..off + k]);
            let inside = linalg::fro_norm(m.slice(s![off..off + k, off..off + k]).iter());
            let row_mass = linalg::fro_norm(rows.iter());
            let col_mass = linalg::fro_norm(cols.iter());
            let stray = (row_mass.powi(2) - inside.powi(2)).max(0.0).sqrt()
                + (col_mass.powi(2) - inside.powi(2)).max(0.0).sqrt();
            off_block[i] = off_block[i].max(stray / total);
            off += k;
        }
    }
    let mut block_dims = Vec::with_capacity(nb);
    for (i, &k) in node.sizes.iter().enumerate() {
        let dim = linalg::rank(&linalg::stack_flat(&block_maps[i]), cfg.rank_tol.max(1e-9))?;
        block_dims.push(dim);
        if dim != k * k {
            return Err(Error::BurnsideCheckFailed { size: k, dim });
        }
    }
    let worst = off_block.iter().copied().fold(0.0, f64::max);
    if worst > cfg.verify_tol {
        return Err(Error::CommutationCheckFailed { residual: worst });
    }
    let conjugator_condition = linalg::condition_number(&node.t)?;
    let mut result = DecompositionResult {
        conjugator: node.t,
        conjugator_inv: node.t_inv,
        block_sizes: node.sizes,
        block_maps,
        signature: Vec::new(),
        residuals: DecompositionResiduals {
            off_block,
            block_dims,
            split_commutation: node.commutation,
            split_witness: node.witness,
            conjugator_condition,
        },
    };
    result.signature = signature(alg, &result, cfg)?;
    Ok(result)
}

/// Decomposes A given a diagonal `u`, which supplies every splitting witness.
pub fn decompose(alg: &MatrixAlgebra, u: &TensorElement, cfg: &ToleranceConfig) -> Result<DecompositionResult> {
    let rep = diagonal::is_diagonal(alg, u, cfg)?;
    if !rep.verdict {
        return Err(Error::DiagonalInvalid {
            unit_residual: rep.unit_residual,
            commutation_residual: rep.commutation_residual,
        });
    }
    let node = recurse(alg, Some(u), 0, alg.n(), cfg)?;
    assemble(alg, node, cfg)
}

/// Decomposes A solving for each splitting witness directly. Fails on
/// algebras that are not direct sums of matrix algebras.
pub fn decompose_without_diagonal(alg: &MatrixAlgebra, cfg: &ToleranceConfig) -> Result<DecompositionResult> {
    let node = recurse(alg, None, 0, alg.n(), cfg)?;
    assemble(alg, node, cfg)
}

/// One size per isomorphism class of blocks. Blocks `i` and `j` are
/// equivalent when `π_j` vanishes on `ker π_i`.
pub fn signature(alg: &MatrixAlgebra, result: &DecompositionResult, cfg: &ToleranceConfig) -> Result<Vec<usize>> {
    let nb = result.block_sizes.len();
    let d = alg.dim();
    let ps: Vec<CMatrix> = result.block_maps.iter().map(|maps| linalg::stack_flat(maps)).collect();
    let kernels: Vec<CMatrix> = ps
        .iter()
        .map(|p| {
            if p.nrows() >= d && linalg::rank(p, cfg.rank_tol.max(1e-9)).ok() == Some(d) {
                Ok(linalg::zeros(d, 0))
            } else {
                spin::nullspace_floor(p, DICHOTOMY_TOL, 0.0)
            }
        })
        .collect::<Result<_>>()?;
    let mut parent: Vec<usize> = (0..nb).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..nb {
        for j in 0..nb {
            if i == j {
                continue;
            }
            let img = ps[j].dot(&kernels[i]);
            let full = result.block_sizes[j].pow(2);
            let scale = linalg::op_norm(&ps[j]).max(f64::MIN_POSITIVE);
            let sv = if img.ncols() == 0 {
                Vec::new()
            } else {
                linalg::singular_values(&img)?
            };
            let big = sv.iter().filter(|&&x| x > DICHOTOMY_TOL * scale).count();
            if big == 0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            } else if big != full {
                let residual = sv.iter().filter(|&&x| x > DICHOTOMY_TOL * scale).fold(f64::INFINITY, |m, &x| m.min(x)) / scale;
                return Err(Error::DichotomyViolation { residual });
            }
        }
    }
    let mut seen = Vec::new();
    let mut sig = Vec::new();
    for i in 0..nb {
        let r = find(&mut parent, i);
        if !seen.contains(&r) {
            seen.push(r);
            sig.push(result.block_sizes[i]);
        }
    }
    Ok(sig)
}

/// `dim A` predicted by a signature: the sum of squared sizes.
pub fn signature_dimension(sig: &[usize]) -> usize {
    sig.iter().map(|k| k * k).sum()
}
