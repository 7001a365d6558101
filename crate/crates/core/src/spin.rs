//! Spinning: close a vector space under a set of linear maps while tracking a
//! linear "image" attached to every vector.
//!
//! Each accepted basis vector `q_t` carries a map `U_t` (rows x unknowns) that
//! gives the image of `q_t` as a function of the unknowns. Candidates that turn
//! out to be linear combinations of accepted vectors become *relations*: the
//! tracked combination of maps must vanish. The accepted candidate is always the
//! one with the largest residual, which keeps the tracked maps well scaled.

use ndarray::Array2;
use rand::Rng;

use crate::error::Result;
use crate::linalg::{self, c64, vdot, vnorm, CMatrix, CVector};

struct Candidate {
    residual: CVector,
    map: CMatrix,
}

pub struct Spinner {
    dim: usize,
    rows: usize,
    unknowns: usize,
    tol: f64,
    basis: Vec<CVector>,
    maps: Vec<CMatrix>,
    pending: Vec<Candidate>,
    relations: Vec<CMatrix>,
    scale: f64,
}

fn pad_cols(m: &mut CMatrix, cols: usize) {
    if m.ncols() < cols {
        let mut out = Array2::zeros((m.nrows(), cols));
        out.slice_mut(ndarray::s![.., ..m.ncols()]).assign(m);
        *m = out;
    }
}

impl Spinner {
    pub fn new(dim: usize, rows: usize, unknowns: usize, tol: f64) -> Self {
        Self {
            dim,
            rows,
            unknowns,
            tol,
            basis: Vec::new(),
            maps: Vec::new(),
            pending: Vec::new(),
            relations: Vec::new(),
            scale: 0.0,
        }
    }

    pub fn unknowns(&self) -> usize {
        self.unknowns
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_complete(&self) -> bool {
        self.basis.len() == self.dim
    }

    pub fn basis(&self) -> &[CVector] {
        &self.basis
    }

    pub fn maps(&self) -> &[CMatrix] {
        &self.maps
    }

    /// Appends `k` fresh unknowns and returns the offset of the first one.
    pub fn add_unknowns(&mut self, k: usize) -> usize {
        let off = self.unknowns;
        self.unknowns += k;
        let cols = self.unknowns;
        for m in self.maps.iter_mut().chain(self.relations.iter_mut()) {
            pad_cols(m, cols);
        }
        for c in self.pending.iter_mut() {
            pad_cols(&mut c.map, cols);
        }
        off
    }

    pub fn push(&mut self, vector: CVector, mut map: CMatrix) {
        pad_cols(&mut map, self.unknowns);
        let norm0 = vnorm(&vector);
        self.scale = self.scale.max(norm0);
        if norm0 == 0.0 {
            // a zero vector is a relation with nothing subtracted
            self.relations.push(map);
            return;
        }
        let mut r = vector;
        for _ in 0..2 {
            for (q, u) in self.basis.iter().zip(self.maps.iter()) {
                let a = vdot(q, &r);
                r.scaled_add(-a, q);
                map.scaled_add(-a, u);
            }
        }
        self.pending.push(Candidate {
            residual: r,
            map,
        });
    }

    /// Runs to closure. `expand` receives each newly accepted `(q, U)` and
    /// returns the candidates it generates.
    pub fn run<F>(&mut self, mut expand: F)
    where
        F: FnMut(&CVector, &CMatrix) -> Vec<(CVector, CMatrix)>,
    {
        loop {
            if self.pending.is_empty() {
                return;
            }
            let (best, ratio) = self
                .pending
                .iter()
                .enumerate()
                .map(|(i, c)| (i, vnorm(&c.residual) / self.scale))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if ratio <= self.tol || self.basis.len() == self.dim {
                for c in self.pending.drain(..) {
                    self.relations.push(c.map);
                }
                return;
            }
            let mut cand = self.pending.swap_remove(best);
            for (q, u) in self.basis.iter().zip(self.maps.iter()) {
                let a = vdot(q, &cand.residual);
                cand.residual.scaled_add(-a, q);
                cand.map.scaled_add(-a, u);
            }
            let nr = vnorm(&cand.residual);
            let inv = c64::new(1.0 / nr, 0.0);
            let q = cand.residual.mapv(|z| z * inv);
            let u = cand.map.mapv(|z| z * inv);
            for c in self.pending.iter_mut() {
                let a = vdot(&q, &c.residual);
                c.residual.scaled_add(-a, &q);
                c.map.scaled_add(-a, &u);
            }
            self.basis.push(q.clone());
            self.maps.push(u.clone());
            for (v, m) in expand(&q, &u) {
                self.push(v, m);
            }
        }
    }

    /// Relations stacked into one matrix (`rows * count` x unknowns).
    pub fn relation_matrix(&self) -> CMatrix {
        let mut blocks = self.relations.clone();
        for b in blocks.iter_mut() {
            pad_cols(b, self.unknowns);
        }
        if blocks.is_empty() {
            return Array2::zeros((0, self.unknowns));
        }
        linalg::vstack(&blocks)
    }

    /// Largest Frobenius norm among tracked maps, a scale for absolute cutoffs.
    pub fn map_scale(&self) -> f64 {
        self.maps
            .iter()
            .map(linalg::fro)
            .fold(0.0, f64::max)
            .max(1.0)
    }

    /// Basis as columns of a `dim x dim` matrix.
    pub fn basis_matrix(&self) -> CMatrix {
        linalg::hstack(&self.basis, self.dim)
    }

    /// Given unknowns `z`, the matrix `X` with `X q_t = U_t z` for every basis vector.
    pub fn assemble(&self, z: &CVector) -> CMatrix {
        let mut y = Array2::zeros((self.rows, self.basis.len()));
        for (t, u) in self.maps.iter().enumerate() {
            y.column_mut(t).assign(&u.dot(z));
        }
        y.dot(&linalg::dagger(&self.basis_matrix()))
    }
}

/// Nullspace with an absolute floor on the singular values treated as zero.
pub fn nullspace_floor(m: &CMatrix, tol: f64, floor: f64) -> Result<CMatrix> {
    let (rows, cols) = m.dim();
    if cols == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    if rows == 0 {
        return Ok(linalg::eye(cols));
    }
    let s = linalg::singular_values(m)?;
    let cut = (s[0] * tol).max(floor);
    let r = s.iter().filter(|&&x| x > cut).count();
    if r == 0 {
        return Ok(linalg::eye(cols));
    }
    let tol_eff = if s[0] > 0.0 { cut / s[0] } else { tol };
    let n = linalg::nullspace(m, tol_eff)?;
    debug_assert_eq!(n.ncols(), cols - r);
    Ok(n)
}

/// Basis of `{C : dst[g] C = C src[g] for all g}` (C is `d_t x d_s`),
/// orthonormal under the Frobenius inner product.
pub fn intertwiners<R: Rng + ?Sized>(
    src: &[CMatrix],
    dst: &[CMatrix],
    d_src: usize,
    d_dst: usize,
    tol: f64,
    rng: &mut R,
) -> Result<Vec<CMatrix>> {
    let mut sp = Spinner::new(d_src, d_dst, 0, tol);
    while !sp.is_complete() {
        let off = sp.add_unknowns(d_dst);
        let mut seed_map = Array2::zeros((d_dst, sp.unknowns()));
        for i in 0..d_dst {
            seed_map[[i, off + i]] = linalg::ONE;
        }
        sp.push(linalg::random_vector(rng, d_src), seed_map);
        sp.run(|q, u| {
            src.iter()
                .zip(dst.iter())
                .map(|(s, d)| (s.dot(q), d.dot(u)))
                .collect()
        });
    }
    let rel = sp.relation_matrix();
    let null = nullspace_floor(&rel, tol, tol * sp.map_scale())?;
    let mats: Vec<CMatrix> = (0..null.ncols())
        .map(|j| sp.assemble(&null.column(j).to_owned()))
        .collect();
    if mats.is_empty() {
        return Ok(mats);
    }
    let q = linalg::range_basis(&linalg::stack_flat(&mats), tol)?;
    Ok((0..q.ncols())
        .map(|j| linalg::unflatten(&q.column(j).to_vec(), d_dst, d_src))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro, random_matrix, unit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn commutant_of_matrix_units_is_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gens = vec![unit(3, 0, 1), unit(3, 1, 2), unit(3, 2, 0)];
        let c = intertwiners(&gens, &gens, 3, 3, 1e-10, &mut rng).unwrap();
        assert_eq!(c.len(), 1);
        let x = &c[0];
        assert!(fro(&(x - &crate::linalg::eye(3).mapv(|z| z * x[[0, 0]]))) < 1e-10);
    }

    #[test]
    fn intertwiners_between_similar_reps() {
        // dst = T src T^{-1}; the intertwiner space of an irreducible pair is span{T}
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        let t = crate::linalg::random_conditioned(&mut rng, 3, 5.0);
        let ti = crate::linalg::inverse(&t).unwrap();
        let src = vec![a.clone(), b.clone()];
        let dst = vec![t.dot(&a).dot(&ti), t.dot(&b).dot(&ti)];
        let c = intertwiners(&src, &dst, 3, 3, 1e-10, &mut rng).unwrap();
        assert_eq!(c.len(), 1);
        for (s, d) in src.iter().zip(dst.iter()) {
            assert!(fro(&(d.dot(&c[0]) - c[0].dot(s))) < 1e-9);
        }
    }

    #[test]
    fn no_maps_gives_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = intertwiners(&[], &[], 2, 3, 1e-10, &mut rng).unwrap();
        assert_eq!(c.len(), 6);
    }
}
