//! Seeded test corpora: conjugated direct sums of matrix algebras, a fixed
//! list of non-semisimple algebras, and random bimodules.

use rand::Rng;

use crate::algebra::{generate_algebra, MatrixAlgebra};
use crate::cohomology::Bimodule;
use crate::config::ToleranceConfig;
use crate::error::Result;
use crate::linalg::{self, unit, CMatrix};

pub const MAX_AMBIENT: usize = 8;
pub const MAX_DIM: usize = 14;
pub const MAX_CONDITION: f64 = 100.0;

#[derive(Debug, Clone)]
pub struct SemisimpleFixture {
    /// Block sizes in the order they appear on the diagonal before conjugation.
    pub blocks: Vec<usize>,
    pub t: CMatrix,
    pub t_inv: CMatrix,
    pub condition: f64,
    pub algebra: MatrixAlgebra,
}

/// Block sizes from `{1, 2, 3}` with `Σ n_i ≤ 8` and `Σ n_i² ≤ 14`.
pub fn random_blocks<R: Rng + ?Sized>(rng: &mut R) -> Vec<usize> {
    let mut blocks = Vec::new();
    let (mut n, mut d) = (0, 0);
    loop {
        let fits: Vec<usize> = (1..=3).filter(|s| n + s <= MAX_AMBIENT && d + s * s <= MAX_DIM).collect();
        if fits.is_empty() || (!blocks.is_empty() && rng.random_bool(0.35)) {
            return blocks;
        }
        let s = fits[rng.random_range(0..fits.len())];
        blocks.push(s);
        n += s;
        d += s * s;
    }
}

/// `T (⊕ M_{n_i}) T⁻¹` generated by two random block-diagonal elements.
pub fn semisimple_fixture<R: Rng + ?Sized>(rng: &mut R, blocks: &[usize], cfg: &ToleranceConfig) -> Result<SemisimpleFixture> {
    let n: usize = blocks.iter().sum();
    let kappa = rng.random_range(1.0..MAX_CONDITION);
    let t = linalg::random_conditioned(rng, n, kappa);
    let t_inv = linalg::inverse(&t)?;
    let condition = linalg::condition_number(&t)?;
    let gens: Vec<CMatrix> = (0..2)
        .map(|_| {
            let parts: Vec<CMatrix> = blocks.iter().map(|&s| linalg::random_matrix(rng, s, s)).collect();
            t.dot(&linalg::direct_sum(&parts)).dot(&t_inv)
        })
        .collect();
    let algebra = generate_algebra(&gens, true, n, cfg)?;
    Ok(SemisimpleFixture { blocks: blocks.to_vec(), t, t_inv, condition, algebra })
}

pub fn semisimple_corpus(count: usize, cfg: &ToleranceConfig) -> Result<Vec<SemisimpleFixture>> {
    let mut rng = cfg.rng(0x5e15);
    (0..count)
        .map(|_| {
            let blocks = random_blocks(&mut rng);
            semisimple_fixture(&mut rng, &blocks, cfg)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct NamedAlgebra {
    pub name: &'static str,
    pub algebra: MatrixAlgebra,
}

fn e(n: usize, i: usize, j: usize) -> CMatrix {
    unit(n, i, j)
}

fn jordan(n: usize) -> CMatrix {
    (0..n - 1).map(|i| e(n, i, i + 1)).fold(linalg::zeros(n, n), |acc, x| acc + x)
}

fn upper_triangular(n: usize) -> Vec<CMatrix> {
    let mut g: Vec<CMatrix> = (0..n - 1).map(|i| e(n, i, i)).collect();
    g.extend((0..n - 1).map(|i| e(n, i, i + 1)));
    g
}

/// `[[M_p, *], [0, M_q]]`.
fn block_triangular(p: usize, q: usize) -> Vec<CMatrix> {
    let n = p + q;
    let mut g = vec![e(n, 0, 0)];
    for i in 0..n - 1 {
        if i + 1 != p {
            g.push(e(n, i, i + 1));
            g.push(e(n, i + 1, i));
        }
    }
    g.push(e(n, p - 1, p));
    g
}

fn embed(n: usize, offset: usize, m: &CMatrix) -> CMatrix {
    let mut out = linalg::zeros(n, n);
    let k = m.nrows();
    out.slice_mut(ndarray::s![offset..offset + k, offset..offset + k]).assign(m);
    out
}

fn conjugate_all<R: Rng + ?Sized>(rng: &mut R, gens: Vec<CMatrix>) -> Result<Vec<CMatrix>> {
    let n = gens[0].nrows();
    let kappa = rng.random_range(1.0..MAX_CONDITION);
    let t = linalg::random_conditioned(rng, n, kappa);
    let ti = linalg::inverse(&t)?;
    Ok(gens.iter().map(|g| t.dot(g).dot(&ti)).collect())
}

/// Twenty unital algebras with non-zero radical.
pub fn non_semisimple_corpus(cfg: &ToleranceConfig) -> Result<Vec<NamedAlgebra>> {
    let mut rng = cfg.rng(0x4a0d);
    let t2 = upper_triangular(2);
    let mut list: Vec<(&'static str, Vec<CMatrix>)> = vec![
        ("T2", t2.clone()),
        ("T3", upper_triangular(3)),
        ("T4", upper_triangular(4)),
        ("jordan commutant 2", vec![jordan(2)]),
        ("jordan commutant 3", vec![jordan(3)]),
        ("jordan commutant 4", vec![jordan(4)]),
        ("block triangular 1+2", block_triangular(1, 2)),
        ("block triangular 2+1", block_triangular(2, 1)),
        ("block triangular 2+2", block_triangular(2, 2)),
        ("T2 + M1", vec![e(3, 0, 0), e(3, 0, 1), e(3, 2, 2)]),
        ("T2 + T2", vec![e(4, 0, 0), e(4, 0, 1), e(4, 2, 2), e(4, 2, 3)]),
        ("T2 amplified", vec![e(4, 0, 0) + e(4, 2, 2), e(4, 0, 1) + e(4, 2, 3)]),
        ("T3 + M1", vec![e(4, 0, 0), e(4, 1, 1), e(4, 0, 1), e(4, 1, 2), e(4, 3, 3)]),
        ("null algebra", vec![e(3, 0, 1), e(3, 0, 2)]),
        ("corner radical", vec![e(3, 0, 2)]),
        ("incidence V", vec![e(3, 0, 0), e(3, 1, 1), e(3, 0, 2), e(3, 1, 2)]),
        ("jordan + M2", vec![embed(4, 0, &jordan(2)), e(4, 2, 3), e(4, 3, 2)]),
    ];
    list.push(("T2 conjugated", conjugate_all(&mut rng, t2)?));
    list.push(("T3 conjugated", conjugate_all(&mut rng, upper_triangular(3))?));
    list.push(("block triangular 1+2 conjugated", conjugate_all(&mut rng, block_triangular(1, 2))?));
    list.into_iter()
        .map(|(name, gens)| {
            let n = gens[0].nrows();
            Ok(NamedAlgebra { name, algebra: generate_algebra(&gens, true, n, cfg)? })
        })
        .collect()
}

/// `M_n` with both actions twisted by random invertible matrices.
pub fn random_bimodule<R: Rng + ?Sized>(rng: &mut R, alg: &MatrixAlgebra) -> Result<Bimodule> {
    let n = alg.n();
    let (ks, kt) = (rng.random_range(1.0..10.0), rng.random_range(1.0..10.0));
    let s = linalg::random_conditioned(rng, n, ks);
    let t = linalg::random_conditioned(rng, n, kt);
    Bimodule::twisted_matrix_bimodule(alg, &s, &t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wedderburn::signature_dimension;

    #[test]
    fn blocks_respect_caps() {
        let mut rng = ToleranceConfig::default().rng(1);
        for _ in 0..200 {
            let b = random_blocks(&mut rng);
            assert!(!b.is_empty());
            assert!(b.iter().sum::<usize>() <= MAX_AMBIENT);
            assert!(signature_dimension(&b) <= MAX_DIM);
        }
    }

    #[test]
    fn fixture_dimension_matches_blocks() {
        let cfg = ToleranceConfig::default();
        let mut rng = cfg.rng(2);
        let f = semisimple_fixture(&mut rng, &[2, 1, 1], &cfg).unwrap();
        assert_eq!(f.algebra.dim(), 6);
        assert!(f.condition <= MAX_CONDITION * (1.0 + 1e-9));
    }

    #[test]
    fn non_semisimple_dimensions() {
        let corpus = non_semisimple_corpus(&ToleranceConfig::default()).unwrap();
        assert_eq!(corpus.len(), 20);
        let dims: Vec<usize> = corpus.iter().map(|a| a.algebra.dim()).collect();
        assert_eq!(dims, vec![3, 6, 10, 2, 3, 4, 7, 7, 12, 4, 5, 3, 7, 3, 2, 5, 6, 3, 6, 7]);
    }
}
