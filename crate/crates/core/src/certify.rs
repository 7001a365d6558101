//! Finite spanning certificates: from a diagonal `u = Σ a_i ⊗ b_i` of A,
//! the elements `c a_j b_i` span A, with the approximation
//!
//! ```text
//! ‖x − Σ_{j≤M} Σ_{i≤N} φ_j(x a_i) c a_j b_i‖ ≤ 4εMk² ‖x‖ ≤ ‖x‖/2.
//! ```

use rand::Rng;

use crate::algebra::MatrixAlgebra;
use crate::config::ToleranceConfig;
use crate::diagonal::{self, TensorElement};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector};
use crate::norms;

const STREAM_FUZZ: u64 = 0x6675_7a7a;

/// `φ(x) = trace(f* x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub frame: CMatrix,
}

impl Functional {
    pub fn apply(&self, x: &CMatrix) -> c64 {
        linalg::inner(x, &self.frame)
    }
}

#[derive(Debug, Clone)]
pub struct SpanningCertificate {
    /// Length of the shortest prefix with `‖Σ_{i≤M} a_i b_i − 1‖ < 1/2`.
    pub m: usize,
    pub c: CMatrix,
    pub k: f64,
    pub epsilon: f64,
    pub functionals: Vec<Functional>,
    /// Number of right factors used; the whole representation.
    pub n_terms: usize,
    /// `c a_j b_i` for `j < M`, `i < N`, `j` major.
    pub spanning_family: Vec<CMatrix>,
    pub beta: f64,
    pub span_rank: usize,
    /// The representation all constants refer to.
    pub diagonal: TensorElement,
}

fn prefix_residual(u: &TensorElement, m: usize) -> f64 {
    let n = u.n();
    let mut s = linalg::zeros(n, n);
    for (a, b) in &u.terms()[..m] {
        s = s + a.dot(b);
    }
    linalg::op_norm(&(s - linalg::eye(n)))
}

fn prefix_sum(u: &TensorElement, m: usize) -> CMatrix {
    let n = u.n();
    let mut s = linalg::zeros(n, n);
    for (a, b) in &u.terms()[..m] {
        s = s + a.dot(b);
    }
    s
}

fn factor_bound(u: &TensorElement) -> f64 {
    let (l, r) = norms::factor_norms(u);
    l.max(r)
}

/// `φ_j(a_i)` for all `i`.
fn coordinates(phi: &Functional, u: &TensorElement) -> CVector {
    u.terms().iter().map(|(a, _)| phi.apply(a)).collect()
}

/// `Σ_{j≤M} Σ_i φ_j(x a_i) c a_j b_i`.
fn approximant(cert: &SpanningCertificate, x: &CMatrix) -> CMatrix {
    let u = &cert.diagonal;
    let n = u.n();
    let mut out = linalg::zeros(n, n);
    for (j, phi) in cert.functionals.iter().enumerate() {
        for i in 0..cert.n_terms {
            let coef = phi.apply(&x.dot(&u.terms()[i].0));
            out.scaled_add(coef, &cert.spanning_family[j * cert.n_terms + i]);
        }
    }
    out
}

/// `max_x ‖x − approximant(x)‖ / ‖x‖` over the basis of A.
fn quotient_bound(alg: &MatrixAlgebra, cert: &SpanningCertificate) -> f64 {
    alg.basis()
        .iter()
        .map(|x| linalg::op_norm(&(x - &approximant(cert, x))) / linalg::op_norm(x))
        .fold(0.0, f64::max)
}

pub fn build_certificate(alg: &MatrixAlgebra, u: &TensorElement, cfg: &ToleranceConfig) -> Result<SpanningCertificate> {
    let rep = diagonal::is_diagonal(alg, u, cfg)?;
    if !rep.verdict {
        return Err(Error::DiagonalInvalid {
            unit_residual: rep.unit_residual,
            commutation_residual: rep.commutation_residual,
        });
    }
    let r0 = u.len();
    let left_rank = linalg::rank(&linalg::stack_flat(&u.left_factors()), cfg.rank_tol)?;
    let right_rank = linalg::rank(&linalg::stack_flat(&u.right_factors()), cfg.rank_tol)?;
    let u = if left_rank < r0 || right_rank < r0 {
        diagonal::reduce_representation(u, cfg)?
    } else {
        u.clone()
    };
    let r = u.len();
    let m = (1..=r)
        .find(|&m| prefix_residual(&u, m) < 0.5)
        .ok_or(Error::DiagonalInvalid {
            unit_residual: prefix_residual(&u, r),
            commutation_residual: rep.commutation_residual,
        })?;
    let c = linalg::inverse(&prefix_sum(&u, m))?;
    let k = factor_bound(&u);
    let epsilon = 1.0 / (8.0 * m as f64 * k * k);

    // exact dual frame: f_j with trace(f_j* a_i) = δ_ij
    let a = linalg::stack_flat(&u.left_factors());
    let gram = linalg::dagger(&a).dot(&a);
    let dual = a.dot(&linalg::inverse(&gram)?);
    let frames: Vec<CMatrix> = (0..r)
        .map(|j| linalg::unflatten(&dual.column(j).to_vec(), u.n(), u.n()))
        .collect();
    let mut functionals: Vec<Functional> = frames[..m].iter().map(|f| Functional { frame: f.clone() }).collect();
    if cfg.fuzz {
        let mut rng = cfg.rng(STREAM_FUZZ);
        for phi in functionals.iter_mut() {
            // move the coordinate vector by d with ‖d‖ just under ε/2
            let mut d = linalg::random_vector(&mut rng, r);
            let nd = linalg::vnorm(&d);
            let radius = 0.49 * epsilon * rng.random_range(0.5..1.0);
            d.mapv_inplace(|z| z * (radius / nd));
            for (kk, dk) in d.iter().enumerate() {
                phi.frame.scaled_add(dk.conj(), &frames[kk]);
            }
        }
    }
    let n_terms = r;
    let mut spanning_family = Vec::with_capacity(m * n_terms);
    for j in 0..m {
        let caj = c.dot(&u.terms()[j].0);
        for i in 0..n_terms {
            spanning_family.push(caj.dot(&u.terms()[i].1));
        }
    }
    let span_rank = linalg::rank(&linalg::stack_flat(&spanning_family), cfg.rank_tol)?;
    let mut cert = SpanningCertificate {
        m,
        c,
        k,
        epsilon,
        functionals,
        n_terms,
        spanning_family,
        beta: 0.0,
        span_rank,
        diagonal: u,
    };
    cert.beta = quotient_bound(alg, &cert);
    if !(cert.beta <= 0.5) {
        return Err(Error::BoundViolated { beta: cert.beta });
    }
    Ok(cert)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn failed(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect()
    }
}

fn check(name: &'static str, value: f64, bound: f64, strict: bool) -> Check {
    let pass = if strict { value < bound } else { value <= bound };
    Check { name, value, bound, pass }
}

/// Recomputes every constant and inequality of the certificate.
pub fn verify_certificate(alg: &MatrixAlgebra, u: &TensorElement, cert: &SpanningCertificate, cfg: &ToleranceConfig) -> VerificationReport {
    let mut checks = Vec::new();
    let tol = cfg.verify_tol;
    let shape_ok = cert.m >= 1
        && cert.m <= u.len()
        && cert.n_terms == u.len()
        && cert.functionals.len() == cert.m
        && cert.spanning_family.len() == cert.m * cert.n_terms
        && u.n() == alg.n();
    checks.push(check("shapes are consistent", if shape_ok { 0.0 } else { 1.0 }, 0.0, false));
    if !shape_ok {
        return VerificationReport { checks, pass: false };
    }
    match diagonal::is_diagonal(alg, u, cfg) {
        Ok(rep) => {
            checks.push(check("diagonal: unit residual", rep.unit_residual, tol, false));
            checks.push(check("diagonal: commutation residual", rep.commutation_residual, tol, false));
        }
        Err(_) => checks.push(check("diagonal: factors lie in the algebra", 1.0, 0.0, false)),
    }
    let left_rank = linalg::rank(&linalg::stack_flat(&u.left_factors()), cfg.rank_tol).unwrap_or(0);
    let right_rank = linalg::rank(&linalg::stack_flat(&u.right_factors()), cfg.rank_tol).unwrap_or(0);
    let deficiency = (u.len() - left_rank.min(right_rank).min(u.len())) as f64;
    checks.push(check("factor families are independent", deficiency, 0.0, false));

    let m = cert.m;
    checks.push(check("prefix bound ‖Σ_{i≤M} a_i b_i − 1‖ < 1/2", prefix_residual(u, m), 0.5, true));
    let s = prefix_sum(u, m);
    let inv_res = linalg::op_norm(&(cert.c.dot(&s) - linalg::eye(u.n())));
    checks.push(check("c inverts the prefix sum", inv_res, tol, false));
    checks.push(check("‖c‖ < 2", linalg::op_norm(&cert.c), 2.0, true));
    let k = factor_bound(u);
    checks.push(check("k matches the factor norms", (k - cert.k).abs(), 1e-12 * k.max(1.0), false));
    let eps = 1.0 / (8.0 * m as f64 * cert.k * cert.k);
    checks.push(check(
        "ε = 1/(8Mk²) exactly",
        if eps.to_bits() == cert.epsilon.to_bits() { 0.0 } else { (eps - cert.epsilon).abs().max(f64::MIN_POSITIVE) },
        0.0,
        false,
    ));
    let proximity = cert
        .functionals
        .iter()
        .enumerate()
        .map(|(j, phi)| {
            let mut v = coordinates(phi, u);
            v[j] -= linalg::ONE;
            linalg::vnorm(&v)
        })
        .fold(0.0, f64::max);
    checks.push(check("functional proximity < ε", proximity, cert.epsilon, true));

    let mut family_err = 0.0f64;
    for j in 0..m {
        let caj = cert.c.dot(&u.terms()[j].0);
        for i in 0..cert.n_terms {
            let e = caj.dot(&u.terms()[i].1);
            family_err = family_err.max(linalg::fro(&(e - &cert.spanning_family[j * cert.n_terms + i])));
        }
    }
    checks.push(check("family is {c a_j b_i}", family_err, tol * (1.0 + linalg::op_norm(&cert.c)), false));

    // the two intermediate inequalities, with an empty tail
    let mut per_factor_error = 0.0f64;
    let mut summed_error = 0.0f64;
    for x in alg.basis() {
        let nx = linalg::op_norm(x);
        let mut summed = linalg::zeros(u.n(), u.n());
        for (j, phi) in cert.functionals.iter().enumerate() {
            let mut approx = linalg::zeros(u.n(), u.n());
            for i in 0..cert.n_terms {
                approx.scaled_add(phi.apply(&x.dot(&u.terms()[i].0)), &u.terms()[i].1);
            }
            let diff = u.terms()[j].1.dot(x) - approx;
            per_factor_error = per_factor_error.max(linalg::op_norm(&diff) / nx);
            summed = summed + u.terms()[j].0.dot(&diff);
        }
        summed_error = summed_error.max(linalg::op_norm(&summed) / nx);
    }
    let slack = 1.0 + 1e-9;
    checks.push(check("‖b_j x − Σ φ_j(x a_i) b_i‖ ≤ 2εk‖x‖", per_factor_error, 2.0 * cert.epsilon * cert.k * slack, false));
    checks.push(check(
        "‖Σ_j (a_j b_j x − Σ_i φ_j(x a_i) a_j b_i)‖ ≤ 2εMk²‖x‖",
        summed_error,
        2.0 * cert.epsilon * m as f64 * cert.k * cert.k * slack,
        false,
    ));
    let chain = 4.0 * cert.epsilon * m as f64 * cert.k * cert.k;
    let beta = quotient_bound(alg, cert);
    checks.push(check("β ≤ 4εMk²", beta, chain * slack, false));
    checks.push(check("4εMk² ≤ 1/2", chain, 0.5 + 1e-15, false));
    checks.push(check("β ≤ 1/2", beta, 0.5, false));
    checks.push(check("recorded β matches", (beta - cert.beta).abs(), 1e-9, false));
    let rank = linalg::rank(&linalg::stack_flat(&cert.spanning_family), cfg.rank_tol).unwrap_or(0);
    checks.push(check("rank of family = dim A", (alg.dim() as f64 - rank as f64).abs(), 0.0, false));
    let outside = cert
        .spanning_family
        .iter()
        .map(|e| alg.distance(e) / (1.0 + linalg::fro(e)))
        .fold(0.0, f64::max);
    checks.push(check("family lies in A", outside, tol, false));

    let pass = checks.iter().all(|c| c.pass);
    VerificationReport { checks, pass }
}
