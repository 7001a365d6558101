//! Haagerup and projective tensor norm brackets.
//!
//! For a reduced `u = Σ a_i ⊗ b_i` every other representation of the same
//! length is `a' = a S`, `b' = S⁻¹ b`, and the Haagerup expression depends on
//! `P = S S*` only:
//!
//! ```text
//! ‖Σ a'a'*‖ = ‖Σ P_jl a_j a_l*‖,   ‖Σ b'*b'‖ = ‖B* (P⁻¹ ⊗ I) B‖.
//! ```
//!
//! Minimising `t` subject to `tI − Σ P_jl a_j a_l* ⪰ 0` and
//! `[[P ⊗ I, B], [B*, tI]] ⪰ 0` is a semidefinite program whose optimum is
//! the norm; it is solved with a log-barrier method.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{Cholesky, SolveH, SVD, UPLO};
use rand::Rng;
use serde::Serialize;

use crate::config::ToleranceConfig;
use crate::diagonal::{self, TensorElement};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector, ONE, ZERO};

const STREAM_RESTARTS: u64 = 0x6e6f_726d;
/// Relative duality gap targeted by the barrier method.
const GAP_TOL: f64 = 1e-10;

/// `‖Σ a_i a_i*‖^½ ‖Σ b_i* b_i‖^½` at the given representation.
pub fn haagerup_eval(u: &TensorElement) -> f64 {
    let (l, r) = factor_norms(u);
    l * r
}

/// The two factors of [`haagerup_eval`]: `‖Σ a a*‖^½` and `‖Σ b* b‖^½`.
pub fn factor_norms(u: &TensorElement) -> (f64, f64) {
    let n = u.n();
    let mut aa = linalg::zeros(n, n);
    let mut bb = linalg::zeros(n, n);
    for (a, b) in u.terms() {
        aa = aa + a.dot(&linalg::dagger(a));
        bb = bb + linalg::dagger(b).dot(b);
    }
    (linalg::op_norm(&aa).sqrt(), linalg::op_norm(&bb).sqrt())
}

/// `max(‖Σ a_i b_i‖, ‖Σ a_i ⊗ b_i‖)`, both lower bounds for the Haagerup norm.
pub fn haagerup_lower(u: &TensorElement) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    linalg::op_norm(&u.multiply()).max(linalg::op_norm(&u.kron_matrix()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartStat {
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct NormEstimate {
    pub upper: f64,
    pub lower: f64,
    pub achieving_rep: TensorElement,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: Vec<RestartStat>,
}

/// Scales each term so that both factors of a rank-one term have equal norm,
/// and the whole representation so that both Haagerup factors agree.
fn balance(u: &TensorElement) -> TensorElement {
    let (l, r) = factor_norms(u);
    if l == 0.0 || r == 0.0 {
        return u.clone();
    }
    let c = (r / l).sqrt();
    u.map_factors(u.n(), |a| a.mapv(|z| z * c), |b| b.mapv(|z| z / c))
}

/// Reduced representation rescaled to unit coefficient norm, and the scale.
fn normalized(u: &TensorElement, cfg: &ToleranceConfig) -> Result<(TensorElement, f64)> {
    let red = diagonal::reduce_representation(u, cfg)?;
    let scale = red
        .terms()
        .iter()
        .map(|(a, b)| (linalg::fro(a) * linalg::fro(b)).powi(2))
        .sum::<f64>()
        .sqrt();
    if scale == 0.0 {
        return Ok((red, 0.0));
    }
    let f = 1.0 / scale.sqrt();
    Ok((red.map_factors(u.n(), |a| a.mapv(|z| z * f), |b| b.mapv(|z| z * f)), scale))
}

/// Entries `(row, col, value)` of one Hermitian basis matrix.
type HermBasis = Vec<Vec<(usize, usize, c64)>>;

fn hermitian_basis(r: usize) -> HermBasis {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(r * r);
    for j in 0..r {
        out.push(vec![(j, j, ONE)]);
    }
    for j in 0..r {
        for l in j + 1..r {
            out.push(vec![(j, l, c64::new(h, 0.0)), (l, j, c64::new(h, 0.0))]);
            out.push(vec![(j, l, c64::new(0.0, h)), (l, j, c64::new(0.0, -h))]);
        }
    }
    out
}

fn tr_prod(x: ndarray::ArrayView2<c64>, y: ndarray::ArrayView2<c64>) -> c64 {
    let n = x.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += x[[i, j]] * y[[j, i]];
        }
    }
    acc
}

fn log_det_pd(m: &CMatrix) -> Option<f64> {
    let l = m.cholesky(UPLO::Lower).ok()?;
    let mut s = 0.0;
    for i in 0..l.nrows() {
        let d = l[[i, i]].re;
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        s += 2.0 * d.ln();
    }
    Some(s)
}

struct Sdp<'a> {
    n: usize,
    r: usize,
    a: Vec<&'a CMatrix>,
    /// `a_j a_l*`
    aa: Vec<Vec<CMatrix>>,
    /// `[b_1; …; b_r]`
    b: CMatrix,
    basis: HermBasis,
}

impl<'a> Sdp<'a> {
    fn new(u: &'a TensorElement) -> Self {
        let n = u.n();
        let r = u.len();
        let a: Vec<&CMatrix> = u.terms().iter().map(|t| &t.0).collect();
        let aa = (0..r)
            .map(|j| (0..r).map(|l| a[j].dot(&linalg::dagger(a[l]))).collect())
            .collect();
        let mut b = linalg::zeros(r * n, n);
        for (i, (_, bi)) in u.terms().iter().enumerate() {
            b.slice_mut(s![i * n..(i + 1) * n, ..]).assign(bi);
        }
        Self {
            n,
            r,
            a,
            aa,
            b,
            basis: hermitian_basis(r),
        }
    }

    fn params(&self) -> usize {
        self.basis.len() + 1
    }

    fn p_of(&self, theta: &Array1<f64>) -> CMatrix {
        let mut p = linalg::zeros(self.r, self.r);
        for (h, &t) in self.basis.iter().zip(theta.iter()) {
            for &(j, l, z) in h {
                p[[j, l]] += z * t;
            }
        }
        p
    }

    fn theta_of(&self, p: &CMatrix, t: f64) -> Array1<f64> {
        let mut th = Array1::zeros(self.params());
        for (k, h) in self.basis.iter().enumerate() {
            th[k] = h.iter().map(|&(j, l, z)| (z.conj() * p[[j, l]]).re).sum();
        }
        th[self.params() - 1] = t;
        th
    }

    fn f1(&self, p: &CMatrix, t: f64) -> CMatrix {
        let mut f = linalg::eye(self.n).mapv(|z| z * t);
        for j in 0..self.r {
            for l in 0..self.r {
                if p[[j, l]] != ZERO {
                    f.scaled_add(-p[[j, l]], &self.aa[j][l]);
                }
            }
        }
        f
    }

    fn f2(&self, p: &CMatrix, t: f64) -> CMatrix {
        let (n, r) = (self.n, self.r);
        let k = (r + 1) * n;
        let mut f = linalg::zeros(k, k);
        for j in 0..r {
            for l in 0..r {
                for i in 0..n {
                    f[[j * n + i, l * n + i]] = p[[j, l]];
                }
            }
        }
        f.slice_mut(s![..r * n, r * n..]).assign(&self.b);
        f.slice_mut(s![r * n.., ..r * n]).assign(&linalg::dagger(&self.b));
        for i in 0..n {
            f[[r * n + i, r * n + i]] = c64::new(t, 0.0);
        }
        f
    }

    fn barrier(&self, theta: &Array1<f64>, tau: f64) -> Option<f64> {
        let t = theta[self.params() - 1];
        let p = self.p_of(theta);
        let l1 = log_det_pd(&self.f1(&p, t))?;
        let l2 = log_det_pd(&self.f2(&p, t))?;
        Some(tau * t - l1 - l2)
    }

    /// Gradient and Hessian of `τ t − log det F1 − log det F2`.
    fn derivatives(&self, theta: &Array1<f64>, tau: f64) -> Result<(Array1<f64>, Array2<f64>)> {
        let (n, r) = (self.n, self.r);
        let m = self.params();
        let t = theta[m - 1];
        let p = self.p_of(theta);
        let m1 = linalg::inverse(&self.f1(&p, t))?;
        let nn = linalg::inverse(&self.f2(&p, t))?;
        let m1sq = m1.dot(&m1);
        let q: Vec<Vec<CMatrix>> = (0..r)
            .map(|x| (0..r).map(|w| linalg::dagger(self.a[x]).dot(&m1).dot(self.a[w])).collect())
            .collect();
        let q2: Vec<Vec<c64>> = (0..r)
            .map(|x| (0..r).map(|w| linalg::trace(&linalg::dagger(self.a[x]).dot(&m1sq).dot(self.a[w]))).collect())
            .collect();
        let blk = |i: usize, j: usize| nn.slice(s![i * n..(i + 1) * n, j * n..(j + 1) * n]);
        let rr = r;
        // gram[(a, b), (c, d)] = tr(X_ab X_cd) for both families at once
        let nsq = n * n;
        let mut vec_x = Array2::<c64>::zeros((r * r, 2 * nsq));
        let mut vec_xt = Array2::<c64>::zeros((2 * nsq, r * r));
        for a in 0..r {
            for b in 0..r {
                let row = a * r + b;
                let nb = blk(a, b);
                for i in 0..n {
                    for j in 0..n {
                        vec_x[[row, i * n + j]] = q[a][b][[i, j]];
                        vec_x[[row, nsq + i * n + j]] = nb[[i, j]];
                        vec_xt[[j * n + i, row]] = q[a][b][[i, j]];
                        vec_xt[[nsq + j * n + i, row]] = nb[[i, j]];
                    }
                }
            }
        }
        let gram = vec_x.dot(&vec_xt);

        let mut g = Array1::zeros(m);
        let mut h = Array2::zeros((m, m));
        for (al, ha) in self.basis.iter().enumerate() {
            let mut ga = ZERO;
            let mut hta = ZERO;
            for &(w, x, z) in ha {
                ga += z * (linalg::trace(&q[x][w]) - linalg::trace(&blk(x, w).to_owned()));
                hta += z * (-q2[x][w] + tr_prod(blk(x, rr), blk(rr, w)));
            }
            g[al] = ga.re;
            h[[al, m - 1]] = hta.re;
            h[[m - 1, al]] = hta.re;
            for (be, hb) in self.basis.iter().enumerate().skip(al) {
                let mut acc = ZERO;
                for &(w, x, z) in ha {
                    for &(w2, x2, z2) in hb {
                        acc += z * z2 * gram[[x2 * r + w, x * r + w2]];
                    }
                }
                h[[al, be]] = acc.re;
                h[[be, al]] = acc.re;
            }
        }
        g[m - 1] = tau - linalg::trace(&m1).re - linalg::trace(&blk(rr, rr).to_owned()).re;
        h[[m - 1, m - 1]] = tr_prod(m1.view(), m1.view()).re + tr_prod(blk(rr, rr), blk(rr, rr)).re;
        Ok((g, h))
    }

    /// Smallest feasible `t` for a given `P`, plus a margin.
    fn feasible_t(&self, p: &CMatrix) -> Result<f64> {
        let t1 = linalg::op_norm(&self.f1(p, 0.0));
        let pinv = linalg::inverse(p)?;
        let mut bb = linalg::zeros(self.n, self.n);
        for j in 0..self.r {
            for l in 0..self.r {
                let bj = self.b.slice(s![j * self.n..(j + 1) * self.n, ..]);
                let bl = self.b.slice(s![l * self.n..(l + 1) * self.n, ..]);
                bb = bb + linalg::dagger_view(bj).dot(&bl).mapv(|z| z * pinv[[j, l]]);
            }
        }
        Ok(1.5 * t1.max(linalg::op_norm(&bb)) + 1e-3)
    }

    /// Barrier method from `P0`. Returns the final `P` and `t`, Newton steps used, and convergence.
    fn solve(&self, p0: &CMatrix, max_iter: usize) -> Result<(CMatrix, f64, usize, bool)> {
        let m = self.params();
        let k_total = (self.n + (self.r + 1) * self.n) as f64;
        let t0 = self.feasible_t(p0)?;
        let mut theta = self.theta_of(p0, t0);
        let mut tau = k_total / t0;
        let mut iters = 0;
        loop {
            // centering
            loop {
                if iters >= max_iter {
                    let t = theta[m - 1];
                    return Ok((self.p_of(&theta), t, iters, false));
                }
                iters += 1;
                let (g, h) = self.derivatives(&theta, tau)?;
                let step = match h.solveh(&g) {
                    Ok(s) => s.mapv(|z| -z),
                    Err(_) => return Ok((self.p_of(&theta), theta[m - 1], iters, false)),
                };
                let dec = -g.dot(&step);
                if !dec.is_finite() {
                    return Err(Error::OptimizerDiverged);
                }
                if dec / 2.0 <= 1e-10 {
                    break;
                }
                let phi = self.barrier(&theta, tau).ok_or(Error::OptimizerDiverged)?;
                // inside the quadratic region the full step is taken; once the
                // barrier stops decreasing we are at rounding level
                let mut sz = 1.0;
                let mut next = None;
                while sz > 1e-12 {
                    let cand = &theta + &step.mapv(|z| z * sz);
                    if let Some(v) = self.barrier(&cand, tau) {
                        if v <= phi - 0.25 * sz * dec || (dec < 0.25 && sz == 1.0 && v < phi) {
                            next = Some((cand, v));
                            break;
                        }
                    }
                    sz *= 0.5;
                }
                match next {
                    Some((cand, v)) if v < phi => theta = cand,
                    _ => break,
                }
            }
            let t = theta[m - 1];
            if k_total / tau <= GAP_TOL * t.max(f64::MIN_POSITIVE) {
                return Ok((self.p_of(&theta), t, iters, true));
            }
            tau *= 8.0;
        }
    }
}

/// Representation `a' = a S`, `b' = S⁻¹ b` with `P = S S*`.
fn reparametrize(u: &TensorElement, p: &CMatrix) -> Result<TensorElement> {
    let r = u.len();
    let herm = (p + &linalg::dagger(p)).mapv(|z| z * 0.5);
    let s_mat = herm.cholesky(UPLO::Lower)?;
    let s_inv = linalg::inverse(&s_mat)?;
    let n = u.n();
    let mut terms = Vec::with_capacity(r);
    for i in 0..r {
        let mut a = linalg::zeros(n, n);
        let mut b = linalg::zeros(n, n);
        for j in 0..r {
            a.scaled_add(s_mat[[j, i]], &u.terms()[j].0);
            b.scaled_add(s_inv[[i, j]], &u.terms()[j].1);
        }
        terms.push((a, b));
    }
    TensorElement::new(n, terms)
}

fn random_start<R: Rng + ?Sized>(rng: &mut R, r: usize) -> CMatrix {
    let g = linalg::random_matrix(rng, r, r);
    let pd = g.dot(&linalg::dagger(&g));
    let sc = 0.5 / linalg::op_norm(&pd).max(f64::MIN_POSITIVE);
    linalg::eye(r) + pd.mapv(|z| z * sc)
}

/// Upper bound for the Haagerup norm by optimising over representations of
/// minimal length, with a lower bound from [`haagerup_lower`].
pub fn haagerup_upper(u: &TensorElement, cfg: &ToleranceConfig) -> Result<NormEstimate> {
    let lower = haagerup_lower(u);
    let (red, scale) = normalized(u, cfg)?;
    let input_value = haagerup_eval(u);
    if scale == 0.0 {
        return Ok(NormEstimate {
            upper: 0.0,
            lower,
            achieving_rep: TensorElement::zero(u.n()),
            iterations: 0,
            converged: true,
            restarts: Vec::new(),
        });
    }
    let r = red.len();
    let sdp = Sdp::new(&red);
    let mut rng = cfg.rng(STREAM_RESTARTS);
    let mut best: Option<(f64, TensorElement, usize, bool)> = None;
    let mut stats = Vec::new();
    let mut total_iters = 0;
    for k in 0..cfg.opt.restarts.max(1) {
        // the problem is convex in (P, t): further starts only guard against numerical failure
        if best.as_ref().is_some_and(|b| b.3) {
            break;
        }
        let p0 = if k == 0 { linalg::eye(r) } else { random_start(&mut rng, r) };
        let (p, _, iters, converged) = match sdp.solve(&p0, cfg.opt.max_iter) {
            Ok(res) => res,
            Err(Error::OptimizerDiverged) | Err(Error::Backend(_)) => {
                stats.push(RestartStat {
                    upper: f64::INFINITY,
                    iterations: 0,
                    converged: false,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        total_iters += iters;
        let rep = match reparametrize(&red, &p) {
            Ok(rep) => balance(&rep),
            Err(_) => continue,
        };
        let value = haagerup_eval(&rep);
        stats.push(RestartStat {
            upper: value * scale,
            iterations: iters,
            converged,
        });
        if value.is_finite() && best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, rep, iters, converged));
        }
    }
    let sq = scale.sqrt();
    let (mut upper, mut rep, mut converged) = match best {
        Some((v, rep, _, c)) => (v * scale, rep.map_factors(u.n(), |a| a.mapv(|z| z * sq), |b| b.mapv(|z| z * sq)), c),
        None => (f64::INFINITY, u.clone(), false),
    };
    if input_value < upper {
        upper = input_value;
        rep = balance(u);
        converged = converged || upper <= lower;
    }
    if !upper.is_finite() {
        return Err(Error::OptimizerDiverged);
    }
    // report the value of the representation actually returned
    upper = haagerup_eval(&rep);
    Ok(NormEstimate {
        upper,
        lower,
        achieving_rep: rep,
        iterations: total_iters,
        converged,
        restarts: stats,
    })
}

fn projective_eval(terms: &[(CMatrix, CMatrix)]) -> f64 {
    terms.iter().map(|(a, b)| linalg::op_norm(a) * linalg::op_norm(b)).sum()
}

const MAX_SHEAR: f64 = 0.5;
const MIN_SHEAR: f64 = 1e-9;

/// Operator norm with a unit top right singular vector.
fn top_pair(m: &CMatrix) -> (f64, CVector) {
    let n = m.ncols();
    let mut e0 = CVector::zeros(n);
    if n > 0 {
        e0[0] = ONE;
    }
    match m.svd(false, true) {
        Ok((_, s, Some(vt))) if !s.is_empty() => (s[0], vt.row(0).mapv(|z| z.conj())),
        _ => (linalg::op_norm(m), e0),
    }
}

/// `‖m w‖ ≤ ‖m‖` for the unit vector `w` obtained by one power step from `v`.
fn norm_below(m: &CMatrix, v: &CVector) -> f64 {
    let mv = m.dot(v);
    let w = m.t().mapv(|z| z.conj()).dot(&mv);
    let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let base = mv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nw == 0.0 {
        return base;
    }
    let mw = m.dot(&w.mapv(|z| z / nw));
    base.max(mw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

#[derive(Debug, Clone)]
pub struct ProjectiveEstimate {
    pub upper: f64,
    pub achieving_rep: TensorElement,
    pub iterations: usize,
}

/// Upper bound for `inf Σ ‖a_i‖ ‖b_i‖` by a pattern search over the shears
/// `a_k += ε a_j`, `b_j −= ε b_k` of the reduced representation.
pub fn projective_upper(u: &TensorElement, cfg: &ToleranceConfig) -> Result<ProjectiveEstimate> {
    let n = u.n();
    let input_value = projective_eval(u.terms());
    let (red, scale) = normalized(u, cfg)?;
    if scale == 0.0 {
        return Ok(ProjectiveEstimate {
            upper: 0.0,
            achieving_rep: TensorElement::zero(n),
            iterations: 0,
        });
    }
    let mut terms: Vec<(CMatrix, CMatrix)> = red.terms().to_vec();
    let top: Vec<((f64, CVector), (f64, CVector))> = terms.iter().map(|(a, b)| (top_pair(a), top_pair(b))).collect();
    let mut norms: Vec<(f64, f64)> = top.iter().map(|(a, b)| (a.0, b.0)).collect();
    let mut dirs: Vec<(CVector, CVector)> = top.into_iter().map(|(a, b)| (a.1, b.1)).collect();
    let r = terms.len();
    // one step per ordered pair (k, j): doubled on success, halved on failure
    let mut steps = vec![vec![MAX_SHEAR; r]; r];
    let mut iters = 0;
    while iters < cfg.opt.max_iter {
        iters += 1;
        let mut active = false;
        for k in 0..r {
            for j in 0..r {
                let step = steps[k][j];
                if j == k || step < MIN_SHEAR {
                    continue;
                }
                active = true;
                let mut improved = false;
                for eps in [c64::new(step, 0.0), c64::new(-step, 0.0), c64::new(0.0, step), c64::new(0.0, -step)] {
                    let ak = &terms[k].0 + &terms[j].0.mapv(|z| z * eps);
                    let bj = &terms[j].1 - &terms[k].1.mapv(|z| z * eps);
                    let before = norms[k].0 * norms[k].1 + norms[j].0 * norms[j].1;
                    let target = before * (1.0 - 1e-12);
                    let (la, lb) = (norm_below(&ak, &dirs[k].0), norm_below(&bj, &dirs[j].1));
                    if la * norms[k].1 + norms[j].0 * lb >= target {
                        continue;
                    }
                    let ((nak, vak), (nbj, vbj)) = (top_pair(&ak), top_pair(&bj));
                    let after = nak * norms[k].1 + norms[j].0 * nbj;
                    if after < target {
                        terms[k].0 = ak;
                        terms[j].1 = bj;
                        norms[k].0 = nak;
                        norms[j].1 = nbj;
                        dirs[k].0 = vak;
                        dirs[j].1 = vbj;
                        improved = true;
                    }
                }
                steps[k][j] = if improved { (2.0 * step).min(MAX_SHEAR) } else { 0.5 * step };
            }
        }
        if !active {
            break;
        }
    }
    // balance each term
    for (t, nm) in terms.iter_mut().zip(norms.iter()) {
        if nm.0 > 0.0 && nm.1 > 0.0 {
            let c = (nm.1 / nm.0).sqrt();
            t.0.mapv_inplace(|z| z * c);
            t.1.mapv_inplace(|z| z / c);
        }
    }
    let sq = scale.sqrt();
    let searched = TensorElement::new(n, terms)?.map_factors(n, |a| a.mapv(|z| z * sq), |b| b.mapv(|z| z * sq));
    let value = projective_eval(searched.terms());
    if input_value < value {
        return Ok(ProjectiveEstimate {
            upper: input_value,
            achieving_rep: u.clone(),
            iterations: iters,
        });
    }
    Ok(ProjectiveEstimate {
        upper: value,
        achieving_rep: searched,
        iterations: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eye, random_matrix, unit};
    use rand::SeedableRng;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn eval_examples() {
        for n in 2..5 {
            assert!((haagerup_eval(&TensorElement::canonical_matrix_diagonal(n)) - 1.0).abs() < 1e-14);
        }
        assert!((haagerup_eval(&TensorElement::one(3)) - 1.0).abs() < 1e-14);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        let u = TensorElement::new(3, vec![(a.clone(), b.clone())]).unwrap();
        let expect = linalg::op_norm(&a) * linalg::op_norm(&b);
        assert!((haagerup_eval(&u) - expect).abs() < 1e-12 * expect);
        assert!((haagerup_lower(&u) - expect).abs() < 1e-12 * expect);
        assert_eq!(haagerup_lower(&TensorElement::zero(2)), 0.0);
    }

    #[test]
    fn canonical_diagonal_pinches() {
        for n in 2..5 {
            let u = TensorElement::canonical_matrix_diagonal(n);
            let est = haagerup_upper(&u, &cfg()).unwrap();
            assert!(est.lower >= 1.0 - 1e-9);
            assert!(est.upper <= 1.0 + 1e-6);
            assert!((haagerup_eval(&est.achieving_rep) - est.upper).abs() <= 1e-9 * est.upper);
        }
    }

    #[test]
    fn rank_one_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 3, 3);
        let b = random_matrix(&mut rng, 3, 3);
        let u = TensorElement::new(3, vec![(a.clone(), b.clone())]).unwrap();
        let expect = linalg::op_norm(&a) * linalg::op_norm(&b);
        let h = haagerup_upper(&u, &cfg()).unwrap();
        assert!((h.upper - expect).abs() <= 1e-9 * expect);
        let p = projective_upper(&u, &cfg()).unwrap();
        assert!((p.upper - expect).abs() <= 1e-9 * expect);
        let one = haagerup_upper(&TensorElement::one(2), &cfg()).unwrap();
        assert!((one.upper - 1.0).abs() < 1e-12 && (one.lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projective_of_canonical_diagonal() {
        for n in 2..5 {
            let p = projective_upper(&TensorElement::canonical_matrix_diagonal(n), &cfg()).unwrap();
            assert!(p.upper <= n as f64 + 1e-12);
            let h = haagerup_upper(&TensorElement::canonical_matrix_diagonal(n), &cfg()).unwrap();
            assert!(h.upper <= p.upper + 1e-9);
        }
        let p = projective_upper(&TensorElement::one(2), &cfg()).unwrap();
        assert!((p.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn improves_a_bad_representation() {
        // E11⊗E11 + E11⊗E22 written as E11⊗(E11+E22) scrambled
        let u = TensorElement::new(
            2,
            vec![
                (unit(2, 0, 0).mapv(|z| z * 10.0), unit(2, 0, 0)),
                (unit(2, 0, 0), eye(2) - unit(2, 0, 0).mapv(|z| z * 10.0)),
            ],
        )
        .unwrap();
        // u = E11 ⊗ I, norm 1
        let h = haagerup_upper(&u, &cfg()).unwrap();
        assert!((h.upper - 1.0).abs() < 1e-9, "{}", h.upper);
        assert!(haagerup_eval(&u) > 5.0);
    }
}
