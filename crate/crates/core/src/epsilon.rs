//! The separation constant
//!
//! ```text
//! ε = min_{φ_A, φ_B} f(φ_A, φ_B),   f = Σ_i |⟨φ_A|α_i⟩|² |⟨φ_B|β_i⟩|²,
//! ```
//!
//! which is strictly positive exactly when the product basis is
//! unextendible. Two bounds are provided:
//!
//! * a certified lower bound from spanning subsets of the local vectors and
//!   their frame-operator eigenvalues ([`epsilon_lower_bound`]);
//! * a numerical upper bound from alternating minimization of `f`
//!   ([`epsilon_upper_bound`]).
//!
//! # Lower bound
//!
//! Fix product factors `φ_A`, `φ_B` and sort `x_i = |⟨α_i|φ_A⟩|²` ascending.
//! Let `K` be the shortest prefix whose `α`'s span `H_A` and `i*` its last
//! element. Then `D = K \ {i*}` spans a hyperplane, every index outside `D`
//! has `x_i >= x_{i*}`, and
//!
//! ```text
//! f >= x_{i*} · Σ_{i ∉ D} |⟨β_i|φ_B⟩|².
//! ```
//!
//! `K` contains a basis `B ∋ i*`, so `x_{i*} >= λ_min(P_B)/d_A`. `D` lies in
//! the span of `B \ {i*}`, so the β-sum runs over a superset of the indices
//! whose α is outside that span. Minimizing over every basis `B` and every
//! `i* ∈ B` gives a bound valid for all product states. When no other α
//! lies in the hyperplane, the β-set is `(complement of B) ∪ {i*}`.

use std::collections::HashMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    frame_operator, min_eigenvalue, smallest_singular_value, BipartiteIndex, CMatrix, CVector,
    HermitianMatrix, Tolerances, C64,
};
use crate::seesaw::{self, ProductObjective, SeesawOptions, SeesawResult};
use crate::upb::{ProductState, Upb};

/// `f(φ_A, φ_B) = Σ_i |⟨φ_A|α_i⟩|² |⟨φ_B|β_i⟩|²`.
pub fn f_value(s: &Upb, phi_a: &CVector, phi_b: &CVector) -> Result<f64> {
    let idx = s.idx();
    check_len(idx.da, phi_a)?;
    check_len(idx.db, phi_b)?;
    Ok(s
        .states()
        .iter()
        .map(|p| phi_a.dotc(&p.alpha).norm_sqr() * phi_b.dotc(&p.beta).norm_sqr())
        .sum())
}

fn check_len(dim: usize, v: &CVector) -> Result<()> {
    if v.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
    }
    Ok(())
}

/// `binomial(n, k)`, saturating.
pub fn subset_count(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n as u128 - i) / (i + 1);
    }
    acc
}

/// The subset pair realizing the lower bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetCertificate {
    /// Basis of `H_A` drawn from the α's (`S_A^P`).
    pub best_sa: Vec<usize>,
    /// The element of `best_sa` whose β joins the β-set.
    pub best_istar: usize,
    /// Indices outside `best_sa` whose α lies in the span of
    /// `best_sa \ {i*}`; their β's are left out of `best_sb`.
    pub hyperplane_extra: Vec<usize>,
    /// β-set `S_B^P`.
    pub best_sb: Vec<usize>,
    pub lambda_a: f64,
    pub lambda_b: f64,
    /// Denominator of the β-factor, `|S| - d_A + 1`.
    pub sb_weight: usize,
    pub admissible_pairs: usize,
    pub rejected_pairs: usize,
}

impl SubsetCertificate {
    pub fn bound(&self) -> f64 {
        self.lambda_a / self.best_sa.len() as f64 * self.lambda_b / self.sb_weight as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBounds {
    pub lower: f64,
    pub upper: f64,
    pub argmin_upper: ProductState,
    pub certificate: SubsetCertificate,
}

/// Caches smallest eigenvalues of frame operators keyed by their entries
/// rounded to 12 decimals; repeated local vectors make many subsets share
/// the same frame operator.
#[derive(Default)]
struct LambdaCache {
    map: HashMap<Vec<i64>, f64>,
}

impl LambdaCache {
    fn lambda_min(&mut self, dim: usize, vectors: &[&CVector]) -> f64 {
        let frame = frame_operator(dim, vectors.iter().copied());
        let key: Vec<i64> = frame
            .matrix()
            .iter()
            .flat_map(|z| [round12(z.re), round12(z.im)])
            .collect();
        *self.map.entry(key).or_insert_with(|| min_eigenvalue(&frame))
    }
}

fn round12(x: f64) -> i64 {
    let r = (x * 1e12).round() as i64;
    if r == 0 { 0 } else { r }
}

/// Orthonormal basis of `span(vectors)` by modified Gram-Schmidt; vectors
/// whose residual is below `tol` are dropped.
fn orthonormal_span(vectors: &[&CVector], tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    for v in vectors {
        let mut r = (*v).clone();
        for q in &basis {
            let c = q.dotc(&r);
            r -= q * c;
        }
        let n = r.norm();
        if n > tol {
            basis.push(r / C64::new(n, 0.0));
        }
    }
    basis
}

fn residual_norm(basis: &[CVector], v: &CVector) -> f64 {
    let mut r = v.clone();
    for q in basis {
        let c = q.dotc(&r);
        r -= q * c;
    }
    r.norm()
}

/// Relative window inside which two pair values count as tied, so that
/// symmetric copies differing only by roundoff keep the first certificate.
const TIE_RTOL: f64 = 1e-13;

/// Certified lower bound on ε with the default rank tolerance.
pub fn epsilon_lower_bound(s: &Upb) -> Result<(f64, SubsetCertificate)> {
    epsilon_lower_bound_with(s, Tolerances::default().rank)
}

/// Certified lower bound on ε (see the module docs for the argument).
///
/// Pairs whose β-set fails to span `H_B` are skipped and counted in
/// `rejected_pairs`; if every pair is rejected the basis is extendible (or
/// degenerate) and [`Error::NoAdmissiblePair`] is returned. Among pairs
/// attaining the minimum, the lexicographically smallest `(S_A, i*)` wins.
pub fn epsilon_lower_bound_with(s: &Upb, tol_rank: f64) -> Result<(f64, SubsetCertificate)> {
    let BipartiteIndex { da, db } = s.idx();
    let n = s.len();
    let alphas: Vec<&CVector> = s.alphas().collect();
    let betas: Vec<&CVector> = s.betas().collect();
    let sb_weight = n + 1 - da.min(n);

    let mut cache = LambdaCache::default();
    let mut best: Option<SubsetCertificate> = None;
    let mut best_value = f64::INFINITY;
    let mut admissible = 0usize;
    let mut rejected = 0usize;

    for sa in (0..n).combinations(da) {
        let sa_vecs: Vec<&CVector> = sa.iter().map(|&i| alphas[i]).collect();
        if smallest_singular_value(da, &sa_vecs) <= tol_rank {
            continue;
        }
        let lambda_a = cache.lambda_min(da, &sa_vecs);
        for &istar in &sa {
            let hyper: Vec<&CVector> = sa.iter().filter(|&&i| i != istar).map(|&i| alphas[i]).collect();
            let q = orthonormal_span(&hyper, tol_rank);
            let extra: Vec<usize> = (0..n)
                .filter(|j| !sa.contains(j))
                .filter(|&j| residual_norm(&q, alphas[j]) <= tol_rank)
                .collect();
            let sb: Vec<usize> = (0..n)
                .filter(|j| *j == istar || (!sa.contains(j) && !extra.contains(j)))
                .collect();
            let sb_vecs: Vec<&CVector> = sb.iter().map(|&j| betas[j]).collect();
            if smallest_singular_value(db, &sb_vecs) <= tol_rank {
                rejected += 1;
                continue;
            }
            admissible += 1;
            let lambda_b = cache.lambda_min(db, &sb_vecs);
            let value = lambda_a / da as f64 * lambda_b / sb_weight as f64;
            if value < best_value * (1.0 - TIE_RTOL) {
                best_value = value;
                best = Some(SubsetCertificate {
                    best_sa: sa.clone(),
                    best_istar: istar,
                    hyperplane_extra: extra,
                    best_sb: sb,
                    lambda_a,
                    lambda_b,
                    sb_weight,
                    admissible_pairs: 0,
                    rejected_pairs: 0,
                });
            }
        }
    }
    let mut cert = best.ok_or(Error::NoAdmissiblePair)?;
    cert.admissible_pairs = admissible;
    cert.rejected_pairs = rejected;
    Ok((best_value, cert))
}

/// `f` as a seesaw objective: fixing `φ_B` gives
/// `M_A = Σ_i |⟨φ_B|β_i⟩|² |α_i⟩⟨α_i|`, and symmetrically for `φ_A`.
pub struct UpbObjective<'a>(pub &'a Upb);

impl ProductObjective for UpbObjective<'_> {
    fn dims(&self) -> BipartiteIndex {
        self.0.idx()
    }

    fn reduce_a(&self, phi_b: &CVector) -> HermitianMatrix {
        weighted_frame(self.0.idx().da, self.0.states().iter().map(|p| (phi_b.dotc(&p.beta).norm_sqr(), &p.alpha)))
    }

    fn reduce_b(&self, phi_a: &CVector) -> HermitianMatrix {
        weighted_frame(self.0.idx().db, self.0.states().iter().map(|p| (phi_a.dotc(&p.alpha).norm_sqr(), &p.beta)))
    }

    fn value(&self, phi_a: &CVector, phi_b: &CVector) -> f64 {
        f_value(self.0, phi_a, phi_b).expect("dimensions fixed by the objective")
    }
}

fn weighted_frame<'a>(dim: usize, terms: impl Iterator<Item = (f64, &'a CVector)>) -> HermitianMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for (w, v) in terms {
        m += v * v.adjoint() * C64::new(w, 0.0);
    }
    HermitianMatrix::from_exact(m)
}

/// Full seesaw run on `f`, including per-restart monotonicity data.
pub fn epsilon_upper_bound_run(s: &Upb, opts: &SeesawOptions) -> SeesawResult {
    seesaw::minimize(&UpbObjective(s), opts)
}

/// Numerical upper bound on ε and the product state attaining it.
pub fn epsilon_upper_bound(s: &Upb, opts: &SeesawOptions) -> (f64, ProductState) {
    let run = epsilon_upper_bound_run(s, opts);
    let best = run.best;
    (
        best.value,
        ProductState { alpha: best.phi_a, beta: best.phi_b },
    )
}

/// Both bounds together.
pub fn epsilon_bounds(s: &Upb, opts: &SeesawOptions, tol_rank: f64) -> Result<EpsilonBounds> {
    let (lower, certificate) = epsilon_lower_bound_with(s, tol_rank)?;
    let (upper, argmin_upper) = epsilon_upper_bound(s, opts);
    Ok(EpsilonBounds { lower, upper, argmin_upper, certificate })
}

/// The three quantities in `n max_i |⟨φ|ψ_i⟩|² >= Σ_i |⟨φ|ψ_i⟩|² >= λ_min`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameSandwich {
    pub sum: f64,
    pub max_term: f64,
    pub lambda_min: f64,
    pub count: usize,
}

impl FrameSandwich {
    /// Smallest slack of the two inequalities.
    pub fn slack(&self) -> f64 {
        (self.count as f64 * self.max_term - self.sum).min(self.sum - self.lambda_min)
    }
}

pub fn proposition1_check(vectors: &[CVector], phi: &CVector, tol_rank: f64) -> Result<FrameSandwich> {
    let dim = phi.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
    }
    let refs: Vec<&CVector> = vectors.iter().collect();
    if smallest_singular_value(dim, &refs) <= tol_rank {
        return Err(Error::NotSpanning { dim });
    }
    let terms: Vec<f64> = vectors.iter().map(|v| phi.dotc(v).norm_sqr()).collect();
    Ok(FrameSandwich {
        sum: terms.iter().sum(),
        max_term: terms.iter().copied().fold(0.0, f64::max),
        lambda_min: min_eigenvalue(&frame_operator(dim, vectors)),
        count: vectors.len(),
    })
}
