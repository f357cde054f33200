//! Alternating minimization over product states.
//!
//! Every objective minimized here has the form `⟨φ_A φ_B|X|φ_A φ_B⟩` for a
//! Hermitian `X`, so with one factor fixed the objective is a Hermitian
//! quadratic form in the other and its minimum over unit vectors is the
//! lowest eigenpair. Each half-step is therefore an exact minimization and
//! the value can only go down.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{lowest_eigenpair, BipartiteIndex, CMatrix, CVector, HermitianMatrix, C64, ZERO};

/// A product-state objective that is Hermitian-quadratic in each factor.
pub trait ProductObjective: Sync {
    fn dims(&self) -> BipartiteIndex;

    /// The form on `H_A` obtained by fixing `φ_B`.
    fn reduce_a(&self, phi_b: &CVector) -> HermitianMatrix;

    /// The form on `H_B` obtained by fixing `φ_A`.
    fn reduce_b(&self, phi_a: &CVector) -> HermitianMatrix;

    fn value(&self, phi_a: &CVector, phi_b: &CVector) -> f64 {
        self.reduce_a(phi_b).expectation(phi_a)
    }
}

/// `⟨φ_A φ_B|H|φ_A φ_B⟩` for an explicit Hermitian operator on `H_A ⊗ H_B`.
pub struct OperatorObjective<'a> {
    pub h: &'a HermitianMatrix,
    pub idx: BipartiteIndex,
}

impl ProductObjective for OperatorObjective<'_> {
    fn dims(&self) -> BipartiteIndex {
        self.idx
    }

    fn reduce_a(&self, phi_b: &CVector) -> HermitianMatrix {
        let (da, db) = (self.idx.da, self.idx.db);
        let h = self.h.matrix();
        let m = CMatrix::from_fn(da, da, |i, k| {
            let mut acc = ZERO;
            for j in 0..db {
                for l in 0..db {
                    acc += phi_b[j].conj() * h[(i * db + j, k * db + l)] * phi_b[l];
                }
            }
            acc
        });
        HermitianMatrix::from_exact(m)
    }

    fn reduce_b(&self, phi_a: &CVector) -> HermitianMatrix {
        let (da, db) = (self.idx.da, self.idx.db);
        let h = self.h.matrix();
        let m = CMatrix::from_fn(db, db, |j, l| {
            let mut acc = ZERO;
            for i in 0..da {
                for k in 0..da {
                    acc += phi_a[i].conj() * h[(i * db + j, k * db + l)] * phi_a[k];
                }
            }
            acc
        });
        HermitianMatrix::from_exact(m)
    }

    fn value(&self, phi_a: &CVector, phi_b: &CVector) -> f64 {
        self.h.expectation(&crate::linalg::kron_vec(phi_a, phi_b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    /// Stop once a full sweep changes the value by less than this.
    pub tol_delta: f64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            restarts: 64,
            iters: 500,
            seed: 0,
            tol_delta: 1e-13,
        }
    }
}

/// Outcome of one seeded descent.
#[derive(Clone, Debug)]
pub struct Descent {
    pub value: f64,
    pub phi_a: CVector,
    pub phi_b: CVector,
    /// Objective after the random start and after every half-step.
    pub trace: Vec<f64>,
}

impl Descent {
    /// Largest increase between consecutive half-steps (`<= 0` when monotone).
    pub fn max_increase(&self) -> f64 {
        self.trace
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct SeesawResult {
    pub best: Descent,
    pub best_restart: usize,
    /// Largest half-step increase seen across all restarts.
    pub max_increase: f64,
    pub restarts: usize,
}

/// Haar-random unit vector: normalized i.i.d. complex Gaussian entries.
pub fn haar_unit_vector<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        });
        let n = v.norm();
        if n > 1e-12 {
            return v / C64::new(n, 0.0);
        }
    }
}

/// Generator for restart `k` of a run seeded with `seed`.
pub fn restart_rng(seed: u64, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64))
}

/// Runs the alternating scheme from the given starting factors.
pub fn descend<O: ProductObjective + ?Sized>(
    obj: &O,
    mut phi_a: CVector,
    mut phi_b: CVector,
    iters: usize,
    tol_delta: f64,
) -> Descent {
    let mut trace = vec![obj.value(&phi_a, &phi_b)];
    let mut last = trace[0];
    for _ in 0..iters {
        let (va, a) = lowest_eigenpair(&obj.reduce_a(&phi_b));
        phi_a = a;
        trace.push(va);
        let (vb, b) = lowest_eigenpair(&obj.reduce_b(&phi_a));
        phi_b = b;
        trace.push(vb);
        let done = (last - vb).abs() < tol_delta;
        last = vb;
        if done {
            break;
        }
    }
    Descent {
        value: obj.value(&phi_a, &phi_b),
        phi_a,
        phi_b,
        trace,
    }
}

/// Best of `opts.restarts` descents from Haar-random starts. Restart `k`
/// draws from `restart_rng(opts.seed, k)`; the winner is the lowest value,
/// ties going to the lower restart index, so the result does not depend on
/// how restarts are scheduled across threads.
pub fn minimize<O: ProductObjective + ?Sized>(obj: &O, opts: &SeesawOptions) -> SeesawResult {
    let idx = obj.dims();
    let restarts = opts.restarts.max(1);
    let runs: Vec<Descent> = (0..restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = restart_rng(opts.seed, k);
            let a = haar_unit_vector(idx.da, &mut rng);
            let b = haar_unit_vector(idx.db, &mut rng);
            descend(obj, a, b, opts.iters.max(1), opts.tol_delta)
        })
        .collect();
    let max_increase = runs
        .iter()
        .map(Descent::max_increase)
        .fold(f64::NEG_INFINITY, f64::max);
    let (best_restart, _) = runs
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |(bi, bv), (k, r)| {
            if r.value < bv {
                (k, r.value)
            } else {
                (bi, bv)
            }
        });
    let best = runs.into_iter().nth(best_restart).expect("at least one restart");
    SeesawResult {
        best,
        best_restart,
        max_increase,
        restarts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eig, BipartiteIndex};
    use rand::Rng;

    fn random_hermitian(seed: u64, n: usize) -> HermitianMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        HermitianMatrix::new(&a + a.adjoint()).unwrap()
    }

    #[test]
    fn haar_vectors_are_unit_and_reproducible() {
        let a = haar_unit_vector(4, &mut restart_rng(3, 2));
        let b = haar_unit_vector(4, &mut restart_rng(3, 2));
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-14);
        assert_ne!(a, haar_unit_vector(4, &mut restart_rng(3, 3)));
    }

    #[test]
    fn reductions_agree_with_direct_value() {
        let h = random_hermitian(5, 6);
        let obj = OperatorObjective { h: &h, idx: BipartiteIndex { da: 2, db: 3 } };
        let mut rng = restart_rng(9, 0);
        let a = haar_unit_vector(2, &mut rng);
        let b = haar_unit_vector(3, &mut rng);
        let direct = obj.value(&a, &b);
        assert!((obj.reduce_a(&b).expectation(&a) - direct).abs() < 1e-12);
        assert!((obj.reduce_b(&a).expectation(&b) - direct).abs() < 1e-12);
    }

    #[test]
    fn descent_is_monotone_and_bounded_by_spectrum() {
        let h = random_hermitian(11, 9);
        let obj = OperatorObjective { h: &h, idx: BipartiteIndex { da: 3, db: 3 } };
        let res = minimize(&obj, &SeesawOptions { restarts: 16, ..Default::default() });
        assert!(res.max_increase <= 1e-12, "{}", res.max_increase);
        // A product state cannot beat the global minimum eigenvalue.
        let lo = hermitian_eig(&h).values[0];
        assert!(res.best.value >= lo - 1e-12);
    }

    #[test]
    fn product_operator_minimum_is_found() {
        // For H = A ⊗ B with A, B positive the product minimum is λ_min(A) λ_min(B).
        let a = HermitianMatrix::new(CMatrix::from_diagonal(&crate::linalg::real_vector(&[2.0, 0.5, 3.0]))).unwrap();
        let b = HermitianMatrix::new(CMatrix::from_diagonal(&crate::linalg::real_vector(&[1.0, 4.0]))).unwrap();
        let h = HermitianMatrix::new(crate::linalg::kron(a.matrix(), b.matrix())).unwrap();
        let obj = OperatorObjective { h: &h, idx: BipartiteIndex { da: 3, db: 2 } };
        let res = minimize(&obj, &SeesawOptions { restarts: 4, ..Default::default() });
        assert!((res.best.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn result_is_independent_of_thread_count() {
        let h = random_hermitian(21, 12);
        let obj = OperatorObjective { h: &h, idx: BipartiteIndex { da: 3, db: 4 } };
        let opts = SeesawOptions { restarts: 12, seed: 5, ..Default::default() };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let r1 = one.install(|| minimize(&obj, &opts));
        let r4 = four.install(|| minimize(&obj, &opts));
        assert_eq!(r1.best.value.to_bits(), r4.best.value.to_bits());
        assert_eq!(r1.best_restart, r4.best_restart);
    }
}
