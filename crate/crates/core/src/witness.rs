//! Entanglement witnesses `H = Σ_i |α_i β_i⟩⟨α_i β_i| - d·μ·|Ψ⟩⟨Ψ|`.
//!
//! `H` is non-negative on every product state as long as `μ` does not exceed
//! the separation constant ε (every maximally entangled `Ψ` has
//! `|⟨Ψ|φ_A φ_B⟩|² <= 1/d`), while on the bound-entangled state
//! `Tr(Hρ) = -d·μ·⟨Ψ|ρ|Ψ⟩ < 0` because `ρ` is supported on the complement of
//! the basis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::epsilon::{epsilon_lower_bound, SubsetCertificate};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, json, kron_vec, partial_trace_b, BipartiteIndex, CVector, HermitianMatrix,
    Tolerances, C64,
};
use crate::seesaw::{self, haar_unit_vector, restart_rng, OperatorObjective, SeesawOptions};
use crate::states::{bound_entangled_state, BoundEntangledState};
use crate::upb::Upb;

/// Default lower limit on `⟨Ψ|ρ|Ψ⟩` when selecting `Ψ`.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// Member `Ψ_{k,l}` of the generalized Bell family, placed at coordinate
/// `offset` of the larger factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellIndex {
    pub k: usize,
    pub l: usize,
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxEntangledState {
    #[serde(with = "json::vector")]
    pub psi: CVector,
    pub idx: BipartiteIndex,
    pub schmidt_dim: usize,
    /// Base-2 von Neumann entropy of `Tr_B |ψ⟩⟨ψ|`.
    pub entropy: f64,
    pub bell: Option<BellIndex>,
}

impl MaxEntangledState {
    pub fn new(psi: CVector, idx: BipartiteIndex) -> Result<Self> {
        let (ok, entropy) = is_maximally_entangled(&psi, idx)?;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "state is not maximally entangled (entropy {entropy}, want log2 {})",
                idx.min_dim()
            )));
        }
        Ok(MaxEntangledState {
            psi,
            idx,
            schmidt_dim: idx.min_dim(),
            entropy,
            bell: None,
        })
    }

    pub fn bell(idx: BipartiteIndex, bell: BellIndex) -> Result<Self> {
        let mut s = MaxEntangledState::new(generalized_bell(idx, bell)?, idx)?;
        s.bell = Some(bell);
        Ok(s)
    }
}

/// `-Tr ρ log₂ ρ`, with `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &HermitianMatrix) -> f64 {
    hermitian_eig(rho)
        .values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum()
}

/// Compares the entanglement entropy of `psi` with `log₂ min(dA, dB)`.
pub fn is_maximally_entangled(psi: &CVector, idx: BipartiteIndex) -> Result<(bool, f64)> {
    if psi.len() != idx.dim() {
        return Err(Error::DimensionMismatch { expected: idx.dim(), found: psi.len() });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > Tolerances::default().norm {
        return Err(Error::NotNormalized { norm });
    }
    let reduced = partial_trace_b(&HermitianMatrix::projector(psi), idx)?;
    let entropy = von_neumann_entropy(&reduced);
    let target = (idx.min_dim() as f64).log2();
    Ok(((entropy - target).abs() <= 1e-8, entropy))
}

/// `Ψ_{k,l} = d^{-1/2} Σ_j ω^{jk} |j⟩ ⊗ |j + l mod d⟩`, `ω = e^{2πi/d}`,
/// `d = min(dA, dB)`, with the larger factor's index shifted by `offset`.
pub fn generalized_bell(idx: BipartiteIndex, bell: BellIndex) -> Result<CVector> {
    let d = idx.min_dim();
    let spare = idx.da.max(idx.db) - d;
    if bell.k >= d || bell.l >= d || bell.offset > spare {
        return Err(Error::InvalidInput(format!("Bell index {bell:?} out of range for {idx:?}")));
    }
    let amp = 1.0 / (d as f64).sqrt();
    let mut v = CVector::zeros(idx.dim());
    for j in 0..d {
        let (mut a, mut b) = (j, (j + bell.l) % d);
        if idx.da > idx.db {
            a += bell.offset;
        } else {
            b += bell.offset;
        }
        v[idx.composite(a, b)] = C64::from_polar(amp, 2.0 * PI * ((j * bell.k) % d) as f64 / d as f64);
    }
    Ok(v)
}

fn bell_family(idx: BipartiteIndex) -> impl Iterator<Item = BellIndex> {
    let d = idx.min_dim();
    let spare = idx.da.max(idx.db) - d;
    (0..=spare).flat_map(move |offset| {
        (0..d).flat_map(move |k| (0..d).map(move |l| BellIndex { k, l, offset }))
    })
}

/// Scans the generalized Bell family (all offsets) and returns the member
/// with the largest `⟨Ψ|ρ|Ψ⟩`, first in scan order on ties.
pub fn choose_max_entangled(b: &BoundEntangledState, threshold: f64) -> Result<MaxEntangledState> {
    let idx = b.idx();
    let mut best: Option<(f64, BellIndex)> = None;
    for bell in bell_family(idx) {
        let ov = b.overlap_with(&generalized_bell(idx, bell)?)?;
        if best.is_none_or(|(v, _)| ov > v) {
            best = Some((ov, bell));
        }
    }
    let (ov, bell) = best.expect("the Bell family is never empty");
    if !(ov > threshold) {
        return Err(Error::NoEntangledCandidate { threshold, best: ov });
    }
    MaxEntangledState::bell(idx, bell)
}

/// How the pipeline picks `Ψ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsiSelection {
    /// `Ψ⁺ = Ψ_{0,0}` on the leading corner when it clears the threshold,
    /// otherwise the best member of the family.
    #[default]
    Canonical,
    /// Always the best member of the family.
    MaxOverlap,
}

pub fn select_max_entangled(
    b: &BoundEntangledState,
    threshold: f64,
    selection: PsiSelection,
) -> Result<MaxEntangledState> {
    if selection == PsiSelection::Canonical {
        let plus = MaxEntangledState::bell(b.idx(), BellIndex { k: 0, l: 0, offset: 0 })?;
        if b.overlap_with(&plus.psi)? > threshold {
            return Ok(plus);
        }
    }
    choose_max_entangled(b, threshold)
}

#[derive(Clone, Debug)]
pub struct Witness {
    h: HermitianMatrix,
    mu: f64,
    psi: MaxEntangledState,
    source_label: String,
    idx: BipartiteIndex,
    eps_lower: f64,
    certificate: SubsetCertificate,
    overlap: f64,
    trace_h_rho: f64,
}

impl Witness {
    pub fn h(&self) -> &HermitianMatrix {
        &self.h
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn psi(&self) -> &MaxEntangledState {
        &self.psi
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn idx(&self) -> BipartiteIndex {
        self.idx
    }

    pub fn eps_lower(&self) -> f64 {
        self.eps_lower
    }

    pub fn certificate(&self) -> &SubsetCertificate {
        &self.certificate
    }

    /// `⟨Ψ|ρ|Ψ⟩` for the state built from the same basis.
    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn trace_h_rho(&self) -> f64 {
        self.trace_h_rho
    }

    /// `d = min(dA, dB)`.
    pub fn d(&self) -> usize {
        self.idx.min_dim()
    }

    pub fn to_json(&self, positivity_min_found: f64) -> WitnessJson {
        WitnessJson {
            h: self.h.clone(),
            mu: self.mu,
            psi: self.psi.psi.clone(),
            trace_h_rho: self.trace_h_rho,
            eps_lower: self.eps_lower,
            positivity_min_found,
        }
    }
}

/// `{ "H", "mu", "psi", "trace_H_rho", "eps_lower", "positivity_min_found" }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessJson {
    #[serde(rename = "H", with = "json::hermitian")]
    pub h: HermitianMatrix,
    pub mu: f64,
    #[serde(with = "json::vector")]
    pub psi: CVector,
    #[serde(rename = "trace_H_rho")]
    pub trace_h_rho: f64,
    pub eps_lower: f64,
    pub positivity_min_found: f64,
}

/// Builds the witness; `mu` defaults to the certified ε lower bound and
/// must lie in `(0, eps_lower]`.
pub fn build_witness(s: &Upb, psi: MaxEntangledState, mu: Option<f64>) -> Result<Witness> {
    let lower = epsilon_lower_bound(s)?;
    build_witness_with_lower(s, psi, mu, lower)
}

/// As [`build_witness`], reusing an already computed lower bound.
pub fn build_witness_with_lower(
    s: &Upb,
    psi: MaxEntangledState,
    mu: Option<f64>,
    lower: (f64, SubsetCertificate),
) -> Result<Witness> {
    let eps_lower = lower.0;
    let mu = mu.unwrap_or(eps_lower);
    if !(mu > 0.0 && mu <= eps_lower) {
        return Err(Error::MuOutOfRange { mu, eps_lower });
    }
    assemble(s, psi, mu, lower)
}

/// Builds `H` for any `mu`, skipping the range check. Only for probing
/// what happens outside the certified range.
pub fn build_witness_unchecked(s: &Upb, psi: MaxEntangledState, mu: f64) -> Result<Witness> {
    assemble(s, psi, mu, epsilon_lower_bound(s)?)
}

fn assemble(s: &Upb, psi: MaxEntangledState, mu: f64, lower: (f64, SubsetCertificate)) -> Result<Witness> {
    let idx = s.idx();
    if psi.idx != idx {
        return Err(Error::DimensionMismatch { expected: idx.dim(), found: psi.idx.dim() });
    }
    let rho = bound_entangled_state(s)?;
    let overlap = rho.overlap_with(&psi.psi)?;
    if !(overlap > 1e-12) {
        return Err(Error::NoEntangledCandidate { threshold: 1e-12, best: overlap });
    }
    let d = idx.min_dim() as f64;
    let h = s
        .projector_sum()
        .sub(&HermitianMatrix::projector(&psi.psi).scale(d * mu));
    let trace_h_rho = h.trace_product(rho.rho());
    Ok(Witness {
        h,
        mu,
        psi,
        source_label: s.label().to_string(),
        idx,
        eps_lower: lower.0,
        certificate: lower.1,
        overlap,
        trace_h_rho,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub restarts: usize,
    pub iters: usize,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            restarts: 64,
            iters: 500,
            samples: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    /// `min(min_seesaw, min_sampled)`.
    pub min_found: f64,
    pub min_seesaw: f64,
    pub min_sampled: f64,
    /// `eps_lower - mu`: no product state can go below this.
    pub analytic_floor: f64,
    /// Largest half-step increase seen by the seesaw.
    pub seesaw_max_increase: f64,
}

impl PositivityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_found >= -tol
    }
}

/// Minimizes `Tr(H |φ_A⟩⟨φ_A| ⊗ |φ_B⟩⟨φ_B|)` by alternating minimization
/// plus uniform sampling of product states. Restart `k` is seeded with
/// `seed + k`; the samples use `seed + restarts`.
pub fn check_product_positivity(w: &Witness, opts: &ProbeOptions) -> PositivityReport {
    let obj = OperatorObjective { h: &w.h, idx: w.idx };
    let run = seesaw::minimize(
        &obj,
        &SeesawOptions {
            restarts: opts.restarts,
            iters: opts.iters,
            seed: opts.seed,
            ..Default::default()
        },
    );
    let mut rng = restart_rng(opts.seed, opts.restarts);
    let mut min_sampled = f64::INFINITY;
    for _ in 0..opts.samples {
        let a = haar_unit_vector(w.idx.da, &mut rng);
        let b = haar_unit_vector(w.idx.db, &mut rng);
        min_sampled = min_sampled.min(w.h.expectation(&kron_vec(&a, &b)));
    }
    PositivityReport {
        min_found: run.best.value.min(min_sampled),
        min_seesaw: run.best.value,
        min_sampled,
        analytic_floor: w.eps_lower - w.mu,
        seesaw_max_increase: run.max_increase,
    }
}

/// `|⟨Ψ|φ_A ⊗ φ_B⟩|²`, at most `1/d` for maximally entangled `Ψ`.
pub fn lemma1_check(psi: &MaxEntangledState, phi_a: &CVector, phi_b: &CVector) -> Result<f64> {
    let idx = psi.idx;
    if phi_a.len() != idx.da {
        return Err(Error::DimensionMismatch { expected: idx.da, found: phi_a.len() });
    }
    if phi_b.len() != idx.db {
        return Err(Error::DimensionMismatch { expected: idx.db, found: phi_b.len() });
    }
    Ok(psi.psi.dotc(&kron_vec(phi_a, phi_b)).norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, conj_vector, kron, CMatrix};
    use crate::upb::{build_gentiles3n, build_pyramid};

    const PLUS: BellIndex = BellIndex { k: 0, l: 0, offset: 0 };

    fn pentagon_overlap() -> f64 {
        let s5 = 5f64.sqrt();
        0.25 * (1.0 - (7.0 + s5) / (3.0 * (3.0 + s5)))
    }

    fn eps_pentagon() -> f64 {
        (4.0 + 2f64.sqrt() - 5f64.sqrt() - 10f64.sqrt()) / 9.0
    }

    #[test]
    fn psi_plus_is_maximally_entangled() {
        let idx = BipartiteIndex::new(3, 3).unwrap();
        let psi = generalized_bell(idx, PLUS).unwrap();
        let (ok, s) = is_maximally_entangled(&psi, idx).unwrap();
        assert!(ok);
        assert!((s - 3f64.log2()).abs() < 1e-12);
        assert!((s - 1.58496).abs() < 1e-5);
    }

    #[test]
    fn product_and_partial_states_are_not() {
        let idx = BipartiteIndex::new(3, 3).unwrap();
        let e00 = kron_vec(&basis_vector(3, 0), &basis_vector(3, 0));
        let (ok, s) = is_maximally_entangled(&e00, idx).unwrap();
        assert!(!ok && s.abs() < 1e-12);
        let e11 = kron_vec(&basis_vector(3, 1), &basis_vector(3, 1));
        let two = (e00 + e11) * C64::new(0.5f64.sqrt(), 0.0);
        let (ok, s) = is_maximally_entangled(&two, idx).unwrap();
        assert!(!ok && (s - 1.0).abs() < 1e-12);
        assert!(is_maximally_entangled(&basis_vector(4, 0), idx).is_err());
    }

    #[test]
    fn whole_bell_family_is_maximally_entangled() {
        for idx in [BipartiteIndex { da: 3, db: 3 }, BipartiteIndex { da: 3, db: 5 }, BipartiteIndex { da: 4, db: 2 }] {
            for bell in bell_family(idx) {
                MaxEntangledState::bell(idx, bell).unwrap();
            }
        }
    }

    #[test]
    fn psi_plus_qualifies_for_pyramid() {
        let b = bound_entangled_state(&build_pyramid()).unwrap();
        let plus = select_max_entangled(&b, DEFAULT_THRESHOLD, PsiSelection::Canonical).unwrap();
        assert_eq!(plus.bell, Some(PLUS));
        assert!((b.overlap_with(&plus.psi).unwrap() - pentagon_overlap()).abs() < 1e-12);
        let best = choose_max_entangled(&b, DEFAULT_THRESHOLD).unwrap();
        assert!(b.overlap_with(&best.psi).unwrap() >= pentagon_overlap());
    }

    #[test]
    fn psi_plus_qualifies_for_gentiles4() {
        let b = bound_entangled_state(&build_gentiles3n(4).unwrap()).unwrap();
        let plus = select_max_entangled(&b, DEFAULT_THRESHOLD, PsiSelection::Canonical).unwrap();
        assert_eq!(plus.bell, Some(PLUS));
        assert!((b.overlap_with(&plus.psi).unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn no_candidate_when_state_avoids_family() {
        // ρ = |01⟩⟨01| is orthogonal to every Ψ_{k,0} but not Ψ_{k,1}; use a
        // threshold no member can reach instead.
        let idx = BipartiteIndex::new(2, 2).unwrap();
        let v = kron_vec(&basis_vector(2, 0), &basis_vector(2, 1));
        let b = BoundEntangledState::from_density(HermitianMatrix::projector(&v), idx, "01").unwrap();
        let err = choose_max_entangled(&b, 0.75).unwrap_err();
        assert!(matches!(err, Error::NoEntangledCandidate { .. }));
    }

    #[test]
    fn pyramid_witness_negativity() {
        let s = build_pyramid();
        let b = bound_entangled_state(&s).unwrap();
        let psi = MaxEntangledState::bell(s.idx(), PLUS).unwrap();
        let w = build_witness(&s, psi, None).unwrap();
        assert!((w.mu() - eps_pentagon()).abs() < 1e-12);
        let identity = -3.0 * w.mu() * b.overlap_with(&w.psi().psi).unwrap();
        assert!((w.trace_h_rho() - identity).abs() < 1e-12);
        let expected = -3.0 * eps_pentagon() * pentagon_overlap();
        assert!((w.trace_h_rho() - expected).abs() < 1e-12);
        assert!((w.trace_h_rho() + 5.4483e-4).abs() < 1e-7, "{}", w.trace_h_rho());
    }

    #[test]
    fn witness_h_matches_definition() {
        let s = build_pyramid();
        let psi = MaxEntangledState::bell(s.idx(), PLUS).unwrap();
        let w = build_witness(&s, psi.clone(), None).unwrap();
        let mut direct = CMatrix::zeros(9, 9);
        for p in s.states() {
            direct += kron(&(&p.alpha * p.alpha.adjoint()), &(&p.beta * p.beta.adjoint()));
        }
        direct -= &psi.psi * psi.psi.adjoint() * C64::new(3.0 * w.mu(), 0.0);
        assert!(crate::linalg::max_abs_diff(&direct, w.h().matrix()) < 1e-12);
        assert!(w.h().hermiticity_defect() < 1e-15);
    }

    #[test]
    fn halving_mu_halves_the_negative_part() {
        let s = build_pyramid();
        let psi = MaxEntangledState::bell(s.idx(), PLUS).unwrap();
        let w = build_witness(&s, psi.clone(), None).unwrap();
        let w2 = build_witness(&s, psi, Some(w.mu() / 2.0)).unwrap();
        assert!((w2.trace_h_rho() - w.trace_h_rho() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mu_range_is_enforced() {
        let s = build_pyramid();
        let psi = MaxEntangledState::bell(s.idx(), PLUS).unwrap();
        for mu in [2.0 * eps_pentagon(), 0.0, -1e-3] {
            let err = build_witness(&s, psi.clone(), Some(mu)).unwrap_err();
            assert!(matches!(err, Error::MuOutOfRange { .. }));
        }
        assert!(build_witness_unchecked(&s, psi, 2.0 * eps_pentagon()).is_ok());
    }

    #[test]
    fn witness_on_basis_members() {
        let s = build_pyramid();
        let psi = MaxEntangledState::bell(s.idx(), PLUS).unwrap();
        let w = build_witness(&s, psi.clone(), None).unwrap();
        for p in s.states() {
            let v = p.vector();
            let val = w.h().expectation(&v);
            let ov = psi.psi.dotc(&v).norm_sqr();
            assert!((val - (1.0 - 3.0 * w.mu() * ov)).abs() < 1e-12);
            assert!(val >= 1.0 - w.mu() - 1e-15);
        }
    }

    #[test]
    fn product_positivity_with_full_and_half_mu() {
        let s = build_pyramid();
        let psi = MaxEntangledState::bell(s.idx(), PLUS).unwrap();
        let opts = ProbeOptions { restarts: 16, samples: 2000, ..Default::default() };
        let w = build_witness(&s, psi.clone(), None).unwrap();
        let r = check_product_positivity(&w, &opts);
        assert!(r.analytic_floor.abs() < 1e-18);
        assert!(r.holds(1e-9));
        assert!(r.seesaw_max_increase <= 1e-12);
        let w2 = build_witness(&s, psi, Some(w.mu() / 2.0)).unwrap();
        let r2 = check_product_positivity(&w2, &opts);
        assert!(r2.analytic_floor > 0.0);
        assert!(r2.min_found >= r2.analytic_floor - 1e-9);
    }

    #[test]
    fn lemma1_saturation_and_orthogonality() {
        let idx = BipartiteIndex::new(3, 3).unwrap();
        let psi = MaxEntangledState::bell(idx, PLUS).unwrap();
        let phi = haar_unit_vector(3, &mut restart_rng(17, 0));
        let sat = lemma1_check(&psi, &phi, &conj_vector(&phi)).unwrap();
        assert!((sat - 1.0 / 3.0).abs() < 1e-14);
        // φ_A ⊥ conj(φ_B) gives zero.
        let zero = lemma1_check(&psi, &basis_vector(3, 0), &basis_vector(3, 1)).unwrap();
        assert!(zero.abs() < 1e-15);
        assert!(lemma1_check(&psi, &basis_vector(2, 0), &basis_vector(3, 1)).is_err());
    }

    #[test]
    fn gentiles_witness() {
        let s = build_gentiles3n(4).unwrap();
        let psi = MaxEntangledState::bell(s.idx(), PLUS).unwrap();
        let w = build_witness(&s, psi, None).unwrap();
        assert!((w.overlap() - 0.05).abs() < 1e-12);
        assert!((w.trace_h_rho() + 3.0 * w.mu() * 0.05).abs() < 1e-12);
    }
}
