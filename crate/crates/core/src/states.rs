//! The bound-entangled state of a product basis,
//! `ρ = (id - Σ_i |α_i β_i⟩⟨α_i β_i|) / (dA·dB - |S|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, json, min_eigenvalue, partial_transpose_b, BipartiteIndex, CVector,
    HermitianMatrix,
};
use crate::upb::{Upb, Verdict};

#[derive(Clone, Debug, PartialEq)]
pub struct BoundEntangledState {
    rho: HermitianMatrix,
    idx: BipartiteIndex,
    source_label: String,
    /// `1 / (dA·dB - |S|)`; zero for wrapped densities.
    norm_factor: f64,
    ppt_min_eig: f64,
}

impl BoundEntangledState {
    /// Wraps an arbitrary density matrix (fixtures, PPT tests).
    pub fn from_density(rho: HermitianMatrix, idx: BipartiteIndex, label: impl Into<String>) -> Result<Self> {
        if rho.dim() != idx.dim() {
            return Err(Error::DimensionMismatch { expected: idx.dim(), found: rho.dim() });
        }
        let ppt_min_eig = min_eigenvalue(&partial_transpose_b(&rho, idx)?);
        Ok(BoundEntangledState {
            rho,
            idx,
            source_label: label.into(),
            norm_factor: 0.0,
            ppt_min_eig,
        })
    }

    pub fn rho(&self) -> &HermitianMatrix {
        &self.rho
    }

    pub fn idx(&self) -> BipartiteIndex {
        self.idx
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn norm_factor(&self) -> f64 {
        self.norm_factor
    }

    pub fn ppt_min_eig(&self) -> f64 {
        self.ppt_min_eig
    }

    /// Number of eigenvalues above `norm_factor / 2`, the midpoint of the
    /// two spectral clusters `{0, norm_factor}`. For wrapped densities the
    /// threshold is 1e-9.
    pub fn rank(&self) -> usize {
        let cut = if self.norm_factor > 0.0 { 0.5 * self.norm_factor } else { 1e-9 };
        hermitian_eig(&self.rho).values.iter().filter(|&&v| v > cut).count()
    }

    /// PPT test with the default tolerance 1e-9.
    pub fn is_ppt(&self) -> (bool, f64) {
        self.is_ppt_with(1e-9)
    }

    pub fn is_ppt_with(&self, tol: f64) -> (bool, f64) {
        (self.ppt_min_eig >= -tol, self.ppt_min_eig)
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn overlap_with(&self, psi: &CVector) -> Result<f64> {
        if psi.len() != self.idx.dim() {
            return Err(Error::DimensionMismatch { expected: self.idx.dim(), found: psi.len() });
        }
        Ok(self.rho.expectation(psi))
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            dims: [self.idx.da, self.idx.db],
            rho: self.rho.clone(),
            ppt_min_eig: self.ppt_min_eig,
            rank: self.rank(),
            source_label: self.source_label.clone(),
        }
    }
}

/// `{ "dims", "rho", "ppt_min_eig", "rank", "source_label" }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateJson {
    pub dims: [usize; 2],
    #[serde(with = "json::hermitian")]
    pub rho: HermitianMatrix,
    pub ppt_min_eig: f64,
    pub rank: usize,
    pub source_label: String,
}

/// Builds `ρ` from a product basis. Bases already known to be `Invalid`
/// are rejected; `Unverified` ones (e.g. tensor products) are accepted.
pub fn bound_entangled_state(s: &Upb) -> Result<BoundEntangledState> {
    let idx = s.idx();
    if s.len() >= idx.dim() {
        return Err(Error::InvalidUpb(format!(
            "{} states do not leave a complement in dimension {}",
            s.len(),
            idx.dim()
        )));
    }
    if s.verdict() == Verdict::Invalid {
        return Err(Error::InvalidUpb(format!("`{}` failed validation", s.label())));
    }
    let norm_factor = 1.0 / (idx.dim() - s.len()) as f64;
    let complement = HermitianMatrix::identity(idx.dim()).sub(&s.projector_sum());
    let rho = complement.scale(norm_factor);
    let ppt_min_eig = min_eigenvalue(&partial_transpose_b(&rho, idx)?);
    Ok(BoundEntangledState {
        rho,
        idx,
        source_label: s.label().to_string(),
        norm_factor,
        ppt_min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron_vec, max_abs_diff, partial_trace_b, CMatrix, C64};
    use crate::seesaw::{haar_unit_vector, restart_rng};
    use crate::upb::{build_gentiles3n, build_pyramid, tensor_upb};

    fn psi_plus_corner(idx: BipartiteIndex) -> CVector {
        let d = idx.min_dim();
        let mut v = CVector::zeros(idx.dim());
        for j in 0..d {
            v[idx.composite(j, j)] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
        }
        v
    }

    #[test]
    fn pyramid_state_spectrum() {
        let b = bound_entangled_state(&build_pyramid()).unwrap();
        assert_eq!(b.rank(), 4);
        let vals = hermitian_eig(b.rho()).values;
        for v in &vals[..5] {
            assert!(v.abs() < 1e-12);
        }
        for v in &vals[5..] {
            assert!((v - 0.25).abs() < 1e-12);
        }
        assert!((b.rho().trace() - 1.0).abs() < 1e-12);
        let scaled = b.rho().scale(4.0);
        let sq = scaled.matrix() * scaled.matrix();
        assert!(max_abs_diff(&sq, scaled.matrix()) < 1e-9);
    }

    #[test]
    fn gentiles_state_has_rank_five() {
        let b = bound_entangled_state(&build_gentiles3n(4).unwrap()).unwrap();
        assert_eq!(b.rank(), 5);
        assert!((b.norm_factor() - 0.2).abs() < 1e-15);
        let top = hermitian_eig(b.rho()).values;
        assert!((top.last().unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn basis_members_have_zero_overlap() {
        for s in [build_pyramid(), build_gentiles3n(5).unwrap()] {
            let b = bound_entangled_state(&s).unwrap();
            for p in s.states() {
                assert!(b.overlap_with(&p.vector()).unwrap().abs() < 1e-14);
            }
        }
    }

    #[test]
    fn built_in_states_are_ppt() {
        for s in [build_pyramid(), build_gentiles3n(5).unwrap()] {
            let b = bound_entangled_state(&s).unwrap();
            let (ok, min) = b.is_ppt();
            assert!(ok && min >= -1e-10, "{}: {min}", s.label());
        }
    }

    #[test]
    fn bell_state_is_not_ppt() {
        let idx = BipartiteIndex::new(2, 2).unwrap();
        let rho = HermitianMatrix::projector(&psi_plus_corner(idx));
        let b = BoundEntangledState::from_density(rho, idx, "bell").unwrap();
        let (ok, min) = b.is_ppt();
        assert!(!ok);
        assert!((min + 0.5).abs() < 1e-14);
    }

    #[test]
    fn pyramid_overlap_with_psi_plus() {
        let b = bound_entangled_state(&build_pyramid()).unwrap();
        let s5 = 5f64.sqrt();
        let closed = 0.25 * (1.0 - (7.0 + s5) / (3.0 * (3.0 + s5)));
        let got = b.overlap_with(&psi_plus_corner(b.idx())).unwrap();
        assert!((got - closed).abs() < 1e-12, "{got} vs {closed}");
    }

    #[test]
    fn gentiles_overlap_matches_per_state_sum() {
        // Independent count: F states miss the diagonal, ψ3..ψ5 contribute
        // 1/6 each, ψ6 contributes |⟨Ψ⁺|ψ6⟩|² = 1/n.
        for n in 4..=7 {
            let b = bound_entangled_state(&build_gentiles3n(n).unwrap()).unwrap();
            let got = b.overlap_with(&psi_plus_corner(b.idx())).unwrap();
            let expected = (0.5 - 1.0 / n as f64) / 5.0;
            assert!((got - expected).abs() < 1e-12, "n={n}: {got}");
        }
    }

    #[test]
    fn rho_equals_normalized_null_projector() {
        for s in [build_pyramid(), build_gentiles3n(4).unwrap()] {
            let b = bound_entangled_state(&s).unwrap();
            let e = hermitian_eig(&s.projector_sum());
            let dim = s.idx().dim();
            let mut null = CMatrix::zeros(dim, dim);
            for (v, vec) in e.values.iter().zip(&e.vectors) {
                if *v < 0.5 {
                    null += vec * vec.adjoint();
                }
            }
            let alt = null * C64::new(1.0 / (dim - s.len()) as f64, 0.0);
            assert!(max_abs_diff(&alt, b.rho().matrix()) < 1e-9);
        }
    }

    #[test]
    fn projector_completeness() {
        let s = build_pyramid();
        let b = bound_entangled_state(&s).unwrap();
        let pi = s.projector_sum();
        for k in 0..5 {
            let psi = haar_unit_vector(9, &mut restart_rng(100, k));
            let lhs = b.overlap_with(&psi).unwrap() + pi.expectation(&psi) / 4.0;
            assert!((lhs - 0.25).abs() < 1e-12);
        }
        let reduced = partial_trace_b(b.rho(), b.idx()).unwrap();
        assert!((reduced.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_square_is_ppt() {
        let p = build_pyramid();
        let pp = tensor_upb(&p, &p).unwrap();
        let b = bound_entangled_state(&pp).unwrap();
        assert!(b.ppt_min_eig() >= -1e-10);
        assert_eq!(b.rank(), 81 - 25);
    }

    #[test]
    fn rejects_invalid_and_overfull_sets() {
        let p = build_pyramid();
        let sub = Upb::new("four", p.idx(), p.states()[..4].to_vec())
            .unwrap()
            .validated(&Default::default());
        assert!(bound_entangled_state(&sub).is_err());
        let b = bound_entangled_state(&p).unwrap();
        assert!(b.overlap_with(&kron_vec(&CVector::zeros(2), &CVector::zeros(2))).is_err());
    }
}
