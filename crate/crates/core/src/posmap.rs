//! Positive maps read off a witness through the Choi–Jamiołkowski
//! correspondence.
//!
//! The witness `H` is the Choi matrix of `S : B(H_A) → B(H_B)`, i.e.
//! `S(|i⟩⟨j|)` is the `(i, j)` block of `H` and
//! `S(X) = Σ_ij X_ij H_ij = Tr_A[H (Xᵀ ⊗ I)]`. Positivity of `S` on pure
//! states is product positivity of `H`:
//! `⟨ψ|S(|φ⟩⟨φ|)|ψ⟩ = ⟨φ̄ ψ|H|φ̄ ψ⟩`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, json, kron, max_abs_diff, min_eigenvalue, BipartiteIndex, CMatrix, CVector,
    HermitianMatrix, C64, ZERO,
};
use crate::seesaw::{self, haar_unit_vector, restart_rng, OperatorObjective, SeesawOptions};
use crate::states::BoundEntangledState;
use crate::witness::{ProbeOptions, Witness};

/// Orthonormal basis of `H_A` in which the map's coordinates are taken.
#[derive(Clone, Debug, PartialEq)]
pub enum MapBasis {
    Standard,
    /// Columns are the basis vectors.
    Custom(CMatrix),
}

#[derive(Clone, Debug)]
pub struct PositiveMapRep {
    choi: HermitianMatrix,
    in_dim: usize,
    out_dim: usize,
    basis: Option<CMatrix>,
    basis_label: String,
    source_label: Option<String>,
}

/// Reads the witness as a Choi matrix; with a custom basis `U` the Choi
/// matrix becomes `(U† ⊗ I) H (U ⊗ I)`.
pub fn map_from_witness(w: &Witness, basis: &MapBasis) -> Result<PositiveMapRep> {
    let idx = w.idx();
    let (choi, basis, basis_label) = match basis {
        MapBasis::Standard => (w.h().clone(), None, "standard".to_string()),
        MapBasis::Custom(u) => {
            if u.nrows() != idx.da || u.ncols() != idx.da {
                return Err(Error::DimensionMismatch { expected: idx.da, found: u.nrows().max(u.ncols()) });
            }
            let defect = max_abs_diff(&(u.adjoint() * u), &CMatrix::identity(idx.da, idx.da));
            if defect > 1e-10 {
                return Err(Error::NotOrthonormal { defect });
            }
            let uu = kron(u, &CMatrix::identity(idx.db, idx.db));
            let m = uu.adjoint() * w.h().matrix() * &uu;
            (HermitianMatrix::new(m)?, Some(u.clone()), "custom".to_string())
        }
    };
    Ok(PositiveMapRep {
        choi,
        in_dim: idx.da,
        out_dim: idx.db,
        basis,
        basis_label,
        source_label: Some(w.source_label().to_string()),
    })
}

/// Sampled and optimized minima of `λ_min(S(|φ⟩⟨φ|))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapProbe {
    pub min_found: f64,
    pub min_sampled: f64,
    pub min_seesaw: f64,
}

impl PositiveMapRep {
    /// Wraps an explicit Choi matrix on `C^in ⊗ C^out`.
    pub fn from_choi(choi: HermitianMatrix, in_dim: usize, out_dim: usize, label: impl Into<String>) -> Result<Self> {
        let idx = BipartiteIndex::new(in_dim, out_dim)?;
        if choi.dim() != idx.dim() {
            return Err(Error::DimensionMismatch { expected: idx.dim(), found: choi.dim() });
        }
        Ok(PositiveMapRep {
            choi,
            in_dim,
            out_dim,
            basis: None,
            basis_label: label.into(),
            source_label: None,
        })
    }

    pub fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn basis_label(&self) -> &str {
        &self.basis_label
    }

    pub fn source_label(&self) -> Option<&str> {
        self.source_label.as_deref()
    }

    fn idx(&self) -> BipartiteIndex {
        BipartiteIndex { da: self.in_dim, db: self.out_dim }
    }

    /// `S(|i⟩⟨j|)`.
    pub fn block(&self, i: usize, j: usize) -> CMatrix {
        let n = self.out_dim;
        self.choi.matrix().view((i * n, j * n), (n, n)).into_owned()
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.in_dim || x.ncols() != self.in_dim {
            return Err(Error::DimensionMismatch { expected: self.in_dim, found: x.nrows().max(x.ncols()) });
        }
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                if x[(i, j)] != ZERO {
                    out += self.block(i, j) * x[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// Hilbert–Schmidt adjoint, `S*(Y)_ij = Tr(S(|j⟩⟨i|) Y)`.
    pub fn adjoint_apply(&self, y: &CMatrix) -> Result<CMatrix> {
        if y.nrows() != self.out_dim || y.ncols() != self.out_dim {
            return Err(Error::DimensionMismatch { expected: self.out_dim, found: y.nrows().max(y.ncols()) });
        }
        Ok(CMatrix::from_fn(self.in_dim, self.in_dim, |i, j| {
            (self.block(j, i) * y).trace()
        }))
    }

    /// Smallest eigenvalue of the Choi matrix; negative iff `S` is not
    /// completely positive.
    pub fn complete_positivity_check(&self) -> f64 {
        min_eigenvalue(&self.choi)
    }

    /// Spread `λ_max - λ_min` of `S(I)`; zero iff `S(I)` is a multiple of
    /// the identity.
    pub fn unitality_defect(&self) -> f64 {
        let si = self
            .apply(&CMatrix::identity(self.in_dim, self.in_dim))
            .expect("identity has the input dimension");
        let vals = hermitian_eig(&HermitianMatrix::from_exact(si)).values;
        vals[vals.len() - 1] - vals[0]
    }

    /// Looks for `φ` with `S(|φ⟩⟨φ|)` not positive: Haar samples plus the
    /// seesaw on the Choi matrix. Negative values disprove positivity;
    /// non-negative ones are evidence only.
    pub fn positivity_probe(&self, opts: &ProbeOptions) -> MapProbe {
        let obj = OperatorObjective { h: &self.choi, idx: self.idx() };
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
            let phi = haar_unit_vector(self.in_dim, &mut rng);
            let out = self.apply(&(&phi * phi.adjoint())).expect("dimension checked");
            min_sampled = min_sampled.min(min_eigenvalue(&HermitianMatrix::from_exact(out)));
        }
        MapProbe {
            min_found: run.best.value.min(min_sampled),
            min_sampled,
            min_seesaw: run.best.value,
        }
    }

    /// `⟨Ψ⁺|(id ⊗ S*)(ρ)|Ψ⁺⟩` with unnormalized `Ψ⁺ = Σ_i |ii⟩`, computed
    /// block by block in the map's coordinates.
    pub fn indecomposability_value(&self, rho: &HermitianMatrix) -> Result<f64> {
        let idx = self.idx();
        if rho.dim() != idx.dim() {
            return Err(Error::DimensionMismatch { expected: idx.dim(), found: rho.dim() });
        }
        let rho = match &self.basis {
            None => rho.matrix().clone(),
            Some(u) => {
                let uu = kron(u, &CMatrix::identity(self.out_dim, self.out_dim));
                uu.adjoint() * rho.matrix() * &uu
            }
        };
        let n = self.out_dim;
        let mut acc = ZERO;
        for i in 0..self.in_dim {
            for j in 0..self.in_dim {
                let block = rho.view((i * n, j * n), (n, n)).into_owned();
                acc += self.adjoint_apply(&block)?[(i, j)];
            }
        }
        Ok(acc.re)
    }

    pub fn to_json(&self, certificates: Option<MapCertificates>) -> MapJson {
        MapJson {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            basis: self.basis_label.clone(),
            source_label: self.source_label.clone(),
            choi: self.choi.clone(),
            certificates,
        }
    }
}

/// `S = id`: Choi matrix `|Ψ⁺⟩⟨Ψ⁺|` (unnormalized).
pub fn identity_map(d: usize) -> Result<PositiveMapRep> {
    let idx = BipartiteIndex::new(d, d)?;
    let mut v = CVector::zeros(idx.dim());
    for i in 0..d {
        v[idx.composite(i, i)] = C64::new(1.0, 0.0);
    }
    PositiveMapRep::from_choi(HermitianMatrix::projector(&v), d, d, "identity")
}

/// `S = transpose`: Choi matrix is the swap operator.
pub fn transposition_map(d: usize) -> Result<PositiveMapRep> {
    let idx = BipartiteIndex::new(d, d)?;
    let mut m = CMatrix::zeros(idx.dim(), idx.dim());
    for i in 0..d {
        for j in 0..d {
            m[(idx.composite(i, j), idx.composite(j, i))] = C64::new(1.0, 0.0);
        }
    }
    PositiveMapRep::from_choi(HermitianMatrix::new(m)?, d, d, "transpose")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapCertificates {
    pub positivity_min_sampled: f64,
    pub choi_min_eig: f64,
    pub indecomp_value: f64,
    pub ppt_of_rho: f64,
    pub unitality_defect: f64,
}

impl MapCertificates {
    /// Positive (as far as probed), not completely positive, negative on a
    /// PPT state.
    pub fn granted(&self, tol: f64) -> bool {
        self.positivity_min_sampled >= -tol
            && self.choi_min_eig < -tol
            && self.indecomp_value < -tol
            && self.ppt_of_rho >= -tol
    }
}

/// Evaluates every ingredient of the indecomposability argument for `m`
/// against the PPT state `b`. Maps built from a witness must be paired with
/// the state of the same basis.
pub fn indecomposability_certificate(
    m: &PositiveMapRep,
    b: &BoundEntangledState,
    opts: &ProbeOptions,
) -> Result<MapCertificates> {
    let idx = b.idx();
    if idx.da != m.in_dim || idx.db != m.out_dim {
        return Err(Error::DimensionMismatch { expected: m.idx().dim(), found: idx.dim() });
    }
    if let Some(src) = &m.source_label {
        if src != b.source_label() {
            return Err(Error::SourceMismatch {
                state: b.source_label().to_string(),
                map: src.clone(),
            });
        }
    }
    Ok(MapCertificates {
        positivity_min_sampled: m.positivity_probe(opts).min_found,
        choi_min_eig: m.complete_positivity_check(),
        indecomp_value: m.indecomposability_value(b.rho())?,
        ppt_of_rho: b.ppt_min_eig(),
        unitality_defect: m.unitality_defect(),
    })
}

/// `{ "in_dim", "out_dim", "basis", "source_label", "choi", "certificates" }`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapJson {
    pub in_dim: usize,
    pub out_dim: usize,
    pub basis: String,
    pub source_label: Option<String>,
    #[serde(with = "json::hermitian")]
    pub choi: HermitianMatrix,
    pub certificates: Option<MapCertificates>,
}
