//! Unextendible product bases: built-in constructions, tensor products,
//! user-supplied sets, and validation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::epsilon;
use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, json, kron_vec, normalized, real_vector, spans, BipartiteIndex, CVector,
    HermitianMatrix, Tolerances, C64, ONE,
};

/// `|alpha⟩ ⊗ |beta⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    #[serde(with = "json::vector")]
    pub alpha: CVector,
    #[serde(with = "json::vector")]
    pub beta: CVector,
}

impl ProductState {
    pub fn new(alpha: CVector, beta: CVector) -> Result<Self> {
        Self::with_tolerance(alpha, beta, Tolerances::default().norm)
    }

    pub fn with_tolerance(alpha: CVector, beta: CVector, tol_norm: f64) -> Result<Self> {
        for v in [&alpha, &beta] {
            let norm = v.norm();
            if !((norm - 1.0).abs() <= tol_norm) {
                return Err(Error::NotNormalized { norm });
            }
        }
        Ok(ProductState { alpha, beta })
    }

    pub fn vector(&self) -> CVector {
        kron_vec(&self.alpha, &self.beta)
    }

    pub fn projector(&self) -> HermitianMatrix {
        HermitianMatrix::projector(&self.vector())
    }

    /// `⟨self|other⟩` computed factorwise.
    pub fn inner(&self, other: &ProductState) -> C64 {
        self.alpha.dotc(&other.alpha) * self.beta.dotc(&other.beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid,
    Unverified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `max_ij |⟨p_i|p_j⟩ - δ_ij|` over the full product vectors.
    pub orthonormality_defect: f64,
    pub spans_a: bool,
    pub spans_b: bool,
    /// Fewer states than `dA * dB`.
    pub proper_subspace: bool,
    pub epsilon_lower: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    pub compute_epsilon: bool,
    /// Skip the ε enumeration (verdict `Unverified`) when it would visit
    /// more than this many `dA`-subsets.
    pub max_subsets: u128,
    pub tol: Tolerances,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            compute_epsilon: true,
            max_subsets: 200_000,
            tol: Tolerances::default(),
        }
    }
}

impl ValidationOptions {
    pub fn structural() -> Self {
        ValidationOptions {
            compute_epsilon: false,
            ..Default::default()
        }
    }
}

/// An ordered set of product states `{|α_i⟩ ⊗ |β_i⟩}` together with its
/// validation status. The pairing `(α_i, β_i)` is significant, so order is
/// preserved everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct Upb {
    states: Vec<ProductState>,
    idx: BipartiteIndex,
    label: String,
    validation: ValidationReport,
}

impl Upb {
    /// Checks factor dimensions and norms, then runs the structural part of
    /// validation (no ε). Use [`Upb::validated`] for the full check.
    pub fn new(label: impl Into<String>, idx: BipartiteIndex, states: Vec<ProductState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidInput("a product basis needs at least one state".into()));
        }
        for s in &states {
            if s.alpha.len() != idx.da {
                return Err(Error::DimensionMismatch { expected: idx.da, found: s.alpha.len() });
            }
            if s.beta.len() != idx.db {
                return Err(Error::DimensionMismatch { expected: idx.db, found: s.beta.len() });
            }
        }
        let mut upb = Upb {
            states,
            idx,
            label: label.into(),
            validation: ValidationReport {
                orthonormality_defect: f64::NAN,
                spans_a: false,
                spans_b: false,
                proper_subspace: false,
                epsilon_lower: None,
                verdict: Verdict::Unverified,
            },
        };
        upb.validation = validate(&upb, &ValidationOptions::structural());
        Ok(upb)
    }

    /// Re-runs validation with `opts` and stores the report.
    pub fn validated(mut self, opts: &ValidationOptions) -> Self {
        self.validation = validate(&self, opts);
        self
    }

    pub fn states(&self) -> &[ProductState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn idx(&self) -> BipartiteIndex {
        self.idx
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.validation
    }

    pub fn verdict(&self) -> Verdict {
        self.validation.verdict
    }

    pub fn alphas(&self) -> impl Iterator<Item = &CVector> {
        self.states.iter().map(|s| &s.alpha)
    }

    pub fn betas(&self) -> impl Iterator<Item = &CVector> {
        self.states.iter().map(|s| &s.beta)
    }

    /// `Π_S = Σ_i |α_i β_i⟩⟨α_i β_i|`.
    pub fn projector_sum(&self) -> HermitianMatrix {
        let vectors: Vec<CVector> = self.states.iter().map(ProductState::vector).collect();
        crate::linalg::frame_operator(self.idx.dim(), &vectors)
    }

    /// Gram matrix of the full product vectors.
    pub fn gram(&self) -> Vec<Vec<C64>> {
        self.states
            .iter()
            .map(|a| self.states.iter().map(|b| a.inner(b)).collect())
            .collect()
    }

    pub fn to_file(&self) -> UpbFile {
        UpbFile {
            label: self.label.clone(),
            dims: [self.idx.da, self.idx.db],
            states: self.states.clone(),
        }
    }

    pub fn from_file(file: UpbFile) -> Result<Self> {
        let idx = BipartiteIndex::new(file.dims[0], file.dims[1])?;
        let states = file
            .states
            .into_iter()
            .map(|s| ProductState::new(s.alpha, s.beta))
            .collect::<Result<Vec<_>>>()?;
        Upb::new(file.label, idx, states)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: UpbFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Upb::from_file(file)
    }
}

/// On-disk form: `{ "label", "dims": [dA, dB], "states": [{ "alpha", "beta" }] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpbFile {
    pub label: String,
    pub dims: [usize; 2],
    pub states: Vec<ProductState>,
}

/// Checks pairwise orthonormality, local spanning and (optionally) the
/// certified ε lower bound. Failures are reported in the verdict.
pub fn validate(s: &Upb, opts: &ValidationOptions) -> ValidationReport {
    let tol = opts.tol;
    let idx = s.idx();
    let mut defect = 0.0f64;
    for (i, a) in s.states.iter().enumerate() {
        for (j, b) in s.states.iter().enumerate().skip(i) {
            let want = if i == j { ONE } else { C64::new(0.0, 0.0) };
            defect = defect.max((a.inner(b) - want).norm());
        }
    }
    let alphas: Vec<&CVector> = s.alphas().collect();
    let betas: Vec<&CVector> = s.betas().collect();
    let spans_a = spans(idx.da, &alphas, tol.rank);
    let spans_b = spans(idx.db, &betas, tol.rank);
    let proper_subspace = s.len() < idx.dim();

    let mut report = ValidationReport {
        orthonormality_defect: defect,
        spans_a,
        spans_b,
        proper_subspace,
        epsilon_lower: None,
        verdict: Verdict::Unverified,
    };
    if !(defect <= tol.norm) || !spans_a || !spans_b || !proper_subspace {
        report.verdict = Verdict::Invalid;
        return report;
    }
    if !opts.compute_epsilon || epsilon::subset_count(s.len(), idx.da) > opts.max_subsets {
        return report;
    }
    match epsilon::epsilon_lower_bound_with(s, tol.rank) {
        Ok((lower, _)) => {
            report.epsilon_lower = Some(lower);
            report.verdict = if lower > 0.0 { Verdict::Valid } else { Verdict::Invalid };
        }
        Err(_) => {
            report.epsilon_lower = Some(0.0);
            report.verdict = Verdict::Invalid;
        }
    }
    report
}

/// Height and normalization of the pentagonal pyramid: `h = ½√(1+√5)`,
/// `N = 2/√(5+√5)`.
pub fn pyramid_constants() -> (f64, f64) {
    let s5 = 5f64.sqrt();
    (0.5 * (1.0 + s5).sqrt(), 2.0 / (5.0 + s5).sqrt())
}

/// The five apex vectors `v_i = N(cos 2πi/5, sin 2πi/5, h)`.
pub fn pyramid_vectors() -> [CVector; 5] {
    let (h, n) = pyramid_constants();
    std::array::from_fn(|i| {
        let t = 2.0 * PI * i as f64 / 5.0;
        real_vector(&[n * t.cos(), n * t.sin(), n * h])
    })
}

/// The pentagon ("Pyramid") basis in 3x3: `p_i = v_i ⊗ v_{2i mod 5}`.
pub fn build_pyramid() -> Upb {
    let v = pyramid_vectors();
    let states = (0..5)
        .map(|i| ProductState {
            alpha: v[i].clone(),
            beta: v[(2 * i) % 5].clone(),
        })
        .collect();
    let idx = BipartiteIndex { da: 3, db: 3 };
    Upb::new("pyramid", idx, states)
        .expect("pyramid vectors are unit norm")
        .validated(&ValidationOptions::default())
}

/// The `3n - 5` state basis of `H_3 ⊗ H_n`, `n >= 4`, in the order
/// `F_k^0, F_k^1, F_k^2` (`k = 1..=n-3`), then `ψ_3 .. ψ_6`.
pub fn build_gentiles3n(n: usize) -> Result<Upb> {
    if n < 4 {
        return Err(Error::InvalidInput(format!(
            "the 3 x n family needs n >= 4, got {n}"
        )));
    }
    let omega = |p: usize| C64::from_polar(1.0, 2.0 * PI * p as f64 / (n - 2) as f64);
    let e3 = |k| basis_vector(3, k);
    let en = |k| basis_vector(n, k);
    let inv_sqrt = |x: f64| C64::new(1.0 / x.sqrt(), 0.0);

    let mut states = Vec::with_capacity(3 * n - 5);
    for (p, lead) in [(0usize, 1usize), (1, 2), (2, 0)] {
        for k in 1..=n - 3 {
            let mut beta = en(lead);
            for l in 3..n {
                beta[l] = omega((k * (l - 2)) % (n - 2));
            }
            states.push(ProductState {
                alpha: e3(p),
                beta: beta * inv_sqrt((n - 2) as f64),
            });
        }
    }
    for (a, b, j) in [(0usize, 1usize, 0usize), (1, 2, 1), (2, 0, 2)] {
        states.push(ProductState {
            alpha: (e3(a) - e3(b)) * inv_sqrt(2.0),
            beta: en(j),
        });
    }
    states.push(ProductState {
        alpha: CVector::from_element(3, inv_sqrt(3.0)),
        beta: CVector::from_element(n, inv_sqrt(n as f64)),
    });
    let idx = BipartiteIndex { da: 3, db: n };
    Ok(Upb::new(format!("gentiles:{n}"), idx, states)?.validated(&ValidationOptions::default()))
}

/// `S_1 ⊗ S_2` regrouped as `(A_1 A_2) | (B_1 B_2)`.
///
/// Both inputs must be `Valid`. The result is validated structurally only;
/// see [`ValidationOptions`] to request the ε enumeration.
pub fn tensor_upb(s1: &Upb, s2: &Upb) -> Result<Upb> {
    for s in [s1, s2] {
        if s.verdict() != Verdict::Valid {
            return Err(Error::InvalidUpb(format!(
                "tensor factor `{}` is {:?}",
                s.label(),
                s.verdict()
            )));
        }
    }
    tensor_unchecked(s1, s2)
}

pub(crate) fn tensor_unchecked(s1: &Upb, s2: &Upb) -> Result<Upb> {
    let idx = BipartiteIndex::new(s1.idx.da * s2.idx.da, s1.idx.db * s2.idx.db)?;
    let states = s1
        .states
        .iter()
        .flat_map(|a| {
            s2.states.iter().map(move |b| ProductState {
                alpha: kron_vec(&a.alpha, &b.alpha),
                beta: kron_vec(&a.beta, &b.beta),
            })
        })
        .collect();
    Upb::new(format!("tensor({},{})", s1.label, s2.label), idx, states)
}

/// Normalizes arbitrary local factors into a product state.
pub fn product_state_from(alpha: CVector, beta: CVector) -> Result<ProductState> {
    Ok(ProductState {
        alpha: normalized(alpha)?,
        beta: normalized(beta)?,
    })
}
