//! Pipeline driver behind the `upbw` binary.
//!
//! Every command loads a product basis, runs the stages it needs and
//! serializes one JSON document. Randomized stages get `seed` plus a fixed
//! offset, so a single `--seed` pins the whole run and identical configs
//! give byte-identical output.

use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use upbw::epsilon::{epsilon_lower_bound_with, epsilon_upper_bound_run, subset_count, SubsetCertificate};
use upbw::error::Error;
use upbw::linalg::{json, CVector, Tolerances};
use upbw::posmap::{indecomposability_certificate, map_from_witness, MapBasis, MapCertificates, MapJson};
use upbw::seesaw::SeesawOptions;
use upbw::states::{bound_entangled_state, BoundEntangledState};
use upbw::upb::{
    build_gentiles3n, build_pyramid, pyramid_constants, tensor_upb, ProductState, Upb,
    ValidationOptions, ValidationReport, Verdict,
};
use upbw::witness::{
    build_witness_with_lower, generalized_bell, select_max_entangled, BellIndex, PositivityReport,
    ProbeOptions, PsiSelection, Witness, WitnessJson,
};

pub mod format;

pub const SEED_OFFSET_EPSILON: u64 = 1;
pub const SEED_OFFSET_WITNESS: u64 = 2;
pub const SEED_OFFSET_MAP: u64 = 3;

/// Tolerance used when granting certificates.
pub const CERT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Build,
    Validate,
    State,
    Epsilon,
    Witness,
    Map,
    Certify,
    Report,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub upb_spec: String,
    pub seed: u64,
    pub restarts: usize,
    pub iters: usize,
    pub samples: usize,
    pub tol_rank: Option<f64>,
    pub mu: Option<f64>,
    pub threshold: f64,
    pub psi: PsiSelection,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, upb_spec: impl Into<String>) -> Self {
        RunConfig {
            command,
            upb_spec: upb_spec.into(),
            seed: 0,
            restarts: 64,
            iters: 500,
            samples: 10_000,
            tol_rank: None,
            mu: None,
            threshold: upbw::witness::DEFAULT_THRESHOLD,
            psi: PsiSelection::Canonical,
            output: None,
        }
    }

    fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(r) = self.tol_rank {
            t.rank = r;
        }
        t
    }

    fn probe(&self, offset: u64) -> ProbeOptions {
        ProbeOptions {
            restarts: self.restarts,
            iters: self.iters,
            samples: self.samples,
            seed: self.seed.wrapping_add(offset),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("certificate refused: {0}")]
    Refused(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Refused(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NotNormalized { .. }
            | Error::NotOrthonormal { .. }
            | Error::NotSpanning { .. }
            | Error::InvalidUpb(_)
            | Error::NoAdmissiblePair => Failure::Validation(msg),
            Error::MuOutOfRange { .. }
            | Error::NoEntangledCandidate { .. }
            | Error::SourceMismatch { .. } => Failure::Refused(msg),
            Error::DimensionMismatch { .. }
            | Error::NotSquare { .. }
            | Error::NotHermitian { .. }
            | Error::InvalidInput(_) => Failure::Io(msg),
        }
    }
}

/// Exit code plus the emitted document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub document: String,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: &'a str,
    exit_code: i32,
}

/// Runs one command. The document is also written to `config.output` when
/// set; a failed write turns the outcome into exit 3.
pub fn run(config: &RunConfig) -> Outcome {
    let outcome = match dispatch(config) {
        Ok(o) => o,
        Err(f) => {
            let code = f.exit_code();
            let msg = f.to_string();
            Outcome {
                code,
                document: format::to_string(&ErrorDoc { error: &msg, exit_code: code })
                    .expect("error document serializes"),
            }
        }
    };
    if let Some(path) = &config.output {
        if let Err(e) = fs::write(path, &outcome.document) {
            let msg = format!("cannot write {}: {e}", path.display());
            return Outcome {
                code: 3,
                document: format::to_string(&ErrorDoc { error: &msg, exit_code: 3 }).expect("serializes"),
            };
        }
    }
    outcome
}

fn emit<T: Serialize>(code: i32, doc: &T) -> Result<Outcome, Failure> {
    let document = format::to_string(doc).map_err(|e| Failure::Io(e.to_string()))?;
    Ok(Outcome { code, document })
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let opts = ValidationOptions {
        tol: cfg.tolerances(),
        ..Default::default()
    };
    let upb = load_upb(&cfg.upb_spec, &opts)?;
    let invalid = upb.verdict() == Verdict::Invalid;
    match cfg.command {
        Command::Build => emit(if invalid { 1 } else { 0 }, &upb.to_file()),
        Command::Validate => emit(if invalid { 1 } else { 0 }, &ValidateDoc::new(&upb)),
        _ if invalid => Err(Failure::Validation(format!(
            "`{}` is not an unextendible product basis",
            upb.label()
        ))),
        Command::State => emit(0, &bound_entangled_state(&upb)?.to_json()),
        Command::Epsilon => emit(0, &Pipeline::new(cfg, upb)?.epsilon()?),
        Command::Witness => {
            let p = Pipeline::new(cfg, upb)?;
            let (w, positivity) = p.witness()?;
            emit(0, &WitnessDoc::new(&w, positivity))
        }
        Command::Map => {
            let p = Pipeline::new(cfg, upb)?;
            let w = p.witness_only()?;
            let m = map_from_witness(&w, &MapBasis::Standard)?;
            emit(0, &m.to_json(None))
        }
        Command::Certify => {
            let p = Pipeline::new(cfg, upb)?;
            let w = p.witness_only()?;
            let m = map_from_witness(&w, &MapBasis::Standard)?;
            let c = indecomposability_certificate(&m, &p.state, &cfg.probe(SEED_OFFSET_MAP))?;
            let granted = c.granted(CERT_TOL);
            emit(if granted { 0 } else { 2 }, &CertifyDoc { map: m.to_json(Some(c)), granted })
        }
        Command::Report => {
            let doc = Pipeline::new(cfg, upb)?.report()?;
            emit(if doc.granted { 0 } else { 2 }, &doc)
        }
    }
}

/// Parses `pyramid | gentiles:<n> | tensor:<a>,<b> | file:<path>`; each
/// tensor factor is itself a built-in name or a path.
pub fn load_upb(spec: &str, opts: &ValidationOptions) -> Result<Upb, Failure> {
    if let Some(rest) = spec.strip_prefix("tensor:") {
        let (a, b) = rest
            .split_once(',')
            .ok_or_else(|| Failure::Io(format!("expected tensor:<a>,<b>, got `{spec}`")))?;
        let a = load_factor(a, opts)?;
        let b = load_factor(b, opts)?;
        return Ok(tensor_upb(&a, &b)?);
    }
    load_factor(spec, opts)
}

fn load_factor(spec: &str, opts: &ValidationOptions) -> Result<Upb, Failure> {
    if spec == "pyramid" {
        return Ok(build_pyramid().validated(opts));
    }
    if let Some(n) = spec.strip_prefix("gentiles:") {
        let n: usize = n
            .parse()
            .map_err(|_| Failure::Io(format!("bad GenTiles size `{n}`")))?;
        return Ok(build_gentiles3n(n)?.validated(opts));
    }
    let path = spec.strip_prefix("file:").unwrap_or(spec);
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("cannot read {path}: {e}")))?;
    Ok(Upb::from_json(&text)?.validated(opts))
}

#[derive(Serialize)]
struct ValidateDoc<'a> {
    label: &'a str,
    dims: [usize; 2],
    count: usize,
    validation: &'a ValidationReport,
}

impl<'a> ValidateDoc<'a> {
    fn new(upb: &'a Upb) -> Self {
        ValidateDoc {
            label: upb.label(),
            dims: [upb.idx().da, upb.idx().db],
            count: upb.len(),
            validation: upb.validation(),
        }
    }
}

#[derive(Serialize)]
struct SeesawSummary {
    seed: u64,
    restarts: usize,
    iters: usize,
    best_restart: usize,
    max_increase: f64,
}

#[derive(Serialize)]
struct EpsilonDoc {
    lower: f64,
    upper: f64,
    certificate: SubsetCertificate,
    argmin: ProductState,
    seesaw: SeesawSummary,
}

#[derive(Serialize)]
struct WitnessDoc {
    #[serde(flatten)]
    witness: WitnessJson,
    psi_index: Option<BellIndex>,
    overlap: f64,
    positivity: PositivityReport,
}

impl WitnessDoc {
    fn new(w: &Witness, positivity: PositivityReport) -> Self {
        WitnessDoc {
            witness: w.to_json(positivity.min_found),
            psi_index: w.psi().bell,
            overlap: w.overlap(),
            positivity,
        }
    }
}

#[derive(Serialize)]
struct CertifyDoc {
    #[serde(flatten)]
    map: MapJson,
    granted: bool,
}

#[derive(Serialize)]
struct UpbSummary {
    label: String,
    dims: [usize; 2],
    count: usize,
}

#[derive(Serialize)]
struct StateSummary {
    ppt_min_eig: f64,
    rank: usize,
    /// `⟨Ψ⁺|ρ|Ψ⁺⟩` with the normalized `Ψ⁺` on the leading corner.
    overlap: f64,
}

#[derive(Serialize)]
struct WitnessSummary {
    mu: f64,
    eps_lower: f64,
    psi_index: Option<BellIndex>,
    #[serde(with = "json::vector")]
    psi: CVector,
    overlap: f64,
    #[serde(rename = "trace_H_rho")]
    trace_h_rho: f64,
    positivity: PositivityReport,
}

#[derive(Serialize)]
struct MapSummary {
    basis: String,
    certificates: MapCertificates,
    granted: bool,
}

/// A computed value next to its closed form.
#[derive(Serialize)]
pub struct Check {
    pub name: &'static str,
    pub computed: f64,
    pub expected: f64,
    pub abs_err: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: &'static str, computed: f64, expected: f64, tol: f64) -> Self {
        let abs_err = (computed - expected).abs();
        Check { name, computed, expected, abs_err, tol, pass: abs_err <= tol }
    }
}

#[derive(Serialize)]
struct ReportDoc {
    upb: UpbSummary,
    validation: ValidationReport,
    state: StateSummary,
    epsilon: EpsilonDoc,
    witness: WitnessSummary,
    map: MapSummary,
    regression: Vec<Check>,
    granted: bool,
}

struct Pipeline<'a> {
    cfg: &'a RunConfig,
    upb: Upb,
    state: BoundEntangledState,
}

impl<'a> Pipeline<'a> {
    fn new(cfg: &'a RunConfig, upb: Upb) -> Result<Self, Failure> {
        let state = bound_entangled_state(&upb)?;
        Ok(Pipeline { cfg, upb, state })
    }

    fn lower(&self) -> Result<(f64, SubsetCertificate), Failure> {
        let idx = self.upb.idx();
        let count = subset_count(self.upb.len(), idx.da);
        let limit = ValidationOptions::default().max_subsets;
        if count > limit {
            return Err(Failure::Refused(format!(
                "ε lower bound would enumerate {count} subsets (limit {limit})"
            )));
        }
        Ok(epsilon_lower_bound_with(&self.upb, self.cfg.tolerances().rank)?)
    }

    fn epsilon(&self) -> Result<EpsilonDoc, Failure> {
        let (lower, certificate) = self.lower()?;
        let seed = self.cfg.seed.wrapping_add(SEED_OFFSET_EPSILON);
        let run = epsilon_upper_bound_run(
            &self.upb,
            &SeesawOptions {
                restarts: self.cfg.restarts,
                iters: self.cfg.iters,
                seed,
                ..Default::default()
            },
        );
        let argmin = ProductState::new(run.best.phi_a.clone(), run.best.phi_b.clone())?;
        Ok(EpsilonDoc {
            lower,
            upper: run.best.value,
            certificate,
            argmin,
            seesaw: SeesawSummary {
                seed,
                restarts: run.restarts,
                iters: self.cfg.iters,
                best_restart: run.best_restart,
                max_increase: run.max_increase,
            },
        })
    }

    fn witness_only(&self) -> Result<Witness, Failure> {
        let psi = select_max_entangled(&self.state, self.cfg.threshold, self.cfg.psi)?;
        Ok(build_witness_with_lower(&self.upb, psi, self.cfg.mu, self.lower()?)?)
    }

    fn witness(&self) -> Result<(Witness, PositivityReport), Failure> {
        let w = self.witness_only()?;
        let positivity = upbw::witness::check_product_positivity(&w, &self.cfg.probe(SEED_OFFSET_WITNESS));
        Ok((w, positivity))
    }

    fn report(&self) -> Result<ReportDoc, Failure> {
        let idx = self.upb.idx();
        let plus = generalized_bell(idx, BellIndex { k: 0, l: 0, offset: 0 })?;
        let overlap = self.state.overlap_with(&plus)?;
        let epsilon = self.epsilon()?;
        let (w, positivity) = self.witness()?;
        let m = map_from_witness(&w, &MapBasis::Standard)?;
        let certificates = indecomposability_certificate(&m, &self.state, &self.cfg.probe(SEED_OFFSET_MAP))?;
        let map_granted = certificates.granted(CERT_TOL);

        let d = idx.min_dim() as f64;
        let mut regression = vec![Check::new(
            "trace_H_rho_identity",
            w.trace_h_rho(),
            -d * w.mu() * w.overlap(),
            1e-12,
        )];
        regression.extend(closed_forms(&self.upb, overlap, &epsilon, &certificates));

        let granted = map_granted
            && positivity.holds(CERT_TOL)
            && w.trace_h_rho() < -CERT_TOL
            && self.state.is_ppt_with(CERT_TOL).0
            && epsilon.lower <= epsilon.upper;
        Ok(ReportDoc {
            upb: UpbSummary {
                label: self.upb.label().to_string(),
                dims: [idx.da, idx.db],
                count: self.upb.len(),
            },
            validation: self.upb.validation().clone(),
            state: StateSummary {
                ppt_min_eig: self.state.ppt_min_eig(),
                rank: self.state.rank(),
                overlap,
            },
            epsilon,
            witness: WitnessSummary {
                mu: w.mu(),
                eps_lower: w.eps_lower(),
                psi_index: w.psi().bell,
                psi: w.psi().psi.clone(),
                overlap: w.overlap(),
                trace_h_rho: w.trace_h_rho(),
                positivity,
            },
            map: MapSummary {
                basis: m.basis_label().to_string(),
                certificates,
                granted: map_granted,
            },
            regression,
            granted,
        })
    }
}

/// Closed forms known for the built-in families, keyed on the label.
fn closed_forms(upb: &Upb, overlap: f64, eps: &EpsilonDoc, cert: &MapCertificates) -> Vec<Check> {
    let mut out = Vec::new();
    if upb.label() == "pyramid" {
        let (s2, s5, s10) = (2f64.sqrt(), 5f64.sqrt(), 10f64.sqrt());
        let (h, n) = pyramid_constants();
        out.push(Check::new("pyramid_height", h, 0.5 * (1.0 + s5).sqrt(), 1e-15));
        out.push(Check::new("pyramid_norm", n, 2.0 / (5.0 + s5).sqrt(), 1e-15));
        out.push(Check::new(
            "overlap_psi_plus",
            overlap,
            0.25 * (1.0 - (7.0 + s5) / (3.0 * (3.0 + s5))),
            1e-10,
        ));
        out.push(Check::new(
            "lambda_min_a",
            eps.certificate.lambda_a,
            (2.0 + s2 - s10) / 2.0,
            1e-10,
        ));
        out.push(Check::new("eps_lower", eps.lower, (4.0 + s2 - s5 - s10) / 9.0, 1e-10));
        out.push(Check::new(
            "unitality_defect",
            cert.unitality_defect,
            s5 - 10.0 / (5.0 + s5),
            1e-10,
        ));
    } else if let Some(n) = upb.label().strip_prefix("gentiles:").and_then(|n| n.parse::<f64>().ok()) {
        out.push(Check::new("overlap_psi_plus", overlap, (0.5 - 1.0 / n) / 5.0, 1e-10));
        out.push(Check::new("state_count", upb.len() as f64, 3.0 * n - 5.0, 0.0));
    }
    out
}
