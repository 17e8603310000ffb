//! Probe planning, measurement collection, and device reconstruction.
//!
//! The pipeline: [`plan_probes`] enumerates every setting needed to pin
//! down a device of the given kind, [`collect_records`] simulates them,
//! and the `reconstruct_*` functions invert the records back into matrix
//! and loss estimates. Reconstruction works entry by entry: the phase-0
//! and phase-pi/2 observables for ports `(p, q)` are the real and
//! imaginary parts of one complex quantity, which a closed-form inversion
//! turns into the matrix entry.
//!
//! Standard errors propagate component-wise to first order, treating the
//! real and imaginary observables and the loss estimates as independent.

use std::collections::HashMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{frobenius_distance, ComplexMatrix};
use crate::devices::{Device, DeviceKind};
use crate::interferometer::{
    sample_observable, InterferometerError, MeasurementRecord, Phase, ProbeKind, ProbeSetting,
};
use crate::scalar::{from_count, Scalar};

/// Transmissivity estimates at or below this value make a row unrecoverable.
pub const DEFLATION_THRESHOLD: f64 = 1e-6;

/// Probe amplitudes below this modulus trigger a noise-amplification warning.
pub const SMALL_ALPHA_WARNING: f64 = 0.1;

/// Errors from planning, collection, and reconstruction.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TomographyError {
    /// A configuration argument is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The record set does not cover every required setting.
    #[error("incomplete plan: {0}")]
    IncompletePlan(String),
    /// The record set contains more than one record for a setting.
    #[error("ambiguous plan: {0}")]
    AmbiguousPlan(String),
    /// A record is internally inconsistent with the reconstruction request.
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    /// A loss estimate is too small to divide out of the measured row.
    #[error(
        "unrecoverable row: input mode {mode} has estimated transmissivity {eta:.3e}, at or \
         below the deflation threshold {DEFLATION_THRESHOLD:e}; its matrix row cannot be \
         recovered"
    )]
    UnrecoverableRow { mode: usize, eta: f64 },
    /// Records and device kind (or probe kinds) do not fit together.
    #[error("protocol mismatch: {0}")]
    ProtocolMismatch(String),
    /// A measurement simulation failed.
    #[error(transparent)]
    Measurement(#[from] InterferometerError),
}

pub type TomographyResult<T> = Result<T, TomographyError>;

/// The full list of settings required to characterize one device.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePlan<T: Scalar> {
    pub kind: DeviceKind,
    pub n: usize,
    pub alpha: Complex<T>,
    pub shots: u64,
    pub settings: Vec<ProbeSetting<T>>,
}

/// Enumerates the settings that characterize an `n`-mode device of `kind`.
///
/// Counts: `2n^2` for a unitary device, `4n^2` for a Bogoliubov device,
/// plus `n` loss settings for the lossy variants. Order: loss settings
/// first (ascending port), then the single-photon block, then the coherent
/// block; within a block `p` sweeps slowest, then `q`, with phase 0 before
/// pi/2. `shots = 0` requests exact values.
pub fn plan_probes<T: Scalar>(
    kind: DeviceKind,
    n: usize,
    alpha: Complex<T>,
    shots: u64,
) -> TomographyResult<ProbePlan<T>> {
    if n == 0 {
        return Err(TomographyError::InvalidParameter(
            "mode count must be at least 1".into(),
        ));
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite()) || alpha.norm_sqr() == T::zero() {
        return Err(TomographyError::InvalidParameter(
            "every plan contains coherent settings, so alpha must be finite and nonzero".into(),
        ));
    }
    let mut settings = Vec::new();
    match kind {
        DeviceKind::LossyUnitary => {
            for p in 1..=n {
                settings.push(ProbeSetting::loss_coherent(p, alpha, shots));
            }
        }
        DeviceKind::LossyBogoliubov => {
            for p in 1..=n {
                settings.push(ProbeSetting::loss_single_photon(p, shots));
            }
        }
        _ => {}
    }
    if kind.is_bogoliubov() {
        for p in 1..=n {
            for q in 1..=n {
                for phi in Phase::BOTH {
                    settings.push(ProbeSetting::single_photon(p, q, phi, shots));
                }
            }
        }
    }
    for p in 1..=n {
        for q in 1..=n {
            for phi in Phase::BOTH {
                settings.push(ProbeSetting::coherent(p, q, phi, alpha, shots));
            }
        }
    }
    Ok(ProbePlan {
        kind,
        n,
        alpha,
        shots,
        settings,
    })
}

/// How to execute a plan: master seed and worker-thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExecutionOptions {
    /// Master seed; per-setting seeds derive from it in plan order.
    pub seed: u64,
    /// Worker threads; `None` or `Some(1)` runs sequentially.
    pub jobs: Option<usize>,
}

/// Simulates every setting in the plan. Identical inputs produce identical
/// records regardless of `jobs`.
pub fn collect_records<T: Scalar>(
    device: &Device<T>,
    plan: &ProbePlan<T>,
    opts: &ExecutionOptions,
) -> TomographyResult<Vec<MeasurementRecord<T>>> {
    if plan.kind != device.kind() {
        return Err(TomographyError::ProtocolMismatch(format!(
            "plan targets a {} device but the device is {}",
            plan.kind,
            device.kind()
        )));
    }
    if plan.n != device.n() {
        return Err(TomographyError::ProtocolMismatch(format!(
            "plan covers {} modes but the device has {}",
            plan.n,
            device.n()
        )));
    }
    let mut seed_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let seeds: Vec<u64> = plan.settings.iter().map(|_| seed_rng.random()).collect();
    let jobs = match opts.jobs {
        None => 1,
        Some(0) => {
            return Err(TomographyError::InvalidParameter(
                "jobs must be at least 1".into(),
            ))
        }
        Some(j) => j,
    };
    let records = if jobs <= 1 {
        plan.settings
            .iter()
            .zip(&seeds)
            .map(|(setting, &seed)| sample_observable(device, setting, seed))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| TomographyError::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| {
            plan.settings
                .par_iter()
                .zip(seeds.par_iter())
                .map(|(setting, &seed)| sample_observable(device, setting, seed))
                .collect::<Result<Vec<_>, _>>()
        })?
    };
    Ok(records)
}

/// Everything a reconstruction produces: estimates, per-entry standard
/// errors, and (after [`ReconstructionReport::score_against`]) distances
/// to the true device.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport<T: Scalar> {
    pub kind: DeviceKind,
    pub n: usize,
    pub u_hat: ComplexMatrix<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_hat: Option<ComplexMatrix<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_hat: Option<Vec<T>>,
    /// Component-wise standard errors: entry `(p, q)` holds the standard
    /// errors of the real and imaginary parts of `u_hat[(p, q)]`.
    pub u_std_err: ComplexMatrix<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_std_err: Option<ComplexMatrix<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_std_err: Option<Vec<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius_error_u: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frobenius_error_v: Option<T>,
    /// Largest absolute transmissivity error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_error: Option<T>,
    pub settings_used: usize,
    pub total_shots: u64,
    pub warnings: Vec<String>,
}

impl<T: Scalar> ReconstructionReport<T> {
    /// Fills the distance fields by comparing against the true device.
    pub fn score_against(&mut self, device: &Device<T>) -> TomographyResult<()> {
        if device.kind() != self.kind {
            return Err(TomographyError::InvalidParameter(format!(
                "report describes a {} device but the reference is {}",
                self.kind,
                device.kind()
            )));
        }
        if device.n() != self.n {
            return Err(TomographyError::InvalidParameter(format!(
                "report covers {} modes but the reference has {}",
                self.n,
                device.n()
            )));
        }
        self.frobenius_error_u =
            Some(frobenius_distance(&self.u_hat, device.u()).expect("shapes match"));
        self.frobenius_error_v = match (&self.v_hat, device.v()) {
            (Some(v_hat), Some(v)) => Some(frobenius_distance(v_hat, v).expect("shapes match")),
            _ => None,
        };
        self.eta_error = match (&self.eta_hat, device.eta()) {
            (Some(eta_hat), Some(eta)) => Some(
                eta_hat
                    .iter()
                    .zip(eta)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), T::max),
            ),
            _ => None,
        };
        Ok(())
    }

    pub fn to_json_pretty(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

// Observable and standard error for one setting, indexed by (p, q, phase).
struct Grid<T> {
    n: usize,
    cells: Vec<[(T, T); 2]>,
}

impl<T: Scalar> Grid<T> {
    /// Collects records of one probe kind into a dense (p, q, phase) grid,
    /// checking kind purity, amplitude consistency, duplicates, and
    /// completeness.
    fn build(
        records: &[&MeasurementRecord<T>],
        kind: ProbeKind,
        expect_alpha: Option<Complex<T>>,
    ) -> TomographyResult<Self> {
        if records.is_empty() {
            return Err(TomographyError::IncompletePlan(format!(
                "no {kind:?} records present"
            )));
        }
        let mut seen: HashMap<(usize, usize, usize), (T, T)> = HashMap::new();
        let mut n = 0usize;
        for rec in records {
            let s = &rec.setting;
            if s.kind != kind {
                return Err(TomographyError::ProtocolMismatch(format!(
                    "expected only {kind:?} records in this block, found {:?}",
                    s.kind
                )));
            }
            if s.p == 0 || s.q == 0 {
                return Err(TomographyError::InvalidRecord(
                    "ports are 1-based; found port 0".into(),
                ));
            }
            if let Some(alpha) = expect_alpha {
                if s.alpha != alpha {
                    return Err(TomographyError::InvalidRecord(format!(
                        "record for p={}, q={} used alpha {}, reconstruction assumes {}",
                        s.p, s.q, s.alpha, alpha
                    )));
                }
            }
            if !rec.observable.is_finite() {
                return Err(TomographyError::InvalidRecord(format!(
                    "non-finite observable for p={}, q={}, phi={}",
                    s.p, s.q, s.phi
                )));
            }
            n = n.max(s.p).max(s.q);
            if seen
                .insert((s.p, s.q, s.phi.index()), (rec.observable, rec.std_error))
                .is_some()
            {
                return Err(TomographyError::AmbiguousPlan(format!(
                    "duplicate record for p={}, q={}, phi={}",
                    s.p, s.q, s.phi
                )));
            }
        }
        let zero = (T::zero(), T::zero());
        let mut cells = vec![[zero; 2]; n * n];
        for p in 1..=n {
            for q in 1..=n {
                for phi in Phase::BOTH {
                    let Some(&cell) = seen.get(&(p, q, phi.index())) else {
                        return Err(TomographyError::IncompletePlan(format!(
                            "missing record for p={p}, q={q}, phi={phi}"
                        )));
                    };
                    cells[(p - 1) * n + (q - 1)][phi.index()] = cell;
                }
            }
        }
        Ok(Self { n, cells })
    }

    fn cell(&self, p: usize, q: usize) -> &[(T, T); 2] {
        &self.cells[p * self.n + q]
    }

    /// The complex observable at 0-based `(p, q)`: phase-0 value as the
    /// real part, phase-pi/2 value as the imaginary part, with matching
    /// component standard errors.
    fn complex_value(&self, p: usize, q: usize) -> (Complex<T>, (T, T)) {
        let [(v0, se0), (v1, se1)] = *self.cell(p, q);
        (Complex::new(v0, v1), (se0, se1))
    }

    /// Divides the whole row for input port `p` (0-based) by a positive
    /// factor, folding the factor's own standard error into each cell.
    fn deflate_row(&mut self, p: usize, factor: T, factor_se: T) {
        for q in 0..self.n {
            for cell in self.cells[p * self.n + q].iter_mut() {
                let value = cell.0 / factor;
                let scaled_se = cell.1 / factor;
                let factor_term = value * factor_se / factor;
                *cell = (
                    value,
                    (scaled_se * scaled_se + factor_term * factor_term).sqrt(),
                );
            }
        }
    }
}

// Variances of the components of k*z from the component variances of z,
// treating the components as independent.
fn scaled_variances<T: Scalar>(k: Complex<T>, se: (T, T)) -> (T, T) {
    let vx = se.0 * se.0;
    let vy = se.1 * se.1;
    (
        k.re * k.re * vx + k.im * k.im * vy,
        k.im * k.im * vx + k.re * k.re * vy,
    )
}

fn sum_shots<T: Scalar>(records: &[MeasurementRecord<T>]) -> u64 {
    records.iter().map(|r| r.setting.shots).sum()
}

fn check_alpha<T: Scalar>(alpha: Complex<T>) -> TomographyResult<()> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) || alpha.norm_sqr() == T::zero() {
        return Err(TomographyError::InvalidParameter(
            "alpha must be finite and nonzero".into(),
        ));
    }
    Ok(())
}

/// Inverts a unitary-device record set: `u_hat[(p, q)]` is the phase pair
/// at `(p, q)` divided by `|alpha|^2`.
pub fn reconstruct_unitary<T: Scalar>(
    records: &[MeasurementRecord<T>],
    alpha: Complex<T>,
) -> TomographyResult<ReconstructionReport<T>> {
    check_alpha(alpha)?;
    let refs: Vec<&MeasurementRecord<T>> = records.iter().collect();
    let grid = Grid::build(&refs, ProbeKind::Coherent, Some(alpha))?;
    let a2 = alpha.norm_sqr();
    let n = grid.n;
    let u_hat = ComplexMatrix::from_fn(n, n, |p, q| grid.complex_value(p, q).0 / a2);
    let u_std_err = ComplexMatrix::from_fn(n, n, |p, q| {
        let (_, (se0, se1)) = grid.complex_value(p, q);
        Complex::new(se0 / a2, se1 / a2)
    });
    Ok(ReconstructionReport {
        kind: DeviceKind::Unitary,
        n,
        u_hat,
        v_hat: None,
        eta_hat: None,
        u_std_err,
        v_std_err: None,
        eta_std_err: None,
        frobenius_error_u: None,
        frobenius_error_v: None,
        eta_error: None,
        settings_used: records.len(),
        total_shots: sum_shots(records),
        warnings: Vec::new(),
    })
}

// Shared by the lossless and lossy Bogoliubov paths once the grids are
// (de-)flated: the single-photon grid is u directly; the coherent grid
// over alpha-conjugate gives beta, and v = conj((beta - alpha u) / conj(alpha)).
fn invert_bogoliubov_grids<T: Scalar>(
    sp: &Grid<T>,
    coh: &Grid<T>,
    alpha: Complex<T>,
) -> (
    ComplexMatrix<T>,
    ComplexMatrix<T>,
    ComplexMatrix<T>,
    ComplexMatrix<T>,
) {
    let n = sp.n;
    let inv_conj_alpha = alpha.conj().inv();
    let mut u_hat = ComplexMatrix::zeros(n, n);
    let mut v_hat = ComplexMatrix::zeros(n, n);
    let mut u_se = ComplexMatrix::zeros(n, n);
    let mut v_se = ComplexMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            let (u_pq, (u_se0, u_se1)) = sp.complex_value(p, q);
            let (w, w_se) = coh.complex_value(p, q);
            let beta = w * inv_conj_alpha;
            let v_pq = ((beta - alpha * u_pq) * inv_conj_alpha).conj();
            u_hat[(p, q)] = u_pq;
            v_hat[(p, q)] = v_pq;
            u_se[(p, q)] = Complex::new(u_se0, u_se1);
            let beta_var = scaled_variances(inv_conj_alpha, w_se);
            let alpha_u_var = scaled_variances(alpha, (u_se0, u_se1));
            let diff_var = (beta_var.0 + alpha_u_var.0, beta_var.1 + alpha_u_var.1);
            let v_var = scaled_variances(inv_conj_alpha, (diff_var.0.sqrt(), diff_var.1.sqrt()));
            // Conjugation flips the sign of the imaginary part, not its
            // spread.
            v_se[(p, q)] = Complex::new(v_var.0.sqrt(), v_var.1.sqrt());
        }
    }
    (u_hat, v_hat, u_se, v_se)
}

fn small_alpha_warning<T: Scalar>(alpha: Complex<T>, warnings: &mut Vec<String>) {
    let threshold = T::from_f64(SMALL_ALPHA_WARNING).expect("threshold representable");
    if alpha.norm() < threshold {
        warnings.push(format!(
            "|alpha| = {} is below {SMALL_ALPHA_WARNING}; the pair-part estimate divides by \
             alpha and amplifies noise",
            alpha.norm()
        ));
    }
}

/// Inverts a Bogoliubov-device record set: the single-photon block yields
/// `u_hat`, the coherent block yields `beta` and with it `v_hat`.
pub fn reconstruct_bogoliubov<T: Scalar>(
    records: &[MeasurementRecord<T>],
    alpha: Complex<T>,
) -> TomographyResult<ReconstructionReport<T>> {
    check_alpha(alpha)?;
    let sp_refs: Vec<&MeasurementRecord<T>> = records
        .iter()
        .filter(|r| r.setting.kind == ProbeKind::SinglePhoton)
        .collect();
    let coh_refs: Vec<&MeasurementRecord<T>> = records
        .iter()
        .filter(|r| r.setting.kind == ProbeKind::Coherent)
        .collect();
    if sp_refs.len() + coh_refs.len() != records.len() {
        return Err(TomographyError::ProtocolMismatch(
            "a lossless Bogoliubov record set may contain only single-photon and coherent \
             records"
                .into(),
        ));
    }
    let sp = Grid::build(&sp_refs, ProbeKind::SinglePhoton, None)?;
    let coh = Grid::build(&coh_refs, ProbeKind::Coherent, Some(alpha))?;
    if sp.n != coh.n {
        return Err(TomographyError::ProtocolMismatch(format!(
            "single-photon block covers {} modes, coherent block {}",
            sp.n, coh.n
        )));
    }
    let (u_hat, v_hat, u_std_err, v_std_err) = invert_bogoliubov_grids(&sp, &coh, alpha);
    let mut warnings = Vec::new();
    small_alpha_warning(alpha, &mut warnings);
    Ok(ReconstructionReport {
        kind: DeviceKind::Bogoliubov,
        n: sp.n,
        u_hat,
        v_hat: Some(v_hat),
        eta_hat: None,
        u_std_err,
        v_std_err: Some(v_std_err),
        eta_std_err: None,
        frobenius_error_u: None,
        frobenius_error_v: None,
        eta_error: None,
        settings_used: records.len(),
        total_shots: sum_shots(records),
        warnings,
    })
}

/// Per-mode transmissivity estimates from loss-probe records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossEstimate<T> {
    pub eta: Vec<T>,
    pub std_err: Vec<T>,
    pub warnings: Vec<String>,
}

/// Turns loss-probe records (one per input mode) into transmissivity
/// estimates: `sqrt(observable / |alpha|^2)` for coherent loss probes,
/// `sqrt(observable)` for single-photon ones.
///
/// Raw ratios above 1 (possible under noise) clamp to 1 with a warning;
/// negative observables are rejected since no physical count produces them.
pub fn estimate_losses<T: Scalar>(
    records: &[MeasurementRecord<T>],
) -> TomographyResult<LossEstimate<T>> {
    if records.is_empty() {
        return Err(TomographyError::IncompletePlan(
            "no loss-probe records present".into(),
        ));
    }
    let mut by_mode: HashMap<usize, (T, T, T)> = HashMap::new();
    let mut n = 0usize;
    for rec in records {
        let s = &rec.setting;
        let divisor = match s.kind {
            ProbeKind::LossCoherent => {
                let a2 = s.alpha.norm_sqr();
                if a2 == T::zero() {
                    return Err(TomographyError::InvalidRecord(format!(
                        "loss record for mode {} has zero amplitude",
                        s.p
                    )));
                }
                a2
            }
            ProbeKind::LossSinglePhoton => T::one(),
            other => {
                return Err(TomographyError::ProtocolMismatch(format!(
                    "loss estimation accepts only loss-probe records, found {other:?}"
                )));
            }
        };
        if s.p == 0 {
            return Err(TomographyError::InvalidRecord(
                "ports are 1-based; found port 0".into(),
            ));
        }
        if !rec.observable.is_finite() {
            return Err(TomographyError::InvalidRecord(format!(
                "non-finite loss observable for mode {}",
                s.p
            )));
        }
        if rec.observable < T::zero() {
            return Err(TomographyError::InvalidRecord(format!(
                "negative loss observable {} for mode {}; transmitted counts cannot be negative",
                rec.observable, s.p
            )));
        }
        n = n.max(s.p);
        if by_mode
            .insert(s.p, (rec.observable, rec.std_error, divisor))
            .is_some()
        {
            return Err(TomographyError::AmbiguousPlan(format!(
                "duplicate loss record for mode {}",
                s.p
            )));
        }
    }
    let mut eta = Vec::with_capacity(n);
    let mut std_err = Vec::with_capacity(n);
    let mut warnings = Vec::new();
    for p in 1..=n {
        let Some(&(obs, obs_se, divisor)) = by_mode.get(&p) else {
            return Err(TomographyError::IncompletePlan(format!(
                "missing loss record for mode {p}"
            )));
        };
        let mut ratio = obs / divisor;
        if ratio > T::one() {
            warnings.push(format!(
                "mode {p}: raw transmissivity ratio {ratio} exceeds 1, clamped"
            ));
            ratio = T::one();
        }
        let e = ratio.sqrt();
        // First-order: d(sqrt(obs/c))/d(obs) = 1 / (2 e c).
        let se = if e > T::zero() {
            obs_se / ((T::one() + T::one()) * e * divisor)
        } else {
            T::zero()
        };
        eta.push(e);
        std_err.push(se);
    }
    Ok(LossEstimate {
        eta,
        std_err,
        warnings,
    })
}

/// Inverts a lossy-device record set: loss probes calibrate per-mode
/// transmissivities, which deflate the interferometer observables before
/// the lossless inversion runs.
pub fn reconstruct_lossy<T: Scalar>(
    records: &[MeasurementRecord<T>],
    alpha: Complex<T>,
    kind: DeviceKind,
) -> TomographyResult<ReconstructionReport<T>> {
    if !kind.is_lossy() {
        return Err(TomographyError::InvalidParameter(format!(
            "reconstruct_lossy handles lossy device kinds, got {kind}"
        )));
    }
    check_alpha(alpha)?;
    let loss_records: Vec<MeasurementRecord<T>> = records
        .iter()
        .filter(|r| r.setting.kind.is_loss_probe())
        .cloned()
        .collect();
    let losses = estimate_losses(&loss_records)?;
    let n = losses.eta.len();
    let threshold = T::from_f64(DEFLATION_THRESHOLD).expect("threshold representable");
    for (i, &e) in losses.eta.iter().enumerate() {
        if e <= threshold {
            return Err(TomographyError::UnrecoverableRow {
                mode: i + 1,
                eta: e.to_f64().unwrap_or(0.0),
            });
        }
    }
    let mut warnings = losses.warnings.clone();
    let deflate = |grid: &mut Grid<T>| {
        for p in 0..n {
            grid.deflate_row(p, losses.eta[p], losses.std_err[p]);
        }
    };
    let mut report = match kind {
        DeviceKind::LossyUnitary => {
            let coh_refs: Vec<&MeasurementRecord<T>> = records
                .iter()
                .filter(|r| r.setting.kind == ProbeKind::Coherent)
                .collect();
            if coh_refs.len() + loss_records.len() != records.len() {
                return Err(TomographyError::ProtocolMismatch(
                    "a lossy unitary record set may contain only loss-probe and coherent \
                     records"
                        .into(),
                ));
            }
            let mut grid = Grid::build(&coh_refs, ProbeKind::Coherent, Some(alpha))?;
            if grid.n != n {
                return Err(TomographyError::ProtocolMismatch(format!(
                    "loss records cover {n} modes, coherent records {}",
                    grid.n
                )));
            }
            deflate(&mut grid);
            let a2 = alpha.norm_sqr();
            let u_hat = ComplexMatrix::from_fn(n, n, |p, q| grid.complex_value(p, q).0 / a2);
            let u_std_err = ComplexMatrix::from_fn(n, n, |p, q| {
                let (_, (se0, se1)) = grid.complex_value(p, q);
                Complex::new(se0 / a2, se1 / a2)
            });
            ReconstructionReport {
                kind,
                n,
                u_hat,
                v_hat: None,
                eta_hat: None,
                u_std_err,
                v_std_err: None,
                eta_std_err: None,
                frobenius_error_u: None,
                frobenius_error_v: None,
                eta_error: None,
                settings_used: records.len(),
                total_shots: sum_shots(records),
                warnings: Vec::new(),
            }
        }
        DeviceKind::LossyBogoliubov => {
            let sp_refs: Vec<&MeasurementRecord<T>> = records
                .iter()
                .filter(|r| r.setting.kind == ProbeKind::SinglePhoton)
                .collect();
            let coh_refs: Vec<&MeasurementRecord<T>> = records
                .iter()
                .filter(|r| r.setting.kind == ProbeKind::Coherent)
                .collect();
            if sp_refs.len() + coh_refs.len() + loss_records.len() != records.len() {
                return Err(TomographyError::ProtocolMismatch(
                    "a lossy Bogoliubov record set may contain only loss-probe, \
                     single-photon, and coherent records"
                        .into(),
                ));
            }
            let mut sp = Grid::build(&sp_refs, ProbeKind::SinglePhoton, None)?;
            let mut coh = Grid::build(&coh_refs, ProbeKind::Coherent, Some(alpha))?;
            if sp.n != n || coh.n != n {
                return Err(TomographyError::ProtocolMismatch(format!(
                    "loss records cover {n} modes, single-photon records {}, coherent \
                     records {}",
                    sp.n, coh.n
                )));
            }
            deflate(&mut sp);
            deflate(&mut coh);
            let (u_hat, v_hat, u_std_err, v_std_err) = invert_bogoliubov_grids(&sp, &coh, alpha);
            small_alpha_warning(alpha, &mut warnings);
            ReconstructionReport {
                kind,
                n,
                u_hat,
                v_hat: Some(v_hat),
                eta_hat: None,
                u_std_err,
                v_std_err: Some(v_std_err),
                eta_std_err: None,
                frobenius_error_u: None,
                frobenius_error_v: None,
                eta_error: None,
                settings_used: records.len(),
                total_shots: sum_shots(records),
                warnings: Vec::new(),
            }
        }
        _ => unreachable!("checked above"),
    };
    report.eta_hat = Some(losses.eta);
    report.eta_std_err = Some(losses.std_err);
    report.warnings = warnings;
    Ok(report)
}

/// Dispatches to the reconstruction matching the device kind.
pub fn reconstruct<T: Scalar>(
    kind: DeviceKind,
    records: &[MeasurementRecord<T>],
    alpha: Complex<T>,
) -> TomographyResult<ReconstructionReport<T>> {
    match kind {
        DeviceKind::Unitary => reconstruct_unitary(records, alpha),
        DeviceKind::Bogoliubov => reconstruct_bogoliubov(records, alpha),
        DeviceKind::LossyUnitary | DeviceKind::LossyBogoliubov => {
            reconstruct_lossy(records, alpha, kind)
        }
    }
}

/// One point of a shot-noise study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShotNoisePoint<T> {
    pub shots: u64,
    /// Root mean square entry error of `u_hat`, pooled over seeds.
    pub rmse: T,
    /// Standard error of `rmse` across seeds.
    pub std_error: T,
}

/// Runs the full pipeline across a grid of shot counts, several seeds per
/// point, and reports the pooled reconstruction error of `u_hat`.
pub fn shot_noise_sweep<T: Scalar>(
    device: &Device<T>,
    alpha: Complex<T>,
    shots_grid: &[u64],
    seeds_per_point: usize,
    master_seed: u64,
    jobs: Option<usize>,
) -> TomographyResult<Vec<ShotNoisePoint<T>>> {
    if shots_grid.len() < 3 {
        return Err(TomographyError::InvalidParameter(
            "a shot-noise study needs at least three shot counts".into(),
        ));
    }
    if shots_grid.contains(&0) {
        return Err(TomographyError::InvalidParameter(
            "shot counts in a study must be positive".into(),
        ));
    }
    if shots_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(TomographyError::InvalidParameter(
            "shot counts must be strictly increasing".into(),
        ));
    }
    if seeds_per_point < 2 {
        return Err(TomographyError::InvalidParameter(
            "a shot-noise study needs at least two seeds per point".into(),
        ));
    }
    let mut seed_rng = ChaCha8Rng::seed_from_u64(master_seed);
    let truth = device.u();
    let entries = from_count::<T>((device.n() * device.n()) as u64);
    let mut points = Vec::with_capacity(shots_grid.len());
    for &shots in shots_grid {
        let mut per_seed_rmse = Vec::with_capacity(seeds_per_point);
        for _ in 0..seeds_per_point {
            let run_seed: u64 = seed_rng.random();
            let plan = plan_probes(device.kind(), device.n(), alpha, shots)?;
            let records = collect_records(
                device,
                &plan,
                &ExecutionOptions {
                    seed: run_seed,
                    jobs,
                },
            )?;
            let report = reconstruct(device.kind(), &records, alpha)?;
            let sq_sum = report
                .u_hat
                .sub(truth)
                .expect("shapes match")
                .entries()
                .iter()
                .map(|z| z.norm_sqr())
                .fold(T::zero(), |acc, x| acc + x);
            per_seed_rmse.push((sq_sum / entries).sqrt());
        }
        let k = from_count::<T>(seeds_per_point as u64);
        let mean_sq = per_seed_rmse.iter().map(|&r| r * r).sum::<T>() / k;
        let rmse = mean_sq.sqrt();
        let mean = per_seed_rmse.iter().copied().sum::<T>() / k;
        let var = per_seed_rmse
            .iter()
            .map(|&r| (r - mean) * (r - mean))
            .sum::<T>()
            / (k - T::one());
        points.push(ShotNoisePoint {
            shots,
            rmse,
            std_error: (var / k).sqrt(),
        });
    }
    Ok(points)
}

/// Least-squares slope of `ln y` against `ln x`. Requires at least two
/// points with strictly positive coordinates.
pub fn fit_loglog_slope<T: Scalar>(points: &[(T, T)]) -> TomographyResult<T> {
    if points.len() < 2 {
        return Err(TomographyError::InvalidParameter(
            "slope fit needs at least two points".into(),
        ));
    }
    if points
        .iter()
        .any(|&(x, y)| x <= T::zero() || y <= T::zero())
    {
        return Err(TomographyError::InvalidParameter(
            "slope fit needs strictly positive coordinates".into(),
        ));
    }
    let k = from_count::<T>(points.len() as u64);
    let lx: Vec<T> = points.iter().map(|&(x, _)| x.ln()).collect();
    let ly: Vec<T> = points.iter().map(|&(_, y)| y.ln()).collect();
    let mx = lx.iter().copied().sum::<T>() / k;
    let my = ly.iter().copied().sum::<T>() / k;
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in lx.iter().zip(&ly) {
        num += (*x - mx) * (*y - my);
        den += (*x - mx) * (*x - mx);
    }
    if den == T::zero() {
        return Err(TomographyError::InvalidParameter(
            "slope fit needs at least two distinct x values".into(),
        ));
    }
    Ok(num / den)
}

/// Log-log slope of reconstruction error against shot count.
pub fn shot_noise_slope<T: Scalar>(points: &[ShotNoisePoint<T>]) -> TomographyResult<T> {
    let pairs: Vec<(T, T)> = points
        .iter()
        .map(|p| (from_count::<T>(p.shots), p.rmse))
        .collect();
    fit_loglog_slope(&pairs)
}
