//! Device models: lossless unitary networks, Bogoliubov transformations,
//! and their lossy variants.
//!
//! A lossy device attaches a fictitious beamsplitter of amplitude
//! transmissivity `eta_i` to input mode `i`; the reflected arm feeds a
//! hidden ancilla mode. [`embed_lossy_unitary`] and
//! [`embed_lossy_bogoliubov`] expand an `n`-mode lossy device into the
//! `2n`-mode lossless transformation over (accessible, ancilla) modes.
//!
//! Constructors validate their inputs; [`DeviceFile`] is the on-disk JSON
//! form and can be validated without constructing, so malformed files
//! produce a full report rather than a single error.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{frobenius_distance, ComplexMatrix};
use crate::scalar::Scalar;

/// Errors from device construction and embedding.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    /// Validation failed; the message lists the violated constraints.
    #[error("invalid device: {0}")]
    Invalid(String),
    /// Matrix or loss-vector dimensions disagree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// An embedding was requested for the other inner device kind.
    #[error("wrong inner device kind: {0}")]
    WrongInnerKind(String),
    /// A device file could not be parsed.
    #[error("malformed device file: {0}")]
    Malformed(String),
}

pub type DeviceResult<T> = Result<T, DeviceError>;

/// The four device classes the probe protocol distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Unitary,
    Bogoliubov,
    LossyUnitary,
    LossyBogoliubov,
}

impl DeviceKind {
    pub fn is_lossy(self) -> bool {
        matches!(self, DeviceKind::LossyUnitary | DeviceKind::LossyBogoliubov)
    }

    /// Whether the transformation has a particle-nonconserving part.
    pub fn is_bogoliubov(self) -> bool {
        matches!(self, DeviceKind::Bogoliubov | DeviceKind::LossyBogoliubov)
    }
}

impl std::fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            DeviceKind::Unitary => "unitary",
            DeviceKind::Bogoliubov => "bogoliubov",
            DeviceKind::LossyUnitary => "lossy_unitary",
            DeviceKind::LossyBogoliubov => "lossy_bogoliubov",
        };
        f.write_str(name)
    }
}

/// Tolerances and strictness switches used when checking device constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions<T> {
    /// Max-norm tolerance on constraint residuals.
    pub tol: T,
    /// Require `u v^T` symmetric for Bogoliubov devices. Physical pair
    /// transformations satisfy this; disable only to study the residual.
    pub require_symmetric_pairing: bool,
}

impl<T: Scalar> Default for ValidationOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::from_f64(1e-10).expect("tolerance representable"),
            require_symmetric_pairing: true,
        }
    }
}

/// One violated constraint together with its measured residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation<T> {
    pub constraint: String,
    pub residual: T,
}

/// Outcome of validating a device: hard violations plus advisory warnings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport<T> {
    pub violations: Vec<Violation<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> ValidationReport<T> {
    fn new() -> Self {
        Self {
            violations: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn violation(&mut self, constraint: impl Into<String>, residual: T) {
        self.violations.push(Violation {
            constraint: constraint.into(),
            residual,
        });
    }

    fn merge(&mut self, other: ValidationReport<T>) {
        self.violations.extend(other.violations);
        self.warnings.extend(other.warnings);
    }
}

impl<T: Scalar> std::fmt::Display for ValidationReport<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "violation: {} (residual {:e})", v.constraint, v.residual)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Max-norm of `u u\u{2020} - v v\u{2020} - I`, the pair-transformation constraint.
pub fn bogoliubov_constraint_residual<T: Scalar>(
    u: &ComplexMatrix<T>,
    v: &ComplexMatrix<T>,
) -> DeviceResult<T> {
    if !u.is_square() || u.rows() != v.rows() || u.cols() != v.cols() {
        return Err(DeviceError::DimensionMismatch(format!(
            "u is {}x{}, v is {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    let gram = u
        .matmul(&u.adjoint())
        .and_then(|g| g.sub(&v.matmul(&v.adjoint())?))
        .and_then(|g| g.sub(&ComplexMatrix::identity(u.rows())))
        .expect("square operands");
    Ok(gram.max_abs())
}

/// Max-norm of `u v^T - (u v^T)^T`, the pairing-symmetry residual.
pub fn pairing_asymmetry<T: Scalar>(u: &ComplexMatrix<T>, v: &ComplexMatrix<T>) -> DeviceResult<T> {
    if !u.is_square() || u.rows() != v.rows() || u.cols() != v.cols() {
        return Err(DeviceError::DimensionMismatch(format!(
            "u is {}x{}, v is {}x{}",
            u.rows(),
            u.cols(),
            v.rows(),
            v.cols()
        )));
    }
    let uvt = u.matmul(&v.transpose()).expect("square operands");
    Ok(uvt
        .sub(&uvt.transpose())
        .expect("square operands")
        .max_abs())
}

/// Checks a candidate unitary matrix: finite, square, unitary within `tol`.
pub fn validate_unitary<T: Scalar>(
    u: &ComplexMatrix<T>,
    opts: &ValidationOptions<T>,
) -> ValidationReport<T> {
    let mut report = ValidationReport::new();
    if !u.is_square() {
        report.violation(
            format!("matrix must be square, got {}x{}", u.rows(), u.cols()),
            T::infinity(),
        );
        return report;
    }
    if u.rows() == 0 {
        report.violation("device must have at least one mode", T::infinity());
        return report;
    }
    if !u.all_finite() {
        report.violation("matrix entries must be finite", T::infinity());
        return report;
    }
    let residual = u.unitarity_residual().expect("square matrix");
    if residual > opts.tol {
        report.violation("unitarity |uu' - I|_max within tolerance", residual);
    }
    report
}

/// Checks a candidate Bogoliubov pair: finite, matching square shapes,
/// `u u\u{2020} - v v\u{2020} = I` within `tol`, and (by default) symmetric `u v^T`.
pub fn validate_bogoliubov<T: Scalar>(
    u: &ComplexMatrix<T>,
    v: &ComplexMatrix<T>,
    opts: &ValidationOptions<T>,
) -> ValidationReport<T> {
    let mut report = ValidationReport::new();
    if !u.is_square() || u.rows() != v.rows() || u.cols() != v.cols() {
        report.violation(
            format!(
                "u and v must be square with equal shapes, got {}x{} and {}x{}",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols()
            ),
            T::infinity(),
        );
        return report;
    }
    if u.rows() == 0 {
        report.violation("device must have at least one mode", T::infinity());
        return report;
    }
    if !u.all_finite() || !v.all_finite() {
        report.violation("matrix entries must be finite", T::infinity());
        return report;
    }
    let constraint = bogoliubov_constraint_residual(u, v).expect("shapes checked");
    if constraint > opts.tol {
        report.violation(
            "pair constraint |uu' - vv' - I|_max within tolerance",
            constraint,
        );
    }
    let asym = pairing_asymmetry(u, v).expect("shapes checked");
    if asym > opts.tol {
        if opts.require_symmetric_pairing {
            report.violation(
                "pairing symmetry |uv^T - (uv^T)^T|_max within tolerance",
                asym,
            );
        } else {
            report.warnings.push(format!(
                "uv^T asymmetry {asym:e} exceeds tolerance (check disabled)"
            ));
        }
    }
    report
}

/// Checks a transmissivity vector: length `n`, entries finite in `[0, 1]`.
/// A zero entry is legal but flags the mode as unreconstructable.
pub fn validate_transmissivities<T: Scalar>(eta: &[T], n: usize) -> ValidationReport<T> {
    let mut report = ValidationReport::new();
    if eta.len() != n {
        report.violation(
            format!(
                "eta must list one transmissivity per mode: expected {n}, got {}",
                eta.len()
            ),
            T::infinity(),
        );
        return report;
    }
    for (i, &e) in eta.iter().enumerate() {
        if !(e.is_finite() && e >= T::zero() && e <= T::one()) {
            report.violation(
                format!("eta[{}] must lie in [0, 1], got {e}", i + 1),
                if e.is_finite() { e } else { T::infinity() },
            );
        } else if e == T::zero() {
            report.warnings.push(format!(
                "mode {} is fully opaque (eta = 0); its matrix row cannot be reconstructed",
                i + 1
            ));
        }
    }
    report
}

/// A lossless passive linear network.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryDevice<T> {
    u: ComplexMatrix<T>,
}

impl<T: Scalar> UnitaryDevice<T> {
    pub fn new(u: ComplexMatrix<T>) -> DeviceResult<Self> {
        Self::with_options(u, &ValidationOptions::default())
    }

    pub fn with_options(u: ComplexMatrix<T>, opts: &ValidationOptions<T>) -> DeviceResult<Self> {
        let report = validate_unitary(&u, opts);
        if !report.is_valid() {
            return Err(DeviceError::Invalid(report.to_string().trim_end().into()));
        }
        Ok(Self { u })
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }

    pub fn u(&self) -> &ComplexMatrix<T> {
        &self.u
    }
}

/// A lossless pair transformation with particle-conserving part `u` and
/// pair-creating part `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct BogoliubovDevice<T> {
    u: ComplexMatrix<T>,
    v: ComplexMatrix<T>,
}

impl<T: Scalar> BogoliubovDevice<T> {
    pub fn new(u: ComplexMatrix<T>, v: ComplexMatrix<T>) -> DeviceResult<Self> {
        Self::with_options(u, v, &ValidationOptions::default())
    }

    pub fn with_options(
        u: ComplexMatrix<T>,
        v: ComplexMatrix<T>,
        opts: &ValidationOptions<T>,
    ) -> DeviceResult<Self> {
        let report = validate_bogoliubov(&u, &v, opts);
        if !report.is_valid() {
            return Err(DeviceError::Invalid(report.to_string().trim_end().into()));
        }
        Ok(Self { u, v })
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }

    pub fn u(&self) -> &ComplexMatrix<T> {
        &self.u
    }

    pub fn v(&self) -> &ComplexMatrix<T> {
        &self.v
    }
}

/// Per-input-mode amplitude transmissivities. Intensity transmission of
/// mode `i` is `eta[i]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossModel<T> {
    eta: Vec<T>,
}

impl<T: Scalar> LossModel<T> {
    pub fn new(eta: Vec<T>) -> DeviceResult<Self> {
        let report = validate_transmissivities(&eta, eta.len());
        if !report.is_valid() {
            return Err(DeviceError::Invalid(report.to_string().trim_end().into()));
        }
        if eta.is_empty() {
            return Err(DeviceError::Invalid("eta must not be empty".into()));
        }
        Ok(Self { eta })
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &[T] {
        &self.eta
    }

    /// Reflected amplitude `sqrt(1 - eta_i^2)` for mode `i`.
    pub fn eta_tilde(&self, i: usize) -> T {
        (T::one() - self.eta[i] * self.eta[i]).max(T::zero()).sqrt()
    }
}

/// The lossless transformation inside a lossy device.
#[derive(Debug, Clone, PartialEq)]
pub enum InnerDevice<T> {
    Unitary(UnitaryDevice<T>),
    Bogoliubov(BogoliubovDevice<T>),
}

impl<T: Scalar> InnerDevice<T> {
    pub fn n(&self) -> usize {
        match self {
            InnerDevice::Unitary(d) => d.n(),
            InnerDevice::Bogoliubov(d) => d.n(),
        }
    }

    pub fn u(&self) -> &ComplexMatrix<T> {
        match self {
            InnerDevice::Unitary(d) => d.u(),
            InnerDevice::Bogoliubov(d) => d.u(),
        }
    }

    pub fn v(&self) -> Option<&ComplexMatrix<T>> {
        match self {
            InnerDevice::Unitary(_) => None,
            InnerDevice::Bogoliubov(d) => Some(d.v()),
        }
    }
}

/// A lossless transformation behind per-mode input loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LossyDevice<T> {
    inner: InnerDevice<T>,
    loss: LossModel<T>,
}

impl<T: Scalar> LossyDevice<T> {
    pub fn new(inner: InnerDevice<T>, loss: LossModel<T>) -> DeviceResult<Self> {
        if inner.n() != loss.n() {
            return Err(DeviceError::DimensionMismatch(format!(
                "inner device has {} modes but eta lists {}",
                inner.n(),
                loss.n()
            )));
        }
        Ok(Self { inner, loss })
    }

    pub fn n(&self) -> usize {
        self.inner.n()
    }

    pub fn inner(&self) -> &InnerDevice<T> {
        &self.inner
    }

    pub fn loss(&self) -> &LossModel<T> {
        &self.loss
    }
}

/// Any device the probe protocol can address.
#[derive(Debug, Clone, PartialEq)]
pub enum Device<T> {
    Unitary(UnitaryDevice<T>),
    Bogoliubov(BogoliubovDevice<T>),
    Lossy(LossyDevice<T>),
}

impl<T: Scalar> Device<T> {
    pub fn unitary(u: ComplexMatrix<T>) -> DeviceResult<Self> {
        Ok(Device::Unitary(UnitaryDevice::new(u)?))
    }

    pub fn bogoliubov(u: ComplexMatrix<T>, v: ComplexMatrix<T>) -> DeviceResult<Self> {
        Ok(Device::Bogoliubov(BogoliubovDevice::new(u, v)?))
    }

    pub fn lossy_unitary(u: ComplexMatrix<T>, eta: Vec<T>) -> DeviceResult<Self> {
        Ok(Device::Lossy(LossyDevice::new(
            InnerDevice::Unitary(UnitaryDevice::new(u)?),
            LossModel::new(eta)?,
        )?))
    }

    pub fn lossy_bogoliubov(
        u: ComplexMatrix<T>,
        v: ComplexMatrix<T>,
        eta: Vec<T>,
    ) -> DeviceResult<Self> {
        Ok(Device::Lossy(LossyDevice::new(
            InnerDevice::Bogoliubov(BogoliubovDevice::new(u, v)?),
            LossModel::new(eta)?,
        )?))
    }

    pub fn n(&self) -> usize {
        match self {
            Device::Unitary(d) => d.n(),
            Device::Bogoliubov(d) => d.n(),
            Device::Lossy(d) => d.n(),
        }
    }

    pub fn kind(&self) -> DeviceKind {
        match self {
            Device::Unitary(_) => DeviceKind::Unitary,
            Device::Bogoliubov(_) => DeviceKind::Bogoliubov,
            Device::Lossy(d) => match d.inner() {
                InnerDevice::Unitary(_) => DeviceKind::LossyUnitary,
                InnerDevice::Bogoliubov(_) => DeviceKind::LossyBogoliubov,
            },
        }
    }

    /// Particle-conserving part of the (inner) transformation.
    pub fn u(&self) -> &ComplexMatrix<T> {
        match self {
            Device::Unitary(d) => d.u(),
            Device::Bogoliubov(d) => d.u(),
            Device::Lossy(d) => d.inner().u(),
        }
    }

    /// Pair-creating part, if the (inner) transformation has one.
    pub fn v(&self) -> Option<&ComplexMatrix<T>> {
        match self {
            Device::Unitary(_) => None,
            Device::Bogoliubov(d) => Some(d.v()),
            Device::Lossy(d) => d.inner().v(),
        }
    }

    /// Amplitude transmissivities, if the device is lossy.
    pub fn eta(&self) -> Option<&[T]> {
        match self {
            Device::Lossy(d) => Some(d.loss().eta()),
            _ => None,
        }
    }

    /// Re-checks every invariant of an already-constructed device.
    pub fn validate(&self, opts: &ValidationOptions<T>) -> ValidationReport<T> {
        let mut report = match self {
            Device::Unitary(d) => validate_unitary(d.u(), opts),
            Device::Bogoliubov(d) => validate_bogoliubov(d.u(), d.v(), opts),
            Device::Lossy(d) => {
                let mut r = match d.inner() {
                    InnerDevice::Unitary(i) => validate_unitary(i.u(), opts),
                    InnerDevice::Bogoliubov(i) => validate_bogoliubov(i.u(), i.v(), opts),
                };
                r.merge(validate_transmissivities(d.loss().eta(), d.n()));
                r
            }
        };
        report.warnings.dedup();
        report
    }
}

/// Expands a lossy unitary device into its `2n x 2n` lossless unitary over
/// (accessible, ancilla) modes. The result is unitary whenever the inner
/// matrix is.
pub fn embed_lossy_unitary<T: Scalar>(device: &LossyDevice<T>) -> DeviceResult<ComplexMatrix<T>> {
    let InnerDevice::Unitary(inner) = device.inner() else {
        return Err(DeviceError::WrongInnerKind(
            "embed_lossy_unitary requires a unitary inner device".into(),
        ));
    };
    Ok(embed_particle_conserving(inner.u(), device.loss()))
}

/// Expands a lossy Bogoliubov device into its `2n x 2n` lossless pair
/// transformation `(a, b)` over (accessible, ancilla) modes. The pair
/// satisfies `a a\u{2020} - b b\u{2020} = I` whenever the inner pair does.
pub fn embed_lossy_bogoliubov<T: Scalar>(
    device: &LossyDevice<T>,
) -> DeviceResult<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let InnerDevice::Bogoliubov(inner) = device.inner() else {
        return Err(DeviceError::WrongInnerKind(
            "embed_lossy_bogoliubov requires a Bogoliubov inner device".into(),
        ));
    };
    let a = embed_particle_conserving(inner.u(), device.loss());
    let n = inner.n();
    let loss = device.loss();
    let zero = Complex::new(T::zero(), T::zero());
    let b = ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
        if j >= n {
            return zero;
        }
        if i < n {
            inner.v()[(i, j)].scale(loss.eta()[i])
        } else {
            inner.v()[(i - n, j)].scale(loss.eta_tilde(i - n))
        }
    });
    Ok((a, b))
}

// Input mode i splits at its loss beamsplitter: amplitude eta_i continues
// into the inner matrix, amplitude -eta~_i exits to ancilla i; the vacuum
// ancilla input mixes back with weights (eta~_i through the matrix, eta_i
// to the ancilla output).
fn embed_particle_conserving<T: Scalar>(
    u: &ComplexMatrix<T>,
    loss: &LossModel<T>,
) -> ComplexMatrix<T> {
    let n = u.rows();
    let zero = Complex::new(T::zero(), T::zero());
    ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, true) => u[(i, j)].scale(loss.eta()[i]),
        (true, false) => {
            if i == j - n {
                Complex::new(-loss.eta_tilde(i), T::zero())
            } else {
                zero
            }
        }
        (false, true) => u[(i - n, j)].scale(loss.eta_tilde(i - n)),
        (false, false) => {
            if i == j {
                Complex::new(loss.eta()[i - n], T::zero())
            } else {
                zero
            }
        }
    })
}

/// Inner transformation class named in device files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerKind {
    Unitary,
    Bogoliubov,
}

/// On-disk JSON form of a device. Matrices are nested arrays of
/// `[re, im]` pairs; `eta` is present only for lossy devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DeviceFile<T: Scalar> {
    pub kind: InnerKind,
    pub n: usize,
    pub u: ComplexMatrix<T>,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub v: Option<ComplexMatrix<T>>,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub eta: Option<Vec<T>>,
}

impl<T: Scalar> DeviceFile<T> {
    pub fn from_device(device: &Device<T>) -> Self {
        Self {
            kind: if device.kind().is_bogoliubov() {
                InnerKind::Bogoliubov
            } else {
                InnerKind::Unitary
            },
            n: device.n(),
            u: device.u().clone(),
            v: device.v().cloned(),
            eta: device.eta().map(|e| e.to_vec()),
        }
    }

    /// Validates the file contents without constructing a device.
    pub fn validate(&self, opts: &ValidationOptions<T>) -> ValidationReport<T> {
        let mut report = ValidationReport::new();
        if self.n == 0 {
            report.violation("device must have at least one mode", T::infinity());
            return report;
        }
        if self.u.rows() != self.n || self.u.cols() != self.n {
            report.violation(
                format!(
                    "u must be {0}x{0} to match n = {0}, got {1}x{2}",
                    self.n,
                    self.u.rows(),
                    self.u.cols()
                ),
                T::infinity(),
            );
            return report;
        }
        match (self.kind, &self.v) {
            (InnerKind::Unitary, None) => report.merge(validate_unitary(&self.u, opts)),
            (InnerKind::Unitary, Some(_)) => {
                report.violation("a unitary device must not carry a v block", T::infinity());
            }
            (InnerKind::Bogoliubov, Some(v)) => report.merge(validate_bogoliubov(&self.u, v, opts)),
            (InnerKind::Bogoliubov, None) => {
                report.violation("a bogoliubov device requires a v block", T::infinity());
            }
        }
        if let Some(eta) = &self.eta {
            report.merge(validate_transmissivities(eta, self.n));
        }
        report
    }

    /// Validates and constructs the device the file describes.
    pub fn into_device(self, opts: &ValidationOptions<T>) -> DeviceResult<Device<T>> {
        let report = self.validate(opts);
        if !report.is_valid() {
            return Err(DeviceError::Invalid(report.to_string().trim_end().into()));
        }
        let inner = match self.kind {
            InnerKind::Unitary => InnerDevice::Unitary(UnitaryDevice { u: self.u }),
            InnerKind::Bogoliubov => InnerDevice::Bogoliubov(BogoliubovDevice {
                u: self.u,
                v: self.v.expect("validated"),
            }),
        };
        match self.eta {
            Some(eta) => Ok(Device::Lossy(LossyDevice {
                inner,
                loss: LossModel { eta },
            })),
            None => Ok(match inner {
                InnerDevice::Unitary(d) => Device::Unitary(d),
                InnerDevice::Bogoliubov(d) => Device::Bogoliubov(d),
            }),
        }
    }

    pub fn to_json_pretty(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> DeviceResult<Self> {
        serde_json::from_str(text).map_err(|e| DeviceError::Malformed(e.to_string()))
    }
}

/// Frobenius distances between two devices, comparing `u`, `v` (absent
/// blocks count as zero), and transmissivities (absent means lossless).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviceDistance<T> {
    pub frobenius_u: T,
    pub frobenius_v: T,
    pub eta_max_abs_diff: T,
}

pub fn device_distance<T: Scalar>(a: &Device<T>, b: &Device<T>) -> DeviceResult<DeviceDistance<T>> {
    if a.n() != b.n() {
        return Err(DeviceError::DimensionMismatch(format!(
            "devices have {} and {} modes",
            a.n(),
            b.n()
        )));
    }
    let n = a.n();
    let zeros = ComplexMatrix::zeros(n, n);
    let va = a.v().unwrap_or(&zeros);
    let vb = b.v().unwrap_or(&zeros);
    let ones = vec![T::one(); n];
    let ea = a.eta().unwrap_or(&ones);
    let eb = b.eta().unwrap_or(&ones);
    let eta_diff = ea
        .iter()
        .zip(eb)
        .map(|(&x, &y)| (x - y).abs())
        .fold(T::zero(), T::max);
    Ok(DeviceDistance {
        frobenius_u: frobenius_distance(a.u(), b.u()).expect("equal shapes"),
        frobenius_v: frobenius_distance(va, vb).expect("equal shapes"),
        eta_max_abs_diff: eta_diff,
    })
}
