//! Simulation and reconstruction of multimode optical devices probed one
//! port pair at a time through a two-arm interferometer.
//!
//! A device couples `n` input modes to `n` output modes either linearly
//! (a unitary matrix `U`) or with a quadratic nonlinearity that mixes
//! creation and annihilation operators (a matrix pair `(U, V)`), possibly
//! preceded by per-mode photon loss. The [`interferometer`] module
//! simulates intensity-difference measurements of such a device inside a
//! balanced two-arm interferometer; the [`tomography`] module plans the
//! probe settings, runs them, and inverts the records back into the
//! device description.
//!
//! ```
//! use mztomo::{
//!     collect_records, haar_random_unitary, plan_probes, reconstruct,
//!     Device, ExecutionOptions, C64,
//! };
//!
//! let u = haar_random_unitary::<f64>(3, 7).unwrap();
//! let device = Device::unitary(u).unwrap();
//! // shots = 0 asks for exact expectation values.
//! let plan = plan_probes(device.kind(), device.n(), C64::new(1.0, 0.0), 0).unwrap();
//! let records = collect_records(&device, &plan, &ExecutionOptions::default()).unwrap();
//! let mut report = reconstruct(device.kind(), &records, plan.alpha).unwrap();
//! report.score_against(&device).unwrap();
//! assert!(report.frobenius_error_u.unwrap() < 1e-9);
//! ```

pub mod algebra;
pub mod devices;
pub mod interferometer;
pub mod scalar;
pub mod tomography;

pub use algebra::{
    frobenius_distance, haar_random_unitary, is_unitary, random_bogoliubov, AlgebraError,
    ComplexMatrix,
};
pub use devices::{
    bogoliubov_constraint_residual, device_distance, embed_lossy_bogoliubov, embed_lossy_unitary,
    pairing_asymmetry, validate_bogoliubov, validate_transmissivities, validate_unitary,
    BogoliubovDevice, Device, DeviceDistance, DeviceError, DeviceFile, DeviceKind, InnerDevice,
    LossModel, LossyDevice, UnitaryDevice, ValidationOptions, ValidationReport, Violation,
};
pub use interferometer::{
    check_setting, expected_observable, oracle_observable, sample_observable, InterferometerError,
    MeasurementRecord, Phase, ProbeKind, ProbeSetting, RawCounts,
};
pub use scalar::Scalar;
pub use tomography::{
    collect_records, estimate_losses, fit_loglog_slope, plan_probes, reconstruct,
    reconstruct_bogoliubov, reconstruct_lossy, reconstruct_unitary, shot_noise_slope,
    shot_noise_sweep, ExecutionOptions, LossEstimate, ProbePlan, ReconstructionReport,
    ShotNoisePoint, TomographyError, DEFLATION_THRESHOLD,
};

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Single-precision complex scalar.
pub type C32 = num_complex::Complex<f32>;
/// Double-precision complex matrix.
pub type Matrix64 = ComplexMatrix<f64>;
/// Single-precision complex matrix.
pub type Matrix32 = ComplexMatrix<f32>;
/// Double-precision device, the type the command line tool works with.
pub type Device64 = Device<f64>;
