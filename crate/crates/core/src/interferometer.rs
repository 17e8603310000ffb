//! Probe settings, observables, and measurement simulation.
//!
//! The measurement geometry is a modified Mach-Zehnder interferometer. A
//! probe enters a balanced beamsplitter; the upper arm picks up a phase
//! `e^{i phi}` with `phi` either 0 or pi/2, the lower arm enters the device
//! at input port `p` and leaves at output port `q`; a second balanced
//! beamsplitter recombines the arms onto two detectors. The recorded
//! observable is the difference in detected intensity (coherent probes) or
//! detection probability (single-photon probes) between the detectors.
//! Loss probes skip the interferometer and record total transmitted
//! intensity, or the probability that the photon is not diverted at the
//! fictitious loss beamsplitter.
//!
//! For probes of a device with a pair-creating part, the model drops
//! annihilation operators acting on the vacuum: spontaneous pair production
//! from the transformed vacuum is ignored, so observables are the
//! idealized ones and the single-photon probability difference for such
//! devices can exceed 1 in magnitude.
//!
//! Three evaluation paths exist per setting: [`expected_observable`]
//! (closed forms in the device matrix entries), [`oracle_observable`]
//! (literal amplitude propagation through beamsplitters, phase, and the
//! full device transformation, including the lossy embedding), and
//! [`sample_observable`] (finite shot counts). The first two are
//! independent implementations and must agree to high precision; the
//! sampler draws counts from the exact per-detector statistics, so its
//! cost does not grow with the shot count.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::ComplexMatrix;
use crate::devices::{embed_lossy_bogoliubov, embed_lossy_unitary, Device, InnerDevice};
use crate::scalar::{from_count, Scalar};

/// Per-detector mean count per shot above which sampling emits a warning.
pub const LARGE_MEAN_WARNING: f64 = 1e6;

/// Errors from evaluating or sampling a probe setting.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterferometerError {
    /// A port index is outside `1..=n`.
    #[error("mode index {index} out of range for a {n}-mode device (ports are 1..={n})")]
    InvalidMode { index: usize, n: usize },
    /// The probe kind cannot measure this device kind.
    #[error("protocol mismatch: {0}")]
    ProtocolMismatch(String),
    /// The setting itself is unusable (zero amplitude, non-finite values).
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
}

/// Which probe state enters the device.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Coherent state through the interferometer; intensity difference.
    Coherent,
    /// Single photon through the interferometer; probability difference.
    SinglePhoton,
    /// Coherent state straight into one port; total transmitted intensity.
    LossCoherent,
    /// Single photon straight into one port; transmission probability.
    LossSinglePhoton,
}

impl ProbeKind {
    pub fn is_loss_probe(self) -> bool {
        matches!(self, ProbeKind::LossCoherent | ProbeKind::LossSinglePhoton)
    }

    pub fn uses_coherent_state(self) -> bool {
        matches!(self, ProbeKind::Coherent | ProbeKind::LossCoherent)
    }
}

/// Interferometer phase applied to the reference arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "pi/2")]
    PiOverTwo,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::Zero, Phase::PiOverTwo];

    /// The phase factor `e^{i phi}`; exactly 1 or i.
    pub fn factor<T: Scalar>(self) -> Complex<T> {
        match self {
            Phase::Zero => Complex::new(T::one(), T::zero()),
            Phase::PiOverTwo => Complex::new(T::zero(), T::one()),
        }
    }

    /// `Re[e^{-i phi} z]`; selects the real or imaginary part exactly.
    pub fn select<T: Scalar>(self, z: Complex<T>) -> T {
        match self {
            Phase::Zero => z.re,
            Phase::PiOverTwo => z.im,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Phase::Zero => 0,
            Phase::PiOverTwo => 1,
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Phase::Zero => "0",
            Phase::PiOverTwo => "pi/2",
        })
    }
}

/// One fully specified measurement configuration.
///
/// Ports `p` (input) and `q` (output) are 1-based. Loss probes ignore `q`
/// and `phi`; single-photon probes ignore `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ProbeSetting<T: Scalar> {
    pub kind: ProbeKind,
    pub p: usize,
    pub q: usize,
    pub phi: Phase,
    #[serde(with = "crate::algebra::complex_serde")]
    pub alpha: Complex<T>,
    pub shots: u64,
}

impl<T: Scalar> ProbeSetting<T> {
    pub fn coherent(p: usize, q: usize, phi: Phase, alpha: Complex<T>, shots: u64) -> Self {
        Self {
            kind: ProbeKind::Coherent,
            p,
            q,
            phi,
            alpha,
            shots,
        }
    }

    pub fn single_photon(p: usize, q: usize, phi: Phase, shots: u64) -> Self {
        Self {
            kind: ProbeKind::SinglePhoton,
            p,
            q,
            phi,
            alpha: Complex::new(T::one(), T::zero()),
            shots,
        }
    }

    pub fn loss_coherent(p: usize, alpha: Complex<T>, shots: u64) -> Self {
        Self {
            kind: ProbeKind::LossCoherent,
            p,
            q: p,
            phi: Phase::Zero,
            alpha,
            shots,
        }
    }

    pub fn loss_single_photon(p: usize, shots: u64) -> Self {
        Self {
            kind: ProbeKind::LossSinglePhoton,
            p,
            q: p,
            phi: Phase::Zero,
            alpha: Complex::new(T::one(), T::zero()),
            shots,
        }
    }
}

/// Detector counts backing a sampled observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RawCounts {
    /// Counts at the two interferometer detectors.
    Detectors { b0: u64, b1: u64 },
    /// Transmitted count for a loss probe.
    Transmitted { count: u64 },
}

/// A simulated measurement outcome.
///
/// `observable` is exact when `setting.shots == 0` (then `std_error` is 0
/// and `raw_counts` absent); otherwise it is the finite-shot estimate with
/// its estimated standard error and the counts that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MeasurementRecord<T: Scalar> {
    pub setting: ProbeSetting<T>,
    pub observable: T,
    pub std_error: T,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    pub raw_counts: Option<RawCounts>,
}

impl<T: Scalar> MeasurementRecord<T> {
    pub fn to_json_line(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json_line(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }
}

/// Checks that a setting can run against the device: ports in range,
/// usable amplitude, and a probe kind the device supports.
pub fn check_setting<T: Scalar>(
    device: &Device<T>,
    setting: &ProbeSetting<T>,
) -> Result<(), InterferometerError> {
    let n = device.n();
    if setting.p < 1 || setting.p > n {
        return Err(InterferometerError::InvalidMode {
            index: setting.p,
            n,
        });
    }
    if !setting.kind.is_loss_probe() && (setting.q < 1 || setting.q > n) {
        return Err(InterferometerError::InvalidMode {
            index: setting.q,
            n,
        });
    }
    if setting.kind.uses_coherent_state() {
        if !(setting.alpha.re.is_finite() && setting.alpha.im.is_finite()) {
            return Err(InterferometerError::InvalidSetting(
                "coherent amplitude must be finite".into(),
            ));
        }
        if setting.alpha.norm_sqr() == T::zero() {
            return Err(InterferometerError::InvalidSetting(
                "coherent probes require a nonzero amplitude".into(),
            ));
        }
    }
    if setting.kind == ProbeKind::LossCoherent && device.v().is_some() {
        return Err(InterferometerError::ProtocolMismatch(
            "total-intensity loss probes only calibrate particle-conserving devices; \
             use single-photon loss probes for devices with a pair-creating part"
                .into(),
        ));
    }
    Ok(())
}

/// Closed-form value of the observable for a setting, at infinite statistics.
pub fn expected_observable<T: Scalar>(
    device: &Device<T>,
    setting: &ProbeSetting<T>,
) -> Result<T, InterferometerError> {
    check_setting(device, setting)?;
    let pi = setting.p - 1;
    let eta_p = device.eta().map_or(T::one(), |eta| eta[pi]);
    Ok(match setting.kind {
        ProbeKind::Coherent => {
            let qi = setting.q - 1;
            let u_pq = device.u()[(pi, qi)];
            match device.v() {
                None => setting.alpha.norm_sqr() * (eta_p * setting.phi.select(u_pq)),
                Some(v) => {
                    let beta = setting.alpha * u_pq + setting.alpha.conj() * v[(pi, qi)].conj();
                    eta_p * setting.phi.select(setting.alpha.conj() * beta)
                }
            }
        }
        ProbeKind::SinglePhoton => {
            let qi = setting.q - 1;
            eta_p * setting.phi.select(device.u()[(pi, qi)])
        }
        ProbeKind::LossCoherent => eta_p * eta_p * setting.alpha.norm_sqr(),
        ProbeKind::LossSinglePhoton => eta_p * eta_p,
    })
}

// Full transformation the probe passes through: input amplitudes map as
// out_j = sum_i in_i a[i][j] (creation-operator part), with the optional
// pair part entering displacement propagation as -conj(in_i) conj(b[i][j]).
struct DeviceAction<T> {
    a: ComplexMatrix<T>,
    b: Option<ComplexMatrix<T>>,
    accessible: usize,
}

impl<T: Scalar> DeviceAction<T> {
    fn of(device: &Device<T>) -> Self {
        match device {
            Device::Unitary(d) => Self {
                a: d.u().clone(),
                b: None,
                accessible: d.n(),
            },
            Device::Bogoliubov(d) => Self {
                a: d.u().clone(),
                b: Some(d.v().clone()),
                accessible: d.n(),
            },
            Device::Lossy(d) => match d.inner() {
                InnerDevice::Unitary(_) => Self {
                    a: embed_lossy_unitary(d).expect("inner kind checked"),
                    b: None,
                    accessible: d.n(),
                },
                InnerDevice::Bogoliubov(_) => {
                    let (a, b) = embed_lossy_bogoliubov(d).expect("inner kind checked");
                    Self {
                        a,
                        b: Some(b),
                        accessible: d.n(),
                    }
                }
            },
        }
    }

    fn total(&self) -> usize {
        self.a.rows()
    }

    /// Propagates coherent displacements.
    fn apply_displacement(&self, input: &[Complex<T>]) -> Vec<Complex<T>> {
        let l = self.total();
        let mut out = vec![Complex::new(T::zero(), T::zero()); l];
        for (j, out_j) in out.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in 0..l {
                acc += input[i] * self.a[(i, j)];
                if let Some(b) = &self.b {
                    acc -= input[i].conj() * b[(i, j)].conj();
                }
            }
            *out_j = acc;
        }
        out
    }

    /// Propagates a single-photon amplitude; the pair part acts on vacuum
    /// and drops out.
    fn apply_amplitude(&self, input: &[Complex<T>]) -> Vec<Complex<T>> {
        let l = self.total();
        let mut out = vec![Complex::new(T::zero(), T::zero()); l];
        for (j, out_j) in out.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (i, amp) in input.iter().enumerate() {
                acc += *amp * self.a[(i, j)];
            }
            *out_j = acc;
        }
        out
    }
}

/// Balanced beamsplitter: `(x, y) -> ((x + i y)/sqrt2, (i x + y)/sqrt2)`.
fn beamsplit<T: Scalar>(x: Complex<T>, y: Complex<T>) -> (Complex<T>, Complex<T>) {
    let s = T::FRAC_1_SQRT_2();
    let i = Complex::new(T::zero(), T::one());
    ((x + i * y).scale(s), ((i * x) + y).scale(s))
}

// Sends the probe through beamsplitter, phase, device, beamsplitter.
// Returns the two detector amplitudes and the remaining device outputs
// (entry q-1 already consumed by the second beamsplitter and zeroed).
fn propagate_interferometer<T: Scalar>(
    device: &Device<T>,
    setting: &ProbeSetting<T>,
    coherent: bool,
) -> (Complex<T>, Complex<T>, Vec<Complex<T>>, usize) {
    let action = DeviceAction::of(device);
    let probe = if coherent {
        setting.alpha
    } else {
        Complex::new(T::one(), T::zero())
    };
    let (upper, lower) = beamsplit(probe, Complex::new(T::zero(), T::zero()));
    let reference = upper * setting.phi.factor::<T>();
    let mut ports = vec![Complex::new(T::zero(), T::zero()); action.total()];
    ports[setting.p - 1] = lower;
    let mut ports = if coherent {
        action.apply_displacement(&ports)
    } else {
        action.apply_amplitude(&ports)
    };
    let (d0, d1) = beamsplit(reference, ports[setting.q - 1]);
    ports[setting.q - 1] = Complex::new(T::zero(), T::zero());
    (d0, d1, ports, action.accessible)
}

// Sends the probe straight into port p with no interferometer around it.
fn propagate_direct<T: Scalar>(
    device: &Device<T>,
    setting: &ProbeSetting<T>,
    coherent: bool,
) -> (Vec<Complex<T>>, usize) {
    let action = DeviceAction::of(device);
    let probe = if coherent {
        setting.alpha
    } else {
        Complex::new(T::one(), T::zero())
    };
    let mut ports = vec![Complex::new(T::zero(), T::zero()); action.total()];
    ports[setting.p - 1] = probe;
    let ports = if coherent {
        action.apply_displacement(&ports)
    } else {
        action.apply_amplitude(&ports)
    };
    (ports, action.accessible)
}

fn weight<T: Scalar>(amplitudes: &[Complex<T>]) -> T {
    amplitudes
        .iter()
        .map(|z| z.norm_sqr())
        .fold(T::zero(), |acc, x| acc + x)
}

/// The same observable as [`expected_observable`], evaluated by literal
/// propagation through every optical element. Kept free of closed forms so
/// the two paths check each other.
pub fn oracle_observable<T: Scalar>(
    device: &Device<T>,
    setting: &ProbeSetting<T>,
) -> Result<T, InterferometerError> {
    check_setting(device, setting)?;
    Ok(match setting.kind {
        ProbeKind::Coherent => {
            let (d0, d1, _, _) = propagate_interferometer(device, setting, true);
            d1.norm_sqr() - d0.norm_sqr()
        }
        ProbeKind::SinglePhoton => {
            let (d0, d1, _, _) = propagate_interferometer(device, setting, false);
            d1.norm_sqr() - d0.norm_sqr()
        }
        ProbeKind::LossCoherent => {
            let (ports, accessible) = propagate_direct(device, setting, true);
            weight(&ports[..accessible])
        }
        ProbeKind::LossSinglePhoton => {
            let (ports, accessible) = propagate_direct(device, setting, false);
            T::one() - weight(&ports[accessible..])
        }
    })
}

/// Simulates a finite-shot measurement of a setting.
///
/// Counts are drawn from the exact per-detector statistics (Poisson for
/// coherent intensities, multinomial for the single photon), so the cost
/// is independent of `setting.shots`. With `shots == 0` the record carries
/// the exact observable and zero standard error. Identical
/// `(device, setting, seed)` triples produce identical records.
pub fn sample_observable<T: Scalar>(
    device: &Device<T>,
    setting: &ProbeSetting<T>,
    seed: u64,
) -> Result<MeasurementRecord<T>, InterferometerError> {
    check_setting(device, setting)?;
    if setting.shots == 0 {
        // Zero shots means infinite statistics: the exact value, no noise.
        return Ok(MeasurementRecord {
            setting: *setting,
            observable: expected_observable(device, setting)?,
            std_error: T::zero(),
            raw_counts: None,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shots = setting.shots;
    let m = from_count::<T>(shots);
    let record = match setting.kind {
        ProbeKind::Coherent => {
            let (d0, d1, _, _) = propagate_interferometer(device, setting, true);
            let mean0 = d0.norm_sqr();
            let mean1 = d1.norm_sqr();
            warn_on_large_mean(mean0.max(mean1));
            let t0 = T::poisson_count(&mut rng, m * mean0);
            let t1 = T::poisson_count(&mut rng, m * mean1);
            MeasurementRecord {
                setting: *setting,
                observable: (from_count::<T>(t1) - from_count::<T>(t0)) / m,
                std_error: from_count::<T>(t0 + t1).sqrt() / m,
                raw_counts: Some(RawCounts::Detectors { b0: t0, b1: t1 }),
            }
        }
        ProbeKind::SinglePhoton => {
            let (d0, d1, rest, _) = propagate_interferometer(device, setting, false);
            let w0 = d0.norm_sqr();
            let w1 = d1.norm_sqr();
            let total = w0 + w1 + weight(&rest);
            let p0 = w0 / total;
            let p1 = w1 / total;
            let n0 = T::binomial_count(&mut rng, shots, p0);
            let remaining = T::one() - p0;
            let n1 = if remaining > T::zero() && p1 > T::zero() {
                T::binomial_count(&mut rng, shots - n0, p1 / remaining)
            } else {
                0
            };
            let f0 = from_count::<T>(n0) / m;
            let f1 = from_count::<T>(n1) / m;
            let diff = f1 - f0;
            let variance = ((f0 + f1 - diff * diff) / m).max(T::zero());
            MeasurementRecord {
                setting: *setting,
                observable: total * diff,
                std_error: total * variance.sqrt(),
                raw_counts: Some(RawCounts::Detectors { b0: n0, b1: n1 }),
            }
        }
        ProbeKind::LossCoherent => {
            let (ports, accessible) = propagate_direct(device, setting, true);
            let mean = weight(&ports[..accessible]);
            warn_on_large_mean(mean);
            let t = T::poisson_count(&mut rng, m * mean);
            MeasurementRecord {
                setting: *setting,
                observable: from_count::<T>(t) / m,
                std_error: from_count::<T>(t).sqrt() / m,
                raw_counts: Some(RawCounts::Transmitted { count: t }),
            }
        }
        ProbeKind::LossSinglePhoton => {
            let (ports, accessible) = propagate_direct(device, setting, false);
            let kept = (T::one() - weight(&ports[accessible..])).clamp(T::zero(), T::one());
            let t = T::binomial_count(&mut rng, shots, kept);
            let f = from_count::<T>(t) / m;
            MeasurementRecord {
                setting: *setting,
                observable: f,
                std_error: ((f * (T::one() - f)) / m).max(T::zero()).sqrt(),
                raw_counts: Some(RawCounts::Transmitted { count: t }),
            }
        }
    };
    Ok(record)
}

fn warn_on_large_mean<T: Scalar>(mean: T) {
    if mean.to_f64().unwrap_or(f64::INFINITY) > LARGE_MEAN_WARNING {
        log::warn!(
            "per-detector mean of {mean} photons per shot exceeds {LARGE_MEAN_WARNING:e}; \
             consider a smaller probe amplitude"
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{haar_random_unitary, random_bogoliubov, ComplexMatrix};
    use crate::devices::DeviceKind;
    use proptest::prelude::*;

    type C64 = Complex<f64>;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    fn identity_device(n: usize) -> Device<f64> {
        Device::unitary(ComplexMatrix::identity(n)).unwrap()
    }

    fn squeezer(r: f64) -> Device<f64> {
        let u = ComplexMatrix::new(1, 1, vec![c(r.cosh(), 0.0)]).unwrap();
        let v = ComplexMatrix::new(1, 1, vec![c(r.sinh(), 0.0)]).unwrap();
        Device::bogoliubov(u, v).unwrap()
    }

    #[test]
    fn identity_coherent_probe_reads_alpha_squared() {
        let device = identity_device(2);
        let alpha = c(1.3, -0.4);
        let s = ProbeSetting::coherent(1, 1, Phase::Zero, alpha, 0);
        let expected = expected_observable(&device, &s).unwrap();
        assert!((expected - alpha.norm_sqr()).abs() < 1e-15);
        // Off-diagonal entry of the identity is zero.
        let s_off = ProbeSetting::coherent(1, 2, Phase::Zero, alpha, 0);
        assert_eq!(expected_observable(&device, &s_off).unwrap(), 0.0);
    }

    #[test]
    fn phase_splits_real_and_imaginary_parts_exactly() {
        let u = haar_random_unitary::<f64>(3, 77).unwrap();
        let alpha = c(0.9, 0.7);
        let a2 = alpha.norm_sqr();
        let device = Device::unitary(u.clone()).unwrap();
        for p in 1..=3 {
            for q in 1..=3 {
                let d0 = expected_observable(
                    &device,
                    &ProbeSetting::coherent(p, q, Phase::Zero, alpha, 0),
                )
                .unwrap();
                let dh = expected_observable(
                    &device,
                    &ProbeSetting::coherent(p, q, Phase::PiOverTwo, alpha, 0),
                )
                .unwrap();
                let entry = u[(p - 1, q - 1)];
                // Identical arithmetic on both sides, so equality is exact.
                assert_eq!(d0, a2 * entry.re);
                assert_eq!(dh, a2 * entry.im);
            }
        }
    }

    #[test]
    fn single_mode_squeezer_coherent_observable() {
        // For u = cosh r, v = sinh r and real alpha the phase-0 intensity
        // difference is alpha^2 e^r.
        let r = 0.8f64;
        let device = squeezer(r);
        let alpha = c(1.1, 0.0);
        let s = ProbeSetting::coherent(1, 1, Phase::Zero, alpha, 0);
        let observed = expected_observable(&device, &s).unwrap();
        assert!((observed - alpha.re * alpha.re * r.exp()).abs() < 1e-12);
        // The single-photon probe sees only the particle-conserving part.
        let sp = ProbeSetting::single_photon(1, 1, Phase::Zero, 0);
        assert!((expected_observable(&device, &sp).unwrap() - r.cosh()).abs() < 1e-15);
    }

    #[test]
    fn loss_probes_read_eta_squared() {
        let u = haar_random_unitary::<f64>(2, 5).unwrap();
        let device = Device::lossy_unitary(u, vec![0.8, 0.35]).unwrap();
        let alpha = c(1.0, 0.0);
        let s = ProbeSetting::loss_coherent(1, alpha, 0);
        assert!((expected_observable(&device, &s).unwrap() - 0.64).abs() < 1e-15);
        let s2 = ProbeSetting::loss_single_photon(2, 0);
        assert!((expected_observable(&device, &s2).unwrap() - 0.1225).abs() < 1e-15);
    }

    #[test]
    fn loss_coherent_probe_rejected_for_pair_creating_devices() {
        let device = squeezer(0.5);
        let s = ProbeSetting::loss_coherent(1, c(1.0, 0.0), 0);
        assert!(matches!(
            expected_observable(&device, &s),
            Err(InterferometerError::ProtocolMismatch(_))
        ));
        let (u, v) = random_bogoliubov::<f64>(2, 0.5, 3).unwrap();
        let lossy = Device::lossy_bogoliubov(u, v, vec![0.9, 0.9]).unwrap();
        assert!(matches!(
            oracle_observable(&lossy, &ProbeSetting::loss_coherent(1, c(1.0, 0.0), 0)),
            Err(InterferometerError::ProtocolMismatch(_))
        ));
    }

    #[test]
    fn out_of_range_ports_are_rejected() {
        let device = identity_device(2);
        let bad_p = ProbeSetting::coherent(3, 1, Phase::Zero, c(1.0, 0.0), 0);
        assert!(matches!(
            expected_observable(&device, &bad_p),
            Err(InterferometerError::InvalidMode { index: 3, n: 2 })
        ));
        let bad_q = ProbeSetting::coherent(1, 0, Phase::Zero, c(1.0, 0.0), 0);
        assert!(matches!(
            expected_observable(&device, &bad_q),
            Err(InterferometerError::InvalidMode { index: 0, n: 2 })
        ));
        let zero_alpha = ProbeSetting::coherent(1, 1, Phase::Zero, c(0.0, 0.0), 0);
        assert!(matches!(
            expected_observable(&device, &zero_alpha),
            Err(InterferometerError::InvalidSetting(_))
        ));
    }

    #[test]
    fn oracle_agrees_with_closed_forms_on_random_devices() {
        let alpha = c(0.8, 0.5);
        let mut worst = 0.0f64;
        for seed in 0..6 {
            let u = haar_random_unitary::<f64>(3, seed).unwrap();
            let devices = [
                Device::unitary(u.clone()).unwrap(),
                Device::lossy_unitary(u, vec![0.9, 0.6, 0.75]).unwrap(),
            ];
            for device in &devices {
                for p in 1..=3 {
                    for q in 1..=3 {
                        for phi in Phase::BOTH {
                            for setting in [
                                ProbeSetting::coherent(p, q, phi, alpha, 0),
                                ProbeSetting::single_photon(p, q, phi, 0),
                            ] {
                                let a = expected_observable(device, &setting).unwrap();
                                let b = oracle_observable(device, &setting).unwrap();
                                worst = worst.max((a - b).abs());
                            }
                        }
                    }
                }
            }
        }
        assert!(worst < 1e-13, "worst deviation {worst}");
    }

    #[test]
    fn zero_shots_returns_exact_record() {
        let device = identity_device(1);
        let s = ProbeSetting::coherent(1, 1, Phase::Zero, c(2.0, 0.0), 0);
        let record = sample_observable(&device, &s, 123).unwrap();
        assert_eq!(record.observable, 4.0);
        assert_eq!(record.std_error, 0.0);
        assert!(record.raw_counts.is_none());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let device = identity_device(2);
        let s = ProbeSetting::coherent(1, 2, Phase::PiOverTwo, c(1.0, 0.5), 5000);
        let a = sample_observable(&device, &s, 7).unwrap();
        let b = sample_observable(&device, &s, 7).unwrap();
        let c_rec = sample_observable(&device, &s, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c_rec);
    }

    #[test]
    fn sampled_counts_match_reported_observable() {
        let device = identity_device(1);
        let s = ProbeSetting::coherent(1, 1, Phase::Zero, c(1.5, 0.0), 2000);
        let rec = sample_observable(&device, &s, 11).unwrap();
        let Some(RawCounts::Detectors { b0, b1 }) = rec.raw_counts else {
            panic!("expected detector counts");
        };
        let m = s.shots as f64;
        assert!((rec.observable - (b1 as f64 - b0 as f64) / m).abs() < 1e-12);
        assert!(rec.std_error > 0.0);

        let sp = ProbeSetting::single_photon(1, 1, Phase::Zero, 4000);
        let rec = sample_observable(&device, &sp, 13).unwrap();
        let Some(RawCounts::Detectors { b0, b1 }) = rec.raw_counts else {
            panic!("expected detector counts");
        };
        assert!(b0 + b1 <= sp.shots);
        let m = sp.shots as f64;
        assert!((rec.observable - (b1 as f64 - b0 as f64) / m).abs() < 1e-12);
    }

    #[test]
    fn loss_probe_sampling_counts_transmissions() {
        let device =
            Device::lossy_unitary(haar_random_unitary::<f64>(2, 31).unwrap(), vec![0.7, 1.0])
                .unwrap();
        let s = ProbeSetting::loss_single_photon(1, 10_000);
        let rec = sample_observable(&device, &s, 19).unwrap();
        let Some(RawCounts::Transmitted { count }) = rec.raw_counts else {
            panic!("expected transmitted count");
        };
        assert!(count <= s.shots);
        assert!((rec.observable - count as f64 / s.shots as f64).abs() < 1e-12);
        // Transmission probability is eta^2 = 0.49; 10k shots pin it well.
        assert!((rec.observable - 0.49).abs() < 0.05);
    }

    #[test]
    fn single_photon_distribution_on_lossless_device_is_normalized() {
        // On a lossless device the two detectors plus the remaining output
        // ports carry the whole photon.
        let u = haar_random_unitary::<f64>(4, 3).unwrap();
        let device = Device::unitary(u).unwrap();
        let s = ProbeSetting::single_photon(2, 3, Phase::PiOverTwo, 0);
        let (d0, d1, rest, accessible) = propagate_interferometer(&device, &s, false);
        assert_eq!(accessible, 4);
        let total = d0.norm_sqr() + d1.norm_sqr() + weight(&rest);
        assert!((total - 1.0).abs() < 1e-13);
    }

    #[test]
    fn records_serialize_round_trip() {
        let device = identity_device(2);
        let s = ProbeSetting::coherent(2, 1, Phase::PiOverTwo, c(1.0, -1.0), 100);
        let rec = sample_observable(&device, &s, 5).unwrap();
        let line = rec.to_json_line().unwrap();
        let back = MeasurementRecord::<f64>::from_json_line(&line).unwrap();
        assert_eq!(rec, back);
        assert!(line.contains("\"pi/2\""));
        assert!(line.contains("\"coherent\""));
    }

    fn arbitrary_device(seed: u64, kind: DeviceKind) -> Device<f64> {
        let n = 2;
        match kind {
            DeviceKind::Unitary => Device::unitary(haar_random_unitary(n, seed).unwrap()).unwrap(),
            DeviceKind::Bogoliubov => {
                let (u, v) = random_bogoliubov(n, 0.9, seed).unwrap();
                Device::bogoliubov(u, v).unwrap()
            }
            DeviceKind::LossyUnitary => {
                Device::lossy_unitary(haar_random_unitary(n, seed).unwrap(), vec![0.85, 0.55])
                    .unwrap()
            }
            DeviceKind::LossyBogoliubov => {
                let (u, v) = random_bogoliubov(n, 0.9, seed).unwrap();
                Device::lossy_bogoliubov(u, v, vec![0.85, 0.55]).unwrap()
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_oracle_matches_closed_forms(
            seed in 0u64..10_000,
            p in 1usize..=2,
            q in 1usize..=2,
            phase_idx in 0usize..2,
            re in -1.5f64..1.5,
            im in -1.5f64..1.5,
            kind_idx in 0usize..4,
        ) {
            prop_assume!(re * re + im * im > 1e-4);
            let kind = [
                DeviceKind::Unitary,
                DeviceKind::Bogoliubov,
                DeviceKind::LossyUnitary,
                DeviceKind::LossyBogoliubov,
            ][kind_idx];
            let device = arbitrary_device(seed, kind);
            let alpha = c(re, im);
            let phi = Phase::BOTH[phase_idx];
            let mut settings = vec![
                ProbeSetting::coherent(p, q, phi, alpha, 0),
                ProbeSetting::single_photon(p, q, phi, 0),
                ProbeSetting::loss_single_photon(p, 0),
            ];
            if !kind.is_bogoliubov() {
                settings.push(ProbeSetting::loss_coherent(p, alpha, 0));
            }
            for setting in settings {
                let expected = expected_observable(&device, &setting).unwrap();
                let oracle = oracle_observable(&device, &setting).unwrap();
                prop_assert!(
                    (expected - oracle).abs() < 1e-12,
                    "kind {kind} setting {setting:?}: {expected} vs {oracle}"
                );
            }
        }

        #[test]
        fn prop_coherent_observable_scales_with_intensity(
            seed in 0u64..10_000,
            scale in 0.1f64..3.0,
        ) {
            let device = arbitrary_device(seed, DeviceKind::Unitary);
            let alpha = c(0.7, -0.3);
            let scaled = alpha.scale(scale.sqrt());
            let s1 = ProbeSetting::coherent(1, 2, Phase::Zero, alpha, 0);
            let s2 = ProbeSetting::coherent(1, 2, Phase::Zero, scaled, 0);
            let o1 = expected_observable(&device, &s1).unwrap();
            let o2 = expected_observable(&device, &s2).unwrap();
            prop_assert!((o2 - scale * o1).abs() < 1e-10 * (1.0 + o1.abs() * scale));
        }

        #[test]
        fn prop_sampler_is_unbiased(
            seed_base in 0u64..1_000,
            kind_idx in 0usize..4,
        ) {
            let kind = [
                DeviceKind::Unitary,
                DeviceKind::Bogoliubov,
                DeviceKind::LossyUnitary,
                DeviceKind::LossyBogoliubov,
            ][kind_idx];
            let device = arbitrary_device(seed_base, kind);
            let setting = ProbeSetting::coherent(1, 2, Phase::Zero, c(1.0, 0.4), 400);
            let truth = expected_observable(&device, &setting).unwrap();
            let reps = 160u64;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for k in 0..reps {
                let rec = sample_observable(&device, &setting, seed_base * 10_000 + k).unwrap();
                sum += rec.observable;
                sum_sq += rec.observable * rec.observable;
            }
            let mean = sum / reps as f64;
            let var = (sum_sq / reps as f64 - mean * mean).max(1e-12);
            let se = (var / reps as f64).sqrt();
            // 5 sigma keeps the false-failure rate negligible.
            prop_assert!(
                (mean - truth).abs() < 5.0 * se + 1e-9,
                "mean {mean} vs truth {truth} (se {se})"
            );
        }
    }
}
