//! Command line front end: generate device files, validate and compare
//! them, run the probe-and-reconstruct pipeline, and study how the
//! reconstruction error scales with the shot budget.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O failure, 4 invalid device,
//! 5 unusable plan or records, 6 unrecoverable row (a mode too lossy to
//! divide out), 7 invalid parameters.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mztomo::{
    bogoliubov_constraint_residual, collect_records, device_distance, haar_random_unitary,
    pairing_asymmetry, plan_probes, random_bogoliubov, reconstruct, shot_noise_slope,
    shot_noise_sweep, Device, DeviceError, DeviceFile, DeviceKind, ExecutionOptions,
    MeasurementRecord, ReconstructionReport, TomographyError, ValidationOptions, C64,
};

#[derive(Parser)]
#[command(
    name = "mztomo",
    version,
    about = "Simulate and reconstruct multimode optical devices via two-arm interference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random device and write it as JSON.
    Generate(GenerateArgs),
    /// Check a device file against its class constraints.
    Validate(ValidateArgs),
    /// Print the distances between two device files.
    Compare(CompareArgs),
    /// Probe a device and reconstruct it from the simulated records.
    Tomography(TomographyArgs),
    /// Measure how the reconstruction error scales with the shot budget.
    ShotNoiseStudy(StudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Unitary,
    Bogoliubov,
    LossyUnitary,
    LossyBogoliubov,
}

impl From<KindArg> for DeviceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Unitary => DeviceKind::Unitary,
            KindArg::Bogoliubov => DeviceKind::Bogoliubov,
            KindArg::LossyUnitary => DeviceKind::LossyUnitary,
            KindArg::LossyBogoliubov => DeviceKind::LossyBogoliubov,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Device class to draw.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Number of modes.
    #[arg(long)]
    n: usize,
    /// Seed for the draw.
    #[arg(long, env = "MZT_SEED", default_value_t = 0)]
    seed: u64,
    /// Largest squeezing parameter for Bogoliubov draws.
    #[arg(long, default_value_t = 1.0)]
    max_squeeze: f64,
    /// Per-mode amplitude transmissivities for lossy kinds, comma
    /// separated; a single value applies to every mode.
    #[arg(long, value_parser = parse_eta)]
    eta: Option<EtaList>,
    /// Output path; omitted means stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Device file to check.
    #[arg(long)]
    device: PathBuf,
    /// Max-norm tolerance on constraint residuals.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Demote the pairing-symmetry check from violation to warning.
    #[arg(long)]
    allow_asymmetric: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// First device file.
    a: PathBuf,
    /// Second device file.
    b: PathBuf,
}

#[derive(Args)]
struct TomographyArgs {
    /// Device file to probe.
    #[arg(long)]
    device: PathBuf,
    /// Coherent probe amplitude as `re,im` (or just `re`).
    #[arg(long, env = "MZT_ALPHA", value_parser = parse_alpha, default_value = "1,0")]
    alpha: C64,
    /// Shots per setting; 0 asks for exact expectation values.
    #[arg(long, env = "MZT_SHOTS", default_value_t = 0)]
    shots: u64,
    /// Master seed; required whenever shots > 0.
    #[arg(long, env = "MZT_SEED")]
    seed: Option<u64>,
    /// Worker threads for the measurement simulation.
    #[arg(long, env = "MZT_JOBS")]
    jobs: Option<usize>,
    /// Where to write the reconstruction report.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Also write every measurement record as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Also write a per-entry error table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct StudyArgs {
    /// Device file to probe.
    #[arg(long)]
    device: PathBuf,
    /// Coherent probe amplitude as `re,im` (or just `re`).
    #[arg(long, env = "MZT_ALPHA", value_parser = parse_alpha, default_value = "1,0")]
    alpha: C64,
    /// Strictly increasing shot counts, comma separated (at least three).
    #[arg(long, value_parser = parse_shots_grid)]
    shots_grid: ShotsGrid,
    /// Independent repetitions per shot count.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Master seed for the whole study.
    #[arg(long, env = "MZT_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads for the measurement simulation.
    #[arg(long, env = "MZT_JOBS")]
    jobs: Option<usize>,
    /// Where to write the `shots,rmse,std_error` table.
    #[arg(long, default_value = "study.csv")]
    out: PathBuf,
}

// Newtypes so clap's vec-flattening magic does not split the comma lists
// into repeated occurrences.
#[derive(Clone)]
struct ShotsGrid(Vec<u64>);

#[derive(Clone)]
struct EtaList(Vec<f64>);

fn parse_alpha(s: &str) -> Result<C64, String> {
    let mut parts = s.splitn(2, ',');
    let re: f64 = parts
        .next()
        .unwrap_or_default()
        .trim()
        .parse()
        .map_err(|e| format!("bad real part: {e}"))?;
    let im: f64 = match parts.next() {
        Some(p) => p
            .trim()
            .parse()
            .map_err(|e| format!("bad imaginary part: {e}"))?,
        None => 0.0,
    };
    Ok(C64::new(re, im))
}

fn parse_eta(s: &str) -> Result<EtaList, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad transmissivity: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(EtaList)
}

fn parse_shots_grid(s: &str) -> Result<ShotsGrid, String> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u64>()
                .map_err(|e| format!("bad shot count: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(ShotsGrid)
}

enum CliError {
    Io(String),
    Device(String),
    Records(String),
    Unrecoverable(String),
    Params(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 3,
            CliError::Device(_) => 4,
            CliError::Records(_) => 5,
            CliError::Unrecoverable(_) => 6,
            CliError::Params(_) => 7,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m)
            | CliError::Device(m)
            | CliError::Records(m)
            | CliError::Unrecoverable(m)
            | CliError::Params(m) => m,
        }
    }
}

impl From<DeviceError> for CliError {
    fn from(e: DeviceError) -> Self {
        CliError::Device(e.to_string())
    }
}

impl From<mztomo::AlgebraError> for CliError {
    fn from(e: mztomo::AlgebraError) -> Self {
        CliError::Params(e.to_string())
    }
}

impl From<TomographyError> for CliError {
    fn from(e: TomographyError) -> Self {
        match e {
            TomographyError::InvalidParameter(_) => CliError::Params(e.to_string()),
            TomographyError::UnrecoverableRow { .. } => CliError::Unrecoverable(e.to_string()),
            _ => CliError::Records(e.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn load_device(path: &Path) -> Result<Device<f64>, CliError> {
    let text = read_file(path)?;
    let file = DeviceFile::<f64>::from_json(&text)?;
    Ok(file.into_device(&ValidationOptions::default())?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Validate(args) => run_validate(args),
        Command::Compare(args) => run_compare(args),
        Command::Tomography(args) => run_tomography(args),
        Command::ShotNoiseStudy(args) => run_study(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run_generate(args: GenerateArgs) -> Result<(), CliError> {
    let kind: DeviceKind = args.kind.into();
    if args.n == 0 {
        return Err(CliError::Params("--n must be at least 1".into()));
    }
    if !args.max_squeeze.is_finite() || args.max_squeeze < 0.0 {
        return Err(CliError::Params(
            "--max-squeeze must be finite and nonnegative".into(),
        ));
    }
    let eta = if kind.is_lossy() {
        let EtaList(given) = args.eta.ok_or_else(|| {
            CliError::Params("lossy kinds need --eta with per-mode transmissivities".into())
        })?;
        Some(match given.len() {
            1 => vec![given[0]; args.n],
            len if len == args.n => given,
            len => {
                return Err(CliError::Params(format!(
                    "--eta lists {len} values for {} modes; give one per mode or a single \
                     shared value",
                    args.n
                )))
            }
        })
    } else {
        if args.eta.is_some() {
            return Err(CliError::Params(format!(
                "--eta only applies to lossy kinds, not {kind}"
            )));
        }
        None
    };
    let device = match kind {
        DeviceKind::Unitary => Device::unitary(haar_random_unitary(args.n, args.seed)?)?,
        DeviceKind::Bogoliubov => {
            let (u, v) = random_bogoliubov(args.n, args.max_squeeze, args.seed)?;
            Device::bogoliubov(u, v)?
        }
        DeviceKind::LossyUnitary => Device::lossy_unitary(
            haar_random_unitary(args.n, args.seed)?,
            eta.expect("checked above"),
        )?,
        DeviceKind::LossyBogoliubov => {
            let (u, v) = random_bogoliubov(args.n, args.max_squeeze, args.seed)?;
            Device::lossy_bogoliubov(u, v, eta.expect("checked above"))?
        }
    };
    let json = DeviceFile::from_device(&device)
        .to_json_pretty()
        .map_err(|e| CliError::Io(format!("cannot serialize device: {e}")))?;

    let mut summary = format!("{kind} device, n = {}\n", device.n());
    match device.v() {
        Some(v) => {
            let residual = bogoliubov_constraint_residual(device.u(), v)?;
            let asym = pairing_asymmetry(device.u(), v)?;
            writeln!(summary, "  constraint residual: {residual:.3e}").unwrap();
            writeln!(summary, "  pairing asymmetry:   {asym:.3e}").unwrap();
        }
        None => {
            let residual = device.u().unitarity_residual()?;
            writeln!(summary, "  unitarity residual:  {residual:.3e}").unwrap();
        }
    }
    if let Some(e) = device.eta() {
        writeln!(summary, "  transmissivities:    {e:?}").unwrap();
    }
    match args.out {
        Some(path) => {
            write_file(&path, &json)?;
            print!("wrote {}: {summary}", path.display());
        }
        None => {
            println!("{json}");
            eprint!("{summary}");
        }
    }
    Ok(())
}

fn run_validate(args: ValidateArgs) -> Result<(), CliError> {
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(CliError::Params("--tol must be finite and positive".into()));
    }
    let text = read_file(&args.device)?;
    let file = DeviceFile::<f64>::from_json(&text)?;
    let opts = ValidationOptions {
        tol: args.tol,
        require_symmetric_pairing: !args.allow_asymmetric,
    };
    let report = file.validate(&opts);
    print!("{report}");
    if report.is_valid() {
        let lossy = if file.eta.is_some() { "lossy " } else { "" };
        let inner = match file.kind {
            mztomo::devices::InnerKind::Unitary => "unitary",
            mztomo::devices::InnerKind::Bogoliubov => "bogoliubov",
        };
        println!("valid {lossy}{inner} device, n = {}", file.n);
        Ok(())
    } else {
        Err(CliError::Device(format!(
            "{} failed validation ({} violation(s))",
            args.device.display(),
            report.violations.len()
        )))
    }
}

fn run_compare(args: CompareArgs) -> Result<(), CliError> {
    let a = load_device(&args.a)?;
    let b = load_device(&args.b)?;
    let distance = device_distance(&a, &b)?;
    let json = serde_json::to_string_pretty(&distance)
        .map_err(|e| CliError::Io(format!("cannot serialize distances: {e}")))?;
    println!("{json}");
    Ok(())
}

fn run_tomography(args: TomographyArgs) -> Result<(), CliError> {
    let seed = match (args.shots, args.seed) {
        (0, seed) => seed.unwrap_or(0),
        (_, Some(seed)) => seed,
        (_, None) => {
            return Err(CliError::Params(
                "finite-shot runs need --seed so results are reproducible".into(),
            ))
        }
    };
    let device = load_device(&args.device)?;
    let plan = plan_probes(device.kind(), device.n(), args.alpha, args.shots)?;
    let records = collect_records(
        &device,
        &plan,
        &ExecutionOptions {
            seed,
            jobs: args.jobs,
        },
    )?;
    let mut report = reconstruct(device.kind(), &records, args.alpha)?;
    report.score_against(&device)?;

    write_file(&args.out, &report_json(&report)?)?;
    if let Some(path) = &args.records {
        write_file(path, &records_jsonl(&records)?)?;
    }
    if let Some(path) = &args.csv {
        write_file(path, &entry_error_csv(&report, &device))?;
    }
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "reconstructed {} device, n = {}: {} settings, {} total shots",
        report.kind, report.n, report.settings_used, report.total_shots
    );
    println!(
        "  u error (Frobenius):  {:.3e}",
        report.frobenius_error_u.unwrap_or(f64::NAN)
    );
    if let Some(ev) = report.frobenius_error_v {
        println!("  v error (Frobenius):  {ev:.3e}");
    }
    if let Some(ee) = report.eta_error {
        println!("  eta error (max abs):  {ee:.3e}");
    }
    println!("  report: {}", args.out.display());
    Ok(())
}

fn run_study(args: StudyArgs) -> Result<(), CliError> {
    let device = load_device(&args.device)?;
    let points = shot_noise_sweep(
        &device,
        args.alpha,
        &args.shots_grid.0,
        args.seeds,
        args.seed,
        args.jobs,
    )?;
    let slope = shot_noise_slope(&points)?;
    let mut csv = String::from("shots,rmse,std_error\n");
    for p in &points {
        writeln!(csv, "{},{},{}", p.shots, p.rmse, p.std_error).unwrap();
    }
    writeln!(csv, "# log-log slope: {slope}").unwrap();
    write_file(&args.out, &csv)?;
    println!(
        "shot-noise study over {} shot counts, {} seeds each: log-log slope {slope:.4}",
        points.len(),
        args.seeds
    );
    println!("  table: {}", args.out.display());
    Ok(())
}

fn report_json(report: &ReconstructionReport<f64>) -> Result<String, CliError> {
    report
        .to_json_pretty()
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))
}

fn records_jsonl(records: &[MeasurementRecord<f64>]) -> Result<String, CliError> {
    let mut out = String::new();
    for record in records {
        let line = record
            .to_json_line()
            .map_err(|e| CliError::Io(format!("cannot serialize record: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

// One row per estimated quantity: matrix entries by block, then
// transmissivities (listed with q = p).
fn entry_error_csv(report: &ReconstructionReport<f64>, device: &Device<f64>) -> String {
    let mut csv = String::from("block,p,q,est_re,est_im,se_re,se_im,abs_err\n");
    let n = report.n;
    let zeros = mztomo::Matrix64::zeros(n, n);
    let blocks: Vec<(
        &str,
        &mztomo::Matrix64,
        &mztomo::Matrix64,
        &mztomo::Matrix64,
    )> = match (&report.v_hat, &report.v_std_err, device.v()) {
        (Some(v_hat), Some(v_se), Some(v)) => vec![
            ("u", &report.u_hat, &report.u_std_err, device.u()),
            ("v", v_hat, v_se, v),
        ],
        (Some(v_hat), Some(v_se), None) => vec![
            ("u", &report.u_hat, &report.u_std_err, device.u()),
            ("v", v_hat, v_se, &zeros),
        ],
        _ => vec![("u", &report.u_hat, &report.u_std_err, device.u())],
    };
    for (name, est, se, truth) in blocks {
        for p in 0..n {
            for q in 0..n {
                let e = est[(p, q)];
                let s = se[(p, q)];
                let err = (e - truth[(p, q)]).norm();
                writeln!(
                    csv,
                    "{name},{},{},{},{},{},{},{err}",
                    p + 1,
                    q + 1,
                    e.re,
                    e.im,
                    s.re,
                    s.im
                )
                .unwrap();
            }
        }
    }
    if let (Some(eta_hat), Some(eta_se)) = (&report.eta_hat, &report.eta_std_err) {
        let truth = device
            .eta()
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![1.0; n]);
        for p in 0..n {
            let err = (eta_hat[p] - truth[p]).abs();
            writeln!(
                csv,
                "eta,{0},{0},{1},0,{2},0,{err}",
                p + 1,
                eta_hat[p],
                eta_se[p]
            )
            .unwrap();
        }
    }
    csv
}
