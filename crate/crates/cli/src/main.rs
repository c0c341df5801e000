//! `halfspace-ptas`: experiments for agnostic halfspace learning under the
//! uniform distribution on the sphere.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use halfspace_core::density::Density;
use halfspace_core::evaluation::verify::{verify_suite, VerifyConfig};
use halfspace_core::evaluation::{exact_halfspace_error, label_oracle, mc_error, ErrorEstimate};
use halfspace_core::geometry::{SphereMarginal, StripDensity, StripDensityParams};
use halfspace_core::localization::abl_learn;
use halfspace_core::polynomials::{
    booster_poly, sign_approx_shorttail, sign_approx_truncated, ShorttailOptions,
};
use halfspace_core::ptas::{noise_tolerance_to_approx_ratio, ptas_learn, Chosen, PtasOutcome};
use halfspace_core::regression::{kkms_learn, LabeledSample};
use halfspace_core::Error;
use serde::Serialize;
use serde_json::{json, Map, Value};

use config::{ConfigError, ExperimentConfig, SignpolyKind, VerifyProfile};

const THREADS_ENV: &str = "HALFSPACE_PTAS_THREADS";

#[derive(Parser)]
#[command(name = "halfspace-ptas", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

/// Overrides for keys of the flat config.
#[derive(Args, Default)]
struct Flags {
    /// Flat JSON config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file. Written to `<out>.partial` first and renamed when done.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    d: Option<usize>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Localization followed by polynomial regression in the strip.
    Ptas,
    /// Polynomial ℓ1 regression with a threshold, on its own.
    Kkms {
        #[arg(long)]
        degree: Option<usize>,
        /// Labeled CSV (`x1..xd,y`) to train on.
        #[arg(long)]
        train: Option<PathBuf>,
    },
    /// Margin-based localization on its own.
    Abl,
    /// Run the bound verification suite and write the pass/fail table.
    Verify {
        /// Reduced matrix that finishes in seconds.
        #[arg(long)]
        quick: bool,
    },
    /// Tabulate the projected density as a two-column CSV.
    Density {
        #[arg(long)]
        points: Option<usize>,
    },
    /// Build and certify a sign approximation.
    Signpoly {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long)]
        a: Option<f64>,
    },
    /// Sweep the PTAS constants on synthetic instances.
    Calibrate,
    /// Write a synthetic labeled sample as CSV.
    Sample {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Print the effective config after merging file and flags.
    Config,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum KindArg {
    Booster,
    Truncated,
    Sphere,
    Strip,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{failed} predicate(s) failed")]
    Predicate { failed: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(Error::InvalidArgument(_)) => 2,
            _ => 1,
        }
    }
}

fn overrides(flags: &Flags, command: &Command) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            m.insert(k.into(), v);
        }
    };
    put("seed", flags.seed.map(Into::into));
    put("out", flags.out.as_ref().map(|p| p.to_string_lossy().into()));
    put("d", flags.d.map(Into::into));
    put("eta", flags.eta.map(Into::into));
    put("mu", flags.mu.map(Into::into));
    put("eps", flags.eps.map(Into::into));
    put("tau", flags.tau.map(Into::into));
    put("gamma", flags.gamma.map(Into::into));
    put("theta", flags.theta.map(Into::into));
    match command {
        Command::Kkms { degree, train } => {
            put("degree", degree.map(Into::into));
            put("train", train.as_ref().map(|p| p.to_string_lossy().into()));
        }
        Command::Verify { quick: true } => put("verify_profile", Some("quick".into())),
        Command::Density { points } => put("density_points", points.map(Into::into)),
        Command::Signpoly { kind, a } => {
            let kind = kind.map(|k| match k {
                KindArg::Booster => "booster",
                KindArg::Truncated => "truncated",
                KindArg::Sphere => "sphere",
                KindArg::Strip => "strip",
            });
            put("signpoly_kind", kind.map(Into::into));
            put("a", a.map(Into::into));
        }
        Command::Sample { n } => put("train_samples", n.map(Into::into)),
        _ => {}
    }
    m
}

/// Writes through `<path>.partial` so an interrupted run never leaves a
/// file that looks complete.
fn write_output(out: Option<&Path>, write: impl FnOnce(&Path) -> Result<(), CliError>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut partial = path.as_os_str().to_owned();
            partial.push(".partial");
            let partial = PathBuf::from(partial);
            write(&partial)?;
            std::fs::rename(&partial, path)?;
            Ok(())
        }
        None => {
            let tmp = tempfile::NamedTempFile::new()?;
            write(tmp.path())?;
            let bytes = std::fs::read(tmp.path())?;
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

fn write_json(out: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    write_output(out, |p| {
        let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
        text.push('\n');
        std::fs::write(p, text)?;
        Ok(())
    })
}

fn test_errors(cfg: &ExperimentConfig, outcome: &PtasOutcome) -> Result<(ErrorEstimate, ErrorEstimate), CliError> {
    let model = cfg.noise_model()?;
    let seed = cfg.test_seed();
    Ok((
        mc_error(outcome, &model, cfg.test_samples, seed)?,
        mc_error(&outcome.combined.halfspace, &model, cfg.test_samples, seed)?,
    ))
}

fn run_ptas(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let model = cfg.noise_model()?;
    let opt = exact_halfspace_error(&model, &model.target).ok();
    let pcfg = cfg.ptas();
    if cfg.approx_ratio {
        let mut oracle = label_oracle(model.clone(), cfg.oracle_seed());
        let validation_n = cfg.validation_samples.unwrap_or((10.0 / (cfg.eps * cfg.eps)).ceil() as usize);
        let validation = oracle.labeled(validation_n)?;
        let mut runs = Vec::new();
        let wrapped = noise_tolerance_to_approx_ratio(
            |eta| {
                let r = ptas_learn(&mut oracle, eta, cfg.mu, &pcfg)?;
                runs.push(r.report.clone());
                Ok(r)
            },
            &validation,
            cfg.eps,
        )?;
        let (test, test_halfspace) = test_errors(cfg, &wrapped.best)?;
        return write_json(
            cfg.out.as_deref(),
            &json!({
                "config": cfg,
                "opt": opt,
                "best_eta": wrapped.best_eta,
                "candidates": wrapped.candidates,
                "labels_used": oracle.labels_revealed(),
                "draws_used": oracle.draws(),
                "test_error": test,
                "test_error_halfspace": test_halfspace,
                "runs": runs,
            }),
        );
    }
    let mut oracle = label_oracle(model, cfg.oracle_seed());
    let outcome = ptas_learn(&mut oracle, cfg.eta, cfg.mu, &pcfg)?;
    let (test, test_halfspace) = test_errors(cfg, &outcome)?;
    let r = &outcome.report;
    write_json(
        cfg.out.as_deref(),
        &json!({
            "config": cfg,
            "opt": opt,
            "params": r.params,
            "labels_used": r.labels_used,
            "draws_used": r.draws_used,
            "validation_error_halfspace": r.validation_error_halfspace,
            "validation_error_combined": r.validation_error_combined,
            "chosen": r.chosen,
            "test_error": test,
            "test_error_halfspace": test_halfspace,
            "report": r,
        }),
    )
}

fn run_kkms(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let (sample, model) = match &cfg.train {
        Some(path) => (LabeledSample::read_csv(path)?, None),
        None => {
            let model = cfg.noise_model()?;
            let sample = label_oracle(model.clone(), cfg.oracle_seed()).labeled(cfg.train_samples)?;
            (sample, Some(model))
        }
    };
    let t = Instant::now();
    let clf = kkms_learn(&sample, cfg.degree)?;
    let seconds = t.elapsed().as_secs_f64();
    let train_error = clf.empirical_error(&sample);
    let test = match &model {
        Some(m) => Some(mc_error(&clf, m, cfg.test_samples, cfg.test_seed())?),
        None => None,
    };
    write_json(
        cfg.out.as_deref(),
        &json!({
            "config": cfg,
            "n": sample.len(),
            "degree": cfg.degree,
            "train_error": train_error,
            "test_error": test,
            "fit_seconds": seconds,
            "classifier": clf,
        }),
    )
}

fn run_abl(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let model = cfg.noise_model()?;
    let mut oracle = label_oracle(model.clone(), cfg.oracle_seed());
    let outcome = abl_learn(&mut oracle, cfg.eta, &cfg.localization())?;
    let test = mc_error(&outcome.w, &model, cfg.test_samples, cfg.test_seed())?;
    write_json(
        cfg.out.as_deref(),
        &json!({
            "config": cfg,
            "exact_error": exact_halfspace_error(&model, &outcome.w).ok(),
            "test_error": test,
            "outcome": outcome,
        }),
    )
}

fn run_verify(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let mut vcfg = match (&cfg.verify_config, cfg.verify_profile) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(e.into()))?
        }
        (None, VerifyProfile::Full) => VerifyConfig::default(),
        (None, VerifyProfile::Quick) => VerifyConfig::quick(),
    };
    vcfg.seed = cfg.seed;
    let report = verify_suite(&vcfg);
    let csv = cfg
        .out
        .as_deref()
        .is_some_and(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")));
    if csv {
        write_output(cfg.out.as_deref(), |p| Ok(report.write_csv(p)?))?;
    } else {
        write_json(cfg.out.as_deref(), &report)?;
    }
    eprintln!(
        "verify: {} passed, {} failed, {} precondition",
        report.passed, report.failed, report.preconditions
    );
    if report.all_passed() {
        Ok(())
    } else {
        Err(CliError::Predicate { failed: report.failed })
    }
}

/// `γ ≥ 1` means no strip, i.e. the plain sphere marginal.
fn run_density(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let dens: Box<dyn Density> = if cfg.gamma >= 1.0 {
        Box::new(SphereMarginal::new(cfg.d, 1.0)?)
    } else {
        Box::new(StripDensity::new(StripDensityParams {
            dimension: cfg.d,
            half_width: cfg.gamma,
            angle: cfg.theta,
        })?)
    };
    let n = cfg.density_points.max(2);
    let (lo, hi) = dens.support();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let z = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let v = dens.pdf(z)?;
        rows.push((z, if v.is_finite() { v } else { f64::NAN }));
    }
    write_output(cfg.out.as_deref(), |p| {
        let mut w = csv::Writer::from_path(p).map_err(Error::from)?;
        w.write_record(["z", "density"]).map_err(Error::from)?;
        for (z, v) in rows {
            w.write_record([format!("{z:?}"), format!("{v:?}")]).map_err(Error::from)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn run_signpoly(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let opts = ShorttailOptions::default();
    let certified = match cfg.signpoly_kind {
        SignpolyKind::Booster => booster_poly(cfg.tau),
        SignpolyKind::Truncated => sign_approx_truncated(cfg.a, cfg.gamma, cfg.tau),
        SignpolyKind::Sphere => {
            let sigma = 1.0 / (cfg.d as f64).sqrt();
            SphereMarginal::new(cfg.d, 1.0)
                .and_then(|m| sign_approx_shorttail(sigma, sigma, cfg.tau, &m, opts))
        }
        SignpolyKind::Strip => {
            let sigma = cfg.theta.sin() / (cfg.d as f64).sqrt();
            StripDensity::new(StripDensityParams {
                dimension: cfg.d,
                half_width: cfg.gamma,
                angle: cfg.theta,
            })
            .and_then(|s| sign_approx_shorttail(sigma, cfg.gamma, cfg.tau, &s, opts))
        }
    };
    let certified = match certified {
        Err(e @ (Error::ConstructionFailure { .. } | Error::PrecisionFailure { .. })) => {
            eprintln!("error: {e}");
            return Err(CliError::Predicate { failed: 1 });
        }
        other => other?,
    };
    write_json(
        cfg.out.as_deref(),
        &json!({
            "kind": cfg.signpoly_kind,
            "a": cfg.a,
            "gamma": cfg.gamma,
            "tau": cfg.tau,
            "polynomial": certified.polynomial,
            "certificate": certified.certificate,
        }),
    )
}

fn run_calibrate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for &c_gamma in &cfg.calibrate_c_gamma {
        for &c_r in &cfg.calibrate_c_r {
            for s in 0..cfg.calibrate_seeds {
                let run = ExperimentConfig {
                    seed: cfg.seed + s,
                    c_gamma,
                    c_r,
                    ..cfg.clone()
                };
                let t = Instant::now();
                let model = run.noise_model()?;
                let mut oracle = label_oracle(model, run.oracle_seed());
                let outcome = ptas_learn(&mut oracle, run.eta, run.mu, &run.ptas())?;
                let (test, halfspace) = test_errors(&run, &outcome)?;
                let r = &outcome.report;
                rows.push([
                    c_gamma.to_string(),
                    c_r.to_string(),
                    run.seed.to_string(),
                    r.params.degree.to_string(),
                    r.params.strip_half_width.to_string(),
                    test.mean.to_string(),
                    halfspace.mean.to_string(),
                    r.labels_used.to_string(),
                    match r.chosen {
                        Chosen::Halfspace => "halfspace".into(),
                        Chosen::Combined => "combined".into(),
                    },
                    format!("{:.3}", t.elapsed().as_secs_f64()),
                ]);
            }
        }
    }
    write_output(cfg.out.as_deref(), |p| {
        let mut w = csv::Writer::from_path(p).map_err(Error::from)?;
        w.write_record([
            "c_gamma",
            "c_r",
            "seed",
            "degree",
            "strip_half_width",
            "test_error",
            "halfspace_error",
            "labels_used",
            "chosen",
            "seconds",
        ])
        .map_err(Error::from)?;
        for r in rows {
            w.write_record(r).map_err(Error::from)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn run_sample(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let sample = label_oracle(cfg.noise_model()?, cfg.oracle_seed()).labeled(cfg.train_samples)?;
    write_output(cfg.out.as_deref(), |p| Ok(sample.write_csv(p)?))
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(cli.flags.config.as_deref(), overrides(&cli.flags, &cli.command))?;
    match cli.command {
        Command::Ptas => run_ptas(&cfg),
        Command::Kkms { .. } => run_kkms(&cfg),
        Command::Abl => run_abl(&cfg),
        Command::Verify { .. } => run_verify(&cfg),
        Command::Density { .. } => run_density(&cfg),
        Command::Signpoly { .. } => run_signpoly(&cfg),
        Command::Calibrate => run_calibrate(&cfg),
        Command::Sample { .. } => run_sample(&cfg),
        Command::Config => write_json(cfg.out.as_deref(), &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
