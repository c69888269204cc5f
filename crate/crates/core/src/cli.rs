//! Experiment driver behind the `seli` binary.
//!
//! Every subcommand resolves its configuration as defaults, then the
//! `--config` file, then `--set key=value` overrides, then `--seed`. The
//! resolved configuration is written to `manifest.toml` in the output
//! directory and can be passed back through `--config` to reproduce a run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::cs_svm::{certify, random_separable, verify_binary_lemma, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::{average_stats, predict_grams, LossKind, GEOMETRY_COLUMNS};
use crate::gmm::{default_betas, rldt_sweep, rows_to_csv, sweep_gamma, GmmConfig, GAMMA_GRID};
use crate::sel::{verify_grid, GridSpec, StepSetting};
use crate::ufm::{train, trained_stats, TrainConfig, TrainError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Parser)]
#[command(name = "seli", version, about = "Implicit geometry of CDT and LDT losses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML file with flat configuration keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form SEL SVD against a numerical SVD over a grid.
    SvdVerify(CommonArgs),
    /// Predicted norm ratios, cosines and alignments over a gamma grid.
    Geometry(CommonArgs),
    /// Train the unconstrained features model.
    Train(CommonArgs),
    /// Balanced error of each geometry under the Gaussian mixture model.
    Gmm(CommonArgs),
    /// Post-hoc rescaling of LDT majority classifiers.
    Rldt(CommonArgs),
    /// Two-class max-margin relations on random separable data.
    BinaryLemma(CommonArgs),
    /// Optimality certificates of the constructed CS-SVM solutions.
    Certify(CommonArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SvdVerify(_) => "svd-verify",
            Command::Geometry(_) => "geometry",
            Command::Train(_) => "train",
            Command::Gmm(_) => "gmm",
            Command::Rldt(_) => "rldt",
            Command::BinaryLemma(_) => "binary-lemma",
            Command::Certify(_) => "certify",
        }
    }

    fn args(&self) -> &CommonArgs {
        match self {
            Command::SvdVerify(a)
            | Command::Geometry(a)
            | Command::Train(a)
            | Command::Gmm(a)
            | Command::Rldt(a)
            | Command::BinaryLemma(a)
            | Command::Certify(a) => a,
        }
    }
}

/// Parses `args` (including the program name), runs and returns the exit code.
pub fn run_from<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: &Cli) -> i32 {
    match dispatch(&cli.command) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_INVARIANT,
        Err(e) => {
            eprintln!("seli {}: {e}", cli.command.name());
            match e {
                Error::Config(_) => EXIT_CONFIG,
                Error::Divergence { .. } => EXIT_DIVERGENCE,
                _ => EXIT_INVARIANT,
            }
        }
    }
}

/// `Ok(false)` means the run finished but an invariant check failed.
fn dispatch(cmd: &Command) -> Result<bool> {
    let args = cmd.args();
    let name = cmd.name();
    match cmd {
        Command::SvdVerify(_) => exec(args, name, svd_verify),
        Command::Geometry(_) => exec(args, name, geometry),
        Command::Train(_) => exec(args, name, train_cmd),
        Command::Gmm(_) => exec(args, name, gmm),
        Command::Rldt(_) => exec(args, name, rldt),
        Command::BinaryLemma(_) => exec(args, name, binary_lemma),
        Command::Certify(_) => exec(args, name, certify_cmd),
    }
}

/// Resolves the configuration, records it in the manifest, then runs.
fn exec<C: Config>(args: &CommonArgs, name: &str, body: fn(&C, &Path) -> Outcome) -> Outcome {
    let config: C = resolve(args)?;
    write_manifest(&args.out, name, as_table(&config)?)?;
    body(&config, &args.out)
}

/// A subcommand configuration: serializable, with defaults for every key.
pub trait Config: Serialize + DeserializeOwned + Default {}
impl<C: Serialize + DeserializeOwned + Default> Config for C {}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Defaults < config file < `--set` < `--seed`.
pub fn resolve<C: Config>(args: &CommonArgs) -> Result<C> {
    let cfg_err = |e: &dyn std::fmt::Display| Error::Config(e.to_string());
    let mut table = toml::Table::try_from(C::default()).map_err(|e| cfg_err(&e))?;
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut file: toml::Table = text.parse().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        file.remove("manifest");
        table.extend(file);
    }
    for kv in &args.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        table.insert(key.trim().to_string(), parse_value(value.trim()));
    }
    if let Some(seed) = args.seed {
        let seed = i64::try_from(seed).map_err(|_| Error::Config(format!("seed {seed} exceeds i64")))?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    }
    toml::Value::Table(table).try_into().map_err(|e| cfg_err(&e))
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

fn write_manifest(dir: &Path, command: &str, mut resolved: toml::Table) -> Result<()> {
    let mut meta = toml::Table::new();
    meta.insert("command".into(), command.into());
    meta.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    resolved.insert("manifest".into(), toml::Value::Table(meta));
    let text = toml::to_string(&resolved).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(dir, MANIFEST, text.as_bytes())
}

fn as_table<C: Serialize>(c: &C) -> Result<toml::Table> {
    toml::Table::try_from(c).map_err(|e| Error::Config(e.to_string()))
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn step_setting(k: usize, rho: f64, r: u64) -> Result<StepSetting<f64>> {
    StepSetting::new(k, rho, Ratio::from_integer(r))
}

/// Grid values with float noise below 1e-12 removed.
fn linspace(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::Config("need at least one grid point".into())),
        1 => Ok(vec![lo]),
        _ => Ok((0..points)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
                (x * 1e12).round() / 1e12
            })
            .collect()),
    }
}

type Outcome = Result<bool>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvdVerifyConfig {
    pub ks: Vec<usize>,
    pub rhos: Vec<f64>,
    pub rs: Vec<u64>,
    pub gammas: Vec<f64>,
    pub tol: f64,
    /// Test hook: relative perturbation of the leading closed-form singular value.
    pub fault: f64,
    pub seed: u64,
}

impl Default for SvdVerifyConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self { ks: g.ks, rhos: g.rhos, rs: g.rs, gammas: g.gammas, tol: 1e-10, fault: 0.0, seed: 0 }
    }
}

fn svd_verify(c: &SvdVerifyConfig, out: &Path) -> Outcome {
    let grid = GridSpec { ks: c.ks.clone(), rhos: c.rhos.clone(), rs: c.rs.clone(), gammas: c.gammas.clone() };
    let report = verify_grid::<f64>(&grid, c.tol, c.fault)?;
    write_atomic(out, "svd_verify.json", &json(&report))?;
    println!(
        "svd-verify: {} cases, max sv dev {:.3e}, max recon {:.3e}, min sign {:.3e}: {}",
        report.cases,
        report.max_singular_value_dev,
        report.max_reconstruction_rel,
        report.min_sign_product,
        if report.passed { "ok" } else { "FAILED" }
    );
    Ok(report.passed)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub k: usize,
    pub rho: f64,
    pub r: u64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub points: usize,
    pub losses: Vec<LossKind>,
    pub seed: u64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            k: 10,
            rho: 0.5,
            r: 10,
            gamma_min: -1.5,
            gamma_max: 1.5,
            points: 61,
            losses: vec![LossKind::Cdt, LossKind::Ldt],
            seed: 0,
        }
    }
}

pub fn geometry_csv(c: &GeometryConfig) -> Result<(String, bool)> {
    let base = step_setting(c.k, c.rho, c.r)?;
    let mut out = GEOMETRY_COLUMNS.join(",");
    out.push('\n');
    let mut ok = true;
    for &loss in &c.losses {
        for g in linspace(c.gamma_min, c.gamma_max, c.points)? {
            let s = base.clone().with_gamma(g);
            let stats = average_stats(&predict_grams(loss, &s)?, &s)?;
            ok &= stats.check().is_ok();
            out.push_str(&stats.csv_record(Some(g), s.r(), s.k(), s.rho(), loss).join(","));
            out.push('\n');
        }
    }
    Ok((out, ok))
}

fn geometry(c: &GeometryConfig, out: &Path) -> Outcome {
    let (csv, ok) = geometry_csv(c)?;
    write_atomic(out, "geometry.csv", csv.as_bytes())?;
    println!("geometry: {} rows", csv.lines().count() - 1);
    Ok(ok)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCmdConfig {
    pub k: usize,
    pub rho: f64,
    pub r: u64,
    pub n_min: u64,
    pub d: usize,
    pub gamma: f64,
    pub loss: LossKind,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub init_std: f64,
    pub normalize_delta: bool,
    pub log_every: usize,
    pub seed: u64,
}

impl Default for TrainCmdConfig {
    fn default() -> Self {
        let d = TrainConfig::<f64>::standard(LossKind::Cdt, 0.5).expect("valid defaults");
        Self {
            k: d.setting.k(),
            rho: d.setting.rho(),
            r: 10,
            n_min: d.setting.n_min(),
            d: d.d,
            gamma: 0.5,
            loss: d.loss,
            lr: d.lr,
            epochs: d.epochs,
            batch_size: d.batch_size,
            weight_decay: d.weight_decay,
            init_std: d.init_std,
            normalize_delta: d.normalize_delta,
            log_every: d.log_every,
            seed: d.seed,
        }
    }
}

impl TrainCmdConfig {
    pub fn to_train_config(&self) -> Result<TrainConfig<f64>> {
        let setting = step_setting(self.k, self.rho, self.r)?.with_n_min(self.n_min)?.with_gamma(self.gamma);
        let c = TrainConfig {
            d: self.d,
            setting,
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            weight_decay: self.weight_decay,
            seed: self.seed,
            loss: self.loss,
            normalize_delta: self.normalize_delta,
            init_std: self.init_std,
            log_every: self.log_every,
        };
        c.validate()?;
        Ok(c)
    }
}

fn train_cmd(c: &TrainCmdConfig, out: &Path) -> Outcome {
    let config = c.to_train_config()?;
    let (params, trace) = match train(&config) {
        Ok(r) => r,
        Err(TrainError::Diverged { epoch, trace, .. }) => {
            write_atomic(out, "trace.csv", trace.to_csv().as_bytes())?;
            return Err(Error::Divergence { epoch, reason: "non-finite parameters".into() });
        }
        Err(TrainError::Invalid(e)) => return Err(e),
    };
    write_atomic(out, "trace.csv", trace.to_csv().as_bytes())?;
    let s = &config.setting;
    let theory = average_stats(&predict_grams(c.loss, s)?, s)?;
    let learned = trained_stats(&params, &config)?;
    let mut csv = GEOMETRY_COLUMNS.join(",");
    csv.push_str(",source\n");
    for (stats, source) in [(theory, "theory"), (learned, "trained")] {
        csv.push_str(&stats.csv_record(Some(c.gamma), s.r(), s.k(), s.rho(), c.loss).join(","));
        csv.push(',');
        csv.push_str(source);
        csv.push('\n');
    }
    write_atomic(out, "final_stats.csv", csv.as_bytes())?;
    let last = trace.last().expect("at least one logged row");
    println!(
        "train: epoch {} loss {:.3e} error {} gramdist W {:.4} M {:.4} nc {:.3e}",
        last.epoch, last.loss, last.train_error, last.gramdist_w, last.gramdist_m, last.nc
    );
    Ok(last.loss.is_finite())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmCmdConfig {
    pub k: usize,
    pub rho: f64,
    pub r: u64,
    pub gammas: Vec<f64>,
    pub losses: Vec<LossKind>,
    pub samples: usize,
    pub alpha_var: f64,
    pub snr: f64,
    pub seed: u64,
}

impl Default for GmmCmdConfig {
    fn default() -> Self {
        let g = GmmConfig::<f64>::default();
        Self {
            k: 10,
            rho: 0.5,
            r: 10,
            gammas: GAMMA_GRID.to_vec(),
            losses: vec![LossKind::Cdt, LossKind::Ldt],
            samples: g.samples,
            alpha_var: g.alpha_var,
            snr: g.snr,
            seed: g.seed,
        }
    }
}

fn gmm_config(samples: usize, alpha_var: f64, snr: f64, seed: u64) -> Result<GmmConfig<f64>> {
    let c = GmmConfig { samples, seed, alpha_var, snr };
    c.validate()?;
    Ok(c)
}

fn gmm(c: &GmmCmdConfig, out: &Path) -> Outcome {
    let template = step_setting(c.k, c.rho, c.r)?;
    let config = gmm_config(c.samples, c.alpha_var, c.snr, c.seed)?;
    let mut rows = Vec::new();
    for &loss in &c.losses {
        rows.extend(sweep_gamma(loss, &c.gammas, &template, &config)?);
    }
    write_atomic(out, "gmm.csv", rows_to_csv(&rows).as_bytes())?;
    for &loss in &c.losses {
        if let Some(best) = rows
            .iter()
            .filter(|r| r.loss == loss)
            .min_by(|a, b| a.err_balanced.total_cmp(&b.err_balanced))
        {
            println!("gmm: {loss} lowest balanced error {:.4} at gamma {}", best.err_balanced, best.gamma);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RldtCmdConfig {
    pub k: usize,
    pub rho: f64,
    pub r: u64,
    pub gamma: f64,
    pub betas: Vec<f64>,
    pub samples: usize,
    pub alpha_var: f64,
    pub snr: f64,
    pub seed: u64,
}

impl Default for RldtCmdConfig {
    fn default() -> Self {
        let g = GmmCmdConfig::default();
        Self {
            k: g.k,
            rho: g.rho,
            r: g.r,
            gamma: 0.5,
            betas: default_betas(),
            samples: g.samples,
            alpha_var: g.alpha_var,
            snr: g.snr,
            seed: g.seed,
        }
    }
}

fn rldt(c: &RldtCmdConfig, out: &Path) -> Outcome {
    let setting = step_setting(c.k, c.rho, c.r)?.with_gamma(c.gamma);
    let config = gmm_config(c.samples, c.alpha_var, c.snr, c.seed)?;
    let rows = rldt_sweep(&setting, &c.betas, &config)?;
    write_atomic(out, "rldt.csv", rows_to_csv(&rows).as_bytes())?;
    println!("rldt: {} beta rows", rows.len());
    Ok(true)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BinaryLemmaConfig {
    pub instances: usize,
    pub points: usize,
    pub dim: usize,
    /// `delta_1 / delta_2` values; `delta_2 = 1`.
    pub ratios: Vec<f64>,
    pub cos_tol: f64,
    pub centering_tol: f64,
    pub seed: u64,
}

impl Default for BinaryLemmaConfig {
    fn default() -> Self {
        Self {
            instances: 25,
            points: 20,
            dim: 5,
            ratios: vec![1.0 / 3.0, 1.0, 3.0],
            cos_tol: 1e-6,
            centering_tol: 1e-6,
            seed: 0,
        }
    }
}

fn binary_lemma(c: &BinaryLemmaConfig, out: &Path) -> Outcome {
    if c.points < 2 || c.dim == 0 || c.instances == 0 {
        return Err(Error::Config("need instances >= 1, points >= 2 and dim >= 1".into()));
    }
    let mut csv = String::from("instance,delta_ratio,cos_ldt_vs,cos_cdt_ce,ldt_centering,cdt_centering,passed\n");
    let mut ok = true;
    for i in 0..c.instances {
        let (x, y) = random_separable(c.seed.wrapping_add(i as u64), c.points, c.dim);
        for &ratio in &c.ratios {
            let rep = verify_binary_lemma(&x, &y, (ratio, 1.0), SolverOptions::default())?;
            let pass = rep.passed(c.cos_tol, c.centering_tol);
            ok &= pass;
            csv.push_str(&format!(
                "{i},{ratio},{},{},{},{},{pass}\n",
                rep.cos_ldt_vs, rep.cos_cdt_ce, rep.ldt_centering, rep.cdt_centering
            ));
        }
    }
    write_atomic(out, "binary_lemma.csv", csv.as_bytes())?;
    println!("binary-lemma: {}", if ok { "ok" } else { "FAILED" });
    Ok(ok)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub ks: Vec<usize>,
    pub rhos: Vec<f64>,
    pub rs: Vec<u64>,
    pub gammas: Vec<f64>,
    pub n_mins: Vec<u64>,
    pub losses: Vec<LossKind>,
    /// Extra embedding dimensions beyond `k - 1`.
    pub extra_dims: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            ks: g.ks,
            rhos: g.rhos,
            rs: g.rs,
            gammas: g.gammas,
            n_mins: vec![1, 3],
            losses: vec![LossKind::Cdt],
            extra_dims: 0,
            tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Serialize)]
struct CertifySummary {
    cases: usize,
    max_margin_deviation: f64,
    max_objective_gap: f64,
    passed: bool,
    failures: Vec<crate::cs_svm::Certificate<f64>>,
}

fn certify_cmd(c: &CertifyConfig, out: &Path) -> Outcome {
    let grid = GridSpec { ks: c.ks.clone(), rhos: c.rhos.clone(), rs: c.rs.clone(), gammas: c.gammas.clone() };
    let settings = grid.settings::<f64>();
    if settings.is_empty() || c.n_mins.is_empty() || c.losses.is_empty() {
        return Err(Error::Config("the certification grid is empty".into()));
    }
    let mut sum = CertifySummary { cases: 0, max_margin_deviation: 0.0, max_objective_gap: 0.0, passed: true, failures: vec![] };
    for s in &settings {
        for &n_min in &c.n_mins {
            let s = s.clone().with_n_min(n_min)?;
            for &loss in &c.losses {
                let cert = certify(&s, loss, s.k() - 1 + c.extra_dims, c.seed, c.tol)?;
                sum.cases += 1;
                let dev = match cert.nuclear_norm {
                    Some(_) => cert.margins.max_deviation_from_one(),
                    None => (cert.margins.min - 1.0).abs(),
                };
                sum.max_margin_deviation = sum.max_margin_deviation.max(dev);
                if let Some(nuc) = cert.nuclear_norm {
                    sum.max_objective_gap = sum.max_objective_gap.max((cert.objective - nuc).abs());
                }
                if !cert.passed {
                    sum.passed = false;
                    sum.failures.push(cert);
                }
            }
        }
    }
    write_atomic(out, "certify.json", &json(&sum))?;
    println!(
        "certify: {} cases, max margin dev {:.3e}, max objective gap {:.3e}: {}",
        sum.cases,
        sum.max_margin_deviation,
        sum.max_objective_gap,
        if sum.passed { "ok" } else { "FAILED" }
    );
    Ok(sum.passed)
}
