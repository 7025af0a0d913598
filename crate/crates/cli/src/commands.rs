use crate::output::{is_csv, to_pretty, write_atomic, MeasureEnvelope, Meta, ReportEnvelope, ResultsEnvelope};
use crate::Globals;
use anyhow::{bail, Context};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use weightlab::cauchy::{accretivity_bounds, b_testing_ratio, discrete_check, flat_pv_ratio, log_square_integral, CurveSpec, DiscreteCheck};
use weightlab::constants::{full_report, ConstantsParams, CubeFamily, FamilySpec, GridSelection};
use weightlab::experiments::{
    corpus, exp_bad_grid_prob, exp_bad_projection, exp_cond_prob_bad, exp_follow_est, exp_good_lambda, exp_surgery_hand,
    good_lambda_suite, lattice_window, wall_measure, Baseline, BadGridConfig, BadProjectionConfig, CondProbConfig,
    CorpusSpec, ExperimentResult, GoodLambdaConfig, GridMode, SurgeryConfig, TranslationMode,
};
use weightlab::geometry::{Cube, GoodnessParams};
use weightlab::kernels::KernelSpec;
use weightlab::measures::{generate, AtomicMeasure, Generator};
use weightlab::Exec;

#[derive(Debug, Serialize)]
struct Echo<'a, A: Serialize, R: Serialize> {
    args: &'a A,
    resolved: &'a R,
}

fn echo<A: Serialize, R: Serialize>(args: &A, resolved: &R) -> serde_json::Value {
    serde_json::to_value(Echo { args, resolved }).unwrap_or(serde_json::Value::Null)
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_measure(path: &Path) -> anyhow::Result<AtomicMeasure> {
    let text = read(path)?;
    AtomicMeasure::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn lambdas_or(given: &[f64], default: Vec<f64>) -> Vec<f64> {
    if given.is_empty() {
        default
    } else {
        given.to_vec()
    }
}

fn grid_mode(samples: u64, seed: u64) -> GridMode {
    if samples == 0 {
        GridMode::Exhaustive
    } else {
        GridMode::Sample { count: samples, seed }
    }
}

/// Comma separated table with a `name` column; `sep` is `,` or a tab.
pub fn merged_table(results: &[ExperimentResult], sep: char) -> String {
    let mut s = ["name", "lambda_or_r", "estimate", "stderr", "slope", "ratio"].join(&sep.to_string());
    s.push('\n');
    for r in results {
        let slope = r.slope.map(|v| v.to_string()).unwrap_or_default();
        for p in &r.points {
            let ratio = p.ratio.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{}{sep}{}{sep}{}{sep}{}{sep}{}{sep}{}", r.name, p.x, p.estimate, p.stderr, slope, ratio);
        }
    }
    s
}

/// Writes the JSON envelope, or the sweep CSV when the path ends in `.csv`,
/// plus an optional extra CSV. Returns whether every check passed.
fn emit_results(meta: Meta, results: Vec<ExperimentResult>, out: Option<&Path>, csv: Option<&Path>) -> anyhow::Result<bool> {
    let passed = results.iter().all(|r| r.passed);
    let table = if results.len() == 1 {
        results[0].to_csv()
    } else {
        merged_table(&results, ',')
    };
    if let Some(p) = csv {
        write_atomic(p, &table)?;
    }
    let env = ResultsEnvelope { meta, results };
    match out {
        Some(p) if is_csv(p) => write_atomic(p, &table)?,
        Some(p) => write_atomic(p, &to_pretty(&env)?)?,
        None => print!("{}", to_pretty(&env)?),
    }
    Ok(passed)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GoodnessOpts {
    #[arg(long, default_value_t = 6)]
    pub r: u32,
    #[arg(long, default_value_t = 0.45)]
    pub eps: f64,
    /// Defaults to `r + 3`.
    #[arg(long)]
    pub rho: Option<u32>,
    /// Defaults to `r + 1`.
    #[arg(long)]
    pub tau: Option<u32>,
    #[arg(long)]
    pub strict_tau: bool,
}

impl GoodnessOpts {
    pub fn params(&self) -> GoodnessParams {
        let mut p = GoodnessParams::with_r(self.r, self.eps);
        if let Some(rho) = self.rho {
            p.rho = rho;
        }
        if let Some(tau) = self.tau {
            p.tau = tau;
        }
        p.strict_tau = self.strict_tau;
        p
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyOpts {
    /// Finest level.
    #[arg(long = "M", default_value_t = 10)]
    pub fine: i32,
    /// Coarsest level.
    #[arg(long = "N", default_value_t = 0, allow_hyphen_values = true)]
    pub top: i32,
    /// Number of sampled grids, the standard grid included.
    #[arg(long, default_value_t = 8)]
    pub grids: usize,
    #[arg(long, default_value_t = 0)]
    pub grid_seed: u64,
    /// Use every grid instead of a sample.
    #[arg(long, conflicts_with = "standard_only")]
    pub all_grids: bool,
    #[arg(long)]
    pub standard_only: bool,
}

impl FamilyOpts {
    pub fn spec(&self) -> FamilySpec {
        let grids = if self.all_grids {
            GridSelection::Enumerate
        } else if self.standard_only {
            GridSelection::Standard
        } else {
            GridSelection::Sample {
                count: self.grids,
                seed: self.grid_seed,
                include_standard: true,
            }
        };
        FamilySpec::new(self.fine, self.top, grids)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantsOpts {
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[command(flatten)]
    pub goodness: GoodnessOpts,
    /// Depth bound for the partitions in the energy supremum.
    #[arg(long, default_value_t = 3)]
    pub d_part: u32,
    #[arg(long, default_value_t = 2)]
    pub ell_max: u32,
}

impl ConstantsOpts {
    pub fn params(&self, lambda: Option<f64>) -> ConstantsParams {
        ConstantsParams {
            alpha: self.alpha,
            goodness: self.goodness.params(),
            d_part: self.d_part,
            ell_max: self.ell_max,
            lambda,
        }
    }
}

// ---- gen

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Lattice,
    RandomUniform,
    Cantor,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    /// Dimension.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Lattice level.
    #[arg(long, default_value_t = 4)]
    pub level: i32,
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// Random points lie in `[0, 2^-window_level)^n`.
    #[arg(long, default_value_t = 0)]
    pub window_level: i32,
    #[arg(long, default_value_t = 10)]
    pub snap_level: i32,
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    #[arg(long, default_value_t = 4)]
    pub depth: u32,
    #[arg(long, default_value_t = 0.5)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

impl GenArgs {
    fn generator(&self) -> anyhow::Result<Generator> {
        Ok(match self.kind {
            GenKind::Lattice => Generator::Lattice {
                dim: self.n,
                level: self.level,
            },
            GenKind::RandomUniform => Generator::RandomUniform {
                dim: self.n,
                count: self.count,
                window: Cube::new(&vec![0; self.n], self.window_level)?,
                snap_level: self.snap_level,
                spread: self.spread,
            },
            GenKind::Cantor => Generator::Cantor {
                dim: self.n,
                depth: self.depth,
                ratio: self.ratio,
            },
        })
    }
}

/// Parses a measure file and writes it back in canonical form, keeping the
/// provenance block.
#[cfg(test)]
pub fn canonical_measure_text(text: &str) -> anyhow::Result<String> {
    let env: MeasureEnvelope = serde_json::from_str(text)?;
    let mu = AtomicMeasure::from_file(&weightlab::measures::MeasureFile {
        dim: env.dim,
        atoms: env.atoms,
    })?;
    let file = mu.to_file();
    to_pretty(&MeasureEnvelope {
        dim: file.dim,
        atoms: file.atoms,
        meta: env.meta,
    })
}

pub fn gen(a: &GenArgs, g: Globals) -> anyhow::Result<bool> {
    let gen = a.generator()?;
    let mu = generate(&gen, a.seed)?;
    let file = mu.to_file();
    let env = MeasureEnvelope {
        dim: file.dim,
        atoms: file.atoms,
        meta: Some(Meta::new("gen", &echo(a, &gen), vec![a.seed], g.stamp)?),
    };
    let text = to_pretty(&env)?;
    match &a.output {
        Some(p) => write_atomic(p, &text)?,
        None => print!("{text}"),
    }
    Ok(true)
}

// ---- constants

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub sigma: PathBuf,
    #[arg(long)]
    pub omega: PathBuf,
    #[command(flatten)]
    pub constants: ConstantsOpts,
    #[command(flatten)]
    pub family: FamilyOpts,
    /// Adds the good-λ right-hand side and ratio at this λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

pub fn constants(a: &ConstantsArgs, g: Globals) -> anyhow::Result<bool> {
    let params = a.constants.params(a.lambda);
    params.validate()?;
    let sigma = load_measure(&a.sigma)?;
    let omega = load_measure(&a.omega)?;
    let family_spec = a.family.spec();
    let spec = KernelSpec::default_for(params.alpha, &sigma, &omega)?;
    let family = CubeFamily::build(&sigma, &omega, &family_spec)?;
    let mut report = full_report(&spec, &sigma, &omega, &family, &params, Exec::default())?;
    report.set_lambda(a.lambda);
    let resolved = serde_json::json!({ "params": params, "family": family_spec });
    let meta = Meta::new("constants", &echo(a, &resolved), vec![a.family.grid_seed], g.stamp)?;
    let text = to_pretty(&ReportEnvelope { meta, result: report })?;
    match &a.output {
        Some(p) => write_atomic(p, &text)?,
        None => print!("{text}"),
    }
    Ok(true)
}

// ---- goodlambda

#[derive(Debug, Clone, Args, Serialize)]
pub struct GoodLambdaArgs {
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub min_atoms: usize,
    #[arg(long, default_value_t = 32)]
    pub max_atoms: usize,
    #[arg(long, default_value_t = 10)]
    pub snap_level: i32,
    #[arg(long, default_value_t = 0.5)]
    pub spread: f64,
    /// Corpus seed.
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Defaults to 2^-2, ..., 2^-9.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    #[command(flatten)]
    pub constants: ConstantsOpts,
    #[command(flatten)]
    pub family: FamilyOpts,
    #[arg(long, default_value_t = 1.0)]
    pub bound: f64,
    #[arg(long, default_value_t = 0.05)]
    pub drift: f64,
    #[arg(long, default_value_t = 0.10)]
    pub baseline_tolerance: f64,
    /// Skip the rerun with twice as many grids.
    #[arg(long)]
    pub no_doubling: bool,
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub write_baseline: Option<PathBuf>,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

impl GoodLambdaArgs {
    pub fn config(&self) -> GoodLambdaConfig {
        let d = GoodLambdaConfig::default();
        GoodLambdaConfig {
            corpus: CorpusSpec {
                pairs: self.pairs,
                dim: self.n,
                min_atoms: self.min_atoms,
                max_atoms: self.max_atoms,
                snap_level: self.snap_level,
                spread: self.spread,
                seed: self.seed,
            },
            lambdas: lambdas_or(&self.lambda, d.lambdas),
            family: self.family.spec(),
            params: self.constants.params(None),
            bound: self.bound,
            drift: self.drift,
            baseline_tolerance: self.baseline_tolerance,
            check_doubling: !self.no_doubling,
        }
    }
}

#[derive(Debug, Serialize)]
struct BaselineFile<'a> {
    #[serde(flatten)]
    baseline: &'a Baseline,
    meta: Meta,
}

pub fn goodlambda(a: &GoodLambdaArgs, g: Globals) -> anyhow::Result<bool> {
    let cfg = a.config();
    let baseline: Option<Baseline> = match &a.baseline {
        Some(p) => Some(serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?),
        None => None,
    };
    let pairs = corpus(&cfg.corpus)?;
    let exec = Exec::default();
    let results = if cfg.corpus.dim == 1 {
        let (good, strong) = good_lambda_suite(&pairs, &cfg, baseline.as_ref(), exec)?;
        vec![good, strong]
    } else {
        vec![exp_good_lambda(&pairs, &cfg, baseline.as_ref(), exec)?]
    };
    let seeds = vec![cfg.corpus.seed, a.family.grid_seed];
    if let Some(p) = &a.write_baseline {
        if results.len() < 2 {
            bail!("a baseline needs the one-dimensional strong ratio as well; use --n 1");
        }
        let b = Baseline::from_results(&cfg, &results[0], &results[1]);
        let meta = Meta::new("goodlambda", &echo(a, &cfg), seeds.clone(), g.stamp)?;
        write_atomic(p, &to_pretty(&BaselineFile { baseline: &b, meta })?)?;
    }
    let meta = Meta::new("goodlambda", &echo(a, &cfg), seeds, g.stamp)?;
    emit_results(meta, results, a.output.as_deref(), a.csv.as_deref())
}

// ---- surgery

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurgeryCheck {
    Hand,
    Followest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurgeryMeasure {
    /// Lattice centres filling `[-1, 3)^n`.
    Lattice,
    /// Atoms on a hyperplane `x_0 = x0` (n >= 2).
    Wall,
    /// One atom at the centre of `R`.
    Atom,
    /// Read `--omega`.
    File,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SurgeryArgs {
    #[arg(long, value_enum)]
    pub check: SurgeryCheck,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SurgeryMeasure::Lattice)]
    pub measure: SurgeryMeasure,
    #[arg(long, required_if_eq("measure", "file"))]
    pub omega: Option<PathBuf>,
    /// Lattice or wall level; defaults to 9, 6 and 3 in dimensions 1, 2 and 3+.
    #[arg(long)]
    pub level: Option<i32>,
    #[arg(long, default_value_t = 0.5 + 1.0 / 4096.0 + 1.0 / 8192.0)]
    pub x0: f64,
    /// Defaults to 2^-2, ..., 2^-8.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Translation step is 2^-M.
    #[arg(long = "M", default_value_t = 12)]
    pub fine: i32,
    #[arg(long, default_value_t = 1)]
    pub j_level: i32,
    /// Sampled translations; 0 runs all of them. Defaults to all in
    /// dimension 1 and 1024 otherwise.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 11)]
    pub seed: u64,
    /// Skip the lower bound even for the lattice.
    #[arg(long)]
    pub no_lebesgue_proxy: bool,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

impl SurgeryArgs {
    pub fn config(&self) -> SurgeryConfig {
        let d = SurgeryConfig::default_for(self.n);
        let mode = match self.samples {
            Some(0) => TranslationMode::Exhaustive,
            Some(count) => TranslationMode::Sample { count, seed: self.seed },
            None => match d.mode {
                TranslationMode::Sample { count, .. } => TranslationMode::Sample { count, seed: self.seed },
                m => m,
            },
        };
        SurgeryConfig {
            r: Cube::unit(self.n),
            j_level: self.j_level,
            fine: self.fine,
            lambdas: lambdas_or(&self.lambda, d.lambdas),
            mode,
            lebesgue_proxy: self.measure == SurgeryMeasure::Lattice && !self.no_lebesgue_proxy,
        }
    }

    fn omega(&self) -> anyhow::Result<AtomicMeasure> {
        let n = self.n;
        let window = Cube::new(&vec![-(1i64 << 24); n], -2)?;
        let level = self.level.unwrap_or(match n {
            1 => 9,
            2 => 6,
            _ => 3,
        });
        Ok(match self.measure {
            SurgeryMeasure::Lattice => lattice_window(&window, level)?,
            SurgeryMeasure::Wall => wall_measure(&window, self.x0, self.level.unwrap_or(8))?,
            SurgeryMeasure::Atom => {
                let c = vec![0.5; n];
                AtomicMeasure::from_f64(n, &[(&c, 1.0)])?
            }
            SurgeryMeasure::File => match &self.omega {
                Some(p) => load_measure(p)?,
                None => bail!("--measure file needs --omega"),
            },
        })
    }
}

pub fn surgery(a: &SurgeryArgs, g: Globals) -> anyhow::Result<bool> {
    let cfg = a.config();
    let omega = a.omega()?;
    let exec = Exec::default();
    let res = match a.check {
        SurgeryCheck::Hand => exp_surgery_hand(&cfg, &omega, exec)?,
        SurgeryCheck::Followest => exp_follow_est(&cfg, &omega, exec)?,
    };
    let seeds = match cfg.mode {
        TranslationMode::Sample { seed, .. } => vec![seed],
        TranslationMode::Exhaustive => vec![],
    };
    let meta = Meta::new("surgery", &echo(a, &cfg), seeds, g.stamp)?;
    emit_results(meta, vec![res], a.output.as_deref(), a.csv.as_deref())
}

// ---- probe-goodness

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    /// Probability that a fixed point's cube is bad.
    CondProb,
    /// Probability that a grid is bad for a fixed cube.
    BadGrid,
    /// Relative size of the bad projection of a fixed function.
    BadProjection,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProbeArgs {
    #[arg(long, value_enum)]
    pub experiment: ProbeKind,
    /// Dimension (conditional probability only).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "M")]
    pub fine: Option<i32>,
    #[arg(long = "N", allow_hyphen_values = true)]
    pub top: Option<i32>,
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<u32>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Sampled grids; 0 runs all of them.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub slope_bound: Option<f64>,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

impl ProbeArgs {
    fn mode(&self, default: GridMode) -> GridMode {
        let (count, seed) = match default {
            GridMode::Sample { count, seed } => (count, seed),
            GridMode::Exhaustive => (0, 0),
        };
        grid_mode(self.samples.unwrap_or(count), self.seed.unwrap_or(seed))
    }
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum ProbeConfig {
    Cond(CondProbConfig),
    Grid(BadGridConfig),
    Projection(BadProjectionConfig),
}

pub fn probe_goodness(a: &ProbeArgs, g: Globals) -> anyhow::Result<bool> {
    let exec = Exec::default();
    let (cfg, res) = match a.experiment {
        ProbeKind::CondProb => {
            let d = CondProbConfig::default();
            let dim = a.n.unwrap_or(d.dim);
            let c = CondProbConfig {
                dim,
                fine: a.fine.unwrap_or(d.fine),
                top: a.top.unwrap_or(d.top),
                r_values: if a.r.is_empty() { d.r_values } else { a.r.clone() },
                eps: a.eps.unwrap_or(d.eps),
                mode: a.mode(d.mode),
                point: vec![0.0; dim],
                slope_bound: a.slope_bound.unwrap_or(d.slope_bound),
            };
            let r = exp_cond_prob_bad(&c, exec)?;
            (ProbeConfig::Cond(c), r)
        }
        ProbeKind::BadGrid => {
            let d = BadGridConfig::default();
            let c = BadGridConfig {
                fine: a.fine.unwrap_or(d.fine),
                top: a.top.unwrap_or(d.top),
                r_values: if a.r.is_empty() { d.r_values.clone() } else { a.r.clone() },
                eps: a.eps.unwrap_or(d.eps),
                mode: a.mode(d.mode),
                slope_bound: a.slope_bound.unwrap_or(d.slope_bound),
                ..d
            };
            let r = exp_bad_grid_prob(&c, exec)?;
            (ProbeConfig::Grid(c), r)
        }
        ProbeKind::BadProjection => {
            let d = BadProjectionConfig::default();
            let c = BadProjectionConfig {
                fine: a.fine.unwrap_or(d.fine),
                top: a.top.unwrap_or(d.top),
                r_values: if a.r.is_empty() { d.r_values.clone() } else { a.r.clone() },
                eps: a.eps.unwrap_or(d.eps),
                mode: a.mode(d.mode),
                slope_bound: a.slope_bound.unwrap_or(d.slope_bound),
                ..d
            };
            let r = exp_bad_projection(&c, exec)?;
            (ProbeConfig::Projection(c), r)
        }
    };
    let meta = Meta::new("probe-goodness", &echo(a, &cfg), res.seeds.clone(), g.stamp)?;
    emit_results(meta, vec![res], a.output.as_deref(), a.csv.as_deref())
}

// ---- cauchy

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Zero,
    Linear,
    Sine,
    Poly,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CauchyArgs {
    #[arg(long, value_enum, default_value_t = CurveKind::Zero)]
    pub curve: CurveKind,
    /// Slope of the linear curve.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub amp: f64,
    #[arg(long, default_value_t = 1.0)]
    pub freq: f64,
    /// Polynomial coefficients, constant term first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Vec<f64>,
    /// `lo,hi`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0], allow_hyphen_values = true)]
    pub interval: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    pub pts: usize,
    /// Also compare the discrete lattice constant at this level.
    #[arg(long)]
    pub discrete_level: Option<i32>,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CauchyReport {
    pub curve: CurveSpec,
    pub interval: [f64; 2],
    /// `(1/|I|) ∫_I |C_A(1_I b)|²`.
    pub ratio: f64,
    pub ratio_error: f64,
    pub panels: usize,
    /// `∫₀¹ ln²(t/(1-t)) dt`, the principal-value part alone.
    pub principal_value_ratio: f64,
    /// The flat-curve ratio in closed form, `π²/3 + π²`.
    pub flat_exact: f64,
    /// `∫₀¹ |ln w|² dw`, which equals 2.
    pub log_square_integral: f64,
    pub accretivity_min_re: f64,
    pub accretivity_max_abs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discrete: Option<DiscreteCheck>,
}

impl CauchyArgs {
    pub fn curve(&self) -> CurveSpec {
        match self.curve {
            CurveKind::Zero => CurveSpec::Zero,
            CurveKind::Linear => CurveSpec::Linear { a: self.a },
            CurveKind::Sine => CurveSpec::Sine {
                amp: self.amp,
                freq: self.freq,
            },
            CurveKind::Poly => CurveSpec::Poly {
                coeffs: self.coeffs.clone(),
            },
        }
    }
}

pub fn cauchy(a: &CauchyArgs, g: Globals) -> anyhow::Result<bool> {
    let curve = a.curve();
    curve.validate()?;
    if a.interval.len() != 2 {
        bail!("--interval takes two values lo,hi");
    }
    let (lo, hi) = (a.interval[0], a.interval[1]);
    let q = b_testing_ratio(&curve, lo, hi, a.pts)?;
    let (min_re, max_abs) = accretivity_bounds(&curve, lo, hi, 1025);
    let discrete = match a.discrete_level {
        Some(l) => Some(discrete_check(l, Exec::default())?),
        None => None,
    };
    let report = CauchyReport {
        curve: curve.clone(),
        interval: [lo, hi],
        ratio: q.value,
        ratio_error: q.error,
        panels: q.panels,
        principal_value_ratio: flat_pv_ratio()?.value,
        flat_exact: PI * PI / 3.0 + PI * PI,
        log_square_integral: log_square_integral()?.value,
        accretivity_min_re: min_re,
        accretivity_max_abs: max_abs,
        discrete,
    };
    let meta = Meta::new("cauchy", &echo(a, &curve), vec![], g.stamp)?;
    let text = to_pretty(&ReportEnvelope { meta, result: report })?;
    match &a.output {
        Some(p) => write_atomic(p, &text)?,
        None => print!("{text}"),
    }
    Ok(true)
}

// ---- report

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Experiment files written by goodlambda, surgery or probe-goodness.
    #[arg(long = "input", short, required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Tab separated instead of comma separated.
    #[arg(long)]
    pub tsv: bool,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

pub fn load_results(path: &Path) -> anyhow::Result<Vec<ExperimentResult>> {
    let text = read(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if v.get("results").is_some() {
        let env: ResultsEnvelope = serde_json::from_value(v).with_context(|| format!("parsing {}", path.display()))?;
        Ok(env.results)
    } else {
        let r: ExperimentResult = serde_json::from_value(v).with_context(|| format!("parsing {}", path.display()))?;
        Ok(vec![r])
    }
}

pub fn report(a: &ReportArgs, _g: Globals) -> anyhow::Result<bool> {
    let mut all = Vec::new();
    for p in &a.inputs {
        all.extend(load_results(p)?);
    }
    let table = merged_table(&all, if a.tsv { '\t' } else { ',' });
    match &a.output {
        Some(p) => write_atomic(p, &table)?,
        None => print!("{table}"),
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn globals() -> Globals {
        Globals { stamp: false }
    }

    #[test]
    fn measure_text_is_canonical() {
        let dir = tempfile::tempdir().unwrap();
        for kind in [GenKind::Lattice, GenKind::RandomUniform, GenKind::Cantor] {
            let out = dir.path().join("m.json");
            let a = GenArgs {
                kind,
                n: 2,
                level: 3,
                count: 20,
                window_level: 0,
                snap_level: 10,
                spread: 0.5,
                depth: 2,
                ratio: 0.3,
                seed: 9,
                output: Some(out.clone()),
            };
            gen(&a, globals()).unwrap();
            let text = fs::read_to_string(&out).unwrap();
            assert_eq!(canonical_measure_text(&text).unwrap(), text);
        }
    }

    #[test]
    fn merged_table_layout() {
        let mut r = ExperimentResult::new("x", "r");
        r.points.push(weightlab::experiments::SweepPoint::new(2.0, 0.5, 0.1));
        r.slope = Some(-1.0);
        let t = merged_table(&[r], '\t');
        assert_eq!(t, "name\tlambda_or_r\testimate\tstderr\tslope\tratio\nx\t2\t0.5\t0.1\t-1\t\n");
    }
}
