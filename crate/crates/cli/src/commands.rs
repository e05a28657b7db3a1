use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use geex_core::evaluation::{deletion_curve_from_scores, mean_std, SweepAopc};
use geex_core::models::{
    argmax, gen_synthetic_dataset, load_model, save_model, train_toy, Activation, DatasetKind,
    DenseLayer, LayerSpec, ToyRecipe,
};
use geex_core::{
    convergence_sweep, explain, geex_merged_with_masks, generate_mask_set, AlphaMode, Attribution,
    BaselineKind, Capability, DenseNet, ExplainConfig, Grid, Kernel, MaskSet, Method, QueryModel,
    Replacement, SearchDistribution,
};

use crate::error::{model_file_error, CliError, Result};
use crate::formats::{self, fmt_f64};

#[derive(Debug, Parser)]
#[command(
    name = "geex",
    version,
    about = "Query-only path-integrated attributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain one input; writes attribution.csv, attribution.pgm, meta.txt.
    Explain(ExplainCmd),
    /// Deletion curves and AOPC; writes aopc.csv and curve CSVs.
    Evaluate(EvaluateCmd),
    /// Distance to integrated gradients per budget; writes sweep.csv.
    Sweep(SweepCmd),
    /// Write a model file.
    GenModel(GenModelCmd),
    /// Write a synthetic labelled dataset.
    GenData(GenDataCmd),
    /// Write a reusable mask bundle.
    GenMasks(GenMasksCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImageFormat {
    Csv,
    Pgm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Two-blob 8x8 classifier trained by gradient descent.
    Toy,
    /// One input, `sigmoid(x)`.
    Sigmoid1d,
    /// Untrained network with random weights.
    Random,
}

/// Estimator settings shared by every command that explains.
#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    /// Query budget n*.
    #[arg(long = "n-star", default_value_t = 5000)]
    pub n_star: usize,
    /// Search distribution standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Path steps of geex-interp.
    #[arg(long = "s-steps", default_value_t = 5)]
    pub s_steps: usize,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub mirror: Toggle,
    /// Gaussian mask smoothing, SIZE:SIGMA.
    #[arg(long = "smooth-kernel", value_parser = formats::parse_kernel)]
    pub smooth_kernel: Option<(usize, f64)>,
    /// zeros, blur, blur:SIZE:SIGMA or file:PATH.
    #[arg(long, default_value = "zeros")]
    pub baseline: String,
    #[arg(long, default_value = "stratified")]
    pub alpha: AlphaMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Explained class; defaults to the predicted one.
    #[arg(long)]
    pub class: Option<usize>,
    /// Draw fresh masks for every geex-interp step.
    #[arg(long = "fresh-masks")]
    pub fresh_masks: bool,
    /// Riemann steps of integrated gradients.
    #[arg(long = "ig-steps", default_value_t = 512)]
    pub ig_steps: usize,
    /// Query worker threads; defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExplainCmd {
    #[arg(long)]
    pub model: PathBuf,
    /// Explicand, .pgm or .csv.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "geex")]
    pub method: Method,
    /// Mask bundle to reuse; its settings replace the sampling flags.
    #[arg(long)]
    pub masks: Option<PathBuf>,
    #[command(flatten)]
    pub explain: ExplainArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateCmd {
    #[arg(long)]
    pub model: PathBuf,
    /// Explicands, .pgm or .csv.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Methods to explain with, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "attribution")]
    pub method: Vec<Method>,
    /// Precomputed attribution.csv files, one per input.
    #[arg(long, num_args = 1..)]
    pub attribution: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "baseline")]
    pub replacement: Vec<Replacement>,
    /// Deletion steps; defaults to deleting every feature.
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long = "per-step", default_value_t = 1)]
    pub per_step: usize,
    /// Number of seeds, counted up from --seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[command(flatten)]
    pub explain: ExplainArgs,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Increasing query budgets, comma separated.
    #[arg(long, required = true, value_delimiter = ',')]
    pub budgets: Vec<usize>,
    /// Number of seeds, counted up from --seed.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value = "baseline")]
    pub replacement: Replacement,
    /// Deletion steps of the AOPC column; defaults to every feature.
    #[arg(long)]
    pub l: Option<usize>,
    #[command(flatten)]
    pub explain: ExplainArgs,
}

#[derive(Debug, Args)]
pub struct GenModelCmd {
    #[arg(long, value_enum)]
    pub kind: ModelKind,
    #[arg(long)]
    pub out: PathBuf,
    /// Training set for the toy model; defaults to the built-in recipe.
    #[arg(long = "train-data")]
    pub train_data: Option<PathBuf>,
    /// Serve the model without gradients.
    #[arg(long = "black-box")]
    pub black_box: bool,
    /// Weight initialisation seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Input shape of the random model, e.g. 8x8.
    #[arg(long, default_value = "8x8")]
    pub shape: String,
    /// Class count of the random model.
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
}

#[derive(Debug, Args)]
pub struct GenDataCmd {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "two-blob")]
    pub kind: DatasetKind,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the first N samples as standalone images.
    #[arg(long)]
    pub export: Option<usize>,
    /// Directory of exported samples; defaults to the dataset's directory.
    #[arg(long = "export-dir")]
    pub export_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ImageFormat::Csv)]
    pub format: ImageFormat,
}

#[derive(Debug, Args)]
pub struct GenMasksCmd {
    #[arg(long)]
    pub out: PathBuf,
    /// Mask shape, e.g. 8x8.
    #[arg(long)]
    pub shape: String,
    #[arg(long = "n-star", default_value_t = 5000)]
    pub n_star: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub mirror: Toggle,
    #[arg(long = "smooth-kernel", value_parser = formats::parse_kernel)]
    pub smooth_kernel: Option<(usize, f64)>,
    #[arg(long, default_value = "stratified")]
    pub alpha: AlphaMode,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Explain(c) => cmd_explain(&c),
        Command::Evaluate(c) => cmd_evaluate(&c),
        Command::Sweep(c) => cmd_sweep(&c),
        Command::GenModel(c) => cmd_gen_model(&c),
        Command::GenData(c) => cmd_gen_data(&c),
        Command::GenMasks(c) => cmd_gen_masks(&c),
    }
}

fn load_query_model(path: &Path) -> Result<Box<dyn QueryModel>> {
    let file = load_model(path).map_err(|e| model_file_error(path, e))?;
    Ok(file.into_query_model())
}

fn parse_baseline(spec: &str) -> Result<BaselineKind> {
    let bad = || CliError::Usage(format!("bad --baseline '{spec}'"));
    match spec {
        "zeros" => Ok(BaselineKind::Zeros),
        "blur" => Ok(BaselineKind::DEFAULT_BLUR),
        _ => {
            if let Some(k) = spec.strip_prefix("blur:") {
                let (size, sigma) = formats::parse_kernel(k).map_err(|_| bad())?;
                Ok(BaselineKind::Blurred { size, sigma })
            } else if let Some(p) = spec.strip_prefix("file:") {
                Ok(BaselineKind::Custom(formats::read_image(Path::new(p))?))
            } else {
                Err(bad())
            }
        }
    }
}

fn kernel(spec: Option<(usize, f64)>) -> Result<Option<Kernel>> {
    spec.map(|(size, sigma)| Kernel::gaussian(size, sigma))
        .transpose()
        .map_err(Into::into)
}

impl ExplainArgs {
    pub fn config(&self) -> Result<ExplainConfig> {
        Ok(ExplainConfig {
            sigma: self.sigma,
            n_star: self.n_star,
            s_steps: self.s_steps,
            mirrored: self.mirror == Toggle::On,
            smoothing: kernel(self.smooth_kernel)?,
            baseline: parse_baseline(&self.baseline)?,
            alpha_mode: self.alpha,
            seed: self.seed,
            class_idx: self.class,
            fresh_masks_per_step: self.fresh_masks,
            ig_steps: self.ig_steps,
            workers: self.workers,
        })
    }
}

fn shape_arg(s: &str) -> Result<Vec<usize>> {
    formats::parse_shape(s).map_err(CliError::Usage)
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn seed_list(first: u64, count: u64) -> Vec<u64> {
    (first..first.saturating_add(count)).collect()
}

fn class_of(model: &dyn QueryModel, x: &Grid, class: Option<usize>) -> Result<usize> {
    let scores = model.query(x)?;
    match class {
        Some(c) if c >= scores.len() => Err(CliError::Usage(format!(
            "class index {c} out of range for {} classes",
            scores.len()
        ))),
        Some(c) => Ok(c),
        None => Ok(argmax(&scores)),
    }
}

fn smoothing_label(k: Option<&Kernel>) -> String {
    match k {
        Some(k) => format!("{}:{}", k.size(), fmt_f64(k.sigma())),
        None => "none".to_string(),
    }
}

fn meta_text(attr: &Attribution, cfg: &ExplainConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("method", attr.method.to_string());
    kv("seed", attr.seed.to_string());
    kv("n_star", cfg.n_star.to_string());
    kv("sigma", fmt_f64(cfg.sigma));
    kv("s_steps", cfg.s_steps.to_string());
    kv("mirrored", cfg.mirrored.to_string());
    kv("smoothing", smoothing_label(cfg.smoothing.as_ref()));
    kv("alpha", cfg.alpha_mode.to_string());
    kv("fresh_masks", cfg.fresh_masks_per_step.to_string());
    kv("ig_steps", cfg.ig_steps.to_string());
    kv("baseline", cfg.baseline.to_string());
    kv("class", attr.class_idx.to_string());
    kv("output_kind", attr.output_kind.to_string());
    kv("n_queries", attr.n_queries.to_string());
    kv(
        "completeness_residual",
        attr.completeness_residual
            .map_or_else(|| "none".to_string(), fmt_f64),
    );
    kv("total", fmt_f64(attr.total()));
    for w in &attr.warnings {
        kv("warning", w.clone());
    }
    out
}

pub fn cmd_explain(c: &ExplainCmd) -> Result<()> {
    let model = load_query_model(&c.model)?;
    let x = formats::read_image(&c.input)?;
    let mut cfg = c.explain.config()?;
    let masks = match &c.masks {
        Some(p) => {
            if c.method != Method::GeexMerged {
                return Err(CliError::Usage(format!(
                    "--masks only applies to --method geex, not {}",
                    c.method
                )));
            }
            Some(formats::parse_mask_set(p, &formats::read_text(p)?)?)
        }
        None => None,
    };
    create_dir(&c.out)?;
    let attr = match &masks {
        Some(set) => {
            cfg = ExplainConfig {
                n_star: set.len(),
                sigma: set.sigma(),
                mirrored: set.mirrored(),
                smoothing: set.smoothing().cloned(),
                alpha_mode: set.alpha_mode(),
                seed: set.seed(),
                ..cfg
            };
            geex_merged_with_masks(model.as_ref(), &x, &cfg, set)?
        }
        None => explain(c.method, model.as_ref(), &x, &cfg)?,
    };
    formats::write_text(
        &c.out.join("attribution.csv"),
        &formats::attribution_to_csv(&attr.xi),
    )?;
    formats::write_text(
        &c.out.join("attribution.pgm"),
        &formats::attribution_to_pgm(&attr.xi),
    )?;
    formats::write_text(&c.out.join("meta.txt"), &meta_text(&attr, &cfg))?;
    Ok(())
}

/// Method label of a precomputed attribution, from a `meta.txt` next to it.
fn attribution_label(path: &Path) -> String {
    path.parent()
        .map(|d| d.join("meta.txt"))
        .and_then(|m| std::fs::read_to_string(m).ok())
        .and_then(|t| {
            t.lines()
                .find_map(|l| l.strip_prefix("method=").map(str::to_string))
        })
        .unwrap_or_else(|| "attribution".to_string())
}

struct CurveAccumulator {
    label: String,
    replacement: Replacement,
    per_seed: Vec<f64>,
    ratio_sum: Vec<f64>,
    curves: usize,
}

fn curves_to_csv(acc: &CurveAccumulator) -> String {
    let mut out = String::from("step,ratio\n");
    for (i, r) in acc.ratio_sum.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, fmt_f64(r / acc.curves as f64));
    }
    out
}

/// Curves are averaged over inputs and seeds; the AOPC of a seed is its
/// mean over inputs, and the table reports mean and population standard
/// deviation over seeds.
pub fn cmd_evaluate(c: &EvaluateCmd) -> Result<()> {
    let model = load_query_model(&c.model)?;
    let inputs = c
        .input
        .iter()
        .map(|p| formats::read_image(p))
        .collect::<Result<Vec<_>>>()?;
    let cfg = c.explain.config()?;
    let seeds = seed_list(c.explain.seed, c.seeds);
    if seeds.is_empty() {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    if c.replacement.is_empty() {
        return Err(CliError::Usage(
            "--replacement needs at least one mode".into(),
        ));
    }
    let precomputed = if c.attribution.is_empty() {
        None
    } else {
        if c.attribution.len() != inputs.len() {
            return Err(CliError::Usage(format!(
                "{} attributions for {} inputs",
                c.attribution.len(),
                inputs.len()
            )));
        }
        let scores = c
            .attribution
            .iter()
            .zip(&inputs)
            .map(|(p, x)| formats::parse_attribution_csv(p, &formats::read_text(p)?, x.shape()))
            .collect::<Result<Vec<_>>>()?;
        Some((attribution_label(&c.attribution[0]), scores))
    };
    let methods = if precomputed.is_some() {
        Vec::new()
    } else if c.method.is_empty() {
        vec![Method::GeexMerged]
    } else {
        c.method.clone()
    };
    create_dir(&c.out)?;

    let features = inputs[0].len();
    let l = c.l.unwrap_or(features / c.per_step.max(1));
    let mut cells = Vec::new();
    let labels: Vec<String> = match &precomputed {
        Some((label, _)) => vec![label.clone()],
        None => methods.iter().map(|m| m.to_string()).collect(),
    };
    for (mi, label) in labels.iter().enumerate() {
        for &replacement in &c.replacement {
            let mut acc = CurveAccumulator {
                label: label.clone(),
                replacement,
                per_seed: Vec::with_capacity(seeds.len()),
                ratio_sum: vec![0.0; l],
                curves: 0,
            };
            for &seed in &seeds {
                let mut seed_sum = 0.0;
                for (ii, x) in inputs.iter().enumerate() {
                    let run = ExplainConfig {
                        seed,
                        ..cfg.clone()
                    };
                    let (scores, baseline, class) = match &precomputed {
                        Some((_, scores)) => (
                            scores[ii].clone(),
                            run.baseline.resolve(x)?,
                            class_of(model.as_ref(), x, run.class_idx)?,
                        ),
                        None => {
                            let a = explain(methods[mi], model.as_ref(), x, &run)?;
                            (a.xi, a.baseline, a.class_idx)
                        }
                    };
                    let curve = deletion_curve_from_scores(
                        model.as_ref(),
                        x,
                        &scores,
                        &baseline,
                        class,
                        l,
                        c.per_step,
                        replacement,
                        seed,
                    )?;
                    for (s, r) in acc.ratio_sum.iter_mut().zip(&curve.ratios) {
                        *s += r;
                    }
                    acc.curves += 1;
                    seed_sum += curve.aopc;
                }
                acc.per_seed.push(seed_sum / inputs.len() as f64);
            }
            cells.push(acc);
        }
    }

    let mut table = String::from("method,replacement,mean,std,seeds\n");
    for acc in &cells {
        let (mean, std) = mean_std(&acc.per_seed);
        let _ = writeln!(
            table,
            "{},{},{},{},{}",
            acc.label,
            acc.replacement,
            fmt_f64(mean),
            fmt_f64(std),
            acc.per_seed.len()
        );
    }
    formats::write_text(&c.out.join("aopc.csv"), &table)?;
    if let [only] = cells.as_slice() {
        formats::write_text(&c.out.join("curve.csv"), &curves_to_csv(only))?;
    } else {
        for acc in &cells {
            let name = format!("curve_{}_{}.csv", acc.label, acc.replacement);
            formats::write_text(&c.out.join(name), &curves_to_csv(acc))?;
        }
    }
    Ok(())
}

pub fn cmd_sweep(c: &SweepCmd) -> Result<()> {
    if c.budgets.is_empty() {
        return Err(CliError::Usage(
            "--budgets needs at least one budget".into(),
        ));
    }
    let model = load_query_model(&c.model)?;
    let x = formats::read_image(&c.input)?;
    let cfg = c.explain.config()?;
    let seeds = seed_list(c.explain.seed, c.seeds);
    create_dir(&c.out)?;
    let aopc = SweepAopc {
        l: c.l.unwrap_or(x.len()),
        replacement: c.replacement,
    };
    let res = convergence_sweep(model.as_ref(), &x, &c.budgets, &cfg, &seeds, Some(aopc))?;
    let mut out = String::from("budget,mean_rel_l2,std,mean_aopc\n");
    let aopcs = res.mean_aopc.unwrap_or_default();
    for (i, b) in res.budgets.iter().enumerate() {
        let a = aopcs.get(i).map_or_else(String::new, |v| fmt_f64(*v));
        let _ = writeln!(
            out,
            "{b},{},{},{a}",
            fmt_f64(res.mean_rel_l2[i]),
            fmt_f64(res.std_rel_l2[i])
        );
    }
    formats::write_text(&c.out.join("sweep.csv"), &out)?;
    if let Some(ig) = res.ig_aopc {
        println!("ig_aopc={}", fmt_f64(ig));
    }
    Ok(())
}

pub fn cmd_gen_model(c: &GenModelCmd) -> Result<()> {
    let net = match c.kind {
        ModelKind::Sigmoid1d => DenseNet::new(
            &[1],
            vec![DenseLayer::new(
                Grid::new(vec![1, 1], vec![1.0])?,
                Grid::from_vec(vec![0.0])?,
                Activation::Sigmoid,
            )?],
        )?,
        ModelKind::Random => {
            let hidden = c.hidden.unwrap_or(16);
            DenseNet::random(
                &shape_arg(&c.shape)?,
                &[
                    LayerSpec::new(hidden, Activation::Relu),
                    LayerSpec::new(c.classes, Activation::Sigmoid),
                ],
                c.seed.unwrap_or(0),
            )?
        }
        ModelKind::Toy => {
            let base = ToyRecipe::default();
            let recipe = ToyRecipe {
                hidden: c.hidden.unwrap_or(base.hidden),
                epochs: c.epochs.unwrap_or(base.epochs),
                lr: c.lr.unwrap_or(base.lr),
                init_seed: c.seed.unwrap_or(base.init_seed),
                ..base
            };
            let outcome = match &c.train_data {
                Some(p) => {
                    let data = formats::parse_dataset_csv(p, &formats::read_text(p)?)?;
                    train_toy(
                        &data,
                        &recipe.arch(),
                        recipe.epochs,
                        recipe.lr,
                        recipe.init_seed,
                    )?
                }
                None => recipe.train()?,
            };
            println!(
                "train_accuracy={} final_loss={}",
                fmt_f64(outcome.train_accuracy),
                fmt_f64(outcome.final_loss)
            );
            outcome.net
        }
    };
    let cap = if c.black_box {
        Capability::BlackBox
    } else {
        Capability::WhiteBox
    };
    save_model(&net, cap, &c.out).map_err(|e| model_file_error(&c.out, e))
}

fn image_to_pgm(g: &Grid) -> String {
    let (h, w) = match g.shape() {
        [h, w] => (*h, *w),
        _ => (1, g.len()),
    };
    let mut out = format!("P2\n{w} {h}\n255\n");
    for row in g.data().chunks(w) {
        let px: Vec<String> = row
            .iter()
            .map(|v| ((v.clamp(0.0, 1.0) * 255.0).round() as u8).to_string())
            .collect();
        out.push_str(&px.join(" "));
        out.push('\n');
    }
    out
}

pub fn cmd_gen_data(c: &GenDataCmd) -> Result<()> {
    let data = gen_synthetic_dataset(c.kind, c.samples, c.noise, c.seed)?;
    formats::write_text(&c.out, &formats::dataset_to_csv(&data))?;
    if let Some(n) = c.export {
        let dir = c
            .export_dir
            .clone()
            .or_else(|| c.out.parent().map(Path::to_path_buf))
            .unwrap_or_default();
        create_dir(&dir)?;
        for (i, s) in data.samples.iter().take(n).enumerate() {
            let (ext, text) = match c.format {
                ImageFormat::Csv => ("csv", formats::grid_to_csv(&s.input)),
                ImageFormat::Pgm => ("pgm", image_to_pgm(&s.input)),
            };
            let name = format!("sample_{i}_label{}.{ext}", s.label);
            formats::write_text(&dir.join(name), &text)?;
        }
    }
    Ok(())
}

pub fn cmd_gen_masks(c: &GenMasksCmd) -> Result<()> {
    let dist = SearchDistribution::new(c.sigma, &shape_arg(&c.shape)?)?;
    let set: MaskSet = generate_mask_set(
        &dist,
        c.n_star,
        c.seed,
        c.mirror == Toggle::On,
        kernel(c.smooth_kernel)?,
        c.alpha,
    )?;
    formats::write_text(&c.out, &formats::mask_set_to_text(&set))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_explain_flags() {
        let cli = Cli::try_parse_from([
            "geex",
            "explain",
            "--model",
            "m",
            "--input",
            "x.csv",
            "--out",
            "o",
            "--method",
            "geex-interp",
            "--mirror",
            "off",
            "--smooth-kernel",
            "3:0.5",
            "--alpha",
            "iid",
            "--workers",
            "2",
        ])
        .unwrap();
        let Command::Explain(c) = cli.command else {
            panic!()
        };
        assert_eq!(c.method, Method::GeexInterpolated);
        let cfg = c.explain.config().unwrap();
        assert!(!cfg.mirrored);
        assert_eq!(cfg.alpha_mode, AlphaMode::IidUniform);
        assert_eq!(cfg.smoothing.unwrap().size(), 3);
        assert_eq!(cfg.workers, Some(2));
    }

    #[test]
    fn rejects_unknown_flags_and_values() {
        for args in [
            vec![
                "geex", "explain", "--model", "m", "--input", "x", "--out", "o", "--bogus",
            ],
            vec![
                "geex", "explain", "--model", "m", "--input", "x", "--out", "o", "--method", "lime",
            ],
            vec![
                "geex",
                "sweep",
                "--model",
                "m",
                "--input",
                "x",
                "--out",
                "o",
                "--budgets",
                "",
            ],
        ] {
            assert!(Cli::try_parse_from(args).is_err());
        }
    }

    #[test]
    fn baseline_specs() {
        assert_eq!(parse_baseline("zeros").unwrap(), BaselineKind::Zeros);
        assert_eq!(parse_baseline("blur").unwrap(), BaselineKind::DEFAULT_BLUR);
        assert_eq!(
            parse_baseline("blur:3:0.5").unwrap(),
            BaselineKind::Blurred {
                size: 3,
                sigma: 0.5
            }
        );
        assert!(matches!(parse_baseline("median"), Err(CliError::Usage(_))));
        assert!(matches!(
            parse_baseline("file:/nonexistent.csv"),
            Err(CliError::Io { .. })
        ));
    }
}
