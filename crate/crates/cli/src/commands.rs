use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use gdm_core::evalkit::{misclassification_rate, roc_curve, sample_two_view_scene, TwoViewSpec};
use gdm_core::robust::{segment as run_pipeline, tpr_fpr, Reassignment};
use gdm_core::{embed_dataset, EmbeddingMode, OutlierMode};

use crate::input::{labels_to_partition, read_dataset, read_labels};
use crate::report::{Metrics, RunConfig, RunReport, SCHEMA_VERSION};
use crate::{CurveFormat, EmbeddingArg, EvalArgs, GenerateArgs, OutlierArg, RocArgs, SegmentArgs, Tuning};

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, contents).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

impl Tuning {
    fn run_config(&self) -> Result<RunConfig> {
        let Some(k) = self.k else { bail!("--k is required") };
        Ok(RunConfig {
            k,
            epsilon: self.epsilon,
            p: self.p,
            restarts: self.restarts,
            grad_iters: self.grad_iters,
            genetic_passes: self.genetic_passes,
            step: self.step,
            merge_candidates: self.merge_candidates,
            embedding: match self.embedding {
                EmbeddingArg::Nonlinear => EmbeddingMode::Nonlinear,
                EmbeddingArg::Linear => EmbeddingMode::Linear,
            },
            normalize: self.normalize,
            outlier_mode: match self.outlier_mode {
                OutlierArg::None => OutlierMode::None,
                OutlierArg::Naive => OutlierMode::Naive,
                OutlierArg::KnownFraction => OutlierMode::KnownFraction,
                OutlierArg::ModelReassign => OutlierMode::ModelReassign,
            },
            alpha: self.alpha,
            fraction: self.fraction,
            kappa: self.kappa,
            adaptive_kappa: self.adaptive_kappa,
            seed: self.seed.unwrap_or_else(rand::random),
        })
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).context("config is not valid JSON")?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).context("config does not match the run configuration schema")
}

pub fn segment(args: SegmentArgs) -> Result<()> {
    let config = match &args.config {
        Some(path) => load_config(path)?,
        None => args.tuning.run_config()?,
    };
    let data = read_dataset(&args.input)?;
    let started = Instant::now();
    let a = embed_dataset(&data.points, config.embedding, config.normalize)?;
    let result = run_pipeline(&a, &config.gdm_config(), &config.outlier_config())?;
    let wall_time_secs = started.elapsed().as_secs_f64();

    let partition = &result.partition;
    let metrics = match &data.truth {
        Some(truth) => {
            let (tpr, fpr) = tpr_fpr(partition.outliers(), truth.outliers(), truth.len());
            Some(Metrics { misclassification: misclassification_rate(partition, truth)?, tpr, fpr })
        }
        None => None,
    };
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        input: args.input.display().to_string(),
        labels: partition.labels().iter().map(|l| l + 1).collect(),
        outliers: (0..partition.len()).map(|i| partition.is_outlier(i)).collect(),
        gd_value: result.gd_value,
        cluster_dims: result.per_cluster_dims.clone(),
        wall_time_secs,
        seed: config.seed,
        config,
        metrics,
    };
    if let Some(path) = &args.labels_out {
        emit(Some(path), &report.label_lines())?;
    }
    emit(args.output.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let mut spec = TwoViewSpec::new(args.bodies, args.seed);
    spec.noise_sigma = args.noise;
    spec.outlier_count = args.outliers;
    spec.coplanar = args.coplanar;
    spec.focal = args.focal;
    let scene = sample_two_view_scene(&spec)?;

    let labels: Vec<usize> = (0..scene.truth.len())
        .map(|i| if scene.truth.is_outlier(i) { 0 } else { scene.truth.labels()[i] + 1 })
        .collect();
    let mut text = format!("# two-view scene, seed {}\nx,y,x2,y2,label\n", args.seed);
    for (pc, l) in scene.correspondences.iter().zip(&labels) {
        text.push_str(&format!("{:?},{:?},{:?},{:?},{l}\n", pc.x, pc.y, pc.x2, pc.y2));
    }
    if let Some(path) = &args.labels_out {
        emit(Some(path), &labels.iter().map(|l| format!("{l}\n")).collect::<String>())?;
    }
    emit(args.output.as_deref(), &text)
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let pred = read_labels(&args.pred)?;
    let truth = read_labels(&args.truth)?;
    if pred.len() != truth.len() {
        bail!("{} predicted labels but {} true labels", pred.len(), truth.len());
    }
    let (pred, truth) = (labels_to_partition(&pred)?, labels_to_partition(&truth)?);
    let (tpr, fpr) = tpr_fpr(pred.outliers(), truth.outliers(), truth.len());
    let metrics = Metrics { misclassification: misclassification_rate(&pred, &truth)?, tpr, fpr };
    emit(None, &(serde_json::to_string_pretty(&metrics)? + "\n"))
}

pub fn roc(args: RocArgs) -> Result<()> {
    let config = args.tuning.run_config()?;
    let data = read_dataset(&args.input)?;
    let Some(truth) = data.truth else { bail!("{} has no label column", args.input.display()) };
    if args.kappa_grid.is_empty() {
        bail!("empty kappa grid");
    }
    let a = embed_dataset(&data.points, config.embedding, config.normalize)?;
    let fit = Reassignment::compute(&a, &config.gdm_config(), config.fraction)?;
    let curve = roc_curve(&fit, &truth, &args.kappa_grid)?;
    let text = match args.format {
        CurveFormat::Json => {
            serde_json::to_string_pretty(&serde_json::json!({ "seed": config.seed, "curve": curve }))? + "\n"
        }
        CurveFormat::Csv => {
            let mut s = String::from("kappa,tpr,fpr\n");
            for pt in &curve {
                s.push_str(&format!("{},{},{}\n", pt.kappa, pt.tpr, pt.fpr));
            }
            s
        }
    };
    emit(args.output.as_deref(), &text)
}
