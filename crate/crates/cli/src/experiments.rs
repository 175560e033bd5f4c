//! The subcommand drivers.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use mhinr_core::metrics::psnr;
use mhinr_core::models::{
    count_flops, count_params, evaluate, match_params, save_checkpoint, train_with, Model,
    ModelKind, ModelSpec, TrainConfig, TrainReport,
};
use mhinr_core::nn::AdamConfig;
use mhinr_core::signal::{box_downsample, load_image, perlin2d, save_image, Image};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::plot::LinePlot;
use crate::report::{RunReport, Table};
use crate::{CliError, Result};

pub const OCTAVES_SCHEMA: &str = "mhinr-octaves/1";
pub const HEADS_SCHEMA: &str = "mhinr-heads/1";
pub const COMPARE_SCHEMA: &str = "mhinr-compare/1";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Box-downsamples `img` so that its height becomes `size`.
pub fn fit_to_size(img: Image, size: usize) -> Result<Image> {
    let (h, w) = img.dims();
    if h == size {
        return Ok(img);
    }
    if size == 0 || size > h || h % size != 0 || w % (h / size) != 0 {
        return Err(CliError::Config(format!(
            "a {h}x{w} image cannot be box-downsampled to height {size}"
        )));
    }
    Ok(box_downsample(&img, h / size)?)
}

fn image_target(path: &Path, size: Option<usize>) -> Result<(Image, String)> {
    let img = load_image(path)?;
    let img = match size {
        Some(size) => fit_to_size(img, size)?,
        None => img,
    };
    Ok((img, path.display().to_string()))
}

fn perlin_target(cfg: &ExperimentConfig, octaves: u32) -> Result<(Image, String)> {
    let size = cfg.size.unwrap_or(64);
    let spec = cfg.perlin_spec(octaves);
    let source = format!(
        "perlin(octaves={}, base_frequency={}, persistence={}, lacunarity={}, seed={})",
        spec.octaves, spec.base_frequency, spec.persistence, spec.lacunarity, spec.seed
    );
    Ok((perlin2d(&spec, size, size)?, source))
}

fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        epochs: cfg.epochs,
        adam: AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
    }
}

/// A trained model plus the pieces every driver reports.
struct Fitted {
    model: Model,
    train: TrainReport,
    wall_time_s: f64,
}

fn fit(spec: &ModelSpec, img: &Image, cfg: &ExperimentConfig, label: &str) -> Result<Fitted> {
    spec.validate_for(img.height(), img.width())?;
    let mut model = Model::build(spec)?;
    info!(
        "{label}: training {} ({} params) for {} epochs",
        spec.kind().as_str(),
        model.param_count(),
        cfg.epochs
    );
    let every = (cfg.epochs / 10).max(1);
    let start = Instant::now();
    let train = train_with(&mut model, img, &train_config(cfg), |epoch, loss| {
        if (epoch + 1) % every == 0 {
            info!(
                "{label}: epoch {}/{} loss {loss:.3e}",
                epoch + 1,
                cfg.epochs
            );
        }
    })?;
    let wall_time_s = start.elapsed().as_secs_f64();
    info!(
        "{label}: train PSNR {:.2} dB in {wall_time_s:.1} s",
        train.train_psnr.psnr_db
    );
    Ok(Fitted {
        model,
        train,
        wall_time_s,
    })
}

fn report(
    fitted: &Fitted,
    img: &Image,
    source: String,
    cfg: &ExperimentConfig,
    eval_psnr_db: Option<f64>,
    flops_dims: (usize, usize),
) -> Result<RunReport> {
    let spec = fitted.model.spec().clone();
    Ok(RunReport {
        flops: count_flops(&spec, flops_dims.0, flops_dims.1)?,
        params: fitted.model.param_count(),
        seed: spec.seed,
        epochs: spec.epochs,
        spec,
        source,
        height: img.height(),
        width: img.width(),
        lr: cfg.lr,
        losses: fitted.train.losses.clone(),
        train_psnr_db: fitted.train.train_psnr.psnr_db,
        eval_psnr_db,
        wall_time_s: Some(fitted.wall_time_s),
    })
}

fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    create_dir(dir)?;
    write_text(&dir.join("report.csv"), &report.to_csv()?)?;
    write_text(&dir.join("report.json"), &report.to_json()?)
}

fn save_recon(img: &Image, base: &Path, png: bool) -> Result<()> {
    save_image(img, base.with_extension("pgm"))?;
    if png {
        save_image(img, base.with_extension("png"))?;
    }
    Ok(())
}

/// A labelled sweep point.
type Job<'a, T> = (String, Box<dyn FnOnce() -> Result<T> + 'a>);

/// Runs every labelled job, keeping going past failures.
fn sweep<T>(jobs: Vec<Job<'_, T>>) -> (Vec<T>, Vec<(String, String)>) {
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for (label, job) in jobs {
        match job() {
            Ok(v) => done.push(v),
            Err(e) => {
                warn!("{label} failed: {e}");
                failures.push((label, e.to_string()));
            }
        }
    }
    (done, failures)
}

fn finish(total: usize, failures: Vec<(String, String)>) -> Result<()> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::SweepFailed { total, failures })
    }
}

fn model_spec(cfg: &ExperimentConfig) -> ModelSpec {
    let spec = match cfg.model {
        ModelKind::MultiHead => ModelSpec::multi_head(cfg.heads[0], cfg.alpha),
        ModelKind::Siren => ModelSpec::siren(cfg.width),
        ModelKind::FourierFeature => ModelSpec::fourier_feature(cfg.width, cfg.features),
    };
    spec.with_seed(cfg.seed).with_epochs(cfg.epochs)
}

/// Trains one model and writes `report.csv`, `report.json`, `recon.pgm` and
/// `model.ckpt` into the output directory.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<RunReport> {
    expect_kind(cfg, ExperimentKind::Fit)?;
    let (img, source) = match &cfg.image {
        Some(path) => image_target(path, cfg.size)?,
        None => perlin_target(cfg, cfg.octaves[0])?,
    };
    let spec = model_spec(cfg);
    let fitted = fit(&spec, &img, cfg, "fit")?;
    let report = report(&fitted, &img, source, cfg, None, img.dims())?;
    write_report(&cfg.out_dir, &report)?;
    let recon = evaluate(&fitted.model, img.height(), img.width())?;
    save_recon(&recon, &cfg.out_dir.join("recon"), cfg.png)?;
    save_checkpoint(&fitted.model, cfg.out_dir.join("model.ckpt"))?;
    Ok(report)
}

fn expect_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(CliError::Config(format!(
            "configuration resolved for {:?}, not {kind:?}",
            cfg.kind
        )));
    }
    cfg.validate()
}

fn f(v: f64) -> String {
    v.to_string()
}

/// PSNR against Perlin octave count for each head grid.
///
/// Writes `octaves.csv` (columns: octaves, heads, head_count, alpha, params,
/// train_psnr_db, final_loss), `octaves.svg`, the targets and one run report
/// per grid point.
pub fn cmd_sweep_octaves(cfg: &ExperimentConfig) -> Result<Table> {
    expect_kind(cfg, ExperimentKind::SweepOctaves)?;
    create_dir(&cfg.out_dir)?;
    let mut jobs: Vec<Job<'_, (u32, usize, Vec<String>)>> = Vec::new();
    for &octaves in &cfg.octaves {
        for &heads in &cfg.heads {
            let label = format!("octaves={octaves} heads={heads}");
            let job_label = label.clone();
            jobs.push((
                label,
                Box::new(move || {
                    let (img, source) = perlin_target(cfg, octaves)?;
                    save_image(&img, cfg.out_dir.join(format!("target_o{octaves}.pgm")))?;
                    let spec = ModelSpec::multi_head(heads, cfg.alpha)
                        .with_seed(cfg.seed)
                        .with_epochs(cfg.epochs);
                    let fitted = fit(&spec, &img, cfg, &job_label)?;
                    let report = report(&fitted, &img, source, cfg, None, img.dims())?;
                    write_report(
                        &cfg.out_dir.join(format!("runs/o{octaves}_h{heads}")),
                        &report,
                    )?;
                    let row = vec![
                        octaves.to_string(),
                        heads.to_string(),
                        heads.count().to_string(),
                        cfg.alpha.to_string(),
                        report.params.to_string(),
                        f(report.train_psnr_db),
                        f(*report.losses.last().unwrap_or(&f64::NAN)),
                    ];
                    Ok((octaves, heads.count(), row))
                }),
            ));
        }
    }
    let total = jobs.len();
    let (mut rows, failures) = sweep(jobs);
    rows.sort_by_key(|r| (r.0, r.1));
    let mut table = Table::new(
        OCTAVES_SCHEMA,
        &[
            "octaves",
            "heads",
            "head_count",
            "alpha",
            "params",
            "train_psnr_db",
            "final_loss",
        ],
    );
    for (_, _, row) in rows {
        table.push(row);
    }
    let csv = cfg.out_dir.join("octaves.csv");
    table.write(&csv)?;
    replot(&csv)?;
    finish(total, failures)?;
    Ok(table)
}

/// Generalization from a 2x downsampled image back to the original.
///
/// Writes `heads.csv` (columns: heads, head_count, alpha, params,
/// train_psnr_db, eval_psnr_db), `heads.svg` and per-head reconstructions at
/// the original size.
pub fn cmd_sweep_heads(cfg: &ExperimentConfig) -> Result<Table> {
    expect_kind(cfg, ExperimentKind::SweepHeads)?;
    create_dir(&cfg.out_dir)?;
    let path = cfg
        .image
        .as_deref()
        .ok_or_else(|| CliError::Config("missing --image".into()))?;
    let (original, source) = image_target(path, cfg.size)?;
    let low = box_downsample(&original, 2)?;
    save_image(&original, cfg.out_dir.join("original.pgm"))?;
    save_image(&low, cfg.out_dir.join("train.pgm"))?;
    let (original, low) = (&original, &low);
    let mut jobs: Vec<Job<'_, (usize, Vec<String>)>> = Vec::new();
    for &heads in &cfg.heads {
        let label = format!("heads={heads}");
        let job_label = label.clone();
        let source = source.clone();
        jobs.push((
            label,
            Box::new(move || {
                let spec = ModelSpec::multi_head(heads, cfg.alpha)
                    .with_seed(cfg.seed)
                    .with_epochs(cfg.epochs);
                let fitted = fit(&spec, low, cfg, &job_label)?;
                let render = evaluate(&fitted.model, original.height(), original.width())?;
                let eval = psnr(&render, original)?.psnr_db;
                info!(
                    "{job_label}: eval PSNR {eval:.2} dB at {}x{}",
                    original.height(),
                    original.width()
                );
                save_recon(
                    &render,
                    &cfg.out_dir.join(format!("recon_h{heads}")),
                    cfg.png,
                )?;
                let report = report(&fitted, low, source, cfg, Some(eval), original.dims())?;
                write_report(&cfg.out_dir.join(format!("runs/h{heads}")), &report)?;
                let row = vec![
                    heads.to_string(),
                    heads.count().to_string(),
                    cfg.alpha.to_string(),
                    report.params.to_string(),
                    f(report.train_psnr_db),
                    f(eval),
                ];
                Ok((heads.count(), row))
            }),
        ));
    }
    let total = jobs.len();
    let (mut rows, failures) = sweep(jobs);
    rows.sort_by_key(|r| r.0);
    let mut table = Table::new(
        HEADS_SCHEMA,
        &[
            "heads",
            "head_count",
            "alpha",
            "params",
            "train_psnr_db",
            "eval_psnr_db",
        ],
    );
    for (_, row) in rows {
        table.push(row);
    }
    let csv = cfg.out_dir.join("heads.csv");
    table.write(&csv)?;
    replot(&csv)?;
    finish(total, failures)?;
    Ok(table)
}

/// Multi-head model against parameter-matched SIREN and Fourier-feature
/// baselines, one budget per alpha.
///
/// Writes `compare.csv` (columns: budget, model, spec, params, train_psnr_db,
/// flops_per_image, flops_ratio), reconstructions and a side-by-side strip
/// per budget (target, multi-head, SIREN, Fourier features). FLOPs are
/// counted for an `eval_size` square render; the ratio is relative to the
/// multi-head model of the same budget.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Table> {
    expect_kind(cfg, ExperimentKind::Compare)?;
    create_dir(&cfg.out_dir)?;
    let path = cfg
        .image
        .as_deref()
        .ok_or_else(|| CliError::Config("missing --image".into()))?;
    let (img, source) = image_target(path, cfg.size)?;
    save_image(&img, cfg.out_dir.join("target.pgm"))?;
    let heads = cfg.heads[0];
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut total = 0;
    for &alpha in &cfg.alphas {
        let mh = ModelSpec::multi_head(heads, alpha);
        let budget = count_params(&mh)?;
        let mh_flops = count_flops(&mh, cfg.eval_size, cfg.eval_size)?.flops_per_image;
        let specs = [
            Ok(mh),
            match_params(ModelKind::Siren, budget),
            match_params(ModelKind::FourierFeature, budget),
        ];
        let mut strip = vec![img.clone()];
        for spec in specs {
            total += 1;
            let label = format!("budget={budget} model={}", kind_of(&spec));
            let outcome = (|| -> Result<Vec<String>> {
                let spec = spec?.with_seed(cfg.seed).with_epochs(cfg.epochs);
                let fitted = fit(&spec, &img, cfg, &label)?;
                let recon = evaluate(&fitted.model, img.height(), img.width())?;
                let name = format!("recon_{budget}_{}", spec.kind().as_str());
                save_recon(&recon, &cfg.out_dir.join(name), cfg.png)?;
                strip.push(recon);
                let report = report(
                    &fitted,
                    &img,
                    source.clone(),
                    cfg,
                    None,
                    (cfg.eval_size, cfg.eval_size),
                )?;
                write_report(
                    &cfg.out_dir
                        .join(format!("runs/{budget}_{}", spec.kind().as_str())),
                    &report,
                )?;
                let flops = report.flops.flops_per_image;
                Ok(vec![
                    budget.to_string(),
                    spec.kind().as_str().to_string(),
                    describe_spec(&spec),
                    report.params.to_string(),
                    f(report.train_psnr_db),
                    flops.to_string(),
                    f(flops as f64 / mh_flops as f64),
                ])
            })();
            match outcome {
                Ok(row) => rows.push((budget, kind_order(&row[1]), row)),
                Err(e) => {
                    warn!("{label} failed: {e}");
                    strip.push(Image::constant(img.height(), img.width(), 0.0)?);
                    failures.push((label, e.to_string()));
                }
            }
        }
        save_recon(
            &side_by_side(&strip)?,
            &cfg.out_dir.join(format!("side_by_side_{budget}")),
            cfg.png,
        )?;
    }
    rows.sort_by_key(|r| (r.0, r.1));
    let mut table = Table::new(
        COMPARE_SCHEMA,
        &[
            "budget",
            "model",
            "spec",
            "params",
            "train_psnr_db",
            "flops_per_image",
            "flops_ratio",
        ],
    );
    for (_, _, row) in rows {
        table.push(row);
    }
    table.write(&cfg.out_dir.join("compare.csv"))?;
    finish(total, failures)?;
    Ok(table)
}

fn kind_of(spec: &mhinr_core::Result<ModelSpec>) -> &'static str {
    spec.as_ref()
        .map(|s| s.kind().as_str())
        .unwrap_or("baseline")
}

fn kind_order(name: &str) -> usize {
    ["multi-head", "siren", "fourier-feature"]
        .iter()
        .position(|k| *k == name)
        .unwrap_or(usize::MAX)
}

fn describe_spec(spec: &ModelSpec) -> String {
    use mhinr_core::models::Architecture::*;
    let hidden = spec.hidden.len();
    let width = spec.last_width();
    match &spec.architecture {
        MultiHead { heads, alpha } => format!("heads={heads} alpha={alpha} body={hidden}x{width}"),
        Siren { omega0 } => format!("layers={hidden}x{width} omega0={omega0}"),
        FourierFeature { features, sigma } => {
            format!("layers={hidden}x{width} features={features} sigma={sigma}")
        }
    }
}

/// Horizontal strip of equally sized images separated by 2-pixel white gaps.
pub fn side_by_side(images: &[Image]) -> Result<Image> {
    const GAP: usize = 2;
    let (h, w) = images
        .first()
        .map(Image::dims)
        .ok_or_else(|| CliError::Config("nothing to place side by side".into()))?;
    if images.iter().any(|img| img.dims() != (h, w)) {
        return Err(CliError::Config(
            "side-by-side images must share dimensions".into(),
        ));
    }
    let total = images.len() * w + (images.len() - 1) * GAP;
    Ok(Image::from_fn(h, total, |r, c| {
        let (i, x) = (c / (w + GAP), c % (w + GAP));
        if x < w {
            images[i].get(r, x)
        } else {
            1.0
        }
    })?)
}

/// Writes a Perlin target and returns it with the path written.
pub fn cmd_perlin(cfg: &ExperimentConfig) -> Result<(Image, PathBuf)> {
    expect_kind(cfg, ExperimentKind::Perlin)?;
    let (img, _) = perlin_target(cfg, cfg.octaves[0])?;
    let out = match &cfg.out {
        Some(path) => path.clone(),
        None => {
            create_dir(&cfg.out_dir)?;
            cfg.out_dir.join("perlin.pgm")
        }
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_image(&img, &out)?;
    Ok((img, out))
}

/// Regenerates the SVG next to a sweep CSV from the CSV alone.
pub fn replot(csv: &Path) -> Result<PathBuf> {
    let table = Table::read(csv)?;
    let plot = match table.schema.as_str() {
        OCTAVES_SCHEMA => octaves_plot(&table)?,
        HEADS_SCHEMA => heads_plot(&table)?,
        other => {
            return Err(CliError::Report(format!(
                "no plot defined for schema {other}"
            )))
        }
    };
    let svg = csv.with_extension("svg");
    write_text(&svg, &plot.to_svg())?;
    Ok(svg)
}

fn octaves_plot(table: &Table) -> Result<LinePlot> {
    let octaves = table.floats("octaves")?;
    let psnr = table.floats("train_psnr_db")?;
    let heads_col = table.column("heads")?;
    let counts = table.floats("head_count")?;
    let mut order: Vec<(f64, String)> = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let name = &row[heads_col];
        if !order.iter().any(|(_, n)| n == name) {
            order.push((counts[i], name.clone()));
        }
    }
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut plot = LinePlot::new("Spectral bias", "Perlin octaves", "train PSNR (dB)");
    for (_, name) in order {
        let points = (0..table.rows.len())
            .filter(|&i| table.rows[i][heads_col] == name)
            .map(|i| (octaves[i], psnr[i]))
            .collect();
        plot = plot.with_series(&format!("{name} heads"), points);
    }
    Ok(plot)
}

fn heads_plot(table: &Table) -> Result<LinePlot> {
    let x: Vec<f64> = table
        .floats("head_count")?
        .iter()
        .map(|c| c.log2())
        .collect();
    let train = table.floats("train_psnr_db")?;
    let eval = table.floats("eval_psnr_db")?;
    Ok(
        LinePlot::new("Generalization", "log2(head count)", "PSNR (dB)")
            .with_series("train (low-res)", x.iter().copied().zip(train).collect())
            .with_series("eval (original)", x.iter().copied().zip(eval).collect()),
    )
}
