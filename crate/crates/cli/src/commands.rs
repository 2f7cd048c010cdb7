use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use rntk_core::dynamics::{self, GenConfig, OdeClassSpec, Spread};
use rntk_core::embedding::{read_embedding, write_embedding};
use rntk_core::gram::{read_matrix, write_matrix, GramMatrix};
use rntk_core::metrics::separation_metrics;
use rntk_core::pipeline::{self, ExperimentConfig, Method};
use rntk_core::plot::{render_panels, render_scatter};
use rntk_core::series::{read_sequences, write_sequences};
use rntk_core::tsne::{format_loss_trace, tsne_embed, TsneConfig};
use rntk_core::{kpca, rntk, RntkParams};
use serde_json::json;

use crate::args::*;
use crate::error::{ensure_dir, write_file, CliError};
use crate::manifest::{sidecar_path, RunManifest};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Gram(a) => gram(a),
        Command::Pca(a) => pca(a),
        Command::Tsne(a) => tsne(a),
        Command::Eval(a) => eval(a),
        Command::Plot(a) => plot(a),
        Command::ReproduceFigure1(a) => reproduce(a),
    }
}

fn params(a: &KernelParamArgs) -> Result<RntkParams> {
    Ok(RntkParams::new(a.sigma_w, a.sigma_u, a.sigma_b)?)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = GenConfig {
        n_per_class: a.n_per_class,
        seq_len: a.length,
        drop_prob: a.drop_prob,
        t_start: a.t_start,
        t_step: a.t_step,
        substeps: a.substeps,
        x0: a.x0,
        v0: a.v0,
        spread: match a.spread {
            SpreadArg::Variance => Spread::Variance,
            SpreadArg::StdDev => Spread::StdDev,
        },
        seed: a.seed,
    };
    let classes = OdeClassSpec::default_classes();
    let ds = dynamics::make_dataset(&classes, &cfg)?;
    write_sequences(&ds, &a.out)?;
    println!("wrote {} series to {}", ds.len(), a.out.display());

    let mut m = RunManifest::new("generate", json!({ "generation": cfg, "classes": classes }));
    m.seed = Some(a.seed);
    m.outputs.push(a.out.clone());
    m.finish(start.elapsed(), &sidecar_path(&a.out))
}

fn gram(a: GramArgs) -> Result<()> {
    let start = Instant::now();
    let ds = read_sequences(&a.input)?;
    let p = params(&a.params)?;
    let gm = match a.mode {
        GramMode::RntkKernel => rntk::rntk_gram(&ds, &p)?,
        GramMode::RntkDistance => rntk::rntk_distance_matrix(&rntk::rntk_gram(&ds, &p)?)?,
        GramMode::EuclidPadded => dynamics::euclidean_distance_matrix(&dynamics::zero_pad(&ds))?,
    };
    write_matrix(&gm, &a.out)?;
    println!(
        "wrote {}x{} {} matrix to {}",
        gm.len(),
        gm.len(),
        gm.kind(),
        a.out.display()
    );

    let mode = a
        .mode
        .to_possible_value()
        .map(|v| v.get_name().to_owned())
        .unwrap_or_default();
    let mut m = RunManifest::new("gram", json!({ "mode": mode, "params": p }));
    m.inputs.push(a.input);
    m.outputs.push(a.out.clone());
    m.finish(start.elapsed(), &sidecar_path(&a.out))
}

/// Labels for `gm`'s rows looked up by id in a sequence file.
fn labels_for(gm: &GramMatrix, labels: Option<&Path>) -> Result<Vec<Option<i32>>> {
    let Some(path) = labels else {
        return Ok(vec![None; gm.len()]);
    };
    let ds = read_sequences(path)?;
    let by_id: HashMap<&str, Option<i32>> =
        ds.series().iter().map(|s| (s.id(), s.label())).collect();
    gm.ids()
        .iter()
        .map(|id| {
            by_id.get(id.as_str()).copied().ok_or_else(|| {
                CliError::Usage(format!("id {id:?} not found in {}", path.display()))
            })
        })
        .collect()
}

fn pca(a: PcaArgs) -> Result<()> {
    let start = Instant::now();
    let k = read_matrix(&a.input)?;
    let labels = labels_for(&k, a.labels.as_deref())?;
    let fit = kpca::kpca_fit(&k, a.components, labels)?;
    write_embedding(&fit.embedding, &a.out)?;
    if fit.truncated {
        eprintln!(
            "warning: only {} of {} components have non-zero variance",
            fit.embedding.dims(),
            a.components
        );
    }
    println!(
        "wrote {}-D embedding to {}",
        fit.embedding.dims(),
        a.out.display()
    );

    let mut m = RunManifest::new(
        "pca",
        json!({ "components": a.components, "eigenvalues": fit.model.eigenvalues }),
    );
    m.inputs.push(a.input);
    m.inputs.extend(a.labels);
    m.outputs.push(a.out.clone());
    m.finish(start.elapsed(), &sidecar_path(&a.out))
}

fn default_loss_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".loss.csv");
    out.with_file_name(name)
}

fn tsne(a: TsneArgs) -> Result<()> {
    let start = Instant::now();
    let d = read_matrix(&a.input)?;
    let labels = labels_for(&d, a.labels.as_deref())?;
    let cfg = TsneConfig {
        perplexity: a.perplexity,
        iterations: a.iterations,
        seed: a.seed,
        ..TsneConfig::default()
    };
    let res = tsne_embed(&d, &cfg, labels)?;
    let loss_out = a.loss_out.unwrap_or_else(|| default_loss_path(&a.out));
    write_embedding(&res.embedding, &a.out)?;
    write_file(&loss_out, format_loss_trace(&res.loss_trace))?;
    if !res.unconverged_rows.is_empty() {
        eprintln!(
            "warning: perplexity search did not converge for {} rows",
            res.unconverged_rows.len()
        );
    }
    println!(
        "wrote embedding to {} (KL {:.4} -> {:.4})",
        a.out.display(),
        res.initial_loss(),
        res.final_loss()
    );

    let mut m = RunManifest::new("tsne", json!({ "tsne": cfg }));
    m.seed = Some(a.seed);
    m.inputs.push(a.input);
    m.inputs.extend(a.labels);
    m.outputs.extend([a.out.clone(), loss_out]);
    m.finish(start.elapsed(), &sidecar_path(&a.out))
}

fn eval(a: EvalArgs) -> Result<()> {
    let start = Instant::now();
    let emb = read_embedding(&a.input)?;
    let metrics = separation_metrics(&emb, a.seed)?;
    let text = serde_json::to_string_pretty(&metrics)? + "\n";
    let mut m = RunManifest::new("eval", json!({ "kmeans_seed": a.seed }));
    m.seed = Some(a.seed);
    m.inputs.push(a.input.clone());
    match &a.out {
        Some(out) => {
            write_file(out, &text)?;
            m.outputs.push(out.clone());
            println!(
                "1-NN accuracy {:.3}, k-means ARI {:.3}",
                metrics.one_nn_accuracy, metrics.kmeans_ari
            );
            m.finish(start.elapsed(), &sidecar_path(out))
        }
        None => {
            print!("{text}");
            m.finish(
                start.elapsed(),
                &sidecar_path(&a.input.with_extension("eval")),
            )
        }
    }
}

fn plot(a: PlotArgs) -> Result<()> {
    let start = Instant::now();
    let emb = read_embedding(&a.input)?;
    write_file(&a.out, render_scatter(&emb, &a.title)?)?;
    println!("wrote {}", a.out.display());

    let mut m = RunManifest::new("plot", json!({ "title": a.title }));
    m.inputs.push(a.input);
    m.outputs.push(a.out.clone());
    m.finish(start.elapsed(), &sidecar_path(&a.out))
}

fn reproduce(a: ReproduceArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::seeded(a.seed);
    cfg.params = params(&a.params)?;
    cfg.tsne.perplexity = a.perplexity;
    cfg.tsne.iterations = a.iterations;

    let dataset = dynamics::make_dataset(&cfg.classes, &cfg.generation)?;
    let dir = &a.out;
    ensure_dir(dir)?;
    let data_path = dir.join("data.jsonl");
    write_sequences(&dataset, &data_path)?;
    let result = pipeline::run_on_dataset(dataset, &cfg)?;

    let mut outputs = vec![data_path];
    for (name, gm) in [
        ("rntk_kernel.csv", &result.rntk_kernel),
        ("rntk_distance.csv", &result.rntk_distance),
        ("padded_kernel.csv", &result.padded_kernel),
        ("padded_distance.csv", &result.padded_distance),
    ] {
        let path = dir.join(name);
        write_matrix(gm, &path)?;
        outputs.push(path);
    }
    for panel in &result.panels {
        let path = dir.join(format!("{}.csv", panel.method.slug()));
        write_embedding(&panel.embedding, &path)?;
        outputs.push(path);
        if let Some(trace) = &panel.loss_trace {
            let path = dir.join(format!("{}.loss.csv", panel.method.slug()));
            write_file(&path, format_loss_trace(trace))?;
            outputs.push(path);
        }
    }

    let figure: Vec<(&str, &rntk_core::Embedding)> = Method::ALL
        .iter()
        .map(|&method| (method.title(), &result.panel(method).embedding))
        .collect();
    let figure_path = dir.join("figure1.svg");
    write_file(&figure_path, render_panels(&figure, 2)?)?;
    outputs.push(figure_path);

    let checks = result.threshold_checks();
    let panels: serde_json::Map<String, serde_json::Value> = result
        .panels
        .iter()
        .map(|p| Ok((p.method.slug().to_owned(), serde_json::to_value(p.metrics)?)))
        .collect::<Result<_>>()?;
    let metrics_path = dir.join("metrics.json");
    let report = json!({ "panels": panels, "thresholds": checks });
    write_file(&metrics_path, serde_json::to_string_pretty(&report)? + "\n")?;
    outputs.push(metrics_path);

    for p in &result.panels {
        println!(
            "{:<22} 1-NN {:.3}  ARI {:.3}",
            p.method.title(),
            p.metrics.one_nn_accuracy,
            p.metrics.kmeans_ari
        );
    }
    for c in &checks {
        println!(
            "{} {:<28} {:.3} (threshold {:.2})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }

    let mut m = RunManifest::new("reproduce-figure1", serde_json::to_value(&cfg)?);
    m.seed = Some(a.seed);
    m.outputs = outputs;
    m.finish(start.elapsed(), &dir.join("manifest.json"))?;

    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failed.join(", ")))
    }
}
