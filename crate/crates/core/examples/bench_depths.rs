//! Benchmark extraction across averaging depths and plot-ready ROC data.

use std::error::Error;

use prnu_sda::analysis::{compute_roc, run_bench, BenchConfig, BenchCorpus, BenchOptions, Query};
use prnu_sda::fingerprint::ExtractionMode;
use prnu_sda::synthcam::{corpus_frame, gen_model, SceneSpec, Scenes};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let spec = SceneSpec::Textured {
        cutoff: 8.0,
        contrast: 60.0,
    };
    let camera = gen_model(96, 96, 0.01, 3.0, 1)?;
    let other = gen_model(96, 96, 0.01, 3.0, 2)?;
    let training = Scenes::PerFrame { spec, seed: 3 };
    let held_out = Scenes::PerFrame { spec, seed: 4 };

    let frames = (0..60)
        .map(|i| corpus_frame(&camera, &training, i))
        .collect::<Result<_, _>>()?;
    let mut queries = Vec::new();
    for i in 0..6 {
        queries.push(Query {
            frame: corpus_frame(&camera, &held_out, 100 + i)?,
            positive: true,
        });
        queries.push(Query {
            frame: corpus_frame(&other, &held_out, 200 + i)?,
            positive: false,
        });
    }
    let corpus = BenchCorpus::new(frames, queries)?;

    let mut configs = BenchConfig::sda_sweep(&[1, 5, 20]);
    configs.push(BenchConfig::new(ExtractionMode::Stride(20)));
    let opts = BenchOptions {
        block: Some(32),
        ..BenchOptions::default()
    };
    let report = run_bench(&configs, &corpus, &opts)?;
    report.write_csv(std::io::stdout())?;

    for row in &report.rows {
        println!(
            "{:>12}: auc {:.4}",
            row.mode,
            compute_roc(&row.scores)?.auc()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
