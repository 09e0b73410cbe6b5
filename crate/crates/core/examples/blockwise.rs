//! Score a frame block by block and print the per-block CSV.

use std::error::Error;

use prnu_sda::correlate::{blockwise_match, BlockGrid, MatchOptions};
use prnu_sda::denoise::{extract_residual, DenoiseParams};
use prnu_sda::fingerprint::{extract_fingerprint, ExtractionMode};
use prnu_sda::media_io::LumaPlane;
use prnu_sda::synthcam::{corpus_stream, gen_model, SceneSpec, Scenes};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let params = DenoiseParams::default();
    let camera = gen_model(160, 128, 0.02, 3.0, 3)?;
    let flat = Scenes::PerFrame {
        spec: SceneSpec::Flat { luminance: 128.0 },
        seed: 0,
    };
    let fp = extract_fingerprint(
        corpus_stream(camera.clone(), flat, 0, 30)?,
        ExtractionMode::Conventional,
        &params,
    )?;

    // Left half lit, right half nearly black: the dark blocks carry little
    // PRNU signal.
    let scene = LumaPlane::from_fn(160, 128, |x, _| if x < 80 { 140.0 } else { 18.0 });
    let query = camera.frame(&scene, 500)?;
    let residual = extract_residual(&query, &params)?;

    let grid = BlockGrid::new(160, 128, 64)?;
    let report = blockwise_match(&residual, &fp, &query, &grid, &MatchOptions::default())?;
    report.write_csv(std::io::stdout())?;
    println!(
        "{} of {} blocks matched, frame decision {}",
        report.positive_tiles(),
        report.tiles.len(),
        report.frame_decision()
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
