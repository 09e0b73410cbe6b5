//! Locate a cropped query inside the fingerprint's frame.

use std::error::Error;

use prnu_sda::correlate::{correlate_search, MatchOptions};
use prnu_sda::denoise::{extract_residual, DenoiseParams};
use prnu_sda::fingerprint::{extract_fingerprint, ExtractionMode};
use prnu_sda::synthcam::{corpus_stream, gen_model, SceneSpec, Scenes};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let params = DenoiseParams::default();
    let camera = gen_model(128, 128, 0.02, 3.0, 8)?;
    let flat = Scenes::PerFrame {
        spec: SceneSpec::Flat { luminance: 128.0 },
        seed: 0,
    };
    let fp = extract_fingerprint(
        corpus_stream(camera.clone(), flat.clone(), 0, 40)?,
        ExtractionMode::Sda(4),
        &params,
    )?;

    let full = camera.frame(&*flat.scene(77, 128, 128)?, 77)?;
    let (x, y) = (21, 34);
    let crop = full.crop(x, y, 80, 64);
    let residual = extract_residual(&crop, &params)?;
    let r = correlate_search(&residual, &fp, &crop, &MatchOptions::default())?;
    println!(
        "cropped at ({x}, {y}); found at {:?} with pce {:.1}",
        r.peak_shift, r.pce
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
