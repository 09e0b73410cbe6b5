//! Decide whether query frames came from a fingerprinted camera.

use std::error::Error;

use prnu_sda::correlate::{correlate_aligned, MatchOptions};
use prnu_sda::denoise::{extract_residual, DenoiseParams};
use prnu_sda::fingerprint::{extract_fingerprint, ExtractionMode};
use prnu_sda::synthcam::{corpus_frame, corpus_stream, gen_model, SceneSpec, Scenes};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let params = DenoiseParams::default();
    let camera = gen_model(128, 128, 0.02, 3.0, 1)?;
    let stranger = gen_model(128, 128, 0.02, 3.0, 2)?;
    let flat = Scenes::PerFrame {
        spec: SceneSpec::Flat { luminance: 128.0 },
        seed: 0,
    };
    let fp = extract_fingerprint(
        corpus_stream(camera.clone(), flat, 0, 50)?,
        ExtractionMode::Sda(5),
        &params,
    )?;

    let textured = Scenes::PerFrame {
        spec: SceneSpec::Textured {
            cutoff: 4.0,
            contrast: 40.0,
        },
        seed: 9,
    };
    for (who, model) in [("same camera", &camera), ("other camera", &stranger)] {
        let query = corpus_frame(model, &textured, 1000)?;
        let residual = extract_residual(&query, &params)?;
        let r = correlate_aligned(&residual, &fp, &query, &MatchOptions::default())?;
        println!(
            "{who:>12}: pce {:10.2}  peak at {:?}  match {}",
            r.pce, r.peak_shift, r.decision
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
