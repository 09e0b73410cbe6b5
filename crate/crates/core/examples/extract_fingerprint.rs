//! Estimate a camera fingerprint conventionally and with frame averaging,
//! then compare both against the true PRNU field.

use std::error::Error;

use prnu_sda::correlate::ncc_surface;
use prnu_sda::denoise::DenoiseParams;
use prnu_sda::fingerprint::{extract_with, ExtractOptions, ExtractionMode};
use prnu_sda::synthcam::{corpus_stream, gen_model, SceneSpec, Scenes};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let camera = gen_model(128, 128, 0.02, 3.0, 42)?;
    let scenes = Scenes::PerFrame {
        spec: SceneSpec::Flat { luminance: 128.0 },
        seed: 0,
    };
    let opts = ExtractOptions::with_params(DenoiseParams::default());

    for mode in [
        ExtractionMode::Conventional,
        ExtractionMode::Sda(10),
        ExtractionMode::Stride(10),
    ] {
        let stream = corpus_stream(camera.clone(), scenes.clone(), 0, 100)?;
        let report = extract_with(stream, mode, &opts)?;
        let fp = &report.estimate;
        let similarity = ncc_surface(&fp.khat, &camera.k_field)?.at(0, 0);
        println!(
            "{mode:>14}: {:3} frames, {:3} denoise ops, {:7.4}s, ncc with truth {similarity:.3}",
            fp.frames_consumed,
            fp.denoise_ops,
            report.elapsed.as_secs_f64()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
