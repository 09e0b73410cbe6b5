//! Wavelet denoising and the noise residual of a single frame.

use std::error::Error;

use prnu_sda::denoise::{extract_residual, wavelet_denoise, DenoiseParams};
use prnu_sda::synthcam::{gen_model, render_scene, SceneSpec};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let camera = gen_model(128, 128, 0.02, 3.0, 1)?;
    let params = DenoiseParams::default();

    for (name, spec) in [
        ("flat", SceneSpec::Flat { luminance: 128.0 }),
        (
            "textured",
            SceneSpec::Textured {
                cutoff: 8.0,
                contrast: 60.0,
            },
        ),
    ] {
        let scene = render_scene(spec, 128, 128, 7)?;
        let frame = camera.frame(&scene, 0)?;
        let smooth = wavelet_denoise(&frame, &params)?;
        let residual = extract_residual(&frame, &params)?;
        println!(
            "{name:>8}: frame var {:8.2}  denoised var {:8.2}  residual var {:.2}",
            frame.variance(),
            smooth.variance(),
            residual.plane().variance()
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
