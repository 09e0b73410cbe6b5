//! Save a fingerprint to disk and read it back.

use std::error::Error;

use prnu_sda::denoise::DenoiseParams;
use prnu_sda::fingerprint::{
    extract_fingerprint, load_fingerprint, save_fingerprint, ExtractionMode,
};
use prnu_sda::synthcam::{corpus_stream, gen_model, SceneSpec, Scenes};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let camera = gen_model(64, 48, 0.02, 3.0, 5)?;
    let scenes = Scenes::PerFrame {
        spec: SceneSpec::Flat { luminance: 100.0 },
        seed: 1,
    };
    let stream = corpus_stream(camera, scenes, 0, 40)?;
    let fp = extract_fingerprint(stream, ExtractionMode::Sda(8), &DenoiseParams::default())?;

    let mut bytes = Vec::new();
    save_fingerprint(&fp, &mut bytes)?;
    let back = load_fingerprint(&bytes[..])?;
    assert_eq!(back, fp);
    println!(
        "{} bytes, {:?}, mode {}, {} frames, {} denoise ops",
        bytes.len(),
        back.dimensions(),
        back.mode,
        back.frames_consumed,
        back.denoise_ops
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
