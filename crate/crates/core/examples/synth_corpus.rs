//! Write a synthetic corpus as YUV4MPEG2 and read it back.

use std::error::Error;
use std::io::Cursor;

use prnu_sda::media_io::open_y4m;
use prnu_sda::synthcam::{gen_model, write_y4m_corpus, SceneSpec, Scenes};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let camera = gen_model(96, 64, 0.02, 3.0, 2024)?;
    let scenes = Scenes::Held {
        spec: SceneSpec::Textured {
            cutoff: 8.0,
            contrast: 60.0,
        },
        seed: 1,
        hold: 4,
    };
    let bytes = write_y4m_corpus(&camera, &scenes, 12, Vec::new())?;
    println!("{} bytes for 12 frames", bytes.len());

    let stream = open_y4m(Cursor::new(bytes))?;
    let means: Vec<String> = stream
        .luma()
        .map(|r| r.map(|(_, p)| format!("{:.1}", p.mean())))
        .collect::<Result<_, _>>()?;
    println!("frame means: {}", means.join(" "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
