//! Decode netpbm and YUV4MPEG2 input into luma planes.

use std::error::Error;
use std::io::Cursor;

use prnu_sda::media_io::{decode_netpbm, open_y4m, to_luma, Colorspace, LumaPlane, Y4mWriter};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // A 3x2 ASCII graymap with a comment in the header.
    let pgm = b"P2\n# written by hand\n3 2\n255\n0 128 255\n10 20 30\n";
    let frame = decode_netpbm(pgm)?;
    let luma = to_luma(&frame)?;
    println!(
        "pgm: {}x{}, mean {:.2}",
        luma.width(),
        luma.height(),
        luma.mean()
    );

    let mut writer = Y4mWriter::new(Vec::new(), 4, 4, Colorspace::C420)?;
    for level in [16.0, 128.0, 240.0] {
        writer.write_luma(&LumaPlane::filled(4, 4, level))?;
    }
    let bytes = writer.finish()?;

    let stream = open_y4m(Cursor::new(bytes))?;
    println!("y4m: {:?} {:?}", stream.dimensions(), stream.colorspace());
    for item in stream.luma() {
        let (index, plane) = item?;
        println!("  frame {index}: mean {:.1}", plane.mean());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
