//! Binary fingerprint files.
//!
//! Layout (little-endian): magic `PRNUFP1\0`, `u16` version, `u32` width,
//! `u32` height, `u32` frames consumed, `u32` denoise operations, `u32`
//! depth, `u8` mode tag, `width * height` `f32` samples row-major, then a
//! `u32` CRC-32 of the sample bytes.

use std::io::{Read, Write};
use std::path::Path;

use super::{ExtractionMode, FingerprintError, FingerprintEstimate};
use crate::media_io::LumaPlane;

const MAGIC: &[u8; 8] = b"PRNUFP1\0";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 8 + 2 + 4 * 5 + 1;

fn to_u32(v: u64, what: &str) -> Result<u32, FingerprintError> {
    u32::try_from(v).map_err(|_| FingerprintError::BadParameter(format!("{what} {v} exceeds u32")))
}

pub fn save_fingerprint<W: Write>(
    fp: &FingerprintEstimate,
    mut sink: W,
) -> Result<(), FingerprintError> {
    if fp.khat.data().iter().any(|v| !v.is_finite()) {
        return Err(FingerprintError::BadParameter(
            "fingerprint has non-finite samples".into(),
        ));
    }
    let (w, h) = fp.dimensions();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * w * h + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for (v, what) in [
        (w as u64, "width"),
        (h as u64, "height"),
        (fp.frames_consumed, "frames_consumed"),
        (fp.denoise_ops, "denoise_ops"),
        (fp.depth() as u64, "depth"),
    ] {
        out.extend_from_slice(&to_u32(v, what)?.to_le_bytes());
    }
    out.push(fp.mode.tag());
    let plane_start = out.len();
    for v in fp.khat.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out[plane_start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    sink.write_all(&out)?;
    sink.flush()?;
    Ok(())
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn load_fingerprint<R: Read>(mut source: R) -> Result<FingerprintEstimate, FingerprintError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let prefix = &bytes[..bytes.len().min(MAGIC.len())];
    if prefix != &MAGIC[..prefix.len()] {
        return Err(FingerprintError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(FingerprintError::TruncatedFile);
    }
    let version = u16::from_le_bytes([bytes[8], bytes[9]]);
    if version != VERSION {
        return Err(FingerprintError::VersionMismatch(version));
    }
    let width = u32_at(&bytes, 10) as usize;
    let height = u32_at(&bytes, 14) as usize;
    let frames_consumed = u32_at(&bytes, 18) as u64;
    let denoise_ops = u32_at(&bytes, 22) as u64;
    let depth = u32_at(&bytes, 26) as usize;
    let tag = bytes[30];
    let mode = ExtractionMode::from_tag(tag, depth)
        .ok_or_else(|| FingerprintError::Corrupt(format!("mode tag {tag} with depth {depth}")))?;

    let plane_len = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| FingerprintError::Corrupt("dimensions overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() < plane_len + 4 {
        return Err(FingerprintError::TruncatedFile);
    }
    if body.len() > plane_len + 4 {
        return Err(FingerprintError::Corrupt(
            "trailing bytes after checksum".into(),
        ));
    }
    let plane_bytes = &body[..plane_len];
    let stored = u32_at(body, plane_len);
    let computed = crc32fast::hash(plane_bytes);
    if stored != computed {
        return Err(FingerprintError::ChecksumMismatch { stored, computed });
    }
    let data = plane_bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let khat = LumaPlane::new(width, height, data)
        .map_err(|e| FingerprintError::Corrupt(e.to_string()))?;
    Ok(FingerprintEstimate {
        khat,
        frames_consumed,
        denoise_ops,
        mode,
    })
}

pub fn write_fingerprint_file(
    fp: &FingerprintEstimate,
    path: &Path,
) -> Result<(), FingerprintError> {
    let file = std::fs::File::create(path)?;
    save_fingerprint(fp, std::io::BufWriter::new(file))
}

pub fn read_fingerprint_file(path: &Path) -> Result<FingerprintEstimate, FingerprintError> {
    load_fingerprint(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FingerprintEstimate {
        FingerprintEstimate {
            khat: LumaPlane::from_fn(4, 4, |x, y| (x as f32 - 1.5) * 0.01 - y as f32 * 1e-3),
            frames_consumed: 120,
            denoise_ops: 4,
            mode: ExtractionMode::Sda(30),
        }
    }

    fn encoded() -> Vec<u8> {
        let mut buf = Vec::new();
        save_fingerprint(&sample(), &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_exact() {
        let buf = encoded();
        assert_eq!(buf.len(), HEADER_LEN + 64 + 4);
        assert_eq!(&buf[..8], MAGIC);
        let back = load_fingerprint(&buf[..]).unwrap();
        assert_eq!(back, sample());
        let mut again = Vec::new();
        save_fingerprint(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn negative_cases() {
        let mut buf = encoded();
        buf[..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            load_fingerprint(&buf[..]),
            Err(FingerprintError::BadMagic)
        ));

        let buf = encoded();
        assert!(matches!(
            load_fingerprint(&buf[..HEADER_LEN + 10]),
            Err(FingerprintError::TruncatedFile)
        ));
        assert!(matches!(
            load_fingerprint(&buf[..5]),
            Err(FingerprintError::TruncatedFile)
        ));

        let mut buf = encoded();
        buf[8] = 2;
        assert!(matches!(
            load_fingerprint(&buf[..]),
            Err(FingerprintError::VersionMismatch(2))
        ));

        let mut buf = encoded();
        buf[HEADER_LEN + 3] ^= 0x40;
        assert!(matches!(
            load_fingerprint(&buf[..]),
            Err(FingerprintError::ChecksumMismatch { .. })
        ));
    }
}
