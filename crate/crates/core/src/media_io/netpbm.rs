//! Netpbm grayscale and colour maps (`P2`, `P3`, `P5`, `P6`).
//!
//! Samples are rescaled from `[0, maxval]` onto `[0, 255]` so every decoded
//! frame shares the denoiser's reference scale.

use super::{FrameBuffer, MediaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    Binary,
}

/// Header fields common to all four supported netpbm variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetpbmHeader {
    pub magic: [u8; 2],
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub maxval: u32,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    /// Skips whitespace and `#` comments (which run to the end of the line).
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn header_number(&mut self, field: &'static str) -> Result<u32, MediaError> {
        let tok = self
            .token()
            .ok_or(MediaError::MalformedHeader(format!("missing {field}")))?;
        parse_decimal(tok).ok_or_else(|| {
            MediaError::MalformedHeader(format!(
                "{field} is not a number: {:?}",
                String::from_utf8_lossy(tok)
            ))
        })
    }
}

fn parse_decimal(tok: &[u8]) -> Option<u32> {
    if tok.is_empty() || !tok.iter().all(u8::is_ascii_digit) {
        return None;
    }
    std::str::from_utf8(tok).ok()?.parse().ok()
}

fn parse_header(cursor: &mut Cursor<'_>) -> Result<(NetpbmHeader, Encoding), MediaError> {
    let magic = match cursor.bytes.get(..2) {
        Some(m) => [m[0], m[1]],
        None => return Err(MediaError::UnsupportedMagic(cursor.bytes.to_vec())),
    };
    let (channels, encoding) = match &magic {
        b"P2" => (1, Encoding::Ascii),
        b"P3" => (3, Encoding::Ascii),
        b"P5" => (1, Encoding::Binary),
        b"P6" => (3, Encoding::Binary),
        _ => return Err(MediaError::UnsupportedMagic(magic.to_vec())),
    };
    cursor.pos = 2;
    if !cursor
        .bytes
        .get(2)
        .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
    {
        return Err(MediaError::MalformedHeader(
            "no separator after magic".into(),
        ));
    }
    let width = cursor.header_number("width")? as usize;
    let height = cursor.header_number("height")? as usize;
    let maxval = cursor.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(MediaError::MalformedHeader(format!(
            "empty raster {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(MediaError::MalformedHeader(format!(
            "maxval {maxval} outside 1..=65535"
        )));
    }
    Ok((
        NetpbmHeader {
            magic,
            width,
            height,
            channels,
            maxval,
        },
        encoding,
    ))
}

/// Decodes an in-memory netpbm file.
pub fn decode_netpbm(bytes: &[u8]) -> Result<FrameBuffer, MediaError> {
    let mut cursor = Cursor { bytes, pos: 0 };
    let (header, encoding) = parse_header(&mut cursor)?;
    let count = header.width * header.height * header.channels;
    let scale = 255.0 / header.maxval as f64;
    let rescale = |v: u32| -> Result<f32, MediaError> {
        if v > header.maxval {
            return Err(MediaError::InvalidSample(v as f64));
        }
        Ok((v as f64 * scale) as f32)
    };

    let mut data = Vec::with_capacity(count);
    match encoding {
        Encoding::Ascii => {
            for _ in 0..count {
                let tok = cursor.token().ok_or(MediaError::TruncatedPayload {
                    expected: count,
                    found: data.len(),
                })?;
                let v = parse_decimal(tok).ok_or_else(|| {
                    MediaError::MalformedPayload(String::from_utf8_lossy(tok).into_owned())
                })?;
                data.push(rescale(v)?);
            }
        }
        Encoding::Binary => {
            // Exactly one whitespace byte separates maxval from the raster.
            match bytes.get(cursor.pos) {
                Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
                _ => {
                    return Err(MediaError::MalformedHeader(
                        "no separator after maxval".into(),
                    ))
                }
            }
            let raster = &bytes[cursor.pos..];
            let sample_bytes = if header.maxval > 255 { 2 } else { 1 };
            if raster.len() < count * sample_bytes {
                return Err(MediaError::TruncatedPayload {
                    expected: count,
                    found: raster.len() / sample_bytes,
                });
            }
            if sample_bytes == 1 {
                for &b in &raster[..count] {
                    data.push(rescale(b as u32)?);
                }
            } else {
                for pair in raster[..2 * count].chunks_exact(2) {
                    data.push(rescale(u16::from_be_bytes([pair[0], pair[1]]) as u32)?);
                }
            }
        }
    }
    Ok(FrameBuffer::from_parts_unchecked(
        header.width,
        header.height,
        header.channels,
        data,
        0,
    ))
}

/// Reads only the header of a netpbm file.
pub fn read_netpbm_header(bytes: &[u8]) -> Result<NetpbmHeader, MediaError> {
    parse_header(&mut Cursor { bytes, pos: 0 }).map(|(h, _)| h)
}

/// Encodes a frame as 8-bit binary netpbm (`P5` for one channel, `P6` for
/// three). Samples are rounded to the nearest integer.
pub fn encode_netpbm(frame: &FrameBuffer) -> Vec<u8> {
    let magic = if frame.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(frame.data().iter().map(|&v| quantize(v)));
    out
}

/// Encodes a frame as plain (ASCII) netpbm, `P2` or `P3`.
pub fn encode_netpbm_ascii(frame: &FrameBuffer) -> Vec<u8> {
    let magic = if frame.channels() == 1 { "P2" } else { "P3" };
    let mut out = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height());
    let row_len = frame.width() * frame.channels();
    for row in frame.data().chunks(row_len) {
        let line: Vec<String> = row.iter().map(|&v| quantize(v).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out.into_bytes()
}

pub(crate) fn quantize(v: f32) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}
