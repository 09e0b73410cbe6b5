//! YUV4MPEG2 reading and writing.
//!
//! Only the luma plane of each frame is decoded; chroma bytes are skipped.

use std::io::{self, BufRead, BufReader, Read, Write};

use super::netpbm::quantize;
use super::{Colorspace, FrameBuffer, FrameStream, LumaPlane, MediaError};

const SIGNATURE: &[u8] = b"YUV4MPEG2";
const MAX_HEADER_LEN: usize = 4096;

/// Parsed stream header. Tags other than `W`, `H` and `C` are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Y4mHeader {
    pub width: usize,
    pub height: usize,
    pub colorspace: Colorspace,
    pub other_tags: Vec<String>,
}

impl Y4mHeader {
    fn parse(line: &[u8]) -> Result<Self, MediaError> {
        let line = std::str::from_utf8(line)
            .map_err(|_| MediaError::BadSignature("header is not ASCII".into()))?;
        let mut parts = line.split(' ');
        if parts.next().map(str::as_bytes) != Some(SIGNATURE) {
            return Err(MediaError::BadSignature(format!(
                "expected YUV4MPEG2, found {:?}",
                line.chars().take(16).collect::<String>()
            )));
        }
        let (mut width, mut height, mut colorspace) = (None, None, Colorspace::C420jpeg);
        let mut other_tags = Vec::new();
        for tag in parts.filter(|t| !t.is_empty()) {
            let mut chars = tag.chars();
            let key = chars.next();
            let value = chars.as_str();
            match key {
                Some('W') => width = value.parse::<usize>().ok(),
                Some('H') => height = value.parse::<usize>().ok(),
                Some('C') => colorspace = Colorspace::from_y4m_tag(value)?,
                _ => other_tags.push(tag.to_string()),
            }
        }
        match (width, height) {
            (Some(w), Some(h)) if w > 0 && h > 0 => Ok(Self {
                width: w,
                height: h,
                colorspace,
                other_tags,
            }),
            _ => Err(MediaError::BadSignature(
                "missing or invalid W/H tags".into(),
            )),
        }
    }

    fn chroma_len(&self) -> usize {
        let (cw, ch) = match self.colorspace {
            Colorspace::C420 | Colorspace::C420jpeg | Colorspace::C420mpeg2 => {
                (self.width.div_ceil(2), self.height.div_ceil(2))
            }
            Colorspace::C444 => (self.width, self.height),
            Colorspace::Mono => (0, 0),
            Colorspace::Gray | Colorspace::Rgb => unreachable!("not a y4m colorspace"),
        };
        2 * cw * ch
    }
}

/// Reads one `\n`-terminated line. `Ok(None)` means a clean end of input.
fn read_line<R: BufRead>(reader: &mut R, limit: usize) -> io::Result<Option<Vec<u8>>> {
    let mut line = Vec::new();
    let n = reader
        .by_ref()
        .take(limit as u64)
        .read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() == Some(&b'\n') {
        line.pop();
    }
    Ok(Some(line))
}

struct Y4mFrames<R> {
    reader: R,
    header: Y4mHeader,
    luma: Vec<u8>,
    chroma_len: usize,
    next_index: u64,
    done: bool,
}

impl<R: BufRead> Y4mFrames<R> {
    fn read_frame(&mut self) -> Result<Option<FrameBuffer>, MediaError> {
        let marker = match read_line(&mut self.reader, MAX_HEADER_LEN)? {
            None => return Ok(None),
            Some(line) => line,
        };
        if !marker.starts_with(b"FRAME") {
            return Err(MediaError::MissingFrameMarker {
                frame: self.next_index,
            });
        }
        self.reader
            .read_exact(&mut self.luma)
            .map_err(|e| short(e, self.next_index))?;
        io::copy(
            &mut self.reader.by_ref().take(self.chroma_len as u64),
            &mut io::sink(),
        )
        .and_then(|n| {
            if n as usize == self.chroma_len {
                Ok(())
            } else {
                Err(io::ErrorKind::UnexpectedEof.into())
            }
        })
        .map_err(|e| short(e, self.next_index))?;
        let data = self.luma.iter().map(|&b| b as f32).collect();
        let frame = FrameBuffer::from_parts_unchecked(
            self.header.width,
            self.header.height,
            1,
            data,
            self.next_index,
        );
        self.next_index += 1;
        Ok(Some(frame))
    }
}

fn short(e: io::Error, frame: u64) -> MediaError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        MediaError::ShortFrame { frame }
    } else {
        MediaError::Io(e)
    }
}

impl<R: BufRead> Iterator for Y4mFrames<R> {
    type Item = Result<FrameBuffer, MediaError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.read_frame().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

/// Opens a YUV4MPEG2 stream. The header is parsed eagerly; frames are decoded
/// on demand.
pub fn open_y4m<R: Read + Send + 'static>(source: R) -> Result<FrameStream, MediaError> {
    let mut reader = BufReader::new(source);
    let line = read_line(&mut reader, MAX_HEADER_LEN)?
        .ok_or_else(|| MediaError::BadSignature("empty input".into()))?;
    let header = Y4mHeader::parse(&line)?;
    let frames = Y4mFrames {
        luma: vec![0; header.width * header.height],
        chroma_len: header.chroma_len(),
        reader,
        header: header.clone(),
        next_index: 0,
        done: false,
    };
    Ok(FrameStream::new(
        header.width,
        header.height,
        header.colorspace,
        Box::new(frames),
    ))
}

/// Writes luma planes as a YUV4MPEG2 stream with neutral chroma.
pub struct Y4mWriter<W: Write> {
    sink: W,
    width: usize,
    height: usize,
    colorspace: Colorspace,
    scratch: Vec<u8>,
}

impl<W: Write> Y4mWriter<W> {
    pub fn new(
        mut sink: W,
        width: usize,
        height: usize,
        colorspace: Colorspace,
    ) -> Result<Self, MediaError> {
        let tag = colorspace
            .y4m_tag()
            .ok_or(MediaError::UnsupportedColorspace(format!("{colorspace:?}")))?;
        writeln!(sink, "YUV4MPEG2 W{width} H{height} F30:1 Ip A1:1 C{tag}")?;
        let header = Y4mHeader {
            width,
            height,
            colorspace,
            other_tags: Vec::new(),
        };
        let mut scratch = vec![0u8; width * height];
        scratch.resize(width * height + header.chroma_len(), 128);
        Ok(Self {
            sink,
            width,
            height,
            colorspace,
            scratch,
        })
    }

    pub fn colorspace(&self) -> Colorspace {
        self.colorspace
    }

    /// Quantises the plane to 8 bits and appends one frame record.
    pub fn write_luma(&mut self, plane: &LumaPlane) -> Result<(), MediaError> {
        if plane.dimensions() != (self.width, self.height) {
            return Err(MediaError::DimensionMismatch {
                expected: (self.width, self.height),
                found: plane.dimensions(),
            });
        }
        for (dst, &v) in self.scratch.iter_mut().zip(plane.data()) {
            *dst = quantize(v);
        }
        self.sink.write_all(b"FRAME\n")?;
        self.sink.write_all(&self.scratch)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, MediaError> {
        self.sink.flush()?;
        Ok(self.sink)
    }
}
