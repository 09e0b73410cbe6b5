//! Frame ingestion: netpbm stills and YUV4MPEG2 streams, normalised into
//! [`FrameBuffer`]s and [`LumaPlane`]s on a `[0, 255]` scale.

mod frame;
mod netpbm;
mod y4m;

use std::io;
use std::path::{Path, PathBuf};

pub use frame::{to_luma, FrameBuffer, LumaPlane};
pub use netpbm::{
    decode_netpbm, encode_netpbm, encode_netpbm_ascii, read_netpbm_header, NetpbmHeader,
};
pub use y4m::{open_y4m, Y4mHeader, Y4mWriter};

#[derive(Debug, thiserror::Error)]
pub enum MediaError {
    #[error("unsupported magic number {0:?}")]
    UnsupportedMagic(Vec<u8>),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated payload: expected {expected} samples, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("malformed sample token {0:?}")]
    MalformedPayload(String),
    #[error("sample value {0} out of range")]
    InvalidSample(f64),
    #[error("bad YUV4MPEG2 signature: {0}")]
    BadSignature(String),
    #[error("unsupported colorspace {0}")]
    UnsupportedColorspace(String),
    #[error("missing FRAME marker before frame {frame}")]
    MissingFrameMarker { frame: u64 },
    #[error("frame {frame} is shorter than its plane size")]
    ShortFrame { frame: u64 },
    #[error("unsupported channel count {0}")]
    UnsupportedChannelCount(usize),
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: Box<MediaError>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl MediaError {
    fn in_file(self, path: &Path) -> Self {
        match self {
            e @ MediaError::File { .. } => e,
            e => MediaError::File {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        }
    }
}

/// Pixel layout of a stream's source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colorspace {
    C420,
    C420jpeg,
    C420mpeg2,
    C444,
    Mono,
    /// Single-channel netpbm or in-memory planes.
    Gray,
    /// Three-channel netpbm.
    Rgb,
}

impl Colorspace {
    fn from_y4m_tag(tag: &str) -> Result<Self, MediaError> {
        match tag {
            "420" => Ok(Self::C420),
            "420jpeg" => Ok(Self::C420jpeg),
            "420mpeg2" => Ok(Self::C420mpeg2),
            "444" => Ok(Self::C444),
            "mono" => Ok(Self::Mono),
            other => Err(MediaError::UnsupportedColorspace(other.to_string())),
        }
    }

    fn y4m_tag(self) -> Option<&'static str> {
        match self {
            Self::C420 => Some("420"),
            Self::C420jpeg => Some("420jpeg"),
            Self::C420mpeg2 => Some("420mpeg2"),
            Self::C444 => Some("444"),
            Self::Mono => Some("mono"),
            Self::Gray | Self::Rgb => None,
        }
    }
}

type FrameIter = Box<dyn Iterator<Item = Result<FrameBuffer, MediaError>> + Send>;

/// A pull-based sequence of equally sized frames.
///
/// `source_index` runs 0, 1, 2, ... without gaps. Exhaustion (`None`) is the
/// normal terminal state; after an error the stream yields nothing further.
pub struct FrameStream {
    width: usize,
    height: usize,
    colorspace: Colorspace,
    frames: FrameIter,
}

impl FrameStream {
    pub(crate) fn new(
        width: usize,
        height: usize,
        colorspace: Colorspace,
        frames: FrameIter,
    ) -> Self {
        Self {
            width,
            height,
            colorspace,
            frames,
        }
    }

    /// Wraps in-memory planes; values are clamped to `[0, 255]`.
    pub fn from_planes(width: usize, height: usize, planes: Vec<LumaPlane>) -> Self {
        Self::from_plane_iter(width, height, planes.into_iter())
    }

    /// Wraps a lazily produced sequence of planes (e.g. a synthetic camera).
    pub fn from_plane_iter<I>(width: usize, height: usize, planes: I) -> Self
    where
        I: Iterator<Item = LumaPlane> + Send + 'static,
    {
        let frames = planes.enumerate().map(move |(i, plane)| {
            if plane.dimensions() != (width, height) {
                return Err(MediaError::DimensionMismatch {
                    expected: (width, height),
                    found: plane.dimensions(),
                });
            }
            Ok(FrameBuffer::from(plane).with_source_index(i as u64))
        });
        Self::new(width, height, Colorspace::Gray, Box::new(checked(frames)))
    }

    /// Reads a list of netpbm files in the given order. The first file fixes
    /// the stream dimensions; errors name the offending file.
    pub fn from_netpbm_paths(paths: Vec<PathBuf>) -> Result<Self, MediaError> {
        let first = paths
            .first()
            .ok_or_else(|| MediaError::MalformedHeader("no input files".into()))?;
        let header = std::fs::read(first)
            .map_err(MediaError::from)
            .and_then(|b| read_netpbm_header(&b))
            .map_err(|e| e.in_file(first))?;
        let (width, height) = (header.width, header.height);
        let colorspace = if header.channels == 1 {
            Colorspace::Gray
        } else {
            Colorspace::Rgb
        };
        let frames = paths.into_iter().enumerate().map(move |(i, path)| {
            let frame = std::fs::read(&path)
                .map_err(MediaError::from)
                .and_then(|b| decode_netpbm(&b))
                .map_err(|e| e.in_file(&path))?;
            if (frame.width(), frame.height()) != (width, height) {
                return Err(MediaError::DimensionMismatch {
                    expected: (width, height),
                    found: (frame.width(), frame.height()),
                }
                .in_file(&path));
            }
            Ok(frame.with_source_index(i as u64))
        });
        Ok(Self::new(
            width,
            height,
            colorspace,
            Box::new(checked(frames)),
        ))
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn colorspace(&self) -> Colorspace {
        self.colorspace
    }

    /// Adapts the stream to yield luma planes together with their index.
    pub fn luma(self) -> impl Iterator<Item = Result<(u64, LumaPlane), MediaError>> {
        self.map(|f| {
            let f = f?;
            Ok((f.source_index(), to_luma(&f)?))
        })
    }
}

/// Stops after the first error.
fn checked<I>(inner: I) -> impl Iterator<Item = Result<FrameBuffer, MediaError>> + Send
where
    I: Iterator<Item = Result<FrameBuffer, MediaError>> + Send,
{
    let mut failed = false;
    inner.map_while(move |item| {
        if failed {
            return None;
        }
        failed = item.is_err();
        Some(item)
    })
}

impl Iterator for FrameStream {
    type Item = Result<FrameBuffer, MediaError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.frames.next()
    }
}

impl std::fmt::Debug for FrameStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameStream")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("colorspace", &self.colorspace)
            .finish_non_exhaustive()
    }
}

/// Opens a media path: `.y4m` as a stream, a directory as its sorted netpbm
/// files, anything else as a single netpbm file.
pub fn open_path(path: &Path) -> Result<FrameStream, MediaError> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| MediaError::from(e).in_file(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("pgm" | "ppm" | "pnm")
                )
            })
            .collect();
        files.sort();
        return FrameStream::from_netpbm_paths(files).map_err(|e| e.in_file(path));
    }
    if path.extension().and_then(|e| e.to_str()) == Some("y4m") {
        let file = std::fs::File::open(path).map_err(|e| MediaError::from(e).in_file(path))?;
        return open_y4m(file).map_err(|e| e.in_file(path));
    }
    FrameStream::from_netpbm_paths(vec![path.to_path_buf()])
}
