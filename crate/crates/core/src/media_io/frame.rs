use super::MediaError;

/// A decoded raster with intensities on the `[0, 255]` scale.
///
/// Samples are stored row-major and, for three-channel frames, interleaved
/// (`R, G, B, R, G, B, ...`).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
    source_index: u64,
}

impl FrameBuffer {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
        source_index: u64,
    ) -> Result<Self, MediaError> {
        if channels != 1 && channels != 3 {
            return Err(MediaError::UnsupportedChannelCount(channels));
        }
        if data.len() != width * height * channels {
            return Err(MediaError::DimensionMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        if let Some(v) = data
            .iter()
            .find(|v| !(v.is_finite() && (0.0..=255.0).contains(*v)))
        {
            return Err(MediaError::InvalidSample(*v as f64));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            source_index,
        })
    }

    pub(crate) fn from_parts_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f32>,
        source_index: u64,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            data,
            source_index,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn source_index(&self) -> u64 {
        self.source_index
    }

    pub fn with_source_index(mut self, index: u64) -> Self {
        self.source_index = index;
        self
    }
}

impl From<LumaPlane> for FrameBuffer {
    fn from(plane: LumaPlane) -> Self {
        let data = plane
            .data
            .into_iter()
            .map(|v| v.clamp(0.0, 255.0))
            .collect();
        Self::from_parts_unchecked(plane.width, plane.height, 1, data, 0)
    }
}

/// Single-plane working representation shared by denoising, fingerprinting
/// and correlation. Values are finite but otherwise unconstrained, so the same
/// type also carries signed residuals and fingerprint fields.
#[derive(Debug, Clone, PartialEq)]
pub struct LumaPlane {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl LumaPlane {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, MediaError> {
        if data.len() != width * height {
            return Err(MediaError::DimensionMismatch {
                expected: (width, height),
                found: (data.len(), 1),
            });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(MediaError::InvalidSample(*v as f64));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self::from_vec_unchecked(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec_unchecked(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Copies out the `w x h` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> LumaPlane {
        assert!(
            x + w <= self.width && y + h <= self.height,
            "crop out of bounds"
        );
        let mut data = Vec::with_capacity(w * h);
        for row in y..y + h {
            let start = row * self.width + x;
            data.extend_from_slice(&self.data[start..start + w]);
        }
        Self::from_vec_unchecked(w, h, data)
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    /// Sample variance (population normalisation).
    pub fn variance(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let mean = self.mean();
        self.data
            .iter()
            .map(|&v| {
                let d = v as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / self.data.len() as f64
    }
}

/// Collapses a frame to one luma plane. Three-channel input is combined with
/// the BT.601 weights.
pub fn to_luma(frame: &FrameBuffer) -> Result<LumaPlane, MediaError> {
    match frame.channels {
        1 => Ok(LumaPlane::from_vec_unchecked(
            frame.width,
            frame.height,
            frame.data.clone(),
        )),
        3 => {
            let data = frame
                .data
                .chunks_exact(3)
                .map(|px| (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]).clamp(0.0, 255.0))
                .collect();
            Ok(LumaPlane::from_vec_unchecked(
                frame.width,
                frame.height,
                data,
            ))
        }
        n => Err(MediaError::UnsupportedChannelCount(n)),
    }
}
