//! Synthetic camera with a known PRNU field, used to generate test corpora
//! and as ground truth for estimator checks.
//!
//! A frame is `clamp(I0 + I0 * K + eta, 0, 255)` where `I0` is the scene,
//! `K` the PRNU field and `eta` i.i.d. Gaussian sensor noise.

use std::borrow::Cow;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::correlate::CorrelationSurface;
use crate::denoise::reflect;
use crate::media_io::{Colorspace, FrameStream, LumaPlane, MediaError, Y4mWriter};

/// Largest side accepted by [`brute_force_correlation`].
pub const BRUTE_FORCE_MAX: usize = 64;
/// Scene values are kept inside this range so clipping stays rare.
pub const SCENE_RANGE: (f32, f32) = (16.0, 240.0);

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("dimension mismatch: {expected:?} vs {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{width}x{height} exceeds the {max}x{max} brute-force limit")]
    TooLarge {
        width: usize,
        height: usize,
        max: usize,
    },
    #[error(transparent)]
    Media(#[from] MediaError),
}

/// Mixes a base seed with an index into an independent stream seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCameraModel {
    pub width: usize,
    pub height: usize,
    pub k_field: LumaPlane,
    pub sigma1: f32,
    pub seed: u64,
}

impl SynthCameraModel {
    /// Seed of the sensor noise for frame `index`.
    pub fn frame_seed(&self, index: u64) -> u64 {
        derive_seed(self.seed, index)
    }

    /// Renders frame `index` of a corpus over the given scene.
    pub fn frame(&self, scene: &LumaPlane, index: u64) -> Result<LumaPlane, SynthError> {
        render_frame(self, scene, self.frame_seed(index))
    }
}

pub fn gen_model(
    width: usize,
    height: usize,
    sigma_k: f32,
    sigma1: f32,
    seed: u64,
) -> Result<SynthCameraModel, SynthError> {
    if !(sigma_k > 0.0 && sigma_k <= 0.1) {
        return Err(SynthError::BadParameter(format!(
            "sigma_k {sigma_k} outside (0, 0.1]"
        )));
    }
    if !(sigma1 >= 0.0 && sigma1.is_finite()) {
        return Err(SynthError::BadParameter(format!(
            "sigma1 {sigma1} must be non-negative"
        )));
    }
    if width == 0 || height == 0 {
        return Err(SynthError::BadParameter("empty frame".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k: Vec<f64> = (0..width * height)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma_k as f64 * z
        })
        .collect();
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    k.iter_mut().for_each(|v| *v -= mean);
    let k_field =
        LumaPlane::from_vec_unchecked(width, height, k.into_iter().map(|v| v as f32).collect());
    Ok(SynthCameraModel {
        width,
        height,
        k_field,
        sigma1,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneSpec {
    Flat {
        luminance: f32,
    },
    /// Gaussian-blurred white noise. `cutoff` is the blur standard deviation
    /// in pixels and `contrast` the standard deviation of the result around
    /// mid-gray before clamping.
    Textured {
        cutoff: f32,
        contrast: f32,
    },
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        match *self {
            SceneSpec::Flat { luminance }
                if !(SCENE_RANGE.0..=SCENE_RANGE.1).contains(&luminance) =>
            {
                Err(SynthError::BadParameter(format!(
                    "luminance {luminance} outside {SCENE_RANGE:?}"
                )))
            }
            SceneSpec::Textured { cutoff, contrast }
                if !(cutoff >= 0.0 && cutoff.is_finite())
                    || !(contrast >= 0.0 && contrast.is_finite()) =>
            {
                Err(SynthError::BadParameter(format!(
                    "texture cutoff {cutoff} and contrast {contrast} must be non-negative"
                )))
            }
            _ => Ok(()),
        }
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.into_iter().map(|v| v / sum).collect()
}

fn blur(data: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * data[y * w + reflect(x as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[reflect(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

pub fn render_scene(
    spec: SceneSpec,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<LumaPlane, SynthError> {
    spec.validate()?;
    let mid = 128.0;
    match spec {
        SceneSpec::Flat { luminance } => Ok(LumaPlane::filled(width, height, luminance)),
        SceneSpec::Textured { contrast: 0.0, .. } => Ok(LumaPlane::filled(width, height, mid)),
        SceneSpec::Textured { cutoff, contrast } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise: Vec<f64> = (0..width * height)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let smooth = if cutoff > 0.0 {
                blur(&noise, width, height, cutoff as f64)
            } else {
                noise
            };
            let n = smooth.len() as f64;
            let mean = smooth.iter().sum::<f64>() / n;
            let std = (smooth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            let scale = if std > 0.0 {
                contrast as f64 / std
            } else {
                0.0
            };
            let data = smooth
                .iter()
                .map(|v| {
                    ((v - mean) * scale + mid as f64)
                        .clamp(SCENE_RANGE.0 as f64, SCENE_RANGE.1 as f64)
                        as f32
                })
                .collect();
            Ok(LumaPlane::from_vec_unchecked(width, height, data))
        }
    }
}

pub fn render_frame(
    model: &SynthCameraModel,
    scene: &LumaPlane,
    frame_seed: u64,
) -> Result<LumaPlane, SynthError> {
    if scene.dimensions() != (model.width, model.height) {
        return Err(SynthError::DimensionMismatch {
            expected: (model.width, model.height),
            found: scene.dimensions(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed);
    let noise = Normal::new(0.0f32, model.sigma1).expect("sigma1 validated");
    let data = scene
        .data()
        .iter()
        .zip(model.k_field.data())
        .map(|(&i0, &k)| {
            let eta = if model.sigma1 > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            (i0 + i0 * k + eta).clamp(0.0, 255.0)
        })
        .collect();
    Ok(LumaPlane::from_vec_unchecked(
        model.width,
        model.height,
        data,
    ))
}

/// Which scene each corpus frame is rendered over.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenes {
    /// Frame `i` uses `planes[i % len]`.
    Cycle(Vec<LumaPlane>),
    /// An independent scene for every frame.
    PerFrame { spec: SceneSpec, seed: u64 },
    /// A new independent scene every `hold` frames.
    Held {
        spec: SceneSpec,
        seed: u64,
        hold: usize,
    },
}

impl Scenes {
    pub fn fixed(plane: LumaPlane) -> Self {
        Scenes::Cycle(vec![plane])
    }

    pub fn scene(
        &self,
        index: u64,
        width: usize,
        height: usize,
    ) -> Result<Cow<'_, LumaPlane>, SynthError> {
        match self {
            Scenes::Cycle(planes) if planes.is_empty() => {
                Err(SynthError::BadParameter("no scenes".into()))
            }
            Scenes::Cycle(planes) => Ok(Cow::Borrowed(
                &planes[(index % planes.len() as u64) as usize],
            )),
            Scenes::PerFrame { spec, seed } => {
                render_scene(*spec, width, height, derive_seed(*seed, index)).map(Cow::Owned)
            }
            Scenes::Held { hold: 0, .. } => {
                Err(SynthError::BadParameter("hold must be positive".into()))
            }
            Scenes::Held { spec, seed, hold } => render_scene(
                *spec,
                width,
                height,
                derive_seed(*seed, index / *hold as u64),
            )
            .map(Cow::Owned),
        }
    }
}

/// Renders frame `index` of the corpus defined by `model` and `scenes`.
pub fn corpus_frame(
    model: &SynthCameraModel,
    scenes: &Scenes,
    index: u64,
) -> Result<LumaPlane, SynthError> {
    let scene = scenes.scene(index, model.width, model.height)?;
    model.frame(&scene, index)
}

impl Scenes {
    /// Checks that every frame can be rendered.
    pub fn validate(&self, width: usize, height: usize) -> Result<(), SynthError> {
        match self {
            Scenes::Cycle(planes) => {
                if planes.is_empty() {
                    return Err(SynthError::BadParameter("no scenes".into()));
                }
                match planes.iter().find(|p| p.dimensions() != (width, height)) {
                    Some(p) => Err(SynthError::DimensionMismatch {
                        expected: (width, height),
                        found: p.dimensions(),
                    }),
                    None => Ok(()),
                }
            }
            Scenes::PerFrame { spec, .. } => spec.validate(),
            Scenes::Held { hold: 0, .. } => {
                Err(SynthError::BadParameter("hold must be positive".into()))
            }
            Scenes::Held { spec, .. } => spec.validate(),
        }
    }
}

/// Lazily rendered corpus frames `first..first + count`.
pub fn corpus_stream(
    model: SynthCameraModel,
    scenes: Scenes,
    first: u64,
    count: usize,
) -> Result<FrameStream, SynthError> {
    let (w, h) = (model.width, model.height);
    scenes.validate(w, h)?;
    let planes = (first..first + count as u64)
        .map(move |i| corpus_frame(&model, &scenes, i).expect("scenes validated"));
    Ok(FrameStream::from_plane_iter(w, h, planes))
}

/// Writes frames `0..frame_count` as an 8-bit 4:2:0 YUV4MPEG2 stream.
pub fn write_y4m_corpus<W: Write>(
    model: &SynthCameraModel,
    scenes: &Scenes,
    frame_count: usize,
    sink: W,
) -> Result<W, SynthError> {
    let mut writer = Y4mWriter::new(sink, model.width, model.height, Colorspace::C420)?;
    for i in 0..frame_count as u64 {
        writer.write_luma(&corpus_frame(model, scenes, i)?)?;
    }
    Ok(writer.finish()?)
}

/// Direct circular normalised cross-correlation, `O(N^2)` per shift.
pub fn brute_force_correlation(
    a: &LumaPlane,
    b: &LumaPlane,
) -> Result<CorrelationSurface, SynthError> {
    if a.dimensions() != b.dimensions() {
        return Err(SynthError::DimensionMismatch {
            expected: a.dimensions(),
            found: b.dimensions(),
        });
    }
    let (w, h) = a.dimensions();
    if w > BRUTE_FORCE_MAX || h > BRUTE_FORCE_MAX {
        return Err(SynthError::TooLarge {
            width: w,
            height: h,
            max: BRUTE_FORCE_MAX,
        });
    }
    let center = |p: &LumaPlane| {
        let m = p.mean();
        p.data().iter().map(|&v| v as f64 - m).collect::<Vec<_>>()
    };
    let (ac, bc) = (center(a), center(b));
    let norm =
        (ac.iter().map(|v| v * v).sum::<f64>() * bc.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let mut values = vec![0.0; w * h];
    for dy in 0..h {
        for dx in 0..w {
            let mut s = 0.0;
            for y in 0..h {
                for x in 0..w {
                    s += ac[y * w + x] * bc[((y + dy) % h) * w + (x + dx) % w];
                }
            }
            values[dy * w + dx] = if norm > 0.0 { s / norm } else { 0.0 };
        }
    }
    Ok(CorrelationSurface::from_values(w, h, values))
}
