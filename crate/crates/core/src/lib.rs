//! PRNU camera fingerprinting with spatial-domain frame averaging.
//!
//! A fingerprint `K` is estimated from frames of one camera, optionally
//! averaging `d` consecutive frames before each denoise, and compared
//! against query frames by normalised cross-correlation and PCE.
//!
//! The `examples/` directory walks through the library:
//!
//! | example | shows |
//! |---|---|
//! | `read_media` | netpbm and YUV4MPEG2 decoding |
//! | `noise_residual` | wavelet denoising of one frame |
//! | `extract_fingerprint` | conventional vs averaged extraction |
//! | `fingerprint_file` | the on-disk fingerprint format |
//! | `match_query` | whole-frame matching |
//! | `blockwise` | per-block scores and CSV output |
//! | `crop_search` | locating a cropped query |
//! | `synth_corpus` | synthetic cameras and corpora |
//! | `equivalence_bound` | frames needed for equal estimator variance |
//! | `bench_depths` | depth sweeps and ROC data |
//!
//! Run one with `cargo run --example match_query`.

pub mod analysis;
pub mod cli;
pub mod correlate;
pub mod denoise;
mod fft;
pub mod fingerprint;
pub mod media_io;
pub mod synthcam;
