use std::io::Write;

use rayon::prelude::*;

use super::{ncc_surface, pce_at, template, CorrelateError, CorrelationResult, MatchOptions};
use crate::denoise::NoiseResidual;
use crate::fingerprint::FingerprintEstimate;
use crate::media_io::LumaPlane;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tile {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Non-overlapping tiling of a frame. Edge tiles are kept at whatever size
/// remains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    block: usize,
    frame: (usize, usize),
    tiles: Vec<Tile>,
}

impl BlockGrid {
    pub const DEFAULT_BLOCK: usize = 500;

    pub fn new(width: usize, height: usize, block: usize) -> Result<Self, CorrelateError> {
        if block == 0 {
            return Err(CorrelateError::BadParameter(
                "block size must be positive".into(),
            ));
        }
        if width < block || height < block {
            return Err(CorrelateError::FrameSmallerThanBlock {
                frame: (width, height),
                block,
            });
        }
        let mut tiles = Vec::new();
        for y in (0..height).step_by(block) {
            for x in (0..width).step_by(block) {
                tiles.push(Tile {
                    x,
                    y,
                    width: block.min(width - x),
                    height: block.min(height - y),
                });
            }
        }
        Ok(Self {
            block,
            frame: (width, height),
            tiles,
        })
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn frame(&self) -> (usize, usize) {
        self.frame
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub tiles: Vec<(Tile, CorrelationResult)>,
}

impl MatchReport {
    pub fn decisions(&self) -> impl Iterator<Item = bool> + '_ {
        self.tiles.iter().map(|(_, r)| r.decision)
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.tiles.iter().map(|(_, r)| r.pce)
    }

    pub fn positive_tiles(&self) -> usize {
        self.decisions().filter(|&d| d).count()
    }

    /// Frame-level verdict: more than half of the tiles matched.
    pub fn frame_decision(&self) -> bool {
        2 * self.positive_tiles() > self.tiles.len()
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(sink);
        out.write_record([
            "x", "y", "width", "height", "pce", "ncc_peak", "dx", "dy", "decision",
        ])?;
        for (t, r) in &self.tiles {
            out.write_record([
                t.x.to_string(),
                t.y.to_string(),
                t.width.to_string(),
                t.height.to_string(),
                format!("{:.4}", r.pce),
                format!("{:.4}", r.ncc_peak),
                r.peak_shift.0.to_string(),
                r.peak_shift.1.to_string(),
                r.decision.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn crop(p: &LumaPlane, t: &Tile) -> LumaPlane {
    p.crop(t.x, t.y, t.width, t.height)
}

/// Scores each tile at zero shift. Tiles whose residual or template is flat
/// score 0 and never match.
pub fn blockwise_match(
    residual: &NoiseResidual,
    fp: &FingerprintEstimate,
    query: &LumaPlane,
    grid: &BlockGrid,
    opts: &MatchOptions,
) -> Result<MatchReport, CorrelateError> {
    for d in [residual.dimensions(), fp.dimensions(), query.dimensions()] {
        if d != grid.frame() {
            return Err(CorrelateError::DimensionMismatch {
                a: grid.frame(),
                b: d,
            });
        }
    }
    let tmpl = template(&fp.khat, query, opts.template);
    let tiles = grid
        .tiles()
        .par_iter()
        .map(|t| {
            let scored = ncc_surface(&crop(residual.plane(), t), &crop(&tmpl, t))
                .and_then(|s| Ok((pce_at(&s, (0, 0), opts.exclusion)?, s.at(0, 0))));
            let result = match scored {
                Ok((pce, ncc)) => CorrelationResult {
                    pce,
                    peak_shift: (0, 0),
                    ncc_peak: ncc,
                    decision: CorrelationResult::decide(pce, opts.threshold),
                },
                Err(CorrelateError::ConstantInput | CorrelateError::DegenerateSurface) => {
                    CorrelationResult {
                        pce: 0.0,
                        peak_shift: (0, 0),
                        ncc_peak: 0.0,
                        decision: false,
                    }
                }
                Err(e) => return Err(e),
            };
            Ok((*t, result))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MatchReport { tiles })
}
