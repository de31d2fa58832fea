use crate::error::{Error, Result};

use super::{Label, Quality};

/// A clip of `t` frames, each `h × w × c`, values in `[0, 1]`, stored
/// frame-major then row, column, channel.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    pub frames: Vec<f64>,
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub c: usize,
    /// Frame rate; frame sampling lowers it so the clip keeps its duration.
    pub fps: f64,
    pub quality: Quality,
    pub label: Label,
}

impl VideoClip {
    pub fn new(
        frames: Vec<f64>,
        dims: (usize, usize, usize, usize),
        fps: f64,
        quality: Quality,
        label: Label,
    ) -> Result<Self> {
        let (t, h, w, c) = dims;
        if frames.len() != t * h * w * c {
            return Err(Error::ShapeMismatch(format!(
                "clip {t}x{h}x{w}x{c} needs {} values, got {}",
                t * h * w * c,
                frames.len()
            )));
        }
        Ok(Self {
            frames,
            t,
            h,
            w,
            c,
            fps,
            quality,
            label,
        })
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        let n = self.h * self.w * self.c;
        &self.frames[i * n..(i + 1) * n]
    }

    pub fn duration_s(&self) -> f64 {
        (self.t.saturating_sub(1)) as f64 / self.fps
    }
}

/// Block-average pooling over `factor × factor` spatial patches.
pub fn downsample_video(clip: &VideoClip, factor: usize) -> Result<VideoClip> {
    if factor == 0 || clip.h % factor != 0 || clip.w % factor != 0 {
        return Err(Error::IndivisibleShape {
            h: clip.h,
            w: clip.w,
            factor,
        });
    }
    let (oh, ow, c) = (clip.h / factor, clip.w / factor, clip.c);
    let norm = 1.0 / (factor * factor) as f64;
    let mut out = vec![0.0; clip.t * oh * ow * c];
    for f in 0..clip.t {
        let src = clip.frame(f);
        let dst = &mut out[f * oh * ow * c..(f + 1) * oh * ow * c];
        for y in 0..clip.h {
            for x in 0..clip.w {
                let s = (y * clip.w + x) * c;
                let d = ((y / factor) * ow + x / factor) * c;
                for ch in 0..c {
                    dst[d + ch] += src[s + ch];
                }
            }
        }
        for v in dst.iter_mut() {
            *v *= norm;
        }
    }
    Ok(VideoClip {
        frames: out,
        t: clip.t,
        h: oh,
        w: ow,
        c,
        fps: clip.fps,
        quality: if factor > 1 { Quality::LQ } else { clip.quality },
        label: clip.label,
    })
}

/// Uniformly spaced indices of `⌈ratio·t⌉` frames spanning the first to the
/// last frame.
pub fn frame_indices(t: usize, ratio: f64) -> Result<Vec<usize>> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "frame ratio must lie in (0, 1], got {ratio}"
        )));
    }
    // Guard against 0.9 * 100 = 90.00000000000001.
    let kept = ((ratio * t as f64) - 1e-9).ceil().max(0.0) as usize;
    if kept < 2 {
        return Err(Error::TooFewFrames { kept });
    }
    if kept >= t {
        return Ok((0..t).collect());
    }
    let step = (t - 1) as f64 / (kept - 1) as f64;
    Ok((0..kept).map(|i| (i as f64 * step).round() as usize).collect())
}

/// Keeps a uniformly spaced, order-preserving subset of frames.
pub fn sample_frames(clip: &VideoClip, ratio: f64) -> Result<VideoClip> {
    let idx = frame_indices(clip.t, ratio)?;
    if idx.len() == clip.t {
        return Ok(clip.clone());
    }
    let mut frames = Vec::with_capacity(idx.len() * clip.h * clip.w * clip.c);
    for &i in &idx {
        frames.extend_from_slice(clip.frame(i));
    }
    let fps = clip.fps * (idx.len() - 1) as f64 / (clip.t - 1) as f64;
    Ok(VideoClip {
        frames,
        t: idx.len(),
        fps,
        ..clip.clone_header()
    })
}

impl VideoClip {
    fn clone_header(&self) -> VideoClip {
        VideoClip {
            frames: Vec::new(),
            t: self.t,
            h: self.h,
            w: self.w,
            c: self.c,
            fps: self.fps,
            quality: self.quality,
            label: self.label,
        }
    }
}

/// Half-width of the central skin region in normalized coordinates.
pub const ROI_HALF_WIDTH: f64 = 0.3;

/// Per-frame mean intensity over the central region, all channels.
///
/// Pixels are included by the normalized position of their centres, so at
/// coarse resolutions the region swallows surrounding background.
pub fn roi_trace(clip: &VideoClip) -> Vec<f64> {
    let inside = |i: usize, n: usize| ((i as f64 + 0.5) / n as f64 - 0.5).abs() < ROI_HALF_WIDTH;
    let rows: Vec<usize> = (0..clip.h).filter(|&y| inside(y, clip.h)).collect();
    let cols: Vec<usize> = (0..clip.w).filter(|&x| inside(x, clip.w)).collect();
    let count = (rows.len() * cols.len() * clip.c).max(1) as f64;
    (0..clip.t)
        .map(|f| {
            let fr = clip.frame(f);
            let mut s = 0.0;
            for &y in &rows {
                for &x in &cols {
                    let o = (y * clip.w + x) * clip.c;
                    s += fr[o..o + clip.c].iter().sum::<f64>();
                }
            }
            s / count
        })
        .collect()
}
