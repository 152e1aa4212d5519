//! Synthetic sequences: textured rectangles moving at constant velocity over
//! a flat background, reflecting off the frame borders.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::image::Image;
use crate::eval::mot::{FrameBoxes, Sequence};
use crate::geometry::BBox;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthObject {
    pub id: u64,
    /// Box at frame 0.
    pub start: BBox,
    /// Pixels per frame.
    pub velocity: (f64, f64),
    /// Texture seed; objects sharing it look identical.
    pub texture: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub fps: f64,
    pub objects: Vec<SynthObject>,
    pub background: [u8; 3],
    /// Side of the square texture blocks, in pixels.
    pub block: usize,
    /// Amplitude of per-frame uniform pixel noise (0 disables it).
    pub noise: u8,
    pub noise_seed: u64,
}

impl SynthSpec {
    /// `count` objects in horizontal lanes of equal height, so trajectories
    /// never overlap. Sizes, speeds and textures derive from `seed`.
    pub fn lanes(count: usize, width: usize, height: usize, frames: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::Argument("at least one object is required".into()));
        }
        let lane = height as f64 / count as f64;
        if lane < 16.0 || width < 64 {
            return Err(Error::Argument(format!(
                "{count} lanes do not fit a {width}x{height} frame"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let objects = (0..count)
            .map(|i| {
                let h = (lane * rng.gen_range(0.45..0.7)).round().clamp(8.0, 120.0);
                let w = (h * rng.gen_range(0.8..1.6)).round().min(width as f64 / 3.0);
                let cx = rng.gen_range(w..width as f64 - w).round();
                let cy = (lane * (i as f64 + 0.5)).round();
                let speed = rng.gen_range(2..=5) as f64;
                let vx = if rng.gen_bool(0.5) { speed } else { -speed };
                SynthObject {
                    id: i as u64 + 1,
                    start: BBox::new(cx, cy, w, h),
                    velocity: (vx, 0.0),
                    texture: rng.gen(),
                }
            })
            .collect();
        Ok(SynthSpec {
            width,
            height,
            frames,
            fps: 30.0,
            objects,
            background: [128, 128, 128],
            block: 6,
            noise: 0,
            noise_seed: seed,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.frames == 0 || self.block == 0 {
            return Err(Error::Argument(
                "frame extents, frame count and block size must be positive".into(),
            ));
        }
        for o in &self.objects {
            o.start.validate()?;
            if o.start.w > self.width as f64 || o.start.h > self.height as f64 {
                return Err(Error::Argument(format!(
                    "object {} is larger than the frame",
                    o.id
                )));
            }
            if o.start.left() < 0.0
                || o.start.top() < 0.0
                || o.start.right() > self.width as f64
                || o.start.bottom() > self.height as f64
            {
                return Err(Error::Argument(format!(
                    "object {} starts outside the frame",
                    o.id
                )));
            }
        }
        Ok(())
    }
}

/// Blocky RGB noise of `w × h` blocks.
fn texture(seed: u64, w: usize, h: usize) -> Vec<[u8; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..w * h).map(|_| rng.gen()).collect()
}

/// Moves `pos` by `v` along one axis, reflecting off `[0, extent]`.
fn advance(center: f64, half: f64, v: f64, extent: f64) -> (f64, f64) {
    let mut c = center + v;
    let mut v = v;
    if c - half < 0.0 {
        c = 2.0 * half - c;
        v = -v;
    } else if c + half > extent {
        c = 2.0 * (extent - half) - c;
        v = -v;
    }
    (c, v)
}

/// Object boxes for every frame.
pub fn synth_trajectories(spec: &SynthSpec) -> Result<Vec<FrameBoxes>> {
    spec.validate()?;
    let mut state: Vec<(BBox, (f64, f64))> = spec.objects.iter().map(|o| (o.start, o.velocity)).collect();
    let mut out = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        if t > 0 {
            for (b, v) in state.iter_mut() {
                let (cx, vx) = advance(b.cx, b.w / 2.0, v.0, spec.width as f64);
                let (cy, vy) = advance(b.cy, b.h / 2.0, v.1, spec.height as f64);
                *b = BBox::new(cx, cy, b.w, b.h);
                *v = (vx, vy);
            }
        }
        out.push(
            spec.objects
                .iter()
                .zip(&state)
                .map(|(o, (b, _))| (o.id, *b))
                .collect(),
        );
    }
    Ok(out)
}

/// Renders frame `t` for boxes `boxes` (later objects drawn on top).
fn render(spec: &SynthSpec, textures: &[(usize, Vec<[u8; 3]>)], boxes: &FrameBoxes, t: usize) -> Image {
    let mut img = Image::filled(spec.width, spec.height, spec.background).expect("positive extents");
    for (o, (tw, tex)) in spec.objects.iter().zip(textures) {
        let b = boxes[&o.id];
        let (x0, y0) = (b.left().round() as i64, b.top().round() as i64);
        let (w, h) = (b.w.round() as i64, b.h.round() as i64);
        for y in y0.max(0)..(y0 + h).min(spec.height as i64) {
            for x in x0.max(0)..(x0 + w).min(spec.width as i64) {
                let (u, v) = ((x - x0) as usize / spec.block, (y - y0) as usize / spec.block);
                img.set_pixel(x as usize, y as usize, tex[v * tw + u]);
            }
        }
    }
    if spec.noise > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed.wrapping_add(t as u64));
        let a = spec.noise as i16;
        for v in img.data.iter_mut() {
            *v = (*v as i16 + rng.gen_range(-a..=a)).clamp(0, 255) as u8;
        }
    }
    img
}

/// Renders the sequence described by `spec`.
pub fn synth_sequence(spec: &SynthSpec) -> Result<Sequence> {
    let ground_truth = synth_trajectories(spec)?;
    let textures: Vec<(usize, Vec<[u8; 3]>)> = spec
        .objects
        .iter()
        .map(|o| {
            let tw = (o.start.w.round() as usize).div_ceil(spec.block);
            let th = (o.start.h.round() as usize).div_ceil(spec.block);
            (tw, texture(o.texture, tw, th))
        })
        .collect();
    let frames = ground_truth
        .iter()
        .enumerate()
        .map(|(t, boxes)| render(spec, &textures, boxes, t))
        .collect();
    Ok(Sequence {
        frames,
        ground_truth,
        fps: spec.fps,
    })
}
