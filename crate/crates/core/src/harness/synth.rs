//! Synthetic corpus: photo-like composite stills and scene-cut videos.
//!
//! Everything is a pure function of the seed. A still is a continuous
//! colour field (gradient, low-frequency waves, shaded shapes, fine noise)
//! sampled on a pixel grid; video scenes sample the same kind of field with
//! a moving viewport and a moving sprite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pdq::RasterImage;

#[derive(Debug, Clone, Copy)]
enum ShapeKind {
    Ellipse,
    Rect,
}

#[derive(Debug, Clone)]
struct Shape {
    kind: ShapeKind,
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f64; 3],
    /// Vertical shading strength across the shape.
    shade: f64,
}

impl Shape {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Shape {
            kind: if rng.gen_bool(0.5) { ShapeKind::Ellipse } else { ShapeKind::Rect },
            cx: rng.gen_range(-0.1..1.1),
            cy: rng.gen_range(-0.1..1.1),
            rx: rng.gen_range(0.08..0.4),
            ry: rng.gen_range(0.08..0.4),
            color: random_color(rng),
            shade: rng.gen_range(-0.5..0.5),
        }
    }

    /// Shaded colour at `(u, v)` if the point is inside the shape.
    fn sample(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        let (dx, dy) = ((u - self.cx) / self.rx, (v - self.cy) / self.ry);
        let inside = match self.kind {
            ShapeKind::Ellipse => dx * dx + dy * dy <= 1.0,
            ShapeKind::Rect => dx.abs() <= 1.0 && dy.abs() <= 1.0,
        };
        inside.then(|| {
            let k = 1.0 + self.shade * dy;
            self.color.map(|c| c * k)
        })
    }
}

#[derive(Debug, Clone)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amp: f64,
}

fn random_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0)]
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn pixel_noise(seed: u64, x: i64, y: i64) -> f64 {
    let mut z = seed
        ^ (x as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (y as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

/// A continuous colour field over the unit square (and beyond).
#[derive(Debug, Clone)]
pub struct Composite {
    c0: [f64; 3],
    c1: [f64; 3],
    dir: (f64, f64),
    waves: Vec<Wave>,
    tint: [f64; 3],
    shapes: Vec<Shape>,
    noise: f64,
    noise_seed: u64,
    invert: bool,
    mirror: bool,
}

impl Composite {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let waves = (0..rng.gen_range(2..5))
            .map(|_| Wave {
                kx: rng.gen_range(-3.0..3.0),
                ky: rng.gen_range(-3.0..3.0),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                amp: rng.gen_range(10.0..45.0),
            })
            .collect();
        let shapes = (0..rng.gen_range(3..10)).map(|_| Shape::random(rng)).collect();
        Composite {
            c0: random_color(rng),
            c1: random_color(rng),
            dir: (angle.cos(), angle.sin()),
            waves,
            tint: [rng.gen_range(0.5..1.0), rng.gen_range(0.5..1.0), rng.gen_range(0.5..1.0)],
            shapes,
            noise: rng.gen_range(0.0..8.0),
            noise_seed: rng.gen(),
            // random negative and mirror keep every hash bit unbiased
            invert: rng.gen_bool(0.5),
            mirror: rng.gen_bool(0.5),
        }
    }

    fn sample(&self, u: f64, v: f64) -> [f64; 3] {
        let u = if self.mirror { 1.0 - u } else { u };
        let t = (((u - 0.5) * self.dir.0 + (v - 0.5) * self.dir.1) + 0.5).clamp(0.0, 1.0);
        let mut c = mix(self.c0, self.c1, t);
        let w: f64 = self
            .waves
            .iter()
            .map(|w| w.amp * (std::f64::consts::TAU * (w.kx * u + w.ky * v) + w.phase).cos())
            .sum();
        for (ch, tint) in c.iter_mut().zip(self.tint) {
            *ch += w * tint;
        }
        for s in &self.shapes {
            if let Some(sc) = s.sample(u, v) {
                c = sc;
            }
        }
        c
    }

    /// Samples a `w x h` window whose top-left sits at `origin` in field
    /// coordinates, with `scale` field units per image width.
    pub fn render_window(&self, w: usize, h: usize, origin: (f64, f64), scale: f64) -> RasterImage {
        let unit = scale / w.max(h) as f64;
        RasterImage::from_fn(w, h, |x, y| {
            let u = origin.0 + (x as f64 + 0.5) * unit;
            let v = origin.1 + (y as f64 + 0.5) * unit;
            let n = self.noise * pixel_noise(self.noise_seed, x as i64, y as i64);
            self.sample(u, v).map(|c| {
                let c = (c + n).clamp(0.0, 255.0);
                let c = if self.invert { 255.0 - c } else { c };
                c.round() as u8
            })
        })
        .expect("non-empty")
    }

    pub fn render(&self, w: usize, h: usize) -> RasterImage {
        self.render_window(w, h, (0.0, 0.0), 1.0)
    }
}

/// A photo-like still of size `w x h` (both at least 1).
pub fn synth_image(seed: u64, w: usize, h: usize) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Composite::random(&mut rng).render(w.max(1), h.max(1))
}

#[derive(Debug, Clone)]
struct Scene {
    start_frame: usize,
    field: Composite,
    pan: (f64, f64),
    zoom: f64,
    sprite: Shape,
    sprite_vel: (f64, f64),
}

/// A procedurally generated video: consecutive scenes of 2 to 4 seconds,
/// each with a panning background and a moving sprite.
#[derive(Debug, Clone)]
pub struct SynthVideo {
    width: usize,
    height: usize,
    fps: f64,
    frame_count: usize,
    scenes: Vec<Scene>,
}

impl SynthVideo {
    pub fn new(seed: u64, width: usize, height: usize, fps: f64, duration: f64) -> Self {
        assert!(fps > 0.0 && duration > 0.0, "fps and duration must be positive");
        let frame_count = ((duration * fps).round() as usize).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut scenes = Vec::new();
        let mut start = 0usize;
        while start < frame_count {
            let len = (rng.gen_range(2.0..4.0) * fps).round().max(1.0) as usize;
            let mut sprite = Shape::random(&mut rng);
            sprite.rx = sprite.rx.min(0.15);
            sprite.ry = sprite.ry.min(0.15);
            scenes.push(Scene {
                start_frame: start,
                field: Composite::random(&mut rng),
                pan: (rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)),
                zoom: rng.gen_range(0.6..1.0),
                sprite,
                sprite_vel: (rng.gen_range(-0.25..0.25), rng.gen_range(-0.25..0.25)),
            });
            start += len;
        }
        SynthVideo {
            width: width.max(1),
            height: height.max(1),
            fps,
            frame_count,
            scenes,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn scene_starts(&self) -> Vec<usize> {
        self.scenes.iter().map(|s| s.start_frame).collect()
    }

    pub fn frame(&self, i: usize) -> RasterImage {
        let idx = self.scenes.partition_point(|s| s.start_frame <= i).saturating_sub(1);
        let scene = &self.scenes[idx];
        let t = (i - scene.start_frame) as f64 / self.fps;
        let origin = (scene.pan.0 * t, scene.pan.1 * t);
        let mut img = scene.field.render_window(self.width, self.height, origin, scene.zoom);
        let mut sprite = scene.sprite.clone();
        sprite.cx += scene.sprite_vel.0 * t;
        sprite.cy += scene.sprite_vel.1 * t;
        let unit = 1.0 / self.width.max(self.height) as f64;
        for y in 0..self.height {
            for x in 0..self.width {
                let (u, v) = ((x as f64 + 0.5) * unit, (y as f64 + 0.5) * unit);
                if let Some(c) = sprite.sample(u, v) {
                    img.put_pixel(x, y, c.map(|c| c.clamp(0.0, 255.0).round() as u8));
                }
            }
        }
        img
    }

    pub fn frames(&self) -> impl Iterator<Item = RasterImage> + '_ {
        (0..self.frame_count).map(|i| self.frame(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdq::pdq_hash;

    #[test]
    fn images_are_deterministic_and_varied() {
        let a = synth_image(7, 96, 64);
        assert_eq!(a, synth_image(7, 96, 64));
        assert_eq!((a.width(), a.height()), (96, 64));
        let b = synth_image(8, 96, 64);
        assert!(pdq_hash(&a).distance(&pdq_hash(&b)) > 40);
        assert!(pdq_hash(&a).quality > 0);
    }

    #[test]
    fn video_scenes_cover_duration() {
        let v = SynthVideo::new(3, 32, 24, 15.0, 20.0);
        assert_eq!(v.frame_count(), 300);
        let starts = v.scene_starts();
        assert_eq!(starts[0], 0);
        for w in starts.windows(2) {
            let len = w[1] - w[0];
            assert!((30..=60).contains(&len), "scene length {len}");
        }
        assert_eq!(v.frame(10), v.frame(10));
        assert_ne!(v.frame(0), v.frame(10));
    }
}
