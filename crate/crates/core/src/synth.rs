//! Seeded synthetic scenarios: constant-velocity objects with boundary
//! reflection, noisy and incomplete detections, false positives,
//! appearance embeddings and translational camera drift.
//!
//! Every random draw comes from a SplitMix64 stream keyed by
//! `(seed, stream, index)`, so changing one aspect of a scenario (say, the
//! camera drift) does not perturb the draws made for another.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Poisson, StandardNormal};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::assoc::normalize;
use crate::cmc::{AffineTransform, Correspondence, GmcMap};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Detection};
use crate::io::{DetectionSet, EmbeddingTable, GtBox, SequenceBundle, SequenceInfo};

/// Frames `start..=end` during which an object produces no detections and
/// its ground truth is marked invisible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occlusion {
    /// 0-based object index.
    pub object: usize,
    pub start: u32,
    pub end: u32,
}

/// A scripted object; position is the top-left corner at frame 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub size: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Number of random objects; ignored when `objects` is non-empty.
    pub n_objects: usize,
    pub objects: Vec<ObjectSpec>,
    pub n_frames: u32,
    pub frame_width: f64,
    pub frame_height: f64,
    /// Speed range in px/frame; the direction is uniform.
    pub speed_range: [f64; 2],
    /// Width range in px.
    pub size_range: [f64; 2],
    /// Height / width range.
    pub aspect_range: [f64; 2],
    pub position_jitter: f64,
    pub size_jitter: f64,
    pub miss_rate: f64,
    /// Expected false positives per frame.
    pub fp_rate: f64,
    pub score_range: [f64; 2],
    pub fp_score_range: [f64; 2],
    pub occlusions: Vec<Occlusion>,
    /// Mean camera translation per frame, px.
    pub camera_velocity: [f64; 2],
    /// Std of the per-frame camera translation noise, px.
    pub camera_jitter: f64,
    /// 0 disables embeddings.
    pub embedding_dim: usize,
    pub embedding_noise: f64,
    /// Background correspondences per frame (0 disables corr.txt).
    pub background_points: usize,
    pub background_outlier_rate: f64,
    /// Store object 0's first box as the sequence's initial box.
    pub init_box: bool,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "synth".into(),
            n_objects: 5,
            objects: Vec::new(),
            n_frames: 300,
            frame_width: 640.0,
            frame_height: 512.0,
            speed_range: [0.5, 3.0],
            size_range: [2.0, 30.0],
            aspect_range: [0.6, 1.0],
            position_jitter: 0.0,
            size_jitter: 0.0,
            miss_rate: 0.0,
            fp_rate: 0.0,
            score_range: [0.75, 0.95],
            fp_score_range: [0.1, 0.8],
            occlusions: Vec::new(),
            camera_velocity: [0.0, 0.0],
            camera_jitter: 0.0,
            embedding_dim: 32,
            embedding_noise: 0.1,
            background_points: 0,
            background_outlier_rate: 0.0,
            init_box: false,
            seed: 0,
        }
    }
}

fn check_range(name: &str, r: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    if r[0].is_finite() && r[1].is_finite() && lo <= r[0] && r[0] <= r[1] && r[1] <= hi {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{name} = {r:?} must be ordered within [{lo}, {hi}]"
        )))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.n_frames < 1 {
            return cfg_err("n_frames must be >= 1".into());
        }
        if !(self.frame_width > 0.0 && self.frame_height > 0.0) {
            return cfg_err("frame size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.miss_rate) {
            return cfg_err(format!("miss_rate = {} must lie in [0, 1]", self.miss_rate));
        }
        if !(0.0..=1.0).contains(&self.background_outlier_rate) {
            return cfg_err("background_outlier_rate must lie in [0, 1]".into());
        }
        if !(self.fp_rate >= 0.0 && self.fp_rate.is_finite()) {
            return cfg_err(format!("fp_rate = {} must be >= 0", self.fp_rate));
        }
        for (n, v) in [
            ("position_jitter", self.position_jitter),
            ("size_jitter", self.size_jitter),
            ("camera_jitter", self.camera_jitter),
            ("embedding_noise", self.embedding_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return cfg_err(format!("{n} = {v} must be >= 0"));
            }
        }
        check_range("speed_range", self.speed_range, 0.0, f64::MAX)?;
        let max_side = self.frame_width.min(self.frame_height);
        check_range("size_range", self.size_range, f64::MIN_POSITIVE, max_side)?;
        check_range(
            "aspect_range",
            self.aspect_range,
            f64::MIN_POSITIVE,
            f64::MAX,
        )?;
        check_range("score_range", self.score_range, 0.0, 1.0)?;
        check_range("fp_score_range", self.fp_score_range, 0.0, 1.0)?;
        for o in &self.objects {
            let b = BoundingBox::new(o.position[0], o.position[1], o.size[0], o.size[1])?;
            if b.right() > self.frame_width
                || b.bottom() > self.frame_height
                || b.x < 0.0
                || b.y < 0.0
            {
                return cfg_err(format!("scripted object {o:?} starts outside the frame"));
            }
        }
        let n = self.object_count();
        for occ in &self.occlusions {
            if occ.object >= n || occ.start > occ.end {
                return cfg_err(format!("invalid occlusion window {occ:?}"));
            }
        }
        Ok(())
    }

    pub fn object_count(&self) -> usize {
        if self.objects.is_empty() {
            self.n_objects
        } else {
            self.objects.len()
        }
    }
}

mod stream {
    pub const OBJECT: u64 = 1;
    pub const DETECTION: u64 = 2;
    pub const FALSE_POSITIVE: u64 = 3;
    pub const EMBEDDING: u64 = 4;
    pub const CAMERA: u64 = 5;
    pub const BACKGROUND: u64 = 6;
}

fn rng_for(seed: u64, stream: u64, index: u64) -> SplitMix64 {
    let mut root = SplitMix64::seed_from_u64(seed);
    let a = root.next_u64() ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut mid = SplitMix64::seed_from_u64(a);
    SplitMix64::seed_from_u64(mid.next_u64() ^ index)
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn gaussian(rng: &mut impl Rng, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        let z: f64 = StandardNormal.sample(rng);
        std * z
    }
}

fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(u) = normalize(&v) {
            return u;
        }
    }
}

#[derive(Debug, Clone)]
struct Mover {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    w: f64,
    h: f64,
    base: Vec<f64>,
}

/// Reflects a coordinate into `[0, limit]`, flipping `v` on each bounce.
fn reflect(mut p: f64, v: &mut f64, limit: f64) -> f64 {
    if limit <= 0.0 {
        return 0.0;
    }
    for _ in 0..64 {
        if p < 0.0 {
            p = -p;
            *v = -*v;
        } else if p > limit {
            p = 2.0 * limit - p;
            *v = -*v;
        } else {
            return p;
        }
    }
    p.clamp(0.0, limit)
}

impl Mover {
    fn advance(&mut self, width: f64, height: f64) {
        self.x = reflect(self.x + self.vx, &mut self.vx, width - self.w);
        self.y = reflect(self.y + self.vy, &mut self.vy, height - self.h);
    }

    fn bbox(&self) -> BoundingBox {
        BoundingBox {
            x: self.x,
            y: self.y,
            w: self.w,
            h: self.h,
        }
    }
}

fn init_movers(cfg: &ScenarioConfig) -> Vec<Mover> {
    let dim = cfg.embedding_dim;
    (0..cfg.object_count())
        .map(|i| {
            let mut rng = rng_for(cfg.seed, stream::OBJECT, i as u64);
            let base = if dim > 0 {
                random_unit(&mut rng, dim)
            } else {
                Vec::new()
            };
            if let Some(o) = cfg.objects.get(i) {
                return Mover {
                    x: o.position[0],
                    y: o.position[1],
                    vx: o.velocity[0],
                    vy: o.velocity[1],
                    w: o.size[0],
                    h: o.size[1],
                    base,
                };
            }
            let w = uniform(&mut rng, cfg.size_range);
            let h = (w * uniform(&mut rng, cfg.aspect_range)).min(cfg.frame_height);
            let x = uniform(&mut rng, [0.0, cfg.frame_width - w]);
            let y = uniform(&mut rng, [0.0, cfg.frame_height - h]);
            let speed = uniform(&mut rng, cfg.speed_range);
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            Mover {
                x,
                y,
                vx: speed * angle.cos(),
                vy: speed * angle.sin(),
                w,
                h,
                base,
            }
        })
        .collect()
}

/// Builds a full sequence bundle from `cfg`.
pub fn generate(cfg: &ScenarioConfig) -> Result<SequenceBundle> {
    cfg.validate()?;
    let (fw, fh) = (cfg.frame_width, cfg.frame_height);
    let dim = cfg.embedding_dim;
    let mut movers = init_movers(cfg);
    let occluded = |obj: usize, f: u32| {
        cfg.occlusions
            .iter()
            .any(|o| o.object == obj && (o.start..=o.end).contains(&f))
    };
    let poisson = if cfg.fp_rate > 0.0 {
        Some(Poisson::new(cfg.fp_rate).map_err(|e| Error::Config(format!("fp_rate: {e}")))?)
    } else {
        None
    };

    let mut gt = Vec::new();
    let mut dets: BTreeMap<u32, Vec<Detection>> = BTreeMap::new();
    let mut emb = EmbeddingTable::new(dim);
    let mut gmc = GmcMap::default();
    let mut corr: BTreeMap<u32, Vec<Correspondence>> = BTreeMap::new();
    let mut offset = [0.0f64; 2];

    for f in 1..=cfg.n_frames {
        if f > 1 {
            for m in &mut movers {
                m.advance(fw, fh);
            }
            let mut rng = rng_for(cfg.seed, stream::CAMERA, f as u64);
            let dx = cfg.camera_velocity[0] + gaussian(&mut rng, cfg.camera_jitter);
            let dy = cfg.camera_velocity[1] + gaussian(&mut rng, cfg.camera_jitter);
            offset = [offset[0] + dx, offset[1] + dy];
            let step = AffineTransform::translation(dx, dy);
            gmc.transforms.insert(f, step);
            if cfg.background_points > 0 {
                let mut rng = rng_for(cfg.seed, stream::BACKGROUND, f as u64);
                let pairs = (0..cfg.background_points)
                    .map(|_| {
                        let px = rng.random_range(0.0..fw);
                        let py = rng.random_range(0.0..fh);
                        if rng.random_bool(cfg.background_outlier_rate) {
                            Correspondence::new(
                                px,
                                py,
                                rng.random_range(0.0..fw),
                                rng.random_range(0.0..fh),
                            )
                        } else {
                            Correspondence::new(px, py, px + dx, py + dy)
                        }
                    })
                    .collect();
                corr.insert(f, pairs);
            }
        } else {
            gmc.transforms.insert(1, AffineTransform::identity());
        }
        let shift = |b: BoundingBox| b.translated(offset[0], offset[1]);

        let mut frame_dets = Vec::new();
        let mut frame_emb = Vec::new();
        let mut det_rng = rng_for(cfg.seed, stream::DETECTION, f as u64);
        let mut emb_rng = rng_for(cfg.seed, stream::EMBEDDING, f as u64);
        for (i, m) in movers.iter().enumerate() {
            let visible = !occluded(i, f);
            gt.push(GtBox {
                frame: f,
                id: i as u64 + 1,
                bbox: shift(m.bbox()),
                visible,
            });
            // draws happen whether or not the object is detected, so the
            // stream stays aligned across miss/occlusion settings
            let missed = det_rng.random_bool(cfg.miss_rate);
            let jx = gaussian(&mut det_rng, cfg.position_jitter);
            let jy = gaussian(&mut det_rng, cfg.position_jitter);
            let jw = gaussian(&mut det_rng, cfg.size_jitter);
            let jh = gaussian(&mut det_rng, cfg.size_jitter);
            let score = uniform(&mut det_rng, cfg.score_range);
            let feature: Vec<f64> = if dim > 0 {
                let noisy: Vec<f64> = m
                    .base
                    .iter()
                    .map(|b| b + gaussian(&mut emb_rng, cfg.embedding_noise))
                    .collect();
                normalize(&noisy).unwrap_or_else(|| m.base.clone())
            } else {
                Vec::new()
            };
            if !visible || missed {
                continue;
            }
            let b = BoundingBox {
                x: m.x + jx,
                y: m.y + jy,
                w: (m.w + jw).max(0.5),
                h: (m.h + jh).max(0.5),
            };
            frame_dets.push((shift(b), score));
            frame_emb.push(feature);
        }
        if let Some(p) = &poisson {
            let mut rng = rng_for(cfg.seed, stream::FALSE_POSITIVE, f as u64);
            let n = p.sample(&mut rng) as usize;
            for _ in 0..n {
                let w = uniform(&mut rng, cfg.size_range);
                let h = (w * uniform(&mut rng, cfg.aspect_range)).min(fh);
                let x = uniform(&mut rng, [0.0, fw - w]);
                let y = uniform(&mut rng, [0.0, fh - h]);
                let score = uniform(&mut rng, cfg.fp_score_range);
                let feature = if dim > 0 {
                    random_unit(&mut rng, dim)
                } else {
                    Vec::new()
                };
                frame_dets.push((shift(BoundingBox { x, y, w, h }), score));
                frame_emb.push(feature);
            }
        }
        let list: Vec<Detection> = frame_dets
            .into_iter()
            .enumerate()
            .map(|(k, (bbox, score))| Detection {
                bbox,
                score,
                embedding_ref: Some(k),
            })
            .collect();
        if dim > 0 {
            for (k, v) in frame_emb.into_iter().enumerate() {
                emb.insert(f, k, v)?;
            }
        }
        if !list.is_empty() {
            dets.insert(f, list);
        }
    }

    let init_box = if cfg.init_box {
        gt.iter()
            .find(|g| g.frame == 1 && g.id == 1)
            .map(|g| g.bbox.to_array())
    } else {
        None
    };
    Ok(SequenceBundle {
        info: SequenceInfo {
            name: cfg.name.clone(),
            frames: cfg.n_frames,
            width: Some(fw),
            height: Some(fh),
            init_box,
            init_box_resolution: None,
        },
        detections: DetectionSet {
            frames: dets,
            ..Default::default()
        },
        embeddings: (dim > 0).then_some(emb),
        gmc: Some(gmc),
        gt: Some(gt),
        correspondences: (cfg.background_points > 0).then_some(corr),
    })
}
