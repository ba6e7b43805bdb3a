//! Per-frame tracking with two-stage association, camera motion
//! compensation and buffer-based track retention.

use serde::{Deserialize, Serialize};

use crate::assoc::{
    embedding_cost, fuse_costs, iou_cost, linear_assignment, CostMatrix, Embedding,
};
use crate::cmc::{warp_state, AffineTransform};
use crate::error::{Error, Result};
use crate::geometry::{area, BoundingBox, Detection};
use crate::io::EmbeddingTable;
use crate::kalman::{KalmanConfig, KalmanFilter, KalmanState, CHI2_95_4DOF};

pub type TrackId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrackState {
    /// Created from a detection but not yet confirmed by a second match.
    New,
    Tracked,
    Lost,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: TrackId,
    pub state: TrackState,
    pub kstate: KalmanState,
    pub feature: Option<Embedding>,
    pub score: f64,
    pub start_frame: u32,
    /// Frame of the last successful match.
    pub last_frame: u32,
}

impl Track {
    pub fn bbox(&self) -> BoundingBox {
        self.kstate.to_box()
    }

    fn mark_matched(
        &mut self,
        kf: &KalmanFilter,
        det: &Detection,
        feature: Option<&Embedding>,
        frame: u32,
        ema_alpha: f64,
    ) -> Result<()> {
        self.kstate = kf.update(&self.kstate, &det.bbox)?;
        self.score = det.score;
        self.last_frame = frame;
        self.state = TrackState::Tracked;
        if let Some(f) = feature {
            self.feature = Some(match &self.feature {
                Some(old) => old.smoothed(f, ema_alpha),
                None => f.clone(),
            });
        }
        Ok(())
    }
}

/// Tracker parameters. Field names double as CLI flag names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub track_high_thresh: f64,
    pub track_low_thresh: f64,
    pub new_track_thresh: f64,
    pub match_thresh: f64,
    pub second_match_thresh: f64,
    /// Threshold for confirming New tracks against leftover detections.
    pub unconfirmed_match_thresh: f64,
    /// Frames a Lost track is kept since its last match.
    pub track_buffer: u32,
    pub min_box_area: f64,
    pub proximity_thresh: f64,
    pub appearance_thresh: f64,
    pub ema_alpha: f64,
    pub with_reid: bool,
    pub with_cmc: bool,
    /// Forbid pairs beyond the chi-square 95% Mahalanobis gate.
    pub gating: bool,
    pub kalman: KalmanConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            track_high_thresh: 0.6,
            track_low_thresh: 0.1,
            new_track_thresh: 0.7,
            match_thresh: 0.8,
            second_match_thresh: 0.5,
            unconfirmed_match_thresh: 0.7,
            track_buffer: 30,
            min_box_area: 10.0,
            proximity_thresh: 0.5,
            appearance_thresh: 0.25,
            ema_alpha: 0.9,
            with_reid: false,
            with_cmc: false,
            gating: true,
            kalman: KalmanConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("track_high_thresh", self.track_high_thresh),
            ("track_low_thresh", self.track_low_thresh),
            ("new_track_thresh", self.new_track_thresh),
            ("match_thresh", self.match_thresh),
            ("second_match_thresh", self.second_match_thresh),
            ("unconfirmed_match_thresh", self.unconfirmed_match_thresh),
            ("proximity_thresh", self.proximity_thresh),
            ("appearance_thresh", self.appearance_thresh),
            ("ema_alpha", self.ema_alpha),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        if self.track_buffer < 1 {
            return Err(Error::Config("track_buffer must be >= 1".into()));
        }
        if !(self.min_box_area >= 0.0 && self.min_box_area.is_finite()) {
            return Err(Error::Config(format!(
                "min_box_area = {} must be a finite value >= 0",
                self.min_box_area
            )));
        }
        let k = self.kalman;
        if !(k.std_weight_position > 0.0 && k.std_weight_velocity > 0.0) {
            return Err(Error::Config(
                "Kalman noise weights must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Snapshot of one track as reported for a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackOutput {
    pub id: TrackId,
    pub bbox: BoundingBox,
    pub score: f64,
    pub state: TrackState,
    pub last_frame: u32,
}

impl From<&Track> for TrackOutput {
    fn from(t: &Track) -> Self {
        TrackOutput {
            id: t.id,
            bbox: t.bbox(),
            score: t.score,
            state: t.state,
            last_frame: t.last_frame,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameOutput {
    pub frame: u32,
    /// Tracked tracks with area above `min_box_area`, by id.
    pub online: Vec<TrackOutput>,
    /// Lost tracks with their predicted boxes, by id.
    pub lost: Vec<TrackOutput>,
}

/// Stateful tracker for one sequence at a time.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    kf: KalmanFilter,
    tracks: Vec<Track>,
    next_id: TrackId,
    last_frame: Option<u32>,
}

struct Candidate<'a> {
    det: &'a Detection,
    feature: Option<&'a Embedding>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Tracker {
            config,
            kf: KalmanFilter::new(config.kalman),
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live (non-removed) tracks in creation order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Forgets all tracks and restarts ids at 1.
    pub fn reset(&mut self) {
        self.tracks.clear();
        self.next_id = 1;
        self.last_frame = None;
    }

    fn lookup_features<'a>(
        &self,
        frame: u32,
        dets: &'a [Detection],
        table: Option<&'a EmbeddingTable>,
        required: bool,
    ) -> Result<Vec<Candidate<'a>>> {
        dets.iter()
            .map(|det| {
                let feature = match (table, det.embedding_ref) {
                    (Some(t), Some(idx)) => match t.get(frame, idx) {
                        Some(f) => Some(f),
                        None if required => {
                            return Err(Error::MissingEmbedding { frame, index: idx })
                        }
                        None => None,
                    },
                    _ => None,
                };
                Ok(Candidate { det, feature })
            })
            .collect()
    }

    fn association_cost(
        &self,
        track_idx: &[usize],
        cands: &[Candidate<'_>],
        with_appearance: bool,
    ) -> Result<CostMatrix> {
        let boxes: Vec<BoundingBox> = track_idx.iter().map(|&i| self.tracks[i].bbox()).collect();
        let det_boxes: Vec<BoundingBox> = cands.iter().map(|c| c.det.bbox).collect();
        let ious = iou_cost(&boxes, &det_boxes);
        let mut cost = if with_appearance {
            let emb = self.appearance_cost(track_idx, cands)?;
            fuse_costs(
                &ious,
                &emb,
                self.config.proximity_thresh,
                self.config.appearance_thresh,
            )?
        } else {
            ious
        };
        if self.config.gating {
            for (r, &ti) in track_idx.iter().enumerate() {
                let d = self
                    .kf
                    .gating_distance(&self.tracks[ti].kstate, &det_boxes)?;
                for (c, dist) in d.into_iter().enumerate() {
                    if dist > CHI2_95_4DOF {
                        cost.forbid(r, c);
                    }
                }
            }
        }
        Ok(cost)
    }

    /// Appearance cost; pairs missing a feature on either side cost 1.
    fn appearance_cost(&self, track_idx: &[usize], cands: &[Candidate<'_>]) -> Result<CostMatrix> {
        let mut cost = CostMatrix::filled(track_idx.len(), cands.len(), 1.0);
        let rows: Vec<usize> = (0..track_idx.len())
            .filter(|&r| self.tracks[track_idx[r]].feature.is_some())
            .collect();
        let cols: Vec<usize> = (0..cands.len())
            .filter(|&c| cands[c].feature.is_some())
            .collect();
        let tf: Vec<&[f64]> = rows
            .iter()
            .map(|&r| {
                self.tracks[track_idx[r]]
                    .feature
                    .as_ref()
                    .map(Embedding::as_slice)
                    .unwrap_or(&[])
            })
            .collect();
        let df: Vec<&[f64]> = cols
            .iter()
            .map(|&c| cands[c].feature.map(Embedding::as_slice).unwrap_or(&[]))
            .collect();
        let sub = embedding_cost(&tf, &df)?;
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                cost.set(r, c, sub.get(i, j));
            }
        }
        Ok(cost)
    }

    /// Associates `track_idx` with `cands`, updating matched tracks.
    /// Returns the unmatched track and candidate positions.
    fn associate(
        &mut self,
        frame: u32,
        track_idx: &[usize],
        cands: &[Candidate<'_>],
        thresh: f64,
        with_appearance: bool,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        if track_idx.is_empty() || cands.is_empty() {
            return Ok((track_idx.to_vec(), (0..cands.len()).collect()));
        }
        let cost = self.association_cost(track_idx, cands, with_appearance)?;
        let a = linear_assignment(&cost, thresh);
        let kf = self.kf;
        let alpha = self.config.ema_alpha;
        for &(r, c) in &a.matches {
            let cand = &cands[c];
            self.tracks[track_idx[r]].mark_matched(&kf, cand.det, cand.feature, frame, alpha)?;
        }
        Ok((
            a.unmatched_rows.iter().map(|&r| track_idx[r]).collect(),
            a.unmatched_cols,
        ))
    }

    /// Advances the tracker by one frame.
    ///
    /// `embeddings` is looked up by `(frame, det.embedding_ref)`; it is
    /// required when `with_reid` is set. `affine` maps frame `frame - 1`
    /// coordinates to frame `frame` coordinates.
    pub fn step(
        &mut self,
        frame: u32,
        dets: &[Detection],
        embeddings: Option<&EmbeddingTable>,
        affine: Option<&AffineTransform>,
    ) -> Result<FrameOutput> {
        if let Some(prev) = self.last_frame {
            if frame <= prev {
                return Err(Error::NonMonotonicFrame { prev, got: frame });
            }
        }
        if self.config.with_reid && embeddings.is_none() {
            return Err(Error::EmbeddingsRequired);
        }
        for d in dets {
            d.bbox.validate()?;
        }
        if let Some(a) = affine {
            a.validate()?;
        }
        let first_frame = self.last_frame.is_none();
        self.last_frame = Some(frame);
        let cfg = self.config;
        let reid = cfg.with_reid;

        let high_dets: Vec<Detection> = dets
            .iter()
            .filter(|d| d.score >= cfg.track_high_thresh)
            .copied()
            .collect();
        let low_dets: Vec<Detection> = dets
            .iter()
            .filter(|d| d.score >= cfg.track_low_thresh && d.score < cfg.track_high_thresh)
            .copied()
            .collect();
        let high = self.lookup_features(frame, &high_dets, embeddings, reid)?;
        let low = self.lookup_features(frame, &low_dets, embeddings, false)?;

        for t in &mut self.tracks {
            if matches!(t.state, TrackState::Tracked | TrackState::Lost) {
                t.kstate = self.kf.predict(&t.kstate);
            }
        }
        if let Some(a) = affine {
            for t in &mut self.tracks {
                t.kstate = warp_state(&t.kstate, a)?;
            }
        }

        let by_state = |tracks: &[Track], s: TrackState| -> Vec<usize> {
            tracks
                .iter()
                .enumerate()
                .filter(|(_, t)| t.state == s)
                .map(|(i, _)| i)
                .collect()
        };
        let was_tracked = by_state(&self.tracks, TrackState::Tracked);
        let mut pool = was_tracked.clone();
        pool.extend(by_state(&self.tracks, TrackState::Lost));
        let unconfirmed = by_state(&self.tracks, TrackState::New);

        // First stage: confident detections against tracked and lost tracks.
        let (rest_pool, rest_high) = self.associate(frame, &pool, &high, cfg.match_thresh, reid)?;

        // Second stage: low-score detections, previously tracked tracks only.
        let r_tracked: Vec<usize> = rest_pool
            .into_iter()
            .filter(|i| was_tracked.contains(i))
            .collect();
        let (still_unmatched, _) =
            self.associate(frame, &r_tracked, &low, cfg.second_match_thresh, false)?;
        for i in still_unmatched {
            self.tracks[i].state = TrackState::Lost;
        }

        // New tracks need a second match to be confirmed.
        let left: Vec<Candidate<'_>> = rest_high
            .iter()
            .map(|&c| Candidate {
                det: high[c].det,
                feature: high[c].feature,
            })
            .collect();
        let (dead, rest_left) = self.associate(
            frame,
            &unconfirmed,
            &left,
            cfg.unconfirmed_match_thresh,
            reid,
        )?;
        for i in dead {
            self.tracks[i].state = TrackState::Removed;
        }

        for c in rest_left {
            let cand = &left[c];
            if cand.det.score < cfg.new_track_thresh {
                continue;
            }
            let kstate = self.kf.initiate(&cand.det.bbox)?;
            let id = self.next_id;
            self.next_id += 1;
            self.tracks.push(Track {
                id,
                state: if first_frame {
                    TrackState::Tracked
                } else {
                    TrackState::New
                },
                kstate,
                feature: cand.feature.cloned(),
                score: cand.det.score,
                start_frame: frame,
                last_frame: frame,
            });
        }

        for t in &mut self.tracks {
            if t.state == TrackState::Lost && frame - t.last_frame > cfg.track_buffer {
                t.state = TrackState::Removed;
            }
        }
        self.tracks.retain(|t| t.state != TrackState::Removed);

        let mut online: Vec<TrackOutput> = self
            .tracks
            .iter()
            .filter(|t| t.state == TrackState::Tracked && area(&t.bbox()) > cfg.min_box_area)
            .map(TrackOutput::from)
            .collect();
        let mut lost: Vec<TrackOutput> = self
            .tracks
            .iter()
            .filter(|t| t.state == TrackState::Lost)
            .map(TrackOutput::from)
            .collect();
        online.sort_by_key(|t| t.id);
        lost.sort_by_key(|t| t.id);
        Ok(FrameOutput {
            frame,
            online,
            lost,
        })
    }
}

/// Rescales a box given in `from` resolution to `to` resolution.
pub fn rescale_box(b: &BoundingBox, from: (f64, f64), to: (f64, f64)) -> BoundingBox {
    let (sx, sy) = (to.0 / from.0, to.1 / from.1);
    BoundingBox {
        x: b.x * sx,
        y: b.y * sy,
        w: b.w * sx,
        h: b.h * sy,
    }
}

/// Detections for the first frame with the initial target box injected as
/// a score-1.0 detection in front.
pub fn with_initial_box(dets: &[Detection], init: &BoundingBox) -> Vec<Detection> {
    let mut out = Vec::with_capacity(dets.len() + 1);
    out.push(Detection {
        bbox: *init,
        score: 1.0,
        embedding_ref: None,
    });
    out.extend_from_slice(dets);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: f64, y: f64, w: f64, h: f64, score: f64) -> Detection {
        Detection::new(BoundingBox::new(x, y, w, h).unwrap(), score).unwrap()
    }

    fn run(tracker: &mut Tracker, frames: &[Vec<Detection>]) -> Vec<FrameOutput> {
        frames
            .iter()
            .enumerate()
            .map(|(i, d)| tracker.step(i as u32 + 1, d, None, None).unwrap())
            .collect()
    }

    /// One object moving right by 2 px/frame; `absent` frames have no detection.
    fn single_path(n: u32, absent: impl Fn(u32) -> bool) -> Vec<Vec<Detection>> {
        (1..=n)
            .map(|f| {
                if absent(f) {
                    vec![]
                } else {
                    vec![det(100.0 + 2.0 * f as f64, 80.0, 20.0, 16.0, 0.9)]
                }
            })
            .collect()
    }

    #[test]
    fn smooth_path_keeps_one_id() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        let out = run(&mut t, &single_path(50, |_| false));
        for o in &out {
            assert_eq!(o.online.len(), 1, "frame {}", o.frame);
            assert_eq!(o.online[0].id, 1);
        }
    }

    #[test]
    fn gap_within_buffer_keeps_id() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        let out = run(&mut t, &single_path(60, |f| (21..=35).contains(&f)));
        assert_eq!(out[19].online[0].id, 1);
        assert!(out[25].online.is_empty());
        assert_eq!(out[25].lost[0].id, 1);
        assert_eq!(out[35].online[0].id, 1);
    }

    #[test]
    fn gap_beyond_buffer_new_id() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        let out = run(&mut t, &single_path(80, |f| (21..=60).contains(&f)));
        assert!(out[50].lost.is_empty());
        let after: Vec<TrackId> = out[61..]
            .iter()
            .flat_map(|o| o.online.iter().map(|t| t.id))
            .collect();
        assert!(!after.is_empty());
        assert!(after.iter().all(|&id| id > 1));
    }

    #[test]
    fn new_track_needs_confirmation_after_first_frame() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        let a = t.step(1, &[], None, None).unwrap();
        assert!(a.online.is_empty());
        let d = [det(10.0, 10.0, 10.0, 10.0, 0.9)];
        assert!(t.step(2, &d, None, None).unwrap().online.is_empty());
        let d = [det(11.0, 10.0, 10.0, 10.0, 0.9)];
        let o = t.step(3, &d, None, None).unwrap();
        assert_eq!(o.online.len(), 1);
        assert_eq!(o.online[0].id, 1);
    }

    #[test]
    fn unconfirmed_track_removed_when_unmatched() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.step(1, &[], None, None).unwrap();
        t.step(2, &[det(10.0, 10.0, 10.0, 10.0, 0.9)], None, None)
            .unwrap();
        let o = t.step(3, &[], None, None).unwrap();
        assert!(o.online.is_empty() && o.lost.is_empty());
        assert!(t.tracks().is_empty());
        let o = t
            .step(4, &[det(10.0, 10.0, 10.0, 10.0, 0.9)], None, None)
            .unwrap();
        assert!(o.online.is_empty());
        assert_eq!(t.tracks()[0].id, 2);
    }

    #[test]
    fn low_score_detections_extend_tracked_only() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.step(1, &[det(10.0, 10.0, 10.0, 10.0, 0.9)], None, None)
            .unwrap();
        let o = t
            .step(2, &[det(10.0, 10.0, 10.0, 10.0, 0.3)], None, None)
            .unwrap();
        assert_eq!(o.online.len(), 1);
        assert_eq!(o.online[0].score, 0.3);
        // lost tracks ignore low-score detections
        t.step(3, &[], None, None).unwrap();
        let o = t
            .step(4, &[det(10.0, 10.0, 10.0, 10.0, 0.3)], None, None)
            .unwrap();
        assert!(o.online.is_empty());
        assert_eq!(o.lost.len(), 1);
        // below track_low_thresh nothing happens
        let o = t
            .step(5, &[det(10.0, 10.0, 10.0, 10.0, 0.05)], None, None)
            .unwrap();
        assert_eq!(o.lost.len(), 1);
    }

    #[test]
    fn min_box_area_filters_output_only() {
        let cfg = TrackerConfig {
            min_box_area: 10.0,
            ..Default::default()
        };
        let mut t = Tracker::new(cfg).unwrap();
        let o = t
            .step(1, &[det(10.0, 10.0, 2.0, 3.0, 0.9)], None, None)
            .unwrap();
        assert!(o.online.is_empty());
        assert_eq!(t.tracks().len(), 1);
        let cfg = TrackerConfig {
            min_box_area: 4.0,
            ..Default::default()
        };
        let mut t = Tracker::new(cfg).unwrap();
        let o = t
            .step(1, &[det(10.0, 10.0, 2.0, 3.0, 0.9)], None, None)
            .unwrap();
        assert_eq!(o.online.len(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.step(3, &[], None, None).unwrap();
        assert!(matches!(
            t.step(3, &[], None, None),
            Err(Error::NonMonotonicFrame { .. })
        ));
        let mut t = Tracker::new(TrackerConfig {
            with_reid: true,
            ..Default::default()
        })
        .unwrap();
        assert!(matches!(
            t.step(1, &[], None, None),
            Err(Error::EmbeddingsRequired)
        ));
        let table = EmbeddingTable::new(2);
        let d = [det(0.0, 0.0, 5.0, 5.0, 0.9).with_embedding(0)];
        assert!(matches!(
            t.step(2, &d, Some(&table), None),
            Err(Error::MissingEmbedding { frame: 2, index: 0 })
        ));
        assert!(Tracker::new(TrackerConfig {
            track_buffer: 0,
            ..Default::default()
        })
        .is_err());
        assert!(Tracker::new(TrackerConfig {
            match_thresh: 1.5,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn reset_restarts_ids() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        let path = single_path(10, |_| false);
        let first = run(&mut t, &path);
        t.reset();
        t.reset();
        let second = run(&mut t, &path);
        assert_eq!(first, second);
        assert_eq!(second[0].online[0].id, 1);
    }

    #[test]
    fn features_are_smoothed() {
        let cfg = TrackerConfig {
            with_reid: true,
            ..Default::default()
        };
        let mut t = Tracker::new(cfg).unwrap();
        let mut table = EmbeddingTable::new(2);
        table.insert(1, 0, vec![1.0, 0.0]).unwrap();
        table.insert(2, 0, vec![0.0, 1.0]).unwrap();
        let d = [det(0.0, 0.0, 10.0, 10.0, 0.9).with_embedding(0)];
        t.step(1, &d, Some(&table), None).unwrap();
        t.step(2, &d, Some(&table), None).unwrap();
        let f = t.tracks()[0].feature.as_ref().unwrap().as_slice().to_vec();
        let n = (0.9f64 * 0.9 + 0.1 * 0.1).sqrt();
        assert!((f[0] - 0.9 / n).abs() < 1e-12 && (f[1] - 0.1 / n).abs() < 1e-12);
    }

    #[test]
    fn cmc_translation_moves_tracks() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.step(1, &[det(10.0, 10.0, 10.0, 10.0, 0.9)], None, None)
            .unwrap();
        let shift = AffineTransform::translation(30.0, 0.0);
        let o = t
            .step(2, &[det(40.0, 10.0, 10.0, 10.0, 0.9)], None, Some(&shift))
            .unwrap();
        assert_eq!(o.online.len(), 1);
        assert_eq!(o.online[0].id, 1);
        assert!((o.online[0].bbox.x - 40.0).abs() < 1e-9);
    }

    #[test]
    fn initial_box_helpers() {
        let b = BoundingBox::new(10.0, 20.0, 4.0, 6.0).unwrap();
        assert_eq!(
            rescale_box(&b, (640.0, 512.0), (1280.0, 1024.0)),
            BoundingBox::new(20.0, 40.0, 8.0, 12.0).unwrap()
        );
        let dets = with_initial_box(&[det(0.0, 0.0, 1.0, 1.0, 0.5)], &b);
        assert_eq!(dets.len(), 2);
        assert_eq!(dets[0].score, 1.0);
    }
}
