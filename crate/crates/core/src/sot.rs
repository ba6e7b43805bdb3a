//! Reduces multi-object tracker output to one box per frame.

use serde::{Deserialize, Serialize};

use crate::geometry::BoundingBox;
use crate::tracker::{FrameOutput, TrackId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SotSource {
    Online,
    LostPrediction,
    LastKnown,
    Abstained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SotRecord {
    pub frame: u32,
    pub bbox: Option<BoundingBox>,
    pub source: SotSource,
    pub reported_id: Option<TrackId>,
}

/// A 1x1 box at the frame centre, used before any track has been seen.
pub fn frame_center_box(width: f64, height: f64) -> BoundingBox {
    BoundingBox {
        x: width / 2.0 - 0.5,
        y: height / 2.0 - 0.5,
        w: 1.0,
        h: 1.0,
    }
}

#[derive(Debug, Clone)]
pub struct SotSelector {
    track_buffer: u32,
    abstain_when_lost: bool,
    last_box: BoundingBox,
    last_id: Option<TrackId>,
}

impl SotSelector {
    pub fn new(track_buffer: u32, fallback: BoundingBox) -> Self {
        SotSelector {
            track_buffer,
            abstain_when_lost: false,
            last_box: fallback,
            last_id: None,
        }
    }

    /// Emit no box instead of the last known one when the target is gone.
    pub fn abstain_when_lost(mut self, yes: bool) -> Self {
        self.abstain_when_lost = yes;
        self
    }

    pub fn select(&mut self, out: &FrameOutput) -> SotRecord {
        let best = out
            .online
            .iter()
            .min_by(|a, b| b.score.total_cmp(&a.score).then(a.id.cmp(&b.id)));
        if let Some(t) = best {
            self.last_id = Some(t.id);
            self.last_box = t.bbox;
            return SotRecord {
                frame: out.frame,
                bbox: Some(t.bbox),
                source: SotSource::Online,
                reported_id: Some(t.id),
            };
        }
        if let Some(id) = self.last_id {
            let pred = out.lost.iter().find(|t| {
                t.id == id && out.frame.saturating_sub(t.last_frame) <= self.track_buffer
            });
            if let Some(t) = pred {
                self.last_box = t.bbox;
                return SotRecord {
                    frame: out.frame,
                    bbox: Some(t.bbox),
                    source: SotSource::LostPrediction,
                    reported_id: Some(id),
                };
            }
        }
        if self.abstain_when_lost {
            SotRecord {
                frame: out.frame,
                bbox: None,
                source: SotSource::Abstained,
                reported_id: None,
            }
        } else {
            SotRecord {
                frame: out.frame,
                bbox: Some(self.last_box),
                source: SotSource::LastKnown,
                reported_id: None,
            }
        }
    }
}

/// Runs a fresh selector over consecutive frame outputs.
pub fn sot_select(
    frames: &[FrameOutput],
    track_buffer: u32,
    fallback: BoundingBox,
) -> Vec<SotRecord> {
    let mut sel = SotSelector::new(track_buffer, fallback);
    frames.iter().map(|f| sel.select(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracker::{TrackOutput, TrackState};

    fn track(id: TrackId, x: f64, score: f64, state: TrackState, last: u32) -> TrackOutput {
        TrackOutput {
            id,
            bbox: BoundingBox {
                x,
                y: 0.0,
                w: 4.0,
                h: 4.0,
            },
            score,
            state,
            last_frame: last,
        }
    }

    fn frame(f: u32, online: Vec<TrackOutput>, lost: Vec<TrackOutput>) -> FrameOutput {
        FrameOutput {
            frame: f,
            online,
            lost,
        }
    }

    #[test]
    fn picks_highest_score_then_lowest_id() {
        let fb = frame_center_box(100.0, 80.0);
        let out = frame(
            1,
            vec![
                track(3, 1.0, 0.9, TrackState::Tracked, 1),
                track(2, 2.0, 0.9, TrackState::Tracked, 1),
                track(1, 3.0, 0.8, TrackState::Tracked, 1),
            ],
            vec![],
        );
        let r = sot_select(&[out], 30, fb);
        assert_eq!(r[0].reported_id, Some(2));
        assert_eq!(r[0].source, SotSource::Online);
    }

    #[test]
    fn dropout_sequence_of_sources() {
        let fb = frame_center_box(100.0, 80.0);
        assert_eq!(
            fb,
            BoundingBox {
                x: 49.5,
                y: 39.5,
                w: 1.0,
                h: 1.0
            }
        );
        let frames = vec![
            frame(1, vec![], vec![]),
            frame(2, vec![track(7, 10.0, 0.9, TrackState::Tracked, 2)], vec![]),
            frame(3, vec![], vec![track(7, 12.0, 0.9, TrackState::Lost, 2)]),
            frame(4, vec![], vec![track(7, 14.0, 0.9, TrackState::Lost, 2)]),
            frame(5, vec![], vec![]),
            frame(6, vec![], vec![]),
        ];
        let r = sot_select(&frames, 30, fb);
        let src: Vec<SotSource> = r.iter().map(|r| r.source).collect();
        use SotSource::*;
        assert_eq!(
            src,
            vec![
                LastKnown,
                Online,
                LostPrediction,
                LostPrediction,
                LastKnown,
                LastKnown
            ]
        );
        assert_eq!(r[0].bbox, Some(fb));
        assert_eq!(r[4].bbox.unwrap().x, 14.0);
        assert_eq!(r[5].bbox.unwrap().x, 14.0);
    }

    #[test]
    fn lost_other_id_is_ignored_and_buffer_respected() {
        let fb = frame_center_box(10.0, 10.0);
        let frames = vec![
            frame(1, vec![track(1, 5.0, 0.9, TrackState::Tracked, 1)], vec![]),
            frame(2, vec![], vec![track(2, 8.0, 0.9, TrackState::Lost, 1)]),
            frame(40, vec![], vec![track(1, 9.0, 0.9, TrackState::Lost, 1)]),
        ];
        let r = sot_select(&frames, 30, fb);
        assert_eq!(r[1].source, SotSource::LastKnown);
        assert_eq!(r[1].bbox.unwrap().x, 5.0);
        assert_eq!(r[2].source, SotSource::LastKnown);
    }

    #[test]
    fn abstain_mode() {
        let mut s = SotSelector::new(30, frame_center_box(10.0, 10.0)).abstain_when_lost(true);
        let r = s.select(&frame(1, vec![], vec![]));
        assert_eq!(r.bbox, None);
        assert_eq!(r.source, SotSource::Abstained);
    }
}
