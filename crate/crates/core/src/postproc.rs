//! Offline linear interpolation across short gaps in finished tracks.

use std::collections::BTreeMap;

use crate::geometry::BoundingBox;
use crate::io::TrackRow;
use crate::tracker::TrackId;

pub const DEFAULT_MAX_GAP: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub frame: u32,
    pub bbox: BoundingBox,
    pub score: f64,
}

/// One identity's observations in increasing frame order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tracklet {
    pub id: TrackId,
    pub observations: Vec<Observation>,
}

/// Groups rows by id, ordered by id and then by frame.
pub fn tracklets_from_rows(rows: &[TrackRow]) -> Vec<Tracklet> {
    let mut by_id: BTreeMap<TrackId, Vec<Observation>> = BTreeMap::new();
    for r in rows {
        by_id.entry(r.id).or_default().push(Observation {
            frame: r.frame,
            bbox: r.bbox,
            score: r.score,
        });
    }
    by_id
        .into_iter()
        .map(|(id, mut observations)| {
            observations.sort_by_key(|o| o.frame);
            Tracklet { id, observations }
        })
        .collect()
}

pub fn tracklets_to_rows(tracklets: &[Tracklet]) -> Vec<TrackRow> {
    let mut rows: Vec<TrackRow> = tracklets
        .iter()
        .flat_map(|t| {
            t.observations.iter().map(move |o| TrackRow {
                frame: o.frame,
                id: t.id,
                bbox: o.bbox,
                score: o.score,
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.id));
    rows
}

/// `((g - k) a + k b) / g`, kept inside `[min(a, b), max(a, b)]`.
fn lerp(a: f64, b: f64, k: u32, g: u32) -> f64 {
    let v = ((g - k) as f64 * a + k as f64 * b) / g as f64;
    v.clamp(a.min(b), a.max(b))
}

/// Fills every gap of `2..=max_gap` frames between consecutive observations
/// of a tracklet. Inserted boxes are linear in the frame index; their score
/// is the mean of the two bracketing scores.
pub fn interpolate(tracklets: &[Tracklet], max_gap: u32) -> Vec<Tracklet> {
    tracklets
        .iter()
        .map(|t| {
            let mut out = Vec::with_capacity(t.observations.len());
            for (i, o) in t.observations.iter().enumerate() {
                if i > 0 {
                    let p = &t.observations[i - 1];
                    let g = o.frame - p.frame;
                    if (2..=max_gap).contains(&g) {
                        let score = (p.score + o.score) / 2.0;
                        for k in 1..g {
                            let (a, b) = (p.bbox, o.bbox);
                            out.push(Observation {
                                frame: p.frame + k,
                                bbox: BoundingBox {
                                    x: lerp(a.x, b.x, k, g),
                                    y: lerp(a.y, b.y, k, g),
                                    w: lerp(a.w, b.w, k, g),
                                    h: lerp(a.h, b.h, k, g),
                                },
                                score,
                            });
                        }
                    }
                }
                out.push(*o);
            }
            Tracklet {
                id: t.id,
                observations: out,
            }
        })
        .collect()
}

/// Row-level convenience wrapper around [`interpolate`].
pub fn interpolate_rows(rows: &[TrackRow], max_gap: u32) -> Vec<TrackRow> {
    tracklets_to_rows(&interpolate(&tracklets_from_rows(rows), max_gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn obs(frame: u32, x: f64, score: f64) -> Observation {
        Observation {
            frame,
            bbox: BoundingBox {
                x,
                y: 2.0 * x,
                w: 10.0,
                h: 10.0 + x / 10.0,
            },
            score,
        }
    }

    #[test]
    fn fills_gap_exactly() {
        let t = Tracklet {
            id: 1,
            observations: vec![obs(1, 0.0, 0.8), obs(11, 100.0, 0.6)],
        };
        let out = interpolate(&[t], 20);
        let o = &out[0].observations;
        assert_eq!(o.len(), 11);
        for (i, ob) in o.iter().enumerate() {
            assert_eq!(ob.frame, i as u32 + 1);
            assert_eq!(ob.bbox.x, 10.0 * i as f64);
        }
        assert!((o[5].score - 0.7).abs() < 1e-15);
    }

    #[test]
    fn respects_max_gap() {
        let t = Tracklet {
            id: 1,
            observations: vec![obs(1, 0.0, 0.5), obs(30, 1.0, 0.5)],
        };
        assert_eq!(interpolate(&[t.clone()], 20), vec![t.clone()]);
        assert_eq!(interpolate(&[t], 29)[0].observations.len(), 30);
        let adj = Tracklet {
            id: 2,
            observations: vec![obs(1, 0.0, 0.5), obs(2, 1.0, 0.5)],
        };
        assert_eq!(interpolate(&[adj.clone()], 20), vec![adj]);
    }

    #[test]
    fn rows_round_trip() {
        let rows = vec![
            TrackRow {
                frame: 1,
                id: 2,
                bbox: obs(1, 0.0, 0.5).bbox,
                score: 0.5,
            },
            TrackRow {
                frame: 1,
                id: 1,
                bbox: obs(1, 4.0, 0.5).bbox,
                score: 0.5,
            },
            TrackRow {
                frame: 3,
                id: 1,
                bbox: obs(3, 8.0, 0.5).bbox,
                score: 0.7,
            },
        ];
        let out = interpolate_rows(&rows, 20);
        assert_eq!(out.len(), 4);
        assert_eq!((out[2].frame, out[2].id), (2, 1));
        assert_eq!(out[2].bbox.x, 6.0);
    }

    proptest! {
        #[test]
        fn idempotent_and_convex(
            frames in proptest::collection::btree_set(1u32..200, 1..15),
            xs in proptest::collection::vec(-500.0f64..500.0, 15),
            max_gap in 1u32..40,
        ) {
            let observations: Vec<Observation> = frames
                .iter()
                .zip(&xs)
                .map(|(&f, &x)| obs(f, x, 0.5))
                .collect();
            let t = vec![Tracklet { id: 1, observations }];
            let once = interpolate(&t, max_gap);
            let twice = interpolate(&once, max_gap);
            prop_assert_eq!(&once, &twice);
            let orig = &t[0].observations;
            for w in orig.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                for o in once[0].observations.iter().filter(|o| o.frame > a.frame && o.frame < b.frame) {
                    let lo = a.bbox.x.min(b.bbox.x);
                    let hi = a.bbox.x.max(b.bbox.x);
                    prop_assert!(o.bbox.x >= lo && o.bbox.x <= hi);
                    prop_assert!(o.bbox.h >= a.bbox.h.min(b.bbox.h) && o.bbox.h <= a.bbox.h.max(b.bbox.h));
                }
            }
        }
    }
}
