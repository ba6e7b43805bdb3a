//! Axis-aligned boxes in top-left/width/height form, IoU and area filtering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box: top-left corner plus width and height, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-finite fields and negative sizes.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        let b = BoundingBox { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.x, self.y, self.w, self.h]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("bounding box"));
        }
        if self.w < 0.0 || self.h < 0.0 {
            return Err(Error::InvalidBox(format!(
                "negative size {}x{}",
                self.w, self.h
            )));
        }
        Ok(())
    }

    pub fn from_center(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        BoundingBox {
            x: cx - w / 2.0,
            y: cy - h / 2.0,
            w,
            h,
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        area(self)
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x, self.y, self.w, self.h]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        BoundingBox {
            x: a[0],
            y: a[1],
            w: a[2],
            h: a[3],
        }
    }

    /// Intersection with `[0, width] x [0, height]`.
    pub fn clip(&self, width: f64, height: f64) -> Self {
        let x1 = self.x.clamp(0.0, width);
        let y1 = self.y.clamp(0.0, height);
        let x2 = self.right().clamp(0.0, width);
        let y2 = self.bottom().clamp(0.0, height);
        BoundingBox {
            x: x1,
            y: y1,
            w: (x2 - x1).max(0.0),
            h: (y2 - y1).max(0.0),
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        BoundingBox {
            x: self.x + dx,
            y: self.y + dy,
            ..*self
        }
    }
}

/// Detector output consumed by the tracker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub score: f64,
    /// Index of this detection's appearance vector within its frame.
    pub embedding_ref: Option<usize>,
}

impl Detection {
    pub fn new(bbox: BoundingBox, score: f64) -> Result<Self> {
        bbox.validate()?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidBox(format!("score {score} outside [0, 1]")));
        }
        Ok(Detection {
            bbox,
            score,
            embedding_ref: None,
        })
    }

    pub fn with_embedding(mut self, index: usize) -> Self {
        self.embedding_ref = Some(index);
        self
    }
}

/// Area measured between the corner coordinates, so that it agrees exactly
/// with `intersection_area` of a box with itself.
pub fn area(b: &BoundingBox) -> f64 {
    (b.right() - b.x) * (b.bottom() - b.y)
}

pub fn intersection_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.right().min(b.right()) - a.x.max(b.x)).max(0.0);
    let ih = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0.0);
    iw * ih
}

/// Intersection over union; 0 when the union is empty.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = intersection_area(a, b);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Keeps detections whose area is strictly greater than `min_area`, in order.
pub fn filter_min_area(dets: &[Detection], min_area: f64) -> Vec<Detection> {
    dets.iter()
        .filter(|d| area(&d.bbox) > min_area)
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    fn det(w: f64, h: f64) -> Detection {
        Detection::new(bb(0.0, 0.0, w, h), 0.9).unwrap()
    }

    /// Counts unit cells covered by integer-coordinate boxes.
    fn raster_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
        let cells = |r: &BoundingBox| {
            let mut v = std::collections::HashSet::new();
            for i in r.x as i64..(r.x + r.w) as i64 {
                for j in r.y as i64..(r.y + r.h) as i64 {
                    v.insert((i, j));
                }
            }
            v
        };
        let (ca, cb) = (cells(a), cells(b));
        let inter = ca.intersection(&cb).count();
        let union = ca.union(&cb).count();
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    #[test]
    fn iou_examples() {
        let a = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(5.0, 5.0, 2.0, 2.0)), 0.0);
        let third = iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 0.0, 2.0, 2.0));
        assert_eq!(
            raster_iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 0.0, 2.0, 2.0)),
            2.0 / 6.0
        );
        assert!((third - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn iou_degenerate_is_zero() {
        let z = bb(3.0, 3.0, 0.0, 0.0);
        assert_eq!(iou(&z, &z), 0.0);
        assert_eq!(iou(&z, &bb(0.0, 0.0, 10.0, 10.0)), 0.0);
    }

    #[test]
    fn area_examples() {
        assert_eq!(area(&bb(0.0, 0.0, 4.0, 5.0)), 20.0);
        assert_eq!(area(&bb(0.0, 0.0, 0.0, 7.0)), 0.0);
        assert_eq!(area(&bb(3.0, 9.0, 2.0, 2.0)), 4.0);
    }

    #[test]
    fn filter_is_strict() {
        let kept = filter_min_area(&[det(3.0, 3.0), det(4.0, 4.0)], 10.0);
        assert_eq!(kept, vec![det(4.0, 4.0)]);
        let kept = filter_min_area(&[det(2.0, 2.0), det(3.0, 3.0)], 4.0);
        assert_eq!(kept, vec![det(3.0, 3.0)]);
        assert!(filter_min_area(&[], 4.0).is_empty());
        let kept = filter_min_area(&[det(0.0, 5.0), det(0.5, 0.5)], 0.0);
        assert_eq!(kept, vec![det(0.5, 0.5)]);
    }

    #[test]
    fn rejects_invalid() {
        assert!(BoundingBox::new(0.0, 0.0, -1.0, 1.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
        assert!(Detection::new(bb(0.0, 0.0, 1.0, 1.0), 1.5).is_err());
    }

    #[test]
    fn clip_to_frame() {
        let c = bb(-5.0, 500.0, 20.0, 20.0).clip(640.0, 512.0);
        assert_eq!(c, bb(0.0, 500.0, 15.0, 12.0));
    }

    fn any_box() -> impl Strategy<Value = BoundingBox> {
        (
            -100.0..100.0f64,
            -100.0..100.0f64,
            0.0..80.0f64,
            0.0..80.0f64,
        )
            .prop_map(|(x, y, w, h)| BoundingBox { x, y, w, h })
    }

    fn int_box() -> impl Strategy<Value = BoundingBox> {
        (0u32..30, 0u32..30, 0u32..=50, 0u32..=50).prop_map(|(x, y, w, h)| BoundingBox {
            x: x as f64,
            y: y as f64,
            w: w as f64,
            h: h as f64,
        })
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in any_box(), b in any_box()) {
            let v = iou(&a, &b);
            prop_assert_eq!(v, iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn iou_self_is_one(a in any_box()) {
            prop_assume!(area(&a) > 1e-9);
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn iou_matches_raster(a in int_box(), b in int_box()) {
            prop_assert!((iou(&a, &b) - raster_iou(&a, &b)).abs() < 1e-9);
        }
    }
}
