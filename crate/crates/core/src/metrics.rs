//! SOT accuracy and CLEAR-MOT based MOTA.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::assoc::{solve_assignment, CostMatrix, FORBIDDEN};
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};

pub const SOT_PENALTY_WEIGHT: f64 = 0.2;
pub const SOT_PENALTY_EXPONENT: f64 = 0.3;
pub const DEFAULT_MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SotFrameRecord {
    /// `None` is an empty prediction.
    pub pred: Option<BoundingBox>,
    pub gt: Option<BoundingBox>,
    pub visible: bool,
}

impl SotFrameRecord {
    pub fn new(pred: Option<BoundingBox>, gt: Option<BoundingBox>, visible: bool) -> Result<Self> {
        if visible && gt.is_none() {
            return Err(Error::InvalidBox(
                "visible frame without a ground-truth box".into(),
            ));
        }
        Ok(SotFrameRecord { pred, gt, visible })
    }

    /// Predicted-invisible flag: 1 when the prediction is empty.
    pub fn p(&self) -> f64 {
        if self.pred.is_none() {
            1.0
        } else {
            0.0
        }
    }

    /// IoU between prediction and ground truth, 0 when either is absent.
    pub fn iou(&self) -> f64 {
        match (self.pred, self.gt) {
            (Some(p), Some(g)) => iou(&p, &g),
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SotScore {
    pub acc: f64,
    pub frames: usize,
    pub visible_frames: usize,
    pub mean_iou_term: f64,
    pub penalty_term: f64,
}

pub fn sot_accuracy(records: &[SotFrameRecord]) -> Result<SotScore> {
    if records.is_empty() {
        return Err(Error::EmptyInput("SOT records"));
    }
    let t = records.len();
    let mut first = 0.0;
    let mut empty_on_visible = 0.0;
    let mut visible = 0usize;
    for r in records {
        if r.visible {
            visible += 1;
            first += r.iou();
            empty_on_visible += r.p();
        } else {
            first += r.p();
        }
    }
    let mean_iou_term = first / t as f64;
    let penalty_term = if visible == 0 {
        0.0
    } else {
        SOT_PENALTY_WEIGHT * (empty_on_visible / visible as f64).powf(SOT_PENALTY_EXPONENT)
    };
    Ok(SotScore {
        acc: mean_iou_term - penalty_term,
        frames: t,
        visible_frames: visible,
        mean_iou_term,
        penalty_term,
    })
}

/// Boxes of one frame, keyed by object or track id.
pub type FrameBoxes = Vec<(u64, BoundingBox)>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMatch {
    pub frame: u32,
    /// `(gt_id, pred_id)` pairs.
    pub matches: Vec<(u64, u64)>,
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
    pub gt: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClearResult {
    pub frames: Vec<FrameMatch>,
    pub fp: usize,
    pub fn_: usize,
    pub ids: usize,
    pub gt: usize,
}

fn check_unique(frame: u32, boxes: &FrameBoxes, what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (id, _) in boxes {
        if !seen.insert(*id) {
            return Err(Error::DuplicateKey(format!(
                "{what} (frame {frame}, id {id})"
            )));
        }
    }
    Ok(())
}

/// Per-frame CLEAR-MOT correspondence with persistence of previous pairs.
///
/// Frames present in either map are visited in increasing order.
pub fn clear_match(
    gt: &BTreeMap<u32, FrameBoxes>,
    pred: &BTreeMap<u32, FrameBoxes>,
    iou_thresh: f64,
) -> Result<ClearResult> {
    let empty = FrameBoxes::new();
    let frames: BTreeSet<u32> = gt.keys().chain(pred.keys()).copied().collect();
    let mut last: HashMap<u64, u64> = HashMap::new();
    let mut result = ClearResult::default();
    for f in frames {
        let g = gt.get(&f).unwrap_or(&empty);
        let p = pred.get(&f).unwrap_or(&empty);
        check_unique(f, g, "ground truth")?;
        check_unique(f, p, "prediction")?;
        let mut g_used = vec![false; g.len()];
        let mut p_used = vec![false; p.len()];
        let mut pairs = Vec::new();

        for (gi, (gid, gb)) in g.iter().enumerate() {
            let Some(&prev) = last.get(gid) else { continue };
            if let Some(pi) = p.iter().position(|(pid, _)| *pid == prev) {
                if !p_used[pi] && iou(gb, &p[pi].1) >= iou_thresh {
                    g_used[gi] = true;
                    p_used[pi] = true;
                    pairs.push((gi, pi));
                }
            }
        }

        let rest_g: Vec<usize> = (0..g.len()).filter(|&i| !g_used[i]).collect();
        let rest_p: Vec<usize> = (0..p.len()).filter(|&i| !p_used[i]).collect();
        let cost = CostMatrix::from_fn(rest_g.len(), rest_p.len(), |r, c| {
            let v = iou(&g[rest_g[r]].1, &p[rest_p[c]].1);
            if v >= iou_thresh {
                1.0 - v
            } else {
                FORBIDDEN
            }
        });
        let mut ids = 0;
        for (r, c) in solve_assignment(&cost).into_iter().enumerate() {
            if let Some(c) = c {
                let (gi, pi) = (rest_g[r], rest_p[c]);
                if let Some(&prev) = last.get(&g[gi].0) {
                    if prev != p[pi].0 {
                        ids += 1;
                    }
                }
                pairs.push((gi, pi));
            }
        }
        pairs.sort_unstable();
        for &(gi, pi) in &pairs {
            last.insert(g[gi].0, p[pi].0);
        }
        let fm = FrameMatch {
            frame: f,
            matches: pairs.iter().map(|&(gi, pi)| (g[gi].0, p[pi].0)).collect(),
            fp: p.len() - pairs.len(),
            fn_: g.len() - pairs.len(),
            ids,
            gt: g.len(),
        };
        result.fp += fm.fp;
        result.fn_ += fm.fn_;
        result.ids += fm.ids;
        result.gt += fm.gt;
        result.frames.push(fm);
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotaReport {
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub ids: usize,
    pub gt: usize,
    pub mota: f64,
}

impl MotaReport {
    pub fn from_counts(fp: usize, fn_: usize, ids: usize, gt: usize) -> Result<Self> {
        Ok(MotaReport {
            fp,
            fn_,
            ids,
            gt,
            mota: mota(fp, fn_, ids, gt)?,
        })
    }
}

impl TryFrom<&ClearResult> for MotaReport {
    type Error = Error;

    fn try_from(r: &ClearResult) -> Result<Self> {
        MotaReport::from_counts(r.fp, r.fn_, r.ids, r.gt)
    }
}

pub fn mota(fp: usize, fn_: usize, ids: usize, gt: usize) -> Result<f64> {
    if gt == 0 {
        return Err(Error::UndefinedMota);
    }
    Ok(1.0 - (fp + fn_ + ids) as f64 / gt as f64)
}

pub fn average_mota(per_sequence: &[f64]) -> Result<f64> {
    if per_sequence.is_empty() {
        return Err(Error::EmptyInput("per-sequence MOTA list"));
    }
    Ok(per_sequence.iter().sum::<f64>() / per_sequence.len() as f64)
}
