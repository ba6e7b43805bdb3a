//! C ABI over the `uavtrack` engine.
//!
//! Handles are opaque pointers created by `ut_*_new` and released by the
//! matching `ut_*_free`. Every fallible function returns a [`UtStatus`];
//! on failure a message is available from [`ut_last_error_message`] on the
//! same thread until the next failing call. Panics never cross the
//! boundary; they are reported as `UT_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use uavtrack::cmc::{estimate_affine_ransac, AffineTransform, Correspondence, RansacParams};
use uavtrack::io::EmbeddingTable;
use uavtrack::kalman::KalmanConfig;
use uavtrack::metrics::{self, SotFrameRecord};
use uavtrack::sot::{SotSelector, SotSource};
use uavtrack::tracker::{FrameOutput, TrackOutput, TrackState};
use uavtrack::{BoundingBox, Detection, Error, Tracker, TrackerConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonMonotonicFrame = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Undefined = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UtBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<BoundingBox> for UtBox {
    fn from(b: BoundingBox) -> Self {
        UtBox {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
        }
    }
}

impl From<UtBox> for BoundingBox {
    fn from(b: UtBox) -> Self {
        BoundingBox {
            x: b.x,
            y: b.y,
            w: b.w,
            h: b.h,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UtDetection {
    pub bbox: UtBox,
    pub score: f64,
}

/// Mirrors the tracker configuration; booleans are 0 or 1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtTrackerConfig {
    pub track_high_thresh: f64,
    pub track_low_thresh: f64,
    pub new_track_thresh: f64,
    pub match_thresh: f64,
    pub second_match_thresh: f64,
    pub unconfirmed_match_thresh: f64,
    pub track_buffer: u32,
    pub min_box_area: f64,
    pub proximity_thresh: f64,
    pub appearance_thresh: f64,
    pub ema_alpha: f64,
    pub with_reid: u8,
    pub with_cmc: u8,
    pub gating: u8,
    pub std_weight_position: f64,
    pub std_weight_velocity: f64,
}

impl From<TrackerConfig> for UtTrackerConfig {
    fn from(c: TrackerConfig) -> Self {
        UtTrackerConfig {
            track_high_thresh: c.track_high_thresh,
            track_low_thresh: c.track_low_thresh,
            new_track_thresh: c.new_track_thresh,
            match_thresh: c.match_thresh,
            second_match_thresh: c.second_match_thresh,
            unconfirmed_match_thresh: c.unconfirmed_match_thresh,
            track_buffer: c.track_buffer,
            min_box_area: c.min_box_area,
            proximity_thresh: c.proximity_thresh,
            appearance_thresh: c.appearance_thresh,
            ema_alpha: c.ema_alpha,
            with_reid: c.with_reid as u8,
            with_cmc: c.with_cmc as u8,
            gating: c.gating as u8,
            std_weight_position: c.kalman.std_weight_position,
            std_weight_velocity: c.kalman.std_weight_velocity,
        }
    }
}

impl From<UtTrackerConfig> for TrackerConfig {
    fn from(c: UtTrackerConfig) -> Self {
        TrackerConfig {
            track_high_thresh: c.track_high_thresh,
            track_low_thresh: c.track_low_thresh,
            new_track_thresh: c.new_track_thresh,
            match_thresh: c.match_thresh,
            second_match_thresh: c.second_match_thresh,
            unconfirmed_match_thresh: c.unconfirmed_match_thresh,
            track_buffer: c.track_buffer,
            min_box_area: c.min_box_area,
            proximity_thresh: c.proximity_thresh,
            appearance_thresh: c.appearance_thresh,
            ema_alpha: c.ema_alpha,
            with_reid: c.with_reid != 0,
            with_cmc: c.with_cmc != 0,
            gating: c.gating != 0,
            kalman: KalmanConfig {
                std_weight_position: c.std_weight_position,
                std_weight_velocity: c.std_weight_velocity,
            },
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UtTrack {
    pub id: u64,
    pub bbox: UtBox,
    pub score: f64,
    /// Frame of the last successful match.
    pub last_frame: u32,
}

impl From<&TrackOutput> for UtTrack {
    fn from(t: &TrackOutput) -> Self {
        UtTrack {
            id: t.id,
            bbox: t.bbox.into(),
            score: t.score,
            last_frame: t.last_frame,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtSotSource {
    Online = 0,
    LostPrediction = 1,
    LastKnown = 2,
    Abstained = 3,
}

impl From<SotSource> for UtSotSource {
    fn from(s: SotSource) -> Self {
        match s {
            SotSource::Online => UtSotSource::Online,
            SotSource::LostPrediction => UtSotSource::LostPrediction,
            SotSource::LastKnown => UtSotSource::LastKnown,
            SotSource::Abstained => UtSotSource::Abstained,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtSotReport {
    pub bbox: UtBox,
    /// 0 when the selector abstained.
    pub has_box: u8,
    pub source: UtSotSource,
    /// 0 when no track id backs the report.
    pub track_id: u64,
}

/// One frame of SOT scoring input; booleans are 0 or 1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UtSotRecord {
    pub pred: UtBox,
    pub has_pred: u8,
    pub gt: UtBox,
    pub has_gt: u8,
    pub visible: u8,
}

/// Opaque tracker handle.
pub struct UtTracker {
    inner: Tracker,
    last: FrameOutput,
}

/// Opaque single-object selector handle.
pub struct UtSotSelector {
    inner: SotSelector,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> UtStatus {
    match e {
        Error::NonMonotonicFrame { .. } => UtStatus::NonMonotonicFrame,
        Error::SingularCovariance | Error::DegenerateInput(_) => UtStatus::Numerical,
        Error::UndefinedMota | Error::EmptyInput(_) => UtStatus::Undefined,
        _ => UtStatus::InvalidArgument,
    }
}

fn fail(status: UtStatus, msg: &str) -> UtStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (UtStatus, String)>) -> UtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UtStatus::Ok,
        Ok(Err((s, m))) => fail(s, &m),
        Err(_) => fail(UtStatus::Panic, "internal panic"),
    }
}

fn lib_err(e: Error) -> (UtStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (UtStatus, String) {
    (UtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice_or_empty<'a, T>(
    p: *const T,
    n: usize,
    what: &str,
) -> Result<&'a [T], (UtStatus, String)> {
    if n == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null_err(what))
    } else {
        Ok(std::slice::from_raw_parts(p, n))
    }
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ut_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ut_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[no_mangle]
pub unsafe extern "C" fn ut_tracker_config_default(out: *mut UtTrackerConfig) -> UtStatus {
    if out.is_null() {
        return fail(UtStatus::NullPointer, "out is null");
    }
    *out = TrackerConfig::default().into();
    UtStatus::Ok
}

/// Creates a tracker; `config` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn ut_tracker_new(
    config: *const UtTrackerConfig,
    out: *mut *mut UtTracker,
) -> UtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let cfg = if config.is_null() {
            TrackerConfig::default()
        } else {
            (*config).into()
        };
        let inner = Tracker::new(cfg).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(UtTracker {
            inner,
            last: FrameOutput::default(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ut_tracker_free(tracker: *mut UtTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ut_tracker_reset(tracker: *mut UtTracker) -> UtStatus {
    let Some(t) = tracker.as_mut() else {
        return fail(UtStatus::NullPointer, "tracker is null");
    };
    t.inner.reset();
    t.last = FrameOutput::default();
    UtStatus::Ok
}

/// Advances the tracker by one frame.
///
/// `embeddings` holds `n_dets * dim` values row by row, or is null when the
/// tracker runs without appearance. `affine` holds `a11,a12,tx,a21,a22,ty`
/// mapping the previous frame into this one, or is null. Results are read
/// with [`ut_tracker_online`] and [`ut_tracker_lost`].
#[no_mangle]
pub unsafe extern "C" fn ut_tracker_step(
    tracker: *mut UtTracker,
    frame: u32,
    dets: *const UtDetection,
    n_dets: usize,
    embeddings: *const f64,
    dim: usize,
    affine: *const f64,
) -> UtStatus {
    guard(|| {
        let t = tracker.as_mut().ok_or_else(|| null_err("tracker"))?;
        let raw = slice_or_empty(dets, n_dets, "dets")?;
        let with_emb = !embeddings.is_null() && dim > 0;
        let mut list = Vec::with_capacity(raw.len());
        for (i, d) in raw.iter().enumerate() {
            let mut det = Detection::new(d.bbox.into(), d.score).map_err(lib_err)?;
            if with_emb {
                det = det.with_embedding(i);
            }
            list.push(det);
        }
        let table = if with_emb {
            let values = std::slice::from_raw_parts(embeddings, n_dets * dim);
            let mut table = EmbeddingTable::new(dim);
            for (i, v) in values.chunks_exact(dim).enumerate() {
                table.insert(frame, i, v.to_vec()).map_err(lib_err)?;
            }
            Some(table)
        } else {
            None
        };
        let transform = if affine.is_null() {
            None
        } else {
            let a = std::slice::from_raw_parts(affine, 6);
            Some(AffineTransform::from_row([
                a[0], a[1], a[2], a[3], a[4], a[5],
            ]))
        };
        t.last = t
            .inner
            .step(frame, &list, table.as_ref(), transform.as_ref())
            .map_err(lib_err)?;
        Ok(())
    })
}

unsafe fn copy_tracks(
    src: &[TrackOutput],
    buf: *mut UtTrack,
    cap: usize,
    count: *mut usize,
) -> UtStatus {
    if count.is_null() {
        return fail(UtStatus::NullPointer, "count is null");
    }
    *count = src.len();
    if src.len() > cap {
        return fail(
            UtStatus::BufferTooSmall,
            &format!("buffer holds {cap} tracks, {} needed", src.len()),
        );
    }
    if !src.is_empty() && buf.is_null() {
        return fail(UtStatus::NullPointer, "buffer is null");
    }
    for (i, t) in src.iter().enumerate() {
        *buf.add(i) = t.into();
    }
    UtStatus::Ok
}

/// Online tracks of the last step. `*count` always receives the number
/// available; `UT_STATUS_BUFFER_TOO_SMALL` when it exceeds `cap`.
#[no_mangle]
pub unsafe extern "C" fn ut_tracker_online(
    tracker: *const UtTracker,
    buf: *mut UtTrack,
    cap: usize,
    count: *mut usize,
) -> UtStatus {
    match tracker.as_ref() {
        Some(t) => copy_tracks(&t.last.online, buf, cap, count),
        None => fail(UtStatus::NullPointer, "tracker is null"),
    }
}

/// Lost tracks of the last step with their predicted boxes.
#[no_mangle]
pub unsafe extern "C" fn ut_tracker_lost(
    tracker: *const UtTracker,
    buf: *mut UtTrack,
    cap: usize,
    count: *mut usize,
) -> UtStatus {
    match tracker.as_ref() {
        Some(t) => {
            debug_assert!(t.last.lost.iter().all(|l| l.state == TrackState::Lost));
            copy_tracks(&t.last.lost, buf, cap, count)
        }
        None => fail(UtStatus::NullPointer, "tracker is null"),
    }
}

/// Creates a selector whose report before the first track is `fallback`.
#[no_mangle]
pub unsafe extern "C" fn ut_sot_new(
    track_buffer: u32,
    fallback: UtBox,
    abstain_when_lost: u8,
    out: *mut *mut UtSotSelector,
) -> UtStatus {
    if out.is_null() {
        return fail(UtStatus::NullPointer, "out is null");
    }
    let inner =
        SotSelector::new(track_buffer, fallback.into()).abstain_when_lost(abstain_when_lost != 0);
    *out = Box::into_raw(Box::new(UtSotSelector { inner }));
    UtStatus::Ok
}

#[no_mangle]
pub unsafe extern "C" fn ut_sot_free(selector: *mut UtSotSelector) {
    if !selector.is_null() {
        drop(Box::from_raw(selector));
    }
}

/// Picks this frame's single-object report from the tracker's last step.
#[no_mangle]
pub unsafe extern "C" fn ut_sot_select(
    selector: *mut UtSotSelector,
    tracker: *const UtTracker,
    out: *mut UtSotReport,
) -> UtStatus {
    guard(|| {
        let s = selector.as_mut().ok_or_else(|| null_err("selector"))?;
        let t = tracker.as_ref().ok_or_else(|| null_err("tracker"))?;
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let r = s.inner.select(&t.last);
        *out = UtSotReport {
            bbox: r.bbox.map(UtBox::from).unwrap_or_default(),
            has_box: r.bbox.is_some() as u8,
            source: r.source.into(),
            track_id: r.reported_id.unwrap_or(0),
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ut_iou(a: UtBox, b: UtBox, out: *mut f64) -> UtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let (a, b): (BoundingBox, BoundingBox) = (a.into(), b.into());
        a.validate().map_err(lib_err)?;
        b.validate().map_err(lib_err)?;
        *out = uavtrack::iou(&a, &b);
        Ok(())
    })
}

/// SOT accuracy over `n` frame records.
#[no_mangle]
pub unsafe extern "C" fn ut_sot_accuracy(
    records: *const UtSotRecord,
    n: usize,
    out: *mut f64,
) -> UtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let recs = slice_or_empty(records, n, "records")?
            .iter()
            .map(|r| {
                SotFrameRecord::new(
                    (r.has_pred != 0).then(|| r.pred.into()),
                    (r.has_gt != 0).then(|| r.gt.into()),
                    r.visible != 0,
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(lib_err)?;
        *out = metrics::sot_accuracy(&recs).map_err(lib_err)?.acc;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ut_mota(fp: u64, fn_: u64, ids: u64, gt: u64, out: *mut f64) -> UtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        *out =
            metrics::mota(fp as usize, fn_ as usize, ids as usize, gt as usize).map_err(lib_err)?;
        Ok(())
    })
}

/// Robust affine fit. `points` holds `n` rows of `px,py,cx,cy`. Writes
/// `a11,a12,tx,a21,a22,ty` to `out` and, when `inliers` is non-null, one
/// 0/1 flag per row.
#[no_mangle]
pub unsafe extern "C" fn ut_estimate_affine(
    points: *const f64,
    n: usize,
    iterations: usize,
    inlier_thresh: f64,
    seed: u64,
    out: *mut f64,
    inliers: *mut u8,
) -> UtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        let raw = slice_or_empty(points, n * 4, "points")?;
        let pairs: Vec<Correspondence> = raw
            .chunks_exact(4)
            .map(|c| Correspondence::new(c[0], c[1], c[2], c[3]))
            .collect();
        let params = RansacParams {
            iterations,
            inlier_thresh,
            seed,
        };
        let r = estimate_affine_ransac(&pairs, &params).map_err(lib_err)?;
        ptr::copy_nonoverlapping(r.transform.to_row().as_ptr(), out, 6);
        if !inliers.is_null() {
            for (i, &m) in r.inliers.iter().enumerate() {
                *inliers.add(i) = m as u8;
            }
        }
        Ok(())
    })
}
