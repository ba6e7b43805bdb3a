//! Readers and writers for the on-disk formats.
//!
//! Detections, ground truth and tracks share the MOT row layout
//! `frame,id,x,y,w,h,score,class,visibility`. Embeddings are
//! `frame,det_index,v1,...,vd` where `det_index` is the 0-based position of
//! the detection among its frame's rows in the detection file. A sequence
//! lives in one directory:
//!
//! ```text
//! <seq>/seqinfo.json   optional: name, frames, width, height, init_box
//! <seq>/det.txt        detections
//! <seq>/gt.txt         ground truth (optional)
//! <seq>/emb.txt        embeddings (optional)
//! <seq>/gmc.txt        frame,a11,a12,tx,a21,a22,ty (optional)
//! <seq>/corr.txt       frame,px,py,cx,cy (optional)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assoc::Embedding;
use crate::cmc::{self, GmcMap};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Detection};

pub const SEQINFO_FILE: &str = "seqinfo.json";
pub const DET_FILE: &str = "det.txt";
pub const GT_FILE: &str = "gt.txt";
pub const EMB_FILE: &str = "emb.txt";
pub const GMC_FILE: &str = "gmc.txt";
pub const CORR_FILE: &str = "corr.txt";

/// One non-blank line of a comma-separated file.
#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub line: usize,
    pub fields: Vec<String>,
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let text = read_text(path)?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| Row {
            line: i + 1,
            fields: l.split(',').map(|f| f.trim().to_string()).collect(),
        })
        .collect())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn field_f64(path: &Path, row: &Row, idx: usize, name: &str) -> Result<f64> {
    let raw = &row.fields[idx];
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::parse(path, row.line, format!("{name}: not a number: {raw:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(
            path,
            row.line,
            format!("{name}: non-finite value"),
        ));
    }
    Ok(v)
}

pub(crate) fn field_int(path: &Path, row: &Row, idx: usize, name: &str) -> Result<i64> {
    let v = field_f64(path, row, idx, name)?;
    if v.fract() != 0.0 || v.abs() > 9.0e15 {
        return Err(Error::parse(
            path,
            row.line,
            format!("{name}: expected an integer, got {v}"),
        ));
    }
    Ok(v as i64)
}

pub(crate) fn field_frame(path: &Path, row: &Row, idx: usize) -> Result<u32> {
    let v = field_int(path, row, idx, "frame")?;
    if v < 1 || v > u32::MAX as i64 {
        return Err(Error::parse(
            path,
            row.line,
            format!("frame index {v} must be >= 1"),
        ));
    }
    Ok(v as u32)
}

pub(crate) fn expect_arity(path: &Path, row: &Row, n: usize) -> Result<()> {
    if row.fields.len() != n {
        return Err(Error::parse(
            path,
            row.line,
            format!("expected {n} fields, found {}", row.fields.len()),
        ));
    }
    Ok(())
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Cleanup applied while reading box files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    /// Frame resolution, used by the full-frame check.
    pub frame_size: Option<(f64, f64)>,
    /// Drop boxes whose area equals the frame area.
    pub drop_full_frame: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            frame_size: None,
            drop_full_frame: true,
        }
    }
}

/// A parsed `frame,id,x,y,w,h,score,class,visibility` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRow {
    pub frame: u32,
    pub id: i64,
    pub bbox: BoundingBox,
    pub score: f64,
    pub class: f64,
    pub visibility: f64,
}

fn parse_mot_row(path: &Path, row: &Row) -> Result<MotRow> {
    expect_arity(path, row, 9)?;
    let frame = field_frame(path, row, 0)?;
    let id = field_int(path, row, 1, "id")?;
    let x = field_f64(path, row, 2, "x")?;
    let y = field_f64(path, row, 3, "y")?;
    let w = field_f64(path, row, 4, "width")?;
    let h = field_f64(path, row, 5, "height")?;
    if w < 0.0 || h < 0.0 {
        return Err(Error::parse(
            path,
            row.line,
            format!("negative box size {w}x{h}"),
        ));
    }
    let score = field_f64(path, row, 6, "score")?;
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::parse(
            path,
            row.line,
            format!("score {score} outside [0, 1]"),
        ));
    }
    let class = field_f64(path, row, 7, "class")?;
    let visibility = field_f64(path, row, 8, "visibility")?;
    Ok(MotRow {
        frame,
        id,
        bbox: BoundingBox { x, y, w, h },
        score,
        class,
        visibility,
    })
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct DropCounts {
    empty: usize,
    full_frame: usize,
}

impl DropCounts {
    fn keep(&mut self, b: &BoundingBox, opts: &ParseOptions) -> bool {
        if b.w == 0.0 || b.h == 0.0 {
            self.empty += 1;
            return false;
        }
        if opts.drop_full_frame {
            if let Some((fw, fh)) = opts.frame_size {
                if b.area() == fw * fh {
                    self.full_frame += 1;
                    return false;
                }
            }
        }
        true
    }

    fn log(&self, path: &Path) {
        if self.empty > 0 || self.full_frame > 0 {
            log::info!(
                "{}: dropped {} zero-sized and {} full-frame boxes",
                path.display(),
                self.empty,
                self.full_frame
            );
        }
    }
}

/// Detections grouped by frame, file order preserved within a frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionSet {
    pub frames: BTreeMap<u32, Vec<Detection>>,
    pub dropped_empty: usize,
    pub dropped_full_frame: usize,
}

impl DetectionSet {
    pub fn frame(&self, frame: u32) -> &[Detection] {
        self.frames.get(&frame).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn last_frame(&self) -> Option<u32> {
        self.frames.keys().next_back().copied()
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn parse_detections(path: &Path, opts: &ParseOptions) -> Result<DetectionSet> {
    let mut set = DetectionSet::default();
    let mut raw_index: BTreeMap<u32, usize> = BTreeMap::new();
    let mut drops = DropCounts::default();
    for row in read_rows(path)? {
        let r = parse_mot_row(path, &row)?;
        let idx = raw_index.entry(r.frame).or_insert(0);
        let det_index = *idx;
        *idx += 1;
        if !drops.keep(&r.bbox, opts) {
            continue;
        }
        set.frames.entry(r.frame).or_default().push(Detection {
            bbox: r.bbox,
            score: r.score,
            embedding_ref: Some(det_index),
        });
    }
    drops.log(path);
    set.dropped_empty = drops.empty;
    set.dropped_full_frame = drops.full_frame;
    Ok(set)
}

/// Writes detections with id -1; `embedding_ref` is not stored (it is
/// recovered from row order on read).
pub fn write_detections(path: &Path, set: &BTreeMap<u32, Vec<Detection>>) -> Result<()> {
    let mut out = String::new();
    for (frame, dets) in set {
        for d in dets {
            let b = d.bbox;
            let _ = writeln!(
                out,
                "{frame},-1,{},{},{},{},{},-1,-1",
                fmt_num(b.x),
                fmt_num(b.y),
                fmt_num(b.w),
                fmt_num(b.h),
                fmt_num(d.score)
            );
        }
    }
    write_text(path, &out)
}

/// One ground-truth box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtBox {
    pub frame: u32,
    pub id: u64,
    pub bbox: BoundingBox,
    pub visible: bool,
}

pub fn parse_ground_truth(path: &Path, opts: &ParseOptions) -> Result<Vec<GtBox>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut drops = DropCounts::default();
    for row in read_rows(path)? {
        let r = parse_mot_row(path, &row)?;
        if r.id < 0 {
            return Err(Error::parse(
                path,
                row.line,
                format!("ground-truth id {} must be >= 0", r.id),
            ));
        }
        if !seen.insert((r.frame, r.id)) {
            return Err(Error::parse(
                path,
                row.line,
                format!("duplicate (frame, id) = ({}, {})", r.frame, r.id),
            ));
        }
        if !drops.keep(&r.bbox, opts) {
            continue;
        }
        out.push(GtBox {
            frame: r.frame,
            id: r.id as u64,
            bbox: r.bbox,
            visible: r.visibility > 0.0,
        });
    }
    drops.log(path);
    Ok(out)
}

pub fn write_ground_truth(path: &Path, gt: &[GtBox]) -> Result<()> {
    let mut rows: Vec<&GtBox> = gt.iter().collect();
    rows.sort_by_key(|g| (g.frame, g.id));
    let mut out = String::new();
    for g in rows {
        let b = g.bbox;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},1,1,{}",
            g.frame,
            g.id,
            fmt_num(b.x),
            fmt_num(b.y),
            fmt_num(b.w),
            fmt_num(b.h),
            u8::from(g.visible)
        );
    }
    write_text(path, &out)
}

/// One output row of a tracker run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub frame: u32,
    pub id: u64,
    pub bbox: BoundingBox,
    pub score: f64,
}

/// Writes track rows sorted by `(frame, id)`.
pub fn write_tracks(path: &Path, rows: &[TrackRow]) -> Result<()> {
    write_text(path, &format_tracks(rows))
}

pub fn format_tracks(rows: &[TrackRow]) -> String {
    let mut sorted: Vec<&TrackRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.frame, r.id));
    let mut out = String::new();
    for r in sorted {
        let b = r.bbox;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},-1,-1",
            r.frame,
            r.id,
            fmt_num(b.x),
            fmt_num(b.y),
            fmt_num(b.w),
            fmt_num(b.h),
            fmt_num(r.score)
        );
    }
    out
}

pub fn parse_tracks(path: &Path) -> Result<Vec<TrackRow>> {
    let mut seen = BTreeSet::new();
    read_rows(path)?
        .iter()
        .map(|row| {
            let r = parse_mot_row(path, row)?;
            if r.id < 0 {
                return Err(Error::parse(path, row.line, "track id must be >= 0"));
            }
            if !seen.insert((r.frame, r.id)) {
                return Err(Error::parse(
                    path,
                    row.line,
                    format!("duplicate (frame, id) = ({}, {})", r.frame, r.id),
                ));
            }
            Ok(TrackRow {
                frame: r.frame,
                id: r.id as u64,
                bbox: r.bbox,
                score: r.score,
            })
        })
        .collect()
}

/// Unit-norm appearance vectors keyed by `(frame, det_index)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub vectors: BTreeMap<(u32, usize), Embedding>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn get(&self, frame: u32, det_index: usize) -> Option<&Embedding> {
        self.vectors.get(&(frame, det_index))
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Inserts a vector after normalizing it.
    pub fn insert(&mut self, frame: u32, det_index: usize, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
            });
        }
        let v = Embedding::new(&v)?;
        if self.vectors.insert((frame, det_index), v).is_some() {
            return Err(Error::DuplicateKey(format!("({frame}, {det_index})")));
        }
        Ok(())
    }
}

pub fn parse_embeddings(path: &Path, dim: usize) -> Result<EmbeddingTable> {
    let mut table = EmbeddingTable::new(dim);
    for row in read_rows(path)? {
        expect_arity(path, &row, dim + 2)?;
        let frame = field_frame(path, &row, 0)?;
        let idx = field_int(path, &row, 1, "det_index")?;
        if idx < 0 {
            return Err(Error::parse(path, row.line, "det_index must be >= 0"));
        }
        let v = (0..dim)
            .map(|k| field_f64(path, &row, k + 2, "embedding value"))
            .collect::<Result<Vec<_>>>()?;
        if v.iter().all(|x| *x == 0.0) {
            return Err(Error::parse(
                path,
                row.line,
                "zero embedding vector cannot be normalized",
            ));
        }
        let idx = idx as usize;
        if table.get(frame, idx).is_some() {
            return Err(Error::parse(
                path,
                row.line,
                format!("duplicate embedding key ({frame}, {idx})"),
            ));
        }
        table
            .insert(frame, idx, v)
            .map_err(|e| Error::parse(path, row.line, e.to_string()))?;
    }
    Ok(table)
}

/// Reads the embedding dimension from the first row of a file.
pub fn sniff_embedding_dim(path: &Path) -> Result<Option<usize>> {
    let rows = read_rows(path)?;
    Ok(rows.first().map(|r| r.fields.len().saturating_sub(2)))
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    let mut out = String::new();
    for ((frame, idx), v) in &table.vectors {
        let _ = write!(out, "{frame},{idx}");
        for x in v.as_slice() {
            let _ = write!(out, ",{}", fmt_num(*x));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// `seqinfo.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SequenceInfo {
    pub name: String,
    pub frames: u32,
    pub width: Option<f64>,
    pub height: Option<f64>,
    /// Initial target box, in `init_box_resolution` pixels when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_box: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_box_resolution: Option<[f64; 2]>,
}

impl SequenceInfo {
    pub fn frame_size(&self) -> Option<(f64, f64)> {
        Some((self.width?, self.height?))
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_text(path, &text)
}

/// Everything known about one sequence directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceBundle {
    pub info: SequenceInfo,
    pub detections: DetectionSet,
    pub embeddings: Option<EmbeddingTable>,
    pub gmc: Option<GmcMap>,
    pub gt: Option<Vec<GtBox>>,
    pub correspondences: Option<BTreeMap<u32, Vec<cmc::Correspondence>>>,
}

/// Which optional parts of a sequence directory to read.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub embeddings: Option<usize>,
    pub gmc: bool,
    pub gt: bool,
    pub correspondences: bool,
    pub drop_full_frame: bool,
}

pub fn is_sequence_dir(dir: &Path) -> bool {
    dir.join(DET_FILE).is_file()
}

/// Sequence directories under `root`, sorted by name; `root` itself when it
/// is one.
pub fn discover_sequences(root: &Path) -> Result<Vec<PathBuf>> {
    if !root.exists() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ));
    }
    if is_sequence_dir(root) {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let p = entry.map_err(|e| Error::io(root, e))?.path();
        if p.is_dir() && is_sequence_dir(&p) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

pub fn sequence_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".to_string())
}

pub fn load_sequence(dir: &Path, opts: &LoadOptions) -> Result<SequenceBundle> {
    let info_path = dir.join(SEQINFO_FILE);
    let mut info: SequenceInfo = if info_path.is_file() {
        read_json(&info_path)?
    } else {
        SequenceInfo {
            name: sequence_name(dir),
            ..Default::default()
        }
    };
    if info.name.is_empty() {
        info.name = sequence_name(dir);
    }
    let parse_opts = ParseOptions {
        frame_size: info.frame_size(),
        drop_full_frame: opts.drop_full_frame,
    };
    let detections = parse_detections(&dir.join(DET_FILE), &parse_opts)?;
    let embeddings = match opts.embeddings {
        Some(dim) => Some(parse_embeddings(&dir.join(EMB_FILE), dim)?),
        None => None,
    };
    let gmc = if opts.gmc {
        Some(cmc::load_gmc(&dir.join(GMC_FILE))?)
    } else {
        None
    };
    let gt = if opts.gt {
        Some(parse_ground_truth(&dir.join(GT_FILE), &parse_opts)?)
    } else {
        None
    };
    let correspondences = if opts.correspondences {
        Some(cmc::load_correspondences(&dir.join(CORR_FILE))?)
    } else {
        None
    };
    let seen_last = detections
        .last_frame()
        .into_iter()
        .chain(gt.iter().flatten().map(|g| g.frame))
        .max()
        .unwrap_or(0);
    info.frames = info.frames.max(seen_last);
    Ok(SequenceBundle {
        info,
        detections,
        embeddings,
        gmc,
        gt,
        correspondences,
    })
}

pub fn write_sequence(dir: &Path, bundle: &SequenceBundle) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join(SEQINFO_FILE), &bundle.info)?;
    write_detections(&dir.join(DET_FILE), &bundle.detections.frames)?;
    if let Some(gt) = &bundle.gt {
        write_ground_truth(&dir.join(GT_FILE), gt)?;
    }
    if let Some(emb) = &bundle.embeddings {
        write_embeddings(&dir.join(EMB_FILE), emb)?;
    }
    if let Some(gmc) = &bundle.gmc {
        cmc::write_gmc(&dir.join(GMC_FILE), gmc)?;
    }
    if let Some(corr) = &bundle.correspondences {
        cmc::write_correspondences(&dir.join(CORR_FILE), corr)?;
    }
    Ok(())
}

/// SOT submission file: `{"res": [[x,y,w,h], ...]}`, `[]` for an empty
/// prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SotFile {
    pub res: Vec<Vec<f64>>,
}

pub fn write_sot_json(path: &Path, boxes: &[Option<BoundingBox>]) -> Result<()> {
    let file = SotFile {
        res: boxes
            .iter()
            .map(|b| b.map(|b| b.to_array().to_vec()).unwrap_or_default())
            .collect(),
    };
    let mut text = serde_json::to_string(&file).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn parse_sot_json(path: &Path) -> Result<Vec<Option<BoundingBox>>> {
    let file: SotFile = read_json(path)?;
    file.res
        .iter()
        .enumerate()
        .map(|(i, r)| match r.len() {
            0 => Ok(None),
            4 => BoundingBox::new(r[0], r[1], r[2], r[3])
                .map(Some)
                .map_err(|e| Error::parse(path, i + 1, e.to_string())),
            n => Err(Error::parse(
                path,
                i + 1,
                format!("frame entry {} has {n} values, expected 0 or 4", i + 1),
            )),
        })
        .collect()
}

/// Min/max/mean/population std of one box dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DimStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

impl DimStats {
    /// Sorts first so the result does not depend on input order.
    fn from_values(mut v: Vec<f64>) -> Self {
        if v.is_empty() {
            return DimStats::default();
        }
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        let var = dev.iter().sum::<f64>() / n;
        DimStats {
            min: v[0],
            max: v[v.len() - 1],
            mean: mean.clamp(v[0], v[v.len() - 1]),
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct AnnotationStats {
    pub sequences: usize,
    pub frames: usize,
    pub boxes: usize,
    pub width: DimStats,
    pub height: DimStats,
    pub area: DimStats,
}

/// Aggregates box statistics over ground-truth files. Frames count the
/// distinct annotated frames of each file.
pub fn summarize_annotations(paths: &[PathBuf], opts: &ParseOptions) -> Result<AnnotationStats> {
    let (mut ws, mut hs, mut areas) = (Vec::new(), Vec::new(), Vec::new());
    let mut frames = 0;
    for p in paths {
        let gt = parse_ground_truth(p, opts)?;
        frames += gt.iter().map(|g| g.frame).collect::<BTreeSet<_>>().len();
        for g in gt {
            ws.push(g.bbox.w);
            hs.push(g.bbox.h);
            areas.push(g.bbox.area());
        }
    }
    Ok(AnnotationStats {
        sequences: paths.len(),
        frames,
        boxes: ws.len(),
        width: DimStats::from_values(ws),
        height: DimStats::from_values(hs),
        area: DimStats::from_values(areas),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tmp_file(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn detection_row() {
        let d = tempfile::tempdir().unwrap();
        let p = tmp_file(&d, "det.txt", "1,-1,10,20,30,40,0.9,-1,-1\n");
        let set = parse_detections(&p, &ParseOptions::default()).unwrap();
        assert_eq!(set.frames.len(), 1);
        let det = set.frame(1)[0];
        assert_eq!(det.bbox, BoundingBox::new(10.0, 20.0, 30.0, 40.0).unwrap());
        assert_eq!(det.score, 0.9);
        assert_eq!(det.embedding_ref, Some(0));
    }

    #[test]
    fn empty_file_has_no_frames() {
        let d = tempfile::tempdir().unwrap();
        let p = tmp_file(&d, "det.txt", "");
        assert!(parse_detections(&p, &ParseOptions::default())
            .unwrap()
            .frames
            .is_empty());
    }

    #[test]
    fn rejects_bad_rows() {
        let d = tempfile::tempdir().unwrap();
        let cases = [
            "1,-1,10,20,30,40,1.5,-1,-1",
            "1,-1,10,20,-30,40,0.5,-1,-1",
            "1,-1,10,20,30,40,0.5,-1",
            "0,-1,10,20,30,40,0.5,-1,-1",
            "1,-1,ten,20,30,40,0.5,-1,-1",
        ];
        for c in cases {
            let p = tmp_file(&d, "det.txt", &format!("1,-1,0,0,1,1,0.5,-1,-1\n{c}\n"));
            match parse_detections(&p, &ParseOptions::default()) {
                Err(Error::Parse { line, .. }) => assert_eq!(line, 2, "{c}"),
                other => panic!("{c}: {other:?}"),
            }
        }
    }

    #[test]
    fn drops_empty_and_full_frame_boxes() {
        let d = tempfile::tempdir().unwrap();
        let p = tmp_file(
            &d,
            "det.txt",
            "1,-1,0,0,0,5,0.5,-1,-1\n1,-1,0,0,640,512,0.5,-1,-1\n1,-1,1,1,2,2,0.5,-1,-1\n",
        );
        let opts = ParseOptions {
            frame_size: Some((640.0, 512.0)),
            drop_full_frame: true,
        };
        let set = parse_detections(&p, &opts).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.frame(1)[0].embedding_ref, Some(2));
        assert_eq!((set.dropped_empty, set.dropped_full_frame), (1, 1));
        let keep = ParseOptions {
            drop_full_frame: false,
            ..opts
        };
        assert_eq!(parse_detections(&p, &keep).unwrap().len(), 2);
    }

    #[test]
    fn write_tracks_examples() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("t.txt");
        let b = BoundingBox::new(1.5, 2.0, 3.0, 4.25).unwrap();
        let rows: Vec<TrackRow> = (1..=3)
            .rev()
            .map(|frame| TrackRow {
                frame,
                id: 4,
                bbox: b,
                score: 0.75,
            })
            .collect();
        write_tracks(&p, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("1,4,1.5,2,3,4.25,0.75,-1,-1\n"));
        write_tracks(&p, &[]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "");
    }

    #[test]
    fn embeddings_examples() {
        let d = tempfile::tempdir().unwrap();
        let p = tmp_file(&d, "emb.txt", "1,0,3,0,4,0\n");
        let t = parse_embeddings(&p, 4).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get(1, 0).unwrap().as_slice(), &[0.6, 0.0, 0.8, 0.0]);

        let p = tmp_file(&d, "emb.txt", "1,0,3,0,4,0\n1,0,1,1,1,1\n");
        let err = parse_embeddings(&p, 4).unwrap_err().to_string();
        assert!(err.contains("(1, 0)"), "{err}");

        let p = tmp_file(&d, "emb.txt", "2,1,0,0,0,0\n");
        assert!(parse_embeddings(&p, 4).is_err());

        let p = tmp_file(&d, "emb.txt", "2,1,0,0,1\n");
        assert!(parse_embeddings(&p, 4).is_err());
    }

    #[test]
    fn stats_examples() {
        let d = tempfile::tempdir().unwrap();
        let p = tmp_file(&d, "gt.txt", "1,1,0,0,10,4,1,1,1\n2,1,0,0,20,4,1,1,1\n");
        let s = summarize_annotations(&[p], &ParseOptions::default()).unwrap();
        assert_eq!(s.width.mean, 15.0);
        assert_eq!(s.width.std, 5.0);
        assert_eq!((s.sequences, s.frames, s.boxes), (1, 2, 2));

        let p = tmp_file(&d, "gt1.txt", "1,1,0,0,6,6,1,1,1\n");
        let s = summarize_annotations(&[p], &ParseOptions::default()).unwrap();
        assert_eq!(
            (s.area.min, s.area.max, s.area.mean, s.area.std),
            (36.0, 36.0, 36.0, 0.0)
        );
    }

    #[test]
    fn stats_order_independent() {
        let d = tempfile::tempdir().unwrap();
        let a = tmp_file(
            &d,
            "a.txt",
            "1,1,0,0,10.1,4,1,1,1\n2,1,0,0,20.7,4.3,1,1,1\n",
        );
        let b = tmp_file(&d, "b.txt", "1,1,0,0,3.3,9,1,1,1\n1,2,5,5,0.1,0.2,1,1,1\n");
        let o = ParseOptions::default();
        let s1 = summarize_annotations(&[a.clone(), b.clone()], &o).unwrap();
        let s2 = summarize_annotations(&[b, a], &o).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn sot_json_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("s.json");
        let boxes = vec![Some(BoundingBox::new(1.0, 2.0, 3.0, 4.0).unwrap()), None];
        write_sot_json(&p, &boxes).unwrap();
        assert_eq!(
            fs::read_to_string(&p).unwrap(),
            "{\"res\":[[1.0,2.0,3.0,4.0],[]]}\n"
        );
        assert_eq!(parse_sot_json(&p).unwrap(), boxes);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![-1.0e4..1.0e4f64, (-1000i32..1000).prop_map(f64::from)]
    }

    proptest! {
        #[test]
        fn tracks_round_trip(rows in proptest::collection::btree_map(
            (1u32..50, 1u64..20),
            (finite(), finite(), 0.0..500.0f64, 0.0..500.0f64, 0.0..=1.0f64),
            0..40,
        )) {
            let d = tempfile::tempdir().unwrap();
            let p = d.path().join("t.txt");
            let tracks: Vec<TrackRow> = rows
                .iter()
                .map(|(&(frame, id), &(x, y, w, h, score))| TrackRow {
                    frame, id, bbox: BoundingBox { x, y, w, h }, score,
                })
                .collect();
            write_tracks(&p, &tracks).unwrap();
            prop_assert_eq!(parse_tracks(&p).unwrap(), tracks);
        }

        #[test]
        fn detections_round_trip(frames in proptest::collection::btree_map(
            1u32..30,
            proptest::collection::vec((finite(), finite(), 0.01..300.0f64, 0.01..300.0f64, 0.0..=1.0f64), 1..5),
            0..10,
        )) {
            let d = tempfile::tempdir().unwrap();
            let p = d.path().join("det.txt");
            let set: BTreeMap<u32, Vec<Detection>> = frames
                .iter()
                .map(|(&f, v)| {
                    let dets = v
                        .iter()
                        .enumerate()
                        .map(|(i, &(x, y, w, h, s))| Detection {
                            bbox: BoundingBox { x, y, w, h },
                            score: s,
                            embedding_ref: Some(i),
                        })
                        .collect();
                    (f, dets)
                })
                .collect();
            write_detections(&p, &set).unwrap();
            let back = parse_detections(&p, &ParseOptions::default()).unwrap();
            prop_assert_eq!(back.frames, set);
        }

        #[test]
        fn embeddings_round_trip(vals in proptest::collection::vec(
            proptest::collection::vec(-1.0..1.0f64, 3), 1..8)
        ) {
            prop_assume!(vals.iter().all(|v| v.iter().any(|x| x.abs() > 1e-3)));
            let mut t = EmbeddingTable::new(3);
            for (i, v) in vals.iter().enumerate() {
                t.insert(1 + i as u32 / 3, i % 3, v.clone()).unwrap();
            }
            let d = tempfile::tempdir().unwrap();
            let p = d.path().join("e.txt");
            write_embeddings(&p, &t).unwrap();
            prop_assert_eq!(parse_embeddings(&p, 3).unwrap(), t);
        }
    }
}
