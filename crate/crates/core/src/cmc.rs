//! Camera motion compensation: RANSAC affine estimation from point
//! correspondences, Kalman state warping and the GMC file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{expect_arity, field_f64, field_frame, fmt_num, read_rows, write_text};
use crate::kalman::{symmetrize, KalmanState, StateMatrix};

/// `p' = linear * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub linear: Matrix2<f64>,
    pub translation: Vector2<f64>,
}

impl Default for AffineTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform {
    pub fn identity() -> Self {
        AffineTransform {
            linear: Matrix2::identity(),
            translation: Vector2::zeros(),
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        AffineTransform {
            linear: Matrix2::identity(),
            translation: Vector2::new(tx, ty),
        }
    }

    /// Row-major `[a11, a12, tx, a21, a22, ty]`.
    pub fn from_row(r: [f64; 6]) -> Self {
        AffineTransform {
            linear: Matrix2::new(r[0], r[1], r[3], r[4]),
            translation: Vector2::new(r[2], r[5]),
        }
    }

    pub fn to_row(&self) -> [f64; 6] {
        let (l, t) = (&self.linear, &self.translation);
        [l[(0, 0)], l[(0, 1)], t[0], l[(1, 0)], l[(1, 1)], t[1]]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.to_row().iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite entry".into()));
        }
        let det = self.linear.determinant();
        if det.abs() <= 1e-9 {
            return Err(Error::InvalidTransform(format!(
                "|det| = {} is too small",
                det.abs()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, p: Vector2<f64>) -> Vector2<f64> {
        self.linear * p + self.translation
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &AffineTransform) -> AffineTransform {
        AffineTransform {
            linear: self.linear * first.linear,
            translation: self.linear * first.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Result<AffineTransform> {
        self.validate()?;
        let inv = self
            .linear
            .try_inverse()
            .ok_or_else(|| Error::InvalidTransform("singular linear part".into()))?;
        Ok(AffineTransform {
            linear: inv,
            translation: -(inv * self.translation),
        })
    }
}

/// A point seen at `prev` in frame t-1 and at `curr` in frame t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub prev: Vector2<f64>,
    pub curr: Vector2<f64>,
}

impl Correspondence {
    pub fn new(px: f64, py: f64, cx: f64, cy: f64) -> Self {
        Correspondence {
            prev: Vector2::new(px, py),
            curr: Vector2::new(cx, cy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacParams {
    pub iterations: usize,
    /// Reprojection error below which a pair counts as an inlier (px).
    pub inlier_thresh: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            iterations: 100,
            inlier_thresh: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub transform: AffineTransform,
    pub inliers: Vec<bool>,
}

impl RansacResult {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|b| **b).count()
    }
}

fn collinear(pts: &[Vector2<f64>]) -> bool {
    let n = pts.len() as f64;
    let mean = pts.iter().fold(Vector2::zeros(), |a, p| a + p) / n;
    let mut scatter = Matrix2::zeros();
    for p in pts {
        let d = p - mean;
        scatter += d * d.transpose();
    }
    let eig = scatter.symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    hi <= 0.0 || lo <= 1e-12 * hi
}

/// Exact affine through three pairs; `None` when the source points are
/// collinear.
fn fit_minimal(s: [&Correspondence; 3]) -> Option<AffineTransform> {
    let m = Matrix3::from_fn(|r, c| match c {
        0 => s[r].prev.x,
        1 => s[r].prev.y,
        _ => 1.0,
    });
    let scale = s
        .iter()
        .flat_map(|c| [(c.prev - s[0].prev).norm()])
        .fold(0.0f64, f64::max);
    if m.determinant().abs() <= 1e-10 * scale * scale.max(1.0) {
        return None;
    }
    let inv = m.try_inverse()?;
    let rx = inv * Vector3::new(s[0].curr.x, s[1].curr.x, s[2].curr.x);
    let ry = inv * Vector3::new(s[0].curr.y, s[1].curr.y, s[2].curr.y);
    let t = AffineTransform::from_row([rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]]);
    t.to_row().iter().all(|v| v.is_finite()).then_some(t)
}

fn fit_least_squares(pairs: &[&Correspondence]) -> Option<AffineTransform> {
    let n = pairs.len();
    let a = DMatrix::from_fn(n, 3, |r, c| match c {
        0 => pairs[r].prev.x,
        1 => pairs[r].prev.y,
        _ => 1.0,
    });
    let bx = DVector::from_iterator(n, pairs.iter().map(|p| p.curr.x));
    let by = DVector::from_iterator(n, pairs.iter().map(|p| p.curr.y));
    let svd = a.svd(true, true);
    let rx = svd.solve(&bx, 1e-12).ok()?;
    let ry = svd.solve(&by, 1e-12).ok()?;
    let t = AffineTransform::from_row([rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]]);
    t.to_row().iter().all(|v| v.is_finite()).then_some(t)
}

fn residual(t: &AffineTransform, c: &Correspondence) -> f64 {
    (t.apply(c.prev) - c.curr).norm()
}

/// Fits an affine transform to `pairs` with RANSAC over minimal 3-point
/// samples. The hypothesis with the most inliers wins (ties: lower mean
/// inlier error, then earlier iteration); it is then refit by least squares
/// on its inliers and the mask recomputed against the refit model.
pub fn estimate_affine_ransac(
    pairs: &[Correspondence],
    params: &RansacParams,
) -> Result<RansacResult> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "need at least 3 correspondences, got {}",
            pairs.len()
        )));
    }
    if !pairs
        .iter()
        .all(|c| c.prev.iter().chain(c.curr.iter()).all(|v| v.is_finite()))
    {
        return Err(Error::NonFinite("correspondence"));
    }
    let prev: Vec<Vector2<f64>> = pairs.iter().map(|c| c.prev).collect();
    if collinear(&prev) {
        return Err(Error::DegenerateInput(
            "all source points are collinear".into(),
        ));
    }

    let mut rng = SplitMix64::seed_from_u64(params.seed);
    let mut best: Option<(usize, f64, AffineTransform)> = None;
    for _ in 0..params.iterations {
        let idx = rand::seq::index::sample(&mut rng, pairs.len(), 3);
        let Some(model) = fit_minimal([
            &pairs[idx.index(0)],
            &pairs[idx.index(1)],
            &pairs[idx.index(2)],
        ]) else {
            continue;
        };
        let (mut count, mut err_sum) = (0usize, 0.0);
        for c in pairs {
            let e = residual(&model, c);
            if e < params.inlier_thresh {
                count += 1;
                err_sum += e;
            }
        }
        let mean_err = if count > 0 {
            err_sum / count as f64
        } else {
            f64::INFINITY
        };
        let better = match &best {
            None => true,
            Some((bc, be, _)) => count > *bc || (count == *bc && mean_err < *be),
        };
        if better {
            best = Some((count, mean_err, model));
        }
    }
    let (_, _, hypothesis) = best.ok_or_else(|| {
        Error::DegenerateInput("no non-degenerate minimal sample was drawn".into())
    })?;

    let inliers: Vec<&Correspondence> = pairs
        .iter()
        .filter(|c| residual(&hypothesis, c) < params.inlier_thresh)
        .collect();
    let pts: Vec<Vector2<f64>> = inliers.iter().map(|c| c.prev).collect();
    let transform = if inliers.len() >= 3 && !collinear(&pts) {
        fit_least_squares(&inliers).unwrap_or(hypothesis)
    } else {
        hypothesis
    };
    let mask = pairs
        .iter()
        .map(|c| residual(&transform, c) < params.inlier_thresh)
        .collect();
    Ok(RansacResult {
        transform,
        inliers: mask,
    })
}

/// Applies a camera transform to a Kalman state: every (x, y)-like pair of
/// the state (center, size, both velocities) goes through the linear part,
/// the translation moves the center only, and the covariance is transformed
/// congruently.
pub fn warp_state(state: &KalmanState, t: &AffineTransform) -> Result<KalmanState> {
    t.validate()?;
    if t.is_identity() {
        return Ok(state.clone());
    }
    let mut r = StateMatrix::zeros();
    for block in 0..4 {
        r.fixed_view_mut::<2, 2>(2 * block, 2 * block)
            .copy_from(&t.linear);
    }
    let mut mean = r * state.mean;
    mean[0] += t.translation[0];
    mean[1] += t.translation[1];
    let covariance = symmetrize(&(r * state.covariance * r.transpose()));
    Ok(KalmanState { mean, covariance })
}

/// Per-frame camera transforms; frames without an entry are the identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GmcMap {
    pub transforms: BTreeMap<u32, AffineTransform>,
}

impl GmcMap {
    pub fn get(&self, frame: u32) -> AffineTransform {
        self.transforms.get(&frame).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }
}

/// Reads `frame,a11,a12,tx,a21,a22,ty` rows.
pub fn load_gmc(path: &Path) -> Result<GmcMap> {
    let mut map = GmcMap::default();
    for row in read_rows(path)? {
        expect_arity(path, &row, 7)?;
        let frame = field_frame(path, &row, 0)?;
        let mut v = [0.0; 6];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = field_f64(path, &row, k + 1, "affine entry")?;
        }
        if map
            .transforms
            .insert(frame, AffineTransform::from_row(v))
            .is_some()
        {
            return Err(Error::parse(
                path,
                row.line,
                format!("duplicate frame {frame}"),
            ));
        }
    }
    Ok(map)
}

pub fn write_gmc(path: &Path, map: &GmcMap) -> Result<()> {
    let mut out = String::new();
    for (frame, t) in &map.transforms {
        let _ = write!(out, "{frame}");
        for v in t.to_row() {
            let _ = write!(out, ",{}", fmt_num(v));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Reads `frame,px,py,cx,cy` rows grouped by frame.
pub fn load_correspondences(path: &Path) -> Result<BTreeMap<u32, Vec<Correspondence>>> {
    let mut out: BTreeMap<u32, Vec<Correspondence>> = BTreeMap::new();
    for row in read_rows(path)? {
        expect_arity(path, &row, 5)?;
        let frame = field_frame(path, &row, 0)?;
        let px = field_f64(path, &row, 1, "px")?;
        let py = field_f64(path, &row, 2, "py")?;
        let cx = field_f64(path, &row, 3, "cx")?;
        let cy = field_f64(path, &row, 4, "cy")?;
        out.entry(frame)
            .or_default()
            .push(Correspondence::new(px, py, cx, cy));
    }
    Ok(out)
}

pub fn write_correspondences(path: &Path, corr: &BTreeMap<u32, Vec<Correspondence>>) -> Result<()> {
    let mut out = String::new();
    for (frame, pairs) in corr {
        for c in pairs {
            let _ = writeln!(
                out,
                "{frame},{},{},{},{}",
                fmt_num(c.prev.x),
                fmt_num(c.prev.y),
                fmt_num(c.curr.x),
                fmt_num(c.curr.y)
            );
        }
    }
    write_text(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use crate::kalman::{KalmanFilter, StateVector};
    use rand::Rng;

    fn grid_points(n: usize) -> Vec<Vector2<f64>> {
        (0..n)
            .map(|i| Vector2::new((i % 5) as f64 * 37.0 + 3.0, (i / 5) as f64 * 29.0 + 11.0))
            .collect()
    }

    fn pairs_under(t: &AffineTransform, pts: &[Vector2<f64>]) -> Vec<Correspondence> {
        pts.iter()
            .map(|p| Correspondence {
                prev: *p,
                curr: t.apply(*p),
            })
            .collect()
    }

    fn rotation(deg: f64, tx: f64, ty: f64) -> AffineTransform {
        let (s, c) = deg.to_radians().sin_cos();
        AffineTransform::from_row([c, -s, tx, s, c, ty])
    }

    fn max_param_err(a: &AffineTransform, b: &AffineTransform) -> f64 {
        a.to_row()
            .iter()
            .zip(b.to_row())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_pairs() {
        let pairs = pairs_under(&AffineTransform::identity(), &grid_points(10));
        let r = estimate_affine_ransac(&pairs, &RansacParams::default()).unwrap();
        assert!(max_param_err(&r.transform, &AffineTransform::identity()) < 1e-12);
        assert!(r.inliers.iter().all(|b| *b));
    }

    #[test]
    fn pure_translation() {
        let t = AffineTransform::translation(5.0, 3.0);
        let r =
            estimate_affine_ransac(&pairs_under(&t, &grid_points(10)), &RansacParams::default())
                .unwrap();
        assert!(max_param_err(&r.transform, &t) < 1e-9);
    }

    #[test]
    fn exact_pairs_recover_generator() {
        let t = AffineTransform::from_row([1.02, 0.03, -7.5, -0.01, 0.97, 12.25]);
        let pts = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(100.0, 3.0),
            Vector2::new(7.0, 80.0),
        ];
        let r = estimate_affine_ransac(&pairs_under(&t, &pts), &RansacParams::default()).unwrap();
        assert!(max_param_err(&r.transform, &t) < 1e-9);
    }

    #[test]
    fn outliers_rejected() {
        let truth = rotation(2.0, 4.0, -2.0);
        let mut rng = SplitMix64::seed_from_u64(3);
        let mut pairs: Vec<Correspondence> = (0..70)
            .map(|_| {
                let p = Vector2::new(rng.random_range(0.0..640.0), rng.random_range(0.0..512.0));
                Correspondence {
                    prev: p,
                    curr: truth.apply(p),
                }
            })
            .collect();
        for _ in 0..30 {
            pairs.push(Correspondence::new(
                rng.random_range(0.0..640.0),
                rng.random_range(0.0..512.0),
                rng.random_range(0.0..640.0),
                rng.random_range(0.0..512.0),
            ));
        }
        let r = estimate_affine_ransac(
            &pairs,
            &RansacParams {
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(max_param_err(&r.transform, &truth) < 1e-3);
        assert!(r.inliers[..70].iter().all(|b| *b));
    }

    #[test]
    fn noisy_inliers_match_least_squares_oracle() {
        let truth = rotation(-1.0, 2.0, 1.0);
        let mut rng = SplitMix64::seed_from_u64(21);
        let mut pairs = Vec::new();
        for _ in 0..60 {
            let p = Vector2::new(rng.random_range(0.0..640.0), rng.random_range(0.0..512.0));
            let n = Vector2::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2));
            pairs.push(Correspondence {
                prev: p,
                curr: truth.apply(p) + n,
            });
        }
        for _ in 0..20 {
            let p = Vector2::new(rng.random_range(0.0..640.0), rng.random_range(0.0..512.0));
            pairs.push(Correspondence {
                prev: p,
                curr: p + Vector2::new(40.0, -30.0),
            });
        }
        let r = estimate_affine_ransac(
            &pairs,
            &RansacParams {
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.inliers[..60].iter().filter(|b| **b).count(), 60);
        assert_eq!(r.inliers[60..].iter().filter(|b| **b).count(), 0);

        // normal equations over the known inliers, solved independently
        let inl = &pairs[..60];
        let mut ata = Matrix3::zeros();
        let (mut atx, mut aty) = (Vector3::zeros(), Vector3::zeros());
        for c in inl {
            let a = Vector3::new(c.prev.x, c.prev.y, 1.0);
            ata += a * a.transpose();
            atx += a * c.curr.x;
            aty += a * c.curr.y;
        }
        let inv = ata.try_inverse().unwrap();
        let (rx, ry) = (inv * atx, inv * aty);
        let oracle = AffineTransform::from_row([rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]]);
        assert!(max_param_err(&r.transform, &oracle) < 1e-6);
    }

    #[test]
    fn order_invariant() {
        let truth = rotation(3.0, -6.0, 2.5);
        let mut pairs = pairs_under(&truth, &grid_points(25));
        pairs.push(Correspondence::new(10.0, 10.0, 300.0, 300.0));
        pairs.push(Correspondence::new(50.0, 90.0, -100.0, 30.0));
        let p = RansacParams {
            seed: 5,
            ..Default::default()
        };
        let a = estimate_affine_ransac(&pairs, &p).unwrap();
        let mut rev = pairs.clone();
        rev.reverse();
        let b = estimate_affine_ransac(&rev, &p).unwrap();
        assert!(max_param_err(&a.transform, &b.transform) < 1e-9);
        let mut mask_b = b.inliers.clone();
        mask_b.reverse();
        assert_eq!(a.inliers, mask_b);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<Correspondence> = (0..10)
            .map(|i| Correspondence::new(i as f64, 2.0 * i as f64, i as f64, 2.0 * i as f64))
            .collect();
        assert!(matches!(
            estimate_affine_ransac(&line, &RansacParams::default()),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            estimate_affine_ransac(&line[..2], &RansacParams::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    fn sample_state() -> KalmanState {
        let kf = KalmanFilter::default();
        let s = kf
            .initiate(&BoundingBox::new(20.0, 30.0, 8.0, 6.0).unwrap())
            .unwrap();
        let mut s = kf.predict(&s);
        s.mean[4] = 1.5;
        s.mean[5] = -0.5;
        s
    }

    #[test]
    fn warp_identity_is_bitwise() {
        let s = sample_state();
        assert_eq!(warp_state(&s, &AffineTransform::identity()).unwrap(), s);
    }

    #[test]
    fn warp_translation() {
        let s = sample_state();
        let w = warp_state(&s, &AffineTransform::translation(5.0, 0.0)).unwrap();
        assert_eq!(w.mean[0], s.mean[0] + 5.0);
        for i in 1..8 {
            assert_eq!(w.mean[i], s.mean[i]);
        }
    }

    #[test]
    fn warp_rotation_90() {
        let mut s = sample_state();
        s.mean = StateVector::from([10.0, 0.0, 4.0, 2.0, 1.0, 0.0, 0.0, 0.0]);
        let r = AffineTransform::from_row([0.0, -1.0, 0.0, 1.0, 0.0, 0.0]);
        let w = warp_state(&s, &r).unwrap();
        assert!((w.mean[0] - 0.0).abs() < 1e-12 && (w.mean[1] - 10.0).abs() < 1e-12);
        assert!((w.mean[4] - 0.0).abs() < 1e-12 && (w.mean[5] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn warp_round_trip_and_psd() {
        let s = sample_state();
        let a = AffineTransform::from_row([1.01, 0.02, 3.0, -0.015, 0.99, -4.0]);
        let w = warp_state(&s, &a).unwrap();
        assert!((w.covariance - w.covariance.transpose()).abs().max() < 1e-12);
        assert!(w.covariance.symmetric_eigen().eigenvalues.min() >= -1e-9);
        let back = warp_state(&w, &a.inverse().unwrap()).unwrap();
        assert!((back.mean - s.mean).abs().max() < 1e-6);
    }

    #[test]
    fn warp_rejects_singular() {
        let bad = AffineTransform::from_row([1.0, 2.0, 0.0, 2.0, 4.0, 0.0]);
        assert!(warp_state(&sample_state(), &bad).is_err());
    }

    #[test]
    fn gmc_file() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("gmc.txt");
        std::fs::write(&p, "7,1,0,5,0,1,3\n").unwrap();
        let m = load_gmc(&p).unwrap();
        assert_eq!(m.get(7), AffineTransform::translation(5.0, 3.0));
        assert_eq!(m.get(8), AffineTransform::identity());

        std::fs::write(&p, "").unwrap();
        assert!(load_gmc(&p).unwrap().is_empty());

        std::fs::write(&p, "1,1,0,0,0,1,0\n2,1,0,5,0\n").unwrap();
        match load_gmc(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gmc_round_trip() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("gmc.txt");
        let mut m = GmcMap::default();
        m.transforms.insert(2, rotation(1.3, 0.1, -7.25));
        m.transforms
            .insert(5, AffineTransform::translation(1.0 / 3.0, 2.0));
        write_gmc(&p, &m).unwrap();
        assert_eq!(load_gmc(&p).unwrap(), m);
    }
}
