//! Finite point clouds in R^d, Hausdorff-Pompeiu distances, diameters and
//! ε-net decimation.
//!
//! A finite cloud is its own closure, so every distance here is exact up to
//! floating rounding. Squared Euclidean distances are compared throughout and
//! one square root is taken at the end.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{IfsError, Result};
use crate::kdtree::{sq_dist, KdTree};
use crate::num::fmt_g17;

/// Pair count above which directed distances go through a k-d index.
pub const INDEX_THRESHOLD: usize = 1_000_000;

/// Query chunk size for parallel scans.
const CHUNK: usize = 4096;

/// Point count above which [`diam`] switches from the pair scan to the
/// centroid-pruned scan, and [`epsilon_net`] from farthest-point to grid buckets.
const SMALL_SET: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Point> {
        if coords.is_empty() {
            return Err(IfsError::Domain("a point needs at least one coordinate".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(IfsError::Domain(format!("non-finite coordinate {bad}")));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dist(&self, other: &Point) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(dim_mismatch(self.dim(), other.dim()));
        }
        Ok(sq_dist(&self.0, &other.0).sqrt())
    }
}

impl std::ops::Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Point {
        Point(vec![x])
    }
}

fn dim_mismatch(a: usize, b: usize) -> IfsError {
    IfsError::Domain(format!("dimension mismatch: {a} vs {b}"))
}

/// Non-empty finite point cloud, stored as a flat coordinate buffer.
/// Duplicates may be stored; they carry no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<PointSet> {
        if dim == 0 {
            return Err(IfsError::Domain("dimension must be at least 1".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(IfsError::Domain(format!(
                "coordinate buffer of length {} does not hold a non-empty set of {dim}-d points",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(IfsError::Domain(format!("non-finite coordinate {bad}")));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_points(points: &[Point]) -> Result<PointSet> {
        let first = points
            .first()
            .ok_or_else(|| IfsError::Domain("a point set must be non-empty".into()))?;
        let dim = first.dim();
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.dim() != dim {
                return Err(dim_mismatch(dim, p.dim()));
            }
            coords.extend_from_slice(p);
        }
        Ok(PointSet { dim, coords })
    }

    pub fn singleton(p: &Point) -> PointSet {
        PointSet {
            dim: p.dim(),
            coords: p.to_vec(),
        }
    }

    /// One-dimensional set from scalars.
    pub fn from_scalars(xs: &[f64]) -> Result<PointSet> {
        PointSet::new(1, xs.to_vec())
    }

    pub(crate) fn from_raw(dim: usize, coords: Vec<f64>) -> PointSet {
        debug_assert!(dim > 0 && !coords.is_empty() && coords.len().is_multiple_of(dim));
        PointSet { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn to_points(&self) -> Vec<Point> {
        self.iter().map(|c| Point(c.to_vec())).collect()
    }

    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if self.dim != other.dim {
            return Err(dim_mismatch(self.dim, other.dim));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Ok(PointSet {
            dim: self.dim,
            coords,
        })
    }

    pub fn union_all(sets: &[PointSet]) -> Result<PointSet> {
        let first = sets
            .first()
            .ok_or_else(|| IfsError::Domain("union of no sets".into()))?;
        let mut coords = Vec::new();
        for s in sets {
            if s.dim != first.dim {
                return Err(dim_mismatch(first.dim, s.dim));
            }
            coords.extend_from_slice(&s.coords);
        }
        Ok(PointSet {
            dim: first.dim,
            coords,
        })
    }

    /// Removes exact duplicates (`-0.0` equals `0.0`), keeping first occurrences
    /// in storage order.
    pub fn dedup(&self) -> PointSet {
        let d = self.dim;
        let n = self.len();
        let key = |k: usize, j: usize| {
            let v = self.coords[k * d + j];
            if v == 0.0 {
                0u64
            } else {
                v.to_bits()
            }
        };
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.par_sort_unstable_by(|&a, &b| {
            let (a, b) = (a as usize, b as usize);
            (0..d)
                .map(|j| key(a, j).cmp(&key(b, j)))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut keep = vec![false; n];
        let mut run_start = 0;
        keep[idx[0] as usize] = true;
        for t in 1..n {
            let (a, b) = (idx[run_start] as usize, idx[t] as usize);
            if (0..d).any(|j| key(a, j) != key(b, j)) {
                keep[b] = true;
                run_start = t;
            }
        }
        let mut coords = Vec::with_capacity(self.coords.len());
        for (k, p) in self.iter().enumerate() {
            if keep[k] {
                coords.extend(p.iter().map(|&v| if v == 0.0 { 0.0 } else { v }));
            }
        }
        PointSet { dim: d, coords }
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

/// A point cloud `core` with a radius ρ such that the represented set lies
/// within Hausdorff distance ρ of `core`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedSet {
    pub core: PointSet,
    pub radius: f64,
}

impl CertifiedSet {
    pub fn new(core: PointSet, radius: f64) -> Result<CertifiedSet> {
        if !radius.is_finite() || radius < 0.0 {
            return Err(IfsError::Domain(format!("radius must be finite and nonnegative, got {radius}")));
        }
        Ok(CertifiedSet { core, radius })
    }

    pub fn exact(core: PointSet) -> CertifiedSet {
        CertifiedSet { core, radius: 0.0 }
    }
}

fn check_dims(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.dim != b.dim {
        return Err(dim_mismatch(a.dim, b.dim));
    }
    Ok(())
}

/// sup_{a∈A} inf_{b∈B} |a − b|. Uses a k-d index above [`INDEX_THRESHOLD`]
/// pairs; the result is identical either way.
pub fn directed_dist(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.len().saturating_mul(b.len()) > INDEX_THRESHOLD {
        directed_dist_indexed(a, b)
    } else {
        directed_dist_brute(a, b)
    }
}

/// O(|A|·|B|) scan.
pub fn directed_dist_brute(a: &PointSet, b: &PointSet) -> Result<f64> {
    check_dims(a, b)?;
    let worst = |stop: f64, p: &[f64]| {
        let mut best = f64::INFINITY;
        for q in b.iter() {
            let s = sq_dist(p, q);
            if s < best {
                best = s;
                if s <= stop {
                    break;
                }
            }
        }
        best
    };
    Ok(scan_max(a, &worst).sqrt())
}

/// Directed distance through a k-d index built on `b`.
pub fn directed_dist_indexed(a: &PointSet, b: &PointSet) -> Result<f64> {
    check_dims(a, b)?;
    SetIndex::new(b).directed_from(a)
}

/// Index over a fixed target set, for repeated directed distances into it.
/// One-dimensional sets are kept sorted instead of in a tree.
pub struct SetIndex {
    dim: usize,
    inner: Inner,
}

enum Inner {
    Sorted(Vec<f64>),
    Tree(KdTree),
}

impl SetIndex {
    pub fn new(b: &PointSet) -> SetIndex {
        let inner = if b.dim == 1 {
            let mut v = b.coords.clone();
            v.sort_by(f64::total_cmp);
            Inner::Sorted(v)
        } else {
            Inner::Tree(KdTree::build(b.dim, &b.coords))
        };
        SetIndex { dim: b.dim, inner }
    }

    /// Directed distance from `a` into the indexed set.
    pub fn directed_from(&self, a: &PointSet) -> Result<f64> {
        if a.dim != self.dim {
            return Err(dim_mismatch(a.dim, self.dim));
        }
        Ok(match &self.inner {
            Inner::Sorted(v) => a
                .coords
                .par_chunks(CHUNK)
                .map(|c| c.iter().fold(0.0f64, |m, &x| m.max(sorted_min_sq(v, x))))
                .reduce(|| 0.0, f64::max),
            Inner::Tree(t) => directed_sq_with_tree(a, t),
        }
        .sqrt())
    }

    /// Distance from a single point to the indexed set.
    pub fn dist_to(&self, p: &[f64]) -> f64 {
        match &self.inner {
            Inner::Sorted(v) => sorted_min_sq(v, p[0]),
            Inner::Tree(t) => t.min_sq_dist(p, -1.0),
        }
        .sqrt()
    }
}

/// Squared distance from x to the nearest entry of a sorted, non-empty slice.
fn sorted_min_sq(v: &[f64], x: f64) -> f64 {
    let j = v.partition_point(|&y| y < x);
    let mut best = f64::INFINITY;
    if j < v.len() {
        best = sq_dist(&[x], &[v[j]]);
    }
    if j > 0 {
        best = best.min(sq_dist(&[x], &[v[j - 1]]));
    }
    best
}

/// Directed squared distance between sorted slices by a merge sweep.
fn sorted_directed_sq(a: &[f64], b: &[f64]) -> f64 {
    let mut j = 0;
    let mut worst = 0.0f64;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        let mut best = f64::INFINITY;
        if j < b.len() {
            best = sq_dist(&[x], &[b[j]]);
        }
        if j > 0 {
            best = best.min(sq_dist(&[x], &[b[j - 1]]));
        }
        worst = worst.max(best);
    }
    worst
}

/// Hausdorff distance between two sets through their prebuilt indices.
pub fn hausdorff_indexed(a: &PointSet, ia: &SetIndex, b: &PointSet, ib: &SetIndex) -> Result<f64> {
    if let (Inner::Sorted(va), Inner::Sorted(vb)) = (&ia.inner, &ib.inner) {
        check_dims(a, b)?;
        return Ok(sorted_directed_sq(va, vb).max(sorted_directed_sq(vb, va)).sqrt());
    }
    Ok(ib.directed_from(a)?.max(ia.directed_from(b)?))
}

/// Tree scan with a seeded stop threshold; the neighbour found for one query
/// is tried first for the next, which settles most queries in one distance.
fn directed_sq_with_tree(a: &PointSet, tree: &KdTree) -> f64 {
    let n = a.len();
    let stride = (n / 256).max(1);
    let mut seed = 0.0f64;
    for k in (0..n).step_by(stride) {
        seed = seed.max(tree.min_sq_dist(a.point(k), -1.0));
    }
    if stride == 1 {
        return seed;
    }
    a.coords
        .par_chunks(CHUNK * a.dim)
        .map(|chunk| {
            let mut m = seed;
            let mut hint: Option<usize> = None;
            for p in chunk.chunks_exact(a.dim) {
                if let Some(h) = hint {
                    if sq_dist(p, tree.point(h)) <= m {
                        continue;
                    }
                }
                let (v, k) = tree.nearest(p, m);
                hint = Some(k);
                if v > m {
                    m = v;
                }
            }
            m
        })
        .reduce(|| seed, f64::max)
}

/// max over points p of `nearest(stop, p)`, where `nearest` returns the exact
/// minimum squared distance when it exceeds `stop` and otherwise any value
/// `<= stop`. Seeding `stop` with a strided sample's exact maximum lets most
/// queries terminate early without changing the result.
fn scan_max(a: &PointSet, nearest: &(dyn Fn(f64, &[f64]) -> f64 + Sync)) -> f64 {
    let n = a.len();
    let stride = (n / 256).max(1);
    let mut seed = 0.0f64;
    for k in (0..n).step_by(stride) {
        seed = seed.max(nearest(-1.0, a.point(k)));
    }
    if stride == 1 {
        return seed;
    }
    a.coords
        .par_chunks(CHUNK * a.dim)
        .map(|chunk| {
            let mut m = seed;
            for p in chunk.chunks_exact(a.dim) {
                let v = nearest(m, p);
                if v > m {
                    m = v;
                }
            }
            m
        })
        .reduce(|| seed, f64::max)
}

pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    Ok(directed_dist(a, b)?.max(directed_dist(b, a)?))
}

/// Largest pairwise distance; 0 for singletons.
pub fn diam(a: &PointSet) -> f64 {
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    if a.dim == 1 {
        let (lo, hi) = a.bounds();
        return sq_dist(&hi, &lo).sqrt();
    }
    if n <= SMALL_SET {
        return diam_brute(a);
    }
    diam_pruned(a)
}

/// O(n²) pair scan.
pub fn diam_brute(a: &PointSet) -> f64 {
    let pts: Vec<&[f64]> = a.iter().collect();
    let mut best = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max(sq_dist(pts[i], pts[j]));
        }
    }
    best.sqrt()
}

/// Pair scan in order of decreasing distance to the centroid, skipping pairs
/// whose triangle bound r_i + r_j cannot beat the current best.
fn diam_pruned(a: &PointSet) -> f64 {
    let d = a.dim;
    let n = a.len() as f64;
    let mut centroid = vec![0.0; d];
    for p in a.iter() {
        for k in 0..d {
            centroid[k] += p[k];
        }
    }
    for c in &mut centroid {
        *c /= n;
    }
    let mut radial: Vec<(f64, usize)> = a
        .iter()
        .enumerate()
        .map(|(k, p)| (sq_dist(p, &centroid).sqrt(), k))
        .collect();
    radial.sort_unstable_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    // absorbs rounding in the radii and in the triangle inequality
    let slack = 1.0 + 1e-12;
    let mut best_sq = 0.0f64;
    let mut best = 0.0f64;
    for i in 0..radial.len() {
        let (ri, pi) = radial[i];
        if (ri + radial[0].0) * slack < best {
            break;
        }
        let p = a.point(pi);
        for &(rj, pj) in &radial[i + 1..] {
            if (ri + rj) * slack < best {
                break;
            }
            let s = sq_dist(p, a.point(pj));
            if s > best_sq {
                best_sq = s;
                best = s.sqrt();
            }
        }
    }
    best_sq.sqrt()
}

/// True iff every point of `a` lies within `r` of `centers`.
pub fn within_ball(a: &PointSet, centers: &PointSet, r: f64) -> Result<bool> {
    Ok(directed_dist(a, centers)? <= r)
}

/// Subset N ⊆ A with directed_dist(A, N) ≤ ρ ≤ eps. The returned radius is the
/// measured directed distance. Small sets use greedy farthest-point sampling;
/// large ones keep the first point of each grid cell of side eps/√d.
pub fn epsilon_net(a: &PointSet, eps: f64) -> Result<CertifiedSet> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(IfsError::Domain(format!("epsilon must be positive and finite, got {eps}")));
    }
    let net = if a.len() <= SMALL_SET {
        farthest_point_net(a, eps)
    } else {
        grid_net(a, eps)
    };
    let radius = directed_dist(a, &net)?;
    Ok(CertifiedSet { core: net, radius })
}

fn farthest_point_net(a: &PointSet, eps: f64) -> PointSet {
    let n = a.len();
    let eps_sq = eps * eps;
    let mut chosen = vec![0usize];
    let mut nearest: Vec<f64> = a.iter().map(|p| sq_dist(p, a.point(0))).collect();
    loop {
        let (far, &far_sq) = nearest
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1).then(y.0.cmp(&x.0)))
            .expect("non-empty");
        if far_sq <= eps_sq || chosen.len() == n {
            break;
        }
        chosen.push(far);
        let c = a.point(far);
        for (k, p) in a.iter().enumerate() {
            let s = sq_dist(p, c);
            if s < nearest[k] {
                nearest[k] = s;
            }
        }
    }
    chosen.sort_unstable();
    let mut coords = Vec::with_capacity(chosen.len() * a.dim);
    for k in chosen {
        coords.extend_from_slice(a.point(k));
    }
    PointSet::from_raw(a.dim, coords)
}

fn grid_net(a: &PointSet, eps: f64) -> PointSet {
    // cell diagonal slightly under eps
    let side = eps / (a.dim as f64).sqrt() * (1.0 - 1e-9);
    let (lo, _) = a.bounds();
    let mut seen: HashMap<Vec<i64>, ()> = HashMap::new();
    let mut coords = Vec::new();
    for p in a.iter() {
        let cell: Vec<i64> = p
            .iter()
            .zip(&lo)
            .map(|(x, l)| ((x - l) / side).floor() as i64)
            .collect();
        if seen.insert(cell, ()).is_none() {
            coords.extend_from_slice(p);
        }
    }
    PointSet::from_raw(a.dim, coords)
}

/// Writes `# key=value` header lines then one point per line.
pub fn write_csv<W: Write>(mut w: W, set: &PointSet, header: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in header {
        writeln!(w, "# {k}={v}")?;
    }
    let mut line = String::new();
    for p in set.iter() {
        line.clear();
        for (k, x) in p.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&fmt_g17(*x));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Reads the CSV point-cloud format. Comment lines of the form `# key=value`
/// are returned as header pairs; other comment lines and blank lines are skipped.
pub fn read_csv<R: BufRead>(r: R) -> Result<(PointSet, Vec<(String, String)>)> {
    let mut header = Vec::new();
    let mut dim = None;
    let mut coords = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line.map_err(|e| IfsError::Resource(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                header.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let mut count = 0;
        for field in t.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| IfsError::Parse {
                column: 0,
                message: format!("line {}: bad coordinate {field:?}", lineno + 1),
            })?;
            coords.push(v);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(IfsError::Parse {
                    column: 0,
                    message: format!("line {}: expected {d} coordinates, found {count}", lineno + 1),
                })
            }
            _ => {}
        }
    }
    let dim = dim.ok_or_else(|| IfsError::Domain("CSV contains no points".into()))?;
    Ok((PointSet::new(dim, coords)?, header))
}
