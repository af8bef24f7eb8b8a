//! The fractal operator F_S(B) = ∪ f_i(B), orbits, and attractor iteration
//! with certified Hausdorff radii.
//!
//! Parent-child systems stop at the first n with
//! Σ_{k≥n} φ^k(diam(B ∪ F(B))) ≤ ε; orbital systems at the first n with
//! φ^n(diam Ō(B)) ≤ ε.

use rayon::prelude::*;
use serde::Serialize;

use crate::comparison::ComparisonFn;
use crate::error::{IfsError, Result};
use crate::metric_sets::{diam, epsilon_net, hausdorff, CertifiedSet, Point, PointSet, SetIndex};
use crate::num::{round_up, ser_g17, ser_g17_opt, ser_g17_vec};
use crate::system::{CompiledMap, IteratedSystem, MapSpec, Mode};

/// Points per parallel task in [`fractal_step`].
const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    PcTail,
    OrbitalRate,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::PcTail => "pc_tail",
            BoundKind::OrbitalRate => "orbital_rate",
        }
    }
}

/// Flags attached to results whose radius is not a proof.
pub mod flags {
    pub const EMPIRICALLY_BOUNDED: &str = "empirically_bounded";
    pub const DECIMATED_UNCERTIFIED: &str = "decimated_uncertified";
    pub const LEFT_WORKING_BOX: &str = "left_working_box";
    pub const EPS_NOT_REACHED: &str = "eps_not_reached";
    pub const TRUNCATED_SYSTEM_ONLY: &str = "truncated_system_only";
    pub const PROBE_BUDGET_EXHAUSTED: &str = "probe_budget_exhausted";
    pub const HEURISTIC_RADIUS: &str = "heuristic_radius";
}

#[derive(Debug, Clone)]
pub struct AttractorApprox {
    pub result: CertifiedSet,
    pub iterations: usize,
    pub start: PointSet,
    pub bound_kind: BoundKind,
    /// The mode's bound at `iterations`, before decimation or truncation additions.
    pub reported_bound: f64,
    /// Diameter fed to the bound: diam(B ∪ F(B)) or the orbit diameter bound.
    pub diam_used: f64,
    pub truncation_note: Option<String>,
    pub certified: bool,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct OrbitApprox {
    /// ∪_{n≤depth} F^n(B), deduplicated.
    pub points: PointSet,
    pub depth: usize,
    pub diam_lower: f64,
    /// Certified bound on diam Ō(B) (parent-child mode only).
    pub diam_bound: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct IterateOptions {
    pub max_iter: usize,
    /// Largest iterate kept in memory.
    pub point_budget: usize,
    /// Decimate with an ε-net when an iterate exceeds the budget.
    pub decimate: bool,
    /// User-certified bound on diam Ō(B) for orbital mode.
    pub orbit_diam_bound: Option<f64>,
    pub probe_max_depth: usize,
    pub probe_point_budget: usize,
    /// Relative diameter growth below which the orbit probe stops.
    pub probe_tolerance: f64,
    pub probe_inflation: f64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            max_iter: 200,
            point_budget: 4_000_000,
            decimate: false,
            orbit_diam_bound: None,
            probe_max_depth: 30,
            probe_point_budget: 200_000,
            probe_tolerance: 1e-3,
            probe_inflation: 1.25,
        }
    }
}

fn check_dim(sys: &IteratedSystem, b: &PointSet) -> Result<()> {
    if b.dim() != sys.dim() {
        return Err(IfsError::Domain(format!(
            "system is {}-d but the set is {}-d",
            sys.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// F_S(B) without deduplication, map-major, plus the number of images that
/// left the working box.
fn images(sys: &IteratedSystem, b: &PointSet) -> Result<(Vec<f64>, usize)> {
    let d = sys.dim();
    let maps = sys.compiled();
    let chunks: Vec<&[f64]> = b.coords().chunks(CHUNK * d).collect();
    let tasks: Vec<(usize, usize)> = (0..maps.len())
        .flat_map(|m| (0..chunks.len()).map(move |c| (m, c)))
        .collect();
    let blocks: Vec<Result<(Vec<f64>, usize)>> = tasks
        .par_iter()
        .map(|&(m, c)| {
            let src = chunks[c];
            let mut out = vec![0.0; src.len()];
            for (x, y) in src.chunks_exact(d).zip(out.chunks_exact_mut(d)) {
                maps[m].apply_into(x, y)?;
            }
            let escaped = out
                .chunks_exact(d)
                .filter(|y| !sys.working_box().contains(y))
                .count();
            Ok((out, escaped))
        })
        .collect();
    let mut coords = Vec::with_capacity(b.coords().len() * maps.len());
    let mut escaped = 0;
    for block in blocks {
        let (v, e) = block?;
        coords.extend_from_slice(&v);
        escaped += e;
    }
    Ok((coords, escaped))
}

fn step_counted(sys: &IteratedSystem, b: &PointSet) -> Result<(PointSet, usize)> {
    check_dim(sys, b)?;
    let (coords, escaped) = images(sys, b)?;
    if escaped > 0 {
        log::warn!("{escaped} image points left the working box");
    }
    Ok((PointSet::new(sys.dim(), coords)?.dedup(), escaped))
}

/// F_S(B) = {f_i(x) : i ≤ N, x ∈ B} with exact duplicates removed.
pub fn fractal_step(sys: &IteratedSystem, b: &PointSet) -> Result<PointSet> {
    Ok(step_counted(sys, b)?.0)
}

/// F_S^n(B).
pub fn fractal_power(sys: &IteratedSystem, b: &PointSet, n: usize) -> Result<PointSet> {
    let mut cur = b.clone();
    for _ in 0..n {
        cur = fractal_step(sys, &cur)?;
    }
    Ok(cur)
}

/// Σ_{k≥0} φ^k(diam(B ∪ F(B))): every orbit point of B lies within this
/// distance of B in a parent-child system.
pub fn pc_orbit_enclosure(sys: &IteratedSystem, b: &PointSet) -> Result<f64> {
    let d0 = diam(&b.union(&fractal_step(sys, b)?)?);
    sys.phi().tail_upper_bound(d0, 0)
}

/// diam(B) + 2·Σ_{k≥0} φ^k(diam(B ∪ F(B))) ≥ diam Ō(B) in a parent-child system.
pub fn pc_orbit_diam_bound(sys: &IteratedSystem, b: &PointSet) -> Result<f64> {
    Ok(round_up(diam(b) + 2.0 * pc_orbit_enclosure(sys, b)?, 3))
}

/// Orbit diameter bound for the current mode, whether it is certified, and
/// flags explaining why not.
pub fn orbit_diam_bound(sys: &IteratedSystem, b: &PointSet, opts: &IterateOptions) -> Result<(f64, bool, Vec<String>)> {
    check_dim(sys, b)?;
    match sys.mode() {
        Mode::Pc => {
            if !sys.phi().is_summable() || !sys.phi().has_tail_certificate() {
                return Err(IfsError::config("phi", "pc mode needs a summable comparison function with a tail certificate"));
            }
            Ok((pc_orbit_diam_bound(sys, b)?, true, Vec::new()))
        }
        Mode::Orbital => match opts.orbit_diam_bound {
            Some(d) if d >= 0.0 && d.is_finite() => Ok((d, true, Vec::new())),
            Some(d) => Err(IfsError::Domain(format!(
                "orbit diameter bound must be finite and nonnegative, got {d}"
            ))),
            None => {
                let (d, exhausted) = probe_orbit_diam(sys, b, opts)?;
                let mut f = vec![flags::EMPIRICALLY_BOUNDED.to_string()];
                if exhausted {
                    f.push(flags::PROBE_BUDGET_EXHAUSTED.into());
                }
                Ok((d, false, f))
            }
        },
        Mode::Unverified => Err(IfsError::config(
            "mode",
            "an unverified system has no certified bound; declare pc or orbital",
        )),
    }
}

/// ∪_{n≤depth} F^n(B). Fails with a resource error past `point_budget` points.
pub fn orbit(sys: &IteratedSystem, b: &PointSet, depth: usize, point_budget: usize) -> Result<OrbitApprox> {
    check_dim(sys, b)?;
    let mut level = b.dedup();
    let mut all = level.coords().to_vec();
    for _ in 0..depth {
        if level.len().saturating_mul(sys.n_maps()) + all.len() / sys.dim() > point_budget {
            return Err(IfsError::Resource(format!(
                "orbit to depth {depth} exceeds the budget of {point_budget} points"
            )));
        }
        level = fractal_step(sys, &level)?;
        all.extend_from_slice(level.coords());
    }
    let points = PointSet::new(sys.dim(), all)?.dedup();
    let diam_lower = diam(&points);
    let diam_bound = if sys.mode() == Mode::Pc {
        Some(pc_orbit_diam_bound(sys, b)?.max(diam_lower))
    } else {
        None
    };
    Ok(OrbitApprox {
        points,
        depth,
        diam_lower,
        diam_bound,
    })
}

/// Σ_{k=m}^{n-1} φ^k(d0), rounded upward.
pub fn cauchy_bound(phi: &ComparisonFn, d0: f64, m: usize, n: usize) -> Result<f64> {
    if n <= m {
        return Ok(0.0);
    }
    let sum = phi.partial_sum(d0, m, n - m)?;
    Ok(round_up(sum, 2 * (n - m)))
}

/// Empirical orbit diameter: orbit depth grows until the diameter stops
/// growing by more than `probe_tolerance` (relative), then the last value is
/// inflated by `probe_inflation`. Returns the bound and whether the probe ran
/// out of budget before stabilising.
pub fn probe_orbit_diam(sys: &IteratedSystem, b: &PointSet, opts: &IterateOptions) -> Result<(f64, bool)> {
    check_dim(sys, b)?;
    let mut level = b.dedup();
    let mut all = level.clone();
    let mut current = diam(&all);
    for _ in 0..opts.probe_max_depth {
        if all.len() + level.len() * sys.n_maps() > opts.probe_point_budget {
            return Ok((current * opts.probe_inflation, true));
        }
        level = fractal_step(sys, &level)?;
        all = all.union(&level)?.dedup();
        let next = diam(&all);
        let grew = next - current;
        current = next;
        if grew <= opts.probe_tolerance * current {
            return Ok((current * opts.probe_inflation, false));
        }
    }
    Ok((current * opts.probe_inflation, true))
}

/// First n ≤ max_iter with bound(n) ≤ eps, or `None`.
fn first_below(eps: f64, max_iter: usize, bound: impl Fn(usize) -> Result<f64>) -> Result<Option<(usize, f64)>> {
    for n in 0..=max_iter {
        let b = bound(n)?;
        if b <= eps {
            return Ok(Some((n, b)));
        }
    }
    Ok(None)
}

/// Iterates F_S from `b0` until the mode's certified bound drops to `eps`.
///
/// The returned core satisfies h(core, A_{B0}) ≤ radius for the attractor of the
/// truncated system, unless `certified` is false (flags say why).
pub fn iterate_certified(
    sys: &IteratedSystem,
    b0: &PointSet,
    eps: f64,
    opts: &IterateOptions,
) -> Result<AttractorApprox> {
    check_dim(sys, b0)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(IfsError::Domain(format!("eps must be positive and finite, got {eps}")));
    }
    let phi = sys.phi();
    let mut flags: Vec<String> = Vec::new();
    let mut certified = true;

    let (bound_kind, diam_used, n, bound) = match sys.mode() {
        Mode::Unverified => {
            return Err(IfsError::config(
                "mode",
                "an unverified system has no certified bound; declare pc or orbital",
            ))
        }
        Mode::Pc => {
            if !phi.is_summable() || !phi.has_tail_certificate() {
                return Err(IfsError::config("phi", "pc mode needs a summable comparison function with a tail certificate"));
            }
            let d0 = diam(&b0.union(&fractal_step(sys, b0)?)?);
            match first_below(eps, opts.max_iter, |n| phi.tail_upper_bound(d0, n))? {
                Some((n, b)) => (BoundKind::PcTail, d0, n, b),
                None => {
                    return Err(IfsError::Resource(format!(
                        "tail bound does not reach {eps} within {} iterations",
                        opts.max_iter
                    )))
                }
            }
        }
        Mode::Orbital => {
            let d = match opts.orbit_diam_bound {
                Some(d) => {
                    if !(d >= 0.0) || !d.is_finite() {
                        return Err(IfsError::Domain(format!("orbit diameter bound must be finite and nonnegative, got {d}")));
                    }
                    d
                }
                None => {
                    let (d, exhausted) = probe_orbit_diam(sys, b0, opts)?;
                    certified = false;
                    flags.push(flags::EMPIRICALLY_BOUNDED.into());
                    if exhausted {
                        flags.push(flags::PROBE_BUDGET_EXHAUSTED.into());
                    }
                    d
                }
            };
            match first_below(eps, opts.max_iter, |n| phi.iterate(d, n))? {
                Some((n, b)) => (BoundKind::OrbitalRate, d, n, b),
                None => {
                    // best effort: the rate may be too slow for the iteration cap
                    certified = false;
                    flags.push(flags::EPS_NOT_REACHED.into());
                    let n = opts.max_iter;
                    (BoundKind::OrbitalRate, d, n, phi.iterate(d, n)?)
                }
            }
        }
    };

    let mut cur = b0.dedup();
    let mut decimation: Vec<(usize, f64)> = Vec::new();
    let mut escaped = 0;
    for k in 0..n {
        if cur.len().saturating_mul(sys.n_maps()) > opts.point_budget {
            if !opts.decimate {
                return Err(IfsError::Resource(format!(
                    "iterate {} would exceed the budget of {} points; enable decimation or raise the budget",
                    k + 1,
                    opts.point_budget
                )));
            }
            let net = decimate_to(&cur, opts.point_budget / sys.n_maps())?;
            decimation.push((k, net.radius));
            cur = net.core;
        }
        let (next, e) = step_counted(sys, &cur)?;
        escaped += e;
        cur = next;
    }

    let mut radius = bound;
    let mut notes: Vec<String> = Vec::new();
    if !decimation.is_empty() {
        // a net dropped at step k is pushed through the remaining n − k steps
        let mut added = 0.0;
        for &(k, delta) in &decimation {
            added += match bound_kind {
                BoundKind::OrbitalRate => phi.iterate(delta, n - k)?,
                BoundKind::PcTail => delta,
            };
        }
        let added = round_up(added, decimation.len());
        radius += added;
        notes.push(format!("decimation +{}", crate::num::fmt_g17(added)));
        if bound_kind == BoundKind::PcTail {
            certified = false;
            flags.push(flags::DECIMATED_UNCERTIFIED.into());
        }
    }
    if sys.is_truncated() {
        match sys.delta_tail() {
            Some(delta) => {
                let added = if phi.has_tail_certificate() {
                    phi.tail_upper_bound(delta, 0)?
                } else {
                    certified = false;
                    flags.push(flags::TRUNCATED_SYSTEM_ONLY.into());
                    delta
                };
                radius += added;
                notes.push(format!(
                    "dropped maps beyond N={} +{}",
                    sys.n_maps(),
                    crate::num::fmt_g17(added)
                ));
            }
            None => {
                flags.push(flags::TRUNCATED_SYSTEM_ONLY.into());
                notes.push(format!("truncated system only: radius covers maps 1..={}", sys.n_maps()));
            }
        }
    }
    if escaped > 0 {
        flags.push(flags::LEFT_WORKING_BOX.into());
    }
    let radius = round_up(radius, 2);
    Ok(AttractorApprox {
        result: CertifiedSet::new(cur, radius)?,
        iterations: n,
        start: b0.clone(),
        bound_kind,
        reported_bound: bound,
        diam_used,
        truncation_note: if notes.is_empty() { None } else { Some(notes.join("; ")) },
        certified,
        flags,
    })
}

/// ε-net of `set` with at most `target` points, by doubling ε from a
/// size-based guess.
fn decimate_to(set: &PointSet, target: usize) -> Result<CertifiedSet> {
    let target = target.max(1);
    let extent = diam(set).max(f64::MIN_POSITIVE);
    let mut eps = extent * (1.0 / target as f64).powf(1.0 / set.dim() as f64);
    loop {
        let net = epsilon_net(set, eps)?;
        if net.core.len() <= target {
            return Ok(net);
        }
        eps *= 2.0;
    }
}

/// A_x through [`iterate_certified`] from {x}.
pub fn attractor_of_point(sys: &IteratedSystem, x: &Point, eps: f64, opts: &IterateOptions) -> Result<AttractorApprox> {
    iterate_certified(sys, &PointSet::singleton(x), eps, opts)
}

/// Fixed point of one φ-contraction by Picard iteration, stopped with the
/// a-posteriori bound d(x_n, η) ≤ Σ_{k≥0} φ^k(d(x_n, x_{n+1})).
pub fn single_map_fixed_point(
    f: &MapSpec,
    phi: &ComparisonFn,
    x0: &Point,
    eps: f64,
    max_iter: usize,
) -> Result<(Point, f64)> {
    if !(eps > 0.0) {
        return Err(IfsError::Domain(format!("eps must be positive, got {eps}")));
    }
    if !phi.has_tail_certificate() {
        return Err(IfsError::TailNotCertifiable(
            "cannot certify stopping without a tail certificate".into(),
        ));
    }
    let map = CompiledMap::compile_standalone(x0.dim(), f)?;
    let mut x = x0.coords().to_vec();
    let mut next = vec![0.0; x.len()];
    for _ in 0..=max_iter {
        map.apply_into(&x, &mut next)?;
        let step = crate::kdtree::sq_dist(&x, &next).sqrt();
        let radius = phi.tail_upper_bound(step, 0)?;
        if radius <= eps {
            return Ok((Point::new(x)?, radius));
        }
        std::mem::swap(&mut x, &mut next);
    }
    Err(IfsError::Resource(format!("no certified fixed point within {max_iter} iterations")))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeAttractor {
    #[serde(serialize_with = "ser_g17_vec")]
    pub start: Vec<f64>,
    pub n: usize,
    #[serde(serialize_with = "ser_g17")]
    pub radius: f64,
    pub points: usize,
    pub cluster: usize,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub cluster_count: usize,
    /// "consistent_with_picard", "weakly_picard_not_picard" or "inconclusive".
    pub classification: String,
    /// min over pairs in different clusters of h(core_i, core_j) − r_i − r_j:
    /// a lower bound on the distance between the true attractors.
    #[serde(serialize_with = "ser_g17_opt")]
    pub certified_separation: Option<f64>,
    pub certified_separated: bool,
    pub attractors: Vec<ProbeAttractor>,
}

/// Computes A_x for every start and groups them by h ≤ 2·(max radius).
pub fn picard_probe(sys: &IteratedSystem, starts: &[Point], eps: f64, opts: &IterateOptions) -> Result<ProbeReport> {
    if starts.is_empty() {
        return Err(IfsError::Domain("picard probe needs at least one start".into()));
    }
    let results: Vec<AttractorApprox> = starts
        .iter()
        .map(|x| attractor_of_point(sys, x, eps, opts))
        .collect::<Result<_>>()?;
    let indices: Vec<SetIndex> = results.iter().map(|a| SetIndex::new(&a.result.core)).collect();
    let k = results.len();
    let mut h = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = indices[j]
                .directed_from(&results[i].result.core)?
                .max(indices[i].directed_from(&results[j].result.core)?);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    let max_r = results.iter().map(|a| a.result.radius).fold(0.0, f64::max);
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..k {
        for j in i + 1..k {
            if h[i][j] <= 2.0 * max_r {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..k).map(|i| find(&mut parent, i)).collect();
    let mut labels: Vec<usize> = Vec::new();
    let cluster_of: Vec<usize> = roots
        .iter()
        .map(|r| match labels.iter().position(|l| l == r) {
            Some(p) => p,
            None => {
                labels.push(*r);
                labels.len() - 1
            }
        })
        .collect();
    let mut separation: Option<f64> = None;
    for i in 0..k {
        for j in i + 1..k {
            if cluster_of[i] != cluster_of[j] {
                let s = h[i][j] - results[i].result.radius - results[j].result.radius;
                separation = Some(separation.map_or(s, |m: f64| m.min(s)));
            }
        }
    }
    let all_certified = results.iter().all(|a| a.certified);
    let certified_separated = all_certified && separation.is_some_and(|s| s > 0.0);
    let classification = if labels.len() == 1 {
        "consistent_with_picard"
    } else if certified_separated {
        "weakly_picard_not_picard"
    } else {
        "inconclusive"
    };
    Ok(ProbeReport {
        cluster_count: labels.len(),
        classification: classification.into(),
        certified_separation: separation,
        certified_separated,
        attractors: results
            .iter()
            .zip(starts)
            .zip(&cluster_of)
            .map(|((a, x), &c)| ProbeAttractor {
                start: x.to_vec(),
                n: a.iterations,
                radius: a.result.radius,
                points: a.result.core.len(),
                cluster: c,
                certified: a.certified,
            })
            .collect(),
    })
}

/// h(F(A), A): how far a computed attractor is from being invariant.
pub fn invariance_residual(sys: &IteratedSystem, a: &PointSet) -> Result<f64> {
    hausdorff(&fractal_step(sys, a)?, a)
}
