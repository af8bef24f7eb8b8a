//! Samplers for the parent-child condition, the orbital condition and family
//! regularity.
//!
//! A clean report is evidence on the sampled words and points, not a proof;
//! `certified` is true only for the exact affine regularity computation.
//! Inequalities are compared with a slack of 8 ulps of the compared magnitudes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::kdtree::sq_dist;
use crate::metric_sets::PointSet;
use crate::num::{round_up, ser_g17, ser_g17_opt, ser_g17_vec, ulp_slack};
use crate::shift_space::FiniteWord;
use crate::system::{IndexFamily, IteratedSystem};

/// Exhaustive word enumeration is used while N^depth stays at or below this.
pub const EXHAUSTIVE_WORD_BUDGET: usize = 100_000;

/// Violations kept in a report; the total is always counted.
pub const MAX_WITNESSES: usize = 1000;

const SLACK_ULPS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
    pub letter: u32,
    #[serde(serialize_with = "ser_g17_vec")]
    pub x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<PointJson>,
    #[serde(serialize_with = "ser_g17")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_g17")]
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PointJson(#[serde(serialize_with = "ser_g17_vec")] pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    /// Number of inequality evaluations.
    pub samples: usize,
    pub depth: usize,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    /// Largest lhs − rhs seen; positive exactly when something was violated.
    #[serde(serialize_with = "ser_g17_opt")]
    pub max_margin: Option<f64>,
    pub certified: bool,
    pub flags: Vec<String>,
    pub metrics: BTreeMap<String, Metric>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Metric(#[serde(serialize_with = "ser_g17")] pub f64);

const SAMPLED_NOTE: &str = "sampled check: zero violations is evidence on the samples, not a proof";

impl ConditionReport {
    fn new(condition: &str, depth: usize) -> ConditionReport {
        ConditionReport {
            condition: condition.into(),
            samples: 0,
            depth,
            violation_count: 0,
            violations: Vec::new(),
            max_margin: None,
            certified: false,
            flags: Vec::new(),
            metrics: BTreeMap::new(),
            note: SAMPLED_NOTE.into(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }

    /// Folds one evaluation in, keeping witnesses in evaluation order.
    fn record(&mut self, margin: f64, violated: Option<Violation>) {
        self.samples += 1;
        self.max_margin = Some(self.max_margin.map_or(margin, |m| m.max(margin)));
        if let Some(v) = violated {
            self.violation_count += 1;
            if self.violations.len() < MAX_WITNESSES {
                self.violations.push(v);
            }
        }
    }

    fn absorb(&mut self, part: Partial) {
        for (margin, v) in part.0 {
            self.record(margin, v);
        }
    }
}

/// Evaluations from one parallel task, replayed in order into the report.
struct Partial(Vec<(f64, Option<Violation>)>);

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

fn magnitude(points: &[&[f64]]) -> f64 {
    points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
}

/// All words of length `m` over 1..=n in lexicographic order, or `count`
/// seeded random ones when there are more than the exhaustive budget.
fn words_of_length(n: usize, m: usize, count: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<u32>>, bool) {
    let total = (n as f64).powi(m as i32);
    if total <= EXHAUSTIVE_WORD_BUDGET as f64 {
        let mut words = vec![Vec::new()];
        for _ in 0..m {
            words = words
                .into_iter()
                .flat_map(|w| {
                    (1..=n as u32).map(move |i| {
                        let mut v = w.clone();
                        v.push(i);
                        v
                    })
                })
                .collect();
        }
        (words, true)
    } else {
        let words = (0..count)
            .map(|_| (0..m).map(|_| rng.random_range(1..=n as u32)).collect())
            .collect();
        (words, false)
    }
}

fn word_string(w: &[u32]) -> String {
    FiniteWord::new(w.to_vec()).map(|f| f.to_string()).unwrap_or_default()
}

/// Samples d(f_ω(x), f_{ωi}(x)) ≤ φ^{|ω|}(d(x, f_i(x))) for |ω| ≤ max_depth,
/// every letter i and every sample x.
pub fn check_parent_child(
    sys: &IteratedSystem,
    x_samples: &PointSet,
    max_depth: usize,
    words_per_depth: usize,
    seed: u64,
) -> Result<ConditionReport> {
    let mut report = ConditionReport::new("parent_child", max_depth);
    let n = sys.n_maps();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exhaustive = true;
    let points: Vec<&[f64]> = x_samples.iter().collect();
    for m in 0..=max_depth {
        let (words, full) = words_of_length(n, m, words_per_depth, &mut rng);
        exhaustive &= full;
        let parts: Vec<Result<Partial>> = points
            .par_iter()
            .map(|&x| {
                let mut out = Vec::new();
                for i in 1..=n as u32 {
                    let fx = sys.apply_map(i, x)?;
                    let base = dist(x, &fx);
                    let rhs = sys.phi().iterate(base, m)?;
                    for w in &words {
                        let mut parent = x.to_vec();
                        sys.apply_letters_in_place(w, &mut parent)?;
                        let mut child = fx.to_vec();
                        sys.apply_letters_in_place(w, &mut child)?;
                        let lhs = dist(&parent, &child);
                        let slack = ulp_slack(lhs.max(rhs).max(magnitude(&[&parent, &child, x])), SLACK_ULPS);
                        let margin = lhs - rhs;
                        let violated = (lhs > rhs + slack).then(|| Violation {
                            word: Some(word_string(w)),
                            letter: i,
                            x: x.to_vec(),
                            y: None,
                            lhs,
                            rhs,
                        });
                        out.push((margin, violated));
                    }
                }
                Ok(Partial(out))
            })
            .collect();
        for p in parts {
            report.absorb(p?);
        }
    }
    if !exhaustive {
        report.flags.push("random_words".into());
    }
    Ok(report)
}

/// Orbit points of one start, deduplicated, for pair sampling.
fn orbit_points(sys: &IteratedSystem, x: &[f64], depth: usize, budget: usize) -> Result<PointSet> {
    let start = PointSet::new(sys.dim(), x.to_vec())?;
    Ok(crate::attractor::orbit(sys, &start, depth, budget)?.points)
}

/// Pairs (y, z) of one orbit: all of them when there are at most
/// `pair_budget`, otherwise `pair_budget` seeded random pairs.
fn orbit_pairs(len: usize, pair_budget: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let all = len * len.saturating_sub(1) / 2;
    if all <= pair_budget {
        (0..len).flat_map(|a| (a + 1..len).map(move |b| (a, b))).collect()
    } else {
        (0..pair_budget)
            .map(|_| {
                let a = rng.random_range(0..len);
                let mut b = rng.random_range(0..len - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            })
            .collect()
    }
}

/// Orbit size cap used by the orbital checkers.
const ORBIT_POINT_BUDGET: usize = 1_000_000;

/// Samples d(f_i(y), f_i(z)) ≤ φ(d(y, z)) for pairs y, z drawn from the same
/// orbit approximation ∪_{n≤depth} F^n({x}); pairs from different orbits are
/// never compared.
pub fn check_orbital(
    sys: &IteratedSystem,
    x_samples: &PointSet,
    orbit_depth: usize,
    pair_budget: usize,
    seed: u64,
) -> Result<ConditionReport> {
    check_orbital_words(sys, x_samples, orbit_depth, pair_budget, 1, 0, seed, "orbital")
}

/// Samples the iterated orbital inequality d(f_ω(y), f_ω(z)) ≤ φ^{|ω|}(d(y, z))
/// for |ω| ≤ `max_word_len` on pairs from one orbit.
pub fn check_orbital_iterated(
    sys: &IteratedSystem,
    x_samples: &PointSet,
    orbit_depth: usize,
    pair_budget: usize,
    max_word_len: usize,
    words_per_len: usize,
    seed: u64,
) -> Result<ConditionReport> {
    check_orbital_words(
        sys,
        x_samples,
        orbit_depth,
        pair_budget,
        max_word_len,
        words_per_len,
        seed,
        "orbital_iterated",
    )
}

#[allow(clippy::too_many_arguments)]
fn check_orbital_words(
    sys: &IteratedSystem,
    x_samples: &PointSet,
    orbit_depth: usize,
    pair_budget: usize,
    max_word_len: usize,
    words_per_len: usize,
    seed: u64,
    condition: &str,
) -> Result<ConditionReport> {
    let mut report = ConditionReport::new(condition, orbit_depth);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sys.n_maps();
    let mut words: Vec<Vec<u32>> = Vec::new();
    let mut exhaustive = true;
    for len in 1..=max_word_len {
        let (ws, full) = words_of_length(n, len, words_per_len, &mut rng);
        exhaustive &= full;
        words.extend(ws);
    }
    if !exhaustive {
        report.flags.push("random_words".into());
    }
    for x in x_samples.iter() {
        let orbit = orbit_points(sys, x, orbit_depth, ORBIT_POINT_BUDGET)?;
        let pairs = orbit_pairs(orbit.len(), pair_budget, &mut rng);
        let parts: Vec<Result<Partial>> = pairs
            .par_chunks(1024)
            .map(|chunk| {
                let mut out = Vec::new();
                for &(a, b) in chunk {
                    let (y, z) = (orbit.point(a), orbit.point(b));
                    let d = dist(y, z);
                    for w in &words {
                        let rhs = sys.phi().iterate(d, w.len())?;
                        let mut fy = y.to_vec();
                        sys.apply_letters_in_place(w, &mut fy)?;
                        let mut fz = z.to_vec();
                        sys.apply_letters_in_place(w, &mut fz)?;
                        let lhs = dist(&fy, &fz);
                        let slack = ulp_slack(lhs.max(rhs).max(magnitude(&[&fy, &fz, y, z])), SLACK_ULPS);
                        let violated = (lhs > rhs + slack).then(|| Violation {
                            word: (w.len() > 1).then(|| word_string(w)),
                            letter: w[0],
                            x: y.to_vec(),
                            y: Some(PointJson(z.to_vec())),
                            lhs,
                            rhs,
                        });
                        out.push((lhs - rhs, violated));
                    }
                }
                Ok(Partial(out))
            })
            .collect();
        for p in parts {
            report.absorb(p?);
        }
    }
    Ok(report)
}

/// Boundedness and equal uniform continuity of the family on the working box.
///
/// All-affine families are analysed exactly: sup_i ‖M_i‖ (spectral norm) and
/// sup_i sup_{x ∈ box} |f_i(x) − c| ≤ ‖M_i‖·R + |f_i(c) − c| with c the box
/// center and R its half diagonal. Other families get sampled moduli of
/// continuity at each ε of `eps_grid` and a sampled image radius.
pub fn check_family_regularity(
    sys: &IteratedSystem,
    box_samples: &PointSet,
    eps_grid: &[f64],
    seed: u64,
) -> Result<ConditionReport> {
    let mut report = ConditionReport::new("family_regularity", 0);
    let bx = sys.working_box();
    let center = bx.center();
    let half_diag = bx.diam() / 2.0;
    report.metrics.insert("maps".into(), Metric(sys.n_maps() as f64));
    if let Some(affine) = sys.affine_maps() {
        let mut sup_norm = 0.0f64;
        let mut image = 0.0f64;
        let mut fc = vec![0.0; sys.dim()];
        for a in affine {
            let norm = round_up(a.operator_norm(), 8 * sys.dim());
            a.apply_into(&center, &mut fc);
            sup_norm = sup_norm.max(norm);
            image = image.max(round_up(norm * half_diag + dist(&fc, &center), 4));
        }
        report.metrics.insert("sup_operator_norm".into(), Metric(sup_norm));
        report.metrics.insert("image_radius_bound".into(), Metric(image));
        report.certified = true;
        report.note = "exact for the affine maps 1..=N".into();
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut image = 0.0f64;
        let mut fx = vec![0.0; sys.dim()];
        for x in box_samples.iter() {
            for m in sys.compiled() {
                m.apply_into(x, &mut fx)?;
                image = image.max(dist(&fx, &center));
            }
        }
        report.metrics.insert("sampled_image_radius".into(), Metric(image));
        let mut fy = vec![0.0; sys.dim()];
        for &eps in eps_grid {
            let mut modulus = 0.0f64;
            for x in box_samples.iter() {
                // a nearby point at distance ≤ eps, clamped into the box
                let y: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(k, v)| {
                        let step = eps / (sys.dim() as f64).sqrt() * rng.random_range(-1.0..=1.0);
                        (v + step).clamp(bx.min[k], bx.max[k])
                    })
                    .collect();
                for m in sys.compiled() {
                    m.apply_into(x, &mut fx)?;
                    if m.apply_into(&y, &mut fy).is_ok() {
                        modulus = modulus.max(dist(&fx, &fy));
                    }
                }
                report.samples += 1;
            }
            report
                .metrics
                .insert(format!("modulus_at_{}", crate::num::fmt_g17(eps)), Metric(modulus));
        }
        report.flags.push("sampled_moduli".into());
    }
    if let IndexFamily::Parametric { delta_tail, n, .. } = sys.family() {
        match delta_tail {
            Some(d) => {
                report.metrics.insert("delta_tail".into(), Metric(*d));
                report.note.push_str(&format!("; maps beyond N={n} covered by delta_tail"));
            }
            None => {
                report.flags.push("boundedness not certifiable".into());
                report.certified = false;
                report
                    .note
                    .push_str(&format!("; only maps 1..={n} analysed, no certificate for the rest"));
            }
        }
    }
    Ok(report)
}
