//! Addresses a_α(x) = lim f_{[α]_n}(x), address sets, cylinder sets, and the
//! projections Θ, π, π^t and Ψ.
//!
//! Only eventually periodic infinite words are accepted; they are dense in the
//! code space, so every address is a limit of the ones computed here.
//!
//! Radii: with D a bound on diam Ō(x), a parent-child system gives
//! |f_{[α]_n}(x) − a_α(x)| ≤ Σ_{k≥n} φ^k(D) and an orbital one φ^n(D).
//! Pushing a radius through an image f_w needs a modulus for f_w. Orbital
//! systems have φ^{|w|}; parent-child systems have none, so an empirical
//! Lipschitz estimate on the cloud is used and the result is flagged
//! `heuristic_radius`.

use rayon::prelude::*;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Serialize, Serializer};

use crate::attractor::{flags, iterate_certified, orbit_diam_bound, IterateOptions};
use crate::error::{IfsError, Result};
use crate::kdtree::sq_dist;
use crate::metric_sets::{CertifiedSet, Point, PointSet};
use crate::num::{round_up, ser_g17_vec, ulp_slack};
use crate::shift_space::{dc_distance, enumerate_eventually_periodic, FiniteWord, InfiniteWordSpec, TotalWord};
use crate::system::{IteratedSystem, Mode};

/// Cap on the closure schedule.
pub const CLOSURE_WORD_CAP: usize = 10_000;

/// Pairs sampled by the empirical image modulus.
const MODULUS_PAIRS: usize = 4096;

/// A point- or set-valued address computation.
#[derive(Debug, Clone, PartialEq)]
pub struct AddressResult {
    pub value: PointSet,
    pub radius: f64,
    /// Prefix length n actually applied (|α| for finite words).
    pub depth: usize,
    pub mode: Mode,
    pub certified: bool,
    pub flags: Vec<String>,
    /// Orbit diameter bound behind the radius; 0 when no limit was taken.
    pub diam_bound: f64,
    single: bool,
}

impl AddressResult {
    /// The value of a point-valued result, or the first point of a set.
    pub fn point(&self) -> &[f64] {
        self.value.point(0)
    }

    pub fn is_point(&self) -> bool {
        self.single
    }

    pub fn certified_set(&self) -> CertifiedSet {
        CertifiedSet {
            core: self.value.clone(),
            radius: self.radius,
        }
    }
}

struct Coords<'a>(&'a [f64]);

impl Serialize for Coords<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ser_g17_vec(self.0, s)
    }
}

struct Rows<'a>(&'a PointSet);

impl Serialize for Rows<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for p in self.0.iter() {
            seq.serialize_element(&Coords(p))?;
        }
        seq.end()
    }
}

struct G17(f64);

impl Serialize for G17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::num::ser_g17(&self.0, s)
    }
}

impl Serialize for AddressResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("AddressResult", 7)?;
        if self.single {
            st.serialize_field("value", &Coords(self.point()))?;
        } else {
            st.serialize_field("value", &Rows(&self.value))?;
        }
        st.serialize_field("radius", &G17(self.radius))?;
        st.serialize_field("depth", &self.depth)?;
        st.serialize_field("mode", &self.mode)?;
        st.serialize_field("certified", &self.certified)?;
        st.serialize_field("flags", &self.flags)?;
        st.serialize_field("diam_bound", &G17(self.diam_bound))?;
        st.end()
    }
}

fn check_letters(sys: &IteratedSystem, alpha: &InfiniteWordSpec) -> Result<()> {
    sys.check_word(alpha.preperiod())?;
    sys.check_word(alpha.period())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(IfsError::Domain(format!("eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

/// f_{[α]_n}(B) for the first n whose radius is at most eps; D bounds the
/// orbit diameter of all of B.
fn address_of(
    sys: &IteratedSystem,
    alpha: &InfiniteWordSpec,
    b: &PointSet,
    eps: f64,
    opts: &IterateOptions,
    single: bool,
) -> Result<AddressResult> {
    check_eps(eps)?;
    check_letters(sys, alpha)?;
    let (d, mut certified, mut flag_list) = orbit_diam_bound(sys, b, opts)?;
    let phi = sys.phi();
    let bound = |n: usize| -> Result<f64> {
        match sys.mode() {
            Mode::Pc => phi.tail_upper_bound(d, n),
            _ => phi.iterate(d, n),
        }
    };
    let mut found = None;
    for n in 0..=opts.max_iter {
        let r = bound(n)?;
        if r <= eps {
            found = Some((n, r));
            break;
        }
    }
    let (n, radius) = match found {
        Some(v) => v,
        None if sys.mode() == Mode::Orbital => {
            certified = false;
            flag_list.push(flags::EPS_NOT_REACHED.into());
            (opts.max_iter, bound(opts.max_iter)?)
        }
        None => {
            return Err(IfsError::Resource(format!(
                "address bound does not reach {eps} within {} letters",
                opts.max_iter
            )))
        }
    };
    let image = sys.image_of_set(&alpha.prefix(n), b)?;
    let value = if single { image } else { image.dedup() };
    Ok(AddressResult {
        value,
        radius,
        depth: n,
        mode: sys.mode(),
        certified,
        flags: flag_list,
        diam_bound: d,
        single,
    })
}

/// a_α(x) to within eps.
pub fn address_point(
    sys: &IteratedSystem,
    alpha: &InfiniteWordSpec,
    x: &Point,
    eps: f64,
    opts: &IterateOptions,
) -> Result<AddressResult> {
    address_of(sys, alpha, &PointSet::singleton(x), eps, opts, true)
}

/// a_α(B) = closure of {a_α(x) : x ∈ B}, computed as f_{[α]_n}(B) with one
/// n for the whole set; the radius is the largest pointwise radius.
pub fn address_set(
    sys: &IteratedSystem,
    alpha: &InfiniteWordSpec,
    b: &PointSet,
    eps: f64,
    opts: &IterateOptions,
) -> Result<AddressResult> {
    if b.is_empty() {
        return Err(IfsError::Domain("address of an empty set".into()));
    }
    address_of(sys, alpha, b, eps, opts, false)
}

/// a_α(x) for many words, in parallel, in input order.
pub fn address_batch(
    sys: &IteratedSystem,
    alphas: &[InfiniteWordSpec],
    x: &Point,
    eps: f64,
    opts: &IterateOptions,
) -> Result<Vec<AddressResult>> {
    alphas.par_iter().map(|a| address_point(sys, a, x, eps, opts)).collect()
}

/// Largest ratio |f_w(p) − f_w(q)| / |p − q| over neighbouring pairs of the
/// cloud, in lexicographic order.
pub fn empirical_image_modulus(sys: &IteratedSystem, w: &FiniteWord, cloud: &PointSet) -> Result<f64> {
    sys.check_word(w.letters())?;
    let d = cloud.dim();
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by(|&a, &b| {
        cloud
            .point(a)
            .iter()
            .zip(cloud.point(b))
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let pairs = order.len().saturating_sub(1);
    let stride = pairs.div_ceil(MODULUS_PAIRS).max(1);
    let mut best = 0.0f64;
    let mut seen = false;
    let (mut fp, mut fq) = (Vec::with_capacity(d), Vec::with_capacity(d));
    for k in (0..pairs).step_by(stride) {
        let (p, q) = (cloud.point(order[k]), cloud.point(order[k + 1]));
        let base = sq_dist(p, q).sqrt();
        if base == 0.0 {
            continue;
        }
        fp.clear();
        fp.extend_from_slice(p);
        fq.clear();
        fq.extend_from_slice(q);
        sys.apply_letters_in_place(w.letters(), &mut fp)?;
        sys.apply_letters_in_place(w.letters(), &mut fq)?;
        best = best.max(sq_dist(&fp, &fq).sqrt() / base);
        seen = true;
    }
    Ok(if seen { best } else { 1.0 })
}

/// Radius of f_w(core) around the image of the true set, given the input
/// radius r. The flag is true when the radius is heuristic.
fn image_radius(sys: &IteratedSystem, w: &FiniteWord, core: &PointSet, r: f64) -> Result<(f64, bool)> {
    if r == 0.0 || w.is_empty() {
        return Ok((r, false));
    }
    match sys.mode() {
        Mode::Orbital => Ok((sys.phi().iterate(r, w.len())?, false)),
        _ => {
            let l = empirical_image_modulus(sys, w, core)?;
            Ok((round_up(l * r, 2), true))
        }
    }
}

fn exact_image(sys: &IteratedSystem, w: &FiniteWord, b: &CertifiedSet, single: bool) -> Result<AddressResult> {
    let (radius, heuristic) = image_radius(sys, w, &b.core, b.radius)?;
    let image = sys.image_of_set(w, &b.core)?;
    Ok(AddressResult {
        value: if single { image } else { image.dedup() },
        radius,
        depth: w.len(),
        mode: sys.mode(),
        certified: !heuristic,
        flags: if heuristic { vec![flags::HEURISTIC_RADIUS.into()] } else { Vec::new() },
        diam_bound: 0.0,
        single,
    })
}

/// A_{[α]_n,x} = f_{[α]_n}(A_x): the part of A_x whose addresses start with
/// `prefix`.
pub fn cylinder_set(
    sys: &IteratedSystem,
    prefix: &FiniteWord,
    x: &Point,
    eps: f64,
    opts: &IterateOptions,
) -> Result<AddressResult> {
    sys.check_word(prefix.letters())?;
    let a = iterate_certified(sys, &PointSet::singleton(x), eps, opts)?;
    let mut out = exact_image(sys, prefix, &a.result, false)?;
    out.certified &= a.certified;
    out.flags.splice(0..0, a.flags);
    Ok(out)
}

/// Θ(α, B): a_α(B) for infinite α, f_α(B) for finite α, B for the empty word.
///
/// The input radius is pushed through finite images. It is not pushed through
/// a_α, which has no modulus; a positive input radius then sets the flag
/// `input_radius_not_propagated`.
pub fn theta(
    sys: &IteratedSystem,
    alpha: &TotalWord,
    b: &CertifiedSet,
    eps: f64,
    opts: &IterateOptions,
) -> Result<AddressResult> {
    theta_inner(sys, alpha, b, eps, opts, false)
}

fn theta_inner(
    sys: &IteratedSystem,
    alpha: &TotalWord,
    b: &CertifiedSet,
    eps: f64,
    opts: &IterateOptions,
    single: bool,
) -> Result<AddressResult> {
    match alpha {
        TotalWord::Infinite(w) => {
            let mut out = address_of(sys, w, &b.core, eps, opts, single)?;
            if b.radius > 0.0 {
                out.flags.push("input_radius_not_propagated".into());
            }
            Ok(out)
        }
        TotalWord::Finite(w) => exact_image(sys, w, b, single),
    }
}

/// π(α, x) = a_α(x).
pub fn pi(
    sys: &IteratedSystem,
    alpha: &InfiniteWordSpec,
    x: &Point,
    eps: f64,
    opts: &IterateOptions,
) -> Result<AddressResult> {
    address_point(sys, alpha, x, eps, opts)
}

/// π^t(α, x): a_α(x), f_α(x) or x for infinite, finite and empty α.
pub fn pi_t(
    sys: &IteratedSystem,
    alpha: &TotalWord,
    x: &Point,
    eps: f64,
    opts: &IterateOptions,
) -> Result<AddressResult> {
    check_eps(eps)?;
    theta_inner(sys, alpha, &CertifiedSet::exact(PointSet::singleton(x)), eps, opts, true)
}

/// Ψ(α, B) = Θ(α, A_B), with A_B from [`iterate_certified`].
pub fn psi(
    sys: &IteratedSystem,
    alpha: &TotalWord,
    b: &PointSet,
    eps: f64,
    opts: &IterateOptions,
) -> Result<AddressResult> {
    let a = iterate_certified(sys, b, eps, opts)?;
    let mut out = theta(sys, alpha, &a.result, eps, opts)?;
    out.certified &= a.certified;
    out.flags.splice(0..0, a.flags);
    Ok(out)
}

/// Allowance for |f_i(π(α,x)) − π(iα,x)| coming from the radius r of π(α,x).
///
/// In a parent-child system f_i ∘ f_{[α]_n} = f_{[iα]_{n+1}}, so the computed
/// f_i(π(α,x)) is itself an approximation of a_{iα}(x) with radius at most
/// Σ_{k≥n+1} φ^k(D) ≤ r. In an orbital system f_i moves the error by φ(r).
pub fn equivariance_slack(sys: &IteratedSystem, r: f64) -> Result<f64> {
    match sys.mode() {
        Mode::Orbital => sys.phi().eval(r),
        _ => Ok(r),
    }
}

/// Bound on |π(α,x) − π(α,f_ω(x))| for results of depth n with radii r1, r2:
/// r1 + r2 + Σ_{k=n}^{n+|ω|−1} φ^k(D) plus 8 ulps of `magnitude`.
pub fn orbit_invariance_bound(
    sys: &IteratedSystem,
    d: f64,
    n: usize,
    word_len: usize,
    r1: f64,
    r2: f64,
    magnitude: f64,
) -> Result<f64> {
    let chain = crate::attractor::cauchy_bound(sys.phi(), d, n, n + word_len)?;
    Ok(r1 + r2 + chain + ulp_slack(magnitude, 8))
}

/// Every eventually periodic word with period ≤ 3 and preperiod ≤ 3 over the
/// first `n_letters` letters, capped at [`CLOSURE_WORD_CAP`].
pub fn closure_schedule(n_letters: u32) -> Vec<InfiniteWordSpec> {
    let mut words = enumerate_eventually_periodic(n_letters, 3, 3);
    words.truncate(CLOSURE_WORD_CAP);
    words
}

/// An element of Λ^t(I) × R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductPoint {
    pub word: TotalWord,
    pub point: Point,
}

/// d_max((α, x), (β, y)) = max(d_c(α, β), |x − y|).
pub fn d_max(a: &ProductPoint, b: &ProductPoint, c: f64) -> Result<f64> {
    Ok(dc_distance(&a.word, &b.word, c)?.max(a.point.dist(&b.point)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attractor::tests::cantor_oracle;
    use crate::metric_sets::{diam, directed_dist, hausdorff};
    use crate::system::testing::*;
    use proptest::prelude::*;

    fn w(s: &str) -> InfiniteWordSpec {
        match s.parse::<TotalWord>().unwrap() {
            TotalWord::Infinite(w) => w,
            _ => panic!("{s} is finite"),
        }
    }

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    const EPS: f64 = 1e-6;

    #[test]
    fn cantor_addresses() {
        let c = cantor();
        let o = IterateOptions::default();
        let a = address_point(&c, &w("(1)"), &pt(&[0.5]), EPS, &o).unwrap();
        assert!(a.point()[0].abs() <= EPS && a.radius <= EPS);
        assert!(a.certified && a.is_point());
        // D = 2 for x = 1/2, so 3·3^-n ≤ 1e-6 first at n = 14
        assert_eq!(a.depth, 14);
        assert!((a.diam_bound - 2.0).abs() < 1e-14);
        for x in [-0.5, 0.0, 0.7, 1.9] {
            let b = address_point(&c, &w("(2)"), &pt(&[x]), EPS, &o).unwrap();
            assert!((b.point()[0] - 1.0).abs() <= b.radius);
        }
        let t = address_point(&c, &w("1:(2)"), &pt(&[0.5]), EPS, &o).unwrap();
        assert!((t.point()[0] - 1.0 / 3.0).abs() <= t.radius);
        assert_eq!(pi(&c, &w("1:(2)"), &pt(&[0.5]), EPS, &o).unwrap(), t);
    }

    #[test]
    fn letters_beyond_the_family_are_rejected() {
        let c = cantor();
        let e = address_point(&c, &w("(3)"), &pt(&[0.5]), EPS, &IterateOptions::default()).unwrap_err();
        assert!(matches!(e, IfsError::Index { letter: 3, n: 2 }));
    }

    #[test]
    fn address_sets() {
        let c = cantor();
        let o = IterateOptions::default();
        let b = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        let r = address_set(&c, &w("(1)"), &b, EPS, &o).unwrap();
        let zero = PointSet::from_scalars(&[0.0]).unwrap();
        assert!(hausdorff(&r.value, &zero).unwrap() <= r.radius);
        // the value is exactly f_{[α]_n}(B)
        let direct = c.image_of_set(&w("(1)").prefix(r.depth), &b).unwrap();
        assert_eq!(hausdorff(&direct, &r.value).unwrap(), 0.0);
        let single = address_set(&c, &w("(1)"), &PointSet::from_scalars(&[0.5]).unwrap(), EPS, &o).unwrap();
        let point = address_point(&c, &w("(1)"), &pt(&[0.5]), EPS, &o).unwrap();
        assert_eq!(single.value, point.value);
        assert_eq!(single.radius, point.radius);
    }

    #[test]
    fn cylinders_scale_like_the_prefix() {
        let c = cantor();
        let o = IterateOptions::default();
        let base = cylinder_set(&c, &FiniteWord::empty(), &pt(&[0.0]), EPS, &o).unwrap();
        let a0 = iterate_certified(&c, &PointSet::from_scalars(&[0.0]).unwrap(), EPS, &o).unwrap();
        assert_eq!(base.value, a0.result.core);
        assert_eq!(base.radius, a0.result.radius);
        let one = cylinder_set(&c, &FiniteWord::new(vec![1]).unwrap(), &pt(&[0.0]), EPS, &o).unwrap();
        assert!(one.value.iter().all(|p| (0.0..=1.0 / 3.0).contains(&p[0])));
        let scaled: Vec<f64> = cantor_oracle(12).iter().map(|p| p[0] / 3.0).collect();
        let oracle = PointSet::from_scalars(&scaled).unwrap();
        assert!(hausdorff(&one.value, &oracle).unwrap() <= one.radius + 3f64.powi(-13));
        assert!(one.flags.iter().any(|f| f == flags::HEURISTIC_RADIUS));
        let d0 = diam(&a0.result.core);
        for n in 0..=8 {
            let cyl = cylinder_set(&c, &FiniteWord::repeat(1, n).unwrap(), &pt(&[0.0]), EPS, &o).unwrap();
            let expect = d0 * 3f64.powi(-(n as i32));
            assert!((diam(&cyl.value) - expect).abs() <= ulp_slack(expect.max(d0), 8));
        }
    }

    #[test]
    fn theta_and_pi_t_dispatch() {
        let c = cantor();
        let o = IterateOptions::default();
        let b = CertifiedSet::exact(PointSet::from_scalars(&[0.0, 1.0]).unwrap());
        let empty = theta(&c, &TotalWord::empty(), &b, EPS, &o).unwrap();
        assert_eq!((empty.value.clone(), empty.radius, empty.depth), (b.core.clone(), 0.0, 0));
        let one = theta(&c, &"1".parse().unwrap(), &b, EPS, &o).unwrap();
        assert_eq!(one.value, PointSet::from_scalars(&[0.0, 1.0 / 3.0]).unwrap());
        assert_eq!(one.radius, 0.0);
        let inf = theta(&c, &"(1)".parse().unwrap(), &b, EPS, &o).unwrap();
        assert_eq!(inf, address_set(&c, &w("(1)"), &b.core, EPS, &o).unwrap());

        let x = pt(&[0.0]);
        assert_eq!(pi_t(&c, &TotalWord::empty(), &x, EPS, &o).unwrap().point(), &[0.0]);
        let f = pi_t(&c, &"2.1".parse().unwrap(), &x, EPS, &o).unwrap();
        assert_eq!((f.point()[0], f.radius, f.depth), (2.0 / 3.0, 0.0, 2));
        let inf = pi_t(&c, &"(2)".parse().unwrap(), &x, EPS, &o).unwrap();
        assert_eq!(inf, address_point(&c, &w("(2)"), &x, EPS, &o).unwrap());
    }

    #[test]
    fn psi_cases() {
        let c = cantor();
        let o = IterateOptions::default();
        let b = PointSet::from_scalars(&[0.5]).unwrap();
        let a = iterate_certified(&c, &b, EPS, &o).unwrap();
        let empty = psi(&c, &TotalWord::empty(), &b, EPS, &o).unwrap();
        assert_eq!(empty.value, a.result.core);
        let one = psi(&c, &"1".parse().unwrap(), &b, EPS, &o).unwrap();
        let oracle = PointSet::from_scalars(&cantor_oracle(14).iter().map(|p| p[0] / 3.0).collect::<Vec<_>>()).unwrap();
        assert!(hausdorff(&one.value, &oracle).unwrap() <= one.radius + 3f64.powi(-15));
        let inf = psi(&c, &"(2)".parse().unwrap(), &b, EPS, &o).unwrap();
        let one_pt = PointSet::from_scalars(&[1.0]).unwrap();
        assert!(hausdorff(&inf.value, &one_pt).unwrap() <= inf.radius);
    }

    #[test]
    fn orbital_addresses_use_the_rate() {
        let s = two_component(Mode::Orbital);
        let o = IterateOptions {
            orbit_diam_bound: Some(1.0),
            ..Default::default()
        };
        let a = address_point(&s, &w("(1)"), &pt(&[1.0]), EPS, &o).unwrap();
        // φ^n(1) = 2^-n ≤ 1e-6 first at n = 20
        assert_eq!(a.depth, 20);
        assert!(a.radius <= 2f64.powi(-20) * (1.0 + 1e-12));
        assert!(a.certified);
        let probed = address_point(&s, &w("(1)"), &pt(&[2.5]), EPS, &IterateOptions::default()).unwrap();
        assert!(!probed.certified);
        assert!(probed.flags.iter().any(|f| f == flags::EMPIRICALLY_BOUNDED));
        assert!((probed.point()[0] - 2.0).abs() <= probed.radius);
    }

    #[test]
    fn closure_on_cantor() {
        let c = cantor();
        let o = IterateOptions::default();
        let x = pt(&[0.5]);
        let a = iterate_certified(&c, &PointSet::singleton(&x), EPS, &o).unwrap();
        let words = closure_schedule(2);
        let distinct: std::collections::HashSet<_> = words.iter().collect();
        assert_eq!(distinct.len(), words.len());
        // every cylinder of depth 3 is hit
        for k in 0..8u32 {
            let cyl: Vec<u32> = (0..3).map(|b| 1 + (k >> b & 1)).collect();
            assert!(words.iter().any(|w| w.prefix(3).letters() == cyl.as_slice()));
        }
        let results = address_batch(&c, &words, &x, EPS, &o).unwrap();
        let cloud: Vec<f64> = results.iter().map(|r| r.point()[0]).collect();
        let cloud = PointSet::from_scalars(&cloud).unwrap();
        let r_max = results.iter().map(|r| r.radius).fold(0.0, f64::max);
        assert!(directed_dist(&cloud, &a.result.core).unwrap() <= r_max + a.result.radius);
    }

    #[test]
    fn d_max_combines_both_parts() {
        let p = ProductPoint { word: "(1)".parse().unwrap(), point: pt(&[0.0]) };
        let q = ProductPoint { word: "(2)".parse().unwrap(), point: pt(&[0.25]) };
        assert_eq!(d_max(&p, &q, 0.5).unwrap(), 1.0);
        let r = ProductPoint { word: "(1)".parse().unwrap(), point: pt(&[3.0]) };
        assert_eq!(d_max(&p, &r, 0.5).unwrap(), 3.0);
    }

    #[test]
    fn json_shape() {
        let c = cantor();
        let a = pi_t(&c, &"2.1".parse().unwrap(), &pt(&[0.0]), EPS, &IterateOptions::default()).unwrap();
        let j = serde_json::to_string(&a).unwrap();
        assert_eq!(
            j,
            r#"{"value":[0.66666666666666663],"radius":0,"depth":2,"mode":"pc","certified":true,"flags":[],"diam_bound":0}"#
        );
    }

    fn arb_word(n: u32) -> impl Strategy<Value = InfiniteWordSpec> {
        (prop::collection::vec(1..=n, 0..4), prop::collection::vec(1..=n, 1..4))
            .prop_map(|(p, q)| InfiniteWordSpec::new(p, q).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shift_equivariance_cantor(i in 1u32..=2, alpha in arb_word(2), x in -1.0f64..2.0) {
            let c = cantor();
            let o = IterateOptions::default();
            let x = pt(&[x]);
            let a = pi(&c, &alpha, &x, EPS, &o).unwrap();
            let shifted = match crate::shift_space::shift_map(i, &alpha.clone().into()).unwrap() {
                TotalWord::Infinite(w) => w,
                _ => unreachable!(),
            };
            let b = pi(&c, &shifted, &x, EPS, &o).unwrap();
            let fi = c.apply_map(i, a.point()).unwrap();
            let gap = fi.dist(&Point::new(b.point().to_vec()).unwrap()).unwrap();
            let bound = equivariance_slack(&c, a.radius).unwrap() + b.radius + ulp_slack(2.0, 8);
            prop_assert!(gap <= bound, "{gap} > {bound}");
        }

        #[test]
        fn orbit_invariance_sierpinski(alpha in arb_word(3), om in prop::collection::vec(1u32..=3, 0..5),
                                      x in -0.5f64..1.5, y in -0.5f64..1.5) {
            let s = sierpinski();
            let o = IterateOptions::default();
            let x = pt(&[x, y]);
            let omega = FiniteWord::new(om).unwrap();
            let fx = s.apply_word(&omega, &x).unwrap();
            let a = pi(&s, &alpha, &x, EPS, &o).unwrap();
            let b = pi(&s, &alpha, &fx, EPS, &o).unwrap();
            let gap = sq_dist(a.point(), b.point()).sqrt();
            let d = a.diam_bound.max(b.diam_bound);
            let bound = orbit_invariance_bound(&s, d, a.depth.min(b.depth), omega.len(), a.radius, b.radius, 2.0).unwrap();
            prop_assert!(gap <= bound, "{gap} > {bound}");
        }

        #[test]
        fn nested_limit(alpha in arb_word(2), n in 0usize..6) {
            let c = cantor();
            let o = IterateOptions::default();
            let x = pt(&[0.0]);
            let a = pi(&c, &alpha, &x, EPS, &o).unwrap();
            let cyl = cylinder_set(&c, &alpha.prefix(n), &x, 1e-4, &o).unwrap();
            let shrink = 2.0 * c.phi().tail_upper_bound(a.diam_bound, n).unwrap();
            prop_assert!(diam(&cyl.value) <= shrink);
            let a_pt = PointSet::new(1, a.point().to_vec()).unwrap();
            prop_assert!(directed_dist(&cyl.value, &a_pt).unwrap() <= shrink + a.radius + cyl.radius);
        }
    }
}
