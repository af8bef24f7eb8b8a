//! Comparison functions φ: increasing, φ(r) < r for r > 0, and their iterates.
//!
//! Every certified radius in the crate is a value of [`ComparisonFn::iterate`]
//! or [`ComparisonFn::tail_upper_bound`]. Summability is never inferred:
//! linear and power-affine kinds carry an intrinsic geometric envelope, custom
//! expressions need an explicit [`TailCertificate`].

use serde::Serialize;

use crate::error::{IfsError, Result};
use crate::expr::{Env, Expr, Var};
use crate::num::{round_up, ser_g17};

/// Iteration cap when a geometric envelope is waiting for φ^k(r) to drop
/// below its threshold.
const ENVELOPE_MAX_STEPS: usize = 1_000_000;

/// Relative tolerance of the right-continuity spot check.
pub const RIGHT_CONTINUITY_TOL: f64 = 1e-9;

/// Dyadic schedule exponents for right-limit sampling: δ = 2^-k·max(1, r).
const RIGHT_LIMIT_SCHEDULE: std::ops::RangeInclusive<i32> = 20..=40;

#[derive(Debug, Clone, PartialEq)]
pub enum PhiKind {
    /// φ(r) = c·r.
    Linear { c: f64 },
    /// φ(r) = c·r0·(r/r0)^p for r ≤ r0 and c·r beyond.
    PowerAffine { c: f64, p: f64, r0: f64 },
    /// φ given by an expression in `r`.
    Custom { source: String, expr: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TailCertificate {
    /// User formula in `r` and `n` bounding Σ_{k≥n} φ^k(r).
    ClosedForm { source: String, expr: Expr },
    /// φ(s) ≤ q·s for every s ≤ r0; φ^{n0}(r) ≤ r0 over the working range.
    GeometricEnvelope { q: f64, r0: f64, n0: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClassFlags {
    pub is_summable: bool,
    pub is_right_continuous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonFn {
    kind: PhiKind,
    certificate: Option<TailCertificate>,
    flags: ClassFlags,
}

fn check_arg(r: f64) -> Result<()> {
    if !r.is_finite() || r < 0.0 {
        return Err(IfsError::Domain(format!(
            "comparison function argument must be finite and nonnegative, got {r}"
        )));
    }
    Ok(())
}

impl ComparisonFn {
    pub fn linear(c: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&c) {
            return Err(IfsError::Domain(format!("linear ratio must lie in [0,1), got {c}")));
        }
        Ok(ComparisonFn {
            kind: PhiKind::Linear { c },
            certificate: None,
            flags: ClassFlags {
                is_summable: true,
                is_right_continuous: true,
            },
        })
    }

    pub fn power_affine(c: f64, p: f64, r0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&c) || !(p >= 1.0) || !(r0 > 0.0) || !r0.is_finite() || !p.is_finite()
        {
            return Err(IfsError::Domain(format!(
                "power-affine needs c in [0,1), p >= 1, r0 > 0; got c={c}, p={p}, r0={r0}"
            )));
        }
        Ok(ComparisonFn {
            kind: PhiKind::PowerAffine { c, p, r0 },
            certificate: None,
            flags: ClassFlags {
                is_summable: true,
                is_right_continuous: true,
            },
        })
    }

    /// A φ given by an expression in `r`. A summable custom φ must come with
    /// a tail certificate; φ(0) must evaluate to exactly 0.
    pub fn custom(
        source: &str,
        certificate: Option<TailCertificate>,
        flags: ClassFlags,
    ) -> Result<Self> {
        let expr = Expr::parse(source)?;
        expr.check_vars(|v| v == Var::R)?;
        if flags.is_summable && certificate.is_none() {
            return Err(IfsError::TailNotCertifiable(
                "a summable custom comparison function needs a tail certificate".into(),
            ));
        }
        if let Some(cert) = &certificate {
            cert.validate()?;
        }
        let phi = ComparisonFn {
            kind: PhiKind::Custom {
                source: source.to_string(),
                expr,
            },
            certificate,
            flags,
        };
        let at_zero = phi.eval(0.0)?;
        if at_zero != 0.0 {
            return Err(IfsError::Domain(format!(
                "comparison function must vanish at 0, got φ(0) = {at_zero}"
            )));
        }
        Ok(phi)
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    pub fn certificate(&self) -> Option<&TailCertificate> {
        self.certificate.as_ref()
    }

    pub fn flags(&self) -> ClassFlags {
        self.flags
    }

    pub fn is_summable(&self) -> bool {
        self.flags.is_summable
    }

    pub fn is_right_continuous(&self) -> bool {
        self.flags.is_right_continuous
    }

    /// Whether [`tail_upper_bound`](Self::tail_upper_bound) can succeed.
    pub fn has_tail_certificate(&self) -> bool {
        !matches!(self.kind, PhiKind::Custom { .. }) || self.certificate.is_some()
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        check_arg(r)?;
        match &self.kind {
            PhiKind::Linear { c } => Ok(c * r),
            PhiKind::PowerAffine { c, p, r0 } => {
                if r <= *r0 {
                    Ok(c * r0 * (r / r0).powf(*p))
                } else {
                    Ok(c * r)
                }
            }
            PhiKind::Custom { expr, .. } => {
                let v = expr.eval(&Env {
                    r,
                    ..Env::default()
                })?;
                if !v.is_finite() || v < 0.0 {
                    return Err(IfsError::Domain(format!(
                        "comparison function produced {v} at r = {r}"
                    )));
                }
                Ok(v)
            }
        }
    }

    /// φ^n(r), with φ^0 the identity.
    pub fn iterate(&self, r: f64, n: usize) -> Result<f64> {
        check_arg(r)?;
        let mut v = r;
        for _ in 0..n {
            if v == 0.0 {
                break;
            }
            v = self.eval(v)?;
        }
        Ok(v)
    }

    /// Upper bound U ≥ Σ_{k≥n} φ^k(r). Exact partial sums are taken until the
    /// certificate's geometric envelope applies; the result is rounded upward.
    pub fn tail_upper_bound(&self, r: f64, n: usize) -> Result<f64> {
        check_arg(r)?;
        if r == 0.0 {
            return Ok(0.0);
        }
        match (&self.kind, &self.certificate) {
            (PhiKind::Linear { c }, _) | (PhiKind::PowerAffine { c, .. }, _) => {
                let head = self.iterate(r, n)?;
                Ok(round_up(head / (1.0 - c), n + 2))
            }
            (PhiKind::Custom { .. }, None) => Err(IfsError::TailNotCertifiable(
                "custom comparison function has no tail certificate".into(),
            )),
            (PhiKind::Custom { .. }, Some(TailCertificate::GeometricEnvelope { q, r0, n0 })) => {
                let mut v = self.iterate(r, n)?;
                let mut partial = 0.0;
                let mut steps = 0usize;
                let cap = n0.saturating_add(ENVELOPE_MAX_STEPS);
                while v > *r0 {
                    if steps >= cap {
                        return Err(IfsError::TailNotCertifiable(format!(
                            "φ^k({r}) did not drop below the envelope threshold {r0} within {cap} steps"
                        )));
                    }
                    partial += v;
                    v = self.eval(v)?;
                    steps += 1;
                }
                Ok(round_up(partial + v / (1.0 - q), steps + 3))
            }
            (PhiKind::Custom { .. }, Some(TailCertificate::ClosedForm { expr, .. })) => {
                let u = expr.eval(&Env {
                    r,
                    n: n as f64,
                    ..Env::default()
                })?;
                if !u.is_finite() || u < 0.0 {
                    return Err(IfsError::TailNotCertifiable(format!(
                        "closed-form tail evaluated to {u} at r = {r}, n = {n}"
                    )));
                }
                let head = self.iterate(r, n)?;
                if u < head {
                    return Err(IfsError::TailNotCertifiable(format!(
                        "closed-form tail {u} is below its own leading term φ^{n}({r}) = {head}"
                    )));
                }
                Ok(u)
            }
        }
    }

    /// Samples the comparison-function axioms on an ascending grid.
    pub fn spot_verify(&self, grid: &[f64]) -> Result<PhiReport> {
        if grid.is_empty() {
            return Err(IfsError::Domain("spot_verify needs a non-empty grid".into()));
        }
        if grid.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(IfsError::Domain("spot_verify grid must be sorted ascending".into()));
        }
        for &r in grid {
            check_arg(r)?;
        }
        let mut violations = Vec::new();
        let values: Vec<Option<f64>> = grid
            .iter()
            .map(|&r| match self.eval(r) {
                Ok(v) => Some(v),
                Err(e) => {
                    violations.push(PhiViolation::EvalFailed {
                        r,
                        message: e.to_string(),
                    });
                    None
                }
            })
            .collect();
        for (&r, v) in grid.iter().zip(&values) {
            if let Some(phi_r) = *v {
                if r > 0.0 && !(phi_r < r) {
                    violations.push(PhiViolation::NotBelowIdentity { r, phi_r });
                }
            }
        }
        for k in 1..grid.len() {
            if let (Some(a), Some(b)) = (values[k - 1], values[k]) {
                if a > b {
                    violations.push(PhiViolation::NotMonotone {
                        r: grid[k - 1],
                        s: grid[k],
                        phi_r: a,
                        phi_s: b,
                    });
                }
            }
        }
        if self.flags.is_right_continuous {
            for (&r, v) in grid.iter().zip(&values) {
                let Some(phi_r) = *v else { continue };
                let scale = r.max(1.0);
                let mut last = None;
                for k in RIGHT_LIMIT_SCHEDULE {
                    let delta = scale * 2f64.powi(-k);
                    if let Ok(s) = self.eval(r + delta) {
                        last = Some(s);
                    }
                }
                if let Some(right) = last {
                    if (right - phi_r).abs() > RIGHT_CONTINUITY_TOL * phi_r.max(1.0) {
                        violations.push(PhiViolation::RightDiscontinuous {
                            r,
                            phi_r,
                            right_limit: right,
                        });
                    }
                }
            }
        }
        if self.flags.is_summable {
            for &r in grid {
                let mut previous = f64::INFINITY;
                for n in [0usize, 1, 2, 5, 10] {
                    let bound = match self.tail_upper_bound(r, n) {
                        Ok(b) => b,
                        Err(e) => {
                            violations.push(PhiViolation::EvalFailed {
                                r,
                                message: e.to_string(),
                            });
                            break;
                        }
                    };
                    let partial = self.partial_sum(r, n, 200)?;
                    if partial > bound {
                        violations.push(PhiViolation::TailBelowPartialSum { r, n, bound, partial });
                    }
                    if bound > previous {
                        violations.push(PhiViolation::TailIncreasing { r, n, bound, previous });
                    }
                    previous = bound;
                }
            }
        }
        Ok(PhiReport { violations })
    }

    /// Σ_{k=n}^{n+terms-1} φ^k(r), summed in floating point.
    pub fn partial_sum(&self, r: f64, n: usize, terms: usize) -> Result<f64> {
        let mut v = self.iterate(r, n)?;
        let mut sum = 0.0;
        for _ in 0..terms {
            if v == 0.0 {
                break;
            }
            sum += v;
            v = self.eval(v)?;
        }
        Ok(sum)
    }
}

impl TailCertificate {
    pub fn closed_form(source: &str) -> Result<Self> {
        let expr = Expr::parse(source)?;
        expr.check_vars(|v| matches!(v, Var::R | Var::N))?;
        Ok(TailCertificate::ClosedForm {
            source: source.to_string(),
            expr,
        })
    }

    fn validate(&self) -> Result<()> {
        if let TailCertificate::GeometricEnvelope { q, r0, .. } = self {
            if !(*q > 0.0 && *q < 1.0) || !(*r0 > 0.0) {
                return Err(IfsError::Domain(format!(
                    "geometric envelope needs q in (0,1) and r0 > 0, got q={q}, r0={r0}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhiViolation {
    NotBelowIdentity {
        #[serde(serialize_with = "ser_g17")]
        r: f64,
        #[serde(serialize_with = "ser_g17")]
        phi_r: f64,
    },
    NotMonotone {
        #[serde(serialize_with = "ser_g17")]
        r: f64,
        #[serde(serialize_with = "ser_g17")]
        s: f64,
        #[serde(serialize_with = "ser_g17")]
        phi_r: f64,
        #[serde(serialize_with = "ser_g17")]
        phi_s: f64,
    },
    RightDiscontinuous {
        #[serde(serialize_with = "ser_g17")]
        r: f64,
        #[serde(serialize_with = "ser_g17")]
        phi_r: f64,
        #[serde(serialize_with = "ser_g17")]
        right_limit: f64,
    },
    TailBelowPartialSum {
        #[serde(serialize_with = "ser_g17")]
        r: f64,
        n: usize,
        #[serde(serialize_with = "ser_g17")]
        bound: f64,
        #[serde(serialize_with = "ser_g17")]
        partial: f64,
    },
    TailIncreasing {
        #[serde(serialize_with = "ser_g17")]
        r: f64,
        n: usize,
        #[serde(serialize_with = "ser_g17")]
        bound: f64,
        #[serde(serialize_with = "ser_g17")]
        previous: f64,
    },
    EvalFailed {
        #[serde(serialize_with = "ser_g17")]
        r: f64,
        message: String,
    },
}

impl std::fmt::Display for PhiViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PhiViolation::NotBelowIdentity { r, phi_r } => {
                write!(f, "φ(r) < r fails at r = {r} (φ(r) = {phi_r})")
            }
            PhiViolation::NotMonotone { r, s, .. } => write!(f, "φ not increasing on [{r}, {s}]"),
            PhiViolation::RightDiscontinuous { r, .. } => write!(f, "φ not right continuous at {r}"),
            PhiViolation::TailBelowPartialSum { r, n, .. } => {
                write!(f, "tail bound below partial sum at r = {r}, n = {n}")
            }
            PhiViolation::TailIncreasing { r, n, .. } => {
                write!(f, "tail bound increases at r = {r}, n = {n}")
            }
            PhiViolation::EvalFailed { r, message } => write!(f, "evaluation failed at {r}: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiReport {
    pub violations: Vec<PhiViolation>,
}

impl PhiReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}
