//! Words over the index set: finite words, eventually periodic infinite words,
//! their union, and the code-space metric d_c.
//!
//! Letters are 1-based map indices. The padding symbol τ used to embed finite
//! words into infinite ones is the reserved letter [`TAU`] = 0, so a finite word
//! w is identified with w·τττ…, and the empty word with τττ….
//!
//! d_c(α, β) = Σ_{n≥1} c^n [α_n ≠ β_n]: the indicator counts positions where
//! the embedded words differ, so d_c(α, α) = 0.
//!
//! Text syntax: `1.2.3` (finite), `1.2:(3.1)` (preperiod 1.2, period 3.1),
//! `(1)` (purely periodic), `@` (empty word).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Num;
use rand::Rng;

use crate::error::{IfsError, Result};

/// Reserved padding letter τ.
pub const TAU: u32 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FiniteWord(Vec<u32>);

/// Eventually periodic word `preperiod · period · period · …`, kept in normal
/// form: the period is primitive and the preperiod is as short as possible.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InfiniteWordSpec {
    preperiod: Vec<u32>,
    period: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TotalWord {
    Finite(FiniteWord),
    Infinite(InfiniteWordSpec),
}

fn check_letters(letters: &[u32]) -> Result<()> {
    if letters.contains(&TAU) {
        return Err(IfsError::Domain("letter 0 is reserved for padding; letters start at 1".into()));
    }
    Ok(())
}

impl FiniteWord {
    pub fn new(letters: Vec<u32>) -> Result<FiniteWord> {
        check_letters(&letters)?;
        Ok(FiniteWord(letters))
    }

    /// The empty word λ.
    pub fn empty() -> FiniteWord {
        FiniteWord(Vec::new())
    }

    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &FiniteWord) -> FiniteWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        FiniteWord(v)
    }

    /// `letter` repeated `n` times.
    pub fn repeat(letter: u32, n: usize) -> Result<FiniteWord> {
        FiniteWord::new(vec![letter; n])
    }

    /// Largest letter, 0 for λ.
    pub fn max_letter(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

/// Smallest p dividing |w| with w = (w[..p])^(|w|/p).
fn primitive_root(w: &[u32]) -> &[u32] {
    let n = w.len();
    for p in 1..=n {
        if n.is_multiple_of(p) && (p..n).all(|k| w[k] == w[k - p]) {
            return &w[..p];
        }
    }
    w
}

impl InfiniteWordSpec {
    pub fn new(preperiod: Vec<u32>, period: Vec<u32>) -> Result<InfiniteWordSpec> {
        if period.is_empty() {
            return Err(IfsError::Domain("the period of an infinite word must be non-empty".into()));
        }
        check_letters(&preperiod)?;
        check_letters(&period)?;
        let mut pre = preperiod;
        let mut per = primitive_root(&period).to_vec();
        while let (Some(&a), Some(&b)) = (pre.last(), per.last()) {
            if a != b {
                break;
            }
            pre.pop();
            per.rotate_right(1);
        }
        Ok(InfiniteWordSpec {
            preperiod: pre,
            period: per,
        })
    }

    /// The constant word `iii…`.
    pub fn constant(letter: u32) -> Result<InfiniteWordSpec> {
        InfiniteWordSpec::new(Vec::new(), vec![letter])
    }

    pub fn preperiod(&self) -> &[u32] {
        &self.preperiod
    }

    pub fn period(&self) -> &[u32] {
        &self.period
    }

    /// Letter at 0-based position `k`.
    pub fn letter(&self, k: usize) -> u32 {
        let m = self.preperiod.len();
        if k < m {
            self.preperiod[k]
        } else {
            self.period[(k - m) % self.period.len()]
        }
    }

    pub fn prefix(&self, n: usize) -> FiniteWord {
        FiniteWord((0..n).map(|k| self.letter(k)).collect())
    }

    pub fn max_letter(&self) -> u32 {
        self.preperiod.iter().chain(&self.period).copied().max().unwrap_or(0)
    }

    /// Drops the first letter.
    pub fn tail(&self) -> InfiniteWordSpec {
        if self.preperiod.is_empty() {
            let mut per = self.period.clone();
            per.rotate_left(1);
            InfiniteWordSpec {
                preperiod: Vec::new(),
                period: per,
            }
        } else {
            InfiniteWordSpec {
                preperiod: self.preperiod[1..].to_vec(),
                period: self.period.clone(),
            }
        }
    }
}

impl TotalWord {
    pub fn empty() -> TotalWord {
        TotalWord::Finite(FiniteWord::empty())
    }

    pub fn finite(letters: Vec<u32>) -> Result<TotalWord> {
        Ok(TotalWord::Finite(FiniteWord::new(letters)?))
    }

    pub fn infinite(preperiod: Vec<u32>, period: Vec<u32>) -> Result<TotalWord> {
        Ok(TotalWord::Infinite(InfiniteWordSpec::new(preperiod, period)?))
    }

    /// Letter at 0-based position `k` of the padded embedding; τ past the end
    /// of a finite word.
    pub fn embedded_letter(&self, k: usize) -> u32 {
        match self {
            TotalWord::Finite(w) => w.0.get(k).copied().unwrap_or(TAU),
            TotalWord::Infinite(s) => s.letter(k),
        }
    }

    /// The embedding as (preperiod, period) over letters ∪ {τ}.
    fn embedded(&self) -> (&[u32], &[u32]) {
        match self {
            TotalWord::Finite(w) => (&w.0, &[TAU]),
            TotalWord::Infinite(s) => (&s.preperiod, &s.period),
        }
    }

    pub fn max_letter(&self) -> u32 {
        match self {
            TotalWord::Finite(w) => w.max_letter(),
            TotalWord::Infinite(s) => s.max_letter(),
        }
    }
}

impl From<FiniteWord> for TotalWord {
    fn from(w: FiniteWord) -> TotalWord {
        TotalWord::Finite(w)
    }
}

impl From<InfiniteWordSpec> for TotalWord {
    fn from(s: InfiniteWordSpec) -> TotalWord {
        TotalWord::Infinite(s)
    }
}

/// [w]_n: the first n letters, or all of w when it is shorter.
pub fn prefix(w: &TotalWord, n: usize) -> FiniteWord {
    match w {
        TotalWord::Finite(f) => FiniteWord(f.0[..n.min(f.len())].to_vec()),
        TotalWord::Infinite(s) => s.prefix(n),
    }
}

/// αβ.
pub fn concat(a: &FiniteWord, b: &TotalWord) -> TotalWord {
    match b {
        TotalWord::Finite(f) => TotalWord::Finite(a.concat(f)),
        TotalWord::Infinite(s) => {
            let mut pre = a.0.clone();
            pre.extend_from_slice(&s.preperiod);
            TotalWord::Infinite(
                InfiniteWordSpec::new(pre, s.period.clone()).expect("letters already checked"),
            )
        }
    }
}

/// F_i(α) = iα.
pub fn shift_map(i: u32, w: &TotalWord) -> Result<TotalWord> {
    Ok(concat(&FiniteWord::new(vec![i])?, w))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// d_c over any numeric type: finite part up to the longer preperiod plus one
/// joint period of length L = lcm of the period lengths summed as a geometric
/// series with ratio c^L.
fn dc_generic<T: Num + Clone>(a: &TotalWord, b: &TotalWord, c: &T) -> T {
    let (pa, qa) = a.embedded();
    let (pb, qb) = b.embedded();
    let head = pa.len().max(pb.len());
    let joint = qa.len() / gcd(qa.len(), qb.len()) * qb.len();
    let mut weight = T::one();
    let mut finite_part = T::zero();
    for k in 0..head {
        weight = weight * c.clone();
        if a.embedded_letter(k) != b.embedded_letter(k) {
            finite_part = finite_part + weight.clone();
        }
    }
    let mut period_part = T::zero();
    let mut c_pow_l = T::one();
    for k in head..head + joint {
        weight = weight * c.clone();
        c_pow_l = c_pow_l * c.clone();
        if a.embedded_letter(k) != b.embedded_letter(k) {
            period_part = period_part + weight.clone();
        }
    }
    if period_part.is_zero() {
        return finite_part;
    }
    finite_part + period_part / (T::one() - c_pow_l)
}

/// d_c in floating point.
pub fn dc_distance(a: &TotalWord, b: &TotalWord, c: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&c) {
        return Err(IfsError::Domain(format!("d_c needs c in [0,1), got {c}")));
    }
    Ok(dc_generic(a, b, &c))
}

/// d_c in exact rational arithmetic.
pub fn dc_distance_exact(a: &TotalWord, b: &TotalWord, c: &BigRational) -> Result<BigRational> {
    let zero = BigRational::from_integer(BigInt::from(0));
    let one = BigRational::from_integer(BigInt::from(1));
    if *c < zero || *c >= one {
        return Err(IfsError::Domain(format!("d_c needs c in [0,1), got {c}")));
    }
    Ok(dc_generic(a, b, c))
}

/// True iff the padded embeddings agree at positions 1..=n.
pub fn word_eq_to_depth(a: &TotalWord, b: &TotalWord, n: usize) -> bool {
    let (pa, qa) = a.embedded();
    let (pb, qb) = b.embedded();
    // past this many positions both words have cycled through a joint period
    let horizon = pa.len().max(pb.len()) + qa.len() / gcd(qa.len(), qb.len()) * qb.len();
    (0..n.min(horizon)).all(|k| a.embedded_letter(k) == b.embedded_letter(k))
}

fn parse_letters(text: &str, offset: usize) -> Result<Vec<u32>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut col = offset;
    for part in text.split('.') {
        let v: u32 = part.parse().map_err(|_| IfsError::Parse {
            column: col + 1,
            message: format!("expected a letter, found {part:?}"),
        })?;
        if v == TAU {
            return Err(IfsError::Parse {
                column: col + 1,
                message: "letters start at 1".into(),
            });
        }
        out.push(v);
        col += part.len() + 1;
    }
    Ok(out)
}

impl FromStr for TotalWord {
    type Err = IfsError;

    fn from_str(s: &str) -> Result<TotalWord> {
        let lead = s.len() - s.trim_start().len();
        let t = s.trim();
        if t == "@" {
            return Ok(TotalWord::empty());
        }
        if t.is_empty() {
            return Err(IfsError::Parse {
                column: 1,
                message: "empty input; write @ for the empty word".into(),
            });
        }
        let Some(open) = t.find('(') else {
            return Ok(TotalWord::Finite(FiniteWord(parse_letters(t, lead)?)));
        };
        if !t.ends_with(')') {
            return Err(IfsError::Parse {
                column: lead + t.len(),
                message: "a period must end with ')'".into(),
            });
        }
        let pre_text = &t[..open];
        let pre = if pre_text.is_empty() {
            Vec::new()
        } else {
            let Some(body) = pre_text.strip_suffix(':') else {
                return Err(IfsError::Parse {
                    column: lead + open + 1,
                    message: "expected ':' between preperiod and period".into(),
                });
            };
            parse_letters(body, lead)?
        };
        let period_text = &t[open + 1..t.len() - 1];
        if period_text.is_empty() {
            return Err(IfsError::Parse {
                column: lead + open + 2,
                message: "the period must be non-empty".into(),
            });
        }
        let per = parse_letters(period_text, lead + open + 1)?;
        TotalWord::infinite(pre, per)
    }
}

fn join(letters: &[u32]) -> String {
    letters.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
}

impl fmt::Display for FiniteWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("@")
        } else {
            f.write_str(&join(&self.0))
        }
    }
}

impl fmt::Display for InfiniteWordSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.preperiod.is_empty() {
            write!(f, "({})", join(&self.period))
        } else {
            write!(f, "{}:({})", join(&self.preperiod), join(&self.period))
        }
    }
}

impl fmt::Display for TotalWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TotalWord::Finite(w) => w.fmt(f),
            TotalWord::Infinite(s) => s.fmt(f),
        }
    }
}

/// Every (preperiod, period) over letters 1..=n with |period| in 1..=max_period
/// and |preperiod| in 0..=max_prefix, in lexicographic order of the raw pair.
/// Different raw pairs may normalise to the same word; duplicates are dropped.
pub fn enumerate_eventually_periodic(n: u32, max_period: usize, max_prefix: usize) -> Vec<InfiniteWordSpec> {
    let words_up_to = |max_len: usize, min_len: usize| {
        let mut out: Vec<Vec<u32>> = Vec::new();
        let mut layer: Vec<Vec<u32>> = vec![Vec::new()];
        for len in 0..=max_len {
            if len >= min_len {
                out.extend(layer.iter().cloned());
            }
            layer = layer
                .iter()
                .flat_map(|w| {
                    (1..=n).map(move |i| {
                        let mut v = w.clone();
                        v.push(i);
                        v
                    })
                })
                .collect();
        }
        out
    };
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for per in words_up_to(max_period, 1) {
        for pre in words_up_to(max_prefix, 0) {
            let w = InfiniteWordSpec::new(pre, per.clone()).expect("letters start at 1");
            if seen.insert(w.clone()) {
                out.push(w);
            }
        }
    }
    out
}

/// Uniform random eventually periodic word over 1..=n.
pub fn random_eventually_periodic<R: Rng>(rng: &mut R, n: u32, max_prefix: usize, max_period: usize) -> InfiniteWordSpec {
    let pre_len = rng.random_range(0..=max_prefix);
    let per_len = rng.random_range(1..=max_period);
    let pre = (0..pre_len).map(|_| rng.random_range(1..=n)).collect();
    let per = (0..per_len).map(|_| rng.random_range(1..=n)).collect();
    InfiniteWordSpec::new(pre, per).expect("letters start at 1")
}

/// Random finite (possibly empty) or eventually periodic word over 1..=n.
pub fn random_total_word<R: Rng>(rng: &mut R, n: u32, max_len: usize) -> TotalWord {
    if rng.random_bool(0.5) {
        let len = rng.random_range(0..=max_len);
        TotalWord::Finite(FiniteWord((0..len).map(|_| rng.random_range(1..=n)).collect()))
    } else {
        TotalWord::Infinite(random_eventually_periodic(rng, n, max_len, max_len.max(1)))
    }
}
