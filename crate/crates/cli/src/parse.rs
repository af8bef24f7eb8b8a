//! Command-line value parsing.

use num_bigint::BigInt;
use num_rational::BigRational;

use ifs_core::{Point, PointSet};

use crate::CliError;

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

/// "0.5" or "0.5,-1" as a point of dimension `dim`.
pub fn point(s: &str, dim: usize) -> Result<Point, CliError> {
    let coords = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad coordinate {:?} in {s:?}", t.trim())))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if coords.len() != dim {
        return Err(usage(format!("point {s:?} has {} coordinates, expected {dim}", coords.len())));
    }
    Point::new(coords).map_err(|e| usage(e.to_string()))
}

/// Points separated by ';'.
pub fn points(s: &str, dim: usize) -> Result<Vec<Point>, CliError> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| point(t, dim))
        .collect()
}

/// "box-corners" or "x=<point>[;<point>...]".
pub fn start_set(s: &str, dim: usize, corners: impl FnOnce() -> PointSet) -> Result<PointSet, CliError> {
    if s == "box-corners" {
        return Ok(corners());
    }
    let body = s
        .strip_prefix("x=")
        .ok_or_else(|| usage(format!("start must be \"box-corners\" or \"x=...\", got {s:?}")))?;
    let pts = points(body, dim)?;
    if pts.is_empty() {
        return Err(usage("start set is empty"));
    }
    PointSet::from_points(&pts).map_err(|e| usage(e.to_string()))
}

/// "p/q", an integer, or a plain decimal such as "0.25", exactly.
pub fn rational(s: &str) -> Result<BigRational, CliError> {
    let bad = || usage(format!("expected a fraction p/q or a decimal, got {s:?}"));
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q == BigInt::from(0) {
            return Err(usage("zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars())).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = BigInt::from(10).pow(frac.len() as u32);
    let r = BigRational::new(digits, scale);
    Ok(if neg { -r } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        let r = |s: &str| rational(s).unwrap().to_string();
        assert_eq!(r("1/2"), "1/2");
        assert_eq!(r("0.5"), "1/2");
        assert_eq!(r(".25"), "1/4");
        assert_eq!(r("3"), "3");
        assert_eq!(r("-0.1"), "-1/10");
        assert!(rational("1e-3").is_err());
        assert!(rational("1/0").is_err());
        assert!(rational(".").is_err());
    }

    #[test]
    fn point_lists() {
        assert_eq!(points("0,1; 2,3", 2).unwrap().len(), 2);
        assert!(point("0,1", 1).is_err());
        assert!(start_set("0.5", 1, || unreachable!()).is_err());
        assert_eq!(start_set("x=0.5;1", 1, || unreachable!()).unwrap().len(), 2);
    }
}
