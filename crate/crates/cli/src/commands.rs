//! Subcommand implementations. Each returns the JSON report and exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use ifs_core::address::pi_t;
use ifs_core::attractor::{iterate_certified, picard_probe};
use ifs_core::checks::{check_family_regularity, check_orbital, check_orbital_iterated, check_parent_child};
use ifs_core::comparison::PhiViolation;
use ifs_core::metric_sets::write_csv;
use ifs_core::num::{fmt_g17, ser_g17};
use ifs_core::shift_space::dc_distance_exact;
use ifs_core::{IterateOptions, IteratedSystem, Mode, SystemConfig, TotalWord};

use crate::{parse, raster, AddressArgs, AttractorArgs, CheckArgs, CliError, Condition, DcArgs, OrbitalOpts, Outcome, ProbeArgs};

fn load(path: &Path) -> Result<(SystemConfig, IteratedSystem), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = SystemConfig::parse(&text)?;
    let sys = cfg.build()?;
    Ok((cfg, sys))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Io(format!("serializing report: {e}")))
}

fn check_eps(eps: f64) -> Result<(), CliError> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(CliError::Usage(format!("--eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

fn iterate_options(o: &OrbitalOpts) -> IterateOptions {
    IterateOptions {
        max_iter: o.max_iter,
        orbit_diam_bound: o.orbit_diam,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct PhiCheck<'a> {
    condition: &'static str,
    grid_points: usize,
    violation_count: usize,
    violations: &'a [PhiViolation],
    certified: bool,
}

pub fn check(a: &CheckArgs, seed: u64) -> Result<Outcome, CliError> {
    let (_, sys) = load(&a.config)?;
    let condition = match a.condition {
        Condition::Auto if sys.mode() == Mode::Orbital => Condition::Orbital,
        Condition::Auto => Condition::Pc,
        c => c,
    };
    let xs = sys.working_box().samples(a.samples, seed);
    let scale = sys.working_box().diam();
    let report = match condition {
        Condition::Pc | Condition::Auto => check_parent_child(&sys, &xs, a.depth, a.words, seed)?,
        Condition::Orbital => check_orbital(&sys, &xs, a.depth, a.pairs, seed)?,
        Condition::OrbitalIterated => {
            check_orbital_iterated(&sys, &xs, a.depth, a.pairs, a.word_len, a.words, seed)?
        }
        Condition::Regularity => check_family_regularity(&sys, &xs, &[scale * 1e-1, scale * 1e-2, scale * 1e-3], seed)?,
        Condition::Phi => {
            let mut grid = vec![0.0];
            grid.extend((0..=40).rev().map(|k| scale * 2f64.powi(-k)));
            grid.extend((1..=8).map(|k| scale * (1.0 + k as f64 / 8.0)));
            let r = sys.phi().spot_verify(&grid)?;
            let json = to_json(&PhiCheck {
                condition: "phi",
                grid_points: grid.len(),
                violation_count: r.violations.len(),
                violations: &r.violations,
                certified: false,
            })?;
            return Ok(Outcome {
                json,
                code: if r.is_clean() { 0 } else { 1 },
            });
        }
    };
    Ok(Outcome {
        json: to_json(&report)?,
        code: if report.is_clean() { 0 } else { 1 },
    })
}

#[derive(Serialize)]
struct AttractorSummary {
    n: usize,
    #[serde(serialize_with = "ser_g17")]
    radius: f64,
    points: usize,
    bound_kind: &'static str,
    #[serde(serialize_with = "ser_g17")]
    reported_bound: f64,
    #[serde(serialize_with = "ser_g17")]
    diam_used: f64,
    certified: bool,
    flags: Vec<String>,
    truncation: Option<String>,
}

pub fn attractor(a: &AttractorArgs) -> Result<Outcome, CliError> {
    check_eps(a.eps)?;
    let (_, sys) = load(&a.config)?;
    if a.png.is_some() && sys.dim() > 2 {
        return Err(CliError::Usage(format!("--png needs dimension 1 or 2, the system has {}", sys.dim())));
    }
    let start = parse::start_set(&a.start, sys.dim(), || sys.working_box().corners())?;
    let opts = IterateOptions {
        point_budget: a.point_budget,
        decimate: a.decimate,
        ..iterate_options(&a.orbital)
    };
    let approx = iterate_certified(&sys, &start, a.eps, &opts)?;
    let core = &approx.result.core;
    if let Some(path) = &a.out {
        let mut header = vec![
            ("n".to_string(), approx.iterations.to_string()),
            ("radius".to_string(), fmt_g17(approx.result.radius)),
            ("bound_kind".to_string(), approx.bound_kind.as_str().to_string()),
            ("certified".to_string(), approx.certified.to_string()),
        ];
        if !approx.flags.is_empty() {
            header.push(("flags".to_string(), approx.flags.join(",")));
        }
        if let Some(t) = &approx.truncation_note {
            header.push(("truncation".to_string(), t.clone()));
        }
        let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
        let file = File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        write_csv(&mut w, core, &header).map_err(io)?;
        w.flush().map_err(io)?;
    }
    if let Some(path) = &a.png {
        let (buf, w, h) = raster::presence(core, a.png_size);
        raster::write_png(path, &buf, w, h).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
    }
    let summary = AttractorSummary {
        n: approx.iterations,
        radius: approx.result.radius,
        points: core.len(),
        bound_kind: approx.bound_kind.as_str(),
        reported_bound: approx.reported_bound,
        diam_used: approx.diam_used,
        certified: approx.certified,
        flags: approx.flags.clone(),
        truncation: approx.truncation_note.clone(),
    };
    Ok(Outcome {
        json: to_json(&summary)?,
        code: 0,
    })
}

pub fn address(a: &AddressArgs, finite_only: bool) -> Result<Outcome, CliError> {
    check_eps(a.eps)?;
    let (_, sys) = load(&a.config)?;
    let word: TotalWord = a.word.parse()?;
    if finite_only && matches!(word, TotalWord::Infinite(_)) {
        return Err(CliError::Usage("project takes a finite word; use address for infinite words".into()));
    }
    let x = parse::point(&a.x, sys.dim())?;
    let result = pi_t(&sys, &word, &x, a.eps, &iterate_options(&a.orbital))?;
    Ok(Outcome {
        json: to_json(&result)?,
        code: 0,
    })
}

#[derive(Serialize)]
struct DcReport {
    a: String,
    b: String,
    c: String,
    exact: String,
    #[serde(serialize_with = "ser_g17")]
    distance: f64,
}

pub fn dc(a: &DcArgs) -> Result<Outcome, CliError> {
    let c = match (&a.c, &a.config) {
        (Some(s), _) => parse::rational(s)?,
        (None, Some(path)) => {
            let (cfg, _) = load(path)?;
            BigRational::from_float(cfg.default_c).expect("finite default_c")
        }
        (None, None) => BigRational::new(1.into(), 2.into()),
    };
    let zero = BigRational::from_integer(0.into());
    let one = BigRational::from_integer(1.into());
    if c < zero || c >= one {
        return Err(CliError::Usage(format!("c must lie in [0,1), got {c}")));
    }
    let wa: TotalWord = a.a.parse()?;
    let wb: TotalWord = a.b.parse()?;
    let d = dc_distance_exact(&wa, &wb, &c)?;
    let report = DcReport {
        a: wa.to_string(),
        b: wb.to_string(),
        c: c.to_string(),
        exact: d.to_string(),
        distance: d.to_f64().unwrap_or(f64::NAN),
    };
    Ok(Outcome {
        json: to_json(&report)?,
        code: 0,
    })
}

pub fn probe(a: &ProbeArgs) -> Result<Outcome, CliError> {
    check_eps(a.eps)?;
    let (_, sys) = load(&a.config)?;
    let starts = parse::points(&a.starts, sys.dim())?;
    if starts.is_empty() {
        return Err(CliError::Usage("--starts needs at least one point".into()));
    }
    let report = picard_probe(&sys, &starts, a.eps, &iterate_options(&a.orbital))?;
    Ok(Outcome {
        json: to_json(&report)?,
        code: 0,
    })
}
