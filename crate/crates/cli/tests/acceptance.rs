//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed; exits non-zero on any FAIL.

use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ifs_core::address::{address_batch, cylinder_set, equivariance_slack, pi};
use ifs_core::attractor::{attractor_of_point, fractal_step, iterate_certified, orbit, pc_orbit_diam_bound, picard_probe};
use ifs_core::checks::check_parent_child;
use ifs_core::metric_sets::{diam, hausdorff, hausdorff_indexed, SetIndex};
use ifs_core::shift_space::{
    dc_distance_exact, enumerate_eventually_periodic, random_eventually_periodic, shift_map, word_eq_to_depth,
};
use ifs_core::system::Piece;
use ifs_core::{
    ComparisonFn, FiniteWord, IndexFamily, InfiniteWordSpec, IterateOptions, IteratedSystem, MapSpec, Mode, Point,
    PointSet, TotalWord, WorkingBox,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// k units in the last place of |x|.
fn ulps(x: f64, k: u32) -> f64 {
    let x = x.abs();
    let next = f64::from_bits(x.to_bits() + 1);
    (next - x) * k as f64
}

fn sim(scale: f64, offset: Vec<f64>) -> MapSpec {
    MapSpec::Similarity {
        scale,
        rotation: None,
        offset,
    }
}

fn system(dim: usize, lo: f64, hi: f64, maps: Vec<MapSpec>, c: f64, mode: Mode) -> IteratedSystem {
    IteratedSystem::new(
        dim,
        WorkingBox::new(vec![lo; dim], vec![hi; dim]).unwrap(),
        IndexFamily::Explicit(maps),
        ComparisonFn::linear(c).unwrap(),
        mode,
    )
    .unwrap()
}

fn cantor() -> IteratedSystem {
    system(1, -1.0, 2.0, vec![sim(1.0 / 3.0, vec![0.0]), sim(1.0 / 3.0, vec![2.0 / 3.0])], 1.0 / 3.0, Mode::Pc)
}

fn sierpinski(mode: Mode) -> IteratedSystem {
    let maps = vec![sim(0.5, vec![0.0, 0.0]), sim(0.5, vec![0.5, 0.0]), sim(0.5, vec![0.25, 0.5])];
    system(2, -0.5, 1.5, maps, 0.5, mode)
}

fn scalars(xs: &[f64]) -> PointSet {
    PointSet::from_scalars(xs).unwrap()
}

/// All f_ω(0) and f_ω(1), |ω| = depth: Σ d_k 3^-k with d_k ∈ {0,2}, and that plus 3^-depth.
fn cantor_oracle(depth: i32) -> PointSet {
    let mut left = vec![0.0f64];
    for k in 1..=depth {
        let step = 2.0 * 3f64.powi(-k);
        left = left.iter().flat_map(|&v| [v, v + step]).collect();
    }
    let tail = 3f64.powi(-depth);
    scalars(&left.iter().flat_map(|&v| [v, v + tail]).collect::<Vec<_>>())
}

fn cantor_reproduction() -> Outcome {
    let c = cantor();
    let t = Instant::now();
    let a = iterate_certified(&c, &scalars(&[0.5]), 1e-6, &IterateOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed().as_secs_f64();
    let h = hausdorff(&a.result.core, &cantor_oracle(16)).unwrap();
    let tol = 1e-6 + 3f64.powi(-16);
    ensure(h <= tol, || format!("h = {h:e} > {tol:e}"))?;
    ensure(elapsed < 5.0, || format!("took {elapsed:.2} s"))?;
    Ok(format!("h = {h:.3e} <= {tol:.3e}, n = {}, {elapsed:.3} s", a.iterations))
}

fn a_priori_bound() -> Outcome {
    let c = cantor();
    let oracle = cantor_oracle(16);
    let b0 = scalars(&[0.5]);
    let f_b0 = fractal_step(&c, &b0).unwrap();
    let d0 = diam(&b0.union(&f_b0).unwrap());
    let mut cur = b0;
    let mut worst = f64::NEG_INFINITY;
    for n in 0..=14 {
        // Σ_{k≥n} 3^-k = 3^-n · 3/2
        let bound = 3f64.powi(-n) * 1.5 * d0;
        let h = hausdorff(&cur, &oracle).unwrap();
        ensure(h <= bound + ulps(bound, 8), || format!("n = {n}: h = {h:e} > {bound:e}"))?;
        worst = worst.max(h / bound);
        cur = fractal_step(&c, &cur).unwrap();
    }
    Ok(format!("15 levels, max h/bound = {worst:.3}"))
}

/// Two affine maps on R^d, each scaled to Frobenius norm (hence operator norm) below `norm`.
fn random_affine(rng: &mut ChaCha8Rng, d: usize, norm: f64) -> IteratedSystem {
    let maps = (0..2)
        .map(|_| {
            let mut m: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let fro = m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            let target = rng.random_range(0.3..norm);
            m.iter_mut().flatten().for_each(|v| *v *= target / fro);
            MapSpec::Affine {
                matrix: m,
                offset: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            }
        })
        .collect();
    let half = 2.0 * (d as f64).sqrt() / (1.0 - norm);
    system(d, -half, half, maps, norm, Mode::Pc)
}

fn cauchy_property() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pairs = 0;
    let mut worst = 0.0f64;
    for family in 0..20 {
        let d = 1 + family % 2;
        let sys = random_affine(&mut rng, d, 0.9);
        let b = PointSet::new(d, (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let d0 = diam(&b.union(&fractal_step(&sys, &b).unwrap()).unwrap());
        let mut levels = vec![b];
        for _ in 0..20 {
            levels.push(fractal_step(&sys, levels.last().unwrap()).unwrap());
        }
        let index: Vec<SetIndex> = levels.iter().map(SetIndex::new).collect();
        let terms: Vec<f64> = (0..20).map(|k| 0.9f64.powi(k) * d0).collect();
        for n in 1..=20 {
            for m in 0..n {
                let bound: f64 = terms[m..n].iter().sum();
                let h = hausdorff_indexed(&levels[m], &index[m], &levels[n], &index[n]).unwrap();
                ensure(h <= bound + ulps(bound, 8), || {
                    format!("family {family} (d = {d}), m = {m}, n = {n}: {h:e} > {bound:e}")
                })?;
                worst = worst.max(h / bound);
                pairs += 1;
            }
        }
    }
    let elapsed = t.elapsed().as_secs_f64();
    ensure(elapsed < 60.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("{pairs} pairs, max h/bound = {worst:.3}, {elapsed:.1} s"))
}

fn weakly_picard() -> Outcome {
    let piece = |lo: f64, hi: f64, offset: f64| Piece {
        min: vec![lo],
        max: vec![hi],
        matrix: vec![vec![0.5]],
        offset: vec![offset],
    };
    let two = system(
        1,
        0.0,
        3.0,
        vec![MapSpec::PiecewiseAffine {
            pieces: vec![piece(0.0, 1.0, 0.0), piece(2.0, 3.0, 1.0)],
        }],
        0.5,
        Mode::Pc,
    );
    let eps = 1e-6;
    let o = IterateOptions::default();
    let p = |v: f64| Point::new(vec![v]).unwrap();
    let r = picard_probe(&two, &[p(0.5), p(2.5)], eps, &o).map_err(|e| e.to_string())?;
    ensure(r.cluster_count == 2, || format!("{} clusters", r.cluster_count))?;
    ensure(r.attractors[0].cluster != r.attractors[1].cluster, || "starts share a cluster".into())?;
    for (x, target) in [(0.5, 0.0), (2.5, 2.0)] {
        let a = attractor_of_point(&two, &p(x), eps, &o).unwrap();
        let near = hausdorff(&a.result.core, &scalars(&[target])).unwrap();
        ensure(near <= a.result.radius, || format!("attractor from {x} is {near:e} from {{{target}}}"))?;
    }
    let sep = r.certified_separation.unwrap_or(f64::NEG_INFINITY);
    ensure(sep >= 2.0 - 2.0 * eps, || format!("separation {sep}"))?;
    let single = picard_probe(&cantor(), &[p(0.0), p(0.5), p(1.0)], eps, &o).map_err(|e| e.to_string())?;
    ensure(single.cluster_count == 1, || format!("Cantor gave {} clusters", single.cluster_count))?;
    Ok(format!("separation {sep:.9}, Cantor 1 cluster"))
}

/// Every word with period ≤ 2 and preperiod ≤ 3, topped up to 200 from the
/// period ≤ 3, preperiod ≤ 5 enumeration.
fn closure_words() -> Vec<InfiniteWordSpec> {
    let mut seen = HashSet::new();
    let mut words = Vec::new();
    for w in enumerate_eventually_periodic(2, 2, 3).into_iter().chain(enumerate_eventually_periodic(2, 3, 5)) {
        if words.len() == 200 {
            break;
        }
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

fn address_closure() -> Outcome {
    let c = cantor();
    let o = IterateOptions::default();
    let eps = 1e-6;
    let x = Point::new(vec![0.5]).unwrap();
    let a = iterate_certified(&c, &PointSet::singleton(&x), eps, &o).unwrap();
    let words = closure_words();
    ensure(words.len() == 200, || format!("only {} words", words.len()))?;
    let index = SetIndex::new(&a.result.core);
    let results = address_batch(&c, &words, &x, eps, &o).map_err(|e| e.to_string())?;
    let mut violations = 0;
    let mut worst = 0.0f64;
    for r in &results {
        let gap = index.dist_to(r.point());
        let allowed = r.radius + a.result.radius;
        if gap > allowed {
            violations += 1;
        }
        worst = worst.max(gap / allowed);
    }
    ensure(violations == 0, || format!("{violations} of 200 addresses outside"))?;
    Ok(format!("200 words, max gap/allowance = {worst:.3}"))
}

fn shift_equivariance() -> Outcome {
    let o = IterateOptions::default();
    let eps = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for (name, sys) in [("Cantor", cantor()), ("Sierpinski", sierpinski(Mode::Pc))] {
        let n = sys.n_maps() as u32;
        for trial in 0..100 {
            let i = rng.random_range(1..=n);
            let alpha = random_eventually_periodic(&mut rng, n, 3, 3);
            let x: Vec<f64> = (0..sys.dim()).map(|_| rng.random_range(-0.5..1.5)).collect();
            let x = Point::new(x).unwrap();
            let a = pi(&sys, &alpha, &x, eps, &o).unwrap();
            let TotalWord::Infinite(shifted) = shift_map(i, &alpha.clone().into()).unwrap() else {
                return Err("shift of an infinite word is finite".into());
            };
            let b = pi(&sys, &shifted, &x, eps, &o).unwrap();
            let fi = sys.apply_map(i, a.point()).unwrap();
            let gap = fi.dist(&Point::new(b.point().to_vec()).unwrap()).unwrap();
            let bound = equivariance_slack(&sys, a.radius).unwrap() + b.radius;
            let bound = bound + ulps(bound.max(2.0), 8);
            ensure(gap <= bound, || format!("{name} trial {trial}: i = {i}, α = {alpha}: {gap:e} > {bound:e}"))?;
            worst = worst.max(gap / bound);
        }
    }
    Ok(format!("200 triples, max gap/bound = {worst:.3}"))
}

fn cylinder_shrinkage() -> Outcome {
    let c = cantor();
    let o = IterateOptions::default();
    let eps = 1e-6;
    let x = Point::new(vec![0.0]).unwrap();
    let a0 = iterate_certified(&c, &PointSet::singleton(&x), eps, &o).unwrap();
    let d_a0 = diam(&a0.result.core);
    let d_bound = pc_orbit_diam_bound(&c, &PointSet::singleton(&x)).unwrap();
    for n in 0..=10 {
        let cyl = cylinder_set(&c, &FiniteWord::repeat(1, n).unwrap(), &x, eps, &o).map_err(|e| e.to_string())?;
        let got = diam(&cyl.value);
        let expect = 3f64.powi(-(n as i32)) * d_a0;
        ensure((got - expect).abs() <= ulps(d_a0, 8), || format!("n = {n}: diam {got:e} vs {expect:e}"))?;
        let pc = 2.0 * 3f64.powi(-(n as i32)) * 1.5 * d_bound;
        ensure(got <= pc, || format!("n = {n}: diam {got:e} above the bound {pc:e}"))?;
    }
    Ok(format!("n = 0..=10, diam(A_0) = {d_a0:.6}, D = {d_bound:.6}"))
}

fn orbital_inequality() -> Outcome {
    let sys = sierpinski(Mode::Orbital);
    let start = PointSet::new(2, vec![1.0, 1.0]).unwrap();
    let orb = orbit(&sys, &start, 6, 100_000).map_err(|e| e.to_string())?.points;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let mut pick = || {
            let k = rng.random_range(1..=8);
            let coords: Vec<f64> = (0..k).flat_map(|_| orb.point(rng.random_range(0..orb.len())).to_vec()).collect();
            PointSet::new(2, coords).unwrap()
        };
        let (b, c) = (pick(), pick());
        let lhs = hausdorff(&fractal_step(&sys, &b).unwrap(), &fractal_step(&sys, &c).unwrap()).unwrap();
        let rhs = 0.5 * hausdorff(&b, &c).unwrap();
        ensure(lhs <= rhs + ulps(rhs.max(2.0), 8), || format!("trial {trial}: {lhs:e} > {rhs:e}"))?;
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    Ok(format!("100 pairs from {} orbit points, max lhs/rhs = {worst:.3}", orb.len()))
}

fn condition_checkers() -> Outcome {
    let c = cantor();
    let xs = c.working_box().samples(20, 0);
    let clean = check_parent_child(&c, &xs, 6, 100_000, 0).map_err(|e| e.to_string())?;
    ensure(clean.violation_count == 0, || format!("{} Cantor violations", clean.violation_count))?;
    ensure(!clean.flags.iter().any(|f| f == "random_words"), || "Cantor check was not exhaustive".into())?;

    let exp = system(1, -10.0, 10.0, vec![sim(2.0, vec![0.0])], 0.5, Mode::Unverified);
    let xs = exp.working_box().samples(20, 0);
    let bad = check_parent_child(&exp, &xs, 6, 256, 0).map_err(|e| e.to_string())?;
    ensure(bad.violation_count > 0, || "no witness for the expansive map".into())?;
    let again = check_parent_child(&exp, &xs, 6, 256, 0).unwrap();
    ensure(again == bad, || "witnesses differ between runs".into())?;
    // recompute the first witness: f_ω(x) = 2^m x, child 2^{m+1} x, φ^m(|x − 2x|) = 2^-m |x|
    let w = &bad.violations[0];
    let m = w.word.as_deref().map_or(0, |s| s.split('.').count()) as i32;
    let x = w.x[0];
    let (lhs, rhs) = (2f64.powi(m) * x.abs(), 0.5f64.powi(m) * x.abs());
    ensure(w.lhs == lhs && w.rhs == rhs && lhs > rhs, || {
        format!("witness {:?} does not recompute: lhs {lhs}, rhs {rhs}", w)
    })?;
    Ok(format!(
        "Cantor: {} samples, 0 violations; expansive: {} violations, first at word {:?}",
        clean.samples, bad.violation_count, w.word
    ))
}

fn brute_hausdorff(a: &PointSet, b: &PointSet) -> f64 {
    let directed = |a: &PointSet, b: &PointSet| {
        a.iter()
            .map(|p| {
                b.iter()
                    .map(|q| p.iter().zip(q).fold(0.0, |s, (x, y)| s + (x - y) * (x - y)))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a)).sqrt()
}

fn metric_engine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for inst in 0..50 {
        let d = 1 + inst % 3;
        let na = if inst < 10 { 2000 } else { rng.random_range(1..=2000) };
        let nb = if inst < 10 { 2000 } else { rng.random_range(1..=2000) };
        let mut cloud = |n: usize| {
            let snap = rng.random_bool(0.3);
            let coords = (0..n * d)
                .map(|_| {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    if snap {
                        (v * 8.0).round() / 8.0
                    } else {
                        v
                    }
                })
                .collect();
            PointSet::new(d, coords).unwrap()
        };
        let (a, b) = (cloud(na), cloud(nb));
        let brute = brute_hausdorff(&a, &b);
        let fast = hausdorff(&a, &b).unwrap();
        let indexed = hausdorff_indexed(&a, &SetIndex::new(&a), &b, &SetIndex::new(&b)).unwrap();
        ensure(fast == brute && indexed == brute, || {
            format!("instance {inst} (d = {d}, {na}x{nb}): brute {brute:e}, fast {fast:e}, indexed {indexed:e}")
        })?;
    }

    let c = BigRational::new(1.into(), 2.into());
    let zero = BigRational::from_integer(0.into());
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut word = || -> TotalWord { random_eventually_periodic(&mut rng, 2, 2, 2).into() };
    let mut coincident = 0;
    for t in 0..1000 {
        let (a, b, w) = (word(), word(), word());
        let d = |x: &TotalWord, y: &TotalWord| dc_distance_exact(x, y, &c).unwrap();
        let (ab, ba, bw, aw) = (d(&a, &b), d(&b, &a), d(&b, &w), d(&a, &w));
        ensure(d(&a, &a) == zero, || format!("triple {t}: d(a, a) ≠ 0"))?;
        // preperiod ≤ 2 and period ≤ 2 words agree everywhere once they agree on 6 letters
        let same = word_eq_to_depth(&a, &b, 6);
        ensure((ab == zero) == same, || format!("triple {t}: d(a, b) = {ab} but equal = {same}"))?;
        ensure(ab == ba, || format!("triple {t}: asymmetric"))?;
        ensure(aw <= &ab + &bw, || format!("triple {t}: triangle fails, {aw} > {ab} + {bw}"))?;
        coincident += same as usize;
    }
    Ok(format!("50 instances exact; 1000 triples ({coincident} with a = b)"))
}

fn config(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    p.to_str().unwrap().to_string()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let csv_s = csv.to_str().unwrap().to_string();
    let cantor = config("cantor.json");
    let gasket = config("sierpinski.json");
    let runs: Vec<Vec<String>> = vec![
        vec!["check", "--config", &cantor, "--condition", "pc"],
        vec!["check", "--config", &config("expansive.json"), "--condition", "pc"],
        vec!["check", "--config", &gasket, "--condition", "orbital", "--depth", "5"],
        vec!["check", "--config", &gasket, "--condition", "orbital-iterated", "--depth", "4"],
        vec!["check", "--config", &config("harmonic.json"), "--condition", "regularity"],
        vec!["check", "--config", &cantor, "--condition", "phi"],
        vec!["attractor", "--config", &gasket, "--eps", "1e-2", "--out", &csv_s],
        vec!["address", "--config", &gasket, "--word", "1.2:(3.1)", "--x", "0.3,0.3"],
        vec!["project", "--config", &cantor, "--word", "2.1.2", "--x", "0.5"],
        vec!["dc", "--a", "1:(2)", "--b", "(1.2)", "--c", "1/3"],
        vec!["probe", "--config", &config("two_component.json"), "--starts", "0.5;2.5;1"],
    ]
    .into_iter()
    .map(|r| r.into_iter().map(String::from).collect())
    .collect();
    let exe = env!("CARGO_BIN_EXE_ifs");
    let mut compared = 0;
    for args in &runs {
        let mut outputs = Vec::new();
        for threads in [None, None, Some("1"), Some("8")] {
            let mut cmd = Command::new(exe);
            cmd.args(["--seed", "0"]).args(args);
            if let Some(t) = threads {
                cmd.args(["--threads", t]);
            }
            let out = cmd.output().unwrap();
            let code = out.status.code().unwrap_or(-1);
            ensure(code == 0 || code == 1, || format!("{args:?} exited {code}"))?;
            let file = if csv.exists() { std::fs::read(&csv).unwrap() } else { Vec::new() };
            outputs.push((out.stdout, file));
        }
        ensure(outputs.windows(2).all(|w| w[0] == w[1]), || format!("{args:?} differs between runs"))?;
        compared += 1;
    }
    Ok(format!("{compared} commands, identical over 2 runs and 1, default and 8 threads"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("Cantor reproduction", cantor_reproduction),
        ("a-priori bound on F^n", a_priori_bound),
        ("Cauchy property of F^m, F^n", cauchy_property),
        ("weakly Picard separation", weakly_picard),
        ("address-attractor closure", address_closure),
        ("shift equivariance", shift_equivariance),
        ("cylinder shrinkage", cylinder_shrinkage),
        ("orbital inequality", orbital_inequality),
        ("condition checkers", condition_checkers),
        ("metric engine", metric_engine),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({why})", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
