//! Iterated systems: a family of maps on R^d, a comparison function and a mode.
//!
//! Letters name maps 1-based, and words compose right to left:
//! f_{ω₁…ωₙ} = f_{ω₁} ∘ … ∘ f_{ωₙ}.

use serde::{Deserialize, Serialize};

use crate::comparison::ComparisonFn;
use crate::error::{IfsError, Result};
use crate::expr::{Env, Expr, Var};
use crate::metric_sets::{Point, PointSet};
use crate::shift_space::FiniteWord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// One map of a family, as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    /// x ↦ M·x + b with M given as rows.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
    /// x ↦ s·R(θ)·x + b. A rotation angle is accepted only in dimension 2.
    Similarity {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<f64>,
        offset: Vec<f64>,
    },
    /// Affine on boxes; the first box containing the point wins.
    PiecewiseAffine { pieces: Vec<Piece> },
    /// One expression per coordinate in `x1..xd` (or `x` when d = 1) and `i`.
    Expr { coords: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum IndexFamily {
    Explicit(Vec<MapSpec>),
    /// Maps f_i for i = 1..=n from per-coordinate templates in `x1..xd` and `i`.
    /// `delta_tail`, when given, bounds h(∪_{i>n} f_i(B), ∪_{i≤n} f_i(B)) over
    /// the working box.
    Parametric {
        template: Vec<String>,
        n: usize,
        delta_tail: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Parent-child condition with a summable φ.
    Pc,
    /// Orbital condition with a right-continuous φ.
    Orbital,
    Unverified,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Pc => "pc",
            Mode::Orbital => "orbital",
            Mode::Unverified => "unverified",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkingBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl WorkingBox {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<WorkingBox> {
        if min.len() != max.len() || min.is_empty() {
            return Err(IfsError::config("working_box", "min and max need the same non-zero length"));
        }
        for k in 0..min.len() {
            if !(min[k] < max[k]) || !min[k].is_finite() || !max[k].is_finite() {
                return Err(IfsError::config(
                    format!("working_box.min[{k}]"),
                    format!("need finite min < max, got {} and {}", min[k], max[k]),
                ));
            }
        }
        Ok(WorkingBox { min, max })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.min.iter().zip(&self.max).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn diam(&self) -> f64 {
        self.min
            .iter()
            .zip(&self.max)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// All 2^d corners, for d ≤ 16.
    pub fn corners(&self) -> PointSet {
        let d = self.dim().min(16);
        let mut coords = Vec::with_capacity(d << d);
        for mask in 0..(1usize << d) {
            for k in 0..self.dim() {
                coords.push(if k < 16 && mask >> k & 1 == 1 { self.max[k] } else { self.min[k] });
            }
        }
        PointSet::from_raw(self.dim(), coords)
    }

    /// Corners, the center, then `count` seeded uniform points.
    pub fn samples(&self, count: usize, seed: u64) -> PointSet {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut coords = self.corners().coords().to_vec();
        coords.extend(self.center());
        for _ in 0..count {
            for k in 0..self.dim() {
                coords.push(rng.random_range(self.min[k]..=self.max[k]));
            }
        }
        PointSet::from_raw(self.dim(), coords)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AffineMap {
    pub(crate) dim: usize,
    /// Row-major d×d.
    pub(crate) matrix: Vec<f64>,
    pub(crate) offset: Vec<f64>,
}

impl AffineMap {
    fn from_rows(dim: usize, rows: &[Vec<f64>], offset: &[f64], path: &str) -> Result<AffineMap> {
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(IfsError::config(format!("{path}.matrix"), format!("expected a {dim}x{dim} matrix")));
        }
        if offset.len() != dim {
            return Err(IfsError::config(format!("{path}.offset"), format!("expected {dim} entries")));
        }
        let matrix: Vec<f64> = rows.iter().flatten().copied().collect();
        if matrix.iter().chain(offset).any(|v| !v.is_finite()) {
            return Err(IfsError::config(path, "non-finite coefficient"));
        }
        Ok(AffineMap {
            dim,
            matrix,
            offset: offset.to_vec(),
        })
    }

    #[inline]
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for r in 0..d {
            let row = &self.matrix[r * d..(r + 1) * d];
            let mut s = 0.0;
            for c in 0..d {
                s += row[c] * x[c];
            }
            out[r] = s + self.offset[r];
        }
    }

    /// Largest singular value.
    pub(crate) fn operator_norm(&self) -> f64 {
        if self.dim == 1 {
            return self.matrix[0].abs();
        }
        let m = nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.matrix);
        m.singular_values().max()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum CompiledMap {
    Affine(AffineMap),
    Piecewise(Vec<(Vec<f64>, Vec<f64>, AffineMap)>),
    Expr { coords: Vec<Expr>, index: f64 },
}

impl CompiledMap {
    fn compile(dim: usize, spec: &MapSpec, index: usize, path: &str) -> Result<CompiledMap> {
        match spec {
            MapSpec::Affine { matrix, offset } => {
                Ok(CompiledMap::Affine(AffineMap::from_rows(dim, matrix, offset, path)?))
            }
            MapSpec::Similarity {
                scale,
                rotation,
                offset,
            } => {
                if !(*scale >= 0.0) || !scale.is_finite() {
                    return Err(IfsError::config(format!("{path}.scale"), "scale must be finite and nonnegative"));
                }
                let rows = match (dim, rotation) {
                    (2, Some(theta)) => {
                        let (s, c) = theta.sin_cos();
                        vec![vec![scale * c, -scale * s], vec![scale * s, scale * c]]
                    }
                    (_, Some(_)) => {
                        return Err(IfsError::config(
                            format!("{path}.rotation"),
                            "a rotation angle is only supported in dimension 2",
                        ))
                    }
                    (_, None) => (0..dim)
                        .map(|r| (0..dim).map(|c| if r == c { *scale } else { 0.0 }).collect())
                        .collect(),
                };
                Ok(CompiledMap::Affine(AffineMap::from_rows(dim, &rows, offset, path)?))
            }
            MapSpec::PiecewiseAffine { pieces } => {
                if pieces.is_empty() {
                    return Err(IfsError::config(format!("{path}.pieces"), "at least one piece is required"));
                }
                let mut out = Vec::with_capacity(pieces.len());
                for (k, p) in pieces.iter().enumerate() {
                    let pp = format!("{path}.pieces[{k}]");
                    if p.min.len() != dim || p.max.len() != dim {
                        return Err(IfsError::config(&pp, format!("box bounds need {dim} entries")));
                    }
                    if p.min.iter().zip(&p.max).any(|(a, b)| !(a <= b)) {
                        return Err(IfsError::config(&pp, "box min must not exceed max"));
                    }
                    let a = AffineMap::from_rows(dim, &p.matrix, &p.offset, &pp)?;
                    out.push((p.min.clone(), p.max.clone(), a));
                }
                Ok(CompiledMap::Piecewise(out))
            }
            MapSpec::Expr { coords } => {
                if coords.len() != dim {
                    return Err(IfsError::config(format!("{path}.coords"), format!("expected {dim} expressions")));
                }
                let mut exprs = Vec::with_capacity(dim);
                for (k, src) in coords.iter().enumerate() {
                    let e = parse_map_expr(src, dim, &format!("{path}.coords[{k}]"))?;
                    exprs.push(e);
                }
                Ok(CompiledMap::Expr {
                    coords: exprs,
                    index: index as f64,
                })
            }
        }
    }

    /// A lone map outside any family; expression maps see `i = 1`.
    pub(crate) fn compile_standalone(dim: usize, spec: &MapSpec) -> Result<CompiledMap> {
        CompiledMap::compile(dim, spec, 1, "map")
    }

    #[inline]
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            CompiledMap::Affine(a) => a.apply_into(x, out),
            CompiledMap::Piecewise(pieces) => {
                let piece = pieces
                    .iter()
                    .find(|(lo, hi, _)| x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l <= v && v <= h))
                    .ok_or_else(|| IfsError::Map(format!("point {x:?} lies in no piece")))?;
                piece.2.apply_into(x, out);
            }
            CompiledMap::Expr { coords, index } => {
                let env = Env {
                    x,
                    i: *index,
                    ..Env::default()
                };
                for (o, e) in out.iter_mut().zip(coords) {
                    let v = e.eval(&env).map_err(|e| IfsError::Map(e.to_string()))?;
                    if !v.is_finite() {
                        return Err(IfsError::Map(format!("map produced {v} at {x:?}")));
                    }
                    *o = v;
                }
            }
        }
        Ok(())
    }

    fn as_affine(&self) -> Option<&AffineMap> {
        match self {
            CompiledMap::Affine(a) => Some(a),
            _ => None,
        }
    }
}

/// Parses a map coordinate; `x` is accepted as `x1` in dimension 1.
fn parse_map_expr(src: &str, dim: usize, path: &str) -> Result<Expr> {
    let e = Expr::parse(src).map_err(|e| match e {
        IfsError::Parse { column, message } => IfsError::config(path, format!("column {column}: {message}")),
        other => other,
    })?;
    e.check_vars(|v| match v {
        Var::X(k) => k >= 1 && k <= dim,
        Var::I => true,
        _ => false,
    })
    .map_err(|err| IfsError::config(path, err.to_string()))?;
    Ok(e)
}

/// A truncated iterated system S = ((R^d, |·|), (f_i)_{i≤N}).
#[derive(Debug, Clone)]
pub struct IteratedSystem {
    dim: usize,
    working_box: WorkingBox,
    family: IndexFamily,
    phi: ComparisonFn,
    mode: Mode,
    maps: Vec<CompiledMap>,
}

impl IteratedSystem {
    pub fn new(
        dim: usize,
        working_box: WorkingBox,
        family: IndexFamily,
        phi: ComparisonFn,
        mode: Mode,
    ) -> Result<IteratedSystem> {
        if dim == 0 {
            return Err(IfsError::config("dim", "dimension must be at least 1"));
        }
        if working_box.dim() != dim {
            return Err(IfsError::config("working_box", format!("expected {dim} coordinates")));
        }
        match mode {
            Mode::Pc if !phi.is_summable() => {
                return Err(IfsError::config("mode", "pc mode needs a summable comparison function"))
            }
            Mode::Orbital if !phi.is_right_continuous() => {
                return Err(IfsError::config("mode", "orbital mode needs a right-continuous comparison function"))
            }
            _ => {}
        }
        let maps = match &family {
            IndexFamily::Explicit(specs) => {
                if specs.is_empty() {
                    return Err(IfsError::config("maps", "at least one map is required"));
                }
                specs
                    .iter()
                    .enumerate()
                    .map(|(k, s)| CompiledMap::compile(dim, s, k + 1, &format!("maps[{k}]")))
                    .collect::<Result<Vec<_>>>()?
            }
            IndexFamily::Parametric {
                template,
                n,
                delta_tail,
            } => {
                if *n == 0 {
                    return Err(IfsError::config("maps.n", "truncation must be at least 1"));
                }
                if template.len() != dim {
                    return Err(IfsError::config("maps.template", format!("expected {dim} expressions")));
                }
                if let Some(d) = delta_tail {
                    if !(*d >= 0.0) || !d.is_finite() {
                        return Err(IfsError::config("maps.delta_tail", "must be finite and nonnegative"));
                    }
                }
                let exprs = template
                    .iter()
                    .enumerate()
                    .map(|(k, s)| parse_map_expr(s, dim, &format!("maps.template[{k}]")))
                    .collect::<Result<Vec<_>>>()?;
                let mut maps = Vec::with_capacity(*n);
                for i in 1..=*n {
                    let coords = exprs
                        .iter()
                        .enumerate()
                        .map(|(k, e)| {
                            e.substitute_index(i as f64)
                                .map_err(|err| IfsError::config(format!("maps.template[{k}] at i={i}"), err.to_string()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let affine: Option<Vec<(Vec<f64>, f64)>> = coords.iter().map(|e| e.as_affine(dim)).collect();
                    maps.push(match affine {
                        Some(rows) => CompiledMap::Affine(AffineMap {
                            dim,
                            matrix: rows.iter().flat_map(|(r, _)| r.iter().copied()).collect(),
                            offset: rows.iter().map(|(_, b)| *b).collect(),
                        }),
                        None => CompiledMap::Expr {
                            coords,
                            index: i as f64,
                        },
                    });
                }
                maps
            }
        };
        Ok(IteratedSystem {
            dim,
            working_box,
            family,
            phi,
            mode,
            maps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn working_box(&self) -> &WorkingBox {
        &self.working_box
    }

    pub fn family(&self) -> &IndexFamily {
        &self.family
    }

    pub fn phi(&self) -> &ComparisonFn {
        &self.phi
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of maps N of the (truncated) family.
    pub fn n_maps(&self) -> usize {
        self.maps.len()
    }

    /// True for parametric families, whose maps beyond N are dropped.
    pub fn is_truncated(&self) -> bool {
        matches!(self.family, IndexFamily::Parametric { .. })
    }

    pub fn delta_tail(&self) -> Option<f64> {
        match self.family {
            IndexFamily::Parametric { delta_tail, .. } => delta_tail,
            IndexFamily::Explicit(_) => None,
        }
    }

    /// Same system with a different mode, subject to the same φ requirements.
    pub fn with_mode(&self, mode: Mode) -> Result<IteratedSystem> {
        IteratedSystem::new(self.dim, self.working_box.clone(), self.family.clone(), self.phi.clone(), mode)
    }

    pub(crate) fn compiled(&self) -> &[CompiledMap] {
        &self.maps
    }

    fn map_index(&self, letter: u32) -> Result<usize> {
        if letter == 0 || letter as usize > self.maps.len() {
            return Err(IfsError::Index {
                letter,
                n: self.maps.len(),
            });
        }
        Ok(letter as usize - 1)
    }

    pub fn check_word(&self, letters: &[u32]) -> Result<()> {
        for &l in letters {
            self.map_index(l)?;
        }
        Ok(())
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(IfsError::Domain(format!("expected a {}-d point, got {}", self.dim, x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(IfsError::Domain("point has a non-finite coordinate".into()));
        }
        Ok(())
    }

    /// f_i(x) for a 1-based letter i.
    pub fn apply_map(&self, letter: u32, x: &[f64]) -> Result<Point> {
        self.check_point(x)?;
        let k = self.map_index(letter)?;
        let mut out = vec![0.0; self.dim];
        self.maps[k].apply_into(x, &mut out)?;
        Point::new(out)
    }

    /// f_w(x), innermost map last letter.
    pub fn apply_word(&self, w: &FiniteWord, x: &[f64]) -> Result<Point> {
        self.check_point(x)?;
        self.check_word(w.letters())?;
        let mut cur = x.to_vec();
        self.apply_letters_in_place(w.letters(), &mut cur)?;
        Point::new(cur)
    }

    /// Applies f_w to `x` in place. Letters must already be checked.
    pub(crate) fn apply_letters_in_place(&self, letters: &[u32], x: &mut Vec<f64>) -> Result<()> {
        let mut tmp = vec![0.0; self.dim];
        for &l in letters.iter().rev() {
            self.maps[l as usize - 1].apply_into(x, &mut tmp)?;
            std::mem::swap(x, &mut tmp);
        }
        Ok(())
    }

    /// f_w applied to every point of `b`.
    pub fn image_of_set(&self, w: &FiniteWord, b: &PointSet) -> Result<PointSet> {
        if b.dim() != self.dim {
            return Err(IfsError::Domain(format!("expected {}-d points, got {}", self.dim, b.dim())));
        }
        self.check_word(w.letters())?;
        let mut coords = Vec::with_capacity(b.coords().len());
        let mut cur = Vec::with_capacity(self.dim);
        for p in b.iter() {
            cur.clear();
            cur.extend_from_slice(p);
            self.apply_letters_in_place(w.letters(), &mut cur)?;
            coords.extend_from_slice(&cur);
        }
        PointSet::new(self.dim, coords)
    }

    /// Affine parts of all maps when every map is affine.
    pub(crate) fn affine_maps(&self) -> Option<Vec<&AffineMap>> {
        self.maps.iter().map(CompiledMap::as_affine).collect()
    }
}
