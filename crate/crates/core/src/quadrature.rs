//! Sobolev–Slobodeckij norms on Euclidean boxes by the composite midpoint rule.
//!
//! For `s = k + theta` with `k = floor(s)` the computed quantity is
//!
//! ```text
//! ||u||_{W^{s,p}} = sum_{|nu| <= k} ||d^nu u||_{L^p} + sum_{|nu| = k} |d^nu u|_{theta,p}
//! |v|_{theta,p}^p = int int |v(x) - v(y)|^p / |x - y|^{n + theta p} dx dy
//! ```
//!
//! Derivatives are symbolic. The double integral runs over pairs of distinct
//! cells of an `N^n` midpoint grid, so its cost is `O(N^{2n})`; the defaults
//! are `N = 256` in one dimension, `64` in two and `16` in three. Pairs of
//! identical cells are left out of the value and bounded in the error
//! estimate instead.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcexpr::{diff_expr, CompiledExpr, EvalError, Expr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integrability exponent must be finite and > 1, got {0}")]
    InvalidExponent(f64),
    #[error("theta must lie strictly between 0 and 1, got {0}")]
    ThetaOutOfRange(f64),
    #[error("smoothness order must be finite and >= 0, got {0}")]
    InvalidOrder(f64),
    #[error("grid resolution must be at least 1")]
    InvalidGrid,
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("function is {value:e} at {point:?}, outside its declared support")]
    SupportViolation { point: Vec<f64>, value: f64 },
    #[error("{0}")]
    NotContained(String),
    #[error("grid function has no symbolic source; derivatives are unavailable")]
    NoSource,
}

/// Closed box `prod [lo_i, hi_i]` with nonempty interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, QuadratureError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(QuadratureError::InvalidBox(format!(
                "bounds of lengths {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        for (a, b) in lo.iter().zip(&hi) {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(QuadratureError::InvalidBox(format!("[{a}, {b}] is empty or unbounded")));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self, QuadratureError> {
        BoxDomain::new(vec![lo; n], vec![hi; n])
    }

    pub fn unit(n: usize) -> Self {
        BoxDomain::cube(n, 0.0, 1.0).expect("unit cube")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.width(a)).product()
    }

    /// Open-interior membership.
    pub fn contains_interior(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a < *v && *v < *b)
    }

    pub fn contains_box(&self, other: &BoxDomain) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|a| self.lo[a] <= other.lo[a] && other.hi[a] <= self.hi[a])
    }
}

/// A real function on `R^n` given by an expression, optionally set to zero
/// outside the open interior of a support box.
#[derive(Debug, Clone)]
pub struct Field {
    expr: Expr,
    support: Option<BoxDomain>,
}

impl Field {
    pub fn new(expr: Expr) -> Self {
        Field {
            expr,
            support: None,
        }
    }

    /// `expr` inside `support`, zero outside. Derivatives follow the same
    /// rule, which is exact when `expr` vanishes near the boundary.
    pub fn supported(expr: Expr, support: BoxDomain) -> Self {
        Field {
            expr,
            support: Some(support),
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn support(&self) -> Option<&BoxDomain> {
        self.support.as_ref()
    }

    pub fn derivative(&self, axis: usize) -> Field {
        Field {
            expr: diff_expr(&self.expr, axis),
            support: self.support.clone(),
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            expr: self.expr.scale(c),
            support: self.support.clone(),
        }
    }
}

impl From<Expr> for Field {
    fn from(expr: Expr) -> Self {
        Field::new(expr)
    }
}

impl From<&Expr> for Field {
    fn from(expr: &Expr) -> Self {
        Field::new(expr.clone())
    }
}

/// Midpoint samples of a function on a uniform grid over a box.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: BoxDomain,
    coords: Vec<Vec<f64>>,
    values: Vec<f64>,
    source: Option<Field>,
}

/// Midpoints `lo + (i + 1/2) h` of `cells` equal subintervals.
pub fn midpoints(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    let h = (hi - lo) / cells as f64;
    (0..cells).map(|i| lo + (i as f64 + 0.5) * h).collect()
}

fn check_grid(n: usize) -> Result<(), QuadratureError> {
    if n == 0 {
        Err(QuadratureError::InvalidGrid)
    } else {
        Ok(())
    }
}

fn check_p(p: f64) -> Result<(), QuadratureError> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(QuadratureError::InvalidExponent(p))
    }
}

/// Row-major point enumeration, last axis fastest.
fn point_at(coords: &[Vec<f64>], mut idx: usize, out: &mut [f64]) {
    for a in (0..coords.len()).rev() {
        let m = coords[a].len();
        out[a] = coords[a][idx % m];
        idx /= m;
    }
}

fn sample_coords(field: &Field, coords: &[Vec<f64>]) -> Result<Vec<f64>, QuadratureError> {
    let dim = coords.len();
    if field.expr.arity() > dim {
        return Err(QuadratureError::DimensionMismatch {
            expected: dim,
            got: field.expr.arity(),
        });
    }
    let total: usize = coords.iter().map(Vec::len).product();
    let tape = CompiledExpr::single(&field.expr);
    (0..total)
        .into_par_iter()
        .map_init(
            || (vec![0.0; dim], Vec::new(), [0.0]),
            |(x, scratch, out), idx| {
                point_at(coords, idx, x);
                if let Some(s) = &field.support {
                    if !s.contains_interior(x) {
                        return Ok(0.0);
                    }
                }
                tape.eval_into(x, scratch, out)
                    .map(|_| out[0])
                    .map_err(|source| QuadratureError::Eval {
                        point: x.clone(),
                        source,
                    })
            },
        )
        .collect()
}

impl GridFunction {
    /// Samples `field` at the midpoints of an `N^n` grid on `domain`.
    pub fn sample(field: &Field, domain: &BoxDomain, n_cells: usize) -> Result<Self, QuadratureError> {
        check_grid(n_cells)?;
        let coords: Vec<Vec<f64>> = (0..domain.dim())
            .map(|a| midpoints(domain.lo[a], domain.hi[a], n_cells))
            .collect();
        let values = sample_coords(field, &coords)?;
        Ok(GridFunction {
            domain: domain.clone(),
            coords,
            values,
            source: Some(field.clone()),
        })
    }

    /// Wraps raw samples taken at the standard midpoints.
    pub fn from_values(domain: &BoxDomain, n_cells: usize, values: Vec<f64>) -> Result<Self, QuadratureError> {
        check_grid(n_cells)?;
        let expected = n_cells.pow(domain.dim() as u32);
        if values.len() != expected {
            return Err(QuadratureError::DimensionMismatch {
                expected,
                got: values.len(),
            });
        }
        Ok(GridFunction {
            domain: domain.clone(),
            coords: (0..domain.dim())
                .map(|a| midpoints(domain.lo[a], domain.hi[a], n_cells))
                .collect(),
            values,
            source: None,
        })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    pub fn cells(&self) -> Vec<usize> {
        self.coords.iter().map(Vec::len).collect()
    }

    pub fn source(&self) -> Option<&Field> {
        self.source.as_ref()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.domain.width(axis) / self.coords[axis].len() as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.domain.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.coords.len()];
        point_at(&self.coords, idx, &mut x);
        x
    }

    /// The sub-grid of cells lying in `inner`. The boundaries of `inner`
    /// must fall on cell faces (to 1e-9 of a cell); samples are copied, not
    /// recomputed.
    pub fn restrict(&self, inner: &BoxDomain) -> Result<GridFunction, QuadratureError> {
        if !self.domain.contains_box(inner) {
            return Err(QuadratureError::NotContained(
                "restriction box is not inside the grid box".into(),
            ));
        }
        let mut ranges = Vec::new();
        for a in 0..self.domain.dim() {
            let h = self.spacing(a);
            let start = (inner.lo[a] - self.domain.lo[a]) / h;
            let end = (inner.hi[a] - self.domain.lo[a]) / h;
            if (start - start.round()).abs() > 1e-9 || (end - end.round()).abs() > 1e-9 {
                return Err(QuadratureError::NotContained(format!(
                    "restriction box is not aligned with the grid on axis {a}"
                )));
            }
            ranges.push(start.round() as usize..end.round() as usize);
        }
        let coords: Vec<Vec<f64>> = ranges
            .iter()
            .enumerate()
            .map(|(a, r)| self.coords[a][r.clone()].to_vec())
            .collect();
        let full = self.cells();
        let total: usize = coords.iter().map(Vec::len).product();
        let mut values = Vec::with_capacity(total);
        let mut sub = vec![0usize; full.len()];
        for idx in 0..total {
            let mut rem = idx;
            for a in (0..full.len()).rev() {
                sub[a] = ranges[a].start + rem % ranges[a].len();
                rem /= ranges[a].len();
            }
            let flat = sub.iter().zip(&full).fold(0, |acc, (i, m)| acc * m + i);
            values.push(self.values[flat]);
        }
        Ok(GridFunction {
            domain: inner.clone(),
            coords,
            values,
            source: self.source.clone(),
        })
    }

    /// `(sum |v|^p * cell volume)^(1/p)`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let vol = self.cell_volume();
        let sum: f64 = self.values.iter().map(|v| pow_abs(*v, p)).sum();
        (sum * vol).powf(1.0 / p)
    }

    /// The `p`-th power of the Gagliardo seminorm over distinct cell pairs.
    pub fn gagliardo_sum(&self, theta: f64, p: f64, mode: PairSum) -> f64 {
        let dim = self.coords.len();
        let m = self.values.len();
        let points: Vec<f64> = (0..m).flat_map(|i| self.point(i)).collect();
        let half_exp = 0.5 * (dim as f64 + theta * p);
        let vals = &self.values;
        let row = |c: usize| -> f64 {
            let xc = &points[c * dim..(c + 1) * dim];
            let start = match mode {
                PairSum::Half => c + 1,
                PairSum::Full => 0,
            };
            let mut acc = 0.0;
            for d in start..m {
                if d == c {
                    continue;
                }
                let diff = vals[c] - vals[d];
                if diff == 0.0 {
                    continue;
                }
                let xd = &points[d * dim..(d + 1) * dim];
                let r2: f64 = xc.iter().zip(xd).map(|(a, b)| (a - b) * (a - b)).sum();
                acc += pow_abs(diff, p) / r2.powf(half_exp);
            }
            acc
        };
        // rows in parallel, combined in index order so the result is schedule independent
        let rows: Vec<f64> = (0..m).into_par_iter().map(row).collect();
        let total: f64 = rows.iter().sum();
        let vol = self.cell_volume();
        let factor = match mode {
            PairSum::Half => 2.0,
            PairSum::Full => 1.0,
        };
        factor * total * vol * vol
    }

    /// Largest difference quotient between neighbouring samples.
    pub fn lipschitz_estimate(&self) -> f64 {
        let cells = self.cells();
        let dim = cells.len();
        let mut stride = vec![1usize; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            stride[a] = stride[a + 1] * cells[a + 1];
        }
        let mut best: f64 = 0.0;
        for idx in 0..self.values.len() {
            for a in 0..dim {
                let i = (idx / stride[a]) % cells[a];
                if i + 1 < cells[a] {
                    let slope = (self.values[idx + stride[a]] - self.values[idx]).abs() / self.spacing(a);
                    best = best.max(slope);
                }
            }
        }
        best
    }

    /// Bound on the omitted same-cell part of the Gagliardo double integral
    /// under a Lipschitz model with constant `lipschitz`: each cell
    /// contributes at most `vol_cell * L^p * |S^{n-1}| * diam^{p(1-theta)} / (p(1-theta))`.
    pub fn diagonal_bound(&self, theta: f64, p: f64, lipschitz: f64) -> f64 {
        let dim = self.coords.len();
        let diam = (0..dim).map(|a| self.spacing(a).powi(2)).sum::<f64>().sqrt();
        let e = p * (1.0 - theta);
        self.domain.volume() * lipschitz.powf(p) * sphere_area(dim) * diam.powf(e) / e
    }
}

fn pow_abs(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v * v
    } else {
        v.abs().powf(p)
    }
}

/// Surface area of the unit sphere in `R^n`.
fn sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // |S^{n-1}| = 2 pi |S^{n-3}| / (n - 2)
            2.0 * PI * sphere_area(n - 2) / (n - 2) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSum {
    /// Pairs `c < d`, doubled.
    Half,
    /// All ordered pairs `c != d`.
    Full,
}

/// Which of the two standard equivalent norms to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormVariant {
    /// `||u||_{W^{k,p}} + sum_{|nu|=k} |d^nu u|_{theta,p}`.
    #[default]
    Seminorm,
    /// `||u||_{W^{k,p}} + sum_{|nu|=k} ||d^nu u||_{W^{theta,p}}`: the top
    /// order L^p terms are counted twice.
    FullNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TermKind {
    Lp,
    Gagliardo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormTerm {
    pub kind: TermKind,
    pub multi_index: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub weight: f64,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_value: Option<f64>,
    pub error_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagonal_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridInfo {
    pub cells_per_axis: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse_cells_per_axis: Option<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cell_volume: f64,
}

/// `value = sum(weight * term.value)` over `terms`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub schema: &'static str,
    pub value: f64,
    pub s: f64,
    pub p: f64,
    pub variant: NormVariant,
    pub terms: Vec<NormTerm>,
    pub grid: GridInfo,
    pub error_estimate: f64,
    /// Value of the other variant divided by the seminorm variant, when
    /// `theta > 0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant_ratio: Option<f64>,
}

impl NormReport {
    /// Recomputes the value from the breakdown.
    pub fn combined_terms(&self) -> f64 {
        self.terms.iter().map(|t| t.weight * t.value).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Cells per axis; `None` picks the dimension default.
    pub grid: Option<usize>,
    pub variant: NormVariant,
    /// Also evaluate at `N/2` and include the difference in the estimate.
    pub two_grid: bool,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            grid: None,
            variant: NormVariant::Seminorm,
            two_grid: true,
        }
    }
}

impl QuadratureOptions {
    pub fn with_grid(n: usize) -> Self {
        QuadratureOptions {
            grid: Some(n),
            ..Default::default()
        }
    }
}

/// Default cells per axis for a double integral over an `n`-dimensional box.
pub fn default_grid(n: usize) -> usize {
    match n {
        1 => 256,
        2 => 64,
        3 => 16,
        _ => 8,
    }
}

/// Relative roundoff allowance added to every term estimate.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

fn lp_term(field: &Field, domain: &BoxDomain, p: f64, n: usize, two_grid: bool) -> Result<(f64, Option<f64>, f64), QuadratureError> {
    let fine = GridFunction::sample(field, domain, n)?.lp_norm(p);
    let coarse = if two_grid && n >= 2 {
        Some(GridFunction::sample(field, domain, n / 2)?.lp_norm(p))
    } else {
        None
    };
    let err = coarse.map_or(0.0, |c| (fine - c).abs()) + ROUNDOFF * fine;
    Ok((fine, coarse, err))
}

struct SeminormParts {
    value: f64,
    coarse: Option<f64>,
    diagonal: f64,
    error: f64,
}

fn seminorm_of_grid(g: &GridFunction, theta: f64, p: f64) -> (f64, f64) {
    let sum = g.gagliardo_sum(theta, p, PairSum::Half);
    let value = sum.powf(1.0 / p);
    let missing = g.diagonal_bound(theta, p, g.lipschitz_estimate());
    (value, (sum + missing).powf(1.0 / p) - value)
}

fn seminorm_term(field: &Field, domain: &BoxDomain, theta: f64, p: f64, n: usize, two_grid: bool) -> Result<SeminormParts, QuadratureError> {
    let (value, diagonal) = seminorm_of_grid(&GridFunction::sample(field, domain, n)?, theta, p);
    let coarse = if two_grid && n >= 2 {
        Some(seminorm_of_grid(&GridFunction::sample(field, domain, n / 2)?, theta, p).0)
    } else {
        None
    };
    let error = coarse.map_or(0.0, |c| (value - c).abs()) + diagonal + ROUNDOFF * value;
    Ok(SeminormParts {
        value,
        coarse,
        diagonal,
        error,
    })
}

fn grid_info(domain: &BoxDomain, n: usize, two_grid: bool) -> GridInfo {
    GridInfo {
        cells_per_axis: n,
        coarse_cells_per_axis: (two_grid && n >= 2).then_some(n / 2),
        lo: domain.lo.clone(),
        hi: domain.hi.clone(),
        cell_volume: (0..domain.dim()).map(|a| domain.width(a) / n as f64).product(),
    }
}

fn check_field(field: &Field, domain: &BoxDomain) -> Result<(), QuadratureError> {
    if field.expr.arity() > domain.dim() {
        return Err(QuadratureError::DimensionMismatch {
            expected: domain.dim(),
            got: field.expr.arity(),
        });
    }
    Ok(())
}

/// Midpoint-rule `L^p` norm.
pub fn lp_norm(u: &Field, domain: &BoxDomain, p: f64, opts: QuadratureOptions) -> Result<NormReport, QuadratureError> {
    sobolev_norm(u, domain, 0.0, p, opts)
}

/// Midpoint-rule `L^p` norm of raw samples; the two-grid estimate uses the
/// source when there is one and `2^n`-cell block averages otherwise.
pub fn lp_norm_grid(g: &GridFunction, p: f64) -> Result<NormReport, QuadratureError> {
    check_p(p)?;
    let value = g.lp_norm(p);
    let cells = g.cells();
    let n = cells[0];
    let uniform = cells.iter().all(|c| *c == n);
    let coarse = match (&g.source, uniform && n >= 2 && n.is_multiple_of(2)) {
        (Some(src), true) => Some(GridFunction::sample(src, &g.domain, n / 2)?.lp_norm(p)),
        (None, true) => Some(block_average(g)?.lp_norm(p)),
        _ => None,
    };
    let error = coarse.map_or(0.0, |c| (value - c).abs()) + ROUNDOFF * value;
    Ok(NormReport {
        schema: crate::SCHEMA_VERSION,
        value,
        s: 0.0,
        p,
        variant: NormVariant::Seminorm,
        terms: vec![NormTerm {
            kind: TermKind::Lp,
            multi_index: vec![0; g.domain.dim()],
            theta: None,
            weight: 1.0,
            value,
            coarse_value: coarse,
            error_estimate: error,
            diagonal_bound: None,
        }],
        grid: GridInfo {
            cells_per_axis: n,
            coarse_cells_per_axis: coarse.map(|_| n / 2),
            lo: g.domain.lo.clone(),
            hi: g.domain.hi.clone(),
            cell_volume: g.cell_volume(),
        },
        error_estimate: error,
        variant_ratio: None,
    })
}

fn block_average(g: &GridFunction) -> Result<GridFunction, QuadratureError> {
    let n = g.cells()[0];
    let dim = g.domain.dim();
    let half = n / 2;
    let total = half.pow(dim as u32);
    let mut values = vec![0.0; total];
    for (idx, v) in g.values.iter().enumerate() {
        let mut rem = idx;
        let mut coarse = 0;
        let mut mul = 1;
        for _ in 0..dim {
            coarse += ((rem % n) / 2) * mul;
            mul *= half;
            rem /= n;
        }
        values[coarse] += v;
    }
    let scale = (1usize << dim) as f64;
    let ordered = values.into_iter().map(|v| v / scale).collect();
    GridFunction::from_values(&g.domain, half, ordered)
}

/// Gagliardo seminorm `|u|_{theta,p}` over the box.
pub fn gagliardo_seminorm(
    u: &Field,
    domain: &BoxDomain,
    theta: f64,
    p: f64,
    opts: QuadratureOptions,
) -> Result<NormReport, QuadratureError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(QuadratureError::ThetaOutOfRange(theta));
    }
    check_p(p)?;
    check_field(u, domain)?;
    let n = opts.grid.unwrap_or_else(|| default_grid(domain.dim()));
    check_grid(n)?;
    let parts = seminorm_term(u, domain, theta, p, n, opts.two_grid)?;
    Ok(NormReport {
        schema: crate::SCHEMA_VERSION,
        value: parts.value,
        s: theta,
        p,
        variant: opts.variant,
        terms: vec![NormTerm {
            kind: TermKind::Gagliardo,
            multi_index: vec![0; domain.dim()],
            theta: Some(theta),
            weight: 1.0,
            value: parts.value,
            coarse_value: parts.coarse,
            error_estimate: parts.error,
            diagonal_bound: Some(parts.diagonal),
        }],
        grid: grid_info(domain, n, opts.two_grid),
        error_estimate: parts.error,
        variant_ratio: None,
    })
}

/// Multi-indices of `n` variables with total degree `<= k`, by degree then
/// lexicographically descending.
pub fn multi_indices(n: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for deg in 0..=k {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, deg);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, axis: usize, left: u32) {
    if axis + 1 == cur.len() {
        cur[axis] = left;
        out.push(cur.clone());
        return;
    }
    for take in (0..=left).rev() {
        cur[axis] = take;
        fill(out, cur, axis + 1, left - take);
    }
    cur[axis] = 0;
}

/// Every `d^nu u` with `|nu| <= k`, in [`multi_indices`] order.
pub fn partial_derivatives(u: &Field, n: usize, k: u32) -> Vec<(Vec<u32>, Field)> {
    let mut done: Vec<(Vec<u32>, Field)> = Vec::new();
    for nu in multi_indices(n, k) {
        let field = match nu.iter().position(|d| *d > 0) {
            None => u.clone(),
            Some(axis) => {
                let mut parent = nu.clone();
                parent[axis] -= 1;
                let base = &done.iter().find(|(m, _)| *m == parent).expect("parent precedes").1;
                base.derivative(axis)
            }
        };
        done.push((nu, field));
    }
    done
}

/// `W^{s,p}` norm on the box: `L^p` norms of all derivatives up to order
/// `floor(s)` plus Gagliardo seminorms of the top-order derivatives.
pub fn sobolev_norm(
    u: &Field,
    domain: &BoxDomain,
    s: f64,
    p: f64,
    opts: QuadratureOptions,
) -> Result<NormReport, QuadratureError> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(QuadratureError::InvalidOrder(s));
    }
    check_p(p)?;
    check_field(u, domain)?;
    let dim = domain.dim();
    let n = opts.grid.unwrap_or_else(|| default_grid(dim));
    check_grid(n)?;
    let k = s.floor() as u32;
    let theta = s - k as f64;
    let fractional = theta > 1e-12;

    let mut terms = Vec::new();
    let mut top_lp = 0.0;
    let mut seminorms = 0.0;
    let mut lower = 0.0;
    for (nu, field) in partial_derivatives(u, dim, k) {
        let top = nu.iter().sum::<u32>() == k;
        let (value, coarse, err) = lp_term(&field, domain, p, n, opts.two_grid)?;
        let weight = if top && fractional && opts.variant == NormVariant::FullNorm {
            2.0
        } else {
            1.0
        };
        if top && fractional {
            top_lp += value;
        } else {
            lower += value;
        }
        terms.push(NormTerm {
            kind: TermKind::Lp,
            multi_index: nu.clone(),
            theta: None,
            weight,
            value,
            coarse_value: coarse,
            error_estimate: err,
            diagonal_bound: None,
        });
        if top && fractional {
            let parts = seminorm_term(&field, domain, theta, p, n, opts.two_grid)?;
            seminorms += parts.value;
            terms.push(NormTerm {
                kind: TermKind::Gagliardo,
                multi_index: nu,
                theta: Some(theta),
                weight: 1.0,
                value: parts.value,
                coarse_value: parts.coarse,
                error_estimate: parts.error,
                diagonal_bound: Some(parts.diagonal),
            });
        }
    }
    let value: f64 = terms.iter().map(|t| t.weight * t.value).sum();
    let error_estimate = terms.iter().map(|t| t.weight * t.error_estimate).sum();
    let variant_ratio = fractional.then(|| {
        let semi = lower + top_lp + seminorms;
        let full = lower + 2.0 * top_lp + seminorms;
        let (this, other) = match opts.variant {
            NormVariant::Seminorm => (semi, full),
            NormVariant::FullNorm => (full, semi),
        };
        if this == 0.0 {
            1.0
        } else {
            other / this
        }
    });
    Ok(NormReport {
        schema: crate::SCHEMA_VERSION,
        value,
        s,
        p,
        variant: opts.variant,
        terms,
        grid: grid_info(domain, n, opts.two_grid),
        error_estimate,
        variant_ratio,
    })
}

/// Top-order part of the `W^{s,p}` norm: `sum_{|nu|=k} |d^nu u|_{theta,p}`
/// for fractional `s = k + theta`, and `sum_{|nu|=s} ||d^nu u||_{L^p}` for
/// integer `s`.
pub fn sobolev_seminorm(
    u: &Field,
    domain: &BoxDomain,
    s: f64,
    p: f64,
    opts: QuadratureOptions,
) -> Result<NormReport, QuadratureError> {
    let full = sobolev_norm(
        u,
        domain,
        s,
        p,
        QuadratureOptions {
            variant: NormVariant::Seminorm,
            ..opts
        },
    )?;
    let k = s.floor() as u32;
    let fractional = s - k as f64 > 1e-12;
    let terms: Vec<NormTerm> = full
        .terms
        .into_iter()
        .filter(|t| {
            let top = t.multi_index.iter().sum::<u32>() == k;
            top && (t.kind == TermKind::Gagliardo || !fractional)
        })
        .collect();
    Ok(NormReport {
        value: terms.iter().map(|t| t.weight * t.value).sum(),
        error_estimate: terms.iter().map(|t| t.weight * t.error_estimate).sum(),
        terms,
        variant_ratio: None,
        ..full
    })
}

/// Zero extension of `u` from `inner` to `outer` on an `N^n` grid of `outer`.
///
/// `support` is the declared compact support of `u` inside `inner`; `u` is
/// sampled on the inner grid cells outside `support` and must not exceed
/// `tolerance` there.
pub fn extend_by_zero(
    u: &Expr,
    support: &BoxDomain,
    inner: &BoxDomain,
    outer: &BoxDomain,
    n_cells: usize,
    tolerance: f64,
) -> Result<GridFunction, QuadratureError> {
    if !outer.contains_box(inner) {
        return Err(QuadratureError::NotContained("inner box is not inside the outer box".into()));
    }
    if !inner.contains_box(support) {
        return Err(QuadratureError::NotContained("support box is not inside the inner box".into()));
    }
    check_grid(n_cells)?;
    let probe = GridFunction::sample(&Field::new(u.clone()), inner, n_cells)?;
    for (idx, v) in probe.values.iter().enumerate() {
        let x = probe.point(idx);
        if !support.contains_interior(&x) && v.abs() > tolerance {
            return Err(QuadratureError::SupportViolation { point: x, value: *v });
        }
    }
    GridFunction::sample(&Field::supported(u.clone(), inner.clone()), outer, n_cells)
}
