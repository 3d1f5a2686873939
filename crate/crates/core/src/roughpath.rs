//! Branched rough paths: samplers of truncated tree series over time
//! intervals, their validation, and constructions from sampled paths.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hopf::{self, HopfError, HopfVariant};
use crate::series::{bullet, FloatSeries, SeriesError};
use crate::text::{self, ParseError};
use crate::words::{self, ladder, phi_embed, WordSeries, LEVEL_CAP};

/// Default tolerance for validating float data.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Default tolerance for checks on exactly constructed objects.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RoughPathError {
    #[error("time pair ({s}, {t}) outside the domain [{lo}, {hi}]")]
    OutOfDomain { s: f64, t: f64, lo: f64, hi: f64 },
    #[error("time {t} is not a grid point of the sampled path")]
    OffGrid { t: f64 },
    #[error("exponent p = {p} must satisfy 1 <= p < {}", LEVEL_CAP + 1)]
    InvalidExponent { p: f64 },
    #[error("level {level} exceeds the cap {cap}")]
    LevelCap { level: usize, cap: usize },
    #[error("degenerate time grid: {0}")]
    DegenerateGrid(String),
    #[error("Chen relation violated on ({s}, {t}, {u}): residual {residual:e}")]
    ChenPrecondition { s: f64, t: f64, u: f64, residual: f64 },
    #[error("malformed input: {0}")]
    Input(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Hopf(#[from] HopfError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Sampler = Arc<dyn Fn(f64, f64) -> Result<FloatSeries, RoughPathError> + Send + Sync>;

/// A two-parameter control `ω(s, t)` on `[lo, hi]`.
#[derive(Clone)]
pub struct Control {
    evaluator: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    domain: (f64, f64),
}

impl Control {
    pub fn new(domain: (f64, f64), evaluator: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Control {
            evaluator: Arc::new(evaluator),
            domain,
        }
    }

    /// `ω(s, t) = rate · (t - s)`.
    pub fn linear(domain: (f64, f64), rate: f64) -> Self {
        Control::new(domain, move |s, t| rate * (t - s))
    }

    pub fn eval(&self, s: f64, t: f64) -> f64 {
        (self.evaluator)(s, t)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

impl fmt::Debug for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Control")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// A branched `p`-rough path: `(s, t) ↦ x_{s,t}` truncated at `⌊p⌋`.
#[derive(Clone)]
pub struct BranchedRoughPath {
    p: f64,
    level: usize,
    dim: usize,
    domain: (f64, f64),
    sampler: Sampler,
    control: Control,
}

impl fmt::Debug for BranchedRoughPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BranchedRoughPath")
            .field("p", &self.p)
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

pub fn level_for(p: f64) -> Result<usize, RoughPathError> {
    if !(1.0..(LEVEL_CAP + 1) as f64).contains(&p) {
        return Err(RoughPathError::InvalidExponent { p });
    }
    Ok(p.floor() as usize)
}

impl BranchedRoughPath {
    pub fn new(
        p: f64,
        dim: usize,
        domain: (f64, f64),
        sampler: Sampler,
        control: Control,
    ) -> Result<Self, RoughPathError> {
        let level = level_for(p)?;
        if dim == 0 {
            return Err(SeriesError::ZeroDimension.into());
        }
        if domain.0.partial_cmp(&domain.1) != Some(std::cmp::Ordering::Less) {
            return Err(RoughPathError::DegenerateGrid(format!("empty domain {domain:?}")));
        }
        Ok(BranchedRoughPath {
            p,
            level,
            dim,
            domain,
            sampler,
            control,
        })
    }

    /// The trivial path `x_{s,t} = 1`.
    pub fn constant(p: f64, dim: usize, domain: (f64, f64)) -> Result<Self, RoughPathError> {
        let level = level_for(p)?;
        let sampler: Sampler = Arc::new(move |_, _| Ok(FloatSeries::unit(dim).with_truncation(Some(level))));
        Self::new(p, dim, domain, sampler, Control::linear(domain, 0.0))
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn control(&self) -> &Control {
        &self.control
    }

    pub fn with_control(mut self, control: Control) -> Self {
        self.control = control;
        self
    }

    /// Replaces the sampler, keeping `p`, dimension, domain and control.
    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    /// `x_{s,t}`, truncated at the path's level.
    pub fn sample(&self, s: f64, t: f64) -> Result<FloatSeries, RoughPathError> {
        let (lo, hi) = self.domain;
        let slack = 1e-12 * (hi - lo);
        if !(s <= t && s >= lo - slack && t <= hi + slack) {
            return Err(RoughPathError::OutOfDomain { s, t, lo, hi });
        }
        Ok((self.sampler)(s, t)?
            .truncate(self.level)
            .with_truncation(Some(self.level)))
    }
}

/// Per-degree residuals of `x_{s,u} - x_{s,t} ⋆ x_{t,u}`.
#[derive(Debug, Clone, Serialize)]
pub struct ChenReport {
    pub times: (f64, f64, f64),
    /// Euclidean norm of the residual in each degree `1..=level`.
    pub residual_by_degree: Vec<f64>,
    /// Tree with the largest residual coefficient and that coefficient.
    pub worst: Option<(String, f64)>,
    pub passed: bool,
}

pub fn chen_check(x: &BranchedRoughPath, s: f64, t: f64, u: f64, tol: f64) -> Result<ChenReport, RoughPathError> {
    if !(s <= t && t <= u) {
        let (lo, hi) = x.domain();
        return Err(RoughPathError::OutOfDomain { s, t: u, lo, hi });
    }
    let su = x.sample(s, u)?;
    let st = x.sample(s, t)?;
    let tu = x.sample(t, u)?;
    let diff = su.sub(&hopf::star(&st, &tu)?)?;
    let residual_by_degree: Vec<f64> = (1..=x.level()).map(|k| diff.degree_norm(k)).collect();
    let worst = diff
        .terms()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(tree, c)| (tree.to_string(), *c));
    let passed = diff.terms().all(|(_, c)| c.abs() <= tol);
    Ok(ChenReport {
        times: (s, t, u),
        residual_by_degree,
        worst,
        passed,
    })
}

/// Piecewise-linear path through `points` at `times`.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl PiecewiseLinear {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self, RoughPathError> {
        if times.len() < 2 || times.len() != points.len() {
            return Err(RoughPathError::DegenerateGrid(format!(
                "{} times for {} points",
                times.len(),
                points.len()
            )));
        }
        if let Some(w) = times
            .windows(2)
            .find(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(RoughPathError::DegenerateGrid(format!(
                "times not increasing at {}",
                w[1]
            )));
        }
        let d = points[0].len();
        if d == 0 || points.iter().any(|p| p.len() != d) {
            return Err(RoughPathError::DegenerateGrid("inconsistent point dimensions".into()));
        }
        Ok(PiecewiseLinear { times, points })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().expect("nonempty"))
    }

    pub fn value_at(&self, t: f64) -> Vec<f64> {
        let k = self.segment_index(t);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        self.points[k]
            .iter()
            .zip(&self.points[k + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    fn segment_index(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&x| x <= t);
        k.saturating_sub(1).min(self.times.len() - 2)
    }

    /// Largest segment speed `|Δx| / Δt`.
    pub fn lipschitz(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.points.windows(2))
            .map(|(t, p)| {
                let norm = p[0].iter().zip(&p[1]).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
                norm / (t[1] - t[0])
            })
            .fold(0.0, f64::max)
    }

    /// Signature over `[s, t]`: tensor exponentials of the segment
    /// increments, multiplied in time order.
    pub fn signature(&self, s: f64, t: f64, level: usize) -> Result<WordSeries<f64>, RoughPathError> {
        if level > LEVEL_CAP {
            return Err(RoughPathError::LevelCap { level, cap: LEVEL_CAP });
        }
        let (lo, hi) = self.domain();
        if !(s <= t && s >= lo && t <= hi) {
            return Err(RoughPathError::OutOfDomain { s, t, lo, hi });
        }
        let d = self.dim();
        let mut sig = WordSeries::unit(d, level);
        if s == t {
            return Ok(sig);
        }
        let mut knots = vec![s];
        knots.extend(self.times.iter().copied().filter(|&u| u > s && u < t));
        knots.push(t);
        let mut prev = self.value_at(s);
        for &u in &knots[1..] {
            let next = self.value_at(u);
            let inc: Vec<f64> = next.iter().zip(&prev).map(|(a, b)| a - b).collect();
            sig = sig.concat(&WordSeries::exp_increment(&inc, level))?;
            prev = next;
        }
        Ok(sig)
    }
}

/// Canonical branched lift of a piecewise-linear path: `Φ` applied to its
/// signature, controlled by `ω(s, t) = L (t - s)` with `L` the path's
/// Lipschitz constant.
pub fn branched_lift_pl(path: &PiecewiseLinear, p: f64) -> Result<BranchedRoughPath, RoughPathError> {
    let level = level_for(p)?;
    let domain = path.domain();
    let control = Control::linear(domain, path.lipschitz());
    let owned = Arc::new(path.clone());
    let sampler: Sampler = Arc::new(move |s, t| Ok(phi_embed(&owned.signature(s, t, level)?)));
    BranchedRoughPath::new(p, path.dim(), domain, sampler, control)
}

/// The word series read off from the ladder components of `x_{s,t}`.
pub fn phi_preimage_at(x: &BranchedRoughPath, s: f64, t: f64) -> Result<WordSeries<f64>, RoughPathError> {
    Ok(words::phi_preimage(&x.sample(s, t)?, x.level()))
}

pub type Level1 = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;
/// Row-major `d × d` matrix whose `(i, j)` entry is the iterated integral
/// "first `i`, then `j`", stored on the ladder with `j` next to the root.
pub type Level2 = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

/// The level-2 branched path `exp_∘(Σ X^i o(i) + Σ X^{ij} o(j(i)))` built from
/// first-level increments and ladder data.
///
/// The Chen relations for both levels are checked on consecutive triples of
/// `check_grid` before the path is returned.
pub fn ito_level2_lift(
    dim: usize,
    p: f64,
    level1: Level1,
    ladder_data: Level2,
    control: Control,
    check_grid: &[f64],
    tol: f64,
) -> Result<BranchedRoughPath, RoughPathError> {
    let level = level_for(p)?;
    if level != 2 {
        return Err(RoughPathError::InvalidExponent { p });
    }
    for w in check_grid.windows(3) {
        let (s, t, u) = (w[0], w[1], w[2]);
        let (a, b, c) = (level1(s, t), level1(t, u), level1(s, u));
        let (la, lb, lc) = (ladder_data(s, t), ladder_data(t, u), ladder_data(s, u));
        if a.len() != dim || la.len() != dim * dim {
            return Err(RoughPathError::Input(format!(
                "expected {dim} first-level and {} second-level entries",
                dim * dim
            )));
        }
        let mut residual = 0.0f64;
        for i in 0..dim {
            residual = residual.max((c[i] - a[i] - b[i]).abs());
            for j in 0..dim {
                let expect = la[i * dim + j] + lb[i * dim + j] + a[i] * b[j];
                residual = residual.max((lc[i * dim + j] - expect).abs());
            }
        }
        if residual > tol {
            return Err(RoughPathError::ChenPrecondition { s, t, u, residual });
        }
    }
    let domain = control.domain();
    let sampler: Sampler = Arc::new(move |s, t| {
        let (x1, x2) = (level1(s, t), ladder_data(s, t));
        let mut generator = FloatSeries::zero(dim).with_truncation(Some(2));
        for i in 0..dim {
            generator.add_term(bullet(i as u32 + 1), x1[i])?;
            for j in 0..dim {
                generator.add_term(ladder(&[i as u32 + 1, j as u32 + 1]), x2[i * dim + j])?;
            }
        }
        Ok(hopf::exp_circ(&generator)?)
    });
    BranchedRoughPath::new(p, dim, domain, sampler, control)
}

/// Findings of [`validate_rough_path`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub chen_max_residual: f64,
    /// `(s, t, u)` and tree of the worst Chen residual.
    pub chen_worst: Option<String>,
    pub group_like_max_residual: f64,
    pub group_like_worst: Option<String>,
    /// Smallest `C` with `‖π^k x_{s,t}‖ <= C ω(s,t)^{k/p}` over the grid pairs.
    pub fitted_constant: f64,
    pub bound_ok: bool,
    pub control_ok: bool,
    pub control_issue: Option<String>,
    pub passed: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "ok" } else { "FAILED" };
        writeln!(f, "chen:       max residual {:.3e}", self.chen_max_residual)?;
        if let Some(w) = &self.chen_worst {
            writeln!(f, "            worst at {w}")?;
        }
        writeln!(f, "group-like: max residual {:.3e}", self.group_like_max_residual)?;
        if let Some(w) = &self.group_like_worst {
            writeln!(f, "            worst at {w}")?;
        }
        writeln!(
            f,
            "bound:      fitted constant {:.6e} ({})",
            self.fitted_constant,
            verdict(self.bound_ok)
        )?;
        write!(f, "control:    {}", verdict(self.control_ok))?;
        if let Some(issue) = &self.control_issue {
            write!(f, " ({issue})")?;
        }
        writeln!(f)?;
        write!(f, "verdict:    {}", verdict(self.passed))
    }
}

/// Options for [`validate_rough_path`].
#[derive(Debug, Clone, Copy)]
pub struct ValidationOptions {
    pub tol: f64,
    /// If set, the fitted bound constant must not exceed this value.
    pub bound_constant: Option<f64>,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            tol: VALIDATION_TOL,
            bound_constant: None,
        }
    }
}

/// Runs Chen checks on consecutive grid triples (and on first, middle, last),
/// group-likeness on consecutive pairs and the whole window, the control
/// bound on every grid pair, and an audit of the control itself.
pub fn validate_rough_path(
    x: &BranchedRoughPath,
    grid: &[f64],
    opts: ValidationOptions,
) -> Result<ValidationReport, RoughPathError> {
    if grid.len() < 3 {
        return Err(RoughPathError::DegenerateGrid(
            "validation needs at least 3 grid points".into(),
        ));
    }
    let tol = opts.tol;
    let mut triples: Vec<(f64, f64, f64)> = grid.windows(3).map(|w| (w[0], w[1], w[2])).collect();
    triples.push((grid[0], grid[grid.len() / 2], grid[grid.len() - 1]));

    let chen: Vec<ChenReport> = triples
        .par_iter()
        .map(|&(s, t, u)| chen_check(x, s, t, u, tol))
        .collect::<Result<_, _>>()?;
    let mut chen_max_residual = 0.0f64;
    let mut chen_worst = None;
    for r in &chen {
        if let Some((tree, c)) = &r.worst {
            if c.abs() > chen_max_residual {
                chen_max_residual = c.abs();
                chen_worst = Some(format!("({}, {}, {}) on {tree}", r.times.0, r.times.1, r.times.2));
            }
        }
    }

    let mut pairs: Vec<(f64, f64)> = grid.windows(2).map(|w| (w[0], w[1])).collect();
    pairs.push((grid[0], grid[grid.len() - 1]));
    let group: Vec<(f64, Option<String>)> = pairs
        .par_iter()
        .map(|&(s, t)| {
            let g = x.sample(s, t)?;
            let report = hopf::is_group_like(&g, HopfVariant::GrossmanLarson, x.level(), tol);
            let counit_err = (report.counit - 1.0).abs();
            let (mag, at) = match report.offending {
                Some((l, r, c)) if c.abs() >= counit_err => (c.abs(), Some(format!("({s}, {t}) on {l} ⊗ {r}"))),
                _ if counit_err > 0.0 => (counit_err, Some(format!("({s}, {t}) counit {}", report.counit))),
                _ => (0.0, None),
            };
            Ok((mag, at))
        })
        .collect::<Result<_, RoughPathError>>()?;
    let (group_like_max_residual, group_like_worst) =
        group
            .into_iter()
            .fold((0.0f64, None), |acc, (m, at)| if m > acc.0 { (m, at) } else { acc });

    let all_pairs: Vec<(f64, f64)> = (0..grid.len())
        .flat_map(|i| (i + 1..grid.len()).map(move |j| (i, j)))
        .map(|(i, j)| (grid[i], grid[j]))
        .collect();
    let ratios: Vec<f64> = all_pairs
        .par_iter()
        .map(|&(s, t)| {
            let xs = x.sample(s, t)?;
            let w = x.control().eval(s, t);
            let mut worst = 0.0f64;
            for k in 1..=x.level() {
                let norm = xs.degree_norm(k);
                let ratio = if norm <= tol {
                    0.0
                } else if w <= 0.0 {
                    f64::INFINITY
                } else {
                    norm / w.powf(k as f64 / x.p())
                };
                worst = worst.max(ratio);
            }
            Ok(worst)
        })
        .collect::<Result<_, RoughPathError>>()?;
    let fitted_constant = ratios.into_iter().fold(0.0, f64::max);
    let bound_ok = fitted_constant.is_finite() && opts.bound_constant.is_none_or(|c| fitted_constant <= c);

    let control_issue = audit_control(x.control(), grid, tol);
    let control_ok = control_issue.is_none();
    let passed = chen_max_residual <= tol && group_like_max_residual <= tol && bound_ok && control_ok;
    Ok(ValidationReport {
        chen_max_residual,
        chen_worst,
        group_like_max_residual,
        group_like_worst,
        fitted_constant,
        bound_ok,
        control_ok,
        control_issue,
        passed,
    })
}

fn audit_control(control: &Control, grid: &[f64], tol: f64) -> Option<String> {
    for &s in grid {
        let w = control.eval(s, s);
        if w.abs() > tol {
            return Some(format!("ω({s}, {s}) = {w}"));
        }
    }
    let mut triples: Vec<(f64, f64, f64)> = grid.windows(3).map(|w| (w[0], w[1], w[2])).collect();
    triples.push((grid[0], grid[grid.len() / 2], grid[grid.len() - 1]));
    for (s, t, u) in triples {
        let (a, b, c) = (control.eval(s, t), control.eval(t, u), control.eval(s, u));
        if a < -tol || b < -tol {
            return Some(format!("negative control on ({s}, {t}, {u})"));
        }
        if a + b > c + tol * (1.0 + c.abs()) {
            return Some(format!("ω({s},{t}) + ω({t},{u}) = {} > ω({s},{u}) = {c}", a + b));
        }
    }
    None
}

/// On-disk sampled rough path: per-interval components over a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub p: f64,
    pub d: usize,
    pub times: Vec<f64>,
    /// Canonical tree text to one value per grid interval.
    pub components: BTreeMap<String, Vec<f64>>,
}

impl SampleFile {
    /// Samples `x` on consecutive intervals of `times`.
    pub fn from_path(x: &BranchedRoughPath, times: &[f64]) -> Result<Self, RoughPathError> {
        let intervals = times.len().saturating_sub(1);
        let mut components: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (k, w) in times.windows(2).enumerate() {
            for (tree, c) in x.sample(w[0], w[1])?.terms() {
                if tree.is_unit() {
                    continue;
                }
                components
                    .entry(tree.to_string())
                    .or_insert_with(|| vec![0.0; intervals])[k] = *c;
            }
        }
        Ok(SampleFile {
            p: x.p(),
            d: x.dim(),
            times: times.to_vec(),
            components,
        })
    }

    pub fn read(reader: impl Read) -> Result<Self, RoughPathError> {
        serde_json::from_reader(reader).map_err(|e| RoughPathError::Input(e.to_string()))
    }

    pub fn write(&self, writer: impl Write) -> Result<(), RoughPathError> {
        serde_json::to_writer_pretty(writer, self).map_err(|e| RoughPathError::Input(e.to_string()))
    }

    /// Rough path whose `x_{s,t}` for grid points `s <= t` is the ⋆-product
    /// of the interval samples in between. Its control is
    /// `ω(s,t) = Σ_intervals max_k ‖π^k‖^{p/k}`, which is additive.
    pub fn into_path(self) -> Result<BranchedRoughPath, RoughPathError> {
        let level = level_for(self.p)?;
        let n = self.times.len();
        if n < 2 {
            return Err(RoughPathError::DegenerateGrid("need at least two times".into()));
        }
        if self
            .times
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(RoughPathError::DegenerateGrid("times must increase".into()));
        }
        let mut increments = vec![FloatSeries::unit(self.d).with_truncation(Some(level)); n - 1];
        for (code, values) in &self.components {
            if values.len() != n - 1 {
                return Err(RoughPathError::Input(format!(
                    "component {code} has {} values for {} intervals",
                    values.len(),
                    n - 1
                )));
            }
            let tree = text::parse_tree(code)?;
            crate::series::check_labels(&tree, self.d)?;
            for (inc, v) in increments.iter_mut().zip(values) {
                inc.add_term(tree.clone(), *v)?;
            }
        }
        let mut cumulative = vec![0.0];
        for inc in &increments {
            let w: f64 = (1..=level)
                .map(|k| inc.degree_norm(k).powf(self.p / k as f64))
                .fold(0.0, f64::max);
            cumulative.push(cumulative.last().expect("nonempty") + w);
        }
        let times = Arc::new(self.times);
        let increments = Arc::new(increments);
        let locate = {
            let times = times.clone();
            move |t: f64| -> Result<usize, RoughPathError> {
                let scale = 1e-12 * (times[times.len() - 1] - times[0]).abs().max(1.0);
                let k = times.partition_point(|&x| x < t - scale);
                if k < times.len() && (times[k] - t).abs() <= scale {
                    Ok(k)
                } else {
                    Err(RoughPathError::OffGrid { t })
                }
            }
        };
        let domain = (times[0], times[n - 1]);
        let dim = self.d;
        let locate_s = locate.clone();
        let sampler: Sampler = Arc::new(move |s, t| {
            let (i, j) = (locate_s(s)?, locate_s(t)?);
            let mut acc = FloatSeries::unit(dim).with_truncation(Some(level));
            for inc in &increments[i..j] {
                acc = hopf::star(&acc, inc)?;
            }
            Ok(acc)
        });
        let cumulative = Arc::new(cumulative);
        let control = Control::new(domain, move |s, t| match (locate(s), locate(t)) {
            (Ok(i), Ok(j)) if i <= j => cumulative[j] - cumulative[i],
            _ => f64::NAN,
        });
        BranchedRoughPath::new(self.p, dim, domain, sampler, control)
    }
}

/// Reads a piecewise-linear path from CSV rows `t,x1,…,xd`. A first row that
/// does not parse as numbers is treated as a header.
pub fn read_pl_csv(reader: impl Read) -> Result<PiecewiseLinear, RoughPathError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| RoughPathError::Input(e.to_string()))?;
        let values: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match values {
            Ok(v) if v.len() >= 2 => {
                times.push(v[0]);
                points.push(v[1..].to_vec());
            }
            Ok(_) => {
                return Err(RoughPathError::Input(format!(
                    "row {}: need t and at least one coordinate",
                    row + 1
                )))
            }
            Err(_) if row == 0 => continue,
            Err(e) => return Err(RoughPathError::Input(format!("row {}: {e}", row + 1))),
        }
    }
    PiecewiseLinear::new(times, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::LabelledTree;

    fn zigzag() -> PiecewiseLinear {
        PiecewiseLinear::new(
            vec![0.0, 0.25, 0.5, 1.0],
            vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![0.5, 1.5], vec![2.0, 1.0]],
        )
        .unwrap()
    }

    fn tree(code: &str) -> LabelledTree {
        text::parse_tree(code).unwrap()
    }

    #[test]
    fn constant_path_has_no_residual() {
        let x = BranchedRoughPath::constant(2.5, 2, (0.0, 1.0)).unwrap();
        let r = chen_check(&x, 0.0, 0.3, 1.0, 0.0).unwrap();
        assert!(r.passed);
        assert_eq!(r.residual_by_degree, vec![0.0, 0.0]);
    }

    #[test]
    fn level_one_lift_of_a_line() {
        let path = PiecewiseLinear::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![2.0, -1.0]]).unwrap();
        let x = branched_lift_pl(&path, 1.5).unwrap();
        let xs = x.sample(0.25, 0.75).unwrap();
        assert_eq!(xs.len(), 3);
        assert!((xs.coefficient(&bullet(1)) - 1.0).abs() < 1e-15);
        assert!((xs.coefficient(&bullet(2)) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn cherry_is_half_outer_product_on_a_segment() {
        let path = PiecewiseLinear::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], vec![2.0, 3.0]]).unwrap();
        let x = branched_lift_pl(&path, 2.0).unwrap().sample(0.0, 1.0).unwrap();
        assert!((x.coefficient(&tree("o(1 2)")) - 6.0).abs() < 1e-14);
        assert!((x.coefficient(&tree("o(1 1)")) - 2.0).abs() < 1e-14);
        assert!((x.coefficient(&tree("o(2(1))")) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn pl_lift_is_chen_and_group_like() {
        let x = branched_lift_pl(&zigzag(), 3.5).unwrap();
        let r = chen_check(&x, 0.1, 0.4, 0.9, CONSTRUCTION_TOL).unwrap();
        assert!(r.passed, "{r:?}");
        let grid = [0.0, 0.1, 0.3, 0.5, 0.7, 1.0];
        let report = validate_rough_path(&x, &grid, ValidationOptions::default()).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn corrupted_cherry_is_named() {
        let base = branched_lift_pl(&zigzag(), 2.0).unwrap();
        let inner = base.sampler().clone();
        let corrupted: Sampler = Arc::new(move |s, t| {
            let mut x = inner(s, t)?;
            if s < 0.5 && t > 0.7 {
                x.add_term(tree("o(1 2)"), 1e-3)?;
            }
            Ok(x)
        });
        let x = base.with_sampler(corrupted);
        let r = chen_check(&x, 0.2, 0.6, 0.8, 1e-9).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst.unwrap().0, "o(1 2)");
    }

    #[test]
    fn non_vanishing_control_is_flagged() {
        let x = branched_lift_pl(&zigzag(), 2.0)
            .unwrap()
            .with_control(Control::new((0.0, 1.0), |_, _| 1.0));
        let report = validate_rough_path(&x, &[0.0, 0.5, 1.0], ValidationOptions::default()).unwrap();
        assert!(!report.control_ok);
        assert!(!report.passed);
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let x = branched_lift_pl(&zigzag(), 2.0).unwrap();
        assert!(matches!(x.sample(-0.5, 0.5), Err(RoughPathError::OutOfDomain { .. })));
        assert!(matches!(x.sample(0.6, 0.5), Err(RoughPathError::OutOfDomain { .. })));
        assert!(matches!(
            branched_lift_pl(&zigzag(), 5.0),
            Err(RoughPathError::InvalidExponent { .. })
        ));
        assert!(matches!(
            zigzag().signature(0.0, 1.0, 5),
            Err(RoughPathError::LevelCap { .. })
        ));
    }

    #[test]
    fn straight_line_ito_data_matches_pl_lift() {
        let a = [1.5, -0.5];
        let level1: Level1 = Arc::new(move |s, t| a.iter().map(|v| v * (t - s)).collect());
        let ladder_data: Level2 = Arc::new(move |s, t| {
            let h = t - s;
            (0..4).map(|k| 0.5 * a[k / 2] * a[k % 2] * h * h).collect()
        });
        let grid: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let x = ito_level2_lift(
            2,
            2.0,
            level1,
            ladder_data,
            Control::linear((0.0, 1.0), 2.0),
            &grid,
            1e-12,
        )
        .unwrap();
        let path = PiecewiseLinear::new(vec![0.0, 1.0], vec![vec![0.0, 0.0], a.to_vec()]).unwrap();
        let y = branched_lift_pl(&path, 2.0).unwrap();
        assert!(x
            .sample(0.2, 0.7)
            .unwrap()
            .approx_eq(&y.sample(0.2, 0.7).unwrap(), 1e-14));
    }

    #[test]
    fn ladder_chen_violation_is_rejected() {
        let level1: Level1 = Arc::new(|s, t| vec![t - s]);
        let ladder_data: Level2 = Arc::new(|s, t| vec![(t - s) * (t - s)]);
        let err = ito_level2_lift(
            1,
            2.0,
            level1,
            ladder_data,
            Control::linear((0.0, 1.0), 1.0),
            &[0.0, 0.5, 1.0],
            1e-9,
        )
        .unwrap_err();
        assert!(matches!(err, RoughPathError::ChenPrecondition { .. }));
    }

    #[test]
    fn sample_file_round_trip() {
        let x = branched_lift_pl(&zigzag(), 2.0).unwrap();
        let times = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let file = SampleFile::from_path(&x, &times).unwrap();
        let mut buf = Vec::new();
        file.write(&mut buf).unwrap();
        let back = SampleFile::read(buf.as_slice()).unwrap();
        assert_eq!(back, file);
        let y = back.into_path().unwrap();
        assert!(y
            .sample(0.25, 1.0)
            .unwrap()
            .approx_eq(&x.sample(0.25, 1.0).unwrap(), 1e-12));
        assert!(matches!(y.sample(0.3, 0.5), Err(RoughPathError::OffGrid { .. })));
        let report = validate_rough_path(&y, &times, ValidationOptions::default()).unwrap();
        assert!(report.passed, "{report}");
    }

    #[test]
    fn csv_with_and_without_header() {
        let with = "t,x1,x2\n0,0,0\n0.5,1,2\n1,0,1\n";
        let without = "0,0,0\n0.5,1,2\n1,0,1\n";
        let a = read_pl_csv(with.as_bytes()).unwrap();
        let b = read_pl_csv(without.as_bytes()).unwrap();
        assert_eq!(a.points(), b.points());
        assert_eq!(a.dim(), 2);
        assert!(read_pl_csv("0,1\n0,2\n".as_bytes()).is_err());
        assert!(read_pl_csv("0,1\nx,2\n".as_bytes()).is_err());
    }
}
