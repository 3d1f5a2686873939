//! Elementary differentials `Ψ_{V,f,y}`, the Davie-type Euler scheme and
//! remainder probes.

use std::io::Write;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::poly::{accumulate_outer, IdentityMap, SmoothMap, TensorPower, VectorFieldFamily};
use crate::roughpath::{BranchedRoughPath, RoughPathError};
use crate::series::{FloatSeries, LabelledTree};
use crate::tree::Node;

#[derive(Debug, Error)]
pub enum RdeError {
    #[error("{what} needs derivatives of order {needed}, oracle supports {available}")]
    InsufficientOrder {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("label {label} has no vector field (d = {dim})")]
    LabelOutOfRange { label: u32, dim: usize },
    #[error("increment has unit coefficient {0}, expected 1")]
    NonUnitCounit(f64),
    #[error("partition must be strictly increasing with at least two points inside the path's domain")]
    BadPartition,
    #[error("remainder probe needs at least 3 scales, got {0}")]
    DegenerateFit(usize),
    #[error("time {0} is not a point of the discrete solution")]
    OffGrid(f64),
    #[error(transparent)]
    RoughPath(#[from] RoughPathError),
}

fn node_value(v: &dyn VectorFieldFamily, y: &[f64], node: &Node<u32>) -> Result<Vec<f64>, RdeError> {
    let label = node.label;
    if label == 0 || label as usize > v.driver_dim() {
        return Err(RdeError::LabelOutOfRange {
            label,
            dim: v.driver_dim(),
        });
    }
    let arity = node.children.len();
    if arity > v.max_order() {
        return Err(RdeError::InsufficientOrder {
            what: "vector field",
            needed: arity,
            available: v.max_order(),
        });
    }
    let children: Vec<Vec<f64>> = node
        .children
        .iter()
        .map(|c| node_value(v, y, c))
        .collect::<Result<_, _>>()?;
    let dirs: Vec<&[f64]> = children.iter().map(Vec::as_slice).collect();
    Ok(v.derivative(label as usize, y, &dirs))
}

fn check_dims(v: &dyn VectorFieldFamily, f: &dyn SmoothMap, y: &[f64]) -> Result<(), RdeError> {
    if y.len() != v.state_dim() || f.input_dim() != v.state_dim() {
        return Err(RdeError::Dimension(format!(
            "state {} / fields on R^{} / map on R^{}",
            y.len(),
            v.state_dim(),
            f.input_dim()
        )));
    }
    Ok(())
}

/// `Ψ_{V,f,y}(t)`: each vertex labelled `i` with `c` children contributes
/// `V_i^{(c)}(y)[…]`, and a root with `k` children contributes `f^{(k)}(y)[…]`.
pub fn psi(v: &dyn VectorFieldFamily, f: &dyn SmoothMap, y: &[f64], t: &LabelledTree) -> Result<Vec<f64>, RdeError> {
    check_dims(v, f, y)?;
    let k = t.root_arity();
    if k > f.max_order() {
        return Err(RdeError::InsufficientOrder {
            what: "test map",
            needed: k,
            available: f.max_order(),
        });
    }
    let branches: Vec<Vec<f64>> = t
        .children()
        .iter()
        .map(|c| node_value(v, y, c))
        .collect::<Result<_, _>>()?;
    let dirs: Vec<&[f64]> = branches.iter().map(Vec::as_slice).collect();
    Ok(f.derivative(y, &dirs))
}

/// Linear extension of [`psi`].
pub fn psi_series(
    v: &dyn VectorFieldFamily,
    f: &dyn SmoothMap,
    y: &[f64],
    a: &FloatSeries,
) -> Result<Vec<f64>, RdeError> {
    check_dims(v, f, y)?;
    let mut out = vec![0.0; f.output_dim()];
    for (t, c) in a.terms() {
        for (o, x) in out.iter_mut().zip(psi(v, f, y, t)?) {
            *o += c * x;
        }
    }
    Ok(out)
}

/// `f^{(k)}(y)` applied to a flat row-major tensor in `(R^n)^{⊗k}`.
pub fn apply_to_tensor(f: &dyn SmoothMap, y: &[f64], k: usize, tensor: &[f64]) -> Vec<f64> {
    if k == 0 {
        return f.derivative(y, &[]).iter().map(|x| x * tensor[0]).collect();
    }
    let n = f.input_dim();
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut out = vec![0.0; f.output_dim()];
    for (flat, idx) in (0..k).map(|_| 0..n).multi_cartesian_product().enumerate() {
        let c = tensor[flat];
        if c == 0.0 {
            continue;
        }
        let dirs: Vec<&[f64]> = idx.iter().map(|&j| basis[j].as_slice()).collect();
        for (o, x) in out.iter_mut().zip(f.derivative(y, &dirs)) {
            *o += c * x;
        }
    }
    out
}

/// Average of a flat order-`m` tensor over all permutations of its slots.
pub fn symmetrize(tensor: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; tensor.len()];
    if m == 0 {
        return tensor.to_vec();
    }
    let perms: Vec<Vec<usize>> = (0..m).permutations(m).collect();
    let weight = 1.0 / perms.len() as f64;
    for (flat, idx) in (0..m).map(|_| 0..n).multi_cartesian_product().enumerate() {
        for perm in &perms {
            let target = perm.iter().fold(0, |acc, &p| acc * n + idx[p]);
            out[target] += weight * tensor[flat];
        }
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// `Ψ_{V,f,y}(t)` against `f^{(k)}(y)[Ψ_{V,id^k,y}(t)] / k!` with `k` the
/// root arity; returns the relative gap.
pub fn property1_residual(
    v: &dyn VectorFieldFamily,
    f: &dyn SmoothMap,
    y: &[f64],
    t: &LabelledTree,
) -> Result<f64, RdeError> {
    let k = t.root_arity();
    let n = v.state_dim();
    let direct = psi(v, f, y, t)?;
    let tensor = if k == 0 {
        vec![1.0]
    } else {
        psi(v, &TensorPower { n, k }, y, t)?
    };
    let mut via = apply_to_tensor(f, y, k, &tensor);
    for x in &mut via {
        *x /= factorial(k);
    }
    Ok(relative_gap(&direct, &via))
}

/// `Ψ_{V,id^{k+l},y}(t1 ∘ t2)` against
/// `((k+l)!/(k! l!)) sym(Ψ_{V,id^k,y}(t1) ⊗ Ψ_{V,id^l,y}(t2))`.
pub fn property2_residual(
    v: &dyn VectorFieldFamily,
    y: &[f64],
    t1: &LabelledTree,
    t2: &LabelledTree,
) -> Result<f64, RdeError> {
    let (k, l) = (t1.root_arity(), t2.root_arity());
    if k == 0 || l == 0 {
        return Err(RdeError::Dimension("both trees need at least one root branch".into()));
    }
    let n = v.state_dim();
    let joined = crate::tree::root_graft(t1, t2);
    let lhs = psi(v, &TensorPower { n, k: k + l }, y, &joined)?;
    let a = psi(v, &TensorPower { n, k }, y, t1)?;
    let b = psi(v, &TensorPower { n, k: l }, y, t2)?;
    let mut outer = vec![0.0; lhs.len()];
    accumulate_outer(&[&a, &b], &mut outer);
    let scale = factorial(k + l) / (factorial(k) * factorial(l));
    let rhs: Vec<f64> = symmetrize(&outer, n, k + l).into_iter().map(|x| x * scale).collect();
    Ok(relative_gap(&lhs, &rhs))
}

/// Largest residuals of the two structural identities over sample points.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub property1_max: f64,
    pub property2_max: f64,
    pub trees: usize,
    pub pairs: usize,
}

pub fn property_checks(
    v: &dyn VectorFieldFamily,
    f: &dyn SmoothMap,
    points: &[Vec<f64>],
    trees: &[LabelledTree],
) -> Result<PropertyReport, RdeError> {
    let mut report = PropertyReport {
        property1_max: 0.0,
        property2_max: 0.0,
        trees: trees.len(),
        pairs: 0,
    };
    for y in points {
        for t in trees {
            report.property1_max = report.property1_max.max(property1_residual(v, f, y, t)?);
        }
        let planted: Vec<&LabelledTree> = trees.iter().filter(|t| t.root_arity() > 0).collect();
        for (t1, t2) in planted.iter().cartesian_product(planted.iter()) {
            if t1.root_arity() + t2.root_arity() > 4 {
                continue;
            }
            report.pairs += 1;
            report.property2_max = report.property2_max.max(property2_residual(v, y, t1, t2)?);
        }
    }
    Ok(report)
}

/// One step `y ↦ Ψ_{V,id,y}(x_{s,t})`.
pub fn davie_step(v: &dyn VectorFieldFamily, y: &[f64], x_st: &FloatSeries) -> Result<Vec<f64>, RdeError> {
    let c = x_st.counit();
    if (c - 1.0).abs() > 1e-9 {
        return Err(RdeError::NonUnitCounit(c));
    }
    psi_series(v, &IdentityMap(v.state_dim()), y, x_st)
}

#[derive(Debug, Clone)]
pub struct DavieSolveConfig {
    pub partition: Vec<f64>,
    pub y0: Vec<f64>,
}

impl DavieSolveConfig {
    /// `steps` equal steps over the path's domain.
    pub fn uniform(x: &BranchedRoughPath, steps: usize, y0: Vec<f64>) -> Self {
        let (lo, hi) = x.domain();
        let partition = (0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
        DavieSolveConfig { partition, y0 }
    }
}

/// Values of a solution on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl DiscretePath {
    pub fn last(&self) -> &[f64] {
        self.values.last().expect("nonempty")
    }

    /// Value at a grid time, matched up to a relative `1e-9`.
    pub fn value_at(&self, t: f64) -> Option<&[f64]> {
        let span = (self.times[self.times.len() - 1] - self.times[0]).abs().max(1.0);
        let k = self.times.partition_point(|&x| x < t - 1e-9 * span);
        (k < self.times.len() && (self.times[k] - t).abs() <= 1e-9 * span).then(|| self.values[k].as_slice())
    }

    /// CSV with header `t,y1,…,yn`.
    pub fn write_csv(&self, writer: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let n = self.values.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("y{i}")));
        w.write_record(&header)?;
        for (t, y) in self.times.iter().zip(&self.values) {
            let mut row = vec![t.to_string()];
            row.extend(y.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Iterates [`davie_step`] along the partition.
pub fn davie_solve(
    v: &dyn VectorFieldFamily,
    x: &BranchedRoughPath,
    cfg: &DavieSolveConfig,
) -> Result<DiscretePath, RdeError> {
    let part = &cfg.partition;
    let (lo, hi) = x.domain();
    let slack = 1e-12 * (hi - lo);
    if part.len() < 2
        || part
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        || part[0] < lo - slack
        || part[part.len() - 1] > hi + slack
    {
        return Err(RdeError::BadPartition);
    }
    if x.dim() != v.driver_dim() {
        return Err(RdeError::Dimension(format!(
            "driver has d = {}, fields expect {}",
            x.dim(),
            v.driver_dim()
        )));
    }
    if cfg.y0.len() != v.state_dim() {
        return Err(RdeError::Dimension(format!(
            "y0 has {} entries, state is R^{}",
            cfg.y0.len(),
            v.state_dim()
        )));
    }
    let mut values = Vec::with_capacity(part.len());
    values.push(cfg.y0.clone());
    for w in part.windows(2) {
        let x_st = x.sample(w[0], w[1])?;
        let next = davie_step(v, values.last().expect("nonempty"), &x_st)?;
        values.push(next);
    }
    Ok(DiscretePath {
        times: part.clone(),
        values,
    })
}

/// Largest remainder per dyadic scale and the fitted power law.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    /// Interval lengths `T / 2^l`.
    pub scales: Vec<f64>,
    pub max_remainder: Vec<f64>,
    /// Slope of `log max_remainder` against `log ω`; `None` when fewer than
    /// two scales have a nonzero remainder.
    pub fitted_slope: Option<f64>,
    /// `C` in `remainder ≈ C ω^slope`.
    pub constant: f64,
    /// Largest `ω(s, t)` at each scale.
    #[serde(skip)]
    pub control: Vec<f64>,
}

/// Measures `‖f(y_t) - Ψ_{V,f,y_s}(x_{s,t})‖` over the dyadic intervals
/// of the solution window at each level in `levels`.
pub fn remainder_probe(
    y: &DiscretePath,
    x: &BranchedRoughPath,
    v: &dyn VectorFieldFamily,
    f: &dyn SmoothMap,
    levels: &[u32],
) -> Result<ProbeReport, RdeError> {
    if levels.len() < 3 {
        return Err(RdeError::DegenerateFit(levels.len()));
    }
    let (t0, t1) = (y.times[0], y.times[y.times.len() - 1]);
    let mut scales = Vec::new();
    let mut max_remainder = Vec::new();
    let mut control = Vec::new();
    for &l in levels {
        let count = 1usize << l;
        let h = (t1 - t0) / count as f64;
        let per_pair: Vec<(f64, f64)> = (0..count)
            .into_par_iter()
            .map(|k| {
                let (s, t) = (
                    t0 + h * k as f64,
                    if k + 1 == count { t1 } else { t0 + h * (k + 1) as f64 },
                );
                let ys = y.value_at(s).ok_or(RdeError::OffGrid(s))?;
                let yt = y.value_at(t).ok_or(RdeError::OffGrid(t))?;
                let approx = psi_series(v, f, ys, &x.sample(s, t)?)?;
                let exact = f.derivative(yt, &[]);
                let r = exact
                    .iter()
                    .zip(&approx)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                Ok((r, x.control().eval(s, t)))
            })
            .collect::<Result<_, RdeError>>()?;
        scales.push(h);
        max_remainder.push(per_pair.iter().map(|p| p.0).fold(0.0, f64::max));
        control.push(per_pair.iter().map(|p| p.1).fold(0.0, f64::max));
    }
    let points: Vec<(f64, f64)> = control
        .iter()
        .zip(&max_remainder)
        .filter(|(w, r)| **w > 0.0 && **r > 0.0)
        .map(|(w, r)| (w.ln(), r.ln()))
        .collect();
    let (fitted_slope, constant) = match least_squares(&points) {
        Some((slope, intercept)) => (Some(slope), intercept.exp()),
        None => (None, 0.0),
    };
    Ok(ProbeReport {
        scales,
        max_remainder,
        fitted_slope,
        constant,
        control,
    })
}

/// Slope and intercept of the least-squares line through `points`.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
