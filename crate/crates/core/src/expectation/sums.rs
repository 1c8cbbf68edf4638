//! The inner lattice sum `sum_h alpha^2 / (|h|^2 |h-k|^2)` and the estimates
//! built on it.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::SeededStream;
use crate::spectral::{interaction_coefficient, LatticeMode, ModelParams};
use crate::stats::{median, ols_slope};
use crate::summation::sorted_compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converged,
    LogDivergent,
    Undetermined,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::LogDivergent => "log-divergent",
            Verdict::Undetermined => "undetermined",
        }
    }
}

/// Thresholds of the convergence classification, applied to the last
/// `dyads` dyadic increments `S(2R) - S(R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRule {
    pub dyads: usize,
    /// Log-divergent: max/min increment within this factor...
    pub band: f64,
    /// ...and every increment above this multiple of the `delta = 1` one.
    pub reference_factor: f64,
    /// Converged: successive increment ratios at most this...
    pub decay_ratio: f64,
    /// ...and the last increment relative to the sum at most this.
    pub converged_rel: f64,
}

impl Default for ClassifyRule {
    fn default() -> Self {
        Self { dyads: 3, band: 2.0, reference_factor: 10.0, decay_ratio: 0.75, converged_rel: 1e-2 }
    }
}

impl ClassifyRule {
    pub fn classify(&self, partial_sums: &[f64], reference_increments: Option<&[f64]>) -> Verdict {
        if self.dyads == 0 || partial_sums.len() < self.dyads + 1 {
            return Verdict::Undetermined;
        }
        let inc = increments(partial_sums);
        let inc = &inc[inc.len() - self.dyads..];
        let total = *partial_sums.last().unwrap();

        if let Some(reference) = reference_increments {
            let reference = &reference[reference.len().saturating_sub(self.dyads)..];
            let lo = inc.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = inc.iter().copied().fold(0.0, f64::max);
            let above = reference.len() == inc.len() && inc.iter().zip(reference).all(|(a, r)| *a > self.reference_factor * r);
            if lo > 0.0 && hi <= self.band * lo && above {
                return Verdict::LogDivergent;
            }
        }
        let decaying = inc.windows(2).all(|w| w[1] <= self.decay_ratio * w[0]);
        let last = *inc.last().unwrap();
        if last == 0.0 || (decaying && last <= self.converged_rel * total) {
            Verdict::Converged
        } else {
            Verdict::Undetermined
        }
    }
}

pub fn increments(partial_sums: &[f64]) -> Vec<f64> {
    partial_sums.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Partial sums of the inner lattice sum at dyadic radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumReport {
    pub k: LatticeMode,
    pub delta: f64,
    /// Increasing max-norm radii.
    pub radii: Vec<u32>,
    pub partial_sums: Vec<f64>,
    /// Majorant pieces of the summand, accumulated on the same radii.
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub s3: Vec<f64>,
    /// Bound on the omitted tail `sum_{max-norm > R}` at the largest radius
    /// (infinite when `delta = 0` or when `R < 2|k|`).
    pub tail_bound: f64,
    /// `delta = 1` increments at the same radii, used by the classification.
    pub reference_increments: Vec<f64>,
    pub verdict: Verdict,
}

impl SumReport {
    pub fn value(&self) -> f64 {
        *self.partial_sums.last().unwrap()
    }

    pub fn increments(&self) -> Vec<f64> {
        increments(&self.partial_sums)
    }
}

#[derive(Clone, Copy)]
struct Terms {
    full: f64,
    s1: f64,
    s2: f64,
    s3: f64,
}

fn terms(k: LatticeMode, h: LatticeMode, params: &ModelParams) -> Terms {
    let q = k - h;
    let h2 = h.norm_sq() as f64;
    let q2 = q.norm_sq() as f64;
    let a: f64 = interaction_coefficient(k, h, params);
    let d = params.delta;
    let (hn, qn) = (h2.sqrt(), q2.sqrt());
    let diff = hn - qn;
    let hd = hn.powf(-d);
    let qd = qn.powf(-d);
    Terms {
        full: a * a / (h2 * q2),
        s1: qd * qd * diff * diff / q2,
        s2: (hd - qd).powi(2) * diff * diff / q2,
        s3: h2 * (qd - hd).powi(2) / q2,
    }
}

/// Summands over `inner < max-norm(h) <= outer`, `h != 0, k`, in row-major order.
fn shell_terms(k: LatticeMode, params: &ModelParams, inner: u32, outer: u32) -> Vec<Terms> {
    let r = outer as i32;
    let rows: Vec<Vec<Terms>> = (-r..=r)
        .into_par_iter()
        .map(|h1| {
            (-r..=r)
                .map(|h2| LatticeMode::new(h1, h2))
                .filter(|h| h.max_norm() > inner && !h.is_zero() && *h != k)
                .map(|h| terms(k, h, params))
                .collect()
        })
        .collect();
    rows.concat()
}

fn dyadic_radii(k: LatticeMode, r: u32) -> Result<Vec<u32>> {
    let floor = (2 * k.max_norm()).max(1);
    if r < floor {
        return Err(Error::InvalidParameter(format!("radius {r} must be at least 2 max(|k1|,|k2|) = {floor}")));
    }
    let mut radii = vec![r];
    while radii.last().unwrap() / 2 >= floor && radii.last().unwrap() % 2 == 0 {
        radii.push(radii.last().unwrap() / 2);
    }
    radii.reverse();
    Ok(radii)
}

fn accumulate(k: LatticeMode, delta: f64, radii: &[u32]) -> Result<[Vec<f64>; 4]> {
    let params = ModelParams::regularized(delta, 1)?;
    let mut out: [Vec<f64>; 4] = Default::default();
    let mut totals = [0.0f64; 4];
    let mut inner = 0;
    for &r in radii {
        let shell = shell_terms(k, &params, inner, r);
        let pieces: [fn(&Terms) -> f64; 4] = [|t| t.full, |t| t.s1, |t| t.s2, |t| t.s3];
        for (j, piece) in pieces.iter().enumerate() {
            let mut v: Vec<f64> = shell.iter().map(piece).collect();
            totals[j] += sorted_compensated_sum(&mut v);
            out[j].push(totals[j]);
        }
        inner = r;
    }
    Ok(out)
}

/// Bound on `sum_{max-norm(h) > R} alpha^2 / (|h|^2 |h-k|^2)`, valid for
/// `R >= 2|k|`: with `c = 1 + delta 2^{1+delta}` the summand is at most
/// `c^2 |k|^2 |h|^{-2-2 delta}`, and a shell of max-norm `m` holds `8m`
/// points of norm at least `m`.
pub fn tail_bound(k: LatticeMode, delta: f64, r: u32) -> f64 {
    let kn = (k.norm_sq() as f64).sqrt();
    if delta <= 0.0 || (r as f64) < 2.0 * kn {
        return f64::INFINITY;
    }
    let c = 1.0 + delta * 2f64.powf(1.0 + delta);
    c * c * kn * kn * 4.0 * (r as f64).powf(-2.0 * delta) / delta
}

/// `S(k, R) = sum_{h != 0, k; max-norm(h) <= R} alpha^2_{k,h} / (|h|^2 |h-k|^2)`
/// for the regularized coefficient, at the dyadic radii `R, R/2, ...` down
/// to `2 max(|k1|,|k2|)`.
pub fn inner_sum(k: LatticeMode, delta: f64, r: u32) -> Result<SumReport> {
    inner_sum_with(k, delta, r, &ClassifyRule::default())
}

pub fn inner_sum_with(k: LatticeMode, delta: f64, r: u32, rule: &ClassifyRule) -> Result<SumReport> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    let radii = dyadic_radii(k, r)?;
    let [partial_sums, s1, s2, s3] = accumulate(k, delta, &radii)?;
    let reference_increments = if delta == 1.0 {
        increments(&partial_sums)
    } else {
        let [reference, ..] = accumulate(k, 1.0, &radii)?;
        increments(&reference)
    };
    let verdict = rule.classify(&partial_sums, Some(&reference_increments));
    Ok(SumReport { k, delta, tail_bound: tail_bound(k, delta, r), radii, partial_sums, s1, s2, s3, reference_increments, verdict })
}

/// `S(k, R)` at a single radius.
pub fn inner_sum_value(k: LatticeMode, delta: f64, r: u32) -> Result<f64> {
    if k.is_zero() {
        return Err(Error::ZeroMode);
    }
    let params = ModelParams::regularized(delta, 1)?;
    let mut v: Vec<f64> = shell_terms(k, &params, 0, r).iter().map(|t| t.full).collect();
    Ok(sorted_compensated_sum(&mut v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub k_norm: f64,
    pub radius: u32,
    pub sum: f64,
    pub ratio: f64,
}

/// Table of `S(k) / |k|^2` along the axis `k = (j, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub delta: f64,
    pub rows: Vec<ScalingRow>,
    pub sup: f64,
    pub argmax: f64,
    pub median: f64,
    /// Least-squares slope of `log ratio` against `log |k|`.
    pub trend_slope: f64,
}

impl ScalingReport {
    pub fn max_over_median(&self) -> f64 {
        self.sup / self.median
    }

    pub fn last_over_median(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.ratio) / self.median
    }
}

/// Radius used for `S(k)` in the scaling table.
pub fn scaling_radius(k: LatticeMode) -> u32 {
    (4 * k.max_norm()).max(64)
}

/// `S(k, R(k)) / |k|^2` for `k = (j, 0)`, `1 <= j <= k_max`, with
/// `R(k) = max(64, 4|k|)`.
pub fn scaling_check(delta: f64, k_max: u32) -> Result<ScalingReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("scaling check needs delta in (0, 1], got {delta}")));
    }
    if k_max < 1 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(k_max as usize);
    for j in 1..=k_max as i32 {
        let k = LatticeMode::new(j, 0);
        let radius = scaling_radius(k);
        let sum = inner_sum_value(k, delta, radius)?;
        let k_norm = j as f64;
        rows.push(ScalingRow { k_norm, radius, sum, ratio: sum / (k_norm * k_norm) });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let (argmax, sup) = rows.iter().map(|r| (r.k_norm, r.ratio)).fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let logk: Vec<f64> = rows.iter().map(|r| r.k_norm.ln()).collect();
    let logr: Vec<f64> = ratios.iter().map(|r| r.ln()).collect();
    let trend_slope = if rows.len() > 1 { ols_slope(&logk, &logr) } else { 0.0 };
    Ok(ScalingReport { delta, sup, argmax, median: median(&ratios), trend_slope, rows })
}

/// Worst observed `||k-h|^{-delta} - |h|^{-delta}| / (delta 2^{1+delta} |k| |h|^{-1-delta})`
/// over random pairs with `|h| >= 2|k|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBoundReport {
    pub delta: f64,
    pub trials: usize,
    pub worst_ratio: f64,
    pub worst_k: LatticeMode,
    pub worst_h: LatticeMode,
}

pub fn delta_difference_ratio(k: LatticeMode, h: LatticeMode, delta: f64) -> f64 {
    let kn = (k.norm_sq() as f64).sqrt();
    let hn = (h.norm_sq() as f64).sqrt();
    let qn = ((k - h).norm_sq() as f64).sqrt();
    let lhs = (qn.powf(-delta) - hn.powf(-delta)).abs();
    lhs / (delta * 2f64.powf(1.0 + delta) * kn * hn.powf(-1.0 - delta))
}

pub fn delta_difference_bound(delta: f64, trials: usize, stream: &SeededStream) -> Result<DeltaBoundReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1], got {delta}")));
    }
    let mut rng = stream.rng();
    let mut report = DeltaBoundReport { delta, trials, worst_ratio: 0.0, worst_k: LatticeMode::ZERO, worst_h: LatticeMode::ZERO };
    let mut done = 0;
    while done < trials {
        let k = LatticeMode::new(rng.random_range(-16..=16), rng.random_range(-16..=16));
        if k.is_zero() {
            continue;
        }
        // scales from the boundary |h| = 2|k| out to 64 |k|
        let kn = (k.norm_sq() as f64).sqrt();
        let scale = (2.0 * kn * 2f64.powf(rng.random_range(0.0..5.0))).ceil() as i32 + 1;
        let h = LatticeMode::new(rng.random_range(-scale..=scale), rng.random_range(-scale..=scale));
        if (h.norm_sq() as f64) < 4.0 * kn * kn {
            continue;
        }
        let ratio = delta_difference_ratio(k, h, delta);
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_k = k;
            report.worst_h = h;
        }
        done += 1;
    }
    Ok(report)
}
