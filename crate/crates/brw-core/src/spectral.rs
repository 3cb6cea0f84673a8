//! Survival parameters of the first-moment matrix: Perron-root truncation
//! estimates of `M_s`, power-root sequences for `M_w`, and the
//! first-return series `Phi(x, y | z)` whose sub-unit radius characterizes
//! `1/M_s`.
//!
//! The limsup/liminf definitions are replaced by computable monotone
//! surrogates with declared bound directions: Perron roots of growing
//! principal submatrices increase to `M_s`, finite-step root sequences
//! understate `M_w` on truncated windows.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::model::{first_moment, BRWModel, ModelError, Site};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMethod {
    PerronTruncation,
    PowerRoot,
    PhiBisection,
    ClosedForm,
}

impl EstimateMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateMethod::PerronTruncation => "perron-truncation",
            EstimateMethod::PowerRoot => "power-root",
            EstimateMethod::PhiBisection => "phi-bisection",
            EstimateMethod::ClosedForm => "closed-form",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundDirection {
    Lower,
    Upper,
    Exact,
}

impl BoundDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundDirection::Lower => "lower",
            BoundDirection::Upper => "upper",
            BoundDirection::Exact => "exact",
        }
    }
}

/// A spectral-parameter estimate with its provenance.
#[derive(Clone, Debug)]
pub struct SpectralEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    /// Radius / term count the estimate was computed at.
    pub window_param: u32,
    pub direction: BoundDirection,
    pub converged: bool,
    pub residual: f64,
}

/// Perron root of a sparse nonnegative matrix in slot coordinates, by
/// power iteration on the diagonally shifted matrix (the shift removes
/// periodicity; bipartite-like structures oscillate otherwise).
/// Convergence is judged on the eigenvector residual, not on successive
/// eigenvalue estimates: boundary deficits propagate inward one site per
/// step, so the max-norm eigenvalue estimate can plateau long before the
/// iteration settles.
pub fn perron_root(rows: &[Vec<(u32, f64)>], tol: f64, max_iter: u64) -> (f64, f64, bool) {
    let n = rows.len();
    if n == 0 {
        return (0.0, 0.0, true);
    }
    let max_row_sum = rows
        .iter()
        .map(|r| r.iter().map(|&(_, v)| v).sum::<f64>())
        .fold(0.0, f64::max);
    if max_row_sum == 0.0 {
        return (0.0, 0.0, true);
    }
    let shift = 0.5 * max_row_sum;
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        for i in 0..n {
            let mut acc = shift * v[i];
            for &(j, m) in &rows[i] {
                acc += m * v[j as usize];
            }
            w[i] = acc;
        }
        let norm = w.iter().cloned().fold(0.0, f64::max);
        if norm == 0.0 {
            return (0.0, 0.0, true);
        }
        for x in w.iter_mut() {
            *x /= norm;
        }
        lambda = norm - shift;
        // both iterates are max-normalized; identical vectors mean an
        // exact eigenvector
        residual = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        core::mem::swap(&mut v, &mut w);
        if residual <= tol {
            converged = true;
            break;
        }
    }
    (lambda, residual, converged)
}

/// Undirected ball of the given radius around `x` inside its irreducible
/// class, in slot coordinates.
fn class_ball(rows: &[Vec<(u32, f64)>], class: &BTreeSet<u32>, x: u32, radius: u32) -> Vec<u32> {
    // symmetrized adjacency restricted to the class
    let n = rows.len();
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            if v > 0.0 && class.contains(&(i as u32)) && class.contains(&j) {
                adj[i].push(j);
                adj[j as usize].push(i as u32);
            }
        }
    }
    let mut dist = vec![u32::MAX; n];
    let mut queue = alloc::collections::VecDeque::new();
    dist[x as usize] = 0;
    queue.push_back(x);
    let mut ball = vec![x];
    while let Some(u) = queue.pop_front() {
        if dist[u as usize] >= radius {
            continue;
        }
        for &w in &adj[u as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[u as usize] + 1;
                ball.push(w);
                queue.push_back(w);
            }
        }
    }
    ball.sort_unstable();
    ball
}

/// Perron roots of the first-moment matrix restricted to
/// `class(x) ∩ ball(x, r)` for each radius; nondecreasing in `r`, lower
/// bounds of `M_s(x, x)`, exact once the ball covers a finite class.
pub fn perron_truncation_estimates(
    rows: &[Vec<(u32, f64)>],
    x: u32,
    radii: &[u32],
    tol: f64,
) -> Vec<SpectralEstimate> {
    // restrict to the strongly connected class of x
    let class = scc_of(rows, x);
    let mut out = Vec::with_capacity(radii.len());
    for &radius in radii {
        let ball = class_ball(rows, &class, x, radius);
        let index: alloc::collections::BTreeMap<u32, u32> = ball
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i as u32))
            .collect();
        let sub: Vec<Vec<(u32, f64)>> = ball
            .iter()
            .map(|&i| {
                rows[i as usize]
                    .iter()
                    .filter_map(|&(j, v)| index.get(&j).map(|&jj| (jj, v)))
                    .collect()
            })
            .collect();
        let (value, residual, converged) = perron_root(&sub, tol, 200_000);
        let covers_class = ball.len() == class.len();
        out.push(SpectralEstimate {
            value,
            method: EstimateMethod::PerronTruncation,
            window_param: radius,
            direction: if covers_class {
                BoundDirection::Exact
            } else {
                BoundDirection::Lower
            },
            converged,
            residual,
        });
    }
    out
}

fn scc_of(rows: &[Vec<(u32, f64)>], x: u32) -> BTreeSet<u32> {
    let n = rows.len();
    // forward reachability
    let reach = |edges: &dyn Fn(u32) -> Vec<u32>| {
        let mut seen = vec![false; n];
        let mut stack = vec![x];
        seen[x as usize] = true;
        while let Some(u) = stack.pop() {
            for w in edges(u) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let fwd = reach(&|u| {
        rows[u as usize]
            .iter()
            .filter(|&&(_, v)| v > 0.0)
            .map(|&(j, _)| j)
            .collect()
    });
    let mut radj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            if v > 0.0 {
                radj[j as usize].push(i as u32);
            }
        }
    }
    let bwd = reach(&|u| radj[u as usize].clone());
    (0..n as u32)
        .filter(|&i| fwd[i as usize] && bwd[i as usize])
        .collect()
}

/// `M_s(x, x)` estimated by Perron roots of growing principal
/// submatrices. Returns one estimate per radius; the last (largest) is
/// the best lower bound.
pub fn estimate_ms(
    model: &BRWModel,
    x: Site,
    radii: &[u32],
    tol: f64,
) -> Result<Vec<SpectralEstimate>, ModelError> {
    let slot = model
        .window()
        .slot_of(x)
        .ok_or(ModelError::SiteNotInWindow { site: x })?;
    let rows = first_moment(model).slot_rows(model.window());
    Ok(perron_truncation_estimates(&rows, slot, radii, tol))
}

/// `(sum_y m^(n)_xy)^(1/n)` at the largest feasible `n <= n_max`,
/// computed by normalized sparse matrix powers (log-domain accumulation
/// avoids overflow). Truncation biases the value downward.
pub fn power_root_estimate(rows: &[Vec<(u32, f64)>], x: u32, n_max: u32) -> SpectralEstimate {
    let n = rows.len();
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut log_scale = 0.0;
    let mut value = 0.0;
    for step in 1..=n_max {
        for i in 0..n {
            let mut acc = 0.0;
            for &(j, m) in &rows[i] {
                acc += m * v[j as usize];
            }
            w[i] = acc;
        }
        let norm = w.iter().cloned().fold(0.0, f64::max);
        if norm == 0.0 {
            return SpectralEstimate {
                value: 0.0,
                method: EstimateMethod::PowerRoot,
                window_param: step,
                direction: BoundDirection::Exact,
                converged: true,
                residual: 0.0,
            };
        }
        for y in w.iter_mut() {
            *y /= norm;
        }
        log_scale += math::ln(norm);
        core::mem::swap(&mut v, &mut w);
        if step == n_max {
            let row_sum = v[x as usize];
            let log_total = log_scale + math::ln(row_sum.max(f64::MIN_POSITIVE));
            value = math::exp(log_total / step as f64);
        }
    }
    SpectralEstimate {
        value,
        method: EstimateMethod::PowerRoot,
        window_param: n_max,
        direction: BoundDirection::Lower,
        converged: true,
        residual: 0.0,
    }
}

/// Growth-rate estimate from the ratio of consecutive row-sum powers,
/// `sqrt(s_n / s_{n-2})` with `s_n = sum_y m^(n)_xy`. Converges
/// geometrically to the window growth rate (the plain n-th root of
/// [`power_root_estimate`] converges only at O(log/n)); the two-step
/// stride keeps period-2 structures stable.
pub fn perron_ratio_estimate(rows: &[Vec<(u32, f64)>], x: u32, n_max: u32) -> SpectralEstimate {
    let n = rows.len();
    let mut v = vec![1.0; n];
    let mut w = vec![0.0; n];
    let mut log_scale = 0.0;
    // log s_n for the last three steps
    let mut history = [f64::NEG_INFINITY; 3];
    let mut last_step = 0;
    for step in 1..=n_max {
        for i in 0..n {
            let mut acc = 0.0;
            for &(j, m) in &rows[i] {
                acc += m * v[j as usize];
            }
            w[i] = acc;
        }
        let norm = w.iter().cloned().fold(0.0, f64::max);
        if norm == 0.0 {
            return SpectralEstimate {
                value: 0.0,
                method: EstimateMethod::PowerRoot,
                window_param: step,
                direction: BoundDirection::Exact,
                converged: true,
                residual: 0.0,
            };
        }
        for y in w.iter_mut() {
            *y /= norm;
        }
        log_scale += math::ln(norm);
        core::mem::swap(&mut v, &mut w);
        let row_sum = v[x as usize];
        history.rotate_left(1);
        history[2] = if row_sum > 0.0 {
            log_scale + math::ln(row_sum)
        } else {
            f64::NEG_INFINITY
        };
        last_step = step;
    }
    if last_step < 3 || history[0] == f64::NEG_INFINITY {
        return power_root_estimate(rows, x, n_max);
    }
    SpectralEstimate {
        value: math::exp((history[2] - history[0]) / 2.0),
        method: EstimateMethod::PowerRoot,
        window_param: n_max,
        direction: BoundDirection::Lower,
        converged: true,
        residual: (history[2] - 2.0 * history[1] + history[0]).abs(),
    }
}

/// `M_w(x)`: the exact common mean offspring for BP-like models, a
/// truncated power-root estimate otherwise.
pub fn estimate_mw(model: &BRWModel, x: Site, n_max: u32) -> Result<SpectralEstimate, ModelError> {
    let slot = model
        .window()
        .slot_of(x)
        .ok_or(ModelError::SiteNotInWindow { site: x })?;
    if let Some(common) = crate::project::detect_bp_like(model) {
        return Ok(SpectralEstimate {
            value: common.mean(),
            method: EstimateMethod::ClosedForm,
            window_param: 0,
            direction: BoundDirection::Exact,
            converged: true,
            residual: 0.0,
        });
    }
    let rows = first_moment(model).slot_rows(model.window());
    Ok(power_root_estimate(&rows, slot, n_max))
}

/// First-return series coefficients in log space:
/// `phi^n(x, y)` is the expected progeny at `y` of a particle at `x`
/// along n-step trails hitting `y` for the first time at step `n`.
#[derive(Clone, Debug)]
pub struct PhiSeries {
    pub x: Site,
    pub y: Site,
    /// `log_coeffs[k]` is `ln(phi^(k+1)(x, y))`, `-inf` for zero.
    pub log_coeffs: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub enum PhiEval {
    Value(f64),
    /// The truncated series exceeded overflow bounds at this `z`; the
    /// true series has left its radius of convergence.
    Overflow,
}

impl PhiSeries {
    /// Number of retained coefficients.
    pub fn terms(&self) -> usize {
        self.log_coeffs.len()
    }

    pub fn coeff(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        let l = self.log_coeffs[n - 1];
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            math::exp(l)
        }
    }

    /// Evaluates the truncated series at `z >= 0`.
    pub fn eval(&self, z: f64) -> PhiEval {
        if z == 0.0 {
            return PhiEval::Value(0.0);
        }
        let log_z = math::ln(z);
        let mut acc = 0.0;
        for (k, &lc) in self.log_coeffs.iter().enumerate() {
            if lc == f64::NEG_INFINITY {
                continue;
            }
            let log_term = lc + (k as f64 + 1.0) * log_z;
            if log_term > 700.0 {
                return PhiEval::Overflow;
            }
            acc += math::exp(log_term);
            if acc > 1e300 {
                return PhiEval::Overflow;
            }
        }
        PhiEval::Value(acc)
    }
}

/// Dynamic program for the first-return coefficients:
/// `phi^1(v, y) = m_vy`, `phi^n(v, y) = sum_{w != y} m_vw phi^(n-1)(w, y)`.
pub fn phi_series(
    model: &BRWModel,
    x: Site,
    y: Site,
    n_terms: u32,
) -> Result<PhiSeries, ModelError> {
    let window = model.window();
    let x_slot = window
        .slot_of(x)
        .ok_or(ModelError::SiteNotInWindow { site: x })? as usize;
    let y_slot = window
        .slot_of(y)
        .ok_or(ModelError::SiteNotInWindow { site: y })? as usize;
    let rows = first_moment(model).slot_rows(window);
    let n = window.len();

    // phi[v] = phi^k(v, y), normalized; log_scale tracks the factor
    let mut phi = vec![0.0; n];
    for (v, row) in rows.iter().enumerate() {
        for &(j, m) in row {
            if j as usize == y_slot {
                phi[v] = m;
            }
        }
    }
    let mut log_scale = 0.0;
    let mut log_coeffs = Vec::with_capacity(n_terms as usize);
    let log_of = |value: f64, scale: f64| {
        if value > 0.0 {
            scale + math::ln(value)
        } else {
            f64::NEG_INFINITY
        }
    };
    log_coeffs.push(log_of(phi[x_slot], log_scale));
    let mut next = vec![0.0; n];
    for _ in 2..=n_terms {
        for (v, row) in rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, m) in row {
                if j as usize != y_slot {
                    acc += m * phi[j as usize];
                }
            }
            next[v] = acc;
        }
        let norm = next.iter().cloned().fold(0.0, f64::max);
        if norm == 0.0 {
            core::mem::swap(&mut phi, &mut next);
            log_coeffs.push(f64::NEG_INFINITY);
            // all later coefficients vanish as well
            while log_coeffs.len() < n_terms as usize {
                log_coeffs.push(f64::NEG_INFINITY);
            }
            break;
        }
        for v in next.iter_mut() {
            *v /= norm;
        }
        log_scale += math::ln(norm);
        core::mem::swap(&mut phi, &mut next);
        log_coeffs.push(log_of(phi[x_slot], log_scale));
    }
    Ok(PhiSeries { x, y, log_coeffs })
}

/// `1/M_s = max{ z >= 0 : Phi(x, x | z) <= 1 }` on the truncated series.
/// Truncation understates `Phi`, so the bisection overstates `1/M_s` and
/// the returned `M_s` is a lower bound.
pub fn ms_from_phi(
    model: &BRWModel,
    x: Site,
    n_terms: u32,
    bisection_tol: f64,
) -> Result<SpectralEstimate, ModelError> {
    let series = phi_series(model, x, x, n_terms)?;
    if series.log_coeffs.iter().all(|&c| c == f64::NEG_INFINITY) {
        // no return trails at all: m^(n)_xx = 0 for n >= 1
        return Ok(SpectralEstimate {
            value: 0.0,
            method: EstimateMethod::PhiBisection,
            window_param: n_terms,
            direction: BoundDirection::Exact,
            converged: true,
            residual: 0.0,
        });
    }
    // bracket the threshold
    let exceeded = |z: f64| match series.eval(z) {
        PhiEval::Value(v) => v > 1.0,
        PhiEval::Overflow => true,
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut grow = 0;
    while !exceeded(hi) {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            // the truncated polynomial never reaches 1 within range
            return Ok(SpectralEstimate {
                value: 0.0,
                method: EstimateMethod::PhiBisection,
                window_param: n_terms,
                direction: BoundDirection::Lower,
                converged: false,
                residual: f64::INFINITY,
            });
        }
    }
    while hi - lo > bisection_tol {
        let mid = 0.5 * (lo + hi);
        if exceeded(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let inv_ms = 0.5 * (lo + hi);
    Ok(SpectralEstimate {
        value: 1.0 / inv_ms,
        method: EstimateMethod::PhiBisection,
        window_param: n_terms,
        direction: BoundDirection::Lower,
        converged: true,
        residual: hi - lo,
    })
}

/// Near-critical margin for the threshold test `M_s > 1`.
pub const LOCAL_SURVIVAL_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct LocalSurvivalReport {
    /// `Some(true)`: local survival (`M_s > 1` with margin);
    /// `Some(false)`: local extinction evidence; `None`: indeterminate,
    /// the estimates straddle 1 within the margin.
    pub survives: Option<bool>,
    pub best_estimate: f64,
    pub margin: f64,
    /// The best estimate sits within five margins of the threshold; the
    /// verdict is tolerance-bound.
    pub near_critical: bool,
}

/// Threshold test for local survival at `x` from the best available
/// `M_s` lower bound.
pub fn local_survival_test(
    model: &BRWModel,
    x: Site,
    radii: &[u32],
) -> Result<LocalSurvivalReport, ModelError> {
    let estimates = estimate_ms(model, x, radii, 1e-12)?;
    let best = estimates.iter().map(|e| e.value).fold(0.0, f64::max);
    let exact = estimates
        .iter()
        .any(|e| e.direction == BoundDirection::Exact);
    let margin = LOCAL_SURVIVAL_MARGIN;
    let survives = if best > 1.0 + margin {
        Some(true)
    } else if exact && best <= 1.0 {
        Some(false)
    } else if best < 1.0 - margin {
        // a lower bound below 1 - margin is evidence, not proof; the
        // indeterminate band is only the margin around 1
        Some(false)
    } else {
        None
    };
    Ok(LocalSurvivalReport {
        survives,
        best_estimate: best,
        margin,
        near_critical: (best - 1.0).abs() < 5.0 * margin,
    })
}
