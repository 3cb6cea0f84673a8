//! The multidimensional generating function `G` of a BRW and the monotone
//! fixed-point machinery built on it: extinction probabilities, survival
//! classification, sub-solution membership, fixed-point enumeration and
//! convexity probes.
//!
//! `G(z)(x)` is the expected product of `z(y)` over the children of a
//! particle at `x`. It is nondecreasing in `z`, `G(1) = 1`, and the global
//! extinction vector is its smallest fixed point, reached by iterating
//! from the zero vector.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::model::{BRWModel, BoundaryPolicy, ModelError, Site};

pub use crate::family::{fixedpoint_family, quasitransitive_translates, FamilyKind};

/// A vector in `[0,1]^window` plus the constant used for out-of-window
/// coordinates (0 under ghost-survive, 1 under ghost-die).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    pub values: Vec<f64>,
    pub boundary: f64,
}

impl ProbVector {
    pub fn constant(len: usize, value: f64, boundary: f64) -> Self {
        ProbVector {
            values: vec![value; len],
            boundary,
        }
    }

    pub fn zeros(model: &BRWModel) -> Self {
        Self::constant(model.window().len(), 0.0, model.policy().boundary_value())
    }

    pub fn ones(model: &BRWModel) -> Self {
        Self::constant(model.window().len(), 1.0, model.policy().boundary_value())
    }

    pub fn from_values(model: &BRWModel, values: Vec<f64>) -> Self {
        ProbVector {
            values,
            boundary: model.policy().boundary_value(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.values.iter().all(|&v| (0.0..=1.0).contains(&v))
    }

    pub fn value_at(&self, model: &BRWModel, site: Site) -> Option<f64> {
        model
            .window()
            .slot_of(site)
            .map(|slot| self.values[slot as usize])
    }

    pub fn sup_dist(&self, other: &ProbVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Componentwise `self <= other + tol` over the window.
    pub fn le(&self, other: &ProbVector, tol: f64) -> bool {
        self.values
            .iter()
            .zip(&other.values)
            .all(|(a, b)| *a <= *b + tol)
    }
}

/// One generation: `G(z)`.
pub fn apply_g(model: &BRWModel, z: &ProbVector) -> ProbVector {
    let mut out = vec![0.0; model.window().len()];
    model.apply_g_into(&z.values, z.boundary, &mut out);
    ProbVector {
        values: out,
        boundary: z.boundary,
    }
}

/// `G(z)` with geometric totals evaluated as a truncated power series
/// instead of the closed form; the residual tail mass is assigned to the
/// zero placement. Cross-validates the closed form of counterparts.
pub fn apply_g_truncated(model: &BRWModel, z: &ProbVector, tail_tol: f64) -> ProbVector {
    let values = (0..model.window().len())
        .map(|slot| match model.law(slot) {
            crate::model::SiteLaw::Indep(law) => {
                let s: f64 = law
                    .targets
                    .iter()
                    .map(|&(t, p)| {
                        p * model
                            .window()
                            .slot_of(t)
                            .map_or(z.boundary, |u| z.values[u as usize])
                    })
                    .sum();
                match &law.total {
                    crate::model::TotalLaw::Geometric { mean } => {
                        let m = *mean;
                        if m == 0.0 {
                            return 1.0;
                        }
                        let r = m / (1.0 + m);
                        let n_max = (math::ln(tail_tol) / math::ln(r)) as u32 + 1;
                        let mut acc = 0.0;
                        let mut weight = 1.0 / (1.0 + m);
                        let mut pow = 1.0;
                        let mut mass = 0.0;
                        for _ in 0..=n_max {
                            acc += weight * pow;
                            mass += weight;
                            weight *= r;
                            pow *= s;
                        }
                        // residual tail mass contributes the empty product
                        acc + (1.0 - mass)
                    }
                    t => t.pgf(s),
                }
            }
            _ => {
                let mut out = vec![0.0; model.window().len()];
                model.apply_g_into(&z.values, z.boundary, &mut out);
                out[slot]
            }
        })
        .collect();
    ProbVector {
        values,
        boundary: z.boundary,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    IncreasingFromBelow,
    DecreasingFromAbove,
}

/// Result of a monotone fixed-point run.
#[derive(Clone, Debug)]
pub struct IterationReport {
    pub vector: ProbVector,
    pub iterations: u64,
    /// Sup-norm of `G(z) - z` at the returned iterate.
    pub residual: f64,
    pub direction: Direction,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct FixedPointOptions {
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: 1e-10,
            max_iter: 1_000_000,
        }
    }
}

fn iterate_monotone(
    model: &BRWModel,
    start: ProbVector,
    direction: Direction,
    constrain_zero: Option<&[u32]>,
    opts: &FixedPointOptions,
) -> IterationReport {
    let mut z = start;
    let mut next = vec![0.0; z.values.len()];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut prev_residual = f64::INFINITY;
    while iterations < opts.max_iter {
        model.apply_g_into(&z.values, z.boundary, &mut next);
        if let Some(zeroed) = constrain_zero {
            for &slot in zeroed {
                next[slot as usize] = 0.0;
            }
        }
        residual = z
            .values
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        core::mem::swap(&mut z.values, &mut next);
        iterations += 1;
        if residual <= opts.tol {
            // Near criticality the steps shrink polynomially long before
            // the iterate is close, so a small step alone is not enough:
            // accept only when the geometric extrapolation of the
            // remaining distance, step * r / (1 - r), is also below
            // tolerance.
            let rate = residual / prev_residual;
            let tail_ok =
                residual == 0.0 || (rate < 1.0 && residual * rate / (1.0 - rate) <= opts.tol);
            if tail_ok {
                return IterationReport {
                    vector: z,
                    iterations,
                    residual,
                    direction,
                    converged: true,
                };
            }
        }
        prev_residual = residual;
    }
    IterationReport {
        vector: z,
        iterations,
        residual,
        direction,
        converged: false,
    }
}

/// Smallest fixed point of `G`: the global extinction vector, approached
/// from below by iterating from the zero vector.
pub fn global_extinction(model: &BRWModel, opts: &FixedPointOptions) -> IterationReport {
    iterate_monotone(
        model,
        ProbVector::zeros(model),
        Direction::IncreasingFromBelow,
        None,
        opts,
    )
}

/// Probability of never putting a particle in `a`, per starting site:
/// the decreasing limit of the map that applies `G` and pins the
/// coordinates of `a` at zero, started from the indicator of the
/// complement of `a`. Iterate `k` is the probability that no particle
/// occupies `a` during generations `0..=k`.
pub fn never_visit_prob(
    model: &BRWModel,
    a: &[Site],
    opts: &FixedPointOptions,
) -> Result<IterationReport, ModelError> {
    let slots = target_slots(model, a)?;
    let mut start = ProbVector::ones(model);
    for &slot in &slots {
        start.values[slot as usize] = 0.0;
    }
    Ok(iterate_monotone(
        model,
        start,
        Direction::DecreasingFromAbove,
        Some(&slots),
        opts,
    ))
}

fn target_slots(model: &BRWModel, a: &[Site]) -> Result<Vec<u32>, ModelError> {
    if a.is_empty() {
        return Err(ModelError::BadParameter {
            what: "target set must be nonempty",
        });
    }
    a.iter()
        .map(|&s| {
            model
                .window()
                .slot_of(s)
                .ok_or(ModelError::SiteNotInWindow { site: s })
        })
        .collect()
}

/// Extinction-in-`a` probabilities: the increasing iteration
/// `q_n = G(q_{n-1})` started from the never-visit vector `q_0`.
#[derive(Clone, Debug)]
pub struct LocalExtinctionReport {
    pub q0: IterationReport,
    pub q: IterationReport,
}

pub fn local_extinction(
    model: &BRWModel,
    a: &[Site],
    opts: &FixedPointOptions,
) -> Result<LocalExtinctionReport, ModelError> {
    let q0 = never_visit_prob(model, a, opts)?;
    let q = iterate_monotone(
        model,
        q0.vector.clone(),
        Direction::IncreasingFromBelow,
        None,
        opts,
    );
    Ok(LocalExtinctionReport { q0, q })
}

/// Survival taxonomy at a starting site and target set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    GlobalExtinction,
    PureGlobal,
    NonStrongLocal,
    StrongLocal,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::GlobalExtinction => "global-extinction",
            Regime::PureGlobal => "pure-global",
            Regime::NonStrongLocal => "non-strong-local",
            Regime::StrongLocal => "strong-local",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SurvivalClassification {
    pub regime: Regime,
    pub q_bar_x: f64,
    pub q_local_x: f64,
    /// Set when the classification sits within the equality band or the
    /// two boundary policies disagree on the label.
    pub inconclusive: bool,
}

fn classify_values(q_bar: f64, q_local: f64, eq_tol: f64) -> Regime {
    if q_bar >= 1.0 - eq_tol {
        Regime::GlobalExtinction
    } else if q_local >= 1.0 - eq_tol {
        Regime::PureGlobal
    } else if q_local - q_bar > eq_tol {
        Regime::NonStrongLocal
    } else {
        Regime::StrongLocal
    }
}

/// Classifies the survival regime at `(x, a)`, with equality threshold
/// `10 * class_tol`.
///
/// Both boundary policies are run and the estimates are taken from the
/// converging ends of the window bracket: ghost-survive for the global
/// probability (escape genuinely implies survival on the models at hand)
/// and ghost-die for the local one (escapees do not return to `a`).
/// Finite explicit models have no boundary, so the policies coincide
/// there. A label is marked inconclusive when it sits inside the
/// tolerance band around a decision threshold and the two pure-policy
/// runs disagree.
pub fn classify(
    model: &BRWModel,
    x: Site,
    a: &[Site],
    opts: &FixedPointOptions,
    class_tol: f64,
) -> Result<SurvivalClassification, ModelError> {
    let slot = model
        .window()
        .slot_of(x)
        .ok_or(ModelError::SiteNotInWindow { site: x })? as usize;
    let eq_tol = 10.0 * class_tol;

    let run = |policy: BoundaryPolicy| -> Result<(f64, f64), ModelError> {
        let m = model.with_policy(policy);
        let q_bar = global_extinction(&m, opts).vector.values[slot];
        let local = local_extinction(&m, a, opts)?;
        Ok((q_bar, local.q.vector.values[slot]))
    };

    let (qb_survive, qa_survive) = run(BoundaryPolicy::GhostSurvive)?;
    let (qb_die, qa_die) = run(BoundaryPolicy::GhostDie)?;

    let q_bar = qb_survive;
    let q_local = qa_die;
    let regime = classify_values(q_bar, q_local, eq_tol);

    // Disagreement between the pure-policy brackets is surfaced when the
    // combined estimate sits near a decision threshold, never silently
    // resolved.
    let label_survive = classify_values(qb_survive, qa_survive, eq_tol);
    let label_die = classify_values(qb_die, qa_die, eq_tol);
    let gap = q_local - q_bar;
    let near_threshold = (q_bar - (1.0 - eq_tol)).abs() < 0.5 * eq_tol
        || (q_local - (1.0 - eq_tol)).abs() < 0.5 * eq_tol
        || (gap - eq_tol).abs() < 0.5 * eq_tol;
    let inconclusive = near_threshold && label_survive != label_die;

    Ok(SurvivalClassification {
        regime,
        q_bar_x: q_bar,
        q_local_x: q_local,
        inconclusive,
    })
}

/// Outcome of the strong-local-survival certificate
/// `q_0(x, a) <= q_bar(x)` over the window core.
#[derive(Clone, Debug)]
pub struct StrongConditionReport {
    pub holds: bool,
    /// A site with `q_0(x, a) > q_bar(x)`: from it the process survives
    /// globally without ever visiting `a` with positive probability.
    pub witness: Option<Site>,
    pub max_excess: f64,
    /// Number of window sites the condition was quantified over.
    pub sites_checked: usize,
}

/// Checks `q_0(x, a) <= q_bar(x) + tol`, with the never-visit vector from
/// the ghost-die run and the extinction vector from the ghost-survive run
/// (the converging ends of their brackets).
///
/// The quantifier runs over the window core: sites within half the window
/// depth of the truncation shell are excluded, because from there the
/// truncated model genuinely survives through ghost escapes without
/// visiting `a` — an artifact of the window, not a property of the
/// underlying model. Models without a shell are checked everywhere.
pub fn check_strong_condition(
    model: &BRWModel,
    a: &[Site],
    opts: &FixedPointOptions,
    tol: f64,
) -> Result<StrongConditionReport, ModelError> {
    let q0 = never_visit_prob(&model.with_policy(BoundaryPolicy::GhostDie), a, opts)?;
    let q_bar = global_extinction(&model.with_policy(BoundaryPolicy::GhostSurvive), opts);
    let eligible = window_core(model);
    let mut witness = None;
    let mut max_excess = 0.0;
    let mut sites_checked = 0;
    for slot in 0..model.window().len() {
        if !eligible[slot] {
            continue;
        }
        sites_checked += 1;
        let excess = q0.vector.values[slot] - q_bar.vector.values[slot];
        if excess > max_excess {
            max_excess = excess;
            if excess > tol {
                witness = Some(model.window().site(slot));
            }
        }
    }
    Ok(StrongConditionReport {
        holds: witness.is_none(),
        witness,
        max_excess,
        sites_checked,
    })
}

/// Window sites at least half the window depth away from the truncation
/// shell (all sites when the model has no shell).
fn window_core(model: &BRWModel) -> Vec<bool> {
    let n = model.window().len();
    let shell = model.boundary_shell();
    if shell.is_empty() {
        return vec![true; n];
    }
    // undirected window graph from the moment matrix
    let rows = crate::model::first_moment(model).slot_rows(model.window());
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            if v > 0.0 {
                adj[i].push(j);
                adj[j as usize].push(i as u32);
            }
        }
    }
    let mut dist = vec![u32::MAX; n];
    let mut queue = alloc::collections::VecDeque::new();
    for s in shell {
        let slot = model.window().slot_of(s).expect("shell site in window") as usize;
        dist[slot] = 0;
        queue.push_back(slot as u32);
    }
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[u as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    let max_dist = dist
        .iter()
        .copied()
        .filter(|&d| d != u32::MAX)
        .max()
        .unwrap_or(0);
    let cutoff = max_dist / 2;
    dist.iter().map(|&d| d == u32::MAX || d >= cutoff).collect()
}

/// Membership in `U_G = { z : G(z) <= z }`, with the first violating
/// component on failure.
#[derive(Clone, Debug)]
pub struct UgReport {
    pub inside: bool,
    pub violating_site: Option<Site>,
    pub max_violation: f64,
}

pub fn is_in_ug(model: &BRWModel, z: &ProbVector) -> UgReport {
    let gz = apply_g(model, z);
    let mut violating_site = None;
    let mut max_violation = 0.0;
    for slot in 0..model.window().len() {
        let v = gz.values[slot] - z.values[slot];
        if v > 1e-12 {
            if violating_site.is_none() {
                violating_site = Some(model.window().site(slot));
            }
            if v > max_violation {
                max_violation = v;
            }
        }
    }
    UgReport {
        inside: violating_site.is_none(),
        violating_site,
        max_violation,
    }
}

/// All fixed points of a small explicit model, by residual grid scan plus
/// damped refinement. The grid always contains the corners of the cube.
pub fn enumerate_fixed_points(
    model: &BRWModel,
    grid_resolution: usize,
    refine_tol: f64,
) -> Result<Vec<ProbVector>, ModelError> {
    let n = model.window().len();
    if n > 6 {
        return Err(ModelError::BadParameter {
            what: "fixed-point enumeration needs a window of at most 6 sites",
        });
    }
    if grid_resolution < 2 {
        return Err(ModelError::BadParameter {
            what: "grid resolution must be at least 2",
        });
    }
    let boundary = model.policy().boundary_value();
    let steps = grid_resolution;
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut point = vec![0.0; n];
    let mut counter = vec![0usize; n];
    let mut g = vec![0.0; n];
    loop {
        for (i, &c) in counter.iter().enumerate() {
            point[i] = c as f64 / (steps - 1) as f64;
        }
        model.apply_g_into(&point, boundary, &mut g);
        let residual = point
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // keep anything that beats a grid-spacing residual; refinement
        // decides whether a true fixed point is nearby
        if residual < 1.0 / (steps - 1) as f64 {
            candidates.push((residual, point.clone()));
        }
        // odometer
        let mut i = 0;
        loop {
            if i == n {
                break;
            }
            counter[i] += 1;
            if counter[i] < steps {
                break;
            }
            counter[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }

    // damped refinement: z <- (1-w) z + w G(z)
    let mut found: Vec<Vec<f64>> = Vec::new();
    let spacing = 1.0 / (steps - 1) as f64;
    for (_, start) in candidates {
        let mut z = start;
        let damping = 0.5;
        for _ in 0..5000 {
            model.apply_g_into(&z, boundary, &mut g);
            let mut delta = 0.0f64;
            for i in 0..n {
                let next = (1.0 - damping) * z[i] + damping * g[i];
                delta = delta.max((next - z[i]).abs());
                z[i] = next.clamp(0.0, 1.0);
            }
            if delta < refine_tol * 1e-2 {
                break;
            }
        }
        model.apply_g_into(&z, boundary, &mut g);
        let residual = z
            .iter()
            .zip(&g)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < refine_tol {
            let dup = found
                .iter()
                .any(|f| f.iter().zip(&z).all(|(a, b)| (a - b).abs() < spacing * 0.5));
            if !dup {
                found.push(z);
            }
        }
    }
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(found
        .into_iter()
        .map(|values| ProbVector { values, boundary })
        .collect())
}

/// A point witnessing non-convexity of `G`:
/// `G(t z + (1-t) w) > t G(z) + (1-t) G(w)` in some component.
#[derive(Clone, Debug)]
pub struct ConvexityWitness {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    pub site: Site,
    pub gap: f64,
}

/// Random search plus a deterministic corner sweep for convexity
/// violations. Returns the first witness found, or `None`.
pub fn convexity_witness(model: &BRWModel, samples: u64, seed: u64) -> Option<ConvexityWitness> {
    let n = model.window().len();
    let boundary = model.policy().boundary_value();
    let mut gz = vec![0.0; n];
    let mut gw = vec![0.0; n];
    let mut gm = vec![0.0; n];
    let mut mid = vec![0.0; n];

    let mut check = |z: &[f64], w: &[f64], t: f64| -> Option<(usize, f64)> {
        for i in 0..n {
            mid[i] = t * z[i] + (1.0 - t) * w[i];
        }
        model.apply_g_into(z, boundary, &mut gz);
        model.apply_g_into(w, boundary, &mut gw);
        model.apply_g_into(&mid, boundary, &mut gm);
        for i in 0..n {
            let gap = gm[i] - (t * gz[i] + (1.0 - t) * gw[i]);
            if gap > 1e-10 {
                return Some((i, gap));
            }
        }
        None
    };

    // corner sweep at t = 1/2
    let corners = 1usize << n;
    for a in 0..corners {
        for b in (a + 1)..corners {
            let z: Vec<f64> = (0..n).map(|i| ((a >> i) & 1) as f64).collect();
            let w: Vec<f64> = (0..n).map(|i| ((b >> i) & 1) as f64).collect();
            if let Some((slot, gap)) = check(&z, &w, 0.5) {
                return Some(ConvexityWitness {
                    z,
                    w,
                    t: 0.5,
                    site: model.window().site(slot),
                    gap,
                });
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let t: f64 = rng.random::<f64>();
        if let Some((slot, gap)) = check(&z, &w, t) {
            return Some(ConvexityWitness {
                z,
                w,
                t,
                site: model.window().site(slot),
                gap,
            });
        }
    }
    None
}

/// Global-survival certificate for independent-diffusion counterparts:
/// `M v >= v / (1 - v)` componentwise certifies survival from every site
/// with `v(x) > 0`. The boundary field of `v` extends it outside the
/// window.
#[derive(Clone, Debug)]
pub struct CertificateReport {
    pub holds: bool,
    /// True when `v = 0`: the inequality holds but certifies nothing.
    pub vacuous: bool,
    pub worst_site: Option<Site>,
    pub worst_slack: f64,
}

pub fn survival_certificate(
    model: &BRWModel,
    v: &ProbVector,
) -> Result<CertificateReport, ModelError> {
    if !model.is_counterpart() {
        return Err(ModelError::BadParameter {
            what: "survival certificate applies to counterpart-tagged models",
        });
    }
    if v.values.iter().any(|&x| x >= 1.0) || v.boundary >= 1.0 {
        return Err(ModelError::BadParameter {
            what: "certificate vector must satisfy v < 1 componentwise",
        });
    }
    let fm = crate::model::first_moment(model);
    let mut holds = true;
    let mut worst_site = None;
    let mut worst_slack = f64::INFINITY;
    for slot in 0..model.window().len() {
        let mv: f64 = fm
            .row(slot)
            .iter()
            .map(|&(s, m)| {
                let vy = model
                    .window()
                    .slot_of(s)
                    .map_or(v.boundary, |t| v.values[t as usize]);
                m * vy
            })
            .sum();
        let vx = v.values[slot];
        let rhs = vx / (1.0 - vx);
        let slack = mv - rhs;
        if slack < worst_slack {
            worst_slack = slack;
            worst_site = Some(model.window().site(slot));
        }
        if slack < -1e-12 {
            holds = false;
        }
    }
    let vacuous = v.values.iter().all(|&x| x == 0.0) && v.boundary == 0.0;
    Ok(CertificateReport {
        holds,
        vacuous,
        worst_site,
        worst_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BoundaryPolicy;
    use crate::registry;

    fn opts() -> FixedPointOptions {
        FixedPointOptions::default()
    }

    #[test]
    fn apply_g_counterexample1() {
        // G(x, y) = (xy, (1+x)/2) at (0.5, 0.5) -> (0.25, 0.75)
        let m = registry::counterexample1();
        let z = ProbVector::constant(2, 0.5, 1.0);
        let g = apply_g(&m, &z);
        assert_eq!(g.values, vec![0.25, 0.75]);
    }

    #[test]
    fn apply_g_fixes_ones() {
        for m in [
            registry::counterexample1(),
            registry::counterexample3(),
            registry::reducible_line(0.7, 20, BoundaryPolicy::GhostDie).unwrap(),
        ] {
            let ones = ProbVector::ones(&m);
            let g = apply_g(&m, &ones);
            assert!(g.values.iter().all(|&v| v == 1.0), "G(1) = 1 exactly");
        }
    }

    #[test]
    fn closed_form_matches_truncated_series() {
        // counterpart of tree-edge d=4, lambda=0.3 at z = 1 - c
        let m = registry::tree_counterpart_ball(4, 0.3, 0.0, 3, BoundaryPolicy::GhostDie).unwrap();
        for &c in &[0.1, 0.5, 0.9] {
            let z = ProbVector::constant(m.window().len(), 1.0 - c, 1.0 - c);
            let closed = apply_g(&m, &z);
            let series = apply_g_truncated(&m, &z, 1e-14);
            // interior sites see all neighbours at 1-c, so the closed form
            // is 1/(1 + 1.2 c) there
            let want = 1.0 / (1.0 + 1.2 * c);
            assert!((closed.values[0] - want).abs() < 1e-12);
            for slot in 0..m.window().len() {
                assert!(
                    (closed.values[slot] - series.values[slot]).abs() < 1e-10,
                    "closed form vs truncated series at slot {slot}"
                );
            }
        }
    }

    #[test]
    fn global_extinction_reducible_line() {
        // ghost-survive: interior components approach (1-p)/p = 3/7
        let m = registry::reducible_line(0.7, 100, BoundaryPolicy::GhostSurvive).unwrap();
        let r = global_extinction(&m, &opts());
        assert!(r.converged);
        let q = &r.vector.values;
        assert!((q[0] - 3.0 / 7.0).abs() < 1e-9);
        // backward-recursion oracle: z(N) = 1-p, z(n) = p z(n+1)^2 + 1-p
        let mut oracle = vec![0.0; 101];
        oracle[100] = 0.3;
        for n in (0..100).rev() {
            oracle[n] = 0.7 * oracle[n + 1] * oracle[n + 1] + 0.3;
        }
        for n in 0..=100 {
            assert!(
                (q[n] - oracle[n]).abs() < 1e-9,
                "site {n}: solver {} vs oracle {}",
                q[n],
                oracle[n]
            );
        }
    }

    #[test]
    fn global_extinction_reducible_line_ghost_die_is_ones() {
        let m = registry::reducible_line(0.7, 100, BoundaryPolicy::GhostDie).unwrap();
        let r = global_extinction(&m, &opts());
        assert!(r.vector.values.iter().all(|&v| v > 1.0 - 1e-9));
    }

    #[test]
    fn global_extinction_irreducible_line() {
        // interior components approach (1-p)/(p-eps) = 0.6
        let m = registry::irreducible_line(2.0 / 3.0, 1.0 / 9.0, 200, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let r = global_extinction(&m, &opts());
        assert!(r.converged);
        for n in 0..=100 {
            assert!(
                (r.vector.values[n] - 0.6).abs() < 1e-6,
                "site {n}: {}",
                r.vector.values[n]
            );
        }
    }

    #[test]
    fn global_extinction_subcritical_all_ones() {
        let m = registry::binary_bp(0.4).unwrap();
        let r = global_extinction(&m, &opts());
        assert!((r.vector.values[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn never_visit_zero_on_target() {
        let m = registry::irreducible_line(2.0 / 3.0, 1.0 / 9.0, 60, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let r = never_visit_prob(&m, &[0, 1], &opts()).unwrap();
        assert_eq!(r.vector.values[0], 0.0);
        assert_eq!(r.vector.values[1], 0.0);
    }

    #[test]
    fn never_visit_unreachable_target_is_one() {
        // no path back to 0 on the reducible line; ghost-die is the
        // converging bracket for never-visit questions
        let m = registry::reducible_line(0.7, 50, BoundaryPolicy::GhostDie).unwrap();
        let r = never_visit_prob(&m, &[0], &opts()).unwrap();
        assert_eq!(r.vector.values[1], 1.0);
        // ghost-survive is the lower bracket: escapees count as visitors
        let m2 = registry::reducible_line(0.7, 50, BoundaryPolicy::GhostSurvive).unwrap();
        let r2 = never_visit_prob(&m2, &[0], &opts()).unwrap();
        assert!(r2.vector.values[1] <= r.vector.values[1]);
    }

    #[test]
    fn local_extinction_reducible_line_finite_target() {
        // right drift: any finite target is left behind, q(., A) = 1;
        // ghost-die is the converging bracket for local questions
        let m = registry::reducible_line(0.7, 80, BoundaryPolicy::GhostDie).unwrap();
        let r = local_extinction(&m, &[0, 1, 2], &opts()).unwrap();
        assert!(r.q.vector.values.iter().all(|&v| v > 1.0 - 1e-7));
    }

    #[test]
    fn local_extinction_whole_window_equals_global() {
        let m = registry::reducible_line(0.7, 80, BoundaryPolicy::GhostSurvive).unwrap();
        let window: Vec<Site> = m.window().sites().to_vec();
        let local = local_extinction(&m, &window, &opts()).unwrap();
        let global = global_extinction(&m, &opts());
        assert!(local.q.vector.sup_dist(&global.vector) < 1e-8);
    }

    #[test]
    fn local_extinction_tree_supercritical() {
        // q(x, {x}) = 1/(d lambda) above lambda_s
        let m = registry::tree_counterpart_radial(4, 0.3, 0.0, 300, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let r = local_extinction(&m, &[0], &opts()).unwrap();
        let want = 1.0 / 1.2;
        assert!(
            (r.q.vector.values[0] - want).abs() < 1e-5,
            "q(root, root) = {} vs {want}",
            r.q.vector.values[0]
        );
    }

    #[test]
    fn classify_tree_pure_global() {
        // 1/d < lambda <= lambda_s: global survival, local extinction
        let m = registry::tree_counterpart_radial(4, 0.27, 0.0, 300, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let c = classify(&m, 0, &[0], &opts(), 1e-4).unwrap();
        assert_eq!(c.regime, Regime::PureGlobal);
        assert!(!c.inconclusive);
    }

    #[test]
    fn classify_subcritical_bp() {
        let m = registry::binary_bp(0.4).unwrap();
        let c = classify(&m, 0, &[0], &opts(), 1e-6).unwrap();
        assert_eq!(c.regime, Regime::GlobalExtinction);
    }

    #[test]
    fn strong_condition_whole_window_holds() {
        let m = registry::binary_bp(0.7).unwrap();
        let r = check_strong_condition(&m, &[0], &opts(), 1e-8).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn strong_condition_loop_model_between_critical_points() {
        // modified tree in its strong-local window (lambda between
        // lambda_w' and lambda_w): visiting the root is unavoidable on
        // survival, so q_0 <= q_bar everywhere
        let m = registry::tree_counterpart_radial(4, 0.22, 5.0, 200, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let r = check_strong_condition(&m, &[0], &opts(), 1e-6).unwrap();
        assert!(r.holds, "max excess {}", r.max_excess);
    }

    #[test]
    fn strong_condition_tree_pure_global_fails_with_witness() {
        let m = registry::tree_counterpart_radial(4, 0.27, 0.0, 200, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let r = check_strong_condition(&m, &[0], &opts(), 1e-6).unwrap();
        assert!(!r.holds);
        assert!(r.witness.is_some());
        assert!(r.witness.unwrap() != 0);
    }

    #[test]
    fn ug_membership_counterexample3() {
        let m = registry::counterexample3();
        let inside = |v: Vec<f64>| {
            is_in_ug(
                &m,
                &ProbVector {
                    values: v,
                    boundary: 1.0,
                },
            )
        };
        assert!(inside(vec![0.5, 0.5, 1.0]).inside);
        assert!(inside(vec![0.5, 1.0, 0.5]).inside);
        assert!(inside(vec![1.0, 1.0, 1.0]).inside);
        // z(t) = (1/2, (1+t)/2, 1 - t/2) leaves U_G for t in (0,1),
        // violating component 1: z2 z3 > 1/2
        let t = 0.5;
        let r = inside(vec![0.5, (1.0 + t) / 2.0, 1.0 - t / 2.0]);
        assert!(!r.inside);
        assert_eq!(r.violating_site, Some(1));
        // G_1 = 0.75 * 0.75 = 0.5625 > 0.5
        assert!((r.max_violation - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn fixed_points_counterexample1() {
        let m = registry::counterexample1();
        let fps = enumerate_fixed_points(&m, 41, 1e-9).unwrap();
        assert_eq!(fps.len(), 2, "F_G = {{(0, 1/2), (1, 1)}}");
        assert!((fps[0].values[0] - 0.0).abs() < 1e-8);
        assert!((fps[0].values[1] - 0.5).abs() < 1e-8);
        assert!((fps[1].values[0] - 1.0).abs() < 1e-8);
        assert!((fps[1].values[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fixed_points_counterexample2() {
        let m = registry::counterexample2();
        let fps = enumerate_fixed_points(&m, 41, 1e-9).unwrap();
        assert_eq!(fps.len(), 2);
        // both on the bisector at 1/3 and 1
        assert!((fps[0].values[0] - 1.0 / 3.0).abs() < 1e-8);
        assert!((fps[0].values[1] - 1.0 / 3.0).abs() < 1e-8);
        assert!((fps[1].values[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fixed_points_counterexample3() {
        let m = registry::counterexample3();
        let fps = enumerate_fixed_points(&m, 21, 1e-9).unwrap();
        assert_eq!(fps.len(), 2, "only (0,0,0) and (1,1,1)");
        assert!(fps[0].values.iter().all(|&v| v.abs() < 1e-8));
        assert!(fps[1].values.iter().all(|&v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn smallest_fixed_point_dominated() {
        for m in [
            registry::counterexample1(),
            registry::counterexample2(),
            registry::counterexample3(),
        ] {
            let q = global_extinction(&m, &opts());
            for fp in enumerate_fixed_points(&m, 21, 1e-9).unwrap() {
                assert!(
                    q.vector.le(&fp, 1e-8),
                    "q_bar must be the smallest fixed point"
                );
            }
        }
    }

    #[test]
    fn convexity_witness_counterexample1() {
        let m = registry::counterexample1();
        let w = convexity_witness(&m, 1000, 42).expect("xy is not convex");
        assert_eq!(w.site, 1);
        assert!(w.gap > 0.2, "corner witness has G_1(mid) = 1/4 > 0");
    }

    #[test]
    fn convexity_witness_counterexample2_none() {
        let m = registry::counterexample2();
        assert!(convexity_witness(&m, 100_000, 42).is_none());
    }

    #[test]
    fn segment_convexity_on_comparable_endpoints() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in [registry::counterexample1(), registry::counterexample3()] {
            let n = m.window().len();
            for _ in 0..500 {
                let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let z: Vec<f64> = w
                    .iter()
                    .map(|&v| v + (1.0 - v) * rng.random::<f64>())
                    .collect();
                let t: f64 = rng.random();
                let mid: Vec<f64> = w.iter().zip(&z).map(|(a, b)| a + t * (b - a)).collect();
                let b = 1.0;
                let mut gw = vec![0.0; n];
                let mut gz = vec![0.0; n];
                let mut gm = vec![0.0; n];
                m.apply_g_into(&w, b, &mut gw);
                m.apply_g_into(&z, b, &mut gz);
                m.apply_g_into(&mid, b, &mut gm);
                for i in 0..n {
                    assert!(
                        gm[i] <= (1.0 - t) * gw[i] + t * gz[i] + 1e-10,
                        "segment convexity violated on comparable endpoints"
                    );
                }
            }
        }
    }

    #[test]
    fn monotonicity_of_g() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let models = [
            registry::counterexample1(),
            registry::counterexample2(),
            registry::counterexample3(),
            registry::reducible_line(0.7, 30, BoundaryPolicy::GhostSurvive).unwrap(),
            registry::irreducible_line(2.0 / 3.0, 1.0 / 9.0, 30, BoundaryPolicy::GhostDie).unwrap(),
            registry::tree_counterpart_ball(4, 0.3, 0.0, 3, BoundaryPolicy::GhostDie).unwrap(),
        ];
        for m in &models {
            let n = m.window().len();
            for _ in 0..200 {
                let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                let w: Vec<f64> = z
                    .iter()
                    .map(|&v| v + (1.0 - v) * rng.random::<f64>())
                    .collect();
                let zv = ProbVector::from_values(m, z);
                let wv = ProbVector::from_values(m, w);
                assert!(apply_g(m, &zv).le(&apply_g(m, &wv), 1e-12));
            }
        }
    }

    #[test]
    fn extinction_ordering_nested_targets_finite_model() {
        // finite explicit model, no truncation: A subset of B gives
        // q(., A) >= q(., B) >= q_bar componentwise
        let m = registry::counterexample3();
        let qa = local_extinction(&m, &[1], &opts()).unwrap().q.vector;
        let qb = local_extinction(&m, &[1, 2], &opts()).unwrap().q.vector;
        let qbar = global_extinction(&m, &opts()).vector;
        assert!(qb.le(&qa, 1e-10));
        assert!(qbar.le(&qb, 1e-10));
    }

    #[test]
    fn extinction_ordering_nested_targets() {
        // A subset of B implies q(., A) >= q(., B) >= q_bar
        let m = registry::tree_counterpart_radial(4, 0.32, 0.0, 120, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let a = [0];
        let b = [0, 1, 2];
        let qa = local_extinction(&m, &a, &opts()).unwrap().q.vector;
        let qb = local_extinction(&m, &b, &opts()).unwrap().q.vector;
        let qbar = global_extinction(&m, &opts()).vector;
        assert!(qb.le(&qa, 1e-8));
        assert!(qbar.le(&qb, 1e-8));
    }

    #[test]
    fn bracketing_policies_order() {
        // ghost-survive <= ghost-die at every site, and windows widen
        // monotonically
        let qs = |n: Site, policy| {
            let m = registry::reducible_line(0.7, n, policy).unwrap();
            global_extinction(&m, &opts()).vector
        };
        let s100 = qs(100, BoundaryPolicy::GhostSurvive);
        let d100 = qs(100, BoundaryPolicy::GhostDie);
        for i in 0..=100 {
            assert!(s100.values[i] <= d100.values[i] + 1e-12);
        }
        let s150 = qs(150, BoundaryPolicy::GhostSurvive);
        let d150 = qs(150, BoundaryPolicy::GhostDie);
        for i in 0..=100 {
            assert!(
                s100.values[i] <= s150.values[i] + 1e-10,
                "survive tightens upward"
            );
            assert!(
                d150.values[i] <= d100.values[i] + 1e-10,
                "die tightens downward"
            );
        }
    }

    #[test]
    fn certificate_tree_equality_vector() {
        let m = registry::tree_counterpart_radial(4, 0.3, 0.0, 60, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let v = ProbVector::constant(m.window().len(), 1.0 / 6.0, 1.0 / 6.0);
        let r = survival_certificate(&m, &v).unwrap();
        assert!(
            r.holds,
            "Mv = v/(1-v) with equality at v = 1 - 1/(d lambda)"
        );
        assert!(r.worst_slack.abs() < 1e-12);
        assert!(!r.vacuous);
    }

    #[test]
    fn certificate_zero_vacuous_and_subcritical_fails() {
        let m = registry::tree_counterpart_radial(4, 0.2, 0.0, 60, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let zero = ProbVector::constant(m.window().len(), 0.0, 0.0);
        let r = survival_certificate(&m, &zero).unwrap();
        assert!(r.holds && r.vacuous);
        let v = ProbVector::constant(m.window().len(), 0.3, 0.3);
        let r = survival_certificate(&m, &v).unwrap();
        assert!(!r.holds, "lambda d < 1 gives Mv < v <= v/(1-v)");
        let bad = ProbVector::constant(m.window().len(), 1.0, 0.0);
        assert!(survival_certificate(&m, &bad).is_err());
    }

    #[test]
    fn error_paths() {
        let line = registry::reducible_line(0.7, 30, BoundaryPolicy::GhostSurvive).unwrap();
        // empty target set
        assert!(never_visit_prob(&line, &[], &opts()).is_err());
        // target outside the window
        assert!(local_extinction(&line, &[99], &opts()).is_err());
        // starting site outside the window
        assert!(classify(&line, -3, &[0], &opts(), 1e-6).is_err());
        // fixed-point enumeration needs a small window
        assert!(enumerate_fixed_points(&line, 5, 1e-9).is_err());
        // certificate applies to counterparts only
        let v = ProbVector::constant(31, 0.1, 0.0);
        assert!(survival_certificate(&line, &v).is_err());
    }

    #[test]
    fn iterates_are_monotone() {
        // global extinction iterates increase; never-visit iterates decrease
        let m = registry::irreducible_line(2.0 / 3.0, 1.0 / 9.0, 40, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let mut z = ProbVector::zeros(&m);
        for _ in 0..50 {
            let next = apply_g(&m, &z);
            assert!(z.le(&next, 1e-15));
            z = next;
        }
        let mut v = ProbVector::ones(&m);
        let slots: Vec<u32> = vec![0];
        v.values[0] = 0.0;
        for _ in 0..50 {
            let mut next = apply_g(&m, &v);
            for &s in &slots {
                next.values[s as usize] = 0.0;
            }
            assert!(next.le(&v, 1e-15));
            v = next;
        }
    }
}
