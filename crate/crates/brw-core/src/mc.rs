//! Seeded Monte Carlo simulation of discrete-time BRWs.
//!
//! Replicate streams are derived by counter-based splitting of the seed,
//! so every replicate is a pure function of `(model, config, index)` and
//! results are independent of execution order and thread count. Sites
//! holding many particles are advanced with aggregated samplers (negative
//! binomial / multinomial), which draw from exactly the same distribution
//! as the per-particle loop.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use crate::math;
use crate::model::{BRWModel, BoundaryPolicy, ModelError, Site, SiteLaw, TotalLaw};

/// Aggregated sampling kicks in at this per-site population.
const AGGREGATE_THRESHOLD: u64 = 16;

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub seed: u64,
    pub replicates: u64,
    /// Generation cap per replicate.
    pub horizon: u32,
    /// Cumulative particle-generations a replicate may process before it
    /// is censored (and classified surviving).
    pub particle_cap: u64,
    /// Target set for visit tracking.
    pub target: Vec<Site>,
    pub track_visits: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            replicates: 10_000,
            horizon: 200,
            particle_cap: 10_000_000,
            target: Vec::new(),
            track_visits: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplicateOutcome {
    pub alive_at_horizon: bool,
    /// Population was still alive at generation `horizon / 2`.
    pub alive_at_half: bool,
    pub escaped: bool,
    pub ever_visited: bool,
    /// Last generation at which some particle occupied the target set.
    pub last_visit_gen: Option<u32>,
    pub censored: bool,
    /// Generation at which the replicate stopped evolving (extinction,
    /// censoring, or the horizon).
    pub end_gen: u32,
}

/// A Bernoulli estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    fn from_count(count: u64, n: u64) -> Estimate {
        let p = count as f64 / n as f64;
        Estimate {
            value: p,
            se: math::sqrt(p * (1.0 - p) / n as f64),
        }
    }

    /// Whether `x` lies within `k` standard errors (floored at `1/n` so
    /// zero-count estimates keep a nonzero band).
    pub fn within(&self, x: f64, k: f64, n: u64) -> bool {
        let band = k * self.se.max(1.0 / n as f64);
        (self.value - x).abs() <= band
    }
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub replicates: u64,
    pub per_replicate: Vec<ReplicateOutcome>,
    /// Fraction of replicates dead by the horizon: estimates `q_bar(x)`.
    pub extinct: Estimate,
    /// Fraction with no target visit after `end_gen / 2`: estimates
    /// `q(x, A)` (biased toward extinction; see `horizon_stable`).
    pub local_extinct: Estimate,
    /// Fraction that never visited the target: estimates `q_0(x, A)`.
    pub never_visited: Estimate,
    pub censored: u64,
    pub escaped: u64,
    /// False when the half-horizon extinction estimate differs from the
    /// full-horizon one by more than 3 standard errors, which signals an
    /// insufficient horizon.
    pub horizon_stable: bool,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Counter-based per-replicate stream: a ChaCha key derived from
/// `(seed, replicate)` through splitmix64.
fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut state = seed ^ replicate.wrapping_mul(0xD1B54A32D192ED03);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Geometric total-offspring sample with `P(n) = (1/(1+m)) (m/(1+m))^n`.
fn sample_geometric(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    if mean == 0.0 {
        return 0;
    }
    let r = mean / (1.0 + mean);
    let u: f64 = rng.random();
    // CDF inversion: n = floor(ln(1-u) / ln r); u in [0,1) keeps the log finite
    (math::ln(1.0 - u) / math::ln(r)) as u64
}

/// Sum of `count` independent geometric samples: negative binomial via the
/// Gamma-Poisson mixture for large counts.
fn sample_geometric_sum(rng: &mut ChaCha8Rng, mean: f64, count: u64) -> u64 {
    if mean == 0.0 || count == 0 {
        return 0;
    }
    if count < AGGREGATE_THRESHOLD {
        let mut total = 0;
        for _ in 0..count {
            total += sample_geometric(rng, mean);
        }
        return total;
    }
    // NB(count, r) with r = m/(1+m) is Poisson(Gamma(count, scale = m))
    let gamma = rand_distr::Gamma::new(count as f64, mean).expect("valid gamma parameters");
    let lambda: f64 = gamma.sample(rng);
    if lambda == 0.0 {
        return 0;
    }
    let poisson = rand_distr::Poisson::new(lambda).expect("valid poisson parameter");
    poisson.sample(rng) as u64
}

fn sample_binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n < AGGREGATE_THRESHOLD {
        let mut k = 0;
        for _ in 0..n {
            if rng.random::<f64>() < p {
                k += 1;
            }
        }
        return k;
    }
    rand_distr::Binomial::new(n, p)
        .expect("valid binomial parameters")
        .sample(rng)
}

/// Multinomial split of `n` items over `probs` by sequential conditionals.
fn sample_multinomial(rng: &mut ChaCha8Rng, n: u64, probs: &[f64], out: &mut [u64]) {
    let mut remaining = n;
    let mut rest: f64 = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            out[i] = 0;
            continue;
        }
        if i + 1 == probs.len() {
            out[i] = remaining;
            break;
        }
        let cond = if rest > 0.0 { (p / rest).min(1.0) } else { 0.0 };
        let k = sample_binomial(rng, remaining, cond);
        out[i] = k;
        remaining -= k;
        rest -= p;
    }
}

/// Internal per-slot sampling tables.
struct CompiledSim {
    laws: Vec<SimLaw>,
    target_slots: Vec<usize>,
}

enum SimLaw {
    Atoms {
        weights: Vec<f64>,
        cumulative: Vec<f64>,
        /// Placements resolved to window slots; out-of-window children
        /// are counted separately.
        placements: Vec<(Vec<(usize, u32)>, u32)>,
    },
    Indep {
        total: TotalLaw,
        probs: Vec<f64>,
        slots: Vec<Option<usize>>,
    },
}

fn compile_sim(model: &BRWModel, target: &[Site]) -> Result<CompiledSim, ModelError> {
    let window = model.window();
    let mut target_slots = Vec::with_capacity(target.len());
    for &s in target {
        let slot = window
            .slot_of(s)
            .ok_or(ModelError::SiteNotInWindow { site: s })? as usize;
        target_slots.push(slot);
    }
    let laws = model
        .laws()
        .iter()
        .map(|law| match law {
            SiteLaw::Atoms(a) => {
                let weights: Vec<f64> = a.atoms().iter().map(|&(w, _)| w).collect();
                let mut cumulative = Vec::with_capacity(weights.len());
                let mut acc = 0.0;
                for &w in &weights {
                    acc += w;
                    cumulative.push(acc);
                }
                let placements = a
                    .atoms()
                    .iter()
                    .map(|(_, p)| {
                        let mut in_pairs = Vec::new();
                        let mut out = 0;
                        for &(s, c) in p.pairs() {
                            match window.slot_of(s) {
                                Some(t) => in_pairs.push((t as usize, c)),
                                None => out += c,
                            }
                        }
                        (in_pairs, out)
                    })
                    .collect();
                SimLaw::Atoms {
                    weights,
                    cumulative,
                    placements,
                }
            }
            SiteLaw::Indep(i) => SimLaw::Indep {
                total: i.total.clone(),
                probs: i.targets.iter().map(|&(_, p)| p).collect(),
                slots: i
                    .targets
                    .iter()
                    .map(|&(s, _)| window.slot_of(s).map(|t| t as usize))
                    .collect(),
            },
        })
        .collect();
    Ok(CompiledSim { laws, target_slots })
}

fn sample_total_table(rng: &mut ChaCha8Rng, table: &[f64]) -> u64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (n, &p) in table.iter().enumerate() {
        acc += p;
        if u < acc {
            return n as u64;
        }
    }
    table.len().saturating_sub(1) as u64
}

/// Evolves one replicate; deterministic given `(seed, replicate)`.
fn run_replicate(
    sim: &CompiledSim,
    n_slots: usize,
    start_slot: usize,
    policy: BoundaryPolicy,
    cfg: &SimConfig,
    replicate: u64,
) -> ReplicateOutcome {
    let mut rng = replicate_rng(cfg.seed, replicate);
    let mut pop = vec![0u64; n_slots];
    let mut next = vec![0u64; n_slots];
    pop[start_slot] = 1;

    let mut escaped = false;
    let mut censored = false;
    let mut ever_visited = false;
    let mut last_visit_gen = None;
    let mut alive_at_half = true;
    let half = cfg.horizon / 2;
    let mut processed: u64 = 0;
    let mut end_gen = cfg.horizon;

    let track = cfg.track_visits && !sim.target_slots.is_empty();
    if track && sim.target_slots.iter().any(|&t| pop[t] > 0) {
        ever_visited = true;
        last_visit_gen = Some(0);
    }

    let mut scratch = Vec::new();
    let mut gen = 0;
    while gen < cfg.horizon {
        gen += 1;
        let alive: u64 = pop.iter().sum();
        if alive == 0 {
            end_gen = gen - 1;
            break;
        }
        processed += alive;
        if processed > cfg.particle_cap {
            censored = true;
            end_gen = gen - 1;
            break;
        }
        for x in next.iter_mut() {
            *x = 0;
        }
        for slot in 0..n_slots {
            let c = pop[slot];
            if c == 0 {
                continue;
            }
            match &sim.laws[slot] {
                SimLaw::Atoms {
                    weights,
                    cumulative,
                    placements,
                } => {
                    if c >= AGGREGATE_THRESHOLD {
                        scratch.resize(weights.len(), 0u64);
                        sample_multinomial(&mut rng, c, weights, &mut scratch);
                        for (a, &count) in scratch.iter().enumerate() {
                            if count == 0 {
                                continue;
                            }
                            let (in_pairs, out) = &placements[a];
                            for &(t, k) in in_pairs {
                                next[t] += count * k as u64;
                            }
                            if *out > 0 {
                                escaped = true;
                            }
                        }
                    } else {
                        for _ in 0..c {
                            let u: f64 = rng.random();
                            let a = cumulative
                                .iter()
                                .position(|&acc| u < acc)
                                .unwrap_or(cumulative.len() - 1);
                            let (in_pairs, out) = &placements[a];
                            for &(t, k) in in_pairs {
                                next[t] += k as u64;
                            }
                            if *out > 0 {
                                escaped = true;
                            }
                        }
                    }
                }
                SimLaw::Indep {
                    total,
                    probs,
                    slots,
                } => {
                    let children = match total {
                        TotalLaw::Geometric { mean } => sample_geometric_sum(&mut rng, *mean, c),
                        TotalLaw::Table(t) => {
                            let mut sum = 0;
                            for _ in 0..c {
                                sum += sample_total_table(&mut rng, t);
                            }
                            sum
                        }
                    };
                    if children == 0 {
                        continue;
                    }
                    scratch.resize(probs.len(), 0u64);
                    sample_multinomial(&mut rng, children, probs, &mut scratch);
                    for (j, &count) in scratch.iter().enumerate() {
                        if count == 0 {
                            continue;
                        }
                        match slots[j] {
                            Some(t) => next[t] += count,
                            None => escaped = true,
                        }
                    }
                }
            }
        }
        core::mem::swap(&mut pop, &mut next);
        if track && sim.target_slots.iter().any(|&t| pop[t] > 0) {
            ever_visited = true;
            last_visit_gen = Some(gen);
        }
        if gen == half {
            let alive_now = pop.iter().any(|&c| c > 0)
                || (escaped && policy == BoundaryPolicy::GhostSurvive)
                || censored;
            alive_at_half = alive_now;
        }
    }

    let population_alive = pop.iter().any(|&c| c > 0);
    let ghost_alive = escaped && policy == BoundaryPolicy::GhostSurvive;
    let alive_at_horizon = population_alive || ghost_alive || censored;
    if end_gen < half {
        alive_at_half = alive_at_horizon;
    }
    ReplicateOutcome {
        alive_at_horizon,
        alive_at_half,
        escaped,
        ever_visited,
        last_visit_gen,
        censored,
        end_gen,
    }
}

/// Reusable compiled simulation: immutable after construction, safe to
/// share across threads; each replicate is a pure function of its index.
pub struct Simulator {
    sim: CompiledSim,
    n_slots: usize,
    start_slot: usize,
    policy: BoundaryPolicy,
    cfg: SimConfig,
}

impl Simulator {
    pub fn new(model: &BRWModel, start: Site, cfg: SimConfig) -> Result<Self, ModelError> {
        let sim = compile_sim(model, &cfg.target)?;
        let start_slot = model
            .window()
            .slot_of(start)
            .ok_or(ModelError::SiteNotInWindow { site: start })? as usize;
        Ok(Simulator {
            sim,
            n_slots: model.window().len(),
            start_slot,
            policy: model.policy(),
            cfg,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Runs one replicate by index.
    pub fn run(&self, replicate: u64) -> ReplicateOutcome {
        run_replicate(
            &self.sim,
            self.n_slots,
            self.start_slot,
            self.policy,
            &self.cfg,
            replicate,
        )
    }
}

/// Simulates a single replicate by index; the building block for
/// order-independent parallel drivers.
pub fn simulate_replicate(
    model: &BRWModel,
    start: Site,
    cfg: &SimConfig,
    replicate: u64,
) -> Result<ReplicateOutcome, ModelError> {
    let sim = Simulator::new(model, start, cfg.clone())?;
    Ok(sim.run(replicate))
}

/// Deterministic aggregation of per-replicate outcomes, in index order.
pub fn aggregate(outcomes: Vec<ReplicateOutcome>) -> SimOutcome {
    let n = outcomes.len() as u64;
    let mut extinct = 0;
    let mut extinct_half = 0;
    let mut never = 0;
    let mut local_extinct = 0;
    let mut censored = 0;
    let mut escaped = 0;
    for r in &outcomes {
        if !r.alive_at_horizon {
            extinct += 1;
        }
        if !r.alive_at_half {
            extinct_half += 1;
        }
        if !r.ever_visited {
            never += 1;
        }
        let locally_surviving =
            r.alive_at_horizon && r.last_visit_gen.is_some_and(|g| g > r.end_gen / 2);
        if !locally_surviving {
            local_extinct += 1;
        }
        if r.censored {
            censored += 1;
        }
        if r.escaped {
            escaped += 1;
        }
    }
    let extinct_est = Estimate::from_count(extinct, n);
    let half_est = Estimate::from_count(extinct_half, n);
    let horizon_stable =
        (extinct_est.value - half_est.value).abs() <= 3.0 * extinct_est.se.max(1.0 / n as f64);
    SimOutcome {
        replicates: n,
        per_replicate: outcomes,
        extinct: extinct_est,
        local_extinct: Estimate::from_count(local_extinct, n),
        never_visited: Estimate::from_count(never, n),
        censored,
        escaped,
        horizon_stable,
    }
}

/// Sequential driver: replicates in index order.
pub fn simulate(model: &BRWModel, start: Site, cfg: &SimConfig) -> Result<SimOutcome, ModelError> {
    let sim = Simulator::new(model, start, cfg.clone())?;
    let outcomes = (0..cfg.replicates).map(|r| sim.run(r)).collect();
    Ok(aggregate(outcomes))
}

/// Empirical regime labels, mirroring the analytic taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmpiricalRegime {
    GlobalExtinction,
    PureGlobal,
    NonStrongLocal,
    StrongLocal,
}

impl EmpiricalRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            EmpiricalRegime::GlobalExtinction => "global-extinction",
            EmpiricalRegime::PureGlobal => "pure-global",
            EmpiricalRegime::NonStrongLocal => "non-strong-local",
            EmpiricalRegime::StrongLocal => "strong-local",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegimeEstimate {
    pub outcome: SimOutcome,
    pub regime: EmpiricalRegime,
    /// Separation statistic of the strong/non-strong decision: the
    /// globally-alive-but-locally-dead fraction in units of its SE.
    pub separation: f64,
    pub inconclusive: bool,
}

/// Labels the regime of an existing simulation outcome (visit tracking
/// must have been on).
pub fn classify_outcome(outcome: &SimOutcome) -> (EmpiricalRegime, f64, bool) {
    let n = outcome.replicates;
    let locally_surviving = |r: &ReplicateOutcome| {
        r.alive_at_horizon && r.last_visit_gen.is_some_and(|g| g > r.end_gen / 2)
    };
    // globally alive but locally dead: the strong/non-strong discriminant
    let diff_count = outcome
        .per_replicate
        .iter()
        .filter(|r| r.alive_at_horizon && !locally_surviving(r))
        .count() as u64;
    let diff = Estimate::from_count(diff_count, n);
    let separation = diff.value / diff.se.max(1.0 / n as f64);

    let survive_count = outcome
        .per_replicate
        .iter()
        .filter(|r| r.alive_at_horizon)
        .count() as u64;
    let local_survive_count = outcome
        .per_replicate
        .iter()
        .filter(|r| locally_surviving(r))
        .count() as u64;

    let regime = if survive_count == 0 {
        EmpiricalRegime::GlobalExtinction
    } else if local_survive_count == 0 {
        EmpiricalRegime::PureGlobal
    } else if separation > 3.0 {
        EmpiricalRegime::NonStrongLocal
    } else {
        EmpiricalRegime::StrongLocal
    };
    let inconclusive = separation > 2.0 && separation < 4.0;
    (regime, separation, inconclusive)
}

/// Labels the regime from simulation estimates.
pub fn estimate_regime(
    model: &BRWModel,
    start: Site,
    cfg: &SimConfig,
) -> Result<RegimeEstimate, ModelError> {
    if !cfg.track_visits || cfg.target.is_empty() {
        return Err(ModelError::BadParameter {
            what: "estimate_regime needs visit tracking and a target set",
        });
    }
    let outcome = simulate(model, start, cfg)?;
    let (regime, separation, inconclusive) = classify_outcome(&outcome);
    Ok(RegimeEstimate {
        outcome,
        regime,
        separation,
        inconclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn replicate_streams_are_stable() {
        let m = registry::binary_bp(0.7).unwrap();
        let cfg = SimConfig {
            seed: 42,
            replicates: 50,
            horizon: 50,
            particle_cap: 10_000,
            ..Default::default()
        };
        let a = simulate(&m, 0, &cfg).unwrap();
        let b = simulate(&m, 0, &cfg).unwrap();
        assert_eq!(a.per_replicate, b.per_replicate, "bit-exact reruns");
        // single replicates match the batch, regardless of order
        for idx in [0u64, 7, 49] {
            let r = simulate_replicate(&m, 0, &cfg, idx).unwrap();
            assert_eq!(r, a.per_replicate[idx as usize]);
        }
    }

    #[test]
    fn binary_bp_extinction_matches_oracle() {
        let m = registry::binary_bp(0.7).unwrap();
        let cfg = SimConfig {
            seed: 1,
            replicates: 20_000,
            horizon: 200,
            particle_cap: 3_000,
            ..Default::default()
        };
        let out = simulate(&m, 0, &cfg).unwrap();
        let q = 3.0 / 7.0;
        assert!(
            out.extinct.within(q, 3.0, cfg.replicates),
            "q_hat = {} vs {q} (se {})",
            out.extinct.value,
            out.extinct.se
        );
        assert!(out.horizon_stable);
    }

    #[test]
    fn horizon_zero_everyone_alive() {
        let m = registry::binary_bp(0.5).unwrap();
        let cfg = SimConfig {
            seed: 3,
            replicates: 100,
            horizon: 0,
            ..Default::default()
        };
        let out = simulate(&m, 0, &cfg).unwrap();
        assert_eq!(out.extinct.value, 0.0, "initial particle is present");
    }

    #[test]
    fn subcritical_tree_counterpart_dies() {
        let m = registry::tree_counterpart_radial(4, 0.2, 0.0, 101, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let cfg = SimConfig {
            seed: 7,
            replicates: 3_000,
            horizon: 100,
            particle_cap: 100_000,
            target: alloc::vec![0],
            track_visits: true,
        };
        let out = simulate(&m, 0, &cfg).unwrap();
        assert!(
            out.extinct.value >= 1.0 - 3.0 / cfg.replicates as f64,
            "lambda <= lambda_w dies out globally, got {}",
            out.extinct.value
        );
        assert!(out.censored <= 3);
    }

    #[test]
    fn estimator_sanity_orderings() {
        // q0_hat <= q_local_hat and q_bar_hat <= q_local_hat within noise
        let m = registry::tree_counterpart_radial(4, 0.3, 0.0, 101, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let cfg = SimConfig {
            seed: 11,
            replicates: 5_000,
            horizon: 100,
            particle_cap: 50_000,
            target: alloc::vec![0],
            track_visits: true,
        };
        // start off the target so q0 is informative
        let out = simulate(&m, 3, &cfg).unwrap();
        assert!(out.never_visited.value <= out.local_extinct.value + 1e-12);
        assert!(out.extinct.value <= out.local_extinct.value + 3.0 * out.extinct.se);
        assert!(
            out.never_visited.value > 0.0,
            "some replicates never reach the root"
        );
    }

    #[test]
    fn censoring_monotonicity() {
        let m = registry::binary_bp(0.7).unwrap();
        let base = SimConfig {
            seed: 5,
            replicates: 10_000,
            horizon: 200,
            particle_cap: 2_000,
            ..Default::default()
        };
        let low = simulate(&m, 0, &base).unwrap();
        let mut cfg = base.clone();
        cfg.particle_cap = 20_000;
        let high = simulate(&m, 0, &cfg).unwrap();
        // raising the cap may only move extinction up within noise
        assert!(
            high.extinct.value >= low.extinct.value - 1e-12,
            "censored-as-surviving bias shrinks with the cap"
        );
        assert!(
            (high.extinct.value - low.extinct.value)
                <= 3.0 * low.extinct.se.max(1.0 / base.replicates as f64)
        );
    }

    #[test]
    fn aggregated_and_per_particle_paths_agree_statistically() {
        // two seeds, one model, moderate populations: the aggregate path
        // must reproduce the per-particle distribution of extinction
        let m = registry::binary_bp(0.65).unwrap();
        let q_true = 0.35 / 0.65; // (1-p)/p
        let cfg = SimConfig {
            seed: 13,
            replicates: 20_000,
            horizon: 150,
            particle_cap: 2_000,
            ..Default::default()
        };
        let out = simulate(&m, 0, &cfg).unwrap();
        assert!(out.extinct.within(q_true, 3.5, cfg.replicates));
    }

    #[test]
    fn regime_estimate_subcritical() {
        let m = registry::binary_bp(0.3).unwrap();
        let cfg = SimConfig {
            seed: 17,
            replicates: 2_000,
            horizon: 100,
            particle_cap: 10_000,
            target: alloc::vec![0],
            track_visits: true,
        };
        let r = estimate_regime(&m, 0, &cfg).unwrap();
        assert_eq!(r.regime, EmpiricalRegime::GlobalExtinction);
        // all estimates are 1 for a subcritical model started on the target
        assert_eq!(r.outcome.extinct.value, 1.0);
        assert_eq!(r.outcome.local_extinct.value, 1.0);
        assert_eq!(
            r.outcome.never_visited.value, 0.0,
            "the start site is the target"
        );
    }

    #[test]
    fn multinomial_conserves_mass() {
        let mut rng = replicate_rng(1, 2);
        let probs = [0.2, 0.5, 0.3];
        let mut out = [0u64; 3];
        for n in [0u64, 1, 5, 1000, 123_456] {
            sample_multinomial(&mut rng, n, &probs, &mut out);
            assert_eq!(out.iter().sum::<u64>(), n);
        }
    }

    #[test]
    fn geometric_sampler_mean() {
        let mut rng = replicate_rng(3, 4);
        let mean = 1.2;
        let n = 200_000;
        let mut total = 0u64;
        for _ in 0..n {
            total += sample_geometric(&mut rng, mean);
        }
        let avg = total as f64 / n as f64;
        assert!((avg - mean).abs() < 0.02, "sample mean {avg}");
        // aggregated sum matches c * mean
        let mut total2 = 0u64;
        let reps = 2_000;
        for _ in 0..reps {
            total2 += sample_geometric_sum(&mut rng, mean, 100);
        }
        let avg2 = total2 as f64 / (reps as f64 * 100.0);
        assert!((avg2 - mean).abs() < 0.02, "aggregated mean {avg2}");
    }
}
