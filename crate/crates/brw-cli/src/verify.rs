//! Verification fixtures for the registered examples. Each tag runs a
//! fixed assertion suite against golden values; the acceptance test and
//! the `verify-example` subcommand both call into this module.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use anyhow::{bail, Result};
use serde::Serialize;

use brw_core::ctbrw::{self, CriticalOptions, PhaseOptions, PhaseRegime};
use brw_core::family::{self, FamilyKind};
use brw_core::genfun::{self, FixedPointOptions, ProbVector, Regime};
use brw_core::mc::{self, EmpiricalRegime, SimConfig};
use brw_core::model::{first_moment, BoundaryPolicy, Site};
use brw_core::project::{self, ProjectionMap};
use brw_core::registry;
use brw_core::spectral;

use crate::par;

#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct ExampleReport {
    pub tag: String,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub elapsed_secs: f64,
}

impl ExampleReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        for a in &self.assertions {
            let mark = if a.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "  [{mark}] {} — {}", a.name, a.detail);
        }
        let _ = writeln!(
            out,
            "{}: {} ({} assertions, {:.2} s)",
            self.tag,
            if self.passed { "PASS" } else { "FAIL" },
            self.assertions.len(),
            self.elapsed_secs
        );
        out
    }
}

struct Suite {
    tag: String,
    assertions: Vec<Assertion>,
    start: Instant,
}

impl Suite {
    fn new(tag: &str) -> Self {
        Suite {
            tag: tag.to_string(),
            assertions: Vec::new(),
            start: Instant::now(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    fn close(self) -> ExampleReport {
        let passed = self.assertions.iter().all(|a| a.passed);
        ExampleReport {
            tag: self.tag,
            assertions: self.assertions,
            passed,
            elapsed_secs: self.start.elapsed().as_secs_f64(),
        }
    }
}

pub const ALL_TAGS: &[&str] = &[
    "counterexample1",
    "counterexample2",
    "counterexample3",
    "extinction-lines",
    "irreducible-N",
    "tree-phase",
    "mc-cross",
    "properties",
];

/// Time budgets per tag, from the acceptance contract.
pub fn budget(tag: &str) -> Duration {
    match tag {
        "counterexample1" | "counterexample2" | "counterexample3" => Duration::from_secs(5),
        "extinction-lines" => Duration::from_secs(10),
        "irreducible-N" => Duration::from_secs(30),
        "tree-phase" => Duration::from_secs(600),
        "mc-cross" => Duration::from_secs(900),
        "properties" => Duration::from_secs(300),
        _ => Duration::from_secs(600),
    }
}

pub fn run(tag: &str) -> Result<ExampleReport> {
    match tag {
        "counterexample1" => Ok(counterexample1()),
        "counterexample2" => Ok(counterexample2()),
        "counterexample3" => Ok(counterexample3()),
        "extinction-lines" => Ok(extinction_lines()),
        "irreducible-N" => Ok(irreducible_n()),
        "tree-phase" => Ok(tree_phase()),
        "mc-cross" => Ok(mc_cross()),
        "properties" => Ok(properties()),
        other => bail!("unregistered verification tag '{other}'"),
    }
}

fn opts() -> FixedPointOptions {
    FixedPointOptions::default()
}

fn counterexample1() -> ExampleReport {
    let mut s = Suite::new("counterexample1");
    let m = registry::counterexample1();

    let fps = genfun::enumerate_fixed_points(&m, 41, 1e-9).unwrap();
    let ok = fps.len() == 2
        && (fps[0].values[0]).abs() <= 1e-8
        && (fps[0].values[1] - 0.5).abs() <= 1e-8
        && (fps[1].values[0] - 1.0).abs() <= 1e-8
        && (fps[1].values[1] - 1.0).abs() <= 1e-8;
    s.check(
        "fixed points are {(0, 1/2), (1, 1)} within 1e-8",
        ok,
        format!(
            "{:?}",
            fps.iter().map(|f| f.values.clone()).collect::<Vec<_>>()
        ),
    );

    let witness = genfun::convexity_witness(&m, 10_000, 20250801);
    s.check(
        "a convexity violation exists",
        witness.is_some(),
        match &witness {
            Some(w) => format!(
                "G(t z + (1-t) w) exceeds the chord by {:.3} at site {} (t = {})",
                w.gap, w.site, w.t
            ),
            None => "no witness found".to_string(),
        },
    );

    // U_G = {(x, y) : 2y >= x + 1}; sampled on a 200^2 grid with a 1e-10
    // boundary band
    let n = 200;
    let mut mismatches = 0;
    let mut boundary_pts = 0;
    for i in 0..n {
        for j in 0..n {
            let x = i as f64 / (n - 1) as f64;
            let y = j as f64 / (n - 1) as f64;
            let margin = 2.0 * y - x - 1.0;
            if margin.abs() <= 1e-10 {
                boundary_pts += 1;
                continue;
            }
            let inside = genfun::is_in_ug(
                &m,
                &ProbVector {
                    values: vec![x, y],
                    boundary: 1.0,
                },
            )
            .inside;
            if inside != (margin > 0.0) {
                mismatches += 1;
            }
        }
    }
    s.check(
        "U_G membership matches 2y >= x+1 on the 200^2 grid",
        mismatches == 0,
        format!("{mismatches} misclassifications, {boundary_pts} boundary points skipped"),
    );

    // convexity of U_G itself: midpoints of sampled member pairs stay in
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20250803);
    let mut members = Vec::new();
    while members.len() < 300 {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        if genfun::is_in_ug(
            &m,
            &ProbVector {
                values: vec![x, y],
                boundary: 1.0,
            },
        )
        .inside
        {
            members.push((x, y));
        }
    }
    let mut midpoint_fails = 0;
    for pair in members.chunks_exact(2) {
        let mid = ProbVector {
            values: vec![0.5 * (pair[0].0 + pair[1].0), 0.5 * (pair[0].1 + pair[1].1)],
            boundary: 1.0,
        };
        if !genfun::is_in_ug(&m, &mid).inside {
            midpoint_fails += 1;
        }
    }
    s.check(
        "U_G is convex: sampled midpoints of member pairs stay inside",
        midpoint_fails == 0,
        format!("{midpoint_fails} failures over 150 sampled midpoints"),
    );

    s.close()
}

fn counterexample2() -> ExampleReport {
    let mut s = Suite::new("counterexample2");
    let m = registry::counterexample2();

    // oracle by algebraic elimination: on the bisector the fixed-point
    // equation is (1 + 3x^2)/4 = x, i.e. 3x^2 - 4x + 1 = 0
    let disc = (16.0f64 - 12.0).sqrt();
    let roots = [(4.0 - disc) / 6.0, (4.0 + disc) / 6.0];

    let fps = genfun::enumerate_fixed_points(&m, 41, 1e-9).unwrap();
    let two = fps.len() == 2;
    s.check(
        "exactly two fixed points",
        two,
        format!("found {}", fps.len()),
    );
    if two {
        let on_bisector = fps
            .iter()
            .all(|f| (f.values[0] - f.values[1]).abs() <= 1e-8);
        s.check(
            "both fixed points lie on the bisector",
            on_bisector,
            format!(
                "{:?}",
                fps.iter().map(|f| f.values.clone()).collect::<Vec<_>>()
            ),
        );
        let at_roots = (fps[0].values[0] - roots[0]).abs() <= 1e-8
            && (fps[1].values[0] - roots[1]).abs() <= 1e-8;
        s.check(
            "fixed points at {1/3, 1} within 1e-8 (quadratic oracle)",
            at_roots,
            format!("{} and {} vs {roots:?}", fps[0].values[0], fps[1].values[0]),
        );
    }

    let witness = genfun::convexity_witness(&m, 100_000, 20250802);
    s.check(
        "no convexity violation in 1e5 samples",
        witness.is_none(),
        match &witness {
            Some(w) => format!("unexpected witness at site {}", w.site),
            None => "each component is a convex polynomial".to_string(),
        },
    );

    s.close()
}

fn counterexample3() -> ExampleReport {
    let mut s = Suite::new("counterexample3");
    let m = registry::counterexample3();

    let fps = genfun::enumerate_fixed_points(&m, 21, 1e-9).unwrap();
    let ok = fps.len() == 2
        && fps[0].values.iter().all(|&v| v.abs() <= 1e-8)
        && fps[1].values.iter().all(|&v| (v - 1.0).abs() <= 1e-8);
    s.check(
        "fixed points are exactly {(0,0,0), (1,1,1)}",
        ok,
        format!(
            "{:?}",
            fps.iter().map(|f| f.values.clone()).collect::<Vec<_>>()
        ),
    );

    let inside = |v: Vec<f64>| {
        genfun::is_in_ug(
            &m,
            &ProbVector {
                values: v,
                boundary: 1.0,
            },
        )
    };
    let a = inside(vec![0.5, 0.5, 1.0]);
    let b = inside(vec![0.5, 1.0, 0.5]);
    s.check(
        "(1/2, 1/2, 1) and (1/2, 1, 1/2) are in U_G",
        a.inside && b.inside,
        format!(
            "violations: {:?} / {:?}",
            a.violating_site, b.violating_site
        ),
    );

    let mut segment_ok = true;
    let mut detail = String::new();
    for k in 1..=9 {
        let t = k as f64 / 10.0;
        let r = inside(vec![0.5, (1.0 + t) / 2.0, 1.0 - t / 2.0]);
        if r.inside || r.violating_site != Some(1) {
            segment_ok = false;
            let _ = write!(
                detail,
                "t={t}: inside={} site={:?}; ",
                r.inside, r.violating_site
            );
        }
    }
    s.check(
        "z(t) leaves U_G for t in {0.1..0.9} with the violation in component 1",
        segment_ok,
        if detail.is_empty() {
            "all nine t values violate component 1".to_string()
        } else {
            detail
        },
    );

    let est = spectral::estimate_ms(&m, 1, &[4], 1e-13).unwrap();
    let ms = est.last().unwrap().value;
    s.check(
        "M_s = 2 within 1e-8",
        (ms - 2.0).abs() <= 1e-8,
        format!("Perron root {ms}"),
    );

    s.close()
}

fn extinction_lines() -> ExampleReport {
    let mut s = Suite::new("extinction-lines");

    // reducible line, p = 0.7, window [0, 100], ghost-survive
    let p = 0.7;
    let m = registry::reducible_line(p, 100, BoundaryPolicy::GhostSurvive).unwrap();
    let r = genfun::global_extinction(&m, &opts());
    // backward-recursion oracle: z(N) = 1 - p, z(n) = p z(n+1)^2 + 1 - p
    let mut oracle = vec![0.0; 101];
    oracle[100] = 1.0 - p;
    for n in (0..100).rev() {
        oracle[n] = p * oracle[n + 1] * oracle[n + 1] + 1.0 - p;
    }
    let max_gap = r
        .vector
        .values
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    s.check(
        "reducible line matches the backward-recursion oracle at every site within 1e-9",
        max_gap <= 1e-9,
        format!("max gap {max_gap:.2e}"),
    );
    // boundary truncation decays at rate 0.6 per site, so sites up to
    // N - 40 carry the untruncated value 3/7
    let q = 3.0 / 7.0;
    let interior_gap = r.vector.values[..=60]
        .iter()
        .map(|v| (v - q).abs())
        .fold(0.0, f64::max);
    s.check(
        "interior components equal 3/7 within 1e-9",
        interior_gap <= 1e-9,
        format!("max interior gap {interior_gap:.2e} over sites 0..=60"),
    );

    // irreducible line, p = 2/3, eps = 1/9, window [0, 200]
    let (p, eps) = (2.0 / 3.0, 1.0 / 9.0);
    let m2 = registry::irreducible_line(p, eps, 200, BoundaryPolicy::GhostSurvive).unwrap();
    let r2 = genfun::global_extinction(&m2, &opts());
    let q2 = (1.0 - p) / (p - eps);
    let interior_gap2 = r2.vector.values[..=100]
        .iter()
        .map(|v| (v - q2).abs())
        .fold(0.0, f64::max);
    s.check(
        "irreducible line gives 0.6 within 1e-6 on the interior",
        interior_gap2 <= 1e-6 && (q2 - 0.6).abs() < 1e-12,
        format!("max interior gap {interior_gap2:.2e} over sites 0..=100"),
    );

    // ghost-die / ghost-survive bracket at every site, both models
    let mut bracket_ok = true;
    for (survive_model, die_model) in [
        (
            registry::reducible_line(0.7, 100, BoundaryPolicy::GhostSurvive).unwrap(),
            registry::reducible_line(0.7, 100, BoundaryPolicy::GhostDie).unwrap(),
        ),
        (
            registry::irreducible_line(p, eps, 200, BoundaryPolicy::GhostSurvive).unwrap(),
            registry::irreducible_line(p, eps, 200, BoundaryPolicy::GhostDie).unwrap(),
        ),
    ] {
        let qs = genfun::global_extinction(&survive_model, &opts()).vector;
        let qd = genfun::global_extinction(&die_model, &opts()).vector;
        if !qs.le(&qd, 1e-12) {
            bracket_ok = false;
        }
    }
    s.check(
        "ghost-survive <= ghost-die at every site",
        bracket_ok,
        "both line models".to_string(),
    );

    s.close()
}

fn irreducible_n() -> ExampleReport {
    let mut s = Suite::new("irreducible-N");
    let (p, eps) = (2.0 / 3.0, 1.0 / 9.0);

    // truncated first-return series vs the closed form
    let m = registry::irreducible_line(p, eps, 420, BoundaryPolicy::GhostSurvive).unwrap();
    let series = spectral::phi_series(&m, 0, 0, 400).unwrap();
    let closed = eps + (1.0 - (1.0 - 8.0 * eps * (p - eps)).sqrt()) / 2.0;
    let phi1 = match series.eval(1.0) {
        spectral::PhiEval::Value(v) => v,
        spectral::PhiEval::Overflow => f64::INFINITY,
    };
    s.check(
        "Phi(0,0|1) from 400 terms matches the closed form within 1e-4",
        (phi1 - closed).abs() <= 1e-4,
        format!("series {phi1:.7} vs closed form {closed:.7}"),
    );

    // both spectral routes agree on local extinction with margin
    let margin = 1e-3;
    let phi_ms = spectral::ms_from_phi(&m, 0, 400, 1e-10).unwrap();
    let perron = spectral::estimate_ms(&m, 0, &[30, 60], 1e-12).unwrap();
    let perron_best = perron.last().unwrap().value;
    s.check(
        "Ms_from_phi and estimate_Ms agree that M_s <= 1 with margin",
        phi_ms.value <= 1.0 - margin && perron_best <= 1.0 - margin,
        format!(
            "phi route {:.4}, Perron route {perron_best:.4}",
            phi_ms.value
        ),
    );

    // fixed-point families from three starts
    for &z0 in &[0.65, 0.8, 0.95] {
        let fam = family::fixedpoint_family(FamilyKind::Irreducible, p, eps, z0, 500).unwrap();
        s.check(
            &format!("family from z0 = {z0}: all (P_n) hold for n <= 500"),
            fam.pn_all_hold,
            format!(
                "strictly increasing to 1; 1 - z(500) = {:.3e}",
                fam.one_minus_z[500]
            ),
        );
        s.check(
            &format!("family from z0 = {z0}: fixed-point residual < 1e-12"),
            fam.max_residual < 1e-12,
            format!("max residual {:.3e}", fam.max_residual),
        );
    }

    // translate exploration: evidence is emitted, the conjecture is not
    // asserted
    let ns: Vec<usize> = (1..=40).collect();
    let rep = family::quasitransitive_translates(p, eps, 0.8, &ns, (-10, 10)).unwrap();
    let pinned = rep.rows.iter().all(|r| {
        r.values
            .iter()
            .find(|&&(i, _)| i == 0)
            .is_some_and(|&(_, v)| (v - 0.8).abs() < 1e-9)
    });
    s.check(
        "translates pin z^(n)(0) = alpha for all n",
        pinned,
        format!("{} rows, 21 coordinates each", rep.rows.len()),
    );
    s.check(
        "monotonicity evidence table emitted (conjecture reported, not asserted)",
        rep.evidence.len() == 21,
        format!(
            "consistent with the conjectured direction: {}",
            rep.consistent_with_conjecture
        ),
    );

    s.close()
}

fn tree_phase() -> ExampleReport {
    let mut s = Suite::new("tree-phase");
    let d = 4u32;
    let lambda_s_true = 1.0 / (2.0 * 3.0f64.sqrt());

    let ct = registry::tree_radial_ct(d, 0.0, 300);
    // lambda_w exact through the BP-like shortcut
    let cp = ctbrw::critical_params(
        &ct,
        0,
        &CriticalOptions {
            radii: vec![20],
            power_tol: 1e-12,
        },
    )
    .unwrap();
    s.check(
        "lambda_w = 0.25 exact",
        cp.lambda_w.value == 0.25 && cp.bp_like,
        format!("{} ({})", cp.lambda_w.value, cp.lambda_w.method.as_str()),
    );
    s.check(
        "lambda_s estimate at tree radius 20 within 5e-3 of 0.288675",
        (cp.lambda_s.value - lambda_s_true).abs() <= 5e-3,
        format!("estimate {:.6} vs {:.6}", cp.lambda_s.value, lambda_s_true),
    );

    // modified model: loop of rate 5 at the root
    let ct_mod = ctbrw::modify_local(&ct, &[0], &[(0, vec![(0, 5.0), (1, d as f64)])]).unwrap();
    let phase_opts = PhaseOptions::default();
    let cp_mod = ctbrw::critical_params(&ct_mod, 0, &phase_opts.critical).unwrap();
    let grid = ctbrw::default_lambda_grid(cp_mod.lambda_s.value, cp.lambda_s.value, 60);
    let diagram = ctbrw::classify_phase(&ct, &ct_mod, &[0], &grid, &phase_opts).unwrap();

    s.check(
        "classifier and direct genfun labels: zero unflagged disagreements",
        diagram.disagreements.is_empty(),
        format!("disagreements at lambdas {:?}", diagram.disagreements),
    );

    // the threshold labels along the grid form the sequence
    // extinct -> strong -> non-strong -> strong
    let mut blocks: Vec<PhaseRegime> = Vec::new();
    for row in &diagram.rows {
        if blocks.last() != Some(&row.threshold) {
            blocks.push(row.threshold);
        }
    }
    let want = vec![
        PhaseRegime::Extinct,
        PhaseRegime::StrongLocal,
        PhaseRegime::NonStrongLocal,
        PhaseRegime::StrongLocal,
    ];
    s.check(
        "regime sequence along the grid is extinct -> strong -> non-strong -> strong",
        blocks == want,
        format!(
            "{:?}",
            blocks.iter().map(|b| b.as_str()).collect::<Vec<_>>()
        ),
    );

    // q_bar of the original model matches min(1, 1/(d lambda)) at every
    // grid lambda. Boundary influence decays like (1 - 8|lambda - 1/4|)
    // per radial site near criticality, so the window must outlast the
    // decay length of the grid point closest to lambda_w.
    let mut worst = 0.0f64;
    for &lambda in &grid {
        let m = ctbrw::analysis_model(&ct, lambda, 1000).unwrap();
        let q = genfun::global_extinction(&m, &opts()).vector.values[0];
        let want = ctbrw::tree_global_extinction(d, lambda);
        worst = worst.max((q - want).abs());
    }
    s.check(
        "q_bar matches min(1, 1/(4 lambda)) within 1e-6 at every grid lambda",
        worst <= 1e-6,
        format!("max gap {worst:.2e} over 60 lambdas"),
    );

    s.close()
}

fn mc_cross() -> ExampleReport {
    let mut s = Suite::new("mc-cross");
    let replicates = 100_000;

    // binary branching process, p = 0.7
    let bp = registry::binary_bp(0.7).unwrap();
    let cfg = SimConfig {
        seed: 0x5eed_0001,
        replicates,
        horizon: 200,
        particle_cap: 3_000,
        ..Default::default()
    };
    let out = par::simulate_parallel(&bp, 0, &cfg, None).unwrap();
    let q = 3.0 / 7.0;
    s.check(
        "binary BP extinction within 3 SE of 3/7",
        out.extinct.within(q, 3.0, replicates),
        format!(
            "estimate {:.5} vs {q:.5} (SE {:.5}, censored {})",
            out.extinct.value, out.extinct.se, out.censored
        ),
    );

    // tree-edge counterpart, lambda = 0.3: survival 1 - 1/1.2
    let tree =
        registry::tree_counterpart_radial(4, 0.3, 0.0, 201, BoundaryPolicy::GhostSurvive).unwrap();
    let cfg = SimConfig {
        seed: 0x5eed_0002,
        replicates,
        horizon: 200,
        particle_cap: 50_000,
        ..Default::default()
    };
    let out = par::simulate_parallel(&tree, 0, &cfg, None).unwrap();
    let survive = 1.0 - 1.0 / 1.2;
    s.check(
        "tree-edge lambda 0.3: global survival within 3 SE of 1 - 1/1.2",
        out.extinct.within(1.0 - survive, 3.0, replicates),
        format!(
            "extinction estimate {:.5} vs {:.5} (SE {:.5})",
            out.extinct.value,
            1.0 - survive,
            out.extinct.se
        ),
    );

    // tree-edge-loop at lambda = 0.22 (strong) and 0.27 (non-strong)
    for (lambda, horizon, cap, want) in [
        (0.22, 400u32, 100_000u64, EmpiricalRegime::StrongLocal),
        (0.27, 600u32, 3_000_000u64, EmpiricalRegime::NonStrongLocal),
    ] {
        let model =
            registry::tree_counterpart_radial(4, lambda, 5.0, 60, BoundaryPolicy::GhostSurvive)
                .unwrap();
        let cfg = SimConfig {
            seed: 0x5eed_0003 ^ (lambda * 1e4) as u64,
            replicates,
            horizon,
            particle_cap: cap,
            target: vec![0],
            track_visits: true,
        };
        let out = par::simulate_parallel(&model, 0, &cfg, None).unwrap();
        let (regime, separation, _) = mc::classify_outcome(&out);

        // analytic label from the generating-function route
        let analytic_model =
            registry::tree_counterpart_radial(4, lambda, 5.0, 300, BoundaryPolicy::GhostSurvive)
                .unwrap();
        let analytic = genfun::classify(&analytic_model, 0, &[0], &opts(), 1e-4).unwrap();
        let analytic_as_mc = match analytic.regime {
            Regime::GlobalExtinction => EmpiricalRegime::GlobalExtinction,
            Regime::PureGlobal => EmpiricalRegime::PureGlobal,
            Regime::NonStrongLocal => EmpiricalRegime::NonStrongLocal,
            Regime::StrongLocal => EmpiricalRegime::StrongLocal,
        };
        s.check(
            &format!(
                "loop model at lambda = {lambda}: empirical label is {}",
                want.as_str()
            ),
            regime == want && analytic_as_mc == want,
            format!(
                "empirical {} (separation {separation:.1} SE), analytic {}",
                regime.as_str(),
                analytic.regime.as_str()
            ),
        );
        s.check(
            &format!("loop model at lambda = {lambda}: extinction matches genfun within 3 SE"),
            out.extinct.within(analytic.q_bar_x, 3.0, replicates),
            format!(
                "estimate {:.5} vs analytic {:.5} (SE {:.5})",
                out.extinct.value, analytic.q_bar_x, out.extinct.se
            ),
        );
    }

    s.close()
}

fn properties() -> ExampleReport {
    use rand::Rng;
    use rand::SeedableRng;
    let mut s = Suite::new("properties");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);

    // G monotonicity on every registered discrete model
    let models = vec![
        registry::counterexample1(),
        registry::counterexample2(),
        registry::counterexample3(),
        registry::binary_bp(0.7).unwrap(),
        registry::reducible_line(0.7, 40, BoundaryPolicy::GhostSurvive).unwrap(),
        registry::irreducible_line(2.0 / 3.0, 1.0 / 9.0, 40, BoundaryPolicy::GhostDie).unwrap(),
        registry::tree_counterpart_ball(4, 0.3, 0.0, 3, BoundaryPolicy::GhostDie).unwrap(),
    ];
    let mut monotone_ok = true;
    for m in &models {
        let n = m.window().len();
        for _ in 0..100 {
            let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let w: Vec<f64> = z
                .iter()
                .map(|&v| v + (1.0 - v) * rng.random::<f64>())
                .collect();
            let gz = genfun::apply_g(m, &ProbVector::from_values(m, z));
            let gw = genfun::apply_g(m, &ProbVector::from_values(m, w));
            if !gz.le(&gw, 1e-12) {
                monotone_ok = false;
            }
        }
    }
    s.check(
        "G is monotone on all registered models",
        monotone_ok,
        "100 random comparable pairs per model".to_string(),
    );

    // smallest-fixed-point dominance
    let mut dominance_ok = true;
    for m in &models[..3] {
        let q = genfun::global_extinction(m, &opts()).vector;
        for fp in genfun::enumerate_fixed_points(m, 21, 1e-9).unwrap() {
            if !q.le(&fp, 1e-8) {
                dominance_ok = false;
            }
        }
    }
    s.check(
        "q_bar is dominated by every enumerated fixed point",
        dominance_ok,
        "counterexamples 1-3".to_string(),
    );

    // extinction ordering for nested targets
    let tree =
        registry::tree_counterpart_radial(4, 0.32, 0.0, 120, BoundaryPolicy::GhostDie).unwrap();
    let qa = genfun::local_extinction(&tree, &[0], &opts())
        .unwrap()
        .q
        .vector;
    let qb = genfun::local_extinction(&tree, &[0, 1, 2], &opts())
        .unwrap()
        .q
        .vector;
    let qbar = genfun::global_extinction(&tree, &opts()).vector;
    let ordering_ok = qb.le(&qa, 1e-8) && qbar.le(&qb, 1e-8);
    s.check(
        "A subset of B implies q(., A) >= q(., B) >= q_bar",
        ordering_ok,
        "radial tree, A = {0}, B = {0,1,2}".to_string(),
    );

    // projection fixed-point pullback residuals
    let mut pullback_ok = true;
    let mut worst: f64 = 0.0;
    {
        let src = registry::counterexample2();
        let dst = registry::binary_bp(0.75).unwrap(); // same totals: {0: 1/4, 2: 3/4}
        let g = ProjectionMap::to_singleton(&src, 0);
        if !project::validate_projection(&src, &dst, &g, 20, 7)
            .unwrap()
            .ok
        {
            pullback_ok = false;
        }
        for fp in genfun::enumerate_fixed_points(&dst, 101, 1e-10).unwrap() {
            let pulled = g.pullback(&src, &dst, &fp);
            let r = genfun::apply_g(&src, &pulled).sup_dist(&pulled);
            worst = worst.max(r);
        }
        let ball =
            registry::tree_counterpart_ball(4, 0.35, 0.0, 5, BoundaryPolicy::GhostDie).unwrap();
        let radial =
            registry::tree_counterpart_radial(4, 0.35, 0.0, 5, BoundaryPolicy::GhostDie).unwrap();
        let g = ProjectionMap::tree_radial(4, 5);
        if !project::validate_projection(&ball, &radial, &g, 20, 8)
            .unwrap()
            .ok
        {
            pullback_ok = false;
        }
        for fp in genfun::enumerate_fixed_points(&radial, 9, 1e-9).unwrap() {
            let pulled = g.pullback(&ball, &radial, &fp);
            let r = genfun::apply_g(&ball, &pulled).sup_dist(&pulled);
            worst = worst.max(r);
        }
    }
    s.check(
        "projection pullbacks of target fixed points have residual <= 1e-10",
        pullback_ok && worst <= 1e-10,
        format!("worst residual {worst:.2e}"),
    );

    // scaling equivariance of spectral estimates
    let mut scaling_ok = true;
    for _ in 0..5 {
        let n = 5;
        let mut laws = Vec::new();
        for _ in 0..n {
            let mut pairs = Vec::new();
            for t in 0..n {
                if rng.random::<f64>() < 0.5 {
                    pairs.push((t as Site, 1 + rng.random::<u32>() % 2));
                }
            }
            if pairs.is_empty() {
                pairs.push(((rng.random::<u32>() % n as u32) as Site, 1));
            }
            laws.push(brw_core::model::SiteLaw::Atoms(
                brw_core::model::AtomLaw::new(vec![
                    (0.5, brw_core::model::Placement::new(pairs)),
                    (0.5, brw_core::model::Placement::empty()),
                ])
                .unwrap(),
            ));
        }
        let m = brw_core::model::BRWModel::new(
            brw_core::model::SiteSpace::ExplicitFinite((0..n as Site).collect()),
            laws,
            BoundaryPolicy::GhostDie,
        )
        .unwrap();
        let rows = first_moment(&m).slot_rows(m.window());
        let scaled: Vec<Vec<(u32, f64)>> = rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| (j, 2.0 * v)).collect())
            .collect();
        let e1 = spectral::perron_truncation_estimates(&rows, 0, &[6], 1e-13);
        let e2 = spectral::perron_truncation_estimates(&scaled, 0, &[6], 1e-13);
        if (2.0 * e1[0].value - e2[0].value).abs() > 1e-8 * (1.0 + e2[0].value) {
            scaling_ok = false;
        }
    }
    s.check(
        "spectral estimates scale linearly with the first moments",
        scaling_ok,
        "factor 2 on random 5-site models".to_string(),
    );

    // bit-exact MC reproducibility across thread counts
    let bp = registry::binary_bp(0.7).unwrap();
    let cfg = SimConfig {
        seed: 4242,
        replicates: 5_000,
        horizon: 100,
        particle_cap: 2_000,
        ..Default::default()
    };
    let sequential = mc::simulate(&bp, 0, &cfg).unwrap();
    let one = par::simulate_parallel(&bp, 0, &cfg, Some(1)).unwrap();
    let four = par::simulate_parallel(&bp, 0, &cfg, Some(4)).unwrap();
    s.check(
        "Monte Carlo outcomes are bit-exact across thread counts",
        sequential.per_replicate == one.per_replicate
            && sequential.per_replicate == four.per_replicate,
        format!(
            "{} replicates, sequential vs 1 vs 4 threads",
            cfg.replicates
        ),
    );

    s.close()
}
