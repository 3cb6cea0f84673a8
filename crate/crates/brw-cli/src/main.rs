//! `brw`: analyze branching random walks from the command line.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use brw_cli::{formats, par, verify};
use brw_core::ctbrw::{self, CriticalOptions, PhaseOptions};
use brw_core::family::{self, FamilyKind};
use brw_core::genfun::{self, FixedPointOptions};
use brw_core::mc::SimConfig;
use brw_core::model::{irreducible_classes, BRWModel, Site};
use brw_core::project;
use brw_core::registry;
use brw_core::spectral;

#[derive(Parser)]
#[command(
    name = "brw",
    about = "Branching random walks: extinction probabilities, fixed points, \
             spectral survival parameters, phase diagrams and Monte Carlo",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ModelArgs {
    /// Path to a JSON model description.
    #[arg(long, conflicts_with = "tag")]
    model: Option<String>,
    /// Registered example tag (counterexample1..3, binary-bp,
    /// reducible-N, irreducible-N, irreducible-Z).
    #[arg(long)]
    tag: Option<String>,
    /// Override the truncation policy: ghost-survive | ghost-die.
    /// Global extinction converges from the survive side, local and
    /// never-visit questions from the die side.
    #[arg(long)]
    policy: Option<String>,
    /// Re-window a rule-based model: [0, N] / [-N, N] / ball radius N,
    /// by space kind.
    #[arg(long)]
    window: Option<Site>,
}

impl ModelArgs {
    fn load(&self) -> Result<BRWModel> {
        let mut m = match (&self.model, &self.tag) {
            (Some(path), None) => formats::load_model(path, false)?,
            (None, Some(tag)) => formats::load_model(tag, true)?,
            _ => bail!("pass exactly one of --model <file> or --tag <name>"),
        };
        let policy = match &self.policy {
            Some(p) => formats::parse_policy(p)?,
            None => m.policy(),
        };
        if let Some(w) = self.window {
            let spec = match m.space() {
                brw_core::model::SiteSpace::NonnegIntegers { .. } => {
                    brw_core::model::WindowSpec::LineMax(w)
                }
                brw_core::model::SiteSpace::Integers { .. } => {
                    brw_core::model::WindowSpec::LineRadius(w)
                }
                brw_core::model::SiteSpace::HomogeneousTree { .. } => {
                    brw_core::model::WindowSpec::BallRadius(u32::try_from(w).context("radius")?)
                }
                brw_core::model::SiteSpace::ExplicitFinite(_) => {
                    bail!("--window applies to rule-based models, not explicit-finite ones")
                }
            };
            m = m.truncated(spec, policy)?;
        } else if self.policy.is_some() {
            m = m.with_policy(policy);
        }
        Ok(m)
    }
}

#[derive(Args)]
struct OutArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Output file; stdout when omitted. Relative paths resolve under
    /// $BRW_OUT_DIR when it is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl OutArgs {
    fn emit(&self, content: &str) -> Result<()> {
        match &self.out {
            None => {
                print!("{content}");
                Ok(())
            }
            Some(path) => {
                let path = if path.is_relative() {
                    match std::env::var_os("BRW_OUT_DIR") {
                        Some(dir) => PathBuf::from(dir).join(path),
                        None => path.clone(),
                    }
                } else {
                    path.clone()
                };
                if let Some(parent) = path.parent() {
                    if !parent.as_os_str().is_empty() {
                        std::fs::create_dir_all(parent)
                            .with_context(|| format!("creating {}", parent.display()))?;
                    }
                }
                std::fs::write(&path, content)
                    .with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Model summary: window, irreducible classes, offspring assumption,
    /// branching-process reduction, spectral estimates.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        /// Site the spectral estimates are anchored at; the first window
        /// site when omitted.
        #[arg(long)]
        site: Option<Site>,
        /// Radii for the Perron-root truncation estimates.
        #[arg(long, value_delimiter = ',', default_values_t = vec![5u32, 10, 20])]
        radii: Vec<u32>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Global and in-set extinction probabilities by monotone fixed-point
    /// iteration.
    Extinction {
        #[command(flatten)]
        model: ModelArgs,
        /// Target set for local extinction; global-only when omitted.
        #[arg(long, value_delimiter = ',')]
        target: Option<Vec<Site>>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fixed points: dense enumeration for small explicit models, or the
    /// explicit families of the line models.
    FixedPoints {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 41)]
        grid_resolution: usize,
        #[arg(long, default_value_t = 1e-9)]
        refine_tol: f64,
        /// Run the scalar family recursion instead of enumeration:
        /// reducible | irreducible.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        z0: Option<f64>,
        #[arg(long, default_value_t = 500)]
        n_max: usize,
        /// Emit the left-translated family on Z and its monotonicity
        /// evidence (needs --p, --eps, --alpha).
        #[arg(long)]
        translates: bool,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 40)]
        n_list_max: usize,
        /// Coordinate range as `lo,hi` (default -10,10).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        i_range: Option<Vec<i64>>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Continuous-time phase diagram of the tree model and a root
    /// modification, classified by the critical-parameter thresholds and
    /// cross-checked against the direct generating-function route.
    Phase {
        #[arg(long, default_value_t = 4)]
        degree: u32,
        /// Loop rate added at the root of the modified model.
        #[arg(long, default_value_t = 5.0)]
        loop_rate: f64,
        /// Radial window radius for the generating-function runs.
        #[arg(long, default_value_t = 300)]
        window: Site,
        /// Explicit lambda grid; the default is 60 points log-spaced over
        /// [0.5 lambda_w', 1.5 lambda_s].
        #[arg(long, value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 60)]
        grid_points: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Seeded Monte Carlo simulation with parallel replicates.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// Continuous-time tree shortcut: simulate the radial counterpart
        /// of tree-edge(-loop) at this lambda instead of --model/--tag.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 4)]
        degree: u32,
        #[arg(long, default_value_t = 0.0)]
        loop_rate: f64,
        /// Radial window radius of the --lambda shortcut model.
        #[arg(long, default_value_t = 201)]
        radial_window: Site,
        #[arg(long, default_value_t = 0)]
        start: Site,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        replicates: u64,
        #[arg(long, default_value_t = 200)]
        horizon: u32,
        #[arg(long, default_value_t = 10_000_000)]
        particle_cap: u64,
        /// Target set for visit tracking and regime estimation.
        #[arg(long, value_delimiter = ',')]
        target: Option<Vec<Site>>,
        /// Thread count; rayon's default when omitted.
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Validate a projection between two models and compare extinction
    /// probabilities through it.
    Project {
        /// Source model file.
        #[arg(long)]
        src: String,
        /// Target model file.
        #[arg(long)]
        dst: String,
        /// Projection map file ({"pairs": {...}, "out": ...}); detects the
        /// branching-process reduction when omitted.
        #[arg(long)]
        map: Option<String>,
        #[arg(long, default_value_t = 50)]
        samples: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the fixture suite of a registered example and print a
    /// per-assertion table. Exit code 0 iff everything passes.
    VerifyExample {
        /// Tag, or "all".
        tag: String,
        /// Also write the machine-readable report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Emit the U_G membership mesh of a 3-site model (the slice sampler
    /// behind the counterexample3 figures).
    UgMesh {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze {
            model,
            site,
            radii,
            out,
        } => analyze(model, site, radii, out),
        Command::Extinction {
            model,
            target,
            tol,
            max_iter,
            out,
        } => extinction(model, target, tol, max_iter, out),
        Command::FixedPoints {
            model,
            grid_resolution,
            refine_tol,
            family,
            p,
            eps,
            z0,
            n_max,
            translates,
            alpha,
            n_list_max,
            i_range,
            out,
        } => fixed_points(
            model,
            grid_resolution,
            refine_tol,
            family,
            p,
            eps,
            z0,
            n_max,
            translates,
            alpha,
            n_list_max,
            i_range,
            out,
        ),
        Command::Phase {
            degree,
            loop_rate,
            window,
            lambda_grid,
            grid_points,
            out,
        } => phase(degree, loop_rate, window, lambda_grid, grid_points, out),
        Command::Simulate {
            model,
            lambda,
            degree,
            loop_rate,
            radial_window,
            start,
            seed,
            replicates,
            horizon,
            particle_cap,
            target,
            threads,
            out,
        } => simulate(
            model,
            lambda,
            degree,
            loop_rate,
            radial_window,
            start,
            seed,
            replicates,
            horizon,
            particle_cap,
            target,
            threads,
            out,
        ),
        Command::Project {
            src,
            dst,
            map,
            samples,
            seed,
            out,
        } => run_project(src, dst, map, samples, seed, out),
        Command::VerifyExample { tag, report } => verify_example(&tag, report),
        Command::UgMesh {
            model,
            resolution,
            out,
        } => {
            let m = model.load()?;
            out.emit(&formats::ug_mesh_csv(&m, resolution))
        }
    }
}

fn analyze(model: ModelArgs, site: Option<Site>, radii: Vec<u32>, out: OutArgs) -> Result<()> {
    let m = model.load()?;
    let site = site.unwrap_or_else(|| m.window().site(0));
    let classes = irreducible_classes(&m);
    let assumption = brw_core::model::check_assumption1(&m, &classes);
    let bp_like = project::detect_bp_like(&m);
    let ms = spectral::estimate_ms(&m, site, &radii, 1e-12)?;
    let mw = spectral::estimate_mw(&m, site, 200)?;
    let local = spectral::local_survival_test(&m, site, &radii)?;

    let policy = match m.policy() {
        brw_core::model::BoundaryPolicy::GhostSurvive => "ghost-survive",
        brw_core::model::BoundaryPolicy::GhostDie => "ghost-die",
    };
    let verdict = match local.survives {
        Some(true) => "survives",
        Some(false) => "dies-out",
        None => "indeterminate",
    };
    let report = serde_json::json!({
        "window_size": m.window().len(),
        "policy": policy,
        "counterpart": m.is_counterpart(),
        "irreducible": classes.irreducible,
        "class_count": classes.classes.len(),
        "assumption1_per_class": assumption,
        "bp_like": bp_like.map(|h| serde_json::json!({"mean": h.mean()})),
        "ms_estimates": ms.iter().map(formats::estimate_json).collect::<Vec<_>>(),
        "mw_estimate": formats::estimate_json(&mw),
        "local_survival": {
            "verdict": verdict,
            "best_ms": local.best_estimate,
            "margin": local.margin,
            "near_critical": local.near_critical,
        },
    });
    match out.format {
        Format::Json => out.emit(&format!("{}\n", serde_json::to_string_pretty(&report)?)),
        Format::Csv => out.emit(&formats::estimates_csv(&ms)),
    }
}

fn extinction(
    model: ModelArgs,
    target: Option<Vec<Site>>,
    tol: f64,
    max_iter: u64,
    out: OutArgs,
) -> Result<()> {
    let m = model.load()?;
    let fp = FixedPointOptions { tol, max_iter };
    let global = genfun::global_extinction(&m, &fp);
    match target {
        None => match out.format {
            Format::Json => {
                let payload = serde_json::json!({
                    "global": formats::iteration_json(&m, &global),
                });
                out.emit(&format!("{}\n", serde_json::to_string_pretty(&payload)?))
            }
            Format::Csv => out.emit(&formats::vector_csv(&m, &global.vector)),
        },
        Some(a) => {
            let local = genfun::local_extinction(&m, &a, &fp)?;
            match out.format {
                Format::Json => {
                    let payload = serde_json::json!({
                        "global": formats::iteration_json(&m, &global),
                        "never_visit": formats::iteration_json(&m, &local.q0),
                        "local": formats::iteration_json(&m, &local.q),
                    });
                    out.emit(&format!("{}\n", serde_json::to_string_pretty(&payload)?))
                }
                Format::Csv => out.emit(&formats::vector_csv(&m, &local.q.vector)),
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fixed_points(
    model: ModelArgs,
    grid_resolution: usize,
    refine_tol: f64,
    family_kind: Option<String>,
    p: Option<f64>,
    eps: Option<f64>,
    z0: Option<f64>,
    n_max: usize,
    translates: bool,
    alpha: Option<f64>,
    n_list_max: usize,
    i_range: Option<Vec<i64>>,
    out: OutArgs,
) -> Result<()> {
    if translates {
        let p = p.context("--translates needs --p")?;
        let eps = eps.context("--translates needs --eps")?;
        let alpha = alpha.context("--translates needs --alpha")?;
        let ns: Vec<usize> = (1..=n_list_max).collect();
        let (lo, hi) = match &i_range {
            Some(r) if r.len() == 2 => (r[0], r[1]),
            Some(_) => bail!("--i-range takes exactly two values, lo,hi"),
            None => (-10, 10),
        };
        let rep = family::quasitransitive_translates(p, eps, alpha, &ns, (lo, hi))
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        return match out.format {
            Format::Csv => out.emit(&formats::translates_csv(&rep)),
            Format::Json => {
                let payload = serde_json::json!({
                    "alpha": rep.alpha,
                    "consistent_with_conjecture": rep.consistent_with_conjecture,
                    "evidence": rep.evidence.iter().map(|e| serde_json::json!({
                        "i": e.i,
                        "nondecreasing": e.nondecreasing,
                        "nonincreasing": e.nonincreasing,
                        "max_step": e.max_step,
                    })).collect::<Vec<_>>(),
                });
                out.emit(&format!("{}\n", serde_json::to_string_pretty(&payload)?))
            }
        };
    }
    if let Some(kind) = family_kind {
        let kind = match kind.as_str() {
            "reducible" => FamilyKind::Reducible,
            "irreducible" => FamilyKind::Irreducible,
            other => bail!("unknown family kind '{other}'"),
        };
        let p = p.context("--family needs --p")?;
        let eps = eps.unwrap_or(0.0);
        let z0 = z0.context("--family needs --z0")?;
        let fam = family::fixedpoint_family(kind, p, eps, z0, n_max)
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        return match out.format {
            Format::Csv => out.emit(&formats::family_csv(&fam)),
            Format::Json => {
                let payload = serde_json::json!({
                    "pn_all_hold": fam.pn_all_hold,
                    "max_residual": fam.max_residual,
                    "constant": fam.constant,
                    "z": fam.z,
                    "one_minus_z": fam.one_minus_z,
                });
                out.emit(&format!("{}\n", serde_json::to_string_pretty(&payload)?))
            }
        };
    }
    let m = model.load()?;
    let fps = genfun::enumerate_fixed_points(&m, grid_resolution, refine_tol)?;
    match out.format {
        Format::Json => {
            let payload = serde_json::json!({
                "sites": m.window().sites(),
                "fixed_points": fps.iter().map(|f| f.values.clone()).collect::<Vec<_>>(),
            });
            out.emit(&format!("{}\n", serde_json::to_string_pretty(&payload)?))
        }
        Format::Csv => {
            let mut text = String::from("index,site,value\n");
            for (k, fp) in fps.iter().enumerate() {
                for (slot, &site) in m.window().sites().iter().enumerate() {
                    text.push_str(&format!("{k},{site},{}\n", fp.values[slot]));
                }
            }
            out.emit(&text)
        }
    }
}

fn phase(
    degree: u32,
    loop_rate: f64,
    window: Site,
    lambda_grid: Option<Vec<f64>>,
    grid_points: usize,
    out: OutArgs,
) -> Result<()> {
    let ct = registry::tree_radial_ct(degree, 0.0, window);
    let mut row: Vec<(Site, f64)> = vec![(1, degree as f64)];
    if loop_rate > 0.0 {
        row.push((0, loop_rate));
    }
    let ct_mod = ctbrw::modify_local(&ct, &[0], &[(0, row)])?;
    let opts = PhaseOptions {
        window,
        ..Default::default()
    };
    let cp = ctbrw::critical_params(&ct, 0, &CriticalOptions::default())?;
    let cp_mod = ctbrw::critical_params(&ct_mod, 0, &opts.critical)?;
    let grid = match lambda_grid {
        Some(g) => g,
        None => ctbrw::default_lambda_grid(cp_mod.lambda_s.value, cp.lambda_s.value, grid_points),
    };
    // horizon sufficiency near the critical points is heuristic: warn
    let near: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|l| {
            [cp_mod.lambda_s.value, cp.lambda_w.value, cp.lambda_s.value]
                .iter()
                .any(|c| (l - c).abs() < 0.02 * c)
        })
        .collect();
    if !near.is_empty() {
        eprintln!(
            "warning: lambdas {near:?} lie within 2% of a critical parameter; \
             classifications there are tolerance-bound"
        );
    }
    let diagram = ctbrw::classify_phase(&ct, &ct_mod, &[0], &grid, &opts)?;
    match out.format {
        Format::Csv => out.emit(&formats::phase_csv(&diagram)),
        Format::Json => {
            let payload = serde_json::json!({
                "lambda_w_prime": diagram.lambda_w_prime,
                "lambda_s_prime": diagram.lambda_s_prime,
                "lambda_w": diagram.lambda_w,
                "lambda_s": diagram.lambda_s,
                "disagreements": diagram.disagreements,
                "rows": diagram.rows.iter().map(|r| serde_json::json!({
                    "lambda": r.lambda,
                    "threshold": r.threshold.as_str(),
                    "direct": r.direct.as_str(),
                    "q_bar": r.q_bar,
                    "q_local": r.q_local,
                    "agree": r.agree,
                    "flagged": r.flagged,
                })).collect::<Vec<_>>(),
            });
            out.emit(&format!("{}\n", serde_json::to_string_pretty(&payload)?))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    model: ModelArgs,
    lambda: Option<f64>,
    degree: u32,
    loop_rate: f64,
    radial_window: Site,
    start: Site,
    seed: u64,
    replicates: u64,
    horizon: u32,
    particle_cap: u64,
    target: Option<Vec<Site>>,
    threads: Option<usize>,
    out: OutArgs,
) -> Result<()> {
    let m = match lambda {
        Some(l) => registry::tree_counterpart_radial(
            degree,
            l,
            loop_rate,
            radial_window,
            brw_core::model::BoundaryPolicy::GhostSurvive,
        )?,
        None => model.load()?,
    };
    let cfg = SimConfig {
        seed,
        replicates,
        horizon,
        particle_cap,
        target: target.clone().unwrap_or_default(),
        track_visits: target.is_some(),
    };
    let outcome = par::simulate_parallel(&m, start, &cfg, threads)?;
    let warning = lambda.and_then(|l| {
        let lambda_s = 1.0 / (2.0 * ((degree - 1) as f64).sqrt());
        let lambda_w = 1.0 / degree as f64;
        if (l - lambda_s).abs() < 0.02 * lambda_s || (l - lambda_w).abs() < 0.02 * lambda_w {
            Some(format!(
                "lambda = {l} is within 2% of a critical parameter; horizon sufficiency is heuristic"
            ))
        } else {
            None
        }
    });
    if let Some(w) = &warning {
        eprintln!("warning: {w}");
    }
    match out.format {
        Format::Json => {
            let mut payload = serde_json::to_value(formats::sim_json(&outcome, warning))?;
            if cfg.track_visits {
                let (regime, separation, inconclusive) = brw_core::mc::classify_outcome(&outcome);
                payload["regime"] = serde_json::json!({
                    "label": regime.as_str(),
                    "separation_se": separation,
                    "inconclusive": inconclusive,
                });
            }
            out.emit(&format!("{}\n", serde_json::to_string_pretty(&payload)?))
        }
        Format::Csv => {
            let mut text = String::from("quantity,value,se\n");
            text.push_str(&format!(
                "extinct,{},{}\n",
                outcome.extinct.value, outcome.extinct.se
            ));
            text.push_str(&format!(
                "local_extinct,{},{}\n",
                outcome.local_extinct.value, outcome.local_extinct.se
            ));
            text.push_str(&format!(
                "never_visited,{},{}\n",
                outcome.never_visited.value, outcome.never_visited.se
            ));
            text.push_str(&format!("censored,{},\n", outcome.censored));
            out.emit(&text)
        }
    }
}

fn run_project(
    src: String,
    dst: String,
    map: Option<String>,
    samples: u32,
    seed: u64,
    out: OutArgs,
) -> Result<()> {
    let src_model = formats::load_model(&src, false)?;
    let dst_model = formats::load_model(&dst, false)?;
    let g = match map {
        Some(path) => formats::load_projection(&path)?,
        None => {
            // default: the branching-process reduction onto the single
            // target site
            if dst_model.window().len() != 1 {
                bail!("--map is required unless the target is a single-site model");
            }
            project::ProjectionMap::to_singleton(&src_model, dst_model.window().site(0))
        }
    };
    let validation = project::validate_projection(&src_model, &dst_model, &g, samples, seed)?;
    // the pullback identity is exact for matched truncations; otherwise
    // boundary sites deviate, so report the first half of the window
    // (away from the truncation shell) separately
    let interior: Vec<Site> = src_model
        .window()
        .sites()
        .iter()
        .take(src_model.window().len().div_ceil(2))
        .copied()
        .collect();
    let check = project::pushforward_extinction_check(
        &src_model,
        &dst_model,
        &g,
        &FixedPointOptions::default(),
        1e-8,
        Some(&interior),
    )?;
    let payload = serde_json::json!({
        "surjective": validation.surjective,
        "pushforward_ok": validation.pushforward_ok,
        "mismatch": validation.mismatch.map(|(s, d)| serde_json::json!({"site": s, "detail": d})),
        "identity_max_gap": validation.identity_max_gap,
        "valid": validation.ok,
        "extinction_pullback": {
            "window_max_gap": check.max_gap,
            "interior_max_gap": check.region_max_gap,
            "interior_ok_at_1e-8": check.ok,
        },
    });
    out.emit(&format!("{}\n", serde_json::to_string_pretty(&payload)?))
}

fn verify_example(tag: &str, report_path: Option<PathBuf>) -> Result<()> {
    let tags: Vec<&str> = if tag == "all" {
        verify::ALL_TAGS.to_vec()
    } else {
        vec![tag]
    };
    let mut reports = Vec::new();
    let mut all_ok = true;
    for t in tags {
        let report = verify::run(t)?;
        print!("{}", report.table());
        all_ok &= report.passed;
        reports.push(report);
    }
    let json = serde_json::to_string_pretty(&reports)?;
    match report_path {
        Some(path) => {
            std::fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            // machine-readable report always lands next to the table
            if let Some(dir) = std::env::var_os("BRW_OUT_DIR") {
                let path = PathBuf::from(dir).join("verify-report.json");
                std::fs::write(&path, &json)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
    }
    if !all_ok {
        std::process::exit(1);
    }
    Ok(())
}
