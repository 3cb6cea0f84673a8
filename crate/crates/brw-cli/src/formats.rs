//! File formats: the JSON model description schema, projection-map files,
//! and the JSON/CSV output writers.
//!
//! Model description schema (JSON):
//!
//! ```json
//! {
//!   "space": {"kind": "explicit-finite", "sites": [1, 2]},
//!   "policy": "ghost-die",
//!   "sites": {
//!     "1": [[1.0, {"1": 1, "2": 1}]],
//!     "2": [[0.5, {}], [0.5, {"1": 1}]]
//!   }
//! }
//! ```
//!
//! Rule-based models replace `"sites"` with `"rule"`:
//!
//! ```json
//! {
//!   "space": {"kind": "nonneg-integers", "max": 200},
//!   "policy": "ghost-survive",
//!   "rule": {"name": "irreducible-line", "p": 0.6666667, "eps": 0.1111111}
//! }
//! ```
//!
//! Recognized rules: `reducible-line` (p), `irreducible-line` (p, eps),
//! `irreducible-zline` (p, eps), `binary-bp` (p), `tree-counterpart`
//! (lambda, optional root_loop; space must be `homogeneous-tree`),
//! `radial-tree-counterpart` (degree, lambda, optional root_loop; space
//! `nonneg-integers`).
//!
//! Atom weights are renormalized on load when they sum to 1 within 1e-9,
//! and rejected otherwise.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use brw_core::genfun::{IterationReport, ProbVector};
use brw_core::mc::SimOutcome;
use brw_core::model::{AtomLaw, BRWModel, BoundaryPolicy, Placement, Site, SiteLaw, SiteSpace};
use brw_core::registry;
use brw_core::spectral::SpectralEstimate;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub space: SpaceSpec,
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<BTreeMap<String, Vec<AtomSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleSpec>,
}

fn default_policy() -> String {
    "ghost-die".to_string()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceSpec {
    ExplicitFinite { sites: Vec<Site> },
    NonnegIntegers { max: Site },
    Integers { radius: Site },
    HomogeneousTree { degree: u32, radius: u32 },
}

/// `[weight, {site: count, ...}]`
pub type AtomSpec = (f64, BTreeMap<String, u32>);

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub name: String,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub root_loop: Option<f64>,
    #[serde(default)]
    pub degree: Option<u32>,
}

pub fn parse_policy(s: &str) -> Result<BoundaryPolicy> {
    match s {
        "ghost-survive" => Ok(BoundaryPolicy::GhostSurvive),
        "ghost-die" => Ok(BoundaryPolicy::GhostDie),
        other => bail!("unknown boundary policy '{other}' (ghost-survive | ghost-die)"),
    }
}

/// Builds a validated model from a parsed description.
pub fn build_model(file: &ModelFile) -> Result<BRWModel> {
    let policy = parse_policy(&file.policy)?;
    let space = match &file.space {
        SpaceSpec::ExplicitFinite { sites } => SiteSpace::ExplicitFinite(sites.clone()),
        SpaceSpec::NonnegIntegers { max } => SiteSpace::NonnegIntegers { max: *max },
        SpaceSpec::Integers { radius } => SiteSpace::Integers { radius: *radius },
        SpaceSpec::HomogeneousTree { degree, radius } => SiteSpace::HomogeneousTree {
            degree: *degree,
            radius: *radius,
        },
    };

    match (&file.sites, &file.rule) {
        (Some(table), None) => {
            let window = space.window_sites();
            let mut laws = Vec::with_capacity(window.len());
            for &site in &window {
                let key = site.to_string();
                let atoms_spec = table
                    .get(&key)
                    .with_context(|| format!("no offspring law for window site {site}"))?;
                laws.push(SiteLaw::Atoms(parse_atoms(site, atoms_spec)?));
            }
            Ok(BRWModel::new(space, laws, policy)?)
        }
        (None, Some(rule)) => build_rule_model(&space, rule, policy),
        (Some(_), Some(_)) => bail!("model file must have either 'sites' or 'rule', not both"),
        (None, None) => bail!("model file needs a 'sites' table or a 'rule'"),
    }
}

fn parse_atoms(site: Site, atoms: &[AtomSpec]) -> Result<AtomLaw> {
    let total: f64 = atoms.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        bail!("atom weights at site {site} sum to {total}, outside the 1e-9 load tolerance");
    }
    let parsed: Vec<(f64, Placement)> = atoms
        .iter()
        .map(|(w, counts)| {
            let pairs = counts
                .iter()
                .map(|(s, &c)| {
                    let site: Site = s
                        .parse()
                        .with_context(|| format!("placement key '{s}' is not a site id"))?;
                    Ok((site, c))
                })
                .collect::<Result<Vec<_>>>()?;
            // renormalize on load
            Ok((w / total, Placement::new(pairs)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AtomLaw::new(parsed)?)
}

fn build_rule_model(
    space: &SiteSpace,
    rule: &RuleSpec,
    policy: BoundaryPolicy,
) -> Result<BRWModel> {
    let need = |v: Option<f64>, what: &str| -> Result<f64> {
        v.with_context(|| format!("rule '{}' needs parameter '{what}'", rule.name))
    };
    match (rule.name.as_str(), space) {
        ("reducible-line", SiteSpace::NonnegIntegers { max }) => {
            Ok(registry::reducible_line(need(rule.p, "p")?, *max, policy)?)
        }
        ("irreducible-line", SiteSpace::NonnegIntegers { max }) => Ok(registry::irreducible_line(
            need(rule.p, "p")?,
            need(rule.eps, "eps")?,
            *max,
            policy,
        )?),
        ("irreducible-zline", SiteSpace::Integers { radius }) => Ok(registry::irreducible_zline(
            need(rule.p, "p")?,
            need(rule.eps, "eps")?,
            *radius,
            policy,
        )?),
        ("binary-bp", SiteSpace::ExplicitFinite { .. }) => {
            Ok(registry::binary_bp(need(rule.p, "p")?)?)
        }
        ("tree-counterpart", SiteSpace::HomogeneousTree { degree, radius }) => {
            Ok(registry::tree_counterpart_ball(
                *degree,
                need(rule.lambda, "lambda")?,
                rule.root_loop.unwrap_or(0.0),
                *radius,
                policy,
            )?)
        }
        ("radial-tree-counterpart", SiteSpace::NonnegIntegers { max }) => {
            Ok(registry::tree_counterpart_radial(
                rule.degree
                    .context("rule 'radial-tree-counterpart' needs 'degree'")?,
                need(rule.lambda, "lambda")?,
                rule.root_loop.unwrap_or(0.0),
                *max,
                policy,
            )?)
        }
        (name, _) => bail!("unknown rule '{name}' for this space kind"),
    }
}

/// Loads a model from a JSON file or expands a registered tag.
pub fn load_model(path_or_tag: &str, tag: bool) -> Result<BRWModel> {
    if tag {
        match registry::default_for_tag(path_or_tag) {
            Some(registry::TaggedModel::Discrete(m)) => Ok(m),
            Some(registry::TaggedModel::Continuous(_)) => bail!(
                "tag '{path_or_tag}' is a continuous-time model; pass a lambda through the \
                 'phase' or 'simulate' subcommands"
            ),
            None => bail!("unregistered tag '{path_or_tag}'"),
        }
    } else {
        let text = std::fs::read_to_string(path_or_tag)
            .with_context(|| format!("reading model file {path_or_tag}"))?;
        let file: ModelFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing model file {path_or_tag}"))?;
        build_model(&file)
    }
}

/// Projection map file: `{"pairs": {"0": 0, ...}, "out": "boundary"}` or
/// `{"pairs": ..., "out": {"to": 0}}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProjectionFile {
    pub pairs: BTreeMap<String, Site>,
    #[serde(default)]
    pub out: Option<serde_json::Value>,
}

pub fn load_projection(path: &str) -> Result<brw_core::project::ProjectionMap> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading map {path}"))?;
    let file: ProjectionFile = serde_json::from_str(&text)?;
    let pairs = file
        .pairs
        .iter()
        .map(|(k, &v)| {
            let s: Site = k
                .parse()
                .with_context(|| format!("map key '{k}' is not a site id"))?;
            Ok((s, v))
        })
        .collect::<Result<BTreeMap<Site, Site>>>()?;
    let out_rule = match file.out {
        None => brw_core::project::OutRule::ToBoundary,
        Some(serde_json::Value::String(s)) if s == "boundary" => {
            brw_core::project::OutRule::ToBoundary
        }
        Some(serde_json::Value::Object(o)) => {
            let to = o
                .get("to")
                .and_then(|v| v.as_i64())
                .context("'out' object needs an integer 'to' site")?;
            brw_core::project::OutRule::To(to)
        }
        Some(v) => bail!("unrecognized 'out' rule: {v}"),
    };
    Ok(brw_core::project::ProjectionMap::new(pairs, out_rule))
}

// ---- output serialization ----

#[derive(Debug, Serialize)]
pub struct VectorReport<'a> {
    pub sites: &'a [Site],
    pub values: &'a [f64],
    pub boundary: f64,
}

#[derive(Debug, Serialize)]
pub struct IterationJson<'a> {
    #[serde(flatten)]
    pub vector: VectorReport<'a>,
    pub iterations: u64,
    pub residual: f64,
    pub direction: &'static str,
    pub converged: bool,
}

pub fn iteration_json<'a>(model: &'a BRWModel, report: &'a IterationReport) -> IterationJson<'a> {
    IterationJson {
        vector: VectorReport {
            sites: model.window().sites(),
            values: &report.vector.values,
            boundary: report.vector.boundary,
        },
        iterations: report.iterations,
        residual: report.residual,
        direction: match report.direction {
            brw_core::genfun::Direction::IncreasingFromBelow => "increasing-from-below",
            brw_core::genfun::Direction::DecreasingFromAbove => "decreasing-from-above",
        },
        converged: report.converged,
    }
}

/// `site,value` rows.
pub fn vector_csv(model: &BRWModel, v: &ProbVector) -> String {
    let mut out = String::from("site,value\n");
    for (slot, &site) in model.window().sites().iter().enumerate() {
        out.push_str(&format!("{site},{}\n", v.values[slot]));
    }
    out
}

#[derive(Debug, Serialize)]
pub struct EstimateJson {
    pub value: f64,
    pub method: &'static str,
    pub window_param: u32,
    pub bound_direction: &'static str,
    pub converged: bool,
    pub residual: f64,
}

pub fn estimate_json(e: &SpectralEstimate) -> EstimateJson {
    EstimateJson {
        value: e.value,
        method: e.method.as_str(),
        window_param: e.window_param,
        bound_direction: e.direction.as_str(),
        converged: e.converged,
        residual: e.residual,
    }
}

/// `radius,estimate` rows for convergence plots.
pub fn estimates_csv(estimates: &[SpectralEstimate]) -> String {
    let mut out = String::from("radius,estimate\n");
    for e in estimates {
        out.push_str(&format!("{},{}\n", e.window_param, e.value));
    }
    out
}

/// Phase diagram rows with the documented header.
pub fn phase_csv(diagram: &brw_core::ctbrw::PhaseDiagram) -> String {
    let mut out = String::from("lambda,regime,q_bar,q_local\n");
    for row in &diagram.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.lambda,
            row.threshold.as_str(),
            row.q_bar,
            row.q_local
        ));
    }
    out
}

#[derive(Debug, Serialize)]
pub struct SimJson {
    pub replicates: u64,
    pub extinct: f64,
    pub extinct_se: f64,
    pub local_extinct: f64,
    pub local_extinct_se: f64,
    pub never_visited: f64,
    pub never_visited_se: f64,
    pub censored: u64,
    pub escaped: u64,
    pub horizon_stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub near_critical_warning: Option<String>,
}

pub fn sim_json(o: &SimOutcome, warning: Option<String>) -> SimJson {
    SimJson {
        replicates: o.replicates,
        extinct: o.extinct.value,
        extinct_se: o.extinct.se,
        local_extinct: o.local_extinct.value,
        local_extinct_se: o.local_extinct.se,
        never_visited: o.never_visited.value,
        never_visited_se: o.never_visited.se,
        censored: o.censored,
        escaped: o.escaped,
        horizon_stable: o.horizon_stable,
        near_critical_warning: warning,
    }
}

/// Mesh of the `U_G` membership region of a 3-site model: for each grid
/// point of two coordinates, the bisected lower and upper bounds of the
/// third coordinate's membership interval. Reproduces the top/bottom
/// geometry of the set.
pub fn ug_mesh_csv(model: &BRWModel, resolution: usize) -> String {
    assert_eq!(
        model.window().len(),
        3,
        "mesh sampler expects a 3-site model"
    );
    let mut out = String::from("x1,x2,z_lo,z_hi,nonempty\n");
    let member = |a: f64, b: f64, c: f64| -> bool {
        brw_core::genfun::is_in_ug(
            model,
            &ProbVector {
                values: vec![a, b, c],
                boundary: 1.0,
            },
        )
        .inside
    };
    for i in 0..resolution {
        let a = i as f64 / (resolution - 1) as f64;
        for j in 0..resolution {
            let b = j as f64 / (resolution - 1) as f64;
            // the membership set in the third coordinate is an interval
            // (G is monotone); locate it by scanning then bisecting
            let steps = 64;
            let mut any = None;
            for k in 0..=steps {
                let c = k as f64 / steps as f64;
                if member(a, b, c) {
                    any = Some(c);
                    break;
                }
            }
            match any {
                None => out.push_str(&format!("{a},{b},,,false\n")),
                Some(c0) => {
                    let mut lo = (0.0, c0);
                    for _ in 0..30 {
                        let mid = 0.5 * (lo.0 + lo.1);
                        if member(a, b, mid) {
                            lo.1 = mid;
                        } else {
                            lo.0 = mid;
                        }
                    }
                    let mut hi = (c0, 1.0);
                    for _ in 0..30 {
                        let mid = 0.5 * (hi.0 + hi.1);
                        if member(a, b, mid) {
                            hi.0 = mid;
                        } else {
                            hi.1 = mid;
                        }
                    }
                    out.push_str(&format!("{a},{b},{},{},true\n", lo.1, hi.0));
                }
            }
        }
    }
    out
}

/// `n,z,one_minus_z` rows of a fixed-point family.
pub fn family_csv(fam: &brw_core::family::FixedPointFamily) -> String {
    let mut out = String::from("n,z,one_minus_z\n");
    for (n, (&z, &u)) in fam.z.iter().zip(&fam.one_minus_z).enumerate() {
        out.push_str(&format!("{n},{z},{u}\n"));
    }
    out
}

/// `i,n,value` rows of the translated fixed-point family, followed by a
/// per-coordinate evidence table.
pub fn translates_csv(rep: &brw_core::family::TranslateReport) -> String {
    let mut out = String::from("i,n,value\n");
    for row in &rep.rows {
        for &(i, v) in &row.values {
            out.push_str(&format!("{i},{},{v}\n", row.n));
        }
    }
    out.push_str("\ni,nondecreasing,nonincreasing,max_step\n");
    for e in &rep.evidence {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.i, e.nondecreasing, e.nonincreasing, e.max_step
        ));
    }
    out
}
