//! Continuous-time BRWs: rate matrices, discrete counterparts, critical
//! parameters and the phase classifier for local modifications.
//!
//! A continuous-time model is a family indexed by the breeding parameter
//! `lambda`: a particle at `x` dies at rate 1 and breeds into `y` at rate
//! `lambda * k_xy`. Every survival question reduces to the discrete-time
//! counterpart, an independent-diffusion BRW with geometric offspring
//! totals of mean `lambda * k(x)` and first moments `lambda * k_xy`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::genfun::{self, FixedPointOptions, Regime};
use crate::model::{
    BRWModel, BoundaryPolicy, Descriptor, IndepLaw, ModelError, Site, SiteLaw, SiteSpace, TotalLaw,
    Window,
};
use crate::spectral::{self, BoundDirection, EstimateMethod, SpectralEstimate};

#[derive(Clone, Debug, PartialEq)]
pub enum CtError {
    Model(ModelError),
    ZeroRateSite { site: Site },
    ModificationOutsideSet { site: Site },
    EmptyModificationSet,
    BadLambda { lambda: f64 },
    HypothesisFailed { detail: String },
}

impl core::fmt::Display for CtError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CtError::Model(e) => write!(f, "{e}"),
            CtError::ZeroRateSite { site } => {
                write!(
                    f,
                    "site {site} has zero total rate and is not flagged absorbing"
                )
            }
            CtError::ModificationOutsideSet { site } => {
                write!(
                    f,
                    "modified row at site {site} lies outside the declared set"
                )
            }
            CtError::EmptyModificationSet => write!(f, "modification set is empty"),
            CtError::BadLambda { lambda } => write!(f, "lambda must be positive, got {lambda}"),
            CtError::HypothesisFailed { detail } => write!(f, "hypothesis failed: {detail}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CtError {}

impl From<ModelError> for CtError {
    fn from(e: ModelError) -> Self {
        CtError::Model(e)
    }
}

impl From<CtError> for ModelError {
    fn from(e: CtError) -> Self {
        match e {
            CtError::Model(m) => m,
            _ => ModelError::BadParameter {
                what: "continuous-time model construction",
            },
        }
    }
}

/// Structural kind, used to pick exact shortcuts (radial collapse, closed
/// forms) where they apply.
#[derive(Clone, Debug, PartialEq)]
pub enum CtKind {
    Generic,
    /// Edge-breeding on the homogeneous tree, ball window.
    TreeEdge {
        degree: u32,
    },
    /// Radial collapse of the tree model onto distance from the root.
    TreeEdgeRadial {
        degree: u32,
        root_loop: f64,
    },
}

/// Record of a local modification: the touched sites and their original
/// rate rows.
#[derive(Clone, Debug)]
pub struct ModRecord {
    pub sites: Vec<Site>,
    pub original_rows: Vec<(Site, Vec<(Site, f64)>)>,
}

/// Continuous-time BRW on a finite window.
#[derive(Clone, Debug)]
pub struct CTModel {
    space: SiteSpace,
    window: Window,
    /// Rate rows `k_xy` per window slot; columns may leave the window.
    rates: Vec<Vec<(Site, f64)>>,
    /// Per-site death rates; `None` means the constant rate 1.
    death: Option<Vec<f64>>,
    kind: CtKind,
    tag: Option<String>,
    modified: Option<ModRecord>,
}

impl CTModel {
    pub fn new(
        space: SiteSpace,
        rates: Vec<Vec<(Site, f64)>>,
        kind: CtKind,
    ) -> Result<Self, CtError> {
        let window = Window::new(space.window_sites())?;
        if rates.len() != window.len() {
            return Err(CtError::Model(ModelError::MissingLaw {
                site: window.site(rates.len().min(window.len() - 1)),
            }));
        }
        for (slot, row) in rates.iter().enumerate() {
            let k: f64 = row.iter().map(|&(_, v)| v).sum();
            if !(k > 0.0) || !k.is_finite() {
                return Err(CtError::ZeroRateSite {
                    site: window.site(slot),
                });
            }
            if row.iter().any(|&(_, v)| v < 0.0 || !v.is_finite()) {
                return Err(CtError::Model(ModelError::BadParameter {
                    what: "negative rate",
                }));
            }
            for &(s, _) in row {
                if !space.contains(s) {
                    return Err(CtError::Model(ModelError::DanglingSite {
                        site: window.site(slot),
                        referenced: s,
                    }));
                }
            }
        }
        Ok(CTModel {
            space,
            window,
            rates,
            death: None,
            kind,
            tag: None,
            modified: None,
        })
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.tag = Some(String::from(tag));
        self
    }

    /// Attaches nonconstant death rates `d(x)`. Behaviour matches the
    /// normalized model with rates `k_xy / d(x)` and death rate 1.
    pub fn with_death_rates(mut self, death: Vec<f64>) -> Result<Self, CtError> {
        if death.len() != self.window.len() || death.iter().any(|&d| !(d > 0.0)) {
            return Err(CtError::Model(ModelError::BadParameter {
                what: "death rates must be positive, one per window site",
            }));
        }
        self.death = Some(death);
        Ok(self)
    }

    /// The equivalent model with death rate 1 everywhere.
    pub fn normalized(&self) -> CTModel {
        match &self.death {
            None => self.clone(),
            Some(death) => {
                let rates = self
                    .rates
                    .iter()
                    .zip(death)
                    .map(|(row, &d)| row.iter().map(|&(s, v)| (s, v / d)).collect())
                    .collect();
                CTModel {
                    space: self.space.clone(),
                    window: self.window.clone(),
                    rates,
                    death: None,
                    kind: self.kind.clone(),
                    tag: self.tag.clone(),
                    modified: self.modified.clone(),
                }
            }
        }
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn rates(&self) -> &[Vec<(Site, f64)>] {
        &self.rates
    }

    pub fn kind(&self) -> &CtKind {
        &self.kind
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn modified(&self) -> Option<&ModRecord> {
        self.modified.as_ref()
    }

    /// Total rate `k(x)` of a window slot (normalized by the death rate if
    /// one is attached).
    pub fn total_rate(&self, slot: usize) -> f64 {
        let k: f64 = self.rates[slot].iter().map(|&(_, v)| v).sum();
        match &self.death {
            None => k,
            Some(d) => k / d[slot],
        }
    }

    /// Whether `k(x)` is constant over the window (site-breeding reduces
    /// to a branching process through the counterpart).
    pub fn is_site_breeding(&self) -> bool {
        let k0 = self.total_rate(0);
        (0..self.window.len()).all(|s| (self.total_rate(s) - k0).abs() <= 1e-12 * k0.max(1.0))
    }

    /// Rate rows restricted to the window, in slot coordinates.
    pub fn slot_rows(&self) -> Vec<Vec<(u32, f64)>> {
        let norm = self.normalized();
        norm.rates
            .iter()
            .map(|row| {
                row.iter()
                    .filter_map(|&(s, v)| norm.window.slot_of(s).map(|t| (t, v)))
                    .collect()
            })
            .collect()
    }
}

/// Discrete-time counterpart of the `lambda`-indexed model: geometric
/// offspring totals of mean `lambda * k(x)`, children placed independently
/// with probabilities `k_xy / k(x)`, first moments exactly `lambda * k_xy`.
pub fn discrete_counterpart(ct: &CTModel, lambda: f64) -> Result<BRWModel, CtError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(CtError::BadLambda { lambda });
    }
    let ct = ct.normalized();
    let mut laws = Vec::with_capacity(ct.window.len());
    for (slot, row) in ct.rates.iter().enumerate() {
        let k: f64 = row.iter().map(|&(_, v)| v).sum();
        let targets: Vec<(Site, f64)> = row.iter().map(|&(s, v)| (s, v / k)).collect();
        let moment_row: Vec<(Site, f64)> = row.iter().map(|&(s, v)| (s, lambda * v)).collect();
        let mut law = IndepLaw::new(TotalLaw::Geometric { mean: lambda * k }, targets)?;
        law.moment_row = Some(moment_row);
        laws.push(SiteLaw::Indep(law));
        let _ = slot;
    }
    let descriptor = match &ct.kind {
        CtKind::TreeEdge { degree } => {
            let root_loop = loop_rate_at_root(&ct);
            Descriptor::TreeCounterpart {
                degree: *degree,
                lambda,
                root_loop,
            }
        }
        CtKind::TreeEdgeRadial { degree, root_loop } => Descriptor::RadialTreeCounterpart {
            degree: *degree,
            lambda,
            root_loop: *root_loop,
        },
        CtKind::Generic => Descriptor::Explicit,
    };
    let tag = ct.tag.clone().map(|t| format!("{t}-counterpart"));
    Ok(BRWModel::with_descriptor(
        ct.space.clone(),
        laws,
        BoundaryPolicy::GhostSurvive,
        descriptor,
        true,
        tag,
    )?)
}

fn loop_rate_at_root(ct: &CTModel) -> f64 {
    ct.rates[0]
        .iter()
        .find(|&&(s, _)| s == 0)
        .map_or(0.0, |&(_, v)| v)
}

/// Replaces the rate rows of the sites in `a`, keeping everything else.
/// Returns the modified model carrying the record `(a, original rows)`.
pub fn modify_local(
    ct: &CTModel,
    a: &[Site],
    new_rows: &[(Site, Vec<(Site, f64)>)],
) -> Result<CTModel, CtError> {
    if a.is_empty() {
        return Err(CtError::EmptyModificationSet);
    }
    for &(s, _) in new_rows {
        if !a.contains(&s) {
            return Err(CtError::ModificationOutsideSet { site: s });
        }
    }
    let mut rates = ct.rates.clone();
    let mut original_rows = Vec::new();
    for &(s, ref row) in new_rows {
        let slot = ct
            .window
            .slot_of(s)
            .ok_or(CtError::Model(ModelError::SiteNotInWindow { site: s }))?
            as usize;
        original_rows.push((s, ct.rates[slot].clone()));
        rates[slot] = row.clone();
    }
    let mut out = CTModel::new(ct.space.clone(), rates, ct.kind.clone())?;
    out.death = ct.death.clone();
    out.tag = ct.tag.clone();
    out.modified = Some(ModRecord {
        sites: a.to_vec(),
        original_rows,
    });
    Ok(out)
}

/// Closed form for the global extinction probability of the edge-breeding
/// tree model: `min(1, 1/(d lambda))`.
pub fn tree_global_extinction(degree: u32, lambda: f64) -> f64 {
    let v = 1.0 / (degree as f64 * lambda);
    if v > 1.0 {
        1.0
    } else {
        v
    }
}

/// Critical parameters of the lambda-family at a site.
#[derive(Clone, Debug)]
pub struct CriticalParams {
    pub lambda_s: SpectralEstimate,
    pub lambda_w: SpectralEstimate,
    /// `[lower, upper]` bracket for `lambda_w`; equal entries when exact.
    pub lambda_w_bracket: (f64, f64),
    /// Whether the counterpart is BP-like (constant `k(x)`), which makes
    /// `lambda_w = 1/K_w` exact with global extinction at criticality.
    pub bp_like: bool,
}

#[derive(Clone, Debug)]
pub struct CriticalOptions {
    /// Radii for the Perron-root truncation estimates of `K_s`.
    pub radii: Vec<u32>,
    pub power_tol: f64,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            radii: vec![5, 10, 20, 40],
            power_tol: 1e-12,
        }
    }
}

/// `lambda_s = 1/K_s(x, x)` with `K_s` estimated by Perron roots of
/// growing principal submatrices of the rate matrix; `lambda_w = 1/K_w`,
/// exact for BP-like models and a lower bound otherwise.
pub fn critical_params(
    ct: &CTModel,
    x: Site,
    options: &CriticalOptions,
) -> Result<CriticalParams, CtError> {
    let ct = ct.normalized();
    let slot = ct
        .window
        .slot_of(x)
        .ok_or(CtError::Model(ModelError::SiteNotInWindow { site: x }))?;
    let rows = ct.slot_rows();

    // K_s by Perron truncation: nondecreasing in radius, lower bound.
    let ks = spectral::perron_truncation_estimates(&rows, slot, &options.radii, options.power_tol);
    let ks_best = ks
        .iter()
        .cloned()
        .fold(None::<SpectralEstimate>, |best, e| match best {
            None => Some(e),
            Some(b) if e.value > b.value => Some(e),
            Some(b) => Some(b),
        })
        .ok_or(CtError::HypothesisFailed {
            detail: String::from("no K_s estimate produced"),
        })?;
    let lambda_s = SpectralEstimate {
        value: 1.0 / ks_best.value,
        method: ks_best.method,
        window_param: ks_best.window_param,
        // K_s is approached from below, so 1/K_s is an upper bound.
        direction: match ks_best.direction {
            BoundDirection::Exact => BoundDirection::Exact,
            BoundDirection::Lower => BoundDirection::Upper,
            BoundDirection::Upper => BoundDirection::Lower,
        },
        converged: ks_best.converged,
        residual: ks_best.residual,
    };

    // K_w: exact mean rate for BP-like models, power-root estimate otherwise.
    let bp_like = ct.is_site_breeding();
    let (kw_value, kw_exact) = if bp_like {
        (ct.total_rate(slot as usize), true)
    } else {
        let est = spectral::power_root_estimate(&rows, slot, 400);
        (est.value, false)
    };
    let lambda_w = SpectralEstimate {
        value: 1.0 / kw_value,
        method: if kw_exact {
            EstimateMethod::ClosedForm
        } else {
            EstimateMethod::PowerRoot
        },
        window_param: ct.window.len() as u32,
        direction: if kw_exact {
            BoundDirection::Exact
        } else {
            // K_w is understated by truncation, so 1/K_w overshoots;
            // the bound lambda_w >= 1/K_w still holds in the limit.
            BoundDirection::Lower
        },
        converged: true,
        residual: 0.0,
    };
    let lambda_w_bracket = if kw_exact {
        (lambda_w.value, lambda_w.value)
    } else {
        (lambda_w.value.min(lambda_s.value), lambda_s.value)
    };

    Ok(CriticalParams {
        lambda_s,
        lambda_w,
        lambda_w_bracket,
        bp_like,
    })
}

/// Refines a `lambda_w` bracket by bisection on global-extinction
/// outcomes of the counterpart, run under both boundary policies.
pub fn refine_lambda_w(
    ct: &CTModel,
    bracket: (f64, f64),
    steps: u32,
    opts: &FixedPointOptions,
) -> Result<(f64, f64), CtError> {
    let (mut lo, mut hi) = bracket;
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let m = discrete_counterpart(ct, mid)?;
        let survive = genfun::global_extinction(&m.with_policy(BoundaryPolicy::GhostSurvive), opts);
        let min_q = survive
            .vector
            .values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_q < 1.0 - 1e-6 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Phase regime labels of the threshold classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhaseRegime {
    Extinct,
    StrongLocal,
    NonStrongLocal,
    PureGlobal,
    BoundaryIndeterminate,
}

impl PhaseRegime {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseRegime::Extinct => "extinct",
            PhaseRegime::StrongLocal => "strong-local",
            PhaseRegime::NonStrongLocal => "non-strong-local",
            PhaseRegime::PureGlobal => "pure-global",
            PhaseRegime::BoundaryIndeterminate => "boundary-indeterminate",
        }
    }

    pub fn from_regime(r: Regime) -> PhaseRegime {
        match r {
            Regime::GlobalExtinction => PhaseRegime::Extinct,
            Regime::PureGlobal => PhaseRegime::PureGlobal,
            Regime::NonStrongLocal => PhaseRegime::NonStrongLocal,
            Regime::StrongLocal => PhaseRegime::StrongLocal,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PhaseRow {
    pub lambda: f64,
    pub threshold: PhaseRegime,
    pub direct: PhaseRegime,
    pub direct_inconclusive: bool,
    pub q_bar: f64,
    pub q_local: f64,
    pub agree: bool,
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct PhaseDiagram {
    pub rows: Vec<PhaseRow>,
    pub lambda_w_prime: f64,
    pub lambda_s_prime: f64,
    pub lambda_w: f64,
    pub lambda_s: f64,
    /// Unflagged rows where the threshold label and the direct
    /// classification disagree. Empty on a healthy run.
    pub disagreements: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct PhaseOptions {
    /// Window parameter for the direct genfun classification (radial
    /// radius for tree models, ignored for explicit models).
    pub window: Site,
    pub fp: FixedPointOptions,
    /// Equality tolerance for regime classification; the strong vs
    /// non-strong gap threshold is `10 * class_tol`.
    pub class_tol: f64,
    pub critical: CriticalOptions,
}

impl Default for PhaseOptions {
    fn default() -> Self {
        PhaseOptions {
            window: 300,
            fp: FixedPointOptions::default(),
            class_tol: 1e-4,
            critical: CriticalOptions {
                radii: vec![10, 20, 40, 80],
                power_tol: 1e-12,
            },
        }
    }
}

/// Default grid: `points` lambdas log-spaced over
/// `[0.5 * lambda_w_prime, 1.5 * lambda_s]`.
pub fn default_lambda_grid(lambda_w_prime: f64, lambda_s: f64, points: usize) -> Vec<f64> {
    let lo = 0.5 * lambda_w_prime;
    let hi = 1.5 * lambda_s;
    let (llo, lhi) = (crate::math::ln(lo), crate::math::ln(hi));
    (0..points)
        .map(|i| crate::math::exp(llo + (lhi - llo) * i as f64 / (points - 1) as f64))
        .collect()
}

/// The model used for direct genfun classification at a given lambda:
/// tree models with modifications confined to the root collapse exactly
/// onto their radial projection at the requested window radius;
/// everything else uses its own window.
pub fn analysis_model(ct: &CTModel, lambda: f64, window: Site) -> Result<BRWModel, CtError> {
    let ct_norm = ct.normalized();
    if let Some((degree, root_loop)) = radial_collapse_params(&ct_norm) {
        let radial = crate::registry::tree_radial_ct(degree, root_loop, window);
        return discrete_counterpart(&radial, lambda);
    }
    discrete_counterpart(&ct_norm, lambda)
}

/// Tree models collapse onto distance-from-root when every modification
/// is confined to the root and the root still breeds into the first
/// sphere at total rate `d`. Returns the degree and the root loop rate.
fn radial_collapse_params(ct: &CTModel) -> Option<(u32, f64)> {
    let degree = match &ct.kind {
        CtKind::TreeEdge { degree } => *degree,
        CtKind::TreeEdgeRadial { degree, .. } => *degree,
        CtKind::Generic => return None,
    };
    if let Some(record) = ct.modified() {
        if record.sites.iter().any(|&s| s != 0) {
            return None;
        }
    }
    // root row: only the root itself and the first sphere, with total
    // outward rate d
    let level_of = |s: Site| -> u32 {
        match &ct.kind {
            CtKind::TreeEdge { degree } => crate::tree::level_of(*degree, s),
            _ => s as u32,
        }
    };
    let mut root_loop = 0.0;
    let mut outward = 0.0;
    for &(s, v) in &ct.rates[0] {
        if s == 0 {
            root_loop += v;
        } else if level_of(s) == 1 {
            outward += v;
        } else {
            return None;
        }
    }
    if (outward - degree as f64).abs() > 1e-12 * degree as f64 {
        return None;
    }
    Some((degree, root_loop))
}

/// Classifies the modified model over the lambda grid by comparing each
/// lambda against the critical thresholds of the pair (a root
/// modification that lowers the weak parameter makes the modified weak
/// and local parameters coincide, which pins the regime on each
/// interval), cross-checking every label against the direct genfun
/// classification of the counterpart. The modification record of
/// `ct_mod` must come from [`modify_local`] applied to `ct`.
pub fn classify_phase(
    ct: &CTModel,
    ct_mod: &CTModel,
    b: &[Site],
    grid: &[f64],
    opts: &PhaseOptions,
) -> Result<PhaseDiagram, CtError> {
    let record = ct_mod.modified().ok_or(CtError::HypothesisFailed {
        detail: String::from("ct_mod carries no modification record"),
    })?;
    if record.sites.is_empty() {
        return Err(CtError::EmptyModificationSet);
    }
    let x = record.sites[0];
    let b = if b.is_empty() {
        record.sites.clone()
    } else {
        b.to_vec()
    };

    let orig = critical_params(ct, x, &opts.critical)?;
    let modp = critical_params(ct_mod, x, &opts.critical)?;
    let lambda_w = orig.lambda_w.value;
    let lambda_s = orig.lambda_s.value;
    let lambda_s_prime = modp.lambda_s.value;

    // Hypothesis of the threshold rule: the modification lowers the
    // weak parameter, equivalently lambda_s' < lambda_w. Then
    // lambda_w' = lambda_s' and the interval labels apply.
    let hypothesis = lambda_s_prime < lambda_w;
    if !hypothesis {
        return Err(CtError::HypothesisFailed {
            detail: format!(
                "lambda_s' = {lambda_s_prime} does not undercut lambda_w = {lambda_w}; \
                 classify per-lambda with genfun instead"
            ),
        });
    }
    let lambda_w_prime = lambda_s_prime;

    let mut rows = Vec::with_capacity(grid.len());
    let mut disagreements = Vec::new();
    for &lambda in grid {
        let threshold = if lambda <= lambda_w_prime {
            PhaseRegime::Extinct
        } else if lambda < lambda_w {
            PhaseRegime::StrongLocal
        } else if lambda == lambda_w {
            if orig.bp_like {
                // F-BRW dies out globally at criticality, so the original
                // is globally extinct here and the modified model has
                // strong local survival.
                PhaseRegime::StrongLocal
            } else {
                PhaseRegime::BoundaryIndeterminate
            }
        } else if lambda <= lambda_s {
            PhaseRegime::NonStrongLocal
        } else {
            // inherited from the original model at this lambda
            let m = analysis_model(ct, lambda, opts.window)?;
            let c =
                genfun::classify(&m, x, &b, &opts.fp, opts.class_tol).map_err(CtError::Model)?;
            PhaseRegime::from_regime(c.regime)
        };

        let m = analysis_model(ct_mod, lambda, opts.window)?;
        let c = genfun::classify(&m, x, &b, &opts.fp, opts.class_tol).map_err(CtError::Model)?;
        let direct = PhaseRegime::from_regime(c.regime);
        let agree = direct == threshold || threshold == PhaseRegime::BoundaryIndeterminate;
        let flagged = c.inconclusive;
        if !agree && !flagged {
            disagreements.push(lambda);
        }
        rows.push(PhaseRow {
            lambda,
            threshold,
            direct,
            direct_inconclusive: c.inconclusive,
            q_bar: c.q_bar_x,
            q_local: c.q_local_x,
            agree,
            flagged,
        });
    }

    Ok(PhaseDiagram {
        rows,
        lambda_w_prime,
        lambda_s_prime,
        lambda_w,
        lambda_s,
        disagreements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::first_moment;
    use crate::registry;

    #[test]
    fn counterpart_first_moment_is_lambda_rates() {
        let ct = registry::tree_edge_ball_ct(4, 3);
        let lambda = 0.3;
        let m = discrete_counterpart(&ct, lambda).unwrap();
        let fm = first_moment(&m);
        for (slot, row) in ct.rates().iter().enumerate() {
            for &(s, v) in row {
                let got = fm.entry(m.window().site(slot), s);
                assert_eq!(got, lambda * v, "m_xy must equal lambda*k_xy exactly");
            }
        }
    }

    #[test]
    fn counterpart_mean_is_lambda_k() {
        let ct = registry::tree_edge_loop_ball_ct(4, 5.0, 3);
        let m = discrete_counterpart(&ct, 0.2).unwrap();
        // root has k = 4 + 5
        assert!((m.mean_total(0) - 0.2 * 9.0).abs() < 1e-15);
        // everyone else k = 4
        assert!((m.mean_total(1) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn counterpart_rejects_bad_lambda() {
        let ct = registry::tree_edge_ball_ct(4, 2);
        assert!(discrete_counterpart(&ct, 0.0).is_err());
        assert!(discrete_counterpart(&ct, -1.0).is_err());
    }

    #[test]
    fn modify_local_loop_at_root() {
        let ct = registry::tree_edge_ball_ct(4, 3);
        let mut row: Vec<(Site, f64)> = crate::tree::neighbors(4, 0)
            .into_iter()
            .map(|t| (t, 1.0))
            .collect();
        row.push((0, 5.0));
        let modified = modify_local(&ct, &[0], &[(0, row)]).unwrap();
        assert_eq!(modified.total_rate(0), 9.0);
        assert_eq!(modified.total_rate(1), 4.0);
        let rec = modified.modified().unwrap();
        assert_eq!(rec.sites, vec![0]);
        // identity modification leaves the model equal to the input
        let id = modify_local(&ct, &[1], &[]).unwrap();
        assert_eq!(id.rates(), ct.rates());
    }

    #[test]
    fn modify_local_outside_set_rejected() {
        let ct = registry::tree_edge_ball_ct(4, 2);
        let err = modify_local(&ct, &[0], &[(1, vec![(0, 1.0)])]);
        assert!(matches!(
            err,
            Err(CtError::ModificationOutsideSet { site: 1 })
        ));
        let err = modify_local(&ct, &[], &[]);
        assert!(matches!(err, Err(CtError::EmptyModificationSet)));
    }

    #[test]
    fn tree_global_extinction_closed_form() {
        assert!((tree_global_extinction(4, 0.3) - 1.0 / 1.2).abs() < 1e-15);
        assert_eq!(tree_global_extinction(4, 0.2), 1.0);
        assert_eq!(tree_global_extinction(4, 0.25), 1.0);
    }

    #[test]
    fn critical_params_single_site_loop() {
        // one site with k_xx = c: lambda_s = lambda_w = 1/c
        let ct = CTModel::new(
            SiteSpace::ExplicitFinite(vec![0]),
            vec![vec![(0, 2.5)]],
            CtKind::Generic,
        )
        .unwrap();
        let cp = critical_params(&ct, 0, &CriticalOptions::default()).unwrap();
        assert!((cp.lambda_s.value - 0.4).abs() < 1e-10);
        assert!((cp.lambda_w.value - 0.4).abs() < 1e-10);
        assert!(cp.bp_like);
    }

    #[test]
    fn critical_params_tree_radial() {
        // lambda_w = 1/d exact; lambda_s -> 1/(2 sqrt(d-1))
        let ct = registry::tree_radial_ct(4, 0.0, 120);
        let cp = critical_params(
            &ct,
            0,
            &CriticalOptions {
                radii: vec![20, 40, 80],
                power_tol: 1e-12,
            },
        )
        .unwrap();
        assert_eq!(cp.lambda_w.value, 0.25);
        assert!(cp.bp_like);
        let target = 1.0 / (2.0 * crate::math::sqrt(3.0));
        assert!(
            (cp.lambda_s.value - target).abs() < 2e-3,
            "lambda_s estimate {} vs {target}",
            cp.lambda_s.value
        );
        // and the radius-20 estimate alone is within 5e-3
        let cp20 = critical_params(
            &ct,
            0,
            &CriticalOptions {
                radii: vec![20],
                power_tol: 1e-12,
            },
        )
        .unwrap();
        assert!((cp20.lambda_s.value - target).abs() < 5e-3);
    }

    #[test]
    fn loop_model_lambda_s_matches_bound_state() {
        // loop rate a at the root of T_d: K'_s = a + d*t with
        // t = (sqrt(a^2+4) - a)/2, from the radial bound-state ansatz.
        let a = 5.0;
        let d = 4.0;
        let t = (crate::math::sqrt(a * a + 4.0) - a) / 2.0;
        let ks = a + d * t;
        let ct = registry::tree_radial_ct(4, a, 200);
        let cp = critical_params(
            &ct,
            0,
            &CriticalOptions {
                radii: vec![40, 80],
                power_tol: 1e-13,
            },
        )
        .unwrap();
        assert!(
            (cp.lambda_s.value - 1.0 / ks).abs() < 1e-9,
            "lambda_s' {} vs 1/K'_s {}",
            cp.lambda_s.value,
            1.0 / ks
        );
        // paper bound: lambda_s' <= 1/k'_yy < 1/d
        assert!(cp.lambda_s.value <= 1.0 / a + 1e-12);
    }

    #[test]
    fn phase_classifier_small_grid() {
        let ct = registry::tree_radial_ct(4, 0.0, 300);
        let ct_mod = modify_local(&ct, &[0], &[(0, vec![(0, 5.0), (1, 4.0)])]).unwrap();
        let opts = PhaseOptions::default();
        // one lambda per expected regime: extinct, strong (ii), non-strong
        // (iv), strong again (v)
        let grid = [0.15, 0.20, 0.27, 0.32];
        let d = classify_phase(&ct, &ct_mod, &[0], &grid, &opts).unwrap();
        assert!(d.disagreements.is_empty(), "rows: {:?}", d.rows);
        let labels: Vec<PhaseRegime> = d.rows.iter().map(|r| r.threshold).collect();
        assert_eq!(
            labels,
            vec![
                PhaseRegime::Extinct,
                PhaseRegime::StrongLocal,
                PhaseRegime::NonStrongLocal,
                PhaseRegime::StrongLocal,
            ]
        );
        assert!(d.rows.iter().all(|r| r.agree));
        // lambda_w' = lambda_s' < lambda_w = 1/4 < lambda_s
        assert!((d.lambda_w - 0.25).abs() < 1e-12);
        assert!(d.lambda_w_prime < d.lambda_w);
        assert!((d.lambda_w_prime - d.lambda_s_prime).abs() < 1e-12);
        let t = (crate::math::sqrt(29.0) - 5.0) / 2.0;
        assert!((d.lambda_w_prime - 1.0 / (5.0 + 4.0 * t)).abs() < 1e-6);
    }

    #[test]
    fn phase_classifier_boundary_case_at_lambda_w() {
        // exactly at lambda_w the original (BP-like) dies out globally,
        // so the modified model has strong local survival
        let ct = registry::tree_radial_ct(4, 0.0, 300);
        let ct_mod = modify_local(&ct, &[0], &[(0, vec![(0, 5.0), (1, 4.0)])]).unwrap();
        let opts = PhaseOptions::default();
        let d = classify_phase(&ct, &ct_mod, &[0], &[0.25], &opts).unwrap();
        assert_eq!(d.rows[0].threshold, PhaseRegime::StrongLocal);
        assert!(d.disagreements.is_empty(), "row: {:?}", d.rows[0]);
    }

    #[test]
    fn phase_classifier_requires_hypothesis() {
        // an identity modification does not lower lambda_w
        let ct = registry::tree_radial_ct(4, 0.0, 120);
        let same = modify_local(&ct, &[0], &[(0, vec![(1, 4.0)])]).unwrap();
        let err = classify_phase(&ct, &same, &[0], &[0.2], &PhaseOptions::default());
        assert!(matches!(err, Err(CtError::HypothesisFailed { .. })));
    }

    #[test]
    fn default_grid_spans_regimes() {
        let grid = default_lambda_grid(0.1733, 0.288675, 60);
        assert_eq!(grid.len(), 60);
        assert!((grid[0] - 0.5 * 0.1733).abs() < 1e-12);
        assert!((grid[59] - 1.5 * 0.288675).abs() < 1e-12);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn discontinuity_of_local_extinction_at_lambda_s() {
        // q(x, x) jumps at lambda_s while q_bar stays continuous
        let lambda_s = 1.0 / (2.0 * crate::math::sqrt(3.0));
        let opts = FixedPointOptions::default();
        let below = analysis_model(
            &registry::tree_radial_ct(4, 0.0, 300),
            lambda_s - 0.005,
            300,
        )
        .unwrap();
        let above = analysis_model(
            &registry::tree_radial_ct(4, 0.0, 300),
            lambda_s + 0.005,
            300,
        )
        .unwrap();
        let q_below =
            genfun::local_extinction(&below.with_policy(BoundaryPolicy::GhostDie), &[0], &opts)
                .unwrap();
        let q_above =
            genfun::local_extinction(&above.with_policy(BoundaryPolicy::GhostDie), &[0], &opts)
                .unwrap();
        assert!(
            q_below.q.vector.values[0] > 1.0 - 0.02,
            "local extinction below lambda_s"
        );
        let want = 1.0 / (4.0 * (lambda_s + 0.005));
        assert!(
            (q_above.q.vector.values[0] - want).abs() < 0.02,
            "q(x,x) = 1/(d lambda) above lambda_s, got {}",
            q_above.q.vector.values[0]
        );
        // q(x,x) jumps by ~0.15 between these samples; q_bar moves by
        // less than 0.02 per 0.005-spaced sample across the same point
        let at = genfun::local_extinction(
            &analysis_model(&registry::tree_radial_ct(4, 0.0, 300), lambda_s, 300)
                .unwrap()
                .with_policy(BoundaryPolicy::GhostDie),
            &[0],
            &opts,
        )
        .unwrap();
        assert!(
            q_above.q.vector.values[0] < at.q.vector.values[0] - 0.1,
            "jump at lambda_s"
        );
        let qb = |lambda: f64| {
            let m = analysis_model(&registry::tree_radial_ct(4, 0.0, 300), lambda, 300).unwrap();
            genfun::global_extinction(&m, &opts).vector.values[0]
        };
        let samples = [lambda_s - 0.005, lambda_s, lambda_s + 0.005];
        let qbs: alloc::vec::Vec<f64> = samples.iter().map(|&l| qb(l)).collect();
        for w in qbs.windows(2) {
            assert!(
                (w[0] - w[1]).abs() < 0.02,
                "q_bar continuous across lambda_s"
            );
        }
        for (i, &l) in samples.iter().enumerate() {
            assert!((qbs[i] - tree_global_extinction(4, l)).abs() < 1e-6);
        }
    }

    #[test]
    fn death_rate_normalization_same_counterpart() {
        let ct = registry::tree_edge_ball_ct(4, 2);
        let n = ct.window().len();
        let scaled_rates: Vec<Vec<(Site, f64)>> = ct
            .rates()
            .iter()
            .map(|row| row.iter().map(|&(s, v)| (s, 2.0 * v)).collect())
            .collect();
        let ct2 = CTModel::new(ct.space().clone(), scaled_rates, ct.kind().clone())
            .unwrap()
            .with_death_rates(vec![2.0; n])
            .unwrap();
        let m1 = discrete_counterpart(&ct, 0.3).unwrap();
        let m2 = discrete_counterpart(&ct2, 0.3).unwrap();
        for slot in 0..n {
            assert!((m1.mean_total(slot) - m2.mean_total(slot)).abs() < 1e-12);
        }
    }
}
