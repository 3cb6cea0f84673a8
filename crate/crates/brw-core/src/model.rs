//! Discrete-time BRW models: site spaces, finite working windows, offspring
//! laws, first-moment matrices and irreducibility structure.
//!
//! A model lives on an at most countable site space but all computation
//! happens on a finite window. Particles placed outside the window are
//! resolved by a [`BoundaryPolicy`]: `GhostSurvive` treats them as immortal
//! (they contribute 0 to extinction-type vectors), `GhostDie` as already
//! dead (they contribute 1). Running both policies brackets the quantities
//! of the untruncated model.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::tree;

/// Site identifier. Explicit spaces use small ids, integer lines use the
/// integers themselves, tree balls use BFS indices.
pub type Site = i64;

/// Weight-sum tolerance for offspring distributions.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    EmptyWindow,
    EmptyDistribution { site: Site },
    BadWeight { site: Site, weight: f64 },
    WeightSum { site: Site, sum: f64 },
    DuplicatePlacement { site: Site },
    MissingLaw { site: Site },
    DanglingSite { site: Site, referenced: Site },
    BadParameter { what: &'static str },
    SiteNotInWindow { site: Site },
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::EmptyWindow => write!(f, "window is empty"),
            ModelError::EmptyDistribution { site } => {
                write!(f, "offspring distribution at site {site} has no atoms")
            }
            ModelError::BadWeight { site, weight } => {
                write!(f, "non-positive atom weight {weight} at site {site}")
            }
            ModelError::WeightSum { site, sum } => {
                write!(f, "atom weights at site {site} sum to {sum}, not 1")
            }
            ModelError::DuplicatePlacement { site } => {
                write!(f, "duplicate placement in distribution at site {site}")
            }
            ModelError::MissingLaw { site } => write!(f, "no offspring law for window site {site}"),
            ModelError::DanglingSite { site, referenced } => {
                write!(
                    f,
                    "law at site {site} references site {referenced} outside the space"
                )
            }
            ModelError::BadParameter { what } => write!(f, "invalid parameter: {what}"),
            ModelError::SiteNotInWindow { site } => write!(f, "site {site} is not in the window"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ModelError {}

/// Site space plus the finite window used for computation.
#[derive(Clone, Debug, PartialEq)]
pub enum SiteSpace {
    /// All sites are in the window.
    ExplicitFinite(Vec<Site>),
    /// The nonnegative integers, window `[0, max]`.
    NonnegIntegers { max: Site },
    /// The integers, window `[-radius, radius]`.
    Integers { radius: Site },
    /// Homogeneous tree of the given degree, window = BFS ball of `radius`
    /// around the root.
    HomogeneousTree { degree: u32, radius: u32 },
}

impl SiteSpace {
    pub fn window_sites(&self) -> Vec<Site> {
        match self {
            SiteSpace::ExplicitFinite(sites) => sites.clone(),
            SiteSpace::NonnegIntegers { max } => (0..=*max).collect(),
            SiteSpace::Integers { radius } => (-radius..=*radius).collect(),
            SiteSpace::HomogeneousTree { degree, radius } => {
                (0..tree::ball_size(*degree, *radius) as Site).collect()
            }
        }
    }

    /// Whether the site belongs to the (possibly infinite) space.
    pub fn contains(&self, site: Site) -> bool {
        match self {
            SiteSpace::ExplicitFinite(sites) => sites.contains(&site),
            SiteSpace::NonnegIntegers { .. } => site >= 0,
            SiteSpace::Integers { .. } => true,
            SiteSpace::HomogeneousTree { .. } => site >= 0,
        }
    }
}

/// Finite ordered set of concrete sites with O(log n) index lookup.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    sites: Vec<Site>,
    index: BTreeMap<Site, u32>,
}

impl Window {
    pub fn new(sites: Vec<Site>) -> Result<Self, ModelError> {
        if sites.is_empty() {
            return Err(ModelError::EmptyWindow);
        }
        let index = sites
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i as u32))
            .collect();
        Ok(Window { sites, index })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, slot: usize) -> Site {
        self.sites[slot]
    }

    pub fn slot_of(&self, site: Site) -> Option<u32> {
        self.index.get(&site).copied()
    }

    pub fn contains(&self, site: Site) -> bool {
        self.index.contains_key(&site)
    }
}

/// How particles placed outside the window are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryPolicy {
    /// Escapees survive forever: they contribute 0 to extinction vectors.
    GhostSurvive,
    /// Escapees die immediately: they contribute 1.
    GhostDie,
}

impl BoundaryPolicy {
    /// Constant used for out-of-window coordinates of probability vectors.
    pub fn boundary_value(self) -> f64 {
        match self {
            BoundaryPolicy::GhostSurvive => 0.0,
            BoundaryPolicy::GhostDie => 1.0,
        }
    }
}

/// One reproduction event: how many children go to which sites.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Placement {
    pairs: Vec<(Site, u32)>,
}

impl Placement {
    /// Builds a placement, merging duplicates and dropping zero counts.
    pub fn new(mut pairs: Vec<(Site, u32)>) -> Self {
        pairs.retain(|&(_, c)| c > 0);
        pairs.sort_unstable_by_key(|&(s, _)| s);
        let mut merged: Vec<(Site, u32)> = Vec::with_capacity(pairs.len());
        for (s, c) in pairs {
            match merged.last_mut() {
                Some((ls, lc)) if *ls == s => *lc += c,
                _ => merged.push((s, c)),
            }
        }
        Placement { pairs: merged }
    }

    pub fn empty() -> Self {
        Placement { pairs: Vec::new() }
    }

    pub fn pairs(&self) -> &[(Site, u32)] {
        &self.pairs
    }

    /// Total number of children in the event.
    pub fn total(&self) -> u32 {
        self.pairs.iter().map(|&(_, c)| c).sum()
    }

    pub fn count_at(&self, site: Site) -> u32 {
        self.pairs
            .iter()
            .find(|&&(s, _)| s == site)
            .map_or(0, |&(_, c)| c)
    }
}

/// Finite-support offspring distribution: weighted list of placements.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomLaw {
    atoms: Vec<(f64, Placement)>,
}

impl AtomLaw {
    pub fn new(atoms: Vec<(f64, Placement)>) -> Result<Self, ModelError> {
        Self::validated(atoms, 0)
    }

    fn validated(atoms: Vec<(f64, Placement)>, site: Site) -> Result<Self, ModelError> {
        if atoms.is_empty() {
            return Err(ModelError::EmptyDistribution { site });
        }
        let mut sum = 0.0;
        for &(w, _) in &atoms {
            if !(w > 0.0) || !w.is_finite() {
                return Err(ModelError::BadWeight { site, weight: w });
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(ModelError::WeightSum { site, sum });
        }
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                if atoms[i].1 == atoms[j].1 {
                    return Err(ModelError::DuplicatePlacement { site });
                }
            }
        }
        Ok(AtomLaw { atoms })
    }

    pub fn atoms(&self) -> &[(f64, Placement)] {
        &self.atoms
    }

    /// Mean total offspring.
    pub fn mean_total(&self) -> f64 {
        self.atoms.iter().map(|(w, p)| w * p.total() as f64).sum()
    }
}

/// Law of the total number of children of an independent-diffusion site.
#[derive(Clone, Debug, PartialEq)]
pub enum TotalLaw {
    /// `P(n) = (1/(1+m)) (m/(1+m))^n`; arises as the discrete counterpart
    /// of continuous-time breeding at total rate with mean `m`.
    Geometric { mean: f64 },
    /// Explicit table `table[n] = P(n)`.
    Table(Vec<f64>),
}

impl TotalLaw {
    pub fn mean(&self) -> f64 {
        match self {
            TotalLaw::Geometric { mean } => *mean,
            TotalLaw::Table(t) => t.iter().enumerate().map(|(n, p)| n as f64 * p).sum(),
        }
    }

    /// Probability generating function of the total offspring count.
    pub fn pgf(&self, s: f64) -> f64 {
        match self {
            TotalLaw::Geometric { mean } => 1.0 / (1.0 + mean * (1.0 - s)),
            TotalLaw::Table(t) => {
                // Horner
                let mut acc = 0.0;
                for &p in t.iter().rev() {
                    acc = acc * s + p;
                }
                acc
            }
        }
    }
}

/// Independent-diffusion law: a total-offspring law plus an independent
/// per-child placement distribution. The first-moment row may be supplied
/// exactly (counterparts store `lambda * k_xy` directly).
#[derive(Clone, Debug, PartialEq)]
pub struct IndepLaw {
    pub total: TotalLaw,
    /// Per-child placement probabilities; must sum to 1.
    pub targets: Vec<(Site, f64)>,
    /// Exact first-moment row; when `None` it is `mean * p(x, .)`.
    pub moment_row: Option<Vec<(Site, f64)>>,
}

impl IndepLaw {
    pub fn new(total: TotalLaw, targets: Vec<(Site, f64)>) -> Result<Self, ModelError> {
        let sum: f64 = targets.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > WEIGHT_TOL || targets.iter().any(|&(_, p)| p < 0.0) {
            return Err(ModelError::BadParameter {
                what: "placement probabilities must be nonnegative and sum to 1",
            });
        }
        Ok(IndepLaw {
            total,
            targets,
            moment_row: None,
        })
    }
}

/// Offspring law of one site.
#[derive(Clone, Debug, PartialEq)]
pub enum SiteLaw {
    Atoms(AtomLaw),
    Indep(IndepLaw),
}

impl SiteLaw {
    pub fn mean_total(&self) -> f64 {
        match self {
            SiteLaw::Atoms(a) => a.mean_total(),
            SiteLaw::Indep(i) => i.total.mean(),
        }
    }

    /// Law of the total number of children, as an explicit table when
    /// finite-support and as the geometric marker otherwise.
    pub fn total_law(&self) -> TotalLaw {
        match self {
            SiteLaw::Atoms(a) => {
                let max = a.atoms.iter().map(|(_, p)| p.total()).max().unwrap_or(0);
                let mut table = vec![0.0; max as usize + 1];
                for (w, p) in &a.atoms {
                    table[p.total() as usize] += w;
                }
                TotalLaw::Table(table)
            }
            SiteLaw::Indep(i) => i.total.clone(),
        }
    }

    /// First-moment row `m_xy` over all referenced sites (in or out of the
    /// window), sorted by site.
    pub fn moment_row(&self) -> Vec<(Site, f64)> {
        let mut acc: BTreeMap<Site, f64> = BTreeMap::new();
        match self {
            SiteLaw::Atoms(a) => {
                for (w, p) in &a.atoms {
                    for &(s, c) in p.pairs() {
                        *acc.entry(s).or_insert(0.0) += w * c as f64;
                    }
                }
            }
            SiteLaw::Indep(i) => {
                if let Some(row) = &i.moment_row {
                    return row.clone();
                }
                let m = i.total.mean();
                for &(s, p) in &i.targets {
                    *acc.entry(s).or_insert(0.0) += m * p;
                }
            }
        }
        acc.into_iter().collect()
    }
}

/// Retained construction recipe, enough to re-materialize the model on a
/// different window.
#[derive(Clone, Debug, PartialEq)]
pub enum Descriptor {
    Explicit,
    /// On N: two children at `n+1` w.p. `p`, none w.p. `1-p`.
    ReducibleLine {
        p: f64,
    },
    /// On N: two children at `n+1` w.p. `p-eps`, one at `max(0, n-1)` w.p.
    /// `eps`, none w.p. `1-p`.
    IrreducibleLine {
        p: f64,
        eps: f64,
    },
    /// Same law on Z with `n-1` instead of `max(0, n-1)`.
    IrreducibleZ {
        p: f64,
        eps: f64,
    },
    /// Discrete counterpart of continuous-time edge-breeding on a tree
    /// ball, possibly with a loop at the root.
    TreeCounterpart {
        degree: u32,
        lambda: f64,
        root_loop: f64,
    },
    /// Radial collapse of `TreeCounterpart` onto distance-from-root.
    RadialTreeCounterpart {
        degree: u32,
        lambda: f64,
        root_loop: f64,
    },
}

/// Precompiled law working on window slots. `u32::MAX` never appears;
/// out-of-window references are aggregated separately.
#[derive(Clone, Debug)]
enum CompiledLaw {
    Atoms {
        atoms: Vec<CompiledAtom>,
    },
    Indep {
        total: TotalLaw,
        targets_in: Vec<(u32, f64)>,
        out_prob: f64,
    },
}

#[derive(Clone, Debug)]
struct CompiledAtom {
    weight: f64,
    in_pairs: Vec<(u32, u32)>,
    out_total: u32,
}

/// A validated BRW on a finite window.
#[derive(Clone, Debug)]
pub struct BRWModel {
    space: SiteSpace,
    window: Window,
    laws: Vec<SiteLaw>,
    policy: BoundaryPolicy,
    tag: Option<String>,
    counterpart: bool,
    descriptor: Descriptor,
    compiled: Vec<CompiledLaw>,
}

impl BRWModel {
    /// Builds and validates a model. `laws` must be indexed like the
    /// window sites of `space`.
    pub fn new(
        space: SiteSpace,
        laws: Vec<SiteLaw>,
        policy: BoundaryPolicy,
    ) -> Result<Self, ModelError> {
        Self::with_descriptor(space, laws, policy, Descriptor::Explicit, false, None)
    }

    pub fn with_descriptor(
        space: SiteSpace,
        laws: Vec<SiteLaw>,
        policy: BoundaryPolicy,
        descriptor: Descriptor,
        counterpart: bool,
        tag: Option<String>,
    ) -> Result<Self, ModelError> {
        let window = Window::new(space.window_sites())?;
        if laws.len() != window.len() {
            let missing = window.site(laws.len().min(window.len() - 1));
            return Err(ModelError::MissingLaw { site: missing });
        }
        // validate laws and site references
        for (slot, law) in laws.iter().enumerate() {
            let x = window.site(slot);
            match law {
                SiteLaw::Atoms(a) => {
                    AtomLaw::validated(a.atoms.clone(), x)?;
                    for (_, p) in a.atoms() {
                        for &(s, _) in p.pairs() {
                            if !space.contains(s) {
                                return Err(ModelError::DanglingSite {
                                    site: x,
                                    referenced: s,
                                });
                            }
                        }
                    }
                }
                SiteLaw::Indep(i) => {
                    for &(s, _) in &i.targets {
                        if !space.contains(s) {
                            return Err(ModelError::DanglingSite {
                                site: x,
                                referenced: s,
                            });
                        }
                    }
                    if !i.total.mean().is_finite() {
                        return Err(ModelError::BadParameter {
                            what: "infinite mean offspring",
                        });
                    }
                }
            }
        }
        let compiled = compile(&window, &laws);
        Ok(BRWModel {
            space,
            window,
            laws,
            policy,
            tag,
            counterpart,
            descriptor,
            compiled,
        })
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn policy(&self) -> BoundaryPolicy {
        self.policy
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn descriptor(&self) -> &Descriptor {
        &self.descriptor
    }

    /// Whether the model is the discrete counterpart of a continuous-time
    /// BRW (geometric totals, independent diffusion), for which the
    /// generating function has the closed form `1/(1 + M(1-z))`.
    pub fn is_counterpart(&self) -> bool {
        self.counterpart
    }

    pub fn law(&self, slot: usize) -> &SiteLaw {
        &self.laws[slot]
    }

    pub fn laws(&self) -> &[SiteLaw] {
        &self.laws
    }

    /// Same model under the other truncation policy.
    pub fn with_policy(&self, policy: BoundaryPolicy) -> BRWModel {
        let mut m = self.clone();
        m.policy = policy;
        m
    }

    pub fn with_tag(mut self, tag: &str) -> BRWModel {
        self.tag = Some(String::from(tag));
        self
    }

    /// Mean total offspring at a window slot.
    pub fn mean_total(&self, slot: usize) -> f64 {
        self.laws[slot].mean_total()
    }

    /// Applies the generating function, writing component `x` of `G(z)`
    /// for every window slot. `z` and `out` are window-aligned;
    /// out-of-window coordinates take the value `boundary`.
    pub(crate) fn apply_g_into(&self, z: &[f64], boundary: f64, out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.window.len());
        for (slot, law) in self.compiled.iter().enumerate() {
            out[slot] = match law {
                CompiledLaw::Atoms { atoms } => {
                    let mut acc = 0.0;
                    for atom in atoms {
                        let mut prod = atom.weight;
                        for &(t, c) in &atom.in_pairs {
                            prod *= math::powu(z[t as usize], c);
                        }
                        if atom.out_total > 0 {
                            prod *= math::powu(boundary, atom.out_total);
                        }
                        acc += prod;
                    }
                    acc
                }
                CompiledLaw::Indep {
                    total,
                    targets_in,
                    out_prob,
                } => {
                    let mut s = out_prob * boundary;
                    for &(t, p) in targets_in {
                        s += p * z[t as usize];
                    }
                    total.pgf(s)
                }
            };
        }
    }

    /// Generating function evaluated with an arbitrary assignment of
    /// `z(site)` for every referenced site, in or out of the window.
    /// Used by projection validation.
    pub fn apply_g_with(&self, zf: &dyn Fn(Site) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.window.len()];
        for (slot, law) in self.laws.iter().enumerate() {
            out[slot] = match law {
                SiteLaw::Atoms(a) => {
                    let mut acc = 0.0;
                    for (w, p) in a.atoms() {
                        let mut prod = *w;
                        for &(s, c) in p.pairs() {
                            prod *= math::powu(zf(s), c);
                        }
                        acc += prod;
                    }
                    acc
                }
                SiteLaw::Indep(i) => {
                    let s: f64 = i.targets.iter().map(|&(t, p)| p * zf(t)).sum();
                    i.total.pgf(s)
                }
            };
        }
        out
    }

    /// Re-materializes the model on a different window. Explicit models
    /// are restricted to a subset of their sites; rule-based models are
    /// rebuilt from their descriptor.
    pub fn truncated(
        &self,
        window: WindowSpec,
        policy: BoundaryPolicy,
    ) -> Result<BRWModel, ModelError> {
        match (&self.descriptor, window) {
            (Descriptor::Explicit, WindowSpec::Sites(sites)) => {
                if sites.is_empty() {
                    return Err(ModelError::EmptyWindow);
                }
                let mut laws = Vec::with_capacity(sites.len());
                for &s in &sites {
                    let slot = self
                        .window
                        .slot_of(s)
                        .ok_or(ModelError::SiteNotInWindow { site: s })?;
                    laws.push(self.laws[slot as usize].clone());
                }
                BRWModel::with_descriptor(
                    SiteSpace::ExplicitFinite(sites),
                    laws,
                    policy,
                    Descriptor::Explicit,
                    self.counterpart,
                    self.tag.clone(),
                )
            }
            (Descriptor::ReducibleLine { p }, WindowSpec::LineMax(n)) => {
                crate::registry::reducible_line(*p, n, policy)
            }
            (Descriptor::IrreducibleLine { p, eps }, WindowSpec::LineMax(n)) => {
                crate::registry::irreducible_line(*p, *eps, n, policy)
            }
            (Descriptor::IrreducibleZ { p, eps }, WindowSpec::LineRadius(r)) => {
                crate::registry::irreducible_zline(*p, *eps, r, policy)
            }
            (
                Descriptor::TreeCounterpart {
                    degree,
                    lambda,
                    root_loop,
                },
                WindowSpec::BallRadius(r),
            ) => crate::registry::tree_counterpart_ball(*degree, *lambda, *root_loop, r, policy),
            (
                Descriptor::RadialTreeCounterpart {
                    degree,
                    lambda,
                    root_loop,
                },
                WindowSpec::LineMax(n),
            ) => crate::registry::tree_counterpart_radial(*degree, *lambda, *root_loop, n, policy),
            _ => Err(ModelError::BadParameter {
                what: "window spec does not match the model kind",
            }),
        }
    }

    /// Sites of the boundary shell: window sites whose law places children
    /// outside the window.
    pub fn boundary_shell(&self) -> Vec<Site> {
        let mut shell = Vec::new();
        for (slot, law) in self.compiled.iter().enumerate() {
            let out = match law {
                CompiledLaw::Atoms { atoms } => atoms.iter().any(|a| a.out_total > 0),
                CompiledLaw::Indep { out_prob, .. } => *out_prob > 0.0,
            };
            if out {
                shell.push(self.window.site(slot));
            }
        }
        shell
    }
}

/// Window selector for [`BRWModel::truncated`].
#[derive(Clone, Debug)]
pub enum WindowSpec {
    /// Subset of an explicit-finite model.
    Sites(Vec<Site>),
    /// `[0, n]` for models on N (or radial lines).
    LineMax(Site),
    /// `[-r, r]` for models on Z.
    LineRadius(Site),
    /// Ball of the given radius for tree models.
    BallRadius(u32),
}

fn compile(window: &Window, laws: &[SiteLaw]) -> Vec<CompiledLaw> {
    laws.iter()
        .map(|law| match law {
            SiteLaw::Atoms(a) => CompiledLaw::Atoms {
                atoms: a
                    .atoms()
                    .iter()
                    .map(|(w, p)| {
                        let mut in_pairs = Vec::new();
                        let mut out_total = 0;
                        for &(s, c) in p.pairs() {
                            match window.slot_of(s) {
                                Some(t) => in_pairs.push((t, c)),
                                None => out_total += c,
                            }
                        }
                        CompiledAtom {
                            weight: *w,
                            in_pairs,
                            out_total,
                        }
                    })
                    .collect(),
            },
            SiteLaw::Indep(i) => {
                let mut targets_in = Vec::new();
                let mut out_prob = 0.0;
                for &(s, p) in &i.targets {
                    match window.slot_of(s) {
                        Some(t) => targets_in.push((t, p)),
                        None => out_prob += p,
                    }
                }
                CompiledLaw::Indep {
                    total: i.total.clone(),
                    targets_in,
                    out_prob,
                }
            }
        })
        .collect()
}

/// Sparse nonnegative matrix of expected offspring counts per directed
/// site pair. Rows are window sites; columns may reference out-of-window
/// sites so that row sums equal the per-site mean offspring exactly.
#[derive(Clone, Debug)]
pub struct FirstMomentMatrix {
    rows: Vec<Vec<(Site, f64)>>,
    sites: Vec<Site>,
}

impl FirstMomentMatrix {
    pub fn rows(&self) -> &[Vec<(Site, f64)>] {
        &self.rows
    }

    pub fn row(&self, slot: usize) -> &[(Site, f64)] {
        &self.rows[slot]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn entry(&self, x: Site, y: Site) -> f64 {
        let Some(slot) = self.sites.iter().position(|&s| s == x) else {
            return 0.0;
        };
        self.rows[slot]
            .iter()
            .find(|&&(s, _)| s == y)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn row_sum(&self, slot: usize) -> f64 {
        self.rows[slot].iter().map(|&(_, v)| v).sum()
    }

    /// Rows restricted to the window, in slot coordinates.
    pub fn slot_rows(&self, window: &Window) -> Vec<Vec<(u32, f64)>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .filter_map(|&(s, v)| window.slot_of(s).map(|t| (t, v)))
                    .collect()
            })
            .collect()
    }
}

/// Expected number of children sent from each window site to each site.
pub fn first_moment(model: &BRWModel) -> FirstMomentMatrix {
    let rows = model.laws().iter().map(|law| law.moment_row()).collect();
    FirstMomentMatrix {
        rows,
        sites: model.window().sites().to_vec(),
    }
}

/// Partition of the window into irreducible classes (strongly connected
/// components of the graph with an edge wherever `m_xy > 0`).
#[derive(Clone, Debug)]
pub struct IrreducibleClasses {
    /// Classes as lists of window slots.
    pub classes: Vec<Vec<u32>>,
    /// Class id of each window slot.
    pub class_of: Vec<u32>,
    /// Whether the whole window is a single class.
    pub irreducible: bool,
}

impl IrreducibleClasses {
    pub fn class_sites(&self, window: &Window, class: usize) -> Vec<Site> {
        self.classes[class]
            .iter()
            .map(|&slot| window.site(slot as usize))
            .collect()
    }
}

/// Strongly connected components by iterative Tarjan.
pub fn irreducible_classes(model: &BRWModel) -> IrreducibleClasses {
    let window = model.window();
    let n = window.len();
    let moments = first_moment(model);
    let adj: Vec<Vec<u32>> = moments
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .filter(|&&(_, v)| v > 0.0)
                .filter_map(|&(s, _)| window.slot_of(s))
                .collect()
        })
        .collect();

    const UNSET: u32 = u32::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut classes: Vec<Vec<u32>> = Vec::new();
    let mut class_of = vec![0u32; n];

    // explicit DFS stack of (node, edge cursor)
    let mut call: Vec<(u32, usize)> = Vec::new();
    for root in 0..n as u32 {
        if index[root as usize] != UNSET {
            continue;
        }
        call.push((root, 0));
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(&mut (v, ref mut cursor)) = call.last_mut() {
            if *cursor < adj[v as usize].len() {
                let w = adj[v as usize][*cursor];
                *cursor += 1;
                if index[w as usize] == UNSET {
                    index[w as usize] = next_index;
                    low[w as usize] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent as usize] = low[parent as usize].min(low[v as usize]);
                }
                if low[v as usize] == index[v as usize] {
                    let mut class = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w as usize] = false;
                        class_of[w as usize] = classes.len() as u32;
                        class.push(w);
                        if w == v {
                            break;
                        }
                    }
                    class.sort_unstable();
                    classes.push(class);
                }
            }
        }
    }

    let irreducible = classes.len() == 1;
    IrreducibleClasses {
        classes,
        class_of,
        irreducible,
    }
}

/// Per-class check that some site can produce a within-class number of
/// children different from 1 with positive probability.
pub fn check_assumption1(model: &BRWModel, classes: &IrreducibleClasses) -> Vec<bool> {
    let window = model.window();
    classes
        .classes
        .iter()
        .enumerate()
        .map(|(cid, class)| {
            class.iter().any(|&slot| {
                let in_class = |s: Site| {
                    window
                        .slot_of(s)
                        .is_some_and(|t| classes.class_of[t as usize] == cid as u32)
                };
                match model.law(slot as usize) {
                    SiteLaw::Atoms(a) => a.atoms().iter().any(|(_, p)| {
                        let c: u32 = p
                            .pairs()
                            .iter()
                            .filter(|&&(s, _)| in_class(s))
                            .map(|&(_, c)| c)
                            .sum();
                        c != 1
                    }),
                    SiteLaw::Indep(i) => {
                        let p_class: f64 = i
                            .targets
                            .iter()
                            .filter(|&&(s, _)| in_class(s))
                            .map(|&(_, p)| p)
                            .sum();
                        let always_one = match &i.total {
                            TotalLaw::Geometric { .. } => false,
                            TotalLaw::Table(t) => t.len() > 1 && (t[1] - 1.0).abs() <= WEIGHT_TOL,
                        };
                        // A within-class count != 1 is impossible only when
                        // the total is always 1 and every child stays in
                        // the class.
                        !(always_one && (p_class - 1.0).abs() <= WEIGHT_TOL)
                    }
                }
            })
        })
        .collect()
}
