//! Projections between BRWs: surjective site maps under which offspring
//! laws push forward exactly, BP-like reduction to one-dimensional
//! branching processes, and the pushforward identities for generating
//! functions and extinction probabilities.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::genfun::{self, FixedPointOptions, ProbVector};
use crate::model::{BRWModel, ModelError, Site, SiteLaw, TotalLaw, WEIGHT_TOL};

/// How sites outside the source window are mapped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutRule {
    /// Out-of-window source sites map outside the target window, where
    /// the target's boundary constant applies. Matched truncations (ball
    /// onto radial line) use this.
    ToBoundary,
    /// Every out-of-window source site maps to this target site
    /// (projections onto finite targets such as singletons).
    To(Site),
}

/// A surjective map from the source window onto the target window.
#[derive(Clone, Debug)]
pub struct ProjectionMap {
    pairs: BTreeMap<Site, Site>,
    out_rule: OutRule,
}

/// Where a source site lands under the projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mapped {
    Target(Site),
    OutOfTarget,
}

impl ProjectionMap {
    pub fn new(pairs: BTreeMap<Site, Site>, out_rule: OutRule) -> Self {
        ProjectionMap { pairs, out_rule }
    }

    /// Projection of every source site to a single target site.
    pub fn to_singleton(src: &BRWModel, target: Site) -> Self {
        let pairs = src.window().sites().iter().map(|&s| (s, target)).collect();
        ProjectionMap {
            pairs,
            out_rule: OutRule::To(target),
        }
    }

    /// Tree-ball onto radial-line projection: site to its distance from
    /// the root; shell children map just outside the target window.
    pub fn tree_radial(degree: u32, ball_radius: u32) -> Self {
        let n = crate::tree::ball_size(degree, ball_radius) as Site;
        let pairs = (0..n)
            .map(|s| (s, crate::tree::level_of(degree, s) as Site))
            .collect();
        ProjectionMap {
            pairs,
            out_rule: OutRule::ToBoundary,
        }
    }

    pub fn map_site(&self, s: Site) -> Mapped {
        match self.pairs.get(&s) {
            Some(&t) => Mapped::Target(t),
            None => match self.out_rule {
                OutRule::ToBoundary => Mapped::OutOfTarget,
                OutRule::To(t) => Mapped::Target(t),
            },
        }
    }

    /// Pullback of a target-window vector: `(z o g)(s)`, with the target
    /// boundary constant for sites mapping out of the target window.
    pub fn pullback(&self, src: &BRWModel, dst: &BRWModel, z: &ProbVector) -> ProbVector {
        let values = src
            .window()
            .sites()
            .iter()
            .map(|&s| match self.map_site(s) {
                Mapped::Target(t) => dst
                    .window()
                    .slot_of(t)
                    .map_or(z.boundary, |slot| z.values[slot as usize]),
                Mapped::OutOfTarget => z.boundary,
            })
            .collect();
        ProbVector {
            values,
            boundary: z.boundary,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProjectionReport {
    pub surjective: bool,
    pub pushforward_ok: bool,
    /// Offending source site and a short description, on mismatch.
    pub mismatch: Option<(Site, String)>,
    /// Largest gap observed in the sampled identity
    /// `G_src(z o g | x) = G_dst(z | g(x))`.
    pub identity_max_gap: f64,
    pub ok: bool,
}

/// Canonical form of a pushed-forward placement: in-target pairs plus the
/// number of children landing outside the target window.
type PushedPlacement = (Vec<(Site, u32)>, u32);

fn push_placement(g: &ProjectionMap, dst: &BRWModel, pairs: &[(Site, u32)]) -> PushedPlacement {
    let mut acc: BTreeMap<Site, u32> = BTreeMap::new();
    let mut ghost = 0;
    for &(s, c) in pairs {
        match g.map_site(s) {
            Mapped::Target(t) if dst.window().contains(t) => {
                *acc.entry(t).or_insert(0) += c;
            }
            _ => ghost += c,
        }
    }
    (acc.into_iter().collect(), ghost)
}

/// Exact check that the pushforward of every source law equals the target
/// law at the image site, plus seeded spot-checks of the generating
/// function identity.
pub fn validate_projection(
    src: &BRWModel,
    dst: &BRWModel,
    g: &ProjectionMap,
    sample_count: u32,
    seed: u64,
) -> Result<ProjectionReport, ModelError> {
    // surjectivity onto the target window
    let mut covered = vec![false; dst.window().len()];
    for &s in src.window().sites() {
        if let Mapped::Target(t) = g.map_site(s) {
            if let Some(slot) = dst.window().slot_of(t) {
                covered[slot as usize] = true;
            }
        }
    }
    let surjective = covered.iter().all(|&c| c);

    let mut pushforward_ok = true;
    let mut mismatch = None;

    'sites: for (slot, &x) in src.window().sites().iter().enumerate() {
        let Mapped::Target(gx) = g.map_site(x) else {
            pushforward_ok = false;
            mismatch = Some((x, String::from("window site maps out of the target")));
            break;
        };
        let Some(dst_slot) = dst.window().slot_of(gx) else {
            pushforward_ok = false;
            mismatch = Some((x, format!("image site {gx} not in target window")));
            break;
        };
        match (src.law(slot), dst.law(dst_slot as usize)) {
            (SiteLaw::Atoms(sa), SiteLaw::Atoms(da)) => {
                // aggregate both sides into canonical pushed placements
                let mut lhs: BTreeMap<PushedPlacement, f64> = BTreeMap::new();
                for (w, p) in sa.atoms() {
                    *lhs.entry(push_placement(g, dst, p.pairs())).or_insert(0.0) += w;
                }
                let mut rhs: BTreeMap<PushedPlacement, f64> = BTreeMap::new();
                for (w, p) in da.atoms() {
                    let mut acc: BTreeMap<Site, u32> = BTreeMap::new();
                    let mut ghost = 0;
                    for &(s, c) in p.pairs() {
                        if dst.window().contains(s) {
                            *acc.entry(s).or_insert(0) += c;
                        } else {
                            ghost += c;
                        }
                    }
                    *rhs.entry((acc.into_iter().collect(), ghost)).or_insert(0.0) += w;
                }
                if lhs.len() != rhs.len() {
                    pushforward_ok = false;
                    mismatch = Some((x, String::from("pushforward atom count differs")));
                    break 'sites;
                }
                for (placement, w) in &lhs {
                    match rhs.get(placement) {
                        Some(w2) if (w - w2).abs() <= WEIGHT_TOL => {}
                        _ => {
                            pushforward_ok = false;
                            mismatch =
                                Some((x, format!("pushforward weight mismatch on {placement:?}")));
                            break 'sites;
                        }
                    }
                }
            }
            (SiteLaw::Indep(si), SiteLaw::Indep(di)) => {
                let totals_match = match (&si.total, &di.total) {
                    (TotalLaw::Geometric { mean: a }, TotalLaw::Geometric { mean: b }) => {
                        (a - b).abs() <= WEIGHT_TOL * (1.0 + a.abs())
                    }
                    (TotalLaw::Table(a), TotalLaw::Table(b)) => {
                        a.len() == b.len()
                            && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= WEIGHT_TOL)
                    }
                    _ => false,
                };
                if !totals_match {
                    pushforward_ok = false;
                    mismatch = Some((x, String::from("total-offspring laws differ")));
                    break 'sites;
                }
                // aggregated diffusion probabilities
                let mut lhs: BTreeMap<Option<Site>, f64> = BTreeMap::new();
                for &(s, p) in &si.targets {
                    let key = match g.map_site(s) {
                        Mapped::Target(t) if dst.window().contains(t) => Some(t),
                        _ => None,
                    };
                    *lhs.entry(key).or_insert(0.0) += p;
                }
                let mut rhs: BTreeMap<Option<Site>, f64> = BTreeMap::new();
                for &(s, p) in &di.targets {
                    let key = if dst.window().contains(s) {
                        Some(s)
                    } else {
                        None
                    };
                    *rhs.entry(key).or_insert(0.0) += p;
                }
                for (key, p) in &lhs {
                    let q = rhs.get(key).copied().unwrap_or(0.0);
                    if (p - q).abs() > WEIGHT_TOL {
                        pushforward_ok = false;
                        mismatch =
                            Some((x, format!("diffusion mass mismatch at {key:?}: {p} vs {q}")));
                        break 'sites;
                    }
                }
            }
            _ => {
                pushforward_ok = false;
                mismatch = Some((x, String::from("law representations differ in kind")));
                break 'sites;
            }
        }
    }

    // sampled generating-function identity G_src(z o g | x) = G_dst(z | g(x))
    let mut identity_max_gap = 0.0;
    if pushforward_ok {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dst_boundary = dst.policy().boundary_value();
        for _ in 0..sample_count {
            let z: Vec<f64> = (0..dst.window().len())
                .map(|_| rng.random::<f64>())
                .collect();
            let zv = ProbVector {
                values: z,
                boundary: dst_boundary,
            };
            let gdst = genfun::apply_g(dst, &zv);
            let pulled = |s: Site| match g.map_site(s) {
                Mapped::Target(t) => dst
                    .window()
                    .slot_of(t)
                    .map_or(dst_boundary, |slot| zv.values[slot as usize]),
                Mapped::OutOfTarget => dst_boundary,
            };
            let gsrc = src.apply_g_with(&pulled);
            for (slot, &x) in src.window().sites().iter().enumerate() {
                if let Mapped::Target(t) = g.map_site(x) {
                    if let Some(dslot) = dst.window().slot_of(t) {
                        let gap = (gsrc[slot] - gdst.values[dslot as usize]).abs();
                        if gap > identity_max_gap {
                            identity_max_gap = gap;
                        }
                    }
                }
            }
        }
    }

    let ok = surjective && pushforward_ok && identity_max_gap <= 1e-12;
    Ok(ProjectionReport {
        surjective,
        pushforward_ok,
        mismatch,
        identity_max_gap,
        ok,
    })
}

/// One-dimensional offspring law with evaluator `H(z) = sum rho(n) z^n`.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarGenFun {
    Table(Vec<f64>),
    Geometric { mean: f64 },
}

impl ScalarGenFun {
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            ScalarGenFun::Table(t) => {
                let mut acc = 0.0;
                for &p in t.iter().rev() {
                    acc = acc * z + p;
                }
                acc
            }
            ScalarGenFun::Geometric { mean } => 1.0 / (1.0 + mean * (1.0 - z)),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            ScalarGenFun::Table(t) => t.iter().enumerate().map(|(n, p)| n as f64 * p).sum(),
            ScalarGenFun::Geometric { mean } => *mean,
        }
    }

    /// `rho(1)`, for the scalar form of the non-degeneracy assumption.
    pub fn rho_one(&self) -> f64 {
        match self {
            ScalarGenFun::Table(t) => t.get(1).copied().unwrap_or(0.0),
            ScalarGenFun::Geometric { mean } => {
                let m = *mean;
                (1.0 / (1.0 + m)) * (m / (1.0 + m))
            }
        }
    }
}

fn totals_equal(a: &TotalLaw, b: &TotalLaw) -> bool {
    match (a, b) {
        (TotalLaw::Geometric { mean: x }, TotalLaw::Geometric { mean: y }) => {
            (x - y).abs() <= WEIGHT_TOL * (1.0 + x.abs())
        }
        (TotalLaw::Table(x), TotalLaw::Table(y)) => {
            let len = x.len().max(y.len());
            (0..len).all(|i| {
                let a = x.get(i).copied().unwrap_or(0.0);
                let b = y.get(i).copied().unwrap_or(0.0);
                (a - b).abs() <= WEIGHT_TOL
            })
        }
        _ => false,
    }
}

/// When the law of the total offspring count is the same at every window
/// site, the model projects onto a single-site branching process with
/// that law.
pub fn detect_bp_like(model: &BRWModel) -> Option<ScalarGenFun> {
    let first = model.law(0).total_law();
    for slot in 1..model.window().len() {
        if !totals_equal(&first, &model.law(slot).total_law()) {
            return None;
        }
    }
    Some(match first {
        TotalLaw::Geometric { mean } => ScalarGenFun::Geometric { mean },
        TotalLaw::Table(t) => ScalarGenFun::Table(t),
    })
}

/// Fixed points of the scalar generating function: `{q_bar, 1}`, with
/// `q_bar` the increasing-iteration limit from 0. A single point is
/// returned when they coincide.
pub fn bp_fixed_points(h: &ScalarGenFun, tol: f64) -> Result<Vec<f64>, ModelError> {
    if h.rho_one() >= 1.0 - WEIGHT_TOL {
        return Err(ModelError::BadParameter {
            what: "scalar law must have rho(1) < 1",
        });
    }
    let mut z = 0.0;
    for _ in 0..10_000_000u64 {
        let next = h.eval(z);
        if (next - z).abs() <= tol {
            z = next;
            break;
        }
        z = next;
    }
    if (z - 1.0).abs() <= 10.0 * tol {
        Ok(vec![1.0])
    } else {
        Ok(vec![z, 1.0])
    }
}

#[derive(Clone, Debug)]
pub struct PushforwardCheck {
    pub ok: bool,
    pub max_gap: f64,
    /// Largest gap over the supplied comparison region (defaults to the
    /// whole window). Truncation boundary effects live outside it.
    pub region_max_gap: f64,
}

/// Compares the source global extinction vector with the pullback of the
/// target's. Exact for matched truncations; for projections that change
/// the truncation structure the identity holds in the window interior,
/// so `region` selects where the tolerance applies.
pub fn pushforward_extinction_check(
    src: &BRWModel,
    dst: &BRWModel,
    g: &ProjectionMap,
    opts: &FixedPointOptions,
    tol: f64,
    region: Option<&[Site]>,
) -> Result<PushforwardCheck, ModelError> {
    let q_src = genfun::global_extinction(src, opts).vector;
    let q_dst = genfun::global_extinction(dst, opts).vector;
    let pulled = g.pullback(src, dst, &q_dst);
    let mut max_gap = 0.0;
    let mut region_max_gap = 0.0;
    for (slot, &site) in src.window().sites().iter().enumerate() {
        let gap = (q_src.values[slot] - pulled.values[slot]).abs();
        if gap > max_gap {
            max_gap = gap;
        }
        let in_region = region.is_none_or(|r| r.contains(&site));
        if in_region && gap > region_max_gap {
            region_max_gap = gap;
        }
    }
    Ok(PushforwardCheck {
        ok: region_max_gap <= tol,
        max_gap,
        region_max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomLaw, BoundaryPolicy, Placement, SiteSpace};
    use crate::registry;

    fn opts() -> FixedPointOptions {
        FixedPointOptions::default()
    }

    /// Single-site model with the law of the irreducible line's totals.
    fn scalar_target(p: f64, eps: f64) -> BRWModel {
        let law = SiteLaw::Atoms(
            AtomLaw::new(vec![
                (1.0 - p, Placement::empty()),
                (eps, Placement::new(vec![(0, 1)])),
                (p - eps, Placement::new(vec![(0, 2)])),
            ])
            .unwrap(),
        );
        BRWModel::new(
            SiteSpace::ExplicitFinite(vec![0]),
            vec![law],
            BoundaryPolicy::GhostSurvive,
        )
        .unwrap()
    }

    #[test]
    fn bp_like_detection() {
        let line =
            registry::irreducible_line(2.0 / 3.0, 1.0 / 9.0, 50, BoundaryPolicy::GhostSurvive)
                .unwrap();
        let h = detect_bp_like(&line).expect("same totals everywhere");
        match &h {
            ScalarGenFun::Table(t) => {
                assert!((t[0] - 1.0 / 3.0).abs() < 1e-14);
                assert!((t[1] - 1.0 / 9.0).abs() < 1e-14);
                assert!((t[2] - 5.0 / 9.0).abs() < 1e-14);
            }
            _ => panic!("expected a table"),
        }
        assert!(detect_bp_like(&registry::counterexample1()).is_none());
        // single-site model: its own law
        let bp = registry::binary_bp(0.7).unwrap();
        let h = detect_bp_like(&bp).unwrap();
        assert!((h.mean() - 1.4).abs() < 1e-14);
    }

    #[test]
    fn bp_like_reducible_line() {
        let line = registry::reducible_line(0.7, 50, BoundaryPolicy::GhostSurvive).unwrap();
        let h = detect_bp_like(&line).unwrap();
        match &h {
            ScalarGenFun::Table(t) => {
                assert!((t[0] - 0.3).abs() < 1e-14);
                assert_eq!(t[1], 0.0);
                assert!((t[2] - 0.7).abs() < 1e-14);
            }
            _ => panic!("expected a table"),
        }
    }

    #[test]
    fn bp_fixed_points_binary() {
        let h = ScalarGenFun::Table(vec![0.3, 0.0, 0.7]);
        let fps = bp_fixed_points(&h, 1e-12).unwrap();
        assert_eq!(fps.len(), 2);
        assert!((fps[0] - 3.0 / 7.0).abs() < 1e-10);
        assert_eq!(fps[1], 1.0);
    }

    #[test]
    fn bp_fixed_points_geometric() {
        let h = ScalarGenFun::Geometric { mean: 1.2 };
        let fps = bp_fixed_points(&h, 1e-12).unwrap();
        assert!((fps[0] - 1.0 / 1.2).abs() < 1e-10);
        // subcritical: only the trivial point
        let h = ScalarGenFun::Geometric { mean: 0.8 };
        let fps = bp_fixed_points(&h, 1e-12).unwrap();
        assert_eq!(fps, vec![1.0]);
    }

    #[test]
    fn validate_identity_projection() {
        let m = registry::counterexample3();
        let pairs = m.window().sites().iter().map(|&s| (s, s)).collect();
        let g = ProjectionMap::new(pairs, OutRule::ToBoundary);
        let r = validate_projection(&m, &m, &g, 20, 1).unwrap();
        assert!(r.ok, "identity projection must validate: {r:?}");
    }

    #[test]
    fn validate_line_to_singleton() {
        let p = 2.0 / 3.0;
        let eps = 1.0 / 9.0;
        let line = registry::irreducible_line(p, eps, 60, BoundaryPolicy::GhostSurvive).unwrap();
        let dst = scalar_target(p, eps);
        let g = ProjectionMap::to_singleton(&line, 0);
        let r = validate_projection(&line, &dst, &g, 50, 2).unwrap();
        assert!(r.surjective && r.pushforward_ok, "{r:?}");
        assert!(r.identity_max_gap <= 1e-12, "gap {}", r.identity_max_gap);
    }

    #[test]
    fn validate_tree_ball_to_radial() {
        let lambda = 0.3;
        let ball = registry::tree_counterpart_ball(4, lambda, 0.0, 4, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let radial =
            registry::tree_counterpart_radial(4, lambda, 0.0, 4, BoundaryPolicy::GhostSurvive)
                .unwrap();
        let g = ProjectionMap::tree_radial(4, 4);
        let r = validate_projection(&ball, &radial, &g, 40, 3).unwrap();
        assert!(r.ok, "{r:?}");
    }

    #[test]
    fn validate_tree_ball_to_singleton_geometric() {
        // the unmodified tree counterpart is BP-like: everything maps to
        // one site with a geometric total of mean lambda * d
        let lambda = 0.3;
        let ball = registry::tree_counterpart_ball(4, lambda, 0.0, 3, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let mut law = crate::model::IndepLaw::new(
            crate::model::TotalLaw::Geometric { mean: lambda * 4.0 },
            vec![(0, 1.0)],
        )
        .unwrap();
        law.moment_row = Some(vec![(0, lambda * 4.0)]);
        let dst = BRWModel::with_descriptor(
            SiteSpace::ExplicitFinite(vec![0]),
            vec![SiteLaw::Indep(law)],
            BoundaryPolicy::GhostSurvive,
            crate::model::Descriptor::Explicit,
            true,
            None,
        )
        .unwrap();
        let g = ProjectionMap::to_singleton(&ball, 0);
        let r = validate_projection(&ball, &dst, &g, 30, 9).unwrap();
        assert!(r.ok, "{r:?}");
        // and the scalar extinction matches the closed form through the
        // branching-process reduction
        let h = detect_bp_like(&ball).expect("constant geometric totals");
        let fps = bp_fixed_points(&h, 1e-12).unwrap();
        assert!((fps[0] - 1.0 / 1.2).abs() < 1e-10);
    }

    #[test]
    fn extinction_pushforward_tree_to_geometric_bp() {
        // q_bar of the tree counterpart equals the geometric BP value
        // 1/(lambda d) away from the truncation shell
        let lambda = 0.3;
        let radial =
            registry::tree_counterpart_radial(4, lambda, 0.0, 200, BoundaryPolicy::GhostSurvive)
                .unwrap();
        let mut law = crate::model::IndepLaw::new(
            crate::model::TotalLaw::Geometric { mean: lambda * 4.0 },
            vec![(0, 1.0)],
        )
        .unwrap();
        law.moment_row = Some(vec![(0, lambda * 4.0)]);
        let dst = BRWModel::with_descriptor(
            SiteSpace::ExplicitFinite(vec![0]),
            vec![SiteLaw::Indep(law)],
            BoundaryPolicy::GhostSurvive,
            crate::model::Descriptor::Explicit,
            true,
            None,
        )
        .unwrap();
        let g = ProjectionMap::to_singleton(&radial, 0);
        assert!(validate_projection(&radial, &dst, &g, 20, 10).unwrap().ok);
        let interior: Vec<Site> = (0..=100).collect();
        let r = pushforward_extinction_check(&radial, &dst, &g, &opts(), 1e-6, Some(&interior))
            .unwrap();
        assert!(r.ok, "interior gap {}", r.region_max_gap);
        let q = genfun::global_extinction(&dst, &opts()).vector.values[0];
        assert!((q - 1.0 / 1.2).abs() < 1e-9, "scalar q_bar {q}");
    }

    #[test]
    fn validate_detects_mismatch() {
        let line = registry::reducible_line(0.7, 30, BoundaryPolicy::GhostSurvive).unwrap();
        // wrong target: totals differ
        let dst = scalar_target(0.6, 0.2);
        let g = ProjectionMap::to_singleton(&line, 0);
        let r = validate_projection(&line, &dst, &g, 5, 4).unwrap();
        assert!(!r.pushforward_ok);
        assert!(r.mismatch.is_some());
    }

    #[test]
    fn fixed_point_pullback_residuals() {
        // counterexample2 projects onto the scalar BP with
        // rho = {0: 1/4, 2: 3/4}; target fixed points pull back to fixed
        // points of the source.
        let src = registry::counterexample2();
        let dst = BRWModel::new(
            SiteSpace::ExplicitFinite(vec![0]),
            vec![SiteLaw::Atoms(
                AtomLaw::new(vec![
                    (0.25, Placement::empty()),
                    (0.75, Placement::new(vec![(0, 2)])),
                ])
                .unwrap(),
            )],
            BoundaryPolicy::GhostDie,
        )
        .unwrap();
        let g = ProjectionMap::to_singleton(&src, 0);
        assert!(validate_projection(&src, &dst, &g, 20, 5).unwrap().ok);
        for fp in genfun::enumerate_fixed_points(&dst, 101, 1e-10).unwrap() {
            let pulled = g.pullback(&src, &dst, &fp);
            let gz = genfun::apply_g(&src, &pulled);
            assert!(
                gz.sup_dist(&pulled) <= 1e-10,
                "pullback of a target fixed point must be fixed"
            );
        }
    }

    #[test]
    fn fixed_point_pullback_ball_radial() {
        let lambda = 0.35;
        let ball =
            registry::tree_counterpart_ball(4, lambda, 0.0, 5, BoundaryPolicy::GhostDie).unwrap();
        let radial =
            registry::tree_counterpart_radial(4, lambda, 0.0, 5, BoundaryPolicy::GhostDie).unwrap();
        let g = ProjectionMap::tree_radial(4, 5);
        let fps = genfun::enumerate_fixed_points(&radial, 9, 1e-9).unwrap();
        assert!(!fps.is_empty());
        for fp in fps {
            let pulled = g.pullback(&ball, &radial, &fp);
            let gz = genfun::apply_g(&ball, &pulled);
            assert!(gz.sup_dist(&pulled) <= 1e-10);
        }
    }

    #[test]
    fn extinction_pushforward_matched_truncation() {
        let lambda = 0.35;
        let ball = registry::tree_counterpart_ball(4, lambda, 0.0, 5, BoundaryPolicy::GhostSurvive)
            .unwrap();
        let radial =
            registry::tree_counterpart_radial(4, lambda, 0.0, 5, BoundaryPolicy::GhostSurvive)
                .unwrap();
        let g = ProjectionMap::tree_radial(4, 5);
        let r = pushforward_extinction_check(&ball, &radial, &g, &opts(), 1e-8, None).unwrap();
        assert!(r.ok, "matched truncations agree everywhere: {r:?}");
    }

    #[test]
    fn extinction_pushforward_line_interior() {
        // q_bar of the irreducible line equals the scalar BP value 0.6 in
        // the window interior; boundary sites feel the truncation.
        let p = 2.0 / 3.0;
        let eps = 1.0 / 9.0;
        let line = registry::irreducible_line(p, eps, 200, BoundaryPolicy::GhostSurvive).unwrap();
        let dst = scalar_target(p, eps);
        let g = ProjectionMap::to_singleton(&line, 0);
        let interior: Vec<Site> = (0..=100).collect();
        let r =
            pushforward_extinction_check(&line, &dst, &g, &opts(), 1e-6, Some(&interior)).unwrap();
        assert!(r.ok, "interior gap {} exceeds tolerance", r.region_max_gap);
        assert!(
            r.max_gap > 1e-3,
            "the right edge must deviate under truncation"
        );
        // and the scalar value itself is 0.6
        let q = genfun::global_extinction(&dst, &opts()).vector.values[0];
        assert!((q - 0.6).abs() < 1e-9);
    }
}
