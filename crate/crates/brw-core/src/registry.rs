//! Registered example models. Fixtures are code, not config, so the golden
//! parameters version together with the library.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ctbrw::CTModel;
use crate::model::{
    AtomLaw, BRWModel, BoundaryPolicy, Descriptor, ModelError, Placement, Site, SiteLaw, SiteSpace,
};
use crate::tree;

/// Two sites; a particle at 1 has one child at 1 and one at 2, a particle
/// at 2 has one child at 1 with probability 1/2 and none otherwise.
/// G(x, y) = (xy, (1+x)/2).
pub fn counterexample1() -> BRWModel {
    let mu1 =
        SiteLaw::Atoms(AtomLaw::new(vec![(1.0, Placement::new(vec![(1, 1), (2, 1)]))]).unwrap());
    let mu2 = SiteLaw::Atoms(
        AtomLaw::new(vec![
            (0.5, Placement::empty()),
            (0.5, Placement::new(vec![(1, 1)])),
        ])
        .unwrap(),
    );
    BRWModel::with_descriptor(
        SiteSpace::ExplicitFinite(vec![1, 2]),
        vec![mu1, mu2],
        BoundaryPolicy::GhostDie,
        Descriptor::Explicit,
        false,
        Some(String::from("counterexample1")),
    )
    .unwrap()
}

/// Two sites; each particle has no children with probability 1/4 and two
/// children on the other site with probability 3/4.
/// G(x, y) = ((1+3y^2)/4, (1+3x^2)/4).
pub fn counterexample2() -> BRWModel {
    let law = |other: Site| {
        SiteLaw::Atoms(
            AtomLaw::new(vec![
                (0.25, Placement::empty()),
                (0.75, Placement::new(vec![(other, 2)])),
            ])
            .unwrap(),
        )
    };
    BRWModel::with_descriptor(
        SiteSpace::ExplicitFinite(vec![1, 2]),
        vec![law(2), law(1)],
        BoundaryPolicy::GhostDie,
        Descriptor::Explicit,
        false,
        Some(String::from("counterexample2")),
    )
    .unwrap()
}

/// Three sites; every particle at j has exactly one child at each site
/// different from j. G = (x2 x3, x1 x3, x1 x2).
pub fn counterexample3() -> BRWModel {
    let law = |a: Site, b: Site| {
        SiteLaw::Atoms(AtomLaw::new(vec![(1.0, Placement::new(vec![(a, 1), (b, 1)]))]).unwrap())
    };
    BRWModel::with_descriptor(
        SiteSpace::ExplicitFinite(vec![1, 2, 3]),
        vec![law(2, 3), law(1, 3), law(1, 2)],
        BoundaryPolicy::GhostDie,
        Descriptor::Explicit,
        false,
        Some(String::from("counterexample3")),
    )
    .unwrap()
}

/// Single-site branching process: two children with probability `p`, none
/// otherwise.
pub fn binary_bp(p: f64) -> Result<BRWModel, ModelError> {
    if !(0.0 < p && p < 1.0) {
        return Err(ModelError::BadParameter {
            what: "binary BP needs 0 < p < 1",
        });
    }
    let law = SiteLaw::Atoms(AtomLaw::new(vec![
        (1.0 - p, Placement::empty()),
        (p, Placement::new(vec![(0, 2)])),
    ])?);
    BRWModel::with_descriptor(
        SiteSpace::ExplicitFinite(vec![0]),
        vec![law],
        BoundaryPolicy::GhostDie,
        Descriptor::Explicit,
        false,
        Some(String::from("binary-bp")),
    )
}

/// BRW on N, window `[0, n]`: every particle at `k` has two children at
/// `k+1` with probability `p` and none with probability `1-p`.
pub fn reducible_line(p: f64, n: Site, policy: BoundaryPolicy) -> Result<BRWModel, ModelError> {
    if !(0.0 < p && p < 1.0) {
        return Err(ModelError::BadParameter {
            what: "reducible line needs 0 < p < 1",
        });
    }
    if n < 0 {
        return Err(ModelError::EmptyWindow);
    }
    let laws = (0..=n)
        .map(|k| {
            SiteLaw::Atoms(
                AtomLaw::new(vec![
                    (1.0 - p, Placement::empty()),
                    (p, Placement::new(vec![(k + 1, 2)])),
                ])
                .unwrap(),
            )
        })
        .collect();
    BRWModel::with_descriptor(
        SiteSpace::NonnegIntegers { max: n },
        laws,
        policy,
        Descriptor::ReducibleLine { p },
        false,
        Some(String::from("reducible-N")),
    )
}

/// BRW on N, window `[0, n]`: two children at `k+1` with probability
/// `p - eps`, one child at `max(0, k-1)` with probability `eps`, none with
/// probability `1 - p`.
pub fn irreducible_line(
    p: f64,
    eps: f64,
    n: Site,
    policy: BoundaryPolicy,
) -> Result<BRWModel, ModelError> {
    if !(0.0 < eps && eps < p && p < 1.0) {
        return Err(ModelError::BadParameter {
            what: "irreducible line needs 0 < eps < p < 1",
        });
    }
    if n < 1 {
        return Err(ModelError::EmptyWindow);
    }
    let laws = (0..=n)
        .map(|k| {
            SiteLaw::Atoms(
                AtomLaw::new(vec![
                    (1.0 - p, Placement::empty()),
                    (p - eps, Placement::new(vec![(k + 1, 2)])),
                    (eps, Placement::new(vec![((k - 1).max(0), 1)])),
                ])
                .unwrap(),
            )
        })
        .collect();
    BRWModel::with_descriptor(
        SiteSpace::NonnegIntegers { max: n },
        laws,
        policy,
        Descriptor::IrreducibleLine { p, eps },
        false,
        Some(String::from("irreducible-N")),
    )
}

/// The translation-invariant variant on Z, window `[-r, r]`: two children
/// at `k+1` with probability `p - eps`, one child at `k-1` with
/// probability `eps`, none with probability `1 - p`.
pub fn irreducible_zline(
    p: f64,
    eps: f64,
    r: Site,
    policy: BoundaryPolicy,
) -> Result<BRWModel, ModelError> {
    if !(0.0 < eps && eps < p && p < 1.0) {
        return Err(ModelError::BadParameter {
            what: "irreducible Z line needs 0 < eps < p < 1",
        });
    }
    if r < 1 {
        return Err(ModelError::EmptyWindow);
    }
    let laws = (-r..=r)
        .map(|k| {
            SiteLaw::Atoms(
                AtomLaw::new(vec![
                    (1.0 - p, Placement::empty()),
                    (p - eps, Placement::new(vec![(k + 1, 2)])),
                    (eps, Placement::new(vec![(k - 1, 1)])),
                ])
                .unwrap(),
            )
        })
        .collect();
    BRWModel::with_descriptor(
        SiteSpace::Integers { radius: r },
        laws,
        policy,
        Descriptor::IrreducibleZ { p, eps },
        false,
        Some(String::from("irreducible-Z")),
    )
}

/// Continuous-time edge-breeding BRW on the tree ball: `K` is the
/// adjacency matrix of `T_d` restricted to rows in the ball.
pub fn tree_edge_ball_ct(degree: u32, radius: u32) -> CTModel {
    let sites: Vec<Site> = (0..tree::ball_size(degree, radius) as Site).collect();
    let rates = sites
        .iter()
        .map(|&s| {
            tree::neighbors(degree, s)
                .into_iter()
                .map(|t| (t, 1.0))
                .collect()
        })
        .collect();
    CTModel::new(
        SiteSpace::HomogeneousTree { degree, radius },
        rates,
        crate::ctbrw::CtKind::TreeEdge { degree },
    )
    .unwrap()
    .with_tag("tree-edge")
}

/// Tree-edge model with an extra reproduction loop of the given rate at
/// the root.
pub fn tree_edge_loop_ball_ct(degree: u32, loop_rate: f64, radius: u32) -> CTModel {
    let base = tree_edge_ball_ct(degree, radius);
    let mut row: Vec<(Site, f64)> = tree::neighbors(degree, 0)
        .into_iter()
        .map(|t| (t, 1.0))
        .collect();
    row.push((0, loop_rate));
    crate::ctbrw::modify_local(&base, &[0], &[(0, row)])
        .unwrap()
        .with_tag("tree-edge-loop")
}

/// Radial collapse of the tree-edge model (distance from the root as the
/// site): rate 1 towards the root, `d - 1` away from it, `d` out of the
/// root, plus the optional loop at the root. The projection of `T_d` onto
/// distance classes maps the ball model onto this line model exactly.
pub fn tree_radial_ct(degree: u32, root_loop: f64, max: Site) -> CTModel {
    let d = degree as f64;
    let mut rates: Vec<Vec<(Site, f64)>> = Vec::with_capacity(max as usize + 1);
    for r in 0..=max {
        if r == 0 {
            let mut row = vec![(1, d)];
            if root_loop > 0.0 {
                row.push((0, root_loop));
            }
            rates.push(row);
        } else {
            rates.push(vec![(r - 1, 1.0), (r + 1, d - 1.0)]);
        }
    }
    CTModel::new(
        SiteSpace::NonnegIntegers { max },
        rates,
        crate::ctbrw::CtKind::TreeEdgeRadial { degree, root_loop },
    )
    .unwrap()
    .with_tag(if root_loop > 0.0 {
        "tree-edge-loop-radial"
    } else {
        "tree-edge-radial"
    })
}

/// Discrete counterpart of the tree-edge(-loop) model on a ball window.
pub fn tree_counterpart_ball(
    degree: u32,
    lambda: f64,
    root_loop: f64,
    radius: u32,
    policy: BoundaryPolicy,
) -> Result<BRWModel, ModelError> {
    let ct = if root_loop > 0.0 {
        tree_edge_loop_ball_ct(degree, root_loop, radius)
    } else {
        tree_edge_ball_ct(degree, radius)
    };
    let m = crate::ctbrw::discrete_counterpart(&ct, lambda)?;
    Ok(m.with_policy(policy))
}

/// Discrete counterpart of the radial tree model on the window `[0, max]`.
pub fn tree_counterpart_radial(
    degree: u32,
    lambda: f64,
    root_loop: f64,
    max: Site,
    policy: BoundaryPolicy,
) -> Result<BRWModel, ModelError> {
    let ct = tree_radial_ct(degree, root_loop, max);
    let m = crate::ctbrw::discrete_counterpart(&ct, lambda)?;
    Ok(m.with_policy(policy))
}

/// A registered model behind a tag, with the parameters used throughout
/// the fixtures.
pub enum TaggedModel {
    Discrete(BRWModel),
    Continuous(CTModel),
}

/// Expands a registered tag to its model with default parameters.
pub fn default_for_tag(tag: &str) -> Option<TaggedModel> {
    match tag {
        "counterexample1" => Some(TaggedModel::Discrete(counterexample1())),
        "counterexample2" => Some(TaggedModel::Discrete(counterexample2())),
        "counterexample3" => Some(TaggedModel::Discrete(counterexample3())),
        "binary-bp" => Some(TaggedModel::Discrete(binary_bp(0.7).unwrap())),
        "reducible-N" => Some(TaggedModel::Discrete(
            reducible_line(0.7, 100, BoundaryPolicy::GhostSurvive).unwrap(),
        )),
        "irreducible-N" => Some(TaggedModel::Discrete(
            irreducible_line(2.0 / 3.0, 1.0 / 9.0, 200, BoundaryPolicy::GhostSurvive).unwrap(),
        )),
        "irreducible-Z" => Some(TaggedModel::Discrete(
            irreducible_zline(2.0 / 3.0, 1.0 / 9.0, 100, BoundaryPolicy::GhostSurvive).unwrap(),
        )),
        "tree-edge" => Some(TaggedModel::Continuous(tree_edge_ball_ct(4, 6))),
        "tree-edge-loop" => Some(TaggedModel::Continuous(tree_edge_loop_ball_ct(4, 5.0, 6))),
        _ => None,
    }
}
