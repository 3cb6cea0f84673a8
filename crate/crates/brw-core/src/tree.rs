//! Geometry of rooted balls in the homogeneous tree `T_d`.
//!
//! Ball sites are numbered breadth-first: the root is `0`, the `d` sites of
//! the first sphere come next, then each sphere in order. The numbering
//! extends past the ball boundary, so the children of shell sites have
//! well-defined (out-of-window) indices.

use alloc::vec::Vec;

use crate::model::Site;

/// Number of sites on the sphere of radius `level`.
pub fn sphere_size(degree: u32, level: u32) -> u64 {
    if level == 0 {
        return 1;
    }
    let d = degree as u64;
    let mut n = d;
    for _ in 1..level {
        n *= (degree - 1) as u64;
    }
    n
}

/// Index of the first site on the sphere of radius `level`.
pub fn sphere_start(degree: u32, level: u32) -> u64 {
    let mut start = 0;
    for l in 0..level {
        start += sphere_size(degree, l);
    }
    start
}

/// Number of sites in the closed ball of the given radius.
pub fn ball_size(degree: u32, radius: u32) -> u64 {
    sphere_start(degree, radius + 1)
}

/// Distance from the root of the site with the given BFS index.
pub fn level_of(degree: u32, site: Site) -> u32 {
    debug_assert!(site >= 0);
    let s = site as u64;
    let mut level = 0;
    while sphere_start(degree, level + 1) <= s {
        level += 1;
    }
    level
}

/// Neighbours of a ball site in `T_d`: the parent (absent at the root) and
/// the children on the next sphere. Children of shell sites land outside
/// the ball; their indices are still valid BFS indices.
pub fn neighbors(degree: u32, site: Site) -> Vec<Site> {
    let d = degree as u64;
    let s = site as u64;
    let mut out = Vec::with_capacity(degree as usize);
    if site == 0 {
        let start = sphere_start(degree, 1);
        for j in 0..d {
            out.push((start + j) as Site);
        }
        return out;
    }
    let level = level_of(degree, site);
    let pos = s - sphere_start(degree, level);
    // parent
    let parent = if level == 1 {
        0
    } else {
        sphere_start(degree, level - 1) + pos / (d - 1)
    };
    out.push(parent as Site);
    // children
    let child_start = sphere_start(degree, level + 1);
    let first = if level == 0 { 0 } else { pos * (d - 1) };
    for j in 0..(d - 1) {
        out.push((child_start + first + j) as Site);
    }
    out
}
