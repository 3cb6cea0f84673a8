//! Explicit fixed-point families of the line models: the scalar recursion
//! that turns any admissible `z(0)` into a full fixed point, and the
//! left-translated families on Z built from the maps `phi_n`.
//!
//! The sequences converge to 1 so fast that `z(n)` saturates in f64 long
//! before `n = 500`; everything here therefore tracks `u(n) = 1 - z(n)`,
//! which stays well above the underflow threshold and keeps the strict
//! monotonicity checks meaningful.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::model::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// `z(n+1) = sqrt((z(n) - (1-p)) / p)`, needs `p > 1/2`.
    Reducible,
    /// `z(1) = sqrt(((1-eps) z(0) - (1-p)) / (p-eps))`,
    /// `z(n+1) = sqrt((z(n) - eps z(n-1) - (1-p)) / (p-eps))`;
    /// needs `2p - eps > 1`, `eps > 0`, `p < 1/sqrt(2)`,
    /// `eps (p - eps) <= 1/8`.
    Irreducible,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyError {
    ParameterGate(String),
    StartOutsideInterval { z0: f64, lo: f64 },
    NegativeRadicand { at: usize },
}

impl core::fmt::Display for FamilyError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            FamilyError::ParameterGate(s) => write!(f, "parameter gate violated: {s}"),
            FamilyError::StartOutsideInterval { z0, lo } => {
                write!(f, "z0 = {z0} must lie in ({lo}, 1)")
            }
            FamilyError::NegativeRadicand { at } => {
                write!(
                    f,
                    "negative radicand at step {at}: z0 outside the valid interval"
                )
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FamilyError {}

impl From<FamilyError> for ModelError {
    fn from(_: FamilyError) -> Self {
        ModelError::BadParameter {
            what: "fixed-point family",
        }
    }
}

/// Per-step validity of the induction invariants: strictly increasing,
/// inside the open interval, and `1 - z(n) > (1 - z(n-1)) / (2p)`.
#[derive(Clone, Debug)]
pub struct PnChecks {
    pub strictly_increasing: bool,
    pub in_open_interval: bool,
    pub gap_bound: bool,
}

impl PnChecks {
    pub fn all(&self) -> bool {
        self.strictly_increasing && self.in_open_interval && self.gap_bound
    }
}

#[derive(Clone, Debug)]
pub struct FixedPointFamily {
    pub kind: FamilyKind,
    pub p: f64,
    pub eps: f64,
    /// `z(n)`; saturates to 1.0 in f64 for large `n`.
    pub z: Vec<f64>,
    /// `1 - z(n)` tracked at full relative precision.
    pub one_minus_z: Vec<f64>,
    /// (P_n) verdicts for `n = 1..=n_max`.
    pub pn: Vec<PnChecks>,
    pub pn_all_hold: bool,
    /// Largest residual of `G(z) = z` over the computed prefix.
    pub max_residual: f64,
    /// Degenerate constant families (z0 at an endpoint) skip (P_n).
    pub constant: bool,
}

/// Smallest fixed point `(1-p)/(p-eps)` (irreducible) or `(1-p)/p`
/// (reducible): the left endpoint of the admissible interval.
pub fn interval_lower(kind: FamilyKind, p: f64, eps: f64) -> f64 {
    match kind {
        FamilyKind::Reducible => (1.0 - p) / p,
        FamilyKind::Irreducible => (1.0 - p) / (p - eps),
    }
}

fn check_gates(kind: FamilyKind, p: f64, eps: f64) -> Result<(), FamilyError> {
    match kind {
        FamilyKind::Reducible => {
            if !(p > 0.5 && p < 1.0) {
                return Err(FamilyError::ParameterGate(String::from(
                    "reducible family needs 1/2 < p < 1",
                )));
            }
        }
        FamilyKind::Irreducible => {
            if !(eps > 0.0) {
                return Err(FamilyError::ParameterGate(String::from("needs eps > 0")));
            }
            if !(2.0 * p - eps > 1.0) {
                return Err(FamilyError::ParameterGate(String::from(
                    "needs 2p - eps > 1",
                )));
            }
            if !(p < 1.0 / math::sqrt(2.0)) {
                return Err(FamilyError::ParameterGate(String::from(
                    "needs p < 1/sqrt(2)",
                )));
            }
            if !(eps * (p - eps) <= 0.125) {
                return Err(FamilyError::ParameterGate(String::from(
                    "needs eps (p - eps) <= 1/8",
                )));
            }
        }
    }
    Ok(())
}

/// Runs the recursion from `z0` for `n_max` steps and validates the
/// induction invariants and the fixed-point residual.
pub fn fixedpoint_family(
    kind: FamilyKind,
    p: f64,
    eps: f64,
    z0: f64,
    n_max: usize,
) -> Result<FixedPointFamily, FamilyError> {
    check_gates(kind, p, eps)?;
    let lo = interval_lower(kind, p, eps);

    // endpoints give the two constant fixed points
    if (z0 - 1.0).abs() < 1e-12 || (z0 - lo).abs() < 1e-12 {
        let z = alloc::vec![z0; n_max + 1];
        let one_minus_z = alloc::vec![1.0 - z0; n_max + 1];
        let max_residual = residual_max(kind, p, eps, &one_minus_z);
        return Ok(FixedPointFamily {
            kind,
            p,
            eps,
            z,
            one_minus_z,
            pn: Vec::new(),
            pn_all_hold: true,
            max_residual,
            constant: true,
        });
    }
    if !(lo < z0 && z0 < 1.0) {
        return Err(FamilyError::StartOutsideInterval { z0, lo });
    }

    // u-space recursion: u(n+1) = w / (1 + sqrt(1 - w)) with
    //   reducible:   w = u(n) / p
    //   irreducible: w = (u(n) - eps u(n-1)) / (p - eps), first step
    //                w = (1 - eps) u(0) / (p - eps)
    let mut u = Vec::with_capacity(n_max + 1);
    u.push(1.0 - z0);
    for n in 0..n_max {
        let w = match kind {
            FamilyKind::Reducible => u[n] / p,
            FamilyKind::Irreducible => {
                if n == 0 {
                    (1.0 - eps) * u[0] / (p - eps)
                } else {
                    (u[n] - eps * u[n - 1]) / (p - eps)
                }
            }
        };
        if w > 1.0 {
            return Err(FamilyError::NegativeRadicand { at: n + 1 });
        }
        let next = w / (1.0 + math::sqrt(1.0 - w));
        u.push(next);
    }

    let u_hi = 1.0 - lo; // upper bound for u on the open interval
    let pn: Vec<PnChecks> = (1..=n_max)
        .map(|n| PnChecks {
            strictly_increasing: u[n] < u[n - 1],
            in_open_interval: u[n] > 0.0 && u[n] < u_hi,
            gap_bound: u[n] > u[n - 1] / (2.0 * p),
        })
        .collect();
    let pn_all_hold = pn.iter().all(PnChecks::all);
    let max_residual = residual_max(kind, p, eps, &u);
    let z = u.iter().map(|&v| 1.0 - v).collect();

    Ok(FixedPointFamily {
        kind,
        p,
        eps,
        z,
        one_minus_z: u,
        pn,
        pn_all_hold,
        max_residual,
        constant: false,
    })
}

/// Residual of `G(z) = z` computed in u-space, so cancellation near 1
/// does not mask defects. For the irreducible law,
/// `G(z|n) - z(n) = u(n) - eps u(n-1) - 2(p-eps) u(n+1) + (p-eps) u(n+1)^2`
/// (with `(1-eps) u(0)` in place of the first two terms at `n = 0`);
/// the reducible case drops the eps terms.
fn residual_max(kind: FamilyKind, p: f64, eps: f64, u: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for n in 0..u.len().saturating_sub(1) {
        let up = u[n + 1];
        let r = match kind {
            FamilyKind::Reducible => u[n] - 2.0 * p * up + p * up * up,
            FamilyKind::Irreducible => {
                let head = if n == 0 {
                    (1.0 - eps) * u[0]
                } else {
                    u[n] - eps * u[n - 1]
                };
                head - 2.0 * (p - eps) * up + (p - eps) * up * up
            }
        };
        worst = worst.max(r.abs());
    }
    worst
}

/// `phi_n(x)`: the value at site `n` of the fixed point with `z(0) = x`,
/// for the translation-invariant law on Z (`h(x, y)` applied with
/// `phi_1(x) = h(x, x)`).
pub fn phi_sequence(p: f64, eps: f64, x: f64, n_max: usize) -> Result<Vec<f64>, FamilyError> {
    check_gates(FamilyKind::Irreducible, p, eps)?;
    let mut phi = Vec::with_capacity(n_max + 1);
    phi.push(x);
    if n_max == 0 {
        return Ok(phi);
    }
    let h = |a: f64, b: f64, at: usize| -> Result<f64, FamilyError> {
        let w = (a - eps * b - (1.0 - p)) / (p - eps);
        if w < 0.0 {
            return Err(FamilyError::NegativeRadicand { at });
        }
        Ok(math::sqrt(w))
    };
    phi.push(h(x, x, 1)?);
    for n in 1..n_max {
        let next = h(phi[n], phi[n - 1], n + 1)?;
        phi.push(next);
    }
    Ok(phi)
}

/// Inverts `phi_n` at `alpha` by bisection; `phi_n` is continuous and
/// strictly increasing on the admissible interval.
pub fn invert_phi(p: f64, eps: f64, n: usize, alpha: f64) -> Result<f64, FamilyError> {
    let lo0 = interval_lower(FamilyKind::Irreducible, p, eps);
    if !(lo0 < alpha && alpha < 1.0) {
        return Err(FamilyError::StartOutsideInterval { z0: alpha, lo: lo0 });
    }
    let phi_at = |x: f64| -> f64 {
        match phi_sequence(p, eps, x, n) {
            Ok(seq) => seq[n],
            // a failed radicand can only happen below the admissible
            // start; treat as "too small"
            Err(_) => -1.0,
        }
    };
    let mut lo = lo0;
    let mut hi = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi_at(mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One translated fixed point on Z: `z^(n)(i) = phi_{n+i}(phi_n^{-1}(alpha))`
/// for `i >= -n`, and 0 below.
#[derive(Clone, Debug)]
pub struct TranslateRow {
    pub n: usize,
    /// `(i, z^(n)(i))` over the requested coordinate range.
    pub values: Vec<(i64, f64)>,
    pub inversion_ok: bool,
}

/// Monotonicity evidence for one coordinate `i`: the observed direction
/// of `n -> z^(n)(i)` over the sampled `n` values.
#[derive(Clone, Debug)]
pub struct MonotonicityEvidence {
    pub i: i64,
    pub nondecreasing: bool,
    pub nonincreasing: bool,
    pub max_step: f64,
}

#[derive(Clone, Debug)]
pub struct TranslateReport {
    pub alpha: f64,
    pub rows: Vec<TranslateRow>,
    /// Per-coordinate evidence; the conjecture (increasing for `i > 0`,
    /// decreasing for `i < 0`) is reported, never asserted.
    pub evidence: Vec<MonotonicityEvidence>,
    /// True when every sampled coordinate moves in the conjectured
    /// direction.
    pub consistent_with_conjecture: bool,
}

/// Computes the translated family `z^(n)` for the sampled `n` values and
/// tabulates per-coordinate monotonicity in `n`.
pub fn quasitransitive_translates(
    p: f64,
    eps: f64,
    alpha: f64,
    n_list: &[usize],
    i_range: (i64, i64),
) -> Result<TranslateReport, FamilyError> {
    check_gates(FamilyKind::Irreducible, p, eps)?;
    let lo = interval_lower(FamilyKind::Irreducible, p, eps);
    // the endpoints are fixed by every phi_n: degenerate constant family
    if (alpha - lo).abs() < 1e-12 || (alpha - 1.0).abs() < 1e-12 {
        let (i_lo, i_hi) = i_range;
        let rows = n_list
            .iter()
            .map(|&n| TranslateRow {
                n,
                values: (i_lo..=i_hi)
                    .map(|i| (i, if i < -(n as i64) { 0.0 } else { alpha }))
                    .collect(),
                inversion_ok: true,
            })
            .collect();
        let evidence = (i_lo..=i_hi)
            .map(|i| MonotonicityEvidence {
                i,
                nondecreasing: true,
                nonincreasing: true,
                max_step: 0.0,
            })
            .collect();
        return Ok(TranslateReport {
            alpha,
            rows,
            evidence,
            consistent_with_conjecture: true,
        });
    }
    if !(lo < alpha && alpha < 1.0) {
        return Err(FamilyError::StartOutsideInterval { z0: alpha, lo });
    }
    let (i_lo, i_hi) = i_range;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let x = invert_phi(p, eps, n, alpha)?;
        let need = (n as i64 + i_hi).max(0) as usize;
        let phi = phi_sequence(p, eps, x, need)?;
        let mut values = Vec::new();
        let mut inversion_ok = true;
        for i in i_lo..=i_hi {
            let v = if i < -(n as i64) {
                0.0
            } else {
                let idx = (n as i64 + i) as usize;
                phi[idx]
            };
            values.push((i, v));
        }
        // sanity of the inversion: z^(n)(0) must be alpha
        let at0 = values
            .iter()
            .find(|&&(i, _)| i == 0)
            .map(|&(_, v)| v)
            .unwrap_or(alpha);
        if (at0 - alpha).abs() > 1e-9 {
            inversion_ok = false;
        }
        rows.push(TranslateRow {
            n,
            values,
            inversion_ok,
        });
    }

    let mut evidence = Vec::new();
    let mut consistent = true;
    for (pos, i) in (i_lo..=i_hi).enumerate() {
        let series: Vec<f64> = rows.iter().map(|r| r.values[pos].1).collect();
        let mut nondecreasing = true;
        let mut nonincreasing = true;
        let mut max_step = 0.0f64;
        for w in series.windows(2) {
            let step = w[1] - w[0];
            max_step = max_step.max(step.abs());
            if step < -1e-12 {
                nondecreasing = false;
            }
            if step > 1e-12 {
                nonincreasing = false;
            }
        }
        if i > 0 && !nondecreasing {
            consistent = false;
        }
        if i < 0 && !nonincreasing {
            consistent = false;
        }
        evidence.push(MonotonicityEvidence {
            i,
            nondecreasing,
            nonincreasing,
            max_step,
        });
    }

    Ok(TranslateReport {
        alpha,
        rows,
        evidence,
        consistent_with_conjecture: consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: f64 = 2.0 / 3.0;
    const EPS: f64 = 1.0 / 9.0;

    #[test]
    fn gates_enforced() {
        assert!(fixedpoint_family(FamilyKind::Reducible, 0.4, 0.0, 0.9, 10).is_err());
        assert!(fixedpoint_family(FamilyKind::Irreducible, P, 0.0, 0.9, 10).is_err());
        // p too large: 0.75 > 1/sqrt(2)
        assert!(fixedpoint_family(FamilyKind::Irreducible, 0.75, 0.1, 0.9, 10).is_err());
        // subcritical: 2p - eps <= 1
        assert!(fixedpoint_family(FamilyKind::Irreducible, 0.52, 0.1, 0.9, 10).is_err());
        // note: eps (p - eps) <= p^2/4 < 1/8 whenever p < 1/sqrt(2), so
        // the 1/8 gate is implied by the others; it is still checked
    }

    #[test]
    fn irreducible_family_long_run() {
        for &z0 in &[0.65, 0.8, 0.95] {
            let fam = fixedpoint_family(FamilyKind::Irreducible, P, EPS, z0, 500).unwrap();
            assert!(fam.pn_all_hold, "all (P_n) must hold for z0 = {z0}");
            assert!(
                fam.max_residual < 1e-12,
                "residual {} at z0 = {z0}",
                fam.max_residual
            );
            // strictly increasing to 1 in u-space
            assert!(fam.one_minus_z.windows(2).all(|w| w[1] < w[0]));
            assert!(fam.one_minus_z[500] > 0.0, "u must not underflow to zero");
            assert!(fam.one_minus_z[500] < 1e-40, "and tends to zero fast");
        }
    }

    #[test]
    fn reducible_family_constant_at_fixed_point() {
        let q = 3.0 / 7.0; // (1-p)/p at p = 0.7
        let fam = fixedpoint_family(FamilyKind::Reducible, 0.7, 0.0, q, 50).unwrap();
        assert!(fam.constant);
        assert!(fam.z.iter().all(|&z| z == q));
        assert!(fam.max_residual < 1e-15);
    }

    #[test]
    fn constant_ones_family() {
        let fam = fixedpoint_family(FamilyKind::Irreducible, P, EPS, 1.0, 20).unwrap();
        assert!(fam.constant);
        assert!(fam.z.iter().all(|&z| z == 1.0));
        assert!(fam.max_residual == 0.0);
    }

    #[test]
    fn reducible_family_increases() {
        // the strict gap bound saturates in f64 once u < ~1e-16 (the
        // radicand rounds to 1), which happens near n = 110 here; 80
        // steps keep every check strict
        let fam = fixedpoint_family(FamilyKind::Reducible, 0.7, 0.0, 0.6, 80).unwrap();
        assert!(fam.pn_all_hold);
        assert!(fam.max_residual < 1e-12);
        // strict decrease of u persists past the saturation point
        let long = fixedpoint_family(FamilyKind::Reducible, 0.7, 0.0, 0.6, 400).unwrap();
        assert!(long.one_minus_z.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn bad_start_rejected() {
        // z0 below the smallest fixed point: radicand eventually negative
        let r = fixedpoint_family(FamilyKind::Irreducible, P, EPS, 0.3, 100);
        assert!(matches!(
            r,
            Err(FamilyError::StartOutsideInterval { .. })
                | Err(FamilyError::NegativeRadicand { .. })
        ));
    }

    #[test]
    fn phi_endpoints_fixed() {
        let lo = interval_lower(FamilyKind::Irreducible, P, EPS);
        let phi = phi_sequence(P, EPS, lo, 20).unwrap();
        assert!(phi.iter().all(|&v| (v - lo).abs() < 1e-12));
        let phi = phi_sequence(P, EPS, 1.0, 20).unwrap();
        assert!(phi.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn phi_strictly_increasing_in_x() {
        let xs = [0.61, 0.7, 0.8, 0.9, 0.99];
        for n in [1usize, 5, 10, 20] {
            let vals: Vec<f64> = xs
                .iter()
                .map(|&x| phi_sequence(P, EPS, x, n).unwrap()[n])
                .collect();
            assert!(
                vals.windows(2).all(|w| w[0] < w[1]),
                "phi_{n} must increase"
            );
        }
    }

    #[test]
    fn invert_phi_roundtrip() {
        for n in [1usize, 5, 15, 30] {
            let x = invert_phi(P, EPS, n, 0.8).unwrap();
            let phi = phi_sequence(P, EPS, x, n).unwrap();
            assert!((phi[n] - 0.8).abs() < 1e-10, "phi_{n}(x*) = {}", phi[n]);
        }
    }

    #[test]
    fn translates_pin_alpha_at_zero() {
        let ns: Vec<usize> = (1..=30).collect();
        let rep = quasitransitive_translates(P, EPS, 0.8, &ns, (-10, 10)).unwrap();
        for row in &rep.rows {
            let at0 = row.values.iter().find(|&&(i, _)| i == 0).unwrap().1;
            assert!((at0 - 0.8).abs() < 1e-9, "z^(n)(0) = alpha");
            assert!(row.inversion_ok);
        }
        // evidence tables must cover the whole range
        assert_eq!(rep.evidence.len(), 21);
    }

    #[test]
    fn translates_constant_at_endpoints() {
        // phi_n fixes the endpoints, so alpha there gives the constant
        // family (zero left of the support cut)
        let lo = interval_lower(FamilyKind::Irreducible, P, EPS);
        let rep = quasitransitive_translates(P, EPS, lo, &[1, 2, 3], (-2, 2)).unwrap();
        for row in &rep.rows {
            for &(i, v) in &row.values {
                let want = if i < -(row.n as i64) { 0.0 } else { lo };
                assert_eq!(v, want);
            }
        }
        // and values just above the endpoint stay near-constant
        let rep = quasitransitive_translates(P, EPS, lo + 1e-9, &[1, 2, 3], (-2, 2)).unwrap();
        for row in &rep.rows {
            for &(_, v) in &row.values {
                assert!(v.abs() < 1e-6 || (v - lo).abs() < 1e-6);
            }
        }
        // away from the endpoints the start must lie inside the interval
        assert!(quasitransitive_translates(P, EPS, 0.3, &[1], (-1, 1)).is_err());
    }
}
