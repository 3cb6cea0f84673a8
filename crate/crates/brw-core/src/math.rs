//! Float helpers that work in both std and no_std builds.
//!
//! `f64` transcendental methods live in `std`; the no_std build routes them
//! through `libm` instead. Everything numeric in this crate goes through
//! these shims so the core stays `no_std`-clean.

#[cfg(feature = "std")]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    x.sqrt()
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn exp(x: f64) -> f64 {
    x.exp()
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[cfg(feature = "std")]
#[inline]
pub fn ln(x: f64) -> f64 {
    x.ln()
}
#[cfg(not(feature = "std"))]
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// `base^exp` for small integer exponents by binary exponentiation.
///
/// Offspring counts are tiny, so this is both faster and more predictable
/// than `powf` and needs no libm.
#[inline]
pub fn powu(mut base: f64, mut exp: u32) -> f64 {
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powu_matches_powi() {
        for &b in &[0.0, 0.3, 1.0, 1.7, 2.0] {
            for e in 0..12u32 {
                assert_eq!(powu(b, e), b.powi(e as i32));
            }
        }
    }
}
