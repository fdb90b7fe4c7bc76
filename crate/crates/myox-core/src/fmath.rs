//! Float intrinsics behind a feature switch: `std` methods when available,
//! `libm` otherwise. Keeps the numeric modules `no_std`-clean.

#![allow(dead_code)]

macro_rules! shim {
    ($name:ident, $ty:ty, $std_expr:expr, $libm_fn:path) => {
        #[cfg(feature = "std")]
        #[inline(always)]
        pub fn $name(x: $ty) -> $ty {
            $std_expr(x)
        }
        #[cfg(not(feature = "std"))]
        #[inline(always)]
        pub fn $name(x: $ty) -> $ty {
            $libm_fn(x)
        }
    };
}

shim!(sqrt, f64, |x: f64| x.sqrt(), libm::sqrt);
shim!(exp, f64, |x: f64| x.exp(), libm::exp);
shim!(ln, f64, |x: f64| x.ln(), libm::log);
shim!(log2, f64, |x: f64| x.log2(), libm::log2);
shim!(floor, f64, |x: f64| x.floor(), libm::floor);
shim!(ceil, f64, |x: f64| x.ceil(), libm::ceil);
shim!(round, f64, |x: f64| x.round(), libm::round);
shim!(abs, f64, |x: f64| x.abs(), libm::fabs);
shim!(sin, f64, |x: f64| x.sin(), libm::sin);
shim!(cos, f64, |x: f64| x.cos(), libm::cos);

shim!(sqrtf, f32, |x: f32| x.sqrt(), libm::sqrtf);
shim!(expf, f32, |x: f32| x.exp(), libm::expf);
shim!(lnf, f32, |x: f32| x.ln(), libm::logf);
shim!(floorf, f32, |x: f32| x.floor(), libm::floorf);
shim!(absf, f32, |x: f32| x.abs(), libm::fabsf);
shim!(sinf, f32, |x: f32| x.sin(), libm::sinf);
shim!(cosf, f32, |x: f32| x.cos(), libm::cosf);

#[cfg(feature = "std")]
#[inline(always)]
pub fn powf(x: f64, y: f64) -> f64 {
    x.powf(y)
}
#[cfg(not(feature = "std"))]
#[inline(always)]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

/// Integer power by repeated squaring; exact for the small exponents used here.
#[inline]
pub fn powi(x: f64, mut n: i32) -> f64 {
    let mut base = if n < 0 { 1.0 / x } else { x };
    if n < 0 {
        n = -n;
    }
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}
