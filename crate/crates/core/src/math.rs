//! Float helpers over `libm` so the numeric code builds without `std`.

pub(crate) const LN_2: f64 = core::f64::consts::LN_2;
pub(crate) const LOG2_E: f64 = core::f64::consts::LOG2_E;

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// `log2(1 + x)`, accurate for small `x`.
#[inline]
pub(crate) fn log2_1p(x: f64) -> f64 {
    libm::log1p(x) * LOG2_E
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
