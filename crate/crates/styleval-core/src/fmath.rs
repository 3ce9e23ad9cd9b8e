//! Float helpers routed through libm so results are bit-identical whether or
//! not the host build links std.

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
