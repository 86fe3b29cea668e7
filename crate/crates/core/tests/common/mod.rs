//! Shared fixtures for the integration suites.

use cosdyn::map::CosineMap;
use cosdyn::symbolic::{ExternalAddress, Side, StripSymbol};
use num_complex::Complex64;

pub fn cosh_map() -> CosineMap {
    CosineMap::new(Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)).unwrap()
}

pub fn sym(n: i64, side: Side) -> StripSymbol {
    StripSymbol::new(n, side)
}

/// Ten generators spanning the supported forms: bounded periodic cycles with
/// both sides, preperiods, explicit prefixes, and fast parametric growth.
pub fn generator_pool() -> Vec<ExternalAddress> {
    vec![
        ExternalAddress::periodic(vec![], vec![sym(0, Side::R)]).unwrap(),
        ExternalAddress::periodic(vec![sym(0, Side::L)], vec![sym(0, Side::R)]).unwrap(),
        ExternalAddress::periodic(vec![], vec![sym(1, Side::R)]).unwrap(),
        ExternalAddress::periodic(vec![], vec![sym(3, Side::R), sym(-2, Side::L)]).unwrap(),
        ExternalAddress::periodic(vec![sym(2, Side::R)], vec![sym(0, Side::R), sym(1, Side::L)])
            .unwrap(),
        ExternalAddress::periodic(vec![], vec![sym(2, Side::L), sym(1, Side::R), sym(0, Side::R)])
            .unwrap(),
        ExternalAddress::prefix(vec![sym(5, Side::R), sym(-3, Side::L)], sym(0, Side::R)),
        ExternalAddress::fast(1.0, 1.0, vec![Side::R]).unwrap(),
        ExternalAddress::fast(1.5, 1.0, vec![Side::R, Side::L]).unwrap(),
        ExternalAddress::fast(0.8, 2.0, vec![Side::R]).unwrap(),
    ]
}
