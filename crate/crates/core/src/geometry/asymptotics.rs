use super::LossKind;
use crate::error::{domain, Result};
use crate::scalar::Real;

/// `gamma` within this distance of a breakpoint takes the breakpoint value.
pub const BREAKPOINT_TOL: f64 = 1e-12;

/// Limiting within-group cosines as `R -> infinity` with `Delta = R^gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticAngles<T> {
    pub w_min: T,
    pub w_maj: T,
    pub h_min: T,
    pub h_maj: T,
}

#[derive(Clone, Copy)]
enum Side {
    Below,
    At,
    Above,
}

fn side<T: Real>(gamma: T, breakpoint: T) -> Side {
    if (gamma - breakpoint).abs() <= T::lit(BREAKPOINT_TOL) {
        Side::At
    } else if gamma < breakpoint {
        Side::Below
    } else {
        Side::Above
    }
}

fn pick<T>(s: Side, [below, at, above]: [T; 3]) -> T {
    match s {
        Side::Below => below,
        Side::At => at,
        Side::Above => above,
    }
}

/// The tabulated limits. `Ce` is `gamma = 0` of either table.
pub fn asymptotic_angles<T: Real>(loss: LossKind, gamma: T, k: usize) -> Result<AsymptoticAngles<T>> {
    if k < 4 {
        return domain(format!("within-group angles need k >= 4, got {k}"));
    }
    let kf = T::from_usize_lossy(k);
    let one = T::one();
    let two = T::lit(2.0);
    let s2 = two.sqrt();
    let minus_two = -two / (kf - two);
    let etf = -one / (kf - one);
    let w_corner = (one - two * s2) / (one + s2 * (kf - two));
    let h_corner = (two - two * s2) / (two + s2 * (kf - two));
    match loss {
        LossKind::Cdt => {
            let sixth = side(gamma, one / T::lit(6.0));
            let zero = side(gamma, T::zero());
            Ok(AsymptoticAngles {
                w_min: pick(sixth, [one, T::zero(), minus_two]),
                w_maj: pick(zero, [minus_two, w_corner, T::zero()]),
                h_min: pick(zero, [T::zero(), minus_two, minus_two]),
                h_maj: pick(zero, [T::zero(), h_corner, minus_two]),
            })
        }
        LossKind::Ldt => {
            let half = side(gamma, one / two);
            Ok(AsymptoticAngles {
                w_min: pick(half, [one, etf, w_corner]),
                w_maj: pick(half, [w_corner, etf, one]),
                h_min: pick(half, [minus_two, etf, h_corner]),
                h_maj: pick(half, [-s2 / (-s2 + kf * (one + s2)), etf, minus_two]),
            })
        }
        LossKind::Ce => asymptotic_angles(LossKind::Cdt, T::zero(), k),
    }
}
