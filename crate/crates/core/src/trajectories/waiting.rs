//! No-jump evolution `ψ(t) = e^{At}ψ₀` with `A = −iH_eff` and inversion of
//! its norm decay.

use nalgebra::Vector2;

use crate::dynamics::ops::{Op2, C64};

pub(crate) type State = Vector2<C64>;

/// Below this `|q t|` the `sinh(qt)/q` factor is taken from its series.
const SERIES_LIMIT: f64 = 1e-3;
const MAX_ITERATIONS: usize = 200;

/// Closed-form exponential of a constant 2×2 generator via Cayley–Hamilton:
/// `e^{At} = c₀(t)·I + c₁(t)·(A − mI)` with eigenvalues `m ± q`.
#[derive(Debug, Clone)]
pub(crate) struct Exp2 {
    shifted: Op2,
    m: C64,
    q: C64,
}

impl Exp2 {
    pub fn new(a: &Op2) -> Self {
        let m = (a[(0, 0)] + a[(1, 1)]) * 0.5;
        let shifted = a - Op2::identity() * m;
        // (A − mI)² = q²·I
        let q = (shifted[(0, 0)] * shifted[(0, 0)] + shifted[(0, 1)] * shifted[(1, 0)]).sqrt();
        Exp2 { shifted, m, q }
    }

    pub fn at(&self, t: f64) -> Op2 {
        let qt = self.q * t;
        let (c0, c1) = if qt.norm() < SERIES_LIMIT {
            let e = (self.m * t).exp();
            let q2 = qt * qt;
            (
                e * (C64::from(1.0) + q2 / 2.0 + q2 * q2 / 24.0),
                e * t * (C64::from(1.0) + q2 / 6.0 + q2 * q2 / 120.0),
            )
        } else {
            let (e1, e2) = (((self.m + self.q) * t).exp(), ((self.m - self.q) * t).exp());
            ((e1 + e2) * 0.5, (e1 - e2) / (self.q * 2.0))
        };
        Op2::identity() * c0 + self.shifted * c1
    }

    pub fn apply(&self, t: f64, psi: &State) -> State {
        self.at(t) * psi
    }
}

pub(crate) fn norm_sqr(psi: &State) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum()
}

/// Time at which `‖e^{At}ψ₀‖²` falls to `u`, or `None` if it stays above `u`
/// through `horizon`. `decay` is `Σ J†J`, the rate of norm loss.
pub(crate) fn waiting_time(
    exp: &Exp2,
    decay: &Op2,
    psi: &State,
    u: f64,
    horizon: f64,
    scale: f64,
) -> Option<f64> {
    let p = |t: f64| norm_sqr(&exp.apply(t, psi));
    if horizon <= 0.0 {
        return None;
    }
    // Bracket by doubling from the natural decay scale.
    let (mut lo, mut hi) = (0.0, scale.min(horizon));
    while p(hi) > u {
        if hi >= horizon {
            return None;
        }
        lo = hi;
        hi = (2.0 * hi).min(horizon);
    }

    let mut t = 0.5 * (lo + hi);
    for _ in 0..MAX_ITERATIONS {
        let state = exp.apply(t, psi);
        let f = norm_sqr(&state) - u;
        if f > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if f.abs() <= 1e-15 || hi - lo <= 1e-13 * hi.max(1.0) {
            break;
        }
        let slope = -(state.adjoint() * decay * state)[(0, 0)].re;
        let newton = if slope < 0.0 { t - f / slope } else { f64::NAN };
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Some(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ops::{ONE, ZERO};

    fn generic() -> Op2 {
        Op2::new(
            C64::new(-0.3, 0.2),
            C64::new(0.0, -0.7),
            C64::new(0.1, -0.7),
            C64::new(-1.1, -0.4),
        )
    }

    #[test]
    fn matches_dense_exponential() {
        for a in [
            generic(),
            Op2::from_diagonal_element(C64::new(-0.5, 0.1)),
            Op2::new(ZERO, ONE, ZERO, ZERO),
        ] {
            let exp = Exp2::new(&a);
            for t in [0.0, 1e-6, 0.01, 0.7, 3.0, 40.0] {
                let dense = (a * C64::from(t)).exp();
                let diff = (exp.at(t) - dense)
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                assert!(diff < 1e-12, "t={t} diff={diff}");
            }
        }
    }

    #[test]
    fn inverts_pure_exponential_decay() {
        let decay = Op2::from_diagonal_element(C64::from(2.0));
        let exp = Exp2::new(&(decay * C64::from(-0.5)));
        let psi = State::new(ONE, ZERO);
        let t = waiting_time(&exp, &decay, &psi, 0.3, 100.0, 0.5).unwrap();
        assert!((t - (-(0.3f64).ln() / 2.0)).abs() < 1e-12);
        assert_eq!(waiting_time(&exp, &decay, &psi, 0.3, 0.1, 0.5), None);
    }

    #[test]
    fn dark_state_never_jumps() {
        let decay = Op2::new(ZERO, ZERO, ZERO, ONE);
        let exp = Exp2::new(&(decay * C64::from(-0.5)));
        let psi = State::new(ONE, ZERO);
        assert_eq!(waiting_time(&exp, &decay, &psi, 0.5, 1e4, 1.0), None);
    }
}
