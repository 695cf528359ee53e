//! Admissible Strichartz exponents and discrete mixed space-time norms.

use num_traits::{Num, ToPrimitive};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::wave::{gradient_energy, l2_squared, SystemState, TrajectoryRecord};

/// Exponents `(q, r)` with `1/q + 3/r = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StrichartzPair<S> {
    pub q: S,
    pub r: S,
}

impl<S: Num + Copy> StrichartzPair<S> {
    /// `1/q + 3/r - 1/2`; zero for admissible pairs.
    pub fn admissibility_defect(&self) -> S {
        let one = S::one();
        let two = one + one;
        let three = two + one;
        one / self.q + three / self.r - one / two
    }
}

/// `(q, r) = (2p / (p - 3), 2p)` for `3 < p < 5`.
///
/// Generic over any field-like scalar so the identity can be checked exactly
/// with rationals.
pub fn admissible_pair<S>(p: S) -> Result<StrichartzPair<S>>
where
    S: Num + Copy + PartialOrd + ToPrimitive,
{
    let one = S::one();
    let two = one + one;
    let three = two + one;
    let five = three + two;
    if !(p > three && p < five) {
        return Err(Error::InvalidExponent(p.to_f64().unwrap_or(f64::NAN)));
    }
    let pair = StrichartzPair {
        q: two * p / (p - three),
        r: two * p,
    };
    let seven_halves = (five + two) / two;
    debug_assert!(pair.q >= seven_halves);
    Ok(pair)
}

/// Exponent `θ = (5 - p) / 2` of the nonlinear source bound.
pub fn source_bound_exponent<T: Real>(p: T) -> T {
    (T::lit(5.0) - p) / T::lit(2.0)
}

/// `T + 2 T^θ R^(p-1)`, the quantity that must stay below `1/(2C)` for the
/// fixed-point map to contract on `[0, T]` in a ball of radius `R`.
pub fn contraction_quantity<T: Real>(horizon: T, radius: T, p: T) -> T {
    let theta = source_bound_exponent(p);
    horizon + T::lit(2.0) * horizon.powf(theta) * radius.powf(p - T::one())
}

/// `‖f‖_{L^r}` with trapezoid weights.
pub fn lebesgue_norm<T: Real>(field: &[T], grid: &crate::domain::GridDomain<T>, r: T) -> T {
    let s: T = field
        .iter()
        .enumerate()
        .map(|(k, x)| grid.weight(k) * x.abs().powf(r))
        .sum();
    s.powf(T::one() / r)
}

/// Trapezoid rule over (possibly non-uniform) sample times.
pub(crate) fn trapezoid<T: Real>(times: &[T], values: &[T]) -> T {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| T::lit(0.5) * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

fn time_lebesgue<T: Real>(times: &[T], spatial: &[T], q: T) -> T {
    if times.len() < 2 {
        return T::zero();
    }
    let powered: Vec<T> = spatial.iter().map(|n| n.powf(q)).collect();
    trapezoid(times, &powered).powf(T::one() / q)
}

fn snapshot_times<T: Real>(snapshots: &[SystemState<T>]) -> Vec<T> {
    snapshots.iter().map(|s| s.time).collect()
}

/// `(‖u‖_{L^q_t L^r_x}, ‖v‖_{L^q_t L^r_x})` over the stored snapshots.
pub fn strichartz_norms<T: Real>(snapshots: &[SystemState<T>], pair: StrichartzPair<T>) -> (T, T) {
    let times = snapshot_times(snapshots);
    let nu: Vec<T> = snapshots
        .iter()
        .map(|s| lebesgue_norm(&s.u, s.grid(), pair.r))
        .collect();
    let nv: Vec<T> = snapshots
        .iter()
        .map(|s| lebesgue_norm(&s.v, s.grid(), pair.r))
        .collect();
    (time_lebesgue(&times, &nu, pair.q), time_lebesgue(&times, &nv, pair.q))
}

/// Sum of the `u` and `v` Strichartz norms of a trajectory with snapshots.
pub fn strichartz_norm<T: Real>(traj: &TrajectoryRecord<T>, pair: StrichartzPair<T>) -> T {
    let (nu, nv) = strichartz_norms(&traj.snapshots, pair);
    nu + nv
}

/// Resolution-space norm: for each displacement the max of its Strichartz
/// norm and its sup-in-time `H^1_0` norm, plus the sup-in-time `L^2` norm of
/// the velocity pair.
pub fn resolution_norm<T: Real>(snapshots: &[SystemState<T>], pair: StrichartzPair<T>) -> T {
    let (su, sv) = strichartz_norms(snapshots, pair);
    let two = T::lit(2.0);
    let mut hu = T::zero();
    let mut hv = T::zero();
    let mut vel = T::zero();
    for s in snapshots {
        let g = s.grid();
        hu = hu.max((two * gradient_energy(&s.u, g)).sqrt());
        hv = hv.max((two * gradient_energy(&s.v, g)).sqrt());
        vel = vel.max((l2_squared(&s.ut, g) + l2_squared(&s.vt, g)).sqrt());
    }
    su.max(hu) + sv.max(hv) + vel
}

/// `‖(f1(u), f2(v))‖_{L^1_t L^2_x}` summed over the two components.
pub fn source_norm<T: Real>(
    snapshots: &[SystemState<T>],
    pair: &super::NonlinearityPair<T>,
) -> T {
    let times = snapshot_times(snapshots);
    let n1: Vec<T> = snapshots
        .iter()
        .map(|s| {
            let f: Vec<T> = s.u.iter().map(|x| pair.f1.eval(*x)).collect();
            l2_squared(&f, s.grid()).sqrt()
        })
        .collect();
    let n2: Vec<T> = snapshots
        .iter()
        .map(|s| {
            let f: Vec<T> = s.v.iter().map(|x| pair.f2.eval(*x)).collect();
            l2_squared(&f, s.grid()).sqrt()
        })
        .collect();
    trapezoid(&times, &n1) + trapezoid(&times, &n2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridDomain;
    use num_rational::Rational64;
    use proptest::prelude::*;

    #[test]
    fn p_four_gives_eight_eight() {
        let pair = admissible_pair(4.0f64).unwrap();
        assert_eq!(pair, StrichartzPair { q: 8.0, r: 8.0 });
        assert_eq!(1.0 / 8.0 + 3.0 / 8.0, 0.5);
        let exact = admissible_pair(Rational64::from_integer(4)).unwrap();
        assert_eq!(exact.q, Rational64::from_integer(8));
        assert_eq!(exact.admissibility_defect(), Rational64::from_integer(0));
    }

    #[test]
    fn limit_towards_five() {
        let pair = admissible_pair(5.0f64 - 1e-9).unwrap();
        assert!((pair.q - 5.0).abs() < 1e-7);
        assert!((pair.r - 10.0).abs() < 1e-7);
    }

    #[test]
    fn out_of_range_exponents() {
        for p in [3.0, 5.0, 1.0, 6.0, f64::NAN] {
            assert!(matches!(admissible_pair(p), Err(Error::InvalidExponent(_))));
        }
        assert!(admissible_pair(Rational64::new(7, 2)).is_ok());
        assert!(admissible_pair(Rational64::from_integer(3)).is_err());
    }

    #[test]
    fn constant_field_norm() {
        let g = GridDomain::<f64>::unit_square(9).unwrap();
        let ones = vec![1.0; g.len()];
        let mut snaps = Vec::new();
        for k in 0..=10 {
            let mut s = SystemState::zeros(&g);
            s.u = ones.clone();
            s.time = k as f64 / 10.0;
            snaps.push(s);
        }
        let pair = StrichartzPair { q: 8.0, r: 8.0 };
        let (nu, nv) = strichartz_norms(&snaps, pair);
        assert!((nu - 1.0).abs() < 1e-14);
        assert_eq!(nv, 0.0);
        assert_eq!(strichartz_norms(&snaps[..1], pair), (0.0, 0.0));
    }

    #[test]
    fn contraction_quantity_theta() {
        assert_eq!(source_bound_exponent(3.0), 1.0);
        assert!((contraction_quantity(0.25f64, 2.0, 3.0) - (0.25 + 2.0 * 0.25 * 4.0)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn sampled_pairs_are_admissible(p in 3.0f64..5.0) {
            prop_assume!(p > 3.0 + 1e-9);
            let pair = admissible_pair(p).unwrap();
            prop_assert!(pair.admissibility_defect().abs() < 1e-12);
            prop_assert!(pair.q >= 5.0 - 1e-12);
        }

        #[test]
        fn rational_pairs_are_exact(num in 61i64..99) {
            let p = Rational64::new(num, 20);
            let pair = admissible_pair(p).unwrap();
            prop_assert_eq!(pair.admissibility_defect(), Rational64::from_integer(0));
        }
    }
}
