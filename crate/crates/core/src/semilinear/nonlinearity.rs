//! Power-law nonlinearities `f(s)` and the hypothesis checks they must pass:
//! `f(0) = 0`, `s f(s) >= 0`, `|f(s)| <= C (1 + |s|)^p`, `|f'(s)| <= C (1 + |s|)^(p-1)`.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity<T> {
    /// `f = 0`.
    Zero,
    /// `f(s) = s^3`.
    Cubic,
    /// `f(s) = s |s|^(p-1)`.
    Power { p: T },
    /// `-f` for the wrapped `f`; breaks `s f(s) >= 0` and is only used as a
    /// blow-up positive control.
    Focusing { inner: Box<Nonlinearity<T>> },
}

/// A sampled hypothesis failure.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisViolation {
    pub condition: &'static str,
    pub at: f64,
}

impl<T: Real> Nonlinearity<T> {
    pub fn power(p: T) -> Self {
        Nonlinearity::Power { p }
    }

    pub fn focusing(inner: Nonlinearity<T>) -> Self {
        Nonlinearity::Focusing {
            inner: Box::new(inner),
        }
    }

    #[inline]
    pub fn eval(&self, s: T) -> T {
        match self {
            Nonlinearity::Zero => T::zero(),
            Nonlinearity::Cubic => s * s * s,
            Nonlinearity::Power { p } => s * s.abs().powf(*p - T::one()),
            Nonlinearity::Focusing { inner } => -inner.eval(s),
        }
    }

    pub fn derivative(&self, s: T) -> T {
        match self {
            Nonlinearity::Zero => T::zero(),
            Nonlinearity::Cubic => T::lit(3.0) * s * s,
            Nonlinearity::Power { p } => *p * s.abs().powf(*p - T::one()),
            Nonlinearity::Focusing { inner } => -inner.derivative(s),
        }
    }

    /// `F(s) = int_0^s f`.
    #[inline]
    pub fn antiderivative(&self, s: T) -> T {
        match self {
            Nonlinearity::Zero => T::zero(),
            Nonlinearity::Cubic => {
                let s2 = s * s;
                s2 * s2 / T::lit(4.0)
            }
            Nonlinearity::Power { p } => s.abs().powf(*p + T::one()) / (*p + T::one()),
            Nonlinearity::Focusing { inner } => -inner.antiderivative(s),
        }
    }

    pub fn growth_exponent(&self) -> T {
        match self {
            Nonlinearity::Zero => T::one(),
            Nonlinearity::Cubic => T::lit(3.0),
            Nonlinearity::Power { p } => *p,
            Nonlinearity::Focusing { inner } => inner.growth_exponent(),
        }
    }

    /// Constant `C` in the growth bounds (covers both `f` and `f'`).
    pub fn growth_constant(&self) -> T {
        match self {
            Nonlinearity::Zero => T::one(),
            Nonlinearity::Cubic => T::lit(3.0),
            Nonlinearity::Power { p } => p.max(T::one()),
            Nonlinearity::Focusing { inner } => inner.growth_constant(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }

    /// Checks the hypotheses at `n` evenly spaced points of `[-range, range]`.
    pub fn check_hypotheses(&self, range: T, n: usize) -> Result<(), HypothesisViolation> {
        let p = self.growth_exponent();
        if !(p >= T::one() && p < T::lit(5.0)) {
            return Err(HypothesisViolation {
                condition: "1 <= p < 5",
                at: p.to_f64_lossy(),
            });
        }
        if self.eval(T::zero()) != T::zero() {
            return Err(HypothesisViolation {
                condition: "f(0) = 0",
                at: 0.0,
            });
        }
        let c = self.growth_constant();
        let slack = T::one() + T::lit(1e-12);
        for k in 0..n {
            let s = -range + range * T::lit(2.0) * T::from_count(k) / T::from_count(n.max(2) - 1);
            let fail = |condition| {
                Err(HypothesisViolation {
                    condition,
                    at: s.to_f64_lossy(),
                })
            };
            let f = self.eval(s);
            let base = T::one() + s.abs();
            if s * f < T::zero() {
                return fail("s f(s) >= 0");
            }
            if f.abs() > c * base.powf(p) * slack {
                return fail("|f(s)| <= C (1 + |s|)^p");
            }
            if self.derivative(s).abs() > c * base.powf(p - T::one()) * slack {
                return fail("|f'(s)| <= C (1 + |s|)^(p-1)");
            }
            if self.antiderivative(s) < T::zero() {
                return fail("F(s) >= 0");
            }
        }
        Ok(())
    }
}

/// The pair `(f1, f2)` acting on `u` and `v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityPair<T> {
    pub f1: Nonlinearity<T>,
    pub f2: Nonlinearity<T>,
}

impl<T: Real> NonlinearityPair<T> {
    pub fn new(f1: Nonlinearity<T>, f2: Nonlinearity<T>) -> Self {
        Self { f1, f2 }
    }

    pub fn same(f: Nonlinearity<T>) -> Self {
        Self {
            f1: f.clone(),
            f2: f,
        }
    }

    pub fn zero() -> Self {
        Self::same(Nonlinearity::Zero)
    }

    pub fn cubic() -> Self {
        Self::same(Nonlinearity::Cubic)
    }

    pub fn is_zero(&self) -> bool {
        self.f1.is_zero() && self.f2.is_zero()
    }

    /// `G(u, v) = F1(u) + F2(v)`.
    #[inline]
    pub fn potential(&self, u: T, v: T) -> T {
        self.f1.antiderivative(u) + self.f2.antiderivative(v)
    }

    pub fn growth_exponent(&self) -> T {
        self.f1.growth_exponent().max(self.f2.growth_exponent())
    }

    pub fn check_hypotheses(&self, range: T, n: usize) -> Result<(), HypothesisViolation> {
        self.f1.check_hypotheses(range, n)?;
        self.f2.check_hypotheses(range, n)
    }
}
