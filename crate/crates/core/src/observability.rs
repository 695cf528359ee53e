//! The 2×2 transport systems carried along a ray, their observation
//! functional and Gramian, and the rotation-resonance criterion.
//!
//! Along billiard rays the criterion is applied as a heuristic diagnostic:
//! its derivation assumes a boundaryless manifold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{distance_to_lattice, Real};

/// Function of arc length sampled on the uniform grid `s_k = k ds`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledTrace<T> {
    ds: T,
    values: Vec<T>,
}

impl<T: Real> SampledTrace<T> {
    pub fn new(ds: T, values: Vec<T>) -> Result<Self> {
        if !(ds > T::zero()) || !ds.is_finite() {
            return Err(Error::InvalidArgument("trace spacing must be positive".into()));
        }
        if values.len() < 2 {
            return Err(Error::InvalidArgument("a trace needs at least two samples".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("trace samples must be finite".into()));
        }
        Ok(Self { ds, values })
    }

    /// Samples `f` at `n` equispaced points of `[0, horizon]`.
    pub fn from_fn(horizon: T, n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("a trace needs at least two samples".into()));
        }
        let ds = horizon / T::from_count(n - 1);
        Self::new(ds, (0..n).map(|k| f(T::from_count(k) * ds)).collect())
    }

    pub fn ds(&self) -> T {
        self.ds
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> T {
        self.ds * T::from_count(self.values.len() - 1)
    }

    pub fn s(&self, k: usize) -> T {
        T::from_count(k) * self.ds
    }

    /// Linear interpolation; clamps outside `[0, horizon]`.
    pub fn at(&self, s: T) -> T {
        let (k, frac) = self.locate(s);
        if k + 1 >= self.values.len() {
            return self.values[self.values.len() - 1];
        }
        self.values[k] * (T::one() - frac) + self.values[k + 1] * frac
    }

    fn locate(&self, s: T) -> (usize, T) {
        let x = (s / self.ds).max(T::zero());
        let last = self.values.len() - 1;
        let k = x.floor().to_usize().unwrap_or(last).min(last);
        if k == last {
            return (last, T::zero());
        }
        (k, (x - T::from_count(k)).min(T::one()))
    }

    /// Cumulative trapezoid integral at every sample.
    pub fn cumulative(&self) -> Vec<T> {
        let half = T::lit(0.5) * self.ds;
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = T::zero();
        out.push(acc);
        for w in self.values.windows(2) {
            acc += half * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }

    /// Trapezoid integral of the linear interpolant over `[0, s]`.
    pub fn integral_to(&self, s: T) -> T {
        let cum = self.cumulative();
        let (k, frac) = self.locate(s);
        if k + 1 >= self.values.len() {
            return cum[k];
        }
        let end = self.values[k] * (T::one() - frac) + self.values[k + 1] * frac;
        cum[k] + T::lit(0.5) * frac * self.ds * (self.values[k] + end)
    }

    pub fn integral(&self) -> T {
        *self.cumulative().last().expect("nonempty trace")
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<T> {
        let n = self.values.len();
        (0..n)
            .map(|k| {
                if k == 0 || k == n - 1 {
                    T::lit(0.5) * self.ds
                } else {
                    self.ds
                }
            })
            .collect()
    }
}

/// Damping and coupling traces `a(γ(s))`, `b(γ(s))` on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RayOdeSystem<T> {
    pub a: SampledTrace<T>,
    pub b: SampledTrace<T>,
}

impl<T: Real> RayOdeSystem<T> {
    pub fn new(a: SampledTrace<T>, b: SampledTrace<T>) -> Result<Self> {
        if a.len() != b.len() || a.ds() != b.ds() {
            return Err(Error::GridMismatch("a and b traces use different samplings".into()));
        }
        if a.values().iter().chain(b.values()).any(|v| *v < T::zero()) {
            return Err(Error::InvalidArgument("traces must be nonnegative".into()));
        }
        Ok(Self { a, b })
    }

    pub fn horizon(&self) -> T {
        self.a.horizon()
    }

    /// `B(s_k) = ½ ∫₀^{s_k} b` at every sample.
    pub fn rotation_angles(&self) -> Vec<T> {
        let half = T::lit(0.5);
        self.b.cumulative().into_iter().map(|c| half * c).collect()
    }

    /// Undamped solutions at every sample.
    pub fn undamped_path(&self, x0: [T; 2]) -> Vec<[T; 2]> {
        self.rotation_angles()
            .into_iter()
            .map(|angle| rotate(x0, angle))
            .collect()
    }

    /// Damped solutions at every sample.
    pub fn damped_path(&self, x0: [T; 2]) -> Vec<[T; 2]> {
        let mut out = Vec::with_capacity(self.a.len());
        let mut x = x0;
        out.push(x);
        for k in 0..self.a.len() - 1 {
            x = self.damped_interval(x, k, T::one());
            out.push(x);
        }
        out
    }

    /// RK4 across the fraction `frac` of sample interval `k`, sub-stepped so
    /// that each substep sees a rotation/decay increment of at most 0.005.
    fn damped_interval(&self, x0: [T; 2], k: usize, frac: T) -> [T; 2] {
        let (a0, a1) = (self.a.values[k], self.a.values[k + 1]);
        let (b0, b1) = (self.b.values[k], self.b.values[k + 1]);
        let span = frac * self.a.ds;
        let rate = T::lit(0.5) * (a0.max(a1) + b0.max(b1));
        let sub = (rate * span / T::lit(0.005)).ceil().to_usize().unwrap_or(1).max(1);
        let h = span / T::from_count(sub);
        let half = T::lit(0.5);
        let coef = |theta: T| -> (T, T) {
            (
                a0 + (a1 - a0) * theta,
                b0 + (b1 - b0) * theta,
            )
        };
        let rhs = |x: [T; 2], theta: T| -> [T; 2] {
            let (a, b) = coef(theta);
            [-half * a * x[0] - half * b * x[1], half * b * x[0]]
        };
        let mut x = x0;
        for j in 0..sub {
            let t0 = T::from_count(j) * h / self.a.ds;
            let tm = t0 + half * h / self.a.ds;
            let t1 = t0 + h / self.a.ds;
            let k1 = rhs(x, t0);
            let k2 = rhs([x[0] + half * h * k1[0], x[1] + half * h * k1[1]], tm);
            let k3 = rhs([x[0] + half * h * k2[0], x[1] + half * h * k2[1]], tm);
            let k4 = rhs([x[0] + h * k3[0], x[1] + h * k3[1]], t1);
            let sixth = h / T::lit(6.0);
            for c in 0..2 {
                x[c] += sixth * (k1[c] + T::lit(2.0) * (k2[c] + k3[c]) + k4[c]);
            }
        }
        x
    }
}

fn rotate<T: Real>(x0: [T; 2], angle: T) -> [T; 2] {
    let (s, c) = angle.sin_cos();
    [x0[0] * c - x0[1] * s, x0[0] * s + x0[1] * c]
}

/// `X(s) = e^{-B(s) M} X0` with `B(s) = ½ ∫₀ˢ b`.
pub fn propagate_undamped<T: Real>(x0: [T; 2], sys: &RayOdeSystem<T>, s: T) -> [T; 2] {
    rotate(x0, T::lit(0.5) * sys.b.integral_to(s))
}

/// Damped system integrated by RK4 with linearly interpolated coefficients.
pub fn propagate_damped<T: Real>(x0: [T; 2], sys: &RayOdeSystem<T>, s: T) -> [T; 2] {
    let (k, frac) = sys.a.locate(s);
    let mut x = x0;
    for j in 0..k {
        x = sys.damped_interval(x, j, T::one());
    }
    if k + 1 < sys.a.len() && frac > T::zero() {
        x = sys.damped_interval(x, k, frac);
    }
    x
}

/// `¼ ∫₀ᵀ |a x|²` along the undamped flow, by the trapezoid rule.
pub fn observation<T: Real>(x0: [T; 2], sys: &RayOdeSystem<T>) -> T {
    let path = sys.undamped_path(x0);
    let quarter = T::lit(0.25);
    sys.a
        .weights()
        .iter()
        .zip(sys.a.values())
        .zip(&path)
        .map(|((w, a), x)| quarter * *w * (*a * x[0]).powi(2))
        .sum()
}

/// Same functional along the damped flow.
pub fn damped_observation<T: Real>(x0: [T; 2], sys: &RayOdeSystem<T>) -> T {
    let path = sys.damped_path(x0);
    let quarter = T::lit(0.25);
    sys.a
        .weights()
        .iter()
        .zip(sys.a.values())
        .zip(&path)
        .map(|((w, a), x)| quarter * *w * (*a * x[0]).powi(2))
        .sum()
}

/// Pair of support samples certifying the criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Witness<T> {
    pub t1: T,
    pub t2: T,
    /// `∫_{t1}^{t2} b` reduced to `[0, 2π)`.
    pub integral_mod: T,
}

/// Outcome of the rotation-resonance criterion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriterionVerdict<T> {
    pub holds: bool,
    /// Largest distance to `2πZ` of `∫_{t1}^{t2} b` found over the support.
    pub gap: T,
    pub tolerance: T,
    pub witness: Option<Witness<T>>,
}

/// Gap band (in units of distance to `2πZ`) treated as undecidable.
pub const BORDERLINE_BAND: f64 = 1e-4;
/// Gaps at or below this are exact resonances.
pub const RESONANCE_FLOOR: f64 = 1e-12;
/// Relative eigenvalue threshold for calling a Gramian positive.
pub const POSITIVITY_THRESHOLD: f64 = 1e-14;

/// Searches for support samples `t1 < t2` with `∫_{t1}^{t2} b ∉ 2πZ`.
pub fn resonance_criterion<T: Real>(sys: &RayOdeSystem<T>) -> CriterionVerdict<T> {
    let cum = sys.b.cumulative();
    let total = *cum.last().expect("nonempty trace");
    let tolerance = T::lit(1e-6) * (T::one() + total);
    let support: Vec<usize> = (0..sys.a.len())
        .filter(|k| sys.a.values()[*k] != T::zero())
        .collect();
    let tau = T::TAU();
    let mut best: Option<(usize, usize, T)> = None;
    if let Some(&k0) = support.first() {
        for &j in &support[1..] {
            let gap = distance_to_lattice(cum[j] - cum[k0], tau);
            if best.is_none_or(|(_, _, g)| gap > g) {
                best = Some((k0, j, gap));
            }
        }
    }
    let gap = best.map_or(T::zero(), |b| b.2);
    let holds = gap > tolerance;
    let witness = best.filter(|_| holds).map(|(i, j, _)| {
        let d = cum[j] - cum[i];
        Witness {
            t1: sys.a.s(i),
            t2: sys.a.s(j),
            integral_mod: d - (d / tau).floor() * tau,
        }
    });
    CriterionVerdict {
        holds,
        gap,
        tolerance,
        witness,
    }
}

/// Gramian, its spectrum and the criterion verdict for one trace pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservabilityReport<T> {
    pub gramian: [[T; 2]; 2],
    pub min_eigenvalue: T,
    pub max_eigenvalue: T,
    pub horizon: T,
    pub criterion: CriterionVerdict<T>,
}

impl<T: Real> ObservabilityReport<T> {
    pub fn trace(&self) -> T {
        self.gramian[0][0] + self.gramian[1][1]
    }

    /// `λ_min > ε · trace(G)`.
    pub fn observable(&self) -> bool {
        self.min_eigenvalue > T::lit(POSITIVITY_THRESHOLD) * self.trace()
    }

    /// Gap within the undecidable band `(1e-12, 1e-4]`.
    pub fn borderline(&self) -> bool {
        let g = self.criterion.gap;
        g > T::lit(RESONANCE_FLOOR) && g <= T::lit(BORDERLINE_BAND)
    }
}

/// Assembles `G` with `obs(X0) = X0ᵀ G X0` from basis and polarization
/// evaluations; the small eigenvalue is evaluated as `¼ Σ w a² sin²(ψ + B)`
/// along the principal axis to keep relative accuracy near resonance.
pub fn gramian<T: Real>(sys: &RayOdeSystem<T>) -> ObservabilityReport<T> {
    let one = T::one();
    let zero = T::zero();
    let g11 = observation([one, zero], sys);
    let g22 = observation([zero, one], sys);
    let g12 = T::lit(0.25) * (observation([one, one], sys) - observation([one, -one], sys));
    let psi = T::lit(0.5) * (T::lit(2.0) * g12).atan2(g11 - g22);
    let angles = sys.rotation_angles();
    let quarter = T::lit(0.25);
    let mut lmin = zero;
    for ((w, a), b) in sys.a.weights().iter().zip(sys.a.values()).zip(&angles) {
        lmin += quarter * *w * *a * *a * (psi + *b).sin().powi(2);
    }
    let lmax = (g11 + g22 - lmin).max(lmin);
    ObservabilityReport {
        gramian: [[g11, g12], [g12, g22]],
        min_eigenvalue: lmin,
        max_eigenvalue: lmax,
        horizon: sys.horizon(),
        criterion: resonance_criterion(sys),
    }
}

/// `(λ_min, trace)` of the damped-flow Gramian; the determinant comes from
/// the Cauchy-Binet sum so that near-singular cases keep relative accuracy.
pub fn damped_gramian<T: Real>(sys: &RayOdeSystem<T>) -> (T, T) {
    let e1 = sys.damped_path([T::one(), T::zero()]);
    let e2 = sys.damped_path([T::zero(), T::one()]);
    let quarter = T::lit(0.25);
    let items: Vec<(T, T, T)> = sys
        .a
        .weights()
        .iter()
        .zip(sys.a.values())
        .zip(e1.iter().zip(&e2))
        .filter(|((_, a), _)| **a != T::zero())
        .map(|((w, a), (p, q))| (quarter * *w * *a * *a, p[0], q[0]))
        .collect();
    let mut g11 = T::zero();
    let mut g22 = T::zero();
    let mut det = T::zero();
    for (j, &(mj, pj, qj)) in items.iter().enumerate() {
        g11 += mj * pj * pj;
        g22 += mj * qj * qj;
        for &(mk, pk, qk) in &items[j + 1..] {
            let cross = pj * qk - qj * pk;
            det += mj * mk * cross * cross;
        }
    }
    let tr = g11 + g22;
    if tr == T::zero() {
        return (T::zero(), T::zero());
    }
    let disc = (tr * tr - T::lit(4.0) * det).max(T::zero()).sqrt();
    let lmax = T::lit(0.5) * (tr + disc);
    (det / lmax, tr)
}

/// Trace family used by the random equivalence suite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFamily {
    Generic,
    ConstantDamping,
    NoDamping,
    NoCoupling,
    Resonant,
    NearResonant,
}

impl TraceFamily {
    const ALL: [TraceFamily; 6] = [
        TraceFamily::Generic,
        TraceFamily::ConstantDamping,
        TraceFamily::NoDamping,
        TraceFamily::NoCoupling,
        TraceFamily::Resonant,
        TraceFamily::NearResonant,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TraceFamily::Generic => "generic",
            TraceFamily::ConstantDamping => "constant_damping",
            TraceFamily::NoDamping => "no_damping",
            TraceFamily::NoCoupling => "no_coupling",
            TraceFamily::Resonant => "resonant",
            TraceFamily::NearResonant => "near_resonant",
        }
    }
}

/// One case of the equivalence suite.
#[derive(Clone, Debug)]
pub struct EquivalenceCase {
    pub id: usize,
    pub family: TraceFamily,
    pub system: RayOdeSystem<f64>,
    pub report: ObservabilityReport<f64>,
    /// Damped-flow positivity, evaluated on clearly decided cases only.
    pub damped_observable: Option<bool>,
}

impl EquivalenceCase {
    pub fn agrees(&self) -> bool {
        self.report.observable() == self.report.criterion.holds
    }
}

/// Aggregate of the equivalence suite.
#[derive(Clone, Debug)]
pub struct EquivalenceSummary {
    pub cases: Vec<EquivalenceCase>,
}

impl EquivalenceSummary {
    pub fn borderline(&self) -> usize {
        self.cases.iter().filter(|c| c.report.borderline()).count()
    }

    pub fn decided(&self) -> impl Iterator<Item = &EquivalenceCase> {
        self.cases.iter().filter(|c| !c.report.borderline())
    }

    pub fn agreements(&self) -> usize {
        self.decided().filter(|c| c.agrees()).count()
    }

    /// Non-borderline cases where positivity and the criterion differ.
    pub fn discordant(&self) -> Vec<&EquivalenceCase> {
        self.decided().filter(|c| !c.agrees()).collect()
    }

    /// Clear cases where the damped Gramian disagrees with the undamped one.
    pub fn damped_mismatches(&self) -> Vec<&EquivalenceCase> {
        self.cases
            .iter()
            .filter(|c| c.damped_observable.is_some_and(|d| d != c.report.observable()))
            .collect()
    }

    pub fn damped_checked(&self) -> usize {
        self.cases.iter().filter(|c| c.damped_observable.is_some()).count()
    }

    pub fn passed(&self) -> bool {
        self.discordant().is_empty() && self.damped_mismatches().is_empty()
    }
}

const SUITE_SAMPLES: usize = 801;
const DAMPED_CLEAR_GAP: f64 = 1e-2;
const DAMPED_THRESHOLD: f64 = 1e-12;

fn random_pieces(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64, lo: f64, hi: f64) -> Vec<f64> {
    let pieces = rng.gen_range(2..=6);
    let mut cuts: Vec<usize> = (0..pieces - 1).map(|_| rng.gen_range(1..n - 1)).collect();
    cuts.push(n);
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(n);
    for end in cuts {
        let value = if rng.gen_bool(zero_prob) {
            0.0
        } else {
            rng.gen_range(lo..hi)
        };
        while out.len() < end {
            out.push(value);
        }
    }
    out
}

/// Traces whose damping support splits into two blocks separated by a
/// coupling block of total integral `2πk + offset`, in units where `ds = 1`.
fn resonant_traces(rng: &mut ChaCha8Rng, n: usize, offset: f64) -> (Vec<f64>, Vec<f64>) {
    let i0 = if rng.gen_bool(0.5) { 0 } else { rng.gen_range(n / 20..n / 8) };
    let i1 = rng.gen_range(n / 4..n / 3);
    let i2 = rng.gen_range(2 * n / 3..3 * n / 4);
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for k in (i0..=i1).chain(i2..n) {
        a[k] = rng.gen_range(0.2..1.0);
    }
    // one zero sample separates the a and b blocks so their linear
    // interpolants never overlap
    for v in b.iter_mut().take(i0.saturating_sub(1)) {
        *v = rng.gen_range(0.0..2.0);
    }
    let shape = random_pieces(rng, i2 - i1 - 3, 0.0, 0.5, 2.0);
    b[i1 + 2..i2 - 1].copy_from_slice(&shape);
    let area: f64 = shape.iter().sum();
    let k = rng.gen_range(1..=3) as f64;
    let scale = (std::f64::consts::TAU * k + offset) / area;
    for v in &mut b[i1 + 2..i2 - 1] {
        *v *= scale;
    }
    (a, b)
}

fn generate_case(rng: &mut ChaCha8Rng, family: TraceFamily) -> Result<RayOdeSystem<f64>> {
    let n = SUITE_SAMPLES;
    let horizon = rng.gen_range(3.0..8.0);
    let ds = horizon / (n - 1) as f64;
    let (a, b) = match family {
        TraceFamily::Generic => (
            random_pieces(rng, n, 0.4, 0.2, 1.0),
            random_pieces(rng, n, 0.3, 0.0, 4.0),
        ),
        TraceFamily::ConstantDamping => (
            vec![rng.gen_range(0.2..1.0); n],
            random_pieces(rng, n, 0.3, 0.0, 4.0),
        ),
        TraceFamily::NoDamping => (vec![0.0; n], random_pieces(rng, n, 0.3, 0.0, 4.0)),
        TraceFamily::NoCoupling => (random_pieces(rng, n, 0.4, 0.2, 1.0), vec![0.0; n]),
        TraceFamily::Resonant | TraceFamily::NearResonant => {
            let offset = if family == TraceFamily::Resonant {
                0.0
            } else {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * 10f64.powf(rng.gen_range(-9.0..0.0))
            };
            let (a, mut b) = resonant_traces(rng, n, offset);
            // the block integral was scaled in units of ds = 1
            for v in &mut b {
                *v /= ds;
            }
            (a, b)
        }
    };
    RayOdeSystem::new(SampledTrace::new(ds, a)?, SampledTrace::new(ds, b)?)
}

/// Compares Gramian positivity with the criterion on seeded random
/// piecewise-constant traces.
pub fn criterion_equivalence_suite(n_random: usize, seed: u64) -> Result<EquivalenceSummary> {
    if n_random == 0 {
        return Err(Error::InvalidArgument("the suite needs at least one trace".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(n_random);
    for id in 0..n_random {
        let family = TraceFamily::ALL[id % TraceFamily::ALL.len()];
        let system = generate_case(&mut rng, family)?;
        let report = gramian(&system);
        let gap = report.criterion.gap;
        let clear = gap > DAMPED_CLEAR_GAP || gap <= RESONANCE_FLOOR;
        let damped_observable = clear.then(|| {
            let (lmin, tr) = damped_gramian(&system);
            lmin > DAMPED_THRESHOLD * tr
        });
        cases.push(EquivalenceCase {
            id,
            family,
            system,
            report,
            damped_observable,
        });
    }
    Ok(EquivalenceSummary { cases })
}

/// CSV header for observability rows.
pub const REPORT_HEADER: [&str; 8] = [
    "ray_id",
    "T",
    "lambda_min",
    "verdict",
    "witness_t1",
    "witness_t2",
    "int_b_mod_2pi",
    "flow",
];

/// `(ray id, T, λ_min, verdict, t1, t2, ∫b mod 2π, flow label)`.
pub fn report_row(id: usize, report: &ObservabilityReport<f64>, flow: &str) -> Vec<String> {
    let w = report.criterion.witness;
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.12e}"));
    vec![
        id.to_string(),
        format!("{:.12e}", report.horizon),
        format!("{:.12e}", report.min_eigenvalue),
        report.criterion.holds.to_string(),
        opt(w.map(|w| w.t1)),
        opt(w.map(|w| w.t2)),
        opt(w.map(|w| w.integral_mod)),
        flow.to_string(),
    ]
}
