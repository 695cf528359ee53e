//! Specular billiard rays in a rectangle and the geometric control check.

use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{AxisBox, CoefficientField, GridDomain, RegionSpec};
use crate::error::{Error, Result};
use crate::observability::SampledTrace;
use crate::scalar::Real;

/// Reflection off a side (or both sides at a corner).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayEvent<T> {
    pub point: [T; 2],
    pub time: T,
    /// Direction after the reflection.
    pub direction: [T; 2],
}

/// Unit-speed billiard trajectory on `[0, t_max]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RayPath<T> {
    pub origin: [T; 2],
    pub direction: [T; 2],
    pub events: Vec<RayEvent<T>>,
    pub t_max: T,
}

impl<T: Real> RayPath<T> {
    /// Start point, start time and direction of the segment containing `s`.
    fn segment(&self, s: T) -> ([T; 2], T, [T; 2]) {
        let k = self.events.partition_point(|e| e.time <= s);
        if k == 0 {
            (self.origin, T::zero(), self.direction)
        } else {
            let e = &self.events[k - 1];
            (e.point, e.time, e.direction)
        }
    }

    /// Position at arc length `s`.
    pub fn position(&self, s: T) -> [T; 2] {
        let (p, t0, d) = self.segment(s);
        [p[0] + (s - t0) * d[0], p[1] + (s - t0) * d[1]]
    }

    pub fn direction_at(&self, s: T) -> [T; 2] {
        self.segment(s).2
    }

    /// Position and direction at `t_max`.
    pub fn endpoint(&self) -> ([T; 2], [T; 2]) {
        (self.position(self.t_max), self.direction_at(self.t_max))
    }

    /// `(start point, start time, direction, end time)` of every segment.
    pub fn segments(&self) -> impl Iterator<Item = ([T; 2], T, [T; 2], T)> + '_ {
        let starts = std::iter::once((self.origin, T::zero(), self.direction))
            .chain(self.events.iter().map(|e| (e.point, e.time, e.direction)));
        let ends = self
            .events
            .iter()
            .map(|e| e.time)
            .chain(std::iter::once(self.t_max));
        starts.zip(ends).map(|((p, t, d), e)| (p, t, d, e))
    }
}

fn extents_2d<T: Real>(grid: &GridDomain<T>) -> Result<[T; 2]> {
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument("ray tracing needs a 2D grid".into()));
    }
    Ok([grid.extents()[0], grid.extents()[1]])
}

/// Exact event-driven tracing; both components flip at a corner.
pub fn trace_ray<T: Real>(x0: [T; 2], dir: [T; 2], t_max: T, grid: &GridDomain<T>) -> Result<RayPath<T>> {
    let ext = extents_2d(grid)?;
    if !(t_max > T::zero()) {
        return Err(Error::InvalidArgument("ray horizon must be positive".into()));
    }
    if !(0..2).all(|i| x0[i] > T::zero() && x0[i] < ext[i]) {
        return Err(Error::InvalidArgument("ray origin must be strictly interior".into()));
    }
    let norm = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    if !((norm - T::one()).abs() <= T::lit(1e-12)) {
        return Err(Error::InvalidArgument("ray direction must be a unit vector".into()));
    }
    let mut events = Vec::new();
    let mut p = x0;
    let mut d = dir;
    let mut t = T::zero();
    let corner_tol = T::lit(1e-12);
    loop {
        let wall = |i: usize| -> T {
            if d[i] > T::zero() {
                (ext[i] - p[i]) / d[i]
            } else if d[i] < T::zero() {
                -p[i] / d[i]
            } else {
                T::infinity()
            }
        };
        let w = [wall(0), wall(1)];
        let tau = w[0].min(w[1]);
        if t + tau >= t_max {
            break;
        }
        t += tau;
        for i in 0..2 {
            p[i] += tau * d[i];
        }
        for i in 0..2 {
            if w[i] - tau <= corner_tol * (T::one() + tau) {
                p[i] = if d[i] > T::zero() { ext[i] } else { T::zero() };
                d[i] = -d[i];
            }
        }
        events.push(RayEvent {
            point: p,
            time: t,
            direction: d,
        });
    }
    Ok(RayPath {
        origin: x0,
        direction: dir,
        events,
        t_max,
    })
}

/// First time the path enters the open union of `boxes`.
pub fn first_hit_time<T: Real>(path: &RayPath<T>, boxes: &[AxisBox<T>]) -> Option<T> {
    for (p, t0, d, t1) in path.segments() {
        let len = t1 - t0;
        let mut best: Option<T> = None;
        for b in boxes {
            if let Some(s) = segment_entry(p, d, len, b) {
                best = Some(best.map_or(s, |x: T| x.min(s)));
            }
        }
        if let Some(s) = best {
            return Some(t0 + s);
        }
    }
    None
}

/// Slab test of `p + s d`, `0 ≤ s ≤ len`, against an open box.
fn segment_entry<T: Real>(p: [T; 2], d: [T; 2], len: T, b: &AxisBox<T>) -> Option<T> {
    let mut enter = T::neg_infinity();
    let mut exit = T::infinity();
    for i in 0..2 {
        if d[i] == T::zero() {
            if !(b.lo[i] < p[i] && p[i] < b.hi[i]) {
                return None;
            }
        } else {
            let s1 = (b.lo[i] - p[i]) / d[i];
            let s2 = (b.hi[i] - p[i]) / d[i];
            enter = enter.max(s1.min(s2));
            exit = exit.min(s1.max(s2));
        }
    }
    let start = enter.max(T::zero());
    if start < exit && start <= len {
        Some(start)
    } else {
        None
    }
}

/// Axis of a bouncing orbit: `Vertical` moves along `y` at fixed `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitAxis {
    Vertical,
    Horizontal,
}

/// Axis-parallel bouncing orbit that never meets the region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrappedOrbit<T> {
    pub axis: OrbitAxis,
    /// Fixed coordinate of the orbit.
    pub offset: T,
    /// Uncovered interval of offsets the orbit was picked from.
    pub gap: (T, T),
}

/// One traced ray of the verification sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySample<T> {
    pub origin: [T; 2],
    pub direction: [T; 2],
    pub first_hit: Option<T>,
}

/// Outcome of the geometric control check.
#[derive(Clone, Debug, PartialEq)]
pub struct GccReport<T> {
    pub region: RegionSpec<T>,
    pub t_max: T,
    pub samples: Vec<RaySample<T>>,
    /// Largest first-hit time; absent if any sampled ray missed.
    pub t_unif: Option<T>,
    pub certificate: Option<TrappedOrbit<T>>,
}

impl<T: Real> GccReport<T> {
    /// Number of rays the verdict rests on.
    pub fn resolution(&self) -> usize {
        self.samples.len()
    }

    pub fn certified(&self) -> bool {
        self.t_unif.is_some() && self.certificate.is_none()
    }

    /// First sampled ray that never met the region.
    pub fn offending_ray(&self) -> Option<&RaySample<T>> {
        self.samples.iter().find(|s| s.first_hit.is_none())
    }

    pub fn summary(&self) -> String {
        match (&self.certificate, self.t_unif) {
            (Some(c), _) => format!(
                "GCC fails: {:?} bouncing orbit at offset {} never meets the region",
                c.axis, c.offset
            ),
            (None, Some(t)) => format!(
                "GCC certified at resolution {} with uniform time {}",
                self.resolution(),
                t
            ),
            (None, None) => format!(
                "GCC not certified: a sampled ray misses the region within T = {}",
                self.t_max
            ),
        }
    }
}

/// Largest open interval of `(0, len)` not covered by the given open
/// intervals, if it has positive length.
fn largest_gap<T: Real>(len: T, mut covered: Vec<(T, T)>) -> Option<(T, T)> {
    covered.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite interval bounds"));
    let mut best: Option<(T, T)> = None;
    let mut reach = T::zero();
    let consider = |lo: T, hi: T, best: &mut Option<(T, T)>| {
        if hi - lo > T::lit(1e-12) && best.is_none_or(|b| hi - lo > b.1 - b.0) {
            *best = Some((lo, hi));
        }
    };
    for (lo, hi) in covered {
        let lo = lo.max(T::zero());
        let hi = hi.min(len);
        if lo > reach {
            consider(reach, lo, &mut best);
        }
        reach = reach.max(hi);
    }
    if reach < len {
        consider(reach, len, &mut best);
    }
    best
}

/// Analytic check of the two axis-parallel bouncing families.
pub fn trapped_axis_orbit<T: Real>(boxes: &[AxisBox<T>], ext: [T; 2]) -> Option<TrappedOrbit<T>> {
    for (axis, fixed, moving) in [(OrbitAxis::Vertical, 0, 1), (OrbitAxis::Horizontal, 1, 0)] {
        let covered: Vec<(T, T)> = boxes
            .iter()
            .filter(|b| b.lo[moving] < ext[moving] && b.hi[moving] > T::zero())
            .map(|b| (b.lo[fixed], b.hi[fixed]))
            .collect();
        if let Some(gap) = largest_gap(ext[fixed], covered) {
            return Some(TrappedOrbit {
                axis,
                offset: T::lit(0.5) * (gap.0 + gap.1),
                gap,
            });
        }
    }
    None
}

/// Samples stratified positions × directions plus both axis-parallel
/// families and records first-hit times.
pub fn gcc_verify<T: Real>(
    region: &RegionSpec<T>,
    grid: &GridDomain<T>,
    n_samples: usize,
    t_max: T,
    seed: u64,
) -> Result<GccReport<T>> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("at least one ray is required".into()));
    }
    let ext = extents_2d(grid)?;
    let boxes = region.boxes(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = ((n_samples as f64).sqrt().ceil() as usize).max(1);
    let mut angle_strata: Vec<usize> = (0..n_samples).collect();
    angle_strata.shuffle(&mut rng);
    let jitter = |rng: &mut ChaCha8Rng| T::lit(0.01 + 0.98 * rng.gen::<f64>());
    let mut starts: Vec<([T; 2], [T; 2])> = Vec::with_capacity(n_samples + 4 * side + 2);
    for (k, stratum) in angle_strata.into_iter().enumerate() {
        let cell = k % (side * side);
        let (ci, cj) = (cell % side, cell / side);
        let x = (T::from_count(ci) + jitter(&mut rng)) * ext[0] / T::from_count(side);
        let y = (T::from_count(cj) + jitter(&mut rng)) * ext[1] / T::from_count(side);
        let theta = (T::from_count(stratum) + jitter(&mut rng)) * T::TAU() / T::from_count(n_samples);
        let (s, c) = theta.sin_cos();
        starts.push(([x, y], [c, s]));
    }
    let one = T::one();
    let zero = T::zero();
    for k in 0..side {
        let u = (T::from_count(k) + jitter(&mut rng)) / T::from_count(side);
        let v = jitter(&mut rng);
        let sign = if k % 2 == 0 { one } else { -one };
        starts.push(([u * ext[0], v * ext[1]], [zero, sign]));
        starts.push(([v * ext[0], u * ext[1]], [sign, zero]));
    }
    let certificate = trapped_axis_orbit(&boxes, ext);
    if let Some(c) = certificate {
        let half = T::lit(0.5);
        let start = match c.axis {
            OrbitAxis::Vertical => ([c.offset, half * ext[1]], [zero, one]),
            OrbitAxis::Horizontal => ([half * ext[0], c.offset], [one, zero]),
        };
        starts.push(start);
    }
    let mut samples = Vec::with_capacity(starts.len());
    for (origin, direction) in starts {
        let path = trace_ray(origin, direction, t_max, grid)?;
        samples.push(RaySample {
            origin,
            direction,
            first_hit: first_hit_time(&path, &boxes),
        });
    }
    let t_unif = samples
        .iter()
        .map(|s| s.first_hit)
        .try_fold(T::zero(), |acc, h| h.map(|t| acc.max(t)));
    Ok(GccReport {
        region: region.clone(),
        t_max,
        samples,
        t_unif,
        certificate,
    })
}

/// `s ↦ field(position(s))` at `n` equispaced arc lengths of `[0, t_max]`.
pub fn coefficient_trace<T: Real>(
    path: &RayPath<T>,
    field: &CoefficientField<T>,
    n: usize,
) -> Result<SampledTrace<T>> {
    let grid = field.grid();
    let ext = extents_2d(grid)?;
    let values = field.values();
    SampledTrace::from_fn(path.t_max, n, |s| {
        let p = path.position(s);
        let p = [p[0].max(T::zero()).min(ext[0]), p[1].max(T::zero()).min(ext[1])];
        grid.interpolate(values, p)
    })
}
