//! Spatial domain: uniform vertex-centred grids on intervals and rectangles,
//! region geometry and the sampled coefficient fields `a` and `b`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform vertex-centred grid on `[0, Lx]` or `[0, Lx] x [0, Ly]` with
/// homogeneous Dirichlet boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain<T> {
    dim: usize,
    extents: [T; 2],
    nodes: [usize; 2],
    spacing: [T; 2],
}

impl<T: Real> GridDomain<T> {
    pub fn new(extents: &[T], nodes: &[usize]) -> Result<Self> {
        let dim = extents.len();
        if !(1..=2).contains(&dim) || nodes.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "grid needs 1 or 2 axes with matching node counts, got {} extents and {} counts",
                extents.len(),
                nodes.len()
            )));
        }
        let mut ext = [T::zero(); 2];
        let mut n = [1usize; 2];
        let mut h = [T::zero(); 2];
        for axis in 0..dim {
            if !(extents[axis] > T::zero()) || !extents[axis].is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "extent along axis {axis} must be positive"
                )));
            }
            if nodes[axis] < 3 {
                return Err(Error::InvalidArgument(format!(
                    "axis {axis} needs at least 3 nodes, got {}",
                    nodes[axis]
                )));
            }
            ext[axis] = extents[axis];
            n[axis] = nodes[axis];
            h[axis] = extents[axis] / T::from_count(nodes[axis] - 1);
        }
        Ok(Self {
            dim,
            extents: ext,
            nodes: n,
            spacing: h,
        })
    }

    pub fn line(length: T, nodes: usize) -> Result<Self> {
        Self::new(&[length], &[nodes])
    }

    pub fn rectangle(lx: T, ly: T, nx: usize, ny: usize) -> Result<Self> {
        Self::new(&[lx, ly], &[nx, ny])
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::rectangle(T::one(), T::one(), n, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[T] {
        &self.extents[..self.dim]
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing[..self.dim]
    }

    /// Nodes along x (fastest-varying index).
    pub fn nx(&self) -> usize {
        self.nodes[0]
    }

    /// Nodes along y; 1 for a line.
    pub fn ny(&self) -> usize {
        self.nodes[1]
    }

    pub fn len(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nodes[0] * j
    }

    #[inline]
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nodes[0], idx / self.nodes[0])
    }

    /// Node coordinate along one axis, computed as `L * i / (n - 1)`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> T {
        self.extents[axis] * T::from_count(i) / T::from_count(self.nodes[axis] - 1)
    }

    /// Physical position of a node; the second entry is 0 on a line.
    pub fn position(&self, idx: usize) -> [T; 2] {
        let (i, j) = self.ij(idx);
        let y = if self.dim == 2 {
            self.coord(1, j)
        } else {
            T::zero()
        };
        [self.coord(0, i), y]
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        let on_x = i == 0 || i + 1 == self.nodes[0];
        let on_y = self.dim == 2 && (j == 0 || j + 1 == self.nodes[1]);
        on_x || on_y
    }

    pub fn boundary_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|k| self.is_boundary(k)).collect()
    }

    /// Trapezoid quadrature weight of a node (product rule in 2D).
    pub fn weight(&self, idx: usize) -> T {
        let (i, j) = self.ij(idx);
        let half = T::lit(0.5);
        let mut w = self.spacing[0];
        if i == 0 || i + 1 == self.nodes[0] {
            w *= half;
        }
        if self.dim == 2 {
            w *= self.spacing[1];
            if j == 0 || j + 1 == self.nodes[1] {
                w *= half;
            }
        }
        w
    }

    pub fn weights(&self) -> Vec<T> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    /// Measure of a single interior cell (`h` or `hx * hy`).
    pub fn cell_measure(&self) -> T {
        self.spacing().iter().fold(T::one(), |acc, &h| acc * h)
    }

    /// Largest stable leapfrog step `1 / sqrt(sum 1/h_i^2)`; equals `h / sqrt(d)`
    /// on isotropic grids.
    pub fn cfl_unit(&self) -> T {
        let s: T = self.spacing().iter().map(|&h| T::one() / (h * h)).sum();
        T::one() / s.sqrt()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.nodes == other.nodes
            && self
                .extents()
                .iter()
                .zip(other.extents())
                .all(|(a, b)| (*a - *b).abs() <= T::epsilon() * a.abs().max(T::one()))
    }

    /// Samples a function of position at every node.
    pub fn sample(&self, f: impl Fn([T; 2]) -> T) -> Vec<T> {
        (0..self.len()).map(|k| f(self.position(k))).collect()
    }

    /// Same as [`sample`](Self::sample) but forces boundary nodes to zero.
    pub fn sample_dirichlet(&self, f: impl Fn([T; 2]) -> T) -> Vec<T> {
        (0..self.len())
            .map(|k| {
                if self.is_boundary(k) {
                    T::zero()
                } else {
                    f(self.position(k))
                }
            })
            .collect()
    }

    /// Bilinear (linear on a line) interpolation of nodal values.
    pub fn interpolate(&self, values: &[T], p: [T; 2]) -> T {
        let locate = |axis: usize, x: T| -> (usize, T) {
            let n = self.nodes[axis];
            let h = self.spacing[axis];
            let s = (x / h).max(T::zero());
            let mut i = s.floor().to_usize().unwrap_or(0);
            if i >= n - 1 {
                i = n - 2;
            }
            let frac = (s - T::from_count(i)).max(T::zero()).min(T::one());
            (i, frac)
        };
        let (i, fx) = locate(0, p[0]);
        if self.dim == 1 {
            return values[i] * (T::one() - fx) + values[i + 1] * fx;
        }
        let (j, fy) = locate(1, p[1]);
        let v00 = values[self.index(i, j)];
        let v10 = values[self.index(i + 1, j)];
        let v01 = values[self.index(i, j + 1)];
        let v11 = values[self.index(i + 1, j + 1)];
        let one = T::one();
        v00 * (one - fx) * (one - fy) + v10 * fx * (one - fy) + v01 * (one - fx) * fy + v11 * fx * fy
    }
}

/// Side of the rectangle a boundary collar is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// `x = 0`
    Left,
    /// `x = Lx`
    Right,
    /// `y = 0`
    Bottom,
    /// `y = Ly`
    Top,
}

/// Axis-aligned box; bounds may be infinite. Entries past the grid dimension
/// are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisBox<T> {
    pub lo: [T; 2],
    pub hi: [T; 2],
}

impl<T: Real> AxisBox<T> {
    pub fn new(lo: [T; 2], hi: [T; 2]) -> Self {
        Self { lo, hi }
    }

    /// Euclidean distance from `p` to the closed box over the first `dim` axes.
    pub fn distance(&self, p: [T; 2], dim: usize) -> T {
        let mut s = T::zero();
        #[allow(clippy::needless_range_loop)]
        for axis in 0..dim {
            let d = (self.lo[axis] - p[axis])
                .max(p[axis] - self.hi[axis])
                .max(T::zero());
            s += d * d;
        }
        s.sqrt()
    }

    /// Strict (open-box) membership.
    pub fn contains_open(&self, p: [T; 2], dim: usize) -> bool {
        (0..dim).all(|axis| self.lo[axis] < p[axis] && p[axis] < self.hi[axis])
    }
}

/// Region geometry, as read from scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionShape<T> {
    /// The whole domain.
    Everywhere,
    /// A single box `[lo, hi]`.
    Box { lo: Vec<T>, hi: Vec<T> },
    /// Union of boxes.
    Boxes { boxes: Vec<BoxBounds<T>> },
    /// Strips of the given width along the listed sides.
    Collar { sides: Vec<Side>, width: T },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds<T> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
}

/// A region plus the width of the smooth ramp around it (0 = sharp indicator).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct RegionSpec<T> {
    #[serde(flatten)]
    pub shape: RegionShape<T>,
    #[serde(default = "T::zero")]
    pub mollification: T,
}

impl<T: Real> RegionSpec<T> {
    pub fn sharp(shape: RegionShape<T>) -> Self {
        Self {
            shape,
            mollification: T::zero(),
        }
    }

    pub fn mollified(shape: RegionShape<T>, width: T) -> Self {
        Self {
            shape,
            mollification: width,
        }
    }

    pub fn interval(lo: T, hi: T) -> Self {
        Self::sharp(RegionShape::Box {
            lo: vec![lo],
            hi: vec![hi],
        })
    }

    pub fn rect(lo: [T; 2], hi: [T; 2]) -> Self {
        Self::sharp(RegionShape::Box {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        })
    }

    pub fn collar(sides: &[Side], width: T) -> Self {
        Self::sharp(RegionShape::Collar {
            sides: sides.to_vec(),
            width,
        })
    }

    pub fn everywhere() -> Self {
        Self::sharp(RegionShape::Everywhere)
    }

    pub fn with_mollification(mut self, width: T) -> Self {
        self.mollification = width;
        self
    }

    /// Resolves the shape into axis-aligned boxes for the given grid.
    pub fn boxes(&self, grid: &GridDomain<T>) -> Result<Vec<AxisBox<T>>> {
        let dim = grid.dim();
        let inf = T::infinity();
        let to_box = |lo: &[T], hi: &[T]| -> Result<AxisBox<T>> {
            if lo.len() != dim || hi.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "box bounds must have {dim} entries"
                )));
            }
            let mut b = AxisBox::new([-inf; 2], [inf; 2]);
            for axis in 0..dim {
                if !(lo[axis] < hi[axis]) {
                    return Err(Error::InvalidArgument(format!(
                        "box lower bound must be below upper bound on axis {axis}"
                    )));
                }
                b.lo[axis] = lo[axis];
                b.hi[axis] = hi[axis];
            }
            Ok(b)
        };
        match &self.shape {
            RegionShape::Everywhere => Ok(vec![AxisBox::new([-inf; 2], [inf; 2])]),
            RegionShape::Box { lo, hi } => Ok(vec![to_box(lo, hi)?]),
            RegionShape::Boxes { boxes } => boxes.iter().map(|b| to_box(&b.lo, &b.hi)).collect(),
            RegionShape::Collar { sides, width } => {
                if !(*width > T::zero()) {
                    return Err(Error::InvalidArgument("collar width must be positive".into()));
                }
                let ext = grid.extents();
                sides
                    .iter()
                    .map(|side| {
                        let mut b = AxisBox::new([-inf; 2], [inf; 2]);
                        match side {
                            Side::Left => b.hi[0] = *width,
                            Side::Right => b.lo[0] = ext[0] - *width,
                            Side::Bottom | Side::Top if dim < 2 => {
                                return Err(Error::InvalidArgument(
                                    "top/bottom collars need a 2D grid".into(),
                                ))
                            }
                            Side::Bottom => b.hi[1] = *width,
                            Side::Top => b.lo[1] = ext[1] - *width,
                        }
                        Ok(b)
                    })
                    .collect()
            }
        }
    }

    /// Distance from a point to the (closed) core region.
    pub fn distance(&self, grid: &GridDomain<T>, p: [T; 2]) -> Result<T> {
        let boxes = self.boxes(grid)?;
        Ok(boxes
            .iter()
            .map(|b| b.distance(p, grid.dim()))
            .fold(T::infinity(), T::min))
    }
}

/// Ramp used by mollified regions: 1 on the core, `1 - smoothstep(d / w)` on
/// the collar of width `w`, 0 beyond.
pub fn ramp_profile<T: Real>(distance: T, width: T) -> T {
    let tol = T::lit(1e-12);
    if width <= T::zero() {
        return if distance <= tol { T::one() } else { T::zero() };
    }
    let t = distance / width;
    if t <= T::zero() {
        T::one()
    } else if t >= T::one() {
        T::zero()
    } else {
        T::one() - t * t * (T::lit(3.0) - T::lit(2.0) * t)
    }
}

/// Nonnegative nodal coefficient (`a` or `b`) with its lower bound on the
/// active set.
#[derive(Clone, Debug)]
pub struct CoefficientField<T> {
    grid: GridDomain<T>,
    values: Vec<T>,
    floor: T,
    active: Vec<usize>,
}

impl<T: Real> CoefficientField<T> {
    /// Wraps raw nodal values; they must be nonnegative.
    pub fn from_values(grid: &GridDomain<T>, values: Vec<T>, floor: T) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::InvalidArgument("coefficient values must be nonnegative".into()));
        }
        let active = values
            .iter()
            .enumerate()
            .filter(|(_, v)| floor > T::zero() && **v >= floor)
            .map(|(k, _)| k)
            .collect();
        Ok(Self {
            grid: grid.clone(),
            values,
            floor,
            active,
        })
    }

    /// The identically zero coefficient.
    pub fn zero(grid: &GridDomain<T>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![T::zero(); grid.len()],
            floor: T::zero(),
            active: Vec::new(),
        }
    }

    pub fn constant(grid: &GridDomain<T>, value: T) -> Self {
        Self::from_values(grid, vec![value; grid.len()], value)
            .expect("constant coefficient must be nonnegative")
    }

    pub fn grid(&self) -> &GridDomain<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn floor(&self) -> T {
        self.floor
    }

    /// Node indices where the value reaches the floor.
    pub fn active_region(&self) -> &[usize] {
        &self.active
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn at(&self, p: [T; 2]) -> T {
        self.grid.interpolate(&self.values, p)
    }
}

/// Samples `amplitude` times the mollified indicator of `spec` on `grid`.
pub fn build_coefficient<T: Real>(
    spec: &RegionSpec<T>,
    grid: &GridDomain<T>,
    amplitude: T,
    floor: T,
) -> Result<CoefficientField<T>> {
    if !(floor > T::zero()) || !(amplitude >= floor) {
        return Err(Error::InvalidArgument(format!(
            "need amplitude >= floor > 0, got amplitude {amplitude} and floor {floor}"
        )));
    }
    if !(spec.mollification >= T::zero()) {
        return Err(Error::InvalidArgument("mollification width must be >= 0".into()));
    }
    let boxes = spec.boxes(grid)?;
    let values: Vec<T> = (0..grid.len())
        .map(|k| {
            let p = grid.position(k);
            let d = boxes
                .iter()
                .map(|b| b.distance(p, grid.dim()))
                .fold(T::infinity(), T::min);
            amplitude * ramp_profile(d, spec.mollification)
        })
        .collect();
    if values.iter().all(|v| *v == T::zero()) {
        return Err(Error::DegenerateRegion);
    }
    CoefficientField::from_values(grid, values, floor)
}

/// `supp(b)` contained in `{a >= a.floor}`, checked node by node.
pub fn check_containment<T: Real>(
    b_field: &CoefficientField<T>,
    a_field: &CoefficientField<T>,
) -> Result<bool> {
    if !b_field.grid().same_shape(a_field.grid()) {
        return Err(Error::GridMismatch(
            "coupling and damping fields live on different grids".into(),
        ));
    }
    let floor = a_field.floor();
    Ok(b_field
        .values()
        .iter()
        .zip(a_field.values())
        .all(|(b, a)| *b <= T::zero() || (floor > T::zero() && *a >= floor)))
}
