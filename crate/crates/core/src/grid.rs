//! Uniform Cartesian grids, activity masks and quadrature regions.
//!
//! Nodes are stored row-major with `x` fastest, then `y`, then `t` (t-major
//! for 3D). Disk domains are realized as masked rectangles. Cylinders are
//! periodic in `t` with period `nt * h`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum node count per axis.
pub const MIN_NODES: usize = 8;

/// Sub-samples per axis used to measure the covered fraction of a cell cut by
/// a circle or sphere.
const COVERAGE_SUBSAMPLES: usize = 16;
const COVERAGE_SUBSAMPLES_3D: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Topology {
    Rectangle,
    Disk { center: [f64; 2], radius: f64 },
    Cylinder,
}

impl Topology {
    pub fn code(&self) -> u8 {
        match self {
            Topology::Rectangle => 0,
            Topology::Disk { .. } => 1,
            Topology::Cylinder => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    Dirichlet,
    PeriodicT,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dims: [usize; 3],
    ndim: usize,
    spacing: f64,
    origin: [f64; 3],
    topology: Topology,
}

impl GridSpec {
    pub fn rectangle(nx: usize, ny: usize, spacing: f64, origin: [f64; 2]) -> Result<Self> {
        let grid = GridSpec {
            dims: [nx, ny, 1],
            ndim: 2,
            spacing,
            origin: [origin[0], origin[1], 0.0],
            topology: Topology::Rectangle,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Square `[-half_width, half_width]^2` with the node count rounded so that
    /// the spacing is exactly `spacing`.
    pub fn centered_square(half_width: f64, spacing: f64) -> Result<Self> {
        if !(half_width > 0.0) || !(spacing > 0.0) {
            return Err(Error::InvalidGrid("half width and spacing must be positive".into()));
        }
        let cells = (2.0 * half_width / spacing).round() as usize;
        let n = cells + 1;
        let start = -0.5 * cells as f64 * spacing;
        Self::rectangle(n, n, spacing, [start, start])
    }

    /// Disk `{|x - center| <= radius}` inside the smallest symmetric box with
    /// one node of margin.
    pub fn disk(center: [f64; 2], radius: f64, spacing: f64) -> Result<Self> {
        if !(radius > 0.0) || !(spacing > 0.0) {
            return Err(Error::InvalidGrid("radius and spacing must be positive".into()));
        }
        let half = (radius / spacing).ceil() as usize + 1;
        let n = 2 * half + 1;
        let start = [
            center[0] - half as f64 * spacing,
            center[1] - half as f64 * spacing,
        ];
        let grid = GridSpec {
            dims: [n, n, 1],
            ndim: 2,
            spacing,
            origin: [start[0], start[1], 0.0],
            topology: Topology::Disk { center, radius },
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Disk with an explicit node count per axis (`n` odd keeps the center on a node).
    pub fn disk_with_nodes(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes per axis")));
        }
        let spacing = 2.0 * radius / (n as f64 - 1.0);
        let start = [center[0] - radius, center[1] - radius];
        let grid = GridSpec {
            dims: [n, n, 1],
            ndim: 2,
            spacing,
            origin: [start[0], start[1], 0.0],
            topology: Topology::Disk { center, radius },
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Periodic-in-t cylinder over the in-plane rectangle. The period is
    /// `nt * spacing`.
    pub fn cylinder(nx: usize, ny: usize, nt: usize, spacing: f64, origin: [f64; 2]) -> Result<Self> {
        let grid = GridSpec {
            dims: [nx, ny, nt],
            ndim: 3,
            spacing,
            origin: [origin[0], origin[1], 0.0],
            topology: Topology::Cylinder,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Cylinder of period `2π` over `[-half_width, half_width]^2` with `nt`
    /// slices; the in-plane spacing equals `2π / nt`.
    pub fn helical_cylinder(half_width: f64, nt: usize) -> Result<Self> {
        let h = std::f64::consts::TAU / nt as f64;
        let cells = (2.0 * half_width / h).ceil() as usize;
        let n = cells + 1;
        let start = -0.5 * cells as f64 * h;
        Self::cylinder(n, n, nt, h, [start, start])
    }

    pub(crate) fn from_raw(
        dims: [usize; 3],
        ndim: usize,
        spacing: f64,
        origin: [f64; 3],
        topology: Topology,
    ) -> Result<Self> {
        let grid = GridSpec {
            dims,
            ndim,
            spacing,
            origin,
            topology,
        };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {}", self.spacing)));
        }
        for axis in 0..self.ndim {
            if self.dims[axis] < MIN_NODES {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {} nodes, need at least {MIN_NODES}",
                    self.dims[axis]
                )));
            }
        }
        match (self.ndim, self.topology) {
            (2, Topology::Cylinder) => Err(Error::InvalidGrid("a cylinder needs three axes".into())),
            (3, Topology::Rectangle) | (3, Topology::Disk { .. }) => {
                Err(Error::InvalidGrid("3D grids must be periodic cylinders".into()))
            }
            (2, Topology::Disk { radius, .. }) if !(radius > 0.0) => {
                Err(Error::InvalidGrid("disk radius must be positive".into()))
            }
            (2, _) | (3, _) => Ok(()),
            _ => Err(Error::InvalidGrid(format!("unsupported dimension {}", self.ndim))),
        }
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }
    pub fn nx(&self) -> usize {
        self.dims[0]
    }
    pub fn ny(&self) -> usize {
        self.dims[1]
    }
    pub fn nt(&self) -> usize {
        self.dims[2]
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }
    pub fn topology(&self) -> Topology {
        self.topology
    }
    pub fn boundary_kind(&self) -> BoundaryKind {
        match self.topology {
            Topology::Cylinder => BoundaryKind::PeriodicT,
            _ => BoundaryKind::Dirichlet,
        }
    }
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn slice_len(&self) -> usize {
        self.dims[0] * self.dims[1]
    }
    /// Cell volume `h^d`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing.powi(self.ndim as i32)
    }
    pub fn period(&self) -> Option<f64> {
        match self.topology {
            Topology::Cylinder => Some(self.dims[2] as f64 * self.spacing),
            _ => None,
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        (i, rest % self.dims[1], rest / self.dims[1])
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + i as f64 * self.spacing
    }
    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.origin[1] + j as f64 * self.spacing
    }
    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        self.origin[2] + k as f64 * self.spacing
    }

    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unravel(idx);
        [self.x(i), self.y(j), self.t(k)]
    }

    /// Neighbor along `axis` in direction `dir` (±1) inside the box; `t` wraps.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, dir: isize) -> Option<usize> {
        let (i, j, k) = self.unravel(idx);
        let c = [i, j, k];
        let n = self.dims[axis] as isize;
        let mut pos = c[axis] as isize + dir;
        if axis == 2 {
            if self.ndim < 3 {
                return None;
            }
            pos = pos.rem_euclid(n);
        } else if pos < 0 || pos >= n {
            return None;
        }
        let mut c2 = c;
        c2[axis] = pos as usize;
        Some(self.index(c2[0], c2[1], c2[2]))
    }

    /// Geometric activity: the disk mask for disk topologies, everything else active.
    pub fn is_active_xy(&self, x: f64, y: f64) -> bool {
        match self.topology {
            Topology::Disk { center, radius } => {
                let dx = x - center[0];
                let dy = y - center[1];
                (dx * dx + dy * dy).sqrt() <= radius * (1.0 + 1e-12)
            }
            _ => true,
        }
    }

    pub fn active_mask(&self) -> Vec<bool> {
        let mut mask = vec![true; self.len()];
        if let Topology::Disk { .. } = self.topology {
            for (idx, m) in mask.iter_mut().enumerate() {
                let p = self.coords(idx);
                *m = self.is_active_xy(p[0], p[1]);
            }
        }
        mask
    }

    /// Continuous index coordinates of an in-plane point.
    #[inline]
    pub fn fractional_index(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.origin[0]) / self.spacing,
            (y - self.origin[1]) / self.spacing,
        )
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.x(0), self.x(self.dims[0] - 1))
    }
    pub fn y_range(&self) -> (f64, f64) {
        (self.y(0), self.y(self.dims[1] - 1))
    }
}

/// An integration region. Disk, annulus and ball regions use covered-fraction
/// node weights so that the quadrature is smooth in the radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// All active nodes, trapezoid weights (half weight on mask boundary).
    All,
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    Rect { min: [f64; 2], max: [f64; 2] },
    /// 3D ball, for cylinder grids.
    Ball { center: [f64; 3], radius: f64 },
}

fn cell_disk_fraction(x: f64, y: f64, h: f64, c: [f64; 2], r: f64) -> f64 {
    let dx = (x - c[0]).abs();
    let dy = (y - c[1]).abs();
    let far = ((dx + 0.5 * h).powi(2) + (dy + 0.5 * h).powi(2)).sqrt();
    if far <= r {
        return 1.0;
    }
    let nx = (dx - 0.5 * h).max(0.0);
    let ny = (dy - 0.5 * h).max(0.0);
    if (nx * nx + ny * ny).sqrt() >= r {
        return 0.0;
    }
    let n = COVERAGE_SUBSAMPLES;
    let mut inside = 0usize;
    for a in 0..n {
        let sx = x - 0.5 * h + (a as f64 + 0.5) * h / n as f64 - c[0];
        for b in 0..n {
            let sy = y - 0.5 * h + (b as f64 + 0.5) * h / n as f64 - c[1];
            if sx * sx + sy * sy <= r * r {
                inside += 1;
            }
        }
    }
    inside as f64 / (n * n) as f64
}

fn cell_ball_fraction(p: [f64; 3], h: f64, c: [f64; 3], r: f64, period: Option<f64>) -> f64 {
    let mut d = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
    if let Some(l) = period {
        d[2] -= l * (d[2] / l).round();
    }
    let far: f64 = d.iter().map(|v| (v.abs() + 0.5 * h).powi(2)).sum::<f64>().sqrt();
    if far <= r {
        return 1.0;
    }
    let near: f64 = d
        .iter()
        .map(|v| (v.abs() - 0.5 * h).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt();
    if near >= r {
        return 0.0;
    }
    let n = COVERAGE_SUBSAMPLES_3D;
    let mut inside = 0usize;
    let off = |a: usize| -0.5 * h + (a as f64 + 0.5) * h / n as f64;
    for a in 0..n {
        for b in 0..n {
            for c3 in 0..n {
                let s = [d[0] + off(a), d[1] + off(b), d[2] + off(c3)];
                if s[0] * s[0] + s[1] * s[1] + s[2] * s[2] <= r * r {
                    inside += 1;
                }
            }
        }
    }
    inside as f64 / (n * n * n) as f64
}

/// Covered fraction of the cell around `(x, y)` for a 2D region.
pub fn planar_fraction(region: &Region, x: f64, y: f64, h: f64) -> f64 {
    match region {
        Region::All => 1.0,
        Region::Disk { center, radius } => cell_disk_fraction(x, y, h, *center, *radius),
        Region::Annulus { center, inner, outer } => {
            let o = cell_disk_fraction(x, y, h, *center, *outer);
            if o == 0.0 {
                0.0
            } else {
                (o - cell_disk_fraction(x, y, h, *center, *inner)).max(0.0)
            }
        }
        Region::Rect { min, max } => {
            let fx = ((x + 0.5 * h).min(max[0]) - (x - 0.5 * h).max(min[0])).max(0.0) / h;
            let fy = ((y + 0.5 * h).min(max[1]) - (y - 0.5 * h).max(min[1])).max(0.0) / h;
            fx * fy
        }
        Region::Ball { .. } => 0.0,
    }
}

/// Bounding box of a planar region (None for `All`).
pub fn planar_bounds(region: &Region) -> Option<([f64; 2], [f64; 2])> {
    match region {
        Region::All => None,
        Region::Disk { center, radius } | Region::Annulus { center, outer: radius, .. } => Some((
            [center[0] - radius, center[1] - radius],
            [center[0] + radius, center[1] + radius],
        )),
        Region::Rect { min, max } => Some((*min, *max)),
        Region::Ball { center, radius } => Some((
            [center[0] - radius, center[1] - radius],
            [center[0] + radius, center[1] + radius],
        )),
    }
}

/// Sparse quadrature weights `(node, weight)` for `region` on the active grid.
///
/// Fails if the region is empty or covers an inactive node.
pub fn region_weights(grid: &GridSpec, active: &[bool], region: &Region) -> Result<Vec<(usize, f64)>> {
    let h = grid.spacing();
    let cell = grid.cell_measure();
    let mut out = Vec::new();
    match region {
        Region::All => {
            let rect = matches!(grid.topology(), Topology::Rectangle | Topology::Cylinder);
            for idx in 0..grid.len() {
                if !active[idx] {
                    continue;
                }
                let mut w = cell;
                if rect {
                    let (i, j, _) = grid.unravel(idx);
                    if i == 0 || i + 1 == grid.nx() {
                        w *= 0.5;
                    }
                    if j == 0 || j + 1 == grid.ny() {
                        w *= 0.5;
                    }
                } else {
                    let on_edge = (0..2).any(|axis| {
                        [-1isize, 1].iter().any(|&d| match grid.neighbor(idx, axis, d) {
                            Some(n) => !active[n],
                            None => true,
                        })
                    });
                    if on_edge {
                        w *= 0.5;
                    }
                }
                out.push((idx, w));
            }
        }
        Region::Ball { center, radius } => {
            if grid.ndim() != 3 {
                return Err(Error::InvalidParameter("ball regions need a 3D grid".into()));
            }
            let period = grid.period();
            for (idx, &on) in active.iter().enumerate() {
                let p = grid.coords(idx);
                let f = cell_ball_fraction(p, h, *center, *radius, period);
                if f > 0.0 {
                    if !on {
                        return Err(Error::RegionOutsideDomain(format!("ball covers inactive node {idx}")));
                    }
                    out.push((idx, f * cell));
                }
            }
        }
        _ => {
            let (lo, hi) = planar_bounds(region).expect("planar region");
            let (xr, yr) = (grid.x_range(), grid.y_range());
            if lo[0] < xr.0 - 0.5 * h - 1e-12
                || hi[0] > xr.1 + 0.5 * h + 1e-12
                || lo[1] < yr.0 - 0.5 * h - 1e-12
                || hi[1] > yr.1 + 0.5 * h + 1e-12
            {
                return Err(Error::RegionOutsideDomain(format!(
                    "region bounds [{:.4},{:.4}]x[{:.4},{:.4}] exceed the grid",
                    lo[0], hi[0], lo[1], hi[1]
                )));
            }
            let (i0, j0) = grid.fractional_index(lo[0], lo[1]);
            let (i1, j1) = grid.fractional_index(hi[0], hi[1]);
            let i0 = (i0.floor() as isize - 1).max(0) as usize;
            let j0 = (j0.floor() as isize - 1).max(0) as usize;
            let i1 = ((i1.ceil() as usize) + 1).min(grid.nx() - 1);
            let j1 = ((j1.ceil() as usize) + 1).min(grid.ny() - 1);
            let layers = if grid.ndim() == 3 { grid.nt() } else { 1 };
            let layer_w = if grid.ndim() == 3 { h } else { 1.0 };
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let f = planar_fraction(region, grid.x(i), grid.y(j), h);
                    if f <= 0.0 {
                        continue;
                    }
                    for k in 0..layers {
                        let idx = grid.index(i, j, k);
                        if !active[idx] {
                            return Err(Error::RegionOutsideDomain(format!(
                                "region covers inactive node ({i}, {j})"
                            )));
                        }
                        out.push((idx, f * h * h * layer_w));
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(GridSpec::rectangle(4, 16, 0.1, [0.0, 0.0]).is_err());
        assert!(GridSpec::rectangle(16, 16, 0.0, [0.0, 0.0]).is_err());
        assert!(GridSpec::rectangle(16, 16, 0.1, [0.0, 0.0]).is_ok());
    }

    #[test]
    fn cylinder_wraps_in_t() {
        let g = GridSpec::cylinder(8, 8, 8, 0.5, [0.0, 0.0]).unwrap();
        let idx = g.index(3, 4, 0);
        let back = g.neighbor(idx, 2, -1).unwrap();
        assert_eq!(g.unravel(back), (3, 4, 7));
        assert_eq!(g.period(), Some(4.0));
        assert_eq!(g.neighbor(g.index(0, 0, 0), 0, -1), None);
    }

    #[test]
    fn disk_weights_measure_area() {
        let g = GridSpec::centered_square(1.0, 1.0 / 64.0).unwrap();
        let active = g.active_mask();
        let w = region_weights(
            &g,
            &active,
            &Region::Disk {
                center: [0.1, -0.05],
                radius: 0.7,
            },
        )
        .unwrap();
        let area: f64 = w.iter().map(|(_, w)| w).sum();
        assert!((area - std::f64::consts::PI * 0.49).abs() < 2e-4, "area {area}");
    }

    #[test]
    fn trapezoid_weights_on_rectangle() {
        let g = GridSpec::rectangle(11, 9, 0.1, [0.0, 0.0]).unwrap();
        let w = region_weights(&g, &g.active_mask(), &Region::All).unwrap();
        let area: f64 = w.iter().map(|(_, w)| w).sum();
        assert!((area - 1.0 * 0.8).abs() < 1e-12);
    }

    #[test]
    fn region_outside_grid_is_an_error() {
        let g = GridSpec::centered_square(1.0, 0.05).unwrap();
        let r = Region::Disk {
            center: [0.0, 0.0],
            radius: 1.5,
        };
        assert!(matches!(
            region_weights(&g, &g.active_mask(), &r),
            Err(Error::RegionOutsideDomain(_))
        ));
    }

    #[test]
    fn ball_weights_measure_volume() {
        let g = GridSpec::cylinder(41, 41, 40, 0.05, [-1.0, -1.0]).unwrap();
        let w = region_weights(
            &g,
            &g.active_mask(),
            &Region::Ball {
                center: [0.0, 0.0, 0.1],
                radius: 0.5,
            },
        )
        .unwrap();
        let vol: f64 = w.iter().map(|(_, w)| w).sum();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!((vol - exact).abs() / exact < 5e-3, "vol {vol} exact {exact}");
    }
}
