use std::collections::VecDeque;

use crate::world::{Point, Rect, Workspace};

/// Grid coordinates, column then row.
pub type Cell = (usize, usize);

/// Blocked/free raster of the table. A cell is free when its square touches
/// the navigable region (the safe bounds shrunk by the inflation radius) and
/// no dynamic obstacle covers its center.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub cell_size: f64,
    pub inflation: f64,
    nx: usize,
    ny: usize,
    blocked: Vec<bool>,
    navigable: Option<Rect>,
    /// Disc obstacles added with [`block_disc`](Self::block_disc).
    discs: Vec<(Point, f64)>,
}

impl OccupancyGrid {
    pub fn for_workspace(ws: &Workspace, cell_size: f64, inflation: f64) -> Self {
        let nx = (ws.width / cell_size - 1e-9).ceil().max(1.0) as usize;
        let ny = (ws.height / cell_size - 1e-9).ceil().max(1.0) as usize;
        let nav = ws.safe_bounds().shrink(inflation);
        let mut blocked = vec![true; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let (x0, y0) = (ix as f64 * cell_size, iy as f64 * cell_size);
                let touches = x0 <= nav.max_x
                    && x0 + cell_size >= nav.min_x
                    && y0 <= nav.max_y
                    && y0 + cell_size >= nav.min_y;
                blocked[iy * nx + ix] = !touches;
            }
        }
        Self {
            cell_size,
            inflation,
            nx,
            ny,
            blocked,
            navigable: Some(nav),
            discs: Vec::new(),
        }
    }

    /// An abstract grid, mostly for tests and tools. `blocked` is row-major.
    pub fn from_cells(nx: usize, ny: usize, cell_size: f64, blocked: Vec<bool>) -> Self {
        assert_eq!(blocked.len(), nx * ny, "blocked mask has wrong size");
        Self {
            cell_size,
            inflation: 0.0,
            nx,
            ny,
            blocked,
            navigable: None,
            discs: Vec::new(),
        }
    }

    pub fn free(nx: usize, ny: usize, cell_size: f64) -> Self {
        Self::from_cells(nx, ny, cell_size, vec![false; nx * ny])
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Region robot centers may occupy, when the grid was built from a workspace.
    pub fn navigable(&self) -> Option<Rect> {
        self.navigable
    }

    pub fn index(&self, c: Cell) -> usize {
        c.1 * self.nx + c.0
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[self.index(c)]
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        let i = self.index(c);
        self.blocked[i] = blocked;
    }

    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        if p.x < 0.0 || p.y < 0.0 {
            return None;
        }
        let ix = (p.x / self.cell_size) as usize;
        let iy = (p.y / self.cell_size) as usize;
        (ix < self.nx && iy < self.ny).then_some((ix, iy))
    }

    /// Like [`cell_of`](Self::cell_of) but clamps points outside the grid.
    pub fn nearest_cell(&self, p: Point) -> Cell {
        let ix = (p.x / self.cell_size).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let iy = (p.y / self.cell_size).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (ix, iy)
    }

    pub fn center(&self, c: Cell) -> Point {
        Point::new(
            (c.0 as f64 + 0.5) * self.cell_size,
            (c.1 as f64 + 0.5) * self.cell_size,
        )
    }

    /// 4-connected neighbors in a fixed order: east, north, west, south.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let (x, y) = (c.0 as isize, c.1 as isize);
        [(1, 0), (0, 1), (-1, 0), (0, -1)]
            .into_iter()
            .map(move |(dx, dy)| (x + dx, y + dy))
            .filter(|&(nx, ny)| nx >= 0 && ny >= 0 && (nx as usize) < self.nx && (ny as usize) < self.ny)
            .map(|(nx, ny)| (nx as usize, ny as usize))
    }

    /// Blocks every cell whose center lies within `radius` of `center`, and
    /// keeps the disc for exact line-of-sight checks.
    pub fn block_disc(&mut self, center: Point, radius: f64) {
        self.discs.push((center, radius));
        let lo = self.nearest_cell(Point::new(center.x - radius, center.y - radius));
        let hi = self.nearest_cell(Point::new(center.x + radius, center.y + radius));
        for iy in lo.1..=hi.1 {
            for ix in lo.0..=hi.0 {
                if self.center((ix, iy)).distance(center) < radius {
                    self.set_blocked((ix, iy), true);
                }
            }
        }
    }

    /// Closest free cell to `p` by center distance; ties go to the lowest
    /// row, then column.
    pub fn nearest_free(&self, p: Point) -> Option<Cell> {
        let mut best: Option<(f64, Cell)> = None;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if self.is_blocked((ix, iy)) {
                    continue;
                }
                let d = self.center((ix, iy)).distance(p);
                if best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, (ix, iy)));
                }
            }
        }
        best.map(|(_, c)| c)
    }

    /// Free cells reachable from `start`, which itself may be blocked.
    pub fn reachable_from(&self, start: Cell) -> Vec<bool> {
        let mut seen = vec![false; self.nx * self.ny];
        let mut queue = VecDeque::from([start]);
        seen[self.index(start)] = true;
        while let Some(c) = queue.pop_front() {
            for n in self.neighbors(c) {
                let i = self.index(n);
                if !seen[i] && !self.blocked[i] {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// True when the straight segment `a`-`b` only crosses free cells, or
    /// the cell `allow` (typically the start cell), and keeps clear of disc
    /// obstacles. A segment starting inside a disc may not go deeper.
    pub fn line_of_sight(&self, a: Point, b: Point, allow: Option<Cell>) -> bool {
        let clear_of_discs = self.discs.iter().all(|&(c, r)| {
            let need = r.min(a.distance(c));
            segment_distance(c, a, b) >= need - 1e-12
        });
        if !clear_of_discs {
            return false;
        }
        let len = a.distance(b);
        let steps = (len / (self.cell_size / 4.0)).ceil().max(1.0) as usize;
        (0..=steps).all(|i| {
            let t = i as f64 / steps as f64;
            let p = Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
            match self.cell_of(p) {
                Some(c) => !self.is_blocked(c) || Some(c) == allow,
                None => false,
            }
        })
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    };
    p.distance(Point::new(a.x + dx * t, a.y + dy * t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_band_is_blocked() {
        let ws = Workspace::default();
        let g = OccupancyGrid::for_workspace(&ws, 0.02, 0.06);
        assert_eq!(g.dims(), (55, 33));
        let band = ws.safety_margin + g.inflation;
        for iy in 0..33 {
            for ix in 0..55 {
                let (x0, y0) = (ix as f64 * 0.02, iy as f64 * 0.02);
                let inside_band = x0 + 0.02 < band
                    || y0 + 0.02 < band
                    || x0 > ws.width - band
                    || y0 > ws.height - band;
                if inside_band {
                    assert!(g.is_blocked((ix, iy)), "cell {ix},{iy}");
                }
            }
        }
        assert!(!g.is_blocked(g.cell_of(ws.center()).unwrap()));
    }

    #[test]
    fn navigable_points_lie_in_free_cells() {
        let ws = Workspace::default();
        let g = OccupancyGrid::for_workspace(&ws, 0.02, 0.06);
        let nav = g.navigable().unwrap();
        for &(x, y) in &[(nav.min_x, nav.min_y), (nav.max_x, nav.max_y), (nav.max_x, nav.min_y), (0.5, 0.3)] {
            let c = g.cell_of(Point::new(x, y)).unwrap();
            assert!(!g.is_blocked(c), "({x},{y})");
        }
    }

    #[test]
    fn disc_and_nearest_free() {
        let mut g = OccupancyGrid::free(10, 10, 1.0);
        g.block_disc(Point::new(5.0, 5.0), 1.2);
        assert!(g.is_blocked((4, 4)) && g.is_blocked((5, 5)));
        assert!(!g.is_blocked((3, 4)));
        assert_eq!(g.nearest_free(Point::new(5.0, 5.0)), Some((4, 3)));
    }

    #[test]
    fn sight_lines_respect_discs_exactly() {
        let mut g = OccupancyGrid::free(50, 50, 0.02);
        g.block_disc(Point::new(0.5, 0.5), 0.11);
        // grazes the disc between free cell centers
        assert!(!g.line_of_sight(Point::new(0.3, 0.6), Point::new(0.7, 0.6), None));
        assert!(g.line_of_sight(Point::new(0.3, 0.62), Point::new(0.7, 0.62), None));
        // leaving a disc one starts inside is fine, going deeper is not
        let inside = Point::new(0.5, 0.6);
        assert!(g.line_of_sight(inside, Point::new(0.5, 0.9), g.cell_of(inside)));
        assert!(!g.line_of_sight(inside, Point::new(0.5, 0.55), g.cell_of(inside)));
    }

    #[test]
    fn reachability_respects_walls() {
        let mut g = OccupancyGrid::free(5, 5, 1.0);
        for y in 0..5 {
            g.set_blocked((2, y), true);
        }
        let seen = g.reachable_from((0, 0));
        assert!(seen[g.index((1, 4))]);
        assert!(!seen[g.index((3, 0))]);
    }
}
