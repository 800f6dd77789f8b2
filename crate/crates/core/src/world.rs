//! The virtual universe: a bounded 2-D map split into a grid of regions,
//! avatars following random-waypoint movement, and a uniform-cell spatial
//! index for proximity queries.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::engine::RngStream;
use crate::infra::NodeId;
use crate::time::SimTime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

/// Integer region coordinates on the region grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId {
    pub rx: u32,
    pub ry: u32,
}

impl RegionId {
    pub const fn new(rx: u32, ry: u32) -> Self {
        RegionId { rx, ry }
    }

    /// Row-major index on a grid `regions_x` wide.
    pub fn linear(self, regions_x: u32) -> usize {
        self.ry as usize * regions_x as usize + self.rx as usize
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.rx, self.ry)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WorldError {
    InvalidGrid(&'static str),
    OutOfBounds(Point),
    RadiusExceedsCell { radius: f64, cell: f64 },
    UnknownUser(UserId),
}

impl fmt::Display for WorldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WorldError::InvalidGrid(why) => write!(f, "invalid world grid: {why}"),
            WorldError::OutOfBounds(p) => write!(f, "position ({}, {}) is outside the world", p.x, p.y),
            WorldError::RadiusExceedsCell { radius, cell } => {
                write!(f, "query radius {radius} exceeds spatial cell size {cell}")
            }
            WorldError::UnknownUser(u) => write!(f, "unknown user {u}"),
        }
    }
}

impl core::error::Error for WorldError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorldGrid {
    width: f64,
    height: f64,
    regions_x: u32,
    regions_y: u32,
    cell: f64,
}

impl WorldGrid {
    pub fn new(width: f64, height: f64, regions_x: u32, regions_y: u32, cell: f64) -> Result<Self, WorldError> {
        if !(width.is_finite() && width > 0.0 && height.is_finite() && height > 0.0) {
            return Err(WorldError::InvalidGrid("width and height must be positive"));
        }
        if regions_x == 0 || regions_y == 0 {
            return Err(WorldError::InvalidGrid("region grid must be at least 1x1"));
        }
        if !(cell.is_finite() && cell > 0.0) {
            return Err(WorldError::InvalidGrid("cell size must be positive"));
        }
        Ok(WorldGrid { width, height, regions_x, regions_y, cell })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn regions_x(&self) -> u32 {
        self.regions_x
    }

    pub fn regions_y(&self) -> u32 {
        self.regions_y
    }

    pub fn region_count(&self) -> usize {
        self.regions_x as usize * self.regions_y as usize
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    /// Region containing `p`. Points on an interior boundary belong to the
    /// higher-index region; the far edges clamp into the last region.
    pub fn region_of(&self, p: Point) -> Result<RegionId, WorldError> {
        if !self.contains(p) {
            return Err(WorldError::OutOfBounds(p));
        }
        let rw = self.width / self.regions_x as f64;
        let rh = self.height / self.regions_y as f64;
        let rx = (libm::floor(p.x / rw) as u32).min(self.regions_x - 1);
        let ry = (libm::floor(p.y / rh) as u32).min(self.regions_y - 1);
        Ok(RegionId { rx, ry })
    }

    /// Iterates every region in row-major order.
    pub fn regions(&self) -> impl Iterator<Item = RegionId> + '_ {
        (0..self.regions_y).flat_map(move |ry| (0..self.regions_x).map(move |rx| RegionId { rx, ry }))
    }

    pub fn random_point(&self, rng: &mut RngStream) -> Point {
        Point::new(rng.uniform_range(0.0, self.width), rng.uniform_range(0.0, self.height))
    }

    fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }
}

/// Movement state of one user. `speed` is world units per second.
#[derive(Clone, Debug, PartialEq)]
pub struct Avatar {
    pub user: UserId,
    pub pos: Point,
    pub waypoint: Point,
    pub speed: f64,
    pub home_fog: NodeId,
    pub region: RegionId,
}

/// Advances `avatar` towards its waypoint by `speed * dt`, never overshooting.
/// Reaching the waypoint draws a fresh uniform one.
pub fn movement_tick(avatar: &mut Avatar, grid: &WorldGrid, dt: SimTime, rng: &mut RngStream) {
    debug_assert!(dt > SimTime::ZERO);
    let step = avatar.speed * dt.as_secs_f64();
    if step > 0.0 {
        let dist = avatar.pos.distance(avatar.waypoint);
        if step >= dist {
            avatar.pos = avatar.waypoint;
            avatar.waypoint = grid.random_point(rng);
        } else {
            let f = step / dist;
            avatar.pos = grid.clamp(Point::new(
                avatar.pos.x + (avatar.waypoint.x - avatar.pos.x) * f,
                avatar.pos.y + (avatar.waypoint.y - avatar.pos.y) * f,
            ));
        }
    }
    avatar.region = grid.region_of(avatar.pos).expect("position clamped into bounds");
}

/// Uniform-cell spatial index over the bounded map. Cell coordinates are
/// clamped to the grid so points on the far edge share the last cell.
#[derive(Clone, Debug)]
pub struct SpatialHash {
    cell: f64,
    cols: u32,
    rows: u32,
    cells: Vec<Vec<u32>>,
}

impl SpatialHash {
    pub fn new(grid: &WorldGrid) -> Self {
        let cols = (libm::ceil(grid.width / grid.cell) as u32).max(1);
        let rows = (libm::ceil(grid.height / grid.cell) as u32).max(1);
        SpatialHash { cell: grid.cell, cols, rows, cells: vec![Vec::new(); cols as usize * rows as usize] }
    }

    pub fn cell_of(&self, p: Point) -> (u32, u32) {
        let cx = (libm::floor(p.x / self.cell).max(0.0) as u32).min(self.cols - 1);
        let cy = (libm::floor(p.y / self.cell).max(0.0) as u32).min(self.rows - 1);
        (cx, cy)
    }

    pub fn rebuild<'a>(&mut self, positions: impl Iterator<Item = (u32, Point)> + 'a) {
        for c in &mut self.cells {
            c.clear();
        }
        for (idx, p) in positions {
            let (cx, cy) = self.cell_of(p);
            self.cells[(cy * self.cols + cx) as usize].push(idx);
        }
    }

    /// Visits every entry in the 3x3 block of cells around `p`.
    pub fn for_each_near(&self, p: Point, mut f: impl FnMut(u32)) {
        let (cx, cy) = self.cell_of(p);
        let x0 = cx.saturating_sub(1);
        let y0 = cy.saturating_sub(1);
        let x1 = (cx + 1).min(self.cols - 1);
        let y1 = (cy + 1).min(self.rows - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                for &idx in &self.cells[(y * self.cols + x) as usize] {
                    f(idx);
                }
            }
        }
    }
}

/// All avatars plus the proximity index. Avatar `i` belongs to `UserId(i)`.
#[derive(Clone, Debug)]
pub struct World {
    grid: WorldGrid,
    avatars: Vec<Avatar>,
    index: SpatialHash,
}

impl World {
    pub fn new(grid: WorldGrid, avatars: Vec<Avatar>) -> Result<Self, WorldError> {
        for (i, a) in avatars.iter().enumerate() {
            assert_eq!(a.user, UserId(i as u32), "avatars must be indexed by user id");
            if !grid.contains(a.pos) {
                return Err(WorldError::OutOfBounds(a.pos));
            }
        }
        let mut world = World { index: SpatialHash::new(&grid), grid, avatars };
        for a in &mut world.avatars {
            a.region = grid.region_of(a.pos)?;
        }
        world.reindex();
        Ok(world)
    }

    /// Uniformly scattered avatars with uniform first waypoints; `home_fog`
    /// is left at `NodeId(0)` for the caller to assign.
    pub fn random(grid: WorldGrid, users: u32, speed: f64, rng: &mut RngStream) -> Self {
        let avatars = (0..users)
            .map(|u| {
                let pos = grid.random_point(rng);
                let waypoint = grid.random_point(rng);
                Avatar {
                    user: UserId(u),
                    pos,
                    waypoint,
                    speed,
                    home_fog: NodeId(0),
                    region: grid.region_of(pos).expect("sampled inside"),
                }
            })
            .collect();
        World::new(grid, avatars).expect("sampled inside")
    }

    pub fn grid(&self) -> &WorldGrid {
        &self.grid
    }

    pub fn avatars(&self) -> &[Avatar] {
        &self.avatars
    }

    pub fn avatar(&self, user: UserId) -> Option<&Avatar> {
        self.avatars.get(user.0 as usize)
    }

    pub fn avatar_mut(&mut self, user: UserId) -> Option<&mut Avatar> {
        self.avatars.get_mut(user.0 as usize)
    }

    pub fn user_count(&self) -> usize {
        self.avatars.len()
    }

    pub fn index(&self) -> &SpatialHash {
        &self.index
    }

    pub fn reindex(&mut self) {
        self.index.rebuild(self.avatars.iter().map(|a| (a.user.0, a.pos)));
    }

    /// Moves every avatar by one tick and refreshes the spatial index.
    pub fn tick(&mut self, dt: SimTime, rng: &mut RngStream) {
        for a in &mut self.avatars {
            movement_tick(a, &self.grid, dt, rng);
        }
        self.reindex();
    }

    /// Users within Euclidean `radius` of `user`, excluding `user`, sorted.
    pub fn nearby_users(&self, user: UserId, radius: f64) -> Result<Vec<UserId>, WorldError> {
        if radius > self.grid.cell {
            return Err(WorldError::RadiusExceedsCell { radius, cell: self.grid.cell });
        }
        let me = self.avatar(user).ok_or(WorldError::UnknownUser(user))?;
        let mut out = Vec::new();
        self.index.for_each_near(me.pos, |idx| {
            if idx != user.0 && self.avatars[idx as usize].pos.distance(me.pos) <= radius {
                out.push(UserId(idx));
            }
        });
        out.sort_unstable();
        Ok(out)
    }

    /// Number of other avatars sharing the 3x3 cell block around `user`.
    pub fn collision_candidates(&self, user: UserId) -> usize {
        let Some(me) = self.avatar(user) else { return 0 };
        let mut n = 0;
        self.index.for_each_near(me.pos, |idx| {
            if idx != user.0 {
                n += 1;
            }
        });
        n
    }
}
