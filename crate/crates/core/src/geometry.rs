//! Network drops: base-station layout, user placement and shadowing draws.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Angle of `self` seen from `origin`, in radians.
    pub fn angle_from(self, origin: Point) -> f64 {
        (self.y - origin.y).atan2(self.x - origin.x)
    }
}

/// Axis-aligned square cell with its base station at the centre.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub origin: Point,
    pub side: f64,
}

impl Cell {
    pub fn center(&self) -> Point {
        Point {
            x: self.origin.x + self.side / 2.0,
            y: self.origin.y + self.side / 2.0,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.origin.x
            && p.x <= self.origin.x + self.side
            && p.y >= self.origin.y
            && p.y <= self.origin.y + self.side
    }
}

/// Cells laid out row-major on a square grid covering the area.
pub fn cell_layout(config: &NetworkConfig) -> Vec<Cell> {
    let cols = config.grid_columns();
    let side = config.cell_side_m();
    (0..config.cells)
        .map(|l| Cell {
            origin: Point {
                x: (l % cols) as f64 * side,
                y: (l / cols) as f64 * side,
            },
            side,
        })
        .collect()
}

/// One large-scale realization: positions plus per-link shadowing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub cells: Vec<Cell>,
    pub base_stations: Vec<Point>,
    /// Cell-major: user `k` of cell `l` at `l * K + k`.
    pub users: Vec<Point>,
    pub users_per_cell: usize,
    /// Shadowing in dB, indexed like [`Geometry::link_index`].
    pub shadowing_db: Vec<f64>,
}

impl Geometry {
    pub fn num_cells(&self) -> usize {
        self.base_stations.len()
    }

    pub fn user_index(&self, cell: usize, user: usize) -> usize {
        cell * self.users_per_cell + user
    }

    /// Flat index of the link from user `(cell, user)` to base station `bs`.
    pub fn link_index(&self, bs: usize, cell: usize, user: usize) -> usize {
        bs * self.users.len() + self.user_index(cell, user)
    }

    pub fn user(&self, cell: usize, user: usize) -> Point {
        self.users[self.user_index(cell, user)]
    }

    pub fn distance(&self, bs: usize, cell: usize, user: usize) -> f64 {
        self.user(cell, user).distance(self.base_stations[bs])
    }

    pub fn angle(&self, bs: usize, cell: usize, user: usize) -> f64 {
        self.user(cell, user).angle_from(self.base_stations[bs])
    }

    pub fn shadowing(&self, bs: usize, cell: usize, user: usize) -> f64 {
        self.shadowing_db[self.link_index(bs, cell, user)]
    }
}

/// Drops `K` users uniformly in each cell, rejecting positions closer than
/// the minimum distance to the serving base station, then draws i.i.d.
/// shadowing for every (user, base station) pair.
pub fn drop_network(config: &NetworkConfig, seed: u64) -> Geometry {
    let mut rng = rng_from_seed(seed);
    let cells = cell_layout(config);
    let base_stations: Vec<Point> = cells.iter().map(Cell::center).collect();
    let min_distance = config.pathloss.min_distance_m;

    let mut users = Vec::with_capacity(config.total_users());
    for cell in &cells {
        let bs = cell.center();
        for _ in 0..config.users_per_cell {
            let p = loop {
                let candidate = Point {
                    x: cell.origin.x + rng.random::<f64>() * cell.side,
                    y: cell.origin.y + rng.random::<f64>() * cell.side,
                };
                if candidate.distance(bs) >= min_distance {
                    break candidate;
                }
            };
            users.push(p);
        }
    }

    let shadow = Normal::new(0.0, config.shadow_std_db).expect("validated shadow std");
    let shadowing_db = (0..config.cells * users.len())
        .map(|_| shadow.sample(&mut rng))
        .collect();

    Geometry {
        cells,
        base_stations,
        users,
        users_per_cell: config.users_per_cell,
        shadowing_db,
    }
}
