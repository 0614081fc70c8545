//! Pilot assignment and reuse sets.

use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Pilot index of every user, cell-major (`l * K + k`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotPlan {
    pub cells: usize,
    pub users_per_cell: usize,
    pub pilots: usize,
    pilot_index: Vec<usize>,
}

/// User `k` of every cell gets pilot `k`, so each pilot is reused once per cell.
pub fn assign_pilots(config: &NetworkConfig) -> Result<PilotPlan> {
    let indices = (0..config.cells)
        .map(|_| (0..config.users_per_cell).collect())
        .collect();
    PilotPlan::from_indices(
        config.cells,
        config.users_per_cell,
        config.pilot_symbols,
        indices,
    )
}

impl PilotPlan {
    /// Builds a plan from explicit `[cell][user]` pilot indices. Users within a
    /// cell must have distinct pilots.
    pub fn from_indices(
        cells: usize,
        users_per_cell: usize,
        pilots: usize,
        indices: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if pilots < users_per_cell {
            return Err(Error::InsufficientPilots {
                needed: users_per_cell,
                available: pilots,
            });
        }
        if indices.len() != cells || indices.iter().any(|row| row.len() != users_per_cell) {
            return Err(Error::Dimension(format!(
                "pilot indices must be {cells}x{users_per_cell}"
            )));
        }
        for (l, row) in indices.iter().enumerate() {
            let mut seen = vec![false; pilots];
            for &t in row {
                if t >= pilots {
                    return Err(Error::InvalidConfig(format!(
                        "pilot index {t} out of range in cell {l}"
                    )));
                }
                if std::mem::replace(&mut seen[t], true) {
                    return Err(Error::InvalidConfig(format!(
                        "pilot {t} used twice in cell {l}"
                    )));
                }
            }
        }
        Ok(Self {
            cells,
            users_per_cell,
            pilots,
            pilot_index: indices.into_iter().flatten().collect(),
        })
    }

    pub fn total_users(&self) -> usize {
        self.pilot_index.len()
    }

    pub fn pilot_of(&self, u: usize) -> usize {
        self.pilot_index[u]
    }

    pub fn pilot(&self, cell: usize, user: usize) -> usize {
        self.pilot_index[cell * self.users_per_cell + user]
    }

    pub fn shares_pilot(&self, u: usize, v: usize) -> bool {
        self.pilot_index[u] == self.pilot_index[v]
    }

    /// Flat indices of the users transmitting pilot `t`, ascending.
    pub fn users_with_pilot(&self, t: usize) -> Vec<usize> {
        (0..self.total_users())
            .filter(|&u| self.pilot_index[u] == t)
            .collect()
    }

    /// The reuse set of user `u`, which always contains `u` itself.
    pub fn reuse_set(&self, u: usize) -> Vec<usize> {
        self.users_with_pilot(self.pilot_index[u])
    }

    /// `(cell, user)` pairs sharing the pilot of `(cell, user)`.
    pub fn reuse_set_pairs(&self, cell: usize, user: usize) -> Vec<(usize, usize)> {
        self.reuse_set(cell * self.users_per_cell + user)
            .into_iter()
            .map(|u| (u / self.users_per_cell, u % self.users_per_cell))
            .collect()
    }

    /// One group per pilot index; unused pilots give empty groups.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        (0..self.pilots).map(|t| self.users_with_pilot(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_reuse_pattern() {
        let plan = assign_pilots(&NetworkConfig::default()).unwrap();
        // user 2 of cell 1 (1-based) shares with user 2 of every cell
        assert_eq!(
            plan.reuse_set_pairs(0, 1),
            vec![(0, 1), (1, 1), (2, 1), (3, 1)]
        );
    }

    #[test]
    fn single_cell_has_no_contamination() {
        let config = NetworkConfig {
            cells: 1,
            ..NetworkConfig::default()
        };
        let plan = assign_pilots(&config).unwrap();
        for k in 0..5 {
            assert_eq!(plan.reuse_set(k), vec![k]);
        }
    }

    #[test]
    fn too_few_pilots_is_an_error() {
        assert!(matches!(
            PilotPlan::from_indices(2, 3, 2, vec![vec![0, 1, 0]; 2]),
            Err(Error::InsufficientPilots { .. })
        ));
        assert!(PilotPlan::from_indices(2, 2, 3, vec![vec![0, 0], vec![0, 1]]).is_err());
        assert!(PilotPlan::from_indices(1, 2, 3, vec![vec![0, 3]]).is_err());
    }

    #[test]
    fn groups_partition_users() {
        let plan =
            PilotPlan::from_indices(3, 2, 4, vec![vec![0, 1], vec![2, 0], vec![3, 1]]).unwrap();
        let groups = plan.groups();
        assert_eq!(groups.len(), 4);
        let mut all: Vec<usize> = groups.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
        for u in 0..6 {
            assert!(plan.reuse_set(u).contains(&u));
            for v in plan.reuse_set(u) {
                assert!(plan.shares_pilot(u, v));
            }
        }
    }
}
