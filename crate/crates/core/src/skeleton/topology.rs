//! Fixed 15-joint skeleton and its 14-limb tree.

use crate::error::{Error, Result};

pub const NUM_JOINTS: usize = 15;
pub const NUM_LIMBS: usize = 14;
/// Interleaved x, y per joint.
pub const COORD_DIMS: usize = 2 * NUM_JOINTS;
/// Coordinates followed by limb lengths.
pub const FRAME_DIMS: usize = COORD_DIMS + NUM_LIMBS;
/// Limb lengths are stored divided by √2 so unit-square lengths fit `[0, 1]`.
pub const LIMB_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const TOPOLOGY_VERSION: &str = "joints15-limbs14-v1";

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "Head",
    "Neck",
    "RShoulder",
    "RElbow",
    "RWrist",
    "LShoulder",
    "LElbow",
    "LWrist",
    "Chest",
    "RHip",
    "RKnee",
    "RAnkle",
    "LHip",
    "LKnee",
    "LAnkle",
];

pub mod joint {
    pub const HEAD: usize = 0;
    pub const NECK: usize = 1;
    pub const R_SHOULDER: usize = 2;
    pub const R_ELBOW: usize = 3;
    pub const R_WRIST: usize = 4;
    pub const L_SHOULDER: usize = 5;
    pub const L_ELBOW: usize = 6;
    pub const L_WRIST: usize = 7;
    pub const CHEST: usize = 8;
    pub const R_HIP: usize = 9;
    pub const R_KNEE: usize = 10;
    pub const R_ANKLE: usize = 11;
    pub const L_HIP: usize = 12;
    pub const L_KNEE: usize = 13;
    pub const L_ANKLE: usize = 14;
}

use joint::*;

pub const LIMBS: [(usize, usize); NUM_LIMBS] = [
    (HEAD, NECK),
    (NECK, R_SHOULDER),
    (R_SHOULDER, R_ELBOW),
    (R_ELBOW, R_WRIST),
    (NECK, L_SHOULDER),
    (L_SHOULDER, L_ELBOW),
    (L_ELBOW, L_WRIST),
    (NECK, CHEST),
    (CHEST, R_HIP),
    (R_HIP, R_KNEE),
    (R_KNEE, R_ANKLE),
    (CHEST, L_HIP),
    (L_HIP, L_KNEE),
    (L_KNEE, L_ANKLE),
];

/// Checks that `edges` form a spanning tree over `n` nodes.
pub fn check_spanning_tree(n: usize, edges: &[(usize, usize)]) -> Result<()> {
    if edges.len() + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "{} edges cannot span {n} nodes as a tree",
            edges.len()
        )));
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::InvalidArgument(format!("edge ({a}, {b}) out of range")));
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(Error::InvalidArgument(format!("edge ({a}, {b}) closes a cycle")));
        }
        parent[ra] = rb;
    }
    Ok(())
}

pub fn validate_topology() -> Result<()> {
    check_spanning_tree(NUM_JOINTS, &LIMBS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_topology_is_a_tree() {
        validate_topology().unwrap();
        assert_eq!(FRAME_DIMS, 44);
    }

    #[test]
    fn rejects_cycles_and_forests() {
        assert!(check_spanning_tree(3, &[(0, 1), (1, 0)]).is_err());
        assert!(check_spanning_tree(4, &[(0, 1), (1, 2)]).is_err());
        assert!(check_spanning_tree(3, &[(0, 1), (1, 5)]).is_err());
    }
}
