//! Workspace reachability: which fraction of a target set can a design's
//! end effector get to?
//!
//! The estimate is hybrid.  A forward-kinematics Monte-Carlo stage samples
//! configurations and marks every target whose voxel (grid-derived targets)
//! or ε-ball (explicit point targets) an end-effector sample falls into.
//! When that estimate lands inside a configured window just below the
//! required fraction, inverse kinematics takes a second look at each
//! unreached point.  For task-point workspaces the minimum-torque variant
//! solves per-point torque-optimal IK instead.

use crate::error::{Error, Result};
use crate::ik::{solve_min_torque_ik, solve_position_ik, IkOptions};
use crate::kinematics::{
    end_position_unchecked, Configuration, JointState, LoadModel, RobotDesign,
};
use crate::rng::{self, stream};
use crate::vec3::Vec3;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::TAU;

/// Configurations per sampling batch; each batch owns a derived random
/// stream, so results are independent of how batches are scheduled and
/// enlarging the budget only appends batches.
const BATCH_SIZE: usize = 4096;

/// Voxel lattice that target points were derived from.  When present,
/// FK-stage membership is "sample falls in the same voxel as the target"
/// rather than the ε-ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub origin: Vec3,
    pub voxel_size: f64,
}

/// A discretized workspace: target points, the reach tolerance ε, and the
/// required fraction α.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    /// Target points (cm).
    pub points: Vec<Vec3>,
    /// Reach tolerance ε (cm) used by ε-ball membership and IK refinement.
    pub tolerance: f64,
    /// Required reachable fraction α ∈ (0, 1].
    pub required_fraction: f64,
    /// Set when the points are voxel centers of a grid; switches FK-stage
    /// membership to voxel containment.
    pub grid: Option<GridInfo>,
}

impl TargetSet {
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::EmptyWorkspace("target set has no points".into()));
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter(
                "target set contains non-finite points".into(),
            ));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "target tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.required_fraction > 0.0 && self.required_fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "required fraction must lie in (0, 1], got {}",
                self.required_fraction
            )));
        }
        if let Some(grid) = &self.grid {
            if !(grid.voxel_size > 0.0) || !grid.voxel_size.is_finite() || !grid.origin.is_finite()
            {
                return Err(Error::InvalidParameter(
                    "invalid voxel grid attached to target set".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Budget and window for the hybrid estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingBudget {
    /// Number of random configurations for the FK stage.
    pub fk_samples: usize,
    /// IK refinement runs when the FK-stage fraction lands in
    /// `[window.0, window.1)`.
    pub refine_window: (f64, f64),
    /// Base seed; batches derive their own streams from it.
    pub seed: u64,
}

impl Default for SamplingBudget {
    fn default() -> Self {
        SamplingBudget {
            fk_samples: 100_000,
            refine_window: (0.9, 0.95),
            seed: 0,
        }
    }
}

impl SamplingBudget {
    pub fn validate(&self) -> Result<()> {
        if self.fk_samples == 0 {
            return Err(Error::InvalidParameter(
                "fk_samples must be positive".into(),
            ));
        }
        let (lo, hi) = self.refine_window;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "refine window must satisfy 0 ≤ lo ≤ hi ≤ 1, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// Outcome of a reachability analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachabilityReport {
    /// Final reached fraction (reached count / number of targets).
    pub theta: f64,
    /// Fraction after the FK sampling stage alone.
    pub fk_theta: f64,
    /// Per-target reached flags.
    pub reached: Vec<bool>,
    /// Number of targets the IK stage examined.
    pub ik_checked: usize,
    /// For minimum-torque analyses: per-target `Σ‖τ_i‖` at the returned
    /// posture (best-effort value even for unreached targets).
    pub per_point_torque: Option<Vec<f64>>,
}

impl ReachabilityReport {
    /// Total torque over reached targets (the task-point cost).
    pub fn total_torque(&self) -> Option<f64> {
        self.per_point_torque.as_ref().map(|torques| {
            torques
                .iter()
                .zip(&self.reached)
                .filter(|(_, reached)| **reached)
                .map(|(t, _)| *t)
                .sum()
        })
    }
}

/// Draws a random configuration: per joint, κ ~ Uniform[0, 1/R_min] then
/// θ ~ Uniform[0, 2π), in joint order.  The draw order is part of the
/// determinism contract.
pub fn sample_configuration<R: Rng>(design: &RobotDesign, rng: &mut R) -> Configuration {
    let mut states = Vec::with_capacity(design.joints.len());
    sample_states_into(design, rng, &mut states);
    Configuration::new(states)
}

fn sample_states_into<R: Rng>(design: &RobotDesign, rng: &mut R, states: &mut Vec<JointState>) {
    states.clear();
    for joint in &design.joints {
        let curvature = rng.gen::<f64>() * joint.max_curvature();
        let rotation = rng.gen::<f64>() * TAU;
        states.push(JointState::new(curvature, rotation));
    }
}

/// Spatial index answering "which targets does this end-effector sample
/// reach?" in O(1) per sample — a dense cell table for grid targets, a
/// hashed cell table with 27-neighborhood ε checks for point lists.
enum MembershipIndex<'a> {
    Grid {
        origin: Vec3,
        inv_size: f64,
        min_cell: [i64; 3],
        dims: [usize; 3],
        /// Head of a per-cell chain of target indices (u32::MAX = empty).
        heads: Vec<u32>,
        next: Vec<u32>,
    },
    Balls {
        points: &'a [Vec3],
        tolerance: f64,
        inv_size: f64,
        heads: HashMap<[i64; 3], u32>,
        next: Vec<u32>,
    },
}

const NONE: u32 = u32::MAX;

impl<'a> MembershipIndex<'a> {
    fn build(targets: &'a TargetSet) -> Self {
        if let Some(grid) = &targets.grid {
            let inv_size = 1.0 / grid.voxel_size;
            let cells: Vec<[i64; 3]> = targets
                .points
                .iter()
                .map(|p| cell_of(*p, grid.origin, inv_size))
                .collect();
            let mut min_cell = [i64::MAX; 3];
            let mut max_cell = [i64::MIN; 3];
            for c in &cells {
                for a in 0..3 {
                    min_cell[a] = min_cell[a].min(c[a]);
                    max_cell[a] = max_cell[a].max(c[a]);
                }
            }
            let dims = [
                (max_cell[0] - min_cell[0] + 1) as usize,
                (max_cell[1] - min_cell[1] + 1) as usize,
                (max_cell[2] - min_cell[2] + 1) as usize,
            ];
            let mut heads = vec![NONE; dims[0] * dims[1] * dims[2]];
            let mut next = vec![NONE; targets.points.len()];
            for (t, c) in cells.iter().enumerate() {
                let ix = (c[0] - min_cell[0]) as usize;
                let iy = (c[1] - min_cell[1]) as usize;
                let iz = (c[2] - min_cell[2]) as usize;
                let cell = (iz * dims[1] + iy) * dims[0] + ix;
                next[t] = heads[cell];
                heads[cell] = t as u32;
            }
            MembershipIndex::Grid {
                origin: grid.origin,
                inv_size,
                min_cell,
                dims,
                heads,
                next,
            }
        } else {
            // Hash cells of side ε; a ball of radius ε around any point then
            // only intersects the 27 cells around the point's own.
            let inv_size = 1.0 / targets.tolerance;
            let mut heads: HashMap<[i64; 3], u32> = HashMap::new();
            let mut next = vec![NONE; targets.points.len()];
            for (t, p) in targets.points.iter().enumerate() {
                let c = cell_of(*p, Vec3::ZERO, inv_size);
                let head = heads.entry(c).or_insert(NONE);
                next[t] = *head;
                *head = t as u32;
            }
            MembershipIndex::Balls {
                points: &targets.points,
                tolerance: targets.tolerance,
                inv_size,
                heads,
                next,
            }
        }
    }

    /// Marks every target reached by this sample position.
    fn mark(&self, sample: Vec3, mask: &mut [bool]) {
        match self {
            MembershipIndex::Grid {
                origin,
                inv_size,
                min_cell,
                dims,
                heads,
                next,
            } => {
                let c = cell_of(sample, *origin, *inv_size);
                let ix = c[0] - min_cell[0];
                let iy = c[1] - min_cell[1];
                let iz = c[2] - min_cell[2];
                if ix < 0
                    || iy < 0
                    || iz < 0
                    || ix >= dims[0] as i64
                    || iy >= dims[1] as i64
                    || iz >= dims[2] as i64
                {
                    return;
                }
                let cell = (iz as usize * dims[1] + iy as usize) * dims[0] + ix as usize;
                let mut t = heads[cell];
                while t != NONE {
                    mask[t as usize] = true;
                    t = next[t as usize];
                }
            }
            MembershipIndex::Balls {
                points,
                tolerance,
                inv_size,
                heads,
                next,
            } => {
                let c = cell_of(sample, Vec3::ZERO, *inv_size);
                let tol2 = tolerance * tolerance;
                for dz in -1..=1_i64 {
                    for dy in -1..=1_i64 {
                        for dx in -1..=1_i64 {
                            let key = [c[0] + dx, c[1] + dy, c[2] + dz];
                            let Some(&head) = heads.get(&key) else {
                                continue;
                            };
                            let mut t = head;
                            while t != NONE {
                                let idx = t as usize;
                                if (points[idx] - sample).norm_squared() <= tol2 {
                                    mask[idx] = true;
                                }
                                t = next[idx];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn cell_of(p: Vec3, origin: Vec3, inv_size: f64) -> [i64; 3] {
    [
        ((p.x - origin.x) * inv_size).floor() as i64,
        ((p.y - origin.y) * inv_size).floor() as i64,
        ((p.z - origin.z) * inv_size).floor() as i64,
    ]
}

/// FK sampling stage: reached mask plus the centroid of the sampled
/// end-effector cloud (used to order IK refinement).
fn fk_stage(
    design: &RobotDesign,
    targets: &TargetSet,
    budget: &SamplingBudget,
) -> Result<(Vec<bool>, Vec3)> {
    design.validate()?;
    targets.validate()?;
    budget.validate()?;
    let base = design.base_frame()?;
    let index = MembershipIndex::build(targets);

    let n_batches = budget.fk_samples.div_ceil(BATCH_SIZE);
    let batches: Vec<(Vec<bool>, Vec3)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::stream_rng(budget.seed, stream::FK_BATCH, b as u64);
            let count = if b + 1 == n_batches {
                budget.fk_samples - b * BATCH_SIZE
            } else {
                BATCH_SIZE
            };
            let mut mask = vec![false; targets.points.len()];
            let mut sum = Vec3::ZERO;
            let mut states = Vec::with_capacity(design.joints.len());
            for _ in 0..count {
                sample_states_into(design, &mut rng, &mut states);
                let end = end_position_unchecked(design, &states, &base);
                sum += end;
                index.mark(end, &mut mask);
            }
            (mask, sum)
        })
        .collect();

    // Merge in batch order: the OR-reduction is order-independent, and the
    // centroid sum is kept deterministic by folding sequentially.
    let mut mask = vec![false; targets.points.len()];
    let mut sum = Vec3::ZERO;
    for (batch_mask, batch_sum) in &batches {
        for (m, b) in mask.iter_mut().zip(batch_mask) {
            *m |= *b;
        }
        sum += *batch_sum;
    }
    Ok((mask, sum / budget.fk_samples as f64))
}

/// Forward-kinematics Monte-Carlo reachability: marks each target some
/// sampled end-effector position lands on (voxel containment for
/// grid-derived targets, ε-ball for point lists).
pub fn estimate_reachability_fk(
    design: &RobotDesign,
    targets: &TargetSet,
    budget: &SamplingBudget,
) -> Result<Vec<bool>> {
    fk_stage(design, targets, budget).map(|(mask, _)| mask)
}

fn fraction(mask: &[bool]) -> f64 {
    mask.iter().filter(|r| **r).count() as f64 / mask.len() as f64
}

/// IK refinement: re-examines every unreached target with position IK at
/// the target-set tolerance.  Reached entries are never unset.  Each point
/// owns a random stream derived from `(opts.seed, point index)`, so the
/// outcome is per-point deterministic and independent of processing order.
pub fn refine_with_ik(
    design: &RobotDesign,
    targets: &TargetSet,
    reached: &[bool],
    opts: &IkOptions,
) -> Result<Vec<bool>> {
    design.validate()?;
    targets.validate()?;
    opts.validate()?;
    if reached.len() != targets.points.len() {
        return Err(Error::InvalidParameter(format!(
            "mask length {} does not match {} targets",
            reached.len(),
            targets.points.len()
        )));
    }
    let unreached: Vec<usize> = (0..reached.len()).filter(|i| !reached[*i]).collect();
    refine_ordered(design, targets, reached, opts, &unreached)
}

fn refine_ordered(
    design: &RobotDesign,
    targets: &TargetSet,
    reached: &[bool],
    opts: &IkOptions,
    order: &[usize],
) -> Result<Vec<bool>> {
    let point_opts = IkOptions {
        tolerance: targets.tolerance,
        ..*opts
    };
    let confirmed: Vec<(usize, bool)> = order
        .par_iter()
        .map(|&j| {
            let opts_j = IkOptions {
                seed: rng::derive_seed(point_opts.seed, stream::IK_POINT, j as u64),
                ..point_opts
            };
            let solved = solve_position_ik(design, targets.points[j], &opts_j)
                .map(|s| s.converged)?;
            Ok((j, solved))
        })
        .collect::<Result<_>>()?;

    let mut out = reached.to_vec();
    for (j, solved) in confirmed {
        if solved {
            out[j] = true;
        }
    }
    Ok(out)
}

/// Hybrid reachability: FK sampling, then IK refinement when the FK
/// fraction falls inside the refine window `[lo, hi)`.  Unreached points are
/// refined in ascending distance from the end-effector cloud centroid (a
/// scheduling heuristic only — each point's verdict is independent).
pub fn hybrid_reachability(
    design: &RobotDesign,
    targets: &TargetSet,
    budget: &SamplingBudget,
    opts: &IkOptions,
) -> Result<ReachabilityReport> {
    let (mask, centroid) = fk_stage(design, targets, budget)?;
    let fk_theta = fraction(&mask);

    let (lo, hi) = budget.refine_window;
    let mut reached = mask;
    let mut ik_checked = 0;
    if fk_theta >= lo && fk_theta < hi {
        let mut order: Vec<usize> = (0..reached.len()).filter(|i| !reached[*i]).collect();
        order.sort_by(|&a, &b| {
            let da = (targets.points[a] - centroid).norm_squared();
            let db = (targets.points[b] - centroid).norm_squared();
            da.total_cmp(&db).then(a.cmp(&b))
        });
        ik_checked = order.len();
        reached = refine_ordered(design, targets, &reached, opts, &order)?;
    }

    Ok(ReachabilityReport {
        theta: fraction(&reached),
        fk_theta,
        reached,
        ik_checked,
        per_point_torque: None,
    })
}

/// Minimum-torque reachability for task points: a torque-minimizing IK
/// solve per target.  `theta` counts converged targets; `per_point_torque`
/// holds `Σ‖τ_i‖` at each returned posture.  Every target gets examined
/// (`fk_theta` is reported as 0 — there is no sampling stage).
pub fn min_torque_reachability(
    design: &RobotDesign,
    targets: &TargetSet,
    load: &LoadModel,
    opts: &IkOptions,
) -> Result<ReachabilityReport> {
    design.validate()?;
    targets.validate()?;
    opts.validate()?;
    load.validate(design.joints.len())?;

    let solved: Vec<(bool, f64)> = targets
        .points
        .par_iter()
        .enumerate()
        .map(|(j, &p)| {
            let opts_j = IkOptions {
                tolerance: targets.tolerance,
                seed: rng::derive_seed(opts.seed, stream::TORQUE_POINT, j as u64),
                ..*opts
            };
            let sol = solve_min_torque_ik(design, p, load, &opts_j)?;
            Ok((sol.converged, sol.torque_total))
        })
        .collect::<Result<_>>()?;

    let reached: Vec<bool> = solved.iter().map(|(c, _)| *c).collect();
    let torques: Vec<f64> = solved.iter().map(|(_, t)| *t).collect();
    Ok(ReachabilityReport {
        theta: fraction(&reached),
        fk_theta: 0.0,
        reached,
        ik_checked: targets.points.len(),
        per_point_torque: Some(torques),
    })
}
