//! Inverse kinematics: damped-least-squares position solving with random
//! restarts, and a minimum-torque variant that searches the tolerance ball
//! around a target for the statically cheapest posture.

use crate::error::{Error, Result};
use crate::kinematics::{
    end_position_unchecked, torque_objective_unchecked, torque_total, Configuration, Frame,
    JointState, LoadModel, RobotDesign, TorqueScratch,
};
use crate::rng::{self, stream};
use crate::vec3::Vec3;
use rand::Rng;
use std::f64::consts::TAU;

/// Finite-difference step for position Jacobians and torque gradients.
const FD_STEP: f64 = 1e-7;

/// Solver parameters.  The defaults match the reference protocol: 1 cm
/// tolerance, damping 0.1, 200 iterations per attempt, 10 restarts.
#[derive(Clone, Copy, Debug)]
pub struct IkOptions {
    /// Position tolerance (cm): a solve counts as converged when the
    /// end-effector lands within this distance of the target.
    pub tolerance: f64,
    /// Damping factor λ of the least-squares update.
    pub damping: f64,
    /// Descent iterations per restart attempt.
    pub max_iterations: usize,
    /// Number of start configurations tried (the first is deterministic
    /// mid-range, the rest are random).  More restarts can only improve the
    /// returned solution for a fixed seed.
    pub restarts: usize,
    /// Cap on the 2-norm of one update step in state space.
    pub step_limit: f64,
    /// Base seed for the random restarts.
    pub seed: u64,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            tolerance: 1.0,
            damping: 0.1,
            max_iterations: 200,
            restarts: 10,
            step_limit: 0.5,
            seed: 0,
        }
    }
}

impl IkOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "IK tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.damping > 0.0) || !self.damping.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "IK damping must be positive, got {}",
                self.damping
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "IK needs at least one iteration".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter(
                "IK needs at least one restart attempt".into(),
            ));
        }
        if !(self.step_limit > 0.0) || !self.step_limit.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "IK step limit must be positive, got {}",
                self.step_limit
            )));
        }
        Ok(())
    }
}

/// Result of an IK solve.
#[derive(Clone, Debug)]
pub struct IkSolution {
    /// Best configuration found; curvatures clamped to their joint range,
    /// plane rotations wrapped to `[0, 2π)`.
    pub config: Configuration,
    /// Distance between the end effector and the target (cm).
    pub residual: f64,
    /// Whether `residual ≤ tolerance`.
    pub converged: bool,
    /// `½ Σ ‖τ_i‖²` at the solution (N·m)²; zero for position-only solves.
    pub torque_objective: f64,
    /// `Σ ‖τ_i‖` at the solution (N·m); zero for position-only solves.
    pub torque_total: f64,
}

/// Position Jacobian of the end effector: column `2i` is `∂p/∂κ_i`, column
/// `2i+1` is `∂p/∂θ_i`, by central finite differences (step 1e-7, no
/// clamping — the kinematics extend smoothly past the state bounds).
#[derive(Clone, Debug)]
pub struct PositionJacobian {
    pub columns: Vec<Vec3>,
}

/// Computes the position Jacobian at a configuration.
pub fn position_jacobian(design: &RobotDesign, config: &Configuration) -> Result<PositionJacobian> {
    design.validate()?;
    if config.states.len() != design.joints.len() {
        return Err(Error::InvalidConfiguration(format!(
            "configuration has {} states for {} joints",
            config.states.len(),
            design.joints.len()
        )));
    }
    let base = design.base_frame()?;
    let mut states = config.states.clone();
    Ok(PositionJacobian {
        columns: jacobian_columns(design, &base, &mut states),
    })
}

fn jacobian_columns(design: &RobotDesign, base: &Frame, states: &mut [JointState]) -> Vec<Vec3> {
    let mut columns = Vec::with_capacity(states.len() * 2);
    for i in 0..states.len() {
        for field in 0..2 {
            let original = get_state(states, i, field);
            set_state(states, i, field, original + FD_STEP);
            let plus = end_position_unchecked(design, states, base);
            set_state(states, i, field, original - FD_STEP);
            let minus = end_position_unchecked(design, states, base);
            set_state(states, i, field, original);
            columns.push((plus - minus) / (2.0 * FD_STEP));
        }
    }
    columns
}

fn get_state(states: &[JointState], joint: usize, field: usize) -> f64 {
    if field == 0 {
        states[joint].curvature
    } else {
        states[joint].rotation
    }
}

fn set_state(states: &mut [JointState], joint: usize, field: usize, value: f64) {
    if field == 0 {
        states[joint].curvature = value;
    } else {
        states[joint].rotation = value;
    }
}

/// Solves `(J Jᵀ + λ² I) y = e` for the damped least-squares update.
fn solve_damped_normal(columns: &[Vec3], damping: f64, e: Vec3) -> Vec3 {
    let mut m = [[0.0_f64; 3]; 3];
    for c in columns {
        let v = c.to_array();
        for r in 0..3 {
            for s in 0..3 {
                m[r][s] += v[r] * v[s];
            }
        }
    }
    let d2 = damping * damping;
    for r in 0..3 {
        m[r][r] += d2;
    }
    solve3(&m, e)
}

/// Direct 3×3 solve by cofactor expansion; the matrix is symmetric positive
/// definite here (JJᵀ plus a positive diagonal), so the determinant is
/// safely away from zero.
fn solve3(m: &[[f64; 3]; 3], b: Vec3) -> Vec3 {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let inv_det = 1.0 / det;
    let b = b.to_array();
    let x0 = b[0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (b[1] * m[2][2] - m[1][2] * b[2])
        + m[0][2] * (b[1] * m[2][1] - m[1][1] * b[2]);
    let x1 = m[0][0] * (b[1] * m[2][2] - b[2] * m[1][2])
        - b[0] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * b[2] - b[1] * m[2][0]);
    let x2 = m[0][0] * (m[1][1] * b[2] - m[2][1] * b[1])
        - m[0][1] * (m[1][0] * b[2] - b[1] * m[2][0])
        + b[0] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    Vec3::new(x0 * inv_det, x1 * inv_det, x2 * inv_det)
}

/// Clamps curvatures into `[0, κ_max]` and wraps rotations to `[0, 2π)`.
fn clamp_wrap(states: &mut [JointState], max_curvatures: &[f64]) {
    for (s, k) in states.iter_mut().zip(max_curvatures) {
        s.curvature = s.curvature.clamp(0.0, *k);
        s.rotation = s.rotation.rem_euclid(TAU);
    }
}

struct Attempt {
    states: Vec<JointState>,
    residual: f64,
    converged: bool,
}

/// One damped-least-squares descent from a fixed start.
fn dls_attempt(
    design: &RobotDesign,
    base: &Frame,
    max_curvatures: &[f64],
    target: Vec3,
    opts: &IkOptions,
    mut states: Vec<JointState>,
) -> Attempt {
    clamp_wrap(&mut states, max_curvatures);
    let mut best = states.clone();
    let mut best_residual = (target - end_position_unchecked(design, &states, base)).norm();

    for _ in 0..opts.max_iterations {
        let error = target - end_position_unchecked(design, &states, base);
        let residual = error.norm();
        if residual < best_residual {
            best_residual = residual;
            best.copy_from_slice(&states);
        }
        if residual <= opts.tolerance {
            return Attempt {
                states: best,
                residual: best_residual,
                converged: true,
            };
        }

        let columns = jacobian_columns(design, base, &mut states);
        let y = solve_damped_normal(&columns, opts.damping, error);
        let mut step: Vec<f64> = columns.iter().map(|c| c.dot(y)).collect();
        let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        if step_norm > opts.step_limit {
            let scale = opts.step_limit / step_norm;
            for v in &mut step {
                *v *= scale;
            }
        }

        // Backtrack on the step until the residual improves; if even the
        // smallest try does not improve, take it anyway (best-so-far is kept
        // separately) so the iteration cannot get stuck in place.
        let mut taken = false;
        let mut candidate = states.clone();
        for shrink in [1.0, 0.5, 0.25, 0.125] {
            candidate.copy_from_slice(&states);
            for (j, c) in candidate.iter_mut().enumerate() {
                c.curvature += step[2 * j] * shrink;
                c.rotation += step[2 * j + 1] * shrink;
            }
            clamp_wrap(&mut candidate, max_curvatures);
            let r = (target - end_position_unchecked(design, &candidate, base)).norm();
            if r < residual {
                taken = true;
                break;
            }
        }
        let moved = candidate
            .iter()
            .zip(&states)
            .any(|(a, b)| a.curvature != b.curvature || a.rotation != b.rotation);
        states.copy_from_slice(&candidate);
        if !taken && !moved {
            break; // pinned against the bounds with no useful direction
        }
    }

    let error = target - end_position_unchecked(design, &states, base);
    if error.norm() < best_residual {
        best_residual = error.norm();
        best.copy_from_slice(&states);
    }
    Attempt {
        states: best,
        residual: best_residual,
        converged: best_residual <= opts.tolerance,
    }
}

/// Start configuration for restart attempt `k`: attempt 0 is deterministic
/// mid-range curvature with zero plane rotation; later attempts draw each
/// joint's κ uniformly from its range and θ uniformly from `[0, 2π)`.
fn attempt_start(
    max_curvatures: &[f64],
    attempt: usize,
    seed: u64,
) -> Vec<JointState> {
    if attempt == 0 {
        return max_curvatures
            .iter()
            .map(|k| JointState::new(0.5 * k, 0.0))
            .collect();
    }
    let mut rng = rng::stream_rng(seed, stream::IK_RESTART, attempt as u64);
    max_curvatures
        .iter()
        .map(|k| {
            let curvature = rng.gen::<f64>() * k;
            let rotation = rng.gen::<f64>() * TAU;
            JointState::new(curvature, rotation)
        })
        .collect()
}

fn run_attempts(
    design: &RobotDesign,
    base: &Frame,
    max_curvatures: &[f64],
    target: Vec3,
    opts: &IkOptions,
    stop_at_first: bool,
) -> Vec<Attempt> {
    let mut attempts = Vec::new();
    for k in 0..opts.restarts {
        let start = attempt_start(max_curvatures, k, opts.seed);
        let attempt = dls_attempt(design, base, max_curvatures, target, opts, start);
        let hit = attempt.converged;
        attempts.push(attempt);
        if stop_at_first && hit {
            break;
        }
    }
    attempts
}

fn validate_target(target: Vec3) -> Result<()> {
    if !target.is_finite() {
        return Err(Error::InvalidParameter("non-finite IK target".into()));
    }
    Ok(())
}

/// Position-only inverse kinematics.
///
/// Runs damped-least-squares descents from up to `opts.restarts` start
/// configurations and returns the best solution found, stopping early at the
/// first converged attempt.  An unreachable target is a normal return with
/// `converged = false`, not an error.  Deterministic for fixed options, and
/// raising `restarts` never worsens the result for the same seed.
pub fn solve_position_ik(
    design: &RobotDesign,
    target: Vec3,
    opts: &IkOptions,
) -> Result<IkSolution> {
    design.validate()?;
    validate_target(target)?;
    opts.validate()?;
    let base = design.base_frame()?;
    let max_curvatures: Vec<f64> = design.joints.iter().map(|j| j.max_curvature()).collect();

    let attempts = run_attempts(design, &base, &max_curvatures, target, opts, true);
    let best = attempts
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("at least one restart attempt");

    let mut states = best.states.clone();
    clamp_wrap(&mut states, &max_curvatures);
    Ok(IkSolution {
        config: Configuration::new(states),
        residual: best.residual,
        converged: best.converged,
        torque_objective: 0.0,
        torque_total: 0.0,
    })
}

/// Augmented-Lagrangian state for the torque minimization: minimize the
/// torque objective subject to `‖p(q) − target‖ ≤ slack`, with the ball kept
/// slightly inside the true tolerance so converged iterates stay feasible.
struct TorqueProblem<'a> {
    design: &'a RobotDesign,
    base: Frame,
    target: Vec3,
    load: &'a LoadModel,
    slack: f64,
    multiplier: f64,
    penalty: f64,
}

impl TorqueProblem<'_> {
    fn objective(&self, states: &[JointState], scratch: &mut TorqueScratch) -> f64 {
        torque_objective_unchecked(self.design, &self.base, states, self.load, scratch)
    }

    fn constraint(&self, states: &[JointState]) -> f64 {
        (end_position_unchecked(self.design, states, &self.base) - self.target).norm()
            - self.slack
    }

    /// Merit value Φ = T + ρ/2 · max(0, s + ν/ρ)².
    fn merit(&self, states: &[JointState], scratch: &mut TorqueScratch) -> f64 {
        let s = self.constraint(states);
        let shifted = (s + self.multiplier / self.penalty).max(0.0);
        self.objective(states, scratch) + 0.5 * self.penalty * shifted * shifted
    }

    /// Gradient of the merit: finite differences for the torque part, the
    /// exact chain rule `Jᵀ ĉ` for the constraint part.
    fn merit_gradient(
        &self,
        states: &mut Vec<JointState>,
        scratch: &mut TorqueScratch,
    ) -> Vec<f64> {
        let n = states.len() * 2;
        let mut grad = vec![0.0; n];
        for i in 0..states.len() {
            for field in 0..2 {
                let original = get_state(states, i, field);
                set_state(states, i, field, original + FD_STEP);
                let plus = self.objective(states, scratch);
                set_state(states, i, field, original - FD_STEP);
                let minus = self.objective(states, scratch);
                set_state(states, i, field, original);
                grad[2 * i + field] = (plus - minus) / (2.0 * FD_STEP);
            }
        }

        let s = self.constraint(states);
        let shifted = (s + self.multiplier / self.penalty).max(0.0);
        if shifted > 0.0 {
            let offset = end_position_unchecked(self.design, states, &self.base) - self.target;
            let distance = offset.norm();
            if distance > 1e-12 {
                let direction = offset / distance;
                let columns = jacobian_columns(self.design, &self.base, states);
                for (g, c) in grad.iter_mut().zip(&columns) {
                    *g += self.penalty * shifted * c.dot(direction);
                }
            }
        }
        grad
    }
}

/// Projected Barzilai–Borwein descent with Armijo backtracking on the merit
/// function.  Curvatures are projected onto their box; plane rotations are
/// periodic and left unconstrained (they are wrapped only when reporting).
fn spg_minimize(
    problem: &TorqueProblem,
    states: &mut Vec<JointState>,
    max_curvatures: &[f64],
    iterations: usize,
    scratch: &mut TorqueScratch,
) {
    let project = |s: &mut [JointState]| {
        for (st, k) in s.iter_mut().zip(max_curvatures) {
            st.curvature = st.curvature.clamp(0.0, *k);
        }
    };
    project(states);
    let mut value = problem.merit(states, scratch);
    let mut grad = problem.merit_gradient(states, scratch);
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let mut alpha = 1.0 / (1.0 + grad_norm);

    for _ in 0..iterations {
        // Projected step direction.
        let mut trial: Vec<JointState> = states.clone();
        for (j, t) in trial.iter_mut().enumerate() {
            t.curvature = states[j].curvature - alpha * grad[2 * j];
            t.rotation = states[j].rotation - alpha * grad[2 * j + 1];
        }
        project(&mut trial);
        let mut direction = vec![0.0; grad.len()];
        let mut dir_norm2 = 0.0;
        for j in 0..states.len() {
            direction[2 * j] = trial[j].curvature - states[j].curvature;
            direction[2 * j + 1] = trial[j].rotation - states[j].rotation;
            dir_norm2 += direction[2 * j] * direction[2 * j]
                + direction[2 * j + 1] * direction[2 * j + 1];
        }
        if dir_norm2.sqrt() < 1e-12 {
            break;
        }
        let slope: f64 = grad.iter().zip(&direction).map(|(g, d)| g * d).sum();

        // Armijo backtracking along the projected direction.
        let mut t = 1.0;
        let mut accepted = false;
        let mut candidate = states.clone();
        let mut candidate_value = value;
        for _ in 0..25 {
            for (j, c) in candidate.iter_mut().enumerate() {
                c.curvature = states[j].curvature + t * direction[2 * j];
                c.rotation = states[j].rotation + t * direction[2 * j + 1];
            }
            project(&mut candidate);
            candidate_value = problem.merit(&candidate, scratch);
            if candidate_value <= value + 1e-4 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }

        let new_grad = {
            let mut c = candidate.clone();
            let g = problem.merit_gradient(&mut c, scratch);
            g
        };
        // Barzilai–Borwein step length from the last displacement.
        let mut sy = 0.0;
        let mut ss = 0.0;
        for j in 0..states.len() {
            let sk = candidate[j].curvature - states[j].curvature;
            let st = candidate[j].rotation - states[j].rotation;
            sy += sk * (new_grad[2 * j] - grad[2 * j]) + st * (new_grad[2 * j + 1] - grad[2 * j + 1]);
            ss += sk * sk + st * st;
        }
        alpha = if sy > 1e-14 {
            (ss / sy).clamp(1e-8, 1e4)
        } else {
            (alpha * 2.0).min(1e4)
        };

        *states = candidate;
        value = candidate_value;
        grad = new_grad;
    }
}

/// Augmented-Lagrangian refinement of one feasible start.
fn refine_min_torque(
    design: &RobotDesign,
    base: &Frame,
    max_curvatures: &[f64],
    target: Vec3,
    load: &LoadModel,
    tolerance: f64,
    inner_iterations: usize,
    start: &[JointState],
) -> Vec<JointState> {
    let mut scratch = TorqueScratch::default();
    let mut states = start.to_vec();
    let slack = 0.99 * tolerance;

    let initial_objective =
        torque_objective_unchecked(design, base, &states, load, &mut scratch);
    let mut problem = TorqueProblem {
        design,
        base: *base,
        target,
        load,
        slack,
        multiplier: 0.0,
        penalty: (2.0 * initial_objective / (slack * slack).max(1e-9)).max(1e-2),
    };

    let mut previous_violation = f64::INFINITY;
    for _ in 0..6 {
        spg_minimize(&problem, &mut states, max_curvatures, inner_iterations, &mut scratch);
        let violation = problem.constraint(&states).max(0.0);
        problem.multiplier = (problem.multiplier + problem.penalty * problem.constraint(&states)).max(0.0);
        if violation > 1e-10 && violation > 0.25 * previous_violation {
            problem.penalty = (problem.penalty * 4.0).min(1e12);
        }
        previous_violation = violation;
    }
    states
}

/// Minimum-torque inverse kinematics.
///
/// First solves plain position IK (same restart schedule as
/// [`solve_position_ik`]); every converged attempt then seeds an
/// augmented-Lagrangian descent that minimizes `½ Σ ‖τ_i‖²` while keeping
/// the end effector inside the tolerance ball around the target.  The plain
/// position solutions stay in the candidate pool, so for the same seed the
/// returned torque objective is never worse than evaluating the position-IK
/// answer.  If no attempt converges the best-residual configuration is
/// returned with `converged = false`.
pub fn solve_min_torque_ik(
    design: &RobotDesign,
    target: Vec3,
    load: &LoadModel,
    opts: &IkOptions,
) -> Result<IkSolution> {
    design.validate()?;
    validate_target(target)?;
    opts.validate()?;
    load.validate(design.joints.len())?;
    let base = design.base_frame()?;
    let max_curvatures: Vec<f64> = design.joints.iter().map(|j| j.max_curvature()).collect();
    let mut scratch = TorqueScratch::default();

    let attempts = run_attempts(design, &base, &max_curvatures, target, opts, false);
    let feasible: Vec<&Attempt> = attempts.iter().filter(|a| a.converged).collect();

    if feasible.is_empty() {
        let best = attempts
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .expect("at least one restart attempt");
        let mut states = best.states.clone();
        clamp_wrap(&mut states, &max_curvatures);
        let objective = torque_objective_unchecked(design, &base, &states, load, &mut scratch);
        let config = Configuration::new(states);
        let total = torque_total(design, &config, load)?;
        return Ok(IkSolution {
            config,
            residual: best.residual,
            converged: false,
            torque_objective: objective,
            torque_total: total,
        });
    }

    // Candidate pool: each converged attempt as-is, plus its refinement.
    let mut best_states: Option<Vec<JointState>> = None;
    let mut best_objective = f64::INFINITY;
    for attempt in &feasible {
        let refined = refine_min_torque(
            design,
            &base,
            &max_curvatures,
            target,
            load,
            opts.tolerance,
            opts.max_iterations.max(20),
            &attempt.states,
        );
        for candidate in [&attempt.states, &refined] {
            let residual =
                (end_position_unchecked(design, candidate, &base) - target).norm();
            if residual > opts.tolerance {
                continue;
            }
            let objective =
                torque_objective_unchecked(design, &base, candidate, load, &mut scratch);
            if objective < best_objective {
                best_objective = objective;
                best_states = Some(candidate.clone());
            }
        }
    }

    let mut states = best_states.expect("feasible candidates include the unrefined attempts");
    clamp_wrap(&mut states, &max_curvatures);
    let residual = (end_position_unchecked(design, &states, &base) - target).norm();
    let objective = torque_objective_unchecked(design, &base, &states, load, &mut scratch);
    let config = Configuration::new(states);
    let total = torque_total(design, &config, load)?;
    Ok(IkSolution {
        config,
        residual,
        converged: true,
        torque_objective: objective,
        torque_total: total,
    })
}
