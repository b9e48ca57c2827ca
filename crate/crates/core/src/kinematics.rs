//! Piecewise-constant-curvature kinematics and static torque analysis.
//!
//! A robot is a serial chain of joints.  Each joint consists of a rigid base
//! segment of length `base_len`, a bending segment of arc length `spine_len`
//! that deforms into a circular arc, and a rigid top segment of length
//! `top_len`.  The joint state is the arc curvature `κ` (1/cm) together with
//! a rotation `θ` (rad) of the bending plane about the incoming tangent.
//!
//! All positions and lengths are in centimetres; torques are reported in
//! newton-metres (positions are converted to metres for the cross products).

use crate::error::{Error, Result};
use crate::vec3::Vec3;
use serde::{Deserialize, Serialize};

/// Tolerance for the orthonormality checks on frames.
pub const ORTHONORMALITY_TOL: f64 = 1e-9;

/// Below this bend angle (rad) the arc offsets are evaluated by series
/// expansion instead of the closed form, which avoids the cancellation in
/// `(1 - cos φ)/κ`.
const SMALL_BEND_ANGLE: f64 = 1e-6;

/// Centimetres to metres, for torque computations.
const CM_TO_M: f64 = 0.01;

/// Geometry of a single joint (all lengths in cm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDesign {
    /// Rigid segment between the joint base and the start of the bend.
    pub base_len: f64,
    /// Arc length of the bending segment.
    pub spine_len: f64,
    /// Rigid segment after the bend.
    pub top_len: f64,
    /// Smallest bend radius the joint can reach; curvature is admissible in
    /// `[0, 1/min_bend_radius]`.
    pub min_bend_radius: f64,
}

impl JointDesign {
    pub fn total_len(&self) -> f64 {
        self.base_len + self.spine_len + self.top_len
    }

    pub fn max_curvature(&self) -> f64 {
        1.0 / self.min_bend_radius
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = self.base_len.is_finite()
            && self.spine_len.is_finite()
            && self.top_len.is_finite()
            && self.min_bend_radius.is_finite();
        if !all_finite {
            return Err(Error::InvalidDesign("non-finite joint dimension".into()));
        }
        if self.base_len < 0.0 || self.top_len < 0.0 {
            return Err(Error::InvalidDesign(format!(
                "rigid segment lengths must be non-negative, got base {} top {}",
                self.base_len, self.top_len
            )));
        }
        if self.spine_len <= 0.0 {
            return Err(Error::InvalidDesign(format!(
                "spine length must be positive, got {}",
                self.spine_len
            )));
        }
        if self.min_bend_radius <= 0.0 {
            return Err(Error::InvalidDesign(format!(
                "minimum bend radius must be positive, got {}",
                self.min_bend_radius
            )));
        }
        Ok(())
    }
}

/// A complete robot: base pose plus the joint chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotDesign {
    /// Base position (cm).
    pub base_position: Vec3,
    /// Unit tangent of the chain at the base.
    pub base_tangent: Vec3,
    /// Unit normal at the base, perpendicular to the tangent.  The bending
    /// plane of the first joint at `θ = 0` contains this direction.
    pub base_normal: Vec3,
    pub joints: Vec<JointDesign>,
}

impl RobotDesign {
    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }

    /// The base frame, validated.
    pub fn base_frame(&self) -> Result<Frame> {
        Frame::new(self.base_position, self.base_tangent, self.base_normal)
    }

    pub fn validate(&self) -> Result<()> {
        self.base_frame()?;
        if self.joints.is_empty() {
            return Err(Error::InvalidDesign("design has no joints".into()));
        }
        for joint in &self.joints {
            joint.validate()?;
        }
        Ok(())
    }
}

/// State of one joint: curvature `κ` (1/cm) and bending-plane rotation `θ`
/// (rad).  Admissible curvature is `[0, 1/min_bend_radius]`; the kinematics
/// extend smoothly to values outside that range, which numerical derivatives
/// rely on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub curvature: f64,
    pub rotation: f64,
}

impl JointState {
    pub fn new(curvature: f64, rotation: f64) -> Self {
        JointState {
            curvature,
            rotation,
        }
    }
}

/// States for every joint of a design.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub states: Vec<JointState>,
}

impl Configuration {
    pub fn new(states: Vec<JointState>) -> Self {
        Configuration { states }
    }

    /// Builds a configuration from a flat `[κ_1, θ_1, κ_2, θ_2, ...]` vector.
    pub fn from_flat(q: &[f64]) -> Result<Self> {
        if q.len() % 2 != 0 {
            return Err(Error::InvalidConfiguration(format!(
                "flat state vector must have even length, got {}",
                q.len()
            )));
        }
        Ok(Configuration {
            states: q
                .chunks_exact(2)
                .map(|c| JointState::new(c[0], c[1]))
                .collect(),
        })
    }

    /// Flattens to `[κ_1, θ_1, κ_2, θ_2, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.states.len() * 2);
        for s in &self.states {
            q.push(s.curvature);
            q.push(s.rotation);
        }
        q
    }

    pub fn is_finite(&self) -> bool {
        self.states
            .iter()
            .all(|s| s.curvature.is_finite() && s.rotation.is_finite())
    }

    /// Whether every curvature lies in the admissible range of its joint.
    pub fn within_bounds(&self, design: &RobotDesign) -> bool {
        self.states.len() == design.joints.len()
            && self
                .states
                .iter()
                .zip(&design.joints)
                .all(|(s, j)| s.curvature >= 0.0 && s.curvature <= j.max_curvature())
    }
}

/// A right-handed orthonormal frame along the chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    /// Position (cm).
    pub origin: Vec3,
    /// Unit tangent (local advance direction).
    pub tangent: Vec3,
    /// Unit normal carried along the chain; the next joint bends in the
    /// plane spanned by the tangent and this normal rotated by its `θ`.
    pub normal: Vec3,
    /// `tangent × normal`, kept stored so propagation needs no cross product.
    pub binormal: Vec3,
}

impl Frame {
    /// Builds a frame from origin, tangent and normal, validating that the
    /// directions are unit length and orthogonal within [`ORTHONORMALITY_TOL`].
    pub fn new(origin: Vec3, tangent: Vec3, normal: Vec3) -> Result<Frame> {
        if !origin.is_finite() || !tangent.is_finite() || !normal.is_finite() {
            return Err(Error::InvalidFrame("non-finite frame component".into()));
        }
        if (tangent.norm() - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(Error::InvalidFrame(format!(
                "tangent is not unit length: |t| = {}",
                tangent.norm()
            )));
        }
        if (normal.norm() - 1.0).abs() > ORTHONORMALITY_TOL {
            return Err(Error::InvalidFrame(format!(
                "normal is not unit length: |n| = {}",
                normal.norm()
            )));
        }
        if tangent.dot(normal).abs() > ORTHONORMALITY_TOL {
            return Err(Error::InvalidFrame(format!(
                "tangent and normal are not orthogonal: t·n = {}",
                tangent.dot(normal)
            )));
        }
        Ok(Frame {
            origin,
            tangent,
            normal,
            binormal: tangent.cross(normal),
        })
    }

    /// Re-checks the orthonormality invariants.
    pub fn validate(&self) -> Result<()> {
        Frame::new(self.origin, self.tangent, self.normal).map(|_| ())
    }
}

/// All frames along a chain for one configuration: the frame at the base of
/// each joint plus the end-effector frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameChain {
    /// `joint_frames[i]` is the frame at the base of joint `i`;
    /// `joint_frames[0]` is the robot base frame.
    pub joint_frames: Vec<Frame>,
    pub end_effector: Frame,
}

/// `sin(lκ)/κ` and `(1 − cos(lκ))/κ`: tangential and normal offsets of an
/// arc of length `l` and curvature `κ`.  Handles `κ = 0` exactly and small
/// bend angles by series expansion.
fn arc_offsets(arc_len: f64, curvature: f64) -> (f64, f64) {
    if curvature == 0.0 {
        return (arc_len, 0.0);
    }
    let phi = arc_len * curvature;
    if phi.abs() < SMALL_BEND_ANGLE {
        let a = arc_len * (1.0 - phi * phi / 6.0);
        let b = arc_len * phi * 0.5 * (1.0 - phi * phi / 12.0);
        (a, b)
    } else {
        ((phi.sin()) / curvature, (1.0 - phi.cos()) / curvature)
    }
}

/// Propagates a frame through one joint without validating inputs.
/// Preserves orthonormality to rounding error because it only applies plane
/// rotations to an orthonormal triple.
pub(crate) fn propagate_unchecked(frame: &Frame, joint: &JointDesign, state: &JointState) -> Frame {
    let (sin_t, cos_t) = state.rotation.sin_cos();
    // Normal of the bending plane: the carried normal rotated by θ about the
    // tangent.
    let n_plane = frame.normal * cos_t + frame.binormal * sin_t;
    let b_plane = frame.binormal * cos_t - frame.normal * sin_t;

    let phi = joint.spine_len * state.curvature;
    let (a, b) = arc_offsets(joint.spine_len, state.curvature);
    let (sin_p, cos_p) = phi.sin_cos();

    let origin = frame.origin
        + frame.tangent * (joint.base_len + a + joint.top_len * cos_p)
        + n_plane * (b + joint.top_len * sin_p);
    let tangent = frame.tangent * cos_p + n_plane * sin_p;
    let normal = n_plane * cos_p - frame.tangent * sin_p;

    Frame {
        origin,
        tangent,
        normal,
        // The binormal of the bending plane is unchanged by the in-plane
        // rotation, so it is the binormal of the outgoing frame too.
        binormal: b_plane,
    }
}

/// Propagates a frame through one joint.
///
/// The outgoing frame sits at the far end of the joint; its normal is the
/// bending-plane normal rotated with the tangent, so that a following joint
/// with `θ = 0` continues to bend in the same plane.
pub fn propagate_joint(frame: &Frame, joint: &JointDesign, state: &JointState) -> Result<Frame> {
    frame.validate()?;
    joint.validate()?;
    if !state.curvature.is_finite() || !state.rotation.is_finite() {
        return Err(Error::InvalidConfiguration(
            "non-finite joint state".into(),
        ));
    }
    Ok(propagate_unchecked(frame, joint, state))
}

/// Forward kinematics: frames at every joint base plus the end effector.
pub fn forward_kinematics(design: &RobotDesign, config: &Configuration) -> Result<FrameChain> {
    design.validate()?;
    if config.states.len() != design.joints.len() {
        return Err(Error::InvalidConfiguration(format!(
            "configuration has {} states for {} joints",
            config.states.len(),
            design.joints.len()
        )));
    }
    if !config.is_finite() {
        return Err(Error::InvalidConfiguration(
            "non-finite joint state".into(),
        ));
    }

    let mut frame = design.base_frame()?;
    let mut joint_frames = Vec::with_capacity(design.joints.len());
    for (joint, state) in design.joints.iter().zip(&config.states) {
        joint_frames.push(frame);
        frame = propagate_unchecked(&frame, joint, state);
    }
    Ok(FrameChain {
        joint_frames,
        end_effector: frame,
    })
}

/// End-effector position only (validated path).
pub fn end_effector_position(design: &RobotDesign, config: &Configuration) -> Result<Vec3> {
    Ok(forward_kinematics(design, config)?.end_effector.origin)
}

/// End-effector position with no validation or allocation; for sampling and
/// finite-difference loops.  `states` must match `design.joints` in length.
pub(crate) fn end_position_unchecked(
    design: &RobotDesign,
    states: &[JointState],
    base: &Frame,
) -> Vec3 {
    let mut frame = *base;
    for (joint, state) in design.joints.iter().zip(states) {
        frame = propagate_unchecked(&frame, joint, state);
    }
    frame.origin
}

/// Masses acting on the chain: one lumped mass per joint (placed at the
/// joint's mid-path point) and a payload at the end effector.  Masses in kg,
/// gravity in m/s².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub payload_mass: f64,
    pub joint_masses: Vec<f64>,
    pub gravity: Vec3,
}

impl LoadModel {
    pub fn validate(&self, num_joints: usize) -> Result<()> {
        if !self.payload_mass.is_finite() || self.payload_mass < 0.0 {
            return Err(Error::InvalidLoad(format!(
                "payload mass must be finite and non-negative, got {}",
                self.payload_mass
            )));
        }
        if self.joint_masses.len() != num_joints {
            return Err(Error::InvalidLoad(format!(
                "{} joint masses for {} joints",
                self.joint_masses.len(),
                num_joints
            )));
        }
        if self.joint_masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidLoad(
                "joint masses must be finite and non-negative".into(),
            ));
        }
        if !self.gravity.is_finite() {
            return Err(Error::InvalidLoad("non-finite gravity vector".into()));
        }
        Ok(())
    }
}

/// Point at half the total path length along joint `joint_index`, following
/// base segment, arc and top segment piecewise.  Used as the joint's lumped
/// mass location.
pub fn joint_centroid(
    chain: &FrameChain,
    design: &RobotDesign,
    config: &Configuration,
    joint_index: usize,
) -> Result<Vec3> {
    if joint_index >= design.joints.len() || joint_index >= chain.joint_frames.len() {
        return Err(Error::InvalidParameter(format!(
            "joint index {} out of range for {} joints",
            joint_index,
            design.joints.len()
        )));
    }
    if config.states.len() != design.joints.len() {
        return Err(Error::InvalidConfiguration(format!(
            "configuration has {} states for {} joints",
            config.states.len(),
            design.joints.len()
        )));
    }
    Ok(centroid_unchecked(
        &chain.joint_frames[joint_index],
        &design.joints[joint_index],
        &config.states[joint_index],
    ))
}

/// Static torque about each joint base from gravity on the joint masses and
/// the payload.  `torques[i]` sums the moments, about joint `i`'s base
/// position, of every mass located at joint `i` or further out the chain.
/// Positions are converted from cm to m, so results are in N·m.
pub fn static_torques(
    design: &RobotDesign,
    config: &Configuration,
    load: &LoadModel,
) -> Result<Vec<Vec3>> {
    let chain = forward_kinematics(design, config)?;
    load.validate(design.joints.len())?;

    let centroids: Vec<Vec3> = (0..design.joints.len())
        .map(|i| joint_centroid(&chain, design, config, i))
        .collect::<Result<_>>()?;

    let mut torques = Vec::with_capacity(design.joints.len());
    for i in 0..design.joints.len() {
        let pivot = chain.joint_frames[i].origin;
        let mut torque = Vec3::ZERO;
        for k in i..design.joints.len() {
            let lever = (centroids[k] - pivot) * CM_TO_M;
            torque += lever.cross(load.gravity * load.joint_masses[k]);
        }
        let lever = (chain.end_effector.origin - pivot) * CM_TO_M;
        torque += lever.cross(load.gravity * load.payload_mass);
        torques.push(torque);
    }
    Ok(torques)
}

/// Sum of squared torque magnitudes, `½ Σ ‖τ_i‖²`: the smooth scalar the
/// minimum-torque solver works with.
pub fn torque_objective(design: &RobotDesign, config: &Configuration, load: &LoadModel) -> Result<f64> {
    let torques = static_torques(design, config, load)?;
    Ok(0.5 * torques.iter().map(|t| t.norm_squared()).sum::<f64>())
}

/// Reusable buffers for [`torque_objective_unchecked`].
#[derive(Default)]
pub(crate) struct TorqueScratch {
    frames: Vec<Frame>,
    weighted_moments: Vec<Vec3>,
    forces: Vec<Vec3>,
}

/// `½ Σ ‖τ_i‖²` without validation or fresh allocations, for the inner loops
/// of the minimum-torque solver.  `states` must match `design.joints`; the
/// load must already be validated.
pub(crate) fn torque_objective_unchecked(
    design: &RobotDesign,
    base: &Frame,
    states: &[JointState],
    load: &LoadModel,
    scratch: &mut TorqueScratch,
) -> f64 {
    let m = design.joints.len();
    scratch.frames.clear();
    scratch.weighted_moments.clear();
    scratch.forces.clear();

    let mut frame = *base;
    for (joint, state) in design.joints.iter().zip(states) {
        scratch.frames.push(frame);
        frame = propagate_unchecked(&frame, joint, state);
    }
    let end = frame.origin;

    // Per-mass force and moment about the world origin (in metre units);
    // torque about any pivot p is then  Σ moments − p × Σ forces.
    for i in 0..m {
        let centroid = centroid_unchecked(
            &scratch.frames[i],
            &design.joints[i],
            &states[i],
        );
        let force = load.gravity * load.joint_masses[i];
        scratch.forces.push(force);
        scratch
            .weighted_moments
            .push((centroid * CM_TO_M).cross(force));
    }
    let payload_force = load.gravity * load.payload_mass;
    let payload_moment = (end * CM_TO_M).cross(payload_force);

    // Suffix sums: moment/force of everything at or past joint i.
    let mut moment_suffix = payload_moment;
    let mut force_suffix = payload_force;
    let mut objective = 0.0;
    for i in (0..m).rev() {
        moment_suffix += scratch.weighted_moments[i];
        force_suffix += scratch.forces[i];
        let pivot = scratch.frames[i].origin * CM_TO_M;
        let torque = moment_suffix - pivot.cross(force_suffix);
        objective += torque.norm_squared();
    }
    0.5 * objective
}

/// Mid-path point of one joint given its base frame (no validation).
fn centroid_unchecked(frame: &Frame, joint: &JointDesign, state: &JointState) -> Vec3 {
    let (sin_t, cos_t) = state.rotation.sin_cos();
    let n_plane = frame.normal * cos_t + frame.binormal * sin_t;

    let half = joint.total_len() * 0.5;
    if half <= joint.base_len {
        return frame.origin + frame.tangent * half;
    }
    let into_arc = half - joint.base_len;
    if into_arc <= joint.spine_len {
        let (a, b) = arc_offsets(into_arc, state.curvature);
        return frame.origin + frame.tangent * (joint.base_len + a) + n_plane * b;
    }
    let (a, b) = arc_offsets(joint.spine_len, state.curvature);
    let phi = joint.spine_len * state.curvature;
    let (sin_p, cos_p) = phi.sin_cos();
    let arc_end = frame.origin + frame.tangent * (joint.base_len + a) + n_plane * b;
    let tangent_out = frame.tangent * cos_p + n_plane * sin_p;
    arc_end + tangent_out * (half - joint.base_len - joint.spine_len)
}

/// Sum of torque magnitudes `Σ ‖τ_i‖`: the reported per-target cost.
pub fn torque_total(design: &RobotDesign, config: &Configuration, load: &LoadModel) -> Result<f64> {
    let torques = static_torques(design, config, load)?;
    Ok(torques.iter().map(|t| t.norm()).sum())
}
