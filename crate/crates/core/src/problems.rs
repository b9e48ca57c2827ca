//! Design-problem descriptions: the robot template (which dimensions are
//! free, which are fixed), the target workspace, the load, and the solver
//! settings — loadable from a TOML file or one of the built-in scenarios —
//! plus the adapter that exposes a problem to the optimizer.

use crate::error::{Error, Result};
use crate::ik::IkOptions;
use crate::kinematics::{Frame, JointDesign, LoadModel, RobotDesign};
use crate::optimizer::{DesignObjective, Evaluation, GaSettings, OptimizerParams};
use crate::reachability::{
    hybrid_reachability, min_torque_reachability, GridInfo, SamplingBudget, TargetSet,
};
use crate::stl::parse_stl;
use crate::vec3::Vec3;
use crate::voxel::{grid_to_targets, voxelize_mesh};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// What the optimizer minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Sum of all segment lengths of the design (cm).
    TotalLength,
    /// Sum over targets of the per-target minimized static torque magnitude
    /// `Σ‖τ_i‖` (N·m).
    TotalTorque,
}

/// One design dimension: either fixed to a value or free within `[lb, ub]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VarSpec {
    Fixed(f64),
    Range { lb: f64, ub: f64 },
}

impl VarSpec {
    pub fn is_free(&self) -> bool {
        matches!(self, VarSpec::Range { .. })
    }

    fn validate(&self, name: &str, positive: bool) -> Result<()> {
        let check = |v: f64| -> Result<()> {
            if !v.is_finite() || v < 0.0 || (positive && v == 0.0) {
                return Err(Error::InvalidProblem(format!(
                    "{name} must be {} and finite, got {v}",
                    if positive { "positive" } else { "non-negative" }
                )));
            }
            Ok(())
        };
        match *self {
            VarSpec::Fixed(v) => check(v),
            VarSpec::Range { lb, ub } => {
                check(lb)?;
                check(ub)?;
                if !(lb < ub) {
                    return Err(Error::InvalidProblem(format!(
                        "{name} range must satisfy lb < ub, got [{lb}, {ub}]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Resolves to a concrete value, consuming one entry of `x` if free.
    fn resolve(&self, x: &[f64], cursor: &mut usize) -> f64 {
        match *self {
            VarSpec::Fixed(v) => v,
            VarSpec::Range { .. } => {
                let v = x[*cursor];
                *cursor += 1;
                v
            }
        }
    }
}

/// Template for one joint: its three segment lengths (fixed or free) and
/// the fixed minimum bend radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointTemplate {
    pub base_len: VarSpec,
    pub spine_len: VarSpec,
    pub top_len: VarSpec,
    pub min_bend_radius: f64,
}

impl JointTemplate {
    fn specs(&self) -> [(&'static str, VarSpec, bool); 3] {
        [
            ("base_len", self.base_len, false),
            ("spine_len", self.spine_len, true),
            ("top_len", self.top_len, false),
        ]
    }
}

/// Robot template: the base pose and per-joint dimension specifications.
/// Free dimensions, in joint order and `base_len`, `spine_len`, `top_len`
/// order within a joint, form the optimizer's variable vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotTemplate {
    pub base_position: Vec3,
    pub base_tangent: Vec3,
    pub base_normal: Vec3,
    pub joints: Vec<JointTemplate>,
}

impl RobotTemplate {
    /// Number of free variables.
    pub fn n_vars(&self) -> usize {
        self.joints
            .iter()
            .flat_map(|j| j.specs())
            .filter(|(_, s, _)| s.is_free())
            .count()
    }

    /// Bounds of the free variables, in variable order.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lbs = Vec::new();
        let mut ubs = Vec::new();
        for joint in &self.joints {
            for (_, spec, _) in joint.specs() {
                if let VarSpec::Range { lb, ub } = spec {
                    lbs.push(lb);
                    ubs.push(ub);
                }
            }
        }
        (lbs, ubs)
    }

    pub fn validate(&self) -> Result<()> {
        Frame::new(self.base_position, self.base_tangent, self.base_normal)?;
        if self.joints.is_empty() {
            return Err(Error::InvalidProblem("robot template has no joints".into()));
        }
        for (i, joint) in self.joints.iter().enumerate() {
            for (name, spec, positive) in joint.specs() {
                spec.validate(&format!("joint {i} {name}"), positive)?;
            }
            if !(joint.min_bend_radius > 0.0) || !joint.min_bend_radius.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "joint {i} min_bend_radius must be positive, got {}",
                    joint.min_bend_radius
                )));
            }
        }
        Ok(())
    }

    /// Builds the concrete design for a free-variable vector.
    pub fn instantiate(&self, x: &[f64]) -> Result<RobotDesign> {
        if x.len() != self.n_vars() {
            return Err(Error::InvalidProblem(format!(
                "expected {} design variables, got {}",
                self.n_vars(),
                x.len()
            )));
        }
        let mut cursor = 0;
        let joints = self
            .joints
            .iter()
            .map(|j| JointDesign {
                base_len: j.base_len.resolve(x, &mut cursor),
                spine_len: j.spine_len.resolve(x, &mut cursor),
                top_len: j.top_len.resolve(x, &mut cursor),
                min_bend_radius: j.min_bend_radius,
            })
            .collect();
        let design = RobotDesign {
            base_position: self.base_position,
            base_tangent: self.base_tangent,
            base_normal: self.base_normal,
            joints,
        };
        design.validate()?;
        Ok(design)
    }

    /// Total length of the design for a free-variable vector (cm): the sum
    /// of every segment, fixed ones included.
    pub fn total_length(&self, x: &[f64]) -> f64 {
        let mut cursor = 0;
        self.joints
            .iter()
            .flat_map(|j| j.specs())
            .map(|(_, spec, _)| spec.resolve(x, &mut cursor))
            .sum()
    }
}

/// Where the target workspace comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkspaceSource {
    /// A closed STL mesh, voxelized at `voxel_size`; targets are the
    /// occupied voxel centers.
    Stl { path: String, voxel_size: f64 },
    /// A CSV point list (`x,y,z` per line, cm).
    Points { path: String },
    /// One of the built-in scenario workspaces.
    Builtin { name: String },
}

/// Monte-Carlo sampling settings for the reachability stage.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingSettings {
    pub fk_samples: usize,
    /// IK refinement runs when the FK fraction lands in `[lo, hi)`.
    pub refine_window: [f64; 2],
}

impl Default for SamplingSettings {
    fn default() -> Self {
        SamplingSettings {
            fk_samples: 100_000,
            refine_window: [0.9, 0.95],
        }
    }
}

impl SamplingSettings {
    pub fn budget(&self, seed: u64) -> SamplingBudget {
        SamplingBudget {
            fk_samples: self.fk_samples,
            refine_window: (self.refine_window[0], self.refine_window[1]),
            seed,
        }
    }
}

/// Optimizer settings as stored in a problem description.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub population: usize,
    pub iterations: usize,
    pub truncation_rate: f64,
    pub sigma_penalty: f64,
    pub trial_cap: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            population: 100,
            iterations: 20,
            truncation_rate: 0.5,
            sigma_penalty: 0.33,
            trial_cap: 10_000,
            crossover_prob: 0.9,
            mutation_prob: 0.1,
        }
    }
}

impl OptimizerSettings {
    pub fn params(
        &self,
        algorithm: crate::optimizer::Algorithm,
        seed: u64,
        selective: bool,
    ) -> OptimizerParams {
        OptimizerParams {
            algorithm,
            population: self.population,
            iterations: self.iterations,
            truncation_rate: self.truncation_rate,
            sigma_penalty: self.sigma_penalty,
            seed,
            selective,
            trial_cap: self.trial_cap,
            ga: GaSettings {
                crossover_prob: self.crossover_prob,
                mutation_prob: self.mutation_prob,
            },
        }
    }
}

/// Inverse-kinematics tuning as stored in a problem description.  The
/// position tolerance always comes from the problem's `tolerance` field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkSettings {
    pub damping: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub step_limit: f64,
}

impl Default for IkSettings {
    fn default() -> Self {
        let d = IkOptions::default();
        IkSettings {
            damping: d.damping,
            max_iterations: d.max_iterations,
            restarts: d.restarts,
            step_limit: d.step_limit,
        }
    }
}

impl IkSettings {
    pub fn options(&self, tolerance: f64, seed: u64) -> IkOptions {
        IkOptions {
            tolerance,
            damping: self.damping,
            max_iterations: self.max_iterations,
            restarts: self.restarts,
            step_limit: self.step_limit,
            seed,
        }
    }
}

/// A complete design problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub objective: ObjectiveKind,
    /// Required reachable fraction α ∈ (0, 1].
    pub required_fraction: f64,
    /// Reach tolerance ε (cm).
    pub tolerance: f64,
    pub robot: RobotTemplate,
    pub workspace: WorkspaceSource,
    /// Static load; required for torque objectives and torque-aware IK.
    #[serde(default)]
    pub load: Option<LoadModel>,
    #[serde(default)]
    pub sampling: SamplingSettings,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub ik: IkSettings,
}

/// Budget presets: `Desk` shrinks the heavy knobs so a full study runs on a
/// laptop; `Paper` uses the problem's stored values unchanged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Paper,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.robot.validate()?;
        if self.robot.n_vars() == 0 {
            return Err(Error::InvalidProblem(
                "robot template has no free variables to optimize".into(),
            ));
        }
        if !(self.required_fraction > 0.0 && self.required_fraction <= 1.0) {
            return Err(Error::InvalidProblem(format!(
                "required_fraction must lie in (0, 1], got {}",
                self.required_fraction
            )));
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        match &self.workspace {
            WorkspaceSource::Stl { voxel_size, .. } => {
                if !(*voxel_size > 0.0) || !voxel_size.is_finite() {
                    return Err(Error::InvalidProblem(format!(
                        "voxel_size must be positive, got {voxel_size}"
                    )));
                }
                if self.objective == ObjectiveKind::TotalTorque {
                    return Err(Error::InvalidProblem(
                        "a torque objective needs task points (a point list or a \
                         point-based builtin), not a volumetric workspace"
                            .into(),
                    ));
                }
            }
            WorkspaceSource::Points { .. } => {}
            WorkspaceSource::Builtin { name } => {
                if !BUILTIN_NAMES.contains(&name.as_str()) {
                    return Err(Error::InvalidProblem(format!(
                        "unknown builtin workspace '{name}' (available: {})",
                        BUILTIN_NAMES.join(", ")
                    )));
                }
                if self.objective == ObjectiveKind::TotalTorque && name != "spot_welding" {
                    return Err(Error::InvalidProblem(format!(
                        "a torque objective needs task points; builtin '{name}' is volumetric"
                    )));
                }
            }
        }
        if let Some(load) = &self.load {
            load.validate(self.robot.joints.len())?;
        }
        if self.objective == ObjectiveKind::TotalTorque && self.load.is_none() {
            return Err(Error::InvalidProblem(
                "a torque objective needs a [load] section".into(),
            ));
        }
        let s = &self.sampling;
        if s.fk_samples == 0 {
            return Err(Error::InvalidProblem("fk_samples must be positive".into()));
        }
        let [lo, hi] = s.refine_window;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidProblem(format!(
                "refine_window must satisfy 0 ≤ lo ≤ hi ≤ 1, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    /// Parses a problem from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ProblemSpec =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Serializes the problem to TOML.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Reads and validates a problem file.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    /// Materializes the target set.  Relative workspace paths are resolved
    /// against `base_dir` (normally the problem file's directory).
    pub fn load_targets(&self, base_dir: &Path) -> Result<TargetSet> {
        match &self.workspace {
            WorkspaceSource::Stl { path, voxel_size } => {
                let full = base_dir.join(path);
                let bytes = std::fs::read(&full)
                    .map_err(|e| Error::io(full.display().to_string(), e))?;
                let mesh = parse_stl(&bytes)?;
                let grid = voxelize_mesh(&mesh, *voxel_size)?;
                grid_to_targets(&grid, self.tolerance, self.required_fraction)
            }
            WorkspaceSource::Points { path } => {
                let full = base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Error::io(full.display().to_string(), e))?;
                let points = parse_point_list(&text, &full.display().to_string())?;
                let targets = TargetSet {
                    points,
                    tolerance: self.tolerance,
                    required_fraction: self.required_fraction,
                    grid: None,
                };
                targets.validate()?;
                Ok(targets)
            }
            WorkspaceSource::Builtin { name } => {
                builtin_targets(name, self.tolerance, self.required_fraction)
            }
        }
    }

    /// Applies a budget preset.  `Desk` caps FK sampling at 100 000 draws
    /// and opens the refinement window down to 0.35: at that sample count
    /// the coverage estimate saturates well below its large-budget value
    /// for long arms, so the refinement trigger must sit much lower than
    /// the required fraction or genuinely feasible designs are never
    /// handed to the IK stage.  For torque objectives `Desk` additionally
    /// shrinks the population to 30, the iteration count to 10, and IK
    /// restarts to 3.
    pub fn apply_scale(&mut self, scale: Scale) {
        if scale == Scale::Desk {
            self.sampling.fk_samples = self.sampling.fk_samples.min(100_000);
            self.sampling.refine_window[0] = self.sampling.refine_window[0].min(0.35);
            if self.objective == ObjectiveKind::TotalTorque {
                self.optimizer.population = self.optimizer.population.min(30);
                self.optimizer.iterations = self.optimizer.iterations.min(10);
                self.ik.restarts = self.ik.restarts.min(3);
            }
        }
    }
}

/// Parses a `x,y,z` per-line point list (cm).  Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_point_list(text: &str, source: &str) -> Result<Vec<Vec3>> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::InvalidProblem(format!(
                "{source} line {}: expected 3 comma-separated values, got {}",
                i + 1,
                fields.len()
            )));
        }
        let mut v = [0.0_f64; 3];
        for (k, field) in fields.iter().enumerate() {
            v[k] = field.parse().map_err(|_| {
                Error::InvalidProblem(format!(
                    "{source} line {}: '{field}' is not a number",
                    i + 1
                ))
            })?;
            if !v[k].is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "{source} line {}: non-finite coordinate",
                    i + 1
                )));
            }
        }
        points.push(Vec3::new(v[0], v[1], v[2]));
    }
    Ok(points)
}

pub const BUILTIN_NAMES: [&str; 3] = ["mobile_platform", "deep_sea", "spot_welding"];

/// The three-joint arm template shared by the built-in scenarios: segment
/// bounds and per-joint minimum bend radii, with the wrist's tool segment
/// free on the last joint only.
fn builtin_arm(base_position: Vec3, base_tangent: Vec3, base_normal: Vec3) -> RobotTemplate {
    RobotTemplate {
        base_position,
        base_tangent,
        base_normal,
        joints: vec![
            JointTemplate {
                base_len: VarSpec::Range { lb: 4.0, ub: 30.0 },
                spine_len: VarSpec::Range {
                    lb: 2.675,
                    ub: 32.1,
                },
                top_len: VarSpec::Fixed(0.0),
                min_bend_radius: 10.22,
            },
            JointTemplate {
                base_len: VarSpec::Range { lb: 4.0, ub: 30.0 },
                spine_len: VarSpec::Range {
                    lb: 2.173,
                    ub: 26.076,
                },
                top_len: VarSpec::Fixed(0.0),
                min_bend_radius: 8.3,
            },
            JointTemplate {
                base_len: VarSpec::Range { lb: 4.0, ub: 30.0 },
                spine_len: VarSpec::Range {
                    lb: 2.173,
                    ub: 26.076,
                },
                top_len: VarSpec::Range { lb: 36.0, ub: 60.0 },
                min_bend_radius: 8.3,
            },
        ],
    }
}

/// Centers of the `size`-spaced voxel lattice (cells anchored at integer
/// multiples of `size`) that satisfy `keep`, scanned x-fastest from the
/// snapped minimum corner — with the matching grid info.
fn lattice_points(
    size: f64,
    lo: Vec3,
    hi: Vec3,
    keep: impl Fn(Vec3) -> bool,
) -> (Vec<Vec3>, GridInfo) {
    let snap = |v: f64| size * (v / size).floor();
    let origin = Vec3::new(snap(lo.x), snap(lo.y), snap(lo.z));
    let count = |o: f64, h: f64| (((h - o) / size - 1e-9).ceil().max(1.0)) as usize;
    let n = [
        count(origin.x, hi.x),
        count(origin.y, hi.y),
        count(origin.z, hi.z),
    ];
    let mut points = Vec::new();
    for iz in 0..n[2] {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                let c = origin
                    + Vec3::new(
                        (ix as f64 + 0.5) * size,
                        (iy as f64 + 0.5) * size,
                        (iz as f64 + 0.5) * size,
                    );
                if keep(c) {
                    points.push(c);
                }
            }
        }
    }
    (
        points,
        GridInfo {
            origin,
            voxel_size: size,
        },
    )
}

/// Target set of a built-in scenario at the given tolerance and required
/// fraction.
pub fn builtin_targets(name: &str, tolerance: f64, required_fraction: f64) -> Result<TargetSet> {
    let (points, grid) = match name {
        // Box envelope of a shelf rack facing the platform arm, voxelized
        // at 3 cm: all lattice cell centers inside the closed box.  The
        // rack stands off from the arm base so that coverage is limited by
        // total arm length rather than by close-range folding.
        "mobile_platform" => {
            let lo = Vec3::new(-21.0, 84.0, -15.0);
            let hi = Vec3::new(21.0, 108.0, 15.0);
            let (points, grid) = lattice_points(3.0, lo, hi, |c| {
                (lo.x..=hi.x).contains(&c.x)
                    && (lo.y..=hi.y).contains(&c.y)
                    && (lo.z..=hi.z).contains(&c.z)
            });
            (points, Some(grid))
        }
        // Two disjoint vertical cylinders: a wide inspection volume above
        // and a narrow access shaft below.
        "deep_sea" => {
            let wide_center = (0.0, 36.0);
            let wide_r = 25.5;
            let wide_z = (49.0, 61.0);
            let thin_center = (0.0, -20.5);
            let thin_r = 4.0;
            let thin_z = (8.0, 58.0);
            let lo = Vec3::new(
                wide_center.0 - wide_r,
                thin_center.1 - thin_r,
                thin_z.0,
            );
            let hi = Vec3::new(wide_center.0 + wide_r, wide_center.1 + wide_r, wide_z.1);
            let in_cylinder = |c: Vec3, center: (f64, f64), r: f64, z: (f64, f64)| {
                let dx = c.x - center.0;
                let dy = c.y - center.1;
                dx * dx + dy * dy <= r * r && c.z >= z.0 && c.z <= z.1
            };
            let (points, grid) = lattice_points(3.0, lo, hi, |c| {
                in_cylinder(c, wide_center, wide_r, wide_z)
                    || in_cylinder(c, thin_center, thin_r, thin_z)
            });
            (points, Some(grid))
        }
        // 32 weld points around a rectangular door seam; the seam arches
        // outward in x as it sweeps across the door.
        "spot_welding" => {
            let (y0, y1) = (10.9, 70.3);
            let (z0, z1) = (-120.8, 0.0);
            let w = y1 - y0;
            let h = z1 - z0;
            let perimeter = 2.0 * (w + h);
            let n = 32;
            let mut points = Vec::with_capacity(n);
            for k in 0..n {
                let mut s = perimeter * k as f64 / n as f64;
                let (y, z) = if s < w {
                    (y0 + s, z0)
                } else if {
                    s -= w;
                    s < h
                } {
                    (y1, z0 + s)
                } else if {
                    s -= h;
                    s < w
                } {
                    (y1 - s, z1)
                } else {
                    s -= w;
                    (y0, z1 - s)
                };
                let x = 13.7 + 24.0 * (std::f64::consts::PI * (y - y0) / w).sin();
                points.push(Vec3::new(x, y, z));
            }
            (points, None)
        }
        other => {
            return Err(Error::InvalidProblem(format!(
                "unknown builtin workspace '{other}' (available: {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    let targets = TargetSet {
        points,
        tolerance,
        required_fraction,
        grid,
    };
    targets.validate()?;
    Ok(targets)
}

/// A complete built-in scenario (workspace, robot template, load, budget).
pub fn builtin_problem(name: &str) -> Result<ProblemSpec> {
    let spec = match name {
        "mobile_platform" => ProblemSpec {
            name: "mobile_platform".into(),
            objective: ObjectiveKind::TotalLength,
            required_fraction: 0.95,
            tolerance: 1.0,
            robot: builtin_arm(
                Vec3::ZERO,
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(0.0, 0.0, 1.0),
            ),
            workspace: WorkspaceSource::Builtin {
                name: "mobile_platform".into(),
            },
            load: Some(LoadModel {
                payload_mass: 1.0,
                joint_masses: vec![0.2, 0.2, 0.2],
                gravity: Vec3::new(0.0, 0.0, -9.81),
            }),
            sampling: SamplingSettings {
                fk_samples: 3_000_000,
                refine_window: [0.9, 0.95],
            },
            optimizer: OptimizerSettings::default(),
            ik: IkSettings::default(),
        },
        "deep_sea" => ProblemSpec {
            name: "deep_sea".into(),
            objective: ObjectiveKind::TotalLength,
            required_fraction: 0.95,
            tolerance: 1.0,
            robot: builtin_arm(
                Vec3::ZERO,
                Vec3::new(0.0, 0.0, 1.0),
                Vec3::new(1.0, 0.0, 0.0),
            ),
            workspace: WorkspaceSource::Builtin {
                name: "deep_sea".into(),
            },
            load: Some(LoadModel {
                payload_mass: 1.0,
                joint_masses: vec![0.2, 0.2, 0.2],
                gravity: Vec3::new(0.0, 0.0, -9.81),
            }),
            sampling: SamplingSettings {
                fk_samples: 3_000_000,
                refine_window: [0.9, 0.95],
            },
            optimizer: OptimizerSettings::default(),
            ik: IkSettings::default(),
        },
        "spot_welding" => ProblemSpec {
            name: "spot_welding".into(),
            objective: ObjectiveKind::TotalTorque,
            required_fraction: 1.0,
            tolerance: 1.0,
            robot: builtin_arm(
                Vec3::new(75.0, 45.0, -70.0),
                Vec3::new(-1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ),
            workspace: WorkspaceSource::Builtin {
                name: "spot_welding".into(),
            },
            load: Some(LoadModel {
                payload_mass: 1.0,
                joint_masses: vec![1.0, 1.0, 1.0],
                gravity: Vec3::new(0.0, 0.0, -9.81),
            }),
            sampling: SamplingSettings::default(),
            optimizer: OptimizerSettings {
                iterations: 30,
                ..OptimizerSettings::default()
            },
            ik: IkSettings::default(),
        },
        other => {
            return Err(Error::InvalidProblem(format!(
                "unknown builtin problem '{other}' (available: {})",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

/// A problem bound to its materialized targets, ready for the optimizer.
pub struct DesignProblem {
    spec: ProblemSpec,
    targets: TargetSet,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl DesignProblem {
    /// Validates the spec and loads its workspace (relative paths resolved
    /// against `base_dir`).
    pub fn new(spec: ProblemSpec, base_dir: &Path) -> Result<Self> {
        spec.validate()?;
        let targets = spec.load_targets(base_dir)?;
        Ok(Self::with_targets(spec, targets))
    }

    /// Binds a spec to an already-materialized target set.
    pub fn with_targets(spec: ProblemSpec, targets: TargetSet) -> Self {
        let (lb, ub) = spec.robot.bounds();
        DesignProblem {
            spec,
            targets,
            lb,
            ub,
        }
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn targets(&self) -> &TargetSet {
        &self.targets
    }

    pub fn design(&self, x: &[f64]) -> Result<RobotDesign> {
        self.spec.robot.instantiate(x)
    }

    /// Full reachability analysis of one design vector (the same analysis
    /// `evaluate` runs, with the report exposed).
    pub fn analyze(&self, x: &[f64], seed: u64) -> Result<crate::reachability::ReachabilityReport> {
        let design = self.spec.robot.instantiate(x)?;
        let opts = self.spec.ik.options(self.spec.tolerance, seed);
        match self.spec.objective {
            ObjectiveKind::TotalLength => {
                let budget = self.spec.sampling.budget(seed);
                hybrid_reachability(&design, &self.targets, &budget, &opts)
            }
            ObjectiveKind::TotalTorque => {
                let load = self
                    .spec
                    .load
                    .as_ref()
                    .expect("torque objective validated to carry a load");
                min_torque_reachability(&design, &self.targets, load, &opts)
            }
        }
    }
}

impl DesignObjective for DesignProblem {
    fn dim(&self) -> usize {
        self.lb.len()
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lb.clone(), self.ub.clone())
    }

    fn required_fraction(&self) -> f64 {
        self.spec.required_fraction
    }

    fn evaluate(&self, x: &[f64], seed: u64) -> Result<Evaluation> {
        let report = self.analyze(x, seed)?;
        let objective = match self.spec.objective {
            ObjectiveKind::TotalLength => self.spec.robot.total_length(x),
            ObjectiveKind::TotalTorque => report
                .per_point_torque
                .as_ref()
                .expect("torque analysis reports per-point torques")
                .iter()
                .sum(),
        };
        Ok(Evaluation {
            objective,
            theta: report.theta,
        })
    }

    fn quick_objective(&self, x: &[f64]) -> Option<f64> {
        match self.spec.objective {
            ObjectiveKind::TotalLength => Some(self.spec.robot.total_length(x)),
            ObjectiveKind::TotalTorque => None,
        }
    }
}
