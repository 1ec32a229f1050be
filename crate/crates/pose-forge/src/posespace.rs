//! Uniform viewpoint distribution on spheres, pose-label generation, and
//! label assignment.
//!
//! Camera locations are spread by relaxing an inverse-square repulsion
//! energy over unit vectors (projected gradient descent with a backtracking
//! line search). A label set is the cross product of range shells, relaxed
//! camera locations, and boresight rolls; assignment picks the label of the
//! nearest range shell whose attitude minimizes the folded angular distance
//! to the query pose.

use std::fmt::Write as _;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rotmath::{AxisAngle, Quaternion, RotationMatrix, Vec3};

mod hull;

pub use hull::{convex_hull_triangulation, unique_edges};

/// Default relative-energy-decrease termination threshold for the
/// repulsion descent.
pub const DEFAULT_DESCENT_TOL: f64 = 1e-12;

/// A returned configuration must have per-point tangent gradient norms
/// below this.
pub const GRADIENT_TOL: f64 = 1e-6;

const MAX_DESCENT_ITERS: usize = 100_000;
const ARMIJO_C: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum PoseSpaceError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points {i} and {j} are closer than {min_sep:e}")]
    CoincidentPoints { i: usize, j: usize, min_sep: f64 },
    #[error("point {i} is not unit length (|p| = {norm})")]
    NotOnSphere { i: usize, norm: f64 },
    #[error("degenerate point configuration: {reason}")]
    DegenerateConfiguration { reason: String },
    #[error(
        "descent did not converge: tangent gradient norm {grad_norm:e} after {iterations} iterations"
    )]
    NotConverged { grad_norm: f64, iterations: usize },
    #[error("invalid discretization: {reason}")]
    InvalidSpec { reason: String },
    #[error("label set is empty")]
    EmptyLabelSet,
    #[error("label file parse error at line {line}: {reason}")]
    LabelParse { line: usize, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> PoseSpaceError {
    PoseSpaceError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A validated set of distinct unit vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePoints {
    points: Vec<Vec3>,
}

impl SpherePoints {
    pub fn new(points: Vec<Vec3>) -> Result<Self, PoseSpaceError> {
        for (i, p) in points.iter().enumerate() {
            let norm = p.norm();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(PoseSpaceError::NotOnSphere { i, norm });
            }
        }
        if points.len() >= 2 {
            for i in 0..points.len() {
                for j in (i + 1)..points.len() {
                    if (points[i] - points[j]).norm() <= 1e-6 {
                        return Err(PoseSpaceError::CoincidentPoints {
                            i,
                            j,
                            min_sep: 1e-6,
                        });
                    }
                }
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sum of inverse chord separations over all unordered pairs.
pub fn thomson_energy(pts: &SpherePoints) -> Result<f64, PoseSpaceError> {
    if pts.len() < 2 {
        return Err(PoseSpaceError::TooFewPoints {
            needed: 2,
            got: pts.len(),
        });
    }
    energy_raw(pts.points()).ok_or(PoseSpaceError::CoincidentPoints {
        i: 0,
        j: 0,
        min_sep: 1e-12,
    })
}

/// Per-point Euclidean gradient of the energy, projected onto the tangent
/// plane of the sphere at each point.
pub fn thomson_gradient(pts: &SpherePoints) -> Result<Vec<Vec3>, PoseSpaceError> {
    if pts.len() < 2 {
        return Err(PoseSpaceError::TooFewPoints {
            needed: 2,
            got: pts.len(),
        });
    }
    gradient_raw(pts.points()).ok_or(PoseSpaceError::CoincidentPoints {
        i: 0,
        j: 0,
        min_sep: 1e-12,
    })
}

fn energy_raw(points: &[Vec3]) -> Option<f64> {
    let mut e = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let s = (points[i] - points[j]).norm();
            if s < 1e-12 {
                return None;
            }
            e += 1.0 / s;
        }
    }
    Some(e)
}

fn gradient_raw(points: &[Vec3]) -> Option<Vec<Vec3>> {
    let n = points.len();
    let mut grad = vec![Vec3::zero(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points[i] - points[j];
            let s = d.norm();
            if s < 1e-12 {
                return None;
            }
            // d/dp_i of 1/|p_i - p_j| = -(p_i - p_j)/s^3
            let g = d * (-1.0 / (s * s * s));
            grad[i] = grad[i] + g;
            grad[j] = grad[j] - g;
        }
    }
    for (g, p) in grad.iter_mut().zip(points) {
        *g = *g - *p * g.dot(*p);
    }
    Some(grad)
}

struct DescentOutcome {
    grad_norm: f64,
    iterations: usize,
}

/// Projected gradient descent with Armijo backtracking; mutates `points`
/// in place and re-normalizes after every step.
fn descend(points: &mut [Vec3], max_iters: usize, tol: f64) -> DescentOutcome {
    let mut energy = energy_raw(points).expect("distinct start points");
    let mut step = 1.0 / points.len() as f64;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;

    while iterations < max_iters {
        iterations += 1;
        let grad = gradient_raw(points).expect("points stay distinct");
        grad_norm = grad.iter().map(|g| g.norm()).fold(0.0, f64::max);
        if grad_norm < GRADIENT_TOL * 0.1 {
            break;
        }
        let slope: f64 = grad.iter().map(|g| -g.norm_squared()).sum();

        // Backtracking: halve until the Armijo condition holds. Near the
        // optimum the predicted decrease drops below what f64 can resolve
        // in the total energy; such steps are accepted as long as the
        // energy does not measurably increase, otherwise the search would
        // stall with the gradient still above tolerance.
        let resolution_floor = energy.abs() * 1e-14;
        let mut alpha = step * 2.0;
        let mut accepted = None;
        while alpha > 1e-18 {
            let trial: Vec<Vec3> = points
                .iter()
                .zip(&grad)
                .map(|(p, g)| (*p - *g * alpha).normalized().expect("step keeps norm"))
                .collect();
            if let Some(e_trial) = energy_raw(&trial) {
                let predicted = ARMIJO_C * alpha * slope;
                if e_trial <= energy + predicted
                    || (predicted.abs() <= resolution_floor && e_trial <= energy + resolution_floor)
                {
                    accepted = Some((trial, e_trial, alpha));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some((trial, e_trial, alpha)) = accepted else {
            break; // line search stalled at machine precision
        };
        let decrease = (energy - e_trial) / energy.abs().max(f64::MIN_POSITIVE);
        points.copy_from_slice(&trial);
        energy = e_trial;
        step = alpha;
        // The decrease test alone can fire while the gradient is still above
        // tolerance (steps shrink quadratically near the optimum); keep
        // polishing until the gradient certifies convergence.
        if decrease < tol && grad_norm < GRADIENT_TOL {
            break;
        }
    }

    if grad_norm.is_infinite() {
        // No iteration ran (max_iters == 0); report the true gradient.
        grad_norm = gradient_raw(points)
            .map(|g| g.iter().map(|v| v.norm()).fold(0.0, f64::max))
            .unwrap_or(f64::INFINITY);
    }
    DescentOutcome {
        grad_norm,
        iterations,
    }
}

fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n2 = v.norm_squared();
        if n2 > 1e-6 && n2 <= 1.0 {
            return v * (1.0 / n2.sqrt());
        }
    }
}

/// Relax `n` points from a seeded random start until the energy stops
/// decreasing (relative decrease below `tol`, default
/// [`DEFAULT_DESCENT_TOL`]). The result is a local optimum whose per-point
/// tangent gradient norm is below [`GRADIENT_TOL`]; anything less converged
/// is reported as an error rather than returned silently.
pub fn distribute_points(n: usize, seed: u64, tol: f64) -> Result<SpherePoints, PoseSpaceError> {
    if n == 0 {
        return Err(PoseSpaceError::TooFewPoints { needed: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec3> = (0..n).map(|_| random_unit_vector(&mut rng)).collect();
    if n == 1 {
        return SpherePoints::new(points);
    }

    let outcome = descend(&mut points, MAX_DESCENT_ITERS, tol);
    if outcome.grad_norm >= GRADIENT_TOL {
        return Err(PoseSpaceError::NotConverged {
            grad_norm: outcome.grad_norm,
            iterations: outcome.iterations,
        });
    }
    SpherePoints::new(points)
}

/// Refine a configuration by inserting the midpoint of every hull edge
/// (projected back to the sphere) and running a short polish descent.
/// Output size is `vertices + unique hull edges`.
pub fn subdivide(pts: &SpherePoints) -> Result<SpherePoints, PoseSpaceError> {
    if pts.len() < 4 {
        return Err(PoseSpaceError::TooFewPoints {
            needed: 4,
            got: pts.len(),
        });
    }
    let faces = hull::convex_hull_triangulation(pts.points())?;
    let mut points = pts.points().to_vec();
    for (a, b) in hull::unique_edges(&faces) {
        let mid = (points[a] + points[b]) * 0.5;
        let unit = mid
            .normalized()
            .ok_or_else(|| PoseSpaceError::DegenerateConfiguration {
                reason: format!("edge ({a},{b}) joins antipodal points"),
            })?;
        points.push(unit);
    }
    descend(&mut points, 500, DEFAULT_DESCENT_TOL);
    SpherePoints::new(points)
}

/// Attitude `q(R_BC)` of a camera sitting on the ray `r * viewpoint` and
/// looking at the body-frame origin, rolled about its boresight.
///
/// Camera frame: +x right, +y down, +z boresight. The image "up" direction
/// comes from Gram-Schmidt of body +z against the boresight, with body +x
/// as the fallback reference when the viewpoint is within 1e-6 of a pole.
pub fn camera_attitude_for(viewpoint: Vec3, roll_deg: f64) -> Quaternion {
    let boresight = -viewpoint; // unit: viewpoint is unit
    let up_ref = if viewpoint.dot(Vec3::unit_z()).abs() > 1.0 - 1e-6 {
        Vec3::unit_x()
    } else {
        Vec3::unit_z()
    };
    let up = (up_ref - boresight * up_ref.dot(boresight))
        .normalized()
        .expect("reference is not parallel to boresight");
    let y_cam = -up;
    let x_cam = y_cam.cross(boresight);

    // Rows of R_BC are the camera axes expressed in the body frame.
    let look = Quaternion::from_rotation_matrix(&RotationMatrix::from_rows_unchecked([
        x_cam.to_array(),
        y_cam.to_array(),
        boresight.to_array(),
    ]));
    let roll = Quaternion::from_axis_angle(&AxisAngle::new(Vec3::unit_z(), roll_deg.rem_euclid(360.0)))
        .expect("unit z axis");
    roll.multiply(&look)
}

/// Discretization of the pose space: range shells x camera locations per
/// shell x boresight rolls per location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationSpec {
    /// Camera-to-target ranges in meters, strictly increasing.
    pub radii_m: Vec<f64>,
    /// Camera locations per range shell.
    pub camera_locations: usize,
    /// Rolls about the boresight per camera location.
    pub boresight_rolls: usize,
}

impl DiscretizationSpec {
    pub fn validate(&self) -> Result<(), PoseSpaceError> {
        if self.radii_m.is_empty() {
            return Err(PoseSpaceError::InvalidSpec {
                reason: "radii_m must be non-empty".into(),
            });
        }
        for w in self.radii_m.windows(2) {
            if w[1] <= w[0] {
                return Err(PoseSpaceError::InvalidSpec {
                    reason: "radii_m must be strictly increasing".into(),
                });
            }
        }
        if self.radii_m[0] <= 0.0 {
            return Err(PoseSpaceError::InvalidSpec {
                reason: "radii_m must be strictly positive".into(),
            });
        }
        if self.camera_locations == 0 {
            return Err(PoseSpaceError::InvalidSpec {
                reason: "camera_locations must be at least 1".into(),
            });
        }
        if self.boresight_rolls == 0 {
            return Err(PoseSpaceError::InvalidSpec {
                reason: "boresight_rolls must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn label_count(&self) -> usize {
        self.radii_m.len() * self.camera_locations * self.boresight_rolls
    }
}

/// One cell of the discretized pose space.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseLabel {
    pub id: usize,
    /// Camera-to-target range of the cell, meters.
    pub range_m: f64,
    /// Representative camera attitude `q(R_BC)`.
    pub attitude: Quaternion,
    /// Representative camera location in the body frame, meters.
    pub camera_position: Vec3,
}

/// Continuous ground-truth pose of one image: attitude `q(R_BC)` plus the
/// target origin expressed in camera-frame coordinates (`t_BC`, meters).
/// For a centered pose at range `r` the position is `(0, 0, r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    pub attitude: Quaternion,
    pub position: Vec3,
}

impl CameraPose {
    pub fn new(attitude: Quaternion, position: Vec3) -> Self {
        Self { attitude, position }
    }

    /// Centered pose: camera on the ray `range * viewpoint`, boresight at
    /// the origin, with the given roll.
    pub fn centered(viewpoint: Vec3, roll_deg: f64, range_m: f64) -> Self {
        Self {
            attitude: camera_attitude_for(viewpoint, roll_deg),
            position: Vec3::new(0.0, 0.0, range_m),
        }
    }

    /// Camera-to-target distance, meters.
    pub fn range_m(&self) -> f64 {
        self.position.norm()
    }

    /// Camera origin expressed in the body frame.
    pub fn camera_position_in_body(&self) -> Vec3 {
        // 0 = R_BC * c_B + t_BC  =>  c_B = -R_BC^T * t_BC
        -self.attitude.conjugate().rotate(self.position)
    }
}

/// Generate the full label set for a discretization. One point
/// distribution is shared by every range shell; ids run in
/// (radius, point, roll) lexicographic order.
pub fn generate_labels(
    spec: &DiscretizationSpec,
    seed: u64,
) -> Result<Vec<PoseLabel>, PoseSpaceError> {
    spec.validate()?;
    let points = distribute_points(spec.camera_locations, seed, DEFAULT_DESCENT_TOL)?;
    let roll_step = 360.0 / spec.boresight_rolls as f64;
    let mut labels = Vec::with_capacity(spec.label_count());
    for &radius in &spec.radii_m {
        for point in points.points() {
            for k in 0..spec.boresight_rolls {
                labels.push(PoseLabel {
                    id: labels.len(),
                    range_m: radius,
                    attitude: camera_attitude_for(*point, k as f64 * roll_step),
                    camera_position: *point * radius,
                });
            }
        }
    }
    Ok(labels)
}

/// Assign the pose to the label minimizing folded angular distance within
/// the nearest range shell. Ties break toward the lowest label id.
pub fn assign_label(pose: &CameraPose, labels: &[PoseLabel]) -> Result<usize, PoseSpaceError> {
    if labels.is_empty() {
        return Err(PoseSpaceError::EmptyLabelSet);
    }
    let range = pose.range_m();
    let mut best_radius = labels[0].range_m;
    for l in labels {
        if (l.range_m - range).abs() < (best_radius - range).abs() {
            best_radius = l.range_m;
        }
    }
    let mut best: Option<(f64, usize)> = None;
    for l in labels {
        if l.range_m != best_radius {
            continue;
        }
        let d = pose.attitude.angular_distance_deg(&l.attitude);
        match best {
            Some((bd, _)) if bd <= d => {}
            _ => best = Some((d, l.id)),
        }
    }
    Ok(best.expect("at least one label matches the nearest radius").1)
}

/// Minimum folded angular distance between any two same-shell labels, or
/// `None` when no shell has two labels. Dataset builders use half of this
/// as the jitter cap that keeps perturbed poses inside their source cell.
pub fn min_label_gap_deg(labels: &[PoseLabel]) -> Option<f64> {
    let mut min_gap: Option<f64> = None;
    for (i, a) in labels.iter().enumerate() {
        for b in &labels[i + 1..] {
            if a.range_m != b.range_m {
                continue;
            }
            let d = a.attitude.angular_distance_deg(&b.attitude);
            min_gap = Some(min_gap.map_or(d, |m: f64| m.min(d)));
        }
    }
    min_gap
}

/// A named label set as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    pub name: String,
    pub labels: Vec<PoseLabel>,
}

impl LabelSet {
    pub fn new(name: impl Into<String>, labels: Vec<PoseLabel>) -> Self {
        Self {
            name: name.into(),
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Serialize a label set to the line-delimited text format:
/// one record per line, `id range_m qs qx qy qz px py pz`, with a header
/// comment documenting the columns. Floats use the shortest
/// round-trippable decimal form.
pub fn format_labels(set: &LabelSet) -> String {
    let mut out = String::new();
    out.push_str("# pose-forge label set v1\n");
    let _ = writeln!(out, "# name: {}", set.name);
    out.push_str("# columns: id range_m qs qx qy qz px py pz\n");
    for l in &set.labels {
        let q = l.attitude.components();
        let p = l.camera_position;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            l.id, l.range_m, q[0], q[1], q[2], q[3], p.x, p.y, p.z
        );
    }
    out
}

pub fn write_labels(set: &LabelSet, path: &Path) -> Result<(), PoseSpaceError> {
    std::fs::write(path, format_labels(set)).map_err(|e| io_err(path, e))
}

pub fn parse_labels(text: &str, fallback_name: &str) -> Result<LabelSet, PoseSpaceError> {
    let mut name = fallback_name.to_string();
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some(n) = rest.trim().strip_prefix("name:") {
                name = n.trim().to_string();
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(PoseSpaceError::LabelParse {
                line,
                reason: format!("expected 9 fields, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str, what: &str| -> Result<f64, PoseSpaceError> {
            s.parse().map_err(|_| PoseSpaceError::LabelParse {
                line,
                reason: format!("invalid {what}: {s:?}"),
            })
        };
        let id: usize = fields[0].parse().map_err(|_| PoseSpaceError::LabelParse {
            line,
            reason: format!("invalid id: {:?}", fields[0]),
        })?;
        if id != labels.len() {
            return Err(PoseSpaceError::LabelParse {
                line,
                reason: format!("ids must be dense and ordered; expected {}, got {id}", labels.len()),
            });
        }
        let range_m = parse_f(fields[1], "range")?;
        let q = Quaternion::from_components([
            parse_f(fields[2], "qs")?,
            parse_f(fields[3], "qx")?,
            parse_f(fields[4], "qy")?,
            parse_f(fields[5], "qz")?,
        ])
        .map_err(|e| PoseSpaceError::LabelParse {
            line,
            reason: e.to_string(),
        })?;
        labels.push(PoseLabel {
            id,
            range_m,
            attitude: q,
            camera_position: Vec3::new(
                parse_f(fields[6], "px")?,
                parse_f(fields[7], "py")?,
                parse_f(fields[8], "pz")?,
            ),
        });
    }
    Ok(LabelSet::new(name, labels))
}

pub fn read_labels(path: &Path) -> Result<LabelSet, PoseSpaceError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "labels".into());
    parse_labels(&text, &fallback)
}
