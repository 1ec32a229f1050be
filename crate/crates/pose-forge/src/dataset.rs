//! Dataset assembly: sample poses, render image variants, assign labels,
//! split, and persist a manifest.
//!
//! A dataset directory holds `images/NNNNNN.pgm` files plus
//! `manifest.jsonl`, a line-delimited JSON file whose first record is a
//! header (spec echo and label-set checksums) followed by one record per
//! image. Everything downstream (training, evaluation) works from the
//! manifest alone.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::posespace::{
    assign_label, generate_labels, min_label_gap_deg, CameraPose, DiscretizationSpec, LabelSet,
    PoseSpaceError,
};
use crate::render::{
    add_gaussian_noise, apply_offset, encode_pgm, read_pgm, render, CameraIntrinsics, ImageBuffer,
    LightingSpec, TargetModel,
};
use crate::rotmath::{AxisAngle, Quaternion, Vec3};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const DEFAULT_SPLIT_RATIOS: [f64; 3] = [0.6, 0.2, 0.2];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid dataset spec: {reason}")]
    InvalidSpec { reason: String },
    #[error(transparent)]
    PoseSpace(#[from] PoseSpaceError),
    #[error("entry {index}: {detail}")]
    Entry { index: usize, detail: String },
    #[error("manifest record {record}: {detail}")]
    Schema { record: usize, detail: String },
    #[error("integrity failure for {path}: {detail}")]
    Integrity { path: String, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> DatasetError {
    DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// How image poses are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ImagePoseMode {
    /// Cycle through the cells of `discretization`, perturbing each cell
    /// attitude by a random rotation no larger than half the smallest
    /// same-shell gap between cells (so the perturbed pose stays in its
    /// source cell).
    OnGrid { count: usize },
    /// Independent uniform poses: viewpoint uniform on the sphere, roll
    /// uniform in [0, 360), range uniform over `radius_range` meters.
    Random { count: usize, radius_range: [f64; 2] },
}

impl ImagePoseMode {
    pub fn count(&self) -> usize {
        match self {
            ImagePoseMode::OnGrid { count } | ImagePoseMode::Random { count, .. } => *count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    /// Pose grid the images are drawn from (`on_grid` mode) or bucketed
    /// against (`random` mode uses only its own radius range).
    pub discretization: DiscretizationSpec,
    pub image_poses: ImagePoseMode,
    #[serde(default)]
    pub noise_variance: f64,
    /// Camera-frame target position override (x, y lateral, z boresight
    /// range, meters); `None` keeps targets centered.
    #[serde(default)]
    pub offset: Option<[f64; 3]>,
    #[serde(default = "default_ratios")]
    pub split_ratios: [f64; 3],
    pub seed: u64,
}

fn default_ratios() -> [f64; 3] {
    DEFAULT_SPLIT_RATIOS
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        self.discretization
            .validate()
            .map_err(DatasetError::PoseSpace)?;
        let sum: f64 = self.split_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.split_ratios.iter().any(|r| *r < 0.0) {
            return Err(DatasetError::InvalidSpec {
                reason: format!("split ratios {:?} must be non-negative and sum to 1", self.split_ratios),
            });
        }
        if self.noise_variance < 0.0 {
            return Err(DatasetError::InvalidSpec {
                reason: "noise_variance must be non-negative".into(),
            });
        }
        if let Some(o) = self.offset {
            if o[2] <= 0.0 {
                return Err(DatasetError::InvalidSpec {
                    reason: format!("offset z {} places the target behind the camera", o[2]),
                });
            }
        }
        match &self.image_poses {
            ImagePoseMode::OnGrid { count } => {
                if *count == 0 {
                    return Err(DatasetError::InvalidSpec {
                        reason: "image count must be positive".into(),
                    });
                }
            }
            ImagePoseMode::Random { count, radius_range } => {
                if *count == 0 {
                    return Err(DatasetError::InvalidSpec {
                        reason: "image count must be positive".into(),
                    });
                }
                if !(radius_range[0] > 0.0 && radius_range[1] >= radius_range[0]) {
                    return Err(DatasetError::InvalidSpec {
                        reason: format!("invalid radius_range {radius_range:?}"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// One rendered image with its ground truth and bookkeeping.
#[derive(Clone, Debug)]
pub struct ImageSample {
    pub pixels: ImageBuffer,
    pub pose: CameraPose,
    /// Label id per label-set name.
    pub label_ids: BTreeMap<String, usize>,
    pub noise_var: f64,
    pub offset: Option<Vec3>,
    pub split: Split,
}

/// Serialized pose: quaternion `[s, vx, vy, vz]` plus camera-frame target
/// position `[x, y, z]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub q: [f64; 4],
    pub t: [f64; 3],
}

impl PoseRecord {
    pub fn from_pose(pose: &CameraPose) -> Self {
        Self {
            q: pose.attitude.components(),
            t: pose.position.to_array(),
        }
    }

    pub fn to_pose(&self) -> Result<CameraPose, DatasetError> {
        let attitude = Quaternion::from_components(self.q).map_err(|e| DatasetError::Schema {
            record: 0,
            detail: format!("invalid quaternion: {e}"),
        })?;
        Ok(CameraPose::new(attitude, Vec3::from_array(self.t)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSetRef {
    pub name: String,
    pub checksum: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub version: u32,
    pub spec: DatasetSpec,
    pub label_sets: Vec<LabelSetRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    /// Image path relative to the manifest's directory.
    pub image: String,
    pub sha256: String,
    pub pose: PoseRecord,
    pub labels: BTreeMap<String, usize>,
    pub noise_var: f64,
    pub offset: Option<[f64; 3]>,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Primary label-set name (the one splits are stratified by).
    pub fn primary_label_set(&self) -> &str {
        &self.header.label_sets[0].name
    }
}

/// Checksum of a label set's canonical text form, as stored in manifests.
pub fn label_set_checksum(set: &LabelSet) -> String {
    hex_digest(crate::posespace::format_labels(set).as_bytes())
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write as _;
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Stable per-image seed derived from the dataset seed, so parallel
/// generation is order-independent.
fn derive_seed(base: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
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

struct PoseSampler<'a> {
    spec: &'a DatasetSpec,
    grid: Vec<crate::posespace::PoseLabel>,
    jitter_cap_deg: f64,
}

impl<'a> PoseSampler<'a> {
    fn new(spec: &'a DatasetSpec) -> Result<Self, DatasetError> {
        let (grid, jitter_cap_deg) = match &spec.image_poses {
            ImagePoseMode::OnGrid { .. } => {
                let grid = generate_labels(&spec.discretization, spec.seed)?;
                // Half the smallest same-shell gap keeps every perturbed
                // pose nearest its source cell; a single-cell grid has no
                // gap, so fall back to a quarter turn.
                let cap = min_label_gap_deg(&grid).map_or(90.0, |g| g / 2.0);
                (grid, cap)
            }
            ImagePoseMode::Random { .. } => (Vec::new(), 0.0),
        };
        Ok(Self {
            spec,
            grid,
            jitter_cap_deg,
        })
    }

    fn sample(&self, index: usize) -> Result<CameraPose, DatasetError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(index as u64 + 1);
        let pose = match &self.spec.image_poses {
            ImagePoseMode::OnGrid { .. } => {
                let cell = &self.grid[index % self.grid.len()];
                let axis = random_unit_vector(&mut rng);
                let angle = rng.random::<f64>() * self.jitter_cap_deg;
                let jitter = Quaternion::from_axis_angle(&AxisAngle::new(axis, angle))
                    .expect("axis is unit");
                CameraPose::new(
                    jitter.multiply(&cell.attitude),
                    Vec3::new(0.0, 0.0, cell.range_m),
                )
            }
            ImagePoseMode::Random { radius_range, .. } => {
                let viewpoint = random_unit_vector(&mut rng);
                let roll = rng.random_range(0.0..360.0);
                let range = if radius_range[0] == radius_range[1] {
                    radius_range[0]
                } else {
                    rng.random_range(radius_range[0]..radius_range[1])
                };
                CameraPose::centered(viewpoint, roll, range)
            }
        };
        match self.spec.offset {
            Some(o) => apply_offset(&pose, Vec3::from_array(o)).map_err(|e| DatasetError::Entry {
                index,
                detail: e.to_string(),
            }),
            None => Ok(pose),
        }
    }
}

/// Render one dataset image and attach its ground truth. Split is assigned
/// later by the builder; standalone callers get `Train`.
fn generate_sample(
    sampler: &PoseSampler<'_>,
    index: usize,
    label_sets: &[LabelSet],
    model: &TargetModel,
    intrinsics: &CameraIntrinsics,
    lighting: &LightingSpec,
) -> Result<ImageSample, DatasetError> {
    let spec = sampler.spec;
    let pose = sampler.sample(index)?;
    let entry_err = |e: &dyn std::fmt::Display| DatasetError::Entry {
        index,
        detail: e.to_string(),
    };
    let clean = render(model, &pose, intrinsics, lighting).map_err(|e| entry_err(&e))?;
    let pixels = if spec.noise_variance > 0.0 {
        add_gaussian_noise(&clean, spec.noise_variance, derive_seed(spec.seed, index))
    } else {
        clean
    };
    let mut label_ids = BTreeMap::new();
    for set in label_sets {
        let id = assign_label(&pose, &set.labels).map_err(|e| entry_err(&e))?;
        label_ids.insert(set.name.clone(), id);
    }
    Ok(ImageSample {
        pixels,
        pose,
        label_ids,
        noise_var: spec.noise_variance,
        offset: spec.offset.map(Vec3::from_array),
        split: Split::Train,
    })
}

/// Build a dataset directory: render every image, assign labels against
/// each provided label set, stratify splits by the first set, and write
/// `images/` plus `manifest.jsonl` under `out_dir`. Fully deterministic
/// given the spec seed; entries render in parallel.
pub fn build_dataset(
    spec: &DatasetSpec,
    label_sets: &[LabelSet],
    model: &TargetModel,
    intrinsics: &CameraIntrinsics,
    lighting: &LightingSpec,
    out_dir: &Path,
) -> Result<DatasetManifest, DatasetError> {
    spec.validate()?;
    if label_sets.is_empty() {
        return Err(DatasetError::InvalidSpec {
            reason: "at least one label set is required".into(),
        });
    }
    let sampler = PoseSampler::new(spec)?;
    let count = spec.image_poses.count();

    let images_dir = out_dir.join("images");
    std::fs::create_dir_all(&images_dir).map_err(|e| io_err(&images_dir, e))?;

    let mut entries: Vec<ManifestEntry> = (0..count)
        .into_par_iter()
        .map(|index| {
            let sample = generate_sample(&sampler, index, label_sets, model, intrinsics, lighting)?;
            let bytes = encode_pgm(&sample.pixels);
            let rel = format!("images/{index:06}.pgm");
            let path = out_dir.join(&rel);
            std::fs::write(&path, &bytes).map_err(|e| io_err(&path, e))?;
            Ok(ManifestEntry {
                index,
                image: rel,
                sha256: hex_digest(&bytes),
                pose: PoseRecord::from_pose(&sample.pose),
                labels: sample.label_ids,
                noise_var: sample.noise_var,
                offset: sample.offset.map(Vec3::to_array),
                split: Split::Train,
            })
        })
        .collect::<Result<_, DatasetError>>()?;

    let primary = &label_sets[0].name;
    let ids: Vec<usize> = entries.iter().map(|e| e.labels[primary]).collect();
    let splits = stratified_split(&ids, spec.split_ratios, spec.seed);
    for (entry, split) in entries.iter_mut().zip(splits) {
        entry.split = split;
    }

    let manifest = DatasetManifest {
        header: ManifestHeader {
            version: 1,
            spec: spec.clone(),
            label_sets: label_sets
                .iter()
                .map(|s| LabelSetRef {
                    name: s.name.clone(),
                    checksum: label_set_checksum(s),
                    count: s.len(),
                })
                .collect(),
        },
        entries,
    };
    write_manifest(&manifest, &out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Stratified split assignment: within each class, shuffle with a
/// class-specific stream of `seed` and cut at the ratio boundaries.
/// Rounding remainders go to train; classes with fewer than 3 members go
/// entirely to train (with a warning).
pub fn stratified_split(class_ids: &[usize], ratios: [f64; 3], seed: u64) -> Vec<Split> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in class_ids.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut out = vec![Split::Train; class_ids.len()];
    for (class, mut members) in by_class {
        if members.len() < 3 {
            log::warn!(
                "class {class} has only {} member(s); all assigned to train",
                members.len()
            );
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(class as u64);
        use rand::seq::SliceRandom;
        members.shuffle(&mut rng);
        let k = members.len();
        let n_val = (k as f64 * ratios[1]).floor() as usize;
        let n_test = (k as f64 * ratios[2]).floor() as usize;
        for (rank, &idx) in members.iter().enumerate() {
            out[idx] = if rank < n_val {
                Split::Validation
            } else if rank < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            };
        }
    }
    out
}

/// Re-assign the manifest's splits (stratified by the primary label set).
pub fn resplit(
    manifest: &mut DatasetManifest,
    ratios: [f64; 3],
    seed: u64,
) -> Result<(), DatasetError> {
    let sum: f64 = ratios.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || ratios.iter().any(|r| *r < 0.0) {
        return Err(DatasetError::InvalidSpec {
            reason: format!("split ratios {ratios:?} must be non-negative and sum to 1"),
        });
    }
    let primary = manifest.primary_label_set().to_string();
    let ids: Vec<usize> = manifest
        .entries
        .iter()
        .map(|e| e.labels[&primary])
        .collect();
    let splits = stratified_split(&ids, ratios, seed);
    for (e, s) in manifest.entries.iter_mut().zip(splits) {
        e.split = s;
    }
    Ok(())
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<(), DatasetError> {
    let mut out = String::new();
    out.push_str(
        &serde_json::to_string(&WireRecord::Header(manifest.header.clone()))
            .expect("header serializes"),
    );
    out.push('\n');
    for entry in &manifest.entries {
        out.push_str(
            &serde_json::to_string(&WireRecord::Entry(entry.clone())).expect("entry serializes"),
        );
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum WireRecord {
    Header(ManifestHeader),
    Entry(ManifestEntry),
}

/// Parse a manifest. Unknown fields in records are tolerated with a
/// warning (forward compatibility); structural violations are hard errors
/// that name the offending record.
pub fn read_manifest(path: &Path) -> Result<DatasetManifest, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_manifest(&text)
}

pub fn parse_manifest(text: &str) -> Result<DatasetManifest, DatasetError> {
    let mut header: Option<ManifestHeader> = None;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let record = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| DatasetError::Schema {
                record,
                detail: e.to_string(),
            })?;
        warn_on_unknown_fields(record, &value);
        let wire: WireRecord =
            serde_json::from_value(value).map_err(|e| DatasetError::Schema {
                record,
                detail: e.to_string(),
            })?;
        match wire {
            WireRecord::Header(h) => {
                if header.is_some() {
                    return Err(DatasetError::Schema {
                        record,
                        detail: "duplicate header record".into(),
                    });
                }
                header = Some(h);
            }
            WireRecord::Entry(e) => entries.push(e),
        }
    }
    let header = header.ok_or(DatasetError::Schema {
        record: 1,
        detail: "missing header record".into(),
    })?;
    let manifest = DatasetManifest { header, entries };
    validate_manifest(&manifest)?;
    Ok(manifest)
}

fn warn_on_unknown_fields(record: usize, value: &serde_json::Value) {
    const HEADER_KEYS: &[&str] = &["kind", "version", "spec", "label_sets"];
    const ENTRY_KEYS: &[&str] = &[
        "kind", "index", "image", "sha256", "pose", "labels", "noise_var", "offset", "split",
    ];
    let Some(obj) = value.as_object() else { return };
    let known: &[&str] = match obj.get("kind").and_then(|k| k.as_str()) {
        Some("header") => HEADER_KEYS,
        _ => ENTRY_KEYS,
    };
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            log::warn!("manifest record {record}: ignoring unknown field {key:?}");
        }
    }
}

fn validate_manifest(manifest: &DatasetManifest) -> Result<(), DatasetError> {
    let counts: BTreeMap<&str, usize> = manifest
        .header
        .label_sets
        .iter()
        .map(|s| (s.name.as_str(), s.count))
        .collect();
    for (i, entry) in manifest.entries.iter().enumerate() {
        for (name, &id) in &entry.labels {
            match counts.get(name.as_str()) {
                Some(&count) if id < count => {}
                Some(&count) => {
                    return Err(DatasetError::Schema {
                        record: i + 2,
                        detail: format!("label id {id} out of range for {name:?} (count {count})"),
                    });
                }
                None => {
                    return Err(DatasetError::Schema {
                        record: i + 2,
                        detail: format!("unknown label set {name:?}"),
                    });
                }
            }
        }
        entry.pose.to_pose().map_err(|e| DatasetError::Schema {
            record: i + 2,
            detail: e.to_string(),
        })?;
    }
    Ok(())
}

/// Re-hash every referenced image and compare against the manifest.
pub fn verify_manifest(manifest: &DatasetManifest, base_dir: &Path) -> Result<(), DatasetError> {
    for entry in &manifest.entries {
        let path = base_dir.join(&entry.image);
        let bytes = std::fs::read(&path).map_err(|e| DatasetError::Integrity {
            path: path.display().to_string(),
            detail: format!("cannot read referenced image: {e}"),
        })?;
        let digest = hex_digest(&bytes);
        if digest != entry.sha256 {
            return Err(DatasetError::Integrity {
                path: path.display().to_string(),
                detail: format!("hash mismatch: manifest {}, file {digest}", entry.sha256),
            });
        }
    }
    Ok(())
}

/// Load the image referenced by an entry and bundle it with the entry's
/// ground truth.
pub fn load_sample(entry: &ManifestEntry, base_dir: &Path) -> Result<ImageSample, DatasetError> {
    let path = base_dir.join(&entry.image);
    let pixels = read_pgm(&path).map_err(|e| DatasetError::Entry {
        index: entry.index,
        detail: e.to_string(),
    })?;
    Ok(ImageSample {
        pixels,
        pose: entry.pose.to_pose()?,
        label_ids: entry.labels.clone(),
        noise_var: entry.noise_var,
        offset: entry.offset.map(Vec3::from_array),
        split: entry.split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::make_mock_spacecraft;

    fn six_label_spec(name: &str, count: usize, noise: f64) -> DatasetSpec {
        DatasetSpec {
            name: name.into(),
            discretization: DiscretizationSpec {
                radii_m: vec![3.0],
                camera_locations: 6,
                boresight_rolls: 1,
            },
            image_poses: ImagePoseMode::OnGrid { count },
            noise_variance: noise,
            offset: None,
            split_ratios: DEFAULT_SPLIT_RATIOS,
            seed: 7,
        }
    }

    fn label_set(seed: u64) -> LabelSet {
        let spec = DiscretizationSpec {
            radii_m: vec![3.0],
            camera_locations: 6,
            boresight_rolls: 1,
        };
        LabelSet::new("grid6", generate_labels(&spec, seed).unwrap())
    }

    fn build_small(dir: &Path, count: usize, noise: f64) -> DatasetManifest {
        build_dataset(
            &six_label_spec("unit", count, noise),
            &[label_set(7)],
            &make_mock_spacecraft(),
            &CameraIntrinsics {
                fov_deg: 31.5,
                width: 64,
                height: 64,
            },
            &LightingSpec::default(),
            dir,
        )
        .unwrap()
    }

    #[test]
    fn build_produces_counted_entries_covering_all_labels() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_small(dir.path(), 60, 0.0);
        assert_eq!(manifest.entries.len(), 60);
        let distinct: std::collections::BTreeSet<usize> = manifest
            .entries
            .iter()
            .map(|e| e.labels["grid6"])
            .collect();
        assert_eq!(distinct.len(), 6);
        // Every file exists and hashes correctly.
        verify_manifest(&manifest, dir.path()).unwrap();
        // Splits partition the entries.
        let (mut tr, mut va, mut te) = (0, 0, 0);
        for e in &manifest.entries {
            match e.split {
                Split::Train => tr += 1,
                Split::Validation => va += 1,
                Split::Test => te += 1,
            }
        }
        assert_eq!(tr + va + te, 60);
        assert!(va > 0 && te > 0);
    }

    #[test]
    fn noise_variance_is_recorded_per_entry() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_small(dir.path(), 12, 0.05);
        assert!(manifest.entries.iter().all(|e| e.noise_var == 0.05));
    }

    #[test]
    fn rebuild_with_same_seed_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        build_small(dir_a.path(), 24, 0.01);
        build_small(dir_b.path(), 24, 0.01);
        let read = |d: &Path, rel: &str| std::fs::read(d.join(rel)).unwrap();
        assert_eq!(
            read(dir_a.path(), MANIFEST_FILE),
            read(dir_b.path(), MANIFEST_FILE)
        );
        for i in 0..24 {
            let rel = format!("images/{i:06}.pgm");
            assert_eq!(read(dir_a.path(), &rel), read(dir_b.path(), &rel));
        }
    }

    #[test]
    fn offset_datasets_record_and_apply_the_offset() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = six_label_spec("offset", 6, 0.0);
        spec.offset = Some([0.2, 0.0, 3.0]);
        let manifest = build_dataset(
            &spec,
            &[label_set(7)],
            &make_mock_spacecraft(),
            &CameraIntrinsics {
                fov_deg: 31.5,
                width: 64,
                height: 64,
            },
            &LightingSpec::default(),
            dir.path(),
        )
        .unwrap();
        for e in &manifest.entries {
            assert_eq!(e.offset, Some([0.2, 0.0, 3.0]));
            assert_eq!(e.pose.t, [0.2, 0.0, 3.0]);
        }
    }

    #[test]
    fn split_arithmetic_is_exact_for_balanced_classes() {
        let ids = vec![0usize; 100];
        let splits = stratified_split(&ids, [0.6, 0.2, 0.2], 3);
        let count = |s: Split| splits.iter().filter(|&&x| x == s).count();
        assert_eq!(count(Split::Train), 60);
        assert_eq!(count(Split::Validation), 20);
        assert_eq!(count(Split::Test), 20);
    }

    #[test]
    fn split_proportions_hold_per_class_within_one() {
        // 1601 entries cycled over 6 classes, like the coarse family.
        let ids: Vec<usize> = (0..1601).map(|i| i % 6).collect();
        let splits = stratified_split(&ids, [0.6, 0.2, 0.2], 11);
        for class in 0..6 {
            let members: Vec<Split> = ids
                .iter()
                .zip(&splits)
                .filter(|(c, _)| **c == class)
                .map(|(_, s)| *s)
                .collect();
            let k = members.len() as f64;
            let va = members.iter().filter(|s| **s == Split::Validation).count() as f64;
            let te = members.iter().filter(|s| **s == Split::Test).count() as f64;
            let tr = members.iter().filter(|s| **s == Split::Train).count() as f64;
            assert!((va - 0.2 * k).abs() <= 1.0);
            assert!((te - 0.2 * k).abs() <= 1.0);
            assert!((tr - 0.6 * k).abs() <= 2.0);
        }
    }

    #[test]
    fn split_is_seed_deterministic_and_tiny_classes_go_to_train() {
        let ids: Vec<usize> = (0..50).map(|i| i % 5).collect();
        assert_eq!(
            stratified_split(&ids, [0.6, 0.2, 0.2], 21),
            stratified_split(&ids, [0.6, 0.2, 0.2], 21)
        );
        let tiny = vec![0, 0, 1, 1, 1];
        let splits = stratified_split(&tiny, [0.6, 0.2, 0.2], 21);
        assert_eq!(splits[0], Split::Train);
        assert_eq!(splits[1], Split::Train);
    }

    #[test]
    fn manifest_round_trips_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_small(dir.path(), 12, 0.0);
        let back = read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, manifest);
    }

    #[test]
    fn unknown_extra_fields_are_tolerated() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_small(dir.path(), 6, 0.0);
        let path = dir.path().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        let patched: String = text
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut()
                    .unwrap()
                    .insert("future_field".into(), serde_json::json!(42));
                serde_json::to_string(&v).unwrap() + "\n"
            })
            .collect();
        let parsed = parse_manifest(&patched).unwrap();
        assert_eq!(parsed, manifest);
    }

    #[test]
    fn schema_violations_name_the_record() {
        let dir = tempfile::tempdir().unwrap();
        build_small(dir.path(), 6, 0.0);
        let path = dir.path().join(MANIFEST_FILE);
        let mut lines: Vec<String> = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .map(String::from)
            .collect();
        lines[3] = lines[3].replace("\"index\":2", "\"index\":\"two\"");
        match parse_manifest(&lines.join("\n")) {
            Err(DatasetError::Schema { record, .. }) => assert_eq!(record, 4),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn verify_detects_missing_and_tampered_images() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_small(dir.path(), 6, 0.0);
        let victim = dir.path().join(&manifest.entries[2].image);
        let original = std::fs::read(&victim).unwrap();

        std::fs::write(&victim, b"P5\n1 1\n255\nx").unwrap();
        assert!(matches!(
            verify_manifest(&manifest, dir.path()),
            Err(DatasetError::Integrity { .. })
        ));

        std::fs::remove_file(&victim).unwrap();
        match verify_manifest(&manifest, dir.path()) {
            Err(DatasetError::Integrity { path, .. }) => {
                assert!(path.contains("000002.pgm"));
            }
            other => panic!("expected integrity error, got {other:?}"),
        }

        std::fs::write(&victim, original).unwrap();
        verify_manifest(&manifest, dir.path()).unwrap();
    }

    #[test]
    fn load_sample_returns_pixels_with_ground_truth() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = build_small(dir.path(), 6, 0.0);
        let sample = load_sample(&manifest.entries[0], dir.path()).unwrap();
        assert_eq!(sample.pixels.width(), 64);
        assert_eq!(sample.split, manifest.entries[0].split);
        assert_eq!(
            sample.pose.position.to_array(),
            manifest.entries[0].pose.t
        );
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = six_label_spec("bad", 10, 0.0);
        spec.split_ratios = [0.5, 0.2, 0.2];
        assert!(spec.validate().is_err());

        let mut spec = six_label_spec("bad", 10, 0.0);
        spec.offset = Some([0.0, 0.0, -1.0]);
        assert!(spec.validate().is_err());

        let mut spec = six_label_spec("bad", 0, 0.0);
        spec.image_poses = ImagePoseMode::OnGrid { count: 0 };
        assert!(spec.validate().is_err());

        let mut spec = six_label_spec("bad", 10, 0.0);
        spec.image_poses = ImagePoseMode::Random {
            count: 10,
            radius_range: [5.0, 3.0],
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn random_mode_draws_ranges_inside_the_requested_interval() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec {
            name: "random".into(),
            discretization: DiscretizationSpec {
                radii_m: vec![3.0],
                camera_locations: 6,
                boresight_rolls: 1,
            },
            image_poses: ImagePoseMode::Random {
                count: 20,
                radius_range: [3.0, 5.0],
            },
            noise_variance: 0.0,
            offset: None,
            split_ratios: DEFAULT_SPLIT_RATIOS,
            seed: 5,
        };
        let manifest = build_dataset(
            &spec,
            &[label_set(7)],
            &make_mock_spacecraft(),
            &CameraIntrinsics {
                fov_deg: 31.5,
                width: 64,
                height: 64,
            },
            &LightingSpec::default(),
            dir.path(),
        )
        .unwrap();
        for e in &manifest.entries {
            let pose = e.pose.to_pose().unwrap();
            let r = pose.range_m();
            assert!((3.0..=5.0).contains(&r), "range {r} outside interval");
        }
    }
}
