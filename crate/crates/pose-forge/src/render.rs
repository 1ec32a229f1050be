//! Deterministic software renderer producing grayscale images of a target
//! mesh from a camera pose, plus the per-image variants (Gaussian noise,
//! off-center targets, horizontal flips).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::posespace::CameraPose;
use crate::rotmath::Vec3;

mod mesh;
mod pgm;
mod raster;

pub use mesh::{load_mesh, make_mock_spacecraft, parse_obj, save_mesh, TargetModel, Triangle,
    EXPECTED_MAX_RADIUS_M};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use raster::NEAR_PLANE_M;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid model: {reason}")]
    InvalidModel { reason: String },
    #[error("mesh parse error at line {line}: {reason}")]
    MeshParse { line: usize, reason: String },
    #[error("invalid camera intrinsics: {reason}")]
    InvalidIntrinsics { reason: String },
    #[error("invalid lighting: {reason}")]
    InvalidLighting { reason: String },
    #[error("target is entirely behind the camera")]
    TargetBehindCamera,
    #[error("pixel {index} is {value}, outside [0, 1]")]
    PixelOutOfRange { index: usize, value: f64 },
    #[error("image dimensions {width}x{height} do not match {len} pixels")]
    DimensionMismatch {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("pgm format error: {0}")]
    PgmFormat(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Grayscale image, row-major, top-left origin, every pixel in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageBuffer {
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, RenderError> {
        if pixels.len() != width * height {
            return Err(RenderError::DimensionMismatch {
                width,
                height,
                len: pixels.len(),
            });
        }
        for (index, &value) in pixels.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(RenderError::PixelOutOfRange { index, value });
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self, RenderError> {
        Self::from_pixels(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

/// Pinhole camera: square pixels, vertical field of view, principal point
/// at the image center.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            fov_deg: 31.5,
            width: 227,
            height: 227,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(RenderError::InvalidIntrinsics {
                reason: format!("fov_deg {} outside (0, 180)", self.fov_deg),
            });
        }
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidIntrinsics {
                reason: "zero image dimension".into(),
            });
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        (self.height as f64 / 2.0) / (self.fov_deg.to_radians() / 2.0).tan()
    }
}

/// One directional light plus an ambient floor, both in the body frame.
/// `direction` points from the light toward the scene.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LightingSpec {
    pub direction: Vec3,
    pub intensity: f64,
    pub ambient: f64,
}

impl Default for LightingSpec {
    fn default() -> Self {
        Self {
            direction: Vec3::new(-1.0, -1.0, -3.0).normalized().unwrap(),
            intensity: 0.85,
            ambient: 0.1,
        }
    }
}

impl LightingSpec {
    pub fn validate(&self) -> Result<(), RenderError> {
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(RenderError::InvalidLighting {
                reason: "direction must be unit length".into(),
            });
        }
        if !(self.intensity > 0.0 && self.intensity <= 1.0) || self.ambient < 0.0 {
            return Err(RenderError::InvalidLighting {
                reason: "intensity must be in (0, 1] and ambient non-negative".into(),
            });
        }
        if self.intensity + self.ambient > 1.0 {
            return Err(RenderError::InvalidLighting {
                reason: format!(
                    "intensity + ambient = {} exceeds 1",
                    self.intensity + self.ambient
                ),
            });
        }
        Ok(())
    }
}

/// Render the model from a pose: pinhole projection, z-buffered
/// rasterization, flat Lambertian shading per triangle
/// (`ambient * albedo + intensity * albedo * max(0, n . -light)`),
/// back-face culling, black background. Purely deterministic.
///
/// A target partially outside the frustum is clipped; a target entirely
/// behind the camera is an error.
pub fn render(
    model: &TargetModel,
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    light: &LightingSpec,
) -> Result<ImageBuffer, RenderError> {
    intr.validate()?;
    light.validate()?;
    let radius = model.bounding_radius();
    if radius > EXPECTED_MAX_RADIUS_M {
        static WARNED: std::sync::Once = std::sync::Once::new();
        WARNED.call_once(|| {
            log::warn!(
                "model bounding radius {radius:.2} m exceeds the calibrated {EXPECTED_MAX_RADIUS_M} m"
            );
        });
    }
    raster::rasterize(model, pose, intr, light)
}

/// Re-seat the target in the camera frame: the returned pose has the given
/// camera-frame position (x, y lateral meters; z boresight range) with the
/// attitude unchanged. Positions at or behind the camera plane are
/// rejected.
pub fn apply_offset(pose: &CameraPose, offset: Vec3) -> Result<CameraPose, RenderError> {
    if offset.z <= 0.0 {
        return Err(RenderError::TargetBehindCamera);
    }
    Ok(CameraPose::new(pose.attitude, offset))
}

/// Add zero-mean Gaussian noise of the given variance per pixel, from a
/// dedicated generator seeded with `seed`, clamping back to `[0, 1]`.
/// Variance zero returns the input unchanged.
pub fn add_gaussian_noise(image: &ImageBuffer, variance: f64, seed: u64) -> ImageBuffer {
    if variance == 0.0 {
        return image.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, variance.sqrt()).expect("non-negative variance");
    let pixels = image
        .pixels()
        .iter()
        .map(|&p| (p + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    ImageBuffer {
        width: image.width,
        height: image.height,
        pixels,
    }
}

/// Mirror about the vertical axis (column `x` maps to `width - 1 - x`).
pub fn hflip(image: &ImageBuffer) -> ImageBuffer {
    let (w, h) = (image.width, image.height);
    let mut pixels = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            pixels[y * w + x] = image.pixels[y * w + (w - 1 - x)];
        }
    }
    ImageBuffer {
        width: w,
        height: h,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posespace::{distribute_points, CameraPose, DEFAULT_DESCENT_TOL};
    use crate::rotmath::Quaternion;
    use approx::assert_relative_eq;

    fn centered_pose(range: f64) -> CameraPose {
        CameraPose::centered(Vec3::new(0.6, 0.48, 0.64).normalized().unwrap(), 20.0, range)
    }

    /// A thin square plate facing +z in the body frame, shaded on both
    /// sides; its projection is analytically predictable.
    fn facing_plate(half: f64) -> TargetModel {
        parse_obj(&format!(
            "v -{h} -{h} 0\nv {h} -{h} 0\nv {h} {h} 0\nv -{h} {h} 0\n# albedo 0.7\nf 1 2 3 4\nf 1 4 3 2\n",
            h = half
        ))
        .unwrap()
    }

    fn silhouette_centroid(img: &ImageBuffer) -> (f64, f64, usize) {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for y in 0..img.height() {
            for x in 0..img.width() {
                if img.get(x, y) > 0.0 {
                    sx += x as f64;
                    sy += y as f64;
                    n += 1;
                }
            }
        }
        (sx / n as f64, sy / n as f64, n)
    }

    #[test]
    fn empty_model_renders_black() {
        let img = render(
            &TargetModel::empty(),
            &centered_pose(3.0),
            &CameraIntrinsics::default(),
            &LightingSpec::default(),
        )
        .unwrap();
        assert!(img.pixels().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn head_on_facet_shades_by_the_lambertian_formula() {
        // With identity attitude the camera sees the plate side whose
        // normal is -z; light traveling along +z hits that side squarely,
        // so n . -light = 1 exactly.
        let model = facing_plate(0.4);
        let pose = CameraPose::new(Quaternion::identity(), Vec3::new(0.0, 0.0, 3.0));
        let light = LightingSpec {
            direction: Vec3::unit_z(),
            intensity: 0.8,
            ambient: 0.1,
        };
        let img = render(&model, &pose, &CameraIntrinsics::default(), &light).unwrap();
        let center = img.get(113, 113);
        assert_relative_eq!(center, 0.63, epsilon = 1e-12);
    }

    #[test]
    fn rendering_is_bit_deterministic() {
        let model = make_mock_spacecraft();
        let pose = centered_pose(3.0);
        let a = render(&model, &pose, &CameraIntrinsics::default(), &LightingSpec::default())
            .unwrap();
        let b = render(&model, &pose, &CameraIntrinsics::default(), &LightingSpec::default())
            .unwrap();
        assert_eq!(a.pixels(), b.pixels());
    }

    #[test]
    fn target_behind_camera_is_an_error() {
        let model = make_mock_spacecraft();
        let pose = CameraPose::new(Quaternion::identity(), Vec3::new(0.0, 0.0, -3.0));
        assert!(matches!(
            render(&model, &pose, &CameraIntrinsics::default(), &LightingSpec::default()),
            Err(RenderError::TargetBehindCamera)
        ));
    }

    #[test]
    fn centered_target_projects_to_the_image_center() {
        let model = facing_plate(0.2);
        let pose = apply_offset(
            &CameraPose::new(Quaternion::identity(), Vec3::new(0.0, 0.0, 5.0)),
            Vec3::new(0.0, 0.0, 3.0),
        )
        .unwrap();
        let img = render(&model, &pose, &CameraIntrinsics::default(), &LightingSpec::default())
            .unwrap();
        let (cx, cy, n) = silhouette_centroid(&img);
        assert!(n > 100);
        assert!((cx - 113.0).abs() < 2.0, "centroid x {cx}");
        assert!((cy - 113.0).abs() < 2.0, "centroid y {cy}");
    }

    #[test]
    fn lateral_offset_shifts_the_centroid_by_pinhole_geometry() {
        let model = facing_plate(0.2);
        let base = CameraPose::new(Quaternion::identity(), Vec3::new(0.0, 0.0, 3.0));
        let intr = CameraIntrinsics::default();
        let light = LightingSpec::default();

        let centered = render(&model, &base, &intr, &light).unwrap();
        let shifted = render(
            &model,
            &apply_offset(&base, Vec3::new(0.2, 0.0, 3.0)).unwrap(),
            &intr,
            &light,
        )
        .unwrap();
        let (x0, y0, _) = silhouette_centroid(&centered);
        let (x1, y1, _) = silhouette_centroid(&shifted);

        let expected = intr.focal_px() * 0.2 / 3.0; // ~26.8 px
        assert!((expected - 26.8).abs() < 0.1);
        assert!(((x1 - x0) - expected).abs() < 2.0, "shift {}", x1 - x0);
        assert!((y1 - y0).abs() < 2.0);
    }

    #[test]
    fn x_and_y_offsets_displace_by_equal_magnitudes() {
        let model = facing_plate(0.2);
        let base = CameraPose::new(Quaternion::identity(), Vec3::new(0.0, 0.0, 3.0));
        let intr = CameraIntrinsics::default();
        let light = LightingSpec::default();
        let centered = render(&model, &base, &intr, &light).unwrap();
        let dx = render(
            &model,
            &apply_offset(&base, Vec3::new(0.2, 0.0, 3.0)).unwrap(),
            &intr,
            &light,
        )
        .unwrap();
        let dy = render(
            &model,
            &apply_offset(&base, Vec3::new(0.0, 0.2, 3.0)).unwrap(),
            &intr,
            &light,
        )
        .unwrap();
        let (x0, y0, _) = silhouette_centroid(&centered);
        let (xa, ya, _) = silhouette_centroid(&dx);
        let (xb, yb, _) = silhouette_centroid(&dy);
        let mag_x = ((xa - x0).powi(2) + (ya - y0).powi(2)).sqrt();
        let mag_y = ((xb - x0).powi(2) + (yb - y0).powi(2)).sqrt();
        assert!((mag_x - mag_y).abs() < 2.0, "magnitudes {mag_x} vs {mag_y}");
    }

    #[test]
    fn offset_behind_camera_is_rejected() {
        let base = CameraPose::new(Quaternion::identity(), Vec3::new(0.0, 0.0, 3.0));
        assert!(apply_offset(&base, Vec3::new(0.1, 0.1, 0.0)).is_err());
        assert!(apply_offset(&base, Vec3::new(0.1, 0.1, -2.0)).is_err());
    }

    #[test]
    fn antipodal_views_of_the_mock_spacecraft_differ() {
        let model = make_mock_spacecraft();
        let intr = CameraIntrinsics::default();
        let light = LightingSpec::default();
        let v = Vec3::new(0.6, 0.48, 0.64).normalized().unwrap();
        let a = render(&model, &CameraPose::centered(v, 0.0, 3.0), &intr, &light).unwrap();
        let b = render(&model, &CameraPose::centered(-v, 0.0, 3.0), &intr, &light).unwrap();
        let differing = a
            .pixels()
            .iter()
            .zip(b.pixels())
            .filter(|(x, y)| (**x - **y).abs() > 0.1)
            .count();
        let total = a.pixels().len();
        assert!(
            differing * 20 >= total,
            "only {differing}/{total} pixels differ"
        );
    }

    #[test]
    fn silhouette_shrinks_with_range() {
        let model = make_mock_spacecraft();
        let intr = CameraIntrinsics::default();
        let light = LightingSpec::default();
        let v = Vec3::new(0.6, 0.48, 0.64).normalized().unwrap();
        let mut last = usize::MAX;
        for range in [3.0, 5.0, 7.0, 9.0, 11.0, 13.0] {
            let img = render(&model, &CameraPose::centered(v, 0.0, range), &intr, &light)
                .unwrap();
            let count = img.pixels().iter().filter(|&&p| p > 0.0).count();
            assert!(
                count <= last,
                "silhouette grew from {last} to {count} at range {range}"
            );
            last = count;
        }
    }

    #[test]
    fn noise_variance_matches_request() {
        let clean = ImageBuffer::constant(227, 227, 0.5).unwrap();
        let noisy = add_gaussian_noise(&clean, 0.01, 77);
        let diffs: Vec<f64> = noisy
            .pixels()
            .iter()
            .zip(clean.pixels())
            .map(|(a, b)| a - b)
            .collect();
        let mean: f64 = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var: f64 =
            diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / diffs.len() as f64;
        assert!(
            (0.009..=0.011).contains(&var),
            "sample variance {var} outside [0.009, 0.011]"
        );
    }

    #[test]
    fn zero_variance_is_identity_and_heavy_noise_stays_clamped() {
        let model = make_mock_spacecraft();
        let img = render(
            &model,
            &centered_pose(3.0),
            &CameraIntrinsics::default(),
            &LightingSpec::default(),
        )
        .unwrap();
        assert_eq!(add_gaussian_noise(&img, 0.0, 3).pixels(), img.pixels());
        let noisy = add_gaussian_noise(&img, 0.1, 3);
        assert!(noisy.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn noise_is_seed_deterministic() {
        let clean = ImageBuffer::constant(64, 64, 0.5).unwrap();
        let a = add_gaussian_noise(&clean, 0.05, 9);
        let b = add_gaussian_noise(&clean, 0.05, 9);
        assert_eq!(a.pixels(), b.pixels());
        let c = add_gaussian_noise(&clean, 0.05, 10);
        assert_ne!(a.pixels(), c.pixels());
    }

    #[test]
    fn hflip_is_an_involution_that_swaps_columns() {
        let mut pixels = vec![0.0; 6];
        pixels[0] = 1.0; // (x=0, y=0)
        pixels[5] = 0.5; // (x=2, y=1)
        let img = ImageBuffer::from_pixels(3, 2, pixels).unwrap();
        let flipped = hflip(&img);
        assert_eq!(flipped.get(2, 0), 1.0);
        assert_eq!(flipped.get(0, 1), 0.5);
        assert_eq!(hflip(&flipped), img);
    }

    #[test]
    fn hflip_moves_a_bright_left_half_to_the_right() {
        let mut pixels = vec![0.0; 16];
        for y in 0..4 {
            for x in 0..2 {
                pixels[y * 4 + x] = 1.0;
            }
        }
        let img = ImageBuffer::from_pixels(4, 4, pixels).unwrap();
        let flipped = hflip(&img);
        for y in 0..4 {
            assert_eq!(flipped.get(0, y), 0.0);
            assert_eq!(flipped.get(3, y), 1.0);
        }
    }

    #[test]
    fn noise_distribution_commutes_with_hflip() {
        let model = make_mock_spacecraft();
        let img = render(
            &model,
            &centered_pose(3.0),
            &CameraIntrinsics::default(),
            &LightingSpec::default(),
        )
        .unwrap();
        let var = |a: &ImageBuffer, b: &ImageBuffer| -> f64 {
            let diffs: Vec<f64> = a
                .pixels()
                .iter()
                .zip(b.pixels())
                .map(|(x, y)| x - y)
                .collect();
            let mean: f64 = diffs.iter().sum::<f64>() / diffs.len() as f64;
            diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / diffs.len() as f64
        };
        let noise_then_flip = hflip(&add_gaussian_noise(&img, 0.01, 5));
        let flip_then_noise = add_gaussian_noise(&hflip(&img), 0.01, 6);
        let v1 = var(&noise_then_flip, &hflip(&img));
        let v2 = var(&flip_then_noise, &hflip(&img));
        // Same distribution, independent draws: variances agree statistically.
        assert!((v1 - v2).abs() < 0.002, "variances {v1} vs {v2}");
    }

    #[test]
    fn renders_from_distributed_viewpoints_are_distinct() {
        let model = make_mock_spacecraft();
        let intr = CameraIntrinsics::default();
        let light = LightingSpec::default();
        let pts = distribute_points(6, 42, DEFAULT_DESCENT_TOL).unwrap();
        let images: Vec<ImageBuffer> = pts
            .points()
            .iter()
            .map(|&v| render(&model, &CameraPose::centered(v, 0.0, 3.0), &intr, &light).unwrap())
            .collect();
        for i in 0..images.len() {
            for j in (i + 1)..images.len() {
                let differing = images[i]
                    .pixels()
                    .iter()
                    .zip(images[j].pixels())
                    .filter(|(a, b)| (**a - **b).abs() > 0.1)
                    .count();
                assert!(
                    differing > images[i].pixels().len() / 100,
                    "views {i} and {j} look alike"
                );
            }
        }
    }
}
