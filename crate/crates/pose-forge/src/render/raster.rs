//! Z-buffered triangle rasterization with flat Lambertian shading.
//!
//! Geometry is transformed to the camera frame (`x_C = R(q) x_B + t_BC`),
//! near-clipped, projected through the pinhole model, and scan-converted by
//! edge functions at integer pixel centers. All arithmetic is plain f64 in
//! a fixed order, so identical inputs produce bit-identical buffers.

use crate::posespace::CameraPose;
use crate::rotmath::Vec3;

use super::mesh::TargetModel;
use super::{CameraIntrinsics, ImageBuffer, LightingSpec, RenderError};

/// Geometry closer than this to the camera plane is clipped away (meters).
pub const NEAR_PLANE_M: f64 = 0.05;

pub(super) fn rasterize(
    model: &TargetModel,
    pose: &CameraPose,
    intr: &CameraIntrinsics,
    light: &LightingSpec,
) -> Result<ImageBuffer, RenderError> {
    let (w, h) = (intr.width, intr.height);
    let mut frame = vec![0.0f64; w * h];
    let mut depth = vec![f64::INFINITY; w * h];

    if model.triangles().is_empty() {
        return ImageBuffer::from_pixels(w, h, frame);
    }

    let rot = pose.attitude.to_rotation_matrix();
    let cam_verts: Vec<Vec3> = model
        .vertices()
        .iter()
        .map(|&v| rot.apply(v) + pose.position)
        .collect();

    if cam_verts.iter().all(|v| v.z < NEAR_PLANE_M) {
        return Err(RenderError::TargetBehindCamera);
    }

    let focal = intr.focal_px();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;

    for (t_idx, tri) in model.triangles().iter().enumerate() {
        let normal_body = model.normal(t_idx);
        let lambert = normal_body.dot(-light.direction).max(0.0);
        let shade = (light.ambient * tri.albedo + light.intensity * tri.albedo * lambert)
            .clamp(0.0, 1.0);

        let corners = [
            cam_verts[tri.indices[0]],
            cam_verts[tri.indices[1]],
            cam_verts[tri.indices[2]],
        ];

        // Back-face culling in camera space.
        let normal_cam = rot.apply(normal_body);
        let centroid = (corners[0] + corners[1] + corners[2]) * (1.0 / 3.0);
        if normal_cam.dot(centroid) >= 0.0 {
            continue;
        }

        let clipped = clip_near(&corners);
        if clipped.len() < 3 {
            continue;
        }
        let projected: Vec<[f64; 3]> = clipped
            .iter()
            .map(|v| [focal * v.x / v.z + cx, focal * v.y / v.z + cy, v.z])
            .collect();
        for k in 1..projected.len() - 1 {
            fill_triangle(
                &mut frame,
                &mut depth,
                w,
                h,
                [projected[0], projected[k], projected[k + 1]],
                shade,
            );
        }
    }

    ImageBuffer::from_pixels(w, h, frame)
}

/// Sutherland-Hodgman clip of a triangle against `z >= NEAR_PLANE_M`;
/// returns 0 to 4 vertices.
fn clip_near(corners: &[Vec3; 3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let a = corners[i];
        let b = corners[(i + 1) % 3];
        let a_in = a.z >= NEAR_PLANE_M;
        let b_in = b.z >= NEAR_PLANE_M;
        if a_in {
            out.push(a);
        }
        if a_in != b_in {
            let t = (NEAR_PLANE_M - a.z) / (b.z - a.z);
            out.push(a + (b - a) * t);
        }
    }
    out
}

fn edge(a: [f64; 3], b: [f64; 3], px: f64, py: f64) -> f64 {
    (b[0] - a[0]) * (py - a[1]) - (b[1] - a[1]) * (px - a[0])
}

fn fill_triangle(
    frame: &mut [f64],
    depth: &mut [f64],
    w: usize,
    h: usize,
    mut v: [[f64; 3]; 3],
    shade: f64,
) {
    let area = edge(v[0], v[1], v[2][0], v[2][1]);
    if area.abs() < 1e-12 {
        return;
    }
    if area < 0.0 {
        v.swap(1, 2);
    }
    let area = edge(v[0], v[1], v[2][0], v[2][1]);

    let min_x = v.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let max_x = v.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let min_y = v.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let max_y = v.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);

    // Pixel centers sit at integer coordinates.
    let x0 = min_x.ceil().max(0.0) as usize;
    let x1 = max_x.floor().min(w as f64 - 1.0);
    let y0 = min_y.ceil().max(0.0) as usize;
    let y1 = max_y.floor().min(h as f64 - 1.0);
    if x1 < 0.0 || y1 < 0.0 {
        return;
    }
    let (x1, y1) = (x1 as usize, y1 as usize);

    let inv_z = [1.0 / v[0][2], 1.0 / v[1][2], 1.0 / v[2][2]];
    for py in y0..=y1 {
        for px in x0..=x1 {
            let (fx, fy) = (px as f64, py as f64);
            let w0 = edge(v[1], v[2], fx, fy);
            let w1 = edge(v[2], v[0], fx, fy);
            let w2 = edge(v[0], v[1], fx, fy);
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let z = area / (w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2]);
            let idx = py * w + px;
            if z < depth[idx] {
                depth[idx] = z;
                frame[idx] = shade;
            }
        }
    }
}
