//! Incremental 3D convex hull for point sets in convex position (all inputs
//! here lie on a sphere). Returns an outward-oriented triangulation.

use crate::rotmath::Vec3;

use super::PoseSpaceError;

const PLANE_EPS: f64 = 1e-12;

/// Triangulate the convex hull of `points`. Every input point must end up a
/// hull vertex; inputs that are coplanar as a whole are rejected.
pub fn convex_hull_triangulation(points: &[Vec3]) -> Result<Vec<[usize; 3]>, PoseSpaceError> {
    if points.len() < 4 {
        return Err(PoseSpaceError::DegenerateConfiguration {
            reason: format!("need at least 4 points for a hull, got {}", points.len()),
        });
    }

    let (seed, rest) = initial_tetrahedron(points)?;
    let mut faces: Vec<[usize; 3]> = tetrahedron_faces(points, seed);

    for &p_idx in &rest {
        insert_point(points, &mut faces, p_idx)?;
    }

    // Points on a sphere are in convex position: all of them must appear.
    let mut used = vec![false; points.len()];
    for f in &faces {
        for &i in f {
            used[i] = true;
        }
    }
    if let Some(missing) = used.iter().position(|u| !u) {
        return Err(PoseSpaceError::DegenerateConfiguration {
            reason: format!("point {missing} is not a hull vertex"),
        });
    }
    Ok(faces)
}

/// Unique undirected edges of a triangulation, as `(low, high)` index pairs.
pub fn unique_edges(faces: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut edges = std::collections::BTreeSet::new();
    for f in faces {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    edges.into_iter().collect()
}

fn signed_distance(points: &[Vec3], face: [usize; 3], p: Vec3) -> f64 {
    let (a, b, c) = (points[face[0]], points[face[1]], points[face[2]]);
    let n = (b - a).cross(c - a);
    n.dot(p - a)
}

fn initial_tetrahedron(points: &[Vec3]) -> Result<([usize; 4], Vec<usize>), PoseSpaceError> {
    // First two distinct points.
    let i0 = 0;
    let i1 = (1..points.len())
        .find(|&i| (points[i] - points[i0]).norm() > 1e-9)
        .ok_or_else(|| PoseSpaceError::DegenerateConfiguration {
            reason: "all points coincide".into(),
        })?;
    // Third point not collinear with the first two.
    let i2 = (1..points.len())
        .find(|&i| {
            i != i1
                && (points[i] - points[i0])
                    .cross(points[i1] - points[i0])
                    .norm()
                    > 1e-9
        })
        .ok_or_else(|| PoseSpaceError::DegenerateConfiguration {
            reason: "all points are collinear".into(),
        })?;
    // Fourth point off the plane of the first three.
    let i3 = (1..points.len())
        .find(|&i| {
            i != i1 && i != i2 && signed_distance(points, [i0, i1, i2], points[i]).abs() > 1e-9
        })
        .ok_or_else(|| PoseSpaceError::DegenerateConfiguration {
            reason: "all points are coplanar".into(),
        })?;

    let seed = [i0, i1, i2, i3];
    let rest = (0..points.len()).filter(|i| !seed.contains(i)).collect();
    Ok((seed, rest))
}

fn tetrahedron_faces(points: &[Vec3], seed: [usize; 4]) -> Vec<[usize; 3]> {
    let centroid = seed
        .iter()
        .fold(Vec3::zero(), |acc, &i| acc + points[i])
        * 0.25;
    let mut faces = vec![
        [seed[0], seed[1], seed[2]],
        [seed[0], seed[1], seed[3]],
        [seed[0], seed[2], seed[3]],
        [seed[1], seed[2], seed[3]],
    ];
    for f in &mut faces {
        // Orient outward: the centroid must be on the negative side.
        if signed_distance(points, *f, centroid) > 0.0 {
            f.swap(1, 2);
        }
    }
    faces
}

fn insert_point(
    points: &[Vec3],
    faces: &mut Vec<[usize; 3]>,
    p_idx: usize,
) -> Result<(), PoseSpaceError> {
    let p = points[p_idx];
    let visible: Vec<bool> = faces
        .iter()
        .map(|&f| signed_distance(points, f, p) > PLANE_EPS)
        .collect();
    if !visible.iter().any(|&v| v) {
        // In convex position this means the point duplicates or falls inside
        // the current hull, which the SpherePoints invariants exclude.
        return Err(PoseSpaceError::DegenerateConfiguration {
            reason: format!("point {p_idx} sees no hull face"),
        });
    }

    // Horizon: directed edges of visible faces whose twin face is hidden.
    let mut directed = std::collections::BTreeSet::new();
    for (f, vis) in faces.iter().zip(&visible) {
        if *vis {
            for k in 0..3 {
                directed.insert((f[k], f[(k + 1) % 3]));
            }
        }
    }
    let mut horizon = Vec::new();
    for &(a, b) in &directed {
        if !directed.contains(&(b, a)) {
            horizon.push((a, b));
        }
    }

    let mut next: Vec<[usize; 3]> = faces
        .iter()
        .zip(&visible)
        .filter(|(_, vis)| !**vis)
        .map(|(f, _)| *f)
        .collect();
    for (a, b) in horizon {
        // Keep the edge direction of the deleted face so the new face stays
        // outward-oriented.
        next.push([a, b, p_idx]);
    }
    *faces = next;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn octahedron() -> Vec<Vec3> {
        vec![
            Vec3::unit_x(),
            -Vec3::unit_x(),
            Vec3::unit_y(),
            -Vec3::unit_y(),
            Vec3::unit_z(),
            -Vec3::unit_z(),
        ]
    }

    #[test]
    fn octahedron_hull_has_eight_faces_and_twelve_edges() {
        let faces = convex_hull_triangulation(&octahedron()).unwrap();
        assert_eq!(faces.len(), 8);
        assert_eq!(unique_edges(&faces).len(), 12);
    }

    #[test]
    fn hull_faces_are_outward_oriented() {
        let pts = octahedron();
        let faces = convex_hull_triangulation(&pts).unwrap();
        for f in faces {
            let d = signed_distance(&pts, f, Vec3::zero());
            assert!(d < 0.0, "centroid must be behind every face, got {d}");
        }
    }

    #[test]
    fn coplanar_input_is_rejected() {
        let pts = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
        ];
        assert!(convex_hull_triangulation(&pts).is_err());
    }

    #[test]
    fn euler_formula_holds_for_random_sphere_points() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<Vec3> = (0..40)
            .map(|_| loop {
                let v = Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if let Some(u) = v.normalized() {
                    break u;
                }
            })
            .collect();
        let faces = convex_hull_triangulation(&pts).unwrap();
        let e = unique_edges(&faces).len();
        // v - e + f = 2 for a closed triangulated surface.
        assert_eq!(40 + faces.len() as i64 - e as i64, 2);
    }
}
