//! Render the mock spacecraft from a few viewpoints and write the images
//! as binary PGM files, together with noisy and off-center variants.
//!
//! ```bash
//! cargo run --release --example render_views
//! ```

use pose_forge::posespace::{distribute_points, CameraPose, DEFAULT_DESCENT_TOL};
use pose_forge::render::{
    add_gaussian_noise, apply_offset, hflip, make_mock_spacecraft, render, write_pgm,
    CameraIntrinsics, LightingSpec,
};
use pose_forge::rotmath::Vec3;

fn main() -> anyhow::Result<()> {
    let model = make_mock_spacecraft();
    let intrinsics = CameraIntrinsics::default();
    let lighting = LightingSpec::default();
    let out_dir = std::env::temp_dir().join("pose_forge_renders");
    std::fs::create_dir_all(&out_dir)?;

    println!(
        "target: {} triangles, bounding radius {:.2} m",
        model.triangles().len(),
        model.bounding_radius()
    );

    let viewpoints = distribute_points(6, 42, DEFAULT_DESCENT_TOL)?;
    for (i, &viewpoint) in viewpoints.points().iter().enumerate() {
        let pose = CameraPose::centered(viewpoint, 0.0, 3.0);
        let image = render(&model, &pose, &intrinsics, &lighting)?;
        let lit = image.pixels().iter().filter(|&&p| p > 0.0).count();
        let path = out_dir.join(format!("view{i}.pgm"));
        write_pgm(&image, &path)?;
        println!(
            "view {i}: {lit:>6} lit pixels -> {}",
            path.display()
        );

        if i == 0 {
            // Variants of the first view: sensor noise, an off-center
            // target, and the horizontal mirror.
            let noisy = add_gaussian_noise(&image, 0.05, 7);
            write_pgm(&noisy, &out_dir.join("view0_noise05.pgm"))?;

            let shifted = apply_offset(&pose, Vec3::new(0.2, 0.0, 3.0))?;
            let off_center = render(&model, &shifted, &intrinsics, &lighting)?;
            write_pgm(&off_center, &out_dir.join("view0_offset.pgm"))?;

            write_pgm(&hflip(&image), &out_dir.join("view0_mirror.pgm"))?;
            println!("        variants: view0_noise05, view0_offset, view0_mirror");
        }
    }

    // Perspective check: the silhouette shrinks with range.
    print!("silhouette pixels by range:");
    for range in [3.0, 5.0, 9.0, 13.0] {
        let pose = CameraPose::centered(viewpoints.points()[0], 0.0, range);
        let image = render(&model, &pose, &intrinsics, &lighting)?;
        print!(
            "  {range} m: {}",
            image.pixels().iter().filter(|&&p| p > 0.0).count()
        );
    }
    println!();
    Ok(())
}
