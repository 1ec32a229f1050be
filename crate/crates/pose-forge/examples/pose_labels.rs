//! Generate pose-label sets for several discretization levels, write one
//! to disk, and assign labels to random continuous poses.
//!
//! ```bash
//! cargo run --release --example pose_labels
//! ```

use pose_forge::posespace::{
    assign_label, generate_labels, min_label_gap_deg, write_labels, CameraPose,
    DiscretizationSpec, LabelSet,
};
use pose_forge::rotmath::Vec3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    // Coarse-to-fine discretization levels: range shells x camera
    // locations x boresight rolls.
    let levels = [
        (vec![3.0], 6, 1),
        (vec![3.0, 5.0, 9.0], 6, 1),
        (vec![8.0, 9.0, 10.0, 11.0], 162, 1),
    ];

    println!("{:>8} {:>8} {:>4} {:>8} {:>12}", "labels", "shells", "n", "rolls", "min gap");
    let mut sets = Vec::new();
    for (radii_m, n, m) in levels {
        let spec = DiscretizationSpec {
            radii_m,
            camera_locations: n,
            boresight_rolls: m,
        };
        let labels = generate_labels(&spec, 42)?;
        let gap = min_label_gap_deg(&labels)
            .map(|g| format!("{g:>10.2} deg"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:>8} {:>8} {n:>4} {m:>8} {gap:>12}",
            labels.len(),
            spec.radii_m.len(),
        );
        sets.push(labels);
    }

    let out = std::env::temp_dir().join("pose_forge_labels6.txt");
    write_labels(&LabelSet::new("grid6", sets[0].clone()), &out)?;
    println!("\nwrote the 6-label set to {}", out.display());

    // Assign random poses against the finest set: the nearest shell is
    // picked first, then the attitude-nearest label within it.
    let fine = &sets[2];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    println!("\nrandom poses against the {}-label set:", fine.len());
    for _ in 0..5 {
        let viewpoint = loop {
            let v = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if let Some(u) = v.normalized() {
                break u;
            }
        };
        let pose = CameraPose::centered(
            viewpoint,
            rng.random_range(0.0..360.0),
            rng.random_range(7.5..11.5),
        );
        let id = assign_label(&pose, fine)?;
        let label = &fine[id];
        println!(
            "  range {:>5.2} m -> label {id:>4} (shell {:>4.1} m, attitude off by {:>5.2} deg)",
            pose.range_m(),
            label.range_m,
            pose.attitude.angular_distance_deg(&label.attitude)
        );
    }
    Ok(())
}
