//! Distribute camera viewpoints uniformly on a sphere by relaxing an
//! inverse-square repulsion energy, and refine a configuration by
//! subdividing its convex-hull edges.
//!
//! ```bash
//! cargo run --release --example thomson_points
//! ```

use pose_forge::posespace::{
    distribute_points, subdivide, thomson_energy, thomson_gradient, DEFAULT_DESCENT_TOL,
};

fn main() -> anyhow::Result<()> {
    // Known minimum-energy values for small point counts.
    let references = [
        (2, Some(0.5)),
        (3, Some(3.0_f64.sqrt())),
        (4, Some(6.0 / (8.0_f64 / 3.0).sqrt())),
        (6, Some(12.0 / 2.0_f64.sqrt() + 1.5)),
        (12, Some(49.165253058)),
        (24, None),
    ];

    println!("{:>4} {:>14} {:>14} {:>10}", "n", "energy", "reference", "grad max");
    for (n, reference) in references {
        let t = std::time::Instant::now();
        let points = distribute_points(n, 42, DEFAULT_DESCENT_TOL)?;
        let energy = thomson_energy(&points)?;
        let grad_max = thomson_gradient(&points)?
            .iter()
            .map(|g| g.norm())
            .fold(0.0, f64::max);
        let ref_text = reference
            .map(|r| format!("{r:>14.6}"))
            .unwrap_or_else(|| format!("{:>14}", "-"));
        println!(
            "{n:>4} {energy:>14.6} {ref_text} {grad_max:>10.2e}   ({:?})",
            t.elapsed()
        );
    }

    // Subdivision inserts one point per hull edge: 12 -> 12 + 30 = 42.
    let coarse = distribute_points(12, 42, DEFAULT_DESCENT_TOL)?;
    let fine = subdivide(&coarse)?;
    println!(
        "\nsubdivision: {} points -> {} points (energy {:.4})",
        coarse.len(),
        fine.len(),
        thomson_energy(&fine)?
    );
    Ok(())
}
