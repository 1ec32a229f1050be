//! Full loop at small scale: build a dataset, train the classifier, and
//! score the test split — classification metrics plus the pose errors of
//! the label-implied estimates, gated by prediction confidence.
//!
//! ```bash
//! cargo run --release --example train_and_eval
//! ```

use pose_forge::classifier::{load_features, predict, train, Model, ModelConfig, TrainConfig};
use pose_forge::dataset::{build_dataset, load_sample, DatasetSpec, ImagePoseMode, Split};
use pose_forge::eval::{format_report_text, report};
use pose_forge::posespace::{generate_labels, DiscretizationSpec, LabelSet};
use pose_forge::render::{make_mock_spacecraft, CameraIntrinsics, LightingSpec};

fn main() -> anyhow::Result<()> {
    let tmp = tempfile::tempdir()?;
    let disc = DiscretizationSpec {
        radii_m: vec![3.0],
        camera_locations: 6,
        boresight_rolls: 1,
    };
    let labels = LabelSet::new("grid6", generate_labels(&disc, 42)?);

    let spec = DatasetSpec {
        name: "train-demo".into(),
        discretization: disc,
        image_poses: ImagePoseMode::OnGrid { count: 600 },
        noise_variance: 0.0,
        offset: None,
        split_ratios: [0.6, 0.2, 0.2],
        seed: 42,
    };
    let dir = tmp.path().join("ds");
    let manifest = build_dataset(
        &spec,
        &[labels.clone()],
        &make_mock_spacecraft(),
        &CameraIntrinsics::default(),
        &LightingSpec::default(),
        &dir,
    )?;
    println!("dataset: {} images", manifest.entries.len());

    let model_config = ModelConfig {
        input_side: 64,
        hidden_units: 128,
        num_classes: labels.len(),
        dropout_p: 0.25,
        seed: 3,
    };
    let train_config = TrainConfig {
        learning_rate: 0.02,
        momentum: 0.9,
        batch_size: 32,
        epochs: 25,
        hflip_augment: true,
        seed: 4,
    };
    let train_set = load_features(&manifest, &dir, Split::Train, "grid6", 64, true)?;
    let val_set = load_features(&manifest, &dir, Split::Validation, "grid6", 64, false)?;

    let mut model = Model::init(model_config)?;
    let history = train(&mut model, &train_set, Some(&val_set), &train_config)?;
    for row in history.iter().step_by(5).chain(history.last()) {
        println!(
            "epoch {:>2}: {} samples, loss {:.4}, val {:.1} %",
            row.epoch,
            row.samples,
            row.train_loss,
            row.val_accuracy_pct.unwrap_or(f64::NAN)
        );
    }

    // Predict the test split and assemble the metrics report.
    let entries: Vec<_> = manifest.entries_in(Split::Test).collect();
    let mut predictions = Vec::new();
    for entry in &entries {
        let sample = load_sample(entry, &dir)?;
        predictions.push(predict(&model, &sample.pixels)?);
    }
    let metrics = report(&entries, &predictions, &labels)?;
    println!("\n{}", format_report_text(&metrics));
    Ok(())
}
