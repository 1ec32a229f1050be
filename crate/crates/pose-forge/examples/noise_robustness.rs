//! Noise-robustness experiment: train one classifier on clean images and
//! one on a clean+noisy mix, then compare their accuracy on test sets of
//! increasing sensor noise.
//!
//! The scene is lit dimly so the image signal sits close to the sensor
//! noise floor: a model that has only ever seen clean images degrades
//! steeply with noise, while the noise-augmented model holds up.
//!
//! ```bash
//! cargo run --release --example noise_robustness
//! ```

use std::time::Instant;

use pose_forge::classifier::{
    evaluate_accuracy, load_features, train, FeatureSet, Model, ModelConfig, TrainConfig,
};
use pose_forge::dataset::{build_dataset, DatasetManifest, DatasetSpec, ImagePoseMode, Split};
use pose_forge::posespace::{generate_labels, DiscretizationSpec, LabelSet};
use pose_forge::render::{make_mock_spacecraft, CameraIntrinsics, LightingSpec};

const IMAGE_COUNT: usize = 1455; // 60 % train split = 873 images
const NOISY_TRAIN_EXTRA: usize = 728; // noisy images mixed into the second model
const NOISE_LEVELS: [f64; 4] = [0.0, 0.01, 0.05, 0.1];
const INPUT_SIDE: usize = 160;

fn main() -> anyhow::Result<()> {
    let started = Instant::now();
    let tmp = tempfile::tempdir()?;

    let disc = DiscretizationSpec {
        radii_m: vec![3.0],
        camera_locations: 6,
        boresight_rolls: 1,
    };
    // The dataset spec below shares this discretization and seed, so image
    // poses are jittered versions of exactly these label poses.
    let labels = LabelSet::new("grid6", generate_labels(&disc, 42)?);
    let target = make_mock_spacecraft();
    let intrinsics = CameraIntrinsics::default();
    let lighting = LightingSpec {
        intensity: 0.18,
        ambient: 0.05,
        ..LightingSpec::default()
    };

    // One dataset per noise level; identical seed means identical poses
    // and identical split membership, so train/test separation carries
    // across the variants.
    println!(
        "rendering {IMAGE_COUNT} images x {} noise levels...",
        NOISE_LEVELS.len()
    );
    let mut variants: Vec<(f64, DatasetManifest, std::path::PathBuf)> = Vec::new();
    for &variance in &NOISE_LEVELS {
        let dir = tmp.path().join(format!("var{}", (variance * 100.0) as u32));
        let spec = DatasetSpec {
            name: format!("grid6-var{variance}"),
            discretization: disc.clone(),
            image_poses: ImagePoseMode::OnGrid { count: IMAGE_COUNT },
            noise_variance: variance,
            offset: None,
            split_ratios: [0.6, 0.2, 0.2],
            seed: 42,
        };
        let manifest = build_dataset(&spec, &[labels.clone()], &target, &intrinsics, &lighting, &dir)?;
        variants.push((variance, manifest, dir));
    }
    println!("rendered in {:.1?}", started.elapsed());

    let load = |i: usize, split: Split| {
        load_features(&variants[i].1, &variants[i].2, split, "grid6", INPUT_SIDE, false)
    };
    let clean_train = load(0, Split::Train)?;
    let clean_val = load(0, Split::Validation)?;
    let noisy_train = load(1, Split::Train)?;

    // Mixed set: the full clean train split plus noisy twins of most of it.
    let mut mixed = clean_train.clone();
    let extra = NOISY_TRAIN_EXTRA.min(noisy_train.len());
    mixed
        .features
        .extend(noisy_train.features[..extra].iter().cloned());
    mixed.labels.extend(noisy_train.labels[..extra].iter());

    let model_config = ModelConfig {
        input_side: INPUT_SIDE,
        hidden_units: 64,
        num_classes: labels.len(),
        dropout_p: 0.0,
        seed: 3,
    };
    let train_config = TrainConfig {
        learning_rate: 0.004,
        momentum: 0.9,
        batch_size: 32,
        epochs: 30,
        hflip_augment: false,
        seed: 4,
    };

    let fit = |name: &str, data: &FeatureSet| -> anyhow::Result<Model> {
        let t = Instant::now();
        let mut model = Model::init(model_config.clone())?;
        let history = train(&mut model, data, Some(&clean_val), &train_config)?;
        let last = history.last().unwrap();
        println!(
            "{name}: {} train images, final loss {:.4}, val accuracy {:.1} % ({:.1?})",
            data.len(),
            last.train_loss,
            last.val_accuracy_pct.unwrap_or(f64::NAN),
            t.elapsed()
        );
        Ok(model)
    };

    println!("\ntraining...");
    let clean_model = fit("clean-trained", &clean_train)?;
    let mixed_model = fit("noise-augmented", &mixed)?;

    println!("\ntest accuracy by noise variance:");
    println!(
        "{:>10} {:>16} {:>16}",
        "variance", "clean-trained", "noise-augmented"
    );
    for (i, (variance, _, _)) in variants.iter().enumerate() {
        let test = load(i, Split::Test)?;
        let a = evaluate_accuracy(&clean_model, &test)?;
        let b = evaluate_accuracy(&mixed_model, &test)?;
        println!("{variance:>10} {a:>15.2}% {b:>15.2}%");
    }
    println!("\ntotal {:.1?}", started.elapsed());
    Ok(())
}
