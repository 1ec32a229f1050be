//! Classification metrics (accuracy, one-vs-rest precision/recall/
//! F-measure) and pose-error metrics.
//!
//! The attitude error is `2*acos(z_s)` in degrees where `z_s` is the
//! scalar part of `q_true * conj(q_est)` taken raw, with no sign
//! canonicalization, so values above 180 degrees occur when the two
//! canonical representatives sit in opposite half-spheres. The folded
//! equivalent `min(e, 360 - e)` is reported alongside as the physical
//! rotation magnitude.

use serde::Serialize;
use thiserror::Error;

use crate::classifier::PredictionResult;
use crate::dataset::ManifestEntry;
use crate::posespace::{CameraPose, LabelSet, PoseLabel};
use crate::rotmath::Vec3;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions ({preds}) do not cover the entries ({entries})")]
    LengthMismatch { preds: usize, entries: usize },
    #[error("label id {id} out of range for {num_classes} classes")]
    IdOutOfRange { id: usize, num_classes: usize },
    #[error("empty evaluation split")]
    EmptySplit,
    #[error("entry {index} carries no label for set {name:?}")]
    MissingLabel { index: usize, name: String },
    #[error("dataset error: {0}")]
    Dataset(#[from] crate::dataset::DatasetError),
}

/// One-vs-rest counts per class.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfusionCounts {
    pub per_class: Vec<ClassCounts>,
    pub total: usize,
}

impl ConfusionCounts {
    pub fn correct(&self) -> usize {
        self.per_class.iter().map(|c| c.tp).sum()
    }

    pub fn accuracy_pct(&self) -> f64 {
        100.0 * self.correct() as f64 / self.total as f64
    }
}

/// Count TP/FP/FN treating each class as its own binary problem.
pub fn confusion(
    predictions: &[usize],
    truth: &[usize],
    num_classes: usize,
) -> Result<ConfusionCounts, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            preds: predictions.len(),
            entries: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    let mut per_class = vec![ClassCounts::default(); num_classes];
    for (&pred, &label) in predictions.iter().zip(truth) {
        for &id in [pred, label].iter() {
            if id >= num_classes {
                return Err(EvalError::IdOutOfRange { id, num_classes });
            }
        }
        if pred == label {
            per_class[pred].tp += 1;
        } else {
            per_class[pred].fp += 1;
            per_class[label].fn_ += 1;
        }
    }
    Ok(ConfusionCounts {
        per_class,
        total: predictions.len(),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

/// Precision, recall, and F-measure per class plus their unweighted means.
/// Classes with an empty denominator score zero, keeping the macro
/// averages defined for absent classes.
pub fn precision_recall_fm(counts: &ConfusionCounts) -> (Vec<ClassMetrics>, ClassMetrics) {
    let per_class: Vec<ClassMetrics> = counts
        .per_class
        .iter()
        .map(|c| {
            let precision = ratio(c.tp, c.tp + c.fp);
            let recall = ratio(c.tp, c.tp + c.fn_);
            let f_measure = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f_measure,
            }
        })
        .collect();
    let n = per_class.len() as f64;
    let macro_avg = ClassMetrics {
        precision: per_class.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: per_class.iter().map(|m| m.recall).sum::<f64>() / n,
        f_measure: per_class.iter().map(|m| m.f_measure).sum::<f64>() / n,
    };
    (per_class, macro_avg)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Pose estimate implied by a label: the label's representative attitude
/// with the target on the boresight at the label's range.
pub fn label_to_pose_estimate(label: &PoseLabel) -> CameraPose {
    CameraPose::new(label.attitude, Vec3::new(0.0, 0.0, label.range_m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PoseErrors {
    /// Euclidean position error, meters.
    pub e_t_m: f64,
    /// Attitude error `2*acos(z_s)`, degrees, unfolded (see module docs).
    pub e_r_deg: f64,
    /// `min(e_r, 360 - e_r)`: the rotation magnitude in `[0, 180]`.
    pub e_r_folded_deg: f64,
}

/// Position and attitude error between an estimate and the truth.
pub fn pose_errors(estimate: &CameraPose, truth: &CameraPose) -> PoseErrors {
    let e_t_m = (estimate.position - truth.position).norm();
    let (z_s, z_v) = truth
        .attitude
        .product_parts(&estimate.attitude.conjugate());
    // 2*atan2(|z_v|, z_s) equals 2*acos(z_s) for a unit z but stays
    // well-conditioned near zero error, where acos loses ~8 digits.
    let e_r_deg = 2.0 * z_v.norm().atan2(z_s).to_degrees();
    PoseErrors {
        e_t_m,
        e_r_deg,
        e_r_folded_deg: e_r_deg.min(360.0 - e_r_deg),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

impl ErrorStats {
    /// Population statistics; zeros for an empty slice.
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            std: var.sqrt(),
        }
    }
}

/// Metrics over one group of samples (all of them, or the high-confidence
/// subset).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SolutionStats {
    pub count: usize,
    pub accuracy_pct: f64,
    pub e_r_deg: ErrorStats,
    pub e_r_folded_deg: ErrorStats,
    pub e_t_m: ErrorStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRecord {
    pub image: String,
    pub true_label: usize,
    pub predicted_label: usize,
    pub confidence_ratio: f64,
    pub high_confidence: bool,
    pub e_r_deg: f64,
    pub e_r_folded_deg: f64,
    pub e_t_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub label_set: String,
    pub accuracy_pct: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: ClassMetrics,
    /// Fraction of samples whose top-2 probability ratio exceeds 2, percent.
    pub availability_pct: f64,
    pub all_solutions: SolutionStats,
    pub high_confidence: SolutionStats,
    pub per_sample: Vec<SampleRecord>,
}

fn solution_stats(records: &[&SampleRecord]) -> SolutionStats {
    let correct = records
        .iter()
        .filter(|r| r.predicted_label == r.true_label)
        .count();
    let collect = |f: fn(&SampleRecord) -> f64| -> Vec<f64> {
        records.iter().map(|r| f(r)).collect()
    };
    SolutionStats {
        count: records.len(),
        accuracy_pct: if records.is_empty() {
            0.0
        } else {
            100.0 * correct as f64 / records.len() as f64
        },
        e_r_deg: ErrorStats::of(&collect(|r| r.e_r_deg)),
        e_r_folded_deg: ErrorStats::of(&collect(|r| r.e_r_folded_deg)),
        e_t_m: ErrorStats::of(&collect(|r| r.e_t_m)),
    }
}

/// Score predictions against the ground truth of manifest entries:
/// classification metrics plus pose errors of the label-implied estimates,
/// over all samples and over the high-confidence subset.
pub fn report(
    entries: &[&ManifestEntry],
    predictions: &[PredictionResult],
    labels: &LabelSet,
) -> Result<MetricsReport, EvalError> {
    if entries.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    if entries.len() != predictions.len() {
        return Err(EvalError::LengthMismatch {
            preds: predictions.len(),
            entries: entries.len(),
        });
    }
    let num_classes = labels.len();
    let mut truth = Vec::with_capacity(entries.len());
    let mut preds = Vec::with_capacity(entries.len());
    let mut per_sample = Vec::with_capacity(entries.len());
    for (entry, prediction) in entries.iter().zip(predictions) {
        let true_label =
            *entry
                .labels
                .get(&labels.name)
                .ok_or_else(|| EvalError::MissingLabel {
                    index: entry.index,
                    name: labels.name.clone(),
                })?;
        let predicted = prediction.top_label;
        if predicted >= num_classes {
            return Err(EvalError::IdOutOfRange {
                id: predicted,
                num_classes,
            });
        }
        let estimate = label_to_pose_estimate(&labels.labels[predicted]);
        let truth_pose = entry.pose.to_pose()?;
        let errors = pose_errors(&estimate, &truth_pose);
        truth.push(true_label);
        preds.push(predicted);
        per_sample.push(SampleRecord {
            image: entry.image.clone(),
            true_label,
            predicted_label: predicted,
            confidence_ratio: prediction.confidence_ratio,
            high_confidence: prediction.high_confidence,
            e_r_deg: errors.e_r_deg,
            e_r_folded_deg: errors.e_r_folded_deg,
            e_t_m: errors.e_t_m,
        });
    }

    let counts = confusion(&preds, &truth, num_classes)?;
    let (per_class, macro_avg) = precision_recall_fm(&counts);
    let all_refs: Vec<&SampleRecord> = per_sample.iter().collect();
    let hc_refs: Vec<&SampleRecord> = per_sample.iter().filter(|r| r.high_confidence).collect();
    Ok(MetricsReport {
        label_set: labels.name.clone(),
        accuracy_pct: counts.accuracy_pct(),
        per_class,
        macro_avg,
        availability_pct: 100.0 * hc_refs.len() as f64 / per_sample.len() as f64,
        all_solutions: solution_stats(&all_refs),
        high_confidence: solution_stats(&hc_refs),
        per_sample,
    })
}

/// Aligned text table mirroring the summary-statistics row set
/// (mean/min/max/std of the attitude and position errors, accuracy,
/// availability) over all solutions and the high-confidence subset.
pub fn format_report_text(report: &MetricsReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "label set: {}", report.label_set);
    let _ = writeln!(out, "samples:   {}", report.all_solutions.count);
    let _ = writeln!(out, "accuracy:  {:.2} %", report.accuracy_pct);
    let _ = writeln!(
        out,
        "macro precision/recall/FM: {:.4} / {:.4} / {:.4}",
        report.macro_avg.precision, report.macro_avg.recall, report.macro_avg.f_measure
    );
    let _ = writeln!(
        out,
        "solution availability:     {:.2} % ({} of {})",
        report.availability_pct, report.high_confidence.count, report.all_solutions.count
    );
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<28} {:>12} {:>12}",
        "metric", "all", "high conf."
    );
    let mut row = |name: &str, all: f64, hc: f64| {
        let _ = writeln!(out, "{name:<28} {all:>12.4} {hc:>12.4}");
    };
    row(
        "accuracy (%)",
        report.all_solutions.accuracy_pct,
        report.high_confidence.accuracy_pct,
    );
    for (name, all, hc) in [
        ("E_R", report.all_solutions.e_r_deg, report.high_confidence.e_r_deg),
        (
            "E_R folded",
            report.all_solutions.e_r_folded_deg,
            report.high_confidence.e_r_folded_deg,
        ),
        ("E_T", report.all_solutions.e_t_m, report.high_confidence.e_t_m),
    ] {
        let unit = if name.starts_with("E_R") { "deg" } else { "m" };
        row(&format!("mean {name} ({unit})"), all.mean, hc.mean);
        row(&format!("min {name} ({unit})"), all.min, hc.min);
        row(&format!("max {name} ({unit})"), all.max, hc.max);
        row(&format!("std {name} ({unit})"), all.std, hc.std);
    }
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<8} {:>10} {:>10} {:>10}",
        "class", "precision", "recall", "FM"
    );
    for (i, m) in report.per_class.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i:<8} {:>10.4} {:>10.4} {:>10.4}",
            m.precision, m.recall, m.f_measure
        );
    }
    out
}

/// `metric,value` rows; the machine-readable twin of the text table.
pub fn format_report_csv(report: &MetricsReport) -> String {
    let mut out = String::from("metric,value\n");
    let mut row = |name: &str, value: f64| {
        out.push_str(&format!("{name},{value}\n"));
    };
    row("samples", report.all_solutions.count as f64);
    row("accuracy_pct", report.accuracy_pct);
    row("macro_precision", report.macro_avg.precision);
    row("macro_recall", report.macro_avg.recall);
    row("macro_f_measure", report.macro_avg.f_measure);
    row("availability_pct", report.availability_pct);
    for (prefix, stats) in [
        ("all", &report.all_solutions),
        ("hc", &report.high_confidence),
    ] {
        row(&format!("{prefix}_count"), stats.count as f64);
        row(&format!("{prefix}_accuracy_pct"), stats.accuracy_pct);
        for (metric, s) in [
            ("e_r_deg", &stats.e_r_deg),
            ("e_r_folded_deg", &stats.e_r_folded_deg),
            ("e_t_m", &stats.e_t_m),
        ] {
            row(&format!("{prefix}_mean_{metric}"), s.mean);
            row(&format!("{prefix}_min_{metric}"), s.min);
            row(&format!("{prefix}_max_{metric}"), s.max);
            row(&format!("{prefix}_std_{metric}"), s.std);
        }
    }
    for (i, m) in report.per_class.iter().enumerate() {
        row(&format!("class{i}_precision"), m.precision);
        row(&format!("class{i}_recall"), m.recall);
        row(&format!("class{i}_f_measure"), m.f_measure);
    }
    out
}

/// Per-sample error dump.
pub fn format_per_sample_csv(report: &MetricsReport) -> String {
    let mut out = String::from(
        "image,true_label,predicted_label,confidence_ratio,high_confidence,e_r_deg,e_r_folded_deg,e_t_m\n",
    );
    for r in &report.per_sample {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.image,
            r.true_label,
            r.predicted_label,
            r.confidence_ratio,
            r.high_confidence,
            r.e_r_deg,
            r.e_r_folded_deg,
            r.e_t_m
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PoseRecord;
    use crate::posespace::{generate_labels, DiscretizationSpec};
    use crate::rotmath::{AxisAngle, Quaternion};
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_predictions_have_no_errors() {
        let truth = vec![0, 1, 2, 1, 0];
        let counts = confusion(&truth, &truth, 3).unwrap();
        for c in &counts.per_class {
            assert_eq!(c.fp, 0);
            assert_eq!(c.fn_, 0);
        }
        assert_relative_eq!(counts.accuracy_pct(), 100.0);
    }

    #[test]
    fn one_wrong_sample_counts_one_fp_and_one_fn() {
        let counts = confusion(&[1], &[0], 2).unwrap();
        assert_eq!(counts.per_class[1].fp, 1);
        assert_eq!(counts.per_class[0].fn_, 1);
        assert_eq!(counts.correct(), 0);
    }

    /// Naive per-sample, per-class double loop, as an independent oracle.
    fn confusion_by_double_loop(preds: &[usize], truth: &[usize], classes: usize) -> Vec<ClassCounts> {
        (0..classes)
            .map(|c| {
                let mut counts = ClassCounts::default();
                for (&p, &t) in preds.iter().zip(truth) {
                    match (p == c, t == c) {
                        (true, true) => counts.tp += 1,
                        (true, false) => counts.fp += 1,
                        (false, true) => counts.fn_ += 1,
                        (false, false) => {}
                    }
                }
                counts
            })
            .collect()
    }

    #[test]
    fn confusion_agrees_with_the_double_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let preds: Vec<usize> = (0..1000).map(|_| rng.random_range(0..7)).collect();
        let truth: Vec<usize> = (0..1000).map(|_| rng.random_range(0..7)).collect();
        let counts = confusion(&preds, &truth, 7).unwrap();
        assert_eq!(counts.per_class, confusion_by_double_loop(&preds, &truth, 7));
        // Sum of TP + FN per class covers every sample exactly once.
        let covered: usize = counts.per_class.iter().map(|c| c.tp + c.fn_).sum();
        assert_eq!(covered, 1000);
    }

    #[test]
    fn textbook_precision_recall_fm_values() {
        let counts = ConfusionCounts {
            per_class: vec![ClassCounts { tp: 8, fp: 2, fn_: 2 }],
            total: 10,
        };
        let (per_class, _) = precision_recall_fm(&counts);
        assert_relative_eq!(per_class[0].precision, 0.8, epsilon = 1e-12);
        assert_relative_eq!(per_class[0].recall, 0.8, epsilon = 1e-12);
        assert_relative_eq!(per_class[0].f_measure, 0.8, epsilon = 1e-12);

        // precision 1, recall 0.5 -> FM 2/3
        let counts = ConfusionCounts {
            per_class: vec![ClassCounts { tp: 5, fp: 0, fn_: 5 }],
            total: 10,
        };
        let (per_class, _) = precision_recall_fm(&counts);
        assert_relative_eq!(per_class[0].f_measure, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn fm_is_symmetric_in_precision_and_recall() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let tp = rng.random_range(0..20usize);
            let fp = rng.random_range(0..20usize);
            let fn_ = rng.random_range(0..20usize);
            let a = ConfusionCounts {
                per_class: vec![ClassCounts { tp, fp, fn_ }],
                total: tp + fp + fn_,
            };
            // Swapping FP and FN swaps precision and recall; FM unchanged.
            let b = ConfusionCounts {
                per_class: vec![ClassCounts { tp, fp: fn_, fn_: fp }],
                total: tp + fp + fn_,
            };
            let (ma, _) = precision_recall_fm(&a);
            let (mb, _) = precision_recall_fm(&b);
            assert_relative_eq!(ma[0].f_measure, mb[0].f_measure, epsilon = 1e-12);
            assert_relative_eq!(ma[0].precision, mb[0].recall, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_denominators_score_zero_and_macro_stays_bounded() {
        let counts = confusion(&[0, 0, 0], &[0, 0, 1], 3).unwrap();
        let (per_class, macro_avg) = precision_recall_fm(&counts);
        // Class 2 never appears: precision = recall = FM = 0.
        assert_eq!(per_class[2], ClassMetrics::default());
        assert!(macro_avg.f_measure >= 0.0 && macro_avg.f_measure <= 1.0);
    }

    fn label_set_6() -> LabelSet {
        let spec = DiscretizationSpec {
            radii_m: vec![3.0],
            camera_locations: 6,
            boresight_rolls: 1,
        };
        LabelSet::new("grid6", generate_labels(&spec, 42).unwrap())
    }

    #[test]
    fn on_grid_pose_estimate_has_zero_errors() {
        let set = label_set_6();
        for label in &set.labels {
            let estimate = label_to_pose_estimate(label);
            let truth = CameraPose::new(label.attitude, Vec3::new(0.0, 0.0, label.range_m));
            let errors = pose_errors(&estimate, &truth);
            assert!(errors.e_r_deg.abs() < 1e-9);
            assert!(errors.e_t_m.abs() < 1e-12);
            assert_relative_eq!(estimate.position.z, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn jittered_pose_errors_match_the_jitter_angle() {
        let set = label_set_6();
        let label = &set.labels[2];
        let jitter = Quaternion::from_axis_angle(&AxisAngle::new(
            Vec3::new(0.6, 0.48, 0.64).normalized().unwrap(),
            5.0,
        ))
        .unwrap();
        let truth = CameraPose::new(
            jitter.multiply(&label.attitude),
            Vec3::new(0.0, 0.0, label.range_m),
        );
        let errors = pose_errors(&label_to_pose_estimate(label), &truth);
        assert_relative_eq!(errors.e_r_folded_deg, 5.0, epsilon = 1e-6);
    }

    #[test]
    fn pose_error_textbook_cases() {
        let identity = CameraPose::new(Quaternion::identity(), Vec3::new(0.0, 0.0, 3.0));
        let same = pose_errors(&identity, &identity);
        assert_eq!(same.e_t_m, 0.0);
        assert!(same.e_r_deg.abs() < 1e-12);

        let offset_truth = CameraPose::new(Quaternion::identity(), Vec3::new(0.2, 0.0, 3.0));
        assert_relative_eq!(
            pose_errors(&identity, &offset_truth).e_t_m,
            0.2,
            epsilon = 1e-12
        );

        let rot90 = CameraPose::new(
            Quaternion::from_axis_angle(&AxisAngle::new(Vec3::unit_x(), 90.0)).unwrap(),
            Vec3::new(0.0, 0.0, 3.0),
        );
        assert_relative_eq!(pose_errors(&identity, &rot90).e_r_deg, 90.0, epsilon = 1e-9);
    }

    #[test]
    fn attitude_error_is_unfolded_and_symmetric() {
        // Two canonical attitudes on опposite half-spheres: 170 degrees
        // about +x and about -x. The raw scalar is negative, so the
        // unfolded error exceeds 180 while the folded error is small.
        let a = CameraPose::new(
            Quaternion::from_axis_angle(&AxisAngle::new(Vec3::unit_x(), 170.0)).unwrap(),
            Vec3::new(0.0, 0.0, 3.0),
        );
        let b = CameraPose::new(
            Quaternion::from_axis_angle(&AxisAngle::new(-Vec3::unit_x(), 170.0)).unwrap(),
            Vec3::new(0.0, 0.0, 3.0),
        );
        let errors = pose_errors(&a, &b);
        assert_relative_eq!(errors.e_r_deg, 340.0, epsilon = 1e-9);
        assert_relative_eq!(errors.e_r_folded_deg, 20.0, epsilon = 1e-9);
        assert!(errors.e_r_folded_deg >= 0.0 && errors.e_r_folded_deg <= 180.0);
        // Swapping estimate and truth leaves the scalar part unchanged.
        let swapped = pose_errors(&b, &a);
        assert_relative_eq!(swapped.e_r_deg, errors.e_r_deg, epsilon = 1e-12);
    }

    fn entry_for(set: &LabelSet, label_id: usize, pose: &CameraPose, index: usize) -> ManifestEntry {
        let mut labels = std::collections::BTreeMap::new();
        labels.insert(set.name.clone(), label_id);
        ManifestEntry {
            index,
            image: format!("images/{index:06}.pgm"),
            sha256: String::new(),
            pose: PoseRecord::from_pose(pose),
            labels,
            noise_var: 0.0,
            offset: None,
            split: crate::dataset::Split::Test,
        }
    }

    fn one_hot_prediction(classes: usize, label: usize, top: f64) -> PredictionResult {
        let rest = (1.0 - top) / (classes - 1) as f64;
        let mut probs = vec![rest; classes];
        probs[label] = top;
        PredictionResult::from_probs(probs)
    }

    #[test]
    fn report_on_correct_on_grid_predictions_is_clean() {
        let set = label_set_6();
        let entries: Vec<ManifestEntry> = set
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let pose = CameraPose::new(l.attitude, Vec3::new(0.0, 0.0, l.range_m));
                entry_for(&set, l.id, &pose, i)
            })
            .collect();
        // Half confident (ratio > 2), half not.
        let predictions: Vec<PredictionResult> = set
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| one_hot_prediction(6, l.id, if i % 2 == 0 { 0.9 } else { 0.25 }))
            .collect();
        let refs: Vec<&ManifestEntry> = entries.iter().collect();
        let report = report(&refs, &predictions, &set).unwrap();

        assert_relative_eq!(report.accuracy_pct, 100.0, epsilon = 1e-12);
        assert_relative_eq!(report.availability_pct, 50.0, epsilon = 1e-12);
        assert!(report.all_solutions.e_r_deg.mean.abs() < 1e-9);
        assert!(report.all_solutions.e_t_m.mean.abs() < 1e-12);
        assert_eq!(report.high_confidence.count, 3);
        assert_relative_eq!(report.macro_avg.f_measure, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn high_confidence_subset_matches_manual_filtering() {
        let set = label_set_6();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let entries: Vec<ManifestEntry> = (0..40)
            .map(|i| {
                let l = &set.labels[i % 6];
                let pose = CameraPose::new(l.attitude, Vec3::new(0.0, 0.0, l.range_m));
                entry_for(&set, l.id, &pose, i)
            })
            .collect();
        let predictions: Vec<PredictionResult> = (0..40)
            .map(|i| {
                let predicted = rng.random_range(0..6);
                let top = rng.random_range(0.25..0.95);
                one_hot_prediction(6, predicted, top)
            })
            .collect();
        let refs: Vec<&ManifestEntry> = entries.iter().collect();
        let rep = report(&refs, &predictions, &set).unwrap();

        let manual: Vec<&SampleRecord> = rep
            .per_sample
            .iter()
            .filter(|r| r.confidence_ratio > 2.0)
            .collect();
        assert_eq!(rep.high_confidence.count, manual.len());
        if !manual.is_empty() {
            let mean_et: f64 =
                manual.iter().map(|r| r.e_t_m).sum::<f64>() / manual.len() as f64;
            assert_relative_eq!(rep.high_confidence.e_t_m.mean, mean_et, epsilon = 1e-12);
        }
        for r in &rep.per_sample {
            assert_eq!(r.high_confidence, r.confidence_ratio > 2.0);
        }
    }

    #[test]
    fn report_emits_the_full_metric_row_set() {
        let set = label_set_6();
        let entries: Vec<ManifestEntry> = set
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let pose = CameraPose::new(l.attitude, Vec3::new(0.0, 0.0, l.range_m));
                entry_for(&set, l.id, &pose, i)
            })
            .collect();
        let predictions: Vec<PredictionResult> = set
            .labels
            .iter()
            .map(|l| one_hot_prediction(6, l.id, 0.9))
            .collect();
        let refs: Vec<&ManifestEntry> = entries.iter().collect();
        let rep = report(&refs, &predictions, &set).unwrap();

        let text = format_report_text(&rep);
        for needle in [
            "mean E_R (deg)",
            "min E_R (deg)",
            "max E_R (deg)",
            "std E_R (deg)",
            "mean E_T (m)",
            "min E_T (m)",
            "max E_T (m)",
            "std E_T (m)",
            "accuracy",
            "solution availability",
        ] {
            assert!(text.contains(needle), "missing {needle:?} in:\n{text}");
        }
        let csv = format_report_csv(&rep);
        for needle in [
            "accuracy_pct",
            "availability_pct",
            "all_mean_e_r_deg",
            "all_std_e_t_m",
            "hc_mean_e_r_deg",
            "hc_max_e_t_m",
        ] {
            assert!(csv.contains(needle), "missing {needle:?} in csv");
        }
        let dump = format_per_sample_csv(&rep);
        assert_eq!(dump.lines().count(), 1 + rep.per_sample.len());
    }

    #[test]
    fn empty_and_mismatched_inputs_are_rejected() {
        let set = label_set_6();
        assert!(matches!(
            report(&[], &[], &set),
            Err(EvalError::EmptySplit)
        ));
        let pose = CameraPose::new(Quaternion::identity(), Vec3::new(0.0, 0.0, 3.0));
        let entries = vec![entry_for(&set, 0, &pose, 0)];
        let refs: Vec<&ManifestEntry> = entries.iter().collect();
        assert!(matches!(
            report(&refs, &[], &set),
            Err(EvalError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn accuracy_equals_direct_correct_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let preds: Vec<usize> = (0..500).map(|_| rng.random_range(0..4)).collect();
        let truth: Vec<usize> = (0..500).map(|_| rng.random_range(0..4)).collect();
        let counts = confusion(&preds, &truth, 4).unwrap();
        let direct = preds.iter().zip(&truth).filter(|(p, t)| p == t).count();
        assert_relative_eq!(
            counts.accuracy_pct(),
            100.0 * direct as f64 / 500.0,
            epsilon = 1e-12
        );
    }
}
