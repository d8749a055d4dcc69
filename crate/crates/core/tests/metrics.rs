use auxlearn::metrics::{format_percent, render_report, ExperimentResult};
use auxlearn::{class_report, confusion_matrix, majority_baseline};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
        (None, None) => true,
        _ => false,
    }
}

#[test]
fn matches_brute_force_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let k = rng.random_range(1..=5);
        let n = rng.random_range(1..=500);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        // Skew predictions toward the truth so reports are not all noise.
        let pred: Vec<usize> = truth
            .iter()
            .map(|&t| {
                if rng.random_bool(0.6) {
                    t
                } else {
                    rng.random_range(0..k)
                }
            })
            .collect();
        let cm = confusion_matrix(&truth, &pred, k).unwrap();
        let report = class_report(&cm).unwrap();

        let mut hits = 0;
        for c in 0..k {
            let tp = (0..n).filter(|&i| truth[i] == c && pred[i] == c).count();
            let actual = truth.iter().filter(|&&t| t == c).count();
            let predicted = pred.iter().filter(|&&p| p == c).count();
            for p in 0..k {
                let count = (0..n).filter(|&i| truth[i] == c && pred[i] == p).count();
                assert_eq!(cm.get(c, p), count as u64);
            }
            let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
            let recall = (actual > 0).then(|| tp as f64 / actual as f64);
            let f1 = match (precision, recall) {
                (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
                _ => None,
            };
            assert!(close(report.precision[c], precision));
            assert!(close(report.recall[c], recall));
            assert!(close(report.f1[c], f1), "{:?} vs {f1:?}", report.f1[c]);
            assert_eq!(report.support[c], actual as u64);
            hits += tp;
        }
        assert!((report.accuracy - hits as f64 / n as f64).abs() <= 1e-12);
    }
}

#[test]
fn majority_baseline_of_the_test_split() {
    let b = majority_baseline(&[2501, 2499, 21875]).unwrap();
    assert_eq!(b, 21875.0 / 26875.0);
    assert_eq!(format_percent(b, 2), "81.39%");
    assert_eq!(majority_baseline(&[1, 1]).unwrap(), 0.5);
    assert_eq!(majority_baseline(&[10, 0, 0]).unwrap(), 1.0);
    assert!(majority_baseline(&[0, 0]).is_err());
}

#[test]
fn report_layout() {
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let result =
        |label: &str, k: usize, truth: &[usize], pred: &[usize], class_names: Vec<String>| {
            let cm = confusion_matrix(truth, pred, k)
                .unwrap()
                .with_class_names(class_names)
                .unwrap();
            ExperimentResult {
                label: label.into(),
                report: class_report(&cm).unwrap(),
                confusion: cm,
                loss: 0.123456,
            }
        };
    let binary = result(
        "Binary Classifier",
        2,
        &[0, 1, 1],
        &[0, 1, 0],
        names(&["cat", "dog"]),
    );
    let aux = result(
        "AL with weighted loss",
        3,
        &[0, 1, 2, 2, 2],
        &[0, 1, 2, 2, 0],
        names(&["cat", "dog", "others"]),
    );
    let out = render_report(&[binary, aux]).unwrap();
    let expected_summary = "\
Test results

Model                 | Test Accuracy | Test Loss
----------------------+---------------+----------
Binary Classifier     | 0.66667       | 0.12346
AL with weighted loss | 0.80000       | 0.12346
";
    assert!(out.text.starts_with(expected_summary), "{}", out.text);
    assert!(out
        .text
        .contains("Others | Binary Classifier     | NA        | NA     | NA"));
    assert!(out
        .text
        .contains("Others | AL with weighted loss | 1.00      | 0.67   | 0.80"));
    assert_eq!(out.csv.lines().count(), 1 + 3 * 2);
}
