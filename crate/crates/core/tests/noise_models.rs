use plurality_core::kmeans::kmeans;
use plurality_core::noise::{inject_concentrated_noise, inject_random_noise, NoiseRegime, NoiseSpec};
use plurality_core::synthetic::BlobConfig;

/// Upper 0.1% point of the chi-square distribution with 4 degrees of freedom.
const CHI2_DF4_999: f64 = 18.4668;

#[test]
fn random_injection_is_deterministic() {
    let labels: Vec<usize> = (0..1000).map(|i| (i * 7) % 4).collect();
    let spec = NoiseSpec::new(NoiseRegime::Uniform, 4, 0.3, 77).unwrap();
    let a = inject_random_noise(&labels, &spec).unwrap();
    let b = inject_random_noise(&labels, &spec).unwrap();
    assert_eq!(a, b);
    let other = inject_random_noise(&labels, &spec.at(0.3, 78).unwrap()).unwrap();
    assert_ne!(a.1.corrupted_indices, other.1.corrupted_indices);
}

#[test]
fn realized_fraction_matches_self_corruption_model() {
    let n = 10_000;
    let labels: Vec<usize> = (0..n).map(|i| i % 10).collect();
    let spec = NoiseSpec::new(NoiseRegime::Uniform, 10, 0.5, 2024).unwrap();
    let (_, report) = inject_random_noise(&labels, &spec).unwrap();
    assert_eq!(report.corrupted_indices.len(), 5000);
    // 5000 draws, each keeps its label with probability 1/10
    let expected = 0.5 * 0.9;
    let se = (5000.0f64 * 0.9 * 0.1).sqrt() / n as f64;
    assert!(
        (report.realized_noise_fraction - expected).abs() <= 3.0 * se,
        "{} vs {expected} ± {}",
        report.realized_noise_fraction,
        3.0 * se
    );
    assert!(report.realized_noise_fraction <= report.nominal_gamma);
}

#[test]
fn uniform_targets_pass_goodness_of_fit() {
    let l = 5;
    let labels = vec![2usize; 2000];
    let mut hist = vec![0usize; l];
    for seed in 0..20 {
        let spec = NoiseSpec::new(NoiseRegime::Uniform, l, 0.5, seed).unwrap();
        let (noisy, report) = inject_random_noise(&labels, &spec).unwrap();
        for &i in &report.corrupted_indices {
            hist[noisy[i]] += 1;
        }
    }
    let total: usize = hist.iter().sum();
    let expected = total as f64 / l as f64;
    let stat: f64 = hist
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    assert!(stat < CHI2_DF4_999, "chi-square {stat} for {hist:?}");
}

#[test]
fn matrix_targets_follow_rows() {
    use plurality_core::CorruptionMatrix;
    let m = CorruptionMatrix::from_rows(vec![vec![0.0, 0.75, 0.25], vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]])
        .unwrap();
    let labels = vec![0usize; 20_000];
    let spec = NoiseSpec::new(NoiseRegime::Matrix { matrix: m }, 3, 1.0, 4).unwrap();
    let (noisy, _) = inject_random_noise(&labels, &spec).unwrap();
    let ones = noisy.iter().filter(|&&y| y == 1).count() as f64 / 20_000.0;
    assert!(noisy.iter().all(|&y| y != 0));
    // sd of the proportion is about 0.003
    assert!((ones - 0.75).abs() < 0.015, "{ones}");
}

#[test]
fn kmeans_objective_never_increases() {
    let cfg = BlobConfig::new(4, 3, 4.0, 1.5);
    let (data, _) = cfg.sample(150, 9).unwrap();
    for k in [2, 3, 5, 8] {
        let r = kmeans(data.features(), data.dim(), k, 31).unwrap();
        for w in r.objective_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", r.objective_history);
        }
        assert!(r.iterations <= 300);
    }
}

#[test]
fn concentrated_relabels_one_sub_blob_per_class() {
    let cfg = BlobConfig::new(3, 4, 30.0, 0.5).with_sub_blobs(vec![1, 1]);
    let (data, sub) = cfg.sample(60, 5).unwrap();
    let regime = NoiseRegime::Concentrated {
        clusters_per_class: 2,
        alternative_label_map: vec![1, 2, 0],
    };
    let spec = NoiseSpec::new(regime, 3, 0.0, 99).unwrap();
    let (noisy, report) = inject_concentrated_noise(&data, &spec).unwrap();
    for class in 0..3 {
        let members: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        let changed: Vec<usize> = members.iter().copied().filter(|&i| noisy[i] != class).collect();
        assert_eq!(changed.len(), 30, "class {class}");
        let blob = sub[changed[0]];
        assert!(changed.iter().all(|&i| sub[i] == blob));
        assert!(changed.iter().all(|&i| noisy[i] == (class + 1) % 3));
    }
    assert!((report.realized_noise_fraction - 0.5).abs() < 1e-12);
    // untouched labels are identical
    for i in 0..data.len() {
        if !report.corrupted_indices.contains(&i) {
            assert_eq!(noisy[i], data.label(i));
        }
    }
}

#[test]
fn concentrated_is_deterministic_and_seed_sensitive() {
    let cfg = BlobConfig::new(2, 2, 30.0, 0.5).with_sub_blobs(vec![1, 1, 1, 1]);
    let (data, _) = cfg.sample(80, 1).unwrap();
    let regime = NoiseRegime::Concentrated {
        clusters_per_class: 4,
        alternative_label_map: vec![1, 0],
    };
    let spec = NoiseSpec::new(regime, 2, 0.0, 3).unwrap();
    let a = inject_concentrated_noise(&data, &spec).unwrap();
    assert_eq!(a, inject_concentrated_noise(&data, &spec).unwrap());
    assert!((a.1.realized_noise_fraction - 0.25).abs() < 1e-12);
    let picks: std::collections::HashSet<Vec<usize>> = (0..12)
        .map(|s| inject_concentrated_noise(&data, &spec.at(0.0, s).unwrap()).unwrap().1.corrupted_indices)
        .collect();
    assert!(picks.len() > 1);
}
