//! Cross-checks the fast statistics implementations against slow, obviously
//! correct reference versions on seeded random data. The references here are
//! deliberately written from the textbook definitions and share no code with
//! the library.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use styleval_core::corpus::SampleId;
use styleval_core::stats::{
    kendall_tau_b, pearson, sample_level_corr, CorrelationKind, ScoreMatrix,
};

/// Pairwise O(n^2) tau-b straight from the definition: count concordant and
/// discordant pairs and the per-axis tie totals.
fn brute_force_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    let mut tied_x = 0i64;
    let mut tied_y = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                tied_x += 1;
                tied_y += 1;
            } else if dx == 0.0 {
                tied_x += 1;
            } else if dy == 0.0 {
                tied_y += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    if n0 == tied_x || n0 == tied_y {
        return None;
    }
    let denom = (((n0 - tied_x) as f64) * ((n0 - tied_y) as f64)).sqrt();
    Some((concordant - discordant) as f64 / denom)
}

fn brute_force_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.iter().all(|&v| v == x[0]) || y.iter().all(|&v| v == y[0]) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>();
    let vx = x.iter().map(|a| (a - mx) * (a - mx)).sum::<f64>();
    let vy = y.iter().map(|b| (b - my) * (b - my)).sum::<f64>();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Random vector where roughly a third of the entries land on a small
/// integer grid, forcing plenty of exact ties.
fn tie_prone_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| {
            if rng.random_bool(0.35) {
                rng.random_range(0..4) as f64
            } else {
                rng.random_range(0.0..10.0)
            }
        })
        .collect()
}

#[test]
fn kendall_matches_brute_force_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for _ in 0..300 {
        let len = rng.random_range(2..=10);
        let x = tie_prone_vector(&mut rng, len);
        let y = tie_prone_vector(&mut rng, len);
        let fast = kendall_tau_b(&x, &y).unwrap();
        let slow = brute_force_tau_b(&x, &y);
        match (fast, slow) {
            (Some(a), Some(b)) => assert!(
                (a - b).abs() < 1e-12,
                "tau mismatch: {a} vs {b} for {x:?} / {y:?}"
            ),
            (a, b) => assert_eq!(a, b, "degeneracy mismatch for {x:?} / {y:?}"),
        }
    }
}

#[test]
fn pearson_matches_brute_force_on_random_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..300 {
        let len = rng.random_range(2..=10);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-50.0..50.0)).collect();
        let y: Vec<f64> = (0..len).map(|_| rng.random_range(-50.0..50.0)).collect();
        let fast = pearson(&x, &y).unwrap();
        let slow = brute_force_pearson(&x, &y);
        match (fast, slow) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
            (a, b) => assert_eq!(a, b),
        }
    }
}

#[test]
fn sample_level_corr_matches_an_independent_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let n_samples = 40;
    let n_models = 4;
    let sample_ids: Vec<SampleId> = (0..n_samples)
        .map(|i| SampleId::new(format!("dd-{i:06}-abcd1234")))
        .collect();
    let model_ids: Vec<String> = (0..n_models).map(|m| format!("model-{m}")).collect();

    let mut matrix = ScoreMatrix::new(sample_ids, model_ids);
    let mut human = vec![vec![0.0f64; n_models]; n_samples];
    let mut metric = vec![vec![0.0f64; n_models]; n_samples];
    for (i, row) in human.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = rng.random_range(0.0..100.0);
            matrix.set_human(i, j, *cell).unwrap();
        }
    }
    for (i, row) in metric.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = rng.random_range(0.0..100.0);
            matrix.set_metric(i, j, *cell).unwrap();
        }
    }

    for kind in CorrelationKind::ALL {
        let result = sample_level_corr(&matrix, kind).unwrap();
        let mut expected_sum = 0.0;
        let mut expected_count = 0usize;
        for i in 0..n_samples {
            let rho = match kind {
                CorrelationKind::Pearson => brute_force_pearson(&human[i], &metric[i]),
                CorrelationKind::KendallTau => brute_force_tau_b(&human[i], &metric[i]),
            };
            if let Some(rho) = rho {
                expected_sum += rho;
                expected_count += 1;
            }
        }
        assert_eq!(result.samples_used, expected_count);
        let expected_mean = expected_sum / expected_count as f64;
        assert!(
            (result.mean.unwrap() - expected_mean).abs() < 1e-12,
            "{kind}: {:?} vs {expected_mean}",
            result.mean
        );
    }
}
