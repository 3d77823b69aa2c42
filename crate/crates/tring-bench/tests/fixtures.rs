use tring_bench::{observations, ring_tensor};

#[test]
fn ring_tensor_is_reproducible_from_the_seed() {
    let a = ring_tensor(6, 3, 2, 42);
    let b = ring_tensor(6, 3, 2, 42);
    assert_eq!(a.dims(), &[6, 6, 6]);
    assert_eq!(a.data(), b.data());

    let c = ring_tensor(6, 3, 2, 43);
    assert_ne!(a.data(), c.data());
}

#[test]
fn observations_sample_the_requested_fraction_without_replacement() {
    let truth = ring_tensor(5, 3, 2, 7);
    let obs = observations(&truth, 0.3, 0.01, 7);

    assert_eq!(obs.len(), (0.3f64 * 125.0).round() as usize);
    let mut seen = obs.linear_indices().to_vec();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), obs.len());
    assert!(seen.iter().all(|&i| (1..=125).contains(&i)));
}

#[test]
fn observations_carry_noise_at_the_requested_level() {
    let truth = ring_tensor(8, 3, 1, 11);
    let obs = observations(&truth, 0.5, 0.05, 11);

    let noise_sq: f64 = obs
        .values()
        .iter()
        .zip(obs.linear_indices())
        .map(|(&v, &i)| (v - truth.data()[i - 1]) * (v - truth.data()[i - 1]))
        .sum();
    assert!(noise_sq > 0.0);

    let sigma = 0.05 * truth.fro_norm() / (truth.numel() as f64).sqrt();
    let expected = sigma * sigma * obs.len() as f64;
    assert!(noise_sq > 0.2 * expected && noise_sq < 5.0 * expected);
}

#[test]
fn observations_are_reproducible_from_the_seed() {
    let truth = ring_tensor(5, 4, 2, 3);
    let a = observations(&truth, 0.4, 0.02, 9);
    let b = observations(&truth, 0.4, 0.02, 9);
    assert_eq!(a.linear_indices(), b.linear_indices());
    assert_eq!(a.values(), b.values());
}
