use huca_core::trainer::ReplayBuffer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn ring_evicts_oldest_first() {
    let mut buf = ReplayBuffer::new(4);
    for i in 0..10 {
        buf.push(i);
    }
    assert_eq!(buf.len(), 4);
    assert_eq!(buf.iter().copied().collect::<Vec<_>>(), [6, 7, 8, 9]);
}

#[test]
fn sampling_needs_a_full_batch() {
    let mut buf = ReplayBuffer::new(8);
    (0..3).for_each(|i| buf.push(i));
    assert!(buf.sample_minibatch(4, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    let batch = buf.sample_minibatch(3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mut got: Vec<i32> = batch.into_iter().copied().collect();
    got.sort();
    assert_eq!(got, [0, 1, 2]);
}

#[test]
fn every_item_is_drawn_at_rate_batch_over_len() {
    // each draw without replacement includes a given item with p = B/N
    let n = 50;
    let batch = 10;
    let rounds = 20_000;
    let mut buf = ReplayBuffer::new(n);
    (0..n).for_each(|i| buf.push(i));
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut hits = vec![0usize; n];
    for _ in 0..rounds {
        let drawn = buf.sample_minibatch(batch, &mut rng).unwrap();
        let mut seen = std::collections::HashSet::new();
        for &i in drawn {
            assert!(seen.insert(i), "duplicate in one minibatch");
            hits[i] += 1;
        }
    }
    let p = batch as f64 / n as f64;
    let sd = (rounds as f64 * p * (1.0 - p)).sqrt();
    for (i, h) in hits.iter().enumerate() {
        let z = (*h as f64 - rounds as f64 * p) / sd;
        assert!(z.abs() < 5.0, "item {i}: {h} hits, z = {z:.2}");
    }
}
