use huca_core::traceio::{align, parse_series, series_to_csv, synthetic_start, synthetic_traces_seeded, SyntheticProfile};

#[test]
fn synthetic_traces_round_trip_through_csv() {
    let traces = synthetic_traces_seeded(2, 3, &SyntheticProfile::default()).unwrap();
    let load_csv = series_to_csv(synthetic_start(), traces.load.values());
    let price_csv = series_to_csv(synthetic_start(), traces.price.values());
    let load = parse_series(&load_csv).unwrap();
    let price = parse_series(&price_csv).unwrap();
    let set = align(&load, &price).unwrap();
    assert_eq!(set.start, synthetic_start());
    assert_eq!(set.traces.len(), 72);
    for (a, b) in set.traces.load.values().iter().zip(traces.load.values()) {
        assert!((a - b).abs() <= 1e-5 * b.abs());
    }
    for (a, b) in set.traces.price.values().iter().zip(traces.price.values()) {
        assert!((a - b).abs() <= 1e-5 * b.abs());
    }
    // re-serialising the parsed values is a fixed point
    assert_eq!(series_to_csv(set.start, set.traces.load.values()), load_csv);
}

#[test]
fn sub_hourly_rows_are_averaged() {
    let text = "timestamp,value\n2024-01-01 00:00:00,1\n2024-01-01 00:30:00,3\n2024-01-01 01:00:00,5\n";
    let s = parse_series(text).unwrap();
    assert_eq!(s.values, [2.0, 5.0]);
}

#[test]
fn bad_rows_name_their_line() {
    let text = "timestamp,value\n2024-01-01 00:00:00,1\nnot a row\n";
    match parse_series(text) {
        Err(huca_core::Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn gaps_and_misaligned_series_are_rejected() {
    let gap = "timestamp,value\n2024-01-01 00:00:00,1\n2024-01-01 03:00:00,1\n";
    assert!(parse_series(gap).is_err());
    let a = parse_series("timestamp,value\n2024-01-01 00:00:00,1\n").unwrap();
    let b = parse_series("timestamp,value\n2024-01-01 01:00:00,1\n").unwrap();
    assert!(align(&a, &b).is_err());
}

#[test]
fn same_seed_same_traces() {
    let p = SyntheticProfile::default();
    let a = synthetic_traces_seeded(5, 2, &p).unwrap();
    let b = synthetic_traces_seeded(5, 2, &p).unwrap();
    let c = synthetic_traces_seeded(6, 2, &p).unwrap();
    assert_eq!(a.load.values(), b.load.values());
    assert_ne!(a.load.values(), c.load.values());
    assert!(a.price.values().iter().all(|v| *v > 0.0));
}
