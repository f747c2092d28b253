mod common;

use rayon::prelude::*;

#[test]
fn folded_statistics_equal_batch_counts_on_random_streams() {
    let failures: Vec<String> = (0..100u64)
        .into_par_iter()
        .filter_map(|seed| {
            let (schema, stream) = common::random_stream(seed, 10_000);
            common::incremental_matches_batch(&schema, &stream)
                .err()
                .map(|e| format!("seed {seed}: {e}"))
        })
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn prefixes_stay_equivalent() {
    let (schema, stream) = common::random_stream(7, 2_000);
    for end in [0, 1, 2, stream.len() / 3, stream.len()] {
        common::incremental_matches_batch(&schema, &stream[..end]).unwrap();
    }
}
