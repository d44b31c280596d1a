use rptsne::data_io::DataMatrix;
use rptsne::evaluation::time_stage;
use rptsne::reducers::{reduce, ReducerKind};
use rptsne::rng::SeededRng;
use rptsne::tsne::squared_distances;

fn best_of_three(x: &DataMatrix) -> f64 {
    (0..3)
        .map(|_| time_stage(|| squared_distances(x).unwrap()).1)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn distance_stage_time_scales_with_dimension() {
    let mut rng = SeededRng::new(8);
    let values = (0..1000 * 784).map(|_| rng.uniform()).collect();
    let full = DataMatrix::new(1000, 784, values).unwrap();
    let reduced = reduce(&full, ReducerKind::RandomProjection, 50, 8).unwrap();
    let ratio = best_of_three(&reduced) / best_of_three(&full);
    let expected = 50.0 / 784.0;
    assert!(
        (0.5 * expected..=3.0 * expected).contains(&ratio),
        "time ratio {ratio:.4} outside [{:.4}, {:.4}]",
        0.5 * expected,
        3.0 * expected
    );
}
