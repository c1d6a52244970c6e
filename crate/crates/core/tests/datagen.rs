use rlfdc::datagen::{generate_benchmark, write_benchmark, SyntheticSpec, MANIFEST_FILE};
use rlfdc::dataset::{load_dataset, Outcome};

#[test]
fn density_tracks_the_spec_expectation() {
    let spec = SyntheticSpec {
        seed: 21,
        ..Default::default()
    };
    for d in generate_benchmark(&spec, 20).unwrap() {
        // expected ones per test: each method is entered with method_prob and
        // then runs its entry plus each other statement with statement_prob
        let expected_ones: f64 = (0..d.num_methods())
            .map(|m| {
                let s = d.method_elements(m).len() as f64;
                spec.method_prob * (1.0 + (s - 1.0) * spec.statement_prob)
            })
            .sum();
        let expected = expected_ones / d.num_elements() as f64;
        let ones: usize = d.tests().iter().map(|t| t.coverage.count_ones()).sum();
        let observed = ones as f64 / (d.num_tests() * d.num_elements()) as f64;
        assert!(
            (observed - expected).abs() <= 0.1,
            "{observed} vs {expected}"
        );
    }
}

#[test]
fn failing_tests_cover_a_fault_and_files_reload() {
    let spec = SyntheticSpec {
        seed: 5,
        faults: 2,
        ..Default::default()
    };
    let data = generate_benchmark(&spec, 6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_benchmark(dir.path(), &spec, &data).unwrap();
    for (entry, d) in manifest.files.iter().zip(&data) {
        let text = std::fs::read(dir.path().join(&entry.file)).unwrap();
        let back = load_dataset(&text).unwrap();
        assert_eq!(back.to_canonical_string(), d.to_canonical_string());
        for t in d.tests().iter().filter(|t| t.outcome == Outcome::Fail) {
            assert!(d.faults().iter().any(|&f| t.coverage.get(f)));
        }
        assert_eq!(d.initial_failing(), &[d.failing_tests().min().unwrap()]);
    }
    assert!(dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn shape_follows_spec() {
    let spec = SyntheticSpec {
        methods: 7,
        min_statements: 2,
        max_statements: 4,
        tests: 30,
        seed: 2,
        ..Default::default()
    };
    for d in generate_benchmark(&spec, 4).unwrap() {
        assert_eq!(d.num_methods(), 7);
        assert_eq!(d.num_tests(), 30);
        for m in 0..7 {
            assert!((2..=4).contains(&d.method_elements(m).len()));
        }
    }
}
