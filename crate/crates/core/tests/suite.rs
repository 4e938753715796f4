use rfq::verify::run_suite;

#[test]
fn randomized_suite_agrees_with_oracle() {
    for seed in 1..=4 {
        let r = run_suite(100, 30, seed);
        assert!(
            r.passed(),
            "seed {seed}: {:?}\n{}",
            r.errors,
            r.failures.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("\n")
        );
    }
}
