use spirallax::{random_seed, run_suite, Tolerances};

#[test]
fn suite_passes_on_twenty_instances_per_n() {
    let tol = Tolerances::default();
    for n in [5, 6, 8, 9] {
        for s in 0..20 {
            let r = run_suite(&random_seed(n, s, 0.25).unwrap(), &tol).unwrap();
            let bad: Vec<_> = r.failures().collect();
            assert!(r.pass, "N = {n}, seed {s}: {bad:?}");
        }
    }
}
