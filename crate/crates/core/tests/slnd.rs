use sfbm::numerics::RandomStream;
use sfbm::slnd::{
    conditional_variance_exact, conditional_variance_truncated, estimate_k2, lemma_bound_check,
    quadratic_form_truncated, trial_configuration, write_k2_csv, write_k2_json, Configuration,
};
use sfbm::spectrum::{build_spectrum, DEFAULT_TOL};
use sfbm::sphere::SpherePoint;
use sfbm::{Execution, HurstIndex};

fn h(v: f64) -> HurstIndex {
    HurstIndex::new(v).unwrap()
}

#[test]
fn experiment_is_independent_of_execution() {
    let st = RandomStream::new(21, 0);
    let a = estimate_k2(Execution::Sequential, h(0.3), 40, 6, (0.01, 1.0), &st).unwrap();
    let b = estimate_k2(Execution::Parallel, h(0.3), 40, 6, (0.01, 1.0), &st).unwrap();
    let key = |e: &sfbm::slnd::K2Estimate| e.records.iter().map(|r| (r.n, r.cv.to_bits())).collect::<Vec<_>>();
    assert_eq!(key(&a), key(&b));
    assert_eq!(a.min_ratio.to_bits(), b.min_ratio.to_bits());
    let min = a.records.iter().filter_map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    assert_eq!(a.min_ratio, min);
    assert!(a.min_ratio > 0.0);
}

#[test]
fn harmonic_and_legendre_routes_agree() {
    let s = build_spectrum(h(0.35), 96, DEFAULT_TOL).unwrap();
    let st = RandomStream::new(4, 4);
    for i in 0..12 {
        let (_, c) = trial_configuration(i, 5, (0.05, 1.0), &st.child(i as u64));
        let rep = conditional_variance_truncated(&c, &s, 96).unwrap();
        if rep.jitter > 0.0 || rep.clamped > 0.0 {
            continue;
        }
        let q = quadratic_form_truncated(&c, &rep.weights, &s, 96).unwrap();
        assert!(
            (q - rep.conditional_variance).abs() <= 1e-9 * (1.0 + q.abs()),
            "trial {i}: {q} vs {}",
            rep.conditional_variance
        );
    }
}

#[test]
fn lemma_bound_is_rounded_down() {
    let s = build_spectrum(h(0.25), 64, DEFAULT_TOL).unwrap();
    let st = RandomStream::new(8, 1);
    for i in 0..16 {
        let (_, c) = trial_configuration(i, 4, (0.02, 1.0), &st.child(i as u64));
        if c.points.is_empty() {
            continue;
        }
        let b = lemma_bound_check(&c, &s, 64).unwrap();
        if let Some(c2) = b.c2_estimate {
            assert!(c2 * b.epsilon_pow <= b.lhs_min);
        }
        assert!(b.epsilon_with_anchor <= b.epsilon);
    }
}

#[test]
fn anchor_and_duplicates_carry_no_information() {
    let x = SpherePoint::from_angles(1.1, 0.4).unwrap();
    let y = SpherePoint::from_angles(0.8, 1.4).unwrap();
    let base = conditional_variance_exact(&Configuration::new(x, vec![y]), h(0.4)).unwrap();
    let padded = conditional_variance_exact(&Configuration::new(x, vec![y, SpherePoint::NORTH, y]), h(0.4)).unwrap();
    assert!((base.conditional_variance - padded.conditional_variance).abs() <= 1e-15);
    assert_eq!(padded.weights[1], 0.0);
    assert_eq!(padded.weights[2], 0.0);
}

#[test]
fn outputs_are_written() {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("slnd-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let est = estimate_k2(Execution::default(), h(0.5), 12, 3, (0.01, 1.0), &RandomStream::new(1, 0)).unwrap();
    write_k2_json(&dir.join("k2.json"), &est).unwrap();
    write_k2_csv(&dir.join("k2.csv"), &est).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("k2.json")).unwrap()).unwrap();
    assert_eq!(v["trials"], 12);
    assert_eq!(v["min_ratio"].as_f64().unwrap(), est.min_ratio);
    let csv = std::fs::read_to_string(dir.join("k2.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "n,epsilon,cv,ratio");
    assert_eq!(csv.lines().count(), 13);
    std::fs::remove_dir_all(dir).unwrap();
}
