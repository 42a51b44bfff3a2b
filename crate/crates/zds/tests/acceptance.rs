//! End-to-end checks, one per advertised guarantee, each printing a
//! `criterion k: PASS` summary line (visible with `-- --nocapture`).
//! The two-bin threshold scan dominates the runtime at a few minutes;
//! everything else finishes in seconds.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigUint;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use zds::{
    binomial_normal_ks_with, brute_force_counts, chi2_cdf, ks_statistic,
    ks_statistic_with, nist_report, ratio_sweep, synthesize, threshold_scan_with,
    type1_error, Contribution, ExactDistribution, KsConvention, PValueMethod,
    SynthesisSpec, THRESHOLD_CROSSING_RESOLUTION,
};

fn engine_counts(spec: &SynthesisSpec) -> BTreeMap<u64, BigUint> {
    let dist = ExactDistribution::from_counts(&synthesize(spec).unwrap()).unwrap();
    dist.support()
        .iter()
        .cloned()
        .zip(dist.counts().iter().cloned())
        .collect()
}

fn relative_to(value: f64, reference: f64) -> f64 {
    (value / reference - 1.0).abs()
}

#[test]
fn criterion_1_oracle_equivalence() {
    let start = Instant::now();
    let mut pairs = 0;
    for sample_size in 1..=10u64 {
        for bins in 2..=5u64 {
            let spec = SynthesisSpec::new(sample_size, bins);
            assert_eq!(
                engine_counts(&spec),
                brute_force_counts(sample_size, bins).unwrap(),
                "criterion 1: FAIL: count mismatch at N={sample_size}, n={bins}"
            );
            pairs += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "criterion 1: FAIL: took {elapsed:.1} s (budget 30 s)");
    println!(
        "criterion 1: PASS: engine equals enumeration on all {pairs} (N, n) pairs, \
         1<=N<=10, 2<=n<=5 ({elapsed:.2} s)"
    );
}

#[test]
fn criterion_2_nist_case() {
    let start = Instant::now();
    let report = nist_report().unwrap();
    let chi2_published = [33.91, 34.27, 34.63, 35.00];
    let exact_published = [1.59e-4, 1.40e-4, 1.25e-4, 1.09e-4];
    let approx_published = [9.26e-5, 8.00e-5, 6.91e-5, 5.96e-5];
    for (idx, row) in report.rows.iter().enumerate() {
        assert!(
            relative_to(row.chi2, chi2_published[idx]) < 0.01,
            "criterion 2: FAIL: chi2 at s={}: {} vs {}",
            row.s,
            row.chi2,
            chi2_published[idx]
        );
        assert!(
            relative_to(row.exact_p, exact_published[idx]) < 0.01,
            "criterion 2: FAIL: exact p at s={}: {} vs {}",
            row.s,
            row.exact_p,
            exact_published[idx]
        );
        assert!(
            relative_to(row.approx_p, approx_published[idx]) < 0.01,
            "criterion 2: FAIL: approx p at s={}: {} vs {}",
            row.s,
            row.approx_p,
            approx_published[idx]
        );
    }
    assert!(
        relative_to(report.type1_exact.rate_f64, 9.76e-5) < 0.01,
        "criterion 2: FAIL: exact-method type-I rate {} vs 9.76e-5",
        report.type1_exact.rate_f64
    );
    assert!(
        relative_to(report.type1_approx.rate_f64, 1.59e-4) < 0.01,
        "criterion 2: FAIL: approx-method type-I rate {} vs 1.59e-4",
        report.type1_approx.rate_f64
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 2: FAIL: took {elapsed:.1} s (budget 10 s)");
    println!(
        "criterion 2: PASS: N=55, n=10: four p-value pairs within 1% of the published \
         3-figure values; type-I rates {:.6e} (exact, from s={:?}) and {:.6e} (approx, \
         from s={:?}) within 1% ({elapsed:.2} s)",
        report.type1_exact.rate_f64,
        report.type1_exact.rejection_min_s,
        report.type1_approx.rate_f64,
        report.type1_approx.rejection_min_s,
    );
}

#[test]
fn criterion_3_ks_golden_values() {
    let start = Instant::now();
    let dist =
        ExactDistribution::from_counts(&synthesize(&SynthesisSpec::new(20, 4)).unwrap())
            .unwrap();
    let jump = ks_statistic_with(&dist, KsConvention::JumpPointsOnly).unwrap();
    let golden_elapsed = start.elapsed().as_secs_f64();
    let real = ks_statistic(&dist).unwrap();
    assert!(
        (jump.d - 0.062).abs() <= 0.001,
        "criterion 3: FAIL: D(20,4) = {} outside 0.062 +/- 0.001 (jump-point)",
        jump.d
    );
    assert!(
        golden_elapsed < 1.0,
        "criterion 3: FAIL: took {golden_elapsed:.2} s (budget 1 s)"
    );

    // monotone decrease along the fixed-ratio sequence N = n
    let ds: Vec<f64> = ratio_sweep(&[(20, 20), (40, 40), (80, 80)])
        .into_iter()
        .map(|row| row.unwrap().d)
        .collect();
    assert!(
        ds[0] > ds[1] && ds[1] > ds[2],
        "criterion 3: FAIL: D along N=n in {{20,40,80}} not decreasing: {ds:?}"
    );
    println!(
        "criterion 3: PASS: D(20,4) = {:.6} (jump-point; real-line sup {:.6}) in \
         0.062 +/- 0.001 ({golden_elapsed:.3} s); N=n trend {:.6} > {:.6} > {:.6}",
        jump.d, real.d, ds[0], ds[1], ds[2]
    );
}

#[test]
#[ignore = "long-running large-ratio table; run explicitly"]
fn criterion_3_extended_large_ratio() {
    let start = Instant::now();
    let dist = ExactDistribution::from_counts(
        &synthesize(&SynthesisSpec::new(200, 100)).unwrap(),
    )
    .unwrap();
    let jump = ks_statistic_with(&dist, KsConvention::JumpPointsOnly).unwrap();
    assert!(
        (jump.d - 0.018).abs() <= 0.001,
        "criterion 3 (extended): FAIL: D(200,100) = {} outside 0.018 +/- 0.001",
        jump.d
    );
    println!(
        "criterion 3 (extended): PASS: D(200,100) = {:.6} in 0.018 +/- 0.001 ({:.0} s)",
        jump.d,
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_4_threshold_scans() {
    let start = Instant::now();
    let cut = 0.02 - THRESHOLD_CROSSING_RESOLUTION;

    // the real-line sup convention does not reproduce the advertised n=3
    // value, which triggers the jump-point-only fallback for these scans
    let real = threshold_scan_with(3, 0.02, 300, KsConvention::RealLineSup).unwrap();
    assert_ne!(
        real.first_sample_size,
        Some(184),
        "criterion 4: FAIL: real-line convention unexpectedly matches the golden value"
    );

    let scan3 = threshold_scan_with(3, 0.02, 300, KsConvention::JumpPointsOnly).unwrap();
    assert_eq!(
        scan3.first_sample_size,
        Some(184),
        "criterion 4: FAIL: n=3 first N = {:?}, want 184",
        scan3.first_sample_size
    );
    let rerun3 = threshold_scan_with(3, 0.02, 183, KsConvention::JumpPointsOnly).unwrap();
    assert_eq!(
        rerun3.first_sample_size, None,
        "criterion 4: FAIL: n=3 rerun below the crossing still finds one"
    );

    let scan4 = threshold_scan_with(4, 0.02, 300, KsConvention::JumpPointsOnly).unwrap();
    assert_eq!(
        scan4.first_sample_size,
        Some(77),
        "criterion 4: FAIL: n=4 first N = {:?}, want 77",
        scan4.first_sample_size
    );
    let rerun4 = threshold_scan_with(4, 0.02, 76, KsConvention::JumpPointsOnly).unwrap();
    assert_eq!(
        rerun4.first_sample_size, None,
        "criterion 4: FAIL: n=4 rerun below the crossing still finds one"
    );

    let scan2 = threshold_scan_with(2, 0.02, 1650, KsConvention::JumpPointsOnly).unwrap();
    assert_eq!(
        scan2.first_sample_size,
        Some(1591),
        "criterion 4: FAIL: n=2 first N = {:?}, want 1591",
        scan2.first_sample_size
    );
    // the trace doubles as the rerun check: every earlier N stayed above
    // the cut, so any shorter scan returns not-found
    assert_eq!(scan2.trace.len(), 1591);
    for &(sample_size, d) in &scan2.trace[..scan2.trace.len() - 1] {
        assert!(
            d >= cut,
            "criterion 4: FAIL: n=2 scan crossed early at N={sample_size} (D={d})"
        );
    }
    println!(
        "criterion 4: PASS: first N below K-S 0.02: n=2 -> 1591, n=3 -> 184, n=4 -> 77 \
         (jump-point convention; real-line n=3 gives {:?}) ({:.0} s)",
        real.first_sample_size,
        start.elapsed().as_secs_f64()
    );
}

fn run_suite<S>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases: 200,
        failure_persistence: None,
        ..Config::default()
    });
    if let Err(error) = runner.run(&strategy, test) {
        panic!("criterion 5: FAIL: {name}: {error}");
    }
}

#[test]
fn criterion_5_invariant_suites() {
    let start = Instant::now();
    let small = || (1u64..=12, 1u64..=6);

    run_suite("normalization", small(), |(sample_size, bins)| {
        let dist = ExactDistribution::from_counts(
            &synthesize(&SynthesisSpec::new(sample_size, bins)).unwrap(),
        )
        .unwrap();
        prop_assert_eq!(dist.total(), &BigUint::from(bins).pow(sample_size as u32));
        prop_assert_eq!(dist.counts().iter().sum::<BigUint>(), dist.total().clone());
        Ok(())
    });

    run_suite("layer totals", small(), |(sample_size, bins)| {
        let mut spec = SynthesisSpec::new(sample_size, bins);
        spec.retain_layers = true;
        let table = synthesize(&spec).unwrap();
        for layer in table.retained_layers().unwrap() {
            let i = layer.bin_index();
            for m in 0..=sample_size {
                let expect = zds::binomial_coefficient(sample_size, m).unwrap()
                    * BigUint::from(i).pow(m as u32);
                prop_assert_eq!(
                    layer.subsample_total(m),
                    expect,
                    "layer {} subsample {}",
                    i,
                    m
                );
            }
        }
        Ok(())
    });

    run_suite("parity", small(), |(sample_size, bins)| {
        let dist = ExactDistribution::from_counts(
            &synthesize(&SynthesisSpec::new(sample_size, bins)).unwrap(),
        )
        .unwrap();
        for &s in dist.support() {
            prop_assert_eq!(s % 2, sample_size % 2, "s = {}", s);
        }
        Ok(())
    });

    run_suite("support bounds", small(), |(sample_size, bins)| {
        let dist = ExactDistribution::from_counts(
            &synthesize(&SynthesisSpec::new(sample_size, bins)).unwrap(),
        )
        .unwrap();
        let (lo, hi) = zds::support_bounds(sample_size, bins);
        prop_assert_eq!(*dist.support().first().unwrap(), lo);
        prop_assert_eq!(*dist.support().last().unwrap(), hi);
        Ok(())
    });

    run_suite("p-value monotonicity", small(), |(sample_size, bins)| {
        let dist = ExactDistribution::from_counts(
            &synthesize(&SynthesisSpec::new(sample_size, bins)).unwrap(),
        )
        .unwrap();
        let support = dist.support();
        for pair in support.windows(2) {
            prop_assert!(
                dist.exact_p_value(pair[0]).unwrap() > dist.exact_p_value(pair[1]).unwrap(),
                "p not strictly decreasing between s={} and s={}",
                pair[0],
                pair[1]
            );
        }
        prop_assert_eq!(dist.exact_p_value_f64(support[0]).unwrap(), 1.0);
        Ok(())
    });

    run_suite(
        "reuse vs direct",
        (1u64..=12, 1u64..=6, 0u64..=1000, 0u64..=1000),
        |(sample_size, bins, m_seed, i_seed)| {
            let m_subsample = 1 + m_seed % sample_size;
            let bins_used = 1 + i_seed % bins;
            let mut spec = SynthesisSpec::new(sample_size, bins);
            spec.retain_layers = true;
            let table = synthesize(&spec).unwrap();
            let reused =
                ExactDistribution::reuse_subdistribution(&table, m_subsample, bins_used)
                    .unwrap();
            let direct = ExactDistribution::from_counts(
                &synthesize(&SynthesisSpec::new(m_subsample, bins_used)).unwrap(),
            )
            .unwrap();
            prop_assert_eq!(reused.support(), direct.support());
            for idx in 0..direct.len() {
                prop_assert_eq!(reused.pmf_rational(idx), direct.pmf_rational(idx));
            }
            Ok(())
        },
    );

    run_suite(
        "cap consistency",
        (1u64..=12, 1u64..=6, 0u64..=1000),
        |(sample_size, bins, cap_seed)| {
            let (lo, hi) = zds::support_bounds(sample_size, bins);
            let cap = lo + cap_seed % (hi - lo + 1);
            let full = synthesize(&SynthesisSpec::new(sample_size, bins)).unwrap();
            let mut capped_spec = SynthesisSpec::new(sample_size, bins);
            capped_spec.s_cap = Some(cap);
            let capped = synthesize(&capped_spec).unwrap();
            let full_below: BTreeMap<_, _> = full
                .final_layer()
                .subsample(sample_size)
                .iter()
                .filter(|&(&s, _)| s <= cap)
                .map(|(&s, c)| (s, c.clone()))
                .collect();
            prop_assert_eq!(&full_below, capped.final_layer().subsample(sample_size));
            Ok(())
        },
    );

    // worker counts must not change a single count; small instances take
    // the sequential path, the fixed (60, 4) case crosses the parallel
    // chunking threshold
    let determinism = |(sample_size, bins): (u64, u64)| {
        let spec = SynthesisSpec::new(sample_size, bins);
        let reference = synthesize(&spec).unwrap();
        for workers in [1usize, 2, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let table = pool.install(|| synthesize(&spec)).unwrap();
            for m in 0..=sample_size {
                prop_assert_eq!(
                    table.final_layer().subsample(m),
                    reference.final_layer().subsample(m),
                    "workers = {}",
                    workers
                );
            }
        }
        Ok(())
    };
    determinism((60, 4)).unwrap();
    run_suite("worker determinism", small(), determinism);

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 5: FAIL: took {elapsed:.1} s (budget 60 s)");
    println!(
        "criterion 5: PASS: 8 property suites x 200 randomized cases (N<=12, n<=6) \
         plus a parallel-path determinism case ({elapsed:.1} s)"
    );
}

fn erf_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return -erf_oracle(-x);
    }
    if x <= 3.0 {
        // 2/√π Σ (−1)^k x^(2k+1) / (k! (2k+1))
        let mut term = x;
        let mut sum = x;
        for k in 1..200 {
            let kf = k as f64;
            term *= -x * x / kf;
            let add = term / (2.0 * kf + 1.0);
            sum += add;
            if add.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        sum * 2.0 / std::f64::consts::PI.sqrt()
    } else {
        // √π e^(x²) erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            d = 1.0 / d;
            c = x + a / c;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
    }
}

#[test]
fn criterion_6_special_function_quality() {
    let start = Instant::now();
    let mut worst_two = 0.0f64;
    let mut worst_one = 0.0f64;
    for i in 1..=10_000 {
        let x = i as f64 * 0.01;
        let two = (chi2_cdf(2, x).unwrap() - (1.0 - (-x / 2.0).exp())).abs();
        let one = (chi2_cdf(1, x).unwrap() - erf_oracle((x / 2.0).sqrt())).abs();
        worst_two = worst_two.max(two);
        worst_one = worst_one.max(one);
    }
    assert!(
        worst_two < 1e-12,
        "criterion 6: FAIL: chi2_cdf(2, .) off by {worst_two:.3e}"
    );
    assert!(
        worst_one < 1e-12,
        "criterion 6: FAIL: chi2_cdf(1, .) off by {worst_one:.3e}"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "criterion 6: FAIL: took {elapsed:.1} s (budget 5 s)");
    println!(
        "criterion 6: PASS: 10^4-point grids on (0, 100]: dof 2 within {worst_two:.2e} \
         of 1-e^(-x/2), dof 1 within {worst_one:.2e} of erf(sqrt(x/2)) ({elapsed:.2} s)"
    );
}

#[test]
fn criterion_7_type1_sweep_direction() {
    let start = Instant::now();
    let mut tight = Vec::new();
    let mut moderate = Vec::new();
    for sample_size in [55u64, 60, 70] {
        let dist = ExactDistribution::from_counts(
            &synthesize(&SynthesisSpec::new(sample_size, 10)).unwrap(),
        )
        .unwrap();
        let at_tight = type1_error(&dist, 1e-4, PValueMethod::Approx, true).unwrap();
        assert!(
            at_tight.rate_f64 > 1e-4,
            "criterion 7: FAIL: N={sample_size}: approx rate {} <= 1e-4",
            at_tight.rate_f64
        );
        tight.push(at_tight.rate_f64);
        let at_moderate = type1_error(&dist, 0.05, PValueMethod::Approx, true).unwrap();
        assert!(
            (0.03..=0.06).contains(&at_moderate.rate_f64),
            "criterion 7: FAIL: N={sample_size}: rate {} outside [0.03, 0.06] at alpha 0.05",
            at_moderate.rate_f64
        );
        moderate.push(at_moderate.rate_f64);
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 7: FAIL: took {elapsed:.1} s (budget 60 s)");
    println!(
        "criterion 7: PASS: n=10, N in {{55,60,70}}: approx-method rates at alpha 1e-4 \
         = {tight:?} all above alpha; at alpha 0.05 = {moderate:?} all in [0.03, 0.06] \
         ({elapsed:.1} s)"
    );
}

#[test]
fn criterion_8_binomial_normal_baseline() {
    // the half-step continuity correction evaluates the normal between the
    // jumps, so the published distance pairs it with jump-point reads
    let report =
        binomial_normal_ks_with(20, 0.5, true, KsConvention::JumpPointsOnly).unwrap();
    assert!(
        relative_to(report.d, 0.001391) < 0.05,
        "criterion 8: FAIL: D = {} not within 5% of 0.001391",
        report.d
    );
    let mismatched =
        binomial_normal_ks_with(20, 0.5, true, KsConvention::RealLineSup).unwrap();
    println!(
        "criterion 8: PASS: binomial_normal_ks(20, 0.5) = {:.6e} within 5% of 1.391e-3 \
         under convention: continuity correction + {} evaluation (real-line sup would \
         give {:.4}, recorded for contrast)",
        report.d,
        report.convention.label(),
        mismatched.d
    );
}

#[test]
fn absdev_contribution_is_oracle_checked_too() {
    // the alternate statistic feeds the same acceptance path as the default
    for sample_size in 1..=6u64 {
        for bins in 2..=4u64 {
            let mut spec = SynthesisSpec::new(sample_size, bins);
            spec.contribution = Contribution::AbsDeviation;
            assert_eq!(
                engine_counts(&spec),
                zds::brute_force_counts_with(&spec).unwrap(),
                "absdev mismatch at N={sample_size}, n={bins}"
            );
        }
    }
}
