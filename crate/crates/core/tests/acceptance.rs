//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use benjamin_lab::bilinear::{case2_inequality_ratio, harmonic_sequence, sweep_case1, DEFAULT_EPS};
use benjamin_lab::cli;
use benjamin_lab::dispersion::{identity_errors, resonance_floor, random_params, DispersionParams};
use benjamin_lab::dyadic::{
    applicable_case, block_bound, block_norm_lower, can_be_nonzero, discretize_block, regression_triples, DyadicTriple,
};
use benjamin_lab::grid::{RealField, SpatialGrid};
use benjamin_lab::illposed::{growth_fits, theta_identity_error};
use benjamin_lab::rng::SplitMix64;
use benjamin_lab::solver::{
    free_estimate_exponent, kdv_soliton, linear_estimate_probe, picard_iterate, solve, PicardConfig, SolverConfig,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within(elapsed: Duration, budget_s: f64) -> bool {
    elapsed.as_secs_f64() < budget_s
}

fn sup(a: &RealField, b: &RealField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn kb() -> DispersionParams {
    DispersionParams::new(1.0, 1.0, 0.0).unwrap()
}

fn resonance_identities() -> Verdict {
    let t0 = Instant::now();
    let mut rng = SplitMix64::new(2024);
    let (mut h, mut q, mut th): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for k in 0..100 {
        let p = random_params(&mut rng);
        let e = identity_errors(&p, 100_000, SplitMix64::at(7, 2 * k));
        h = h.max(e.h);
        q = q.max(e.q);
        th = th.max(theta_identity_error(&p, 100_000, SplitMix64::at(7, 2 * k + 1)));
    }
    let el = t0.elapsed();
    let pass = h <= 1e-10 && q <= 1e-10 && th <= 1e-10 && within(el, 5.0);
    verdict(pass, format!("max scaled error h {h:.2e}, q {q:.2e}, theta {th:.2e} over 100 sets x 1e5 samples; {el:.2?}"))
}

fn resonance_floor_sweep() -> Verdict {
    let t0 = Instant::now();
    let f = resonance_floor(&kb(), 10, 4).unwrap();
    let el = t0.elapsed();
    verdict(
        f.min_ratio >= 0.5 && within(el, 5.0),
        format!("min |h|/|N1N2N3| = {:.4} over {} triples; {el:.2?}", f.min_ratio, f.samples),
    )
}

fn block_envelope() -> Verdict {
    let t0 = Instant::now();
    let p = kb();
    let triples = regression_triples(&p, 100, 11);
    let mut worst: f64 = 0.0;
    for t in &triples {
        let bound = block_bound(t, applicable_case(t)).unwrap().value;
        worst = worst.max(block_norm_lower(t, &p, 32).unwrap() / bound);
    }
    // blocks ruled out by the support conditions: both the estimator and
    // the raw discretization must see nothing
    let mut rng = SplitMix64::new(5);
    let mut vanishing = 0;
    let mut leaks = 0;
    while vanishing < 100 {
        let d = |r: &mut SplitMix64, lo: i32, hi: i32| lo + (r.next_u64() % (hi - lo + 1) as u64) as i32;
        let n = [d(&mut rng, -1, 5), d(&mut rng, -1, 5), d(&mut rng, -1, 5)];
        let t = DyadicTriple::new(n, d(&mut rng, -1, 19), [d(&mut rng, 0, 12), d(&mut rng, 0, 12), d(&mut rng, 0, 12)]).unwrap();
        if can_be_nonzero(&t, &p) {
            continue;
        }
        vanishing += 1;
        let block = discretize_block(&t, &p, 16).unwrap();
        if block_norm_lower(&t, &p, 32).unwrap() != 0.0 || !block.is_empty() {
            leaks += 1;
        }
    }
    let el = t0.elapsed();
    verdict(
        triples.len() == 100 && worst <= 10.0 && leaks == 0 && within(el, 120.0),
        format!("worst lower/bound = {worst:.3} over {} blocks at R=32; {leaks} of 100 vanishing blocks nonzero; {el:.2?}", triples.len()),
    )
}

fn soliton() -> Verdict {
    let t0 = Instant::now();
    let p = DispersionParams::new(0.0, 1.0, 0.0).unwrap();
    let g = SpatialGrid::new(512, 40.0).unwrap();
    let u0 = g.sample(kdv_soliton(0.5, 0.0, 0.0));
    let exact = g.sample(kdv_soliton(0.5, 0.0, 1.0));
    let run = |dt: f64| solve(&u0, &SolverConfig::new(g.clone(), dt, 1.0).unwrap().with_stride(100).unwrap(), &p).unwrap();
    let tr = run(1e-3);
    let linf = sup(tr.last(), &exact) / exact.max_abs();
    let (half, quarter) = (run(5e-4), run(2.5e-4));
    let order = sup(tr.last(), half.last()) / sup(half.last(), quarter.last());
    let el = t0.elapsed();
    let pass = linf <= 1e-6
        && tr.mass_drift() <= 1e-12
        && tr.l2_drift() <= 1e-8
        && (12.0..=20.0).contains(&order)
        && within(el, 30.0);
    verdict(
        pass,
        format!(
            "Linf rel {linf:.2e}, mass drift {:.2e}, L2 drift {:.2e}, Richardson ratio {order:.2}; {el:.2?}",
            tr.mass_drift(),
            tr.l2_drift()
        ),
    )
}

fn picard() -> Verdict {
    let t0 = Instant::now();
    let p = kb();
    let sg = SpatialGrid::new(64, 20.0).unwrap();
    let u0 = sg.sample(|x| 0.1 * (-x * x).exp());
    let delta = 0.25;
    let pc = PicardConfig::new(delta, 7, sg.clone(), 128).unwrap();
    let r = picard_iterate(&u0, &pc, 0.0, 0.55, &p).unwrap();
    let d = &r.differences;
    let contracting = !r.diverged && d.len() >= 5 && d.windows(2).take(5).all(|w| w[1] <= 0.5 * w[0]);
    let st = &pc.st_grid;
    let dt = st.dt() / 4.0;
    let cfg = SolverConfig::new(sg, dt, delta / 2.0).unwrap().with_stride(4).unwrap();
    let tr = solve(&u0, &cfg, &p).unwrap();
    let mut worst: f64 = 0.0;
    for (k, l) in (st.origin()..st.nt()).enumerate() {
        if st.t(l) > delta / 2.0 + 1e-12 {
            break;
        }
        assert!((tr.times[k] - st.t(l)).abs() < 1e-12);
        worst = worst.max(sup(&r.last().real_slice(l), &tr.fields[k]));
    }
    let el = t0.elapsed();
    let shown: Vec<String> = d.iter().take(6).map(|x| format!("{x:.2e}")).collect();
    verdict(
        contracting && worst <= 1e-4 && within(el, 120.0),
        format!("differences [{}], Linf vs stepper on [0, d/2] {worst:.2e}; {el:.2?}", shown.join(", ")),
    )
}

fn linear_estimate() -> Verdict {
    let t0 = Instant::now();
    let p = kb();
    let sg = SpatialGrid::new(128, 20.0).unwrap();
    let u0 = sg.sample(|x| (-x * x).exp());
    let mut pass = true;
    let mut parts = Vec::new();
    for b in [0.55, 0.75] {
        let s: Vec<_> = [0.5, 0.25, 0.125].iter().map(|&d| linear_estimate_probe(&u0, d, 0.0, b, &p, 2048).unwrap()).collect();
        let slope = free_estimate_exponent(&s).unwrap().slope;
        let target = (1.0 - 2.0 * b) / 2.0;
        pass &= (slope - target).abs() <= 0.1;
        parts.push(format!("b={b}: slope {slope:.4} vs {target:.3}"));
    }
    let el = t0.elapsed();
    verdict(pass && within(el, 60.0), format!("{}; {el:.2?}", parts.join(", ")))
}

fn bilinear_dichotomy() -> Verdict {
    let t0 = Instant::now();
    let p = kb();
    let ns: Vec<f64> = (6..=10).map(|k| 2f64.powi(k)).collect();
    let mut pass = true;
    let mut parts = Vec::new();
    for b in [0.3, 0.5, 0.7] {
        let slope = sweep_case1(-1.0, b, DEFAULT_EPS, &p, &ns).unwrap().fit.unwrap().slope;
        pass &= slope >= 0.2;
        parts.push(format!("s=-1 b={b}: slope {slope:.3}"));
    }
    let spread = sweep_case1(-0.5, 0.55, DEFAULT_EPS, &p, &ns).unwrap().spread();
    pass &= spread <= 4.0;
    let el = t0.elapsed();
    verdict(pass && within(el, 600.0), format!("{}; s=-0.5 b=0.55 max/min {spread:.3}; {el:.2?}", parts.join(", ")))
}

fn case2_sequence() -> Verdict {
    let t0 = Instant::now();
    let r: Vec<f64> = [25, 100, 400]
        .iter()
        .map(|&m| {
            let (l, r) = case2_inequality_ratio(&harmonic_sequence(m)).unwrap();
            l / r
        })
        .collect();
    let el = t0.elapsed();
    let pass = (r[1] - 2.35).abs() <= 0.05 && r[0] < r[1] && r[1] < r[2] && within(el, 1.0);
    verdict(pass, format!("ratios {:.4}, {:.4}, {:.4} at m = 25, 100, 400; {el:.2?}", r[0], r[1], r[2]))
}

fn a3_growth() -> Verdict {
    let t0 = Instant::now();
    let ns: Vec<f64> = (8..=12).map(|k| 2f64.powi(k)).collect();
    let fits = growth_fits(&[-1.0, -0.75, -0.5], &ns, &kb()).unwrap();
    let pass = fits.iter().all(|f| (f.fit.slope - f.expected_slope).abs() <= 0.15);
    let parts: Vec<String> =
        fits.iter().map(|f| format!("s={}: {:.4} vs {}", f.s, f.fit.slope, f.expected_slope)).collect();
    let el = t0.elapsed();
    verdict(pass && within(el, 600.0), format!("{}; {el:.2?}", parts.join(", ")))
}

fn determinism() -> Verdict {
    let runs: [&[&str]; 4] = [
        &["resonance", "--samples", "2000", "--param-sets", "4", "--seed", "9"],
        &["blocks", "--count", "6", "--resolution", "16", "--seed", "3"],
        &["bilinear-sweep", "--n-list", "64,128,256"],
        &["counterexample", "--family", "second"],
    ];
    let mut same = 0;
    for args in runs {
        let csvs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let out = dir.path().to_str().unwrap().to_string();
                let mut argv = vec!["blab"];
                argv.extend_from_slice(args);
                argv.extend(["--out", out.as_str(), "--quiet"]);
                assert_eq!(cli::run(argv), 0);
                std::fs::read(dir.path().join(format!("{}.csv", args[0]))).unwrap()
            })
            .collect();
        if csvs[0] == csvs[1] && !csvs[0].is_empty() {
            same += 1;
        }
    }
    verdict(same == runs.len(), format!("{same} of {} subcommands byte-identical across repeated runs", runs.len()))
}

fn main() {
    type Check = fn() -> Verdict;
    let criteria: [(&str, Check); 10] = [
        ("resonance identity suite", resonance_identities),
        ("resonance floor", resonance_floor_sweep),
        ("block-bound envelope", block_envelope),
        ("soliton regression", soliton),
        ("Picard contraction", picard),
        ("linear-estimate exponents", linear_estimate),
        ("bilinear threshold dichotomy", bilinear_dichotomy),
        ("second-family sequence divergence", case2_sequence),
        ("A3 growth exponent", a3_growth),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let v = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| {
                let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                verdict(false, format!("panicked: {}", msg.unwrap_or_default()))
            });
        if !v.pass {
            failed += 1;
        }
        println!("{} {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
