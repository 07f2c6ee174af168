//! Acceptance suite: one PASS/FAIL line per criterion. With
//! `MILNOR_ACCEPTANCE_STRICT=1` the process exits non-zero when any
//! criterion fails; otherwise failures are reported and the remaining test
//! targets of the workspace still run.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use milnor::crypto::{
    self, cca_experiment, CcaOptions, EncryptOptions, GermCatalog, KeyRange, RandomGuess,
    Reencrypt, Scheme,
};
use milnor::fiber::{
    choose_milnor_data, components_with_plateau, sample_fiber, top_homology_rank, FiberSign,
    MilnorSearch, DEFAULT_SEED,
};
use milnor::gaussmanin::{
    annihilator_residual, eta_scaling, gauss_ode_residual, hyp2f1, period_on_grid,
    quadratic_period, random_hypergeometric_cases, x_power_printed_residual, DifferentialOperator,
    HypergeometricParams, UniformGrid, X_POWER_POINTS,
};
use milnor::germ::standard::{power, quadratic_form, sum_of_squares, x4_minus_y2};
use milnor::morse::{find_critical_points, CriticalPoint, MorseOptions, Morsification, SearchBox};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn period_vs_closed_form() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [1.5, 2.0, 4.0] {
        let start = Instant::now();
        let p = quadratic_period(3, 0, 1.0, t, 1_000_000, DEFAULT_SEED).unwrap();
        let elapsed = start.elapsed();
        let exact = 4.0 * PI / (t - 1.0);
        let z = (p.value - exact).abs() / p.std_error;
        pass &= z <= 3.0 && elapsed < Duration::from_secs(10);
        parts.push(format!("t={} |z|={:.2} {:.2}s", t, z, secs(elapsed)));
    }
    outcome(pass, parts.join("; "))
}

fn eta_scaling_report() -> Outcome {
    let s = eta_scaling(3, 0, &[0.25, 0.5, 1.0, 2.0], 1.0, 1_000_000, DEFAULT_SEED).unwrap();
    outcome(
        s.ci_width() < 0.05,
        format!(
            "alpha={:.6} ci95 width={:.2e} |alpha-(n-1)/2|={:.6} |alpha-n/2|={:.6}",
            s.alpha,
            s.ci_width(),
            s.distance_to_printed(),
            s.distance_to_geometric()
        ),
    )
}

fn hypergeometric_engine() -> Outcome {
    let start = Instant::now();
    let log = HypergeometricParams::from_ratios((1, 1), (1, 1), (2, 1)).unwrap();
    let log_err = (1..=9)
        .map(|i| {
            let z = i as f64 / 10.0;
            let exact = -(1.0 - z).ln() / z;
            ((hyp2f1(&log, z).unwrap() - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    let ode = random_hypergeometric_cases(DEFAULT_SEED)
        .unwrap()
        .iter()
        .map(|(p, z)| gauss_ode_residual(p, *z).unwrap().abs())
        .fold(0.0, f64::max);
    let x_power = X_POWER_POINTS
        .iter()
        .map(|&(k, x, t)| x_power_printed_residual(k, x, t).unwrap().abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        log_err <= 1e-10 && ode <= 1e-8 && x_power <= 1e-8 && elapsed < Duration::from_secs(1),
        format!(
            "log rel err {:.1e}, gauss ode {:.1e}, x^k operator {:.3e}, {:.3}s",
            log_err,
            ode,
            x_power,
            secs(elapsed)
        ),
    )
}

fn critical_points(
    f: Morsification,
    s: f64,
    lo: f64,
    hi: f64,
) -> milnor::Result<Vec<CriticalPoint>> {
    let m = f.n_vars();
    find_critical_points(
        &f.realize(s)?,
        &SearchBox::cube(m, lo, hi)?,
        16,
        &MorseOptions::default(),
    )
}

fn near(p: &CriticalPoint, x: &[f64]) -> bool {
    p.location.iter().zip(x).all(|(a, b)| (a - b).abs() < 1e-8)
}

fn morse_correctness() -> Outcome {
    let mut forms = 0;
    let mut pass = true;
    for m in 1..=4usize {
        for mask in 0..(1u32 << m) {
            let signs: Vec<i64> = (0..m)
                .map(|i| if mask >> i & 1 == 1 { -1 } else { 1 })
                .collect();
            let f = quadratic_form(&signs);
            let pts = critical_points(Morsification::scalar(f), 0.0, -1.0, 1.0).unwrap();
            let neg = signs.iter().filter(|&&s| s < 0).count();
            pass &= pts.len() == 1 && pts[0].morse_index == neg && near(&pts[0], &vec![0.0; m]);
            forms += 1;
        }
    }
    let mors = Morsification::new(x4_minus_y2(), vec![2.0, 0.0]).unwrap();
    let plus = critical_points(mors.clone(), 1.0, -2.0, 2.0).unwrap();
    pass &= plus.len() == 1 && plus[0].morse_index == 1 && near(&plus[0], &[0.0, 0.0]);
    let minus = critical_points(mors, -1.0, -2.0, 2.0).unwrap();
    let expect = [([0.0, 0.0], 2usize), ([1.0, 0.0], 1), ([-1.0, 0.0], 1)];
    pass &= minus.len() == 3
        && expect
            .iter()
            .all(|(x, k)| minus.iter().any(|p| near(p, x) && p.morse_index == *k));
    outcome(
        pass,
        format!(
            "{} quadratic forms; s=1: {} point(s); s=-1: {} point(s)",
            forms,
            plus.len(),
            minus.len()
        ),
    )
}

fn fiber_components() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 2..=6u32 {
        let start = Instant::now();
        let f = power(k);
        let md = choose_milnor_data(&f, FiberSign::Positive, &MilnorSearch::default()).unwrap();
        let fs = sample_fiber(&f, &md, 10_000, DEFAULT_SEED);
        let r = components_with_plateau(&fs);
        let elapsed = start.elapsed();
        let expect = if k % 2 == 0 { 2 } else { 1 };
        pass &= r.components == expect
            && r.stable
            && fs.len() == 10_000
            && (md.eta - md.epsilon / 2.0).abs() < 1e-15
            && elapsed < Duration::from_secs(5);
        parts.push(format!(
            "k={}:{}{} {:.2}s",
            k,
            r.components,
            if r.stable { "" } else { "?" },
            secs(elapsed)
        ));
    }
    outcome(pass, parts.join(" "))
}

fn top_homology() -> Outcome {
    let cases = [
        ("x^2+y^2", Morsification::scalar(sum_of_squares(2)), 1usize),
        (
            "x1^2+x2^2+x3^2",
            Morsification::scalar(sum_of_squares(3)),
            1,
        ),
        (
            "x^4-y^2",
            Morsification::new(x4_minus_y2(), vec![2.0, 0.0]).unwrap(),
            0,
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mors, expect) in cases {
        let region = SearchBox::cube(mors.n_vars(), -2.0, 2.0).unwrap();
        let ranks: Vec<usize> = (1..=8)
            .map(|i| {
                top_homology_rank(&mors, i as f64 / 8.0, &region, 12, &MorseOptions::default())
                    .unwrap()
            })
            .collect();
        pass &= ranks.iter().all(|&r| r == expect);
        parts.push(format!("{}: {:?}", name, ranks));
    }
    outcome(pass, parts.join("; "))
}

fn annihilator_discrimination() -> Outcome {
    let eta = 1.0;
    let grid = UniformGrid::default_for(eta);
    let period: Vec<f64> = period_on_grid(3, 0, eta, &grid, 2_000, DEFAULT_SEED)
        .unwrap()
        .iter()
        .map(|p| p.value)
        .collect();
    let euler = annihilator_residual(
        &DifferentialOperator::shifted_euler(eta),
        &grid,
        &period,
        eta,
    )
    .unwrap();
    let d_t = annihilator_residual(&DifferentialOperator::d_t(), &grid, &period, eta).unwrap();
    let p = quadratic_period(3, 0, eta, eta + 1.0, 1_000_000, DEFAULT_SEED).unwrap();
    let z = (p.value - 2.0 * PI).abs() / p.std_error;
    let verdict = if z <= 3.0 && d_t < 1e-2 {
        "holds"
    } else {
        "rejected"
    };
    outcome(
        euler <= 1e-3 && d_t >= 1e-2,
        format!(
            "(t-eta)D_t+1 {:.1e}, D_t {:.3}; report: constant-period claim {} (period {:.6} vs 2pi, {:.1e} sigma)",
            euler, d_t, verdict, p.value, z
        ),
    )
}

fn crypto_roundtrip() -> Outcome {
    let start = Instant::now();
    let catalog = GermCatalog::shipped();
    let mut total = 0;
    let mut ok = 0;
    for scheme in [Scheme::One, Scheme::Two] {
        for i in 0..200u64 {
            let entry = &catalog.entries()[i as usize % catalog.entries().len()];
            let keys = crypto::keygen(&catalog, entry, KeyRange::Positive, DEFAULT_SEED ^ (i + 1))
                .unwrap();
            let c = crypto::encrypt(
                scheme,
                &catalog,
                keys.pk,
                &entry.message,
                &EncryptOptions::default(),
            )
            .unwrap();
            total += 1;
            if crypto::decrypt(&catalog, &keys.sk, &c).ok().as_ref() == Some(&entry.message) {
                ok += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        ok == total && elapsed < Duration::from_secs(30),
        format!("{}/{} round trips, {:.2}s", ok, total, secs(elapsed)),
    )
}

fn cca_harness() -> Outcome {
    let catalog = GermCatalog::shipped();
    let opts = |trials| CcaOptions {
        scheme: Scheme::Two,
        trials,
        seed: DEFAULT_SEED,
        key_range: KeyRange::Positive,
        encrypt_options: EncryptOptions::default(),
    };
    let guess = cca_experiment(&RandomGuess, &catalog, &opts(10_000)).unwrap();
    let reenc = cca_experiment(&Reencrypt, &catalog, &opts(1_000)).unwrap();
    outcome(
        (guess.success_rate() - 0.5).abs() <= 0.02 && reenc.success_rate() >= 0.99,
        format!(
            "guess {:.4} (advantage {:+.4}); reencrypt {:.4} (advantage {:+.4})",
            guess.success_rate(),
            guess.advantage(),
            reenc.success_rate(),
            reenc.advantage()
        ),
    )
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn csv_bodies(dir: &std::path::Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy();
            let command = name.rsplit_once('-').unwrap().0.to_string();
            (command, std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

fn determinism() -> Outcome {
    let runs = [
        vec![
            "morsify",
            "--germ",
            &data("x4_minus_y2.germ"),
            "--quad",
            "2,0",
        ],
        vec!["analyze", "--germ", &data("sum_of_squares3.germ")],
        vec!["fiber", "--germ", &data("x2.germ"), "--samples", "2000"],
        vec!["gm-check", "--samples", "20000"],
        vec!["eta-scaling", "--samples", "20000"],
        vec!["crypto-demo", "--scheme", "2"],
        vec!["cca-run", "--attacker", "reencrypt", "--trials", "50"],
    ]
    .map(|args| args.into_iter().map(String::from).collect::<Vec<_>>());
    let mut bodies = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        for args in &runs {
            let status = Command::new(env!("CARGO_BIN_EXE_milnor"))
                .args(args)
                .args(["--seed", "7", "--out"])
                .arg(dir.path())
                .output()
                .unwrap();
            assert!(
                status.status.success(),
                "{:?}: {}",
                args,
                String::from_utf8_lossy(&status.stderr)
            );
        }
        bodies.push(csv_bodies(dir.path()));
    }
    let commands: Vec<&str> = bodies[0].iter().map(|(c, _)| c.as_str()).collect();
    outcome(
        bodies[0] == bodies[1] && bodies[0].len() >= runs.len(),
        format!(
            "{} csv files compared ({})",
            bodies[0].len(),
            commands.join(" ")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("quadratic period vs closed form", period_vs_closed_form),
        ("eta-scaling report", eta_scaling_report),
        ("hypergeometric engine", hypergeometric_engine),
        ("morse correctness", morse_correctness),
        ("fiber components", fiber_components),
        ("top homology via morsification", top_homology),
        ("annihilator discrimination", annihilator_discrimination),
        ("crypto roundtrip", crypto_roundtrip),
        ("cca harness", cca_harness),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    let strict = std::env::var("MILNOR_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        std::process::exit(1);
    }
}
