//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Run with `cargo test -p maglab --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use maglab::asymptotics::{classify_regime, ln_g, nu_star, stirling_at_levels, Case, PredictedLimit, ScalingSpec};
use maglab::experiments::{
    brute_force, oracle_grid, relative_residual, run_sweep, write_csv, write_sweep_json, SweepConfig, SweepRow,
};
use maglab::moments::{change_of_measure_eval, first_moment_total, moment_report, second_moment_total};
use maglab::sampler::{
    estimate_moments_mc, estimate_prob_no_isolated, isolation_census, replicate, replication_stream, sample_graph,
};
use maglab::{AffinityMatrix, AttributePmf, MagParams};

const SEED: u64 = 7;
const MC_REPS: usize = 2000;
const N_GRID: [usize; 6] = [256, 512, 1024, 2048, 4096, 8192];

struct Criterion {
    id: u32,
    title: &'static str,
    details: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Self {
            id,
            title,
            details: Vec::new(),
        }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.details.push((what.into(), ok));
    }

    fn passed(&self) -> bool {
        self.details.iter().all(|(_, ok)| *ok)
    }

    fn print(&self) {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {}: {}", self.id, self.title);
        for (what, ok) in &self.details {
            if !ok || std::env::var_os("ACCEPTANCE_VERBOSE").is_some() {
                println!("    {} {what}", if *ok { "ok  " } else { "FAIL" });
            }
        }
    }
}

fn pmf(mu1: f64) -> AttributePmf {
    AttributePmf::new(mu1).unwrap()
}

fn config_a_kernel() -> AffinityMatrix {
    AffinityMatrix::new(0.8, 0.5, 0.2).unwrap()
}

fn config_a(n: usize, levels: usize) -> MagParams {
    MagParams::new(n, levels, pmf(0.5), config_a_kernel()).unwrap()
}

fn describe(p: &MagParams) -> String {
    let q = p.q();
    format!("n={} L={} mu1={} q=({},{},{})", p.n(), p.levels(), p.pmf().mu1(), q.q11(), q.q10(), q.q00())
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new(1, "closed-form moments match exhaustive enumeration on the oracle grid");
    let start = Instant::now();
    let grid = oracle_grid();
    c.check(format!("grid has {} points", grid.len()), grid.len() == 24);
    for p in &grid {
        let oracle = brute_force(p).unwrap();
        let report = moment_report(p).unwrap();
        let tag = describe(p);
        let r1 = relative_residual(report.e_i, oracle.e_i_exact);
        let r2 = relative_residual(report.e_i_sq, oracle.e_i_sq_exact);
        c.check(format!("E[I] {tag} residual {r1:.2e}"), r1 <= 1e-10);
        c.check(format!("E[I^2] {tag} residual {r2:.2e}"), r2 <= 1e-10);
        for (l, (&a, &b)) in report.e_i_level.iter().zip(&oracle.per_level_exact).enumerate() {
            let r = relative_residual(a, b);
            c.check(format!("E[I^({l})] {tag} residual {r:.2e}"), r <= 1e-10);
        }
        c.check(
            format!(
                "P[I=0]={:.6} in [{:.6}, {:.6}] {tag}",
                oracle.p_zero_exact, report.p_zero_lower, report.p_zero_upper
            ),
            report.p_zero_lower <= oracle.p_zero_exact + 1e-12 && oracle.p_zero_exact <= report.p_zero_upper + 1e-12,
        );
    }
    let elapsed = start.elapsed();
    c.check(format!("runtime {elapsed:?} < 10 s"), elapsed < Duration::from_secs(10));
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(2, "hand-checkable values for config A (1e-12 absolute)");
    let p1 = config_a(2, 1);
    let p2 = config_a(2, 2);
    let values = [
        ("Gamma(1)", p1.gamma1(), 0.65),
        ("Gamma(0)", p1.gamma0(), 0.35),
        ("E[I_2(1)]", first_moment_total(&p1), 1.0),
        ("E[I_2(2)]", first_moment_total(&p2), 1.5),
        // Stated target; enumeration gives 2.0 (I is 0 or 2 when n = 2).
        ("E[I_2(1)^2]", second_moment_total(&p1), 2.1),
    ];
    for (name, got, want) in values {
        c.check(format!("{name} = {got:.15} (target {want})"), (got - want).abs() <= 1e-12);
    }
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3, "change-of-measure reconstruction of E[I] and the E+/E- partition");
    let start = Instant::now();
    for (n, levels) in [(10, 3), (100, 20), (1000, 50)] {
        let p = config_a(n, levels);
        let direct = first_moment_total(&p);
        for nu in [0.2, 0.3, 0.5, 0.7, p.pmf().mu1()] {
            let r = change_of_measure_eval(&p, nu).unwrap();
            let rec = relative_residual(r.reconstructed_e_i, direct);
            let part = relative_residual(r.e_n_plus + r.e_n_minus, r.e_n);
            c.check(format!("n={n} L={levels} nu={nu}: reconstruction {rec:.2e}"), rec <= 1e-10);
            c.check(format!("n={n} L={levels} nu={nu}: partition {part:.2e}"), part <= 1e-12);
        }
    }
    let elapsed = start.elapsed();
    c.check(format!("runtime {elapsed:?} < 1 s"), elapsed < Duration::from_secs(1));
    c
}

/// Plain bisection on the entropy form of the defining equation, to width 1e-14.
fn reference_nu_star(rho: f64, mu: f64) -> f64 {
    let f = |nu: f64| 1.0 + rho * (-nu * (nu / mu).ln() - (1.0 - nu) * ((1.0 - nu) / (1.0 - mu)).ln());
    let (mut lo, mut hi) = (1e-300, mu);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4, "nu* solver residual and spot value");
    let mut worst: f64 = 0.0;
    let mut all_inside = true;
    for i in 0..20 {
        let mu1 = 0.04 + 0.92 * i as f64 / 19.0;
        let critical = -1.0 / (1.0 - mu1).ln();
        for j in 0..20 {
            let rho = critical * (1.0 + 0.005 + 4.0 * j as f64 / 19.0);
            assert!(1.0 + rho * (1.0 - mu1).ln() < 0.0);
            let root = nu_star(rho, mu1).unwrap();
            all_inside &= root > 0.0 && root < mu1;
            worst = worst.max((1.0 + rho * ln_g(root, mu1).unwrap()).abs());
        }
    }
    c.check(format!("max residual over 20x20 grid {worst:.2e} <= 1e-10"), worst <= 1e-10);
    c.check("every root strictly inside (0, mu1)", all_inside);
    let root = nu_star(2.0, 0.5).unwrap();
    let reference = reference_nu_star(2.0, 0.5);
    c.check(format!("nu*(2, 0.5) = {root:.6} vs reference {reference:.6}"), (root - reference).abs() <= 5e-4);
    c.check(format!("nu*(2, 0.5) = {root:.6} ~ 0.0483"), (root - 0.0483).abs() <= 5e-4);
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "Stirling form of the level-count asymptote");
    let pmf = pmf(0.5);
    let errors: Vec<f64> = [200, 400, 800, 1600]
        .iter()
        .map(|&l| stirling_at_levels(10_000, l, 0.3, &pmf).unwrap().relative_error())
        .collect();
    c.check(format!("relative error at L=200: {:.3e} <= 1%", errors[0]), errors[0] <= 0.01);
    c.check(
        format!("nonincreasing along L = 200..1600: {errors:?}"),
        errors.windows(2).all(|w| w[1] <= w[0]),
    );
    c
}

fn sweep(q: AffinityMatrix, rho: f64) -> Vec<SweepRow> {
    let config = SweepConfig::new(pmf(0.5), q, vec![rho], N_GRID.to_vec(), MC_REPS, SEED);
    run_sweep(&config).unwrap()
}

fn row(rows: &[SweepRow], n: usize) -> &SweepRow {
    rows.iter().find(|r| r.n == n).unwrap()
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(6, "phase transition in case one (and the zero side at rho = 4)");
    let start = Instant::now();
    let p = config_a(2, 1);

    let regime = classify_regime(0.5, &p).unwrap();
    c.check(
        format!("rho=0.5: {:?} threshold {:.4} -> {:?}", regime.case, regime.threshold_value, regime.predicted_limit),
        regime.case == Case::CaseOne && regime.predicted_limit == PredictedLimit::One,
    );
    let rows = sweep(config_a_kernel(), 0.5);
    let (small, large) = (row(&rows, 256), row(&rows, 8192));
    c.check(format!("rho=0.5: p_hat(8192) = {} >= 0.9", large.p_hat), large.p_hat >= 0.9);
    c.check(
        format!("rho=0.5: p_hat(8192) = {} >= p_hat(256) = {}", large.p_hat, small.p_hat),
        large.p_hat >= small.p_hat,
    );

    let regime = classify_regime(4.0, &p).unwrap();
    c.check(
        format!("rho=4: {:?} threshold {:.4} -> {:?}", regime.case, regime.threshold_value, regime.predicted_limit),
        regime.case == Case::CaseTwo && regime.predicted_limit == PredictedLimit::Zero,
    );
    let rows = sweep(config_a_kernel(), 4.0);
    let large = row(&rows, 8192);
    c.check(format!("rho=4: p_hat(8192) = {} <= 0.1", large.p_hat), large.p_hat <= 0.1);
    println!("    criterion 6 runtime {:?}", start.elapsed());
    c
}

/// Searches q11 >= q10 >= q00 on a 0.05 lattice in [0.05, 0.95] at mu1 = 0.5,
/// rho = 2 for case-two points predicted One. Among them, returns the one with
/// the smallest positive threshold whose exact first-moment bound at n = 8192
/// still gives P[no isolated] >= 0.9, so the finite-size check is meaningful.
fn find_case_two_one_point(rho: f64) -> Option<(AffinityMatrix, f64)> {
    let lattice: Vec<f64> = (1..=19).map(|i| i as f64 / 20.0).collect();
    let levels = ScalingSpec::new(rho).unwrap().levels(8192);
    let mut best: Option<(AffinityMatrix, f64)> = None;
    for &q00 in &lattice {
        for &q10 in lattice.iter().filter(|&&x| x >= q00) {
            for &q11 in lattice.iter().filter(|&&x| x >= q10) {
                let q = AffinityMatrix::new(q11, q10, q00).unwrap();
                let Ok(p) = MagParams::new(8192, levels, pmf(0.5), q) else { continue };
                let r = classify_regime(rho, &p).unwrap();
                if r.case != Case::CaseTwo || r.predicted_limit != PredictedLimit::One {
                    continue;
                }
                let lower = moment_report(&p).unwrap().p_zero_lower;
                if lower >= 0.9 && best.as_ref().map_or(true, |(_, t)| r.threshold_value < *t) {
                    best = Some((q, r.threshold_value));
                }
            }
        }
    }
    best
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "phase transition in case two");
    let start = Instant::now();
    let regime = classify_regime(2.0, &config_a(2, 1)).unwrap();
    c.check(
        format!("config A rho=2: {:?} threshold {:.4} -> {:?}", regime.case, regime.threshold_value, regime.predicted_limit),
        regime.case == Case::CaseTwo
            && regime.predicted_limit == PredictedLimit::Zero
            && (regime.threshold_value + 1.04).abs() < 0.01,
    );
    let rows = sweep(config_a_kernel(), 2.0);
    let large = row(&rows, 8192);
    c.check(format!("config A rho=2: p_hat(8192) = {} <= 0.1", large.p_hat), large.p_hat <= 0.1);

    match find_case_two_one_point(2.0) {
        Some((q, threshold)) => {
            println!(
                "    case-two/One point: mu1=0.5 rho=2 q=({}, {}, {}) threshold {threshold:.4}",
                q.q11(),
                q.q10(),
                q.q00()
            );
            let rows = sweep(q, 2.0);
            let large = row(&rows, 8192);
            c.check(
                format!("case-two/One point: discriminant {:.4} < 0, threshold {threshold:.4} > 0", large.regime.discriminant),
                large.regime.discriminant < 0.0 && threshold > 0.0,
            );
            c.check(format!("case-two/One point: p_hat(8192) = {} >= 0.85", large.p_hat), large.p_hat >= 0.85);
        }
        None => println!("    no case-two/One point on the searched lattice; only the zero side is asserted"),
    }
    println!("    criterion 7 runtime {:?}", start.elapsed());
    c
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8, "Monte Carlo agrees with exact moments (10^5 replications, 3 SE)");
    let reps = 100_000;
    for p in oracle_grid() {
        let tag = describe(&p);
        let est = estimate_moments_mc(&p, reps, SEED).unwrap();
        let (e1, e2) = (first_moment_total(&p), second_moment_total(&p));
        c.check(
            format!("mean_I {:.5} vs {e1:.5} (se {:.1e}) {tag}", est.mean_i, est.se_i),
            (est.mean_i - e1).abs() <= 3.0 * est.se_i,
        );
        c.check(
            format!("mean_I^2 {:.5} vs {e2:.5} (se {:.1e}) {tag}", est.mean_i_sq, est.se_i_sq),
            (est.mean_i_sq - e2).abs() <= 3.0 * est.se_i_sq,
        );
    }
    let p = config_a(4, 2);
    let exact = brute_force(&p).unwrap().p_zero_exact;
    let est = estimate_prob_no_isolated(&p, reps, SEED).unwrap();
    c.check(
        format!("n=4 L=2: p_hat {:.5} vs exact {exact:.5} (se {:.1e})", est.p_hat, est.std_err),
        (est.p_hat - exact).abs() <= 3.0 * est.std_err,
    );
    c
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new(9, "invariants: accounting, symmetry, ln G shape, determinism");
    let mut accounting = true;
    let mut symmetric = true;
    let mut cases = oracle_grid();
    cases.extend([config_a(50, 4), config_a(300, 8)]);
    for p in &cases {
        for g in replicate(100, SEED, |s| sample_graph(p, s).unwrap()) {
            let census = isolation_census(&g);
            accounting &= census.by_level.iter().sum::<usize>() == census.total;
            for u in 0..g.n() {
                symmetric &= !g.has_edge(u, u);
                for v in (u + 1)..g.n() {
                    symmetric &= g.has_edge(u, v) == g.has_edge(v, u);
                }
            }
        }
    }
    c.check("sum over levels equals total on every sampled graph", accounting);
    c.check("adjacency symmetric without self-loops", symmetric);

    let mut shape = true;
    for mu in [0.2, 0.5, 0.65] {
        let grid: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&nu| ln_g(nu, mu).unwrap()).collect();
        shape &= vals.iter().all(|&v| v <= 1e-12);
        shape &= vals.windows(3).all(|w| w[1] >= 0.5 * (w[0] + w[2]) - 1e-12);
    }
    c.check("ln G <= 0 and concave on a 10^3-point grid", shape);

    let config = SweepConfig::new(pmf(0.5), config_a_kernel(), vec![0.5, 2.0], vec![64, 128, 256], 200, SEED);
    let render = || {
        let rows = run_sweep(&config).unwrap();
        let (mut csv, mut json) = (Vec::new(), Vec::new());
        write_csv(&rows, &mut csv).unwrap();
        write_sweep_json(&rows, &config, &mut json).unwrap();
        (csv, json)
    };
    c.check("sweep CSV and JSON byte-identical across reruns", render() == render());
    let p = config_a(120, 6);
    let dump = || {
        let g = sample_graph(&p, &replication_stream(SEED, 0)).unwrap();
        let (mut e, mut a) = (Vec::new(), Vec::new());
        g.write_edge_list(&mut e).unwrap();
        g.write_attribute_matrix(&mut a).unwrap();
        (e, a)
    };
    c.check("graph dumps byte-identical across reruns", dump() == dump());
    c.check(
        "Monte Carlo estimates identical across reruns",
        estimate_prob_no_isolated(&p, 500, SEED).unwrap() == estimate_prob_no_isolated(&p, 500, SEED).unwrap(),
    );
    c
}

fn main() -> ExitCode {
    let criteria: [fn() -> Criterion; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut failed = 0;
    for run in criteria {
        let c = run();
        c.print();
        failed += usize::from(!c.passed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
