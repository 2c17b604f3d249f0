//! Acceptance criteria for the pricing engine and the table harness.
//!
//! Runs as a plain binary so that every criterion prints exactly one
//! `PASS`/`FAIL` line, followed by indented detail and `info` lines. The
//! process exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use basket_cli::report::to_csv;
use basket_cli::run::relative_error;
use basket_cli::tables::{reproduce_table, table_cases, TableOptions, TableReport, LBA_DERIVED};
use basket_cli::{emit_report, OutputFormat};
use basket_core::aea::{price_aea, solve_pide_with, PideGridConfig};
use basket_core::black_scholes::{bs_call, implied_vol};
use basket_core::closed_form::{bachelier_call, LognormalJumpPricer};
use basket_core::expansion::{profile_integrals_closed_form, profile_integrals_quadrature, QuadratureConfig};
use basket_core::lba::{positive_part_quadratic_expectation, price_lba, LbaSettings, TruncationMode};
use basket_core::mc::{mean_and_stderr, simulate_terminal_basket, McConfig};
use common::{bs, cev, eta_jump, four_assets, normal_expectation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LBA_ABS_TOL: f64 = 0.01;
const LBA_ABS_TOL_TABLE2: f64 = 0.02;
const APPROX_REL_TOL: f64 = 0.01;
const MC_SE_MULTIPLE: f64 = 3.0;
const MC_REL_TOL_TABLE2_LONG: f64 = 0.02;
const AVG_REL_ERR_MAX: f64 = 0.01;
const TABLE2_AVERAGE_TARGET: f64 = 0.039;
const TABLE2_AVERAGE_BAND: f64 = 0.01;
const LBA_COLUMN_BUDGET: Duration = Duration::from_millis(100);
const FULL_TABLE_BUDGET: Duration = Duration::from_secs(300);
const POSITIVE_PART_TOL: f64 = 1e-9;
const PROFILE_REL_TOL: f64 = 1e-10;
const MARTINGALE_SE_MULTIPLE: f64 = 4.0;
const STRIKE_ZERO_TOL: f64 = 1e-6;
const IV_ROUND_TRIP_TOL: f64 = 1e-8;
const BACHELIER_REL_TOL: f64 = 1e-3;
const GRID_RATIO_MAX: f64 = 0.6;

#[derive(Default)]
struct Criterion {
    details: Vec<String>,
    failed: usize,
}

impl Criterion {
    fn check(&mut self, ok: bool, detail: impl Into<String>) {
        let detail = detail.into();
        if !ok {
            self.failed += 1;
            self.details.push(format!("    fail: {detail}"));
        } else {
            self.details.push(format!("    ok:   {detail}"));
        }
    }

    fn info(&mut self, detail: impl Into<String>) {
        self.details.push(format!("    info: {}", detail.into()));
    }
}

#[derive(Default)]
struct Ledger {
    failed: Vec<String>,
}

impl Ledger {
    fn report(&mut self, id: &str, title: &str, c: Criterion) {
        let status = if c.failed == 0 { "PASS" } else { "FAIL" };
        println!("{status} {id} {title}");
        for d in &c.details {
            println!("{d}");
        }
        if c.failed > 0 {
            self.failed.push(format!("{id} ({} failing check(s))", c.failed));
        }
    }
}

fn price(report: &TableReport, config: &str, method: &str) -> f64 {
    report
        .row(config, method)
        .and_then(|r| r.price)
        .unwrap_or_else(|| panic!("missing {method} for {config}"))
}

fn stderr(report: &TableReport, config: &str) -> f64 {
    report.row(config, "mc").and_then(|r| r.stderr).unwrap_or(f64::NAN)
}

fn average(report: &TableReport, label: &str, method: &str) -> f64 {
    report.row(label, method).and_then(|r| r.rel_err).unwrap_or(f64::NAN)
}

fn check_lba_cells(c: &mut Criterion, report: &TableReport, tol: f64) {
    for case in &report.cases {
        let lba = price(report, &case.label, "lba");
        c.check(
            (lba - case.published.lba).abs() <= tol + 1e-12,
            format!("LBA {}: {lba:.4} vs published {} (tol {tol})", case.label, case.published.lba),
        );
    }
}

fn check_mc_cells(c: &mut Criterion, report: &TableReport, filter: impl Fn(f64) -> bool) {
    for case in report.cases.iter().filter(|k| filter(k.maturity)) {
        let mc = price(report, &case.label, "mc");
        let se = stderr(report, &case.label);
        let combined = (se * se + case.published.mc_stderr * case.published.mc_stderr).sqrt();
        c.check(
            (mc - case.published.mc).abs() <= MC_SE_MULTIPLE * combined,
            format!(
                "MC {}: {mc:.4} ± {se:.4} vs published {} ± {} ({:.1} combined se)",
                case.label,
                case.published.mc,
                case.published.mc_stderr,
                (mc - case.published.mc).abs() / combined
            ),
        );
    }
}

fn derived_info(c: &mut Criterion, report: &TableReport) {
    for case in report.cases.iter().filter(|k| k.maturity != 1.0) {
        c.info(format!(
            "{} {}: {:.4} (table convention {:.4})",
            LBA_DERIVED,
            case.label,
            price(report, &case.label, LBA_DERIVED),
            price(report, &case.label, "lba")
        ));
    }
}

fn criterion_1(report: &TableReport, elapsed: Duration) -> Criterion {
    let mut c = Criterion::default();
    check_lba_cells(&mut c, report, LBA_ABS_TOL);
    for method in ["aea", "pea"] {
        for case in &report.cases {
            let x = price(report, &case.label, method);
            let p = case.published.get(method).unwrap();
            c.check(
                relative_error(x, p) <= APPROX_REL_TOL,
                format!("{} {}: {x:.4} vs published {p} ({:.2}%)", method.to_uppercase(), case.label, 100.0 * relative_error(x, p)),
            );
        }
    }
    check_mc_cells(&mut c, report, |_| true);

    let settings = LbaSettings::published_tables();
    let cases = table_cases(1).unwrap();
    let start = Instant::now();
    for case in &cases {
        price_lba(&case.spec, case.maturity, case.strike, &settings).unwrap();
    }
    let lba_time = start.elapsed();
    c.check(lba_time < LBA_COLUMN_BUDGET, format!("LBA column runtime {lba_time:?} (budget {LBA_COLUMN_BUDGET:?})"));
    c.check(elapsed < FULL_TABLE_BUDGET, format!("full table runtime {elapsed:?} (budget {FULL_TABLE_BUDGET:?})"));
    for m in ["pea", "aea", "lba"] {
        c.info(format!("average {m} rel err vs engine MC: {:.2}%", 100.0 * average(report, "average", m)));
    }
    derived_info(&mut c, report);
    c
}

fn criterion_lba_table(report: &TableReport) -> Criterion {
    let mut c = Criterion::default();
    check_lba_cells(&mut c, report, LBA_ABS_TOL);
    let avg = average(report, "average", "lba");
    c.check(
        avg <= AVG_REL_ERR_MAX,
        format!("average LBA rel err vs engine MC {:.2}% (max {:.0}%)", 100.0 * avg, 100.0 * AVG_REL_ERR_MAX),
    );
    if report.id == 3 {
        c.info(format!("average AEA rel err vs engine MC: {:.2}%", 100.0 * average(report, "average", "aea")));
        for case in &report.cases {
            let x = price(report, &case.label, "aea");
            let p = case.published.aea.unwrap();
            c.info(format!("AEA {}: {x:.4} vs published {p} ({:.2}%)", case.label, 100.0 * relative_error(x, p)));
        }
    }
    derived_info(&mut c, report);
    c
}

fn criterion_4(report: &TableReport) -> Criterion {
    let mut c = Criterion::default();
    check_lba_cells(&mut c, report, LBA_ABS_TOL_TABLE2);
    check_mc_cells(&mut c, report, |t| t == 0.5);
    for case in report.cases.iter().filter(|k| k.maturity == 2.0) {
        let mc = price(report, &case.label, "mc");
        let rel = relative_error(mc, case.published.mc);
        c.check(
            rel <= MC_REL_TOL_TABLE2_LONG,
            format!("MC {}: {mc:.4} vs published {} ({:.2}%, tol 2%)", case.label, case.published.mc, 100.0 * rel),
        );
    }
    let mean_by_t = |t: f64| {
        let v: Vec<f64> = report
            .cases
            .iter()
            .filter(|k| k.maturity == t)
            .filter_map(|k| report.row(&k.label, "lba").and_then(|r| r.rel_err))
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (short, long) = (mean_by_t(0.5), mean_by_t(2.0));
    c.check(
        long > short,
        format!("LBA rel err grows with maturity: T=0.5 {:.2}%, T=2 {:.2}%", 100.0 * short, 100.0 * long),
    );
    let avg = average(report, "average", "lba");
    c.check(
        (avg - TABLE2_AVERAGE_TARGET).abs() <= TABLE2_AVERAGE_BAND,
        format!("average LBA rel err vs engine MC {:.2}% (published 3.9%, band ±1 point)", 100.0 * avg),
    );
    c.info(format!("average LBA implied-vol rel err: {:.2}% (published 4.4%)", 100.0 * average(report, "average_iv", "lba")));
    for case in &report.cases {
        let lb = LognormalJumpPricer::new(&case.spec, case.maturity, case.strike, TruncationMode::Adaptive)
            .unwrap()
            .lower_bound_value();
        if case.published.mc < lb {
            c.info(format!(
                "{}: published MC {} is below the exact conditioning lower bound {lb:.4}",
                case.label, case.published.mc
            ));
        }
    }
    derived_info(&mut c, report);
    c
}

fn quadratic_roots(c: f64, a1: f64, a0: f64) -> Vec<f64> {
    if c == 0.0 {
        return if a1 != 0.0 { vec![-a0 / a1] } else { vec![] };
    }
    let disc = a1 * a1 - 4.0 * c * a0;
    if disc <= 0.0 {
        return vec![];
    }
    let s = disc.sqrt();
    vec![(-a1 - s) / (2.0 * c), (-a1 + s) / (2.0 * c)]
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (q, a1, a0) = (
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        );
        let oracle = normal_expectation(|x| (q * x * x + a1 * x + a0).max(0.0), &quadratic_roots(q, a1, a0), 1e-13);
        worst = worst.max((positive_part_quadratic_expectation(q, a1, a0) - oracle).abs());
    }
    c.check(worst < POSITIVE_PART_TOL, format!("positive part vs quadrature, 1000 triples: max abs err {worst:.2e}"));

    let mut worst = 0.0f64;
    for vol in [bs(0.2), bs(0.5), cev(0.5, 0.8), cev(0.2, 0.5)] {
        let mut spec = four_assets([0.0; 4], vol, 0.3);
        spec.assets[2].initial_price = 85.0;
        for t in [0.5, 1.0, 3.0] {
            let a = profile_integrals_closed_form(&spec, t);
            let q = profile_integrals_quadrature(&spec, t, &QuadratureConfig::default()).unwrap();
            for (x, y) in [(&a.i0, &q.i0), (&a.i1, &q.i1), (&a.i2, &q.i2), (&a.i3, &q.i3)] {
                for (u, v) in x.iter().zip(y.iter()) {
                    worst = worst.max((u - v).abs() / u.abs().max(v.abs()).max(1e-300));
                }
            }
        }
    }
    c.check(worst < PROFILE_REL_TOL, format!("profile integrals analytic vs quadrature: max rel err {worst:.2e}"));
    c
}

fn criterion_6(report: &TableReport) -> Criterion {
    let mut c = Criterion::default();
    for case in &report.cases {
        let pricer = LognormalJumpPricer::new(&case.spec, case.maturity, case.strike, TruncationMode::Adaptive).unwrap();
        let (lb, pea, ub) = (pricer.lower_bound_value(), pricer.pea().price, pricer.upper_bound_value());
        let mc = price(report, &case.label, "mc");
        let se = stderr(report, &case.label);
        c.check(
            lb <= pea && pea <= ub && lb <= mc + MC_SE_MULTIPLE * se,
            format!("{}: LB {lb:.4} <= PEA {pea:.4} <= UB {ub:.4}; MC + 3se {:.4}", case.label, mc + 3.0 * se),
        );
    }
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::default();
    let cfg = McConfig {
        n_paths: 20_000,
        use_control_variate: false,
        ..McConfig::default()
    };
    let mut worst = 0.0f64;
    let mut count = 0;
    for id in 1..=4u8 {
        let cases = table_cases(id).unwrap();
        let mut seen = Vec::new();
        for case in &cases {
            let key = format!("{:?}/{}", case.spec, case.maturity);
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            let sample = simulate_terminal_basket(&case.spec, case.maturity, &cfg).unwrap();
            let (mean, se) = mean_and_stderr(&sample.basket);
            let z = (mean - case.spec.basket_spot()).abs() / se;
            worst = worst.max(z);
            count += 1;
            if z > MARTINGALE_SE_MULTIPLE {
                c.check(false, format!("table {id} {}: mean S(T) {mean:.4} ± {se:.4}", case.label));
            }
        }
    }
    c.check(
        worst <= MARTINGALE_SE_MULTIPLE,
        format!("MC mean of S(T) vs S(0) on {count} distinct configs: worst {worst:.2} se (max 4)"),
    );

    let mut worst = 0.0f64;
    for id in [1u8, 2] {
        for case in table_cases(id).unwrap() {
            let lb = LognormalJumpPricer::new(&case.spec, case.maturity, 0.0, TruncationMode::Adaptive)
                .unwrap()
                .lower_bound_value();
            worst = worst.max((lb - case.spec.basket_spot()).abs());
        }
    }
    c.check(worst < STRIKE_ZERO_TOL, format!("exact lower bound at K=0 vs S(0): max abs err {worst:.2e}"));

    let mut worst = 0.0f64;
    for vol in [0.1, 0.2, 0.35, 0.5, 0.8] {
        for strike in [70.0, 90.0, 100.0, 110.0, 130.0] {
            for t in [0.5, 1.0, 2.0, 3.0] {
                let p = bs_call(100.0, strike, t, vol);
                let iv = implied_vol(p, 100.0, strike, t).unwrap();
                worst = worst.max((iv - vol).abs());
            }
        }
    }
    c.check(worst < IV_ROUND_TRIP_TOL, format!("implied-vol round trip: max abs err {worst:.2e}"));
    c
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::default();
    let grid = PideGridConfig {
        n_k: 800,
        steps_per_year: 800,
        min_points_per_sd: 0.0,
        ..PideGridConfig::default()
    };
    for strike in [80.0, 100.0, 115.0] {
        let sol = solve_pide_with(100.0, 0.0, 0.0, 1.0, strike, &grid, |_| Ok((190.0, 0.0))).unwrap();
        let exact = bachelier_call(100.0, 190f64.sqrt(), strike);
        let rel = relative_error(sol.price_at_strike, exact);
        c.check(
            rel < BACHELIER_REL_TOL,
            format!("lambda=0 PIDE at K={strike}: {:.6} vs Bachelier {exact:.6} ({rel:.1e})", sol.price_at_strike),
        );
    }
    let spec = four_assets([eta_jump(-0.25); 4], bs(0.2), 0.3);
    let prices: Vec<f64> = [200usize, 400, 800]
        .iter()
        .map(|&n| {
            let g = PideGridConfig {
                n_k: n,
                steps_per_year: n,
                min_points_per_sd: 0.0,
                ..PideGridConfig::default()
            };
            price_aea(&spec, 1.0, 100.0, &g).unwrap().price
        })
        .collect();
    let ratio = (prices[2] - prices[1]).abs() / (prices[1] - prices[0]).abs();
    c.check(
        ratio < GRID_RATIO_MAX,
        format!("grid doubling 200/400/800: {:.6}, {:.6}, {:.6}; ratio {ratio:.3}", prices[0], prices[1], prices[2]),
    );
    c
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::default();
    let options = TableOptions {
        mc: McConfig {
            n_paths: 8192,
            ..McConfig::default()
        },
        ..TableOptions::default()
    };
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let r = reproduce_table(1, &options).unwrap();
            (to_csv(&r.rows), emit_report(&r.rows, OutputFormat::Markdown, &r.preamble()))
        })
    };
    let reference = render(1);
    for threads in [1, 4] {
        let again = render(threads);
        c.check(again == reference, format!("library reproduce, {threads} thread(s): identical CSV and Markdown"));
    }

    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_basket"))
            .args(["reproduce", "--table", "1", "--seed", "42", "--paths", "8192"])
            .env("BASKET_THREADS", threads)
            .output()
            .expect("run basket binary")
    };
    let first = run("1");
    c.check(first.status.success(), "binary reproduce exits 0");
    for threads in ["1", "4"] {
        let out = run(threads);
        c.check(
            out.stdout == first.stdout,
            format!("binary reproduce --table 1 --seed 42 with BASKET_THREADS={threads}: byte-identical"),
        );
    }
    c.check(first.stdout == reference.0.as_bytes(), "binary output equals library output");
    c
}

fn main() {
    let mut ledger = Ledger::default();
    let options = TableOptions::default();
    println!("acceptance: MC {} paths, {} steps per year, seed {}", options.mc.n_paths, options.mc.steps_per_year, options.mc.seed);

    let start = Instant::now();
    let t1 = reproduce_table(1, &options).unwrap();
    let t1_time = start.elapsed();
    ledger.report("1", "Table 1 reproduction", criterion_1(&t1, t1_time));

    let t3 = reproduce_table(3, &options).unwrap();
    ledger.report("2", "Table 3 reproduction", criterion_lba_table(&t3));

    let t4 = reproduce_table(4, &options).unwrap();
    ledger.report("3", "Table 4 reproduction", criterion_lba_table(&t4));

    let t2 = reproduce_table(2, &options).unwrap();
    ledger.report("4", "Table 2 extreme regime", criterion_4(&t2));

    ledger.report("5", "Oracle equivalence", criterion_5());
    ledger.report("6", "Bound sandwich on Table 1 configs", criterion_6(&t1));
    ledger.report("7", "Martingale and identity suite", criterion_7());
    ledger.report("8", "PIDE validation", criterion_8());
    ledger.report("9", "Determinism", criterion_9());

    if ledger.failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: failed criteria: {}", ledger.failed.join(", "));
        std::process::exit(1);
    }
}
