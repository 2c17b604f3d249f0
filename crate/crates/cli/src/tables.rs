//! Built-in comparison tables with their published values.
//!
//! All four tables share n = 4 assets with S_i(0) = 100 and weights 0.25.
//! LBA cells are computed with [`LbaSettings::published_tables`]; the
//! library-default LBA is reported beside them as `lba_derived`.

use basket_core::aea::PideGridConfig;
use basket_core::expansion::LbaConvention;
use basket_core::lba::{LbaSettings, TruncationMode};
use basket_core::mc::McConfig;
use basket_core::{BasketSpec, CorrelationMatrix, JumpDiffusionAsset, LocalVolatility, Method, PricingError};
use rayon::prelude::*;

use crate::report::ReportRow;
use crate::run::{price_method, relative_error, RunSettings};

/// Method label for the library-default LBA shown next to the table LBA.
pub const LBA_DERIVED: &str = "lba_derived";

/// Published cells of one table row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedCells {
    pub mc: f64,
    pub mc_stderr: f64,
    pub pea: Option<f64>,
    pub aea: Option<f64>,
    pub lba: f64,
}

impl PublishedCells {
    pub fn get(&self, method: &str) -> Option<f64> {
        match method {
            "mc" => Some(self.mc),
            "pea" => self.pea,
            "aea" => self.aea,
            "lba" => Some(self.lba),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableCase {
    pub label: String,
    pub spec: BasketSpec,
    pub maturity: f64,
    pub strike: f64,
    pub published: PublishedCells,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TableOptions {
    pub mc: McConfig,
    pub pide: PideGridConfig,
}

#[derive(Debug, Clone)]
pub struct TableReport {
    pub id: u8,
    pub cases: Vec<TableCase>,
    pub rows: Vec<ReportRow>,
    pub options: TableOptions,
    /// Failures as (config, method, error); their rows have no price.
    pub failures: Vec<(String, String, PricingError)>,
}

impl TableReport {
    pub fn row(&self, config: &str, method: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.config == config && r.method == method)
    }

    pub fn preamble(&self) -> Vec<String> {
        vec![
            format!("Table {}: European basket call prices", self.id),
            format!(
                "MC: {} paths, {} Euler steps per year, seed {}, control variate {}",
                self.options.mc.n_paths,
                self.options.mc.steps_per_year,
                self.options.mc.seed,
                if self.options.mc.use_control_variate { "on" } else { "off" }
            ),
            "Cells show engine value with the published value in brackets; averages are relative errors vs the engine MC."
                .into(),
        ]
    }
}

const SPOT: f64 = 100.0;
const ETAS: [f64; 3] = [-0.25, -0.125, -0.0625];
const CEV_GRID: [(f64, f64); 6] = [(0.2, 1.0), (0.5, 1.0), (0.2, 0.8), (0.5, 0.8), (0.2, 0.5), (0.5, 0.5)];
const TABLE2_MONEYNESS: [f64; 5] = [70.0, 90.0, 100.0, 110.0, 130.0];

/// (MC, MC stderr, PEA, AEA, LBA) in the order λ, η, T.
const TABLE1: [(f64, f64, f64, f64, f64); 12] = [
    (7.35, 0.01, 7.35, 7.35, 7.37),
    (12.93, 0.01, 12.92, 12.85, 12.86),
    (6.08, 0.01, 6.08, 6.07, 6.09),
    (10.57, 0.01, 10.56, 10.49, 10.57),
    (5.66, 0.01, 5.66, 5.65, 5.67),
    (9.83, 0.01, 9.82, 9.74, 9.86),
    (10.78, 0.01, 10.77, 10.78, 10.82),
    (18.64, 0.01, 18.63, 18.57, 18.91),
    (7.28, 0.01, 7.28, 7.28, 7.31),
    (12.65, 0.01, 12.64, 12.58, 12.68),
    (6.02, 0.01, 6.02, 6.01, 6.03),
    (10.45, 0.01, 10.43, 10.37, 10.47),
];

/// (MC, MC stderr, LBA) in the order T, moneyness.
const TABLE2: [(f64, f64, f64); 10] = [
    (32.31, 0.01, 32.83),
    (19.06, 0.02, 19.60),
    (14.26, 0.03, 14.68),
    (10.57, 0.01, 10.8),
    (5.63, 0.01, 5.57),
    (37.11, 0.07, 36.57),
    (29.88, 0.10, 28.99),
    (27.02, 0.07, 25.76),
    (24.53, 0.08, 22.85),
    (20.44, 0.09, 17.87),
];

/// (MC, MC stderr, AEA, LBA) in the order T, (α, β).
const TABLE3: [(f64, f64, f64, f64); 12] = [
    (7.35, 0.01, 7.35, 7.37),
    (14.71, 0.01, 14.42, 14.87),
    (5.31, 0.01, 5.33, 5.31),
    (7.33, 0.01, 7.33, 7.34),
    (5.09, 0.01, 5.09, 5.08),
    (5.11, 0.01, 5.12, 5.11),
    (12.93, 0.01, 12.85, 12.86),
    (25.69, 0.04, 24.14, 26.16),
    (9.61, 0.01, 9.64, 9.63),
    (12.86, 0.01, 12.86, 12.81),
    (8.96, 0.01, 8.98, 8.91),
    (9.18, 0.01, 9.21, 9.18),
];

/// (MC, MC stderr, LBA) in the order T, (α, β).
const TABLE4: [(f64, f64, f64); 12] = [
    (5.53, 0.01, 5.52),
    (13.87, 0.01, 13.95),
    (2.22, 0.01, 2.22),
    (5.50, 0.01, 5.49),
    (0.63, 0.01, 0.63),
    (1.42, 0.01, 1.42),
    (9.68, 0.02, 9.66),
    (24.42, 0.06, 24.84),
    (3.95, 0.01, 3.94),
    (9.57, 0.02, 9.59),
    (1.37, 0.01, 1.37),
    (2.59, 0.01, 2.59),
];

fn basket(h: [f64; 4], vol: LocalVolatility, rho: f64, lambda: f64) -> BasketSpec {
    let assets = h.iter().map(|&hi| JumpDiffusionAsset::new(SPOT, hi, vol.clone())).collect();
    BasketSpec::new(assets, vec![0.25; 4], CorrelationMatrix::uniform(4, rho), lambda)
}

fn eta_jump(eta: f64) -> f64 {
    eta.exp() - 1.0
}

/// The rows of a table with their published values.
pub fn table_cases(id: u8) -> Option<Vec<TableCase>> {
    let mut cases = Vec::new();
    match id {
        1 => {
            let mut cells = TABLE1.iter();
            for lambda in [0.3, 1.0] {
                for eta in ETAS {
                    for t in [1.0, 3.0] {
                        let &(mc, se, pea, aea, lba) = cells.next()?;
                        cases.push(TableCase {
                            label: format!("lambda={lambda} eta={eta} T={t}"),
                            spec: basket([eta_jump(eta); 4], LocalVolatility::BlackScholes { sigma: 0.2 }, 0.3, lambda),
                            maturity: t,
                            strike: SPOT,
                            published: PublishedCells {
                                mc,
                                mc_stderr: se,
                                pea: Some(pea),
                                aea: Some(aea),
                                lba,
                            },
                        });
                    }
                }
            }
        }
        2 => {
            let mut cells = TABLE2.iter();
            for t in [0.5, 2.0] {
                for m in TABLE2_MONEYNESS {
                    let &(mc, se, lba) = cells.next()?;
                    cases.push(TableCase {
                        label: format!("T={t} K={m}"),
                        spec: basket([0.0, 0.1, 0.3, -0.5], LocalVolatility::BlackScholes { sigma: 0.5 }, 0.9, 4.0),
                        maturity: t,
                        strike: m / 100.0 * SPOT,
                        published: PublishedCells {
                            mc,
                            mc_stderr: se,
                            pea: None,
                            aea: None,
                            lba,
                        },
                    });
                }
            }
        }
        3 | 4 => {
            let h = if id == 3 {
                [eta_jump(-0.25); 4]
            } else {
                [0.0, 0.3, -0.3, 0.0]
            };
            for (i, t) in [1.0, 3.0].into_iter().enumerate() {
                for (j, (alpha, beta)) in CEV_GRID.into_iter().enumerate() {
                    let idx = 6 * i + j;
                    let published = if id == 3 {
                        let (mc, se, aea, lba) = TABLE3[idx];
                        PublishedCells {
                            mc,
                            mc_stderr: se,
                            pea: None,
                            aea: Some(aea),
                            lba,
                        }
                    } else {
                        let (mc, se, lba) = TABLE4[idx];
                        PublishedCells {
                            mc,
                            mc_stderr: se,
                            pea: None,
                            aea: None,
                            lba,
                        }
                    };
                    cases.push(TableCase {
                        label: format!("T={t} alpha={alpha} beta={beta}"),
                        spec: basket(h, LocalVolatility::Cev { alpha, beta }, 0.3, 0.3),
                        maturity: t,
                        strike: SPOT,
                        published,
                    });
                }
            }
        }
        _ => return None,
    }
    Some(cases)
}

/// Methods shown in a table, MC first.
pub fn table_methods(id: u8) -> &'static [Method] {
    match id {
        1 => &[Method::Mc, Method::Pea, Method::Aea, Method::Lba],
        3 => &[Method::Mc, Method::Aea, Method::Lba],
        _ => &[Method::Mc, Method::Lba],
    }
}

/// Published average relative errors as (row label, method, fraction).
pub fn published_averages(id: u8) -> &'static [(&'static str, &'static str, f64)] {
    match id {
        1 => &[("average", "pea", 0.001), ("average", "aea", 0.004), ("average", "lba", 0.004)],
        2 => &[("average", "lba", 0.039), ("average_iv", "lba", 0.044)],
        3 => &[("average", "aea", 0.007), ("average", "lba", 0.004)],
        4 => &[("average", "lba", 0.003)],
        _ => &[],
    }
}

fn table_settings(options: &TableOptions, convention: LbaConvention) -> RunSettings {
    RunSettings {
        mc: options.mc,
        pide: options.pide,
        lba: LbaSettings {
            convention,
            truncation: TruncationMode::Fixed(basket_core::lba::PAPER_COMPAT_TERMS),
            ..LbaSettings::published_tables()
        },
    }
}

/// Recomputes every cell of a table.
///
/// Cells are computed in parallel and assembled in the table's row order,
/// so the report is identical for any thread count.
pub fn reproduce_table(id: u8, options: &TableOptions) -> Option<TableReport> {
    let cases = table_cases(id)?;
    let published = table_settings(options, LbaConvention::PublishedTables);
    let derived = table_settings(options, LbaConvention::Derived);
    let mut labels: Vec<(Method, &str)> = table_methods(id).iter().map(|m| (*m, m.as_str())).collect();
    labels.push((Method::Lba, LBA_DERIVED));

    let jobs: Vec<(usize, Method, &str)> = (0..cases.len())
        .flat_map(|c| labels.iter().map(move |&(m, l)| (c, m, l)))
        .collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(c, method, label)| {
            let case = &cases[c];
            let settings = if label == LBA_DERIVED { &derived } else { &published };
            price_method(&case.spec, case.maturity, case.strike, method, settings)
        })
        .collect();

    let mut rows = Vec::with_capacity(jobs.len());
    let mut failures = Vec::new();
    for (&(c, _, label), result) in jobs.iter().zip(results) {
        let case = &cases[c];
        let mut row = ReportRow::empty(case.label.clone(), label);
        row.published = case.published.get(label);
        match result {
            Ok(r) => {
                row.price = Some(r.price);
                row.stderr = r.stderr;
                row.iv = r.implied_vol;
            }
            Err(e) => failures.push((case.label.clone(), label.to_string(), e)),
        }
        rows.push(row);
    }
    for c in &cases {
        let mc = rows.iter().find(|r| r.config == c.label && r.method == "mc").and_then(|r| r.price);
        if let Some(mc) = mc {
            for r in rows.iter_mut().filter(|r| r.config == c.label && r.method != "mc") {
                r.rel_err = r.price.map(|p| relative_error(p, mc));
            }
        }
    }

    let mut averages = Vec::new();
    for &(_, label) in labels.iter().filter(|(m, _)| *m != Method::Mc) {
        let mut avg = ReportRow::empty("average", label);
        avg.rel_err = mean(rows.iter().filter(|r| r.method == label).filter_map(|r| r.rel_err));
        averages.push(avg);
    }
    if id == 2 {
        for &(_, label) in labels.iter().filter(|(m, _)| *m == Method::Lba) {
            let mut avg = ReportRow::empty("average_iv", label);
            avg.rel_err = mean(cases.iter().filter_map(|c| {
                let iv = |m: &str| rows.iter().find(|r| r.config == c.label && r.method == m)?.iv;
                Some(relative_error(iv(label)?, iv("mc")?))
            }));
            averages.push(avg);
        }
    }
    for avg in &mut averages {
        avg.published = published_averages(id)
            .iter()
            .find(|(l, m, _)| *l == avg.config && *m == avg.method)
            .map(|&(_, _, v)| v);
    }
    rows.extend(averages);

    Some(TableReport {
        id,
        cases,
        rows,
        options: *options,
        failures,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_counts() {
        assert_eq!(table_cases(1).unwrap().len(), 12);
        assert_eq!(table_cases(2).unwrap().len(), 10);
        assert_eq!(table_cases(3).unwrap().len(), 12);
        assert_eq!(table_cases(4).unwrap().len(), 12);
        assert!(table_cases(5).is_none());
    }

    #[test]
    fn table_specs_match_setup() {
        for id in 1..=4 {
            for c in table_cases(id).unwrap() {
                assert!(c.spec.validate().is_ok(), "{}", c.label);
                assert_eq!(c.spec.basket_spot(), 100.0);
            }
        }
        let t2 = table_cases(2).unwrap();
        assert_eq!(t2[0].strike, 70.0);
        assert_eq!(t2[9].strike, 130.0);
    }

    #[test]
    fn small_table_layout() {
        let options = TableOptions {
            mc: McConfig {
                n_paths: 4096,
                steps_per_year: 50,
                ..McConfig::default()
            },
            pide: PideGridConfig::default(),
        };
        let report = reproduce_table(4, &options).unwrap();
        // 12 cases x (mc, lba, lba_derived) + 2 averages
        assert_eq!(report.rows.len(), 12 * 3 + 2);
        assert!(report.failures.is_empty());
        let avg = report.row("average", "lba").unwrap();
        assert_eq!(avg.published, Some(0.003));
        assert!(avg.rel_err.is_some());
    }
}
