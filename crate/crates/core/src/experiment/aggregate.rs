use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{ResultRow, ResultType};
use crate::error::{Error, Result};
use crate::metrics::MetricsRecord;

const BINS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MedianRow {
    pub pair: String,
    pub result_type: ResultType,
    pub metric: String,
    pub median: f64,
    pub count: usize,
}

/// Histogram density of one kernel's L1 weight over `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub pair: String,
    pub result_type: ResultType,
    pub d: usize,
    pub kernel_index: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub density: f64,
}

/// Type III median minus type I median, rounded to two decimals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DifferenceRow {
    pub pair: String,
    pub metric: String,
    pub difference: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AggregateReport {
    pub medians: Vec<MedianRow>,
    pub densities: Vec<DensityRow>,
    pub differences: Vec<DifferenceRow>,
}

impl AggregateReport {
    pub fn median_of(&self, pair: &str, result_type: ResultType, metric: &str) -> Option<f64> {
        self.medians
            .iter()
            .find(|m| m.pair == pair && m.result_type == result_type && m.metric == metric)
            .map(|m| m.median)
    }

    pub fn write_medians_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "pair,result_type,metric,median,count")?;
        for m in &self.medians {
            writeln!(out, "{},{},{},{:.16e},{}", m.pair, m.result_type, m.metric, m.median, m.count)?;
        }
        Ok(())
    }

    pub fn write_densities_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "pair,result_type,d,kernel_index,bin_lo,bin_hi,density")?;
        for r in &self.densities {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.16e}",
                r.pair, r.result_type, r.d, r.kernel_index, r.bin_lo, r.bin_hi, r.density
            )?;
        }
        Ok(())
    }

    pub fn write_differences_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "pair,metric,difference")?;
        for r in &self.differences {
            writeln!(out, "{},{},{:.2}", r.pair, r.metric, r.difference)?;
        }
        Ok(())
    }
}

/// Median with the two middle values averaged on even counts.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Aggregation("median of nothing".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Medians, weight densities and the III − I difference grid. Rows carrying
/// an error are skipped.
pub fn aggregate_report(rows: &[ResultRow]) -> Result<AggregateReport> {
    let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.is_ok() && r.metrics.is_some()).collect();
    if ok.is_empty() {
        return Err(Error::Aggregation("no successful rows to aggregate".into()));
    }

    // pair order follows first appearance
    let mut pair_order: Vec<String> = Vec::new();
    for r in &ok {
        if !pair_order.contains(&r.pair) {
            pair_order.push(r.pair.clone());
        }
    }

    let mut groups: BTreeMap<(usize, ResultType), Vec<&ResultRow>> = BTreeMap::new();
    for r in &ok {
        let p = pair_order.iter().position(|p| *p == r.pair).unwrap_or_default();
        groups.entry((p, r.result_type)).or_default().push(r);
    }

    let mut report = AggregateReport::default();
    for ((p, t), members) in &groups {
        for name in MetricsRecord::NAMES {
            let values: Vec<f64> = members.iter().filter_map(|r| r.metrics.and_then(|m| m.get(name))).collect();
            report.medians.push(MedianRow {
                pair: pair_order[*p].clone(),
                result_type: *t,
                metric: name.to_string(),
                median: median(&values)?,
                count: values.len(),
            });
        }

        let mut by_d: BTreeMap<usize, Vec<&ResultRow>> = BTreeMap::new();
        for r in members {
            by_d.entry(r.d).or_default().push(r);
        }
        for (d, rs) in by_d {
            let n_kernels = rs.iter().map(|r| r.gamma_l1.len()).max().unwrap_or(0);
            for k in 0..n_kernels {
                let weights: Vec<f64> = rs.iter().filter_map(|r| r.gamma_l1.get(k).copied()).collect();
                let mut counts = [0usize; BINS];
                for w in &weights {
                    let bin = ((w.clamp(0.0, 1.0) * BINS as f64) as usize).min(BINS - 1);
                    counts[bin] += 1;
                }
                let width = 1.0 / BINS as f64;
                for (b, &c) in counts.iter().enumerate() {
                    report.densities.push(DensityRow {
                        pair: pair_order[*p].clone(),
                        result_type: *t,
                        d,
                        kernel_index: k,
                        bin_lo: b as f64 * width,
                        bin_hi: (b + 1) as f64 * width,
                        density: c as f64 / (weights.len() as f64 * width),
                    });
                }
            }
        }
    }

    for pair in &pair_order {
        for name in MetricsRecord::NAMES {
            let first = report.median_of(pair, ResultType::I, name);
            let third = report.median_of(pair, ResultType::III, name);
            if let (Some(a), Some(b)) = (first, third) {
                report.differences.push(DifferenceRow {
                    pair: pair.clone(),
                    metric: name.to_string(),
                    difference: round2(b - a),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelKind;

    fn row(t: ResultType, gamma: f64, accuracy: f64) -> ResultRow {
        ResultRow {
            pair: "RX-Linear".into(),
            kernels: vec![KernelKind::Rx, KernelKind::Linear],
            d: 2,
            repetition: 0,
            seed: 0,
            result_type: t,
            gamma_l1: vec![gamma, 1.0 - gamma],
            theta: vec![vec![], vec![]],
            loss: None,
            metrics: Some(MetricsRecord {
                accuracy,
                aucroc: 0.5,
                margin: 0.1,
                spectral_ratio: 0.3,
                spectral_ratio_raw: 2.0,
            }),
            error: None,
            wall_time: 0.0,
        }
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[0.7]).unwrap(), 0.7);
        assert_eq!(median(&[0.8, 0.2, 0.5]).unwrap(), 0.5);
        assert_eq!(median(&[1.0, 2.0]).unwrap(), 1.5);
        assert!(median(&[]).is_err());
    }

    #[test]
    fn single_row_and_weight_median() {
        let report = aggregate_report(&[row(ResultType::II, 0.3, 0.9)]).unwrap();
        assert_eq!(report.median_of("RX-Linear", ResultType::II, "accuracy"), Some(0.9));

        let rows: Vec<_> = [0.2, 0.5, 0.8].iter().map(|&g| row(ResultType::II, g, 0.9)).collect();
        let report = aggregate_report(&rows).unwrap();
        let weights: Vec<f64> = rows.iter().map(|r| r.gamma_l1[0]).collect();
        assert_eq!(median(&weights).unwrap(), 0.5);
        let dens: Vec<_> = report.densities.iter().filter(|r| r.kernel_index == 0).collect();
        assert_eq!(dens.len(), BINS);
        let mass: f64 = dens.iter().map(|r| r.density * (r.bin_hi - r.bin_lo)).sum();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_runs_give_zero_differences() {
        let rows = vec![row(ResultType::I, 0.5, 0.81), row(ResultType::III, 0.5, 0.81)];
        let report = aggregate_report(&rows).unwrap();
        assert_eq!(report.differences.len(), MetricsRecord::NAMES.len());
        assert!(report.differences.iter().all(|d| d.difference == 0.0));

        let rows = vec![row(ResultType::I, 0.5, 0.80), row(ResultType::III, 0.5, 0.876)];
        let report = aggregate_report(&rows).unwrap();
        assert_eq!(report.differences[0].difference, 0.08);
    }

    #[test]
    fn empty_or_failed_rows_are_an_error() {
        assert!(matches!(aggregate_report(&[]), Err(Error::Aggregation(_))));
        let mut r = row(ResultType::I, 0.5, 0.5);
        r.error = Some("boom".into());
        r.metrics = None;
        assert!(aggregate_report(&[r]).is_err());
    }
}
