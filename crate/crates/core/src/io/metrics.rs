//! Per-run metrics as CSV.

use std::collections::BTreeMap;

use serde::Serialize;

pub const HEADER: [&str; 10] = ["instance", "mode", "R", "gamma", "seed", "legal", "hpwl", "area", "cost", "seconds"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub mode: String,
    pub ratio: f64,
    pub gamma: f64,
    pub seed: u64,
    pub legal: bool,
    pub hpwl: f64,
    /// Bounding-box area of the returned plan.
    pub area: f64,
    pub cost: Option<f64>,
    /// `None` leaves the cell empty, e.g. when timings are suppressed.
    pub seconds: Option<f64>,
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// One row per record, then one `summary` row per (instance, mode, R, gamma)
/// whose `legal` cell is the success rate in percent and whose numeric cells
/// are means over the legal runs.
pub fn write_metrics_csv(records: &[RunRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in records {
        w.write_record([
            r.instance.clone(),
            r.mode.clone(),
            r.ratio.to_string(),
            r.gamma.to_string(),
            r.seed.to_string(),
            (r.legal as u8).to_string(),
            r.hpwl.to_string(),
            r.area.to_string(),
            cell(r.cost),
            cell(r.seconds),
        ])
        .expect("in-memory write");
    }

    let mut groups: BTreeMap<(String, String, u64, u64), Vec<&RunRecord>> = BTreeMap::new();
    let mut order = Vec::new();
    for r in records {
        let key = (r.instance.clone(), r.mode.clone(), r.ratio.to_bits(), r.gamma.to_bits());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    for key in order {
        let rs = &groups[&key];
        let legal: Vec<&&RunRecord> = rs.iter().filter(|r| r.legal).collect();
        let sr = 100.0 * legal.len() as f64 / rs.len() as f64;
        let seconds = if rs.iter().all(|r| r.seconds.is_some()) { mean(rs.iter().filter_map(|r| r.seconds)) } else { None };
        w.write_record([
            key.0.clone(),
            key.1.clone(),
            rs[0].ratio.to_string(),
            rs[0].gamma.to_string(),
            "summary".to_string(),
            sr.to_string(),
            cell(mean(legal.iter().map(|r| r.hpwl))),
            cell(mean(legal.iter().map(|r| r.area))),
            cell(mean(legal.iter().filter_map(|r| r.cost))),
            cell(seconds),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
