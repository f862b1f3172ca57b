//! CSV artifacts: per-step traces, optimizer traces, metric reports and the
//! figure tables.
//!
//! Every file starts with one comment line
//! `# config_hash=<hex> seed=<s>` (or `seeds=<s1;s2;...>` for files pooling
//! several seeds) followed by `key=value` pairs, then a CSV header row.
//! Floats use the shortest round-trip representation, so metrics recomputed
//! from persisted traces are bit-identical to the in-memory ones.
//!
//! Units: interference and power in watts, SINR linear unless the column name
//! ends in `_db`, rates in bit/s/Hz.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sim::{CellTrace, StepRecord};
use super::SchemeId;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::metrics::{self, MetricsReport};
use crate::predictor;

pub const FIGURE_FILES: [&str; 6] = [
    "interference_vs_time.csv",
    "interference_vs_k.csv",
    "sinr_cdf.csv",
    "outage_vs_threshold.csv",
    "rmse_vs_horizon.csv",
    "minrate_vs_scheme.csv",
];

pub const REPORT_DIR: &str = "reports";
pub const AGGREGATE_REPORT: &str = "aggregate.csv";

fn fmt_f(x: f64) -> String {
    format!("{x:e}")
}

fn parse_f(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Format(format!("bad float {s:?}")))
}

fn parse_u<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Format(format!("bad integer {s:?}")))
}

fn seeds_field(seeds: &[u64]) -> String {
    seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(";")
}

/// Comment line plus CSV body.
fn render(comment: &str, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend(comment.as_bytes());
    out.push(b'\n');
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(out)
}

/// Split a file into its `key=value` comment pairs and CSV records.
fn parse(text: &str) -> Result<(BTreeMap<String, String>, Vec<String>, Vec<csv::StringRecord>)> {
    let (first, rest) = text.split_once('\n').ok_or_else(|| Error::Format("missing comment header".into()))?;
    let first = first
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("first line is not a comment header".into()))?;
    let mut kv = BTreeMap::new();
    for tok in first.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header token {tok:?}")))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((kv, header, rows))
}

fn required<'a>(kv: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    kv.get(key)
        .map(String::as_str)
        .ok_or_else(|| Error::Format(format!("header lacks {key}")))
}

/// Identity of one trace file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub config_hash: String,
    pub seed: u64,
    pub scheme: SchemeId,
    pub interferers: usize,
    pub horizon: usize,
}

impl TraceHeader {
    fn comment(&self) -> String {
        format!(
            "# config_hash={} seed={} scheme={} interferers={} horizon={}",
            self.config_hash, self.seed, self.scheme, self.interferers, self.horizon
        )
    }
}

/// A trace as persisted: header plus per-step records.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceData {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
}

impl TraceData {
    pub fn from_cell(cell: &CellTrace, config_hash: &str, horizon: usize) -> Self {
        Self {
            header: TraceHeader {
                config_hash: config_hash.to_string(),
                seed: cell.seed,
                scheme: cell.scheme,
                interferers: cell.interferers,
                horizon,
            },
            steps: cell.steps.clone(),
        }
    }

    pub fn interference(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.interference).collect()
    }

    pub fn sinr(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.sinr).collect()
    }

    pub fn has_predictions(&self) -> bool {
        self.steps.iter().all(|s| s.predicted.iter().all(|p| p.is_finite()))
    }
}

pub fn trace_file_name(scheme: SchemeId, k: usize, seed: u64) -> String {
    format!("trace_{scheme}_k{k}_s{seed}.csv")
}

const STEP_COLUMNS: [&str; 14] = [
    "step",
    "ue_x_m",
    "ue_y_m",
    "ue_z_m",
    "interference_w",
    "sinr",
    "predicted_sinr",
    "serving_blocked",
    "blocked_links",
    "near_field_links",
    "hotspot_users",
    "serving_power_w",
    "iterations",
    "feasible_fraction",
];

pub fn trace_to_csv(trace: &TraceData) -> Result<Vec<u8>> {
    let t = trace.header.horizon;
    let mut header: Vec<String> = STEP_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=t).map(|i| format!("pred_{i}_w")));
    header.extend((1..=t).map(|i| format!("real_{i}_w")));
    let mut rows = Vec::with_capacity(trace.steps.len());
    for s in &trace.steps {
        if s.predicted.len() != t || s.realized.len() != t {
            return Err(Error::Dimension(format!("step {} does not carry {t} horizon values", s.step)));
        }
        let mut r = vec![
            s.step.to_string(),
            fmt_f(s.ue[0]),
            fmt_f(s.ue[1]),
            fmt_f(s.ue[2]),
            fmt_f(s.interference),
            fmt_f(s.sinr),
            fmt_f(s.predicted_sinr),
            u8::from(s.serving_blocked).to_string(),
            s.blocked_links.to_string(),
            s.near_field_links.to_string(),
            s.hotspot_users.to_string(),
            fmt_f(s.serving_power),
            s.iterations.to_string(),
            fmt_f(s.feasible_fraction),
        ];
        r.extend(s.predicted.iter().map(|x| fmt_f(*x)));
        r.extend(s.realized.iter().map(|x| fmt_f(*x)));
        rows.push(r);
    }
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    render(&trace.header.comment(), &refs, &rows)
}

pub fn trace_from_csv(text: &str) -> Result<TraceData> {
    let (kv, header, rows) = parse(text)?;
    let th = TraceHeader {
        config_hash: required(&kv, "config_hash")?.to_string(),
        seed: parse_u(required(&kv, "seed")?)?,
        scheme: required(&kv, "scheme")?.parse()?,
        interferers: parse_u(required(&kv, "interferers")?)?,
        horizon: parse_u(required(&kv, "horizon")?)?,
    };
    let t = th.horizon;
    if header.len() != STEP_COLUMNS.len() + 2 * t || header[..STEP_COLUMNS.len()] != STEP_COLUMNS {
        return Err(Error::Format("unexpected trace columns".into()));
    }
    let mut steps = Vec::with_capacity(rows.len());
    for r in &rows {
        if r.len() != header.len() {
            return Err(Error::Format("ragged trace row".into()));
        }
        let f = |i: usize| parse_f(&r[i]);
        let n = STEP_COLUMNS.len();
        steps.push(StepRecord {
            step: parse_u(&r[0])?,
            ue: [f(1)?, f(2)?, f(3)?],
            interference: f(4)?,
            sinr: f(5)?,
            predicted_sinr: f(6)?,
            serving_blocked: parse_u::<u8>(&r[7])? != 0,
            blocked_links: parse_u(&r[8])?,
            near_field_links: parse_u(&r[9])?,
            hotspot_users: parse_u(&r[10])?,
            serving_power: f(11)?,
            iterations: parse_u(&r[12])?,
            feasible_fraction: f(13)?,
            predicted: (n..n + t).map(f).collect::<Result<_>>()?,
            realized: (n + t..n + 2 * t).map(f).collect::<Result<_>>()?,
        });
    }
    Ok(TraceData { header: th, steps })
}

pub fn write_trace(dir: &Path, trace: &TraceData) -> Result<PathBuf> {
    let h = &trace.header;
    let path = dir.join(trace_file_name(h.scheme, h.interferers, h.seed));
    write_atomic(&path, &trace_to_csv(trace)?)?;
    Ok(path)
}

pub fn read_trace(path: &Path) -> Result<TraceData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))?;
    trace_from_csv(&text).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Every `trace_*.csv` in `dir`, ordered by (scheme, K, seed); all must share one config hash.
pub fn load_traces(dir: &Path) -> Result<Vec<TraceData>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::MissingArtifact(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("trace_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::MissingArtifact(format!("no trace files in {}", dir.display())));
    }
    let mut traces = paths.iter().map(|p| read_trace(p)).collect::<Result<Vec<_>>>()?;
    check_uniform_hash(&traces)?;
    traces.sort_by_key(|t| (t.header.scheme, t.header.interferers, t.header.seed));
    Ok(traces)
}

fn check_uniform_hash(traces: &[TraceData]) -> Result<()> {
    let first = &traces.first().ok_or(Error::Empty("traces"))?.header.config_hash;
    for t in traces {
        if &t.header.config_hash != first {
            return Err(Error::HashMismatch {
                expected: first.clone(),
                found: t.header.config_hash.clone(),
            });
        }
    }
    Ok(())
}

/// Per-iteration optimizer log of one cell; `None` when the scheme does not optimize.
pub fn optimizer_csv(cell: &CellTrace, config_hash: &str) -> Result<Option<Vec<u8>>> {
    if cell.optimizer.iter().all(Option::is_none) {
        return Ok(None);
    }
    let mut rows = Vec::new();
    for (step, o) in cell.optimizer.iter().enumerate() {
        let Some(o) = o else { continue };
        let mask: String = o.feasible.iter().flatten().map(|f| if *f { '1' } else { '0' }).collect();
        for (i, obj) in o.objective.iter().enumerate() {
            rows.push(vec![
                step.to_string(),
                i.to_string(),
                fmt_f(*obj),
                fmt_f(o.total_power[i]),
                fmt_f(o.worst_sinr[i]),
                if i + 1 == o.objective.len() { mask.clone() } else { String::new() },
            ]);
        }
    }
    let comment = format!(
        "# config_hash={config_hash} seed={} scheme={} interferers={}",
        cell.seed, cell.scheme, cell.interferers
    );
    render(
        &comment,
        &["step", "iteration", "objective_w", "total_power_w", "worst_sinr", "feasible_mask"],
        &rows,
    )
    .map(Some)
}

pub fn write_optimizer_trace(dir: &Path, cell: &CellTrace, config_hash: &str) -> Result<Option<PathBuf>> {
    match optimizer_csv(cell, config_hash)? {
        None => Ok(None),
        Some(bytes) => {
            let path = dir.join(format!("optimizer_{}_k{}_s{}.csv", cell.scheme, cell.interferers, cell.seed));
            write_atomic(&path, &bytes)?;
            Ok(Some(path))
        }
    }
}

/// Time-averaged `log2(1 + SINR)` of one trace.
fn mean_rate(t: &TraceData) -> Result<f64> {
    let r: Vec<f64> = t.steps.iter().map(|s| (1.0 + s.sinr.max(0.0)).log2()).collect();
    metrics::mean(&r)
}

/// Metrics of the traces of one (scheme, K) group; one trace gives the per-seed report.
pub fn report(group: &[&TraceData], thresholds_db: &[f64]) -> Result<MetricsReport> {
    let first = group.first().ok_or(Error::Empty("trace group"))?;
    let (scheme, k) = (first.header.scheme, first.header.interferers);
    if group.iter().any(|t| t.header.scheme != scheme || t.header.interferers != k) {
        return Err(Error::InvalidArgument("report group mixes schemes or K".into()));
    }
    let per_seed: Vec<f64> = group
        .iter()
        .map(|t| metrics::avg_interference(&t.interference()))
        .collect::<Result<_>>()?;
    let sinr_samples: Vec<f64> = group.iter().flat_map(|t| t.sinr()).collect();
    let thresholds: Vec<f64> = thresholds_db.iter().map(|g| metrics::from_db(*g)).collect();
    let outage = metrics::outage(&sinr_samples, &thresholds)?;
    let rmse_per_horizon = if group.iter().all(|t| t.has_predictions()) {
        let pred: Vec<Vec<f64>> = group.iter().flat_map(|t| t.steps.iter().map(|s| s.predicted.clone())).collect();
        let real: Vec<Vec<f64>> = group.iter().flat_map(|t| t.steps.iter().map(|s| s.realized.clone())).collect();
        predictor::prediction_rmse(&pred, &real)?.per_horizon
    } else {
        Vec::new()
    };
    let rates = group.iter().map(|t| mean_rate(t)).collect::<Result<Vec<_>>>()?;
    let r = MetricsReport {
        scheme: scheme.name().to_string(),
        num_interferers: k,
        seeds: group.iter().map(|t| t.header.seed).collect(),
        avg_interference: metrics::mean(&per_seed)?,
        sinr_samples,
        thresholds_db: thresholds_db.to_vec(),
        outage,
        rmse_per_horizon,
        min_rate: rates.iter().copied().fold(f64::INFINITY, f64::min),
    };
    r.validate()?;
    Ok(r)
}

const REPORT_COLUMNS: [&str; 5] = ["scheme", "interferers", "metric", "x", "value"];

/// Long-format rows of a report: `avg_interference_w`, `min_rate_bps_hz`,
/// `outage` (x = threshold in dB) and `rmse_w` (x = tau).
fn report_rows(r: &MetricsReport) -> Vec<Vec<String>> {
    let row = |metric: &str, x: String, v: f64| vec![r.scheme.clone(), r.num_interferers.to_string(), metric.to_string(), x, fmt_f(v)];
    let mut rows = vec![
        row("avg_interference_w", String::new(), r.avg_interference),
        row("min_rate_bps_hz", String::new(), r.min_rate),
    ];
    rows.extend(r.thresholds_db.iter().zip(&r.outage).map(|(g, p)| row("outage", fmt_f(*g), *p)));
    rows.extend(r.rmse_per_horizon.iter().enumerate().map(|(i, e)| row("rmse_w", (i + 1).to_string(), *e)));
    rows
}

/// Group traces by (scheme, K), keeping input order inside each group.
fn groups(traces: &[TraceData]) -> BTreeMap<(SchemeId, usize), Vec<&TraceData>> {
    let mut g: BTreeMap<(SchemeId, usize), Vec<&TraceData>> = BTreeMap::new();
    for t in traces {
        g.entry((t.header.scheme, t.header.interferers)).or_default().push(t);
    }
    g
}

fn pooled_comment(hash: &str, seeds: &[u64]) -> String {
    format!("# config_hash={hash} seeds={}", seeds_field(seeds))
}

/// Rendered evaluation outputs, keyed by path relative to the output directory.
pub fn evaluation_files(traces: &[TraceData], thresholds_db: &[f64]) -> Result<BTreeMap<String, Vec<u8>>> {
    check_uniform_hash(traces)?;
    let hash = traces[0].header.config_hash.clone();
    let mut seeds: Vec<u64> = traces.iter().map(|t| t.header.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let comment = pooled_comment(&hash, &seeds);
    let groups = groups(traces);
    let mut files = BTreeMap::new();

    let mut time_rows = Vec::new();
    let mut k_rows = Vec::new();
    let mut cdf_rows = Vec::new();
    let mut outage_rows = Vec::new();
    let mut rmse_rows = Vec::new();
    let mut rate_rows = Vec::new();
    let mut aggregate_rows = Vec::new();
    for ((scheme, k), group) in &groups {
        let id = |v: Vec<String>| [vec![scheme.to_string(), k.to_string()], v].concat();
        let n_steps = group[0].steps.len();
        if group.iter().any(|t| t.steps.len() != n_steps || t.header.horizon != group[0].header.horizon) {
            return Err(Error::Dimension(format!("{scheme} K={k}: traces differ in length or horizon")));
        }
        let n = group.len() as f64;
        for i in 0..n_steps {
            let xs: Vec<f64> = group.iter().map(|t| t.steps[i].interference).collect();
            time_rows.push(id(vec![
                group[0].steps[i].step.to_string(),
                fmt_f(metrics::mean(&xs)?),
                fmt_f(metrics::std_dev(&xs)? / n.sqrt()),
            ]));
        }
        let r = report(group, thresholds_db)?;
        let per_seed: Vec<f64> = group
            .iter()
            .map(|t| metrics::avg_interference(&t.interference()))
            .collect::<Result<_>>()?;
        k_rows.push(id(vec![
            group.len().to_string(),
            fmt_f(r.avg_interference),
            fmt_f(metrics::std_dev(&per_seed)? / n.sqrt()),
        ]));
        for (v, f) in metrics::sinr_cdf(&r.sinr_samples)? {
            cdf_rows.push(id(vec![fmt_f(metrics::to_db(v)), fmt_f(f)]));
        }
        for (g, p) in r.thresholds_db.iter().zip(&r.outage) {
            outage_rows.push(id(vec![fmt_f(*g), fmt_f(*p)]));
        }
        for (i, e) in r.rmse_per_horizon.iter().enumerate() {
            rmse_rows.push(id(vec![(i + 1).to_string(), fmt_f(*e)]));
        }
        let rates = group.iter().map(|t| mean_rate(t)).collect::<Result<Vec<_>>>()?;
        rate_rows.push(id(vec![fmt_f(r.min_rate), fmt_f(metrics::mean(&rates)?)]));
        aggregate_rows.extend(report_rows(&r));

        for t in group {
            let single = report(&[*t], thresholds_db)?;
            let c = format!("# config_hash={hash} seed={} scheme={scheme} interferers={k}", t.header.seed);
            files.insert(
                format!("{REPORT_DIR}/report_{scheme}_k{k}_s{}.csv", t.header.seed),
                render(&c, &REPORT_COLUMNS, &report_rows(&single))?,
            );
        }
    }
    files.insert(format!("{REPORT_DIR}/{AGGREGATE_REPORT}"), render(&comment, &REPORT_COLUMNS, &aggregate_rows)?);
    let tables: [(&str, Vec<&str>, Vec<Vec<String>>); 6] = [
        (FIGURE_FILES[0], vec!["scheme", "interferers", "step", "mean_interference_w", "std_err_w"], time_rows),
        (FIGURE_FILES[1], vec!["scheme", "interferers", "seeds", "mean_interference_w", "std_err_w"], k_rows),
        (FIGURE_FILES[2], vec!["scheme", "interferers", "sinr_db", "cdf"], cdf_rows),
        (FIGURE_FILES[3], vec!["scheme", "interferers", "threshold_db", "outage"], outage_rows),
        (FIGURE_FILES[4], vec!["scheme", "interferers", "tau", "rmse_w"], rmse_rows),
        (FIGURE_FILES[5], vec!["scheme", "interferers", "min_rate_bps_hz", "mean_rate_bps_hz"], rate_rows),
    ];
    for (name, header, rows) in tables {
        files.insert(name.to_string(), render(&comment, &header, &rows)?);
    }
    Ok(files)
}

/// Write the evaluation outputs under `dir`; returns the written paths in order.
pub fn write_evaluation(dir: &Path, traces: &[TraceData], thresholds_db: &[f64]) -> Result<Vec<PathBuf>> {
    let files = evaluation_files(traces, thresholds_db)?;
    let mut out = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        out.push(p);
    }
    Ok(out)
}

/// Parsed figure or report table: comment pairs, header and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::MissingArtifact(format!("{}: {e}", path.display())))?;
        let (meta, header, rows) = parse(&text)?;
        Ok(Self {
            meta,
            header,
            rows: rows.iter().map(|r| r.iter().map(str::to_string).collect()).collect(),
        })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("no column {name}")))
    }

    /// Float values of `column` over rows matching every `(column, value)` filter.
    pub fn values(&self, column: &str, filters: &[(&str, &str)]) -> Result<Vec<f64>> {
        let c = self.column(column)?;
        let fs = filters
            .iter()
            .map(|(k, v)| Ok((self.column(k)?, *v)))
            .collect::<Result<Vec<_>>>()?;
        self.rows
            .iter()
            .filter(|r| fs.iter().all(|(i, v)| r[*i] == *v))
            .map(|r| parse_f(&r[c]))
            .collect()
    }
}

/// Loss curve of a training run, one row per epoch.
pub fn loss_curve_csv(log: &predictor::TrainingLog, config_hash: &str, seed: u64, interferers: usize) -> Result<Vec<u8>> {
    let rows: Vec<Vec<String>> = log
        .epochs
        .iter()
        .map(|e| {
            vec![
                e.epoch.to_string(),
                fmt_f(e.discriminator_loss),
                fmt_f(e.generator_adversarial),
                fmt_f(e.train_pred),
                fmt_f(e.validation_pred),
                fmt_f(e.pred_grad_norm),
                fmt_f(e.adv_grad_norm),
            ]
        })
        .collect();
    let mut comment = String::new();
    let _ = write!(
        comment,
        "# config_hash={config_hash} seed={seed} interferers={interferers} initial_validation_pred={}",
        fmt_f(log.initial_validation_pred)
    );
    render(
        &comment,
        &[
            "epoch",
            "discriminator_loss",
            "generator_adversarial",
            "train_pred",
            "validation_pred",
            "pred_grad_norm",
            "adv_grad_norm",
        ],
        &rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(i: usize, interference: f64, sinr: f64, predicted: bool) -> StepRecord {
        StepRecord {
            step: i,
            ue: [1.0, 2.0 + i as f64 * 1e-3, 1.1],
            interference,
            sinr,
            predicted_sinr: if predicted { sinr * 1.1 } else { f64::NAN },
            serving_blocked: i % 3 == 0,
            blocked_links: i % 2,
            near_field_links: 2,
            hotspot_users: 0,
            serving_power: 1e-3,
            iterations: if predicted { 2 } else { 0 },
            feasible_fraction: if predicted { 0.5 } else { f64::NAN },
            predicted: if predicted { vec![interference, interference * 2.0] } else { vec![f64::NAN; 2] },
            realized: vec![interference, interference * 3.0],
        }
    }

    fn trace(scheme: SchemeId, k: usize, seed: u64, hash: &str) -> TraceData {
        let pred = scheme != SchemeId::ReactiveZf;
        TraceData {
            header: TraceHeader {
                config_hash: hash.into(),
                seed,
                scheme,
                interferers: k,
                horizon: 2,
            },
            steps: (0..4)
                .map(|i| step(i, 1e-10 * (1 + i + seed as usize) as f64 / 3.0, 0.1 + i as f64 * 1.7, pred))
                .collect(),
        }
    }

    #[test]
    fn trace_round_trip_is_exact() {
        let t = trace(SchemeId::DtDeterministic, 4, 7, "ab12");
        let bytes = trace_to_csv(&t).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.starts_with("# config_hash=ab12 seed=7 scheme=dt_deterministic interferers=4 horizon=2\n"));
        let back = trace_from_csv(&text).unwrap();
        assert_eq!(back.header, t.header);
        for (a, b) in back.steps.iter().zip(&t.steps) {
            assert_eq!(a.interference.to_bits(), b.interference.to_bits());
            assert_eq!(a.predicted, b.predicted);
        }
        let z = trace(SchemeId::ReactiveZf, 4, 7, "ab12");
        let back = trace_from_csv(&String::from_utf8(trace_to_csv(&z).unwrap()).unwrap()).unwrap();
        assert!(back.steps[0].predicted[0].is_nan() && !back.has_predictions());
    }

    #[test]
    fn six_figures_and_one_row_per_cell() {
        let traces = vec![
            trace(SchemeId::ReactiveZf, 2, 0, "h"),
            trace(SchemeId::ReactiveZf, 2, 1, "h"),
            trace(SchemeId::ReactiveZf, 4, 0, "h"),
            trace(SchemeId::DtDeterministic, 2, 0, "h"),
        ];
        let files = evaluation_files(&traces, &[0.0, 5.0]).unwrap();
        for f in FIGURE_FILES {
            assert!(files.contains_key(f), "{f}");
        }
        assert_eq!(files.keys().filter(|k| !k.contains('/')).count(), 6);
        assert_eq!(files.keys().filter(|k| k.starts_with("reports/report_")).count(), 4);
        let text = String::from_utf8(files["interference_vs_k.csv"].clone()).unwrap();
        assert_eq!(text.lines().count(), 2 + 3);
        assert!(text.starts_with("# config_hash=h seeds=0;1\n"));
        let rmse = String::from_utf8(files["rmse_vs_horizon.csv"].clone()).unwrap();
        assert!(rmse.lines().skip(2).all(|l| l.starts_with("dt_deterministic")));
        assert_eq!(evaluation_files(&traces, &[0.0, 5.0]).unwrap(), files);
    }

    #[test]
    fn mixed_hashes_are_refused() {
        let traces = vec![trace(SchemeId::ReactiveZf, 2, 0, "a"), trace(SchemeId::ReactiveZf, 2, 1, "b")];
        assert!(matches!(evaluation_files(&traces, &[0.0]), Err(Error::HashMismatch { .. })));
    }

    #[test]
    fn report_from_disk_matches_memory() {
        let dir = tempfile::tempdir().unwrap();
        let traces = vec![trace(SchemeId::DtDeterministic, 2, 0, "h"), trace(SchemeId::DtDeterministic, 2, 3, "h")];
        for t in &traces {
            write_trace(dir.path(), t).unwrap();
        }
        let loaded = load_traces(dir.path()).unwrap();
        let g = |v: &[TraceData]| report(&v.iter().collect::<Vec<_>>(), &[1.0, 2.0]).unwrap();
        let (a, b) = (g(&traces), g(&loaded));
        assert_eq!(a.avg_interference.to_bits(), b.avg_interference.to_bits());
        assert_eq!(a.rmse_per_horizon, b.rmse_per_horizon);
        assert_eq!(a.min_rate.to_bits(), b.min_rate.to_bits());
        assert!(load_traces(&dir.path().join("missing")).is_err());
    }

    #[test]
    fn table_lookup() {
        let t = trace(SchemeId::DtDeterministic, 2, 0, "h");
        let dir = tempfile::tempdir().unwrap();
        write_evaluation(dir.path(), &[t], &[0.0]).unwrap();
        let tab = Table::read(&dir.path().join("rmse_vs_horizon.csv")).unwrap();
        assert_eq!(tab.meta["config_hash"], "h");
        let v = tab.values("rmse_w", &[("scheme", "dt_deterministic"), ("tau", "2")]).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0] > 0.0);
    }
}
