//! Evaluation reports: one row per mixture plus aggregate means, rendered
//! as JSON lines or CSV. Rows are ordered by mixture id and the config is
//! echoed into the summary, so a report is reproducible byte-for-byte
//! regardless of worker count.

use std::collections::BTreeMap;

use serde::Serialize;

use s5eval_core::{MetricConfig, MixtureEvaluation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    JsonLines,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassRow {
    pub label: String,
    pub p_value_db: f64,
    pub n_tp: usize,
    pub n_fn: usize,
    pub n_fp: usize,
    pub n_total: usize,
    /// Chosen (estimate, reference) index pairs within the class.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MixtureRow {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<String>,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_n: Option<usize>,
    pub classes: Vec<ClassRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MixtureRow {
    pub fn ok(id: String, subset: Option<String>, eval: &MixtureEvaluation) -> Self {
        Self {
            kind: "mixture",
            id,
            subset,
            status: "ok",
            metric_db: Some(eval.metric_db),
            total_n: Some(eval.total_n),
            classes: eval
                .components
                .iter()
                .map(|c| ClassRow {
                    label: c.label.to_string(),
                    p_value_db: c.p_value,
                    n_tp: c.counts.n_tp,
                    n_fn: c.counts.n_fn,
                    n_fp: c.counts.n_fp,
                    n_total: c.counts.n_total,
                    pairs: c.assignment.pairs.clone(),
                })
                .collect(),
            error: None,
        }
    }

    pub fn failed(id: String, subset: Option<String>, error: String) -> Self {
        Self {
            kind: "mixture",
            id,
            subset,
            status: "error",
            metric_db: None,
            total_n: None,
            classes: vec![],
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub penalty_fn: f64,
    pub penalty_fp: f64,
    pub sdr_cap_db: f64,
    pub energy_floor: f64,
    pub version: &'static str,
}

impl From<&MetricConfig> for ConfigEcho {
    fn from(cfg: &MetricConfig) -> Self {
        Self {
            penalty_fn: cfg.penalty_fn,
            penalty_fp: cfg.penalty_fp,
            sdr_cap_db: cfg.guards.sdr_cap_db,
            energy_floor: cfg.guards.energy_floor,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub mixtures: usize,
    pub evaluated: usize,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_mean_db: Option<f64>,
    pub per_subset_mean_db: BTreeMap<String, f64>,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub rows: Vec<MixtureRow>,
    pub summary: Summary,
}

impl EvaluationReport {
    /// Assembles a report from per-mixture rows: sorts by id and computes
    /// the unweighted aggregate means over successfully evaluated rows.
    pub fn assemble(mut rows: Vec<MixtureRow>, cfg: &MetricConfig) -> Self {
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let evaluated: Vec<&MixtureRow> = rows.iter().filter(|r| r.status == "ok").collect();
        let overall_mean_db = if evaluated.is_empty() {
            None
        } else {
            Some(evaluated.iter().filter_map(|r| r.metric_db).sum::<f64>() / evaluated.len() as f64)
        };
        let mut per_subset: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for row in &evaluated {
            if let (Some(tag), Some(m)) = (&row.subset, row.metric_db) {
                let slot = per_subset.entry(tag.clone()).or_insert((0.0, 0));
                slot.0 += m;
                slot.1 += 1;
            }
        }
        let summary = Summary {
            kind: "summary",
            mixtures: rows.len(),
            evaluated: evaluated.len(),
            failed: rows.len() - evaluated.len(),
            overall_mean_db,
            per_subset_mean_db: per_subset
                .into_iter()
                .map(|(tag, (sum, n))| (tag, sum / n as f64))
                .collect(),
            config: ConfigEcho::from(cfg),
        };
        Self { rows, summary }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::JsonLines => self.to_json_lines(),
            ReportFormat::Csv => self.to_csv(),
        }
    }

    /// One JSON object per mixture, then one summary object.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&serde_json::to_string(row).expect("row serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    /// Flat per-mixture rows with the per-class detail reduced to summed
    /// counts, followed by `summary:` rows carrying the aggregate means.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(vec![]);
        writer
            .write_record([
                "id",
                "subset",
                "status",
                "metric_db",
                "total_n",
                "n_tp",
                "n_fn",
                "n_fp",
                "error",
            ])
            .expect("csv header");
        for row in &self.rows {
            let (tp, fn_, fp): (usize, usize, usize) =
                row.classes.iter().fold((0, 0, 0), |(tp, fn_, fp), c| {
                    (tp + c.n_tp, fn_ + c.n_fn, fp + c.n_fp)
                });
            writer
                .write_record([
                    row.id.as_str(),
                    row.subset.as_deref().unwrap_or(""),
                    row.status,
                    &row.metric_db.map(ryu_format).unwrap_or_default(),
                    &row.total_n.map(|n| n.to_string()).unwrap_or_default(),
                    &tp.to_string(),
                    &fn_.to_string(),
                    &fp.to_string(),
                    row.error.as_deref().unwrap_or(""),
                ])
                .expect("csv row");
        }
        let empty = String::new();
        let mut summary_row = |id: String, mean: Option<f64>, n: usize| {
            writer
                .write_record([
                    id.as_str(),
                    "",
                    "summary",
                    &mean.map(ryu_format).unwrap_or_default(),
                    &n.to_string(),
                    &empty,
                    &empty,
                    &empty,
                    &empty,
                ])
                .expect("csv summary row");
        };
        summary_row(
            "summary:overall".into(),
            self.summary.overall_mean_db,
            self.summary.evaluated,
        );
        for (tag, mean) in &self.summary.per_subset_mean_db {
            summary_row(format!("summary:subset:{tag}"), Some(*mean), 0);
        }
        String::from_utf8(writer.into_inner().expect("csv buffer")).expect("csv is utf-8")
    }
}

/// Shortest-round-trip float formatting, matching the JSON encoder so the
/// two report formats agree on every value.
fn ryu_format(v: f64) -> String {
    serde_json::to_string(&v).expect("f64 serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: &str, subset: Option<&str>, metric: f64) -> MixtureRow {
        MixtureRow {
            kind: "mixture",
            id: id.into(),
            subset: subset.map(String::from),
            status: "ok",
            metric_db: Some(metric),
            total_n: Some(2),
            classes: vec![],
            error: None,
        }
    }

    #[test]
    fn aggregates_partition_by_subset() {
        let rows = vec![
            row("b", Some("dup"), 4.0),
            row("a", Some("nodup"), 2.0),
            row("c", None, 6.0),
            MixtureRow::failed("d".into(), None, "boom".into()),
        ];
        let report = EvaluationReport::assemble(rows, &MetricConfig::default());
        assert_eq!(
            report
                .rows
                .iter()
                .map(|r| r.id.as_str())
                .collect::<Vec<_>>(),
            vec!["a", "b", "c", "d"]
        );
        assert_eq!(report.summary.mixtures, 4);
        assert_eq!(report.summary.evaluated, 3);
        assert_eq!(report.summary.failed, 1);
        assert_eq!(report.summary.overall_mean_db, Some(4.0));
        assert_eq!(report.summary.per_subset_mean_db["dup"], 4.0);
        assert_eq!(report.summary.per_subset_mean_db["nodup"], 2.0);
    }

    #[test]
    fn json_lines_has_one_object_per_row_plus_summary() {
        let report = EvaluationReport::assemble(
            vec![row("a", None, 1.0), row("b", None, 3.0)],
            &MetricConfig::default(),
        );
        let text = report.to_json_lines();
        let lines: Vec<&str> = text.trim_end().lines().collect();
        assert_eq!(lines.len(), 3);
        let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(first["type"], "mixture");
        assert_eq!(first["id"], "a");
        let last: serde_json::Value = serde_json::from_str(lines[2]).unwrap();
        assert_eq!(last["type"], "summary");
        assert_eq!(last["overall_mean_db"], 2.0);
        assert_eq!(last["config"]["sdr_cap_db"], 60.0);
    }

    #[test]
    fn csv_quotes_awkward_ids() {
        let report = EvaluationReport::assemble(
            vec![row("weird,\"id\"", None, 1.0)],
            &MetricConfig::default(),
        );
        let text = report.to_csv();
        assert!(text.contains("\"weird,\"\"id\"\"\""));
        assert!(text.contains("summary:overall"));
    }
}
