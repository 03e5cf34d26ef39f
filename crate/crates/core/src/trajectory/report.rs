use std::io::Write;

use super::{CohortStats, ScoreSeries};

/// Header of the cohort table; rows follow [`super::Group::TABLE_ORDER`].
pub const COHORT_COLUMNS: [&str; 10] = [
    "group",
    "notebook_count",
    "percent_of_sample",
    "avg_versions",
    "avg_first_score",
    "avg_last_score",
    "avg_slope",
    "percent_positive_slope",
    "percent_negative_slope",
    "percent_neutral_slope",
];

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_cohort_csv<W: Write>(stats: &CohortStats, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COHORT_COLUMNS)?;
    for r in &stats.rows {
        w.write_record([
            r.group.label().to_string(),
            r.notebook_count.to_string(),
            r.percent_of_sample.to_string(),
            cell(r.avg_version_count),
            cell(r.avg_first_score),
            cell(r.avg_last_score),
            cell(r.avg_slope),
            cell(r.percent_positive_slope),
            cell(r.percent_negative_slope),
            cell(r.percent_neutral_slope),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cohort_csv(stats: &CohortStats) -> String {
    let mut buf = Vec::new();
    write_cohort_csv(stats, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

/// Plot data: one `(version_index, score)` row per point.
pub fn write_series_csv<W: Write>(series: &ScoreSeries, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["version_index", "commit_id", "timestamp", "score", "raw_score"])?;
    for p in &series.points {
        w.write_record([
            p.version_index.to_string(),
            p.commit_id.clone(),
            p.timestamp.to_string(),
            p.score.to_string(),
            p.raw_score.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{cohort_stats, Group, SlopeSign, TrajectoryFit};

    #[test]
    fn cohort_table_layout() {
        let stats = cohort_stats(&[TrajectoryFit {
            slope: 0.021,
            intercept: 0.4,
            first_score: 0.438,
            last_score: 0.618,
            version_count: 10,
            group: Group::ExploreExplain,
            slope_sign: SlopeSign::Positive,
        }])
        .unwrap();
        let text = cohort_csv(&stats);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], COHORT_COLUMNS.join(","));
        assert_eq!(lines[1], "Explore-Explore,0,0,,,,,,,");
        assert_eq!(lines[2], "Explain-Explain,0,0,,,,,,,");
        assert_eq!(lines[3], "Explore-Explain,1,100,10,0.438,0.618,0.021,100,0,0");
        assert_eq!(lines[4], "Explain-Explore,0,0,,,,,,,");
    }
}
