//! Serialisable summary of the metrics computed for one configuration.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row of metrics; fields left `None` were not requested.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub theta: Option<f64>,
    pub theta_star: Option<f64>,
    pub bisection: Option<f64>,
    pub expected_route_length: Option<f64>,
    pub bandwidth_tax: Option<f64>,
    pub latency_tax: Option<f64>,
    pub coverage: Option<f64>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `reports` as CSV with a header row; missing values are empty.
    pub fn write_csv<W: Write>(writer: W, reports: &[MetricsReport]) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        w.write_record([
            "theta",
            "theta_star",
            "bisection",
            "expected_route_length",
            "bandwidth_tax",
            "latency_tax",
            "coverage",
        ])?;
        for r in reports {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_has_every_field() {
        let r = MetricsReport {
            theta: Some(0.5),
            bisection: Some(4.0),
            ..Default::default()
        };
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for k in [
            "theta",
            "theta_star",
            "bisection",
            "expected_route_length",
            "bandwidth_tax",
            "latency_tax",
            "coverage",
        ] {
            assert!(keys.contains(&k), "{k}");
        }
        assert!(v["theta_star"].is_null());
        assert_eq!(serde_json::from_value::<MetricsReport>(v).unwrap(), r);
    }

    #[test]
    fn csv_rows() {
        let mut out = Vec::new();
        let r = MetricsReport {
            theta: Some(1.0),
            latency_tax: Some(0.2),
            ..Default::default()
        };
        MetricsReport::write_csv(&mut out, &[r.clone(), r]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("theta,theta_star,"));
        assert_eq!(lines[1], "1.0,,,,,0.2,");
    }
}
