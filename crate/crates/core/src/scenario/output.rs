//! CSV emission.

use std::fs::{self, File};
use std::path::Path;

use super::{MisalignmentRow, SlotRecord};
use crate::error::{Error, Result};

/// A type that maps onto one CSV row.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Formats `x` with six significant digits, `%g`-style: fixed notation for
/// decimal exponents in [-4, 6), scientific otherwise, trailing zeros trimmed.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

impl CsvRow for SlotRecord {
    const HEADER: &'static [&'static str] = &[
        "algorithm",
        "k",
        "t_s",
        "true_x_m",
        "true_y_m",
        "est_x_m",
        "est_y_m",
        "true_tx_idx",
        "true_rx_idx",
        "chosen_tx_idx",
        "chosen_rx_idx",
        "rss_db",
        "num_meas",
        "elapsed_s",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.algorithm.name().to_string(),
            self.k.to_string(),
            format_sig6(self.t_s),
            format_sig6(self.true_pos.x_m),
            format_sig6(self.true_pos.y_m),
            format_sig6(self.est_pos.x_m),
            format_sig6(self.est_pos.y_m),
            self.true_pair.tx_index.to_string(),
            self.true_pair.rx_index.to_string(),
            self.chosen.tx_index.to_string(),
            self.chosen.rx_index.to_string(),
            format_sig6(self.rss_db),
            self.num_measurements.to_string(),
            format_sig6(self.elapsed_s),
        ]
    }
}

impl CsvRow for MisalignmentRow {
    const HEADER: &'static [&'static str] = &["distance_m", "degree", "num_alternatives", "mean_rss_db"];

    fn fields(&self) -> Vec<String> {
        vec![
            format_sig6(self.distance_m),
            self.degree.to_string(),
            self.num_alternatives.to_string(),
            self.mean_rss_db.map(format_sig6).unwrap_or_default(),
        ]
    }
}

/// Writes `rows` with a header line. Parent directories are created.
pub fn emit_csv<T: CsvRow>(rows: &[T], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(T::HEADER).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.fields()).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(3.7), "3.7");
        assert_eq!(format_sig6(0.28), "0.28");
        assert_eq!(format_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig6(-22.619_864_948), "-22.6199");
        assert_eq!(format_sig6(123_456.7), "123457");
        assert_eq!(format_sig6(1_234_567.0), "1.23457e6");
        assert_eq!(format_sig6(9.999_999_9), "10");
        assert_eq!(format_sig6(5.31e-8), "5.31e-8");
        assert_eq!(format_sig6(0.000_012_345_67), "1.23457e-5");
        assert_eq!(format_sig6(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn empty_table_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/tracking.csv");
        emit_csv::<SlotRecord>(&[], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "algorithm,k,t_s,true_x_m,true_y_m,est_x_m,est_y_m,true_tx_idx,true_rx_idx,\
             chosen_tx_idx,chosen_rx_idx,rss_db,num_meas,elapsed_s\n"
        );
    }

    #[test]
    fn io_error_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = emit_csv::<MisalignmentRow>(&[], &blocker.join("out.csv")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
