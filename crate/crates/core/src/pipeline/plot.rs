use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::run::ResultBundle;
use crate::error::{Error, Result};
use crate::measures::Measure;

/// Samples per fitted line.
pub const FIT_LINE_POINTS: usize = 100;

fn file_token(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '-' })
        .collect()
}

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 || lo == hi {
        return vec![lo; count.min(1)];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| match i {
            0 => lo,
            _ if i == count - 1 => hi,
            _ => 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64),
        })
        .collect()
}

/// Write scatter and fitted-line CSVs for every group and measure.
///
/// `scatter_{group}_{measure}.csv` holds `series,id,n,y` for the empirical
/// values and each model's expected values. `fitline_{group}_{measure}.csv`
/// holds `series,n,y` sampled at [`FIT_LINE_POINTS`] log-spaced n between
/// the smallest and largest n in the group, one block per fitted series.
/// Returns the files written.
pub fn emit_plot_data(bundle: &ResultBundle, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).map_err(Error::with_path(out))?;
    let mut written = Vec::new();
    for (group, nets) in bundle.groups() {
        let ns = nets.iter().map(|n| n.record.n as f64).filter(|&n| n > 0.0);
        let lo = ns.clone().fold(f64::INFINITY, f64::min);
        let hi = ns.fold(f64::NEG_INFINITY, f64::max);
        let grid = if lo.is_finite() { log_spaced(lo, hi, FIT_LINE_POINTS) } else { Vec::new() };
        for measure in Measure::ALL {
            let stem = format!("{}_{}", file_token(&group), measure);

            let path = out.join(format!("scatter_{stem}.csv"));
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path).map_err(Error::with_path(&path))?));
            w.write_record(["series", "id", "n", "y"])?;
            for series in bundle.series() {
                if series != "empirical" && measure == Measure::MeanDegree {
                    continue;
                }
                let points = ResultBundle::points(&nets, &series, measure);
                for (net, (n, y)) in nets.iter().zip(points) {
                    if let Some(y) = y {
                        w.write_record([series.clone(), net.id.clone(), n.to_string(), y.to_string()])?;
                    }
                }
            }
            w.flush()?;
            written.push(path);

            let path = out.join(format!("fitline_{stem}.csv"));
            let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&path).map_err(Error::with_path(&path))?));
            w.write_record(["series", "n", "y"])?;
            for series in bundle.series() {
                let row = bundle
                    .fits
                    .iter()
                    .find(|f| f.group == group && f.series == series && f.measure == measure);
                let Some(fit) = row.and_then(|r| r.fit.as_ref()) else {
                    continue;
                };
                for &n in &grid {
                    let y = fit.form.eval(fit.a, fit.b, n);
                    w.write_record([series.clone(), n.to_string(), y.to_string()])?;
                }
            }
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}
