use std::f64::consts::TAU;
use std::io::Write;

use super::{ButterflyDataset, DeviationReport, Rows, SweepError, Variant};

pub const EXACT_HEADER: &str = "flux_over_2pi,eigenvalue_over_J";
pub const SPECTRO_HEADER: &str = "flux_over_2pi,frequency_mhz,power";
pub const PEAKS_HEADER: &str = "flux_over_2pi,peak_mhz,height";
pub const DEVIATION_HEADER: &str = "flux_over_2pi,peaks,mean_abs_dev_mhz,max_abs_dev_mhz,unmatched";

/// Shortest round-tripping decimal form, independent of locale; scientific
/// notation outside `[1e-4, 1e15)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn wrong(expected: Variant, ds: &ButterflyDataset) -> SweepError {
    SweepError::WrongVariant {
        expected,
        found: ds.variant(),
    }
}

pub fn write_exact_csv(ds: &ButterflyDataset, out: &mut impl Write) -> Result<(), SweepError> {
    let Rows::Exact(rows) = &ds.rows else {
        return Err(wrong(Variant::Exact, ds));
    };
    writeln!(out, "{EXACT_HEADER}")?;
    for r in rows {
        let f = format_number(r.flux / TAU);
        for e in &r.eigenvalues {
            writeln!(out, "{f},{}", format_number(*e))?;
        }
    }
    Ok(())
}

/// Heatmap rows restricted to `|frequency| ≤ band_hz`.
pub fn write_spectro_csv(ds: &ButterflyDataset, band_hz: f64, out: &mut impl Write) -> Result<(), SweepError> {
    let Rows::Spectroscopic { frequencies, rows } = &ds.rows else {
        return Err(wrong(Variant::Spectroscopic, ds));
    };
    writeln!(out, "{SPECTRO_HEADER}")?;
    let band: Vec<(usize, String)> = frequencies
        .iter()
        .enumerate()
        .filter(|(_, f)| f.abs() <= band_hz)
        .map(|(i, f)| (i, format_number(f / 1e6)))
        .collect();
    for r in rows.iter().filter(|r| !r.power.is_empty()) {
        let flux = format_number(r.flux / TAU);
        for (i, f) in &band {
            writeln!(out, "{flux},{f},{}", format_number(r.power[*i]))?;
        }
    }
    Ok(())
}

pub fn write_peaks_csv(ds: &ButterflyDataset, out: &mut impl Write) -> Result<(), SweepError> {
    let Rows::Spectroscopic { rows, .. } = &ds.rows else {
        return Err(wrong(Variant::Spectroscopic, ds));
    };
    writeln!(out, "{PEAKS_HEADER}")?;
    for r in rows {
        let flux = format_number(r.flux / TAU);
        for p in &r.peaks.peaks {
            writeln!(out, "{flux},{},{}", format_number(p.frequency / 1e6), format_number(p.height))?;
        }
    }
    Ok(())
}

pub fn write_deviation_csv(report: &DeviationReport, out: &mut impl Write) -> Result<(), SweepError> {
    writeln!(out, "{DEVIATION_HEADER}")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_number(r.flux / TAU),
            r.matches.len(),
            format_number(r.mean_abs / 1e6),
            format_number(r.max_abs / 1e6),
            r.unmatched
        )?;
    }
    Ok(())
}
