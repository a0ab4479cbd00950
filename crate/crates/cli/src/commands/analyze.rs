use std::fs::File;
use std::path::Path;

use tlsdiff::analysis::{analyze_dataset, histogram, write_reports, Analysis, BinPolicy};
use tlsdiff::csvio::fmt_sig9;
use tlsdiff::spectra::{RegimeValidity, T1Dataset};
use tlsdiff::trajectory::write_trajectories_long;

use super::csv_bytes;
use crate::config::{load, AnalyzeConfig};
use crate::manifest::{Recorder, RunManifest};
use crate::{CliError, CliResult, Common};

pub fn read_dataset(path: &Path) -> CliResult<T1Dataset<f64>> {
    let f = File::open(path).map_err(CliError::io(path))?;
    T1Dataset::read_csv(f, &path.display().to_string()).map_err(|e| match e {
        tlsdiff::Error::InvalidArgument(m) => CliError::Data(format!("{}: {m}", path.display())),
        other => other.into(),
    })
}

/// Runs the pipeline; argument errors from the estimators are data problems.
pub fn analyze(dataset: &T1Dataset<f64>, cfg: &AnalyzeConfig) -> CliResult<Analysis<f64>> {
    analyze_dataset(dataset, &cfg.options()).map_err(|e| match e {
        tlsdiff::Error::InvalidArgument(m) => CliError::Data(m),
        other => other.into(),
    })
}

pub fn run(
    common: &Common,
    dataset: Option<&Path>,
    mask: Option<&[f64]>,
) -> CliResult<RunManifest> {
    let mut cfg: AnalyzeConfig = load(common.config.as_deref(), "analyze")?;
    if let Some(d) = dataset {
        cfg.dataset = Some(d.to_path_buf());
    }
    if let Some(m) = mask {
        cfg.masks = m.to_vec();
    }
    let path = cfg.dataset.clone().ok_or_else(|| {
        CliError::Config("no dataset given (positional argument or `dataset` key)".into())
    })?;
    let data = read_dataset(&path)?;
    let analysis = analyze(&data, &cfg)?;

    let mut rec = Recorder::start(&common.out, "analyze", &cfg, None)?;
    rec.write_with("report.csv", |w| write_reports(&analysis.reports, w))?;
    rec.write("peaks.csv", &peaks_csv(&analysis))?;
    let trajectories: Vec<_> = analysis
        .defects
        .iter()
        .map(|d| d.extraction.trajectory.clone())
        .collect();
    rec.write_with("trajectories.csv", |w| {
        write_trajectories_long(&trajectories, w)
    })?;
    rec.write(
        "jumps.csv",
        &csv_bytes(
            &["defect", "time_hr", "amplitude_MHz"],
            analysis.defects.iter().enumerate().flat_map(|(k, d)| {
                d.jumps.iter().map(move |j| {
                    vec![(k + 1).to_string(), fmt_sig9(j.time), fmt_sig9(j.amplitude)]
                })
            }),
        ),
    )?;
    rec.write("histograms.csv", &histograms_csv(&data, &analysis, &cfg)?)?;

    let summary = serde_json::json!({
        "n_defects": analysis.reports.len(),
        "fit_converged": analysis.fit.converged,
        "diffusivity": analysis.diffusivity,
    });
    println!("{} defect(s) reported", analysis.reports.len());
    if let Some(d) = &analysis.diffusivity {
        println!(
            "ensemble diffusivity D = {:.4} ± {:.4} MHz/sqrt(hr)",
            d.d, d.stderr
        );
    }
    let converged = analysis.fit.converged;
    let manifest = rec.finish(summary)?;
    if !converged {
        return Err(CliError::Convergence(
            "spectrum fit hit its iteration limit; outputs were written but parameters may be unreliable".into(),
        ));
    }
    Ok(manifest)
}

fn peaks_csv(a: &Analysis<f64>) -> Vec<u8> {
    csv_bytes(
        &[
            "defect",
            "center_GHz",
            "center_ci",
            "regime_valid",
            "dynamics",
            "n_jumps",
            "truncated",
            "clipped",
            "collided",
        ],
        a.defects.iter().enumerate().map(|(k, d)| {
            let validity = match d.fitted.regime {
                RegimeValidity::Valid => "valid",
                RegimeValidity::Violated => "violated",
                RegimeValidity::Plausible => "plausible",
            };
            vec![
                (k + 1).to_string(),
                fmt_sig9(d.fitted.peak.center_frequency),
                fmt_sig9(d.fitted.center_ci),
                validity.to_string(),
                format!("{:?}", d.regime).to_lowercase(),
                d.jumps.len().to_string(),
                u8::from(d.extraction.truncated).to_string(),
                u8::from(d.extraction.clipped).to_string(),
                u8::from(d.extraction.collided).to_string(),
            ]
        }),
    )
}

/// Constant-time cut at the first slice and a constant-frequency cut at each
/// defect's starting frequency.
fn histograms_csv(
    data: &T1Dataset<f64>,
    a: &Analysis<f64>,
    cfg: &AnalyzeConfig,
) -> CliResult<Vec<u8>> {
    let policy = cfg
        .histogram_bins
        .map_or(BinPolicy::Sturges, BinPolicy::Fixed);
    let mut cuts = vec![("time".to_string(), 0usize, data.time_slice(0).to_vec())];
    for d in &a.defects {
        let f0 = d.extraction.frequencies[0];
        let j = data
            .frequencies
            .partition_point(|f| *f < f0)
            .min(data.n_frequencies() - 1);
        cuts.push(("frequency".to_string(), j, data.frequency_slice(j)));
    }
    let mut rows = Vec::new();
    for (kind, index, values) in cuts {
        let h = histogram(&values, policy).map_err(|e| CliError::Data(e.to_string()))?;
        let bc = h.bimodality_coefficient.map(fmt_sig9).unwrap_or_default();
        for (b, count) in h.counts.iter().enumerate() {
            rows.push(vec![
                kind.clone(),
                index.to_string(),
                fmt_sig9(h.edges[b]),
                fmt_sig9(h.edges[b + 1]),
                count.to_string(),
                bc.clone(),
                u8::from(h.multimodal).to_string(),
            ]);
        }
    }
    Ok(csv_bytes(
        &[
            "cut",
            "index",
            "bin_lo_us",
            "bin_hi_us",
            "count",
            "bimodality",
            "multimodal",
        ],
        rows,
    ))
}
