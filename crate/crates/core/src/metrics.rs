//! Image-pair fidelity metrics: fractional RMSE (reported as a percentage)
//! and SSIM, plus aggregation into per-dataset reports.
//!
//! Fractional RMSE is the RMSE of predicted vs actual intensities divided by
//! the population standard deviation of the *actual* image, times 100. The
//! denominator uses the ground-truth image because the error is measured
//! relative to the variation in the sample. Aggregation over a test set
//! averages per-image values; pixels are never pooled across images.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::imaging::{image_stats, Dataset, IntensityImage};
use crate::{Error, Result};

/// Metrics for one prediction/ground-truth pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub pair_id: String,
    pub frac_rmse_pct: f64,
    pub ssim: f64,
}

/// Per-pair metrics plus their arithmetic means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_pair: Vec<PairMetrics>,
    pub mean_frac_rmse_pct: f64,
    pub mean_ssim: f64,
    /// Aggregation convention: fractional RMSE is computed per image with a
    /// per-image sigma, then averaged.
    pub aggregation: String,
}

impl MetricsReport {
    pub fn from_pairs(per_pair: Vec<PairMetrics>) -> Self {
        let n = per_pair.len().max(1) as f64;
        let mean_frac_rmse_pct = per_pair.iter().map(|p| p.frac_rmse_pct).sum::<f64>() / n;
        let mean_ssim = per_pair.iter().map(|p| p.ssim).sum::<f64>() / n;
        Self {
            per_pair,
            mean_frac_rmse_pct,
            mean_ssim,
            aggregation: "per-image".to_string(),
        }
    }

    /// CSV with header `pair_id,frac_rmse_pct,ssim` and a trailing mean row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("pair_id,frac_rmse_pct,ssim\n");
        for p in &self.per_pair {
            out.push_str(&format!("{},{},{}\n", p.pair_id, p.frac_rmse_pct, p.ssim));
        }
        out.push_str(&format!(
            "mean,{},{}\n",
            self.mean_frac_rmse_pct, self.mean_ssim
        ));
        let mut file = fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        file.write_all(out.as_bytes()).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    /// JSON mirror of the full report.
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Fractional RMSE of `predicted` against `actual`, as a percentage.
///
/// `100 * sqrt(sum((p_i - a_i)^2) / N) / sigma(actual)` with the population
/// standard deviation. A constant `actual` image has no defined value and
/// raises [`Error::ConstantActualImage`] instead of returning infinity.
pub fn fractional_rmse_pct(predicted: &IntensityImage, actual: &IntensityImage) -> Result<f64> {
    if !predicted.same_dimensions(actual) {
        return Err(predicted.dimension_mismatch(actual));
    }
    let (_, sigma) = image_stats(actual);
    if sigma == 0.0 {
        return Err(Error::ConstantActualImage);
    }
    let n = actual.values().len() as f64;
    let sum_sq: f64 = predicted
        .values()
        .iter()
        .zip(actual.values())
        .map(|(&p, &a)| {
            let d = p - a;
            d * d
        })
        .sum();
    Ok(100.0 * (sum_sq / n).sqrt() / sigma)
}

/// SSIM parameters; defaults follow Wang et al.: 11x11 Gaussian window with
/// sigma 1.5, k1 = 0.01, k2 = 0.03.
#[derive(Debug, Clone)]
pub struct SsimParams {
    pub window: usize,
    pub gaussian_sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub data_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            gaussian_sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: crate::imaging::DEFAULT_INTENSITY_CEILING,
        }
    }
}

/// SSIM with default parameters; the data range is the image's intensity ceiling.
pub fn ssim(a: &IntensityImage, b: &IntensityImage) -> Result<f64> {
    let params = SsimParams {
        data_range: a.intensity_ceiling(),
        ..SsimParams::default()
    };
    ssim_with_params(a, b, &params)
}

/// Mean SSIM over all fully interior window positions.
///
/// Local statistics are Gaussian weighted; windows that would extend past
/// the border are skipped rather than padded.
pub fn ssim_with_params(a: &IntensityImage, b: &IntensityImage, params: &SsimParams) -> Result<f64> {
    if !a.same_dimensions(b) {
        return Err(a.dimension_mismatch(b));
    }
    let w = params.window;
    if w % 2 == 0 || w == 0 {
        return Err(Error::WindowNotOdd(w));
    }
    if w > a.width() || w > a.height() {
        return Err(Error::SsimWindowTooLarge {
            window: w,
            width: a.width(),
            height: a.height(),
        });
    }
    let kernel = gaussian_kernel(w, params.gaussian_sigma);
    let c1 = (params.k1 * params.data_range).powi(2);
    let c2 = (params.k2 * params.data_range).powi(2);

    let width = a.width();
    let av = a.values();
    let bv = b.values();
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=(a.height() - w) {
        for x0 in 0..=(width - w) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            let mut ab = 0.0;
            let mut ki = 0;
            for dy in 0..w {
                let row = (y0 + dy) * width + x0;
                for dx in 0..w {
                    let wgt = kernel[ki];
                    ki += 1;
                    let va = av[row + dx];
                    let vb = bv[row + dx];
                    mu_a += wgt * va;
                    mu_b += wgt * vb;
                    aa += wgt * va * va;
                    bb += wgt * vb * vb;
                    ab += wgt * va * vb;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let r = (window / 2) as isize;
    let mut kernel = Vec::with_capacity(window * window);
    let mut sum = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            let g = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            kernel.push(g);
            sum += g;
        }
    }
    for k in &mut kernel {
        *k /= sum;
    }
    kernel
}

/// Scores predictions against the `multi` image of the matching dataset pair.
pub fn evaluate_pairs(
    predictions: &[(String, IntensityImage)],
    actuals: &Dataset,
) -> Result<MetricsReport> {
    if predictions.is_empty() {
        return Err(Error::EmptyPredictions);
    }
    let mut per_pair = Vec::with_capacity(predictions.len());
    for (id, predicted) in predictions {
        let pair = actuals
            .get(id)
            .ok_or_else(|| Error::UnknownPairId(id.clone()))?;
        per_pair.push(PairMetrics {
            pair_id: id.clone(),
            frac_rmse_pct: fractional_rmse_pct(predicted, &pair.multi)?,
            ssim: ssim(predicted, &pair.multi)?,
        });
    }
    Ok(MetricsReport::from_pairs(per_pair))
}
