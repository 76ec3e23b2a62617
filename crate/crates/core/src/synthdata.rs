//! Deterministic synthetic paired-image generator.
//!
//! Stands in for a nanoparticle simulation dataset with known ground truth:
//! a latent field of Gaussian blobs is rendered twice, once with a wide
//! probe (the low-fidelity "convolution" image) and once with a narrow probe
//! plus a saturating nonlinearity and noise (the high-fidelity "multislice"
//! image). Every pair is a pure function of `(seed, index)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baselines::{extract_features, feature_count};
use crate::imaging::{Dataset, ImagePair, IntensityImage, DEFAULT_INTENSITY_CEILING};
use crate::rng::{stream_rng, tags};
use crate::{Error, Result};

/// Generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub seed: u64,
    pub image_size: usize,
    pub n_blobs: usize,
    pub blob_sigma: f64,
    /// Probe width of the low-fidelity rendering; must exceed
    /// `probe_sigma_multi` so the convolution image is the blurrier one.
    pub probe_sigma_conv: f64,
    pub probe_sigma_multi: f64,
    /// Strength of the saturating nonlinearity `x / (1 + beta x)` applied to
    /// the unit-rescaled multislice signal.
    pub saturation_beta: f64,
    /// Pixel noise standard deviation in unit scale.
    pub noise_sigma: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            image_size: 64,
            n_blobs: 12,
            blob_sigma: 1.5,
            probe_sigma_conv: 3.0,
            probe_sigma_multi: 1.2,
            saturation_beta: 2.0,
            noise_sigma: 0.01,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.image_size.is_power_of_two() || self.image_size < 16 {
            return Err(Error::InvalidSynthConfig(format!(
                "image_size {} must be a power of two >= 16",
                self.image_size
            )));
        }
        if !(self.probe_sigma_multi > 0.0) || !(self.probe_sigma_conv > self.probe_sigma_multi) {
            return Err(Error::InvalidSynthConfig(format!(
                "need probe_sigma_conv > probe_sigma_multi > 0, got {} and {}",
                self.probe_sigma_conv, self.probe_sigma_multi
            )));
        }
        if !(self.blob_sigma > 0.0) {
            return Err(Error::InvalidSynthConfig(format!(
                "blob_sigma {} must be positive",
                self.blob_sigma
            )));
        }
        if self.saturation_beta < 0.0 {
            return Err(Error::InvalidSynthConfig(format!(
                "saturation_beta {} must be non-negative",
                self.saturation_beta
            )));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::InvalidSynthConfig(format!(
                "noise_sigma {} must be non-negative",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

struct Blob {
    cx: f64,
    cy: f64,
    amplitude: f64,
}

fn draw_blobs(config: &SynthConfig, index: u64) -> (Vec<Blob>, rand_chacha::ChaCha12Rng) {
    let mut rng = stream_rng(config.seed, index, tags::SYNTH);
    let size = config.image_size as f64;
    let blobs = (0..config.n_blobs)
        .map(|_| Blob {
            cx: rng.random_range(0.0..size),
            cy: rng.random_range(0.0..size),
            amplitude: rng.random_range(0.5..1.0),
        })
        .collect();
    (blobs, rng)
}

/// The latent blob field convolved with a Gaussian probe, evaluated in
/// closed form: a Gaussian bump of width `s_b` convolved with a normalized
/// Gaussian kernel of width `s_p` is a bump of width `sqrt(s_b^2 + s_p^2)`
/// and relative amplitude `s_b^2 / (s_b^2 + s_p^2)`.
fn blurred_field(blobs: &[Blob], size: usize, blob_sigma: f64, probe_sigma: f64) -> Vec<f64> {
    let s2 = blob_sigma * blob_sigma + probe_sigma * probe_sigma;
    let gain = blob_sigma * blob_sigma / s2;
    let inv = 1.0 / (2.0 * s2);
    let mut field = vec![0.0; size * size];
    for blob in blobs {
        let a = blob.amplitude * gain;
        for y in 0..size {
            let dy = y as f64 - blob.cy;
            let row = y * size;
            for x in 0..size {
                let dx = x as f64 - blob.cx;
                field[row + x] += a * (-(dx * dx + dy * dy) * inv).exp();
            }
        }
    }
    field
}

/// Rescales a non-negative field so its maximum is 1 (all zero stays zero).
fn rescale_unit(field: &mut [f64]) {
    let max = field.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for v in field.iter_mut() {
            *v /= max;
        }
    }
}

fn conv_field(config: &SynthConfig, blobs: &[Blob]) -> Vec<f64> {
    let mut field = blurred_field(
        blobs,
        config.image_size,
        config.blob_sigma,
        config.probe_sigma_conv,
    );
    rescale_unit(&mut field);
    field
}

fn to_image(unit_field: Vec<f64>, size: usize) -> IntensityImage {
    let values = unit_field
        .into_iter()
        .map(|v| v.clamp(0.0, 1.0) * DEFAULT_INTENSITY_CEILING)
        .collect();
    IntensityImage::new(size, size, DEFAULT_INTENSITY_CEILING, values)
        .expect("unit field maps into range")
}

/// Generates the pair at `index`; deterministic in `(config.seed, index)`.
///
/// Panics when the config is invalid (see [`SynthConfig::validate`]).
pub fn generate_pair(config: &SynthConfig, index: usize) -> ImagePair {
    config.validate().expect("invalid SynthConfig");
    let (blobs, mut rng) = draw_blobs(config, index as u64);
    let size = config.image_size;

    let conv = to_image(conv_field(config, &blobs), size);

    let mut multi = blurred_field(&blobs, size, config.blob_sigma, config.probe_sigma_multi);
    rescale_unit(&mut multi);
    let beta = config.saturation_beta;
    for v in multi.iter_mut() {
        *v /= 1.0 + beta * *v;
    }
    if config.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, config.noise_sigma).expect("validated noise sigma");
        for v in multi.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let multi = to_image(multi, size);

    ImagePair::new(format!("synth-{index}"), conv, multi).expect("generated images are aligned")
}

/// Generates pairs `0..n_pairs` with ids `synth-<index>`.
pub fn generate_dataset(config: &SynthConfig, n_pairs: usize) -> Dataset {
    assert!(n_pairs >= 1, "n_pairs must be at least 1");
    let pairs = (0..n_pairs).map(|i| generate_pair(config, i)).collect();
    Dataset::new(pairs, "synthetic").expect("generated pairs are uniform")
}

/// Generates a pair whose multislice image is an exact polynomial function
/// of the convolution image's neighborhoods; the known-truth mapping a
/// perfect fitter must recover.
pub fn generate_poly_pair(
    config: &SynthConfig,
    index: usize,
    window: usize,
    degree: usize,
    coefficients: &[f64],
) -> Result<ImagePair> {
    config.validate().expect("invalid SynthConfig");
    if window % 2 == 0 || window == 0 {
        return Err(Error::WindowNotOdd(window));
    }
    if degree == 0 {
        return Err(Error::InvalidDegree(degree));
    }
    let expected = feature_count(window, degree);
    if coefficients.len() != expected {
        return Err(Error::CoefficientCountMismatch {
            got: coefficients.len(),
            expected,
        });
    }
    let (blobs, _) = draw_blobs(config, index as u64);
    let size = config.image_size;
    let conv = to_image(conv_field(config, &blobs), size);

    let mut multi = Vec::with_capacity(size * size);
    for y in 0..size {
        for x in 0..size {
            let feats = extract_features(&conv, x, y, window, degree);
            let v: f64 = feats.iter().zip(coefficients).map(|(f, c)| f * c).sum();
            multi.push(v);
        }
    }
    let multi = to_image(multi, size);
    ImagePair::new(format!("poly-{index}"), conv, multi)
}

/// Dataset of [`generate_poly_pair`] pairs indexed `0..n_pairs`.
pub fn generate_poly_dataset(
    config: &SynthConfig,
    n_pairs: usize,
    window: usize,
    degree: usize,
    coefficients: &[f64],
) -> Result<Dataset> {
    let pairs = (0..n_pairs)
        .map(|i| generate_poly_pair(config, i, window, degree, coefficients))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(pairs, "synthetic")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::monomial_exponents;
    use crate::metrics::fractional_rmse_pct;

    #[test]
    fn zero_blobs_give_zero_images() {
        let config = SynthConfig {
            n_blobs: 0,
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let pair = generate_pair(&config, 0);
        assert!(pair.conv.values().iter().all(|&v| v == 0.0));
        assert!(pair.multi.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig::default();
        let a = generate_pair(&config, 3);
        let b = generate_pair(&config, 3);
        assert_eq!(a, b);
        let ds1 = generate_dataset(&config, 4);
        let ds2 = generate_dataset(&config, 4);
        assert_eq!(ds1, ds2);
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_dataset(&SynthConfig::default(), 2);
        let b = generate_dataset(
            &SynthConfig {
                seed: 1,
                ..SynthConfig::default()
            },
            2,
        );
        assert_ne!(a, b);
    }

    #[test]
    fn ids_are_unique_and_indexed() {
        let ds = generate_dataset(&SynthConfig::default(), 5);
        let ids: Vec<&str> = ds.pairs().iter().map(|p| p.id.as_str()).collect();
        assert_eq!(ids, ["synth-0", "synth-1", "synth-2", "synth-3", "synth-4"]);
    }

    #[test]
    fn values_stay_in_range() {
        let ds = generate_dataset(&SynthConfig::default(), 4);
        for pair in ds.pairs() {
            for &v in pair.conv.values().iter().chain(pair.multi.values()) {
                assert!((0.0..=DEFAULT_INTENSITY_CEILING).contains(&v));
            }
        }
    }

    #[test]
    fn conv_differs_from_multi_without_noise_or_saturation() {
        let config = SynthConfig {
            saturation_beta: 0.0,
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let pair = generate_pair(&config, 0);
        let score = fractional_rmse_pct(&pair.conv, &pair.multi).unwrap();
        assert!(score.is_finite());
        assert!(score > 0.0);
    }

    #[test]
    fn conv_is_flatter_than_multi() {
        // wider probe -> lower variance relative to the shared unit rescale
        let config = SynthConfig {
            saturation_beta: 0.0,
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        for index in 0..4 {
            let pair = generate_pair(&config, index);
            let var = |img: &IntensityImage| {
                let (_, std) = crate::imaging::image_stats(img);
                std * std
            };
            assert!(var(&pair.conv) < var(&pair.multi), "index {index}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        assert!(SynthConfig {
            image_size: 48,
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            image_size: 8,
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            probe_sigma_conv: 1.0,
            probe_sigma_multi: 2.0,
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
        assert!(SynthConfig {
            noise_sigma: -0.5,
            ..SynthConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn poly_pair_identity_coefficients() {
        let exps = monomial_exponents(3, 1);
        let mut coeffs = vec![0.0; exps.len()];
        // degree-1 term on the center variable (index 4 of the 3x3 window)
        let center = exps
            .iter()
            .position(|e| e[4] == 1 && e.iter().map(|&x| usize::from(x)).sum::<usize>() == 1)
            .unwrap();
        coeffs[center] = 1.0;
        let config = SynthConfig {
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let pair = generate_poly_pair(&config, 0, 3, 1, &coeffs).unwrap();
        for (a, b) in pair.conv.values().iter().zip(pair.multi.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn poly_pair_zero_coefficients() {
        let coeffs = vec![0.0; feature_count(3, 2)];
        let pair = generate_poly_pair(&SynthConfig::default(), 0, 3, 2, &coeffs).unwrap();
        assert!(pair.multi.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn poly_pair_matches_bruteforce_monomial_sum() {
        let exps = monomial_exponents(3, 2);
        let mut coeffs = vec![0.0; exps.len()];
        coeffs[0] = 0.3;
        coeffs[5] = 0.2;
        coeffs[20] = -0.05;
        coeffs[40] = 0.1;
        let pair = generate_poly_pair(&SynthConfig::default(), 1, 3, 2, &coeffs).unwrap();

        // independent brute-force evaluation at a handful of pixels
        let reflect = |i: isize, n: usize| -> usize {
            let period = 2 * (n as isize - 1);
            let mut j = i.rem_euclid(period);
            if j >= n as isize {
                j = period - j;
            }
            j as usize
        };
        for &(x, y) in &[(0usize, 0usize), (5, 9), (31, 62), (63, 63), (17, 40)] {
            let mut neigh = Vec::new();
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let yy = reflect(y as isize + dy, 64);
                    let xx = reflect(x as isize + dx, 64);
                    neigh.push(pair.conv.get(xx, yy) / 0.01);
                }
            }
            let mut value = 0.0;
            for (term, &c) in exps.iter().zip(&coeffs) {
                let mut m = 1.0;
                for (j, &e) in term.iter().enumerate() {
                    for _ in 0..e {
                        m *= neigh[j];
                    }
                }
                value += c * m;
            }
            let expected = value.clamp(0.0, 1.0) * 0.01;
            assert!(
                (pair.multi.get(x, y) - expected).abs() < 1e-12,
                "pixel ({x},{y})"
            );
        }
    }

    #[test]
    fn poly_pair_rejects_wrong_coefficient_count() {
        assert!(matches!(
            generate_poly_pair(&SynthConfig::default(), 0, 3, 2, &[1.0, 2.0]),
            Err(Error::CoefficientCountMismatch { expected: 55, .. })
        ));
    }
}
