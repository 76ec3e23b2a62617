//! Reference predictors the GAN is compared against: the identity
//! pass-through and a many-to-one neighborhood polynomial regression.
//!
//! The polynomial model expands the w x w neighborhood of each pixel
//! (reflect padded, unit rescaled) into all monomials of total degree <= d
//! and fits coefficients by linear least squares over subsampled pixels.
//! With w = 1 this reduces to a one-to-one per-pixel polynomial.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::imaging::{Dataset, IntensityImage};
use crate::rng::{stream_rng, tags};
use crate::{Error, Result};

/// A fitted neighborhood polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    pub window: usize,
    pub degree: usize,
    /// Exponent vectors over the w^2 neighborhood variables, graded-lex
    /// ordered (total degree ascending, then leading variable first); the
    /// first entry is the constant term.
    pub term_exponents: Vec<Vec<u8>>,
    pub coefficients: Vec<f64>,
    pub intensity_ceiling: f64,
}

impl PolyModel {
    pub fn n_terms(&self) -> usize {
        self.term_exponents.len()
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("model serializes");
        fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let model: PolyModel =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if model.coefficients.len() != model.term_exponents.len() {
            return Err(Error::CoefficientCountMismatch {
                got: model.coefficients.len(),
                expected: model.term_exponents.len(),
            });
        }
        if model.term_exponents != monomial_exponents(model.window, model.degree) {
            return Err(Error::InvalidConfig(
                "term exponents are not in graded-lexicographic order for (window, degree)"
                    .to_string(),
            ));
        }
        Ok(model)
    }
}

/// Number of monomials of total degree <= `degree` over `window^2` variables:
/// C(w^2 + d, d).
pub fn feature_count(window: usize, degree: usize) -> usize {
    let m = window * window;
    // C(m + d, d) via u128 accumulation
    let mut num: u128 = 1;
    for i in 1..=degree as u128 {
        num = num * (m as u128 + i) / i;
    }
    num as usize
}

/// All exponent vectors of total degree <= `degree` over `window^2`
/// variables, graded-lex ordered with the constant term first.
pub fn monomial_exponents(window: usize, degree: usize) -> Vec<Vec<u8>> {
    let m = window * window;
    let mut out = Vec::with_capacity(feature_count(window, degree));
    let mut prefix = Vec::with_capacity(m);
    for total in 0..=degree {
        gen_exponents(m, total, &mut prefix, &mut out);
    }
    out
}

fn gen_exponents(vars_left: usize, deg_left: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if vars_left == 1 {
        prefix.push(deg_left as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=deg_left).rev() {
        prefix.push(e as u8);
        gen_exponents(vars_left - 1, deg_left - e, prefix, out);
        prefix.pop();
    }
}

/// Mirror index without edge repetition (period `2n - 2`).
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

/// The w x w neighborhood of `(x, y)`, reflect padded and rescaled to unit
/// range, in row-major window order.
fn neighborhood(image: &IntensityImage, x: usize, y: usize, window: usize) -> Vec<f64> {
    let r = (window / 2) as isize;
    let c = image.intensity_ceiling();
    let mut out = Vec::with_capacity(window * window);
    for dy in -r..=r {
        let yy = reflect_index(y as isize + dy, image.height());
        for dx in -r..=r {
            let xx = reflect_index(x as isize + dx, image.width());
            out.push(image.get(xx, yy) / c);
        }
    }
    out
}

fn monomials(neigh: &[f64], exponents: &[Vec<u8>]) -> Vec<f64> {
    exponents
        .iter()
        .map(|term| {
            let mut v = 1.0;
            for (j, &e) in term.iter().enumerate() {
                if e > 0 {
                    v *= neigh[j].powi(i32::from(e));
                }
            }
            v
        })
        .collect()
}

/// Monomial feature vector for pixel `(x, y)`; the first entry is the
/// constant 1.
pub fn extract_features(
    image: &IntensityImage,
    x: usize,
    y: usize,
    window: usize,
    degree: usize,
) -> Vec<f64> {
    let exponents = monomial_exponents(window, degree);
    monomials(&neighborhood(image, x, y, window), &exponents)
}

/// Deterministic pixel positions sampled for one training image.
pub fn sample_positions(
    seed: u64,
    image_index: usize,
    count: usize,
    width: usize,
    height: usize,
) -> Vec<(usize, usize)> {
    let mut rng = stream_rng(seed, image_index as u64, tags::POLY_SAMPLING);
    (0..count)
        .map(|_| (rng.random_range(0..width), rng.random_range(0..height)))
        .collect()
}

fn check_window_degree(window: usize, degree: usize) -> Result<()> {
    if window % 2 == 0 || window == 0 {
        return Err(Error::WindowNotOdd(window));
    }
    if degree == 0 {
        return Err(Error::InvalidDegree(degree));
    }
    Ok(())
}

/// Fits the neighborhood polynomial by minimal-norm linear least squares.
///
/// Draws `samples_per_image` pixel positions per training image
/// (deterministic in `seed`), builds the monomial design matrix against the
/// unit-rescaled multislice intensities, and solves with a rank-revealing
/// SVD. Rank-deficient systems (e.g. constant images) get the minimal-norm
/// solution rather than an error.
pub fn fit_poly(
    train: &Dataset,
    window: usize,
    degree: usize,
    samples_per_image: usize,
    seed: u64,
) -> Result<PolyModel> {
    check_window_degree(window, degree)?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let exponents = monomial_exponents(window, degree);
    let n_terms = exponents.len();
    if samples_per_image < n_terms {
        return Err(Error::UnderdeterminedFit {
            samples_per_image,
            required: n_terms,
        });
    }

    let rows = train.len() * samples_per_image;
    let mut design = Vec::with_capacity(rows * n_terms);
    let mut target = Vec::with_capacity(rows);
    for (idx, pair) in train.pairs().iter().enumerate() {
        let ceiling = pair.multi.intensity_ceiling();
        for (x, y) in sample_positions(
            seed,
            idx,
            samples_per_image,
            pair.conv.width(),
            pair.conv.height(),
        ) {
            let neigh = neighborhood(&pair.conv, x, y, window);
            design.extend(monomials(&neigh, &exponents));
            target.push(pair.multi.get(x, y) / ceiling);
        }
    }

    let a = DMatrix::from_row_slice(rows, n_terms, &design);
    let b = DVector::from_vec(target);
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = max_sv * rows.max(n_terms) as f64 * f64::EPSILON;
    let beta = svd
        .solve(&b, eps)
        .map_err(|e| Error::LeastSquaresFailed(e.to_string()))?;

    Ok(PolyModel {
        window,
        degree,
        term_exponents: exponents,
        coefficients: beta.iter().cloned().collect(),
        intensity_ceiling: train.pairs()[0].multi.intensity_ceiling(),
    })
}

/// Evaluates a polynomial model over every pixel of `conv`.
///
/// Values are clamped to unit range before rescaling by the input's
/// intensity ceiling.
pub fn predict_poly(model: &PolyModel, conv: &IntensityImage) -> IntensityImage {
    let ceiling = conv.intensity_ceiling();
    let mut values = Vec::with_capacity(conv.values().len());
    for y in 0..conv.height() {
        for x in 0..conv.width() {
            let neigh = neighborhood(conv, x, y, model.window);
            let feats = monomials(&neigh, &model.term_exponents);
            let v: f64 = feats
                .iter()
                .zip(&model.coefficients)
                .map(|(f, c)| f * c)
                .sum();
            values.push(v.clamp(0.0, 1.0) * ceiling);
        }
    }
    IntensityImage::new(conv.width(), conv.height(), ceiling, values)
        .expect("clamped values are in range")
}

/// The untranslated convolution image: the floor any translator must beat.
pub fn identity_baseline(conv: &IntensityImage) -> IntensityImage {
    conv.clone()
}
