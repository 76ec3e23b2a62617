//! Canonical intensity-image representation, 16-bit PNG I/O, and the
//! normalization between intensity space and model space.
//!
//! Pixel values are electron-intensity fractions in `[0, intensity_ceiling]`.
//! On disk images are grayscale PNGs; we write 16 bits (8 bits would leave
//! only 256 levels across the whole intensity range) and read both 8 and 16.
//! The code mapping is linear full scale: `intensity = code / code_max * ceiling`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::{Error, Result};

/// Default intensity ceiling: pixels hold at most 1% of the total electrons.
pub const DEFAULT_INTENSITY_CEILING: f64 = 0.01;

/// A 2-D grid of electron-intensity fractions, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage {
    width: usize,
    height: usize,
    intensity_ceiling: f64,
    values: Vec<f64>,
}

impl IntensityImage {
    /// Builds an image, validating dimensions and the value range.
    pub fn new(
        width: usize,
        height: usize,
        intensity_ceiling: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if !(intensity_ceiling > 0.0) || !intensity_ceiling.is_finite() {
            return Err(Error::InvalidIntensityCeiling(intensity_ceiling));
        }
        if values.len() != width * height {
            return Err(Error::ValueCountMismatch {
                got: values.len(),
                expected: width * height,
            });
        }
        for &v in &values {
            if !v.is_finite() || v < 0.0 || v > intensity_ceiling {
                return Err(Error::IntensityOutOfRange {
                    value: v,
                    ceiling: intensity_ceiling,
                });
            }
        }
        Ok(Self {
            width,
            height,
            intensity_ceiling,
            values,
        })
    }

    /// All-zero image.
    pub fn zeros(width: usize, height: usize, intensity_ceiling: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            intensity_ceiling,
            vec![0.0; width * height],
        )
    }

    /// Constant-valued image.
    pub fn constant(
        width: usize,
        height: usize,
        intensity_ceiling: f64,
        value: f64,
    ) -> Result<Self> {
        Self::new(width, height, intensity_ceiling, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn intensity_ceiling(&self) -> f64 {
        self.intensity_ceiling
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `(x, y)`; panics when out of bounds.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.width && y < self.height, "pixel out of bounds");
        self.values[y * self.width + x]
    }

    pub fn same_dimensions(&self, other: &IntensityImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn dimension_mismatch(&self, other: &IntensityImage) -> Error {
        Error::DimensionMismatch {
            a_width: self.width,
            a_height: self.height,
            b_width: other.width,
            b_height: other.height,
        }
    }
}

/// Mean and population standard deviation of the pixel intensities.
pub fn image_stats(image: &IntensityImage) -> (f64, f64) {
    let first = image.values[0];
    if image.values.iter().all(|&v| v == first) {
        // constant image: avoid accumulation residue so sigma is exactly 0
        return (first, 0.0);
    }
    let n = image.values.len() as f64;
    let mean = image.values.iter().sum::<f64>() / n;
    let var = image
        .values
        .iter()
        .map(|&v| {
            let d = v - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

/// A grid of model-space values, nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Maps intensities to model space: `v' = 2 (v / ceiling) - 1`.
pub fn normalize_for_model(image: &IntensityImage) -> ModelGrid {
    let c = image.intensity_ceiling;
    ModelGrid {
        width: image.width,
        height: image.height,
        values: image.values.iter().map(|&v| 2.0 * (v / c) - 1.0).collect(),
    }
}

/// Maps model space back to intensities: `v = clamp((v' + 1) / 2, 0, 1) * ceiling`.
///
/// Inputs outside `[-1, 1]` (e.g. raw network output) are clamped.
pub fn denormalize_from_model(grid: &ModelGrid, intensity_ceiling: f64) -> IntensityImage {
    let values = grid
        .values
        .iter()
        .map(|&v| ((v + 1.0) / 2.0).clamp(0.0, 1.0) * intensity_ceiling)
        .collect();
    IntensityImage::new(grid.width, grid.height, intensity_ceiling, values)
        .expect("denormalized values are in range by construction")
}

/// An aligned (convolution image, multislice image) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    pub id: String,
    pub conv: IntensityImage,
    pub multi: IntensityImage,
}

impl ImagePair {
    pub fn new(id: impl Into<String>, conv: IntensityImage, multi: IntensityImage) -> Result<Self> {
        let id = id.into();
        if !conv.same_dimensions(&multi) {
            return Err(Error::IncompatiblePair {
                id,
                reason: format!(
                    "dimensions {}x{} vs {}x{}",
                    conv.width, conv.height, multi.width, multi.height
                ),
            });
        }
        if conv.intensity_ceiling != multi.intensity_ceiling {
            return Err(Error::IncompatiblePair {
                id,
                reason: format!(
                    "intensity ceilings {} vs {}",
                    conv.intensity_ceiling, multi.intensity_ceiling
                ),
            });
        }
        Ok(Self { id, conv, multi })
    }
}

/// An ordered collection of pairs sharing one square image size.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pairs: Vec<ImagePair>,
    image_size: usize,
    provenance: String,
}

impl Dataset {
    pub fn new(pairs: Vec<ImagePair>, provenance: impl Into<String>) -> Result<Self> {
        let first = pairs.first().ok_or(Error::EmptyDataset)?;
        let image_size = first.conv.width();
        let mut seen = std::collections::HashSet::new();
        for pair in &pairs {
            if pair.conv.width() != pair.conv.height() {
                return Err(Error::NonSquareImage {
                    id: pair.id.clone(),
                    width: pair.conv.width(),
                    height: pair.conv.height(),
                });
            }
            if pair.conv.width() != image_size {
                return Err(Error::MixedImageSizes {
                    id: pair.id.clone(),
                    got: pair.conv.width(),
                    expected: image_size,
                });
            }
            if !seen.insert(pair.id.clone()) {
                return Err(Error::DuplicateId(pair.id.clone()));
            }
        }
        Ok(Self {
            pairs,
            image_size,
            provenance: provenance.into(),
        })
    }

    pub fn pairs(&self) -> &[ImagePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn get(&self, id: &str) -> Option<&ImagePair> {
        self.pairs.iter().find(|p| p.id == id)
    }

    /// New dataset holding clones of the pairs at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let pairs = indices.iter().map(|&i| self.pairs[i].clone()).collect();
        Dataset::new(pairs, self.provenance.clone())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    if source.kind() == std::io::ErrorKind::NotFound {
        Error::MissingFile(path.to_path_buf())
    } else {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Loads a grayscale 8- or 16-bit PNG as intensities in `[0, intensity_ceiling]`.
pub fn load_png(path: &Path, intensity_ceiling: f64) -> Result<IntensityImage> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(|e| Error::PngDecode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::MultiChannelPng {
            path: path.to_path_buf(),
            color_type: format!("{:?}", info.color_type),
        });
    }
    let bit_depth = info.bit_depth;
    if !matches!(bit_depth, png::BitDepth::Eight | png::BitDepth::Sixteen) {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            bits: bit_depth as u8,
        });
    }
    let buf_size = reader.output_buffer_size().ok_or_else(|| Error::PngDecode {
        path: path.to_path_buf(),
        message: "image dimensions overflow the output buffer".to_string(),
    })?;
    let mut buf = vec![0u8; buf_size];
    let frame = reader.next_frame(&mut buf).map_err(|e| Error::PngDecode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let width = frame.width as usize;
    let height = frame.height as usize;
    let data = &buf[..frame.buffer_size()];
    let values: Vec<f64> = match bit_depth {
        png::BitDepth::Eight => data
            .iter()
            .map(|&code| f64::from(code) / 255.0 * intensity_ceiling)
            .collect(),
        png::BitDepth::Sixteen => data
            .chunks_exact(2)
            .map(|be| {
                let code = u16::from_be_bytes([be[0], be[1]]);
                f64::from(code) / 65535.0 * intensity_ceiling
            })
            .collect(),
        _ => unreachable!("bit depth checked above"),
    };
    IntensityImage::new(width, height, intensity_ceiling, values)
}

/// Pixel codes an image quantizes to when written as 16-bit PNG.
pub fn quantized_codes(image: &IntensityImage) -> Vec<u16> {
    image
        .values
        .iter()
        .map(|&v| (v / image.intensity_ceiling * 65535.0).round() as u16)
        .collect()
}

/// Writes a 16-bit grayscale PNG; `load_png` then reproduces the codes bit-exactly.
pub fn save_png(image: &IntensityImage, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut encoder = png::Encoder::new(
        BufWriter::new(file),
        image.width as u32,
        image.height as u32,
    );
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Sixteen);
    let mut writer = encoder.write_header().map_err(|e| Error::PngEncode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut bytes = Vec::with_capacity(image.values.len() * 2);
    for code in quantized_codes(image) {
        bytes.extend_from_slice(&code.to_be_bytes());
    }
    writer
        .write_image_data(&bytes)
        .map_err(|e| Error::PngEncode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
}

/// Writes a dataset as `conv/<id>.png` and `multi/<id>.png` under `dir`.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    let conv_dir = dir.join("conv");
    let multi_dir = dir.join("multi");
    fs::create_dir_all(&conv_dir).map_err(|e| io_err(&conv_dir, e))?;
    fs::create_dir_all(&multi_dir).map_err(|e| io_err(&multi_dir, e))?;
    for pair in dataset.pairs() {
        save_png(&pair.conv, &conv_dir.join(format!("{}.png", pair.id)))?;
        save_png(&pair.multi, &multi_dir.join(format!("{}.png", pair.id)))?;
    }
    Ok(())
}

/// Loads a dataset from the `conv/` + `multi/` layout, pairing files by stem.
///
/// Pairs are ordered by stem (lexicographic) so the load order is stable
/// across platforms. Provenance is `synthetic` when a `synth-config.json`
/// manifest sits next to the image directories, `external` otherwise.
pub fn load_dataset(dir: &Path, intensity_ceiling: f64) -> Result<Dataset> {
    let conv_dir = dir.join("conv");
    let mut stems = BTreeMap::new();
    let entries = fs::read_dir(&conv_dir).map_err(|e| io_err(&conv_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| io_err(&conv_dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("png") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.insert(stem.to_string(), path.clone());
            }
        }
    }
    if stems.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut pairs = Vec::with_capacity(stems.len());
    for (stem, conv_path) in stems {
        let multi_path = dir.join("multi").join(format!("{stem}.png"));
        let conv = load_png(&conv_path, intensity_ceiling)?;
        let multi = load_png(&multi_path, intensity_ceiling)?;
        pairs.push(ImagePair::new(stem, conv, multi)?);
    }
    let provenance = if dir.join("synth-config.json").exists() {
        "synthetic"
    } else {
        "external"
    };
    Dataset::new(pairs, provenance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_image(size: usize, seed: u64) -> IntensityImage {
        let mut rng = crate::rng::stream_rng(seed, 0, b"imgtest\0");
        let values = (0..size * size)
            .map(|_| rng.random_range(0.0..=DEFAULT_INTENSITY_CEILING))
            .collect();
        IntensityImage::new(size, size, DEFAULT_INTENSITY_CEILING, values).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            IntensityImage::new(0, 4, 0.01, vec![]),
            Err(Error::InvalidDimensions { .. })
        ));
        assert!(matches!(
            IntensityImage::new(2, 2, 0.01, vec![0.0; 3]),
            Err(Error::ValueCountMismatch { .. })
        ));
        assert!(matches!(
            IntensityImage::new(1, 1, 0.01, vec![0.02]),
            Err(Error::IntensityOutOfRange { .. })
        ));
        assert!(matches!(
            IntensityImage::new(1, 1, -1.0, vec![0.0]),
            Err(Error::InvalidIntensityCeiling(_))
        ));
    }

    #[test]
    fn stats_of_constant_image() {
        let img = IntensityImage::constant(8, 8, 0.01, 0.004).unwrap();
        let (mean, std) = image_stats(&img);
        assert_eq!(mean, 0.004);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn stats_of_two_pixel_image() {
        let img = IntensityImage::new(2, 1, 0.01, vec![0.0, 0.01]).unwrap();
        let (mean, std) = image_stats(&img);
        assert!((mean - 0.005).abs() < 1e-15);
        assert!((std - 0.005).abs() < 1e-15);
    }

    #[test]
    fn stats_match_two_pass_oracle() {
        for seed in 0..5 {
            let img = random_image(64, seed);
            let (mean, std) = image_stats(&img);
            // Independent two-pass computation.
            let n = img.values().len() as f64;
            let m: f64 = img.values().iter().sum::<f64>() / n;
            let v: f64 = img.values().iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / n;
            assert!((mean - m).abs() <= 1e-12 * m.abs().max(1.0));
            assert!((std - v.sqrt()).abs() <= 1e-12 * v.sqrt().max(1e-30));
            assert!(std >= 0.0);
        }
    }

    #[test]
    fn normalization_is_affine_with_fixed_points() {
        let img = IntensityImage::new(3, 1, 0.01, vec![0.0, 0.005, 0.01]).unwrap();
        let grid = normalize_for_model(&img);
        assert_eq!(grid.values[0], -1.0);
        assert_eq!(grid.values[1], 0.0);
        assert_eq!(grid.values[2], 1.0);
    }

    #[test]
    fn denormalize_clamps_and_inverts() {
        let grid = ModelGrid {
            width: 3,
            height: 1,
            values: vec![-1.0, 1.3, -2.0],
        };
        let img = denormalize_from_model(&grid, 0.01);
        assert_eq!(img.values()[0], 0.0);
        assert_eq!(img.values()[1], 0.01);
        assert_eq!(img.values()[2], 0.0);

        for seed in 0..5 {
            let original = random_image(16, seed);
            let back = denormalize_from_model(&normalize_for_model(&original), 0.01);
            for (a, b) in original.values().iter().zip(back.values()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn png_code_mapping_examples() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("codes.png");
        // codes 0, 13107, 65535 at ceiling 0.01
        let img = IntensityImage::new(
            3,
            1,
            0.01,
            vec![0.0, 13107.0 / 65535.0 * 0.01, 0.01],
        )
        .unwrap();
        save_png(&img, &path).unwrap();
        let loaded = load_png(&path, 0.01).unwrap();
        assert_eq!(loaded.values()[0], 0.0);
        assert!((loaded.values()[1] - 0.002).abs() < 1e-15);
        assert!((loaded.values()[2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn png_round_trip_is_code_exact() {
        let dir = tempfile::tempdir().unwrap();
        for seed in 0..4 {
            let img = random_image(32, seed);
            let path = dir.path().join(format!("rt{seed}.png"));
            save_png(&img, &path).unwrap();
            let loaded = load_png(&path, img.intensity_ceiling()).unwrap();
            assert_eq!(quantized_codes(&img), quantized_codes(&loaded));
            let bound = img.intensity_ceiling() / 65535.0 / 2.0;
            for (a, b) in img.values().iter().zip(loaded.values()) {
                assert!((a - b).abs() <= bound + 1e-15);
            }
        }
    }

    #[test]
    fn png_all_zero_and_full_scale() {
        let dir = tempfile::tempdir().unwrap();
        let zero = IntensityImage::zeros(4, 4, 0.01).unwrap();
        let full = IntensityImage::constant(4, 4, 0.01, 0.01).unwrap();
        let zp = dir.path().join("zero.png");
        let fp = dir.path().join("full.png");
        save_png(&zero, &zp).unwrap();
        save_png(&full, &fp).unwrap();
        assert!(quantized_codes(&load_png(&zp, 0.01).unwrap())
            .iter()
            .all(|&c| c == 0));
        assert!(quantized_codes(&load_png(&fp, 0.01).unwrap())
            .iter()
            .all(|&c| c == 65535));
    }

    #[test]
    fn load_rejects_missing_and_multichannel() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.png");
        assert!(matches!(
            load_png(&missing, 0.01),
            Err(Error::MissingFile(_))
        ));

        // Hand-write an RGB png.
        let rgb = dir.path().join("rgb.png");
        {
            let file = fs::File::create(&rgb).unwrap();
            let mut enc = png::Encoder::new(BufWriter::new(file), 2, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0, 0, 0, 255, 255, 255]).unwrap();
        }
        assert!(matches!(
            load_png(&rgb, 0.01),
            Err(Error::MultiChannelPng { .. })
        ));

        // 4-bit grayscale png.
        let low = dir.path().join("lowdepth.png");
        {
            let file = fs::File::create(&low).unwrap();
            let mut enc = png::Encoder::new(BufWriter::new(file), 2, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Four);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0x0f]).unwrap();
        }
        assert!(matches!(
            load_png(&low, 0.01),
            Err(Error::UnsupportedBitDepth { bits: 4, .. })
        ));
    }

    #[test]
    fn eight_bit_pngs_load() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gray8.png");
        {
            let file = fs::File::create(&p).unwrap();
            let mut enc = png::Encoder::new(BufWriter::new(file), 2, 1);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0, 255]).unwrap();
        }
        let img = load_png(&p, 0.01).unwrap();
        assert_eq!(img.values()[0], 0.0);
        assert!((img.values()[1] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn pair_and_dataset_validation() {
        let a = IntensityImage::zeros(4, 4, 0.01).unwrap();
        let b = IntensityImage::zeros(8, 8, 0.01).unwrap();
        assert!(matches!(
            ImagePair::new("x", a.clone(), b.clone()),
            Err(Error::IncompatiblePair { .. })
        ));

        let p = ImagePair::new("p", a.clone(), a.clone()).unwrap();
        let q = ImagePair::new("p", a.clone(), a.clone()).unwrap();
        assert!(matches!(
            Dataset::new(vec![p.clone(), q], "t"),
            Err(Error::DuplicateId(_))
        ));
        let r = ImagePair::new("r", b.clone(), b.clone()).unwrap();
        assert!(matches!(
            Dataset::new(vec![p.clone(), r], "t"),
            Err(Error::MixedImageSizes { .. })
        ));
        assert!(matches!(Dataset::new(vec![], "t"), Err(Error::EmptyDataset)));

        let wide = IntensityImage::zeros(4, 2, 0.01).unwrap();
        let wp = ImagePair::new("w", wide.clone(), wide).unwrap();
        assert!(matches!(
            Dataset::new(vec![wp], "t"),
            Err(Error::NonSquareImage { .. })
        ));
    }

    #[test]
    fn dataset_disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pairs = (0..3)
            .map(|i| {
                ImagePair::new(
                    format!("synth-{i}"),
                    random_image(16, i as u64),
                    random_image(16, 100 + i as u64),
                )
                .unwrap()
            })
            .collect();
        let ds = Dataset::new(pairs, "synthetic").unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(dir.path(), DEFAULT_INTENSITY_CEILING).unwrap();
        assert_eq!(loaded.len(), 3);
        assert_eq!(loaded.image_size(), 16);
        for pair in ds.pairs() {
            let got = loaded.get(&pair.id).unwrap();
            assert_eq!(quantized_codes(&pair.conv), quantized_codes(&got.conv));
            assert_eq!(quantized_codes(&pair.multi), quantized_codes(&got.multi));
        }
    }
}
