//! Synthetic sequential-image cohort, PGM frame I/O and the dataset manifest.
//!
//! Every patient gets a fixed low-level background and one Gaussian blob in
//! the top-left quadrant. Across frames the blob's integrated intensity grows
//! by a per-class rate; label 1 grows quickly, label 0 barely moves. Growth is
//! realized by widening the blob at constant peak height, so it survives the
//! per-frame normalization of amplitude encoding as a change of shape.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageDecoder, ImageEncoder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PatientSequence;

pub const GENERATOR_VERSION: &str = "qcnn-synth-1";
pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_patients: usize,
    /// Fraction of label-1 patients.
    pub class_balance: f64,
    pub min_frames: usize,
    pub max_frames: usize,
    pub image_side: usize,
    /// Per-frame growth of integrated blob intensity, indexed by label.
    pub growth_rate: [f64; 2],
    /// Upper bound of the static background.
    pub noise_floor: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_patients: 60,
            class_balance: 0.5,
            min_frames: 2,
            max_frames: 8,
            image_side: 16,
            growth_rate: [0.02, 1.0],
            noise_floor: 0.1,
            seed: 7,
        }
    }
}

const PEAK: f64 = 0.6;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let side = self.image_side;
        if !side.is_power_of_two() || !(4..=256).contains(&side) {
            return Err(Error::Parameter(format!("image side {side} must be a power of two in 4..=256")));
        }
        if (side * side).trailing_zeros() as usize > crate::statevector::MAX_QUBITS {
            return Err(Error::Parameter(format!("image side {side} exceeds the register size")));
        }
        if self.num_patients < 2 {
            return Err(Error::Parameter("need at least two patients".into()));
        }
        if !(0.0..=1.0).contains(&self.class_balance) {
            return Err(Error::Parameter(format!("class balance {} outside [0, 1]", self.class_balance)));
        }
        if self.min_frames < 2 || self.max_frames < self.min_frames {
            return Err(Error::Parameter(format!(
                "frame range {}..={} must start at 2 or more",
                self.min_frames, self.max_frames
            )));
        }
        if self.growth_rate.iter().any(|g| !g.is_finite() || *g <= -1.0) {
            return Err(Error::Parameter("growth rates must exceed -1".into()));
        }
        if !(0.0..=1.0 - PEAK).contains(&self.noise_floor) || self.noise_floor <= 0.0 {
            return Err(Error::Parameter(format!("noise floor {} outside (0, {}]", self.noise_floor, 1.0 - PEAK)));
        }
        Ok(())
    }

    /// Qubits needed for one frame.
    pub fn num_qubits(&self) -> usize {
        (self.image_side * self.image_side).trailing_zeros() as usize
    }
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// One patient's frames as 8-bit pixels, row-major.
fn synth_patient(cfg: &SynthConfig, index: usize, label: u8) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64 + 1);
    let side = cfg.image_side;
    let s = side as f64;
    let frames = rng.random_range(cfg.min_frames..=cfg.max_frames);
    let cx = rng.random_range(0.15..0.35) * s;
    let cy = rng.random_range(0.15..0.35) * s;
    let sigma0 = rng.random_range(0.05..0.09) * s;
    let background: Vec<f64> = (0..side * side).map(|_| rng.random_range(0.2..1.0) * cfg.noise_floor).collect();
    let growth = 1.0 + cfg.growth_rate[label as usize];

    (0..frames)
        .map(|t| {
            // integrated intensity ∝ peak · σ², so σ² carries the growth
            let sigma2 = sigma0 * sigma0 * growth.powi(t as i32);
            (0..side * side)
                .map(|p| {
                    let (y, x) = ((p / side) as f64 + 0.5, (p % side) as f64 + 0.5);
                    let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                    quantize(background[p] + PEAK * (-r2 / (2.0 * sigma2)).exp())
                })
                .collect()
        })
        .collect()
}

fn labels_for(cfg: &SynthConfig) -> Vec<u8> {
    let ones = (cfg.num_patients as f64 * cfg.class_balance).round() as usize;
    let mut labels: Vec<u8> = (0..cfg.num_patients).map(|i| u8::from(i < ones)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for i in (1..labels.len()).rev() {
        labels.swap(i, rng.random_range(0..=i));
    }
    labels
}

fn to_unit(bytes: &[u8]) -> Vec<f64> {
    bytes.iter().map(|&b| b as f64 / 255.0).collect()
}

/// The cohort in memory, with pixels exactly as they would load from disk.
pub fn synthesize(cfg: &SynthConfig) -> Result<Vec<PatientSequence>> {
    cfg.validate()?;
    labels_for(cfg)
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let frames = synth_patient(cfg, i, label).iter().map(|f| to_unit(f)).collect();
            PatientSequence::new(patient_id(i), frames, label)
        })
        .collect()
}

fn patient_id(i: usize) -> String {
    format!("P{:04}", i + 1)
}

/// Writes frames and the manifest under `out_dir`.
pub fn generate(cfg: &SynthConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    let frame_dir = out_dir.join("frames");
    fs::create_dir_all(&frame_dir)?;
    let mut records = Vec::with_capacity(cfg.num_patients);
    for (i, label) in labels_for(cfg).into_iter().enumerate() {
        let id = patient_id(i);
        let mut paths = Vec::new();
        for (t, frame) in synth_patient(cfg, i, label).iter().enumerate() {
            let rel = PathBuf::from("frames").join(format!("{id}_t{t}.pgm"));
            save_pgm_bytes(frame, cfg.image_side, &out_dir.join(&rel))?;
            paths.push(rel);
        }
        records.push(ManifestRecord { patient_id: id, label, frames: paths });
    }
    let manifest = DatasetManifest {
        image_side: cfg.image_side,
        seed: cfg.seed,
        generator_version: GENERATOR_VERSION.to_string(),
        records,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    /// Row-major values scaled to [0, 1].
    pub pixels: Vec<f64>,
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// Reads a binary 8-bit grayscale PGM (P5, maxval 255).
pub fn load_pgm(path: &Path) -> Result<PgmImage> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let decoder = PnmDecoder::new(BufReader::new(file)).map_err(|e| format_err(path, e))?;
    let header = decoder.header();
    if header.subtype() != PnmSubtype::Graymap(SampleEncoding::Binary) {
        return Err(format_err(path, "not a binary graymap (P5)"));
    }
    if header.maximal_sample() != 255 {
        return Err(format_err(path, format!("maxval {} is not 255", header.maximal_sample())));
    }
    let (width, height) = (header.width() as usize, header.height() as usize);
    let mut bytes = vec![0u8; decoder.total_bytes() as usize];
    decoder.read_image(&mut bytes).map_err(|e| format_err(path, e))?;
    Ok(PgmImage { width, height, pixels: to_unit(&bytes) })
}

fn save_pgm_bytes(bytes: &[u8], side: usize, path: &Path) -> Result<()> {
    if bytes.len() != side * side {
        return Err(Error::Shape(format!("{} pixels for a {side}x{side} image", bytes.len())));
    }
    let mut out = BufWriter::new(File::create(path)?);
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(bytes, side as u32, side as u32, ExtendedColorType::L8)
        .map_err(|e| format_err(path, e))?;
    out.flush()?;
    Ok(())
}

/// Writes a square frame; values are clamped to [0, 1] and rounded to 8 bits.
pub fn save_pgm(pixels: &[f64], side: usize, path: &Path) -> Result<()> {
    let bytes: Vec<u8> = pixels.iter().map(|&v| quantize(v)).collect();
    save_pgm_bytes(&bytes, side, path)
}

/// Row-major flattening of a square frame.
pub fn frame_to_vector(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let side = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != side) {
        return Err(Error::Shape(format!("row of length {} in a {side}-row frame", r.len())));
    }
    let flat: Vec<f64> = rows.concat();
    if flat.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Parameter("pixel values must lie in [0, 1]".into()));
    }
    Ok(flat)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub patient_id: String,
    pub label: u8,
    /// Relative to the manifest's directory.
    pub frames: Vec<PathBuf>,
}

/// Tab-separated records (`patient_id`, `label`, comma-joined frame paths)
/// preceded by `# key=value` metadata lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub image_side: usize,
    pub seed: u64,
    pub generator_version: String,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# generator={}\n# image_side={}\n# seed={}\n",
            self.generator_version, self.image_side, self.seed
        );
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').has_headers(false).from_writer(Vec::new());
        for r in &self.records {
            let frames: Vec<String> = r.frames.iter().map(|p| p.to_string_lossy().replace('\\', "/")).collect();
            w.write_record([r.patient_id.as_str(), &r.label.to_string(), &frames.join(",")])
                .expect("writing to memory");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 fields"));
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = std::collections::BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |k: &str| meta.get(k).ok_or_else(|| Error::Format(format!("manifest lacks '# {k}=' metadata")));
        let image_side = get("image_side")?.parse().map_err(|_| Error::Format("bad image_side".into()))?;
        let seed = get("seed")?.parse().map_err(|_| Error::Format("bad seed".into()))?;
        let generator_version = get("generator")?.clone();

        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .has_headers(false)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for (line, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::Format(format!("manifest record {}: {e}", line + 1)))?;
            if row.len() != 3 {
                return Err(Error::Format(format!("manifest record {} has {} fields", line + 1, row.len())));
            }
            let label = match &row[1] {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Label(format!("manifest label '{other}' is not 0 or 1"))),
            };
            let frames: Vec<PathBuf> = row[2].split(',').filter(|s| !s.is_empty()).map(PathBuf::from).collect();
            if frames.len() < 2 {
                return Err(Error::Format(format!("patient {} has fewer than two frames", &row[0])));
            }
            records.push(ManifestRecord { patient_id: row[0].to_string(), label, frames });
        }
        Ok(Self { image_side, seed, generator_version, records })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn num_qubits(&self) -> usize {
        (self.image_side * self.image_side).trailing_zeros() as usize
    }

    /// Loads every referenced frame, resolving paths against `base_dir`.
    pub fn load_sequences(&self, base_dir: &Path) -> Result<Vec<PatientSequence>> {
        self.records
            .iter()
            .map(|r| {
                let frames = r
                    .frames
                    .iter()
                    .map(|p| {
                        let img = load_pgm(&base_dir.join(p))?;
                        if img.width != self.image_side || img.height != self.image_side {
                            return Err(Error::Shape(format!(
                                "{} is {}x{}, manifest says side {}",
                                p.display(),
                                img.width,
                                img.height,
                                self.image_side
                            )));
                        }
                        Ok(img.pixels)
                    })
                    .collect::<Result<Vec<_>>>()?;
                PatientSequence::new(r.patient_id.clone(), frames, r.label)
            })
            .collect()
    }
}

/// Reads a manifest file and loads its frames from the same directory.
pub fn load_dataset(manifest_path: &Path) -> Result<(DatasetManifest, Vec<PatientSequence>)> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let seqs = manifest.load_sequences(base)?;
    Ok((manifest, seqs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flattening_is_row_major() {
        let v = frame_to_vector(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        assert_eq!(v, vec![0.1, 0.2, 0.3, 0.4]);
        assert!(frame_to_vector(&[vec![0.1, 0.2], vec![0.3]]).is_err());
    }

    #[test]
    fn side_must_be_power_of_two() {
        let cfg = SynthConfig { image_side: 12, ..SynthConfig::default() };
        assert!(matches!(cfg.validate(), Err(Error::Parameter(_))));
        assert_eq!(SynthConfig::default().num_qubits(), 8);
    }

    #[test]
    fn balanced_labels() {
        let cfg = SynthConfig { num_patients: 20, ..SynthConfig::default() };
        let labels = labels_for(&cfg);
        assert_eq!(labels.iter().filter(|&&y| y == 1).count(), 10);
    }
}
