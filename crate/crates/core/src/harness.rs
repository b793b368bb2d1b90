//! Energy scans comparing the resolvent set with dominated splitting, perturbation
//! experiments, configuration and report files.

use crate::certifier::{certify, CertifierOptions, DSCertificate, SplittingField, Verdict};
use crate::error::{Error, Result};
use crate::jacobi::{dist_to_spectral_edge, dist_to_spectrum, spectrum, JacobiOperator, OperatorFile, SpectrumApprox};
use crate::mat2::{cocycle_product, vnorm, Mat2, MatSequence};
use crate::models::{realize, BaseDynamics, SamplingPair, State};
use crate::sphere::chordal_dist;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Real interval `[lo, hi]` with step `step`, or the rectangle
/// `[lo, hi] × [im_lo, im_hi]` when `imag` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<[f64; 2]>,
}

impl GridSpec {
    pub fn real(lo: f64, hi: f64, step: f64) -> Self {
        GridSpec { lo, hi, step, imag: None }
    }

    fn count(lo: f64, hi: f64, step: f64) -> usize {
        ((hi - lo) / step + 1e-9).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.hi >= self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Input(format!("invalid grid [{}, {}] step {}", self.lo, self.hi, self.step)));
        }
        if let Some([a, b]) = self.imag {
            if !(b >= a) {
                return Err(Error::Input(format!("invalid imaginary range [{a}, {b}]")));
            }
        }
        Ok(())
    }

    /// Grid energies, real part fastest.
    pub fn energies(&self) -> Vec<C64> {
        let nr = Self::count(self.lo, self.hi, self.step);
        let ims: Vec<f64> = match self.imag {
            Some([a, b]) => (0..Self::count(a, b, self.step)).map(|k| a + k as f64 * self.step).collect(),
            None => vec![0.0],
        };
        ims.iter()
            .flat_map(|&im| (0..nr).map(move |k| C64::new(self.lo + k as f64 * self.step, im)))
            .collect()
    }
}

/// One line of a scan report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(rename = "E_re")]
    pub e_re: f64,
    #[serde(rename = "E_im")]
    pub e_im: f64,
    pub delta_spec: f64,
    pub ds_status: String,
    pub condition_failed: Option<u8>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub domination_margin: Option<f64>,
    pub delta_sep: Option<f64>,
    #[serde(rename = "m_N")]
    pub m_n: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    #[serde(flatten)]
    pub row: ScanRow,
    /// Resolvent and splitting classifications differ.
    pub disagreement: bool,
    /// Certificate marginal, or within two grid steps of a spectral edge.
    pub marginal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<SiteDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub points: usize,
    /// Disagreements outside the marginal band.
    pub symdiff_count: usize,
    pub symdiff_energies: Vec<[f64; 2]>,
    pub marginal_disagreements: Vec<[f64; 2]>,
    /// Endpoints of the spectral cover.
    pub band_edges: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub grid: GridSpec,
    pub records: Vec<ScanRecord>,
    pub summary: ScanSummary,
}

/// Per-site margins of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteDiagnostics {
    pub lo: i64,
    /// `‖B_N(j)û(j)‖ / ‖B_N(j)ŝ(j)‖`, capped.
    pub domination_ratio: Vec<f64>,
    pub separation: Vec<f64>,
}

pub fn site_diagnostics(seq: &MatSequence, field: &SplittingField, n: usize) -> Result<SiteDiagnostics> {
    let mut ratio = Vec::new();
    let mut separation = Vec::new();
    for j in field.lo..=field.hi {
        let p = cocycle_product(seq, j, n)?;
        let nu = vnorm(&p.apply(&field.u_at(j).rep()));
        let ns = vnorm(&p.apply(&field.s_at(j).rep()));
        ratio.push(if ns > 0.0 { (nu / ns).min(1e12) } else { 1e12 });
        separation.push(chordal_dist(&field.u_at(j), &field.s_at(j)));
    }
    Ok(SiteDiagnostics { lo: field.lo, domination_ratio: ratio, separation })
}

fn row(e: C64, delta_spec: f64, cert: &DSCertificate) -> ScanRow {
    ScanRow {
        e_re: e.re,
        e_im: e.im,
        delta_spec,
        ds_status: cert.verdict.status().into(),
        condition_failed: cert.verdict.failed_condition(),
        n: cert.n,
        domination_margin: cert.domination_margin,
        delta_sep: cert.delta_sep,
        m_n: cert.m_n,
        epsilon: cert.epsilon_stability,
    }
}

#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub certifier: CertifierOptions,
    pub jobs: usize,
    /// Truncation sizes for the spectral side; defaults to half and full window.
    pub sizes: Option<Vec<usize>>,
    pub verbose: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { certifier: CertifierOptions::default(), jobs: 1, sizes: None, verbose: false }
    }
}

fn default_sizes(op: &JacobiOperator) -> Vec<usize> {
    vec![(op.len() / 2).max(1), op.len()]
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InternalInconsistency(e.to_string()))
}

/// Classify every grid energy by distance to the spectrum and by certification.
pub fn johnson_scan(op: &JacobiOperator, grid: &GridSpec, opts: &ScanOptions) -> Result<ScanReport> {
    grid.validate()?;
    let sup_a = (op.lo - 1..=op.hi).map(|j| op.a_at(j).norm()).fold(0.0, f64::max);
    let sup_b = (op.lo..=op.hi).map(|j| op.b_at(j).abs()).fold(0.0, f64::max);
    // Operator norm bound.
    let m = (2.0 * sup_a + sup_b).max(f64::MIN_POSITIVE);
    let reach = grid.lo.abs().max(grid.hi.abs()).max(grid.imag.map_or(0.0, |[a, b]| a.abs().max(b.abs())));
    if reach > 3.0 * m {
        return Err(Error::Input(format!("grid reaches {reach}, beyond 3M = {}", 3.0 * m)));
    }
    let spec = spectrum(op, opts.sizes.as_deref().unwrap_or(&default_sizes(op)));
    let energies = grid.energies();
    let records: Vec<ScanRecord> = pool(opts.jobs)?.install(|| {
        energies
            .par_iter()
            .map(|&e| {
                let delta_spec = dist_to_spectrum(&spec, e);
                let seq = op.cocycle_map(e);
                let cert = certify(&seq, &opts.certifier);
                let resolvent = delta_spec > 0.0;
                let disagreement = resolvent != cert.is_ds();
                let marginal = matches!(cert.verdict, Verdict::Marginal)
                    || dist_to_spectral_edge(&spec, e) < 2.0 * grid.step;
                let sites = match (&cert.field, cert.n, opts.verbose) {
                    (Some(f), Some(n), true) => site_diagnostics(&seq, f, n).ok(),
                    _ => None,
                };
                ScanRecord { row: row(e, delta_spec, &cert), disagreement, marginal, sites }
            })
            .collect()
    });
    let pick = |hard: bool| -> Vec<[f64; 2]> {
        records
            .iter()
            .filter(|r| r.disagreement && (r.marginal != hard))
            .map(|r| [r.row.e_re, r.row.e_im])
            .collect()
    };
    let symdiff_energies = pick(true);
    let summary = ScanSummary {
        points: records.len(),
        symdiff_count: symdiff_energies.len(),
        symdiff_energies,
        marginal_disagreements: pick(false),
        band_edges: spec.cover.iter().flat_map(|iv| [iv[0], iv[1]]).collect(),
    };
    Ok(ScanReport { grid: grid.clone(), records, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub energy: [f64; 2],
    pub epsilon: f64,
    pub scale: f64,
    pub seed: u64,
    pub trials: usize,
    pub recertified: usize,
    /// Trial indices that failed to recertify.
    pub failures: Vec<usize>,
}

impl PerturbationReport {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            1.0
        } else {
            self.recertified as f64 / self.trials as f64
        }
    }
}

/// Trial `k` of a perturbation experiment: every stored factor moves by a random
/// matrix of operator norm exactly `size`. Trial `k` uses stream `k` of the seed.
pub fn perturb_sequence(seq: &MatSequence, size: f64, seed: u64, k: u64) -> Result<MatSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    let draws: Vec<Mat2> = seq
        .values()
        .iter()
        .map(|_| {
            let mut z = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let p = Mat2::new(z(), z(), z(), z());
            let n = p.norm();
            if n == 0.0 {
                Mat2::zero()
            } else {
                p.scale_re(size / n)
            }
        })
        .collect();
    let lo = seq.data_lo();
    seq.map(|j, b| b.add(&draws[(j - lo) as usize]))
}

/// Recertify `trials` random perturbations of sup-norm `scale·ε`, where `ε` is the
/// stability radius of the certificate at `E`.
pub fn perturbation_experiment(
    op: &JacobiOperator,
    energy: C64,
    trials: usize,
    scale: f64,
    seed: u64,
    opts: &ScanOptions,
) -> Result<PerturbationReport> {
    let seq = op.cocycle_map(energy);
    let cert = certify(&seq, &opts.certifier);
    if !cert.is_ds() {
        return Err(Error::Domain(format!("no certificate at E = {energy}: {:?}", cert.verdict)));
    }
    let epsilon = cert.epsilon_stability.unwrap_or(0.0);
    let outcomes: Vec<bool> = pool(opts.jobs)?.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|k| {
                perturb_sequence(&seq, scale * epsilon, seed, k as u64)
                    .map(|p| certify(&p, &opts.certifier).is_ds())
                    .unwrap_or(false)
            })
            .collect()
    });
    let failures: Vec<usize> = outcomes.iter().enumerate().filter(|(_, ok)| !**ok).map(|(k, _)| k).collect();
    Ok(PerturbationReport {
        energy: [energy.re, energy.im],
        epsilon,
        scale,
        seed,
        trials,
        recertified: trials - failures.len(),
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Input(format!("{}: {e}", path.display()))
}

/// Scan rows as CSV, header first.
pub fn scan_csv(report: &ScanReport) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record([
        "E_re",
        "E_im",
        "delta_spec",
        "ds_status",
        "condition_failed",
        "N",
        "domination_margin",
        "delta_sep",
        "m_N",
        "epsilon",
    ])
    .map_err(|e| Error::InternalInconsistency(e.to_string()))?;
    for r in &report.records {
        w.serialize(&r.row).map_err(|e| Error::InternalInconsistency(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InternalInconsistency(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InternalInconsistency(e.to_string()))
}

pub fn read_scan_csv(text: &str) -> Result<Vec<ScanRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<ScanRow>, _>>()
        .map_err(|e| Error::Input(e.to_string()))
}

/// Write a scan report. The CSV form keeps the flat columns only.
pub fn emit(report: &ScanReport, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => scan_csv(report)?,
        Format::Json => to_json(report)?,
    };
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::InternalInconsistency(e.to_string()))
}

/// Base dynamics, sampling pair, phase and window of a sampled operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dynamics: BaseDynamics,
    pub pair: SamplingPair,
    #[serde(default)]
    pub omega: f64,
    pub window: [i64; 2],
}

impl ModelConfig {
    pub fn realize(&self) -> Result<JacobiOperator> {
        let [lo, hi] = self.window;
        realize(&self.dynamics, &self.pair, State::circle(self.omega), lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    File { file: PathBuf },
    Model { model: ModelConfig },
    Inline(OperatorFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub operator: OperatorSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub certifier: CertifierOptions,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jobs: Option<usize>,
    /// `[re, im]` for single-energy commands.
    #[serde(default)]
    pub energy: Option<[f64; 2]>,
    #[serde(default)]
    pub site: Option<i64>,
    #[serde(default)]
    pub margin: Option<i64>,
    #[serde(default)]
    pub sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub scale: Option<f64>,
    /// Number of equally spaced phases for the dynamical check.
    #[serde(default)]
    pub omega_points: Option<usize>,
}

impl Config {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut cfg: Config = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
        if let OperatorSpec::File { file } = &mut cfg.operator {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn operator(&self) -> Result<JacobiOperator> {
        match &self.operator {
            OperatorSpec::File { file } => {
                let text = std::fs::read_to_string(file).map_err(|e| io_err(file, e))?;
                JacobiOperator::from_json(&text)
            }
            OperatorSpec::Model { model } => model.realize(),
            OperatorSpec::Inline(f) => JacobiOperator::from_file(f),
        }
    }

    pub fn energy(&self) -> Result<C64> {
        self.energy
            .map(|[re, im]| C64::new(re, im))
            .ok_or_else(|| Error::Input("config needs \"energy\": [re, im]".into()))
    }
}

/// Spectrum of the configured operator.
pub fn run_spectrum(op: &JacobiOperator, sizes: Option<&[usize]>) -> SpectrumApprox {
    spectrum(op, sizes.unwrap_or(&default_sizes(op)))
}
