use super::{tridiag, JacobiOperator};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Eigenvalues of one interior truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSpectrum {
    pub size: usize,
    pub j1: i64,
    pub j2: i64,
    /// Sorted eigenvalues attributed to the bulk.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues whose eigenvectors sit at an artificial cut.
    pub boundary_states: Vec<f64>,
}

/// Truncation spectra over a ladder of sizes and their merged cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumApprox {
    pub sizes: Vec<usize>,
    pub per_size: Vec<SizeSpectrum>,
    /// Disjoint closed intervals, ascending.
    pub cover: Vec<[f64; 2]>,
    /// Merge resolution.
    pub resolution: f64,
    /// Hausdorff distance between bulk eigenvalues of consecutive sizes.
    pub ladder_drift: Vec<f64>,
}

impl SpectrumApprox {
    /// Sorted bulk eigenvalues over all sizes.
    pub fn all_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.per_size.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Gaps of the cover strictly inside its hull, as `(lo, hi)` pairs.
    pub fn gaps(&self) -> Vec<[f64; 2]> {
        self.cover.windows(2).map(|w| [w[0][1], w[1][0]]).collect()
    }
}

fn hausdorff(x: &[f64], y: &[f64]) -> f64 {
    let one_sided = |p: &[f64], q: &[f64]| {
        p.iter()
            .map(|v| {
                let k = q.partition_point(|w| w < v);
                let mut d = f64::INFINITY;
                if k < q.len() {
                    d = d.min((q[k] - v).abs());
                }
                if k > 0 {
                    d = d.min((v - q[k - 1]).abs());
                }
                d
            })
            .fold(0.0, f64::max)
    };
    if x.is_empty() || y.is_empty() {
        return if x.is_empty() && y.is_empty() { 0.0 } else { f64::INFINITY };
    }
    one_sided(x, y).max(one_sided(y, x))
}

fn size_spectrum(op: &JacobiOperator, size: usize) -> SizeSpectrum {
    let len = op.len();
    let j1 = op.lo - 1 + ((len - size) / 2) as i64;
    let j2 = j1 + size as i64;
    let t = op.truncation(j1, j2);
    let (d, e) = t.gauged();
    let zero = C64::new(0.0, 0.0);
    let edge = (size / 10).max(8);
    // Too short to tell edge states from bulk states.
    let filter = size >= 4 * edge;
    let left_open = filter && t.cut_couplings.0 != zero;
    let right_open = filter && t.cut_couplings.1 != zero;
    let mut bulk = Vec::new();
    let mut boundary = Vec::new();
    let mut start = 0;
    for end in 0..size {
        if end + 1 < size && e[end] != 0.0 {
            continue;
        }
        let (bd, be) = (&d[start..=end], &e[start..end]);
        let touches_left = start == 0 && left_open;
        let touches_right = end + 1 == size && right_open;
        for lam in tridiag::eigenvalues(bd, be) {
            let at_cut = (touches_left || touches_right) && {
                let v = tridiag::eigenvector(bd, be, lam);
                let w: f64 = v
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| {
                        let pos = start + k;
                        (touches_left && pos < edge) || (touches_right && pos + edge >= size)
                    })
                    .map(|(_, x)| x * x)
                    .sum();
                w > 0.5
            };
            if at_cut {
                boundary.push(lam);
            } else {
                bulk.push(lam);
            }
        }
        start = end + 1;
    }
    bulk.sort_by(f64::total_cmp);
    boundary.sort_by(f64::total_cmp);
    SizeSpectrum { size, j1, j2, eigenvalues: bulk, boundary_states: boundary }
}

/// Eigenvalues of centered interior truncations of the given sizes, merged into an
/// interval cover at resolution `4π·sup|a| / max size`.
pub fn spectrum(op: &JacobiOperator, sizes: &[usize]) -> SpectrumApprox {
    let mut sizes: Vec<usize> = sizes.iter().map(|&s| s.clamp(1, op.len())).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let per_size: Vec<SizeSpectrum> = sizes.iter().map(|&s| size_spectrum(op, s)).collect();
    let a_max = (op.lo..=op.hi).map(|j| op.a_at(j).norm()).fold(0.0, f64::max);
    let n_max = *sizes.last().unwrap_or(&1) as f64;
    let resolution = (4.0 * std::f64::consts::PI * a_max / n_max).max(1e-12);
    let mut all: Vec<f64> = per_size.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    let mut cover: Vec<[f64; 2]> = Vec::new();
    for x in all {
        match cover.last_mut() {
            Some(last) if x - last[1] <= resolution => last[1] = last[1].max(x),
            _ => cover.push([x, x]),
        }
    }
    let ladder_drift = per_size.windows(2).map(|w| hausdorff(&w[0].eigenvalues, &w[1].eigenvalues)).collect();
    SpectrumApprox { sizes, per_size, cover, resolution, ladder_drift }
}

/// Distance from `E` to the cover; zero for real `E` inside it.
pub fn dist_to_spectrum(spec: &SpectrumApprox, e: C64) -> f64 {
    spec.cover
        .iter()
        .map(|iv| {
            let x = e.re.clamp(iv[0], iv[1]);
            (e - C64::new(x, 0.0)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Distance from `E` to the nearest endpoint of the cover.
pub fn dist_to_spectral_edge(spec: &SpectrumApprox, e: C64) -> f64 {
    spec.cover
        .iter()
        .flat_map(|iv| [iv[0], iv[1]])
        .map(|x| (e - C64::new(x, 0.0)).norm())
        .fold(f64::INFINITY, f64::min)
}
