//! Dominated splitting: direction fields, the four defining conditions, invariant
//! cones and a stability radius for the certificate.

use crate::error::{Error, Result};
use crate::jacobi::{GreensSolver, JacobiOperator};
use crate::mat2::{cocycle_product, svd2, vnorm, Mat2, MatSequence, C2, SINGULAR_TOL};
use crate::sphere::{act, chordal_dist, contained_in_disk, mobius_disk_image, ProjPoint};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Domination factor.
pub const LAMBDA: f64 = 2.0;

/// Ratios above this are reported as this value.
const RATIO_CAP: f64 = 1e12;

/// Images shorter than this fraction of the factor norm count as zero.
const ZERO_IMAGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifierOptions {
    pub n_max: usize,
    pub delta_min: f64,
    /// Minimum of `min_j ‖B_N(j)‖ / max_j ‖B_N(j)‖`.
    pub floor_rel: f64,
    pub res_max: f64,
    pub burn_in_start: usize,
    pub burn_in_max: usize,
    /// Successive direction fields must agree within this chordal distance.
    pub settle_tol: f64,
    /// Singular value ratio below which a product determines its directions.
    pub gap_tol: f64,
    pub marginal_band: f64,
    pub alpha_grid: Vec<f64>,
    pub floor_profile_len: usize,
}

impl Default for CertifierOptions {
    fn default() -> Self {
        CertifierOptions {
            n_max: 64,
            delta_min: 1e-4,
            floor_rel: 1e-5,
            res_max: 1e-6,
            burn_in_start: 64,
            burn_in_max: 512,
            settle_tol: 1e-8,
            gap_tol: 1e-8,
            marginal_band: 0.05,
            alpha_grid: vec![0.25, 0.5, 1.0, 2.0],
            floor_profile_len: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ConeIteration,
    GreensColumns,
    Kernel,
}

/// Unstable and stable directions on a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingField {
    pub lo: i64,
    pub hi: i64,
    pub u: Vec<ProjPoint>,
    pub s: Vec<ProjPoint>,
    pub provenance: Provenance,
    /// Burn-in at which the iterated field settled, if iterated.
    pub burn_in: Option<usize>,
    /// Sites whose stable direction came from an exact kernel.
    pub kernel_sites: usize,
}

impl SplittingField {
    pub fn u_at(&self, j: i64) -> ProjPoint {
        self.u[(j - self.lo) as usize]
    }

    pub fn s_at(&self, j: i64) -> ProjPoint {
        self.s[(j - self.lo) as usize]
    }

    /// Largest chordal discrepancy with another field on the common window.
    pub fn distance(&self, other: &SplittingField) -> f64 {
        let (lo, hi) = (self.lo.max(other.lo), self.hi.min(other.hi));
        (lo..=hi)
            .map(|j| {
                chordal_dist(&self.u_at(j), &other.u_at(j)).max(chordal_dist(&self.s_at(j), &other.s_at(j)))
            })
            .fold(0.0, f64::max)
    }

    pub fn restrict(&self, lo: i64, hi: i64) -> SplittingField {
        let (a, b) = ((lo - self.lo) as usize, (hi - self.lo) as usize);
        SplittingField {
            lo,
            hi,
            u: self.u[a..=b].to_vec(),
            s: self.s[a..=b].to_vec(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    Invariance,
    Domination,
    Separation,
    NormFloor,
}

impl Condition {
    pub fn label(&self) -> u8 {
        match self {
            Condition::Invariance => 1,
            Condition::Domination => 2,
            Condition::Separation => 3,
            Condition::NormFloor => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Marginal,
    Failed { condition: Condition, reason: String },
}

impl Verdict {
    pub fn is_ds(&self) -> bool {
        !matches!(self, Verdict::Failed { .. })
    }

    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Valid => "valid",
            Verdict::Marginal => "marginal",
            Verdict::Failed { .. } => "failed",
        }
    }

    pub fn failed_condition(&self) -> Option<u8> {
        match self {
            Verdict::Failed { condition, .. } => Some(condition.label()),
            _ => None,
        }
    }
}

/// Witness data for the four conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DSCertificate {
    pub verdict: Verdict,
    /// Pass/fail of conditions (1)–(4); `None` when not evaluated.
    pub conditions: [Option<bool>; 4],
    pub n: Option<usize>,
    pub lambda: f64,
    pub delta_sep: Option<f64>,
    pub m_n: Option<f64>,
    /// `m_N / max_j ‖B_N(j)‖`.
    pub floor_ratio: Option<f64>,
    pub invariance_residual: Option<f64>,
    pub domination_margin: Option<f64>,
    /// Margin at step `N + 1`.
    pub next_margin: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_prime: Option<f64>,
    pub clearance: Option<f64>,
    pub epsilon_stability: Option<f64>,
    /// `min_j ‖B_n(j)‖` for `n = 1, 2, …`.
    pub floor_profile: Vec<f64>,
    pub burn_in: Option<usize>,
    #[serde(skip)]
    pub field: Option<SplittingField>,
}

impl DSCertificate {
    fn empty() -> Self {
        DSCertificate {
            verdict: Verdict::Valid,
            conditions: [None; 4],
            n: None,
            lambda: LAMBDA,
            delta_sep: None,
            m_n: None,
            floor_ratio: None,
            invariance_residual: None,
            domination_margin: None,
            next_margin: None,
            alpha: None,
            alpha_prime: None,
            clearance: None,
            epsilon_stability: None,
            floor_profile: Vec::new(),
            burn_in: None,
            field: None,
        }
    }

    pub fn is_ds(&self) -> bool {
        self.verdict.is_ds()
    }
}

fn pow2_floor(x: i64) -> usize {
    if x < 1 {
        0
    } else {
        1usize << (63 - (x as u64).leading_zeros())
    }
}

fn normalized(m: Mat2) -> Mat2 {
    let n = m.max_abs();
    if n == 0.0 {
        m
    } else {
        m.scale_re(1.0 / n)
    }
}

/// Scale-free singularity test.
fn rank_deficient(m: &Mat2) -> bool {
    let n = m.norm();
    m.det().norm() <= SINGULAR_TOL * n * n
}

/// Kernel of a rank-one matrix, from its larger row.
fn kernel(m: &Mat2) -> C2 {
    let (r1, r2) = ([m.a, m.b], [m.c, m.d]);
    let row = if vnorm(&r1) >= vnorm(&r2) { r1 } else { r2 };
    if vnorm(&row) == 0.0 {
        return [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    }
    [row[1], -row[0]]
}

/// Range of a rank-one matrix, from its larger column.
fn range(m: &Mat2) -> C2 {
    let (c1, c2) = (m.col(0), m.col(1));
    if vnorm(&c1) >= vnorm(&c2) {
        c1
    } else {
        c2
    }
}

fn unit(v: C2) -> C2 {
    let n = vnorm(&v);
    [v[0] / n, v[1] / n]
}

/// Window and burn-in cap usable with the stored lookahead.
fn plan(seq: &MatSequence, opts: &CertifierOptions) -> (i64, i64, usize) {
    let (dlo, dhi) = (seq.data_lo(), seq.data_hi());
    let halo = (seq.lo - dlo).min(dhi + 1 - seq.hi);
    if halo >= 8 {
        (seq.lo, seq.hi, opts.burn_in_max.min(pow2_floor(halo)))
    } else {
        let bmax = opts.burn_in_max.min(pow2_floor((dhi - dlo + 1) / 3)).max(1);
        (seq.lo.max(dlo + bmax as i64), seq.hi.min(dhi + 1 - bmax as i64), bmax)
    }
}

/// Unstable and stable directions by iterating the cocycle: `u(j)` is the top left
/// singular direction of `B_b(j − b)` and `s(j)` the least right singular direction of
/// `B_b(j)`, with `b` doubled until the field settles. Sites with a singular factor
/// ahead take the exact kernel pulled back; sites with one behind take its range
/// pushed forward.
pub fn power_directions(seq: &MatSequence, opts: &CertifierOptions) -> Result<SplittingField> {
    let (lo, hi, bmax) = plan(seq, opts);
    if lo > hi {
        return Err(Error::Domain("window too short for the requested burn-in".into()));
    }
    let (dlo, dhi) = (seq.data_lo(), seq.data_hi());
    let nd = (dhi - dlo + 1) as usize;
    let idx = |j: i64| (j - dlo) as usize;
    for j in lo..=hi {
        if seq.get(j).max_abs() == 0.0 {
            return Err(Error::DegenerateCocycle(j));
        }
    }
    let singular: Vec<bool> = seq.values().iter().map(rank_deficient).collect();

    // Stable directions from kernels ahead, by a backward sweep.
    let mut s_kernel: Vec<Option<C2>> = vec![None; nd];
    for k in (0..nd).rev() {
        let b = seq.values()[k];
        if singular[k] {
            s_kernel[k] = Some(unit(kernel(&b)));
        } else if k + 1 < nd {
            if let Some(v) = s_kernel[k + 1] {
                let w = b.adjugate().apply(&v);
                s_kernel[k] = Some(unit(w));
            }
        }
    }
    // Unstable directions from ranges behind, by a forward sweep.
    let mut u_range: Vec<Option<C2>> = vec![None; nd];
    for k in 1..nd {
        let b = seq.values()[k - 1];
        if singular[k - 1] {
            if b.max_abs() > 0.0 {
                u_range[k] = Some(unit(range(&b)));
            }
        } else if let Some(v) = u_range[k - 1] {
            let w = b.apply(&v);
            if vnorm(&w) <= ZERO_IMAGE_TOL * b.norm() {
                return Err(Error::DegenerateCocycle(dlo + k as i64 - 1));
            }
            u_range[k] = Some(unit(w));
        }
    }

    let w = (hi - lo + 1) as usize;
    let need_s: Vec<i64> = (lo..=hi).filter(|&j| s_kernel[idx(j)].is_none()).collect();
    let need_u: Vec<i64> = (lo..=hi).filter(|&j| u_range[idx(j)].is_none()).collect();
    let kernel_sites = w - need_s.len();

    let mut u: Vec<ProjPoint> = (lo..=hi)
        .map(|j| u_range[idx(j)].map_or(ProjPoint::e1(), ProjPoint::from_unit))
        .collect();
    let mut s: Vec<ProjPoint> = (lo..=hi)
        .map(|j| s_kernel[idx(j)].map_or(ProjPoint::e2(), ProjPoint::from_unit))
        .collect();
    if need_s.is_empty() && need_u.is_empty() {
        return Ok(SplittingField { lo, hi, u, s, provenance: Provenance::Kernel, burn_in: None, kernel_sites });
    }

    // Doubling table of normalized products P_b(k) ∝ B_b(k).
    let mut table: Vec<Mat2> = seq.values().iter().map(|m| normalized(*m)).collect();
    let mut b = 1usize;
    let start = opts.burn_in_start.min(bmax).max(1);
    let double = |t: &Vec<Mat2>, b: usize| -> Vec<Mat2> {
        (0..t.len() - b).map(|k| normalized(t[k + b].mul(&t[k]))).collect()
    };
    while b < start {
        table = double(&table, b);
        b *= 2;
    }
    let mut prev: Option<(Vec<ProjPoint>, Vec<ProjPoint>)> = None;
    loop {
        let mut determined = true;
        let mut cur_u = Vec::with_capacity(need_u.len());
        for &j in &need_u {
            let sv = svd2(&table[idx(j - b as i64)]);
            determined &= sv.s2 <= opts.gap_tol * sv.s1;
            cur_u.push(sv.top_left());
        }
        let mut cur_s = Vec::with_capacity(need_s.len());
        for &j in &need_s {
            let sv = svd2(&table[idx(j)]);
            determined &= sv.s2 <= opts.gap_tol * sv.s1;
            cur_s.push(sv.bottom_right());
        }
        let settled = match &prev {
            Some((pu, ps)) => {
                let du = pu.iter().zip(&cur_u).map(|(p, q)| chordal_dist(p, q)).fold(0.0, f64::max);
                let ds = ps.iter().zip(&cur_s).map(|(p, q)| chordal_dist(p, q)).fold(0.0, f64::max);
                du.max(ds) <= opts.settle_tol
            }
            None => b >= bmax,
        };
        if determined && settled {
            for (&j, p) in need_u.iter().zip(&cur_u) {
                u[(j - lo) as usize] = *p;
            }
            for (&j, p) in need_s.iter().zip(&cur_s) {
                s[(j - lo) as usize] = *p;
            }
            return Ok(SplittingField {
                lo,
                hi,
                u,
                s,
                provenance: if kernel_sites > 0 { Provenance::Kernel } else { Provenance::ConeIteration },
                burn_in: Some(b),
                kernel_sites,
            });
        }
        if 2 * b > bmax {
            return Err(Error::NoDomination(format!(
                "direction fields did not settle by burn-in {b} (products {} their directions)",
                if determined { "determine" } else { "do not determine" }
            )));
        }
        prev = Some((cur_u, cur_s));
        table = double(&table, b);
        b *= 2;
    }
}

/// Direction fields from resolvent columns: `s(j)` from `(g_{j−1}(j), g_{j−1}(j−1))`
/// or `(g_{j−2}(j), g_{j−2}(j−1))`, `u(j)` from `(g_j(j), g_j(j−1))` or
/// `(g_{j+1}(j), g_{j+1}(j−1))`. The margin doubles until the truncation edge
/// no longer influences the columns.
pub fn greens_directions(op: &JacobiOperator, energy: C64) -> Result<SplittingField> {
    let (lo, hi) = (op.lo, op.hi);
    let zero = C64::new(0.0, 0.0);
    let mut margin = 32;
    loop {
        let solver = GreensSolver::new(op, energy, margin)?;
        let mut rows: Vec<[C64; 5]> = Vec::with_capacity((hi - lo + 4) as usize);
        let mut influence = 0.0f64;
        for k in lo - 2..=hi + 1 {
            let g = solver.column(k)?;
            influence = influence.max(g.boundary_influence());
            rows.push([g.value(k - 2), g.value(k - 1), g.value(k), g.value(k + 1), g.value(k + 2)]);
        }
        if influence > 1e-8 && margin < 8192 {
            margin *= 2;
            continue;
        }
        // rows[k − (lo − 2)][r + 2] = g_k(k + r)
        let g = |k: i64, n: i64| rows[(k - lo + 2) as usize][(n - k + 2) as usize];
        let pick = |primary: C2, fallback: C2, forced: bool, j: i64| -> Result<ProjPoint> {
            let np = primary[0].norm() + primary[1].norm();
            let nf = fallback[0].norm() + fallback[1].norm();
            let theta = 0.5 * np.max(nf);
            let v = if forced || np >= theta { primary } else { fallback };
            ProjPoint::from_vector(v).map_err(|_| {
                Error::InternalInconsistency(format!("both resolvent columns vanish at site {j}"))
            })
        };
        let mut u = Vec::with_capacity((hi - lo + 1) as usize);
        let mut s = Vec::with_capacity((hi - lo + 1) as usize);
        for j in lo..=hi {
            let sp = [g(j - 1, j), g(j - 1, j - 1)];
            let sf = [g(j - 2, j), g(j - 2, j - 1)];
            s.push(pick(sp, sf, op.a_at(j - 2) == zero, j)?);
            let up = [g(j, j), g(j, j - 1)];
            let uf = [g(j + 1, j), g(j + 1, j - 1)];
            u.push(pick(up, uf, op.a_at(j) == zero, j)?);
        }
        return Ok(SplittingField {
            lo,
            hi,
            u,
            s,
            provenance: Provenance::GreensColumns,
            burn_in: None,
            kernel_sites: 0,
        });
    }
}

/// Invariance residual of the field; `Err(j)` when `B(j)` annihilates `u(j)`.
pub fn verify_invariance(seq: &MatSequence, field: &SplittingField) -> std::result::Result<f64, i64> {
    let mut worst = 0.0f64;
    for j in field.lo..field.hi {
        let b = seq.get(j);
        let nb = b.norm();
        let bu = b.apply(&field.u_at(j).rep());
        if vnorm(&bu) <= ZERO_IMAGE_TOL * nb || vnorm(&bu) == 0.0 {
            return Err(j);
        }
        let pu = ProjPoint::from_vector(bu).map_err(|_| j)?;
        worst = worst.max(chordal_dist(&pu, &field.u_at(j + 1)));
        let bs = b.apply(&field.s_at(j).rep());
        if vnorm(&bs) > ZERO_IMAGE_TOL * nb {
            let ps = ProjPoint::from_vector(bs).map_err(|_| j)?;
            worst = worst.max(chordal_dist(&ps, &field.s_at(j + 1)));
        }
    }
    Ok(worst)
}

/// Least `N` with `‖B_N(j)û(j)‖ > 2‖B_N(j)ŝ(j)‖` at every site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    pub n: usize,
    /// `min_j ratio − 2` at `N`.
    pub margin: f64,
    /// The same at `N + 1`.
    pub next_margin: f64,
}

/// Minimum over sites of `‖B_n û‖ / ‖B_n ŝ‖` for `n = 1..=n_max`.
pub fn domination_profile(seq: &MatSequence, field: &SplittingField, n_max: usize) -> Vec<f64> {
    let sites = (field.hi - field.lo + 1) as usize;
    let mut uv: Vec<C2> = (field.lo..=field.hi).map(|j| field.u_at(j).rep()).collect();
    let mut sv: Vec<C2> = (field.lo..=field.hi).map(|j| field.s_at(j).rep()).collect();
    let mut ulog = vec![0.0f64; sites];
    let mut slog = vec![0.0f64; sites];
    let mut szero = vec![false; sites];
    let mut uzero = vec![false; sites];
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut min_ratio = f64::INFINITY;
        for k in 0..sites {
            let j = field.lo + k as i64;
            let site = j + n as i64 - 1;
            if site > seq.data_hi() {
                continue;
            }
            let b = seq.get(site);
            let nb = b.norm();
            if !uzero[k] {
                let w = b.apply(&uv[k]);
                let nw = vnorm(&w);
                if nw <= ZERO_IMAGE_TOL * nb || nw == 0.0 {
                    uzero[k] = true;
                } else {
                    ulog[k] += nw.ln();
                    uv[k] = [w[0] / nw, w[1] / nw];
                }
            }
            if !szero[k] {
                let w = b.apply(&sv[k]);
                let nw = vnorm(&w);
                if nw <= ZERO_IMAGE_TOL * nb || nw == 0.0 {
                    szero[k] = true;
                } else {
                    slog[k] += nw.ln();
                    sv[k] = [w[0] / nw, w[1] / nw];
                }
            }
            let ratio = if uzero[k] {
                0.0
            } else if szero[k] {
                RATIO_CAP
            } else {
                (ulog[k] - slog[k]).exp().min(RATIO_CAP)
            };
            min_ratio = min_ratio.min(ratio);
        }
        out.push(min_ratio);
    }
    out
}

/// Smallest `N ≤ n_max` at which the field is dominated with factor 2.
pub fn verify_domination(seq: &MatSequence, field: &SplittingField, n_max: usize) -> Option<Domination> {
    let profile = domination_profile(seq, field, n_max + 1);
    let n = profile[..n_max].iter().position(|r| *r > LAMBDA)? + 1;
    Some(Domination { n, margin: profile[n - 1] - LAMBDA, next_margin: profile[n] - LAMBDA })
}

/// Minimum chordal distance between `u(j)` and `s(j)`.
pub fn verify_separation(field: &SplittingField) -> f64 {
    (field.lo..=field.hi)
        .map(|j| chordal_dist(&field.u_at(j), &field.s_at(j)))
        .fold(f64::INFINITY, f64::min)
}

/// `(min_j ‖B_n(j)‖, max_j ‖B_n(j)‖)` over the field window.
fn norm_range(seq: &MatSequence, lo: i64, hi: i64, n: usize) -> Result<(f64, f64)> {
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for j in lo..=hi {
        let x = cocycle_product(seq, j, n)?.norm();
        min = min.min(x);
        max = max.max(x);
    }
    Ok((min, max))
}

fn floor_profile(seq: &MatSequence, lo: i64, hi: i64, len: usize) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; len];
    for j in lo..=hi {
        let mut p = Mat2::identity();
        let mut logscale = 0.0f64;
        for (n, slot) in out.iter_mut().enumerate() {
            let site = j + n as i64;
            if site > seq.data_hi() {
                break;
            }
            p = seq.get(site).mul(&p);
            let s = p.max_abs();
            if s > 0.0 {
                p = p.scale_re(1.0 / s);
                logscale += s.ln();
            }
            let v = if s == 0.0 { 0.0 } else { (p.norm().ln() + logscale).exp() };
            *slot = slot.min(v);
        }
    }
    out
}

/// Best invariant cone found on the grid for the conjugated `N`-step cocycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub clearance: f64,
    /// `min_j |λ⁺_j|` of the conjugated products.
    pub gamma: f64,
    /// `max_j |λ⁻_j / λ⁺_j|`.
    pub contraction: f64,
    /// Largest off-diagonal entry of the conjugated products.
    pub off_diagonal: f64,
}

fn conjugated(seq: &MatSequence, field: &SplittingField, n: usize) -> Result<Vec<Mat2>> {
    let frame = |j: i64| Mat2::from_cols(&field.u_at(j).rep(), &field.s_at(j).rep());
    (field.lo..=field.hi - n as i64)
        .map(|j| {
            let dinv = frame(j + n as i64)
                .inverse()
                .ok_or_else(|| Error::Domain(format!("directions coincide at site {}", j + n as i64)))?;
            Ok(dinv.mul(&cocycle_product(seq, j, n)?).mul(&frame(j)))
        })
        .collect()
}

/// Search `(α, α′)` pairs from the grid maximizing the worst clearance of the image
/// of `D_α` under the conjugated `N`-step cocycle inside `D_α′`.
pub fn cone_certificate(seq: &MatSequence, field: &SplittingField, n: usize, alpha_grid: &[f64]) -> Option<Cone> {
    let lams = conjugated(seq, field, n).ok()?;
    if lams.is_empty() {
        return None;
    }
    let gamma = lams.iter().map(|l| l.a.norm()).fold(f64::INFINITY, f64::min);
    let contraction = lams.iter().map(|l| l.d.norm() / l.a.norm()).fold(0.0, f64::max);
    let off_diagonal = lams.iter().map(|l| l.b.norm().max(l.c.norm())).fold(0.0, f64::max);
    let mut best: Option<Cone> = None;
    for &alpha in alpha_grid {
        for &alpha_prime in alpha_grid.iter().filter(|&&x| x < alpha) {
            let mut clearance = f64::INFINITY;
            for l in &lams {
                let c = match mobius_disk_image(l, alpha) {
                    Ok(g) => contained_in_disk(&g, alpha_prime).1,
                    Err(_) => f64::NEG_INFINITY,
                };
                clearance = clearance.min(c);
                if clearance <= 0.0 {
                    break;
                }
            }
            if clearance > 0.0 && best.as_ref().is_none_or(|b| clearance > b.clearance) {
                best = Some(Cone { alpha, alpha_prime, clearance, gamma, contraction, off_diagonal });
            }
        }
    }
    best
}

/// Sup-norm radius of cocycle perturbations that keep the cone certificate valid.
///
/// A perturbation of size `ε` moves `B_N` by at most `(M + ε)^N − M^N`, the conjugated
/// products by `K_D` times that with `K_D = 4/δ_sep`, and disk images by `C·η` with
/// `C = (1+r)(2+r)/γ` as long as `η ≤ γ/(2(1+r))`, `r = α`.
pub fn stability_radius(seq: &MatSequence, field: &SplittingField, n: usize, delta_sep: f64, cone: &Cone) -> f64 {
    let r = cone.alpha;
    let small = cone.gamma / (2.0 * (1.0 + r));
    let c_big = (1.0 + r) * (2.0 + r) / cone.gamma;
    let slack = cone.clearance.min(cone.alpha_prime - cone.alpha * cone.contraction);
    if !(slack > 0.0) {
        return 0.0;
    }
    let eta = small.min(slack / c_big);
    let k_d = 4.0 / delta_sep;
    let budget = (eta - cone.off_diagonal) / k_d;
    if !(budget > 0.0) {
        return 0.0;
    }
    let m = (field.lo..=field.hi + n as i64 - 1).map(|j| seq.get(j).norm()).fold(0.0, f64::max);
    let nn = n as f64;
    // Solve (M + ε)^N − M^N = budget.
    let mn = m.powf(nn);
    if mn == 0.0 {
        return budget.powf(1.0 / nn);
    }
    m * ((budget / mn).ln_1p() / nn).exp_m1()
}

/// Run the full pipeline and report every condition that could be evaluated.
pub fn certify(seq: &MatSequence, opts: &CertifierOptions) -> DSCertificate {
    let mut cert = DSCertificate::empty();
    let fail = |cert: &mut DSCertificate, condition: Condition, reason: String| {
        if cert.verdict.is_ds() {
            cert.verdict = Verdict::Failed { condition, reason };
        }
    };
    let field = match power_directions(seq, opts) {
        Ok(f) => f,
        Err(Error::DegenerateCocycle(j)) => {
            cert.conditions[3] = Some(false);
            fail(&mut cert, Condition::NormFloor, format!("cocycle product vanishes at site {j}"));
            return cert;
        }
        Err(e) => {
            cert.conditions[1] = Some(false);
            fail(&mut cert, Condition::Domination, e.to_string());
            return cert;
        }
    };
    cert.burn_in = field.burn_in;

    match verify_invariance(seq, &field) {
        Ok(res) => {
            cert.invariance_residual = Some(res);
            cert.conditions[0] = Some(res < opts.res_max);
            if res >= opts.res_max {
                fail(&mut cert, Condition::Invariance, format!("invariance residual {res:e}"));
            }
        }
        Err(j) => {
            cert.conditions[0] = Some(false);
            fail(&mut cert, Condition::Invariance, format!("unstable direction annihilated at site {j}"));
        }
    }

    let dom = verify_domination(seq, &field, opts.n_max);
    cert.conditions[1] = Some(dom.is_some());
    match &dom {
        Some(d) => {
            cert.n = Some(d.n);
            cert.domination_margin = Some(d.margin);
            cert.next_margin = Some(d.next_margin);
        }
        None => fail(&mut cert, Condition::Domination, format!("no N ≤ {} dominates", opts.n_max)),
    }

    let sep = verify_separation(&field);
    cert.delta_sep = Some(sep);
    cert.conditions[2] = Some(sep > opts.delta_min);
    if sep <= opts.delta_min {
        fail(&mut cert, Condition::Separation, format!("directions {sep:e} apart"));
    }

    cert.floor_profile = floor_profile(seq, field.lo, field.hi, opts.floor_profile_len);
    if let Some(d) = &dom {
        match norm_range(seq, field.lo, field.hi, d.n) {
            Ok((min, max)) => {
                let ratio = if max > 0.0 { min / max } else { 0.0 };
                cert.m_n = Some(min);
                cert.floor_ratio = Some(ratio);
                cert.conditions[3] = Some(ratio > opts.floor_rel);
                if ratio <= opts.floor_rel {
                    fail(&mut cert, Condition::NormFloor, format!("norm floor ratio {ratio:e}"));
                }
            }
            Err(e) => {
                cert.conditions[3] = Some(false);
                fail(&mut cert, Condition::NormFloor, e.to_string());
            }
        }
    }

    if cert.verdict.is_ds() {
        let d = dom.expect("domination holds");
        if d.margin.max(d.next_margin) < opts.marginal_band {
            cert.verdict = Verdict::Marginal;
        }
        cert.epsilon_stability = Some(0.0);
        if let Some(cone) = cone_certificate(seq, &field, d.n, &opts.alpha_grid) {
            cert.alpha = Some(cone.alpha);
            cert.alpha_prime = Some(cone.alpha_prime);
            cert.clearance = Some(cone.clearance);
            cert.epsilon_stability = Some(stability_radius(seq, &field, d.n, sep, &cone));
        }
    }
    cert.field = Some(field);
    cert
}

/// `B^{(m,N)}(k) = B_N(kN + m)`.
pub fn subsample(seq: &MatSequence, n: usize, m: i64) -> Result<MatSequence> {
    let ni = n as i64;
    let ceil_div = |a: i64, b: i64| -(-a).div_euclid(b);
    let (lo, hi) = (ceil_div(seq.lo - m, ni), (seq.hi - m).div_euclid(ni));
    let (dlo, dhi) = (ceil_div(seq.data_lo() - m, ni), (seq.data_hi() - ni + 1 - m).div_euclid(ni));
    let values = (dlo..=dhi).map(|k| cocycle_product(seq, k * ni + m, n)).collect::<Result<Vec<_>>>()?;
    MatSequence::with_data(lo, hi, dlo, values, None)
}

/// Whether the verdict for `seq` equals the conjunction of the verdicts of its
/// `N` subsampled sequences. Returns `(agree, verdict, sub_verdicts)`.
pub fn subsample_equivalence_check(seq: &MatSequence, n: usize, opts: &CertifierOptions) -> Result<(bool, bool, Vec<bool>)> {
    let whole = certify(seq, opts).is_ds();
    let subs = (0..n as i64)
        .map(|m| subsample(seq, n, m).map(|s| certify(&s, opts).is_ds()))
        .collect::<Result<Vec<_>>>()?;
    Ok((whole == subs.iter().all(|x| *x), whole, subs))
}

/// `act` that treats the annihilated stable direction as mapping anywhere.
pub fn act_or_none(b: &Mat2, p: &ProjPoint) -> Option<ProjPoint> {
    act(b, p).ok()
}

/// `B(j) = diag(2^{−|j|}, 2^{−|j|−1})`: invariant, dominated and separated, with no norm floor.
pub fn example_vanishing_norms(lo: i64, hi: i64, pad: i64) -> Result<MatSequence> {
    MatSequence::from_fn(lo, hi, pad, |j| {
        let x = 2f64.powi(-(j.abs() as i32));
        Mat2::real(x, 0.0, 0.0, 0.5 * x)
    })
}

/// `B(j) = [[2^{2−|j|}, −3], [0, 2^{−|j+1|}]]`: invariant, dominated, with a norm floor,
/// but the invariant directions merge as `|j| → ∞`.
pub fn example_merging_directions(lo: i64, hi: i64, pad: i64) -> Result<MatSequence> {
    MatSequence::from_fn(lo, hi, pad, |j| {
        Mat2::real(2f64.powi(2 - j.abs() as i32), -3.0, 0.0, 2f64.powi(-((j + 1).abs() as i32)))
    })
}
