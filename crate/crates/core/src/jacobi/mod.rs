//! Jacobi operators, Dirichlet truncations, characteristic polynomials and cocycles.

mod greens;
mod spectrum;
pub mod tridiag;

pub use greens::{greens_column, normalization_identity_check, row_identity_check, GreensData, GreensSolver};
pub use spectrum::{dist_to_spectral_edge, dist_to_spectrum, spectrum, SizeSpectrum, SpectrumApprox};

use crate::error::{Error, Result};
use crate::mat2::{Mat2, MatSequence};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Sites stored beyond the window when building cocycle sequences.
pub const COCYCLE_HALO: i64 = 1024;

/// Relative tolerance for treating a loaded off-diagonal entry as zero.
pub const ZERO_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extension {
    Periodic,
    Constant,
    Zero,
}

/// `(Jψ)(n) = conj(a_{n−1})ψ(n−1) + a_n ψ(n+1) + b_n ψ(n)` on a window, extended
/// beyond its stored data by the extension policy.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiOperator {
    pub lo: i64,
    pub hi: i64,
    data_lo: i64,
    a: Vec<C64>,
    b: Vec<f64>,
    pub extension: Extension,
    bound: f64,
    zero_tol: f64,
}

/// On-disk operator format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    pub window: [i64; 2],
    pub a: Vec<[f64; 2]>,
    pub b: Vec<f64>,
    pub extension: Extension,
}

impl JacobiOperator {
    /// Operator from window data. Entries of `a` below `ZERO_TOL·M` count as zero.
    pub fn new(lo: i64, hi: i64, a: Vec<C64>, b: Vec<f64>, extension: Extension) -> Result<Self> {
        let mut op = Self::build(lo, hi, lo, a, b, extension, None)?;
        op.zero_tol = ZERO_TOL * op.bound;
        Ok(op)
    }

    /// Operator sampled from functions on `[lo − halo, hi + halo]`, with exact zeros.
    pub fn from_fn(
        lo: i64,
        hi: i64,
        halo: i64,
        a: impl Fn(i64) -> C64,
        b: impl Fn(i64) -> f64,
        extension: Extension,
        bound: Option<f64>,
    ) -> Result<Self> {
        let av = (lo - halo..=hi + halo).map(&a).collect();
        let bv = (lo - halo..=hi + halo).map(&b).collect();
        Self::build(lo, hi, lo - halo, av, bv, extension, bound)
    }

    fn build(
        lo: i64,
        hi: i64,
        data_lo: i64,
        a: Vec<C64>,
        b: Vec<f64>,
        extension: Extension,
        bound: Option<f64>,
    ) -> Result<Self> {
        if lo > hi {
            return Err(Error::Input(format!("empty window [{lo}, {hi}]")));
        }
        if a.len() != b.len() || data_lo > lo || data_lo + (a.len() as i64) - 1 < hi {
            return Err(Error::Input(format!(
                "data of lengths {}/{} starting at {data_lo} do not cover [{lo}, {hi}]",
                a.len(),
                b.len()
            )));
        }
        if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) || b.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("non-finite coefficient".into()));
        }
        let sup_a = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let sup_b = b.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let measured = sup_a + sup_b;
        let bound = match bound {
            Some(m) if m >= measured => m,
            Some(m) => return Err(Error::Input(format!("bound {m} below measured {measured}"))),
            None if measured > 0.0 => measured,
            None => 1.0,
        };
        Ok(JacobiOperator { lo, hi, data_lo, a, b, extension, bound, zero_tol: 0.0 })
    }

    /// Free Laplacian `a ≡ 1, b ≡ 0`.
    pub fn free(lo: i64, hi: i64) -> Self {
        Self::constant(lo, hi, C64::new(1.0, 0.0), 0.0)
    }

    pub fn constant(lo: i64, hi: i64, a: C64, b: f64) -> Self {
        let n = (hi - lo + 1) as usize;
        Self::build(lo, hi, lo, vec![a; n], vec![b; n], Extension::Constant, None).expect("valid window")
    }

    /// Periodic operator with `a_j = a[(j − lo) mod p]` and likewise for `b`.
    pub fn periodic(lo: i64, hi: i64, a: &[C64], b: &[f64]) -> Result<Self> {
        let p = a.len() as i64;
        if p == 0 || b.len() as i64 != p {
            return Err(Error::Input("period patterns must be non-empty and of equal length".into()));
        }
        let idx = |j: i64| (j - lo).rem_euclid(p) as usize;
        Self::from_fn(lo, hi, 0, |j| a[idx(j)], |j| b[idx(j)], Extension::Periodic, None)
    }

    pub fn from_file(f: &OperatorFile) -> Result<Self> {
        let [lo, hi] = f.window;
        if f.a.len() as i64 != hi - lo + 1 {
            return Err(Error::Input(format!(
                "window [{lo}, {hi}] needs {} entries, got {}",
                hi - lo + 1,
                f.a.len()
            )));
        }
        let a = f.a.iter().map(|x| C64::new(x[0], x[1])).collect();
        Self::new(lo, hi, a, f.b.clone(), f.extension)
    }

    /// Window coefficients in file form.
    pub fn to_file(&self) -> OperatorFile {
        let range = (self.lo - self.data_lo) as usize..=(self.hi - self.data_lo) as usize;
        OperatorFile {
            window: [self.lo, self.hi],
            a: self.a[range.clone()].iter().map(|z| [z.re, z.im]).collect(),
            b: self.b[range].to_vec(),
            extension: self.extension,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: OperatorFile = serde_json::from_str(s).map_err(|e| Error::Input(e.to_string()))?;
        Self::from_file(&f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("operator serializes")
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Upper bound `M ≥ sup|a| + sup|b|` over the stored data.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    fn data_hi(&self) -> i64 {
        self.data_lo + self.a.len() as i64 - 1
    }

    /// Index into stored data after applying the extension, `None` for zero padding.
    fn slot(&self, j: i64) -> Option<usize> {
        if j >= self.data_lo && j <= self.data_hi() {
            return Some((j - self.data_lo) as usize);
        }
        let jj = match self.extension {
            Extension::Periodic => self.lo + (j - self.lo).rem_euclid(self.hi - self.lo + 1),
            Extension::Constant => j.clamp(self.lo, self.hi),
            Extension::Zero => return None,
        };
        Some((jj - self.data_lo) as usize)
    }

    pub fn a_at(&self, j: i64) -> C64 {
        match self.slot(j) {
            Some(k) if self.a[k].norm() > self.zero_tol => self.a[k],
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn b_at(&self, j: i64) -> f64 {
        self.slot(j).map_or(0.0, |k| self.b[k])
    }

    /// Sites in `[lo, hi]` where `a` vanishes.
    pub fn zeros_of_a(&self, lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi).filter(|&j| self.a_at(j) == C64::new(0.0, 0.0)).collect()
    }

    /// `(Jψ)(j)`.
    pub fn apply(&self, psi: impl Fn(i64) -> C64, j: i64) -> C64 {
        self.a_at(j - 1).conj() * psi(j - 1) + self.a_at(j) * psi(j + 1) + psi(j) * self.b_at(j)
    }

    /// `B^E(j) = [[E − b_j, −conj(a_{j−1})], [a_j, 0]]`.
    pub fn cocycle_at(&self, e: C64, j: i64) -> Mat2 {
        Mat2::new(e - self.b_at(j), -self.a_at(j - 1).conj(), self.a_at(j), C64::new(0.0, 0.0))
    }

    /// The cocycle sequence over the window plus `COCYCLE_HALO` sites on each side.
    pub fn cocycle_map(&self, e: C64) -> MatSequence {
        self.cocycle_map_with_halo(e, COCYCLE_HALO)
    }

    pub fn cocycle_map_with_halo(&self, e: C64, halo: i64) -> MatSequence {
        let values = (self.lo - halo..=self.hi + halo).map(|j| self.cocycle_at(e, j)).collect();
        MatSequence::with_data(self.lo, self.hi, self.lo - halo, values, Some(e.norm() + 2.0 * self.bound))
            .expect("cocycle bound dominates factor norms")
    }

    /// Dirichlet truncation to the sites `j1+1 ..= j2`.
    pub fn truncation(&self, j1: i64, j2: i64) -> Truncation {
        Truncation::new(self, j1, j2)
    }

    /// `p_N(j, E) = det(E − J_{[j, j+N)})` by the three-term recursion.
    pub fn char_poly(&self, j: i64, n: i64, e: C64) -> C64 {
        if n < 0 {
            return C64::new(0.0, 0.0);
        }
        let mut prev = C64::new(0.0, 0.0);
        let mut cur = C64::new(1.0, 0.0);
        for k in 1..=n {
            let site = j + n - k;
            let next = (e - self.b_at(site)) * cur - prev * self.a_at(site).norm_sqr();
            prev = cur;
            cur = next;
        }
        cur
    }

    /// `B_N(j)` assembled from characteristic polynomials of truncations.
    pub fn cocycle_via_charpoly(&self, j: i64, n: i64, e: C64) -> Mat2 {
        let am = self.a_at(j - 1).conj();
        let an = self.a_at(j + n - 1);
        Mat2::new(
            self.char_poly(j, n, e),
            -am * self.char_poly(j + 1, n - 1, e),
            an * self.char_poly(j, n - 1, e),
            -am * an * self.char_poly(j + 1, n - 2, e),
        )
    }

    /// Solution of `Jψ = Eψ` on `[j0 − 1, j0 + count]` from `(ψ(j0 − 1), ψ(j0))`.
    pub fn solve_forward(&self, e: C64, j0: i64, init: (C64, C64), count: usize) -> Result<Vec<C64>> {
        let mut out = vec![init.0, init.1];
        for k in 0..count as i64 {
            let n = j0 + k;
            let an = self.a_at(n);
            if an == C64::new(0.0, 0.0) {
                return Err(Error::SingularFactor(n));
            }
            let m = out.len();
            let next = ((e - self.b_at(n)) * out[m - 1] - self.a_at(n - 1).conj() * out[m - 2]) / an;
            out.push(next);
        }
        Ok(out)
    }

    /// Gauge-corrected Wronskian `a_m·e^{2iΘ_m}·(φ(m+1)ψ(m) − φ(m)ψ(m+1))` of two
    /// solutions given on `[base, …]`, where `Θ_m` sums `arg a_k` over `base ≤ k < m`.
    /// For real `a` the phase factor is one.
    pub fn modified_wronskian(&self, phi: &[C64], psi: &[C64], base: i64, m: i64) -> C64 {
        let k = (m - base) as usize;
        let theta: f64 = (base..m).map(|s| self.a_at(s).arg()).sum();
        self.a_at(m) * C64::from_polar(1.0, 2.0 * theta) * (phi[k + 1] * psi[k] - phi[k] * psi[k + 1])
    }
}

/// Hermitian tridiagonal restriction to `(j1, j2]` with Dirichlet boundary conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub j1: i64,
    pub j2: i64,
    pub diag: Vec<f64>,
    /// `off[k] = a` between sites `j1+1+k` and `j1+2+k`.
    pub off: Vec<C64>,
    /// Coupling dropped at the left and right cuts.
    pub cut_couplings: (C64, C64),
}

impl Truncation {
    pub fn new(op: &JacobiOperator, j1: i64, j2: i64) -> Self {
        assert!(j2 > j1, "empty truncation");
        let diag = (j1 + 1..=j2).map(|j| op.b_at(j)).collect();
        let off = (j1 + 1..j2).map(|j| op.a_at(j)).collect();
        Truncation { j1, j2, diag, off, cut_couplings: (op.a_at(j1), op.a_at(j2)) }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Dense matrix, row-major; `J(n, n+1) = a_n`, `J(n+1, n) = conj(a_n)`.
    pub fn dense(&self) -> Vec<Vec<C64>> {
        let n = self.len();
        let mut m = vec![vec![C64::new(0.0, 0.0); n]; n];
        for i in 0..n {
            m[i][i] = C64::new(self.diag[i], 0.0);
            if i + 1 < n {
                m[i][i + 1] = self.off[i];
                m[i + 1][i] = self.off[i].conj();
            }
        }
        m
    }

    pub fn is_hermitian(&self) -> bool {
        let m = self.dense();
        (0..m.len()).all(|i| (0..m.len()).all(|k| m[i][k] == m[k][i].conj()))
    }

    /// Real symmetric form after the diagonal unitary gauge `a ↦ |a|`.
    pub fn gauged(&self) -> (Vec<f64>, Vec<f64>) {
        (self.diag.clone(), self.off.iter().map(|z| z.norm()).collect())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let (d, e) = self.gauged();
        tridiag::eigenvalues(&d, &e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{c, cocycle_product};

    fn sample_op() -> JacobiOperator {
        let a: Vec<C64> = (0..12).map(|k| c(1.0 + 0.1 * k as f64, 0.3 - 0.05 * k as f64)).collect();
        let b: Vec<f64> = (0..12).map(|k| (k as f64 * 0.7).sin()).collect();
        JacobiOperator::new(0, 11, a, b, Extension::Periodic).unwrap()
    }

    #[test]
    fn apply_examples() {
        let op = JacobiOperator::free(-10, 10);
        let delta0 = |j: i64| if j == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) };
        assert_eq!(op.apply(delta0, 1), c(1.0, 0.0));
        let mut a = vec![c(1.0, 0.0); 5];
        a[1] = c(0.0, 0.0);
        a[2] = c(0.0, 0.0);
        let op = JacobiOperator::new(0, 4, a, vec![0.5, 1.5, -2.0, 0.0, 1.0], Extension::Zero).unwrap();
        let psi = |j: i64| c(j as f64 + 1.0, 0.5);
        assert_eq!(op.apply(psi, 2), psi(2) * -2.0);
    }

    #[test]
    fn cocycle_examples() {
        let op = JacobiOperator::free(0, 20);
        let seq = op.cocycle_map(c(3.0, 0.0));
        for j in -5..25 {
            assert_eq!(seq.get(j), Mat2::real(3.0, -1.0, 1.0, 0.0));
        }
        let mut a = vec![c(1.0, 0.0); 10];
        a[4] = c(0.0, 0.0);
        let op = JacobiOperator::new(0, 9, a, vec![0.0; 10], Extension::Constant).unwrap();
        let bj = op.cocycle_at(c(0.7, 0.1), 4);
        assert_eq!((bj.c, bj.d), (c(0.0, 0.0), c(0.0, 0.0)));
    }

    #[test]
    fn extension_policies() {
        let op = JacobiOperator::periodic(0, 5, &[c(1.0, 0.0), c(2.0, 0.0)], &[0.0, 1.5]).unwrap();
        assert_eq!(op.a_at(-1), c(2.0, 0.0));
        assert_eq!(op.b_at(7), 1.5);
        let z = JacobiOperator::new(0, 2, vec![c(1.0, 0.0); 3], vec![1.0; 3], Extension::Zero).unwrap();
        assert_eq!(z.a_at(3), c(0.0, 0.0));
        assert_eq!(z.b_at(-1), 0.0);
    }

    #[test]
    fn charpoly_small_cases() {
        let op = JacobiOperator::free(0, 10);
        let e = c(0.3, 0.2);
        assert_eq!(op.char_poly(2, 0, e), c(1.0, 0.0));
        assert_eq!(op.char_poly(2, -1, e), c(0.0, 0.0));
        assert!((op.char_poly(2, 2, e) - (e * e - 1.0)).norm() < 1e-15);
        let s = sample_op();
        assert_eq!(s.cocycle_via_charpoly(3, 1, e), s.cocycle_at(e, 3));
    }

    #[test]
    fn charpoly_matches_products() {
        let op = sample_op();
        let e = c(0.4, -0.3);
        let seq = op.cocycle_map(e);
        for n in 1..=12 {
            let p = cocycle_product(&seq, 2, n as usize).unwrap();
            assert!(op.cocycle_via_charpoly(2, n, e).dist(&p) <= 1e-12 * p.norm());
        }
    }

    #[test]
    fn truncation_is_hermitian_and_gauge_invariant() {
        let op = sample_op();
        let t = op.truncation(1, 9);
        assert!(t.is_hermitian());
        assert_eq!(t.cut_couplings, (op.a_at(1), op.a_at(9)));
        let real = JacobiOperator::new(
            0,
            11,
            (0..12).map(|j| c(op.a_at(j).norm(), 0.0)).collect(),
            (0..12).map(|j| op.b_at(j)).collect(),
            Extension::Periodic,
        )
        .unwrap();
        for (x, y) in t.eigenvalues().iter().zip(real.truncation(1, 9).eigenvalues()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let op = sample_op();
        let s = op.to_json();
        let back = JacobiOperator::from_json(&s).unwrap();
        assert_eq!(back.to_json(), s);
        assert_eq!(back.to_file(), op.to_file());
        assert!(JacobiOperator::from_json("{\"window\": [0, 3], \"a\": [], \"b\": [], \"extension\": \"zero\"}").is_err());
    }

    #[test]
    fn loaded_tiny_couplings_are_zero() {
        let a = vec![c(1.0, 0.0), c(1e-16, 0.0), c(1.0, 0.0)];
        let op = JacobiOperator::new(0, 2, a, vec![0.0; 3], Extension::Zero).unwrap();
        assert_eq!(op.a_at(1), c(0.0, 0.0));
        assert_eq!(op.zeros_of_a(0, 2), vec![1]);
        assert!(op.to_json().contains("1e-16"));
    }

    #[test]
    fn transport_of_solutions() {
        let op = sample_op();
        let e = c(0.9, 0.0);
        let sol = op.solve_forward(e, 1, (c(0.2, 0.1), c(1.0, 0.0)), 8).unwrap();
        for k in 1..8usize {
            let j = k as i64;
            let v = op.cocycle_at(e, j).apply(&[sol[k], sol[k - 1]]);
            let w = [sol[k + 1] * op.a_at(j), sol[k] * op.a_at(j)];
            assert!((v[0] - w[0]).norm() < 1e-12 && (v[1] - w[1]).norm() < 1e-12);
        }
    }
}
