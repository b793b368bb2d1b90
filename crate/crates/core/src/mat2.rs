//! Complex 2×2 matrices and products along matrix sequences.

use crate::error::{Error, Result};
use crate::sphere::ProjPoint;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type C2 = [C64; 2];

/// Relative cutoff below which a determinant counts as zero.
pub const SINGULAR_TOL: f64 = 1e-13;

/// Products longer than this are accumulated in double-double arithmetic.
pub const DD_THRESHOLD: usize = 32;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn vnorm(v: &C2) -> f64 {
    v[0].norm().hypot(v[1].norm())
}

/// Orthogonal complement of a vector in ℂ².
pub fn perp(v: &C2) -> C2 {
    [-v[1].conj(), v[0].conj()]
}

/// Matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0), C64::new(d, 0.0))
    }

    pub fn identity() -> Self {
        Mat2::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Mat2::real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn diag(x: C64, y: C64) -> Self {
        Mat2::new(x, C64::new(0.0, 0.0), C64::new(0.0, 0.0), y)
    }

    /// Matrix with the given columns.
    pub fn from_cols(u: &C2, v: &C2) -> Self {
        Mat2::new(u[0], v[0], u[1], v[1])
    }

    pub fn col(&self, k: usize) -> C2 {
        if k == 0 {
            [self.a, self.c]
        } else {
            [self.b, self.d]
        }
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    pub fn adjugate(&self) -> Self {
        Mat2::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn adjoint(&self) -> Self {
        Mat2::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == C64::new(0.0, 0.0) {
            return None;
        }
        Some(self.adjugate().scale(det.inv()))
    }

    pub fn scale(&self, s: C64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn mul(&self, o: &Mat2) -> Self {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn add(&self, o: &Mat2) -> Self {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn sub(&self, o: &Mat2) -> Self {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn apply(&self, v: &C2) -> C2 {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn frobenius(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.norm().max(self.b.norm()).max(self.c.norm()).max(self.d.norm())
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d].iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest and smallest singular values.
    pub fn singular_values(&self) -> (f64, f64) {
        let f = self.max_abs();
        if f == 0.0 {
            return (0.0, 0.0);
        }
        // Eigenvalues of the Gram matrix of the rescaled matrix.
        let m = self.scale_re(1.0 / f);
        let h11 = m.a.norm_sqr() + m.c.norm_sqr();
        let h22 = m.b.norm_sqr() + m.d.norm_sqr();
        let h12 = (m.a.conj() * m.b + m.c.conj() * m.d).norm();
        let lam = 0.5 * (h11 + h22) + (0.5 * (h11 - h22)).hypot(h12);
        let s1 = lam.sqrt();
        let s2 = (m.det().norm() / s1).min(s1);
        (s1 * f, s2 * f)
    }

    /// Operator (spectral) norm.
    pub fn norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Singular when `|det| < SINGULAR_TOL · max(1, ‖M‖²)`.
    pub fn is_singular(&self) -> bool {
        let n = self.norm();
        self.det().norm() < SINGULAR_TOL * (n * n).max(1.0)
    }

    pub fn dist(&self, o: &Mat2) -> f64 {
        self.sub(o).norm()
    }
}

/// Singular value decomposition `M = s1·u1·v1* + s2·u2·v2*`.
#[derive(Debug, Clone, Copy)]
pub struct Svd2 {
    pub s1: f64,
    pub s2: f64,
    /// Left singular vectors, top first.
    pub u: [C2; 2],
    /// Right singular vectors, top first.
    pub v: [C2; 2],
}

impl Svd2 {
    pub fn top_right(&self) -> ProjPoint {
        ProjPoint::from_unit(self.v[0])
    }

    pub fn top_left(&self) -> ProjPoint {
        ProjPoint::from_unit(self.u[0])
    }

    /// Least right-singular direction, the orthogonal complement of the top one.
    pub fn bottom_right(&self) -> ProjPoint {
        ProjPoint::from_unit(self.v[1])
    }

    pub fn reconstruct(&self) -> Mat2 {
        let outer = |x: &C2, y: &C2, s: f64| {
            Mat2::new(
                x[0] * y[0].conj() * s,
                x[0] * y[1].conj() * s,
                x[1] * y[0].conj() * s,
                x[1] * y[1].conj() * s,
            )
        };
        outer(&self.u[0], &self.v[0], self.s1).add(&outer(&self.u[1], &self.v[1], self.s2))
    }
}

fn unit(v: C2) -> C2 {
    let n = vnorm(&v);
    [v[0] / n, v[1] / n]
}

pub fn svd2(m: &Mat2) -> Svd2 {
    let e1 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let (s1, s2) = m.singular_values();
    if s1 == 0.0 {
        return Svd2 { s1, s2, u: [e1, perp(&e1)], v: [e1, perp(&e1)] };
    }
    let ms = m.scale_re(1.0 / m.max_abs());
    let h = ms.adjoint().mul(&ms);
    let half = 0.5 * (h.a.re - h.d.re);
    let rad = half.hypot(h.b.norm());
    // Top eigenvector of the Gram matrix, taken from its better-conditioned row.
    let v1 = if rad == 0.0 {
        e1
    } else if half >= 0.0 {
        unit([C64::new(half + rad, 0.0), h.b.conj()])
    } else {
        unit([h.b, C64::new(rad - half, 0.0)])
    };
    let v2 = perp(&v1);
    let u1 = unit(m.apply(&v1));
    let w = m.apply(&v2);
    let u2 = if s2 > 0.0 && (vnorm(&w) / s2 - 1.0).abs() < 1e-6 {
        unit(w)
    } else {
        perp(&u1)
    };
    Svd2 { s1, s2, u: [u1, u2], v: [v1, v2] }
}

/// Double-double arithmetic for long products.
mod dd {
    #[derive(Clone, Copy, Debug, Default)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    impl Dd {
        pub fn from(x: f64) -> Self {
            Dd { hi: x, lo: 0.0 }
        }

        pub fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let e = e + self.lo + o.lo;
            let (hi, lo) = two_sum(s, e);
            Dd { hi, lo }
        }

        pub fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }

        /// Product with a plain double.
        pub fn mul_f(self, x: f64) -> Dd {
            let (p, e) = two_prod(self.hi, x);
            let e = e + self.lo * x;
            let (hi, lo) = two_sum(p, e);
            Dd { hi, lo }
        }
    }

    #[derive(Clone, Copy, Debug, Default)]
    pub struct Cdd {
        pub re: Dd,
        pub im: Dd,
    }

    impl Cdd {
        pub fn from(z: num_complex::Complex64) -> Self {
            Cdd { re: Dd::from(z.re), im: Dd::from(z.im) }
        }

        pub fn add(self, o: Cdd) -> Cdd {
            Cdd { re: self.re.add(o.re), im: self.im.add(o.im) }
        }

        /// `z · self` for a plain complex `z`.
        pub fn lmul(self, z: num_complex::Complex64) -> Cdd {
            let re = self.re.mul_f(z.re).add(self.im.mul_f(z.im).neg());
            let im = self.im.mul_f(z.re).add(self.re.mul_f(z.im));
            Cdd { re, im }
        }

        pub fn to_c64(self) -> num_complex::Complex64 {
            num_complex::Complex64::new(self.re.hi + self.re.lo, self.im.hi + self.im.lo)
        }
    }
}

/// `B · P` with `P` held in double-double.
fn lmul_dd(b: &Mat2, p: &[dd::Cdd; 4]) -> [dd::Cdd; 4] {
    [
        p[0].lmul(b.a).add(p[2].lmul(b.b)),
        p[1].lmul(b.a).add(p[3].lmul(b.b)),
        p[0].lmul(b.c).add(p[2].lmul(b.d)),
        p[1].lmul(b.c).add(p[3].lmul(b.d)),
    ]
}

/// Values of a matrix sequence on a data range that contains the working window.
///
/// Indices outside the data range hold the nearest stored value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatSequence {
    pub lo: i64,
    pub hi: i64,
    data_lo: i64,
    values: Vec<Mat2>,
    pub sup_bound: f64,
}

impl MatSequence {
    /// Sequence on `[lo, hi]` with no values beyond the window.
    pub fn new(lo: i64, hi: i64, values: Vec<Mat2>) -> Result<Self> {
        Self::with_data(lo, hi, lo, values, None)
    }

    /// Sequence whose stored values start at `data_lo ≤ lo` and extend at least to `hi`.
    pub fn with_data(
        lo: i64,
        hi: i64,
        data_lo: i64,
        values: Vec<Mat2>,
        sup_bound: Option<f64>,
    ) -> Result<Self> {
        let data_hi = data_lo + values.len() as i64 - 1;
        if lo > hi || data_lo > lo || data_hi < hi {
            return Err(Error::Range { lo, hi, data_lo, data_hi });
        }
        if let Some(k) = values.iter().position(|m| !m.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry at index {}", data_lo + k as i64)));
        }
        let sup = values.iter().map(Mat2::norm).fold(0.0, f64::max);
        let sup_bound = match sup_bound {
            Some(m) if m >= sup => m,
            Some(m) => {
                return Err(Error::Domain(format!("sup bound {m} below measured norm {sup}")))
            }
            None => sup,
        };
        Ok(MatSequence { lo, hi, data_lo, values, sup_bound })
    }

    /// Sequence on `[lo, hi]` sampled from `f` with `pad` extra sites on each side.
    pub fn from_fn(lo: i64, hi: i64, pad: i64, f: impl Fn(i64) -> Mat2) -> Result<Self> {
        let values = (lo - pad..=hi + pad).map(f).collect();
        Self::with_data(lo, hi, lo - pad, values, None)
    }

    pub fn constant(lo: i64, hi: i64, pad: i64, m: Mat2) -> Result<Self> {
        Self::from_fn(lo, hi, pad, |_| m)
    }

    pub fn data_lo(&self) -> i64 {
        self.data_lo
    }

    pub fn data_hi(&self) -> i64 {
        self.data_lo + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, j: i64) -> Mat2 {
        let k = (j - self.data_lo).clamp(0, self.values.len() as i64 - 1);
        self.values[k as usize]
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    /// Largest factor norm over the stored data.
    pub fn measured_sup(&self) -> f64 {
        self.values.iter().map(Mat2::norm).fold(0.0, f64::max)
    }

    fn check(&self, lo: i64, hi: i64) -> Result<()> {
        if lo < self.data_lo || hi > self.data_hi() {
            return Err(Error::Range { lo, hi, data_lo: self.data_lo, data_hi: self.data_hi() });
        }
        Ok(())
    }

    /// Same window and data with every value replaced by `f(j, B(j))`.
    pub fn map(&self, f: impl Fn(i64, &Mat2) -> Mat2) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, m)| f(self.data_lo + k as i64, m))
            .collect();
        Self::with_data(self.lo, self.hi, self.data_lo, values, None)
    }

    /// Sequence restricted to a narrower window, keeping all data.
    pub fn with_window(&self, lo: i64, hi: i64) -> Result<Self> {
        Self::with_data(lo, hi, self.data_lo, self.values.clone(), Some(self.sup_bound))
    }
}

/// `B_n(j) = B(j+n−1)⋯B(j)`, identity for `n = 0`.
pub fn cocycle_product(seq: &MatSequence, j: i64, n: usize) -> Result<Mat2> {
    if n == 0 {
        return Ok(Mat2::identity());
    }
    seq.check(j, j + n as i64 - 1)?;
    if n <= DD_THRESHOLD {
        let mut p = seq.get(j);
        for k in 1..n as i64 {
            p = seq.get(j + k).mul(&p);
        }
        return Ok(p);
    }
    let first = seq.get(j);
    let mut p = [
        dd::Cdd::from(first.a),
        dd::Cdd::from(first.b),
        dd::Cdd::from(first.c),
        dd::Cdd::from(first.d),
    ];
    for k in 1..n as i64 {
        p = lmul_dd(&seq.get(j + k), &p);
    }
    Ok(Mat2::new(p[0].to_c64(), p[1].to_c64(), p[2].to_c64(), p[3].to_c64()))
}

/// `B_{−n}(j) = B(j−n)^{-1}⋯B(j−1)^{-1}`.
pub fn backward_product(seq: &MatSequence, j: i64, n: usize) -> Result<Mat2> {
    if n == 0 {
        return Err(Error::Domain("backward product needs n ≥ 1".into()));
    }
    seq.check(j - n as i64, j - 1)?;
    let mut p = Mat2::identity();
    for k in (j - n as i64)..j {
        let b = seq.get(k);
        if b.is_singular() {
            return Err(Error::SingularFactor(k));
        }
        let inv = b.inverse().ok_or(Error::SingularFactor(k))?;
        p = p.mul(&inv);
    }
    Ok(p)
}

/// Minimum of `‖B_n(j)‖` over window sites `j` whose product stays in the window.
pub fn norm_floor(seq: &MatSequence, n: usize) -> Result<f64> {
    if n == 0 || n > seq.len() {
        return Err(Error::Domain(format!("n = {n} outside 1..={}", seq.len())));
    }
    let mut best = f64::INFINITY;
    for j in seq.lo..=seq.hi - n as i64 + 1 {
        best = best.min(cocycle_product(seq, j, n)?.norm());
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_mat(rng: &mut ChaCha8Rng) -> Mat2 {
        let mut z = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        Mat2::new(z(), z(), z(), z())
    }

    fn rand_seq(rng: &mut ChaCha8Rng, len: i64) -> MatSequence {
        let v: Vec<Mat2> = (0..len).map(|_| rand_mat(rng)).collect();
        MatSequence::new(0, len - 1, v).unwrap()
    }

    #[test]
    fn product_of_nothing_is_identity() {
        let s = MatSequence::constant(0, 5, 0, Mat2::real(1.0, 2.0, 3.0, 4.0)).unwrap();
        assert_eq!(cocycle_product(&s, 2, 0).unwrap(), Mat2::identity());
    }

    #[test]
    fn diagonal_powers() {
        let s = MatSequence::constant(0, 5, 0, Mat2::real(2.0, 0.0, 0.0, 0.5)).unwrap();
        let p = cocycle_product(&s, 0, 3).unwrap();
        assert_eq!(p, Mat2::real(8.0, 0.0, 0.0, 0.125));
    }

    #[test]
    fn product_stitching() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = rand_seq(&mut rng, 10);
        let p5 = cocycle_product(&s, 1, 5).unwrap();
        let fold = (1..6).fold(Mat2::identity(), |acc, k| s.get(k).mul(&acc));
        let stitched = cocycle_product(&s, 4, 2).unwrap().mul(&cocycle_product(&s, 1, 3).unwrap());
        assert!(p5.dist(&fold) < 1e-14);
        assert!(p5.dist(&stitched) < 1e-14);
    }

    #[test]
    fn long_products_use_extended_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = rand_seq(&mut rng, 80);
        let p = cocycle_product(&s, 0, 80).unwrap();
        let plain = (0..80).fold(Mat2::identity(), |acc, k| s.get(k).mul(&acc));
        assert!(p.dist(&plain) <= 1e-12 * p.norm().max(plain.norm()));
    }

    #[test]
    fn range_errors() {
        let s = MatSequence::constant(0, 5, 0, Mat2::identity()).unwrap();
        assert!(matches!(cocycle_product(&s, 3, 4), Err(Error::Range { .. })));
        assert!(matches!(cocycle_product(&s, -1, 1), Err(Error::Range { .. })));
    }

    #[test]
    fn backward_inverts_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = rand_seq(&mut rng, 20);
        for n in 1..=8 {
            let f = cocycle_product(&s, 4, n).unwrap();
            let b = backward_product(&s, 4 + n as i64, n).unwrap();
            assert!(b.mul(&f).dist(&Mat2::identity()) < 1e-12 * f.norm() * b.norm());
        }
        let id = MatSequence::constant(0, 9, 0, Mat2::identity()).unwrap();
        assert_eq!(backward_product(&id, 6, 4).unwrap(), Mat2::identity());
    }

    #[test]
    fn backward_names_singular_factor() {
        let mut v = vec![Mat2::identity(); 8];
        v[4] = Mat2::real(1.0, 2.0, 2.0, 4.0);
        let s = MatSequence::new(0, 7, v).unwrap();
        assert_eq!(backward_product(&s, 6, 3), Err(Error::SingularFactor(4)));
    }

    #[test]
    fn svd_examples() {
        let s = svd2(&Mat2::identity());
        assert!((s.s1 - 1.0).abs() < 1e-15 && (s.s2 - 1.0).abs() < 1e-15);
        let s = svd2(&Mat2::real(3.0, 0.0, 0.0, 0.0));
        assert!((s.s1 - 3.0).abs() < 1e-15 && s.s2 == 0.0);
        assert_eq!(s.top_right(), ProjPoint::e1());
    }

    #[test]
    fn svd_reconstructs_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let m = rand_mat(&mut rng);
            let s = svd2(&m);
            assert!(s.reconstruct().dist(&m) < 1e-12 * m.norm());
            assert!((s.s1 * s.s2 - m.det().norm()).abs() <= 1e-12 * s.s1 * s.s1);
            assert!(s.s1 * s.s1 >= m.det().norm() * (1.0 - 1e-14));
        }
    }

    #[test]
    fn svd_of_rank_one_and_tiny_gap() {
        let m = Mat2::real(1.0, 2.0, 2.0, 4.0);
        let s = svd2(&m);
        assert!(s.s2 < 1e-15 && (s.s1 - 5.0).abs() < 1e-14);
        assert!(s.reconstruct().dist(&m) < 1e-14);
        let m = Mat2::real(1.0, 0.0, 0.0, 1.0 + 1e-12);
        assert!(svd2(&m).reconstruct().dist(&m) < 1e-14);
    }

    #[test]
    fn norm_floor_examples() {
        let ex1 = MatSequence::from_fn(-20, 20, 0, |j| {
            let x = 2f64.powi(-(j.abs() as i32));
            Mat2::real(x, 0.0, 0.0, x / 2.0)
        })
        .unwrap();
        let f = norm_floor(&ex1, 1).unwrap();
        assert_eq!(f, 2f64.powi(-20));
        let id = MatSequence::constant(0, 9, 0, Mat2::identity()).unwrap();
        assert_eq!(norm_floor(&id, 3).unwrap(), 1.0);
        let free = MatSequence::constant(0, 20, 0, Mat2::real(3.0, -1.0, 1.0, 0.0)).unwrap();
        let b4 = (0..4).fold(Mat2::identity(), |acc, _| Mat2::real(3.0, -1.0, 1.0, 0.0).mul(&acc));
        assert!((norm_floor(&free, 4).unwrap() - b4.norm()).abs() < 1e-12 * b4.norm());
    }

    #[test]
    fn singularity_tolerance() {
        assert!(Mat2::real(1.0, 2.0, 2.0, 4.0).is_singular());
        assert!(!Mat2::real(1.0, 0.0, 0.0, 1e-10).is_singular());
        assert!(Mat2::real(1.0, 0.0, 0.0, 1e-14).is_singular());
        assert!(Mat2::zero().is_singular());
    }

    #[test]
    fn sup_bound_is_verified() {
        let v = vec![Mat2::real(3.0, 0.0, 0.0, 1.0); 3];
        assert!(MatSequence::with_data(0, 2, 0, v.clone(), Some(2.0)).is_err());
        assert_eq!(MatSequence::with_data(0, 2, 0, v, Some(4.0)).unwrap().sup_bound, 4.0);
    }
}
