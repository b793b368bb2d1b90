//! Tridiagonal kernels: Sturm counts, bisection, inverse iteration, pivoted LU.

use num_complex::Complex64 as C64;

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `d` and squared off-diagonal `e2`.
pub fn sturm_count(d: &[f64], e2: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let coupling = if i == 0 { 0.0 } else { e2[i - 1] / q };
        q = d[i] - x - coupling;
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn gershgorin(d: &[f64], e: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i < e.len() { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (lo, hi)
}

/// The `k`-th smallest eigenvalue by bisection on the Sturm count.
pub fn kth_eigenvalue(d: &[f64], e: &[f64], e2: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(d, e);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    lo -= 1e-12 * scale;
    hi += 1e-12 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * scale {
            break;
        }
        if sturm_count(d, e2, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All eigenvalues, ascending. Off-diagonal entries must be real.
pub fn eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    if d.len() == 1 {
        return vec![d[0]];
    }
    let e2: Vec<f64> = e.iter().map(|x| x * x).collect();
    (0..d.len()).map(|k| kth_eigenvalue(d, e, &e2, k)).collect()
}

/// Eigenvalues nearest to `x` from below and above, if present.
pub fn bracketing_eigenvalues(d: &[f64], e: &[f64], x: f64) -> (Option<f64>, Option<f64>) {
    let e2: Vec<f64> = e.iter().map(|y| y * y).collect();
    let k = sturm_count(d, &e2, x);
    let below = (k > 0).then(|| kth_eigenvalue(d, e, &e2, k - 1));
    let above = (k < d.len()).then(|| kth_eigenvalue(d, e, &e2, k));
    (below, above)
}

/// Unit eigenvector for the eigenvalue `lam` by inverse iteration.
pub fn eigenvector(d: &[f64], e: &[f64], lam: f64) -> Vec<f64> {
    let n = d.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = d.iter().chain(e.iter()).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let shift = lam + 1e-10 * scale;
    let dc: Vec<C64> = d.iter().map(|x| C64::new(x - shift, 0.0)).collect();
    let ec: Vec<C64> = e.iter().map(|x| C64::new(*x, 0.0)).collect();
    let lu = TridiagLu::factor(&ec, &dc, &ec);
    let mut x: Vec<C64> = (0..n).map(|i| C64::new(1.0 + 0.01 * ((i * 7919) % 13) as f64, 0.0)).collect();
    for _ in 0..3 {
        lu.solve(&mut x);
        let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(nrm.is_finite() && nrm > 0.0) {
            break;
        }
        x.iter_mut().for_each(|z| *z /= nrm);
    }
    x.into_iter().map(|z| z.re).collect()
}

/// LU factorization with partial pivoting of a complex tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagLu {
    dl: Vec<C64>,
    d: Vec<C64>,
    du: Vec<C64>,
    du2: Vec<C64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    /// Factor the matrix with sub-diagonal `dl`, diagonal `d`, super-diagonal `du`.
    pub fn factor(dl: &[C64], d: &[C64], du: &[C64]) -> Self {
        let n = d.len();
        let mut dl = dl.to_vec();
        let mut d = d.to_vec();
        let mut du = du.to_vec();
        let zero = C64::new(0.0, 0.0);
        let mut du2 = vec![zero; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i] != zero {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        TridiagLu { dl, d, du, du2, swapped }
    }

    /// Smallest pivot modulus, zero when the matrix is singular.
    pub fn min_pivot(&self) -> f64 {
        self.d.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, b: &mut [C64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                v -= self.du2[i] * b[i + 2];
            }
            b[i] = v / self.d[i];
        }
    }
}
