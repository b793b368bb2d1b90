use super::{tridiag, JacobiOperator};
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Energies closer than this (times `max(1, M)`) to the truncation spectrum are rejected.
pub const ILL_CONDITIONED_TOL: f64 = 1e-8;

/// Factored `J − E` on the window enlarged by `margin` sites on each side.
#[derive(Debug, Clone)]
pub struct GreensSolver<'a> {
    op: &'a JacobiOperator,
    pub energy: C64,
    pub t_lo: i64,
    pub t_hi: i64,
    lu: tridiag::TridiagLu,
    /// Distance from the energy to the truncation eigenvalues.
    pub delta: f64,
}

/// One resolvent column `g_j(n) = (J − E)^{-1}(n, j)` on a truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensData {
    pub energy: C64,
    pub j: i64,
    pub t_lo: i64,
    pub values: Vec<C64>,
    /// Least-squares decay rate of `ln|g_j(n)|` against `|n − j|` over the window.
    pub gamma_fit: Option<f64>,
    /// Largest rate for which `|g_j(n)| ≤ (2/δ)e^{−γ|n−j|}` holds on the fit range.
    pub gamma_envelope: Option<f64>,
    /// Rate `asinh(δ/(4 sup|a|))` guaranteed by the Combes–Thomas argument.
    pub gamma_ct: f64,
    pub delta: f64,
    /// `max|(J − E)g_j − δ_j| / max|g_j|`.
    pub residual: f64,
    /// Window sites used for the fit.
    pub fit_range: (i64, i64),
}

impl GreensData {
    pub fn value(&self, n: i64) -> C64 {
        let k = n - self.t_lo;
        if k < 0 || k >= self.values.len() as i64 {
            C64::new(0.0, 0.0)
        } else {
            self.values[k as usize]
        }
    }

    pub fn t_hi(&self) -> i64 {
        self.t_lo + self.values.len() as i64 - 1
    }

    /// Largest end value relative to the column maximum.
    pub fn boundary_influence(&self) -> f64 {
        let max = self.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let ends = self.values[0].norm().max(self.values[self.values.len() - 1].norm());
        ends / max
    }

    /// Whether `|g_j(n)| ≤ (2/δ)e^{−γ|n−j|}` on the fit range, for the given rate.
    pub fn decay_bound_holds(&self, gamma: f64) -> bool {
        (self.fit_range.0..=self.fit_range.1).all(|n| {
            let bound = 2.0 / self.delta * (-gamma * (n - self.j).abs() as f64).exp();
            self.value(n).norm() <= bound * (1.0 + 1e-12)
        })
    }
}

impl<'a> GreensSolver<'a> {
    pub fn new(op: &'a JacobiOperator, energy: C64, margin: i64) -> Result<Self> {
        let (t_lo, t_hi) = (op.lo - margin, op.hi + margin);
        let t = op.truncation(t_lo - 1, t_hi);
        let (d, e) = t.gauged();
        let (below, above) = tridiag::bracketing_eigenvalues(&d, &e, energy.re);
        let delta = [below, above]
            .iter()
            .flatten()
            .map(|lam| (energy - C64::new(*lam, 0.0)).norm())
            .fold(f64::INFINITY, f64::min);
        if delta < ILL_CONDITIONED_TOL * op.bound().max(1.0) {
            return Err(Error::IllConditioned { delta });
        }
        let diag: Vec<C64> = t.diag.iter().map(|b| C64::new(*b, 0.0) - energy).collect();
        let sub: Vec<C64> = t.off.iter().map(|a| a.conj()).collect();
        let lu = tridiag::TridiagLu::factor(&sub, &diag, &t.off);
        if lu.min_pivot() == 0.0 {
            return Err(Error::IllConditioned { delta: 0.0 });
        }
        Ok(GreensSolver { op, energy, t_lo, t_hi, lu, delta })
    }

    pub fn column(&self, j: i64) -> Result<GreensData> {
        if j < self.t_lo || j > self.t_hi {
            return Err(Error::Range { lo: j, hi: j, data_lo: self.t_lo, data_hi: self.t_hi });
        }
        let n = (self.t_hi - self.t_lo + 1) as usize;
        let mut g = vec![C64::new(0.0, 0.0); n];
        g[(j - self.t_lo) as usize] = C64::new(1.0, 0.0);
        self.lu.solve(&mut g);
        let residual = self.residual(&g, j);
        let fit_range = (self.op.lo.max(self.t_lo), self.op.hi.min(self.t_hi));
        let gamma_fit = fit_decay(&g, self.t_lo, j, fit_range);
        let gamma_envelope = envelope_rate(&g, self.t_lo, j, fit_range, self.delta);
        let sup_a = (self.t_lo..self.t_hi).map(|n| self.op.a_at(n).norm()).fold(0.0, f64::max);
        let gamma_ct = combes_thomas_rate(self.delta, sup_a);
        Ok(GreensData {
            energy: self.energy,
            j,
            t_lo: self.t_lo,
            values: g,
            gamma_fit,
            gamma_envelope,
            gamma_ct,
            delta: self.delta,
            residual,
            fit_range,
        })
    }

    fn residual(&self, g: &[C64], j: i64) -> f64 {
        let op = self.op;
        let at = |n: i64| {
            if n < self.t_lo || n > self.t_hi {
                C64::new(0.0, 0.0)
            } else {
                g[(n - self.t_lo) as usize]
            }
        };
        let max = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut worst = 0.0f64;
        for n in self.t_lo..=self.t_hi {
            let left = if n > self.t_lo { op.a_at(n - 1).conj() * at(n - 1) } else { C64::new(0.0, 0.0) };
            let right = if n < self.t_hi { op.a_at(n) * at(n + 1) } else { C64::new(0.0, 0.0) };
            let mut r = left + right + (C64::new(op.b_at(n), 0.0) - self.energy) * at(n);
            if n == j {
                r -= 1.0;
            }
            worst = worst.max(r.norm());
        }
        worst / max.max(f64::MIN_POSITIVE)
    }
}

/// Decay rate with prefactor `2/δ` guaranteed for an operator with couplings bounded by `sup_a`.
pub fn combes_thomas_rate(delta: f64, sup_a: f64) -> f64 {
    if sup_a == 0.0 {
        f64::INFINITY
    } else {
        (delta / (4.0 * sup_a)).asinh()
    }
}

fn envelope_rate(g: &[C64], t_lo: i64, j: i64, range: (i64, i64), delta: f64) -> Option<f64> {
    let cap = (2.0 / delta).ln();
    if g[(j - t_lo) as usize].norm().ln() > cap {
        return None;
    }
    (range.0..=range.1)
        .filter(|n| *n != j)
        .map(|n| {
            let v = g[(n - t_lo) as usize].norm();
            if v == 0.0 {
                f64::INFINITY
            } else {
                (cap - v.ln()) / (n - j).abs() as f64
            }
        })
        .min_by(f64::total_cmp)
}

fn fit_decay(g: &[C64], t_lo: i64, j: i64, range: (i64, i64)) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (range.0..=range.1)
        .filter_map(|n| {
            let v = g[(n - t_lo) as usize].norm();
            (v > 1e-250).then(|| ((n - j).abs() as f64, v.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(-sxy / sxx)
}

/// Resolvent column `g_j` on the window enlarged by `margin` sites.
pub fn greens_column(op: &JacobiOperator, energy: C64, j: i64, margin: i64) -> Result<GreensData> {
    GreensSolver::new(op, energy, margin)?.column(j)
}

/// `|conj(a_{j−1})g_j(j−1) + a_j g_j(j+1) + (b_j − E)g_j(j) − 1|`.
pub fn normalization_identity_check(op: &JacobiOperator, g: &GreensData) -> f64 {
    let j = g.j;
    (op.a_at(j - 1).conj() * g.value(j - 1) + op.a_at(j) * g.value(j + 1)
        + (C64::new(op.b_at(j), 0.0) - g.energy) * g.value(j)
        - 1.0)
        .norm()
}

/// `|a_{j−1}g_{j−1}(j) + conj(a_j)g_{j+1}(j) + (b_j − E)g_j(j) − 1|`, the identity
/// along row `j` of the resolvent.
pub fn row_identity_check(solver: &GreensSolver<'_>, j: i64) -> Result<f64> {
    let op = solver.op;
    let gm = solver.column(j - 1)?.value(j);
    let g0 = solver.column(j)?.value(j);
    let gp = solver.column(j + 1)?.value(j);
    Ok((op.a_at(j - 1) * gm + op.a_at(j).conj() * gp + (C64::new(op.b_at(j), 0.0) - solver.energy) * g0 - 1.0).norm())
}
