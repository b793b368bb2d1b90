//! Operator families sampled along orbits of base dynamics.

use crate::certifier::{certify, CertifierOptions};
use crate::error::{Error, Result};
use crate::jacobi::{dist_to_spectrum, spectrum, Extension, JacobiOperator, COCYCLE_HALO};
use crate::sphere::chordal_dist;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `cos(2πx)`, exact at quarter turns.
pub fn cos_2pi(x: f64) -> f64 {
    let r = x - x.floor();
    let q = 4.0 * r;
    if q == q.floor() {
        return [1.0, 0.0, -1.0, 0.0][q as usize % 4];
    }
    (2.0 * PI * r).cos()
}

/// A point of the base space. On the circle it is `frac(base + step/q)`; for the
/// explicit shift it is the index `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub base: f64,
    pub step: i64,
}

impl State {
    pub fn circle(omega: f64) -> Self {
        State { base: omega - omega.floor(), step: 0 }
    }

    pub fn index(k: i64) -> Self {
        State { base: 0.0, step: k }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseDynamics {
    /// Rotation by the convergent `p/q`.
    Rotation { p: i64, q: i64 },
    /// Rotation by `1/period`.
    Periodic { period: i64 },
    /// The shift on indices.
    Explicit,
}

impl BaseDynamics {
    /// Rotation by the `order`-th continued-fraction convergent of the golden mean.
    pub fn golden(order: usize) -> Self {
        let (mut p, mut q) = (1i64, 1i64);
        for _ in 0..order {
            (p, q) = (q, p + q);
        }
        BaseDynamics::Rotation { p, q }
    }

    fn pq(&self) -> Option<(i64, i64)> {
        match *self {
            BaseDynamics::Rotation { p, q } => Some((p, q)),
            BaseDynamics::Periodic { period } => Some((1, period)),
            BaseDynamics::Explicit => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.pq() {
            Some((_, q)) if q <= 0 => Err(Error::Input(format!("period {q} must be positive"))),
            _ => Ok(()),
        }
    }

    /// `T^n ω`, computed in integers.
    pub fn iterate(&self, w: State, n: i64) -> State {
        match self.pq() {
            Some((p, q)) => {
                let k = (w.step as i128 + n as i128 * p as i128).rem_euclid(q as i128) as i64;
                State { base: w.base, step: k }
            }
            None => State { base: w.base, step: w.step + n },
        }
    }

    /// Coordinate of a state on the circle, or its index.
    pub fn point(&self, w: State) -> f64 {
        match self.pq() {
            Some((_, q)) => {
                let x = w.base + w.step.rem_euclid(q) as f64 / q as f64;
                x - x.floor()
            }
            None => w.step as f64,
        }
    }

    /// Distance on the circle, or index distance.
    pub fn distance(&self, w1: State, w2: State) -> f64 {
        let d = (self.point(w1) - self.point(w2)).abs();
        match self.pq() {
            Some(_) => d.min(1.0 - d),
            None => d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SamplingPair {
    /// `a ≡ 1`, `b(ω) = 2λ cos(2π(ω + θ))`.
    AlmostMathieu { lambda: f64, theta: f64 },
    /// `a(ω) = amplitude · cos(2πω)`, `b ≡ b`.
    CosineHopping { amplitude: f64, b: f64 },
    /// Values at `⌊ω·len⌋` on the circle, or at the index for the explicit shift.
    Table { a: Vec<[f64; 2]>, b: Vec<f64> },
    Constant { a: [f64; 2], b: f64 },
}

impl SamplingPair {
    pub fn validate(&self) -> Result<()> {
        if let SamplingPair::Table { a, b } = self {
            if a.is_empty() || a.len() != b.len() {
                return Err(Error::Input("table pair needs equal non-empty a and b".into()));
            }
        }
        Ok(())
    }

    fn table_index(&self, dynamics: &BaseDynamics, x: f64, len: usize) -> usize {
        match dynamics {
            BaseDynamics::Explicit => (x as i64).clamp(0, len as i64 - 1) as usize,
            _ => ((x * len as f64 + 1e-9).floor() as i64).rem_euclid(len as i64) as usize,
        }
    }

    pub fn a(&self, dynamics: &BaseDynamics, x: f64) -> C64 {
        match self {
            SamplingPair::AlmostMathieu { .. } => C64::new(1.0, 0.0),
            SamplingPair::CosineHopping { amplitude, .. } => C64::new(amplitude * cos_2pi(x), 0.0),
            SamplingPair::Table { a, .. } => {
                let v = a[self.table_index(dynamics, x, a.len())];
                C64::new(v[0], v[1])
            }
            SamplingPair::Constant { a, .. } => C64::new(a[0], a[1]),
        }
    }

    pub fn b(&self, dynamics: &BaseDynamics, x: f64) -> f64 {
        match self {
            SamplingPair::AlmostMathieu { lambda, theta } => 2.0 * lambda * cos_2pi(x + theta),
            SamplingPair::CosineHopping { b, .. } => *b,
            SamplingPair::Table { b, .. } => b[self.table_index(dynamics, x, b.len())],
            SamplingPair::Constant { b, .. } => *b,
        }
    }

    /// `sup|a| + sup|b|`.
    pub fn bound(&self) -> f64 {
        match self {
            SamplingPair::AlmostMathieu { lambda, .. } => 1.0 + 2.0 * lambda.abs(),
            SamplingPair::CosineHopping { amplitude, b } => amplitude.abs() + b.abs(),
            SamplingPair::Table { a, b } => {
                a.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max) + b.iter().map(|x| x.abs()).fold(0.0, f64::max)
            }
            SamplingPair::Constant { a, b } => a[0].hypot(a[1]) + b.abs(),
        }
    }

    /// Lipschitz constants of `(a, b)` on the circle; `None` when discontinuous.
    pub fn lipschitz(&self) -> Option<(f64, f64)> {
        match self {
            SamplingPair::AlmostMathieu { lambda, .. } => Some((0.0, 4.0 * PI * lambda.abs())),
            SamplingPair::CosineHopping { amplitude, .. } => Some((2.0 * PI * amplitude.abs(), 0.0)),
            SamplingPair::Table { .. } => None,
            SamplingPair::Constant { .. } => Some((0.0, 0.0)),
        }
    }
}

/// The operator with `a_n = a(Tⁿω)`, `b_n = b(Tⁿω)` on `[lo, hi]`, sampled on a
/// halo wide enough for the cocycle map.
pub fn realize(dynamics: &BaseDynamics, pair: &SamplingPair, w: State, lo: i64, hi: i64) -> Result<JacobiOperator> {
    dynamics.validate()?;
    pair.validate()?;
    let x = |n: i64| dynamics.point(dynamics.iterate(w, n));
    JacobiOperator::from_fn(
        lo,
        hi,
        COCYCLE_HALO,
        |n| pair.a(dynamics, x(n)),
        |n| pair.b(dynamics, x(n)),
        Extension::Constant,
        Some(pair.bound()),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Inclusion {
    Included,
    NotIncluded,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub status: Inclusion,
    /// Orbit step `m` whose point `T^m ω₀` is nearest to `ω`.
    pub m: i64,
    pub orbit_distance: f64,
    /// Orbit distance the continuity of the pair requires.
    pub delta_required: f64,
    /// Largest distance from an eigenvalue of `J_ω` to the spectrum of `J_{ω₀}`.
    pub max_deviation: f64,
}

/// Whether the truncation spectrum of `J_ω` lies within `eps` of that of `J_{ω₀}`,
/// compared through the orbit point `T^m ω₀` nearest to `ω`, `m ≤ m_max`.
#[allow(clippy::too_many_arguments)]
pub fn orbit_spectrum_inclusion(
    dynamics: &BaseDynamics,
    pair: &SamplingPair,
    w: State,
    w0: State,
    eps: f64,
    lo: i64,
    hi: i64,
    m_max: i64,
) -> Result<InclusionReport> {
    if !matches!(dynamics, BaseDynamics::Rotation { .. } | BaseDynamics::Periodic { .. }) {
        return Err(Error::Unsupported("orbit inclusion needs circle dynamics".into()));
    }
    let delta_required = match pair.lipschitz() {
        Some((la, lb)) if la + lb > 0.0 => eps / (2.0 * (lb + 2.0 * la)),
        Some(_) => f64::INFINITY,
        None => 0.0,
    };
    let (m, orbit_distance) = (0..=m_max)
        .map(|m| (m, dynamics.distance(dynamics.iterate(w0, m), w)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let mut report = InclusionReport { status: Inclusion::Inconclusive, m, orbit_distance, delta_required, max_deviation: f64::NAN };
    if orbit_distance > delta_required {
        return Ok(report);
    }
    let size = (hi - lo + 1) as usize;
    let sizes = [size / 2, size];
    let target = spectrum(&realize(dynamics, pair, w, lo, hi)?, &sizes);
    // J_{ω₀} seen from site m is J at T^m ω₀.
    let reference = spectrum(&realize(dynamics, pair, w0, lo + m, hi + m)?, &sizes);
    report.max_deviation = target
        .all_eigenvalues()
        .iter()
        .map(|e| dist_to_spectrum(&reference, C64::new(*e, 0.0)))
        .fold(0.0, f64::max);
    report.status = if report.max_deviation <= eps { Inclusion::Included } else { Inclusion::NotIncluded };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaRecord {
    pub omega: f64,
    pub status: String,
    pub condition_failed: Option<u8>,
    pub n: Option<usize>,
    pub delta_sep: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicalReport {
    pub energy: [f64; 2],
    pub records: Vec<OmegaRecord>,
    pub all_certified: bool,
    pub min_delta_sep: Option<f64>,
    pub max_n: Option<usize>,
    /// Largest chordal jump of `u(0)` or `s(0)` between neighboring grid points.
    pub continuity_modulus: Option<f64>,
    /// Largest spacing between neighboring grid points.
    pub grid_step: f64,
}

/// Certify the realized cocycle at every grid point and report how uniform the
/// certificates are. Site 0 must lie in `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
pub fn dynamical_ds_check(
    dynamics: &BaseDynamics,
    pair: &SamplingPair,
    energy: C64,
    grid: &[State],
    lo: i64,
    hi: i64,
    opts: &CertifierOptions,
) -> Result<DynamicalReport> {
    if !(lo..=hi).contains(&0) {
        return Err(Error::Input("window must contain site 0".into()));
    }
    let results = grid
        .par_iter()
        .map(|w| {
            let op = realize(dynamics, pair, *w, lo, hi)?;
            Ok(certify(&op.cocycle_map(energy), opts))
        })
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<OmegaRecord> = grid
        .iter()
        .zip(&results)
        .map(|(w, c)| OmegaRecord {
            omega: dynamics.point(*w),
            status: c.verdict.status().into(),
            condition_failed: c.verdict.failed_condition(),
            n: c.n,
            delta_sep: c.delta_sep,
        })
        .collect();
    let all_certified = results.iter().all(|c| c.is_ds());
    let grid_step = grid.windows(2).map(|p| dynamics.distance(p[0], p[1])).fold(0.0, f64::max);
    let (min_delta_sep, max_n, continuity_modulus) = if all_certified {
        let fields: Vec<_> = results.iter().map(|c| c.field.as_ref().expect("certified field")).collect();
        let modulus = fields
            .windows(2)
            .map(|f| chordal_dist(&f[0].u_at(0), &f[1].u_at(0)).max(chordal_dist(&f[0].s_at(0), &f[1].s_at(0))))
            .fold(0.0, f64::max);
        (
            results.iter().filter_map(|c| c.delta_sep).reduce(f64::min),
            results.iter().filter_map(|c| c.n).max(),
            Some(modulus),
        )
    } else {
        (None, None, None)
    };
    Ok(DynamicalReport {
        energy: [energy.re, energy.im],
        records,
        all_certified,
        min_delta_sep,
        max_n,
        continuity_modulus,
        grid_step,
    })
}

/// `count` equally spaced circle points starting at `start`.
pub fn circle_grid(start: f64, count: usize) -> Vec<State> {
    (0..count).map(|k| State::circle(start + k as f64 / count as f64)).collect()
}
