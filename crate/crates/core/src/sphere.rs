//! Geometry of the Riemann sphere: chordal metric, projective actions, disk images.

use crate::error::{Error, Result};
use crate::mat2::{vnorm, Mat2, C2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// A point of CP¹ stored as a unit vector in canonical gauge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    v: C2,
}

impl ProjPoint {
    /// Line spanned by `v`; fails for the zero vector.
    pub fn from_vector(v: C2) -> Result<Self> {
        let n = vnorm(&v);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Domain("zero or non-finite vector has no direction".into()));
        }
        Ok(Self::gauge(v))
    }

    pub(crate) fn from_unit(v: C2) -> Self {
        Self::gauge(v)
    }

    fn gauge(v: C2) -> Self {
        let (k, o) = if v[0].norm() >= v[1].norm() { (0, 1) } else { (1, 0) };
        let m = v[k].norm();
        let phase = v[k].conj() / m;
        let other = v[o] * phase;
        let n = m.hypot(other.norm());
        let mut w = [C64::new(0.0, 0.0); 2];
        w[k] = C64::new(m / n, 0.0);
        w[o] = other / n;
        ProjPoint { v: w }
    }

    pub fn e1() -> Self {
        ProjPoint { v: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)] }
    }

    pub fn e2() -> Self {
        ProjPoint { v: [C64::new(0.0, 0.0), C64::new(1.0, 0.0)] }
    }

    pub fn infinity() -> Self {
        Self::e2()
    }

    /// Point `z` of the affine chart `v2/v1`.
    pub fn from_affine(z: C64) -> Self {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Self::infinity();
        }
        Self::gauge([C64::new(1.0, 0.0), z])
    }

    /// Affine coordinate, `None` at infinity.
    pub fn to_affine(&self) -> Option<C64> {
        if self.v[0].norm() == 0.0 {
            None
        } else {
            Some(self.v[1] / self.v[0])
        }
    }

    pub fn rep(&self) -> C2 {
        self.v
    }

    /// Unit vector orthogonal to this line.
    pub fn perp(&self) -> Self {
        Self::gauge(crate::mat2::perp(&self.v))
    }
}

/// Chordal distance `2|det(p, q)|` of unit representatives.
pub fn chordal_dist(p: &ProjPoint, q: &ProjPoint) -> f64 {
    let (x, y) = (p.v, q.v);
    (2.0 * (x[0] * y[1] - x[1] * y[0]).norm()).min(2.0)
}

/// Chordal distance computed from affine coordinates.
pub fn chordal_dist_affine(z: Option<C64>, w: Option<C64>) -> f64 {
    match (z, w) {
        (None, None) => 0.0,
        (Some(z), None) | (None, Some(z)) => 2.0 / (1.0 + z.norm_sqr()).sqrt(),
        (Some(z), Some(w)) => {
            2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()).sqrt() * (1.0 + w.norm_sqr()).sqrt())
        }
    }
}

/// Projective action `A·p`.
pub fn act(a: &Mat2, p: &ProjPoint) -> Result<ProjPoint> {
    let w = a.apply(&p.v);
    if vnorm(&w) <= 1e-14 * a.norm() || vnorm(&w) == 0.0 {
        return Err(Error::UndefinedAction);
    }
    Ok(ProjPoint::gauge(w))
}

/// Möbius action `z ↦ (c + d z)/(a + b z)` in the affine chart.
pub fn mobius(a: &Mat2, z: C64) -> Option<C64> {
    let den = a.a + a.b * z;
    if den.norm() == 0.0 {
        None
    } else {
        Some((a.c + a.d * z) / den)
    }
}

/// Generalized disk in the affine chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GenCircle {
    /// `|z − center| < radius`; radius 0 is a single point.
    Disk { center: C64, radius: f64 },
    /// `|z − center| > radius`, together with ∞. An infinite radius leaves only ∞.
    ExteriorDisk { center: C64, radius: f64 },
    /// `Re((z − point)·conj(normal)) > 0`.
    HalfPlane { point: C64, normal: C64 },
}

impl GenCircle {
    pub fn contains(&self, z: C64) -> bool {
        match *self {
            GenCircle::Disk { center, radius } => (z - center).norm() < radius,
            GenCircle::ExteriorDisk { center, radius } => (z - center).norm() > radius,
            GenCircle::HalfPlane { point, normal } => ((z - point) * normal.conj()).re > 0.0,
        }
    }

    /// Signed distance of `z` from the boundary, positive inside.
    pub fn boundary_offset(&self, z: C64) -> f64 {
        match *self {
            GenCircle::Disk { center, radius } => radius - (z - center).norm(),
            GenCircle::ExteriorDisk { center, radius } => (z - center).norm() - radius,
            GenCircle::HalfPlane { point, normal } => ((z - point) * normal.conj()).re / normal.norm(),
        }
    }
}

/// Exact image of the open disk `|z| < alpha` under the action of `A`.
///
/// The image is the set where `K|w|² − 2Re(w·conj P) + Q < 0` with
/// `K = |a|² − α²|b|²`, `P = conj(a)c − α²conj(b)d`, `Q = |c|² − α²|d|²`.
pub fn mobius_disk_image(a: &Mat2, alpha: f64) -> Result<GenCircle> {
    if !(alpha > 0.0) {
        return Err(Error::Domain("disk radius must be positive".into()));
    }
    if a.max_abs() == 0.0 {
        return Err(Error::Domain("zero matrix has no projective action".into()));
    }
    let m = a.scale_re(1.0 / a.max_abs());
    if m.is_singular() {
        // Rank one: everything off the kernel lands on the range.
        let range = if vnorm(&m.col(0)) >= vnorm(&m.col(1)) { m.col(0) } else { m.col(1) };
        return Ok(match ProjPoint::gauge(range).to_affine() {
            Some(center) => GenCircle::Disk { center, radius: 0.0 },
            None => GenCircle::ExteriorDisk { center: C64::new(0.0, 0.0), radius: f64::INFINITY },
        });
    }
    let al2 = alpha * alpha;
    let k = m.a.norm_sqr() - al2 * m.b.norm_sqr();
    let p = m.a.conj() * m.c - m.b.conj() * m.d * al2;
    let q = m.c.norm_sqr() - al2 * m.d.norm_sqr();
    let scale = m.a.norm_sqr() + al2 * m.b.norm_sqr();
    if k.abs() <= 1e-14 * scale {
        // −2Re(w·conj P) + Q < 0.
        let point = p * (q / (2.0 * p.norm_sqr()));
        return Ok(GenCircle::HalfPlane { point, normal: p });
    }
    let center = p / k;
    let radius = alpha * m.det().norm() / k.abs();
    if k > 0.0 {
        Ok(GenCircle::Disk { center, radius })
    } else {
        Ok(GenCircle::ExteriorDisk { center, radius })
    }
}

/// Whether `g` lies inside `|z| < alpha_prime`, with the Euclidean clearance.
pub fn contained_in_disk(g: &GenCircle, alpha_prime: f64) -> (bool, f64) {
    match *g {
        GenCircle::Disk { center, radius } => {
            let margin = alpha_prime - center.norm() - radius;
            (margin > 0.0, margin)
        }
        _ => (false, f64::NEG_INFINITY),
    }
}

fn check_order(alpha: f64, alpha_prime: f64) -> Result<()> {
    if !(alpha_prime > 0.0 && alpha_prime < alpha && alpha.is_finite()) {
        return Err(Error::Domain(format!("need 0 < α′ < α, got α = {alpha}, α′ = {alpha_prime}")));
    }
    Ok(())
}

/// Contraction factor `2x/(1 + x²)`, `x = α/α′`, of maps sending `D_α` into `D_α′`.
pub fn schwarz_pick_rho(alpha: f64, alpha_prime: f64) -> Result<f64> {
    check_order(alpha, alpha_prime)?;
    let x = alpha / alpha_prime;
    Ok(2.0 / (x + 1.0 / x))
}

/// Lower bound for the chordal distance between `D_α′` and the complement of `D_α`.
pub fn separation_constant(alpha: f64, alpha_prime: f64) -> Result<f64> {
    if alpha_prime == 0.0 && alpha > 0.0 {
        return Ok(2.0 * alpha / (1.0 + alpha * alpha).sqrt());
    }
    check_order(alpha, alpha_prime)?;
    Ok(2.0 * (alpha - alpha_prime) / ((1.0 + alpha * alpha) * (1.0 + alpha_prime * alpha_prime)).sqrt())
}

/// Bound on the chordal diameter of an `n`-fold image of `D_α` under maps sending
/// `D_α` into `D_α′`.
pub fn diameter_bound(alpha: f64, alpha_prime: f64, n: u32) -> Result<f64> {
    let rho = schwarz_pick_rho(alpha, alpha_prime)?;
    let (a2, b2) = (alpha * alpha, alpha_prime * alpha_prime);
    Ok(2.0 * alpha_prime * (a2 + b2) / (a2 - b2) * rho.powi(n as i32 - 1))
}

/// Pseudo-hyperbolic distance on `D_α`.
pub fn pseudo_hyperbolic(alpha: f64, z1: C64, z2: C64) -> f64 {
    alpha * (z2 - z1).norm() / (alpha * alpha - z1.conj() * z2).norm()
}

/// Chordal diameter of a disk inside the closed unit disk.
pub fn chordal_diameter(g: &GenCircle) -> Option<f64> {
    let GenCircle::Disk { center, radius } = *g else {
        return None;
    };
    if center.norm() + radius > 1.0 {
        return None;
    }
    if radius == 0.0 {
        return Some(0.0);
    }
    // The farthest chordal pair lies on the line through the center and the origin.
    let dir = if center.norm() > 0.0 { center / center.norm() } else { C64::new(1.0, 0.0) };
    let p = center + dir * radius;
    let q = center - dir * radius;
    Some(chordal_dist_affine(Some(p), Some(q)))
}
