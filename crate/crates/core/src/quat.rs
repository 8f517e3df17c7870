//! Quaternion scalars, similarity classes and the Sp(1) alignment solver.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance on components.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `a0 + a1 i + a2 j + a3 k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Quaternion::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        q.to_array()
    }
}

impl From<f64> for Quaternion {
    fn from(r: f64) -> Self {
        Quaternion::real(r)
    }
}

impl From<Complex64> for Quaternion {
    fn from(c: Complex64) -> Self {
        Quaternion::new(c.re, c.im, 0.0, 0.0)
    }
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion { a0: 0.0, a1: 0.0, a2: 0.0, a3: 0.0 };
    pub const ONE: Quaternion = Quaternion { a0: 1.0, a1: 0.0, a2: 0.0, a3: 0.0 };
    pub const I: Quaternion = Quaternion { a0: 0.0, a1: 1.0, a2: 0.0, a3: 0.0 };
    pub const J: Quaternion = Quaternion { a0: 0.0, a1: 0.0, a2: 1.0, a3: 0.0 };
    pub const K: Quaternion = Quaternion { a0: 0.0, a1: 0.0, a2: 0.0, a3: 1.0 };

    pub const fn new(a0: f64, a1: f64, a2: f64, a3: f64) -> Self {
        Quaternion { a0, a1, a2, a3 }
    }

    pub const fn real(r: f64) -> Self {
        Quaternion::new(r, 0.0, 0.0, 0.0)
    }

    /// Pure quaternion from a 3-vector `(i, j, k)`.
    pub fn pure(v: [f64; 3]) -> Self {
        Quaternion::new(0.0, v[0], v[1], v[2])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a0, self.a1, self.a2, self.a3]
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.a0, -self.a1, -self.a2, -self.a3)
    }

    pub fn norm_sqr(self) -> f64 {
        self.a0 * self.a0 + self.a1 * self.a1 + self.a2 * self.a2 + self.a3 * self.a3
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn re(self) -> f64 {
        self.a0
    }

    /// Imaginary part as a quaternion.
    pub fn im(self) -> Self {
        Quaternion::new(0.0, self.a1, self.a2, self.a3)
    }

    /// Imaginary part as a 3-vector.
    pub fn vec3(self) -> [f64; 3] {
        [self.a1, self.a2, self.a3]
    }

    pub fn im_norm(self) -> f64 {
        (self.a1 * self.a1 + self.a2 * self.a2 + self.a3 * self.a3).sqrt()
    }

    pub fn is_real(self, tol: f64) -> bool {
        self.im_norm() <= tol
    }

    /// Multiplicative inverse. Returns non-finite components for zero.
    pub fn inv(self) -> Self {
        self.conj() / self.norm_sqr()
    }

    pub fn is_finite(self) -> bool {
        self.a0.is_finite() && self.a1.is_finite() && self.a2.is_finite() && self.a3.is_finite()
    }

    pub fn unit(self) -> Self {
        self / self.norm()
    }

    pub fn dist(self, other: Quaternion) -> f64 {
        (self - other).norm()
    }

    /// Split `q = c1 + j c2` with `c1, c2` complex.
    pub fn complex_parts(self) -> (Complex64, Complex64) {
        (Complex64::new(self.a0, self.a1), Complex64::new(self.a2, -self.a3))
    }

    pub fn from_complex_parts(c1: Complex64, c2: Complex64) -> Self {
        Quaternion::new(c1.re, c1.im, c2.re, -c2.im)
    }

    /// `re + im i`, for the complex numbers sitting inside H.
    pub fn from_complex(c: Complex64) -> Self {
        Quaternion::new(c.re, c.im, 0.0, 0.0)
    }

    /// `modulus * (cos(angle) + i sin(angle))`.
    pub fn from_polar_i(modulus: f64, angle: f64) -> Self {
        Quaternion::new(modulus * angle.cos(), modulus * angle.sin(), 0.0, 0.0)
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i{:+}j{:+}k", self.a0, self.a1, self.a2, self.a3)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.a0 + o.a0, self.a1 + o.a1, self.a2 + o.a2, self.a3 + o.a3)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.a0 - o.a0, self.a1 - o.a1, self.a2 - o.a2, self.a3 - o.a3)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.a0, -self.a1, -self.a2, -self.a3)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a, b) = (self, o);
        Quaternion::new(
            a.a0 * b.a0 - a.a1 * b.a1 - a.a2 * b.a2 - a.a3 * b.a3,
            a.a0 * b.a1 + a.a1 * b.a0 + a.a2 * b.a3 - a.a3 * b.a2,
            a.a0 * b.a2 - a.a1 * b.a3 + a.a2 * b.a0 + a.a3 * b.a1,
            a.a0 * b.a3 + a.a1 * b.a2 - a.a2 * b.a1 + a.a3 * b.a0,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    fn mul(self, s: f64) -> Quaternion {
        Quaternion::new(self.a0 * s, self.a1 * s, self.a2 * s, self.a3 * s)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q * self
    }
}

impl Div<f64> for Quaternion {
    type Output = Quaternion;
    fn div(self, s: f64) -> Quaternion {
        Quaternion::new(self.a0 / s, self.a1 / s, self.a2 / s, self.a3 / s)
    }
}

/// Right division: `a / b = a * b^-1`.
impl Div for Quaternion {
    type Output = Quaternion;
    fn div(self, o: Quaternion) -> Quaternion {
        self * o.inv()
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Quaternion) {
        *self = *self + o;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Quaternion) {
        *self = *self - o;
    }
}

impl MulAssign for Quaternion {
    fn mul_assign(&mut self, o: Quaternion) {
        *self = *self * o;
    }
}

impl std::iter::Sum for Quaternion {
    fn sum<I: Iterator<Item = Quaternion>>(iter: I) -> Quaternion {
        iter.fold(Quaternion::ZERO, |a, b| a + b)
    }
}

/// `modulus * (cos(angle) + axis sin(angle))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarForm {
    pub modulus: f64,
    pub angle: f64,
    /// Unit pure quaternion, or zero when the source is real.
    pub axis: Quaternion,
}

impl PolarForm {
    pub fn reconstruct(&self) -> Quaternion {
        (Quaternion::real(self.angle.cos()) + self.axis * self.angle.sin()) * self.modulus
    }
}

pub fn polar_decompose(q: Quaternion) -> PolarForm {
    let modulus = q.norm();
    let v = q.im_norm();
    if modulus == 0.0 {
        return PolarForm { modulus: 0.0, angle: 0.0, axis: Quaternion::ZERO };
    }
    if v == 0.0 {
        let angle = if q.a0 >= 0.0 { 0.0 } else { PI };
        return PolarForm { modulus, angle, axis: Quaternion::ZERO };
    }
    PolarForm { modulus, angle: v.atan2(q.a0), axis: q.im() / v }
}

/// Similarity class of a quaternion, stored through its complex
/// representative `modulus * e^{i angle}` with `angle` in `[0, pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityClass {
    pub modulus: f64,
    pub angle: f64,
}

impl SimilarityClass {
    pub fn of(q: Quaternion) -> Self {
        let p = polar_decompose(q);
        SimilarityClass { modulus: p.modulus, angle: p.angle }
    }

    pub fn from_complex(c: Complex64) -> Self {
        SimilarityClass { modulus: c.norm(), angle: c.im.abs().atan2(c.re) }
    }

    pub fn representative(&self) -> Complex64 {
        Complex64::from_polar(self.modulus, self.angle)
    }

    pub fn quaternion(&self) -> Quaternion {
        Quaternion::from_polar_i(self.modulus, self.angle)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.angle.sin() * self.modulus <= tol
    }

    /// Same class up to `tol`, measured on the representatives relative to
    /// `max(1, modulus)`.
    pub fn approx_eq(&self, other: &SimilarityClass, tol: f64) -> bool {
        let scale = self.modulus.max(other.modulus).max(1.0);
        (self.representative() - other.representative()).norm() <= tol * scale
    }
}

pub fn similar(a: Quaternion, b: Quaternion, tol: f64) -> bool {
    (a.re() - b.re()).abs() <= tol && (a.norm() - b.norm()).abs() <= tol
}

pub fn centralizer_contains(lambda: Quaternion, q: Quaternion, tol: f64) -> Result<bool> {
    let li = lambda.im_norm();
    if li <= tol {
        return Err(Error::Domain("centralizer of a real quaternion is all of H".into()));
    }
    let u = Vector3::from(lambda.vec3()) / li;
    let v = Vector3::from(q.vec3());
    // component of im(q) orthogonal to the axis of lambda
    Ok((v - u * u.dot(&v)).norm() <= tol)
}

/// Rotation matrix of `v -> conj(mu) v mu` acting on imaginary parts.
pub fn rotation_of(mu: Quaternion) -> Matrix3<f64> {
    let mu = mu.unit();
    let mut r = Matrix3::zeros();
    let basis = [Quaternion::I, Quaternion::J, Quaternion::K];
    for (c, e) in basis.iter().enumerate() {
        let img = mu.conj() * *e * mu;
        r[(0, c)] = img.a1;
        r[(1, c)] = img.a2;
        r[(2, c)] = img.a3;
    }
    r
}

/// Unit `mu` with `conj(mu) v mu = R v`, sign chosen with `Re(mu) >= 0`.
pub fn unit_from_rotation(r: &Matrix3<f64>) -> Quaternion {
    // q v conj(q) = R v, then mu = conj(q).
    let t = r.trace();
    let q = if t > r[(0, 0)].max(r[(1, 1)]).max(r[(2, 2)]) {
        let s = (1.0 + t).sqrt() * 2.0;
        Quaternion::new(
            s / 4.0,
            (r[(2, 1)] - r[(1, 2)]) / s,
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(1, 0)] - r[(0, 1)]) / s,
        )
    } else if r[(0, 0)] >= r[(1, 1)] && r[(0, 0)] >= r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(2, 1)] - r[(1, 2)]) / s,
            s / 4.0,
            (r[(0, 1)] + r[(1, 0)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
        )
    } else if r[(1, 1)] >= r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(0, 2)] - r[(2, 0)]) / s,
            (r[(0, 1)] + r[(1, 0)]) / s,
            s / 4.0,
            (r[(1, 2)] + r[(2, 1)]) / s,
        )
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        Quaternion::new(
            (r[(1, 0)] - r[(0, 1)]) / s,
            (r[(0, 2)] + r[(2, 0)]) / s,
            (r[(1, 2)] + r[(2, 1)]) / s,
            s / 4.0,
        )
    };
    canonical_sign(q.conj().unit())
}

/// Picks the representative of `{mu, -mu}` with a nonnegative leading component.
pub fn canonical_sign(mu: Quaternion) -> Quaternion {
    for c in mu.to_array() {
        if c.abs() > 1e-12 {
            return if c < 0.0 { -mu } else { mu };
        }
    }
    mu
}

/// `conj(mu) w mu`.
pub fn conjugate_by(mu: Quaternion, w: Quaternion) -> Quaternion {
    mu.conj() * w * mu
}

/// Finds a unit `mu` with `conj(mu) w_k mu = v_k` for all `k`, or `None`
/// when no unit quaternion does this.
pub fn sp1_align(v: &[Quaternion], w: &[Quaternion], tol: f64) -> Result<Option<Quaternion>> {
    if v.len() != w.len() {
        return Err(Error::LengthMismatch { expected: v.len(), found: w.len() });
    }
    for (a, b) in v.iter().zip(w) {
        let scale = a.norm().max(b.norm()).max(1.0);
        if (a.re() - b.re()).abs() > tol * scale || (a.im_norm() - b.im_norm()).abs() > tol * scale {
            return Ok(None);
        }
    }
    let xs: Vec<Vector3<f64>> = w.iter().map(|q| Vector3::from(q.vec3())).collect();
    let ys: Vec<Vector3<f64>> = v.iter().map(|q| Vector3::from(q.vec3())).collect();
    let big = xs.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if big <= tol {
        return Ok(Some(Quaternion::ONE));
    }

    let mut m = Matrix3::zeros();
    for (x, y) in xs.iter().zip(&ys) {
        m += y * x.transpose();
    }
    let mut span = Matrix3::zeros();
    for x in &xs {
        span += x * x.transpose();
    }
    let sv = span.symmetric_eigenvalues();
    let mut ev: Vec<f64> = sv.iter().map(|s| s.max(0.0).sqrt()).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let rot = if ev[1] <= tol * ev[0].max(1.0) {
        // collinear: minimal rotation taking the dominant axis onto its image
        let (kx, _) = xs
            .iter()
            .enumerate()
            .map(|(k, x)| (k, x.norm()))
            .fold((0, -1.0), |acc, (k, n)| if n > acc.1 { (k, n) } else { acc });
        minimal_rotation(&xs[kx].normalize(), &ys[kx].normalize())
    } else {
        let svd = m.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let d = (u * vt).determinant().signum();
        u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * vt
    };
    let mu = unit_from_rotation(&rot);
    for (a, b) in v.iter().zip(w) {
        let scale = a.norm().max(b.norm()).max(1.0);
        if conjugate_by(mu, *b).dist(*a) > tol * scale {
            return Ok(None);
        }
    }
    Ok(Some(mu))
}

fn minimal_rotation(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    let c = a.dot(b).clamp(-1.0, 1.0);
    let axis = a.cross(b);
    if axis.norm() < 1e-14 {
        if c > 0.0 {
            return Matrix3::identity();
        }
        // half turn about an axis perpendicular to a
        let e = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
            Vector3::x()
        } else if a.y.abs() <= a.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let p = a.cross(&e).normalize();
        return p * p.transpose() * 2.0 - Matrix3::identity();
    }
    nalgebra::Rotation3::rotation_between(a, b)
        .map(|r| r.into_inner())
        .unwrap_or_else(Matrix3::identity)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_of_units() {
        let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
        assert_eq!(i * j, k);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
        assert_eq!(j * i, -k);
        assert_eq!(i * i, -Quaternion::ONE);
    }

    #[test]
    fn polar_examples() {
        let p = polar_decompose(Quaternion::ONE);
        assert_eq!((p.modulus, p.angle, p.axis), (1.0, 0.0, Quaternion::ZERO));
        let p = polar_decompose(Quaternion::I);
        assert!((p.angle - PI / 2.0).abs() < 1e-15 && p.axis == Quaternion::I);
        let q = Quaternion::new(1.0, 1.0, 1.0, 1.0);
        let p = polar_decompose(q);
        assert!((p.modulus - 2.0).abs() < 1e-15);
        assert!((p.angle - PI / 3.0).abs() < 1e-15);
        let s = 1.0 / 3f64.sqrt();
        assert!(p.axis.dist(Quaternion::new(0.0, s, s, s)) < 1e-15);
        assert!(p.reconstruct().dist(q) < 1e-14);
        let p = polar_decompose(Quaternion::real(-2.0));
        assert_eq!((p.modulus, p.angle, p.axis), (2.0, PI, Quaternion::ZERO));
        assert_eq!(polar_decompose(Quaternion::ZERO).modulus, 0.0);
    }

    #[test]
    fn similarity_examples() {
        let (i, j) = (Quaternion::I, Quaternion::J);
        assert!(similar(i, j, 1e-9));
        assert!(similar(i, -i, 1e-9));
        let a = Quaternion::new(1.0, 1.0, 0.0, 0.0);
        let b = Quaternion::new(1.001, -1.0, 0.0, 0.0);
        assert!(!similar(a, b, 1e-9));
    }

    #[test]
    fn centralizer_examples() {
        let (i, j) = (Quaternion::I, Quaternion::J);
        assert!(centralizer_contains(i, Quaternion::new(3.0, 2.0, 0.0, 0.0), 1e-9).unwrap());
        assert!(!centralizer_contains(i, j, 1e-9).unwrap());
        assert!(centralizer_contains(j, Quaternion::new(1.0, 0.0, -5.0, 0.0), 1e-9).unwrap());
        assert!(centralizer_contains(Quaternion::real(2.0), i, 1e-9).is_err());
    }

    #[test]
    fn align_examples() {
        let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
        let mu = sp1_align(&[i, j], &[i, j], 1e-9).unwrap().unwrap();
        assert!(mu.dist(Quaternion::ONE) < 1e-12);

        let mu = sp1_align(&[j, -i], &[i, j], 1e-9).unwrap().unwrap();
        let s = 0.5f64.sqrt();
        let expect = Quaternion::new(s, 0.0, 0.0, -s);
        assert!(mu.dist(expect) < 1e-12 || mu.dist(-expect) < 1e-12, "{mu}");
        assert!(conjugate_by(mu, i).dist(j) < 1e-12);
        assert!(conjugate_by(mu, j).dist(-i) < 1e-12);
        // the cyclic permutation i -> j -> k sends j to k, not to -i
        let c = Quaternion::new(0.5, 0.5, 0.5, 0.5);
        assert!(conjugate_by(c, i).dist(j) < 1e-12 || conjugate_by(c.conj(), i).dist(j) < 1e-12);
        let _ = k;

        assert!(sp1_align(&[i, i], &[i, j], 1e-9).unwrap().is_none());
        assert!(sp1_align(&[i], &[i, j], 1e-9).is_err());
    }

    #[test]
    fn align_collinear_is_minimal() {
        let (i, j) = (Quaternion::I, Quaternion::J);
        let mu = sp1_align(&[j * 2.0, Quaternion::new(1.0, 0.0, 1.0, 0.0)], &[i * 2.0, Quaternion::new(1.0, 1.0, 0.0, 0.0)], 1e-9)
            .unwrap()
            .unwrap();
        // minimal rotation i -> j is a quarter turn about k
        assert!((mu.re() - (PI / 4.0).cos()).abs() < 1e-12);
        let mu = sp1_align(&[-i], &[i], 1e-9).unwrap().unwrap();
        assert!(conjugate_by(mu, i).dist(-i) < 1e-12);
        assert!(mu.re().abs() < 1e-12);
    }

    #[test]
    fn rotation_round_trip() {
        let mu = Quaternion::new(0.3, -0.4, 0.5, 0.2).unit();
        let r = rotation_of(mu);
        assert!((r.determinant() - 1.0).abs() < 1e-12);
        let back = unit_from_rotation(&r);
        assert!(back.dist(mu) < 1e-12 || back.dist(-mu) < 1e-12);
    }

    #[test]
    fn complex_parts_round_trip() {
        let q = Quaternion::new(1.0, 2.0, 3.0, 4.0);
        let (c1, c2) = q.complex_parts();
        assert_eq!(Quaternion::from_complex_parts(c1, c2), q);
        // q = c1 + j c2
        let rebuilt = Quaternion::from_complex(c1) + Quaternion::J * Quaternion::from_complex(c2);
        assert!(rebuilt.dist(q) < 1e-15);
    }
}
