//! Invariants of points in quaternionic hyperbolic space: cross ratios,
//! the angular invariant, distance and rotation invariants, and the full
//! invariant profile of an ordered configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::{semi_normalize_lifts, PointConfig};
use crate::hlinalg::{classify_vector, herm_norm, herm_unchecked, HVector, HermitianSpace, VectorType};
use crate::quat::{Quaternion, SimilarityClass};

/// Threshold for declaring a rotation invariant (or angle) zero.
pub const ZERO_TOL: f64 = 1e-9;

/// A point of the projective model, stored through one lift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjPoint {
    pub lift: HVector,
    #[serde(rename = "type")]
    pub kind: VectorType,
}

impl ProjPoint {
    pub fn new(space: &HermitianSpace, lift: HVector, tol: f64) -> Result<Self> {
        let kind = classify_vector(space, &lift, tol)?;
        Ok(ProjPoint { lift, kind })
    }

    /// Rescales so the last coordinate is 1. Points at infinity keep their lift.
    pub fn standard_lift(&self) -> HVector {
        let last = self.lift[self.lift.len() - 1];
        if last.norm() <= 1e-12 * self.lift.norm() {
            return self.lift.clone();
        }
        self.lift.scale(last.inv())
    }

    pub fn with_lift(&self, lift: HVector) -> Self {
        ProjPoint { lift, kind: self.kind }
    }

    /// Projective equality: `w = z lambda` for some nonzero quaternion.
    pub fn same_point(&self, other: &ProjPoint, tol: f64) -> bool {
        same_line(&self.lift, &other.lift, tol)
    }
}

pub(crate) fn same_line(z: &HVector, w: &HVector, tol: f64) -> bool {
    let nz = z.norm_sqr();
    if nz == 0.0 || w.norm() == 0.0 {
        return false;
    }
    let lambda = HVector::dot(w, z) / nz;
    (w - &z.scale(lambda)).norm() <= tol * w.norm()
}

fn pairing(z: &ProjPoint, w: &ProjPoint) -> Result<Quaternion> {
    if z.lift.len() != w.lift.len() {
        return Err(Error::DimensionMismatch { expected: z.lift.len(), found: w.lift.len() });
    }
    Ok(herm_unchecked(&z.lift, &w.lift))
}

fn nonzero(q: Quaternion, z: &ProjPoint, w: &ProjPoint) -> Result<Quaternion> {
    if q.norm() <= 1e-14 * z.lift.norm_sqr().max(w.lift.norm_sqr()) {
        return Err(Error::Degenerate("vanishing pairing".into()));
    }
    Ok(q)
}

/// `<z3,z1> <z3,z2>^-1 <z4,z2> <z4,z1>^-1` for the stored lifts.
pub fn cross_ratio(z1: &ProjPoint, z2: &ProjPoint, z3: &ProjPoint, z4: &ProjPoint) -> Result<Quaternion> {
    let a = nonzero(pairing(z3, z1)?, z3, z1)?;
    let b = nonzero(pairing(z3, z2)?, z3, z2)?;
    let c = nonzero(pairing(z4, z2)?, z4, z2)?;
    let d = nonzero(pairing(z4, z1)?, z4, z1)?;
    Ok(a * b.inv() * c * d.inv())
}

/// Similarity class of the cross ratio; independent of the lifts.
pub fn cross_ratio_class(z1: &ProjPoint, z2: &ProjPoint, z3: &ProjPoint, z4: &ProjPoint) -> Result<SimilarityClass> {
    Ok(SimilarityClass::of(cross_ratio(z1, z2, z3, z4)?))
}

/// `(X(z1,z2,z3,z4), X(z1,z4,z3,z2), X(z2,z4,z3,z1))`.
pub fn cross_ratio_triple(
    z1: &ProjPoint,
    z2: &ProjPoint,
    z3: &ProjPoint,
    z4: &ProjPoint,
) -> Result<(Quaternion, Quaternion, Quaternion)> {
    Ok((cross_ratio(z1, z2, z3, z4)?, cross_ratio(z1, z4, z3, z2)?, cross_ratio(z2, z4, z3, z1)?))
}

/// `arccos(Re(-T) / |T|)` for the Hermitian triple product `T`. With the
/// pairing `<z,w> = w* H z` the lift-independent order is
/// `T = <z2,z1><z3,z2><z1,z3>`; rescaling the lifts conjugates `T`.
pub fn angular_invariant(z1: &ProjPoint, z2: &ProjPoint, z3: &ProjPoint) -> Result<f64> {
    let t = pairing(z2, z1)? * pairing(z3, z2)? * pairing(z1, z3)?;
    let scale = z1.lift.norm_sqr() * z2.lift.norm_sqr() * z3.lift.norm_sqr();
    if t.norm() <= 1e-14 * scale {
        return Err(Error::Degenerate("vanishing triple product".into()));
    }
    Ok((-t.re() / t.norm()).clamp(-1.0, 1.0).acos())
}

/// `<pj,pi><pi,pj> / (<pj,pj><pi,pi>)`, equal to `cosh^2(rho/2)`.
pub fn distance_invariant(pi: &ProjPoint, pj: &ProjPoint) -> Result<f64> {
    let (hi, hj) = (herm_norm(&pi.lift), herm_norm(&pj.lift));
    if pi.kind != VectorType::Negative || pj.kind != VectorType::Negative || hi >= 0.0 || hj >= 0.0 {
        return Err(Error::Domain("distance invariant needs two negative points".into()));
    }
    Ok(pairing(pi, pj)?.norm_sqr() / (hi * hj))
}

/// Bergman distance between two negative points.
pub fn bergman_distance(pi: &ProjPoint, pj: &ProjPoint) -> Result<f64> {
    Ok(2.0 * distance_invariant(pi, pj)?.max(1.0).sqrt().acosh())
}

/// `Im(g)/|Im(g)|`, or zero when `|Im(g)| <= ZERO_TOL max(1,|g|)`.
pub fn rotation_invariant(g: Quaternion) -> Quaternion {
    rotation_invariant_tol(g, ZERO_TOL)
}

pub fn rotation_invariant_tol(g: Quaternion, tol: f64) -> Quaternion {
    let v = g.im_norm();
    if v <= tol * g.norm().max(1.0) {
        Quaternion::ZERO
    } else {
        g.im() / v
    }
}

/// Cross ratio slot `X_{kj}` (1-based indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossRatioSlot {
    pub k: usize,
    pub j: usize,
    pub value: Quaternion,
}

/// Angular, distance and rotation invariants of the pair `(k, j)` of negative points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSlot {
    pub k: usize,
    pub j: usize,
    pub angular: f64,
    pub distance: f64,
    pub rotation: Quaternion,
}

/// Lift-independent `|<pj,p1>|^2 |<p3,p2>| / (|<p2,p1>| |<p3,p1>| |<pj,pj>|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSlot {
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantProfile {
    pub n: usize,
    pub m: usize,
    pub i: usize,
    pub u0: Quaternion,
    pub a23: f64,
    pub cross_ratios: Vec<CrossRatioSlot>,
    pub pairs: Vec<PairSlot>,
    pub anchors: Vec<AnchorSlot>,
    pub d: usize,
    pub t: usize,
}

impl InvariantProfile {
    /// Nonzero rotation invariants of negative pairs, row-major.
    pub fn nonzero_rotations(&self) -> Vec<Quaternion> {
        self.pairs.iter().map(|p| p.rotation).filter(|u| *u != Quaternion::ZERO).collect()
    }

    /// Count of zero rotation invariants among negative pairs.
    pub fn zero_rotations(&self) -> usize {
        self.pairs.iter().filter(|p| p.rotation == Quaternion::ZERO).count()
    }

    pub fn cross_ratio(&self, k: usize, j: usize) -> Option<Quaternion> {
        self.cross_ratios.iter().find(|s| s.k == k && s.j == j).map(|s| s.value)
    }

    pub fn pair(&self, k: usize, j: usize) -> Option<&PairSlot> {
        self.pairs.iter().find(|s| s.k == k && s.j == j)
    }

    pub fn anchor(&self, j: usize) -> Option<f64> {
        self.anchors.iter().find(|s| s.j == j).map(|s| s.value)
    }

    /// All quaternion-valued entries in slot order: u0, rotations, cross ratios.
    pub fn quaternion_slots(&self) -> Vec<Quaternion> {
        let mut out = vec![self.u0];
        out.extend(self.pairs.iter().map(|p| p.rotation));
        out.extend(self.cross_ratios.iter().map(|s| s.value));
        out
    }

    /// All real-valued entries in slot order: A23, angular, distance, anchors.
    pub fn real_slots(&self) -> Vec<f64> {
        let mut out = vec![self.a23];
        for p in &self.pairs {
            out.push(p.angular);
            out.push(p.distance);
        }
        out.extend(self.anchors.iter().map(|a| a.value));
        out
    }
}

/// `i(i-3)/2 + (m-i)^2`.
pub fn expected_cross_ratio_count(m: usize, i: usize) -> usize {
    (i * i.saturating_sub(3)) / 2 + (m - i) * (m - i)
}

/// `((m-i)^2 - (m-i))/2 - l`.
pub fn expected_rotation_count(m: usize, i: usize, l: usize) -> usize {
    let q = m - i;
    (q * q - q) / 2 - l
}

/// Cross-ratio slot indices `(k, j)` in order, 1-based.
pub fn cross_ratio_slots(m: usize, i: usize) -> Vec<(usize, usize)> {
    if i < 3 {
        return Vec::new();
    }
    let mut out: Vec<(usize, usize)> = (i + 1..=m).map(|j| (1, j)).collect();
    out.extend((4..=m).map(|j| (2, j)));
    out.extend((4..=m).map(|j| (3, j)));
    for k in 4..=i {
        out.extend((k + 1..=m).map(|j| (k, j)));
    }
    out
}

fn cross_ratio_slot(p: &[ProjPoint], k: usize, j: usize) -> Result<Quaternion> {
    let q = |l: usize| &p[l - 1];
    match k {
        1 => cross_ratio(q(2), q(1), q(3), q(j)),
        2 => cross_ratio(q(1), q(2), q(3), q(j)),
        3 => cross_ratio(q(1), q(3), q(2), q(j)),
        _ => cross_ratio(q(1), q(k), q(2), q(j)),
    }
}

/// The invariant profile, computed from the semi-normalized lifts.
pub fn profile(config: &PointConfig) -> Result<InvariantProfile> {
    let (m, i) = (config.m(), config.i());
    if m < 4 {
        return Err(Error::Unsupported(format!("profile needs at least 4 points, got {m}")));
    }
    let (_, lifts) = semi_normalize_lifts(config)?;
    let pts: Vec<ProjPoint> = config.points().iter().zip(lifts).map(|(p, l)| p.with_lift(l)).collect();
    let q = |l: usize| &pts[l - 1];

    let u0 = rotation_invariant(herm_unchecked(&q(3).lift, &q(2).lift));
    let a23 = angular_invariant(q(1), q(2), q(3))?;

    let mut cross_ratios = Vec::new();
    for (k, j) in cross_ratio_slots(m, i) {
        cross_ratios.push(CrossRatioSlot { k, j, value: cross_ratio_slot(&pts, k, j)? });
    }

    let mut pairs = Vec::new();
    for k in i + 1..=m {
        for j in k + 1..=m {
            let g = herm_unchecked(&q(j).lift, &q(k).lift);
            let angular = if k == 1 { 0.0 } else { angular_invariant(q(1), q(k), q(j))? };
            pairs.push(PairSlot { k, j, angular, distance: distance_invariant(q(k), q(j))?, rotation: rotation_invariant(g) });
        }
    }

    let mut anchors = Vec::new();
    if i >= 3 {
        let g21 = pairing(q(2), q(1))?.norm();
        let g31 = pairing(q(3), q(1))?.norm();
        let g32 = pairing(q(3), q(2))?.norm();
        for j in i + 1..=m {
            let value = pairing(q(j), q(1))?.norm_sqr() * g32 / (g21 * g31 * herm_norm(&q(j).lift).abs());
            anchors.push(AnchorSlot { j, value });
        }
    }

    let t = pairs.iter().filter(|p| p.rotation != Quaternion::ZERO).count();
    Ok(InvariantProfile { n: config.space().n, m, i, u0, a23, d: cross_ratios.len(), cross_ratios, pairs, anchors, t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn pt(space: &HermitianSpace, entries: Vec<Quaternion>) -> ProjPoint {
        ProjPoint::new(space, HVector::new(entries), 1e-12).unwrap()
    }

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    #[test]
    fn cross_ratio_example() {
        let s = HermitianSpace::new(1).unwrap();
        let o = pt(&s, vec![Quaternion::ZERO, Quaternion::ONE]);
        let inf = pt(&s, vec![Quaternion::ONE, Quaternion::ZERO]);
        let u = pt(&s, vec![Quaternion::I, Quaternion::ONE]);
        let v = pt(&s, vec![Quaternion::J, Quaternion::ONE]);
        // <u,o> = conj(1) i = i, <u,inf> = 1, <v,inf> = 1, <v,o> = j
        let x = cross_ratio(&o, &inf, &u, &v).unwrap();
        assert!(x.dist(Quaternion::I * Quaternion::J.inv()) < 1e-15);
        assert!(x.dist(-Quaternion::K) < 1e-15);
    }

    #[test]
    fn telescoping() {
        let s = HermitianSpace::new(1).unwrap();
        let a = pt(&s, vec![q(0.3, 1.0, 0.0, 0.0), Quaternion::ONE]);
        let b = pt(&s, vec![q(-0.5, 0.0, 0.2, 0.0), Quaternion::ONE]);
        let c = pt(&s, vec![q(-2.0, 0.0, 0.0, 1.0), Quaternion::ONE]);
        assert!(cross_ratio(&a, &b, &c, &c).unwrap().dist(Quaternion::ONE) < 1e-14);
    }

    #[test]
    fn angular_extremes() {
        let s = HermitianSpace::new(1).unwrap();
        let o = pt(&s, vec![Quaternion::ZERO, Quaternion::ONE]);
        let inf = pt(&s, vec![Quaternion::ONE, Quaternion::ZERO]);
        let u = pt(&s, vec![Quaternion::I, Quaternion::ONE]);
        assert!((angular_invariant(&o, &inf, &u).unwrap() - FRAC_PI_2).abs() < 1e-12);

        // real null points of H^2_H: all pairings real
        let s2 = HermitianSpace::new(2).unwrap();
        let r = |x: f64| pt(&s2, vec![Quaternion::real(-x * x / 2.0), Quaternion::real(x), Quaternion::ONE]);
        assert!(angular_invariant(&r(0.0), &r(1.0), &r(-2.0)).unwrap() < 1e-9);
    }

    #[test]
    fn angular_invariant_ignores_lifts() {
        let s = HermitianSpace::new(2).unwrap();
        let z = [
            HVector::new(vec![Quaternion::new(-0.5, 0.3, -0.2, 0.1), Quaternion::ONE, Quaternion::ONE]),
            HVector::new(vec![Quaternion::new(-2.0, 0.0, 0.4, 0.0), Quaternion::new(1.0, 0.5, -0.5, 0.0), Quaternion::ONE]),
            HVector::new(vec![Quaternion::new(-0.6, -0.1, 0.0, 0.7), Quaternion::new(0.2, 0.0, 0.6, -0.4), Quaternion::ONE]),
        ];
        let l = [Quaternion::new(0.3, -1.0, 0.2, 0.5), Quaternion::new(-0.7, 0.1, 0.9, 0.2), Quaternion::new(0.1, 0.4, -0.3, 1.2)];
        let a = angular_invariant(&pt(&s, z[0].entries.clone()), &pt(&s, z[1].entries.clone()), &pt(&s, z[2].entries.clone())).unwrap();
        let b = angular_invariant(&pt(&s, z[0].scale(l[0]).entries), &pt(&s, z[1].scale(l[1]).entries), &pt(&s, z[2].scale(l[2]).entries)).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }

    #[test]
    fn distance_invariant_values() {
        let s = HermitianSpace::new(1).unwrap();
        let o = pt(&s, vec![q(-1.0, 0.0, 0.0, 0.0), Quaternion::ONE]);
        assert!((distance_invariant(&o, &o).unwrap() - 1.0).abs() < 1e-15);
        // (-e^rho/2, 1) vs (-1/2, 1) in the upper half space model: distance rho
        let rho = 1.3f64;
        let a = pt(&s, vec![Quaternion::real(-0.5), Quaternion::ONE]);
        let b = pt(&s, vec![Quaternion::real(-0.5 * rho.exp()), Quaternion::ONE]);
        let d = distance_invariant(&a, &b).unwrap();
        assert!((d - (rho / 2.0).cosh().powi(2)).abs() < 1e-12);
        assert!((bergman_distance(&a, &b).unwrap() - rho).abs() < 1e-12);
        let null = pt(&s, vec![Quaternion::ZERO, Quaternion::ONE]);
        assert!(matches!(distance_invariant(&a, &null), Err(Error::Domain(_))));
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_invariant(q(1.0, 2.0, 0.0, 0.0)), Quaternion::I);
        assert_eq!(rotation_invariant(Quaternion::real(5.0)), Quaternion::ZERO);
        let r = 1.0 / 3f64.sqrt();
        assert!(rotation_invariant(q(1.0, 1.0, 1.0, 1.0)).dist(q(0.0, r, r, r)) < 1e-15);
    }

    #[test]
    fn slot_scheme() {
        assert_eq!(cross_ratio_slots(4, 4), vec![(2, 4), (3, 4)]);
        assert_eq!(cross_ratio_slots(4, 3), vec![(1, 4), (2, 4), (3, 4)]);
        assert_eq!(cross_ratio_slots(5, 5).len(), 5);
        assert_eq!(cross_ratio_slots(6, 3).len(), 9);
        assert_eq!(expected_cross_ratio_count(4, 4), 2);
        assert_eq!(expected_cross_ratio_count(4, 3), 1);
        assert_eq!(expected_cross_ratio_count(6, 3), 9);
    }

    #[test]
    fn projective_equality() {
        let s = HermitianSpace::new(1).unwrap();
        let a = pt(&s, vec![q(0.3, 1.0, 0.0, 0.0), Quaternion::ONE]);
        let b = a.with_lift(a.lift.scale(q(0.2, -1.0, 3.0, 0.5)));
        assert!(a.same_point(&b, 1e-12));
        assert!(b.standard_lift().dist_to(&a.lift) < 1e-14);
        let c = pt(&s, vec![q(0.3, 1.0, 0.1, 0.0), Quaternion::ONE]);
        assert!(!a.same_point(&c, 1e-9));
    }

    trait Dist {
        fn dist_to(&self, o: &HVector) -> f64;
    }
    impl Dist for HVector {
        fn dist_to(&self, o: &HVector) -> f64 {
            (self - o).norm()
        }
    }
}
