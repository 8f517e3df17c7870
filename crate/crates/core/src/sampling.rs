//! Seeded generators for points, configurations, normal forms and pairs.
//!
//! Every task draws from its own ChaCha stream `(seed, index)`, so batches
//! are reproducible regardless of how they are scheduled.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gram::PointConfig;
use crate::hlinalg::{HMatrix, HVector};
use crate::isom::{random_member, random_quaternion, random_semisimple_with, ClassSpec, EigenSpec, Isometry};
use crate::quat::Quaternion;

/// RNG for task `index` of a batch seeded with `seed`.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn random_imaginary<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    Quaternion::new(0.0, rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

pub fn random_unit<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    loop {
        let q = random_quaternion(rng);
        if q.norm() > 0.1 {
            return q.unit();
        }
    }
}

/// Nonzero quaternion with modulus in `[0.5, 2]`.
pub fn random_scalar<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    random_unit(rng) * rng.random_range(0.5..=2.0)
}

fn horizontal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Quaternion> {
    (0..n - 1).map(|_| random_quaternion(rng)).collect()
}

/// Boundary point `(-|x|^2/2 + t, x, 1)` with `t` imaginary.
pub fn random_null_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HVector {
    let x = horizontal(n, rng);
    let s: f64 = x.iter().map(|q| q.norm_sqr()).sum();
    let mut e = vec![Quaternion::real(-s / 2.0) + random_imaginary(rng)];
    e.extend(x);
    e.push(Quaternion::ONE);
    HVector::new(e)
}

/// Interior point with `<z, z>` in `[-2, -0.2]`.
pub fn random_negative_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> HVector {
    let x = horizontal(n, rng);
    let s: f64 = x.iter().map(|q| q.norm_sqr()).sum();
    let depth = rng.random_range(0.2..=2.0);
    let mut e = vec![Quaternion::real(-(s + depth) / 2.0) + random_imaginary(rng)];
    e.extend(x);
    e.push(Quaternion::ONE);
    HVector::new(e)
}

/// `m` points, the first `i` on the boundary, with random lifts.
pub fn random_config<R: Rng + ?Sized>(n: usize, m: usize, i: usize, rng: &mut R) -> Result<PointConfig> {
    if i > m {
        return Err(Error::Invalid(format!("i = {i} exceeds m = {m}")));
    }
    for _ in 0..100 {
        let lifts: Vec<HVector> = (0..m)
            .map(|k| {
                let p = if k < i { random_null_point(n, rng) } else { random_negative_point(n, rng) };
                p.scale(random_scalar(rng))
            })
            .collect();
        if let Ok(c) = PointConfig::new(n, i, lifts) {
            return Ok(c);
        }
    }
    Err(Error::Numerical("could not draw a configuration".into()))
}

/// Per-point unit rescaling.
pub fn random_unit_rescaling<R: Rng + ?Sized>(config: &PointConfig, rng: &mut R) -> Result<PointConfig> {
    let l: Vec<Quaternion> = (0..config.m()).map(|_| random_unit(rng)).collect();
    config.rescaled(&l)
}

/// Moves the last point of `config` by a random offset of size about `eps`
/// (staying on the boundary for null points).
pub fn perturb_config<R: Rng + ?Sized>(config: &PointConfig, eps: f64, rng: &mut R) -> Result<PointConfig> {
    let n = config.n();
    let mut lifts = config.lifts();
    let k = config.m() - 1;
    let z = config.points()[k].standard_lift();
    let mut x: Vec<Quaternion> = z.entries[1..n].to_vec();
    for q in &mut x {
        *q += random_quaternion(rng) * eps;
    }
    let s: f64 = x.iter().map(|q| q.norm_sqr()).sum();
    let z0 = z.entries[0];
    let depth = -(2.0 * z0.re() + z.entries[1..n].iter().map(|q| q.norm_sqr()).sum::<f64>());
    let im = Quaternion::new(0.0, z0.a1, z0.a2, z0.a3) + random_imaginary(rng) * eps;
    let mut e = vec![Quaternion::real(-(s + depth) / 2.0) + im];
    e.extend(x);
    e.push(Quaternion::ONE);
    lifts[k] = HVector::new(e);
    PointConfig::new(n, config.i(), lifts)
}

/// `count` angles in `[lo, hi]` pairwise at least `gap` apart.
fn spread_angles<R: Rng + ?Sized>(count: usize, lo: f64, hi: f64, gap: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let mut a: Vec<f64> = (0..count).map(|_| rng.random_range(lo..=hi)).collect();
        a.sort_by(f64::total_cmp);
        if a.windows(2).all(|w| w[1] - w[0] >= gap) {
            return a;
        }
    }
}

fn singles(angles: &[f64]) -> Vec<ClassSpec> {
    angles.iter().map(|&angle| ClassSpec { angle, multiplicity: 1 }).collect()
}

/// Regular hyperbolic normal form: nonreal `theta`, distinct nonreal
/// positive classes.
pub fn random_hyperbolic_spec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> EigenSpec {
    let r = rng.random_range(1.3..=3.0);
    let theta = rng.random_range(0.2..=PI - 0.2);
    let positive = singles(&spread_angles(n - 1, 0.2, PI - 0.2, 0.15, rng));
    EigenSpec::Hyperbolic { r, theta, positive }
}

/// Regular elliptic normal form: `n + 1` distinct nonreal classes.
pub fn random_elliptic_spec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> EigenSpec {
    let mut a = spread_angles(n + 1, 0.2, PI - 0.2, 0.15, rng);
    let k = rng.random_range(0..a.len());
    let neg = a.remove(k);
    EigenSpec::Elliptic { negative: ClassSpec { angle: neg, multiplicity: 1 }, positive: singles(&a) }
}

pub fn random_spec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> EigenSpec {
    if rng.random_bool(0.5) {
        random_hyperbolic_spec(n, rng)
    } else {
        random_elliptic_spec(n, rng)
    }
}

/// Frobenius bound on conjugated samples. Double precision resolves the
/// spectrum of a member only to about `eps |A|^2`, so larger draws are
/// rejected.
pub const SAMPLE_NORM_MAX: f64 = 1e3;

/// Bound on fresh samples, leaving room for one conjugation.
pub const ISOMETRY_NORM_MAX: f64 = 1e2;

/// A regular semisimple element with a random normal form and frame.
pub fn random_isometry<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(EigenSpec, Isometry)> {
    for _ in 0..200 {
        let spec = random_spec(n, rng);
        if let Ok(a) = random_isometry_with(n, &spec, rng) {
            return Ok((spec, a));
        }
    }
    Err(Error::Numerical("could not draw an isometry".into()))
}

/// A random frame for `spec`, redrawn until within [`ISOMETRY_NORM_MAX`].
pub fn random_isometry_with<R: Rng + ?Sized>(n: usize, spec: &EigenSpec, rng: &mut R) -> Result<Isometry> {
    for _ in 0..200 {
        spec.validate(n)?;
        match random_semisimple_with(n, spec, rng) {
            Ok(a) if a.matrix().norm() <= ISOMETRY_NORM_MAX => return Ok(a),
            _ => {}
        }
    }
    Err(Error::Numerical("could not draw a bounded isometry".into()))
}

/// A random member within [`ISOMETRY_NORM_MAX`].
pub fn random_bounded_member<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HMatrix> {
    for _ in 0..1000 {
        let c = random_member(n, rng)?;
        if c.norm() <= ISOMETRY_NORM_MAX {
            return Ok(c);
        }
    }
    Err(Error::Numerical("could not draw a bounded member".into()))
}

/// A random member `C` such that every `C X C^-1` stays within
/// [`SAMPLE_NORM_MAX`]; returns `C` and the conjugates.
pub fn random_conjugation<R: Rng + ?Sized>(xs: &[&Isometry], rng: &mut R) -> Result<(HMatrix, Vec<Isometry>)> {
    let n = xs.first().ok_or_else(|| Error::Invalid("nothing to conjugate".into()))?.n();
    for _ in 0..1000 {
        let c = random_member(n, rng)?;
        let images: Vec<HMatrix> = xs.iter().map(|x| x.conjugated_by(&c)).collect();
        if images.iter().all(|m| m.norm() <= SAMPLE_NORM_MAX) {
            let isos = images.into_iter().map(|m| Isometry::new(m, 1e-7)).collect::<Result<Vec<_>>>()?;
            return Ok((c, isos));
        }
    }
    Err(Error::Numerical("could not draw a bounded conjugation".into()))
}

/// A pair of regular semisimple elements (independent frames).
pub fn random_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<((EigenSpec, Isometry), (EigenSpec, Isometry))> {
    Ok((random_isometry(n, rng)?, random_isometry(n, rng)?))
}

/// `C A C^-1` as an isometry.
pub fn conjugate(c: &HMatrix, a: &Isometry) -> Result<Isometry> {
    Isometry::new(a.conjugated_by(c), 1e-7)
}

/// A generated object tagged with the stream that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample<T> {
    pub index: u64,
    pub seed: u64,
    pub object: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometrySample {
    pub spec: EigenSpec,
    pub matrix: HMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub a: IsometrySample,
    pub b: IsometrySample,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hlinalg::{herm_unchecked, VectorType};
    use crate::invariants::profile;

    #[test]
    fn points_have_the_right_type() {
        let mut r = task_rng(1, 0);
        for n in 1..=3 {
            let z = random_null_point(n, &mut r);
            assert!(herm_unchecked(&z, &z).norm() < 1e-12);
            let w = random_negative_point(n, &mut r);
            assert!(herm_unchecked(&w, &w).re() <= -0.2 + 1e-12);
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let a = random_config(2, 5, 3, &mut task_rng(9, 4)).unwrap();
        let b = random_config(2, 5, 3, &mut task_rng(9, 4)).unwrap();
        assert_eq!(a, b);
        let c = random_config(2, 5, 3, &mut task_rng(9, 5)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perturbation_keeps_types_and_moves_invariants() {
        let mut r = task_rng(2, 0);
        let c = random_config(2, 4, 4, &mut r).unwrap();
        let p = perturb_config(&c, 0.05, &mut r).unwrap();
        assert_eq!(p.points()[3].kind, VectorType::Null);
        let (a, b) = (profile(&c).unwrap(), profile(&p).unwrap());
        assert!(a.cross_ratios.iter().zip(&b.cross_ratios).any(|(x, y)| x.value.dist(y.value) > 1e-4));
    }

    #[test]
    fn specs_are_regular_and_valid() {
        let mut r = task_rng(3, 0);
        for n in 1..=4 {
            for _ in 0..20 {
                let s = random_spec(n, &mut r);
                s.validate(n).unwrap();
            }
            let (spec, a) = random_isometry(n, &mut r).unwrap();
            assert_eq!(a.classification(), spec.kind());
        }
    }
}
