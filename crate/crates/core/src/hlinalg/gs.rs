//! Gram-Schmidt for the indefinite form.

use super::{herm_norm, herm_unchecked, HVector, HermitianSpace, VectorType};
use crate::error::{Error, Result};
use crate::quat::Quaternion;

const DEP_TOL: f64 = 1e-10;

enum Done {
    Single(HVector, f64),
    Pair(HVector, HVector),
}

fn project_off(v: &HVector, done: &[Done]) -> HVector {
    let mut v = v.clone();
    for d in done {
        match d {
            Done::Single(e, s) => {
                let c = herm_unchecked(&v, e) * *s;
                v = &v - &e.scale(c);
            }
            Done::Pair(a, r) => {
                let ca = herm_unchecked(&v, r);
                let cr = herm_unchecked(&v, a);
                v = &(&v - &a.scale(ca)) - &r.scale(cr);
            }
        }
    }
    v
}

/// Orthonormalizes `vectors` in order against the form so that output `k`
/// has `<v_k, v_k> = target_signs[k]`. Zero signs come in consecutive pairs
/// (first zero with the next zero) and produce a null pair `(a, r)` with
/// `<a, r> = 1`. Output positions match input positions.
pub fn gram_schmidt_indefinite(space: &HermitianSpace, vectors: &[HVector], target_signs: &[i8]) -> Result<Vec<HVector>> {
    if vectors.len() != target_signs.len() {
        return Err(Error::LengthMismatch { expected: vectors.len(), found: target_signs.len() });
    }
    if vectors.len() > space.dim() {
        return Err(Error::Dependent);
    }
    for v in vectors {
        if v.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: v.len() });
        }
    }
    let count = |s: i8| target_signs.iter().filter(|&&t| t == s).count();
    let (neg, zero) = (count(-1), count(0));
    if zero % 2 == 1 || neg + zero / 2 > 1 || target_signs.iter().any(|s| !(-1..=1).contains(s)) {
        return Err(Error::Signature);
    }

    let mut out: Vec<Option<HVector>> = vec![None; vectors.len()];
    let mut done: Vec<Done> = Vec::new();
    for k in 0..vectors.len() {
        if out[k].is_some() {
            continue;
        }
        match target_signs[k] {
            0 => {
                let k2 = (k + 1..vectors.len()).find(|&l| target_signs[l] == 0).ok_or(Error::Signature)?;
                let v1 = project_off(&vectors[k], &done);
                let v2 = project_off(&vectors[k2], &done);
                let (a, r) = null_pair(&v1, &v2, vectors[k].norm(), vectors[k2].norm())?;
                out[k] = Some(a.clone());
                out[k2] = Some(r.clone());
                done.push(Done::Pair(a, r));
            }
            s => {
                let v = project_off(&vectors[k], &done);
                let e = unit(&v, vectors[k].norm(), s)?;
                out[k] = Some(e.clone());
                done.push(Done::Single(e, s as f64));
            }
        }
    }
    Ok(out.into_iter().map(|v| v.unwrap()).collect())
}

fn unit(v: &HVector, orig: f64, sign: i8) -> Result<HVector> {
    if v.norm() <= DEP_TOL * orig.max(1.0) {
        return Err(Error::Dependent);
    }
    let h = herm_norm(v);
    if h.abs() <= DEP_TOL * v.norm_sqr() || (h > 0.0) != (sign > 0) {
        return Err(Error::Signature);
    }
    Ok(v.scale_real(1.0 / h.abs().sqrt()))
}

fn null_pair(v1: &HVector, v2: &HVector, n1: f64, n2: f64) -> Result<(HVector, HVector)> {
    if v1.norm() <= DEP_TOL * n1.max(1.0) || v2.norm() <= DEP_TOL * n2.max(1.0) {
        return Err(Error::Dependent);
    }
    let h1 = herm_norm(v1);
    if h1.abs() <= DEP_TOL * v1.norm_sqr() {
        let a = v1.clone();
        let g = herm_unchecked(&a, v2);
        if g.norm() <= DEP_TOL * v1.norm() * v2.norm() {
            return Err(Error::Signature);
        }
        // <a, v2 d> = conj(d) g = 1
        let v = v2.scale(g.inv().conj());
        let t = herm_norm(&v) / 2.0;
        let r = &v - &a.scale(Quaternion::real(t));
        return Ok((a, r));
    }
    let e1 = v1.scale_real(1.0 / h1.abs().sqrt());
    let s1 = h1.signum();
    let w = &v2.clone() - &e1.scale(herm_unchecked(v2, &e1) * s1);
    let h2 = herm_norm(&w);
    if w.norm() <= DEP_TOL * n2.max(1.0) {
        return Err(Error::Dependent);
    }
    if h2.abs() <= DEP_TOL * w.norm_sqr() || h2.signum() == s1 {
        return Err(Error::Signature);
    }
    let e2 = w.scale_real(1.0 / h2.abs().sqrt());
    let (ep, en) = if s1 > 0.0 { (e1, e2) } else { (e2, e1) };
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    Ok(((&ep + &en).scale_real(r2), (&ep - &en).scale_real(r2)))
}

/// Form-orthonormal basis of a nondegenerate subspace spanned by `vectors`,
/// pivoting on the largest `|<v,v>| / |v|^2`. With `complex_only`, the
/// projection coefficients are kept in `C` (right eigenspaces of a nonreal
/// class are complex subspaces).
pub(crate) fn form_orthonormalize(vectors: &[HVector], complex_only: bool) -> Result<Vec<(HVector, VectorType)>> {
    let mut pool: Vec<HVector> = vectors.to_vec();
    let mut out = Vec::with_capacity(pool.len());
    let mut mixers = vec![Quaternion::ONE, Quaternion::I];
    if !complex_only {
        mixers.extend([Quaternion::J, Quaternion::K]);
    }
    let ratio = |v: &HVector| herm_norm(v).abs() / v.norm_sqr();
    while !pool.is_empty() {
        let (mut best, mut best_ratio) = (0, -1.0);
        for (k, v) in pool.iter().enumerate() {
            let r = ratio(v);
            if r > best_ratio {
                (best, best_ratio) = (k, r);
            }
        }
        // a basis of null vectors can still span a nondegenerate space
        if best_ratio < 0.1 {
            let mut mix: Option<(usize, HVector, f64)> = None;
            for p in 0..pool.len() {
                for q in 0..pool.len() {
                    if p == q {
                        continue;
                    }
                    for c in &mixers {
                        let v = &pool[p] + &pool[q].scale(*c);
                        let r = ratio(&v);
                        if r > mix.as_ref().map_or(best_ratio, |m| m.2) {
                            mix = Some((p, v, r));
                        }
                    }
                }
            }
            if let Some((p, v, r)) = mix {
                pool[p] = v;
                (best, best_ratio) = (p, r);
            }
        }
        if best_ratio < 1e-9 {
            return Err(Error::Numerical("degenerate eigenspace".into()));
        }
        let v = pool.swap_remove(best);
        let h = herm_norm(&v);
        let e = v.scale_real(1.0 / h.abs().sqrt());
        let s = h.signum();
        for w in pool.iter_mut() {
            let mut c = herm_unchecked(w, &e) * s;
            if complex_only {
                c = Quaternion::new(c.a0, c.a1, 0.0, 0.0);
            }
            *w = &*w - &e.scale(c);
        }
        let t = if s < 0.0 { VectorType::Negative } else { VectorType::Positive };
        out.push((e, t));
    }
    // negatives first, stable otherwise
    out.sort_by_key(|(_, t)| t.sign());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hlinalg::herm;

    fn real_vec(xs: &[f64]) -> HVector {
        HVector::new(xs.iter().map(|&x| Quaternion::real(x)).collect())
    }

    #[test]
    fn standard_basis_unchanged() {
        let s = HermitianSpace::new(2).unwrap();
        let basis = vec![real_vec(&[1.0, 0.0, 0.0]), real_vec(&[0.0, 1.0, 0.0]), real_vec(&[0.0, 0.0, 1.0])];
        let out = gram_schmidt_indefinite(&s, &basis, &[0, 1, 0]).unwrap();
        assert_eq!(out, basis);
    }

    #[test]
    fn null_pair_from_two_vectors() {
        let s = HermitianSpace::new(1).unwrap();
        let out = gram_schmidt_indefinite(&s, &[real_vec(&[1.0, 1.0]), real_vec(&[1.0, -1.0])], &[0, 0]).unwrap();
        assert!((&out[0] - &real_vec(&[1.0, 0.0])).norm() < 1e-15);
        assert!((&out[1] - &real_vec(&[0.0, 1.0])).norm() < 1e-15);
        assert!(herm(&s, &out[0], &out[1]).unwrap().dist(Quaternion::ONE) < 1e-15);
    }

    #[test]
    fn mixed_signs() {
        let s = HermitianSpace::new(2).unwrap();
        let vs = vec![
            HVector::new(vec![Quaternion::new(1.0, 0.2, -0.2, 0.1), Quaternion::new(0.1, 0.0, 0.2, -0.1), Quaternion::new(-0.1, 0.2, 0.0, 0.3)]),
            HVector::new(vec![Quaternion::new(0.1, 0.0, 0.3, 0.0), Quaternion::new(-0.2, 0.1, 0.0, 0.1), Quaternion::new(1.0, -0.3, 0.2, 0.0)]),
            HVector::new(vec![Quaternion::new(0.0, 0.2, 0.0, -0.1), Quaternion::new(0.9, 0.1, -0.5, 0.0), Quaternion::new(0.2, 0.0, 0.0, 0.3)]),
        ];
        let out = gram_schmidt_indefinite(&s, &vs, &[0, 0, 1]).unwrap();
        let g = |a: usize, b: usize| herm(&s, &out[a], &out[b]).unwrap();
        assert!(g(0, 0).norm() < 1e-12 && g(1, 1).norm() < 1e-12);
        assert!(g(0, 1).dist(Quaternion::ONE) < 1e-12);
        assert!(g(2, 2).dist(Quaternion::ONE) < 1e-12);
        assert!(g(0, 2).norm() < 1e-12 && g(1, 2).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_patterns() {
        let s = HermitianSpace::new(1).unwrap();
        let vs = vec![real_vec(&[1.0, 1.0]), real_vec(&[1.0, 2.0])];
        assert_eq!(gram_schmidt_indefinite(&s, &vs, &[1, 1]), Err(Error::Signature));
        assert_eq!(gram_schmidt_indefinite(&s, &vs, &[-1, -1]), Err(Error::Signature));
        let dep = vec![real_vec(&[1.0, 1.0]), real_vec(&[2.0, 2.0])];
        assert_eq!(gram_schmidt_indefinite(&s, &dep, &[1, -1]), Err(Error::Dependent));
    }
}
