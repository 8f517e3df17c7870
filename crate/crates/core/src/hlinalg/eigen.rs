//! Eigenvalues of complex matrices and right eigen-decomposition over H.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gs::form_orthonormalize;
use super::{complex_embed, CMatrix, HMatrix, HVector, VectorType};
use crate::error::{Error, Result};
use crate::quat::{Quaternion, SimilarityClass};

/// Relative distance under which two embedding eigenvalues are merged.
pub const CLUSTER_TOL: f64 = 1e-7;
/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Classes with `| |lambda| - 1 |` above this are null.
const UNIT_TOL: f64 = 1e-6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Eigenvalues of a square complex matrix: balancing, Householder
/// reduction to Hessenberg form, then single-shift QR with Wilkinson
/// shifts on the active window.
pub fn complex_eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Invalid("non-finite matrix entry".into()));
    }
    let mut h = m.clone();
    balance(&mut h);
    hessenberg(&mut h);
    hessenberg_qr(h)
}

fn balance(a: &mut CMatrix) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 100 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].l1_norm();
                    r += a[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

fn hessenberg(a: &mut CMatrix) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let xnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in v.iter_mut() {
            *z /= vn;
        }
        for j in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + 1 + i, j)]).sum();
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, j)] -= *vi * s * 2.0;
            }
        }
        for i in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(j, vj)| a[(i, k + 1 + j)] * vj).sum();
            for (j, vj) in v.iter().enumerate() {
                a[(i, k + 1 + j)] -= s * vj.conj() * 2.0;
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// `(c, s)` with `c` real and `[[c, s], [-conj(s), c]] (x; y) = (rho; 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let (ax, ay) = (x.norm(), y.norm());
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn wilkinson(h: &CMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let m = (a + d) * 0.5;
    let disc = (((a - d) * 0.5).powi(2) + b * c).sqrt();
    let (m1, m2) = (m + disc, m - disc);
    if (m1 - d).norm() <= (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

fn hessenberg_qr(mut h: CMatrix) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    let mut eig = vec![ZERO; n];
    let anorm = h.iter().map(|z| z.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
    let max_iter = 100 * n * n;
    let (mut total, mut its) = (0usize, 0usize);
    let mut hi = n - 1;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if s == 0.0 {
                s = anorm;
            }
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        if total >= max_iter {
            return Err(Error::Numerical("QR iteration did not converge".into()));
        }
        its += 1;
        total += 1;
        let shift = if its % 10 == 0 {
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson(&h, hi)
        };
        for k in l..hi {
            let (x, y) = if k == l { (h[(l, l)] - shift, h[(l + 1, l)]) } else { (h[(k, k - 1)], h[(k + 1, k - 1)]) };
            let (c, s) = givens(x, y);
            let c0 = if k == l { l } else { k - 1 };
            for j in c0..=hi {
                let (a, b) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            for i in l..=(k + 2).min(hi) {
                let (a, b) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = a * c + s.conj() * b;
                h[(i, k + 1)] = -s * a + b * c;
            }
        }
    }
    Ok(eig)
}

/// Monic polynomial with the given roots, highest power first.
pub fn char_poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![ZERO; c.len() + 1];
        for (k, ck) in c.iter().enumerate() {
            next[k] += *ck;
            next[k + 1] -= *ck * r;
        }
        c = next;
    }
    c
}

/// One similarity class of right eigenvalues together with a basis of its
/// eigenspace. Every stored vector satisfies `A x = x lambda` for the
/// complex representative `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenClass {
    pub class: SimilarityClass,
    pub multiplicity: usize,
    #[serde(rename = "type")]
    pub kind: VectorType,
    pub vectors: Vec<HVector>,
    /// Type of each stored vector. Vectors of nondegenerate eigenspaces are
    /// form-orthonormal.
    pub signs: Vec<VectorType>,
}

impl EigenClass {
    pub fn lambda(&self) -> Complex64 {
        self.class.representative()
    }

    pub fn lambda_q(&self) -> Quaternion {
        self.class.quaternion()
    }

    pub fn is_real(&self) -> bool {
        self.class.angle == 0.0 || self.class.angle == std::f64::consts::PI
    }

    /// Basis of the `lambda`-eigenspace of the complex embedding.
    pub fn complex_basis(&self) -> Vec<DVector<Complex64>> {
        let mut out: Vec<DVector<Complex64>> = self.vectors.iter().map(|v| v.to_complex()).collect();
        if self.is_real() {
            out.extend(self.vectors.iter().map(|v| v.scale(Quaternion::J).to_complex()));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub classes: Vec<EigenClass>,
}

impl EigenData {
    pub fn total_multiplicity(&self) -> usize {
        self.classes.iter().map(|c| c.multiplicity).sum()
    }

    pub fn negative_classes(&self) -> Vec<&EigenClass> {
        self.classes.iter().filter(|c| c.kind == VectorType::Negative).collect()
    }

    pub fn null_classes(&self) -> Vec<&EigenClass> {
        self.classes.iter().filter(|c| c.kind == VectorType::Null).collect()
    }
}

struct Cluster {
    center: Complex64,
    size: usize,
}

fn cluster(values: &[Complex64]) -> Vec<Cluster> {
    let n = values.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = values[i].norm().max(values[j].norm()).max(1.0);
            if (values[i] - values[j]).norm() < CLUSTER_TOL * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match out.iter_mut().find(|c| c.0 == r) {
            Some(c) => {
                c.1 += values[i];
                c.2 += 1;
            }
            None => out.push((r, values[i], 1)),
        }
    }
    out.into_iter().map(|(_, s, k)| Cluster { center: s / k as f64, size: k }).collect()
}

/// `dim` right singular vectors of `m - lam I` with the smallest singular
/// values; fails when one of them is not negligible.
fn null_space(m: &CMatrix, lam: Complex64, dim: usize, smax: f64) -> Result<Vec<DVector<Complex64>>> {
    let n = m.nrows();
    let shifted = m - CMatrix::identity(n, n) * lam;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Numerical("SVD failed".into()))?;
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
    let mut out = Vec::with_capacity(dim);
    for &k in idx.iter().take(dim) {
        if svd.singular_values[k] > RANK_TOL * smax {
            return Err(Error::NotSemisimple);
        }
        out.push(vt.row(k).adjoint().into_owned());
    }
    Ok(out)
}

/// Embedded image of `x j` given the embedded `x`.
fn times_j(c: &DVector<Complex64>) -> DVector<Complex64> {
    let d = c.len() / 2;
    let mut out = DVector::zeros(c.len());
    for k in 0..d {
        out[k] = -c[d + k].conj();
        out[d + k] = c[k].conj();
    }
    out
}

/// Greedy quaternionic Gram-Schmidt (Euclidean) picking `m` H-independent
/// directions out of `cands`.
fn select_independent(cands: &[HVector], m: usize) -> Result<Vec<HVector>> {
    let mut chosen: Vec<HVector> = Vec::with_capacity(m);
    let mut pool: Vec<HVector> = cands.to_vec();
    for _ in 0..m {
        let (best, norm) = pool
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v.norm()))
            .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == usize::MAX || norm < 1e-6 {
            return Err(Error::Numerical("eigenspace basis is degenerate".into()));
        }
        let u = pool.swap_remove(best).normalized();
        for v in pool.iter_mut() {
            let c = HVector::dot(v, &u);
            *v = &*v - &u.scale(c);
        }
        chosen.push(u);
    }
    Ok(chosen)
}

fn class_order(a: &EigenClass, b: &EigenClass) -> std::cmp::Ordering {
    if (a.class.angle - b.class.angle).abs() > CLUSTER_TOL {
        a.class.angle.partial_cmp(&b.class.angle).unwrap()
    } else {
        b.class.modulus.partial_cmp(&a.class.modulus).unwrap()
    }
}

/// Right eigen-decomposition of a semisimple quaternionic matrix.
///
/// `tol` bounds the eigen-equation residual `|Ax - x lambda|` relative to
/// `|A| |x|`; it is floored at `RANK_TOL`.
pub fn right_eigen(a: &HMatrix, tol: f64) -> Result<EigenData> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
    }
    let d = a.nrows();
    let ac = complex_embed(a);
    let values = complex_eigenvalues(&ac)?;
    let smax = ac.clone().singular_values().max().max(f64::MIN_POSITIVE);

    let mut classes = Vec::new();
    let mut columns: Vec<DVector<Complex64>> = Vec::with_capacity(2 * d);
    let (mut lower, mut upper) = (0usize, 0usize);
    for cl in cluster(&values) {
        let c = cl.center;
        let real = c.im.abs() <= 0.5 * CLUSTER_TOL * c.norm().max(1.0);
        if !real && c.im < 0.0 {
            lower += cl.size;
            continue;
        }
        let lam = if real { Complex64::new(c.re, 0.0) } else { c };
        if real && cl.size % 2 == 1 {
            return Err(Error::Numerical("unpaired real eigenvalue of the embedding".into()));
        }
        let basis = null_space(&ac, lam, cl.size, smax)?;
        let mult = if real { cl.size / 2 } else { cl.size };
        if !real {
            upper += cl.size;
        }
        for b in &basis {
            columns.push(b.clone());
            if !real {
                columns.push(times_j(b));
            }
        }
        let cand: Vec<HVector> = basis.iter().map(|b| HVector::from_complex(b.as_slice())).collect();
        let vecs = if real { select_independent(&cand, mult)? } else { cand };

        let class = SimilarityClass::from_complex(lam);
        let (vectors, signs, kind) = if (class.modulus - 1.0).abs() > UNIT_TOL {
            let v: Vec<HVector> = vecs.iter().map(|v| v.normalized()).collect();
            let s = vec![VectorType::Null; v.len()];
            (v, s, VectorType::Null)
        } else {
            // Inside Sp(n,1) unit-modulus eigenspaces are nondegenerate; for
            // other matrices fall back to per-vector types.
            let on = match form_orthonormalize(&vecs, !real) {
                Ok(on) => on,
                Err(_) => vecs
                    .iter()
                    .map(|v| {
                        let v = v.normalized();
                        let h = super::herm_norm(&v);
                        let t = if h.abs() <= tol.max(RANK_TOL) {
                            VectorType::Null
                        } else if h < 0.0 {
                            VectorType::Negative
                        } else {
                            VectorType::Positive
                        };
                        (v, t)
                    })
                    .collect(),
            };
            let kind = if on.iter().any(|(_, s)| *s == VectorType::Negative) {
                VectorType::Negative
            } else if on.iter().any(|(_, s)| *s == VectorType::Null) {
                VectorType::Null
            } else {
                VectorType::Positive
            };
            let (v, s): (Vec<_>, Vec<_>) = on.into_iter().unzip();
            (v, s, kind)
        };
        classes.push(EigenClass { class, multiplicity: mult, kind, vectors, signs });
    }
    if columns.len() != 2 * d || lower != upper {
        return Err(Error::Numerical("embedding eigenvalues are not in conjugate pairs".into()));
    }

    // Split Jordan blocks give individually well-defined eigenvectors that
    // are nearly parallel; catch them through the full eigenvector matrix.
    let cols: Vec<DVector<Complex64>> = columns.iter().map(|c| c.unscale(c.norm())).collect();
    let sv = CMatrix::from_columns(&cols).singular_values();
    if sv.min() < RANK_TOL * sv.max() {
        return Err(Error::NotSemisimple);
    }

    let anorm = a.norm();
    let bound = tol.max(RANK_TOL) * anorm.max(1.0);
    for cl in &classes {
        let lq = cl.lambda_q();
        for v in &cl.vectors {
            let r = (&a.mul_vec(v) - &v.scale(lq)).norm();
            if r > bound * v.norm() {
                return Err(Error::Numerical(format!("eigenvector residual {r:.3e}")));
            }
        }
    }
    classes.sort_by(class_order);
    Ok(EigenData { classes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_on_known_spectrum() {
        let vals = [Complex64::new(2.0, 1.0), Complex64::new(-1.0, 0.5), Complex64::new(0.3, 0.0), Complex64::new(0.0, -3.0)];
        let mut t = CMatrix::zeros(4, 4);
        for (k, v) in vals.iter().enumerate() {
            t[(k, k)] = *v;
            for j in k + 1..4 {
                t[(k, j)] = Complex64::new(0.1 * (k + j) as f64, -0.2);
            }
        }
        let q = CMatrix::from_fn(4, 4, |i, j| {
            let t = (i * 4 + j) as f64;
            Complex64::new((1.3 * t).sin() + if i == j { 2.0 } else { 0.0 }, (0.7 * t).cos())
        });
        let qi = q.clone().try_inverse().unwrap();
        let m = &q * &t * &qi;
        let mut got = complex_eigenvalues(&m).unwrap();
        for v in vals {
            let (k, _) = got
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - v).norm().partial_cmp(&(b.1 - v).norm()).unwrap())
                .unwrap();
            assert!((got[k] - v).norm() < 1e-10, "{got:?}");
            got.remove(k);
        }
    }

    #[test]
    fn poly_from_roots() {
        let c = char_poly_from_roots(&[Complex64::new(1.0, 0.0); 4]);
        let expect = [1.0, -4.0, 6.0, -4.0, 1.0];
        for (a, b) in c.iter().zip(expect) {
            assert!((a.re - b).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn jordan_block_is_rejected() {
        let mut a = HMatrix::identity(2);
        a[(0, 1)] = Quaternion::I;
        assert_eq!(right_eigen(&a, 1e-9), Err(Error::NotSemisimple));
    }

    #[test]
    fn similar_eigenvalues_merge() {
        let a = HMatrix::diag(&[Quaternion::I, -Quaternion::I]);
        let e = right_eigen(&a, 1e-9).unwrap();
        assert_eq!(e.classes.len(), 1);
        assert_eq!(e.classes[0].multiplicity, 2);
        assert!((e.classes[0].class.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn diagonal_hyperbolic() {
        let a = HMatrix::diag(&[Quaternion::real(2.0), Quaternion::real(0.5)]);
        let e = right_eigen(&a, 1e-9).unwrap();
        assert_eq!(e.classes.len(), 2);
        assert!((e.classes[0].class.modulus - 2.0).abs() < 1e-12);
        assert!((e.classes[1].class.modulus - 0.5).abs() < 1e-12);
        for c in &e.classes {
            assert_eq!(c.kind, VectorType::Null);
            assert_eq!(c.multiplicity, 1);
        }
    }
}
