//! Quaternionic vectors and matrices on H^{n,1}.
//!
//! Vectors are right modules: scalars multiply from the right. The form is
//! `<z, w> = w* H z` with `H` the corner matrix (ones at `(0,n)` and `(n,0)`,
//! identity in between), so `o = (0,..,0,1)` and `inf = (1,0,..,0)` are null
//! and `<o, inf> = 1`.

mod eigen;
mod gs;

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quaternion;

pub use eigen::{
    char_poly_from_roots, complex_eigenvalues, right_eigen, EigenClass, EigenData, CLUSTER_TOL,
    RANK_TOL,
};
pub use gs::gram_schmidt_indefinite;
pub(crate) use gs::form_orthonormalize;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorType {
    Negative,
    Null,
    Positive,
}

impl VectorType {
    pub fn sign(self) -> i8 {
        match self {
            VectorType::Negative => -1,
            VectorType::Null => 0,
            VectorType::Positive => 1,
        }
    }
}

/// H^{n,1} with the corner form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HermitianSpace {
    pub n: usize,
}

impl HermitianSpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("n must be positive".into()));
        }
        Ok(HermitianSpace { n })
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// The form matrix `H`.
    pub fn form(&self) -> HMatrix {
        let d = self.dim();
        let mut h = HMatrix::zeros(d, d);
        h[(0, self.n)] = Quaternion::ONE;
        h[(self.n, 0)] = Quaternion::ONE;
        for k in 1..self.n {
            h[(k, k)] = Quaternion::ONE;
        }
        h
    }

    /// `inf = (1, 0, .., 0)`.
    pub fn infinity(&self) -> HVector {
        let mut v = HVector::zeros(self.dim());
        v[0] = Quaternion::ONE;
        v
    }

    /// `o = (0, .., 0, 1)`.
    pub fn origin(&self) -> HVector {
        let mut v = HVector::zeros(self.dim());
        v[self.n] = Quaternion::ONE;
        v
    }

    fn check(&self, v: &HVector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }
}

/// `<z, w> = w* H z`.
pub fn herm(space: &HermitianSpace, z: &HVector, w: &HVector) -> Result<Quaternion> {
    space.check(z)?;
    space.check(w)?;
    Ok(herm_unchecked(z, w))
}

/// Corner-form pairing without dimension checks; `z` and `w` must agree.
pub fn herm_unchecked(z: &HVector, w: &HVector) -> Quaternion {
    let n = z.len() - 1;
    let mut s = w[n].conj() * z[0] + w[0].conj() * z[n];
    for k in 1..n {
        s += w[k].conj() * z[k];
    }
    s
}

/// Real number `<z, z>`.
pub fn herm_norm(z: &HVector) -> f64 {
    herm_unchecked(z, z).re()
}

pub fn classify_vector(space: &HermitianSpace, z: &HVector, tol: f64) -> Result<VectorType> {
    space.check(z)?;
    let e = z.norm_sqr();
    if e == 0.0 {
        return Err(Error::ZeroVector);
    }
    let h = herm_norm(z);
    Ok(if h.abs() <= tol * e {
        VectorType::Null
    } else if h < 0.0 {
        VectorType::Negative
    } else {
        VectorType::Positive
    })
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HVector {
    pub entries: Vec<Quaternion>,
}

impl HVector {
    pub fn new(entries: Vec<Quaternion>) -> Self {
        HVector { entries }
    }

    pub fn zeros(d: usize) -> Self {
        HVector { entries: vec![Quaternion::ZERO; d] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Quaternion> {
        self.entries.iter()
    }

    /// `v * lambda`.
    pub fn scale(&self, lambda: Quaternion) -> HVector {
        HVector { entries: self.entries.iter().map(|q| *q * lambda).collect() }
    }

    pub fn scale_real(&self, s: f64) -> HVector {
        HVector { entries: self.entries.iter().map(|q| *q * s).collect() }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|q| q.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> HVector {
        self.scale_real(1.0 / self.norm())
    }

    /// Euclidean quaternionic inner product `w* z`.
    pub fn dot(z: &HVector, w: &HVector) -> Quaternion {
        z.entries.iter().zip(&w.entries).map(|(a, b)| b.conj() * *a).sum()
    }

    /// Coordinates `(x1; x2)` of `x = x1 + j x2`.
    pub fn to_complex(&self) -> nalgebra::DVector<Complex64> {
        let d = self.len();
        let mut out = nalgebra::DVector::zeros(2 * d);
        for (k, q) in self.entries.iter().enumerate() {
            let (c1, c2) = q.complex_parts();
            out[k] = c1;
            out[d + k] = c2;
        }
        out
    }

    pub fn from_complex(c: &[Complex64]) -> HVector {
        let d = c.len() / 2;
        HVector { entries: (0..d).map(|k| Quaternion::from_complex_parts(c[k], c[d + k])).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|q| q.is_finite())
    }
}

impl Index<usize> for HVector {
    type Output = Quaternion;
    fn index(&self, k: usize) -> &Quaternion {
        &self.entries[k]
    }
}

impl IndexMut<usize> for HVector {
    fn index_mut(&mut self, k: usize) -> &mut Quaternion {
        &mut self.entries[k]
    }
}

impl Add for &HVector {
    type Output = HVector;
    fn add(self, o: &HVector) -> HVector {
        HVector { entries: self.entries.iter().zip(&o.entries).map(|(a, b)| *a + *b).collect() }
    }
}

impl Sub for &HVector {
    type Output = HVector;
    fn sub(self, o: &HVector) -> HVector {
        HVector { entries: self.entries.iter().zip(&o.entries).map(|(a, b)| *a - *b).collect() }
    }
}

impl Neg for &HVector {
    type Output = HVector;
    fn neg(self) -> HVector {
        HVector { entries: self.entries.iter().map(|a| -*a).collect() }
    }
}

/// Row-major quaternionic matrix. JSON: `{"n": .., "rows": [[q, ..], ..]}`
/// with `n + 1` rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct HMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Quaternion>,
}

impl HMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        HMatrix { rows, cols, data: vec![Quaternion::ZERO; rows * cols] }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = HMatrix::zeros(d, d);
        for k in 0..d {
            m[(k, k)] = Quaternion::ONE;
        }
        m
    }

    pub fn diag(entries: &[Quaternion]) -> Self {
        let mut m = HMatrix::zeros(entries.len(), entries.len());
        for (k, q) in entries.iter().enumerate() {
            m[(k, k)] = *q;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Quaternion>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch { expected: c, found: bad.len() });
        }
        Ok(HMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_columns(cols: &[HVector]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |v| v.len());
        let mut m = HMatrix::zeros(r, c);
        for (j, v) in cols.iter().enumerate() {
            for i in 0..r {
                m[(i, j)] = v[i];
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn rows(&self) -> Vec<Vec<Quaternion>> {
        self.data.chunks(self.cols.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> HVector {
        HVector { entries: (0..self.rows).map(|i| self[(i, j)]).collect() }
    }

    pub fn columns(&self) -> Vec<HVector> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn adjoint(&self) -> HMatrix {
        let mut m = HMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &HVector) -> HVector {
        HVector {
            entries: (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
                .collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> HMatrix {
        HMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|q| *q * s).collect() }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|q| q.is_finite())
    }

    pub fn entries(&self) -> &[Quaternion] {
        &self.data
    }

    /// Inverse through the complex embedding.
    pub fn inverse(&self) -> Result<HMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let inv = complex_embed(self)
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular matrix".into()))?;
        Ok(unembed(&inv))
    }

    /// Condition number in the spectral norm, from the embedding.
    pub fn condition(&self) -> f64 {
        let sv = complex_embed(self).singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    n: usize,
    rows: Vec<Vec<Quaternion>>,
}

impl TryFrom<MatrixJson> for HMatrix {
    type Error = Error;
    fn try_from(j: MatrixJson) -> Result<HMatrix> {
        if j.rows.len() != j.n + 1 {
            return Err(Error::DimensionMismatch { expected: j.n + 1, found: j.rows.len() });
        }
        HMatrix::from_rows(j.rows)
    }
}

impl From<HMatrix> for MatrixJson {
    fn from(m: HMatrix) -> MatrixJson {
        MatrixJson { n: m.rows.saturating_sub(1), rows: m.rows() }
    }
}

impl Index<(usize, usize)> for HMatrix {
    type Output = Quaternion;
    fn index(&self, (i, j): (usize, usize)) -> &Quaternion {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for HMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Quaternion {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &HMatrix {
    type Output = HMatrix;
    fn mul(self, o: &HMatrix) -> HMatrix {
        assert_eq!(self.cols, o.rows, "inner dimensions differ");
        let mut m = HMatrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..o.cols {
                    m[(i, j)] += a * o[(k, j)];
                }
            }
        }
        m
    }
}

impl Add for &HMatrix {
    type Output = HMatrix;
    fn add(self, o: &HMatrix) -> HMatrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        HMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl Sub for &HMatrix {
    type Output = HMatrix;
    fn sub(self, o: &HMatrix) -> HMatrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        HMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl Neg for &HMatrix {
    type Output = HMatrix;
    fn neg(self) -> HMatrix {
        self.scale_real(-1.0)
    }
}

/// `[[A1, -conj(A2)], [A2, conj(A1)]]` for `A = A1 + j A2`.
pub fn complex_embed(a: &HMatrix) -> CMatrix {
    let (r, c) = (a.rows, a.cols);
    let mut m = CMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let (a1, a2) = a[(i, j)].complex_parts();
            m[(i, j)] = a1;
            m[(i, c + j)] = -a2.conj();
            m[(r + i, j)] = a2;
            m[(r + i, c + j)] = a1.conj();
        }
    }
    m
}

/// Reads `A` back from the left half of an embedded matrix.
pub fn unembed(m: &CMatrix) -> HMatrix {
    let (r, c) = (m.nrows() / 2, m.ncols() / 2);
    let mut a = HMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            a[(i, j)] = Quaternion::from_complex_parts(m[(i, j)], m[(r + i, j)]);
        }
    }
    a
}

/// Coefficients `(a_1, .., a_{2n+1})` of the characteristic polynomial of the
/// complex embedding, `x^{2n+2} + a_1 x^{2n+1} + .. + 1`.
pub fn char_poly_real_coeffs(a: &HMatrix, tol: f64) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch { expected: a.rows, found: a.cols });
    }
    let roots = complex_eigenvalues(&complex_embed(a))?;
    let c = char_poly_from_roots(&roots);
    let deg = c.len() - 1;
    // eigenvalue backward error grows with |A|
    let scale = c.iter().map(|z| z.norm()).fold(1.0, f64::max) * a.norm().max(1.0);
    let worst_im = c.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if worst_im > tol * scale {
        return Err(Error::Numerical(format!("characteristic polynomial has imaginary residue {worst_im:.3e}")));
    }
    for j in 0..=deg {
        let d = (c[j].re - c[deg - j].re).abs();
        if d > tol * scale {
            return Err(Error::Numerical(format!("characteristic polynomial is not palindromic (defect {d:.3e})")));
        }
    }
    Ok(c[1..deg].iter().map(|z| z.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    #[test]
    fn herm_examples() {
        let s = HermitianSpace::new(1).unwrap();
        let (o, inf) = (s.origin(), s.infinity());
        assert_eq!(herm(&s, &o, &inf).unwrap(), Quaternion::ONE);
        assert_eq!(herm(&s, &o, &o).unwrap(), Quaternion::ZERO);
        let r = 0.5f64.sqrt();
        let z = HVector::new(vec![Quaternion::real(-r), Quaternion::real(r)]);
        assert!((herm(&s, &z, &z).unwrap().re() + 1.0).abs() < 1e-15);
        assert!(herm(&s, &z, &HVector::zeros(3)).is_err());
    }

    #[test]
    fn herm_sesquilinear() {
        let s = HermitianSpace::new(2).unwrap();
        let z = HVector::new(vec![q(1.0, 2.0, 0.0, -1.0), q(0.5, 0.0, 1.0, 0.0), q(-1.0, 0.0, 0.0, 2.0)]);
        let w = HVector::new(vec![q(0.0, 1.0, 1.0, 0.0), q(2.0, -1.0, 0.0, 0.0), q(0.3, 0.0, 0.0, 0.7)]);
        let (al, be) = (q(0.2, -1.0, 0.4, 0.3), q(1.5, 0.2, -0.7, 0.1));
        let lhs = herm(&s, &z.scale(al), &w.scale(be)).unwrap();
        let rhs = be.conj() * herm(&s, &z, &w).unwrap() * al;
        assert!(lhs.dist(rhs) < 1e-13);
        assert!(herm(&s, &z, &w).unwrap().conj().dist(herm(&s, &w, &z).unwrap()) < 1e-14);
        // agrees with w* H z computed as matrices
        let h = s.form();
        let hz = h.mul_vec(&z);
        assert!(HVector::dot(&hz, &w).dist(herm(&s, &z, &w).unwrap()) < 1e-14);
    }

    #[test]
    fn classify_examples() {
        let s1 = HermitianSpace::new(1).unwrap();
        assert_eq!(classify_vector(&s1, &s1.origin(), 1e-9).unwrap(), VectorType::Null);
        let p = HVector::new(vec![Quaternion::real(-1.0), Quaternion::ONE]);
        assert_eq!(classify_vector(&s1, &p, 1e-9).unwrap(), VectorType::Negative);
        let s2 = HermitianSpace::new(2).unwrap();
        let e = HVector::new(vec![Quaternion::ZERO, Quaternion::ONE, Quaternion::ZERO]);
        assert_eq!(classify_vector(&s2, &e, 1e-9).unwrap(), VectorType::Positive);
        assert_eq!(classify_vector(&s1, &HVector::zeros(2), 1e-9), Err(Error::ZeroVector));
    }

    #[test]
    fn embed_examples() {
        let e = complex_embed(&HMatrix::identity(3));
        assert_eq!(e, CMatrix::identity(6, 6));
        let j = complex_embed(&HMatrix::diag(&[Quaternion::J]));
        assert_eq!(j[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(j[(0, 1)], Complex64::new(-1.0, 0.0));
        assert_eq!(j[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(j[(1, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn embedding_matches_vector_action() {
        let a = HMatrix::from_rows(vec![
            vec![q(1.0, 2.0, 3.0, 4.0), q(0.0, -1.0, 0.5, 0.0)],
            vec![q(0.2, 0.0, -1.0, 1.0), q(-2.0, 0.1, 0.0, 0.3)],
        ])
        .unwrap();
        let x = HVector::new(vec![q(0.3, 1.0, -0.2, 0.5), q(1.0, 0.0, 0.0, -1.0)]);
        let lhs = a.mul_vec(&x).to_complex();
        let rhs = complex_embed(&a) * x.to_complex();
        assert!((lhs - rhs).norm() < 1e-14);
        // right multiplication by j
        let xj = x.scale(Quaternion::J).to_complex();
        let c = x.to_complex();
        for k in 0..2 {
            assert!((xj[k] + c[2 + k].conj()).norm() < 1e-15);
            assert!((xj[2 + k] - c[k].conj()).norm() < 1e-15);
        }
        assert_eq!(unembed(&complex_embed(&a)), a);
    }

    #[test]
    fn char_poly_identity() {
        let a = char_poly_real_coeffs(&HMatrix::identity(2), 1e-9).unwrap();
        let expect = [-4.0, 6.0, -4.0];
        for (x, y) in a.iter().zip(expect) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn char_poly_diagonal() {
        let a = HMatrix::diag(&[Quaternion::real(2.0), Quaternion::real(0.5)]);
        let c = char_poly_real_coeffs(&a, 1e-9).unwrap();
        // (x-2)^2 (x-1/2)^2 = x^4 - 5x^3 + 8.25x^2 - 5x + 1
        let expect = [-5.0, 8.25, -5.0];
        for (x, y) in c.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12, "{c:?}");
        }
        let a = HMatrix::diag(&[Quaternion::I, -Quaternion::I]);
        let c = char_poly_real_coeffs(&a, 1e-9).unwrap();
        let expect = [0.0, 2.0, 0.0];
        for (x, y) in c.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn matrix_json() {
        let a = HMatrix::diag(&[Quaternion::real(2.0), Quaternion::real(0.5)]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"n":1,"rows":[[[2.0,0.0,0.0,0.0],[0.0,0.0,0.0,0.0]],[[0.0,0.0,0.0,0.0],[0.5,0.0,0.0,0.0]]]}"#);
        let b: HMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<HMatrix>(r#"{"n":2,"rows":[[[1,0,0,0]]]}"#).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        let a = HMatrix::from_rows(vec![
            vec![q(1.0, 2.0, 3.0, 4.0), q(0.0, -1.0, 0.5, 0.0)],
            vec![q(0.2, 0.0, -1.0, 1.0), q(-2.0, 0.1, 0.0, 0.3)],
        ])
        .unwrap();
        let p = &a * &a.inverse().unwrap();
        assert!((&p - &HMatrix::identity(2)).norm() < 1e-13);
    }
}
