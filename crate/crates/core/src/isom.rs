//! Elements of Sp(n,1): membership, classification, real trace and
//! conjugacy tests for single elements.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hlinalg::{
    char_poly_real_coeffs, complex_eigenvalues, complex_embed, gram_schmidt_indefinite, right_eigen, CMatrix,
    EigenClass, EigenData, HMatrix, HVector, HermitianSpace, VectorType,
};
use crate::quat::{Quaternion, SimilarityClass};

/// Relative tolerance for the palindromy/reality checks on the
/// characteristic polynomial.
pub const CHAR_POLY_TOL: f64 = 1e-8;
/// Condition-number ceiling for random frames.
pub const FRAME_COND_MAX: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Hyperbolic,
    Elliptic,
    Parabolic,
    Unclassified,
}

impl Classification {
    /// Downstream deciders only handle semisimple elements.
    pub fn is_supported(self) -> bool {
        matches!(self, Classification::Hyperbolic | Classification::Elliptic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealTrace {
    pub values: Vec<f64>,
}

impl RealTrace {
    pub fn approx_eq(&self, other: &RealTrace, tol: f64) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0))
    }
}

/// `|A* H A - H|` (Frobenius).
pub fn membership_defect(a: &HMatrix) -> f64 {
    let h = HermitianSpace { n: a.nrows() - 1 }.form();
    let m = &(&a.adjoint() * &h) * a;
    (&m - &h).norm()
}

pub fn is_member(a: &HMatrix, tol: f64) -> bool {
    if !a.is_square() || a.nrows() < 2 || !a.is_finite() {
        return false;
    }
    membership_defect(a) <= tol * a.norm().powi(2).max(1.0)
}

/// `A^-1 = H A* H` for members.
pub fn group_inverse(a: &HMatrix) -> HMatrix {
    let h = HermitianSpace { n: a.nrows() - 1 }.form();
    &(&h * &a.adjoint()) * &h
}

/// One Newton-Schulz step towards Sp(n,1): `C (3I - M) / 2` with
/// `M = H C* H C`.
pub fn project_to_group(c: &HMatrix) -> HMatrix {
    let d = c.nrows();
    let h = HermitianSpace { n: d - 1 }.form();
    let m = &(&(&h * &c.adjoint()) * &h) * c;
    let t = &HMatrix::identity(d).scale_real(3.0) - &m;
    (c * &t).scale_real(0.5)
}

/// A validated element of Sp(n,1) with its spectral data.
#[derive(Clone, Debug, PartialEq)]
pub struct Isometry {
    matrix: HMatrix,
    space: HermitianSpace,
    classification: Classification,
    eigen: Option<EigenData>,
    real_trace: RealTrace,
}

impl Isometry {
    /// Validates membership to `tol` and computes the spectral data.
    pub fn new(matrix: HMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), found: matrix.ncols() });
        }
        if matrix.nrows() < 2 {
            return Err(Error::Invalid("matrix must be at least 2x2".into()));
        }
        if !matrix.is_finite() {
            return Err(Error::Invalid("non-finite matrix entry".into()));
        }
        if !is_member(&matrix, tol) {
            return Err(Error::NotMember(membership_defect(&matrix)));
        }
        let space = HermitianSpace::new(matrix.nrows() - 1)?;
        let coeffs = char_poly_real_coeffs(&matrix, CHAR_POLY_TOL)?;
        let real_trace = RealTrace { values: coeffs[..space.n].to_vec() };
        let (classification, eigen) = match right_eigen(&matrix, tol) {
            Ok(e) => (classify_eigen(&e), Some(e)),
            Err(Error::NotSemisimple) => (classify_defective(&matrix)?, None),
            Err(e) => return Err(e),
        };
        Ok(Isometry { matrix, space, classification, eigen, real_trace })
    }

    pub fn matrix(&self) -> &HMatrix {
        &self.matrix
    }

    pub fn space(&self) -> &HermitianSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn eigen(&self) -> Option<&EigenData> {
        self.eigen.as_ref()
    }

    /// Spectral data, or an error for non-semisimple elements.
    pub fn eigen_data(&self) -> Result<&EigenData> {
        match (&self.eigen, self.classification.is_supported()) {
            (Some(e), true) => Ok(e),
            _ => Err(Error::Unsupported(format!("{:?} element", self.classification).to_lowercase())),
        }
    }

    pub fn real_trace(&self) -> &RealTrace {
        &self.real_trace
    }

    /// The unique negative eigen-class of an elliptic element.
    pub fn negative_class(&self) -> Option<&EigenClass> {
        self.eigen.as_ref().and_then(|e| e.classes.iter().find(|c| c.kind == VectorType::Negative))
    }

    pub fn inverse(&self) -> HMatrix {
        group_inverse(&self.matrix)
    }

    /// `C A C^-1` for a group element `C`.
    pub fn conjugated_by(&self, c: &HMatrix) -> HMatrix {
        &(c * &self.matrix) * &group_inverse(c)
    }
}

fn classify_eigen(e: &EigenData) -> Classification {
    if e.classes.iter().any(|c| c.kind == VectorType::Negative) {
        Classification::Elliptic
    } else if e.classes.iter().any(|c| c.kind == VectorType::Null && (c.class.modulus - 1.0).abs() > 1e-6) {
        Classification::Hyperbolic
    } else {
        Classification::Unclassified
    }
}

/// Defective elements with all eigenvalues on the unit circle are parabolic.
fn classify_defective(a: &HMatrix) -> Result<Classification> {
    let ev = complex_eigenvalues(&complex_embed(a))?;
    if ev.iter().all(|z| (z.norm() - 1.0).abs() < 1e-3) {
        Ok(Classification::Parabolic)
    } else {
        Ok(Classification::Unclassified)
    }
}

pub fn classify(a: &Isometry) -> Classification {
    a.classification()
}

pub fn real_trace(a: &Isometry) -> &RealTrace {
    a.real_trace()
}

/// Relative eigenvalue noise per unit of `|A|^2`: the eigenvector
/// condition of a member grows like `|A|`, and so does the backward error.
pub const SPECTRAL_NOISE: f64 = 1e-13;

/// Comparison tolerance for spectral data of `a` and `b`: the caller's
/// `tol`, raised to the rounding floor of the worse-conditioned input.
pub fn spectral_tol(a: &Isometry, b: &Isometry, tol: f64) -> f64 {
    let s = a.matrix().norm().max(b.matrix().norm());
    tol.max(SPECTRAL_NOISE * s * s)
}

fn multiset_eq(a: &[(SimilarityClass, usize)], b: &[(SimilarityClass, usize)], tol: f64) -> bool {
    let a: Vec<_> = a.iter().filter(|x| x.1 > 0).collect();
    let mut b: Vec<_> = b.iter().filter(|x| x.1 > 0).collect();
    if a.len() != b.len() {
        return false;
    }
    for x in a {
        match b.iter().position(|y| y.1 == x.1 && y.0.approx_eq(&x.0, tol)) {
            Some(k) => {
                b.swap_remove(k);
            }
            None => return false,
        }
    }
    true
}

/// Conjugacy of single semisimple elements: hyperbolic elements by their
/// eigenvalue classes; elliptic elements by the negative class together
/// with the positive classes, where a negative eigenspace of multiplicity
/// `m` contributes `m - 1` positive copies of its class.
pub fn conjugate_single(a: &Isometry, b: &Isometry, tol: f64) -> Result<bool> {
    let ea = a.eigen_data()?;
    let eb = b.eigen_data()?;
    if a.n() != b.n() || a.classification != b.classification {
        return Ok(false);
    }
    let tol = spectral_tol(a, b, tol);
    let classes = |e: &EigenData| -> Vec<(SimilarityClass, usize)> {
        e.classes
            .iter()
            .map(|c| (c.class, if c.kind == VectorType::Negative { c.multiplicity - 1 } else { c.multiplicity }))
            .collect()
    };
    if a.classification == Classification::Elliptic {
        let (na, nb) = (a.negative_class().unwrap(), b.negative_class().unwrap());
        if !na.class.approx_eq(&nb.class, tol) {
            return Ok(false);
        }
    }
    Ok(multiset_eq(&classes(ea), &classes(eb), tol))
}

/// Orthonormal basis (columns) of a complex span.
fn orthonormal_span(vs: &[nalgebra::DVector<Complex64>]) -> CMatrix {
    let m = CMatrix::from_columns(vs);
    let svd = m.svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > 1e-10 * smax.max(1e-300))
        .collect();
    CMatrix::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Largest sine of the principal angles between two complex spans.
pub(crate) fn span_distance(a: &[nalgebra::DVector<Complex64>], b: &[nalgebra::DVector<Complex64>]) -> f64 {
    let (qa, qb) = (orthonormal_span(a), orthonormal_span(b));
    if qa.ncols() != qb.ncols() {
        return 1.0;
    }
    let resid = &qb - &qa * (qa.adjoint() * &qb);
    resid.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Equality of two semisimple elements read off their invariants: real
/// trace, eigenvalue classes, and for every class the eigenset of the fixed
/// complex representative (its projective fixed points and, for nonreal
/// classes, its point on the eigenvalue Grassmannian).
///
/// Spectral subspaces are compared at `sqrt(tol)`: eigenvectors carry the
/// conditioning of the frame while matrix entries do not.
pub fn equal_by_invariants(a: &Isometry, b: &Isometry, tol: f64) -> Result<bool> {
    let ea = a.eigen_data()?;
    let eb = b.eigen_data()?;
    if a.n() != b.n() {
        return Ok(false);
    }
    let loose = tol.sqrt().max(tol);
    if !a.real_trace().approx_eq(b.real_trace(), loose) || ea.classes.len() != eb.classes.len() {
        return Ok(false);
    }
    let mut unused: Vec<&EigenClass> = eb.classes.iter().collect();
    for ca in &ea.classes {
        let Some(k) = unused.iter().position(|cb| cb.multiplicity == ca.multiplicity && cb.class.approx_eq(&ca.class, loose))
        else {
            return Ok(false);
        };
        let cb = unused.swap_remove(k);
        if span_distance(&ca.complex_basis(), &cb.complex_basis()) > loose {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One eigenvalue class in a normal-form specification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    /// Angle in `[0, pi]` of the unit representative `e^{i angle}`.
    pub angle: f64,
    pub multiplicity: usize,
}

/// Diagonal normal form of a semisimple element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EigenSpec {
    /// `diag(r e^{i theta}, e^{i phi_1}, .., r^-1 e^{i theta})`, `r > 1`.
    Hyperbolic { r: f64, theta: f64, positive: Vec<ClassSpec> },
    /// The negative class occupies the first slot; its multiplicity counts
    /// the negative vector plus same-class positive vectors.
    Elliptic { negative: ClassSpec, positive: Vec<ClassSpec> },
}

impl EigenSpec {
    pub fn kind(&self) -> Classification {
        match self {
            EigenSpec::Hyperbolic { .. } => Classification::Hyperbolic,
            EigenSpec::Elliptic { .. } => Classification::Elliptic,
        }
    }

    fn positive_slots(list: &[ClassSpec]) -> Vec<Quaternion> {
        list.iter().flat_map(|c| std::iter::repeat_n(Quaternion::from_polar_i(1.0, c.angle), c.multiplicity)).collect()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let angle_ok = |a: f64| (0.0..=std::f64::consts::PI).contains(&a);
        let total = match self {
            EigenSpec::Hyperbolic { r, theta, positive } => {
                if !(*r > 1.0) || !r.is_finite() || !angle_ok(*theta) {
                    return Err(Error::Invalid("hyperbolic spec needs r > 1 and theta in [0, pi]".into()));
                }
                2 + positive.iter().map(|c| c.multiplicity).sum::<usize>()
            }
            EigenSpec::Elliptic { negative, positive } => {
                if negative.multiplicity == 0 {
                    return Err(Error::Invalid("negative class needs multiplicity >= 1".into()));
                }
                negative.multiplicity + positive.iter().map(|c| c.multiplicity).sum::<usize>()
            }
        };
        let all_angles: Vec<f64> = match self {
            EigenSpec::Hyperbolic { positive, .. } => positive.iter().map(|c| c.angle).collect(),
            EigenSpec::Elliptic { negative, positive } => std::iter::once(negative.angle).chain(positive.iter().map(|c| c.angle)).collect(),
        };
        if all_angles.iter().any(|a| !angle_ok(*a)) {
            return Err(Error::Invalid("angles must lie in [0, pi]".into()));
        }
        if total != n + 1 {
            return Err(Error::Invalid(format!("multiplicities sum to {total}, expected {}", n + 1)));
        }
        Ok(())
    }

    /// Diagonal entries in frame order: `[a, x.., r]` for hyperbolic and
    /// `[x_1 (negative), x..]` for elliptic specs.
    pub fn diagonal(&self) -> Vec<Quaternion> {
        match self {
            EigenSpec::Hyperbolic { r, theta, positive } => {
                let mut d = vec![Quaternion::from_polar_i(*r, *theta)];
                d.extend(Self::positive_slots(positive));
                d.push(Quaternion::from_polar_i(1.0 / r, *theta));
                d
            }
            EigenSpec::Elliptic { negative, positive } => {
                let mut d = Self::positive_slots(&[*negative]);
                d.extend(Self::positive_slots(positive));
                d
            }
        }
    }

    /// Form signs of the frame columns.
    pub fn frame_signs(&self, n: usize) -> Vec<i8> {
        match self {
            EigenSpec::Hyperbolic { .. } => {
                let mut s = vec![0i8];
                s.extend(std::iter::repeat_n(1, n - 1));
                s.push(0);
                s
            }
            EigenSpec::Elliptic { .. } => {
                let mut s = vec![-1i8];
                s.extend(std::iter::repeat_n(1, n));
                s
            }
        }
    }
}

/// Uniform random quaternion with components in `[-1, 1]`.
pub fn random_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    Quaternion::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0))
}

pub fn random_hvector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HVector {
    HVector::new((0..d).map(|_| random_quaternion(rng)).collect())
}

/// Random frame with the given column signs (zeros pair up into null
/// pairs), from seeded random vectors and indefinite Gram-Schmidt, rejecting
/// frames with condition number above [`FRAME_COND_MAX`].
pub fn random_frame<R: Rng + ?Sized>(space: &HermitianSpace, signs: &[i8], rng: &mut R) -> Result<HMatrix> {
    for _ in 0..1000 {
        let vs: Vec<HVector> = (0..space.dim()).map(|_| random_hvector(space.dim(), rng)).collect();
        let Ok(cols) = gram_schmidt_indefinite(space, &vs, signs) else { continue };
        let c = HMatrix::from_columns(&cols);
        if c.condition() <= FRAME_COND_MAX {
            return Ok(c);
        }
    }
    Err(Error::Numerical("could not draw a well-conditioned frame".into()))
}

/// Random element of Sp(n,1): a random frame with null pair first/last.
pub fn random_member<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<HMatrix> {
    let space = HermitianSpace::new(n)?;
    let mut signs = vec![0i8];
    signs.extend(std::iter::repeat_n(1, n - 1));
    signs.push(0);
    random_frame(&space, &signs, rng)
}

/// `C E C^-1` for the normal form `E` of `spec` and a frame `C` whose
/// column signs match the spec.
pub fn from_frame(frame: &HMatrix, spec: &EigenSpec, tol: f64) -> Result<Isometry> {
    let e = HMatrix::diag(&spec.diagonal());
    let a = &(frame * &e) * &frame.inverse()?;
    let iso = Isometry::new(a, tol)?;
    if iso.classification() != spec.kind() {
        return Err(Error::Numerical(format!("expected {:?}, classified {:?}", spec.kind(), iso.classification())));
    }
    Ok(iso)
}

/// Seeded random semisimple element with the given normal form.
pub fn random_semisimple(n: usize, spec: &EigenSpec, seed: u64) -> Result<Isometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_semisimple_with(n, spec, &mut rng)
}

pub fn random_semisimple_with<R: Rng + ?Sized>(n: usize, spec: &EigenSpec, rng: &mut R) -> Result<Isometry> {
    spec.validate(n)?;
    let space = HermitianSpace::new(n)?;
    let frame = random_frame(&space, &spec.frame_signs(n), rng)?;
    from_frame(&frame, spec, 1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diag(xs: &[Quaternion]) -> HMatrix {
        HMatrix::diag(xs)
    }

    #[test]
    fn membership_examples() {
        assert!(is_member(&HMatrix::identity(2), 1e-12));
        assert!(is_member(&diag(&[Quaternion::real(2.0), Quaternion::real(0.5)]), 1e-12));
        assert!(!is_member(&diag(&[Quaternion::real(2.0), Quaternion::real(1.0)]), 1e-9));
        assert!(!is_member(&diag(&[Quaternion::I, -Quaternion::I]), 1e-9));
    }

    #[test]
    fn classify_examples() {
        let h = Isometry::new(diag(&[Quaternion::real(2.0), Quaternion::real(0.5)]), 1e-9).unwrap();
        assert_eq!(h.classification(), Classification::Hyperbolic);
        assert_eq!(h.real_trace().values.len(), 1);
        assert!((h.real_trace().values[0] + 5.0).abs() < 1e-12);

        let e = Isometry::new(diag(&[Quaternion::I, Quaternion::I]), 1e-9).unwrap();
        assert_eq!(e.classification(), Classification::Elliptic);
        let neg = e.negative_class().unwrap();
        assert!((neg.class.angle - PI / 2.0).abs() < 1e-12);
        // (-1, 1)/sqrt(2) is a negative i-eigenvector
        let r = 0.5f64.sqrt();
        let v = HVector::new(vec![Quaternion::real(-r), Quaternion::real(r)]);
        let av = e.matrix().mul_vec(&v);
        assert!((&av - &v.scale(Quaternion::I)).norm() < 1e-15);
        assert!((crate::hlinalg::herm_norm(&v) + 1.0).abs() < 1e-15);

        let mut t = HMatrix::identity(2);
        t[(0, 1)] = Quaternion::I;
        let p = Isometry::new(t, 1e-9).unwrap();
        assert_eq!(p.classification(), Classification::Parabolic);
        assert!(p.eigen_data().is_err());
    }

    #[test]
    fn real_trace_examples() {
        let i = Isometry::new(HMatrix::identity(2), 1e-9).unwrap();
        assert!((i.real_trace().values[0] + 4.0).abs() < 1e-12);
        let a = diag(&[Quaternion::from_polar_i(2.0, PI / 2.0), Quaternion::from_polar_i(0.5, PI / 2.0)]);
        let a = Isometry::new(a, 1e-9).unwrap();
        assert!(a.real_trace().values[0].abs() < 1e-12);
    }

    #[test]
    fn random_semisimple_examples() {
        let spec = EigenSpec::Hyperbolic { r: 2.0, theta: 0.0, positive: vec![] };
        let a = random_semisimple(1, &spec, 7).unwrap();
        assert!((a.real_trace().values[0] + 5.0).abs() < 1e-9);
        let b = random_semisimple(1, &spec, 8).unwrap();
        assert!(conjugate_single(&a, &b, 1e-7).unwrap());

        let spec = EigenSpec::Elliptic {
            negative: ClassSpec { angle: 0.0, multiplicity: 1 },
            positive: vec![ClassSpec { angle: 0.0, multiplicity: 2 }],
        };
        let e = random_semisimple(2, &spec, 3).unwrap();
        assert!((e.matrix() - &HMatrix::identity(3)).norm() < 1e-9);
    }

    #[test]
    fn conjugacy_examples() {
        let d = |r: f64| Isometry::new(diag(&[Quaternion::real(r), Quaternion::real(1.0 / r)]), 1e-9).unwrap();
        assert!(!conjugate_single(&d(2.0), &d(3.0), 1e-9).unwrap());
        assert!(conjugate_single(&d(2.0), &d(2.0), 1e-9).unwrap());

        // swapping which class is negative changes the conjugacy class
        let s1 = EigenSpec::Elliptic {
            negative: ClassSpec { angle: PI / 2.0, multiplicity: 1 },
            positive: vec![ClassSpec { angle: PI / 3.0, multiplicity: 1 }],
        };
        let s2 = EigenSpec::Elliptic {
            negative: ClassSpec { angle: PI / 3.0, multiplicity: 1 },
            positive: vec![ClassSpec { angle: PI / 2.0, multiplicity: 1 }],
        };
        let a = random_semisimple(1, &s1, 1).unwrap();
        let b = random_semisimple(1, &s2, 2).unwrap();
        assert!(a.real_trace().approx_eq(b.real_trace(), 1e-9));
        assert!(!conjugate_single(&a, &b, 1e-7).unwrap());
        let c = random_semisimple(1, &s1, 5).unwrap();
        assert!(conjugate_single(&a, &c, 1e-7).unwrap());
    }

    #[test]
    fn equality_examples() {
        let spec = EigenSpec::Hyperbolic { r: 2.0, theta: 0.7, positive: vec![ClassSpec { angle: 1.2, multiplicity: 1 }] };
        let a = random_semisimple(2, &spec, 11).unwrap();
        assert!(equal_by_invariants(&a, &a, 1e-9).unwrap());
        let neg = Isometry::new(a.matrix().scale_real(-1.0), 1e-9).unwrap();
        assert!(!equal_by_invariants(&a, &neg, 1e-9).unwrap());
    }

    #[test]
    fn eigenvector_rescaled_by_j() {
        // same frame lines, but x replaced by x j: x j is an eigenvector for
        // j^-1 lambda j = conj(lambda), so the stored eigenset changes
        let spec = EigenSpec::Elliptic {
            negative: ClassSpec { angle: 0.9, multiplicity: 1 },
            positive: vec![ClassSpec { angle: 2.1, multiplicity: 1 }],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let space = HermitianSpace::new(1).unwrap();
        let c = random_frame(&space, &spec.frame_signs(1), &mut rng).unwrap();
        let a = from_frame(&c, &spec, 1e-9).unwrap();
        let mut cols = c.columns();
        cols[1] = cols[1].scale(Quaternion::J);
        let c2 = HMatrix::from_columns(&cols);
        let b = from_frame(&c2, &spec, 1e-9).unwrap();
        assert!((a.matrix() - b.matrix()).norm() > 1e-3);
        assert!(conjugate_single(&a, &b, 1e-7).unwrap());
        assert!(!equal_by_invariants(&a, &b, 1e-9).unwrap());
    }

    #[test]
    fn projection_step_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_member(2, &mut rng).unwrap();
        let noisy = &c + &HMatrix::identity(3).scale_real(1e-6);
        let before = membership_defect(&noisy);
        let after = membership_defect(&project_to_group(&noisy));
        assert!(after < before * 1e-3, "{before} {after}");
    }
}
