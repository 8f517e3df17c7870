//! Eigenframes and associated points of semisimple isometries, canonical
//! tuples of pairs, eigenvalue Grassmannians, and the conjugacy decider for
//! pairs of semisimple elements.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decision::{Decision, Reason, Verdict};
use crate::error::{Error, Result};
use crate::hlinalg::{complex_embed, herm_unchecked, CMatrix, HMatrix, HVector, HermitianSpace, VectorType};
use crate::invariants::{same_line, ProjPoint};
use crate::isom::{conjugate_single, project_to_group, span_distance, spectral_tol, Classification, Isometry};
use crate::quat::{Quaternion, SimilarityClass};

/// Relative singular value threshold for the conjugator null space.
pub const NULLSPACE_TOL: f64 = 1e-7;
/// Relative defect allowed in `D* J D = s J` before rescaling.
pub const FORM_TOL: f64 = 1e-6;
/// Bound on the relative conjugation residual of a witness.
pub const PAIR_WITNESS_TOL: f64 = 1e-7;
const CLASS_MATCH_TOL: f64 = 1e-6;

/// Consecutive frame columns belonging to one eigenvalue class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBlock {
    pub start: usize,
    pub len: usize,
    pub class: SimilarityClass,
    #[serde(rename = "type")]
    pub kind: VectorType,
}

impl FrameBlock {
    pub fn is_real(&self) -> bool {
        self.class.angle.abs() <= 1e-12 || (self.class.angle - std::f64::consts::PI).abs() <= 1e-12
    }
}

/// Orthonormal eigenframe. Hyperbolic columns are `[a, x_1.., r]` with
/// `<a,r> = 1`; elliptic columns are `[x_1, x_2..]` with `<x_1,x_1> = -1`.
/// Each column satisfies `A c_k = c_k eigenvalues[k]` exactly up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenFrame {
    pub kind: Classification,
    pub columns: Vec<HVector>,
    pub eigenvalues: Vec<Quaternion>,
    pub blocks: Vec<FrameBlock>,
}

impl EigenFrame {
    pub fn n(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn matrix(&self) -> HMatrix {
        HMatrix::from_columns(&self.columns)
    }

    /// `C* H C` for a normalized frame: the corner form for hyperbolic
    /// frames, `diag(-1, 1, .., 1)` for elliptic ones.
    pub fn model_form(&self) -> HMatrix {
        let n = self.n();
        match self.kind {
            Classification::Hyperbolic => HermitianSpace { n }.form(),
            _ => {
                let mut d = vec![Quaternion::ONE; n + 1];
                d[0] = Quaternion::real(-1.0);
                HMatrix::diag(&d)
            }
        }
    }

    /// Largest entry of `C* H C - J`.
    pub fn normalization_defect(&self) -> f64 {
        let c = self.matrix();
        let h = HermitianSpace { n: self.n() }.form();
        let g = &(&c.adjoint() * &h) * &c;
        (&g - &self.model_form()).entries().iter().map(|q| q.norm()).fold(0.0, f64::max)
    }

    /// `C E C^-1`.
    pub fn reassemble(&self) -> Result<HMatrix> {
        let c = self.matrix();
        Ok(&(&c * &HMatrix::diag(&self.eigenvalues)) * &c.inverse()?)
    }

    pub fn a(&self) -> Option<&HVector> {
        (self.kind == Classification::Hyperbolic).then(|| &self.columns[0])
    }

    pub fn r(&self) -> Option<&HVector> {
        (self.kind == Classification::Hyperbolic).then(|| &self.columns[self.n()])
    }

    /// The positive eigenvectors `x_1, ..` in order.
    pub fn x(&self) -> Vec<&HVector> {
        match self.kind {
            Classification::Hyperbolic => self.columns[1..self.n()].iter().collect(),
            _ => self.columns.iter().collect(),
        }
    }

    fn x_column(&self, l: usize) -> usize {
        match self.kind {
            Classification::Hyperbolic => l,
            _ => l - 1,
        }
    }

    /// Column index behind associated point `l` (1-based), when the point is
    /// built from an `x` vector.
    fn point_column(&self, l: usize) -> Option<usize> {
        match self.kind {
            Classification::Hyperbolic if l >= 3 => Some(self.x_column(l - 2)),
            Classification::Elliptic if l >= 2 => Some(self.x_column(l)),
            _ => None,
        }
    }

    fn scale_column(&mut self, k: usize, lambda: Quaternion) {
        self.columns[k] = self.columns[k].scale(lambda);
        self.eigenvalues[k] = lambda.inv() * self.eigenvalues[k] * lambda;
    }

    /// Associated points: `a, r, (a - r)/sqrt2 + x_l` for hyperbolic frames,
    /// `x_1, x_1 sqrt2 + x_j` for elliptic ones.
    pub fn associated_points(&self) -> Vec<ProjPoint> {
        let n = self.n();
        match self.kind {
            Classification::Hyperbolic => {
                let (a, r) = (&self.columns[0], &self.columns[n]);
                let mid = (a - r).scale_real(FRAC_1_SQRT_2);
                let mut out = vec![
                    ProjPoint { lift: a.clone(), kind: VectorType::Null },
                    ProjPoint { lift: r.clone(), kind: VectorType::Null },
                ];
                for x in &self.columns[1..n] {
                    out.push(ProjPoint { lift: &mid + x, kind: VectorType::Null });
                }
                out
            }
            _ => {
                let x1 = &self.columns[0];
                let mut out = vec![ProjPoint { lift: x1.clone(), kind: VectorType::Negative }];
                for x in &self.columns[1..] {
                    out.push(ProjPoint { lift: &x1.scale_real(SQRT_2) + x, kind: VectorType::Negative });
                }
                out
            }
        }
    }

    /// Fixed subspaces whose non-positive lines are the fixed points.
    fn fixed_sets(&self) -> Vec<Vec<HVector>> {
        match self.kind {
            Classification::Hyperbolic => vec![vec![self.columns[0].clone()], vec![self.columns[self.n()].clone()]],
            _ => {
                let b = &self.blocks[0];
                vec![self.columns[b.start..b.start + b.len].to_vec()]
            }
        }
    }
}

fn require_semisimple(a: &Isometry) -> Result<()> {
    match a.classification() {
        Classification::Hyperbolic | Classification::Elliptic => Ok(()),
        c => Err(Error::Unsupported(format!("{c:?} elements have no eigenframe"))),
    }
}

/// Orthonormal eigenframe of a hyperbolic or elliptic element.
pub fn eigenframe(a: &Isometry) -> Result<EigenFrame> {
    require_semisimple(a)?;
    let e = a.eigen_data()?;
    let n = a.n();
    let mut columns = Vec::with_capacity(n + 1);
    let mut eigenvalues = Vec::with_capacity(n + 1);
    let mut blocks = Vec::new();
    let mut push_block = |columns: &mut Vec<HVector>, eigenvalues: &mut Vec<Quaternion>, vs: &[HVector], class: SimilarityClass, kind: VectorType| {
        blocks.push(FrameBlock { start: columns.len(), len: vs.len(), class, kind });
        for v in vs {
            columns.push(v.clone());
            eigenvalues.push(class.quaternion());
        }
    };
    match a.classification() {
        Classification::Hyperbolic => {
            let nulls = e.null_classes();
            let big = nulls.iter().find(|c| c.class.modulus > 1.0);
            let small = nulls.iter().find(|c| c.class.modulus < 1.0);
            let (Some(big), Some(small)) = (big, small) else {
                return Err(Error::Numerical("hyperbolic element without a null pair".into()));
            };
            if nulls.len() != 2 || big.vectors.len() != 1 || small.vectors.len() != 1 {
                return Err(Error::Numerical("unexpected null eigenspaces".into()));
            }
            let av = big.vectors[0].clone();
            let mut rv = small.vectors[0].clone();
            let g = herm_unchecked(&av, &rv);
            let mut c = g.inv().conj();
            if !small.is_real() {
                c = Quaternion::new(c.a0, c.a1, 0.0, 0.0);
            }
            rv = rv.scale(c);
            // balance Euclidean sizes without changing <a, r>
            let s = (rv.norm() / av.norm()).sqrt();
            let (av, rv) = (av.scale_real(s), rv.scale_real(1.0 / s));
            push_block(&mut columns, &mut eigenvalues, &[av], big.class, VectorType::Null);
            for cl in e.classes.iter().filter(|c| c.kind == VectorType::Positive) {
                push_block(&mut columns, &mut eigenvalues, &cl.vectors, cl.class, VectorType::Positive);
            }
            push_block(&mut columns, &mut eigenvalues, &[rv], small.class, VectorType::Null);
        }
        _ => {
            let negs = e.negative_classes();
            if negs.len() != 1 || negs[0].signs.first() != Some(&VectorType::Negative) {
                return Err(Error::Numerical("elliptic element without a unique negative class".into()));
            }
            push_block(&mut columns, &mut eigenvalues, &negs[0].vectors, negs[0].class, VectorType::Negative);
            for cl in e.classes.iter().filter(|c| c.kind == VectorType::Positive) {
                push_block(&mut columns, &mut eigenvalues, &cl.vectors, cl.class, VectorType::Positive);
            }
        }
    }
    if columns.len() != n + 1 {
        return Err(Error::Numerical(format!("eigenframe has {} columns, expected {}", columns.len(), n + 1)));
    }
    Ok(EigenFrame { kind: a.classification(), columns, eigenvalues, blocks })
}

/// Associated points of `a` from its eigenframe.
pub fn associated_points(a: &Isometry) -> Result<Vec<ProjPoint>> {
    Ok(eigenframe(a)?.associated_points())
}

/// Basis of the eigenset `{x : T x = x lambda}` for the complex
/// representative `lambda` of a nonreal class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrassmannianPoint {
    pub class: SimilarityClass,
    pub basis: Vec<HVector>,
}

pub fn grassmannian_point(a: &Isometry, class: &SimilarityClass) -> Result<GrassmannianPoint> {
    let e = a.eigen_data()?;
    if class.is_real(1e-12) {
        return Err(Error::Domain("the Grassmannian of a real class is a single point".into()));
    }
    let cl = e
        .classes
        .iter()
        .find(|c| c.class.approx_eq(class, CLASS_MATCH_TOL))
        .ok_or_else(|| Error::Domain("class is not in the spectrum".into()))?;
    Ok(GrassmannianPoint { class: cl.class, basis: cl.vectors.clone() })
}

/// Whether two eigensets coincide (principal angles below `tol`).
pub fn grassmannian_equal(p: &GrassmannianPoint, q: &GrassmannianPoint, tol: f64) -> Result<bool> {
    if !p.class.approx_eq(&q.class, CLASS_MATCH_TOL) {
        return Err(Error::Invalid("Grassmannian points of different classes".into()));
    }
    if p.basis.len() != q.basis.len() {
        return Ok(false);
    }
    let cp: Vec<DVector<Complex64>> = p.basis.iter().map(|v| v.to_complex()).collect();
    let cq: Vec<DVector<Complex64>> = q.basis.iter().map(|v| v.to_complex()).collect();
    Ok(span_distance(&cp, &cq) <= tol)
}

fn complex_span(vs: &[HVector]) -> CMatrix {
    let mut cols = Vec::with_capacity(2 * vs.len());
    for v in vs {
        cols.push(v.to_complex());
        cols.push(v.scale(Quaternion::J).to_complex());
    }
    CMatrix::from_columns(&cols)
}

/// Whether two fixed subspaces share a null or negative line.
fn share_fixed_point(s: &[HVector], t: &[HVector]) -> bool {
    if s.len() == 1 && t.len() == 1 {
        return same_line(&s[0], &t[0], 1e-8);
    }
    let d = s[0].len();
    let (cs, ct) = (complex_span(s), complex_span(t));
    let mut m = CMatrix::zeros(2 * d, cs.ncols() + ct.ncols());
    m.view_mut((0, 0), (2 * d, cs.ncols())).copy_from(&cs);
    m.view_mut((0, cs.ncols()), (2 * d, ct.ncols())).copy_from(&(-&ct));
    let k = m.ncols();
    let rows = k.max(m.nrows());
    let mut padded = CMatrix::zeros(rows, k);
    padded.view_mut((0, 0), (m.nrows(), k)).copy_from(&m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
    let null: Vec<usize> = (0..k).filter(|&i| svd.singular_values[i] <= 1e-8 * smax).collect();
    if null.is_empty() {
        return false;
    }
    let h = complex_embed(&HermitianSpace { n: d - 1 }.form());
    let vecs: Vec<DVector<Complex64>> = null
        .iter()
        .map(|&i| {
            let coeff = vt.row(i).adjoint();
            &cs * coeff.rows(0, cs.ncols())
        })
        .collect();
    let w = CMatrix::from_columns(&vecs);
    let g = w.adjoint() * h * &w;
    let scale = w.norm_squared().max(f64::MIN_POSITIVE);
    g.symmetric_eigenvalues().iter().any(|&l| l <= 1e-8 * scale)
}

/// Whether `a` and `b` share a fixed point in the closure of the space.
pub fn common_fixed_point(fa: &EigenFrame, fb: &EigenFrame) -> bool {
    fa.fixed_sets().iter().any(|s| fb.fixed_sets().iter().any(|t| share_fixed_point(s, t)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Hyperbolic,
    Elliptic,
    Mixed,
}

fn pair_kind(fa: &EigenFrame, fb: &EigenFrame) -> PairKind {
    match (fa.kind, fb.kind) {
        (Classification::Hyperbolic, Classification::Hyperbolic) => PairKind::Hyperbolic,
        (Classification::Elliptic, Classification::Elliptic) => PairKind::Elliptic,
        _ => PairKind::Mixed,
    }
}

/// Applies the cross-normalization linking two eigenframes:
/// `<r_A, a_B> = 1` (hyperbolic pair), `<x_1A, x_1B>` positive real
/// (elliptic pair), `<r_A, x_1B> = 1` or `<x_1A, a_B> = 1` (mixed pair).
pub fn normalize_pair(mut fa: EigenFrame, mut fb: EigenFrame) -> Result<(EigenFrame, EigenFrame)> {
    if fa.n() != fb.n() {
        return Err(Error::DimensionMismatch { expected: fa.n(), found: fb.n() });
    }
    if common_fixed_point(&fa, &fb) {
        return Err(Error::Unsupported("the elements share a fixed point".into()));
    }
    let n = fa.n();
    let nonzero = |g: Quaternion| -> Result<Quaternion> {
        if g.norm() <= 1e-14 {
            return Err(Error::Degenerate("vanishing cross pairing".into()));
        }
        Ok(g)
    };
    match (fa.kind, fb.kind) {
        (Classification::Hyperbolic, Classification::Hyperbolic) => {
            let g = nonzero(herm_unchecked(&fa.columns[n], &fb.columns[0]))?;
            let l = g.conj().inv();
            fb.scale_column(0, l);
            fb.scale_column(n, l.conj().inv());
        }
        (Classification::Elliptic, Classification::Elliptic) => {
            let g = nonzero(herm_unchecked(&fa.columns[0], &fb.columns[0]))?;
            fb.scale_column(0, g.unit());
        }
        (Classification::Hyperbolic, _) => {
            let g = nonzero(herm_unchecked(&fa.columns[n], &fb.columns[0]))?;
            let mu = g.inv();
            fa.scale_column(n, mu);
            fa.scale_column(0, mu.conj().inv());
        }
        _ => {
            let g = nonzero(herm_unchecked(&fa.columns[0], &fb.columns[0]))?;
            let l = g.conj().inv();
            fb.scale_column(0, l);
            fb.scale_column(n, l.conj().inv());
        }
    }
    Ok((fa, fb))
}

/// Normalized eigenframes of a pair without a common fixed point.
pub fn pair_frame(a: &Isometry, b: &Isometry) -> Result<(EigenFrame, EigenFrame)> {
    normalize_pair(eigenframe(a)?, eigenframe(b)?)
}

/// Ordered associated points of a pair under the canonical ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTuple {
    pub kind: PairKind,
    pub labels: Vec<String>,
    pub points: Vec<ProjPoint>,
    /// Block sizes of the positive classes of `A` then `B` (elliptic
    /// negative blocks first).
    pub multiplicities: (Vec<usize>, Vec<usize>),
    /// Number of distinct points before any repair.
    pub t: usize,
    /// Labels of the points moved by the repair rule.
    pub repaired: Vec<String>,
}

fn block_sizes(f: &EigenFrame) -> Vec<usize> {
    f.blocks.iter().filter(|b| b.kind != VectorType::Null).map(|b| b.len).collect()
}

fn distinct_count(points: &[ProjPoint]) -> usize {
    let mut reps: Vec<&ProjPoint> = Vec::new();
    for p in points {
        if !reps.iter().any(|q| q.same_point(p, 1e-8)) {
            reps.push(p);
        }
    }
    reps.len()
}

/// Canonical tuple for given (already cross-normalized) frames. Coincident
/// points are separated by rotating the responsible `x` vector by a unit
/// complex scalar, up to eight attempts per collision.
pub fn canonical_tuple_from_frames(fa: &EigenFrame, fb: &EigenFrame) -> Result<CanonicalTuple> {
    let (mut fa, mut fb) = (fa.clone(), fb.clone());
    let kind = pair_kind(&fa, &fb);
    let first = fa.associated_points();
    let second = fb.associated_points();
    let mut all = first.clone();
    all.extend(second.iter().cloned());
    let t = distinct_count(&all);
    let mut repaired = Vec::new();
    for attempt in 1..=8 {
        let pa = fa.associated_points();
        let pb = fb.associated_points();
        let clash = (0..pa.len()).flat_map(|i| (0..pb.len()).map(move |j| (i, j))).find(|&(i, j)| pa[i].same_point(&pb[j], 1e-8));
        let Some((i, j)) = clash else {
            let mut labels: Vec<String> = (1..=pa.len()).map(|l| format!("p{l}")).collect();
            labels.extend((1..=pb.len()).map(|l| format!("q{l}")));
            let mut points = pa;
            points.extend(pb);
            return Ok(CanonicalTuple {
                kind,
                labels,
                points,
                multiplicities: (block_sizes(&fa), block_sizes(&fb)),
                t,
                repaired,
            });
        };
        let phase = Quaternion::from_polar_i(1.0, attempt as f64 * std::f64::consts::FRAC_PI_3);
        if let Some(k) = fa.point_column(i + 1) {
            fa.scale_column(k, phase);
            repaired.push(format!("p{}", i + 1));
        } else if let Some(k) = fb.point_column(j + 1) {
            fb.scale_column(k, phase);
            repaired.push(format!("q{}", j + 1));
        } else {
            return Err(Error::Unsupported("the elements share a fixed point".into()));
        }
    }
    Err(Error::Degenerate("could not separate coincident associated points".into()))
}

pub fn canonical_tuple(a: &Isometry, b: &Isometry) -> Result<CanonicalTuple> {
    let (fa, fb) = pair_frame(a, b)?;
    canonical_tuple_from_frames(&fa, &fb)
}

/// Largest deviation of the pairings within each element's associated
/// points from their normalized values.
pub fn pairing_defect(tuple: &CanonicalTuple, n: usize) -> f64 {
    let half = n + 1;
    let mut worst: f64 = 0.0;
    for (side, kind) in [(0, tuple.kind), (1, tuple.kind)] {
        let pts = &tuple.points[side * half..(side + 1) * half];
        let hyperbolic = match kind {
            PairKind::Hyperbolic => true,
            PairKind::Elliptic => false,
            PairKind::Mixed => pts[0].kind == VectorType::Null,
        };
        let g = |i: usize, j: usize| herm_unchecked(&pts[j - 1].lift, &pts[i - 1].lift);
        for i in 1..=half {
            for j in 1..=half {
                let want = if hyperbolic {
                    match (i, j) {
                        _ if i == j => 0.0,
                        (1, 2) | (2, 1) => 1.0,
                        (1, _) | (_, 1) => -FRAC_1_SQRT_2,
                        (2, _) | (_, 2) => FRAC_1_SQRT_2,
                        _ => -1.0,
                    }
                } else {
                    match (i, j) {
                        _ if i == j => -1.0,
                        (1, _) | (_, 1) => -SQRT_2,
                        _ => -2.0,
                    }
                };
                worst = worst.max(g(i, j).dist(Quaternion::real(want)));
            }
        }
    }
    worst
}

/// Reorders the blocks of `f2` to match the classes of `f1`.
fn align_blocks(f1: &EigenFrame, f2: &EigenFrame, tol: f64) -> Option<EigenFrame> {
    if f1.kind != f2.kind || f1.blocks.len() != f2.blocks.len() {
        return None;
    }
    let mut used = vec![false; f2.blocks.len()];
    let mut out = EigenFrame { kind: f2.kind, columns: Vec::new(), eigenvalues: Vec::new(), blocks: Vec::new() };
    for b1 in &f1.blocks {
        let k = (0..f2.blocks.len()).find(|&k| {
            let b2 = &f2.blocks[k];
            !used[k] && b2.len == b1.len && b2.kind == b1.kind && b2.class.approx_eq(&b1.class, tol)
        })?;
        used[k] = true;
        let b2 = &f2.blocks[k];
        out.blocks.push(FrameBlock { start: out.columns.len(), ..b2.clone() });
        out.columns.extend_from_slice(&f2.columns[b2.start..b2.start + b2.len]);
        out.eigenvalues.extend_from_slice(&f2.eigenvalues[b2.start..b2.start + b2.len]);
    }
    Some(out)
}

/// Real parametrization of block-diagonal gauges. With `centralizer` the
/// entries of a nonreal block are restricted to `C`.
struct Gauge {
    /// (row, col, unit) for every real parameter.
    params: Vec<(usize, usize, Quaternion)>,
}

impl Gauge {
    fn new(f: &EigenFrame, centralizer: bool) -> Self {
        let mut params = Vec::new();
        for b in &f.blocks {
            let units: &[Quaternion] = if centralizer && !b.is_real() {
                &[Quaternion::ONE, Quaternion::I]
            } else {
                &[Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K]
            };
            for r in b.start..b.start + b.len {
                for c in b.start..b.start + b.len {
                    for u in units {
                        params.push((r, c, *u));
                    }
                }
            }
        }
        Gauge { params }
    }

    fn len(&self) -> usize {
        self.params.len()
    }

    fn matrix(&self, theta: &[f64], d: usize) -> HMatrix {
        let mut m = HMatrix::zeros(d, d);
        for (p, &(r, c, u)) in self.params.iter().enumerate() {
            m[(r, c)] += u * theta[p];
        }
        m
    }
}

fn flatten(m: &HMatrix) -> Vec<f64> {
    m.entries().iter().flat_map(|q| q.to_array()).collect()
}

/// Null space of `theta -> D_A(theta) N - N' D_B(theta)`.
fn gauge_null_space(n_mat: &HMatrix, n_prime: &HMatrix, ga: &Gauge, gb: &Gauge) -> Vec<DVector<f64>> {
    let d = n_mat.nrows();
    let rows = 4 * d * d;
    let p = ga.len() + gb.len();
    let mut m = DMatrix::<f64>::zeros(rows.max(p), p);
    for (k, &(r, c, u)) in ga.params.iter().enumerate() {
        // E_rc u N: row r of the result is u * (row c of N)
        let mut l = HMatrix::zeros(d, d);
        for j in 0..d {
            l[(r, j)] = u * n_mat[(c, j)];
        }
        for (i, x) in flatten(&l).into_iter().enumerate() {
            m[(i, k)] = x;
        }
    }
    for (k, &(r, c, u)) in gb.params.iter().enumerate() {
        // -N' E_rc u: column c of the result is -(column r of N') u
        let mut l = HMatrix::zeros(d, d);
        for i in 0..d {
            l[(i, c)] = -(n_prime[(i, r)] * u);
        }
        for (i, x) in flatten(&l).into_iter().enumerate() {
            m[(i, ga.len() + k)] = x;
        }
    }
    let svd = m.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max().max(f64::MIN_POSITIVE);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= NULLSPACE_TOL * smax)
        .map(|i| vt.row(i).transpose())
        .collect()
}

fn real_inner(a: &HMatrix, b: &HMatrix) -> f64 {
    a.entries().iter().zip(b.entries()).map(|(x, y)| (y.conj() * *x).re()).sum()
}

enum Solve {
    Found(HMatrix),
    None,
    Unknown,
}

/// Looks for `D_A` in the null space with `D_A* J D_A = J`.
fn solve_form(null: &[DVector<f64>], ga: &Gauge, j: &HMatrix, seed: u64) -> Solve {
    let d = j.nrows();
    let na = ga.len();
    let basis: Vec<HMatrix> = null.iter().map(|v| ga.matrix(&v.as_slice()[..na], d)).collect();
    if basis.is_empty() {
        return Solve::None;
    }
    let jj = real_inner(j, j);
    let form = |m: &HMatrix| &(&m.adjoint() * j) * m;
    if basis.len() == 1 {
        let f = form(&basis[0]);
        let s = real_inner(&f, j) / jj;
        let defect = (&f - &j.scale_real(s)).norm() / f.norm().max(f64::MIN_POSITIVE);
        if defect > FORM_TOL || s <= 0.0 {
            return Solve::None;
        }
        return Solve::Found(basis[0].scale_real(1.0 / s.sqrt()));
    }
    let k = basis.len();
    let combine = |c: &DVector<f64>| {
        let mut m = HMatrix::zeros(d, d);
        for (ci, bi) in c.iter().zip(&basis) {
            m = &m + &bi.scale_real(*ci);
        }
        m
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let mut c = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let f0 = form(&combine(&c));
        let s = real_inner(&f0, j) / jj;
        if s > 0.0 {
            c /= s.sqrt();
        }
        let mut mu = 1e-3;
        let resid = |c: &DVector<f64>| DVector::from_vec(flatten(&(&form(&combine(c)) - j)));
        let mut r = resid(&c);
        for _ in 0..200 {
            let dm = combine(&c);
            let mut jac = DMatrix::<f64>::zeros(r.len(), k);
            for (i, bi) in basis.iter().enumerate() {
                let t1 = &(&bi.adjoint() * j) * &dm;
                let t2 = &(&dm.adjoint() * j) * bi;
                for (row, x) in flatten(&(&t1 + &t2)).into_iter().enumerate() {
                    jac[(row, i)] = x;
                }
            }
            let jt = jac.transpose();
            let g = &jt * &r;
            let mut a = &jt * &jac;
            for i in 0..k {
                a[(i, i)] += mu * (1.0 + a[(i, i)]);
            }
            let Some(step) = a.lu().solve(&(-g)) else { break };
            let cand = &c + &step;
            let rc = resid(&cand);
            if rc.norm() < r.norm() {
                c = cand;
                r = rc;
                mu = (mu * 0.3).max(1e-12);
            } else {
                mu *= 10.0;
                if mu > 1e8 {
                    break;
                }
            }
            if r.norm() <= 1e-13 * jj.sqrt() {
                break;
            }
        }
        if r.norm() <= FORM_TOL * jj.sqrt() {
            return Solve::Found(combine(&c));
        }
    }
    Solve::Unknown
}

struct Prepared {
    fa: EigenFrame,
    fb: EigenFrame,
    fa2: EigenFrame,
    n_mat: HMatrix,
    n_prime: HMatrix,
}

/// Raw eigenframes keep the eigenvalues at their complex representatives,
/// which the centralizer gauge relies on; the cross-normalization is
/// absorbed by the gauge.
fn frames_without_common_fixed_point(a: &Isometry, b: &Isometry) -> Result<(EigenFrame, EigenFrame)> {
    let (fa, fb) = (eigenframe(a)?, eigenframe(b)?);
    if common_fixed_point(&fa, &fb) {
        return Err(Error::Unsupported("the elements share a fixed point".into()));
    }
    Ok((fa, fb))
}

fn prepare(a: &Isometry, b: &Isometry, a2: &Isometry, b2: &Isometry) -> Result<Option<Prepared>> {
    let (fa, fb) = frames_without_common_fixed_point(a, b)?;
    let (fa2, fb2) = frames_without_common_fixed_point(a2, b2)?;
    let (Some(fa2), Some(fb2)) = (align_blocks(&fa, &fa2, CLASS_MATCH_TOL), align_blocks(&fb, &fb2, CLASS_MATCH_TOL)) else {
        return Ok(None);
    };
    let n_mat = &fa.matrix().inverse()? * &fb.matrix();
    let n_prime = &fa2.matrix().inverse()? * &fb2.matrix();
    Ok(Some(Prepared { fa, fb, fa2, n_mat, n_prime }))
}

fn stage(p: &Prepared, centralizer: bool, seed: u64) -> Solve {
    let ga = Gauge::new(&p.fa, centralizer);
    let gb = Gauge::new(&p.fb, centralizer);
    let null = gauge_null_space(&p.n_mat, &p.n_prime, &ga, &gb);
    solve_form(&null, &ga, &p.fa.model_form(), seed)
}

/// Projects `c` onto the numerical null space of
/// `X -> (X A - A' X, X B - B' X)`, then back onto the form and the group.
fn refine_conjugator(c: &HMatrix, a: &HMatrix, b: &HMatrix, a2: &HMatrix, b2: &HMatrix) -> Option<HMatrix> {
    let d = c.nrows();
    let p = 4 * d * d;
    let units = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K];
    let mut l = DMatrix::<f64>::zeros(2 * p, p);
    let mut col = 0;
    for r in 0..d {
        for cc in 0..d {
            for u in units {
                let mut x = HMatrix::zeros(d, d);
                x[(r, cc)] = u;
                let ea = &(&x * a) - &(a2 * &x);
                let eb = &(&x * b) - &(b2 * &x);
                for (i, v) in flatten(&ea).into_iter().chain(flatten(&eb)).enumerate() {
                    l[(i, col)] = v;
                }
                col += 1;
            }
        }
    }
    let svd = l.svd(false, true);
    let vt = svd.v_t?;
    let sv = &svd.singular_values;
    let smax = sv.max();
    let kmin = sv.imin();
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| i == kmin || sv[i] <= 1e-8 * smax).collect();
    let flat = DVector::from_vec(flatten(c));
    let mut proj = DVector::<f64>::zeros(p);
    for &i in &keep {
        let v = vt.row(i).transpose();
        proj += &v * v.dot(&flat);
    }
    let mut out = HMatrix::zeros(d, d);
    for (k, q) in proj.as_slice().chunks(4).enumerate() {
        out[(k / d, k % d)] = Quaternion::new(q[0], q[1], q[2], q[3]);
    }
    let h = HermitianSpace { n: d - 1 }.form();
    let f = &(&out.adjoint() * &h) * &out;
    let s = real_inner(&f, &h) / real_inner(&h, &h);
    if !(s > 0.0) {
        return None;
    }
    Some(project_to_group(&out.scale_real(1.0 / s.sqrt())))
}

/// `(|C A C^-1 - A'| + |C B C^-1 - B'|) / max(1, |A'| + |B'|)`.
pub fn conjugation_residual(c: &HMatrix, a: &HMatrix, b: &HMatrix, a2: &HMatrix, b2: &HMatrix) -> Result<f64> {
    let ci = c.inverse()?;
    let ra = (&(&(c * a) * &ci) - a2).norm();
    let rb = (&(&(c * b) * &ci) - b2).norm();
    Ok((ra + rb) / (a2.norm() + b2.norm()).max(1.0))
}

/// Decides whether some `C` in Sp(n,1) conjugates `(A, B)` to `(A', B')`.
///
/// Both pairs are reduced to their eigenframes; a conjugator is then a
/// block-diagonal change of frame `D` solving `D_A N = N' D_B` with
/// `N = C_A^-1 C_B` and preserving the form. Gauges commuting with the
/// eigenvalues decide conjugacy; unrestricted block gauges decide equality
/// of the canonical orbits. A one-dimensional solution space gives an exact
/// answer; larger ones are searched and may end Inconclusive.
pub fn pair_conjugate(a: &Isometry, b: &Isometry, a2: &Isometry, b2: &Isometry, tol: f64) -> Result<Decision> {
    let n = a.n();
    if [b.n(), a2.n(), b2.n()].iter().any(|&m| m != n) {
        return Err(Error::DimensionMismatch { expected: n, found: b.n().max(a2.n()).max(b2.n()) });
    }
    for x in [a, b, a2, b2] {
        require_semisimple(x)?;
    }
    for (x, y) in [(a, a2), (b, b2)] {
        if !x.real_trace().approx_eq(y.real_trace(), spectral_tol(x, y, tol)) || x.classification() != y.classification() {
            return Ok(Decision::negative(Verdict::NotConjugate, Reason::RealTrace));
        }
    }
    for (x, y) in [(a, a2), (b, b2)] {
        if !conjugate_single(x, y, tol)? {
            return Ok(Decision::negative(Verdict::NotConjugate, Reason::NegativeClass));
        }
    }
    let Some(p) = prepare(a, b, a2, b2)? else {
        return Ok(Decision::negative(Verdict::NotConjugate, Reason::SingleConjugacy));
    };
    match stage(&p, true, 0x5eed) {
        Solve::Found(da) => {
            let c = &(&p.fa2.matrix() * &da) * &p.fa.matrix().inverse()?;
            let c = project_to_group(&c);
            let mut residual = conjugation_residual(&c, a.matrix(), b.matrix(), a2.matrix(), b2.matrix())?;
            let mut c = c;
            if let Some(r) = refine_conjugator(&c, a.matrix(), b.matrix(), a2.matrix(), b2.matrix()) {
                let rr = conjugation_residual(&r, a.matrix(), b.matrix(), a2.matrix(), b2.matrix())?;
                if rr < residual {
                    (c, residual) = (r, rr);
                }
            }
            if residual > PAIR_WITNESS_TOL.max(tol) {
                return Ok(Decision::inconclusive(Reason::Verification));
            }
            Ok(Decision::positive(Verdict::Conjugate, c, residual))
        }
        Solve::None => Ok(match stage(&p, false, 0x5eed + 1) {
            Solve::Found(_) => Decision::negative(Verdict::NotConjugate, Reason::Grassmannian),
            Solve::None => Decision::negative(Verdict::NotConjugate, Reason::CanonicalOrbit),
            Solve::Unknown => Decision::negative(Verdict::NotConjugate, Reason::Multiplicity),
        }),
        Solve::Unknown => Ok(match stage(&p, false, 0x5eed + 1) {
            Solve::None => Decision::negative(Verdict::NotConjugate, Reason::CanonicalOrbit),
            _ => Decision::inconclusive(Reason::Multiplicity),
        }),
    }
}

/// Whether the canonical orbits of two pairs agree (ignoring the
/// Grassmannian points).
pub fn canonical_orbits_equal(a: &Isometry, b: &Isometry, a2: &Isometry, b2: &Isometry) -> Result<Option<bool>> {
    let Some(p) = prepare(a, b, a2, b2)? else { return Ok(Some(false)) };
    Ok(match stage(&p, false, 0x5eed + 1) {
        Solve::Found(_) => Some(true),
        Solve::None => Some(false),
        Solve::Unknown => None,
    })
}
