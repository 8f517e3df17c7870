//! Gram matrices of point configurations, semi-normalization, the
//! congruence decider and reconstruction from invariants.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::decision::{Decision, Reason, Verdict};
use crate::error::{Error, Result};
use crate::hlinalg::{form_orthonormalize, herm_norm, herm_unchecked, HMatrix, HVector, HermitianSpace, VectorType};
use crate::invariants::{InvariantProfile, ProjPoint, ZERO_TOL};
use crate::isom::{membership_defect, project_to_group};
use crate::quat::{conjugate_by, sp1_align, unit_from_rotation, Quaternion};

/// Relative tolerance for classifying input points.
pub const CONFIG_TOL: f64 = 1e-8;
/// Bound on the projective and membership residuals of a witness.
pub const WITNESS_TOL: f64 = 1e-7;

/// Ordered points: the first `i` null, the rest negative.
/// JSON: `{"n": .., "i": .., "points": [[q, ..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigJson", into = "ConfigJson")]
pub struct PointConfig {
    space: HermitianSpace,
    i: usize,
    points: Vec<ProjPoint>,
}

#[derive(Serialize, Deserialize)]
struct ConfigJson {
    n: usize,
    i: usize,
    points: Vec<Vec<Quaternion>>,
}

impl TryFrom<ConfigJson> for PointConfig {
    type Error = Error;

    fn try_from(j: ConfigJson) -> Result<Self> {
        PointConfig::new(j.n, j.i, j.points.into_iter().map(HVector::new).collect())
    }
}

impl From<PointConfig> for ConfigJson {
    fn from(c: PointConfig) -> Self {
        ConfigJson { n: c.space.n, i: c.i, points: c.points.into_iter().map(|p| p.lift.entries).collect() }
    }
}

impl PointConfig {
    pub fn new(n: usize, i: usize, lifts: Vec<HVector>) -> Result<Self> {
        Self::with_tol(n, i, lifts, CONFIG_TOL)
    }

    /// Validates dimensions, the null-first ordering and distinctness.
    pub fn with_tol(n: usize, i: usize, lifts: Vec<HVector>, tol: f64) -> Result<Self> {
        let space = HermitianSpace::new(n)?;
        if i > lifts.len() {
            return Err(Error::Invalid(format!("{i} null points requested but only {} given", lifts.len())));
        }
        let mut points = Vec::with_capacity(lifts.len());
        for (k, lift) in lifts.into_iter().enumerate() {
            if !lift.is_finite() {
                return Err(Error::Invalid(format!("point {} is not finite", k + 1)));
            }
            let p = ProjPoint::new(&space, lift, tol)?;
            let want = if k < i { VectorType::Null } else { VectorType::Negative };
            if p.kind != want {
                return Err(Error::Invalid(format!("point {} is {:?}, expected {:?}", k + 1, p.kind, want)));
            }
            points.push(p);
        }
        for a in 0..points.len() {
            for b in a + 1..points.len() {
                if points[a].same_point(&points[b], 1e-9) {
                    return Err(Error::Degenerate(format!("points {} and {} coincide", a + 1, b + 1)));
                }
            }
        }
        Ok(PointConfig { space, i, points })
    }

    pub fn space(&self) -> &HermitianSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    pub fn lifts(&self) -> Vec<HVector> {
        self.points.iter().map(|p| p.lift.clone()).collect()
    }

    /// `g_kj = <p_j, p_k>`.
    pub fn gram(&self) -> HMatrix {
        gram_of(&self.lifts())
    }

    /// Image under `C`, keeping point types.
    pub fn act(&self, c: &HMatrix) -> Result<PointConfig> {
        if c.nrows() != self.space.dim() || c.ncols() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), found: c.nrows() });
        }
        let points = self.points.iter().map(|p| p.with_lift(c.mul_vec(&p.lift))).collect();
        Ok(PointConfig { space: self.space, i: self.i, points })
    }

    /// Same points with lifts `p_k lambda_k`.
    pub fn rescaled(&self, lambdas: &[Quaternion]) -> Result<PointConfig> {
        if lambdas.len() != self.m() {
            return Err(Error::LengthMismatch { expected: self.m(), found: lambdas.len() });
        }
        if lambdas.iter().any(|l| l.norm() == 0.0) {
            return Err(Error::ZeroVector);
        }
        let points = self.points.iter().zip(lambdas).map(|(p, l)| p.with_lift(p.lift.scale(*l))).collect();
        Ok(PointConfig { space: self.space, i: self.i, points })
    }
}

/// Gram matrix `g_kj = <p_j, p_k>` of the given lifts.
pub fn gram_of(lifts: &[HVector]) -> HMatrix {
    let m = lifts.len();
    let mut g = HMatrix::zeros(m, m);
    for k in 0..m {
        for j in 0..m {
            g[(k, j)] = herm_unchecked(&lifts[j], &lifts[k]);
        }
    }
    g
}

/// Gram matrix in the normal form: `g_kk = 0` (null), `g_kk = -1`
/// (negative), `g_1j = 1` for null `j >= 2`, `g_1j = r_1j > 0` for negative
/// `j`, `|g_23| = 1` when `i >= 3`. The residual unit quaternion acting by
/// simultaneous conjugation is fixed so that the first imaginary direction
/// of `vg` is `i` and the next independent one lies in the `i,j` half plane
/// with positive `j` part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiNormalizedGram {
    pub m: usize,
    pub i: usize,
    pub gram: Vec<Vec<Quaternion>>,
    /// `(r_1j for negative j, g_23, g_24, .., g_{m-1,m})`.
    pub vg: Vec<Quaternion>,
}

impl SemiNormalizedGram {
    fn from_matrix(m: usize, i: usize, g: &HMatrix) -> Self {
        let gram: Vec<Vec<Quaternion>> = g.rows();
        let vg = vg_of(&gram, i);
        SemiNormalizedGram { m, i, gram, vg }
    }

    pub fn entry(&self, k: usize, j: usize) -> Quaternion {
        self.gram[k - 1][j - 1]
    }

    /// Largest deviation from the normal-form pattern.
    pub fn pattern_defect(&self) -> f64 {
        let (m, i) = (self.m, self.i);
        let mut worst: f64 = 0.0;
        for k in 0..m {
            let want = if k < i { 0.0 } else { -1.0 };
            worst = worst.max(self.gram[k][k].dist(Quaternion::real(want)));
            for j in 0..m {
                worst = worst.max(self.gram[k][j].dist(self.gram[j][k].conj()));
            }
        }
        let first_neg = if i == 0 { 1 } else { i };
        for j in 1..m {
            let g = self.gram[0][j];
            if j < i {
                worst = worst.max(g.dist(Quaternion::ONE));
            } else if j >= first_neg {
                worst = worst.max(g.im_norm()).max((-g.re()).max(0.0));
            }
        }
        if i >= 3 {
            worst = worst.max((self.gram[1][2].norm() - 1.0).abs());
        }
        worst
    }
}

fn vg_of(gram: &[Vec<Quaternion>], i: usize) -> Vec<Quaternion> {
    let m = gram.len();
    let first_neg = if i == 0 { 1 } else { i };
    let mut vg: Vec<Quaternion> = (first_neg..m).map(|j| Quaternion::real(gram[0][j].re())).collect();
    for k in 1..m {
        for j in k + 1..m {
            vg.push(gram[k][j]);
        }
    }
    vg
}

/// Unit `mu` that puts the first imaginary direction of `v` on `i` and the
/// next well separated one in the upper `i,j` half plane.
fn gauge_unit(v: &[Quaternion]) -> Quaternion {
    let dirs: Vec<Vector3<f64>> = v
        .iter()
        .filter(|q| q.im_norm() > ZERO_TOL * q.norm().max(1.0))
        .map(|q| Vector3::from(q.vec3()).normalize())
        .collect();
    let Some(e1) = dirs.first().copied() else { return Quaternion::ONE };
    let second = dirs.iter().map(|d| d - e1 * e1.dot(d)).find(|p| p.norm() > 1e-3);
    let e2 = match second {
        Some(p) => p.normalize(),
        None => {
            let t = if e1.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            (t - e1 * e1.dot(&t)).normalize()
        }
    };
    let e3 = e1.cross(&e2);
    let r = Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()]);
    unit_from_rotation(&r)
}

fn gauge_gram(g: &HMatrix, mu: Quaternion) -> HMatrix {
    let mut out = g.clone();
    for k in 0..g.nrows() {
        for j in 0..g.ncols() {
            out[(k, j)] = conjugate_by(mu, g[(k, j)]);
        }
    }
    out
}

fn require_nonzero(q: Quaternion, what: &str) -> Result<Quaternion> {
    if q.norm() <= 1e-300 || !q.is_finite() {
        return Err(Error::Degenerate(format!("vanishing pairing {what}")));
    }
    Ok(q)
}

/// Semi-normalized Gram matrix of `config`.
pub fn semi_normalize(config: &PointConfig) -> Result<SemiNormalizedGram> {
    Ok(semi_normalize_lifts(config)?.0)
}

/// Semi-normalized Gram matrix together with the rescaled lifts realizing it.
pub fn semi_normalize_lifts(config: &PointConfig) -> Result<(SemiNormalizedGram, Vec<HVector>)> {
    let (m, i) = (config.m(), config.i());
    if i == 1 || i == 2 {
        return Err(Error::Unsupported("semi-normalization needs i >= 3 or i = 0".into()));
    }
    if m < 3 {
        return Err(Error::Unsupported(format!("semi-normalization needs at least 3 points, got {m}")));
    }
    let mut p = config.lifts();
    let pair = |p: &[HVector], k: usize, j: usize| herm_unchecked(&p[j], &p[k]);

    if i >= 3 {
        for j in 1..i {
            let g = require_nonzero(pair(&p, 0, j), &format!("<p{},p1>", j + 1))?;
            p[j] = p[j].scale(g.inv());
        }
        let g23 = require_nonzero(pair(&p, 1, 2), "<p3,p2>")?;
        let s = g23.norm().sqrt();
        p[0] = p[0].scale_real(s);
        for v in p.iter_mut().take(i).skip(1) {
            *v = v.scale_real(1.0 / s);
        }
    } else {
        let h = herm_norm(&p[0]);
        p[0] = p[0].scale_real(1.0 / (-h).sqrt());
    }
    let first_neg = if i == 0 { 1 } else { i };
    for j in first_neg..m {
        let g = require_nonzero(pair(&p, 0, j), &format!("<p{},p1>", j + 1))?;
        let h = herm_norm(&p[j]);
        p[j] = p[j].scale(g.conj().unit() * (1.0 / (-h).sqrt()));
    }

    let g = gram_of(&p);
    let mu = gauge_unit(&vg_of(&g.rows(), i));
    for v in p.iter_mut() {
        *v = v.scale(mu);
    }
    let g = gram_of(&p);
    Ok((SemiNormalizedGram::from_matrix(m, i, &g), p))
}

/// Unit `mu` with `conj(mu) V_{G2} mu = V_{G1}`, if any.
pub fn orbit_equal(g1: &SemiNormalizedGram, g2: &SemiNormalizedGram, tol: f64) -> Result<Option<Quaternion>> {
    if g1.m != g2.m || g1.i != g2.i {
        return Err(Error::Invalid(format!("shape mismatch: (m,i) = ({},{}) vs ({},{})", g1.m, g1.i, g2.m, g2.i)));
    }
    sp1_align(&g1.vg, &g2.vg, tol)
}

fn independent_indices(vs: &[HVector], limit: usize) -> Vec<usize> {
    let mut q: Vec<HVector> = Vec::new();
    let mut idx = Vec::new();
    for (k, v) in vs.iter().enumerate() {
        if idx.len() == limit {
            break;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for e in &q {
                r = &r - &e.scale(HVector::dot(&r, e));
            }
        }
        if r.norm() > 1e-8 * v.norm() {
            q.push(r.normalized());
            idx.push(k);
        }
    }
    idx
}

/// Form-orthonormal vectors spanning the orthogonal complement of
/// `span(basis)`, negatives first.
pub(crate) fn complete_frame(space: &HermitianSpace, basis: &[HVector]) -> Result<Vec<(HVector, VectorType)>> {
    let d = space.dim();
    let mut done: Vec<(HVector, f64)> =
        form_orthonormalize(basis, false)?.into_iter().map(|(e, t)| (e, t.sign() as f64)).collect();
    let mut fill = Vec::new();
    let mut cands: Vec<HVector> = (0..d)
        .map(|k| {
            let mut v = HVector::zeros(d);
            v[k] = Quaternion::ONE;
            v
        })
        .collect();
    while done.len() < d {
        for c in cands.iter_mut() {
            for _ in 0..2 {
                for (e, s) in &done {
                    *c = &*c - &e.scale(herm_unchecked(c, e) * *s);
                }
            }
        }
        let (best, ratio) = cands
            .iter()
            .enumerate()
            .map(|(k, c)| (k, if c.norm() > 1e-8 { herm_norm(c).abs() / c.norm_sqr() } else { 0.0 }))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if ratio < 1e-6 {
            return Err(Error::Degenerate("configuration spans a degenerate subspace".into()));
        }
        let c = cands.swap_remove(best);
        let h = herm_norm(&c);
        let e = c.scale_real(1.0 / h.abs().sqrt());
        done.push((e.clone(), h.signum()));
        fill.push((e, if h < 0.0 { VectorType::Negative } else { VectorType::Positive }));
    }
    fill.sort_by_key(|(_, t)| t.sign());
    Ok(fill)
}

/// `C` in Sp(n,1) with `C src_k = dst_k`, assuming equal Gram matrices and a
/// nondegenerate span. One Newton-Schulz step polishes the result.
pub fn frame_map(space: &HermitianSpace, src: &[HVector], dst: &[HVector]) -> Result<HMatrix> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch { expected: src.len(), found: dst.len() });
    }
    let idx = independent_indices(src, space.dim());
    let bs: Vec<HVector> = idx.iter().map(|&k| src[k].clone()).collect();
    let bd: Vec<HVector> = idx.iter().map(|&k| dst[k].clone()).collect();
    let fs = complete_frame(space, &bs)?;
    let fd = complete_frame(space, &bd)?;
    if fs.iter().map(|f| f.1).ne(fd.iter().map(|f| f.1)) {
        return Err(Error::Signature);
    }
    let mut cs = bs;
    cs.extend(fs.into_iter().map(|f| f.0));
    let mut cd = bd;
    cd.extend(fd.into_iter().map(|f| f.0));
    let ms = HMatrix::from_columns(&cs);
    let md = HMatrix::from_columns(&cd);
    let c = &md * &ms.inverse()?;
    Ok(project_to_group(&c))
}

/// Largest projective mismatch `min_l |C p_k - q_k l| / |q_k|`.
pub fn projective_residual(c: &HMatrix, src: &[HVector], dst: &[HVector]) -> f64 {
    src.iter()
        .zip(dst)
        .map(|(p, q)| {
            let cp = c.mul_vec(p);
            let l = HVector::dot(q, &cp) / cp.norm_sqr();
            (q - &cp.scale(l)).norm() / q.norm()
        })
        .fold(0.0, f64::max)
}

/// Decides whether some `C` in Sp(n,1) maps `a` onto `b` pointwise.
pub fn congruent(a: &PointConfig, b: &PointConfig, tol: f64) -> Result<Decision> {
    if a.n() != b.n() || a.m() != b.m() || a.i() != b.i() {
        return Err(Error::Invalid(format!(
            "shape mismatch: (n,m,i) = ({},{},{}) vs ({},{},{})",
            a.n(),
            a.m(),
            a.i(),
            b.n(),
            b.m(),
            b.i()
        )));
    }
    let (ga, la) = semi_normalize_lifts(a)?;
    let (gb, lb) = semi_normalize_lifts(b)?;
    let Some(mu) = orbit_equal(&ga, &gb, tol)? else {
        return Ok(Decision::negative(Verdict::NotCongruent, Reason::GramOrbit));
    };
    let lb: Vec<HVector> = lb.iter().map(|v| v.scale(mu)).collect();
    let c = match frame_map(a.space(), &la, &lb) {
        Ok(c) => c,
        Err(Error::Degenerate(_)) | Err(Error::Signature) => return Ok(Decision::inconclusive(Reason::Degenerate)),
        Err(e) => return Err(e),
    };
    let residual = projective_residual(&c, &a.lifts(), &b.lifts());
    let defect = membership_defect(&c) / c.norm().powi(2).max(1.0);
    if residual > WITNESS_TOL || defect > WITNESS_TOL {
        return Ok(Decision::inconclusive(Reason::Verification));
    }
    Ok(Decision::positive(Verdict::Congruent, c, residual.max(defect)))
}

fn missing(what: String) -> Error {
    Error::Invalid(format!("profile is missing {what}"))
}

/// Rebuilds the semi-normalized Gram matrix from an invariant profile.
pub fn reconstruct_gram(p: &InvariantProfile) -> Result<SemiNormalizedGram> {
    let (m, i) = (p.m, p.i);
    if i == 1 || i == 2 || m < 4 || i > m {
        return Err(Error::Unsupported(format!("no reconstruction for (m,i) = ({m},{i})")));
    }
    let q = m - i;
    if p.pairs.len() != (q * q - q) / 2 || p.t + p.zero_rotations() != p.pairs.len() {
        return Err(Error::Invalid("inconsistent pair counts".into()));
    }
    let mut g = HMatrix::zeros(m, m);
    let set = |g: &mut HMatrix, k: usize, j: usize, v: Quaternion| {
        g[(k - 1, j - 1)] = v;
        g[(j - 1, k - 1)] = v.conj();
    };
    for k in i + 1..=m {
        g[(k - 1, k - 1)] = Quaternion::real(-1.0);
    }
    let from_pair = |k: usize, j: usize| -> Result<Quaternion> {
        let s = p.pair(k, j).ok_or_else(|| missing(format!("pair ({k},{j})")))?;
        if s.distance < 0.0 {
            return Err(Error::Invalid(format!("negative distance invariant at ({k},{j})")));
        }
        Ok((Quaternion::real(-s.angular.cos()) + s.rotation * s.angular.sin()) * s.distance.sqrt())
    };
    for k in i + 1..=m {
        for j in k + 1..=m {
            let v = if k == 1 { Quaternion::real(p.pair(1, j).ok_or_else(|| missing(format!("pair (1,{j})")))?.distance.sqrt()) } else { from_pair(k, j)? };
            set(&mut g, k, j, v);
        }
    }
    if i >= 3 {
        if p.cross_ratios.len() != crate::invariants::cross_ratio_slots(m, i).len() {
            return Err(Error::Invalid("inconsistent cross-ratio count".into()));
        }
        let r = |j: usize| -> Result<f64> {
            if j <= i {
                return Ok(1.0);
            }
            let h = p.anchor(j).ok_or_else(|| missing(format!("anchor {j}")))?;
            if h <= 0.0 {
                return Err(Error::Invalid(format!("anchor {j} must be positive")));
            }
            Ok(h.sqrt())
        };
        for j in 2..=m {
            set(&mut g, 1, j, Quaternion::real(r(j)?));
        }
        let g23 = Quaternion::real(-p.a23.cos()) + p.u0 * p.a23.sin();
        set(&mut g, 2, 3, g23);
        let x = |k: usize, j: usize| p.cross_ratio(k, j).ok_or_else(|| missing(format!("cross ratio ({k},{j})")));
        for j in 4..=m {
            set(&mut g, 2, j, g23 * x(2, j)? * r(j)?);
            set(&mut g, 3, j, g23.conj() * x(3, j)? * r(j)?);
        }
        for k in 4..=i {
            let g2k = g[(1, k - 1)];
            for j in k + 1..=m {
                set(&mut g, k, j, g2k.conj() * x(k, j)? * r(j)?);
            }
        }
    }
    if !g.is_finite() {
        return Err(Error::Invalid("non-finite reconstruction".into()));
    }
    let mu = gauge_unit(&vg_of(&g.rows(), i));
    Ok(SemiNormalizedGram::from_matrix(m, i, &gauge_gram(&g, mu)))
}
