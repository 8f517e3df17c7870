//! C ABI over `qhyper`.
//!
//! Quaternionic data crosses the boundary as flat `double` arrays, four per
//! quaternion in `w, x, y, z` order; matrices are row-major. Objects live
//! behind opaque handles that the caller releases with the matching
//! `*_free`. Every fallible call returns a [`QhStatus`]; the message for the
//! last failure on the calling thread is available from [`qh_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qhyper::decision::{Decision, Reason, Verdict};
use qhyper::error::Error;
use qhyper::gram::{congruent, PointConfig};
use qhyper::hlinalg::{HMatrix, HVector};
use qhyper::invariants::profile;
use qhyper::isom::{Classification, Isometry};
use qhyper::pairs::pair_conjugate;
use qhyper::quat::Quaternion;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotMember = 3,
    NotSemisimple = 4,
    Degenerate = 5,
    Unsupported = 6,
    Numerical = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhClassification {
    Hyperbolic = 0,
    Elliptic = 1,
    Parabolic = 2,
    Unclassified = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhVerdict {
    Congruent = 0,
    NotCongruent = 1,
    Conjugate = 2,
    NotConjugate = 3,
    Inconclusive = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QhReason {
    None = 0,
    GramOrbit,
    RealTrace,
    NegativeClass,
    SingleConjugacy,
    CanonicalOrbit,
    Grassmannian,
    Multiplicity,
    Degenerate,
    Verification,
}

/// Outcome of a decider. `residual` is NaN when there is no witness.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QhDecision {
    pub verdict: QhVerdict,
    pub reason: QhReason,
    pub has_witness: bool,
    pub residual: f64,
}

/// Opaque isometry handle.
pub struct QhIsometry(Isometry);

/// Opaque configuration handle.
pub struct QhConfig(PointConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: QhStatus, msg: impl Into<String>) -> QhStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> QhStatus {
    match e {
        Error::NotMember(_) => QhStatus::NotMember,
        Error::NotSemisimple => QhStatus::NotSemisimple,
        Error::Degenerate(_) | Error::Dependent | Error::ZeroVector | Error::Signature => QhStatus::Degenerate,
        Error::Unsupported(_) => QhStatus::Unsupported,
        Error::Numerical(_) => QhStatus::Numerical,
        _ => QhStatus::InvalidArgument,
    }
}

fn from_error(e: Error) -> QhStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, turning panics into [`QhStatus::Panic`].
fn guard(f: impl FnOnce() -> QhStatus) -> QhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(QhStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn quaternions(data: *const f64, count: Option<usize>) -> Result<Vec<Quaternion>, QhStatus> {
    if data.is_null() {
        return Err(fail(QhStatus::NullPointer, "data is null"));
    }
    let Some(len) = count.and_then(|c| c.checked_mul(4)) else {
        return Err(fail(QhStatus::InvalidArgument, "size overflow"));
    };
    let flat = std::slice::from_raw_parts(data, len);
    Ok(flat.chunks_exact(4).map(|q| Quaternion::new(q[0], q[1], q[2], q[3])).collect())
}

unsafe fn write_matrix(m: &HMatrix, out: *mut f64, len: usize) -> QhStatus {
    let need = 4 * m.entries().len();
    if len < need {
        return fail(QhStatus::BufferTooSmall, format!("witness buffer holds {len} doubles, {need} needed"));
    }
    let dst = std::slice::from_raw_parts_mut(out, need);
    for (chunk, q) in dst.chunks_exact_mut(4).zip(m.entries()) {
        chunk.copy_from_slice(&q.to_array());
    }
    QhStatus::Ok
}

fn reason(r: Option<Reason>) -> QhReason {
    match r {
        None => QhReason::None,
        Some(Reason::GramOrbit) => QhReason::GramOrbit,
        Some(Reason::RealTrace) => QhReason::RealTrace,
        Some(Reason::NegativeClass) => QhReason::NegativeClass,
        Some(Reason::SingleConjugacy) => QhReason::SingleConjugacy,
        Some(Reason::CanonicalOrbit) => QhReason::CanonicalOrbit,
        Some(Reason::Grassmannian) => QhReason::Grassmannian,
        Some(Reason::Multiplicity) => QhReason::Multiplicity,
        Some(Reason::Degenerate) => QhReason::Degenerate,
        Some(Reason::Verification) => QhReason::Verification,
    }
}

fn verdict(v: Verdict) -> QhVerdict {
    match v {
        Verdict::Congruent => QhVerdict::Congruent,
        Verdict::NotCongruent => QhVerdict::NotCongruent,
        Verdict::Conjugate => QhVerdict::Conjugate,
        Verdict::NotConjugate => QhVerdict::NotConjugate,
        Verdict::Inconclusive => QhVerdict::Inconclusive,
    }
}

unsafe fn report(d: &Decision, out: *mut QhDecision, witness: *mut f64, witness_len: usize) -> QhStatus {
    if let (Some(w), false) = (&d.witness, witness.is_null()) {
        let s = write_matrix(w, witness, witness_len);
        if s != QhStatus::Ok {
            return s;
        }
    }
    *out = QhDecision {
        verdict: verdict(d.verdict),
        reason: reason(d.reason),
        has_witness: d.witness.is_some(),
        residual: d.residual.unwrap_or(f64::NAN),
    };
    QhStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds an isometry from an `(n+1) x (n+1)` matrix.
///
/// # Safety
/// `data` must point to `4 * (n+1)^2` readable doubles and `out` must be a
/// valid pointer to write a handle to.
#[no_mangle]
pub unsafe extern "C" fn qh_isometry_new(n: usize, data: *const f64, tol: f64, out: *mut *mut QhIsometry) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is null");
        }
        if n == 0 || n == usize::MAX {
            return fail(QhStatus::InvalidArgument, "n must be at least 1");
        }
        let d = n + 1;
        let qs = match quaternions(data, d.checked_mul(d)) {
            Ok(q) => q,
            Err(s) => return s,
        };
        let rows = qs.chunks(d).map(<[Quaternion]>::to_vec).collect();
        match HMatrix::from_rows(rows).and_then(|m| Isometry::new(m, tol)) {
            Ok(iso) => {
                *out = Box::into_raw(Box::new(QhIsometry(iso)));
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `iso` must be NULL or a handle from [`qh_isometry_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_isometry_free(iso: *mut QhIsometry) {
    if !iso.is_null() {
        drop(Box::from_raw(iso));
    }
}

/// # Safety
/// `iso` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qh_isometry_classify(iso: *const QhIsometry, out: *mut QhClassification) -> QhStatus {
    guard(|| {
        if iso.is_null() || out.is_null() {
            return fail(QhStatus::NullPointer, "null argument");
        }
        *out = match (*iso).0.classification() {
            Classification::Hyperbolic => QhClassification::Hyperbolic,
            Classification::Elliptic => QhClassification::Elliptic,
            Classification::Parabolic => QhClassification::Parabolic,
            Classification::Unclassified => QhClassification::Unclassified,
        };
        QhStatus::Ok
    })
}

/// Writes the `n` real-trace coefficients to `out`.
///
/// # Safety
/// `iso` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qh_isometry_real_trace(iso: *const QhIsometry, out: *mut f64, len: usize) -> QhStatus {
    guard(|| {
        if iso.is_null() || out.is_null() {
            return fail(QhStatus::NullPointer, "null argument");
        }
        let v = &(*iso).0.real_trace().values;
        if len < v.len() {
            return fail(QhStatus::BufferTooSmall, format!("buffer holds {len} doubles, {} needed", v.len()));
        }
        std::slice::from_raw_parts_mut(out, v.len()).copy_from_slice(v);
        QhStatus::Ok
    })
}

/// Builds a configuration of `m` points in dimension `n`, the first `i` on
/// the boundary. `lifts` holds the `m` lifts back to back.
///
/// # Safety
/// `lifts` must point to `4 * m * (n+1)` readable doubles and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qh_config_new(n: usize, m: usize, i: usize, lifts: *const f64, out: *mut *mut QhConfig) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is null");
        }
        let qs = match quaternions(lifts, n.checked_add(1).and_then(|d| d.checked_mul(m))) {
            Ok(q) => q,
            Err(s) => return s,
        };
        let vs = qs.chunks(n + 1).map(|c| HVector::new(c.to_vec())).collect();
        match PointConfig::new(n, i, vs) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(QhConfig(c)));
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `config` must be NULL or a handle from [`qh_config_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_config_free(config: *mut QhConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Invariant profile as a JSON string; release it with [`qh_string_free`].
///
/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qh_config_invariants_json(config: *const QhConfig, out: *mut *mut c_char) -> QhStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(QhStatus::NullPointer, "null argument");
        }
        let p = match profile(&(*config).0) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        match serde_json::to_string(&p).map(CString::new) {
            Ok(Ok(s)) => {
                *out = s.into_raw();
                QhStatus::Ok
            }
            _ => fail(QhStatus::Numerical, "could not serialize the profile"),
        }
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Decides congruence of two configurations. When `witness` is non-NULL and
/// the verdict carries one, the `(n+1) x (n+1)` witness is written there.
///
/// # Safety
/// `a`, `b` must be live handles, `out` writable, and `witness` NULL or
/// holding `witness_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qh_congruent(
    a: *const QhConfig,
    b: *const QhConfig,
    tol: f64,
    out: *mut QhDecision,
    witness: *mut f64,
    witness_len: usize,
) -> QhStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return fail(QhStatus::NullPointer, "null argument");
        }
        match congruent(&(*a).0, &(*b).0, tol) {
            Ok(d) => report(&d, out, witness, witness_len),
            Err(e) => from_error(e),
        }
    })
}

/// Decides whether `(a, b)` and `(a2, b2)` are simultaneously conjugate.
///
/// # Safety
/// All handles must be live, `out` writable, and `witness` NULL or holding
/// `witness_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qh_pair_conjugate(
    a: *const QhIsometry,
    b: *const QhIsometry,
    a2: *const QhIsometry,
    b2: *const QhIsometry,
    tol: f64,
    out: *mut QhDecision,
    witness: *mut f64,
    witness_len: usize,
) -> QhStatus {
    guard(|| {
        if a.is_null() || b.is_null() || a2.is_null() || b2.is_null() || out.is_null() {
            return fail(QhStatus::NullPointer, "null argument");
        }
        match pair_conjugate(&(*a).0, &(*b).0, &(*a2).0, &(*b2).0, tol) {
            Ok(d) => report(&d, out, witness, witness_len),
            Err(e) => from_error(e),
        }
    })
}

/// Copies the last error into `buf` (truncating), returning the full length.
///
/// # Safety
/// `buf` must be NULL or hold `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qh_last_error_copy(buf: *mut c_char, len: usize) -> usize {
    let msg = qh_last_error();
    if msg.is_null() {
        return 0;
    }
    let bytes = CStr::from_ptr(msg).to_bytes();
    if !buf.is_null() && len > 0 {
        let k = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, k);
        *buf.add(k) = 0;
    }
    bytes.len()
}
