//! C ABI over `locoh`.
//!
//! States and bases cross the boundary as opaque handles created by the
//! `*_new`/`*_from_*` constructors and released with the matching `*_free`.
//! Complex numbers are interleaved `double` pairs `[re, im]`; matrices are
//! row-major. Every fallible call returns a [`LocohStatus`]; the message of
//! the most recent failure on the calling thread is available from
//! [`locoh_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use locoh::localization::{self, Protocol};
use locoh::random::{self, AnalyticProtocol, Functional, SamplerSpec};
use locoh::tensor::ComplexVector;
use locoh::toric::{self, Alpha, Region, Topology};
use locoh::{Basis, ComplexMatrix, DensityMatrix, Error, FactorizedBasis, Measure, TensorStructure, C64};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocohStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidState = 4,
    InvalidBasis = 5,
    Overflow = 6,
    Degenerate = 7,
    NonCommuting = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocohMeasure {
    C1 = 0,
    C2 = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocohProtocol {
    TraceOut = 0,
    NonSelective = 1,
    PostSelected = 2,
    /// Coherence of the whole state in the product basis.
    Full = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocohSampler {
    GlobalHaar = 0,
    /// Independent Haar unitaries on the system and the ancilla.
    Factorized = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocohTopology {
    Contractible = 0,
    NonContractibleBoth = 1,
    NonContractibleH = 2,
    NonContractibleV = 3,
}

/// Density matrix together with its system/ancilla split.
pub struct LocohState {
    inner: DensityMatrix,
}

/// Orthonormal basis of one subsystem.
pub struct LocohBasis {
    inner: Basis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(LocohStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } | Error::MalformedStructure(_) | Error::MissingBipartition | Error::EmptyKeep => {
                LocohStatus::DimensionMismatch
            }
            Error::InvalidState(_) | Error::Unnormalized(_) | Error::NotTracePreserving(_) => LocohStatus::InvalidState,
            Error::InvalidBasis(_) => LocohStatus::InvalidBasis,
            Error::Overflow(_) => LocohStatus::Overflow,
            Error::Degenerate(_) => LocohStatus::Degenerate,
            Error::NonCommuting { .. } => LocohStatus::NonCommuting,
            Error::InvalidArgument(_)
            | Error::TopologyMismatch { .. }
            | Error::FitUnderdetermined(_) => LocohStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(LocohStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(LocohStatus::InvalidArgument, msg.into())
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LocohStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LocohStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LocohStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn complex(p: *const f64, len: usize, what: &str) -> Result<Vec<C64>, Fail> {
    let raw = slice(p, 2 * len, what)?;
    Ok(raw.chunks_exact(2).map(|z| C64::new(z[0], z[1])).collect())
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn structure(dims: *const usize, s_mask: *const bool, n_factors: usize) -> Result<TensorStructure, Fail> {
    if n_factors == 0 {
        return Err(invalid("at least one tensor factor is required"));
    }
    let dims = slice(dims, n_factors, "dims")?.to_vec();
    let mask = slice(s_mask, n_factors, "s_mask")?.to_vec();
    Ok(TensorStructure::new(dims, mask)?)
}

unsafe fn state_ref<'a>(p: *const LocohState) -> Result<&'a DensityMatrix, Fail> {
    p.as_ref().map(|s| &s.inner).ok_or_else(|| null("state"))
}

unsafe fn basis_ref<'a>(p: *const LocohBasis, what: &str) -> Result<&'a Basis, Fail> {
    p.as_ref().map(|b| &b.inner).ok_or_else(|| null(what))
}

fn measure(m: LocohMeasure) -> Measure {
    match m {
        LocohMeasure::C1 => Measure::C1,
        LocohMeasure::C2 => Measure::C2,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn locoh_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn locoh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Pure state `|ψ⟩⟨ψ|` from `dim` interleaved amplitudes.
///
/// `dims` and `s_mask` have `n_factors` entries; `s_mask[k]` marks factor
/// `k` as part of the system.
///
/// # Safety
/// All pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_state_from_pure(
    amplitudes: *const f64,
    dim: usize,
    dims: *const usize,
    s_mask: *const bool,
    n_factors: usize,
    out: *mut *mut LocohState,
) -> LocohStatus {
    guard(|| {
        let st = structure(dims, s_mask, n_factors)?;
        let psi = ComplexVector::from_vec(complex(amplitudes, dim, "amplitudes")?);
        let rho = DensityMatrix::from_pure(&psi, st)?;
        write(out, Box::into_raw(Box::new(LocohState { inner: rho })), "out")
    })
}

/// Density matrix from `dim × dim` interleaved row-major entries.
///
/// # Safety
/// As for [`locoh_state_from_pure`], with `entries` holding `2·dim²` doubles.
#[no_mangle]
pub unsafe extern "C" fn locoh_state_from_matrix(
    entries: *const f64,
    dim: usize,
    dims: *const usize,
    s_mask: *const bool,
    n_factors: usize,
    out: *mut *mut LocohState,
) -> LocohStatus {
    guard(|| {
        let st = structure(dims, s_mask, n_factors)?;
        let n = dim.checked_mul(dim).ok_or_else(|| Fail(LocohStatus::Overflow, "dim² overflows".into()))?;
        let m = ComplexMatrix::from_row_slice(dim, dim, &complex(entries, n, "entries")?);
        let rho = DensityMatrix::new(m, st)?;
        write(out, Box::into_raw(Box::new(LocohState { inner: rho })), "out")
    })
}

/// Total Hilbert-space dimension of `state`, or 0 for NULL.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn locoh_state_dim(state: *const LocohState) -> usize {
    state.as_ref().map_or(0, |s| s.inner.dim())
}

/// # Safety
/// `state` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn locoh_state_free(state: *mut LocohState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_basis_computational(dim: usize, out: *mut *mut LocohBasis) -> LocohStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        write(out, Box::into_raw(Box::new(LocohBasis { inner: Basis::computational(dim) })), "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_basis_fourier(dim: usize, out: *mut *mut LocohBasis) -> LocohStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        write(out, Box::into_raw(Box::new(LocohBasis { inner: Basis::fourier(dim) })), "out")
    })
}

/// Basis whose vectors are the columns of a unitary given row-major.
///
/// # Safety
/// `entries` must hold `2·dim²` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_basis_from_unitary(
    entries: *const f64,
    dim: usize,
    out: *mut *mut LocohBasis,
) -> LocohStatus {
    guard(|| {
        let n = dim.checked_mul(dim).ok_or_else(|| Fail(LocohStatus::Overflow, "dim² overflows".into()))?;
        let m = ComplexMatrix::from_row_slice(dim, dim, &complex(entries, n, "entries")?);
        let basis = Basis::new(m, "custom")?;
        write(out, Box::into_raw(Box::new(LocohBasis { inner: basis })), "out")
    })
}

/// # Safety
/// `basis` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn locoh_basis_free(basis: *mut LocohBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Coherence of the whole state in `basis`, ignoring the bipartition.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_coherence(
    state: *const LocohState,
    basis: *const LocohBasis,
    m: LocohMeasure,
    out: *mut f64,
) -> LocohStatus {
    guard(|| {
        let value = measure(m).eval(state_ref(state)?, basis_ref(basis, "basis")?)?;
        write(out, value, "out")
    })
}

/// Localizable coherence of the system under `protocol`.
///
/// `basis_s` acts on the system and `basis_a` on the ancilla.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_localizable(
    state: *const LocohState,
    basis_s: *const LocohBasis,
    basis_a: *const LocohBasis,
    protocol: LocohProtocol,
    m: LocohMeasure,
    out: *mut f64,
) -> LocohStatus {
    guard(|| {
        let rho = state_ref(state)?;
        let fb = FactorizedBasis::new(basis_ref(basis_s, "basis_s")?.clone(), basis_ref(basis_a, "basis_a")?.clone());
        let value = match protocol {
            LocohProtocol::TraceOut => localization::evaluate(Protocol::TraceOut, rho, &fb, measure(m))?.value,
            LocohProtocol::NonSelective => localization::evaluate(Protocol::NonSelective, rho, &fb, measure(m))?.value,
            LocohProtocol::PostSelected => localization::evaluate(Protocol::PostSelected, rho, &fb, measure(m))?.value,
            LocohProtocol::Full => localization::full_coherence(rho, &fb, measure(m))?,
        };
        write(out, value, "out")
    })
}

/// Seeded Monte Carlo mean and standard error of the `c2` protocol value
/// over random pure states on `d_s × d_a`, in computational bases.
///
/// # Safety
/// `mean` and `stderr` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_mc_estimate(
    sampler: LocohSampler,
    protocol: LocohProtocol,
    d_s: usize,
    d_a: usize,
    samples: usize,
    seed: u64,
    mean: *mut f64,
    stderr: *mut f64,
) -> LocohStatus {
    guard(|| {
        let spec = match sampler {
            LocohSampler::GlobalHaar => SamplerSpec::global_haar(d_s, d_a, seed)?,
            LocohSampler::Factorized => SamplerSpec::factorized(d_s, d_a, seed)?,
        };
        let functional = match protocol {
            LocohProtocol::TraceOut => Functional::TraceOut,
            LocohProtocol::NonSelective => Functional::NonSelective,
            LocohProtocol::PostSelected => Functional::PostSelected,
            LocohProtocol::Full => Functional::Full,
        };
        let est = random::mc_estimate(&spec, functional, &FactorizedBasis::computational(d_s, d_a), samples)?;
        write(mean, est.mean, "mean")?;
        write(stderr, est.stderr, "stderr")
    })
}

/// Closed-form `c2` average matching [`locoh_mc_estimate`].
///
/// The post-selected value is the exact global-Haar average. Trace-out is
/// not available for the factorized sampler.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_analytic_average(
    sampler: LocohSampler,
    protocol: LocohProtocol,
    d_s: usize,
    d_a: usize,
    out: *mut f64,
) -> LocohStatus {
    guard(|| {
        let which = match (sampler, protocol) {
            (LocohSampler::GlobalHaar, LocohProtocol::TraceOut) => AnalyticProtocol::TraceOut,
            (LocohSampler::GlobalHaar, LocohProtocol::NonSelective) => AnalyticProtocol::NonSelective,
            (LocohSampler::GlobalHaar, LocohProtocol::PostSelected) => AnalyticProtocol::PostSelectedExact,
            (LocohSampler::GlobalHaar, LocohProtocol::Full) => AnalyticProtocol::Full,
            (LocohSampler::Factorized, LocohProtocol::NonSelective) => AnalyticProtocol::FactorizedNonSelective,
            (LocohSampler::Factorized, p) => return Err(invalid(format!("no closed form for {p:?} with factorized states"))),
        };
        write(out, random::to_f64(&random::analytic_average(which, d_s, d_a)?), "out")
    })
}

/// Simulated and predicted post-selected coherence of a toric-code ground
/// state on an `n × n` torus, system on the edges `s_edges`.
///
/// `alpha` holds the four interleaved sector amplitudes ordered
/// `(0,0), (0,1), (1,0), (1,1)`.
///
/// # Safety
/// `alpha` must hold 8 doubles, `s_edges` `n_edges` entries; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn locoh_toric_cave(
    n: usize,
    alpha: *const f64,
    s_edges: *const usize,
    n_edges: usize,
    topology: LocohTopology,
    simulated: *mut f64,
    predicted: *mut f64,
) -> LocohStatus {
    guard(|| {
        let coeffs: [C64; 4] = complex(alpha, 4, "alpha")?.try_into().map_err(|_| invalid("alpha needs 4 entries"))?;
        let topology = match topology {
            LocohTopology::Contractible => Topology::Contractible,
            LocohTopology::NonContractibleBoth => Topology::NonContractibleBoth,
            LocohTopology::NonContractibleH => Topology::NonContractibleH,
            LocohTopology::NonContractibleV => Topology::NonContractibleV,
        };
        let region = Region::new(n, slice(s_edges, n_edges, "s_edges")?.to_vec(), topology)?;
        let res = toric::run_toric(n, Alpha::new(coeffs)?, &region)?;
        write(simulated, res.cave_simulated, "simulated")?;
        write(predicted, res.cave_predicted, "predicted")
    })
}
