//! C ABI over the search space, the synthetic oracle and the BO engine.
//!
//! Objects are opaque handles created by `*_new`/`*_sample`/... functions and
//! released by the matching `*_free`. Fallible calls return a [`NasStatus`];
//! on failure [`nas_last_error`] describes the error for the calling thread.
//! Strings returned by the library are released with [`nas_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nas_ablate::acq_optimizers::OptimizerKind;
use nas_ablate::acquisition::AcquisitionKind;
use nas_ablate::benchmarks::{SyntheticOracle, SyntheticOracleConfig};
use nas_ablate::bo_engine::{run_bo, BOConfig, History};
use nas_ablate::encodings::EncodingKind;
use nas_ablate::search_space::{edit_distance, mutate, sample_uniform, Architecture, SearchSpaceSpec};
use nas_ablate::seed::rng_from_seed;
use nas_ablate::surrogates::SurrogateKind;
use nas_ablate::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSpace = 3,
    SpaceMismatch = 4,
    Parse = 5,
    Bridge = 6,
    Io = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasEncoding {
    Path = 0,
    Tabular = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasSurrogate {
    NnEnsemble = 0,
    RandomForest = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasAcquisition {
    Its = 0,
    Ei = 1,
    ConstMean = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NasOptimizer {
    Mut = 0,
    Rs = 1,
    RsPlus = 2,
}

/// Search space definition.
pub struct NasSpace(SearchSpaceSpec);

/// One architecture of a space.
pub struct NasArchitecture(Architecture);

/// Synthetic accuracy oracle bound to a space.
pub struct NasOracle(SyntheticOracle);

/// Evaluation history of a finished run.
pub struct NasHistory(History);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> NasStatus {
    match err {
        Error::InvalidSpace(_) | Error::SpaceTooLarge(_) => NasStatus::InvalidSpace,
        Error::SpaceMismatch(_) | Error::WidthMismatch { .. } | Error::SchemaMismatch(_) => NasStatus::SpaceMismatch,
        Error::Parse(_) => NasStatus::Parse,
        Error::BridgeUnavailable(_) | Error::Protocol { .. } | Error::BridgeRemote(_) => NasStatus::Bridge,
        Error::Io(_) | Error::Csv(_) | Error::MissingArtifacts { .. } => NasStatus::Io,
        _ => NasStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics for [`nas_last_error`].
fn guard(f: impl FnOnce() -> Result<(), (NasStatus, String)>) -> NasStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NasStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            NasStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (NasStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (NasStatus, String) {
    (NasStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (NasStatus, String)> {
    // SAFETY: the caller passes a live handle from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

fn store<T>(out: *mut *mut T, value: T) -> Result<(), (NasStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: `out` is non-null and points to writable storage per the API.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn write<T>(out: *mut T, value: T) -> Result<(), (NasStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: as in `store`.
    unsafe { *out = value };
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn nas_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn nas_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Space with the first `num_operations` DARTS operations (generic labels
/// beyond eight).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_space_new(
    num_nodes: usize,
    num_inputs: usize,
    num_operations: usize,
    num_cells: usize,
    out: *mut *mut NasSpace,
) -> NasStatus {
    guard(|| {
        let spec =
            SearchSpaceSpec::with_operation_count(num_nodes, num_inputs, num_operations, num_cells).map_err(lib_err)?;
        store(out, NasSpace(spec))
    })
}

/// The default space: 4 nodes, 2 inputs, 8 operations, 1 cell.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_space_default(out: *mut *mut NasSpace) -> NasStatus {
    guard(|| store(out, NasSpace(SearchSpaceSpec::default())))
}

/// # Safety
/// `space` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nas_space_free(space: *mut NasSpace) {
    if !space.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(space) });
    }
}

/// Number of parameters with at least two levels; 0 for a null handle.
///
/// # Safety
/// `space` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nas_space_num_mutable_parameters(space: *const NasSpace) -> usize {
    // SAFETY: see function contract.
    unsafe { space.as_ref() }.map_or(0, |s| s.0.num_mutable_parameters())
}

/// Uniform random architecture drawn from a stream seeded by `seed`.
///
/// # Safety
/// `space` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_arch_sample(space: *const NasSpace, seed: u64, out: *mut *mut NasArchitecture) -> NasStatus {
    guard(|| {
        // SAFETY: see function contract.
        let space = unsafe { deref(space, "space") }?;
        store(out, NasArchitecture(sample_uniform(&space.0, &mut rng_from_seed(seed))))
    })
}

/// Parses the canonical text form.
///
/// # Safety
/// `space` must be a live handle, `text` a nul-terminated string and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_arch_parse(
    space: *const NasSpace,
    text: *const c_char,
    out: *mut *mut NasArchitecture,
) -> NasStatus {
    guard(|| {
        // SAFETY: see function contract.
        let space = unsafe { deref(space, "space") }?;
        if text.is_null() {
            return Err(null("text"));
        }
        // SAFETY: non-null and nul-terminated per contract.
        let text = unsafe { CStr::from_ptr(text) }
            .to_str()
            .map_err(|_| (NasStatus::Parse, "text is not UTF-8".to_string()))?;
        let arch = Architecture::parse_canonical(&space.0, text).map_err(lib_err)?;
        store(out, NasArchitecture(arch))
    })
}

/// Canonical text form; release with [`nas_string_free`]. Null on error.
///
/// # Safety
/// Both handles must be null or live.
#[no_mangle]
pub unsafe extern "C" fn nas_arch_to_string(space: *const NasSpace, arch: *const NasArchitecture) -> *mut c_char {
    let mut result = ptr::null_mut();
    guard(|| {
        // SAFETY: see function contract.
        let (space, arch) = unsafe { (deref(space, "space")?, deref(arch, "architecture")?) };
        arch.0.validate(&space.0).map_err(lib_err)?;
        let text = CString::new(arch.0.to_canonical_string(&space.0)).expect("no interior nul");
        result = text.into_raw();
        Ok(())
    });
    result
}

/// Number of differing parameters between two architectures of one space.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_arch_edit_distance(
    a: *const NasArchitecture,
    b: *const NasArchitecture,
    out: *mut usize,
) -> NasStatus {
    guard(|| {
        // SAFETY: see function contract.
        let (a, b) = unsafe { (deref(a, "a")?, deref(b, "b")?) };
        write(out, edit_distance(&a.0, &b.0).map_err(lib_err)?)
    })
}

/// Architecture at edit distance exactly `n_edits` from `arch`.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_arch_mutate(
    space: *const NasSpace,
    arch: *const NasArchitecture,
    seed: u64,
    n_edits: usize,
    out: *mut *mut NasArchitecture,
) -> NasStatus {
    guard(|| {
        // SAFETY: see function contract.
        let (space, arch) = unsafe { (deref(space, "space")?, deref(arch, "architecture")?) };
        arch.0.validate(&space.0).map_err(lib_err)?;
        let child = mutate(&space.0, &arch.0, &mut rng_from_seed(seed), n_edits).map_err(lib_err)?;
        store(out, NasArchitecture(child))
    })
}

/// # Safety
/// `arch` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nas_arch_free(arch: *mut NasArchitecture) {
    if !arch.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(arch) });
    }
}

/// Synthetic oracle with default settings and the given table seed.
///
/// # Safety
/// `space` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_oracle_new(space: *const NasSpace, benchmark_seed: u64, out: *mut *mut NasOracle) -> NasStatus {
    guard(|| {
        // SAFETY: see function contract.
        let space = unsafe { deref(space, "space") }?;
        let cfg = SyntheticOracleConfig {
            benchmark_seed,
            ..SyntheticOracleConfig::default()
        };
        store(out, NasOracle(SyntheticOracle::new(&space.0, cfg).map_err(lib_err)?))
    })
}

/// Validation accuracy of `arch`.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_oracle_evaluate(
    oracle: *const NasOracle,
    arch: *const NasArchitecture,
    out: *mut f64,
) -> NasStatus {
    use nas_ablate::benchmarks::Benchmark;
    guard(|| {
        // SAFETY: see function contract.
        let (oracle, arch) = unsafe { (deref(oracle, "oracle")?, deref(arch, "architecture")?) };
        write(out, oracle.0.evaluate(&arch.0).map_err(lib_err)?)
    })
}

/// # Safety
/// `oracle` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nas_oracle_free(oracle: *mut NasOracle) {
    if !oracle.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(oracle) });
    }
}

/// Runs BO against the oracle: 10 random initial evaluations, then
/// `iterations` proposals. The oracle must belong to `space`.
///
/// # Safety
/// Handles must be live; `out` valid for writes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nas_run_bo(
    space: *const NasSpace,
    oracle: *const NasOracle,
    encoding: NasEncoding,
    surrogate: NasSurrogate,
    acquisition: NasAcquisition,
    optimizer: NasOptimizer,
    iterations: usize,
    seed: u64,
    out: *mut *mut NasHistory,
) -> NasStatus {
    guard(|| {
        // SAFETY: see function contract.
        let (space, oracle) = unsafe { (deref(space, "space")?, deref(oracle, "oracle")?) };
        let mut cfg = BOConfig::new(
            match encoding {
                NasEncoding::Path => EncodingKind::Path,
                NasEncoding::Tabular => EncodingKind::Tabular,
            },
            match surrogate {
                NasSurrogate::NnEnsemble => SurrogateKind::NnEnsemble,
                NasSurrogate::RandomForest => SurrogateKind::RandomForest,
            },
            match acquisition {
                NasAcquisition::Its => AcquisitionKind::Its,
                NasAcquisition::Ei => AcquisitionKind::Ei,
                NasAcquisition::ConstMean => AcquisitionKind::ConstMean,
            },
            match optimizer {
                NasOptimizer::Mut => OptimizerKind::Mut,
                NasOptimizer::Rs => OptimizerKind::Rs,
                NasOptimizer::RsPlus => OptimizerKind::RsPlus,
            },
        );
        cfg.iterations = iterations;
        if oracle.0.spec() != &space.0 {
            return Err((NasStatus::SpaceMismatch, "oracle belongs to a different space".into()));
        }
        let history = run_bo(&cfg, &oracle.0, &space.0, seed).map_err(lib_err)?;
        if let Some(f) = &history.failure {
            return Err((NasStatus::Internal, f.message.clone()));
        }
        store(out, NasHistory(history))
    })
}

/// Number of evaluations; 0 for a null handle.
///
/// # Safety
/// `history` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nas_history_len(history: *const NasHistory) -> usize {
    // SAFETY: see function contract.
    unsafe { history.as_ref() }.map_or(0, |h| h.0.len())
}

/// True and incumbent accuracy of the `index`-th evaluation (0-based).
///
/// # Safety
/// `history` must be a live handle; outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_history_record(
    history: *const NasHistory,
    index: usize,
    accuracy: *mut f64,
    incumbent: *mut f64,
) -> NasStatus {
    guard(|| {
        // SAFETY: see function contract.
        let history = unsafe { deref(history, "history") }?;
        let r = history.0.records.get(index).ok_or_else(|| {
            (
                NasStatus::InvalidArgument,
                format!("index {index} out of range for {} records", history.0.len()),
            )
        })?;
        write(accuracy, r.true_accuracy)?;
        write(incumbent, r.incumbent_accuracy)
    })
}

/// Copy of the incumbent architecture.
///
/// # Safety
/// `history` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nas_history_incumbent(history: *const NasHistory, out: *mut *mut NasArchitecture) -> NasStatus {
    guard(|| {
        // SAFETY: see function contract.
        let history = unsafe { deref(history, "history") }?;
        let best = history
            .0
            .incumbent()
            .ok_or_else(|| (NasStatus::InvalidArgument, "history is empty".to_string()))?;
        store(out, NasArchitecture(best.architecture.clone()))
    })
}

/// # Safety
/// `history` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nas_history_free(history: *mut NasHistory) {
    if !history.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(history) });
    }
}
