//! C ABI over the msqp-sim library: opaque handles, integer status codes,
//! and a thread-local error message. The generated header lands in
//! `include/msqp_sim.h`.
//!
//! Conventions:
//! - Every fallible call returns [`MsqpStatus`]; `MSQP_STATUS_OK` is zero.
//! - On failure the message is retrievable with [`msqp_last_error`] until
//!   the next failing call on the same thread.
//! - Handles are created and released by this library only. Passing NULL
//!   where a handle is required yields `NULL_ARGUMENT`; double-frees are
//!   undefined behavior, as in any C API.
//! - Complex samples cross the boundary as interleaved doubles
//!   (re, im, re, im, ...).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::slice;

use msqp_sim::harness::{self, ExperimentConfig, Overrides};
use msqp_sim::waveform::{
    msqp_build, phase_rotation_search, zc_generate, zc_root_design, MsQpSpec, ZcParams,
};
use msqp_sim::{dsp, ComplexSequence, Error};

/// Result of any fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsqpStatus {
    Ok = 0,
    /// A required pointer was NULL.
    NullArgument = 1,
    /// A value was out of range or inconsistent with the handle.
    InvalidArgument = 2,
    /// No coprime root exists for the requested length.
    NoValidRoot = 3,
    /// The experiment config failed validation.
    ConfigRejected = 4,
    /// File or stream I/O failed.
    IoFailed = 5,
    /// An output buffer was too small.
    BufferTooSmall = 6,
    /// A string was not valid UTF-8.
    BadEncoding = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: MsqpStatus, message: impl Into<Vec<u8>>) -> MsqpStatus {
    let text = CString::new(message).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
    status
}

fn fail_with(err: Error) -> MsqpStatus {
    let status = match &err {
        Error::InvalidArgument(_) => MsqpStatus::InvalidArgument,
        Error::NoValidRoot(_) => MsqpStatus::NoValidRoot,
        Error::Config { .. } => MsqpStatus::ConfigRejected,
        Error::Io { .. } => MsqpStatus::IoFailed,
    };
    fail(status, err.to_string())
}

/// Message from the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn msqp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Composite-waveform description: subband sequences, guard gaps, and the
/// phase rotations applied when building.
pub struct MsqpSpec {
    inner: MsQpSpec,
}

/// An immutable complex sample buffer.
pub struct MsqpSequence {
    inner: ComplexSequence,
}

/// Picks the sidelobe-confining root for an odd length.
///
/// # Safety
/// `out_root` must point to writable memory for one `usize`.
#[no_mangle]
pub unsafe extern "C" fn msqp_root_design(length: usize, out_root: *mut usize) -> MsqpStatus {
    if out_root.is_null() {
        return fail(MsqpStatus::NullArgument, "out_root is NULL");
    }
    match zc_root_design(length) {
        Ok(root) => {
            *out_root = root;
            MsqpStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Creates a spec with `subband_count` equal-length subbands on designed
/// roots. Free with [`msqp_spec_free`].
///
/// # Safety
/// `out_spec` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn msqp_spec_new(
    subband_count: usize,
    subband_len: usize,
    guard_len: usize,
    out_spec: *mut *mut MsqpSpec,
) -> MsqpStatus {
    if out_spec.is_null() {
        return fail(MsqpStatus::NullArgument, "out_spec is NULL");
    }
    match MsQpSpec::uniform(subband_count, subband_len, guard_len) {
        Ok(inner) => {
            *out_spec = Box::into_raw(Box::new(MsqpSpec { inner }));
            MsqpStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Releases a spec. NULL is ignored.
///
/// # Safety
/// `spec` must be a pointer from [`msqp_spec_new`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn msqp_spec_free(spec: *mut MsqpSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Fixes the per-subband build phases. `count` must equal the subband
/// count and every value must come from the spec's phase alphabet; passing
/// NULL with `count == 0` clears them back to zero rotations.
///
/// # Safety
/// `spec` must be a live handle from [`msqp_spec_new`]. Unless NULL,
/// `phases` must point to `count` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn msqp_spec_set_phases(
    spec: *mut MsqpSpec,
    phases: *const f64,
    count: usize,
) -> MsqpStatus {
    let Some(spec) = spec.as_mut() else {
        return fail(MsqpStatus::NullArgument, "spec is NULL");
    };
    if phases.is_null() {
        if count != 0 {
            return fail(MsqpStatus::NullArgument, "phases is NULL but count is nonzero");
        }
        spec.inner.clear_chosen_phases();
        return MsqpStatus::Ok;
    }
    match spec.inner.set_chosen_phases(slice::from_raw_parts(phases, count).to_vec()) {
        Ok(()) => MsqpStatus::Ok,
        Err(e) => fail_with(e),
    }
}

/// Searches the phase alphabet for the lowest-peak composite and stores
/// the winning phases on the spec. A non-NULL `alphabet` of `alphabet_len`
/// radians in [0, 2pi) replaces the alphabet first; NULL keeps the current
/// one. On success `out_papr_db`, if non-NULL, receives the achieved
/// peak-to-average ratio in dB.
///
/// # Safety
/// `spec` must be a live handle from [`msqp_spec_new`]. Unless NULL,
/// `alphabet` must point to `alphabet_len` readable doubles and
/// `out_papr_db` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn msqp_spec_search_phases(
    spec: *mut MsqpSpec,
    alphabet: *const f64,
    alphabet_len: usize,
    out_papr_db: *mut f64,
) -> MsqpStatus {
    let Some(spec) = spec.as_mut() else {
        return fail(MsqpStatus::NullArgument, "spec is NULL");
    };
    if !alphabet.is_null() {
        let alphabet = slice::from_raw_parts(alphabet, alphabet_len).to_vec();
        if let Err(e) = spec.inner.set_phase_alphabet(alphabet) {
            return fail_with(e);
        }
    }
    let found = match phase_rotation_search(&spec.inner) {
        Ok(p) => p,
        Err(e) => return fail_with(e),
    };
    if let Err(e) = spec.inner.set_chosen_phases(found) {
        return fail_with(e);
    }
    if !out_papr_db.is_null() {
        let papr = msqp_build(&spec.inner).and_then(|seq| dsp::papr_db(&seq));
        match papr {
            Ok(db) => *out_papr_db = db,
            Err(e) => return fail_with(e),
        }
    }
    MsqpStatus::Ok
}

/// Builds the composite sequence the spec describes. Free the result with
/// [`msqp_sequence_free`].
///
/// # Safety
/// `spec` must be a live handle from [`msqp_spec_new`]; `out_sequence`
/// must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn msqp_spec_build(
    spec: *const MsqpSpec,
    out_sequence: *mut *mut MsqpSequence,
) -> MsqpStatus {
    let Some(spec) = spec.as_ref() else {
        return fail(MsqpStatus::NullArgument, "spec is NULL");
    };
    if out_sequence.is_null() {
        return fail(MsqpStatus::NullArgument, "out_sequence is NULL");
    }
    match msqp_build(&spec.inner) {
        Ok(inner) => {
            *out_sequence = Box::into_raw(Box::new(MsqpSequence { inner }));
            MsqpStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Generates one constant-amplitude sequence of odd `length`. `root == 0`
/// selects the designed root; any other value is used as given. Free the
/// result with [`msqp_sequence_free`].
///
/// # Safety
/// `out_sequence` must point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn msqp_zc_sequence(
    length: usize,
    root: usize,
    out_sequence: *mut *mut MsqpSequence,
) -> MsqpStatus {
    if out_sequence.is_null() {
        return fail(MsqpStatus::NullArgument, "out_sequence is NULL");
    }
    let resolved = if root == 0 {
        match zc_root_design(length) {
            Ok(r) => r,
            Err(e) => return fail_with(e),
        }
    } else {
        root
    };
    match ZcParams::new(length, resolved) {
        Ok(params) => {
            *out_sequence = Box::into_raw(Box::new(MsqpSequence { inner: zc_generate(&params) }));
            MsqpStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Sample count of a sequence; 0 for NULL.
///
/// # Safety
/// `sequence` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn msqp_sequence_len(sequence: *const MsqpSequence) -> usize {
    sequence.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies the samples out as interleaved doubles. `capacity` counts
/// doubles, so it must be at least twice the sample count.
///
/// # Safety
/// `sequence` must be a live handle from this library; `out_interleaved`
/// must point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn msqp_sequence_copy(
    sequence: *const MsqpSequence,
    out_interleaved: *mut f64,
    capacity: usize,
) -> MsqpStatus {
    let Some(sequence) = sequence.as_ref() else {
        return fail(MsqpStatus::NullArgument, "sequence is NULL");
    };
    if out_interleaved.is_null() {
        return fail(MsqpStatus::NullArgument, "out_interleaved is NULL");
    }
    let needed = 2 * sequence.inner.len();
    if capacity < needed {
        return fail(
            MsqpStatus::BufferTooSmall,
            format!("need {needed} doubles, got room for {capacity}"),
        );
    }
    let out = slice::from_raw_parts_mut(out_interleaved, needed);
    for (pair, sample) in out.chunks_exact_mut(2).zip(&sequence.inner.samples) {
        pair[0] = sample.re;
        pair[1] = sample.im;
    }
    MsqpStatus::Ok
}

/// Peak-to-average power ratio of a sequence in dB.
///
/// # Safety
/// `sequence` must be a live handle from this library; `out_db` must point
/// to one writable double.
#[no_mangle]
pub unsafe extern "C" fn msqp_sequence_papr_db(
    sequence: *const MsqpSequence,
    out_db: *mut f64,
) -> MsqpStatus {
    let Some(sequence) = sequence.as_ref() else {
        return fail(MsqpStatus::NullArgument, "sequence is NULL");
    };
    if out_db.is_null() {
        return fail(MsqpStatus::NullArgument, "out_db is NULL");
    }
    match dsp::papr_db(&sequence.inner) {
        Ok(db) => {
            *out_db = db;
            MsqpStatus::Ok
        }
        Err(e) => fail_with(e),
    }
}

/// Releases a sequence. NULL is ignored.
///
/// # Safety
/// `sequence` must be a pointer returned by this library that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn msqp_sequence_free(sequence: *mut MsqpSequence) {
    if !sequence.is_null() {
        drop(Box::from_raw(sequence));
    }
}

/// Parses a TOML experiment config, runs its scenario, and returns the
/// result table as a CSV string allocated by this library. `seed` and
/// `trials` override the config when non-NULL. Free the string with
/// [`msqp_string_free`].
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out_csv` must point to
/// writable memory for one pointer. Unless NULL, `seed` and `trials` must
/// each point to one readable `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn msqp_run_config_toml(
    config_toml: *const c_char,
    seed: *const u64,
    trials: *const u64,
    out_csv: *mut *mut c_char,
) -> MsqpStatus {
    if config_toml.is_null() || out_csv.is_null() {
        return fail(MsqpStatus::NullArgument, "config_toml and out_csv are required");
    }
    let text = match CStr::from_ptr(config_toml).to_str() {
        Ok(t) => t,
        Err(_) => return fail(MsqpStatus::BadEncoding, "config_toml is not valid UTF-8"),
    };
    let mut cfg = match ExperimentConfig::from_toml(text) {
        Ok(c) => c,
        Err(e) => return fail_with(e),
    };
    cfg.apply(&Overrides { seed: seed.as_ref().copied(), trials: trials.as_ref().copied(), scale: None });
    let rows = match harness::run(&cfg) {
        Ok(r) => r,
        Err(e) => return fail_with(e),
    };
    let mut buf = Vec::new();
    if let Err(e) = harness::emit_csv(&rows, &mut buf) {
        return fail_with(e);
    }
    match CString::new(buf) {
        Ok(csv) => {
            *out_csv = csv.into_raw();
            MsqpStatus::Ok
        }
        Err(_) => fail(MsqpStatus::BadEncoding, "result table contains a NUL byte"),
    }
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be a pointer returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn msqp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
