//! C interface to `qpartition`.
//!
//! Objects cross the boundary as opaque handles created by `qp_*_new`/`qp_*_build`
//! functions and released with the matching `qp_*_free`. Every fallible call
//! returns a [`QpStatus`]; on failure [`qp_last_error`] describes the cause
//! until the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qpartition::classical::classical_fpras;
use qpartition::markov::metropolis_chain;
use qpartition::model::{build_schedule, exact_partition_unshifted, IsingModel, Schedule, System};
use qpartition::qestimate::{plan_quantum, Mode, PipelineConfig, QuantumPlan};
use qpartition::szegedy::analyze_walk;
use qpartition::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    CapExceeded = 3,
    GuaranteeFailed = 4,
    Parse = 5,
    Numerical = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpMode {
    Perfect = 0,
    Walk = 1,
}

/// Query counts of a planned quantum run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QpLedger {
    pub controlled_walk: u64,
    pub controlled_reflections: u64,
    pub selective_phases: u64,
    pub samples_prepared: u64,
}

/// Parsed Ising model with its enumerated energy table.
pub struct QpModel {
    system: System,
}

pub struct QpSchedule {
    schedule: Schedule,
}

/// Exact per-level outcome distributions, ready to sample.
pub struct QpQuantumPlan {
    plan: QuantumPlan,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> QpStatus {
    match err {
        e if e.is_cap() => QpStatus::CapExceeded,
        Error::Parse { .. } => QpStatus::Parse,
        Error::NonUnitary(_) | Error::Spectral(_) | Error::SmallGap { .. } | Error::Overflow(_) => QpStatus::Numerical,
        _ => QpStatus::InvalidInput,
    }
}

fn guard(f: impl FnOnce() -> Result<(), QpStatus>) -> QpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QpStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            QpStatus::Panic
        }
    }
}

fn check<T>(r: qpartition::Result<T>) -> Result<T, QpStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, QpStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        QpStatus::NullPointer
    })
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), QpStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(QpStatus::NullPointer);
    }
    out.write(value);
    Ok(())
}

/// Message for the last failure on this thread, or NULL. Owned by the
/// library; valid until the next failing call.
#[no_mangle]
pub extern "C" fn qp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses model text (`spins n`, `edge u v J`, `field u h` records).
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn qp_model_parse(text: *const c_char, out: *mut *mut QpModel) -> QpStatus {
    guard(|| {
        let text = deref(text)?;
        let text = CStr::from_ptr(text).to_str().map_err(|_| {
            set_error("model text is not UTF-8".into());
            QpStatus::InvalidInput
        })?;
        let system = check(IsingModel::parse(text).and_then(|m| m.to_system()))?;
        write_out(out, Box::into_raw(Box::new(QpModel { system })))
    })
}

/// # Safety
/// `model` must come from [`qp_model_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qp_model_free(model: *mut QpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of enumerated states, or 0 for a NULL handle.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qp_model_states(model: *const QpModel) -> usize {
    model.as_ref().map_or(0, |m| m.system.states())
}

/// Exact `Z(β)` by enumeration.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_exact_partition(model: *const QpModel, beta: f64, out: *mut f64) -> QpStatus {
    guard(|| {
        let m = deref(model)?;
        write_out(out, check(exact_partition_unshifted(&m.system, beta))?)
    })
}

/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_schedule_build(
    model: *const QpModel,
    beta_final: f64,
    target_low: f64,
    target_high: f64,
    out: *mut *mut QpSchedule,
) -> QpStatus {
    guard(|| {
        let m = deref(model)?;
        let schedule = check(build_schedule(&m.system, beta_final, target_low, target_high))?;
        write_out(out, Box::into_raw(Box::new(QpSchedule { schedule })))
    })
}

/// # Safety
/// `schedule` must come from [`qp_schedule_build`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qp_schedule_free(schedule: *mut QpSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Number of ratios `ℓ`, or 0 for a NULL handle.
///
/// # Safety
/// `schedule` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qp_schedule_levels(schedule: *const QpSchedule) -> usize {
    schedule.as_ref().map_or(0, |s| s.schedule.len())
}

/// Inverse temperature `index` in `0..=ℓ`.
///
/// # Safety
/// `schedule` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_schedule_beta(schedule: *const QpSchedule, index: usize, out: *mut f64) -> QpStatus {
    guard(|| {
        let s = deref(schedule)?;
        let beta = s.schedule.betas().get(index).copied().ok_or_else(|| {
            set_error(format!("index {index} is beyond the schedule"));
            QpStatus::InvalidInput
        })?;
        write_out(out, beta)
    })
}

/// One run of the classical Markov-chain scheme.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_classical_estimate(
    model: *const QpModel,
    schedule: *const QpSchedule,
    epsilon: f64,
    seed: u64,
    out: *mut f64,
) -> QpStatus {
    guard(|| {
        let m = deref(model)?;
        let s = deref(schedule)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        write_out(
            out,
            check(classical_fpras(&m.system, &s.schedule, epsilon, &mut rng))?.value,
        )
    })
}

/// Simulates the quantum scheme's circuits exactly; `amplitude_cap` of 0
/// keeps the default cap.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_quantum_plan(
    model: *const QpModel,
    schedule: *const QpSchedule,
    epsilon: f64,
    mode: QpMode,
    amplitude_cap: usize,
    out: *mut *mut QpQuantumPlan,
) -> QpStatus {
    guard(|| {
        let m = deref(model)?;
        let s = deref(schedule)?;
        let mode = match mode {
            QpMode::Perfect => Mode::Perfect,
            QpMode::Walk => Mode::Walk,
        };
        let mut config = check(PipelineConfig::for_mode(mode, &m.system, &s.schedule, epsilon))?;
        if amplitude_cap > 0 {
            config = config.with_cap(amplitude_cap);
        }
        let plan = check(plan_quantum(&m.system, &s.schedule, config))?;
        write_out(out, Box::into_raw(Box::new(QpQuantumPlan { plan })))
    })
}

/// # Safety
/// `plan` must come from [`qp_quantum_plan`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qp_quantum_plan_free(plan: *mut QpQuantumPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Draws one estimate of `Z(β_F)` from a plan.
///
/// # Safety
/// `plan` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_quantum_run(plan: *const QpQuantumPlan, seed: u64, out: *mut f64) -> QpStatus {
    guard(|| {
        let p = deref(plan)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        write_out(out, p.plan.run(&mut rng).value)
    })
}

/// Exact `Z(β_F)` stored in the plan.
///
/// # Safety
/// `plan` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_quantum_exact(plan: *const QpQuantumPlan, out: *mut f64) -> QpStatus {
    guard(|| write_out(out, deref(plan)?.plan.exact_z))
}

/// Smallest probability, over levels, that one estimation lands within
/// `(1 ± ε_pe)α_i`.
///
/// # Safety
/// `plan` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_quantum_min_band_mass(plan: *const QpQuantumPlan, out: *mut f64) -> QpStatus {
    guard(|| {
        let p = deref(plan)?;
        let m = p
            .plan
            .levels
            .iter()
            .map(|l| l.distribution.within_band_mass())
            .fold(1.0, f64::min);
        write_out(out, m)
    })
}

/// # Safety
/// `plan` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn qp_quantum_ledger(plan: *const QpQuantumPlan, out: *mut QpLedger) -> QpStatus {
    guard(|| {
        let l = deref(plan)?.plan.ledger();
        write_out(
            out,
            QpLedger {
                controlled_walk: l.controlled_walk,
                controlled_reflections: l.controlled_reflections,
                selective_phases: l.selective_phases,
                samples_prepared: l.samples_prepared,
            },
        )
    })
}

/// Phase gap `Δ` of the Szegedy walk for the Metropolis chain at `β`, and the
/// chain's spectral gap `δ`. Returns `GuaranteeFailed` if `Δ < 2√δ`.
///
/// # Safety
/// `model` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn qp_walk_gaps(
    model: *const QpModel,
    beta: f64,
    phase_gap: *mut f64,
    spectral_gap: *mut f64,
) -> QpStatus {
    guard(|| {
        let m = deref(model)?;
        let analysis = check(metropolis_chain(&m.system, beta).and_then(|c| analyze_walk(&c)))?;
        write_out(phase_gap, analysis.phase_gap())?;
        write_out(spectral_gap, analysis.spectral_gap())?;
        if analysis.gap_relation_holds() {
            Ok(())
        } else {
            set_error("phase gap below twice the root of the spectral gap".into());
            Err(QpStatus::GuaranteeFailed)
        }
    })
}
