//! C ABI over the `thermodmn` library.
//!
//! Every function returns a [`TdmnStatus`]. On failure the message of the
//! last error on the calling thread is available from
//! [`tdmn_last_error_message`]. Objects are handed out as opaque pointers
//! and released with their `_free` function. Matrices are 6×6 row-major in
//! Mandel notation (11, 22, 33, 12, 13, 23 with √2 on shear entries).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use thermodmn::dmn::{homogenize_linear, laminate_stiffness, ModelFile, Topology};
use thermodmn::material::{MaterialsFile, PhasePair};
use thermodmn::solver::{DmnSolver, DmnState, MaterialPoint};
use thermodmn::tensor::{Mat6, UnitVector3, Vec3, Vec6};
use thermodmn::Error;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TdmnStatus {
    Ok = 0,
    InvalidArgument = 1,
    NonConvergence = 2,
    Io = 3,
    NullPointer = 4,
    Panic = 5,
}

impl From<&Error> for TdmnStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => TdmnStatus::NonConvergence,
            3 => TdmnStatus::Io,
            _ => TdmnStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message);
}

enum Failure {
    Library(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> TdmnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            TdmnStatus::Ok
        }
        Ok(Err(Failure::Library(e))) => {
            let status = TdmnStatus::from(&e);
            set_last_error(e.to_string());
            status
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(format!("null pointer passed as `{name}`"));
            TdmnStatus::NullPointer
        }
        Err(_) => {
            set_last_error("internal panic".into());
            TdmnStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn read_mat6(p: *const f64, name: &'static str) -> Result<Mat6, Failure> {
    let a = deref(p as *const [f64; 36], name)?;
    Ok(Mat6::from_row_slice(a))
}

unsafe fn write_mat6(p: *mut f64, m: &Mat6, name: &'static str) -> Result<(), Failure> {
    let out = deref_mut(p as *mut [f64; 36], name)?;
    for i in 0..6 {
        for j in 0..6 {
            out[6 * i + j] = m[(i, j)];
        }
    }
    Ok(())
}

unsafe fn read_path(p: *const c_char, name: &'static str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidInput(format!("`{name}` is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

/// Message of the last failure on this thread; empty after a success. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tdmn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tdmn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque network topology: directions and leaf weights.
pub struct TdmnModel {
    topology: Topology,
}

/// Loads a model JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tdmn_model_load(path: *const c_char, out: *mut *mut TdmnModel) -> TdmnStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let topology = ModelFile::load(&read_path(path, "path")?)?.topology()?;
        *out = Box::into_raw(Box::new(TdmnModel { topology }));
        Ok(())
    })
}

/// Random network of the given depth, reproducible from `seed`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn tdmn_model_random(depth: usize, seed: u64, out: *mut *mut TdmnModel) -> TdmnStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let topology = Topology::random(depth, &mut ChaCha8Rng::seed_from_u64(seed))?;
        *out = Box::into_raw(Box::new(TdmnModel { topology }));
        Ok(())
    })
}

/// Tree depth of a model.
///
/// # Safety
/// `model` must come from this library and `depth` be writable.
#[no_mangle]
pub unsafe extern "C" fn tdmn_model_depth(model: *const TdmnModel, depth: *mut usize) -> TdmnStatus {
    guard(|| {
        *deref_mut(depth, "depth")? = deref(model, "model")?.topology.depth();
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tdmn_model_free(model: *mut TdmnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Linear-elastic effective stiffness of a network for phase stiffnesses
/// `c1` and `c2`.
///
/// # Safety
/// `c1`, `c2` and `out` must point to 36 doubles.
#[no_mangle]
pub unsafe extern "C" fn tdmn_homogenize_linear(
    model: *const TdmnModel,
    c1: *const f64,
    c2: *const f64,
    out: *mut f64,
) -> TdmnStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let effective = homogenize_linear(&model.topology, &read_mat6(c1, "c1")?, &read_mat6(c2, "c2")?)?;
        write_mat6(out, &effective, "out")
    })
}

/// Stiffness of a two-phase rank-one laminate with unit normal `normal` and
/// volume fraction `fraction1` of the first phase.
///
/// # Safety
/// `c1`, `c2` and `out` must point to 36 doubles, `normal` to 3.
#[no_mangle]
pub unsafe extern "C" fn tdmn_laminate_stiffness(
    c1: *const f64,
    c2: *const f64,
    normal: *const f64,
    fraction1: f64,
    out: *mut f64,
) -> TdmnStatus {
    guard(|| {
        let n = deref(normal as *const [f64; 3], "normal")?;
        let n = UnitVector3::new(Vec3::new(n[0], n[1], n[2]))?;
        let c = laminate_stiffness(&read_mat6(c1, "c1")?, &read_mat6(c2, "c2")?, &n, fraction1)?;
        write_mat6(out, &c, "out")
    })
}

/// Response of one committed time step.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TdmnStepOutput {
    /// Stress [MPa].
    pub stress: [f64; 6],
    /// Thermomechanical coupling heat rate [MPa/s].
    pub coupling: f64,
    /// Dissipation rate [MPa/s].
    pub dissipation: f64,
    /// ∂σ/∂ε, row-major.
    pub c_eps: [f64; 36],
    /// ∂σ/∂θ.
    pub c_theta: [f64; 6],
    /// ∂ρ/∂ε.
    pub d_eps: [f64; 6],
    /// ∂ρ/∂θ.
    pub d_theta: f64,
    pub iterations: usize,
}

/// Opaque material point: a network solver with its history state.
pub struct TdmnPoint {
    solver: DmnSolver,
    state: DmnState,
}

/// Material point on a model. A null `materials_path` selects glass fibers
/// in a PA66 matrix.
///
/// # Safety
/// `model` must come from this library, `materials_path` be null or a
/// NUL-terminated string, and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tdmn_point_new(
    model: *const TdmnModel,
    materials_path: *const c_char,
    out: *mut *mut TdmnPoint,
) -> TdmnStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let model = deref(model, "model")?;
        let phases = if materials_path.is_null() {
            PhasePair::glass_pa66()
        } else {
            MaterialsFile::load(&read_path(materials_path, "materials_path")?)?.phases()?
        };
        let solver = DmnSolver::new(model.topology.clone(), phases);
        let state = solver.initial_state();
        *out = Box::into_raw(Box::new(TdmnPoint { solver, state }));
        Ok(())
    })
}

/// Advances the point to total strain `strain` and temperature `theta` over
/// `dt` seconds. The state is committed only on success.
///
/// # Safety
/// `point` must come from this library, `strain` point to 6 doubles and
/// `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn tdmn_point_step(
    point: *mut TdmnPoint,
    strain: *const f64,
    theta: f64,
    dt: f64,
    out: *mut TdmnStepOutput,
) -> TdmnStatus {
    guard(|| {
        let point = deref_mut(point, "point")?;
        let strain = Vec6::from_row_slice(deref(strain as *const [f64; 6], "strain")?);
        let out = deref_mut(out, "out")?;
        let (response, state) = point.solver.evaluate(&point.state, &strain, theta, dt)?;
        let mut c_eps = [0.0; 36];
        for i in 0..6 {
            for j in 0..6 {
                c_eps[6 * i + j] = response.c_eps[(i, j)];
            }
        }
        *out = TdmnStepOutput {
            stress: response.stress.into(),
            coupling: response.coupling,
            dissipation: response.dissipation,
            c_eps,
            c_theta: response.c_theta.into(),
            d_eps: response.d_eps.into(),
            d_theta: response.d_theta,
            iterations: response.iterations,
        };
        point.state = state;
        Ok(())
    })
}

/// Returns the point to its virgin state.
///
/// # Safety
/// `point` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn tdmn_point_reset(point: *mut TdmnPoint) -> TdmnStatus {
    guard(|| {
        let point = deref_mut(point, "point")?;
        point.state = point.solver.initial_state();
        Ok(())
    })
}

/// Effective heat capacity at constant strain [J m⁻³ K⁻¹].
///
/// # Safety
/// `point` must come from this library and `capacity` be writable.
#[no_mangle]
pub unsafe extern "C" fn tdmn_point_heat_capacity(point: *const TdmnPoint, capacity: *mut f64) -> TdmnStatus {
    guard(|| {
        *deref_mut(capacity, "capacity")? = deref(point, "point")?.solver.heat_capacity();
        Ok(())
    })
}

/// Releases a point. Null is ignored.
///
/// # Safety
/// `point` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tdmn_point_free(point: *mut TdmnPoint) {
    if !point.is_null() {
        drop(Box::from_raw(point));
    }
}
