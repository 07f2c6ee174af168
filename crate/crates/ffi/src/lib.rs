//! C interface to the `milnor` crate.
//!
//! Every function returns a [`MilnorStatus`]; results come back through out
//! pointers. Objects are opaque handles owned by the caller and released
//! with the matching `*_free` function. On failure the message is kept per
//! thread and read with [`milnor_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use milnor::crypto::{self, Ciphertext, EncryptOptions, GermCatalog, KeyPair, KeyRange, Scheme};
use milnor::gaussmanin::{hyp2f1, quadratic_period, HypergeometricParams};
use milnor::germ::{parse_germ_text, rational_from_f64, PolynomialGerm};
use milnor::morse::{find_critical_points, CriticalPoint, MorseOptions, Morsification, SearchBox};
use milnor::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilnorStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Degenerate = 3,
    Crypto = 4,
    Numeric = 5,
    Panic = 6,
}

impl From<&Error> for MilnorStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            3 => MilnorStatus::Degenerate,
            4 => MilnorStatus::Crypto,
            5 => MilnorStatus::Numeric,
            _ => MilnorStatus::InvalidInput,
        }
    }
}

pub struct MilnorGerm {
    germ: PolynomialGerm,
}

pub struct MilnorCriticalPoints {
    points: Vec<CriticalPoint>,
}

pub struct MilnorCatalog {
    catalog: GermCatalog,
}

pub struct MilnorKeyPair {
    keys: KeyPair,
}

pub struct MilnorCiphertext {
    ciphertext: Ciphertext,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard<F>(f: F) -> MilnorStatus
where
    F: FnOnce() -> Result<(), (MilnorStatus, String)>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MilnorStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MilnorStatus::Panic
        }
    }
}

type FfiResult<T> = Result<T, (MilnorStatus, String)>;

fn lift<T>(r: milnor::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (MilnorStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> (MilnorStatus, String) {
    (MilnorStatus::NullPointer, format!("{} is null", what))
}

fn invalid(msg: impl Into<String>) -> (MilnorStatus, String) {
    (MilnorStatus::InvalidInput, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{} is not valid UTF-8", what)))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn milnor_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses germ text (the `.germ` file format).
///
/// # Safety
/// `text` must be a nul-terminated string and `out_germ` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn milnor_germ_parse(
    text: *const c_char,
    out_germ: *mut *mut MilnorGerm,
) -> MilnorStatus {
    guard(|| {
        let slot = out(out_germ, "out_germ")?;
        let (germ, _) = lift(parse_germ_text(string(text, "text")?))?;
        *slot = boxed(MilnorGerm { germ });
        Ok(())
    })
}

/// # Safety
/// `germ` must come from `milnor_germ_parse` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn milnor_germ_free(germ: *mut MilnorGerm) {
    free(germ)
}

/// # Safety
/// `germ` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn milnor_germ_n_vars(germ: *const MilnorGerm) -> usize {
    germ.as_ref().map_or(0, |g| g.germ.n_vars())
}

/// # Safety
/// `x` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn milnor_germ_evaluate(
    germ: *const MilnorGerm,
    x: *const f64,
    len: usize,
    out_value: *mut f64,
) -> MilnorStatus {
    guard(|| {
        let g = deref(germ, "germ")?;
        let slot = out(out_value, "out_value")?;
        *slot = lift(g.germ.evaluate(slice(x, len, "x")?))?;
        Ok(())
    })
}

/// Critical points of `f + s * sum(quad_i x_i^2)` in the cube `[lo, hi]^m`,
/// seeded from a grid of `grid_per_axis` points per axis.
///
/// # Safety
/// `quad` must point to `len` doubles, where `len` is the germ's variable count.
#[no_mangle]
pub unsafe extern "C" fn milnor_morsify(
    germ: *const MilnorGerm,
    quad: *const f64,
    len: usize,
    s: f64,
    lo: f64,
    hi: f64,
    grid_per_axis: usize,
    out_points: *mut *mut MilnorCriticalPoints,
) -> MilnorStatus {
    guard(|| {
        let g = deref(germ, "germ")?;
        let slot = out(out_points, "out_points")?;
        let m = g.germ.n_vars();
        let mors = lift(Morsification::new(
            g.germ.clone(),
            slice(quad, len, "quad")?.to_vec(),
        ))?;
        let fs = lift(mors.realize(s))?;
        let region = lift(SearchBox::cube(m, lo, hi))?;
        let points = lift(find_critical_points(
            &fs,
            &region,
            grid_per_axis,
            &MorseOptions::default(),
        ))?;
        *slot = boxed(MilnorCriticalPoints { points });
        Ok(())
    })
}

/// # Safety
/// `points` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn milnor_critical_points_len(points: *const MilnorCriticalPoints) -> usize {
    points.as_ref().map_or(0, |p| p.points.len())
}

/// Copies point `i`: its location into `location` (room for `len` doubles),
/// its critical value and its Morse index.
///
/// # Safety
/// `location` must have room for `len` doubles; the other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn milnor_critical_points_get(
    points: *const MilnorCriticalPoints,
    i: usize,
    location: *mut f64,
    len: usize,
    out_value: *mut f64,
    out_index: *mut usize,
) -> MilnorStatus {
    guard(|| {
        let set = deref(points, "points")?;
        let p = set.points.get(i).ok_or_else(|| {
            invalid(format!(
                "index {} out of range ({} points)",
                i,
                set.points.len()
            ))
        })?;
        if len != p.location.len() {
            return Err(invalid(format!(
                "location needs {} entries, got {}",
                p.location.len(),
                len
            )));
        }
        if location.is_null() {
            return Err(null("location"));
        }
        std::slice::from_raw_parts_mut(location, len).copy_from_slice(&p.location);
        *out(out_value, "out_value")? = p.value;
        *out(out_index, "out_index")? = p.morse_index;
        Ok(())
    })
}

/// # Safety
/// `points` must come from `milnor_morsify` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn milnor_critical_points_free(points: *mut MilnorCriticalPoints) {
    free(points)
}

/// Gauss hypergeometric function 2F1(a, b; c; z) for |z| < 1. The
/// parameters must be exact binary fractions of modest size.
///
/// # Safety
/// `out_value` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn milnor_hyp2f1(
    a: f64,
    b: f64,
    c: f64,
    z: f64,
    out_value: *mut f64,
) -> MilnorStatus {
    guard(|| {
        let slot = out(out_value, "out_value")?;
        let p = lift(HypergeometricParams::new(
            lift(rational_from_f64(a))?,
            lift(rational_from_f64(b))?,
            lift(rational_from_f64(c))?,
        ))?;
        *slot = lift(hyp2f1(&p, z))?;
        Ok(())
    })
}

/// Monte Carlo period of `dx / (t - f)` over the vanishing cycle of the
/// quadratic form with `lambda` negative squares in `m` variables.
///
/// # Safety
/// `out_value` and `out_std_error` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn milnor_quadratic_period(
    m: usize,
    lambda: usize,
    eta: f64,
    t: f64,
    n_samples: usize,
    seed: u64,
    out_value: *mut f64,
    out_std_error: *mut f64,
) -> MilnorStatus {
    guard(|| {
        let v = out(out_value, "out_value")?;
        let se = out(out_std_error, "out_std_error")?;
        let est = lift(quadratic_period(m, lambda, eta, t, n_samples, seed))?;
        *v = est.value;
        *se = est.std_error;
        Ok(())
    })
}

/// The catalog bundled with the library.
///
/// # Safety
/// `out_catalog` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn milnor_catalog_shipped(
    out_catalog: *mut *mut MilnorCatalog,
) -> MilnorStatus {
    guard(|| {
        let slot = out(out_catalog, "out_catalog")?;
        *slot = boxed(MilnorCatalog {
            catalog: GermCatalog::shipped(),
        });
        Ok(())
    })
}

/// Loads a catalog file; germ paths are resolved next to it.
///
/// # Safety
/// `path` must be a nul-terminated string and `out_catalog` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn milnor_catalog_load(
    path: *const c_char,
    out_catalog: *mut *mut MilnorCatalog,
) -> MilnorStatus {
    guard(|| {
        let slot = out(out_catalog, "out_catalog")?;
        let catalog = lift(GermCatalog::load(Path::new(string(path, "path")?)))?;
        *slot = boxed(MilnorCatalog { catalog });
        Ok(())
    })
}

/// # Safety
/// `catalog` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn milnor_catalog_len(catalog: *const MilnorCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.catalog.entries().len())
}

/// Writes the message of entry `i` as weights into `weights` (room for
/// `len` doubles) and its length into `out_len`. Passing `len = 0` only
/// reports the length.
///
/// # Safety
/// `weights` must have room for `len` doubles; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn milnor_catalog_message(
    catalog: *const MilnorCatalog,
    i: usize,
    weights: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> MilnorStatus {
    guard(|| {
        let c = deref(catalog, "catalog")?;
        let entry = c
            .catalog
            .entries()
            .get(i)
            .ok_or_else(|| invalid(format!("entry {} out of range", i)))?;
        let w: Vec<f64> = entry.message.as_f64();
        *out(out_len, "out_len")? = w.len();
        if len == 0 {
            return Ok(());
        }
        if len < w.len() {
            return Err(invalid(format!(
                "message has {} weights, buffer holds {}",
                w.len(),
                len
            )));
        }
        if weights.is_null() {
            return Err(null("weights"));
        }
        std::slice::from_raw_parts_mut(weights, w.len()).copy_from_slice(&w);
        Ok(())
    })
}

/// # Safety
/// `catalog` must come from a catalog constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn milnor_catalog_free(catalog: *mut MilnorCatalog) {
    free(catalog)
}

/// Draws a public key in `(0, s0]` for entry `entry` and derives the
/// secret Morse vector.
///
/// # Safety
/// `catalog` must be live and `out_keys` valid.
#[no_mangle]
pub unsafe extern "C" fn milnor_keygen(
    catalog: *const MilnorCatalog,
    entry: usize,
    seed: u64,
    out_keys: *mut *mut MilnorKeyPair,
) -> MilnorStatus {
    guard(|| {
        let c = deref(catalog, "catalog")?;
        let slot = out(out_keys, "out_keys")?;
        let e = c
            .catalog
            .entries()
            .get(entry)
            .ok_or_else(|| invalid(format!("entry {} out of range", entry)))?;
        let keys = lift(crypto::keygen(&c.catalog, e, KeyRange::Positive, seed))?;
        *slot = boxed(MilnorKeyPair { keys });
        Ok(())
    })
}

/// # Safety
/// `keys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn milnor_keypair_public(keys: *const MilnorKeyPair) -> f64 {
    keys.as_ref().map_or(f64::NAN, |k| k.keys.pk)
}

/// Length of the secret Morse vector.
///
/// # Safety
/// `keys` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn milnor_keypair_secret_len(keys: *const MilnorKeyPair) -> usize {
    keys.as_ref().map_or(0, |k| k.keys.sk.len())
}

/// # Safety
/// `keys` must come from `milnor_keygen` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn milnor_keypair_free(keys: *mut MilnorKeyPair) {
    free(keys)
}

/// Encrypts catalog entry `entry` under `keys` with scheme 1 or 2.
///
/// # Safety
/// `catalog` and `keys` must be live and `out_ciphertext` valid.
#[no_mangle]
pub unsafe extern "C" fn milnor_encrypt(
    catalog: *const MilnorCatalog,
    keys: *const MilnorKeyPair,
    scheme: u32,
    entry: usize,
    out_ciphertext: *mut *mut MilnorCiphertext,
) -> MilnorStatus {
    guard(|| {
        let c = deref(catalog, "catalog")?;
        let k = deref(keys, "keys")?;
        let slot = out(out_ciphertext, "out_ciphertext")?;
        let scheme = lift(Scheme::from_number(scheme))?;
        let e = c
            .catalog
            .entries()
            .get(entry)
            .ok_or_else(|| invalid(format!("entry {} out of range", entry)))?;
        let ciphertext = lift(crypto::encrypt(
            scheme,
            &c.catalog,
            k.keys.pk,
            &e.message,
            &EncryptOptions::default(),
        ))?;
        *slot = boxed(MilnorCiphertext { ciphertext });
        Ok(())
    })
}

/// Number of index-zero points or entries in the ciphertext.
///
/// # Safety
/// `ciphertext` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn milnor_ciphertext_count(ciphertext: *const MilnorCiphertext) -> usize {
    ciphertext.as_ref().map_or(0, |c| c.ciphertext.count())
}

/// # Safety
/// `ciphertext` must come from `milnor_encrypt` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn milnor_ciphertext_free(ciphertext: *mut MilnorCiphertext) {
    free(ciphertext)
}

/// Decrypts to the index of the catalog entry holding the message.
///
/// # Safety
/// All handles must be live and `out_entry` valid.
#[no_mangle]
pub unsafe extern "C" fn milnor_decrypt(
    catalog: *const MilnorCatalog,
    keys: *const MilnorKeyPair,
    ciphertext: *const MilnorCiphertext,
    out_entry: *mut usize,
) -> MilnorStatus {
    guard(|| {
        let c = deref(catalog, "catalog")?;
        let k = deref(keys, "keys")?;
        let ct = deref(ciphertext, "ciphertext")?;
        let slot = out(out_entry, "out_entry")?;
        let m = lift(crypto::decrypt(&c.catalog, &k.keys.sk, &ct.ciphertext))?;
        *slot = c
            .catalog
            .entries()
            .iter()
            .position(|e| e.message == m)
            .expect("decrypted message is in the catalog");
        Ok(())
    })
}
