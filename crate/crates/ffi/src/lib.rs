//! C ABI for `cvue`.
//!
//! Every fallible function returns a [`CvueStatus`] and writes its result
//! through an out-pointer. On failure a description is available from
//! [`cvue_last_error_message`] on the same thread. Handles are opaque and must
//! be released with their `_free` function; strings returned by the library
//! are released with [`cvue_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cvue::adversary::{check_against_bound, run_cloning_game, AttackStrategy};
use cvue::bits::BitString;
use cvue::bounds;
use cvue::channel::{self, ChannelConvention, ChannelParams};
use cvue::cli::KeyFile;
use cvue::codec::{base_decrypt, Codec, CodecScheme, Decoder};
use cvue::protocol::{self, CipherState, ProtocolParams, QecmKey};
use cvue::rng::master_rng;
use cvue::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvueStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    LengthMismatch = 3,
    DecodeFailure = 4,
    NotPositiveDefinite = 5,
    Format = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvueStrategy {
    HeterodyneSplit = 0,
    ForwardToBob = 1,
    MeasureGuessBasis = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvueConvention {
    /// Amplitudes scale by `T`.
    Linear = 0,
    /// Amplitudes scale by `√T`.
    Symplectic = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvueChannel {
    pub transmittance: f64,
    pub excess_noise: f64,
    pub convention: CvueConvention,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CvueRoundTrip {
    pub trials: u64,
    pub failures: u64,
    pub failure_rate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub modes: u64,
    pub flipped_modes: u64,
    pub flip_rate: f64,
}

/// `bob_ber` / `charlie_ber` are NaN for a player without a share.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CvueGameOutcome {
    pub trials: u64,
    pub wins: u64,
    pub win_rate: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub bob_ber: f64,
    pub charlie_ber: f64,
    pub bound: f64,
    pub bound_holds: bool,
}

/// Protocol parameters.
pub struct CvueParams {
    inner: ProtocolParams,
}

/// A secret key together with the parameters it was generated for.
pub struct CvueKey {
    key: QecmKey,
    params: ProtocolParams,
}

/// A cipherstate. It remembers its codeword, which the reference decoder
/// needs.
pub struct CvueCipher {
    cipher: CipherState,
    codeword: BitString,
    params: ProtocolParams,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> CvueStatus {
    match err {
        Error::InvalidParams(_) | Error::ModeIndex { .. } | Error::OracleUnbound => CvueStatus::InvalidParams,
        Error::LengthMismatch { .. } => CvueStatus::LengthMismatch,
        Error::NotPositiveDefinite { .. } => CvueStatus::NotPositiveDefinite,
        Error::DecodeFailure => CvueStatus::DecodeFailure,
        Error::Format(_) => CvueStatus::Format,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), (CvueStatus, String)>>(f: F) -> CvueStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CvueStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            CvueStatus::Internal
        }
    }
}

fn lib<T>(r: cvue::Result<T>) -> Result<T, (CvueStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CvueStatus, String) {
    (CvueStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (CvueStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (CvueStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn cvue_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn cvue_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_params_new(
    message_len: usize,
    codeword_len: usize,
    correctable: usize,
    alpha: f64,
    squeezing: f64,
    out: *mut *mut CvueParams,
) -> CvueStatus {
    guard(|| {
        let inner = lib(ProtocolParams::new(message_len, codeword_len, correctable, alpha, squeezing))?;
        write(out, Box::into_raw(Box::new(CvueParams { inner })), "out")
    })
}

/// # Safety
/// `params` must be null or a handle from [`cvue_params_new`].
#[no_mangle]
pub unsafe extern "C" fn cvue_params_free(params: *mut CvueParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_key_generate(params: *const CvueParams, seed: u64, out: *mut *mut CvueKey) -> CvueStatus {
    guard(|| {
        let p = deref(params, "params")?.inner;
        let key = lib(protocol::key_gen(&p, &mut master_rng(seed)))?;
        write(out, Box::into_raw(Box::new(CvueKey { key, params: p })), "out")
    })
}

/// # Safety
/// `key` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cvue_key_free(key: *mut CvueKey) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

/// Serializes a key to the JSON key-file format. Free the result with
/// [`cvue_string_free`].
///
/// # Safety
/// `key` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_key_to_json(key: *const CvueKey, out: *mut *mut c_char) -> CvueStatus {
    guard(|| {
        let k = deref(key, "key")?;
        let text = cvue::cli::key_json(&k.key, &k.params);
        let c = CString::new(text).map_err(|e| (CvueStatus::Internal, e.to_string()))?;
        write(out, c.into_raw(), "out")
    })
}

/// Parses and validates a JSON key file.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_key_from_json(json: *const c_char, out: *mut *mut CvueKey) -> CvueStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (CvueStatus::Format, e.to_string()))?;
        let file: KeyFile = lib(cvue::cli::parse_key_file(text))?;
        let (key, params) = lib(file.to_key())?;
        write(out, Box::into_raw(Box::new(CvueKey { key, params })), "out")
    })
}

unsafe fn read_bits(bits: *const u8, len: usize, what: &str) -> Result<BitString, (CvueStatus, String)> {
    if len == 0 {
        return Ok(BitString::zeros(0));
    }
    if bits.is_null() {
        return Err(null(what));
    }
    lib(BitString::from_bytes01(std::slice::from_raw_parts(bits, len)))
}

/// Encrypts a message given as `len` bytes, each 0 or 1. Encryption is
/// deterministic given the key.
///
/// # Safety
/// `key` must be a live handle, `message` readable for `len` bytes and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_encrypt(
    key: *const CvueKey,
    message: *const u8,
    len: usize,
    out: *mut *mut CvueCipher,
) -> CvueStatus {
    guard(|| {
        let k = deref(key, "key")?;
        let m = read_bits(message, len, "message")?;
        let codec = lib(Codec::from_spec(k.params.codec_spec(CodecScheme::Oracle)))?;
        let (codeword, cipher) = lib(protocol::encrypt_with_codeword(&k.key, &m, &k.params, &codec))?;
        write(
            out,
            Box::into_raw(Box::new(CvueCipher {
                cipher,
                codeword,
                params: k.params,
            })),
            "out",
        )
    })
}

/// # Safety
/// `cipher` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cvue_cipher_free(cipher: *mut CvueCipher) {
    if !cipher.is_null() {
        drop(Box::from_raw(cipher));
    }
}

/// Number of modes in a cipherstate, 0 for a null handle.
///
/// # Safety
/// `cipher` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cvue_cipher_num_modes(cipher: *const CvueCipher) -> usize {
    cipher.as_ref().map_or(0, |c| c.cipher.len())
}

/// Sends the cipherstate through a loss channel in place. Decryption
/// afterwards rescales thresholds by the channel's amplitude gain only if
/// the caller passes the same channel to [`cvue_decrypt`].
///
/// # Safety
/// `cipher` must be a live handle and `channel` readable.
#[no_mangle]
pub unsafe extern "C" fn cvue_cipher_apply_channel(cipher: *mut CvueCipher, channel: *const CvueChannel) -> CvueStatus {
    guard(|| {
        let c = cipher.as_mut().ok_or_else(|| null("cipher"))?;
        let ch = to_channel(deref(channel, "channel")?)?;
        c.cipher = ch.apply(&c.cipher);
        Ok(())
    })
}

fn to_channel(ch: &CvueChannel) -> Result<ChannelParams, (CvueStatus, String)> {
    let convention = match ch.convention {
        CvueConvention::Linear => ChannelConvention::Linear,
        CvueConvention::Symplectic => ChannelConvention::Symplectic,
    };
    lib(ChannelParams::new(ch.transmittance, ch.excess_noise, convention))
}

/// Decrypts into `message_out` (`len` bytes, each 0 or 1). `channel` may be
/// null for an untouched cipherstate. Returns
/// [`CvueStatus::DecodeFailure`] when more than `t` bits flipped.
///
/// # Safety
/// Handles must be live, `message_out` writable for `len` bytes, `channel`
/// null or readable.
#[no_mangle]
pub unsafe extern "C" fn cvue_decrypt(
    key: *const CvueKey,
    cipher: *const CvueCipher,
    channel: *const CvueChannel,
    seed: u64,
    message_out: *mut u8,
    len: usize,
) -> CvueStatus {
    guard(|| {
        let k = deref(key, "key")?;
        let c = deref(cipher, "cipher")?;
        if c.params != k.params {
            return Err((CvueStatus::InvalidParams, "key and cipher use different parameters".into()));
        }
        if len != k.params.message_len {
            return Err((
                CvueStatus::LengthMismatch,
                format!("message buffer holds {len} bytes, expected {}", k.params.message_len),
            ));
        }
        if message_out.is_null() {
            return Err(null("message_out"));
        }
        let gain = match channel.as_ref() {
            Some(ch) => to_channel(ch)?.amplitude_gain(),
            None => 1.0,
        };
        let codec = lib(Codec::from_spec(k.params.codec_spec(CodecScheme::Oracle)))?;
        let decoder = codec.decoder(Some(&c.codeword));
        let received = lib(protocol::measure_codeword(&k.key, &c.cipher.modes, gain, &mut master_rng(seed)))?;
        let m = lib(decoder.decode(&received).and_then(|p| base_decrypt(&k.key.s, &p)))?;
        let out = std::slice::from_raw_parts_mut(message_out, len);
        for (dst, b) in out.iter_mut().zip(m.iter()) {
            *dst = b as u8;
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_ber_analytic(alpha: f64, squeezing: f64, out: *mut f64) -> CvueStatus {
    guard(|| {
        check_alpha_r(alpha, squeezing)?;
        write(out, bounds::ber_analytic(alpha, squeezing), "out")
    })
}

fn check_alpha_r(alpha: f64, squeezing: f64) -> Result<(), (CvueStatus, String)> {
    if !(alpha > 0.0 && alpha.is_finite()) || !(squeezing >= 0.0 && squeezing.is_finite()) {
        return Err((
            CvueStatus::InvalidParams,
            format!("need alpha > 0 and r >= 0, got alpha = {alpha}, r = {squeezing}"),
        ));
    }
    Ok(())
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_eps_df(
    codeword_len: usize,
    correctable: usize,
    alpha: f64,
    squeezing: f64,
    out: *mut f64,
) -> CvueStatus {
    guard(|| {
        check_alpha_r(alpha, squeezing)?;
        if codeword_len == 0 || correctable >= codeword_len {
            return Err((CvueStatus::InvalidParams, "need 0 <= t < N".into()));
        }
        write(out, bounds::eps_df(codeword_len, correctable, alpha, squeezing), "out")
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_tau(codeword_len: usize, correctable: usize, alpha: f64, out: *mut f64) -> CvueStatus {
    guard(|| write(out, lib(bounds::tau(codeword_len, correctable, alpha))?, "out"))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_asymptotic_margin(alpha: f64, squeezing: f64, out: *mut f64) -> CvueStatus {
    guard(|| {
        check_alpha_r(alpha, squeezing)?;
        write(out, bounds::asymptotic_margin(alpha, squeezing), "out")
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_monogamy_bound_exact(num_modes: usize, delta: f64, eps: f64, out: *mut f64) -> CvueStatus {
    guard(|| write(out, lib(bounds::monogamy_bound_exact(num_modes, delta, eps))?, "out"))
}

/// # Safety
/// `channel` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_noisy_ber(
    alpha: f64,
    squeezing: f64,
    channel: *const CvueChannel,
    out: *mut f64,
) -> CvueStatus {
    guard(|| {
        check_alpha_r(alpha, squeezing)?;
        let ch = to_channel(deref(channel, "channel")?)?;
        write(out, channel::noisy_ber(alpha, squeezing, &ch), "out")
    })
}

/// `min(1, 2^{-n+τ})` for the given parameters.
///
/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_win_bound(params: *const CvueParams, out: *mut f64) -> CvueStatus {
    guard(|| {
        let p = deref(params, "params")?;
        write(out, lib(bounds::win_bound(&p.inner))?, "out")
    })
}

/// # Safety
/// `params` must be a live handle, `channel` null or readable, `out` valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_run_round_trip(
    params: *const CvueParams,
    trials: u64,
    seed: u64,
    channel: *const CvueChannel,
    out: *mut CvueRoundTrip,
) -> CvueStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let ch = match channel.as_ref() {
            Some(c) => Some(to_channel(c)?),
            None => None,
        };
        let r = lib(protocol::run_round_trip(&p.inner, trials, seed, ch.as_ref()))?;
        write(
            out,
            CvueRoundTrip {
                trials: r.trials,
                failures: r.failures,
                failure_rate: r.failure_rate,
                ci_lower: r.interval.lower,
                ci_upper: r.interval.upper,
                modes: r.modes,
                flipped_modes: r.flipped_modes,
                flip_rate: r.flip_rate,
            },
            "out",
        )
    })
}

/// # Safety
/// `params` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cvue_run_cloning_game(
    params: *const CvueParams,
    strategy: CvueStrategy,
    trials: u64,
    seed: u64,
    out: *mut CvueGameOutcome,
) -> CvueStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let strategy = match strategy {
            CvueStrategy::HeterodyneSplit => AttackStrategy::HeterodyneSplit,
            CvueStrategy::ForwardToBob => AttackStrategy::ForwardToBob,
            CvueStrategy::MeasureGuessBasis => AttackStrategy::MeasureGuessBasis,
        };
        let g = lib(run_cloning_game(&p.inner, strategy, trials, seed))?;
        let check = lib(check_against_bound(&g, &p.inner))?;
        write(
            out,
            CvueGameOutcome {
                trials: g.trials,
                wins: g.wins,
                win_rate: g.win_rate,
                ci_lower: g.interval.lower,
                ci_upper: g.interval.upper,
                bob_ber: g.bob_ber.unwrap_or(f64::NAN),
                charlie_ber: g.charlie_ber.unwrap_or(f64::NAN),
                bound: check.bound,
                bound_holds: check.holds,
            },
            "out",
        )
    })
}
