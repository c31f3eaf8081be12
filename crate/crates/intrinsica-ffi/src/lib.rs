//! C ABI over the intrinsica library.
//!
//! Conventions: every fallible call returns an [`ItxStatus`]; outputs go
//! through pointers. Obstacle sets are opaque handles created and destroyed
//! here. Strings returned by this library must be released with
//! [`itx_string_free`]. On any non-OK status, [`itx_last_error_message`]
//! returns a description valid until the next failing call on that thread.
//! Float coordinates are converted to exact rationals bit-for-bit, so the
//! geometric predicates behind these entry points stay exact.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use intrinsica::fractal::ObstacleSet;
use intrinsica::geometry::{Point, Segment, Vec2};
use intrinsica::io::{obstacles_from_json, obstacles_to_json};
use intrinsica::monotone::{delta_infimum, MapSample};
use intrinsica::path::{detour_construct, esp_visibility};
use intrinsica::rat::{rat, rat_from_f64, to_f64};
use intrinsica::thinness::{claim1_certificate, cone_reach_feasible};
use intrinsica::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ItxStatus {
    Ok = 0,
    InvalidInput = 1,
    Domain = 2,
    ExplicitExpansion = 3,
    InvalidEndpoint = 4,
    Unreachable = 5,
    Undefined = 6,
    Io = 7,
    Json = 8,
    NullPointer = 9,
    Panic = 10,
}

/// Opaque obstacle-set handle.
pub struct ItxObstacles(ObstacleSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ItxStatus {
    match err {
        Error::InvalidInput(_) => ItxStatus::InvalidInput,
        Error::Domain(_) => ItxStatus::Domain,
        Error::ExplicitExpansion { .. } => ItxStatus::ExplicitExpansion,
        Error::InvalidEndpoint(_) => ItxStatus::InvalidEndpoint,
        Error::Unreachable => ItxStatus::Unreachable,
        Error::Undefined(_) => ItxStatus::Undefined,
        Error::Io(_) => ItxStatus::Io,
        Error::Json(_) => ItxStatus::Json,
    }
}

fn guard(body: impl FnOnce() -> Result<(), (ItxStatus, String)>) -> ItxStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => ItxStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            ItxStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (ItxStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (ItxStatus, String) {
    (ItxStatus::NullPointer, format!("{what} must not be null"))
}

fn point_from(x: f64, y: f64) -> Result<Point, (ItxStatus, String)> {
    Ok(Point::new(rat_from_f64(x).map_err(lib_err)?, rat_from_f64(y).map_err(lib_err)?))
}

/// Message for the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn itx_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by an `itx_*` function, or null.
#[no_mangle]
pub unsafe extern "C" fn itx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses the JSON obstacle interchange format (a rectangle list or a spec).
/// Spec payloads expand up to `limit` rectangles, falling back to the
/// implicit handle.
///
/// # Safety
/// `json` must be a NUL-terminated UTF-8 string; `out` must be a valid
/// pointer. The returned handle must be released with [`itx_obstacles_free`].
#[no_mangle]
pub unsafe extern "C" fn itx_obstacles_from_json(
    json: *const c_char,
    limit: u64,
    out: *mut *mut ItxObstacles,
) -> ItxStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(null_err("json and out"));
        }
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|_| (ItxStatus::InvalidInput, "json is not valid UTF-8".into()))?;
        let obs = obstacles_from_json(text, limit).map_err(lib_err)?;
        unsafe { *out = Box::into_raw(Box::new(ItxObstacles(obs))) };
        Ok(())
    })
}

/// Releases an obstacle handle.
///
/// # Safety
/// `h` must come from [`itx_obstacles_from_json`] (or be null) and must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn itx_obstacles_free(h: *mut ItxObstacles) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Serializes the obstacle set back to the JSON interchange format.
///
/// # Safety
/// `h` and `out` must be valid; release the string with [`itx_string_free`].
#[no_mangle]
pub unsafe extern "C" fn itx_obstacles_to_json(
    h: *const ItxObstacles,
    out: *mut *mut c_char,
) -> ItxStatus {
    guard(|| {
        let obs = unsafe { h.as_ref() }.ok_or_else(|| null_err("handle"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let text = obstacles_to_json(&obs.0).map_err(lib_err)?;
        let c = CString::new(text)
            .map_err(|_| (ItxStatus::InvalidInput, "JSON contained NUL".into()))?;
        unsafe { *out = c.into_raw() };
        Ok(())
    })
}

/// Number of explicit rectangles; errors for implicit handles.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn itx_obstacles_rect_count(
    h: *const ItxObstacles,
    out: *mut u64,
) -> ItxStatus {
    guard(|| {
        let obs = unsafe { h.as_ref() }.ok_or_else(|| null_err("handle"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let n = obs.0.rects().map_err(lib_err)?.len() as u64;
        unsafe { *out = n };
        Ok(())
    })
}

/// Planar measure and boundary length of the union.
///
/// # Safety
/// `h`, `out_area`, and `out_boundary` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn itx_obstacles_measures(
    h: *const ItxObstacles,
    out_area: *mut f64,
    out_boundary: *mut f64,
) -> ItxStatus {
    guard(|| {
        let obs = unsafe { h.as_ref() }.ok_or_else(|| null_err("handle"))?;
        if out_area.is_null() || out_boundary.is_null() {
            return Err(null_err("outputs"));
        }
        unsafe {
            *out_area = to_f64(obs.0.measure());
            *out_boundary = to_f64(obs.0.boundary_length());
        }
        Ok(())
    })
}

/// Exact test of whether the closed segment meets the set.
///
/// # Safety
/// `h` and `out` must be valid pointers; coordinates must be finite.
#[no_mangle]
pub unsafe extern "C" fn itx_segment_hits(
    h: *const ItxObstacles,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    out: *mut bool,
) -> ItxStatus {
    guard(|| {
        let obs = unsafe { h.as_ref() }.ok_or_else(|| null_err("handle"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        let p = point_from(x0, y0)?;
        let q = point_from(x1, y1)?;
        let seg = if p == q {
            Segment::degenerate(p)
        } else {
            Segment::new(p, q).map_err(lib_err)?
        };
        unsafe { *out = obs.0.segment_hits(&seg) };
        Ok(())
    })
}

/// Exact Euclidean shortest path; writes its length and removability gap.
///
/// # Safety
/// `h`, `out_length`, and `out_gap` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn itx_esp(
    h: *const ItxObstacles,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    out_length: *mut f64,
    out_gap: *mut f64,
) -> ItxStatus {
    guard(|| {
        let obs = unsafe { h.as_ref() }.ok_or_else(|| null_err("handle"))?;
        if out_length.is_null() || out_gap.is_null() {
            return Err(null_err("outputs"));
        }
        let a = point_from(ax, ay)?;
        let b = point_from(bx, by)?;
        let res = esp_visibility(&a, &b, &obs.0).map_err(lib_err)?;
        unsafe {
            *out_length = res.length;
            *out_gap = res.gap;
        }
        Ok(())
    })
}

/// Perimeter-detour path; writes its length and removability gap.
///
/// # Safety
/// `h`, `out_length`, and `out_gap` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn itx_detour(
    h: *const ItxObstacles,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    out_length: *mut f64,
    out_gap: *mut f64,
) -> ItxStatus {
    guard(|| {
        let obs = unsafe { h.as_ref() }.ok_or_else(|| null_err("handle"))?;
        if out_length.is_null() || out_gap.is_null() {
            return Err(null_err("outputs"));
        }
        let a = point_from(ax, ay)?;
        let b = point_from(bx, by)?;
        let det = detour_construct(&a, &b, &obs.0).map_err(lib_err)?;
        unsafe {
            *out_length = det.result.length;
            *out_gap = det.result.gap;
        }
        Ok(())
    })
}

/// Exact cone-constrained reachability with slope `slope_num / slope_den`.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn itx_cone_reach_feasible(
    h: *const ItxObstacles,
    ax: f64,
    ay: f64,
    bx: f64,
    by: f64,
    slope_num: i64,
    slope_den: i64,
    out: *mut bool,
) -> ItxStatus {
    guard(|| {
        let obs = unsafe { h.as_ref() }.ok_or_else(|| null_err("handle"))?;
        if out.is_null() {
            return Err(null_err("out"));
        }
        if slope_den == 0 {
            return Err((ItxStatus::Domain, "slope denominator must be nonzero".into()));
        }
        let a = point_from(ax, ay)?;
        let b = point_from(bx, by)?;
        let res =
            cone_reach_feasible(&a, &b, &rat(slope_num, slope_den), &obs.0).map_err(lib_err)?;
        unsafe { *out = res.feasible };
        Ok(())
    })
}

/// Exact blocking certificate for the grid family, delta = num/den.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn itx_claim1_certificate(
    num: i64,
    den: i64,
    out: *mut bool,
) -> ItxStatus {
    guard(|| {
        if out.is_null() {
            return Err(null_err("out"));
        }
        if den == 0 {
            return Err((ItxStatus::Domain, "denominator must be nonzero".into()));
        }
        let v = claim1_certificate(&rat(num, den)).map_err(lib_err)?;
        unsafe { *out = v };
        Ok(())
    })
}

/// Monotonicity estimate over a flat sample array laid out as
/// [x1, y1, fx1, fy1, x2, y2, fx2, fy2, ...] with `n` entries of 4 doubles.
///
/// # Safety
/// `data` must point to `4 * n` doubles; `out_delta_hat` and `out_min_inner`
/// must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn itx_delta_infimum(
    data: *const f64,
    n: usize,
    out_delta_hat: *mut f64,
    out_min_inner: *mut f64,
) -> ItxStatus {
    guard(|| {
        if data.is_null() || out_delta_hat.is_null() || out_min_inner.is_null() {
            return Err(null_err("data and outputs"));
        }
        let flat = unsafe { std::slice::from_raw_parts(data, 4 * n) };
        let pairs: Vec<(Vec2, Vec2)> = flat
            .chunks_exact(4)
            .map(|c| (Vec2::new(c[0], c[1]), Vec2::new(c[2], c[3])))
            .collect();
        let sample = MapSample::new("ffi", pairs).map_err(lib_err)?;
        let est = delta_infimum(&sample).map_err(lib_err)?;
        unsafe {
            *out_delta_hat = est.delta_hat;
            *out_min_inner = est.min_inner;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn handle(json: &str) -> *mut ItxObstacles {
        let c = CString::new(json).unwrap();
        let mut h: *mut ItxObstacles = std::ptr::null_mut();
        let status = unsafe { itx_obstacles_from_json(c.as_ptr(), 1_000_000, &mut h) };
        assert_eq!(status, ItxStatus::Ok);
        assert!(!h.is_null());
        h
    }

    #[test]
    fn roundtrip_and_measures() {
        let h = handle(r#"{"rects": [["0","0","1","1"]]}"#);
        let mut n = 0u64;
        assert_eq!(unsafe { itx_obstacles_rect_count(h, &mut n) }, ItxStatus::Ok);
        assert_eq!(n, 1);
        let (mut area, mut boundary) = (0.0, 0.0);
        assert_eq!(
            unsafe { itx_obstacles_measures(h, &mut area, &mut boundary) },
            ItxStatus::Ok
        );
        assert_eq!(area, 1.0);
        assert_eq!(boundary, 4.0);
        let mut text: *mut c_char = std::ptr::null_mut();
        assert_eq!(unsafe { itx_obstacles_to_json(h, &mut text) }, ItxStatus::Ok);
        let back = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
        unsafe { itx_string_free(text) };
        assert!(back.contains("rects"));
        unsafe { itx_obstacles_free(h) };
    }

    #[test]
    fn esp_and_detour_match_known_scene() {
        let h = handle(r#"{"rects": [["0","0","1","1"]]}"#);
        let (mut len, mut gap) = (0.0, 0.0);
        assert_eq!(
            unsafe { itx_esp(h, -1.0, 0.5, 2.0, 0.5, &mut len, &mut gap) },
            ItxStatus::Ok
        );
        assert!((len - (1.0 + 2.0 * 1.25f64.sqrt())).abs() < 1e-12);
        assert_eq!(
            unsafe { itx_detour(h, -1.0, 0.5, 2.0, 0.5, &mut len, &mut gap) },
            ItxStatus::Ok
        );
        assert!((len - 4.0).abs() < 1e-12);
        unsafe { itx_obstacles_free(h) };
    }

    #[test]
    fn endpoint_inside_reports_status_and_message() {
        let h = handle(r#"{"rects": [["0","0","1","1"]]}"#);
        let (mut len, mut gap) = (0.0, 0.0);
        let status = unsafe { itx_esp(h, 0.5, 0.5, 2.0, 0.5, &mut len, &mut gap) };
        assert_eq!(status, ItxStatus::InvalidEndpoint);
        let msg = unsafe { CStr::from_ptr(itx_last_error_message()) }.to_str().unwrap();
        assert!(msg.contains("endpoint"));
        unsafe { itx_obstacles_free(h) };
    }

    #[test]
    fn segment_hits_implicit_spec() {
        let h = handle(
            r#"{"spec": {"type": "tabor-grid", "minLevel": 7, "maxLevel": 8, "delta": "1/32"}}"#,
        );
        let mut hit = false;
        assert_eq!(
            unsafe { itx_segment_hits(h, -1.0, 0.5, 2.0, 0.5, &mut hit) },
            ItxStatus::Ok
        );
        assert!(hit);
        unsafe { itx_obstacles_free(h) };
    }

    #[test]
    fn certificate_and_cone() {
        let mut v = false;
        assert_eq!(unsafe { itx_claim1_certificate(1, 32, &mut v) }, ItxStatus::Ok);
        assert!(v);
        assert_eq!(unsafe { itx_claim1_certificate(1, 24, &mut v) }, ItxStatus::Ok);
        assert!(!v);
        assert_eq!(unsafe { itx_claim1_certificate(1, 0, &mut v) }, ItxStatus::Domain);

        let h = handle(r#"{"rects": []}"#);
        let mut feasible = false;
        assert_eq!(
            unsafe { itx_cone_reach_feasible(h, 0.0, 0.0, 1.0, 0.0, 1, 100, &mut feasible) },
            ItxStatus::Ok
        );
        assert!(feasible);
        unsafe { itx_obstacles_free(h) };
    }

    #[test]
    fn delta_infimum_over_flat_array() {
        // Identity on three points.
        let data = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        let (mut dh, mut mi) = (0.0, 0.0);
        assert_eq!(
            unsafe { itx_delta_infimum(data.as_ptr(), 3, &mut dh, &mut mi) },
            ItxStatus::Ok
        );
        assert_eq!(dh, 1.0);
        assert!(mi > 0.0);
    }

    #[test]
    fn null_pointers_are_rejected() {
        let mut h: *mut ItxObstacles = std::ptr::null_mut();
        assert_eq!(
            unsafe { itx_obstacles_from_json(std::ptr::null(), 10, &mut h) },
            ItxStatus::NullPointer
        );
        let mut n = 0u64;
        assert_eq!(
            unsafe { itx_obstacles_rect_count(std::ptr::null(), &mut n) },
            ItxStatus::NullPointer
        );
    }

    #[test]
    fn header_is_generated() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("include")
            .join("intrinsica.h");
        let text = std::fs::read_to_string(header).expect("cbindgen header exists");
        assert!(text.contains("itx_esp"));
        assert!(text.contains("ItxStatus"));
    }
}
