use std::ffi::CStr;
use std::ptr;

use hbundle_ffi::*;

fn golden_iet() -> *mut HbIet {
    let a = (5f64.sqrt() - 1.0) / 2.0;
    let mut iet = ptr::null_mut();
    let status = unsafe { hb_iet_new([2, 1].as_ptr(), [1.0 - a, a].as_ptr(), 2, &mut iet) };
    assert_eq!(status, HbStatus::Ok);
    iet
}

fn last_error() -> String {
    let p = hb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn exchange_round_trip() {
    let iet = golden_iet();
    unsafe {
        let mut d = 0;
        assert_eq!(hb_iet_dimension(iet, &mut d), HbStatus::Ok);
        assert_eq!(d, 2);
        let mut y = 0.0;
        assert_eq!(hb_iet_apply(iet, 0.1, &mut y), HbStatus::Ok);
        assert!((y - (0.1 + (5f64.sqrt() - 1.0) / 2.0)).abs() < 1e-15);
        let mut pts = [0.0; 5];
        let mut reliable = false;
        assert_eq!(hb_iet_orbit(iet, 0.1, 5, pts.as_mut_ptr(), &mut reliable), HbStatus::Ok);
        assert!(reliable && pts[0] == y);
        hb_iet_free(iet);
    }
}

#[test]
fn bad_input_reports_a_message() {
    let mut iet = ptr::null_mut();
    let status = unsafe { hb_iet_new([1, 2].as_ptr(), [0.5, 0.5].as_ptr(), 2, &mut iet) };
    assert_eq!(status, HbStatus::InvalidArgument);
    assert!(iet.is_null());
    assert!(!last_error().is_empty());
    let status = unsafe { hb_iet_new(ptr::null(), [0.5, 0.5].as_ptr(), 2, &mut iet) };
    assert_eq!(status, HbStatus::NullPointer);
    assert!(last_error().contains("monodromy"));

    let golden = golden_iet();
    let mut skew = ptr::null_mut();
    let status = unsafe { hb_skew_new(golden, [1.5, 1.5].as_ptr(), [0.0, 0.0].as_ptr(), 2, &mut skew) };
    assert_eq!(status, HbStatus::InvalidArgument);
    assert!(last_error().contains("integer"));
    let mut y = 0.0;
    assert_eq!(unsafe { hb_iet_apply(golden, 2.0, &mut y) }, HbStatus::InvalidArgument);
    unsafe {
        hb_iet_free(golden);
        hb_iet_free(ptr::null_mut());
        hb_skew_free(ptr::null_mut());
    }
}

#[test]
fn skew_product_calls() {
    let iet = golden_iet();
    let mut skew = ptr::null_mut();
    unsafe {
        assert_eq!(hb_skew_new(iet, [1.0, 1.0].as_ptr(), [0.0, 0.0].as_ptr(), 2, &mut skew), HbStatus::Ok);
        hb_iet_free(iet);

        let (mut x, mut r) = (0.0, 0.0);
        assert_eq!(hb_skew_apply(skew, 0.1, 0.2, &mut x, &mut r), HbStatus::Ok);
        assert!((r - 0.3).abs() < 1e-15);

        let n = 64;
        let (mut re, mut im) = (vec![0.0; n + 1], vec![0.0; n + 1]);
        assert_eq!(hb_skew_correlation(skew, 1, n, re.as_mut_ptr(), im.as_mut_ptr()), HbStatus::Ok);
        let a = (5f64.sqrt() - 1.0) / 2.0;
        let c1 = re[1].hypot(im[1]);
        assert!((c1 - (1.0 - (std::f64::consts::TAU * a).cos()) / std::f64::consts::PI).abs() < 1e-12);
        assert!((re[0] - 1.0).abs() < 1e-15);

        let mut shift = 0.0;
        assert_eq!(hb_skew_commutator_shift(skew, 0.1, &mut shift), HbStatus::Ok);
        assert!((shift - 0.01).abs() < 1e-12);

        let (mut mre, mut mim) = (0.0, 0.0);
        assert_eq!(hb_skew_birkhoff_mode(skew, 1, 0.1234, 0.0, 100_000, &mut mre, &mut mim), HbStatus::Ok);
        assert!(mre.hypot(mim) < 0.05);
        hb_skew_free(skew);
    }
}

#[test]
fn admissibility_of_the_three_interval_example() {
    let mut iet = ptr::null_mut();
    unsafe {
        assert_eq!(hb_iet_new([3, 1, 2].as_ptr(), [0.4, 0.3, 0.3].as_ptr(), 3, &mut iet), HbStatus::Ok);
        let (mut ok, mut worst) = (false, 1.0);
        let h = [2.0, 2.0, 2.0];
        assert_eq!(hb_iet_is_admissible(iet, h.as_ptr(), [0.7, 0.4, 0.0].as_ptr(), 3, &mut ok, &mut worst), HbStatus::Ok);
        assert!(ok && worst < 1e-12);
        assert_eq!(hb_iet_is_admissible(iet, h.as_ptr(), [0.7, 0.5, 0.0].as_ptr(), 3, &mut ok, &mut worst), HbStatus::Ok);
        assert!(!ok && (worst - 0.1).abs() < 1e-12);
        hb_iet_free(iet);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(hb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
