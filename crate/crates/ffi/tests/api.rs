use std::ffi::{CStr, CString};
use std::ptr;

use dcfsim_ffi::*;

fn last_error() -> String {
    let p = dcfsim_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn preset(name: &str) -> *mut DcfsimScenario {
    let name = CString::new(name).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dcfsim_scenario_preset(name.as_ptr(), &mut s) }, DcfsimStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn run_preset_and_read_flows() {
    unsafe {
        let s = preset("fig8_capture");
        assert_eq!(dcfsim_scenario_set_duration(s, 2.0), DcfsimStatus::Ok);
        assert_eq!(dcfsim_scenario_set_eifs(s, false), DcfsimStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(dcfsim_run(s, &mut r), DcfsimStatus::Ok);
        assert_eq!(dcfsim_result_flow_count(r), 2);
        let total = dcfsim_result_total_throughput(r);
        assert!(total > 4e6);
        let mut sum = 0.0;
        for i in 0..2 {
            let mut f = DcfsimFlowStats::default();
            assert_eq!(dcfsim_result_flow(r, i, &mut f), DcfsimStatus::Ok);
            assert_eq!(f.dst, 2);
            assert_eq!(f.src, i as u32);
            sum += f.throughput_bps;
        }
        assert!((sum - total).abs() < 1e-6 * total);
        let mut f = DcfsimFlowStats::default();
        assert_eq!(dcfsim_result_flow(r, 2, &mut f), DcfsimStatus::OutOfRange);
        assert!(last_error().contains("out of range"));
        dcfsim_result_free(r);
        dcfsim_scenario_free(s);
    }
}

#[test]
fn same_seed_same_result() {
    unsafe {
        let run = |seed| {
            let s = preset("fig8_capture");
            dcfsim_scenario_set_duration(s, 1.5);
            dcfsim_scenario_set_fading(s, true);
            dcfsim_scenario_set_seed(s, seed);
            let mut r = ptr::null_mut();
            assert_eq!(dcfsim_run(s, &mut r), DcfsimStatus::Ok);
            let t = dcfsim_result_total_throughput(r);
            dcfsim_result_free(r);
            dcfsim_scenario_free(s);
            t
        };
        assert_eq!(run(5), run(5));
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        let bad = CString::new("duration = \"long\"\n").unwrap();
        assert_eq!(dcfsim_scenario_from_toml(bad.as_ptr(), &mut s), DcfsimStatus::Parse);
        assert!(s.is_null());
        assert!(last_error().contains("line 1"));

        let unknown = CString::new("nope").unwrap();
        assert_eq!(dcfsim_scenario_preset(unknown.as_ptr(), &mut s), DcfsimStatus::InvalidInput);
        assert_eq!(dcfsim_scenario_preset(ptr::null(), &mut s), DcfsimStatus::NullPointer);
        assert_eq!(dcfsim_run(ptr::null(), &mut ptr::null_mut()), DcfsimStatus::NullPointer);

        // Rejected edits leave the scenario unchanged.
        let s = preset("baseline_single_flow");
        assert_eq!(dcfsim_scenario_set_duration(s, -1.0), DcfsimStatus::Config);
        let mut text = ptr::null_mut();
        assert_eq!(dcfsim_scenario_to_toml(s, &mut text), DcfsimStatus::Ok);
        let toml = CStr::from_ptr(text).to_str().unwrap().to_owned();
        dcfsim_string_free(text);
        assert!(toml.contains("duration = 10.0"), "{toml}");

        let mut back = ptr::null_mut();
        let c = CString::new(toml).unwrap();
        assert_eq!(dcfsim_scenario_from_toml(c.as_ptr(), &mut back), DcfsimStatus::Ok);
        dcfsim_scenario_free(back);
        dcfsim_scenario_free(s);
        dcfsim_scenario_free(ptr::null_mut());
        dcfsim_result_free(ptr::null_mut());
        assert!(dcfsim_result_total_throughput(ptr::null()).is_nan());
    }
}

#[test]
fn radio_helpers() {
    unsafe {
        let mut d = 0.0;
        assert_eq!(dcfsim_get_dist(dcfsim_default_rx_thresh(), &mut d), DcfsimStatus::Ok);
        assert!((d - 250.0).abs() < 1e-6);
        assert_eq!(dcfsim_get_dist(dcfsim_default_cs_thresh(), &mut d), DcfsimStatus::Ok);
        assert!((d - 550.0).abs() < 1e-6);
        let mut pr = 0.0;
        assert_eq!(dcfsim_two_ray_pr(250.0, &mut pr), DcfsimStatus::Ok);
        assert!((pr / dcfsim_default_rx_thresh() - 1.0).abs() < 1e-9);
        assert_eq!(dcfsim_two_ray_pr(-1.0, &mut pr), DcfsimStatus::InvalidInput);
        let v = CStr::from_ptr(dcfsim_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}
