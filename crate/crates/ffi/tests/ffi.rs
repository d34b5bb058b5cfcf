use std::ffi::{CStr, CString};
use std::ptr;

use esfl::optimizer::{alternate, OptimizerConfig};
use esfl::timing::{LatencyModel, UserProfile};
use esfl::workload::builtin_architecture;
use esfl_ffi::*;

fn vgg19() -> *mut EsflArchitecture {
    let name = CString::new("vgg19").unwrap();
    let mut arch = ptr::null_mut();
    assert_eq!(
        unsafe { esfl_architecture_builtin(name.as_ptr(), &mut arch) },
        EsflStatus::Ok
    );
    assert!(!arch.is_null());
    arch
}

fn last_error() -> String {
    let p = esfl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn user(samples: u64, tflops: f64, kbps: f64) -> EsflUser {
    EsflUser {
        samples,
        compute_flops: tflops * 1e12,
        uplink_bytes_per_sec: kbps * 1024.0,
        downlink_bytes_per_sec: kbps * 1024.0,
        epochs: 5,
        storage_bytes: f64::INFINITY,
        memory_bytes: -1.0,
    }
}

fn profile(id: usize, u: &EsflUser) -> UserProfile {
    UserProfile {
        id,
        samples: u.samples,
        compute: u.compute_flops,
        rates: esfl::comm::LinkRates {
            up: u.uplink_bytes_per_sec,
            down: u.downlink_bytes_per_sec,
        },
        storage_bytes: None,
        memory_bytes: None,
        epochs: u.epochs,
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(esfl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn architecture_queries_match_core() {
    let arch = vgg19();
    let core = builtin_architecture("vgg19").unwrap();
    unsafe {
        assert_eq!(esfl_architecture_num_layers(arch), 20);
        let mut total = 0.0;
        assert_eq!(esfl_architecture_total_compute(arch, &mut total), EsflStatus::Ok);
        assert_eq!(total, core.total_compute());
        let mut cw = EsflCutWorkload::default();
        assert_eq!(esfl_cut_workload(arch, 12, 32, &mut cw), EsflStatus::Ok);
        let want = core.cut_workload(12, 32).unwrap();
        assert_eq!(
            (cw.cut, cw.user_compute, cw.act_bytes, cw.model_bytes, cw.mem_bytes),
            (
                want.cut,
                want.user_compute,
                want.act_bytes,
                want.model_bytes,
                want.mem_bytes
            )
        );
        assert_eq!(esfl_cut_workload(arch, 21, 0, &mut cw), EsflStatus::InvalidArgument);
        assert!(last_error().contains("21"));
        esfl_architecture_free(arch);
        assert_eq!(esfl_architecture_num_layers(ptr::null()), 0);
    }
}

#[test]
fn error_statuses() {
    unsafe {
        let mut arch = ptr::null_mut();
        assert_eq!(
            esfl_architecture_builtin(ptr::null(), &mut arch),
            EsflStatus::NullPointer
        );
        assert!(last_error().contains("name"));
        let bogus = CString::new("resnet").unwrap();
        assert_eq!(
            esfl_architecture_builtin(bogus.as_ptr(), &mut arch),
            EsflStatus::InvalidArgument
        );
        let missing = CString::new("/nonexistent/profile.txt").unwrap();
        assert_eq!(esfl_architecture_load(missing.as_ptr(), &mut arch), EsflStatus::Io);
        assert!(arch.is_null());
        let mut r = 0.0;
        assert_eq!(
            esfl_shannon_rate(0.0, 1.0, 1.0, 1e-9, &mut r),
            EsflStatus::InvalidArgument
        );
        assert_eq!(
            esfl_shannon_rate(1e6, 1.0, 1.0, 1e-9, ptr::null_mut()),
            EsflStatus::NullPointer
        );
        esfl_architecture_free(ptr::null_mut());
        esfl_allocation_free(ptr::null_mut());
        esfl_string_free(ptr::null_mut());
    }
}

#[test]
fn load_profile_from_disk() {
    let dir = std::env::temp_dir().join(format!("esfl-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("toy.profile");
    std::fs::write(&path, "name = toy\nA 1 10 0.5\nB 2 20 0\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut arch = ptr::null_mut();
    unsafe {
        assert_eq!(esfl_architecture_load(c.as_ptr(), &mut arch), EsflStatus::Ok);
        assert_eq!(esfl_architecture_num_layers(arch), 2);
        esfl_architecture_free(arch);
    }
    std::fs::write(&path, "A 1 10\n").unwrap();
    unsafe {
        assert_eq!(esfl_architecture_load(c.as_ptr(), &mut arch), EsflStatus::Parse);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn shannon_rate_unit_snr() {
    let mut r = 0.0;
    assert_eq!(
        unsafe { esfl_shannon_rate(1e6, 1e-3, 1.0, 1e-9, &mut r) },
        EsflStatus::Ok
    );
    assert!((r - 1e6).abs() < 1e-6);
}

#[test]
fn round_time_matches_core() {
    let arch = vgg19();
    let u = user(500, 1.3, 10.0);
    let core = builtin_architecture("vgg19").unwrap();
    let want = esfl::timing::round_time(&profile(0, &u), &core, 12, 13e12, 0.5)
        .unwrap()
        .total;
    let mut t = 0.0;
    unsafe {
        assert_eq!(esfl_round_time(arch, &u, 12, 13e12, 0.5, &mut t), EsflStatus::Ok);
        assert_eq!(t, want);
        assert_eq!(esfl_round_time(arch, &u, 12, 0.0, 0.5, &mut t), EsflStatus::Infeasible);
        esfl_architecture_free(arch);
    }
}

#[test]
fn optimize_matches_core() {
    let arch = vgg19();
    let users = [user(500, 1.3, 10.0), user(500, 3.25, 25.0), user(500, 1.95, 15.0)];
    let mut alloc = ptr::null_mut();
    unsafe {
        assert_eq!(
            esfl_optimize(arch, users.as_ptr(), users.len(), 130e12, 0.0, 0, &mut alloc),
            EsflStatus::Ok
        );
        let core_users: Vec<_> = users.iter().enumerate().map(|(i, u)| profile(i, u)).collect();
        let model = LatencyModel::new(&builtin_architecture("vgg19").unwrap(), 0, 0.0);
        let want = alternate(&core_users, &model, 130e12, &OptimizerConfig::default()).unwrap();

        assert_eq!(esfl_allocation_len(alloc), 3);
        assert_eq!(esfl_allocation_objective(alloc), want.allocation.objective);
        assert_eq!(esfl_allocation_iterations(alloc), want.iterations);
        assert!(esfl_allocation_converged(alloc));
        for i in 0..3 {
            let mut cut = 0;
            let mut c = 0.0;
            assert_eq!(esfl_allocation_cut(alloc, i, &mut cut), EsflStatus::Ok);
            assert_eq!(esfl_allocation_server_compute(alloc, i, &mut c), EsflStatus::Ok);
            assert_eq!(cut, want.allocation.cuts[i]);
            assert_eq!(c, want.allocation.server_compute[i]);
        }
        let mut cut = 0;
        assert_eq!(esfl_allocation_cut(alloc, 3, &mut cut), EsflStatus::InvalidArgument);
        esfl_allocation_free(alloc);

        let mut tiny = users[0];
        tiny.storage_bytes = 1.0;
        assert_eq!(
            esfl_optimize(arch, &tiny, 1, 130e12, 0.0, 0, &mut alloc),
            EsflStatus::Infeasible
        );
        assert_eq!(
            esfl_optimize(arch, ptr::null(), 0, 130e12, 0.0, 0, &mut alloc),
            EsflStatus::NullPointer
        );
        esfl_architecture_free(arch);
    }
}

#[test]
fn simulate_json_round_trip() {
    let cfg =
        CString::new("seed = 3\nalgorithms = [\"esfl\", \"sfl\"]\n[scenario]\npreset = \"BP\"\nrounds = 2\n").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(esfl_simulate_json(cfg.as_ptr(), &mut out), EsflStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        esfl_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["config"]["seed"], 3);
        assert_eq!(v["report"]["rounds"].as_array().unwrap().len(), 2);
        let esfl = v["report"]["summary"]["esfl"]["mean_round_time"].as_f64().unwrap();
        let sfl = v["report"]["summary"]["sfl"]["mean_round_time"].as_f64().unwrap();
        assert!(esfl <= sfl);

        let bad = CString::new("seed = 3\nunknown_key = 1\n").unwrap();
        assert_eq!(esfl_simulate_json(bad.as_ptr(), &mut out), EsflStatus::Parse);
        assert!(last_error().contains("unknown"));
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/esfl.h")).unwrap();
    for symbol in [
        "ESFL_STATUS_OK = 0",
        "ESFL_STATUS_PANIC = 7",
        "typedef struct EsflArchitecture EsflArchitecture;",
        "typedef struct EsflAllocation EsflAllocation;",
        "typedef struct EsflUser",
        "typedef struct EsflCutWorkload",
        "esfl_last_error_message(void)",
        "esfl_version(void)",
        "esfl_architecture_builtin(",
        "esfl_architecture_load(",
        "esfl_architecture_free(",
        "esfl_architecture_num_layers(",
        "esfl_architecture_total_compute(",
        "esfl_cut_workload(",
        "esfl_shannon_rate(",
        "esfl_round_time(",
        "esfl_optimize(",
        "esfl_allocation_len(",
        "esfl_allocation_cut(",
        "esfl_allocation_server_compute(",
        "esfl_allocation_objective(",
        "esfl_allocation_iterations(",
        "esfl_allocation_converged(",
        "esfl_allocation_free(",
        "esfl_simulate_json(",
        "esfl_string_free(",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
    assert!(header.starts_with("#ifndef ESFL_H"));
}
