use std::ffi::{c_char, CStr};
use std::ptr;

use pathsens_ffi::*;

fn model(id: &str) -> *mut PsModel {
    let name = format!("{id}\0");
    let mut m = ptr::null_mut();
    let status = unsafe { ps_model_new(name.as_ptr().cast(), &mut m) };
    assert_eq!(status, PsStatus::Ok);
    m
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { ps_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_str()
        .unwrap()
        .to_owned();
    assert_eq!(n, s.len());
    s
}

fn config(steps: usize, order: u8) -> PsSimConfig {
    PsSimConfig {
        theta: 0.1,
        s0: 1.0,
        ds0: 0.0,
        dds0: 0.0,
        t_final: 1.0,
        steps,
        order,
    }
}

#[test]
fn model_lookup_and_partials() {
    let m = model("trig");
    unsafe {
        assert_eq!(CStr::from_ptr(ps_model_id(m)).to_str().unwrap(), "trig");
        let mut v = 0.0;
        assert_eq!(
            ps_model_eval_partial(m, PsCoefficient::Drift, 0.3, 0.2, 0, 0, &mut v),
            PsStatus::Ok
        );
        assert_eq!(v, 0.5f64.sin());
        assert_eq!(
            ps_model_eval_partial(m, PsCoefficient::Diffusion, 0.0, 0.0, 0, 1, &mut v),
            PsStatus::Ok
        );
        assert_eq!(v, 0.0);
        assert_eq!(
            ps_model_eval_partial(m, PsCoefficient::Drift, 0.0, 0.0, 2, 1, &mut v),
            PsStatus::UnsupportedOrder
        );
        let mut b = PsBounds::default();
        assert_eq!(ps_model_bounds(m, &mut b), PsStatus::Ok);
        assert!(b.has_l_a && b.has_l_b);
        assert_eq!((b.l_a, b.l_b), (1.0, 0.25));
        ps_model_free(m);

        let g = model("gbm");
        assert_eq!(ps_model_bounds(g, &mut b), PsStatus::Ok);
        assert!(!b.has_l_a && !b.has_l_b);
        ps_model_free(g);

        let mut out = ptr::null_mut();
        assert_eq!(
            ps_model_new(c"heston".as_ptr(), &mut out),
            PsStatus::UnknownModel
        );
        assert!(out.is_null());
        assert!(last_error().contains("heston"));
        assert_eq!(ps_model_new(ptr::null(), &mut out), PsStatus::NullPointer);
    }
}

#[test]
fn simulate_matches_library() {
    let m = model("trig");
    let cfg = config(32, 2);
    let mut path = ptr::null_mut();
    unsafe {
        assert_eq!(ps_simulate_path(m, &cfg, 9, 3, &mut path), PsStatus::Ok);
        assert_eq!(ps_path_len(path), 33);
        let lib_cfg = pathsens::SimConfig::new(0.1, 1.0, 1.0, 32);
        let incs =
            pathsens::sample_increments(pathsens::SeedSpec::new(9, 3), 32, lib_cfg.h()).unwrap();
        let expect = pathsens::simulate_path(&pathsens::Trig, &lib_cfg, &incs).unwrap();
        for (n, st) in expect.states.iter().enumerate() {
            let mut got = PsPathState::default();
            assert_eq!(ps_path_get(path, n, &mut got), PsStatus::Ok);
            assert_eq!((got.s, got.ds, got.dds), (st.s, st.ds, st.dds));
        }
        let mut sup = PsPathState::default();
        assert_eq!(ps_path_sup_abs(path, &mut sup), PsStatus::Ok);
        assert_eq!(sup.ds, expect.sup_abs.ds);
        let mut st = PsPathState::default();
        assert_eq!(ps_path_get(path, 33, &mut st), PsStatus::OutOfRange);
        ps_path_free(path);
        ps_model_free(m);
    }
}

#[test]
fn simulate_errors() {
    let m = model("gbm");
    let mut path = ptr::null_mut();
    unsafe {
        let mut cfg = config(4, 3);
        assert_eq!(
            ps_simulate_path(m, &cfg, 0, 0, &mut path),
            PsStatus::InvalidArgument
        );
        cfg.order = 0;
        cfg.theta = 1e200;
        assert_eq!(
            ps_simulate_path(m, &cfg, 0, 0, &mut path),
            PsStatus::Divergence
        );
        assert!(last_error().contains("divergence"));
        let incs = [0.0; 3];
        assert_eq!(
            ps_simulate_path_increments(m, &config(4, 2), incs.as_ptr(), 3, &mut path),
            PsStatus::InvalidArgument
        );
        assert_eq!(
            ps_simulate_path(ptr::null(), &cfg, 0, 0, &mut path),
            PsStatus::NullPointer
        );
        assert_eq!(ps_path_len(ptr::null()), 0);
        ps_path_free(ptr::null_mut());
        ps_model_free(m);
    }
}

#[test]
fn strong_errors_and_rate() {
    let additive = model("additive");
    let trig = model("trig");
    let mc = PsMcSettings {
        n_paths: 400,
        base_seed: 5,
        workers: 2,
    };
    let cfg = config(16, 1);
    let mut recs = Vec::new();
    unsafe {
        for level in 0..4 {
            let mut r = std::mem::MaybeUninit::<PsLevelRecord>::uninit();
            assert_eq!(
                ps_strong_error(
                    additive,
                    &cfg,
                    PsQuantity::Tangent1,
                    2,
                    level,
                    &mc,
                    r.as_mut_ptr()
                ),
                PsStatus::Ok
            );
            assert_eq!(r.assume_init().estimate, 0.0);
            assert_eq!(
                ps_strong_error(
                    trig,
                    &cfg,
                    PsQuantity::Tangent1,
                    2,
                    level,
                    &mc,
                    r.as_mut_ptr()
                ),
                PsStatus::Ok
            );
            let r = r.assume_init();
            assert_eq!(
                (r.level, r.p, r.quantity, r.n_paths),
                (level, 2, PsQuantity::Tangent1, 400)
            );
            recs.push(r);
        }
        let mut fit = PsRateFit::default();
        assert_eq!(
            ps_fit_rate(recs.as_ptr(), recs.len(), &mut fit),
            PsStatus::Ok
        );
        assert_eq!(fit.n_used, 4);
        let lib_recs: Vec<_> = (0..4)
            .map(|l| {
                pathsens::analysis::estimate_strong_error(
                    &pathsens::Trig,
                    &pathsens::SimConfig::new(0.1, 1.0, 1.0, 16),
                    2,
                    &pathsens::analysis::McSettings::new(400, 5),
                    l,
                    pathsens::analysis::Quantity::Tangent1,
                )
                .unwrap()
            })
            .collect();
        for (a, b) in recs.iter().zip(&lib_recs) {
            assert_eq!(
                (a.h, a.estimate, a.std_error),
                (b.h, b.estimate, b.std_error)
            );
        }
        let lib_fit = pathsens::analysis::fit_rate(&lib_recs).unwrap();
        assert_eq!(
            (fit.slope, fit.slope_ci_halfwidth),
            (lib_fit.slope, lib_fit.slope_ci_halfwidth)
        );
        assert_eq!(
            ps_fit_rate(recs.as_ptr(), 2, &mut fit),
            PsStatus::InsufficientData
        );
        let mut r = std::mem::MaybeUninit::<PsLevelRecord>::uninit();
        assert_eq!(
            ps_strong_error(trig, &cfg, PsQuantity::Tangent1, 1, 0, &mc, r.as_mut_ptr()),
            PsStatus::InvalidArgument
        );
        ps_model_free(additive);
        ps_model_free(trig);
    }
}

#[test]
fn lemma_through_ffi() {
    let sizes = [2usize, 1];
    let atoms = [
        PsAtom {
            prob: 0.5,
            u: 1.0,
            v: 0.0,
        },
        PsAtom {
            prob: 0.5,
            u: -1.0,
            v: 1.0,
        },
        PsAtom {
            prob: 1.0,
            u: 2.0,
            v: 1.0,
        },
    ];
    let mut out = PsLemmaCheck::default();
    unsafe {
        assert_eq!(
            ps_lemma_check(2, 2, sizes.as_ptr(), atoms.as_ptr(), &mut out),
            PsStatus::Ok
        );
        // outcomes: (2 - 0)^2 and (-2 - 1)^2 with equal weight
        assert_eq!(out.lhs, 6.5);
        assert!(out.holds && out.lhs <= out.rhs);
        let bad = [PsAtom {
            prob: 0.3,
            u: 1.0,
            v: 1.0,
        }];
        assert_eq!(
            ps_lemma_check(2, 1, [1usize].as_ptr(), bad.as_ptr(), &mut out),
            PsStatus::InvalidArgument
        );
        assert_eq!(
            ps_lemma_check(2, 1, ptr::null(), atoms.as_ptr(), &mut out),
            PsStatus::NullPointer
        );
    }
}

#[test]
fn version_and_error_reset() {
    let v = unsafe { CStr::from_ptr(ps_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    let m = model("trig");
    unsafe {
        let mut b = PsBounds::default();
        assert_eq!(ps_model_bounds(ptr::null(), &mut b), PsStatus::NullPointer);
        assert!(!last_error().is_empty());
        assert_eq!(ps_model_bounds(m, &mut b), PsStatus::Ok);
        assert_eq!(last_error(), "");
        assert_eq!(ps_last_error_message(ptr::null_mut(), 0), 0);
        ps_model_free(m);
    }
}
