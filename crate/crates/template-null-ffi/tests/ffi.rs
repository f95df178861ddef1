//! Exercises the C ABI through raw calls, end to end against real
//! artifacts produced by the core library.

use std::ffi::{CStr, CString};
use std::path::Path;

use template_null::config::{PriorConfig, RunConfig};
use template_null::data::DesignSpec;
use template_null::{bayes, seed, simlab, template};

use template_null_ffi::*;

fn fixture(dir: &Path) -> (CString, CString) {
    let truth = simlab::reference_truth();
    let train_design = DesignSpec::from_grams(&[250.0, 400.0, 550.0, 700.0], 4).unwrap();
    let mut rng = seed::stream(2026, "ffi-train", 0);
    let cohort = simlab::simulate_cohort(&truth, &train_design, 6, &mut rng).unwrap();
    let run = RunConfig {
        seed: 9,
        chains: 2,
        draws_per_chain: 600,
        burn_in: 200,
        template_draws: 1500,
        ..RunConfig::default()
    };
    let fit = bayes::fit_training(&cohort, &PriorConfig::default(), &run).unwrap();
    let test_design = DesignSpec::from_grams(&[250.0, 550.0], 5).unwrap();
    let t = template::build_template(&fit, &test_design, run.template_draws, 9).unwrap();
    let template_path = dir.join("template.json");
    t.save_json(&template_path).unwrap();

    let mut rng = seed::stream(2026, "ffi-patient", 0);
    let patient = simlab::simulate_subject(&truth, &test_design, Some(0.2), &mut rng, "pt1")
        .unwrap();
    let csv_path = dir.join("patient.csv");
    let mut buf = Vec::new();
    patient.write_csv(&mut buf).unwrap();
    std::fs::write(&csv_path, buf).unwrap();

    (
        CString::new(template_path.to_str().unwrap()).unwrap(),
        CString::new(csv_path.to_str().unwrap()).unwrap(),
    )
}

#[test]
fn load_assess_and_free() {
    let dir = tempfile::tempdir().unwrap();
    let (template_path, csv_path) = fixture(dir.path());

    unsafe {
        let mut t: *mut TnTemplate = std::ptr::null_mut();
        assert_eq!(tn_template_load(template_path.as_ptr(), &mut t), TnStatus::TnOk);
        assert_eq!(tn_template_len(t), 1500);
        let benchmark = tn_template_benchmark_slope(t);
        assert!((0.5..2.5).contains(&benchmark), "benchmark {benchmark}");

        let mut c = f64::NAN;
        assert_eq!(tn_template_critical_value(t, 0.05, &mut c), TnStatus::TnOk);
        assert!(c < benchmark);
        assert_eq!(
            tn_template_critical_value(t, 1.5, &mut c),
            TnStatus::TnErrConfig
        );
        let msg = CStr::from_ptr(tn_last_error_message()).to_str().unwrap();
        assert!(msg.contains("level"), "{msg}");

        let mut d: *mut TnDataset = std::ptr::null_mut();
        assert_eq!(tn_dataset_load_csv(csv_path.as_ptr(), &mut d), TnStatus::TnOk);
        assert_eq!(tn_dataset_n_subjects(d), 1);

        let mut buf = [0i8; 16];
        assert_eq!(
            tn_dataset_subject_id(d, 0, buf.as_mut_ptr().cast(), buf.len()),
            TnStatus::TnOk
        );
        let sid = CStr::from_ptr(buf.as_ptr().cast()).to_str().unwrap();
        assert_eq!(sid, "pt1");
        assert_eq!(
            tn_dataset_subject_id(d, 5, buf.as_mut_ptr().cast(), buf.len()),
            TnStatus::TnErrValidation
        );

        let name = CString::new("pt1").unwrap();
        let mut slope = f64::NAN;
        assert_eq!(tn_naive_slope(d, name.as_ptr(), &mut slope), TnStatus::TnOk);
        assert!(slope.is_finite());

        let mut p = f64::NAN;
        assert_eq!(tn_template_p_value(t, slope, &mut p), TnStatus::TnOk);
        assert!((0.0..=1.0).contains(&p));

        let mut report = TnAssessment {
            scaling_factor: 0.0,
            delta_hat: 0.0,
            p_value: 0.0,
            post_hoc_power: 0.0,
            ci_lower: 0.0,
            ci_upper: 0.0,
            decision_abnormal: -1,
            ci_defined: -1,
        };
        assert_eq!(
            tn_assess(t, d, name.as_ptr(), 0.10, 42, &mut report),
            TnStatus::TnOk
        );
        assert_eq!(report.scaling_factor, slope);
        assert_eq!(report.p_value, p);
        assert_eq!(report.decision_abnormal, i32::from(p < 0.10));
        assert_eq!(report.ci_defined, 1);
        assert!(report.ci_lower <= report.ci_upper);
        assert!((report.scaling_factor + report.delta_hat - benchmark).abs() < 1e-12);

        // Deterministic given the same seed.
        let mut again = report;
        assert_eq!(
            tn_assess(t, d, name.as_ptr(), 0.10, 42, &mut again),
            TnStatus::TnOk
        );
        assert_eq!(again.ci_lower, report.ci_lower);

        let ghost = CString::new("nobody").unwrap();
        assert_eq!(
            tn_assess(t, d, ghost.as_ptr(), 0.10, 42, &mut report),
            TnStatus::TnErrUnknownSubject
        );

        tn_dataset_free(d);
        tn_template_free(t);
        tn_template_free(std::ptr::null_mut());
    }
}

#[test]
fn null_and_missing_inputs_fail_cleanly() {
    unsafe {
        let mut t: *mut TnTemplate = std::ptr::null_mut();
        assert_eq!(
            tn_template_load(std::ptr::null(), &mut t),
            TnStatus::TnErrNullArgument
        );
        let missing = CString::new("/nonexistent/template.json").unwrap();
        assert_eq!(
            tn_template_load(missing.as_ptr(), &mut t),
            TnStatus::TnErrIo
        );
        let mut d: *mut TnDataset = std::ptr::null_mut();
        let missing_csv = CString::new("/nonexistent/data.csv").unwrap();
        assert_eq!(
            tn_dataset_load_csv(missing_csv.as_ptr(), &mut d),
            TnStatus::TnErrIo
        );
        assert_eq!(tn_dataset_n_subjects(std::ptr::null()), 0);
        assert_eq!(tn_template_len(std::ptr::null()), 0);
        assert!(tn_template_benchmark_slope(std::ptr::null()).is_nan());
    }
}

#[test]
fn generated_header_is_in_sync() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/template_null.h");
    let text = std::fs::read_to_string(header).expect("header generated by build.rs");
    for symbol in [
        "tn_template_load",
        "tn_template_free",
        "tn_template_critical_value",
        "tn_template_p_value",
        "tn_dataset_load_csv",
        "tn_dataset_free",
        "tn_dataset_subject_id",
        "tn_naive_slope",
        "tn_assess",
        "tn_last_error_message",
        "TN_ERR_DESIGN_MISMATCH",
        "typedef struct TnTemplate TnTemplate",
    ] {
        assert!(text.contains(symbol), "header misses {symbol}");
    }
}
