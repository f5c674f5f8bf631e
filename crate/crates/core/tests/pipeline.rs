mod common;

use romimaging::config::{ExperimentConfig, ImagingConfig, Method, OutputConfig, ScenarioConfig};
use romimaging::io::{self, Manifest, PARTIAL_MARKER};
use romimaging::pipeline::{experiment_hash, run_pipeline, sweep_member, SweepKind};
use romimaging::Error;

fn config(dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        scenario: ScenarioConfig { spec: Some(common::small_spec()), ..Default::default() },
        imaging: ImagingConfig {
            methods: vec![Method::Norm, Method::Ideal, Method::Bp, Method::Rtm, Method::Ps],
            ps_window: Some([2.5, 3.5, 1.5, 2.0, 0.25]),
            ..Default::default()
        },
        output: OutputConfig { dir: dir.to_path_buf(), csv: true },
        ..Default::default()
    }
}

#[test]
fn pipeline_writes_every_artifact_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let cfg = config(&dir);
    let first = run_pipeline(&cfg).unwrap();
    assert!(!dir.join(PARTIAL_MARKER).exists());
    let names: Vec<String> = first.artifacts.iter().map(|a| a.path.display().to_string()).collect();
    for want in ["data.bin", "data_ref.bin", "R.bin", "P.bin", "basis.bin", "image_norm.bin", "image_ideal.bin", "image_bp.bin", "image_rtm.bin", "image_ps.bin", "image_norm_rd.bin", "image_rtm_rd.csv"] {
        assert!(names.iter().any(|n| n == want), "missing {want} in {names:?}");
    }
    let hash = experiment_hash(&cfg).unwrap();
    assert_eq!(first.config_hash, hash);
    for a in first.artifacts.iter().filter(|a| a.path.extension().is_some_and(|e| e == "bin")) {
        let h = io::read_header(&dir.join(&a.path)).unwrap();
        assert_eq!(h.config_hash, hash, "{}", a.path.display());
    }
    assert_eq!(Manifest::read(&dir.join("manifest.json")).unwrap(), first);

    std::fs::remove_dir_all(&dir).unwrap();
    let second = run_pipeline(&cfg).unwrap();
    assert_eq!(first, second);
}

#[test]
fn failing_stage_leaves_a_partial_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path());
    cfg.imaging.methods = vec![Method::Norm, Method::Ps];
    cfg.imaging.ps_window = None;
    cfg.imaging.ps_max_pixels = 4;
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("image/ps"), "{err}");
    assert!(tmp.path().join(PARTIAL_MARKER).exists());
    assert!(tmp.path().join("config.toml").exists());
}

#[test]
fn noisy_runs_depend_on_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config(tmp.path());
    cfg.imaging.methods = vec![Method::Norm];
    cfg.imaging.sigma = None;
    cfg.noise.fraction = 0.1;
    cfg.noise.seed = 1;
    let a = run_pipeline(&cfg).unwrap();
    let ref_a = io::read_data(&tmp.path().join("data_ref.bin")).unwrap().1;
    cfg.noise.seed = 2;
    let b = run_pipeline(&cfg).unwrap();
    let ref_b = io::read_data(&tmp.path().join("data_ref.bin")).unwrap().1;
    let data = |m: &Manifest| m.artifacts.iter().find(|x| x.path.to_str() == Some("data.bin")).unwrap().sha256.clone();
    assert_ne!(data(&a), data(&b));
    assert_eq!(ref_a.mats, ref_b.mats);
    assert_ne!(a.config_hash, b.config_hash);
}

#[test]
fn sweep_members_rescale_the_acquisition() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let t = sweep_member(&cfg, SweepKind::Tau, 2.0).unwrap();
    let spec = t.scenario_spec().unwrap();
    assert!((spec.tau_factor - 0.8).abs() < 1e-15);
    assert_eq!(spec.n, 5);
    assert_eq!(t.output.dir, tmp.path().join("tau_2"));
    let a = sweep_member(&cfg, SweepKind::Aperture, 0.6).unwrap();
    assert_eq!(a.scenario_spec().unwrap().kept_sensors().len(), 4);
    assert!(sweep_member(&cfg, SweepKind::Aperture, 1.5).is_err());
    assert_eq!(SweepKind::Tau.default_values(), vec![3.0, 1.8, 1.0, 0.8]);
}

#[test]
fn output_directory_does_not_change_the_hash() {
    let a = config(std::path::Path::new("x"));
    let b = config(std::path::Path::new("y"));
    assert_eq!(experiment_hash(&a).unwrap(), experiment_hash(&b).unwrap());
}
