use sift_core::bench::{run_benchmark, ExperimentConfig, GroundTruth, Method, NoiseLevel, Preset};
use sift_core::io::{read_signal, read_tfr_binary, write_signal_binary, write_signal_csv, write_tfr_binary};
use sift_core::signal::relative_error_l2;
use sift_core::sift::{sift_decompose, SIFTConfig};
use sift_core::sst::{synchrosqueeze, SSTConfig, WindowSpec};
use sift_core::RealSignal;

fn short_noisy(workers: usize) -> ExperimentConfig {
    ExperimentConfig {
        duration: 10.0,
        noise: Some(NoiseLevel::TargetSnrDb(5.0)),
        realizations: 3,
        seed: 11,
        methods: vec![Method::Bpf, Method::Sst],
        workers,
        ..ExperimentConfig::preset(Preset::Example1)
    }
}

#[test]
fn report_does_not_depend_on_worker_count() {
    let one = run_benchmark(&short_noisy(1)).unwrap();
    let three = run_benchmark(&short_noisy(3)).unwrap();
    assert!(one.same_results(&three));
    assert_eq!(one.realizations.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![11, 12, 13]);
}

#[test]
fn measured_snr_tracks_the_target() {
    let config = ExperimentConfig { realizations: 6, ..short_noisy(1) };
    let report = run_benchmark(&config).unwrap();
    let snr = report.snr.unwrap();
    assert!((snr.mean - 5.0).abs() < 0.3, "{}", snr.mean);
}

#[test]
fn blind_sift_finds_both_example1_components() {
    let truth = GroundTruth::new(&ExperimentConfig::preset(Preset::Example1)).unwrap();
    let result = sift_decompose(&truth.clean, &SIFTConfig::default()).unwrap();
    assert!(result.imts.len() >= 2);
    for (imt, component) in result.imts.iter().zip(&truth.components) {
        assert!(relative_error_l2(imt, component, 1.0).unwrap() < 0.5);
    }
    let rec = result.reconstruct().try_sub(&truth.clean).unwrap();
    assert!(rec.norm_l2() / truth.clean.norm_l2() < 1e-10);
}

#[test]
fn signals_and_grids_survive_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let truth = GroundTruth::new(&ExperimentConfig::preset(Preset::Example3)).unwrap();
    for name in ["x.csv", "x.bin"] {
        let path = dir.path().join(name);
        if name.ends_with("csv") {
            write_signal_csv(&truth.clean, &path).unwrap();
        } else {
            write_signal_binary(&truth.clean, &path).unwrap();
        }
        let back: RealSignal = read_signal(&path).unwrap();
        assert_eq!(back.samples(), truth.clean.samples(), "{name}");
        assert_eq!(back.sample_rate(), truth.clean.sample_rate());
    }
    let sst = synchrosqueeze(&truth.clean, &WindowSpec::default(), &SSTConfig::default()).unwrap();
    let path = dir.path().join("sst.bin");
    write_tfr_binary(&sst, &path).unwrap();
    assert_eq!(read_tfr_binary(&path).unwrap(), sst);
}

#[test]
fn edge_seconds_do_not_change_errors() {
    let truth = GroundTruth::new(&ExperimentConfig::preset(Preset::Example1)).unwrap();
    let reference = &truth.components[0];
    let estimate = reference.map(|x| 0.9 * x);
    let len = estimate.len();
    let rate = estimate.sample_rate() as usize;
    let mut edited = estimate.samples().to_vec();
    for j in (0..rate).chain(len - rate..len) {
        edited[j] = 1e3 * (j as f64).sin();
    }
    let edited = estimate.with_samples(edited);
    assert_eq!(
        relative_error_l2(&estimate, reference, 1.0).unwrap(),
        relative_error_l2(&edited, reference, 1.0).unwrap()
    );
}
