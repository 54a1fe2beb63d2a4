use latticecorr::config;
use latticecorr::ensemble::{self, ExperimentConfig};
use latticecorr::lattice::{self, ArchiveHeader, ModelKind};
use proptest::prelude::*;

fn base(n: usize, fill: f64, runs: usize, seed: u64) -> ExperimentConfig {
    let text = format!(
        "[lattice]\nn_sites = {n}\nlattice_const = 5e-7\nfill_factor = {fill:?}\n\n\
         [model]\nkind = \"random\"\n\n[run]\nruns = {runs}\nseed = {seed}\n"
    );
    config::parse_str(&text).unwrap().experiment
}

#[test]
fn reconstruction_agrees_with_truth_for_all_four_models() {
    let base = base(256, 0.10, 500, 31);
    let params = config::parse_str(&config::render(&base)).unwrap().figure6;
    for panel in ensemble::figure6_suite(&base, &params).unwrap() {
        let r = &panel.result;
        let recon = r.p2_recon.as_ref().unwrap();
        let se = r.p2_recon_stderr.as_ref().unwrap();
        let truth = r.p2_truth.as_ref().unwrap();
        for j in 0..recon.len() {
            let d = (recon[j] - truth[j]).abs();
            assert!(d <= 5.0 * se[j] + 1e-12, "{} j = {j}: |{} - {}| vs se {}", panel.kind.name(), recon[j], truth[j], se[j]);
        }
        let p1 = r.p1_truth_distribution();
        let p1_recon = latticecorr::lattice::normalized(&r.p1_recon).unwrap();
        for (a, b) in p1.iter().zip(&p1_recon) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn result_independent_of_thread_count() {
    let config = base(128, 0.2, 700, 4).with_model(
        ModelKind::Bunched { tau: 4e-6, seed_mode: lattice::SeedMode::RandomUniform },
        4,
    );
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ensemble::run_experiment(&config).unwrap())
    };
    let one = serde_json::to_string(&run(1)).unwrap();
    for threads in [2, 3, 8] {
        assert_eq!(one, serde_json::to_string(&run(threads)).unwrap());
    }
}

#[test]
fn archived_shots_replay_the_experiment() {
    let mut config = base(64, 0.25, 120, 9);
    config.outputs.raw_profiles = true;
    let result = ensemble::run_experiment(&config).unwrap();
    let shots = result.shots.as_ref().unwrap();
    let mut buf = Vec::new();
    lattice::write_archive(&mut buf, &ArchiveHeader::from_config(&config.lattice), &[], shots).unwrap();
    let (header, back) = lattice::read_archive(buf.as_slice()).unwrap();
    assert_eq!(header.n_sites, 64);
    assert_eq!(&back, shots);
    for (run, shot) in back.iter().enumerate() {
        assert_eq!(shot, &ensemble::shot_for_run(&config, run).unwrap());
    }
    let truth = lattice::ProbabilityVectors::from_shots(&back).unwrap();
    for (a, b) in truth.p2.iter().zip(result.p2_truth.as_ref().unwrap()) {
        assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mean_g2_at_zero_is_shot_independent(n in 8usize..80, fill in 0.05f64..0.9, seed in any::<u32>()) {
        let config = base(n, fill, 20, seed as u64);
        let r = config.atom_count();
        prop_assume!(r >= 2);
        let result = ensemble::run_experiment(&config).unwrap();
        let g2 = result.mean_g2.unwrap();
        let expected = 2.0 * (r as f64 - 1.0) / r as f64;
        prop_assert!((g2[n] - expected).abs() < 1e-10);
    }

    #[test]
    fn reruns_are_bit_identical(seed in any::<u64>(), runs in 1usize..150) {
        let config = base(32, 0.3, runs, seed >> 1);
        let a = ensemble::run_experiment(&config).unwrap();
        let b = ensemble::run_experiment(&config).unwrap();
        prop_assert_eq!(a, b);
    }
}
