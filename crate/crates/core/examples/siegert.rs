//! Per-shot and ensemble-averaged comparison of g2 with 1 + |g1|^2 for
//! random filling.

use latticecorr::correlations::{self, FieldState};
use latticecorr::ensemble::{self, shot_for_run};
use latticecorr::lattice::ModelKind;
use latticecorr::config;

fn main() -> latticecorr::Result<()> {
    let text = "[lattice]\nn_sites = 128\nlattice_const = 5e-7\nfill_factor = 0.1\n\n\
                [model]\nkind = \"random\"\n\n[run]\nruns = 4000\nseed = 17\n";
    let config = config::parse_str(text)?.experiment.with_model(ModelKind::Random, 17);
    let r = config.atom_count();

    let mut worst = 0.0f64;
    for run in 0..20 {
        let shot = shot_for_run(&config, run)?;
        let profile = correlations::profile_of_state(&FieldState::from_occupancy(&shot, config.lattice.statistics))?;
        let res = correlations::siegert_check(&profile.g1_fine, profile.g2.as_ref().unwrap())?;
        for v in &res.residual {
            worst = worst.max((v - correlations::boson_siegert_offset(r)).abs());
        }
    }
    println!("single shots: g2 - 1 - |g1|^2 = -2/R = {:.4} to within {worst:.1e}", correlations::boson_siegert_offset(r));

    let result = ensemble::run_experiment(&config)?;
    let res = correlations::siegert_check(&result.mean_g1, result.mean_g2.as_ref().unwrap())?;
    let n = config.lattice.n_sites;
    println!("ensemble of {} shots: max |<g2> - 1 - |<g1>|^2| = {:.4}", config.runs, res.max_abs);
    for l in [0, 1, 2, 5, 20] {
        println!("  l = {l:>2}: residual {:+.4}", res.residual[n + l]);
    }
    Ok(())
}
