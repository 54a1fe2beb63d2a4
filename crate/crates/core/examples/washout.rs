//! Bunched filling with a fixed and a shot-to-shot random cluster center:
//! the single-particle reconstruction loses the cluster, the pair
//! reconstruction keeps it.
//!
//! Run from the workspace root:
//! `cargo run --release --example washout -- configs/fig5_fixed.toml configs/fig5_random.toml`

use latticecorr::{config, ensemble};

fn main() -> latticecorr::Result<()> {
    let mut args = std::env::args().skip(1);
    let fixed_path = args.next().unwrap_or_else(|| "configs/fig5_fixed.toml".into());
    let random_path = args.next().unwrap_or_else(|| "configs/fig5_random.toml".into());
    let fixed = ensemble::run_experiment(&config::parse_config(fixed_path)?)?;
    let random = ensemble::run_experiment(&config::parse_config(random_path)?)?;

    for (label, r) in [("fixed", &fixed), ("random", &random)] {
        let peak = (0..r.p1_recon.len()).fold(0, |b, i| if r.p1_recon[i] > r.p1_recon[b] { i } else { b });
        let u = r.diagnostics.uniformity;
        println!(
            "{label:>6} seed: p1 peak at site {peak} ({:.3}), uniformity chi2 = {:.1} on {} dof, p = {:.3e}",
            r.p1_recon[peak],
            u.statistic,
            u.dof,
            u.best_p_value()
        );
    }
    let cmp = ensemble::compare_distributions(fixed.p2_recon.as_ref().unwrap(), random.p2_recon.as_ref().unwrap())?;
    println!("p2 fixed vs random: cosine {:.4}, L1 {:.4}", cmp.cosine_similarity, cmp.l1);
    println!("{:>3} {:>10} {:>10}", "j", "fixed", "random");
    for j in 1..=12 {
        println!("{j:>3} {:>10.5} {:>10.5}", fixed.p2_recon.as_ref().unwrap()[j], random.p2_recon.as_ref().unwrap()[j]);
    }
    Ok(())
}
