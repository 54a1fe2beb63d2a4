//! Pair-separation reconstructions for the four filling models against the
//! random-filling triangle.

use latticecorr::config;
use latticecorr::ensemble;

fn main() -> latticecorr::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "configs/figure6.toml".into());
    let file = config::load(path)?;
    let base = &file.experiment;
    let panels = ensemble::figure6_suite(base, &file.figure6)?;
    let baseline = ensemble::random_pair_baseline(base.lattice.n_sites);

    print!("{:>3} {:>10}", "j", "triangle");
    for p in &panels {
        print!(" {:>14}", p.kind.name());
    }
    println!();
    for j in 1..=16 {
        print!("{j:>3} {:>10.5}", baseline[j]);
        for p in &panels {
            print!(" {:>14.5}", p.result.p2_recon.as_ref().unwrap()[j]);
        }
        println!();
    }
    for p in &panels {
        let cmp = ensemble::compare_distributions(p.result.p2_recon.as_ref().unwrap(), &baseline)?;
        println!("fig6{} {:<14} L1 from triangle {:.4}", p.panel, p.kind.name(), cmp.l1);
    }
    Ok(())
}
