//! Writes sampled shots to a plain-text archive, reads them back and
//! recomputes the ground-truth distributions.

use std::fs::File;
use std::io::{BufReader, BufWriter};

use latticecorr::lattice::{self, ArchiveHeader, DistributionModel, LatticeConfig, ModelKind, ProbabilityVectors, Statistics};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> latticecorr::Result<()> {
    let config = LatticeConfig::new(32, 5e-7, 0.25, Statistics::Boson)?;
    let model = DistributionModel::new(ModelKind::AntiBunched { min_gap: 3 }, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let shots = (0..1000)
        .map(|_| lattice::sample_occupancy(&model, &config, &mut rng))
        .collect::<latticecorr::Result<Vec<_>>>()?;

    let path = std::env::temp_dir().join("latticecorr_shots.txt");
    lattice::write_archive(
        BufWriter::new(File::create(&path)?),
        &ArchiveHeader::from_config(&config),
        &["anti-bunched, min_gap = 3".to_string()],
        &shots,
    )?;
    let (header, back) = lattice::read_archive(BufReader::new(File::open(&path)?))?;
    println!("{} shots of {} sites read back from {}", back.len(), header.n_sites, path.display());
    for shot in back.iter().take(3) {
        println!("  {}", shot.to_line());
    }

    let truth = ProbabilityVectors::from_shots(&back)?;
    println!("p2 for j = 0..6: {:?}", truth.p2.iter().take(7).map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    Ok(())
}
