//! Project a frequency-stratified word sample onto two principal components.

use freqlens::corpus::build_vocab;
use freqlens::freq_analysis::{assign_bins, pca_stratified};
use freqlens::stats::spearman;
use freqlens::synth::ZipfCorpus;
use freqlens::train::{train, Hyperparams, Method, NoSnapshots};

fn main() -> freqlens::Result<()> {
    let corpus = ZipfCorpus::new(5_000, 300_000).seed(4).generate();
    let vocab = build_vocab(&corpus, 5);
    let hp = Hyperparams {
        min_count: 5,
        epochs: 3,
        ..Hyperparams::desk(Method::Sgns)
    };
    let set = train(&corpus, &vocab, &hp, &mut NoSnapshots)?;

    let binning = assign_bins(&vocab)?;
    let p = pca_stratified(&set, &binning, 100, 5)?;
    let [ev1, ev2] = p.explained_variance();
    println!(
        "{} points, explained variance {ev1:.3} / {ev2:.3}",
        p.points.len()
    );
    for c in &p.centroids {
        println!("bin {}  centroid ({:+.3}, {:+.3})", c.bin, c.pc1, c.pc2);
    }

    let bins: Vec<f64> = p.centroids.iter().map(|c| c.bin as f64).collect();
    let pc1: Vec<f64> = p.centroids.iter().map(|c| c.pc1).collect();
    let pc2: Vec<f64> = p.centroids.iter().map(|c| c.pc2).collect();
    println!("spearman(bin, pc1) {:+.2}", spearman(&bins, &pc1));
    println!("spearman(bin, pc2) {:+.2}", spearman(&bins, &pc2));
    Ok(())
}
