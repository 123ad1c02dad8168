//! Train SGNS on a shuffled Zipf corpus and compare the frequency heatmap
//! with its permutation baseline.

use freqlens::corpus::{build_vocab, shuffle_tokens};
use freqlens::freq_analysis::{similarity_heatmap, RmseResult};
use freqlens::store::Metric;
use freqlens::synth::ZipfCorpus;
use freqlens::train::{train, Hyperparams, Method, NoSnapshots};

fn main() -> freqlens::Result<()> {
    let raw = ZipfCorpus::new(5_000, 200_000).seed(1).generate();
    let corpus = shuffle_tokens(&raw, 1)?;
    let vocab = build_vocab(&corpus, 5);

    let hp = Hyperparams {
        min_count: 5,
        epochs: 3,
        ..Hyperparams::desk(Method::Sgns)
    };
    let set = train(&corpus, &vocab, &hp, &mut NoSnapshots)?;

    let h = similarity_heatmap(&set, &vocab, Metric::Cosine, 200, 1)?;
    print!("bin ");
    for b in h.bins() {
        print!("{b:>8}");
    }
    println!();
    for (i, row) in h.matrix().iter().enumerate() {
        print!("{:<4}", h.bins()[i]);
        for v in row {
            if v.is_nan() {
                print!("{:>8}", "");
            } else {
                print!("{v:>8.3}");
            }
        }
        println!();
    }

    let r = RmseResult::compute(&hp.setting_id(), &h, 100, 2)?;
    let s = r.summary();
    println!(
        "rmse {:.4}, baseline median {:.4}, max {:.4}, exceeds: {}",
        s.rmse_actual,
        s.baseline_q50,
        s.baseline_max,
        r.exceeds_baseline()
    );
    Ok(())
}
