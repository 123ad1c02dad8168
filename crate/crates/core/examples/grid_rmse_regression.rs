//! Train the GloVe grid on a small corpus and regress heatmap RMSE on the
//! hyperparameter settings.

use freqlens::corpus::build_vocab;
use freqlens::freq_analysis::{regress_rmse, similarity_heatmap, RmseResult};
use freqlens::store::Metric;
use freqlens::synth::ZipfCorpus;
use freqlens::train::{enumerate_grid_from, train, Hyperparams, Method, NoSnapshots};

fn main() -> freqlens::Result<()> {
    let corpus = ZipfCorpus::new(3_000, 150_000).seed(3).generate();
    let vocab = build_vocab(&corpus, 5);
    let base = Hyperparams {
        min_count: 5,
        epochs: 8,
        dim: 25,
        ..Hyperparams::desk(Method::Glove)
    };

    let mut rows = Vec::new();
    for setting in enumerate_grid_from(&base, Method::Glove) {
        let set = train(&corpus, &vocab, &setting.hyperparams, &mut NoSnapshots)?;
        let h = similarity_heatmap(&set, &vocab, Metric::Cosine, 200, 1)?;
        let row = RmseResult::compute(&setting.id, &h, 50, 2)?.summary();
        println!(
            "{:<40} rmse {:.4}  baseline max {:.4}",
            setting.id, row.rmse_actual, row.baseline_max
        );
        rows.push(row);
    }

    let fit = regress_rmse(&rows, Metric::Cosine)?;
    println!("\n{:<12}{:>10}{:>10}{:>10}", "term", "coef", "se", "p");
    for t in &fit.terms {
        println!("{:<12}{:>10.4}{:>10.4}{:>10.3}", t.term, t.coef, t.se, t.p);
    }
    Ok(())
}
