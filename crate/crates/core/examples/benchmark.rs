//! Train the two-branch model and the dense baseline on a synthetic corpus
//! with 5% biased supervision. Usage: `benchmark [seed]`.

use bbbg::corpus::Protocol;
use bbbg::experiment::{fit_baseline, fit_bbbg, mask, synth_bench, ModelSpec, SynthSpec};

fn main() -> bbbg::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let bench = synth_bench(&SynthSpec::default(), seed)?;
    let m = mask(&bench.corpus, Protocol::Biased, 0.05, seed)?;
    println!("{} documents, {} supervised", bench.corpus.len(), m.supervised_count());

    let spec = ModelSpec::default();
    let fit = fit_bbbg(&bench, &m, &spec.config(&bench, seed))?;
    for (i, e) in fit.history.epochs.iter().enumerate().step_by(10) {
        println!(
            "epoch {i:>3}: total {:.3} recon {:.3} kl {:.3} ce {:.3}",
            e.total, e.recon, e.kl, e.ce
        );
    }
    let dnn = fit_baseline(&bench, &m, &spec.baseline(seed))?;
    println!("held-out accuracy: bbbg {:.3}, dense baseline {:.3}", fit.heldout_accuracy, dnn);
    Ok(())
}
