//! Two-branch model against its single-branch and single-mode variants on
//! one synthetic corpus. Usage: `ablation [seed]`.

use bbbg::corpus::Protocol;
use bbbg::experiment::{fit_bbbg, mask, synth_bench, ModelSpec, SynthSpec};
use bbbg::model::Variant;

fn main() -> bbbg::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let bench = synth_bench(&SynthSpec::default(), seed)?;
    let m = mask(&bench.corpus, Protocol::Biased, 0.05, seed)?;
    for (name, spec) in [
        ("bbbg k=2", ModelSpec::default()),
        (
            "sbbg k=2",
            ModelSpec {
                variant: Variant::Sbbg,
                ..ModelSpec::default()
            },
        ),
        (
            "bbbg k=1",
            ModelSpec {
                n_modes: 1,
                ..ModelSpec::default()
            },
        ),
    ] {
        let fit = fit_bbbg(&bench, &m, &spec.config(&bench, seed))?;
        println!("{name}: held-out accuracy {:.3}", fit.heldout_accuracy);
    }
    Ok(())
}
