//! Apply each masking protocol to a synthetic corpus and compare which
//! groups keep their labels.

use std::collections::BTreeMap;

use bbbg::corpus::{mask_biased_extremity, mask_by_theme, mask_unbiased, mask_weighted, MaskState};
use bbbg::experiment::{synth_bench, SynthSpec};

fn by_group(state: &MaskState, corpus: &bbbg::corpus::Corpus) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for (d, on) in corpus.docs().iter().zip(&state.supervised) {
        if *on {
            *out.entry(d.group.clone().unwrap_or_default()).or_insert(0) += 1;
        }
    }
    out
}

fn main() -> bbbg::Result<()> {
    let bench = synth_bench(&SynthSpec::default(), 0)?;
    let corpus = &bench.corpus;
    let themes = corpus.theme_tags();
    let states = [
        mask_unbiased(corpus, 0.05, 1)?,
        mask_biased_extremity(corpus, 0.05)?,
        mask_weighted(corpus, 0.05, 1)?,
        mask_by_theme(corpus, &themes[..1])?,
    ];
    for s in &states {
        println!("{:<9} {:>4} supervised", s.protocol.to_string(), s.supervised_count());
        for (g, n) in by_group(s, corpus) {
            println!("    {g:<24} {n}");
        }
    }
    Ok(())
}
