//! Seed expansion, theme matrix initialization and initial theme
//! assignments on a synthetic lexicon.

use bbbg::experiment::{synth_bench, SynthSpec};
use bbbg::themes::{expand_seeds, init_assignments, SeedSet};

fn main() -> bbbg::Result<()> {
    let bench = synth_bench(&SynthSpec::default(), 0)?;
    let lex = &bench.lexicon;
    let (name, seeds) = lex.seeds.iter().next().expect("a seeded theme");
    let expanded = expand_seeds(&SeedSet::new(name.clone(), seeds.clone()), &lex.vocab, &lex.table, 5)?;
    println!("{name}: {:?}\n  expanded to {:?}", seeds, expanded.expanded);

    let t0 = &bench.themes;
    println!("theme matrix: {} rows ({:?}) of width {}", t0.len(), t0.names(), t0.dim());

    // cosine assignments against the generating theme of each document
    let theta = init_assignments(&bench.x, t0, 0.1)?;
    let mut agree = 0;
    let mut other = 0;
    for (j, d) in bench.corpus.docs().iter().enumerate() {
        let best = theta.column(j).imax();
        if best == t0.other_index() {
            other += 1;
        } else if d.theme.as_deref() == Some(t0.names()[best].as_str()) {
            agree += 1;
        }
    }
    let n = bench.corpus.len();
    println!("cosine assignment matches the tag for {agree} of {n} documents; {other} sent to other");
    Ok(())
}
