//! Per-theme geometry of the learned decomposition: angle between context
//! vectors and polarization axes, PCA concentration, center separation and
//! author slants against the true ideology scores.

use bbbg::analysis::{external_correlation, rank_deviation};
use bbbg::corpus::Protocol;
use bbbg::experiment::{fit_bbbg, mask, slant_pairs, synth_bench, theme_geometry, ModelSpec, SynthSpec};

fn main() -> bbbg::Result<()> {
    let bench = synth_bench(&SynthSpec::default(), 0)?;
    let m = mask(&bench.corpus, Protocol::Biased, 0.08, 0)?;
    let fit = fit_bbbg(&bench, &m, &ModelSpec::default().config(&bench, 0))?;

    println!("theme     angle  pc1 x -> f    rank x -> f  separation x -> f");
    for g in theme_geometry(&bench.corpus, &bench.x, bench.themes.names(), &fit.params, 1e-2)? {
        println!(
            "{:<8} {:>6.1}  {:.3} -> {:.3}  {:>4} -> {:<4}  {:.3} -> {:.3}",
            g.theme,
            g.angle.unwrap_or(f64::NAN),
            g.pc1_x,
            g.pc1_f,
            g.rank_x,
            g.rank_f,
            g.separation_x,
            g.separation_f
        );
    }

    let (slants, truth) = slant_pairs(&fit.logits, &bench)?;
    println!("slant r2 against true scores: {:.3}", external_correlation(&slants, &truth)?);
    let rd = rank_deviation(&slants);
    let most = rd
        .deviation
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    println!("largest rank deviation {most:.3} over {} authors", slants.len());
    Ok(())
}
