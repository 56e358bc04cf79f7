//! Geometry and accuracy diagnostics for trained models.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::embeddings::{nearest_words, EmbeddingTable, Vocabulary};
use crate::error::{ensure_dim, Error, Result};
use crate::model::BbbgParams;

/// Difference of group-mean position vectors within one theme, group 0
/// minus group 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationAxis {
    pub theme: usize,
    pub axis: DVector<f64>,
    pub counts: [usize; 2],
}

/// `positions` is `D x N`; `labels` and `themes` give each column's group and
/// theme.
pub fn polarization_axis(
    positions: &DMatrix<f64>,
    labels: &[u8],
    themes: &[usize],
    theme: usize,
) -> Result<PolarizationAxis> {
    ensure_dim("labels", positions.ncols(), labels.len())?;
    ensure_dim("themes", positions.ncols(), themes.len())?;
    let d = positions.nrows();
    let mut sums = [DVector::zeros(d), DVector::zeros(d)];
    let mut counts = [0usize; 2];
    for j in 0..positions.ncols() {
        if themes[j] != theme {
            continue;
        }
        let g = labels[j] as usize;
        if g > 1 {
            return Err(Error::Data(format!("label {g} is not binary")));
        }
        sums[g] += positions.column(j);
        counts[g] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::Data(format!(
            "theme {theme} needs documents from both groups, found {counts:?}"
        )));
    }
    let axis = &sums[0] / counts[0] as f64 - &sums[1] / counts[1] as f64;
    Ok(PolarizationAxis {
        theme,
        axis,
        counts,
    })
}

/// Angle in degrees between two non-zero vectors.
pub fn orthogonality_angle(c: &[f64], pa: &[f64]) -> Result<f64> {
    ensure_dim("orthogonality_angle", c.len(), pa.len())?;
    let nc = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let np = pa.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nc == 0.0 {
        return Err(Error::ZeroVector("context vector"));
    }
    if np == 0.0 {
        return Err(Error::ZeroVector("polarization axis"));
    }
    // 2 atan2(|a - b|, |a + b|) on unit vectors stays accurate near 0 and
    // 180 degrees where acos does not
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in c.iter().zip(pa) {
        let (a, b) = (x / nc, y / np);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    let (diff, sum) = (diff.sqrt(), sum.sqrt());
    let acute = |p: f64, q: f64| 2.0 * p.atan2(q).to_degrees();
    // the obtuse case is mirrored so that angle(c, pa) + angle(c, -pa) is
    // exactly 180
    Ok(if diff <= sum {
        acute(diff, sum)
    } else {
        180.0 - acute(sum, diff)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaReport {
    /// Explained-variance ratios, descending.
    pub ratios: Vec<f64>,
    pub singular_values: Vec<f64>,
    /// `(threshold, count)`: singular values above `threshold * largest`.
    pub ranks: Vec<(f64, usize)>,
    /// Leading principal directions as columns (`D x min(2, r)`).
    pub axes: DMatrix<f64>,
    /// Coordinates of each sample on those directions (`N x min(2, r)`).
    pub projection: DMatrix<f64>,
}

impl PcaReport {
    pub fn pc1_ratio(&self) -> f64 {
        self.ratios[0]
    }

    pub fn rank_at(&self, threshold: f64) -> Option<usize> {
        self.ranks.iter().find(|(t, _)| *t == threshold).map(|(_, r)| *r)
    }
}

pub const DEFAULT_RANK_THRESHOLDS: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// PCA of the columns of `vectors` (`D x N`) through the SVD of the centered
/// data.
pub fn pca_metrics(vectors: &DMatrix<f64>, thresholds: &[f64]) -> Result<PcaReport> {
    let n = vectors.ncols();
    if n < 2 {
        return Err(Error::Data(format!("PCA needs at least 2 vectors, got {n}")));
    }
    let mean = vectors.column_mean();
    let mut centered = vectors.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let svd = centered.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let energy: f64 = sv.iter().map(|s| s * s).sum();
    if energy == 0.0 || !energy.is_finite() {
        return Err(Error::Data("vectors have no variance".into()));
    }
    let ratios = sv.iter().map(|s| s * s / energy).collect();
    let ranks = thresholds
        .iter()
        .map(|&t| (t, sv.iter().filter(|s| **s > t * sv[0]).count()))
        .collect();
    let keep = sv.len().min(2);
    let axes = DMatrix::from_fn(vectors.nrows(), keep, |i, k| u[(i, order[k])]);
    let projection = centered.tr_mul(&axes);
    Ok(PcaReport {
        ratios,
        singular_values: sv,
        ranks,
        axes,
        projection,
    })
}

/// Distance between group means after normalizing each vector to unit
/// length and projecting onto the first principal axis of the pooled set.
pub fn center_separation(vectors: &DMatrix<f64>, labels: &[u8]) -> Result<f64> {
    ensure_dim("labels", vectors.ncols(), labels.len())?;
    let mut unit = vectors.clone();
    for mut col in unit.column_iter_mut() {
        let n = col.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector("vector in center separation"));
        }
        col /= n;
    }
    let pca = pca_metrics(&unit, &[])?;
    let axis = pca.axes.column(0);
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for (j, &l) in labels.iter().enumerate() {
        let g = l as usize;
        if g > 1 {
            return Err(Error::Data(format!("label {l} is not binary")));
        }
        sums[g] += axis.dot(&unit.column(j));
        counts[g] += 1;
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::Data("center separation needs both groups".into()));
    }
    Ok((sums[0] / counts[0] as f64 - sums[1] / counts[1] as f64).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankDeviationReport {
    /// 1-based ascending ranks, ties averaged.
    pub ranks: Vec<f64>,
    /// `|rank - median rank| / max(N - 1, 1)`.
    pub deviation: Vec<f64>,
}

impl RankDeviationReport {
    /// Mean deviation per group tag.
    pub fn by_group<S: AsRef<str>>(&self, groups: &[S]) -> Result<BTreeMap<String, f64>> {
        ensure_dim("group tags", self.deviation.len(), groups.len())?;
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for (rd, g) in self.deviation.iter().zip(groups) {
            let e = acc.entry(g.as_ref().to_string()).or_default();
            e.0 += rd;
            e.1 += 1;
        }
        Ok(acc.into_iter().map(|(g, (s, n))| (g, s / n as f64)).collect())
    }
}

pub fn rank_deviation(slants: &[f64]) -> RankDeviationReport {
    let n = slants.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| slants[a].total_cmp(&slants[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && slants[order[j + 1]] == slants[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    let median = (n as f64 + 1.0) / 2.0;
    let scale = (n.saturating_sub(1)).max(1) as f64;
    let deviation = ranks.iter().map(|r| (r - median).abs() / scale).collect();
    RankDeviationReport { ranks, deviation }
}

/// Fraction of `eval` positions where prediction and truth agree.
pub fn accuracy(predictions: &[u8], truths: &[u8], eval: &[usize]) -> Result<f64> {
    ensure_dim("truths", predictions.len(), truths.len())?;
    if eval.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut hits = 0usize;
    for &i in eval {
        let (p, t) = predictions
            .get(i)
            .zip(truths.get(i))
            .ok_or_else(|| Error::Data(format!("evaluation index {i} out of range")))?;
        hits += usize::from(p == t);
    }
    Ok(hits as f64 / eval.len() as f64)
}

/// Accuracy and count per group tag, over the `eval` positions that carry a
/// tag.
pub fn accuracy_by_group(
    predictions: &[u8],
    truths: &[u8],
    eval: &[usize],
    groups: &[Option<String>],
) -> Result<BTreeMap<String, (f64, usize)>> {
    ensure_dim("group tags", predictions.len(), groups.len())?;
    let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for &i in eval {
        if let Some(Some(g)) = groups.get(i) {
            members.entry(g.clone()).or_default().push(i);
        }
    }
    members
        .into_iter()
        .map(|(g, idx)| Ok((g, (accuracy(predictions, truths, &idx)?, idx.len()))))
        .collect()
}

/// Coefficient of determination of the least-squares line from slants to
/// scores, i.e. their squared Pearson correlation.
pub fn external_correlation(slants: &[f64], scores: &[f64]) -> Result<f64> {
    ensure_dim("external scores", slants.len(), scores.len())?;
    let n = slants.len();
    if n < 3 {
        return Err(Error::Data(format!("need at least 3 paired authors, got {n}")));
    }
    let mx = slants.iter().sum::<f64>() / n as f64;
    let my = scores.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in slants.iter().zip(scores) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Data("slants have zero variance".into()));
    }
    if syy == 0.0 {
        return Err(Error::Data("external scores have zero variance".into()));
    }
    Ok((sxy * sxy / (sxx * syy)).min(1.0))
}

/// Words nearest to the learned context vector of `theme`.
pub fn context_neighborhood(
    params: &BbbgParams,
    theme_names: &[String],
    theme: &str,
    vocab: &Vocabulary,
    table: &EmbeddingTable,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let ctx = params
        .context
        .as_ref()
        .ok_or_else(|| Error::Config("the single-branch model has no context vectors".into()))?;
    ensure_dim("theme names", ctx.themes.nrows(), theme_names.len())?;
    let i = theme_names
        .iter()
        .position(|t| t == theme)
        .ok_or_else(|| Error::Data(format!("unknown theme `{theme}`")))?;
    let row: Vec<f64> = ctx.themes.row(i).iter().copied().collect();
    nearest_words(&row, vocab, table, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(r: usize, c: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn identical_groups_have_zero_axis() {
        let v = DMatrix::from_column_slice(2, 4, &[1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0]);
        let pa = polarization_axis(&v, &[0, 0, 1, 1], &[0; 4], 0).unwrap();
        assert_eq!(pa.axis, DVector::zeros(2));
        assert_eq!(pa.counts, [2, 2]);
    }

    #[test]
    fn axis_matches_mean_difference_oracle() {
        let v = gaussian(5, 40, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let labels: Vec<u8> = (0..40).map(|_| rng.random_range(0..2)).collect();
        let themes: Vec<usize> = (0..40).map(|_| rng.random_range(0..3)).collect();
        for t in 0..3 {
            let pa = polarization_axis(&v, &labels, &themes, t).unwrap();
            for i in 0..5 {
                let mut s = [0.0; 2];
                let mut n = [0.0; 2];
                for j in 0..40 {
                    if themes[j] == t {
                        s[labels[j] as usize] += v[(i, j)];
                        n[labels[j] as usize] += 1.0;
                    }
                }
                assert!((pa.axis[i] - (s[0] / n[0] - s[1] / n[1])).abs() < 1e-12);
            }
        }
        assert!(polarization_axis(&v, &labels, &themes, 7).is_err());
    }

    #[test]
    fn angles() {
        assert!((orthogonality_angle(&[1.0, 0.0], &[0.0, 3.0]).unwrap() - 90.0).abs() < 1e-12);
        assert!(orthogonality_angle(&[2.0, 2.0], &[1.0, 1.0]).unwrap() < 1e-10);
        assert!((orthogonality_angle(&[2.0, 2.0], &[-1.0, -1.0]).unwrap() - 180.0).abs() < 1e-10);
        assert!(orthogonality_angle(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn supplementary_angles(c in prop::collection::vec(-10.0f64..10.0, 4), p in prop::collection::vec(-10.0f64..10.0, 4)) {
            prop_assume!(c.iter().any(|v| v.abs() > 1e-3) && p.iter().any(|v| v.abs() > 1e-3));
            let neg: Vec<f64> = p.iter().map(|v| -v).collect();
            let a = orthogonality_angle(&c, &p).unwrap();
            let b = orthogonality_angle(&c, &neg).unwrap();
            prop_assert_eq!(a + b, 180.0);
        }

        #[test]
        fn rank_deviation_ignores_monotone_maps(s in prop::collection::vec(-5.0f64..5.0, 1..30)) {
            let mapped: Vec<f64> = s.iter().map(|v| v.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(rank_deviation(&s), rank_deviation(&mapped));
        }

        #[test]
        fn complementary_accuracy(p in prop::collection::vec(0u8..2, 1..40), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t: Vec<u8> = p.iter().map(|_| rng.random_range(0..2)).collect();
            let flipped: Vec<u8> = p.iter().map(|v| 1 - v).collect();
            let eval: Vec<usize> = (0..p.len()).collect();
            let a = accuracy(&p, &t, &eval).unwrap() + accuracy(&flipped, &t, &eval).unwrap();
            prop_assert!((a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_points_have_rank_one() {
        let v = DMatrix::from_fn(3, 10, |i, j| (i as f64 + 1.0) * j as f64);
        let r = pca_metrics(&v, &DEFAULT_RANK_THRESHOLDS).unwrap();
        assert!((r.pc1_ratio() - 1.0).abs() < 1e-12);
        assert!(r.ranks.iter().all(|(_, k)| *k == 1));
        assert!(pca_metrics(&DMatrix::zeros(3, 1), &[]).is_err());
    }

    #[test]
    fn isotropic_cloud_splits_variance() {
        let v = gaussian(2, 10_000, 3);
        let r = pca_metrics(&v, &[]).unwrap();
        assert!((r.pc1_ratio() - 0.5).abs() < 0.02, "{}", r.pc1_ratio());
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-26 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        ev
    }

    #[test]
    fn ratios_match_eigendecomposition_oracle() {
        // 20 samples of 6 features: columns are samples
        let v = gaussian(6, 20, 4);
        let r = pca_metrics(&v, &[]).unwrap();
        let mean: Vec<f64> = (0..6).map(|i| v.row(i).sum() / 20.0).collect();
        let mut cov = vec![vec![0.0; 6]; 6];
        for a in 0..6 {
            for b in 0..6 {
                for j in 0..20 {
                    cov[a][b] += (v[(a, j)] - mean[a]) * (v[(b, j)] - mean[b]);
                }
            }
        }
        let ev = jacobi_eigenvalues(cov);
        let total: f64 = ev.iter().sum();
        for (i, e) in ev.iter().enumerate() {
            assert!((r.ratios[i] - e / total).abs() < 1e-10, "{i}");
        }
        assert!((r.ratios.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(r.ratios.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn ratios_invariant_under_rotation() {
        let v = gaussian(4, 30, 5);
        let q = gaussian(4, 4, 6).qr().q();
        let a = pca_metrics(&v, &[]).unwrap();
        let b = pca_metrics(&(&q * &v), &[]).unwrap();
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn separation_closed_forms() {
        let v = DMatrix::from_column_slice(2, 4, &[1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 3.0, 3.0]);
        assert!(center_separation(&v, &[0, 1, 0, 1]).unwrap() < 1e-12);
        let u = DMatrix::from_column_slice(2, 4, &[0.6, 0.8, 0.6, 0.8, -0.6, -0.8, -1.2, -1.6]);
        assert!((center_separation(&u, &[0, 0, 1, 1]).unwrap() - 2.0).abs() < 1e-12);
        assert!(center_separation(&u, &[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn rank_deviation_cases() {
        assert_eq!(rank_deviation(&[4.2]).deviation, vec![0.0]);
        assert_eq!(rank_deviation(&[3.0, -1.0, 0.5]).deviation, vec![0.5, 0.5, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = rank_deviation(&s);
        let mut sorted = s.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, v) in s.iter().enumerate() {
            let rank = sorted.iter().position(|x| x == v).unwrap() as f64 + 1.0;
            assert_eq!(r.ranks[i], rank);
            assert!((r.deviation[i] - (rank - 50.5).abs() / 99.0).abs() < 1e-15);
        }
        let tied = rank_deviation(&[1.0, 1.0, 2.0]);
        assert_eq!(tied.ranks, vec![1.5, 1.5, 3.0]);
        let groups = tied.by_group(&["a", "a", "b"]).unwrap();
        assert_eq!(groups["b"], 0.5);
    }

    #[test]
    fn accuracy_cases() {
        let eval: Vec<usize> = (0..10).collect();
        let t = [1u8; 10];
        assert_eq!(accuracy(&t, &t, &eval).unwrap(), 1.0);
        let p = [1, 0, 1, 0, 1, 0, 1, 0, 1, 0];
        assert_eq!(accuracy(&p, &t, &eval).unwrap(), 0.5);
        assert!(accuracy(&p, &t, &[]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p: Vec<u8> = (0..50).map(|_| rng.random_range(0..2)).collect();
        let t: Vec<u8> = (0..50).map(|_| rng.random_range(0..2)).collect();
        let eval: Vec<usize> = (0..50).filter(|i| i % 3 != 0).collect();
        let hits = eval.iter().filter(|&&i| p[i] == t[i]).count();
        assert_eq!(accuracy(&p, &t, &eval).unwrap(), hits as f64 / eval.len() as f64);
        let groups: Vec<Option<String>> = (0..50).map(|i| Some(format!("g{}", i % 2))).collect();
        let by = accuracy_by_group(&p, &t, &eval, &groups).unwrap();
        let g0: Vec<usize> = eval.iter().copied().filter(|i| i % 2 == 0).collect();
        assert_eq!(by["g0"], (accuracy(&p, &t, &g0).unwrap(), g0.len()));
    }

    #[test]
    fn correlation_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        assert!((external_correlation(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert!(external_correlation(&x[..2], &y[..2]).is_err());
        assert!(external_correlation(&[1.0; 4], &y).is_err());
        let a = gaussian(1, 10_000, 9);
        let b = gaussian(1, 10_000, 10);
        assert!(external_correlation(a.as_slice(), b.as_slice()).unwrap() < 0.01);
    }

    #[test]
    fn neighborhood_of_a_context_row() {
        use crate::model::{build_model, BbbgConfig, LayerShapes, Variant};

        let cfg = BbbgConfig {
            input_dim: 4,
            latent_dim: 2,
            n_themes: 2,
            shapes: LayerShapes::default().scaled(0.01),
            ..BbbgConfig::default()
        };
        let t0 = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let params = build_model(&cfg, Some(&t0), 1).unwrap();
        let mut vocab = Vocabulary::new();
        for w in ["east", "north", "diag", "west"] {
            vocab.insert(w);
        }
        let table = EmbeddingTable::from_columns(DMatrix::from_column_slice(
            4,
            4,
            &[2.0, 0.1, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 1.0, 1.2, 0.0, -1.0, 0.0, 0.0, 0.0],
        ))
        .unwrap();
        let names = vec!["t0".to_string(), "other".to_string()];
        let near = context_neighborhood(&params, &names, "t0", &vocab, &table, 2).unwrap();
        assert_eq!(near[0].0, "east");
        assert!((near[0].1 - 2.0 / 4.01f64.sqrt()).abs() < 1e-12);
        assert_eq!(near[1].0, "north");
        let near = context_neighborhood(&params, &names, "other", &vocab, &table, 1).unwrap();
        assert_eq!(near[0].0, "diag");
        assert!(context_neighborhood(&params, &names, "missing", &vocab, &table, 1).is_err());

        let single = build_model(&BbbgConfig { variant: Variant::Sbbg, ..cfg }, None, 1).unwrap();
        assert!(context_neighborhood(&single, &names, "t0", &vocab, &table, 1).is_err());
    }
}
