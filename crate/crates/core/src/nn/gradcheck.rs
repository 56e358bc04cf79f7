use super::Parameters;
use crate::error::{Error, Result};

/// Gradients smaller than this are compared in absolute rather than relative
/// terms; central differences cannot resolve them to 1e-4 relative accuracy.
pub const GRADIENT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Flat index of the coordinate with the largest relative error.
    pub worst_index: usize,
    pub checked: usize,
    pub passed: bool,
}

/// Compares `analytic` against central differences of `loss` around
/// `params`.
///
/// The relative error of a coordinate is `|a - n| / max(|a|, |n|,
/// GRADIENT_FLOOR)`. When `sample` is `Some(k)`, at most `k` coordinates,
/// evenly strided across the flat parameter vector, are checked.
pub fn grad_check<P, F>(
    params: &P,
    analytic: &P,
    loss: F,
    step: f64,
    tolerance: f64,
    sample: Option<usize>,
) -> Result<GradCheckReport>
where
    P: Parameters + Clone,
    F: Fn(&P) -> Result<f64>,
{
    let total = params.parameter_len();
    if total != analytic.parameter_len() {
        return Err(Error::Dimension {
            what: "analytic gradient",
            expected: total,
            found: analytic.parameter_len(),
        });
    }
    let analytic_flat: Vec<f64> = analytic.slices().concat();
    let stride = match sample {
        Some(k) if k > 0 && k < total => total.div_ceil(k),
        _ => 1,
    };

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst_index: 0,
        checked: 0,
        passed: true,
    };
    for flat in (0..total).step_by(stride) {
        let original = read(&probe, flat);
        write(&mut probe, flat, original + step);
        let up = loss(&probe)?;
        write(&mut probe, flat, original - step);
        let down = loss(&probe)?;
        write(&mut probe, flat, original);
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Invariant(format!(
                "non-finite loss while probing coordinate {flat}"
            )));
        }
        let numeric = (up - down) / (2.0 * step);
        let a = analytic_flat[flat];
        let abs = (a - numeric).abs();
        let rel = abs / a.abs().max(numeric.abs()).max(GRADIENT_FLOOR);
        report.max_abs_error = report.max_abs_error.max(abs);
        if rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst_index = flat;
        }
        report.checked += 1;
    }
    report.passed = report.max_rel_error < tolerance;
    Ok(report)
}

fn locate<P: Parameters>(p: &P, flat: usize) -> (usize, usize) {
    let mut offset = flat;
    for (t, s) in p.slices().iter().enumerate() {
        if offset < s.len() {
            return (t, offset);
        }
        offset -= s.len();
    }
    panic!("flat index {flat} out of range");
}

fn read<P: Parameters>(p: &P, flat: usize) -> f64 {
    let (t, i) = locate(p, flat);
    p.slices()[t][i]
}

fn write<P: Parameters>(p: &mut P, flat: usize, value: f64) {
    let (t, i) = locate(p, flat);
    p.slices_mut()[t][i] = value;
}
