//! Least squares via Householder QR.

use super::ScoringError;

/// Relative threshold on |R_kk| below which a column is treated as a linear
/// combination of the preceding ones.
const RANK_TOLERANCE: f64 = 1e-10;

/// Solves min ||X b - y||² for a dense row-major design matrix.
///
/// The caller includes any intercept column in `rows`. Returns the
/// coefficient vector, or `RankDeficient` naming the first dependent column.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>, ScoringError> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n < p || n == 0 {
        return Err(ScoringError::TooFewExamples { needed: p.max(1), got: n });
    }
    debug_assert_eq!(y.len(), n);

    // column-major working copy; each column is reflected in place
    let mut cols: Vec<Vec<f64>> = (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let mut rhs = y.to_vec();
    let scale = cols
        .iter()
        .map(|c| norm(c))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut diag = vec![0.0; p];
    for k in 0..p {
        let alpha = norm(&cols[k][k..]);
        if alpha <= RANK_TOLERANCE * scale {
            return Err(ScoringError::RankDeficient { column: k });
        }
        let sign = if cols[k][k] >= 0.0 { 1.0 } else { -1.0 };
        // v = x + sign*||x|| e1, stored over the sub-column
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] += sign * alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = -sign * alpha;

        for col in cols.iter_mut().skip(k + 1) {
            reflect(&v, vnorm2, &mut col[k..]);
        }
        reflect(&v, vnorm2, &mut rhs[k..]);
    }

    // back substitution on the upper triangle
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut acc = rhs[k];
        for j in k + 1..p {
            acc -= cols[j][k] * beta[j];
        }
        beta[k] = acc / diag[k];
    }
    Ok(beta)
}

fn reflect(v: &[f64], vnorm2: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= f * vi;
    }
}

fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow on large entries
    let m = x.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v / m).powi(2)).sum::<f64>().sqrt()
}
