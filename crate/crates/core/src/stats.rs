//! Matrix normalization and the rank-based tests used by the experiments.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::activation::ActivationMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("input is constant; correlation undefined")]
    Constant,
    #[error("non-finite input value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMode {
    /// Divide by the sum.
    #[default]
    L1,
    /// Divide by the maximum.
    Max,
    /// Subtract the mean, divide by the population standard deviation.
    Zscore,
}

impl std::str::FromStr for NormMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormMode::L1),
            "max" => Ok(NormMode::Max),
            "zscore" => Ok(NormMode::Zscore),
            other => Err(format!("unknown normalization mode {other:?} (l1, max, zscore)")),
        }
    }
}

impl std::fmt::Display for NormMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NormMode::L1 => "l1",
            NormMode::Max => "max",
            NormMode::Zscore => "zscore",
        })
    }
}

/// Normalizes a vector in place. Vectors with zero sum / maximum / variance
/// are left unchanged.
pub fn normalize_vec(v: &mut [f64], mode: NormMode) {
    match mode {
        NormMode::L1 => {
            let s: f64 = v.iter().sum();
            if s != 0.0 {
                v.iter_mut().for_each(|x| *x /= s);
            }
        }
        NormMode::Max => {
            let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m != 0.0 && m.is_finite() {
                v.iter_mut().for_each(|x| *x /= m);
            }
        }
        NormMode::Zscore => {
            if v.is_empty() {
                return;
            }
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                let sd = var.sqrt();
                v.iter_mut().for_each(|x| *x = (*x - mean) / sd);
            }
        }
    }
}

/// Activation matrix after column-then-row normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMatrix {
    pub mode: NormMode,
    pub values: ActivationMatrix,
}

impl NormalizedMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values.get(row, col)
    }
}

/// Normalizes every column, then every row, with the same mode.
pub fn normalize(m: &ActivationMatrix, mode: NormMode) -> NormalizedMatrix {
    let mut out = m.clone();
    for c in 0..out.cols() {
        normalize_vec(out.column_mut(c), mode);
    }
    let mut row = vec![0.0; out.cols()];
    for r in 0..out.rows() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = out.get(r, c);
        }
        normalize_vec(&mut row, mode);
        for (c, &x) in row.iter().enumerate() {
            out.set(r, c, x);
        }
    }
    NormalizedMatrix { mode, values: out }
}

/// Mid-ranks (1-based) with ties sharing the average rank. Also returns the
/// tie sizes of every tied group.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    /// Pairs remaining after zero differences are dropped.
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub z: f64,
    /// Two-sided, normal approximation.
    pub p: f64,
    /// `z / sqrt(n)`.
    pub effect_r: f64,
}

pub const MIN_WILCOXON_PAIRS: usize = 5;

/// Wilcoxon signed-rank test on `x - y` with the normal approximation (tie
/// corrected, no continuity correction) and effect size `r = z / √n`.
pub fn wilcoxon_paired(x: &[f64], y: &[f64]) -> Result<PairedTestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let d: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|&d| d != 0.0)
        .collect();
    let n = d.len();
    if n < MIN_WILCOXON_PAIRS {
        return Err(StatsError::TooFew {
            needed: MIN_WILCOXON_PAIRS,
            got: n,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let mut w_plus = 0.0;
    let mut w_minus = 0.0;
    for (di, r) in d.iter().zip(&ranks) {
        if *di > 0.0 {
            w_plus += r;
        } else {
            w_minus += r;
        }
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let sigma = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
    let z = (w_plus - mean) / sigma;
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
    Ok(PairedTestResult {
        n,
        w_plus,
        w_minus,
        z,
        p,
        effect_r: z / nf.sqrt(),
    })
}

/// Largest attainable `|effect_r|` for `n` untied nonzero pairs.
pub fn max_effect_r(n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf + 1.0) / 4.0) / ((nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0).sqrt() * nf.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    /// Two-sided, t approximation with `n - 2` degrees of freedom.
    pub p: f64,
    pub n: usize,
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of mid-ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooFew { needed: 3, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (rx, _) = midranks(x);
    let (ry, _) = midranks(y);
    let mut rho = pearson(&rx, &ry).ok_or(StatsError::Constant)?.clamp(-1.0, 1.0);
    if 1.0 - rho.abs() < 1e-12 {
        rho = rho.signum();
    }
    let df = (n - 2) as f64;
    let p = if rho.abs() >= 1.0 {
        0.0
    } else if df == 0.0 {
        1.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(CorrelationResult { rho, p, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ResolvedParams;

    fn matrix(rows: usize, cols: Vec<Vec<f64>>) -> ActivationMatrix {
        let p = ResolvedParams {
            retention: 0.5,
            decay: 0.0,
            suppress: 0.0,
            initial: 1.0,
            iterations: 1,
            weighted: true,
        };
        let labels = (0..rows).map(|i| format!("n{i}")).collect();
        let primes = (0..cols.len()).map(|i| format!("p{i}")).collect();
        ActivationMatrix::from_columns(labels, primes, cols, p)
    }

    #[test]
    fn l1_uniform_column() {
        let m = normalize(&matrix(2, vec![vec![2.0, 2.0]]), NormMode::L1);
        // column -> [0.5, 0.5]; each single-entry row then becomes 1
        assert_eq!(m.values.column(0), &[1.0, 1.0]);
    }

    #[test]
    fn l1_two_by_two() {
        // rows [[1,3],[3,1]] stored column-major
        let m = normalize(&matrix(2, vec![vec![1.0, 3.0], vec![3.0, 1.0]]), NormMode::L1);
        assert_eq!(m.values.row(0), vec![0.25, 0.75]);
        assert_eq!(m.values.row(1), vec![0.75, 0.25]);
    }

    #[test]
    fn zero_column_unchanged() {
        let m = normalize(&matrix(2, vec![vec![0.0, 0.0], vec![1.0, 3.0]]), NormMode::L1);
        assert_eq!(m.values.column(0), &[0.0, 0.0]);
        for mode in [NormMode::Max, NormMode::Zscore] {
            let mut v = vec![0.0, 0.0];
            normalize_vec(&mut v, mode);
            assert_eq!(v, vec![0.0, 0.0]);
        }
        let mut c = vec![5.0, 5.0];
        normalize_vec(&mut c, NormMode::Zscore);
        assert_eq!(c, vec![5.0, 5.0]);
    }

    #[test]
    fn max_and_zscore() {
        let mut v = vec![1.0, 2.0, 4.0];
        normalize_vec(&mut v, NormMode::Max);
        assert_eq!(v, vec![0.25, 0.5, 1.0]);
        let mut z = vec![1.0, 3.0];
        normalize_vec(&mut z, NormMode::Zscore);
        assert_eq!(z, vec![-1.0, 1.0]);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("L1".parse::<NormMode>().unwrap(), NormMode::L1);
        assert_eq!("zscore".parse::<NormMode>().unwrap(), NormMode::Zscore);
        assert!("l2".parse::<NormMode>().is_err());
    }

    #[test]
    fn midranks_average_ties() {
        let (r, t) = midranks(&[10.0, 20.0, 20.0, 30.0, 20.0]);
        assert_eq!(r, vec![1.0, 3.0, 3.0, 5.0, 3.0]);
        assert_eq!(t, vec![3]);
    }

    #[test]
    fn wilcoxon_all_negative_closed_form() {
        // differences -1, -2, ..., -50: no ties, all the same sign
        let x: Vec<f64> = (0..50).map(|_| 0.0).collect();
        let y: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let r = wilcoxon_paired(&x, &y).unwrap();
        let n = 50.0_f64;
        let z = -(n * (n + 1.0) / 4.0) / (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0).sqrt();
        assert_eq!(r.n, 50);
        assert_eq!(r.w_plus, 0.0);
        assert_eq!(r.w_minus, 1275.0);
        assert!((r.z - z).abs() < 1e-12);
        assert!((r.effect_r - z / n.sqrt()).abs() < 1e-12);
        assert!((r.effect_r + 0.870).abs() < 0.001);
        assert!(r.p < 1e-9);
    }

    #[test]
    fn wilcoxon_small_case_against_hand_computation() {
        // d = [1, -2, 3, 3, 5, 0] -> zero dropped, |d| ranks [1, 2, 3.5, 3.5, 5]
        let x = [2.0, 0.0, 4.0, 5.0, 6.0, 1.0];
        let y = [1.0, 2.0, 1.0, 2.0, 1.0, 1.0];
        let r = wilcoxon_paired(&x, &y).unwrap();
        assert_eq!(r.n, 5);
        assert_eq!((r.w_plus, r.w_minus), (13.0, 2.0));
        let sigma = (5.0 * 6.0 * 11.0 / 24.0 - 6.0 / 48.0_f64).sqrt();
        assert!((r.z - 5.5 / sigma).abs() < 1e-12);
    }

    #[test]
    fn wilcoxon_degenerate() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(
            wilcoxon_paired(&x, &x),
            Err(StatsError::TooFew { needed: 5, got: 0 })
        );
        assert!(matches!(wilcoxon_paired(&x, &x[..4]), Err(StatsError::LengthMismatch(5, 4))));
    }

    #[test]
    fn spearman_examples() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[2.0, 4.0, 8.0, 16.0]).unwrap().rho, 1.0);
        assert_eq!(spearman(&x, &[9.0, 5.0, 1.0, 0.0]).unwrap().rho, -1.0);
        let r = spearman(&x, &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((r.rho - 0.6).abs() < 1e-12);
        assert_eq!(spearman(&x, &[1.0, 1.0, 1.0, 1.0]), Err(StatsError::Constant));
        assert!(matches!(spearman(&x[..2], &x[..2]), Err(StatsError::TooFew { .. })));
    }

    #[test]
    fn spearman_p_value_matches_t_table() {
        // rho = 0.6 with n = 4: t = 0.6 * sqrt(2 / 0.64) = 1.06066, df = 2,
        // two-sided p = 1 - t / sqrt(t^2 + 2) = 0.4
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert!((r.p - 0.4).abs() < 1e-9, "{}", r.p);
    }

    #[test]
    fn serializes_with_expected_keys() {
        let r = CorrelationResult { rho: 0.5, p: 0.1, n: 3 };
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"rho":0.5,"p":0.1,"n":3}"#);
        let x: Vec<f64> = (1..=6).map(f64::from).collect();
        let y = vec![0.0; 6];
        let v = serde_json::to_value(wilcoxon_paired(&x, &y).unwrap()).unwrap();
        for k in ["n", "w_plus", "w_minus", "z", "p", "effect_r"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
