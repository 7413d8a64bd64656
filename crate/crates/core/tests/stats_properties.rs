mod common;

use assocnet::activation::{ActivationMatrix, ResolvedParams};
use assocnet::stats::{max_effect_r, midranks, normalize, spearman, wilcoxon_paired, NormMode};
use common::close;
use proptest::prelude::*;

fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (5usize..60).prop_flat_map(|n| {
        let v = proptest::collection::vec(-50i32..50, n);
        (v.clone(), v).prop_map(|(x, y)| {
            (x.into_iter().map(|a| a as f64 / 4.0).collect(), y.into_iter().map(|a| a as f64 / 4.0).collect())
        })
    })
}

fn matrix(rows: usize, cols: Vec<Vec<f64>>) -> ActivationMatrix {
    let p = ResolvedParams { retention: 0.5, decay: 0.0, suppress: 0.0, initial: 1.0, iterations: 1, weighted: true };
    ActivationMatrix::from_columns(
        (0..rows).map(|i| format!("n{i}")).collect(),
        (0..cols.len()).map(|i| format!("p{i}")).collect(),
        cols,
        p,
    )
}

proptest! {
    #[test]
    fn wilcoxon_antisymmetric((x, y) in pairs()) {
        let (Ok(a), Ok(b)) = (wilcoxon_paired(&x, &y), wilcoxon_paired(&y, &x)) else { return Ok(()) };
        prop_assert_eq!(a.n, b.n);
        prop_assert_eq!(a.w_plus, b.w_minus);
        prop_assert!(close(a.z, -b.z, 1e-12));
        prop_assert!(close(a.effect_r, -b.effect_r, 1e-12));
        prop_assert!(close(a.p, b.p, 1e-12));
    }

    #[test]
    fn wilcoxon_bounds_and_scale_invariance((x, y) in pairs(), k in -6i32..6) {
        let Ok(r) = wilcoxon_paired(&x, &y) else { return Ok(()) };
        prop_assert!((0.0..=1.0).contains(&r.p));
        prop_assert!(r.effect_r.abs() <= max_effect_r(r.n) + 1e-12);
        prop_assert!(close(r.w_plus + r.w_minus, (r.n * (r.n + 1)) as f64 / 2.0, 1e-12));
        // power-of-two scaling keeps differences and ties exact
        let scale = 2f64.powi(k);
        let xs: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let ys: Vec<f64> = y.iter().map(|v| v * scale).collect();
        if let Ok(s) = wilcoxon_paired(&xs, &ys) {
            prop_assert_eq!(s.n, r.n);
            prop_assert!(close(s.z, r.z, 1e-9));
        }
    }

    #[test]
    fn spearman_symmetric_bounded_and_rank_invariant((x, y) in pairs()) {
        let Ok(r) = spearman(&x, &y) else { return Ok(()) };
        let s = spearman(&y, &x).unwrap();
        prop_assert!(close(r.rho, s.rho, 1e-12));
        prop_assert!((-1.0..=1.0).contains(&r.rho));
        prop_assert!((0.0..=1.0).contains(&r.p));
        let fx: Vec<f64> = x.iter().map(|v| v * v * v + 2.0 * v).collect();
        let m = spearman(&fx, &y).unwrap();
        prop_assert!(close(m.rho, r.rho, 1e-12));
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        prop_assert!(close(spearman(&x, &neg).unwrap().rho, -r.rho, 1e-12));
    }

    #[test]
    fn midranks_sum(v in proptest::collection::vec(-5i32..5, 1..50)) {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        let (r, _) = midranks(&v);
        let n = v.len() as f64;
        prop_assert!(close(r.iter().sum::<f64>(), n * (n + 1.0) / 2.0, 1e-12));
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] < v[j] { prop_assert!(r[i] < r[j]); }
                if v[i] == v[j] { prop_assert_eq!(r[i], r[j]); }
            }
        }
    }

    #[test]
    fn normalization_row_invariants(cols in proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, 6), 1..6)) {
        let m = matrix(6, cols);
        let l1 = normalize(&m, NormMode::L1);
        let mx = normalize(&m, NormMode::Max);
        let z = normalize(&m, NormMode::Zscore);
        for r in 0..6 {
            let row = l1.values.row(r);
            let s: f64 = row.iter().sum();
            prop_assert!(s == 0.0 || close(s, 1.0, 1e-12));
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            let row = mx.values.row(r);
            let top = row.iter().copied().fold(0.0, f64::max);
            prop_assert!(top == 0.0 || close(top, 1.0, 1e-12));
            let row = z.values.row(r);
            let n = row.len() as f64;
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            // constant rows are left as they are
            prop_assert!(var < 1e-9 || (mean.abs() < 1e-9 && close(var, 1.0, 1e-9)));
        }
    }
}
