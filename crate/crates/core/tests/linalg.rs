use approx::assert_abs_diff_eq;
use catch_core::linalg::{numerical_rank, pivoted_qr, singular_values};
use catch_core::Matrix;
use proptest::prelude::*;

fn matrix_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-10.0f64..10.0, r * c)
            .prop_map(move |data| Matrix::from_col_major(r, c, data).unwrap())
    })
}

/// `b * c` with inner dimension `k`: rank at most `k`.
fn low_rank_strategy() -> impl Strategy<Value = (Matrix, usize)> {
    (2usize..10, 2usize..10, 1usize..4).prop_flat_map(|(r, c, k)| {
        (
            prop::collection::vec(-1.0f64..1.0, r * k),
            prop::collection::vec(-1.0f64..1.0, k * c),
        )
            .prop_map(move |(bd, cd)| {
                let b = Matrix::from_col_major(r, k, bd).unwrap();
                let c = Matrix::from_col_major(k, c, cd).unwrap();
                (b.matmul(&c).unwrap(), k)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn qr_reconstructs_permuted_input(a in matrix_strategy(12, 8)) {
        let qr = pivoted_qr(&a).unwrap();
        let k = a.rows().min(a.cols());
        prop_assert_eq!((qr.q.rows(), qr.q.cols()), (a.rows(), k));
        prop_assert_eq!((qr.r.rows(), qr.r.cols()), (k, a.cols()));

        let ap = a.select_columns(&qr.perm);
        let qr_prod = qr.q.matmul(&qr.r).unwrap();
        let scale = 1.0 + a.max_abs();
        for j in 0..a.cols() {
            for i in 0..a.rows() {
                prop_assert!((ap[(i, j)] - qr_prod[(i, j)]).abs() <= 1e-12 * scale * a.rows() as f64);
            }
        }
        let qtq = qr.q.transpose().matmul(&qr.q).unwrap();
        for i in 0..k {
            for j in 0..k {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((qtq[(i, j)] - expected).abs() <= 1e-13);
            }
        }
        for j in 0..a.cols() {
            for i in j + 1..k {
                prop_assert_eq!(qr.r[(i, j)], 0.0);
            }
        }
        for i in 0..k {
            prop_assert!(qr.r[(i, i)] >= 0.0);
            if i + 1 < k {
                prop_assert!(qr.r[(i + 1, i + 1)] <= qr.r[(i, i)] * (1.0 + 1e-12));
            }
        }
        let mut sorted = qr.perm.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..a.cols()).collect::<Vec<_>>());
    }

    #[test]
    fn rank_is_invariant_under_row_permutation_and_transpose((a, k) in low_rank_strategy(), shift in 0usize..10) {
        let rank = numerical_rank(&a, None).unwrap();
        prop_assert!(rank <= k);
        let rows: Vec<usize> = (0..a.rows()).map(|i| (i + shift) % a.rows()).collect();
        prop_assert_eq!(numerical_rank(&a.select_rows(&rows), None).unwrap(), rank);
        prop_assert_eq!(numerical_rank(&a.transpose(), None).unwrap(), rank);
    }

    #[test]
    fn singular_values_are_sorted_and_bound_the_frobenius_norm(a in matrix_strategy(8, 8)) {
        let s = singular_values(&a).unwrap();
        prop_assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let fro2: f64 = s.iter().map(|x| x * x).sum();
        let direct = a.frobenius_norm().powi(2);
        prop_assert!((fro2 - direct).abs() <= 1e-10 * (1.0 + direct));
    }
}

#[test]
fn rank_of_generic_low_rank_product_is_inner_dimension() {
    let b = Matrix::from_rows(&[[1.0, 0.5], [0.2, -1.0], [3.0, 0.1], [0.4, 0.4]]).unwrap();
    let c = Matrix::from_rows(&[[1.0, 2.0, -1.0, 0.3, 0.0], [0.0, 1.0, 4.0, -2.0, 1.0]]).unwrap();
    let a = b.matmul(&c).unwrap();
    assert_eq!(numerical_rank(&a, None).unwrap(), 2);
    let s = singular_values(&a).unwrap();
    assert_abs_diff_eq!(s[2], 0.0, epsilon = 1e-13);
}
