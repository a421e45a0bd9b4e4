mod common;

use proptest::prelude::*;
use spgemm_core::io::{read_binary, read_matrix_market, write_binary, write_matrix_market};
use spgemm_core::oracle::oracle_spgemm;
use spgemm_core::{CsrMatrix, DuplicatePolicy};

proptest! {
    #[test]
    fn triplet_round_trip(m in common::csr(30)) {
        let t = m.to_triplets();
        let back = CsrMatrix::from_triplets(m.n_rows(), m.n_cols(), &t, DuplicatePolicy::Error).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn transpose_is_involution(m in common::csr(30)) {
        let t = m.transpose();
        prop_assert!(t.validate().is_empty());
        prop_assert_eq!(t.transpose(), m);
    }

    #[test]
    fn identity_is_neutral(m in common::csr(30)) {
        let left = oracle_spgemm(&CsrMatrix::identity(m.n_rows()), &m).unwrap();
        let right = oracle_spgemm(&m, &CsrMatrix::identity(m.n_cols())).unwrap();
        prop_assert_eq!(&left, &m);
        prop_assert_eq!(&right, &m);
    }

    #[test]
    fn file_formats_round_trip(m in common::csr(20)) {
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &m).unwrap();
        prop_assert_eq!(read_matrix_market(&buf[..], false).unwrap(), m.clone());
        let mut buf = Vec::new();
        write_binary(&mut buf, &m).unwrap();
        prop_assert_eq!(read_binary(&buf[..]).unwrap(), m);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_matches_dense_loop((a, b) in common::sparse_pair(200, 0.1)) {
        let c = oracle_spgemm(&a, &b).unwrap();
        common::assert_matches_dense(&c, &common::dense_product(&a, &b), 1e-12);
        // stored iff some product reached the position
        for i in 0..a.n_rows() {
            for j in 0..b.n_cols() {
                let touched = (0..a.n_cols()).any(|k| a.get(i, k).is_some() && b.get(k, j).is_some());
                prop_assert_eq!(c.get(i, j).is_some(), touched, "({}, {})", i, j);
            }
        }
    }
}
