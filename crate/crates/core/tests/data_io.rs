use dpcd_core::data::{
    feature_bounds, generate_sparse_lasso, load_csv, read_csv, standardize, SparseRegression,
};
use dpcd_core::{Dataset, LabelColumn};

#[test]
fn standardized_columns_have_zero_mean_unit_variance() {
    let (d, _) = SparseRegression {
        seed: 3,
        ..SparseRegression::new(500, 7, 3)
    }
    .generate::<f64>()
    .unwrap();
    let mut d = d;
    d.scale_column(2, 100.0);
    let (s, params) = standardize(&d);
    let n = s.n() as f64;
    for j in 0..s.p() {
        let col = s.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12, "column {j} mean {mean}");
        assert!((var - 1.0).abs() < 1e-12, "column {j} variance {var}");
    }
    assert_eq!(s.labels(), d.labels());
    assert_eq!(params.apply(&d).unwrap(), s);
}

#[test]
fn csv_round_trip() {
    let (d, _) = generate_sparse_lasso::<f64>(20, 4, 2, 0.3, 9).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    d.save_csv(&path, "target").unwrap();
    let back: Dataset = load_csv(&path, &LabelColumn::Name("target".into())).unwrap();
    assert_eq!((back.n(), back.p()), (20, 4));
    assert_eq!(back.labels(), d.labels());
    for j in 0..4 {
        assert_eq!(back.column(j), d.column(j));
    }
    let by_index: Dataset = load_csv(&path, &LabelColumn::Index(4)).unwrap();
    assert_eq!(by_index.labels(), d.labels());
}

#[test]
fn label_column_may_come_first() {
    let text = "y,a,b\n1,2,3\n-1,4,5\n";
    let d: Dataset = read_csv(text.as_bytes(), &LabelColumn::Name("y".into())).unwrap();
    assert_eq!(d.labels(), &[1.0, -1.0]);
    assert_eq!(d.column(1), &[3.0, 5.0]);
    assert_eq!(
        d.feature_names().unwrap(),
        &["a".to_string(), "b".to_string()]
    );
}

#[test]
fn malformed_csv_is_rejected() {
    let missing = "a,b\n1,2\n";
    assert!(read_csv::<f64, _>(missing.as_bytes(), &LabelColumn::Name("y".into())).is_err());
    let bad = "a,y\n1,x\n";
    assert!(read_csv::<f64, _>(bad.as_bytes(), &LabelColumn::Name("y".into())).is_err());
}

#[test]
fn generator_shape_and_sparsity() {
    let (d, w) = generate_sparse_lasso::<f64>(1000, 1000, 10, 1.0, 0).unwrap();
    assert_eq!((d.n(), d.p()), (1000, 1000));
    assert_eq!(w.iter().filter(|&&v| v != 0.0).count(), 10);
    let (again, w2) = generate_sparse_lasso::<f64>(1000, 1000, 10, 1.0, 0).unwrap();
    assert_eq!(again, d);
    assert_eq!(w2, w);
}

#[test]
fn noiseless_empty_combination_gives_zero_labels() {
    let (d, w) = generate_sparse_lasso::<f64>(50, 5, 0, 0.0, 1).unwrap();
    assert!(d.labels().iter().all(|&y| y == 0.0));
    assert!(w.iter().all(|&v| v == 0.0));
    assert!(generate_sparse_lasso::<f64>(5, 3, 4, 1.0, 0).is_err());
}

#[test]
fn bounds_are_column_maxima() {
    let d = Dataset::from_rows(&[vec![1.0, -4.0], vec![-2.0, 3.0]], vec![0.0, 0.0]).unwrap();
    assert_eq!(feature_bounds(&d).max_abs, vec![2.0, 4.0]);
}

#[test]
fn correlated_features() {
    let base = SparseRegression {
        seed: 5,
        ..SparseRegression::new(20_000, 4, 2)
    };
    let (d, _) = SparseRegression {
        feature_correlation: 0.6,
        ..base.clone()
    }
    .generate::<f64>()
    .unwrap();
    let n = d.n() as f64;
    for (a, b) in [(0, 1), (1, 3)] {
        let r: f64 = d
            .column(a)
            .iter()
            .zip(d.column(b))
            .map(|(x, y)| x * y)
            .sum::<f64>()
            / n;
        assert!((r - 0.6).abs() < 0.03, "correlation {r}");
    }
    let (plain, _) = base.generate::<f64>().unwrap();
    let (again, _) = SparseRegression {
        feature_correlation: 0.0,
        ..base
    }
    .generate::<f64>()
    .unwrap();
    assert_eq!(plain, again);
    assert!(SparseRegression {
        feature_correlation: 1.0,
        ..SparseRegression::new(10, 2, 1)
    }
    .generate::<f64>()
    .is_err());
}
