use mrle_core::{MatrixList, Tensor};
use proptest::prelude::*;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 1..5)
}

fn tensor_with_dims(dims: Vec<usize>) -> impl Strategy<Value = Tensor> {
    let len: usize = dims.iter().product();
    prop::collection::vec(-5.0f64..5.0, len).prop_map(move |d| Tensor::new(&dims, d).unwrap())
}

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    dims_strategy().prop_flat_map(tensor_with_dims)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-3.0f64..3.0, rows * cols)
        .prop_map(move |d| Tensor::matrix(rows, cols, d).unwrap())
}

/// Mode product by explicit index loops.
fn naive_mode_product(t: &Tensor, c: &Tensor, mode: usize) -> Tensor {
    let mut dims = t.dims().to_vec();
    dims[mode] = c.nrows();
    Tensor::from_fn(&dims, |ix| {
        let mut src = ix.to_vec();
        (0..t.dims()[mode])
            .map(|i| {
                src[mode] = i;
                t.get(&src) * c.get(&[ix[mode], i])
            })
            .sum()
    })
    .unwrap()
}

fn close(a: &Tensor, b: &Tensor, tol: f64) -> bool {
    a.dims() == b.dims()
        && a.data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #[test]
    fn matricize_roundtrip((t, mode) in tensor_strategy().prop_flat_map(|t| {
        let p = t.order();
        (Just(t), 0..p)
    })) {
        let m = t.matricize(mode).unwrap();
        prop_assert_eq!(m.nrows(), t.dims()[mode]);
        prop_assert_eq!(Tensor::dematricize(&m, mode, t.dims()).unwrap(), t);
    }

    #[test]
    fn mode_product_matches_loops((t, mode, c) in tensor_strategy().prop_flat_map(|t| {
        let p = t.order();
        (Just(t), 0..p)
    }).prop_flat_map(|(t, mode)| {
        let bk = t.dims()[mode];
        (Just(t), Just(mode), matrix(3, bk))
    })) {
        let fast = t.mode_product(&c, mode).unwrap();
        prop_assert!(close(&fast, &naive_mode_product(&t, &c, mode), 1e-12));
        // matricized form: (T x_k C)_(k) = C T_(k)
        let lhs = fast.matricize(mode).unwrap();
        let rhs = c.matmul(&t.matricize(mode).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn distinct_mode_products_commute((t, a, b) in prop::collection::vec(1usize..4, 2..5)
        .prop_flat_map(tensor_with_dims)
        .prop_flat_map(|t| {
            let (b0, b1) = (t.dims()[0], t.dims()[1]);
            (Just(t), matrix(2, b0), matrix(3, b1))
        })) {
        let ab = t.mode_product(&a, 0).unwrap().mode_product(&b, 1).unwrap();
        let ba = t.mode_product(&b, 1).unwrap().mode_product(&a, 0).unwrap();
        prop_assert!(close(&ab, &ba, 1e-12));
    }

    #[test]
    fn same_mode_products_compose((t, a, b) in tensor_strategy().prop_flat_map(|t| {
        let b0 = t.dims()[0];
        (Just(t), matrix(3, b0), matrix(2, 3))
    })) {
        let seq = t.mode_product(&a, 0).unwrap().mode_product(&b, 0).unwrap();
        let once = t.mode_product(&b.matmul(&a).unwrap(), 0).unwrap();
        prop_assert!(close(&seq, &once, 1e-12));
    }

    #[test]
    fn tucker_is_sequential((t, a, b) in prop::collection::vec(1usize..4, 3..4)
        .prop_flat_map(tensor_with_dims)
        .prop_flat_map(|t| {
            let (b1, b2) = (t.dims()[1], t.dims()[2]);
            (Just(t), matrix(b1, b1), matrix(2, b2))
        })) {
        let list = MatrixList::new(1, vec![a.clone(), b.clone()]).unwrap();
        let expected = t.mode_product(&a, 1).unwrap().mode_product(&b, 2).unwrap();
        prop_assert_eq!(t.tucker_product(&list).unwrap(), expected);
    }

    #[test]
    fn leading_contraction_and_outer_are_adjoint((t, z, s) in prop::collection::vec(1usize..4, 2..4)
        .prop_flat_map(tensor_with_dims)
        .prop_flat_map(|t| {
            let b0 = t.dims()[0];
            let rest = t.dims()[1..].to_vec();
            (Just(t), prop::collection::vec(-2.0f64..2.0, b0), tensor_with_dims(rest))
        })) {
        // <T x_0 z, S> = <T, z o S>
        let lhs = t.contract_leading(&z).unwrap().inner(&s).unwrap();
        let rhs = t.inner(&Tensor::outer_leading(&z, &s).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        // contraction equals a mode product with a 1 x b_0 row
        let row = Tensor::matrix(1, z.len(), z.clone()).unwrap();
        let via_mode = t.mode_product(&row, 0).unwrap();
        prop_assert!(close(&via_mode.reshape(&t.dims()[1..]).unwrap(), &t.contract_leading(&z).unwrap(), 1e-12));
    }

    #[test]
    fn inner_product_axioms(t in tensor_strategy()) {
        prop_assert!(t.norm_sq() >= 0.0);
        prop_assert!((t.inner(&t).unwrap() - t.norm_sq()).abs() <= 1e-12 * (1.0 + t.norm_sq()));
        let doubled = t.add(&t).unwrap();
        prop_assert!(close(&doubled, &t.scale(2.0), 1e-15));
        prop_assert_eq!(t.sub(&t).unwrap().max_abs(), 0.0);
    }
}

#[test]
fn matricize_example() {
    let t = Tensor::from_fn(&[2, 2, 2], |ix| (ix[0] + 2 * ix[1] + 4 * ix[2]) as f64).unwrap();
    let m = t.matricize(1).unwrap();
    assert_eq!(m.dims(), &[2, 4]);
    assert_eq!(m.data(), &[0.0, 4.0, 1.0, 5.0, 2.0, 6.0, 3.0, 7.0]);
}

#[test]
fn shape_errors() {
    let t = Tensor::zeros(&[2, 3]).unwrap();
    assert!(t.mode_product(&Tensor::zeros(&[2, 2]).unwrap(), 1).is_err());
    assert!(t.mode_product(&Tensor::zeros(&[2, 2]).unwrap(), 2).is_err());
    assert!(t.matricize(5).is_err());
    assert!(Tensor::new(&[2], vec![1.0, f64::NAN]).is_err());
    assert!(Tensor::new(&[0], vec![]).is_err());
    assert!(t.contract_leading(&[1.0]).is_err());
}
