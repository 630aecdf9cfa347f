use kgfield::opalgebra::{
    normal_order, normal_order_with, parse_expression, vacuum_expectation, wick_vev, FnIndex, FunctionRegistry,
    IpTable, Letter, OperatorExpression, Strategy as Order,
};
use kgfield::Complex64;
use proptest::prelude::*;

const FUNCS: usize = 5;

fn gram_table() -> impl Strategy<Value = IpTable> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), FUNCS * 3).prop_map(|raw| {
        let v: Vec<Vec<Complex64>> = raw
            .chunks(3)
            .map(|c| c.iter().map(|&(a, b)| Complex64::new(a, b)).collect())
            .collect();
        IpTable::from_fn(FUNCS, |i, j| v[i.0 - 1].iter().zip(&v[j.0 - 1]).map(|(a, b)| a.conj() * b).sum())
    })
}

fn indices(max_len: usize) -> impl Strategy<Value = Vec<FnIndex>> {
    prop::collection::vec((1..=FUNCS).prop_map(FnIndex), 0..=max_len)
}

fn phi(i: FnIndex) -> OperatorExpression {
    OperatorExpression::letter(Letter::create(i)) + OperatorExpression::letter(Letter::annihilate(i))
}

fn product(ix: &[FnIndex]) -> OperatorExpression {
    ix.iter().fold(OperatorExpression::identity(), |acc, &i| &acc * &phi(i))
}

fn letters() -> impl Strategy<Value = OperatorExpression> {
    prop::collection::vec((any::<bool>(), 1..=FUNCS), 0..6).prop_map(|ls| {
        ls.into_iter().fold(OperatorExpression::identity(), |acc, (c, i)| {
            let l = if c { Letter::create(FnIndex(i)) } else { Letter::annihilate(FnIndex(i)) };
            &acc * &OperatorExpression::letter(l)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engine_matches_wick(ip in gram_table(), ix in indices(8)) {
        let engine = vacuum_expectation(&product(&ix), &ip).unwrap();
        let wick = wick_vev(&ix, &ip).unwrap();
        prop_assert!((engine - wick).norm() <= 1e-10 * (1.0 + wick.norm()));
        if ix.len() % 2 == 1 {
            prop_assert_eq!(engine, Complex64::new(0.0, 0.0));
            prop_assert_eq!(wick, Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn normal_form_is_fixed_and_strategy_free(ip in gram_table(), e in letters()) {
        let left = normal_order(&e, &ip).unwrap();
        prop_assert!(left.is_normal_ordered());
        let again = normal_order(&left, &ip).unwrap();
        prop_assert!(again.approx_eq(&left, 1e-12));
        let right = normal_order_with(&e, &ip, Order::Rightmost).unwrap();
        prop_assert!(right.approx_eq(&left, 1e-10));
    }

    #[test]
    fn vev_is_constant_term_of_normal_form(ip in gram_table(), e in letters()) {
        let n = normal_order(&e, &ip).unwrap();
        let constant = n.coefficient(&kgfield::opalgebra::OperatorWord::identity());
        let vev = vacuum_expectation(&e, &ip).unwrap();
        prop_assert!((vev - constant).norm() <= 1e-10 * (1.0 + vev.norm()));
    }

    #[test]
    fn adjoint_conjugates_vev(ip in gram_table(), e in letters()) {
        let a = vacuum_expectation(&e, &ip).unwrap();
        let b = vacuum_expectation(&e.adjoint(), &ip).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-10 * (1.0 + a.norm()));
    }

    #[test]
    fn parsed_products_match_built_ones(ip in gram_table(), ix in prop::collection::vec((1..=FUNCS).prop_map(FnIndex), 1..=6)) {
        let text = ix.iter().map(|i| format!("phi[f{}]", i.0)).collect::<Vec<_>>().join(" ");
        let mut reg = FunctionRegistry::new();
        for i in 1..=FUNCS {
            reg.intern(&format!("f{i}"));
        }
        let parsed = parse_expression(&text, &mut reg).unwrap();
        prop_assert!(parsed.approx_eq(&product(&ix), 0.0));
        let v = vacuum_expectation(&parsed, &ip).unwrap();
        prop_assert!((v - wick_vev(&ix, &ip).unwrap()).norm() <= 1e-10 * (1.0 + v.norm()));
    }
}

#[test]
fn four_point_function_by_hand() {
    let ip = IpTable::from_fn(4, |i, j| Complex64::new((i.0 * 10 + j.0) as f64, (i.0 as f64) - (j.0 as f64)));
    let g = |a: usize, b: usize| ip.get(FnIndex(a), FnIndex(b)).unwrap();
    // ⟨φ1φ2φ3φ4⟩ = (2,1)(4,3) + (3,1)(4,2) + (4,1)(3,2).
    let expected = g(2, 1) * g(4, 3) + g(3, 1) * g(4, 2) + g(4, 1) * g(3, 2);
    let ix: Vec<FnIndex> = (1..=4).map(FnIndex).collect();
    let v = vacuum_expectation(&product(&ix), &ip).unwrap();
    assert!((v - expected).norm() < 1e-12);
}
