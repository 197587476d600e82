use super::*;
use proptest::prelude::*;

/// Deterministic pseudo-random stream for test points (splitmix64).
struct Stream(u64);

impl Stream {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [lo, hi).
    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }
}

#[test]
fn parse_ellipsoid_example() {
    let ast = parse_expression::<f64>("x0^2/4 + x1^2 + x2^2 - 1", 3).unwrap();
    assert_eq!(ast.dimension(), 3);
    assert_eq!(ast.distinct_variables(), 3);
}

#[test]
fn parse_constant_zero() {
    let ast = parse_expression::<f64>("0", 2).unwrap();
    assert_eq!(ast.distinct_variables(), 0);
    assert_eq!(ast.eval(&[3.0, -4.0]).unwrap(), 0.0);
}

#[test]
fn parse_unit_sphere() {
    let ast = parse_expression::<f64>("x0^2 + x1^2 + x2^2 - 1", 3).unwrap();
    assert_eq!(ast.distinct_variables(), 3);
    assert_eq!(ast.eval(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn jet_sphere_at_pole() {
    let ast = parse_expression::<f64>("x0^2 + x1^2 + x2^2 - 1", 3).unwrap();
    let j = ast.jet(&[1.0, 0.0, 0.0]).unwrap();
    assert_eq!(j.value, 0.0);
    assert_eq!(j.gradient, vec![2.0, 0.0, 0.0]);
    for i in 0..3 {
        for k in 0..3 {
            let expect = if i == k { 2.0 } else { 0.0 };
            assert_eq!(j.hessian.get(i, k), expect);
        }
    }
}

#[test]
fn jet_ellipsoid_hand_differentiated() {
    let ast = parse_expression::<f64>("x0^2/4 + x1^2 + x2^2 - 1", 3).unwrap();
    let j = ast.jet(&[0.0, 1.0, 0.0]).unwrap();
    assert_eq!(j.value, 0.0);
    assert_eq!(j.gradient, vec![0.0, 2.0, 0.0]);
    assert_eq!(j.hessian.get(0, 0), 0.5);
    assert_eq!(j.hessian.get(1, 1), 2.0);
    assert_eq!(j.hessian.get(2, 2), 2.0);
    assert_eq!(j.hessian.get(0, 1), 0.0);
}

#[test]
fn jet_sin_product_hand_differentiated() {
    let ast = parse_expression::<f64>("sin(x0)*x1", 2).unwrap();
    let j = ast.jet(&[0.0, 1.0]).unwrap();
    assert_eq!(j.value, 0.0);
    assert_eq!(j.gradient, vec![1.0, 0.0]);
    assert_eq!(j.hessian.get(0, 0), 0.0);
    assert_eq!(j.hessian.get(0, 1), 1.0);
    assert_eq!(j.hessian.get(1, 0), 1.0);
    assert_eq!(j.hessian.get(1, 1), 0.0);
}

#[test]
fn jet_of_constant_is_flat() {
    let ast = parse_expression::<f64>("3.5", 4).unwrap();
    let j = ast.jet(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(j.value, 3.5);
    assert!(j.gradient.iter().all(|&g| g == 0.0));
    for i in 0..4 {
        for k in 0..4 {
            assert_eq!(j.hessian.get(i, k), 0.0);
        }
    }
}

#[test]
fn syntax_error_carries_position() {
    match parse_expression::<f64>("x0 + * x1", 2) {
        Err(ExprError::Syntax { position, .. }) => assert_eq!(position, 5),
        other => panic!("expected syntax error, got {other:?}"),
    }
}

#[test]
fn unknown_identifier_rejected() {
    match parse_expression::<f64>("x0 + theta", 2) {
        Err(ExprError::UnknownIdentifier { name, .. }) => assert_eq!(name, "theta"),
        other => panic!("expected unknown identifier, got {other:?}"),
    }
}

#[test]
fn out_of_range_variable_is_dimension_mismatch() {
    match parse_expression::<f64>("x0 + x3", 3) {
        Err(ExprError::DimensionMismatch {
            name, dimension, ..
        }) => {
            assert_eq!(name, "x3");
            assert_eq!(dimension, 3);
        }
        other => panic!("expected dimension mismatch, got {other:?}"),
    }
}

#[test]
fn abs_rejected_as_non_smooth() {
    match parse_expression::<f64>("abs(x0) - 1", 1) {
        Err(ExprError::NonSmoothFunction { name, .. }) => assert_eq!(name, "abs"),
        other => panic!("expected non-smooth rejection, got {other:?}"),
    }
}

#[test]
fn floor_rejected_as_non_smooth() {
    assert!(matches!(
        parse_expression::<f64>("floor(x0)", 1),
        Err(ExprError::NonSmoothFunction { .. })
    ));
}

#[test]
fn division_by_zero_names_subexpression() {
    let ast = parse_expression::<f64>("1/(x0 - 1)", 1).unwrap();
    match ast.jet(&[1.0]) {
        Err(ExprError::Domain {
            operation,
            subexpression,
            ..
        }) => {
            assert_eq!(operation, "division by zero");
            assert_eq!(subexpression, "1/(x0-1)");
        }
        other => panic!("expected domain error, got {other:?}"),
    }
}

#[test]
fn log_of_negative_is_domain_error() {
    let ast = parse_expression::<f64>("log(x0)", 1).unwrap();
    assert!(matches!(
        ast.jet(&[-1.0]),
        Err(ExprError::Domain { operation: "log", .. })
    ));
    assert!(ast.jet(&[2.0]).is_ok());
}

#[test]
fn sqrt_of_negative_is_domain_error() {
    let ast = parse_expression::<f64>("sqrt(x0)", 1).unwrap();
    assert!(matches!(
        ast.jet(&[-0.5]),
        Err(ExprError::Domain { operation: "sqrt", .. })
    ));
}

#[test]
fn scientific_notation_literals() {
    let ast = parse_expression::<f64>("1.5e-2*x0 + 2E3", 1).unwrap();
    assert_eq!(ast.eval(&[2.0]).unwrap(), 0.03 + 2000.0);
}

#[test]
fn power_precedence_over_unary_minus() {
    // -x0^2 must parse as -(x0^2).
    let ast = parse_expression::<f64>("-x0^2", 1).unwrap();
    assert_eq!(ast.eval(&[3.0]).unwrap(), -9.0);
}

#[test]
fn power_left_associative_constant_fold() {
    let ast = parse_expression::<f64>("2^3^2", 1).unwrap();
    assert_eq!(ast.eval(&[0.0]).unwrap(), 64.0);
}

#[test]
fn parenthesized_constant_exponent_folds() {
    let ast = parse_expression::<f64>("x0^(1/2)", 1).unwrap();
    assert_eq!(ast.eval(&[4.0]).unwrap(), 2.0);
}

#[test]
fn variable_exponent_rejected() {
    assert!(matches!(
        parse_expression::<f64>("x0^x0", 1),
        Err(ExprError::Syntax { .. })
    ));
}

#[test]
fn hessian_symmetry_is_bitwise() {
    let ast = parse_expression::<f64>("exp(x0*x1)*sin(x1*x2) + x0^3/(2 + x2^2)", 3).unwrap();
    let j = ast.jet(&[0.3, -0.7, 1.1]).unwrap();
    for i in 0..3 {
        for k in 0..3 {
            assert_eq!(j.hessian.get(i, k).to_bits(), j.hessian.get(k, i).to_bits());
        }
    }
}

#[test]
fn f32_instantiation_evaluates() {
    let ast = parse_expression::<f32>("x0^2 + sin(x1)", 2).unwrap();
    let j = ast.jet(&[1.0f32, 0.0]).unwrap();
    assert!((j.value - 1.0).abs() < 1e-6);
    assert!((j.gradient[1] - 1.0).abs() < 1e-6);
}

/// Built-in test expressions with a sampling box per variable that keeps the
/// evaluation inside each function's domain.
fn fd_expressions() -> Vec<(&'static str, usize, f64, f64)> {
    vec![
        ("x0^2/4 + x1^2 + x2^2 - 1", 3, -1.5, 1.5),
        ("x0^2 + x1^2 + x2^2 - 1", 3, -1.5, 1.5),
        ("sin(x0)*x1", 2, -1.5, 1.5),
        ("exp(x0*x1) + cos(x1*x2)", 3, -1.2, 1.2),
        ("log(2 + x0^2 + x1^2)", 2, -1.5, 1.5),
        ("sqrt(1 + x0^2)*x1", 2, -1.5, 1.5),
        ("x0*x1*x2 - x2^3", 3, -1.5, 1.5),
        ("(x0 - x1)^4 + x0/(2 + x1^2)", 2, -1.5, 1.5),
        ("cos(x0)^2 + sin(x1)^2", 2, -1.5, 1.5),
        ("exp(-(x0^2 + x1^2)/2)", 2, -1.5, 1.5),
    ]
}

/// Central finite differences of the value: the independent oracle for jets.
/// Gradient step cbrt(eps), Hessian step eps^(1/4), each scaled per point.
fn fd_gradient(ast: &ExpressionAst<f64>, x: &[f64]) -> Vec<f64> {
    let h0 = f64::EPSILON.cbrt();
    (0..x.len())
        .map(|i| {
            let h = h0 * x[i].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (ast.eval(&xp).unwrap() - ast.eval(&xm).unwrap()) / (2.0 * h)
        })
        .collect()
}

fn fd_hessian(ast: &ExpressionAst<f64>, x: &[f64]) -> Vec<Vec<f64>> {
    let h0 = f64::EPSILON.powf(0.25);
    let n = x.len();
    let mut h_mat = vec![vec![0.0; n]; n];
    let f0 = ast.eval(x).unwrap();
    for i in 0..n {
        let hi = h0 * x[i].abs().max(1.0);
        for j in i..n {
            let v = if i == j {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += hi;
                xm[i] -= hi;
                (ast.eval(&xp).unwrap() - 2.0 * f0 + ast.eval(&xm).unwrap()) / (hi * hi)
            } else {
                let hj = h0 * x[j].abs().max(1.0);
                let mut xpp = x.to_vec();
                let mut xpm = x.to_vec();
                let mut xmp = x.to_vec();
                let mut xmm = x.to_vec();
                xpp[i] += hi;
                xpp[j] += hj;
                xpm[i] += hi;
                xpm[j] -= hj;
                xmp[i] -= hi;
                xmp[j] += hj;
                xmm[i] -= hi;
                xmm[j] -= hj;
                (ast.eval(&xpp).unwrap() - ast.eval(&xpm).unwrap() - ast.eval(&xmp).unwrap()
                    + ast.eval(&xmm).unwrap())
                    / (4.0 * hi * hj)
            };
            h_mat[i][j] = v;
            h_mat[j][i] = v;
        }
    }
    h_mat
}

#[test]
fn jets_match_finite_differences() {
    let mut stream = Stream(0x5eed_f00d);
    for (text, dim, lo, hi) in fd_expressions() {
        let ast = parse_expression::<f64>(text, dim).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..dim).map(|_| stream.uniform(lo, hi)).collect();
            let jet = ast.jet(&x).unwrap();

            let fd_g = fd_gradient(&ast, &x);
            let g_scale = fd_g.iter().fold(1.0f64, |m, &v| m.max(v.abs()));
            for i in 0..dim {
                let err = (jet.gradient[i] - fd_g[i]).abs() / g_scale;
                assert!(
                    err < 1e-6,
                    "gradient mismatch {err:e} for `{text}` at {x:?} (component {i})"
                );
            }

            let fd_h = fd_hessian(&ast, &x);
            let h_scale = fd_h
                .iter()
                .flatten()
                .fold(1.0f64, |m, &v| m.max(v.abs()));
            for i in 0..dim {
                for j in 0..dim {
                    let err = (jet.hessian.get(i, j) - fd_h[i][j]).abs() / h_scale;
                    assert!(
                        err < 1e-6,
                        "hessian mismatch {err:e} for `{text}` at {x:?} ({i},{j})"
                    );
                }
            }
        }
    }
}

fn arb_node(dim: usize) -> impl Strategy<Value = Node<f64>> {
    // Constants are non-negative: the parser only ever produces negative
    // values through Neg nodes, and the round trip is over its image.
    let leaf = prop_oneof![
        (0.0..3.0f64).prop_map(Node::Constant),
        (0..dim).prop_map(Node::Variable),
    ];
    leaf.prop_recursive(4, 24, 3, move |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop_oneof![
                Just(BinaryOp::Add),
                Just(BinaryOp::Sub),
                Just(BinaryOp::Mul),
                Just(BinaryOp::Div),
            ])
                .prop_map(|(a, b, op)| Node::Binary(op, Box::new(a), Box::new(b))),
            (inner.clone(), prop_oneof![
                Just(UnaryOp::Neg),
                Just(UnaryOp::Sin),
                Just(UnaryOp::Cos),
                Just(UnaryOp::Exp),
            ])
                .prop_map(|(a, op)| Node::Unary(op, Box::new(a))),
            (inner, 0u8..5).prop_map(|(a, e)| Node::Pow(Box::new(a), e as f64)),
        ]
    })
}

proptest! {
    /// Pretty-printing then re-parsing reproduces the same tree, hence
    /// identical evaluations everywhere.
    #[test]
    fn print_parse_round_trip(root in arb_node(3)) {
        let names: Vec<String> = (0..3).map(|i| format!("x{i}")).collect();
        let ast = ast_from_parts(root, names);
        let printed = ast.to_string();
        let reparsed = parse_expression::<f64>(&printed, 3)
            .unwrap_or_else(|e| panic!("reparse of `{printed}` failed: {e}"));
        prop_assert_eq!(&ast, &reparsed);

        // Spot-check evaluations too, including the error/value split.
        let mut stream = Stream(0xabcdef);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| stream.uniform(-2.0, 2.0)).collect();
            match (ast.eval(&x), reparsed.eval(&x)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a.to_bits(), b.to_bits()),
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "eval split: {:?} vs {:?}", a, b),
            }
        }
    }
}

#[test]
fn round_trip_of_representative_expressions() {
    for (text, dim) in [
        ("x0^2/4 + x1^2 + x2^2 - 1", 3),
        ("x0^3 + x1^2 + x2^2 - 1", 3),
        ("((x0^2+x1^2+x2^2)+3)^2 - 16*(x1^2+x2^2)", 3),
        ("-x0^2 - 1.5e0*sin(x1)", 2),
    ] {
        let ast = parse_expression::<f64>(text, dim).unwrap();
        let reparsed = parse_expression::<f64>(&ast.to_string(), dim).unwrap();
        assert_eq!(ast, reparsed, "round trip failed for `{text}`");
    }
}
