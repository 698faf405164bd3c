use phgcalc::grading::Weights;
use phgcalc::phg::construction::EPS_CAP;
use phgcalc::phg::homogenize::weighted_parts;
use phgcalc::phg::*;
use phgcalc::symbol::checks::homogeneous_check;
use phgcalc::symbol::cutoffs::qnorm_pow;
use phgcalc::symbol::*;
use proptest::prelude::*;

fn layout(rho: &[u32]) -> Layout {
    Layout::new(0, Weights::new(rho.to_vec()).unwrap(), true)
}

fn xi(l: &Layout, k: usize) -> SymbolExpr {
    SymbolExpr::var(l.xi(k))
}

fn t(l: &Layout) -> SymbolExpr {
    SymbolExpr::var(l.t())
}

fn eval1(e: &SymbolExpr, p: &[f64]) -> f64 {
    Tape::compile(e).unwrap().eval(p).unwrap()
}

fn sample_points(d: usize) -> Vec<Vec<f64>> {
    let base = [0.3, -1.7, 2.5, 0.05, -0.8, 11.0];
    let ts = [0.0, 1e-4, 2e-3, -0.4, 0.75, 1.0, -1.5, 3.0];
    let mut out = Vec::new();
    for (i, &tv) in ts.iter().enumerate() {
        let mut p: Vec<f64> = (0..d).map(|k| base[(i + k) % base.len()] * (1.0 + i as f64)).collect();
        p.push(tv);
        out.push(p);
    }
    out
}

fn e1_terms(l: &Layout) -> Vec<SymbolExpr> {
    let f = l.frame();
    vec![qnorm_pow(&f, 2.0), xi(l, 0), xi(l, 1).powi(2).div(&qnorm_pow(&f, 2.0))]
}

#[test]
fn homogenize_worked_example() {
    let l = layout(&[1, 2]);
    let a = SymbolExpr::one().add(&xi(&l, 0).powi(2)).add(&xi(&l, 1));
    let u = homogenize_polynomial(&a, 2, &l).unwrap();
    for p in sample_points(2) {
        let want = p[2] * p[2] + p[0] * p[0] + p[1];
        assert!((eval1(&u, &p) - want).abs() <= 1e-12 * want.abs().max(1.0), "{p:?}");
    }
}

#[test]
fn homogenize_homogeneous_and_constant_inputs() {
    let l = layout(&[1, 1]);
    let a = xi(&l, 0).mul(&xi(&l, 1)).scale(3.0);
    let u = homogenize_polynomial(&a, 2, &l).unwrap();
    assert!(!u.depends_on(l.t()));
    let c = homogenize_polynomial(&SymbolExpr::one(), 3, &l).unwrap();
    for p in sample_points(2) {
        assert_eq!(eval1(&u, &p), 3.0 * (p[0] * p[1]));
        assert_eq!(eval1(&c, &p), p[2].powi(3));
    }
}

#[test]
fn homogenize_rejects_excess_degree() {
    let l = layout(&[1, 2]);
    let a = xi(&l, 1).powi(2);
    assert!(matches!(homogenize_polynomial(&a, 3, &l), Err(PhgError::DegreeTooHigh { degree: 4, m: 3 })));
    let b = xi(&l, 0).exp();
    assert!(matches!(homogenize_polynomial(&b, 3, &l), Err(PhgError::NotPolynomial(_))));
}

#[test]
fn homogenize_keeps_base_coefficients() {
    let l = Layout::new(1, Weights::new(vec![1, 1]).unwrap(), true);
    let a = SymbolExpr::var(0).exp().mul(&xi(&l, 0)).add(&SymbolExpr::var(0));
    let u = homogenize_polynomial(&a, 2, &l).unwrap();
    let p = [0.4, 1.5, -2.0, 0.7];
    let want = 0.4f64.exp() * 1.5 * 0.7 + 0.4 * 0.49;
    assert!((eval1(&u, &p) - want).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn homogenized_polynomials_are_homogeneous(
        coeffs in proptest::collection::vec(-3.0f64..3.0, 6),
        m in 3u32..5,
    ) {
        let l = layout(&[1, 2]);
        let (x1, x2) = (xi(&l, 0), xi(&l, 1));
        let monomials = [
            SymbolExpr::one(), x1.clone(), x2.clone(), x1.powi(2), x1.mul(&x2), x1.powi(3),
        ];
        let a = SymbolExpr::sum(coeffs.iter().zip(&monomials).map(|(c, mo)| mo.scale(*c)));
        let u = homogenize_polynomial(&a, m, &l).unwrap();
        let grid = EvaluationGrid::standard(0, &l.extended_frame(), 3).unwrap();
        let rep = homogeneous_check(&u, m as f64, &grid).unwrap();
        prop_assert!(rep.max_violation <= 1e-10, "{}", rep.max_violation);
        let parts = weighted_parts(&a, m, &l.without_t()).unwrap();
        let one = u.restrict(l.t(), 1.0);
        for p in sample_points(2) {
            let q = &p[..2];
            let direct: f64 = parts.iter().map(|e| eval1(e, q)).sum();
            let want = eval1(&a, q);
            prop_assert!((eval1(&one, q) - want).abs() <= 1e-10 * want.abs().max(1.0));
            prop_assert!((direct - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }
}

#[test]
fn divide_by_t_cancels_explicit_factors() {
    let l = layout(&[1, 1]);
    let opts = PhgOptions::default();
    let q = divide_by_t(&t(&l).powi(2), &l, &opts).unwrap();
    assert!(matches!(q.node(), Node::Var(s) if *s == l.t()));
    let r = divide_by_t(&t(&l).mul(&xi(&l, 0)), &l, &opts).unwrap();
    assert!(matches!(r.node(), Node::Var(s) if *s == l.xi(0)));
}

#[test]
fn divide_by_t_matches_quotient_across_switch() {
    let l = layout(&[1, 1]);
    let opts = PhgOptions::default();
    let n2 = qnorm_pow(&l.frame(), 2.0);
    let f = t(&l).powi(2).add(&n2).sub(&n2.scale(1.0)).add(&t(&l).mul(&xi(&l, 1)).scale(0.5));
    let q = divide_by_t(&f, &l, &opts).unwrap();
    for tv in [0.0, 1e-9, 5e-4, 9.99e-4, 1e-3, 0.3, -2.0] {
        let p = [1.3, -0.7, tv];
        let want = tv + 0.5 * -0.7;
        assert!((eval1(&q, &p) - want).abs() < 1e-12, "t = {tv}");
    }
}

#[test]
fn divide_by_t_rejects_nonvanishing_input() {
    let l = layout(&[1, 1]);
    let f = t(&l).add(&SymbolExpr::one());
    match divide_by_t(&f, &l, &PhgOptions::default()) {
        Err(PhgError::NotInI0 { value, .. }) => assert_eq!(value, 1.0),
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quotient_integral_form_is_exact_on_polynomials(
        c in proptest::collection::vec(-2.0f64..2.0, 5),
        tv in -1e-3f64..1e-3,
        x in -3.0f64..3.0,
    ) {
        let l = layout(&[1]);
        let tt = t(&l);
        let ex = xi(&l, 0).exp();
        let g = SymbolExpr::sum(c.iter().enumerate().map(|(k, &ck)| tt.powi(k as i32).scale(ck))).mul(&ex);
        let f = SymbolExpr::sum(c.iter().enumerate().map(|(k, &ck)| tt.powi(k as i32 + 1).mul(&ex).scale(ck)));
        let q = divide_by_t(&f, &l, &PhgOptions::default()).unwrap();
        let want = eval1(&g, &[x, tv]);
        prop_assert!((eval1(&q, &[x, tv]) - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn make_b_requires_a_matching_certificate() {
    let l = layout(&[1, 1]);
    let a = qnorm_pow(&l.frame(), 2.0);
    assert!(matches!(make_b(&a, 2.0, &l, None), Err(PhgError::Uncertified(_))));
    let grid = EvaluationGrid::standard(0, &l.frame(), 0).unwrap();
    let cert = certify_hs(&a, 2.0, &grid, &PhgOptions::default()).unwrap();
    assert!(matches!(make_b(&a, 1.0, &l, Some(&cert)), Err(PhgError::Uncertified(_))));
    let b = make_b(&a, 2.0, &l, Some(&cert)).unwrap();
    for p in sample_points(2) {
        let (x, y, tv) = (p[0], p[1], p[2]);
        assert!((eval1(&b, &p) - (x * x + y * y)).abs() <= 1e-12 * (x * x + y * y), "{tv}");
    }
    let bad = qnorm_pow(&l.frame(), 2.0).add(&xi(&l, 0));
    assert!(matches!(certify_hs(&bad, 2.0, &grid, &PhgOptions::default()), Err(PhgError::Uncertified(_))));
}

#[test]
fn extraction_of_polynomial_extension() {
    let l = layout(&[1, 1]);
    let u = t(&l).powi(2).add(&qnorm_pow(&l.frame(), 2.0));
    let grid = EvaluationGrid::standard(0, &l.extended_frame(), 0).unwrap();
    let opts = PhgOptions::default();
    let cert = certify_hs(&u, 2.0, &grid, &opts).unwrap();
    let ex = extract_expansion(&u, 2.0, 2, &l, &cert, &opts).unwrap();
    let want = |j: usize, p: &[f64]| match j {
        0 => p[0] * p[0] + p[1] * p[1],
        1 => 0.0,
        _ => 1.0,
    };
    for r in grid.shells() {
        for p in grid.points_at(*r, false) {
            for (j, term) in ex.expansion.terms.iter().enumerate() {
                let v = eval1(&term.expr, &p[..2]);
                let w = want(j, &p);
                assert!((v - w).abs() <= 1e-10 * w.abs().max(1.0), "a_{j} at {p:?}: {v} vs {w}");
            }
            let rem = eval1(ex.expansion.remainder.as_ref().unwrap(), &p);
            assert!(rem.abs() <= 1e-10, "u_3 at {p:?}: {rem}");
        }
    }
}

#[test]
fn extracted_terms_are_hs_of_decreasing_order() {
    let l = layout(&[1, 2]);
    let a = SymbolExpr::one().add(&xi(&l, 0).powi(2)).add(&xi(&l, 1));
    let u = homogenize_polynomial(&a, 2, &l).unwrap();
    let opts = PhgOptions::default();
    let grid = EvaluationGrid::standard(0, &l.extended_frame(), 1).unwrap();
    let cert = certify_hs(&u, 2.0, &grid, &opts).unwrap();
    let ex = extract_expansion(&u, 2.0, 3, &l, &cert, &opts).unwrap();
    let xi_grid = EvaluationGrid::standard(0, &l.frame(), 1).unwrap();
    for term in &ex.expansion.terms {
        let rep = hs_check(&term.expr, term.order, &xi_grid, &HS_SAMPLES, &opts.check).unwrap();
        assert!(rep.pass, "order {}", term.order);
    }
    let sum = ex.expansion.partial_sum(3);
    for p in sample_points(2) {
        let q = &p[..2];
        let want = 1.0 + q[0] * q[0] + q[1];
        assert!((eval1(&sum, q) - want).abs() <= 1e-10 * want.abs().max(1.0));
    }
}

#[test]
fn epsilon_schedule_examples() {
    let l = layout(&[1, 1]);
    let grid = EvaluationGrid::standard(0, &l.frame(), 0).unwrap();
    let opts = CheckOptions::default();
    let single = Expansion::on_the_nose(0.0, &l, vec![SymbolExpr::one()]);
    let s = epsilon_schedule(&single, &grid, &opts).unwrap();
    assert_eq!(s.eps, vec![EPS_CAP]);
    assert!((s.constants[0] - 1.0).abs() < 1e-12);
    let zeros = Expansion::on_the_nose(0.0, &l, vec![SymbolExpr::zero(); 4]);
    let z = epsilon_schedule(&zeros, &grid, &opts).unwrap();
    assert_eq!(z.eps, vec![0.25, 0.25, 1.0 / 16.0, 1.0 / 64.0]);
}

#[test]
fn epsilon_schedule_rejects_non_symbols_and_unsplit_terms() {
    let l = layout(&[1, 1]);
    let grid = EvaluationGrid::standard(0, &l.frame(), 0).unwrap();
    let wrong = Expansion::on_the_nose(0.0, &l, vec![qnorm_pow(&l.frame(), 2.0)]);
    assert!(matches!(
        epsilon_schedule(&wrong, &grid, &CheckOptions::default()),
        Err(PhgError::TermNotSymbol { term: 0, .. })
    ));
    let mut unsplit = Expansion::on_the_nose(0.0, &l, vec![SymbolExpr::one()]);
    unsplit.terms[0].kind = Homogeneity::ModuloSchwartz;
    assert!(epsilon_schedule(&unsplit, &grid, &CheckOptions::default()).is_err());
}

#[test]
fn build_rejects_short_schedule() {
    let l = layout(&[1, 1]);
    let grid = EvaluationGrid::standard(0, &l.frame(), 0).unwrap();
    let exp = Expansion::on_the_nose(2.0, &l, e1_terms(&l));
    let mut s = epsilon_schedule(&exp, &grid, &CheckOptions::default()).unwrap();
    s.eps.truncate(2);
    assert!(matches!(build_extension(&exp, &s), Err(PhgError::ScheduleTooShort { needed: 3, have: 2 })));
}

#[test]
fn built_extension_is_hs_and_truncation_is_exact() {
    let l = layout(&[1, 1]);
    let xi_grid = EvaluationGrid::standard(0, &l.frame(), 0).unwrap();
    let exp = Expansion::on_the_nose(2.0, &l, e1_terms(&l));
    let s = epsilon_schedule(&exp, &xi_grid, &CheckOptions::default()).unwrap();
    assert!(s.eps.windows(2).all(|w| w[1] <= w[0]));
    let built = build_extension(&exp, &s).unwrap();
    let grid = EvaluationGrid::standard(0, &l.extended_frame(), 0).unwrap().covering(4.0 / s.min());
    let rep = hs_check(&built.b, 2.0, &grid, &HS_SAMPLES, &CheckOptions::default()).unwrap();
    assert!(rep.pass);
    let dense = Tape::compile(&built.b).unwrap();
    for r in grid.shells() {
        for p in grid.points_at(*r, false) {
            let full = dense.eval(&p).unwrap();
            let cut = built.eval_truncated(&p).unwrap();
            assert!((full - cut).abs() <= 1e-12 * full.abs().max(1.0), "{p:?}");
        }
    }
}

#[test]
fn j_max_counts_active_scales() {
    let l = layout(&[1, 1]);
    let xi_grid = EvaluationGrid::standard(0, &l.frame(), 0).unwrap();
    let zeros = Expansion::on_the_nose(0.0, &l, vec![SymbolExpr::zero(); 6]);
    let s = epsilon_schedule(&zeros, &xi_grid, &CheckOptions::default()).unwrap();
    let built = build_extension(&zeros, &s).unwrap();
    let p = [1024.0, 0.0, 1.0];
    let want = s.eps.iter().filter(|&&e| e >= 2f64.powi(-11)).count();
    assert_eq!(built.j_max(&p), want);
    assert_eq!(built.j_max(&[0.0, 0.0, 0.0]), 0);
}

#[test]
fn correction_restores_the_symbol_exactly() {
    let l = layout(&[2, 1]);
    let f = l.frame();
    let terms = vec![qnorm_pow(&f, 1.0), xi(&l, 1).mul(&qnorm_pow(&f, -1.0))];
    let a = SymbolExpr::sum(terms.iter().cloned());
    let xi_grid = EvaluationGrid::standard(0, &f, 0).unwrap();
    let exp = Expansion::on_the_nose(1.0, &l, terms);
    let s = epsilon_schedule(&exp, &xi_grid, &CheckOptions::default()).unwrap();
    let built = build_extension(&exp, &s).unwrap();
    let grid = xi_grid.clone().covering(4.0 / s.min());
    let (u, rep) = correct_restriction(&built.b, &a, &l, &grid, &CheckOptions::default()).unwrap();
    assert!(rep.pass);
    let at_one = u.restrict(l.t(), 1.0);
    for r in grid.shells() {
        for p in grid.points_at(*r, false) {
            let want = eval1(&a, &p);
            assert!((eval1(&at_one, &p) - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
    let off = a.add(&xi(&l, 1));
    assert!(matches!(
        correct_restriction(&built.b, &off, &l, &grid, &CheckOptions::default()),
        Err(PhgError::ExpansionMismatch(_))
    ));
}

#[test]
fn build_then_extract_recovers_terms() {
    let l = layout(&[1, 1]);
    let exp = Expansion::on_the_nose(2.0, &l, e1_terms(&l));
    let rep = verify_round_trip(&Direction::Build { expansion: exp }, &l, &PhgOptions::default()).unwrap();
    for term in &rep.terms {
        assert!(term.pass, "term {} error {:e}", term.j, term.max_rel_error);
    }
    assert!(rep.pass);
}

#[test]
fn extract_then_build_agrees_at_t_one() {
    let l = layout(&[1, 1]);
    let u = t(&l).powi(2).add(&qnorm_pow(&l.frame(), 2.0));
    let rep = verify_round_trip(&Direction::Extract { u, m: 2.0, n: 2 }, &l, &PhgOptions::default()).unwrap();
    assert!(rep.pass);
}
