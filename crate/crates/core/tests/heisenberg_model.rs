use nalgebra::DMatrix;
use num_complex::Complex64;
use phgcalc::heisenberg::kernel::{Sampling, TAIL_TOLERANCE};
use phgcalc::heisenberg::*;
use phgcalc::symbol::{Layout, SymbolExpr, Tape};
use proptest::prelude::*;

fn x(k: usize) -> SymbolExpr {
    SymbolExpr::var(k)
}

fn gaussian_xi(m: &HeisenbergModel, layout: &Layout, width: f64) -> SymbolExpr {
    SymbolExpr::sum((0..m.dim()).map(|k| x(layout.xi(k)).powi(2))).scale(-1.0 / width).exp()
}

fn gaussian_x(m: &HeisenbergModel) -> SymbolExpr {
    SymbolExpr::sum((0..m.dim()).map(|k| x(k).powi(2))).scale(-0.5).exp()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, n)
}

#[test]
fn group_law_example_and_identities() {
    let m = HeisenbergModel::heisenberg(1);
    assert_eq!(m.b(2, 1), 1.0);
    assert_eq!(m.group_mul(&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]).unwrap(), vec![0.5, 1.0, 1.0]);
    let p = [0.3, -1.2, 2.5];
    assert_eq!(m.group_mul(&p, &[0.0; 3]).unwrap(), p.to_vec());
    assert_eq!(m.group_mul(&p, &m.group_inverse(&p).unwrap()).unwrap(), vec![0.0; 3]);
    assert_eq!(m.group_inverse(&m.group_inverse(&p).unwrap()).unwrap(), p.to_vec());
    assert!(matches!(m.group_mul(&[0.0; 2], &p), Err(HeisenbergError::Dimension { .. })));
}

#[test]
fn model_file_round_trip_and_validation() {
    let m = HeisenbergModel::from_json(r#"{"d":2,"B":[[0,-1],[1,0]]}"#).unwrap();
    assert_eq!(m, HeisenbergModel::heisenberg(1));
    let back = HeisenbergModel::from_json(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back, m);
    assert!(HeisenbergModel::from_json(r#"{"d":2,"B":[[0,1],[1,0]]}"#).is_err());
    assert!(HeisenbergModel::from_json(r#"{"d":2,"B":[[0,-1]]}"#).is_err());
    assert!(matches!(
        HeisenbergModel::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])),
        Err(HeisenbergError::NotAntisymmetric { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn group_is_associative_and_dilations_are_automorphisms(
        a in vec_strategy(5), b in vec_strategy(5), c in vec_strategy(5), s in 0.2..4.0f64,
    ) {
        let m = HeisenbergModel::heisenberg(2);
        let left = m.group_mul(&m.group_mul(&a, &b).unwrap(), &c).unwrap();
        let right = m.group_mul(&a, &m.group_mul(&b, &c).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&left, &right) <= 1e-12);
        let lhs = m.dilate(s, &m.group_mul(&a, &b).unwrap()).unwrap();
        let rhs = m.group_mul(&m.dilate(s, &a).unwrap(), &m.dilate(s, &b).unwrap()).unwrap();
        prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12 * (1.0 + s * s) * 16.0);
    }

    #[test]
    fn sigma_tilde_inverts_sigma(p in vec_strategy(3), eta in vec_strategy(3)) {
        let m = HeisenbergModel::heisenberg(1);
        let back = sigma(&m, &p, &sigma_tilde(&m, &p, &eta));
        prop_assert!(max_abs_diff(&back, &eta) <= 1e-14);
    }

    #[test]
    fn alpha_tilde_is_an_action(
        y in vec_strategy(3), v in vec_strategy(3), t in -2.0..2.0f64, s in 0.2..4.0f64, r in 0.2..4.0f64,
    ) {
        let p = ChartPoint { y, v, t };
        let twice = alpha_tilde(s, &alpha_tilde(r, &p));
        let once = alpha_tilde(s * r, &p);
        prop_assert!(max_abs_diff(&twice.v, &once.v) <= 1e-14 * 256.0);
        prop_assert!((twice.t - once.t).abs() <= 1e-14 * 16.0);
    }
}

#[test]
fn dilation_example() {
    let m = HeisenbergModel::abelian(2);
    assert_eq!(m.dilate(2.0, &[1.0, 1.0, 1.0]).unwrap(), vec![4.0, 2.0, 2.0]);
    assert_eq!(m.dilate(1.0, &[0.3, -1.0, 2.0]).unwrap(), vec![0.3, -1.0, 2.0]);
    assert!(m.dilate(0.0, &[0.0; 3]).is_err());
}

#[test]
fn model_fields_on_the_central_coordinate() {
    let m = HeisenbergModel::heisenberg(1);
    let p = [0.4, -1.5, 2.0];
    assert_eq!(m.field_apply(0, &x(0), &p).unwrap(), 1.0);
    let c = m.half_b(&p);
    for j in 1..=2 {
        assert!((m.field_apply(j, &x(0), &p).unwrap() - c[j - 1]).abs() < 1e-15);
    }
    assert!((m.commutator_apply(1, 2, &x(0), &p).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn fields_are_left_invariant() {
    let m = HeisenbergModel::heisenberg(2);
    let corpus = [
        x(0).mul(&x(1)).add(&x(3).powi(2)),
        x(0).scale(0.3).add(&x(2).mul(&x(4))).exp(),
        x(1).mul(&x(0).powi(2)).sub(&x(4).scale(2.0)),
    ];
    let pts = [[0.3, -0.5, 1.2, 0.7, -1.1], [-1.0, 0.25, 0.5, -0.75, 1.5]];
    let ys = [[1.0, 0.5, -0.25, 2.0, 0.1], [-0.3, 1.5, 0.7, -0.4, -1.2]];
    for f in &corpus {
        for y in &ys {
            let translated = m.left_translate(f, y);
            for p in &pts {
                let yx = m.group_mul(y, p).unwrap();
                for j in 0..=m.d() {
                    let lhs = m.field_apply(j, &translated, p).unwrap();
                    let rhs = m.field_apply(j, f, &yx).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-6, "X_{j}: {lhs} vs {rhs}");
                }
            }
        }
    }
}

#[test]
fn block_commutators() {
    let n = 2;
    let m = HeisenbergModel::heisenberg(n);
    let f = x(0).add(&x(0).mul(&x(1))).add(&x(2).mul(&x(3)).mul(&x(0)).scale(0.5)).add(&x(4).powi(3));
    let p = [0.7, -0.3, 1.1, 0.4, -0.9];
    let x0f = m.field_apply(0, &f, &p).unwrap();
    for i in 1..=2 * n {
        for k in 1..=2 * n {
            let got = m.commutator_apply(i, k, &f, &p).unwrap();
            let want = if k == i + n {
                x0f
            } else if i == k + n {
                -x0f
            } else {
                0.0
            };
            assert!((got - want).abs() <= 1e-8, "[X_{i}, X_{k}]: {got} vs {want}");
        }
        assert!(m.commutator_apply(0, i, &f, &p).unwrap().abs() <= 1e-8);
    }
}

#[test]
fn exponential_chart_examples() {
    let m = HeisenbergModel::heisenberg(1);
    let y = [0.0, 0.0, 2.0];
    let p = exp_chart(&m, &y, &[1.0, 1.0, 0.0], 1.0);
    assert_eq!(p, GroupoidPoint::Pair { y: y.to_vec(), x: vec![0.0, -1.0, 2.0], t: 1.0 });
    assert_eq!(exp_chart(&m, &y, &[0.0; 3], 1.0), GroupoidPoint::Pair { y: y.to_vec(), x: y.to_vec(), t: 1.0 });
    assert_eq!(
        exp_chart(&m, &y, &[1.0, 2.0, 3.0], 0.0),
        GroupoidPoint::Osculating { x: y.to_vec(), xi: vec![1.0, 2.0, 3.0] }
    );
    let v = [0.3, -0.8, 1.7];
    let y = [0.5, -1.0, 0.25];
    let GroupoidPoint::Pair { x: at_one, .. } = exp_chart(&m, &y, &v, 1.0) else { panic!("pair expected") };
    let affine: Vec<f64> = phi_y(&m, &y, &v).iter().zip(&y).map(|(a, b)| a + b).collect();
    assert!(max_abs_diff(&at_one, &affine) < 1e-15);
    for t in [1.0, -0.4, 2.5, 0.0] {
        let back = exp_chart_inverse(&m, &exp_chart(&m, &y, &v, t));
        assert!(max_abs_diff(&back.v, &v) < 1e-12);
        assert_eq!(back.t, t);
    }
}

#[test]
fn exponential_chart_matches_the_flow() {
    let m = HeisenbergModel::heisenberg(2);
    let y = [0.2, -0.7, 1.1, 0.5, -0.3];
    let v = [0.9, 0.4, -1.3, 0.8, 0.6];
    for t in [0.5, 1.0, -1.7, 2.0] {
        let w: Vec<f64> = v.iter().enumerate().map(|(k, c)| if k == 0 { -t * t * c } else { -t * c }).collect();
        let GroupoidPoint::Pair { x: closed, .. } = exp_chart(&m, &y, &v, t) else { panic!("pair expected") };
        let flowed = flow_rk4(&m, &y, &w, 64);
        assert!(max_abs_diff(&closed, &flowed) <= 1e-8, "t = {t}");
    }
}

#[test]
fn phi_y_is_unimodular_and_invertible() {
    for m in [HeisenbergModel::heisenberg(1), HeisenbergModel::heisenberg(2)] {
        let y: Vec<f64> = (0..m.dim()).map(|k| 0.3 * k as f64 - 0.5).collect();
        let a = phi_y_matrix(&m, &y);
        let sign = if m.dim() % 2 == 0 { 1.0 } else { -1.0 };
        assert!((a.determinant() - sign).abs() < 1e-12);
        let inv = a.clone().try_inverse().unwrap();
        assert!((&a * &inv - DMatrix::identity(m.dim(), m.dim())).amax() < 1e-12);
        let mut v = vec![0.0; m.dim()];
        v[1] = 2.5;
        assert_eq!(phi_y(&m, &y, &v)[1], -2.5);
        let direct = phi_y(&m, &y, &[1.0; 5][..m.dim()]);
        let via = &a * nalgebra::DVector::from_element(m.dim(), 1.0);
        assert!(max_abs_diff(&direct, via.as_slice()) < 1e-15);
    }
}

#[test]
fn sigma_examples() {
    let m = HeisenbergModel::heisenberg(1);
    let p = [0.0, 0.0, 2.0];
    assert_eq!(sigma(&m, &p, &[1.0, 3.0, 0.0])[1], 2.0);
    assert_eq!(sigma(&m, &p, &[0.0, 3.0, -1.0]), vec![0.0, 3.0, -1.0]);
    assert_eq!(sigma_tilde(&m, &p, &[0.0, 3.0, -1.0]), vec![0.0, 3.0, -1.0]);
}

#[test]
fn transpose_inverse_of_phi_is_sigma_tilde() {
    let m = HeisenbergModel::heisenberg(1);
    let y = [0.0, 0.0, 2.0];
    let inv = phi_y_matrix(&m, &y).try_inverse().unwrap();
    let lhs = inv.transpose() * nalgebra::DVector::from_column_slice(&[1.0, 0.0, 0.0]);
    assert!(max_abs_diff(lhs.as_slice(), &[-1.0, -1.0, 0.0]) < 1e-15);
    assert_eq!(sigma_tilde(&m, &y, &[-1.0, 0.0, 0.0]), vec![-1.0, -1.0, 0.0]);
    assert_eq!(transpose_inverse_residual(&m, &[0.3, 1.0, -2.0], &[0.0; 3]).unwrap(), 0.0);
    let eta = [0.4, -1.3, 0.8];
    let at_origin = phi_y_matrix(&m, &[0.0; 3]).try_inverse().unwrap().transpose()
        * nalgebra::DVector::from_column_slice(&eta);
    assert!(max_abs_diff(at_origin.as_slice(), &[-0.4, 1.3, -0.8]) < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn transpose_inverse_residual_is_tiny(n in 1usize..=2, y in vec_strategy(5), eta in vec_strategy(5)) {
        let m = HeisenbergModel::heisenberg(n);
        let r = transpose_inverse_residual(&m, &y[..m.dim()], &eta[..m.dim()]).unwrap();
        prop_assert!(r <= 1e-12);
    }
}

#[test]
fn zoom_actions() {
    let p = ChartPoint { y: vec![0.1, 0.2, 0.3], v: vec![1.0, -2.0, 0.5], t: 0.8 };
    assert_eq!(alpha_tilde(1.0, &p), p);
    assert_eq!(beta(1.0, &p), p);
    let b = beta(2.0, &ChartPoint { t: 0.0, ..p.clone() });
    assert_eq!(b, ChartPoint { y: p.y.clone(), v: vec![4.0, -4.0, 1.0], t: 0.0 });
    let a = alpha(2.0, &GroupoidPoint::Osculating { x: p.y.clone(), xi: p.v.clone() });
    assert_eq!(a, GroupoidPoint::Osculating { x: p.y.clone(), xi: vec![4.0, -4.0, 1.0] });
    let m = HeisenbergModel::heisenberg(1);
    let bases = KernelGrid::default_bases(&m, 5, 3);
    for s in [1.5, 2.0] {
        assert!(kernel::zoom_chart_residual(&m, &bases, s, 11) <= 1e-12);
    }
}

#[test]
fn fourier_pair_is_exact_and_scaled() {
    let grid = Grid::new(vec![64, 64], vec![10.0, 10.0]).unwrap();
    let data: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let p = grid.positions_at(i);
            Complex64::new((-(p[0] * p[0] + p[1] * p[1])).exp(), 0.1 * p[0] * (-(p[1] * p[1])).exp())
        })
        .collect();
    let back = fourier::inverse(&grid, &fourier::forward(&grid, &data));
    let err = back.iter().zip(&data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-14);
    let gauss: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let p = grid.positions_at(i);
            Complex64::new((-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp(), 0.0)
        })
        .collect();
    let hat = fourier::forward(&grid, &gauss);
    for i in (0..grid.len()).step_by(37) {
        let xi = grid.frequencies_at(i);
        let exact = 2.0 * std::f64::consts::PI * (-(xi[0] * xi[0] + xi[1] * xi[1]) / 2.0).exp();
        assert!((hat[i] - exact).norm() < 1e-10);
    }
    assert!(Grid::new(vec![12], vec![1.0]).is_err());
    assert!(Grid::new(vec![2], vec![1.0]).is_err());
    assert!(Grid::new(vec![8], vec![0.0]).is_err());
}

#[test]
fn convention_is_recorded_and_checked() {
    let c = DftConvention::default();
    assert_eq!(c.forward_sign, -1);
    assert!(c.validate().is_ok());
    assert!(DftConvention { forward_sign: 1, ..c }.validate().is_err());
}

fn quant_grid() -> Grid {
    Grid::cube(3, 64, 8.0).unwrap()
}

fn samples(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..grid.len()).map(|i| f(&grid.positions_at(i))).collect()
}

fn field_samples(m: &HeisenbergModel, grid: &Grid, j: usize, f: &SymbolExpr) -> Vec<f64> {
    let tape = Tape::compile(&m.field(j, f)).unwrap();
    let mut w = tape.workspace();
    samples(grid, |p| tape.eval_with(&mut w, p).unwrap())
}

#[test]
fn quantizing_one_is_the_identity() {
    let m = HeisenbergModel::heisenberg(1);
    let grid = quant_grid();
    let phi = gaussian_x(&m);
    let out = quantize(&m, &SymbolExpr::one(), &phi, &grid).unwrap();
    let want = samples(&grid, |p| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 2.0).exp());
    let err = out.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn quantizing_frequencies_differentiates() {
    let m = HeisenbergModel::heisenberg(1);
    let layout = m.layout();
    let grid = quant_grid();
    let phi = gaussian_x(&m).mul(&x(1).add(&SymbolExpr::constant(0.5)));
    let tol = 1e-6;
    let out = quantize(&m, &x(layout.xi(0)), &phi, &grid).unwrap();
    let d0 = field_samples(&m, &grid, 0, &phi);
    let err = out.iter().zip(&d0).map(|(a, b)| (a - Complex64::new(0.0, -b)).norm()).fold(0.0, f64::max);
    assert!(err <= tol, "Op(xi_0): {err}");
    let out = quantize(&m, &x(layout.xi(2)), &phi, &grid).unwrap();
    let d2 = samples(&grid, |p| -p[2] * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / 2.0).exp() * (p[1] + 0.5));
    let err = out.iter().zip(&d2).map(|(a, b)| (a * Complex64::new(0.0, 1.0) - b).norm()).fold(0.0, f64::max);
    assert!(err <= tol, "Op(i xi_2): {err}");
    for (j, s) in m.sigma_exprs(&layout).iter().enumerate() {
        let out = quantize(&m, s, &phi, &grid).unwrap();
        let xj = field_samples(&m, &grid, j, &phi);
        let err = out.iter().zip(&xj).map(|(a, b)| (a - Complex64::new(0.0, -b)).norm()).fold(0.0, f64::max);
        assert!(err <= tol, "Op(sigma_{j}): {err}");
    }
}

#[test]
fn direct_quantization_matches_the_product_path() {
    let m = HeisenbergModel::abelian(1);
    let layout = m.layout();
    let grid = Grid::cube(2, 64, 12.0).unwrap();
    let phi = gaussian_x(&m);
    let b = SymbolExpr::one().add(&x(layout.xi(0)).powi(2)).recip();
    let a = x(0).powi(2).scale(-0.1).exp();
    let direct = quantize(&m, &a.mul(&b), &phi, &grid).unwrap();
    let fft = quantize(&m, &b, &phi, &grid).unwrap();
    let av = samples(&grid, |p| (-0.1 * p[0] * p[0]).exp());
    let err = direct.iter().zip(fft.iter().zip(&av)).map(|(d, (f, a))| (d - f * a).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12, "{err}");
    let big = HeisenbergModel::heisenberg(1);
    let q = x(0).mul(&x(big.layout().xi(0)).exp());
    assert!(matches!(
        quantize(&big, &q, &gaussian_x(&big), &quant_grid()),
        Err(HeisenbergError::Unsupported(_))
    ));
}

#[test]
fn quantization_refuses_wide_test_functions() {
    let m = HeisenbergModel::heisenberg(1);
    let wide = SymbolExpr::sum((0..3).map(|k| x(k).powi(2))).scale(-0.02).exp();
    assert!(matches!(
        quantize(&m, &SymbolExpr::one(), &wide, &quant_grid()),
        Err(HeisenbergError::Tail { .. })
    ));
}

#[test]
fn kernels_of_translation_invariant_symbols() {
    let m = HeisenbergModel::heisenberg(1);
    let layout = m.layout();
    let grid = Grid::cube(3, 32, 8.0).unwrap();
    let bases = KernelGrid::default_bases(&m, 3, 5);
    let k = kernel_from_symbol(&m, &gaussian_xi(&m, &layout, 1.0), &grid, &bases).unwrap();
    assert_eq!(k.sampling, Sampling::Difference);
    for s in 1..3 {
        assert_eq!(k.values[s], k.values[0]);
    }
    let zero = kernel_from_symbol(&m, &SymbolExpr::zero(), &grid, &bases).unwrap();
    assert!(zero.values.iter().flatten().all(|z| z.norm() == 0.0));
    let q = gaussian_xi(&m, &layout, 1.0);
    let k = kernel_from_symbol(&m, &q, &grid, &bases[..1]).unwrap();
    let l2_kernel: f64 = k.values[0].iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell();
    let freq_cell: f64 = (0..3).map(|a| grid.freq_spacing(a)).product();
    let l2_symbol: f64 = (0..grid.len())
        .map(|i| {
            let xi = grid.frequencies_at(i);
            (-2.0 * xi.iter().map(|v| v * v).sum::<f64>()).exp()
        })
        .sum::<f64>()
        * freq_cell
        / (2.0 * std::f64::consts::PI).powi(3);
    assert!((l2_kernel - l2_symbol).abs() <= 1e-10 * l2_symbol);
    let flat = SymbolExpr::one();
    assert!(matches!(kernel_from_symbol(&m, &flat, &grid, &bases), Err(HeisenbergError::Tail { .. })));
}

#[test]
fn kernel_grid_binary_round_trip() {
    let m = HeisenbergModel::heisenberg(1);
    let layout = m.layout();
    let grid = Grid::cube(3, 8, 4.0).unwrap();
    let bases = KernelGrid::default_bases(&m, 2, 1);
    let q = gaussian_xi(&m, &layout, 0.1);
    let k = kernel_from_symbol(&m, &q, &grid, &bases).unwrap();
    let bytes = k.to_bytes();
    assert_eq!(KernelGrid::from_bytes(&bytes).unwrap(), k);
    assert!(matches!(KernelGrid::from_bytes(&bytes[..bytes.len() - 1]), Err(HeisenbergError::Format(_))));
    let bad = KernelGrid { convention: DftConvention { forward_sign: 1, ..DftConvention::default() }, ..k };
    assert!(matches!(KernelGrid::from_bytes(&bad.to_bytes()), Err(HeisenbergError::Convention(_))));
}

fn sheared_kernel(m: &HeisenbergModel) -> KernelGrid {
    let layout = m.layout();
    let grid = Grid::cube(3, 64, 8.0).unwrap();
    let q = m.sigma_pullback(&gaussian_xi(m, &layout, 4.0), &layout);
    kernel_from_symbol(m, &q, &grid, &KernelGrid::default_bases(m, 3, 2)).unwrap()
}

#[test]
fn pushforward_in_the_abelian_model_is_the_reflection() {
    let m = HeisenbergModel::abelian(2);
    let k = sheared_kernel(&m);
    for interp in [Interpolation::Spectral, Interpolation::Tricubic] {
        let pushed = pushforward_chart_t1(&m, &k, interp, TAIL_TOLERANCE).unwrap();
        assert_eq!(pushed.sampling, Sampling::Chart);
        assert_eq!(pushed.values, k.values);
    }
}

#[test]
fn pushforward_fixes_the_diagonal_and_round_trips() {
    let m = HeisenbergModel::heisenberg(1);
    let k = sheared_kernel(&m);
    let tail = k.values.iter().map(|v| k.grid.boundary_tail(v)).fold(0.0, f64::max);
    assert!(tail <= TAIL_TOLERANCE);
    assert!(matches!(
        pushforward_chart_t1(&m, &k, Interpolation::Spectral, tail / 2.0),
        Err(HeisenbergError::Tail { .. })
    ));
    let pushed = pushforward_chart_t1(&m, &k, Interpolation::Spectral, TAIL_TOLERANCE).unwrap();
    let centre = k.grid.multi_index(0).len();
    let origin: usize = (0..centre).fold(0, |acc, a| acc * k.grid.n[a] + k.grid.n[a] / 2);
    for s in 0..k.bases.len() {
        assert!((pushed.values[s][origin] - k.values[s][origin]).norm() < 1e-14);
    }
    assert!(pullback_chart_t1(&m, &k, Interpolation::Spectral, TAIL_TOLERANCE).is_err());
    let back = pullback_chart_t1(&m, &pushed, Interpolation::Spectral, TAIL_TOLERANCE).unwrap();
    let peak = k.values.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let err = back.values.iter().flatten().zip(k.values.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err <= 1e-8 * peak, "{err}");
}

#[test]
fn tricubic_pushforward_is_fourth_order_close_to_spectral() {
    let m = HeisenbergModel::heisenberg(1);
    let k = sheared_kernel(&m);
    let spectral = pushforward_chart_t1(&m, &k, Interpolation::Spectral, TAIL_TOLERANCE).unwrap();
    let cubic = pushforward_chart_t1(&m, &k, Interpolation::Tricubic, TAIL_TOLERANCE).unwrap();
    let peak = k.values.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    let err = spectral.values.iter().flatten().zip(cubic.values.iter().flatten()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let h = k.grid.spacing(0);
    assert!(err <= h.powi(4) * peak, "{err}");
}

#[test]
fn chart_diagram_closes() {
    for (m, tol) in [(HeisenbergModel::heisenberg(1), 1e-6), (HeisenbergModel::abelian(2), 1e-8)] {
        let layout = m.layout();
        let grid = KernelGrid::default_grid(&m);
        let bases = KernelGrid::default_bases(&m, 5, 0);
        let report = chart_diagram_check(&m, &gaussian_xi(&m, &layout, 1.0), &grid, &bases, Interpolation::Spectral).unwrap();
        assert!(report.diagram_linf <= tol, "{report:?}");
        assert_eq!(report.per_slice.len(), 5);
    }
    let m = HeisenbergModel::heisenberg(1);
    let grid = Grid::cube(3, 16, 8.0).unwrap();
    let report = chart_diagram_check(&m, &SymbolExpr::zero(), &grid, &[vec![0.0; 3]], Interpolation::Spectral).unwrap();
    assert_eq!(report.diagram_linf, 0.0);
}

fn zoom_family(m: &HeisenbergModel) -> SymbolExpr {
    let layout = m.layout().with_t();
    let t = x(layout.t());
    m.sigma_pullback(&gaussian_xi(m, &layout, 4.0), &layout).mul(&t.powi(2).neg().exp())
}

#[test]
fn zoom_intertwining() {
    for m in [HeisenbergModel::abelian(2), HeisenbergModel::heisenberg(1)] {
        let grid = KernelGrid::default_grid(&m);
        let bases = KernelGrid::default_bases(&m, 5, 0);
        let u = zoom_family(&m);
        for s in [1.5, 2.0] {
            let report = zoom_intertwining_check(&m, &u, &grid, &bases, &[0.0, 0.6], s).unwrap();
            assert!(report.zoom_linf <= 1e-6, "{report:?}");
            assert!(report.chart_residual <= 1e-12);
        }
        let report = zoom_intertwining_check(&m, &u, &grid, &bases[..1], &[0.3], 1.0).unwrap();
        assert!(report.zoom_linf <= 1e-12, "{report:?}");
    }
}
