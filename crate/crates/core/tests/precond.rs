//! Schur-complement approximations: reduction identities, dense composition
//! oracles and block-preconditioner properties.

mod common;

use common::{bordered_solve, dense_solve, max_abs, project, random_vec, rel_diff, rng, to_mat, AIR_WATER};
use twophase_core::assembly::{OseenAssembly, PressureOperators, SaddleSystem};
use twophase_core::grid::{build_discretization, build_grid, ElementPair, VelocityField};
use twophase_core::krylov::{gmres, norm2, sparse_factorize, CsrMatrix, GmresOptions};
use twophase_core::precond::{
    commutator_from, commutator_norm, exact_schur_complement, BlockTriangularPreconditioner, MassSolveKind,
    PrecondError, PressureConvection, SchurKind, SchurOptions, SchurStrategy,
};

const TOL: f64 = 1e-10;

struct Case {
    assembly: OseenAssembly,
    system: SaddleSystem,
    ops: PressureOperators,
    conv: PressureConvection,
}

impl Case {
    fn new(pair: ElementPair, n: usize, ratios: (f64, f64), re: f64, alpha: f64, dt: f64, windy: bool) -> Self {
        let grid = build_grid(n, ratios.0, ratios.1, re).unwrap();
        let disc = build_discretization(&grid, pair);
        let assembly = OseenAssembly::new(&grid, &disc, alpha, dt);
        let boundary = disc.boundary_values(1.0);
        let wind = if windy { swirl(&disc.vel_coords().to_vec(), &boundary) } else { VelocityField::zeros(disc.n_vel_nodes()) };
        let system = assembly.system(&wind, &boundary);
        let ops = PressureOperators::new(&assembly);
        let conv = PressureConvection::assemble(&assembly, &wind);
        Case { assembly, system, ops, conv }
    }

    fn strategy(&self, kind: SchurKind) -> SchurStrategy {
        self.strategy_with(kind, &SchurOptions::default())
    }

    fn strategy_with(&self, kind: SchurKind, opts: &SchurOptions) -> SchurStrategy {
        SchurStrategy::new(kind, &self.system, &self.ops, &self.conv, opts).unwrap()
    }

    fn z(&self) -> Vec<f64> {
        self.ops.nullspace.clone()
    }

    fn shift(&self) -> f64 {
        self.system.mass_shift()
    }
}

/// Interior circulation plus the lid values on the boundary.
fn swirl(coords: &[[f64; 2]], boundary: &VelocityField) -> VelocityField {
    let mut w = boundary.clone();
    for (k, p) in coords.iter().enumerate() {
        if p[0].abs() < 1.0 - 1e-12 && p[1].abs() < 1.0 - 1e-12 {
            w.ux[k] = (1.0 - p[0] * p[0]) * (1.0 - p[1] * p[1]) * (0.2 + p[1]);
            w.uy[k] = -0.5 * p[0] * (1.0 - p[0] * p[0]) * (1.0 - p[1] * p[1]);
        }
    }
    w
}

fn compare(a: &SchurStrategy, b: &SchurStrategy, n: usize, scale_b: f64) -> f64 {
    let mut r = rng(42);
    (0..3)
        .map(|_| {
            let v = random_vec(&mut r, n);
            let yb: Vec<f64> = b.apply(&v).iter().map(|x| x * scale_b).collect();
            rel_diff(&a.apply(&v), &yb)
        })
        .fold(0.0, f64::max)
}

#[test]
fn two_phase_pcd_reduces_to_generalised_cahouet_chabard_without_wind() {
    for pair in ElementPair::ALL {
        for (alpha, dt) in [(0.0, 1.0), (1.0, 0.1)] {
            let c = Case::new(pair, 16, AIR_WATER, 100.0, alpha, dt, false);
            let d = compare(&c.strategy(SchurKind::Pcd2), &c.strategy(SchurKind::Gcc), c.ops.n(), 1.0);
            assert!(d < TOL, "{pair} alpha={alpha}: {d:e}");
        }
    }
}

#[test]
fn density_weighted_pcd_reduces_for_unit_density() {
    for pair in ElementPair::ALL {
        let c = Case::new(pair, 16, (1.0, 1.8e-2), 100.0, 1.0, 0.5, true);
        let d = compare(&c.strategy(SchurKind::Pcd2Rho), &c.strategy(SchurKind::Pcd2), c.ops.n(), 1.0);
        assert!(d < TOL, "{pair}: {d:e}");
    }
}

#[test]
fn two_phase_lsc_reduces_for_constant_viscosity() {
    for pair in [ElementPair::Q2Q1, ElementPair::Q2Pm1] {
        let c = Case::new(pair, 16, (0.01, 1.0), 100.0, 0.0, 1.0, true);
        let d = compare(&c.strategy(SchurKind::Lsc2), &c.strategy(SchurKind::Lsc), c.ops.n(), 1.0);
        assert!(d < TOL, "{pair}: {d:e}");
    }
}

#[test]
fn pcd_is_cahouet_chabard_for_stokes() {
    for pair in ElementPair::ALL {
        let c = Case::new(pair, 16, (1.0, 1.0), 10.0, 1.0, 0.1, false);
        let d = compare(&c.strategy(SchurKind::Pcd), &c.strategy(SchurKind::Cc), c.ops.n(), 1.0);
        assert!(d < TOL, "{pair}: {d:e}");
    }
}

#[test]
fn two_phase_pcd_without_factor_two_is_pcd_for_one_fluid() {
    let opts = SchurOptions { factor_two: false, ..Default::default() };
    for pair in ElementPair::ALL {
        for (alpha, dt) in [(0.0, 1.0), (1.0, 0.25)] {
            let c = Case::new(pair, 16, (1.0, 1.0), 50.0, alpha, dt, true);
            let d = compare(&c.strategy_with(SchurKind::Pcd2, &opts), &c.strategy(SchurKind::Pcd), c.ops.n(), 1.0);
            assert!(d < TOL, "{pair}: {d:e}");
        }
    }
}

#[test]
fn viscosity_weighted_pcd_is_twice_pcd_for_one_fluid() {
    let c = Case::new(ElementPair::Q2Q1, 16, (1.0, 1.0), 50.0, 0.0, 1.0, true);
    let d = compare(&c.strategy(SchurKind::PcdVisc), &c.strategy(SchurKind::Pcd), c.ops.n(), 2.0);
    assert!(d < TOL, "{d:e}");
}

/// `S^{-1} v` for every strategy, from dense matrices and bordered solves.
fn dense_oracle(c: &Case, kind: SchurKind, v: &[f64]) -> Vec<f64> {
    let z = c.z();
    let o = &c.ops;
    let s = c.shift();
    let mass = |m: &CsrMatrix, x: &[f64]| dense_solve(&to_mat(m), x);
    let lap = |a: &CsrMatrix, x: &[f64]| bordered_solve(&to_mat(a), &z, x);
    let add = |a: Vec<f64>, b: Vec<f64>, t: f64| -> Vec<f64> { a.iter().zip(&b).map(|(x, y)| x + t * y).collect() };
    let mut y = match kind {
        SchurKind::Pcd2 | SchurKind::Pcd2Rho => {
            let (n, m) = if kind == SchurKind::Pcd2 { (&c.conv.n_one, &o.mp_one) } else { (&c.conv.n_rho, &o.mp_rho) };
            let t = mass(m, v);
            let g = add(n.mul_vec(&t), m.mul_vec(&t), s);
            add(mass(&o.mp_inv_two_mu, v), lap(&o.ap_inv_rho, &g), 1.0)
        }
        SchurKind::Gcc => add(mass(&o.mp_inv_two_mu, v), lap(&o.ap_inv_rho, v), s),
        SchurKind::Pcd => {
            let t = mass(&o.mp_one, v);
            let fp = add(add(o.ap_mu.mul_vec(&t), c.conv.n_rho.mul_vec(&t), 1.0), o.mp_rho.mul_vec(&t), s);
            lap(&o.ap_one, &fp)
        }
        SchurKind::Lsc2 => {
            let w_inv: Vec<f64> = o.velocity_mass_mu_diag.iter().map(|d| 1.0 / d).collect();
            let sys = &c.system;
            let l = sys.b.matmul(&sys.bt.scale_rows(&w_inv));
            let t = lap(&l, v);
            let mut u = sys.bt.mul_vec(&t);
            u.iter_mut().zip(&w_inv).for_each(|(a, d)| *a *= d);
            let mut u = sys.f.mul_vec(&u);
            u.iter_mut().zip(&w_inv).for_each(|(a, d)| *a *= d);
            lap(&l, &sys.b.mul_vec(&u))
        }
        SchurKind::Simple => {
            let sys = &c.system;
            let d_inv: Vec<f64> = sys.f.diagonal().iter().map(|d| 1.0 / d).collect();
            lap(&sys.b.matmul(&sys.bt.scale_rows(&d_inv)).add(&sys.c), v)
        }
        other => panic!("no oracle for {other}"),
    };
    project(&mut y, &z);
    y
}

#[test]
fn strategies_match_dense_composition() {
    let cases = [
        (SchurKind::Pcd2, ElementPair::Q2Q1, AIR_WATER, 1.0, 0.5),
        (SchurKind::Pcd2, ElementPair::Q2Pm1, AIR_WATER, 0.0, 1.0),
        (SchurKind::Pcd2Rho, ElementPair::Q2Q1, (0.1, 0.5), 1.0, 0.5),
        (SchurKind::Pcd2Rho, ElementPair::Q1Q1, (0.1, 0.5), 1.0, 0.5),
        (SchurKind::Gcc, ElementPair::Q2Q1, AIR_WATER, 1.0, 1.0),
        (SchurKind::Pcd, ElementPair::Q2Q1, AIR_WATER, 0.0, 1.0),
        (SchurKind::Lsc2, ElementPair::Q2Q1, AIR_WATER, 0.0, 1.0),
        (SchurKind::Simple, ElementPair::Q1Q1, AIR_WATER, 0.0, 1.0),
        (SchurKind::Simple, ElementPair::Q2Pm1, AIR_WATER, 1.0, 0.1),
    ];
    for (kind, pair, ratios, alpha, dt) in cases {
        let c = Case::new(pair, 16, ratios, 100.0, alpha, dt, true);
        let st = c.strategy(kind);
        let mut r = rng(7);
        for _ in 0..2 {
            let v = random_vec(&mut r, c.ops.n());
            let d = rel_diff(&st.apply(&v), &dense_oracle(&c, kind, &v));
            assert!(d < TOL, "{kind} {pair}: {d:e}");
        }
    }
}

#[test]
fn outputs_are_linear_and_mean_free() {
    for pair in ElementPair::ALL {
        let c = Case::new(pair, 8, AIR_WATER, 100.0, 1.0, 0.1, true);
        let z = c.z();
        for kind in SchurKind::ALL {
            if kind.is_lsc() && pair == ElementPair::Q1Q1 {
                continue;
            }
            let st = c.strategy(kind);
            assert_eq!(max_abs(&st.apply(&vec![0.0; c.ops.n()])), 0.0, "{kind}");
            let y = st.apply(&z);
            assert!(common::dot(&y, &z).abs() < 1e-10 * norm2(&y).max(1.0), "{kind} {pair}");
            let mut r = rng(5);
            let (a, b) = (random_vec(&mut r, c.ops.n()), random_vec(&mut r, c.ops.n()));
            let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
            let expect: Vec<f64> = st.apply(&a).iter().zip(st.apply(&b)).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
            assert!(rel_diff(&st.apply(&ab), &expect) < 1e-10, "{kind} {pair}");
        }
    }
}

#[test]
fn unsupported_configurations_are_rejected() {
    let c = Case::new(ElementPair::Q1Q1, 8, AIR_WATER, 100.0, 0.0, 1.0, true);
    for kind in [SchurKind::Lsc, SchurKind::LscD, SchurKind::Lsc2] {
        let err = SchurStrategy::new(kind, &c.system, &c.ops, &c.conv, &SchurOptions::default());
        assert!(matches!(err, Err(PrecondError::Unsupported(_))));
    }
    let opts = SchurOptions { max_exact_dofs: 10, ..Default::default() };
    let err = SchurStrategy::new(SchurKind::Exact, &c.system, &c.ops, &c.conv, &opts);
    assert!(matches!(err, Err(PrecondError::Unsupported(_))));
}

#[test]
fn chebyshev_mass_solves_approximate_exact_ones() {
    let c = Case::new(ElementPair::Q2Q1, 16, AIR_WATER, 100.0, 0.0, 1.0, true);
    let exact = c.strategy(SchurKind::Pcd2);
    let opts = SchurOptions { mass_solve: MassSolveKind::Chebyshev(20), ..Default::default() };
    let cheb = c.strategy_with(SchurKind::Pcd2, &opts);
    let v = random_vec(&mut rng(11), c.ops.n());
    assert!(rel_diff(&cheb.apply(&v), &exact.apply(&v)) < 1e-6);
}

#[test]
fn block_preconditioner_matches_dense_back_substitution() {
    for pair in ElementPair::ALL {
        let c = Case::new(pair, 8, AIR_WATER, 100.0, 0.0, 1.0, true);
        let pre = BlockTriangularPreconditioner::new(&c.system, c.strategy(SchurKind::Pcd2), None).unwrap();
        let (nv, np) = (c.system.n_vel(), c.system.n_pre());
        let mut r = rng(13);
        let r_u = random_vec(&mut r, nv);

        let (z_u, z_p) = pre.apply_blocks(&r_u, &vec![0.0; np]);
        assert_eq!(max_abs(&z_p), 0.0);
        let f = to_mat(&c.system.f);
        assert!(rel_diff(&z_u, &dense_solve(&f, &r_u)) < 1e-10);

        let r_p = random_vec(&mut r, np);
        let (z_u, z_p) = pre.apply_blocks(&r_u, &r_p);
        let zp: Vec<f64> = dense_oracle(&c, SchurKind::Pcd2, &r_p).iter().map(|v| -v).collect();
        assert!(rel_diff(&z_p, &zp) < 1e-10);
        let mut t = r_u.clone();
        let btz = c.system.bt.mul_vec(&zp);
        t.iter_mut().zip(&btz).for_each(|(a, b)| *a -= b);
        assert!(rel_diff(&z_u, &dense_solve(&f, &t)) < 1e-10);
    }
}

#[test]
fn exact_schur_complement_needs_two_iterations() {
    for pair in ElementPair::ALL {
        let c = Case::new(pair, 8, AIR_WATER, 100.0, 0.0, 1.0, true);
        let pre = BlockTriangularPreconditioner::new(&c.system, c.strategy(SchurKind::Exact), None).unwrap();
        let mut b = c.system.rhs();
        let nv = c.system.n_vel();
        project(&mut b[nv..], &c.z());
        let opts = GmresOptions { rel_tol: 1e-6, ref_norm: norm2(&b), max_iter: 50 };
        let (_, stats) = gmres(&c.system, &pre, &b, &vec![0.0; b.len()], &opts).unwrap();
        assert!(stats.iterations <= 2, "{pair}: {}", stats.iterations);
    }
}

#[test]
fn preconditioned_schur_spectrum_has_positive_real_part() {
    let c = Case::new(ElementPair::Q2Q1, 16, AIR_WATER, 10.0, 0.0, 1.0, true);
    let s = exact_schur_complement(&c.system).unwrap();
    let st = c.strategy(SchurKind::Pcd2);
    let n = c.ops.n();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(st.apply(&s.mul_vec(&e)));
    }
    let m = faer::Mat::from_fn(n, n, |i, j| cols[j][i]);
    let eig = m.eigenvalues().unwrap();
    let scale = eig.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let mut zero = 0;
    for l in &eig {
        if l.norm() < 1e-8 * scale {
            zero += 1;
        } else {
            assert!(l.re > 0.0, "eigenvalue {l:?}");
        }
    }
    assert_eq!(zero, 1, "one null mode from the constant pressure");
}

#[test]
fn commutator_vanishes_for_zero_operators() {
    let c = Case::new(ElementPair::Q2Q1, 8, AIR_WATER, 10.0, 0.0, 1.0, true);
    let m = c.assembly.interior_velocity_mass(twophase_core::assembly::Weight::One);
    let (nv, np) = (c.system.n_vel(), c.system.n_pre());
    let d = commutator_from(&c.system.b, &CsrMatrix::zeros(nv, nv), &CsrMatrix::zeros(np, np), &m, &c.ops.mp_one);
    assert_eq!(d.unwrap(), 0.0);
}

#[test]
fn stokes_commutator_is_small_relative_to_its_operands() {
    let mut last = f64::INFINITY;
    for n in [8, 16] {
        let grid = build_grid(n, 1.0, 1.0, 1.0).unwrap();
        let disc = build_discretization(&grid, ElementPair::Q2Q1);
        let assembly = OseenAssembly::new(&grid, &disc, 0.0, 1.0);
        let wind = VelocityField::zeros(disc.n_vel_nodes());
        let e = commutator_norm(&assembly, &wind).unwrap();
        let system = assembly.system(&wind, &wind);
        let ops = PressureOperators::new(&assembly);
        let m = assembly.interior_velocity_mass(twophase_core::assembly::Weight::One);
        let np = system.n_pre();
        let first = commutator_from(&system.b, &system.f, &CsrMatrix::zeros(np, np), &m, &ops.mp_one).unwrap();
        // boundary rows keep the ratio near one half; it must not grow
        let ratio = e / first;
        assert!(ratio < 0.6 && ratio <= last, "n={n}: {ratio}");
        last = ratio;
    }
}

#[test]
fn exact_schur_complement_matches_dense_elimination() {
    let c = Case::new(ElementPair::Q1Q1, 8, AIR_WATER, 100.0, 0.0, 1.0, true);
    let s = exact_schur_complement(&c.system).unwrap();
    let f = sparse_factorize(&c.system.f).unwrap();
    let mut r = rng(17);
    let p = random_vec(&mut r, c.system.n_pre());
    let mut expected = c.system.b.mul_vec(&f.solve(&c.system.bt.mul_vec(&p)));
    expected.iter_mut().zip(c.system.c.mul_vec(&p)).for_each(|(a, b)| *a += b);
    assert!(rel_diff(&s.mul_vec(&p), &expected) < 1e-10);
}
