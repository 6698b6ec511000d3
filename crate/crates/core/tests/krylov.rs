//! Sparse kernels, direct factorisation, GMRES and Chebyshev against dense oracles.

mod common;

use common::{dense_solve, dot, mat_vec, random_vec, rel_diff, rng, to_mat};
use faer::Mat;
use twophase_core::assembly::{OseenAssembly, Weight};
use twophase_core::grid::{build_discretization, build_grid, ElementPair};
use twophase_core::krylov::{
    chebyshev_contraction, chebyshev_mass_solve, gmres, norm2, sparse_factorize, sparse_factorize_with,
    CsrMatrix, GmresOptions, IdentityOperator, LinearOperator, LuPattern, MASS_SPECTRUM_BOUNDS,
};

fn random_spd(n: usize, seed: u64) -> CsrMatrix {
    let mut r = rng(seed);
    let g: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut r, n)).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s: f64 = (0..n).map(|k| g[k][i] * g[k][j]).sum();
                    s / n as f64 + if i == j { 0.5 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    CsrMatrix::from_dense(&rows)
}

/// Residual norms of the exact minimal-residual iterates over the Krylov
/// spaces of `a` and `b` (zero initial guess), via a dense least-squares
/// solve on an orthonormal basis built with classical Gram-Schmidt twice.
fn minres_oracle(a: &Mat<f64>, b: &[f64], steps: usize) -> Vec<f64> {
    let n = b.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut v = b.to_vec();
    let mut out = vec![norm2(b)];
    for _ in 0..steps {
        for _ in 0..2 {
            let coeffs: Vec<f64> = basis.iter().map(|q| dot(q, &v)).collect();
            for (c, q) in coeffs.iter().zip(&basis) {
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let nv = norm2(&v);
        basis.push(v.iter().map(|x| x / nv).collect());
        let k = basis.len();
        // min |b - A V y| via the normal equations of the small problem
        let av: Vec<Vec<f64>> = basis.iter().map(|q| mat_vec(a, q)).collect();
        let g = Mat::from_fn(k, k, |i, j| dot(&av[i], &av[j]));
        let rhs: Vec<f64> = av.iter().map(|c| dot(c, b)).collect();
        let y = dense_solve(&g, &rhs);
        let mut r = b.to_vec();
        for (yi, c) in y.iter().zip(&av) {
            r.iter_mut().zip(c).for_each(|(x, z)| *x -= yi * z);
        }
        out.push(norm2(&r));
        v = mat_vec(a, basis.last().unwrap());
        assert_eq!(v.len(), n);
    }
    out
}

#[test]
fn identity_converges_in_one_step() {
    let n = 20;
    let id = IdentityOperator::new(n);
    let b = random_vec(&mut rng(1), n);
    let opts = GmresOptions { ref_norm: norm2(&b), ..Default::default() };
    let (x, stats) = gmres(&id, &id, &b, &vec![0.0; n], &opts).unwrap();
    assert_eq!(stats.iterations, 1);
    assert!(rel_diff(&x, &b) < 1e-14);
}

#[test]
fn gmres_history_matches_minimal_residual_oracle() {
    let n = 50;
    let a = random_spd(n, 2);
    let b = random_vec(&mut rng(3), n);
    let opts = GmresOptions { rel_tol: 1e-8, ref_norm: norm2(&b), max_iter: 200 };
    let (x, stats) = gmres(&a, &IdentityOperator::new(n), &b, &vec![0.0; n], &opts).unwrap();
    assert!(stats.converged);
    let steps = stats.iterations.min(12);
    let oracle = minres_oracle(&to_mat(&a), &b, steps);
    for k in 0..=steps {
        let d = (stats.residual_history[k] - oracle[k]).abs() / oracle[0];
        assert!(d < 1e-10, "step {k}: {} vs {}", stats.residual_history[k], oracle[k]);
    }
    // residual estimates are nonincreasing and the last one is the true residual
    assert!(stats.residual_history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    let mut r = a.mul_vec(&x);
    r.iter_mut().zip(&b).for_each(|(ri, bi)| *ri = bi - *ri);
    assert!((norm2(&r) - stats.final_residual()).abs() < 1e-10 * norm2(&b));
}

#[test]
fn right_preconditioning_keeps_true_residuals() {
    let n = 40;
    let a = random_spd(n, 4);
    let d: Vec<f64> = a.diagonal().iter().map(|v| 1.0 / v).collect();
    let jacobi = CsrMatrix::from_diagonal(&d);
    let b = random_vec(&mut rng(5), n);
    let x0 = random_vec(&mut rng(6), n);
    let opts = GmresOptions { rel_tol: 1e-10, ref_norm: norm2(&b), max_iter: 100 };
    let (x, stats) = gmres(&a, &jacobi, &b, &x0, &opts).unwrap();
    assert!(stats.converged);
    let mut r0 = a.mul_vec(&x0);
    r0.iter_mut().zip(&b).for_each(|(ri, bi)| *ri = bi - *ri);
    assert!((stats.residual_history[0] - norm2(&r0)).abs() < 1e-12 * norm2(&r0));
    let exact = dense_solve(&to_mat(&a), &b);
    assert!(rel_diff(&x, &exact) < 1e-8);
}

#[test]
fn gmres_rejects_bad_input() {
    let a = CsrMatrix::identity(3);
    let id = IdentityOperator::new(3);
    let opts = GmresOptions { ref_norm: 0.0, ..Default::default() };
    assert!(gmres(&a, &id, &[1.0; 3], &[0.0; 3], &opts).is_err());
    let opts = GmresOptions::default();
    assert!(gmres(&a, &id, &[1.0; 2], &[0.0; 3], &opts).is_err());
}

#[test]
fn diagonal_factorisation() {
    let a = CsrMatrix::from_diagonal(&[2.0, 4.0]);
    let lu = sparse_factorize(&a).unwrap();
    assert!(rel_diff(&lu.solve(&[2.0, 8.0]), &[1.0, 2.0]) < 1e-15);
}

#[test]
fn cavity_velocity_block_factorisation() {
    let grid = build_grid(16, 1.2e-3, 1.8e-2, 100.0).unwrap();
    let disc = build_discretization(&grid, ElementPair::Q2Q1);
    let oseen = OseenAssembly::new(&grid, &disc, 0.0, 1.0);
    let system = oseen.stokes_system(&disc.boundary_values(1.0));
    let f = &system.f;
    let b = random_vec(&mut rng(7), f.nrows());
    let x = sparse_factorize(f).unwrap().solve(&b);
    let mut r = f.mul_vec(&x);
    r.iter_mut().zip(&b).for_each(|(ri, bi)| *ri -= bi);
    assert!(norm2(&r) / norm2(&b) <= 1e-12);

    // symbolic reuse on a matrix with the same pattern
    let pattern = LuPattern::analyse(f).unwrap();
    let f2 = f.scale(3.0);
    let y = sparse_factorize_with(&f2, &pattern).unwrap().solve(&b);
    let x3: Vec<f64> = x.iter().map(|v| v / 3.0).collect();
    assert!(rel_diff(&y, &x3) < 1e-12);
}

/// Unpreconditioned conjugate gradients, run to a tight tolerance.
fn cg(a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = 1e-28 * rr;
    for _ in 0..10 * b.len() {
        let ap = a.mul_vec(&p);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let next = dot(&r, &r);
        if next < stop {
            break;
        }
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + next / rr * *pi);
        rr = next;
    }
    x
}

#[test]
fn velocity_mass_solve_matches_conjugate_gradients() {
    let grid = build_grid(16, 1.2e-3, 1.8e-2, 100.0).unwrap();
    let disc = build_discretization(&grid, ElementPair::Q2Q1);
    let m = OseenAssembly::new(&grid, &disc, 0.0, 1.0).interior_velocity_mass(Weight::One);
    let b = random_vec(&mut rng(8), m.nrows());
    let x = sparse_factorize(&m).unwrap().solve(&b);
    assert!(rel_diff(&x, &cg(&m, &b)) < 1e-10);
}

#[test]
fn chebyshev_diagonal_and_zero_steps() {
    let m = CsrMatrix::from_diagonal(&[1.0, 3.0, 0.5]);
    let b = [2.0, 3.0, 1.0];
    for steps in [0, 1, 3] {
        assert!(rel_diff(&chebyshev_mass_solve(&m, &b, steps), &[2.0, 1.0, 2.0]) < 1e-15);
    }
    let grid = build_grid(8, 1.0, 1.0, 1.0).unwrap();
    let disc = build_discretization(&grid, ElementPair::Q2Q1);
    let mp = twophase_core::assembly::assemble_pressure_mass(&disc, &grid, Weight::One);
    let v = random_vec(&mut rng(10), mp.nrows());
    let jacobi: Vec<f64> = v.iter().zip(mp.diagonal()).map(|(a, d)| a / d).collect();
    assert!(rel_diff(&chebyshev_mass_solve(&mp, &v, 0), &jacobi) < 1e-15);
}

#[test]
fn chebyshev_contracts_the_q1_mass_error() {
    let grid = build_grid(16, 1.0, 1.0, 1.0).unwrap();
    let disc = build_discretization(&grid, ElementPair::Q2Q1);
    let mp = twophase_core::assembly::assemble_pressure_mass(&disc, &grid, Weight::One);
    let energy = |e: &[f64]| dot(e, &mp.mul_vec(e)).sqrt();
    for seed in 0..5 {
        let b = random_vec(&mut rng(20 + seed), mp.nrows());
        let exact = sparse_factorize(&mp).unwrap().solve(&b);
        let err = |x: Vec<f64>| -> f64 {
            let e: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
            energy(&e)
        };
        let e0 = err(chebyshev_mass_solve(&mp, &b, 0));
        let e3 = err(chebyshev_mass_solve(&mp, &b, 3));
        assert!(e3 <= chebyshev_contraction(3, MASS_SPECTRUM_BOUNDS) * e0 * (1.0 + 1e-12));
        assert!(e3 < e0);
    }
}

#[test]
fn sparse_products_match_dense_arithmetic() {
    let a = random_spd(12, 30);
    let mut r = rng(31);
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|_| random_vec(&mut r, 7).into_iter().map(|v| if v.abs() < 0.5 { 0.0 } else { v }).collect())
        .collect();
    let b = CsrMatrix::from_dense(&rows);
    let ab = a.matmul(&b);
    let (da, db) = (to_mat(&a), to_mat(&b));
    let dab = &da * &db;
    for i in 0..12 {
        for j in 0..7 {
            assert!((ab.get(i, j) - dab[(i, j)]).abs() < 1e-13);
        }
    }
    let x = random_vec(&mut r, 12);
    let bt = b.transpose();
    assert!(rel_diff(&bt.mul_vec(&x), &b.mul_transpose_vec(&x)) < 1e-14);
    let id = a.apply_vec(&x);
    assert!(rel_diff(&id, &mat_vec(&da, &x)) < 1e-14);
}
