use glvortex::ansatz::{build_vortex_product, sample_map, VortexProduct, VortexSpec};
use glvortex::solver::{
    dirichlet_degree_data, discrete_energy, gradient_flow, helical_reduced_solve, newton_refine, relax, BoundaryData,
    SolveConfig,
};
use glvortex::vortex::{loop_degree, vorticity_mask, Sampler};
use glvortex::{ComplexField, GridSpec};
use num_complex::Complex64;

fn disk(n: usize) -> GridSpec {
    GridSpec::disk_with_nodes([0.0, 0.0], 1.0, n).unwrap()
}

fn active_sup(u: &ComplexField, f: impl Fn([f64; 3], Complex64) -> f64) -> f64 {
    (0..u.grid().len())
        .filter(|&i| u.active()[i])
        .map(|i| f(u.grid().coords(i), u.value(i)))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn dipole_annihilates_without_log_energy() {
    let eps = 0.05;
    let spec = VortexSpec::new(vec![[-0.25, 0.0], [0.25, 0.0]], vec![1, -1]).unwrap();
    let u0 = build_vortex_product(&spec, eps, &disk(128)).unwrap();
    let bc = BoundaryData::frozen(&u0);
    let cfg = SolveConfig {
        residual_tol: 1e-6,
        ..SolveConfig::default()
    };
    let e0 = discrete_energy(&u0, &bc).unwrap();
    let out = relax(&u0, &bc, &cfg).unwrap();
    assert!(out.converged, "residual {}", out.residual);
    let e = discrete_energy(&out.field, &bc).unwrap();
    assert!(e < 0.5 && e < e0, "E = {e}, E0 = {e0}");
    assert!(vorticity_mask(&out.field, 0.5).iter().all(|z| !z));
}

#[test]
fn newton_refines_flow_output_quickly() {
    let eps = 0.05;
    let g = disk(160);
    let h = g.spacing();
    let u0 = ComplexField::from_fn(g.clone(), eps, |x, y, _| Complex64::new(x, y) / x.hypot(y).max(h)).unwrap();
    let bc = dirichlet_degree_data(1, &g, [0.0, 0.0]).unwrap();
    let flow = gradient_flow(
        &u0,
        &bc,
        &SolveConfig {
            residual_tol: 1e-4,
            newton: false,
            ..SolveConfig::default()
        },
    )
    .unwrap();
    assert!(flow.converged && flow.residual <= 1e-4);
    let out = newton_refine(
        &flow.field,
        &bc,
        &SolveConfig {
            residual_tol: 1e-9,
            ..SolveConfig::default()
        },
    )
    .unwrap();
    assert!(out.converged && out.residual <= 1e-9, "{:?}", out.history);
    assert!(out.history.len() - 1 <= 6, "{:?}", out.history);
    let center = out.field.sample(0.0, 0.0).unwrap().norm();
    assert!(center < 0.05, "|u(0)| = {center}");
    let top = active_sup(&out.field, |_, v| v.norm());
    assert!(top <= 1.0 + 10.0 * eps * eps, "max |u| = {top}");
}

#[test]
fn zero_state_with_unit_boundary_relaxes_to_positive_solution() {
    let eps = 0.1;
    let g = disk(96);
    let bc = dirichlet_degree_data(0, &g, [0.0, 0.0]).unwrap();
    let mut u0 = ComplexField::constant(g, eps, Complex64::new(0.0, 0.0)).unwrap();
    u0 = bc.impose(&u0).unwrap();
    let out = relax(&u0, &bc, &SolveConfig::default()).unwrap();
    assert!(out.converged, "residual {}", out.residual);
    let top = active_sup(&out.field, |_, v| v.norm());
    let low = -active_sup(&out.field, |_, v| -v.re);
    let imag = active_sup(&out.field, |_, v| v.im.abs());
    assert!(top <= 1.0 + 10.0 * eps * eps && low > 0.0 && imag < 1e-10, "{top} {low} {imag}");
}

#[test]
fn helical_constant_is_fixed_for_zero_twist() {
    let g = GridSpec::centered_square(1.0, 1.0 / 32.0).unwrap();
    let v0 = ComplexField::constant(g, 0.2, Complex64::new(1.0, 0.0)).unwrap();
    let out = helical_reduced_solve(0, &v0, &SolveConfig::default()).unwrap();
    assert!(out.converged && out.residual == 0.0);
    assert_eq!(out.field.values(), v0.values());
}

#[test]
fn helical_pair_keeps_two_zeros() {
    let eps = 0.15;
    let g = GridSpec::centered_square(1.5, std::f64::consts::TAU / 128.0).unwrap();
    let spec = VortexSpec::new(vec![[-0.4, 0.0], [0.4, 0.0]], vec![1, 1]).unwrap();
    let v0 = sample_map(&VortexProduct::new(spec, eps).unwrap(), &g).unwrap();
    let cfg = SolveConfig {
        residual_tol: 1e-7,
        newton_switch: 1e-2,
        ..SolveConfig::default()
    };
    let out = helical_reduced_solve(2, &v0, &cfg).unwrap();
    assert!(out.converged, "residual {}", out.residual);
    // One zero of winding 1 in each half plane; a nonzero winding on a small
    // loop forces a zero inside, which may sit between nodes.
    let u = &out.field;
    for side in [-1.0, 1.0] {
        let (i, m) = (0..u.grid().len())
            .filter(|&i| u.grid().coords(i)[0] * side > 0.0 && u.grid().coords(i)[0].hypot(u.grid().coords(i)[1]) < 1.0)
            .map(|i| (i, u.value(i).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let p = u.grid().coords(i);
        assert!(m < 0.25, "min |v| = {m} at {p:?}");
        assert_eq!(loop_degree(u, [p[0], p[1]], 0.1, 512).unwrap(), 1, "at {p:?}");
    }
}
