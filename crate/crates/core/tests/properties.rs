use glvortex::ansatz::{build_vortex_product, VortexProduct, VortexSpec};
use glvortex::config::{parse_run_config, KeyMode, RunConfig};
use glvortex::experiments::theta_m_tau;
use glvortex::hodge::hodge_decompose;
use glvortex::io::{bit_identical, decode_field, encode_field};
use glvortex::ops::{energy_breakdown, energy_density, interior_mask, jacobian_integral, EnergyOptions};
use glvortex::poisson::DirichletPoisson;
use glvortex::solver::{gradient_flow, BoundaryData, SolveConfig};
use glvortex::vortex::{loop_degree, MapSampler};
use glvortex::{ComplexField, GridSpec, Region};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LOOSE: EnergyOptions = EnergyOptions { allow_under_resolved: true };

fn random_field(nx: usize, ny: usize, seed: u64) -> ComplexField {
    let g = GridSpec::rectangle(nx, ny, 0.05, [0.0, 0.0]).unwrap();
    ComplexField::random(g, 0.1, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn centers() -> impl Strategy<Value = (Vec<[f64; 2]>, Vec<i32>)> {
    // Two vortices in opposite half planes, separated by at least 0.3.
    (
        (-0.6f64..-0.15, -0.5f64..0.5),
        (0.15f64..0.6, -0.5f64..0.5),
        prop::sample::select(vec![-2, -1, 1, 2]),
        prop::sample::select(vec![-2, -1, 1, 2]),
    )
        .prop_map(|(a, b, da, db)| (vec![[a.0, a.1], [b.0, b.1]], vec![da, db]))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn energy_density_is_nonnegative(nx in 8usize..20, ny in 8usize..20, seed in any::<u64>()) {
        let u = random_field(nx, ny, seed);
        for i in 0..u.grid().len() {
            let (d, p) = energy_density(&u, i);
            prop_assert!(d >= 0.0 && p >= 0.0);
        }
    }

    #[test]
    fn conjugation_keeps_energy_and_flips_jacobian(nx in 8usize..24, ny in 8usize..24, seed in any::<u64>()) {
        let u = random_field(nx, ny, seed);
        let c = u.conj();
        let (a, b) = (energy_breakdown(&u, &Region::All, &LOOSE).unwrap(), energy_breakdown(&c, &Region::All, &LOOSE).unwrap());
        prop_assert_eq!(a.dirichlet, b.dirichlet);
        prop_assert_eq!(a.potential, b.potential);
        let (ja, jb) = (jacobian_integral(&u, &Region::All).unwrap(), jacobian_integral(&c, &Region::All).unwrap());
        prop_assert!((ja + jb).abs() <= 1e-12 * (1.0 + ja.abs()), "{} vs {}", ja, jb);
    }

    #[test]
    fn loop_degree_is_radius_invariant((c, d) in centers(), r in 0.02f64..0.14) {
        let spec = VortexSpec::new(c.clone(), d.clone()).unwrap();
        let map = VortexProduct::new(spec, 0.01).unwrap();
        let s = MapSampler(&map);
        for (p, k) in c.iter().zip(&d) {
            prop_assert_eq!(loop_degree(&s, *p, r, 256).unwrap(), *k);
        }
    }

    #[test]
    fn loop_degree_adds_over_enclosed_vortices((c, d) in centers(), r in 0.9f64..1.2) {
        let spec = VortexSpec::new(c, d.clone()).unwrap();
        let map = VortexProduct::new(spec, 0.01).unwrap();
        let total: i32 = d.iter().sum();
        prop_assert_eq!(loop_degree(&MapSampler(&map), [0.0, 0.0], r, 1024).unwrap(), total);
    }

    #[test]
    fn poisson_solve_inverts_apply(nx in 1usize..24, ny in 1usize..24, shift in 0.0f64..5.0, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = DirichletPoisson::new(nx, ny, 0.1).unwrap();
        let x: Vec<f64> = (0..nx * ny).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut y = p.apply(&x, shift);
        p.solve(&mut y, shift).unwrap();
        let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10, "{}", err);
    }

    #[test]
    fn poisson_solve_is_linear(n in 2usize..20, a in -3.0f64..3.0, seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = DirichletPoisson::new(n, n + 1, 0.05).unwrap();
        let f: Vec<f64> = (0..n * (n + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n * (n + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut sum: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + y).collect();
        let (mut sf, mut sg) = (f, g);
        p.solve(&mut sum, 0.0).unwrap();
        p.solve(&mut sf, 0.0).unwrap();
        p.solve(&mut sg, 0.0).unwrap();
        let err = (0..sum.len()).map(|i| (sum[i] - a * sf[i] - sg[i]).abs()).fold(0.0, f64::max);
        let scale = sum.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(err < 1e-12 * scale, "{}", err);
    }

    #[test]
    fn theta_m_tau_is_bounded_and_monotone(m in 1i32..6, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let (a, b) = (theta_m_tau(m, lo), theta_m_tau(m, hi));
        let m = m as f64;
        // Strictly below m² for m ≥ 2; identically 1 for m = 1.
        prop_assert!(a >= m && a <= b);
        let bounded = if m == 1.0 { b == 1.0 } else { b < m * m };
        prop_assert!(bounded, "theta {} for m {}", b, m);
    }

    #[test]
    fn glf_encoding_round_trips(nx in 8usize..30, ny in 8usize..30, seed in any::<u64>()) {
        let u = random_field(nx, ny, seed);
        let back = decode_field(&encode_field(&u)).unwrap();
        prop_assert!(bit_identical(&u, &back));
    }

    #[test]
    fn glf_encoding_round_trips_disks(r in 0.3f64..1.0, h in 0.04f64..0.1, seed in any::<u64>()) {
        let g = GridSpec::disk([0.1, -0.2], r, h).unwrap();
        let u = ComplexField::random(g, 0.05, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let back = decode_field(&encode_field(&u)).unwrap();
        prop_assert!(bit_identical(&u, &back));
        prop_assert_eq!(back.active(), u.active());
    }

    #[test]
    fn run_config_round_trips_through_toml(seed in 0..=i64::MAX as u64, eps in prop::collection::vec(1e-4f64..0.4, 0..4)) {
        let cfg = RunConfig {
            seed,
            epsilons: if eps.is_empty() { None } else { Some(eps) },
            experiments: vec!["identity".into(), "clearing".into()],
            ..RunConfig::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        let (back, warnings) = parse_run_config(&text, KeyMode::Strict).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn hodge_parts_reassemble_the_current((c, d) in centers()) {
        let c: Vec<[f64; 2]> = c.iter().map(|p| [p[0] * 0.5, p[1] * 0.5]).collect();
        let spec = VortexSpec::new(c, d).unwrap();
        let u = build_vortex_product(&spec, 0.02, &GridSpec::centered_square(1.0, 1.0 / 64.0).unwrap()).unwrap();
        let parts = hodge_decompose(&u).unwrap();
        prop_assert!(parts.reconstruction_defect() < 1e-10, "{}", parts.reconstruction_defect());
        let (curl, _) = parts.harmonicity_defect();
        prop_assert!(curl < 1e-8, "{}", curl);
        // ψ absorbs d*(jv - ju), so the remainder's codifferential is that of ju.
        let (n, ju, h) = (u.grid().nx(), parts.ju(), parts.harmonic());
        for j in 2..n - 2 {
            for i in 2..n - 2 {
                let gap = (h.div_at(i, j) - ju.div_at(i, j)).abs();
                prop_assert!(gap < 1e-8 * (1.0 + ju.div_at(i, j).abs()), "{} at {} {}", gap, i, j);
            }
        }
    }

    #[test]
    fn flow_descends_and_keeps_boundary(seed in any::<u64>(), eps in 0.08f64..0.2) {
        let g = GridSpec::disk_with_nodes([0.0, 0.0], 1.0, 48).unwrap();
        let u0 = ComplexField::random(g, eps, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let bc = BoundaryData::frozen(&u0);
        let cfg = SolveConfig { residual_tol: 1e-3, max_steps: 200, newton: false, ..SolveConfig::default() };
        let out = gradient_flow(&u0, &bc, &cfg).unwrap();
        for w in out.log.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy * (1.0 + 1e-12), "{:?}", w);
        }
        let interior = interior_mask(&u0);
        for i in (0..u0.grid().len()).filter(|&i| u0.active()[i] && !interior[i]) {
            prop_assert_eq!(out.field.value(i), u0.value(i));
        }
    }
}
