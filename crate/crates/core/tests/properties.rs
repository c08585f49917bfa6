use flrw_kinetic::collision::{btilde, elementary_energy, post_collision};
use flrw_kinetic::cosmo::{cosmo_rhs, CosmoState, Moments, PhysParams};
use flrw_kinetic::phase_space::{make_grid, moment_number, norm_sq, u_zero, GridFunction, MomentumGrid, Vec3};
use flrw_kinetic::transport::shift_interpolate;
use flrw_kinetic::verify::momentum_defect_ulps;
use proptest::prelude::*;

fn vec3(scale: f64) -> impl Strategy<Value = Vec3> {
    [-scale..scale, -scale..scale, -scale..scale]
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3(1.0)
        .prop_filter("away from zero", |v| norm_sq(v) > 1e-2)
        .prop_map(|v| {
            let r = norm_sq(&v).sqrt();
            [v[0] / r, v[1] / r, v[2] / r]
        })
}

fn grid() -> MomentumGrid {
    make_grid(4.0, 9).unwrap()
}

fn field() -> impl Strategy<Value = GridFunction> {
    proptest::collection::vec(-1.0f64..1.0, grid().len()).prop_map(|v| GridFunction::new(grid(), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn momentum_conserved_to_one_ulp(u in vec3(4.0), v in vec3(4.0), w in unit(), e in 0.5f64..2.0) {
        let (up, vp) = post_collision(&u, &v, &w, e).unwrap();
        prop_assert!(momentum_defect_ulps(&u, &v, &up, &vp) <= 1.0);
    }

    #[test]
    fn energy_conserved(u in vec3(4.0), v in vec3(4.0), w in unit(), e in 0.5f64..2.0) {
        let (up, vp) = post_collision(&u, &v, &w, e).unwrap();
        let before = elementary_energy(&u, &v, e);
        prop_assert!((u_zero(&up, e) + u_zero(&vp, e) - before).abs() <= 1e-10);
    }

    #[test]
    fn collision_parameter_antisymmetric(u in vec3(3.0), v in vec3(3.0), w in unit(), e in 0.5f64..2.0) {
        prop_assert_eq!(btilde(&v, &u, &w, e).unwrap(), -btilde(&u, &v, &w, e).unwrap());
        let (up, vp) = post_collision(&u, &v, &w, e).unwrap();
        prop_assert_eq!(post_collision(&v, &u, &w, e).unwrap(), (vp, up));
    }

    #[test]
    fn moment_is_linear(f in field(), g in field(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let h = f.lin_comb(a, &g, b).unwrap();
        let want = a * moment_number(&f) + b * moment_number(&g);
        let scale = a.abs() * moment_number(&f.map(f64::abs)) + b.abs() * moment_number(&g.map(f64::abs));
        prop_assert!((moment_number(&h) - want).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn shift_is_linear(f in field(), g in field(), a in -2.0f64..2.0, delta in -1.5f64..1.5) {
        let lhs = shift_interpolate(&f.lin_comb(a, &g, 1.0).unwrap(), delta);
        let rhs = shift_interpolate(&f, delta).lin_comb(a, &shift_interpolate(&g, delta), 1.0).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn flux_is_conserved_by_the_vector_field(
        e in 0.1f64..3.0, u in 0.1f64..3.0, z in -2.0f64..2.0, psi in 0.01f64..1.0, p11 in 0.0f64..1.0,
    ) {
        let s = CosmoState { e, u, w: -0.1, z, phi: 0.3, psi };
        let p = PhysParams { lambda: 1.0, m: 0.7, rho: 0.2 };
        let d = cosmo_rhs(&s, &Moments { n0: 0.0, e0: 0.0, p11 }, &p).unwrap();
        // d/dt (Z/E³) = (Ż E - 3 Z Ė) / E⁴
        prop_assert!((d.z * e - 3.0 * z * d.e).abs() <= 1e-12 * (z.abs() * u * e).max(1e-300));
    }

    #[test]
    fn field_serialization_roundtrips(f in field()) {
        let mut csv = Vec::new();
        f.write_csv(&mut csv).unwrap();
        prop_assert_eq!(&GridFunction::read_csv(&csv[..]).unwrap(), &f);
        let mut bin = Vec::new();
        f.write_binary(&mut bin).unwrap();
        prop_assert_eq!(&GridFunction::read_binary(&bin[..]).unwrap(), &f);
    }
}
