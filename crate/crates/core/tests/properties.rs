mod common;

use coflow::coalgebra::{Catalog, Sites};
use coflow::coordinates::{
    kappa_cos, kappa_sin, r_to_rho, rho_to_r, to_cartesian, to_polar, MomentumScale, Radial, SpaceSignature,
};
use coflow::poisson::{bracket, poisson_bracket};
use coflow::{PhaseFunction, PhasePoint};
use proptest::prelude::*;

fn point(n: usize) -> impl Strategy<Value = PhasePoint> {
    prop::collection::vec(-1.5f64..1.5, 2 * n).prop_map(|v| PhasePoint::from_flat(&v).unwrap())
}

fn system(n: usize, z: f64) -> Vec<PhaseFunction> {
    let sites = Sites::new(n, z).unwrap();
    let r = sites.realize();
    let mut fs = vec![r.j_minus, r.j_plus, r.j_three, sites.hamiltonian_superintegrable()];
    if n >= 2 {
        fs.push(sites.casimir(2).unwrap());
    }
    fs.push(sites.hamiltonian_family(Catalog::Linear).unwrap());
    fs
}

fn sized() -> impl Strategy<Value = (usize, f64, PhasePoint)> {
    (1usize..=4, -1.0f64..1.0).prop_flat_map(|(n, z)| (Just(n), Just(z), point(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric((n, z, x) in sized()) {
        let fs = system(n, z);
        for f in &fs {
            for g in &fs {
                let a = poisson_bracket(f, g, &x).unwrap();
                let b = poisson_bracket(g, f, &x).unwrap();
                prop_assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn bracket_obeys_leibniz((n, z, x) in sized()) {
        let fs = system(n, z);
        let (f, g, h) = (&fs[0], &fs[1], &fs[2]);
        let lhs = poisson_bracket(f, &g.mul(h), &x).unwrap();
        let rhs = poisson_bracket(f, g, &x).unwrap() * h.value(&x) + g.value(&x) * poisson_bracket(f, h, &x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn jacobi_identity((n, z, x) in sized()) {
        let fs = system(n, z);
        for (a, b, c) in [(0, 1, 2), (1, 2, 3), (0, 3, 4.min(fs.len() - 1))] {
            let (f, g, h) = (&fs[a], &fs[b], &fs[c]);
            let t1 = poisson_bracket(f, &bracket(g, h).unwrap(), &x).unwrap();
            let t2 = poisson_bracket(g, &bracket(h, f).unwrap(), &x).unwrap();
            let t3 = poisson_bracket(h, &bracket(f, g).unwrap(), &x).unwrap();
            let scale = t1.abs().max(t2.abs()).max(t3.abs()).max(1.0);
            prop_assert!((t1 + t2 + t3).abs() <= 1e-7 * scale, "{} {} {}", t1, t2, t3);
        }
    }

    #[test]
    fn casimirs_match_closed_forms(z in -1.0f64..1.0, x in point(3)) {
        let sites = Sites::new(3, z).unwrap();
        let c2 = sites.casimir(2).unwrap().value(&x);
        let c3 = sites.casimir(3).unwrap().value(&x);
        prop_assert!(common::rel(c2, common::casimir2(z, &x.q, &x.p)) < 1e-12);
        prop_assert!(common::rel(c3, common::casimir3(z, &x.q, &x.p)) < 1e-12);
    }

    #[test]
    fn polar_round_trip(
        z in 0.05f64..1.0,
        lorentzian in any::<bool>(),
        u in prop::array::uniform3(0.15f64..0.95),
        p in prop::array::uniform3(-1.0f64..1.0),
        doubled in any::<bool>(),
        use_r in any::<bool>(),
    ) {
        let kappa2 = if lorentzian { -1.0 } else { 1.0 };
        let sig = SpaceSignature::new(z, kappa2).unwrap();
        // inside the light cone q3² > q1² + q2² for the Lorentzian chart
        let q = if lorentzian { vec![0.5 * u[0], 0.5 * u[1], 0.8 + 0.4 * u[2]] } else { u.to_vec() };
        let x = PhasePoint::new(q, p.to_vec()).unwrap();
        let scale = if doubled { MomentumScale::Doubled } else { MomentumScale::Canonical };
        let radial = if use_r { Radial::R } else { Radial::Rho };
        let y = to_polar(&x, sig, radial, scale).unwrap();
        let back = to_cartesian(&y, sig, scale).unwrap();
        for (a, b) in back.flat().iter().zip(x.flat()) {
            prop_assert!((a - b).abs() < 1e-10, "{:?} vs {:?}", back, x);
        }
    }

    #[test]
    fn kappa_pythagoras(kappa in -2.0f64..2.0, t in -1.0f64..1.0) {
        let (s, c) = (kappa_sin(kappa, t), kappa_cos(kappa, t));
        prop_assert!((c * c + kappa * s * s - 1.0).abs() < 1e-12);
        prop_assert!((s - common::ksin(kappa, t)).abs() < 1e-12);
    }

    #[test]
    fn radial_reparametrization_inverts(z in -1.0f64..1.0, frac in 0.01f64..0.95) {
        let top = if z < 0.0 { std::f64::consts::FRAC_PI_2 / (-z).sqrt() } else { 3.0 };
        let rho = frac * top;
        let back = r_to_rho(rho_to_r(rho, z).unwrap(), z).unwrap();
        prop_assert!((back - rho).abs() < 1e-12 * rho.max(1.0));
    }
}
