use std::f64::consts::{FRAC_1_SQRT_2, PI};

use approx::assert_abs_diff_eq;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stefan_limits::model::{Coefficient, PhysicalParams};
use stefan_limits::symbols::*;
use twofloat::TwoFloat;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn unit_params() -> PhysicalParams {
    PhysicalParams::default()
}

#[test]
fn omega_values() {
    assert_abs_diff_eq!(omega(c(3.0, 0.0), c(1.0, 0.0), 1.0, 1.0).unwrap().re, 5.0_f64.sqrt(), epsilon = 1e-15);
    assert_eq!(omega(c(0.0, 0.0), c(0.0, 0.0), 1.0, 1.0).unwrap(), c(1.0, 0.0));
}

#[test]
fn m_at_the_unit_point() {
    let p = unit_params();
    let m = m_symbol(&SectorPoint::new(c(0.0, 0.0), c(0.0, 0.0), 0.0, 0.0), &p);
    assert!((m - c(3.0, 0.0)).norm() <= 1e-14);
    let m = m_symbol(&SectorPoint::new(c(0.0, 0.0), c(0.0, 0.0), 1.0, 0.0), &p);
    assert!((m - c(5.0, 0.0)).norm() <= 1e-14);
}

#[test]
fn family_at_the_unit_point() {
    let f = m_family(&SectorPoint::new(c(0.0, 0.0), c(0.0, 0.0), 0.0, 0.0), &unit_params());
    assert!((f[0] - c(1.0 / 3.0, 0.0)).norm() <= 1e-15);
    assert!((f[1] - c(1.0 / 3.0, 0.0)).norm() <= 1e-15);
    assert_eq!(f[2], c(0.0, 0.0));
}

#[test]
fn triangle_ratio_values() {
    assert_eq!(triangle_ratio(c(1.0, 0.0), c(1.0, 0.0)).unwrap(), 1.0);
    assert_eq!(triangle_ratio(c(1.0, 0.0), c(-1.0, 0.0)).unwrap(), 0.0);
    assert_abs_diff_eq!(triangle_ratio(c(1.0, 0.0), c(0.0, 1.0)).unwrap(), FRAC_1_SQRT_2, epsilon = 1e-15);
    assert!(triangle_ratio(c(0.0, 0.0), c(0.0, 0.0)).is_err());
}

fn random_point(rng: &mut ChaCha8Rng, geom: &SectorGeometry) -> SectorPoint {
    let lr = 10f64.powf(rng.gen_range(-3.0..6.0));
    let la = rng.gen_range(-1.0..1.0) * (PI - geom.phi0) * 0.999;
    let zr = 10f64.powf(rng.gen_range(-3.0..6.0));
    let za = rng.gen_range(-1.0..1.0) * geom.phi * 0.999;
    SectorPoint::new(
        C64::from_polar(lr, la),
        C64::from_polar(zr, za),
        rng.gen_range(0.0..1.0),
        rng.gen_range(0.0..1.0),
    )
}

#[test]
fn omega_has_positive_real_part_on_the_sector() {
    let geom = SectorGeometry::new(0.45, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let pt = random_point(&mut rng, &geom);
        assert!(pt.is_admissible(&geom));
        for cc in [0.5, 1.0, 3.0] {
            let w = omega(pt.lambda, pt.z, cc, 1.0).unwrap();
            assert!(w.re > 0.0, "Re ω = {} at {pt:?}", w.re);
        }
    }
}

#[test]
fn family_identities() {
    let geom = SectorGeometry::new(0.45, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = PhysicalParams {
        c_plus: 2.0,
        c_minus: 0.5,
        kappa: 3.0,
        a_plus: Coefficient::constant(0.7),
        ..unit_params()
    };
    for _ in 0..1000 {
        let pt = random_point(&mut rng, &geom);
        let f = m_family(&pt, &p);
        let mu = pt.lambda + p.kappa;
        // m₁ = (λ+κ)·m₀ and m₆ = m₅·√z/√(λ+κ)
        assert!((f[1] - mu * f[0]).norm() <= 1e-14 * f[1].norm().max(1e-300) * 4.0);
        if pt.delta > 0.0 {
            let rhs = f[5] * pt.z.sqrt() / mu.sqrt();
            assert!((f[6] - rhs).norm() <= 1e-13 * f[6].norm());
        }
        if pt.sigma > 0.0 {
            // m₄ = m₃·√z/√(λ+κ)
            let rhs = f[3] * pt.z.sqrt() / mu.sqrt();
            assert!((f[4] - rhs).norm() <= 1e-13 * f[4].norm());
        }
        let zero = m_family(&SectorPoint { delta: 0.0, sigma: 0.0, ..pt }, &p);
        assert!(zero[3..].iter().all(|v| *v == c(0.0, 0.0)));
    }
}

#[derive(Clone, Copy)]
struct Dd {
    re: TwoFloat,
    im: TwoFloat,
}

impl Dd {
    fn from(z: C64) -> Self {
        Dd {
            re: TwoFloat::from(z.re),
            im: TwoFloat::from(z.im),
        }
    }
    fn real(x: f64) -> Self {
        Dd::from(c(x, 0.0))
    }
    fn add(self, o: Dd) -> Dd {
        Dd {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
    fn mul(self, o: Dd) -> Dd {
        Dd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
    fn sqrt(self) -> Dd {
        let r = (self.re * self.re + self.im * self.im).sqrt();
        if self.re.hi() >= 0.0 {
            let s = ((r + self.re) / 2.0).sqrt();
            Dd { re: s, im: self.im / (s * 2.0) }
        } else {
            let t = ((r - self.re) / 2.0).sqrt();
            let sign = if self.im.hi() < 0.0 { -1.0 } else { 1.0 };
            Dd {
                re: self.im.abs() / (t * 2.0),
                im: t * sign,
            }
        }
    }
    fn to_c64(self) -> C64 {
        c(self.re.hi(), self.im.hi())
    }
}

fn m_double_double(pt: &SectorPoint, p: &PhysicalParams) -> C64 {
    let mu = Dd::from(pt.lambda).add(Dd::real(p.kappa));
    let z = Dd::from(pt.z);
    let wp = mu.add(z.mul(Dd::real(p.c_plus))).sqrt();
    let wm = mu.add(z.mul(Dd::real(p.c_minus))).sqrt();
    let sp = Dd::real(p.c_plus).sqrt();
    let sm = Dd::real(p.c_minus).sqrt();
    let sum = sp.mul(wp).add(sm.mul(wm));
    let a = Dd::real(p.a_plus.eval(pt.delta, pt.sigma))
        .mul(sp)
        .mul(wp)
        .add(Dd::real(p.a_minus.eval(pt.delta, pt.sigma)).mul(sm).mul(wm));
    let pre = z.mul(Dd::real(pt.sigma)).add(mu.mul(Dd::real(pt.delta)));
    mu.add(pre.mul(sum)).add(a).to_c64()
}

#[test]
fn m_matches_double_double_evaluation() {
    let geom = SectorGeometry::new(0.45, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = PhysicalParams {
        c_plus: 1.7,
        c_minus: 0.4,
        kappa: 2.0,
        a_minus: Coefficient::Affine {
            base: 1.0,
            d_delta: 0.5,
            d_sigma: -0.25,
        },
        ..unit_params()
    };
    for _ in 0..2000 {
        let pt = random_point(&mut rng, &geom);
        let fast = m_symbol(&pt, &p);
        let slow = m_double_double(&pt, &p);
        assert!((fast - slow).norm() <= 1e-13 * slow.norm(), "{fast} vs {slow} at {pt:?}");
    }
}

fn small_spec() -> SectorSpec {
    SectorSpec {
        n_lambda: 16,
        n_z: 16,
        n_arg: 3,
        n_delta: 3,
        n_sigma: 3,
        ..SectorSpec::default()
    }
}

#[test]
fn margin_decreases_in_kappa() {
    let spec = small_spec();
    let p = unit_params().with_mu(1.0, 0.0);
    let margins: Vec<f64> = (0..9)
        .map(|k| perturbation_margin(&p.with_kappa((1u32 << k) as f64), &spec).unwrap())
        .collect();
    for w in margins.windows(2) {
        assert!(w[1] <= w[0], "{margins:?}");
    }
}

#[test]
fn margin_vanishes_without_the_coefficient() {
    let p = PhysicalParams {
        a_plus: Coefficient::constant(0.0),
        a_minus: Coefficient::constant(0.0),
        ..unit_params().with_mu(0.5, 0.5)
    };
    for kappa in [1.0, 4.0, 64.0] {
        assert_eq!(perturbation_margin(&p.with_kappa(kappa), &small_spec()).unwrap(), 0.0);
    }
    assert!(perturbation_margin(&unit_params(), &small_spec()).is_err());
}

#[test]
fn surface_tension_margin_decays_like_inverse_root_kappa() {
    let spec = small_spec();
    let p = unit_params().with_mu(0.0, 1.0);
    for kappa in [4.0, 16.0, 64.0] {
        let r = perturbation_margin(&p.with_kappa(4.0 * kappa), &spec).unwrap()
            / perturbation_margin(&p.with_kappa(kappa), &spec).unwrap();
        assert!((r - 0.5).abs() <= 0.125, "κ = {kappa}: ratio {r}");
    }
}

#[test]
fn samples_are_admissible_in_a_narrow_sector() {
    let spec = SectorSpec {
        phi_fraction: 0.1,
        ..small_spec()
    };
    let report = probe_sector_bounds(&unit_params(), &spec).unwrap();
    assert!(report.all_admissible);
    assert!(report.per_mu.iter().all(|b| b.all_admissible));
}

#[test]
fn unperturbed_row_has_vanishing_higher_family() {
    let report = probe_sector_bounds(&unit_params(), &small_spec()).unwrap();
    let row = report.per_mu.iter().find(|b| b.delta == 0.0 && b.sigma == 0.0).unwrap();
    assert_eq!(&row.sup_m[3..], &[0.0; 4]);
    assert!(row.min_triangle > 0.0);
    assert!(report.sup_m.iter().all(|v| v.is_finite()));
}

#[test]
fn omega_lower_constant_is_stable() {
    let spec = SectorSpec {
        n_lambda: 20,
        n_z: 20,
        ..SectorSpec::default()
    };
    let c0 = omega_lower_constant(&spec, 2.0, 1.0).unwrap();
    let c1 = omega_lower_constant(&spec.doubled(), 2.0, 1.0).unwrap();
    assert!(c0 > 0.0);
    assert!((c0 - c1).abs() <= 0.1 * c0, "{c0} vs {c1}");
    let (lambda, z) = (c(0.0, 1e4), c(1e2, 0.0));
    let w = omega(lambda, z, 2.0, 1.0).unwrap();
    assert!(w.norm() >= c1 * (lambda.norm().sqrt() + 1.0 + 2.0 * z.norm().sqrt()));
}

proptest! {
    #[test]
    fn triangle_ratio_is_rotation_and_scale_invariant(
        a in -10.0..10.0f64, b in -10.0..10.0f64,
        x in -10.0..10.0f64, y in -10.0..10.0f64,
        theta in -PI..PI, s in 1e-3..1e3f64,
    ) {
        let (f1, f2) = (c(a, b), c(x, y));
        prop_assume!(f1.norm() + f2.norm() > 1e-6);
        let r0 = triangle_ratio(f1, f2).unwrap();
        let rot = C64::from_polar(s, theta);
        let r1 = triangle_ratio(f1 * rot, f2 * rot).unwrap();
        prop_assert!((r0 - r1).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&r0));
    }

    #[test]
    fn split_recombines_to_m(lr in -3.0..6.0f64, la in -1.0..1.0f64, zr in -3.0..6.0f64, d in 0.0..1.0f64, s in 0.0..1.0f64) {
        let p = unit_params().with_mu(d, s);
        let lambda = C64::from_polar(10f64.powf(lr), la * 1.2);
        let z = c(10f64.powf(zr), 0.0);
        let sym = ModeSymbols::at(lambda + p.kappa, z, &p);
        let (f1, f2) = sym.split(z, &p);
        prop_assert!((f1 + f2 - sym.m).norm() <= 1e-13 * sym.m.norm());
    }
}
