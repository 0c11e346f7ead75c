use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use stefan_limits::transform::{inverse_laplace, laplace_of_data, reflect_extend, ContourKind, ContourSpec, Tangential};

fn catalog() -> Vec<(&'static str, Box<dyn Fn(C64) -> C64>, f64, f64)> {
    vec![
        ("1/(λ+1)", Box::new(|l: C64| 1.0 / (l + 1.0)), 1.0, (-1.0_f64).exp()),
        ("1/λ²", Box::new(|l: C64| 1.0 / (l * l)), 2.0, 2.0),
        ("1/√(λ+1)", Box::new(|l: C64| 1.0 / (l + 1.0).sqrt()), 1.0, (-1.0_f64).exp() / PI.sqrt()),
        ("1/(λ²+1)", Box::new(|l: C64| 1.0 / (l * l + 1.0)), 1.5, 1.5_f64.sin()),
        ("1/λ", Box::new(|l: C64| 1.0 / l), 0.7, 1.0),
    ]
}

#[test]
fn catalog_pairs_invert() {
    let spec = ContourSpec::default();
    for (name, f, t, exact) in catalog() {
        let got = inverse_laplace(&f, t, &spec).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!((got.re - exact).abs() <= 1e-8, "{name}: {} vs {exact}", got.re);
        assert!(got.im.abs() <= 1e-8, "{name}: imaginary part {}", got.im);
    }
}

#[test]
fn bromwich_contour_agrees() {
    let spec = ContourSpec {
        kind: ContourKind::Bromwich,
        ..ContourSpec::default()
    };
    for (name, f, t, exact) in catalog() {
        let got = inverse_laplace(&f, t, &spec).unwrap();
        assert!((got.re - exact).abs() <= 1e-6, "{name}: {} vs {exact}", got.re);
    }
}

#[test]
fn nonpositive_time_is_rejected() {
    assert!(inverse_laplace(|l: C64| 1.0 / l, 0.0, &ContourSpec::default()).is_err());
    let bad = ContourSpec {
        n_nodes: 4,
        ..ContourSpec::default()
    };
    assert!(inverse_laplace(|l: C64| 1.0 / l, 1.0, &bad).is_err());
}

#[test]
fn constant_field_lives_on_the_zero_mode() {
    let n = 16;
    let tang = Tangential::new(n);
    let modes = tang.forward(&vec![1.0; n]);
    assert_abs_diff_eq!(modes[0].re, (n as f64).sqrt(), epsilon = 1e-13);
    for m in &modes[1..] {
        assert!(m.norm() < 1e-13);
    }
}

#[test]
fn cosine_splits_evenly() {
    let n = 32;
    let l = 2.0 * PI;
    let tang = Tangential::new(n);
    let u: Vec<f64> = (0..n).map(|j| (2.0 * PI * (-l / 2.0 + j as f64 * l / n as f64) / l).cos()).collect();
    let modes = tang.forward(&u);
    assert_abs_diff_eq!(modes[1].norm(), modes[n - 1].norm(), epsilon = 1e-13);
    assert_abs_diff_eq!(modes[1].norm(), (n as f64).sqrt() / 2.0, epsilon = 1e-12);
    let rest: f64 = modes.iter().enumerate().filter(|(k, _)| *k != 1 && *k != n - 1).map(|(_, m)| m.norm()).sum();
    assert!(rest < 1e-12);
}

#[test]
fn wrong_lengths_are_shape_errors() {
    let tang = Tangential::new(8);
    assert!(tang.try_forward(&[0.0; 7]).is_err());
    assert!(tang.try_inverse(&[C64::new(0.0, 0.0); 9]).is_err());
}

fn ramp_closed_form(a: f64, big_t: f64) -> f64 {
    // ∫₀^T t e^{-at} dt + ∫_T^{2T} (2T − t) e^{-at} dt
    let first = (1.0 - (-a * big_t).exp() * (1.0 + a * big_t)) / (a * a);
    let second = (-2.0 * a * big_t).exp() * ((a * big_t).exp() * (a * big_t - 1.0) + 1.0) / (a * a);
    first + second
}

#[test]
fn transform_of_a_ramp() {
    let big_t = 1.0;
    let n = 16;
    let t: Vec<f64> = (0..=n).map(|i| big_t * i as f64 / n as f64).collect();
    let u: Vec<C64> = t.iter().map(|&s| C64::new(s, 0.0)).collect();
    let kappa = 1.0;
    let lambdas: Vec<C64> = [0.0, 0.5, 2.0, 7.5].iter().map(|&l| C64::new(l, 0.0)).collect();
    let tr = laplace_of_data(&t, &u, kappa, &lambdas, true, 8).unwrap();
    assert!(tr.warning.is_none());
    for (l, v) in lambdas.iter().zip(&tr.values) {
        let exact = ramp_closed_form(l.re + kappa, big_t);
        assert!((v.re - exact).abs() <= 1e-10, "λ = {}: {} vs {exact}", l.re, v.re);
        assert!(v.im.abs() <= 1e-14);
    }
}

#[test]
fn zero_series_transforms_to_zero() {
    let t = [0.0, 0.5, 1.0];
    let u = [C64::new(0.0, 0.0); 3];
    let tr = laplace_of_data(&t, &u, 1.0, &[C64::new(1.0, 3.0), C64::new(-0.5, 2.0)], true, 4).unwrap();
    assert!(tr.values.iter().all(|v| *v == C64::new(0.0, 0.0)));
}

#[test]
fn nonzero_start_warns_for_zero_trace_transforms() {
    let t = [0.0, 0.5, 1.0];
    let u = [C64::new(1.0, 0.0); 3];
    let tr = laplace_of_data(&t, &u, 1.0, &[C64::new(1.0, 0.0)], true, 4).unwrap();
    assert!(tr.warning.is_some());
}

#[test]
fn extension_is_continuous_at_the_end_time() {
    let t = [0.0, 0.25, 0.5, 0.75, 1.0];
    let u = [0.0, 0.1, 0.4, 0.2, 0.9];
    let below = reflect_extend(&t, &u, 1.0 - 1e-9);
    let above = reflect_extend(&t, &u, 1.0 + 1e-9);
    assert_abs_diff_eq!(below, above, epsilon = 1e-7);
    assert_abs_diff_eq!(reflect_extend(&t, &u, 1.75), u[1], epsilon = 1e-14);
}

proptest! {
    #[test]
    fn fourier_round_trip(u in prop::collection::vec(-10.0..10.0f64, 64)) {
        let tang = Tangential::new(64);
        let back = tang.inverse_real(&tang.forward(&u));
        let err = u.iter().zip(&back).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-13, "round-trip error {err}");
    }

    #[test]
    fn fourier_is_unitary(u in prop::collection::vec(-1.0..1.0f64, 32)) {
        let tang = Tangential::new(32);
        let e: f64 = u.iter().map(|v| v * v).sum();
        let m: f64 = tang.forward(&u).iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((e - m).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn data_transform_is_linear(
        a in prop::collection::vec(-1.0..1.0f64, 9),
        b in prop::collection::vec(-1.0..1.0f64, 9),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let t: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let lam = [C64::new(0.3, 4.0), C64::new(2.0, -1.0)];
        let ca: Vec<C64> = a.iter().map(|&v| C64::new(v, 0.0)).collect();
        let cb: Vec<C64> = b.iter().map(|&v| C64::new(v, 0.0)).collect();
        let cab: Vec<C64> = a.iter().zip(&b).map(|(x, y)| C64::new(alpha * x + beta * y, 0.0)).collect();
        let ta = laplace_of_data(&t, &ca, 1.0, &lam, false, 6).unwrap().values;
        let tb = laplace_of_data(&t, &cb, 1.0, &lam, false, 6).unwrap().values;
        let tab = laplace_of_data(&t, &cab, 1.0, &lam, false, 6).unwrap().values;
        for k in 0..lam.len() {
            prop_assert!((tab[k] - (ta[k] * alpha + tb[k] * beta)).norm() < 1e-12);
        }
    }
}
