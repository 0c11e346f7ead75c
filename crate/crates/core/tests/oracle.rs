use num_complex::Complex64 as C64;
use stefan_limits::model::*;
use stefan_limits::oracle::*;
use stefan_limits::solver::ModeData;

fn grids(n_y: usize, n_t: usize) -> Grids {
    Grids::new(GridSpec {
        n_x: 8,
        n_y,
        grading_ratio: 1.0,
        n_t,
        ..GridSpec::default()
    })
    .unwrap()
}

fn re(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Exact solution `v± = e^{-t}(1 + k±r)e^{-r²}`, `ρ = e^{ct}`, `ρ_E = e^{ct − Br}`.
struct Manufactured {
    xi: f64,
    c: f64,
    k: [f64; 2],
}

impl Manufactured {
    fn q(&self, side: usize, r: f64) -> [f64; 3] {
        let k = self.k[side];
        let e = (-r * r).exp();
        [
            (1.0 + k * r) * e,
            (k - 2.0 * r - 2.0 * k * r * r) * e,
            (-2.0 - 6.0 * k * r + 4.0 * r * r + 4.0 * k * r * r * r) * e,
        ]
    }

    fn b(&self) -> f64 {
        (1.0 + self.xi * self.xi).sqrt()
    }

    fn data(&self, p: &PhysicalParams, g: &Grids) -> ModeData {
        let (nt, ny) = (g.n_t(), g.n_y());
        let mut md = ModeData::zeros(1, self.xi, nt, ny);
        let (b, c, xi2) = (self.b(), self.c, self.xi * self.xi);
        for it in 0..nt {
            let t = g.t[it];
            let (et, rho) = ((-t).exp(), (c * t).exp());
            let rho_t = c * rho;
            md.g[it] = re(et + p.sigma * xi2 * rho + p.delta * rho_t);
            let jump = p.c_plus * (et * self.k[0] + p.a_plus() * b * rho)
                + p.c_minus * (et * self.k[1] + p.a_minus() * b * rho);
            md.h[it] = re(rho_t + jump);
            for k in 0..ny {
                for side in 0..2 {
                    let [q, _, q2] = self.q(side, g.y[k]);
                    let f = et * (-q - c * (q2 - xi2 * q));
                    if side == 0 {
                        md.f_plus[it][k] = re(f);
                    } else {
                        md.f_minus[it][k] = re(f);
                    }
                }
            }
        }
        for k in 0..ny {
            md.v0_plus[k] = re(self.q(0, g.y[k])[0]);
            md.v0_minus[k] = re(self.q(1, g.y[k])[0]);
        }
        md.v0_dy_plus = re(self.k[0]);
        md.v0_dy_minus = re(-self.k[1]);
        md.rho0 = re(1.0);
        md
    }

    /// Max nodal errors of `(ρ, v, ρ_E)`.
    fn errors(&self, sol: &stefan_limits::solver::ModeSolution, g: &Grids) -> [f64; 3] {
        let mut e = [0.0_f64; 3];
        for it in 0..g.n_t() {
            let t = g.t[it];
            let rho = (self.c * t).exp();
            e[0] = e[0].max((sol.rho[it] - rho).norm());
            for k in 0..g.n_y() {
                let r = g.y[k];
                e[1] = e[1]
                    .max((sol.v_plus[it][k] - (-t).exp() * self.q(0, r)[0]).norm())
                    .max((sol.v_minus[it][k] - (-t).exp() * self.q(1, r)[0]).norm());
                e[2] = e[2].max((sol.rhoe_plus[it][k] - rho * (-self.b() * r).exp()).norm());
            }
        }
        e
    }
}

fn manufactured_params(delta: f64, sigma: f64) -> PhysicalParams {
    PhysicalParams {
        c_plus: 1.5,
        c_minus: 1.5,
        a_plus: Coefficient::constant(0.7),
        ..PhysicalParams::default().with_mu(delta, sigma)
    }
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let ms = Manufactured {
        xi: 3.0,
        c: 1.5,
        k: [0.5, -0.3],
    };
    for (d, s) in [(0.0, 0.0), (0.5, 0.3), (0.0, 1.0), (1.0, 0.0)] {
        let p = manufactured_params(d, s);
        let errs: Vec<[f64; 3]> = [(40, 8), (80, 16), (160, 32), (320, 64)]
            .iter()
            .map(|&(ny, nt)| {
                let g = grids(ny, nt);
                let (sol, res) = integrate_mode(&ms.data(&p, &g), &p, &g, 1).unwrap();
                assert!(res.boundary < 1e-10 && res.stefan < 1e-10 && res.trace < 1e-12, "{res:?}");
                ms.errors(&sol, &g)
            })
            .collect();
        for w in errs.windows(2) {
            for c in 0..3 {
                let ratio = w[0][c] / w[1][c];
                assert!((3.2..5.0).contains(&ratio), "({d}, {s}) component {c}: {errs:?}");
            }
        }
        assert!(errs[3][0] < 5e-3 * (ms.c).exp(), "{errs:?}");
    }
}

#[test]
fn zero_data_gives_zero_series() {
    let g = grids(32, 8);
    for (d, s) in [(0.0, 0.0), (1.0, 1.0), (0.0, 0.5)] {
        let p = PhysicalParams::default().with_mu(d, s);
        let md = ModeData::zeros(2, 2.0, g.n_t(), g.n_y());
        let (sol, _) = integrate_mode(&md, &p, &g, 2).unwrap();
        assert!(sol.rho.iter().chain(sol.v_plus.iter().flatten()).all(|v| *v == re(0.0)));
        let (sol, _) = fd_solve(&DataTuple::zeros(&g), &p, &g, 1).unwrap();
        assert!(sol.v.is_zero() && sol.rho.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn unit_step_of_zero_state_stays_zero() {
    let g = grids(16, 4);
    let p = PhysicalParams::default();
    let ny = g.n_y();
    let zero = ModeSystemState {
        v_plus: vec![re(0.0); ny],
        v_minus: vec![re(0.0); ny],
        rho: re(0.0),
        rho_t: re(0.0),
        rhoe_plus: vec![re(0.0); ny],
        rhoe_minus: vec![re(0.0); ny],
    };
    let slice = ModeDataSlice {
        g: re(0.0),
        h: re(0.0),
        f_plus: vec![re(0.0); ny],
        f_minus: vec![re(0.0); ny],
    };
    let next = step_mode(&zero, 1.0, &slice, &slice, &p, &g, 0.1).unwrap();
    assert_eq!(next, zero);
}

#[test]
fn unperturbed_boundary_row_is_the_datum() {
    let g = grids(48, 16);
    let p = PhysicalParams::default();
    let data = make_compatible_data(&p, &g, &SeedFamily::Smooth.seeds(&g)).unwrap().0;
    let (sol, res) = fd_solve(&data, &p, &g, 2).unwrap();
    assert!(res.boundary < 1e-12);
    for it in 0..g.n_t() {
        for j in 0..g.n_x() {
            assert!((sol.v.plus[[it, j, 0]] - data.g[[it, j]]).abs() < 1e-12);
            assert!((sol.v.minus[[it, j, 0]] - data.g[[it, j]]).abs() < 1e-12);
        }
    }
}

#[test]
fn kinetic_boundary_residual_is_at_rounding_level() {
    let g = grids(48, 16);
    for (d, s) in [(1.0, 0.0), (0.5, 0.5), (0.0, 1.0)] {
        let p = PhysicalParams::default().with_mu(d, s);
        let data = make_compatible_data(&p, &g, &SeedFamily::Smooth.seeds(&g)).unwrap().0;
        let (sol, res) = fd_solve(&data, &p, &g, 2).unwrap();
        assert!(res.boundary < 1e-11 && res.stefan < 1e-11, "({d}, {s}): {res:?}");
        assert!(sol.trace_defect() < 1e-12);
    }
}

#[test]
fn oracle_is_linear() {
    let g = grids(32, 8);
    let p = PhysicalParams::default().with_mu(0.5, 0.25);
    let d1 = make_compatible_data(&p, &g, &SeedFamily::Smooth.seeds(&g)).unwrap().0;
    let d2 = make_compatible_data(&p, &g, &SeedFamily::TwoModeZeroTrace.seeds(&g)).unwrap().0;
    let (s1, _) = fd_solve(&d1, &p, &g, 1).unwrap();
    let (s2, _) = fd_solve(&d2, &p, &g, 1).unwrap();
    let (s12, _) = fd_solve(&d1.combine(2.0, &d2, -0.5), &p, &g, 1).unwrap();
    let mut lin = SolutionTriple::zeros(&g);
    lin.scaled_add(2.0, &s1);
    lin.scaled_add(-0.5, &s2);
    let d = s12.difference(&lin);
    assert!(d.rho.iter().chain(d.v.plus.iter()).chain(d.v.minus.iter()).all(|v| v.abs() < 1e-12));
}
