use beatlab::spectral::{evolve, SimParams, SpectralField, SplitStep};
use beatlab::{Field, Sim};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn smooth(m: usize, amp: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(i64, Complex<f64>)> = (-(m as i64)..=m as i64)
        .map(|j| {
            let w = amp * (-(j.abs() as f64)).exp();
            (j, Complex::from_polar(w, rng.gen_range(0.0..std::f64::consts::TAU)))
        })
        .collect();
    SpectralField::from_modes(m, &modes).unwrap()
}

fn run(f0: &Field, p: &Sim, t: f64) -> Field {
    evolve(f0, p, t, &[], &mut []).unwrap().field
}

#[test]
fn plane_wave_is_exact() {
    let (a, n, nu) = (1.0, 2_i64, 0.1);
    let f0 = SpectralField::from_modes(8, &[(n, Complex::new(a, 0.0))]).unwrap();
    let p = Sim::new(nu, 1e-3, 8);
    let f = run(&f0, &p, 10.0);
    let exact = Complex::from_polar(a, -((n * n) as f64 + nu * a.powi(4)) * 10.0);
    assert!((f.get(n) - exact).norm() < 1e-8);
    let others: f64 = f.modes().filter(|&j| j != n).map(|j| f.action(j)).sum();
    assert!(others < 1e-20);
}

#[test]
fn linear_flow_keeps_moduli() {
    let f0 = smooth(12, 0.7, 1);
    let p = Sim::new(0.0, 1e-2, 12);
    let f = run(&f0, &p, 5.0);
    for j in f0.modes() {
        assert!((f.get(j).norm() - f0.get(j).norm()).abs() < 1e-12);
        let exact = f0.get(j) * Complex::from_polar(1.0, -((j * j) as f64) * 5.0);
        assert!((f.get(j) - exact).norm() < 1e-10);
    }
}

#[test]
fn nonlinear_substep_conserves_mass() {
    let mut f = smooth(16, 0.9, 2);
    let m0 = f.mass();
    let mut s = SplitStep::new(16, 3);
    s.nonlinear_step(&mut f, 0.5, 0.01);
    assert!((f.mass() - m0).abs() < 1e-12 * m0);
}

#[test]
fn strang_is_second_order() {
    let f0 = smooth(16, 0.8, 3);
    let t = 0.5;
    let reference = run(&f0, &Sim::new(1.0, 1e-5, 16), t);
    let e1 = run(&f0, &Sim::new(1.0, 4e-3, 16), t).max_diff(&reference);
    let e2 = run(&f0, &Sim::new(1.0, 2e-3, 16), t).max_diff(&reference);
    let ratio = e1 / e2;
    assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
}

#[test]
fn strang_is_time_reversible() {
    let f0 = smooth(32, 0.6, 4);
    let mut s = SplitStep::new(32, 3);
    let mut f = f0.clone();
    let fwd = Sim::new(0.5, 1e-3, 32);
    let mut back = fwd;
    back.dt = -fwd.dt;
    s.strang_step(&mut f, &fwd);
    s.strang_step(&mut f, &back);
    assert!(f.max_diff(&f0) < 1e-12, "{:e}", f.max_diff(&f0));
}

#[test]
fn one_step_matches_vector_field() {
    // (S(dt)u - u)/dt -> -i j^2 u_j - i nu (|u|^4 u)_j as dt -> 0.
    let f0 = smooth(16, 0.7, 5);
    let nu = 0.8;
    let mut s = SplitStep::new(16, 3);
    let n = s.nonlinearity(&f0);
    let defect = |dt: f64, s: &mut SplitStep<f64>| {
        let mut f = f0.clone();
        s.strang_step(&mut f, &Sim::new(nu, dt, 16));
        f0.modes()
            .map(|j| {
                let rhs = Complex::new(0.0, -1.0) * (f0.get(j) * (j * j) as f64 + n.get(j) * nu);
                ((f.get(j) - f0.get(j)) / dt - rhs).norm()
            })
            .fold(0.0, f64::max)
    };
    let d1 = defect(1e-4, &mut s);
    let d2 = defect(5e-5, &mut s);
    assert!(d2 < d1 * 0.6 && d1 < 1e-1, "{d1:e} {d2:e}");
}

fn brute_quintic(f: &Field, support: &[i64]) -> Vec<(i64, Complex<f64>)> {
    let mut out = std::collections::BTreeMap::new();
    for &a in support {
        for &b in support {
            for &c in support {
                for &d in support {
                    for &e in support {
                        let j = a + b + c - d - e;
                        let v = f.get(a) * f.get(b) * f.get(c) * f.get(d).conj() * f.get(e).conj();
                        *out.entry(j).or_insert(Complex::new(0.0, 0.0)) += v;
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

#[test]
fn dealiased_nonlinearity_matches_direct_convolution() {
    let m = 16_usize;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let support: Vec<i64> = (-8..=8).collect();
    let modes: Vec<(i64, Complex<f64>)> = support
        .iter()
        .map(|&j| (j, Complex::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))))
        .collect();
    let f = SpectralField::from_modes(m, &modes).unwrap();
    let mut s = SplitStep::new(m, 3);
    let fast = s.nonlinearity(&f);
    let direct = brute_quintic(&f, &support);
    let mut worst = 0.0_f64;
    for (j, v) in direct {
        if j.abs() <= m as i64 {
            worst = worst.max((fast.get(j) - v).norm());
        }
    }
    assert!(worst < 1e-13, "{worst:e}");
}

#[test]
fn sparse_support_has_no_spurious_modes() {
    // Modes {0, 3}: every product lands on a multiple of 3.
    let m = 16_usize;
    let f = SpectralField::from_modes(m, &[(0, Complex::new(0.7, 0.1)), (3, Complex::new(0.2, -0.5))]).unwrap();
    let mut s = SplitStep::new(m, 3);
    let n = s.nonlinearity(&f);
    for j in n.modes() {
        if j % 3 != 0 {
            assert!(n.get(j).norm() < 1e-15, "mode {j}: {:e}", n.get(j).norm());
        }
    }
    let direct = brute_quintic(&f, &[0, 3]);
    for (j, v) in direct {
        if j.abs() <= m as i64 {
            assert!((n.get(j) - v).norm() < 1e-14);
        }
    }
}

#[test]
fn conservation_over_long_run() {
    let f0 = smooth(32, 1.0, 7);
    let mut p = Sim::new(0.1, 1e-3, 32);
    p.sample_stride = 1000;
    let ev = evolve(&f0, &p, 100.0, &[], &mut []).unwrap();
    let d = &ev.diagnostics;
    assert!(d.mass_drift() < 1e-10, "mass {:e}", d.mass_drift());
    assert!(d.momentum_drift() < 1e-10, "momentum {:e}", d.momentum_drift());
    assert!(d.hamiltonian_drift() < 1e-6, "hamiltonian {:e}", d.hamiltonian_drift());
}

#[test]
fn observers_see_every_sample() {
    let f0 = smooth(8, 0.5, 8);
    let mut p = Sim::new(0.3, 1e-2, 8);
    p.sample_stride = 10;
    let mut seen = Vec::new();
    let mut obs = |step: u64, t: f64, f: &Field| seen.push((step, t, f.mass()));
    let ev = evolve(&f0, &p, 1.05, &[0, 1], &mut [&mut obs]).unwrap();
    assert_eq!(ev.steps, 105);
    let steps: Vec<u64> = seen.iter().map(|s| s.0).collect();
    assert_eq!(steps, vec![0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 105]);
    assert_eq!(ev.diagnostics.times.len(), seen.len());
    assert_eq!(ev.diagnostics.actions[0].len(), 2);
    // Fusing half steps must not change the result.
    let mut s = SplitStep::new(8, 3);
    let mut f = f0.clone();
    for _ in 0..105 {
        s.strang_step(&mut f, &p);
    }
    assert!(f.max_diff(&ev.field) < 1e-13);
}

#[test]
fn single_precision_solver() {
    let f0 = SpectralField::from_modes(8, &[(2, Complex::new(1.0_f32, 0.0))]).unwrap();
    let p = SimParams::new(0.1_f32, 1e-2, 8);
    let f = evolve(&f0, &p, 1.0, &[], &mut []).unwrap().field;
    let exact = Complex::from_polar(1.0_f32, -(4.0 + 0.1) * 1.0);
    assert!((f.get(2) - exact).norm() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn actions_sum_to_mass_and_survive_linear_steps(seed in 0u64..1000, t in -3.0f64..3.0) {
        let f0 = smooth(10, 0.9, seed);
        let sum: f64 = f0.actions().values().sum();
        prop_assert!((sum - f0.mass()).abs() < 1e-14);
        let mut s = SplitStep::new(10, 3);
        let mut f = f0.clone();
        s.linear_step(&mut f, t);
        for (j, a) in f0.actions() {
            prop_assert!((f.action(j) - a).abs() < 1e-15);
        }
    }
}
