//! Verification suite behind `brine selftest`: recomputes the derived
//! reference values and oracle agreements that a correct build must
//! reproduce, printing one line per check.

use brine::params::BoundaryCondition::{Minus, Plus};
use brine::{curves, diagram, exact, minimize, sim, ModelParams, ThermoPoint};

struct Outcome {
    name: &'static str,
    detail: Option<String>,
}

fn check(
    results: &mut Vec<Outcome>,
    name: &'static str,
    run: impl FnOnce() -> Result<(), String>,
) {
    let detail = run().err();
    results.push(Outcome { name, detail });
}

fn near(actual: f64, expected: f64, tol: f64, what: &str) -> Result<(), String> {
    if (actual - expected).abs() < tol {
        Ok(())
    } else {
        Err(format!("{what}: {actual} vs {expected} (tol {tol})"))
    }
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.6180339887498949;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > 1e-11 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Runs every check; returns the number of failures.
pub fn run() -> usize {
    let p = ModelParams::new(2, 0.8, 1.0, 1.0).unwrap();
    let steep = ModelParams::new(2, 0.98, 1.0, 4.0).unwrap();
    let mut results = Vec::new();

    check(&mut results, "salt free energy g and g'", || {
        near(p.g(0.8).unwrap(), 0.9347016640011663, 1e-12, "g(0.8)")?;
        near(p.g_prime(0.8).unwrap(), 0.33738721916638572, 1e-12, "g'(0.8)")
    });

    check(&mut results, "optimal salt fraction", || {
        near(p.theta_star(0.0).unwrap(), 0.73105857863000488, 1e-12, "theta*(0)")
    });

    check(&mut results, "surface cost at zero magnetization", || {
        near(
            p.surface_rate(Plus, 0.0).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            1e-14,
            "M+(0)",
        )
    });

    check(&mut results, "reduced rate at the origin", || {
        let pt = ThermoPoint::new(0.0, 2.0).unwrap();
        near(
            p.q_reduced(Plus, pt, 0.0).unwrap(),
            -0.53312223273000752,
            1e-12,
            "Q(0)",
        )
    });

    check(&mut results, "joint rate reduces over theta", || {
        for &(b, xi, m) in &[(0.3, 1.0, 0.2), (-1.0, 2.5, -0.5), (0.0, 0.7, 0.6)] {
            let pt = ThermoPoint::new(b, xi).unwrap();
            for bc in [Plus, Minus] {
                let (_, v) = golden(|t| p.q_joint(bc, pt, m, t).unwrap(), 0.0, 1.0);
                near(v, p.q_reduced(bc, pt, m).unwrap(), 1e-10, "inf_theta")?;
            }
        }
        Ok(())
    });

    check(&mut results, "plus-bc threshold, closed vs located", || {
        let closed = curves::xi_t_plus(&p);
        near(closed, 1.2596869692163848, 1e-10, "xi_t closed form")?;
        let located = curves::locate_xi_threshold(&p, Plus, 2.0 * closed)
            .map_err(|e| e.to_string())?;
        near(located, closed, 1e-6, "xi_t located")
    });

    check(&mut results, "lower curve continuous at the kink", || {
        let xt = curves::xi_t_plus(&p);
        near(
            curves::b2_plus(&p, xt - 1e-13),
            curves::b2_plus(&p, xt),
            1e-10,
            "b2 at xi_t",
        )
    });

    check(&mut results, "upper-curve slope identity", || {
        let h = 1e-4;
        let fd = (curves::b1_plus(&p, 2.0 + h).unwrap() - curves::b1_plus(&p, 2.0 - h).unwrap())
            / (2.0 * h);
        near(fd, curves::b1_slope_plus(&p, 2.0).unwrap(), 1e-5, "b1'(2)")?;
        near(
            curves::b1_slope_plus(&p, 1e3).unwrap(),
            -0.339453399528,
            1e-8,
            "b1'(1e3)",
        )
    });

    check(&mut results, "minus-bc thresholds, both regimes", || {
        let th = curves::thresholds_minus(&p).map_err(|e| e.to_string())?;
        if th.xi_t != th.xi_1 || th.m0.is_some() {
            return Err("canonical parameters should pinch at xi_1".into());
        }
        let th = curves::thresholds_minus(&steep).map_err(|e| e.to_string())?;
        near(th.xi_1, 0.19309668121865696, 1e-10, "xi_1")?;
        near(th.xi_2, 0.26483487885673062, 1e-10, "xi_2")?;
        near(th.xi_t, 0.18297080157488285, 1e-7, "xi_t")?;
        near(th.m0.unwrap(), -0.46741836673066852, 1e-5, "m0")
    });

    check(&mut results, "minimizers match a grid-scan oracle", || {
        let mut state = 0xbeefcafe12345678u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for k in 0..25 {
            let b = -3.0 + 6.0 * next();
            let xi = 4.0 * next();
            let bc = if k % 2 == 0 { Plus } else { Minus };
            let pt = ThermoPoint::new(b, xi).unwrap();
            let q = |m: f64| p.q_reduced(bc, pt, m).unwrap();
            let n = 20_000;
            let mut best = (-0.8, q(-0.8));
            for i in 0..=n {
                let m = (-0.8 + 1.6 * i as f64 / n as f64).clamp(-0.8, 0.8);
                let v = q(m);
                if v < best.1 {
                    best = (m, v);
                }
            }
            let step = 1.6 / n as f64;
            let (gx, gv) = golden(q, (best.0 - step).max(-0.8), (best.0 + step).min(0.8));
            let (bm, bv) = if gv < best.1 { (gx, gv) } else { best };
            let set = minimize::minimize_q(&p, bc, pt).map_err(|e| e.to_string())?;
            near(set.value(), bv, 1e-9, "minimum value")?;
            if !set.minimizers().iter().any(|m| (m - bm).abs() < 1e-5) {
                return Err(format!(
                    "location: scan {bm} vs {:?} at b={b} xi={xi}",
                    set.minimizers()
                ));
            }
        }
        Ok(())
    });

    check(&mut results, "finite-concentration linkage", || {
        let sol = curves::part1_boundary(&p, 1e-4).map_err(|e| e.to_string())?;
        let target = -p.g_prime(0.8).unwrap();
        let rel = (sol.h_plus / 1e-4 - target).abs() / target.abs();
        if rel < 0.01 {
            Ok(())
        } else {
            Err(format!("h+(c)/c off by {rel}"))
        }
    });

    check(&mut results, "exact salt counts", || {
        if exact::salt_count(4, 0, 2, 1).map_err(|e| e.to_string())? != 4u32.into() {
            return Err("count(4,0,2,1) != 4".into());
        }
        let big = exact::salt_count(100, 0, 50, 25).map_err(|e| e.to_string())?;
        if big.to_string() != "15979641419960227387050813504" {
            return Err(format!("count(100,0,50,25) = {big}"));
        }
        Ok(())
    });

    check(&mut results, "stirling gap shrinks with volume", || {
        let g100 = exact::stirling_gap(100, 0.0, 0.6, 0.1).map_err(|e| e.to_string())?;
        let g1k = exact::stirling_gap(1_000, 0.0, 0.6, 0.1).map_err(|e| e.to_string())?;
        near(g100, 0.033563355, 1e-6, "gap(100)")?;
        near(g1k, 0.005627391, 1e-6, "gap(1000)")?;
        if g1k < g100 {
            Ok(())
        } else {
            Err("gap not decreasing".into())
        }
    });

    check(&mut results, "strong field pins the enumeration", || {
        let dist =
            exact::exact_distribution(3, Plus, 0.1, 1.0, 0.2, 10.0).map_err(|e| e.to_string())?;
        let top: f64 = (0..=dist.n_salt).map(|q| dist.prob(9, q as i64)).sum();
        if top > 0.999 {
            Ok(())
        } else {
            Err(format!("P(M=9) = {top}"))
        }
    });

    check(&mut results, "sampler replays and matches the oracle", || {
        let cfg = sim::SimConfig::new(4, 0.25, 1.0, 0.25, 0.1, Plus, 99, 100_000, 1_000, 1)
            .map_err(|e| e.to_string())?;
        let a = sim::run(&cfg);
        let b = sim::run(&cfg);
        if a.samples != b.samples {
            return Err("same seed, different trajectories".into());
        }
        let dist =
            exact::exact_distribution(4, Plus, 0.25, 1.0, 0.25, 0.1).map_err(|e| e.to_string())?;
        let tv = dist.total_variation(&a.mq_hist, a.samples.len() as u64);
        if tv < 0.1 {
            Ok(())
        } else {
            Err(format!("TV = {tv}"))
        }
    });

    check(&mut results, "raster output is reproducible", || {
        let grid = diagram::GridSpec::new(0.05, 4.0, -3.0, 1.0, 16, 16).unwrap();
        let mut once = Vec::new();
        diagram::raster(&p, Plus, grid)
            .map_err(|e| e.to_string())?
            .write_csv(&mut once, &[])
            .map_err(|e| e.to_string())?;
        let mut twice = Vec::new();
        diagram::raster(&p, Plus, grid)
            .map_err(|e| e.to_string())?
            .write_csv(&mut twice, &[])
            .map_err(|e| e.to_string())?;
        if once == twice {
            Ok(())
        } else {
            Err("bytes differ between runs".into())
        }
    });

    let mut failures = 0;
    for r in &results {
        match &r.detail {
            None => println!("ok   {}", r.name),
            Some(detail) => {
                failures += 1;
                println!("FAIL {}: {detail}", r.name);
            }
        }
    }
    println!(
        "selftest: {} passed, {} failed",
        results.len() - failures,
        failures
    );
    failures
}
