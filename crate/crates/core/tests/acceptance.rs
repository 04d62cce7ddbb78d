//! Runs every shipped preset and checks it against limits pinned here, so a
//! loosened preset cannot turn a criterion green.

use std::path::PathBuf;

use nonloc::config::RunConfig;
use nonloc::studies::{self, Outcome};

fn preset(n: usize) -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../presets/ac{n}.toml"));
    RunConfig::load(&path, &[]).unwrap_or_else(|e| panic!("preset ac{n}: {e}"))
}

fn value(o: &Outcome, name: &str) -> f64 {
    o.check(name)
        .unwrap_or_else(|| panic!("{}: no check `{name}`", o.name))
        .value
}

struct Criterion {
    id: usize,
    label: &'static str,
    run: fn() -> Result<String, String>,
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn run_study(n: usize) -> Result<Outcome, String> {
    studies::run_study(&preset(n), None).map_err(|e| e.to_string())
}

fn ac1() -> Result<String, String> {
    let cfg = preset(1);
    let k = &cfg.kernel;
    ensure(
        k.sigma() == Some(0.5) && k.epsilon() == Some(0.2),
        "ac1 kernel differs from sigma 0.5, epsilon 0.2".into(),
    )?;
    ensure(
        cfg.grid.h_target == 0.05 && cfg.solver.tol == 1e-9,
        "ac1 grid or tolerance altered".into(),
    )?;
    let start = std::time::Instant::now();
    let o = studies::run_study(&cfg, None).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let rep = &o.report["solve"];
    let theo = rep["theoretical_factor"].as_f64().unwrap();
    let asym = rep["asymptotic_factor"].as_f64().unwrap();
    let nu0 = o.report["nu0"].as_f64().unwrap();
    let l1 = o.report["l1_norm"].as_f64().unwrap();
    let a = rep["step"].as_f64().unwrap();
    let expected_a = 0.9 * (1.0 / nu0).min(1.0 / l1);
    ensure(
        (a - expected_a).abs() <= 1e-12 * expected_a,
        format!("step {a} is not 0.9 min(1/nu0, 1/|K|_1) = {expected_a}"),
    )?;
    ensure(
        (theo - (1.0 - a * nu0)).abs() < 1e-12,
        "theoretical factor is not 1 - a nu0".into(),
    )?;
    ensure(
        !o.nonconverged && rep["final_residual"].as_f64().unwrap() <= 1e-9,
        "residual 1e-9 not reached".into(),
    )?;
    ensure(
        asym <= theo + 1e-3,
        format!("asymptotic factor {asym} > {theo} + 1e-3"),
    )?;
    ensure(secs < 10.0, format!("took {secs:.2}s"))?;
    Ok(format!(
        "asymptotic factor {asym:.4} <= {:.4}, {} iterations, {secs:.3}s",
        theo + 1e-3,
        rep["iterations"]
    ))
}

fn ac2() -> Result<String, String> {
    let cfg = preset(2);
    ensure(
        cfg.study.as_ref().unwrap().epsilons == [0.4, 0.2, 0.1, 0.05],
        "ac2 epsilon sweep altered".into(),
    )?;
    let o = run_study(2)?;
    let rows = o.report.as_array().unwrap();
    let mut worst = f64::NEG_INFINITY;
    for r in rows {
        let (u, b) = (r["sup_u"].as_f64().unwrap(), r["bound"].as_f64().unwrap());
        ensure(
            (b - 2.0 / 3.0).abs() < 1e-12,
            format!("bound {b} is not (2 sigma)^-1 2 (diam+1)^-2sigma |f| = 2/3"),
        )?;
        ensure(u <= b, format!("sup u = {u} exceeds {b}"))?;
        worst = worst.max(u / b);
    }
    ensure(rows.len() == 4, "expected four epsilons".into())?;
    Ok(format!(
        "zero violations, largest sup u / bound = {worst:.3}"
    ))
}

fn ac3() -> Result<String, String> {
    let o = run_study(3)?;
    let change = value(&o, "refinement_change");
    let min = value(&o, "min_value");
    ensure(min > 0.0, format!("boundary value {min} not positive"))?;
    ensure(change <= 0.25, format!("refinement change {change} > 25%"))?;
    Ok(format!(
        "smallest boundary value {min:.4}, largest change under h/2 {:.2}%",
        100.0 * change
    ))
}

fn ac4() -> Result<String, String> {
    let cfg = preset(4);
    let s = cfg.study.as_ref().unwrap();
    ensure(
        s.epsilons == [0.4, 0.2, 0.1, 0.05] && s.strip_width == 0.3,
        "ac4 sweep or strip altered".into(),
    )?;
    let o = run_study(4)?;
    let beta0 = value(&o, "beta0");
    let res = value(&o, "fit_residual");
    ensure(beta0 >= 0.05, format!("beta0 = {beta0} < 0.05"))?;
    ensure(res <= 0.05, format!("fit residual {res} > 5%"))?;
    ensure(
        value(&o, "majorant_violations") == 0.0,
        "majorant violated".into(),
    )?;
    Ok(format!(
        "C0 = {:.4}, beta0 = {beta0}, residual {:.2}%",
        o.report["c0"].as_f64().unwrap(),
        100.0 * res
    ))
}

fn ac5() -> Result<String, String> {
    let cfg = preset(5);
    let s = cfg.study.as_ref().unwrap();
    ensure(
        s.epsilons == [0.4, 0.2, 0.1, 0.05],
        "ac5 sweep altered".into(),
    )?;
    ensure(
        s.t_list.first() == Some(&0.01) && s.t_list.last() == Some(&0.5),
        "ac5 t range altered".into(),
    )?;
    let o = run_study(5)?;
    let ratio = value(&o, "small_t_ratio");
    ensure(ratio <= 0.25, format!("m(0.01)/m(0.5) = {ratio} > 0.25"))?;
    Ok(format!("m(0.01)/m(0.5) = {ratio:.4}"))
}

fn ac6() -> Result<String, String> {
    let cfg = preset(6);
    let s = cfg.study.as_ref().unwrap();
    ensure(
        s.epsilons == [0.4, 0.2, 0.1, 0.05] && s.h_ratio == Some(0.25),
        "ac6 sweep or h altered".into(),
    )?;
    let start = std::time::Instant::now();
    let o = run_study(6)?;
    let secs = start.elapsed().as_secs_f64();
    let rate = &o.report["rate"];
    let errors: Vec<f64> = rate["errors"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    ensure(
        errors.windows(2).all(|w| w[1] < w[0]),
        format!("errors not strictly decreasing: {errors:?}"),
    )?;
    let gamma0 = rate["gamma0"].as_f64().ok_or("no rate fitted")?;
    ensure(gamma0 > 0.0, format!("gamma0 = {gamma0}"))?;
    ensure(secs < 300.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "errors {errors:.3?}, gamma0 = {gamma0:.3}, {secs:.2}s"
    ))
}

fn ac7() -> Result<String, String> {
    let cfg = preset(7);
    let s = cfg.study.as_ref().unwrap();
    ensure(
        s.alpha == 1.5 && s.interior_depth == 0.25,
        "ac7 alpha or depth altered".into(),
    )?;
    let o = run_study(7)?;
    let red = value(&o, "interior_reduction");
    let frac = value(&o, "global_over_u0_boundary");
    ensure(red >= 4.0, format!("interior reduction {red} < 4"))?;
    ensure(
        frac >= 0.5,
        format!("global error / u0 on the boundary = {frac} < 0.5"),
    )?;
    Ok(format!(
        "interior reduction {red:.2}x, global error {frac:.2} u0(boundary)"
    ))
}

fn ac8() -> Result<String, String> {
    let cfg = preset(8);
    ensure(
        cfg.barrier.as_ref().unwrap().epsilons == [0.4, 0.2, 0.1, 0.05],
        "ac8 sweep altered".into(),
    )?;
    let o = studies::run_barrier_check(&cfg).map_err(|e| e.to_string())?;
    let (b, d, c) = (
        value(&o, "beta0"),
        value(&o, "delta_bar"),
        value(&o, "c_star"),
    );
    ensure(
        b > 0.0 && d > 0.0 && c > 0.0,
        format!("beta0 {b}, delta_bar {d}, c* {c}"),
    )?;
    ensure(
        value(&o, "c_star_fine") > 0.0,
        "fine grid c* not positive".into(),
    )?;
    let deg = value(&o, "margin_degradation");
    ensure(deg <= 0.2, format!("margin degradation {deg} > 20%"))?;
    Ok(format!(
        "beta0 = {b}, delta_bar = {d}, c* = {c:.4}, degradation at h/2 {:.1}%",
        100.0 * deg
    ))
}

fn ac9() -> Result<String, String> {
    ensure(
        preset(9).study.as_ref().unwrap().samples == 50,
        "ac9 sample count altered".into(),
    )?;
    let o = run_study(9)?;
    for k in ["violations", "precondition_failures", "barrier_violations"] {
        ensure(value(&o, k) == 0.0, format!("{k} = {}", value(&o, k)))?;
    }
    Ok("50 ordered pairs and barrier comparison, zero violations".into())
}

fn ac10() -> Result<String, String> {
    ensure(
        preset(10).study.as_ref().unwrap().samples == 100,
        "ac10 sample count altered".into(),
    )?;
    let o = run_study(10)?;
    ensure(
        value(&o, "sandwich_violations") == 0.0,
        "extremal sandwich violated".into(),
    )?;
    ensure(
        o.check("bracket_excess").unwrap().pass,
        format!("bracket excess {}", value(&o, "bracket_excess")),
    )?;
    ensure(!o.nonconverged, "Isaacs iteration did not converge".into())?;
    Ok(format!(
        "100 pairs sandwiched, solution bracketed, factor {:.4} vs {:.4}",
        o.report["measured_factor"].as_f64().unwrap(),
        o.report["theoretical_factor"].as_f64().unwrap()
    ))
}

fn ac11() -> Result<String, String> {
    let cfg = preset(11);
    let s = cfg.study.as_ref().unwrap();
    ensure(
        s.parabolic.as_ref().unwrap().t_final.is_none(),
        "ac11 overrides the final time".into(),
    )?;
    let o = run_study(11)?;
    let gap = value(&o, "gap_to_elliptic");
    let ratio = value(&o, "modulus_over_envelope");
    ensure(
        value(&o, "monotonicity_violations") == 0.0,
        "trajectory not monotone".into(),
    )?;
    ensure(gap <= 1e-4, format!("gap {gap} > 1e-4"))?;
    ensure(ratio <= 1.1, format!("modulus / envelope = {ratio} > 1.1"))?;
    Ok(format!(
        "T = {}, gap {gap:.2e}, modulus / envelope {ratio:.3}",
        o.report["t_final"]
    ))
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            label: "contraction",
            run: ac1,
        },
        Criterion {
            id: 2,
            label: "sup-norm bound",
            run: ac2,
        },
        Criterion {
            id: 3,
            label: "boundary discontinuity",
            run: ac3,
        },
        Criterion {
            id: 4,
            label: "boundary jump uniformity",
            run: ac4,
        },
        Criterion {
            id: 5,
            label: "equicontinuity",
            run: ac5,
        },
        Criterion {
            id: 6,
            label: "convergence",
            run: ac6,
        },
        Criterion {
            id: 7,
            label: "counterexample",
            run: ac7,
        },
        Criterion {
            id: 8,
            label: "barrier certification",
            run: ac8,
        },
        Criterion {
            id: 9,
            label: "comparison principle",
            run: ac9,
        },
        Criterion {
            id: 10,
            label: "isaacs extension",
            run: ac10,
        },
        Criterion {
            id: 11,
            label: "parabolic",
            run: ac11,
        },
    ];
    let mut failed = vec![];
    for c in &criteria {
        match (c.run)() {
            Ok(msg) => println!("PASS AC{:<2} {}: {msg}", c.id, c.label),
            Err(msg) => {
                println!("FAIL AC{:<2} {}: {msg}", c.id, c.label);
                failed.push(c.id);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
