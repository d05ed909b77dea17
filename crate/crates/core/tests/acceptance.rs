//! Acceptance run: every criterion at its pinned tolerance and time limit,
//! one PASS/FAIL line each. The process exits 0 even when a criterion
//! fails so that the verdicts stay visible in `cargo test` output; the
//! final line counts the failures.

mod support;

use std::time::Instant;

use htc_core::fluorescence::{fluorescence_spectrum, solve_correlations};
use htc_core::kernels::{KernelSet, PoissonWeights};
use htc_core::model::{KernelPolicy, ModelParams};
use htc_core::moments::{
    fluctuation_inputs, p1_closed_form, p1_prime_closed_form, population_spectrum, solve_m1, solve_m2,
    RESIDUAL_TOL,
};
use htc_core::oracle::{
    oracle_steady, regression_spectrum, DensityDiagnostics, OracleSettings, OracleSolver,
};
use htc_core::spectrum::{detect_peaks, significant_peaks, uniform_grid, Order, Peak, SpectrumSeries};
use htc_core::steady::{
    estimate_n, lower_peak, polariton_modes, steady_moments, transmission_point, transmission_with_order,
    upper_peak,
};
use nalgebra::DMatrix;
use num_complex::Complex64;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn fig2() -> ModelParams {
    ModelParams::figure2_defaults()
}

fn policy() -> KernelPolicy {
    KernelPolicy::default()
}

/// Δ_c/ν ∈ [−0.5, 0.5] in 2001 points, step ν/2000.
fn transmission_grid(p: &ModelParams) -> Vec<f64> {
    uniform_grid(-0.5 * p.nu, 0.5 * p.nu, 2001).unwrap()
}

/// ω/ν ∈ [−2.5, 1.5] in 2001 points, step ν/500.
fn fluorescence_grid(p: &ModelParams) -> Vec<f64> {
    uniform_grid(-2.5 * p.nu, 1.5 * p.nu, 2001).unwrap()
}

fn step(grid: &[f64]) -> f64 {
    grid[1] - grid[0]
}

fn nearest(peaks: &[Peak], x: f64) -> Option<Peak> {
    peaks
        .iter()
        .copied()
        .min_by(|a, b| (a.frequency - x).abs().total_cmp(&(b.frequency - x).abs()))
}

fn t_sq(p: &ModelParams, order: Order) -> SpectrumSeries {
    transmission_with_order(p, &policy(), &transmission_grid(p), order).unwrap()
}

fn criterion_1() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [2u32, 20, 200] {
        let start = Instant::now();
        let p = fig2().with_lambda(0.0).with_n_molecules(n);
        let d = p.derive();
        let s = t_sq(&p, Order::First);
        let h = step(&s.grid);
        let (lo, hi) = (lower_peak(&s).unwrap(), upper_peak(&s).unwrap());
        let sep = hi.frequency - lo.frequency;
        let want = 2.0 * (n as f64 * p.g * p.g - (d.gamma_perp + d.kappa).powi(2) / 4.0).sqrt();
        let secs = start.elapsed().as_secs_f64();
        let ok = (sep - want).abs() <= h && secs < 1.0;
        pass &= ok;
        parts.push(format!(
            "N={n}: {sep:.3} vs {want:.3} (|Δ|={:.3}, step {h}) {secs:.2}s{}",
            (sep - want).abs(),
            if ok { "" } else { " ✗" }
        ));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_2() -> Verdict {
    let settings = OracleSettings::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [0.0, 0.2] {
        let p = fig2().with_lambda(lambda).with_n_molecules(2);
        let grid = uniform_grid(-0.3 * p.nu, 0.3 * p.nu, 41).unwrap();
        let mut worst: f64 = 0.0;
        let mut flagged = 0;
        for &dc in &grid {
            let q = p.with_cavity_detuning(dc);
            let analytic = transmission_point(&q, &policy(), Order::First).map(|z| z.norm_sqr());
            let oracle = oracle_steady(&q, &settings).map(|(_, o)| {
                (2.0 * (q.kappa1 * q.kappa2).sqrt() * o.a_ss / q.eta).norm_sqr()
            });
            match (analytic, oracle) {
                (Ok(a), Ok(o)) => worst = worst.max((a - o).abs() / o),
                _ => flagged += 1,
            }
        }
        pass &= worst < 0.05;
        parts.push(format!("λ={lambda}: max rel dev {worst:.2e}, {flagged} flagged"));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_3() -> Verdict {
    let p = fig2().at_resonance();
    let grid = fluorescence_grid(&p);
    let h = step(&grid);
    let s = fluorescence_spectrum(&p, &policy(), &grid).unwrap();
    let peaks = detect_peaks(&s);
    let modes = polariton_modes(&p, &policy()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, x) in [("ω₋", modes.omega_minus), ("ω₊", modes.omega_plus), ("−ν", -p.nu)] {
        match nearest(&peaks, x) {
            Some(pk) => {
                let off = (pk.frequency - x).abs();
                pass &= off <= h;
                parts.push(format!("{label}: max at {:.3}, {off:.3} off (step {h})", pk.frequency));
            }
            None => {
                pass = false;
                parts.push(format!("{label}: no maximum"));
            }
        }
    }
    let q = fig2().at_resonance().with_n_molecules(20).with_lambda(0.6);
    let s = fluorescence_spectrum(&q, &policy(), &grid).unwrap();
    match nearest(&detect_peaks(&s), -2.0 * q.nu) {
        Some(pk) if (pk.frequency + 2.0 * q.nu).abs() <= 0.1 * q.nu => {
            parts.push(format!("N=20 λ=0.6: max at {:.2} near −2ν", pk.frequency));
        }
        other => {
            pass = false;
            parts.push(format!("N=20 λ=0.6: no maximum near −2ν ({other:?})"));
        }
    }
    verdict(pass, parts.join("; "))
}

fn criterion_4() -> Verdict {
    let p = fig2().at_resonance();
    let grid = fluorescence_grid(&p);
    let s = fluorescence_spectrum(&p, &policy(), &grid).unwrap();
    let peaks = significant_peaks(&s, 1e-4);
    let modes = polariton_modes(&p, &policy()).unwrap();
    let targets = [modes.omega_minus, modes.omega_plus, -p.nu];
    let chosen: Vec<Peak> = targets.iter().filter_map(|x| nearest(&peaks, *x)).collect();
    if chosen.len() != 3 {
        return verdict(false, format!("expected three peaks, found {peaks:?}"));
    }
    let freqs: Vec<f64> = chosen.iter().map(|pk| pk.frequency).collect();
    let liou = OracleSettings::default().liouvillian(&p).unwrap();
    let solver = OracleSolver::new(&liou).unwrap();
    let ss = solver.steady_state().unwrap();
    let mut sorted = freqs.clone();
    sorted.sort_by(f64::total_cmp);
    let oracle = regression_spectrum(&solver, &ss.rho, &ss.rho, true, &sorted).unwrap();
    let ov = oracle.real_values().unwrap();
    let inputs = fluctuation_inputs(&p, &policy()).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, w) in sorted.iter().enumerate() {
        let analytic = solve_correlations(*w, &p, &policy(), &inputs).unwrap().total(p.n_molecules);
        let o = ov[i] / 2.0;
        let rel = (analytic - o).abs() / o;
        pass &= rel <= 0.10;
        parts.push(format!("ω={w:.2}: {analytic:.3e} vs {o:.3e} (rel {rel:.2})"));
    }
    verdict(pass, parts.join("; "))
}

fn criterion_5() -> Verdict {
    let mut worst_track: (f64, u32) = (0.0, 0);
    let mut track_fail = Vec::new();
    let mut worst_est: (f64, u32) = (0.0, 0);
    let mut h = 0.0;
    for n in 1..=400u32 {
        let p = fig2().with_n_molecules(n);
        let d = p.derive();
        let s = t_sq(&p, Order::First);
        h = step(&s.grid);
        let Some(lo) = lower_peak(&s) else {
            track_fail.push(n);
            continue;
        };
        if n as f64 * p.g * p.g > (d.gamma_perp + d.kappa).powi(2) {
            let w = polariton_modes(&p, &policy()).unwrap().omega_minus;
            let off = (lo.frequency - w).abs() / h;
            if off > worst_track.0 {
                worst_track = (off, n);
            }
            if off > 2.0 {
                track_fail.push(n);
            }
        }
        if n >= 50 {
            let rel = (estimate_n(lo.frequency, p.g).unwrap() - n as f64).abs() / n as f64;
            if rel > worst_est.0 {
                worst_est = (rel, n);
            }
        }
    }
    let pass = track_fail.is_empty() && worst_est.0 <= 0.15;
    let fails = match (track_fail.first(), track_fail.last()) {
        (Some(a), Some(b)) => format!(", {} N beyond 2 steps (N={a}..{b})", track_fail.len()),
        _ => String::new(),
    };
    verdict(
        pass,
        format!(
            "lower peak vs ω₋: worst {:.2} steps at N={} (step {h}){fails}; N̂ worst rel err {:.3} at N={}",
            worst_track.0, worst_track.1, worst_est.0, worst_est.1
        ),
    )
}

fn criterion_6() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    let p = fig2().with_n_molecules(1);
    let grid = uniform_grid(-0.5 * p.nu, 0.5 * p.nu, 101).unwrap();
    let (mut w1, mut w2): (f64, f64) = (0.0, 0.0);
    for &dc in &grid {
        let q = p.with_cavity_detuning(dc);
        let m1 = solve_m1(&q, &policy(), true).unwrap().p_m;
        let m2 = solve_m2(&q, &policy()).unwrap().p_m;
        w1 = w1.max((m1 - p1_closed_form(&q, &policy()).unwrap()).abs() / m1.abs());
        w2 = w2.max((m2 - p1_prime_closed_form(&q, &policy()).unwrap()).abs() / m2.abs());
    }
    pass &= w1 <= 1e-10 && w2 <= 1e-10;
    parts.push(format!("N=1 closed forms: rel {w1:.1e} / {w2:.1e}"));

    let p = fig2().with_n_molecules(2).with_lambda(0.6);
    let s = population_spectrum(&p, &policy(), &transmission_grid(&p), Order::First, true).unwrap();
    let peaks = significant_peaks(&s, 0.01);
    let settings = OracleSettings {
        vib_cutoff: 4,
        ..OracleSettings::default()
    };
    for pk in &peaks {
        let q = p.with_cavity_detuning(pk.frequency);
        let analytic = solve_m1(&q, &policy(), true).unwrap().p_m * 2.0;
        let (_, obs) = oracle_steady(&q, &settings).unwrap();
        let o = obs.total_population(2);
        let rel = (analytic - o).abs() / o;
        pass &= rel <= 0.10;
        parts.push(format!("Δc={:.2}: {analytic:.3e} vs {o:.3e} (rel {rel:.3})", pk.frequency));
    }
    pass &= !peaks.is_empty();
    verdict(pass, parts.join("; "))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn criterion_7() -> Verdict {
    let mut worst: f64 = 0.0;
    for n in [1u32, 2, 20] {
        let p = fig2().with_lambda(0.0).with_n_molecules(n);
        for dc in uniform_grid(-0.5 * p.nu, 0.5 * p.nu, 41).unwrap() {
            let q = p.with_cavity_detuning(dc);
            let f1 = steady_moments(&q, &policy(), Order::First).unwrap();
            let f2 = steady_moments(&q, &policy(), Order::Second).unwrap();
            let m1 = solve_m1(&q, &policy(), true).unwrap();
            let m2 = solve_m2(&q, &policy()).unwrap();
            for e in [
                rel(f1.a_ss, f2.a_ss),
                rel(f1.sigma_ss, f2.sigma_ss),
                (m1.n_c - m2.n_c).abs() / m2.n_c,
                (m1.p_m - m2.p_m).abs() / m2.p_m,
                rel(m1.a_dag_sigma, m2.a_dag_sigma),
                rel(m1.a_sigma_dag, m2.a_sigma_dag),
            ] {
                worst = worst.max(e);
            }
        }
    }
    let p = fig2().with_lambda(1.0).with_n_molecules(200);
    let a = significant_peaks(&t_sq(&p, Order::First), 0.01);
    let b = significant_peaks(&t_sq(&p, Order::Second), 0.01);
    let h = step(&transmission_grid(&p));
    let matched = a.len() == b.len()
        && a.iter().zip(&b).all(|(x, y)| (x.frequency - y.frequency).abs() <= h);
    let fa: Vec<String> = a.iter().map(|x| format!("{:.3}", x.frequency)).collect();
    let fb: Vec<String> = b.iter().map(|x| format!("{:.3}", x.frequency)).collect();
    verdict(
        worst <= 1e-9 && matched,
        format!(
            "λ=0 max rel diff {worst:.1e}; λ=1 N=200 peaks first [{}] second [{}] (step {h})",
            fa.join(", "),
            fb.join(", ")
        ),
    )
}

fn criterion_8() -> Verdict {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };

    for lambda in [0.0, 0.2, 0.6, 1.0, 1.5] {
        let w = PoissonWeights::new(lambda, &policy());
        check("poisson normalization", w.total() >= 1.0 - policy().tail_tol && w.total() <= 1.0 + 1e-14);
    }

    for (n, lambda) in [(1u32, 0.0), (2, 0.2), (20, 0.6), (200, 1.0)] {
        let p = fig2().with_n_molecules(n).with_lambda(lambda);
        let d = p.derive();
        let bound = 4.0 * p.kappa1 * p.kappa2 / (d.kappa * d.kappa);
        let s = t_sq(&p, Order::First);
        check(
            "|T|² bound",
            s.intensity().iter().all(|t| *t <= bound * (1.0 + 1e-12)),
        );

        let m = polariton_modes(&p, &policy()).unwrap();
        let k = KernelSet::new(&p.at_resonance(), &policy());
        let (g_eff, d_eff) = k.effective_rates().unwrap();
        check("polariton frequency sum", (m.omega_plus + m.omega_minus + d_eff).abs() <= 1e-9 * (1.0 + d_eff.abs()));
        check("polariton width sum", (m.gamma_plus + m.gamma_minus - g_eff - d.kappa).abs() <= 1e-9 * (g_eff + d.kappa));

        let q = p.with_cavity_detuning(-5.0);
        let a1 = steady_moments(&q, &policy(), Order::First).unwrap();
        let a2 = steady_moments(&q.with_eta(2.0 * q.eta), &policy(), Order::First).unwrap();
        check("⟨a⟩ ∝ η", rel(a2.a_ss, 2.0 * a1.a_ss) <= 1e-12);
        let m1 = solve_m1(&q, &policy(), true).unwrap();
        let m2 = solve_m1(&q.with_eta(2.0 * q.eta), &policy(), true).unwrap();
        check("𝒫 ∝ η²", (m2.p_m - 4.0 * m1.p_m).abs() <= 1e-12 * m2.p_m);
        let t1 = transmission_point(&q, &policy(), Order::First).unwrap();
        let t2 = transmission_point(&q.with_eta(3.0 * q.eta), &policy(), Order::First).unwrap();
        check("𝒯 independent of η", rel(t1, t2) <= 1e-12);

        check("moment residuals", m1.residual <= RESIDUAL_TOL);
        check("second-order residuals", solve_m2(&q, &policy()).unwrap().residual <= RESIDUAL_TOL);
        let inputs = fluctuation_inputs(&q, &policy()).unwrap();
        for w in [-q.nu, -7.0, 0.0, 7.0] {
            check(
                "correlation residuals",
                solve_correlations(w, &q, &policy(), &inputs).unwrap().residual <= RESIDUAL_TOL,
            );
        }
    }

    let i = Complex64::new(0.0, 1.0);
    for dc in [-20.0, 0.0, 35.0] {
        let p = fig2().with_lambda(0.0).with_cavity_detuning(dc);
        let d = p.derive();
        let k = KernelSet::new(&p, &policy());
        for s in [Complex64::new(0.0, 0.0), Complex64::new(0.5, -12.0)] {
            check("F̄ₘ at λ=0", rel(k.fbar_m(s).unwrap(), 1.0 / (s + i * d.delta + d.gamma_perp)) <= 1e-15);
            check(
                "F̄′ₘ at λ=0",
                rel(k.fbar_m_prime(s).unwrap(), 1.0 / (s + i * (d.delta - d.delta_c) + d.kappa + d.gamma_perp)) <= 1e-15,
            );
            check("F̄ₘₙ at λ=0", rel(k.fbar_mn(s).unwrap(), 1.0 / (s + 2.0 * d.gamma_perp)) <= 1e-15);
        }
    }

    for lambda in [0.0, 0.2, 0.6] {
        let p = fig2().with_lambda(lambda).with_cavity_detuning(-7.0);
        let liou = OracleSettings::default().liouvillian(&p).unwrap();
        let solver = OracleSolver::new(&liou).unwrap();
        let ss = solver.steady_state().unwrap();
        check("oracle density matrix", DensityDiagnostics::of(&ss.rho).is_valid());
        check("oracle steady residual", ss.residual <= 1e-10);
        let dim = liou.dim();
        let x = DMatrix::from_fn(dim, dim, |r, c| Complex64::new((r as f64).sin(), (c as f64 * 0.7).cos()));
        check("oracle trace preservation", liou.apply(&x).trace().norm() <= 1e-10 * x.norm());
    }

    for (lambda, dc) in [(0.3, 0.0), (0.5, 0.0), (0.3, 1.5)] {
        let p = fig2().with_lambda(lambda).with_cavity_detuning(dc);
        let s = Complex64::new(0.0, 0.0);
        let series = KernelSet::new(&p, &policy()).fbar_2m(s).unwrap();
        check("F̄₂,ₘ vs quadrature", rel(series, support::fbar_2m_quadrature(&p, s)) <= 1e-6);
    }

    failures.dedup();
    let detail = if failures.is_empty() {
        "all invariants hold".to_string()
    } else {
        format!("violated: {}", failures.join(", "))
    };
    verdict(failures.is_empty(), detail)
}

fn main() {
    let criteria: [(&str, f64, fn() -> Verdict); 8] = [
        ("λ=0 splitting", 3.0, criterion_1),
        ("oracle transmission equivalence", 300.0, criterion_2),
        ("fluorescence Stokes feature", 10.0, criterion_3),
        ("oracle fluorescence equivalence", 600.0, criterion_4),
        ("polariton tracking", 30.0, criterion_5),
        ("population cross-checks", 300.0, criterion_6),
        ("order consistency", 60.0, criterion_7),
        ("invariant suite", 120.0, criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        let pass = v.pass && secs < *limit;
        if !pass {
            failed += 1;
        }
        let time_note = if secs < *limit { String::new() } else { format!(" over {limit}s limit") };
        println!(
            "criterion {} [{}] {name}: {} ({secs:.1}s{time_note})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
}
