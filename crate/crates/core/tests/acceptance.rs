//! Acceptance suite: one PASS/FAIL line per criterion. Criterion 9 is soft
//! and only warns. Exits non-zero if any hard criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use tensornorm::feasibility::threshold_bisection;
use tensornorm::generators::{gen_gaussian, gen_orthogonal_test, gen_orthogonal_test_d, gen_sequence_example};
use tensornorm::grid::{build_hemisphere_grid, covering_coefficient, hemisphere_point_count, sample_uniform};
use tensornorm::linalg::spectral_norm;
use tensornorm::nuclear::{nuclear_norm_fptas, nuclear_norm_fptas_d};
use tensornorm::spectral::{best_rank_one, spectral_norm_fptas, spectral_norm_fptas_d};
use tensornorm::{ErrorMode, Result, Tensor3};

const REL: ErrorMode = ErrorMode::Relative;
const ORTH_INSTANCES: u64 = 20;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn criterion_1() -> Result<Outcome> {
    let t = gen_sequence_example();
    let (_, fine) = nuclear_norm_fptas(&t, 1e-4, REL, None)?;
    let (_, coarse) = nuclear_norm_fptas(&t, 1e-3, REL, None)?;
    let (a, b) = ((fine.primal_value - 33.6749).abs(), (coarse.primal_value - 33.6749).abs());
    outcome(
        a <= 1e-3 && b <= 1e-2,
        format!("1e-4: {:.6} (|diff| {a:.1e}); 1e-3: {:.6} (|diff| {b:.1e})", fine.primal_value, coarse.primal_value),
    )
}

fn criterion_2() -> Result<Outcome> {
    let mut checked = 0;
    for l in 2..=6usize {
        for q in 3..=12usize {
            let formula = ((q as u128 - 1).pow(l as u32) - 1) / (q as u128 - 2);
            let built = build_hemisphere_grid(l, q)?.len() as u128;
            if built != formula || hemisphere_point_count(l, q) != formula {
                return outcome(false, format!("l={l} q={q}: built {built}, formula {formula}"));
            }
            checked += 1;
        }
        if build_hemisphere_grid(l, 2)?.len() != l {
            return outcome(false, format!("l={l} q=2 is not l"));
        }
    }
    let row: Vec<usize> = [6, 8, 10, 13].iter().map(|&q| build_hemisphere_grid(4, q).map(|g| g.len())).collect::<Result<_>>()?;
    outcome(row == [156, 400, 820, 1885], format!("{checked} (l, q) pairs exact; l=4 row {row:?}"))
}

fn criterion_3() -> Result<Outcome> {
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for l in 2..=5usize {
        for q in [3usize, 6, 10] {
            let grid = build_hemisphere_grid(l, q)?;
            let theta = covering_coefficient(q, l);
            let xs = sample_uniform(l, 10_000, (l * 100 + q) as u64)?;
            for x in xs.iter() {
                let best = grid
                    .iter()
                    .map(|u| u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>().abs())
                    .fold(0.0, f64::max);
                worst_margin = worst_margin.min(best - theta);
                if best < theta - 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations over 120000 samples; min margin {worst_margin:.3e}"))
}

fn criterion_4() -> Result<Outcome> {
    let mut worst = [0.0f64; 4];
    let mut sandwich_worst = f64::NEG_INFINITY;
    for seed in 0..ORTH_INSTANCES {
        let (t, dec) = gen_orthogonal_test(4, 10, 10, 4, seed)?;
        let (s_true, n_true) = (dec.max_weight(), dec.weight_sum());
        for (k, eps) in [1e-2, 1e-3].into_iter().enumerate() {
            let e = spectral_norm_fptas(&t, eps, REL, None)?;
            worst[k] = worst[k].max((e.value - s_true).abs() / s_true / eps);
        }
        for (k, eps) in [1e-1, 1e-2].into_iter().enumerate() {
            let (e, c) = nuclear_norm_fptas(&t, eps, REL, None)?;
            worst[2 + k] = worst[2 + k].max((e.value - n_true).abs() / n_true / eps);
            let theta = c.theta.expect("hemisphere grid");
            // Positive means a violated side of θ·primal ≤ Σλ ≤ primal.
            let lo = theta * c.primal_value - n_true;
            let hi = n_true - c.primal_value;
            sandwich_worst = sandwich_worst.max(lo.max(hi) / n_true);
        }
    }
    outcome(
        worst.iter().all(|&w| w <= 1.0) && sandwich_worst <= 1e-6,
        format!(
            "worst error/target: spectral {:.2} {:.2}, nuclear {:.2} {:.2}; worst sandwich excess {sandwich_worst:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

/// `max_θ ‖cos θ T₁ + sin θ T₂‖_σ` over `steps` angles in `[0, π)`.
fn circle_sweep(t: &Tensor3, steps: usize) -> Result<f64> {
    let (s0, s1) = (t.slice(0), t.slice(1));
    let mut best: f64 = 0.0;
    for k in 0..steps {
        let a = PI * k as f64 / steps as f64;
        best = best.max(spectral_norm(&(&s0 * a.cos() + &s1 * a.sin()))?);
    }
    Ok(best)
}

fn criterion_5() -> Result<Outcome> {
    let mut worst_rel: f64 = 0.0;
    for seed in 0..20 {
        let t = gen_gaussian(2, 4, 4, 500 + seed);
        let brute = circle_sweep(&t, 100_000)?;
        let e = spectral_norm_fptas(&t, 1e-6, REL, None)?;
        worst_rel = worst_rel.max((e.value - brute).abs() / brute);
    }
    let mut worst_bis: f64 = 0.0;
    for seed in 0..20 {
        let t = gen_gaussian(2, 2, 2, 700 + seed);
        let s = circle_sweep(&t, 100_000)?;
        let r = threshold_bisection(&t, 1e-6)?;
        worst_bis = worst_bis.max((r.threshold - s * s).abs());
    }
    outcome(
        worst_rel <= 1e-5 && worst_bis <= 1e-3,
        format!("fptas vs sweep worst relative {worst_rel:.1e}; bisection vs squared norm worst {worst_bis:.1e}"),
    )
}

fn criterion_6() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let (l, m, n) = (2 + (seed % 3) as usize, 3 + (seed % 4) as usize, 2 + (seed % 5) as usize);
        let t = gen_gaussian(l, m, n, 1000 + seed);
        let e = spectral_norm_fptas(&t, 1e-2, REL, None)?;
        worst = worst.max(best_rank_one(&t, &e)?.identity_gap);
    }
    outcome(worst <= 1e-10, format!("worst relative identity gap {worst:.1e} over 100 instances"))
}

fn criterion_7() -> Result<Outcome> {
    let mut worst_recon: f64 = 0.0;
    let mut inside = true;
    for seed in 0..10u64 {
        let (t, _) = gen_orthogonal_test(4, 10, 10, 4, 200 + seed)?;
        let (e, c) = nuclear_norm_fptas(&t, 1e-2, REL, None)?;
        let dec = &c.dual_decomposition;
        let recon = dec.assemble(t.dims())?.sub(&t)?.frobenius_norm() / t.frobenius_norm();
        worst_recon = worst_recon.max(recon);
        let theta = c.theta.expect("hemisphere grid");
        let w = dec.weight_sum();
        let tol = 1e-9 * w;
        inside &= e.lower - tol <= w && w <= e.upper / theta + tol;
    }
    outcome(
        worst_recon <= 1e-4 && inside,
        format!("worst relative reconstruction {worst_recon:.1e}; weight sums inside [lower, upper/θ]: {inside}"),
    )
}

fn criterion_8() -> Result<Outcome> {
    let mut worst = [0.0f64; 2];
    for seed in 0..3u64 {
        let (t, terms) = gen_orthogonal_test_d(&[2, 3, 8, 10], 3, 40 + seed)?;
        let s_true = terms.iter().map(|t| t.weight).fold(0.0, f64::max);
        let n_true: f64 = terms.iter().map(|t| t.weight).sum();
        let s = spectral_norm_fptas_d(&t, 1e-2, REL)?;
        let (n, _) = nuclear_norm_fptas_d(&t, 1e-2, REL)?;
        worst[0] = worst[0].max((s.value - s_true).abs() / s_true);
        worst[1] = worst[1].max((n.value - n_true).abs() / n_true);
    }
    outcome(
        worst[0] <= 1e-2 && worst[1] <= 1e-2,
        format!("worst exact error: spectral {:.1e}, nuclear {:.1e}", worst[0], worst[1]),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn criterion_9() -> Result<Outcome> {
    let count = 10_000;
    // Smallest hemisphere grid with at least as many points.
    let q = (3..).find(|&q| hemisphere_point_count(4, q) >= count as u128).expect("finite");
    let hemi = build_hemisphere_grid(4, q)?;
    let (mut rand_err, mut hemi_err) = (Vec::new(), Vec::new());
    for seed in 0..ORTH_INSTANCES {
        let (t, dec) = gen_orthogonal_test(4, 10, 10, 4, 300 + seed)?;
        let truth = dec.max_weight();
        let pts = sample_uniform(4, count, 900 + seed)?;
        let r = spectral_norm_fptas(&t, 1e-2, REL, Some(&pts))?;
        let h = spectral_norm_fptas(&t, 1e-2, REL, Some(&hemi))?;
        rand_err.push((truth - r.value).abs() / truth);
        hemi_err.push((truth - h.value).abs() / truth);
    }
    let (mr, mh) = (median(rand_err), median(hemi_err));
    outcome(mr <= mh, format!("median error: {count} random {mr:.2e}, hemisphere q={q} ({} points) {mh:.2e}", hemi.len()))
}

fn main() -> ExitCode {
    type Check = fn() -> Result<Outcome>;
    let criteria: [(&str, Check, bool); 9] = [
        ("1 sequence tensor nuclear value", criterion_1, true),
        ("2 hemisphere point counts", criterion_2, true),
        ("3 covering bound", criterion_3, true),
        ("4 known-norm orthogonal tensors", criterion_4, true),
        ("5 brute-force oracles at tiny scale", criterion_5, true),
        ("6 best rank-one identity", criterion_6, true),
        ("7 decomposition extraction", criterion_7, true),
        ("8 order-4 extension", criterion_8, true),
        ("9 random sampling vs hemisphere (soft)", criterion_9, false),
    ];
    let mut failed = 0;
    for (name, check, hard) in criteria {
        let started = Instant::now();
        let result = check();
        let secs = started.elapsed().as_secs_f64();
        let (passed, detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = match (passed, hard) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "WARN",
        };
        println!("{tag} criterion {name}: {detail} [{secs:.1}s]");
        if !passed && hard {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} hard criteria failed");
        ExitCode::FAILURE
    }
}
