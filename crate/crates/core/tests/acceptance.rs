//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use qprecast::cli::{load_system, read_json, ReportFile};
use qprecast::exactalg::{inverse, q, qi, rank};
use qprecast::numeric::{check_conservation, compare_recast, integrate};
use qprecast::random::{deficient_system, invertible_matrix, standard_system, Deficiency};
use qprecast::reductions::{
    first_integrals_from_m, lv_first_integrals, standardize, to_lotka_volterra, to_unimonomial,
    verify_projection_invariance, EmbedMode, ReductionReport,
};
use qprecast::transforms::{quasimonomial_transform, TransformStep};
use qprecast::{fixtures, QpSystem, RMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{fixture_path, imat, imul, ints, rk4, rmat, start_of};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

/// Runs `to-lv --embed full` on a fixture file and reads the report back.
fn cli_to_lv(name: &str) -> Result<ReportFile, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("report.json");
    let status = Command::new(env!("CARGO_BIN_EXE_qprecast"))
        .arg("to-lv")
        .arg(fixture_path(name))
        .args(["--embed", "full", "--out"])
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    check(status.status.success(), format!("to-lv exited with {}", status.status))?;
    read_json(&out).map_err(|e| e.to_string())
}

fn morse_lv_reproduction() -> Outcome {
    let started = Instant::now();
    let file = cli_to_lv("morse")?;
    let elapsed = started.elapsed().as_secs_f64();
    let rep = file.to_report().map_err(|e| e.to_string())?;
    let b = imat(&[&[-1, 1, 0], &[-1, 0, 0], &[0, -1, 1], &[0, -1, 2], &[0, 1, 0]]);
    let m = imat(&[&[0, 1, -1, 0, 0, 0], &[0, 0, 0, 2, -6, 0], &[1, 0, 0, 0, 0, -1]]);
    let m_lv = rmat(&imul(&b, &m));
    check(rep.output.b == RMatrix::identity(5), "output B is not the identity")?;
    check(rep.output.composed() == m_lv, "output M differs from B M")?;
    check(rank(&m_lv) == 3, "rank(M_LV) != 3")?;
    check(elapsed < 1.0, format!("took {elapsed:.3} s"))?;
    Ok(format!("M_LV exact, rank 3, {elapsed:.3} s"))
}

fn morse_lv_integrals() -> Outcome {
    let (sys, _) = load_system(&fixture_path("morse_lv")).map_err(|e| e.to_string())?;
    let fis = first_integrals_from_m(&sys);
    check(fis.len() == 2, format!("{} integrals", fis.len()))?;
    check(fis[0].exponents == ints(&[1, -1, 2, -1, 0]), "first integral exponents")?;
    check(
        fis[1].exponents == ints(&[1, -1, 0, 0, -1]),
        "second integral exponents",
    )?;
    let (x0, t_end) = start_of("morse_lv");
    let traj = integrate(&sys, &x0, t_end, 1e-9).map_err(|e| e.to_string())?;
    let reference = rk4(&sys, &x0, t_end, 20_000);
    let mut worst: f64 = 0.0;
    for fi in &fis {
        worst = worst.max(check_conservation(&traj, fi));
        worst = worst.max((fi.value(&reference) / fi.value(&x0) - 1.0).abs());
    }
    check(worst <= 1e-6, format!("drift {worst:.3e}"))?;
    Ok(format!("2 integrals, exponents exact, drift {worst:.2e}"))
}

fn brusselator_chain() -> Outcome {
    let s = fixtures::brusselator();
    let none = to_unimonomial(&s, EmbedMode::None).map_err(|e| e.to_string())?;
    let expected = RMatrix::from_rows(vec![
        vec![qi(-3), qi(1), qi(0), qi(1), qi(0)],
        vec![qi(0), qi(0), qi(1), qi(0), q(-1, 2)],
    ]);
    check(none.output.composed() == expected, "mode none composed matrix")?;

    let full = to_unimonomial(&s, EmbedMode::Full).map_err(|e| e.to_string())?;
    let out = &full.output;
    check(out.a.is_identity(), "full embedding is not one term per equation")?;
    let stages = full.stages().map_err(|e| e.to_string())?;
    let before = &stages[stages.len() - 2];
    let Some(TransformStep::Quasimonomial { c, .. }) = full.trace.last().map(|t| &t.op) else {
        return Err("last step is not a quasimonomial transformation".into());
    };
    let c_inv = inverse(c).map_err(|e| e.to_string())?;
    check(out.b == before.b.mul(c), "B' != B C")?;
    check(out.lambda == c_inv.mul_vec(&before.lambda), "lambda' != C^-1 lambda")?;
    let p = full.projection.as_ref().ok_or("no projection")?;
    let p2 = RMatrix::from_rows(vec![
        vec![qi(1), qi(0), qi(1), qi(0)],
        vec![qi(0), qi(1), qi(0), q(-1, 2)],
        vec![qi(0); 4],
        vec![qi(0); 4],
    ]);
    check(p.matrix == p2, format!("P2' = {:?}", p.matrix.row_vecs()))?;
    verify_projection_invariance(&full).map_err(|e| e.to_string())?;
    Ok("mode none and full embedding exact, projection invariant".into())
}

fn exciton_lv() -> Outcome {
    let file = cli_to_lv("exciton")?;
    let rep = file.to_report().map_err(|e| e.to_string())?;
    let b = imat(&[&[-1, 0, 0], &[1, 1, 0], &[2, 0, 0], &[0, 0, 2], &[2, 1, 1], &[0, 1, 3]]);
    let m = imat(&[
        &[0, 1, -1, 0, 0, 0, 0],
        &[0, 0, 0, 1, -1, 0, 0],
        &[0, 0, 0, 0, 0, -1, 1],
    ]);
    check(rep.output.b == RMatrix::identity(6), "output B is not the identity")?;
    check(rep.output.composed() == rmat(&imul(&b, &m)), "A_LV differs")?;

    let fis = lv_first_integrals(&fixtures::exciton()).map_err(|e| e.to_string())?;
    check(fis.len() == 3, format!("{} integrals", fis.len()))?;
    let listed = RMatrix::from_rows(vec![
        vec![qi(0), qi(1), q(1, 2), q(1, 2), qi(-1), qi(0)],
        vec![qi(0), qi(1), q(-1, 2), q(3, 2), qi(0), qi(-1)],
        vec![qi(1), qi(0), q(1, 2), qi(0), qi(0), qi(0)],
    ]);
    let ours = RMatrix::from_rows(fis.iter().map(|f| f.exponents.clone()).collect());
    check(
        rank(&ours) == 3 && rank(&ours.vstack(&listed)) == 3,
        "integrals span a different space",
    )?;
    Ok("A_LV exact, 3 integrals spanning the listed ones".into())
}

fn three_wave_terms() -> Outcome {
    let s = fixtures::three_wave();
    let none = to_unimonomial(&s, EmbedMode::None)
        .map_err(|e| e.to_string())?
        .output
        .term_count();
    let full = to_unimonomial(&s, EmbedMode::Full)
        .map_err(|e| e.to_string())?
        .output
        .term_count();
    check(none == 6 && full == 4, format!("{none} and {full} terms"))?;
    Ok("6 terms without embedding, 4 with full embedding".into())
}

fn class_invariant_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for case in 0..100 {
        let s = standard_system(&mut rng, 4, 6);
        let c = invertible_matrix(&mut rng, s.n());
        let inv = s.class_invariant();
        let t = quasimonomial_transform(&s, &c).map_err(|e| format!("case {case}: {e}"))?;
        check(
            t.class_invariant() == inv,
            format!("case {case}: invariant changed under C"),
        )?;
        let lv = to_lotka_volterra(&s, EmbedMode::Full).map_err(|e| format!("case {case}: {e}"))?;
        check(lv.output.composed() == inv, format!("case {case}: LV output M != B M"))?;
    }
    Ok("100 random systems".into())
}

fn standardization_property() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let mut integrals = 0;
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let kind = Deficiency::ALL[case % Deficiency::ALL.len()];
        let s = deficient_system(&mut rng, kind);
        let rep = standardize(&s).map_err(|e| format!("case {case} ({kind:?}): {e}"))?;
        let r = rep.output.ranks();
        let n = rep.output.n();
        check(
            r.a == n && r.b == n && r.m == n,
            format!("case {case} ({kind:?}): ranks {r:?} with n = {n}"),
        )?;
        if rep.first_integrals.is_empty() {
            continue;
        }
        let x0 = vec![1.0; s.n()];
        let traj = integrate(&s, &x0, 1.0, 1e-10).map_err(|e| format!("case {case}: {e}"))?;
        for fi in &rep.first_integrals {
            check(
                fi.variables == s.var_names,
                format!("case {case}: integral not in input variables"),
            )?;
            let d = check_conservation(&traj, fi);
            worst = worst.max(d);
            integrals += 1;
            check(d <= 1e-6, format!("case {case}: drift {d:.3e} of {}", fi.monomial()))?;
        }
    }
    Ok(format!(
        "50 random systems, {integrals} integrals, worst drift {worst:.2e}"
    ))
}

fn recasts_of(sys: &QpSystem) -> Vec<(String, ReductionReport)> {
    let mut out = Vec::new();
    let Ok(std) = standardize(sys) else {
        return out;
    };
    out.push(("standardize".to_string(), std));
    if !sys.is_standard() {
        return out;
    }
    let mut modes = vec![EmbedMode::None, EmbedMode::Full];
    modes.extend((1..sys.m().saturating_sub(sys.n())).map(EmbedMode::Partial));
    for mode in modes {
        if let Ok(r) = to_lotka_volterra(sys, mode) {
            out.push((format!("to-lv {mode}"), r));
        }
        if let Ok(r) = to_unimonomial(sys, mode) {
            out.push((format!("to-unimonomial {mode}"), r));
        }
    }
    out
}

fn recast_equivalence() -> Outcome {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    let mut saw_new_time = false;
    for (name, sys) in fixtures::all() {
        let (x0, t_end) = start_of(name);
        for (label, rep) in recasts_of(&sys) {
            saw_new_time |= rep.trace.iter().any(|s| matches!(s.op, TransformStep::NewTime { .. }));
            let eq = compare_recast(&sys, &rep, &x0, t_end, 1e-9).map_err(|e| format!("{name} {label}: {e}"))?;
            check(
                eq.max_abs_log_error <= 1e-5,
                format!("{name} {label}: error {:.3e}", eq.max_abs_log_error),
            )?;
            worst = worst.max(eq.max_abs_log_error);
            count += 1;
        }
    }
    check(saw_new_time, "no recast involved a new-time step")?;
    Ok(format!("{count} recasts, worst log error {worst:.2e}"))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let criteria: [Criterion; 8] = [
        ("Morse Lotka-Volterra form", morse_lv_reproduction),
        ("first integrals of the Morse LV system", morse_lv_integrals),
        ("Brusselator unimonomial chain", brusselator_chain),
        ("exciton Lotka-Volterra form", exciton_lv),
        ("three-wave term counts", three_wave_terms),
        ("class invariant property", class_invariant_property),
        ("standardization property", standardization_property),
        ("recast trajectory equivalence", recast_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    let total = started.elapsed().as_secs_f64();
    println!("suite runtime {total:.2} s (limit 60 s)");
    if total >= 60.0 {
        failed += 1;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
