//! Command implementations.

use crate::output::{emit, render_csv, render_json, render_tsv, Header, Row, DECIMAL_DIGITS};
use crate::{AppError, RunArgs};
use serde::Serialize;
use treeharm_core::{
    aggregates, almgren_series, build_model, builtin_model, check_harmonic, dirichlet_g_series,
    f_series, identity_suite, modelfile, oracle_diff as core_oracle_diff, parse_rational,
    weiss_series, weiss_w2, BuiltinModel, Exponent, FunctionalSeries, HarmonicModel,
    HarmonicityVerdict, Representation, Scalar, ScalarMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Selection {
    G,
    W,
    N,
    F,
    Aggregates,
}

pub struct Session {
    model: HarmonicModel,
    label: String,
    builtin: Option<BuiltinModel>,
    p: Exponent,
    kmax: u32,
    mode: ScalarMode,
    seed: u64,
    selections: Vec<Selection>,
}

fn parse_scalar_arg(name: &str, value: &Option<String>) -> Result<Option<Scalar>, AppError> {
    match value {
        None => Ok(None),
        Some(text) => parse_rational(text)
            .map(|r| Some(Scalar::from_rational(r)))
            .map_err(|_| AppError::Config(format!("cannot parse --{name} {text:?} as a rational"))),
    }
}

fn parse_selections(list: &str) -> Result<Vec<Selection>, AppError> {
    let mut out = Vec::new();
    for item in list.split(',') {
        let sel = match item.trim() {
            "G" | "g" => Selection::G,
            "W" | "w" => Selection::W,
            "N" | "n" => Selection::N,
            "F" | "f" => Selection::F,
            "aggregates" => Selection::Aggregates,
            other => {
                return Err(AppError::Config(format!(
                    "unknown functional {other:?}; expected G, W, N, F or aggregates"
                )))
            }
        };
        if !out.contains(&sel) {
            out.push(sel);
        }
    }
    if out.is_empty() {
        return Err(AppError::Config("empty functional selection".into()));
    }
    Ok(out)
}

pub fn setup(args: &RunArgs) -> Result<Session, AppError> {
    let mode = match args.mode.as_str() {
        "exact" => ScalarMode::Exact,
        "float" => ScalarMode::Float {
            precision: args.precision,
        },
        other => {
            return Err(AppError::Config(format!(
                "unknown mode {other:?}; expected \"exact\" or \"float\""
            )))
        }
    };
    let p: Exponent = args
        .p
        .parse()
        .map_err(|e| AppError::Config(format!("invalid --p: {e}")))?;
    if mode.is_exact() && !p.is_integer() {
        return Err(AppError::Config(format!(
            "exact mode rejects non-integer p = {p}; use --mode float"
        )));
    }
    let repr = match args.repr.as_str() {
        "compressed" => Representation::Compressed,
        "enumerated" => Representation::Enumerated,
        other => {
            return Err(AppError::Config(format!(
                "unknown representation {other:?}"
            )))
        }
    };
    let seed = args.seed.unwrap_or(0);
    let selections = parse_selections(&args.functional)?;

    let (model, label, builtin, kmax) = if let Some(path) = &args.model_file {
        let spec = modelfile::load_model_file(path)?;
        let kmax = args.kmax.unwrap_or(spec.depth).max(1);
        let model = build_model(
            spec.cfg,
            spec.root.to_mode(mode),
            spec.splitter.to_mode(mode),
            kmax,
            repr,
        )?;
        let label = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        (model, label, None, kmax)
    } else {
        let name = args
            .model
            .as_deref()
            .ok_or_else(|| AppError::Config("one of --model or --model-file is required".into()))?;
        let a = parse_scalar_arg("a", &args.a)?;
        let b = parse_scalar_arg("b", &args.b)?;
        let family = BuiltinModel::from_name(name, a, b, args.d, args.seed)?;
        let kmax = args.kmax.unwrap_or(10).max(1);
        let model = builtin_model(&family, kmax, repr, mode)?;
        (model, family.to_string(), Some(family), kmax)
    };

    let model = match &args.perturb {
        None => model,
        Some(spec) => {
            let (level, index) = spec
                .split_once(':')
                .and_then(|(l, i)| Some((l.parse().ok()?, i.parse().ok()?)))
                .ok_or_else(|| {
                    AppError::Config(format!("--perturb expects \"level:index\", got {spec:?}"))
                })?;
            model.perturbed(level, index, &Scalar::from_integer(1).to_mode(mode))?
        }
    };

    Ok(Session {
        model,
        label,
        builtin,
        p,
        kmax,
        mode,
        seed,
        selections,
    })
}

fn header(s: &Session) -> Header {
    Header {
        d: s.model.degree(),
        p: s.p.to_string(),
        mode: s.mode.to_string(),
        seed: s.seed,
        model: s.label.clone(),
    }
}

/// Cumulative per-row monotone flags: row i is true when the series prefix
/// through i is non-decreasing (float mode: within the default tolerance).
fn cumulative_flags(series: &FunctionalSeries) -> Vec<bool> {
    let mut flags = Vec::with_capacity(series.values.len());
    let mut ok = true;
    for (i, _) in series.values.iter().enumerate() {
        if ok && i > 0 {
            let prefix =
                treeharm_core::monotonicity_report(&series.values[..=i], series.start_index, None);
            ok = prefix.non_decreasing;
        }
        flags.push(ok);
    }
    flags
}

fn series_rows(series: &FunctionalSeries, label: &str, rows: &mut Vec<Row>) {
    let flags = cumulative_flags(series);
    for (i, value) in series.values.iter().enumerate() {
        rows.push(Row {
            k: series.index_of(i),
            functional: label.to_string(),
            value_exact: value.exact_string(),
            value_decimal: value.decimal_string(DECIMAL_DIGITS),
            monotone_ok: Some(flags[i]),
        });
    }
}

fn aggregate_rows(s: &Session, rows: &mut Vec<Row>) -> Result<(), AppError> {
    let mut push = |k: u32, name: &str, value: &Scalar| {
        rows.push(Row {
            k,
            functional: name.to_string(),
            value_exact: value.exact_string(),
            value_decimal: value.decimal_string(DECIMAL_DIGITS),
            monotone_ok: None,
        });
    };
    let mut partial = Scalar::zero(s.mode);
    for k in 0..s.kmax {
        let agg = aggregates(&s.model, &s.p, k)?;
        push(k, "D", &agg.d_k);
        push(k, "H", &agg.h_k);
        push(k, "N_raw", &agg.n_k);
        if let Some(c) = &agg.c_k {
            push(k, "C", c);
        }
        if let Some(r) = &agg.r_k {
            push(k, "R", r);
        }
        partial = partial.add(&agg.d_k);
        push(k + 1, "partial_energy", &partial);
    }
    Ok(())
}

fn collect_rows(s: &Session) -> Result<Vec<Row>, AppError> {
    let mut rows = Vec::new();
    for sel in &s.selections {
        match sel {
            Selection::G => {
                let series = dirichlet_g_series(&s.model, &s.p, s.kmax)?;
                series_rows(&series, "G", &mut rows);
            }
            Selection::W => {
                let series = weiss_series(&s.model, s.kmax)?;
                series_rows(&series, series.kind.label(), &mut rows);
            }
            Selection::N => {
                let series = almgren_series(&s.model, &s.p, s.kmax - 1)?;
                series_rows(&series, "N", &mut rows);
            }
            Selection::F => {
                let series = f_series(&s.model, &s.p, s.kmax - 1)?;
                series_rows(&series, "F", &mut rows);
            }
            Selection::Aggregates => aggregate_rows(s, &mut rows)?,
        }
    }
    Ok(rows)
}

pub fn sweep(args: &RunArgs) -> Result<(), AppError> {
    let s = setup(args)?;
    let rows = collect_rows(&s)?;
    let content = match args.format.as_str() {
        "csv" => render_csv(&rows),
        "json" => render_json(&header(&s), &rows),
        "tsv" => render_tsv(&rows),
        other => return Err(AppError::Config(format!("unknown format {other:?}"))),
    };
    emit(&args.out, &content)
}

pub fn plot_data(args: &RunArgs) -> Result<(), AppError> {
    let s = setup(args)?;
    let rows = collect_rows(&s)?;
    emit(&args.out, &render_tsv(&rows))
}

#[derive(Serialize)]
struct VerifyCheck {
    name: String,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

#[derive(Serialize)]
struct VerifyReport {
    model: String,
    d: u32,
    p: String,
    mode: String,
    kmax: u32,
    status: String,
    checks: Vec<VerifyCheck>,
}

fn push_check(
    checks: &mut Vec<VerifyCheck>,
    failed: &mut bool,
    name: &str,
    ok: bool,
    detail: Option<String>,
) {
    if !ok {
        *failed = true;
    }
    checks.push(VerifyCheck {
        name: name.to_string(),
        status: if ok { "pass".into() } else { "fail".into() },
        detail,
    });
}

fn push_mono(
    checks: &mut Vec<VerifyCheck>,
    failed: &mut bool,
    name: &str,
    series: &FunctionalSeries,
    skip_first: bool,
) {
    let start = usize::from(skip_first).min(series.values.len());
    let verdict = treeharm_core::monotonicity_report(
        &series.values[start..],
        series.start_index + start as u32,
        None,
    );
    let label = if verdict.float_verified {
        "float-verified"
    } else if verdict.strictly_increasing {
        "strictly increasing"
    } else {
        "non-decreasing"
    };
    let ok = verdict.non_decreasing;
    if !ok {
        *failed = true;
    }
    checks.push(VerifyCheck {
        name: name.to_string(),
        status: if ok { "pass".into() } else { "fail".into() },
        detail: if ok {
            Some(label.into())
        } else {
            verdict
                .first_violation
                .map(|(k, deficit)| format!("violated at k={k}, deficit {deficit}"))
        },
    });
}

pub fn verify(args: &RunArgs) -> Result<(), AppError> {
    let s = setup(args)?;
    let mut checks = Vec::new();
    let mut failed = false;

    // Harmonicity: every vertex's neighbor sum equals d times its value.
    match check_harmonic(&s.model) {
        HarmonicityVerdict::Pass => {
            push_check(&mut checks, &mut failed, "child_sum_constraint", true, None)
        }
        HarmonicityVerdict::Fail(f) => push_check(
            &mut checks,
            &mut failed,
            "child_sum_constraint",
            false,
            Some(format!(
                "level {} class (u={}, up={}): {}",
                f.level,
                f.value,
                f.parent.as_deref().unwrap_or("-"),
                f.detail
            )),
        ),
    }

    // The aggregate identity suite (exact mode only).
    if s.mode.is_exact() && s.kmax >= 1 {
        let report = identity_suite(&s.model, s.kmax - 1)?;
        for check in &report.checks {
            match &check.status {
                treeharm_core::identities::CheckStatus::Pass { .. } => {
                    push_check(&mut checks, &mut failed, check.name, true, None)
                }
                treeharm_core::identities::CheckStatus::Fail { witness } => push_check(
                    &mut checks,
                    &mut failed,
                    check.name,
                    false,
                    Some(witness.clone()),
                ),
                treeharm_core::identities::CheckStatus::NotApplicable { reason } => {
                    checks.push(VerifyCheck {
                        name: check.name.to_string(),
                        status: "skipped".into(),
                        detail: Some(reason.clone()),
                    });
                }
            }
        }
    } else if !s.mode.is_exact() {
        checks.push(VerifyCheck {
            name: "identity_suite".into(),
            status: "skipped".into(),
            detail: Some("identities are exact statements; run in exact mode".into()),
        });
    }

    // Monotonicity of the three functionals (plus the per-level energy).
    let g = dirichlet_g_series(&s.model, &s.p, s.kmax)?;
    push_mono(&mut checks, &mut failed, "dirichlet_monotone", &g, false);
    let f = f_series(&s.model, &s.p, s.kmax - 1)?;
    push_mono(&mut checks, &mut failed, "level_energy_monotone", &f, false);
    let w = weiss_series(&s.model, s.kmax)?;
    push_mono(&mut checks, &mut failed, "weiss_monotone", &w, false);
    // The frequency step from k = 0 to 1 is covered by the theorems only
    // when u vanishes at the root (the root has d children, not d-1).
    let n = almgren_series(&s.model, &s.p, s.kmax - 1)?;
    let skip_first = !s.model.root_data().u0().is_zero();
    push_mono(
        &mut checks,
        &mut failed,
        "frequency_monotone",
        &n,
        skip_first,
    );

    // d = 2: the Weiss functional has the closed form a^2 - b^2/k^2.
    if s.model.degree() == 2 && s.mode.is_exact() {
        let b = s.model.root_data().u0().clone();
        let a = s.model.root_data().children()[0].sub(&b);
        let mut ok = true;
        let mut detail = None;
        for k in 1..=s.kmax {
            let expected = a.mul(&a).sub(
                &b.mul(&b)
                    .div(&Scalar::from_integer((k as i64) * (k as i64))),
            );
            let got = weiss_w2(&s.model, k)?;
            if got != expected {
                ok = false;
                detail = Some(format!("k={k}: W={got}, limit form {expected}"));
                break;
            }
        }
        push_check(&mut checks, &mut failed, "weiss2_limit_form", ok, detail);
    }

    let report = VerifyReport {
        model: s.label.clone(),
        d: s.model.degree(),
        p: s.p.to_string(),
        mode: s.mode.to_string(),
        kmax: s.kmax,
        status: if failed { "fail".into() } else { "pass".into() },
        checks,
    };
    let mut content = serde_json::to_string_pretty(&report).expect("serializable");
    content.push('\n');
    emit(&args.out, &content)?;
    if failed {
        Err(AppError::Verification("verification failed".into()))
    } else {
        Ok(())
    }
}

pub fn oracle_diff(args: &RunArgs) -> Result<(), AppError> {
    let s = setup(args)?;
    let family = s.builtin.clone().ok_or_else(|| {
        AppError::Config("oracle-diff needs a built-in model name (--model)".into())
    })?;
    let p = s.p.as_u32().ok_or_else(|| {
        AppError::Config(format!("oracle formulas need an integer p, got {}", s.p))
    })?;
    let report = core_oracle_diff(&s.model, &family, p, s.kmax)?;
    let mut content = String::new();
    let mut mismatch_count = 0usize;
    for e in report.mismatches() {
        mismatch_count += 1;
        content.push_str(&format!(
            "{} k={}: engine {} oracle {} diff {}\n",
            e.name,
            e.k,
            e.engine.exact_string(),
            e.oracle.exact_string(),
            e.diff().exact_string()
        ));
    }
    content.push_str(&format!(
        "{}: {} comparisons, {} mismatches\n",
        report.family,
        report.entries.len(),
        mismatch_count
    ));
    emit(&args.out, &content)?;
    if mismatch_count > 0 {
        Err(AppError::Verification(format!(
            "{mismatch_count} oracle mismatches"
        )))
    } else {
        Ok(())
    }
}
