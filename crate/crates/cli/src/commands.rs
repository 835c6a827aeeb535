//! Subcommand implementations. Every command validates, computes through
//! the library, prints a key-value summary to stdout, and optionally writes
//! a CSV. All output is deterministic: repeated runs and different thread
//! counts produce identical bytes.

use std::path::{Path, PathBuf};

use popsim_core::{
    algorithms::cap_sweep_csv, algorithms::experimental_pvm_feed_utilities, cap_sweep,
    classify_regime, compare_algorithms, cross_validate, random_suite, sweep, sweep_csv,
    three_opinion_equilibrium, threshold_set, AnalyticsError, EquilibriumError, TiePolicy,
};

use crate::config::{AlgorithmsSection, ConfigFile, SweepSection, VerifySection};
use crate::CliError;

fn write_or_print(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn resolve_out(flag: Option<&PathBuf>, section: Option<&PathBuf>) -> Option<PathBuf> {
    flag.or(section).cloned()
}

fn fmt(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v}")
}

pub fn cmd_equilibrium(
    config: &ConfigFile,
    out_flag: Option<&PathBuf>,
    allow_odd_split: bool,
) -> Result<(), CliError> {
    let s = config.scenario()?;
    let ties = TiePolicy {
        strict: !allow_odd_split,
    };
    let outcome = three_opinion_equilibrium(&s, ties).map_err(|e| match e {
        EquilibriumError::OddIndifferentGroup { .. } => CliError::Validation(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;

    let mut text = String::new();
    text.push_str(&format!("n = {}\n", s.n()));
    text.push_str(&format!("g0 = {}\n", s.g0()));
    text.push_str(&format!("regime = {}\n", s.regime().as_str()));
    text.push_str(&format!("eq_kind = {}\n", outcome.kind.as_str()));
    text.push_str(&format!(
        "C = ({}, {}, {})\n",
        outcome.c_minus, outcome.c_zero, outcome.c_plus
    ));
    text.push_str(&format!("c_minus = {}\n", outcome.c_minus));
    text.push_str(&format!("c_zero = {}\n", outcome.c_zero));
    text.push_str(&format!("c_plus = {}\n", outcome.c_plus));
    text.push_str(&format!(
        "polarization = {}\n",
        outcome.polarization_order().as_str()
    ));
    text.push_str(&format!(
        "ties_logged = {}\n",
        outcome.profile.tie_break_log().len()
    ));
    print!("{text}");

    // CSV: one row per opinion value with society and platform counts.
    let out = resolve_out(
        out_flag,
        config.equilibrium.as_ref().and_then(|e| e.out.as_ref()),
    );
    if let Some(path) = out {
        let b = s.intensity_b();
        let a = s.density_a();
        let mut csv = String::from("opinion,society_count,platform_count,likes_per_post\n");
        for (value, society_count, platform_count) in [
            (-b, s.g_pole(), outcome.c_minus),
            (0.0, s.g0(), outcome.c_zero),
            (b, s.g_pole(), outcome.c_plus),
        ] {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                fmt(value),
                society_count,
                platform_count,
                fmt(a * f64::from(society_count))
            ));
        }
        write_or_print(Some(&path), &csv)?;
    }
    Ok(())
}

pub fn cmd_thresholds(config: &ConfigFile, out_flag: Option<&PathBuf>) -> Result<(), CliError> {
    let s = config.scenario()?;
    let set = threshold_set(&s).map_err(regime_error)?;
    let report = classify_regime(&s).map_err(regime_error)?;

    let mut pairs: Vec<(String, String)> = vec![
        ("n".into(), s.n().to_string()),
        ("g0".into(), s.g0().to_string()),
        ("d".into(), fmt(s.misalignment_cost())),
        ("regime".into(), report.regime.as_str().into()),
        ("eq_kind".into(), report.equilibrium_kind.as_str().into()),
        (
            "utility_region".into(),
            report.utility_region.as_str().into(),
        ),
        (
            "welfare_vs_authentic".into(),
            report.welfare_vs_authentic.as_str().into(),
        ),
    ];
    for (name, threshold) in set.entries() {
        pairs.push((name.to_string(), threshold.to_string()));
    }
    for c in &report.active_thresholds {
        pairs.push((
            format!("check[{}]", c.name),
            format!("{} vs {} -> {}", fmt(c.lhs), fmt(c.rhs), c.holds),
        ));
    }

    let mut text = String::new();
    for (k, v) in &pairs {
        text.push_str(&format!("{k} = {v}\n"));
    }
    print!("{text}");

    let out = resolve_out(
        out_flag,
        config.thresholds.as_ref().and_then(|t| t.out.as_ref()),
    );
    if let Some(path) = out {
        let mut csv = String::from("name,value\n");
        for (k, v) in &pairs {
            csv.push_str(&format!("{k},{v}\n"));
        }
        write_or_print(Some(&path), &csv)?;
    }
    Ok(())
}

pub fn cmd_sweep(config: &ConfigFile, out_flag: Option<&PathBuf>) -> Result<(), CliError> {
    let s = config.scenario()?;
    let section: &SweepSection = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    let axis = section.axis()?;
    let grid = section.grid()?;
    let rows = sweep(&s, axis, &grid);
    let csv = sweep_csv(&rows);
    let errors = rows.iter().filter(|r| r.outcome.is_err()).count();
    eprintln!(
        "sweep: axis={} points={} errors={errors}",
        axis.as_str(),
        rows.len()
    );
    let out = resolve_out(out_flag, section.out.as_ref());
    write_or_print(out.as_deref(), &csv)
}

pub fn cmd_algorithms(config: &ConfigFile, out_flag: Option<&PathBuf>) -> Result<(), CliError> {
    let s = config.scenario()?;
    let section: &AlgorithmsSection = config
        .algorithms
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [algorithms] section".into()))?;
    let g0_grid = section.g0_grid()?;
    let rows = cap_sweep(&s, &g0_grid, &section.caps);
    let csv = cap_sweep_csv(&rows);

    // Comparison summary: for each cap, where the algorithms strictly
    // disagree, with the verdict checked against its conditions.
    let mut summary = String::new();
    for &k in &section.caps {
        let mut strict_points = Vec::new();
        let mut consistent = true;
        for &g0 in &g0_grid {
            let Ok(sc) = s.with_g0(g0) else { continue };
            let Ok(cmp) = compare_algorithms(&sc, k) else {
                continue;
            };
            if cmp.strict {
                strict_points.push(g0.to_string());
            }
            let conditions_hold = cmp.conditions.iter().all(|c| c.holds);
            consistent &= cmp.strict == conditions_hold;
        }
        summary.push_str(&format!(
            "k = {k}: strict_at = [{}], verdicts_match_conditions = {consistent}\n",
            strict_points.join(" ")
        ));
    }
    print!("{summary}");

    if section.experimental_pvm_welfare {
        for &k in &section.caps {
            match experimental_pvm_feed_utilities(k, &s) {
                Ok(u) => println!(
                    "experimental_pvm_welfare k={k}: neutral_delta = {}, opinionated_delta = {}",
                    fmt(u.neutral.delta()),
                    fmt(u.opinionated.delta())
                ),
                Err(e) => println!("experimental_pvm_welfare k={k}: error {e}"),
            }
        }
    }

    let out = resolve_out(out_flag, section.out.as_ref());
    write_or_print(out.as_deref(), &csv)
}

pub fn cmd_verify(config: &ConfigFile, out_flag: Option<&PathBuf>) -> Result<(), CliError> {
    let s = config.scenario()?;
    let defaults = VerifySection {
        small_n: 6,
        instances: 200,
        max_n: 6,
        max_opinions: 3,
        seed: 42,
        budget: popsim_core::DEFAULT_ENUMERATION_BUDGET,
    };
    let section = config.verify.as_ref().unwrap_or(&defaults);

    let report =
        cross_validate(&s, section.small_n).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut text = String::new();
    text.push_str(&format!(
        "cross_validation: n = {}, groups = {:?}, equilibria = {}, passed = {}\n",
        report.n,
        report.group_sizes,
        report.equilibria,
        report.passed()
    ));
    for m in &report.mismatches {
        text.push_str(&format!("  mismatch: {m}\n"));
    }
    for v in &report.reaction_violations {
        text.push_str(&format!("  reaction: {v}\n"));
    }

    let suite = random_suite(
        section.seed,
        section.instances,
        section.max_n,
        section.max_opinions,
        section.budget,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push_str(&format!(
        "random_suite: instances = {}, total_equilibria = {}, mismatches = {}, \
         reaction_violations = {}\n",
        suite.instances,
        suite.total_equilibria,
        suite.mismatches.len(),
        suite.reaction_violations.len()
    ));
    for m in suite.mismatches.iter().take(10) {
        text.push_str(&format!("  mismatch: {m}\n"));
    }

    let passed = report.passed() && suite.passed();
    text.push_str(if passed { "verify: PASS\n" } else { "verify: FAIL\n" });
    print!("{text}");
    if let Some(path) = out_flag {
        std::fs::write(path, &text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Runtime(
            "oracle and engine disagree; see report above".into(),
        ))
    }
}

fn regime_error(e: AnalyticsError) -> CliError {
    match e {
        AnalyticsError::WrongRegime { .. } => CliError::Regime(e.to_string()),
        AnalyticsError::NoDeviationRegion => CliError::Regime(e.to_string()),
    }
}
