//! The five subcommands. Sweep rows run concurrently; output rows are
//! written in row order, so fixed seed and config give bit-identical files.

use crate::config::RunConfig;
use crate::output::{fmt, fmt_vec, OutputDir};
use crate::CliError;
use birkhoff_core::closedform::{billiard_g0, clairaut_g, closed_form_return_map, ellipsoid_g};
use birkhoff_core::flow::flow_with;
use birkhoff_core::linalg;
use birkhoff_core::section::{
    full_audit, return_map, seeded_page_starts, SectionError,
};
use birkhoff_core::surface::project_to_surface;
use birkhoff_core::{Profile64, ReturnRecord64};
use rayon::prelude::*;
use std::f64::consts::TAU;

fn num_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn coord_columns(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

pub fn cmd_audit(config: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let surface = config.build_surface()?;
    let outcome = full_audit(&surface, &config.audit_options()).map_err(num_err)?;
    let path = out.write_json("audit.json", &outcome.report)?;
    println!(
        "audit: passed = {} (report: {})",
        outcome.report.passed,
        path.display()
    );
    if outcome.report.passed {
        Ok(())
    } else {
        Err(CliError::Verification(
            "surface audit failed; see audit.json for the witness".into(),
        ))
    }
}

pub fn cmd_epsilon(config: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let surface = config.build_surface()?;
    let outcome = full_audit(&surface, &config.audit_options()).map_err(num_err)?;
    let payload = serde_json::json!({
        "epsilon_estimate": outcome.report.epsilon_estimate,
        "epsilon_samples": config.audit_options().epsilon_samples,
        "audit_passed": outcome.report.passed,
    });
    let path = out.write_json("epsilon.json", &payload)?;
    match outcome.report.epsilon_estimate {
        Some(eps) if eps > 0.0 => {
            println!("epsilon estimate: {eps} (report: {})", path.display());
            Ok(())
        }
        _ => Err(CliError::Verification(
            "no positive epsilon estimate (an audit failed); see epsilon.json".into(),
        )),
    }
}

pub fn cmd_flow(config: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let surface = config.build_surface()?;
    let icfg = config.integrator_config()?;
    let block = config
        .flow
        .as_ref()
        .ok_or_else(|| CliError::Config("the flow command needs a `flow` config block".into()))?;
    let dim = surface.ambient_dim();
    if block.start_x.len() != dim {
        return Err(CliError::Config(format!(
            "flow.start_x has {} entries; the surface is in R^{dim}",
            block.start_x.len()
        )));
    }
    let start =
        project_to_surface(&surface, &block.start_x, &block.start_y).map_err(num_err)?;

    let mut columns = vec!["t".to_string()];
    columns.extend(coord_columns("x", dim));
    columns.extend(coord_columns("y", dim));
    columns.extend(
        ["abs_f", "abs_y_dot_grad_f", "y_norm_minus_1", "unwrapped_angle"]
            .map(String::from),
    );

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push_row = |t: f64, phase: &birkhoff_core::Phase64, angle: f64| {
        let res = phase.residuals(&surface).expect("evaluable phase");
        let mut row = vec![fmt(t)];
        row.extend(fmt_vec(&phase.x));
        row.extend(fmt_vec(&phase.y));
        row.push(fmt(res.level));
        row.push(fmt(res.tangency));
        row.push(fmt(res.unit_norm));
        row.push(fmt(angle));
        rows.push(row);
    };
    push_row(0.0, &start, 0.0);
    let mut step_index = 0usize;
    let mut pending: Option<(f64, birkhoff_core::Phase64, f64)> = None;
    flow_with(&surface, &start, block.t_final, &icfg, |state, _| {
        step_index += 1;
        if step_index % block.output_every == 0 {
            push_row(state.time, &state.phase, state.unwrapped_angle);
            pending = None;
        } else {
            pending = Some((state.time, state.phase.clone(), state.unwrapped_angle));
        }
    })
    .map_err(num_err)?;
    if let Some((t, phase, angle)) = pending {
        push_row(t, &phase, angle);
    }
    let path = out.write_csv("trajectory.csv", &columns, &rows)?;
    println!("flow: {} rows (output: {})", rows.len(), path.display());
    Ok(())
}

pub fn cmd_section(config: &RunConfig, out: &OutputDir, force: bool) -> Result<(), CliError> {
    let surface0 = config.build_surface()?;
    let outcome = full_audit(&surface0, &config.audit_options()).map_err(num_err)?;
    if !outcome.report.passed && !force {
        out.write_json("audit.json", &outcome.report)?;
        return Err(CliError::Verification(
            "surface audits failed (see audit.json); rerun with --force to sweep anyway".into(),
        ));
    }
    let surface = outcome.normalized.clone().unwrap_or(surface0);
    let epsilon = outcome.report.epsilon_estimate;
    let bound = epsilon.map(|e| TAU / e.min(1.0));
    let icfg = config.integrator_config()?;
    let starts =
        seeded_page_starts(&surface, config.sweep.count, config.sweep.seed).map_err(num_err)?;
    let results: Vec<Result<ReturnRecord64, SectionError<f64>>> = starts
        .par_iter()
        .map(|s| return_map(&surface, s, &icfg))
        .collect();

    let dim = surface.ambient_dim();
    let mut columns = vec!["kind".to_string(), "index".to_string()];
    columns.extend(coord_columns("start_x", dim));
    columns.extend(coord_columns("start_y", dim));
    columns.extend(coord_columns("end_x", dim));
    columns.extend(coord_columns("end_y", dim));
    columns.extend(
        ["tau", "steps", "angle_total", "max_drift", "tau_bound", "error"].map(String::from),
    );

    let blank = String::new();
    let bound_str = bound.map(fmt).unwrap_or_default();
    let mut rows = Vec::new();
    let mut max_tau: f64 = 0.0;
    let mut max_drift: f64 = 0.0;
    let mut errors = 0usize;
    for (i, result) in results.iter().enumerate() {
        let mut row = vec!["record".to_string(), i.to_string()];
        match result {
            Ok(rec) => {
                row.extend(fmt_vec(&rec.start.x));
                row.extend(fmt_vec(&rec.start.y));
                row.extend(fmt_vec(&rec.end.x));
                row.extend(fmt_vec(&rec.end.y));
                row.push(fmt(rec.tau));
                row.push(rec.steps.to_string());
                row.push(fmt(rec.angle_total));
                row.push(fmt(rec.max_drift));
                row.push(bound_str.clone());
                row.push(blank.clone());
                max_tau = max_tau.max(rec.tau);
                max_drift = max_drift.max(rec.max_drift);
            }
            Err(e) => {
                row.extend(fmt_vec(&starts[i].x));
                row.extend(fmt_vec(&starts[i].y));
                row.extend(std::iter::repeat(blank.clone()).take(2 * dim));
                row.extend([blank.clone(), blank.clone(), blank.clone(), blank.clone()]);
                row.push(bound_str.clone());
                row.push(e.to_string().replace(',', ";"));
                errors += 1;
            }
        }
        rows.push(row);
    }
    let mut summary = vec!["summary".to_string(), blank.clone()];
    summary.extend(std::iter::repeat(blank.clone()).take(4 * dim));
    summary.push(fmt(max_tau));
    summary.push(blank.clone());
    summary.push(blank.clone());
    summary.push(fmt(max_drift));
    summary.push(bound_str);
    summary.push(errors.to_string());
    rows.push(summary);
    let path = out.write_csv("section.csv", &columns, &rows)?;
    println!(
        "section: {} records, max tau {max_tau}, max drift {max_drift:e} (output: {})",
        results.len(),
        path.display()
    );
    if errors > 0 {
        return Err(CliError::Numerical(format!(
            "{errors} of {} section rows failed; see the error column",
            results.len()
        )));
    }
    Ok(())
}

pub fn cmd_compare(config: &RunConfig, out: &OutputDir) -> Result<(), CliError> {
    let surface = config.build_surface()?;
    let a0 = surface.revolution_coefficient().ok_or_else(|| {
        CliError::Config(
            "unsupported surface for compare: needs ellipsoid(a0,1,..,1), sphere(1), or a \
             revolution family"
                .into(),
        )
    })?;
    let icfg = config.integrator_config()?;
    let starts =
        seeded_page_starts(&surface, config.sweep.count, config.sweep.seed).map_err(num_err)?;

    struct Row {
        t: f64,
        g: f64,
        tau: f64,
        delta: f64,
    }
    let results: Vec<Result<Row, String>> = starts
        .par_iter()
        .map(|start| {
            let rec = return_map(&surface, start, &icfg).map_err(|e| e.to_string())?;
            let t = linalg::norm(&start.y[1..]);
            let g = ellipsoid_g(t, a0).map_err(|e| e.to_string())?;
            let (x_cf, y0_cf, y_cf) =
                closed_form_return_map(&start.x[1..], start.y0(), &start.y[1..], g)
                    .map_err(|e| e.to_string())?;
            let mut delta = (rec.end.y0() - y0_cf).abs();
            for i in 0..x_cf.len() {
                delta = delta.max((rec.end.x[1 + i] - x_cf[i]).abs());
                delta = delta.max((rec.end.y[1 + i] - y_cf[i]).abs());
            }
            Ok(Row {
                t,
                g,
                tau: rec.tau,
                delta,
            })
        })
        .collect();

    let dim = surface.ambient_dim();
    let mut columns = vec!["kind".to_string(), "index".to_string()];
    columns.extend(coord_columns("start_x", dim));
    columns.extend(coord_columns("start_y", dim));
    columns.extend(["t", "g_value", "tau", "max_abs_delta", "error"].map(String::from));
    let blank = String::new();
    let mut rows = Vec::new();
    let mut max_delta: f64 = 0.0;
    let mut errors = 0usize;
    for (i, result) in results.iter().enumerate() {
        let mut row = vec!["record".to_string(), i.to_string()];
        row.extend(fmt_vec(&starts[i].x));
        row.extend(fmt_vec(&starts[i].y));
        match result {
            Ok(r) => {
                row.extend([fmt(r.t), fmt(r.g), fmt(r.tau), fmt(r.delta), blank.clone()]);
                max_delta = max_delta.max(r.delta);
            }
            Err(e) => {
                row.extend([
                    blank.clone(),
                    blank.clone(),
                    blank.clone(),
                    blank.clone(),
                    e.replace(',', ";"),
                ]);
                errors += 1;
            }
        }
        rows.push(row);
    }
    let mut summary = vec!["summary".to_string(), blank.clone()];
    summary.extend(std::iter::repeat(blank.clone()).take(2 * dim));
    summary.extend([blank.clone(), blank.clone(), blank.clone()]);
    summary.push(fmt(max_delta));
    summary.push(errors.to_string());
    rows.push(summary);
    let path = out.write_csv("compare.csv", &columns, &rows)?;

    // Closed-form G table: ellipsoid formula vs Clairaut integral vs the
    // billiard limit, on the configured t grid.
    let profile = match surface.profile() {
        Some(p) => p.clone(),
        None => Profile64::parse(&format!("{a0}*sin(phi)")).map_err(num_err)?,
    };
    let g_columns: Vec<String> = [
        "t",
        "profile",
        "g_closed",
        "g_clairaut",
        "abs_delta",
        "g_billiard",
        "abs_delta_billiard",
    ]
    .map(String::from)
    .into();
    let mut g_rows = Vec::new();
    let mut max_g_delta: f64 = 0.0;
    for &t in &config.compare.t_grid {
        let g_closed = ellipsoid_g(t, a0).map_err(num_err)?;
        let g_cl = clairaut_g(t, &profile).map_err(num_err)?;
        let g_b = billiard_g0(t);
        max_g_delta = max_g_delta.max((g_closed - g_cl).abs());
        g_rows.push(vec![
            fmt(t),
            profile.text().to_string(),
            fmt(g_closed),
            fmt(g_cl),
            fmt((g_closed - g_cl).abs()),
            fmt(g_b),
            fmt((g_cl - g_b).abs()),
        ]);
    }
    let g_path = out.write_csv("g_table.csv", &g_columns, &g_rows)?;
    println!(
        "compare: max coordinate delta {max_delta:e}, max G delta {max_g_delta:e} (outputs: {}, {})",
        path.display(),
        g_path.display()
    );
    if errors > 0 {
        return Err(CliError::Numerical(format!(
            "{errors} of {} comparison rows failed",
            results.len()
        )));
    }
    if let Some(tol) = config.compare.tolerance {
        if max_delta > tol {
            return Err(CliError::Verification(format!(
                "max coordinate delta {max_delta:e} exceeds tolerance {tol:e}"
            )));
        }
    }
    Ok(())
}
