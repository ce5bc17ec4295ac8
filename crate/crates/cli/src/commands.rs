//! Subcommand bodies. Each builds its configuration, runs the study, and
//! writes its outputs with a `.meta` sidecar per file.

use std::path::{Path, PathBuf};

use lambda_soliton::experiments::{
    height_vs_time, threshold_gradient, velocity_vs_lambda, DetectionParams, GradientMode, HeightTrace, SweepResult,
};
use lambda_soliton::fractional::{compare_lambda_gl, GLConfig, MemoryLength};
use lambda_soliton::metrics::ProminenceFloor;
use lambda_soliton::{simulate, GridSpec, InitialCondition, SimulationConfig, C64};
use serde::Serialize;

use crate::output::{write_csv, write_csv_rows, write_meta, Cell, Meta, Table};
use crate::svg::{render_svg_lineplot, LinePlot, Marker, Series};
use crate::{
    CliError, Command, DetectArgs, GlArgs, GridArgs, HeightArgs, IcArgs, IcKind, SimulateArgs, SweepArgs,
    ThresholdArgs, ThresholdMode,
};

pub const TRAJECTORY_HEADER: [&str; 5] = ["step", "x", "u_re", "u_im", "abs_u"];
pub const VELOCITY_HEADER: [&str; 7] = [
    "c_re",
    "c_im",
    "lambda",
    "velocity_abs",
    "velocity_rel",
    "n_tracks",
    "formation_step",
];
pub const THRESHOLD_HEADER: [&str; 7] = ["lambda", "c_re", "c_im", "eps_lo", "eps_hi", "eps_star", "n_bisections"];
pub const HEIGHTS_HEADER: [&str; 5] = ["c_re", "c_im", "step", "height", "event_kind"];
pub const GL_HEADER: [&str; 7] = ["gamma", "k_re", "k_im", "memory", "step", "l2", "max"];
pub const GL_SUMMARY_HEADER: [&str; 8] = ["gamma", "k_re", "k_im", "memory", "max_l2", "max_max", "mean_l2", "mean_max"];

pub fn dispatch(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Simulate(a) => run_simulate(a),
        Command::SweepVelocity(a) => run_sweep(a),
        Command::Threshold(a) => run_threshold(a),
        Command::HeightTrace(a) => run_heights(a),
        Command::GlCompare(a) => run_gl(a),
    }
}

fn initial_condition(ic: &IcArgs) -> InitialCondition {
    match ic.ic {
        IcKind::Uniform => InitialCondition::Uniform { level: ic.level },
        IcKind::Ramp => InitialCondition::UniformWithEdgeRamp {
            level: ic.level,
            gradient: ic.gradient,
            ramp_width: ic.ramp_width,
        },
    }
}

fn base_config(grid: &GridArgs, lambda: f64, c: C64, ic: InitialCondition) -> Result<SimulationConfig, CliError> {
    let cfg = SimulationConfig {
        grid: GridSpec::new(grid.length, grid.n)?,
        lambda,
        c_coef: c,
        dt: grid.dt,
        n_steps: grid.steps,
        snapshot_stride: grid.stride,
        ic,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn detection(d: &DetectArgs) -> Result<DetectionParams, CliError> {
    if !(d.prominence > 0.0 && d.prominence < 1.0) {
        return Err(CliError::Usage(format!("--prominence must lie in (0, 1), got {}", d.prominence)));
    }
    let mut p = DetectionParams::default();
    p.min_lifetime = d.min_lifetime;
    p.tracking.floor = ProminenceFloor::RelativeToMax(d.prominence);
    Ok(p)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| {
        CliError::Output(crate::output::OutputError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn c_list(re: f64, ims: &[f64]) -> Result<Vec<C64>, CliError> {
    if ims.is_empty() {
        return Err(CliError::Usage("--c-imag needs at least one value".into()));
    }
    Ok(ims.iter().map(|&im| C64::new(re, im)).collect())
}

fn c_label(c: C64) -> String {
    if c.re == 0.0 {
        format!("C = {}i", c.im)
    } else {
        format!("C = {}{:+}i", c.re, c.im)
    }
}

fn announce(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn emit_meta<T: Serialize>(outputs: &[&PathBuf], command: &str, config: &T) -> Result<(), CliError> {
    let meta = Meta::new(command, config);
    for p in outputs {
        write_meta(p, &meta)?;
        announce(p);
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateMeta<'a> {
    simulation: &'a SimulationConfig,
}

fn run_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let cfg = base_config(&a.grid, a.lambda, C64::new(a.c_real, a.c_imag), initial_condition(&a.ic))?;
    let traj = simulate(&cfg)?;
    prepare_out(&a.grid.out)?;
    let path = a.grid.out.join("trajectory.csv");
    let grid = cfg.grid;
    let rows = traj.snapshots.iter().flat_map(|s| {
        s.values.iter().enumerate().map(move |(j, u)| {
            vec![
                Cell::Int(s.time_index),
                grid.x(j).into(),
                u.re.into(),
                u.im.into(),
                u.norm().into(),
            ]
        })
    });
    write_csv_rows(&path, &TRAJECTORY_HEADER, rows)?;
    emit_meta(&[&path], "simulate", &SimulateMeta { simulation: &cfg })
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    base: &'a SimulationConfig,
    lambdas: &'a [f64],
    c: &'a [C64],
    detection: &'a DetectionParams,
}

pub fn velocity_table(sweep: &SweepResult) -> Table {
    let mut t = Table::new(&VELOCITY_HEADER);
    for r in &sweep.rows {
        t.push(vec![
            r.c_coef.re.into(),
            r.c_coef.im.into(),
            r.lambda.into(),
            r.velocity_abs.into(),
            r.velocity_relative.into(),
            r.n_tracks.into(),
            r.formation_step.into(),
        ]);
    }
    t
}

/// One series of relative speed against λ per C; C values with fewer than
/// two measured points are left out.
pub fn velocity_plot(sweep: &SweepResult, cs: &[C64]) -> LinePlot {
    let series = cs
        .iter()
        .map(|&c| Series {
            name: c_label(c),
            points: sweep
                .series(c)
                .iter()
                .filter_map(|r| r.velocity_relative.map(|v| (r.lambda, v)))
                .collect(),
        })
        .filter(|s| s.points.len() >= 2)
        .collect();
    LinePlot {
        title: "Soliton speed against λ".into(),
        x_label: "λ".into(),
        y_label: "v / v(λ = 1)".into(),
        series,
        markers: Vec::new(),
    }
}

fn run_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let cs = c_list(a.c_real, &a.c_imag)?;
    let base = base_config(&a.grid, 1.0, cs[0], initial_condition(&a.ic))?;
    let params = detection(&a.detect)?;
    let sweep = velocity_vs_lambda(&cs, &a.lambdas, &base, &params)?;
    prepare_out(&a.grid.out)?;
    let csv_path = a.grid.out.join("velocity.csv");
    write_csv(&velocity_table(&sweep), &csv_path)?;
    let svg_path = a.grid.out.join("velocity.svg");
    let plot = velocity_plot(&sweep, &cs);
    let meta = SweepMeta {
        base: &base,
        lambdas: &a.lambdas,
        c: &cs,
        detection: &params,
    };
    if plot.series.is_empty() {
        eprintln!("no C value has two measured speeds, velocity.svg not written");
        return emit_meta(&[&csv_path], "sweep-velocity", &meta);
    }
    render_svg_lineplot(&plot, &svg_path)?;
    emit_meta(&[&csv_path, &svg_path], "sweep-velocity", &meta)
}

#[derive(Serialize)]
struct ThresholdMeta<'a> {
    base: &'a SimulationConfig,
    bracket: (f64, f64),
    tol: f64,
    mode: GradientMode,
    detection: &'a DetectionParams,
}

fn run_threshold(a: &ThresholdArgs) -> Result<(), CliError> {
    let c = C64::new(a.c_real, a.c_imag);
    let mode = match a.mode {
        ThresholdMode::Ramp => GradientMode::EdgeRamp {
            ramp_width: a.ramp_width,
        },
        ThresholdMode::Jump => GradientMode::BoundaryJump,
    };
    let base = base_config(&a.grid, a.lambda, c, mode.initial_condition(a.eps_hi))?;
    let params = detection(&a.detect)?;
    let r = threshold_gradient(a.lambda, c, (a.eps_lo, a.eps_hi), a.tol, &base, mode, &params)?;
    prepare_out(&a.grid.out)?;
    let path = a.grid.out.join("threshold.csv");
    let mut t = Table::new(&THRESHOLD_HEADER);
    t.push(vec![
        r.lambda.into(),
        r.c_coef.re.into(),
        r.c_coef.im.into(),
        r.epsilon_lo.into(),
        r.epsilon_hi.into(),
        r.epsilon_star.into(),
        r.n_bisections.into(),
    ]);
    write_csv(&t, &path)?;
    println!("eps_star = {:?}", r.epsilon_star);
    emit_meta(
        &[&path],
        "threshold",
        &ThresholdMeta {
            base: &base,
            bracket: (a.eps_lo, a.eps_hi),
            tol: a.tol,
            mode,
            detection: &params,
        },
    )
}

#[derive(Serialize)]
struct HeightMeta<'a> {
    base: &'a SimulationConfig,
    c: &'a [C64],
    detection: &'a DetectionParams,
}

/// One row per sample of each trace's dominant track. `event_kind` names
/// the events of that track at the sample's step, joined by `+`.
pub fn heights_table(traces: &[HeightTrace]) -> Table {
    let mut t = Table::new(&HEIGHTS_HEADER);
    for tr in traces {
        for &(step, h) in &tr.series {
            let kinds: Vec<&str> = tr
                .events
                .iter()
                .filter(|e| e.time_index == step)
                .map(|e| e.kind.as_str())
                .collect();
            let kind = if kinds.is_empty() {
                Cell::Missing
            } else {
                Cell::Text(kinds.join("+"))
            };
            t.push(vec![tr.c_coef.re.into(), tr.c_coef.im.into(), step.into(), h.into(), kind]);
        }
    }
    t
}

pub fn heights_plot(traces: &[HeightTrace]) -> LinePlot {
    let mut markers: Vec<Marker> = traces
        .iter()
        .flat_map(|tr| {
            tr.events.iter().map(|e| Marker {
                x: e.time_index as f64,
                label: e.kind.as_str().into(),
            })
        })
        .collect();
    markers.sort_by(|a, b| a.x.total_cmp(&b.x).then_with(|| a.label.cmp(&b.label)));
    markers.dedup();
    LinePlot {
        title: "Height of the dominant soliton".into(),
        x_label: "time step".into(),
        y_label: "max |u|".into(),
        series: traces
            .iter()
            .filter(|tr| tr.series.len() >= 2)
            .map(|tr| Series {
                name: c_label(tr.c_coef),
                points: tr.series.iter().map(|&(s, h)| (s as f64, h)).collect(),
            })
            .collect(),
        markers,
    }
}

fn run_heights(a: &HeightArgs) -> Result<(), CliError> {
    let cs = c_list(a.c_real, &a.c_imag)?;
    let base = base_config(&a.grid, a.lambda, cs[0], initial_condition(&a.ic))?;
    let params = detection(&a.detect)?;
    let traces = height_vs_time(&cs, a.lambda, &base, &params)?;
    prepare_out(&a.grid.out)?;
    let csv_path = a.grid.out.join("heights.csv");
    write_csv(&heights_table(&traces), &csv_path)?;
    for tr in &traces {
        match tr.plateau() {
            Some(p) => println!("{}: plateau {:?}, {} samples", c_label(tr.c_coef), p, tr.series.len()),
            None => println!("{}: no soliton", c_label(tr.c_coef)),
        }
    }
    let meta = HeightMeta {
        base: &base,
        c: &cs,
        detection: &params,
    };
    let plot = heights_plot(&traces);
    if plot.series.is_empty() {
        eprintln!("no trace has two samples, heights.svg not written");
        return emit_meta(&[&csv_path], "height-trace", &meta);
    }
    let svg_path = a.grid.out.join("heights.svg");
    render_svg_lineplot(&plot, &svg_path)?;
    emit_meta(&[&csv_path, &svg_path], "height-trace", &meta)
}

#[derive(Serialize)]
struct GlMeta<'a> {
    base: &'a SimulationConfig,
    fractional: &'a [GLConfig],
}

fn run_gl(a: &GlArgs) -> Result<(), CliError> {
    let c = C64::new(a.c_real, a.c_imag);
    let k = C64::new(a.k_real.unwrap_or(a.c_real), a.k_imag.unwrap_or(a.c_imag));
    if a.gamma.is_empty() {
        return Err(CliError::Usage("--gamma needs at least one value".into()));
    }
    let memory = if a.memory == 0 {
        MemoryLength::Unbounded
    } else {
        MemoryLength::Bounded(a.memory)
    };
    let base = base_config(&a.grid, a.lambda, c, initial_condition(&a.ic))?;
    let gls: Vec<GLConfig> = a
        .gamma
        .iter()
        .map(|&g| GLConfig {
            memory_length: memory,
            ..GLConfig::new(g, k)
        })
        .collect();
    let tables = gls
        .iter()
        .map(|gl| compare_lambda_gl(&base, gl))
        .collect::<Result<Vec<_>, _>>()?;
    prepare_out(&a.grid.out)?;
    let mem_cell = || Cell::Int(a.memory);
    let mut rows = Table::new(&GL_HEADER);
    let mut summary = Table::new(&GL_SUMMARY_HEADER);
    for (gl, t) in gls.iter().zip(&tables) {
        for r in &t.rows {
            rows.push(vec![
                gl.gamma.into(),
                k.re.into(),
                k.im.into(),
                mem_cell(),
                r.time_index.into(),
                r.l2.into(),
                r.max.into(),
            ]);
        }
        summary.push(vec![
            gl.gamma.into(),
            k.re.into(),
            k.im.into(),
            mem_cell(),
            t.max_l2.into(),
            t.max_max.into(),
            t.mean_l2.into(),
            t.mean_max.into(),
        ]);
        println!("gamma {:?}: max l2 {:?}, mean l2 {:?}", gl.gamma, t.max_l2, t.mean_l2);
    }
    if let Some((gl, t)) = gls.iter().zip(&tables).min_by(|a, b| a.1.mean_l2.total_cmp(&b.1.mean_l2)) {
        println!("closest: gamma {:?} (mean l2 {:?})", gl.gamma, t.mean_l2);
    }
    let path = a.grid.out.join("gl_compare.csv");
    let summary_path = a.grid.out.join("gl_summary.csv");
    write_csv(&rows, &path)?;
    write_csv(&summary, &summary_path)?;
    emit_meta(
        &[&path, &summary_path],
        "gl-compare",
        &GlMeta {
            base: &base,
            fractional: &gls,
        },
    )
}
