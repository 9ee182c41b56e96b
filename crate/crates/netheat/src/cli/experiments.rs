//! Experiment drivers behind `netheat run` and `netheat validate`.
//!
//! A run loads one config, builds the graph and mesh, computes, and writes
//! its artifacts into the output directory: `summary.txt` (human report),
//! `summary.csv` (machine twin), and the experiment's own CSVs and field
//! dumps. Runs are deterministic: the only randomness is a counter-based
//! generator seeded from the config, floats are printed with 17 significant
//! digits, and rerunning the same config reproduces every file byte for
//! byte. A run passes when all of its asserted inequalities hold.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cli::config::{
    parse_config, ExperimentConfig, ExperimentKind, GraphSource, InitialData,
};
use crate::dynamics::dual::{duality_gap, solve_backward_dual, DualCoefficient};
use crate::dynamics::{evolve_with, EvolveOptions, Trajectory};
use crate::error::{Error, Result};
use crate::fem::io::{parse_field, write_field};
use crate::fem::{assemble, GraphField, GraphGrid, MassMode, OperatorPair};
use crate::graph::io::{parse_graph, parse_tree, TREE_HEADER};
use crate::graph::{
    build_regular_tree, check_h2, Exhaustion, GraphBuilder, MetricGraph, RegularTreeSpec,
    RootedMetrics, VertexId,
};
use crate::nonlinearity::Nonlinearity;
use crate::order::barrier::{barrier_check, BarrierParams, ExhaustedGraph};
use crate::order::{
    check_order_conditions, compare, default_order_tol, monotone_iterate, solve_stationary,
    BoundaryKind, Candidate, OrderKind,
};
use crate::reduction::{evolve_reduced_and_compare, ReducedField, ReducedGrid};
use crate::textio::fmt_g17;

/// Default slack for the duality-gap and dual-envelope assertions.
const DUAL_TOL: f64 = 1e-8;
/// Default cap on the full-versus-reduced deviation of matched tree runs.
const REDUCTION_TOL: f64 = 1e-8;
/// Default cap on the relative mass drift of reaction-free Neumann runs.
const MASS_TOL: f64 = 1e-10;
/// Default sandwich slack for the monotone limits.
const SANDWICH_TOL: f64 = 1e-8;
/// Default disagreement cap between a monotone limit and its Newton twin.
const NEWTON_AGREEMENT_TOL: f64 = 1e-6;
/// Default cap on the barrier's closed-form versus finite-difference error.
const FD_TOL: f64 = 1e-6;

/// What a finished run reports back to `main`.
#[derive(Debug)]
pub struct RunOutcome {
    /// All asserted inequalities held; decides the exit status.
    pub passed: bool,
    /// Contents of `summary.txt`, also printed to stdout.
    pub summary: String,
    pub out_dir: PathBuf,
}

/// Result of `netheat validate`.
#[derive(Debug)]
pub struct ValidateOutcome {
    pub ok: bool,
    pub report: String,
}

enum Row {
    Metric {
        name: String,
        value: String,
    },
    Assertion {
        name: String,
        value: f64,
        relation: &'static str,
        threshold: f64,
        pass: bool,
    },
}

/// Accumulates the summary: free-form metrics first, then the asserted
/// inequalities that decide the exit status.
struct Report {
    kind: ExperimentKind,
    rows: Vec<Row>,
}

impl Report {
    fn new(kind: ExperimentKind) -> Self {
        Report {
            kind,
            rows: Vec::new(),
        }
    }

    fn metric(&mut self, name: &str, value: impl Into<String>) {
        self.rows.push(Row::Metric {
            name: name.to_string(),
            value: value.into(),
        });
    }

    fn metric_f64(&mut self, name: &str, value: f64) {
        self.metric(name, fmt_g17(value));
    }

    fn assert_le(&mut self, name: &str, value: f64, threshold: f64) {
        self.rows.push(Row::Assertion {
            name: name.to_string(),
            value,
            relation: "<=",
            threshold,
            pass: value <= threshold,
        });
    }

    fn assert_ge(&mut self, name: &str, value: f64, threshold: f64) {
        self.rows.push(Row::Assertion {
            name: name.to_string(),
            value,
            relation: ">=",
            threshold,
            pass: value >= threshold,
        });
    }

    fn assert_true(&mut self, name: &str, ok: bool) {
        self.rows.push(Row::Assertion {
            name: name.to_string(),
            value: if ok { 1.0 } else { 0.0 },
            relation: ">=",
            threshold: 1.0,
            pass: ok,
        });
    }

    fn passed(&self) -> bool {
        self.rows.iter().all(|row| match row {
            Row::Metric { .. } => true,
            Row::Assertion { pass, .. } => *pass,
        })
    }

    fn render_text(&self) -> String {
        let mut out = format!("kind {}\n", self.kind.label());
        for row in &self.rows {
            match row {
                Row::Metric { name, value } => out.push_str(&format!("{name} {value}\n")),
                Row::Assertion {
                    name,
                    value,
                    relation,
                    threshold,
                    pass,
                } => out.push_str(&format!(
                    "assert {name} {} {relation} {} {}\n",
                    fmt_g17(*value),
                    fmt_g17(*threshold),
                    if *pass { "pass" } else { "fail" }
                )),
            }
        }
        out.push_str(&format!(
            "result {}\n",
            if self.passed() { "pass" } else { "fail" }
        ));
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::from("name,value,relation,threshold,verdict\n");
        for row in &self.rows {
            match row {
                Row::Metric { name, value } => out.push_str(&format!("{name},{value},,,\n")),
                Row::Assertion {
                    name,
                    value,
                    relation,
                    threshold,
                    pass,
                } => out.push_str(&format!(
                    "{name},{},{relation},{},{}\n",
                    fmt_g17(*value),
                    fmt_g17(*threshold),
                    if *pass { "pass" } else { "fail" }
                )),
            }
        }
        out
    }
}

/// The graph a run lives on, with the rooted metrics and tree table when
/// the source provides them.
struct Domain {
    graph: Arc<MetricGraph>,
    metrics: Option<RootedMetrics>,
    tree: Option<RegularTreeSpec>,
}

/// Paths in a config resolve relative to the config file.
fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

fn read_file(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {what} '{}': {e}", path.display())))
}

fn load_domain(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<Domain> {
    match &cfg.source {
        GraphSource::Tree(spec) => domain_from_spec(spec.clone()),
        GraphSource::Inline(edges) => {
            let mut b = GraphBuilder::new();
            for e in edges {
                b.edge(&e.name, &e.tail, &e.head, e.length);
            }
            finish_graph(b.build(), cfg.root.as_deref())
        }
        GraphSource::File(path) => {
            let path = resolve(base, path);
            let text = read_file(&path, "graph file")?;
            let header = crate::textio::content_lines(&text).next();
            if header.map(|(_, line)| line) == Some(TREE_HEADER) {
                domain_from_spec(parse_tree(&text)?)
            } else {
                let (graph, file_root) = parse_graph(&text)?;
                let root = cfg.root.clone().or(file_root);
                finish_graph(graph, root.as_deref())
            }
        }
    }
}

fn domain_from_spec(spec: RegularTreeSpec) -> Result<Domain> {
    let (graph, metrics) = build_regular_tree(&spec)?;
    Ok(Domain {
        graph: Arc::new(graph),
        metrics: Some(metrics),
        tree: Some(spec),
    })
}

fn finish_graph(graph: MetricGraph, root: Option<&str>) -> Result<Domain> {
    let violations = graph.validate();
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::invalid(format!(
            "the graph is not well formed: {}",
            list.join("; ")
        )));
    }
    match root {
        Some(name) => {
            let v = graph
                .vertex(name)
                .ok_or_else(|| Error::invalid(format!("root '{name}' is not a vertex")))?;
            let (oriented, metrics) = graph.orient_by_root(v)?;
            Ok(Domain {
                graph: Arc::new(oriented),
                metrics: Some(metrics),
                tree: None,
            })
        }
        None => Ok(Domain {
            graph: Arc::new(graph),
            metrics: None,
            tree: None,
        }),
    }
}

fn build_grid(cfg: &ExperimentConfig, domain: &Domain) -> Result<Arc<GraphGrid>> {
    let h = need(cfg.h, cfg.kind, "h")?;
    let mut pinned: BTreeSet<VertexId> = BTreeSet::new();
    if cfg.bc == BoundaryKind::Dirichlet {
        pinned.extend(domain.graph.boundary());
    }
    if cfg.pin_leaves {
        pinned.extend(domain.graph.truncation_vertices().iter().copied());
    }
    GraphGrid::build(domain.graph.clone(), h, &pinned)
}

fn need<T: Copy>(value: Option<T>, kind: ExperimentKind, name: &str) -> Result<T> {
    value.ok_or_else(|| {
        Error::invalid(format!(
            "experiment kind '{}' requires '{name}'",
            kind.label()
        ))
    })
}

fn need_ref<'a, T>(value: &'a Option<T>, kind: ExperimentKind, name: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| {
        Error::invalid(format!(
            "experiment kind '{}' requires '{name}'",
            kind.label()
        ))
    })
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn realize_field(
    data: &InitialData,
    slot: &str,
    grid: &Arc<GraphGrid>,
    metrics: Option<&RootedMetrics>,
    rng: &mut ChaCha8Rng,
    base: Option<&Path>,
) -> Result<GraphField> {
    match data {
        InitialData::Expression(expr) => {
            if expr.uses_rho() {
                let m = metrics.ok_or_else(|| {
                    Error::invalid(format!(
                        "'{slot}' uses rho; set 'root' (or use a tree source) so distances exist"
                    ))
                })?;
                Ok(GraphField::from_radial(grid.clone(), m, |rho| {
                    expr.eval(rho)
                }))
            } else {
                Ok(GraphField::constant(grid.clone(), expr.eval(0.0)))
            }
        }
        InitialData::Random { lo, hi } => GraphField::new(
            grid.clone(),
            DVector::from_fn(grid.num_dofs(), |_, _| uniform(rng, *lo, *hi)),
        ),
        InitialData::File(path) => {
            let path = resolve(base, path);
            let values = parse_field(&read_file(&path, "field file")?)?;
            GraphField::new(grid.clone(), DVector::from_vec(values))
        }
        InitialData::EdgeSamples(rows) => {
            let mut u = GraphField::zeros(grid.clone());
            for (name, samples) in rows {
                let e = grid
                    .graph()
                    .edge_ids()
                    .find(|&e| grid.graph().edge(e).name == *name)
                    .ok_or_else(|| {
                        Error::invalid(format!("'{slot}': edge '{name}' is not in the graph"))
                    })?;
                let nodes = grid.cells(e) + 1;
                if samples.len() != nodes {
                    return Err(Error::invalid(format!(
                        "'{slot}': edge '{name}' has {nodes} mesh nodes, got {} samples",
                        samples.len()
                    )));
                }
                for (k, &v) in samples.iter().enumerate() {
                    match grid.node_dof(e, k) {
                        Some(dof) => u.values[dof] = v,
                        None if v == 0.0 => {}
                        None => {
                            return Err(Error::invalid(format!(
                                "'{slot}': edge '{name}' sample {k} sits on a pinned vertex and must be 0"
                            )))
                        }
                    }
                }
            }
            Ok(u)
        }
    }
}

fn realize_reduced(
    data: &InitialData,
    slot: &str,
    grid: &Arc<ReducedGrid>,
    rng: &mut ChaCha8Rng,
    base: Option<&Path>,
) -> Result<ReducedField> {
    match data {
        InitialData::Expression(expr) => {
            Ok(ReducedField::from_fn(grid.clone(), |rho| expr.eval(rho)))
        }
        InitialData::Random { lo, hi } => ReducedField::new(
            grid.clone(),
            DVector::from_fn(grid.num_dofs(), |_, _| uniform(rng, *lo, *hi)),
        ),
        InitialData::File(path) => {
            let path = resolve(base, path);
            let values = parse_field(&read_file(&path, "field file")?)?;
            ReducedField::new(grid.clone(), DVector::from_vec(values))
        }
        InitialData::EdgeSamples(_) => Err(Error::invalid(format!(
            "'{slot}': per-edge samples do not apply to a reduced profile; \
             use an expression, random data, or a field file"
        ))),
    }
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,dof,value\n");
    for k in 0..traj.len() {
        let t = fmt_g17(traj.time(k));
        for (dof, &v) in traj.values(k).iter().enumerate() {
            out.push_str(&format!("{t},{dof},{}\n", fmt_g17(v)));
        }
    }
    out
}

fn norms_csv(traj: &Trajectory, ops: &OperatorPair) -> String {
    let mut out = String::from("t,min,max,l2,mass\n");
    for k in 0..traj.len() {
        let u = traj.values(k);
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_g17(traj.time(k)),
            fmt_g17(lo),
            fmt_g17(hi),
            fmt_g17(ops.l2_norm(u)),
            fmt_g17(ops.total_mass(u))
        ));
    }
    out
}

/// Rows at the sample times the two runs share; the runs may record
/// different strides, so times are merged two-pointer style.
fn pair_csv(lower: &Trajectory, upper: &Trajectory) -> String {
    let mut out = String::from("t,min_u1,max_u1,min_u2,max_u2,gap\n");
    let (mut i, mut j) = (0, 0);
    while i < lower.len() && j < upper.len() {
        let (ti, tj) = (lower.time(i), upper.time(j));
        if (ti - tj).abs() > 1e-12 * (1.0 + ti.abs()) {
            if ti < tj {
                i += 1;
            } else {
                j += 1;
            }
            continue;
        }
        let u1 = lower.values(i);
        let u2 = upper.values(j);
        let gap = u1
            .iter()
            .zip(u2.iter())
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min);
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_g17(ti),
            fmt_g17(u1.iter().copied().fold(f64::INFINITY, f64::min)),
            fmt_g17(u1.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            fmt_g17(u2.iter().copied().fold(f64::INFINITY, f64::min)),
            fmt_g17(u2.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            fmt_g17(gap)
        ));
        i += 1;
        j += 1;
    }
    out
}

fn h_max(grid: &GraphGrid) -> f64 {
    grid.graph()
        .edge_ids()
        .map(|e| grid.width(e))
        .fold(0.0, f64::max)
}

/// Everything the per-kind drivers share.
struct Workspace<'a> {
    cfg: &'a ExperimentConfig,
    dir: &'a Path,
    base: Option<&'a Path>,
}

impl Workspace<'_> {
    fn write(&self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed)
    }

    fn f(&self) -> Result<&Nonlinearity> {
        need_ref(&self.cfg.f, self.cfg.kind, "f")
    }

    fn run_flow(
        &self,
        u0: &GraphField,
        t_final: f64,
        dt: f64,
        f: &Nonlinearity,
        ops: &OperatorPair,
    ) -> Result<Trajectory> {
        let opts = EvolveOptions {
            scheme: self.cfg.scheme,
            ..EvolveOptions::default()
        };
        evolve_with(u0, t_final, dt, f, ops, &opts)
    }

    /// Realizes the ordered pair, lower first so random draws are stable,
    /// and refuses pairs that are not ordered to begin with.
    fn ordered_pair(
        &self,
        grid: &Arc<GraphGrid>,
        metrics: Option<&RootedMetrics>,
    ) -> Result<(GraphField, GraphField)> {
        let mut rng = self.rng();
        let kind = self.cfg.kind;
        let lower = realize_field(
            need_ref(&self.cfg.u0_lower, kind, "u0_lower")?,
            "u0_lower",
            grid,
            metrics,
            &mut rng,
            self.base,
        )?;
        let upper = realize_field(
            need_ref(&self.cfg.u0_upper, kind, "u0_upper")?,
            "u0_upper",
            grid,
            metrics,
            &mut rng,
            self.base,
        )?;
        let gap = upper
            .values
            .iter()
            .zip(lower.values.iter())
            .map(|(hi, lo)| hi - lo)
            .fold(f64::INFINITY, f64::min);
        if gap < 0.0 {
            return Err(Error::OrderPrecondition(format!(
                "initial data are not ordered: min(u0_upper - u0_lower) = {gap}"
            )));
        }
        Ok((lower, upper))
    }
}

/// Runs the config at `config_path` and writes its artifacts. The output
/// directory is `NETHEAT_OUT` when set, else the config's `out`, else the
/// config path with extension `out`.
pub fn run(config_path: &Path) -> Result<RunOutcome> {
    let text = read_file(config_path, "config")?;
    let cfg = parse_config(&text)?;
    let out_dir = match std::env::var("NETHEAT_OUT") {
        Ok(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => cfg
            .out
            .clone()
            .unwrap_or_else(|| config_path.with_extension("out")),
    };
    fs::create_dir_all(&out_dir)?;
    let ws = Workspace {
        cfg: &cfg,
        dir: &out_dir,
        base: config_path.parent(),
    };
    let report = match cfg.kind {
        ExperimentKind::Evolve => run_evolve(&ws)?,
        ExperimentKind::Compare => run_compare(&ws)?,
        ExperimentKind::Monotone => run_monotone(&ws)?,
        ExperimentKind::Stationary => run_stationary(&ws)?,
        ExperimentKind::Dual => run_dual(&ws)?,
        ExperimentKind::Barrier => run_barrier(&ws)?,
        ExperimentKind::TreeReduce => run_tree_reduce(&ws)?,
        ExperimentKind::CheckH2 => run_check_h2(&ws)?,
        ExperimentKind::CheckOrder => run_check_order(&ws)?,
    };
    let summary = report.render_text();
    ws.write("summary.txt", &summary)?;
    ws.write("summary.csv", &report.render_csv())?;
    Ok(RunOutcome {
        passed: report.passed(),
        summary,
        out_dir,
    })
}

fn run_evolve(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let grid = build_grid(cfg, &domain)?;
    let ops = assemble(&grid, cfg.mass);
    let f = ws.f()?;
    let mut rng = ws.rng();
    let u0 = realize_field(
        need_ref(&cfg.u0, cfg.kind, "u0")?,
        "u0",
        &grid,
        domain.metrics.as_ref(),
        &mut rng,
        ws.base,
    )?;
    let t_final = need(cfg.t_final, cfg.kind, "T")?;
    let dt = need(cfg.dt, cfg.kind, "dt")?;
    let traj = ws.run_flow(&u0, t_final, dt, f, &ops)?;
    ws.write("trajectory.csv", &trajectory_csv(&traj))?;
    ws.write("norms.csv", &norms_csv(&traj, &ops))?;

    let mut report = Report::new(cfg.kind);
    report.metric("scheme", cfg.scheme.label());
    report.metric("dofs", grid.num_dofs().to_string());
    report.metric("samples", traj.len().to_string());
    report.metric_f64("final-time", traj.last_time());
    let last = traj.last_values();
    report.metric_f64("final-min", last.iter().copied().fold(f64::INFINITY, f64::min));
    report.metric_f64(
        "final-max",
        last.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    report.metric_f64("final-l2", ops.l2_norm(last));
    report.metric_f64("final-mass", ops.total_mass(last));

    // A reaction-free Neumann flow conserves mass exactly; assert it
    // whenever the config is in that regime.
    let conservative =
        matches!(f, Nonlinearity::Zero) && cfg.bc == BoundaryKind::Neumann && !cfg.pin_leaves;
    if conservative {
        let m0 = ops.total_mass(traj.values(0));
        let drift = (0..traj.len())
            .map(|k| (ops.total_mass(traj.values(k)) - m0).abs())
            .fold(0.0, f64::max);
        let rel = if m0 == 0.0 { drift } else { drift / m0.abs() };
        report.assert_le("mass-drift", rel, cfg.tol.unwrap_or(MASS_TOL));
    }
    Ok(report)
}

fn run_compare(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let grid = build_grid(cfg, &domain)?;
    let ops = assemble(&grid, cfg.mass);
    let f = ws.f()?;
    let (lower, upper) = ws.ordered_pair(&grid, domain.metrics.as_ref())?;
    let t_final = need(cfg.t_final, cfg.kind, "T")?;
    let dt = need(cfg.dt, cfg.kind, "dt")?;
    let lo = ws.run_flow(&lower, t_final, dt, f, &ops)?;
    let up = ws.run_flow(&upper, t_final, dt, f, &ops)?;
    let gap = compare(&lo, &up)?;
    ws.write("pair.csv", &pair_csv(&lo, &up))?;

    let h = h_max(&grid);
    let tol = cfg.tol.unwrap_or(10.0 * (h * h + dt));
    let mut report = Report::new(cfg.kind);
    report.metric("scheme", cfg.scheme.label());
    report.metric("dofs", grid.num_dofs().to_string());
    report.metric("samples", lo.len().to_string());
    report.metric_f64("final-time", lo.last_time());
    report.assert_ge("order-gap", gap, -tol);
    Ok(report)
}

fn run_monotone(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let grid = build_grid(cfg, &domain)?;
    let f = ws.f()?;
    let (q_lower, q_upper) = ws.ordered_pair(&grid, domain.metrics.as_ref())?;
    let t_max = need(cfg.t_final, cfg.kind, "T")?;
    let dt = need(cfg.dt, cfg.kind, "dt")?;
    let outcome = monotone_iterate(&q_lower, &q_upper, f, cfg.bc, dt, cfg.eps_stat, t_max)?;
    ws.write("pair.csv", &pair_csv(&outcome.lower_traj, &outcome.upper_traj))?;
    ws.write(
        "lower_limit.field",
        &write_field(outcome.lower_limit.values.as_slice()),
    )?;
    ws.write(
        "upper_limit.field",
        &write_field(outcome.upper_limit.values.as_slice()),
    )?;

    // The monotone limits solve the same discrete stationary system Newton
    // does, so the two must agree wherever both converge.
    let ops = assemble(&grid, MassMode::Lumped);
    let newton_lower =
        solve_stationary(&outcome.lower_limit, f, &ops, cfg.newton_tol, cfg.max_iters)?;
    let newton_upper =
        solve_stationary(&outcome.upper_limit, f, &ops, cfg.newton_tol, cfg.max_iters)?;
    let agree_lower = (&newton_lower.values - &outcome.lower_limit.values).amax();
    let agree_upper = (&newton_upper.values - &outcome.upper_limit.values).amax();
    let sandwich = outcome
        .upper_limit
        .values
        .iter()
        .zip(outcome.lower_limit.values.iter())
        .map(|(hi, lo)| hi - lo)
        .fold(f64::INFINITY, f64::min);

    let mut report = Report::new(cfg.kind);
    report.metric("dofs", grid.num_dofs().to_string());
    report.metric_f64("lower-final-time", outcome.lower_traj.last_time());
    report.metric_f64("upper-final-time", outcome.upper_traj.last_time());
    report.metric_f64("lower-limit-max", outcome.lower_limit.max_value());
    report.metric_f64("upper-limit-max", outcome.upper_limit.max_value());
    report.assert_true("lower-converged", outcome.lower_converged);
    report.assert_true("upper-converged", outcome.upper_converged);
    report.assert_ge("sandwich", sandwich, -cfg.tol.unwrap_or(SANDWICH_TOL));
    report.assert_le("newton-agreement-lower", agree_lower, NEWTON_AGREEMENT_TOL);
    report.assert_le("newton-agreement-upper", agree_upper, NEWTON_AGREEMENT_TOL);
    Ok(report)
}

fn run_stationary(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let grid = build_grid(cfg, &domain)?;
    let ops = assemble(&grid, cfg.mass);
    let f = ws.f()?;
    let mut rng = ws.rng();
    let u0 = realize_field(
        need_ref(&cfg.u0, cfg.kind, "u0")?,
        "u0",
        &grid,
        domain.metrics.as_ref(),
        &mut rng,
        ws.base,
    )?;
    let q = solve_stationary(&u0, f, &ops, cfg.newton_tol, cfg.max_iters)?;
    ws.write("solution.field", &write_field(q.values.as_slice()))?;

    let residual =
        (ops.stiffness.matvec(&q.values) - ops.mass.matvec(&f.eval_vector(&q.values))).amax();
    let tol = cfg
        .tol
        .unwrap_or_else(|| default_order_tol(&grid, 0.0, f, &[&q]));
    // A genuine stationary solution satisfies the order conditions from
    // both sides at once.
    let sub = check_order_conditions(
        Candidate::Stationary(&q),
        OrderKind::Sub,
        true,
        f,
        cfg.bc,
        None,
        tol,
    )?;
    let sup = check_order_conditions(
        Candidate::Stationary(&q),
        OrderKind::Super,
        true,
        f,
        cfg.bc,
        None,
        tol,
    )?;

    let mut report = Report::new(cfg.kind);
    report.metric("dofs", grid.num_dofs().to_string());
    report.metric_f64("solution-min", q.min_value());
    report.metric_f64("solution-max", q.max_value());
    report.metric_f64("algebraic-residual", residual);
    report.assert_le("sub-conditions", sub.worst(), tol);
    report.assert_le("super-conditions", sup.worst(), tol);
    Ok(report)
}

fn run_dual(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let grid = build_grid(cfg, &domain)?;
    let ops = assemble(&grid, cfg.mass);
    let f = ws.f()?;
    let (lower, upper) = ws.ordered_pair(&grid, domain.metrics.as_ref())?;
    let t_final = need(cfg.t_final, cfg.kind, "T")?;
    let dt = need(cfg.dt, cfg.kind, "dt")?;
    let lo = ws.run_flow(&lower, t_final, dt, f, &ops)?;
    let up = ws.run_flow(&upper, t_final, dt, f, &ops)?;
    let tau = cfg.tau.unwrap_or(t_final);
    let kl = lo
        .index_at_time(tau)
        .ok_or_else(|| Error::invalid(format!("tau = {tau} is not a sample time of the runs")))?;
    let w_tau = lo.values(kl) - up.values(kl);

    let ones = GraphField::constant(grid.clone(), 1.0);
    let indicator = GraphField::new(
        grid.clone(),
        DVector::from_fn(grid.num_dofs(), |i, _| if w_tau[i] > 0.0 { 1.0 } else { 0.0 }),
    )?;
    let tol = cfg.tol.unwrap_or(DUAL_TOL);
    let mut report = Report::new(cfg.kind);
    report.metric("dofs", grid.num_dofs().to_string());
    report.metric_f64("tau", tau);

    let mut gaps_csv = String::from("zeta,gap,l1\n");
    for (name, zeta) in [("constant", &ones), ("indicator", &indicator)] {
        let gap = duality_gap(&lo, &up, zeta, tau, f, &ops)?;
        let l1 = ops.l1_norm(&zeta.values);
        gaps_csv.push_str(&format!("{name},{},{}\n", fmt_g17(gap), fmt_g17(l1)));
        report.metric_f64(&format!("gap-{name}"), gap);
        report.assert_le(&format!("pairing-{name}"), gap, tol * l1);
    }
    ws.write("gaps.csv", &gaps_csv)?;

    // Transport the constant test data backward with the pair's Lipschitz
    // rate and check the maximum-principle envelope 0 <= phi <= e^{lambda (t - tau)}.
    let lambda = DualCoefficient::from_pair(&lo, &up, f)?.bound();
    let phi = solve_backward_dual(&ones, tau, dt, &DualCoefficient::Lambda(lambda), &ops)?;
    let mut floor = f64::INFINITY;
    let mut envelope = f64::NEG_INFINITY;
    for k in 0..phi.len() {
        let cap = (lambda * (phi.time(k) - tau)).exp();
        for &x in phi.values(k).iter() {
            floor = floor.min(x);
            envelope = envelope.max(x - cap);
        }
    }
    report.metric_f64("lambda", lambda);
    report.assert_ge("dual-floor", floor, -tol);
    report.assert_le("dual-envelope", envelope, tol);
    Ok(report)
}

fn run_barrier(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let spec = domain
        .tree
        .as_ref()
        .ok_or_else(|| Error::invalid("the barrier experiment needs a regular tree source"))?;
    let metrics = domain.metrics.as_ref().expect("tree sources carry metrics");
    let radii = &spec.radii[1..=spec.depth];
    let c0 = need(cfg.c0, cfg.kind, "c0")?;
    let exhaustion = Exhaustion::build(&domain.graph, metrics, radii, c0)?;
    let base_level = need(cfg.base_level, cfg.kind, "base_level")?;
    if base_level >= exhaustion.num_levels() {
        return Err(Error::invalid(format!(
            "base_level {base_level} is out of range; the exhaustion has {} levels",
            exhaustion.num_levels()
        )));
    }
    let params = BarrierParams::new(
        need(cfg.beta_exp, cfg.kind, "beta_exp")?,
        need(cfg.barrier_k, cfg.kind, "k")?,
        need(cfg.theta, cfg.kind, "theta")?,
        c0,
        exhaustion.radius(base_level),
        need(cfg.tau, cfg.kind, "tau")?,
    )?;
    let n = cfg.samples.max(2);
    let r_max = *radii.last().expect("depth >= 1 leaves a radius");
    let r_samples: Vec<f64> = (0..n)
        .map(|i| r_max * i as f64 / (n - 1) as f64)
        .collect();
    let t_samples: Vec<f64> = (1..=n).map(|j| params.tau() * j as f64 / n as f64).collect();
    let setting = ExhaustedGraph {
        graph: &domain.graph,
        metrics,
        exhaustion: &exhaustion,
        base_level,
        growth_constant: cfg.growth_c.unwrap_or(1.0),
    };
    let rep = barrier_check(&params, &r_samples, &t_samples, &setting)?;

    let mut csv = String::from(
        "level,inner_radius,outer_radius,weighted_sum,growth_bound,within_bound\n",
    );
    for level in &rep.levels {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            level.level,
            fmt_g17(level.inner_radius),
            fmt_g17(level.outer_radius),
            fmt_g17(level.weighted_sum),
            fmt_g17(level.growth_bound),
            level.within_bound
        ));
    }
    ws.write("levels.csv", &csv)?;

    let mut report = Report::new(cfg.kind);
    report.metric_f64("r0", params.r0());
    report.metric_f64("sigma", params.sigma());
    report.metric_f64("t0", params.t0());
    report.metric(
        "level-ratio",
        rep.max_level_ratio
            .map_or("none".to_string(), fmt_g17),
    );
    report.assert_le("heat-residual", rep.max_heat_residual, 0.0);
    report.assert_le("fd-mismatch", rep.max_fd_mismatch, cfg.tol.unwrap_or(FD_TOL));
    report.assert_true("flux-signs", rep.fluxes_ok());
    report.assert_true("sums-vanishing", rep.sums_vanishing());
    Ok(report)
}

fn run_tree_reduce(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let spec = domain
        .tree
        .as_ref()
        .ok_or_else(|| Error::invalid("the tree-reduce experiment needs a regular tree source"))?;
    let h = need(cfg.h, cfg.kind, "h")?;
    let rg = ReducedGrid::from_tree_spec(spec, h, cfg.bc, cfg.pin_leaves)?;
    let f = ws.f()?;
    let mut rng = ws.rng();
    let z0 = realize_reduced(
        need_ref(&cfg.u0, cfg.kind, "u0")?,
        "u0",
        &rg,
        &mut rng,
        ws.base,
    )?;
    let t_final = need(cfg.t_final, cfg.kind, "T")?;
    let dt = need(cfg.dt, cfg.kind, "dt")?;
    let run = evolve_reduced_and_compare(spec, f, &z0, t_final, dt)?;
    ws.write("reduced.csv", &run.reduced.last_field().render_csv())?;

    let mut report = Report::new(cfg.kind);
    report.metric("full-dofs", run.full.grid().num_dofs().to_string());
    report.metric("reduced-dofs", rg.num_dofs().to_string());
    report.metric("samples", run.reduced.len().to_string());
    report.metric_f64("final-time", run.reduced.last_time());
    report.assert_le(
        "reduction-deviation",
        run.max_deviation,
        cfg.tol.unwrap_or(REDUCTION_TOL),
    );
    Ok(report)
}

fn run_check_h2(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let metrics = domain.metrics.as_ref().ok_or_else(|| {
        Error::invalid("the check-h2 experiment needs a rooted graph; set 'root' or use a tree source")
    })?;
    let radii: Vec<f64> = match (&domain.tree, &cfg.radii) {
        (_, Some(radii)) => radii.clone(),
        (Some(spec), None) => spec.radii[1..=spec.depth].to_vec(),
        (None, None) => {
            return Err(Error::invalid(
                "the check-h2 experiment needs 'radii' unless the source is a tree",
            ))
        }
    };
    let c0 = cfg.c0.unwrap_or_else(|| {
        let mut worst = 1.0f64;
        let mut prev = 0.0;
        for &r in &radii {
            let gap = r - prev;
            worst = worst.max(gap).max(1.0 / gap);
            prev = r;
        }
        worst
    });
    let exhaustion = Exhaustion::build(&domain.graph, metrics, &radii, c0)?;
    let rep = check_h2(
        &domain.graph,
        &exhaustion,
        need(cfg.growth_c, cfg.kind, "growth_c")?,
        need(cfg.theta, cfg.kind, "theta")?,
        need(cfg.beta_exp, cfg.kind, "beta_exp")?,
    );

    let mut csv = String::from("level,radius,inbound_sum,bound,ok\n");
    for level in &rep.levels {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            level.level,
            fmt_g17(level.radius),
            level.inbound_sum,
            fmt_g17(level.bound),
            level.ok
        ));
    }
    ws.write("levels.csv", &csv)?;

    let mut report = Report::new(cfg.kind);
    report.metric("levels", rep.levels.len().to_string());
    report.metric(
        "fitted-theta",
        rep.fitted_theta.map_or("none".to_string(), fmt_g17),
    );
    report.assert_true("degree-balance", rep.part_i_ok);
    report.assert_true("sphere-growth", rep.part_ii_ok);
    Ok(report)
}

fn run_check_order(ws: &Workspace) -> Result<Report> {
    let cfg = ws.cfg;
    let domain = load_domain(cfg, ws.base)?;
    let grid = build_grid(cfg, &domain)?;
    let f = ws.f()?;
    let mut rng = ws.rng();
    let u0 = realize_field(
        need_ref(&cfg.u0, cfg.kind, "u0")?,
        "u0",
        &grid,
        domain.metrics.as_ref(),
        &mut rng,
        ws.base,
    )?;
    let kind = need(cfg.order, cfg.kind, "order")?;
    let stationary = need(cfg.stationary_candidate, cfg.kind, "stationary")?;

    let mut report = Report::new(cfg.kind);
    let report_inner = if stationary {
        let tol = cfg
            .tol
            .unwrap_or_else(|| default_order_tol(&grid, 0.0, f, &[&u0]));
        check_order_conditions(Candidate::Stationary(&u0), kind, true, f, cfg.bc, None, tol)?
    } else {
        let t_final = need(cfg.t_final, cfg.kind, "T")?;
        let dt = need(cfg.dt, cfg.kind, "dt")?;
        let ops = assemble(&grid, cfg.mass);
        let traj = ws.run_flow(&u0, t_final, dt, f, &ops)?;
        let tol = cfg
            .tol
            .unwrap_or_else(|| default_order_tol(&grid, dt, f, &[&u0]));
        check_order_conditions(
            Candidate::Evolving(&traj),
            kind,
            false,
            f,
            cfg.bc,
            Some(&u0),
            tol,
        )?
    };
    ws.write("report.txt", &report_inner.render_text())?;
    ws.write("report.csv", &report_inner.render_csv())?;

    report.metric("order", kind.label());
    report.metric("stationary", stationary.to_string());
    report.metric_f64("tol", report_inner.tol);
    if !report_inner.notes.is_empty() {
        report.metric("notes", report_inner.notes.join("; "));
    }
    let tol = report_inner.tol;
    report.assert_le("interior", report_inner.interior.worst, tol);
    report.assert_le("initial", report_inner.initial.worst, tol);
    report.assert_le("vertex-flux", report_inner.flux.worst, tol);
    report.assert_le("boundary", report_inner.boundary.worst, tol);
    Ok(report)
}

/// Parses a graph or tree interchange file and reports its shape; the
/// outcome is `ok` only if the structural checks pass.
pub fn validate(path: &Path) -> Result<ValidateOutcome> {
    let text = read_file(path, "graph file")?;
    let header = crate::textio::content_lines(&text).next().map(|(_, l)| l);
    if header == Some(TREE_HEADER) {
        let spec = parse_tree(&text)?;
        let (graph, _) = build_regular_tree(&spec)?;
        let report = format!(
            "tree v1\ngenerations {}\nvertices {}\nedges {}\ntruncation {}\nok\n",
            spec.depth,
            graph.num_vertices(),
            graph.num_edges(),
            graph.truncation_vertices().len()
        );
        return Ok(ValidateOutcome { ok: true, report });
    }
    let (graph, root) = parse_graph(&text)?;
    let mut lines = vec![
        "graph v1".to_string(),
        format!("vertices {}", graph.num_vertices()),
        format!("edges {}", graph.num_edges()),
        format!("boundary {}", graph.boundary().len()),
    ];
    let mut ok = true;
    if let Some(name) = &root {
        lines.push(format!("root {name}"));
        if graph.vertex(name).is_none() {
            lines.push(format!("violation: root '{name}' is not a vertex"));
            ok = false;
        }
    }
    for violation in graph.validate() {
        lines.push(format!("violation: {violation}"));
        ok = false;
    }
    lines.push(if ok { "ok".to_string() } else { "invalid".to_string() });
    Ok(ValidateOutcome {
        ok,
        report: lines.join("\n") + "\n",
    })
}
