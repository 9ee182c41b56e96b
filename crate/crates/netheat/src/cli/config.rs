//! Flat `key = value` experiment configs, one experiment per file.
//!
//! `#` starts a comment and blank lines are skipped. Most keys are scalar
//! and may appear once; `edge` and the `*_edge` initial-data keys repeat.
//! Each experiment kind declares its required fields, and a missing field
//! fails at parse time with the field name, before any computation runs.

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::cli::expr::{parse_expr, Expr};
use crate::dynamics::Scheme;
use crate::error::{Error, Result};
use crate::fem::MassMode;
use crate::graph::RegularTreeSpec;
use crate::nonlinearity::Nonlinearity;
use crate::order::{BoundaryKind, OrderKind};

/// What the run computes. Decides which fields are required and which
/// artifacts appear in the output directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// One initial state forward in time; trajectory and norm CSVs.
    Evolve,
    /// An ordered pair forward in time; asserts the order is preserved.
    Compare,
    /// Monotone flow from a stationary sub/supersolution pair to the
    /// extremal stationary limits, cross-checked against Newton.
    Monotone,
    /// Newton solve of the stationary problem, checked both ways against
    /// the order conditions.
    Stationary,
    /// Duality pairings of an ordered pair against constant and indicator
    /// test data, plus the backward-dual transport identity.
    Dual,
    /// Closed-form barrier sampling and flux probes on an exhausted tree.
    Barrier,
    /// Radial reduction of a regular tree run against the full graph run.
    TreeReduce,
    /// Degree-growth admissibility of an exhausted graph.
    CheckH2,
    /// Sub/supersolution conditions of a claimed candidate.
    CheckOrder,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Monotone => "monotone",
            ExperimentKind::Stationary => "stationary",
            ExperimentKind::Dual => "dual",
            ExperimentKind::Barrier => "barrier",
            ExperimentKind::TreeReduce => "tree-reduce",
            ExperimentKind::CheckH2 => "check-h2",
            ExperimentKind::CheckOrder => "check-order",
        }
    }

    fn from_token(token: &str) -> Option<ExperimentKind> {
        Some(match token {
            "evolve" => ExperimentKind::Evolve,
            "compare" => ExperimentKind::Compare,
            "monotone" => ExperimentKind::Monotone,
            "stationary" => ExperimentKind::Stationary,
            "dual" => ExperimentKind::Dual,
            "barrier" => ExperimentKind::Barrier,
            "tree-reduce" => ExperimentKind::TreeReduce,
            "check-h2" => ExperimentKind::CheckH2,
            "check-order" => ExperimentKind::CheckOrder,
            _ => return None,
        })
    }
}

/// Where the graph comes from: `edge` lines, an inline homogeneous `tree`,
/// or a `graph_file` holding either interchange format.
#[derive(Debug, Clone)]
pub enum GraphSource {
    File(PathBuf),
    Inline(Vec<InlineEdge>),
    Tree(RegularTreeSpec),
}

#[derive(Debug, Clone)]
pub struct InlineEdge {
    pub name: String,
    pub tail: String,
    pub head: String,
    pub length: f64,
}

/// One initial-data slot. `u0 = <expr>` parses as an expression over rho,
/// `u0 = random <lo> <hi>` draws i.i.d. uniform node values from the run's
/// seed, `u0_file` reads a field dump, and repeated `u0_edge` lines give
/// node samples edge by edge (later lines win at shared endpoints).
#[derive(Debug, Clone)]
pub enum InitialData {
    Expression(Expr),
    Random { lo: f64, hi: f64 },
    File(PathBuf),
    EdgeSamples(Vec<(String, Vec<f64>)>),
}

/// Everything a run needs, validated against its experiment kind.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub source: GraphSource,
    /// Vertex to orient by; radial expressions and exhaustions need one.
    pub root: Option<String>,
    pub bc: BoundaryKind,
    /// Pin truncation stand-ins to zero (and the reduced outer endpoint).
    pub pin_leaves: bool,
    pub f: Option<Nonlinearity>,
    pub u0: Option<InitialData>,
    pub u0_lower: Option<InitialData>,
    pub u0_upper: Option<InitialData>,
    pub h: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub scheme: Scheme,
    pub mass: MassMode,
    /// Overrides the experiment's default acceptance tolerance.
    pub tol: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub order: Option<OrderKind>,
    pub stationary_candidate: Option<bool>,
    pub eps_stat: f64,
    pub newton_tol: f64,
    pub max_iters: usize,
    pub tau: Option<f64>,
    pub beta_exp: Option<f64>,
    pub barrier_k: Option<f64>,
    pub theta: Option<f64>,
    pub c0: Option<f64>,
    pub base_level: Option<usize>,
    pub growth_c: Option<f64>,
    pub samples: usize,
    /// Exhaustion radii for rooted `graph_file`/`edge` sources; tree
    /// sources take theirs from the generation table.
    pub radii: Option<Vec<f64>>,
}

fn at_line(line: usize, err: Error) -> Error {
    let msg = match err {
        Error::InvalidInput(m) => m,
        other => other.to_string(),
    };
    Error::Parse { line, msg }
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    token.parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a number, got '{token}'"),
    })
}

fn parse_usize(token: &str, line: usize) -> Result<usize> {
    token.parse::<usize>().map_err(|_| Error::Parse {
        line,
        msg: format!("expected a non-negative integer, got '{token}'"),
    })
}

fn parse_bool(token: &str, line: usize) -> Result<bool> {
    match token {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Parse {
            line,
            msg: format!("expected 'true' or 'false', got '{token}'"),
        }),
    }
}

fn parse_nonlinearity(value: &str, line: usize) -> Result<Nonlinearity> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let arity = |want: usize| -> Result<()> {
        if tokens.len() == want + 1 {
            Ok(())
        } else {
            Err(Error::Parse {
                line,
                msg: format!("'f = {}' takes {want} parameter(s)", tokens[0]),
            })
        }
    };
    match tokens[0] {
        "zero" => {
            arity(0)?;
            Ok(Nonlinearity::Zero)
        }
        "logistic" => {
            arity(0)?;
            Ok(Nonlinearity::Logistic)
        }
        "linear" => {
            arity(1)?;
            Ok(Nonlinearity::Linear {
                rate: parse_f64(tokens[1], line)?,
            })
        }
        "bistable" => {
            arity(1)?;
            Ok(Nonlinearity::Bistable {
                threshold: parse_f64(tokens[1], line)?,
            })
        }
        "polynomial" => {
            if tokens.len() < 2 {
                return Err(Error::Parse {
                    line,
                    msg: "'f = polynomial' needs at least one coefficient".to_string(),
                });
            }
            let coeffs = tokens[1..]
                .iter()
                .map(|t| parse_f64(t, line))
                .collect::<Result<Vec<f64>>>()?;
            Ok(Nonlinearity::Polynomial { coeffs })
        }
        other => Err(Error::Parse {
            line,
            msg: format!(
                "unknown nonlinearity '{other}'; expected zero, linear, logistic, bistable, or polynomial"
            ),
        }),
    }
}

fn parse_initial(value: &str, line: usize) -> Result<InitialData> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    if tokens.first() == Some(&"random") {
        if tokens.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: "random initial data reads: random <lo> <hi>".to_string(),
            });
        }
        let lo = parse_f64(tokens[1], line)?;
        let hi = parse_f64(tokens[2], line)?;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Parse {
                line,
                msg: format!("random range [{lo}, {hi}] must be finite and ordered"),
            });
        }
        return Ok(InitialData::Random { lo, hi });
    }
    Ok(InitialData::Expression(
        parse_expr(value).map_err(|e| at_line(line, e))?,
    ))
}

/// Slots for the three initial-data spellings of one base key.
fn set_initial(
    slot: &mut Option<InitialData>,
    data: InitialData,
    base: &str,
    line: usize,
) -> Result<()> {
    match (slot.as_mut(), data) {
        (Some(InitialData::EdgeSamples(have)), InitialData::EdgeSamples(more)) => {
            have.extend(more);
            Ok(())
        }
        (Some(_), _) => Err(Error::Parse {
            line,
            msg: format!("initial data for '{base}' is already set"),
        }),
        (None, data) => {
            *slot = Some(data);
            Ok(())
        }
    }
}

/// Parses one experiment config and validates the kind's required fields.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut kind: Option<ExperimentKind> = None;
    let mut edges: Vec<InlineEdge> = Vec::new();
    let mut tree: Option<RegularTreeSpec> = None;
    let mut graph_file: Option<PathBuf> = None;
    let mut source_line = 0usize;
    let mut cfg = ExperimentConfig {
        kind: ExperimentKind::Evolve,
        source: GraphSource::Inline(Vec::new()),
        root: None,
        bc: BoundaryKind::Neumann,
        pin_leaves: false,
        f: None,
        u0: None,
        u0_lower: None,
        u0_upper: None,
        h: None,
        dt: None,
        t_final: None,
        scheme: Scheme::ImexEuler,
        mass: MassMode::Lumped,
        tol: None,
        seed: 0,
        out: None,
        order: None,
        stationary_candidate: None,
        eps_stat: 1e-10,
        newton_tol: 1e-10,
        max_iters: 50,
        tau: None,
        beta_exp: None,
        barrier_k: None,
        theta: None,
        c0: None,
        base_level: None,
        growth_c: None,
        samples: 100,
        radii: None,
    };

    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (line, content) in crate::textio::content_lines(text) {
        let (key, value) = match content.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected 'key = value', got '{content}'"),
                })
            }
        };
        if value.is_empty() {
            return Err(Error::Parse {
                line,
                msg: format!("key '{key}' has no value"),
            });
        }
        let repeatable = matches!(key, "edge" | "u0_edge" | "u0_lower_edge" | "u0_upper_edge");
        if !repeatable && !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate key '{key}'"),
            });
        }
        let taken = |source_line: usize| Error::Parse {
            line,
            msg: format!("graph source is already set at line {source_line}"),
        };
        match key {
            "kind" => {
                kind = Some(ExperimentKind::from_token(value).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!(
                        "unknown kind '{value}'; expected evolve, compare, monotone, stationary, \
                         dual, barrier, tree-reduce, check-h2, or check-order"
                    ),
                })?);
            }
            "edge" => {
                if tree.is_some() || graph_file.is_some() {
                    return Err(taken(source_line));
                }
                if edges.is_empty() {
                    source_line = line;
                }
                let tokens: Vec<&str> = value.split_whitespace().collect();
                if tokens.len() != 4 {
                    return Err(Error::Parse {
                        line,
                        msg: "edge lines read: edge = <id> <tail> <head> <length>".to_string(),
                    });
                }
                edges.push(InlineEdge {
                    name: tokens[0].to_string(),
                    tail: tokens[1].to_string(),
                    head: tokens[2].to_string(),
                    length: parse_f64(tokens[3], line)?,
                });
            }
            "tree" => {
                if !edges.is_empty() || graph_file.is_some() {
                    return Err(taken(source_line));
                }
                source_line = line;
                let tokens: Vec<&str> = value.split_whitespace().collect();
                if tokens.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        msg: "tree lines read: tree = <branching> <edge-length> <depth>"
                            .to_string(),
                    });
                }
                let b = tokens[0].parse::<u64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("expected a positive integer, got '{}'", tokens[0]),
                })?;
                let length = parse_f64(tokens[1], line)?;
                let depth = parse_usize(tokens[2], line)?;
                tree = Some(
                    RegularTreeSpec::homogeneous(b, length, depth).map_err(|e| at_line(line, e))?,
                );
            }
            "graph_file" => {
                if !edges.is_empty() || tree.is_some() {
                    return Err(taken(source_line));
                }
                source_line = line;
                graph_file = Some(PathBuf::from(value));
            }
            "root" => cfg.root = Some(value.to_string()),
            "bc" => {
                cfg.bc = match value {
                    "neumann" => BoundaryKind::Neumann,
                    "dirichlet" => BoundaryKind::Dirichlet,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("unknown bc '{value}'; expected neumann or dirichlet"),
                        })
                    }
                }
            }
            "pin_leaves" => cfg.pin_leaves = parse_bool(value, line)?,
            "f" => cfg.f = Some(parse_nonlinearity(value, line)?),
            "u0" => set_initial(&mut cfg.u0, parse_initial(value, line)?, "u0", line)?,
            "u0_lower" => set_initial(
                &mut cfg.u0_lower,
                parse_initial(value, line)?,
                "u0_lower",
                line,
            )?,
            "u0_upper" => set_initial(
                &mut cfg.u0_upper,
                parse_initial(value, line)?,
                "u0_upper",
                line,
            )?,
            "u0_file" | "u0_lower_file" | "u0_upper_file" => {
                let base = key.trim_end_matches("_file");
                let slot = match base {
                    "u0" => &mut cfg.u0,
                    "u0_lower" => &mut cfg.u0_lower,
                    _ => &mut cfg.u0_upper,
                };
                set_initial(slot, InitialData::File(PathBuf::from(value)), base, line)?;
            }
            "u0_edge" | "u0_lower_edge" | "u0_upper_edge" => {
                let base = key.trim_end_matches("_edge");
                let tokens: Vec<&str> = value.split_whitespace().collect();
                if tokens.len() < 2 {
                    return Err(Error::Parse {
                        line,
                        msg: format!("'{key}' lines read: {key} = <edge-id> <v0> <v1> ..."),
                    });
                }
                let values = tokens[1..]
                    .iter()
                    .map(|t| parse_f64(t, line))
                    .collect::<Result<Vec<f64>>>()?;
                let slot = match base {
                    "u0" => &mut cfg.u0,
                    "u0_lower" => &mut cfg.u0_lower,
                    _ => &mut cfg.u0_upper,
                };
                set_initial(
                    slot,
                    InitialData::EdgeSamples(vec![(tokens[0].to_string(), values)]),
                    base,
                    line,
                )?;
            }
            "h" => cfg.h = Some(parse_f64(value, line)?),
            "dt" => cfg.dt = Some(parse_f64(value, line)?),
            "T" => cfg.t_final = Some(parse_f64(value, line)?),
            "scheme" => {
                cfg.scheme = match value {
                    "imex-euler" => Scheme::ImexEuler,
                    "crank-nicolson" => Scheme::CrankNicolson,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: format!(
                                "unknown scheme '{value}'; expected imex-euler or crank-nicolson"
                            ),
                        })
                    }
                }
            }
            "mass" => {
                cfg.mass = match value {
                    "lumped" => MassMode::Lumped,
                    "consistent" => MassMode::Consistent,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("unknown mass '{value}'; expected lumped or consistent"),
                        })
                    }
                }
            }
            "tol" => cfg.tol = Some(parse_f64(value, line)?),
            "seed" => {
                cfg.seed = value.parse::<u64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("expected a non-negative integer, got '{value}'"),
                })?
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            "order" => {
                cfg.order = Some(match value {
                    "sub" => OrderKind::Sub,
                    "super" => OrderKind::Super,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("unknown order '{value}'; expected sub or super"),
                        })
                    }
                })
            }
            "stationary" => cfg.stationary_candidate = Some(parse_bool(value, line)?),
            "eps_stat" => cfg.eps_stat = parse_f64(value, line)?,
            "newton_tol" => cfg.newton_tol = parse_f64(value, line)?,
            "max_iters" => cfg.max_iters = parse_usize(value, line)?,
            "tau" => cfg.tau = Some(parse_f64(value, line)?),
            "beta_exp" => cfg.beta_exp = Some(parse_f64(value, line)?),
            "k" => cfg.barrier_k = Some(parse_f64(value, line)?),
            "theta" => cfg.theta = Some(parse_f64(value, line)?),
            "c0" => cfg.c0 = Some(parse_f64(value, line)?),
            "base_level" => cfg.base_level = Some(parse_usize(value, line)?),
            "growth_c" => cfg.growth_c = Some(parse_f64(value, line)?),
            "samples" => cfg.samples = parse_usize(value, line)?,
            "radii" => {
                cfg.radii = Some(
                    value
                        .split_whitespace()
                        .map(|t| parse_f64(t, line))
                        .collect::<Result<Vec<f64>>>()?,
                )
            }
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key '{other}'"),
                })
            }
        }
    }

    cfg.kind = kind.ok_or_else(|| Error::invalid("config must set 'kind'"))?;
    cfg.source = match (edges.is_empty(), tree, graph_file) {
        (false, None, None) => GraphSource::Inline(edges),
        (true, Some(spec), None) => GraphSource::Tree(spec),
        (true, None, Some(path)) => GraphSource::File(path),
        (true, None, None) => {
            return Err(Error::invalid(format!(
                "experiment kind '{}' requires a graph source: 'edge' lines, 'tree', or 'graph_file'",
                cfg.kind.label()
            )))
        }
        _ => unreachable!("conflicting sources are rejected at their lines"),
    };
    validate_required(&cfg)?;
    Ok(cfg)
}

/// The required-field table. Optional knobs with defaults (scheme, mass,
/// seed, tol, ...) are not listed; tree-only kinds also check the source.
fn validate_required(cfg: &ExperimentConfig) -> Result<()> {
    use ExperimentKind::*;
    let mut missing: Vec<&str> = Vec::new();
    let mut want = |absent: bool, name: &'static str| {
        if absent {
            missing.push(name);
        }
    };
    match cfg.kind {
        Evolve => {
            want(cfg.f.is_none(), "f");
            want(cfg.u0.is_none(), "u0");
            want(cfg.h.is_none(), "h");
            want(cfg.dt.is_none(), "dt");
            want(cfg.t_final.is_none(), "T");
        }
        Compare | Dual => {
            want(cfg.f.is_none(), "f");
            want(cfg.u0_lower.is_none(), "u0_lower");
            want(cfg.u0_upper.is_none(), "u0_upper");
            want(cfg.h.is_none(), "h");
            want(cfg.dt.is_none(), "dt");
            want(cfg.t_final.is_none(), "T");
        }
        Monotone => {
            want(cfg.f.is_none(), "f");
            want(cfg.u0_lower.is_none(), "u0_lower");
            want(cfg.u0_upper.is_none(), "u0_upper");
            want(cfg.h.is_none(), "h");
            want(cfg.dt.is_none(), "dt");
            want(cfg.t_final.is_none(), "T");
        }
        Stationary => {
            want(cfg.f.is_none(), "f");
            want(cfg.u0.is_none(), "u0");
            want(cfg.h.is_none(), "h");
        }
        Barrier => {
            want(cfg.beta_exp.is_none(), "beta_exp");
            want(cfg.barrier_k.is_none(), "k");
            want(cfg.theta.is_none(), "theta");
            want(cfg.c0.is_none(), "c0");
            want(cfg.base_level.is_none(), "base_level");
            want(cfg.tau.is_none(), "tau");
        }
        TreeReduce => {
            want(cfg.f.is_none(), "f");
            want(cfg.u0.is_none(), "u0");
            want(cfg.h.is_none(), "h");
            want(cfg.dt.is_none(), "dt");
            want(cfg.t_final.is_none(), "T");
        }
        CheckH2 => {
            want(cfg.growth_c.is_none(), "growth_c");
            want(cfg.theta.is_none(), "theta");
            want(cfg.beta_exp.is_none(), "beta_exp");
        }
        CheckOrder => {
            want(cfg.f.is_none(), "f");
            want(cfg.u0.is_none(), "u0");
            want(cfg.h.is_none(), "h");
            want(cfg.order.is_none(), "order");
            want(cfg.stationary_candidate.is_none(), "stationary");
            if cfg.stationary_candidate == Some(false) {
                want(cfg.dt.is_none(), "dt");
                want(cfg.t_final.is_none(), "T");
            }
        }
    }
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(|m| format!("'{m}'")).collect();
        return Err(Error::invalid(format!(
            "experiment kind '{}' is missing required field(s): {}",
            cfg.kind.label(),
            list.join(", ")
        )));
    }
    if matches!(cfg.kind, Barrier | TreeReduce) && !matches!(cfg.source, GraphSource::Tree(_)) {
        return Err(Error::invalid(format!(
            "experiment kind '{}' needs a regular tree source ('tree' or a tree-format 'graph_file')",
            cfg.kind.label()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_full_evolve_config_parses() {
        let text = "\
# single edge decay
kind = evolve
edge = e0 a b 1.0
bc = dirichlet
f = zero
u0 = sin(pi * rho)   # needs a root to evaluate
root = a
h = 0.125
dt = 1e-3
T = 0.1
scheme = crank-nicolson
mass = consistent
seed = 42
out = decay-out
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Evolve);
        assert!(matches!(&cfg.source, GraphSource::Inline(edges) if edges.len() == 1));
        assert_eq!(cfg.bc, BoundaryKind::Dirichlet);
        assert_eq!(cfg.root.as_deref(), Some("a"));
        assert!(matches!(cfg.f, Some(Nonlinearity::Zero)));
        assert!(matches!(cfg.u0, Some(InitialData::Expression(_))));
        assert_eq!(cfg.h, Some(0.125));
        assert_eq!(cfg.dt, Some(1e-3));
        assert_eq!(cfg.t_final, Some(0.1));
        assert_eq!(cfg.scheme, Scheme::CrankNicolson);
        assert_eq!(cfg.mass, MassMode::Consistent);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.out.as_deref(), Some(std::path::Path::new("decay-out")));
    }

    #[test]
    fn missing_fields_are_named() {
        let text = "kind = evolve\nedge = e0 a b 1.0\nf = zero\nu0 = 0.5\nh = 0.25\ndt = 1e-2\n";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("'T'"), "{msg}");
        assert!(msg.contains("evolve"), "{msg}");

        let text = "kind = monotone\ntree = 2 1.0 2\nf = logistic\nh = 0.25\ndt = 1e-2\nT = 1\n";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("'u0_lower'") && msg.contains("'u0_upper'"), "{msg}");

        let msg = parse_config("edge = e0 a b 1.0\n").unwrap_err().to_string();
        assert!(msg.contains("'kind'"), "{msg}");

        let msg = parse_config("kind = evolve\nf = zero\nu0 = 1\nh = 0.5\ndt = 0.1\nT = 1\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("graph source"), "{msg}");

        let text =
            "kind = check-order\ntree = 2 1.0 2\nf = zero\nu0 = 1\nh = 0.25\norder = super\nstationary = false\n";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("'dt'") && msg.contains("'T'"), "{msg}");
    }

    #[test]
    fn malformed_lines_carry_their_line_number() {
        let err = parse_config("kind = evolve\nh 0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");

        let err = parse_config("kind = evolve\nh = 0.5\nh = 0.25\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("duplicate key 'h'"), "{msg}");

        let msg = parse_config("kind = spin\n").unwrap_err().to_string();
        assert!(msg.contains("unknown kind 'spin'"), "{msg}");

        let msg = parse_config("kind = evolve\nwavelength = 3\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("unknown key 'wavelength'"), "{msg}");

        let msg = parse_config("kind = evolve\ntree = 2 1.0 2\nedge = e0 a b 1.0\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("already set at line 2"), "{msg}");

        let msg = parse_config("kind = evolve\nu0 = 0.5\nu0_file = q.field\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("initial data for 'u0' is already set"), "{msg}");

        let msg = parse_config("kind = evolve\nu0 = rho +\n").unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn nonlinearity_and_random_values_parse() {
        let text = "\
kind = compare
tree = 2 1.0 3
f = bistable 0.3
u0_lower = random 0 0.2
u0_upper = 0.8
h = 0.25
dt = 1e-2
T = 0.5
";
        let cfg = parse_config(text).unwrap();
        assert!(matches!(cfg.f, Some(Nonlinearity::Bistable { threshold }) if threshold == 0.3));
        assert!(
            matches!(cfg.u0_lower, Some(InitialData::Random { lo, hi }) if lo == 0.0 && hi == 0.2)
        );
        assert!(matches!(&cfg.source, GraphSource::Tree(spec) if spec.depth == 3));

        let msg = parse_config("kind = evolve\nf = bistable\n").unwrap_err().to_string();
        assert!(msg.contains("takes 1 parameter"), "{msg}");
        let msg = parse_config("kind = evolve\nf = sigmoid\n").unwrap_err().to_string();
        assert!(msg.contains("unknown nonlinearity 'sigmoid'"), "{msg}");
        let msg = parse_config("kind = evolve\nu0 = random 1 0\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("must be finite and ordered"), "{msg}");
    }

    #[test]
    fn edge_samples_accumulate_per_slot() {
        let text = "\
kind = check-order
edge = e0 a b 1.0
edge = e1 b c 1.0
f = zero
u0_edge = e0 0 0.5 1
u0_edge = e1 1 0.5 0
h = 0.5
order = super
stationary = true
";
        let cfg = parse_config(text).unwrap();
        match cfg.u0 {
            Some(InitialData::EdgeSamples(rows)) => {
                assert_eq!(rows.len(), 2);
                assert_eq!(rows[0].0, "e0");
                assert_eq!(rows[1].1, vec![1.0, 0.5, 0.0]);
            }
            other => panic!("expected edge samples, got {other:?}"),
        }

        let msg = parse_config("kind = evolve\nu0_edge = e0\n").unwrap_err().to_string();
        assert!(msg.contains("u0_edge = <edge-id> <v0> <v1>"), "{msg}");
    }

    #[test]
    fn tree_only_kinds_reject_general_graphs() {
        let text = "\
kind = tree-reduce
edge = e0 a b 1.0
f = zero
u0 = 1
h = 0.5
dt = 0.1
T = 1
";
        let msg = parse_config(text).unwrap_err().to_string();
        assert!(msg.contains("regular tree source"), "{msg}");
    }
}
