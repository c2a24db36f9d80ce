//! Line-oriented configuration format: `[section]` headers and `key = value`
//! pairs. Unknown sections or keys are rejected; load fields take whitelisted
//! analytic expressions in x and y.
//!
//! Sections and keys:
//!
//! ```text
//! [mesh]      kind = rect | file; nx, ny, x0, x1, y0, y1,
//!             left/right/bottom/top = gamma1|gamma2|gamma3; path (kind=file)
//! [material]  lambda, g, alpha, m, c_f, phi0, mu_f, k_xx, k_xy, k_yy,
//!             rho_f, g_grav, eta (expression), stab_l
//! [loads]     f0_x, f0_y, f2_x, f2_y, q, gap (expressions)
//! [time]      dt, t_end
//! [solver]    tol, floor, max_iters, drained (tag list), mode
//! [output]    dir, vtk_every
//! [sweep]     lambda/g/alpha/m/c_f/phi0/mu_f/stab_l = comma-separated values
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::assembly::{EtaField, Loads, MaterialParams};
use crate::error::Error;
use crate::expr::Expression;
use crate::fixed_stress::CouplingOptions;
use crate::mesh::{self, BoundaryTag, Mesh, Rect, SideTags};
use crate::Result;

/// Where the mesh comes from.
#[derive(Debug, Clone)]
pub enum MeshSource {
    Rect {
        nx: usize,
        ny: usize,
        extents: Rect,
        tags: SideTags,
    },
    File(String),
}

/// Requested run mode (informational; the CLI subcommand decides the action).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Simulate,
    Sweep,
    Validate,
    CompareOracle,
}

/// Fully parsed and validated configuration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mesh_source: MeshSource,
    pub params: MaterialParams,
    pub loads: LoadExpressions,
    pub dt: f64,
    pub t_end: f64,
    pub opts: CouplingOptions,
    pub drained: Vec<BoundaryTag>,
    pub out_dir: String,
    pub vtk_every: usize,
    pub mode: Option<RunMode>,
    /// Parameter grids for sweep mode, in declaration order.
    pub sweep: Vec<(String, Vec<f64>)>,
    /// Whether stab_l was given explicitly (a defaulted value tracks swept
    /// lambda/alpha; an explicit one does not).
    pub stab_l_explicit: bool,
    /// Non-fatal notes produced during parsing (e.g. stabilization below the
    /// provably convergent range).
    pub warnings: Vec<String>,
    /// Raw configuration text, hashed into the run manifest.
    pub raw_text: String,
}

/// Load fields kept as expressions (cheap to clone, deterministic to print).
#[derive(Debug, Clone)]
pub struct LoadExpressions {
    pub f0_x: Expression,
    pub f0_y: Expression,
    pub f2_x: Expression,
    pub f2_y: Expression,
    pub q: Expression,
    pub gap: Expression,
}

impl LoadExpressions {
    pub fn to_loads(&self) -> Loads {
        let f0x = self.f0_x.clone();
        let f0y = self.f0_y.clone();
        let f2x = self.f2_x.clone();
        let f2y = self.f2_y.clone();
        Loads {
            f0: Arc::new(move |x, y| [f0x.eval(x, y), f0y.eval(x, y)]),
            f2: Arc::new(move |x, y| [f2x.eval(x, y), f2y.eval(x, y)]),
            q_src: self.q.clone().into_fn(),
            gap: self.gap.clone().into_fn(),
        }
    }
}

impl SolverConfig {
    pub fn build_mesh(&self) -> Result<(Mesh, Vec<String>)> {
        match &self.mesh_source {
            MeshSource::Rect {
                nx,
                ny,
                extents,
                tags,
            } => Ok((mesh::build_rect_mesh(*nx, *ny, *extents, *tags)?, Vec::new())),
            MeshSource::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                let res = mesh::read_mesh(&text)?;
                Ok((res.mesh, res.warnings))
            }
        }
    }
}

struct Entries {
    map: BTreeMap<(String, String), (usize, String)>,
}

impl Entries {
    fn take(&mut self, section: &str, key: &str) -> Option<String> {
        self.map
            .remove(&(section.to_string(), key.to_string()))
            .map(|(_, v)| v)
    }

    fn take_f64(&mut self, section: &str, key: &str, default: f64) -> Result<f64> {
        match self.take(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config {
                key: key.to_string(),
                msg: format!("expected a number, got '{v}'"),
            }),
        }
    }

    fn take_usize(&mut self, section: &str, key: &str, default: usize) -> Result<usize> {
        match self.take(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Error::Config {
                key: key.to_string(),
                msg: format!("expected a nonnegative integer, got '{v}'"),
            }),
        }
    }

    fn take_expr(&mut self, section: &str, key: &str, default: &str) -> Result<Expression> {
        let text = self.take(section, key).unwrap_or_else(|| default.to_string());
        Expression::parse(&text).map_err(|e| Error::Config {
            key: key.to_string(),
            msg: e.to_string(),
        })
    }
}

fn parse_tag(key: &str, v: &str) -> Result<BoundaryTag> {
    BoundaryTag::parse(v).ok_or_else(|| Error::Config {
        key: key.to_string(),
        msg: format!("expected gamma1|gamma2|gamma3, got '{v}'"),
    })
}

/// Parses and validates a configuration. Defaults are filled in
/// (`stab_l = alpha^2 / lambda`, `tol = 1e-10`); unknown keys are rejected;
/// a stabilization below `alpha^2 / (2 lambda)` is accepted with a warning.
pub fn parse_config(text: &str) -> Result<SolverConfig> {
    let mut map: BTreeMap<(String, String), (usize, String)> = BTreeMap::new();
    let mut section = String::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let line = match line.find('#') {
            Some(i) => line[..i].trim_end(),
            None => line,
        };
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(Error::Config {
                    key: format!("line {}", ln + 1),
                    msg: format!("malformed section header '{line}'"),
                });
            }
            section = line[1..line.len() - 1].trim().to_ascii_lowercase();
            let known = [
                "mesh", "material", "loads", "time", "solver", "output", "sweep",
            ];
            if !known.contains(&section.as_str()) {
                return Err(Error::Config {
                    key: section.clone(),
                    msg: "unknown section".into(),
                });
            }
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Config {
                key: format!("line {}", ln + 1),
                msg: format!("expected 'key = value', got '{line}'"),
            });
        };
        let key = line[..eq].trim().to_ascii_lowercase();
        let value = line[eq + 1..].trim().to_string();
        if section.is_empty() {
            return Err(Error::Config {
                key: key.clone(),
                msg: "key outside any [section]".into(),
            });
        }
        if map
            .insert((section.clone(), key.clone()), (ln + 1, value))
            .is_some()
        {
            return Err(Error::Config {
                key,
                msg: format!("duplicate key in [{section}]"),
            });
        }
    }

    let mut e = Entries { map };
    let mut warnings = Vec::new();

    // [mesh]
    let kind = e
        .take("mesh", "kind")
        .unwrap_or_else(|| "rect".to_string())
        .to_ascii_lowercase();
    let mesh_source = match kind.as_str() {
        "rect" => {
            let nx = e.take_usize("mesh", "nx", 8)?;
            let ny = e.take_usize("mesh", "ny", 8)?;
            let extents = Rect {
                x0: e.take_f64("mesh", "x0", 0.0)?,
                x1: e.take_f64("mesh", "x1", 1.0)?,
                y0: e.take_f64("mesh", "y0", 0.0)?,
                y1: e.take_f64("mesh", "y1", 1.0)?,
            };
            let tags = SideTags {
                left: parse_tag("left", &e.take("mesh", "left").unwrap_or("gamma1".into()))?,
                right: parse_tag("right", &e.take("mesh", "right").unwrap_or("gamma3".into()))?,
                bottom: parse_tag(
                    "bottom",
                    &e.take("mesh", "bottom").unwrap_or("gamma2".into()),
                )?,
                top: parse_tag("top", &e.take("mesh", "top").unwrap_or("gamma2".into()))?,
            };
            MeshSource::Rect {
                nx,
                ny,
                extents,
                tags,
            }
        }
        "file" => {
            let path = e.take("mesh", "path").ok_or_else(|| Error::Config {
                key: "path".into(),
                msg: "mesh kind 'file' requires a path".into(),
            })?;
            MeshSource::File(path)
        }
        other => {
            return Err(Error::Config {
                key: "kind".into(),
                msg: format!("unknown mesh kind '{other}'"),
            })
        }
    };

    // [material]
    let mut params = MaterialParams::unit();
    params.lambda = e.take_f64("material", "lambda", 1.0)?;
    params.g_shear = e.take_f64("material", "g", 1.0)?;
    params.alpha = e.take_f64("material", "alpha", 1.0)?;
    params.m_biot = e.take_f64("material", "m", 1.0)?;
    params.c_f = e.take_f64("material", "c_f", 0.0)?;
    params.phi0 = e.take_f64("material", "phi0", 0.0)?;
    params.mu_f = e.take_f64("material", "mu_f", 1.0)?;
    let kxx = e.take_f64("material", "k_xx", 1.0)?;
    let kxy = e.take_f64("material", "k_xy", 0.0)?;
    let kyy = e.take_f64("material", "k_yy", 1.0)?;
    params.k_perm = [[kxx, kxy], [kxy, kyy]];
    params.rho_f_r = e.take_f64("material", "rho_f", 0.0)?;
    params.g_grav = e.take_f64("material", "g_grav", 0.0)?;
    if let Some(eta_text) = e.take("material", "eta") {
        let expr = Expression::parse(&eta_text).map_err(|err| Error::Config {
            key: "eta".into(),
            msg: err.to_string(),
        })?;
        params.eta = EtaField::Field(expr.into_fn());
    }
    let stab_given = e.take("material", "stab_l");
    let stab_l_explicit = stab_given.is_some();
    params.stab_l = match stab_given {
        Some(v) => v.parse().map_err(|_| Error::Config {
            key: "stab_l".into(),
            msg: format!("expected a number, got '{v}'"),
        })?,
        None => params.default_stab(),
    };
    if params.alpha > 0.0 {
        let threshold = params.alpha * params.alpha / (2.0 * params.lambda);
        if params.stab_l <= threshold {
            warnings.push(format!(
                "stab_l = {} is not above alpha^2/(2 lambda) = {}; convergence of the \
                 coupling iteration is only guaranteed for values above that threshold",
                params.stab_l, threshold
            ));
        }
    }
    params.validate().map_err(|err| match err {
        Error::InvalidParameter { name, msg } => Error::Config {
            key: name.to_string(),
            msg,
        },
        other => other,
    })?;

    // [loads]
    let loads = LoadExpressions {
        f0_x: e.take_expr("loads", "f0_x", "0")?,
        f0_y: e.take_expr("loads", "f0_y", "0")?,
        f2_x: e.take_expr("loads", "f2_x", "0")?,
        f2_y: e.take_expr("loads", "f2_y", "0")?,
        q: e.take_expr("loads", "q", "0")?,
        gap: e.take_expr("loads", "gap", "0")?,
    };

    // [time]
    let dt = e.take_f64("time", "dt", 0.1)?;
    if !(dt > 0.0) {
        return Err(Error::Config {
            key: "dt".into(),
            msg: format!("time step must be positive, got {dt}"),
        });
    }
    let t_end = e.take_f64("time", "t_end", dt)?;
    if t_end < dt {
        return Err(Error::Config {
            key: "t_end".into(),
            msg: format!("t_end = {t_end} must be at least dt = {dt}"),
        });
    }

    // [solver]
    let mut opts = CouplingOptions::default();
    opts.tol = e.take_f64("solver", "tol", 1e-10)?;
    if !(opts.tol > 0.0) {
        return Err(Error::Config {
            key: "tol".into(),
            msg: "tolerance must be positive".into(),
        });
    }
    opts.floor = e.take_f64("solver", "floor", 1.0)?;
    opts.max_iters = e.take_usize("solver", "max_iters", 200)?;
    let mut drained = Vec::new();
    if let Some(list) = e.take("solver", "drained") {
        for item in list.split(',') {
            let item = item.trim();
            if item.is_empty() {
                continue;
            }
            drained.push(parse_tag("drained", item)?);
        }
    }
    let mode = match e.take("solver", "mode") {
        None => None,
        Some(m) => Some(match m.to_ascii_lowercase().as_str() {
            "simulate" | "run" => RunMode::Simulate,
            "sweep" => RunMode::Sweep,
            "validate" => RunMode::Validate,
            "compare-oracle" => RunMode::CompareOracle,
            other => {
                return Err(Error::Config {
                    key: "mode".into(),
                    msg: format!("unknown mode '{other}'"),
                })
            }
        }),
    };

    // [output]
    let out_dir = e.take("output", "dir").unwrap_or_else(|| "out".to_string());
    let vtk_every = e.take_usize("output", "vtk_every", 1)?;

    // [sweep]
    let sweep_keys = ["lambda", "g", "alpha", "m", "c_f", "phi0", "mu_f", "stab_l"];
    let mut sweep = Vec::new();
    let sweep_entries: Vec<(String, usize, String)> = e
        .map
        .iter()
        .filter(|((s, _), _)| s == "sweep")
        .map(|((_, k), (ln, v))| (k.clone(), *ln, v.clone()))
        .collect();
    for (k, _, v) in sweep_entries {
        if !sweep_keys.contains(&k.as_str()) {
            return Err(Error::Config {
                key: k,
                msg: "not sweepable (allowed: material scalars)".into(),
            });
        }
        let values: Vec<f64> = v
            .split(',')
            .map(|s| {
                s.trim().parse().map_err(|_| Error::Config {
                    key: k.clone(),
                    msg: format!("bad number '{s}' in sweep list"),
                })
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::Config {
                key: k,
                msg: "empty sweep list".into(),
            });
        }
        e.map.remove(&("sweep".to_string(), k.clone()));
        sweep.push((k, values));
    }

    if let Some(((section, key), (ln, _))) = e.map.iter().next() {
        return Err(Error::Config {
            key: key.clone(),
            msg: format!("unknown key in [{section}] (line {ln})"),
        });
    }

    Ok(SolverConfig {
        mesh_source,
        params,
        loads,
        dt,
        t_end,
        opts,
        drained,
        out_dir,
        vtk_every,
        mode,
        sweep,
        stab_l_explicit,
        warnings,
        raw_text: text.to_string(),
    })
}

/// Applies one sweep assignment to a parameter set, re-deriving the default
/// stabilization when it was not explicitly pinned.
pub fn apply_sweep_value(
    params: &MaterialParams,
    key: &str,
    value: f64,
    stab_l_explicit: bool,
) -> Result<MaterialParams> {
    let mut p = params.clone();
    match key {
        "lambda" => p.lambda = value,
        "g" => p.g_shear = value,
        "alpha" => p.alpha = value,
        "m" => p.m_biot = value,
        "c_f" => p.c_f = value,
        "phi0" => p.phi0 = value,
        "mu_f" => p.mu_f = value,
        "stab_l" => p.stab_l = value,
        other => {
            return Err(Error::Config {
                key: other.to_string(),
                msg: "not sweepable".into(),
            })
        }
    }
    if key != "stab_l" && !stab_l_explicit {
        p.stab_l = p.default_stab();
    }
    p.validate()?;
    Ok(p)
}
