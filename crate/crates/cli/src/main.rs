//! Batch front end for the cosine-family engine: rays, itineraries, escape
//! classification, box-counting runs, escape-time rasters, and Monte Carlo
//! escape fractions, all as file-oriented subcommands.
//!
//! Exit codes: 0 success, 1 usage error, 2 numeric failure. Failures also
//! leave a one-line JSON error object on standard error. Numeric output is
//! printed with 17 significant digits in fixed scientific form so identical
//! configurations produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use cosdyn::classify::{classify_with_hint, escape_radius, r_h, ClassifierConfig, Verdict};
use cosdyn::dimension::{
    box_dimension, escape_fraction, halving_scales, sample_s, GridSpec, ParabolaParams, Window,
};
use cosdyn::map::CosineMap;
use cosdyn::pgm::write_pgm;
use cosdyn::rays::{extend_ray, sample_tail, RaySample, StepControl};
use cosdyn::render::escape_time_grid;
use cosdyn::symbolic::{tail_threshold, ExternalAddress, OrbitStatus, PartitionConfig};

#[derive(Parser)]
#[command(
    name = "cosdyn",
    about = "Dynamic rays and escape-set experiments for maps a*e^z + b*e^(-z)",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MapArgs {
    /// Parameter a as "re" or "re,im"
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    a: Complex64,
    /// Parameter b as "re" or "re,im"
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    b: Complex64,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output path (standard output when omitted)
    #[arg(short, long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Derived constants of the map (and of an address, when given)
    Constants {
        #[command(flatten)]
        map: MapArgs,
        /// Address generator JSON
        #[arg(long)]
        addr: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample a dynamic ray, optionally extending it below the threshold
    Ray {
        #[command(flatten)]
        map: MapArgs,
        /// Address generator JSON
        #[arg(long)]
        addr: String,
        /// Lower potential, or "auto" for the tail threshold
        #[arg(long, default_value = "auto")]
        t_lo: String,
        /// Upper potential
        #[arg(long)]
        t_hi: f64,
        /// Number of samples
        #[arg(short = 'n', long, default_value_t = 64)]
        count: usize,
        /// Telescope tolerance
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Extend below the threshold down to this potential by pullback
        #[arg(long)]
        extend_to: Option<f64>,
        /// csv or json
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Classify points from a CSV file of "re,im" rows
    Classify {
        #[command(flatten)]
        map: MapArgs,
        /// Input CSV path ("-" for standard input)
        #[arg(long)]
        points: String,
        #[arg(long, default_value_t = 24)]
        k_max: usize,
        #[arg(long, default_value_t = 1e-9)]
        t_tol: f64,
        /// Generator JSON used as an endpoint certificate
        #[arg(long)]
        expect_addr: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Itinerary of one point's forward orbit
    Address {
        #[command(flatten)]
        map: MapArgs,
        /// The point as "re" or "re,im"
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        point: Complex64,
        #[arg(long, default_value_t = 32)]
        k_max: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Sample the parabola-confined set and estimate its box dimension
    Dimension {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 20.0)]
        xi: f64,
        #[arg(long, default_value_t = 12)]
        k_horizon: usize,
        /// Window "re_min,re_max,im_min,im_max" (defaults to the parabola mouth)
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Option<Window>,
        /// Grid "NXxNY"
        #[arg(long, default_value = "2048x1024", value_parser = parse_size)]
        grid: (usize, usize),
        /// Coarsest box size (defaults to a quarter of the window height)
        #[arg(long)]
        scale_max: Option<f64>,
        /// Number of halving scales
        #[arg(long, default_value_t = 8)]
        scale_steps: usize,
        /// Also write the sampled set as a PGM raster
        #[arg(long)]
        raster: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Escape-time raster over a window (binary PGM)
    Render {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Window,
        /// Raster size "WxH"
        #[arg(long, default_value = "800x600", value_parser = parse_size)]
        size: (usize, usize),
        #[arg(long, default_value_t = 32)]
        budget: u32,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo escape fraction over a window
    Fraction {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
        window: Window,
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        #[arg(long, default_value_t = 24)]
        k_budget: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = |e: std::num::ParseFloatError| e.to_string();
    match parts.as_slice() {
        [re] => Ok(Complex64::new(re.trim().parse().map_err(bad)?, 0.0)),
        [re, im] => Ok(Complex64::new(
            re.trim().parse().map_err(bad)?,
            im.trim().parse().map_err(bad)?,
        )),
        _ => Err("expected \"re\" or \"re,im\"".into()),
    }
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    if v.len() != 4 || v[0] >= v[1] || v[2] >= v[3] {
        return Err("expected \"re_min,re_max,im_min,im_max\"".into());
    }
    Ok(Window {
        re_min: v[0],
        re_max: v[1],
        im_min: v[2],
        im_max: v[3],
    })
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once('x').ok_or("expected \"WxH\"")?;
    let w: usize = w.trim().parse().map_err(|_| "bad width")?;
    let h: usize = h.trim().parse().map_err(|_| "bad height")?;
    if w < 2 || h < 2 {
        return Err("size must be at least 2x2".into());
    }
    Ok((w, h))
}

enum AppError {
    Usage(String),
    Numeric(String),
}

impl AppError {
    fn emit(&self) -> ExitCode {
        let (kind, msg, code) = match self {
            AppError::Usage(m) => ("usage", m, 1),
            AppError::Numeric(m) => ("numeric", m, 2),
        };
        eprintln!("{}", json!({ "error": { "kind": kind, "message": msg } }));
        ExitCode::from(code)
    }
}

fn usage<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Usage(e.to_string())
}

fn numeric<E: std::fmt::Display>(e: E) -> AppError {
    AppError::Numeric(e.to_string())
}

/// 17 significant digits, fixed scientific form.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn write_output(path: &Option<String>, bytes: &[u8]) -> Result<(), AppError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| usage(format!("cannot write {p}: {e}"))),
        None => io::stdout().write_all(bytes).map_err(usage),
    }
}

fn build_map(args: &MapArgs) -> Result<CosineMap, AppError> {
    CosineMap::new(args.a, args.b).map_err(numeric)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let msg = e.to_string();
            let _ = e.print();
            if help {
                return ExitCode::SUCCESS;
            }
            return AppError::Usage(msg).emit();
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.emit(),
    }
}

fn run(cmd: Command) -> Result<(), AppError> {
    match cmd {
        Command::Constants { map, addr, out } => {
            let m = build_map(&map)?;
            let config = json!({
                "command": "constants",
                "a": complex_json(map.a), "b": complex_json(map.b),
                "addr": addr.as_deref().map(|s| serde_json::from_str::<Value>(s).unwrap_or(Value::String(s.into()))),
            });
            let mut doc = json!({
                "config": config,
                "c": complex_json(m.c),
                "alpha": complex_json(m.alpha),
                "beta": complex_json(m.beta),
                "v1": complex_json(m.v1),
                "v2": complex_json(m.v2),
                "k_min": m.k_min,
                "k_max": m.k_max,
                "m": m.m,
                "t_ab": m.t_ab,
                "c1": m.c1(),
                "r_escape": escape_radius(&m),
                "r_h_2pi": r_h(&m, std::f64::consts::TAU),
            });
            if let Some(a) = addr {
                let parsed = ExternalAddress::from_json(&a).map_err(usage)?;
                doc["t_s"] = json!(parsed.minimal_potential());
                doc["t_s_threshold"] = json!(tail_threshold(&m, &parsed));
                doc["is_fast"] = json!(parsed.is_fast());
            }
            write_output(&out.out, pretty(&doc).as_bytes())
        }
        Command::Ray {
            map,
            addr,
            t_lo,
            t_hi,
            count,
            tol,
            extend_to,
            format,
            out,
        } => {
            if !(tol > 0.0) {
                return Err(usage("tolerance must be positive"));
            }
            let m = build_map(&map)?;
            let parsed = ExternalAddress::from_json(&addr).map_err(usage)?;
            let threshold = tail_threshold(&m, &parsed);
            let lo = match t_lo.as_str() {
                "auto" => threshold,
                s => s.parse::<f64>().map_err(usage)?,
            };
            let config = json!({
                "command": "ray",
                "a": complex_json(map.a), "b": complex_json(map.b),
                "addr": serde_json::from_str::<Value>(&addr).map_err(usage)?,
                "t_lo": lo, "t_hi": t_hi, "count": count, "tol": tol,
                "extend_to": extend_to,
            });
            let mut ray = sample_tail(&m, &parsed, lo, t_hi, count, tol).map_err(numeric)?;
            if let Some(target) = extend_to {
                ray = extend_ray(
                    &ray,
                    target,
                    &StepControl {
                        tol,
                        ..Default::default()
                    },
                )
                .map_err(numeric)?;
            }
            let bytes = match format.as_str() {
                "csv" => {
                    let mut s = String::new();
                    let _ = writeln!(s, "# {config}");
                    let _ = writeln!(s, "{}", RaySample::CSV_HEADER);
                    for sample in &ray.samples {
                        let _ = writeln!(s, "{}", sample.csv_row());
                    }
                    s.into_bytes()
                }
                "json" => {
                    let samples: Vec<Value> = ray
                        .samples
                        .iter()
                        .map(|s| {
                            json!({
                                "t": s.t, "re": s.z.re, "im": s.z.im,
                                "depth": s.depth, "err_est": s.err_est,
                                "via_pullback": s.via_pullback,
                            })
                        })
                        .collect();
                    let doc = json!({
                        "config": config,
                        "generator": serde_json::from_str::<Value>(&addr).map_err(usage)?,
                        "t_min_reached": ray.t_min_reached,
                        "c1": ray.c1,
                        "samples": samples,
                    });
                    pretty(&doc).into_bytes()
                }
                other => return Err(usage(format!("unknown format {other}"))),
            };
            write_output(&out.out, &bytes)
        }
        Command::Classify {
            map,
            points,
            k_max,
            t_tol,
            expect_addr,
            out,
        } => {
            if !(t_tol > 0.0) {
                return Err(usage("tolerance must be positive"));
            }
            let m = build_map(&map)?;
            let cfg = ClassifierConfig::new(m, k_max, t_tol);
            let hint = match &expect_addr {
                Some(a) => Some(ExternalAddress::from_json(a).map_err(usage)?),
                None => None,
            };
            let raw = if points == "-" {
                let mut buf = String::new();
                io::stdin().read_to_string(&mut buf).map_err(usage)?;
                buf
            } else {
                fs::read_to_string(&points).map_err(|e| usage(format!("{points}: {e}")))?
            };
            let config = json!({
                "command": "classify",
                "a": complex_json(map.a), "b": complex_json(map.b),
                "points": points, "k_max": k_max, "t_tol": t_tol,
                "expect_addr": expect_addr,
            });
            let mut s = String::new();
            let _ = writeln!(s, "# {config}");
            let _ = writeln!(s, "re,im,verdict,t_hat,residual,prefix");
            for line in raw.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((re_s, im_s)) = line.split_once(',') else {
                    continue;
                };
                let (Ok(re), Ok(im)) = (re_s.trim().parse::<f64>(), im_s.trim().parse::<f64>())
                else {
                    continue; // header or malformed row
                };
                let z = Complex64::new(re, im);
                let res = classify_with_hint(&cfg, z, hint.as_ref());
                let (verdict, t_hat, prefix) = match &res.verdict {
                    Verdict::OnRay { prefix, t_hat } => {
                        ("on_ray".to_string(), *t_hat, prefix_str(prefix))
                    }
                    Verdict::RayEndpoint { prefix, t_hat } => {
                        ("ray_endpoint".to_string(), *t_hat, prefix_str(prefix))
                    }
                    Verdict::NotEscapedWithinBudget => {
                        ("not_escaped_within_budget".into(), f64::NAN, String::new())
                    }
                    Verdict::BoundaryAmbiguous => {
                        ("boundary_ambiguous".into(), f64::NAN, String::new())
                    }
                    Verdict::EnteredCoreRegion { k } => {
                        (format!("entered_core_region:{k}"), f64::NAN, String::new())
                    }
                };
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{}",
                    fmt_f64(re),
                    fmt_f64(im),
                    verdict,
                    fmt_f64(t_hat),
                    fmt_f64(res.residual),
                    prefix
                );
            }
            write_output(&out.out, s.as_bytes())
        }
        Command::Address {
            map,
            point,
            k_max,
            out,
        } => {
            let m = build_map(&map)?;
            let cfg = PartitionConfig::new(m);
            let oa = cfg.address_of_orbit(point, k_max);
            let status = match oa.status {
                OrbitStatus::Completed => json!("completed"),
                OrbitStatus::HitBoundary => json!("hit_boundary"),
                OrbitStatus::Overflowed(k) => json!({ "overflowed_after": k }),
            };
            let doc = json!({
                "config": {
                    "command": "address",
                    "a": complex_json(map.a), "b": complex_json(map.b),
                    "point": complex_json(point), "k_max": k_max,
                },
                "symbols": oa.symbols,
                "status": status,
            });
            write_output(&out.out, pretty(&doc).as_bytes())
        }
        Command::Dimension {
            map,
            p,
            xi,
            k_horizon,
            window,
            grid,
            scale_max,
            scale_steps,
            raster,
            out,
        } => {
            if !(p > 0.0) || !(xi > 0.0) {
                return Err(usage("p and xi must be positive"));
            }
            let m = build_map(&map)?;
            let params = ParabolaParams { p, xi };
            let spec = match window {
                Some(w) => GridSpec {
                    window: w,
                    nx: grid.0,
                    ny: grid.1,
                },
                None => {
                    let mut d = GridSpec::default_for(&params);
                    d.nx = grid.0;
                    d.ny = grid.1;
                    d
                }
            };
            let coarse = scale_max
                .unwrap_or((spec.window.im_max - spec.window.im_min) * 0.25)
                .abs();
            let scales = halving_scales(coarse, scale_steps.max(2));
            let config = json!({
                "command": "dimension",
                "a": complex_json(map.a), "b": complex_json(map.b),
                "p": p, "xi": xi, "k_horizon": k_horizon,
                "window": [spec.window.re_min, spec.window.re_max, spec.window.im_min, spec.window.im_max],
                "grid": [spec.nx, spec.ny],
                "scales": scales,
            });
            let pts = sample_s(&m, &params, k_horizon, &spec);
            let report = box_dimension(&pts, &scales, Some(1.0 + 1.0 / p)).map_err(numeric)?;
            if let Some(path) = raster {
                let raster_bytes = occupancy_raster(&pts, &spec);
                let mut buf = Vec::new();
                write_pgm(
                    &mut buf,
                    spec.nx,
                    spec.ny,
                    &raster_bytes,
                    Some(&config.to_string()),
                )
                .map_err(usage)?;
                fs::write(&path, buf).map_err(|e| usage(format!("{path}: {e}")))?;
            }
            let doc = json!({
                "config": config,
                "n_points": report.n_points,
                "scales": report.scales,
                "counts": report.counts,
                "slope": report.slope,
                "target": report.target,
                "note": report.note,
            });
            write_output(&out.out, pretty(&doc).as_bytes())
        }
        Command::Render {
            map,
            window,
            size,
            budget,
            out,
        } => {
            let m = build_map(&map)?;
            let spec = GridSpec {
                window,
                nx: size.0,
                ny: size.1,
            };
            let config = json!({
                "command": "render",
                "a": complex_json(map.a), "b": complex_json(map.b),
                "window": [window.re_min, window.re_max, window.im_min, window.im_max],
                "size": [size.0, size.1], "budget": budget,
            });
            let pixels = escape_time_grid(&m, &spec, budget);
            let mut buf = Vec::new();
            write_pgm(&mut buf, spec.nx, spec.ny, &pixels, Some(&config.to_string()))
                .map_err(usage)?;
            write_output(&out.out, &buf)
        }
        Command::Fraction {
            map,
            window,
            samples,
            k_budget,
            seed,
            out,
        } => {
            let m = build_map(&map)?;
            let fraction = escape_fraction(&m, &window, samples, k_budget, seed);
            let doc = json!({
                "config": {
                    "command": "fraction",
                    "a": complex_json(map.a), "b": complex_json(map.b),
                    "window": [window.re_min, window.re_max, window.im_min, window.im_max],
                    "samples": samples, "k_budget": k_budget, "seed": seed,
                },
                "escape_fraction": fraction,
            });
            write_output(&out.out, pretty(&doc).as_bytes())
        }
    }
}

fn prefix_str(prefix: &[cosdyn::StripSymbol]) -> String {
    prefix
        .iter()
        .map(|s| format!("{}{}", s.n, s.side))
        .collect::<Vec<_>>()
        .join(";")
}

/// Occupancy raster of the sampled set on the sampling grid (255 = occupied),
/// top row at maximal imaginary part.
fn occupancy_raster(points: &[Complex64], spec: &GridSpec) -> Vec<u8> {
    let w = &spec.window;
    let mut px = vec![0u8; spec.nx * spec.ny];
    for z in points {
        let fx = (z.re - w.re_min) / (w.re_max - w.re_min) * (spec.nx - 1) as f64;
        let fy = (z.im - w.im_min) / (w.im_max - w.im_min) * (spec.ny - 1) as f64;
        let i = (fx.round() as isize).clamp(0, spec.nx as isize - 1) as usize;
        let j = (fy.round() as isize).clamp(0, spec.ny as isize - 1) as usize;
        px[(spec.ny - 1 - j) * spec.nx + i] = 255;
    }
    px
}

/// Stable pretty JSON with a trailing newline.
fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
