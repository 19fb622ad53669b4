use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use abrule::analytic::{absorption_curve, reflection_coefficient_general, reflection_soft_slab};
use abrule::bohmian::co_integrated_ensemble;
use abrule::export::{
    write_distribution, write_figure1, write_reflection_scan, write_sweep, write_trajectories,
    Metadata, ScanRow,
};
use abrule::observables::{detection_distribution, summary_statistics};
use abrule::propagator::{Propagator, PropagatorConfig};
use abrule::reflection::{reflection_scan, ReflectionSetup};
use abrule::soft::{hard_limit_sweep, run_soft, SoftRunConfig, SweepSettings, SweepVerdict};
use abrule::{BoundaryKind, BoundarySpec, PhysicalConstants, Side, SoftDetectorSpec};
use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::{digest_hex, LoadedConfig, RunConfig};
use crate::exit::{self, ConfigError, NumericalError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Steps larger than this multiple of the heuristic are refused.
pub const DT_REFUSAL_FACTOR: f64 = 10.0;

fn metadata(digest: &str) -> Metadata {
    Metadata::new(&format!("abrule {VERSION}"), digest)
}

fn out_dir(cfg: Option<&RunConfig>, flag: Option<&Path>) -> Result<PathBuf> {
    let dir = match (flag, cfg) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(c)) => c.output.dir.clone(),
        (None, None) => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot write {}", path.display())
    })?))
}

fn check_dt(rc: &RunConfig, dx: f64, dt: f64) -> Result<()> {
    let h = rc.dt_heuristic(dx);
    if dt > DT_REFUSAL_FACTOR * h {
        return Err(NumericalError(format!(
            "dt = {dt} exceeds {DT_REFUSAL_FACTOR}× the resolution limit dx·m/(ħ k_max) = {h:.3e}"
        ))
        .into());
    }
    if dt > h {
        log::warn!("dt = {dt} is above the resolution limit dx·m/(ħ k_max) = {h:.3e}; phases will be under-resolved");
    }
    Ok(())
}

pub fn simulate(loaded: &LoadedConfig, out: Option<&Path>) -> Result<u8> {
    let rc = &loaded.config;
    let c = rc.constants();
    let soft = rc
        .soft
        .as_ref()
        .filter(|s| s.width.is_some() || s.strength.is_some());
    let (record, model) = match soft {
        Some(s) => {
            let width = s
                .width
                .ok_or_else(|| ConfigError("`soft.width` is required".into()))?;
            let strength = s
                .strength
                .ok_or_else(|| ConfigError("`soft.strength` is required".into()))?;
            let spec = SoftDetectorSpec::new(width, strength, s.back_wall())?;
            let probe = SoftRunConfig::new(rc.domain.x_min, rc.domain.dx, c, spec, 1.0)?;
            let dx = probe.domain().dx();
            let dt = rc.dt(rc.domain.dx);
            check_dt(rc, rc.domain.dx, dt)?;
            let cfg = SoftRunConfig::new(rc.domain.x_min, rc.domain.dx, c, spec, dt)?;
            let psi0 = rc.packet_on(&rc.interior_domain(dx)?)?;
            let rec = run_soft(&psi0, rc.run.t_final, &cfg)?;
            (
                rec,
                format!(
                    "soft shell v = {strength}, L = {width}, back wall {}, nominal kappa {}",
                    s.back_wall().name(),
                    spec.nominal_kappa(&c)
                ),
            )
        }
        None => {
            let b = rc.boundary()?;
            let kind = b.kind()?;
            let dx = rc.domain.dx;
            let dt = rc.dt(dx);
            check_dt(rc, dx, dt)?;
            let domain = rc.interior_domain(dx)?;
            let cfg = PropagatorConfig::new(
                domain,
                c,
                rc.potential()?,
                BoundarySpec::dirichlet(Side::Left),
                BoundarySpec::new(Side::Right, kind)?,
                dt,
            )?;
            let psi0 = rc.packet_on(&domain)?;
            (
                Propagator::new(cfg)?.evolve(&psi0, rc.run.t_final, 0)?,
                format!("hard surface, {:?}", kind),
            )
        }
    };
    let dist = detection_distribution(&record);
    let dir = out_dir(Some(rc), out)?;
    let path = dir.join("distribution.csv");
    write_distribution(create(&path)?, &metadata(&loaded.digest), &dist)?;

    let bookkeeping = (dist.detected() + dist.prob_never - dist.initial_norm).abs();
    println!("config digest     {}", loaded.digest);
    println!("model             {model}");
    println!("steps             {} (dt = {})", dist.steps(), record.dt);
    println!("detected          {:.12}", dist.detected());
    println!("prob_never        {:.12}", dist.prob_never);
    println!("bookkeeping       {bookkeeping:.3e}");
    println!(
        "horizon residual  {:.3e}{}",
        dist.horizon_residual,
        if dist.horizon_warning {
            " (detection still ongoing at t_final)"
        } else {
            ""
        }
    );
    if let Ok(s) = summary_statistics(&dist) {
        println!("mean time         {:.6}", s.mean);
        println!("median time       {:.6}", s.median);
    }
    println!("wrote             {}", path.display());
    Ok(exit::OK)
}

/// Arguments of `reflection-scan`.
#[derive(Debug, Clone)]
pub struct ScanArgs {
    pub kappa: f64,
    pub nu: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub k_step: f64,
    pub numeric: bool,
    pub numeric_k: Vec<f64>,
    pub dx: f64,
    pub hbar: f64,
    pub mass: f64,
    pub soft_width: Option<f64>,
    pub soft_strength: Option<f64>,
}

pub fn reflection_scan_cmd(args: &ScanArgs, out: Option<&Path>) -> Result<u8> {
    let field_positive = |name: &str, x: f64| -> Result<()> {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(ConfigError(format!("`{name}` must be positive (got {x})")).into())
        }
    };
    field_positive("kappa", args.kappa)?;
    field_positive("k-min", args.k_min)?;
    field_positive("k-step", args.k_step)?;
    field_positive("dx", args.dx)?;
    if !(args.k_max >= args.k_min) {
        return Err(ConfigError("`k-max` must not be below `k-min`".into()).into());
    }
    if !args.nu.is_finite() {
        return Err(ConfigError("`nu` must be finite".into()).into());
    }
    let c = PhysicalConstants::new(args.hbar, args.mass)?;
    let soft = match (args.soft_width, args.soft_strength) {
        (Some(w), Some(v)) => Some(SoftDetectorSpec::neumann(w, v)?),
        (None, None) => None,
        _ => return Err(ConfigError("`soft-width` and `soft-strength` go together".into()).into()),
    };
    let digest = digest_hex(format!("{args:?}").as_bytes());

    let n = ((args.k_max - args.k_min) / args.k_step + 1e-9).floor() as usize;
    let mut ratios: Vec<f64> = (0..=n)
        .map(|i| {
            let r = args.k_min + i as f64 * args.k_step;
            (r * 1e12).round() / 1e12
        })
        .collect();
    if args.numeric {
        for &r in &args.numeric_k {
            field_positive("numeric-k", r)?;
            if !ratios.iter().any(|&g| (g - r).abs() < 1e-9) {
                ratios.push(r);
            }
        }
        ratios.sort_by(|a, b| a.total_cmp(b));
    }
    let numeric = if args.numeric {
        let setup = ReflectionSetup::new(args.kappa, args.nu, c, args.dx);
        let ks: Vec<f64> = args.numeric_k.iter().map(|r| r * args.kappa).collect();
        reflection_scan(&ks, &setup)?
    } else {
        Vec::new()
    };
    let rows = ratios
        .iter()
        .map(|&r| {
            let k = r * args.kappa;
            let refl = reflection_coefficient_general(k, args.kappa, args.nu)?.probability;
            let soft_r = match &soft {
                Some(s) => Some(
                    reflection_soft_slab(k, s.strength, s.width, &c, &s.back_boundary)?.probability,
                ),
                None => None,
            };
            Ok(ScanRow {
                k,
                kappa: args.kappa,
                reflection: refl,
                absorption: 1.0 - refl,
                soft: soft_r,
                numeric: numeric
                    .iter()
                    .find(|p| (p.k - k).abs() < 1e-9 * k.max(1.0))
                    .copied(),
            })
        })
        .collect::<abrule::Result<Vec<_>>>()?;

    let dir = out_dir(None, out)?;
    let path = dir.join("reflection_scan.csv");
    let meta = metadata(&digest)
        .with("kappa", args.kappa)
        .with("nu", args.nu);
    write_reflection_scan(create(&path)?, &meta, &rows)?;

    let best = rows
        .iter()
        .max_by(|a, b| a.absorption.total_cmp(&b.absorption))
        .expect("non-empty grid");
    println!("kappa = {}, nu = {}", args.kappa, args.nu);
    println!(
        "max A = {:.15} at k/kappa = {} (grid step {})",
        best.absorption,
        best.k / args.kappa,
        args.k_step
    );
    if let Some(p) = numeric
        .iter()
        .min_by(|a, b| a.r_simulated.total_cmp(&b.r_simulated))
    {
        println!(
            "numeric max A = {:.6} at k/kappa = {}",
            1.0 - p.r_simulated,
            p.k / args.kappa
        );
    }
    for p in &numeric {
        println!(
            "k/kappa = {:<6} R_sim = {:.6}  R_avg = {:.6}  R_plane = {:.6}  |diff| = {:.2e}",
            p.k / args.kappa,
            p.r_simulated,
            p.r_averaged,
            p.r_plane_wave,
            p.error()
        );
    }
    println!("wrote {}", path.display());
    Ok(exit::OK)
}

pub fn soft_limit(
    loaded: &LoadedConfig,
    back_wall: Option<BoundaryKind>,
    sweep_len: Option<usize>,
    out: Option<&Path>,
) -> Result<u8> {
    let rc = &loaded.config;
    let soft = rc.soft()?;
    let kappa = rc.boundary()?.kappa()?;
    let c = rc.constants();
    let initial_width = soft
        .initial_width
        .or(soft.width)
        .ok_or_else(|| ConfigError("`soft.initial_width` is required for a sweep".into()))?;
    let back = back_wall.unwrap_or_else(|| soft.back_wall());
    let mut settings = SweepSettings {
        initial_width,
        terms: sweep_len.unwrap_or(soft.terms),
        back_boundary: back,
        dt: 1.0,
        constants: c,
    };
    if settings.terms < 3 {
        return Err(ConfigError("`sweep-len` must be at least 3".into()).into());
    }
    let required = settings.required_dx();
    let dx = required / (required / rc.domain.dx - 1e-9).ceil().max(1.0);
    settings.dt = rc.dt(rc.domain.dx);
    check_dt(rc, rc.domain.dx, settings.dt)?;
    let psi0 = rc.packet_on(&rc.interior_domain(dx)?)?;
    let result = hard_limit_sweep(&psi0, rc.run.t_final, kappa, &settings)?;

    let dir = out_dir(Some(rc), out)?;
    let path = dir.join("soft_limit.csv");
    write_sweep(create(&path)?, &metadata(&loaded.digest), &result)?;

    println!(
        "back wall {}, kappa target {kappa}, dx = {dx}, dt = {}",
        back.name(),
        settings.dt
    );
    println!("reference hard rule {:?}", result.reference);
    println!(
        "{:>12} {:>12} {:>12} {:>12} {:>12}",
        "v", "L", "L1", "kappa_eff", "detected"
    );
    for i in &result.items {
        println!(
            "{:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            i.strength, i.width, i.l1_distance, i.kappa_eff, i.detected_mass
        );
    }
    if result.failure_expected() {
        println!("proportionality  not defined: a Dirichlet-backed shell has no hard limit");
    } else if let Some(last) = result.items.last() {
        println!(
            "proportionality  kappa_eff·hbar²/(m·vL) = {:.4} (nominal 2)",
            last.kappa_constant
        );
    }
    println!("wrote {}", path.display());
    match result.verdict {
        SweepVerdict::Converging => {
            println!("verdict: CONVERGING");
            Ok(exit::OK)
        }
        SweepVerdict::NotConverging => {
            let note = if result.failure_expected() {
                " (expected: Dirichlet back wall)"
            } else {
                ""
            };
            println!("verdict: NOT-CONVERGING{note}");
            Ok(exit::NON_CONVERGENCE)
        }
    }
}

#[derive(Serialize)]
struct EnsembleSummary<'a> {
    version: &'a str,
    config_digest: &'a str,
    seed: u64,
    n_samples: usize,
    ks_distance: f64,
    never_exit_fraction: f64,
    flux_prob_never: f64,
    expected_exit_velocity: f64,
    mean_exit_velocity: f64,
    max_exit_velocity_error: f64,
    stall_count: usize,
    order_violations: usize,
    valid: bool,
}

pub fn trajectories(
    loaded: &LoadedConfig,
    n: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<u8> {
    let rc = &loaded.config;
    let kind = rc.boundary()?.kind()?;
    if !kind.is_absorbing() {
        return Err(
            ConfigError("`boundary.kind` must be absorbing for trajectories".into()).into(),
        );
    }
    let n = n.unwrap_or(rc.run.samples);
    let seed = seed.unwrap_or(rc.run.seed);
    let dx = rc.domain.dx;
    let dt = rc.dt(dx);
    check_dt(rc, dx, dt)?;
    let domain = rc.interior_domain(dx)?;
    let cfg = PropagatorConfig::new(
        domain,
        rc.constants(),
        rc.potential()?,
        BoundarySpec::dirichlet(Side::Left),
        BoundarySpec::new(Side::Right, kind)?,
        dt,
    )?;
    let psi0 = rc.packet_on(&domain)?;
    let (stats, _) = co_integrated_ensemble(&cfg, &psi0, rc.run.t_final, n, seed)?;

    let dir = out_dir(Some(rc), out)?;
    let path = dir.join("trajectories.csv");
    write_trajectories(create(&path)?, &metadata(&loaded.digest), &stats)?;
    let version = format!("abrule {VERSION}");
    let summary = EnsembleSummary {
        version: &version,
        config_digest: &loaded.digest,
        seed,
        n_samples: stats.n_samples(),
        ks_distance: stats.ks_distance,
        never_exit_fraction: stats.never_exit_fraction,
        flux_prob_never: stats.flux_prob_never,
        expected_exit_velocity: stats.expected_exit_velocity,
        mean_exit_velocity: stats.mean_exit_velocity,
        max_exit_velocity_error: stats.max_exit_velocity_error,
        stall_count: stats.stall_count,
        order_violations: stats.order_violations,
        valid: stats.valid,
    };
    let side = dir.join("trajectories_summary.json");
    fs::write(&side, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("cannot write {}", side.display()))?;

    println!("samples           {} (seed {seed})", stats.n_samples());
    println!("KS distance       {:.5}", stats.ks_distance);
    println!(
        "never exit        {:.5} (flux: {:.5})",
        stats.never_exit_fraction, stats.flux_prob_never
    );
    println!(
        "exit velocity     mean {:.6}, expected hbar·kappa/m = {:.6}, max rel. error {:.2e}",
        stats.mean_exit_velocity, stats.expected_exit_velocity, stats.max_exit_velocity_error
    );
    println!("stalls            {}", stats.stall_count);
    println!("order violations  {}", stats.order_violations);
    println!("wrote {} and {}", path.display(), side.display());
    if stats.valid {
        Ok(exit::OK)
    } else {
        eprintln!(
            "error: {} of {} trajectories stalled",
            stats.stall_count,
            stats.n_samples()
        );
        Ok(exit::STALL)
    }
}

pub fn figure1(out: Option<&Path>) -> Result<u8> {
    let curve = absorption_curve(5.0, 0.01)?;
    let dir = out_dir(None, out)?;
    let path = dir.join("figure1.csv");
    let digest = digest_hex(b"figure1 k/kappa 0..5 step 0.01");
    write_figure1(create(&path)?, &metadata(&digest), &curve)?;
    println!("wrote {} ({} rows)", path.display(), curve.len());
    Ok(exit::OK)
}
