use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use heatbath::analysis::{
    autocorr_samples, chi_square_normal, default_gof_bins, ensemble_curve_distance, histogram, mean_stderr,
    variance_stderr, weak_error, weak_error_paired, BinSpec, Curve, Estimate, ProductSamples, Variable,
};
use heatbath::bath::{BathRunConfig, HeatBath};
use heatbath::ensemble::{coupled_ensembles, langevin_ensemble, GleEnsemble, ReducedSetup, DEFAULT_BATCH};
use heatbath::gle::{gle_run, DampingWeights, GleConfig};
use heatbath::io::{write_table, Provenance};
use heatbath::kernel::{
    friction_from_beta, friction_from_forces, kernel_decay_diagnostic, BetaFunction, BetaGrid, CouplingSpec,
    DecayDiagnostic, FiniteKernel, ForceTable, LatticeBathSpec, LimitKernel, MemoryKernel, SincKernel,
};
use heatbath::noise::{spectral_noise_finite, NoisePath, ToeplitzSampler};
use heatbath::potential::Harmonic;
use heatbath::{SeedSequence, Trajectory};
use rayon::prelude::*;

use crate::config::{Config, CouplingSource, KernelEvalMode, Kind};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(s) | CliError::Numerical(s) | CliError::Io(s) => f.write_str(s),
        }
    }
}

impl From<heatbath::Error> for CliError {
    fn from(e: heatbath::Error) -> Self {
        match e {
            heatbath::Error::InvalidParameter { .. } | heatbath::Error::Parse { .. } => CliError::Config(e.to_string()),
            heatbath::Error::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Ctx<'a> {
    cfg: &'a Config,
    header: Provenance,
}

impl Ctx<'_> {
    fn seeds(&self, experiment: &str) -> SeedSequence {
        SeedSequence::new(self.cfg.seed, experiment)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn header_with(&self, extra: &Provenance) -> Provenance {
        let mut p = self.header.clone();
        p.extend(extra);
        p
    }

    fn table(&self, name: &str, extra: &Provenance, columns: &[&str], rows: Vec<Vec<f64>>) -> Result<()> {
        let mut w = self.file(name)?;
        let cols: Vec<String> = columns.iter().map(|s| s.to_string()).collect();
        write_table(&mut w, &self.header_with(extra), &cols, rows)?;
        self.finish(w, name)
    }

    fn curve(&self, name: &str, extra: &Provenance, curve: &Curve) -> Result<()> {
        let mut w = self.file(name)?;
        curve.write_csv(&mut w, &self.header_with(extra))?;
        self.finish(w, name)
    }

    fn trajectory(&self, name: &str, extra: &Provenance, tr: &Trajectory) -> Result<()> {
        let mut w = self.file(name)?;
        tr.write_csv(&mut w, &self.header_with(extra))?;
        self.finish(w, name)
    }

    fn finish(&self, mut w: BufWriter<File>, name: &str) -> Result<()> {
        w.flush()
            .map_err(|e| CliError::Io(format!("{}: {e}", self.path(name).display())))
    }

    fn reduced(&self, m: f64) -> ReducedSetup {
        let c = self.cfg;
        ReducedSetup {
            temperature: c.temperature,
            m,
            dt: c.dt,
            steps: c.steps,
            record_every: c.record_every,
            stiff: if c.stiff { c.chi.zip(c.delta) } else { None },
        }
    }

    fn lattice(&self) -> Result<LatticeBathSpec> {
        let c = self.cfg;
        Ok(match c.eta {
            Some(eta) => LatticeBathSpec::new(c.nbar, c.c, eta, c.m)?,
            None => LatticeBathSpec::with_default_eta(c.nbar, c.c, c.m)?,
        })
    }

    fn coupling(&self) -> Result<CouplingSpec> {
        let read = |p: &PathBuf| fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())));
        Ok(match &self.cfg.coupling {
            CouplingSource::Example => CouplingSpec::example(),
            CouplingSource::Forces(p) => CouplingSpec::Forces(ForceTable::parse(&read(p)?)?),
            CouplingSource::BetaGrid(p) => CouplingSpec::Beta(BetaFunction::from_grid(BetaGrid::parse_csv(&read(p)?)?)),
        })
    }

    fn kernel(&self) -> Result<Box<dyn MemoryKernel + Sync>> {
        let coupling = self.coupling()?;
        Ok(match self.cfg.kernel_mode {
            KernelEvalMode::Analytic => {
                heatbath::kernel::ExampleBeta::check_stiffness(self.cfg.c)?;
                Box::new(SincKernel::example(coupling.dim()))
            }
            KernelEvalMode::Quadrature => Box::new(LimitKernel::new(coupling, self.cfg.c)?),
            KernelEvalMode::Finite => Box::new(FiniteKernel::new(&self.lattice()?, &coupling)?),
        })
    }
}

pub fn run(cfg: &Config, timestamp: bool) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    let mut header = Provenance::new().with("heatbath_version", env!("CARGO_PKG_VERSION"));
    if timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        header.push("created_unix", secs);
    }
    header.extend(&cfg.provenance());
    let ctx = Ctx { cfg, header };
    let resolved = ctx.path("config.toml");
    fs::write(&resolved, cfg.to_toml()).map_err(|e| CliError::Io(format!("{}: {e}", resolved.display())))?;
    match cfg.kind.expect("kind is set before running") {
        Kind::KernelEval => kernel_eval(&ctx),
        Kind::Kappa => kappa(&ctx),
        Kind::NoiseSample => noise_sample(&ctx),
        Kind::SimGle => sim_reduced(&ctx, Method::Gle),
        Kind::SimLangevin => sim_reduced(&ctx, Method::Langevin),
        Kind::SimBath => sim_bath(&ctx),
        Kind::Compare => compare(&ctx),
        Kind::Fig(n) => reproduce(&ctx, n),
    }
}

fn pair_columns(prefix: &str, dim: usize) -> Vec<String> {
    let mut cols = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            cols.push(format!("{prefix}_{}{}", i + 1, j + 1));
        }
    }
    cols
}

fn kernel_eval(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let kernel = ctx.kernel()?;
    let dim = kernel.dim();
    let count = (cfg.tau_max / cfg.tau_step).round() as usize;
    let rows: Vec<Vec<f64>> = (0..=count)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let tau = i as f64 * cfg.tau_step;
            let k = kernel.eval(tau)?;
            let mut row = vec![tau];
            for a in 0..dim {
                for b in a..dim {
                    row.push(k[(a, b)]);
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut columns = vec!["tau".to_string()];
    columns.extend(pair_columns("K", dim));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let extra = Provenance::new().with("kernel_mode", format!("{:?}", kernel.mode()));
    ctx.table("kernel.csv", &extra, &cols, rows)?;
    println!(
        "kernel: {} lags written to {}",
        count + 1,
        ctx.path("kernel.csv").display()
    );
    if cfg.tau_max > 1.0 {
        match kernel_decay_diagnostic(kernel.as_ref(), cfg.tau_max, cfg.tau_step)? {
            DecayDiagnostic::Fitted { exponent, maxima, .. } => {
                println!(
                    "decay: |K(tau)| ~ tau^{exponent:.3} over [1, {}] ({maxima} maxima)",
                    cfg.tau_max
                )
            }
            DecayDiagnostic::Degenerate(why) => println!("decay: undefined ({why})"),
        }
    }
    Ok(())
}

fn kappa(ctx: &Ctx) -> Result<()> {
    let coupling = ctx.coupling()?;
    let kappa = match &coupling {
        CouplingSpec::Forces(t) => friction_from_forces(t, ctx.cfg.c)?,
        _ => friction_from_beta(&coupling, ctx.cfg.c)?,
    };
    let m = kappa.matrix();
    let n = m.nrows();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let mut row = vec![(r + 1) as f64];
            row.extend((0..n).map(|c| m[(r, c)]));
            row
        })
        .collect();
    let mut columns = vec!["row".to_string()];
    columns.extend((1..=n).map(|c| format!("kappa_{c}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let extra = Provenance::new().with("provenance", format!("{:?}", kappa.provenance()));
    ctx.table("kappa.csv", &extra, &cols, rows.clone())?;
    for row in &rows {
        let vals: Vec<String> = row[1..].iter().map(|v| format!("{v:.15}")).collect();
        println!("{}", vals.join(" "));
    }
    Ok(())
}

fn noise_sample(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let seeds = ctx.seeds("noise-sample");
    let max_lag = cfg.steps.min(200);
    let (paths, method): (Vec<NoisePath>, &str) = if cfg.kernel_mode == KernelEvalMode::Finite {
        let spec = ctx.lattice()?;
        let coupling = ctx.coupling()?;
        let bath = HeatBath::new(&spec, &coupling)?;
        let paths = (0..cfg.paths)
            .into_par_iter()
            .map(|i| -> Result<NoisePath> {
                let sample = bath.sample_initial(cfg.temperature, &mut seeds.rng(i as u64))?;
                Ok(spectral_noise_finite(
                    &spec, &coupling, cfg.dt, cfg.steps, &sample, i as u64,
                )?)
            })
            .collect::<Result<_>>()?;
        (paths, "spectral")
    } else {
        let kernel = ctx.kernel()?;
        let sampler = ToeplitzSampler::new(kernel.as_ref(), cfg.dt, cfg.steps, cfg.temperature, cfg.m)?;
        let paths = (0..cfg.paths)
            .into_par_iter()
            .map(|i| sampler.sample(&mut seeds.rng(i as u64), i as u64))
            .collect();
        (paths, "toeplitz")
    };
    let dim = paths[0].dim;
    let extra = Provenance::new().with("method", method);

    let mut rows = Vec::with_capacity(paths.len() * (cfg.steps + 1));
    for (i, z) in paths.iter().enumerate() {
        for t in 0..=cfg.steps {
            let mut row = vec![i as f64, t as f64 * cfg.dt];
            row.extend_from_slice(z.at(t));
            rows.push(row);
        }
    }
    let mut columns = vec!["path".to_string(), "t".to_string()];
    columns.extend((1..=dim).map(|l| format!("zeta_{l}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    ctx.table("noise.csv", &extra, &cols, rows)?;

    // lag covariance of the first component, time-averaged per path
    let target_kernel = if cfg.kernel_mode == KernelEvalMode::Finite {
        None
    } else {
        Some(ctx.kernel()?)
    };
    let mut cov_rows = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let per_path: Vec<f64> = paths
            .iter()
            .map(|z| {
                let count = cfg.steps + 1 - lag;
                (0..count).map(|t| z.at(t)[0] * z.at(t + lag)[0]).sum::<f64>() / count as f64
            })
            .collect();
        let (mean, se) = mean_stderr(&per_path);
        let target = match &target_kernel {
            Some(k) => cfg.temperature * k.eval(lag as f64 * cfg.dt / cfg.m.sqrt())?[(0, 0)],
            None => f64::NAN,
        };
        cov_rows.push(vec![lag as f64 * cfg.dt, mean, se, target]);
    }
    ctx.table(
        "noise_covariance.csv",
        &extra,
        &["lag", "covariance", "stderr", "target"],
        cov_rows.clone(),
    )?;
    if target_kernel.is_some() {
        let worst = cov_rows
            .iter()
            .filter(|r| r[2] > 0.0)
            .map(|r| (r[1] - r[3]).abs() / r[2])
            .fold(0.0, f64::max);
        println!(
            "noise: {} paths; max |cov - T K| / stderr over {} lags = {worst:.2}",
            paths.len(),
            max_lag + 1
        );
    } else {
        println!("noise: {} paths written", paths.len());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Gle,
    Langevin,
}

impl Method {
    fn name(&self) -> &'static str {
        match self {
            Method::Gle => "gle",
            Method::Langevin => "langevin",
        }
    }
}

fn final_values(trajs: &[Trajectory], var: Variable) -> Vec<f64> {
    trajs
        .iter()
        .map(|t| match var {
            Variable::Position => t.last_x()[0],
            Variable::Momentum => t.last_p()[0],
        })
        .collect()
}

fn var_name(var: Variable) -> &'static str {
    match var {
        Variable::Position => "x",
        Variable::Momentum => "p",
    }
}

fn fixed_bins(cfg: &Config) -> BinSpec {
    BinSpec::Uniform {
        lo: -cfg.hist_range,
        hi: cfg.hist_range,
        bins: cfg.bins,
    }
}

fn write_histogram(ctx: &Ctx, name: &str, extra: &Provenance, values: &[f64]) -> Result<()> {
    let h = histogram(values, &fixed_bins(ctx.cfg))?;
    let extra = extra
        .clone()
        .with("underflow", h.underflow)
        .with("overflow", h.overflow);
    let mut w = ctx.file(name)?;
    h.write_csv(&mut w, &ctx.header_with(&extra))?;
    ctx.finish(w, name)
}

fn ensemble(ctx: &Ctx, setup: &ReducedSetup, method: Method, tag: &str) -> Result<Vec<Trajectory>> {
    let seeds = ctx.seeds(tag);
    Ok(match method {
        Method::Gle => GleEnsemble::new(setup, ctx.cfg.rule)?.run(ctx.cfg.paths, &seeds, DEFAULT_BATCH)?,
        Method::Langevin => langevin_ensemble(setup, ctx.cfg.paths, &seeds)?,
    })
}

fn sim_reduced(ctx: &Ctx, method: Method) -> Result<()> {
    let cfg = ctx.cfg;
    let setup = ctx.reduced(cfg.m);
    let trajs = ensemble(ctx, &setup, method, &format!("sim-{}", method.name()))?;
    let name = method.name();
    let mut extra = Provenance::new().with("method", name);
    if method == Method::Gle {
        extra.push("rule", cfg.rule.name());
    }
    ctx.trajectory(&format!("{name}_path0.csv"), &extra, &trajs[0])?;
    let rows: Vec<Vec<f64>> = trajs
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i as f64, t.last_x()[0], t.last_p()[0]])
        .collect();
    ctx.table(&format!("{name}_final.csv"), &extra, &["path", "X", "P"], rows)?;
    let bins = default_gof_bins(trajs.len());
    for var in [Variable::Position, Variable::Momentum] {
        let v = var_name(var);
        let values = final_values(&trajs, var);
        write_histogram(ctx, &format!("{name}_hist_{v}.csv"), &extra, &values)?;
        let curve = autocorr_samples(&trajs, 0, var, cfg.t_ref)?.curve();
        ctx.curve(&format!("{name}_autocorr_{v}.csv"), &extra, &curve)?;
        let (var_est, se) = variance_stderr(&values);
        let sd = setup.stationary_variance().sqrt();
        let fit = if trajs.len() >= 2 * bins && sd > 0.0 {
            format!(
                ", chi2 p-value vs N(0,{:.4}) = {:.3e}",
                sd * sd,
                chi_square_normal(&values, 0.0, sd, bins)?.p_value
            )
        } else {
            String::new()
        };
        println!("{name}: final Var {} = {var_est:.4} +- {se:.4}{fit}", v.to_uppercase());
    }
    Ok(())
}

fn sim_bath(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let spec = ctx.lattice()?;
    let coupling = ctx.coupling()?;
    let bath = HeatBath::new(&spec, &coupling)?;
    let dim = bath.dim();
    let potential = Harmonic::unit(dim);
    let seeds = ctx.seeds("sim-bath");
    let sd = cfg.temperature.sqrt();
    let run_cfg = BathRunConfig {
        potential: &potential,
        dt: cfg.dt,
        steps: cfg.steps,
        record_every: cfg.record_every,
        frozen_system: false,
        mode_dump_steps: vec![cfg.steps],
    };
    use rand_like::normal;
    let runs: Vec<_> = (0..cfg.paths)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let mut rng = seeds.rng(i as u64);
            let x0: Vec<f64> = (0..dim).map(|_| sd * normal(&mut rng)).collect();
            let p0: Vec<f64> = (0..dim).map(|_| sd * normal(&mut rng)).collect();
            let sample = bath.sample_initial(cfg.temperature, &mut rng)?;
            let run = bath.run(&run_cfg, &sample, &x0, &p0)?;
            Ok((x0, p0, sample, run))
        })
        .collect::<Result<_>>()?;

    let extra = Provenance::new().with("method", "bath").with("modes", spec.n_modes());
    let (x0, p0, sample, first) = &runs[0];
    ctx.trajectory("bath_path0.csv", &extra, &first.trajectory)?;
    let times = first.trajectory.times();
    ctx.table(
        "bath_energy.csv",
        &extra,
        &["t", "energy"],
        times.iter().zip(&first.energy).map(|(t, e)| vec![*t, *e]).collect(),
    )?;
    if let Some(dump) = first.mode_dumps.last() {
        let mut w = ctx.file("bath_modes.csv")?;
        bath.write_mode_energies(&mut w, dump, &ctx.header_with(&extra.clone().with("t", dump.t)))?;
        ctx.finish(w, "bath_modes.csv")?;
    }

    // the same realization through the generalized Langevin equation
    let kernel = FiniteKernel::new(&spec, &coupling)?;
    let weights = DampingWeights::new(&kernel, cfg.dt, spec.m, cfg.steps, cfg.rule)?;
    let gle_cfg = GleConfig {
        potential: &potential,
        weights: &weights,
        steps: cfg.steps,
        record_every: cfg.record_every,
        truncation: None,
    };
    let noise = spectral_noise_finite(&spec, &coupling, cfg.dt, cfg.steps, sample, 0)?;
    let gle = gle_run(&gle_cfg, &noise, x0, p0)?;
    let mut rows = Vec::with_capacity(times.len());
    let mut worst: f64 = 0.0;
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![*t];
        row.extend_from_slice(first.trajectory.x(i));
        row.extend_from_slice(gle.x(i));
        for (a, b) in first.trajectory.x(i).iter().zip(gle.x(i)) {
            worst = worst.max((a - b).abs());
        }
        rows.push(row);
    }
    let mut columns = vec!["t".to_string()];
    columns.extend((1..=dim).map(|l| format!("X_bath_{l}")));
    columns.extend((1..=dim).map(|l| format!("X_gle_{l}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    ctx.table(
        "bath_vs_gle.csv",
        &extra.clone().with("rule", cfg.rule.name()),
        &cols,
        rows,
    )?;

    let drift: Vec<f64> = runs
        .iter()
        .map(|(_, _, _, r)| (r.energy.last().unwrap() - r.energy[0]).abs() / r.energy[0].abs().max(1e-300))
        .collect();
    let worst_drift = drift.iter().cloned().fold(0.0, f64::max);
    let finals: Vec<Vec<f64>> = runs
        .iter()
        .enumerate()
        .map(|(i, (_, _, _, r))| {
            let mut row = vec![i as f64];
            row.extend_from_slice(r.trajectory.last_x());
            row.extend_from_slice(r.trajectory.last_p());
            row
        })
        .collect();
    let mut columns = vec!["path".to_string()];
    columns.extend((1..=dim).map(|l| format!("X_{l}")));
    columns.extend((1..=dim).map(|l| format!("P_{l}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    ctx.table("bath_final.csv", &extra, &cols, finals)?;
    println!(
        "bath: {} paths, {} modes; max relative energy change {worst_drift:.3e}; path 0 max |X_bath - X_gle| = {worst:.3e}",
        runs.len(),
        spec.n_modes()
    );
    Ok(())
}

mod rand_like {
    use heatbath::TrajectoryRng;
    use rand_distr::{Distribution, StandardNormal};

    pub fn normal(rng: &mut TrajectoryRng) -> f64 {
        StandardNormal.sample(rng)
    }
}

struct Pair {
    gle: Vec<Trajectory>,
    langevin: Vec<Trajectory>,
    coupled: bool,
}

fn pair(ctx: &Ctx, setup: &ReducedSetup, tag: &str) -> Result<Pair> {
    let cfg = ctx.cfg;
    if cfg.coupled {
        let ens = GleEnsemble::new(setup, cfg.rule)?;
        let (gle, langevin) = coupled_ensembles(&ens, cfg.paths, &ctx.seeds(tag), DEFAULT_BATCH)?;
        Ok(Pair {
            gle,
            langevin,
            coupled: true,
        })
    } else {
        Ok(Pair {
            gle: ensemble(ctx, setup, Method::Gle, &format!("{tag}-gle"))?,
            langevin: ensemble(ctx, setup, Method::Langevin, &format!("{tag}-langevin"))?,
            coupled: false,
        })
    }
}

fn distance(a: &ProductSamples, b: &ProductSamples, coupled: bool) -> Result<Estimate> {
    Ok(ensemble_curve_distance(a, b, None, coupled)?)
}

fn write_curve_pair(ctx: &Ctx, name: &str, extra: &Provenance, a: &Curve, b: &Curve) -> Result<()> {
    let rows = (0..a.t.len())
        .map(|i| vec![a.t[i], a.value[i], a.stderr[i], b.value[i], b.stderr[i]])
        .collect();
    ctx.table(
        name,
        extra,
        &["t", "gle", "gle_stderr", "langevin", "langevin_stderr"],
        rows,
    )
}

fn compare(ctx: &Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let setup = ctx.reduced(cfg.m);
    let p = pair(ctx, &setup, "compare")?;
    let extra = Provenance::new()
        .with("rule", cfg.rule.name())
        .with("coupled", p.coupled);
    for var in [Variable::Position, Variable::Momentum] {
        let v = var_name(var);
        let a = autocorr_samples(&p.gle, 0, var, cfg.t_ref)?;
        let b = autocorr_samples(&p.langevin, 0, var, cfg.t_ref)?;
        write_curve_pair(
            ctx,
            &format!("compare_autocorr_{v}.csv"),
            &extra,
            &a.curve(),
            &b.curve(),
        )?;
        let d = distance(&a, &b, p.coupled)?;
        println!(
            "compare: autocorrelation distance ({v}) = {:.5} +- {:.5}",
            d.value, d.stderr
        );
    }
    let g = |t: &Trajectory| t.last_x()[0] * t.last_p()[0];
    let ga: Vec<f64> = p.gle.iter().map(g).collect();
    let gb: Vec<f64> = p.langevin.iter().map(g).collect();
    let w = if p.coupled {
        weak_error_paired(&ga, &gb)?
    } else {
        weak_error(&ga, &gb)?
    };
    println!(
        "compare: weak error of X*P at t = {} is {:.5} +- {:.5}",
        setup.final_time(),
        w.value,
        w.stderr
    );
    Ok(())
}

fn mass_tag(m: f64) -> String {
    format!("{m}")
}

fn reproduce(ctx: &Ctx, fig: u8) -> Result<()> {
    let cfg = ctx.cfg;
    let var = if fig % 2 == 1 {
        Variable::Position
    } else {
        Variable::Momentum
    };
    let v = var_name(var);
    let mut summary = Vec::new();
    for &m in &cfg.masses {
        let setup = ctx.reduced(m);
        let tag = format!("reproduce-m={}", mass_tag(m));
        let p = pair(ctx, &setup, &tag)?;
        let extra = Provenance::new()
            .with("figure", fig)
            .with("m", m)
            .with("rule", cfg.rule.name())
            .with("coupled", p.coupled);
        if fig <= 2 {
            let a = final_values(&p.gle, var);
            let b = final_values(&p.langevin, var);
            write_histogram(ctx, &format!("fig{fig}_m{}_gle.csv", mass_tag(m)), &extra, &a)?;
            write_histogram(ctx, &format!("fig{fig}_m{}_langevin.csv", mass_tag(m)), &extra, &b)?;
            let (va, sa) = variance_stderr(&a);
            let (vb, sb) = variance_stderr(&b);
            let bins = default_gof_bins(a.len());
            let sd = setup.stationary_variance().sqrt();
            let (pa, pb) = if a.len() >= 2 * bins && sd > 0.0 {
                (
                    chi_square_normal(&a, 0.0, sd, bins)?.p_value,
                    chi_square_normal(&b, 0.0, sd, bins)?.p_value,
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            println!(
                "fig{fig} m={m}: Var {} gle {va:.4}+-{sa:.4}, langevin {vb:.4}+-{sb:.4}",
                v.to_uppercase()
            );
            summary.push(vec![m, va, sa, vb, sb, pa, pb]);
        } else {
            let a = autocorr_samples(&p.gle, 0, var, cfg.t_ref)?;
            let b = autocorr_samples(&p.langevin, 0, var, cfg.t_ref)?;
            write_curve_pair(
                ctx,
                &format!("fig{fig}_m{}.csv", mass_tag(m)),
                &extra,
                &a.curve(),
                &b.curve(),
            )?;
            let d = distance(&a, &b, p.coupled)?;
            println!(
                "fig{fig} m={m}: autocorrelation distance {:.5} +- {:.5}",
                d.value, d.stderr
            );
            summary.push(vec![m, d.value, d.stderr]);
        }
    }
    let extra = Provenance::new().with("figure", fig);
    if fig <= 2 {
        ctx.table(
            &format!("fig{fig}_summary.csv"),
            &extra,
            &[
                "m",
                "var_gle",
                "var_gle_stderr",
                "var_langevin",
                "var_langevin_stderr",
                "chi2_p_gle",
                "chi2_p_langevin",
            ],
            summary,
        )
    } else {
        ctx.table(
            &format!("fig{fig}_distance.csv"),
            &extra,
            &["m", "distance", "stderr"],
            summary,
        )
    }
}
