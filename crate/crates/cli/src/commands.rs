use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use landau_core::characteristics::{flow_diagnostics, geometric_ladder, FieldSampler, FlowConfig, SpatialInterp};
use landau_core::density_solver::{reconstruct_f, scattering_profile, DensitySolver, InitialData, Solution, SolverConfig};
use landau_core::equilibria::{penrose_margin, EquilibriumProfile, PenroseScanConfig, RadialTable};
use landau_core::linear_response::{linear_density_evolve, LinearEvolveConfig, ModeResolvent};
use landau_core::norms::{besov_seminorm, fit_decay_exponent, trajectory_norm, Exponent, NormReport, ShiftSet};
use landau_core::snapshot::{read_any_as_density, write_field, write_phase};
use landau_core::spacetime::{TimeGrid, VelocityGrid};
use landau_core::spectral_field::SemilinearConfig;
use landau_core::{NonlinearityA, PeriodicGrid, ScalarField2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{EquilibriumKind, ExperimentConfig};
use crate::report::RunReport;

pub const SUBCOMMANDS: [&str; 6] = ["penrose", "linear", "flow", "simulate", "norms", "scatter"];

/// Runs one subcommand, writes its artifacts and `report.txt` into `out`.
pub fn run_subcommand(name: &str, cfg: &ExperimentConfig, out: &Path) -> Result<RunReport> {
    let start = Instant::now();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut report = RunReport::new(name, cfg.hash());
    report.warnings = cfg.warnings();
    match name {
        "penrose" => penrose(cfg, out, &mut report),
        "linear" => linear(cfg, out, &mut report),
        "flow" => flow(cfg, out, &mut report),
        "simulate" => simulate(cfg, out, &mut report),
        "scatter" => scatter(cfg, out, &mut report),
        "norms" => bail!("`norms` works on a snapshot; use `landau-lab norms --snapshot <file>`"),
        other => bail!("unknown subcommand `{other}`"),
    }
    .with_context(|| format!("{name} failed"))?;
    report.wall_time = start.elapsed();
    fs::write(out.join("report.txt"), report.to_text())?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    Ok(report)
}

pub fn build_profile(cfg: &ExperimentConfig) -> Result<EquilibriumProfile> {
    let e = &cfg.equilibrium;
    let mut p = match e.kind {
        EquilibriumKind::Maxwellian => EquilibriumProfile::maxwellian_with_width(e.width),
        EquilibriumKind::TwoBump => EquilibriumProfile::two_bump(e.u0, e.width),
        EquilibriumKind::Tabulated => {
            let path = e.table.as_ref().expect("validated");
            let text = fs::read_to_string(path).with_context(|| format!("reading table {}", path.display()))?;
            let table = RadialTable::parse(&text, true).context("equilibrium.table")?;
            return Ok(EquilibriumProfile::tabulated(table, e.v_max, e.decay_order).context("equilibrium")?);
        }
    };
    p.v_max = e.v_max;
    Ok(p)
}

fn grids(cfg: &ExperimentConfig) -> Result<(PeriodicGrid, VelocityGrid, TimeGrid)> {
    let g = &cfg.grid;
    let x = PeriodicGrid::new(g.l, g.n).context("grid")?;
    let v = VelocityGrid::new(g.nv, g.v_max).context("grid")?;
    let t = TimeGrid::from_step(cfg.time.horizon, cfg.time.dt).context("time")?;
    Ok((x, v, t))
}

fn initial_data(cfg: &ExperimentConfig) -> Result<InitialData> {
    let i = &cfg.initial_data;
    if i.epsilon == 0.0 {
        return Ok(InitialData::zero());
    }
    Ok(InitialData::gaussian(i.epsilon, i.sigma_x, i.sigma_v).context("initial_data")?.with_center(i.center))
}

fn shifts(cfg: &ExperimentConfig) -> Result<ShiftSet> {
    Ok(ShiftSet::new(cfg.norms.shift_scale / 4.0, cfg.norms.shift_levels).context("norms")?)
}

fn nonlinearity(cfg: &ExperimentConfig) -> Result<NonlinearityA> {
    Ok(NonlinearityA::from_name(&cfg.nonlinearity.kind).context("nonlinearity.kind")?)
}

fn create(out: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    let path = out.join(name);
    Ok(BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn field_norms(f: &ScalarField2D, a: f64, shifts: &ShiftSet) -> Result<[f64; 4]> {
    Ok([
        f.l1_norm(),
        f.sup_norm(),
        besov_seminorm(f, a, Exponent::One, shifts)?,
        besov_seminorm(f, a, Exponent::Infinity, shifts)?,
    ])
}

fn penrose(cfg: &ExperimentConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let profile = build_profile(cfg)?;
    let mut scan_cfg = PenroseScanConfig::default();
    if profile.is_radial() {
        scan_cfg.n_directions = 1;
    } else {
        scan_cfg.n_directions = 8;
    }
    let scan = penrose_margin(&profile, &scan_cfg)?;
    scan.write_csv(create(out, "penrose.csv")?)?;
    report.constant("penrose_margin", scan.margin, "equilibria::penrose_margin");
    report.note("argmin_tau", scan.argmin.0);
    report.note("argmin_xi", scan.argmin.1);
    report.note("refinement_history", format!("{:?}", scan.history));
    Ok(())
}

fn linear(cfg: &ExperimentConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let profile = build_profile(cfg)?;
    let (grid, _, times) = grids(cfg)?;
    let f0 = initial_data(cfg)?;
    let sh = shifts(cfg)?;
    let traj = linear_density_evolve(
        Some(&profile),
        |xi, t| f0.fourier(xi, [t * xi[0], t * xi[1]]),
        grid,
        times,
        LinearEvolveConfig { output_stride: cfg.time.output_stride },
    )?;
    let rho = &traj.rho;
    let mut w = create(out, "rho_norms.csv")?;
    let mut csv = String::from("# landau-lab v1\nt,L1,Linf,besov_a_L1,besov_a_Linf\n");
    let mut linf = Vec::new();
    let mut l1 = Vec::new();
    for (t, slice) in rho.times.nodes().zip(&rho.slices) {
        let n = field_norms(slice, cfg.norms.a, &sh)?;
        let _ = writeln!(csv, "{t},{},{},{},{}", n[0], n[1], n[2], n[3]);
        l1.push((t, n[0]));
        linf.push((t, n[1]));
    }
    std::io::Write::write_all(&mut w, csv.as_bytes())?;
    let window = (5.0f64.min(cfg.time.horizon / 4.0), cfg.time.horizon);
    if let Ok(fit) = fit_decay_exponent(&linf, window) {
        report.constant("linf_decay_exponent", fit.exponent, "norms::fit_decay_exponent on rho_norms.csv Linf");
        report.constant("linf_decay_confidence", fit.confidence, "norms::fit_decay_exponent on rho_norms.csv Linf");
    }
    if let Ok(fit) = fit_decay_exponent(&l1, window) {
        report.constant("l1_decay_exponent", fit.exponent, "norms::fit_decay_exponent on rho_norms.csv L1");
    }
    // per-mode kernels and resolvents for the lowest modes along the first axis
    let mut residual = 0.0f64;
    for k in 1..=cfg.output.per_mode_csv.min(grid.n / 2) {
        let idx = k * grid.n;
        let mode = ModeResolvent::build(&profile, grid.xi(idx), &times)?;
        residual = residual.max(mode.identity_residual(times.dt()));
        mode.write_csv(&times, create(out, &format!("mode_{k}_0.csv"))?)?;
    }
    report.constant("resolvent_identity_residual", residual, "linear_response::ModeResolvent::identity_residual");
    Ok(())
}

/// Seeded sample of `(x', v)` points: `x'` uniform in the box, `v` uniform in the disk of radius 3.
fn sample_points(cfg: &ExperimentConfig, grid: &PeriodicGrid) -> Vec<([f64; 2], [f64; 2])> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.seed);
    let l = grid.half_length;
    (0..cfg.solver.flow_points)
        .map(|_| {
            let x = [rng.gen_range(-l..l), rng.gen_range(-l..l)];
            let r = 3.0 * rng.gen::<f64>().sqrt();
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            (x, [r * th.cos(), r * th.sin()])
        })
        .collect()
}

fn flow(cfg: &ExperimentConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let profile = build_profile(cfg)?;
    let (grid, _, times) = grids(cfg)?;
    let f0 = initial_data(cfg)?;
    let sh = shifts(cfg)?;
    // the driving density is the linear response to the configured data
    let g = linear_density_evolve(
        Some(&profile),
        |xi, t| f0.fourier(xi, [t * xi[0], t * xi[1]]),
        grid,
        times,
        LinearEvolveConfig::default(),
    )?
    .rho;
    let g_norm = trajectory_norm(&g, 1, cfg.norms.a, &sh)?.total;
    let sampler = FieldSampler::from_density(&g, SpatialInterp::CubicSpline);
    let t = times.end();
    let diag = flow_diagnostics(&sampler, t, &geometric_ladder(t), &sample_points(cfg, &grid), &sh, cfg.norms.a, &FlowConfig::default())?;
    diag.write_csv(create(out, "flow_diagnostics.csv")?)?;
    report.constant("g_norm", g_norm, "norms::trajectory_norm of the driving density");
    let names = landau_core::characteristics::DIAGNOSTIC_NAMES;
    let ratios = if g_norm > 0.0 { diag.ratios(g_norm) } else { [0.0; 7] };
    for (n, r) in names.iter().zip(ratios) {
        report.constant(&format!("{n}_over_g"), r, "characteristics::flow_diagnostics");
    }
    Ok(())
}

fn solver_config(cfg: &ExperimentConfig) -> Result<SolverConfig> {
    let (x, v, _) = grids(cfg)?;
    let mut s = SolverConfig::new(x, v, cfg.time.dt, cfg.time.slab, cfg.time.horizon)?;
    s.holder = cfg.norms.a;
    s.picard_tol = cfg.solver.tol;
    s.max_picard = cfg.solver.max_picard;
    s.eps1 = cfg.solver.eps1;
    s.eps2 = cfg.solver.eps2;
    s.shifts = shifts(cfg)?;
    s.semilinear = SemilinearConfig { tol: cfg.solver.field_tol, gate: cfg.solver.field_gate, ..SemilinearConfig::default() };
    Ok(s)
}

fn run_solver(cfg: &ExperimentConfig, profile: &EquilibriumProfile, report: &mut RunReport) -> Result<(SolverConfig, InitialData, Solution)> {
    let scfg = solver_config(cfg)?;
    let f0 = initial_data(cfg)?;
    let solver = DensitySolver::new(scfg.clone(), f0, profile, nonlinearity(cfg)?)?;
    let sol = solver.continuation()?;
    report.status = sol.state.status.label().to_string();
    report.note("horizon_reached", sol.state.horizon);
    report.note("breach", match &sol.state.status {
        landau_core::density_solver::BootstrapStatus::ThresholdBreach(r) => r.clone(),
        _ => "none".into(),
    });
    report.note("picard_iterates", sol.slabs.iter().map(|s| s.updates.len().to_string()).collect::<Vec<_>>().join(" "));
    let triple = f0.triple_norm(scfg.holder, scfg.x_grid, scfg.v_grid, &scfg.shifts)?.total;
    report.constant("initial_density_norm", sol.initial_norm, "density_solver smallness gate");
    report.constant("triple_norm_f0", triple, "norms::triple_norm_initial");
    report.constant("ledger_max", sol.ledger_total(), "density_solver continuation ledger");
    report.constant("C1", if triple > 0.0 { sol.ledger_total() / triple } else { 0.0 }, "ledger_max / triple_norm_f0");
    report.constant("C2", sol.local_constant(), "ledger_max / initial_density_norm");
    report.constant("mass_drift", sol.mass_drift(), "density_solver ledger mass");
    Ok((scfg, f0, sol))
}

fn simulate(cfg: &ExperimentConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let profile = build_profile(cfg)?;
    let (scfg, f0, sol) = run_solver(cfg, &profile, report)?;
    let mut csv = String::from("# landau-lab v1\nt,L1,Linf,rho_ledger,u_ledger,mass\n");
    for r in &sol.ledger {
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.t, r.rho_l1, r.rho_linf, r.rho_norm, r.u_norm, r.mass);
    }
    fs::write(out.join("rho_norms.csv"), csv)?;
    if cfg.output.snapshots {
        let last = sol.rho.slices.len() - 1;
        let t = sol.rho.times.node(last);
        write_field(&mut create(out, "rho_final.vpf")?, &sol.rho.slices[last], t)?;
        let snap = reconstruct_f(&sol.flows(), &f0, &profile, scfg.v_grid, last)?;
        write_phase(&mut create(out, "f_final.vpf")?, &snap)?;
    }
    Ok(())
}

fn scatter(cfg: &ExperimentConfig, out: &Path, report: &mut RunReport) -> Result<()> {
    let profile = build_profile(cfg)?;
    let (scfg, f0, sol) = run_solver(cfg, &profile, report)?;
    let triple = report.get("triple_norm_f0").unwrap_or(0.0);
    let prof = scattering_profile(&sol.flows(), &f0, &profile, scfg.v_grid, 1.0)?;
    let mut csv = String::from("# landau-lab v1\nt,d,weighted_d\n");
    for (t, d) in &prof.decay {
        let _ = writeln!(csv, "{t},{d},{}", (1.0 + t * t).sqrt() * d);
    }
    fs::write(out.join("scattering.csv"), csv)?;
    report.constant("Y_inf_sup", prof.y_inf_sup, "density_solver::scattering_profile");
    report.constant("W_inf_sup", prof.w_inf_sup, "density_solver::scattering_profile");
    report.constant("limit_change", prof.limit_change, "density_solver::scattering_profile");
    let c = if triple > 0.0 { (prof.y_inf_sup + prof.w_inf_sup) / triple } else { 0.0 };
    report.constant("C_scatter", c, "(Y_inf_sup + W_inf_sup) / triple_norm_f0");
    if cfg.output.snapshots {
        write_phase(&mut create(out, "f_inf.vpf")?, &prof.f_inf)?;
    }
    Ok(())
}

/// Itemized norms of a stored field or phase-space snapshot.
pub fn snapshot_norms(path: &Path, a: f64, shift_scale: f64, out: Option<&PathBuf>) -> Result<NormReport> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let snap = read_any_as_density(&bytes)?;
    let sh = ShiftSet::standard(shift_scale)?;
    let n = field_norms(&snap.field, a, &sh)?;
    let names = ["L1", "Linf", "besov_a_L1", "besov_a_Linf"];
    let report = NormReport::new(names.iter().map(|s| s.to_string()).zip(n).collect(), a)
        .with_horizon(snap.time)
        .with_shifts(sh);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("norms.csv"), report.to_csv())?;
    }
    Ok(report)
}
