//! The five subcommands. Each returns a report; CSV side outputs go to `out`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;

use sck_core::hjb_fd::{
    antidiagonal_width, extract_free_boundary_1d, extract_free_boundary_2d, sample, solve_vi_1d,
    solve_vi_2d, write_frontier_csv, write_solution_1d_csv, write_solution_2d_csv, EdgeRule,
    FdOptions, Grid1D, Grid2D, Problem1D,
};
use sck_core::model::cost::RunningCost;
use sck_core::model::game::{GameSpec, Payoff};
use sck_core::model::resolvent::Resolvent;
use sck_core::reduction::{demand_constant, reduce_central, reduce_two_player};
use sck_core::sde::{
    compare_policies, estimate_cost, simulate_separable, simulate_two_player,
    simulate_uncontrolled, write_paths_csv, write_summary_csv, BandPolicy, PathRecord, SimConfig,
    SummaryRow, TwoPlayerOptions, TwoPlayerPolicy,
};
use sck_core::thresholds::{product_thresholds, solve_threshold, ThresholdOptions};
use sck_core::valuefn::{NashValue, PiecewiseValue, SeparableValue};
use sck_core::Error;

use crate::config::{CostConfig, Model, OneD, ProblemConfig, RunConfig, SweepParameter};
use crate::error::CliError;
use crate::report::Report;

/// Smooth-pasting and complementarity tolerances.
const PASTE_FIRST_TOL: f64 = 1e-8;
const PASTE_SECOND_TOL: f64 = 1e-6;
const HJB_INTERIOR_TOL: f64 = 1e-8;
const HJB_GRADIENT_TOL: f64 = 1e-10;
const HJB_POINTS: usize = 1000;
/// Allowed Euler bias in the Monte Carlo check, relative to the analytic value.
const MC_BUDGET: f64 = 0.005;

type Out<T> = Result<T, CliError>;

fn csv_file(dir: &Path, name: &str) -> Out<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

fn fd_options(cfg: &RunConfig) -> FdOptions {
    FdOptions {
        tol: cfg.solver.fd_tol,
        max_iter: cfg.solver.max_iter,
    }
}

fn two_player_options(cfg: &RunConfig) -> TwoPlayerOptions {
    TwoPlayerOptions {
        convention: cfg.solver.sigma_convention.into(),
        split: cfg.solver.split.into(),
        thresholds: cfg.solver.thresholds(),
    }
}

/// A symmetric one-dimensional band problem with a closed-form solution.
struct Reduced {
    sigma: f64,
    rho: f64,
    /// Pareto (or single-agent) effective cost.
    k_eff: f64,
    /// Per-player cost for the Nash band when the players are symmetric.
    nash_k: Option<f64>,
    cost: RunningCost,
    x0: f64,
}

impl Reduced {
    fn resolvent(&self) -> Out<Resolvent> {
        Ok(Resolvent::new(self.cost.clone(), self.sigma, self.rho)?)
    }

    fn value(&self, opts: &ThresholdOptions) -> Out<PiecewiseValue> {
        Ok(PiecewiseValue::solve(self.resolvent()?, self.k_eff, opts)?)
    }
}

fn closed_form_1d(p: &OneD) -> Result<Reduced, Error> {
    if p.k_plus != p.k_minus {
        return Err(Error::AsymmetricCost {
            k_plus: p.k_plus,
            k_minus: p.k_minus,
        });
    }
    if p.mu != 0.0 {
        return Err(Error::InvalidInput(
            "nonzero drift has no closed-form band".into(),
        ));
    }
    if !p.cost.is_symmetric_about_origin() {
        return Err(Error::InvalidInput(
            "closed-form band needs a running cost symmetric about 0".into(),
        ));
    }
    Ok(Reduced {
        sigma: p.sigma,
        rho: p.rho,
        k_eff: p.k_plus,
        nash_k: None,
        cost: p.cost.clone(),
        x0: p.x0,
    })
}

fn closed_form_two_player(cfg: &RunConfig, spec: &GameSpec, x0: &[f64]) -> Result<Reduced, Error> {
    let red = reduce_two_player(spec, [x0[0], x0[1]], cfg.solver.sigma_convention.into())?;
    let (k1, k2) = (spec.k_plus[0], spec.k_plus[1]);
    Ok(Reduced {
        sigma: red.problem.sigma_tilde,
        rho: red.problem.rho,
        k_eff: red.problem.k_eff,
        nash_k: (k1 == k2).then_some(k1),
        cost: red.problem.cost,
        x0: red.problem.x0,
    })
}

fn is_two_player_difference(spec: &GameSpec) -> bool {
    spec.players() == 2 && matches!(spec.payoff, Payoff::Difference(_))
}

/// Smooth-pasting and HJB-complementarity diagnostics of a closed-form value.
fn value_diagnostics(report: &mut Report, pv: &PiecewiseValue, prefix: &str) {
    let c = pv.threshold();
    let k = pv.k_eff();
    let edge = pv.eval(c);
    report.at_most(
        &format!("{prefix}smooth_pasting_first"),
        (edge.dv - k).abs(),
        PASTE_FIRST_TOL,
    );
    report.at_most(
        &format!("{prefix}smooth_pasting_second"),
        edge.d2v.abs(),
        PASTE_SECOND_TOL,
    );
    let (mut interior, mut gradient, mut off) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for x in linspace(-3.0 * c, 3.0 * c, HJB_POINTS) {
        let r = pv.hjb_residual(x);
        if x.abs() < c {
            interior = interior.max(r.interior.abs());
            off = off.max(r.gradient);
        } else if x.abs() > c {
            gradient = gradient.max(r.gradient.abs());
            off = off.max(r.interior);
        }
    }
    report.at_most(&format!("{prefix}hjb_interior"), interior, HJB_INTERIOR_TOL);
    report.at_most(&format!("{prefix}hjb_gradient"), gradient, HJB_GRADIENT_TOL);
    report.at_most(&format!("{prefix}hjb_off_branch"), off, HJB_INTERIOR_TOL);
}

fn value_grid(cfg: &RunConfig, c: f64) -> Vec<f64> {
    let half = cfg.solver.half_width.max(3.0 * c);
    linspace(-half, half, cfg.solver.value_points)
}

fn no_closed_form(e: Error) -> CliError {
    CliError::Solver(e)
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Out<Report> {
    let mut report = Report::new("solve", cfg);
    report.text("kind", cfg.problem.kind());
    let opts = cfg.solver.thresholds();
    let mut thresholds = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(csv_file(out, "thresholds.csv")?);
    thresholds.write_record(["name", "c", "k_eff", "residual"])?;

    match cfg.problem.build()? {
        Model::OneD(p) => match closed_form_1d(&p) {
            Ok(red) => {
                let pv = red.value(&opts)?;
                closed_form_report(&mut report, &pv, red.x0, "c");
                thresholds.write_record(row("c", pv.threshold(), pv.k_eff(), residual(&pv)?))?;
                pv.write_csv(
                    &value_grid(cfg, pv.threshold()),
                    csv_file(out, "value.csv")?,
                )?;
                value_diagnostics(&mut report, &pv, "");
            }
            Err(e) if cfg.solver.fd_fallback => {
                report.text("closed_form_unavailable", e.to_string());
                fd_1d_report(cfg, &mut report, &p, out, &mut thresholds)?;
            }
            Err(e) => return Err(no_closed_form(e)),
        },
        Model::Game { spec, x0 } => {
            report.int("players", spec.players());
            if spec.players() != 2 {
                return Err(CliError::Solver(Error::InvalidInput(format!(
                    "no solver for {} players; `simulate` runs the uncontrolled benchmark",
                    spec.players()
                ))));
            }
            let closed = if is_two_player_difference(&spec) {
                closed_form_two_player(cfg, &spec, &x0)
            } else {
                Err(Error::InvalidInput(
                    "closed form needs a payoff of x1 - x2".into(),
                ))
            };
            match closed {
                Ok(red) => {
                    let pv = red.value(&opts)?;
                    report.num("sigma_tilde", red.sigma);
                    closed_form_report(&mut report, &pv, red.x0, "c1");
                    thresholds.write_record(row(
                        "c1",
                        pv.threshold(),
                        pv.k_eff(),
                        residual(&pv)?,
                    ))?;
                    if let Some(k) = red.nash_k {
                        let nash = solve_threshold(&red.resolvent()?, k, &opts)?;
                        report.num("c2", nash.c);
                        report.num("gap", nash.c - pv.threshold());
                        thresholds.write_record(row("c2", nash.c, k, nash.residual))?;
                        report.above("nash_exceeds_pareto", nash.c - pv.threshold(), 0.0);
                    }
                    pv.write_csv(
                        &value_grid(cfg, pv.threshold()),
                        csv_file(out, "value.csv")?,
                    )?;
                    value_diagnostics(&mut report, &pv, "");
                }
                Err(e) if cfg.solver.fd_fallback => {
                    report.text("closed_form_unavailable", e.to_string());
                    fd_2d_report(cfg, &mut report, &spec, out)?;
                }
                Err(e) => return Err(no_closed_form(e)),
            }
        }
        Model::Investment(inv) => {
            let products = product_thresholds(&inv, cfg.solver.sigma_convention.into(), &opts)?;
            let red = reduce_central(&inv)?;
            let value = SeparableValue::solve(&inv, cfg.solver.sigma_convention.into(), &opts)?;
            let x0: Vec<f64> = red.products.iter().map(|p| p.x0).collect();
            report.num("reduced_value", value.eval(&x0)?);
            report.num("demand_constant", demand_constant(&inv));
            for (j, (pt, pv)) in products.iter().zip(&value.products).enumerate() {
                report.num(&format!("b_{j}"), pt.b());
                report.num(&format!("k_star_{j}"), pt.k_star);
                report.num(&format!("sigma_tilde_{j}"), pt.sigma_tilde);
                report.int(&format!("i_plus_{j}"), red.products[j].i_plus);
                report.int(&format!("i_minus_{j}"), red.products[j].i_minus);
                thresholds.write_record(row(
                    &format!("b_{j}"),
                    pt.b(),
                    pt.solution.k_eff,
                    pt.solution.residual,
                ))?;
                pv.write_csv(
                    &value_grid(cfg, pt.b()),
                    csv_file(out, &format!("value_product_{j}.csv"))?,
                )?;
                value_diagnostics(&mut report, pv, &format!("product_{j}_"));
            }
        }
    }
    thresholds.flush()?;
    Ok(report)
}

fn row(name: &str, c: f64, k: f64, residual: f64) -> [String; 4] {
    [
        name.into(),
        c.to_string(),
        k.to_string(),
        residual.to_string(),
    ]
}

fn residual(pv: &PiecewiseValue) -> Out<f64> {
    Ok(sck_core::thresholds::smoothing_residual(
        pv.threshold(),
        pv.resolvent(),
        pv.k_eff(),
    )?)
}

fn closed_form_report(report: &mut Report, pv: &PiecewiseValue, x0: f64, name: &str) {
    report.text("method", "closed_form");
    report.num(name, pv.threshold());
    report.num("k_eff", pv.k_eff());
    report.num("coefficient", pv.coefficient());
    report.num("x0", x0);
    report.num("value_x0", pv.value(x0));
}

fn fd_1d_report(
    cfg: &RunConfig,
    report: &mut Report,
    p: &OneD,
    out: &Path,
    thresholds: &mut csv::Writer<BufWriter<File>>,
) -> Out<()> {
    let grid = Grid1D::symmetric(cfg.solver.half_width, cfg.solver.grid)?;
    let problem = Problem1D {
        sigma: p.sigma,
        rho: p.rho,
        k_plus: p.k_plus,
        k_minus: p.k_minus,
        mu: p.mu,
    };
    let h = sample(&grid, |x| p.cost.value(x));
    let sol = solve_vi_1d(&grid, &h, &problem, &fd_options(cfg))?;
    let fb = extract_free_boundary_1d(&sol, p.k_plus, p.k_minus)?;
    report.text("method", "finite_difference");
    report.int("nodes", grid.n);
    report.num("spacing", grid.spacing());
    report.int("iterations", sol.log.len());
    report.num("fd_residual", sol.residual);
    report.opt("lower", fb.lower);
    report.opt("upper", fb.upper);
    report.num("x0", p.x0);
    report.num("value_x0", sol.interpolate(p.x0));
    for (name, b) in [("lower", fb.lower), ("upper", fb.upper)] {
        if let Some(b) = b {
            thresholds.write_record([name, &b.to_string(), "NA", &sol.residual.to_string()])?;
        }
    }
    let off = sol
        .branch_values
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    report.at_most("fd_residual", sol.residual, cfg.solver.fd_tol);
    report.at_most("fd_off_branch", off, cfg.solver.fd_tol);
    write_solution_1d_csv(&sol, csv_file(out, "value.csv")?)?;
    Ok(())
}

fn fd_2d_report(cfg: &RunConfig, report: &mut Report, spec: &GameSpec, out: &Path) -> Out<()> {
    let grid = Grid2D::square(cfg.solver.half_width, cfg.solver.grid_2d)?;
    let sol = solve_vi_2d(&grid, spec, EdgeRule::Auto, &fd_options(cfg))?;
    report.text("method", "finite_difference_2d");
    report.text("stencil", format!("{:?}", sol.method).to_lowercase());
    report.text("edge_rule", format!("{:?}", sol.edge_rule).to_lowercase());
    report.int("nodes_per_axis", grid.x1.n);
    report.int("iterations", sol.log.len());
    report.num("fd_residual", sol.residual);
    for (k, w) in sol.warnings.iter().enumerate() {
        report.text(&format!("warning_{k}"), w.clone());
    }
    if let Ok(width) = antidiagonal_width(&sol) {
        report.num("antidiagonal_width", width);
    }
    report.at_most("fd_residual", sol.residual, cfg.solver.fd_tol);
    write_solution_2d_csv(&sol, csv_file(out, "value_2d.csv")?)?;
    if let Ok(frontier) = extract_free_boundary_2d(&sol) {
        write_frontier_csv(&frontier, csv_file(out, "frontier.csv")?)?;
    }
    Ok(())
}

/// Adds the MC-vs-analytic delta in standard-error units.
fn mc_check(report: &mut Report, mean: f64, stderr: Option<f64>, analytic: f64) {
    report.num("analytic", analytic);
    report.num("mc_minus_analytic", mean - analytic);
    let budget = MC_BUDGET * analytic.abs();
    report.num("discretization_budget", budget);
    match stderr {
        Some(se) if se > 0.0 => {
            report.num("delta_se", (mean - analytic) / se);
            report.at_most("mc_vs_analytic", (mean - analytic).abs(), 3.0 * se + budget);
        }
        _ => {
            report.opt("delta_se", None);
            report.skipped("mc_vs_analytic", budget);
        }
    }
}

fn write_paths(out: &Path, recorded: &[PathRecord], sim: &SimConfig) -> Out<()> {
    write_paths_csv(recorded, &sim.times(), csv_file(out, "paths.csv")?)?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Out<Report> {
    let mut report = Report::new("simulate", cfg);
    report.text("kind", cfg.problem.kind());
    let opts = cfg.solver.thresholds();
    let sim = cfg.simulation.sim_config(cfg.seed, cfg.problem.rho());
    report.int("steps", sim.steps());
    report.num("horizon", sim.horizon);
    let mut rows = Vec::new();

    match cfg.problem.build()? {
        Model::OneD(p) => {
            let red = closed_form_1d(&p)?;
            let pv = red.value(&opts)?;
            let policy = BandPolicy {
                c: pv.threshold(),
                sigma: p.sigma,
                rho: p.rho,
                k_plus: p.k_plus,
                k_minus: p.k_minus,
                cost: p.cost.clone(),
                drift: p.mu,
            };
            let est = estimate_cost(&sim, &policy, p.x0)?;
            report.num("c", pv.threshold());
            report.num("mean", est.mean);
            report.opt("stderr", est.stderr);
            report.num("truncation_bound", est.truncation_bound);
            mc_check(&mut report, est.mean, est.stderr, pv.value(p.x0));
            rows.push(SummaryRow::new("cost", est.mean, est.stderr));
            rows.push(SummaryRow::new("analytic", pv.value(p.x0), None));
            write_paths(out, &est.recorded, &sim)?;
        }
        Model::Game { spec, x0 } if is_two_player_difference(&spec) => {
            let red = closed_form_two_player(cfg, &spec, &x0)?;
            let pv = red.value(&opts)?;
            let batch = simulate_two_player(
                &spec,
                [x0[0], x0[1]],
                TwoPlayerPolicy::Pareto,
                &sim,
                &two_player_options(cfg),
            )?;
            report.num("c1", batch.c);
            for (name, e) in [
                ("j1", batch.j1_estimate),
                ("j2", batch.j2_estimate),
                ("welfare", batch.welfare_estimate),
                ("spread_square", batch.spread_square),
                ("dispersion", batch.dispersion),
            ] {
                report.num(name, e.mean);
                report.opt(&format!("{name}_stderr"), e.stderr);
                rows.push(SummaryRow::new(name, e.mean, e.stderr));
            }
            report.num("max_abs_spread", batch.max_abs_spread);
            report.num("control_player_1", batch.control_totals[0]);
            report.num("control_player_2", batch.control_totals[1]);
            let w = batch.welfare_estimate;
            mc_check(&mut report, w.mean, w.stderr, pv.value(red.x0));
            rows.push(SummaryRow::new("analytic", pv.value(red.x0), None));
            write_paths(out, &batch.recorded, &sim)?;
        }
        Model::Game { spec, x0 } => {
            let batch = simulate_uncontrolled(&spec, &x0, &sim)?;
            report.text("policy", "uncontrolled");
            for (name, e) in [
                ("cost", batch.cost),
                ("benchmark_variance", batch.benchmark_variance),
                ("dispersion", batch.dispersion),
            ] {
                report.num(name, e.mean);
                report.opt(&format!("{name}_stderr"), e.stderr);
                rows.push(SummaryRow::new(name, e.mean, e.stderr));
            }
            write_paths(out, &batch.recorded, &sim)?;
        }
        Model::Investment(inv) => {
            let convention = cfg.solver.sigma_convention.into();
            let products = product_thresholds(&inv, convention, &opts)?;
            let value = SeparableValue::solve(&inv, convention, &opts)?;
            let x0: Vec<f64> = reduce_central(&inv)?
                .products
                .iter()
                .map(|p| p.x0)
                .collect();
            let batch = simulate_separable(&inv, &products, &x0, &sim)?;
            for (j, est) in batch.products.iter().enumerate() {
                let name = format!("product_{j}");
                report.num(&name, est.mean);
                report.opt(&format!("{name}_stderr"), est.stderr);
                rows.push(SummaryRow::new(name, est.mean, est.stderr));
            }
            report.num("total", batch.total.mean);
            report.opt("total_stderr", batch.total.stderr);
            rows.push(SummaryRow::new(
                "total",
                batch.total.mean,
                batch.total.stderr,
            ));
            let analytic = value.eval(&x0)?;
            mc_check(&mut report, batch.total.mean, batch.total.stderr, analytic);
            rows.push(SummaryRow::new("analytic", analytic, None));
            let recorded: Vec<PathRecord> = batch
                .products
                .iter()
                .flat_map(|p| p.recorded.iter().cloned())
                .collect();
            write_paths(out, &recorded, &sim)?;
        }
    }
    write_summary_csv(&rows, csv_file(out, "summary.csv")?)?;
    Ok(report)
}

fn two_player_only(cfg: &RunConfig, command: &str) -> Out<(GameSpec, Vec<f64>)> {
    match cfg.problem.build()? {
        Model::Game { spec, x0 } if is_two_player_difference(&spec) => Ok((spec, x0)),
        _ => Err(CliError::Config(format!(
            "{command} needs a two-player problem with a payoff of x1 - x2"
        ))),
    }
}

pub fn compare(cfg: &RunConfig, out: &Path) -> Out<Report> {
    let mut report = Report::new("compare", cfg);
    let (spec, x0) = two_player_only(cfg, "compare")?;
    let opts = cfg.solver.thresholds();
    let red = closed_form_two_player(cfg, &spec, &x0)?;
    let k = red.nash_k.ok_or_else(|| {
        CliError::Solver(Error::InvalidInput(
            "the closed-form Nash band needs K1 = K2".into(),
        ))
    })?;
    let pareto = red.value(&opts)?;
    let nash = NashValue::solve(red.resolvent()?, k, &opts)?;
    let gap = nash.threshold() - pareto.threshold();
    report.num("c1", pareto.threshold());
    report.num("c2", nash.threshold());
    report.num("gap", gap);
    report.above("gap_positive", gap, 0.0);

    let sim = cfg.simulation.sim_config(cfg.seed, spec.rho);
    let cmp = compare_policies(&spec, [x0[0], x0[1]], &sim, &two_player_options(cfg))?;
    let mut rows = Vec::new();
    for batch in [&cmp.pareto, &cmp.nash] {
        let name = batch.policy.name();
        for (stat, e) in [
            ("j1", batch.j1_estimate),
            ("j2", batch.j2_estimate),
            ("welfare", batch.welfare_estimate),
            ("spread_square", batch.spread_square),
            ("dispersion", batch.dispersion),
        ] {
            report.num(&format!("{name}_{stat}"), e.mean);
            report.opt(&format!("{name}_{stat}_stderr"), e.stderr);
            rows.push(SummaryRow::new(format!("{name}_{stat}"), e.mean, e.stderr));
        }
        report.num(&format!("{name}_max_abs_spread"), batch.max_abs_spread);
    }
    report.num("welfare_difference", cmp.welfare_difference);
    report.opt("combined_stderr", cmp.combined_stderr);
    report.opt("paired_stderr", cmp.paired_stderr);
    rows.push(SummaryRow::new(
        "welfare_difference",
        cmp.welfare_difference,
        cmp.paired_stderr,
    ));
    match cmp.combined_stderr {
        Some(se) => report.above("welfare_dominance", cmp.welfare_difference, 3.0 * se),
        None => report.skipped("welfare_dominance", 0.0),
    }
    write_summary_csv(&rows, csv_file(out, "summary.csv")?)?;

    let mut curves = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(csv_file(out, "curves.csv")?);
    curves.write_record(["y", "v_pareto", "nash_avg"])?;
    let half = cfg.solver.half_width.max(3.0 * nash.threshold());
    for y in linspace(-half, half, cfg.solver.value_points) {
        let avg = 0.5 * (nash.profile(y).v + nash.profile(-y).v);
        curves.write_record([y.to_string(), pareto.value(y).to_string(), avg.to_string()])?;
    }
    curves.flush()?;
    Ok(report)
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Out<Report> {
    let mut report = Report::new("verify", cfg);
    let red = match cfg.problem.build()? {
        Model::OneD(p) => closed_form_1d(&p)?,
        Model::Game { spec, x0 } if is_two_player_difference(&spec) => {
            closed_form_two_player(cfg, &spec, &x0)?
        }
        _ => {
            return Err(CliError::Config(
                "verify needs a one-dimensional or two-player difference problem".into(),
            ))
        }
    };
    let pv = red.value(&cfg.solver.thresholds())?;
    let c = pv.threshold();
    report.num("c", c);
    let problem = Problem1D::symmetric(red.sigma, red.rho, red.k_eff);
    let levels: Vec<usize> = (0..cfg.solver.levels)
        .map(|l| (cfg.solver.grid - 1) * (1 << l) + 1)
        .collect();
    let runs = levels
        .iter()
        .map(|&n| {
            let grid = Grid1D::symmetric(cfg.solver.half_width, n)?;
            let h = sample(&grid, |x| red.cost.value(x));
            let sol = solve_vi_1d(&grid, &h, &problem, &fd_options(cfg))?;
            let err = grid
                .points()
                .zip(&sol.values)
                .map(|(x, u)| (u - pv.value(x)).abs())
                .fold(0.0, f64::max);
            let fb = extract_free_boundary_1d(&sol, red.k_eff, red.k_eff)?;
            let b_err = match (fb.lower, fb.upper) {
                (Some(lo), Some(hi)) => (hi - c).abs().max((lo + c).abs()),
                _ => f64::INFINITY,
            };
            Ok((
                n,
                grid.spacing(),
                err,
                fb.upper,
                b_err,
                sol.log.len(),
                sol.residual,
            ))
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let mut table = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(csv_file(out, "convergence.csv")?);
    table.write_record([
        "nodes",
        "dx",
        "sup_error",
        "boundary",
        "boundary_error",
        "iterations",
        "residual",
    ])?;
    for &(n, dx, err, upper, b_err, iters, res) in &runs {
        table.write_record([
            n.to_string(),
            dx.to_string(),
            err.to_string(),
            upper.map_or_else(|| "NA".into(), |b| b.to_string()),
            b_err.to_string(),
            iters.to_string(),
            res.to_string(),
        ])?;
        report.num(&format!("sup_error_{n}"), err);
    }
    table.flush()?;
    let decreasing = runs.windows(2).all(|w| w[1].2 < w[0].2);
    report.above("error_decreasing", if decreasing { 1.0 } else { 0.0 }, 0.5);
    let &(_, dx, _, _, b_err, _, res) = runs.last().expect("at least 3 levels");
    report.at_most("finest_boundary_error", b_err, 2.0 * dx);
    report.at_most("finest_fd_residual", res, cfg.solver.fd_tol);
    Ok(report)
}

/// Thresholds over a parameter sweep, solved in parallel.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Out<Report> {
    let mut report = Report::new("sweep", cfg);
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    let base = match cfg.problem.build()? {
        Model::OneD(p) => closed_form_1d(&p)?,
        Model::Game { spec, x0 } if is_two_player_difference(&spec) => {
            closed_form_two_player(cfg, &spec, &x0)?
        }
        _ => {
            return Err(CliError::Config(
                "sweep needs a one-dimensional or two-player difference problem".into(),
            ))
        }
    };
    let two_player = matches!(
        cfg.problem,
        ProblemConfig::TwoPlayer { .. } | ProblemConfig::Game { .. }
    );
    let cost_config = match &cfg.problem {
        ProblemConfig::OneD { cost, .. } | ProblemConfig::TwoPlayer { cost, .. } => {
            Some(cost.clone())
        }
        _ => None,
    };
    let opts = cfg.solver.thresholds();
    let rows = sweep
        .values
        .par_iter()
        .map(|&value| {
            let mut sigma = base.sigma;
            let mut rho = base.rho;
            let (mut k_eff, mut nash_k) = (base.k_eff, base.nash_k);
            let mut cost = base.cost.clone();
            match sweep.parameter {
                SweepParameter::K if two_player => {
                    k_eff = 0.5 * value;
                    nash_k = Some(value);
                }
                SweepParameter::K => k_eff = value,
                SweepParameter::Sigma => sigma = value,
                SweepParameter::Rho => rho = value,
                SweepParameter::Curvature => {
                    cost = match cost_config.clone() {
                        Some(CostConfig::Quadratic { center, offset, .. }) => {
                            CostConfig::Quadratic {
                                curvature: value,
                                center,
                                offset,
                            }
                        }
                        Some(CostConfig::SoftenedQuadratic { b, .. }) => {
                            CostConfig::SoftenedQuadratic { a: value, b }
                        }
                        None => unreachable!("sweeps run on problems with one cost"),
                    }
                    .build()?;
                }
            }
            let res = Resolvent::new(cost, sigma, rho)?;
            let c1 = solve_threshold(&res, k_eff, &opts)?.c;
            let c2 = nash_k
                .map(|k| solve_threshold(&res, k, &opts).map(|s| s.c))
                .transpose()?;
            Ok((value, c1, c2))
        })
        .collect::<Out<Vec<_>>>()?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(csv_file(out, "sweep.csv")?);
    w.write_record(["value", "c1", "c2", "gap"])?;
    let mut min_gap = f64::INFINITY;
    for &(value, c1, c2) in &rows {
        let na = || "NA".to_string();
        w.write_record([
            value.to_string(),
            c1.to_string(),
            c2.map_or_else(na, |c| c.to_string()),
            c2.map_or_else(na, |c| (c - c1).to_string()),
        ])?;
        if let Some(c2) = c2 {
            min_gap = min_gap.min(c2 - c1);
        }
    }
    w.flush()?;
    report.int("points", rows.len());
    if min_gap.is_finite() {
        report.num("min_gap", min_gap);
        report.above("gap_positive", min_gap, 0.0);
    }
    Ok(report)
}
