use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::{ScenarioConfig, Setup, STAGE_NAMES};
use super::grow::{principal_match_search, region_grow};
use super::motion::{fit_residual, fit_rigid_motion_jet, kabsch, RigidMotion};
use super::report::{combined_verdict, RigidityReport, StageReport, Verdict, REPORT_FORMAT};
use crate::contact::{contact_order, curve_data, recover_conormal, recover_second_form_on_curve};
use crate::darboux::{
    continuation_verify, direction_rank, ellipticity_region, fibonacci_directions, height_field, riemannian_hessian,
};
use crate::error::{LabError, Result};
use crate::fermi::FermiChart;
use crate::flatlands::{parabolic_set, propagate_equality, rim_mask, write_mask_csv, PropagationOptions, RulingOptions};
use crate::geometry::{isometry_check, orientation_compatibility, second_fundamental_form, NodeGrid, Vec2, Vec3};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for `report.json` and CSV artifacts.
    pub out_dir: Option<PathBuf>,
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    setup: Setup,
    alignment: RigidMotion,
    out_dir: Option<&'a Path>,
    orientation_product: f64,
}

impl Context<'_> {
    fn curve(&self) -> Result<&crate::geometry::CurveOnSurface> {
        self.setup.curve.as_ref().ok_or_else(|| LabError::Config("stage needs a curve".into()))
    }

    fn aligned(&self) -> crate::geometry::ParamSurface {
        self.alignment.surface(&self.setup.ft)
    }

    fn artifact(&self, name: &str) -> Result<Option<BufWriter<File>>> {
        match self.out_dir {
            None => Ok(None),
            Some(dir) => Ok(Some(BufWriter::new(File::create(dir.join(name))?))),
        }
    }
}

fn rows(m: &crate::geometry::Mat3) -> [[f64; 3]; 3] {
    [[m[(0, 0)], m[(0, 1)], m[(0, 2)]], [m[(1, 0)], m[(1, 1)], m[(1, 2)]], [m[(2, 0)], m[(2, 1)], m[(2, 2)]]]
}

fn stage_isometry(ctx: &mut Context, st: &mut StageReport) -> Result<()> {
    let pts: Vec<Vec2> = ctx.setup.grid.active_indices().map(|k| ctx.setup.grid.point_at(k)).collect();
    let rep = isometry_check(&ctx.setup.f, &ctx.setup.ft, &pts, ctx.cfg.tolerances.isometry)?;
    st.metrics
        .num("max_metric_deviation", rep.max_deviation)
        .text("worst_entry", rep.worst_entry)
        .point("worst_point", rep.worst_point)
        .int("samples", rep.samples);
    if !rep.pass {
        st.verdict = Verdict::Fail;
    }
    Ok(())
}

fn stage_orientation(ctx: &mut Context, st: &mut StageReport) -> Result<()> {
    let curve = ctx.curve()?.clone();
    let n = ctx.cfg.grid.curve_samples;
    let pts = curve.sample(n)?;
    let src: Vec<Vec3> = pts.iter().map(|p| ctx.setup.ft.position(p.uv)).collect();
    let dst: Vec<Vec3> = pts.iter().map(|p| ctx.setup.f.position(p.uv)).collect();
    let rho = kabsch(&src, &dst)?;
    st.metrics.num("curve_fit_residual", fit_residual(&rho, &src, &dst));
    ctx.alignment = rho;
    let rep = orientation_compatibility(&ctx.setup.f, &ctx.aligned(), &curve, n, 1e3 * ctx.cfg.tolerances.agreement.max(1e-12))?;
    let negative = rep.products.iter().filter(|&&p| p <= 0.0).count();
    st.metrics
        .num("min_normal_curvature_product", rep.min_product)
        .num("max_normal_curvature_product", rep.products.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .int("nonpositive_samples", negative)
        .int("samples", rep.products.len())
        .num("max_position_gap", rep.max_position_gap);
    ctx.orientation_product = rep.min_product;
    if !rep.compatible {
        st.verdict = Verdict::Fail;
        st.notes.push(format!(
            "the normal curvatures <f22, n> and <f~22, n~> along the curve have opposite signs at {negative} of {} samples",
            rep.products.len()
        ));
    }
    Ok(())
}

fn stage_contact(ctx: &mut Context, st: &mut StageReport) -> Result<()> {
    let curve = ctx.curve()?.clone();
    let g = &ctx.cfg.grid;
    let chart_f = FermiChart::build(&ctx.setup.f, &curve, g.fermi_s_max, g.fermi_step)?;
    let chart_ft = FermiChart::build(&ctx.aligned(), &curve, g.fermi_s_max, g.fermi_step)?;
    let rep = contact_order(&chart_f, &chart_ft, 2, g.curve_samples)?;
    for o in &rep.orders {
        st.metrics.num(&format!("order{}_deviation", o.order), o.max_deviation);
    }
    st.metrics.int("achieved_order", rep.achieved.unwrap_or(0));
    let data = curve_data(&chart_f, g.curve_samples)?;
    let forms = recover_second_form_on_curve(&chart_f, &data, 1.0, 1e-2)?;
    let (mut conormal_err, mut form_err) = (0.0f64, 0.0f64);
    for (sample, form) in data.samples.iter().zip(&forms) {
        let f1 = recover_conormal(sample, ctx.orientation_product.max(f64::MIN_POSITIVE))?;
        let jt = chart_ft.jet(0.0, sample.t)?;
        conormal_err = conormal_err.max((f1 - jt.f1).norm());
        let l = second_fundamental_form(&jt)?.l;
        form_err = form_err.max((l - form.matrix()).abs().max());
    }
    st.metrics.num("recovered_conormal_error", conormal_err).num("recovered_form_error", form_err);
    if !chart_f.warnings.is_empty() {
        st.notes.extend(chart_f.warnings.iter().cloned());
    }
    if rep.achieved.unwrap_or(0) < 2 || conormal_err > 1e-6 || form_err > 1e-6 {
        st.verdict = Verdict::Fail;
    }
    Ok(())
}

fn stage_fit(ctx: &mut Context, st: &mut StageReport) -> Result<()> {
    let tol = &ctx.cfg.tolerances;
    let point = if ctx.cfg.stages.umbilic_search {
        let m = principal_match_search(&ctx.setup.f, &ctx.setup.ft, &ctx.setup.grid, tol.curvature_match)?;
        st.metrics
            .point("match_point", m.point)
            .num("match_gap_large", m.gap_large)
            .num("match_gap_small", m.gap_small)
            .flag("match_found", m.matched);
        st.notes.push(m.note.into());
        if !m.matched {
            st.verdict = Verdict::Fail;
            return Ok(());
        }
        Vec2::new(m.point[0], m.point[1])
    } else if let Some(p) = ctx.cfg.fit.point {
        Vec2::new(p[0], p[1])
    } else {
        let c = ctx.curve()?;
        let [a, b] = c.interval();
        c.eval(0.5 * (a + b))?.uv
    };
    let fit = fit_rigid_motion_jet(&ctx.setup.f.jet_unchecked(point)?, &ctx.setup.ft.jet_unchecked(point)?)?;
    st.metrics
        .point("point", [point.x, point.y])
        .matrix("rotation", &rows(&fit.motion.rotation))
        .matrix("translation", &[[fit.motion.translation.x, fit.motion.translation.y, fit.motion.translation.z]])
        .num("determinant", fit.motion.rotation.determinant())
        .num("first_order_residual", fit.first_order_residual)
        .num("second_order_residual", fit.second_order_residual)
        .num("curvature_product", fit.curvature_product);
    let mut ok = fit.first_order_residual < 1e-10;
    if let Some(expected) = &ctx.setup.expected {
        let (dr, dt) = fit.motion.distance(expected);
        st.metrics.num("rotation_error", dr).num("translation_error", dt);
        ok &= dr < tol.motion && dt < tol.motion;
    }
    ctx.alignment = fit.motion;
    if !ok {
        st.verdict = Verdict::Fail;
    }
    Ok(())
}

fn stage_region_grow(ctx: &mut Context, st: &mut StageReport) -> Result<()> {
    let curve = ctx.curve()?.clone();
    let grid = &ctx.setup.grid;
    let delta = ctx.cfg.grid.delta_cells * grid.spacing[0].max(grid.spacing[1]);
    let rep = region_grow(&ctx.setup.f, &ctx.aligned(), &curve, grid, delta, ctx.cfg.tolerances.agreement)?;
    st.metrics
        .num("delta", rep.delta)
        .num("coverage", rep.coverage)
        .int("component_nodes", rep.component_nodes)
        .int("verified_nodes", rep.verified_nodes)
        .num("max_deviation", rep.max_deviation)
        .int("balls_accepted", rep.balls_accepted)
        .int("balls_rejected", rep.balls_rejected)
        .flag("seed_ok", rep.seed_ok);
    if let Some(fb) = &rep.first_failure {
        st.metrics.point("first_failure_center", fb.center).point("first_failure_node", fb.worst_node).num("first_failure_deviation", fb.deviation);
        st.notes.push(format!(
            "growth halted: the ball at ({}, {}) contains a node off by {:e}",
            fb.center[0], fb.center[1], fb.deviation
        ));
    }
    if let Some(w) = ctx.artifact("growth.csv")? {
        rep.write_csv(grid, w)?;
    }
    if rep.coverage < 1.0 || rep.balls_rejected > 0 {
        st.verdict = Verdict::Fail;
    }
    Ok(())
}

fn stage_darboux(ctx: &mut Context, st: &mut StageReport) -> Result<()> {
    let spec = &ctx.cfg.darboux;
    let tol = &ctx.cfg.tolerances;
    let grid = NodeGrid::square(spec.u, spec.v, spec.nodes);
    let curve = ctx.curve()?.clone();
    let pts: Vec<Vec2> =
        curve.sample(ctx.cfg.grid.curve_samples.max(64))?.into_iter().map(|c| c.uv).collect();
    let seed: Vec<bool> = (0..grid.len())
        .map(|k| {
            let p = grid.point_at(k);
            pts.iter().any(|q| (p - q).norm() <= spec.seed_radius)
        })
        .collect();
    let working = grid.mask.clone();
    let ft = ctx.aligned();
    let mut survivors = Vec::new();
    for e in fibonacci_directions(spec.directions) {
        let hf = height_field(&ctx.setup.f, &e, &grid)?;
        let hs = riemannian_hessian(&hf);
        let em = ellipticity_region(&grid, &hs, spec.margin);
        if em.elliptic_definite_count == grid.len() && em.uniform_sign.is_some() {
            survivors.push((e, hf));
        }
    }
    let dirs: Vec<Vec3> = survivors.iter().map(|s| s.0).collect();
    let rank = direction_rank(&dirs);
    st.metrics.int("directions_scanned", spec.directions).int("directions_kept", dirs.len()).int("direction_rank", rank);
    let (mut op_res, mut repro, mut zero, mut phi_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut lambda = f64::INFINITY;
    let mut consistent = true;
    let mut note = "";
    for (i, (e, hf)) in survivors.iter().enumerate() {
        let ht = height_field(&ft, e, &grid)?;
        let rep = continuation_verify(hf, &ht, &seed, &working, tol.continuation, tol.ellipticity)?;
        op_res = op_res.max(rep.operator_residual);
        repro = repro.max(rep.reproduce_error);
        zero = zero.max(rep.zero_boundary_max);
        lambda = lambda.min(rep.certificate.lambda_min);
        consistent &= rep.consistent;
        note = rep.note;
        let phi = hf.difference(&ht);
        phi_max = phi_max.max(grid.active_indices().map(|k| phi.u[k].abs()).fold(0.0, f64::max));
        if i == 0 {
            if let Some(w) = ctx.artifact("darboux_coefficients.csv")? {
                let (a, b) = (riemannian_hessian(hf), riemannian_hessian(&ht));
                crate::darboux::linearized_coeffs(hf, &a, &ht, &b)?.write_csv(w)?;
            }
        }
    }
    st.metrics
        .num("max_operator_residual", op_res)
        .num("max_reproduction_error", repro)
        .num("max_zero_boundary_solution", zero)
        .num("min_ellipticity", lambda)
        .num("max_abs_phi", phi_max)
        .flag("consistent", consistent);
    if !note.is_empty() {
        st.notes.push(note.into());
    }
    if rank < 3 || !consistent {
        st.verdict = Verdict::Fail;
    }
    Ok(())
}

fn stage_flatlands(ctx: &mut Context, st: &mut StageReport) -> Result<()> {
    let grid = &ctx.setup.grid;
    let ps = parabolic_set(&ctx.setup.f, grid, None, None)?;
    let mut agreement = ps.positive_closure();
    if ctx.cfg.flatlands.pin_boundary {
        for (a, r) in agreement.iter_mut().zip(rim_mask(grid)) {
            *a |= r;
        }
    }
    let opts = PropagationOptions {
        tol: ctx.cfg.tolerances.agreement,
        ruling: RulingOptions { tol_straight: ctx.cfg.tolerances.straightness, ..RulingOptions::default() },
        ..PropagationOptions::default()
    };
    let ft = ctx.aligned();
    let rep = propagate_equality(&ctx.setup.f, &ft, &ps, &agreement, &opts)?;
    let false_claims = grid
        .active_indices()
        .filter(|&k| rep.mask[k])
        .filter(|&k| {
            let p = grid.point_at(k);
            (ctx.setup.f.position(p) - ft.position(p)).norm() >= opts.tol
        })
        .count();
    st.metrics
        .num("tol_k", ps.tol_k)
        .int("parabolic_nodes", ps.parabolic_count())
        .int("flat_nodes", ps.flat_count())
        .int("flat_components", ps.components.len())
        .flag("parabolic_set_compact", rep.parabolic_compact)
        .int("seeded", rep.seeded)
        .int("rejected_seeds", rep.rejected_seeds)
        .num("coverage", rep.coverage)
        .num("max_deviation", rep.max_deviation)
        .int("rulings_used", rep.rulings_used)
        .int("rulings_skipped", rep.rulings_skipped.len())
        .int("chords_used", rep.chords_used)
        .int("reclassified_flat", rep.reclassified_flat)
        .num("max_arclength_defect", rep.max_arclength_defect)
        .int("false_claims", false_claims);
    if !rep.parabolic_compact {
        st.notes.push(if ctx.cfg.flatlands.pin_boundary {
            "the parabolic set reaches the rim of the working grid; equality there rests on the supplied rim agreement".into()
        } else {
            "the parabolic set reaches the rim of the working grid and no rim agreement was supplied".into()
        });
    }
    if let Some(w) = ctx.artifact("flatlands.csv")? {
        write_mask_csv(&ps, &rep.mask, w)?;
    }
    if rep.coverage < 1.0 || false_claims > 0 {
        st.verdict = Verdict::Fail;
    }
    Ok(())
}

/// Runs the enabled stages in their fixed order. The first stage that does
/// not pass stops the run; later enabled stages are reported as skipped.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RigidityReport> {
    cfg.validate()?;
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;
    }
    let setup = cfg.setup()?;
    let mut ctx = Context { cfg, setup, alignment: RigidMotion::identity(), out_dir: opts.out_dir.as_deref(), orientation_product: 1.0 };
    let mut stages = Vec::new();
    let mut stopped = false;
    for name in STAGE_NAMES {
        if !cfg.stages.enabled(name) {
            continue;
        }
        let mut st = StageReport::new(name);
        if stopped {
            st.verdict = Verdict::Skipped;
            st.notes.push("not run: an earlier stage did not pass".into());
            stages.push(st);
            continue;
        }
        let outcome = match name {
            "isometry" => stage_isometry(&mut ctx, &mut st),
            "orientation" => stage_orientation(&mut ctx, &mut st),
            "contact" => stage_contact(&mut ctx, &mut st),
            "fit" => stage_fit(&mut ctx, &mut st),
            "region_grow" => stage_region_grow(&mut ctx, &mut st),
            "darboux" => stage_darboux(&mut ctx, &mut st),
            "flatlands" => stage_flatlands(&mut ctx, &mut st),
            _ => unreachable!(),
        };
        if let Err(e) = outcome {
            st.verdict = Verdict::Error;
            st.metrics.text("error", e.to_string());
        }
        stopped = st.verdict != Verdict::Pass;
        stages.push(st);
    }
    let verdict = combined_verdict(&stages);
    let failed_stage = stages.iter().find(|s| s.verdict != Verdict::Pass).map(|s| s.name.clone());
    let expectation_met = cfg.expect.as_ref().map(|e| {
        let v = if verdict == Verdict::Pass { "pass" } else { "fail" };
        e.verdict == v && (e.failed_stage.is_none() || e.failed_stage == failed_stage)
    });
    let mut versions = BTreeMap::new();
    versions.insert("rigidity-core".to_string(), env!("CARGO_PKG_VERSION").to_string());
    versions.insert("report_format".to_string(), REPORT_FORMAT.to_string());
    let report = RigidityReport {
        format: REPORT_FORMAT,
        scenario: cfg.name.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        verdict,
        failed_stage,
        expectation_met,
        stages,
        tolerances: cfg.tolerances.clone(),
        resolutions: cfg.grid.clone(),
        versions,
    };
    if let Some(dir) = &opts.out_dir {
        fs::write(dir.join("report.json"), report.to_json())?;
    }
    Ok(report)
}
