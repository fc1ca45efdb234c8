//! Subcommand implementations. Each validates what it reads, runs, writes
//! its CSV files and returns the verdict.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Result};
use nls4::normal_form::{
    leading_coefficient_check, residual_study, sample_bounds, verify_cancellation,
    verify_decomposition, verify_h11_split, verify_h11_split_sampled, verify_partition,
    verify_quintic_regrouping, verify_quintic_regrouping_sampled, IdentityReport, ResidualStudy,
};
use nls4::phase::{certify_lower_bound, counterexample_row, phase};
use nls4::solver::{analytic_datum, integrate, solution_map_experiment};
use nls4::{check_conditions, FrequencyTuple, PhaseContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentSpec;
use crate::report::{tuple, Table};

/// Result of a subcommand whose inputs were valid.
pub enum Verdict {
    Pass(String),
    Fail(String),
}

/// Input errors are reported with exit status 2, everything else with 1.
pub struct UsageError(pub anyhow::Error);

pub type Checked<T> = std::result::Result<T, UsageError>;

fn usage<T>(r: Result<T>) -> Checked<T> {
    r.map_err(UsageError)
}

fn lib<T>(r: nls4::Result<T>) -> Checked<T> {
    r.map_err(|e| UsageError(e.into()))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

pub fn simulate(spec: &ExperimentSpec, out: &Path) -> Checked<Result<Verdict>> {
    let p = usage(spec.equation())?;
    lib(spec.solver.validate(&p))?;
    let phi = usage(spec.data.field(spec.solver.radius, spec.seed))?;
    let tol = spec.simulate.drift_tolerance;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(UsageError(anyhow::anyhow!(
            "simulate.drift_tolerance must be positive"
        )));
    }
    Ok((|| {
        let traj = integrate(&phi, &p, &spec.solver)?;
        let rows = traj.diagnostics(&p, spec.simulate.s);
        let mut t = Table::new(&["t", "e1", "e2", "e3", "e4", "hs_norm", "gauge_c"]);
        for r in &rows {
            t.push(vec![
                r.t.into(),
                r.e1.into(),
                r.e2.into(),
                r.e3.into(),
                r.e4.into(),
                r.hs.into(),
                r.gauge_c.into(),
            ]);
        }
        t.write(out, "trajectory.csv")?;

        let flags = check_conditions(&p);
        let conserved: [bool; 4] = if flags.integrable {
            [true; 4]
        } else if flags.hamiltonian {
            [true, false, false, true]
        } else if p.theorem_hypothesis() {
            [true, false, false, false]
        } else {
            [false; 4]
        };
        let drift = traj.max_drift(&p);
        let value = |r: &nls4::solver::Diagnostics, j: usize| [r.e1, r.e2, r.e3, r.e4][j];
        let mut t = Table::new(&[
            "quantity",
            "conserved",
            "initial",
            "max_relative_drift",
            "passed",
        ]);
        let mut first_bad: Option<String> = None;
        for j in 0..4 {
            let ok = !conserved[j] || drift[j] < tol;
            let init = value(&rows[0], j);
            t.push(vec![
                format!("E{}", j + 1).into(),
                conserved[j].into(),
                init.into(),
                drift[j].into(),
                ok.into(),
            ]);
            if !ok && first_bad.is_none() {
                let scale = if init != 0.0 { init.abs() } else { 1.0 };
                let at = rows
                    .iter()
                    .find(|r| (value(r, j) - init).abs() / scale >= tol)
                    .map(|r| r.t)
                    .unwrap_or(f64::NAN);
                first_bad = Some(format!(
                    "E{} drift {:.3e} exceeds {tol:.1e}, first at t = {at}",
                    j + 1,
                    drift[j]
                ));
            }
        }
        t.write(out, "drift.csv")?;
        Ok(match first_bad {
            Some(msg) => Verdict::Fail(msg),
            None => Verdict::Pass(format!(
                "{} steps saved, drift E1..E4 = {:.2e} {:.2e} {:.2e} {:.2e}",
                rows.len(),
                drift[0],
                drift[1],
                drift[2],
                drift[3]
            )),
        })
    })())
}

fn identity_tables(reports: &[IdentityReport], out: &Path) -> Result<Verdict> {
    let mut t = Table::new(&[
        "identity",
        "radius",
        "checked",
        "nontrivial",
        "violations",
        "max_abs_deviation",
    ]);
    let mut v = Table::new(&["identity", "first_violation"]);
    let mut first_bad = None;
    for r in reports {
        t.push(vec![
            r.identity.as_str().into(),
            r.radius.into(),
            r.checked.into(),
            r.nontrivial.into(),
            r.violations.into(),
            r.max_abs_deviation.into(),
        ]);
        if !r.passed() {
            v.push(vec![r.identity.as_str().into(), tuple(&r.first_violation)]);
            first_bad
                .get_or_insert_with(|| format!("{} fails at {:?}", r.identity, r.first_violation));
        }
    }
    t.write(out, "identities.csv")?;
    v.write(out, "violations.csv")?;
    Ok(match first_bad {
        Some(m) => Verdict::Fail(m),
        None => Verdict::Pass(format!("{} identity checks, no violations", reports.len())),
    })
}

pub fn verify_identities(spec: &ExperimentSpec, out: &Path) -> Checked<Result<Verdict>> {
    let p = usage(spec.equation())?;
    let nf = &spec.normal_form;
    lib(nf.validate())?;
    if !nf.gamma.is_exact() || !p.is_exact() {
        return Err(UsageError(anyhow::anyhow!(
            "exact identity checks need rational normal_form.gamma and params"
        )));
    }
    let id = &spec.identities;
    let r3 = id.cubic_radius.unwrap_or(nf.radius as i64);
    let r5 = id.quintic_radius.unwrap_or(nf.radius as i64);
    if r3 < 0 || r5 < 0 || id.sample_max < 1 {
        return Err(UsageError(anyhow::anyhow!(
            "identities radii must be non-negative"
        )));
    }
    Ok((|| {
        let mut reports = verify_partition(r3)?;
        reports.push(verify_decomposition(r3)?);
        reports.extend(verify_h11_split(&p, nf.cutoff, nf.gamma, r5)?);
        reports.push(verify_quintic_regrouping(&p, nf.cutoff, nf.gamma, r5)?);
        if id.samples > 0 {
            reports.extend(verify_h11_split_sampled(
                &p,
                nf.cutoff,
                nf.gamma,
                id.samples,
                id.sample_max,
                spec.seed,
            )?);
            reports.push(verify_quintic_regrouping_sampled(
                &p,
                nf.cutoff,
                nf.gamma,
                id.samples,
                id.sample_max,
                spec.seed,
            )?);
        }
        identity_tables(&reports, out)
    })())
}

/// Checks every phase lower-bound certificate on the cubic box and on
/// sampled quintic tuples; one row per certificate case.
fn certificate_sweep(
    ctx: &PhaseContext,
    radius: i64,
    samples: usize,
    seed: u64,
) -> Result<(Table, Option<String>)> {
    #[derive(Default)]
    struct Case {
        hits: u64,
        failures: u64,
        min_margin: f64,
        worst: Option<Vec<i64>>,
    }
    let mut cases: BTreeMap<&'static str, Case> = BTreeMap::new();
    let mut visit = |k: Vec<i64>| -> Result<()> {
        let t = FrequencyTuple::new(&k)?;
        let Ok(Some(c)) = certify_lower_bound(&t, ctx) else {
            return Ok(());
        };
        let margin = phase(&t, ctx).abs() / c.bound;
        let e = cases.entry(c.case.label()).or_insert(Case {
            min_margin: f64::INFINITY,
            ..Case::default()
        });
        e.hits += 1;
        if !c.holds(&t, ctx) {
            e.failures += 1;
        }
        if margin < e.min_margin {
            e.min_margin = margin;
            e.worst = Some(k);
        }
        Ok(())
    };
    for a in -radius..=radius {
        for b in -radius..=radius {
            for c in -radius..=radius {
                visit(vec![a, b, c])?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let k: Vec<i64> = (0..5)
            .map(|_| {
                let mag = 10f64.powf(rng.random_range(0.0..6.0)) as i64;
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        visit(k)?;
    }
    let mut t = Table::new(&["case", "hits", "failures", "min_margin", "tightest_tuple"]);
    let mut first_bad = None;
    for (label, c) in cases {
        if c.failures > 0 && first_bad.is_none() {
            first_bad = Some(format!(
                "certificate {label} fails, tightest at {:?}",
                c.worst
            ));
        }
        t.push(vec![
            label.into(),
            c.hits.into(),
            c.failures.into(),
            c.min_margin.into(),
            tuple(&c.worst),
        ]);
    }
    Ok((t, first_bad))
}

pub fn verify_bounds(spec: &ExperimentSpec, out: &Path) -> Checked<Result<Verdict>> {
    let p = usage(spec.equation())?;
    let nf = &spec.normal_form;
    lib(nf.validate_for_bounds())?;
    let b = &spec.bounds;
    if b.max_k5 < 2000 || b.certificate_radius < 0 {
        return Err(UsageError(anyhow::anyhow!(
            "bounds.max_k5 must be at least 2000 and bounds.certificate_radius non-negative"
        )));
    }
    Ok((|| {
        let ctx = nf.context();
        let (certs, cert_fail) =
            certificate_sweep(&ctx, b.certificate_radius, b.certificate_samples, spec.seed)?;
        certs.write(out, "certificates.csv")?;

        let rows = sample_bounds(&p, nf, b.samples, b.limit, spec.seed)?;
        let mut t = Table::new(&[
            "multiplier",
            "samples",
            "nonzero",
            "max_ratio",
            "unbounded",
            "worst_tuple",
        ]);
        for r in &rows {
            t.push(vec![
                r.name.as_str().into(),
                r.samples.into(),
                r.nonzero.into(),
                r.max_ratio.into(),
                r.unbounded.into(),
                tuple(&r.worst),
            ]);
        }
        t.write(out, "bounds.csv")?;

        let c = verify_cancellation(&p, nf.cutoff, b.cancellation_samples, b.max_k5, spec.seed)?;
        let mut t = Table::new(&["k5", "abs_m", "abs_sym_m"]);
        for &(k5, m, s) in &c.family {
            t.push(vec![k5.into(), m.into(), s.into()]);
        }
        t.write(out, "cancellation_family.csv")?;

        let lead = leading_coefficient_check(&p, b.leading_samples, b.leading_range, spec.seed)?;

        let growth_ok = (c.growth_exponent - b.growth_exponent).abs() <= b.growth_tolerance;
        let mut s = Table::new(&["check", "value", "passed"]);
        s.push(vec![
            "cancellation_unbounded".into(),
            c.unbounded.into(),
            (c.unbounded == 0).into(),
        ]);
        s.push(vec![
            "cancellation_max_ratio".into(),
            c.max_ratio.into(),
            c.max_ratio.is_finite().into(),
        ]);
        s.push(vec![
            "growth_exponent".into(),
            c.growth_exponent.into(),
            growth_ok.into(),
        ]);
        s.push(vec![
            "leading_single_mismatches".into(),
            lead.single_mismatches.into(),
            (lead.single_mismatches == 0).into(),
        ]);
        s.push(vec![
            "leading_paired_nonzero".into(),
            lead.paired_nonzero.into(),
            (lead.paired_nonzero == 0).into(),
        ]);
        s.push(vec![
            "leading_degree_violations".into(),
            lead.degree_violations.into(),
            (lead.degree_violations == 0).into(),
        ]);
        s.write(out, "summary.csv")?;

        let verdict = if let Some(m) = cert_fail {
            Verdict::Fail(m)
        } else if let Some(r) = rows.iter().find(|r| !r.passed()) {
            Verdict::Fail(format!("{} unbounded at {:?}", r.name, r.worst))
        } else if c.unbounded > 0 || !c.max_ratio.is_finite() {
            Verdict::Fail(format!("symmetrized M(2,8) unbounded at {:?}", c.worst))
        } else if !growth_ok {
            Verdict::Fail(format!(
                "growth exponent {:.4} outside {}±{}",
                c.growth_exponent, b.growth_exponent, b.growth_tolerance
            ))
        } else if !lead.passed() {
            Verdict::Fail("leading k5 coefficient does not cancel".into())
        } else {
            Verdict::Pass(format!(
                "{} multipliers bounded, cancellation ratio {:.3}, growth exponent {:.4}",
                rows.len(),
                c.max_ratio,
                c.growth_exponent
            ))
        };
        Ok(verdict)
    })())
}

pub fn nf_residual(spec: &ExperimentSpec, out: &Path) -> Checked<Result<Verdict>> {
    let p = usage(spec.equation())?;
    let nf = &spec.normal_form;
    lib(nf.validate())?;
    let r = &spec.residual;
    if r.levels < 3 || !(r.dt > 0.0) || !(r.horizon > 2.0 * r.dt) {
        return Err(UsageError(anyhow::anyhow!(
            "residual needs levels >= 3 and horizon > 2 dt > 0"
        )));
    }
    let phi = usage(spec.data.field(nf.radius, spec.seed))?;
    Ok((|| {
        let mut study = ResidualStudy::new(r.dt, r.horizon);
        study.levels = r.levels;
        study.integrator = spec.solver.integrator;
        study.skip = r.skip.clone();
        let rep = residual_study(&phi, &p, nf.cutoff, nf.s, &study)?;
        let mut t = Table::new(&["level", "dt", "t", "residual"]);
        for (l, lev) in rep.levels.iter().enumerate() {
            for (&time, &res) in lev.times.iter().zip(&lev.residuals) {
                t.push(vec![l.into(), lev.dt.into(), time.into(), res.into()]);
            }
        }
        t.write(out, "residual.csv")?;
        let mut t = Table::new(&["level", "dt", "max_residual", "order_from_previous"]);
        for (l, lev) in rep.levels.iter().enumerate() {
            let order = if l == 0 { f64::NAN } else { rep.orders[l - 1] };
            t.push(vec![
                l.into(),
                lev.dt.into(),
                lev.max().into(),
                order.into(),
            ]);
        }
        t.write(out, "orders.csv")?;
        let order = rep.order();
        Ok(if order >= r.min_order {
            Verdict::Pass(format!(
                "observed order {order:.6}, finest residual {:.3e}",
                rep.finest()
            ))
        } else {
            Verdict::Fail(format!("observed order {order:.6} below {}", r.min_order))
        })
    })())
}

pub fn counterexample_scan(spec: &ExperimentSpec, out: &Path) -> Checked<Result<Verdict>> {
    let s = &spec.scan;
    if s.n_min < 2 || s.n_max < s.n_min + 1 {
        return Err(UsageError(anyhow::anyhow!("scan needs 2 <= n_min < n_max")));
    }
    Ok((|| {
        let mut t = Table::new(&["n", "phi5", "bound", "ratio"]);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for n in s.n_min..=s.n_max {
            let (phi5, bound, ratio) = counterexample_row(n)?;
            t.push(vec![n.into(), phi5.into(), bound.into(), ratio.into()]);
            xs.push((n as f64).ln());
            ys.push(ratio.ln());
        }
        t.write(out, "scan.csv")?;
        let k = slope(&xs, &ys);
        let msg = format!(
            "ratio slope {k:.4} (expected {}±{})",
            s.ratio_slope, s.slope_tolerance
        );
        Ok(if (k - s.ratio_slope).abs() <= s.slope_tolerance {
            Verdict::Pass(msg)
        } else {
            Verdict::Fail(msg)
        })
    })())
}

pub fn continuity(spec: &ExperimentSpec, out: &Path) -> Checked<Result<Verdict>> {
    let p = usage(spec.equation())?;
    lib(spec.solver.validate(&p))?;
    let c = &spec.continuity;
    if c.eps.len() < 2 || c.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(UsageError(anyhow::anyhow!(
            "continuity.eps needs at least two positive values"
        )));
    }
    let phi = usage(spec.data.field(spec.solver.radius, spec.seed))?;
    let psi = analytic_datum(
        spec.solver.radius,
        c.perturbation_amplitude,
        spec.seed.wrapping_add(1),
    );
    Ok((|| {
        let rows = solution_map_experiment(&phi, &psi, &c.eps, &p, &spec.solver, c.s)?;
        let mut t = Table::new(&["eps", "sup_diff", "ratio"]);
        for r in &rows {
            t.push(vec![r.eps.into(), r.sup_diff.into(), r.ratio.into()]);
        }
        t.write(out, "continuity.csv")?;
        let hi = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
        let lo = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
        let spread = (hi - lo) / lo;
        if !spread.is_finite() {
            bail!("difference quotients are not finite");
        }
        let msg = format!("difference quotients in [{lo:.6}, {hi:.6}], spread {spread:.3e}");
        Ok(if spread <= c.spread_tolerance {
            Verdict::Pass(msg)
        } else {
            Verdict::Fail(msg)
        })
    })())
}
