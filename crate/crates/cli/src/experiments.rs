use contact_gap::estimators::{
    centred_box, discrepancy_and_cluster, duality_check, extinction_profile, finite_duality_check,
    fit_exponential, fit_linear, growth_given_survival, tv_marginal_distance, variance_decay, Domain, Estimate,
    EstimateSeries, MCConfig,
};
use contact_gap::exact::{build_generator, spectrum, Flavor};
use contact_gap::fpp::domination_check;
use contact_gap::graphical::light_cone_radius;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::spec::{Experiment, ExperimentSpec};

/// Everything a run produces, before it touches the disk.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub csv: Vec<u8>,
    /// Full result summary written to `fit.json`.
    pub fit: Value,
    /// Short headline printed on success.
    pub headline: Value,
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::format("csv", e))?;
    }
    w.into_inner().map_err(|e| CliError::format("csv", e))
}

fn csv_rows<R: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<Vec<R>, CliError> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<Result<Vec<R>, _>>()
        .map_err(|e| CliError::format("data.csv", e))
}

fn sup(points: &[Vec<i64>]) -> usize {
    points
        .iter()
        .flat_map(|p| p.iter())
        .map(|c| c.unsigned_abs() as usize)
        .max()
        .unwrap_or(0)
}

fn coords(p: &[i64]) -> String {
    p.iter().map(i64::to_string).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
struct GapRow {
    #[serde(rename = "N")]
    n: usize,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct DualityRow {
    t: f64,
    forward: f64,
    se_forward: f64,
    dual: f64,
    se_dual: f64,
    replicas: usize,
    pathwise_mismatches: usize,
}

#[derive(Serialize)]
struct FiniteDualityRow {
    n: usize,
    t: f64,
    lhs: f64,
    se_lhs: f64,
    rhs: f64,
    se_rhs: f64,
    replicas: usize,
    exact_lhs: Option<f64>,
    exact_rhs: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct SeriesRow {
    series: String,
    x: f64,
    estimate: f64,
    se: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct GrowthRow {
    t: f64,
    q05: f64,
    se_q05: f64,
    mean: f64,
    se_mean: f64,
    survivors: usize,
}

#[derive(Serialize, Deserialize)]
struct DiscrepancyRow {
    target: String,
    distance: usize,
    t: f64,
    estimate: f64,
    se: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct ClusterRow {
    t: f64,
    second_moment: f64,
    se_second_moment: f64,
    mean: f64,
    se_mean: f64,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct VarianceRow {
    t: f64,
    estimate: f64,
    se: f64,
    n: usize,
    flagged: bool,
}

#[derive(Serialize)]
struct FppRow {
    y: i64,
    t: f64,
    p_cp: f64,
    se_cp: f64,
    p_fpp: f64,
    se_fpp: f64,
    violation_flag: bool,
}

#[derive(Serialize)]
struct TvRow {
    n: usize,
    tv: f64,
    se: f64,
    exact: bool,
}

fn series_rows(s: &EstimateSeries) -> impl Iterator<Item = SeriesRow> + '_ {
    s.points.iter().map(|e| SeriesRow {
        series: s.label.clone(),
        x: e.x,
        estimate: e.estimate,
        se: e.se,
        n: e.n,
    })
}

fn rate(fit: &Option<contact_gap::estimators::FitResult>) -> Value {
    match fit {
        Some(f) => json!({ "rate": f.rate, "ci": f.ci }),
        None => Value::Null,
    }
}

/// Run the experiment in memory.
pub fn execute(spec: &ExperimentSpec) -> Result<Artifacts, CliError> {
    let cfg = &spec.mc;
    let p = &spec.params;
    let missing = |name: &str| CliError::Config(format!("missing parameter `{name}`"));
    match spec.experiment {
        Experiment::GapExact => {
            let radii = p.radii.as_ref().ok_or_else(|| missing("radii"))?;
            let mut rows = Vec::new();
            let mut spectra = Vec::new();
            for &n in radii {
                let q = build_generator(cfg.dim, n, cfg.lambda, Flavor::InfectedBoundary)?;
                let s = spectrum(&q)?;
                rows.extend(s.eigenvalues.iter().map(|z| GapRow { n, re: z.re, im: z.im }));
                spectra.push(s.to_json());
            }
            let headline = spectra.iter().map(|s| json!({ "N": s.n, "gap": s.gap })).collect::<Vec<_>>();
            Ok(Artifacts {
                csv: csv_bytes(rows)?,
                fit: json!({ "spectra": spectra }),
                headline: json!({ "gaps": headline }),
            })
        }
        Experiment::Duality => {
            let (a, b, t) = (p.a.as_ref().ok_or_else(|| missing("a"))?, p.b.as_ref().ok_or_else(|| missing("b"))?, p.t.ok_or_else(|| missing("t"))?);
            let r = duality_check(cfg, a, b, t)?;
            let row = DualityRow {
                t,
                forward: r.forward.estimate,
                se_forward: r.forward.se,
                dual: r.dual.estimate,
                se_dual: r.dual.se,
                replicas: r.forward.n,
                pathwise_mismatches: r.pathwise_mismatches,
            };
            Ok(Artifacts {
                csv: csv_bytes([row])?,
                headline: json!({ "agree_3sigma": r.agree(3.0), "pathwise_mismatches": r.pathwise_mismatches }),
                fit: json!({ "report": r, "agree_3sigma": r.agree(3.0) }),
            })
        }
        Experiment::FiniteDuality => {
            let (eta, a) = (p.eta.as_ref().ok_or_else(|| missing("eta"))?, p.a.as_ref().ok_or_else(|| missing("a"))?);
            let (n, t) = (p.n.ok_or_else(|| missing("n"))?, p.t.ok_or_else(|| missing("t"))?);
            let r = finite_duality_check(cfg, eta, a, n, t)?;
            let row = FiniteDualityRow {
                n,
                t,
                lhs: r.lhs.estimate,
                se_lhs: r.lhs.se,
                rhs: r.rhs.estimate,
                se_rhs: r.rhs.se,
                replicas: r.lhs.n,
                exact_lhs: r.exact_lhs,
                exact_rhs: r.exact_rhs,
            };
            Ok(Artifacts {
                csv: csv_bytes([row])?,
                headline: json!({ "agree_3sigma": r.agree(3.0), "exact": r.exact_lhs }),
                fit: json!({ "report": r, "agree_3sigma": r.agree(3.0) }),
            })
        }
        Experiment::Extinction => {
            let sides = p.sides.as_ref().ok_or_else(|| missing("sides"))?;
            let r = extinction_profile(cfg, sides)?;
            let csv = csv_bytes(series_rows(&r.by_size).chain(series_rows(&r.by_time)))?;
            Ok(Artifacts {
                csv,
                headline: json!({ "size_slope": rate(&r.size_fit), "time_rate": rate(&r.time_fit) }),
                fit: json!({ "horizon": r.horizon, "size_fit": r.size_fit, "time_fit": r.time_fit }),
            })
        }
        Experiment::Growth => {
            let r = growth_given_survival(cfg)?;
            let rows = r.quantile.points.iter().zip(&r.mean.points).map(|(q, m)| GrowthRow {
                t: q.x,
                q05: q.estimate,
                se_q05: q.se,
                mean: m.estimate,
                se_mean: m.se,
                survivors: q.n,
            });
            let csv = csv_bytes(rows)?;
            Ok(Artifacts {
                csv,
                headline: json!({ "slope": rate(&r.fit), "survivors": r.survivors }),
                fit: json!({ "horizon": r.horizon, "survivors": r.survivors, "survival": r.survival, "fit": r.fit }),
            })
        }
        Experiment::Discrepancy | Experiment::Cluster => {
            let origin = vec![0; cfg.dim];
            let (x, targets) = match spec.experiment {
                Experiment::Discrepancy => (
                    p.x.clone().ok_or_else(|| missing("x"))?,
                    p.targets.clone().ok_or_else(|| missing("targets"))?,
                ),
                _ => (origin, vec![]),
            };
            let (d, c) = discrepancy_and_cluster(cfg, &x, &targets)?;
            if spec.experiment == Experiment::Cluster {
                let rows = c.second_moment.points.iter().zip(&c.mean.points).map(|(s, m)| ClusterRow {
                    t: s.x,
                    second_moment: s.estimate,
                    se_second_moment: s.se,
                    mean: m.estimate,
                    se_mean: m.se,
                    n: s.n,
                });
                return Ok(Artifacts {
                    csv: csv_bytes(rows)?,
                    headline: json!({ "rate": rate(&c.fit) }),
                    fit: json!({ "fit": c.fit }),
                });
            }
            let mut rows = Vec::new();
            for (y, s) in targets.iter().zip(&d.series) {
                let dist = y.iter().zip(&x).map(|(a, b)| (a - b).unsigned_abs() as usize).max().unwrap_or(0);
                rows.extend(s.points.iter().map(|e| DiscrepancyRow {
                    target: coords(y),
                    distance: dist,
                    t: e.x,
                    estimate: e.estimate,
                    se: e.se,
                    n: e.n,
                }));
            }
            Ok(Artifacts {
                csv: csv_bytes(rows)?,
                headline: json!({ "temporal_rate": rate(&d.temporal_fit) }),
                fit: json!({ "temporal_fit": d.temporal_fit, "spatial": d.spatial }),
            })
        }
        Experiment::Variance => {
            let f = spec.function()?;
            let r = variance_decay(cfg, &f)?;
            let rows = r.series.points.iter().map(|e| VarianceRow {
                t: e.x,
                estimate: e.estimate,
                se: e.se,
                n: e.n,
                flagged: r.flagged.contains(&e.x),
            });
            Ok(Artifacts {
                csv: csv_bytes(rows)?,
                headline: json!({ "rate": rate(&r.fit), "reference_rate": r.reference.map(|g| g.variance_rate) }),
                fit: json!({ "fit": r.fit, "reference": r.reference, "flagged": r.flagged }),
            })
        }
        Experiment::FppDomination => {
            let ys = p.ys.as_ref().ok_or_else(|| missing("ys"))?;
            let ts = p.ts.as_ref().ok_or_else(|| missing("ts"))?;
            let r = domination_check(cfg, ys, ts, p.c3.ok_or_else(|| missing("c3"))?)?;
            let rows = r.rows.iter().map(|w| FppRow {
                y: w.y,
                t: w.t,
                p_cp: w.p_cp,
                se_cp: w.se_cp,
                p_fpp: w.p_fpp,
                se_fpp: w.se_fpp,
                violation_flag: w.violation,
            });
            let sizes_agree = r.sizes.iter().all(|s| s.agree(3.0));
            Ok(Artifacts {
                csv: csv_bytes(rows)?,
                headline: json!({ "violations": r.violations(), "sizes_agree_3sigma": sizes_agree }),
                fit: json!({
                    "violations": r.violations(),
                    "sizes": r.sizes,
                    "sizes_agree_3sigma": sizes_agree,
                    "c3": r.c3,
                    "tails": r.tails.iter().map(|t| json!({ "t": t.t, "fit": t.fit })).collect::<Vec<_>>(),
                }),
            })
        }
        Experiment::TvConvergence => {
            let l = p.l.ok_or_else(|| missing("l"))?;
            let grid = p.n_grid.as_ref().ok_or_else(|| missing("n_grid"))?;
            let r = tv_marginal_distance(cfg, l, grid)?;
            let rows = r.points.iter().map(|q| TvRow { n: q.n, tv: q.tv, se: q.se, exact: q.exact });
            Ok(Artifacts {
                csv: csv_bytes(rows)?,
                headline: json!({ "non_increasing_2se": r.non_increasing(2.0) }),
                fit: json!({ "burn_in": r.burn_in, "non_increasing_2se": r.non_increasing(2.0) }),
            })
        }
    }
}

/// Window radii a run would use, without simulating: the main evolution box
/// and, for experiments that draw μ-samples, the burn-in box.
pub fn light_cone(spec: &ExperimentSpec) -> Result<(Option<usize>, Option<usize>), CliError> {
    let cfg: &MCConfig = &spec.mc;
    let p = &spec.params;
    let burn = |main: usize| match cfg.domain {
        Domain::Lattice => light_cone_radius(main, cfg.burn_in(), cfg.kappa()),
        Domain::Window { radius, .. } => radius,
    };
    let radius = |inner: usize, t: f64| cfg.geometry(inner, t).map(|g| g.radius());
    let out = match spec.experiment {
        Experiment::GapExact => (None, None),
        Experiment::Duality => {
            let inner = sup(p.a.as_deref().unwrap_or(&[])).max(sup(p.b.as_deref().unwrap_or(&[])));
            (Some(radius(inner, p.t.unwrap_or(cfg.t_max()))?), None)
        }
        Experiment::FiniteDuality => (Some(p.n.unwrap_or(1) + 1), None),
        Experiment::Extinction => {
            let inner = p.sides.iter().flatten().map(|&s| sup(&centred_box(cfg.dim, s))).max().unwrap_or(0);
            (Some(radius(inner, cfg.survival_horizon())?), None)
        }
        Experiment::Growth => (Some(radius(0, 2.0 * cfg.survival_horizon())?), None),
        Experiment::Discrepancy | Experiment::Cluster | Experiment::Variance => {
            let inner = match spec.experiment {
                Experiment::Discrepancy => {
                    let x = p.x.clone().unwrap_or_default();
                    sup(p.targets.as_deref().unwrap_or(&[])).max(sup(&[x]))
                }
                Experiment::Variance => sup(spec.function()?.support()),
                _ => 0,
            }
            .max(cfg.probe_radius);
            let main = radius(inner, cfg.t_max())?;
            (Some(main), Some(burn(main)))
        }
        Experiment::FppDomination => {
            let inner = p.ys.iter().flatten().map(|y| y.unsigned_abs() as usize).max().unwrap_or(0);
            let t = p.ts.as_ref().and_then(|v| v.last().copied()).unwrap_or(0.0);
            (Some(radius(inner, t)?), None)
        }
        Experiment::TvConvergence => {
            let l = p.l.unwrap_or(1);
            (None, Some(light_cone_radius(l, cfg.burn_in(), cfg.kappa())))
        }
    };
    Ok(out)
}

fn estimate(x: f64, estimate: f64, se: f64, n: usize) -> Estimate {
    Estimate { x, estimate, se, n }
}

/// Recompute the fits of a finished run from its `data.csv` alone. The
/// keys match those of the run's `fit.json`.
pub fn refit(spec: &ExperimentSpec, csv: &[u8]) -> Result<Value, CliError> {
    let t_min = spec.mc.t_min;
    match spec.experiment {
        Experiment::Variance => {
            let mut s = EstimateSeries::new("variance");
            for r in csv_rows::<VarianceRow>(csv)? {
                s.push(estimate(r.t, r.estimate, r.se, r.n));
            }
            Ok(json!({ "fit": fit_exponential(&s, t_min).ok() }))
        }
        Experiment::Cluster => {
            let mut s = EstimateSeries::new("delta_sq");
            for r in csv_rows::<ClusterRow>(csv)? {
                s.push(estimate(r.t, r.second_moment, r.se_second_moment, r.n));
            }
            Ok(json!({ "fit": fit_exponential(&s, t_min).ok() }))
        }
        Experiment::Discrepancy => {
            let x = coords(spec.params.x.as_deref().unwrap_or(&[]));
            let mut s = EstimateSeries::new(x.clone());
            for r in csv_rows::<DiscrepancyRow>(csv)?.into_iter().filter(|r| r.target == x) {
                s.push(estimate(r.t, r.estimate, r.se, r.n));
            }
            let fit = if s.points.is_empty() { None } else { fit_exponential(&s, t_min).ok() };
            Ok(json!({ "temporal_fit": fit }))
        }
        Experiment::Extinction => {
            let rows = csv_rows::<SeriesRow>(csv)?;
            let collect = |label: &str| {
                let mut s = EstimateSeries::new(label);
                for r in rows.iter().filter(|r| r.series == label) {
                    s.push(estimate(r.x, r.estimate, r.se, r.n));
                }
                s
            };
            Ok(json!({
                "size_fit": fit_exponential(&collect("extinct_by_horizon"), 0.0).ok(),
                "time_fit": fit_exponential(&collect("late_extinction"), t_min).ok(),
            }))
        }
        Experiment::Growth => {
            let mut s = EstimateSeries::new("q05_size_given_survival");
            for r in csv_rows::<GrowthRow>(csv)? {
                s.push(estimate(r.t, r.q05, r.se_q05, r.survivors));
            }
            Ok(json!({ "fit": fit_linear(&s, t_min).ok() }))
        }
        other => Err(CliError::Config(format!("experiment `{other}` has no fit to recompute"))),
    }
}
