//! Experiment dispatch and artifact writing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use motives_core::acquisition::{optimize_precision, sweep, AcquisitionResult};
use motives_core::model::replacement_family;
use motives_core::transparency::comparison_rows;
use motives_core::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Kind, SCHEMA_VERSION};

pub struct Runner {
    cfg: ExperimentConfig,
    out: PathBuf,
    written: Vec<PathBuf>,
}

impl Runner {
    pub fn new(cfg: ExperimentConfig, out: PathBuf) -> Self {
        Self {
            cfg,
            out,
            written: Vec::new(),
        }
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Runs the configured experiment and returns summary lines.
    pub fn run(&mut self) -> Result<Vec<String>> {
        std::fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        let m = self.cfg.joint_model()?;
        let p = self.cfg.demand.curve();
        match self.cfg.kind {
            Kind::Solve => self.solve(&m, &p),
            Kind::Oracle => self.oracle(&m, &p),
            Kind::Transparency => self.transparency(&m, &p),
            Kind::Acquire => self.acquire(&m, &p),
            Kind::Equilibrium => self.equilibrium(&m),
            Kind::Sweep => self.sweep(&m, &p),
        }
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.out.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    fn write_json(&mut self, name: &str, body: Value) -> Result<()> {
        let mut doc = json!({ "schema": SCHEMA_VERSION, "kind": self.cfg.kind.as_str() });
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn write_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create(name)?);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_rule(&mut self, name: &str, m: &JointModel, d: &TabularRule) -> Result<()> {
        let mut w = self.create(name)?;
        d.write_csv(m, &mut w)?;
        w.flush()?;
        Ok(())
    }

    fn solve(&mut self, m: &JointModel, p: &DemandCurve) -> Result<Vec<String>> {
        let r = solve_commitment(m, p, &self.cfg.solver_config())?;
        let foc = foc_residual(m, &r.table, p);
        let (x_bar, y_bar) = r.anchors();
        self.write_json(
            "solve.json",
            json!({
                "x_bar": x_bar,
                "y_bar": y_bar,
                "y_bar_constant": r.rule.is_constant(),
                "payoff": r.payoff,
                "nd": r.nd,
                "iterations": r.iterations,
                "residual": r.residual,
                "foc_violations_off_boundary": foc.violations_off_boundary(),
                "candidates": r.candidates,
            }),
        )?;
        self.write_rule("solve_rule.csv", m, &rasterize(&r.rule, m))?;
        let record = r.rule.to_record(m);
        let mut w = self.create("solve_threshold.json")?;
        serde_json::to_writer_pretty(&mut w, &record)?;
        writeln!(w)?;
        Ok(vec![
            format!("x_bar={x_bar:.6} y_bar={y_bar:.6}"),
            format!(
                "payoff={:.6} mean_term={:.6} cov_term={:.6} sale_prob={:.6}",
                r.payoff.total, r.payoff.mean_term, r.payoff.cov_term, r.payoff.sale_prob
            ),
            format!(
                "foc_violations_off_boundary={}",
                foc.violations_off_boundary()
            ),
        ])
    }

    fn oracle(&mut self, m: &JointModel, p: &DemandCurve) -> Result<Vec<String>> {
        #[derive(Serialize)]
        struct Row {
            method: &'static str,
            x_bar: Option<f64>,
            y_bar: Option<f64>,
            payoff: f64,
            gap: f64,
            evaluated: usize,
        }
        let s = solve_commitment(m, p, &self.cfg.solver_config())?;
        let o = brute_force_oracle(m, p, self.cfg.oracle.n, self.cfg.oracle.family())?;
        let (sx, sy) = s.anchors();
        let gap = (o.payoff - s.payoff.total).abs() / s.payoff.total.abs().max(f64::MIN_POSITIVE);
        let rows = [
            Row {
                method: "solver",
                x_bar: Some(sx),
                y_bar: Some(sy),
                payoff: s.payoff.total,
                gap: 0.0,
                evaluated: s.iterations,
            },
            Row {
                method: "oracle",
                x_bar: o.anchors.map(|a| a.0),
                y_bar: o.anchors.map(|a| a.1),
                payoff: o.payoff,
                gap,
                evaluated: o.evaluated,
            },
        ];
        self.write_rows("oracle.csv", &rows)?;
        self.write_rule("oracle_rule.csv", m, &o.rule)?;
        Ok(vec![format!(
            "solver={:.6} oracle={:.6} relative_gap={gap:.3e} evaluated={}",
            s.payoff.total, o.payoff, o.evaluated
        )])
    }

    fn transparency(&mut self, m: &JointModel, p: &DemandCurve) -> Result<Vec<String>> {
        let hidden = solve_commitment(m, p, &self.cfg.solver_config())?;
        let t = solve_transparent(m, p);
        let rows = comparison_rows(m, p, &hidden, &t)?;
        self.write_rows("transparency.csv", &rows)?;
        self.write_rule("transparency_rule.csv", m, &t.rule)?;
        Ok(rows
            .iter()
            .map(|r| {
                format!(
                    "{:<12} sale_prob={:.6} payoff={:.6} fb_variance={:.6} verdict={}",
                    r.regime, r.sale_prob, r.payoff, r.fb_variance, r.verdict
                )
            })
            .collect())
    }

    fn family(&self, m: &JointModel) -> Result<SignalFamily> {
        Ok(replacement_family(
            m.x().clone(),
            m.y().clone(),
            self.cfg.acquisition.cost.clone(),
        )?)
    }

    fn acquire(&mut self, m: &JointModel, p: &DemandCurve) -> Result<Vec<String>> {
        let fam = self.family(m)?;
        let r: AcquisitionResult = optimize_precision(
            &fam,
            p,
            self.cfg.acquisition.tau,
            &self.cfg.acquisition_config(),
        )?;
        let (x_bar, y_bar) = r.solve.anchors();
        self.write_json(
            "acquire.json",
            json!({
                "tau": r.tau,
                "theta_star": r.theta_star,
                "x_bar": x_bar,
                "y_bar": y_bar,
                "pi0": r.pi0,
                "pi1": r.pi1,
                "gross_value": r.gross_value,
                "net_value": r.net_value,
                "unimodal": r.unimodal,
                "fb_variance": r.fb.variance(),
            }),
        )?;
        self.write_rows("value_curve.csv", &r.value_curve)?;
        Ok(vec![format!(
            "tau={} theta_star={:.6} net_value={:.6} pi0={:.6} pi1={:.6}",
            r.tau, r.theta_star, r.net_value, r.pi0, r.pi1
        )])
    }

    fn equilibrium(&mut self, m: &JointModel) -> Result<Vec<String>> {
        let e = solve_no_commitment(m);
        let t = solve_no_commitment_transparent(m)?;
        self.write_json(
            "equilibrium.json",
            json!({
                "hidden": e,
                "transparent": { "full_disclosure": true, "certificate": t.certificate },
            }),
        )?;
        self.write_rule("equilibrium_rule.csv", m, &equilibrium_rule(&e, m))?;
        Ok(vec![format!(
            "regime={:?} x_hat={:.9} nd_mass={:.6} roots={}",
            e.regime,
            e.x_hat,
            e.nd_mass,
            e.roots.len()
        )])
    }

    fn sweep(&mut self, m: &JointModel, p: &DemandCurve) -> Result<Vec<String>> {
        let fam = self.family(m)?;
        let rows = sweep(
            &fam,
            p,
            &self.cfg.sweep.taus,
            &self.cfg.acquisition_config(),
        )?;
        self.write_rows("sweep.csv", &rows)?;
        Ok(rows
            .iter()
            .map(|r| {
                format!(
                    "tau={:.4} theta_star={:.6} net_value={:.6}",
                    r.tau, r.theta_star, r.net_value
                )
            })
            .collect())
    }
}

pub fn out_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}
