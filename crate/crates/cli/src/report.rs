//! Run reports (`qds-report-1`) and their text rendering.

use std::fmt::Write as _;
use std::time::Instant;

use qds_core::CheckReport;
use serde::Serialize;

use crate::format::{element_to_json, ElementJson};

pub const REPORT_SCHEMA: &str = "qds-report-1";

#[derive(Clone, Debug, Serialize)]
pub struct WitnessJson {
    pub description: String,
    pub elements: Vec<ElementJson>,
}

/// A check outcome with the residual in raw and normalized form.
#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub residual: f64,
    pub normalized_residual: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessJson>,
}

impl From<&CheckReport> for CheckSummary {
    fn from(r: &CheckReport) -> Self {
        Self {
            name: r.name.clone(),
            residual: r.residual,
            normalized_residual: r.normalized(),
            scale: r.scale,
            tolerance: r.tolerance,
            passed: r.passed,
            witness: r.witness.as_ref().map(|w| WitnessJson {
                description: w.description.clone(),
                elements: w.elements.iter().map(element_to_json).collect(),
            }),
        }
    }
}

impl CheckSummary {
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtractionSummary {
    pub n_kraus: usize,
    pub n_derivations: usize,
    pub kossakowski_eigenvalues: Vec<Vec<f64>>,
    pub roundtrip_residual: f64,
    pub derivations: Vec<ElementJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolutionSummary {
    pub t: f64,
    pub x: ElementJson,
    pub result: ElementJson,
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationSummary {
    pub t: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: String,
    pub mean: ElementJson,
    pub exact: ElementJson,
    pub std_error: Vec<Vec<Vec<f64>>>,
    pub max_abs_z: f64,
    pub fraction_within_4: f64,
    pub max_unitarity_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CornerRowSummary {
    pub m: usize,
    pub mapping_bound: usize,
    pub invariance_n: usize,
    pub n_derivations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    pub verdict: Verdict,
    pub checks: Vec<CheckSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extraction: Option<ExtractionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolution: Option<EvolutionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dilation: Option<DilationSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub corner: Vec<CornerRowSummary>,
    pub timing: Vec<StageTiming>,
    #[serde(skip)]
    stage_failed: bool,
}

impl RunReport {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            schema: REPORT_SCHEMA,
            command: command.into(),
            verdict: Verdict::Pass,
            checks: Vec::new(),
            extraction: None,
            evolution: None,
            dilation: None,
            corner: Vec::new(),
            timing: Vec::new(),
            stage_failed: false,
        }
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timing.push(StageTiming {
            stage: stage.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn push(&mut self, check: CheckSummary) {
        self.checks.push(check);
        self.refresh();
    }

    pub fn fail_stage(&mut self) {
        self.stage_failed = true;
        self.refresh();
    }

    fn refresh(&mut self) {
        let ok = !self.stage_failed && self.checks.iter().all(|c| c.passed);
        self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    }

    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "qds {}: {verdict}", self.command);
        for c in &self.checks {
            let _ = writeln!(
                out,
                "  {:<6} {:<40} residual {:.3e}  normalized {:.3e}  tolerance {:.3e}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.residual,
                c.normalized_residual,
                c.tolerance
            );
            if let Some(w) = &c.witness {
                let _ = writeln!(out, "         witness: {}", w.description);
            }
        }
        if let Some(e) = &self.extraction {
            let _ = writeln!(
                out,
                "  extraction: {} Kraus operators, {} derivations, round-trip residual {:.3e}",
                e.n_kraus, e.n_derivations, e.roundtrip_residual
            );
            for (k, g) in e.kossakowski_eigenvalues.iter().enumerate() {
                let _ = writeln!(out, "    block {}: Kossakowski eigenvalues {:?}", k + 1, g);
            }
            if let Some(err) = &e.error {
                let _ = writeln!(out, "    error: {err}");
            }
        }
        if let Some(e) = &self.evolution {
            let _ = writeln!(out, "  T_t(x) at t = {}:", e.t);
            for (k, b) in e.result.iter().enumerate() {
                let _ = writeln!(out, "    block {}: {}", k + 1, render_matrix(b));
            }
        }
        if let Some(d) = &self.dilation {
            let _ = writeln!(
                out,
                "  dilation: {} paths x {} steps ({}), seed {}, max |z| {:.2}, {:.1}% of entries within 4 standard errors, max unitarity defect {:.2e}",
                d.n_paths,
                d.n_steps,
                d.scheme,
                d.seed,
                d.max_abs_z,
                100.0 * d.fraction_within_4,
                d.max_unitarity_defect
            );
            for (k, b) in d.mean.iter().enumerate() {
                let _ = writeln!(out, "    mean block {}:  {}", k + 1, render_matrix(b));
                let _ = writeln!(
                    out,
                    "    exact block {}: {}",
                    k + 1,
                    render_matrix(&d.exact[k])
                );
            }
        }
        for row in &self.corner {
            let _ = writeln!(
                out,
                "  corner m = {}: L(A_m) in A_{}, invariance checked at n = {}, {} derivations",
                row.m, row.mapping_bound, row.invariance_n, row.n_derivations
            );
        }
        let total: f64 = self.timing.iter().map(|t| t.seconds).sum();
        let stages: Vec<String> = self
            .timing
            .iter()
            .map(|t| format!("{} {:.3}s", t.stage, t.seconds))
            .collect();
        let _ = writeln!(out, "  timing: {} (total {total:.3}s)", stages.join(", "));
        out
    }
}

fn render_matrix(m: &[Vec<[f64; 2]>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| {
            let cells: Vec<String> = r
                .iter()
                .map(|z| format!("{:.6}{:+.6}i", z[0], z[1]))
                .collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(name: &str, passed: bool) -> CheckSummary {
        CheckSummary {
            name: name.into(),
            residual: 0.5,
            normalized_residual: 0.25,
            scale: 2.0,
            tolerance: 1e-9,
            passed,
            witness: None,
        }
    }

    #[test]
    fn verdict_follows_checks_and_stage_failures() {
        let mut r = RunReport::new("check");
        assert!(r.passed());
        r.push(summary("a", true));
        assert!(r.passed());
        r.push(summary("b", false));
        assert!(!r.passed());
        let mut s = RunReport::new("decompose");
        s.fail_stage();
        assert!(!s.passed());
        assert!(s.to_text().starts_with("qds decompose: FAIL"));
    }

    #[test]
    fn json_skips_absent_sections() {
        let mut r = RunReport::new("check");
        r.push(summary("a", true));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["verdict"], "pass");
        for key in ["extraction", "evolution", "dilation", "corner"] {
            assert!(v.get(key).is_none(), "{key}");
        }
        assert!(v["checks"][0].get("witness").is_none());
    }
}
