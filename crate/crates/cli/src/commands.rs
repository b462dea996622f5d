use std::collections::BTreeMap;
use std::path::Path;

use qds_core::corner::{proposition_suite, GridSpec};
use qds_core::dilate::{compare_with_semigroup, DilationConfig, Scheme};
use qds_core::linalg::{CMatrix, I, ZERO};
use qds_core::superop::{
    check_ccp, check_conservative, check_cp_map, check_symmetric, relation2_check,
};
use qds_core::{
    AlgebraElement, BlockStructure, CheckReport, Decomposer, DerivationFamily, SuperOperator,
};

use crate::format::{
    element_to_json, GeneratorSpec, ProblemSpec, Resolved, StructureSpec, SPEC_SCHEMA,
};
use crate::report::{
    CheckSummary, CornerRowSummary, DilationSummary, EvolutionSummary, ExtractionSummary, RunReport,
};
use crate::InputError;

/// Options shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Settings {
    pub tol: f64,
    pub seed: u64,
    pub weights: Option<Vec<f64>>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            seed: 0,
            weights: None,
        }
    }
}

/// Which element `x` to evolve: `identity`, `unit:b,i,j` (1-based block and
/// indices), `random:SEED` (self-adjoint) or `auto` (the first off-diagonal
/// matrix unit, or the identity when every block is 1×1).
pub fn select_element(s: &BlockStructure, selector: &str) -> Result<AlgebraElement, InputError> {
    let bad = || InputError::new(format!("invalid element selector {selector:?}"));
    match selector.split_once(':') {
        None if selector == "identity" => Ok(s.identity()),
        None if selector == "auto" => Ok(match s.dims().iter().position(|&n| n >= 2) {
            Some(b) => s.matrix_unit(b, 0, 1).expect("block has two rows"),
            None => s.identity(),
        }),
        Some(("unit", rest)) => {
            let idx: Vec<usize> = rest
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            match idx[..] {
                [b, i, j] if b >= 1 && i >= 1 && j >= 1 => s
                    .matrix_unit(b - 1, i - 1, j - 1)
                    .map_err(|e| InputError::new(format!("selector {selector:?}: {e}"))),
                _ => Err(bad()),
            }
        }
        Some(("random", seed)) => {
            let seed: u64 = seed.trim().parse().map_err(|_| bad())?;
            Ok(s.random_antiselfadjoint(seed).scale(I))
        }
        _ => Err(bad()),
    }
}

fn load(path: &Path, settings: &Settings) -> Result<Resolved, InputError> {
    ProblemSpec::load(path)?
        .resolve(settings.weights.as_deref())
        .map_err(|e| InputError::new(format!("{}: {e}", path.display())))
}

fn push_generator_checks(report: &mut RunReport, l: &SuperOperator, tol: f64) -> bool {
    let checks = report.timed("checks", || {
        [
            check_conservative(l, tol),
            check_symmetric(l, tol),
            check_ccp(l, tol),
            relation2_check(l, tol),
        ]
    });
    let all = checks.iter().all(|c| c.passed);
    for c in &checks {
        report.push(c.into());
    }
    all
}

/// Runs the extraction pipeline (after the four checks passed) and records
/// its outcome; returns the family on success.
fn run_extraction(report: &mut RunReport, l: &SuperOperator, tol: f64) -> Option<DerivationFamily> {
    let decomposer = Decomposer {
        tol,
        check_preconditions: false,
        ..Decomposer::default()
    };
    match report.timed("decompose", || decomposer.decompose(l)) {
        Ok(out) => {
            for r in &out.reports {
                report.push(CheckSummary::from(r).renamed(format!("extract:{}", r.name)));
            }
            report.extraction = Some(ExtractionSummary {
                n_kraus: out.kraus.len(),
                n_derivations: out.family.len(),
                kossakowski_eigenvalues: out.kossakowski_eigenvalues.clone(),
                roundtrip_residual: out.roundtrip_residual,
                derivations: out
                    .family
                    .generators()
                    .iter()
                    .map(element_to_json)
                    .collect(),
                error: None,
            });
            Some(out.family)
        }
        Err(e) => {
            let r = e.report();
            report.push(CheckSummary::from(r).renamed(format!("extract:{}", r.name)));
            report.extraction = Some(ExtractionSummary {
                n_kraus: 0,
                n_derivations: 0,
                kossakowski_eigenvalues: Vec::new(),
                roundtrip_residual: f64::NAN,
                derivations: Vec::new(),
                error: Some(e.to_string()),
            });
            report.fail_stage();
            None
        }
    }
}

pub fn cmd_check(path: &Path, settings: &Settings) -> Result<RunReport, InputError> {
    let mut report = RunReport::new("check");
    let problem = report.timed("load", || load(path, settings))?;
    push_generator_checks(&mut report, &problem.generator, settings.tol);
    Ok(report)
}

fn decompose_problem(
    name: &str,
    problem: &Resolved,
    settings: &Settings,
) -> (RunReport, Option<DerivationFamily>) {
    let mut report = RunReport::new(name);
    let family = if push_generator_checks(&mut report, &problem.generator, settings.tol) {
        run_extraction(&mut report, &problem.generator, settings.tol)
    } else {
        report.fail_stage();
        None
    };
    (report, family)
}

/// `out` receives the extracted family as a `derivations` problem file.
pub fn cmd_decompose(
    path: &Path,
    out: Option<&Path>,
    settings: &Settings,
) -> Result<RunReport, InputError> {
    let problem = load(path, settings)?;
    let (report, family) = decompose_problem("decompose", &problem, settings);
    if let (Some(out), Some(family)) = (out, family) {
        let mut meta = BTreeMap::new();
        meta.insert("source".into(), path.display().to_string());
        std::fs::write(out, ProblemSpec::from_family(&family, meta).to_json())
            .map_err(|e| InputError::new(format!("{}: {e}", out.display())))?;
    }
    Ok(report)
}

pub fn cmd_evolve(
    path: &Path,
    t: f64,
    selector: &str,
    settings: &Settings,
) -> Result<RunReport, InputError> {
    let mut report = RunReport::new("evolve");
    let problem = load(path, settings)?;
    let x = select_element(&problem.structure, selector)?;
    let tt = problem
        .generator
        .exp_semigroup(t)
        .map_err(|e| InputError::new(format!("--t: {e}")))?;
    let y = tt.apply(&x).expect("structure matches");
    let one = problem.structure.identity();
    let unital = (&tt.apply(&one).expect("structure matches") - &one).operator_norm();
    report.push((&CheckReport::new("unital", unital, 1.0, settings.tol, None)).into());
    let cp = report.timed("cp_check", || check_cp_map(&tt, settings.tol));
    report.push((&cp).into());
    report.evolution = Some(EvolutionSummary {
        t,
        x: element_to_json(&x),
        result: element_to_json(&y),
    });
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct DilateArgs {
    pub t: f64,
    pub paths: usize,
    pub steps: usize,
    pub scheme: Scheme,
    pub x: String,
}

pub fn cmd_dilate(
    path: &Path,
    args: &DilateArgs,
    settings: &Settings,
) -> Result<RunReport, InputError> {
    let problem = load(path, settings)?;
    let x = select_element(&problem.structure, &args.x)?;
    let cfg = DilationConfig {
        t_final: args.t,
        n_paths: args.paths,
        n_steps: args.steps,
        seed: settings.seed,
        scheme: args.scheme,
    };
    cfg.validate().map_err(|e| InputError::new(e.to_string()))?;
    let (mut report, family) = match &problem.family {
        Some(f) => (RunReport::new("dilate"), Some(f.clone())),
        None => decompose_problem("dilate", &problem, settings),
    };
    report.command = "dilate".into();
    let Some(family) = family else {
        return Ok(report);
    };
    let cmp = report
        .timed("simulate", || compare_with_semigroup(&family, &x, &cfg))
        .map_err(|e| InputError::new(e.to_string()))?;
    let within = cmp.fraction_within(4.0);
    report.push(CheckSummary {
        name: "dilation_vs_semigroup".into(),
        residual: cmp.max_abs_z(),
        normalized_residual: cmp.max_abs_z(),
        scale: 1.0,
        tolerance: 4.0,
        passed: within >= 0.95 && cmp.zero_variance_mismatch <= settings.tol,
        witness: None,
    });
    if args.scheme == Scheme::UnitaryIncrement {
        report.push(
            (&CheckReport::new("unitarity", cmp.mc.max_unitarity_defect, 1.0, 1e-10, None)).into(),
        );
    }
    report.dilation = Some(DilationSummary {
        t: args.t,
        n_paths: args.paths,
        n_steps: args.steps,
        seed: settings.seed,
        scheme: args.scheme.to_string(),
        mean: element_to_json(&cmp.mc.mean),
        exact: element_to_json(&cmp.exact),
        std_error: cmp
            .mc
            .std_error
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|i| m.row(i).iter().copied().collect())
                    .collect()
            })
            .collect(),
        max_abs_z: cmp.max_abs_z(),
        fraction_within_4: within,
        max_unitarity_defect: cmp.mc.max_unitarity_defect,
    });
    Ok(report)
}

pub fn cmd_corner(
    dim: usize,
    size: usize,
    spacing: f64,
    ms: &[usize],
    settings: &Settings,
) -> Result<RunReport, InputError> {
    let grid = GridSpec::new(dim, size, spacing).map_err(|e| InputError::new(e.to_string()))?;
    if let Some(&m) = ms.iter().find(|&&m| m == 0 || m > grid.ambient_dim()) {
        return Err(InputError::new(format!(
            "--m {m} outside 1..={}",
            grid.ambient_dim()
        )));
    }
    let mut report = RunReport::new("corner");
    let rows = report.timed("corner_suite", || {
        proposition_suite(&grid, ms, settings.tol)
    });
    let rows = match rows {
        Ok(rows) => rows,
        Err(e) => {
            report.push(CheckSummary {
                name: "corner_extraction".into(),
                residual: f64::NAN,
                normalized_residual: f64::NAN,
                scale: 1.0,
                tolerance: settings.tol,
                passed: false,
                witness: None,
            });
            eprintln!("corner extraction failed: {e}");
            return Ok(report);
        }
    };
    let band = grid.bandwidth();
    for row in &rows {
        let m = row.m;
        report.push(CheckSummary::from(&row.invariance).renamed(format!("vn_invariance[m={m}]")));
        let mut sharp = CheckSummary::from(&row.invariance_below)
            .renamed(format!("vn_invariance_fails_below[m={m}]"));
        sharp.passed = !row.invariance_below.passed;
        sharp.witness = None;
        report.push(sharp);
        report.push(
            CheckSummary::from(&row.traceless).renamed(format!("traceless_derivation[m={m}]")),
        );
        report.push(CheckSummary::from(&row.weak_form).renamed(format!("weak_form[m={m}]")));
        report.push(
            CheckSummary::from(&row.domination).renamed(format!("dissipation_domination[m={m}]")),
        );
        report.corner.push(CornerRowSummary {
            m,
            mapping_bound: row.mapping_bound,
            invariance_n: (m + band).min(grid.ambient_dim()),
            n_derivations: row.n_derivations,
        });
    }
    Ok(report)
}

/// The M_2 dephasing generator from `H = iσ_z`.
pub fn dephasing_spec() -> ProblemSpec {
    let s = BlockStructure::factor(2).expect("valid");
    let h = s
        .element(vec![CMatrix::from_row_slice(2, 2, &[I, ZERO, ZERO, -I])])
        .expect("2x2");
    let family = DerivationFamily::new(s, vec![h]).expect("anti-self-adjoint");
    let mut meta = BTreeMap::new();
    meta.insert("name".into(), "dephasing".into());
    ProblemSpec::from_family(&family, meta)
}

/// Symmetric two-state Markov generator on the abelian algebra ℂ ⊕ ℂ, in
/// the orthonormal basis `(P_1, P_2)`.
pub fn markov_spec() -> ProblemSpec {
    let mut meta = BTreeMap::new();
    meta.insert("name".into(), "markov".into());
    ProblemSpec {
        schema: SPEC_SCHEMA.into(),
        structure: StructureSpec {
            dims: vec![1, 1],
            weights: None,
        },
        generator: GeneratorSpec::Superop(crate::format::SuperopSpec {
            basis: crate::format::HS_BASIS_TAG.into(),
            matrix: vec![vec![[-1.0, 0.0], [1.0, 0.0]], vec![[1.0, 0.0], [-1.0, 0.0]]],
        }),
        metadata: meta,
    }
}

pub fn cmd_demo(name: &str, settings: &Settings) -> Result<RunReport, InputError> {
    let spec = match name {
        "dephasing" => dephasing_spec(),
        "markov" => markov_spec(),
        "grid" => {
            let mut r = cmd_corner(1, 64, 1.0, &[4, 8, 16], settings)?;
            r.command = "demo grid".into();
            return Ok(r);
        }
        other => {
            return Err(InputError::new(format!(
                "unknown demo {other:?} (dephasing, markov, grid)"
            )))
        }
    };
    let problem = spec.resolve(settings.weights.as_deref())?;
    let (report, _) = decompose_problem(&format!("demo {name}"), &problem, settings);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors_pick_the_documented_elements() {
        let s = BlockStructure::unweighted(vec![1, 3]).unwrap();
        assert_eq!(select_element(&s, "identity").unwrap(), s.identity());
        assert_eq!(
            select_element(&s, "auto").unwrap(),
            s.matrix_unit(1, 0, 1).unwrap()
        );
        assert_eq!(
            select_element(&s, "unit:2,3,1").unwrap(),
            s.matrix_unit(1, 2, 0).unwrap()
        );
        let r = select_element(&s, "random:4").unwrap();
        assert!(r.selfadjointness_defect() <= 1e-15);
        let abelian = BlockStructure::unweighted(vec![1, 1]).unwrap();
        assert_eq!(
            select_element(&abelian, "auto").unwrap(),
            abelian.identity()
        );
    }

    #[test]
    fn malformed_selectors_are_input_errors() {
        let s = BlockStructure::factor(2).unwrap();
        for bad in [
            "",
            "unit:1,1",
            "unit:0,1,1",
            "unit:1,3,1",
            "unit:a,b,c",
            "random:",
            "random:-1",
            "eye",
        ] {
            assert!(select_element(&s, bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn demo_specs_resolve_to_their_generators() {
        let d = dephasing_spec().resolve(None).unwrap();
        assert_eq!(d.family.as_ref().map(DerivationFamily::len), Some(1));
        let m = markov_spec().resolve(None).unwrap();
        assert!(m.family.is_none());
        assert!(check_conservative(&m.generator, 1e-12).passed);
        assert!(!relation2_check(&m.generator, 1e-9).passed);
    }

    #[test]
    fn weights_override_reexpresses_a_superop_file() {
        let base = markov_spec().resolve(None).unwrap();
        let heavy = markov_spec().resolve(Some(&[2.0, 5.0])).unwrap();
        let one = heavy.structure.identity();
        let p1 = heavy.structure.matrix_unit(0, 0, 0).unwrap();
        // the map itself is unchanged, only its coordinates move
        let a = base
            .generator
            .apply(&base.structure.matrix_unit(0, 0, 0).unwrap())
            .unwrap();
        let b = heavy.generator.apply(&p1).unwrap();
        assert!((a.block(0)[(0, 0)] - b.block(0)[(0, 0)]).norm() < 1e-12);
        assert!(heavy.generator.apply(&one).unwrap().max_abs() < 1e-12);
    }
}
