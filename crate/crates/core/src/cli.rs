//! Command-line front end. Every command writes one report (JSON by
//! default, CSV with `--csv`) to stdout or `--report`; matrix outputs go to
//! the paths named by `--out` / `--out-dir`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::basis::{
    basis_constant, biorthogonal_inverse, dual_basis_constant, natural_projection,
    quasinormality_bounds, summing_counterexample, transform_left, transform_right_diagonal,
    transform_right_permutation, unconditional_constant, BasisPair, ConstantEstimate, SearchBudget,
};
use crate::error::{Error, Result};
use crate::kernel::{polar_decompose, spectral_norm, Permutation};
use crate::matrix::DenseMatrix;
use crate::olevskii::{
    haar_matrix, keylemma_assemble, olevskii_block, rank1_conjugation_witness, validate_plan,
    weight_matrix, ConditionalModel, OlevskiiPlan, PlanLimits, DEFAULT_ALPHA,
};
use crate::report::{indices, num, to_json, Table};
use crate::riesz::{
    riesz_diagnostic, riesz_diagnostic_diagonal, RieszReport, RieszThresholds, RieszVerdict,
};
use crate::selection::{
    cardinality_profile, default_cut_ratio, harmonic_demo, ratio_limit_check, segment_cut,
    select_subsets, DemoConfig, DEFAULT_RATIO_TOLERANCE,
};
use crate::spectrum::SpectrumSequence;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "schauder",
    version,
    about = "Basis constants and conditional-basis constructions on finite sections"
)]
pub struct RunConfig {
    /// Emit the report as JSON (default).
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit the report as CSV with a header row.
    #[arg(long, global = true)]
    pub csv: bool,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl RunConfig {
    pub fn format(&self) -> OutputFormat {
        if self.csv {
            OutputFormat::Csv
        } else {
            OutputFormat::Json
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct BudgetArgs {
    /// Largest dimension searched exhaustively.
    #[arg(long, default_value_t = 16)]
    pub exact_cutoff: usize,
    /// Random subsets drawn above the cutoff.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            exact_cutoff: self.exact_cutoff,
            samples: self.samples,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args, Clone)]
pub struct PairArgs {
    /// Basis section F in matrix text format.
    #[arg(long, value_name = "PATH")]
    pub matrix: PathBuf,
    /// Inverse section G*; computed from F when omitted.
    #[arg(long, value_name = "PATH")]
    pub gstar: Option<PathBuf>,
}

impl PairArgs {
    fn load(&self) -> Result<BasisPair> {
        let f = DenseMatrix::load(&self.matrix)?;
        match &self.gstar {
            Some(g) => BasisPair::new(f, DenseMatrix::load(g)?),
            None => biorthogonal_inverse(&f),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Haar-type orthogonal matrix A_k.
    Haar {
        #[arg(long)]
        k: usize,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Diagonal weight matrix T_(k,alpha).
    Weight {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Block pair (T_(k,alpha) A_k^T, A_k T_(k,alpha)^-1).
    Block {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Summing-type counterexample pair of size N.
    Counterexample {
        #[arg(long)]
        n: usize,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Basis and unconditional constants of a pair.
    Constants {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Basis constant of the dual system.
    DualConstants {
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Condition numbers of leading sections.
    Riesz {
        #[arg(long, value_name = "PATH", required_unless_present = "diagonal")]
        matrix: Option<PathBuf>,
        /// Use diag(spectrum) instead of a matrix file (tag or file).
        #[arg(long, value_name = "SPECTRUM", conflicts_with = "matrix")]
        diagonal: Option<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        sections: Vec<usize>,
        #[arg(long, default_value_t = 1e2)]
        bound: f64,
        #[arg(long, default_value_t = 1e3)]
        divergence: f64,
    },
    /// Polar decomposition M = U A.
    Polar {
        #[arg(long, value_name = "PATH")]
        matrix: PathBuf,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Left, diagonal or permutation transform of a pair, with constants before and after.
    Transform {
        #[command(flatten)]
        pair: PairArgs,
        /// Invertible X for (XF, G*X^-1).
        #[arg(long, value_name = "PATH", group = "kind")]
        left: Option<PathBuf>,
        /// Nonzero diagonal d for (FD, D^-1 G*).
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            group = "kind"
        )]
        diag: Option<Vec<f64>>,
        /// 1-based permutation images for (F U_pi, U_pi^T G*).
        #[arg(long, value_delimiter = ',', group = "kind")]
        perm: Option<Vec<usize>>,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Rank-one projection conjugated by diag(lambda1+w, lambda2-w).
    LpWitness {
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        lambda2: f64,
        /// Spectral window half-width.
        #[arg(long, default_value_t = 0.0)]
        width: f64,
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
    },
    /// Window cardinalities Card([t/delta, t] ∩ spectrum).
    Profile {
        /// `harmonic:N`, `geometric:r:N`, or a file with one value per line.
        #[arg(long)]
        spectrum: String,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        ts: Vec<f64>,
    },
    /// Inductive subset selection and plan.
    Select {
        #[arg(long)]
        spectrum: String,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value_t = 1e3)]
        max_ratio: f64,
        /// Writes plan.json and the assembled model matrices.
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Geometric refinement of a decreasing grid.
    Cut {
        #[arg(long)]
        mu: String,
        /// Ratio bound; defaults to max(2, 1.1·norm/mu_1).
        #[arg(long)]
        m: Option<f64>,
        /// Operator norm used for the default ratio bound (defaults to mu_1).
        #[arg(long)]
        norm: Option<f64>,
    },
    /// Tail test of lambda_n / lambda_(n+1) -> 1.
    RatioCheck {
        #[arg(long)]
        spectrum: String,
        #[arg(long)]
        tail: usize,
        #[arg(long, default_value_t = DEFAULT_RATIO_TOLERANCE)]
        tolerance: f64,
    },
    /// End-to-end conditional-basis construction for diag(1, 1/2, 1/3, ...).
    DemoHarmonic {
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        #[arg(long, default_value_t = 2.0)]
        delta: f64,
        /// Length of the harmonic spectrum sample.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "64,1024,4096")]
        sections: Vec<usize>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Haar { .. } => "haar",
            Command::Weight { .. } => "weight",
            Command::Block { .. } => "block",
            Command::Counterexample { .. } => "counterexample",
            Command::Constants { .. } => "constants",
            Command::DualConstants { .. } => "dual-constants",
            Command::Riesz { .. } => "riesz",
            Command::Polar { .. } => "polar",
            Command::Transform { .. } => "transform",
            Command::LpWitness { .. } => "lp-witness",
            Command::Profile { .. } => "profile",
            Command::Select { .. } => "select",
            Command::Cut { .. } => "cut",
            Command::RatioCheck { .. } => "ratio-check",
            Command::DemoHarmonic { .. } => "demo-harmonic",
        }
    }
}

/// A finished command: the report in both renderings and the exit status.
pub struct Outcome {
    pub json: String,
    pub table: Table,
    pub exit_code: i32,
}

impl Outcome {
    fn new(report: &impl Serialize, table: Table) -> Self {
        Outcome {
            json: to_json(report),
            table,
            exit_code: EXIT_OK,
        }
    }

    fn failing_if(mut self, failed: bool) -> Self {
        if failed {
            self.exit_code = EXIT_VALIDATION;
        }
        self
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => self.json.clone(),
            OutputFormat::Csv => self.table.to_csv(),
        }
    }
}

/// Runs the command and writes its report; returns the process exit code.
pub fn run(config: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = match execute(config) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "schauder {}: {e}", config.command.name());
            if let Error::PlanRejected(report) = &e {
                let _ = stdout.write_all(to_json(report).as_bytes());
            }
            return if e.is_validation_failure() {
                EXIT_VALIDATION
            } else {
                EXIT_USAGE
            };
        }
    };
    let text = outcome.render(config.format());
    let written = match &config.report {
        Some(path) => fs::write(path, text).map_err(Error::from),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "schauder {}: {e}", config.command.name());
        return EXIT_USAGE;
    }
    outcome.exit_code
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn save_into(dir: &Path, name: &str, m: &DenseMatrix) -> Result<()> {
    m.save(dir.join(name))
}

fn matrix_output(m: &DenseMatrix, out: &Option<PathBuf>, label: &str) -> Result<Outcome> {
    if let Some(path) = out {
        m.save(path)?;
    }
    let report = json!({
        "command": label,
        "rows": m.rows(),
        "cols": m.cols(),
        "out": out.as_ref().map(|p| p.display().to_string()),
        "matrix": (0..m.rows()).map(|i| m.row(i).to_vec()).collect::<Vec<_>>(),
    });
    let mut table = Table::new(&["row", "col", "value"]);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            table.push(vec![
                (i + 1).to_string(),
                (j + 1).to_string(),
                num(m.get(i, j)),
            ]);
        }
    }
    Ok(Outcome::new(&report, table))
}

fn estimate_row(table: &mut Table, kind: &str, e: &ConstantEstimate) {
    table.push(vec![
        kind.to_string(),
        num(e.value),
        format!("{:?}", e.mode),
        indices(&e.witness),
        e.evaluations.to_string(),
    ]);
}

fn constants_table() -> Table {
    Table::new(&["kind", "value", "mode", "witness", "evaluations"])
}

fn riesz_table(r: &RieszReport) -> Table {
    let mut t = Table::new(&["section", "condition_number", "verdict"]);
    for (n, k) in r.section_sizes.iter().zip(&r.condition_numbers) {
        t.push(vec![
            n.to_string(),
            num(k.value()),
            format!("{:?}", r.verdict),
        ]);
    }
    t
}

fn export_model(dir: &Path, plan: &OlevskiiPlan, model: &ConditionalModel) -> Result<()> {
    ensure_dir(dir)?;
    fs::write(dir.join("plan.json"), to_json(plan))?;
    save_into(dir, "F.mtx", &model.f)?;
    save_into(dir, "Gstar.mtx", &model.gstar)?;
    save_into(dir, "X.mtx", &model.x)?;
    save_into(dir, "U.mtx", &model.u)?;
    save_into(dir, "C.mtx", &model.c)?;
    save_into(
        dir,
        "Utilde.mtx",
        &crate::kernel::permutation_matrix(&model.rearrangement),
    )?;
    Ok(())
}

/// Executes a command without writing the report.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    match &config.command {
        Command::Haar { k, out } => matrix_output(&haar_matrix(*k)?, out, "haar"),
        Command::Weight { k, alpha, out } => {
            matrix_output(&weight_matrix(*k, *alpha)?, out, "weight")
        }

        Command::Block { k, alpha, out_dir } => {
            let pair = olevskii_block(*k, *alpha)?;
            if let Some(dir) = out_dir {
                ensure_dir(dir)?;
                save_into(dir, "F.mtx", pair.f())?;
                save_into(dir, "Gstar.mtx", pair.gstar())?;
            }
            let (lo, hi) = quasinormality_bounds(pair.f());
            let report = json!({
                "k": k,
                "alpha": alpha,
                "dimension": pair.dim(),
                "minColumnNorm": lo,
                "maxColumnNorm": hi,
                "quasinormalityRatio": hi / lo,
                "biorthogonalDeviation": pair.gstar().matmul(pair.f())?.identity_deviation(),
            });
            let mut t = Table::new(&["k", "alpha", "dimension", "min_norm", "max_norm", "ratio"]);
            t.push(vec![
                k.to_string(),
                num(*alpha),
                pair.dim().to_string(),
                num(lo),
                num(hi),
                num(hi / lo),
            ]);
            Ok(Outcome::new(&report, t))
        }

        Command::Counterexample { n, out_dir } => {
            let pair = summing_counterexample(*n)?;
            if let Some(dir) = out_dir {
                ensure_dir(dir)?;
                save_into(dir, "F.mtx", pair.f())?;
                save_into(dir, "Gstar.mtx", pair.gstar())?;
            }
            let first = spectral_norm(&natural_projection(&pair, &[1])?);
            let report = json!({
                "n": n,
                "firstProjectionNorm": first,
                "sqrtN": (*n as f64).sqrt(),
            });
            let mut t = Table::new(&["n", "first_projection_norm", "sqrt_n"]);
            t.push(vec![n.to_string(), num(first), num((*n as f64).sqrt())]);
            Ok(Outcome::new(&report, t))
        }

        Command::Constants { pair, budget } => {
            let pair = pair.load()?;
            let basis = basis_constant(&pair);
            let unconditional = unconditional_constant(&pair, &budget.budget());
            let report = json!({
                "dimension": pair.dim(),
                "basis": basis.value,
                "basisWitness": basis.witness,
                "basisEstimate": basis,
                "unconditional": unconditional,
                "budget": budget.budget(),
            });
            let mut t = constants_table();
            estimate_row(&mut t, "basis", &basis);
            estimate_row(&mut t, "unconditional", &unconditional);
            Ok(Outcome::new(&report, t))
        }

        Command::DualConstants { pair } => {
            let pair = pair.load()?;
            let dual = dual_basis_constant(&pair);
            let transposed = basis_constant(&pair.transposed());
            let basis = basis_constant(&pair);
            let report = json!({
                "dimension": pair.dim(),
                "dual": dual,
                "transposedPairBasis": transposed,
                "basis": basis.value,
            });
            let mut t = Table::new(&["kind", "value"]);
            t.push(vec!["dual".into(), num(dual)]);
            t.push(vec!["transposed_pair_basis".into(), num(transposed.value)]);
            t.push(vec!["basis".into(), num(basis.value)]);
            Ok(Outcome::new(&report, t))
        }

        Command::Riesz {
            matrix,
            diagonal,
            sections,
            bound,
            divergence,
        } => {
            let thresholds = RieszThresholds {
                bound: *bound,
                divergence: *divergence,
            };
            let report = match (matrix, diagonal) {
                (Some(path), _) => {
                    riesz_diagnostic(&DenseMatrix::load(path)?, sections, &thresholds)?
                }
                (None, Some(src)) => {
                    let s = SpectrumSequence::from_source(src)?;
                    riesz_diagnostic_diagonal(s.values(), sections, &thresholds)?
                }
                (None, None) => {
                    return Err(Error::InvalidInput("give --matrix or --diagonal".into()))
                }
            };
            let table = riesz_table(&report);
            Ok(Outcome::new(&report, table))
        }

        Command::Polar { matrix, out_dir } => {
            let m = DenseMatrix::load(matrix)?;
            let p = polar_decompose(&m)?;
            if let Some(dir) = out_dir {
                ensure_dir(dir)?;
                save_into(dir, "U.mtx", &p.unitary)?;
                save_into(dir, "A.mtx", &p.positive)?;
            }
            let unitary_dev = p
                .unitary
                .transpose()
                .matmul(&p.unitary)?
                .identity_deviation();
            let recon_dev = p.unitary.matmul(&p.positive)?.max_abs_diff(&m);
            let symmetry_dev = p.positive.max_abs_diff(&p.positive.transpose());
            let report = json!({
                "dimension": m.rows(),
                "unitaryDeviation": unitary_dev,
                "reconstructionDeviation": recon_dev,
                "symmetryDeviation": symmetry_dev,
                "unitary": (0..m.rows()).map(|i| p.unitary.row(i).to_vec()).collect::<Vec<_>>(),
                "positive": (0..m.rows()).map(|i| p.positive.row(i).to_vec()).collect::<Vec<_>>(),
            });
            let mut t = Table::new(&["quantity", "value"]);
            t.push(vec!["unitary_deviation".into(), num(unitary_dev)]);
            t.push(vec!["reconstruction_deviation".into(), num(recon_dev)]);
            t.push(vec!["symmetry_deviation".into(), num(symmetry_dev)]);
            Ok(Outcome::new(&report, t))
        }

        Command::Transform {
            pair,
            left,
            diag,
            perm,
            out_dir,
            budget,
        } => {
            let pair = pair.load()?;
            let (kind, transformed) = match (left, diag, perm) {
                (Some(x), _, _) => ("left", transform_left(&DenseMatrix::load(x)?, &pair)?),
                (_, Some(d), _) => ("diagonal", transform_right_diagonal(&pair, d)?),
                (_, _, Some(p)) => (
                    "permutation",
                    transform_right_permutation(&pair, &Permutation::from_one_based(p)?)?,
                ),
                _ => {
                    return Err(Error::InvalidInput(
                        "give one of --left, --diag, --perm".into(),
                    ))
                }
            };
            if let Some(dir) = out_dir {
                ensure_dir(dir)?;
                save_into(dir, "F.mtx", transformed.f())?;
                save_into(dir, "Gstar.mtx", transformed.gstar())?;
            }
            let b = budget.budget();
            let before = (basis_constant(&pair), unconditional_constant(&pair, &b));
            let after = (
                basis_constant(&transformed),
                unconditional_constant(&transformed, &b),
            );
            let report = json!({
                "kind": kind,
                "before": {"basis": before.0, "unconditional": before.1},
                "after": {"basis": after.0, "unconditional": after.1},
            });
            let mut t = constants_table();
            estimate_row(&mut t, "basis_before", &before.0);
            estimate_row(&mut t, "unconditional_before", &before.1);
            estimate_row(&mut t, "basis_after", &after.0);
            estimate_row(&mut t, "unconditional_after", &after.1);
            Ok(Outcome::new(&report, t))
        }

        Command::LpWitness {
            lambda1,
            lambda2,
            width,
            epsilon,
        } => {
            let w = rank1_conjugation_witness(*lambda1, *lambda2, *width, *epsilon)?;
            let mut t = Table::new(&["lambda1", "lambda2", "width", "norm", "bound", "holds"]);
            t.push(vec![
                num(*lambda1),
                num(*lambda2),
                num(*width),
                num(w.norm_value),
                num(w.bound),
                w.holds.to_string(),
            ]);
            let holds = w.holds;
            Ok(Outcome::new(&w, t).failing_if(!holds))
        }

        Command::Profile {
            spectrum,
            delta,
            ts,
        } => {
            let s = SpectrumSequence::from_source(spectrum)?;
            let counts = cardinality_profile(&s, *delta, ts)?;
            let report = json!({"delta": delta, "ts": ts, "counts": counts});
            let mut t = Table::new(&["t", "count"]);
            for (x, c) in ts.iter().zip(&counts) {
                t.push(vec![num(*x), c.to_string()]);
            }
            Ok(Outcome::new(&report, t))
        }

        Command::Select {
            spectrum,
            alpha,
            delta,
            levels,
            max_ratio,
            out_dir,
        } => {
            let s = SpectrumSequence::from_source(spectrum)?;
            let limits = PlanLimits {
                max_ratio: *max_ratio,
            };
            let result = select_subsets(&s, *alpha, *delta, *levels)?;
            let validation = validate_plan(&s, &result.plan, &limits);
            if let Some(dir) = out_dir {
                let model = keylemma_assemble(&s, &result.plan, &limits)?;
                export_model(dir, &result.plan, &model)?;
            }
            let mut t = Table::new(&["level", "t0", "c", "d", "subset", "leftovers"]);
            for k in 0..*levels {
                let (c, d) = result.plan.c_bounds[k];
                t.push(vec![
                    (k + 1).to_string(),
                    num(result.t0_per_level[k]),
                    num(c),
                    num(d),
                    indices(&result.plan.subsets[k]),
                    indices(&result.plan.leftovers[k]),
                ]);
            }
            let valid = validation.valid;
            let report = json!({"selection": result, "validation": validation});
            Ok(Outcome::new(&report, t).failing_if(!valid))
        }

        Command::Cut { mu, m, norm } => {
            let s = SpectrumSequence::from_source(mu)?;
            let mu1 = s.values()[0];
            let ratio = m.unwrap_or_else(|| default_cut_ratio(norm.unwrap_or(mu1), mu1));
            let grid = segment_cut(s.values(), ratio)?;
            let mut t = Table::new(&["position", "value"]);
            for (i, v) in grid.points.iter().enumerate() {
                t.push(vec![(i + 1).to_string(), num(*v)]);
            }
            let report = json!({"m": ratio, "grid": grid});
            Ok(Outcome::new(&report, t))
        }

        Command::RatioCheck {
            spectrum,
            tail,
            tolerance,
        } => {
            let s = SpectrumSequence::from_source(spectrum)?;
            let r = ratio_limit_check(&s, *tail, *tolerance)?;
            let offset = s.len() - 1 - tail;
            let mut t = Table::new(&["n", "ratio"]);
            for (i, v) in r.tail_ratios.iter().enumerate() {
                t.push(vec![(offset + i + 1).to_string(), num(*v)]);
            }
            let passes = r.passes;
            Ok(Outcome::new(&r, t).failing_if(!passes))
        }

        Command::DemoHarmonic {
            levels,
            alpha,
            delta,
            n,
            sections,
            budget,
            out_dir,
        } => {
            let config = DemoConfig {
                levels: *levels,
                alpha: *alpha,
                delta: *delta,
                spectrum_len: *n,
                riesz_sections: sections.clone(),
                budget: budget.budget(),
                ..DemoConfig::default()
            };
            let (report, model) = harmonic_demo(&config)?;
            if let Some(dir) = out_dir {
                export_model(dir, &report.selection.plan, &model)?;
            }
            let mut t = Table::new(&["level", "basis", "unconditional", "mode", "witness"]);
            for (i, (b, u)) in report
                .basis_estimates
                .iter()
                .zip(&report.unconditional_estimates)
                .enumerate()
            {
                t.push(vec![
                    (i + 1).to_string(),
                    num(b.value),
                    num(u.value),
                    format!("{:?}", u.mode),
                    indices(&u.witness),
                ]);
            }
            let certified = report.plan_valid
                && report.model_check.holds()
                && report.strictly_increasing
                && report.riesz.verdict == RieszVerdict::NotRiesz;
            Ok(Outcome::new(&report, t).failing_if(!certified))
        }
    }
}

/// Rebuilds the model from a saved plan; used by tests and tooling.
pub fn assemble_from_plan(
    spectrum: &SpectrumSequence,
    plan: &OlevskiiPlan,
) -> Result<ConditionalModel> {
    keylemma_assemble(spectrum, plan, &PlanLimits::default())
}
