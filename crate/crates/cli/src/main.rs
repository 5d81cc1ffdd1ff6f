use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bucket_trees::bijections::{bucket_to_diamond, cluster, debucket, diamond_to_bucket, IncreasingDiamond};
use bucket_trees::codec::{decode, encode, to_doc};
use bucket_trees::dist_desc::{pmf_tau, pmf_x, pmf_y, pmf_y_conditional};
use bucket_trees::dist_k::{limit_k, pmf_k, pmf_k_exact};
use bucket_trees::enumerate::{enumerate_canonical, enumerate_trees, exact_statistic_pmf, Statistic};
use bucket_trees::grow::sample_tree;
use bucket_trees::scalar::{fmt_rational, Q};
use bucket_trees::spectral::indicial_roots;
use bucket_trees::urns::{build_urn, urn_spectrum, UrnRunner};
use bucket_trees::verify::{run_criterion, Level, VerifyReport};
use bucket_trees::{BucketTree, FamilySpec, RngStream};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "bucket-trees", version, about = "Sample, enumerate and analyse bucket increasing trees")]
struct Cli {
    /// Tree family, e.g. `recursive:b=2`, `ary:b=2,d=3`, `port:b=3,alpha=1`.
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    /// JSON document.
    Doc,
}

#[derive(Subcommand)]
enum Command {
    /// Grow random trees with the family's growth rule.
    Grow {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// List all trees of size n with their weights, or an exact statistic PMF.
    Enumerate {
        #[arg(long)]
        n: usize,
        /// One of K, Y:j, X:j, N:k, tau:j.
        #[arg(long)]
        pmf: Option<String>,
        /// Canonical (unordered) representatives instead of ordered trees.
        #[arg(long)]
        canonical: bool,
    },
    /// Law of the size of the bucket holding label n.
    PmfK {
        #[arg(long)]
        n: Option<usize>,
        /// The n -> infinity limit law.
        #[arg(long)]
        limit: bool,
        /// Exact rational masses.
        #[arg(long)]
        exact: bool,
    },
    /// Law of the number of descendants of label j.
    Descendants {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        /// Condition on label j entering its bucket at position l.
        #[arg(long)]
        conditional: Option<usize>,
        #[arg(long)]
        exact: bool,
    },
    /// Law of the out-degree of the bucket holding label j.
    Degree {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Law of the saturation time of the bucket holding label j.
    Tau {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        exact: bool,
    },
    /// Convert between increasing trees, bucket trees and diamonds. Reads one
    /// object per line from the arguments or stdin.
    Convert {
        #[arg(long, value_enum)]
        from: Shape,
        #[arg(long, value_enum)]
        to: Shape,
        /// Bucket capacity of the target (clustering) or source (bucket input).
        #[arg(long)]
        b: Option<u32>,
        inputs: Vec<String>,
    },
    /// Mean urn compositions and node-type estimates over replicates.
    Urn {
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
    },
    /// Urn eigenvalues and phase indicators over a range of b.
    UrnSpectrum {
        #[arg(long)]
        b_range: Option<String>,
    },
    /// Indicial roots and Re(lambda_2) over a range of b.
    Spectrum {
        #[arg(long)]
        b_range: Option<String>,
    },
    /// Run the verification criteria.
    Verify {
        #[arg(long, default_value = "quick")]
        level: Level,
        /// Restrict to these criteria.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Shape {
    /// Ordinary increasing tree, written as a bucket tree with b = 1.
    Tree,
    Bucket,
    Diamond,
}

struct Output {
    format: Format,
    sink: Box<dyn Write>,
}

impl Output {
    fn open(format: Format, path: Option<&PathBuf>) -> Result<Self> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { format, sink })
    }

    /// Rows as CSV with a header, or as a JSON array.
    fn rows<R: Serialize>(&mut self, rows: &[R]) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut self.sink);
                for r in rows {
                    w.serialize(r)?;
                }
                w.flush()?;
            }
            Format::Doc => self.doc(&rows)?,
        }
        Ok(())
    }

    fn doc<D: Serialize + ?Sized>(&mut self, doc: &D) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.sink, doc)?;
        writeln!(self.sink)?;
        Ok(())
    }

    fn lines<S: AsRef<str>>(&mut self, lines: &[S]) -> Result<()> {
        for l in lines {
            writeln!(self.sink, "{}", l.as_ref())?;
        }
        Ok(())
    }
}

fn family(cli: &Cli) -> Result<FamilySpec> {
    let text = cli.family.as_deref().context("--family is required for this command")?;
    Ok(text.parse()?)
}

/// `a..z` or `a..=z` (both inclusive), or a single `b`.
fn b_range(text: Option<&str>, default: u32) -> Result<Vec<u32>> {
    let Some(text) = text else { return Ok(vec![default]) };
    let (lo, hi) = match text.split_once("..") {
        Some((lo, hi)) => (lo.parse::<u32>()?, hi.trim_start_matches('=').parse::<u32>()?),
        None => {
            let b = text.parse::<u32>()?;
            (b, b)
        }
    };
    if lo == 0 || lo > hi {
        bail!("invalid b range `{text}`");
    }
    Ok((lo..=hi).collect())
}

#[derive(Serialize)]
struct WeightedRow {
    tree: String,
    weight: String,
}

#[derive(Serialize)]
struct SpectrumRow {
    b: u32,
    index: usize,
    re: f64,
    im: f64,
    residual: f64,
    /// Re(lambda_2), repeated on every row of the same b.
    second_real: Option<f64>,
}

#[derive(Serialize)]
struct UrnSpectrumRow {
    b: u32,
    index: usize,
    re: f64,
    im: f64,
    backward_error: f64,
    phase_indicator: f64,
    closed_form_matches: bool,
}

#[derive(Serialize)]
struct UrnRow {
    step: usize,
    kind: &'static str,
    /// Ball type for compositions, bucket load for node-type estimates.
    index: usize,
    mean: f64,
}

fn read_inputs(inputs: &[String]) -> Result<Vec<String>> {
    if !inputs.is_empty() {
        return Ok(inputs.to_vec());
    }
    let mut out = Vec::new();
    for line in io::stdin().lock().lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(line.trim().to_string());
        }
    }
    Ok(out)
}

fn convert_one(text: &str, from: Shape, to: Shape, b: Option<u32>) -> Result<String> {
    let source: BucketTree = match from {
        Shape::Tree => decode(text, 1)?,
        Shape::Bucket => decode(text, b.context("--b is required for bucket input")?)?,
        Shape::Diamond => diamond_to_bucket(&text.parse::<IncreasingDiamond>()?)?,
    };
    Ok(match (from, to) {
        (_, Shape::Diamond) => bucket_to_diamond(&source)?.to_string(),
        (Shape::Tree, Shape::Bucket) => encode(&cluster(&source, b.context("--b is required for clustering")?)?),
        (_, Shape::Bucket) => encode(&source),
        (Shape::Tree, Shape::Tree) => encode(&source),
        (_, Shape::Tree) => encode(&debucket(&source)),
    })
}

fn run(cli: &Cli) -> Result<bool> {
    let mut out = Output::open(cli.format, cli.out.as_ref())?;
    match &cli.command {
        Command::Grow { n, count } => {
            let f = family(cli)?;
            let root = RngStream::new(cli.seed);
            let trees: Vec<BucketTree> =
                (0..*count as u64).map(|i| sample_tree(&f, *n, &mut root.split(i))).collect::<Result<_, _>>()?;
            match cli.format {
                Format::Csv => out.lines(&trees.iter().map(encode).collect::<Vec<_>>())?,
                Format::Doc => out.doc(&trees.iter().map(to_doc).collect::<Vec<_>>())?,
            }
        }
        Command::Enumerate { n, pmf, canonical } => {
            let f = family(cli)?;
            match pmf {
                Some(stat) => {
                    let stat: Statistic = stat.parse()?;
                    out.rows(&exact_statistic_pmf(&f, *n, stat)?.rows())?;
                }
                None => {
                    let set = if *canonical { enumerate_canonical(&f, *n)? } else { enumerate_trees(&f, *n)? };
                    let rows: Vec<WeightedRow> =
                        set.trees.iter().map(|(t, w)| WeightedRow { tree: encode(t), weight: fmt_rational(w) }).collect();
                    out.rows(&rows)?;
                }
            }
        }
        Command::PmfK { n, limit, exact } => {
            let f = family(cli)?;
            let rows = match (limit, n) {
                (true, _) => limit_k(&f)?.rows(),
                (false, Some(n)) if *exact => pmf_k_exact(&f, *n)?.rows(),
                (false, Some(n)) => pmf_k(&f, *n)?.rows(),
                (false, None) => bail!("pmf-k needs --n or --limit"),
            };
            out.rows(&rows)?;
        }
        Command::Descendants { n, j, conditional, exact } => {
            let f = family(cli)?;
            let rows = match (conditional, exact) {
                (Some(l), true) => pmf_y_conditional::<Q>(&f, *n, *l, *j)?.rows(),
                (Some(l), false) => pmf_y_conditional::<f64>(&f, *n, *l, *j)?.rows(),
                (None, true) => pmf_y::<Q>(&f, *n, *j)?.rows(),
                (None, false) => pmf_y::<f64>(&f, *n, *j)?.rows(),
            };
            out.rows(&rows)?;
        }
        Command::Degree { n, j, exact } => {
            let f = family(cli)?;
            let rows = if *exact { pmf_x::<Q>(&f, *n, *j)?.rows() } else { pmf_x::<f64>(&f, *n, *j)?.rows() };
            out.rows(&rows)?;
        }
        Command::Tau { n, j, exact } => {
            let f = family(cli)?;
            let rows =
                if *exact { pmf_tau::<Q>(&f, *n, *j)?.rows() } else { pmf_tau::<f64>(&f, *n, *j)?.rows() };
            out.rows(&rows)?;
        }
        Command::Convert { from, to, b, inputs } => {
            let converted: Vec<String> =
                read_inputs(inputs)?.iter().map(|t| convert_one(t, *from, *to, *b)).collect::<Result<_>>()?;
            match cli.format {
                Format::Csv => out.lines(&converted)?,
                Format::Doc => out.doc(&converted)?,
            }
        }
        Command::Urn { steps, replicates } => {
            let f = family(cli)?;
            let urn = build_urn(&f)?;
            let root = RngStream::new(cli.seed);
            let runs: Vec<Vec<(Vec<f64>, Vec<f64>)>> = (0..*replicates as u64)
                .into_par_iter()
                .map(|r| -> Result<_> {
                    let mut rng = root.split(r);
                    let mut runner = UrnRunner::new(&urn);
                    let scale = runner.scale() as f64;
                    let mut path = Vec::with_capacity(steps + 1);
                    for s in 0..=*steps {
                        if s > 0 {
                            runner.draw(&mut rng)?;
                        }
                        let comp = runner.state().iter().map(|&x| x as f64 / scale).collect();
                        path.push((comp, runner.node_estimates_f64(&urn)));
                    }
                    Ok(path)
                })
                .collect::<Result<_>>()?;
            let reps = runs.len().max(1) as f64;
            let mut rows = Vec::new();
            for s in 0..=*steps {
                let types = urn.types();
                for t in 0..types {
                    let mean = runs.iter().map(|p| p[s].0[t]).sum::<f64>() / reps;
                    rows.push(UrnRow { step: s, kind: "composition", index: t, mean });
                }
                for k in 0..f.b as usize {
                    let mean = runs.iter().map(|p| p[s].1[k]).sum::<f64>() / reps;
                    rows.push(UrnRow { step: s, kind: "nodes", index: k + 1, mean });
                }
            }
            out.rows(&rows)?;
        }
        Command::UrnSpectrum { b_range: range } => {
            let f = family(cli)?;
            let mut rows = Vec::new();
            let mut ok = true;
            for b in b_range(range.as_deref(), f.b)? {
                let spec = urn_spectrum(&build_urn(&f.with_b(b))?)?;
                ok &= spec.closed_form_matches;
                for (i, (l, e)) in spec.eigenvalues.iter().zip(&spec.backward_errors).enumerate() {
                    rows.push(UrnSpectrumRow {
                        b,
                        index: i + 1,
                        re: l.re,
                        im: l.im,
                        backward_error: *e,
                        phase_indicator: spec.phase_indicator,
                        closed_form_matches: spec.closed_form_matches,
                    });
                }
            }
            out.rows(&rows)?;
            out.sink.flush()?;
            return Ok(ok);
        }
        Command::Spectrum { b_range: range } => {
            let f = family(cli)?;
            let kappa = f.kappa()?;
            let mut rows = Vec::new();
            for b in b_range(range.as_deref(), f.b)? {
                let roots = indicial_roots(b, &kappa)?;
                for (i, (l, r)) in roots.roots.iter().zip(&roots.residuals).enumerate() {
                    rows.push(SpectrumRow {
                        b,
                        index: i + 1,
                        re: l.re,
                        im: l.im,
                        residual: *r,
                        second_real: roots.second_real(),
                    });
                }
            }
            out.rows(&rows)?;
        }
        Command::Verify { level, criteria } => {
            let ids: Vec<u8> = if criteria.is_empty() {
                match level {
                    Level::Quick => (1..=6).collect(),
                    Level::Full => (1..=8).collect(),
                }
            } else {
                criteria.clone()
            };
            let reports = ids
                .par_iter()
                .map(|&id| run_criterion(id, *level, cli.seed))
                .collect::<Result<Vec<_>, _>>()?;
            let report = VerifyReport {
                level: *level,
                seed: cli.seed,
                passed: reports.iter().all(|r| r.passed),
                criteria: reports,
            };
            match cli.format {
                Format::Doc => out.doc(&report)?,
                Format::Csv => {
                    let lines: Vec<String> = report.criteria.iter().map(ToString::to_string).collect();
                    out.lines(&lines)?;
                }
            }
            out.sink.flush()?;
            return Ok(report.passed);
        }
    }
    out.sink.flush()?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
