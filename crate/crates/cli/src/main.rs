use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use coalesce_core::coalescence::{
    default_horizon, exact_coalescence_with, kmax_upper_bounds, simulate_cftp, CftpOutcome, ForwardSimulator, Limits,
    Stability,
};
use coalesce_core::constructions::{
    nonblock_measure, pn_block_measure, product_measure, product_measure_bvn, universal_block_measure,
    verify_product_block, PermutationMixture,
};
use coalesce_core::inverse::{
    estimate_leb_measure, explore_k, latin_supports, membership, Coverage, ExploreBudget, FunctionSet, Strategy,
    SupportMode,
};
use coalesce_core::io::{
    coalescence_report_to_json, explorer_report_to_json, function_set_to_json, matrix_to_json, measure_to_json,
    parse_function_set, parse_matrix, parse_measure, parse_partition, parse_rational, partition_to_json,
    scalar_to_json, AnyMatrix, AnyMeasure,
};
use coalesce_core::lumpability::{
    block_measure_check, deterministic_classes_check, enumerate_lumpable_partitions, lumpability_test,
    BlockViolation,
};
use coalesce_core::measures::{independence_coupling, uniqueness_of_coupling, CouplingUniqueness};
use coalesce_core::{Error, FunctionMeasure, NumericPolicy, Partition, Rational, Result, Scalar, TransitionMatrix};

#[derive(Parser)]
#[command(name = "coalesce", version, about = "Grand couplings of finite Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct MatrixArg {
    /// Transition matrix JSON file, or - for standard input.
    #[arg(long)]
    matrix: String,
}

#[derive(Args)]
struct MeasureArg {
    /// Function measure JSON file, or - for standard input.
    #[arg(long)]
    measure: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum LpMode {
    Subset,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    /// All subsets of the maximal support up to --max-size.
    Exhaustive,
    /// Random subsets of the maximal support.
    Random,
    /// Sets of n functions whose images at each state form a permutation.
    Latin,
    /// Supports listed in --candidates.
    Candidates,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a matrix is stochastic and report its basic structure.
    Validate(MatrixArg),
    /// Invariant distribution.
    Invariant(MatrixArg),
    /// Period and cyclic classes.
    Period(MatrixArg),
    /// Birkhoff-von Neumann decomposition of a doubly stochastic matrix.
    Bvn(MatrixArg),
    /// Independence coupling.
    Indep(MatrixArg),
    /// Whether the independence coupling is the only coupling.
    Unique(MatrixArg),
    /// Bounds on the largest coalescence number.
    Kmax(MatrixArg),
    /// Exact coalescence number and limit partitions.
    Coalesce {
        #[command(flatten)]
        measure: MeasureArg,
        /// Maximum number of multichain states to visit.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Forward simulation until the chains reach their final classes.
    Simulate {
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum number of steps; defaults to 50 n / (smallest weight).
        #[arg(long)]
        horizon: Option<u64>,
    },
    /// Coupling from the past.
    Cftp {
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        horizon: u64,
    },
    /// Lumpability under a partition, or every lumpable partition.
    Lump {
        #[command(flatten)]
        matrix: MatrixArg,
        /// Partition JSON file; omit to enumerate.
        #[arg(long)]
        partition: Option<String>,
    },
    /// Block-measure check against a partition, or against the measure's own
    /// classes when no partition is given.
    Blockcheck {
        #[command(flatten)]
        measure: MeasureArg,
        #[arg(long)]
        partition: Option<String>,
    },
    /// Product measure over block permutations.
    Product {
        #[command(flatten)]
        matrix: MatrixArg,
        #[arg(long)]
        partition: String,
        /// Permutation mixture JSON; defaults to a decomposition of the block matrix.
        #[arg(long)]
        mixture: Option<String>,
        /// Also decide whether the product measure is a block measure.
        #[arg(long)]
        verify: bool,
    },
    /// Non-block coupling of the uniform matrix with ell random classes.
    ConstructNonblock {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ell: usize,
    },
    /// Block coupling of the uniform matrix with ell classes.
    ConstructPnblock {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        ell: usize,
    },
    /// Uniform measure on block-constant functions permuting the blocks.
    ConstructUniversal {
        #[arg(long)]
        partition: String,
    },
    /// Whether the matrix is realizable inside a function set.
    Member {
        #[command(flatten)]
        matrix: MatrixArg,
        #[arg(long)]
        functions: String,
        #[arg(long, value_enum, default_value_t = LpMode::Subset)]
        mode: LpMode,
    },
    /// Monte Carlo estimate of the fraction of random matrices realizable inside a function set.
    Estimate {
        #[arg(long)]
        functions: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for achievable coalescence numbers.
    ExploreK {
        #[command(flatten)]
        matrix: MatrixArg,
        #[arg(long, value_enum, default_value_t = StrategyArg::Exhaustive)]
        strategy: StrategyArg,
        /// Largest support size for the exhaustive strategy.
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        /// Number of random supports.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum number of candidate supports.
        #[arg(long)]
        budget: Option<usize>,
        /// JSON array of function sets, for the candidates strategy.
        #[arg(long)]
        candidates: Option<String>,
    },
}

macro_rules! on_matrix {
    ($m:expr, $p:ident => $body:expr) => {
        match $m {
            AnyMatrix::Rational($p) => $body,
            AnyMatrix::Float($p) => $body,
        }
    };
}

macro_rules! on_measure {
    ($m:expr, $mu:ident => $body:expr) => {
        match $m {
            AnyMeasure::Rational($mu) => $body,
            AnyMeasure::Float($mu) => $body,
        }
    };
}

fn read_input(path: &str) -> Result<String> {
    let mut text = String::new();
    let res = if path == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
    Ok(text)
}

fn load_matrix(path: &str) -> Result<AnyMatrix> {
    parse_matrix(&read_input(path)?)
}

fn load_measure(path: &str) -> Result<AnyMeasure> {
    parse_measure(&read_input(path)?)
}

fn load_partition(path: &str, n: usize) -> Result<Partition> {
    parse_partition(&read_input(path)?, Some(n))
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

fn matrix_n(m: &AnyMatrix) -> usize {
    on_matrix!(m, p => p.n())
}

fn validate<T: Scalar>(p: &TransitionMatrix<T>) -> Result<Value> {
    let irreducible = p.is_irreducible();
    let period = if irreducible { Some(p.period_and_cyclic_classes()?.period) } else { None };
    Ok(json!({
        "valid": true,
        "n": p.n(),
        "mode": T::MODE.as_str(),
        "irreducible": irreducible,
        "period": period,
        "doubly_stochastic": p.is_doubly_stochastic(),
    }))
}

fn period<T: Scalar>(p: &TransitionMatrix<T>) -> Result<Value> {
    let cs = p.period_and_cyclic_classes()?;
    Ok(json!({
        "period": cs.period,
        "classes": cs.classes.iter().map(|c| one_based(c)).collect::<Vec<_>>(),
    }))
}

fn bvn<T: Scalar>(p: &TransitionMatrix<T>) -> Result<Value> {
    let d = p.bvn_decompose()?;
    let terms: Vec<Value> = d
        .terms
        .iter()
        .map(|(w, perm)| json!({"weight": scalar_to_json(w), "permutation": one_based(perm)}))
        .collect();
    Ok(json!({"terms": terms, "count": terms.len()}))
}

fn unique<T: Scalar>(p: &TransitionMatrix<T>) -> Result<Value> {
    Ok(match uniqueness_of_coupling(p)? {
        CouplingUniqueness::Unique => json!({"unique": true}),
        CouplingUniqueness::Multiple { witness, rows, pair } => json!({
            "unique": false,
            "rows": [rows.0 + 1, rows.1 + 1],
            "pair": [pair.0 + 1, pair.1 + 1],
            "witness": measure_to_json(&witness),
        }),
    })
}

fn kmax<T: Scalar>(p: &TransitionMatrix<T>) -> Result<Value> {
    let b = kmax_upper_bounds(p)?;
    Ok(json!({"lower": b.lower, "upper": b.upper}))
}

fn simulate<T: Scalar>(mu: &FunctionMeasure<T>, seed: u64, horizon: Option<u64>) -> Result<Value> {
    let horizon = horizon.unwrap_or_else(|| default_horizon(mu));
    let out = ForwardSimulator::new(mu)?.run(seed, horizon);
    let steps = match out.stability {
        Stability::Stable(t) => Some(t),
        Stability::DidNotStabilize => None,
    };
    Ok(json!({
        "seed": seed,
        "horizon": horizon,
        "stabilized": steps.is_some(),
        "steps": steps,
        "partition": partition_to_json(&out.partition),
    }))
}

fn cftp<T: Scalar>(mu: &FunctionMeasure<T>, seed: u64, horizon: u64) -> Result<Value> {
    Ok(match simulate_cftp(mu, seed, horizon)? {
        CftpOutcome::Coalesced { sample, steps } => {
            json!({"seed": seed, "horizon": horizon, "coalesced": true, "sample": sample + 1, "steps": steps})
        }
        CftpOutcome::DidNotCoalesce { steps } => {
            json!({"seed": seed, "horizon": horizon, "coalesced": false, "sample": null, "steps": steps})
        }
    })
}

fn lump<T: Scalar>(p: &TransitionMatrix<T>, partition: Option<&Partition>) -> Result<Value> {
    match partition {
        Some(part) => {
            let res = lumpability_test(p, part)?;
            Ok(json!({
                "lumpable": res.lumpable,
                "lambda": res.lambda.as_ref().map(matrix_to_json),
                "violation": res.violation.map(|v| json!({"r": v.r + 1, "s": v.s + 1, "i": v.i + 1, "i2": v.i2 + 1})),
            }))
        }
        None => {
            let found: Vec<Value> = enumerate_lumpable_partitions(p)?
                .iter()
                .map(|(q, l)| json!({"partition": partition_to_json(q), "lambda": matrix_to_json(l)}))
                .collect();
            Ok(json!({"lumpable_partitions": found}))
        }
    }
}

fn describe_violation(v: &BlockViolation) -> String {
    match v {
        BlockViolation::SplitsBlock { atom, block } => format!("{atom} splits block {}", block + 1),
        BlockViolation::NotBijective { atom } => format!("{atom} sends two blocks into one"),
        BlockViolation::WrongClassCount { k, ell } => format!("k = {k} but there are {ell} blocks"),
    }
}

fn blockcheck<T: Scalar>(mu: &FunctionMeasure<T>, partition: Option<&Partition>) -> Result<Value> {
    match partition {
        Some(part) => {
            let c = block_measure_check(mu, part)?;
            let table = c.permutation_table.as_ref().map(|t| {
                t.iter()
                    .map(|(f, pi)| json!({"map": f.to_string(), "block_permutation": one_based(pi)}))
                    .collect::<Vec<_>>()
            });
            Ok(json!({
                "is_block": c.is_block,
                "permutation_table": table,
                "violation": c.violation.as_ref().map(describe_violation),
                "k": c.coalescence.as_ref().map(|r| r.k),
                "classes_are_blocks": c.classes_are_blocks,
            }))
        }
        None => {
            let c = deterministic_classes_check(mu)?;
            Ok(json!({
                "is_block": c.is_block,
                "partitions": c.partitions.iter().map(partition_to_json).collect::<Vec<_>>(),
            }))
        }
    }
}

fn load_mixture<T: Scalar>(path: &str, ell: usize) -> Result<PermutationMixture<T>> {
    let v: Value = serde_json::from_str(&read_input(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    let terms = v
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("mixture needs a \"terms\" array".into()))?;
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let w = match t.get("weight") {
            Some(Value::String(s)) => parse_rational(s)?,
            Some(Value::Number(x)) => parse_rational(&x.to_string())?,
            _ => return Err(Error::Parse("term needs a weight".into())),
        };
        let perm: Vec<usize> = t
            .get("permutation")
            .and_then(|p| serde_json::from_value::<Vec<usize>>(p.clone()).ok())
            .ok_or_else(|| Error::Parse("term needs a 1-based \"permutation\" array".into()))?;
        if perm.contains(&0) {
            return Err(Error::Parse("permutations are 1-based".into()));
        }
        out.push((T::from_rational(&w), perm.iter().map(|x| x - 1).collect()));
    }
    PermutationMixture::new(ell, out)
}

fn product<T: Scalar>(p: &TransitionMatrix<T>, part: &Partition, mixture: Option<&str>, verify: bool) -> Result<Value> {
    let rho = match mixture {
        Some(path) => Some(load_mixture::<T>(path, part.len())?),
        None => None,
    };
    if verify {
        let rho = match rho {
            Some(r) => r,
            None => {
                let nc = coalesce_core::lumpability::necessary_conditions_check(p, part)?;
                let lambda = nc.lambda.ok_or_else(|| Error::PreconditionFailed("block row sums are not constant".into()))?;
                PermutationMixture::from_bvn(part.len(), &lambda.bvn_decompose()?)?
            }
        };
        let v = verify_product_block(p, part, &rho)?;
        return Ok(json!({"is_block": v.is_block, "k": v.k, "measure": measure_to_json(&v.measure)}));
    }
    let mu = match rho {
        Some(r) => product_measure(p, part, &r)?,
        None => product_measure_bvn(p, part)?,
    };
    Ok(measure_to_json(&mu))
}

fn member<T: Scalar>(p: &TransitionMatrix<T>, g: &FunctionSet, mode: LpMode) -> Result<Value> {
    let (mode, name) = match mode {
        LpMode::Subset => (SupportMode::Subset, "subset"),
        LpMode::Exact => (SupportMode::Exact, "exact"),
    };
    let cert = membership(p, g, mode)?;
    Ok(json!({
        "feasible": cert.feasible,
        "mode": name,
        "witness": cert.weights.as_ref().map(measure_to_json),
        "min_weight": cert.min_weight.as_ref().map(scalar_to_json),
    }))
}

fn load_candidates(path: &str) -> Result<Vec<FunctionSet>> {
    let v: Value = serde_json::from_str(&read_input(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    v.as_array()
        .ok_or_else(|| Error::Parse("candidates must be a JSON array of function sets".into()))?
        .iter()
        .map(|g| coalesce_core::io::parse_function_set(&g.to_string()))
        .collect()
}

fn run(cmd: Command) -> Result<Value> {
    match cmd {
        Command::Validate(a) => on_matrix!(load_matrix(&a.matrix)?, p => validate(&p)),
        Command::Invariant(a) => on_matrix!(load_matrix(&a.matrix)?, p => {
            let pi = p.invariant_distribution()?;
            Ok(json!({"pi": pi.weights.iter().map(scalar_to_json).collect::<Vec<_>>()}))
        }),
        Command::Period(a) => on_matrix!(load_matrix(&a.matrix)?, p => period(&p)),
        Command::Bvn(a) => on_matrix!(load_matrix(&a.matrix)?, p => bvn(&p)),
        Command::Indep(a) => on_matrix!(load_matrix(&a.matrix)?, p => Ok(measure_to_json(&independence_coupling(&p)?))),
        Command::Unique(a) => on_matrix!(load_matrix(&a.matrix)?, p => unique(&p)),
        Command::Kmax(a) => on_matrix!(load_matrix(&a.matrix)?, p => kmax(&p)),
        Command::Coalesce { measure, budget } => {
            let limits = budget.map_or_else(Limits::default, |b| Limits { state_budget: b });
            on_measure!(load_measure(&measure.measure)?, mu => Ok(coalescence_report_to_json(&exact_coalescence_with(&mu, limits)?)))
        }
        Command::Simulate { measure, seed, horizon } => {
            on_measure!(load_measure(&measure.measure)?, mu => simulate(&mu, seed, horizon))
        }
        Command::Cftp { measure, seed, horizon } => on_measure!(load_measure(&measure.measure)?, mu => cftp(&mu, seed, horizon)),
        Command::Lump { matrix, partition } => {
            let m = load_matrix(&matrix.matrix)?;
            let part = partition.map(|path| load_partition(&path, matrix_n(&m))).transpose()?;
            on_matrix!(m, p => lump(&p, part.as_ref()))
        }
        Command::Blockcheck { measure, partition } => {
            let m = load_measure(&measure.measure)?;
            let n = on_measure!(&m, mu => mu.n());
            let part = partition.map(|path| load_partition(&path, n)).transpose()?;
            on_measure!(m, mu => blockcheck(&mu, part.as_ref()))
        }
        Command::Product { matrix, partition, mixture, verify } => {
            let m = load_matrix(&matrix.matrix)?;
            let part = load_partition(&partition, matrix_n(&m))?;
            on_matrix!(m, p => product(&p, &part, mixture.as_deref(), verify))
        }
        Command::ConstructNonblock { n, ell } => Ok(measure_to_json(&nonblock_measure::<Rational>(n, ell)?)),
        Command::ConstructPnblock { n, ell } => Ok(measure_to_json(&pn_block_measure::<Rational>(n, ell)?)),
        Command::ConstructUniversal { partition } => {
            let part = parse_partition(&read_input(&partition)?, None)?;
            Ok(measure_to_json(&universal_block_measure::<Rational>(&part)?))
        }
        Command::Member { matrix, functions, mode } => {
            let m = load_matrix(&matrix.matrix)?;
            let g = parse_function_set(&read_input(&functions)?)?;
            on_matrix!(m, p => member(&p, &g, mode))
        }
        Command::Estimate { functions, samples, seed } => {
            let g = parse_function_set(&read_input(&functions)?)?;
            let est = estimate_leb_measure(&g, samples, seed)?;
            Ok(json!({
                "seed": est.seed,
                "samples": est.samples,
                "hits": est.hits,
                "estimate": est.estimate,
                "stderr": est.stderr,
                "functions": function_set_to_json(&g),
            }))
        }
        Command::ExploreK { matrix, strategy, max_size, trials, seed, budget, candidates } => {
            let m = load_matrix(&matrix.matrix)?;
            let n = matrix_n(&m);
            let mut b = ExploreBudget::default();
            if let Some(c) = budget {
                b.max_candidates = c;
            }
            let strategy = match strategy {
                StrategyArg::Exhaustive => Strategy::ExhaustiveSmall { max_support_size: max_size },
                StrategyArg::Random => Strategy::RandomSupports { trials, seed },
                StrategyArg::Latin => Strategy::Candidates(latin_supports(n)?),
                StrategyArg::Candidates => {
                    let path = candidates
                        .ok_or_else(|| Error::PreconditionFailed("the candidates strategy needs --candidates".into()))?;
                    Strategy::Candidates(load_candidates(&path)?)
                }
            };
            let rep = on_matrix!(m, p => explore_k(&p, &b, &strategy))?;
            let mut out = explorer_report_to_json(&rep);
            if let Coverage::Partial { seed, .. } = rep.coverage {
                out["seed"] = json!(seed);
            }
            Ok(out)
        }
    }
}

fn render_text(v: &Value) -> String {
    match v {
        Value::Object(map) => {
            // the seed goes first so randomized reports lead with it
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_by_key(|k| (k.as_str() != "seed", k.as_str()));
            keys.iter()
                .map(|k| {
                    let val = &map[k.as_str()];
                    match val {
                        Value::String(s) => format!("{k}: {s}\n"),
                        other => format!("{k}: {other}\n"),
                    }
                })
                .collect()
        }
        other => format!("{other}\n"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = NumericPolicy::from_env() {
        eprintln!("error: invalid {}: {msg}", coalesce_core::scalar::POLICY_ENV);
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(value) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&value).expect("serializable")),
                Format::Text => print!("{}", render_text(&value)),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(1)
        }
    }
}
