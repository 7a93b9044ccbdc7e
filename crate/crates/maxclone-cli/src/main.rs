use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use maxclone::boolean::{self, LatticeCaps};
use maxclone::closure::{self, ClosureSignature};
use maxclone::formats::{self, RelationFile};
use maxclone::formula::{self, Env};
use maxclone::{counting, galois, gadget, Error, Relation};

/// Default seed for randomized work.
const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Parser)]
#[command(name = "maxclone", version, about = "Relation algebra with counting and max quantifiers")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for randomized steps.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula (inline s-expression or file) to a relation.
    RelEval {
        formula: String,
        #[arg(long, default_value_t = 2)]
        domain: usize,
        /// Relation file with extra names.
        #[arg(long)]
        rels: Option<PathBuf>,
        /// Comma separated output variable order (default: first occurrence).
        #[arg(long)]
        order: Option<String>,
        /// Also print the flattened form: `max` or `counting`.
        #[arg(long)]
        flatten: Option<String>,
    },
    /// Close a relation file under an operator signature.
    Close {
        #[arg(long)]
        sig: String,
        #[arg(long)]
        arity: Option<usize>,
        #[arg(long)]
        intermediate: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        /// Report membership of this relation of the file instead of the closure.
        #[arg(long)]
        member: Option<String>,
        rels: PathBuf,
    },
    /// Place a Boolean relation file in the max-co-clone lattice.
    Classify { rels: PathBuf },
    /// Count the solutions of an instance.
    Count {
        instance: PathBuf,
        #[arg(long)]
        rels: Option<PathBuf>,
    },
    /// Replace target constraints by copies of a max-implementation.
    Reduce {
        #[arg(long)]
        target: String,
        #[arg(long)]
        gadget: PathBuf,
        #[arg(long)]
        eps: String,
        /// Count both instances and check the bounds.
        #[arg(long)]
        verify: bool,
        #[arg(long)]
        rels: Option<PathBuf>,
        instance: PathBuf,
    },
    /// Compare an `∃_k` closure with its partial polymorphisms.
    Galois {
        #[arg(long = "K", value_name = "K")]
        ks: String,
        #[arg(long)]
        rel_arity: usize,
        #[arg(long)]
        fn_arity: usize,
        /// Relation file of candidates to test on both sides.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Number of random candidates of arity `rel-arity` to add.
        #[arg(long, default_value_t = 0)]
        random_candidates: usize,
        rels: PathBuf,
    },
    /// Check every edge of the Boolean max-co-clone lattice.
    Lattice {
        #[arg(long)]
        dot: bool,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
    },
    /// Run the IN2 generation construction.
    In2Witness {
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    Failed,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_relations(path: &Path) -> Result<RelationFile> {
    Ok(formats::parse_relations(&path.display().to_string(), &read(path)?)?)
}

fn named_relations(path: Option<&PathBuf>) -> Result<BTreeMap<String, Relation>> {
    Ok(match path {
        Some(p) => load_relations(p)?.to_map(),
        None => BTreeMap::new(),
    })
}

/// Parses `0.1`, `1/10` or `1e-1`-free decimals exactly.
fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || anyhow::anyhow!("cannot parse {text:?} as a rational number");
    let normalized = match text.split_once('.') {
        Some((int, frac)) => {
            if !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            format!("{int}{frac}/1{}", "0".repeat(frac.len()))
        }
        None => text.to_string(),
    };
    BigRational::from_str(&normalized).map_err(|_| bad())
}

fn print_relation(d: usize, name: &str, r: &Relation) {
    print!("{}", formats::write_relations(d, &[(name.to_string(), r.clone())]));
}

fn rel_eval(text: &str, d: usize, rels: Option<&PathBuf>, order: Option<&str>, flatten: Option<&str>) -> Result<Outcome> {
    let (source, body) = if text.trim_start().starts_with('(') {
        ("<argument>".to_string(), text.to_string())
    } else {
        (text.to_string(), read(Path::new(text))?)
    };
    let f = formula::parse(&source, &body)?;
    let mut env = Env::new(d);
    env.named = named_relations(rels)?;
    let order: Vec<String> = match order {
        Some(o) => o.split(',').map(|v| v.trim().to_string()).collect(),
        None => f.free_vars(),
    };
    let r = formula::evaluate(&f, &order, &env)?;
    println!("# variables: {}", order.join(" "));
    print_relation(d, "result", &r);
    match flatten {
        None => {}
        Some("max") => {
            let (g, stats) = formula::flatten_max(&f, &env)?;
            println!("flat: {g}");
            for s in stats {
                println!("flat: M={} N={} L={} c={}", s.m, s.n, s.l, s.c);
            }
        }
        Some("counting") => {
            let (g, renames) = formula::flatten_counting(&f, &env)?;
            println!("flat: {g}");
            for (a, b) in renames {
                println!("flat: renamed {a} -> {b}");
            }
        }
        Some(other) => bail!(Error::Invalid(format!("unknown flattening {other:?}"))),
    }
    Ok(Outcome::Ok)
}

fn close(
    sig: &str,
    arity: Option<usize>,
    intermediate: Option<usize>,
    budget: Option<usize>,
    member: Option<&str>,
    rels: &Path,
) -> Result<Outcome> {
    let file = load_relations(rels)?;
    let mut s = ClosureSignature::parse(sig, file.d)?;
    // an explicit arity without an intermediate cap closes with one extra position
    let (a, b) = match (arity, intermediate) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a, a + 1),
        (None, Some(b)) => (s.result_arity.min(b), b),
        (None, None) => (s.result_arity, s.intermediate_arity),
    };
    s = s.with_caps(a, b);
    if let Some(budget) = budget {
        s = s.with_budget(budget);
    }
    if let Some(name) = member {
        let target = file.get(name).with_context(|| format!("{}: no relation named {name}", rels.display()))?;
        let gamma: Vec<(String, Relation)> = file.relations.iter().filter(|(n, _)| n != name).cloned().collect();
        return Ok(match closure::member(target, &gamma, &s)? {
            Some(der) => {
                der.replay()?;
                println!("member: {name} yes");
                print!("{}", der.render());
                Outcome::Ok
            }
            None => {
                println!("member: {name} not found within caps");
                Outcome::Failed
            }
        });
    }
    let c = closure::close(&file.relations, file.d, &s)?;
    println!("# status: {}", c.status());
    println!("# relations: {}", c.relations().len());
    print!("{}", formats::write_closure(&c));
    Ok(Outcome::Ok)
}

fn classify(rels: &Path) -> Result<Outcome> {
    let file = load_relations(rels)?;
    let gamma: Vec<Relation> = file.relations.iter().map(|(_, r)| r.clone()).collect();
    let c = boolean::classify_max_coclone(&gamma)?;
    println!("label: {}", c.label);
    println!("class: {}", boolean::trichotomy(&gamma)?);
    print!("{c}");
    Ok(Outcome::Ok)
}

fn count(instance: &Path, rels: Option<&PathBuf>) -> Result<Outcome> {
    let p = formats::parse_instance(&instance.display().to_string(), &read(instance)?, &named_relations(rels)?)?;
    println!("{}", counting::count_limited(&p, counting::DEFAULT_NODE_LIMIT)?);
    Ok(Outcome::Ok)
}

fn reduce(target: &str, gadget_path: &Path, eps: &str, verify: bool, rels: Option<&PathBuf>, instance: &Path) -> Result<Outcome> {
    let named = named_relations(rels)?;
    let eps = parse_rational(eps)?;
    let p1 = formats::parse_instance(&instance.display().to_string(), &read(instance)?, &named)?;
    let g = formats::parse_maximpl(&gadget_path.display().to_string(), &read(gadget_path)?, &named)?;
    println!("gadget: implements {} with M={}", g.target, g.big_m);
    if !verify {
        let out = gadget::ap_gadget(&p1, target, &g, &eps)?;
        println!("reduce: l={} M={} m={}", out.ell, out.big_m, out.m);
        print!("{}", formats::write_instance(&out.p2));
        return Ok(Outcome::Ok);
    }
    let report = counting::verify_reduction(&p1, target, &g, &eps)?;
    print!("{report}");
    Ok(if report.passed() { Outcome::Ok } else { Outcome::Failed })
}

fn random_relation(rng: &mut ChaCha8Rng, d: usize, arity: usize) -> Result<Relation> {
    Ok(Relation::from_predicate(d, arity, |_| rng.gen_bool(0.5))?)
}

fn galois_cmd(
    ks: &str,
    rel_arity: usize,
    fn_arity: usize,
    candidates: Option<&PathBuf>,
    random: usize,
    seed: u64,
    rels: &Path,
) -> Result<Outcome> {
    let file = load_relations(rels)?;
    let ks = closure::parse_k_list(ks)?;
    let mut cands: Vec<Relation> = match candidates {
        Some(p) => load_relations(p)?.relations.into_iter().map(|(_, r)| r).collect(),
        None => Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..random {
        cands.push(random_relation(&mut rng, file.d, rel_arity)?);
    }
    let report = galois::galois_check(&file.relations, file.d, &ks, rel_arity, fn_arity, &cands)?;
    print!("{report}");
    Ok(if report.sound() { Outcome::Ok } else { Outcome::Failed })
}

fn lattice(dot: bool, kmax: usize) -> Result<Outcome> {
    let report = boolean::verify_lattice(kmax, LatticeCaps::default())?;
    if dot {
        print!("{}", report.to_dot());
    } else {
        print!("{report}");
    }
    Ok(if report.passed() { Outcome::Ok } else { Outcome::Failed })
}

fn in2(k: usize) -> Result<Outcome> {
    let report = boolean::in2_witness(k)?;
    print!("{report}");
    Ok(if report.equals_target() { Outcome::Ok } else { Outcome::Failed })
}

fn run(cli: Cli) -> Result<Outcome> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!(Error::Invalid("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match &cli.command {
        Command::RelEval { formula, domain, rels, order, flatten } => {
            rel_eval(formula, *domain, rels.as_ref(), order.as_deref(), flatten.as_deref())
        }
        Command::Close { sig, arity, intermediate, budget, member, rels } => {
            close(sig, *arity, *intermediate, *budget, member.as_deref(), rels)
        }
        Command::Classify { rels } => classify(rels),
        Command::Count { instance, rels } => count(instance, rels.as_ref()),
        Command::Reduce { target, gadget, eps, verify, rels, instance } => {
            reduce(target, gadget, eps, *verify, rels.as_ref(), instance)
        }
        Command::Galois { ks, rel_arity, fn_arity, candidates, random_candidates, rels } => {
            galois_cmd(ks, *rel_arity, *fn_arity, candidates.as_ref(), *random_candidates, cli.seed, rels)
        }
        Command::Lattice { dot, kmax } => lattice(*dot, *kmax),
        Command::In2Witness { k } => in2(*k),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Verification(_)) => 1,
        Some(Error::Resource(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
