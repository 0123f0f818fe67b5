mod plot;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use breuilkit::admissible::{enumerate_admissible, rho_bar_of, theorem_main_forms, Sweep, TypeTau};
use breuilkit::cohom::{h1_sizes_bruteforce, standard_class};
use breuilkit::ext4::{
    admissible_base, constrained_subspace, dieudonne_rank4, normal_form_rank, oracle_ext_dim, self_ext, NORMAL_FORM_DIM,
};
use breuilkit::faults::run_faults;
use breuilkit::rank1::{character, classify, Rank1Module};
use breuilkit::rank2::lattice;
use breuilkit::{Error, Fq, TameTower};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use report::{emit, CliError, Output, Report, Table, Timing};

#[derive(Parser, Debug)]
#[command(name = "breuilkit", version, about = "Breuil modules with tame descent data at small primes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Add wall-clock time to the report (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    /// Seed for randomized runs.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn odd_prime(s: &str) -> Result<u32, String> {
    let l: u32 = s.parse().map_err(|e| format!("{e}"))?;
    let prime = l > 2 && (2..l).take_while(|d| d * d <= l).all(|d| l % d != 0);
    if prime && l <= 13 {
        Ok(l)
    } else {
        Err(format!("{l} is not an odd prime <= 13"))
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Rank one classes over the E' preset and their characters.
    Rank1 {
        #[arg(long, value_parser = odd_prime)]
        l: u32,
        #[arg(long, conflicts_with = "char")]
        list: bool,
        /// r a c, with r a multiple of l - 1.
        #[arg(long = "char", num_args = 3, value_names = ["R", "A", "C"], allow_negative_numbers = true)]
        char: Option<Vec<i64>>,
    },
    /// Integral models of one generic fibre, ordered by maps.
    Lattice {
        #[arg(long, value_parser = odd_prime)]
        l: u32,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1)]
        a: i64,
        #[arg(long, default_value_t = 2)]
        b: i64,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        c: i64,
        /// Defaults to c + k.
        #[arg(long, allow_negative_numbers = true)]
        d: Option<i64>,
        /// Include the region as an ASCII grid and as SVG.
        #[arg(long)]
        plot: bool,
    },
    /// Rank two modules whose reduction satisfies the relations of the type w^m + w^{lm}.
    Admissible {
        #[arg(long, value_parser = odd_prime)]
        l: u32,
        #[arg(long, allow_negative_numbers = true)]
        m: i64,
        /// Also run the exhaustive sweep and require agreement.
        #[arg(long)]
        brute: bool,
    },
    /// Self-extensions of an admissible module.
    Ext4 {
        #[arg(long, value_parser = odd_prime)]
        l: u32,
        #[arg(long)]
        i: u32,
        #[arg(long)]
        j: u32,
        #[arg(long)]
        a: i64,
        #[arg(long)]
        b: i64,
        /// Recompute dim Ext^1 by linear algebra.
        #[arg(long)]
        oracle: bool,
    },
    /// Sizes of H^1 with coefficients in k[u]/u^n, by enumeration.
    Cohom {
        #[arg(long, value_parser = odd_prime)]
        l: u32,
        #[arg(long)]
        e: u32,
        #[arg(long, default_value_t = 1)]
        f: u32,
        #[arg(long)]
        n: usize,
    },
    /// Seeded fault injection against the validator.
    Faults {
        #[arg(long, value_parser = odd_prime, default_value_t = 3)]
        l: u32,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
    },
}

fn usage(e: Error) -> CliError {
    match e {
        Error::Domain(m) => CliError::Usage(m),
        other => CliError::Lib(other),
    }
}

fn eprime(l: u32) -> Result<Arc<TameTower>, CliError> {
    Ok(Arc::new(TameTower::eprime(l)?))
}

fn tower_json(t: &TameTower) -> Value {
    serde_json::to_value(t.summary()).expect("plain data")
}

fn prime_matrix(t: &TameTower, m: &[Vec<Fq>]) -> Vec<Vec<u32>> {
    m.iter()
        .map(|r| r.iter().map(|&c| t.field().to_prime(c).unwrap_or(c.0)).collect())
        .collect()
}

fn rank1(l: u32, list: bool, ch: Option<Vec<i64>>) -> Result<Output, CliError> {
    let t = eprime(l)?;
    let k = t.field();
    if let Some(v) = ch {
        let (r, a, c) = (v[0], v[1], v[2]);
        let lm1 = l as i64 - 1;
        if r < 0 || r % lm1 != 0 {
            return Err(CliError::Usage(format!("r = {r} is not a nonnegative multiple of {lm1}")));
        }
        let m = Rank1Module::eprime(&t, (r / lm1) as u32, a, c).map_err(usage)?;
        let x = character(&m)?;
        return Ok(Output {
            report: Report {
                command: json!({"name": "rank1", "char": [r, a, c]}),
                tower: tower_json(&t),
                result: json!({"module": m.params(), "character": x, "trivial": x.unit == 1 && x.cyclo_exp == 0}),
                timing: None,
            },
            table: None,
        });
    }
    if !list {
        return Err(CliError::Usage("pass --list or --char R A C".into()));
    }
    let mut rows = Vec::new();
    let mut classes = Vec::new();
    for m in classify(&t) {
        let x = character(&m)?;
        let p = m.params();
        let a = k.to_prime(m.a).unwrap_or(m.a.0);
        rows.push(vec![
            p.r.to_string(),
            p.r_prime.to_string(),
            a.to_string(),
            p.c.to_string(),
            x.unit.to_string(),
            x.cyclo_exp.to_string(),
        ]);
        classes.push(json!({"r": p.r, "r_prime": p.r_prime, "a": a, "c": p.c, "character": x}));
    }
    Ok(Output {
        report: Report {
            command: json!({"name": "rank1", "list": true}),
            tower: tower_json(&t),
            result: json!({"count": classes.len(), "classes": classes}),
            timing: None,
        },
        table: Some(Table {
            header: vec!["r", "r_prime", "a", "c", "unit", "cyclo_exp"],
            rows,
        }),
    })
}

#[allow(clippy::too_many_arguments)]
fn lattice_cmd(l: u32, kk: u32, a: i64, b: i64, c: i64, d: Option<i64>, plot_it: bool) -> Result<Output, CliError> {
    let t = eprime(l)?;
    let d = d.unwrap_or(c + kk as i64);
    let rep = lattice(&t, kk, a, b, c, d).map_err(usage)?;
    let mut result = json!({
        "count": rep.points.len(),
        "expected_count": if kk >= 1 { Some((l - kk + 1).pow(2)) } else { None },
        "report": rep,
        "maximal": rep.maximal.map(|i| rep.points[i].label.to_string()),
        "minimal": rep.minimal.map(|i| rep.points[i].label.to_string()),
    });
    if plot_it {
        result["plot"] = json!({"ascii": plot::ascii(&rep), "svg": plot::svg(&rep)});
    }
    let rows = rep
        .points
        .iter()
        .map(|p| {
            vec![
                p.r_prime.to_string(),
                p.s_prime.to_string(),
                p.label.to_string(),
                p.split.to_string(),
            ]
        })
        .collect();
    Ok(Output {
        report: Report {
            command: json!({"name": "lattice", "k": kk, "a": a, "b": b, "c": c, "d": d, "plot": plot_it}),
            tower: tower_json(&t),
            result,
            timing: None,
        },
        table: Some(Table {
            header: vec!["r_prime", "s_prime", "label", "split"],
            rows,
        }),
    })
}

fn admissible(l: u32, m: i64, brute: bool) -> Result<Output, CliError> {
    let t = eprime(l)?;
    let tau = TypeTau::new(l, m)?;
    let mods = enumerate_admissible(&t, &tau)?;
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for x in &mods {
        let label = x.label().expect("normal form");
        let rho = rho_bar_of(x)?;
        let f = rho.on_inertia();
        rows.push(vec![
            label.to_string(),
            rho.top.unit.to_string(),
            rho.top.cyclo_exp.to_string(),
            rho.bottom.unit.to_string(),
            rho.bottom.cyclo_exp.to_string(),
            f.peu_ramifie.to_string(),
        ]);
        entries.push(json!({"label": label.to_string(), "rho_bar": rho, "inertia": f}));
    }
    let mut result = json!({
        "type": tau,
        "count": mods.len(),
        "modules": entries,
        "forms": theorem_main_forms(&tau),
    });
    if brute {
        let sweep = Sweep::new(&t)?.filter(&tau);
        let closed: Vec<_> = mods.iter().map(|x| x.label().expect("normal form")).collect();
        if sweep.kept != closed {
            return Err(Error::Invariant(format!(
                "sweep keeps {} modules, closed form has {}",
                sweep.kept.len(),
                closed.len()
            ))
            .into());
        }
        let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
        for (_, r) in &sweep.dropped {
            *reasons.entry(format!("{r:?}")).or_default() += 1;
        }
        result["brute_force"] = json!({"agrees": true, "kept": sweep.kept.len(), "dropped": reasons});
    }
    Ok(Output {
        report: Report {
            command: json!({"name": "admissible", "m": m, "brute": brute}),
            tower: tower_json(&t),
            result,
            timing: None,
        },
        table: Some(Table {
            header: vec!["label", "top_unit", "top_exp", "bottom_unit", "bottom_exp", "peu_ramifie"],
            rows,
        }),
    })
}

fn ext4(l: u32, i: u32, j: u32, a: i64, b: i64, oracle: bool) -> Result<Output, CliError> {
    let t = eprime(l)?;
    if !(1..=l).contains(&i) || j >= l - 1 {
        return Err(CliError::Lib(Error::Domain(format!("need 1 <= i <= {l} and 0 <= j < {}", l - 1))));
    }
    let tau = TypeTau::new(l, ((l + 1) * j + i) as i64)?;
    let m = admissible_base(&t, &tau, a, b)?;
    let line = constrained_subspace(&m)?;
    let (v, z) = line.basis[0];
    let n = self_ext(&m, v as i64, z as i64)?;
    let dd = dieudonne_rank4(&n)?;
    let mut result = json!({
        "base": m.label().expect("normal form").to_string(),
        "normal_form_dim": NORMAL_FORM_DIM,
        "constrained": line,
        "dieudonne_on_line": {"v": v, "z": z, "F": prime_matrix(&t, &dd.f_matrix), "V": prime_matrix(&t, &dd.v_matrix)},
    });
    if oracle {
        let dim = oracle_ext_dim(&m)?;
        let rank = normal_form_rank(&m)?;
        if dim != NORMAL_FORM_DIM || rank != NORMAL_FORM_DIM {
            return Err(Error::Invariant(format!("oracle dimension {dim}, normal form rank {rank}")).into());
        }
        result["oracle"] = json!({"dim": dim, "normal_form_rank": rank, "agrees": true});
    }
    Ok(Output {
        report: Report {
            command: json!({"name": "ext4", "i": i, "j": j, "a": a, "b": b, "oracle": oracle}),
            tower: tower_json(&t),
            result,
            timing: None,
        },
        table: None,
    })
}

fn cohom(l: u32, e: u32, f: u32, n: usize) -> Result<Output, CliError> {
    let t = TameTower::over_ql(l, e, f)?;
    let sizes = h1_sizes_bruteforce(&t, n)?;
    let reps: Vec<Value> = (0..e as i64)
        .map(|i| {
            let c = standard_class(&t, n, i);
            json!({"i": i, "values": c.values.iter().map(|p| p.0.iter().map(|x| x.0).collect::<Vec<_>>()).collect::<Vec<_>>()})
        })
        .collect();
    Ok(Output {
        report: Report {
            command: json!({"name": "cohom", "n": n}),
            tower: tower_json(&t),
            result: json!({"sizes": sizes, "multiplicative_representatives": reps}),
            timing: None,
        },
        table: None,
    })
}

fn faults(l: u32, count: usize, seed: u64) -> Result<Output, CliError> {
    let t = eprime(l)?;
    let rep = run_faults(&t, seed, count, 100)?;
    if !rep.all_caught() {
        return Err(Error::Invariant(format!("{} faults missed by the validator", rep.missed.len())).into());
    }
    Ok(Output {
        report: Report {
            command: json!({"name": "faults", "count": count, "seed": seed}),
            tower: tower_json(&t),
            result: serde_json::to_value(&rep).expect("plain data"),
            timing: None,
        },
        table: None,
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    let g = &cli.global;
    let mut out = match cli.cmd {
        Cmd::Rank1 { l, list, char } => rank1(l, list, char),
        Cmd::Lattice { l, k, a, b, c, d, plot } => lattice_cmd(l, k, a, b, c, d, plot),
        Cmd::Admissible { l, m, brute } => admissible(l, m, brute),
        Cmd::Ext4 { l, i, j, a, b, oracle } => ext4(l, i, j, a, b, oracle),
        Cmd::Cohom { l, e, f, n } => cohom(l, e, f, n),
        Cmd::Faults { l, count } => faults(l, count, g.seed),
    }?;
    if g.timing {
        out.report.timing = Some(Timing {
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    emit(&out, g.format == Format::Csv, g.out.as_deref())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("breuilkit: {e}");
        std::process::exit(e.exit_code());
    }
}
