use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use chanliq::format::{load_network_with_configuration, ModelFile};
use chanliq::liquidity::{self, analyze_with_samples, monotonicity_experiment};
use chanliq::samplers::{hit_and_run, ExactSampler, SamplerConfig};
use chanliq::simulate::{validate_model, Chain, RunOptions};
use chanliq::treepoly::{enumerate_trees, gamma, tree_weight_sum, volume_oracle};
use chanliq::{rng, CreditNetwork, Error, SpanningRepresentation, Transaction};
use rand::Rng;

use crate::output::Table;
use crate::{Common, Status};

const LP_TOLERANCE: &str = "1e-9";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load(common: &Common) -> Result<CreditNetwork> {
    let (net, _) = load_network_with_configuration(&read(&common.network)?)
        .with_context(|| format!("loading {}", common.network.display()))?;
    Ok(net)
}

fn meta(common: &Common) -> Vec<(&'static str, String)> {
    vec![
        ("network", common.network.display().to_string()),
        ("seed", common.seed.to_string()),
        ("lp_tolerance", LP_TOLERANCE.to_string()),
    ]
}

fn parse_pair(net: &CreditNetwork, s: &str) -> Result<(usize, usize)> {
    let (x, y) = s.split_once(':').with_context(|| format!("pair `{s}` is not of the form x:y"))?;
    let (x, y) = (net.vertex(x.trim())?, net.vertex(y.trim())?);
    ensure!(x != y, "pair `{s}` joins a vertex to itself");
    Ok((x, y))
}

fn parse_pairs(net: &CreditNetwork, s: &str) -> Result<Vec<(usize, usize)>> {
    if s.trim() == "all" {
        let n = net.vertex_count();
        return Ok((0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect());
    }
    s.split(',').map(|p| parse_pair(net, p)).collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn analyze(common: &Common, pairs: &str, ks: &[f64], samples: usize) -> Result<Status> {
    let net = load(common)?;
    let pairs = parse_pairs(&net, pairs)?;
    ensure!(ks.iter().all(|&k| k >= 0.0 && k.is_finite()), "--k values must be finite and nonnegative");
    let rep = SpanningRepresentation::canonical(&net)?;
    let points = if samples > 0 {
        ExactSampler::new(&rep, &net)?.sample_many(samples, &mut rng::stream(common.seed, 0))?
    } else {
        Vec::new()
    };

    let mut columns = vec!["x", "y", "k", "exact_failure", "lower_bound", "tight", "method"];
    let mut m = meta(common);
    if samples > 0 {
        columns.push("empirical_failure");
        m.push(("samples", samples.to_string()));
    }
    let mut table = Table::new(common.out.as_deref(), "analyze", &m, &columns)?;
    for &(x, y) in &pairs {
        for &k in ks {
            let tx = Transaction::new(x, y, k)?;
            let report = if samples > 0 {
                analyze_with_samples(&net, &rep, &tx, &points)?
            } else {
                liquidity::analyze(&net, &tx)?
            };
            let mut row = vec![
                net.vertex_name(x).to_string(),
                net.vertex_name(y).to_string(),
                k.to_string(),
                fmt_opt(report.exact_failure),
                report.lower_bound_success.to_string(),
                report.tight.to_string(),
                report.method.as_str().to_string(),
            ];
            if samples > 0 {
                row.push(fmt_opt(report.empirical_failure));
            }
            table.row(row)?;
        }
    }
    table.finish()?;
    Ok(Status::Ok)
}

pub fn sample(common: &Common, count: usize, exact: bool, burn_in: Option<usize>, thin: Option<usize>) -> Result<Status> {
    let net = load(common)?;
    let rep = SpanningRepresentation::canonical(&net)?;
    let n = rep.dimension();
    let mut cfg = SamplerConfig::for_dimension(n, common.seed);
    cfg.burn_in = burn_in.unwrap_or(cfg.burn_in);
    cfg.thinning = thin.unwrap_or(cfg.thinning);
    let points = if exact {
        ExactSampler::new(&rep, &net)?.sample_many(count, &mut rng::stream(common.seed, 0))?
    } else {
        hit_and_run(&rep, &net, &cfg, count)?
    };

    let mut m = meta(common);
    m.push(("method", if exact { "exact" } else { "hitrun" }.into()));
    if !exact {
        m.push(("burn_in", cfg.burn_in.to_string()));
        m.push(("thinning", cfg.thinning.to_string()));
    }
    m.push(("representation", "canonical".into()));
    let columns: Vec<String> = (0..n).map(|i| format!("z{i}")).collect();
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new(common.out.as_deref(), "sample", &m, &columns)?;
    for p in &points {
        table.row(p.iter().map(|x| x.to_string()))?;
    }
    table.finish()?;
    Ok(Status::Ok)
}

pub fn verify(common: &Common, input: &Path) -> Result<Status> {
    let net = load(common)?;
    let rep = SpanningRepresentation::canonical(&net)?;
    let zonotope = rep.zonotope(&net);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(input)
        .with_context(|| format!("reading {}", input.display()))?;
    let width = reader.headers()?.len();
    ensure!(
        width == rep.dimension(),
        "{} has {width} columns but the network has dimension {}",
        input.display(),
        rep.dimension()
    );
    let (mut rows, mut outside) = (0usize, 0usize);
    for record in reader.records() {
        let record = record?;
        let coords = record
            .iter()
            .map(|f| f.trim().parse::<f64>().with_context(|| format!("bad coordinate `{f}`")))
            .collect::<Result<Vec<_>>>()?;
        ensure!(coords.len() == width, "row {} has {} fields", rows + 1, coords.len());
        rows += 1;
        if !zonotope.contains(&coords)? {
            outside += 1;
        }
    }
    let mut table = Table::new(common.out.as_deref(), "verify", &meta(common), &["rows", "outside"])?;
    table.row([rows.to_string(), outside.to_string()])?;
    table.finish()?;
    Ok(if outside == 0 {
        Status::Ok
    } else {
        Status::Violation(format!("{outside} of {rows} points lie outside the zonotope"))
    })
}

pub fn simulate(
    common: &Common,
    model_path: &Path,
    steps: Option<u64>,
    burn_in: Option<usize>,
    thin: Option<usize>,
    states: Option<&Path>,
) -> Result<Status> {
    let net = load(common)?;
    let file = ModelFile::parse(&read(model_path)?).with_context(|| format!("loading {}", model_path.display()))?;
    let model = file.model(&net)?;
    let monitors = file.monitors(&net)?;
    let Some(steps) = steps.or(file.steps) else {
        bail!("no step count: pass --steps or set `steps` in the model file");
    };
    let rep = SpanningRepresentation::canonical(&net)?;
    let mut cfg = SamplerConfig::for_dimension(rep.dimension(), common.seed);
    cfg.burn_in = burn_in.unwrap_or(cfg.burn_in);
    cfg.thinning = thin.unwrap_or(cfg.thinning);

    let validity = validate_model(&net, &model);
    let mut m = meta(common);
    m.push(("model", model_path.display().to_string()));
    m.push(("burn_in", cfg.burn_in.to_string()));
    m.push(("thinning", cfg.thinning.to_string()));
    if !validity.connected {
        let msg = "model is not connected; the chain may not have a unique stationary measure";
        eprintln!("warning: {msg}");
        m.push(("warning", msg.into()));
    }
    if !validity.symmetric {
        m.push(("note", "model is not symmetric; the stationary measure need not be uniform".into()));
    }

    let chain = Chain::new(&rep, &net, &model)?;
    let opts = RunOptions { start: None, monitors, keep_states: states.is_some() };
    let summary = chain.run(steps, &cfg, &opts, &mut rng::stream(common.seed, 0))?;
    m.push(("steps", summary.steps.to_string()));
    m.push(("accepted", summary.accepted.to_string()));
    m.push(("acceptance_ratio", summary.acceptance_ratio().to_string()));
    m.push(("recorded", summary.recorded.to_string()));

    let mut table = Table::new(
        common.out.as_deref(),
        "simulate",
        &m,
        &["sender", "receiver", "amount", "checks", "failures", "failure_rate", "std_error", "acceptance_ratio", "steps"],
    )?;
    for s in &summary.monitors {
        table.row([
            net.vertex_name(s.tx.sender).to_string(),
            net.vertex_name(s.tx.receiver).to_string(),
            s.tx.amount.to_string(),
            s.checks.to_string(),
            s.failures.to_string(),
            s.failure_rate.to_string(),
            s.std_error.to_string(),
            summary.acceptance_ratio().to_string(),
            summary.steps.to_string(),
        ])?;
    }
    table.finish()?;

    if let Some(path) = states {
        let columns: Vec<String> = (0..rep.dimension()).map(|i| format!("z{i}")).collect();
        let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
        let mut dump = Table::new(Some(path), "simulate-states", &meta(common), &columns)?;
        for z in &summary.states {
            dump.row(z.iter().map(|x| x.to_string()))?;
        }
        dump.finish()?;
    }
    Ok(Status::Ok)
}

struct Trial {
    tx: Transaction,
    boost: (usize, usize, f64),
}

fn random_trial(net: &CreditNetwork, rng: &mut rng::SimRng) -> Trial {
    let n = net.vertex_count();
    let e = net.edge(rng.random_range(0..net.edge_count()));
    let k = rng.random_range(0.1..=1.0) * net.capacity_between(e.tail, e.head);
    let a = rng.random_range(0..n);
    let b = (a + rng.random_range(1..n)) % n;
    Trial {
        tx: Transaction { sender: e.tail, receiver: e.head, amount: k },
        boost: (a, b, rng.random_range(0.1..=5.0)),
    }
}

pub fn monotonicity(common: &Common, trials: usize, boost: Option<&str>, pair: Option<&str>, k: Option<f64>) -> Result<Status> {
    let net = load(common)?;
    ensure!(net.edge_count() > 0 && net.vertex_count() >= 2, "network needs at least one channel");
    let plan: Vec<Trial> = match boost {
        Some(arg) => {
            let (pair, k) = match (pair, k) {
                (Some(p), Some(k)) => (p, k),
                _ => bail!("--boost needs a transaction: pass --pairs x:y and --k"),
            };
            let (x, y) = parse_pair(&net, pair)?;
            let mut parts = arg.split(':');
            let (Some(a), Some(b), Some(h), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                bail!("--boost `{arg}` is not of the form a:b:h");
            };
            let (a, b) = parse_pair(&net, &format!("{a}:{b}"))?;
            let h: f64 = h.trim().parse().with_context(|| format!("bad boost amount `{h}`"))?;
            vec![Trial { tx: Transaction::new(x, y, k)?, boost: (a, b, h) }]
        }
        None => {
            ensure!(trials > 0, "--trials must be positive");
            let mut rng = rng::stream(common.seed, 0);
            (0..trials).map(|_| random_trial(&net, &mut rng)).collect()
        }
    };

    let mut table = Table::new(
        common.out.as_deref(),
        "monotonicity",
        &meta(common),
        &["trial", "x", "y", "k", "a", "b", "h", "before", "after", "gap", "shares_cycle"],
    )?;
    let mut violations = 0;
    for (i, t) in plan.iter().enumerate() {
        let out = monotonicity_experiment(&net, &t.tx, t.boost)?;
        let (a, b, h) = t.boost;
        let (boosted, be) = net.boosted(a, b, h)?;
        let tx_edge = boosted.edges_between(t.tx.sender, t.tx.receiver)[0];
        let shares = be == tx_edge || boosted.edges_share_cycle(be, tx_edge);
        if out.gap() < -1e-9 {
            violations += 1;
        }
        table.row([
            i.to_string(),
            net.vertex_name(t.tx.sender).to_string(),
            net.vertex_name(t.tx.receiver).to_string(),
            t.tx.amount.to_string(),
            net.vertex_name(a).to_string(),
            net.vertex_name(b).to_string(),
            h.to_string(),
            out.before.to_string(),
            out.after.to_string(),
            out.gap().to_string(),
            shares.to_string(),
        ])?;
    }
    table.finish()?;
    Ok(if violations == 0 {
        Status::Ok
    } else {
        Status::Violation(format!("{violations} trials decreased the success probability"))
    })
}

pub fn volume(common: &Common) -> Result<Status> {
    let net = load(common)?;
    let rep = SpanningRepresentation::canonical(&net)?;
    let g = gamma(&net)?.0;
    let skipped = |e: Error| match e {
        Error::TooLarge(m) => Ok((None, format!("skipped: {m} edges exceeds the enumeration limit"))),
        other => Err(other),
    };
    let (enumerated, enum_note) = match enumerate_trees(&net) {
        Ok(trees) => (Some(tree_weight_sum(&net, &trees)), format!("{} spanning trees", trees.len())),
        Err(e) => skipped(e)?,
    };
    let (oracle, oracle_note) = match volume_oracle(&rep, &net) {
        Ok(v) => (Some(v), String::new()),
        Err(e) => skipped(e)?,
    };

    let mut table = Table::new(common.out.as_deref(), "volume", &meta(common), &["method", "value", "note"])?;
    table.row(["matrix_tree".to_string(), g.to_string(), String::new()])?;
    table.row(["tree_enumeration".to_string(), fmt_opt(enumerated), enum_note])?;
    table.row(["basis_determinant".to_string(), fmt_opt(oracle), oracle_note])?;
    table.finish()?;

    let disagree: Vec<&str> = [("tree_enumeration", enumerated), ("basis_determinant", oracle)]
        .into_iter()
        .filter(|(_, v)| v.is_some_and(|v| (v - g).abs() > 1e-9 * g.abs().max(1.0)))
        .map(|(name, _)| name)
        .collect();
    Ok(if disagree.is_empty() {
        Status::Ok
    } else {
        Status::Violation(format!("{} disagree with the matrix-tree value {g}", disagree.join(", ")))
    })
}
