use std::path::{Path, PathBuf};

use serde_json::json;
use stv_audit::asn::{asn_csv, empirical_asn, greedy_lam_search, AsnRow};
use stv_audit::audit::*;
use stv_audit::ballots::{parse_blt, parse_csv, write_blt};
use stv_audit::graph::*;
use stv_audit::stats::{MarginTarget, StatsParams};
use stv_audit::tabulation::{render_table, rounds_to_json, run_meek, run_wigm, MeekParams};
use stv_audit::Profile;

use crate::*;

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Tabulate(a) => tabulate(g, a),
        Command::Graph(a) => graph(g, a),
        Command::Audit(a) => audit(g, a),
        Command::Asn(a) => asn(g, a),
        Command::VerifyDesign(a) => verify(g, a),
        Command::Simulate(a) => simulate(g, a),
    }
}

fn load(path: &Path, seats: Option<usize>) -> Result<(Profile, usize), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let bad = |e: stv_audit::ParseError| CliError::Validation(format!("{}: {e}", path.display()));
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let (profile, seats) = if is_csv {
        let seats = seats.ok_or_else(|| CliError::Validation("--seats is required for CSV ballots".into()))?;
        (parse_csv(&text, None).map_err(bad)?, seats)
    } else {
        let f = parse_blt(&text).map_err(bad)?;
        (f.profile, seats.unwrap_or(f.seats))
    };
    if seats == 0 || seats >= profile.candidate_count {
        return Err(CliError::Validation(format!(
            "{seats} seats with {} candidates; need 1 <= seats < candidates",
            profile.candidate_count
        )));
    }
    Ok((profile, seats))
}

fn meek_params(m: &MeekArgs, seats: usize) -> MeekParams {
    MeekParams {
        seats,
        min_surplus: m.epsilon,
        tolerance: m.omega,
        max_iterations: m.max_iterations,
    }
}

fn ghosts(g: &GhostArgs) -> Result<Ghosts, CliError> {
    match (g.ghosts, g.ghost_count) {
        (Some(r), _) if !(0.0..=1.0).contains(&r) => Err(CliError::Validation(format!("ghost rate {r} outside [0, 1]"))),
        (Some(r), _) => Ok(Ghosts::Rate(r)),
        (None, Some(c)) => Ok(Ghosts::Count(c)),
        (None, None) => Ok(Ghosts::Count(0)),
    }
}

fn stats_params(s: &StatsArgs) -> StatsParams {
    StatsParams {
        alpha0: s.alpha0,
        alpha_k: s.alpha_k,
        discrepancy_count: s.discrepancy_count.into(),
        ..StatsParams::default()
    }
}

fn graph_params(meek: &MeekArgs, seats: usize, lam: f64, cap: Option<usize>) -> Result<GraphParams, CliError> {
    if !(lam >= 0.0) {
        return Err(CliError::Validation(format!("lam must be non-negative, got {lam}")));
    }
    let mut p = GraphParams::new(seats, lam);
    p.meek = meek_params(meek, seats);
    if let Some(c) = cap {
        p.vertex_cap = c;
    }
    Ok(p)
}

/// Where an artifact goes: an explicit path (under `--out` when relative),
/// else `default` under `--out`, else nowhere.
fn artifact(global: &GlobalArgs, explicit: Option<&PathBuf>, default: &str) -> Option<PathBuf> {
    match (&global.out, explicit) {
        (Some(dir), Some(p)) => Some(dir.join(p)),
        (None, Some(p)) => Some(p.clone()),
        (Some(dir), None) => Some(dir.join(default)),
        (None, None) => None,
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<(), CliError> {
    write(path, &(serde_json::to_string_pretty(v).expect("json values serialize") + "\n"))
}

fn names(p: &Profile, cs: impl IntoIterator<Item = usize>) -> Vec<String> {
    cs.into_iter().map(|c| p.name(c).to_string()).collect()
}

fn kind_label(p: &Profile, k: EdgeKind) -> String {
    match k {
        EdgeKind::Winner(c) => format!("elect {}", p.name(c)),
        EdgeKind::Loser(c) => format!("eliminate {}", p.name(c)),
    }
}

fn target_label(p: &Profile, t: MarginTarget) -> String {
    match t {
        MarginTarget::CandidateVsCandidate { c, l } => format!("T({}) - T({})", p.name(c), p.name(l)),
        MarginTarget::CandidateVsQuota { c } => format!("T({}) - q", p.name(c)),
        MarginTarget::QuotaVsCandidate { c } => format!("q - T({})", p.name(c)),
    }
}

fn tabulate(global: &GlobalArgs, a: &TabulateArgs) -> Result<(), CliError> {
    let (p, seats) = load(&a.input.ballots, a.input.seats)?;
    let tab = match a.rule {
        Rule::Meek => run_meek(&p, &meek_params(&a.meek, seats))?,
        Rule::Wigm => run_wigm(&p, seats)?,
    };
    print!("{}", render_table(&p, &tab));
    if let Some(path) = artifact(global, a.log.as_ref(), "rounds.json") {
        let log = json!({
            "rule": match a.rule { Rule::Meek => "meek", Rule::Wigm => "wigm" },
            "seats": seats,
            "ballots": p.len(),
            "candidates": p.names,
            "winners": names(&p, tab.winners.iter().copied()),
            "rounds": rounds_to_json(&p, &tab.rounds),
        });
        write_json(&path, &log)?;
    }
    Ok(())
}

fn graph(global: &GlobalArgs, a: &GraphArgs) -> Result<(), CliError> {
    let (p, seats) = load(&a.input.ballots, a.input.seats)?;
    let cvr = ghosts(&a.ghosts)?.apply(&p);
    let g = build_audit_graph(&cvr, &graph_params(&a.meek, seats, a.lam, a.vertex_cap)?)?;
    let layer_sizes: Vec<usize> = g.layers.iter().map(Vec::len).collect();
    println!("lam {}: {} states, {} edges, layers {layer_sizes:?}", a.lam, g.vertices.len(), g.edges.len());
    match coherence_check(&g) {
        Coherence::Coherent(w) => println!("coherent: every terminal state elects {}", names(&p, w.iter()).join(", ")),
        Coherence::Incoherent(s, t) => println!(
            "incoherent: terminal states elect {} and {}",
            names(&p, s.winners.iter()).join(", "),
            names(&p, t.winners.iter()).join(", ")
        ),
    }
    println!("boundary edges: {}", boundary(&g).len());
    if let Some(path) = artifact(global, a.dot.as_ref(), "graph.dot") {
        write(&path, &export_dot(&g, &cvr.names))?;
    }
    if let Some(path) = artifact(global, a.json.as_ref(), "graph.json") {
        write_json(&path, &graph_to_json(&g, &cvr.names))?;
    }
    Ok(())
}

fn audit(global: &GlobalArgs, a: &AuditArgs) -> Result<(), CliError> {
    let (p, seats) = load(&a.input.ballots, a.input.seats)?;
    let ghosts = ghosts(&a.ghosts)?;
    let cvr = ghosts.apply(&p);
    let bal = match &a.actual {
        Some(path) => {
            let (b, _) = load(path, Some(seats))?;
            if b.candidate_count != p.candidate_count {
                return Err(CliError::Validation(format!(
                    "{} has {} candidates, the CVR file {}",
                    path.display(),
                    b.candidate_count,
                    p.candidate_count
                )));
            }
            // Accept paper ballots with or without the ghosts already appended.
            if b.len() == cvr.len() {
                b
            } else if b.len() == p.len() {
                ghosts.apply(&b)
            } else {
                return Err(CliError::Validation(format!(
                    "{} has {} ballots, expected {} or {} with ghosts",
                    path.display(),
                    b.len(),
                    p.len(),
                    cvr.len()
                )));
            }
        }
        None => noise_profile_with_indices(&cvr, a.eta, &mut trial_rng(global.seed, 1)).0,
    };
    let config = AuditConfig {
        sample_size: a.sample_size,
        stats: stats_params(&a.stats),
        seed: global.seed,
        lam: a.lam,
        noise: a.eta,
        ghosts,
    };
    config.validate()?;
    let g = build_audit_graph(&cvr, &graph_params(&a.meek, seats, a.lam, a.vertex_cap)?)?;
    let r = run_rla(&bal, &cvr, &g, &config)?;

    println!(
        "sample {} of {} ballots, {} discrepant; {} boundary edges",
        r.sample.len(),
        cvr.len(),
        r.discrepancies,
        r.edges.len()
    );
    for e in &r.edges {
        let check = e.check.map_or_else(|| "-".to_string(), |t| target_label(&cvr, t));
        let bounds = e
            .estimate
            .as_ref()
            .map_or_else(String::new, |m| format!(" cvr {:.2} est {:.2} se {:.2} lb {:.2}", m.cvr_margin, m.point, m.std_err, m.lower_bound));
        let verdict = if e.rejected { "rejected" } else { "NOT rejected" };
        let note = e.diagnostic.as_deref().map_or_else(String::new, |d| format!(" ({d})"));
        println!("  v{} {}: {check}{bounds} {verdict}{note}", e.from + 1, kind_label(&cvr, e.kind));
    }
    if let Some(path) = artifact(global, a.report.as_ref(), "audit.json") {
        let report = json!({
            "candidates": cvr.names,
            "seats": seats,
            "ballots": cvr.len(),
            "config": config,
            "graph": { "states": g.vertices.len(), "edges": g.edges.len() },
            "result": r,
        });
        write_json(&path, &report)?;
    }
    match &r.certified {
        Some(w) if r.rejected => {
            println!("certified: {}", names(&cvr, w.iter().copied()).join(", "));
            Ok(())
        }
        _ => Err(CliError::NotRejected(format!(
            "not certified: {} of {} boundary edges rejected",
            r.rejected_edges(),
            r.edges.len()
        ))),
    }
}

fn asn(global: &GlobalArgs, a: &AsnArgs) -> Result<(), CliError> {
    let (p, seats) = load(&a.input.ballots, a.input.seats)?;
    let ghosts = ghosts(&a.ghosts)?;
    let cvr = ghosts.apply(&p);
    if !(a.target > 0.0 && a.target <= 1.0) {
        return Err(CliError::Validation(format!("--target must lie in (0, 1], got {}", a.target)));
    }
    let (lam, g) = match a.lam {
        Some(lam) => {
            let g = build_audit_graph(&cvr, &graph_params(&a.meek, seats, lam, a.vertex_cap)?)?;
            if !coherence_check(&g).is_coherent() {
                return Err(CliError::Validation(format!("the graph at lam {lam} is incoherent")));
            }
            (lam, g)
        }
        None => greedy_lam_search(&cvr, &graph_params(&a.meek, seats, 0.0, a.vertex_cap)?, &a.lam_grid)?,
    };
    let config = AuditConfig {
        sample_size: 0,
        stats: stats_params(&a.stats),
        seed: global.seed,
        lam,
        noise: a.eta,
        ghosts,
    };
    config.validate()?;
    let e = empirical_asn(&cvr, &g, &config, a.target, a.trials)?;
    let label = a.profile.clone().unwrap_or_else(|| {
        a.input.ballots.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned())
    });
    let mut points = e.points.clone();
    points.sort_by_key(|p| p.sample_size);
    let rows: Vec<AsnRow> = points.iter().map(|pt| AsnRow::new(&label, cvr.len(), lam, pt)).collect();
    println!("lam {lam}, eta {}, {} trials per sample size", a.eta, a.trials);
    for r in &rows {
        println!("  n {:>7} ({:>6.2}%)  success {:.3}", r.n, r.n_pct, r.success_rate);
    }
    if let Some(path) = artifact(global, a.csv.as_ref(), "asn.csv") {
        write(&path, &asn_csv(&rows)?)?;
    }
    match e.sample_size {
        Some(n) => {
            println!("ASN {n} ({:.2}% of {})", 100.0 * n as f64 / cvr.len() as f64, cvr.len());
            Ok(())
        }
        None => Err(CliError::NotRejected(format!(
            "not auditable: no sample size reaches {:.0}% certification",
            100.0 * a.target
        ))),
    }
}

fn verify(global: &GlobalArgs, a: &VerifyDesignArgs) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::Validation("--trials must be positive".into()));
    }
    let scenarios = match a.scenario {
        ScenarioArg::All => DesignScenario::ALL.to_vec(),
        ScenarioArg::One(s) => vec![s],
    };
    let reports: Vec<DesignReport> = scenarios.iter().map(|&s| verify_design(s, a.trials, global.seed)).collect();
    println!("{:<16} {:>8} {:>8} {:>8}", "design", "trials", "errors", "risk");
    for r in &reports {
        println!("{:<16} {:>8} {:>8} {:>8.4}", r.design.name(), r.trials, r.errors, r.risk());
    }
    if let Some(path) = artifact(global, a.csv.as_ref(), "design.csv") {
        write(&path, &design_csv(&reports)?)?;
    }
    Ok(())
}

fn simulate(global: &GlobalArgs, a: &SimulateArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.eta) {
        return Err(CliError::Validation(format!("--eta must lie in [0, 1], got {}", a.eta)));
    }
    let (p, seats) = load(&a.input.ballots, a.input.seats)?;
    let Some(path) = artifact(global, a.output.as_ref(), "noised.blt") else {
        return Err(CliError::Validation("simulate needs --output or an output directory".into()));
    };
    let cvr = ghosts(&a.ghosts)?.apply(&p);
    let (bal, changed) = noise_profile_with_indices(&cvr, a.eta, &mut trial_rng(global.seed, 1));
    println!(
        "{} ballots ({} ghosts), {} perturbed",
        bal.len(),
        cvr.len() - p.len(),
        changed.len()
    );
    write(&path, &write_blt(&bal, seats))
}
