use serde_json::{json, Value};
use stv_audit::asn::{asn_formula, AsnQuery};
use stv_audit::audit::add_ghost_count;
use stv_audit::ballots::{parse_blt, BltFile};
use stv_audit::graph::{boundary, build_audit_graph, coherence_check, export_dot, graph_to_json, Coherence, GraphParams};
use stv_audit::stats::{hypergeom_cdf, hypergeom_ln_pmf, k_upper, HypergeomQuery};
use stv_audit::tabulation::{render_table, rounds_to_json, run_meek, run_wigm, MeekParams};

pub const SAMPLE_BLT: &str = include_str!("../../core/fixtures/ward9.blt");

/// Largest graph the page will draw.
const DEMO_VERTEX_CAP: usize = 2000;

fn load(blt: &str, seats: Option<usize>) -> Result<(BltFile, usize), String> {
    let f = parse_blt(blt).map_err(|e| e.to_string())?;
    let seats = seats.unwrap_or(f.seats);
    if seats == 0 || seats >= f.profile.candidate_count {
        return Err(format!("{seats} seats with {} candidates", f.profile.candidate_count));
    }
    Ok((f, seats))
}

fn to_string(v: Value) -> Result<String, String> {
    serde_json::to_string(&v).map_err(|e| e.to_string())
}

pub fn tally(blt: &str, rule: &str, seats: Option<usize>) -> Result<String, String> {
    let (f, seats) = load(blt, seats)?;
    let p = &f.profile;
    let tab = match rule {
        "meek" => run_meek(p, &MeekParams::new(seats)),
        "wigm" => run_wigm(p, seats),
        other => return Err(format!("unknown rule {other:?}; expected meek or wigm")),
    }
    .map_err(|e| e.to_string())?;
    to_string(json!({
        "candidates": p.names,
        "winners": tab.winners.iter().map(|&c| p.name(c)).collect::<Vec<_>>(),
        "table": render_table(p, &tab),
        "rounds": rounds_to_json(p, &tab.rounds),
    }))
}

pub fn audit_graph(blt: &str, seats: Option<usize>, lam: f64, ghosts: usize) -> Result<String, String> {
    if !(lam >= 0.0) {
        return Err(format!("lam must be non-negative, got {lam}"));
    }
    let (f, seats) = load(blt, seats)?;
    let cvr = add_ghost_count(&f.profile, ghosts);
    let params = GraphParams {
        vertex_cap: DEMO_VERTEX_CAP,
        ..GraphParams::new(seats, lam)
    };
    let g = build_audit_graph(&cvr, &params).map_err(|e| e.to_string())?;
    let winners = match coherence_check(&g) {
        Coherence::Coherent(w) => Some(w.iter().map(|c| cvr.name(c).to_string()).collect::<Vec<_>>()),
        Coherence::Incoherent(..) => None,
    };
    to_string(json!({
        "ballots": cvr.len(),
        "coherent": winners.is_some(),
        "winners": winners,
        "boundary": boundary(&g).len(),
        "dot": export_dot(&g, &cvr.names),
        "graph": graph_to_json(&g, &cvr.names),
    }))
}

pub fn hypergeometric(population: u64, successes: u64, draws: u64, observed: u64, alpha: f64) -> Result<String, String> {
    if successes > population || draws > population || observed > draws {
        return Err(format!(
            "need successes, draws <= N and observed <= draws (N {population}, K {successes}, n {draws}, x {observed})"
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(format!("alpha must lie in (0, 1), got {alpha}"));
    }
    let q = |x: u64| HypergeomQuery {
        population,
        successes,
        draws,
        observed: x,
    };
    let pmf: Vec<f64> = (0..=draws).map(|k| hypergeom_ln_pmf(population, successes, draws, k).exp()).collect();
    to_string(json!({
        "cdf": hypergeom_cdf(q(observed)),
        "pmf": pmf,
        "k_upper": k_upper(observed, draws, population, alpha),
    }))
}

pub fn asn(margin: f64, params: usize, alpha0: f64, alpha_k: f64, population: u64, margins: &[f64]) -> Result<String, String> {
    let query = |m: f64| AsnQuery {
        margin: m,
        params,
        alpha0,
        alpha_k,
        population,
    };
    let at = asn_formula(&query(margin)).map_err(|e| e.to_string())?;
    let curve: Vec<Value> = margins
        .iter()
        .filter_map(|&m| asn_formula(&query(m)).ok().map(|e| json!({"margin": m, "fraction": e.fraction, "sample_size": e.sample_size})))
        .collect();
    to_string(json!({
        "fraction": at.fraction,
        "sample_size": at.sample_size,
        "small_sample": at.small_sample,
        "auditable": at.auditable,
        "curve": curve,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn tally_sample() {
        let v = parse(tally(SAMPLE_BLT, "meek", None));
        assert_eq!(v["winners"], json!(["Alan Livingstone", "Henry Anderson", "Wilma Lumsden"]));
        assert!((v["rounds"][0]["quota"].as_f64().unwrap() - 922.25).abs() < 1e-5);
        assert!(v["table"].as_str().unwrap().contains("Round 5"));
        assert!(tally(SAMPLE_BLT, "borda", None).unwrap_err().contains("borda"));
        assert!(tally("garbage", "meek", None).is_err());
    }

    #[test]
    fn graph_sample() {
        let v = parse(audit_graph(SAMPLE_BLT, None, 40.0, 150));
        assert_eq!(v["ballots"], 3839);
        assert_eq!(v["coherent"], true);
        assert_eq!(v["graph"]["vertices"].as_array().unwrap().len(), 7);
        assert!(v["dot"].as_str().unwrap().starts_with("digraph"));
        let v = parse(audit_graph(SAMPLE_BLT, None, 100.0, 150));
        assert_eq!(v["coherent"], false);
        assert!(v["winners"].is_null());
        assert!(audit_graph(SAMPLE_BLT, None, -1.0, 0).is_err());
    }

    #[test]
    fn hypergeometric_anchor() {
        let v = parse(hypergeometric(1000, 200, 100, 13, 0.05));
        let cdf = v["cdf"].as_f64().unwrap();
        assert!((0.035..=0.043).contains(&cdf), "{cdf}");
        let total: f64 = v["pmf"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(hypergeometric(10, 20, 5, 1, 0.05).is_err());
        assert!(hypergeometric(100, 20, 5, 1, 1.5).is_err());
    }

    #[test]
    fn asn_curve_halves_with_margin() {
        let v = parse(asn(100.0, 5, 0.045, 0.005, 10_000, &[50.0, 100.0, 200.0, 0.0]));
        let curve = v["curve"].as_array().unwrap();
        assert_eq!(curve.len(), 3);
        let f = |i: usize| curve[i]["fraction"].as_f64().unwrap();
        assert!((f(0) - 2.0 * f(1)).abs() < 1e-12 && (f(1) - 2.0 * f(2)).abs() < 1e-12);
        assert_eq!(v["fraction"].as_f64().unwrap(), f(1));
        assert!(asn(0.0, 5, 0.045, 0.005, 10_000, &[]).is_err());
    }
}
