//! Subcommand implementations. Every command renders its output to a string
//! that is written either to stdout or into the output directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use pxqama::demapper::{bit_llrs, MetricPath};
use pxqama::geometry::{equivalent_channel, inner, EquivalentChannel, PrecoderSet};
use pxqama::hqam::{label_bits, map_private, map_shared, BitWord, DistanceProfile};
use pxqama::inforate::{BitAssignment, RatePoint, UserBitMis};
use pxqama::region::{
    build_region, evaluate_mode, select_modes, sweep, Family, ModeConfig, RateRegion, Scenario, Sizes,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::Config;
use crate::format::{bits, num, round};
use crate::{CliError, Command, Invocation};

/// Version tag of the region summary JSON.
pub const SUMMARY_SCHEMA: &str = "pxqama.region/1";

const DEFAULT_N2: usize = 5;
const DEFAULT_LLR_SAMPLES: usize = 16;

pub fn dispatch(inv: &Invocation) -> Result<(), CliError> {
    let cfg = inv.config.as_deref().map(Config::load).transpose()?;
    let need = || cfg.as_ref().ok_or_else(|| CliError::Config("--config is required".into()));
    let out = inv.out.clone().or_else(|| cfg.as_ref().and_then(|c| c.out.clone()));
    let seed = inv.seed.or_else(|| cfg.as_ref().and_then(|c| c.seed)).unwrap_or(0);
    match &inv.command {
        Command::Map => emit(out.as_deref(), "map.csv", &map(need()?)?),
        Command::Precode => emit(out.as_deref(), "precode.json", &precode(need()?)?),
        Command::Llr => emit(out.as_deref(), "llr.csv", &llr(need()?, seed)?),
        Command::Rates => emit(out.as_deref(), "rates.json", &rates(need()?)?),
        Command::Region => {
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            let overlay = inv.overlay.as_deref().map(read_overlay).transpose()?;
            let (csv, summary) = region(need()?, overlay.as_ref())?;
            write_file(&dir, "region.csv", &csv)?;
            write_file(&dir, "summary.json", &summary)?;
            eprintln!("wrote {} and {}", dir.join("region.csv").display(), dir.join("summary.json").display());
            Ok(())
        }
        Command::Modes { n2, region } => {
            let path = match (region, &out) {
                (Some(p), _) => p.clone(),
                (None, Some(dir)) => dir.join("region.csv"),
                (None, None) => return Err(CliError::Config("modes needs --region or --out".into())),
            };
            let n2 = n2.or_else(|| cfg.as_ref().and_then(|c| c.n2)).unwrap_or(DEFAULT_N2);
            let table = modes(&path, n2)?;
            if let Some(dir) = &out {
                write_file(dir, "modes.csv", &table)?;
            }
            emit(None, "modes.csv", &table)
        }
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_owned(), source })?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| CliError::Io { path, source })
}

fn emit(dir: Option<&Path>, name: &str, text: &str) -> Result<(), CliError> {
    match dir {
        Some(d) => write_file(d, name, text),
        None => {
            std::io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn csv_text(rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

fn precoders(scn: &Scenario<f64>, mode: &ModeConfig<f64>) -> Result<PrecoderSet<f64>, CliError> {
    Ok(PrecoderSet::synthesize(&scn.channel, mode.theta0, mode.alpha)?)
}

/// Equivalent channel of each user; a failure is an error only for a user
/// that receives bits.
fn views(scn: &Scenario<f64>, mode: &ModeConfig<f64>) -> Result<[Option<EquivalentChannel<f64>>; 2], CliError> {
    let pre = precoders(scn, mode)?;
    let shared = mode.shared_profile()?;
    let private = mode.private_profile()?;
    let mut out = [None, None];
    for u in [1u8, 2] {
        match equivalent_channel(&scn.channel, &pre, &shared, &private, u) {
            Ok(eq) => out[usize::from(u - 1)] = Some(eq),
            Err(e) if mode.participates(u) => return Err(e.into()),
            Err(_) => {}
        }
    }
    Ok(out)
}

/// One row of a constellation dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRow {
    pub kind: String,
    pub user: u8,
    pub label_i: String,
    pub label_q: String,
    pub re: f64,
    pub im: f64,
}

/// Shared and private symbol points (private labels shown for even shared
/// parity) and, when the config carries a scenario and a full mode, each
/// user's composite constellation.
pub fn map(cfg: &Config) -> Result<String, CliError> {
    let spec = cfg.mode_spec()?;
    let s = spec.sizes();
    let (m0, n0, m1, n1) = (s.m0 as usize, s.n0 as usize, s.m1 as usize, s.n1 as usize);
    let shared = DistanceProfile::geometric(m0, n0, spec.layer_ratio)?;
    let private = DistanceProfile::geometric(m1, n1, spec.layer_ratio)?;
    let mut rows = vec![header(&["kind", "user", "label_i", "label_q", "re", "im"])];
    let row = |kind: &str, user: u8, li: &[bool], lq: &[bool], p: Complex<f64>| {
        vec![kind.to_string(), user.to_string(), bits(li), bits(lq), num(p.re), num(p.im)]
    };
    if !shared.is_empty() {
        for w in BitWord::all(m0, n0, 0, 0) {
            rows.push(row("shared", 0, &w.shared_i, &w.shared_q, map_shared(&w, &shared)?));
        }
    }
    if !private.is_empty() {
        for w in BitWord::all(0, 0, m1, n1) {
            rows.push(row("private", 0, &w.private_i, &w.private_q, map_private(&w, &private)?));
        }
    }
    if cfg.gamma1_db.is_some() && spec.theta0.is_some() && spec.alpha.is_some() {
        let mode = spec.mode()?;
        let scn = cfg.scenario()?;
        for (u, eq) in [1u8, 2].into_iter().zip(views(&scn, &mode)?) {
            let Some(eq) = eq else { continue };
            let (pi, pq) = eq.constellations()?;
            for (a, &re) in pi.points().iter().enumerate() {
                for (b, &im) in pq.points().iter().enumerate() {
                    let li = label_bits(pi.labels()[a], pi.bits());
                    let lq = label_bits(pq.labels()[b], pq.bits());
                    rows.push(row("composite", u, &li, &lq, Complex::new(re, im)));
                }
            }
        }
    }
    csv_text(rows)
}

/// Reads a constellation dump back.
pub fn parse_map(text: &str) -> Result<Vec<MapRow>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<Vec<MapRow>, _>>()?)
}

pub fn precode(cfg: &Config) -> Result<String, CliError> {
    let scn = cfg.scenario()?;
    let mode = cfg.mode_spec()?.mode()?;
    let pre = precoders(&scn, &mode)?;
    let vec_json = |v: Vec<Complex<f64>>| -> Value { v.iter().map(|c| json!([round(c.re), round(c.im)])).collect() };
    let ch = &scn.channel;
    let views = views(&scn, &mode)?;
    let mut users = Vec::new();
    for u in [1u8, 2] {
        let h = ch.h(u);
        let mut entry = json!({
            "user": u,
            "snr_db": round(10.0 * ch.snr(u).log10()),
            "h_p0": [round(inner(h, &pre.vector(0)).re), round(inner(h, &pre.vector(0)).im)],
            "h_p1": [round(inner(h, &pre.vector(1)).re), round(inner(h, &pre.vector(1)).im)],
            "h_p2": [round(inner(h, &pre.vector(2)).re), round(inner(h, &pre.vector(2)).im)],
        });
        if let Some(eq) = &views[usize::from(u - 1)] {
            entry["gain"] = json!(round(eq.gain));
            entry["phase"] = json!(round(eq.phase));
            entry["beta_shared"] = json!(round(eq.beta_shared));
            entry["beta_private"] = json!(round(eq.beta_private));
            entry["composite_i"] = eq.composite.i().iter().map(|&d| json!(round(d))).collect();
            entry["composite_q"] = eq.composite.q().iter().map(|&d| json!(round(d))).collect();
        } else {
            entry["composite"] = json!(null);
        }
        users.push(entry);
    }
    Ok(json_text(&json!({
        "theta": round(ch.theta()),
        "theta0": round(mode.theta0),
        "alpha": mode.alpha.map(round),
        "precoders": [vec_json(pre.vector(0)), vec_json(pre.vector(1)), vec_json(pre.vector(2))],
        "users": users,
    })))
}

pub fn llr(cfg: &Config, seed: u64) -> Result<String, CliError> {
    let scn = cfg.scenario()?;
    let spec = cfg.mode_spec()?;
    let mode = spec.mode()?;
    let samples = cfg.llr_samples.unwrap_or(DEFAULT_LLR_SAMPLES);
    let pre = precoders(&scn, &mode)?;
    let shared = mode.shared_profile()?;
    let private = mode.private_profile()?;
    let views = views(&scn, &mode)?;
    let pams = views
        .iter()
        .map(|v| v.as_ref().map(|eq| eq.constellations()).transpose())
        .collect::<Result<Vec<_>, _>>()?;
    let s = mode.sizes;
    let (m0, n0, m1, n1) = (s.m0 as usize, s.n0 as usize, s.m1 as usize, s.n1 as usize);
    let ch = &scn.channel;
    let sd = (ch.sigma2() / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = vec![header(&["sample", "user", "branch", "bit", "tx_bit", "y_re", "y_im", "metric", "llr"])];
    for n in 0..samples {
        let mut draw = |k: usize| -> Vec<bool> { (0..k).map(|_| rng.random()).collect() };
        let (si, sq) = (draw(m0), draw(n0));
        let words = [
            BitWord { shared_i: si.clone(), shared_q: sq.clone(), private_i: draw(m1), private_q: draw(n1) },
            BitWord { shared_i: si, shared_q: sq, private_i: draw(m1), private_q: draw(n1) },
        ];
        let x = pre.transmit([
            map_shared(&words[0], &shared)?,
            map_private(&words[0], &private)?,
            map_private(&words[1], &private)?,
        ]);
        for u in [1u8, 2] {
            let idx = usize::from(u - 1);
            let w = Complex::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * sd;
            let (Some(eq), Some((pi, pq))) = (&views[idx], &pams[idx]) else { continue };
            let y = inner(ch.h(u), &x) + w;
            let vecs = bit_llrs(y, eq, (pi, pq), ch.sigma2(), MetricPath::default())?;
            let (ci, cq) = words[idx].composite_bits();
            for (v, tx) in vecs.iter().zip([&ci, &cq]) {
                for (k, (&z, &l)) in v.metrics.iter().zip(&v.llrs).enumerate() {
                    rows.push(vec![
                        n.to_string(),
                        u.to_string(),
                        v.branch.to_string(),
                        (k + 1).to_string(),
                        u8::from(tx[k]).to_string(),
                        num(y.re),
                        num(y.im),
                        num(z),
                        num(l),
                    ]);
                }
            }
        }
    }
    csv_text(rows)
}

pub fn rates(cfg: &Config) -> Result<String, CliError> {
    let scn = cfg.scenario()?;
    let mode = cfg.mode_spec()?.mode()?;
    let views = views(&scn, &mode)?;
    let mut users = Vec::new();
    for (u, v) in [1u8, 2].into_iter().zip(&views) {
        let entry = match v {
            Some(eq) => {
                let mi = UserBitMis::evaluate(eq, scn.channel.sigma2())?;
                json!({ "user": u, "mi_i": mi.i.iter().map(|&x| round(x)).collect::<Vec<_>>(),
                        "mi_q": mi.q.iter().map(|&x| round(x)).collect::<Vec<_>>() })
            }
            None => json!({ "user": u, "mi_i": null, "mi_q": null }),
        };
        users.push(entry);
    }
    let r = evaluate_mode(&mode, &scn)?;
    let mut all = Vec::new();
    for a in BitAssignment::enumerate(mode.sizes.m0 as usize, mode.sizes.n0 as usize) {
        if let Ok(p) = evaluate_mode(&ModeConfig { assignment: a, ..mode }, &scn) {
            all.push(json!({ "assignment_mask_i": a.mask_i(), "assignment_mask_q": a.mask_q(),
                             "R1": round(p.r1), "R2": round(p.r2) }));
        }
    }
    Ok(json_text(&json!({
        "assignment_mask_i": mode.assignment.mask_i(),
        "assignment_mask_q": mode.assignment.mask_q(),
        "R1": round(r.r1),
        "R2": round(r.r2),
        "users": users,
        "assignments": all,
    })))
}

/// One row of the region CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRow {
    pub mode_id: usize,
    pub m0: usize,
    pub n0: usize,
    pub m1: usize,
    pub n1: usize,
    pub theta0: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub assignment_mask_i: u32,
    pub assignment_mask_q: u32,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    pub on_hull: bool,
    pub layer_ratio: f64,
}

impl RegionRow {
    pub fn mode(&self) -> Result<ModeConfig<f64>, CliError> {
        Ok(ModeConfig {
            sizes: Sizes::new(self.m0, self.n0, self.m1, self.n1),
            layer_ratio: self.layer_ratio,
            assignment: BitAssignment::new(self.m0, self.n0, self.assignment_mask_i, self.assignment_mask_q)?,
            theta0: self.theta0,
            alpha: [self.a0, self.a1, self.a2],
        })
    }

    pub fn rate(&self) -> RatePoint<f64> {
        RatePoint { r1: self.r1, r2: self.r2 }
    }
}

pub const REGION_COLUMNS: [&str; 15] = [
    "mode_id",
    "m0",
    "n0",
    "m1",
    "n1",
    "theta0",
    "a0",
    "a1",
    "a2",
    "assignment_mask_i",
    "assignment_mask_q",
    "R1",
    "R2",
    "on_hull",
    "layer_ratio",
];

fn mode_cells(id: usize, m: &ModeConfig<f64>, r: &RatePoint<f64>) -> Vec<String> {
    let s = m.sizes;
    vec![
        id.to_string(),
        s.m0.to_string(),
        s.n0.to_string(),
        s.m1.to_string(),
        s.n1.to_string(),
        num(m.theta0),
        num(m.alpha[0]),
        num(m.alpha[1]),
        num(m.alpha[2]),
        m.assignment.mask_i().to_string(),
        m.assignment.mask_q().to_string(),
        num(r.r1),
        num(r.r2),
    ]
}

fn mode_json(id: usize, m: &ModeConfig<f64>, r: &RatePoint<f64>) -> Value {
    let s = m.sizes;
    json!({
        "mode_id": id,
        "sizes": [s.m0, s.n0, s.m1, s.n1],
        "layer_ratio": round(m.layer_ratio),
        "theta0": round(m.theta0),
        "alpha": m.alpha.map(round),
        "assignment_mask_i": m.assignment.mask_i(),
        "assignment_mask_q": m.assignment.mask_q(),
        "R1": round(r.r1),
        "R2": round(r.r2),
        "kind": kind(m),
    })
}

fn kind(m: &ModeConfig<f64>) -> &'static str {
    if m.single_user().is_some() {
        "oma"
    } else if m.is_sdma() {
        "sdma"
    } else {
        "mixed"
    }
}

fn hull_json(r: &RateRegion<f64>) -> Value {
    r.hull
        .iter()
        .map(|h| json!({ "R1": round(h.r1), "R2": round(h.r2), "mode_id": h.point }))
        .collect()
}

/// External baseline curves keyed by label.
pub type Overlay = BTreeMap<String, Vec<RatePoint<f64>>>;

#[derive(Debug, Deserialize)]
struct OverlayRow {
    label: String,
    #[serde(rename = "R1")]
    r1: f64,
    #[serde(rename = "R2")]
    r2: f64,
}

pub fn read_overlay(path: &Path) -> Result<Overlay, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    let mut out = Overlay::new();
    for (i, row) in csv::Reader::from_reader(text.as_bytes()).deserialize::<OverlayRow>().enumerate() {
        let row = row.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if !(row.r1 >= 0.0 && row.r2 >= 0.0) || !row.r1.is_finite() || !row.r2.is_finite() {
            return Err(CliError::Config(format!("{}: row {} has invalid rates", path.display(), i + 2)));
        }
        out.entry(row.label).or_default().push(RatePoint { r1: row.r1, r2: row.r2 });
    }
    Ok(out)
}

/// Sweeps the configured scenario; returns the region CSV and the JSON
/// summary.
pub fn region(cfg: &Config, overlay: Option<&Overlay>) -> Result<(String, String), CliError> {
    let scn = cfg.scenario()?;
    let grid = cfg.grid();
    let sw = sweep(&scn, &grid)?;
    let rates = sw.rates();
    let full = build_region(&rates)?;
    let mut rows = vec![header(&REGION_COLUMNS)];
    for (id, (p, on)) in sw.points.iter().zip(&full.on_hull).enumerate() {
        let mut cells = mode_cells(id, &p.mode, &p.rate);
        cells.push(on.to_string());
        cells.push(num(p.mode.layer_ratio));
        rows.push(cells);
    }
    let family = |f: Family| -> Result<Value, CliError> {
        let pts: Vec<RatePoint<f64>> = sw.family(f).iter().map(|p| p.rate).collect();
        if pts.is_empty() {
            return Ok(Value::Null);
        }
        let a = build_region(&pts)?.area;
        Ok(json!({ "points": pts.len(), "area": round(a), "full_over_family": round(full.area / a) }))
    };
    let n2 = cfg.n2.unwrap_or(DEFAULT_N2);
    let selection = match select_modes(&rates, &full, n2) {
        Ok(sel) => json!({
            "n2": n2,
            "area": round(sel.region.area),
            "area_ratio": round(sel.area_ratio),
            "modes": sel.indices.iter().map(|&i| mode_json(i, &sw.points[i].mode, &sw.points[i].rate)).collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "n2": n2, "error": e.to_string() }),
    };
    let overlays = match overlay {
        Some(curves) => curves
            .iter()
            .map(|(label, pts)| {
                let a = build_region(pts)?.area;
                Ok(json!({ "label": label, "points": pts.len(), "area": round(a),
                           "pxqama_over_overlay": round(full.area / a) }))
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        None => Vec::new(),
    };
    let rejected: BTreeMap<String, usize> = sw.rejected.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "scenario": {
            "gamma1_db": cfg.gamma1_db,
            "gamma2_db": cfg.gamma2_db,
            "rho_abs": cfg.rho_abs,
            "rho_phase": cfg.rho_phase,
            "sigma2": cfg.sigma2,
            "theta": round(scn.theta()),
        },
        "grid": grid,
        "points": sw.points.len(),
        "rejected": rejected,
        "area": round(full.area),
        "hull": hull_json(&full),
        "hull_vertex_count": full.vertex_points().len(),
        "pareto_count": full.pareto_count,
        "families": { "sdma": family(Family::Sdma)?, "qama_bf": family(Family::QamaBf)? },
        "selection": selection,
        "overlay": overlays,
    });
    Ok((csv_text(rows)?, json_text(&summary)))
}

/// Reads a region CSV and reduces it to `n2` modes.
pub fn modes(path: &Path, n2: usize) -> Result<String, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    let rows = csv::Reader::from_reader(text.as_bytes())
        .deserialize::<RegionRow>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let rates: Vec<RatePoint<f64>> = rows.iter().map(RegionRow::rate).collect();
    let full = build_region(&rates)?;
    let sel = select_modes(&rates, &full, n2)?;
    let mut cols = vec!["rank"];
    cols.extend(&REGION_COLUMNS[..13]);
    cols.extend(["kind", "polygon_ratio"]);
    let mut out = vec![header(&cols)];
    for (rank, &i) in sel.indices.iter().enumerate() {
        let row = &rows[i];
        let mode = row.mode()?;
        let mut cells = vec![rank.to_string()];
        cells.extend(mode_cells(row.mode_id, &mode, &row.rate()));
        cells.push(kind(&mode).to_string());
        cells.push(num(sel.area_ratio));
        out.push(cells);
    }
    csv_text(out)
}
