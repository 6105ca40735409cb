use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fgrow_core::geometry::{divergence_estimate, DivergenceReport, DEFAULT_BALL_CAP};
use fgrow_core::growth::{classify_growth, GrowthKind, GrowthParams, GrowthReport};
use fgrow_core::mapping_torus::SaturationBudget;
use fgrow_core::splittings::{
    check_fixed, induce_torus_splitting, parse_gog, parse_hierarchy, tag_text, verify_hierarchy, FixedSplittingWitness, Hierarchy, TorusSplitting,
};
use fgrow_core::{Automorphism, Basis, CyclicWord, Error, Index, StallingsGraph, TorusElement, TorusGroup, Word};

use crate::report::{comment_header, json, InputHash};
use crate::svg::{plot, Series};

pub struct Output {
    pub text: String,
    pub code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

pub struct Failure {
    source: Option<String>,
    err: Error,
}

impl Failure {
    /// 2 for exhausted budgets, 1 for everything else.
    pub fn code(&self) -> u8 {
        match self.err {
            Error::BallTooLarge { .. } | Error::Unstabilized { .. } => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.source, &self.err) {
            (Some(src), Error::Parse { line, message }) => write!(f, "{src}:{line}: {message}"),
            (Some(src), e) => write!(f, "{src}: {e}"),
            (None, e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure { source: None, err }
    }
}

trait Context<T> {
    fn within(self, source: &str) -> Result<T, Failure>;
}

impl<T> Context<T> for Result<T, Error> {
    fn within(self, source: &str) -> Result<T, Failure> {
        self.map_err(|err| Failure { source: Some(source.to_string()), err })
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure { source: Some(path.display().to_string()), err: Error::InvalidArgument(e.to_string()) })
}

/// `--map` takes a file, or inline rules such as `a->ab;b->a`.
fn load_map(spec: &str, hash: &mut InputHash) -> Result<Automorphism, Failure> {
    let path = Path::new(spec);
    let (text, source) = if path.is_file() {
        (read(path)?, spec.to_string())
    } else if spec.contains("->") {
        (spec.to_string(), "--map".to_string())
    } else {
        return Err(Failure { source: Some(spec.to_string()), err: Error::InvalidArgument("no such file".into()) });
    };
    hash.add("map", text.as_bytes());
    Automorphism::parse(&text).within(&source)
}

fn load_file(path: &Path, role: &str, hash: &mut InputHash) -> Result<String, Failure> {
    let text = read(path)?;
    hash.add(role, text.as_bytes());
    Ok(text)
}

fn positive(name: &str, v: u64) -> Result<(), Failure> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("--{name} must be positive")).into());
    }
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GrowthEmit {
    Json,
    Csv,
    Svg,
    Text,
}

#[derive(Args)]
pub struct GrowthArgs {
    /// Automorphism file, or inline rules `a->ab;b->a`.
    #[arg(long)]
    map: String,
    /// Classify this conjugacy class instead of the whole map.
    #[arg(long)]
    word: Option<String>,
    #[arg(long, default_value_t = 40)]
    iters: usize,
    /// Length cap for iterated images.
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    #[arg(long, default_value_t = 6)]
    max_degree: usize,
    #[arg(long, value_enum, default_value = "json")]
    emit: GrowthEmit,
}

pub fn growth(a: &GrowthArgs) -> Result<Output, Failure> {
    let mut hash = InputHash::default();
    let phi = load_map(&a.map, &mut hash)?;
    positive("iters", a.iters as u64)?;
    positive("cap", a.cap)?;
    if !(a.margin > 0.0 && a.margin.is_finite()) {
        return Err(Error::InvalidArgument("--margin must be positive".into()).into());
    }
    let params = GrowthParams { iterations: a.iters, cap: a.cap, margin: a.margin, max_degree: a.max_degree };
    let class = match &a.word {
        Some(w) => {
            hash.add("word", w.as_bytes());
            Some(CyclicWord::new(&phi.basis().parse_word(w).within("--word")?))
        }
        None => None,
    };
    let report = classify_growth(&phi, class.as_ref(), &params);
    let code = if report.kind == GrowthKind::Inconclusive { 2 } else { 0 };
    let text = match a.emit {
        GrowthEmit::Json => json("growth", &hash, params, &report),
        GrowthEmit::Csv => {
            let mut s = comment_header("#", "growth", &hash, &params);
            s.push_str("n,length,root_estimate\n");
            for (i, (l, r)) in report.lengths.iter().zip(&report.evidence.root_estimates).enumerate() {
                s.push_str(&format!("{},{l},{r:.9}\n", i + 1));
            }
            s
        }
        GrowthEmit::Svg => growth_svg(&report, &comment_header("", "growth", &hash, &params)),
        GrowthEmit::Text => {
            let mut s = comment_header("#", "growth", &hash, &params);
            s.push_str(&growth_text(&report));
            s
        }
    };
    Ok(Output { text, code })
}

fn count(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn growth_text(r: &GrowthReport) -> String {
    let mut s = format!("subject: {}\nkind: {:?}\ncertified: {}\n", r.subject, r.kind, r.certified);
    s.push_str(&format!("rate: {}\ndegree: {}\n", opt(r.rate.map(|x| format!("{x:.6}"))), opt(r.degree)));
    s.push_str(&format!("certificate: {}\n", r.evidence.certificate));
    if let Some(e) = r.evidence.eigenvalue {
        s.push_str(&format!("eigenvalue: {e:.6}\n"));
    }
    if r.evidence.truncated {
        s.push_str("lengths truncated at the cap\n");
    }
    let lens: Vec<String> = r.lengths.iter().map(u64::to_string).collect();
    s.push_str(&format!("lengths: {}\n", lens.join(" ")));
    for c in &r.evidence.classes {
        s.push_str(&format!("  class {}: {:?} rate {} degree {}\n", c.class, c.kind, opt(c.rate.map(|x| format!("{x:.6}"))), opt(c.degree)));
    }
    s
}

fn growth_svg(r: &GrowthReport, header: &str) -> String {
    let pts: Vec<(f64, f64)> = r.lengths.iter().enumerate().filter(|(_, &l)| l > 0).map(|(i, &l)| ((i + 1) as f64, (l as f64).ln())).collect();
    let series = [Series { label: format!("{} ({:?})", r.subject, r.kind), points: pts, scatter: false, color: "#1f5fa8" }];
    plot("iterated lengths", "n", "log length", header, &series)
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FoldEmit {
    Text,
    Dot,
    Json,
}

#[derive(Args)]
pub struct FoldArgs {
    /// Comma-separated generator words, e.g. "a a, b".
    #[arg(long)]
    gens: String,
    /// Ambient rank; inferred from the letters used when absent.
    #[arg(long)]
    rank: Option<usize>,
    /// Words to test for membership.
    #[arg(long)]
    contains: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    emit: FoldEmit,
}

fn infer_rank(texts: &[&str]) -> usize {
    texts.iter().flat_map(|t| t.chars()).filter(char::is_ascii_lowercase).map(|c| (c as u8 - b'a') as usize + 1).max().unwrap_or(1)
}

pub fn fold(a: &FoldArgs) -> Result<Output, Failure> {
    let mut hash = InputHash::default();
    hash.add("gens", a.gens.as_bytes());
    let mut all: Vec<&str> = vec![&a.gens];
    all.extend(a.contains.iter().map(String::as_str));
    let rank = a.rank.unwrap_or_else(|| infer_rank(&all));
    positive("rank", rank as u64)?;
    let basis = Basis::standard(rank);
    let gens: Vec<Word> = a.gens.split(',').filter(|s| !s.trim().is_empty()).map(|s| basis.parse_word(s)).collect::<Result<_, _>>().within("--gens")?;
    let g = StallingsGraph::new(rank, &gens);
    let mut members = Vec::new();
    for w in &a.contains {
        hash.add("contains", w.as_bytes());
        let word = basis.parse_word(w).within("--contains")?;
        members.push((basis.format_word(&word), g.contains(&word)));
    }
    let index = match g.index() {
        Index::Finite(n) => n.to_string(),
        Index::Infinite => "infinite".into(),
    };
    let free_basis: Vec<String> = g.free_basis().iter().map(|w| basis.format_word(w)).collect();
    let budgets = json!({ "rank": rank });
    let text = match a.emit {
        FoldEmit::Dot => format!("// fgrow fold input-sha256: {}\n{}", hash.hex(), g.to_dot(&basis)),
        FoldEmit::Text => {
            let mut s = comment_header("#", "fold", &hash, &budgets);
            s.push_str(&g.table(&basis));
            s.push_str(&format!("rank: {}\nindex: {index}\nbasis: {}\n", g.rank(), free_basis.join(", ")));
            for (w, m) in &members {
                s.push_str(&format!("contains {w}: {}\n", if *m { "yes" } else { "no" }));
            }
            s
        }
        FoldEmit::Json => {
            let edges: Vec<_> = g.edge_list().into_iter().map(|(s, l, d)| json!([s, basis.name(l), d])).collect();
            let members: Vec<_> = members.iter().map(|(w, m)| json!({ "word": w, "member": m })).collect();
            let r = json!({
                "vertices": g.vertex_count(),
                "edges": edges,
                "rank": g.rank(),
                "index": index,
                "basis": free_basis,
                "membership": members,
            });
            json("fold", &hash, budgets, r)
        }
    };
    Ok(Output::ok(text))
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TorusEmit {
    Presentation,
    Graph,
    Json,
    Text,
}

#[derive(Args)]
pub struct TorusArgs {
    #[arg(long)]
    map: String,
    /// Semicolon-separated elements of the torus, e.g. "b; t".
    #[arg(long)]
    gens: Option<String>,
    #[arg(long, default_value_t = SaturationBudget::default().rounds)]
    rounds: usize,
    #[arg(long, default_value_t = SaturationBudget::default().vertices)]
    vertices: usize,
    #[arg(long, value_enum, default_value = "presentation")]
    emit: TorusEmit,
}

pub fn torus(a: &TorusArgs) -> Result<Output, Failure> {
    let mut hash = InputHash::default();
    let phi = load_map(&a.map, &mut hash)?;
    let g = TorusGroup::new(phi)?;
    positive("rounds", a.rounds as u64)?;
    positive("vertices", a.vertices as u64)?;
    let budget = SaturationBudget { rounds: a.rounds, vertices: a.vertices };
    if let TorusEmit::Presentation = a.emit {
        return Ok(Output::ok(format!("{}\n", g.presentation())));
    }
    let Some(spec) = &a.gens else {
        return Err(Error::InvalidArgument("--gens is required unless emitting the presentation".into()).into());
    };
    hash.add("gens", spec.as_bytes());
    let gens: Vec<TorusElement> = spec.split(';').filter(|s| !s.trim().is_empty()).map(|s| g.parse(s)).collect::<Result<_, _>>().within("--gens")?;
    let fi = g.fiber_intersection(&gens, budget)?;
    let b = g.basis();
    let names = Basis::new((1..=gens.len()).map(|i| format!("g{i}"))).expect("distinct names");
    let fiber: Vec<String> = fi.basis.iter().map(|w| b.format_word(w)).collect();
    let witnesses: Vec<String> = fi.witnesses.iter().map(|w| names.format_word(w)).collect();
    let shown_gens: Vec<String> = gens.iter().map(|x| g.format(x)).collect();
    let text = match a.emit {
        TorusEmit::Presentation => unreachable!(),
        TorusEmit::Graph => format!("// fgrow torus input-sha256: {}\n{}", hash.hex(), fi.graph.to_dot(b)),
        TorusEmit::Text => {
            let mut s = comment_header("#", "torus", &hash, &budget);
            s.push_str(&format!("{}\n", g.presentation()));
            s.push_str(&format!("subgroup: ⟨{}⟩\n", shown_gens.join(", ")));
            s.push_str(&format!("stable element: {} = {}\n", g.format(&fi.stable), names.format_word(&fi.stable_witness)));
            s.push_str(&format!("fiber intersection: ⟨{}⟩ (rank {}, {} rounds)\n", fiber.join(", "), fi.basis.len(), fi.rounds));
            for (f, w) in fiber.iter().zip(&witnesses) {
                s.push_str(&format!("  {f} = {w}\n"));
            }
            s
        }
        TorusEmit::Json => {
            let r = json!({
                "presentation": g.presentation(),
                "generators": shown_gens,
                "stable": g.format(&fi.stable),
                "stable_witness": names.format_word(&fi.stable_witness),
                "fiber_basis": fiber,
                "witnesses": witnesses,
                "rank": fi.basis.len(),
                "rounds": fi.rounds,
            });
            json("torus", &hash, budget, r)
        }
    };
    Ok(Output::ok(text))
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SplitEmit {
    Text,
    Json,
}

#[derive(Args)]
pub struct SplitArgs {
    #[arg(long)]
    map: String,
    /// Graph-of-groups file with an optional [witness] section.
    #[arg(long)]
    gog: PathBuf,
    /// Also build the induced splitting of the mapping torus.
    #[arg(long)]
    induce: bool,
    #[arg(long, value_enum, default_value = "text")]
    emit: SplitEmit,
}

fn splitting_json(g: &TorusGroup, s: &TorusSplitting) -> serde_json::Value {
    let b = g.basis();
    let vertices: Vec<_> = s
        .vertices
        .iter()
        .map(|v| {
            json!({
                "name": v.name,
                "period": v.period,
                "fiber": v.fiber.iter().map(|w| b.format_word(w)).collect::<Vec<_>>(),
                "stable": g.format(&v.stable),
                "type": tag_text(v.tag),
            })
        })
        .collect();
    let edges: Vec<_> = s
        .edges
        .iter()
        .map(|e| {
            json!({
                "name": e.name,
                "src": s.vertices[e.src].name,
                "dst": s.vertices[e.dst].name,
                "period": e.period,
                "fiber": b.format_word(&e.fiber),
                "stable": g.format(&e.stable),
                "type": tag_text(e.tag),
                "twist": e.tag.twist(),
            })
        })
        .collect();
    json!({ "kind": s.kind, "vertices": vertices, "edges": edges, "relators_sound": s.relators_sound(g) })
}

pub fn split(a: &SplitArgs) -> Result<Output, Failure> {
    let mut hash = InputHash::default();
    let phi = load_map(&a.map, &mut hash)?;
    let g = TorusGroup::new(phi)?;
    let src = a.gog.display().to_string();
    let text = load_file(&a.gog, "gog", &mut hash)?;
    let (gog, witness) = parse_gog(&text, g.basis()).within(&src)?;
    let witness = witness.unwrap_or_else(|| FixedSplittingWitness::identity(&gog));
    check_fixed(&gog, &g, &TorusElement::stable_letter(), &witness).within(&src)?;
    let kind = if gog.is_free() { "free" } else { "cyclic" };
    let induced = if a.induce { Some(induce_torus_splitting(&gog, &g, &witness).within(&src)?) } else { None };
    let budgets = json!({});
    let out = match a.emit {
        SplitEmit::Text => {
            let mut s = comment_header("#", "split", &hash, &budgets);
            s.push_str(&format!("{kind} splitting: {}, {}\nfixed: yes\n", count(gog.vertices().len(), "vertex", "vertices"), count(gog.edges().len(), "edge", "edges")));
            if let Some(ind) = &induced {
                s.push_str(&ind.describe(&g));
                s.push_str(&format!("relators sound: {}\n", ind.relators_sound(&g)));
            }
            s
        }
        SplitEmit::Json => {
            let r = json!({
                "kind": kind,
                "vertices": gog.vertices().len(),
                "edges": gog.edges().len(),
                "fixed": true,
                "induced": induced.as_ref().map(|s| splitting_json(&g, s)),
            });
            json("split", &hash, budgets, r)
        }
    };
    Ok(Output::ok(out))
}

#[derive(Args)]
pub struct HierarchyArgs {
    #[arg(long)]
    map: String,
    /// Hierarchy file.
    #[arg(long)]
    file: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    emit: SplitEmit,
}

fn tree_text(h: &Hierarchy) -> String {
    fn go(h: &Hierarchy, n: usize, depth: usize, out: &mut String) {
        let node = &h.nodes[n];
        let split = node.splitting.as_deref().map(|s| format!(" [{s}]")).unwrap_or_default();
        out.push_str(&format!("{}{} {} {:?}{split}\n", "  ".repeat(depth + 1), node.name, node.group, node.status));
        for &c in &node.children {
            go(h, c, depth + 1, out);
        }
    }
    let mut s = format!("{:?} hierarchy: depth {}, {:?}\n", h.kind, h.depth(), h.completeness());
    go(h, 0, 0, &mut s);
    s
}

pub fn hierarchy(a: &HierarchyArgs) -> Result<Output, Failure> {
    let mut hash = InputHash::default();
    let phi = load_map(&a.map, &mut hash)?;
    let g = TorusGroup::new(phi)?;
    let src = a.file.display().to_string();
    let text = load_file(&a.file, "hierarchy", &mut hash)?;
    let file = parse_hierarchy(&text, g.basis()).within(&src)?;
    let v = verify_hierarchy(&g, file.kind, &file.root).within(&src)?;
    let budgets = json!({});
    let out = match a.emit {
        SplitEmit::Text => {
            let mut s = comment_header("#", "hierarchy", &hash, &budgets);
            s.push_str(&tree_text(&v.fiber));
            s.push_str(&tree_text(&v.torus));
            s
        }
        SplitEmit::Json => {
            let r = json!({
                "fiber": { "depth": v.fiber.depth(), "completeness": v.fiber.completeness(), "tree": v.fiber },
                "torus": { "depth": v.torus.depth(), "completeness": v.torus.completeness(), "tree": v.torus },
                "splittings": v.splittings.iter().map(|(n, s)| json!({ "node": n, "induced": splitting_json(&g, s) })).collect::<Vec<_>>(),
            });
            json("hierarchy", &hash, budgets, r)
        }
    };
    Ok(Output::ok(out))
}

#[derive(Clone, Copy, ValueEnum)]
pub enum DivergenceEmit {
    Csv,
    Svg,
    Json,
}

#[derive(Args)]
pub struct DivergenceArgs {
    #[arg(long)]
    map: String,
    #[arg(long, value_delimiter = ',', default_value = "4,6,8")]
    radii: Vec<u32>,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Vertex cap for the Cayley ball.
    #[arg(long, default_value_t = DEFAULT_BALL_CAP)]
    cap: usize,
    #[arg(long, value_enum, default_value = "csv")]
    emit: DivergenceEmit,
}

#[derive(Serialize)]
struct DivergenceBudgets<'a> {
    radii: &'a [u32],
    samples: usize,
    seed: u64,
    cap: usize,
}

pub fn divergence(a: &DivergenceArgs) -> Result<Output, Failure> {
    let mut hash = InputHash::default();
    let phi = load_map(&a.map, &mut hash)?;
    let g = TorusGroup::new(phi)?;
    positive("samples", a.samples as u64)?;
    positive("cap", a.cap as u64)?;
    let budgets = DivergenceBudgets { radii: &a.radii, samples: a.samples, seed: a.seed, cap: a.cap };
    let rep = divergence_estimate(&g, &a.radii, a.samples, a.seed, a.cap)?;
    let text = match a.emit {
        DivergenceEmit::Json => json("divergence", &hash, &budgets, &rep),
        DivergenceEmit::Csv => {
            let mut s = comment_header("#", "divergence", &hash, &budgets);
            s.push_str(&fit_line("#", &rep));
            s.push_str("radius,sampled,reachable,mean_detour,low_confidence\n");
            for r in &rep.radii {
                s.push_str(&format!("{},{},{},{},{}\n", r.radius, r.sampled, r.reachable, opt(r.mean_detour.map(|m| format!("{m:.6}"))), r.low_confidence));
            }
            s
        }
        DivergenceEmit::Svg => divergence_svg(&rep, &(comment_header("", "divergence", &hash, &budgets) + &fit_line("", &rep))),
    };
    Ok(Output::ok(text))
}

fn fit_line(prefix: &str, rep: &DivergenceReport) -> String {
    format!(
        "{prefix} ball radius {} ({} vertices); exponent {} residual {}; low confidence: {}; small radii support orderings, not exponents\n",
        rep.ball_radius,
        rep.ball_size,
        opt(rep.exponent.map(|x| format!("{x:.4}"))),
        opt(rep.residual.map(|x| format!("{x:.4}"))),
        rep.low_confidence
    )
}

fn divergence_svg(rep: &DivergenceReport, header: &str) -> String {
    let pts: Vec<(f64, f64)> = rep.radii.iter().filter_map(|r| r.mean_detour.map(|m| ((r.radius as f64).ln(), m.ln()))).collect();
    let mut series = vec![Series { label: "mean detour".into(), points: pts.clone(), scatter: true, color: "#1f5fa8" }];
    let fitted: Vec<&(f64, f64)> = rep.radii.iter().zip(&pts).filter(|(r, _)| r.radius >= fgrow_core::geometry::MIN_FIT_RADIUS).map(|(_, p)| p).collect();
    if let (Some(slope), Some(first), Some(last)) = (rep.exponent, fitted.first(), fitted.last()) {
        let n = fitted.len() as f64;
        let (mx, my) = (fitted.iter().map(|p| p.0).sum::<f64>() / n, fitted.iter().map(|p| p.1).sum::<f64>() / n);
        let line = |x: f64| my + slope * (x - mx);
        series.push(Series { label: format!("fit, slope {slope:.3}"), points: vec![(first.0, line(first.0)), (last.0, line(last.0))], scatter: false, color: "#b8461b" });
    }
    plot("detour divergence", "log r", "log mean detour", header, &series)
}
