//! Command-line entry point: parse model files or gallery instances, run the
//! classification, Chern, reconstruction and comparison reports.

use anyhow::{anyhow, bail, Context, Result};
use cechcorr::bundle::coverings_isomorphic;
use cechcorr::cartan::diagram_roundtrip_check;
use cechcorr::cocycle::{verify_cocycle, TransitionSystem};
use cechcorr::cohomology::{chern_class, cohomology_groups};
use cechcorr::correspondence::{
    correspondences_isomorphic, cstar_correspondences_isomorphic, left_action_of,
    perturb_correspondence, spectrum_law_residual, unitary_field_residuals,
    TwistedCorrespondence,
};
use cechcorr::gallery::{bundles, instances};
use cechcorr::reconstruct::{
    constant_rank_iso_check, double_commutant_spectrum, generated_subalgebra_spectrum,
    locally_conjugate, reconstructed_graphs_isomorphic, spectra_iso_iota_phi, BranchedSpectrum,
    RankAlgebra,
};
use cechcorr::space::validate_good_cover;
use cechcorr::textio;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use serde::Serialize;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cechcorr",
    version,
    about = "Twisted coverings, correspondences and Cartan subalgebras on finite Čech models"
)]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    structured: bool,
    /// Numeric tolerance for validation residuals.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Seed for randomized property commands.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the spaces, cocycles and correspondences of inputs.
    Check { inputs: Vec<String> },
    /// Build coverings from the cocycles of an input and report components,
    /// fibers and monodromy.
    Build { input: String },
    /// First Chern class of the 𝕋-valued cocycles of an input.
    Chern { input: String },
    /// Classify the n-sheeted coverings of the circle by monodromy class.
    ClassifyCircle { n: usize },
    /// Generated-subalgebra and double-commutant spectra of correspondences.
    Reconstruct { input: String },
    /// Commuting-triangle check on the correspondences of an input.
    Roundtrip {
        input: String,
        /// Additionally run this many random gauge re-presentations.
        #[arg(long, default_value_t = 0)]
        perturbations: usize,
    },
    /// Compare two correspondences: topological and C*-level isomorphism.
    Compare { first: String, second: String },
    /// List and validate the bundled example instances.
    Gallery,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Check { inputs } => check(cli, inputs),
        Command::Build { input } => build(cli, input),
        Command::Chern { input } => chern(cli, input),
        Command::ClassifyCircle { n } => classify_circle(cli, *n),
        Command::Reconstruct { input } => reconstruct(cli, input),
        Command::Roundtrip { input, perturbations } => roundtrip(cli, input, *perturbations),
        Command::Compare { first, second } => compare(cli, first, second),
        Command::Gallery => gallery(cli),
    }
}

/// Resolve a path or gallery:<name> reference into a document.
fn load(input: &str) -> Result<textio::Document> {
    if let Some(name) = input.strip_prefix("gallery:") {
        return gallery_document(name);
    }
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {input}"))?;
    textio::parse_input(&text).map_err(|e| anyhow!("{input}: {e}"))
}

fn gallery_document(name: &str) -> Result<textio::Document> {
    let mut doc = textio::Document::default();
    if let Some(corr) = gallery_correspondence(name)? {
        doc.correspondences.insert(name.to_string(), corr);
        return Ok(doc);
    }
    if let Some(system) = gallery_bundle(name) {
        doc.cocycles.insert(name.to_string(), system);
        return Ok(doc);
    }
    bail!("unknown gallery instance '{name}'")
}

fn gallery_correspondence(name: &str) -> Result<Option<TwistedCorrespondence>> {
    let choice = |arg: &str| {
        instances::RangeChoice::parse(arg)
            .ok_or_else(|| anyhow!("expected r1 or r2, found '{arg}'"))
    };
    let (stem, arg) = match name.split_once('(') {
        Some((stem, rest)) => (stem, rest.strip_suffix(')').unwrap_or(rest)),
        None => (name, ""),
    };
    Ok(match stem {
        "example-5.1-circle" => Some(instances::example_51_circle()),
        "example-different-ranges" => Some(instances::different_ranges(choice(arg)?)),
        "plateau-example" => Some(instances::plateau(choice(arg)?)),
        "square-example" => Some(instances::square_example(choice(arg)?)),
        "trivial-covering-ranks" => Some(instances::trivial_covering_ranks(choice(arg)?)),
        "rp2-antipodal-cover" => Some(instances::rp2_antipodal_correspondence()),
        "circle-covers" => {
            let cycle_type: Vec<usize> = arg
                .split('+')
                .map(|p| p.parse::<usize>().context("cycle type like 2+1"))
                .collect::<Result<_>>()?;
            Some(instances::circle_cover_correspondence(&cycle_type))
        }
        "s2-line-bundle" => {
            let w: i64 = arg.parse().context("winding must be an integer")?;
            Some(instances::s2_line_bundle_correspondence(w))
        }
        _ => None,
    })
}

fn gallery_bundle(name: &str) -> Option<TransitionSystem> {
    let (stem, arg) = match name.split_once('(') {
        Some((stem, rest)) => (stem, rest.strip_suffix(')').unwrap_or(rest)),
        None => (name, ""),
    };
    match stem {
        "s2-line-bundle" => arg.parse::<i64>().ok().map(bundles::sphere_clutching),
        "rp2-antipodal" => Some(bundles::rp2_sign_bundle()),
        "rp2-trivial" => Some(bundles::rp2_trivial_bundle()),
        _ => None,
    }
}

#[derive(Serialize)]
struct CheckReport {
    input: String,
    spaces: Vec<(String, bool, usize)>,
    cocycles: Vec<(String, bool, usize)>,
    correspondences: Vec<(String, bool, f64)>,
    ok: bool,
}

fn check(cli: &Cli, inputs: &[String]) -> Result<bool> {
    if inputs.is_empty() {
        bail!("nothing to check");
    }
    let mut all_ok = true;
    for input in inputs {
        let doc = load(input)?;
        let mut report = CheckReport {
            input: input.clone(),
            spaces: Vec::new(),
            cocycles: Vec::new(),
            correspondences: Vec::new(),
            ok: true,
        };
        for (name, space) in &doc.spaces {
            let cover = validate_good_cover(space);
            report.spaces.push((name.clone(), cover.good, cover.violations.len()));
        }
        for (name, system) in &doc.cocycles {
            let result = verify_cocycle(system);
            report.cocycles.push((name.clone(), result.valid, result.violations.len()));
            report.ok &= result.valid;
        }
        for (name, corr) in &doc.correspondences {
            let issues = left_action_of(corr).validate(cli.tolerance);
            let residual = spectrum_law_residual(corr);
            let ok = issues.is_empty() && residual < cli.tolerance;
            report.correspondences.push((name.clone(), ok, residual));
            report.ok &= ok;
        }
        all_ok &= report.ok;
        if cli.structured {
            println!("{}", serde_json::to_string_pretty(&report)?);
        } else {
            println!("input {input}");
            for (name, good, violations) in &report.spaces {
                println!(
                    "  space {name}: cover {} ({violations} bad intersections)",
                    if *good { "good" } else { "NOT GOOD" }
                );
            }
            for (name, valid, violations) in &report.cocycles {
                println!(
                    "  cocycle {name}: {} ({violations} violations)",
                    if *valid { "valid" } else { "INVALID" }
                );
            }
            for (name, ok, residual) in &report.correspondences {
                println!(
                    "  correspondence {name}: {} (spectrum residual {residual:.2e})",
                    if *ok { "valid" } else { "INVALID" }
                );
            }
        }
    }
    Ok(all_ok)
}

#[derive(Serialize)]
struct BuildReport {
    cocycle: String,
    sheets: usize,
    total_vertices: usize,
    components: Vec<usize>,
    monodromy: Vec<String>,
    fibers: Vec<(String, Vec<String>)>,
}

fn build(cli: &Cli, input: &str) -> Result<bool> {
    let doc = load(input)?;
    let mut systems: Vec<(String, TransitionSystem)> =
        doc.cocycles.iter().map(|(n, s)| (n.clone(), s.clone())).collect();
    for (name, corr) in &doc.correspondences {
        systems.push((
            name.clone(),
            cechcorr::bundle::reassemble_cocycle(&corr.covering, &corr.line),
        ));
    }
    if systems.is_empty() {
        bail!("input defines no cocycles");
    }
    for (name, system) in &systems {
        let (covering, _) = cechcorr::bundle::build_twisted_covering(system)
            .map_err(|e| anyhow!("{name}: {e}"))?;
        let (count, comp) = covering.components();
        let mut sizes = vec![0usize; count];
        for &c in &comp {
            sizes[c] += 1;
        }
        let monodromy = cycle_basis(system.base.as_ref())
            .into_iter()
            .map(|walk| covering.monodromy_along(&walk).cycle_string())
            .collect();
        let fibers = system
            .base
            .vertices()
            .map(|x| {
                (
                    system.base.label(x).to_string(),
                    covering.fiber(x).iter().map(|&z| covering.vertex_label(z)).collect(),
                )
            })
            .collect();
        let report = BuildReport {
            cocycle: name.clone(),
            sheets: covering.sheets,
            total_vertices: covering.total_count(),
            components: sizes,
            monodromy,
            fibers,
        };
        if cli.structured {
            println!("{}", serde_json::to_string_pretty(&report)?);
        } else {
            println!(
                "cocycle {name}: {}-sheeted covering, {} total vertices",
                report.sheets, report.total_vertices
            );
            println!("  components: {:?}", report.components);
            for (k, m) in report.monodromy.iter().enumerate() {
                println!("  monodromy along basis cycle {k}: {m}");
            }
            for (label, fiber) in report.fibers.iter().take(4) {
                println!("  fiber over {label}: {}", fiber.join(" "));
            }
            if report.fibers.len() > 4 {
                println!("  ... ({} more fibers)", report.fibers.len() - 4);
            }
        }
    }
    Ok(true)
}

/// One closed walk per independent cycle of the base graph: the spanning
/// tree path between the endpoints of each non-tree edge, closed by it.
fn cycle_basis(space: &cechcorr::space::CechSpace) -> Vec<Vec<usize>> {
    let n = space.vertex_count();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    let mut tree_edges = std::collections::BTreeSet::new();
    let mut basis = Vec::new();
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &w in space.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    depth[w] = depth[v] + 1;
                    tree_edges.insert((v.min(w), v.max(w)));
                    queue.push_back(w);
                }
            }
        }
    }
    for (a, b) in space.edges() {
        if tree_edges.contains(&(a, b)) {
            continue;
        }
        let (mut u, mut v) = (a, b);
        let mut left = vec![u];
        let mut right = vec![v];
        while depth[u] > depth[v] {
            u = parent[u].unwrap();
            left.push(u);
        }
        while depth[v] > depth[u] {
            v = parent[v].unwrap();
            right.push(v);
        }
        while u != v {
            u = parent[u].unwrap();
            left.push(u);
            v = parent[v].unwrap();
            right.push(v);
        }
        right.pop();
        right.reverse();
        left.extend(right);
        left.push(a);
        left.reverse();
        basis.push(left);
    }
    basis
}

#[derive(Serialize)]
struct ChernReport {
    bundle: String,
    h2: String,
    class: String,
    trivial: bool,
}

fn chern(cli: &Cli, input: &str) -> Result<bool> {
    // Gallery names resolve to their line bundles first.
    let mut systems: Vec<(String, TransitionSystem)> = Vec::new();
    if let Some(name) = input.strip_prefix("gallery:") {
        if let Some(system) = gallery_bundle(name) {
            systems.push((name.to_string(), system));
        }
    }
    if systems.is_empty() {
        let doc = load(input)?;
        for (name, system) in &doc.cocycles {
            if system.degree == 1 {
                systems.push((name.clone(), system.clone()));
            }
        }
        // The twist of a correspondence lives over its total space.
        for (name, corr) in &doc.correspondences {
            systems.push((format!("{name} (twist)"), corr.line.phases.clone()));
        }
    }
    let mut any = false;
    for (name, system) in &systems {
        any = true;
        let (_, _, h2) = cohomology_groups(&system.base).map_err(|e| anyhow!("{name}: {e}"))?;
        let class = chern_class(system).map_err(|e| anyhow!("{name}: {e}"))?;
        let report = ChernReport {
            bundle: name.clone(),
            h2: h2.describe(),
            class: class.describe(),
            trivial: class.is_zero(),
        };
        if cli.structured {
            println!("{}", serde_json::to_string_pretty(&report)?);
        } else {
            println!("bundle {name}: H^2 = {}; class = {}", report.h2, report.class);
        }
    }
    if !any {
        bail!("input defines no line-bundle cocycles");
    }
    Ok(true)
}

#[derive(Serialize)]
struct ClassifyReport {
    n: usize,
    classes: Vec<(String, usize)>,
    pairwise_distinct: bool,
}

fn classify_circle(cli: &Cli, n: usize) -> Result<bool> {
    if n == 0 {
        bail!("sheet count must be at least 1");
    }
    let covers = instances::classify_circle(n);
    let mut pairwise = true;
    for i in 0..covers.len() {
        for j in (i + 1)..covers.len() {
            if coverings_isomorphic(&covers[i].1, &covers[j].1)?.is_some() {
                pairwise = false;
            }
        }
    }
    let report = ClassifyReport {
        n,
        classes: covers
            .iter()
            .map(|(cycle_type, cov)| {
                let type_str = cycle_type
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join("+");
                (type_str, cov.component_count())
            })
            .collect(),
        pairwise_distinct: pairwise,
    };
    if cli.structured {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("{} coverings of the circle with {n} sheets:", report.classes.len());
        for (cycle_type, components) in &report.classes {
            println!("  monodromy type {cycle_type}: {components} component(s)");
        }
        println!(
            "pairwise non-isomorphic: {}",
            if report.pairwise_distinct { "yes" } else { "NO" }
        );
    }
    Ok(report.pairwise_distinct)
}

#[derive(Serialize)]
struct SpectrumSummary {
    vertices: usize,
    fiber_counts: Vec<usize>,
    decorated: bool,
}

fn summarize(spec: &BranchedSpectrum) -> SpectrumSummary {
    let mut counts: Vec<usize> = spec.base.vertices().map(|x| spec.fiber_count(x)).collect();
    counts.sort_unstable();
    counts.dedup();
    SpectrumSummary {
        vertices: spec.vertex_count(),
        fiber_counts: counts,
        decorated: spec.is_range_decorated(),
    }
}

fn reconstruct(cli: &Cli, input: &str) -> Result<bool> {
    let doc = load(input)?;
    if doc.correspondences.is_empty() {
        bail!("input defines no correspondences");
    }
    for (name, corr) in &doc.correspondences {
        let generated = generated_subalgebra_spectrum(corr);
        let commutant = double_commutant_spectrum(corr);
        #[derive(Serialize)]
        struct ReconstructReport {
            correspondence: String,
            generated: SpectrumSummary,
            double_commutant: SpectrumSummary,
            commutant_equals_generated: bool,
        }
        let report = ReconstructReport {
            correspondence: name.clone(),
            generated: summarize(&generated),
            double_commutant: summarize(&commutant),
            commutant_equals_generated: generated.vertex_count() == commutant.vertex_count(),
        };
        if cli.structured {
            println!("{}", serde_json::to_string_pretty(&report)?);
        } else {
            println!("correspondence {name}:");
            println!(
                "  generated spectrum: {} vertices, fiber counts {:?}",
                report.generated.vertices, report.generated.fiber_counts
            );
            println!(
                "  double commutant:   {} vertices, fiber counts {:?}{}",
                report.double_commutant.vertices,
                report.double_commutant.fiber_counts,
                if report.commutant_equals_generated {
                    " (equals the generated spectrum)"
                } else {
                    ""
                }
            );
        }
    }
    Ok(true)
}

fn roundtrip(cli: &Cli, input: &str, perturbations: usize) -> Result<bool> {
    let doc = load(input)?;
    if doc.correspondences.is_empty() {
        bail!("input defines no correspondences");
    }
    let mut all_pass = true;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cli.seed);
    for (name, corr) in &doc.correspondences {
        let mut runs = vec![(name.clone(), diagram_roundtrip_check(corr))];
        for k in 0..perturbations {
            let perturbed = perturb_correspondence(corr, &mut rng, 1.0);
            runs.push((format!("{name} (gauge {k})"), diagram_roundtrip_check(&perturbed)));
        }
        for (label, report) in runs {
            all_pass &= report.pass();
            if cli.structured {
                #[derive(Serialize)]
                struct Leg {
                    name: &'static str,
                    pass: bool,
                    residual: f64,
                }
                #[derive(Serialize)]
                struct RoundtripReport {
                    instance: String,
                    pass: bool,
                    legs: Vec<Leg>,
                }
                let out = RoundtripReport {
                    instance: label,
                    pass: report.pass(),
                    legs: report
                        .legs
                        .iter()
                        .map(|l| Leg { name: l.name, pass: l.pass, residual: l.residual })
                        .collect(),
                };
                println!("{}", serde_json::to_string_pretty(&out)?);
            } else {
                println!("{label}: {}", if report.pass() { "all legs commute" } else { "FAILED" });
                for leg in &report.legs {
                    println!(
                        "  {}: {} (residual {:.2e})",
                        leg.name,
                        if leg.pass { "pass" } else { "FAIL" },
                        leg.residual
                    );
                }
            }
        }
    }
    Ok(all_pass)
}

fn single_correspondence(doc: &textio::Document) -> Result<(String, &TwistedCorrespondence)> {
    match doc.correspondences.len() {
        1 => {
            let (name, corr) = doc.correspondences.iter().next().unwrap();
            Ok((name.clone(), corr))
        }
        0 => bail!("input defines no correspondences"),
        _ => bail!("input defines several correspondences; split the files"),
    }
}

fn compare(cli: &Cli, first: &str, second: &str) -> Result<bool> {
    let doc_a = load(first)?;
    let doc_b = load(second)?;
    let (name_a, a) = single_correspondence(&doc_a)?;
    let (name_b, b) = single_correspondence(&doc_b)?;

    let graphs = correspondences_isomorphic(a, b)?.is_some();
    let cstar = cstar_correspondences_isomorphic(a, b)?;
    let cstar_residuals = cstar.as_ref().map(|field| unitary_field_residuals(a, b, field));
    let local = locally_conjugate(a, b)?;
    let verdict = constant_rank_iso_check(a, b, RankAlgebra::Auto);
    let gen_a = generated_subalgebra_spectrum(a);
    let gen_b = generated_subalgebra_spectrum(b);
    let generated_match = spectra_iso_iota_phi(&gen_a, &gen_b).is_some();
    let dc_match = reconstructed_graphs_isomorphic(
        &double_commutant_spectrum(a),
        &double_commutant_spectrum(b),
    );

    #[derive(Serialize)]
    struct CompareReport {
        first: String,
        second: String,
        graphs_isomorphic: bool,
        cstar_isomorphic: bool,
        cstar_residuals: Option<(f64, f64)>,
        locally_conjugate: bool,
        generated_spectra_match: bool,
        double_commutant_graphs_match: bool,
        constant_rank_verdict: String,
    }
    let report = CompareReport {
        first: name_a,
        second: name_b,
        graphs_isomorphic: graphs,
        cstar_isomorphic: cstar.is_some(),
        cstar_residuals,
        locally_conjugate: local,
        generated_spectra_match: generated_match,
        double_commutant_graphs_match: dc_match,
        constant_rank_verdict: match &verdict {
            Ok(v) => format!(
                "{} (algebra: {}, local conjugacy: {}, bundle data: {})",
                if v.isomorphic { "isomorphic" } else { "not isomorphic" },
                v.algebra,
                v.locally_conjugate,
                v.bundles_match
            ),
            Err(e) => format!("unavailable: {e}"),
        },
    };
    if cli.structured {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        println!("comparing {} with {}:", report.first, report.second);
        println!("  topological correspondences isomorphic: {}", yesno(report.graphs_isomorphic));
        println!("  C*-correspondences isomorphic:          {}", yesno(report.cstar_isomorphic));
        if let Some((u, i)) = report.cstar_residuals {
            println!("    witness residuals: unitary {u:.2e}, intertwining {i:.2e}");
        }
        println!("  locally conjugate:                      {}", yesno(report.locally_conjugate));
        println!(
            "  generated spectra match:                {}",
            yesno(report.generated_spectra_match)
        );
        println!(
            "  reconstructed graphs match:             {}",
            yesno(report.double_commutant_graphs_match)
        );
        println!("  rank criterion: {}", report.constant_rank_verdict);
    }
    Ok(report.cstar_isomorphic)
}

fn yesno(v: bool) -> &'static str {
    if v {
        "yes"
    } else {
        "no"
    }
}

fn gallery(cli: &Cli) -> Result<bool> {
    let mut ok = true;
    for (name, corr) in instances::all() {
        let issues = left_action_of(&corr).validate(cli.tolerance);
        let residual = spectrum_law_residual(&corr);
        let valid = issues.is_empty() && residual < cli.tolerance;
        ok &= valid;
        if cli.structured {
            #[derive(Serialize)]
            struct GalleryEntry {
                name: String,
                base: String,
                target: String,
                sheets: usize,
                valid: bool,
            }
            let entry = GalleryEntry {
                name: name.clone(),
                base: corr.base().name.clone(),
                target: corr.target.name.clone(),
                sheets: corr.covering.sheets,
                valid,
            };
            println!("{}", serde_json::to_string(&entry)?);
        } else {
            println!(
                "{name}: base {}, target {}, {} sheet(s), {}",
                corr.base().name,
                corr.target.name,
                corr.covering.sheets,
                if valid { "valid" } else { "INVALID" }
            );
        }
    }
    Ok(ok)
}
