//! Parse an annotated context and print its semantic graph.
//!
//! Usage: cargo run --example build_graph [path/to/context.json]

use std::path::PathBuf;

use sgcqg::graph::EdgeKind;
use sgcqg::{build_graph, AnnotatedContext};

fn main() -> sgcqg::Result<()> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/contexts/asta-ocean.json")
    });
    let ctx = AnnotatedContext::from_path(&path)?;
    let graph = build_graph(&ctx);

    println!("context '{}': {} sentence(s)", ctx.id, ctx.sentence_count());
    println!("nodes:");
    for node in &graph.nodes {
        println!(
            "  [{}] s{} '{}' ({:?})",
            node.node_id, node.sentence_index, node.span_text, node.origin,
        );
    }
    println!("edges:");
    for edge in &graph.edges {
        let kind = match edge.kind {
            EdgeKind::Coreference => "coref",
            EdgeKind::SameSentence => "same-sentence",
            EdgeKind::Extra => "extra",
        };
        println!("  {} -- {} ({kind})", edge.from, edge.to);
    }
    println!(
        "{} node(s), {} edge(s), {} extra edge(s) keeping the graph connected",
        graph.nodes.len(),
        graph.edges.len(),
        graph.extra_edge_count()
    );
    Ok(())
}
