//! Semantic graph over a context: coreference chains, same-sentence chains,
//! named-entity nodes, and the minimal set of Extra edges that makes the
//! undirected view fully connected.
//!
//! Edges are stored with a direction (forward in context) but traversal
//! treats them as undirected. Construction is a pure function of the
//! context: two builds yield identical node and edge lists.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::context::AnnotatedContext;
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeOrigin {
    ClusterMention { cluster: usize },
    NamedEntity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphNode {
    pub node_id: NodeId,
    pub span_text: String,
    pub sentence_index: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub origin: NodeOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    Coreference,
    SameSentence,
    Extra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct SemanticGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    /// sentence index -> node ids in that sentence, ordered by offset.
    pub sentence_to_nodes: BTreeMap<usize, Vec<NodeId>>,
    #[serde(skip)]
    adjacency: Vec<Vec<NodeId>>,
}

/// Union-find over dense ids, used to track connected components while
/// adding Extra edges.
#[derive(Debug, Clone)]
pub struct DisjointSetUnion {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSetUnion {
    pub fn new(size: usize) -> Self {
        DisjointSetUnion {
            parent: (0..size).collect(),
            rank: vec![0; size],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// One node per cluster mention, plus one node per named entity whose span
/// does not overlap any cluster mention. Ordered by (sentence, offset).
pub fn collect_nodes(ctx: &AnnotatedContext) -> Vec<GraphNode> {
    struct Proto {
        sentence_index: usize,
        char_start: usize,
        char_end: usize,
        origin: NodeOrigin,
    }
    let mut protos = Vec::new();
    for (ci, cluster) in ctx.clusters.iter().enumerate() {
        for m in cluster {
            protos.push(Proto {
                sentence_index: m.sentence_index,
                char_start: m.char_start,
                char_end: m.char_end,
                origin: NodeOrigin::ClusterMention { cluster: ci },
            });
        }
    }
    let overlaps_mention = |start: usize, end: usize| {
        ctx.clusters
            .iter()
            .flatten()
            .any(|m| start < m.char_end && m.char_start < end)
    };
    for e in &ctx.entities {
        if !overlaps_mention(e.char_start, e.char_end) {
            protos.push(Proto {
                sentence_index: e.sentence_index,
                char_start: e.char_start,
                char_end: e.char_end,
                origin: NodeOrigin::NamedEntity,
            });
        }
    }
    protos.sort_by_key(|p| (p.sentence_index, p.char_start, p.char_end));
    protos
        .into_iter()
        .enumerate()
        .map(|(id, p)| GraphNode {
            node_id: id,
            span_text: ctx.span_text(p.char_start, p.char_end).to_string(),
            sentence_index: p.sentence_index,
            char_start: p.char_start,
            char_end: p.char_end,
            origin: p.origin,
        })
        .collect()
}

fn context_order(nodes: &[GraphNode], ids: &mut Vec<NodeId>) {
    ids.sort_by_key(|&id| {
        let n = &nodes[id];
        (n.char_start, n.char_end, n.node_id)
    });
}

/// Chain a cluster's nodes in context order: k mentions yield k-1
/// Coreference edges, each to the nearest forward mention.
pub fn chain_cluster(nodes: &[GraphNode], mut cluster_ids: Vec<NodeId>) -> Vec<GraphEdge> {
    context_order(nodes, &mut cluster_ids);
    cluster_ids
        .windows(2)
        .map(|w| GraphEdge {
            from: w[0],
            to: w[1],
            kind: EdgeKind::Coreference,
        })
        .collect()
}

/// Chain each sentence's nodes in offset order with SameSentence edges.
pub fn chain_sentences(sentence_to_nodes: &BTreeMap<usize, Vec<NodeId>>) -> Vec<GraphEdge> {
    let mut edges = Vec::new();
    for ids in sentence_to_nodes.values() {
        for w in ids.windows(2) {
            edges.push(GraphEdge {
                from: w[0],
                to: w[1],
                kind: EdgeKind::SameSentence,
            });
        }
    }
    edges
}

/// Merge connected components with Extra edges, prioritizing sentence pairs
/// with the smallest index difference, then the smallest indices. Each merge
/// connects the last phrase of the smaller-index sentence to the first
/// phrase of the other. Sentences with no nodes cannot anchor an edge and
/// are skipped. Returns the added edges; empty when already connected.
pub fn add_extra_edges(
    nodes: &[GraphNode],
    edges: &[GraphEdge],
    sentence_to_nodes: &BTreeMap<usize, Vec<NodeId>>,
) -> Vec<GraphEdge> {
    if nodes.is_empty() {
        return Vec::new();
    }
    let mut dsu = DisjointSetUnion::new(nodes.len());
    for e in edges {
        dsu.union(e.from, e.to);
    }
    let sentences: Vec<usize> = sentence_to_nodes.keys().copied().collect();
    let mut pairs = Vec::new();
    for (i, &a) in sentences.iter().enumerate() {
        for &b in &sentences[i + 1..] {
            pairs.push((b - a, a, b));
        }
    }
    pairs.sort();
    let mut added = Vec::new();
    for (_, a, b) in pairs {
        let first_of = |s: usize| sentence_to_nodes[&s][0];
        let last_of = |s: usize| *sentence_to_nodes[&s].last().unwrap();
        if dsu.union(first_of(a), first_of(b)) {
            added.push(GraphEdge {
                from: last_of(a),
                to: first_of(b),
                kind: EdgeKind::Extra,
            });
        }
    }
    added
}

/// Build the full semantic graph for a context. The undirected view of the
/// result is connected whenever it has any nodes.
pub fn build_graph(ctx: &AnnotatedContext) -> SemanticGraph {
    let nodes = collect_nodes(ctx);

    let mut sentence_to_nodes: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for n in &nodes {
        sentence_to_nodes.entry(n.sentence_index).or_default().push(n.node_id);
    }
    // Nodes are already sorted by (sentence, offset), so per-sentence lists
    // are in offset order.

    let mut edges = Vec::new();
    for ci in 0..ctx.clusters.len() {
        let cluster_ids: Vec<NodeId> = nodes
            .iter()
            .filter(|n| n.origin == NodeOrigin::ClusterMention { cluster: ci })
            .map(|n| n.node_id)
            .collect();
        edges.extend(chain_cluster(&nodes, cluster_ids));
    }
    edges.extend(chain_sentences(&sentence_to_nodes));
    edges.extend(add_extra_edges(&nodes, &edges, &sentence_to_nodes));

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for e in &edges {
        adjacency[e.from].push(e.to);
        adjacency[e.to].push(e.from);
    }
    for (id, adj) in adjacency.iter_mut().enumerate() {
        adj.sort_by_key(|&o| (nodes[o].sentence_index, nodes[o].char_start, nodes[o].char_end, o));
        adj.dedup();
        debug_assert!(!adj.contains(&id));
    }

    SemanticGraph {
        nodes,
        edges,
        sentence_to_nodes,
        adjacency,
    }
}

impl SemanticGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&GraphNode> {
        self.nodes.get(id).ok_or(Error::UnknownNode(id))
    }

    /// Undirected neighbors in ascending (sentence, offset) order.
    pub fn neighbors(&self, id: NodeId) -> Result<&[NodeId]> {
        self.adjacency
            .get(id)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownNode(id))
    }

    pub fn extra_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Extra).count()
    }

    /// JSON dump of nodes and edges, for the `graph` subcommand.
    pub fn dump_json(&self) -> serde_json::Value {
        serde_json::json!({ "nodes": self.nodes, "edges": self.edges })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(
        text: &str,
        sentences: &[(usize, usize)],
        clusters: &[&[(usize, usize)]],
        entities: &[(usize, usize, &str)],
    ) -> AnnotatedContext {
        let json = serde_json::json!({
            "id": "t",
            "text": text,
            "sentences": sentences.iter().map(|&(s, e)| serde_json::json!({"start": s, "end": e})).collect::<Vec<_>>(),
            "clusters": clusters.iter().map(|c| c.iter().map(|&(s, e)| serde_json::json!({"start": s, "end": e})).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "entities": entities.iter().map(|&(s, e, l)| serde_json::json!({"start": s, "end": e, "label": l})).collect::<Vec<_>>(),
        });
        AnnotatedContext::parse_str(&json.to_string()).unwrap()
    }

    #[test]
    fn one_cluster_two_nodes() {
        // "Ann waved. She left."
        let c = ctx(
            "Ann waved. She left.",
            &[(0, 10), (11, 20)],
            &[&[(0, 3), (11, 14)]],
            &[],
        );
        let nodes = collect_nodes(&c);
        assert_eq!(nodes.len(), 2);
    }

    #[test]
    fn entity_matching_cluster_mention_not_duplicated() {
        let c = ctx(
            "Ann waved. She left.",
            &[(0, 10), (11, 20)],
            &[&[(0, 3), (11, 14)]],
            &[(0, 3, "PERSON")],
        );
        assert_eq!(collect_nodes(&c).len(), 2);
    }

    #[test]
    fn cluster_chain_edges() {
        let c = ctx(
            "Ann waved. She left. She ran.",
            &[(0, 10), (11, 20), (21, 29)],
            &[&[(0, 3), (11, 14), (21, 24)]],
            &[],
        );
        let g = build_graph(&c);
        let coref: Vec<_> = g
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Coreference)
            .collect();
        assert_eq!(coref.len(), 2);
        assert_eq!((coref[0].from, coref[0].to), (0, 1));
        assert_eq!((coref[1].from, coref[1].to), (1, 2));
    }

    #[test]
    fn sentence_chain_edges() {
        // Three entities in one sentence chain with two SameSentence edges.
        let c = ctx(
            "Ann met Bob in Rome.",
            &[(0, 20)],
            &[],
            &[(0, 3, "PERSON"), (8, 11, "PERSON"), (15, 19, "GPE")],
        );
        let g = build_graph(&c);
        let same: Vec<_> = g
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::SameSentence)
            .collect();
        assert_eq!(same.len(), 2);
        assert_eq!((same[0].from, same[0].to), (0, 1));
        assert_eq!((same[1].from, same[1].to), (1, 2));
    }

    #[test]
    fn extra_edge_for_two_components() {
        // Component spanning sentences {1,2} via a cluster, singleton at 4.
        // Minimal eligible pair is (2, 4); edge goes last-of-2 -> first-of-4.
        let c = ctx(
            "Ann waved. She left. Quiet now. Rome is far.",
            &[(0, 10), (11, 20), (21, 31), (32, 44)],
            &[&[(0, 3), (11, 14)]],
            &[(32, 36, "GPE")],
        );
        let g = build_graph(&c);
        let extra: Vec<_> = g.edges.iter().filter(|e| e.kind == EdgeKind::Extra).collect();
        assert_eq!(extra.len(), 1);
        let from = g.node(extra[0].from).unwrap();
        let to = g.node(extra[0].to).unwrap();
        assert_eq!(from.sentence_index, 2);
        assert_eq!(to.sentence_index, 4);
    }

    #[test]
    fn extra_edges_three_singletons() {
        // Singleton components at sentences 1, 3, 5: both candidate pairs
        // (1,3) and (3,5) have difference 2; smaller indices first.
        let c = ctx(
            "Ann is here. Quiet now. Bob is here. Quiet now. Kim is here.",
            &[(0, 12), (13, 23), (24, 36), (37, 47), (48, 60)],
            &[],
            &[(0, 3, "PERSON"), (24, 27, "PERSON"), (48, 51, "PERSON")],
        );
        let g = build_graph(&c);
        let extra: Vec<_> = g.edges.iter().filter(|e| e.kind == EdgeKind::Extra).collect();
        assert_eq!(extra.len(), 2);
        let s = |id: NodeId| g.node(id).unwrap().sentence_index;
        assert_eq!((s(extra[0].from), s(extra[0].to)), (1, 3));
        assert_eq!((s(extra[1].from), s(extra[1].to)), (3, 5));
    }

    #[test]
    fn already_connected_graph_needs_no_extras() {
        let c = ctx(
            "Ann waved. She left.",
            &[(0, 10), (11, 20)],
            &[&[(0, 3), (11, 14)]],
            &[],
        );
        let g = build_graph(&c);
        assert_eq!(g.extra_edge_count(), 0);
    }

    #[test]
    fn empty_annotations_empty_graph() {
        let c = ctx("Just one plain sentence.", &[(0, 24)], &[], &[]);
        let g = build_graph(&c);
        assert!(g.is_empty());
        assert!(g.edges.is_empty());
    }

    #[test]
    fn neighbors_chain() {
        let c = ctx(
            "Ann waved. She left. She ran.",
            &[(0, 10), (11, 20), (21, 29)],
            &[&[(0, 3), (11, 14), (21, 24)]],
            &[],
        );
        let g = build_graph(&c);
        assert_eq!(g.neighbors(1).unwrap(), &[0, 2]);
        assert!(matches!(g.neighbors(99), Err(Error::UnknownNode(99))));
    }

    #[test]
    fn build_is_deterministic() {
        let c = ctx(
            "Ann waved. She left. Rome is far.",
            &[(0, 10), (11, 20), (21, 33)],
            &[&[(0, 3), (11, 14)]],
            &[(21, 25, "GPE")],
        );
        let a = build_graph(&c);
        let b = build_graph(&c);
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.edges, b.edges);
    }
}
