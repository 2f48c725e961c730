//! Cumulative topic networks and their descriptive metrics.
//!
//! Topics that occupy consecutive (non-noise) text chunks are joined by an
//! undirected edge weighted with the cosine similarity of their centroids.
//! One snapshot is kept per chapter; each contains everything seen up to
//! and including that chapter.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{Read, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{cosine_similarity, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::homology::{geodesic_distances, DistanceMatrix};
pub use crate::topics::{ChunkTopic, TopicId};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopicGraph {
    vertices: BTreeSet<TopicId>,
    /// Keyed by `(lower id, higher id)`; value is the cosine weight.
    edges: BTreeMap<(TopicId, TopicId), f64>,
}

fn edge_key(a: TopicId, b: TopicId) -> (TopicId, TopicId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TopicGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: TopicId) {
        self.vertices.insert(v);
    }

    /// Insert an edge; self-loops are rejected and re-inserting a pair keeps
    /// the first weight.
    pub fn add_edge(&mut self, a: TopicId, b: TopicId, weight: f64) -> Result<()> {
        if a == b {
            return Err(Error::Domain(format!("self-loop on topic {a}")));
        }
        if !(-1.0..=1.0).contains(&weight) {
            return Err(Error::Domain(format!("edge weight {weight} outside [-1, 1]")));
        }
        self.vertices.insert(a);
        self.vertices.insert(b);
        self.edges.entry(edge_key(a, b)).or_insert(weight);
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = TopicId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn has_edge(&self, a: TopicId, b: TopicId) -> bool {
        self.edges.contains_key(&edge_key(a, b))
    }

    /// `(u, v, weight, distance)` with `u < v`, distance `1 - weight`.
    pub fn edges(&self) -> impl Iterator<Item = (TopicId, TopicId, f64, f64)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w, 1.0 - w))
    }

    pub fn is_subgraph_of(&self, other: &TopicGraph) -> bool {
        self.vertices.is_subset(&other.vertices) && self.edges.keys().all(|k| other.edges.contains_key(k))
    }

    /// Vertex ids in ascending order; row `i` of derived matrices is `ids[i]`.
    pub fn vertex_ids(&self) -> Vec<TopicId> {
        self.vertices.iter().copied().collect()
    }

    fn index_edges(&self) -> (Vec<TopicId>, Vec<(usize, usize, f64)>) {
        let ids = self.vertex_ids();
        let pos: BTreeMap<TopicId, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let edges = self.edges().map(|(u, v, _, d)| (pos[&u], pos[&v], d)).collect();
        (ids, edges)
    }

    /// Weighted shortest-path distances over edge distances.
    pub fn geodesic_matrix(&self) -> Result<(Vec<TopicId>, DistanceMatrix)> {
        let (ids, edges) = self.index_edges();
        if edges.iter().any(|e| e.2 < 0.0) {
            return Err(Error::Domain("negative edge distance (cosine > 1)".into()));
        }
        Ok((ids.clone(), geodesic_distances(ids.len(), &edges)?))
    }

    fn adjacency(&self) -> (Vec<TopicId>, Vec<Vec<(usize, f64)>>) {
        let (ids, edges) = self.index_edges();
        let mut adj = vec![Vec::new(); ids.len()];
        for (u, v, d) in edges {
            adj[u].push((v, d));
            adj[v].push((u, d));
        }
        (ids, adj)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TopicGraphSeries {
    pub chapters: Vec<usize>,
    pub snapshots: Vec<TopicGraph>,
}

impl TopicGraphSeries {
    pub fn last(&self) -> Option<&TopicGraph> {
        self.snapshots.last()
    }

    pub fn is_cumulative(&self) -> bool {
        self.snapshots.windows(2).all(|w| w[0].is_subgraph_of(&w[1]))
    }
}

/// Build one cumulative snapshot per chapter. Noise chunks are transparent:
/// the chain links the topics on either side of them. An edge crossing a
/// chapter boundary first appears in the later chapter.
pub fn build_series(sequence: &[ChunkTopic], centroids: &EmbeddingMatrix) -> Result<TopicGraphSeries> {
    let mut rows: BTreeMap<TopicId, usize> = BTreeMap::new();
    for (i, &id) in centroids.row_ids().iter().enumerate() {
        rows.insert(id as TopicId, i);
    }
    let centroid = |t: TopicId| {
        rows.get(&t)
            .map(|&i| centroids.row(i))
            .ok_or_else(|| Error::Domain(format!("topic {t} has no centroid")))
    };

    let mut series = TopicGraphSeries::default();
    let mut graph = TopicGraph::new();
    let mut previous: Option<TopicId> = None;
    let mut weights: BTreeMap<(TopicId, TopicId), f64> = BTreeMap::new();
    let mut current_chapter: Option<usize> = None;

    for chunk in sequence {
        if current_chapter.is_some_and(|c| c != chunk.chapter_index) {
            series.chapters.push(current_chapter.expect("checked"));
            series.snapshots.push(graph.clone());
        }
        current_chapter = Some(chunk.chapter_index);
        let Some(t) = chunk.topic else { continue };
        centroid(t)?;
        graph.add_vertex(t);
        if let Some(p) = previous.filter(|&p| p != t) {
            let key = edge_key(p, t);
            let w = match weights.get(&key) {
                Some(&w) => w,
                None => {
                    let w = cosine_similarity(centroid(p)?, centroid(t)?)?;
                    weights.insert(key, w);
                    w
                }
            };
            graph.add_edge(p, t, w)?;
        }
        previous = Some(t);
    }
    if let Some(c) = current_chapter {
        series.chapters.push(c);
        series.snapshots.push(graph);
    }
    if series.chapters.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Structure("chunk sequence is not ordered by chapter".into()));
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    /// Median absolute deviation scaled by 1.4826.
    pub mad: f64,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkMetrics {
    pub n_vertices: usize,
    pub n_edges: usize,
    pub degree: DegreeStats,
    pub weighted_diameter: f64,
    pub unweighted_diameter: usize,
    pub avg_shortest_path: f64,
    pub clustering_coefficient: f64,
    /// `None` when the random baselines have no triangles.
    pub small_worldness: Option<f64>,
    pub lognormal_meanlog: f64,
    pub lognormal_sdlog: f64,
    /// Path metrics were computed on the largest component only.
    pub disconnected: bool,
}

/// Number of Erdos-Renyi G(n, m) baselines behind the small-world index.
pub const SMALL_WORLD_BASELINES: usize = 20;

pub fn network_metrics(graph: &TopicGraph, rng_seed: u64) -> Result<NetworkMetrics> {
    let n = graph.n_vertices();
    if n < 3 {
        return Err(Error::Domain(format!("network metrics need at least 3 vertices (got {n})")));
    }
    let (_, adj) = graph.adjacency();
    let degrees: Vec<usize> = adj.iter().map(Vec::len).collect();
    let degree = degree_stats(&degrees);

    let comps = components(&adj);
    let largest = comps.iter().max_by_key(|c| c.len()).expect("n >= 3");
    let disconnected = comps.len() > 1;

    let (unweighted_diameter, avg_shortest_path) = hop_paths(&adj, largest);
    let weighted_diameter = weighted_diameter(&adj, largest);
    let clustering_coefficient = transitivity(&adj);

    let m = graph.n_edges();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (mut c_rand, mut l_rand) = (0.0, 0.0);
    for _ in 0..SMALL_WORLD_BASELINES {
        let r = erdos_renyi_gnm(n, m, &mut rng);
        c_rand += transitivity(&r);
        let comps = components(&r);
        let big = comps.iter().max_by_key(|c| c.len()).expect("n >= 3");
        l_rand += hop_paths(&r, big).1;
    }
    c_rand /= SMALL_WORLD_BASELINES as f64;
    l_rand /= SMALL_WORLD_BASELINES as f64;
    let small_worldness = (c_rand > 0.0 && avg_shortest_path > 0.0)
        .then(|| (clustering_coefficient / c_rand) / (avg_shortest_path / l_rand));

    let mut logs: Vec<f64> = degrees.iter().filter(|&&d| d >= 1).map(|&d| (d as f64).ln()).collect();
    logs.sort_by(f64::total_cmp);
    let meanlog = logs.iter().sum::<f64>() / logs.len().max(1) as f64;
    let sdlog = (logs.iter().map(|l| (l - meanlog).powi(2)).sum::<f64>() / logs.len().max(1) as f64).sqrt();

    Ok(NetworkMetrics {
        n_vertices: n,
        n_edges: m,
        degree,
        weighted_diameter,
        unweighted_diameter,
        avg_shortest_path,
        clustering_coefficient,
        small_worldness,
        lognormal_meanlog: meanlog,
        lognormal_sdlog: sdlog,
        disconnected,
    })
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn degree_stats(degrees: &[usize]) -> DegreeStats {
    let n = degrees.len() as f64;
    let mut sorted: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let mean = degrees.iter().sum::<usize>() as f64 / n;
    let sd = (sorted.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let med = median(&sorted);
    let mut dev: Vec<f64> = sorted.iter().map(|d| (d - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    DegreeStats {
        mean,
        sd,
        median: med,
        mad: 1.4826 * median(&dev),
        min: *degrees.iter().min().unwrap_or(&0),
        max: *degrees.iter().max().unwrap_or(&0),
    }
}

fn components<E>(adj: &[Vec<(usize, E)>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adj.len()];
    let mut out = Vec::new();
    for s in 0..adj.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut k = 0;
        while k < comp.len() {
            let u = comp[k];
            k += 1;
            for (v, _) in &adj[u] {
                if !seen[*v] {
                    seen[*v] = true;
                    comp.push(*v);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Hop diameter and mean hop distance over ordered pairs of `comp`.
fn hop_paths<E>(adj: &[Vec<(usize, E)>], comp: &[usize]) -> (usize, f64) {
    let mut dist = vec![usize::MAX; adj.len()];
    let (mut diameter, mut total, mut pairs) = (0usize, 0usize, 0usize);
    let mut queue = VecDeque::new();
    for &s in comp {
        for &v in comp {
            dist[v] = usize::MAX;
        }
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for (v, _) in &adj[u] {
                if dist[*v] == usize::MAX {
                    dist[*v] = dist[u] + 1;
                    queue.push_back(*v);
                }
            }
        }
        for &v in comp {
            if v != s {
                diameter = diameter.max(dist[v]);
                total += dist[v];
                pairs += 1;
            }
        }
    }
    (diameter, if pairs == 0 { 0.0 } else { total as f64 / pairs as f64 })
}

fn weighted_diameter(adj: &[Vec<(usize, f64)>], comp: &[usize]) -> f64 {
    let pos: BTreeMap<usize, usize> = comp.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges: Vec<(usize, usize, f64)> = comp
        .iter()
        .flat_map(|&u| adj[u].iter().filter(move |(v, _)| u < *v).map(move |&(v, d)| (u, v, d)))
        .map(|(u, v, d)| (pos[&u], pos[&v], d.max(0.0)))
        .collect();
    geodesic_distances(comp.len(), &edges).map_or(0.0, |dm| dm.max_entry())
}

/// Global clustering: closed triplets over connected triplets.
fn transitivity<E>(adj: &[Vec<(usize, E)>]) -> f64 {
    let sets: Vec<BTreeSet<usize>> = adj.iter().map(|a| a.iter().map(|(v, _)| *v).collect()).collect();
    let mut triangles = 0usize;
    let mut triples = 0usize;
    for (u, nbrs) in sets.iter().enumerate() {
        let d = nbrs.len();
        triples += d * d.saturating_sub(1) / 2;
        for &v in nbrs.iter().filter(|&&v| v > u) {
            triangles += nbrs.iter().filter(|&&w| w > v && sets[v].contains(&w)).count();
        }
    }
    if triples == 0 {
        0.0
    } else {
        3.0 * triangles as f64 / triples as f64
    }
}

fn erdos_renyi_gnm(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<(usize, ())>> {
    let total = n * (n - 1) / 2;
    let mut adj = vec![Vec::new(); n];
    for k in sample(rng, total, m.min(total)).into_vec() {
        // Decode the k-th pair (i > j) in colex order.
        let i = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).floor() as usize;
        let i = if i * (i - 1) / 2 > k { i - 1 } else if (i + 1) * i / 2 <= k { i + 1 } else { i };
        let j = k - i * (i - 1) / 2;
        adj[i].push((j, ()));
        adj[j].push((i, ()));
    }
    adj
}

pub fn write_edge_list<W: Write>(graph: &TopicGraph, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["topic_u", "topic_v", "weight", "distance"])?;
    let mut linked = BTreeSet::new();
    for (u, v, weight, distance) in graph.edges() {
        linked.insert(u);
        linked.insert(v);
        w.write_record([u.to_string(), v.to_string(), weight.to_string(), distance.to_string()])?;
    }
    // Isolated vertices as rows without a partner.
    for v in graph.vertices().filter(|v| !linked.contains(v)) {
        w.write_record([v.to_string(), String::new(), String::new(), String::new()])?;
    }
    w.flush().map_err(|e| Error::io("<edge list>", e))?;
    Ok(())
}

pub fn read_edge_list<R: Read>(input: R) -> Result<TopicGraph> {
    let mut r = csv::Reader::from_reader(input);
    let mut g = TopicGraph::new();
    let bad = |what: &str| Error::Structure(format!("edge list: bad {what}"));
    for rec in r.records() {
        let rec = rec?;
        let u: TopicId = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("topic_u"))?;
        match rec.get(1).filter(|s| !s.is_empty()) {
            None => g.add_vertex(u),
            Some(v) => {
                let v: TopicId = v.parse().map_err(|_| bad("topic_v"))?;
                let w: f64 = rec.get(2).and_then(|s| s.parse().ok()).ok_or_else(|| bad("weight"))?;
                g.add_edge(u, v, w)?;
            }
        }
    }
    Ok(g)
}

/// Cumulative series as `chapter,topic_u,topic_v,weight` rows: a chapter
/// marker row, then each vertex (empty `topic_v`) and edge on first appearance.
pub fn write_series<W: Write>(series: &TopicGraphSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["chapter", "topic_u", "topic_v", "weight"])?;
    let empty = TopicGraph::new();
    let mut prev = &empty;
    for (c, g) in series.chapters.iter().zip(&series.snapshots) {
        let c = c.to_string();
        w.write_record([c.as_str(), "", "", ""])?;
        for v in g.vertices().filter(|v| !prev.vertices.contains(v)) {
            w.write_record([c.clone(), v.to_string(), String::new(), String::new()])?;
        }
        for (u, v, weight, _) in g.edges().filter(|(u, v, _, _)| !prev.has_edge(*u, *v)) {
            w.write_record([c.clone(), u.to_string(), v.to_string(), weight.to_string()])?;
        }
        prev = g;
    }
    w.flush().map_err(|e| Error::io("<series>", e))?;
    Ok(())
}

pub fn read_series<R: Read>(input: R) -> Result<TopicGraphSeries> {
    let mut r = csv::Reader::from_reader(input);
    let mut series = TopicGraphSeries::default();
    let mut g = TopicGraph::new();
    let bad = |what: &str| Error::Structure(format!("series: bad {what}"));
    for rec in r.records() {
        let rec = rec?;
        let chapter: usize = rec.get(0).and_then(|s| s.parse().ok()).ok_or_else(|| bad("chapter"))?;
        match rec.get(1).filter(|s| !s.is_empty()) {
            None => {
                if let Some(&last) = series.chapters.last() {
                    if chapter <= last {
                        return Err(bad("chapter order"));
                    }
                    series.snapshots.push(g.clone());
                }
                series.chapters.push(chapter);
            }
            Some(u) => {
                if series.chapters.last() != Some(&chapter) {
                    return Err(bad("row outside its chapter block"));
                }
                let u: TopicId = u.parse().map_err(|_| bad("topic_u"))?;
                match rec.get(2).filter(|s| !s.is_empty()) {
                    None => g.add_vertex(u),
                    Some(v) => {
                        let v: TopicId = v.parse().map_err(|_| bad("topic_v"))?;
                        let w: f64 = rec.get(3).and_then(|s| s.parse().ok()).ok_or_else(|| bad("weight"))?;
                        g.add_edge(u, v, w)?;
                    }
                }
            }
        }
    }
    if !series.chapters.is_empty() {
        series.snapshots.push(g);
    }
    Ok(series)
}

pub fn export_graph(graph: &TopicGraph, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_edge_list(graph, std::io::BufWriter::new(f))
}

pub fn import_graph(path: &std::path::Path) -> Result<TopicGraph> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_edge_list(std::io::BufReader::new(f))
}
