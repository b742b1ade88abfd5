//! Connector-based relatedness graph over deduplicated ads.
//!
//! Two ads are connected when they share a connector: a hard-identifier
//! entity value (phone, email, or a configured handle category) or an
//! image hash. A connector shared by k ads yields the k(k-1)/2 pairwise
//! edges (optionally a star around the smallest ad id above a size cap),
//! and every edge records its evidence. Components come from union-find
//! and are named by their smallest member ad id.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AdRecord;
use crate::extract::EntityCategory;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph decode: {0}")]
    Decode(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("component {0} not found")]
    NoSuchComponent(u32),
    #[error("component {0} has {1} nodes, above the DOT export limit {2}")]
    TooLargeForDot(u32, usize, usize),
}

#[derive(Debug, Clone)]
pub struct GraphOptions {
    /// Entity categories whose values act as connectors.
    pub connector_categories: BTreeSet<EntityCategory>,
    pub use_images: bool,
    /// Above this group size a connector contributes a star around the
    /// smallest ad id instead of a clique. 0 disables the cap.
    pub star_cap: usize,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            connector_categories: [
                EntityCategory::PhoneNumber,
                EntityCategory::Email,
                EntityCategory::Onlyfans,
                EntityCategory::Snapchat,
                EntityCategory::Twitter,
            ]
            .into_iter()
            .collect(),
            use_images: true,
            star_cap: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelatednessGraph {
    pub node_count: u32,
    /// Undirected edges keyed (u, v) with u < v, each carrying its
    /// evidence tags (`category:value` or `image:hash`).
    pub edges: BTreeMap<(u32, u32), BTreeSet<String>>,
    /// Component id per ad id; the id is the smallest member ad id.
    pub components: Vec<u32>,
    /// Component id -> sorted member ad ids.
    pub component_index: BTreeMap<u32, Vec<u32>>,
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        // Path compression.
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }
}

/// Builds the relatedness graph from canonical entities and image hashes.
pub fn build_graph(records: &[AdRecord], opts: &GraphOptions) -> RelatednessGraph {
    // Connector value -> sorted set of ad ids carrying it. Keys are the
    // evidence tags, so groups and evidence stay in lockstep.
    let mut groups: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    for rec in records {
        for ent in &rec.entities {
            if opts.connector_categories.contains(&ent.category) {
                let tag = format!("{}:{}", ent.category, ent.value);
                groups.entry(tag).or_default().insert(rec.ad_id);
            }
        }
        if opts.use_images {
            for hash in &rec.image_hashes {
                groups.entry(format!("image:{hash}")).or_default().insert(rec.ad_id);
            }
        }
    }

    let mut uf = UnionFind::new(records.len());
    let mut edges: BTreeMap<(u32, u32), BTreeSet<String>> = BTreeMap::new();
    for (tag, members) in &groups {
        if members.len() < 2 {
            continue;
        }
        let ids: Vec<u32> = members.iter().copied().collect();
        for w in ids.windows(2) {
            uf.union(w[0], w[1]);
        }
        if opts.star_cap > 0 && ids.len() > opts.star_cap {
            let center = ids[0];
            for &v in &ids[1..] {
                edges.entry((center, v)).or_default().insert(tag.clone());
            }
        } else {
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    edges.entry((ids[i], ids[j])).or_default().insert(tag.clone());
                }
            }
        }
    }

    let (components, component_index) = components_from_uf(&mut uf, records.len());
    RelatednessGraph {
        node_count: records.len() as u32,
        edges,
        components,
        component_index,
    }
}

fn components_from_uf(uf: &mut UnionFind, n: usize) -> (Vec<u32>, BTreeMap<u32, Vec<u32>>) {
    // The component id is the smallest member; ascending iteration makes
    // the first member seen per root the minimum.
    let mut root_min: BTreeMap<u32, u32> = BTreeMap::new();
    let mut components = vec![0u32; n];
    for ad in 0..n as u32 {
        let root = uf.find(ad);
        let id = *root_min.entry(root).or_insert(ad);
        components[ad as usize] = id;
    }
    let mut index: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (ad, &comp) in components.iter().enumerate() {
        index.entry(comp).or_default().push(ad as u32);
    }
    (components, index)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ComponentStats {
    pub node_count: u64,
    pub edge_count: u64,
    pub component_count: u64,
    pub size_1: u64,
    pub size_2_10: u64,
    pub size_11_100: u64,
    pub size_101_1000: u64,
    pub size_1000_plus: u64,
    /// Components whose ads carry two or more distinct provenance tags.
    pub mixed_provenance: u64,
}

pub fn component_stats(graph: &RelatednessGraph, records: &[AdRecord]) -> ComponentStats {
    let mut stats = ComponentStats {
        node_count: graph.node_count as u64,
        edge_count: graph.edges.len() as u64,
        component_count: graph.component_index.len() as u64,
        ..ComponentStats::default()
    };
    for members in graph.component_index.values() {
        match members.len() {
            1 => stats.size_1 += 1,
            2..=10 => stats.size_2_10 += 1,
            11..=100 => stats.size_11_100 += 1,
            101..=1000 => stats.size_101_1000 += 1,
            _ => stats.size_1000_plus += 1,
        }
        let mut provs: BTreeSet<&str> = BTreeSet::new();
        for &ad in members {
            for p in &records[ad as usize].provenances {
                provs.insert(p);
            }
        }
        if provs.len() >= 2 {
            stats.mixed_provenance += 1;
        }
    }
    stats
}

pub fn write_components_csv(path: &Path, graph: &RelatednessGraph) -> Result<(), GraphError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ad_id,component_id")?;
    for (ad, comp) in graph.components.iter().enumerate() {
        writeln!(w, "{ad},{comp}")?;
    }
    w.flush()?;
    Ok(())
}

/// DOT export for one small component.
pub fn to_dot(
    graph: &RelatednessGraph,
    component_id: u32,
    max_nodes: usize,
) -> Result<String, GraphError> {
    let members = graph
        .component_index
        .get(&component_id)
        .ok_or(GraphError::NoSuchComponent(component_id))?;
    if members.len() > max_nodes {
        return Err(GraphError::TooLargeForDot(component_id, members.len(), max_nodes));
    }
    let member_set: BTreeSet<u32> = members.iter().copied().collect();
    let mut out = format!("graph component_{component_id} {{\n");
    for &ad in members {
        out.push_str(&format!("  {ad};\n"));
    }
    for ((u, v), evidence) in &graph.edges {
        if member_set.contains(u) {
            let label: Vec<&str> = evidence.iter().map(|s| s.as_str()).collect();
            out.push_str(&format!("  {u} -- {v} [label=\"{}\"];\n", label.join("\\n")));
        } else if member_set.contains(v) {
            // Edges never cross components; u in set iff v in set.
            unreachable!("edge crosses component boundary");
        }
    }
    out.push_str("}\n");
    Ok(out)
}

const MAGIC: &[u8; 4] = b"ADGB";
const VERSION: u32 = 1;

/// Encodes the graph into the documented little-endian binary layout:
/// magic "ADGB", version u32, node_count u32, arc_count u64, pool_len
/// u64, string_count u32, then (node_count+1) u64 row offsets, arc_count
/// arcs of {v: u32, ev_off: u64, ev_len: u32}, pool_len u32 evidence
/// string ids, and the string table as {len: u32, utf-8 bytes} entries.
/// Every undirected edge appears as two arcs with identical evidence.
pub fn encode(graph: &RelatednessGraph) -> Vec<u8> {
    // Deterministic string table: sorted distinct evidence tags.
    let mut strings: BTreeMap<&str, u32> = BTreeMap::new();
    for evidence in graph.edges.values() {
        for tag in evidence {
            let next = strings.len() as u32;
            strings.entry(tag).or_insert(next);
        }
    }
    // BTreeMap insertion above numbered tags in first-seen order of the
    // sorted edge walk; renumber by sorted tag order for a canonical table.
    let ordered: Vec<&str> = strings.keys().copied().collect();
    let ids: BTreeMap<&str, u32> = ordered
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i as u32))
        .collect();

    let mut adjacency: BTreeMap<u32, Vec<(u32, &BTreeSet<String>)>> = BTreeMap::new();
    for ((u, v), evidence) in &graph.edges {
        adjacency.entry(*u).or_default().push((*v, evidence));
        adjacency.entry(*v).or_default().push((*u, evidence));
    }
    for list in adjacency.values_mut() {
        list.sort_by_key(|(v, _)| *v);
    }

    let arc_count: u64 = 2 * graph.edges.len() as u64;
    let mut pool: Vec<u32> = Vec::new();
    let mut arcs: Vec<(u32, u64, u32)> = Vec::with_capacity(arc_count as usize);
    let mut row_ptr: Vec<u64> = Vec::with_capacity(graph.node_count as usize + 1);
    row_ptr.push(0);
    for u in 0..graph.node_count {
        if let Some(list) = adjacency.get(&u) {
            for (v, evidence) in list {
                let off = pool.len() as u64;
                for tag in *evidence {
                    pool.push(ids[tag.as_str()]);
                }
                arcs.push((*v, off, evidence.len() as u32));
            }
        }
        row_ptr.push(arcs.len() as u64);
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&graph.node_count.to_le_bytes());
    out.extend_from_slice(&arc_count.to_le_bytes());
    out.extend_from_slice(&(pool.len() as u64).to_le_bytes());
    out.extend_from_slice(&(ordered.len() as u32).to_le_bytes());
    for p in &row_ptr {
        out.extend_from_slice(&p.to_le_bytes());
    }
    for (v, off, len) in &arcs {
        out.extend_from_slice(&v.to_le_bytes());
        out.extend_from_slice(&off.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
    }
    for id in &pool {
        out.extend_from_slice(&id.to_le_bytes());
    }
    for s in &ordered {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], GraphError> {
        if self.buf.len() - self.pos < n {
            return Err(GraphError::Decode(format!(
                "truncated: need {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, GraphError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, GraphError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Decodes and validates a graph binary. Never panics on arbitrary
/// bytes; structural violations (asymmetric arcs, unsorted neighbors,
/// self-loops, dangling ids) are decode errors. Components are
/// recomputed from the edges.
pub fn decode(bytes: &[u8]) -> Result<RelatednessGraph, GraphError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(GraphError::Decode("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(GraphError::Decode(format!("unsupported version {version}")));
    }
    let node_count = r.u32()?;
    let arc_count = r.u64()?;
    let pool_len = r.u64()?;
    let string_count = r.u32()?;

    // Size sanity before any allocation: every section must fit in the
    // remaining buffer.
    let need = (node_count as u64 + 1)
        .checked_mul(8)
        .and_then(|a| a.checked_add(arc_count.checked_mul(16)?))
        .and_then(|a| a.checked_add(pool_len.checked_mul(4)?))
        .and_then(|a| a.checked_add(string_count as u64 * 4))
        .ok_or_else(|| GraphError::Decode("size overflow".into()))?;
    if need > r.remaining() as u64 {
        return Err(GraphError::Decode(format!(
            "declared sizes need {need} bytes, only {} remain",
            r.remaining()
        )));
    }

    let mut row_ptr = Vec::with_capacity(node_count as usize + 1);
    for _ in 0..=node_count {
        row_ptr.push(r.u64()?);
    }
    if row_ptr[0] != 0 || *row_ptr.last().unwrap() != arc_count {
        return Err(GraphError::Decode("row pointers do not span the arcs".into()));
    }
    for w in row_ptr.windows(2) {
        if w[0] > w[1] {
            return Err(GraphError::Decode("row pointers not monotone".into()));
        }
    }

    let mut arcs = Vec::with_capacity(arc_count as usize);
    for _ in 0..arc_count {
        let v = r.u32()?;
        let off = r.u64()?;
        let len = r.u32()?;
        if v >= node_count {
            return Err(GraphError::Decode(format!("arc target {v} out of range")));
        }
        let end = off
            .checked_add(len as u64)
            .ok_or_else(|| GraphError::Decode("evidence range overflow".into()))?;
        if end > pool_len {
            return Err(GraphError::Decode("evidence range out of pool".into()));
        }
        arcs.push((v, off, len));
    }

    let mut pool = Vec::with_capacity(pool_len as usize);
    for _ in 0..pool_len {
        let id = r.u32()?;
        if id >= string_count {
            return Err(GraphError::Decode(format!("string id {id} out of range")));
        }
        pool.push(id);
    }

    let mut strings = Vec::with_capacity(string_count as usize);
    for _ in 0..string_count {
        let len = r.u32()? as usize;
        let bytes = r.take(len)?;
        let s = std::str::from_utf8(bytes)
            .map_err(|_| GraphError::Decode("string table not utf-8".into()))?;
        strings.push(s.to_string());
    }
    if r.remaining() != 0 {
        return Err(GraphError::Decode(format!("{} trailing bytes", r.remaining())));
    }

    // Rebuild undirected edges, checking symmetry as we go.
    let mut directed: BTreeMap<(u32, u32), BTreeSet<String>> = BTreeMap::new();
    for u in 0..node_count {
        let (lo, hi) = (row_ptr[u as usize] as usize, row_ptr[u as usize + 1] as usize);
        let mut last_v: Option<u32> = None;
        for &(v, off, len) in &arcs[lo..hi] {
            if v == u {
                return Err(GraphError::Decode(format!("self loop at node {u}")));
            }
            if let Some(prev) = last_v {
                if v <= prev {
                    return Err(GraphError::Decode(format!(
                        "neighbors of {u} not strictly increasing"
                    )));
                }
            }
            last_v = Some(v);
            let evidence: BTreeSet<String> = pool[off as usize..(off + len as u64) as usize]
                .iter()
                .map(|&id| strings[id as usize].clone())
                .collect();
            if evidence.is_empty() {
                return Err(GraphError::Decode(format!("edge ({u},{v}) has no evidence")));
            }
            directed.insert((u, v), evidence);
        }
    }
    let mut edges: BTreeMap<(u32, u32), BTreeSet<String>> = BTreeMap::new();
    for (&(u, v), evidence) in &directed {
        if u < v {
            match directed.get(&(v, u)) {
                Some(back) if back == evidence => {
                    edges.insert((u, v), evidence.clone());
                }
                _ => {
                    return Err(GraphError::Decode(format!(
                        "edge ({u},{v}) missing symmetric arc"
                    )))
                }
            }
        } else if !directed.contains_key(&(v, u)) {
            return Err(GraphError::Decode(format!("edge ({u},{v}) missing symmetric arc")));
        }
    }

    let mut uf = UnionFind::new(node_count as usize);
    for &(u, v) in edges.keys() {
        uf.union(u, v);
    }
    let (components, component_index) = components_from_uf(&mut uf, node_count as usize);
    Ok(RelatednessGraph {
        node_count,
        edges,
        components,
        component_index,
    })
}

pub fn write_graph(path: &Path, graph: &RelatednessGraph) -> Result<(), GraphError> {
    std::fs::write(path, encode(graph))?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<RelatednessGraph, GraphError> {
    let bytes = std::fs::read(path)?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{deduplicate, RawAd};
    use crate::extract::{CanonicalEntity, EntitySource};

    fn records_with(entries: Vec<(Vec<(&str, EntityCategory)>, Vec<&str>)>) -> Vec<AdRecord> {
        // entries: per ad, (entity (value, category) list, image hashes)
        let raws: Vec<RawAd> = entries
            .iter()
            .enumerate()
            .map(|(i, _)| RawAd {
                post_id: format!("p{i}"),
                description: format!("ad number {i:04}"),
                title: None,
                location_strings: vec![],
                posting_dates: vec![],
                structured_phones: vec![],
                image_hashes: vec![],
                provenance: if i % 2 == 0 { "feedA".into() } else { "feedB".into() },
            })
            .collect();
        let (mut recs, _) = deduplicate(raws, false);
        for (rec, (ents, images)) in recs.iter_mut().zip(entries) {
            rec.entities = ents
                .into_iter()
                .map(|(v, c)| CanonicalEntity {
                    category: c,
                    value: v.to_string(),
                    source: EntitySource::Metadata,
                })
                .collect();
            rec.image_hashes = images.into_iter().map(String::from).collect();
        }
        recs
    }

    #[test]
    fn shared_connector_makes_clique() {
        use EntityCategory::*;
        let recs = records_with(vec![
            (vec![("+12541234567", PhoneNumber)], vec![]),
            (vec![("+12541234567", PhoneNumber)], vec![]),
            (vec![("+12541234567", PhoneNumber)], vec![]),
            (vec![("+19995550000", PhoneNumber)], vec![]),
        ]);
        let g = build_graph(&recs, &GraphOptions::default());
        // k = 3 -> 3 edges; the lone phone adds none.
        assert_eq!(g.edges.len(), 3);
        assert!(g.edges.contains_key(&(0, 1)));
        assert!(g.edges.contains_key(&(0, 2)));
        assert!(g.edges.contains_key(&(1, 2)));
        let ev = &g.edges[&(0, 1)];
        assert!(ev.contains("phone_number:+12541234567"));
        assert_eq!(g.component_index.len(), 2);
        assert_eq!(g.components[3], 3);
    }

    #[test]
    fn image_and_entity_evidence_merge() {
        use EntityCategory::*;
        let recs = records_with(vec![
            (vec![("+12541234567", PhoneNumber)], vec!["aa11"]),
            (vec![("+12541234567", PhoneNumber)], vec!["aa11"]),
        ]);
        let g = build_graph(&recs, &GraphOptions::default());
        let ev = &g.edges[&(0, 1)];
        assert_eq!(ev.len(), 2);
        assert!(ev.contains("image:aa11"));
        assert!(ev.contains("phone_number:+12541234567"));
    }

    #[test]
    fn excluded_categories_do_not_connect() {
        use EntityCategory::*;
        let recs = records_with(vec![
            (vec![("samegirl", Instagram), ("x", UsernameOther)], vec![]),
            (vec![("samegirl", Instagram), ("x", UsernameOther)], vec![]),
        ]);
        let g = build_graph(&recs, &GraphOptions::default());
        assert!(g.edges.is_empty());
        assert_eq!(g.component_index.len(), 2);
    }

    #[test]
    fn star_cap_limits_edges() {
        use EntityCategory::*;
        let entries: Vec<_> = (0..6)
            .map(|_| (vec![("+12541234567", PhoneNumber)], vec![]))
            .collect();
        let recs = records_with(entries);
        let opts = GraphOptions { star_cap: 4, ..GraphOptions::default() };
        let g = build_graph(&recs, &opts);
        // 6 > cap: star around ad 0 -> 5 edges instead of 15.
        assert_eq!(g.edges.len(), 5);
        for v in 1..6 {
            assert!(g.edges.contains_key(&(0, v)));
        }
        // Connectivity is unchanged.
        assert_eq!(g.component_index.len(), 1);
    }

    #[test]
    fn component_ids_are_smallest_member() {
        use EntityCategory::*;
        let recs = records_with(vec![
            (vec![("a@b.co", Email)], vec![]),
            (vec![], vec!["ff00"]),
            (vec![("a@b.co", Email)], vec![]),
            (vec![], vec!["ff00"]),
        ]);
        let g = build_graph(&recs, &GraphOptions::default());
        assert_eq!(g.components, vec![0, 1, 0, 1]);
        assert_eq!(g.component_index[&0], vec![0, 2]);
        assert_eq!(g.component_index[&1], vec![1, 3]);
    }

    #[test]
    fn stats_buckets_and_mixed_provenance() {
        use EntityCategory::*;
        let recs = records_with(vec![
            (vec![("+12541234567", PhoneNumber)], vec![]), // feedA
            (vec![("+12541234567", PhoneNumber)], vec![]), // feedB -> mixed
            (vec![], vec![]),
        ]);
        let g = build_graph(&recs, &GraphOptions::default());
        let stats = component_stats(&g, &recs);
        assert_eq!(stats.component_count, 2);
        assert_eq!(stats.size_1, 1);
        assert_eq!(stats.size_2_10, 1);
        assert_eq!(stats.mixed_provenance, 1);
        assert_eq!(stats.edge_count, 1);
    }

    #[test]
    fn binary_roundtrip() {
        use EntityCategory::*;
        let recs = records_with(vec![
            (vec![("+12541234567", PhoneNumber), ("a@b.co", Email)], vec!["aa"]),
            (vec![("+12541234567", PhoneNumber)], vec!["aa"]),
            (vec![("a@b.co", Email)], vec![]),
            (vec![], vec![]),
        ]);
        let g = build_graph(&recs, &GraphOptions::default());
        let bytes = encode(&g);
        let back = decode(&bytes).unwrap();
        assert_eq!(back, g);
        // Canonical encoding: encode(decode(x)) == x.
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(decode(b"").is_err());
        assert!(decode(b"NOPE").is_err());
        assert!(decode(b"ADGB\x01\x00\x00\x00").is_err());
        // Huge declared node count with no body must not allocate or panic.
        let mut evil = Vec::new();
        evil.extend_from_slice(b"ADGB");
        evil.extend_from_slice(&1u32.to_le_bytes());
        evil.extend_from_slice(&u32::MAX.to_le_bytes());
        evil.extend_from_slice(&u64::MAX.to_le_bytes());
        evil.extend_from_slice(&u64::MAX.to_le_bytes());
        evil.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode(&evil).is_err());
    }

    #[test]
    fn dot_export_small_component_only() {
        use EntityCategory::*;
        let recs = records_with(vec![
            (vec![("+12541234567", PhoneNumber)], vec![]),
            (vec![("+12541234567", PhoneNumber)], vec![]),
        ]);
        let g = build_graph(&recs, &GraphOptions::default());
        let dot = to_dot(&g, 0, 50).unwrap();
        assert!(dot.contains("graph component_0"));
        assert!(dot.contains("0 -- 1"));
        assert!(to_dot(&g, 0, 1).is_err());
        assert!(to_dot(&g, 99, 50).is_err());
    }
}
