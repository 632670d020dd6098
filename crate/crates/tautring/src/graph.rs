//! Stable graphs: the combinatorial skeletons of boundary strata.
//!
//! A stable graph records vertices with genera, labeled legs (markings),
//! and edges given as pairs of half-edges.  Everything downstream keys on
//! the canonical form computed here, so canonicalization must be a true
//! normal form: two graphs are isomorphic exactly when their canonical
//! forms are equal, and the automorphism count must match the honest
//! definition (isomorphisms fixing every leg label).

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;
use serde_json::{json, Value};

use crate::rational::factorial;
use crate::{Error, Result};

pub type LegLabel = u32;

/// One failed invariant, reported by [`StableGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("index out of range: {0}")]
    BadIndex(String),
    #[error("half-edge {0} must belong to exactly one edge")]
    HalfEdgePairing(usize),
    #[error("vertex {vertex} is unstable: 2g - 2 + valence = {value}")]
    Stability { vertex: usize, value: i64 },
    #[error("graph is not connected")]
    Disconnected,
    #[error("leg labels must be exactly 1..={expected}: {detail}")]
    LegLabels { expected: u32, detail: String },
}

/// A stable graph.  Half-edges are indexed `0..2E`; `edges[i]` pairs two of
/// them, and `half_edge_vertex[h]` is the vertex carrying half-edge `h`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StableGraph {
    genus: Vec<u32>,
    legs: Vec<(LegLabel, usize)>,
    half_edge_vertex: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

/// A contraction morphism between stable graphs.  The source degenerates the
/// target: `vertex_map` sends source vertices onto target vertices, and
/// `beta_half` injects target half-edges back into the source (the edges that
/// survive contraction).  Legs always map label to same label.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphMorphism {
    pub vertex_map: Vec<usize>,
    pub beta_half: Vec<usize>,
}

impl StableGraph {
    /// Builds a graph from raw parts, checking only structural consistency
    /// (index ranges and the half-edge pairing).  Use [`validate`] for the
    /// full stability invariants.
    ///
    /// [`validate`]: StableGraph::validate
    pub fn new(
        genus: Vec<u32>,
        legs: Vec<(LegLabel, usize)>,
        half_edge_vertex: Vec<usize>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let nv = genus.len();
        let nh = half_edge_vertex.len();
        if nv == 0 {
            return Err(Violation::BadIndex("graph needs at least one vertex".into()).into());
        }
        for &(_, v) in &legs {
            if v >= nv {
                return Err(Violation::BadIndex(format!("leg vertex {v}")).into());
            }
        }
        for &v in &half_edge_vertex {
            if v >= nv {
                return Err(Violation::BadIndex(format!("half-edge vertex {v}")).into());
            }
        }
        let mut seen = vec![0usize; nh];
        for &(a, b) in &edges {
            if a >= nh || b >= nh {
                return Err(Violation::BadIndex(format!("edge half-edges ({a},{b})")).into());
            }
            if a == b {
                return Err(Violation::HalfEdgePairing(a).into());
            }
            seen[a] += 1;
            seen[b] += 1;
        }
        for (h, &c) in seen.iter().enumerate() {
            if c != 1 {
                return Err(Violation::HalfEdgePairing(h).into());
            }
        }
        Ok(StableGraph {
            genus,
            legs,
            half_edge_vertex,
            edges,
        })
    }

    /// The graph of the open stratum: one vertex of genus `g` carrying legs
    /// `1..=n` and no edges.
    pub fn smooth(g: u32, n: u32) -> Self {
        StableGraph {
            genus: vec![g],
            legs: (1..=n).map(|l| (l, 0)).collect(),
            half_edge_vertex: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Convenience constructor: edges are given as vertex pairs (loops
    /// allowed), and edge `i` receives half-edges `2i` (first endpoint) and
    /// `2i + 1` (second endpoint).
    pub fn from_edge_list(
        genus: Vec<u32>,
        legs_at: Vec<Vec<LegLabel>>,
        vertex_pairs: &[(usize, usize)],
    ) -> Result<Self> {
        if legs_at.len() != genus.len() {
            return Err(Violation::BadIndex("legs_at length must match vertex count".into()).into());
        }
        let mut legs = Vec::new();
        for (v, ls) in legs_at.iter().enumerate() {
            for &l in ls {
                legs.push((l, v));
            }
        }
        legs.sort_unstable();
        let mut half_edge_vertex = Vec::new();
        let mut edges = Vec::new();
        for &(u, v) in vertex_pairs {
            let h = half_edge_vertex.len();
            half_edge_vertex.push(u);
            half_edge_vertex.push(v);
            edges.push((h, h + 1));
        }
        StableGraph::new(genus, legs, half_edge_vertex, edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.genus.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_half_edges(&self) -> usize {
        self.half_edge_vertex.len()
    }

    pub fn num_legs(&self) -> u32 {
        self.legs.len() as u32
    }

    pub fn genus_of(&self, v: usize) -> u32 {
        self.genus[v]
    }

    pub fn genera(&self) -> &[u32] {
        &self.genus
    }

    pub fn legs(&self) -> &[(LegLabel, usize)] {
        &self.legs
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn half_edge_vertex(&self, h: usize) -> usize {
        self.half_edge_vertex[h]
    }

    pub fn half_edge_vertices(&self) -> &[usize] {
        &self.half_edge_vertex
    }

    /// First Betti number `E - V + 1` (assumes connectedness).
    pub fn b1(&self) -> i64 {
        self.edges.len() as i64 - self.genus.len() as i64 + 1
    }

    /// Total (arithmetic) genus: sum of vertex genera plus `b1`.
    pub fn total_genus(&self) -> u32 {
        let s: i64 = self.genus.iter().map(|&g| g as i64).sum();
        (s + self.b1()) as u32
    }

    /// Ambient moduli space `(g, n)` of the stratum this graph indexes.
    pub fn ambient(&self) -> (u32, u32) {
        (self.total_genus(), self.num_legs())
    }

    /// Leg labels at `v`, sorted.
    pub fn legs_at(&self, v: usize) -> Vec<LegLabel> {
        let mut out: Vec<LegLabel> = self
            .legs
            .iter()
            .filter(|&&(_, w)| w == v)
            .map(|&(l, _)| l)
            .collect();
        out.sort_unstable();
        out
    }

    /// Half-edge indices at `v`, sorted.
    pub fn half_edges_at(&self, v: usize) -> Vec<usize> {
        (0..self.half_edge_vertex.len())
            .filter(|&h| self.half_edge_vertex[h] == v)
            .collect()
    }

    /// Number of legs plus half-edges at `v`.
    pub fn valence(&self, v: usize) -> u32 {
        let legs = self.legs.iter().filter(|&&(_, w)| w == v).count();
        let halves = self
            .half_edge_vertex
            .iter()
            .filter(|&&w| w == v)
            .count();
        (legs + halves) as u32
    }

    /// Dimension `3g_v - 3 + n_v` of the moduli factor at vertex `v`.
    pub fn vertex_dim(&self, v: usize) -> i64 {
        3 * self.genus[v] as i64 - 3 + self.valence(v) as i64
    }

    /// Dimension of the ambient moduli space.
    pub fn ambient_dim(&self) -> i64 {
        let (g, n) = self.ambient();
        3 * g as i64 - 3 + n as i64
    }

    /// Codimension of the stratum: the number of edges.
    pub fn codim(&self) -> usize {
        self.edges.len()
    }

    /// The vertices joined by edge `e` (equal for a loop).
    pub fn edge_endpoints(&self, e: usize) -> (usize, usize) {
        let (a, b) = self.edges[e];
        (self.half_edge_vertex[a], self.half_edge_vertex[b])
    }

    pub fn is_loop(&self, e: usize) -> bool {
        let (u, v) = self.edge_endpoints(e);
        u == v
    }

    /// The half-edge paired with `h`.
    pub fn partner(&self, h: usize) -> usize {
        for &(a, b) in &self.edges {
            if a == h {
                return b;
            }
            if b == h {
                return a;
            }
        }
        usize::MAX
    }

    /// Edge index containing half-edge `h`.
    pub fn edge_of_half(&self, h: usize) -> usize {
        self.edges
            .iter()
            .position(|&(a, b)| a == h || b == h)
            .expect("half-edge belongs to an edge")
    }

    fn is_connected(&self) -> bool {
        let nv = self.genus.len();
        if nv <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); nv];
        for e in 0..self.edges.len() {
            let (u, v) = self.edge_endpoints(e);
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; nv];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Checks every stable-graph invariant, reporting the first violated one:
    /// half-edge pairing, stability `2g_v - 2 + n_v > 0` at every vertex,
    /// connectedness, and leg labels being exactly `1..=n`.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let mut seen = vec![0usize; self.half_edge_vertex.len()];
        for &(a, b) in &self.edges {
            seen[a] += 1;
            seen[b] += 1;
        }
        for (h, &c) in seen.iter().enumerate() {
            if c != 1 {
                return Err(Violation::HalfEdgePairing(h));
            }
        }
        for v in 0..self.genus.len() {
            let value = 2 * self.genus[v] as i64 - 2 + self.valence(v) as i64;
            if value <= 0 {
                return Err(Violation::Stability { vertex: v, value });
            }
        }
        if !self.is_connected() {
            return Err(Violation::Disconnected);
        }
        let n = self.legs.len() as u32;
        let labels: BTreeSet<LegLabel> = self.legs.iter().map(|&(l, _)| l).collect();
        let expected: BTreeSet<LegLabel> = (1..=n).collect();
        if labels.len() != self.legs.len() || labels != expected {
            return Err(Violation::LegLabels {
                expected: n,
                detail: format!("found {:?}", self.legs.iter().map(|&(l, _)| l).collect::<Vec<_>>()),
            });
        }
        Ok(())
    }

    /// Loop count per vertex and edge multiplicity between vertex pairs.
    fn multiplicities(&self) -> (Vec<usize>, BTreeMap<(usize, usize), usize>) {
        let mut loops = vec![0usize; self.genus.len()];
        let mut mult: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for e in 0..self.edges.len() {
            let (u, v) = self.edge_endpoints(e);
            if u == v {
                loops[u] += 1;
            } else {
                let key = (u.min(v), u.max(v));
                *mult.entry(key).or_insert(0) += 1;
            }
        }
        (loops, mult)
    }

    /// Iteratively refined vertex colors.  The returned ranks are invariant
    /// under relabeling, and the order of color classes is canonical.
    fn refined_colors(&self) -> Vec<usize> {
        let nv = self.genus.len();
        let (loops, mult) = self.multiplicities();
        let mut neighbor: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for (&(u, v), &m) in &mult {
            neighbor[u].push((v, m));
            neighbor[v].push((u, m));
        }
        let init: Vec<(u32, Vec<LegLabel>, usize, usize)> = (0..nv)
            .map(|v| {
                (
                    self.genus[v],
                    self.legs_at(v),
                    loops[v],
                    self.valence(v) as usize,
                )
            })
            .collect();
        let mut rank: Vec<usize> = {
            let mut keys: Vec<_> = init.iter().cloned().collect();
            keys.sort();
            keys.dedup();
            init.iter()
                .map(|k| keys.binary_search(k).unwrap())
                .collect()
        };
        loop {
            let keys: Vec<(usize, Vec<(usize, usize)>)> = (0..nv)
                .map(|v| {
                    let mut nb: Vec<(usize, usize)> =
                        neighbor[v].iter().map(|&(u, m)| (rank[u], m)).collect();
                    nb.sort_unstable();
                    (rank[v], nb)
                })
                .collect();
            let mut sorted = keys.clone();
            sorted.sort();
            sorted.dedup();
            let new_rank: Vec<usize> = keys
                .iter()
                .map(|k| sorted.binary_search(k).unwrap())
                .collect();
            if new_rank == rank {
                return rank;
            }
            rank = new_rank;
        }
    }

    /// Canonical form together with the automorphism count.
    pub fn canonicalize(&self) -> (StableGraph, BigUint) {
        let c = self.canonicalize_full();
        (c.graph, c.aut_order)
    }

    /// Canonical form only.
    pub fn canonical(&self) -> StableGraph {
        self.canonicalize_full().graph
    }

    /// Automorphism count only.
    pub fn aut_order(&self) -> BigUint {
        self.canonicalize_full().aut_order
    }

    pub(crate) fn canonicalize_full(&self) -> Canonicalized {
        let nv = self.genus.len();
        let colors = self.refined_colors();
        let nclasses = colors.iter().copied().max().map_or(0, |m| m + 1);
        let mut classes: Vec<Vec<usize>> = vec![Vec::new(); nclasses];
        for v in 0..nv {
            classes[colors[v]].push(v);
        }

        // Search all orderings that list each color class contiguously in
        // class order; the lexicographically least normal form wins, and the
        // number of orderings achieving it is the vertex automorphism count.
        let mut best: Option<NormalForm> = None;
        let mut best_orderings: Vec<Vec<usize>> = Vec::new();
        let mut achievers = BigUint::from(0u32);
        let per_class: Vec<Vec<Vec<usize>>> = classes
            .iter()
            .map(|c| {
                c.iter()
                    .copied()
                    .permutations(c.len())
                    .collect::<Vec<_>>()
            })
            .collect();
        for combo in per_class.iter().multi_cartesian_product() {
            let ordering: Vec<usize> = combo.into_iter().flatten().copied().collect();
            let nf = self.normal_form(&ordering);
            match &best {
                Some(b) if nf > *b => {}
                Some(b) if nf == *b => {
                    achievers += BigUint::one();
                    if best_orderings.len() < MAX_STORED_VERTEX_AUTS {
                        best_orderings.push(ordering);
                    }
                }
                _ => {
                    best = Some(nf);
                    best_orderings = vec![ordering];
                    achievers = BigUint::one();
                }
            }
        }
        let nf = best.expect("at least one vertex ordering");
        let o0 = best_orderings[0].clone();

        // Position of each old vertex under the winning ordering.
        let mut pos = vec![0usize; nv];
        for (p, &old) in o0.iter().enumerate() {
            pos[old] = p;
        }

        // Vertex automorphisms of the canonical graph, as permutations of
        // canonical positions.
        let vertex_auts_complete = BigUint::from(best_orderings.len()) == achievers;
        let mut vertex_auts: Vec<Vec<usize>> = Vec::new();
        for o in &best_orderings {
            let mut inv = vec![0usize; nv];
            for (p, &old) in o.iter().enumerate() {
                inv[old] = p;
            }
            let perm: Vec<usize> = (0..nv).map(|p| inv[o0[p]]).collect();
            vertex_auts.push(perm);
        }
        vertex_auts.sort();
        vertex_auts.dedup();

        // Rebuild the graph from the normal form, renumbering half-edges so
        // edge i carries 2i and 2i+1.  Record where each old half-edge went.
        let mut edge_records: Vec<(usize, usize, usize, usize, usize)> = Vec::new();
        for (e, &(h1, h2)) in self.edges.iter().enumerate() {
            let (u, v) = (pos[self.half_edge_vertex[h1]], pos[self.half_edge_vertex[h2]]);
            let (a, b, ha, hb) = if u < v || (u == v && h1 < h2) {
                (u, v, h1, h2)
            } else {
                (v, u, h2, h1)
            };
            edge_records.push((a, b, ha, hb, e));
        }
        edge_records.sort();
        let mut half_edge_vertex = Vec::with_capacity(2 * edge_records.len());
        let mut edges = Vec::with_capacity(edge_records.len());
        let mut half_map = vec![0usize; self.half_edge_vertex.len()];
        for (i, &(a, b, ha, hb, _)) in edge_records.iter().enumerate() {
            half_edge_vertex.push(a);
            half_edge_vertex.push(b);
            edges.push((2 * i, 2 * i + 1));
            half_map[ha] = 2 * i;
            half_map[hb] = 2 * i + 1;
        }
        let graph = StableGraph {
            genus: nf.genus,
            legs: nf.legs,
            half_edge_vertex,
            edges,
        };

        // |Aut| = |image in Sym(V)| times the kernel acting on parallel
        // edges: l! * 2^l per loop family and m! per parallel family.
        let (loops, mult) = graph.multiplicities();
        let mut aut_order = achievers;
        for &l in &loops {
            aut_order *= factorial(l as u64);
            aut_order *= BigUint::from(2u32).pow(l as u32);
        }
        for &m in mult.values() {
            aut_order *= factorial(m as u64);
        }

        Canonicalized {
            graph,
            vertex_map: pos,
            half_map,
            aut_order,
            vertex_auts,
            vertex_auts_complete,
        }
    }

    fn normal_form(&self, ordering: &[usize]) -> NormalForm {
        let nv = self.genus.len();
        let mut pos = vec![0usize; nv];
        for (p, &old) in ordering.iter().enumerate() {
            pos[old] = p;
        }
        let genus: Vec<u32> = ordering.iter().map(|&v| self.genus[v]).collect();
        let mut legs: Vec<(LegLabel, usize)> = self
            .legs
            .iter()
            .map(|&(l, v)| (l, pos[v]))
            .collect();
        legs.sort_unstable();
        let mut edges: Vec<(usize, usize)> = (0..self.edges.len())
            .map(|e| {
                let (u, v) = self.edge_endpoints(e);
                let (a, b) = (pos[u], pos[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        NormalForm { genus, legs, edges }
    }

    /// All isomorphisms from `self` onto `other` that fix leg labels,
    /// reported at the half-edge level.  Stops with an error when more than
    /// `cap` isomorphisms exist.
    pub fn isomorphisms_to(&self, other: &StableGraph, cap: usize) -> Result<Vec<Iso>> {
        if self.genus.len() != other.genus.len()
            || self.edges.len() != other.edges.len()
            || self.legs.len() != other.legs.len()
        {
            return Ok(Vec::new());
        }
        let nv = self.genus.len();
        let (loops_a, mult_a) = self.multiplicities();
        let (loops_b, mult_b) = other.multiplicities();
        let legs_a: Vec<Vec<LegLabel>> = (0..nv).map(|v| self.legs_at(v)).collect();
        let legs_b: Vec<Vec<LegLabel>> = (0..nv).map(|v| other.legs_at(v)).collect();

        let mut out = Vec::new();
        let mut vm = vec![usize::MAX; nv];
        let mut used = vec![false; nv];
        self.search_vertex_maps(
            other, 0, &mut vm, &mut used, &loops_a, &loops_b, &mult_a, &mult_b, &legs_a, &legs_b,
            &mut |vm| {
                let isos = self.half_edge_maps(other, vm, cap)?;
                for hm in isos {
                    out.push(Iso {
                        vertex_map: vm.to_vec(),
                        half_map: hm,
                    });
                    if out.len() > cap {
                        return Err(Error::BudgetExceeded {
                            context: "enumerating graph isomorphisms".into(),
                            limit: cap as u64,
                        });
                    }
                }
                Ok(())
            },
        )?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn search_vertex_maps(
        &self,
        other: &StableGraph,
        v: usize,
        vm: &mut Vec<usize>,
        used: &mut Vec<bool>,
        loops_a: &[usize],
        loops_b: &[usize],
        mult_a: &BTreeMap<(usize, usize), usize>,
        mult_b: &BTreeMap<(usize, usize), usize>,
        legs_a: &[Vec<LegLabel>],
        legs_b: &[Vec<LegLabel>],
        emit: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        let nv = self.genus.len();
        if v == nv {
            return emit(vm);
        }
        for w in 0..nv {
            if used[w]
                || self.genus[v] != other.genus[w]
                || loops_a[v] != loops_b[w]
                || legs_a[v] != legs_b[w]
                || self.valence(v) != other.valence(w)
            {
                continue;
            }
            let ok = (0..v).all(|u| {
                let ka = (u.min(v), u.max(v));
                let kb = (vm[u].min(w), vm[u].max(w));
                mult_a.get(&ka).copied().unwrap_or(0) == mult_b.get(&kb).copied().unwrap_or(0)
            });
            if !ok {
                continue;
            }
            vm[v] = w;
            used[w] = true;
            self.search_vertex_maps(
                other, v + 1, vm, used, loops_a, loops_b, mult_a, mult_b, legs_a, legs_b, emit,
            )?;
            used[w] = false;
            vm[v] = usize::MAX;
        }
        Ok(())
    }

    /// All half-edge bijections compatible with a fixed vertex bijection.
    fn half_edge_maps(
        &self,
        other: &StableGraph,
        vm: &[usize],
        cap: usize,
    ) -> Result<Vec<Vec<usize>>> {
        // Group edges by endpoint class on both sides.
        let mut classes_a: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for e in 0..self.edges.len() {
            let (u, v) = self.edge_endpoints(e);
            let key = (vm[u].min(vm[v]), vm[u].max(vm[v]));
            classes_a.entry(key).or_default().push(e);
        }
        let mut classes_b: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for e in 0..other.edges.len() {
            let (u, v) = other.edge_endpoints(e);
            classes_b.entry((u.min(v), u.max(v))).or_default().push(e);
        }
        if classes_a.keys().collect::<Vec<_>>() != classes_b.keys().collect::<Vec<_>>() {
            return Ok(Vec::new());
        }
        for (k, ea) in &classes_a {
            if ea.len() != classes_b[k].len() {
                return Ok(Vec::new());
            }
        }

        let mut maps: Vec<Vec<usize>> = vec![vec![usize::MAX; self.half_edge_vertex.len()]];
        for (key, ea) in &classes_a {
            let eb = &classes_b[key];
            let is_loop = key.0 == key.1;
            let mut next: Vec<Vec<usize>> = Vec::new();
            for assignment in eb.iter().copied().permutations(eb.len()) {
                // For each pairing of parallel edges, orientations: loops can
                // flip, non-loops are pinned by their endpoint vertices.
                let mut orientings: Vec<Vec<(usize, usize, usize, usize)>> = vec![Vec::new()];
                for (idx, &e_src) in ea.iter().enumerate() {
                    let e_dst = assignment[idx];
                    let (a1, a2) = self.edges[e_src];
                    let (b1, b2) = other.edges[e_dst];
                    let mut choices = Vec::new();
                    if is_loop {
                        choices.push((a1, b1, a2, b2));
                        choices.push((a1, b2, a2, b1));
                    } else {
                        // align by vertex images
                        if vm[self.half_edge_vertex[a1]] == other.half_edge_vertex[b1] {
                            choices.push((a1, b1, a2, b2));
                        } else {
                            choices.push((a1, b2, a2, b1));
                        }
                    }
                    let mut grown = Vec::new();
                    for base in &orientings {
                        for &c in &choices {
                            let mut ext = base.clone();
                            ext.push(c);
                            grown.push(ext);
                        }
                    }
                    orientings = grown;
                }
                for orient in orientings {
                    for base in &maps {
                        let mut m = base.clone();
                        for &(a1, b1, a2, b2) in &orient {
                            m[a1] = b1;
                            m[a2] = b2;
                        }
                        next.push(m);
                        if next.len() > cap * 4 + 64 {
                            return Err(Error::BudgetExceeded {
                                context: "enumerating half-edge bijections".into(),
                                limit: cap as u64,
                            });
                        }
                    }
                }
            }
            maps = next;
            if maps.is_empty() {
                return Ok(maps);
            }
        }
        Ok(maps)
    }

    /// All automorphisms (leg-label fixing) at the half-edge level.
    pub fn automorphisms(&self, cap: usize) -> Result<Vec<Iso>> {
        self.isomorphisms_to(self, cap)
    }

    /// Contracts the given edges simultaneously.  Returns the contracted
    /// graph together with the morphism from `self` onto it; the image of its
    /// edge injection is exactly the complement of `subset`.
    pub fn contract_edges(&self, subset: &[usize]) -> Result<(StableGraph, GraphMorphism)> {
        let ne = self.edges.len();
        let mut in_subset = vec![false; ne];
        for &e in subset {
            if e >= ne {
                return Err(Violation::BadIndex(format!("edge {e}")).into());
            }
            if in_subset[e] {
                return Err(Violation::BadIndex(format!("edge {e} listed twice")).into());
            }
            in_subset[e] = true;
        }

        // Union-find over vertices along contracted edges.
        let nv = self.genus.len();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let nxt = parent[c];
                parent[c] = r;
                c = nxt;
            }
            r
        }
        for e in 0..ne {
            if in_subset[e] {
                let (u, v) = self.edge_endpoints(e);
                let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                if ru != rv {
                    parent[ru.max(rv)] = ru.min(rv);
                }
            }
        }
        let mut class_of = vec![usize::MAX; nv];
        let mut reps: Vec<usize> = Vec::new();
        for v in 0..nv {
            let r = find(&mut parent, v);
            if class_of[r] == usize::MAX {
                class_of[r] = reps.len();
                reps.push(r);
            }
            class_of[v] = class_of[r];
        }
        let ncv = reps.len();

        // Genus of a merged vertex: sum of genera plus the first Betti
        // number of the contracted subgraph inside the class.
        let mut genus: Vec<i64> = vec![0; ncv];
        let mut class_size = vec![0i64; ncv];
        for v in 0..nv {
            genus[class_of[v]] += self.genus[v] as i64;
            class_size[class_of[v]] += 1;
        }
        for e in 0..ne {
            if in_subset[e] {
                let (u, _) = self.edge_endpoints(e);
                genus[class_of[u]] += 1;
            }
        }
        for c in 0..ncv {
            genus[c] -= class_size[c] - 1;
        }

        let legs: Vec<(LegLabel, usize)> = self
            .legs
            .iter()
            .map(|&(l, v)| (l, class_of[v]))
            .collect();
        let mut half_edge_vertex = Vec::new();
        let mut edges = Vec::new();
        let mut beta_half = Vec::new();
        for e in 0..ne {
            if !in_subset[e] {
                let (h1, h2) = self.edges[e];
                let base = half_edge_vertex.len();
                half_edge_vertex.push(class_of[self.half_edge_vertex[h1]]);
                half_edge_vertex.push(class_of[self.half_edge_vertex[h2]]);
                edges.push((base, base + 1));
                beta_half.push(h1);
                beta_half.push(h2);
            }
        }
        let contracted = StableGraph::new(
            genus.into_iter().map(|g| g as u32).collect(),
            legs,
            half_edge_vertex,
            edges,
        )?;
        let morphism = GraphMorphism {
            vertex_map: class_of,
            beta_half,
        };
        Ok((contracted, morphism))
    }

    /// All contraction morphisms from `self` onto `target`, deduplicated
    /// exactly (each distinct pair of maps appears once).
    pub fn morphisms_to(&self, target: &StableGraph, cap: usize) -> Result<Vec<GraphMorphism>> {
        let ne = self.edges.len();
        let nt = target.edges.len();
        if nt > ne {
            return Ok(Vec::new());
        }
        let mut out: BTreeSet<GraphMorphism> = BTreeSet::new();
        for keep in (0..ne).combinations(nt) {
            let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
            let contract: Vec<usize> = (0..ne).filter(|e| !keep_set.contains(e)).collect();
            let (contracted, cm) = self.contract_edges(&contract)?;
            if contracted.genus.len() != target.genus.len() {
                continue;
            }
            for iso in contracted.isomorphisms_to(target, cap)? {
                // Compose: self -> contracted -> target.
                let vertex_map: Vec<usize> =
                    cm.vertex_map.iter().map(|&v| iso.vertex_map[v]).collect();
                let mut inv_half = vec![usize::MAX; target.num_half_edges()];
                for (h, &ih) in iso.half_map.iter().enumerate() {
                    inv_half[ih] = h;
                }
                let beta_half: Vec<usize> = (0..target.num_half_edges())
                    .map(|h| cm.beta_half[inv_half[h]])
                    .collect();
                out.insert(GraphMorphism {
                    vertex_map,
                    beta_half,
                });
                if out.len() > cap {
                    return Err(Error::BudgetExceeded {
                        context: "enumerating graph morphisms".into(),
                        limit: cap as u64,
                    });
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// JSON encoding: `{"vertices": [g, ...], "legs": [[label, vertex], ...],
    /// "edges": [[[u, h1], [v, h2]], ...]}` with global half-edge indices.
    pub fn to_json(&self) -> Value {
        json!({
            "vertices": self.genus,
            "legs": self.legs.iter().map(|&(l, v)| json!([l, v])).collect::<Vec<_>>(),
            "edges": self
                .edges
                .iter()
                .map(|&(h1, h2)| {
                    json!([
                        [self.half_edge_vertex[h1], h1],
                        [self.half_edge_vertex[h2], h2]
                    ])
                })
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("graph JSON: {m}"));
        let obj = v.as_object().ok_or_else(|| bad("expected an object"))?;
        let genus: Vec<u32> = obj
            .get("vertices")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("missing vertices"))?
            .iter()
            .map(|g| g.as_u64().map(|g| g as u32))
            .collect::<Option<_>>()
            .ok_or_else(|| bad("vertex genera must be nonnegative integers"))?;
        let legs: Vec<(LegLabel, usize)> = obj
            .get("legs")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("missing legs"))?
            .iter()
            .map(|p| {
                let p = p.as_array()?;
                Some((p.first()?.as_u64()? as LegLabel, p.get(1)?.as_u64()? as usize))
            })
            .collect::<Option<_>>()
            .ok_or_else(|| bad("legs must be [label, vertex] pairs"))?;
        let raw_edges: Vec<((usize, u64), (usize, u64))> = obj
            .get("edges")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("missing edges"))?
            .iter()
            .map(|p| {
                let p = p.as_array()?;
                let a = p.first()?.as_array()?;
                let b = p.get(1)?.as_array()?;
                Some((
                    (a.first()?.as_u64()? as usize, a.get(1)?.as_u64()?),
                    (b.first()?.as_u64()? as usize, b.get(1)?.as_u64()?),
                ))
            })
            .collect::<Option<_>>()
            .ok_or_else(|| bad("edges must pair [vertex, half-edge] entries"))?;
        // Renumber half-edge ids densely, keeping their relative order.
        let mut ids: Vec<u64> = raw_edges
            .iter()
            .flat_map(|&((_, h1), (_, h2))| [h1, h2])
            .collect();
        ids.sort_unstable();
        let before = ids.len();
        ids.dedup();
        if ids.len() != before {
            return Err(bad("half-edge ids must be distinct"));
        }
        let dense = |h: u64| ids.binary_search(&h).unwrap();
        let mut half_edge_vertex = vec![0usize; ids.len()];
        let mut edges = Vec::new();
        for &((u, h1), (v, h2)) in &raw_edges {
            let (d1, d2) = (dense(h1), dense(h2));
            half_edge_vertex[d1] = u;
            half_edge_vertex[d2] = v;
            edges.push((d1, d2));
        }
        StableGraph::new(genus, legs, half_edge_vertex, edges)
    }
}

const MAX_STORED_VERTEX_AUTS: usize = 40320;

/// Result of canonicalization, including the relabeling that was applied and
/// the vertex-level automorphisms of the canonical form.
pub(crate) struct Canonicalized {
    pub graph: StableGraph,
    /// Old vertex index to canonical position.
    #[allow(dead_code)]
    pub vertex_map: Vec<usize>,
    /// Old half-edge index to canonical half-edge index.
    pub half_map: Vec<usize>,
    pub aut_order: BigUint,
    /// Automorphisms of the canonical graph in Sym(V), possibly truncated
    /// when enormous (beyond any decorated use).
    pub vertex_auts: Vec<Vec<usize>>,
    /// Whether `vertex_auts` lists the whole image of Aut in Sym(V).
    pub vertex_auts_complete: bool,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct NormalForm {
    genus: Vec<u32>,
    legs: Vec<(LegLabel, usize)>,
    edges: Vec<(usize, usize)>,
}

/// A graph isomorphism at the half-edge level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Iso {
    pub vertex_map: Vec<usize>,
    pub half_map: Vec<usize>,
}

impl GraphMorphism {
    /// Checks that `self` is a valid contraction morphism from `source` onto
    /// `target`: the vertex map is the edge-contraction quotient, the edge
    /// injection respects incidences, legs match label to label, and genera
    /// add up fiberwise.
    pub fn validate(&self, source: &StableGraph, target: &StableGraph) -> Result<()> {
        let bad = |m: String| Error::Internal(format!("morphism: {m}"));
        if self.vertex_map.len() != source.num_vertices() {
            return Err(bad("vertex map length".into()));
        }
        if self.beta_half.len() != target.num_half_edges() {
            return Err(bad("half-edge map length".into()));
        }
        let mut hit = vec![false; target.num_vertices()];
        for &w in &self.vertex_map {
            if w >= target.num_vertices() {
                return Err(bad(format!("vertex image {w} out of range")));
            }
            hit[w] = true;
        }
        if !hit.iter().all(|&h| h) {
            return Err(bad("vertex map is not surjective".into()));
        }
        let mut seen = BTreeSet::new();
        for (h, &s) in self.beta_half.iter().enumerate() {
            if s >= source.num_half_edges() || !seen.insert(s) {
                return Err(bad(format!("half-edge image of {h} invalid")));
            }
            if self.vertex_map[source.half_edge_vertex(s)] != target.half_edge_vertex(h) {
                return Err(bad(format!("half-edge {h} breaks incidence")));
            }
        }
        for &(h1, h2) in target.edges() {
            let (s1, s2) = (self.beta_half[h1], self.beta_half[h2]);
            let e1 = source.edge_of_half(s1);
            if source.edges()[e1] != (s1, s2) && source.edges()[e1] != (s2, s1) {
                return Err(bad("edge injection breaks the pairing".into()));
            }
        }
        for &(l, v) in source.legs() {
            let tv = target
                .legs()
                .iter()
                .find(|&&(tl, _)| tl == l)
                .map(|&(_, tv)| tv)
                .ok_or_else(|| bad(format!("leg {l} missing in target")))?;
            if self.vertex_map[v] != tv {
                return Err(bad(format!("leg {l} moves across vertices")));
            }
        }
        // Fiberwise genus: contracting the complement of the surviving edges
        // must reproduce the target genera.
        let surviving: BTreeSet<usize> = self
            .beta_half
            .iter()
            .map(|&s| source.edge_of_half(s))
            .collect();
        let contract: Vec<usize> = (0..source.num_edges())
            .filter(|e| !surviving.contains(e))
            .collect();
        let (contracted, cm) = source.contract_edges(&contract)?;
        for v in 0..source.num_vertices() {
            let via = self.vertex_map[v];
            let g_fiber = contracted.genus_of(cm.vertex_map[v]);
            if target.genus_of(via) != g_fiber {
                return Err(bad(format!("genus mismatch over target vertex {via}")));
            }
        }
        Ok(())
    }

    /// Source edges in the image of the edge injection.
    pub fn image_edges(&self, source: &StableGraph) -> BTreeSet<usize> {
        self.beta_half
            .iter()
            .map(|&s| source.edge_of_half(s))
            .collect()
    }
}

/// Enumerates all isomorphism classes of stable graphs of total genus `g`
/// with legs `1..=n` and at most `max_edges` edges, in canonical form,
/// ordered by edge count and then by canonical order.  Uses the shared
/// default budget; see [`enumerate_stable_graphs_with_budget`].
pub fn enumerate_stable_graphs(g: u32, n: u32, max_edges: usize) -> Result<Vec<StableGraph>> {
    enumerate_stable_graphs_with_budget(g, n, max_edges, crate::calculus::default_budget())
}

/// Budgeted enumeration.  The budget bounds both the number of classes
/// retained and (scaled by a constant factor) the raw candidates examined,
/// so hopeless inputs fail fast instead of running away.
pub fn enumerate_stable_graphs_with_budget(
    g: u32,
    n: u32,
    max_edges: usize,
    budget: u64,
) -> Result<Vec<StableGraph>> {
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::Unstable { g, n });
    }
    let overrun = || Error::BudgetExceeded {
        context: format!("enumerating stable graphs of type ({g},{n}) with at most {max_edges} edges"),
        limit: budget,
    };
    let dim = (3 * g as i64 - 3 + n as i64) as usize;
    let max_edges = max_edges.min(dim);
    let raw_cap = budget.saturating_mul(100);
    let mut raw_total: u128 = 0;
    let mut found: BTreeSet<(usize, StableGraph)> = BTreeSet::new();

    for e in 0..=max_edges {
        for v in 1..=e + 1 {
            let b1 = (e + 1 - v) as u32;
            if b1 > g {
                continue;
            }
            let gbudget = g - b1;
            let npairs = v * (v + 1) / 2;
            let ncomps = binom((gbudget as usize + v - 1) as u128, (v - 1) as u128);
            let nlegs = (v as u128).checked_pow(n).unwrap_or(u128::MAX);
            let nmultisets = binom((npairs + e - 1) as u128, e as u128);
            let block = ncomps
                .saturating_mul(nlegs)
                .saturating_mul(nmultisets);
            raw_total = raw_total.saturating_add(block);
            if raw_total > raw_cap as u128 {
                return Err(overrun());
            }

            let comps = compositions(gbudget, v);
            let pairs: Vec<(usize, usize)> = (0..v)
                .flat_map(|i| (i..v).map(move |j| (i, j)))
                .collect();
            let leg_assignments: Vec<Vec<usize>> = if n == 0 {
                vec![Vec::new()]
            } else {
                (0..n).map(|_| 0..v).multi_cartesian_product().collect()
            };
            for comp in &comps {
                for legs_assign in &leg_assignments {
                    for multiset in (0..pairs.len()).combinations_with_replacement(e) {
                        // Cheap stability and connectivity screens first.
                        let mut val = vec![0u32; v];
                        for &vv in legs_assign {
                            val[vv] += 1;
                        }
                        let mut vertex_pairs = Vec::with_capacity(e);
                        for &p in &multiset {
                            let (a, b) = pairs[p];
                            val[a] += 1;
                            val[b] += 1;
                            vertex_pairs.push((a, b));
                        }
                        if (0..v).any(|i| 2 * comp[i] as i64 - 2 + val[i] as i64 <= 0) {
                            continue;
                        }
                        if !connected(v, &vertex_pairs) {
                            continue;
                        }
                        let mut legs_at: Vec<Vec<LegLabel>> = vec![Vec::new(); v];
                        for (i, &vv) in legs_assign.iter().enumerate() {
                            legs_at[vv].push((i + 1) as LegLabel);
                        }
                        let graph =
                            StableGraph::from_edge_list(comp.clone(), legs_at, &vertex_pairs)?;
                        let canon = graph.canonical();
                        found.insert((e, canon));
                        if found.len() as u64 > budget {
                            return Err(overrun());
                        }
                    }
                }
            }
        }
    }
    Ok(found.into_iter().map(|(_, g)| g).collect())
}

fn binom(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; parts];
    fn rec(total: u32, idx: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if idx == cur.len() - 1 {
            cur[idx] = total;
            out.push(cur.clone());
            return;
        }
        for x in 0..=total {
            cur[idx] = x;
            rec(total - x, idx + 1, cur, out);
        }
    }
    rec(total, 0, &mut cur, &mut out);
    out
}

fn connected(v: usize, vertex_pairs: &[(usize, usize)]) -> bool {
    if v <= 1 {
        return true;
    }
    let mut parent: Vec<usize> = (0..v).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        r
    }
    for &(a, b) in vertex_pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let r0 = find(&mut parent, 0);
    (0..v).all(|x| find(&mut parent, x) == r0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn loop_graph_11() -> StableGraph {
        StableGraph::from_edge_list(vec![0], vec![vec![1]], &[(0, 0)]).unwrap()
    }

    #[test]
    fn validate_reports_first_violation() {
        // Unpaired half-edge.
        let g = StableGraph {
            genus: vec![1],
            legs: vec![(1, 0)],
            half_edge_vertex: vec![0, 0, 0],
            edges: vec![(0, 1)],
        };
        assert!(matches!(g.validate(), Err(Violation::HalfEdgePairing(2))));

        // Unstable vertex: genus 0 with two legs.
        let g = StableGraph::from_edge_list(vec![0], vec![vec![1, 2]], &[]).unwrap();
        assert!(matches!(
            g.validate(),
            Err(Violation::Stability { vertex: 0, value: 0 })
        ));

        // Disconnected.
        let g = StableGraph::from_edge_list(vec![1, 1], vec![vec![1], vec![2]], &[]).unwrap();
        assert!(matches!(g.validate(), Err(Violation::Disconnected)));

        // Bad leg labels.
        let g = StableGraph::from_edge_list(vec![2], vec![vec![3]], &[]).unwrap();
        assert!(matches!(g.validate(), Err(Violation::LegLabels { .. })));

        // A good graph.
        assert!(loop_graph_11().validate().is_ok());
    }

    #[test]
    fn ambient_and_dims() {
        let g = loop_graph_11();
        assert_eq!(g.ambient(), (1, 1));
        assert_eq!(g.ambient_dim(), 1);
        assert_eq!(g.vertex_dim(0), 0);
        assert_eq!(g.b1(), 1);

        let smooth = StableGraph::smooth(2, 3);
        assert_eq!(smooth.ambient(), (2, 3));
        assert_eq!(smooth.ambient_dim(), 6);
    }

    #[test]
    fn automorphism_counts_match_known_graphs() {
        // Loop on one genus-0 vertex with a leg: swap the two half-edges.
        assert_eq!(loop_graph_11().aut_order(), BigUint::from(2u32));

        // Theta graph: two genus-0 vertices joined by three edges, no legs.
        let theta =
            StableGraph::from_edge_list(vec![0, 0], vec![vec![], vec![]], &[(0, 1), (0, 1), (0, 1)])
                .unwrap();
        assert_eq!(theta.ambient(), (2, 0));
        assert_eq!(theta.aut_order(), BigUint::from(12u32));

        // Dumbbell: loop - bridge - loop, all genus 0.
        let dumbbell = StableGraph::from_edge_list(
            vec![0, 0],
            vec![vec![], vec![]],
            &[(0, 0), (0, 1), (1, 1)],
        )
        .unwrap();
        assert_eq!(dumbbell.ambient(), (2, 0));
        assert_eq!(dumbbell.aut_order(), BigUint::from(8u32));

        // One genus-2 vertex carrying ten loops: kernel only, 2^10 * 10!.
        let many = StableGraph::from_edge_list(vec![2], vec![vec![]], &vec![(0, 0); 10]).unwrap();
        assert_eq!(many.ambient(), (12, 0));
        let expected = BigUint::from(1024u32) * factorial(10);
        assert_eq!(many.aut_order(), expected);

        // Banana with split legs: two vertices, two parallel edges, legs 1|2.
        let banana = StableGraph::from_edge_list(
            vec![0, 0],
            vec![vec![1], vec![2]],
            &[(0, 1), (0, 1)],
        )
        .unwrap();
        assert_eq!(banana.aut_order(), BigUint::from(2u32));
    }

    #[test]
    fn half_edge_automorphisms_enumerate_fully() {
        let theta =
            StableGraph::from_edge_list(vec![0, 0], vec![vec![], vec![]], &[(0, 1), (0, 1), (0, 1)])
                .unwrap();
        let auts = theta.automorphisms(100).unwrap();
        assert_eq!(auts.len(), 12);
        // Each automorphism preserves the edge pairing.
        for a in &auts {
            for &(h1, h2) in theta.edges() {
                let (m1, m2) = (a.half_map[h1], a.half_map[h2]);
                assert!(theta
                    .edges()
                    .iter()
                    .any(|&(b1, b2)| (b1, b2) == (m1, m2) || (b1, b2) == (m2, m1)));
            }
        }
        let loopg = loop_graph_11();
        assert_eq!(loopg.automorphisms(10).unwrap().len(), 2);
    }

    #[test]
    fn canonical_form_is_idempotent_and_relabel_invariant() {
        let mut rng = StdRng::seed_from_u64(940217);
        let pool: Vec<StableGraph> = [
            enumerate_stable_graphs(1, 2, 2).unwrap(),
            enumerate_stable_graphs(0, 5, 2).unwrap(),
            enumerate_stable_graphs(2, 0, 3).unwrap(),
        ]
        .concat();
        assert!(!pool.is_empty());
        for _ in 0..1000 {
            let g = &pool[rng.random_range(0..pool.len())];
            let (canon, aut) = g.canonicalize();
            // Idempotent.
            let (again, aut2) = canon.canonicalize();
            assert_eq!(canon, again);
            assert_eq!(aut, aut2);
            // Scramble vertex and half-edge order, re-canonicalize.
            let nv = g.num_vertices();
            let mut perm: Vec<usize> = (0..nv).collect();
            for i in (1..nv).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let mut edges: Vec<(usize, usize)> = g
                .edges()
                .iter()
                .map(|&(h1, h2)| {
                    if rng.random_bool(0.5) {
                        (h1, h2)
                    } else {
                        (h2, h1)
                    }
                })
                .collect();
            for i in (1..edges.len()).rev() {
                let j = rng.random_range(0..=i);
                edges.swap(i, j);
            }
            let vertex_pairs: Vec<(usize, usize)> = edges
                .iter()
                .map(|&(h1, h2)| (perm[g.half_edge_vertex(h1)], perm[g.half_edge_vertex(h2)]))
                .collect();
            let mut legs_at: Vec<Vec<LegLabel>> = vec![Vec::new(); nv];
            for &(l, v) in g.legs() {
                legs_at[perm[v]].push(l);
            }
            let mut genus = vec![0u32; nv];
            for v in 0..nv {
                genus[perm[v]] = g.genus_of(v);
            }
            let scrambled =
                StableGraph::from_edge_list(genus, legs_at, &vertex_pairs).unwrap();
            let (canon2, aut3) = scrambled.canonicalize();
            assert_eq!(canon, canon2);
            assert_eq!(aut, aut3);
        }
    }

    #[test]
    fn enumeration_matches_frozen_counts() {
        assert_eq!(enumerate_stable_graphs(0, 3, 5).unwrap().len(), 1);
        assert_eq!(enumerate_stable_graphs(0, 4, 1).unwrap().len(), 4);
        assert_eq!(enumerate_stable_graphs(1, 1, 1).unwrap().len(), 2);
        assert_eq!(enumerate_stable_graphs(1, 2, 2).unwrap().len(), 5);
        // All strata of the five-pointed genus-zero space: the smooth one,
        // ten boundary divisors, fifteen boundary points.
        assert_eq!(enumerate_stable_graphs(0, 5, 2).unwrap().len(), 26);
    }

    #[test]
    fn enumeration_is_ordered_and_valid() {
        let gs = enumerate_stable_graphs(1, 2, 2).unwrap();
        let mut last_edges = 0;
        for g in &gs {
            assert!(g.validate().is_ok());
            assert_eq!(g.ambient(), (1, 2));
            assert!(g.num_edges() >= last_edges);
            last_edges = g.num_edges();
            assert_eq!(&g.canonical(), g);
        }
    }

    #[test]
    fn enumeration_budget_bails_fast() {
        let err = enumerate_stable_graphs_with_budget(2, 20, 23, 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    /// Independent oracle: enumerate labeled graphs directly and deduplicate
    /// by exhaustive isomorphism search, with no canonical forms involved.
    fn brute_force_count(g: u32, n: u32, max_edges: usize) -> usize {
        let mut reps: Vec<StableGraph> = Vec::new();
        for e in 0..=max_edges {
            for v in 1..=e + 1 {
                let b1 = (e + 1 - v) as i64;
                if b1 < 0 || b1 > g as i64 {
                    continue;
                }
                let gbudget = g - b1 as u32;
                let pairs: Vec<(usize, usize)> = (0..v)
                    .flat_map(|i| (i..v).map(move |j| (i, j)))
                    .collect();
                for comp in compositions(gbudget, v) {
                    let leg_assignments: Vec<Vec<usize>> = if n == 0 {
                        vec![Vec::new()]
                    } else {
                        (0..n).map(|_| 0..v).multi_cartesian_product().collect()
                    };
                    for legs_assign in leg_assignments {
                        for multiset in (0..pairs.len()).combinations_with_replacement(e) {
                            let vertex_pairs: Vec<(usize, usize)> =
                                multiset.iter().map(|&p| pairs[p]).collect();
                            if !connected(v, &vertex_pairs) {
                                continue;
                            }
                            let mut legs_at: Vec<Vec<LegLabel>> = vec![Vec::new(); v];
                            for (i, &vv) in legs_assign.iter().enumerate() {
                                legs_at[vv].push((i + 1) as LegLabel);
                            }
                            let graph = StableGraph::from_edge_list(
                                comp.clone(),
                                legs_at,
                                &vertex_pairs,
                            )
                            .unwrap();
                            if graph.validate().is_err() {
                                continue;
                            }
                            if !reps
                                .iter()
                                .any(|r| !r.isomorphisms_to(&graph, 1_000_000).unwrap().is_empty())
                            {
                                reps.push(graph);
                            }
                        }
                    }
                }
            }
        }
        reps.len()
    }

    #[test]
    fn enumeration_agrees_with_brute_force_oracle() {
        for (g, n, e) in [(0, 4, 1), (1, 1, 1), (0, 5, 2), (1, 2, 2)] {
            assert_eq!(
                enumerate_stable_graphs(g, n, e).unwrap().len(),
                brute_force_count(g, n, e),
                "mismatch at ({g},{n}) with {e} edges"
            );
        }
    }

    #[test]
    fn contraction_merges_and_adds_genus() {
        // Contract the bridge of a two-vertex graph.
        let two = StableGraph::from_edge_list(
            vec![1, 1],
            vec![vec![1], vec![2]],
            &[(0, 1)],
        )
        .unwrap();
        let (c, m) = two.contract_edges(&[0]).unwrap();
        assert_eq!(c.num_vertices(), 1);
        assert_eq!(c.genus_of(0), 2);
        assert_eq!(c.num_edges(), 0);
        assert_eq!(m.vertex_map, vec![0, 0]);

        // Contract a loop: genus goes up by one.
        let (c, m) = loop_graph_11().contract_edges(&[0]).unwrap();
        assert_eq!(c.num_vertices(), 1);
        assert_eq!(c.genus_of(0), 1);
        m.validate(&loop_graph_11(), &c).unwrap();

        // Contract one banana edge: the other becomes a loop.
        let banana = StableGraph::from_edge_list(
            vec![0, 0],
            vec![vec![1], vec![2]],
            &[(0, 1), (0, 1)],
        )
        .unwrap();
        let (c, m) = banana.contract_edges(&[0]).unwrap();
        assert_eq!(c.num_vertices(), 1);
        assert_eq!(c.genus_of(0), 0);
        assert_eq!(c.num_edges(), 1);
        assert!(c.is_loop(0));
        m.validate(&banana, &c).unwrap();
        assert_eq!(c.ambient(), banana.ambient());

        // Simultaneous contraction of everything.
        let (c, m) = banana.contract_edges(&[0, 1]).unwrap();
        assert_eq!(c.num_vertices(), 1);
        assert_eq!(c.genus_of(0), 1);
        m.validate(&banana, &c).unwrap();
    }

    #[test]
    fn morphisms_compose_contraction_with_isomorphism() {
        let banana = StableGraph::from_edge_list(
            vec![0, 0],
            vec![vec![1], vec![2]],
            &[(0, 1), (0, 1)],
        )
        .unwrap();
        let loopg = loop_graph_11();
        // (1,1)-loop is not the target ambient; build the right target:
        // contract one edge of the banana to get the (1,2) loop graph.
        let (target, _) = banana.contract_edges(&[0]).unwrap();
        let target = target.canonical();
        let ms = banana.morphisms_to(&target, 100).unwrap();
        // Either surviving edge, two half-edge orientations each; all four
        // maps are distinct morphisms.
        assert_eq!(ms.len(), 4);
        for m in &ms {
            m.validate(&banana, &target).unwrap();
            assert_eq!(m.image_edges(&banana).len(), 1);
        }
        // No morphisms to a graph of the wrong ambient type.
        assert!(banana.morphisms_to(&loopg, 100).unwrap().is_empty());
        // Identity-type morphisms: onto itself, through both automorphisms
        // of each parallel class.
        let selfs = banana.morphisms_to(&banana.canonical(), 100).unwrap();
        assert_eq!(selfs.len(), 2);
    }

    #[test]
    fn json_round_trip() {
        let pool = [
            StableGraph::smooth(2, 3),
            loop_graph_11(),
            StableGraph::from_edge_list(
                vec![0, 1],
                vec![vec![1, 2], vec![]],
                &[(0, 1), (0, 0)],
            )
            .unwrap(),
        ];
        for g in &pool {
            let v = g.to_json();
            let back = StableGraph::from_json(&v).unwrap();
            assert_eq!(&back, g);
            let text = serde_json::to_string(&v).unwrap();
            let parsed: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(StableGraph::from_json(&parsed).unwrap(), *g);
        }
        assert!(StableGraph::from_json(&json!({"vertices": [0]})).is_err());
    }
}
