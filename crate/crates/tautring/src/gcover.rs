//! Admissible double covers and the pullback of Hurwitz loci.
//!
//! The target of interest is a single vertex with `k` self-glued loops, the
//! smallest substrate on which a bielliptic locus can be pulled back to a
//! boundary stratum.  A cover is recorded as a stable graph together with an
//! involution of its vertices, half-edges, and legs; a `GenericStructure`
//! adds a contraction onto the marked target whose edge injection, together
//! with its involution orbit, reaches every source edge.  Each structure
//! contributes an excess class (a product of psi sums over the image edges
//! dropped from a set of orbit representatives) and is classified as
//! tautological for a structural reason, supported on deeper boundary, or a
//! positive multiple of the bielliptic class itself.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::graph::{GraphMorphism, LegLabel, StableGraph};
use crate::rational::{factorial, q_from_biguint, q_to_string, qi, Q};
use crate::stratum::{make_stratum, Decoration, TautClass};
use crate::{Error, Result};

/// Cap on isomorphism enumeration while canonicalizing structures.  The
/// graphs seen here have tiny automorphism groups; the cap only guards
/// against malformed input.
const KEY_ISO_CAP: usize = 1_000_000;

/// Branch data of a double cover: one entry per marked orbit, `1` for a
/// branch point (a single fixed leg upstairs) and `0` for a free orbit (a
/// pair of exchanged legs).  Leg labels are assigned by scanning entries
/// left to right, a `1` taking the next label and a `0` the next two.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonodromyData {
    entries: Vec<u8>,
    source_genus: u32,
    target_genus: u32,
}

impl MonodromyData {
    pub fn new(source_genus: u32, entries: Vec<u8>) -> Result<Self> {
        if let Some(&e) = entries.iter().find(|&&e| e > 1) {
            return Err(Error::InvalidMonodromy(format!(
                "entries must be 0 or 1, got {e}"
            )));
        }
        let ones = entries.iter().filter(|&&e| e == 1).count() as i64;
        let t = 2 * source_genus as i64 + 2 - ones;
        if t < 0 || t % 4 != 0 {
            return Err(Error::InvalidMonodromy(format!(
                "a genus {source_genus} double cover cannot have {ones} branch points"
            )));
        }
        Ok(MonodromyData {
            entries,
            source_genus,
            target_genus: (t / 4) as u32,
        })
    }

    /// Branch data of a bielliptic cover of genus `g`: `2g - 2` branch
    /// points, quotient genus one.
    pub fn bielliptic(g: u32) -> Result<Self> {
        if g == 0 {
            return Err(Error::InvalidMonodromy(
                "a genus 0 curve admits no bielliptic involution".into(),
            ));
        }
        MonodromyData::new(g, vec![1; 2 * g as usize - 2])
    }

    /// Branch data of a hyperelliptic cover of genus `g`: `2g + 2` branch
    /// points, quotient genus zero.
    pub fn hyperelliptic(g: u32) -> Result<Self> {
        MonodromyData::new(g, vec![1; 2 * g as usize + 2])
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    pub fn source_genus(&self) -> u32 {
        self.source_genus
    }

    /// Genus of the quotient curve.
    pub fn target_genus(&self) -> u32 {
        self.target_genus
    }

    pub fn num_branch_points(&self) -> usize {
        self.entries.iter().filter(|&&e| e == 1).count()
    }

    /// Total number of marked points upstairs.
    pub fn num_marked_points(&self) -> u32 {
        self.entries.iter().map(|&e| if e == 1 { 1 } else { 2 }).sum()
    }

    /// Labels of the legs fixed by the involution, in increasing order.
    pub fn fixed_legs(&self) -> Vec<LegLabel> {
        let mut next = 1;
        let mut out = Vec::new();
        for &e in &self.entries {
            if e == 1 {
                out.push(next);
                next += 1;
            } else {
                next += 2;
            }
        }
        out
    }

    /// Label pairs exchanged by the involution, in increasing order.
    pub fn switched_leg_pairs(&self) -> Vec<(LegLabel, LegLabel)> {
        let mut next = 1;
        let mut out = Vec::new();
        for &e in &self.entries {
            if e == 1 {
                next += 1;
            } else {
                out.push((next, next + 1));
                next += 2;
            }
        }
        out
    }
}

/// A stable graph with an admissible involution: an automorphism of order
/// at most two that never exchanges the two halves of a single edge (such
/// an exchange would fold the edge onto itself, which no double cover of
/// nodal curves does).  Legs are either fixed or exchanged in recorded
/// pairs; a fixed leg must sit at a fixed vertex.
#[derive(Clone, Debug)]
pub struct AdmissibleGGraph {
    graph: StableGraph,
    vertex_action: Vec<usize>,
    half_action: Vec<usize>,
    leg_pairs: Vec<(LegLabel, LegLabel)>,
}

impl AdmissibleGGraph {
    pub fn new(
        graph: StableGraph,
        vertex_action: Vec<usize>,
        half_action: Vec<usize>,
        switched_legs: &[(LegLabel, LegLabel)],
    ) -> Result<Self> {
        graph.validate()?;
        let nv = graph.num_vertices();
        let nh = graph.num_half_edges();
        if vertex_action.len() != nv || half_action.len() != nh {
            return Err(Error::InvalidInput(
                "involution data must cover every vertex and half-edge".into(),
            ));
        }
        if vertex_action.iter().any(|&v| v >= nv) || half_action.iter().any(|&h| h >= nh) {
            return Err(Error::InvalidInput("involution index out of range".into()));
        }
        if (0..nv).any(|v| vertex_action[vertex_action[v]] != v) {
            return Err(Error::InvalidInput(
                "the vertex action is not an involution".into(),
            ));
        }
        if (0..nh).any(|h| half_action[half_action[h]] != h) {
            return Err(Error::InvalidInput(
                "the half-edge action is not an involution".into(),
            ));
        }
        if (0..nv).any(|v| graph.genus_of(vertex_action[v]) != graph.genus_of(v)) {
            return Err(Error::InvalidInput(
                "the involution must preserve vertex genera".into(),
            ));
        }
        for h in 0..nh {
            if graph.half_edge_vertex(half_action[h])
                != vertex_action[graph.half_edge_vertex(h)]
            {
                return Err(Error::InvalidInput(
                    "the involution must respect half-edge incidence".into(),
                ));
            }
            let p = graph.partner(h);
            if half_action[p] != graph.partner(half_action[h]) {
                return Err(Error::InvalidInput(
                    "the involution must carry edges to edges".into(),
                ));
            }
            if half_action[h] == p {
                return Err(Error::InvalidInput(
                    "the involution exchanges the two halves of an edge, which is not admissible"
                        .into(),
                ));
            }
        }
        let leg_vertex: BTreeMap<LegLabel, usize> = graph.legs().iter().copied().collect();
        let mut seen: BTreeSet<LegLabel> = BTreeSet::new();
        let mut leg_pairs = Vec::new();
        for &(a, b) in switched_legs {
            if a == b {
                return Err(Error::InvalidInput(
                    "a switched pair must name two distinct legs".into(),
                ));
            }
            let (&va, &vb) = match (leg_vertex.get(&a), leg_vertex.get(&b)) {
                (Some(x), Some(y)) => (x, y),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "switched pair ({a}, {b}) names a missing leg"
                    )))
                }
            };
            if !seen.insert(a) || !seen.insert(b) {
                return Err(Error::InvalidInput(
                    "a leg appears in more than one switched pair".into(),
                ));
            }
            if vb != vertex_action[va] {
                return Err(Error::InvalidInput(format!(
                    "legs {a} and {b} are not exchanged by the vertex action"
                )));
            }
            leg_pairs.push((a.min(b), a.max(b)));
        }
        leg_pairs.sort_unstable();
        for &(l, v) in graph.legs() {
            if !seen.contains(&l) && vertex_action[v] != v {
                return Err(Error::InvalidInput(format!(
                    "fixed leg {l} sits at a vertex moved by the involution"
                )));
            }
        }
        Ok(AdmissibleGGraph {
            graph,
            vertex_action,
            half_action,
            leg_pairs,
        })
    }

    pub fn graph(&self) -> &StableGraph {
        &self.graph
    }

    pub fn vertex_action(&self) -> &[usize] {
        &self.vertex_action
    }

    pub fn half_action(&self) -> &[usize] {
        &self.half_action
    }

    pub fn switched_legs(&self) -> &[(LegLabel, LegLabel)] {
        &self.leg_pairs
    }

    /// Image of edge `e` under the involution.
    pub fn edge_action(&self, e: usize) -> usize {
        let (h, _) = self.graph.edges()[e];
        self.graph.edge_of_half(self.half_action[h])
    }

    fn is_switched_leg(&self, l: LegLabel) -> bool {
        self.leg_pairs.iter().any(|&(a, b)| a == l || b == l)
    }

    fn fixed_leg_count_at(&self, v: usize) -> usize {
        self.graph
            .legs()
            .iter()
            .filter(|&&(l, w)| w == v && !self.is_switched_leg(l))
            .count()
    }

    fn fixed_half_count_at(&self, v: usize) -> usize {
        (0..self.graph.num_half_edges())
            .filter(|&h| self.graph.half_edge_vertex(h) == v && self.half_action[h] == h)
            .count()
    }

    fn num_fixed_legs(&self) -> usize {
        self.graph.num_legs() as usize - 2 * self.leg_pairs.len()
    }
}

/// Outcome of the local-global branch point count on a cover.
#[derive(Clone, Debug)]
pub struct RhReport {
    violations: Vec<String>,
}

impl RhReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[String] {
        &self.violations
    }
}

/// Checks the numerology a double cover must satisfy: globally, `2g + 2`
/// minus the number of branch points is four times the quotient genus; at
/// each fixed vertex the same count holds with the fixed legs and fixed
/// half-edges of that vertex; and the orbit data must reproduce the
/// quotient genus.  Violations are reported, not raised.
pub fn riemann_hurwitz_check(cover: &AdmissibleGGraph) -> RhReport {
    let g = cover.graph();
    let mut violations = Vec::new();
    let total = g.total_genus() as i64;
    let ones = cover.num_fixed_legs() as i64;
    let t = 2 * total + 2 - ones;
    let expected = if t < 0 || t % 4 != 0 {
        violations.push(format!(
            "a genus {total} double cover cannot have {ones} branch points"
        ));
        None
    } else {
        Some(t / 4)
    };
    let mut orbit_h = 0i64;
    let mut local_ok = true;
    for v in 0..g.num_vertices() {
        if cover.vertex_action()[v] == v {
            let r = cover.fixed_leg_count_at(v) as i64 + cover.fixed_half_count_at(v) as i64;
            let tv = 2 * g.genus_of(v) as i64 + 2 - r;
            if tv < 0 || tv % 4 != 0 {
                violations.push(format!(
                    "vertex {v} of genus {} carries {r} fixed points, which no involution allows",
                    g.genus_of(v)
                ));
                local_ok = false;
            } else {
                orbit_h += tv / 4;
            }
        } else if cover.vertex_action()[v] > v {
            orbit_h += g.genus_of(v) as i64;
        }
    }
    if let (Some(h), true) = (expected, local_ok) {
        let quotient = orbit_h + quotient_betti(cover);
        if quotient != h {
            violations.push(format!(
                "the quotient graph has genus {quotient} but the branch data forces {h}"
            ));
        }
    }
    RhReport { violations }
}

/// First Betti number of the quotient graph.
fn quotient_betti(cover: &AdmissibleGGraph) -> i64 {
    let g = cover.graph();
    let eo = (0..g.num_edges())
        .filter(|&e| cover.edge_action(e) >= e)
        .count() as i64;
    let vo = (0..g.num_vertices())
        .filter(|&v| cover.vertex_action()[v] >= v)
        .count() as i64;
    eo - vo + 1
}

/// A cover together with a contraction onto the marked target whose image
/// edges, together with their involution partners, exhaust the source
/// edges.  Terms of the Hurwitz pullback are indexed by these.
#[derive(Clone, Debug)]
pub struct GenericStructure {
    source: AdmissibleGGraph,
    target: StableGraph,
    morphism: GraphMorphism,
}

impl GenericStructure {
    pub fn new(
        source: AdmissibleGGraph,
        target: StableGraph,
        morphism: GraphMorphism,
    ) -> Result<Self> {
        morphism
            .validate(source.graph(), &target)
            .map_err(|e| Error::InvalidInput(format!("not a contraction onto the target: {e}")))?;
        let image = morphism.image_edges(source.graph());
        for e in 0..source.graph().num_edges() {
            if !image.contains(&e) && !image.contains(&source.edge_action(e)) {
                return Err(Error::InvalidInput(format!(
                    "edge {e} is neither an image edge nor conjugate to one, so the structure is not generic"
                )));
            }
        }
        Ok(GenericStructure {
            source,
            target,
            morphism,
        })
    }

    pub fn source(&self) -> &AdmissibleGGraph {
        &self.source
    }

    pub fn target(&self) -> &StableGraph {
        &self.target
    }

    pub fn morphism(&self) -> &GraphMorphism {
        &self.morphism
    }

    pub fn to_json(&self) -> Value {
        json!({
            "source": self.source.graph().to_json(),
            "vertex_action": self.source.vertex_action(),
            "half_action": self.source.half_action(),
            "switched_legs": self.source.switched_legs().iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
            "target": self.target.to_json(),
            "vertex_map": self.morphism.vertex_map,
            "edge_injection": self.morphism.beta_half,
        })
    }
}

/// Structural reason a pullback term is already known to be tautological.
/// The reasons are tested in a fixed order and the first match is recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TautologicalReason {
    /// Some involution orbit contains two image edges, so the term carries
    /// an excess class of positive degree.
    ExcessDimension,
    /// The quotient has genus zero, so every component cover is
    /// hyperelliptic.
    Hyperelliptic,
    /// No vertex of the source has genus two.
    NoGenusTwoVertex,
    /// The involution moves some vertex.
    SwappedVertices,
    /// The quotient graph has a cycle.
    QuotientCycle,
    /// The source has a loop edge.
    LoopEdge,
    /// Some edge is fixed by the involution.
    FixedEdge,
    /// Two vertices are joined by a number of edges other than zero or two.
    BadEdgeMultiplicity,
}

impl TautologicalReason {
    pub fn label(&self) -> &'static str {
        match self {
            TautologicalReason::ExcessDimension => "excess dimension",
            TautologicalReason::Hyperelliptic => "hyperelliptic cover",
            TautologicalReason::NoGenusTwoVertex => "no genus two vertex",
            TautologicalReason::SwappedVertices => "exchanged vertices",
            TautologicalReason::QuotientCycle => "quotient cycle",
            TautologicalReason::LoopEdge => "loop edge",
            TautologicalReason::FixedEdge => "fixed edge",
            TautologicalReason::BadEdgeMultiplicity => "edge multiplicity",
        }
    }
}

impl fmt::Display for TautologicalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// What a single pullback term contributes.
#[derive(Clone, Debug, PartialEq)]
pub enum Classification {
    /// Already tautological for a structural reason.
    Tautological(TautologicalReason),
    /// Supported on boundary strata deeper than the bielliptic locus.
    BoundarySupported,
    /// A positive rational multiple of the bielliptic class.
    BiellipticMultiple(Q),
}

impl Classification {
    pub fn label(&self) -> String {
        match self {
            Classification::Tautological(r) => format!("tautological ({})", r.label()),
            Classification::BoundarySupported => "boundary supported".into(),
            Classification::BiellipticMultiple(_) => "bielliptic multiple".into(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Classification::Tautological(r) => json!({
                "kind": "tautological",
                "reason": r.label(),
            }),
            Classification::BoundarySupported => json!({ "kind": "boundary supported" }),
            Classification::BiellipticMultiple(m) => json!({
                "kind": "bielliptic multiple",
                "coefficient": q_to_string(m),
            }),
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::BiellipticMultiple(m) => {
                write!(f, "bielliptic multiple (coefficient {})", q_to_string(m))
            }
            other => f.write_str(&other.label()),
        }
    }
}

/// One term of a Hurwitz pullback: a generic structure, its excess class on
/// the moduli space of the marked target vertex, and its classification.
#[derive(Clone, Debug)]
pub struct HurwitzPullbackTerm {
    structure: GenericStructure,
    excess: TautClass,
    classification: Classification,
}

impl HurwitzPullbackTerm {
    pub fn structure(&self) -> &GenericStructure {
        &self.structure
    }

    pub fn excess(&self) -> &TautClass {
        &self.excess
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn to_json(&self) -> Value {
        json!({
            "structure": self.structure.to_json(),
            "excess": self.excess.to_json(),
            "classification": self.classification.to_json(),
        })
    }
}

/// The full pullback: every generic structure over the marked target, with
/// the summed coefficient of the bielliptic terms.
#[derive(Clone, Debug)]
pub struct HurwitzPullback {
    target: StableGraph,
    terms: Vec<HurwitzPullbackTerm>,
    bielliptic_total: Q,
}

impl HurwitzPullback {
    pub fn target(&self) -> &StableGraph {
        &self.target
    }

    pub fn terms(&self) -> &[HurwitzPullbackTerm] {
        &self.terms
    }

    pub fn bielliptic_total(&self) -> &Q {
        &self.bielliptic_total
    }

    pub fn classification_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for t in &self.terms {
            *out.entry(t.classification().label()).or_insert(0) += 1;
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "target": self.target.to_json(),
            "bielliptic_total": q_to_string(&self.bielliptic_total),
            "classification_counts": self.classification_counts(),
            "terms": self.terms.iter().map(|t| t.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// Work meter for the enumeration; one unit per combinatorial node visited.
struct Meter {
    used: u64,
    limit: u64,
}

impl Meter {
    fn new(limit: u64) -> Self {
        Meter { used: 0, limit }
    }

    fn charge(&mut self, amount: u64) -> Result<()> {
        self.used = self.used.saturating_add(amount);
        if self.used > self.limit {
            Err(Error::BudgetExceeded {
                context: "enumerating generic structures".into(),
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }

    fn charge_big(&mut self, amount: u128) -> Result<()> {
        self.charge(u64::try_from(amount).unwrap_or(u64::MAX))
    }
}

/// Role of one target loop in a structure: its image edge can be fixed by
/// the involution, paired with a contracted edge, or paired with the image
/// edge of another loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LoopRole {
    Fixed,
    Swapped,
    Lead(usize),
    Follow(usize),
}

fn loop_patterns_rec(
    roles: &mut Vec<Option<LoopRole>>,
    out: &mut Vec<Vec<LoopRole>>,
    meter: &mut Meter,
) -> Result<()> {
    let i = match roles.iter().position(Option::is_none) {
        None => {
            meter.charge(1)?;
            out.push(roles.iter().map(|r| r.unwrap()).collect());
            return Ok(());
        }
        Some(i) => i,
    };
    roles[i] = Some(LoopRole::Fixed);
    loop_patterns_rec(roles, out, meter)?;
    roles[i] = Some(LoopRole::Swapped);
    loop_patterns_rec(roles, out, meter)?;
    for j in i + 1..roles.len() {
        if roles[j].is_none() {
            roles[i] = Some(LoopRole::Lead(j));
            roles[j] = Some(LoopRole::Follow(i));
            loop_patterns_rec(roles, out, meter)?;
            roles[j] = None;
        }
    }
    roles[i] = None;
    Ok(())
}

fn loop_patterns(k: usize, meter: &mut Meter) -> Result<Vec<Vec<LoopRole>>> {
    let mut roles = vec![None; k];
    let mut out = Vec::new();
    loop_patterns_rec(&mut roles, &mut out, meter)?;
    Ok(out)
}

fn involutions_rec(
    map: &mut Vec<Option<usize>>,
    out: &mut Vec<Vec<usize>>,
    meter: &mut Meter,
) -> Result<()> {
    let i = match map.iter().position(Option::is_none) {
        None => {
            meter.charge(1)?;
            out.push(map.iter().map(|v| v.unwrap()).collect());
            return Ok(());
        }
        Some(i) => i,
    };
    map[i] = Some(i);
    involutions_rec(map, out, meter)?;
    for j in i + 1..map.len() {
        if map[j].is_none() {
            map[i] = Some(j);
            map[j] = Some(i);
            involutions_rec(map, out, meter)?;
            map[j] = None;
        }
    }
    map[i] = None;
    Ok(())
}

fn involutions(m: usize, meter: &mut Meter) -> Result<Vec<Vec<usize>>> {
    let mut map = vec![None; m];
    let mut out = Vec::new();
    involutions_rec(&mut map, &mut out, meter)?;
    Ok(out)
}

fn unordered_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for u in 0..m {
        for v in u..m {
            out.push((u, v));
        }
    }
    out
}

fn charged_tuples<T: Clone>(
    options: &[T],
    len: usize,
    meter: &mut Meter,
) -> Result<Vec<Vec<T>>> {
    fn rec<T: Clone>(
        options: &[T],
        len: usize,
        cur: &mut Vec<T>,
        out: &mut Vec<Vec<T>>,
        meter: &mut Meter,
    ) -> Result<()> {
        if cur.len() == len {
            meter.charge(1)?;
            out.push(cur.clone());
            return Ok(());
        }
        for o in options {
            cur.push(o.clone());
            rec(options, len, cur, out, meter)?;
            cur.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(options, len, &mut Vec::new(), &mut out, meter)?;
    Ok(out)
}

fn plain_tuples(base: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::new();
        for t in &out {
            for v in 0..base {
                let mut u = t.clone();
                u.push(v);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

fn spanning_connected(m: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(u, v) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        parent[ru] = rv;
    }
    let r0 = find(&mut parent, 0);
    (1..m).all(|v| find(&mut parent, v) == r0)
}

/// Genus vectors constant on involution orbits with the prescribed total.
fn equivariant_genera(
    sigma_v: &[usize],
    total: u32,
    meter: &mut Meter,
) -> Result<Vec<Vec<u32>>> {
    let m = sigma_v.len();
    let reps: Vec<usize> = (0..m).filter(|&v| sigma_v[v] >= v).collect();
    let weights: Vec<u32> = reps
        .iter()
        .map(|&v| if sigma_v[v] == v { 1 } else { 2 })
        .collect();
    fn rec(
        reps: &[usize],
        weights: &[u32],
        sigma_v: &[usize],
        idx: usize,
        remaining: u32,
        cur: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
        meter: &mut Meter,
    ) -> Result<()> {
        if idx == reps.len() {
            if remaining == 0 {
                meter.charge(1)?;
                let mut vec = vec![0; sigma_v.len()];
                for (i, &v) in reps.iter().enumerate() {
                    vec[v] = cur[i];
                    vec[sigma_v[v]] = cur[i];
                }
                out.push(vec);
            }
            return Ok(());
        }
        let mut g = 0;
        while g * weights[idx] <= remaining {
            cur.push(g);
            rec(reps, weights, sigma_v, idx + 1, remaining - g * weights[idx], cur, out, meter)?;
            cur.pop();
            g += 1;
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(&reps, &weights, sigma_v, 0, total, &mut Vec::new(), &mut out, meter)?;
    Ok(out)
}

/// Vectors with one entry from each allowed set, summing to `total`.
fn charged_c_vectors(
    allowed: &[Vec<usize>],
    total: usize,
    meter: &mut Meter,
) -> Result<Vec<Vec<usize>>> {
    fn rec(
        allowed: &[Vec<usize>],
        idx: usize,
        remaining: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        meter: &mut Meter,
    ) -> Result<()> {
        if idx == allowed.len() {
            if remaining == 0 {
                meter.charge(1)?;
                out.push(cur.clone());
            }
            return Ok(());
        }
        for &c in &allowed[idx] {
            if c <= remaining {
                cur.push(c);
                rec(allowed, idx + 1, remaining - c, cur, out, meter)?;
                cur.pop();
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    rec(allowed, 0, total, &mut Vec::new(), &mut out, meter)?;
    Ok(out)
}

fn binomial_capped(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = match r.checked_mul(n - i) {
            Some(x) => x / (i + 1),
            None => return u128::MAX,
        };
    }
    r
}

fn multinomial_capped(total: usize, parts: &[usize]) -> u128 {
    let mut rem = total as u128;
    let mut r: u128 = 1;
    for &p in parts {
        let b = binomial_capped(rem, p as u128);
        r = r.checked_mul(b).unwrap_or(u128::MAX);
        rem -= p as u128;
    }
    r
}

/// Ordered partitions of `labels` into blocks of the given sizes.
fn label_assignments(labels: &[LegLabel], sizes: &[usize]) -> Vec<Vec<Vec<LegLabel>>> {
    fn choose(
        pool: &[LegLabel],
        k: usize,
        start: usize,
        cur: &mut Vec<LegLabel>,
        out: &mut Vec<(Vec<LegLabel>, Vec<LegLabel>)>,
    ) {
        if cur.len() == k {
            let rest: Vec<LegLabel> = pool
                .iter()
                .copied()
                .filter(|l| !cur.contains(l))
                .collect();
            out.push((cur.clone(), rest));
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            choose(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    fn rec(
        pool: &[LegLabel],
        sizes: &[usize],
        cur: &mut Vec<Vec<LegLabel>>,
        out: &mut Vec<Vec<Vec<LegLabel>>>,
    ) {
        if sizes.is_empty() {
            out.push(cur.clone());
            return;
        }
        let mut picks = Vec::new();
        choose(pool, sizes[0], 0, &mut Vec::new(), &mut picks);
        for (block, rest) in picks {
            cur.push(block);
            rec(&rest, &sizes[1..], cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(labels, sizes, &mut Vec::new(), &mut out);
    out
}

/// The target with the monodromy's leg labels attached to its vertex.
fn marked_target(target: &StableGraph, data: &MonodromyData) -> Result<StableGraph> {
    let n = data.num_marked_points();
    if target.num_legs() == 0 {
        StableGraph::from_edge_list(
            target.genera().to_vec(),
            vec![(1..=n).collect()],
            &vec![(0, 0); target.num_edges()],
        )
    } else if target.num_legs() == n {
        Ok(target.clone())
    } else {
        Err(Error::InvalidInput(format!(
            "the target carries {} legs but the monodromy marks {n} points",
            target.num_legs()
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble_structure(
    marked: &StableGraph,
    data: &MonodromyData,
    roles: &[LoopRole],
    s_loops: &[usize],
    contracted: &[(usize, usize)],
    sigma_v: &[usize],
    genera: &[u32],
    f_loops: &[usize],
    f_ends: &[(usize, usize)],
    p_pairs: &[(usize, usize)],
    p_ends: &[(usize, usize)],
    bits: u32,
    orient: u32,
    fixed_vs: &[usize],
    assignment: &[Vec<LegLabel>],
    placement: &[usize],
) -> Result<Option<GenericStructure>> {
    let k = roles.len();
    let m = sigma_v.len();
    let rank = |list: &[usize], t: usize| list.iter().position(|&x| x == t).unwrap();
    let pair_rank = |lead: usize| p_pairs.iter().position(|&(i, _)| i == lead).unwrap();

    let mut vertex_pairs = Vec::with_capacity(k + s_loops.len());
    for (t, role) in roles.iter().enumerate() {
        let ends = match role {
            LoopRole::Fixed => f_ends[rank(f_loops, t)],
            LoopRole::Swapped => {
                let (u, v) = contracted[rank(s_loops, t)];
                (sigma_v[u], sigma_v[v])
            }
            LoopRole::Lead(_) => p_ends[pair_rank(t)],
            LoopRole::Follow(i) => {
                let (p, q) = p_ends[pair_rank(*i)];
                (sigma_v[p], sigma_v[q])
            }
        };
        vertex_pairs.push(ends);
    }
    vertex_pairs.extend_from_slice(contracted);

    let mut legs_at: Vec<Vec<LegLabel>> = vec![Vec::new(); m];
    for (idx, &v) in fixed_vs.iter().enumerate() {
        legs_at[v].extend_from_slice(&assignment[idx]);
    }
    for (r, &(a, b)) in data.switched_leg_pairs().iter().enumerate() {
        let v = placement[r];
        legs_at[v].push(a);
        legs_at[sigma_v[v]].push(b);
    }

    let graph = StableGraph::from_edge_list(genera.to_vec(), legs_at, &vertex_pairs)?;
    if graph.validate().is_err() {
        return Ok(None);
    }

    let nh = graph.num_half_edges();
    let mut sigma_h = vec![usize::MAX; nh];
    let link = |sh: &mut Vec<usize>, a: usize, b: usize| {
        sh[a] = b;
        sh[b] = a;
    };
    let mut slot = 0u32;
    let take_bit = |slot: &mut u32| {
        let b = ((bits >> *slot) & 1) as usize;
        *slot += 1;
        b
    };
    for (t, role) in roles.iter().enumerate() {
        match role {
            LoopRole::Fixed => {
                sigma_h[2 * t] = 2 * t;
                sigma_h[2 * t + 1] = 2 * t + 1;
            }
            LoopRole::Swapped => {
                let r = rank(s_loops, t);
                let c = k + r;
                let (u, v) = contracted[r];
                if u == v {
                    let b = take_bit(&mut slot);
                    link(&mut sigma_h, 2 * c, 2 * t + b);
                    link(&mut sigma_h, 2 * c + 1, 2 * t + 1 - b);
                } else {
                    link(&mut sigma_h, 2 * c, 2 * t);
                    link(&mut sigma_h, 2 * c + 1, 2 * t + 1);
                }
            }
            LoopRole::Lead(j) => {
                let (p, q) = p_ends[pair_rank(t)];
                if p == q {
                    let b = take_bit(&mut slot);
                    link(&mut sigma_h, 2 * t, 2 * j + b);
                    link(&mut sigma_h, 2 * t + 1, 2 * j + 1 - b);
                } else {
                    link(&mut sigma_h, 2 * t, 2 * j);
                    link(&mut sigma_h, 2 * t + 1, 2 * j + 1);
                }
            }
            LoopRole::Follow(_) => {}
        }
    }

    let cover = AdmissibleGGraph::new(
        graph,
        sigma_v.to_vec(),
        sigma_h,
        &data.switched_leg_pairs(),
    )?;
    if !riemann_hurwitz_check(&cover).is_ok() {
        return Ok(None);
    }

    let mut beta_half = vec![0usize; marked.num_half_edges()];
    for (t, &(h1, h2)) in marked.edges().iter().enumerate() {
        let o = ((orient >> t) & 1) as usize;
        beta_half[h1] = 2 * t + o;
        beta_half[h2] = 2 * t + 1 - o;
    }
    let morphism = GraphMorphism {
        vertex_map: vec![0; m],
        beta_half,
    };
    Ok(Some(GenericStructure::new(cover, marked.clone(), morphism)?))
}

/// Canonical key of a structure: the canonical form of the source graph
/// together with the lexicographically least transport of the involution
/// and the edge injection over its automorphisms.  Two structures over the
/// same target get equal keys exactly when they are isomorphic.
fn structure_key(s: &GenericStructure) -> Result<String> {
    let g = s.source().graph();
    let c = g.canonicalize_full();
    let nv = g.num_vertices();
    let nh = g.num_half_edges();
    let mut kv_inv = vec![0; nv];
    for v in 0..nv {
        kv_inv[c.vertex_map[v]] = v;
    }
    let mut kh_inv = vec![0; nh];
    for h in 0..nh {
        kh_inv[c.half_map[h]] = h;
    }
    let sv: Vec<usize> = (0..nv)
        .map(|x| c.vertex_map[s.source().vertex_action()[kv_inv[x]]])
        .collect();
    let sh: Vec<usize> = (0..nh)
        .map(|x| c.half_map[s.source().half_action()[kh_inv[x]]])
        .collect();
    let beta: Vec<usize> = s.morphism().beta_half.iter().map(|&h| c.half_map[h]).collect();
    let auts = c.graph.automorphisms(KEY_ISO_CAP)?;
    let mut best: Option<String> = None;
    for tau in &auts {
        let mut tv_inv = vec![0; nv];
        for v in 0..nv {
            tv_inv[tau.vertex_map[v]] = v;
        }
        let mut th_inv = vec![0; nh];
        for h in 0..nh {
            th_inv[tau.half_map[h]] = h;
        }
        let cv: Vec<usize> = (0..nv).map(|x| tau.vertex_map[sv[tv_inv[x]]]).collect();
        let ch: Vec<usize> = (0..nh).map(|x| tau.half_map[sh[th_inv[x]]]).collect();
        let cb: Vec<usize> = beta.iter().map(|&h| tau.half_map[h]).collect();
        let cand = format!("{cv:?}|{ch:?}|{cb:?}");
        if best.as_ref().map_or(true, |b| cand < *b) {
            best = Some(cand);
        }
    }
    Ok(format!(
        "{}|{:?}|{}",
        c.graph.to_json(),
        s.source().switched_legs(),
        best.unwrap_or_default()
    ))
}

/// Enumerates every generic structure over a one-vertex target, up to
/// isomorphism over the target.  The target either carries no legs (the
/// monodromy's labels are attached for it) or exactly the labelled marked
/// points of the monodromy.  Work is metered against `budget`; the
/// ten-loop target overflows any realistic limit by design.
pub fn enumerate_generic_structures(
    target: &StableGraph,
    data: &MonodromyData,
    budget: u64,
) -> Result<Vec<GenericStructure>> {
    target.validate()?;
    if target.num_vertices() != 1 {
        return Err(Error::InvalidInput(
            "only targets with a single vertex are supported".into(),
        ));
    }
    if target.total_genus() != data.source_genus() {
        return Err(Error::InvalidInput(format!(
            "the target has total genus {} but the monodromy names a genus {} cover",
            target.total_genus(),
            data.source_genus()
        )));
    }
    let marked = marked_target(target, data)?;
    let g0 = marked.genus_of(0);
    let k = marked.num_edges();
    let fixed_labels = data.fixed_legs();
    let pairs = data.switched_leg_pairs();
    let ones = fixed_labels.len();
    let mut meter = Meter::new(budget);
    let mut found: Vec<GenericStructure> = Vec::new();

    let patterns = loop_patterns(k, &mut meter)?;
    for pattern in &patterns {
        let mut f_loops = Vec::new();
        let mut s_loops = Vec::new();
        let mut p_pairs = Vec::new();
        for (i, role) in pattern.iter().enumerate() {
            match role {
                LoopRole::Fixed => f_loops.push(i),
                LoopRole::Swapped => s_loops.push(i),
                LoopRole::Lead(j) => p_pairs.push((i, *j)),
                LoopRole::Follow(_) => {}
            }
        }
        let s = s_loops.len();
        for m in 1..=s + 1 {
            let genus_total = g0 as i64 + m as i64 - 1 - s as i64;
            if genus_total < 0 {
                continue;
            }
            let all_pairs = unordered_pairs(m);
            for contracted in charged_tuples(&all_pairs, s, &mut meter)? {
                if !spanning_connected(m, &contracted) {
                    continue;
                }
                for sigma_v in involutions(m, &mut meter)? {
                    for genera in equivariant_genera(&sigma_v, genus_total as u32, &mut meter)? {
                        let fixed_vs: Vec<usize> =
                            (0..m).filter(|&v| sigma_v[v] == v).collect();
                        let fixed_pairs: Vec<(usize, usize)> = all_pairs
                            .iter()
                            .copied()
                            .filter(|&(u, v)| sigma_v[u] == u && sigma_v[v] == v)
                            .collect();
                        for f_ends in charged_tuples(&fixed_pairs, f_loops.len(), &mut meter)? {
                            for p_ends in
                                charged_tuples(&all_pairs, p_pairs.len(), &mut meter)?
                            {
                                let slots = contracted
                                    .iter()
                                    .filter(|&&(u, v)| u == v)
                                    .count()
                                    + p_ends.iter().filter(|&&(p, q)| p == q).count();
                                let mut fixed_half = vec![0usize; m];
                                for &(x, y) in &f_ends {
                                    fixed_half[x] += 1;
                                    fixed_half[y] += 1;
                                }
                                let allowed: Vec<Vec<usize>> = fixed_vs
                                    .iter()
                                    .map(|&v| {
                                        let top =
                                            2 * genera[v] as i64 + 2 - fixed_half[v] as i64;
                                        (0..=top.max(-1))
                                            .filter(|c| (top - c) >= 0 && (top - c) % 4 == 0)
                                            .map(|c| c as usize)
                                            .collect()
                                    })
                                    .collect();
                                for c_vec in charged_c_vectors(&allowed, ones, &mut meter)? {
                                    let mut orbit_h = 0i64;
                                    for (idx, &v) in fixed_vs.iter().enumerate() {
                                        let tv = 2 * genera[v] as i64 + 2
                                            - fixed_half[v] as i64
                                            - c_vec[idx] as i64;
                                        orbit_h += tv / 4;
                                    }
                                    for v in 0..m {
                                        if sigma_v[v] > v {
                                            orbit_h += genera[v] as i64;
                                        }
                                    }
                                    let eo = (f_loops.len() + s_loops.len() + p_pairs.len())
                                        as i64;
                                    let vo = fixed_vs.len() as i64
                                        + (m - fixed_vs.len()) as i64 / 2;
                                    if orbit_h + eo - vo + 1 != data.target_genus() as i64 {
                                        continue;
                                    }
                                    let assignments =
                                        label_assignments(&fixed_labels, &c_vec);
                                    let placements = plain_tuples(m, pairs.len());
                                    for _bits in 0..1u32 << slots {
                                        for _orient in 0..1u32 << k {
                                            let count = multinomial_capped(ones, &c_vec)
                                                .saturating_mul(
                                                    (m as u128)
                                                        .checked_pow(pairs.len() as u32)
                                                        .unwrap_or(u128::MAX),
                                                );
                                            meter.charge_big(count)?;
                                            for assignment in &assignments {
                                                for placement in &placements {
                                                    if let Some(st) = assemble_structure(
                                                        &marked, data, pattern, &s_loops,
                                                        &contracted, &sigma_v, &genera,
                                                        &f_loops, &f_ends, &p_pairs, &p_ends,
                                                        _bits, _orient, &fixed_vs,
                                                        assignment, placement,
                                                    )? {
                                                        found.push(st);
                                                    }
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let keys = crate::par::map_indexed(found.len(), found.len() > 32, |i| {
        structure_key(&found[i])
    });
    let mut classes: BTreeMap<String, GenericStructure> = BTreeMap::new();
    for (key, st) in keys.into_iter().zip(found) {
        classes.entry(key?).or_insert(st);
    }
    Ok(classes.into_values().collect())
}

/// Orbits of the involution on image edges, each sorted, ordered by least
/// member.
fn image_orbits(s: &GenericStructure) -> Vec<Vec<usize>> {
    let image = s.morphism().image_edges(s.source().graph());
    let mut out = Vec::new();
    for &e in &image {
        let o = s.source().edge_action(e);
        if o != e && image.contains(&o) && o < e {
            continue;
        }
        if o != e && image.contains(&o) {
            out.push(vec![e, o]);
        } else {
            out.push(vec![e]);
        }
    }
    out
}

/// Every admissible choice of orbit representatives, one image edge per
/// orbit, in orbit order.
pub fn representative_choices(s: &GenericStructure) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for orbit in image_orbits(s) {
        let mut next = Vec::new();
        for prefix in &out {
            for &r in &orbit {
                let mut v = prefix.clone();
                v.push(r);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// The excess class for a specific choice of orbit representatives: the
/// product, over image edges outside the choice, of minus the sum of the
/// two psi classes at the markings of that edge's target loop.  The class
/// lives on the moduli space of the marked target vertex, whose markings
/// are the target legs followed by its half-edges in index order.
pub fn excess_for_representatives(
    s: &GenericStructure,
    reps: &[usize],
) -> Result<TautClass> {
    let target = s.target();
    if target.num_vertices() != 1 {
        return Err(Error::InvalidInput(
            "excess classes need a one-vertex target".into(),
        ));
    }
    let orbits = image_orbits(s);
    if reps.len() != orbits.len() {
        return Err(Error::InvalidInput(
            "need exactly one representative per image edge orbit".into(),
        ));
    }
    let mut excluded = Vec::new();
    for (orbit, &r) in orbits.iter().zip(reps) {
        if !orbit.contains(&r) {
            return Err(Error::InvalidInput(format!(
                "edge {r} does not represent its orbit"
            )));
        }
        excluded.extend(orbit.iter().copied().filter(|&e| e != r));
    }
    let mut loop_of = BTreeMap::new();
    for t in 0..target.num_edges() {
        let (h1, _) = target.edges()[t];
        loop_of.insert(
            s.source().graph().edge_of_half(s.morphism().beta_half[h1]),
            t,
        );
    }
    let n_b = target.num_legs() + target.num_half_edges() as u32;
    let g0 = target.genus_of(0);
    let smooth = StableGraph::smooth(g0, n_b);
    let factors: Vec<(LegLabel, LegLabel)> = excluded
        .iter()
        .map(|e| {
            let t = loop_of[e];
            let (h1, h2) = target.edges()[t];
            (
                target.num_legs() + h1 as u32 + 1,
                target.num_legs() + h2 as u32 + 1,
            )
        })
        .collect();
    let sign = if factors.len() % 2 == 1 { qi(-1) } else { qi(1) };
    let mut total = TautClass::zero(g0, n_b);
    for mask in 0..1usize << factors.len() {
        let mut dec = Decoration::empty(1);
        for (i, f) in factors.iter().enumerate() {
            let marking = if (mask >> i) & 1 == 0 { f.0 } else { f.1 };
            *dec.psi_leg.entry(marking).or_insert(0) += 1;
        }
        total = total.checked_add(&make_stratum(&smooth, &dec)?.scale(&sign))?;
    }
    Ok(total)
}

/// The excess class with the default choice of representatives: the least
/// edge index in each orbit.
pub fn excess_top_chern(s: &GenericStructure) -> Result<TautClass> {
    let reps: Vec<usize> = image_orbits(s).iter().map(|o| o[0]).collect();
    excess_for_representatives(s, &reps)
}

fn excess_orbit_count(s: &GenericStructure) -> usize {
    image_orbits(s).iter().filter(|o| o.len() == 2).count()
}

/// Classifies one pullback term over the one-vertex genus-two tower with
/// every marked point a branch point.  Structural reasons are tested in a
/// fixed order; a term surviving them all is either supported on deeper
/// boundary (a genus-zero vertex away from the genus-two core) or a
/// positive multiple of the bielliptic class, with coefficient the number
/// of ways to relabel the branch points within each fixed vertex.
pub fn classify_term(s: &GenericStructure) -> Result<Classification> {
    let target = s.target();
    if target.num_vertices() != 1 || target.genus_of(0) != 2 {
        return Err(Error::InvalidInput(
            "classification needs a target with one genus 2 vertex".into(),
        ));
    }
    if !s.source().switched_legs().is_empty() {
        return Err(Error::InvalidInput(
            "classification needs every marked point to be a branch point".into(),
        ));
    }
    let g = s.source().graph();
    let ones = g.num_legs() as i64;
    let t = 2 * g.total_genus() as i64 + 2 - ones;
    if t < 0 || t % 4 != 0 || t / 4 > 1 {
        return Err(Error::InvalidInput(
            "classification needs a hyperelliptic or bielliptic branch profile".into(),
        ));
    }
    let rh = riemann_hurwitz_check(s.source());
    if !rh.is_ok() {
        return Err(Error::InvalidInput(format!(
            "the cover violates the branch point count: {}",
            rh.violations().join("; ")
        )));
    }
    if excess_orbit_count(s) > 0 {
        return Ok(Classification::Tautological(
            TautologicalReason::ExcessDimension,
        ));
    }
    if t / 4 == 0 {
        return Ok(Classification::Tautological(
            TautologicalReason::Hyperelliptic,
        ));
    }
    let nv = g.num_vertices();
    if !(0..nv).any(|v| g.genus_of(v) == 2) {
        return Ok(Classification::Tautological(
            TautologicalReason::NoGenusTwoVertex,
        ));
    }
    if (0..nv).any(|v| s.source().vertex_action()[v] != v) {
        return Ok(Classification::Tautological(
            TautologicalReason::SwappedVertices,
        ));
    }
    if quotient_betti(s.source()) == 1 {
        return Ok(Classification::Tautological(
            TautologicalReason::QuotientCycle,
        ));
    }
    if (0..g.num_edges()).any(|e| g.is_loop(e)) {
        return Ok(Classification::Tautological(TautologicalReason::LoopEdge));
    }
    if (0..g.num_edges()).any(|e| s.source().edge_action(e) == e) {
        return Ok(Classification::Tautological(TautologicalReason::FixedEdge));
    }
    let mut multiplicity: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for e in 0..g.num_edges() {
        let (u, v) = g.edge_endpoints(e);
        *multiplicity.entry((u.min(v), u.max(v))).or_insert(0) += 1;
    }
    if multiplicity.values().any(|&c| c != 2) {
        return Ok(Classification::Tautological(
            TautologicalReason::BadEdgeMultiplicity,
        ));
    }
    let core = (0..nv).find(|&v| g.genus_of(v) == 2).unwrap();
    for v in 0..nv {
        if v != core && !multiplicity.contains_key(&(v.min(core), v.max(core))) {
            return Ok(Classification::BoundarySupported);
        }
    }
    let mut mult = Q::one();
    for v in 0..nv {
        mult *= q_from_biguint(&factorial(s.source().fixed_leg_count_at(v) as u64));
    }
    Ok(Classification::BiellipticMultiple(mult))
}

/// Pulls the Hurwitz locus named by `data` back over the self-glued
/// one-vertex target: enumerates every generic structure, attaches its
/// excess class, classifies it, and totals the bielliptic coefficients.
pub fn pullback_hurwitz(
    target: &StableGraph,
    data: &MonodromyData,
    budget: u64,
) -> Result<HurwitzPullback> {
    target.validate()?;
    if target.num_legs() != 0 {
        return Err(Error::InvalidInput(
            "the glued target must not carry legs of its own".into(),
        ));
    }
    let structures = enumerate_generic_structures(target, data, budget)?;
    let marked = marked_target(target, data)?;
    let mut terms = Vec::new();
    let mut total = Q::zero();
    for st in structures {
        let excess = excess_top_chern(&st)?;
        let classification = classify_term(&st)?;
        if let Classification::BiellipticMultiple(m) = &classification {
            total += m;
        }
        terms.push(HurwitzPullbackTerm {
            structure: st,
            excess,
            classification,
        });
    }
    Ok(HurwitzPullback {
        target: marked,
        terms,
        bielliptic_total: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus;
    use crate::graph::enumerate_stable_graphs;
    use crate::rational::qr;

    fn tower_target(k: usize) -> StableGraph {
        StableGraph::from_edge_list(vec![2], vec![vec![]], &vec![(0, 0); k]).unwrap()
    }

    #[test]
    fn branch_profiles_validate() {
        let b = MonodromyData::bielliptic(2).unwrap();
        assert_eq!(b.num_branch_points(), 2);
        assert_eq!(b.num_marked_points(), 2);
        assert_eq!(b.target_genus(), 1);
        let b12 = MonodromyData::bielliptic(12).unwrap();
        assert_eq!(b12.num_branch_points(), 22);
        assert_eq!(b12.target_genus(), 1);
        let h = MonodromyData::hyperelliptic(2).unwrap();
        assert_eq!(h.num_branch_points(), 6);
        assert_eq!(h.target_genus(), 0);
        let mixed = MonodromyData::new(2, vec![1, 1, 0, 0]).unwrap();
        assert_eq!(mixed.num_marked_points(), 6);
        assert_eq!(mixed.target_genus(), 1);
        assert_eq!(mixed.fixed_legs(), vec![1, 2]);
        assert_eq!(mixed.switched_leg_pairs(), vec![(3, 4), (5, 6)]);
        assert!(matches!(
            MonodromyData::new(2, vec![1; 5]),
            Err(Error::InvalidMonodromy(_))
        ));
        assert!(matches!(
            MonodromyData::new(3, vec![1, 2, 0]),
            Err(Error::InvalidMonodromy(_))
        ));
        assert!(matches!(
            MonodromyData::bielliptic(0),
            Err(Error::InvalidMonodromy(_))
        ));
    }

    #[test]
    fn involution_constructor_rejects_bad_data() {
        // Exchanging the two halves of a loop folds the edge: rejected.
        let loop_g = StableGraph::from_edge_list(vec![1], vec![vec![1]], &[(0, 0)]).unwrap();
        assert!(matches!(
            AdmissibleGGraph::new(loop_g.clone(), vec![0], vec![1, 0], &[]),
            Err(Error::InvalidInput(_))
        ));
        // Fixing both halves is fine.
        assert!(AdmissibleGGraph::new(loop_g, vec![0], vec![0, 1], &[]).is_ok());

        // A four-cycle on half-edges is not an involution.
        let two_loops =
            StableGraph::from_edge_list(vec![0], vec![vec![1, 2]], &[(0, 0), (0, 0)]).unwrap();
        assert!(matches!(
            AdmissibleGGraph::new(two_loops.clone(), vec![0], vec![2, 3, 1, 0], &[]),
            Err(Error::InvalidInput(_))
        ));
        // Swapping the loops wholesale is admissible.
        assert!(
            AdmissibleGGraph::new(two_loops, vec![0], vec![2, 3, 0, 1], &[]).is_ok()
        );

        // Exchanged vertices must have equal genus.
        let uneven = StableGraph::from_edge_list(
            vec![1, 0],
            vec![vec![1], vec![2, 3, 4]],
            &[(0, 1)],
        )
        .unwrap();
        assert!(matches!(
            AdmissibleGGraph::new(uneven, vec![1, 0], vec![1, 0], &[]),
            Err(Error::InvalidInput(_))
        ));

        // A fixed leg may not sit at a moved vertex.
        let pair = StableGraph::from_edge_list(
            vec![1, 1],
            vec![vec![1], vec![2]],
            &[(0, 1), (0, 1)],
        )
        .unwrap();
        assert!(matches!(
            AdmissibleGGraph::new(pair.clone(), vec![1, 0], vec![3, 2, 1, 0], &[]),
            Err(Error::InvalidInput(_))
        ));
        assert!(AdmissibleGGraph::new(pair, vec![1, 0], vec![3, 2, 1, 0], &[(1, 2)]).is_ok());
    }

    #[test]
    fn branch_count_reports() {
        let ok = AdmissibleGGraph::new(StableGraph::smooth(2, 2), vec![0], vec![], &[]).unwrap();
        assert!(riemann_hurwitz_check(&ok).is_ok());

        let flagship =
            AdmissibleGGraph::new(StableGraph::smooth(12, 22), vec![0], vec![], &[]).unwrap();
        assert!(riemann_hurwitz_check(&flagship).is_ok());

        let odd = AdmissibleGGraph::new(StableGraph::smooth(2, 5), vec![0], vec![], &[]).unwrap();
        let report = riemann_hurwitz_check(&odd);
        assert!(!report.is_ok());
        assert!(!report.violations().is_empty());

        // Two exchanged elliptic vertices with switched legs: unbranched.
        let pair = StableGraph::from_edge_list(
            vec![1, 1],
            vec![vec![1], vec![2]],
            &[(0, 1), (0, 1)],
        )
        .unwrap();
        let cover =
            AdmissibleGGraph::new(pair, vec![1, 0], vec![3, 2, 1, 0], &[(1, 2)]).unwrap();
        assert!(riemann_hurwitz_check(&cover).is_ok());
    }

    #[test]
    fn zero_loop_pullbacks() {
        let t0 = tower_target(0);
        let b = MonodromyData::bielliptic(2).unwrap();
        let pb = pullback_hurwitz(&t0, &b, calculus::default_budget()).unwrap();
        assert_eq!(pb.terms().len(), 1);
        assert_eq!(
            pb.terms()[0].classification(),
            &Classification::BiellipticMultiple(qi(2))
        );
        assert_eq!(pb.bielliptic_total(), &qi(2));
        assert_eq!(
            pb.terms()[0].excess(),
            &TautClass::fundamental(2, 2).unwrap()
        );

        let h = MonodromyData::hyperelliptic(2).unwrap();
        let pb = pullback_hurwitz(&t0, &h, calculus::default_budget()).unwrap();
        assert_eq!(pb.terms().len(), 1);
        assert_eq!(
            pb.terms()[0].classification(),
            &Classification::Tautological(TautologicalReason::Hyperelliptic)
        );
        assert!(pb.bielliptic_total().is_zero());

        // Free orbits fall outside the classified tower.
        let mixed = MonodromyData::new(2, vec![1, 1, 0, 0]).unwrap();
        let structures =
            enumerate_generic_structures(&t0, &mixed, calculus::default_budget()).unwrap();
        assert_eq!(structures.len(), 1);
        assert!(matches!(
            classify_term(&structures[0]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            pullback_hurwitz(&t0, &mixed, calculus::default_budget()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn one_loop_tower_classification() {
        let t1 = tower_target(1);
        let b = MonodromyData::bielliptic(3).unwrap();
        let pb = pullback_hurwitz(&t1, &b, calculus::default_budget()).unwrap();
        assert_eq!(pb.terms().len(), 16);
        let counts = pb.classification_counts();
        assert_eq!(counts.get("bielliptic multiple"), Some(&12));
        assert_eq!(counts.get("tautological (no genus two vertex)"), Some(&3));
        assert_eq!(counts.get("tautological (quotient cycle)"), Some(&1));
        assert_eq!(counts.len(), 3);
        for term in pb.terms() {
            if let Classification::BiellipticMultiple(m) = term.classification() {
                assert_eq!(m, &qi(4));
            }
            // No paired image edges anywhere on one loop: no excess.
            assert_eq!(term.excess(), &TautClass::fundamental(2, 6).unwrap());
        }
        assert_eq!(pb.bielliptic_total(), &qi(48));

        // A pre-marked target enumerates identically.
        let marked =
            StableGraph::from_edge_list(vec![2], vec![vec![1, 2, 3, 4]], &[(0, 0)]).unwrap();
        let structures =
            enumerate_generic_structures(&marked, &b, calculus::default_budget()).unwrap();
        assert_eq!(structures.len(), 16);

        // Deterministic output.
        let again = pullback_hurwitz(&t1, &b, calculus::default_budget()).unwrap();
        assert_eq!(pb.to_json().to_string(), again.to_json().to_string());
    }

    /// Independent enumeration: all stable graphs of the right ambient,
    /// all involutions drawn from their automorphisms, all contractions
    /// onto the marked target, filtered for genericity and the branch
    /// count, compared by canonical key.
    fn brute_force_keys(k: usize, data: &MonodromyData) -> BTreeSet<String> {
        let target = tower_target(k);
        let marked = marked_target(&target, data).unwrap();
        let g = marked.total_genus();
        let n = marked.num_legs();
        let mut keys = BTreeSet::new();
        for graph in enumerate_stable_graphs(g, n, 2 * k).unwrap() {
            for iso in graph.automorphisms(KEY_ISO_CAP).unwrap() {
                let involutive = (0..graph.num_vertices())
                    .all(|v| iso.vertex_map[iso.vertex_map[v]] == v)
                    && (0..graph.num_half_edges())
                        .all(|h| iso.half_map[iso.half_map[h]] == h);
                if !involutive {
                    continue;
                }
                let cover = match AdmissibleGGraph::new(
                    graph.clone(),
                    iso.vertex_map.clone(),
                    iso.half_map.clone(),
                    &data.switched_leg_pairs(),
                ) {
                    Ok(c) => c,
                    Err(_) => continue,
                };
                if !riemann_hurwitz_check(&cover).is_ok() {
                    continue;
                }
                for morphism in graph.morphisms_to(&marked, KEY_ISO_CAP).unwrap() {
                    if let Ok(st) =
                        GenericStructure::new(cover.clone(), marked.clone(), morphism)
                    {
                        keys.insert(structure_key(&st).unwrap());
                    }
                }
            }
        }
        keys
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for k in 0..=1 {
            let data = MonodromyData::bielliptic(2 + k as u32).unwrap();
            let target = tower_target(k);
            let primary: BTreeSet<String> =
                enumerate_generic_structures(&target, &data, calculus::default_budget())
                    .unwrap()
                    .iter()
                    .map(|s| structure_key(s).unwrap())
                    .collect();
            assert_eq!(primary, brute_force_keys(k, &data), "loop count {k}");
        }
    }

    #[test]
    fn two_loop_tower_aggregates() {
        let t2 = tower_target(2);
        let b = MonodromyData::bielliptic(4).unwrap();
        let pb = pullback_hurwitz(&t2, &b, calculus::default_budget()).unwrap();
        let counts = pb.classification_counts();
        assert_eq!(counts.get("bielliptic multiple"), Some(&360));
        assert!(counts.get("tautological (excess dimension)").is_some());
        assert!(counts.get("boundary supported").is_some());
        for term in pb.terms() {
            match term.classification() {
                Classification::BiellipticMultiple(m) => {
                    assert_eq!(m, &qi(8));
                    // Star shape: a genus-two core joined to each genus-zero
                    // satellite by exactly two edges, two branch legs each.
                    let g = term.structure().source().graph();
                    let core = (0..g.num_vertices())
                        .find(|&v| g.genus_of(v) == 2)
                        .unwrap();
                    for v in 0..g.num_vertices() {
                        assert_eq!(g.legs_at(v).len(), 2);
                        if v != core {
                            assert_eq!(g.genus_of(v), 0);
                            let joining = (0..g.num_edges())
                                .filter(|&e| {
                                    let (a, b) = g.edge_endpoints(e);
                                    (a, b) == (core, v) || (a, b) == (v, core)
                                })
                                .count();
                            assert_eq!(joining, 2);
                        }
                    }
                }
                Classification::BoundarySupported => {
                    let g = term.structure().source().graph();
                    assert!(g.num_vertices() >= 3);
                }
                Classification::Tautological(_) => {}
            }
        }
        assert_eq!(pb.bielliptic_total(), &qi(2880));
    }

    #[test]
    fn excess_class_expands_psi_products() {
        // A host with two paired orbits, built by hand: a genus-two vertex
        // with four loops, the involution pairing them two and two.
        let source = StableGraph::from_edge_list(
            vec![2],
            vec![(1..=10).collect()],
            &[(0, 0); 4],
        )
        .unwrap();
        let sigma_h = vec![2, 3, 0, 1, 6, 7, 4, 5];
        let cover = AdmissibleGGraph::new(source, vec![0], sigma_h, &[]).unwrap();
        let marked = StableGraph::from_edge_list(
            vec![2],
            vec![(1..=10).collect()],
            &[(0, 0); 4],
        )
        .unwrap();
        let morphism = GraphMorphism {
            vertex_map: vec![0],
            beta_half: (0..8).collect(),
        };
        let st = GenericStructure::new(cover, marked, morphism).unwrap();
        assert_eq!(excess_orbit_count(&st), 2);

        let excess = excess_top_chern(&st).unwrap();
        assert_eq!(excess.ambient(), (2, 18));
        assert_eq!(excess.num_terms(), 4);
        for (_, c) in excess.terms() {
            assert_eq!(c, &qi(1));
        }
        // Equal to the product of the two single-edge factors.
        let factor = |a: LegLabel, b: LegLabel| {
            let pa = TautClass::psi(2, 18, a).unwrap();
            let pb = TautClass::psi(2, 18, b).unwrap();
            pa.checked_add(&pb).unwrap().scale(&qi(-1))
        };
        let product = calculus::multiply(&factor(13, 14), &factor(17, 18)).unwrap();
        assert_eq!(excess, product);
    }

    #[test]
    fn excess_integrals_ignore_representative_choice() {
        let t2 = tower_target(2);
        let b = MonodromyData::bielliptic(4).unwrap();
        let pb = pullback_hurwitz(&t2, &b, calculus::default_budget()).unwrap();
        let term = pb
            .terms()
            .iter()
            .find(|t| {
                t.classification()
                    == &Classification::Tautological(TautologicalReason::ExcessDimension)
            })
            .unwrap();
        let choices = representative_choices(term.structure());
        assert_eq!(choices.len(), 2);
        let first = excess_for_representatives(term.structure(), &choices[0]).unwrap();
        let second = excess_for_representatives(term.structure(), &choices[1]).unwrap();
        assert_ne!(first, second);

        // Integrate both against a symmetric partner of complementary
        // degree on the marked vertex moduli.
        let smooth = StableGraph::smooth(2, 10);
        let mut dec = Decoration::empty(1);
        dec.psi_leg.insert(1, 8);
        for leg in 7..=10 {
            dec.psi_leg.insert(leg, 1);
        }
        let partner = make_stratum(&smooth, &dec).unwrap();
        let i1 = calculus::integrate_top(&calculus::multiply(&first, &partner).unwrap()).unwrap();
        let i2 = calculus::integrate_top(&calculus::multiply(&second, &partner).unwrap()).unwrap();
        assert_eq!(i1, i2);
        assert!(!i1.is_zero());
        assert_eq!(excess_top_chern(term.structure()).unwrap(), first);
    }

    #[test]
    fn ten_loop_budget_trips() {
        let t10 = tower_target(10);
        let b = MonodromyData::bielliptic(12).unwrap();
        assert!(matches!(
            pullback_hurwitz(&t10, &b, calculus::default_budget()),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn classification_needs_the_tower() {
        // A genus-one core is outside the classified family.
        let t = StableGraph::from_edge_list(vec![1], vec![vec![]], &[(0, 0)]).unwrap();
        let b = MonodromyData::bielliptic(2).unwrap();
        let structures =
            enumerate_generic_structures(&t, &b, calculus::default_budget()).unwrap();
        assert!(!structures.is_empty());
        assert!(matches!(
            classify_term(&structures[0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn pullback_json_shape() {
        let t1 = tower_target(1);
        let b = MonodromyData::bielliptic(3).unwrap();
        let pb = pullback_hurwitz(&t1, &b, calculus::default_budget()).unwrap();
        let v = pb.to_json();
        assert_eq!(v["terms"].as_array().unwrap().len(), 16);
        assert_eq!(v["bielliptic_total"], "48");
        assert_eq!(v["classification_counts"]["bielliptic multiple"], 12);
        let term = &v["terms"][0];
        assert!(term["structure"]["source"].is_object());
        assert!(term["excess"]["terms"].is_array() || term["excess"].is_object());
        assert!(term["classification"]["kind"].is_string());
        let _ = qr(1, 2);
    }
}
