//! Decorated strata and tautological classes.
//!
//! A generator of the strata algebra is a stable graph together with a
//! decoration: a kappa monomial at each vertex and psi exponents on legs and
//! half-edges.  The class such a generator denotes is the gluing pushforward
//! of the decoration divided by the order of the graph's automorphism group,
//! so a generator integrates to (product of vertex integrals) / |Aut|.
//!
//! Generators are stored in canonical form: the graph is canonicalized
//! first, then the decoration is minimized over the automorphisms of the
//! canonical graph.  Two decorated strata are equal as classes exactly when
//! their canonical forms coincide, which makes linear algebra over them
//! trivially exact.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::Zero;
use serde_json::{json, Value};

use crate::graph::{LegLabel, StableGraph};
use crate::rational::{q_from_str, q_to_string, Q};
use crate::{Error, Result};

/// A decoration of a specific stable graph: kappa classes per vertex (a
/// sorted multiset of positive indices), psi exponents on legs (keyed by
/// label) and on half-edges (keyed by half-edge index).  Zero exponents are
/// never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Decoration {
    pub kappa: Vec<Vec<u32>>,
    pub psi_leg: BTreeMap<LegLabel, u32>,
    pub psi_half: BTreeMap<usize, u32>,
}

impl Decoration {
    /// The empty decoration of a graph with `num_vertices` vertices.
    pub fn empty(num_vertices: usize) -> Self {
        Decoration {
            kappa: vec![Vec::new(); num_vertices],
            psi_leg: BTreeMap::new(),
            psi_half: BTreeMap::new(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.kappa.iter().all(|k| k.is_empty())
            && self.psi_leg.is_empty()
            && self.psi_half.is_empty()
    }

    /// Total degree contributed at vertex `v` of `graph`.
    pub fn degree_at(&self, graph: &StableGraph, v: usize) -> u32 {
        let mut d: u32 = self.kappa[v].iter().sum();
        for (&l, &e) in &self.psi_leg {
            if graph
                .legs()
                .iter()
                .any(|&(label, w)| label == l && w == v)
            {
                d += e;
            }
        }
        for (&h, &e) in &self.psi_half {
            if graph.half_edge_vertex(h) == v {
                d += e;
            }
        }
        d
    }

    pub fn total_degree(&self) -> u32 {
        let k: u32 = self.kappa.iter().flatten().sum();
        let l: u32 = self.psi_leg.values().sum();
        let h: u32 = self.psi_half.values().sum();
        k + l + h
    }

    fn validate(&self, graph: &StableGraph) -> Result<()> {
        if self.kappa.len() != graph.num_vertices() {
            return Err(Error::InvalidInput(
                "decoration kappa list must match the vertex count".into(),
            ));
        }
        if self.kappa.iter().flatten().any(|&a| a == 0) {
            return Err(Error::InvalidInput(
                "kappa indices must be positive (kappa_0 is a scalar, fold it into the coefficient)"
                    .into(),
            ));
        }
        let labels: BTreeSet<LegLabel> = graph.legs().iter().map(|&(l, _)| l).collect();
        for (&l, &e) in &self.psi_leg {
            if !labels.contains(&l) {
                return Err(Error::InvalidInput(format!("psi on unknown leg {l}")));
            }
            if e == 0 {
                return Err(Error::InvalidInput("zero psi exponent stored".into()));
            }
        }
        for (&h, &e) in &self.psi_half {
            if h >= graph.num_half_edges() {
                return Err(Error::InvalidInput(format!("psi on unknown half-edge {h}")));
            }
            if e == 0 {
                return Err(Error::InvalidInput("zero psi exponent stored".into()));
            }
        }
        Ok(())
    }
}

/// A canonical decorated stratum.  Construction canonicalizes, so equality
/// of values is equality of generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecoratedStratum {
    graph: StableGraph,
    dec: Decoration,
}

impl DecoratedStratum {
    /// Canonicalizes `(graph, dec)`.  Fails when the graph is invalid, the
    /// decoration does not fit the graph, or some vertex carries decoration
    /// degree beyond its moduli dimension (such a generator is not a class
    /// at all; product code treats that case as zero before calling this).
    pub fn try_new(graph: &StableGraph, dec: &Decoration) -> Result<Self> {
        graph.validate().map_err(Error::from)?;
        dec.validate(graph)?;
        let cf = graph.canonicalize_full();
        if !cf.vertex_auts_complete {
            return Err(Error::Internal(
                "automorphism group too large to canonicalize a decoration".into(),
            ));
        }

        // Transport the decoration onto the canonical graph.
        let mut base = Decoration::empty(cf.graph.num_vertices());
        for (v, ks) in dec.kappa.iter().enumerate() {
            let mut ks = ks.clone();
            ks.sort_unstable();
            base.kappa[cf.vertex_map[v]] = ks;
        }
        base.psi_leg = dec.psi_leg.clone();
        for (&h, &e) in &dec.psi_half {
            base.psi_half.insert(cf.half_map[h], e);
        }

        for v in 0..cf.graph.num_vertices() {
            let degree = base.degree_at(&cf.graph, v);
            let dim = cf.graph.vertex_dim(v);
            if (degree as i64) > dim {
                return Err(Error::DecorationTooDeep {
                    vertex: v,
                    degree,
                    dim: dim.max(0) as u32,
                });
            }
        }

        // Minimize over graph automorphisms: the image in Sym(V) is listed
        // explicitly, and the kernel (permuting parallel edges and flipping
        // loops) is resolved by sorting within each parallel class.
        let best = cf
            .vertex_auts
            .iter()
            .map(|perm| normalize_decoration(&cf.graph, &base, perm))
            .min()
            .expect("identity automorphism present");

        Ok(DecoratedStratum {
            graph: cf.graph,
            dec: best,
        })
    }

    /// The undecorated stratum of a graph.
    pub fn from_graph(graph: &StableGraph) -> Result<Self> {
        Self::try_new(graph, &Decoration::empty(graph.num_vertices()))
    }

    pub fn graph(&self) -> &StableGraph {
        &self.graph
    }

    pub fn decoration(&self) -> &Decoration {
        &self.dec
    }

    /// Codimension: edges plus decoration degree.
    pub fn codim(&self) -> usize {
        self.graph.num_edges() + self.dec.total_degree() as usize
    }

    pub fn ambient(&self) -> (u32, u32) {
        self.graph.ambient()
    }

    pub fn aut_order(&self) -> BigUint {
        self.graph.aut_order()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "graph": self.graph.to_json(),
            "kappa": self.dec.kappa,
            "psi": {
                "legs": self
                    .dec
                    .psi_leg
                    .iter()
                    .map(|(l, e)| (l.to_string(), json!(e)))
                    .collect::<serde_json::Map<_, _>>(),
                "half_edges": self
                    .dec
                    .psi_half
                    .iter()
                    .map(|(h, e)| (h.to_string(), json!(e)))
                    .collect::<serde_json::Map<_, _>>(),
            },
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("stratum JSON: {m}"));
        let obj = v.as_object().ok_or_else(|| bad("expected an object"))?;
        let graph = StableGraph::from_json(obj.get("graph").ok_or_else(|| bad("missing graph"))?)?;
        let kappa: Vec<Vec<u32>> = match obj.get("kappa") {
            None => vec![Vec::new(); graph.num_vertices()],
            Some(k) => k
                .as_array()
                .ok_or_else(|| bad("kappa must be an array"))?
                .iter()
                .map(|ks| {
                    ks.as_array()?
                        .iter()
                        .map(|a| a.as_u64().map(|a| a as u32))
                        .collect::<Option<Vec<u32>>>()
                })
                .collect::<Option<_>>()
                .ok_or_else(|| bad("kappa entries must be integer arrays"))?,
        };
        let mut psi_leg = BTreeMap::new();
        let mut psi_half = BTreeMap::new();
        if let Some(psi) = obj.get("psi") {
            let psi = psi.as_object().ok_or_else(|| bad("psi must be an object"))?;
            if let Some(legs) = psi.get("legs").and_then(|x| x.as_object()) {
                for (k, e) in legs {
                    let l: LegLabel = k.parse().map_err(|_| bad("bad leg key"))?;
                    let e = e.as_u64().ok_or_else(|| bad("bad psi exponent"))? as u32;
                    if e > 0 {
                        psi_leg.insert(l, e);
                    }
                }
            }
            if let Some(halves) = psi.get("half_edges").and_then(|x| x.as_object()) {
                for (k, e) in halves {
                    let h: usize = k.parse().map_err(|_| bad("bad half-edge key"))?;
                    let e = e.as_u64().ok_or_else(|| bad("bad psi exponent"))? as u32;
                    if e > 0 {
                        psi_half.insert(h, e);
                    }
                }
            }
        }
        let dec = Decoration {
            kappa,
            psi_leg,
            psi_half,
        };
        DecoratedStratum::try_new(&graph, &dec)
    }
}

/// Applies a vertex automorphism to a decoration of a canonical graph and
/// normalizes within every parallel class of edges.
fn normalize_decoration(graph: &StableGraph, dec: &Decoration, perm: &[usize]) -> Decoration {
    let nv = graph.num_vertices();
    let mut kappa = vec![Vec::new(); nv];
    for v in 0..nv {
        let mut ks = dec.kappa[v].clone();
        ks.sort_unstable();
        kappa[perm[v]] = ks;
    }

    // Group edges into parallel classes by (sorted) endpoints.  In canonical
    // form edge i carries half-edges 2i and 2i+1 with the smaller endpoint
    // first, so classes are runs of consecutive edge indices.
    let mut classes: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for e in 0..graph.num_edges() {
        let (u, v) = graph.edge_endpoints(e);
        classes.entry((u.min(v), u.max(v))).or_default().push(e);
    }

    let mut pairs_by_class: BTreeMap<(usize, usize), Vec<(u32, u32)>> = BTreeMap::new();
    for e in 0..graph.num_edges() {
        let (h1, h2) = (2 * e, 2 * e + 1);
        let (u, v) = (graph.half_edge_vertex(h1), graph.half_edge_vertex(h2));
        let a = dec.psi_half.get(&h1).copied().unwrap_or(0);
        let b = dec.psi_half.get(&h2).copied().unwrap_or(0);
        let (tu, tv) = (perm[u], perm[v]);
        let (key, pair) = if tu < tv {
            ((tu, tv), (a, b))
        } else if tu > tv {
            ((tv, tu), (b, a))
        } else {
            ((tu, tv), (a.min(b), a.max(b)))
        };
        pairs_by_class.entry(key).or_default().push(pair);
    }

    let mut psi_half = BTreeMap::new();
    for (key, mut pairs) in pairs_by_class {
        pairs.sort_unstable();
        let edges = &classes[&key];
        debug_assert_eq!(edges.len(), pairs.len());
        for (j, &(a, b)) in pairs.iter().enumerate() {
            let e = edges[j];
            if a > 0 {
                psi_half.insert(2 * e, a);
            }
            if b > 0 {
                psi_half.insert(2 * e + 1, b);
            }
        }
    }

    Decoration {
        kappa,
        psi_leg: dec.psi_leg.clone(),
        psi_half,
    }
}

/// A tautological class: an exact rational combination of canonical
/// decorated strata on a fixed ambient space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TautClass {
    g: u32,
    n: u32,
    terms: BTreeMap<DecoratedStratum, Q>,
}

impl TautClass {
    pub fn zero(g: u32, n: u32) -> Self {
        TautClass {
            g,
            n,
            terms: BTreeMap::new(),
        }
    }

    /// The fundamental class of a stable space.
    pub fn fundamental(g: u32, n: u32) -> Result<Self> {
        check_stable(g, n)?;
        let s = DecoratedStratum::from_graph(&StableGraph::smooth(g, n))?;
        let mut t = TautClass::zero(g, n);
        t.add_term(s, Q::from_integer(1.into()))?;
        Ok(t)
    }

    /// The psi class at marking `i`.
    pub fn psi(g: u32, n: u32, i: LegLabel) -> Result<Self> {
        check_stable(g, n)?;
        if i == 0 || i > n {
            return Err(Error::InvalidInput(format!("marking {i} out of range 1..={n}")));
        }
        let graph = StableGraph::smooth(g, n);
        let mut dec = Decoration::empty(1);
        dec.psi_leg.insert(i, 1);
        make_stratum(&graph, &dec)
    }

    /// The kappa class of index `a`.  `kappa_0` is the scalar `2g - 2 + n`
    /// times the fundamental class.
    pub fn kappa(g: u32, n: u32, a: u32) -> Result<Self> {
        check_stable(g, n)?;
        if a == 0 {
            let scalar = Q::from_integer((2 * g as i64 - 2 + n as i64).into());
            return Ok(Self::fundamental(g, n)?.scale(&scalar));
        }
        let graph = StableGraph::smooth(g, n);
        let mut dec = Decoration::empty(1);
        dec.kappa[0] = vec![a];
        make_stratum(&graph, &dec)
    }

    /// The class of the irreducible boundary divisor: a genus `g - 1` vertex
    /// carrying all legs and one loop.
    pub fn delta_irr(g: u32, n: u32) -> Result<Self> {
        check_stable(g, n)?;
        if g == 0 {
            return Err(Error::InvalidInput(
                "the irreducible boundary divisor needs genus at least 1".into(),
            ));
        }
        let graph = StableGraph::from_edge_list(
            vec![g - 1],
            vec![(1..=n).collect()],
            &[(0, 0)],
        )?;
        make_stratum(&graph, &Decoration::empty(1))
    }

    pub fn g(&self) -> u32 {
        self.g
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn ambient(&self) -> (u32, u32) {
        (self.g, self.n)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&DecoratedStratum, &Q)> {
        self.terms.iter()
    }

    pub fn coeff_of(&self, s: &DecoratedStratum) -> Q {
        self.terms.get(s).cloned().unwrap_or_else(Q::zero)
    }

    /// Adds `c` times the generator `s`, dropping the term if it cancels.
    pub fn add_term(&mut self, s: DecoratedStratum, c: Q) -> Result<()> {
        let (g, n) = s.ambient();
        if (g, n) != (self.g, self.n) {
            return Err(Error::AmbientMismatch {
                expected_g: self.g,
                expected_n: self.n,
                got_g: g,
                got_n: n,
            });
        }
        if c.is_zero() {
            return Ok(());
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(s) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(&Q::from_integer((-1).into())))
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return TautClass::zero(self.g, self.n);
        }
        TautClass {
            g: self.g,
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(s, q)| (s.clone(), q * c))
                .collect(),
        }
    }

    /// The part of the class in codimension `k`.
    pub fn degree_slice(&self, k: usize) -> Self {
        TautClass {
            g: self.g,
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(s, _)| s.codim() == k)
                .map(|(s, q)| (s.clone(), q.clone()))
                .collect(),
        }
    }

    /// The codimensions present in the class.
    pub fn codims(&self) -> BTreeSet<usize> {
        self.terms.keys().map(|s| s.codim()).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "g": self.g,
            "n": self.n,
            "terms": self
                .terms
                .iter()
                .map(|(s, c)| {
                    let mut obj = s.to_json();
                    obj.as_object_mut()
                        .expect("stratum JSON is an object")
                        .insert("coeff".into(), json!(q_to_string(c)));
                    obj
                })
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("class JSON: {m}"));
        let obj = v.as_object().ok_or_else(|| bad("expected an object"))?;
        let g = obj
            .get("g")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| bad("missing g"))? as u32;
        let n = obj
            .get("n")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| bad("missing n"))? as u32;
        let mut out = TautClass::zero(g, n);
        for term in obj
            .get("terms")
            .and_then(|x| x.as_array())
            .ok_or_else(|| bad("missing terms"))?
        {
            let s = DecoratedStratum::from_json(term)?;
            let c = term
                .get("coeff")
                .and_then(|x| x.as_str())
                .and_then(q_from_str)
                .ok_or_else(|| bad("missing or malformed coeff"))?;
            out.add_term(s, c)?;
        }
        Ok(out)
    }
}

/// Builds the canonical class of a single decorated stratum with
/// coefficient 1: the gluing pushforward of the decoration, divided by the
/// order of the graph automorphism group.
pub fn make_stratum(graph: &StableGraph, dec: &Decoration) -> Result<TautClass> {
    let s = DecoratedStratum::try_new(graph, dec)?;
    let (g, n) = s.ambient();
    check_stable(g, n)?;
    let mut t = TautClass::zero(g, n);
    t.add_term(s, Q::from_integer(1.into()))?;
    Ok(t)
}

pub(crate) fn check_stable(g: u32, n: u32) -> Result<()> {
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::Unstable { g, n });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn loop_graph(g: u32, n: u32) -> StableGraph {
        StableGraph::from_edge_list(vec![g - 1], vec![(1..=n).collect()], &[(0, 0)]).unwrap()
    }

    #[test]
    fn loop_halves_are_interchangeable() {
        let graph = loop_graph(1, 2);
        let mut d1 = Decoration::empty(1);
        d1.psi_half.insert(0, 1);
        let mut d2 = Decoration::empty(1);
        d2.psi_half.insert(1, 1);
        let s1 = DecoratedStratum::try_new(&graph, &d1).unwrap();
        let s2 = DecoratedStratum::try_new(&graph, &d2).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.codim(), 2);
    }

    #[test]
    fn mirrored_vertices_are_interchangeable() {
        // Two genus-1 vertices joined by an edge, no legs: ambient (2,0).
        let graph =
            StableGraph::from_edge_list(vec![1, 1], vec![vec![], vec![]], &[(0, 1)]).unwrap();
        let mut d1 = Decoration::empty(2);
        d1.kappa[0] = vec![1];
        let mut d2 = Decoration::empty(2);
        d2.kappa[1] = vec![1];
        assert_eq!(
            DecoratedStratum::try_new(&graph, &d1).unwrap(),
            DecoratedStratum::try_new(&graph, &d2).unwrap()
        );
        // Psi on either half-edge: also the same class by the flip.
        let mut p1 = Decoration::empty(2);
        p1.psi_half.insert(0, 1);
        let mut p2 = Decoration::empty(2);
        p2.psi_half.insert(1, 1);
        assert_eq!(
            DecoratedStratum::try_new(&graph, &p1).unwrap(),
            DecoratedStratum::try_new(&graph, &p2).unwrap()
        );
    }

    #[test]
    fn asymmetric_decorations_stay_distinct() {
        // Genus 1 and genus 2 vertices: no automorphism swaps them.
        let graph =
            StableGraph::from_edge_list(vec![1, 2], vec![vec![], vec![]], &[(0, 1)]).unwrap();
        let mut d1 = Decoration::empty(2);
        d1.kappa[0] = vec![1];
        let mut d2 = Decoration::empty(2);
        d2.kappa[1] = vec![1];
        assert_ne!(
            DecoratedStratum::try_new(&graph, &d1).unwrap(),
            DecoratedStratum::try_new(&graph, &d2).unwrap()
        );
    }

    #[test]
    fn decoration_depth_is_enforced() {
        // psi on a three-pointed rational vertex exceeds dimension 0.
        let graph = StableGraph::smooth(0, 3);
        let mut dec = Decoration::empty(1);
        dec.psi_leg.insert(1, 1);
        assert!(matches!(
            DecoratedStratum::try_new(&graph, &dec),
            Err(Error::DecorationTooDeep { .. })
        ));
        // psi^2 on the smooth (1,1) vertex exceeds dimension 1.
        let graph = StableGraph::smooth(1, 1);
        let mut dec = Decoration::empty(1);
        dec.psi_leg.insert(1, 2);
        assert!(matches!(
            DecoratedStratum::try_new(&graph, &dec),
            Err(Error::DecorationTooDeep { .. })
        ));
        // kappa_0 must be folded into coefficients.
        let mut dec = Decoration::empty(1);
        dec.kappa[0] = vec![0];
        assert!(DecoratedStratum::try_new(&graph, &dec).is_err());
    }

    #[test]
    fn class_arithmetic_and_slices() {
        let psi = TautClass::psi(1, 1, 1).unwrap();
        let kap = TautClass::kappa(1, 1, 1).unwrap();
        let one = TautClass::fundamental(1, 1).unwrap();
        let sum = psi.checked_add(&kap).unwrap().checked_add(&one).unwrap();
        assert_eq!(sum.num_terms(), 3);
        assert_eq!(sum.degree_slice(1).num_terms(), 2);
        assert_eq!(sum.degree_slice(0), one);
        let cancel = psi.checked_sub(&psi).unwrap();
        assert!(cancel.is_zero());
        assert_eq!(psi.scale(&qi(3)).scale(&qi(0)).num_terms(), 0);
        assert!(TautClass::psi(1, 1, 2).is_err());
        assert!(TautClass::fundamental(0, 2).is_err());
        assert_eq!(
            TautClass::kappa(1, 1, 0).unwrap(),
            TautClass::fundamental(1, 1).unwrap()
        );
    }

    #[test]
    fn make_stratum_normalizes_to_one_canonical_term() {
        let t = make_stratum(&loop_graph(1, 1), &Decoration::empty(1)).unwrap();
        assert_eq!(t.num_terms(), 1);
        let (s, c) = t.terms().next().unwrap();
        assert_eq!(c, &qi(1));
        assert_eq!(s.aut_order(), BigUint::from(2u32));
        assert_eq!(s.codim(), 1);
        assert_eq!(t, TautClass::delta_irr(1, 1).unwrap());
    }

    #[test]
    fn json_round_trip_preserves_classes() {
        let graph =
            StableGraph::from_edge_list(vec![0, 1], vec![vec![1, 2], vec![]], &[(0, 1)]).unwrap();
        let mut dec = Decoration::empty(2);
        dec.psi_half.insert(1, 1);
        dec.kappa[0] = vec![];
        let t = make_stratum(&graph, &dec)
            .unwrap()
            .scale(&crate::rational::qr(-3, 7));
        let sum = t
            .checked_add(&TautClass::psi(1, 2, 2).unwrap())
            .unwrap()
            .checked_add(&TautClass::kappa(1, 2, 2).unwrap().scale(&qi(5)))
            .unwrap();
        let v = sum.to_json();
        let text = serde_json::to_string_pretty(&v).unwrap();
        let back = TautClass::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, sum);
    }

    #[test]
    fn canonical_decoration_is_relabel_invariant() {
        let mut rng = StdRng::seed_from_u64(271828);
        let pool: Vec<StableGraph> = [
            crate::graph::enumerate_stable_graphs(1, 2, 2).unwrap(),
            crate::graph::enumerate_stable_graphs(2, 1, 2).unwrap(),
        ]
        .concat();
        for _ in 0..1000 {
            let g = &pool[rng.random_range(0..pool.len())];
            // Random decoration within per-vertex dimensions.
            let mut dec = Decoration::empty(g.num_vertices());
            for v in 0..g.num_vertices() {
                let dim = g.vertex_dim(v).max(0) as u32;
                if dim > 0 && rng.random_bool(0.5) {
                    dec.kappa[v] = vec![1 + rng.random_range(0..dim)];
                }
            }
            for h in 0..g.num_half_edges() {
                let v = g.half_edge_vertex(h);
                let dim = g.vertex_dim(v).max(0) as u32;
                let used = dec.degree_at(g, v);
                if used < dim && rng.random_bool(0.4) {
                    dec.psi_half.insert(h, 1);
                }
            }
            for &(l, v) in g.legs() {
                let dim = g.vertex_dim(v).max(0) as u32;
                let used = dec.degree_at(g, v);
                if used < dim && rng.random_bool(0.4) {
                    dec.psi_leg.insert(l, 1);
                }
            }
            let reference = DecoratedStratum::try_new(g, &dec).unwrap();

            // Scramble the presentation and transport the decoration.
            let nv = g.num_vertices();
            let mut perm: Vec<usize> = (0..nv).collect();
            for i in (1..nv).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let mut edge_order: Vec<usize> = (0..g.num_edges()).collect();
            for i in (1..edge_order.len()).rev() {
                let j = rng.random_range(0..=i);
                edge_order.swap(i, j);
            }
            let mut vertex_pairs = Vec::new();
            let mut psi_half = BTreeMap::new();
            for (new_e, &old_e) in edge_order.iter().enumerate() {
                let (h1, h2) = g.edges()[old_e];
                let flip = rng.random_bool(0.5);
                let (a, b) = if flip { (h2, h1) } else { (h1, h2) };
                vertex_pairs.push((perm[g.half_edge_vertex(a)], perm[g.half_edge_vertex(b)]));
                if let Some(&e) = dec.psi_half.get(&a) {
                    psi_half.insert(2 * new_e, e);
                }
                if let Some(&e) = dec.psi_half.get(&b) {
                    psi_half.insert(2 * new_e + 1, e);
                }
            }
            let mut genus = vec![0u32; nv];
            let mut legs_at: Vec<Vec<LegLabel>> = vec![Vec::new(); nv];
            let mut kappa = vec![Vec::new(); nv];
            for v in 0..nv {
                genus[perm[v]] = g.genus_of(v);
                kappa[perm[v]] = dec.kappa[v].clone();
            }
            for &(l, v) in g.legs() {
                legs_at[perm[v]].push(l);
            }
            let scrambled = StableGraph::from_edge_list(genus, legs_at, &vertex_pairs).unwrap();
            let sdec = Decoration {
                kappa,
                psi_leg: dec.psi_leg.clone(),
                psi_half,
            };
            let transported = DecoratedStratum::try_new(&scrambled, &sdec).unwrap();
            assert_eq!(reference, transported);
        }
    }
}
