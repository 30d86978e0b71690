use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the box is closed off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Exterior boundary spins pinned to +1, coupled to the box through boundary edges.
    #[default]
    Fixed,
    /// No boundary edges at all.
    Free,
    /// Opposite faces identified; there is no exterior boundary.
    Periodic,
}

impl BoundaryMode {
    /// True when the Hamiltonian is invariant under a global spin flip.
    pub fn has_flip_symmetry(self) -> bool {
        !matches!(self, BoundaryMode::Fixed)
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryMode::Fixed => "fixed",
            BoundaryMode::Free => "free",
            BoundaryMode::Periodic => "periodic",
        })
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixed" | "fixed(+1)" => Ok(BoundaryMode::Fixed),
            "free" => Ok(BoundaryMode::Free),
            "periodic" => Ok(BoundaryMode::Periodic),
            other => Err(Error::Parse(format!("unknown boundary mode {other:?}"))),
        }
    }
}

/// Endpoint of an edge: a site of the box or a vertex of the exterior boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Site(usize),
    Boundary(usize),
}

impl Node {
    pub fn site(self) -> Option<usize> {
        match self {
            Node::Site(i) => Some(i),
            Node::Boundary(_) => None,
        }
    }
}

/// Nearest-neighbor edge. Endpoints are stored in lexicographic coordinate order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub lo: Node,
    pub hi: Node,
}

impl Edge {
    /// Interior edges join two sites of the box.
    pub fn is_interior(&self) -> bool {
        matches!((self.lo, self.hi), (Node::Site(_), Node::Site(_)))
    }

    pub fn other(&self, node: Node) -> Node {
        if self.lo == node {
            self.hi
        } else {
            self.lo
        }
    }

    pub fn touches_site(&self, site: usize) -> bool {
        self.lo == Node::Site(site) || self.hi == Node::Site(site)
    }
}

/// A finite box of Z^d with its exterior boundary and coupling edge set.
///
/// Sites, boundary vertices and edges are all kept in lexicographic order of
/// their coordinates; every index handed out by this type refers to that order.
#[derive(Debug, Clone)]
pub struct BoxGeometry {
    dim: usize,
    sides: Vec<usize>,
    mode: BoundaryMode,
    sites: Vec<Vec<i64>>,
    boundary: Vec<Vec<i64>>,
    boundary_index: HashMap<Vec<i64>, usize>,
    edges: Vec<Edge>,
    interior_edges: Vec<usize>,
    edge_index: HashMap<(Node, Node), usize>,
    incident: Vec<Vec<(usize, Node)>>,
}

impl PartialEq for BoxGeometry {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.sides == other.sides && self.mode == other.mode
    }
}

impl Eq for BoxGeometry {}

/// An l-infinity ball together with its induced edges and its edge boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    pub sites: Vec<usize>,
    pub edges: Vec<usize>,
    pub boundary: Vec<usize>,
}

impl BoxGeometry {
    /// Builds the box `sides[0] x ... x sides[d-1]`.
    pub fn new(dim: usize, sides: &[usize], mode: BoundaryMode) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGeometry("dimension must be at least 1".into()));
        }
        if sides.len() != dim {
            return Err(Error::InvalidGeometry(format!(
                "expected {dim} side lengths, got {}",
                sides.len()
            )));
        }
        if sides.iter().any(|&s| s == 0) {
            return Err(Error::InvalidGeometry("side lengths must be positive".into()));
        }
        if mode == BoundaryMode::Periodic && sides.iter().any(|&s| s < 3) {
            // sides 1 and 2 would produce self-loops and doubled edges
            return Err(Error::InvalidGeometry(
                "periodic boxes need every side >= 3".into(),
            ));
        }

        let n: usize = sides.iter().product();
        let mut sites = Vec::with_capacity(n);
        for idx in 0..n {
            let mut coords = vec![0i64; dim];
            let mut rem = idx;
            for k in (0..dim).rev() {
                coords[k] = (rem % sides[k]) as i64;
                rem /= sides[k];
            }
            sites.push(coords);
        }

        let mut geometry = BoxGeometry {
            dim,
            sides: sides.to_vec(),
            mode,
            sites,
            boundary: Vec::new(),
            boundary_index: HashMap::new(),
            edges: Vec::new(),
            interior_edges: Vec::new(),
            edge_index: HashMap::new(),
            incident: vec![Vec::new(); n],
        };

        if mode == BoundaryMode::Fixed {
            let mut boundary = Vec::new();
            for coords in &geometry.sites {
                for k in 0..dim {
                    for step in [-1i64, 1] {
                        let mut c = coords.clone();
                        c[k] += step;
                        if !geometry.in_box(&c) {
                            boundary.push(c);
                        }
                    }
                }
            }
            boundary.sort();
            boundary.dedup();
            geometry.boundary_index =
                boundary.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
            geometry.boundary = boundary;
        }

        // (coords_lo, coords_hi, lo, hi)
        let mut raw: Vec<(Vec<i64>, Vec<i64>, Node, Node)> = Vec::new();
        for (i, coords) in geometry.sites.iter().enumerate() {
            for k in 0..dim {
                for step in [-1i64, 1] {
                    let mut c = coords.clone();
                    c[k] += step;
                    let neighbor = if geometry.in_box(&c) {
                        Node::Site(geometry.index_of_in_box(&c))
                    } else {
                        match mode {
                            BoundaryMode::Fixed => Node::Boundary(geometry.boundary_index[&c]),
                            BoundaryMode::Free => continue,
                            BoundaryMode::Periodic => {
                                c[k] = c[k].rem_euclid(sides[k] as i64);
                                Node::Site(geometry.index_of_in_box(&c))
                            }
                        }
                    };
                    let here = Node::Site(i);
                    let (a, b) = (coords.clone(), geometry.node_coords(neighbor).to_vec());
                    if a < b {
                        raw.push((a, b, here, neighbor));
                    } else {
                        raw.push((b, a, neighbor, here));
                    }
                }
            }
        }
        raw.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));
        raw.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);

        for (id, (_, _, lo, hi)) in raw.into_iter().enumerate() {
            let edge = Edge { lo, hi };
            geometry.edges.push(edge);
            geometry.edge_index.insert((lo, hi), id);
            geometry.edge_index.insert((hi, lo), id);
            if edge.is_interior() {
                geometry.interior_edges.push(id);
            }
            for node in [lo, hi] {
                if let Node::Site(s) = node {
                    geometry.incident[s].push((id, edge.other(node)));
                }
            }
        }
        Ok(geometry)
    }

    /// Square box of side `side` in dimension `dim`.
    pub fn cube(dim: usize, side: usize, mode: BoundaryMode) -> Result<Self> {
        Self::new(dim, &vec![side; dim], mode)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn mode(&self) -> BoundaryMode {
        self.mode
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn site_coords(&self, site: usize) -> &[i64] {
        &self.sites[site]
    }

    pub fn boundary_vertices(&self) -> &[Vec<i64>] {
        &self.boundary
    }

    pub fn node_coords(&self, node: Node) -> &[i64] {
        match node {
            Node::Site(i) => &self.sites[i],
            Node::Boundary(i) => &self.boundary[i],
        }
    }

    /// All coupling edges, i.e. the edge set of Λ ∪ ∂Λ without ∂Λ-∂Λ pairs.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Ids of edges joining two sites of the box.
    pub fn interior_edges(&self) -> &[usize] {
        &self.interior_edges
    }

    /// Ids of edges joining a site to the exterior boundary.
    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_interior())
    }

    /// `(edge id, other endpoint)` for every coupling edge at `site`.
    pub fn incident(&self, site: usize) -> &[(usize, Node)] {
        &self.incident[site]
    }

    pub fn edge_between(&self, a: Node, b: Node) -> Option<usize> {
        self.edge_index.get(&(a, b)).copied()
    }

    fn in_box(&self, coords: &[i64]) -> bool {
        coords.len() == self.dim
            && coords
                .iter()
                .zip(&self.sides)
                .all(|(&c, &s)| c >= 0 && (c as usize) < s)
    }

    fn index_of_in_box(&self, coords: &[i64]) -> usize {
        coords
            .iter()
            .zip(&self.sides)
            .fold(0usize, |acc, (&c, &s)| acc * s + c as usize)
    }

    pub fn site_index(&self, coords: &[i64]) -> Option<usize> {
        self.in_box(coords).then(|| self.index_of_in_box(coords))
    }

    /// Resolves coordinates to a site or boundary vertex.
    pub fn node_at(&self, coords: &[i64]) -> Option<Node> {
        if let Some(i) = self.site_index(coords) {
            return Some(Node::Site(i));
        }
        self.boundary_index.get(coords).map(|&i| Node::Boundary(i))
    }

    /// Edge id joining the two given coordinate points.
    pub fn edge_at(&self, a: &[i64], b: &[i64]) -> Result<usize> {
        let na = self
            .node_at(a)
            .ok_or_else(|| Error::OutsideBox(format!("{a:?}")))?;
        let nb = self
            .node_at(b)
            .ok_or_else(|| Error::OutsideBox(format!("{b:?}")))?;
        self.edge_between(na, nb)
            .ok_or_else(|| Error::InvalidGeometry(format!("{a:?} and {b:?} are not coupled")))
    }

    /// ℓ∞ distance from a site to the exterior boundary, or `None` when there is none.
    pub fn boundary_distance(&self, site: usize) -> Option<usize> {
        match self.mode {
            BoundaryMode::Periodic => None,
            _ => self.sites[site]
                .iter()
                .zip(&self.sides)
                .map(|(&c, &s)| (c as usize + 1).min(s - c as usize))
                .min(),
        }
    }

    /// Coordinates displaced by `offset`, wrapping on periodic boxes.
    pub fn shifted(&self, site: usize, offset: &[i64]) -> Option<usize> {
        let mut c: Vec<i64> = self.sites[site]
            .iter()
            .zip(offset)
            .map(|(a, b)| a + b)
            .collect();
        if self.mode == BoundaryMode::Periodic {
            for (x, &s) in c.iter_mut().zip(&self.sides) {
                *x = x.rem_euclid(s as i64);
            }
        }
        self.site_index(&c)
    }

    /// The ℓ∞ ball `B(center, radius)`, its induced edges and its edge boundary.
    ///
    /// Fails when the ball is not contained in the box (or would wrap onto itself).
    pub fn ball(&self, center: usize, radius: usize) -> Result<Ball> {
        let r = radius as i64;
        if self.mode == BoundaryMode::Periodic {
            if self.sides.iter().any(|&s| 2 * radius + 1 > s) {
                return Err(Error::OutsideBox(format!(
                    "ball of radius {radius} wraps around the periodic box"
                )));
            }
        } else {
            let c = &self.sites[center];
            if c.iter()
                .zip(&self.sides)
                .any(|(&x, &s)| x - r < 0 || x + r >= s as i64)
            {
                return Err(Error::OutsideBox(format!(
                    "ball of radius {radius} around {c:?}"
                )));
            }
        }
        let width = 2 * radius + 1;
        let count = width.pow(self.dim as u32);
        let mut sites = Vec::with_capacity(count);
        for idx in 0..count {
            let mut rem = idx;
            let mut offset = vec![0i64; self.dim];
            for k in (0..self.dim).rev() {
                offset[k] = (rem % width) as i64 - r;
                rem /= width;
            }
            sites.push(self.shifted(center, &offset).expect("checked containment"));
        }
        sites.sort_unstable();
        let mut member = vec![false; self.site_count()];
        for &s in &sites {
            member[s] = true;
        }
        let (edges, boundary) = self.split_edges(&member);
        Ok(Ball {
            sites,
            edges,
            boundary,
        })
    }

    /// Coupling edges with exactly one endpoint in the given site set.
    pub fn edge_boundary(&self, sites: &[usize]) -> Result<Vec<usize>> {
        let mut member = vec![false; self.site_count()];
        for &s in sites {
            if s >= self.site_count() {
                return Err(Error::OutsideBox(format!("site {s}")));
            }
            member[s] = true;
        }
        Ok(self.split_edges(&member).1)
    }

    /// Splits the coupling edges touching a member set into (induced, boundary).
    pub(crate) fn split_edges(&self, member: &[bool]) -> (Vec<usize>, Vec<usize>) {
        let inside = |n: Node| matches!(n, Node::Site(i) if member[i]);
        let mut induced = Vec::new();
        let mut boundary = Vec::new();
        for (id, e) in self.edges.iter().enumerate() {
            match (inside(e.lo), inside(e.hi)) {
                (true, true) => induced.push(id),
                (true, false) | (false, true) => boundary.push(id),
                _ => {}
            }
        }
        (induced, boundary)
    }

    /// Whether the sites in `member` induce a connected subgraph of Λ.
    ///
    /// With `through_exterior`, sites adjacent to the exterior boundary are
    /// additionally joined to one shared exterior node, which must itself be
    /// reachable when any member touches the boundary.
    pub fn is_connected(&self, member: &[bool], through_exterior: bool) -> bool {
        let n = self.site_count();
        let Some(start) = (0..n).find(|&i| member[i]) else {
            return true;
        };
        let touches_exterior = |i: usize| {
            self.incident[i]
                .iter()
                .any(|(_, other)| matches!(other, Node::Boundary(_)))
        };
        let mut seen = vec![false; n];
        let mut exterior_seen = false;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            for &(_, other) in &self.incident[i] {
                if let Node::Site(j) = other {
                    if member[j] && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            if through_exterior && !exterior_seen && touches_exterior(i) {
                exterior_seen = true;
                for j in 0..n {
                    if member[j] && !seen[j] && touches_exterior(j) {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        (0..n).all(|i| !member[i] || seen[i])
    }

    /// Short textual description used in headers and hashes.
    pub fn describe(&self) -> String {
        let sides: Vec<String> = self.sides.iter().map(|s| s.to_string()).collect();
        format!("d={} sides={} boundary={}", self.dim, sides.join(","), self.mode)
    }

    /// Stable 64-bit fingerprint of the geometry, printed as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.describe().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn format_coords(coords: &[i64]) -> String {
    let parts: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(","))
}

pub fn parse_coords(text: &str) -> Result<Vec<i64>> {
    let inner = text
        .trim()
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("expected (x,y,..), got {text:?}")))?;
    inner
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("coordinate {p:?}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boundary_edge_count(g: &BoxGeometry) -> usize {
        g.boundary_edges().count()
    }

    #[test]
    fn square_box_counts() {
        let g = BoxGeometry::new(2, &[3, 3], BoundaryMode::Fixed).unwrap();
        assert_eq!(g.site_count(), 9);
        assert_eq!(g.interior_edges().len(), 12);
        assert_eq!(boundary_edge_count(&g), 12);
        assert_eq!(g.edge_count(), 24);

        let chain = BoxGeometry::new(1, &[3], BoundaryMode::Fixed).unwrap();
        assert_eq!(chain.site_count(), 3);
        assert_eq!(chain.interior_edges().len(), 2);
        assert_eq!(chain.edge_count(), 4);

        let free = BoxGeometry::new(2, &[3, 3], BoundaryMode::Free).unwrap();
        assert_eq!(free.edge_count(), 12);
        assert_eq!(free.interior_edges().len(), 12);
        assert!(free.boundary_vertices().is_empty());
    }

    #[test]
    fn fixed_box_formulas() {
        for d in 1..=3usize {
            for l in 1..=4usize {
                let g = BoxGeometry::cube(d, l, BoundaryMode::Fixed).unwrap();
                let ld1 = l.pow(d as u32 - 1);
                assert_eq!(g.site_count(), l.pow(d as u32));
                assert_eq!(g.interior_edges().len(), d * ld1 * (l - 1));
                assert_eq!(boundary_edge_count(&g), 2 * d * ld1);
                // partition: every coupling edge is interior or boundary, never both
                assert_eq!(
                    g.edge_count(),
                    g.interior_edges().len() + boundary_edge_count(&g)
                );
            }
        }
    }

    #[test]
    fn periodic_boxes_wrap() {
        let g = BoxGeometry::new(2, &[3, 4], BoundaryMode::Periodic).unwrap();
        assert!(g.boundary_vertices().is_empty());
        assert_eq!(g.edge_count(), 2 * 12);
        assert_eq!(g.interior_edges().len(), g.edge_count());
        assert!(BoxGeometry::new(1, &[2], BoundaryMode::Periodic).is_err());
    }

    #[test]
    fn edges_join_unit_distance_and_never_two_boundary_vertices() {
        for mode in [BoundaryMode::Fixed, BoundaryMode::Free] {
            let g = BoxGeometry::new(3, &[2, 3, 2], mode).unwrap();
            for e in g.edges() {
                let a = g.node_coords(e.lo);
                let b = g.node_coords(e.hi);
                let l1: i64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                assert_eq!(l1, 1);
                assert!(a < b, "endpoints stored in lexicographic order");
                assert!(!matches!((e.lo, e.hi), (Node::Boundary(_), Node::Boundary(_))));
            }
        }
    }

    #[test]
    fn edges_are_lexicographic() {
        let g = BoxGeometry::new(2, &[3, 2], BoundaryMode::Fixed).unwrap();
        let keys: Vec<_> = g
            .edges()
            .iter()
            .map(|e| (g.node_coords(e.lo).to_vec(), g.node_coords(e.hi).to_vec()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(BoxGeometry::new(0, &[], BoundaryMode::Fixed).is_err());
        assert!(BoxGeometry::new(2, &[3], BoundaryMode::Fixed).is_err());
        assert!(BoxGeometry::new(2, &[3, 0], BoundaryMode::Fixed).is_err());
    }

    #[test]
    fn balls() {
        let g = BoxGeometry::cube(2, 5, BoundaryMode::Fixed).unwrap();
        let center = g.site_index(&[2, 2]).unwrap();
        let b1 = g.ball(center, 1).unwrap();
        assert_eq!((b1.sites.len(), b1.edges.len(), b1.boundary.len()), (9, 12, 12));
        let b0 = g.ball(center, 0).unwrap();
        assert_eq!(b0.sites, vec![center]);
        assert!(b0.edges.is_empty());
        assert_eq!(b0.boundary.len(), 4);
        assert!(g.ball(center, 3).is_err());
        assert!(g.ball(g.site_index(&[0, 2]).unwrap(), 1).is_err());

        // a ball touching the box edge reaches boundary edges
        let full = g.ball(center, 2).unwrap();
        assert_eq!(full.boundary.len(), 20);
    }

    #[test]
    fn ball_cardinality_matches_enumeration() {
        // |B(v,M)| = (2M+1)^d and |B(v,M)*| = d (2M)(2M+1)^(d-1)
        for d in 1..=3usize {
            for m in 0..=2usize {
                let side = 2 * m + 3;
                let g = BoxGeometry::cube(d, side, BoundaryMode::Fixed).unwrap();
                let center = g.site_index(&vec![(m + 1) as i64; d]).unwrap();
                let b = g.ball(center, m).unwrap();
                let w = 2 * m + 1;
                assert_eq!(b.sites.len(), w.pow(d as u32));
                assert_eq!(b.edges.len(), d * (2 * m) * w.pow(d as u32 - 1));
                assert_eq!(b.boundary.len(), 2 * d * w.pow(d as u32 - 1));
            }
        }
    }

    #[test]
    fn edge_boundaries() {
        let g = BoxGeometry::cube(2, 3, BoundaryMode::Fixed).unwrap();
        let x = g.site_index(&[1, 1]).unwrap();
        assert_eq!(g.edge_boundary(&[x]).unwrap().len(), 4);
        let all: Vec<usize> = (0..g.site_count()).collect();
        let b = g.edge_boundary(&all).unwrap();
        assert_eq!(b, g.boundary_edges().collect::<Vec<_>>());

        let free = BoxGeometry::cube(2, 3, BoundaryMode::Free).unwrap();
        assert!(free.edge_boundary(&all).unwrap().is_empty());
        assert!(g.edge_boundary(&[99]).is_err());
    }

    #[test]
    fn connectivity() {
        let g = BoxGeometry::cube(2, 3, BoundaryMode::Fixed).unwrap();
        let mut member = vec![false; 9];
        member[g.site_index(&[0, 0]).unwrap()] = true;
        member[g.site_index(&[2, 2]).unwrap()] = true;
        assert!(!g.is_connected(&member, false));
        // both corners touch the exterior
        assert!(g.is_connected(&member, true));
        member[g.site_index(&[2, 2]).unwrap()] = false;
        member[g.site_index(&[1, 1]).unwrap()] = true;
        assert!(!g.is_connected(&member, true));
    }

    #[test]
    fn coordinate_text() {
        assert_eq!(format_coords(&[1, -2]), "(1,-2)");
        assert_eq!(parse_coords("( 1, -2)").unwrap(), vec![1, -2]);
        assert!(parse_coords("1,2").is_err());
    }
}
