//! Directed acyclic causal graphs over observed and latent nodes.
//!
//! Besides the graph container this module hosts d-separation (a
//! reachability search over `(node, direction)` states), the backdoor
//! criterion, and the two families of graphical checks used before trusting
//! the proximal g-formula: the classic proxy conditions and the relaxed
//! equivalence-class conditions that allow extra latent confounders.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` appears in more than one query set")]
    OverlappingSets(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("graph has a cycle through `{0}`")]
    Cycle(String),
    #[error("invalid node name {0:?}")]
    InvalidName(String),
    #[error("invalid role labeling: {0}")]
    InvalidLabeling(String),
    #[error("no level count given for `{0}`")]
    MissingLevels(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Name of a node, unique within its graph.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        let valid = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_alphanumeric() || c == '_' || c == '*' || c == '\'');
        if valid {
            Ok(NodeId(name))
        } else {
            Err(GraphError::InvalidName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for NodeId {
    type Error = GraphError;
    fn try_from(s: String) -> Result<Self> {
        NodeId::new(s)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Observed,
    Latent,
}

/// A DAG whose nodes are tagged observed or latent.
///
/// Immutable once built; every constructor validates names, duplicate
/// edges, self-loops and acyclicity.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalGraph {
    names: Vec<NodeId>,
    kinds: Vec<NodeKind>,
    index: HashMap<NodeId, usize>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl CausalGraph {
    pub fn new(nodes: &[(&str, NodeKind)], edges: &[(&str, &str)]) -> Result<Self> {
        let mut names = Vec::with_capacity(nodes.len());
        let mut kinds = Vec::with_capacity(nodes.len());
        let mut index = HashMap::new();
        for &(name, kind) in nodes {
            let id = NodeId::new(name)?;
            if index.insert(id.clone(), names.len()).is_some() {
                return Err(GraphError::DuplicateNode(name.to_string()));
            }
            names.push(id);
            kinds.push(kind);
        }
        let mut graph = CausalGraph {
            parents: vec![Vec::new(); names.len()],
            children: vec![Vec::new(); names.len()],
            names,
            kinds,
            index,
        };
        for &(p, c) in edges {
            graph.insert_edge(p, c)?;
        }
        graph.topological_order()?;
        Ok(graph)
    }

    fn insert_edge(&mut self, parent: &str, child: &str) -> Result<()> {
        let p = self.idx(parent)?;
        let c = self.idx(child)?;
        if p == c {
            return Err(GraphError::SelfLoop(parent.to_string()));
        }
        if self.children[p].contains(&c) {
            return Err(GraphError::DuplicateEdge(parent.to_string(), child.to_string()));
        }
        self.children[p].push(c);
        self.parents[c].push(p);
        Ok(())
    }

    /// Copy of the graph with one more edge; fails if it would create a cycle.
    pub fn with_edge(&self, parent: &str, child: &str) -> Result<Self> {
        let mut g = self.clone();
        g.insert_edge(parent, child)?;
        g.topological_order()?;
        Ok(g)
    }

    /// Copy of the graph with every edge leaving `node` removed.
    pub fn without_outgoing(&self, node: &str) -> Result<Self> {
        let v = self.idx(node)?;
        let mut g = self.clone();
        for c in std::mem::take(&mut g.children[v]) {
            g.parents[c].retain(|&p| p != v);
        }
        Ok(g)
    }

    pub(crate) fn idx(&self, name: &str) -> Result<usize> {
        NodeId::new(name)
            .ok()
            .and_then(|id| self.index.get(&id).copied())
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.idx(name).is_ok()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&NodeId, NodeKind)> + '_ {
        self.names.iter().zip(self.kinds.iter().copied())
    }

    pub fn node_names(&self) -> Vec<&str> {
        self.names.iter().map(NodeId::as_str).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&NodeId, &NodeId)> + '_ {
        self.children
            .iter()
            .enumerate()
            .flat_map(move |(p, cs)| cs.iter().map(move |&c| (&self.names[p], &self.names[c])))
    }

    pub fn kind(&self, name: &str) -> Result<NodeKind> {
        Ok(self.kinds[self.idx(name)?])
    }

    pub fn parents(&self, name: &str) -> Result<BTreeSet<NodeId>> {
        let v = self.idx(name)?;
        Ok(self.parents[v].iter().map(|&p| self.names[p].clone()).collect())
    }

    pub fn children(&self, name: &str) -> Result<BTreeSet<NodeId>> {
        let v = self.idx(name)?;
        Ok(self.children[v].iter().map(|&c| self.names[c].clone()).collect())
    }

    /// Strict descendants of `name`.
    pub fn descendants(&self, name: &str) -> Result<BTreeSet<NodeId>> {
        let v = self.idx(name)?;
        let mut seen = vec![false; self.len()];
        let mut stack = self.children[v].clone();
        while let Some(u) = stack.pop() {
            if !std::mem::replace(&mut seen[u], true) {
                stack.extend(&self.children[u]);
            }
        }
        Ok(self.collect_flags(&seen))
    }

    /// Strict ancestors of `name`.
    pub fn ancestors(&self, name: &str) -> Result<BTreeSet<NodeId>> {
        let v = self.idx(name)?;
        let seen = self.ancestor_flags(&self.parents[v]);
        Ok(self.collect_flags(&seen))
    }

    fn collect_flags(&self, flags: &[bool]) -> BTreeSet<NodeId> {
        flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| self.names[i].clone())
            .collect()
    }

    /// Flags every node that is in `seeds` or an ancestor of one.
    fn ancestor_flags(&self, seeds: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut stack = seeds.to_vec();
        while let Some(u) = stack.pop() {
            if !std::mem::replace(&mut seen[u], true) {
                stack.extend(&self.parents[u]);
            }
        }
        seen
    }

    /// Kahn's algorithm; ties broken by insertion order.
    pub fn topological_order(&self) -> Result<Vec<NodeId>> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(self.len());
        while let Some(v) = queue.pop_front() {
            order.push(self.names[v].clone());
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() < self.len() {
            let stuck = (0..self.len()).find(|&v| indegree[v] > 0).unwrap_or(0);
            return Err(GraphError::Cycle(self.names[stuck].to_string()));
        }
        Ok(order)
    }

    fn index_set(&self, names: &[&str]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.idx(n)).collect()
    }

    fn check_disjoint(&self, sets: &[&[usize]]) -> Result<()> {
        let mut owner = vec![usize::MAX; self.len()];
        for (k, set) in sets.iter().enumerate() {
            for &v in *set {
                if owner[v] != usize::MAX && owner[v] != k {
                    return Err(GraphError::OverlappingSets(self.names[v].to_string()));
                }
                owner[v] = k;
            }
        }
        Ok(())
    }

    /// True iff `c` blocks every path between a node of `a` and a node of `b`.
    pub fn d_separated(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<bool> {
        Ok(self.d_connecting_trail(a, b, c)?.is_none())
    }

    /// An unblocked trail from `a` to `b` given `c`, if one exists.
    pub fn d_connecting_trail(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<Option<Trail>> {
        let (a, b, c) = (self.index_set(a)?, self.index_set(b)?, self.index_set(c)?);
        self.check_disjoint(&[&a, &b, &c])?;
        Ok(self.reach(&a, &b, &c))
    }

    // Reachability over (node, direction). `UP` means the trail arrived from a
    // child (or starts here), `DOWN` means it arrived from a parent. A node in
    // `c` passes a trail only as a collider; a collider passes only if it is in
    // `c` or has a descendant there, i.e. it is an ancestor-or-member of `c`.
    fn reach(&self, a: &[usize], b: &[usize], c: &[usize]) -> Option<Trail> {
        const UP: usize = 0;
        const DOWN: usize = 1;
        let n = self.len();
        let mut in_c = vec![false; n];
        for &v in c {
            in_c[v] = true;
        }
        let mut in_b = vec![false; n];
        for &v in b {
            in_b[v] = true;
        }
        let opens_collider = self.ancestor_flags(c);

        let mut pred: Vec<[Option<Option<(usize, usize)>>; 2]> = vec![[None, None]; n];
        let mut queue = VecDeque::new();
        for &s in a {
            if pred[s][UP].is_none() {
                pred[s][UP] = Some(None);
                queue.push_back((s, UP));
            }
        }
        while let Some((v, dir)) = queue.pop_front() {
            if in_b[v] {
                return Some(self.rebuild_trail(&pred, (v, dir)));
            }
            let mut visit = |u: usize, d: usize, queue: &mut VecDeque<(usize, usize)>| {
                if pred[u][d].is_none() {
                    pred[u][d] = Some(Some((v, dir)));
                    queue.push_back((u, d));
                }
            };
            if dir == UP && !in_c[v] {
                for &p in &self.parents[v] {
                    visit(p, UP, &mut queue);
                }
                for &ch in &self.children[v] {
                    visit(ch, DOWN, &mut queue);
                }
            } else if dir == DOWN {
                if !in_c[v] {
                    for &ch in &self.children[v] {
                        visit(ch, DOWN, &mut queue);
                    }
                }
                if opens_collider[v] {
                    for &p in &self.parents[v] {
                        visit(p, UP, &mut queue);
                    }
                }
            }
        }
        None
    }

    fn rebuild_trail(
        &self,
        pred: &[[Option<Option<(usize, usize)>>; 2]],
        end: (usize, usize),
    ) -> Trail {
        let mut states = vec![end];
        let mut cur = end;
        while let Some(Some(prev)) = pred[cur.0][cur.1] {
            states.push(prev);
            cur = prev;
        }
        states.reverse();
        Trail {
            nodes: states.iter().map(|&(v, _)| self.names[v].clone()).collect(),
            // arriving DOWN at the next node means the edge points forward
            forward: states.windows(2).map(|w| w[1].1 == 1).collect(),
        }
    }

    /// Backdoor criterion for `adj` relative to the ordered pair (`x`, `y`).
    pub fn is_backdoor_admissible(&self, adj: &[&str], x: &str, y: &str) -> Result<bool> {
        Ok(matches!(self.backdoor_status(adj, x, y)?, Status::Holds))
    }

    /// Backdoor criterion with a witness on failure: either a member of `adj`
    /// that descends from `x`, or an open trail into `x`.
    pub fn backdoor_status(&self, adj: &[&str], x: &str, y: &str) -> Result<Status> {
        let (xi, yi) = (self.idx(x)?, self.idx(y)?);
        let adj_idx = self.index_set(adj)?;
        self.check_disjoint(&[&[xi], &[yi], &adj_idx])?;
        let desc = self.descendants(x)?;
        if let Some(bad) = adj.iter().find(|a| desc.iter().any(|d| d.as_str() == **a)) {
            return Ok(Status::Fails(Witness::Descendant(NodeId::new(*bad)?)));
        }
        // trails into x are exactly the trails that survive removing x's out-edges
        let cut = self.without_outgoing(x)?;
        Ok(match cut.reach(&[xi], &[yi], &adj_idx) {
            Some(trail) => Status::Fails(Witness::Path(trail)),
            None => Status::Holds,
        })
    }

    /// `parents(x)` without the designated low-dimensional confounder.
    pub fn surrogate_parents(&self, roles: &RoleLabeling) -> Result<BTreeSet<NodeId>> {
        roles.validate(self)?;
        let mut t = self.parents(roles.x.as_str())?;
        t.remove(&roles.u);
        Ok(t)
    }

    fn independence(&self, id: &'static str, a: &[&str], b: &[&str], c: &[&str]) -> Result<Criterion> {
        let status = match self.d_connecting_trail(a, b, c)? {
            Some(trail) => Status::Fails(Witness::Path(trail)),
            None => Status::Holds,
        };
        Ok(Criterion {
            id,
            statement: format!("{} _||_ {} | {}", set_str(a), set_str(b), set_str(c)),
            status,
        })
    }

    /// The four graphical conditions that define the relaxed model class in
    /// which the proximal g-formula stays valid.
    pub fn check_equivalence_class(&self, roles: &RoleLabeling) -> Result<CriteriaReport> {
        roles.validate(self)?;
        let (x, y, z, w, u) = roles.strs();
        let t = self.surrogate_parents(roles)?;
        let t: Vec<&str> = t.iter().map(NodeId::as_str).collect();

        let mut entries = vec![
            self.independence("i", &[w], &[z, x], &[u])?,
            self.independence("ii", &[z], &[y], &[u, x])?,
            self.independence("iii", &t, &[y], &[u, x])?,
        ];
        let u_is_parent = self.parents(x)?.contains(&roles.u);
        entries.push(if u_is_parent {
            Criterion {
                id: "iv",
                statement: format!("{{{x}}} _||_ {{{u}}} | {}", set_str(&t)),
                status: Status::Vacuous,
            }
        } else {
            self.independence("iv", &[x], &[u], &t)?
        });
        Ok(CriteriaReport { entries })
    }

    /// Cardinality, backdoor and conditional-independence conditions of the
    /// original proxy identification result. The rank condition depends on
    /// data and is checked by the estimators instead.
    pub fn check_proxy_conditions(
        &self,
        roles: &RoleLabeling,
        levels: &BTreeMap<String, usize>,
    ) -> Result<CriteriaReport> {
        roles.validate(self)?;
        let (x, y, z, w, u) = roles.strs();
        let level = |n: &str| levels.get(n).copied().ok_or_else(|| GraphError::MissingLevels(n.into()));
        let (lz, lw, lu) = (level(z)?, level(w)?, level(u)?);
        let cardinality = if lz == lw && lw == lu {
            Status::Holds
        } else {
            Status::Fails(Witness::Cardinality { z: lz, w: lw, u: lu })
        };
        Ok(CriteriaReport {
            entries: vec![
                Criterion {
                    id: "1",
                    statement: format!("|{z}| = |{w}| = |{u}|"),
                    status: cardinality,
                },
                Criterion {
                    id: "2",
                    statement: format!("{{{u}}} is backdoor-admissible for {x} -> {y}"),
                    status: self.backdoor_status(&[u], x, y)?,
                },
                self.independence("3i", &[w], &[z, x], &[u])?,
                self.independence("3ii", &[z], &[y], &[u, x])?,
            ],
        })
    }

    /// Parses the adjacency-list exchange format: `latent:` / `observed:`
    /// header lines, then one `parent -> child` edge per line. `#` starts a
    /// comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut nodes: Vec<(String, NodeKind)> = Vec::new();
        let mut edges: Vec<(String, String)> = Vec::new();
        let declare = |nodes: &mut Vec<(String, NodeKind)>, name: &str, kind: Option<NodeKind>, line| {
            let id = NodeId::new(name).map_err(|_| GraphError::Parse {
                line,
                msg: format!("invalid node name {name:?}"),
            })?;
            match nodes.iter().position(|(n, _)| n == id.as_str()) {
                Some(i) => {
                    if let Some(k) = kind {
                        if nodes[i].1 != k {
                            return Err(GraphError::Parse {
                                line,
                                msg: format!("node `{name}` declared both latent and observed"),
                            });
                        }
                    }
                }
                None => nodes.push((id.0, kind.unwrap_or(NodeKind::Observed))),
            }
            Ok(())
        };
        let mut seen_edge = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some((head, rest)) = content.split_once(':') {
                let kind = match head.trim() {
                    "latent" => NodeKind::Latent,
                    "observed" => NodeKind::Observed,
                    other => {
                        return Err(GraphError::Parse { line, msg: format!("unknown header `{other}`") })
                    }
                };
                if seen_edge {
                    return Err(GraphError::Parse { line, msg: "header after edge list".into() });
                }
                for name in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    declare(&mut nodes, name, Some(kind), line)?;
                }
            } else if let Some((p, c)) = content.split_once("->") {
                let (p, c) = (p.trim(), c.trim());
                declare(&mut nodes, p, None, line)?;
                declare(&mut nodes, c, None, line)?;
                edges.push((p.to_string(), c.to_string()));
                seen_edge = true;
            } else {
                return Err(GraphError::Parse { line, msg: format!("expected `parent -> child`, got `{content}`") });
            }
        }
        let node_refs: Vec<(&str, NodeKind)> = nodes.iter().map(|(n, k)| (n.as_str(), *k)).collect();
        let edge_refs: Vec<(&str, &str)> = edges.iter().map(|(p, c)| (p.as_str(), c.as_str())).collect();
        CausalGraph::new(&node_refs, &edge_refs)
    }
}

impl FromStr for CausalGraph {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self> {
        CausalGraph::parse(s)
    }
}

impl fmt::Display for CausalGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let of_kind = |k: NodeKind| -> Vec<&str> {
            self.nodes().filter(|(_, kind)| *kind == k).map(|(n, _)| n.as_str()).collect()
        };
        writeln!(f, "latent: {}", of_kind(NodeKind::Latent).join(", "))?;
        writeln!(f, "observed: {}", of_kind(NodeKind::Observed).join(", "))?;
        for (p, c) in self.edges() {
            writeln!(f, "{p} -> {c}")?;
        }
        Ok(())
    }
}

fn set_str(names: &[&str]) -> String {
    format!("{{{}}}", names.join(", "))
}

/// A walk along graph edges, printed as e.g. `W -> X <- U`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Trail {
    pub nodes: Vec<NodeId>,
    /// `forward[i]` is true when the edge runs `nodes[i] -> nodes[i + 1]`.
    pub forward: Vec<bool>,
}

impl fmt::Display for Trail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.nodes[0])?;
        for (node, fwd) in self.nodes[1..].iter().zip(&self.forward) {
            write!(f, " {} {node}", if *fwd { "->" } else { "<-" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Witness {
    Path(Trail),
    Descendant(NodeId),
    Cardinality { z: usize, w: usize, u: usize },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Path(t) => write!(f, "open path {t}"),
            Witness::Descendant(n) => write!(f, "`{n}` is a descendant of the treatment"),
            Witness::Cardinality { z, w, u } => write!(f, "levels z={z}, w={w}, u={u}"),
        }
    }
}

/// Outcome of one condition. Only failures carry a witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Status {
    Holds,
    /// The condition does not apply to this graph shape.
    Vacuous,
    Fails(Witness),
}

impl Status {
    pub fn is_ok(&self) -> bool {
        !matches!(self, Status::Fails(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Criterion {
    pub id: &'static str,
    pub statement: String,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriteriaReport {
    pub entries: Vec<Criterion>,
}

impl CriteriaReport {
    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.status.is_ok())
    }

    pub fn get(&self, id: &str) -> Option<&Criterion> {
        self.entries.iter().find(|e| e.id == id)
    }
}

impl fmt::Display for CriteriaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let verdict = match &e.status {
                Status::Holds => "holds".to_string(),
                Status::Vacuous => "vacuous (holds)".to_string(),
                Status::Fails(w) => format!("FAILS: {w}"),
            };
            writeln!(f, "({:>3}) {:<44} {verdict}", e.id, e.statement)?;
        }
        Ok(())
    }
}

/// Assignment of the treatment, outcome, two proxies and the designated
/// confounder to graph nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleLabeling {
    pub x: NodeId,
    pub y: NodeId,
    pub z: NodeId,
    pub w: NodeId,
    pub u: NodeId,
}

impl RoleLabeling {
    pub fn new(x: &str, y: &str, z: &str, w: &str, u: &str) -> Result<Self> {
        Ok(RoleLabeling {
            x: NodeId::new(x)?,
            y: NodeId::new(y)?,
            z: NodeId::new(z)?,
            w: NodeId::new(w)?,
            u: NodeId::new(u)?,
        })
    }

    /// X, Y, Z, W and U mapped to the nodes of the same name.
    pub fn canonical() -> Self {
        RoleLabeling::new("X", "Y", "Z", "W", "U").expect("static names")
    }

    fn strs(&self) -> (&str, &str, &str, &str, &str) {
        (self.x.as_str(), self.y.as_str(), self.z.as_str(), self.w.as_str(), self.u.as_str())
    }

    pub fn validate(&self, g: &CausalGraph) -> Result<()> {
        let (x, y, z, w, u) = self.strs();
        let all = [x, y, z, w, u];
        for (i, a) in all.iter().enumerate() {
            if all[..i].contains(a) {
                return Err(GraphError::InvalidLabeling(format!("role node `{a}` used twice")));
            }
        }
        for n in [x, y, z, w] {
            if g.kind(n)? != NodeKind::Observed {
                return Err(GraphError::InvalidLabeling(format!("`{n}` must be observed")));
            }
        }
        if g.kind(u)? != NodeKind::Latent {
            return Err(GraphError::InvalidLabeling(format!("`{u}` must be latent")));
        }
        Ok(())
    }
}

impl FromStr for RoleLabeling {
    type Err = GraphError;

    /// `canonical` or a comma-separated list such as `x=X,y=Y,z=Z,w=W,u=Ustar`.
    /// Roles left out keep their canonical node.
    fn from_str(s: &str) -> Result<Self> {
        let mut roles = RoleLabeling::canonical();
        if s.trim() == "canonical" {
            return Ok(roles);
        }
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (role, node) = part
                .split_once('=')
                .ok_or_else(|| GraphError::InvalidLabeling(format!("expected role=node, got `{part}`")))?;
            let node = NodeId::new(node.trim())?;
            match role.trim() {
                "x" => roles.x = node,
                "y" => roles.y = node,
                "z" => roles.z = node,
                "w" => roles.w = node,
                "u" => roles.u = node,
                other => return Err(GraphError::InvalidLabeling(format!("unknown role `{other}`"))),
            }
        }
        Ok(roles)
    }
}

/// Edge lists of the reference graphs.
pub mod reference {
    use super::{CausalGraph, NodeKind};

    /// Unobserved confounder between treatment and outcome.
    pub const FIG_1A: &[(&str, &str)] = &[("X", "Y"), ("U", "X"), ("U", "Y")];
    /// Confounded pair with an instrument.
    pub const FIG_1B: &[(&str, &str)] = &[("Z", "X"), ("X", "Y"), ("U", "X"), ("U", "Y")];
    /// Observed mediator of the confounding; Z is backdoor-admissible.
    pub const FIG_1C: &[(&str, &str)] = &[("X", "Y"), ("U", "X"), ("U", "Z"), ("Z", "Y")];
    /// The canonical two-proxy graph.
    pub const FIG_1D: &[(&str, &str)] = &[
        ("X", "Y"),
        ("U", "X"),
        ("U", "Y"),
        ("U", "W"),
        ("U", "Z"),
        ("W", "Y"),
        ("Z", "X"),
    ];
    /// Post-treatment proxy Z.
    pub const FIG_2A: &[(&str, &str)] = &[
        ("X", "Y"),
        ("U", "X"),
        ("U", "Y"),
        ("U", "W"),
        ("U", "Z"),
        ("W", "Y"),
        ("X", "Z"),
    ];
    /// Extra high-dimensional confounder `Ustar` upstream of U.
    pub const FIG_2B: &[(&str, &str)] = &[
        ("X", "Y"),
        ("U", "X"),
        ("Ustar", "U"),
        ("Ustar", "W"),
        ("Ustar", "Y"),
        ("U", "Y"),
        ("U", "W"),
        ("U", "Z"),
        ("W", "Y"),
        ("Z", "X"),
    ];
    /// U as a bottleneck between `U1` (treatment side) and `U2` (outcome side).
    pub const FIG_2C: &[(&str, &str)] = &[
        ("X", "Y"),
        ("U1", "U"),
        ("U", "U2"),
        ("U2", "W"),
        ("U2", "Y"),
        ("U1", "Z"),
        ("U1", "X"),
        ("W", "Y"),
        ("Z", "X"),
        ("U", "X"),
        ("U", "Y"),
        ("U", "W"),
        ("U", "Z"),
    ];

    const LATENT: &[&str] = &["U", "Ustar", "U1", "U2"];

    /// Builds a graph from an edge list; `U*` names are latent.
    pub fn build(edges: &[(&str, &str)]) -> CausalGraph {
        let mut nodes: Vec<(&str, NodeKind)> = Vec::new();
        for &(p, c) in edges {
            for n in [p, c] {
                if !nodes.iter().any(|(m, _)| *m == n) {
                    let kind = if LATENT.contains(&n) { NodeKind::Latent } else { NodeKind::Observed };
                    nodes.push((n, kind));
                }
            }
        }
        CausalGraph::new(&nodes, edges).expect("reference graphs are valid DAGs")
    }

    pub fn fig1a() -> CausalGraph {
        build(FIG_1A)
    }
    pub fn fig1b() -> CausalGraph {
        build(FIG_1B)
    }
    pub fn fig1c() -> CausalGraph {
        build(FIG_1C)
    }
    pub fn fig1d() -> CausalGraph {
        build(FIG_1D)
    }
    pub fn fig2a() -> CausalGraph {
        build(FIG_2A)
    }
    pub fn fig2b() -> CausalGraph {
        build(FIG_2B)
    }
    pub fn fig2c() -> CausalGraph {
        build(FIG_2C)
    }

    /// Looks a reference graph up by a short name such as `fig1d` or `2b`.
    pub fn by_name(name: &str) -> Option<CausalGraph> {
        let key = name.trim().to_ascii_lowercase();
        let key = key.trim_start_matches("fig").trim_start_matches('.');
        Some(match key {
            "1a" => fig1a(),
            "1b" => fig1b(),
            "1c" => fig1c(),
            "1d" => fig1d(),
            "2a" => fig2a(),
            "2b" => fig2b(),
            "2c" => fig2c(),
            _ => return None,
        })
    }
}
