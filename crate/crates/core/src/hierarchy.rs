//! Base types, hierarchies of base types, type environments, `min_T` and
//! P-safety.
//!
//! A hierarchy is a finite forest over base types. `lt(a, b)` holds when `a`
//! is a strict ancestor of `b`. Ancestor sets are precomputed on construction
//! so queries are constant time.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::term::{Name, Term, TypeExpr};

/// Interned base type. Equality is by id; the interner guarantees that equal
/// displays receive equal ids.
#[derive(Clone)]
pub struct BaseTypeRef {
    id: u32,
    display: Arc<str>,
}

fn base_interner() -> &'static Mutex<HashMap<Arc<str>, BaseTypeRef>> {
    static INTERNER: OnceLock<Mutex<HashMap<Arc<str>, BaseTypeRef>>> = OnceLock::new();
    INTERNER.get_or_init(|| Mutex::new(HashMap::new()))
}

impl BaseTypeRef {
    pub fn named(display: &str) -> BaseTypeRef {
        let mut table = base_interner().lock().expect("base type interner poisoned");
        if let Some(b) = table.get(display) {
            return b.clone();
        }
        let display: Arc<str> = Arc::from(display);
        let b = BaseTypeRef { id: table.len() as u32, display: display.clone() };
        table.insert(display, b.clone());
        b
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn display(&self) -> &str {
        &self.display
    }
}

impl PartialEq for BaseTypeRef {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for BaseTypeRef {}
impl std::hash::Hash for BaseTypeRef {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}
impl PartialOrd for BaseTypeRef {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for BaseTypeRef {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}
impl fmt::Display for BaseTypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}
impl fmt::Debug for BaseTypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}
impl Serialize for BaseTypeRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.display)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("unknown base type `{0}`")]
    UnknownNode(String),
    #[error("base type `{child}` has two parents (`{first}` and `{second}`)")]
    TwoParents { child: String, first: String, second: String },
    #[error("cycle through base type `{0}`")]
    Cycle(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("free name `{0}` has no type in the environment")]
    FreeNameMissing(String),
    #[error("restriction `{0}` is not annotated")]
    Unannotated(String),
}

/// A finite forest of base types.
#[derive(Clone, Debug, Default)]
pub struct Hierarchy {
    nodes: Vec<BaseTypeRef>,
    parent: HashMap<BaseTypeRef, BaseTypeRef>,
    ancestors: HashMap<BaseTypeRef, HashSet<BaseTypeRef>>,
}

#[derive(Serialize, Deserialize)]
struct HierarchyJson {
    #[serde(default)]
    nodes: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

impl Hierarchy {
    /// Builds a hierarchy from nodes and `(parent, child)` edges. Nodes
    /// mentioned only in edges are added implicitly.
    pub fn new(
        nodes: impl IntoIterator<Item = BaseTypeRef>,
        edges: impl IntoIterator<Item = (BaseTypeRef, BaseTypeRef)>,
    ) -> Result<Hierarchy, HierarchyError> {
        let mut order: Vec<BaseTypeRef> = Vec::new();
        let mut seen = HashSet::new();
        let mut push = |b: &BaseTypeRef, order: &mut Vec<BaseTypeRef>| {
            if seen.insert(b.clone()) {
                order.push(b.clone());
            }
        };
        for n in nodes {
            push(&n, &mut order);
        }
        let mut parent: HashMap<BaseTypeRef, BaseTypeRef> = HashMap::new();
        for (p, c) in edges {
            push(&p, &mut order);
            push(&c, &mut order);
            if let Some(old) = parent.get(&c) {
                if *old != p {
                    return Err(HierarchyError::TwoParents {
                        child: c.to_string(),
                        first: old.to_string(),
                        second: p.to_string(),
                    });
                }
            }
            parent.insert(c, p);
        }
        let mut ancestors = HashMap::new();
        for n in &order {
            let mut set = HashSet::new();
            let mut cur = n.clone();
            while let Some(p) = parent.get(&cur) {
                if p == n || !set.insert(p.clone()) {
                    return Err(HierarchyError::Cycle(n.to_string()));
                }
                cur = p.clone();
            }
            ancestors.insert(n.clone(), set);
        }
        Ok(Hierarchy { nodes: order, parent, ancestors })
    }

    /// The chain `bases[0] < bases[1] < ...`.
    pub fn chain(bases: &[BaseTypeRef]) -> Hierarchy {
        let edges = bases.windows(2).map(|w| (w[0].clone(), w[1].clone()));
        Hierarchy::new(bases.iter().cloned(), edges).expect("a chain of distinct bases is a forest")
    }

    /// All nodes pairwise incomparable.
    pub fn discrete(bases: impl IntoIterator<Item = BaseTypeRef>) -> Hierarchy {
        Hierarchy::new(bases, std::iter::empty()).expect("no edges")
    }

    pub fn nodes(&self) -> &[BaseTypeRef] {
        &self.nodes
    }

    pub fn contains(&self, b: &BaseTypeRef) -> bool {
        self.ancestors.contains_key(b)
    }

    pub fn parent_of(&self, b: &BaseTypeRef) -> Option<&BaseTypeRef> {
        self.parent.get(b)
    }

    /// `(parent, child)` pairs in node order.
    pub fn edges(&self) -> Vec<(BaseTypeRef, BaseTypeRef)> {
        self.nodes.iter().filter_map(|c| self.parent.get(c).map(|p| (p.clone(), c.clone()))).collect()
    }

    /// Strict ancestor test; false when either node is unknown.
    pub fn lt(&self, a: &BaseTypeRef, b: &BaseTypeRef) -> bool {
        self.ancestors.get(b).is_some_and(|anc| anc.contains(a))
    }

    pub fn try_lt(&self, a: &BaseTypeRef, b: &BaseTypeRef) -> Result<bool, HierarchyError> {
        for n in [a, b] {
            if !self.contains(n) {
                return Err(HierarchyError::UnknownNode(n.to_string()));
            }
        }
        Ok(self.lt(a, b))
    }

    /// Every element of `set` strictly below `b`; vacuously true.
    pub fn lt_set<'a>(&self, set: impl IntoIterator<Item = &'a BaseTypeRef>, b: &BaseTypeRef) -> bool {
        set.into_iter().all(|s| self.lt(s, b))
    }

    /// Parses the text format (`parent < child` or a lone node per line,
    /// `//` or `#` comments) or the JSON object format.
    pub fn parse(source: &str) -> Result<Hierarchy, HierarchyError> {
        if source.trim_start().starts_with('{') {
            let raw: HierarchyJson = serde_json::from_str(source)
                .map_err(|e| HierarchyError::Syntax { line: e.line(), message: e.to_string() })?;
            let nodes = raw.nodes.iter().map(|n| BaseTypeRef::named(n));
            let edges = raw.edges.iter().map(|(p, c)| (BaseTypeRef::named(p), BaseTypeRef::named(c)));
            return Hierarchy::new(nodes, edges);
        }
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('<').map(str::trim).collect();
            if parts.iter().any(|p| !is_ident(p)) {
                return Err(HierarchyError::Syntax {
                    line: idx + 1,
                    message: format!("expected `parent < child` or a node name, found `{line}`"),
                });
            }
            match parts.as_slice() {
                [n] => nodes.push(BaseTypeRef::named(n)),
                chain => {
                    for w in chain.windows(2) {
                        edges.push((BaseTypeRef::named(w[0]), BaseTypeRef::named(w[1])));
                    }
                }
            }
        }
        Hierarchy::new(nodes, edges)
    }

    /// Text format accepted by [`Hierarchy::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            match self.parent.get(n) {
                Some(p) => out.push_str(&format!("{p} < {n}\n")),
                None if !self.parent.values().any(|p| p == n) => out.push_str(&format!("{n}\n")),
                None => {}
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let raw = HierarchyJson {
            nodes: self.nodes.iter().map(|n| n.to_string()).collect(),
            edges: self.edges().into_iter().map(|(p, c)| (p.to_string(), c.to_string())).collect(),
        };
        serde_json::to_value(raw).expect("plain data")
    }
}

fn strip_comment(line: &str) -> &str {
    let cut = [line.find("//"), line.find('#')].into_iter().flatten().min();
    match cut {
        Some(i) => &line[..i],
        None => line,
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// A partial map from names to types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv(BTreeMap<Name, TypeExpr>);

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv(BTreeMap::new())
    }

    pub fn get(&self, x: &Name) -> Option<&TypeExpr> {
        self.0.get(x)
    }

    pub fn insert(&mut self, x: Name, ty: TypeExpr) -> Option<TypeExpr> {
        self.0.insert(x, ty)
    }

    pub fn remove(&mut self, x: &Name) -> Option<TypeExpr> {
        self.0.remove(x)
    }

    pub fn contains(&self, x: &Name) -> bool {
        self.0.contains_key(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &TypeExpr)> {
        self.0.iter()
    }

    /// Γ(X): the types of the names of `xs` that are in the domain.
    pub fn slice<'a>(&'a self, xs: impl IntoIterator<Item = &'a Name>) -> Vec<(Name, TypeExpr)> {
        xs.into_iter().filter_map(|x| self.0.get(x).map(|t| (x.clone(), t.clone()))).collect()
    }

    /// Parses `name : TYPE` lines (or a JSON object of strings). Names are
    /// free names, so they resolve to their global identity.
    pub fn parse(source: &str) -> Result<TypeEnv, HierarchyError> {
        let mut env = TypeEnv::new();
        if source.trim_start().starts_with('{') {
            let raw: BTreeMap<String, String> = serde_json::from_str(source)
                .map_err(|e| HierarchyError::Syntax { line: e.line(), message: e.to_string() })?;
            for (k, v) in raw {
                let ty = crate::parser::parse_type(&v)
                    .map_err(|e| HierarchyError::Syntax { line: 1, message: e.to_string() })?;
                env.insert(Name::global(&k), ty);
            }
            return Ok(env);
        }
        for (idx, raw) in source.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (name, ty) = line.split_once(':').ok_or_else(|| HierarchyError::Syntax {
                line: idx + 1,
                message: format!("expected `name : type`, found `{line}`"),
            })?;
            let ty = crate::parser::parse_type(ty.trim())
                .map_err(|e| HierarchyError::Syntax { line: idx + 1, message: e.to_string() })?;
            env.insert(Name::global(name.trim()), ty);
        }
        Ok(env)
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(x, t)| format!("{} : {}\n", x.display(), t)).collect()
    }
}

impl FromIterator<(Name, TypeExpr)> for TypeEnv {
    fn from_iter<I: IntoIterator<Item = (Name, TypeExpr)>>(iter: I) -> Self {
        TypeEnv(iter.into_iter().collect())
    }
}

/// The assignments of `slice` whose base has no strictly smaller base in the
/// slice.
pub fn min_t(h: &Hierarchy, slice: &[(Name, TypeExpr)]) -> Vec<(Name, TypeExpr)> {
    slice.iter().filter(|(_, t)| !slice.iter().any(|(_, u)| h.lt(u.base(), t.base()))).cloned().collect()
}

/// Every free name typed strictly below every restriction-bound annotation.
pub fn p_safe(h: &Hierarchy, env: &TypeEnv, t: &Term) -> Result<bool, HierarchyError> {
    let mut free_bases = BTreeSet::new();
    for x in t.free_names() {
        let ty = env.get(&x).ok_or_else(|| HierarchyError::FreeNameMissing(x.display().to_string()))?;
        free_bases.insert(ty.base().clone());
    }
    for (y, ann) in t.restriction_names() {
        let ty = ann.ok_or_else(|| HierarchyError::Unannotated(y.display().to_string()))?;
        if !h.lt_set(free_bases.iter(), ty.base()) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> BaseTypeRef {
        BaseTypeRef::named(s)
    }

    #[test]
    fn chain_order() {
        let h = Hierarchy::chain(&[b("s"), b("c"), b("m"), b("d")]);
        assert!(h.lt(&b("s"), &b("d")));
        assert!(!h.lt(&b("d"), &b("s")));
        assert!(!h.lt(&b("m"), &b("m")));
        assert!(h.lt_set(std::iter::empty(), &b("m")));
        assert!(h.try_lt(&b("s"), &b("nope")).is_err());
    }

    #[test]
    fn rejects_cycles_and_double_parents() {
        assert!(matches!(Hierarchy::new([], [(b("p"), b("q")), (b("q"), b("p"))]), Err(HierarchyError::Cycle(_))));
        assert!(matches!(
            Hierarchy::new([], [(b("p"), b("q")), (b("r"), b("q"))]),
            Err(HierarchyError::TwoParents { .. })
        ));
    }

    #[test]
    fn text_and_json_formats() {
        let h = Hierarchy::parse("// comment\na < b\nb < c\niso\n").unwrap();
        assert!(h.lt(&b("a"), &b("c")));
        assert!(h.contains(&b("iso")));
        let again = Hierarchy::parse(&h.to_text()).unwrap();
        assert_eq!(again.edges(), h.edges());
        let j = Hierarchy::parse(r#"{"nodes":["z"],"edges":[["a","b"]]}"#).unwrap();
        assert!(j.lt(&b("a"), &b("b")) && j.contains(&b("z")));
        assert!(Hierarchy::parse("a < < b").is_err());
    }

    #[test]
    fn min_t_examples() {
        let h = Hierarchy::new([b("c")], [(b("a"), b("b"))]).unwrap();
        let (x, y, z) = (Name::fresh("a"), Name::fresh("b"), Name::fresh("c"));
        let slice =
            vec![(x.clone(), TypeExpr::only(b("a"))), (y, TypeExpr::only(b("b"))), (z.clone(), TypeExpr::only(b("c")))];
        let mins: Vec<Name> = min_t(&h, &slice).into_iter().map(|(n, _)| n).collect();
        assert_eq!(mins, vec![x, z]);
        let disc = Hierarchy::discrete([b("a"), b("b"), b("c")]);
        assert_eq!(min_t(&disc, &slice).len(), 3);
    }

    #[test]
    fn env_text_format() {
        let env = TypeEnv::parse("a : ta[tb]\nb: tb\n").unwrap();
        assert_eq!(env.get(&Name::global("a")).unwrap().to_string(), "ta[tb]");
        assert_eq!(TypeEnv::parse(&env.to_text()).unwrap(), env);
    }
}
