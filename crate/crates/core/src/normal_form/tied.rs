//! Linked, tied and migratable relations on a normal form.

use std::collections::BTreeSet;

use super::NormalForm;
use crate::term::Name;

/// Relations over the actives of one normal form, with respect to its own
/// binders.
#[derive(Clone, Debug)]
pub struct TiedRelation {
    fns: Vec<BTreeSet<Name>>,
    binders: BTreeSet<Name>,
    component: Vec<usize>,
}

pub fn tied_relation(n: &NormalForm) -> TiedRelation {
    let fns: Vec<BTreeSet<Name>> = n.actives.iter().map(|a| a.free_names()).collect();
    let binders: BTreeSet<Name> = n.binder_names().into_iter().collect();
    let mut parent: Vec<usize> = (0..fns.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for x in &binders {
        let mut users = (0..fns.len()).filter(|&i| fns[i].contains(x));
        if let Some(first) = users.next() {
            for j in users {
                let (a, b) = (find(&mut parent, first), find(&mut parent, j));
                parent[b] = a;
            }
        }
    }
    let component = (0..fns.len()).map(|i| find(&mut parent, i)).collect();
    TiedRelation { fns, binders, component }
}

impl TiedRelation {
    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fns.is_empty()
    }

    /// The two actives share a name bound by this normal form.
    pub fn linked(&self, i: usize, j: usize) -> bool {
        self.fns[i].intersection(&self.fns[j]).any(|x| self.binders.contains(x))
    }

    /// Reflexive-transitive closure of `linked`.
    pub fn tied(&self, i: usize, j: usize) -> bool {
        self.component[i] == self.component[j]
    }

    /// Some active tied to `i` has `y` free.
    pub fn name_tied(&self, y: &Name, i: usize) -> bool {
        (0..self.fns.len()).any(|j| self.fns[j].contains(y) && self.tied(i, j))
    }

    /// `{ i | name_tied(y, i) }`.
    pub fn tied_to_name(&self, y: &Name) -> BTreeSet<usize> {
        let comps: BTreeSet<usize> =
            (0..self.fns.len()).filter(|&j| self.fns[j].contains(y)).map(|j| self.component[j]).collect();
        (0..self.fns.len()).filter(|&i| comps.contains(&self.component[i])).collect()
    }

    pub fn free_names_of(&self, i: usize) -> &BTreeSet<Name> {
        &self.fns[i]
    }
}

/// Indexes of the continuation's actives that are tied to the input variable.
pub fn migratable(var: &Name, body: &NormalForm) -> BTreeSet<usize> {
    tied_relation(body).tied_to_name(var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::nf;
    use crate::parser::parse;
    use crate::term::Prefix;

    #[test]
    fn linked_names_relations() {
        let n = nf(&parse("new a. new b. new c. (a(x) | b(x) | c(x) | a<b>)").unwrap());
        let r = tied_relation(&n);
        assert!(r.linked(0, 3) && r.linked(1, 3));
        assert!(!r.linked(0, 1));
        assert!(r.tied(0, 1));
        assert!(!r.tied(0, 2));
        assert!(r.name_tied(&n.binders[0].name, 1));
        assert!(!r.name_tied(&n.binders[0].name, 2));
    }

    #[test]
    fn single_active_is_tied_to_itself() {
        let n = nf(&parse("a(x)").unwrap());
        let r = tied_relation(&n);
        assert!(r.tied(0, 0));
        assert!(!r.linked(0, 0));
    }

    #[test]
    fn migratable_example() {
        let t = parse("new f. a(x).new c. new d. new e. (x<c> | c<d> | a<e>.e<f>)").unwrap();
        let n = nf(&t);
        let inner = &n.actives[0].branches[0];
        let Prefix::Input { var, .. } = &inner.prefix else { panic!() };
        assert_eq!(migratable(var, &inner.cont), [0, 1].into_iter().collect());
        let t = parse("a(x).b<c>").unwrap();
        let b = &nf(&t).actives[0].branches[0];
        assert!(migratable(b.prefix.bound_var().unwrap(), &b.cont).is_empty());
    }

    #[test]
    fn client_continuations_migratable() {
        let t = parse("c(m).(s<m> | m(y).c<m>)").unwrap();
        let b = &nf(&t).actives[0].branches[0];
        assert_eq!(migratable(b.prefix.bound_var().unwrap(), &b.cont), [0, 1].into_iter().collect());
    }
}
