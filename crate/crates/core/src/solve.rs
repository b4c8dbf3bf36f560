//! Homomorphism search. One engine serves every caller: a depth-first search
//! over instance elements in increasing id order, values in increasing order,
//! with generalized arc consistency maintained at every node. Determinism is
//! a contract, not an accident: two runs on equal inputs produce identical
//! traversals, so "first solution" always means the lexicographically least
//! map and enumeration emits maps in lexicographic order.

use crate::budget::{Budget, Meter};
use crate::error::{Error, Result};
use crate::structure::{Homomorphism, PartialAssignment, Structure};

/// Value sets are bitmasks; templates larger than this are out of scope for
/// the engine.
pub const MAX_TEMPLATE: usize = 128;

type DomainMask = u128;

#[derive(Debug, Clone)]
struct Constraint {
    rel: usize,
    vars: Vec<usize>,
}

/// Resumable enumerator over all homomorphisms from `instance` to `template`
/// extending the seed. Yields `Err(BudgetExceeded)` once and then fuses if
/// the node budget runs out mid-stream.
pub struct HomIter<'a> {
    instance: &'a Structure,
    template: &'a Structure,
    constraints: Vec<Constraint>,
    by_var: Vec<Vec<usize>>,
    meter: Meter,
    // Search state. `domains[d]` is the domain vector in force when choosing
    // a value for variable d; `pending[d]` the values of variable d not yet
    // tried at this level.
    domains: Vec<Vec<DomainMask>>,
    pending: Vec<DomainMask>,
    assignment: Vec<usize>,
    depth: usize,
    started: bool,
    done: bool,
}

fn full_mask(n: usize) -> DomainMask {
    if n == 0 {
        0
    } else if n == MAX_TEMPLATE {
        !0
    } else {
        (1u128 << n) - 1
    }
}

impl<'a> HomIter<'a> {
    fn new(
        instance: &'a Structure,
        template: &'a Structure,
        seed: &PartialAssignment,
        budget: Budget,
    ) -> Result<Self> {
        if !instance.same_signature(template) {
            return Err(Error::SignatureMismatch(
                "instance and template use different signatures".into(),
            ));
        }
        if template.universe() > MAX_TEMPLATE {
            return Err(Error::InvalidParameter(format!(
                "template has {} elements; the search engine supports at most {MAX_TEMPLATE}",
                template.universe()
            )));
        }
        seed.check_ranges(instance, template)?;

        let n = instance.universe();
        let mut constraints = Vec::new();
        for (rel, tuple) in instance.hyperedges() {
            constraints.push(Constraint {
                rel,
                vars: tuple.clone(),
            });
        }
        let mut by_var = vec![Vec::new(); n];
        for (ci, c) in constraints.iter().enumerate() {
            for &v in &c.vars {
                if by_var[v].last() != Some(&ci) {
                    by_var[v].push(ci);
                }
            }
        }

        let full = full_mask(template.universe());
        let mut init = vec![full; n];
        for (e, v) in seed.iter() {
            init[e] &= 1u128 << v;
        }

        Ok(HomIter {
            instance,
            template,
            constraints,
            by_var,
            meter: budget.meter(),
            domains: vec![init],
            pending: Vec::new(),
            assignment: vec![0; n],
            depth: 0,
            started: false,
            done: false,
        })
    }

    /// Prunes `domains` to a generalized-arc-consistent fixpoint. Seeds the
    /// work list with every constraint (if `touched` is None) or with the
    /// constraints of one variable. Returns false on a domain wipeout.
    fn propagate(&mut self, domains: &mut [DomainMask], touched: Option<usize>) -> Result<bool> {
        let mut queue: Vec<usize> = match touched {
            Some(v) => self.by_var[v].clone(),
            None => (0..self.constraints.len()).collect(),
        };
        let mut queued = vec![false; self.constraints.len()];
        for &c in &queue {
            queued[c] = true;
        }
        let mut head = 0;
        while head < queue.len() {
            let ci = queue[head];
            head += 1;
            queued[ci] = false;
            self.meter.tick()?;

            let c = &self.constraints[ci];
            let arity = c.vars.len();
            let mut allowed = vec![0 as DomainMask; arity];
            'tuples: for t in self.template.tuples(c.rel) {
                for pos in 0..arity {
                    if domains[c.vars[pos]] & (1u128 << t[pos]) == 0 {
                        continue 'tuples;
                    }
                    // Repeated variables need equal values at every slot.
                    for later in pos + 1..arity {
                        if c.vars[later] == c.vars[pos] && t[later] != t[pos] {
                            continue 'tuples;
                        }
                    }
                }
                for pos in 0..arity {
                    allowed[pos] |= 1u128 << t[pos];
                }
            }
            for pos in 0..arity {
                let var = c.vars[pos];
                let next = domains[var] & allowed[pos];
                if next == domains[var] {
                    continue;
                }
                domains[var] = next;
                if next == 0 {
                    return Ok(false);
                }
                for &cj in &self.by_var[var] {
                    if !queued[cj] {
                        queued[cj] = true;
                        queue.push(cj);
                    }
                }
            }
        }
        Ok(true)
    }

    fn certificate(&self) -> Vec<(usize, Vec<usize>)> {
        self.instance
            .hyperedges()
            .map(|(rel, t)| (rel, t.clone()))
            .collect()
    }

    fn emit(&self) -> Homomorphism {
        Homomorphism {
            map: self.assignment.clone(),
            checked: self.certificate(),
        }
    }

    fn step(&mut self) -> Result<Option<Homomorphism>> {
        let n = self.instance.universe();
        if !self.started {
            self.started = true;
            let mut root = self.domains[0].clone();
            if !self.propagate(&mut root, None)? {
                self.done = true;
                return Ok(None);
            }
            self.domains[0] = root;
            if n == 0 {
                // The empty structure has exactly one (empty) homomorphism.
                self.done = true;
                return Ok(Some(self.emit()));
            }
            self.pending.push(self.domains[0][0]);
        }

        loop {
            if self.done {
                return Ok(None);
            }
            let d = self.depth;
            let candidates = self.pending[d];
            if candidates == 0 {
                if d == 0 {
                    self.done = true;
                    return Ok(None);
                }
                self.depth -= 1;
                self.pending.pop();
                self.domains.pop();
                continue;
            }
            let v = candidates.trailing_zeros() as usize;
            self.pending[d] &= !(1u128 << v);
            self.meter.tick()?;
            self.assignment[d] = v;

            let mut next = self.domains[d].clone();
            next[d] = 1u128 << v;
            if !self.propagate(&mut next, Some(d))? {
                continue;
            }
            if d + 1 == n {
                return Ok(Some(self.emit()));
            }
            self.depth += 1;
            self.pending.push(next[d + 1]);
            self.domains.push(next);
        }
    }

    pub fn budget_spent(&self) -> u64 {
        self.meter.spent()
    }
}

impl<'a> Iterator for HomIter<'a> {
    type Item = Result<Homomorphism>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(h)) => Some(Ok(h)),
            Ok(None) => None,
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Streams every homomorphism extending `seed`, in lexicographic order of the
/// full assignment vector, each exactly once.
pub fn homomorphisms<'a>(
    instance: &'a Structure,
    template: &'a Structure,
    seed: &PartialAssignment,
    budget: Budget,
) -> Result<HomIter<'a>> {
    HomIter::new(instance, template, seed, budget)
}

/// First (lexicographically least) homomorphism extending `seed`, if any.
pub fn find_homomorphism(
    instance: &Structure,
    template: &Structure,
    seed: &PartialAssignment,
    budget: Budget,
) -> Result<Option<Homomorphism>> {
    let mut it = homomorphisms(instance, template, seed, budget)?;
    it.next().transpose()
}

pub fn is_satisfiable(instance: &Structure, template: &Structure, budget: Budget) -> Result<bool> {
    Ok(find_homomorphism(instance, template, &PartialAssignment::new(), budget)?.is_some())
}

pub fn all_homomorphisms(
    instance: &Structure,
    template: &Structure,
    budget: Budget,
) -> Result<Vec<Homomorphism>> {
    homomorphisms(instance, template, &PartialAssignment::new(), budget)?.collect()
}

pub fn count_homomorphisms(
    instance: &Structure,
    template: &Structure,
    budget: Budget,
) -> Result<u64> {
    let mut n = 0;
    for h in homomorphisms(instance, template, &PartialAssignment::new(), budget)? {
        h?;
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::templates;

    #[test]
    fn triangle_into_k3_has_six_homomorphisms() {
        let b = templates::triangle();
        let a = templates::clique(3);
        let homs = all_homomorphisms(&b, &a, Budget::default()).unwrap();
        assert_eq!(homs.len(), 6);
        for h in &homs {
            assert!(h.is_valid(&b, &a));
        }
        // Lexicographic emission order.
        let maps: Vec<_> = homs.iter().map(|h| h.map.clone()).collect();
        let mut sorted = maps.clone();
        sorted.sort();
        assert_eq!(maps, sorted);
        assert_eq!(maps[0], vec![0, 1, 2]);
    }

    #[test]
    fn seeded_triangle_search_is_forced() {
        let b = templates::triangle();
        let a = templates::clique(3);
        let seed = PartialAssignment::from_pairs([(0, 0), (1, 1)]);
        let h = find_homomorphism(&b, &a, &seed, Budget::default())
            .unwrap()
            .unwrap();
        assert_eq!(h.map, vec![0, 1, 2]);
    }

    #[test]
    fn k4_into_k3_is_absent() {
        let b = templates::clique(4);
        let a = templates::clique(3);
        assert!(find_homomorphism(&b, &a, &PartialAssignment::new(), Budget::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn empty_instance_has_one_homomorphism() {
        let sig = crate::structure::Signature::new(vec![("E".into(), 2)]).unwrap();
        let b = Structure::new(sig.clone(), 0);
        let a = templates::clique(2);
        let homs = all_homomorphisms(&b, &a, Budget::default()).unwrap();
        assert_eq!(homs.len(), 1);
        assert!(homs[0].map.is_empty());
    }

    #[test]
    fn isolated_elements_range_over_template() {
        let sig = crate::structure::Signature::new(vec![("E".into(), 2)]).unwrap();
        let b = Structure::new(sig, 2);
        let a = templates::clique(3);
        assert_eq!(count_homomorphisms(&b, &a, Budget::default()).unwrap(), 9);
    }

    #[test]
    fn budget_exhaustion_is_reported_once() {
        let b = templates::clique(3);
        let a = templates::clique(3);
        let mut it = homomorphisms(&b, &a, &PartialAssignment::new(), Budget::new(2)).unwrap();
        let mut saw_err = false;
        for item in &mut it {
            if item.is_err() {
                saw_err = true;
                break;
            }
        }
        assert!(saw_err);
        assert!(it.next().is_none());
    }

    #[test]
    fn repeated_variable_tuples_are_exact() {
        // E(x, x) forces a looped template value.
        let sig = crate::structure::Signature::new(vec![("E".into(), 2)]).unwrap();
        let mut b = Structure::new(sig.clone(), 1);
        b.add("E", vec![0, 0]).unwrap();
        let mut a = Structure::new(sig, 3);
        a.add("E", vec![0, 1]).unwrap();
        a.add("E", vec![1, 0]).unwrap();
        a.add("E", vec![2, 2]).unwrap();
        let homs = all_homomorphisms(&b, &a, Budget::default()).unwrap();
        assert_eq!(homs.len(), 1);
        assert_eq!(homs[0].map, vec![2]);
    }

    #[test]
    fn signature_mismatch_is_rejected() {
        let sig1 = crate::structure::Signature::new(vec![("E".into(), 2)]).unwrap();
        let sig2 = crate::structure::Signature::new(vec![("F".into(), 2)]).unwrap();
        let b = Structure::new(sig1, 1);
        let a = Structure::new(sig2, 1);
        assert!(matches!(
            find_homomorphism(&b, &a, &PartialAssignment::new(), Budget::default()),
            Err(Error::SignatureMismatch(_))
        ));
    }
}
