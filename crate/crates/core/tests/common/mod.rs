#![allow(dead_code)]

//! Shared support for exact robustness checks on chained clause reductions.
//!
//! `reduce_to_nsat` gives every source clause a private block of fresh
//! linking variables, so a total assignment satisfies the output exactly when
//! its restriction `l` to the pre-chain variables satisfies every pre-chain
//! clause and, independently per family, the fresh block completes the chain
//! given the literal-truth pattern of that family's source clause under `l`.
//! `ChainCheck` exploits that factorization to decide extendability of small
//! partial assignments, and to sweep every level-0/1/2 (or windowed level-3)
//! assignment of the output without ever searching the output instance
//! itself. `extendable` is the slow reference path; the sweeps reorganize the
//! same enumeration around precomputed solution bitsets.

use antcsp::sat::{reduce_to_nsat, SatReduction, SignedClauseInstance};

/// Bitset over pre-chain solution indices.
#[derive(Clone)]
pub struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn new(len: usize) -> Bits {
        Bits {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }
}

/// True when the bitwise AND of all the slices has a set bit. The slices must
/// be equally long and the list nonempty.
fn meet_nonempty(sets: &[&[u64]]) -> bool {
    let first = sets[0];
    'words: for w in 0..first.len() {
        let mut acc = first[w];
        if acc == 0 {
            continue;
        }
        for s in &sets[1..] {
            acc &= s[w];
            if acc == 0 {
                continue 'words;
            }
        }
        return true;
    }
    false
}

/// One abstract chain clause: which source-literal positions it keeps and
/// which fresh bits satisfy it (positive when set, negated when clear).
struct ChainShape {
    tau_mask: u32,
    f_pos: u32,
    f_neg: u32,
}

/// A partial-assignment pin on the output instance: (variable, value).
pub type Pin = (usize, bool);

pub struct ChainCheck {
    pre: SignedClauseInstance,
    pub red: SatReduction,
    n: usize,
    w: usize,
    fresh: usize,
    nv: usize,
    /// Pre-chain solutions, bit v of each mask holding variable v.
    sols: Vec<u32>,
    shapes: Vec<ChainShape>,
    /// Per literal-truth pattern tau of a width-n source clause, the set of
    /// fresh-block completions that satisfy the whole chain, as a bitset over
    /// the 2^fresh fresh assignments.
    valid_f: Vec<Vec<u64>>,
}

impl ChainCheck {
    pub fn new(pre: &SignedClauseInstance, w: usize) -> ChainCheck {
        let n = pre.width();
        let nv = pre.num_vars();
        assert!(nv <= 20, "pre-chain solution sweep needs <= 20 variables");
        assert!(n <= 16, "tau tables need clause width <= 16");
        let red = reduce_to_nsat(pre, w).expect("width must chain down to w");
        let m = (n - (2 * w - 2)) / (w - 2);
        let fresh = m + 1;
        assert!(fresh <= 12, "fresh-block sweep needs <= 12 links per chain");

        let mut shapes = Vec::with_capacity(m + 2);
        let first_mask = (1u32 << (w - 1)) - 1;
        shapes.push(ChainShape {
            tau_mask: first_mask,
            f_pos: 1,
            f_neg: 0,
        });
        for j in 0..m {
            let start = (w - 1) + j * (w - 2);
            let mut mask = 0u32;
            for t in start..start + (w - 2) {
                mask |= 1 << t;
            }
            shapes.push(ChainShape {
                tau_mask: mask,
                f_pos: 1 << (j + 1),
                f_neg: 1 << j,
            });
        }
        let mut last_mask = 0u32;
        for t in n - (w - 1)..n {
            last_mask |= 1 << t;
        }
        shapes.push(ChainShape {
            tau_mask: last_mask,
            f_pos: 0,
            f_neg: 1 << m,
        });

        // The abstract shapes must be exactly what reduce_to_nsat emitted;
        // everything below trusts this slicing.
        for family in &red.families {
            assert_eq!(family.fresh_vars.len(), fresh);
            assert_eq!(family.clauses.len(), m + 2);
            let src = &pre.clauses()[family.source_clause];
            let out = red.instance.clauses();
            let mut expect = src[..w - 1].to_vec();
            expect.push((family.fresh_vars[0], false));
            assert_eq!(out[family.clauses[0]], expect);
            for j in 0..m {
                let start = (w - 1) + j * (w - 2);
                let mut expect = vec![(family.fresh_vars[j], true)];
                expect.extend_from_slice(&src[start..start + (w - 2)]);
                expect.push((family.fresh_vars[j + 1], false));
                assert_eq!(out[family.clauses[j + 1]], expect);
            }
            let mut expect = vec![(family.fresh_vars[m], true)];
            expect.extend_from_slice(&src[n - (w - 1)..]);
            assert_eq!(out[family.clauses[m + 1]], expect);
        }

        // Distinct clause masks suffice for the solution sweep; amplified
        // instances of repeated-variable sources collapse dramatically here.
        let mut clause_masks: Vec<(u32, u32)> = pre
            .clauses()
            .iter()
            .map(|clause| {
                let mut pos = 0u32;
                let mut neg = 0u32;
                for &(v, negated) in clause {
                    if negated {
                        neg |= 1 << v;
                    } else {
                        pos |= 1 << v;
                    }
                }
                (pos, neg)
            })
            .collect();
        clause_masks.sort_unstable();
        clause_masks.dedup();
        let mut sols = Vec::new();
        for l in 0..1u32 << nv {
            if clause_masks
                .iter()
                .all(|&(pos, neg)| l & pos != 0 || !l & neg != 0)
            {
                sols.push(l);
            }
        }

        let f_words = (1usize << fresh).div_ceil(64);
        let mut valid_f = Vec::with_capacity(1 << n);
        for tau in 0..1u32 << n {
            let mut vf = vec![0u64; f_words];
            for f in 0..1u32 << fresh {
                let ok = shapes.iter().all(|s| {
                    tau & s.tau_mask != 0 || f & s.f_pos != 0 || !f & s.f_neg != 0
                });
                if ok {
                    vf[f as usize / 64] |= 1 << (f % 64);
                }
            }
            valid_f.push(vf);
        }

        ChainCheck {
            pre: pre.clone(),
            red,
            n,
            w,
            fresh,
            nv,
            sols,
            shapes,
            valid_f,
        }
    }

    pub fn satisfiable(&self) -> bool {
        !self.sols.is_empty()
    }

    pub fn solution_count(&self) -> usize {
        self.sols.len()
    }

    pub fn output(&self) -> &SignedClauseInstance {
        &self.red.instance
    }

    pub fn pre_vars(&self) -> usize {
        self.nv
    }

    pub fn families(&self) -> usize {
        self.red.families.len()
    }

    fn family_of(&self, var: usize) -> (usize, usize) {
        let idx = var - self.nv;
        (idx / self.fresh, idx % self.fresh)
    }

    pub fn fresh_var(&self, family: usize, pos: usize) -> usize {
        self.red.families[family].fresh_vars[pos]
    }

    /// Literal-truth pattern of a family's source clause under a pre-chain
    /// assignment.
    fn tau(&self, family: usize, l: u32) -> usize {
        let clause = &self.pre.clauses()[self.red.families[family].source_clause];
        let mut tau = 0usize;
        for (t, &(v, negated)) in clause.iter().enumerate() {
            if (l >> v & 1 == 1) != negated {
                tau |= 1 << t;
            }
        }
        tau
    }

    /// Fresh assignments matching a set of pins inside one family, as a
    /// bitset over the 2^fresh fresh-block space.
    fn pin_space(&self, pins: &[(usize, bool)]) -> Vec<u64> {
        let mut mask = 0u32;
        let mut val = 0u32;
        for &(pos, b) in pins {
            mask |= 1 << pos;
            if b {
                val |= 1 << pos;
            }
        }
        let mut out = vec![0u64; (1usize << self.fresh).div_ceil(64)];
        for f in 0..1u32 << self.fresh {
            if f & mask == val {
                out[f as usize / 64] |= 1 << (f % 64);
            }
        }
        out
    }

    /// Reference extendability check: does some total solution of the output
    /// agree with the pins? Scans the pre-chain solution list directly.
    pub fn extendable(&self, pins: &[Pin]) -> bool {
        let mut copy_mask = 0u32;
        let mut copy_val = 0u32;
        let mut groups: Vec<(usize, Vec<(usize, bool)>)> = Vec::new();
        for &(var, b) in pins {
            if var < self.nv {
                let bit = 1u32 << var;
                if copy_mask & bit != 0 {
                    if (copy_val & bit != 0) != b {
                        return false;
                    }
                    continue;
                }
                copy_mask |= bit;
                if b {
                    copy_val |= bit;
                }
            } else {
                let (family, pos) = self.family_of(var);
                match groups.iter_mut().find(|(f, _)| *f == family) {
                    Some((_, g)) => g.push((pos, b)),
                    None => groups.push((family, vec![(pos, b)])),
                }
            }
        }
        let spaces: Vec<(usize, Vec<u64>)> = groups
            .iter()
            .map(|(family, g)| (*family, self.pin_space(g)))
            .collect();
        'sols: for &l in &self.sols {
            if l & copy_mask != copy_val {
                continue;
            }
            for (family, space) in &spaces {
                let vf = &self.valid_f[self.tau(*family, l)];
                if !vf.iter().zip(space).any(|(&a, &b)| a & b != 0) {
                    continue 'sols;
                }
            }
            return true;
        }
        false
    }

    /// Assert slot uniformity of the chain ends: the open literals of every
    /// first and last chain clause are distinct increasing copies of one
    /// source variable (at `copies` copies per variable) sharing a polarity,
    /// and for width-3 targets every middle clause keeps one open literal.
    pub fn assert_slot_uniform(&self, copies: usize) {
        let out = self.red.instance.clauses();
        for family in &self.red.families {
            let m = family.fresh_vars.len() - 1;
            let first = &out[family.clauses[0]];
            let last = &out[family.clauses[m + 1]];
            for open in [&first[..self.w - 1], &last[1..]] {
                assert!(open.iter().all(|&(v, _)| v < self.nv));
                assert!(open.windows(2).all(|p| p[0].0 < p[1].0));
                assert!(open.iter().all(|&(v, _)| v / copies == open[0].0 / copies));
                assert!(open.iter().all(|&(_, neg)| neg == open[0].1));
            }
            if self.w == 3 {
                for j in 0..m {
                    let mid = &out[family.clauses[j + 1]];
                    assert_eq!(mid.iter().filter(|&&(v, _)| v < self.nv).count(), 1);
                }
            }
        }
    }

    /// Exact (<=2, empty-F)-robustness of the output instance: every partial
    /// assignment on at most two output variables extends to a solution.
    /// Returns a non-extendable assignment if one exists. The enumeration is
    /// complete; it is merely reorganized around the pre-chain solution set.
    pub fn robust2_empty(&self) -> Option<Vec<Pin>> {
        if self.sols.is_empty() {
            return Some(Vec::new());
        }
        let ns = self.sols.len();
        let nf = self.families();

        let copy_bits: Vec<Bits> = (0..2 * self.nv)
            .map(|i| {
                let (v, val) = (i / 2, i % 2 == 1);
                let mut b = Bits::new(ns);
                for (idx, &l) in self.sols.iter().enumerate() {
                    if (l >> v & 1 == 1) == val {
                        b.set(idx);
                    }
                }
                b
            })
            .collect();

        // Pin configurations on one fresh block: singles and ordered pairs.
        let sc = 2 * self.fresh;
        let single_cfg: Vec<Vec<(usize, bool)>> = (0..sc)
            .map(|c| vec![(c / 2, c % 2 == 1)])
            .collect();
        let mut pair_cfg: Vec<Vec<(usize, bool)>> = Vec::new();
        for p1 in 0..self.fresh {
            for p2 in p1 + 1..self.fresh {
                for vals in 0..4u8 {
                    pair_cfg.push(vec![(p1, vals & 1 == 1), (p2, vals & 2 == 2)]);
                }
            }
        }

        // Valid-tau masks: the taus under which some chain completion matches
        // the configuration.
        let tau_words = (1usize << self.n).div_ceil(64);
        let vt = |cfgs: &[Vec<(usize, bool)>]| -> Vec<Vec<u64>> {
            cfgs.iter()
                .map(|cfg| {
                    let space = self.pin_space(cfg);
                    let mut mask = vec![0u64; tau_words];
                    for tau in 0..1usize << self.n {
                        let vf = &self.valid_f[tau];
                        if vf.iter().zip(&space).any(|(&a, &b)| a & b != 0) {
                            mask[tau / 64] |= 1 << (tau % 64);
                        }
                    }
                    mask
                })
                .collect()
        };
        let vt_single = vt(&single_cfg);
        let vt_pair = vt(&pair_cfg);

        // Which single configurations admit each tau, as a small bitmap.
        let single_of_tau: Vec<u32> = (0..1usize << self.n)
            .map(|tau| {
                let mut bm = 0u32;
                for (c, mask) in vt_single.iter().enumerate() {
                    if mask[tau / 64] >> (tau % 64) & 1 == 1 {
                        bm |= 1 << c;
                    }
                }
                bm
            })
            .collect();

        // Per family: solution bitsets per single configuration, plus the set
        // of taus that actually occur.
        let mut family_bits: Vec<Vec<Bits>> = Vec::with_capacity(nf);
        let mut family_seen: Vec<Vec<u64>> = Vec::with_capacity(nf);
        for family in 0..nf {
            let mut bits = vec![Bits::new(ns); sc];
            let mut seen = vec![0u64; tau_words];
            for (idx, &l) in self.sols.iter().enumerate() {
                let tau = self.tau(family, l);
                seen[tau / 64] |= 1 << (tau % 64);
                let mut bm = single_of_tau[tau];
                while bm != 0 {
                    let c = bm.trailing_zeros() as usize;
                    bits[c].set(idx);
                    bm &= bm - 1;
                }
            }
            family_bits.push(bits);
            family_seen.push(seen);
        }

        let fresh_pin = |family: usize, cfg: &[(usize, bool)]| -> Vec<Pin> {
            cfg.iter()
                .map(|&(pos, b)| (self.fresh_var(family, pos), b))
                .collect()
        };

        // Level 1.
        for v in 0..self.nv {
            for val in [false, true] {
                if !copy_bits[v * 2 + val as usize].any() {
                    return Some(vec![(v, val)]);
                }
            }
        }
        for family in 0..nf {
            for (c, mask) in vt_single.iter().enumerate() {
                if !meet_nonempty(&[&family_seen[family], mask]) {
                    return Some(fresh_pin(family, &single_cfg[c]));
                }
            }
        }

        // Level 2: copy-copy.
        for v1 in 0..self.nv {
            for v2 in v1 + 1..self.nv {
                for vals in 0..4usize {
                    let a = &copy_bits[v1 * 2 + (vals & 1)];
                    let b = &copy_bits[v2 * 2 + (vals >> 1)];
                    if !meet_nonempty(&[&a.words, &b.words]) {
                        return Some(vec![(v1, vals & 1 == 1), (v2, vals >> 1 == 1)]);
                    }
                }
            }
        }
        // Copy-fresh.
        for family in 0..nf {
            for (c, fb) in family_bits[family].iter().enumerate() {
                for v in 0..self.nv {
                    for val in [false, true] {
                        let cb = &copy_bits[v * 2 + val as usize];
                        if !meet_nonempty(&[&cb.words, &fb.words]) {
                            let mut pins = vec![(v, val)];
                            pins.extend(fresh_pin(family, &single_cfg[c]));
                            return Some(pins);
                        }
                    }
                }
            }
        }
        // Fresh pairs inside one family.
        for family in 0..nf {
            for (c, mask) in vt_pair.iter().enumerate() {
                if !meet_nonempty(&[&family_seen[family], mask]) {
                    return Some(fresh_pin(family, &pair_cfg[c]));
                }
            }
        }
        // Fresh pairs across families: the hot loop.
        for f1 in 0..nf {
            for f2 in f1 + 1..nf {
                for (c1, b1) in family_bits[f1].iter().enumerate() {
                    for (c2, b2) in family_bits[f2].iter().enumerate() {
                        if !meet_nonempty(&[&b1.words, &b2.words]) {
                            let mut pins = fresh_pin(f1, &single_cfg[c1]);
                            pins.extend(fresh_pin(f2, &single_cfg[c2]));
                            return Some(pins);
                        }
                    }
                }
            }
        }
        None
    }

    /// Exact (<=3, F)-robustness of the output restricted to assignments whose
    /// domain lies inside the window: all pre-chain variables plus the fresh
    /// blocks of the chosen families. F is either empty or the fundamental
    /// clause relations (an assignment covering a whole output clause must
    /// satisfy it to count as compatible).
    pub fn robust3_window(&self, chosen: &[usize], fundamental: bool) -> Option<Vec<Pin>> {
        if self.sols.is_empty() {
            return Some(Vec::new());
        }
        let ns = self.sols.len();

        #[derive(Clone, Copy)]
        enum El {
            Copy(usize),
            Fresh { slot: usize, pos: usize },
        }
        let mut window: Vec<(usize, El)> = (0..self.nv).map(|v| (v, El::Copy(v))).collect();
        for (slot, &family) in chosen.iter().enumerate() {
            for pos in 0..self.fresh {
                window.push((self.fresh_var(family, pos), El::Fresh { slot, pos }));
            }
        }

        let copy_bits: Vec<Bits> = (0..2 * self.nv)
            .map(|i| {
                let (v, val) = (i / 2, i % 2 == 1);
                let mut b = Bits::new(ns);
                for (idx, &l) in self.sols.iter().enumerate() {
                    if (l >> v & 1 == 1) == val {
                        b.set(idx);
                    }
                }
                b
            })
            .collect();

        // All pin configurations on one fresh block up to size 3.
        let mut cfgs: Vec<Vec<(usize, bool)>> = Vec::new();
        for c in 0..2 * self.fresh {
            cfgs.push(vec![(c / 2, c % 2 == 1)]);
        }
        for p1 in 0..self.fresh {
            for p2 in p1 + 1..self.fresh {
                for vals in 0..4u8 {
                    cfgs.push(vec![(p1, vals & 1 == 1), (p2, vals & 2 == 2)]);
                }
            }
        }
        for p1 in 0..self.fresh {
            for p2 in p1 + 1..self.fresh {
                for p3 in p2 + 1..self.fresh {
                    for vals in 0..8u8 {
                        cfgs.push(vec![
                            (p1, vals & 1 == 1),
                            (p2, vals & 2 == 2),
                            (p3, vals & 4 == 4),
                        ]);
                    }
                }
            }
        }
        let cfg_index = |pins: &[(usize, bool)]| -> usize {
            cfgs.iter()
                .position(|c| c.as_slice() == pins)
                .expect("pin configuration is enumerated")
        };

        // Valid-tau mask per configuration (family-independent), then per
        // chosen family one solution bitset per configuration via its tau
        // trace over the solution list.
        let tau_words = (1usize << self.n).div_ceil(64);
        let vt_all: Vec<Vec<u64>> = cfgs
            .iter()
            .map(|cfg| {
                let space = self.pin_space(cfg);
                let mut mask = vec![0u64; tau_words];
                for tau in 0..1usize << self.n {
                    let vf = &self.valid_f[tau];
                    if vf.iter().zip(&space).any(|(&a, &b)| a & b != 0) {
                        mask[tau / 64] |= 1 << (tau % 64);
                    }
                }
                mask
            })
            .collect();
        let mut slot_bits: Vec<Vec<Bits>> = Vec::with_capacity(chosen.len());
        for &family in chosen {
            let taus: Vec<u16> = self
                .sols
                .iter()
                .map(|&l| self.tau(family, l) as u16)
                .collect();
            let bits: Vec<Bits> = vt_all
                .iter()
                .map(|mask| {
                    let mut b = Bits::new(ns);
                    for (idx, &t) in taus.iter().enumerate() {
                        if mask[t as usize / 64] >> (t as usize % 64) & 1 == 1 {
                            b.set(idx);
                        }
                    }
                    b
                })
                .collect();
            slot_bits.push(bits);
        }

        // Output clauses that lie entirely inside the window, keyed by their
        // sorted variable set, for the fundamental-compatibility filter.
        let in_window: std::collections::HashSet<usize> =
            window.iter().map(|&(var, _)| var).collect();
        let mut local: std::collections::HashMap<Vec<usize>, Vec<usize>> =
            std::collections::HashMap::new();
        if fundamental {
            for (ci, clause) in self.red.instance.clauses().iter().enumerate() {
                if clause.iter().all(|&(v, _)| in_window.contains(&v)) {
                    let mut key: Vec<usize> = clause.iter().map(|&(v, _)| v).collect();
                    key.sort_unstable();
                    key.dedup();
                    local.entry(key).or_default().push(ci);
                }
            }
        }

        // Fundamental-relation compatibility: an assignment is compatible
        // unless it covers some output clause (through any subset of its
        // domain, since clauses may repeat variables) and falsifies it.
        let compatible = |pins: &[Pin]| -> bool {
            if !fundamental {
                return true;
            }
            let mut vars: Vec<usize> = pins.iter().map(|&(v, _)| v).collect();
            vars.sort_unstable();
            for sub in 1u8..1 << vars.len() {
                let key: Vec<usize> = (0..vars.len())
                    .filter(|&i| sub >> i & 1 == 1)
                    .map(|i| vars[i])
                    .collect();
                let Some(clauses) = local.get(&key) else {
                    continue;
                };
                for &ci in clauses {
                    let sat = self.red.instance.clauses()[ci].iter().any(|&(v, negated)| {
                        let val = pins.iter().find(|&&(pv, _)| pv == v).unwrap().1;
                        val != negated
                    });
                    if !sat {
                        return false;
                    }
                }
            }
            true
        };

        let mut domain = [0usize; 3];
        let nw = window.len();
        for size in 1..=3usize {
            let pick = |dom: &[usize]| -> Option<Vec<Pin>> {
                'vals: for vals in 0..1u8 << size {
                    let pins: Vec<Pin> = dom
                        .iter()
                        .enumerate()
                        .map(|(i, &wi)| (window[wi].0, vals >> i & 1 == 1))
                        .collect();
                    if !compatible(&pins) {
                        continue 'vals;
                    }

                    // Group pins by kind and meet the solution bitsets.
                    let mut copy_sets: Vec<&[u64]> = Vec::new();
                    let mut groups: Vec<(usize, Vec<(usize, bool)>)> = Vec::new();
                    for (i, &wi) in dom.iter().enumerate() {
                        let b = vals >> i & 1 == 1;
                        match window[wi].1 {
                            El::Copy(v) => {
                                copy_sets.push(&copy_bits[v * 2 + b as usize].words)
                            }
                            El::Fresh { slot, pos } => {
                                match groups.iter_mut().find(|(s, _)| *s == slot) {
                                    Some((_, g)) => g.push((pos, b)),
                                    None => groups.push((slot, vec![(pos, b)])),
                                }
                            }
                        }
                    }
                    let mut sets = copy_sets;
                    for (slot, g) in &mut groups {
                        g.sort_unstable();
                        sets.push(&slot_bits[*slot][cfg_index(g)].words);
                    }
                    if !meet_nonempty(&sets) {
                        return Some(pins);
                    }
                }
                None
            };
            // Plain nested combination loops over window indices.
            match size {
                1 => {
                    for a in 0..nw {
                        domain[0] = a;
                        if let Some(ce) = pick(&domain[..1]) {
                            return Some(ce);
                        }
                    }
                }
                2 => {
                    for a in 0..nw {
                        for b in a + 1..nw {
                            domain[0] = a;
                            domain[1] = b;
                            if let Some(ce) = pick(&domain[..2]) {
                                return Some(ce);
                            }
                        }
                    }
                }
                _ => {
                    for a in 0..nw {
                        for b in a + 1..nw {
                            for c in b + 1..nw {
                                domain[0] = a;
                                domain[1] = b;
                                domain[2] = c;
                                if let Some(ce) = pick(&domain[..3]) {
                                    return Some(ce);
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }
}

/// Exact small-level robustness for an unchained signed-clause instance with
/// at most 20 variables: enumerate every solution once as a variable mask,
/// then decide each pinned assignment by meeting per-pin solution bitsets.
pub struct MaskRobust {
    nv: usize,
    sols: Vec<u32>,
    /// Bitset over solution indices per pin: index `2 * v + value`.
    pins: Vec<Bits>,
}

impl MaskRobust {
    pub fn new(inst: &SignedClauseInstance) -> MaskRobust {
        let nv = inst.num_vars();
        assert!(nv <= 20, "mask sweep is sized for at most 20 variables");
        let mut masks: Vec<(u32, u32)> = inst
            .clauses()
            .iter()
            .map(|clause| {
                let mut pos = 0u32;
                let mut neg = 0u32;
                for &(v, negated) in clause {
                    if negated {
                        neg |= 1 << v;
                    } else {
                        pos |= 1 << v;
                    }
                }
                (pos, neg)
            })
            .collect();
        masks.sort_unstable();
        masks.dedup();
        let mut sols = Vec::new();
        for l in 0..1u32 << nv {
            if masks.iter().all(|&(pos, neg)| l & pos != 0 || !l & neg != 0) {
                sols.push(l);
            }
        }
        let mut pins = vec![Bits::new(sols.len()); 2 * nv];
        for (i, &l) in sols.iter().enumerate() {
            for v in 0..nv {
                pins[2 * v + (l >> v & 1) as usize].set(i);
            }
        }
        MaskRobust { nv, sols, pins }
    }

    pub fn satisfiable(&self) -> bool {
        !self.sols.is_empty()
    }

    pub fn solution_count(&self) -> usize {
        self.sols.len()
    }

    /// First assignment of at most `k` variables (distinct, any values) that
    /// no solution extends, or None when the instance is (k, {})-robust.
    pub fn robust_empty_upto(&self, k: usize) -> Option<Vec<Pin>> {
        assert!(k <= 3);
        if self.sols.is_empty() {
            return Some(Vec::new());
        }
        let pin = |v: usize, b: bool| -> &[u64] { &self.pins[2 * v + b as usize].words };
        for size in 1..=k.min(self.nv) {
            let mut dom = [0usize; 3];
            let pick = |dom: &[usize]| -> Option<Vec<Pin>> {
                for vals in 0..1u8 << dom.len() {
                    let sets: Vec<&[u64]> = dom
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| pin(v, vals >> i & 1 == 1))
                        .collect();
                    if !meet_nonempty(&sets) {
                        return Some(
                            dom.iter()
                                .enumerate()
                                .map(|(i, &v)| (v, vals >> i & 1 == 1))
                                .collect(),
                        );
                    }
                }
                None
            };
            match size {
                1 => {
                    for a in 0..self.nv {
                        dom[0] = a;
                        if let Some(ce) = pick(&dom[..1]) {
                            return Some(ce);
                        }
                    }
                }
                2 => {
                    for a in 0..self.nv {
                        for b in a + 1..self.nv {
                            dom[0] = a;
                            dom[1] = b;
                            if let Some(ce) = pick(&dom[..2]) {
                                return Some(ce);
                            }
                        }
                    }
                }
                _ => {
                    for a in 0..self.nv {
                        for b in a + 1..self.nv {
                            for c in b + 1..self.nv {
                                dom[0] = a;
                                dom[1] = b;
                                dom[2] = c;
                                if let Some(ce) = pick(&dom[..3]) {
                                    return Some(ce);
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }
}

/// Negate every literal of the flagged variables. Solutions correspond under
/// the same flips, so satisfiability and robustness verdicts are preserved.
pub fn flip_vars(inst: &SignedClauseInstance, flips: &[bool]) -> SignedClauseInstance {
    SignedClauseInstance::new(
        inst.num_vars(),
        inst.width(),
        inst.clauses()
            .iter()
            .map(|c| c.iter().map(|&(v, neg)| (v, neg ^ flips[v])).collect())
            .collect(),
    )
    .expect("flipping literals preserves shape")
}

/// `count` family indices spread evenly across `0..nf`, deduplicated.
pub fn spread(nf: usize, count: usize) -> Vec<usize> {
    assert!(nf > 0 && count > 0);
    let mut out: Vec<usize> = if count == 1 || nf == 1 {
        vec![0]
    } else {
        (0..count).map(|i| i * (nf - 1) / (count - 1)).collect()
    };
    out.dedup();
    out
}
