//! Systems of ±1 linear equations over Z_m with a designated prime-order
//! element g, and the width-lowering chain that turns one width-3 system
//! into another while amplifying robustness: triple every variable (width
//! 9), regroup into widths at most 4, then split into pure width-3
//! equations encodable as r_h / s_h hyperedges over the affine template.

use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{Error, Result};
use crate::structure::Structure;
use crate::templates::linear_signature;

/// One equation: sum of coeff * var = rhs (mod m), coefficients in {1,-1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearEquation {
    terms: Vec<(usize, i32)>,
    rhs: usize,
}

impl LinearEquation {
    pub fn new(terms: Vec<(usize, i32)>, rhs: usize) -> LinearEquation {
        LinearEquation { terms, rhs }
    }

    pub fn terms(&self) -> &[(usize, i32)] {
        &self.terms
    }

    pub fn rhs(&self) -> usize {
        self.rhs
    }

    pub fn width(&self) -> usize {
        self.terms.len()
    }

    fn negatives(&self) -> usize {
        self.terms.iter().filter(|(_, c)| *c < 0).count()
    }

    fn holds(&self, assignment: &[usize], modulus: usize) -> bool {
        let mut sum = 0usize;
        for &(v, c) in &self.terms {
            let val = assignment[v] % modulus;
            sum = (sum + if c > 0 { val } else { (modulus - val) % modulus }) % modulus;
        }
        sum == self.rhs % modulus
    }

    /// Multiplied through by -1; used to bring the negative-coefficient
    /// count down to at most one.
    fn negated(&self, modulus: usize) -> LinearEquation {
        LinearEquation {
            terms: self.terms.iter().map(|&(v, c)| (v, -c)).collect(),
            rhs: (modulus - self.rhs % modulus) % modulus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearSystem {
    modulus: usize,
    g: usize,
    vars: usize,
    eqs: Vec<LinearEquation>,
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

impl LinearSystem {
    pub fn new(
        modulus: usize,
        g: usize,
        vars: usize,
        eqs: Vec<LinearEquation>,
    ) -> Result<LinearSystem> {
        let sys = LinearSystem {
            modulus,
            g,
            vars,
            eqs,
        };
        sys.validate()?;
        Ok(sys)
    }

    fn validate(&self) -> Result<()> {
        if self.modulus < 2 {
            return Err(Error::InvalidParameter(format!(
                "modulus {} is too small",
                self.modulus
            )));
        }
        if self.g == 0 || self.g >= self.modulus {
            return Err(Error::out_of_range(
                "designated element",
                self.g,
                self.modulus,
            ));
        }
        let order = self.modulus / gcd(self.modulus, self.g);
        if !is_prime(order) {
            return Err(Error::InvalidParameter(format!(
                "designated element {} has order {order}, which is not prime",
                self.g
            )));
        }
        for (i, eq) in self.eqs.iter().enumerate() {
            if eq.rhs >= self.modulus {
                return Err(Error::out_of_range(
                    format!("equation {i} right-hand side"),
                    eq.rhs,
                    self.modulus,
                ));
            }
            for &(v, c) in &eq.terms {
                if v >= self.vars {
                    return Err(Error::out_of_range(format!("equation {i} variable"), v, self.vars));
                }
                if c != 1 && c != -1 {
                    return Err(Error::InvalidParameter(format!(
                        "equation {i} has coefficient {c}, expected 1 or -1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn eqs(&self) -> &[LinearEquation] {
        &self.eqs
    }

    /// Uniform equation width, if there is one (None for mixed or empty).
    pub fn width(&self) -> Option<usize> {
        let mut w = None;
        for eq in &self.eqs {
            match w {
                None => w = Some(eq.width()),
                Some(prior) if prior != eq.width() => return None,
                Some(_) => {}
            }
        }
        w
    }

    pub fn holds(&self, assignment: &[usize]) -> bool {
        self.eqs.iter().all(|eq| eq.holds(assignment, self.modulus))
    }

    pub fn from_json(text: &str) -> Result<LinearSystem> {
        let sys: LinearSystem = serde_json::from_str(text)
            .map_err(|e| Error::parse("linear system", e.to_string()))?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Exhaustive description of the solution set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionSpace {
    pub satisfiable: bool,
    pub count: u64,
    /// log_m(count) when the modulus is prime and the count is an exact
    /// power; solution sets of consistent systems over a prime modulus are
    /// affine subspaces, so this is their dimension.
    pub dimension: Option<u32>,
}

pub fn linear_solution_space(sys: &LinearSystem, budget: Budget) -> Result<SolutionSpace> {
    let m = sys.modulus();
    let limit = match m {
        2 => 20,
        3 => 12,
        _ => 8,
    };
    if sys.vars() > limit {
        return Err(Error::InvalidParameter(format!(
            "{} variables exceeds the enumeration bound {limit} for modulus {m}",
            sys.vars()
        )));
    }
    let total = (m as u64)
        .checked_pow(sys.vars() as u32)
        .ok_or(Error::BudgetExceeded)?;
    let mut meter = budget.meter();
    meter.charge(total)?;
    let mut assignment = vec![0usize; sys.vars()];
    let mut count = 0u64;
    for _ in 0..total {
        if sys.holds(&assignment) {
            count += 1;
        }
        let mut i = sys.vars();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            assignment[i] += 1;
            if assignment[i] < m {
                break;
            }
            assignment[i] = 0;
        }
    }
    let dimension = if is_prime(m) && count > 0 {
        let mut c = count;
        let mut d = 0u32;
        while c % m as u64 == 0 {
            c /= m as u64;
            d += 1;
        }
        if c == 1 { Some(d) } else { None }
    } else {
        None
    };
    Ok(SolutionSpace {
        satisfiable: count > 0,
        count,
        dimension,
    })
}

/// Robustness level the width chain tracks across a tripling step: claw
/// formulas over the regrouped system have arity 3k+2.
pub fn level_after_tripling(k: usize) -> usize {
    3 * k + 2
}

/// Replaces every variable by three copies, each occurrence by the sum of
/// its copies: variable v becomes 3v, 3v+1, 3v+2 and a width-3 equation
/// becomes width 9 with the same right-hand side. The level parameter does
/// not enter the equations; callers track it via level_after_tripling.
pub fn triple_variables(sys: &LinearSystem, _k: usize) -> Result<LinearSystem> {
    for (i, eq) in sys.eqs().iter().enumerate() {
        if eq.width() != 3 {
            return Err(Error::WidthViolation(format!(
                "equation {i} has width {}, tripling needs width 3",
                eq.width()
            )));
        }
    }
    let eqs = sys
        .eqs()
        .iter()
        .map(|eq| {
            let mut terms = Vec::with_capacity(9);
            for &(v, c) in eq.terms() {
                for copy in 0..3 {
                    terms.push((3 * v + copy, c));
                }
            }
            LinearEquation::new(terms, eq.rhs())
        })
        .collect();
    LinearSystem::new(sys.modulus(), sys.g(), 3 * sys.vars(), eqs)
}

/// Collects the three copy-groups of each width-9 equation (positions 0,3,6
/// then 1,4,7 then 2,5,8) into new variables u_{e,0..2}: three width-4
/// equations group + (-u) = 0 and one width-3 equation u_0+u_1+u_2 = rhs.
pub fn regroup_to_width4(sys: &LinearSystem) -> Result<LinearSystem> {
    for (i, eq) in sys.eqs().iter().enumerate() {
        if eq.width() != 9 {
            return Err(Error::WidthViolation(format!(
                "equation {i} has width {}, regrouping needs width 9",
                eq.width()
            )));
        }
    }
    let mut eqs = Vec::with_capacity(4 * sys.eqs().len());
    for (e, eq) in sys.eqs().iter().enumerate() {
        let mut u_terms = Vec::with_capacity(3);
        for copy in 0..3 {
            let u = sys.vars() + 3 * e + copy;
            let mut terms: Vec<(usize, i32)> = eq
                .terms()
                .iter()
                .enumerate()
                .filter(|(pos, _)| pos % 3 == copy)
                .map(|(_, &t)| t)
                .collect();
            terms.push((u, -1));
            eqs.push(LinearEquation::new(terms, 0));
            u_terms.push((u, 1));
        }
        eqs.push(LinearEquation::new(u_terms, eq.rhs()));
    }
    LinearSystem::new(sys.modulus(), sys.g(), sys.vars() + 3 * sys.eqs().len(), eqs)
}

/// Splits each width-4 equation t0+t1+t2+t3 = h via a new variable v into
/// t0+t1-v = 0 and v+t2+t3 = h; width-3 equations pass through. Results with
/// two or more negative coefficients are multiplied by -1 so each equation
/// fits an r_h or s_h hyperedge.
pub fn regroup_to_width3(sys: &LinearSystem) -> Result<LinearSystem> {
    for (i, eq) in sys.eqs().iter().enumerate() {
        if eq.width() != 3 && eq.width() != 4 {
            return Err(Error::WidthViolation(format!(
                "equation {i} has width {}, splitting needs width 3 or 4",
                eq.width()
            )));
        }
    }
    let mut eqs = Vec::new();
    let mut fresh = sys.vars();
    let normalize = |eq: LinearEquation| -> LinearEquation {
        if eq.negatives() >= 2 {
            eq.negated(sys.modulus())
        } else {
            eq
        }
    };
    for eq in sys.eqs() {
        if eq.width() == 3 {
            eqs.push(normalize(eq.clone()));
            continue;
        }
        let v = fresh;
        fresh += 1;
        let head = vec![eq.terms()[0], eq.terms()[1], (v, -1)];
        let tail = vec![(v, 1), eq.terms()[2], eq.terms()[3]];
        eqs.push(normalize(LinearEquation::new(head, 0)));
        eqs.push(normalize(LinearEquation::new(tail, eq.rhs())));
    }
    LinearSystem::new(sys.modulus(), sys.g(), fresh, eqs)
}

/// Encodes a width-3 system as an instance over the affine template: each
/// equation with no negative coefficient becomes an s_h hyperedge in term
/// order, each with exactly one negative an r_h hyperedge with the negated
/// variable third. Right-hand sides must be 0 or g.
pub fn linear_structure(sys: &LinearSystem) -> Result<Structure> {
    let mut out = Structure::new(linear_signature(), sys.vars());
    for (i, eq) in sys.eqs().iter().enumerate() {
        if eq.width() != 3 {
            return Err(Error::WidthViolation(format!(
                "equation {i} has width {}, encoding needs width 3",
                eq.width()
            )));
        }
        if eq.rhs() != 0 && eq.rhs() != sys.g() {
            return Err(Error::InvalidParameter(format!(
                "equation {i} right-hand side {} is neither 0 nor {}",
                eq.rhs(),
                sys.g()
            )));
        }
        let symbol = match (eq.negatives(), eq.rhs() == 0) {
            (0, true) => "s0",
            (0, false) => "sg",
            (1, true) => "r0",
            (1, false) => "rg",
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "equation {i} has {} negative coefficients; normalize first",
                    eq.negatives()
                )));
            }
        };
        let mut positives: Vec<usize> = eq
            .terms()
            .iter()
            .filter(|(_, c)| *c > 0)
            .map(|&(v, _)| v)
            .collect();
        if let Some(&(v, _)) = eq.terms().iter().find(|(_, c)| *c < 0) {
            positives.push(v);
        }
        out.add(symbol, positives)?;
    }
    Ok(out)
}
