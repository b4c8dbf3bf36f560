//! Stock structures used across tests, examples and the CLI: cliques, cycles,
//! paths, the positive one-in-three template, its four-ary padded variant,
//! and affine templates over Z_m.

use std::sync::Arc;

use crate::error::Result;
use crate::structure::{Signature, Structure};

/// Signature of a single binary edge relation.
pub fn graph_signature() -> Arc<Signature> {
    Signature::new(vec![("E".into(), 2)]).unwrap()
}

/// Complete loopless graph on `n` vertices, edges in both directions.
pub fn clique(n: usize) -> Structure {
    let mut s = Structure::new(graph_signature(), n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s.add("E", vec![i, j]).unwrap();
            }
        }
    }
    s
}

/// Undirected cycle a_0 - a_1 - ... - a_{n-1} - a_0.
pub fn cycle(n: usize) -> Structure {
    let mut s = Structure::new(graph_signature(), n);
    for i in 0..n {
        let j = (i + 1) % n;
        s.add("E", vec![i, j]).unwrap();
        s.add("E", vec![j, i]).unwrap();
    }
    s
}

/// Undirected path on `n` vertices.
pub fn path(n: usize) -> Structure {
    let mut s = Structure::new(graph_signature(), n);
    for i in 0..n.saturating_sub(1) {
        s.add("E", vec![i, i + 1]).unwrap();
        s.add("E", vec![i + 1, i]).unwrap();
    }
    s
}

/// Triangle instance (same shape as `clique(3)`, kept separate so tests can
/// label instance and template independently).
pub fn triangle() -> Structure {
    clique(3)
}

/// Signature with one ternary relation `r`.
pub fn one_in_three_signature() -> Arc<Signature> {
    Signature::new(vec![("r".into(), 3)]).unwrap()
}

/// Positive one-in-three template over {0,1}: r holds of the triples with
/// exactly one coordinate set.
pub fn one_in_three() -> Structure {
    let mut s = Structure::new(one_in_three_signature(), 2);
    s.add("r", vec![1, 0, 0]).unwrap();
    s.add("r", vec![0, 1, 0]).unwrap();
    s.add("r", vec![0, 0, 1]).unwrap();
    s
}

pub fn two_plus_signature() -> Arc<Signature> {
    Signature::new(vec![("r".into(), 3), ("s".into(), 4)]).unwrap()
}

/// One-in-three extended with a total four-ary relation s = {0,1}^4.
pub fn two_plus() -> Structure {
    let mut t = Structure::new(two_plus_signature(), 2);
    t.add("r", vec![1, 0, 0]).unwrap();
    t.add("r", vec![0, 1, 0]).unwrap();
    t.add("r", vec![0, 0, 1]).unwrap();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    t.add("s", vec![a, b, c, d]).unwrap();
                }
            }
        }
    }
    t
}

pub fn linear_signature() -> Arc<Signature> {
    Signature::new(vec![
        ("r0".into(), 3),
        ("rg".into(), 3),
        ("s0".into(), 3),
        ("sg".into(), 3),
    ])
    .unwrap()
}

/// Affine template over Z_m with designated element g:
///   r_h = { (x,y,z) : x + y - z = h },  s_h = { (x,y,z) : x + y + z = h }
/// for h in {0, g}.
pub fn linear_template(modulus: usize, g: usize) -> Result<Structure> {
    if modulus < 2 {
        return Err(crate::error::Error::InvalidParameter(format!(
            "modulus {modulus} is too small"
        )));
    }
    if g >= modulus {
        return Err(crate::error::Error::out_of_range(
            "designated element",
            g,
            modulus,
        ));
    }
    let mut t = Structure::new(linear_signature(), modulus);
    for x in 0..modulus {
        for y in 0..modulus {
            for z in 0..modulus {
                let minus = (x + y + modulus - z) % modulus;
                let plus = (x + y + z) % modulus;
                if minus == 0 {
                    t.add("r0", vec![x, y, z])?;
                }
                if minus == g {
                    t.add("rg", vec![x, y, z])?;
                }
                if plus == 0 {
                    t.add("s0", vec![x, y, z])?;
                }
                if plus == g {
                    t.add("sg", vec![x, y, z])?;
                }
            }
        }
    }
    Ok(t)
}
