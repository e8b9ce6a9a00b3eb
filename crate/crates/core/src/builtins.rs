//! Named domains with fixed polynomial defining functions.

use serde::Serialize;

use crate::domain::{DomainError, DomainSpec};
use crate::wirtinger::PolyRC;
use crate::C64;

/// The quadric `ρ = |z|²₊ - |z|²₋ + 1` with `p` positive directions.
pub fn quadric(n: usize, p: usize) -> DomainSpec {
    assert!(n >= 2 && p <= n, "quadric needs n >= 2 and p <= n");
    let mut rho = PolyRC::constant(n, C64::new(1.0, 0.0));
    for j in 0..n {
        let t = PolyRC::abs_sq(n, j);
        rho = if j < p { &rho + &t } else { &rho - &t };
    }
    DomainSpec::new(format!("quadric({n},{p})"), rho).expect("quadric is real valued")
}

/// The unit ball `ρ = |z|² - 1`.
pub fn ball(n: usize) -> DomainSpec {
    assert!(n >= 2);
    let mut rho = PolyRC::constant(n, C64::new(-1.0, 0.0));
    for j in 0..n {
        rho = &rho + &PolyRC::abs_sq(n, j);
    }
    DomainSpec::new(format!("ball({n})"), rho).expect("ball is real valued")
}

/// The Siegel half-space `ρ = |z_1|² + ... + |z_{n-1}|² - Im z_n`.
pub fn heisenberg(n: usize) -> DomainSpec {
    assert!(n >= 2);
    let mut rho = -&PolyRC::im_z(n, n - 1);
    for j in 0..n - 1 {
        rho = &rho + &PolyRC::abs_sq(n, j);
    }
    DomainSpec::graph(format!("heisenberg({n})"), rho, n - 1).expect("heisenberg is a graph")
}

/// The tube `ρ = Σ (Re z_j)² - 1` over the unit ball of `R^n`.
pub fn tube(n: usize) -> DomainSpec {
    assert!(n >= 2);
    let mut rho = PolyRC::constant(n, C64::new(-1.0, 0.0));
    for j in 0..n {
        let x = PolyRC::re_z(n, j);
        rho = &rho + &x.checked_mul(&x).expect("degree 2");
    }
    DomainSpec::new(format!("tube({n})"), rho).expect("tube is real valued")
}

/// Real-coordinate text of `P(z_1, z_2) = 2x|z_2|² - x y⁴`, `z_1 = x + iy`.
pub const P_TEXT: &str = "2*x1*(x2^2 + y2^2) - x1*y1^4";

/// Real-coordinate text of the sextic correction `Q(z_1, z_2)`.
pub const Q_TEXT: &str = "(x1^2 + x2^2 + y2^2)^3/3 + (x1^2 + x2^2 + y2^2)^2*y1^2 \
     - x1^6/60 + x1^4*y1^2/4 - x1^2*y1^4/4 + y1^6/60";

/// `P` as a polynomial on `C^3` (independent of `z_3`).
pub fn p_poly() -> PolyRC {
    PolyRC::parse_real(P_TEXT, 3).expect("P parses")
}

/// `Q` as a polynomial on `C^3` (independent of `z_3`).
pub fn q_poly() -> PolyRC {
    PolyRC::parse_real(Q_TEXT, 3).expect("Q parses")
}

/// `ρ = -Im z_3 + P(z_1, z_2) + Q(z_1, z_2)` on `C^3`.
pub fn sextic_graph() -> DomainSpec {
    let rho = &(&(-&PolyRC::im_z(3, 2)) + &p_poly()) + &q_poly();
    DomainSpec::graph("sextic_graph", rho, 2).expect("sextic graph is a graph")
}

/// `ρ = -Im z_3 + P(z_1, z_2)` on `C^3`, without the sextic correction.
pub fn quintic_graph() -> DomainSpec {
    let rho = &(-&PolyRC::im_z(3, 2)) + &p_poly();
    DomainSpec::graph("quintic_graph", rho, 2).expect("quintic graph is a graph")
}

/// Catalog entry for a builtin domain.
#[derive(Clone, Debug, Serialize)]
pub struct BuiltinInfo {
    pub name: &'static str,
    pub formula: String,
    pub description: &'static str,
}

pub fn catalog() -> Vec<BuiltinInfo> {
    vec![
        BuiltinInfo {
            name: "quadric(n,p)",
            formula: "|z_1|^2 + ... + |z_p|^2 - |z_{p+1}|^2 - ... - |z_n|^2 + 1".into(),
            description: "nondegenerate quadric with p positive and n-p negative directions",
        },
        BuiltinInfo {
            name: "ball(n)",
            formula: "|z_1|^2 + ... + |z_n|^2 - 1".into(),
            description: "unit ball",
        },
        BuiltinInfo {
            name: "heisenberg(n)",
            formula: "|z_1|^2 + ... + |z_{n-1}|^2 - Im z_n, i.e. {Im z_n > |z'|^2}".into(),
            description: "half-space bounded by the Heisenberg group (n = 2: {Im z_2 > |z_1|^2})",
        },
        BuiltinInfo {
            name: "tube(n)",
            formula: "(Re z_1)^2 + ... + (Re z_n)^2 - 1".into(),
            description: "strictly pseudoconvex tube over the unit ball of R^n",
        },
        BuiltinInfo {
            name: "sextic_graph",
            formula: format!("-Im z_3 + P + Q, P = {P_TEXT}, Q = {Q_TEXT} (x1 + i y1 = z_1, x2 + i y2 = z_2)"),
            description: "unbounded graph in C^3 whose Levi form vanishes exactly on {x1 = 0, z_2 = 0}",
        },
        BuiltinInfo {
            name: "quintic_graph",
            formula: format!("-Im z_3 + P, P = {P_TEXT}"),
            description: "the sextic graph without its correction term; not uniformly C^2",
        },
    ]
}

/// Resolves `quadric(3,1)`, `ball(2)`, `heisenberg(2)`, `tube(3)`,
/// `sextic_graph`, `quintic_graph`. `heisenberg` alone means `n = 2`.
pub fn resolve(name: &str) -> Result<DomainSpec, BuiltinError> {
    let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
    let (head, args) = match compact.find('(') {
        Some(i) => {
            let inner = compact[i + 1..]
                .strip_suffix(')')
                .ok_or_else(|| BuiltinError::Syntax(name.to_string()))?;
            let args: Vec<usize> = if inner.is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|a| a.parse().map_err(|_| BuiltinError::Syntax(name.to_string())))
                    .collect::<Result<_, _>>()?
            };
            (&compact[..i], args)
        }
        None => (compact.as_str(), Vec::new()),
    };
    let bad = || BuiltinError::Arguments(name.to_string());
    match (head, args.as_slice()) {
        ("quadric", [n, p]) if *n >= 2 && p <= n => Ok(quadric(*n, *p)),
        ("ball", [n]) if *n >= 2 => Ok(ball(*n)),
        ("heisenberg", []) => Ok(heisenberg(2)),
        ("heisenberg", [n]) if *n >= 2 => Ok(heisenberg(*n)),
        ("tube", [n]) if *n >= 2 => Ok(tube(*n)),
        ("sextic_graph", []) => Ok(sextic_graph()),
        ("quintic_graph", []) => Ok(quintic_graph()),
        ("quadric" | "ball" | "heisenberg" | "tube" | "sextic_graph" | "quintic_graph", _) => {
            Err(bad())
        }
        _ => Err(BuiltinError::Unknown(name.to_string())),
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BuiltinError {
    #[error("unknown builtin domain '{0}'")]
    Unknown(String),
    #[error("malformed builtin name '{0}'")]
    Syntax(String),
    #[error("invalid arguments in '{0}'")]
    Arguments(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
