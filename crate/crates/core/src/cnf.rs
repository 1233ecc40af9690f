//! 3-CNF formulas with exactly three distinct variables per clause.
//!
//! Iteration order is fixed everywhere: clauses in file order, literals in
//! file order, and formula variables in ascending index.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

/// Largest variable count [`exhaustive_solve`] accepts by default.
pub const DEFAULT_EXHAUSTIVE_THRESHOLD: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CnfError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing `p cnf <vars> <clauses>` header")]
    MissingHeader,
    #[error("header announces {expected} clauses, found {found}")]
    ClauseCountMismatch { expected: usize, found: usize },
    #[error("clause {clause} (line {line}) must have exactly 3 distinct variables, found {literals:?}")]
    NotThreeVariables {
        clause: usize,
        line: usize,
        literals: Vec<i64>,
    },
    #[error("variable {var} out of range 1..={variable_count}")]
    VariableOutOfRange { var: usize, variable_count: usize },
    #[error("empty instance: no clauses")]
    EmptyInstance,
    #[error("assignment covers {found} variables, formula has {expected}")]
    AssignmentLength { expected: usize, found: usize },
    #[error("invalid assignment bit string `{0}` (expected only 0 and 1)")]
    InvalidBits(String),
    #[error("{variables} variables exceed the exhaustive-search threshold {threshold}")]
    TooManyVariables { variables: usize, threshold: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    /// 1-based variable index.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }

    /// DIMACS integer: `var` or `-var`.
    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    pub fn is_true_under(self, a: &Assignment) -> bool {
        a.value(self.var) == self.positive
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var)
        } else {
            write!(f, "¬x{}", self.var)
        }
    }
}

/// Disjunction of three literals over three distinct variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Clause {
    literals: [Literal; 3],
}

impl Clause {
    /// Fails unless the three variables are pairwise distinct.
    pub fn new(literals: [Literal; 3]) -> Option<Self> {
        let [a, b, c] = literals;
        (a.var != b.var && a.var != c.var && b.var != c.var).then_some(Clause { literals })
    }

    pub fn literals(&self) -> &[Literal; 3] {
        &self.literals
    }

    pub fn variables(&self) -> [usize; 3] {
        self.literals.map(|l| l.var)
    }

    /// Position of `var` within the clause, if it occurs.
    pub fn position_of(&self, var: usize) -> Option<usize> {
        self.literals.iter().position(|l| l.var == var)
    }

    pub fn is_satisfied_by(&self, a: &Assignment) -> bool {
        self.literals.iter().any(|l| l.is_true_under(a))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.literals;
        write!(f, "({a} ∨ {b} ∨ {c})")
    }
}

/// A nonempty 3-CNF instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Formula {
    variable_count: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(variable_count: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        if clauses.is_empty() {
            return Err(CnfError::EmptyInstance);
        }
        for clause in &clauses {
            for var in clause.variables() {
                if var == 0 || var > variable_count {
                    return Err(CnfError::VariableOutOfRange { var, variable_count });
                }
            }
        }
        Ok(Formula { variable_count, clauses })
    }

    /// Builds a formula from DIMACS-style signed triples.
    pub fn from_triples(variable_count: usize, triples: &[[i64; 3]]) -> Result<Self, CnfError> {
        let clauses = triples
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let lits = t.map(|x| Literal { var: x.unsigned_abs() as usize, positive: x > 0 });
                Clause::new(lits).ok_or(CnfError::NotThreeVariables {
                    clause: i + 1,
                    line: 0,
                    literals: t.to_vec(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Formula::new(variable_count, clauses)
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.variable_count, self.clauses.len());
        for c in &self.clauses {
            let [a, b, d] = c.literals.map(Literal::to_dimacs);
            out.push_str(&format!("{a} {b} {d} 0\n"));
        }
        out
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Total truth assignment over variables `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn all_false(n: usize) -> Self {
        Assignment { values: vec![false; n] }
    }

    /// Assignment whose `x1` is the most significant bit of `code`.
    pub fn from_index(n: usize, code: u64) -> Self {
        Assignment {
            values: (0..n).map(|i| (code >> (n - 1 - i)) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of 1-based variable `var`.
    pub fn value(&self, var: usize) -> bool {
        self.values[var - 1]
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.values[var - 1] = value;
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.values {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = CnfError;

    /// Parses a bit string such as `100`, `x1` first.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(CnfError::InvalidBits(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Assignment::new)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Every clause must already have exactly three distinct variables.
    #[default]
    Strict,
    /// Deduplicate repeated literals and drop tautologies before the strict
    /// check.
    Normalize,
}

pub fn parse_dimacs(text: &str, mode: ParseMode) -> Result<Formula, CnfError> {
    let mut header: Option<(usize, usize)> = None;
    // (starting line, literals)
    let mut raw_clauses: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    let mut current_line = 0;

    'lines: for (idx, line_text) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = line_text.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        if trimmed.starts_with('%') {
            break;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(CnfError::Syntax { line, message: "duplicate problem line".into() });
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            let bad = || CnfError::Syntax {
                line,
                message: format!("malformed problem line `{trimmed}`"),
            };
            if toks.len() != 4 || toks[0] != "p" || toks[1] != "cnf" {
                return Err(bad());
            }
            let n = toks[2].parse().map_err(|_| bad())?;
            let m = toks[3].parse().map_err(|_| bad())?;
            header = Some((n, m));
            continue;
        }
        let Some((n, _)) = header else {
            return Err(CnfError::MissingHeader);
        };
        for tok in trimmed.split_whitespace() {
            if tok.starts_with('%') {
                break 'lines;
            }
            let lit: i64 = tok.parse().map_err(|_| CnfError::Syntax {
                line,
                message: format!("invalid literal `{tok}`"),
            })?;
            if lit == 0 {
                raw_clauses.push((current_line, std::mem::take(&mut current)));
                continue;
            }
            if lit.unsigned_abs() as usize > n {
                return Err(CnfError::VariableOutOfRange {
                    var: lit.unsigned_abs() as usize,
                    variable_count: n,
                });
            }
            if current.is_empty() {
                current_line = line;
            }
            current.push(lit);
        }
    }
    let (n, m) = header.ok_or(CnfError::MissingHeader)?;
    if !current.is_empty() {
        return Err(CnfError::Syntax {
            line: current_line,
            message: "clause not terminated by 0".into(),
        });
    }
    if raw_clauses.len() != m {
        return Err(CnfError::ClauseCountMismatch { expected: m, found: raw_clauses.len() });
    }

    let mut clauses = Vec::with_capacity(raw_clauses.len());
    for (i, (line, mut lits)) in raw_clauses.into_iter().enumerate() {
        if mode == ParseMode::Normalize {
            let mut seen = Vec::with_capacity(lits.len());
            lits.retain(|l| {
                let fresh = !seen.contains(l);
                seen.push(*l);
                fresh
            });
            if lits.iter().any(|l| lits.contains(&-l)) {
                continue;
            }
        }
        let arity_error = || CnfError::NotThreeVariables {
            clause: i + 1,
            line,
            literals: lits.clone(),
        };
        let triple: [i64; 3] = lits.as_slice().try_into().map_err(|_| arity_error())?;
        let clause = Clause::new(triple.map(|x| Literal {
            var: x.unsigned_abs() as usize,
            positive: x > 0,
        }))
        .ok_or_else(arity_error)?;
        clauses.push(clause);
    }
    Formula::new(n, clauses)
}

/// True iff every clause has a literal made true by `a`.
pub fn evaluate(f: &Formula, a: &Assignment) -> Result<bool, CnfError> {
    if a.len() != f.variable_count() {
        return Err(CnfError::AssignmentLength {
            expected: f.variable_count(),
            found: a.len(),
        });
    }
    Ok(f.clauses().iter().all(|c| c.is_satisfied_by(a)))
}

/// Lexicographically first satisfying assignment (`x1` most significant),
/// using the default variable threshold.
pub fn exhaustive_solve(f: &Formula) -> Result<Option<Assignment>, CnfError> {
    exhaustive_solve_within(f, DEFAULT_EXHAUSTIVE_THRESHOLD)
}

pub fn exhaustive_solve_within(f: &Formula, threshold: usize) -> Result<Option<Assignment>, CnfError> {
    let n = f.variable_count();
    if n > threshold || n >= 64 {
        return Err(CnfError::TooManyVariables { variables: n, threshold });
    }
    // Each clause as (mask of its variables, bits that make each literal true).
    let bit = |var: usize| 1u64 << (n - var);
    let masks: Vec<(u64, u64)> = f
        .clauses()
        .iter()
        .map(|c| {
            let mut mask = 0;
            let mut want = 0;
            for l in c.literals() {
                mask |= bit(l.var);
                if l.positive {
                    want |= bit(l.var);
                }
            }
            (mask, want)
        })
        .collect();
    // A clause fails exactly when its variables are all set against their
    // literals, i.e. `code & mask == !want & mask`.
    let found = (0..1u64 << n).find(|&code| masks.iter().all(|&(mask, want)| code & mask != !want & mask));
    Ok(found.map(|code| Assignment::from_index(n, code)))
}

/// The eight clauses over `vars` with every sign pattern; unsatisfiable.
pub fn all_sign_patterns(variable_count: usize, vars: [usize; 3]) -> Result<Formula, CnfError> {
    let clauses = (0..8u8)
        .map(|mask| {
            let lits = [0, 1, 2].map(|k| Literal { var: vars[k], positive: mask & (4 >> k) == 0 });
            Clause::new(lits).ok_or(CnfError::NotThreeVariables {
                clause: mask as usize + 1,
                line: 0,
                literals: lits.map(Literal::to_dimacs).to_vec(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Formula::new(variable_count, clauses)
}

fn random_clause(n: usize, rng: &mut impl Rng) -> Clause {
    let vars: Vec<usize> = (1..=n).collect::<Vec<_>>().choose_multiple(rng, 3).copied().collect();
    let lits = [0, 1, 2].map(|k| Literal { var: vars[k], positive: rng.gen() });
    Clause::new(lits).expect("choose_multiple yields distinct variables")
}

/// Uniform random 3-CNF with `m` clauses over `n >= 3` variables.
pub fn random_formula(n: usize, m: usize, rng: &mut impl Rng) -> Result<Formula, CnfError> {
    if n < 3 {
        return Err(CnfError::VariableOutOfRange { var: 3, variable_count: n });
    }
    Formula::new(n, (0..m).map(|_| random_clause(n, rng)).collect())
}

/// Random 3-CNF satisfied by `planted`: clauses falsified by it are
/// resampled.
pub fn random_planted(
    planted: &Assignment,
    m: usize,
    rng: &mut impl Rng,
) -> Result<Formula, CnfError> {
    let n = planted.len();
    if n < 3 {
        return Err(CnfError::VariableOutOfRange { var: 3, variable_count: n });
    }
    let clauses = (0..m)
        .map(|_| loop {
            let c = random_clause(n, rng);
            if c.is_satisfied_by(planted) {
                break c;
            }
        })
        .collect();
    Formula::new(n, clauses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn phi1() -> Formula {
        Formula::from_triples(3, &[[1, 2, -3]]).unwrap()
    }

    fn bits(s: &str) -> Assignment {
        s.parse().unwrap()
    }

    #[test]
    fn parses_single_clause() {
        let f = parse_dimacs("c example\np cnf 3 1\n1 2 -3 0\n", ParseMode::Strict).unwrap();
        assert_eq!(f, phi1());
        assert_eq!(
            f.clauses()[0].literals(),
            &[Literal::pos(1), Literal::pos(2), Literal::neg(3)]
        );
    }

    #[test]
    fn clauses_may_span_lines() {
        let f = parse_dimacs("p cnf 4 2\n1 2\n-3 0 2 3 4\n0\n%\n0\n", ParseMode::Strict).unwrap();
        assert_eq!(f.clause_count(), 2);
        assert_eq!(f.clauses()[1].variables(), [2, 3, 4]);
    }

    #[test]
    fn strict_rejects_repeated_variable() {
        let err = parse_dimacs("p cnf 3 1\n1 1 2 0\n", ParseMode::Strict).unwrap_err();
        assert!(matches!(err, CnfError::NotThreeVariables { clause: 1, line: 2, .. }));
        // Deduplication leaves two literals, which still violates the rule.
        assert!(parse_dimacs("p cnf 3 1\n1 1 2 0\n", ParseMode::Normalize).is_err());
    }

    #[test]
    fn normalize_drops_tautologies() {
        let f = parse_dimacs("p cnf 3 2\n1 -1 2 0\n1 2 2 3 0\n", ParseMode::Normalize).unwrap();
        assert_eq!(f.clause_count(), 1);
        assert_eq!(f.clauses()[0].variables(), [1, 2, 3]);
        assert_eq!(
            parse_dimacs("p cnf 3 1\n1 -1 2 0\n", ParseMode::Normalize),
            Err(CnfError::EmptyInstance)
        );
        assert!(parse_dimacs("p cnf 3 1\n1 -1 2 0\n", ParseMode::Strict).is_err());
    }

    #[test]
    fn syntax_errors_carry_lines() {
        assert_eq!(parse_dimacs("1 2 3 0\n", ParseMode::Strict), Err(CnfError::MissingHeader));
        assert!(matches!(
            parse_dimacs("p cnf 3 1\n1 2 x 0\n", ParseMode::Strict),
            Err(CnfError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 3 1\n1 2 3\n", ParseMode::Strict),
            Err(CnfError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 3 2\n1 2 3 0\n", ParseMode::Strict),
            Err(CnfError::ClauseCountMismatch { expected: 2, found: 1 })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 3 1\n1 2 4 0\n", ParseMode::Strict),
            Err(CnfError::VariableOutOfRange { var: 4, .. })
        ));
        assert!(matches!(
            parse_dimacs("p dnf 3 1\n", ParseMode::Strict),
            Err(CnfError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn evaluation() {
        let f = phi1();
        assert!(evaluate(&f, &bits("101")).unwrap());
        assert!(!evaluate(&f, &bits("001")).unwrap());
        assert_eq!(
            evaluate(&f, &bits("10")),
            Err(CnfError::AssignmentLength { expected: 3, found: 2 })
        );
    }

    #[test]
    fn all_sign_patterns_is_unsatisfiable() {
        let f = all_sign_patterns(3, [1, 2, 3]).unwrap();
        assert_eq!(f.clause_count(), 8);
        for code in 0..8 {
            assert!(!evaluate(&f, &Assignment::from_index(3, code)).unwrap());
        }
        assert_eq!(exhaustive_solve(&f).unwrap(), None);
    }

    #[test]
    fn exhaustive_is_lexicographic() {
        assert_eq!(exhaustive_solve(&phi1()).unwrap(), Some(bits("000")));
        // (¬x1 ∨ ¬x2 ∨ x3) ∧ (x1 ∨ x2 ∨ x3) ∧ (¬x3 ∨ x1 ∨ x2): first model is 010.
        let f = Formula::from_triples(3, &[[-1, -2, 3], [1, 2, 3], [-3, 1, 2]]).unwrap();
        assert_eq!(exhaustive_solve(&f).unwrap(), Some(bits("010")));
    }

    #[test]
    fn threshold_refuses_large_instances() {
        let f = Formula::from_triples(25, &[[1, 2, 25]]).unwrap();
        assert_eq!(
            exhaustive_solve(&f),
            Err(CnfError::TooManyVariables { variables: 25, threshold: 20 })
        );
        assert!(exhaustive_solve_within(&f, 25).unwrap().is_some());
    }

    #[test]
    fn empty_instance_rejected() {
        assert_eq!(Formula::new(3, vec![]), Err(CnfError::EmptyInstance));
    }

    #[test]
    fn assignment_bits() {
        let a = bits("100");
        assert!(a.value(1) && !a.value(2));
        assert_eq!(a.to_string(), "100");
        assert_eq!(Assignment::from_index(3, 4), a);
        assert!("10x".parse::<Assignment>().is_err());
    }

    #[test]
    fn planted_formulas_are_satisfied() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = Assignment::from_index(5, rng.gen_range(0..32));
            let f = random_planted(&a, 6, &mut rng).unwrap();
            assert!(evaluate(&f, &a).unwrap());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn formula_strategy() -> impl Strategy<Value = Formula> {
            (3usize..=8, 1usize..=12, any::<u64>()).prop_map(|(n, m, seed)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                random_formula(n, m, &mut rng).unwrap()
            })
        }

        proptest! {
            #[test]
            fn dimacs_round_trip(f in formula_strategy()) {
                let back = parse_dimacs(&f.to_dimacs(), ParseMode::Strict).unwrap();
                prop_assert_eq!(back, f);
            }

            #[test]
            fn solver_agrees_with_brute_force(f in formula_strategy()) {
                let n = f.variable_count();
                let models: Vec<u64> = (0..1u64 << n)
                    .filter(|&k| evaluate(&f, &Assignment::from_index(n, k)).unwrap())
                    .collect();
                match exhaustive_solve(&f).unwrap() {
                    Some(a) => {
                        prop_assert!(evaluate(&f, &a).unwrap());
                        prop_assert_eq!(a, Assignment::from_index(n, models[0]));
                    }
                    None => prop_assert!(models.is_empty()),
                }
            }
        }
    }
}
