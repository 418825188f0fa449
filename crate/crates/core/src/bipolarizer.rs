//! Bipolarisation: naming schemes, the layered translation of formulas into
//! bipole clauses, universal programs, and the expansion of a bipole into its
//! inference schemes.
//!
//! The translation works in two layers. The negative layer keeps par and with
//! and replaces anything else by a fresh name; the positive layer keeps tensor
//! and plus, keeps duals of atoms, and falls back to the negative layer. A
//! formula `F` then yields the clause `name(F)^ * down(F)`, and the universal
//! program collects one such clause for every named subformula reached along
//! the way.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::formulas::{parse_formula, Atom, Formula, Multiset, ParseError};

/// Assignment of fresh head atoms to the non-atomic formulas the translation
/// names. Atoms always name themselves.
///
/// Fresh names are `n0, n1, ...` in left-to-right depth-first order of the
/// roots handed to [`make_scheme`], skipping any `n<k>` that collides with a
/// base atom. The original formula behind a fresh name stays available as a
/// pretty-printing alias via [`NamingScheme::named_formula`].
#[derive(Clone, Debug, Default)]
pub struct NamingScheme {
    base: Vec<Atom>,
    names: BTreeMap<Formula, Atom>,
    by_atom: BTreeMap<Atom, Formula>,
    next: usize,
}

impl NamingScheme {
    /// The name of a formula: the atom itself for atoms, the assigned fresh
    /// atom otherwise.
    ///
    /// Returns `None` for a non-atomic formula this scheme never named.
    pub fn name_of(&self, f: &Formula) -> Option<Atom> {
        match f {
            Formula::NegAtom(a) => Some(a.clone()),
            _ => self.names.get(f).cloned(),
        }
    }

    /// Reverse lookup: the formula a fresh atom stands for.
    pub fn named_formula(&self, a: &Atom) -> Option<&Formula> {
        self.by_atom.get(a)
    }

    /// Base atoms of the root formulas, sorted.
    pub fn base_atoms(&self) -> &[Atom] {
        &self.base
    }

    /// Fresh name/source pairs in assignment order.
    pub fn alias_table(&self) -> Vec<(Atom, &Formula)> {
        let mut entries: Vec<_> = self.by_atom.iter().collect();
        entries.sort_by_key(|(a, _)| a.name()[1..].parse::<usize>().unwrap_or(usize::MAX));
        entries.into_iter().map(|(a, f)| (a.clone(), f)).collect()
    }

    fn fresh(&mut self, f: &Formula) -> Atom {
        if let Some(a) = self.names.get(f) {
            return a.clone();
        }
        let atom = loop {
            let candidate = Atom::new(format!("n{}", self.next));
            self.next += 1;
            if !self.base.contains(&candidate) {
                break candidate;
            }
        };
        self.names.insert(f.clone(), atom.clone());
        self.by_atom.insert(atom.clone(), f.clone());
        atom
    }
}

/// Builds the naming scheme for a list of root formulas: every non-atomic
/// subformula the layered translation reaches gets a fresh name, in
/// deterministic left-to-right depth-first order.
pub fn make_scheme(roots: &[Formula]) -> NamingScheme {
    let mut scheme = NamingScheme::default();
    let mut base = Vec::new();
    for r in roots {
        base.extend(r.atoms());
    }
    base.sort();
    base.dedup();
    scheme.base = base;

    for r in roots {
        if !matches!(r, Formula::NegAtom(_)) {
            scheme.fresh(r);
            name_positive_layer(r, &mut scheme);
        }
    }
    scheme
}

// Walks the positive layer of a named formula, descending into the negative
// layer, and names every formula the negative layer cannot keep structural.
fn name_positive_layer(f: &Formula, scheme: &mut NamingScheme) {
    match f {
        Formula::Tensor(a, b) | Formula::Plus(a, b) => {
            name_positive_layer(a, scheme);
            name_positive_layer(b, scheme);
        }
        Formula::PosAtom(_) => {}
        other => name_negative_layer(other, scheme),
    }
}

fn name_negative_layer(f: &Formula, scheme: &mut NamingScheme) {
    match f {
        Formula::Par(a, b) | Formula::With(a, b) => {
            name_negative_layer(a, scheme);
            name_negative_layer(b, scheme);
        }
        Formula::NegAtom(_) => {}
        named => {
            // A positive formula in a negative layer gets a fresh name and
            // its own clause, so recurse into it.
            scheme.fresh(named);
            name_positive_layer(named, scheme);
        }
    }
}

/// Negative-layer translation: homomorphic on par and with, the assigned name
/// in all other cases. Always yields a monopole over the extended atom set.
///
/// Panics if the scheme does not cover a formula this translation must name;
/// build the scheme with [`make_scheme`] over the same roots.
pub fn nu_up(f: &Formula, scheme: &NamingScheme) -> Formula {
    match f {
        Formula::Par(a, b) => Formula::par(nu_up(a, scheme), nu_up(b, scheme)),
        Formula::With(a, b) => Formula::with(nu_up(a, scheme), nu_up(b, scheme)),
        other => Formula::NegAtom(
            scheme
                .name_of(other)
                .unwrap_or_else(|| panic!("naming scheme has no name for {other}")),
        ),
    }
}

/// Positive-layer translation: homomorphic on tensor and plus, keeps duals of
/// atoms, and falls back to [`nu_up`] otherwise.
pub fn nu_down(f: &Formula, scheme: &NamingScheme) -> Formula {
    match f {
        Formula::Tensor(a, b) => Formula::tensor(nu_down(a, scheme), nu_down(b, scheme)),
        Formula::Plus(a, b) => Formula::plus(nu_down(a, scheme), nu_down(b, scheme)),
        Formula::PosAtom(_) => f.clone(),
        other => nu_up(other, scheme),
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NuError {
    #[error("cannot form a clause for the bare negative atom {0}")]
    NegAtomInput(Atom),
}

/// A universal-program clause: `clause = head^ * down(source)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipole {
    /// The formula this clause proves, when built by [`nu`]. Clauses loaded
    /// from a program file have no source.
    pub source: Option<Formula>,
    pub head: Atom,
    pub clause: Formula,
}

impl Bipole {
    pub fn shape(&self) -> BipoleShape {
        BipoleShape::of(&self.clause)
    }
}

impl fmt::Display for Bipole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} := {}", self.head, self.clause)
    }
}

/// Translates a named formula into its clause. Errors on a bare negative
/// atom: atoms name themselves and have nothing to prove.
pub fn nu(f: &Formula, scheme: &NamingScheme) -> Result<Bipole, NuError> {
    if let Formula::NegAtom(a) = f {
        return Err(NuError::NegAtomInput(a.clone()));
    }
    let head = scheme
        .name_of(f)
        .unwrap_or_else(|| panic!("naming scheme has no name for {f}"));
    let clause = Formula::tensor(Formula::PosAtom(head.clone()), nu_down(f, scheme));
    debug_assert!(clause.is_bipole());
    Ok(Bipole {
        source: Some(f.clone()),
        head,
        clause,
    })
}

/// The universal program of a formula: one clause per named subformula
/// reached by the layered translation, in naming order. A bare negative atom
/// yields the empty program.
pub fn universal_program(f: &Formula, scheme: &NamingScheme) -> Vec<Bipole> {
    let mut out = Vec::new();
    if matches!(f, Formula::NegAtom(_)) {
        return out;
    }
    // Alias order is assignment order, which is exactly the order clauses
    // are needed: the root first, then inner named subformulas.
    for (_, source) in make_scheme(std::slice::from_ref(f)).alias_table() {
        if scheme.name_of(source).is_some() {
            out.push(nu(source, scheme).expect("named formulas are not bare negative atoms"));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Bipole shapes: trigger occurrences, monopole factors, plus-variants
// ---------------------------------------------------------------------------

/// One positive-atom occurrence in the positive skeleton of a clause. The
/// `atom` is the dual (negative) atom the occurrence consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriggerOcc {
    pub atom: Atom,
}

/// One maximal par-spine component of a monopole: a bare atom or a
/// with-rooted subtree. Each group materializes as one negative hyperlink,
/// with one link per with-resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorGroup {
    pub subformula: Formula,
    /// With-resolutions of the group; each branch lists its par-collected
    /// atoms in formula order. The leftmost with-node varies slowest.
    pub branches: Vec<Vec<Atom>>,
}

/// One monopole leaf of the positive skeleton. `groups` splits its par
/// spine; `branches` enumerates the whole-factor with-resolutions, which is
/// the left-to-right cross product of the group branches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonopoleFactor {
    pub monopole: Formula,
    pub groups: Vec<FactorGroup>,
    pub branches: Vec<Vec<Atom>>,
}

/// One plus-resolution of the positive skeleton: the trigger occurrences and
/// monopole factors that survive the choice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    /// Indexes into [`BipoleShape::occurrences`].
    pub occs: Vec<usize>,
    /// Indexes into [`BipoleShape::factors`].
    pub factors: Vec<usize>,
}

/// Structural analysis of a bipole clause, shared by the sequent rules and
/// the net expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipoleShape {
    pub occurrences: Vec<TriggerOcc>,
    pub factors: Vec<MonopoleFactor>,
    pub variants: Vec<Variant>,
}

impl BipoleShape {
    /// Decomposes the positive skeleton of a clause. The clause must satisfy
    /// [`Formula::is_bipole`].
    pub fn of(clause: &Formula) -> BipoleShape {
        debug_assert!(clause.is_bipole(), "not a bipole: {clause}");
        let mut shape = BipoleShape {
            occurrences: Vec::new(),
            factors: Vec::new(),
            variants: Vec::new(),
        };
        shape.variants = shape.skeleton(clause);
        shape
    }

    fn skeleton(&mut self, f: &Formula) -> Vec<Variant> {
        match f {
            Formula::Tensor(a, b) => {
                let left = self.skeleton(a);
                let right = self.skeleton(b);
                let mut out = Vec::new();
                for l in &left {
                    for r in &right {
                        out.push(Variant {
                            occs: l.occs.iter().chain(&r.occs).copied().collect(),
                            factors: l.factors.iter().chain(&r.factors).copied().collect(),
                        });
                    }
                }
                out
            }
            Formula::Plus(a, b) => {
                let mut out = self.skeleton(a);
                out.extend(self.skeleton(b));
                out
            }
            Formula::PosAtom(a) => {
                self.occurrences.push(TriggerOcc { atom: a.clone() });
                vec![Variant {
                    occs: vec![self.occurrences.len() - 1],
                    factors: vec![],
                }]
            }
            monopole => {
                let mut groups = Vec::new();
                par_spine_groups(monopole, &mut groups);
                let mut branches = vec![Vec::new()];
                for g in &groups {
                    let mut next = Vec::new();
                    for acc in &branches {
                        for b in &g.branches {
                            let mut row: Vec<Atom> = acc.clone();
                            row.extend(b.iter().cloned());
                            next.push(row);
                        }
                    }
                    branches = next;
                }
                self.factors.push(MonopoleFactor {
                    monopole: monopole.clone(),
                    groups,
                    branches,
                });
                vec![Variant {
                    occs: vec![],
                    factors: vec![self.factors.len() - 1],
                }]
            }
        }
    }

    /// Occurrence indexes present in every variant.
    pub fn shared_occs(&self) -> Vec<usize> {
        (0..self.occurrences.len())
            .filter(|i| self.variants.iter().all(|v| v.occs.contains(i)))
            .collect()
    }

    /// The (factor, group) pairs of a variant in premise enumeration order:
    /// factors left to right, groups within each factor left to right.
    pub fn variant_groups(&self, v: &Variant) -> Vec<(usize, usize)> {
        v.factors
            .iter()
            .flat_map(|&fi| (0..self.factors[fi].groups.len()).map(move |gi| (fi, gi)))
            .collect()
    }

    /// Premises of a variant count one per combination of group branches.
    pub fn premise_count(&self, v: &Variant) -> usize {
        if v.factors.is_empty() {
            return 0;
        }
        self.variant_groups(v)
            .iter()
            .map(|(fi, gi)| self.factors[*fi].groups[*gi].branches.len())
            .product()
    }

    /// Decodes a 0-based premise index into one branch choice per
    /// (factor, group) pair, leftmost pair most significant.
    pub fn premise_choices(&self, v: &Variant, premise: usize) -> Vec<usize> {
        let radices: Vec<usize> = self
            .variant_groups(v)
            .iter()
            .map(|(fi, gi)| self.factors[*fi].groups[*gi].branches.len())
            .collect();
        let mut rem = premise;
        let mut out = vec![0; radices.len()];
        for k in (0..radices.len()).rev() {
            out[k] = rem % radices[k];
            rem /= radices[k];
        }
        debug_assert_eq!(rem, 0, "premise index out of range");
        out
    }

    pub fn trigger_of(&self, variant: &Variant) -> Multiset {
        variant
            .occs
            .iter()
            .map(|&i| self.occurrences[i].atom.clone())
            .collect()
    }
}

/// Splits a monopole's par spine into groups: atoms and with-rooted
/// subtrees, left to right.
fn par_spine_groups(m: &Formula, out: &mut Vec<FactorGroup>) {
    match m {
        Formula::Par(a, b) => {
            par_spine_groups(a, out);
            par_spine_groups(b, out);
        }
        other => out.push(FactorGroup {
            subformula: other.clone(),
            branches: with_resolutions(other),
        }),
    }
}

/// Enumerates the with-resolutions of a monopole; each result is the list of
/// par-collected atom leaves of one resolution.
fn with_resolutions(m: &Formula) -> Vec<Vec<Atom>> {
    match m {
        Formula::NegAtom(a) => vec![vec![a.clone()]],
        Formula::Par(a, b) => {
            let left = with_resolutions(a);
            let right = with_resolutions(b);
            let mut out = Vec::new();
            for l in &left {
                for r in &right {
                    out.push(l.iter().chain(r).cloned().collect());
                }
            }
            out
        }
        Formula::With(a, b) => {
            let mut out = with_resolutions(a);
            out.extend(with_resolutions(b));
            out
        }
        other => panic!("not a monopole: {other}"),
    }
}

// ---------------------------------------------------------------------------
// Inference schemes
// ---------------------------------------------------------------------------

/// One derived inference rule of a bipole: the plus-variant at `variant`
/// (1-based), consuming `trigger` and opening one premise per with-branch
/// combination of its monopole factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferenceScheme {
    pub head: Atom,
    /// 1-based variant ordinal.
    pub variant: usize,
    pub trigger: Multiset,
    pub premises: Vec<Multiset>,
}

impl fmt::Display for InferenceScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}: {} =>", self.head, self.variant, self.trigger)?;
        if self.premises.is_empty() {
            write!(f, " .")?;
        } else {
            for (i, p) in self.premises.iter().enumerate() {
                if i > 0 {
                    write!(f, " ;")?;
                }
                write!(f, " [{p}]")?;
            }
        }
        Ok(())
    }
}

/// Expands a bipole into its inference schemes, one per plus-variant.
/// Premises enumerate the cross product of with-branches across the
/// variant's factors, leftmost factor varying slowest.
pub fn inference_schemes(b: &Bipole) -> Vec<InferenceScheme> {
    let shape = b.shape();
    shape
        .variants
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut premises = vec![Multiset::new()];
            for &fi in &v.factors {
                let mut next = Vec::new();
                for acc in &premises {
                    for branch in &shape.factors[fi].branches {
                        let mut m = acc.clone();
                        for a in branch {
                            m.insert(a.clone());
                        }
                        next.push(m);
                    }
                }
                premises = next;
            }
            if v.factors.is_empty() {
                premises.clear();
            }
            InferenceScheme {
                head: b.head.clone(),
                variant: i + 1,
                trigger: shape.trigger_of(v),
                premises,
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Programs
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramError {
    #[error("line {line}: {source}")]
    Syntax {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: expected `head := clause`")]
    MissingSeparator { line: usize },
    #[error("line {line}: invalid head identifier {head:?}")]
    BadHead { line: usize, head: String },
    #[error("line {line}: duplicate head {head}")]
    DuplicateHead { line: usize, head: Atom },
    #[error("line {line}: clause of {head} is not a bipole")]
    NotABipole { line: usize, head: Atom },
    #[error("line {line}: clause of {head} must start with the factor {head}^")]
    HeadMismatch { line: usize, head: Atom },
}

/// An ordered set of bipoles with unique heads.
#[derive(Clone, Debug, Default)]
pub struct Program {
    bipoles: Vec<Bipole>,
}

impl Program {
    pub fn new(bipoles: Vec<Bipole>) -> Program {
        Program { bipoles }
    }

    /// Bipolarizes a formula: builds the naming scheme and universal program.
    pub fn from_formula(f: &Formula) -> (Program, NamingScheme) {
        let scheme = make_scheme(std::slice::from_ref(f));
        let program = Program::new(universal_program(f, &scheme));
        (program, scheme)
    }

    pub fn bipoles(&self) -> &[Bipole] {
        &self.bipoles
    }

    pub fn len(&self) -> usize {
        self.bipoles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bipoles.is_empty()
    }

    pub fn bipole(&self, head: &Atom) -> Option<&Bipole> {
        self.bipoles.iter().find(|b| &b.head == head)
    }

    /// All inference schemes of all bipoles, program order.
    pub fn schemes(&self) -> Vec<InferenceScheme> {
        self.bipoles.iter().flat_map(inference_schemes).collect()
    }

    pub fn scheme(&self, head: &Atom, variant: usize) -> Option<InferenceScheme> {
        let b = self.bipole(head)?;
        inference_schemes(b)
            .into_iter()
            .find(|s| s.variant == variant)
    }

    /// Program file format: one `head := clause` line per bipole. Lines
    /// starting with `#` and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Program, ProgramError> {
        let mut bipoles: Vec<Bipole> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (head_txt, clause_txt) = trimmed
                .split_once(":=")
                .ok_or(ProgramError::MissingSeparator { line })?;
            let head_txt = head_txt.trim();
            if parse_formula(head_txt).map(|f| matches!(f, Formula::NegAtom(_))) != Ok(true) {
                return Err(ProgramError::BadHead {
                    line,
                    head: head_txt.to_string(),
                });
            }
            let head = Atom::new(head_txt);
            if bipoles.iter().any(|b| b.head == head) {
                return Err(ProgramError::DuplicateHead { line, head });
            }
            let clause = parse_formula(clause_txt.trim())
                .map_err(|source| ProgramError::Syntax { line, source })?;
            if !clause.is_bipole() {
                return Err(ProgramError::NotABipole { line, head });
            }
            // The leftmost positive-skeleton factor must be the head dual, as
            // written by the clause translation.
            let mut leftmost = &clause;
            while let Formula::Tensor(a, _) = leftmost {
                leftmost = a;
            }
            if leftmost != &Formula::PosAtom(head.clone()) {
                return Err(ProgramError::HeadMismatch { line, head });
            }
            bipoles.push(Bipole {
                source: None,
                head,
                clause,
            });
        }
        Ok(Program::new(bipoles))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for b in &self.bipoles {
            out.push_str(&b.to_string());
            out.push('\n');
        }
        out
    }
}
