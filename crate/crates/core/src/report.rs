use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IssueKind {
    /// The first attribute is missing or not of an identifier type.
    PrimaryKeyNotIdentifier {
        relation: String,
    },
    /// Two relations share a primary-key identifier type.
    DuplicateIdType {
        relations: Vec<String>,
        id_type: String,
    },
    /// An identifier-typed attribute refers to no relation of the catalog.
    DanglingForeignKey {
        relation: String,
        attr: String,
        target: String,
    },
    /// The relation has no (valid) timestamp attribute.
    MissingTimestamp {
        relation: String,
    },
    UnknownRelation {
        relation: String,
    },
    /// The template's order contains a cycle; the listed relations form it.
    CausalCycle {
        cycle: Vec<String>,
    },
    /// A template edge has no direct foreign key between its relations.
    UnbackedEdge {
        from: String,
        to: String,
    },
    /// A template edge implied by other edges; removed.
    TransitiveEdge {
        from: String,
        to: String,
    },
    /// The template's relations do not form one connected graph.
    Disconnected {
        relations: Vec<String>,
    },
    /// A template edge references a relation not listed in the template.
    EdgeOutsideTemplate {
        from: String,
        to: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub severity: Severity,
    pub kind: IssueKind,
}

impl Issue {
    pub fn error(kind: IssueKind) -> Self {
        Issue {
            severity: Severity::Error,
            kind,
        }
    }

    pub fn warning(kind: IssueKind) -> Self {
        Issue {
            severity: Severity::Warning,
            kind,
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: ")?;
        match &self.kind {
            IssueKind::PrimaryKeyNotIdentifier { relation } => {
                write!(f, "relation `{relation}`: first attribute is not an identifier")
            }
            IssueKind::DuplicateIdType { relations, id_type } => write!(
                f,
                "relations {} share the identifier type `{id_type}`",
                relations.join(", ")
            ),
            IssueKind::DanglingForeignKey { relation, attr, target } => write!(
                f,
                "relation `{relation}`: attribute `{attr}` refers to `{target}`, which no relation in the catalog identifies"
            ),
            IssueKind::MissingTimestamp { relation } => {
                write!(f, "relation `{relation}` has no timestamp attribute")
            }
            IssueKind::UnknownRelation { relation } => write!(f, "unknown relation `{relation}`"),
            IssueKind::CausalCycle { cycle } => {
                write!(f, "causal cycle: {} -> {}", cycle.join(" -> "), cycle[0])
            }
            IssueKind::UnbackedEdge { from, to } => {
                write!(f, "edge {from} -> {to} not backed by a foreign key")
            }
            IssueKind::TransitiveEdge { from, to } => {
                write!(f, "edge {from} -> {to} is implied by other edges and was removed")
            }
            IssueKind::Disconnected { relations } => write!(
                f,
                "template is disconnected; unreachable relations: {}",
                relations.join(", ")
            ),
            IssueKind::EdgeOutsideTemplate { from, to } => {
                write!(f, "edge {from} -> {to} uses a relation outside the template")
            }
        }
    }
}

/// Outcome of a validation pass. Validation never fails; it collects issues.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn push(&mut self, issue: Issue) {
        self.issues.push(issue);
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.severity == Severity::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues
            .iter()
            .filter(|i| i.severity == Severity::Warning)
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.issues.extend(other.issues);
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}
