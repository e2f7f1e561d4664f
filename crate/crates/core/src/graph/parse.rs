//! DAG text syntax.
//!
//! ```text
//! file      := "dag" "{" item* "}"
//! item      := node-decl | edge-decl
//! node-decl := IDENT [ "[" attr ("," attr)* "]" ]
//! attr      := "role" "=" ROLE | "latent" | "observed"
//! edge-decl := IDENT "->" IDENT
//! ```
//!
//! `#` starts a comment that runs to the end of the line. Nodes default to
//! `role=other, observed`. Edge endpoints must be declared somewhere in the
//! file; declaration order fixes node order.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Dag, GraphError, Node, NodeRole};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Arrow,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Arrow => "`->`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> GraphError {
    GraphError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<(Vec<Spanned>, (usize, usize)), GraphError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut column) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, column);
        if c == '\n' {
            i += 1;
            line += 1;
            column = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = match c {
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            ',' => Tok::Comma,
            '=' => Tok::Eq,
            '-' if chars.get(i + 1) == Some(&'>') => {
                i += 1;
                column += 1;
                Tok::Arrow
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i + 1 < chars.len() && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_') {
                    i += 1;
                    column += 1;
                }
                Tok::Ident(chars[start..=i].iter().collect())
            }
            other => return Err(syntax(tline, tcol, format!("unexpected character `{other}`"))),
        };
        i += 1;
        column += 1;
        toks.push(Spanned {
            tok,
            line: tline,
            column: tcol,
        });
    }
    Ok((toks, (line, column)))
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|s| (s.line, s.column)).unwrap_or(self.eof)
    }

    fn error(&self, expected: &str) -> GraphError {
        let (line, column) = self.here();
        let found = self.peek().map(Tok::describe).unwrap_or_else(|| "end of input".into());
        syntax(line, column, format!("expected {expected}, found {found}"))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), GraphError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    fn ident(&mut self) -> Result<(String, (usize, usize)), GraphError> {
        let at = self.here();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, at))
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn attrs(&mut self, node: &mut Node) -> Result<(), GraphError> {
        self.expect(Tok::LBracket)?;
        let (mut role_set, mut obs_set) = (false, false);
        loop {
            let (attr, (line, column)) = self.ident()?;
            match attr.as_str() {
                "role" => {
                    self.expect(Tok::Eq)?;
                    let (kw, (l, c)) = self.ident()?;
                    if role_set {
                        return Err(syntax(line, column, "role given twice"));
                    }
                    node.role =
                        NodeRole::from_keyword(&kw).ok_or_else(|| syntax(l, c, format!("unknown role `{kw}`")))?;
                    role_set = true;
                }
                "latent" | "observed" => {
                    if obs_set {
                        return Err(syntax(line, column, "latent/observed given twice"));
                    }
                    node.observed = attr == "observed";
                    obs_set = true;
                }
                other => return Err(syntax(line, column, format!("unknown attribute `{other}`"))),
            }
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                Some(Tok::RBracket) => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => return Err(self.error("`,` or `]`")),
            }
        }
    }
}

impl Dag {
    /// Parses the DAG text syntax.
    pub fn parse(text: &str) -> Result<Dag, GraphError> {
        let (toks, eof) = lex(text)?;
        let mut p = Parser { toks, pos: 0, eof };
        let (kw, (line, column)) = p.ident().map_err(|_| p.error("`dag`"))?;
        if kw != "dag" {
            return Err(syntax(line, column, format!("expected `dag`, found `{kw}`")));
        }
        p.expect(Tok::LBrace)?;

        let mut nodes: Vec<Node> = Vec::new();
        let mut edges: Vec<(String, String)> = Vec::new();
        loop {
            match p.peek() {
                Some(Tok::RBrace) => {
                    p.pos += 1;
                    break;
                }
                Some(Tok::Ident(_)) => {}
                _ => return Err(p.error("node, edge or `}`")),
            }
            let (name, _) = p.ident()?;
            if p.peek() == Some(&Tok::Arrow) {
                p.pos += 1;
                let (to, _) = p.ident()?;
                edges.push((name, to));
                continue;
            }
            if nodes.iter().any(|n| n.name == name) {
                return Err(GraphError::DuplicateNode(name));
            }
            let mut node = Node::new(name, NodeRole::Other, true);
            if p.peek() == Some(&Tok::LBracket) {
                p.attrs(&mut node)?;
            }
            nodes.push(node);
        }
        if p.pos < p.toks.len() {
            return Err(p.error("end of input"));
        }
        Dag::new(nodes, &edges)
    }
}

impl core::str::FromStr for Dag {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dag::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_dag() {
        let g = Dag::parse("dag { D [role=target, latent] T2 [role=index] D -> T2 }").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.nodes()[0], Node::new("D", NodeRole::Target, false));
        assert_eq!(g.nodes()[1], Node::new("T2", NodeRole::IndexTest, true));
        assert_eq!(g.edges().collect::<Vec<_>>(), [("D", "T2")]);
    }

    #[test]
    fn reference_error_structure() {
        let g = Dag::parse(
            "# imperfect reference\n\
             dag {\n  D [role=target, latent]\n  T1 [role=reference]\n  T2 [role=index]\n  D -> T1\n  D -> T2\n}\n",
        )
        .unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g.edges().count(), 2);
        assert!(!g.node("D").unwrap().observed);
    }

    #[test]
    fn cycle_reported() {
        let err = Dag::parse("dag { A [role=other] B [role=other] A -> B B -> A }").unwrap_err();
        assert_eq!(err, GraphError::Cycle(alloc::vec!["A".into(), "B".into(), "A".into()]));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match Dag::parse("dag {\n  A [role=bogus]\n}") {
            Err(GraphError::Syntax { line, column, message }) => {
                assert_eq!((line, column), (2, 11));
                assert!(message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
        match Dag::parse("dag { A -> }") {
            Err(GraphError::Syntax {
                line: 1, column: 12, ..
            }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(Dag::parse("graph { }"), Err(GraphError::Syntax { .. })));
        assert!(matches!(Dag::parse("dag { A ; }"), Err(GraphError::Syntax { .. })));
        assert!(matches!(Dag::parse("dag { } extra"), Err(GraphError::Syntax { .. })));
        assert!(matches!(
            Dag::parse("dag { A [latent, observed] }"),
            Err(GraphError::Syntax { .. })
        ));
    }

    #[test]
    fn rejects_duplicates_and_unknown_endpoints() {
        assert_eq!(Dag::parse("dag { A A }"), Err(GraphError::DuplicateNode("A".into())));
        assert_eq!(Dag::parse("dag { A A -> B }"), Err(GraphError::UnknownNode("B".into())));
        assert_eq!(
            Dag::parse("dag { A B A -> B A -> B }"),
            Err(GraphError::DuplicateEdge("A".into(), "B".into()))
        );
    }

    #[test]
    fn edges_may_precede_declarations() {
        let g = Dag::parse("dag { A -> B A B [observed, role=index] }").unwrap();
        assert!(g.has_edge("A", "B"));
        assert_eq!(g.node("B").unwrap().role, NodeRole::IndexTest);
    }

    fn arb_dag() -> impl Strategy<Value = Dag> {
        (1usize..7)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec((0usize..6, any::<bool>()), n),
                    proptest::collection::vec(any::<bool>(), n * (n - 1) / 2),
                )
            })
            .prop_map(|(attrs, edge_bits)| {
                let roles = [
                    NodeRole::Target,
                    NodeRole::ReferenceTest,
                    NodeRole::IndexTest,
                    NodeRole::Covariate,
                    NodeRole::Selection,
                    NodeRole::Other,
                ];
                let nodes: Vec<Node> = attrs
                    .iter()
                    .enumerate()
                    .map(|(i, &(r, obs))| Node::new(format!("N{i}"), roles[r], obs))
                    .collect();
                let mut edges = Vec::new();
                let mut k = 0;
                for i in 0..nodes.len() {
                    for j in (i + 1)..nodes.len() {
                        if edge_bits[k] {
                            edges.push((format!("N{j}"), format!("N{i}")));
                        }
                        k += 1;
                    }
                }
                Dag::new(nodes, &edges).unwrap()
            })
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(g in arb_dag()) {
            let text = g.to_syntax();
            prop_assert_eq!(Dag::parse(&text).unwrap(), g);
        }
    }
}
