use std::fmt;

use super::PddlError;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Symbol { text: String, pos: Pos },
    List { items: Vec<Sexp>, pos: Pos },
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Symbol { pos, .. } | Sexp::List { pos, .. } => *pos,
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Symbol { .. } => None,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Sexp::Symbol { text, .. } => format!("`{text}`"),
            Sexp::List { items, .. } => match items.first().and_then(Sexp::symbol) {
                Some(head) => format!("list `({head} ...)`"),
                None => "list".to_string(),
            },
        }
    }
}

/// Reads every top-level s-expression. `;` starts a comment running to the
/// end of the line.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, PddlError> {
    let mut stack: Vec<(Pos, Vec<Sexp>)> = Vec::new();
    let mut top = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            '(' => {
                chars.next();
                col += 1;
                stack.push((pos, Vec::new()));
            }
            ')' => {
                chars.next();
                col += 1;
                let (start, items) = stack.pop().ok_or_else(|| PddlError::Parse {
                    pos,
                    expected: "expression".into(),
                    found: "`)`".into(),
                })?;
                let list = Sexp::List { items, pos: start };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(list),
                    None => top.push(list),
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                    col += 1;
                }
                let sym = Sexp::Symbol { text: s, pos };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(sym),
                    None => top.push(sym),
                }
            }
        }
    }
    if !stack.is_empty() {
        return Err(PddlError::Parse {
            pos: Pos { line, col },
            expected: "`)`".into(),
            found: "end of input".into(),
        });
    }
    Ok(top)
}
