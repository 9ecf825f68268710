use std::fmt;

use super::LogicError;

/// 1-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExp {
    Atom(String, Pos),
    Str(String, Pos),
    List(Vec<SExp>, Pos),
}

impl SExp {
    pub fn pos(&self) -> Pos {
        match self {
            SExp::Atom(_, p) | SExp::Str(_, p) | SExp::List(_, p) => *p,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            SExp::Atom(a, _) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExp]> {
        match self {
            SExp::List(items, _) => Some(items),
            _ => None,
        }
    }

    /// Head symbol of a list, if any.
    pub fn head(&self) -> Option<&str> {
        self.list().and_then(|l| l.first()).and_then(|h| h.atom())
    }

    pub fn error(&self, message: impl Into<String>) -> LogicError {
        LogicError::Parse { pos: self.pos(), message: message.into() }
    }
}

impl fmt::Display for SExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExp::Atom(a, _) => write!(f, "{a}"),
            SExp::Str(s, _) => write!(f, "{s:?}"),
            SExp::List(items, _) => {
                write!(f, "(")?;
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Reads every top-level expression. `;` starts a comment running to end of line.
pub fn read_all(text: &str) -> Result<Vec<SExp>, LogicError> {
    let mut stack: Vec<(Vec<SExp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    let err = |pos: Pos, m: &str| LogicError::Parse { pos, message: m.to_string() };
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        let mut advance = |c: char| {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        };
        match c {
            '(' => {
                chars.next();
                advance(c);
                stack.push((Vec::new(), pos));
            }
            ')' => {
                chars.next();
                advance(c);
                let (items, start) = stack.pop().ok_or_else(|| err(pos, "unexpected `)`"))?;
                let e = SExp::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => top.push(e),
                }
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    advance(c);
                }
            }
            '"' => {
                chars.next();
                advance(c);
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            advance('"');
                            break;
                        }
                        Some(ch) => {
                            advance(ch);
                            s.push(ch);
                        }
                        None => return Err(err(pos, "unterminated string")),
                    }
                }
                let e = SExp::Str(s, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => top.push(e),
                }
            }
            c if c.is_whitespace() => {
                chars.next();
                advance(c);
            }
            _ => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || matches!(ch, '(' | ')' | ';' | '"') {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                    advance(ch);
                }
                let e = SExp::Atom(s, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(e),
                    None => top.push(e),
                }
            }
        }
    }
    if let Some((_, start)) = stack.last() {
        return Err(err(*start, "unclosed `(`"));
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let es = read_all("; comment\n(a (b \"c d\") e)\nf").unwrap();
        assert_eq!(es.len(), 2);
        assert_eq!(es[0].to_string(), "(a (b \"c d\") e)");
        assert_eq!(es[0].pos(), Pos { line: 2, col: 1 });
        assert_eq!(es[1].pos(), Pos { line: 3, col: 1 });
    }

    #[test]
    fn unbalanced() {
        assert!(matches!(read_all("(a (b)"), Err(LogicError::Parse { pos: Pos { line: 1, col: 1 }, .. })));
        assert!(matches!(read_all("a)"), Err(LogicError::Parse { pos: Pos { line: 1, col: 2 }, .. })));
    }
}
