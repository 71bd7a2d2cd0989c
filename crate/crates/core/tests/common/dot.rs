// Tokenizer and statement reader for the DOT subset the diagram module emits.

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Id(String),
    Str(String),
    Arrow,
    Punct(char),
}

/// Errors on anything outside the supported subset.
pub fn tokenize(dot: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = dot.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        s.push('\\');
                        s.push(*chars.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some(&c) => {
                        s.push(c);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Token::Str(s));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Token::Arrow);
            i += 2;
        } else if "{}[]=;,".contains(c) {
            out.push(Token::Punct(c));
            i += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            out.push(Token::Id(chars[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

/// Node and edge statements of a tokenized digraph, with their
/// attributes. Checks balanced braces and brackets.
#[allow(clippy::type_complexity)]
pub fn statements(
    tokens: &[Token],
) -> Result<(Vec<(String, Vec<(String, String)>)>, Vec<(String, String, Vec<(String, String)>)>), String> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut i = 0;
    let id = |t: Option<&Token>| match t {
        Some(Token::Id(s)) | Some(Token::Str(s)) => Some(s.clone()),
        _ => None,
    };
    if id(tokens.first()).as_deref() != Some("digraph") {
        return Err("expected digraph".into());
    }
    i += 1;
    if let Some(Token::Id(_)) = tokens.get(i) {
        i += 1;
    }
    if tokens.get(i) != Some(&Token::Punct('{')) {
        return Err("expected {".into());
    }
    i += 1;
    let attrs = |i: &mut usize| -> Result<Vec<(String, String)>, String> {
        let mut list = Vec::new();
        if tokens.get(*i) != Some(&Token::Punct('[')) {
            return Ok(list);
        }
        *i += 1;
        loop {
            match tokens.get(*i) {
                Some(Token::Punct(']')) => {
                    *i += 1;
                    return Ok(list);
                }
                Some(Token::Punct(',')) => *i += 1,
                _ => {
                    let k = id(tokens.get(*i)).ok_or("attribute name")?;
                    if tokens.get(*i + 1) != Some(&Token::Punct('=')) {
                        return Err(format!("expected = after {k}"));
                    }
                    let v = id(tokens.get(*i + 2)).ok_or("attribute value")?;
                    list.push((k, v));
                    *i += 3;
                }
            }
        }
    };
    loop {
        match tokens.get(i) {
            None => return Err("missing }".into()),
            Some(Token::Punct('}')) => {
                if i + 1 != tokens.len() {
                    return Err("trailing tokens".into());
                }
                break;
            }
            Some(Token::Punct(';')) => i += 1,
            _ => {
                let a = id(tokens.get(i)).ok_or(format!("statement at token {i}"))?;
                i += 1;
                if tokens.get(i) == Some(&Token::Punct('=')) {
                    id(tokens.get(i + 1)).ok_or("graph attribute value")?;
                    i += 2;
                } else if tokens.get(i) == Some(&Token::Arrow) {
                    let b = id(tokens.get(i + 1)).ok_or("edge target")?;
                    i += 2;
                    edges.push((a, b, attrs(&mut i)?));
                } else {
                    let list = attrs(&mut i)?;
                    if !matches!(a.as_str(), "node" | "edge" | "graph") {
                        nodes.push((a, list));
                    }
                }
            }
        }
    }
    Ok((nodes, edges))
}
