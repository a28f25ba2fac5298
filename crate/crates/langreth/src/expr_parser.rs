//! Parser for the contour-equation DSL, super-index strings and real-time
//! expressions.
//!
//! ```text
//! equation := name '[' labels ']' '=' ('int' | '∫') '{' labels '}' ':' product
//! product  := subfn ('*'? subfn)*
//! subfn    := name '[' labels ']'
//! ```

use crate::contour_ir::{
    canonicalize, labels as label_vec, validate_equation, Contour, ContourEquation, Factor,
    IndexItem, Label, Pos, RealTimeExpression, RealTimeTerm, SubFunction, SuperIndex,
};
use crate::error::{Error, Result, SourceSpan};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    end: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, start: usize, end: usize) -> Self {
        Cursor {
            src,
            pos: start,
            end,
        }
    }

    fn peek_raw(&self) -> Option<char> {
        self.src[self.pos..self.end].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_raw()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else if c == '#' {
                while let Some(c) = self.peek_raw() {
                    if c == '\n' {
                        break;
                    }
                    self.pos += c.len_utf8();
                }
            } else {
                break;
            }
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..self.end]
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        let len = self.peek_raw().map_or(0, char::len_utf8);
        Error::Syntax {
            span: SourceSpan::new(self.pos, self.pos + len),
            message: message.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            let found = self
                .peek_raw()
                .map_or("end of input".to_string(), |f| format!("`{f}`"));
            Err(self.error(format!("expected `{c}`, found {found}")))
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.end
    }

    fn ident(&mut self) -> Result<(String, SourceSpan)> {
        self.skip_ws();
        let start = self.pos;
        match self.peek_raw() {
            Some(c) if c.is_alphabetic() => {}
            _ => return Err(self.error("expected a name")),
        }
        while let Some(c) = self.peek_raw() {
            if c.is_alphanumeric() || c == '\'' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        Ok((
            self.src[start..self.pos].to_string(),
            SourceSpan::new(start, self.pos),
        ))
    }

    /// Single-letter labels, optionally comma separated, up to `close`.
    fn label_list(&mut self, close: char) -> Result<Vec<(Label, SourceSpan)>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            match self.peek_raw() {
                Some(c) if c == close => {
                    self.pos += c.len_utf8();
                    return Ok(out);
                }
                Some(',') if !out.is_empty() => {
                    self.pos += 1;
                }
                Some(c) => match Label::new(c) {
                    Some(l) => {
                        out.push((l, SourceSpan::new(self.pos, self.pos + 1)));
                        self.pos += 1;
                    }
                    None => {
                        return Err(self.error(format!("expected a lowercase label or `{close}`")))
                    }
                },
                None => return Err(self.error(format!("unterminated list, expected `{close}`"))),
            }
        }
    }
}

struct RawEquation {
    eq: ContourEquation,
    lists: Vec<Vec<(Label, SourceSpan)>>,
    span: SourceSpan,
}

fn equation_body(c: &mut Cursor) -> Result<RawEquation> {
    c.skip_ws();
    let start = c.pos;
    let (lhs_name, _) = c.ident()?;
    c.expect('[')?;
    let ext = c.label_list(']')?;
    c.expect('=')?;
    if !(c.eat_str("int") || c.eat_str("∫")) {
        return Err(c.error("expected `int` or `∫`"));
    }
    c.expect('{')?;
    let int = c.label_list('}')?;
    c.expect(':')?;
    let mut product = Vec::new();
    let mut lists = vec![ext.clone(), int.clone()];
    loop {
        let (name, _) = c.ident()?;
        c.expect('[')?;
        let args = c.label_list(']')?;
        product.push(SubFunction {
            name,
            args: args.iter().map(|x| x.0).collect(),
        });
        lists.push(args);
        c.eat('*');
        if c.at_end() {
            break;
        }
    }
    let eq = ContourEquation {
        lhs_name,
        external: ext.iter().map(|x| x.0).collect(),
        internal: int.iter().map(|x| x.0).collect(),
        product,
        contour: Contour::default(),
    };
    Ok(RawEquation {
        eq,
        lists,
        span: SourceSpan::new(start, c.pos),
    })
}

fn locate(raw: &RawEquation, err: &Error) -> SourceSpan {
    let find = |lists: &[Vec<(Label, SourceSpan)>], l: Label, nth: usize| {
        lists
            .iter()
            .find_map(|ls| ls.iter().filter(|x| x.0 == l).nth(nth).map(|x| x.1))
    };
    let header = &raw.lists[..2];
    let args = &raw.lists[2..];
    let hit = match err {
        Error::DuplicateLabel(l) => raw
            .lists
            .iter()
            .find_map(|ls| ls.iter().filter(|x| x.0 == *l).nth(1).map(|x| x.1))
            .or_else(|| raw.lists[1].iter().find(|x| x.0 == *l).map(|x| x.1)),
        Error::OverlappingSets(l) => raw.lists[1].iter().find(|x| x.0 == *l).map(|x| x.1),
        Error::UnknownLabel(l) => find(args, *l, 0),
        Error::DanglingLabel(l) => find(header, *l, 0),
        _ => None,
    };
    hit.unwrap_or(raw.span)
}

fn finish(c: &mut Cursor, raw: RawEquation) -> Result<ContourEquation> {
    if !c.at_end() {
        return Err(c.error("unexpected trailing input"));
    }
    validate_equation(&raw.eq).map_err(|e| {
        let span = locate(&raw, &e);
        e.at(span)
    })?;
    Ok(raw.eq)
}

/// Parses one contour equation. The contour defaults to the extended one.
pub fn parse_equation(text: &str) -> Result<ContourEquation> {
    let mut c = Cursor::new(text, 0, text.len());
    let raw = equation_body(&mut c)?;
    finish(&mut c, raw)
}

/// Byte ranges of blank-line separated stanzas that contain something other
/// than comments.
fn stanzas(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut cur: Option<(usize, usize)> = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let code = line.split('#').next().unwrap_or("");
        let blank = code.trim().is_empty();
        let comment_only = blank && !line.trim().is_empty();
        if blank && !comment_only {
            if let Some(s) = cur.take() {
                out.push(s);
            }
        } else if !blank {
            cur = Some(match cur {
                Some((s, _)) => (s, offset + line.len()),
                None => (offset, offset + line.len()),
            });
        }
        offset += line.len();
    }
    out.extend(cur);
    out
}

/// Parses a file of equations, one per blank-line separated stanza, with
/// `#` comments.
pub fn parse_equations(text: &str) -> Result<Vec<ContourEquation>> {
    stanzas(text)
        .into_iter()
        .map(|(s, e)| {
            let mut c = Cursor::new(text, s, e);
            let raw = equation_body(&mut c)?;
            finish(&mut c, raw)
        })
        .collect()
}

fn parse_item<T: Copy + Ord>(
    c: &mut Cursor,
    leaf: &dyn Fn(char) -> Option<T>,
) -> Result<IndexItem<T>> {
    match c.peek() {
        Some('M') => {
            c.bump();
            c.expect('(')?;
            let mut xs = Vec::new();
            loop {
                match c.peek() {
                    Some(')') => {
                        c.bump();
                        break;
                    }
                    Some(',') => {
                        c.bump();
                    }
                    Some(ch) => match leaf(ch) {
                        Some(x) => {
                            c.bump();
                            xs.push(x);
                        }
                        None => return Err(c.error("expected an argument inside M(…)")),
                    },
                    None => return Err(c.error("unterminated M(…)")),
                }
            }
            Ok(IndexItem::Matsubara(xs))
        }
        Some('R') => {
            let open = c.pos;
            c.bump();
            c.expect('(')?;
            let top = parse_item(c, leaf)?;
            c.expect(',')?;
            let mut rest = Vec::new();
            loop {
                match c.peek() {
                    Some(')') => {
                        c.bump();
                        break;
                    }
                    Some(',') => {
                        c.bump();
                    }
                    Some(_) => rest.push(parse_item(c, leaf)?),
                    None => return Err(c.error("unterminated R(…)")),
                }
            }
            if rest.is_empty() {
                return Err(Error::Syntax {
                    span: SourceSpan::new(open, c.pos),
                    message: "retarded set without retarded arguments".into(),
                });
            }
            Ok(IndexItem::Retarded {
                top: Box::new(top),
                rest,
            })
        }
        Some(ch) => match leaf(ch) {
            Some(x) => {
                c.bump();
                Ok(IndexItem::Plain(x))
            }
            None => Err(c.error(format!("unexpected `{ch}` in super-index"))),
        },
        None => Err(c.error("expected a super-index item")),
    }
}

fn parse_items<T: Copy + Ord + std::fmt::Display>(
    text: &str,
    leaf: &dyn Fn(char) -> Option<T>,
) -> Result<SuperIndex<T>> {
    let mut c = Cursor::new(text, 0, text.len());
    let mut items = Vec::new();
    while !c.at_end() {
        items.push(parse_item(&mut c, leaf)?);
    }
    if items.is_empty() {
        return Err(c.error("empty super-index"));
    }
    let idx = SuperIndex::new(items);
    idx.validate()
        .map_err(|e| e.at(SourceSpan::new(0, text.len())))?;
    Ok(idx)
}

/// Labeled super-index such as `M(ab)R(c,de)f`.
pub fn parse_labeled_index(text: &str) -> Result<SuperIndex<Label>> {
    parse_items(text, &Label::new)
}

/// Háček super-index over argument positions, such as `M(1)R(2,3)`.
pub fn parse_hacek_index(text: &str) -> Result<SuperIndex<Pos>> {
    parse_items(text, &|c: char| {
        c.to_digit(10).filter(|&d| d > 0).map(|d| d as Pos)
    })
}

/// Two-point and one-point shorthand names of components and compositions.
pub fn shorthand(name: &str, args: &[Label]) -> Option<SuperIndex<Label>> {
    use IndexItem::{Matsubara, Plain};
    if name == "M" {
        return Some(SuperIndex::new(vec![Matsubara(args.to_vec())]));
    }
    match *args {
        [a] => match name {
            "1" => Some(SuperIndex::word(&[a])),
            _ => None,
        },
        [a, b] => {
            let items = match name {
                ">" => vec![Plain(a), Plain(b)],
                "<" => vec![Plain(b), Plain(a)],
                "R" => vec![IndexItem::retarded(Plain(a), vec![Plain(b)])],
                "A" => vec![IndexItem::retarded(Plain(b), vec![Plain(a)])],
                "⌉" | "rc" | "r]" => vec![Matsubara(vec![b]), Plain(a)],
                "⌈" | "lc" | "l]" => vec![Matsubara(vec![a]), Plain(b)],
                _ => return None,
            };
            Some(SuperIndex::new(items))
        }
        _ => None,
    }
}

/// Inverse of [`shorthand`] with the Unicode corner symbols.
pub fn langreth_name(idx: &SuperIndex<Label>, args: &[Label]) -> Option<&'static str> {
    ["M", "1", ">", "<", "R", "A", "⌉", "⌈"]
        .into_iter()
        .find(|n| shorthand(n, args).as_ref() == Some(idx))
}

/// Super-index relative to an argument list: shorthand, háček digits or
/// labels.
pub fn parse_index_for(text: &str, args: &[Label]) -> Result<SuperIndex<Label>> {
    let t = text.trim();
    if let Some(idx) = shorthand(t, args) {
        return Ok(idx);
    }
    let idx = if t.chars().any(|c| c.is_ascii_digit()) {
        let h = parse_hacek_index(text)?;
        SuperIndex::from_hacek(&h, args)
    } else {
        let idx = parse_labeled_index(text)?;
        idx.check_cover(args).map(|_| idx)
    };
    idx.map_err(|e| e.at(SourceSpan::new(0, text.len())))
}

/// Component or composition of the equation's left-hand side.
pub fn parse_superindex(text: &str, eq: &ContourEquation) -> Result<SuperIndex<Label>> {
    parse_index_for(text, &eq.external)
}

#[derive(Clone)]
struct Mono {
    coeff: i64,
    steps: Vec<Vec<Label>>,
    factors: Vec<Factor>,
}

fn mono_product(a: &[Mono], b: &[Mono]) -> Vec<Mono> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let mut steps = x.steps.clone();
            steps.extend(y.steps.iter().cloned());
            let mut factors = x.factors.clone();
            factors.extend(y.factors.iter().cloned());
            out.push(Mono {
                coeff: x.coeff * y.coeff,
                steps,
                factors,
            });
        }
    }
    out
}

fn superscript(c: &mut Cursor) -> Result<(String, SourceSpan)> {
    c.skip_ws();
    let start = c.pos;
    if c.eat('{') {
        let inner = c.pos;
        let mut depth = 1;
        while let Some(ch) = c.bump() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok((
                            c.src[inner..c.pos - 1].to_string(),
                            SourceSpan::new(start, c.pos),
                        ));
                    }
                }
                _ => {}
            }
        }
        return Err(Error::Syntax {
            span: SourceSpan::new(start, c.pos),
            message: "unterminated superscript".into(),
        });
    }
    for s in ["rc", "lc"] {
        if c.rest().starts_with(s) {
            c.pos += s.len();
            return Ok((s.to_string(), SourceSpan::new(start, c.pos)));
        }
    }
    match c.bump() {
        Some(ch) if ">RAM⌉⌈1<".contains(ch) => {
            Ok((ch.to_string(), SourceSpan::new(start, c.pos)))
        }
        _ => Err(Error::Syntax {
            span: SourceSpan::new(start, c.pos),
            message: "expected a component superscript".into(),
        }),
    }
}

fn factor(c: &mut Cursor, eq: &ContourEquation, name: String, span: SourceSpan) -> Result<Factor> {
    let f = eq
        .function_by_name(&name)
        .ok_or_else(|| Error::Syntax {
            span,
            message: format!("`{name}` is not a sub-function of the equation"),
        })?
        .clone();
    let mut sub_seen = false;
    let mut index = None;
    for _ in 0..2 {
        if c.eat('_') {
            if sub_seen {
                return Err(c.error("repeated argument subscript"));
            }
            sub_seen = true;
            let at = c.pos;
            c.expect('{')?;
            let args: Vec<Label> = c.label_list('}')?.into_iter().map(|x| x.0).collect();
            if args != f.args {
                return Err(Error::Syntax {
                    span: SourceSpan::new(at, c.pos),
                    message: format!("arguments do not match {f}"),
                });
            }
        } else if index.is_none() && c.eat('^') {
            let (text, sspan) = superscript(c)?;
            let idx = parse_index_for(&text, &f.args).map_err(|e| match e {
                Error::Syntax { span: s, message } => Error::Syntax {
                    span: SourceSpan::new(sspan.start + 1 + s.start, sspan.start + 1 + s.end),
                    message,
                },
                Error::Located { source, .. } => Error::Located {
                    span: sspan,
                    source,
                },
                e => e.at(sspan),
            })?;
            index = Some(idx);
        }
    }
    let index = index.ok_or_else(|| c.error(format!("expected `^` after `{name}`")))?;
    Ok(Factor::new(&f, index))
}

fn sum(c: &mut Cursor, eq: &ContourEquation, close: Option<char>) -> Result<Vec<Mono>> {
    let mut out = Vec::new();
    let mut first = true;
    loop {
        let done = match c.peek() {
            None => true,
            Some(ch) => Some(ch) == close,
        };
        if done {
            if first {
                return Err(c.error("expected a term"));
            }
            return Ok(out);
        }
        let sign = if c.eat('+') {
            1
        } else if c.eat('-') || c.eat('−') {
            -1
        } else if first {
            1
        } else {
            return Err(c.error("expected `+` or `-` between terms"));
        };
        first = false;
        let mut t = term(c, eq, close)?;
        for m in &mut t {
            m.coeff *= sign;
        }
        out.extend(t);
    }
}

fn term(c: &mut Cursor, eq: &ContourEquation, close: Option<char>) -> Result<Vec<Mono>> {
    let mut acc = vec![Mono {
        coeff: 1,
        steps: Vec::new(),
        factors: Vec::new(),
    }];
    let start = c.pos;
    if let Some(d) = c.peek().filter(char::is_ascii_digit) {
        let s = c.pos;
        while c.peek_raw().is_some_and(|x| x.is_ascii_digit()) {
            c.bump();
        }
        let n: i64 = c.src[s..c.pos]
            .parse()
            .map_err(|_| c.error("coefficient out of range"))?;
        if n == 0 && d == '0' {
            acc.clear();
        } else {
            acc[0].coeff = n;
        }
    }
    let mut atoms = 0;
    loop {
        c.skip_ws();
        match c.peek_raw() {
            None => break,
            Some(ch) if Some(ch) == close || ch == '+' || ch == '-' || ch == '−' => break,
            Some('*') | Some('·') => {
                c.bump();
            }
            Some('∫') => {
                c.bump();
                integral_tail(c)?;
            }
            Some('(') => {
                c.bump();
                let inner = sum(c, eq, Some(')'))?;
                c.expect(')')?;
                acc = mono_product(&acc, &inner);
                atoms += 1;
            }
            Some('Θ') => {
                c.bump();
                acc = with_step(c, acc)?;
                atoms += 1;
            }
            Some(_) => {
                let (name, span) = c.ident()?;
                match name.as_str() {
                    "int" | "intM" => integral_tail(c)?,
                    "Theta" => {
                        acc = with_step(c, acc)?;
                        atoms += 1;
                    }
                    _ => {
                        let f = factor(c, eq, name, span)?;
                        for m in &mut acc {
                            m.factors.push(f.clone());
                        }
                        atoms += 1;
                    }
                }
            }
        }
    }
    if atoms == 0 && c.pos == start {
        return Err(c.error("expected a term"));
    }
    Ok(acc)
}

/// Integration markers are informational: the integrated labels follow from
/// the equation's internal set.
fn integral_tail(c: &mut Cursor) -> Result<()> {
    c.eat_str("M");
    if c.eat('{') || c.eat('[') {
        while let Some(ch) = c.bump() {
            if ch == '}' || ch == ']' {
                return Ok(());
            }
        }
        return Err(c.error("unterminated integration marker"));
    }
    Ok(())
}

fn with_step(c: &mut Cursor, acc: Vec<Mono>) -> Result<Vec<Mono>> {
    c.expect('(')?;
    let chain: Vec<Label> = c.label_list(')')?.into_iter().map(|x| x.0).collect();
    Ok(acc
        .into_iter()
        .map(|mut m| {
            m.steps.push(chain.clone());
            m
        })
        .collect())
}

/// Parses a real-time expression over the equation's sub-functions, e.g.
/// `∫ A^R B^> + ∫ A^> B^A + ∫M A^⌉ B^⌈`. Factor superscripts may be shorthand
/// names, labeled super-indices or háček digits; parentheses distribute.
pub fn parse_expression(text: &str, eq: &ContourEquation) -> Result<RealTimeExpression> {
    let mut c = Cursor::new(text, 0, text.len());
    let monos = sum(&mut c, eq, None)?;
    if !c.at_end() {
        return Err(c.error("unexpected trailing input"));
    }
    let terms = monos
        .into_iter()
        .map(|m| RealTimeTerm::new(m.coeff, m.steps, m.factors, &eq.internal))
        .collect();
    Ok(canonicalize(&RealTimeExpression::new(terms)))
}

/// Parses one emitted rule line, `D^> = ∫ A^R B^> + …`, returning the
/// target and the right-hand side.
pub fn parse_rule(text: &str, eq: &ContourEquation) -> Result<(SuperIndex, RealTimeExpression)> {
    let mut c = Cursor::new(text, 0, text.len());
    c.skip_ws();
    let (name, span) = c.ident()?;
    if name != eq.lhs_name {
        return Err(Error::Syntax {
            span,
            message: format!("rule is for `{name}`, not `{}`", eq.lhs_name),
        });
    }
    c.expect('^')?;
    let (sup, sup_span) = superscript(&mut c)?;
    let target = parse_superindex(&sup, eq).map_err(|e| e.at(sup_span))?;
    if c.eat('_') {
        superscript(&mut c)?;
    }
    c.expect('=')?;
    let monos = sum(&mut c, eq, None)?;
    if !c.at_end() {
        return Err(c.error("unexpected trailing input"));
    }
    let terms = monos
        .into_iter()
        .map(|m| RealTimeTerm::new(m.coeff, m.steps, m.factors, &eq.internal))
        .collect();
    Ok((target, canonicalize(&RealTimeExpression::new(terms))))
}

/// Convenience: an equation with an explicit contour.
pub fn parse_equation_on(text: &str, contour: Contour) -> Result<ContourEquation> {
    parse_equation(text).map(|e| e.with_contour(contour))
}

/// Convenience for tests and fixtures: labels from a compact string.
pub fn label_set(s: &str) -> Vec<Label> {
    label_vec(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_triangle() {
        let eq = parse_equation("X[a,b] = int{c,d} : A[a,c]*B[c,b]*C[c,d]*D[a,d]*E[d,b]").unwrap();
        assert_eq!(eq.product.len(), 5);
        assert_eq!(eq.internal, label_set("cd"));
        assert_eq!(eq.contour, Contour::Extended);
    }

    #[test]
    fn vertex_and_product() {
        let eq = parse_equation("H[a,b] = int{c,d} : A[a,c]*B[a,d]*C[c,d,b]").unwrap();
        assert_eq!(eq.product[2].args, label_set("cdb"));
        let eq = parse_equation("D[a,b] = int{} : A[a,b] B[b,a]").unwrap();
        assert!(eq.internal.is_empty());
        assert_eq!(eq.product.len(), 2);
    }

    #[test]
    fn errors_carry_spans() {
        let text = "D[a,b] = int{a} : A[a,b]";
        let err = parse_equation(text).unwrap_err();
        assert_eq!(err.span(), Some(SourceSpan::new(13, 14)));
        assert!(
            matches!(err, Error::Located { ref source, .. } if **source == Error::OverlappingSets(Label('a')))
        );
        let err = parse_equation("D[a,b] = int{c} : A[a,b]").unwrap_err();
        assert!(
            matches!(err, Error::Located { ref source, .. } if **source == Error::DanglingLabel(Label('c')))
        );
        let err = parse_equation("D[a,b] = int{} : A[a,B]").unwrap_err();
        assert_eq!(err.span(), Some(SourceSpan::new(21, 22)));
        for bad in [
            "",
            "D",
            "D[a",
            "D[a] = ",
            "D[a] = int{} :",
            "D[ä] = int{} : A[a]",
            "∫∫∫",
        ] {
            assert!(parse_equation(bad).unwrap_err().span().is_some(), "{bad}");
        }
    }

    #[test]
    fn rule_lines() {
        let eq = parse_equation("D[a,b] = int{c} : A[a,c]*B[c,b]").unwrap();
        let (t, e) = parse_rule("D^> = ∫ A^R B^> + ∫ A^> B^A + ∫ A^⌉ B^⌈", &eq).unwrap();
        assert_eq!(t.to_string(), "ab");
        assert_eq!(e.terms.len(), 3);
        let (t, _) = parse_rule("D^{R(2,1)}_{ab} = ∫ A^A B^A", &eq).unwrap();
        assert_eq!(t.to_string(), "R(b,a)");
        assert!(parse_rule("E^> = 0", &eq).unwrap_err().span().is_some());
    }

    #[test]
    fn superindex_shorthands() {
        let eq = parse_equation("D[a,d] = int{} : A[a,d]").unwrap();
        let h = |s: &str| {
            parse_superindex(s, &eq)
                .unwrap()
                .to_hacek(&eq.external)
                .unwrap()
                .to_string()
        };
        assert_eq!(h(">"), "12");
        assert_eq!(h("<"), "21");
        assert_eq!(h("R"), "R(1,2)");
        assert_eq!(h("A"), "R(2,1)");
        assert_eq!(h("M(a)d"), "M(1)2");
        assert_eq!(h("⌈"), "M(1)2");
        assert_eq!(h("lc"), "M(1)2");
        assert_eq!(h("rc"), "M(2)1");
        assert_eq!(h("M"), "M(12)");
        assert_eq!(h("R(2,1)"), "R(2,1)");
        assert!(matches!(
            parse_superindex("a", &eq),
            Err(Error::Located { ref source, .. }) if **source == Error::ArityMismatch { expected: 2, found: 1 }
        ));
        assert!(parse_superindex("R(a,", &eq).unwrap_err().span().is_some());
    }

    #[test]
    fn expression_forms() {
        let eq = parse_equation("D[a,b] = int{c} : A[a,c]*B[c,b]").unwrap();
        let x = parse_expression("∫ A^R B^> + ∫ A^> B^A + ∫M A^⌉ B^⌈", &eq).unwrap();
        let y = parse_expression(
            "A^{R(a,c)} B^{cb} + A^{ac}B^{R(b,c)} + A^{M(c)a} B^{M(c)b}",
            &eq,
        )
        .unwrap();
        assert_eq!(x, y);
        assert_eq!(x.terms.len(), 3);
        assert_eq!(x.terms[0].scalar.neg_i_power, 1);
        let z = parse_expression("A^R (B^> - B^<) + A^R B^<", &eq).unwrap();
        assert_eq!(z, parse_expression("A^R B^>", &eq).unwrap());
        assert!(parse_expression("0", &eq).unwrap().is_empty());
        let s = parse_expression("-2 Θ(a,c,b) A^{ac} B^{cb}", &eq).unwrap();
        assert_eq!(s.terms[0].scalar.coeff, -2);
        assert_eq!(s.terms[0].steps, vec![label_set("acb")]);
        assert!(parse_expression("Q^R", &eq).unwrap_err().span().is_some());
        assert!(parse_expression("A^{R(a,c", &eq)
            .unwrap_err()
            .span()
            .is_some());
    }

    #[test]
    fn stanza_file() {
        let text = "# two equations\nD[a,b] = int{c} :\n  A[a,c]*B[c,b]\n\n# product\nD[a,b] = int{} : A[a,b]*B[b,a]\n";
        let eqs = parse_equations(text).unwrap();
        assert_eq!(eqs.len(), 2);
        let bad = "D[a,b] = int{c} : A[a,c]*B[c,b]\n\nD[a,b] = int{} : A[a,b]*B[b,q]\n";
        let err = parse_equations(bad).unwrap_err();
        let span = err.span().unwrap();
        assert_eq!(&bad[span.start..span.end], "q");
    }
}
