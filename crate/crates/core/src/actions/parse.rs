use thiserror::Error;

use super::{ActionKind, ScrollDirection, WebAction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionParseError {
    #[error("unknown action kind '{0}'")]
    UnknownKind(String),
    #[error("{kind} expects {expected} argument(s), got {found}")]
    ArityMismatch {
        kind: ActionKind,
        expected: &'static str,
        found: usize,
    },
    #[error("bad literal: {0}")]
    BadLiteral(String),
    #[error("only one action may be issued at a time")]
    MultipleActions,
    #[error("malformed action: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Literal {
    Text(String),
    Bool(bool),
    Int(i64),
}

struct Call<'a> {
    name: &'a str,
    args: Vec<Literal>,
    /// Byte offset just past the closing parenthesis.
    end: usize,
}

/// Parse exactly one call expression.
pub fn parse_action(text: &str) -> Result<WebAction, ActionParseError> {
    let start = text.len() - text.trim_start().len();
    let call = parse_call(text, start)?;
    if !text[call.end..].trim().is_empty() {
        return Err(if text[call.end..].contains('(') {
            ActionParseError::MultipleActions
        } else {
            ActionParseError::Malformed(format!("trailing text '{}'", text[call.end..].trim()))
        });
    }
    build(call)
}

fn parse_call(text: &str, start: usize) -> Result<Call<'_>, ActionParseError> {
    let bytes = text.as_bytes();
    let mut i = start;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
        i += 1;
    }
    let name = &text[start..i];
    if name.is_empty() {
        return Err(ActionParseError::Malformed("expected action name".into()));
    }
    while i < bytes.len() && bytes[i] == b' ' {
        i += 1;
    }
    if bytes.get(i) != Some(&b'(') {
        return Err(ActionParseError::Malformed(format!("expected '(' after {name}")));
    }
    i += 1;

    let mut args = Vec::new();
    loop {
        i = skip_spaces(text, i);
        match bytes.get(i) {
            None => return Err(ActionParseError::Malformed("unclosed '('".into())),
            Some(b')') if args.is_empty() => {
                i += 1;
                break;
            }
            _ => {}
        }
        let (lit, next) = parse_literal(text, i)?;
        args.push(lit);
        i = skip_spaces(text, next);
        match bytes.get(i) {
            Some(b',') => i += 1,
            Some(b')') => {
                i += 1;
                break;
            }
            _ => return Err(ActionParseError::Malformed("expected ',' or ')'".into())),
        }
    }
    Ok(Call { name, args, end: i })
}

fn skip_spaces(text: &str, mut i: usize) -> usize {
    let bytes = text.as_bytes();
    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

fn parse_literal(text: &str, i: usize) -> Result<(Literal, usize), ActionParseError> {
    let rest = &text[i..];
    let mut chars = rest.char_indices();
    match chars.next() {
        Some((_, q @ ('\'' | '"'))) => {
            let mut out = String::new();
            let mut escaped = false;
            for (off, c) in chars {
                if escaped {
                    out.push(match c {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    return Ok((Literal::Text(out), i + off + c.len_utf8()));
                } else {
                    out.push(c);
                }
            }
            Err(ActionParseError::BadLiteral("unterminated string".into()))
        }
        Some(_) => {
            let len = rest
                .find(|c: char| c == ',' || c == ')' || c.is_whitespace())
                .unwrap_or(rest.len());
            let word = &rest[..len];
            let lit = match word {
                "True" => Literal::Bool(true),
                "False" => Literal::Bool(false),
                w => Literal::Int(
                    w.parse::<i64>()
                        .map_err(|_| ActionParseError::BadLiteral(w.to_string()))?,
                ),
            };
            Ok((lit, i + len))
        }
        None => Err(ActionParseError::Malformed("unexpected end of input".into())),
    }
}

fn text_arg(lit: Literal) -> Result<String, ActionParseError> {
    match lit {
        Literal::Text(s) => Ok(s),
        other => Err(ActionParseError::BadLiteral(format!(
            "expected quoted text, got {other:?}"
        ))),
    }
}

fn bool_arg(lit: Literal) -> Result<bool, ActionParseError> {
    match lit {
        Literal::Bool(b) => Ok(b),
        other => Err(ActionParseError::BadLiteral(format!(
            "expected True or False, got {other:?}"
        ))),
    }
}

fn build(call: Call<'_>) -> Result<WebAction, ActionParseError> {
    let kind = ActionKind::from_name(call.name)
        .ok_or_else(|| ActionParseError::UnknownKind(call.name.to_string()))?;
    let found = call.args.len();
    let arity = |expected: &'static str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(ActionParseError::ArityMismatch {
                kind,
                expected,
                found,
            })
        }
    };
    let mut args = call.args.into_iter();
    let mut next = || args.next().expect("arity checked");

    Ok(match kind {
        ActionKind::Click => {
            arity("1", found == 1)?;
            WebAction::Click {
                bid: text_arg(next())?,
            }
        }
        ActionKind::Fill => {
            arity("2 or 3", found == 2 || found == 3)?;
            let bid = text_arg(next())?;
            let value = text_arg(next())?;
            let press_enter = if found == 3 { bool_arg(next())? } else { false };
            WebAction::Fill {
                bid,
                value,
                press_enter,
            }
        }
        ActionKind::SelectOption => {
            arity("2", found == 2)?;
            WebAction::SelectOption {
                bid: text_arg(next())?,
                option: text_arg(next())?,
            }
        }
        ActionKind::Scroll => {
            arity("1", found == 1)?;
            let direction = match text_arg(next())?.as_str() {
                "up" => ScrollDirection::Up,
                "down" => ScrollDirection::Down,
                other => return Err(ActionParseError::BadLiteral(format!("direction '{other}'"))),
            };
            WebAction::Scroll { direction }
        }
        ActionKind::Goto => {
            arity("1", found == 1)?;
            WebAction::Goto {
                url: text_arg(next())?,
            }
        }
        ActionKind::NewTab => {
            arity("1", found == 1)?;
            WebAction::NewTab {
                url: text_arg(next())?,
            }
        }
        ActionKind::TabFocus => {
            arity("1", found == 1)?;
            let index = match next() {
                Literal::Int(n) if n >= 0 => n as usize,
                other => {
                    return Err(ActionParseError::BadLiteral(format!(
                        "tab index must be a non-negative integer, got {other:?}"
                    )))
                }
            };
            WebAction::TabFocus { index }
        }
        ActionKind::TabClose => {
            arity("0", found == 0)?;
            WebAction::TabClose
        }
        ActionKind::GoBack => {
            arity("0", found == 0)?;
            WebAction::GoBack
        }
        ActionKind::GoForward => {
            arity("0", found == 0)?;
            WebAction::GoForward
        }
        ActionKind::Press => {
            arity("2", found == 2)?;
            WebAction::Press {
                bid: text_arg(next())?,
                key: text_arg(next())?,
            }
        }
        ActionKind::Stop => {
            arity("1", found == 1)?;
            WebAction::Stop {
                answer: text_arg(next())?,
            }
        }
        ActionKind::Noop => {
            arity("0", found == 0)?;
            WebAction::Noop
        }
    })
}

/// Repairs the two slips generators make most often: issuing more than one
/// action, and lowercase boolean literals.
///
/// The first call expression that parses after repair is kept; when none does,
/// the first call-shaped span is returned so the parser can report why. Text
/// with no call at all is passed through unchanged.
pub fn auto_correct(text: &str) -> String {
    let spans = call_spans(text);
    let repaired: Vec<String> = spans.iter().map(|&(s, e)| fix_bools(&text[s..e])).collect();
    if let Some(ok) = repaired.iter().find(|c| parse_action(c).is_ok()) {
        return ok.clone();
    }
    match repaired.into_iter().next() {
        Some(first) => first,
        None => text.to_string(),
    }
}

/// Byte spans of every `name(...)` expression, with quotes respected.
fn call_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let is_ident = |b: u8| b.is_ascii_alphanumeric() || b == b'_';
        if is_ident(bytes[i]) && (i == 0 || !is_ident(bytes[i - 1])) {
            let start = i;
            let mut j = i;
            while j < bytes.len() && is_ident(bytes[j]) {
                j += 1;
            }
            let name = &text[start..j];
            let mut k = j;
            while k < bytes.len() && bytes[k] == b' ' {
                k += 1;
            }
            if ActionKind::from_name(name).is_some() && bytes.get(k) == Some(&b'(') {
                if let Some(end) = matching_paren(text, k) {
                    spans.push((start, end));
                    i = end;
                    continue;
                }
            }
            i = j;
        } else {
            i += 1;
        }
    }
    spans
}

fn matching_paren(text: &str, open: usize) -> Option<usize> {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (off, c) in text[open + 1..].char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
        } else {
            match c {
                '\'' | '"' => quote = Some(c),
                ')' => return Some(open + 1 + off + 1),
                _ => {}
            }
        }
    }
    None
}

fn fix_bools(call: &str) -> String {
    let mut out = String::with_capacity(call.len());
    let mut quote: Option<char> = None;
    let mut escaped = false;
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        match word.as_str() {
            "true" => out.push_str("True"),
            "false" => out.push_str("False"),
            w => out.push_str(w),
        }
        word.clear();
    };
    for c in call.chars() {
        if let Some(q) = quote {
            out.push(c);
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            word.push(c);
            continue;
        }
        flush(&mut word, &mut out);
        if c == '\'' || c == '"' {
            quote = Some(c);
        }
        out.push(c);
    }
    flush(&mut word, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_listing_examples() {
        assert_eq!(
            parse_action("click('201')").unwrap(),
            WebAction::Click { bid: "201".into() }
        );
        assert_eq!(
            parse_action("fill('237', 'example value', False)").unwrap(),
            WebAction::Fill {
                bid: "237".into(),
                value: "example value".into(),
                press_enter: false
            }
        );
        assert_eq!(
            parse_action("press('1038', \"Enter\")").unwrap(),
            WebAction::Press {
                bid: "1038".into(),
                key: "Enter".into()
            }
        );
        assert_eq!(parse_action(" tab_focus(2) ").unwrap(), WebAction::TabFocus { index: 2 });
        assert_eq!(parse_action("go_back()").unwrap(), WebAction::GoBack);
        assert_eq!(
            parse_action(r"stop('It\'s 5')").unwrap(),
            WebAction::Stop {
                answer: "It's 5".into()
            }
        );
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_action("click('a51') click('b2')").unwrap_err(),
            ActionParseError::MultipleActions
        );
        assert!(matches!(
            parse_action("hover('1')"),
            Err(ActionParseError::UnknownKind(k)) if k == "hover"
        ));
        assert!(matches!(
            parse_action("click('1', '2')"),
            Err(ActionParseError::ArityMismatch { found: 2, .. })
        ));
        assert!(matches!(
            parse_action("fill('24', 'x', false)"),
            Err(ActionParseError::BadLiteral(_))
        ));
        assert!(matches!(
            parse_action("tab_focus(-1)"),
            Err(ActionParseError::BadLiteral(_))
        ));
        assert!(matches!(
            parse_action("scroll('left')"),
            Err(ActionParseError::BadLiteral(_))
        ));
        assert!(matches!(parse_action("click('1'"), Err(ActionParseError::Malformed(_))));
        assert!(matches!(parse_action(""), Err(ActionParseError::Malformed(_))));
    }

    #[test]
    fn display_round_trips() {
        for text in [
            "click('201')",
            "fill('24', 'Hello World', True)",
            "select_option('7', 'Blue')",
            "scroll('down')",
            "goto('http://s/a?q=1')",
            "new_tab('http://s/')",
            "tab_focus(3)",
            "tab_close()",
            "go_forward()",
            "press('9', 'Enter')",
            "stop('a \\' b')",
            "noop()",
        ] {
            assert_eq!(parse_action(text).unwrap().to_string(), text);
        }
    }

    #[test]
    fn auto_correct_examples() {
        assert_eq!(
            auto_correct("fill('24','Hello World', false)"),
            "fill('24','Hello World', False)"
        );
        assert_eq!(auto_correct("click('1') click('2')"), "click('1')");
        assert_eq!(auto_correct("click('1')"), "click('1')");
        // literal text inside quotes is untouched
        assert_eq!(
            auto_correct("fill('3', 'false', true)"),
            "fill('3', 'false', True)"
        );
        assert_eq!(
            auto_correct("Action: click('12') because it's the link"),
            "click('12')"
        );
        assert_eq!(auto_correct("no action here"), "no action here");
    }
}
