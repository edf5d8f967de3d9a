//! Answer grammar: one item as is, two joined by " and ", three or more as a
//! comma list with a serial comma before the final " and ".

use crate::error::{Error, Result};

pub fn serialize_answer<S: AsRef<str>>(items: &[S]) -> Result<String> {
    match items {
        [] => Err(Error::EmptyAnswer),
        [one] => Ok(one.as_ref().to_string()),
        [a, b] => Ok(format!("{} and {}", a.as_ref(), b.as_ref())),
        [init @ .., last] => {
            let mut out = String::new();
            for item in init {
                out.push_str(item.as_ref());
                out.push_str(", ");
            }
            out.push_str("and ");
            out.push_str(last.as_ref());
            Ok(out)
        }
    }
}

/// Splits on the rightmost " and ", then splits the head on ", ". A serial
/// comma before the final " and " is tolerated, as is a plain comma list.
pub fn parse_answer(s: &str) -> Result<Vec<String>> {
    if s.is_empty() {
        return Err(Error::EmptyAnswerText);
    }
    let (head, last) = match s.rfind(" and ") {
        Some(i) => (&s[..i], Some(&s[i + " and ".len()..])),
        None => (s, None),
    };
    let head = if last.is_some() {
        head.strip_suffix(',').unwrap_or(head)
    } else {
        head
    };
    let mut items: Vec<String> = head.split(", ").map(str::to_string).collect();
    if let Some(last) = last {
        items.push(last.to_string());
    }
    Ok(items)
}
