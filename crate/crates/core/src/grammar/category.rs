use std::fmt;

/// A syntactic category: an atom or a CCG slash category.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Atom(String),
    /// `result/arg`: takes `arg` on the right.
    Forward(Box<Category>, Box<Category>),
    /// `result\arg`: takes `arg` on the left.
    Backward(Box<Category>, Box<Category>),
}

pub const ROOT: &str = "ROOT";

impl Category {
    pub fn atom(name: impl Into<String>) -> Self {
        Category::Atom(name.into())
    }

    pub fn root() -> Self {
        Category::atom(ROOT)
    }

    pub fn forward(result: Category, arg: Category) -> Self {
        Category::Forward(Box::new(result), Box::new(arg))
    }

    pub fn backward(result: Category, arg: Category) -> Self {
        Category::Backward(Box::new(result), Box::new(arg))
    }

    pub fn is_root(&self) -> bool {
        matches!(self, Category::Atom(a) if a == ROOT)
    }

    pub fn is_atom(&self) -> bool {
        matches!(self, Category::Atom(_))
    }

    /// Parses `N`, `(N\N)/NP`, ... Slashes associate to the left.
    pub fn parse(src: &str) -> Result<Category, String> {
        let chars: Vec<char> = src.chars().collect();
        let mut at = 0;
        let cat = parse_slashes(&chars, &mut at)?;
        if at != chars.len() {
            return Err(format!("unexpected `{}` in category `{src}`", chars[at]));
        }
        Ok(cat)
    }
}

fn parse_slashes(chars: &[char], at: &mut usize) -> Result<Category, String> {
    let mut left = parse_primary(chars, at)?;
    while *at < chars.len() && (chars[*at] == '/' || chars[*at] == '\\') {
        let slash = chars[*at];
        *at += 1;
        let right = parse_primary(chars, at)?;
        left = if slash == '/' { Category::forward(left, right) } else { Category::backward(left, right) };
    }
    Ok(left)
}

fn parse_primary(chars: &[char], at: &mut usize) -> Result<Category, String> {
    if *at < chars.len() && chars[*at] == '(' {
        *at += 1;
        let inner = parse_slashes(chars, at)?;
        if *at >= chars.len() || chars[*at] != ')' {
            return Err("unbalanced parentheses in category".into());
        }
        *at += 1;
        return Ok(inner);
    }
    let start = *at;
    while *at < chars.len() && (chars[*at].is_ascii_alphanumeric() || chars[*at] == '_') {
        *at += 1;
    }
    if start == *at {
        return Err("expected a category name".into());
    }
    Ok(Category::Atom(chars[start..*at].iter().collect()))
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(c: &Category, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if c.is_atom() {
                write!(f, "{c}")
            } else {
                write!(f, "({c})")
            }
        }
        match self {
            Category::Atom(a) => f.write_str(a),
            Category::Forward(r, a) => {
                side(r, f)?;
                f.write_str("/")?;
                side(a, f)
            }
            Category::Backward(r, a) => {
                side(r, f)?;
                f.write_str("\\")?;
                side(a, f)
            }
        }
    }
}
