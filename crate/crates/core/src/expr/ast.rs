use std::fmt;

/// A phase-space coordinate, 1-based: `q1..qs` and `p1..ps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Q(usize),
    P(usize),
}

impl Var {
    /// Position in the flat coordinate vector `(q1..qs, p1..ps)`.
    pub fn flat_index(self, s: usize) -> usize {
        match self {
            Var::Q(i) => i - 1,
            Var::P(i) => s + i - 1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Var::Q(i) | Var::P(i) => i,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::Q(i) => write!(f, "q{i}"),
            Var::P(i) => write!(f, "p{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 5] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree. Literals are always finite and non-negative; negative
/// constants are represented as `Neg(Num(..))`, which is what the parser
/// produces for them.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Literal constructor that keeps the non-negative literal invariant.
    pub fn num(v: f64) -> Expr {
        if v < 0.0 || (v == 0.0 && v.is_sign_negative()) {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            Expr::Num(v)
        }
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Box::new(arg))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    /// Largest `q`/`p` index appearing in the tree (0 if none).
    pub fn max_var_index(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(v) => v.index(),
            Expr::Neg(e) | Expr::Call(_, e) => e.max_var_index(),
            Expr::Binary(_, a, b) => a.max_var_index().max(b.max_var_index()),
        }
    }

    /// Whether any `p` variable appears.
    pub fn uses_momenta(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => matches!(v, Var::P(_)),
            Expr::Neg(e) | Expr::Call(_, e) => e.uses_momenta(),
            Expr::Binary(_, a, b) => a.uses_momenta() || b.uses_momenta(),
        }
    }

    /// Depth of the tree, leaves counting as 1.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn is_atom(&self) -> bool {
        matches!(self, Expr::Num(_) | Expr::Var(_) | Expr::Call(..))
    }

    fn write_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_atom() {
            write!(f, "{self}")
        } else {
            write!(f, "({self})")
        }
    }
}

/// Serialization parenthesizes every compound operand, so re-parsing always
/// rebuilds the same tree regardless of precedence.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                e.write_operand(f)
            }
            Expr::Binary(op, a, b) => {
                a.write_operand(f)?;
                write!(f, " {} ", op.symbol())?;
                b.write_operand(f)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}
