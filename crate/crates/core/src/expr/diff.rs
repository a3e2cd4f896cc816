use super::{BinOp, Expr, Func};

fn is_num(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Num(x) if *x == v)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_num(&a, 0.0) => b,
        _ if is_num(&b, 0.0) => a,
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        _ => Expr::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_num(&b, 0.0) => a,
        _ if is_num(&a, 0.0) => neg(b),
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        _ => Expr::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_num(&a, 0.0) || is_num(&b, 0.0) => Expr::Num(0.0),
        _ if is_num(&a, 1.0) => b,
        _ if is_num(&b, 1.0) => a,
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        _ => Expr::binary(BinOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        return Expr::Num(0.0);
    }
    if is_num(&b, 1.0) {
        return a;
    }
    Expr::binary(BinOp::Div, a, b)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => Expr::Num(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 1.0) {
        return a;
    }
    if is_num(&b, 0.0) {
        return Expr::Num(1.0);
    }
    Expr::binary(BinOp::Pow, a, b)
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::call(f, a)
}

pub(super) fn differentiate(e: &Expr) -> Expr {
    match e {
        Expr::Num(_) | Expr::Const(_) => Expr::Num(0.0),
        Expr::Var => Expr::Num(1.0),
        Expr::Neg(a) => neg(differentiate(a)),
        Expr::Binary(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => add(differentiate(a), differentiate(b)),
                BinOp::Sub => sub(differentiate(a), differentiate(b)),
                BinOp::Mul => add(mul(differentiate(a), b.clone()), mul(a.clone(), differentiate(b))),
                BinOp::Div => {
                    let da = differentiate(a);
                    let db = differentiate(b);
                    sub(
                        div(da, b.clone()),
                        div(mul(a.clone(), db), pow(b.clone(), Expr::Num(2.0))),
                    )
                }
                BinOp::Pow => {
                    if b.is_constant() {
                        let lowered = match b {
                            Expr::Num(k) => Expr::Num(k - 1.0),
                            _ => sub(b.clone(), Expr::Num(1.0)),
                        };
                        mul(mul(b.clone(), pow(a.clone(), lowered)), differentiate(a))
                    } else if a.is_constant() {
                        mul(mul(e.clone(), call(Func::Log, a.clone())), differentiate(b))
                    } else {
                        // d(a^b) = a^b (b' log a + b a'/a)
                        let inner = add(
                            mul(differentiate(b), call(Func::Log, a.clone())),
                            div(mul(b.clone(), differentiate(a)), a.clone()),
                        );
                        mul(e.clone(), inner)
                    }
                }
            }
        }
        Expr::Call(func, a) => {
            let da = differentiate(a);
            let a = a.as_ref().clone();
            let outer = match func {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Sinh => call(Func::Cosh, a),
                Func::Cosh => call(Func::Sinh, a),
                Func::Exp => call(Func::Exp, a),
                Func::Log => return div(da, a),
                Func::Sqrt => return div(da, mul(Expr::Num(2.0), call(Func::Sqrt, a))),
                Func::Tanh => return div(da, pow(call(Func::Cosh, a), Expr::Num(2.0))),
                Func::Abs => div(a.clone(), call(Func::Abs, a)),
            };
            mul(outer, da)
        }
    }
}
