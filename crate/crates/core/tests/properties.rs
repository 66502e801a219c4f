use proptest::prelude::*;
use vstflow::logic::assertion::clsf_expr;
use vstflow::logic::{glb, lle, low_equiv, lub, LabelMap};
use vstflow::semantics::eval_expr;
use vstflow::types::{BinOp, Env, Expr, Ident, Label, MachineState, UnOp, Value};

const VARS: [&str; 3] = ["a", "b", "c"];
const OPS: [BinOp; 8] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Eq, BinOp::Ne, BinOp::Lt, BinOp::And, BinOp::Or];

fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Lo), Just(Label::Hi)]
}

fn label_map() -> impl Strategy<Value = LabelMap<u8>> {
    (prop::collection::btree_map(0u8..4, label(), 0..4), label())
        .prop_map(|(entries, default)| LabelMap { entries, default })
}

fn value(undef: bool) -> BoxedStrategy<Value> {
    let defined = prop_oneof![(0i64..3).prop_map(Value::Int), any::<bool>().prop_map(Value::Bool), (0usize..2).prop_map(Value::Ptr)];
    if undef {
        prop_oneof![4 => defined, 1 => Just(Value::Undef)].boxed()
    } else {
        defined.boxed()
    }
}

fn state(undef: bool) -> impl Strategy<Value = MachineState> {
    (prop::collection::vec(value(undef), 3), prop::collection::vec(value(undef), 2)).prop_map(|(vs, mem)| {
        let env: Env = VARS.iter().zip(vs).map(|(k, v)| (Ident::new(k), v)).collect();
        MachineState::new(env, vec![], mem)
    })
}

fn stack_clsf() -> impl Strategy<Value = LabelMap<Ident>> {
    (prop::collection::vec(label(), 3), label()).prop_map(|(ls, default)| LabelMap {
        entries: VARS.iter().map(|v| Ident::new(v)).zip(ls).collect(),
        default,
    })
}

fn heap_clsf() -> impl Strategy<Value = LabelMap<usize>> {
    (prop::collection::btree_map(0usize..2, label(), 0..2), label())
        .prop_map(|(entries, default)| LabelMap { entries, default })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0i64..3).prop_map(Expr::int), prop::sample::select(&VARS[..]).prop_map(Expr::var)];
    leaf.prop_recursive(3, 16, 2, move |inner| {
        prop_oneof![
            (prop::sample::select(&OPS[..]), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            inner.prop_map(|e| Expr::UnOp(UnOp::Not, Box::new(e))),
        ]
    })
}

/// Every environment over `{0,1,2}` for the three variables.
fn all_envs() -> Vec<Env> {
    (0..27)
        .map(|k| VARS.iter().enumerate().map(|(i, v)| (Ident::new(v), Value::Int(k / 3i64.pow(i as u32) % 3))).collect())
        .collect()
}

fn depth(e: &Expr) -> usize {
    match e {
        Expr::Const(_) | Expr::Var(_) => 0,
        Expr::UnOp(_, a) | Expr::AddrOfDeref(a) => 1 + depth(a),
        Expr::BinOp(_, a, b) => 1 + depth(a).max(depth(b)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn label_lattice_laws(a in label(), b in label(), c in label()) {
        prop_assert_eq!(lub(a, b), lub(b, a));
        prop_assert_eq!(glb(a, b), glb(b, a));
        prop_assert_eq!(lub(a, lub(b, c)), lub(lub(a, b), c));
        prop_assert_eq!(glb(a, glb(b, c)), glb(glb(a, b), c));
        prop_assert_eq!(lub(a, glb(a, b)), a);
        prop_assert_eq!(glb(a, lub(a, b)), a);
        prop_assert_eq!(lub(a, a), a);
        prop_assert_eq!(lle(a, b), lub(a, b) == b);
        prop_assert_eq!(lle(a, b), glb(a, b) == a);
        prop_assert!(lle(Label::Lo, a) && lle(a, Label::Hi));
        prop_assert!(!(lle(a, b) && lle(b, c)) || lle(a, c));
    }

    #[test]
    fn lifted_lattice_laws(a in label_map(), b in label_map(), c in label_map()) {
        prop_assert!(a.lub(&b).same_function(&b.lub(&a)));
        prop_assert!(a.glb(&b).same_function(&b.glb(&a)));
        prop_assert!(a.lub(&b.lub(&c)).same_function(&a.lub(&b).lub(&c)));
        prop_assert!(a.glb(&b.glb(&c)).same_function(&a.glb(&b).glb(&c)));
        prop_assert!(a.lub(&a.glb(&b)).same_function(&a));
        prop_assert!(a.glb(&a.lub(&b)).same_function(&a));
        prop_assert_eq!(a.lle(&b), a.lub(&b).same_function(&b));
        prop_assert!(LabelMap::bottom().lle(&a) && a.lle(&LabelMap::top()));
        for k in 0u8..5 {
            prop_assert_eq!(a.lub(&b).get(&k), lub(a.get(&k), b.get(&k)));
        }
    }

    #[test]
    fn low_equiv_is_symmetric(s in state(true), t in state(true), n in stack_clsf(), n2 in stack_clsf(), a in heap_clsf(), a2 in heap_clsf()) {
        prop_assert_eq!(low_equiv(&s, &t, &n, &n2, &a, &a2), low_equiv(&t, &s, &n2, &n, &a2, &a));
        prop_assert_eq!(low_equiv(&s, &t, &n, &n, &a, &a), low_equiv(&t, &s, &n, &n, &a, &a));
    }

    #[test]
    fn low_equiv_is_reflexive_on_defined_states(s in state(false), n in stack_clsf(), a in heap_clsf()) {
        prop_assert!(low_equiv(&s, &s, &n, &n, &a, &a));
    }

    #[test]
    fn clsf_expr_is_sound(e in expr(), n in stack_clsf()) {
        prop_assume!(depth(&e) <= 3);
        if clsf_expr(&n, &e) == Label::Lo {
            let envs = all_envs();
            for a in &envs {
                for b in envs.iter().filter(|b| VARS.iter().all(|v| n.get(&Ident::new(v)) == Label::Hi || a[&Ident::new(v)] == b[&Ident::new(v)])) {
                    prop_assert_eq!(eval_expr(a, &e), eval_expr(b, &e));
                }
            }
        }
    }
}
