use hdlfuzz::grammar::{
    generate, mutate_ast, parse, render, render_bound, GenParams, MutateOptions, MAX_WIDTH,
    MIN_WIDTH, VerilogAst, Item, Expr, Stmt, IDENTIFIER_HARD_CAP,
};
use proptest::prelude::*;

fn check_widths(ast: &VerilogAst) {
    fn expr(e: &Expr) {
        if let Expr::Literal { width, .. } = e {
            assert!((MIN_WIDTH..=MAX_WIDTH).contains(width));
        }
        e.children().for_each(expr);
    }
    fn stmt(s: &Stmt) {
        match s {
            Stmt::NonBlockingAssign { rhs, .. } => expr(rhs),
            Stmt::IfElse { cond, then_body, else_body } => {
                expr(cond);
                then_body.iter().chain(else_body).for_each(stmt);
            }
        }
    }
    for m in &ast.modules {
        for p in &m.ports {
            assert!((MIN_WIDTH..=MAX_WIDTH).contains(&p.width));
        }
        for item in &m.items {
            match item {
                Item::NetDecl { width, .. } => assert!((MIN_WIDTH..=MAX_WIDTH).contains(width)),
                Item::ContinuousAssign { rhs, .. } => expr(rhs),
                Item::AlwaysBlock { body, .. } => body.iter().for_each(stmt),
            }
        }
    }
}

#[test]
fn generated_programs_round_trip_over_1000_seeds() {
    for seed in 0..1000 {
        let params = GenParams::with_seed(seed);
        let ast = generate(&params).unwrap();
        check_widths(&ast);
        assert!(ast.max_expr_depth() <= params.max_expr_depth);
        let text = render(&ast);
        assert!(text.len() <= render_bound(&params), "seed {seed}: {} bytes", text.len());
        assert_eq!(parse(&text).unwrap(), ast, "seed {seed}");
    }
}

#[test]
fn seed_7_round_trips() {
    let ast = generate(&GenParams::with_seed(7)).unwrap();
    assert_eq!(parse(&render(&ast)).unwrap(), ast);
}

#[test]
fn mutated_programs_stay_parseable() {
    let options = MutateOptions::default();
    for seed in 0..1000u64 {
        let ast = generate(&GenParams::with_seed(seed)).unwrap();
        let donor = generate(&GenParams::with_seed(seed + 10_000)).unwrap();
        let with_donor = MutateOptions { donor: Some(&donor), ..options };
        let mutated = mutate_ast(&ast, seed, 1 + (seed % 8) as usize, &with_donor);
        check_widths(&mutated);
        assert!(mutated.max_expr_depth() <= options.max_expr_depth.max(ast.max_expr_depth()));
        assert!(mutated.longest_identifier() <= IDENTIFIER_HARD_CAP);
        assert_eq!(parse(&render(&mutated)).unwrap(), mutated, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generation_is_a_function_of_params(
        seed in any::<u64>(),
        max_items in 1usize..20,
        depth in 1usize..6,
        ident in 1usize..24,
        lo in 1u32..=64,
        span in 0u32..64,
    ) {
        let params = GenParams {
            rng_seed: seed,
            max_items,
            max_expr_depth: depth,
            max_identifier_len: ident,
            width_range: (lo, (lo + span).min(64)),
        };
        let a = generate(&params).unwrap();
        prop_assert_eq!(&a, &generate(&params).unwrap());
        prop_assert!(a.modules[0].items.len() <= max_items);
        prop_assert!(a.max_expr_depth() <= depth);
        let text = render(&a);
        prop_assert!(text.len() <= render_bound(&params));
        prop_assert_eq!(parse(&text).unwrap(), a);
    }

    #[test]
    fn repeated_mutation_never_breaks_validity(seed in any::<u64>(), rounds in 1usize..12) {
        let mut ast = generate(&GenParams::with_seed(seed)).unwrap();
        for round in 0..rounds {
            ast = mutate_ast(&ast, seed ^ round as u64, 3, &MutateOptions::default());
            prop_assert_eq!(parse(&render(&ast)).unwrap(), ast.clone());
        }
    }
}
