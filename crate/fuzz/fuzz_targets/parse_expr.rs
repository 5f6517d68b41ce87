#![no_main]

use asrd::expr::Expr;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(expr) = Expr::parse(data) {
        let text = expr.to_string();
        assert_eq!(Expr::parse(&text).unwrap().to_string(), text);
    }
});
