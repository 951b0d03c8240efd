//! Finding formulas in LaTeX source and splicing replacements back in.
//! Everything outside a replaced formula is copied byte for byte.

use stexify::tex::{extract_formulas, rewrite, RewritePlan};

const DOC: &str = r#"\documentclass{article}
\begin{document}
Inline $xy$, display \[ \lambda x.x \] and
\begin{equation}
  x y z % a comment with $dollars$
\end{equation}
Not math: \$5, 100\%, \verb|$x$|.
\begin{verbatim}
$also not math$
\end{verbatim}
\end{document}
"#;

fn main() {
    let spans = extract_formulas(DOC).unwrap();
    for s in &spans {
        println!("#{} {:<20} bytes {:?} {:?}", s.id, s.kind.to_string(), s.inner, s.raw);
    }
    let plan = RewritePlan::new().replace(0, "\\app{\\var{x}}{\\var{y}}");
    let out = rewrite(DOC, &spans, &plan).unwrap();
    print!("\n{out}");
}
