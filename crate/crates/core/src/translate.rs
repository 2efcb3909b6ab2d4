//! Translation of checked specifications into presentation formats. Each
//! module becomes one output file (`<module>.tex` or `<module>.md`) under the
//! requested save directory; the returned uri names the lexicographically
//! first file written, which clients open as the main document.
//!
//! Output is byte-deterministic: definitions render in source order with a
//! fixed operator table, so identical input bytes always produce identical
//! output bytes.

use crate::base_protocol::RpcError;
use crate::minispec::ast::{BinOp, Expr, ExprKind, FuncDef, SpecModule, Type, UnOp};
use crate::minispec::pretty::{
    expr_prec, print_expr, print_trace, PREC_CMP, PREC_IMP, PREC_LOWEST, PREC_NEG,
};
use crate::slsp_types::DocumentUri;
use std::fmt::Write as _;
use std::fs;

/// Language ids the translator understands, as announced in capabilities.
pub const LANGUAGE_IDS: &[&str] = &["latex", "markdown"];

/// Render every module to `language_id` and write the files under `save_uri`.
/// Existing files are overwritten. Returns the main document's uri.
pub fn translate(
    modules: &[&SpecModule],
    language_id: &str,
    save_uri: &DocumentUri,
) -> Result<DocumentUri, RpcError> {
    let ext = match language_id {
        "latex" => "tex",
        "markdown" => "md",
        other => {
            return Err(RpcError::invalid_params(format!("unknown languageId: {other}")));
        }
    };
    if modules.is_empty() {
        return Err(RpcError::invalid_params("no documents to translate"));
    }
    let dir = save_uri
        .to_path()
        .ok()
        .filter(|p| p.is_dir())
        .ok_or_else(|| RpcError::internal("saveUri is not a writable directory"))?;
    let mut names = Vec::with_capacity(modules.len());
    for module in modules {
        let name = format!("{}.{ext}", module.name);
        let content = render(module, language_id).expect("language id checked above");
        let path = dir.join(&name);
        fs::write(&path, content)
            .map_err(|e| RpcError::internal(format!("cannot write {}: {e}", path.display())))?;
        names.push(name);
    }
    names.sort();
    DocumentUri::from_path(&dir.join(&names[0])).map_err(RpcError::internal)
}

/// Render one module to the given language; `None` for an unknown id.
pub fn render(module: &SpecModule, language_id: &str) -> Option<String> {
    match language_id {
        "latex" => Some(render_latex(module)),
        "markdown" => Some(render_markdown(module)),
        _ => None,
    }
}

/// A definition tagged with its source position, for source-order rendering.
enum Def<'a> {
    Func(&'a FuncDef),
    Trace(&'a crate::minispec::ast::TraceDef),
    Lemma(&'a crate::minispec::ast::LemmaDef),
}

fn defs_in_source_order(m: &SpecModule) -> Vec<Def<'_>> {
    let mut defs: Vec<(u32, u32, Def)> = Vec::new();
    for f in &m.functions {
        defs.push((f.location.start.line, f.location.start.character, Def::Func(f)));
    }
    for t in &m.traces {
        defs.push((t.location.start.line, t.location.start.character, Def::Trace(t)));
    }
    for l in &m.lemmas {
        defs.push((l.location.start.line, l.location.start.character, Def::Lemma(l)));
    }
    defs.sort_by_key(|(line, ch, _)| (*line, *ch));
    defs.into_iter().map(|(_, _, d)| d).collect()
}

fn render_markdown(m: &SpecModule) -> String {
    let mut out = format!("# Module {}\n", m.name);
    for def in defs_in_source_order(m) {
        match def {
            Def::Func(f) => {
                let _ = write!(out, "\n## Function `{}`\n\n```\n", f.name);
                let params: Vec<String> =
                    f.params.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
                let _ = write!(
                    out,
                    "{}({}): {} ==\n  {}\n",
                    f.name,
                    params.join(", "),
                    f.return_type,
                    print_expr(&f.body)
                );
                if let Some(pre) = &f.pre {
                    let _ = write!(out, "pre {}\n", print_expr(pre));
                }
                if let Some(post) = &f.post {
                    let _ = write!(out, "post {}\n", print_expr(post));
                }
                out.push_str("```\n");
            }
            Def::Trace(t) => {
                let _ = write!(
                    out,
                    "\n## Trace `{}`\n\n```\ntrace {} = {}\n```\n",
                    t.name,
                    t.name,
                    print_trace(&t.body)
                );
            }
            Def::Lemma(l) => {
                let _ = write!(
                    out,
                    "\n## Lemma `{}`\n\n```\nlemma {} : {}\n```\n",
                    l.name,
                    l.name,
                    print_expr(&l.body)
                );
            }
        }
    }
    out
}

fn render_latex(m: &SpecModule) -> String {
    let mut out = String::from(
        "\\documentclass{article}\n\\usepackage{amsmath}\n\\usepackage{amssymb}\n\n",
    );
    let _ = write!(out, "\\title{{Module {}}}\n\\date{{}}\n\n", tex_text(&m.name));
    out.push_str("\\begin{document}\n\\maketitle\n");
    for def in defs_in_source_order(m) {
        match def {
            Def::Func(f) => {
                let _ = write!(out, "\n\\section*{{Function \\texttt{{{}}}}}\n", tex_text(&f.name));
                let mut lines = Vec::new();
                let params: Vec<String> = f
                    .params
                    .iter()
                    .map(|p| format!("{} : {}", tex_text(&p.name), tex_type(p.ty)))
                    .collect();
                let head = if params.is_empty() {
                    format!("{} : {}", tex_text(&f.name), tex_type(f.return_type))
                } else {
                    format!(
                        "{}({}) : {}",
                        tex_text(&f.name),
                        params.join(",\\ "),
                        tex_type(f.return_type)
                    )
                };
                lines.push(head);
                let app = if f.params.is_empty() {
                    tex_text(&f.name)
                } else {
                    let args: Vec<String> =
                        f.params.iter().map(|p| tex_text(&p.name)).collect();
                    format!("{}({})", tex_text(&f.name), args.join(",\\ "))
                };
                lines.push(format!("{app} = {}", tex_expr_str(&f.body)));
                if let Some(pre) = &f.pre {
                    lines.push(format!("\\textbf{{pre}}\\quad {}", tex_expr_str(pre)));
                }
                if let Some(post) = &f.post {
                    lines.push(format!("\\textbf{{post}}\\quad {}", tex_expr_str(post)));
                }
                let _ = write!(out, "\\begin{{gather*}}\n{}\n\\end{{gather*}}\n", lines.join(" \\\\\n"));
            }
            Def::Trace(t) => {
                let _ = write!(
                    out,
                    "\n\\section*{{Trace \\texttt{{{}}}}}\n\\texttt{{{}}}\n",
                    tex_text(&t.name),
                    tex_text(&print_trace(&t.body))
                );
            }
            Def::Lemma(l) => {
                let _ = write!(
                    out,
                    "\n\\section*{{Lemma \\texttt{{{}}}}}\n\\begin{{gather*}}\n{}\n\\end{{gather*}}\n",
                    tex_text(&l.name),
                    tex_expr_str(&l.body)
                );
            }
        }
    }
    out.push_str("\n\\end{document}\n");
    out
}

/// Escape for LaTeX text and \texttt contexts (identifiers and trace source).
fn tex_text(s: &str) -> String {
    s.replace('_', "\\_").replace('{', "\\{").replace('}', "\\}")
}

fn tex_type(t: Type) -> &'static str {
    match t {
        Type::Int => "\\mathbb{Z}",
        Type::Nat => "\\mathbb{N}",
        Type::Bool => "\\mathbb{B}",
    }
}

fn tex_binop(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Mul => "\\cdot",
        BinOp::Div => "/",
        BinOp::Mod => "\\bmod",
        BinOp::Eq => "=",
        BinOp::Ne => "\\neq",
        BinOp::Lt => "<",
        BinOp::Le => "\\leq",
        BinOp::Gt => ">",
        BinOp::Ge => "\\geq",
        BinOp::And => "\\land",
        BinOp::Or => "\\lor",
        BinOp::Imp => "\\Rightarrow",
    }
}

fn tex_expr_str(e: &Expr) -> String {
    let mut out = String::new();
    tex_expr(&mut out, e, PREC_LOWEST);
    out
}

/// Math-mode expression rendering; parenthesization mirrors the source
/// pretty-printer so the two stay in visual agreement.
fn tex_expr(out: &mut String, e: &Expr, ctx: u8) {
    let p = expr_prec(e);
    let parens = p < ctx;
    if parens {
        out.push('(');
    }
    match &e.kind {
        ExprKind::IntLit(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::BoolLit(b) => {
            out.push_str(if *b { "\\mathsf{true}" } else { "\\mathsf{false}" });
        }
        ExprKind::Var(x) => out.push_str(&tex_text(x)),
        ExprKind::Unary(UnOp::Neg, a) => {
            out.push('-');
            tex_expr(out, a, PREC_NEG + 1);
        }
        ExprKind::Unary(UnOp::Not, a) => {
            out.push_str("\\lnot ");
            tex_expr(out, a, PREC_CMP + 1);
        }
        ExprKind::Binary(op, a, b) => {
            let (lctx, rctx) = if *op == BinOp::Imp {
                (p + 1, p)
            } else if p == PREC_CMP {
                (p + 1, p + 1)
            } else {
                (p, p + 1)
            };
            tex_expr(out, a, lctx);
            let _ = write!(out, " {} ", tex_binop(*op));
            tex_expr(out, b, rctx);
        }
        ExprKind::If(c, t, f) => {
            out.push_str("\\mathsf{if}\\; ");
            tex_expr(out, c, PREC_IMP);
            out.push_str(" \\;\\mathsf{then}\\; ");
            tex_expr(out, t, PREC_LOWEST);
            out.push_str(" \\;\\mathsf{else}\\; ");
            tex_expr(out, f, PREC_LOWEST);
        }
        ExprKind::Let(x, v, b) => {
            let _ = write!(out, "\\mathsf{{let}}\\; {} = ", tex_text(x));
            tex_expr(out, v, PREC_IMP);
            out.push_str(" \\;\\mathsf{in}\\; ");
            tex_expr(out, b, PREC_LOWEST);
        }
        ExprKind::Call(f, args) => {
            out.push_str(&tex_text(f));
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                tex_expr(out, a, PREC_LOWEST);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minispec::analyze;

    const FIXTURE: &str = "module Calc
        safe_div(a: int, b: int): int ==
          a / b
        pre b <> 0
        post RESULT * b <= a

        trace smoke = (safe_div(4, 2) | safe_div(9, 3)){1,2}

        lemma guard : not (b = 0) => b <> 0
        end";

    fn fixture_module() -> SpecModule {
        let checked = analyze(FIXTURE);
        assert!(checked.is_clean(), "fixture: {:?}", checked.diagnostics);
        checked.module.unwrap()
    }

    #[test]
    fn markdown_output_matches_golden() {
        let expected = "\
# Module Calc

## Function `safe_div`

```
safe_div(a: int, b: int): int ==
  a / b
pre b <> 0
post RESULT * b <= a
```

## Trace `smoke`

```
trace smoke = (safe_div(4, 2) | safe_div(9, 3)){1,2}
```

## Lemma `guard`

```
lemma guard : not (b = 0) => b <> 0
```
";
        assert_eq!(render(&fixture_module(), "markdown").unwrap(), expected);
    }

    #[test]
    fn latex_output_matches_golden() {
        let expected = "\
\\documentclass{article}
\\usepackage{amsmath}
\\usepackage{amssymb}

\\title{Module Calc}
\\date{}

\\begin{document}
\\maketitle

\\section*{Function \\texttt{safe\\_div}}
\\begin{gather*}
safe\\_div(a : \\mathbb{Z},\\ b : \\mathbb{Z}) : \\mathbb{Z} \\\\
safe\\_div(a,\\ b) = a / b \\\\
\\textbf{pre}\\quad b \\neq 0 \\\\
\\textbf{post}\\quad RESULT \\cdot b \\leq a
\\end{gather*}

\\section*{Trace \\texttt{smoke}}
\\texttt{(safe\\_div(4, 2) | safe\\_div(9, 3))\\{1,2\\}}

\\section*{Lemma \\texttt{guard}}
\\begin{gather*}
\\lnot (b = 0) \\Rightarrow b \\neq 0
\\end{gather*}

\\end{document}
";
        assert_eq!(render(&fixture_module(), "latex").unwrap(), expected);
    }

    #[test]
    fn definitions_render_in_source_order() {
        let checked = analyze(
            "module M lemma first : p => p f(x: int): int == x trace last = f(1) end",
        );
        assert!(checked.is_clean());
        let md = render(&checked.module.unwrap(), "markdown").unwrap();
        let first = md.find("Lemma `first`").unwrap();
        let mid = md.find("Function `f`").unwrap();
        let last = md.find("Trace `last`").unwrap();
        assert!(first < mid && mid < last, "{md}");
    }

    #[test]
    fn unknown_language_is_rejected() {
        assert_eq!(render(&fixture_module(), "pdf"), None);
        let dir = tempfile::tempdir().unwrap();
        let save = DocumentUri::from_path(dir.path()).unwrap();
        let err = translate(&[&fixture_module()], "pdf", &save).unwrap_err();
        assert_eq!(err.code, crate::base_protocol::codes::INVALID_PARAMS);
        assert!(err.message.contains("pdf"));
    }

    #[test]
    fn translate_writes_one_file_per_module_and_returns_the_first() {
        let b = analyze("module Beta f(x: int): int == x end").module.unwrap();
        let a = analyze("module Alpha g(x: int): int == x end").module.unwrap();
        let dir = tempfile::tempdir().unwrap();
        let save = DocumentUri::from_path(dir.path()).unwrap();
        let main = translate(&[&b, &a], "markdown", &save).unwrap();
        assert!(main.as_str().ends_with("/Alpha.md"), "main: {}", main.as_str());
        assert!(dir.path().join("Alpha.md").is_file());
        assert!(dir.path().join("Beta.md").is_file());
        let text = std::fs::read_to_string(dir.path().join("Beta.md")).unwrap();
        assert!(text.starts_with("# Module Beta"));
    }

    #[test]
    fn existing_output_is_overwritten() {
        let m = fixture_module();
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("Calc.tex"), "stale").unwrap();
        let save = DocumentUri::from_path(dir.path()).unwrap();
        translate(&[&m], "latex", &save).unwrap();
        let text = std::fs::read_to_string(dir.path().join("Calc.tex")).unwrap();
        assert!(text.starts_with("\\documentclass{article}"));
    }

    #[test]
    fn missing_save_directory_is_an_internal_error() {
        let m = fixture_module();
        let save = DocumentUri::new("file:///no/such/directory");
        let err = translate(&[&m], "latex", &save).unwrap_err();
        assert_eq!(err.code, crate::base_protocol::codes::INTERNAL_ERROR);
    }

    #[test]
    fn output_is_deterministic() {
        let m = fixture_module();
        for lang in LANGUAGE_IDS {
            assert_eq!(render(&m, lang).unwrap(), render(&m, lang).unwrap());
        }
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        translate(&[&m], "latex", &DocumentUri::from_path(dir1.path()).unwrap()).unwrap();
        translate(&[&m], "latex", &DocumentUri::from_path(dir2.path()).unwrap()).unwrap();
        let a = std::fs::read(dir1.path().join("Calc.tex")).unwrap();
        let b = std::fs::read(dir2.path().join("Calc.tex")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_corpus_module_translates_in_both_formats() {
        let corpus = [
            FIXTURE,
            "module M f(): nat == 0 end",
            "module M f(p: bool): bool == if p then not p else p or true
             lemma L : let k = 3 in k * 2 = 6 end",
            "module M t(x: nat): nat == x mod 2
             trace loop = let v in {0, 1, -0} . t(v){0,2} end",
        ];
        for text in corpus {
            let checked = analyze(text);
            assert!(checked.is_clean(), "fixture: {:?}", checked.diagnostics);
            let m = checked.module.unwrap();
            for lang in LANGUAGE_IDS {
                let rendered = render(&m, lang).unwrap();
                assert!(!rendered.is_empty());
                if *lang == "latex" {
                    assert!(rendered.starts_with("\\documentclass"));
                    assert!(rendered.ends_with("\\end{document}\n"));
                }
            }
        }
    }
}
