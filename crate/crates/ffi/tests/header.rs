use std::path::PathBuf;
use std::process::Command;

fn include_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include")
}

#[test]
fn header_declares_api() {
    let text = std::fs::read_to_string(include_dir().join("cuebp.h")).unwrap();
    for sym in [
        "CUEBP_H",
        "typedef struct CuebpGraph CuebpGraph",
        "CUEBP_STATUS_OK = 0",
        "CUEBP_MODE_IMPERFECT",
        "cuebp_last_error",
        "cuebp_graph_from_edges",
        "cuebp_graph_load",
        "cuebp_graph_free",
        "cuebp_sample",
        "cuebp_bp_run",
        "cuebp_ppr_run",
        "cuebp_select_top_k",
        "cuebp_error_fraction",
        "cuebp_de_mu",
    ] {
        assert!(text.contains(sym), "header lacks {sym}");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include <cuebp.h>\n\
         int probe(void) {\n\
           CuebpGraph *g = 0;\n\
           uint32_t u[1] = {0}, v[1] = {1};\n\
           CuebpStatus st = cuebp_graph_from_edges(2, u, v, 1, &g);\n\
           size_t m = cuebp_graph_edge_count(g);\n\
           cuebp_graph_free(g);\n\
           return st == CUEBP_STATUS_OK && m == 1 && cuebp_last_error() != 0;\n\
         }\n",
    )
    .unwrap();
    for (compiler, extra) in [("cc", vec!["-std=c99"]), ("c++", vec!["-x", "c++"])] {
        let Ok(out) = Command::new(compiler)
            .args(&extra)
            .args(["-Wall", "-Werror", "-fsyntax-only", "-I"])
            .arg(include_dir())
            .arg(&src)
            .output()
        else {
            eprintln!("{compiler} not available, skipping");
            continue;
        };
        assert!(
            out.status.success(),
            "{compiler} rejected the header:\n{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
