//! Writes the graph export consumed by the web UI and, with `--serve`, hosts
//! it alongside a placeholder bundle on 127.0.0.1:8080.

use logscope::graph::{CausalGraph, GraphConfig};
use logscope::serve::serve;
use logscope::sim2pc::{simulate, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = CausalGraph::build(&simulate(&SimConfig::fig4())?)?;
    let json = g.export_json();
    println!("{json}");

    let dir = std::env::temp_dir().join("logscope-example");
    let bundle = dir.join("ui");
    std::fs::create_dir_all(&bundle)?;
    std::fs::write(bundle.join("index.html"), "<html><body>logscope</body></html>")?;
    let data = dir.join("graph.json");
    std::fs::write(&data, &json)?;
    println!("wrote {}", data.display());

    if std::env::args().any(|a| a == "--serve") {
        println!("serving on http://127.0.0.1:8080 (GET /api/graph, /api/search?keyword=...)");
        let rt = tokio::runtime::Runtime::new()?;
        rt.block_on(serve(&bundle, &data, 8080, &GraphConfig::default()))?;
    }
    Ok(())
}
