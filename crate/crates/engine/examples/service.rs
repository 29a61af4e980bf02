//! Sets up a data directory with two synthetic models, composes an
//! explanation and computes its payloads through the engine. Pass `--serve`
//! to keep the HTTP API running on 127.0.0.1:8077 afterwards.
//!
//! ```text
//! cargo run -p conceptlens-engine --example service -- --serve
//! curl localhost:8077/api/models
//! ```

use std::sync::Arc;

use conceptlens::{generate_dump, EmbeddingKind, ExplanationConfig, SynthParams};
use conceptlens_engine::{api, ComposeRequest, Engine, PixelRequest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = tempfile::tempdir()?;
    let engine = Arc::new(Engine::open(root.path().join("data"))?);

    for (model_id, separation) in [("base", 30.0), ("tuned", 75.0)] {
        let params = SynthParams { model_id: model_id.into(), separation, seed: 7, ..SynthParams::default() };
        let dump = generate_dump(&params)?;
        let dir = root.path().join(model_id);
        dump.write_to(&dir)?;
        let summary = engine.ingest(&dir)?;
        println!("ingested {}", serde_json::to_string(&summary)?);
        if engine.concept(dump.concept.name()).is_none() {
            engine.add_concept(&dump.concept.to_json())?;
        }
    }

    let config = ExplanationConfig::similarity("synthetic", "synthetic", EmbeddingKind::Contextualized, 2);
    let (handle, created) = engine.compose(ComposeRequest { config, model: None })?;
    println!("explanation {} (new: {created})", handle.id);

    let single = engine.single(&handle.id, "base", None, false)?.into_ready();
    let compare = engine.compare(&handle.id, ("base", 2), ("tuned", 2), false)?.into_ready();
    let glyphs = engine.glyphs(&handle.id, "tuned")?;
    println!("single payload {} bytes, comparison {} bytes", single.len(), compare.len());
    println!("glyphs {}", String::from_utf8_lossy(&glyphs));

    let pixel = PixelRequest {
        model: "base".into(),
        layer: 1,
        kind: EmbeddingKind::Contextualized,
        words: vec!["alpha_000".into(), "alpha_001".into(), "beta_000".into()],
        cluster: false,
        min_cluster_size: None,
    };
    println!("pixel payload {} bytes", engine.pixel(pixel, false)?.into_ready().len());
    println!("cached payloads: {}", engine.cache().len());

    if std::env::args().any(|a| a == "--serve") {
        let runtime = tokio::runtime::Runtime::new()?;
        runtime.block_on(async {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:8077").await?;
            println!("listening on http://127.0.0.1:8077 (ctrl-c to stop)");
            axum::serve(listener, api::router(engine))
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
        })?;
    }
    Ok(())
}
