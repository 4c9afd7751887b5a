use std::io;
use std::net::SocketAddr;
use std::sync::Arc;

use medbook_core::store::{FileStore, StorageError};
use medbook_core::{Medbook, SystemClock};
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use crate::api;
use crate::config::{Config, ConfigError, DEFAULT_ADMIN_PASSWORD};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("port {port} is already in use")]
    PortInUse { port: u16 },
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: io::Error },
    #[error("cannot create store directory {path}: {source}")]
    StoreDir { path: String, source: io::Error },
    #[error("store is corrupt: {0}")]
    StoreCorrupt(String),
    #[error("cannot open store: {0}")]
    Store(StorageError),
    #[error("cannot create bootstrap admin: {0}")]
    Bootstrap(medbook_core::Error),
}

/// Opens the file-backed store named by `config.db`, creating the directory
/// when missing.
pub fn open_app(config: &Config) -> Result<Medbook, ServeError> {
    config.validate()?;
    if !config.db.exists() {
        std::fs::create_dir_all(&config.db).map_err(|source| ServeError::StoreDir {
            path: config.db.display().to_string(),
            source,
        })?;
        tracing::info!(path = %config.db.display(), "created store directory");
    }
    let store = FileStore::open(&config.db).map_err(|err| match err {
        StorageError::Corrupt(detail) => ServeError::StoreCorrupt(detail),
        other => ServeError::Store(other),
    })?;
    Ok(Medbook::new(Arc::new(store), Arc::new(SystemClock), config.settings()))
}

/// A running server.
pub struct ServerHandle {
    addr: SocketAddr,
    app: Arc<Medbook>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<io::Result<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn app(&self) -> &Arc<Medbook> {
        &self.app
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub async fn shutdown(mut self) -> io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.join().await
    }

    /// Waits until the server stops on its own.
    pub async fn join(self) -> io::Result<()> {
        match self.task.await {
            Ok(result) => result,
            Err(err) => Err(io::Error::other(err)),
        }
    }
}

/// Opens the store, bootstraps the admin account and starts serving.
pub async fn serve(config: &Config) -> Result<ServerHandle, ServeError> {
    let config = config.clone();
    let app = tokio::task::spawn_blocking(move || {
        let app = open_app(&config)?;
        if config.admin.password == DEFAULT_ADMIN_PASSWORD {
            tracing::warn!("using the built-in admin bootstrap password; set admin.password");
        }
        app.ensure_admin(&config.admin.username, &config.admin.password)
            .map_err(ServeError::Bootstrap)?;
        Ok::<_, ServeError>((app, config))
    })
    .await
    .expect("startup task panicked")?;
    let (app, config) = app;
    serve_app(&config, Arc::new(app)).await
}

/// Serves an already assembled service on `config.host:config.port`.
pub async fn serve_app(config: &Config, app: Arc<Medbook>) -> Result<ServerHandle, ServeError> {
    let addr = config.socket_addr();
    let listener = TcpListener::bind(addr).await.map_err(|source| {
        if source.kind() == io::ErrorKind::AddrInUse {
            ServeError::PortInUse { port: addr.port() }
        } else {
            ServeError::Bind { addr, source }
        }
    })?;
    let addr = listener.local_addr().map_err(|source| ServeError::Bind { addr, source })?;
    let router = api::router(app.clone(), &config.cors_origins);
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        axum::serve(listener, router)
            .with_graceful_shutdown(async move {
                let _ = rx.await;
            })
            .await
    });
    tracing::info!(%addr, "listening");
    Ok(ServerHandle {
        addr,
        app,
        shutdown: Some(tx),
        task,
    })
}
