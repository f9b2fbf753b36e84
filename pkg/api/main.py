"""
Service de diffusion compatible avec ``RemoteDiffusionBackend``.

Routes:
    - POST {API_PREFIX}/diffuse : une variante d'une image (PNG base 64)
    - GET  /                    : informations du service
    - GET  /health              : health check

Le service sert le substitut de diffusion ; l'autoencodeur est lu dans
``API_BACKEND_DIR`` (sinon ``CHECKPOINT_DIR/backend`` s'il existe), à
défaut l'encodeur identité est utilisé.
"""
from datetime import datetime
from pathlib import Path
from typing import Optional

import torch
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from slowapi import Limiter, _rate_limit_exceeded_handler
from slowapi.errors import RateLimitExceeded
from slowapi.util import get_remote_address

from augmentation.backends import SurrogateDiffusionBackend, decode_png, encode_png
from augmentation.encoder import ImageEncoder
from config import settings
from models.checkpoint import load_checkpoint
from models.networks import ConvAutoencoder
from utils.exceptions import PipelineException
from utils.logger import get_logger


logger = get_logger(__name__)

# Rate limiter
limiter = Limiter(key_func=get_remote_address)


class DiffuseRequest(BaseModel):
    """Corps de ``POST /diffuse``."""
    image: str = Field(..., description="Image source, PNG encodé en base 64")
    latent: Optional[list[float]] = Field(None, description="Latent f_syn (optionnel)")
    steps: int = Field(50, ge=1, le=1000)
    guidance_scale: float = Field(0.5, ge=0)
    seed: int = Field(..., ge=0)
    intensity: float = Field(settings.API_BACKEND_INTENSITY, ge=0)


class DiffuseResponse(BaseModel):
    """Réponse de ``POST /diffuse``."""
    image: str
    backend_version: str


class EncoderRegistry:
    """Encodeurs servis, un par forme d'image (autoencodeur unique ou identité)."""

    def __init__(self, autoencoder: Optional[ConvAutoencoder] = None):
        self.autoencoder = autoencoder
        self._encoders: dict[tuple[int, int, int], ImageEncoder] = {}

    def get(self, image_shape: tuple[int, int, int]) -> ImageEncoder:
        if image_shape not in self._encoders:
            self._encoders[image_shape] = ImageEncoder(image_shape, self.autoencoder)
        return self._encoders[image_shape]


def _default_backend_dir() -> Optional[Path]:
    if settings.API_BACKEND_DIR is not None:
        return settings.API_BACKEND_DIR
    candidate = settings.CHECKPOINT_DIR / "backend"
    return candidate if candidate.exists() else None


def create_app(backend_dir: Optional[Path] = None) -> FastAPI:
    """
    Construit l'application.

    Args:
        backend_dir: Checkpoint de l'autoencodeur servi (identité si None et
            aucun répertoire par défaut)
    """
    backend_dir = backend_dir or _default_backend_dir()
    autoencoder = None
    if backend_dir is not None:
        autoencoder, _ = load_checkpoint(backend_dir, expected_kind="autoencoder")
    registry = EncoderRegistry(autoencoder)

    app = FastAPI(
        title=f"{settings.APP_NAME} - service de diffusion",
        version=settings.APP_VERSION,
        description="Variantes d'images synthétiques par le substitut de diffusion",
        docs_url="/api/docs",
        redoc_url="/api/redoc"
    )
    app.state.limiter = limiter
    app.state.encoders = registry
    app.add_exception_handler(RateLimitExceeded, _rate_limit_exceeded_handler)

    @app.get("/")
    async def root():
        """Route racine - informations du service."""
        return {
            "name": settings.APP_NAME,
            "version": settings.APP_VERSION,
            "status": "running",
            "environment": settings.ENVIRONMENT,
            "encoder": "autoencoder" if autoencoder is not None else "identity",
            "docs": "/api/docs"
        }

    @app.get("/health")
    async def health_check():
        """Health check endpoint."""
        return {
            "status": "healthy",
            "timestamp": datetime.now().isoformat(),
        }

    @app.post(f"{settings.API_PREFIX}/diffuse", response_model=DiffuseResponse)
    @limiter.limit(settings.RATE_LIMIT)
    async def diffuse(request: Request, body: DiffuseRequest):
        """Une variante de l'image source pour la graine demandée."""
        source = decode_png(body.image)
        encoder = registry.get(tuple(source.shape))
        latent = None
        if body.latent is not None and len(body.latent) == encoder.latent_dim:
            latent = torch.tensor(body.latent, dtype=torch.float32)
        if latent is None:
            latent = encoder.encode(source.unsqueeze(0))[0]
        backend = SurrogateDiffusionBackend(
            encoder, steps=body.steps, guidance_scale=body.guidance_scale
        )
        variant = backend.generate(latent, source, [body.seed], body.intensity)[0]
        return DiffuseResponse(image=encode_png(variant), backend_version=backend.version)

    @app.exception_handler(PipelineException)
    async def pipeline_exception_handler(request, exc: PipelineException):
        """Requête incompatible (image illisible, forme inattendue, ...)."""
        logger.warning(f"Requête refusée [{exc.stage}]: {exc}")
        return JSONResponse(
            status_code=422,
            content={"detail": exc.message, "stage": exc.stage, "details": exc.details}
        )

    @app.exception_handler(Exception)
    async def global_exception_handler(request, exc):
        """Gestionnaire global des exceptions."""
        logger.error(f"Exception globale: {str(exc)}", exc_info=True)
        return JSONResponse(
            status_code=500,
            content={"detail": "Erreur interne du serveur", "error": str(exc)}
        )

    logger.info(
        f"Service de diffusion prêt ({'autoencodeur ' + str(backend_dir) if autoencoder is not None else 'identité'})"
    )
    return app


app = create_app()


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(
        "api.main:app",
        host=settings.API_HOST,
        port=settings.API_PORT,
        reload=settings.DEBUG,
    )
