"""
Module api - Service de diffusion FastAPI.

Endpoints principaux:
    - POST /api/v1/diffuse : Une variante d'image (contrat de RemoteDiffusionBackend)
    - GET  /health         : Health check
    - GET  /api/docs       : Documentation Swagger

Usage:
    # Démarrer le service
    >>> uvicorn api.main:app

    # Le consommer depuis une distillation
    >>> python main.py distill --backend remote --endpoint http://localhost:8000/api/v1/diffuse
"""

__version__ = "1.0.0"

from api.main import app, create_app

__all__ = ["app", "create_app"]
