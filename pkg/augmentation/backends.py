"""
Backends de diffusion : production de K variantes d'une image synthétique.

- ``SurrogateDiffusionBackend`` : substitut local, stochastique et graine par
  graine reproductible (perturbation gaussienne du latent, débruitage guidé,
  décodage, déformation élastique et variation de luminosité).
- ``RemoteDiffusionBackend`` : client httpx d'un service de diffusion
  compatible (``POST /diffuse``), avec requêtes concurrentes bornées,
  tentatives multiples et backoff exponentiel.
"""
from __future__ import annotations

import asyncio
import base64
import io
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import httpx
import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from torchvision.transforms.functional import gaussian_blur

from augmentation.encoder import ImageEncoder
from config import settings
from utils.exceptions import BackendProtocolError, BackendUnavailableError
from utils.logger import get_logger


logger = get_logger(__name__)

Request = tuple[torch.Tensor, torch.Tensor, Sequence[int], float]

SURROGATE_VERSION = "surrogate-1"


# ------------------------------------------------------------ codec PNG

def encode_png(image: torch.Tensor) -> str:
    """Image C×H×W dans [0, 1] -> PNG 8 bits encodé en base 64."""
    array = (image.detach().cpu().clamp(0, 1) * 255).round().to(torch.uint8).numpy()
    if array.shape[0] == 1:
        pil = Image.fromarray(array[0])
    else:
        pil = Image.fromarray(np.ascontiguousarray(np.transpose(array, (1, 2, 0))))
    buffer = io.BytesIO()
    pil.save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def decode_png(payload: str, channels: Optional[int] = None) -> torch.Tensor:
    """
    PNG base 64 -> image C×H×W dans [0, 1].

    Sans ``channels``, le nombre de canaux suit le mode du PNG (L -> 1, sinon 3).

    Raises:
        BackendProtocolError: Charge utile illisible
    """
    try:
        pil = Image.open(io.BytesIO(base64.b64decode(payload, validate=True)))
        if channels is None:
            channels = 1 if pil.mode in ("1", "L", "LA", "I", "I;16") else 3
        pil = pil.convert("L" if channels == 1 else "RGB")
    except (ValueError, OSError) as e:
        raise BackendProtocolError(f"image PNG illisible: {e}") from e
    array = np.asarray(pil, dtype=np.float32) / 255.0
    if channels == 1:
        return torch.from_numpy(array.copy()).unsqueeze(0)
    return torch.from_numpy(np.transpose(array, (2, 0, 1)).copy())


# ------------------------------------------------------------ substitut local

class SurrogateDiffusionBackend:
    """
    Substitut de diffusion image-à-image.

    Pour chaque graine : z₀ = f + intensité·ε₀, puis ``steps`` pas
    z ← z + (g/steps)(f − z) + (intensité/steps)·ε_t, décodage, déformation
    élastique d'amplitude ``elastic_alpha·intensité`` pixels et luminosité
    multipliée par 1 ± ``jitter·intensité``. Intensité 0 avec un encodeur
    identité rend la source inchangée.

    Example:
        >>> backend = SurrogateDiffusionBackend(encoder, steps=50, guidance_scale=0.5)
        >>> variants = backend.generate(latent, source, seeds=[1, 2, 3], intensity=0.3)
    """

    kind = "surrogate"

    def __init__(
        self,
        encoder: ImageEncoder,
        steps: int = 50,
        guidance_scale: float = 0.5,
        elastic_alpha: float = 1.5,
        elastic_sigma: float = 2.0,
        jitter: float = 0.1,
    ):
        if steps < 1:
            raise ValueError(f"steps doit être >= 1 (reçu {steps})")
        self.encoder = encoder
        self.steps = steps
        self.guidance_scale = guidance_scale
        self.elastic_alpha = elastic_alpha
        self.elastic_sigma = elastic_sigma
        self.jitter = jitter
        self.version = f"{SURROGATE_VERSION}/{encoder.kind}"
        logger.debug(
            f"SurrogateDiffusionBackend initialisé (steps={steps}, guidance={guidance_scale}, "
            f"encodeur={encoder.kind})"
        )

    def _denoise(self, latent: torch.Tensor, intensity: float, g: torch.Generator) -> torch.Tensor:
        z = latent + intensity * torch.randn(latent.shape, generator=g)
        pull = self.guidance_scale / self.steps
        noise = intensity / self.steps
        for _ in range(self.steps):
            z = z + pull * (latent - z) + noise * torch.randn(latent.shape, generator=g)
        return z

    def _elastic(self, image: torch.Tensor, alpha: float, g: torch.Generator) -> torch.Tensor:
        _, height, width = image.shape
        displacement = torch.rand((2, height, width), generator=g) * 2 - 1
        largest = 2 * ((min(height, width) - 1) // 2) + 1
        kernel = min(2 * math.ceil(2 * self.elastic_sigma) + 1, largest)
        displacement = gaussian_blur(displacement, [kernel, kernel], [self.elastic_sigma] * 2)
        displacement = displacement / displacement.abs().amax().clamp_min(1e-8) * alpha

        ys, xs = torch.meshgrid(
            torch.linspace(-1, 1, height), torch.linspace(-1, 1, width), indexing="ij"
        )
        grid = torch.stack(
            [
                xs + displacement[0] * 2 / max(width - 1, 1),
                ys + displacement[1] * 2 / max(height - 1, 1),
            ],
            dim=-1,
        )
        warped = F.grid_sample(
            image.unsqueeze(0), grid.unsqueeze(0),
            mode="bilinear", padding_mode="border", align_corners=True,
        )
        return warped[0]

    @torch.no_grad()
    def generate(
        self,
        latent: torch.Tensor,
        source: torch.Tensor,
        seeds: Sequence[int],
        intensity: float,
    ) -> torch.Tensor:
        """
        K = ``len(seeds)`` variantes de ``source`` (K×C×H×W dans [0, 1]).

        Bit-reproductible pour un couple (latent, graine).
        """
        latent = latent.detach().cpu().float()
        variants = []
        for seed in seeds:
            g = torch.Generator().manual_seed(int(seed))
            decoded = self.encoder.decode(self._denoise(latent, intensity, g))[0].cpu()
            if self.elastic_alpha > 0 and intensity > 0:
                decoded = self._elastic(decoded, self.elastic_alpha * intensity, g)
            if self.jitter > 0 and intensity > 0:
                factor = 1 + (2 * torch.rand((), generator=g) - 1) * self.jitter * intensity
                decoded = decoded * factor
            variants.append(decoded.clamp(0, 1))
        return torch.stack(variants).to(source.device)

    def generate_many(self, requests: Sequence[Request]) -> list[torch.Tensor]:
        return [self.generate(*request) for request in requests]


# ------------------------------------------------------------ client distant

class RemoteDiffusionBackend:
    """
    Client du contrat de diffusion distant.

    Requête : ``{image (PNG base 64), latent, steps, guidance_scale, seed,
    intensity}`` ; réponse : ``{image, backend_version}``. Une requête par
    (source, graine) ; l'ordre des sorties suit celui des requêtes.

    Example:
        >>> backend = RemoteDiffusionBackend("http://localhost:8000/api/v1/diffuse")
        >>> variants = backend.generate_many([(latent, source, [1, 2, 3], 0.3)])
    """

    kind = "remote"

    def __init__(
        self,
        endpoint: str,
        steps: int = 50,
        guidance_scale: float = 0.5,
        timeout: Optional[float] = None,
        max_attempts: Optional[int] = None,
        backoff: Optional[float] = None,
        max_in_flight: Optional[int] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        """
        Args:
            endpoint: URL complète de la route de diffusion
            steps, guidance_scale: Transmis tels quels au service
            timeout, max_attempts, backoff, max_in_flight: Valeurs des settings si None
            transport: Transport httpx (``ASGITransport`` en test)
        """
        self.endpoint = endpoint
        self.steps = steps
        self.guidance_scale = guidance_scale
        self.timeout = timeout if timeout is not None else settings.REMOTE_TIMEOUT_SECONDS
        self.max_attempts = max_attempts or settings.REMOTE_MAX_ATTEMPTS
        self.backoff = backoff if backoff is not None else settings.REMOTE_BACKOFF_SECONDS
        self.max_in_flight = max_in_flight or settings.REMOTE_MAX_IN_FLIGHT
        self.transport = transport
        self.version: Optional[str] = None
        logger.debug(f"RemoteDiffusionBackend initialisé ({endpoint})")

    def _payload(self, latent: torch.Tensor, source: torch.Tensor, seed: int,
                 intensity: float) -> dict:
        return {
            "image": encode_png(source),
            "latent": latent.detach().cpu().flatten().tolist(),
            "steps": self.steps,
            "guidance_scale": self.guidance_scale,
            "seed": int(seed),
            "intensity": float(intensity),
        }

    async def _post(self, client: httpx.AsyncClient, semaphore: asyncio.Semaphore,
                    payload: dict, channels: int) -> torch.Tensor:
        last_error = ""
        for attempt in range(self.max_attempts):
            if attempt:
                await asyncio.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                async with semaphore:
                    response = await client.post(self.endpoint, json=payload)
                if response.status_code >= 500 or response.status_code == 429:
                    last_error = f"HTTP {response.status_code}"
                    logger.warning(f"Backend distant: {last_error} (tentative {attempt + 1})")
                    continue
                if response.status_code != 200:
                    raise BackendProtocolError(
                        f"statut HTTP {response.status_code}", {"body": response.text[:200]}
                    )
                body = response.json()
            except httpx.HTTPError as e:
                last_error = f"{type(e).__name__}: {e}"
                logger.warning(f"Backend distant injoignable (tentative {attempt + 1}): {last_error}")
                continue
            except ValueError as e:
                raise BackendProtocolError(f"réponse JSON invalide: {e}") from e
            if "image" not in body:
                raise BackendProtocolError("champ 'image' absent de la réponse")
            self.version = body.get("backend_version", self.version)
            return decode_png(body["image"], channels)
        raise BackendUnavailableError(self.endpoint, self.max_attempts, last_error)

    async def agenerate_many(self, requests: Sequence[Request]) -> list[torch.Tensor]:
        """Version asynchrone de :meth:`generate_many`."""
        semaphore = asyncio.Semaphore(self.max_in_flight)
        async with httpx.AsyncClient(timeout=self.timeout, transport=self.transport) as client:
            tasks = []
            shapes = []
            for latent, source, seeds, intensity in requests:
                shapes.append(len(seeds))
                for seed in seeds:
                    payload = self._payload(latent, source, seed, intensity)
                    tasks.append(self._post(client, semaphore, payload, source.shape[0]))
            images = await asyncio.gather(*tasks)

        results, offset = [], 0
        for (_, source, _, _), count in zip(requests, shapes):
            chunk = images[offset:offset + count]
            offset += count
            for image in chunk:
                if image.shape != source.shape:
                    raise BackendProtocolError(
                        "forme de variante inattendue",
                        {"expected": tuple(source.shape), "actual": tuple(image.shape)},
                    )
            results.append(torch.stack(chunk).to(source.device))
        return results

    def generate_many(self, requests: Sequence[Request]) -> list[torch.Tensor]:
        """
        Variantes de plusieurs sources, requêtes concurrentes bornées.

        Raises:
            BackendUnavailableError: Service injoignable après toutes les tentatives
            BackendProtocolError: Réponse mal formée
        """
        try:
            asyncio.get_running_loop()
        except RuntimeError:
            return asyncio.run(self.agenerate_many(requests))
        # une boucle tourne déjà dans ce thread : la nôtre vit dans un thread dédié
        with ThreadPoolExecutor(max_workers=1) as executor:
            return executor.submit(asyncio.run, self.agenerate_many(requests)).result()

    def generate(self, latent: torch.Tensor, source: torch.Tensor,
                 seeds: Sequence[int], intensity: float) -> torch.Tensor:
        return self.generate_many([(latent, source, seeds, intensity)])[0]


def diffuse_augment(
    backend,
    latent: torch.Tensor,
    K: int,
    seeds: Sequence[int],
    source: Optional[torch.Tensor] = None,
    intensity: float = 0.3,
) -> torch.Tensor:
    """
    K variantes d'une source à partir de son latent (une par graine).

    Sans ``source``, l'image de référence est le décodage du latent
    (substitut uniquement).

    Raises:
        ValueError: K < 1 ou nombre de graines différent de K
    """
    if K < 1 or len(seeds) != K:
        raise ValueError(f"K={K} et {len(seeds)} graine(s): K >= 1 et |seeds| = K requis")
    if source is None:
        source = backend.encoder.decode(latent)[0]
    return backend.generate(latent, source, list(seeds), intensity)
