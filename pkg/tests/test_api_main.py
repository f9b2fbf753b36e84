import httpx
import pytest
import torch
from httpx import ASGITransport

from api.main import create_app
from augmentation.backends import RemoteDiffusionBackend, decode_png, encode_png
from config import settings
from tests.conftest import SHAPE
from utils.exceptions import BackendProtocolError, BackendUnavailableError

DIFFUSE = f"{settings.API_PREFIX}/diffuse"


def _payload(seed: int = 1, **overrides) -> dict:
    payload = {
        "image": encode_png(torch.rand(*SHAPE, generator=torch.Generator().manual_seed(0))),
        "steps": 5,
        "guidance_scale": 0.5,
        "seed": seed,
        "intensity": 0.4,
    }
    payload.update(overrides)
    return payload


@pytest.mark.asyncio
async def test_root(client):
    response = await client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "running"


@pytest.mark.asyncio
async def test_health(client):
    response = await client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


@pytest.mark.asyncio
async def test_diffuse_returns_variant_of_same_shape(client):
    response = await client.post(DIFFUSE, json=_payload())
    assert response.status_code == 200
    body = response.json()
    assert body["backend_version"].startswith("surrogate")
    assert decode_png(body["image"]).shape == SHAPE


@pytest.mark.asyncio
async def test_diffuse_is_deterministic_per_seed(client):
    first = (await client.post(DIFFUSE, json=_payload(seed=3))).json()["image"]
    second = (await client.post(DIFFUSE, json=_payload(seed=3))).json()["image"]
    other = (await client.post(DIFFUSE, json=_payload(seed=4))).json()["image"]
    assert first == second
    assert first != other


@pytest.mark.asyncio
async def test_diffuse_ignores_latent_of_wrong_length(client):
    response = await client.post(DIFFUSE, json=_payload(latent=[0.1, 0.2]))
    assert response.status_code == 200


@pytest.mark.asyncio
async def test_diffuse_rejects_unreadable_image(client):
    response = await client.post(DIFFUSE, json=_payload(image="!!!"))
    assert response.status_code == 422
    assert response.json()["stage"] == "augmentation"


@pytest.mark.asyncio
async def test_diffuse_validates_request(client):
    response = await client.post(DIFFUSE, json=_payload(steps=0))
    assert response.status_code == 422


# ---------------------------------------------------------------- client distant

@pytest.mark.asyncio
async def test_remote_backend_against_service(encoder):
    backend = RemoteDiffusionBackend(
        f"http://test{DIFFUSE}", steps=5, transport=ASGITransport(app=create_app()), backoff=0.0
    )
    sources = torch.rand(2, *SHAPE, generator=torch.Generator().manual_seed(1))
    latents = encoder.encode(sources)
    variants = await backend.agenerate_many([
        (latents[0], sources[0], [1, 2, 3], 0.3),
        (latents[1], sources[1], [4], 0.3),
    ])

    assert [v.shape for v in variants] == [(3, *SHAPE), (1, *SHAPE)]
    assert backend.version.startswith("surrogate")
    again = await backend.agenerate_many([(latents[0], sources[0], [1, 2, 3], 0.3)])
    assert torch.equal(again[0], variants[0])


@pytest.mark.asyncio
async def test_remote_backend_retries_then_gives_up(encoder):
    calls = []

    def unavailable(request):
        calls.append(request)
        return httpx.Response(503)

    backend = RemoteDiffusionBackend(
        "http://test/diffuse", transport=httpx.MockTransport(unavailable),
        max_attempts=3, backoff=0.0,
    )
    source = torch.rand(*SHAPE)
    with pytest.raises(BackendUnavailableError):
        await backend.agenerate_many([(encoder.encode(source)[0], source, [1], 0.3)])
    assert len(calls) == 3


@pytest.mark.asyncio
async def test_remote_backend_recovers_after_transient_failure(encoder):
    source = torch.rand(*SHAPE)
    answers = iter([httpx.Response(503), httpx.Response(200, json={"image": encode_png(source),
                                                                    "backend_version": "test"})])

    backend = RemoteDiffusionBackend(
        "http://test/diffuse", transport=httpx.MockTransport(lambda request: next(answers)),
        max_attempts=2, backoff=0.0,
    )
    variants = await backend.agenerate_many([(encoder.encode(source)[0], source, [1], 0.3)])
    assert variants[0].shape == (1, *SHAPE)
    assert backend.version == "test"


def _echo_backend(source):
    def reply(request):
        return httpx.Response(200, json={"image": encode_png(source), "backend_version": "test"})

    return RemoteDiffusionBackend("http://test/diffuse", transport=httpx.MockTransport(reply), backoff=0.0)


def test_remote_backend_synchronous_call(encoder):
    source = torch.rand(*SHAPE)
    variants = _echo_backend(source).generate_many([(encoder.encode(source)[0], source, [1, 2], 0.3)])
    assert variants[0].shape == (2, *SHAPE)


@pytest.mark.asyncio
async def test_remote_backend_synchronous_call_inside_event_loop(encoder):
    source = torch.rand(*SHAPE)
    variants = _echo_backend(source).generate_many([(encoder.encode(source)[0], source, [1], 0.3)])
    assert variants[0].shape == (1, *SHAPE)


@pytest.mark.asyncio
async def test_remote_backend_rejects_malformed_reply(encoder):
    backend = RemoteDiffusionBackend(
        "http://test/diffuse",
        transport=httpx.MockTransport(lambda request: httpx.Response(200, json={"unexpected": 1})),
        backoff=0.0,
    )
    source = torch.rand(*SHAPE)
    with pytest.raises(BackendProtocolError):
        await backend.agenerate_many([(encoder.encode(source)[0], source, [1], 0.3)])


@pytest.mark.asyncio
async def test_remote_backend_rejects_wrong_variant_shape(encoder):
    backend = RemoteDiffusionBackend(
        "http://test/diffuse",
        transport=httpx.MockTransport(
            lambda request: httpx.Response(200, json={"image": encode_png(torch.rand(1, 4, 4))})
        ),
        backoff=0.0,
    )
    source = torch.rand(*SHAPE)
    with pytest.raises(BackendProtocolError):
        await backend.agenerate_many([(encoder.encode(source)[0], source, [1], 0.3)])
