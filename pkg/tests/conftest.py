import pytest
import torch
from httpx import AsyncClient, ASGITransport

from api.main import create_app
from augmentation.backends import SurrogateDiffusionBackend
from augmentation.encoder import ImageEncoder
from models.contracts import ImageBatch, freeze
from models.networks import ConvClassifier, DiscriminatorHead, Generator, discriminator_input_dim
from synthesis.hyperparams import HyperParams

LABELS = 4
SHAPE = (1, 8, 8)


@pytest.fixture
async def client():
    transport = ASGITransport(app=create_app())
    async with AsyncClient(transport=transport, base_url="http://test") as ac:
        yield ac


def tiny_classifier(seed: int = 0, width: int = 4) -> ConvClassifier:
    torch.manual_seed(seed)
    return ConvClassifier(in_channels=1, image_size=8, label_count=LABELS, width=width, blocks=2)


@pytest.fixture
def teacher():
    model = tiny_classifier(seed=0)
    # statistiques courantes non triviales
    model.train()
    with torch.no_grad():
        for _ in range(3):
            model(torch.rand(16, *SHAPE))
    return freeze(model)


@pytest.fixture
def student():
    return tiny_classifier(seed=1)


@pytest.fixture
def batch():
    g = torch.Generator().manual_seed(0)
    return ImageBatch(torch.rand(8, *SHAPE, generator=g), torch.arange(8) % LABELS)


@pytest.fixture
def generator_net():
    torch.manual_seed(2)
    return Generator(latent_dim=8, image_shape=SHAPE, base_channels=4)


@pytest.fixture
def disc(teacher):
    torch.manual_seed(3)
    return DiscriminatorHead(discriminator_input_dim(teacher), hidden_dim=16, projection_dim=8)


@pytest.fixture
def encoder():
    return ImageEncoder(SHAPE)


@pytest.fixture
def surrogate(encoder):
    return SurrogateDiffusionBackend(encoder, steps=5, guidance_scale=0.5)


@pytest.fixture
def hp():
    return HyperParams()
