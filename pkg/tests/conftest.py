import numpy as np
import pytest

from gsmile import MockModel, ModelSpec, RunConfig

# One distinct scaled basis vector per word: every pair of distinct words sits
# at distance 2*sqrt(2), so transport distances reduce to total-variation mass
# moved and the mock's output shift is exactly linear in the keyword bits.
VOCAB = [
    "could", "you", "please", "make", "this", "rainy",
    "a", "scene",
    "construct", "build", "forge",
    "rain", "storm", "wet",
    "***",
    "flood", "deluge", "monsoon", "squall", "tempest", "drizzle",
]
SCALE = 2.0

# With the equidistant table: dropping one keyword moves 3 of 8 output-token
# mass across distance 2*sqrt(2), so each keyword's coefficient is
# -2*sqrt(2)*3/8 = -3*sqrt(2)/4.
KEYWORD_COEF = -3.0 * np.sqrt(2.0) / 4.0


def write_embedding_table(path, vocab=VOCAB, scale=SCALE, header=True):
    lines = []
    if header:
        lines.append(f"{len(vocab)} {len(vocab)}")
    for i, word in enumerate(vocab):
        coords = ["0"] * len(vocab)
        coords[i] = repr(scale)
        lines.append(word + " " + " ".join(coords))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def embedding_file(tmp_path_factory):
    return write_embedding_table(tmp_path_factory.mktemp("emb") / "words.vec")


@pytest.fixture(scope="session")
def mock_spec():
    return ModelSpec(
        kind="mock",
        mode="text",
        mock=MockModel(
            base_response="a scene",
            keyword_responses={
                "make": "CONSTRUCT BUILD FORGE",
                "rainy": "RAIN STORM WET",
            },
        ),
    )


@pytest.fixture(scope="session")
def base_config(embedding_file, mock_spec):
    return RunConfig(
        prompt="could you please make this rainy",
        model=mock_spec,
        embeddings=str(embedding_file),
        strategy="exhaustive",
        bootstrap_max_itr=50,
        ridge_lambda=0.0,
    )
