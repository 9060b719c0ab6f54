from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertForSequenceClassification, BertTokenizer

from scorer_service.app import create_app
from scorer_service.config import ServiceConfig

VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + list("abcdefghijklmnopqrstuvwxyz0123456789")
    + [
        "the", "a", "of", "in", "is", "are", "not", "and", "new", "last",
        "polar", "bears", "sea", "ice", "loss", "ocean", "temperatures",
        "solar", "panels", "sunlight", "electricity", "vaccines", "autism",
        "children", "city", "council", "budget", "mayor", "harbor", "honey",
        "exercise", "heart", "disease", "antibiotics", "viral", "infections",
        "coral", "reefs", "water", "goldfish", "memory", "wall", "china",
        "moon", "observatory", "meteor", "shower", "electric", "vehicle",
        "sales", "region", "year",
    ]
)


def _make_tokenizer(target: Path) -> None:
    vocab_file = target / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    BertTokenizer(vocab_file=str(vocab_file), do_lower_case=True).save_pretrained(target)


def _make_model(target: Path, num_labels: int, seed: int) -> None:
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
        num_labels=num_labels,
    )
    BertForSequenceClassification(config).save_pretrained(target)


@pytest.fixture(scope="session")
def model_dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny_models")
    evidence_dir = root / "evidence"
    verdict_dir = root / "verdict"
    for target, labels, seed in ((evidence_dir, 2, 11), (verdict_dir, 3, 17)):
        target.mkdir()
        _make_tokenizer(target)
        _make_model(target, labels, seed)
    return str(evidence_dir), str(verdict_dir)


@pytest.fixture(scope="session")
def service_config(model_dirs) -> ServiceConfig:
    evidence_dir, verdict_dir = model_dirs
    return ServiceConfig(
        evidence_model=evidence_dir,
        verdict_model=verdict_dir,
        max_batch=64,
        max_sequence_length=96,
    )


@pytest.fixture(scope="session")
def app(service_config):
    return create_app(service_config)


@pytest.fixture(scope="session")
def client(app):
    from fastapi.testclient import TestClient

    with TestClient(app) as test_client:
        yield test_client
