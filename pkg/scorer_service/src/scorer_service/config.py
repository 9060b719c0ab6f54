"""Service configuration.

Model identifiers are configuration, not code: any local path or hub id
of a sentence-pair sequence-classification checkpoint works. Output
fidelity therefore depends entirely on the checkpoints supplied.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_MAX_BATCH = 64
DEFAULT_MAX_SEQUENCE_LENGTH = 256

# verdict model output order: index -> label string
VERDICT_LABELS = ("SUPPORTED", "REFUTED", "NOT_ENOUGH_INFO")


@dataclass
class ServiceConfig:
    evidence_model: str
    verdict_model: str
    max_batch: int = DEFAULT_MAX_BATCH
    device: str = "cpu"
    port: int = 8010
    max_sequence_length: int = DEFAULT_MAX_SEQUENCE_LENGTH

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.max_sequence_length < 8:
            raise ValueError("max_sequence_length must be >= 8")

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        try:
            evidence = os.environ["SCORER_EVIDENCE_MODEL"]
            verdict = os.environ["SCORER_VERDICT_MODEL"]
        except KeyError as exc:
            raise SystemExit(
                f"missing required environment variable {exc.args[0]}"
            ) from None
        return cls(
            evidence_model=evidence,
            verdict_model=verdict,
            max_batch=int(os.environ.get("SCORER_MAX_BATCH", DEFAULT_MAX_BATCH)),
            device=os.environ.get("SCORER_DEVICE", "cpu"),
            port=int(os.environ.get("SCORER_PORT", 8010)),
            max_sequence_length=int(
                os.environ.get("SCORER_MAX_SEQ_LEN", DEFAULT_MAX_SEQUENCE_LENGTH)
            ),
        )
