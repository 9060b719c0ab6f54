"""Run the service:

    scorer-service --evidence-model <id-or-path> --verdict-model <id-or-path> [--port 8010]

Model identifiers may also come from SCORER_EVIDENCE_MODEL /
SCORER_VERDICT_MODEL environment variables.
"""

import argparse
import os


def main() -> int:
    parser = argparse.ArgumentParser(prog="scorer-service", description=__doc__)
    parser.add_argument("--evidence-model", default=os.environ.get("SCORER_EVIDENCE_MODEL"))
    parser.add_argument("--verdict-model", default=os.environ.get("SCORER_VERDICT_MODEL"))
    parser.add_argument("--port", type=int, default=int(os.environ.get("SCORER_PORT", 8010)))
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--device", default=os.environ.get("SCORER_DEVICE", "cpu"))
    parser.add_argument("--max-batch", type=int, default=64)
    parser.add_argument("--max-seq-len", type=int, default=256)
    args = parser.parse_args()

    if not args.evidence_model or not args.verdict_model:
        parser.error("both --evidence-model and --verdict-model are required")

    import uvicorn

    from .app import create_app
    from .config import ServiceConfig

    config = ServiceConfig(
        evidence_model=args.evidence_model,
        verdict_model=args.verdict_model,
        max_batch=args.max_batch,
        device=args.device,
        port=args.port,
        max_sequence_length=args.max_seq_len,
    )
    app = create_app(config)  # models load here; failure refuses to start
    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
